//! Dense complex linear algebra primitives: adjoints, PSD square roots,
//! rank-revealing range frames, and isometry/contraction classification.
//!
//! Everything downstream works with [`CMat`], a dense column-major complex
//! matrix, and [`Frame`], an orthonormal basis of a subspace of a labeled
//! ambient space (the numerical stand-in for a closure of a range).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the universal carrier of all operators.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVec = DVector<Complex64>;

pub fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Identity of size `n`.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Builds a matrix from a row-major slice of (re, im) pairs.
pub fn from_row_major(rows: usize, cols: usize, data: &[(f64, f64)]) -> Result<CMat> {
    if data.len() != rows * cols {
        return Err(Error::shape(format!(
            "expected {} entries for a {}x{} matrix, got {}",
            rows * cols,
            rows,
            cols,
            data.len()
        )));
    }
    if data
        .iter()
        .any(|(re, im)| !re.is_finite() || !im.is_finite())
    {
        return Err(Error::shape("matrix entries must be finite"));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let (re, im) = data[i * cols + j];
        Complex64::new(re, im)
    }))
}

/// Row-major (re, im) pairs of a matrix.
pub fn to_row_major(m: &CMat) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push((m[(i, j)].re, m[(i, j)].im));
        }
    }
    out
}

/// Singular value decomposition `M = U diag(sigma) V^*` by one-sided Jacobi
/// rotations on the columns.
///
/// `sigma` has one entry per column, descending, zeros included; `u` is
/// `m x n` with zero columns past the rank; `v` is the full `n x n` right
/// unitary, so its trailing columns are an orthonormal basis of the null
/// space.
///
/// Jacobi is used instead of bidiagonalization-based routines because it
/// keeps high relative accuracy on rank-deficient inputs and inputs with
/// clustered singular values (projectors, isometries, block assemblies),
/// which is exactly what the frame machinery feeds it.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

pub fn jacobi_svd(m: &CMat) -> Svd {
    let rows = m.nrows();
    let cols = m.ncols();
    if rows == 0 || cols == 0 {
        return Svd {
            u: CMat::zeros(rows, cols),
            sigma: vec![0.0; cols],
            v: eye(cols),
        };
    }
    let mut a = m.clone();
    let mut v = eye(cols);
    let tol = 1e-15;
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let app: f64 = a.column(p).norm_squared();
                let aqq: f64 = a.column(q).norm_squared();
                let apq: Complex64 = a.column(p).dotc(&a.column(q));
                if apq.norm() <= tol * (app * aqq).sqrt() || apq.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                // Phase alignment, then a real Jacobi rotation zeroing the
                // off-diagonal: the stable small root of t^2 - 2 tau t - 1.
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let e = phase.conj();
                for row in 0..rows {
                    let xp = a[(row, p)];
                    let xq = a[(row, q)];
                    a[(row, p)] = xp * c + xq * e * s;
                    a[(row, q)] = -xp * s + xq * e * c;
                }
                for row in 0..cols {
                    let xp = v[(row, p)];
                    let xq = v[(row, q)];
                    v[(row, p)] = xp * c + xq * e * s;
                    v[(row, q)] = -xp * s + xq * e * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    // Column norms are the singular values; sort descending (stable).
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = CMat::zeros(rows, cols);
    let mut v_sorted = CMat::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            let col: CVec = a.column(src).unscale(s);
            u.set_column(dst, &col);
        }
        let vcol: CVec = v.column(src).into();
        v_sorted.set_column(dst, &vcol);
    }
    Svd {
        u,
        sigma,
        v: v_sorted,
    }
}

/// Moore-Penrose pseudo-inverse with a relative spectral cut.
pub fn pinv(m: &CMat, rel_cut: f64) -> CMat {
    let svd = jacobi_svd(m);
    let sigma_max = svd.sigma.first().cloned().unwrap_or(0.0);
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for (j, &s) in svd.sigma.iter().enumerate() {
        if s > rel_cut * sigma_max && s > 0.0 {
            let vj = svd.v.column(j);
            let uj = svd.u.column(j);
            out += (vj * uj.adjoint()).unscale(s);
        }
    }
    out
}

/// Operator norm (largest singular value). Zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    jacobi_svd(m).sigma.first().cloned().unwrap_or(0.0)
}

/// Largest entry modulus. Zero for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Stacks blocks vertically. All blocks must share the column count.
pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert!(b.ncols() == cols || b.nrows() == 0);
        if b.nrows() > 0 {
            out.view_mut((at, 0), (b.nrows(), b.ncols())).copy_from(*b);
        }
        at += b.nrows();
    }
    out
}

/// Stacks blocks horizontally. All blocks must share the row count.
pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert!(b.nrows() == rows || b.ncols() == 0);
        if b.ncols() > 0 {
            out.view_mut((0, at), (b.nrows(), b.ncols())).copy_from(*b);
        }
        at += b.ncols();
    }
    out
}

/// 2x2 block-diagonal assembly.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    if a.nrows() > 0 && a.ncols() > 0 {
        out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    }
    if b.nrows() > 0 && b.ncols() > 0 {
        out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols()))
            .copy_from(b);
    }
    out
}

/// Solves A X = B by LU with partial pivoting.
pub fn solve_lu(a: &CMat, b: &CMat, lambda_label: &str) -> Result<CMat> {
    if a.nrows() == 0 {
        return Ok(CMat::zeros(0, b.ncols()));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::SingularResolvent {
            lambda: lambda_label.to_string(),
        })
}

/// Least-squares solve of `M A = B` for `M`, for `A` of full row rank:
/// `M = B A^+` through the Jacobi pseudo-inverse (no Gram squaring).
pub fn solve_right(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() == 0 {
        return Ok(CMat::zeros(b.nrows(), 0));
    }
    Ok(b * pinv(a, 1e-13))
}

/// Hermitian square root of a PSD matrix via eigendecomposition, clamping
/// eigenvalues in `[-tol, 0)` to zero.
///
/// The scale-relative tolerance is `tol * max(1, ||P||)`.
pub fn psd_sqrt(p: &CMat, tol: f64) -> Result<CMat> {
    Ok(psd_sqrt_frame(p, tol, 0.0)?.0)
}

/// Like [`psd_sqrt`], but also returns a [`Frame`] of the numerical range of
/// the square root, cutting at the *eigenvalue* level: eigdirections with
/// `lambda <= rank_tol * max(1, lambda_max)` are excluded.
///
/// Cutting on the eigenvalues of `P` rather than the singular values of
/// `sqrt(P)` matters: an eigenvalue perturbation of order 1e-15 turns into a
/// singular value of order 3e-8 after the square root, which a relative cut
/// on `sqrt(P)` would keep.
pub fn psd_sqrt_frame(p: &CMat, tol: f64, rank_tol: f64) -> Result<(CMat, Frame)> {
    if p.nrows() != p.ncols() {
        return Err(Error::shape(format!(
            "psd_sqrt expects a square matrix, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    let n = p.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), Frame::empty(0, rank_tol)));
    }
    let scale = op_norm(p).max(1.0);
    let herm_res = op_norm(&(p - p.adjoint()));
    if herm_res > tol * scale {
        return Err(Error::NotHermitian {
            residual: herm_res,
            tol: tol * scale,
        });
    }
    let h = (p + p.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(h);
    let cut = tol * scale;
    let mut roots = Vec::with_capacity(n);
    for &ev in eig.eigenvalues.iter() {
        if ev < -cut {
            return Err(Error::IndefiniteBeyondTolerance {
                min_eig: ev,
                tol: cut,
            });
        }
        roots.push(Complex64::new(ev.max(0.0).sqrt(), 0.0));
    }
    let d = CMat::from_diagonal(&CVec::from_vec(roots));
    let s = &eig.eigenvectors * d * eig.eigenvectors.adjoint();

    // Range frame from the eigenvectors above the rank cut, ordered by
    // descending eigenvalue and phase-fixed like range_frame.
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let rank_cut = rank_tol * lambda_max.max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] > rank_cut)
        .collect();
    let mut basis = CMat::zeros(n, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let mut v: CVec = eig.eigenvectors.column(i).into();
        let phase = v
            .iter()
            .find(|z| z.norm() > 1e-9)
            .map(|z| z / z.norm())
            .unwrap_or_else(|| Complex64::new(1.0, 0.0));
        v *= phase.conj();
        basis.set_column(col, &v);
    }
    let frame = Frame {
        ambient_dim: n,
        basis,
        rank_tol,
    };
    Ok(((&s + s.adjoint()).scale(0.5), frame))
}

/// Orthonormal basis of the range of an (approximate) orthogonal projector.
///
/// Singular values of a projector are 0 or 1, so the cut sits at 1/2 and is
/// insensitive to roundoff in either cluster.
pub fn projector_range(p: &CMat) -> Frame {
    let ambient = p.nrows();
    if ambient == 0 || p.ncols() == 0 {
        return Frame::empty(ambient, 0.5);
    }
    let svd = jacobi_svd(p);
    let k = svd.sigma.iter().filter(|&&s| s > 0.5).count();
    let mut basis = CMat::zeros(ambient, k);
    for i in 0..k {
        let mut col: CVec = svd.u.column(i).into();
        let phase = svd
            .v
            .column(i)
            .iter()
            .find(|z| z.norm() > 1e-9)
            .map(|z| z / z.norm())
            .unwrap_or_else(|| Complex64::new(1.0, 0.0));
        col *= phase.conj();
        basis.set_column(i, &col);
    }
    Frame {
        ambient_dim: ambient,
        basis,
        rank_tol: 0.5,
    }
}

/// Defect operator `D_C = sqrt(I - C*C)` of a contraction, square of size
/// `cols(C)`.
pub fn defect(c: &CMat, tol: f64) -> Result<CMat> {
    Ok(defect_frame(c, tol, 0.0)?.0)
}

/// Defect operator together with a frame of the defect space (the numerical
/// closure of its range), rank-cut at the eigenvalue level.
pub fn defect_frame(c: &CMat, tol: f64, rank_tol: f64) -> Result<(CMat, Frame)> {
    let norm = op_norm(c);
    if norm > 1.0 + tol {
        return Err(Error::NotContraction { norm, tol });
    }
    let p = eye(c.ncols()) - c.adjoint() * c;
    // ||C|| can overshoot 1 by tol, making eigenvalues of P as low as -2 tol.
    psd_sqrt_frame(&p, 3.0 * tol, rank_tol)
}

/// Orthonormal basis of a subspace of a labeled ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    ambient_dim: usize,
    basis: CMat,
    rank_tol: f64,
}

impl Frame {
    /// The zero subspace of an ambient space.
    pub fn empty(ambient_dim: usize, rank_tol: f64) -> Self {
        Frame {
            ambient_dim,
            basis: CMat::zeros(ambient_dim, 0),
            rank_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Coordinates of ambient columns w.r.t. this frame: `basis^* v`.
    pub fn coords(&self, v: &CMat) -> CMat {
        self.basis.adjoint() * v
    }

    /// Ambient representative of frame coordinates: `basis c`.
    pub fn embed(&self, c: &CMat) -> CMat {
        &self.basis * c
    }

    /// Orthogonal projector onto the subspace, as an ambient operator.
    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// Frame of the orthogonal complement within the ambient space.
    pub fn complement(&self) -> Frame {
        let residual = eye(self.ambient_dim) - self.projector();
        let mut f = projector_range(&residual);
        f.rank_tol = self.rank_tol;
        f
    }

    /// Largest entry of `basis^* basis - I`.
    pub fn orthonormality_defect(&self) -> f64 {
        max_abs(&(self.basis.adjoint() * &self.basis - eye(self.dim())))
    }
}

/// Orthonormal basis of the column space of `m`, cut at `rank_tol * sigma_max`.
///
/// Deterministic for a fixed input: singular values descend, and each kept
/// singular pair is rotated so the first sizeable entry of the right singular
/// vector is real-positive.
pub fn range_frame(m: &CMat, rank_tol: f64) -> Frame {
    let ambient = m.nrows();
    if m.nrows() == 0 || m.ncols() == 0 {
        return Frame::empty(ambient, rank_tol);
    }
    let svd = jacobi_svd(m);
    let sigma_max = svd.sigma.first().cloned().unwrap_or(0.0);
    if sigma_max <= 0.0 {
        return Frame::empty(ambient, rank_tol);
    }
    let k = svd
        .sigma
        .iter()
        .filter(|&&s| s > rank_tol * sigma_max)
        .count();
    let mut basis = CMat::zeros(ambient, k);
    for i in 0..k {
        let mut col: CVec = svd.u.column(i).into();
        // Phase convention from the right singular vector.
        let phase = svd
            .v
            .column(i)
            .iter()
            .find(|z| z.norm() > 1e-9)
            .map(|z| z / z.norm())
            .unwrap_or_else(|| Complex64::new(1.0, 0.0));
        col *= phase.conj();
        basis.set_column(i, &col);
    }
    Frame {
        ambient_dim: ambient,
        basis,
        rank_tol,
    }
}

/// Norm and isometry/contraction classification of an operator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Classification {
    pub op_norm: f64,
    pub is_contraction: bool,
    pub is_isometry: bool,
    pub is_coisometry: bool,
    pub is_unitary: bool,
}

/// Classifies `m` by its largest singular value and the residuals
/// `||M*M - I||`, `||M M* - I||`.
pub fn classify(m: &CMat, tol: f64) -> Classification {
    let norm = op_norm(m);
    let iso_res = op_norm(&(m.adjoint() * m - eye(m.ncols())));
    let coiso_res = op_norm(&(m * m.adjoint() - eye(m.nrows())));
    let is_isometry = iso_res <= tol;
    let is_coisometry = coiso_res <= tol;
    Classification {
        op_norm: norm,
        is_contraction: norm <= 1.0 + tol,
        is_isometry,
        is_coisometry,
        is_unitary: is_isometry && is_coisometry,
    }
}
