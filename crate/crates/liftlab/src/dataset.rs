//! Lifting data sets `{A, T', R, Q}`: validation, the defect operators, the
//! constraint spaces `F`, `F'` with their coupling unitary `omega`, the
//! augmentation that removes the gap `Q*Q - R*R`, and seeded test-corpus
//! generators.
//!
//! The minimal isometric lifting of `T'` is never materialized: it is fixed
//! to the canonical one, and its action is encoded as the coefficient
//! recursion of [`crate::redheffer::verify`].

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tols;
use crate::error::{Error, Result};
use crate::numlin::{
    self, block_diag, classify, cplx, defect_frame, eye, op_norm, psd_sqrt_frame, range_frame,
    solve_right, vstack, CMat, Frame,
};

/// Space dimensions of a lifting data set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub h0: usize,
    pub h: usize,
    pub hp: usize,
}

/// The data `{A, T', R, Q}` with `A: H -> H'`, `T': H' -> H'` and
/// `R, Q: H0 -> H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftingDataSet {
    pub dims: Dims,
    pub a: CMat,
    pub tp: CMat,
    pub r: CMat,
    pub q: CMat,
}

impl LiftingDataSet {
    pub fn new(dims: Dims, a: CMat, tp: CMat, r: CMat, q: CMat) -> Result<Self> {
        let ds = LiftingDataSet { dims, a, tp, r, q };
        ds.check_shapes()?;
        Ok(ds)
    }

    pub fn zero(dims: Dims) -> Self {
        LiftingDataSet {
            dims,
            a: CMat::zeros(dims.hp, dims.h),
            tp: CMat::zeros(dims.hp, dims.hp),
            r: CMat::zeros(dims.h, dims.h0),
            q: CMat::zeros(dims.h, dims.h0),
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        let Dims { h0, h, hp } = self.dims;
        let ok = self.a.shape() == (hp, h)
            && self.tp.shape() == (hp, hp)
            && self.r.shape() == (h, h0)
            && self.q.shape() == (h, h0);
        if ok {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "lifting data set with dims (H0, H, H') = ({h0}, {h}, {hp}) has inconsistent operator shapes"
            )))
        }
    }

    /// `T'AR - AQ`.
    pub fn intertwine_residual(&self) -> CMat {
        &self.tp * &self.a * &self.r - &self.a * &self.q
    }

    /// `Q*Q - R*R`, the square of the gap operator.
    pub fn gram_gap(&self) -> CMat {
        self.q.adjoint() * &self.q - self.r.adjoint() * &self.r
    }
}

/// Residuals of the defining constraints of a lifting data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub norm_a: f64,
    pub norm_tp: f64,
    pub residual_intertwine: f64,
    pub gram_min_eig: f64,
    pub a_contractive: bool,
    pub tp_contractive: bool,
    pub intertwine_ok: bool,
    pub gram_psd: bool,
    pub pass: bool,
}

/// Checks `||A|| <= 1`, `||T'|| <= 1`, `T'AR = AQ` and `Q*Q - R*R >= 0`
/// within `tol`.
pub fn validate(ds: &LiftingDataSet, tol: f64) -> Result<ValidationReport> {
    ds.check_shapes()?;
    let norm_a = op_norm(&ds.a);
    let norm_tp = op_norm(&ds.tp);
    let residual_intertwine = op_norm(&ds.intertwine_residual());
    let gap = ds.gram_gap();
    let gram_min_eig = if ds.dims.h0 == 0 {
        0.0
    } else {
        let h = (&gap + gap.adjoint()).scale(0.5);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    };
    let scale = op_norm(&ds.q).max(1.0);
    let a_contractive = norm_a <= 1.0 + tol;
    let tp_contractive = norm_tp <= 1.0 + tol;
    let intertwine_ok = residual_intertwine <= tol * scale;
    let gram_psd = gram_min_eig >= -tol * scale * scale;
    Ok(ValidationReport {
        norm_a,
        norm_tp,
        residual_intertwine,
        gram_min_eig,
        a_contractive,
        tp_contractive,
        intertwine_ok,
        gram_psd,
        pass: a_contractive && tp_contractive && intertwine_ok && gram_psd,
    })
}

/// Defect operators of a data set, the spaces `F`, `F'` and the unitary
/// `omega : F -> F'` with
/// `omega (D_A Q h) = (D_o h, D_{T'} A R h, D_A R h)`.
///
/// Subspaces are carried in defect-space coordinates: `frame_f` lives in the
/// coordinates of `frame_d_a`, and `frame_fp` in the stacked coordinates of
/// `D_o (+) D_{T'} (+) D_A`. `omega` itself is a `dim F' x dim F` matrix
/// between those two frame coordinate systems; it is never materialized on
/// the ambient spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaData {
    pub d_circ: CMat,
    pub d_a_mat: CMat,
    pub d_tp_mat: CMat,
    pub frame_d_circ: Frame,
    pub frame_d_a: Frame,
    pub frame_d_tp: Frame,
    pub frame_f: Frame,
    pub frame_fp: Frame,
    pub omega: CMat,
}

impl OmegaData {
    /// (dim D_o, dim D_{T'}, dim D_A) as subspace dimensions.
    pub fn splits(&self) -> (usize, usize, usize) {
        (
            self.frame_d_circ.dim(),
            self.frame_d_tp.dim(),
            self.frame_d_a.dim(),
        )
    }

    /// Dimension of the stacked codomain `D_o (+) D_{T'} (+) D_A`.
    pub fn codomain_dim(&self) -> usize {
        let (kc, kt, kd) = self.splits();
        kc + kt + kd
    }

    pub fn dim_f(&self) -> usize {
        self.frame_f.dim()
    }

    /// Dimension of `G = D_A (-) F`, the free input block of a parameter.
    pub fn g_dim(&self) -> usize {
        self.frame_d_a.dim() - self.frame_f.dim()
    }

    /// Dimension of `G' = (D_o (+) D_{T'} (+) D_A) (-) F'`.
    pub fn gp_dim(&self) -> usize {
        self.codomain_dim() - self.frame_fp.dim()
    }

    /// `D_A Q` in `D_A` coordinates, columns indexed by `H0`.
    pub fn map_daq(&self, ds: &LiftingDataSet) -> CMat {
        self.frame_d_a.coords(&(&self.d_a_mat * &ds.q))
    }

    /// `D_A R` in `D_A` coordinates.
    pub fn map_dar(&self, ds: &LiftingDataSet) -> CMat {
        self.frame_d_a.coords(&(&self.d_a_mat * &ds.r))
    }

    /// `D_{T'} A R` in `D_{T'}` coordinates.
    pub fn map_dtp_ar(&self, ds: &LiftingDataSet) -> CMat {
        self.frame_d_tp.coords(&(&self.d_tp_mat * &ds.a * &ds.r))
    }

    /// `D_o` in `D_o` coordinates.
    pub fn map_dcirc(&self) -> CMat {
        self.frame_d_circ.coords(&self.d_circ)
    }

    /// The stacked map `h -> (D_o h, D_{T'} A R h, D_A R h)` in codomain
    /// coordinates.
    pub fn stacked_map(&self, ds: &LiftingDataSet) -> CMat {
        vstack(&[&self.map_dcirc(), &self.map_dtp_ar(ds), &self.map_dar(ds)])
    }
}

/// Builds the defect frames, `F`, `F'` and `omega`.
///
/// `omega` is obtained column-by-column on the spanning set `{D_A Q e_j}` and
/// then solved in the least-squares sense on `F`; unitarity within
/// `tols.check_tol` is enforced.
pub fn build_omega(ds: &LiftingDataSet, tols: &Tols) -> Result<OmegaData> {
    ds.check_shapes()?;
    let tol = tols.check_tol;
    let (d_a_mat, frame_d_a) = defect_frame(&ds.a, tol, tols.rank_tol)?;
    let (d_tp_mat, frame_d_tp) = defect_frame(&ds.tp, tol, tols.rank_tol)?;
    let (d_circ, frame_d_circ) = psd_sqrt_frame(&ds.gram_gap(), tol, tols.rank_tol)?;

    // Spanning maps in defect coordinates.
    let x = frame_d_a.coords(&(&d_a_mat * &ds.q));
    let y = vstack(&[
        &frame_d_circ.coords(&d_circ),
        &frame_d_tp.coords(&(&d_tp_mat * &ds.a * &ds.r)),
        &frame_d_a.coords(&(&d_a_mat * &ds.r)),
    ]);

    let frame_f = range_frame(&x, tols.rank_tol);
    let frame_fp = range_frame(&y, tols.rank_tol);

    if frame_f.dim() != frame_fp.dim() {
        return Err(Error::OmegaNotIsometric {
            residual: (frame_f.dim() as f64 - frame_fp.dim() as f64).abs(),
        });
    }

    let omega = if frame_f.dim() == 0 {
        CMat::zeros(0, 0)
    } else {
        let cx = frame_f.coords(&x);
        let cy = frame_fp.coords(&y);
        solve_right(&cx, &cy)?
    };

    let k = frame_f.dim();
    let residual = op_norm(&(omega.adjoint() * &omega - eye(k)))
        .max(op_norm(&(&omega * omega.adjoint() - eye(k))));
    if residual > tol {
        return Err(Error::OmegaNotIsometric { residual });
    }

    Ok(OmegaData {
        d_circ,
        d_a_mat,
        d_tp_mat,
        frame_d_circ,
        frame_d_a,
        frame_d_tp,
        frame_f,
        frame_fp,
        omega,
    })
}

/// Frame of `F_A' = closure([D_o; D_A R] H0)` in `D_o (+) D_A` coordinates.
pub fn f_a_prime(ds: &LiftingDataSet, tols: &Tols) -> Result<Frame> {
    let tol = tols.check_tol;
    let (d_a_mat, frame_d_a) = defect_frame(&ds.a, tol, tols.rank_tol)?;
    let (d_circ, frame_d_circ) = psd_sqrt_frame(&ds.gram_gap(), tol, tols.rank_tol)?;
    let z = vstack(&[
        &frame_d_circ.coords(&d_circ),
        &frame_d_a.coords(&(&d_a_mat * &ds.r)),
    ]);
    Ok(range_frame(&z, tols.rank_tol))
}

/// The augmented data set `{A_o, T_o', R_o, Q_o}` on `H (+) D_o`, which
/// satisfies `R_o* R_o = Q_o* Q_o` exactly.
pub fn augment(ds: &LiftingDataSet, tols: &Tols) -> Result<LiftingDataSet> {
    ds.check_shapes()?;
    let (d_circ, frame_circ) = psd_sqrt_frame(&ds.gram_gap(), tols.check_tol, tols.rank_tol)?;
    let kc = frame_circ.dim();
    let Dims { h0, h, hp } = ds.dims;

    let a = block_diag(&ds.a, &eye(kc));
    let tp = block_diag(&ds.tp, &CMat::zeros(kc, kc));
    let r = vstack(&[&ds.r, &frame_circ.coords(&d_circ)]);
    let q = vstack(&[&ds.q, &CMat::zeros(kc, h0)]);

    LiftingDataSet::new(
        Dims {
            h0,
            h: h + kc,
            hp: hp + kc,
        },
        a,
        tp,
        r,
        q,
    )
}

/// A generated data set plus generator diagnostics.
#[derive(Debug, Clone)]
pub struct Generated {
    pub ds: LiftingDataSet,
    /// True when the intertwining constraint only admitted `A = 0`.
    pub degenerate_a: bool,
}

fn complex_gaussian(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> CMat {
    let mut normal = || {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    CMat::from_fn(rows, cols, |_, _| cplx(normal(), normal()))
}

/// Haar-like random unitary: QR of a complex Gaussian with the diagonal of R
/// rotated to be real-positive.
fn random_unitary(rng: &mut ChaCha12Rng, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = complex_gaussian(rng, n, n);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let col: crate::numlin::CVec = u.column(j) * phase;
            u.set_column(j, &col);
        }
    }
    u
}

fn random_contraction(rng: &mut ChaCha12Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> CMat {
    if rows == 0 || cols == 0 {
        return CMat::zeros(rows, cols);
    }
    let g = complex_gaussian(rng, rows, cols);
    let norm = op_norm(&g);
    if norm == 0.0 {
        return g;
    }
    let target = lo + (hi - lo) * rng.random::<f64>();
    g.scale(target / norm)
}

/// Orthonormal basis of the null space of `k`: the right singular vectors
/// past the numerical rank.
fn null_space(k: &CMat, tol: f64) -> CMat {
    let n = k.ncols();
    if k.nrows() == 0 || n == 0 {
        return eye(n);
    }
    let svd = numlin::jacobi_svd(k);
    let sigma_max = svd.sigma.first().cloned().unwrap_or(0.0);
    let cut = tol * sigma_max.max(1.0);
    let rank = svd.sigma.iter().filter(|&&s| s > cut).count();
    svd.v.view((0, rank), (n, n - rank)).clone_owned()
}

/// Random element of the null space of `X -> T' X R - X Q`, scaled to a
/// strict contraction. Returns `(A, degenerate)`.
fn solve_for_a(rng: &mut ChaCha12Rng, tp: &CMat, r: &CMat, q: &CMat, dim_h: usize) -> (CMat, bool) {
    let hp = tp.nrows();
    if hp == 0 || dim_h == 0 {
        return (CMat::zeros(hp, dim_h), true);
    }
    // vec(T' X R - X Q) = (R^T kron T' - Q^T kron I) vec(X), column-major vec.
    let k = r.transpose().kronecker(tp) - q.transpose().kronecker(&eye(hp));
    let basis = null_space(&k, 1e-13);
    if basis.ncols() == 0 {
        return (CMat::zeros(hp, dim_h), true);
    }
    let coeff = complex_gaussian(rng, basis.ncols(), 1);
    let v = &basis * coeff;
    let a0 = CMat::from_fn(hp, dim_h, |i, j| v[j * hp + i]);
    let norm = op_norm(&a0);
    if norm < 1e-10 {
        return (CMat::zeros(hp, dim_h), true);
    }
    let target = 0.4 + 0.55 * rng.random::<f64>();
    (a0.scale(target / norm), false)
}

/// Classical commutant-lifting instance: `R = I`, `Q` unitary, `T'` sharing
/// part of `Q`'s spectrum so that the intertwining `T'A = AQ` has nonzero
/// solutions, and `A` a random contraction drawn from that solution space.
pub fn gen_classical(dim_h: usize, seed: u64) -> Generated {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = dim_h;
    let dims = Dims { h0: n, h: n, hp: n };
    if n == 0 {
        return Generated {
            ds: LiftingDataSet::zero(dims),
            degenerate_a: true,
        };
    }

    let angles: Vec<f64> = (0..n)
        .map(|_| 2.0 * std::f64::consts::PI * rng.random::<f64>())
        .collect();
    let u = random_unitary(&mut rng, n);
    let phases = CMat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, angles[i])
        } else {
            cplx(0.0, 0.0)
        }
    });
    let q = &u * &phases * u.adjoint();

    let shared = 1 + (rng.random::<f64>() * n as f64) as usize % n;
    let w = random_unitary(&mut rng, n);
    let unitary_part = CMat::from_fn(shared, shared, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, angles[i])
        } else {
            cplx(0.0, 0.0)
        }
    });
    let strict_part = random_contraction(&mut rng, n - shared, n - shared, 0.2, 0.8);
    let tp = &w * block_diag(&unitary_part, &strict_part) * w.adjoint();

    let r = eye(n);
    let (a, degenerate_a) = solve_for_a(&mut rng, &tp, &r, &q, n);
    Generated {
        ds: LiftingDataSet { dims, a, tp, r, q },
        degenerate_a,
    }
}

/// Random relaxed instance: `T'` a random contraction, `Q` random, `R`
/// scaled into `Q*Q - R*R >= 0`, and `A` from the null space of the
/// intertwining constraint (zero and flagged when that space is trivial).
pub fn gen_random(dims: Dims, seed: u64) -> Generated {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let Dims { h0, h, hp } = dims;
    let tp = random_contraction(&mut rng, hp, hp, 0.3, 0.95);
    let q = if h == 0 || h0 == 0 {
        CMat::zeros(h, h0)
    } else {
        let g = complex_gaussian(&mut rng, h, h0);
        let norm = op_norm(&g);
        let target = 0.6 + 0.6 * rng.random::<f64>();
        if norm > 0.0 {
            g.scale(target / norm)
        } else {
            g
        }
    };

    let r0 = complex_gaussian(&mut rng, h, h0);
    let sigma_min_q = if h >= h0 && h0 > 0 {
        numlin::jacobi_svd(&q)
            .sigma
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let r = if h0 == 0 || h == 0 {
        CMat::zeros(h, h0)
    } else {
        let factor = if op_norm(&r0) > 0.0 {
            (0.9 * sigma_min_q / op_norm(&r0)).min(1.0)
        } else {
            0.0
        };
        if factor < 1e-14 {
            CMat::zeros(h, h0)
        } else {
            r0.scale(factor)
        }
    };

    let (a, degenerate_a) = solve_for_a(&mut rng, &tp, &r, &q, h);
    Generated {
        ds: LiftingDataSet { dims, a, tp, r, q },
        degenerate_a,
    }
}

/// The uniqueness example on scalars: `A = R = Q = 0`, `T' = 1`.
pub fn scalar_isometry_example() -> LiftingDataSet {
    let dims = Dims { h0: 1, h: 1, hp: 1 };
    LiftingDataSet {
        dims,
        a: CMat::zeros(1, 1),
        tp: eye(1),
        r: CMat::zeros(1, 1),
        q: CMat::zeros(1, 1),
    }
}

/// Scalar instance with a genuine gap: `R = 0.5`, `Q = 1`, `A = T' = 0`.
pub fn scalar_gap_example() -> LiftingDataSet {
    let dims = Dims { h0: 1, h: 1, hp: 1 };
    LiftingDataSet {
        dims,
        a: CMat::zeros(1, 1),
        tp: CMat::zeros(1, 1),
        r: CMat::from_element(1, 1, cplx(0.5, 0.0)),
        q: eye(1),
    }
}

/// Whether a data set has the classical commutant-lifting shape:
/// `H0 = H`, `R = I` and `Q` an isometry.
pub fn is_classical_shape(ds: &LiftingDataSet, tol: f64) -> bool {
    ds.dims.h0 == ds.dims.h
        && numlin::max_abs(&(&ds.r - eye(ds.dims.h))) <= tol
        && classify(&ds.q, tol).is_isometry
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::max_abs;

    fn tols() -> Tols {
        Tols::default()
    }

    #[test]
    fn validate_zero_data_passes() {
        let ds = LiftingDataSet::zero(Dims { h0: 1, h: 1, hp: 1 });
        let rep = validate(&ds, 1e-10).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.residual_intertwine, 0.0);
        assert_eq!(rep.gram_min_eig, 0.0);
    }

    #[test]
    fn validate_rejects_gram_violation() {
        // Q = 0, R = I: R*R <= Q*Q fails.
        let dims = Dims { h0: 2, h: 2, hp: 2 };
        let ds = LiftingDataSet {
            dims,
            a: CMat::zeros(2, 2),
            tp: CMat::zeros(2, 2),
            r: eye(2),
            q: CMat::zeros(2, 2),
        };
        let rep = validate(&ds, 1e-10).unwrap();
        assert!(!rep.pass);
        assert!(!rep.gram_psd);
        assert!((rep.gram_min_eig + 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let dims = Dims { h0: 2, h: 2, hp: 2 };
        let ds = LiftingDataSet {
            dims,
            a: CMat::zeros(1, 2),
            tp: CMat::zeros(2, 2),
            r: CMat::zeros(2, 2),
            q: CMat::zeros(2, 2),
        };
        assert!(matches!(
            validate(&ds, 1e-10),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn crafted_classical_instance_validates() {
        // T' = I, Q = I, R = I: constraint is A = A, any contraction works.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let a = random_contraction(&mut rng, 3, 3, 0.2, 0.9);
        let ds = LiftingDataSet {
            dims: Dims { h0: 3, h: 3, hp: 3 },
            a,
            tp: eye(3),
            r: eye(3),
            q: eye(3),
        };
        assert!(validate(&ds, 1e-10).unwrap().pass);
    }

    #[test]
    fn omega_on_zero_data_is_empty() {
        let ds = LiftingDataSet::zero(Dims { h0: 1, h: 1, hp: 1 });
        let od = build_omega(&ds, &tols()).unwrap();
        assert_eq!(od.dim_f(), 0);
        assert_eq!(od.frame_fp.dim(), 0);
        assert_eq!(od.omega.shape(), (0, 0));
        // A = 0 and T' = 0 have full defects; the gap is zero.
        assert_eq!(od.splits(), (0, 1, 1));
    }

    #[test]
    fn omega_scalar_example() {
        // A = 0, T' = 0, R = Q = 1: D_A = 1, D_o = 0, F = C.
        let dims = Dims { h0: 1, h: 1, hp: 1 };
        let ds = LiftingDataSet {
            dims,
            a: CMat::zeros(1, 1),
            tp: CMat::zeros(1, 1),
            r: eye(1),
            q: eye(1),
        };
        let od = build_omega(&ds, &tols()).unwrap();
        assert_eq!(od.splits(), (0, 1, 1));
        assert_eq!(od.dim_f(), 1);
        // omega sends D_A Q 1 = 1 to the stacked vector (0, 1).
        let image = od.frame_fp.embed(&od.omega);
        assert!(
            max_abs(
                &(&image - CMat::from_fn(2, 1, |i, _| cplx(if i == 1 { 1.0 } else { 0.0 }, 0.0)))
            ) < 1e-12
        );
    }

    #[test]
    fn omega_unitary_and_norm_identity_on_random_instance() {
        let g = gen_random(Dims { h0: 2, h: 4, hp: 3 }, 42);
        assert!(validate(&g.ds, 1e-10).unwrap().pass);
        let od = build_omega(&g.ds, &tols()).unwrap();
        let k = od.dim_f();
        assert!(op_norm(&(od.omega.adjoint() * &od.omega - eye(k))) < 1e-8);

        // || D_A Q h ||^2 = || D_o h ||^2 + || D_T' A R h ||^2 + || D_A R h ||^2
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..100 {
            let h = complex_gaussian(&mut rng, g.ds.dims.h0, 1);
            let lhs = (&od.d_a_mat * &g.ds.q * &h).norm_squared();
            let rhs = (&od.d_circ * &h).norm_squared()
                + (&od.d_tp_mat * &g.ds.a * &g.ds.r * &h).norm_squared()
                + (&od.d_a_mat * &g.ds.r * &h).norm_squared();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.max(1.0));
        }
    }

    #[test]
    fn omega_applies_on_spanning_columns() {
        let g = gen_random(Dims { h0: 3, h: 5, hp: 2 }, 91);
        let od = build_omega(&g.ds, &tols()).unwrap();
        let cx = od.frame_f.coords(&od.map_daq(&g.ds));
        let cy = od.frame_fp.coords(&od.stacked_map(&g.ds));
        assert!(max_abs(&(&od.omega * cx - cy)) < 1e-10);
    }

    #[test]
    fn f_a_prime_classical_is_full() {
        let g = gen_classical(3, 11);
        let f = f_a_prime(&g.ds, &tols()).unwrap();
        // D_o = {0} and D_A R = D_A: the frame fills D_o (+) D_A.
        assert_eq!(f.dim(), f.ambient_dim());
    }

    #[test]
    fn f_a_prime_r_zero() {
        let dims = Dims { h0: 2, h: 2, hp: 2 };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let q = random_unitary(&mut rng, 2);
        let ds = LiftingDataSet {
            dims,
            a: CMat::zeros(2, 2),
            tp: CMat::zeros(2, 2),
            r: CMat::zeros(2, 2),
            q,
        };
        let f = f_a_prime(&ds, &tols()).unwrap();
        // R = 0: F_A' = closure(D_o H0) (+) {0}; here D_o has full rank 2.
        assert_eq!(f.ambient_dim(), 4);
        assert_eq!(f.dim(), 2);
        // Basis supported on the D_o block.
        let bottom = f.basis().view((2, 0), (2, f.dim())).clone_owned();
        assert!(max_abs(&bottom) < 1e-9);
    }

    #[test]
    fn augment_scalar_gap_example() {
        let ds = scalar_gap_example();
        let aug = augment(&ds, &tols()).unwrap();
        assert_eq!(aug.dims, Dims { h0: 1, h: 2, hp: 2 });
        let root = 0.75f64.sqrt();
        assert!((aug.r[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((aug.r[(1, 0)].re - root).abs() < 1e-12);
        assert!((aug.q[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(aug.q[(1, 0)].norm() < 1e-12);
        assert!((aug.a[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!(aug.tp[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn augment_closes_gram_gap() {
        for seed in 0..20u64 {
            let g = gen_random(Dims { h0: 2, h: 3, hp: 2 }, seed);
            let aug = augment(&g.ds, &tols()).unwrap();
            assert!(op_norm(&aug.gram_gap()) < 1e-12);
            assert!(op_norm(&aug.intertwine_residual()) < 1e-12);
            assert!(validate(&aug, 1e-10).unwrap().pass);
        }
    }

    #[test]
    fn augment_is_shape_identity_without_gap() {
        let g = gen_classical(2, 19);
        let aug = augment(&g.ds, &tols()).unwrap();
        assert_eq!(aug.dims, g.ds.dims);
    }

    #[test]
    fn generators_validate() {
        for seed in 0..25u64 {
            let g = gen_classical(1 + (seed % 5) as usize, seed);
            let rep = validate(&g.ds, 1e-10).unwrap();
            assert!(rep.pass, "classical seed {seed}: {rep:?}");
            assert!(rep.residual_intertwine < 1e-12);
            assert!(is_classical_shape(&g.ds, 1e-8));

            let dims = Dims {
                h0: 1 + (seed % 3) as usize,
                h: 1 + (seed % 4) as usize,
                hp: 1 + (seed % 5) as usize,
            };
            let g = gen_random(dims, seed);
            let rep = validate(&g.ds, 1e-10).unwrap();
            assert!(rep.pass, "random seed {seed}: {rep:?}");
            assert!(rep.residual_intertwine < 1e-12);
        }
    }

    #[test]
    fn classical_generator_often_nondegenerate() {
        let nondeg = (0..20u64)
            .filter(|&s| !gen_classical(3, s).degenerate_a)
            .count();
        assert!(nondeg >= 15, "only {nondeg}/20 nondegenerate");
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_random(Dims { h0: 2, h: 3, hp: 3 }, 77);
        let b = gen_random(Dims { h0: 2, h: 3, hp: 3 }, 77);
        assert_eq!(a.ds, b.ds);
    }

    #[test]
    fn trivial_intertwining_space_forces_zero_a() {
        // T' = 0 with Q unitary leaves only A Q = 0, hence A = 0.
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let q = random_unitary(&mut rng, 2);
        let (a, degenerate) = solve_for_a(&mut rng, &CMat::zeros(2, 2), &eye(2), &q, 2);
        assert!(degenerate);
        assert_eq!(max_abs(&a), 0.0);
    }
}
