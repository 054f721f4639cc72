//! State-space realizations `{Z, B, C, D}` of operator-valued functions on
//! the unit disk, and the structural identities used by the solver:
//!
//! * transfer evaluation both directly and through the system matrix,
//! * Taylor coefficient extraction,
//! * controllability and its cyclicity reformulation,
//! * recovery of the unitary equivalence between controllable isometric
//!   realizations of the same function,
//! * the feedback transform `Xi(lambda) = Pi_1 F(lambda)(I - lambda Pi_2
//!   F(lambda))^{-1}` and its coupling form,
//! * construction of parameters `F = diag(omega, G)` constrained by
//!   `F(0)|F = omega`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::dataset::OmegaData;
use crate::error::{Error, Result};
use crate::numlin::{
    classify, cplx, eye, hstack, max_abs, op_norm, solve_lu, solve_right, vstack, CMat,
};

/// State-space data whose transfer function is `D + lambda C (I - lambda
/// Z)^{-1} B`, with `Z: X -> X`, `B: U -> X`, `C: X -> Y`, `D: U -> Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    z: CMat,
    b: CMat,
    c: CMat,
    d: CMat,
}

impl Realization {
    pub fn new(z: CMat, b: CMat, c: CMat, d: CMat) -> Result<Self> {
        let x = z.nrows();
        let u = d.ncols();
        let y = d.nrows();
        if z.ncols() != x || b.shape() != (x, u) || c.shape() != (y, x) {
            return Err(Error::shape(format!(
                "realization blocks are inconsistent: Z {}x{}, B {}x{}, C {}x{}, D {}x{}",
                z.nrows(),
                z.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                y,
                u
            )));
        }
        Ok(Realization { z, b, c, d })
    }

    /// Constant function `lambda -> d` (empty state space).
    pub fn constant(d: CMat) -> Self {
        let u = d.ncols();
        let y = d.nrows();
        Realization {
            z: CMat::zeros(0, 0),
            b: CMat::zeros(0, u),
            c: CMat::zeros(y, 0),
            d,
        }
    }

    /// The zero function of the given shape.
    pub fn zero(dim_out: usize, dim_in: usize) -> Self {
        Self::constant(CMat::zeros(dim_out, dim_in))
    }

    pub fn dim_state(&self) -> usize {
        self.z.nrows()
    }

    pub fn dim_in(&self) -> usize {
        self.d.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.d.nrows()
    }

    pub fn z(&self) -> &CMat {
        &self.z
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn c(&self) -> &CMat {
        &self.c
    }

    pub fn d(&self) -> &CMat {
        &self.d
    }

    /// System matrix `[[D, C], [B, Z]] : U (+) X -> Y (+) X`.
    pub fn system_matrix(&self) -> CMat {
        vstack(&[&hstack(&[&self.d, &self.c]), &hstack(&[&self.b, &self.z])])
    }

    /// Splits a system matrix back into a realization.
    pub fn from_system_matrix(m: &CMat, dim_in: usize, dim_out: usize) -> Result<Self> {
        if m.nrows() < dim_out || m.ncols() < dim_in {
            return Err(Error::shape("system matrix smaller than its I/O blocks"));
        }
        let x = m.nrows() - dim_out;
        if m.ncols() - dim_in != x {
            return Err(Error::shape(
                "system matrix is not square on the state block",
            ));
        }
        let d = m.view((0, 0), (dim_out, dim_in)).clone_owned();
        let c = m.view((0, dim_in), (dim_out, x)).clone_owned();
        let b = m.view((dim_out, 0), (x, dim_in)).clone_owned();
        let z = m.view((dim_out, dim_in), (x, x)).clone_owned();
        Realization::new(z, b, c, d)
    }

    pub fn is_contractive(&self, tol: f64) -> bool {
        op_norm(&self.system_matrix()) <= 1.0 + tol
    }

    pub fn is_isometric(&self, tol: f64) -> bool {
        classify(&self.system_matrix(), tol).is_isometry
    }

    /// `D + lambda C (I - lambda Z)^{-1} B`, solving the resolvent system
    /// column-wise instead of forming the inverse.
    pub fn eval(&self, lambda: Complex64) -> Result<CMat> {
        if self.dim_state() == 0 {
            return Ok(self.d.clone());
        }
        let resolvent = eye(self.dim_state()) - scale_c(&self.z, lambda);
        let x = solve_lu(&resolvent, &self.b, &format!("{lambda}"))?;
        Ok(&self.d + scale_c(&(&self.c * x), lambda))
    }

    /// Same value through the system matrix:
    /// `Pi_Y M (I - lambda J_X M)^{-1} Pi_U^*`.
    pub fn eval_via_system(&self, lambda: Complex64) -> Result<CMat> {
        let (u, y, x) = (self.dim_in(), self.dim_out(), self.dim_state());
        let m = self.system_matrix();
        // J_X : Y (+) X -> U (+) X kills Y and embeds X.
        let mut j = CMat::zeros(u + x, y + x);
        for i in 0..x {
            j[(u + i, y + i)] = cplx(1.0, 0.0);
        }
        let resolvent = eye(u + x) - scale_c(&(&j * &m), lambda);
        let mut embed_u = CMat::zeros(u + x, u);
        for i in 0..u {
            embed_u[(i, i)] = cplx(1.0, 0.0);
        }
        let solved = solve_lu(&resolvent, &embed_u, &format!("{lambda}"))?;
        Ok((&m * solved).view((0, 0), (y, u)).clone_owned())
    }

    /// Taylor coefficients `F_0 = D`, `F_n = C Z^{n-1} B` for `1 <= n <= horizon`.
    pub fn taylor(&self, horizon: usize) -> TaylorSeries {
        let mut coeffs = Vec::with_capacity(horizon + 1);
        coeffs.push(self.d.clone());
        if self.dim_state() == 0 {
            for _ in 0..horizon {
                coeffs.push(CMat::zeros(self.dim_out(), self.dim_in()));
            }
        } else {
            let mut power = self.b.clone();
            for _ in 1..=horizon {
                coeffs.push(&self.c * &power);
                power = &self.z * power;
            }
        }
        TaylorSeries::new(self.dim_out(), self.dim_in(), coeffs).expect("consistent dims")
    }

    /// `sum_{n > horizon} ||F_n|| <= ||C|| ||B|| ||Z||^horizon / (1 - ||Z||)`
    /// when `||Z|| < 1`; `None` when the tail is unbounded by this estimate.
    pub fn tail_bound(&self, horizon: usize) -> Option<f64> {
        if self.dim_state() == 0 {
            return Some(0.0);
        }
        let nz = op_norm(&self.z);
        if nz >= 1.0 - 1e-12 {
            return None;
        }
        Some(op_norm(&self.c) * op_norm(&self.b) * nz.powi(horizon as i32) / (1.0 - nz))
    }

    /// Controllability matrix `[B, ZB, ..., Z^{dim_X - 1} B]`.
    pub fn controllability_matrix(&self) -> CMat {
        let x = self.dim_state();
        if x == 0 {
            return CMat::zeros(0, 0);
        }
        let mut blocks = Vec::with_capacity(x);
        let mut power = self.b.clone();
        for _ in 0..x {
            blocks.push(power.clone());
            power = &self.z * power;
        }
        let refs: Vec<&CMat> = blocks.iter().collect();
        hstack(&refs)
    }

    /// True iff `{Z, B}` is controllable: the controllability matrix has
    /// full rank at the relative cut `tol`.
    pub fn controllable(&self, tol: f64) -> bool {
        let x = self.dim_state();
        if x == 0 {
            return true;
        }
        numerical_rank(&self.controllability_matrix(), tol) == x
    }

    /// True iff `U (+) {0}` is cyclic for the system matrix. Requires
    /// `dim_U = dim_Y`; equal to [`Self::controllable`] by the feedback
    /// argument relating `M` to `[[0, 0], [B, Z]]`.
    pub fn cyclic_for_m(&self, tol: f64) -> Result<bool> {
        let (u, y, x) = (self.dim_in(), self.dim_out(), self.dim_state());
        if u != y {
            return Err(Error::dim(format!(
                "cyclicity of U (+) 0 needs dim_U = dim_Y, got {u} != {y}"
            )));
        }
        let m = self.system_matrix();
        let mut embed_u = CMat::zeros(u + x, u);
        for i in 0..u {
            embed_u[(i, i)] = cplx(1.0, 0.0);
        }
        let mut blocks = Vec::with_capacity(u + x);
        let mut power = embed_u;
        for _ in 0..(u + x) {
            blocks.push(power.clone());
            power = &m * power;
        }
        let refs: Vec<&CMat> = blocks.iter().collect();
        Ok(numerical_rank(&hstack(&refs), tol) == u + x)
    }

    /// Conjugates the state space by `w` (unitary for the equivalence tests).
    pub fn conjugate_state(&self, w: &CMat) -> Realization {
        Realization {
            z: w * &self.z * w.adjoint(),
            b: w * &self.b,
            c: &self.c * w.adjoint(),
            d: self.d.clone(),
        }
    }
}

/// Rank at a relative singular-value cut.
fn numerical_rank(m: &CMat, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sigma = crate::numlin::jacobi_svd(m).sigma;
    let sigma_max = sigma.first().cloned().unwrap_or(0.0);
    if sigma_max <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > tol * sigma_max).count()
}

fn scale_c(m: &CMat, lambda: Complex64) -> CMat {
    m.map(|z| z * lambda)
}

/// Ordered Taylor coefficients `F_0 .. F_N` of an operator-valued function.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    dim_out: usize,
    dim_in: usize,
    coeffs: Vec<CMat>,
}

impl TaylorSeries {
    pub fn new(dim_out: usize, dim_in: usize, coeffs: Vec<CMat>) -> Result<Self> {
        if coeffs.iter().any(|c| c.shape() != (dim_out, dim_in)) {
            return Err(Error::shape(format!(
                "taylor coefficients must all be {dim_out}x{dim_in}"
            )));
        }
        Ok(TaylorSeries {
            dim_out,
            dim_in,
            coeffs,
        })
    }

    pub fn zero(dim_out: usize, dim_in: usize, horizon: usize) -> Self {
        TaylorSeries {
            dim_out,
            dim_in,
            coeffs: vec![CMat::zeros(dim_out, dim_in); horizon + 1],
        }
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    /// Highest coefficient index N.
    pub fn horizon(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &CMat {
        &self.coeffs[n]
    }

    /// Partial sum `sum_n lambda^n F_n`.
    pub fn eval(&self, lambda: Complex64) -> CMat {
        let mut acc = CMat::zeros(self.dim_out, self.dim_in);
        let mut pow = cplx(1.0, 0.0);
        for c in &self.coeffs {
            acc += scale_c(c, pow);
            pow *= lambda;
        }
        acc
    }

    /// Partial column Gram `sum_n F_n^* F_n`.
    pub fn partial_gram(&self) -> CMat {
        let mut acc = CMat::zeros(self.dim_in, self.dim_in);
        for c in &self.coeffs {
            acc += c.adjoint() * c;
        }
        acc
    }

    /// `max(0, lambda_max(sum F_n^* F_n) - 1)`: how far the partial Gram
    /// exceeds the Schur bound.
    pub fn gram_excess(&self) -> f64 {
        if self.dim_in == 0 {
            return 0.0;
        }
        let g = self.partial_gram();
        let h = (&g + g.adjoint()).scale(0.5);
        let max_eig = nalgebra::SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        (max_eig - 1.0).max(0.0)
    }

    /// Largest coefficient-wise deviation from `other`.
    pub fn distance(&self, other: &TaylorSeries) -> f64 {
        if self.dim_out != other.dim_out || self.dim_in != other.dim_in {
            return f64::INFINITY;
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = CMat::zeros(self.dim_out, self.dim_in);
        (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).unwrap_or(&zero);
                let b = other.coeffs.get(i).unwrap_or(&zero);
                max_abs(&(a - b))
            })
            .fold(0.0, f64::max)
    }
}

/// Recovers the unitary state-space equivalence between two controllable
/// isometric realizations of the same transfer function: `W` with
/// `W Z_1 = Z_2 W`, `W B_1 = B_2`, `C_2 W = C_1`. Returns `None` when the
/// transfer functions differ (checked via `D_1 = D_2` and 8 sample points).
pub fn unitary_equivalence(r1: &Realization, r2: &Realization, tol: f64) -> Result<Option<CMat>> {
    if !r1.is_isometric(tol) || !r2.is_isometric(tol) {
        return Err(Error::NotIsometric);
    }
    if !r1.controllable(1e-9) || !r2.controllable(1e-9) {
        return Err(Error::NotControllable);
    }
    if r1.dim_in() != r2.dim_in() || r1.dim_out() != r2.dim_out() {
        return Err(Error::dim("realizations with different I/O dimensions"));
    }
    if max_abs(&(r1.d() - r2.d())) > tol {
        return Ok(None);
    }
    for j in 0..8 {
        let lambda = Complex64::from_polar(0.5, 2.0 * std::f64::consts::PI * j as f64 / 8.0);
        let diff = max_abs(&(r1.eval(lambda)? - r2.eval(lambda)?));
        if diff > tol {
            return Ok(None);
        }
    }
    if r1.dim_state() != r2.dim_state() {
        // Controllable isometric realizations of one function share the
        // state dimension; treat a mismatch as differing functions.
        return Ok(None);
    }
    let k1 = r1.controllability_matrix();
    let k2 = r2.controllability_matrix();
    if r1.dim_state() == 0 {
        return Ok(Some(CMat::zeros(0, 0)));
    }
    let w = solve_right(&k1, &k2)?;
    let x = r1.dim_state();
    let ok = op_norm(&(w.adjoint() * &w - eye(x))) <= tol
        && op_norm(&(&w * r1.z() - r2.z() * &w)) <= tol
        && op_norm(&(&w * r1.b() - r2.b())) <= tol
        && op_norm(&(r2.c() * &w - r1.c())) <= tol;
    Ok(if ok { Some(w) } else { None })
}

/// The feedback transform of a contraction `gamma : M -> E1 (+) M` with
/// `M = E2 (+) X`: the function `Xi(lambda) = gamma_1 (I - lambda
/// gamma_2)^{-1} Pi_{E2}^*` together with the Schur-class function `F` whose
/// re-blocked system matrix is `gamma`, satisfying
/// `Xi(lambda) = Pi_1 F(lambda) (I - lambda Pi_2 F(lambda))^{-1}`.
#[derive(Debug, Clone)]
pub struct FeedbackPair {
    gamma1: CMat,
    gamma2: CMat,
    dim_e1: usize,
    dim_e2: usize,
    f: Realization,
}

pub fn feedback_pair(gamma: &CMat, dim_e1: usize, dim_e2: usize, tol: f64) -> Result<FeedbackPair> {
    let m = gamma.ncols();
    if gamma.nrows() != dim_e1 + m {
        return Err(Error::shape(format!(
            "gamma must map M -> E1 (+) M; got {}x{} with dim E1 = {dim_e1}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    if dim_e2 > m {
        return Err(Error::shape("E2 does not fit inside M"));
    }
    let norm = op_norm(gamma);
    if norm > 1.0 + tol {
        return Err(Error::NotContraction { norm, tol });
    }
    let x = m - dim_e2;
    let gamma1 = gamma.view((0, 0), (dim_e1, m)).clone_owned();
    let gamma2 = gamma.view((dim_e1, 0), (m, m)).clone_owned();
    // Re-blocked rows: E1, E2, X over columns E2, X.
    let d = gamma.view((0, 0), (dim_e1 + dim_e2, dim_e2)).clone_owned();
    let c = gamma.view((0, dim_e2), (dim_e1 + dim_e2, x)).clone_owned();
    let b = gamma.view((dim_e1 + dim_e2, 0), (x, dim_e2)).clone_owned();
    let z = gamma.view((dim_e1 + dim_e2, dim_e2), (x, x)).clone_owned();
    Ok(FeedbackPair {
        gamma1,
        gamma2,
        dim_e1,
        dim_e2,
        f: Realization::new(z, b, c, d)?,
    })
}

impl FeedbackPair {
    pub fn f(&self) -> &Realization {
        &self.f
    }

    /// `Xi(lambda) = gamma_1 (I - lambda gamma_2)^{-1} Pi_{E2}^*`.
    pub fn xi(&self, lambda: Complex64) -> Result<CMat> {
        let m = self.gamma2.nrows();
        let mut embed = CMat::zeros(m, self.dim_e2);
        for i in 0..self.dim_e2 {
            embed[(i, i)] = cplx(1.0, 0.0);
        }
        let resolvent = eye(m) - scale_c(&self.gamma2, lambda);
        let solved = solve_lu(&resolvent, &embed, &format!("{lambda}"))?;
        Ok(&self.gamma1 * solved)
    }

    /// `Pi_1 F(lambda) (I - lambda Pi_2 F(lambda))^{-1}` from the realization
    /// side of the pair.
    pub fn xi_from_f(&self, lambda: Complex64) -> Result<CMat> {
        let fval = self.f.eval(lambda)?;
        let top = fval.view((0, 0), (self.dim_e1, self.dim_e2)).clone_owned();
        let bottom = fval
            .view((self.dim_e1, 0), (self.dim_e2, self.dim_e2))
            .clone_owned();
        let resolvent = eye(self.dim_e2) - scale_c(&bottom, lambda);
        let inv_applied = solve_lu(&resolvent, &eye(self.dim_e2), &format!("{lambda}"))?;
        Ok(top * inv_applied)
    }

    /// Largest identity residual over a grid.
    pub fn identity_residual(&self, grid: &[Complex64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &l in grid {
            worst = worst.max(max_abs(&(self.xi(l)? - self.xi_from_f(l)?)));
        }
        Ok(worst)
    }
}

/// Residuals of the coupling identity
/// `Y_1^* (I - lambda Y_2^*)^{-1} Pi_D^* = Pi' F(lambda)(I - lambda Pi
/// F(lambda))^{-1}` for a contraction `Y : D' (+) M -> M` with `M = D (+) X`.
///
/// The identity only needs contractivity of `Y`; whether `Y` is actually
/// isometric (the Schur-class hypothesis) is reported alongside.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CouplingReport {
    pub max_residual: f64,
    pub y_is_isometric: bool,
}

pub fn coupling_identity(
    y: &CMat,
    dim_d_prime: usize,
    dim_d: usize,
    grid: &[Complex64],
    tol: f64,
) -> Result<CouplingReport> {
    let m = y.nrows();
    if y.ncols() != dim_d_prime + m {
        return Err(Error::shape(format!(
            "Y must map D' (+) M -> M; got {}x{} with dim D' = {dim_d_prime}",
            y.nrows(),
            y.ncols()
        )));
    }
    if dim_d > m {
        return Err(Error::shape("D does not fit inside M"));
    }
    let norm = op_norm(y);
    if norm > 1.0 + tol {
        return Err(Error::NotContraction { norm, tol });
    }
    let x = m - dim_d;
    let y1 = y.view((0, 0), (m, dim_d_prime)).clone_owned();
    let y2 = y.view((0, dim_d_prime), (m, m)).clone_owned();
    let mut embed_d = CMat::zeros(m, dim_d);
    for i in 0..dim_d {
        embed_d[(i, i)] = cplx(1.0, 0.0);
    }
    // J' : D' (+) M -> M keeps only the X block of the M summand.
    let mut j = CMat::zeros(m, dim_d_prime + m);
    for i in 0..x {
        j[(dim_d + i, dim_d_prime + dim_d + i)] = cplx(1.0, 0.0);
    }
    let y_adj = y.adjoint();

    let mut worst: f64 = 0.0;
    for &lambda in grid {
        // Left side, straight from the coupling blocks.
        let resolvent = eye(m) - scale_c(&y2.adjoint(), lambda);
        let lhs = y1.adjoint() * solve_lu(&resolvent, &embed_d, &format!("{lambda}"))?;

        // Right side through F of the associated realization.
        let resolvent_f = eye(m) - scale_c(&(&j * &y_adj), lambda);
        let core = solve_lu(&resolvent_f, &embed_d, &format!("{lambda}"))?;
        let f_full = &y_adj * core;
        let f = f_full
            .view((0, 0), (dim_d_prime + dim_d, dim_d))
            .clone_owned();
        let f_top = f.view((0, 0), (dim_d_prime, dim_d)).clone_owned();
        let f_bottom = f.view((dim_d_prime, 0), (dim_d, dim_d)).clone_owned();
        let denom = eye(dim_d) - scale_c(&f_bottom, lambda);
        let rhs = f_top * solve_lu(&denom, &eye(dim_d), &format!("{lambda}"))?;

        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    Ok(CouplingReport {
        max_residual: worst,
        y_is_isometric: classify(y, tol).is_isometry,
    })
}

/// Builds the constrained parameter `F = diag(omega, G(lambda))` w.r.t. the
/// splittings `D_A = F (+) G` and `D_o (+) D_{T'} (+) D_A = F' (+) G'`, in
/// defect coordinates. The result satisfies `F(0)|F = omega`, has a
/// contractive system matrix, its `B` block annihilates `F`, and its `C`
/// block maps into `G'`.
pub fn constrained_parameter(od: &OmegaData, g: &Realization, tol: f64) -> Result<Realization> {
    let k = od.dim_f();
    let g_dim = od.g_dim();
    let gp_dim = od.gp_dim();
    if g.dim_in() != g_dim || g.dim_out() != gp_dim {
        return Err(Error::dim(format!(
            "free parameter must map G ({g_dim}) into G' ({gp_dim}); got {} -> {}",
            g.dim_in(),
            g.dim_out()
        )));
    }
    let norm = op_norm(&g.system_matrix());
    if norm > 1.0 + tol {
        return Err(Error::NotContraction { norm, tol });
    }

    let basis_f = od.frame_f.basis();
    let basis_fp = od.frame_fp.basis();
    let basis_g = od.frame_f.complement();
    let basis_gp = od.frame_fp.complement();
    debug_assert_eq!(basis_g.dim(), g_dim);
    debug_assert_eq!(basis_gp.dim(), gp_dim);

    let omega_part = if k > 0 {
        basis_fp * &od.omega * basis_f.adjoint()
    } else {
        CMat::zeros(od.codomain_dim(), od.frame_d_a.dim())
    };
    let d = omega_part + basis_gp.basis() * g.d() * basis_g.basis().adjoint();
    let b = g.b() * basis_g.basis().adjoint();
    let c = basis_gp.basis() * g.c();
    Realization::new(g.z().clone(), b, c, d)
}

/// Grid of `n` points equally spaced on the circle of the given radius.
pub fn circle_grid(n: usize, radius: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .collect()
}

/// Random realization with system-matrix norm scaled into `[lo, hi]`.
pub fn random_contractive_realization(
    rng: &mut ChaCha12Rng,
    dim_in: usize,
    dim_out: usize,
    dim_state: usize,
    lo: f64,
    hi: f64,
) -> Realization {
    let rows = dim_out + dim_state;
    let cols = dim_in + dim_state;
    let mut normal = || {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let g = CMat::from_fn(rows, cols, |_, _| cplx(normal(), normal()));
    let norm = op_norm(&g);
    let target = lo + (hi - lo) * rng.random::<f64>();
    let m = if norm > 0.0 {
        g.scale(target / norm)
    } else {
        g
    };
    Realization::from_system_matrix(&m, dim_in, dim_out).expect("consistent blocks")
}

/// Random isometric realization (requires `dim_in <= dim_out`): the system
/// matrix is the first `dim_in + dim_state` columns of a random unitary.
pub fn random_isometric_realization(
    rng: &mut ChaCha12Rng,
    dim_in: usize,
    dim_out: usize,
    dim_state: usize,
) -> Result<Realization> {
    if dim_in > dim_out {
        return Err(Error::dim(
            "an isometric system matrix needs dim_in <= dim_out",
        ));
    }
    let rows = dim_out + dim_state;
    let cols = dim_in + dim_state;
    let mut normal = || {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let g = CMat::from_fn(rows, rows, |_, _| cplx(normal(), normal()));
    let q = g.qr().q();
    let m = q.view((0, 0), (rows, cols)).clone_owned();
    Realization::from_system_matrix(&m, dim_in, dim_out)
}

/// Random unitary state-space transformation, for conjugation tests.
pub fn random_unitary_matrix(rng: &mut ChaCha12Rng, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let mut normal = || {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let g = CMat::from_fn(n, n, |_, _| cplx(normal(), normal()));
    g.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tols;
    use crate::dataset::{build_omega, gen_random, Dims};
    use rand::SeedableRng;

    fn scalar(x: f64) -> CMat {
        CMat::from_element(1, 1, cplx(x, 0.0))
    }

    #[test]
    fn eval_at_zero_is_d() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let r = random_contractive_realization(&mut rng, 2, 3, 2, 0.3, 0.9);
        assert_eq!(r.eval(cplx(0.0, 0.0)).unwrap(), *r.d());
    }

    #[test]
    fn eval_scalar_shift() {
        // Z = 0, B = C = 1, D = 0 realizes F(lambda) = lambda.
        let r = Realization::new(scalar(0.0), scalar(1.0), scalar(1.0), scalar(0.0)).unwrap();
        let v = r.eval(cplx(0.5, 0.0)).unwrap();
        assert!((v[(0, 0)] - cplx(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_matches_system_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..20 {
            let r = random_contractive_realization(&mut rng, 2, 2, 3, 0.3, 0.95);
            let lambda = cplx(0.3, 0.2);
            let a = r.eval(lambda).unwrap();
            let b = r.eval_via_system(lambda).unwrap();
            assert!(max_abs(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn eval_equivalence_on_grid() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let grid = circle_grid(16, 0.9);
        for _ in 0..30 {
            let r = random_contractive_realization(&mut rng, 1, 2, 3, 0.5, 0.99);
            for &l in &grid {
                let diff = max_abs(&(r.eval(l).unwrap() - r.eval_via_system(l).unwrap()));
                assert!(diff < 1e-12, "diff {diff}");
            }
        }
    }

    #[test]
    fn contractive_realizations_stay_in_schur_class() {
        // A contractive system matrix forces ||F(lambda)|| <= 1 on the disk.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for trial in 0..40 {
            let r = random_contractive_realization(
                &mut rng,
                1 + trial % 3,
                1 + (trial / 2) % 3,
                trial % 4,
                0.5,
                1.0,
            );
            for &l in &circle_grid(12, 0.95) {
                let norm = op_norm(&r.eval(l).unwrap());
                assert!(norm <= 1.0 + 1e-8, "trial {trial}: value norm {norm}");
            }
            // The coefficient Gram inherits the bound.
            assert!(r.taylor(48).gram_excess() <= 1e-8);
        }
    }

    #[test]
    fn taylor_nilpotent_state() {
        let r = Realization::new(
            CMat::zeros(1, 1),
            CMat::from_element(1, 2, cplx(0.4, 0.1)),
            CMat::from_element(2, 1, cplx(0.3, 0.0)),
            CMat::zeros(2, 2),
        )
        .unwrap();
        let t = r.taylor(4);
        for n in 2..=4 {
            assert!(max_abs(t.coeff(n)) < 1e-15);
        }
    }

    #[test]
    fn taylor_geometric() {
        let r = Realization::new(scalar(0.5), scalar(1.0), scalar(1.0), scalar(0.0)).unwrap();
        let t = r.taylor(6);
        assert!(max_abs(t.coeff(0)) == 0.0);
        for n in 1..=6 {
            let expect = 0.5f64.powi(n as i32 - 1);
            assert!((t.coeff(n)[(0, 0)].re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn taylor_partial_sum_matches_eval_within_tail() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let r = random_contractive_realization(&mut rng, 2, 2, 3, 0.5, 0.9);
        let n = 24;
        let t = r.taylor(n);
        let lambda = cplx(0.4, 0.0);
        let direct = r.eval(lambda).unwrap();
        let summed = t.eval(lambda);
        // sum_{n > N} |lambda|^n ||F_n|| <= tail_bound(N) * |lambda|^{N+1}.
        let tail = r.tail_bound(n).unwrap() * 0.4f64.powi(n as i32 + 1);
        assert!(max_abs(&(direct - summed)) <= tail + 1e-12);
    }

    #[test]
    fn controllable_edge_cases() {
        // B = 0 with a nonzero state space is never controllable.
        let r = Realization::new(
            CMat::zeros(2, 2),
            CMat::zeros(2, 1),
            CMat::zeros(1, 2),
            CMat::zeros(1, 1),
        )
        .unwrap();
        assert!(!r.controllable(1e-9));

        // Z = 0, B = I reaches everything.
        let r = Realization::new(
            CMat::zeros(2, 2),
            eye(2),
            CMat::zeros(2, 2),
            CMat::zeros(2, 2),
        )
        .unwrap();
        assert!(r.controllable(1e-9));
    }

    // Brute-force span oracle: grow an orthonormal basis from the Krylov
    // columns and report its size.
    fn krylov_span_dim(z: &CMat, b: &CMat) -> usize {
        let x = z.nrows();
        let mut basis: Vec<crate::numlin::CVec> = Vec::new();
        let mut block = b.clone();
        for _ in 0..x {
            for j in 0..block.ncols() {
                let mut v: crate::numlin::CVec = block.column(j).into();
                for e in &basis {
                    let coeff = e.dotc(&v);
                    v -= e.map(|z| z * coeff);
                }
                if v.norm() > 1e-10 {
                    let n = v.norm();
                    basis.push(v.unscale(n));
                }
            }
            block = z * block;
        }
        basis.len()
    }

    #[test]
    fn controllable_matches_span_oracle_on_jordan_pair() {
        let z = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                cplx(0.5, 0.0)
            } else if j == i + 1 {
                cplx(1.0, 0.0)
            } else {
                cplx(0.0, 0.0)
            }
        });
        // Cyclic vector for the Jordan block.
        let b_good = CMat::from_fn(3, 1, |i, _| cplx(if i == 2 { 1.0 } else { 0.0 }, 0.0));
        // e1 spans an invariant line.
        let b_bad = CMat::from_fn(3, 1, |i, _| cplx(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        for (b, expect) in [(b_good, 3), (b_bad, 1)] {
            let r = Realization::new(z.clone(), b.clone(), CMat::zeros(1, 3), CMat::zeros(1, 1))
                .unwrap();
            assert_eq!(krylov_span_dim(&z, &b), expect);
            assert_eq!(r.controllable(1e-9), expect == 3);
        }
    }

    #[test]
    fn cyclicity_agrees_with_controllability() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut zero_b_seen = false;
        for trial in 0..200 {
            let u = 1 + (trial % 3);
            let x = 1 + (trial % 4);
            let mut r = random_contractive_realization(&mut rng, u, u, x, 0.3, 0.95);
            if trial % 17 == 0 {
                r.b = CMat::zeros(x, u);
                zero_b_seen = true;
            }
            assert_eq!(
                r.controllable(1e-9),
                r.cyclic_for_m(1e-9).unwrap(),
                "trial {trial}"
            );
        }
        assert!(zero_b_seen);
    }

    #[test]
    fn cyclicity_requires_square_io() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let r = random_contractive_realization(&mut rng, 1, 2, 2, 0.3, 0.9);
        assert!(matches!(
            r.cyclic_for_m(1e-9),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn unitary_equivalence_recovers_conjugation() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for trial in 0..20 {
            let r1 = random_isometric_realization(&mut rng, 1, 2, 3).unwrap();
            if !r1.controllable(1e-9) {
                continue;
            }
            let v = random_unitary_matrix(&mut rng, 3);
            let r2 = r1.conjugate_state(&v);
            let w = unitary_equivalence(&r1, &r2, 1e-8)
                .unwrap()
                .unwrap_or_else(|| panic!("equivalence missing on trial {trial}"));
            assert!(op_norm(&(&w * r1.z() - r2.z() * &w)) < 1e-8);
            assert!(op_norm(&(&w * r1.b() - r2.b())) < 1e-8);
            assert!(op_norm(&(r2.c() * &w - r1.c())) < 1e-8);
        }
    }

    #[test]
    fn unitary_equivalence_identity_case() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let r = random_isometric_realization(&mut rng, 1, 2, 2).unwrap();
        assert!(r.controllable(1e-9));
        let w = unitary_equivalence(&r, &r, 1e-8).unwrap().unwrap();
        assert!(op_norm(&(&w - eye(2))) < 1e-8);
    }

    #[test]
    fn unitary_equivalence_detects_different_functions() {
        // Independent isometric realizations differ already at D = F(0).
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let r1 = random_isometric_realization(&mut rng, 1, 2, 2).unwrap();
        let r2 = random_isometric_realization(&mut rng, 1, 2, 2).unwrap();
        assert!(max_abs(&(r1.d() - r2.d())) > 1e-3);
        assert!(unitary_equivalence(&r1, &r2, 1e-8).unwrap().is_none());
    }

    #[test]
    fn feedback_constant_gamma2() {
        // gamma2 = 0 makes Xi constant.
        let gamma = vstack(&[&scalar(0.7), &scalar(0.0)]);
        let fp = feedback_pair(&gamma, 1, 1, 1e-10).unwrap();
        for &l in &[cplx(0.0, 0.0), cplx(0.3, 0.0), cplx(0.0, 0.5)] {
            let xi = fp.xi(l).unwrap();
            assert!((xi[(0, 0)] - cplx(0.7, 0.0)).norm() < 1e-14);
        }
        assert!(fp.identity_residual(&circle_grid(8, 0.7)).unwrap() < 1e-12);
    }

    #[test]
    fn feedback_identity_scalar() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            // gamma: M -> E1 (+) M with E1 = E2 = X = C.
            let g = random_contractive_realization(&mut rng, 2, 3, 0, 0.3, 0.95);
            let fp = feedback_pair(g.d(), 1, 1, 1e-8).unwrap();
            for &l in &[cplx(0.0, 0.0), cplx(0.3, 0.0), cplx(0.0, 0.5)] {
                let diff = max_abs(&(fp.xi(l).unwrap() - fp.xi_from_f(l).unwrap()));
                assert!(diff < 1e-12);
            }
        }
    }

    #[test]
    fn feedback_identity_random_suite() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let grid = circle_grid(8, 0.7);
        let mut worst: f64 = 0.0;
        for trial in 0..100 {
            let e1 = 1 + trial % 2;
            let e2 = 1 + trial % 3;
            let x = trial % 3;
            let m = e2 + x;
            let g = random_contractive_realization(&mut rng, m, e1 + m, 0, 0.3, 0.98);
            let fp = feedback_pair(g.d(), e1, e2, 1e-8).unwrap();
            worst = worst.max(fp.identity_residual(&grid).unwrap());
        }
        assert!(worst <= 1e-10, "worst residual {worst}");
    }

    #[test]
    fn coupling_identity_trivial_and_random() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let grid = circle_grid(8, 0.7);

        // D' = {0}: the left side has no rows.
        let g = random_contractive_realization(&mut rng, 3, 3, 0, 0.3, 0.9);
        let rep = coupling_identity(g.d(), 0, 1, &grid, 1e-8).unwrap();
        assert_eq!(rep.max_residual, 0.0);

        // dims (D', D, X) = (1, 1, 2).
        for _ in 0..30 {
            let g = random_contractive_realization(&mut rng, 4, 3, 0, 0.3, 0.98);
            let rep = coupling_identity(g.d(), 1, 1, &grid, 1e-8).unwrap();
            assert!(rep.max_residual <= 1e-10, "residual {}", rep.max_residual);
            assert!(!rep.y_is_isometric); // strict contraction by scaling
        }
    }

    #[test]
    fn coupling_identity_constant_case() {
        // Y2 = 0: both sides are the constant Y1^* Pi_D^*.
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let y1 = random_contractive_realization(&mut rng, 1, 2, 0, 0.3, 0.8);
        let y = hstack(&[y1.d(), &CMat::zeros(2, 2)]);
        let rep = coupling_identity(&y, 1, 1, &circle_grid(8, 0.7), 1e-8).unwrap();
        assert!(rep.max_residual < 1e-13);
    }

    #[test]
    fn constrained_parameter_central_and_random() {
        let tols = Tols::default();
        for seed in [3u64, 21, 33] {
            let gds = gen_random(Dims { h0: 2, h: 4, hp: 3 }, seed);
            let od = build_omega(&gds.ds, &tols).unwrap();

            // G = 0 gives the central constant parameter omega Pi_F.
            let central = constrained_parameter(
                &od,
                &Realization::zero(od.gp_dim(), od.g_dim()),
                tols.check_tol,
            )
            .unwrap();
            assert_eq!(central.dim_state(), 0);
            let expected = od.frame_fp.basis() * &od.omega * od.frame_f.basis().adjoint();
            assert!(max_abs(&(central.d() - expected)) < 1e-12);

            // Random contractive G keeps the system contractive and pins F(0) on F.
            let mut rng = ChaCha12Rng::seed_from_u64(seed + 1000);
            let g = random_contractive_realization(&mut rng, od.g_dim(), od.gp_dim(), 2, 0.3, 0.95);
            let f = constrained_parameter(&od, &g, tols.check_tol).unwrap();
            assert!(f.is_contractive(1e-10));
            let pinned = f.eval(cplx(0.0, 0.0)).unwrap() * od.frame_f.basis();
            let target = od.frame_fp.basis() * &od.omega;
            assert!(max_abs(&(pinned - target)) < 1e-10);
            // B annihilates F; C maps into G'.
            assert!(max_abs(&(f.b() * od.frame_f.basis())) < 1e-12);
            assert!(max_abs(&(od.frame_fp.basis().adjoint() * f.c())) < 1e-12);
        }
    }

    #[test]
    fn constrained_parameter_checks_dims() {
        let tols = Tols::default();
        let gds = gen_random(Dims { h0: 2, h: 3, hp: 2 }, 5);
        let od = build_omega(&gds.ds, &tols).unwrap();
        let wrong = Realization::zero(od.gp_dim() + 1, od.g_dim());
        assert!(matches!(
            constrained_parameter(&od, &wrong, tols.check_tol),
            Err(Error::DimMismatch { .. })
        ));
    }
}
