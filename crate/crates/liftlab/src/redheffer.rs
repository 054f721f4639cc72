//! The solver: maps a constrained Schur-class parameter `F` to the Hardy
//! symbol `Gamma(lambda) = Pi_{T'} F(lambda) (I - lambda Pi_A
//! F(lambda))^{-1}` of the interpolant
//!
//! ```text
//! B h = (A h, sum_n lambda^n Gamma_n (D_A h)),
//! ```
//!
//! by an exact Taylor-coefficient recursion. The canonical isometric lifting
//! of `T'` is never materialized: its intertwining constraint transcribes to
//! the per-coefficient identities
//!
//! ```text
//! Gamma_0 D_A Q = D_{T'} A R,      Gamma_{n+1} D_A Q = Gamma_n D_A R,
//! ```
//!
//! which [`verify`] checks directly. Truncation at `N` is a verification
//! horizon, not an approximation: all checked constraints are exact
//! per-coefficient identities, and only the contractivity of the symbol is a
//! truncated (necessary, monotone) test.

use serde::{Deserialize, Serialize};

use crate::config::Tols;
use crate::dataset::{augment, build_omega, LiftingDataSet, OmegaData};
use crate::error::{Error, Result};
use crate::numlin::{defect_frame, hstack, max_abs, op_norm, solve_right, vstack, CMat};
use crate::realization::{
    constrained_parameter, random_contractive_realization, Realization, TaylorSeries,
};

/// Gram excess above which a truncated symbol is rejected as non-contractive.
pub const DEFAULT_GRAM_TOL: f64 = 1e-6;

/// How the parameter behind an interpolant was chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterDescriptor {
    /// The constant parameter `omega Pi_F`.
    Central,
    /// A seeded random contractive free block with the given state dimension.
    Seeded { seed: u64, state_dim: usize },
    /// Supplied explicitly (e.g. from a file).
    Custom,
}

/// A contractive interpolant, encoded as `A` plus the truncated Taylor
/// coefficients of its Hardy-component symbol in defect coordinates
/// (`Gamma_n : D_A-coords -> D_{T'}-coords`).
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    pub ds: LiftingDataSet,
    pub a: CMat,
    pub gamma: TaylorSeries,
    pub truncation: usize,
    pub parameter: ParameterDescriptor,
    /// The parameter realization when the interpolant was produced in
    /// process; interpolants parsed from files do not carry it.
    pub param_realization: Option<Realization>,
}

/// Per-coefficient residuals of the interpolation constraints.
///
/// `residual_intertwine[0]` is `||Gamma_0 D_A Q - D_{T'} A R||` and entry
/// `n >= 1` is `||Gamma_n D_A Q - Gamma_{n-1} D_A R||`; all residuals are
/// compared against `tol * max(1, ||D_A Q||)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residual_projection: f64,
    pub residual_intertwine: Vec<f64>,
    pub gram_excess: f64,
    pub scale: f64,
    pub threshold: f64,
    pub gram_threshold: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn max_intertwine(&self) -> f64 {
        self.residual_intertwine.iter().cloned().fold(0.0, f64::max)
    }
}

/// Taylor coefficients of `Pi_num F(lambda) (I - lambda Pi_den
/// F(lambda))^{-1}` by the convolution recursion
/// `S_0 = I`, `S_m = sum_{j=1}^m (Pi_den F_{j-1}) S_{m-j}`,
/// `Gamma_n = sum_k (Pi_num F_k) S_{n-k}`.
fn redheffer_taylor(
    f: &TaylorSeries,
    num_rows: std::ops::Range<usize>,
    den_rows: std::ops::Range<usize>,
    horizon: usize,
) -> Result<TaylorSeries> {
    let dim_in = f.dim_in();
    if num_rows.end > f.dim_out() || den_rows.end > f.dim_out() {
        return Err(Error::shape(
            "projection rows exceed the coefficient height",
        ));
    }
    if den_rows.len() != dim_in {
        return Err(Error::shape(
            "denominator projection must be square against the input space",
        ));
    }
    let num = |k: usize| {
        f.coeff(k)
            .view((num_rows.start, 0), (num_rows.len(), dim_in))
            .clone_owned()
    };
    let den = |k: usize| {
        f.coeff(k)
            .view((den_rows.start, 0), (den_rows.len(), dim_in))
            .clone_owned()
    };
    let avail = f.horizon();

    // S_m: power series of the resolvent factor.
    let mut s: Vec<CMat> = Vec::with_capacity(horizon + 1);
    s.push(CMat::identity(dim_in, dim_in));
    for m in 1..=horizon {
        let mut acc = CMat::zeros(dim_in, dim_in);
        for j in 1..=m {
            if j - 1 <= avail {
                acc += den(j - 1) * &s[m - j];
            }
        }
        s.push(acc);
    }

    let mut out = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let mut acc = CMat::zeros(num_rows.len(), dim_in);
        for k in 0..=n.min(avail) {
            acc += num(k) * &s[n - k];
        }
        out.push(acc);
    }
    TaylorSeries::new(num_rows.len(), dim_in, out)
}

/// Hardy-symbol coefficients of the interpolant attached to a parameter with
/// coefficients `f` (rows stacked as `D_o`, `D_{T'}`, `D_A`).
pub fn symbol_taylor(
    f: &TaylorSeries,
    splits: (usize, usize, usize),
    horizon: usize,
) -> Result<TaylorSeries> {
    let (kc, kt, kd) = splits;
    if f.dim_out() != kc + kt + kd || f.dim_in() != kd {
        return Err(Error::shape(format!(
            "parameter coefficients must be {}x{kd}, got {}x{}",
            kc + kt + kd,
            f.dim_out(),
            f.dim_in()
        )));
    }
    redheffer_taylor(f, kc..kc + kt, kc + kt..kc + kt + kd, horizon)
}

/// Closed-loop state-space realization of the symbol
/// `Gamma = Pi_{T'} F (I - lambda Pi_A F)^{-1}`: an independent route to the
/// same coefficients, and the source of tail bounds.
pub fn symbol_realization(od: &OmegaData, param: &Realization) -> Result<Realization> {
    let (kc, kt, kd) = od.splits();
    let x = param.dim_state();
    if param.dim_out() != kc + kt + kd || param.dim_in() != kd {
        return Err(Error::dim("parameter does not match the defect splitting"));
    }
    // Re-block the system matrix of F over rows (E1 = D_o + D_{T'}, E2 = D_A,
    // X) and columns (E2, X); the loop matrix gamma_2 gathers the (E2, X)
    // rows.
    let m_f = param.system_matrix();
    let e1 = kc + kt;
    let gamma1 = m_f.view((0, 0), (e1, kd + x)).clone_owned();
    let gamma2 = m_f.view((e1, 0), (kd + x, kd + x)).clone_owned();
    let b = gamma2.view((0, 0), (kd + x, kd)).clone_owned();
    // Keep only the D_{T'} rows of E1.
    let c = gamma1.view((kc, 0), (kt, kd + x)).clone_owned();
    let d = gamma1.view((kc, 0), (kt, kd)).clone_owned();
    Realization::new(gamma2, b, c, d)
}

fn solve_with_parameter(
    ds: &LiftingDataSet,
    od: &OmegaData,
    param: Realization,
    horizon: usize,
    descriptor: ParameterDescriptor,
) -> Result<Interpolant> {
    let f_series = param.taylor(horizon);
    let gamma = symbol_taylor(&f_series, od.splits(), horizon)?;
    Ok(Interpolant {
        ds: ds.clone(),
        a: ds.a.clone(),
        gamma,
        truncation: horizon,
        parameter: descriptor,
        param_realization: Some(param),
    })
}

/// The central solution: free block `G = 0`, parameter `F = omega Pi_F`.
pub fn solve_central(ds: &LiftingDataSet, horizon: usize, tols: &Tols) -> Result<Interpolant> {
    let od = build_omega(ds, tols)?;
    let g = Realization::zero(od.gp_dim(), od.g_dim());
    let param = constrained_parameter(&od, &g, tols.check_tol)?;
    solve_with_parameter(ds, &od, param, horizon, ParameterDescriptor::Central)
}

/// Interpolant attached to the parameter `F = diag(omega, G)` for a caller
/// supplied contractive `G`.
pub fn solve(
    ds: &LiftingDataSet,
    g: &Realization,
    horizon: usize,
    tols: &Tols,
) -> Result<Interpolant> {
    let od = build_omega(ds, tols)?;
    let param = constrained_parameter(&od, g, tols.check_tol)?;
    solve_with_parameter(ds, &od, param, horizon, ParameterDescriptor::Custom)
}

/// Interpolant for a seeded random contractive free block.
pub fn solve_seeded(
    ds: &LiftingDataSet,
    seed: u64,
    state_dim: usize,
    horizon: usize,
    tols: &Tols,
) -> Result<Interpolant> {
    use rand::SeedableRng;
    let od = build_omega(ds, tols)?;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let g = random_contractive_realization(&mut rng, od.g_dim(), od.gp_dim(), state_dim, 0.3, 0.95);
    let param = constrained_parameter(&od, &g, tols.check_tol)?;
    solve_with_parameter(
        ds,
        &od,
        param,
        horizon,
        ParameterDescriptor::Seeded { seed, state_dim },
    )
}

/// Checks the interpolation constraints of an interpolant against its data
/// set: the projection onto `H'`, the coefficient recursion transcription of
/// the lifting intertwining, and the truncated Gram bound of the symbol.
pub fn verify(ip: &Interpolant, tols: &Tols) -> Result<VerificationReport> {
    let ds = &ip.ds;
    ds.check_shapes()?;
    let (d_a, frame_da) = defect_frame(&ds.a, tols.check_tol, tols.rank_tol)?;
    let (d_tp, frame_dtp) = defect_frame(&ds.tp, tols.check_tol, tols.rank_tol)?;
    if ip.gamma.dim_in() != frame_da.dim() || ip.gamma.dim_out() != frame_dtp.dim() {
        return Err(Error::shape(format!(
            "gamma coefficients are {}x{}, expected {}x{}",
            ip.gamma.dim_out(),
            ip.gamma.dim_in(),
            frame_dtp.dim(),
            frame_da.dim()
        )));
    }

    let c_daq = frame_da.coords(&(&d_a * &ds.q));
    let c_dar = frame_da.coords(&(&d_a * &ds.r));
    let c_dtp_ar = frame_dtp.coords(&(&d_tp * &ds.a * &ds.r));

    let residual_projection = max_abs(&(&ip.a - &ds.a));
    let n = ip.gamma.horizon();
    let mut residual_intertwine = Vec::with_capacity(n + 1);
    residual_intertwine.push(op_norm(&(ip.gamma.coeff(0) * &c_daq - &c_dtp_ar)));
    for k in 1..=n {
        residual_intertwine.push(op_norm(
            &(ip.gamma.coeff(k) * &c_daq - ip.gamma.coeff(k - 1) * &c_dar),
        ));
    }
    let gram_excess = ip.gamma.gram_excess();
    let scale = op_norm(&c_daq).max(1.0);
    let threshold = tols.check_tol * scale;
    let gram_threshold = DEFAULT_GRAM_TOL;
    let pass = residual_projection <= threshold
        && residual_intertwine.iter().all(|&r| r <= threshold)
        && gram_excess <= gram_threshold;
    Ok(VerificationReport {
        residual_projection,
        residual_intertwine,
        gram_excess,
        scale,
        threshold,
        gram_threshold,
        pass,
    })
}

/// Compresses an interpolant of the augmented data set back to the original
/// one: keep the `H` column of `A_o` and the `D_{T'}` rows of the Hardy
/// symbol.
pub fn compress_augmented(
    ip_aug: &Interpolant,
    ds: &LiftingDataSet,
    tols: &Tols,
) -> Result<Interpolant> {
    let aug = augment(ds, tols)?;
    if ip_aug.ds.dims != aug.dims {
        return Err(Error::shape(format!(
            "interpolant dims {:?} do not match the augmentation {:?} of the target data set",
            ip_aug.ds.dims, aug.dims
        )));
    }
    let (hp, h) = (ds.dims.hp, ds.dims.h);

    // Frames of the original and augmented defect spaces.
    let (d_a, frame_da) = defect_frame(&ds.a, tols.check_tol, tols.rank_tol)?;
    let (_, frame_dtp) = defect_frame(&ds.tp, tols.check_tol, tols.rank_tol)?;
    let (d_a_aug, frame_da_aug) = defect_frame(&ip_aug.ds.a, tols.check_tol, tols.rank_tol)?;
    let (_, frame_dtp_aug) = defect_frame(&ip_aug.ds.tp, tols.check_tol, tols.rank_tol)?;

    // Coordinates of D_A on the original space: the target basis for the
    // compressed coefficients.
    let c_da = frame_da.coords(&d_a);

    let mut coeffs = Vec::with_capacity(ip_aug.gamma.horizon() + 1);
    for k in 0..=ip_aug.gamma.horizon() {
        // Ambient Hardy coefficient operator of the augmented interpolant.
        let ambient = frame_dtp_aug.basis()
            * ip_aug.gamma.coeff(k)
            * frame_da_aug.basis().adjoint()
            * &d_a_aug;
        // Keep the H -> H' corner.
        let corner = ambient.view((0, 0), (hp, h)).clone_owned();
        // Express against the original frames: solve Gamma (P* D_A) = coords.
        let target = frame_dtp.coords(&corner);
        coeffs.push(solve_right(&c_da, &target)?);
    }
    let gamma = TaylorSeries::new(frame_dtp.dim(), frame_da.dim(), coeffs)?;

    let a = ip_aug.a.view((0, 0), (hp, h)).clone_owned();
    Ok(Interpolant {
        ds: ds.clone(),
        a,
        gamma,
        truncation: ip_aug.truncation,
        parameter: ip_aug.parameter.clone(),
        param_realization: None,
    })
}

/// Coefficients of `Theta(lambda) = Pi' F(lambda) (I - lambda Pi
/// F(lambda))^{-1}` for a Schur-class `F : H -> H' (+) H` given by its
/// coefficients: the zero-data specialization parameterizing the unit ball
/// of the vector Hardy space.
pub fn hball_theta(
    f: &TaylorSeries,
    dim_hp: usize,
    dim_h: usize,
    horizon: usize,
) -> Result<TaylorSeries> {
    if f.dim_out() != dim_hp + dim_h || f.dim_in() != dim_h {
        return Err(Error::shape(format!(
            "F must be {}x{dim_h}, got {}x{}",
            dim_hp + dim_h,
            f.dim_out(),
            f.dim_in()
        )));
    }
    redheffer_taylor(f, 0..dim_hp, dim_hp..dim_hp + dim_h, horizon)
}

/// Stacks the recursion as one block identity
/// `[Gamma_0; ...; Gamma_N] D_A Q` against `[D_{T'} A R; Gamma_0 D_A R; ...]`;
/// diagnostic helper.
pub fn recursion_blocks(ip: &Interpolant, tols: &Tols) -> Result<(CMat, CMat)> {
    let ds = &ip.ds;
    let (d_a, frame_da) = defect_frame(&ds.a, tols.check_tol, tols.rank_tol)?;
    let (d_tp, frame_dtp) = defect_frame(&ds.tp, tols.check_tol, tols.rank_tol)?;
    let c_daq = frame_da.coords(&(&d_a * &ds.q));
    let c_dar = frame_da.coords(&(&d_a * &ds.r));
    let c_dtp_ar = frame_dtp.coords(&(&d_tp * &ds.a * &ds.r));
    let lhs_blocks: Vec<CMat> = (0..=ip.gamma.horizon())
        .map(|k| ip.gamma.coeff(k) * &c_daq)
        .collect();
    let mut rhs_blocks: Vec<CMat> = vec![c_dtp_ar];
    for k in 0..ip.gamma.horizon() {
        rhs_blocks.push(ip.gamma.coeff(k) * &c_dar);
    }
    let lhs_refs: Vec<&CMat> = lhs_blocks.iter().collect();
    let rhs_refs: Vec<&CMat> = rhs_blocks.iter().collect();
    Ok((vstack(&lhs_refs), vstack(&rhs_refs)))
}

/// Horizontal join of all gamma coefficients, used by the collision
/// experiments to compare interpolants wholesale.
pub fn gamma_fingerprint(ip: &Interpolant) -> CMat {
    let refs: Vec<&CMat> = ip.gamma.coeffs().iter().collect();
    if refs.is_empty() {
        CMat::zeros(0, 0)
    } else {
        hstack(&refs)
    }
}
