//! Uniqueness and proper-parameterization diagnostics.
//!
//! For a data set, sufficient conditions for a unique interpolant (`T'`
//! isometric, `F = D_A`, or `D_{T'} (+) D_A` inside `F'`) and for the
//! parameterization to be proper (`F = D_A` or `F_A'` full). For a computed
//! interpolant `B`, the defect-side spaces `F_B`, `F_B'` with their coupling
//! unitary `omega_B`, the fiber dimensions `G_B`, `G_B'`, and the block map
//! `H = diag(omega_B, G)` indexing the parameter fiber over `B`.
//!
//! Parameter-to-interpolant injectivity is probed empirically by
//! [`collision_experiment`]: the fibers are compared through the symbol
//! coefficients, so absence of observed collisions is evidence, not proof.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tols;
use crate::dataset::{build_omega, f_a_prime, is_classical_shape, LiftingDataSet};
use crate::error::{Error, Result};
use crate::numlin::{
    classify, defect_frame, eye, max_abs, op_norm, psd_sqrt_frame, range_frame, solve_right,
    vstack, CMat, Frame,
};
use crate::realization::{random_contractive_realization, Realization, TaylorSeries};
use crate::redheffer::{
    gamma_fingerprint, solve, solve_central, symbol_realization, verify, Interpolant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessFlags {
    pub tp_isometry: bool,
    /// `F = D_A`.
    pub f_full: bool,
    /// `F_A' = D_o (+) D_A`.
    pub fap_full: bool,
    /// `D_{T'} (+) D_A` contained in `F'`.
    pub fta_in_fp: bool,
    /// `H0 = H`, `R = I`, `Q` an isometry.
    pub classical_shape: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDims {
    pub dim_f: usize,
    pub dim_d_a: usize,
    pub dim_fp: usize,
    pub dim_codomain: usize,
}

/// Sufficient-condition report for uniqueness and properness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub flags: UniquenessFlags,
    pub dims: SpaceDims,
    pub unique_interpolant_sufficient: bool,
    pub proper_param_sufficient: bool,
}

pub fn uniqueness_report(ds: &LiftingDataSet, tols: &Tols) -> Result<UniquenessReport> {
    let od = build_omega(ds, tols)?;
    let (kc, kt, kd) = od.splits();
    let tp_isometry = classify(&ds.tp, tols.check_tol).is_isometry;
    let f_full = od.dim_f() == kd;
    let fap = f_a_prime(ds, tols)?;
    let fap_full = fap.dim() == fap.ambient_dim();

    // D_{T'} (+) D_A inside F': the embedded coordinate axes survive the
    // projection onto F'.
    let fta_in_fp = if kt + kd == 0 {
        true
    } else {
        let mut embed = CMat::zeros(kc + kt + kd, kt + kd);
        for i in 0..kt + kd {
            embed[(kc + i, i)] = crate::numlin::cplx(1.0, 0.0);
        }
        let residual = op_norm(&(&embed - od.frame_fp.projector() * &embed));
        residual <= tols.check_tol
    };

    let classical_shape = is_classical_shape(ds, tols.check_tol);
    let flags = UniquenessFlags {
        tp_isometry,
        f_full,
        fap_full,
        fta_in_fp,
        classical_shape,
    };
    Ok(UniquenessReport {
        flags,
        dims: SpaceDims {
            dim_f: od.dim_f(),
            dim_d_a: kd,
            dim_fp: od.frame_fp.dim(),
            dim_codomain: od.codomain_dim(),
        },
        unique_interpolant_sufficient: tp_isometry || f_full || fta_in_fp,
        proper_param_sufficient: f_full || fap_full,
    })
}

/// Defect-side data of a computed interpolant: `D_B` from the truncated
/// Gram, the spaces `F_B = range(D_B Q)` and `F_B' = range([D_o; D_B R])`,
/// the coupling unitary `omega_B`, and the fiber dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolantDefectData {
    pub d_b: CMat,
    pub frame_d_b: Frame,
    pub frame_d_circ: Frame,
    /// `F_B` in `D_B` coordinates.
    pub frame_f_b: Frame,
    /// `F_B'` in `D_o (+) D_B` coordinates.
    pub frame_f_bp: Frame,
    pub omega_b: CMat,
    pub dim_g_b: usize,
    pub dim_g_bp: usize,
    /// Bound on the coefficient tail `sum_{n > N} ||Gamma_n||` when the
    /// parameter realization is available and its loop matrix is a strict
    /// contraction; `None` when unbounded or unknown. Every frame dimension
    /// above is exact only up to this caveat.
    pub tail_caveat: Option<f64>,
}

pub fn interpolant_defect(ip: &Interpolant, tols: &Tols) -> Result<InterpolantDefectData> {
    let ds = &ip.ds;
    let (d_a, frame_da) = defect_frame(&ds.a, tols.check_tol, tols.rank_tol)?;
    let (d_circ, frame_d_circ) = psd_sqrt_frame(&ds.gram_gap(), tols.check_tol, tols.rank_tol)?;

    // I - B*B = I - A*A - D_A P (sum Gamma_n^* Gamma_n) P^* D_A at horizon N.
    let gram = ip.gamma.partial_gram();
    let p_amb = frame_da.basis();
    let m = eye(ds.dims.h) - ds.a.adjoint() * &ds.a - &d_a * p_amb * gram * p_amb.adjoint() * &d_a;
    // The truncated Gram may overshoot I by the allowed excess.
    let psd_tol = tols.check_tol.max(1.5 * ip.gamma.gram_excess() + 1e-12);
    let (d_b, frame_d_b) = psd_sqrt_frame(&m, psd_tol, tols.rank_tol)?;

    let x_b = frame_d_b.coords(&(&d_b * &ds.q));
    let y_b = vstack(&[
        &frame_d_circ.coords(&d_circ),
        &frame_d_b.coords(&(&d_b * &ds.r)),
    ]);
    let frame_f_b = range_frame(&x_b, tols.rank_tol);
    let frame_f_bp = range_frame(&y_b, tols.rank_tol);

    let tail_caveat = tail_caveat(ip, tols);

    if frame_f_b.dim() != frame_f_bp.dim() {
        return Err(Error::OmegaBNotIsometric {
            residual: (frame_f_b.dim() as f64 - frame_f_bp.dim() as f64).abs(),
        });
    }
    let k = frame_f_b.dim();
    let omega_b = if k == 0 {
        CMat::zeros(0, 0)
    } else {
        let cx = frame_f_b.coords(&x_b);
        let cy = frame_f_bp.coords(&y_b);
        solve_right(&cx, &cy)?
    };
    let residual = op_norm(&(omega_b.adjoint() * &omega_b - eye(k)))
        .max(op_norm(&(&omega_b * omega_b.adjoint() - eye(k))));
    let allowance = tols
        .check_tol
        .max(1e3 * tail_caveat.unwrap_or(f64::INFINITY).min(1.0));
    if residual > allowance {
        return Err(Error::OmegaBNotIsometric { residual });
    }

    Ok(InterpolantDefectData {
        d_b,
        frame_d_b: frame_d_b.clone(),
        frame_d_circ: frame_d_circ.clone(),
        frame_f_b,
        frame_f_bp,
        omega_b,
        dim_g_b: frame_d_b.dim() - k,
        dim_g_bp: frame_d_circ.dim() + frame_d_b.dim() - k,
        tail_caveat,
    })
}

/// `sum_{n > N} ||Gamma_n||` through the closed-loop realization of the
/// symbol, when available.
fn tail_caveat(ip: &Interpolant, tols: &Tols) -> Option<f64> {
    let param = ip.param_realization.as_ref()?;
    let od = build_omega(&ip.ds, tols).ok()?;
    let symbol = symbol_realization(&od, param).ok()?;
    symbol.tail_bound(ip.truncation)
}

/// True when the Schur-parameter fiber over the interpolant is trivial:
/// `F_B = D_B` or `F_B' = D_o (+) D_B`.
pub fn proper_param_check(defect: &InterpolantDefectData) -> bool {
    defect.frame_f_b.dim() == defect.frame_d_b.dim()
        || defect.frame_f_bp.dim() == defect.frame_d_circ.dim() + defect.frame_d_b.dim()
}

/// The block map `H(lambda) = diag(omega_B, G(lambda)) : D_B -> D_o (+) D_B`
/// in defect coordinates, for a contractive `G : G_B -> G_B'`. Satisfies
/// `H(0)|F_B = omega_B`.
pub fn h_from_g(
    defect: &InterpolantDefectData,
    g: &Realization,
    horizon: usize,
    tol: f64,
) -> Result<TaylorSeries> {
    if g.dim_in() != defect.dim_g_b || g.dim_out() != defect.dim_g_bp {
        return Err(Error::dim(format!(
            "free block must map G_B ({}) into G_B' ({}); got {} -> {}",
            defect.dim_g_b,
            defect.dim_g_bp,
            g.dim_in(),
            g.dim_out()
        )));
    }
    let norm = op_norm(&g.system_matrix());
    if norm > 1.0 + tol {
        return Err(Error::NotContraction { norm, tol });
    }
    let basis_gb = defect.frame_f_b.complement();
    let basis_gbp = defect.frame_f_bp.complement();
    let g_series = g.taylor(horizon);

    let k = defect.frame_f_b.dim();
    let dim_out = defect.frame_d_circ.dim() + defect.frame_d_b.dim();
    let dim_in = defect.frame_d_b.dim();
    let mut coeffs = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let mut h = basis_gbp.basis() * g_series.coeff(n) * basis_gb.basis().adjoint();
        if n == 0 && k > 0 {
            h += defect.frame_f_bp.basis() * &defect.omega_b * defect.frame_f_b.basis().adjoint();
        }
        coeffs.push(h);
    }
    TaylorSeries::new(dim_out, dim_in, coeffs)
}

/// Result of sampling parameters and grouping the interpolants they map to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub params_requested: usize,
    pub distinct_parameters: usize,
    pub distinct_interpolants: usize,
    /// `distinct_parameters - distinct_interpolants`: how many parameter
    /// classes merged on the interpolant side.
    pub collisions: usize,
    /// A collision was observed although the central interpolant reported a
    /// trivial fiber; this contradicts the parameterization being proper.
    pub inconsistent: bool,
}

fn group_count(fingerprints: &[CMat], tol: f64) -> usize {
    let mut reps: Vec<&CMat> = Vec::new();
    for f in fingerprints {
        if !reps
            .iter()
            .any(|r| r.shape() == f.shape() && max_abs(&(*r - f)) <= tol)
        {
            reps.push(f);
        }
    }
    reps.len()
}

/// Samples `n_params` contractive free blocks, solves each, and groups both
/// the parameter coefficient series and the interpolant symbols.
pub fn collision_experiment(
    ds: &LiftingDataSet,
    n_params: usize,
    seed: u64,
    horizon: usize,
    tols: &Tols,
) -> Result<CollisionReport> {
    let od = build_omega(ds, tols)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut param_prints = Vec::with_capacity(n_params);
    let mut ip_prints = Vec::with_capacity(n_params);
    for i in 0..n_params {
        let g = random_contractive_realization(&mut rng, od.g_dim(), od.gp_dim(), i % 3, 0.3, 0.95);
        let ip = solve(ds, &g, horizon, tols)?;
        let param = ip.param_realization.as_ref().expect("in-process solve");
        let f_series = param.taylor(horizon);
        let refs: Vec<&CMat> = f_series.coeffs().iter().collect();
        param_prints.push(crate::numlin::hstack(&refs));
        ip_prints.push(gamma_fingerprint(&ip));
    }
    let group_tol = 1e-9;
    let distinct_parameters = group_count(&param_prints, group_tol);
    let distinct_interpolants = group_count(&ip_prints, group_tol);
    let collisions = distinct_parameters - distinct_interpolants;

    let central = solve_central(ds, horizon, tols)?;
    let _ = verify(&central, tols)?;
    let proper = interpolant_defect(&central, tols)
        .map(|d| proper_param_check(&d))
        .unwrap_or(false);
    Ok(CollisionReport {
        params_requested: n_params,
        distinct_parameters,
        distinct_interpolants,
        collisions,
        inconsistent: proper && collisions > 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_classical, gen_random, scalar_isometry_example, Dims};
    use crate::numlin::cplx;
    use crate::redheffer::solve_seeded;

    fn tols() -> Tols {
        Tols::default()
    }

    #[test]
    fn uniqueness_scalar_isometry() {
        let rep = uniqueness_report(&scalar_isometry_example(), &tols()).unwrap();
        assert!(rep.flags.tp_isometry);
        assert!(rep.unique_interpolant_sufficient);
    }

    #[test]
    fn uniqueness_classical_instance() {
        let g = gen_classical(3, 27);
        let rep = uniqueness_report(&g.ds, &tols()).unwrap();
        assert!(rep.flags.classical_shape);
        assert!(rep.flags.fap_full);
        // Q unitary makes F = range(D_A Q) = D_A.
        assert!(rep.flags.f_full);
        assert!(rep.proper_param_sufficient);
        assert!(rep.unique_interpolant_sufficient);
    }

    #[test]
    fn uniqueness_zero_data_claims_nothing() {
        let ds = LiftingDataSet::zero(Dims { h0: 1, h: 1, hp: 1 });
        let rep = uniqueness_report(&ds, &tols()).unwrap();
        assert!(!rep.flags.tp_isometry);
        assert!(!rep.flags.f_full);
        assert!(!rep.flags.fap_full);
        assert!(!rep.flags.fta_in_fp);
        assert!(!rep.flags.classical_shape);
        assert!(!rep.unique_interpolant_sufficient);
        assert!(!rep.proper_param_sufficient);
    }

    #[test]
    fn defect_data_zero_data_central() {
        // B = 0: D_B = I, F_B = range(D_B Q) = {0}, G_B all of D_B.
        let ds = LiftingDataSet::zero(Dims { h0: 1, h: 1, hp: 1 });
        let ip = solve_central(&ds, 16, &tols()).unwrap();
        let d = interpolant_defect(&ip, &tols()).unwrap();
        assert_eq!(d.frame_d_b.dim(), 1);
        assert_eq!(d.frame_f_b.dim(), 0);
        assert_eq!(d.dim_g_b, 1);
        assert!(!proper_param_check(&d));
        assert!(max_abs(&(&d.d_b - eye(1))) < 1e-12);
    }

    #[test]
    fn defect_data_classical_is_proper() {
        for seed in [4u64, 9, 40] {
            let g = gen_classical(3, seed);
            let ip = solve_central(&g.ds, 32, &tols()).unwrap();
            let d = interpolant_defect(&ip, &tols()).unwrap();
            // D_o = {0} and F_B' fills D_B: the fiber G_B' is trivial.
            assert_eq!(d.dim_g_bp, 0, "seed {seed}");
            assert!(proper_param_check(&d));
        }
    }

    #[test]
    fn defect_dims_balance_on_random_instances() {
        for seed in [3u64, 12, 29] {
            let g = gen_random(Dims { h0: 2, h: 4, hp: 3 }, seed);
            let ip = solve_central(&g.ds, 32, &tols()).unwrap();
            let d = interpolant_defect(&ip, &tols()).unwrap();
            assert_eq!(d.frame_f_b.dim(), d.frame_f_bp.dim());
            let k = d.frame_f_b.dim();
            assert!(
                op_norm(&(d.omega_b.adjoint() * &d.omega_b - eye(k))) < 1e-8,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn h_from_g_pins_omega_b() {
        let g = gen_random(Dims { h0: 2, h: 4, hp: 3 }, 61);
        let ip = solve_central(&g.ds, 32, &tols()).unwrap();
        let d = interpolant_defect(&ip, &tols()).unwrap();

        // G = 0: constant block diagonal.
        let h0 = h_from_g(&d, &Realization::zero(d.dim_g_bp, d.dim_g_b), 8, 1e-8).unwrap();
        let pinned = h0.coeff(0) * d.frame_f_b.basis();
        let target = d.frame_f_bp.basis() * &d.omega_b;
        assert!(max_abs(&(pinned - target)) < 1e-10);

        // Random contractive G.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let g_free = random_contractive_realization(&mut rng, d.dim_g_b, d.dim_g_bp, 1, 0.3, 0.9);
        let h = h_from_g(&d, &g_free, 8, 1e-8).unwrap();
        let pinned = h.coeff(0) * d.frame_f_b.basis();
        assert!(max_abs(&(pinned - d.frame_f_bp.basis() * &d.omega_b)) < 1e-10);
        assert!(h.gram_excess() < 1e-8);
    }

    #[test]
    fn h_from_g_forced_when_fiber_trivial() {
        // Classical: G_B' is trivial, so H carries no free tail.
        let g = gen_classical(2, 15);
        let ip = solve_central(&g.ds, 32, &tols()).unwrap();
        let d = interpolant_defect(&ip, &tols()).unwrap();
        assert_eq!(d.dim_g_bp, 0);
        let h = h_from_g(&d, &Realization::zero(0, d.dim_g_b), 4, 1e-8).unwrap();
        for n in 1..=4 {
            assert!(max_abs(h.coeff(n)) < 1e-14);
        }
    }

    #[test]
    fn collision_scalar_isometry_all_merge() {
        let rep = collision_experiment(&scalar_isometry_example(), 10, 3, 16, &tols()).unwrap();
        assert_eq!(rep.distinct_interpolants, 1);
        assert!(rep.distinct_parameters > 1);
        assert_eq!(rep.collisions, rep.distinct_parameters - 1);
        assert!(!rep.inconsistent);
    }

    #[test]
    fn collision_classical_none() {
        let g = gen_classical(3, 77);
        let rep = collision_experiment(&g.ds, 20, 5, 32, &tols()).unwrap();
        assert_eq!(rep.collisions, 0);
        assert_eq!(rep.distinct_interpolants, rep.distinct_parameters);
        assert!(!rep.inconsistent);
    }

    #[test]
    fn zero_data_kernel_parameters_collide() {
        // On zero scalar data the symbol is the full disk-algebra ball
        // parameterization; free blocks supported on the D_A row all map to
        // the zero symbol.
        let ds = LiftingDataSet::zero(Dims { h0: 1, h: 1, hp: 1 });
        let t = tols();
        let od = build_omega(&ds, &t).unwrap();
        assert_eq!((od.g_dim(), od.gp_dim()), (1, 2));
        let mut fingerprints = Vec::new();
        for val in [0.3, 0.7] {
            let d = CMat::from_fn(2, 1, |i, _| cplx(if i == 1 { val } else { 0.0 }, 0.0));
            let ip = solve(&ds, &Realization::constant(d), 16, &t).unwrap();
            fingerprints.push(gamma_fingerprint(&ip));
        }
        assert!(max_abs(&fingerprints[0]) < 1e-14);
        assert!(max_abs(&fingerprints[1]) < 1e-14);
    }

    #[test]
    fn seeded_interpolants_share_defect_dims_with_central() {
        let g = gen_random(Dims { h0: 2, h: 4, hp: 2 }, 83);
        let central = solve_central(&g.ds, 32, &tols()).unwrap();
        let dc = interpolant_defect(&central, &tols()).unwrap();
        let ip = solve_seeded(&g.ds, 11, 1, 32, &tols()).unwrap();
        let di = interpolant_defect(&ip, &tols()).unwrap();
        assert_eq!(dc.frame_f_b.dim(), dc.frame_f_bp.dim());
        assert_eq!(di.frame_f_b.dim(), di.frame_f_bp.dim());
    }
}
