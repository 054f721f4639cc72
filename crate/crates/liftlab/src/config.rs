use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default relative singular-value cut defining numerical ranges.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Default tolerance for residual checks (unitarity, contractivity, recursion).
pub const DEFAULT_CHECK_TOL: f64 = 1e-8;
/// Default Hardy-symbol truncation horizon.
pub const DEFAULT_TRUNCATION: usize = 32;

/// Numerical tolerances threaded through every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tols {
    /// Relative singular-value cut (w.r.t. the largest singular value) used
    /// when extracting orthonormal range bases.
    pub rank_tol: f64,
    /// Tolerance for pass/fail residual checks.
    pub check_tol: f64,
}

impl Default for Tols {
    fn default() -> Self {
        Tols {
            rank_tol: DEFAULT_RANK_TOL,
            check_tol: DEFAULT_CHECK_TOL,
        }
    }
}

/// Run-wide configuration for the CLI and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Taylor truncation horizon N (N >= 1).
    pub truncation: usize,
    pub rank_tol: f64,
    pub check_tol: f64,
    pub seed: u64,
    /// Evaluation grid in the open unit disk, |lambda| <= 0.9.
    pub grid: Vec<Complex64>,
}

impl RunConfig {
    pub fn tols(&self) -> Tols {
        Tols {
            rank_tol: self.rank_tol,
            check_tol: self.check_tol,
        }
    }

    /// 16 roots of unity scaled by 0.7.
    pub fn default_grid() -> Vec<Complex64> {
        let n = 16;
        (0..n)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                Complex64::from_polar(0.7, th)
            })
            .collect()
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.truncation < 1 {
            return Err(crate::Error::dim("truncation N must be >= 1"));
        }
        if self.rank_tol <= 0.0 || self.check_tol <= 0.0 {
            return Err(crate::Error::dim("tolerances must be positive"));
        }
        if self.grid.iter().any(|l| l.norm() >= 1.0) {
            return Err(crate::Error::dim("grid points must satisfy |lambda| < 1"));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            truncation: DEFAULT_TRUNCATION,
            rank_tol: DEFAULT_RANK_TOL,
            check_tol: DEFAULT_CHECK_TOL,
            seed: 0,
            grid: Self::default_grid(),
        }
    }
}
