//! Numerical thresholds shared by every module.
//!
//! Invertibility guards use `sing`, algebraic identities use `symp`, inertia
//! counts use `eig`. The grid-level values govern sampled functions and
//! quadratures. All of them can be overridden from a run configuration.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Identity checks such as ‖SᵀJS − J‖.
    pub symp: f64,
    /// Determinant threshold below which a matrix is treated as singular.
    pub sing: f64,
    /// Eigenvalues closer than this to zero make a symmetric matrix degenerate.
    pub eig: f64,
    /// Admissible functions must fall below this at the outermost samples.
    pub tail: f64,
    /// Bound on the estimated cutoff error of truncated oscillatory quadratures.
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symp: 1e-10,
            sing: 1e-12,
            eig: 1e-9,
            tail: 1e-12,
            quad: 1e-6,
        }
    }
}

/// Phase-space truncation for oscillatory integrals: integrate over
/// |z| ≤ R with a raised-cosine taper on the outer `cutoff_fraction` of R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// R as a multiple of the support radius of the integrand.
    pub r_factor: f64,
    pub cutoff_fraction: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            r_factor: 3.0,
            cutoff_fraction: 0.2,
        }
    }
}

impl Truncation {
    /// Raised-cosine cutoff χ(r/R): 1 inside (1 − c)R, 0 beyond R.
    pub fn chi(&self, r: f64, radius: f64) -> f64 {
        let inner = radius * (1.0 - self.cutoff_fraction);
        if r <= inner {
            1.0
        } else if r >= radius {
            0.0
        } else {
            let t = (r - inner) / (radius - inner);
            0.5 * (1.0 + (std::f64::consts::PI * t).cos())
        }
    }

    /// Size of the jump in χ'' at either edge of the taper band.
    pub fn second_derivative_jump(&self, radius: f64) -> f64 {
        let width = self.cutoff_fraction * radius;
        0.5 * (std::f64::consts::PI / width).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_is_one_inside_and_zero_outside() {
        let t = Truncation::default();
        assert_eq!(t.chi(0.0, 10.0), 1.0);
        assert_eq!(t.chi(8.0, 10.0), 1.0);
        assert_eq!(t.chi(10.0, 10.0), 0.0);
        assert!((t.chi(9.0, 10.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_is_monotone_in_the_band() {
        let t = Truncation::default();
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = t.chi(8.0 + 0.02 * k as f64, 10.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }
}
