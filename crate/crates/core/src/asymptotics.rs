//! Stationary phase for quadratic phases and the small-ħ leading term of
//! `S̃F(z)`, with a brute-force quadrature to compare against.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config_ops::bochner_prefactor;
use crate::error::{Error, Result};
use crate::grid::C;
use crate::indices::{signature, ConleyZehnderIndex};
use crate::linalg::{self, Mat};
use crate::symplectic::{cayley, j_matrix, SymplecticMatrix};
use crate::tolerances::{Tolerances, Truncation};

/// `φ(x) = ½Mx·x + b·x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPhase {
    m: Mat,
    b: Vec<f64>,
    c: f64,
}

impl QuadraticPhase {
    pub fn new(m: Mat, b: Vec<f64>, c: f64, tol: &Tolerances) -> Result<Self> {
        let k = linalg::require_square(&m)?;
        if b.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: b.len(),
            });
        }
        linalg::require_symmetric(&m, tol.symp)?;
        Ok(Self { m, b, c })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn m(&self) -> &Mat {
        &self.m
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        0.5 * linalg::quad_form(&self.m, x) + linalg::dot(&self.b, x) + self.c
    }

    /// `x_c = −M⁻¹b`.
    pub fn critical_point(&self, tol: &Tolerances) -> Result<Vec<f64>> {
        self.require_nondegenerate(tol)?;
        let mi = linalg::inverse(&self.m).ok_or(Error::DegeneratePhase { eigenvalue: 0.0 })?;
        Ok(linalg::mat_vec(&mi, &self.b).iter().map(|v| -v).collect())
    }

    fn require_nondegenerate(&self, tol: &Tolerances) -> Result<i64> {
        signature(&self.m, tol).map_err(|e| match e {
            Error::DegenerateMatrix { eigenvalue } => Error::DegeneratePhase { eigenvalue },
            other => other,
        })
    }
}

/// Leading term of `∫ e^{iλφ(x)} a(x) dx` at the single critical point:
/// `(2π/λ)^{k/2} e^{iλφ(x_c)} e^{iπ sign(M)/4} a(x_c) / √|det M|`.
pub fn stationary_phase(
    phase: &QuadraticPhase,
    amplitude: &dyn Fn(&[f64]) -> C,
    lambda: f64,
    tol: &Tolerances,
) -> Result<C> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda {lambda} must be positive")));
    }
    let sign = phase.require_nondegenerate(tol)?;
    let xc = phase.critical_point(tol)?;
    let k = phase.dim() as f64;
    let det = linalg::det(phase.m()).abs();
    let mag = (2.0 * PI / lambda).powf(0.5 * k) / det.sqrt();
    let arg = lambda * phase.eval(&xc) + 0.25 * PI * sign as f64;
    Ok(amplitude(&xc) * C::from_polar(mag, arg))
}

/// Trapezoid rule for `∫ e^{iλφ(x)} a(x) χ(|x − center|/R) dx` on the cube
/// around `center`, with the resolution doubled until successive values
/// differ by less than `rel_tol` relative. `k ≤ 2`.
pub fn oscillatory_quadrature(
    phase: &QuadraticPhase,
    amplitude: &dyn Fn(&[f64]) -> C,
    lambda: f64,
    center: &[f64],
    radius: f64,
    truncation: &Truncation,
    rel_tol: f64,
) -> Result<C> {
    let k = phase.dim();
    if k == 0 || k > 2 || center.len() != k {
        return Err(Error::Unsupported(format!("quadrature in dimension {k}")));
    }
    let max_points = if k == 1 { 1 << 18 } else { 1 << 13 };
    let integrand = |x: &[f64]| -> C {
        let r = x
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let chi = truncation.chi(r, radius);
        if chi == 0.0 {
            return C::new(0.0, 0.0);
        }
        amplitude(x) * C::from_polar(chi, lambda * phase.eval(x))
    };
    let rule = |points: usize| -> C {
        let h = 2.0 * radius / points as f64;
        let coord = |a: usize, i: usize| center[a] - radius + i as f64 * h;
        let mut acc = C::new(0.0, 0.0);
        if k == 1 {
            for i in 0..points {
                acc += integrand(&[coord(0, i)]);
            }
        } else {
            let mut x = [0.0; 2];
            for i in 0..points {
                x[0] = coord(0, i);
                for j in 0..points {
                    x[1] = coord(1, j);
                    acc += integrand(&x);
                }
            }
        }
        acc * h.powi(k as i32)
    };
    let mut points = 64;
    let mut prev = rule(points);
    loop {
        points *= 2;
        let next = rule(points);
        let change = (next - prev).norm() / next.norm().max(1e-300);
        log::debug!("quadrature with {points} points per axis: relative change {change:.3e}");
        if change < rel_tol {
            return Ok(next);
        }
        if points >= max_points {
            return Err(Error::TruncationError {
                estimate: change,
                tol: rel_tol,
            });
        }
        prev = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    pub leading: C,
    pub quadrature: C,
    pub hbar: f64,
    pub relative_error: f64,
}

pub const RELATIVE_ERROR_FLOOR: f64 = 1e-12;

/// Phase of the integrand of `S̃F(z)`: `φ(z₀) = ½M_S z₀·z₀ − σ(z,z₀)`.
pub fn metaplectic_phase(s: &SymplecticMatrix, z: &[f64], tol: &Tolerances) -> Result<QuadraticPhase> {
    let m = cayley(s, tol)?;
    let b = linalg::mat_vec(&j_matrix(s.n()), z).iter().map(|v| -v).collect();
    QuadraticPhase::new(m.matrix().clone(), b, 0.0, tol)
}

/// `z_c = M_S⁻¹Jz`.
pub fn metaplectic_critical_point(s: &SymplecticMatrix, z: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
    let m = cayley(s, tol)?;
    let mi = linalg::inverse(m.matrix()).ok_or(Error::DegeneratePhase { eigenvalue: 0.0 })?;
    Ok(linalg::mat_vec(&mi, &linalg::mat_vec(&j_matrix(s.n()), z)))
}

/// `φ(z_c) = ½(JM_S⁻¹J)z·z`.
pub fn metaplectic_critical_value(s: &SymplecticMatrix, z: &[f64], tol: &Tolerances) -> Result<f64> {
    let m = cayley(s, tol)?;
    let mi = linalg::inverse(m.matrix()).ok_or(Error::DegeneratePhase { eigenvalue: 0.0 })?;
    let j = j_matrix(s.n());
    Ok(0.5 * linalg::quad_form(&(&j * mi * &j), z))
}

/// `(det M_S, 2^{−2n} det(S+I)/det(S−I))`.
pub fn cayley_determinant_pair(s: &SymplecticMatrix, tol: &Tolerances) -> Result<(f64, f64)> {
    let m = cayley(s, tol)?;
    let direct = linalg::det(m.matrix());
    let formula = 0.25_f64.powi(s.n() as i32) * s.det_plus_identity() / s.det_minus_identity();
    Ok((direct, formula))
}

/// Leading small-ħ term of `S̃F(z)` and the quadrature it approximates.
/// `f` must be negligible outside the ball of radius `f_radius` about 0.
pub fn metaplectic_asymptotic(
    s: &SymplecticMatrix,
    nu: ConleyZehnderIndex,
    f: &dyn Fn(&[f64]) -> C,
    f_radius: f64,
    z: &[f64],
    hbar: f64,
    truncation: &Truncation,
    tol: &Tolerances,
) -> Result<AsymptoticResult> {
    let n = s.n();
    if z.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: z.len(),
        });
    }
    let det_minus = s.det_minus_identity();
    if det_minus.abs() <= 1e-6 {
        return Err(Error::SingularSminusI { det: det_minus });
    }
    let det_plus = s.det_plus_identity();
    if det_plus.abs() <= 1e-6 {
        return Err(Error::DegeneratePhase { eigenvalue: det_plus });
    }
    let phase = metaplectic_phase(s, z, tol)?;
    let amplitude = |z0: &[f64]| -> C {
        let w: Vec<f64> = z.iter().zip(z0).map(|(a, b)| a - 0.5 * b).collect();
        f(&w)
    };
    let pref = bochner_prefactor(s, nu, hbar);
    let leading = pref * stationary_phase(&phase, &amplitude, 1.0 / hbar, tol)?;
    // F(z − z₀/2) lives on the ball of radius 2·f_radius about 2z.
    let center: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
    let radius = 2.0 * f_radius / (1.0 - truncation.cutoff_fraction);
    let quadrature = pref * oscillatory_quadrature(&phase, &amplitude, 1.0 / hbar, &center, radius, truncation, 1e-6)?;
    let relative_error = (leading - quadrature).norm() / quadrature.norm().max(RELATIVE_ERROR_FLOOR);
    Ok(AsymptoticResult {
        leading,
        quadrature,
        hbar,
        relative_error,
    })
}
