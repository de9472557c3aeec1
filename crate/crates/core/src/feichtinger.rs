//! Windowed L¹ Wigner norms for the Feichtinger algebra `S₀`.
//!
//! Membership is a condition at infinity and cannot be decided on a finite
//! grid, so everything here reports norms together with the mass found on
//! the outer ring of the lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config_ops::{heisenberg_weyl, qfio_apply, QfioMethod};
use crate::error::{Error, Result};
use crate::grid::{hermite, SampledFunction, C};
use crate::indices::{maslov_from_conley_zehnder, ConleyZehnderIndex, MaslovIndex};
use crate::phase_space::{cross_wigner_on, metaplectic_phase_apply, PhaseForm, PhaseFunction, PhaseGrid};
use crate::symplectic::{generating_from_free, GeneratingFunction, SymplecticMatrix};
use crate::tolerances::{Tolerances, Truncation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S0Report {
    pub norm_value: f64,
    pub window_id: String,
    /// L¹ mass of the Wigner function on the outermost two samples of each axis.
    pub truncation_estimate: f64,
}

/// Analysis windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    Hermite(usize),
    /// `φ₀(x/s)/s^{n/2}`.
    DilatedGaussian(f64),
}

impl Window {
    pub fn id(&self) -> String {
        match self {
            Window::Hermite(k) => format!("hermite:{k}"),
            Window::DilatedGaussian(s) => format!("dilated:{s}"),
        }
    }

    pub fn sample(&self, psi: &SampledFunction) -> Result<SampledFunction> {
        let grid = *psi.grid();
        let hbar = psi.hbar();
        match *self {
            Window::Hermite(k) => hermite(grid, hbar, &vec![k; grid.n()]),
            Window::DilatedGaussian(s) => {
                if !(s > 0.0) {
                    return Err(Error::InvalidInput(format!("dilation {s} must be positive")));
                }
                let n = grid.n() as i32;
                let amp = (PI * hbar).powf(-0.25 * n as f64) * s.powf(-0.5 * n as f64);
                SampledFunction::from_fn(grid, hbar, |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    C::new(amp * (-r2 / (2.0 * hbar * s * s)).exp(), 0.0)
                })
            }
        }
    }

    /// φ₀, φ₁, φ₂ and the √2-dilated Gaussian.
    pub fn standard_set() -> [Window; 4] {
        [
            Window::Hermite(0),
            Window::Hermite(1),
            Window::Hermite(2),
            Window::DilatedGaussian(std::f64::consts::SQRT_2),
        ]
    }
}

fn l1_report(w: &PhaseFunction, window_id: String) -> S0Report {
    let pg = w.grid();
    let ring: f64 = (0..pg.len())
        .filter(|&i| {
            pg.multi_index(i)
                .iter()
                .enumerate()
                .any(|(a, &j)| j < 2 || j + 2 >= pg.axis_points(a))
        })
        .map(|i| w.values()[i].norm() * pg.weight(i))
        .sum();
    S0Report {
        norm_value: w.l1_norm(),
        window_id,
        truncation_estimate: ring,
    }
}

/// `‖W(ψ,φ)‖_{L¹}` on the square phase lattice of the grid of `ψ`.
pub fn s0_norm(psi: &SampledFunction, phi: &SampledFunction) -> Result<S0Report> {
    s0_norm_with_id(psi, phi, "custom".into())
}

pub fn s0_norm_window(psi: &SampledFunction, window: Window) -> Result<S0Report> {
    let phi = window.sample(psi)?;
    s0_norm_with_id(psi, &phi, window.id())
}

fn s0_norm_with_id(psi: &SampledFunction, phi: &SampledFunction, id: String) -> Result<S0Report> {
    let pg = PhaseGrid::square(psi.grid());
    let w = cross_wigner_on(psi, phi, &pg)?;
    Ok(l1_report(&w, id))
}

fn auto_l1(psi: &SampledFunction) -> Result<f64> {
    Ok(s0_norm(psi, psi)?.norm_value)
}

#[derive(Debug, Clone)]
pub enum InvarianceOp {
    Identity,
    Shift(Vec<f64>),
    Metaplectic(GeneratingFunction, MaslovIndex),
}

/// `(‖Wψ‖_{L¹}, ‖W(op ψ)‖_{L¹})`.
pub fn invariance_check(psi: &SampledFunction, op: &InvarianceOp, tol: &Tolerances) -> Result<(f64, f64)> {
    let before = auto_l1(psi)?;
    let after = match op {
        InvarianceOp::Identity => before,
        InvarianceOp::Shift(z0) => auto_l1(&heisenberg_weyl(psi, z0, tol)?)?,
        InvarianceOp::Metaplectic(w, m) => auto_l1(&qfio_apply(w, *m, psi, QfioMethod::Factored)?)?,
    };
    Ok((before, after))
}

/// `(‖S̃W(f,g)‖_{L¹}, ‖W(Ŝf,g)‖_{L¹})`; `S` must be free so that `Ŝ` can
/// be realized in configuration space.
pub fn s0_via_phase_metaplectic(
    f: &SampledFunction,
    g: &SampledFunction,
    s: &SymplecticMatrix,
    nu: ConleyZehnderIndex,
    truncation: &Truncation,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let pg = PhaseGrid::square(f.grid());
    let w_fg = cross_wigner_on(f, g, &pg)?;
    let lhs = metaplectic_phase_apply(s, nu, &w_fg, PhaseForm::S1, truncation, tol)?.l1_norm();
    let w = generating_from_free(s, tol)?;
    let m = maslov_from_conley_zehnder(&w, nu, tol)?;
    let sf = qfio_apply(&w, m, f, QfioMethod::Factored)?;
    let rhs = cross_wigner_on(&sf, g, &pg)?.l1_norm();
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::InvalidInput("non-finite L¹ norm".into()));
    }
    Ok((lhs, rhs))
}

/// Largest ratio `max(r, 1/r)` of `‖W(ψ,φ)‖_{L¹}` over pairs of windows.
pub fn window_equivalence_spread(psi: &SampledFunction, windows: &[Window]) -> Result<f64> {
    let norms: Vec<f64> = windows
        .iter()
        .map(|w| s0_norm_window(psi, *w).map(|r| r.norm_value))
        .collect::<Result<_>>()?;
    let hi = norms.iter().cloned().fold(f64::MIN, f64::max);
    let lo = norms.iter().cloned().fold(f64::MAX, f64::min);
    Ok(hi / lo)
}
