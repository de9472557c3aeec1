//! Uniform centered grids and complex samples of functions on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C = Complex64;

/// Centered grid `x_j = −X + j·dx`, `dx = 2X/N`, on each of `n ∈ {1, 2}` axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_width: f64,
    points: usize,
}

impl Grid {
    pub fn new(n: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not in {{1, 2}}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count {points} must be a power of two, at least 8"
            )));
        }
        Ok(Self {
            n,
            half_width,
            points,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// X.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// N, the samples per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coord(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `dxⁿ`.
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    /// Row-major multi-index of a flat index; the first axis varies slowest.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.n == 1 {
            [flat, 0]
        } else {
            [flat / self.points, flat % self.points]
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mi = self.multi_index(flat);
        (0..self.n).map(|a| self.coord(mi[a])).collect()
    }

    /// Fractional index of coordinate `x` on one axis.
    pub fn fractional_index(&self, x: f64) -> f64 {
        (x + self.half_width) / self.dx()
    }
}

/// Samples of `f: ℝⁿ → ℂ` with the value of ħ they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<C>,
    hbar: f64,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<C>, hbar: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidInput(format!("hbar {hbar} must be positive")));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values, hbar })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<C>, hbar: f64) -> Self {
        Self { grid, values, hbar }
    }

    pub fn from_fn(grid: Grid, hbar: f64, f: impl Fn(&[f64]) -> C) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid, values, hbar)
    }

    pub fn zeros(grid: Grid, hbar: f64) -> Self {
        Self::from_parts(grid, vec![C::new(0.0, 0.0); grid.len()], hbar)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C> {
        self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn same_domain(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.hbar != other.hbar {
            return Err(Error::GridMismatch(format!(
                "hbar {} vs {}",
                self.hbar, other.hbar
            )));
        }
        Ok(())
    }

    /// `(f|g) = ∫ f·ḡ`.
    pub fn inner(&self, other: &Self) -> Result<C> {
        self.same_domain(other)?;
        let s: C = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell())
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    /// Relative L² distance `‖f − g‖ / ‖g‖`.
    pub fn relative_distance(&self, reference: &Self) -> Result<f64> {
        self.same_domain(reference)?;
        let diff: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let base: f64 = reference.values.iter().map(|v| v.norm_sqr()).sum();
        Ok((diff / base.max(f64::MIN_POSITIVE)).sqrt())
    }

    pub fn max_abs_difference(&self, other: &Self) -> Result<f64> {
        self.same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm())))
    }

    pub fn scaled(&self, c: C) -> Self {
        Self::from_parts(self.grid, self.values.iter().map(|v| v * c).collect(), self.hbar)
    }

    /// Largest modulus on the outermost two samples of any axis.
    pub fn boundary_max(&self) -> f64 {
        let n = self.grid.points();
        let edge = |i: usize| i < 2 || i + 2 >= n;
        (0..self.values.len())
            .filter(|&i| {
                let mi = self.grid.multi_index(i);
                (0..self.grid.n()).any(|a| edge(mi[a]))
            })
            .fold(0.0_f64, |m, i| m.max(self.values[i].norm()))
    }

    /// Logs a warning when the function has not decayed at the grid edge.
    pub fn check_tail(&self, tail_tol: f64) -> bool {
        let b = self.boundary_max();
        if b > tail_tol {
            log::warn!("boundary samples reach {b:.3e} (tail tolerance {tail_tol:.1e})");
            false
        } else {
            true
        }
    }

    /// Cubic four-point interpolation at an arbitrary point; zero off the grid.
    pub fn interpolate(&self, x: &[f64]) -> C {
        let n = self.grid.points() as isize;
        let mut stencils = [[(0isize, 0.0); 4]; 2];
        for a in 0..self.grid.n() {
            let t = self.grid.fractional_index(x[a]);
            let i0 = t.floor() as isize;
            let u = t - i0 as f64;
            let w = lagrange_weights(u);
            for k in 0..4 {
                stencils[a][k] = (i0 - 1 + k as isize, w[k]);
            }
        }
        let sample = |idx: &[isize]| -> C {
            if idx.iter().any(|&i| i < 0 || i >= n) {
                return C::new(0.0, 0.0);
            }
            let flat = idx.iter().fold(0usize, |acc, &i| acc * n as usize + i as usize);
            self.values[flat]
        };
        let mut acc = C::new(0.0, 0.0);
        if self.grid.n() == 1 {
            for &(i, w) in &stencils[0] {
                if w != 0.0 {
                    acc += sample(&[i]) * w;
                }
            }
        } else {
            for &(i, wi) in &stencils[0] {
                for &(j, wj) in &stencils[1] {
                    let w = wi * wj;
                    if w != 0.0 {
                        acc += sample(&[i, j]) * w;
                    }
                }
            }
        }
        acc
    }
}

/// Weights of the cubic Lagrange stencil at offsets −1, 0, 1, 2 for `u ∈ [0, 1)`.
pub(crate) fn lagrange_weights(u: f64) -> [f64; 4] {
    if u == 0.0 {
        return [0.0, 1.0, 0.0, 0.0];
    }
    [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ]
}

/// Hermite functions `h_0..h_kmax` at `x`, orthonormal in L²(ℝ), oscillator
/// eigenfunctions for the given ħ.
pub fn hermite_values(kmax: usize, x: f64, hbar: f64) -> Vec<f64> {
    let s = x / hbar.sqrt();
    let mut h = Vec::with_capacity(kmax + 1);
    h.push((std::f64::consts::PI * hbar).powf(-0.25) * (-0.5 * s * s).exp());
    if kmax >= 1 {
        h.push(std::f64::consts::SQRT_2 * s * h[0]);
    }
    for k in 1..kmax {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * s * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

/// `h_{k₁}(x₁)…h_{kₙ}(xₙ)` sampled on `grid`.
pub fn hermite(grid: Grid, hbar: f64, orders: &[usize]) -> Result<SampledFunction> {
    if orders.len() != grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.n(),
            found: orders.len(),
        });
    }
    SampledFunction::from_fn(grid, hbar, |x| {
        let v: f64 = orders
            .iter()
            .zip(x)
            .map(|(&k, &xa)| hermite_values(k, xa, hbar)[k])
            .product();
        C::new(v, 0.0)
    })
}

/// Normalized Gaussian `φ₀(x) = (πħ)^{−n/4} e^{−|x|²/2ħ}`.
pub fn gaussian(grid: Grid, hbar: f64) -> Result<SampledFunction> {
    hermite(grid, hbar, &vec![0; grid.n()])
}

/// Coherent state `T̂(z₀)φ₀`, in closed form.
pub fn coherent_state(grid: Grid, hbar: f64, z0: &[f64]) -> Result<SampledFunction> {
    let n = grid.n();
    if z0.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: z0.len(),
        });
    }
    let norm = (std::f64::consts::PI * hbar).powf(-0.25 * n as f64);
    SampledFunction::from_fn(grid, hbar, |x| {
        let mut phase = 0.0;
        let mut r2 = 0.0;
        for a in 0..n {
            let (x0, p0) = (z0[a], z0[n + a]);
            phase += p0 * x[a] - 0.5 * p0 * x0;
            r2 += (x[a] - x0).powi(2);
        }
        C::from_polar(norm * (-r2 / (2.0 * hbar)).exp(), phase / hbar)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 12.0, 512).is_ok());
        assert!(Grid::new(1, 12.0, 500).is_err());
        assert!(Grid::new(1, 12.0, 4).is_err());
        assert!(Grid::new(3, 12.0, 16).is_err());
        assert!(Grid::new(1, -1.0, 16).is_err());
    }

    #[test]
    fn grid_is_centered() {
        let g = Grid::new(1, 12.0, 512).unwrap();
        assert_eq!(g.coord(256), 0.0);
        assert_eq!(g.coord(0), -12.0);
        let g2 = Grid::new(2, 3.0, 16).unwrap();
        assert_eq!(g2.point(g2.flat_index(&[8, 8])), vec![0.0, 0.0]);
        assert_eq!(g2.multi_index(g2.flat_index(&[3, 11])), [3, 11]);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        for hbar in [1.0, 0.3] {
            let g = Grid::new(1, 12.0, 512).unwrap();
            let hs: Vec<_> = (0..=8).map(|k| hermite(g, hbar, &[k]).unwrap()).collect();
            for j in 0..=8 {
                for k in 0..=8 {
                    let ip = hs[j].inner(&hs[k]).unwrap();
                    let expected = if j == k { 1.0 } else { 0.0 };
                    assert!((ip.re - expected).abs() < 1e-12 && ip.im.abs() < 1e-12);
                }
                assert!(hs[j].check_tail(1e-12));
            }
        }
    }

    #[test]
    fn hermite_matches_closed_form() {
        // h_2(x) = (πħ)^{-1/4} (2s² − 1)/√2 e^{−s²/2}, s = x/√ħ.
        let hbar: f64 = 0.5;
        for x in [-1.3, 0.0, 0.7, 2.1] {
            let s = x / hbar.sqrt();
            let expected = (std::f64::consts::PI * hbar).powf(-0.25) * (2.0 * s * s - 1.0)
                / std::f64::consts::SQRT_2
                * (-0.5 * s * s).exp();
            assert!((hermite_values(2, x, hbar)[2] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn two_dimensional_norms() {
        let g = Grid::new(2, 8.0, 64).unwrap();
        let f = hermite(g, 1.0, &[1, 2]).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_interpolation_is_fourth_order() {
        let err = |n: usize| {
            let g = Grid::new(1, 8.0, n).unwrap();
            let f = gaussian(g, 1.0).unwrap();
            let x: f64 = 0.3217;
            let exact = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
            (f.interpolate(&[x]).re - exact).abs()
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e2 < e1 / 10.0, "{e1} {e2}");
        let g = Grid::new(1, 8.0, 64).unwrap();
        let f = gaussian(g, 1.0).unwrap();
        assert_eq!(f.interpolate(&[g.coord(20)]), f.values()[20]);
        assert_eq!(f.interpolate(&[100.0]), C::new(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_samples() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        assert!(SampledFunction::new(g, vec![C::new(0.0, 0.0); 7], 1.0).is_err());
        let mut v = vec![C::new(0.0, 0.0); 8];
        v[3] = C::new(f64::NAN, 0.0);
        assert!(matches!(SampledFunction::new(g, v, 1.0), Err(Error::NonFinite(3))));
        let a = SampledFunction::zeros(g, 1.0);
        let b = SampledFunction::zeros(g, 0.5);
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch(_))));
    }
}
