//! Phase-space functions, the cross-Wigner transform, Bopp operators and the
//! extended metaplectic operators `S̃`.
//!
//! A phase-space integral `∫ a_σ(z₀) T̃(z₀)F(z) dz₀` is evaluated after the
//! substitution `w = z − z₀/2`:
//!
//! `4ⁿ Σ_w a_σ(2(z − w)) e^{(2i/ħ)σ(z,w)} F(w) ω(w)`
//!
//! so `F` is only ever read at lattice points. `a_σ` is tabulated once on the
//! difference lattice and the symplectic phase factorizes axis by axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config_ops::{bochner_prefactor, BochnerForm, FormCoefficient};
use crate::error::{Error, Result};
use crate::fourier::{ChirpZ, Lattice};
use crate::grid::{hermite, lagrange_weights, Grid, SampledFunction, C};
use crate::indices::ConleyZehnderIndex;
use crate::symplectic::{sigma, SymplecticMatrix};
use crate::tolerances::{Tolerances, Truncation};

/// Product lattice on `ℝ²ⁿ`: `n` x-axes `(X, N)` followed by `n` p-axes
/// `(P, N_p)`, each centered with the first sample at `−X` (resp. `−P`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    n: usize,
    x_half: f64,
    x_points: usize,
    p_half: f64,
    p_points: usize,
}

impl PhaseGrid {
    pub fn new(n: usize, x_half: f64, x_points: usize, p_half: f64, p_points: usize) -> Result<Self> {
        Grid::new(n, x_half, x_points)?;
        Grid::new(n, p_half, p_points)?;
        Ok(Self {
            n,
            x_half,
            x_points,
            p_half,
            p_points,
        })
    }

    /// The p-axes copy the x-axes.
    pub fn square(grid: &Grid) -> Self {
        Self {
            n: grid.n(),
            x_half: grid.half_width(),
            x_points: grid.points(),
            p_half: grid.half_width(),
            p_points: grid.points(),
        }
    }

    /// The lattice reached by a discrete transform over lags `y = 2k·dx`:
    /// `dp = πħ/(2X)`, one full period `πħ/dx` of momenta.
    pub fn dual(grid: &Grid, hbar: f64) -> Self {
        let pts = grid.points();
        Self {
            n: grid.n(),
            x_half: grid.half_width(),
            x_points: pts,
            p_half: pts as f64 * PI * hbar / (4.0 * grid.half_width()),
            p_points: pts,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn x_half(&self) -> f64 {
        self.x_half
    }
    pub fn x_points(&self) -> usize {
        self.x_points
    }
    pub fn p_half(&self) -> f64 {
        self.p_half
    }
    pub fn p_points(&self) -> usize {
        self.p_points
    }

    pub fn x_grid(&self) -> Grid {
        Grid::new(self.n, self.x_half, self.x_points).expect("validated")
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_half / self.x_points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_half / self.p_points as f64
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn axis_points(&self, a: usize) -> usize {
        if a < self.n {
            self.x_points
        } else {
            self.p_points
        }
    }

    pub fn axis_step(&self, a: usize) -> f64 {
        if a < self.n {
            self.dx()
        } else {
            self.dp()
        }
    }

    pub fn axis_coord(&self, a: usize, i: usize) -> f64 {
        let half = if a < self.n { self.x_half } else { self.p_half };
        -half + i as f64 * self.axis_step(a)
    }

    pub fn len(&self) -> usize {
        (self.x_points * self.p_points).pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes()];
        for a in (0..self.axes()).rev() {
            let m = self.axis_points(a);
            idx[a] = flat % m;
            flat /= m;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .enumerate()
            .fold(0, |acc, (a, &i)| acc * self.axis_points(a) + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coord(a, i))
            .collect()
    }

    /// Product-trapezoid weight; the first sample of each axis (at `−X`
    /// or `−P`, whose partner `+X` is not stored) counts half.
    pub fn weight(&self, flat: usize) -> f64 {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| {
                let h = self.axis_step(a);
                if i == 0 {
                    0.5 * h
                } else {
                    h
                }
            })
            .product()
    }

    /// Corner-to-corner length of the lattice box.
    pub fn diagonal(&self) -> f64 {
        2.0 * (self.n as f64 * (self.x_half.powi(2) + self.p_half.powi(2))).sqrt()
    }
}

/// Samples of `F: ℝ²ⁿ → ℂ` with their ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFunction {
    grid: PhaseGrid,
    values: Vec<C>,
    hbar: f64,
}

impl PhaseFunction {
    pub fn new(grid: PhaseGrid, values: Vec<C>, hbar: f64) -> Result<Self> {
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

    pub fn from_fn(grid: PhaseGrid, hbar: f64, f: impl Fn(&[f64]) -> C) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid, values, hbar)
    }

    pub fn zeros(grid: PhaseGrid, hbar: f64) -> Self {
        Self {
            grid,
            values: vec![C::new(0.0, 0.0); grid.len()],
            hbar,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C] {
        &self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn same_domain(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.hbar != other.hbar {
            return Err(Error::GridMismatch(format!("hbar {} vs {}", self.hbar, other.hbar)));
        }
        Ok(())
    }

    /// `(F|G) = ∫ F·Ḡ` by the product trapezoid rule.
    pub fn inner(&self, other: &Self) -> Result<C> {
        self.same_domain(other)?;
        Ok((0..self.values.len())
            .map(|i| self.values[i] * other.values[i].conj() * self.grid.weight(i))
            .sum())
    }

    pub fn norm(&self) -> f64 {
        (0..self.values.len())
            .map(|i| self.values[i].norm_sqr() * self.grid.weight(i))
            .sum::<f64>()
            .sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        (0..self.values.len())
            .map(|i| self.values[i].norm() * self.grid.weight(i))
            .sum()
    }

    /// `∫ F`.
    pub fn integral(&self) -> C {
        (0..self.values.len())
            .map(|i| self.values[i] * self.grid.weight(i))
            .sum()
    }

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
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            hbar: self.hbar,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
            hbar: self.hbar,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_domain(other)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            hbar: self.hbar,
        })
    }

    /// Largest modulus on the outermost two samples of any axis.
    pub fn boundary_max(&self) -> f64 {
        (0..self.values.len())
            .filter(|&i| {
                self.grid
                    .multi_index(i)
                    .iter()
                    .enumerate()
                    .any(|(a, &j)| j < 2 || j + 2 >= self.grid.axis_points(a))
            })
            .fold(0.0_f64, |m, i| m.max(self.values[i].norm()))
    }

    /// Tensor-product cubic interpolation; zero off the lattice.
    pub fn interpolate(&self, z: &[f64]) -> C {
        let axes = self.grid.axes();
        let mut stencil = Vec::with_capacity(axes);
        for (a, &za) in z.iter().enumerate().take(axes) {
            let half = if a < self.grid.n() {
                self.grid.x_half()
            } else {
                self.grid.p_half()
            };
            let t = (za + half) / self.grid.axis_step(a);
            let i0 = t.floor() as isize;
            let w = lagrange_weights(t - i0 as f64);
            stencil.push((i0 - 1, w));
        }
        let mut acc = C::new(0.0, 0.0);
        let mut counter = vec![0usize; axes];
        'outer: loop {
            let mut weight = 1.0;
            let mut flat = 0usize;
            let mut inside = true;
            for a in 0..axes {
                let (base, w) = &stencil[a];
                weight *= w[counter[a]];
                let i = base + counter[a] as isize;
                let m = self.grid.axis_points(a) as isize;
                if i < 0 || i >= m {
                    inside = false;
                }
                flat = flat * m as usize + i.max(0) as usize;
            }
            if inside && weight != 0.0 {
                acc += self.values[flat] * weight;
            }
            for a in (0..axes).rev() {
                counter[a] += 1;
                if counter[a] < 4 {
                    continue 'outer;
                }
                counter[a] = 0;
            }
            break;
        }
        acc
    }
}

fn transform_axes(data: Vec<C>, dims: &mut [usize], axis_transforms: &[(usize, &ChirpZ)]) -> Vec<C> {
    let mut data = data;
    for &(axis, cz) in axis_transforms {
        let n_in = dims[axis];
        let n_out = cz.output_len();
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();
        let mut out = vec![C::new(0.0, 0.0); outer * n_out * inner];
        let mut line = vec![C::new(0.0, 0.0); n_in];
        let mut res = vec![C::new(0.0, 0.0); n_out];
        let mut buf = Vec::new();
        for o in 0..outer {
            for i in 0..inner {
                for k in 0..n_in {
                    line[k] = data[(o * n_in + k) * inner + i];
                }
                cz.apply_with(&line, &mut res, &mut buf);
                for k in 0..n_out {
                    out[(o * n_out + k) * inner + i] = res[k];
                }
            }
        }
        dims[axis] = n_out;
        data = out;
    }
    data
}

/// `W(f,g)` on the dual lattice of the grid of `f`.
pub fn cross_wigner(f: &SampledFunction, g: &SampledFunction) -> Result<PhaseFunction> {
    let pg = PhaseGrid::dual(f.grid(), f.hbar());
    cross_wigner_on(f, g, &pg)
}

/// `W(f,g)(x,p) = (2πħ)^{−n} ∫ e^{−(i/ħ)p·y} f(x + y/2) ḡ(x − y/2) dy`.
///
/// Lags run over `y = 2k·dx`, so `f` and `g` are read at `x ± k·dx`, which
/// are grid points; the sum over `k` is a chirp-z transform to the p-axes of
/// `pg`, whose x-axes must match the grid of `f`.
pub fn cross_wigner_on(f: &SampledFunction, g: &SampledFunction, pg: &PhaseGrid) -> Result<PhaseFunction> {
    f.same_domain(g)?;
    let grid = *f.grid();
    if pg.x_grid() != grid {
        return Err(Error::GridMismatch(format!(
            "phase grid x-axes {:?} do not match {:?}",
            pg.x_grid(),
            grid
        )));
    }
    let n = grid.n();
    let hbar = f.hbar();
    let pts = grid.points();
    let half = (pts / 2) as i64;
    let lags = pts + 1;
    let dx = grid.dx();
    let cz = ChirpZ::new(
        Lattice::new(-2.0 * half as f64 * dx, 2.0 * dx, lags),
        Lattice::new(-pg.p_half(), pg.dp(), pg.p_points()),
        -1.0 / hbar,
    );
    let pref = (2.0 * dx / (2.0 * PI * hbar)).powi(n as i32);
    let np_total = pg.p_points().pow(n as u32);
    let mut values = vec![C::new(0.0, 0.0); pg.len()];
    let transforms: Vec<(usize, &ChirpZ)> = (0..n).rev().map(|a| (a, &cz)).collect();
    let fv = f.values();
    let gv = g.values();
    let in_range = |v: i64| (0..pts as i64).contains(&v);
    for xi in 0..grid.len() {
        let xm = grid.multi_index(xi);
        let mut lag_values = vec![C::new(0.0, 0.0); lags.pow(n as u32)];
        for (li, slot) in lag_values.iter_mut().enumerate() {
            let k: Vec<i64> = if n == 1 {
                vec![li as i64 - half]
            } else {
                vec![(li / lags) as i64 - half, (li % lags) as i64 - half]
            };
            let plus: Vec<i64> = (0..n).map(|a| xm[a] as i64 + k[a]).collect();
            let minus: Vec<i64> = (0..n).map(|a| xm[a] as i64 - k[a]).collect();
            if plus.iter().chain(&minus).all(|&v| in_range(v)) {
                let fp = plus.iter().fold(0usize, |acc, &v| acc * pts + v as usize);
                let gm = minus.iter().fold(0usize, |acc, &v| acc * pts + v as usize);
                *slot = fv[fp] * gv[gm].conj();
            }
        }
        let mut dims = vec![lags; n];
        let out = transform_axes(lag_values, &mut dims, &transforms);
        for (pi, v) in out.into_iter().enumerate() {
            values[xi * np_total + pi] = v * pref;
        }
    }
    Ok(PhaseFunction {
        grid: *pg,
        values,
        hbar,
    })
}

/// `T̃(z₀)F(z) = e^{−(i/ħ)σ(z,z₀)} F(z − z₀/2)`. Half-shifts on the lattice
/// are index shifts; others use cubic interpolation.
pub fn phase_shift(big_f: &PhaseFunction, z0: &[f64], tol: &Tolerances) -> Result<PhaseFunction> {
    let pg = big_f.grid;
    let axes = pg.axes();
    if z0.len() != axes {
        return Err(Error::DimensionMismatch {
            expected: axes,
            found: z0.len(),
        });
    }
    let hbar = big_f.hbar;
    let shifts: Vec<f64> = (0..axes).map(|a| 0.5 * z0[a] / pg.axis_step(a)).collect();
    let aligned = shifts.iter().all(|s| (s - s.round()).abs() < 1e-9);
    let lost = (0..pg.len())
        .filter(|&i| {
            let z = pg.point(i);
            (0..axes).any(|a| {
                let t = (z[a] + 0.5 * z0[a] - pg.axis_coord(a, 0)) / pg.axis_step(a);
                t < 0.0 || t > (pg.axis_points(a) - 1) as f64
            })
        })
        .fold(0.0_f64, |m, i| m.max(big_f.values[i].norm()));
    if lost > tol.tail {
        return Err(Error::OutOfDomain(format!(
            "samples of modulus {lost:.3e} leave the phase grid"
        )));
    }
    let values = (0..pg.len())
        .map(|i| {
            let z = pg.point(i);
            let src_val = if aligned {
                let mi = pg.multi_index(i);
                let src: Option<Vec<usize>> = (0..axes)
                    .map(|a| {
                        let s = mi[a] as i64 - shifts[a].round() as i64;
                        (0..pg.axis_points(a) as i64).contains(&s).then_some(s as usize)
                    })
                    .collect();
                src.map_or(C::new(0.0, 0.0), |s| big_f.values[pg.flat_index(&s)])
            } else {
                let src: Vec<f64> = z.iter().zip(z0).map(|(a, b)| a - 0.5 * b).collect();
                big_f.interpolate(&src)
            };
            src_val * C::from_polar(1.0, -sigma(&z, z0) / hbar)
        })
        .collect();
    Ok(PhaseFunction {
        grid: pg,
        values,
        hbar,
    })
}

/// A twisted symbol `a_σ` given pointwise, optionally known to vanish
/// outside a ball of radius `support`.
pub struct TwistedSymbol<'a> {
    eval: Box<dyn Fn(&[f64]) -> C + 'a>,
    support: Option<f64>,
}

impl<'a> TwistedSymbol<'a> {
    pub fn new(eval: impl Fn(&[f64]) -> C + 'a) -> Self {
        Self {
            eval: Box::new(eval),
            support: None,
        }
    }

    pub fn with_support(eval: impl Fn(&[f64]) -> C + 'a, radius: f64) -> Self {
        Self {
            eval: Box::new(eval),
            support: Some(radius),
        }
    }

    pub fn eval(&self, z: &[f64]) -> C {
        (self.eval)(z)
    }

    /// Twisted symbol of the Weyl symbol `a(z) = e^{−|z − c|²/2s²}`:
    /// `a_σ(z) = (s²/ħ)ⁿ e^{−(i/ħ)σ(z,c)} e^{−s²|z|²/2ħ²}`.
    pub fn gaussian(center: Vec<f64>, width: f64, hbar: f64) -> TwistedSymbol<'static> {
        let n = center.len() / 2;
        let amp = (width * width / hbar).powi(n as i32);
        let radius = 9.0 * hbar / width;
        TwistedSymbol::with_support(
            move |z: &[f64]| {
                let r2: f64 = z.iter().map(|v| v * v).sum();
                C::from_polar(
                    amp * (-width * width * r2 / (2.0 * hbar * hbar)).exp(),
                    -sigma(z, &center) / hbar,
                )
            },
            radius,
        )
    }
}

/// `ÃF(z) = (2πħ)^{−n} ∫ a_σ(z₀) χ(|z₀|/R) T̃(z₀)F(z) dz₀` with
/// `R = r_factor × diagonal of the lattice`.
pub fn bopp_apply(
    symbol: &TwistedSymbol<'_>,
    big_f: &PhaseFunction,
    truncation: &Truncation,
    tol: &Tolerances,
) -> Result<PhaseFunction> {
    let pg = big_f.grid;
    let n = pg.n();
    let axes = pg.axes();
    let hbar = big_f.hbar;
    let radius = truncation.r_factor * pg.diagonal();
    let inner = radius * (1.0 - truncation.cutoff_fraction);

    // a_σ on the difference lattice z − w; differences on axis a run over
    // −(N_a − 1)..=(N_a − 1).
    let dims: Vec<usize> = (0..axes).map(|a| 2 * pg.axis_points(a) - 1).collect();
    let table_len: usize = dims.iter().product();
    let mut table = vec![C::new(0.0, 0.0); table_len];
    let mut live_diffs = Vec::new();
    let mut z0 = vec![0.0; axes];
    for (t, slot) in table.iter_mut().enumerate() {
        let mut rem = t;
        for a in (0..axes).rev() {
            let d = (rem % dims[a]) as f64 - (pg.axis_points(a) - 1) as f64;
            rem /= dims[a];
            z0[a] = 2.0 * d * pg.axis_step(a);
        }
        let r = z0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if symbol.support.is_some_and(|s| r > s) {
            continue;
        }
        let chi = truncation.chi(r, radius);
        if chi == 0.0 {
            continue;
        }
        let v = symbol.eval(&z0) * chi;
        if v != C::new(0.0, 0.0) {
            *slot = v;
            live_diffs.push(t);
        }
    }

    // e^{(2i/ħ)σ(z,w)} = Π_a e^{(2i/ħ)p_{z,a} x_{w,a}} e^{−(2i/ħ)x_{z,a} p_{w,a}}.
    let (nx, np) = (pg.x_points(), pg.p_points());
    let mut px_phase = vec![C::new(0.0, 0.0); np * nx];
    for k in 0..np {
        for i in 0..nx {
            let ph = 2.0 * pg.axis_coord(n, k) * pg.axis_coord(0, i) / hbar;
            px_phase[k * nx + i] = C::from_polar(1.0, ph);
        }
    }

    let peak = big_f.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let support: Vec<usize> = (0..pg.len())
        .filter(|&i| big_f.values[i].norm() > 1e-16 * peak)
        .collect();
    let weighted: Vec<C> = (0..pg.len())
        .map(|i| big_f.values[i] * pg.weight(i))
        .collect();

    // Truncation: F-mass at points w whose pairs reach the taper band.
    let mut tapered = 0.0;
    for &w in &support {
        let wz = pg.point(w);
        let far: f64 = (0..axes)
            .map(|a| {
                let lo = pg.axis_coord(a, 0);
                let hi = pg.axis_coord(a, pg.axis_points(a) - 1);
                (wz[a] - lo).abs().max((hi - wz[a]).abs()).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        if 2.0 * far > inner {
            tapered += big_f.values[w].norm_sqr() * pg.weight(w);
        }
    }
    let estimate = tapered.sqrt() / big_f.norm().max(f64::MIN_POSITIVE);
    if estimate > tol.quad {
        return Err(Error::TruncationError {
            estimate,
            tol: tol.quad,
        });
    }

    let strides: Vec<usize> = (0..axes)
        .map(|a| dims[a + 1..].iter().product())
        .collect();
    // Conjugated transpose, so both phase factors are rows for fixed z.
    let mut px_conj_t = vec![C::new(0.0, 0.0); nx * np];
    for k in 0..np {
        for i in 0..nx {
            px_conj_t[i * np + k] = px_phase[k * nx + i].conj();
        }
    }
    let sigma_phase = |zi: &[usize], wi: &[usize]| -> C {
        let mut acc = C::new(1.0, 0.0);
        for a in 0..n {
            acc *= px_phase[zi[n + a] * nx + wi[a]] * px_conj_t[zi[a] * np + wi[n + a]];
        }
        acc
    };

    struct Source {
        offset: usize,
        x: [usize; 2],
        p: [usize; 2],
        value: C,
    }
    let sources: Vec<Source> = support
        .iter()
        .map(|&w| {
            let wi = pg.multi_index(w);
            let mut x = [0; 2];
            let mut p = [0; 2];
            for a in 0..n {
                x[a] = wi[a];
                p[a] = wi[n + a];
            }
            Source {
                offset: (0..axes)
                    .map(|a| (pg.axis_points(a) - 1 - wi[a]) * strides[a])
                    .sum(),
                x,
                p,
                value: weighted[w],
            }
        })
        .collect();

    let by_symbol = live_diffs.len() < sources.len();
    let pref = (4.0 / (2.0 * PI * hbar)).powi(n as i32);
    let mut values = vec![C::new(0.0, 0.0); pg.len()];
    let mut wi = vec![0usize; axes];
    for (zf, out) in values.iter_mut().enumerate() {
        let zi = pg.multi_index(zf);
        let mut acc = C::new(0.0, 0.0);
        if by_symbol {
            'diff: for &t in &live_diffs {
                let mut rem = t;
                for a in (0..axes).rev() {
                    let d = (rem % dims[a]) as isize - (pg.axis_points(a) - 1) as isize;
                    rem /= dims[a];
                    let w = zi[a] as isize - d;
                    if w < 0 || w >= pg.axis_points(a) as isize {
                        continue 'diff;
                    }
                    wi[a] = w as usize;
                }
                let fw = weighted[pg.flat_index(&wi)];
                if fw != C::new(0.0, 0.0) {
                    acc += table[t] * sigma_phase(&zi, &wi) * fw;
                }
            }
        } else {
            let base: usize = (0..axes).map(|a| zi[a] * strides[a]).sum();
            let table_z = &table[base..];
            if n == 1 {
                let row_x = &px_phase[zi[1] * nx..(zi[1] + 1) * nx];
                let row_p = &px_conj_t[zi[0] * np..(zi[0] + 1) * np];
                for src in &sources {
                    acc += table_z[src.offset] * (row_x[src.x[0]] * row_p[src.p[0]]) * src.value;
                }
            } else {
                for src in &sources {
                    let mut ph = C::new(1.0, 0.0);
                    for a in 0..n {
                        ph *= px_phase[zi[n + a] * nx + src.x[a]] * px_conj_t[zi[a] * np + src.p[a]];
                    }
                    acc += table_z[src.offset] * ph * src.value;
                }
            }
        }
        *out = acc * pref;
    }
    Ok(PhaseFunction {
        grid: pg,
        values,
        hbar,
    })
}

/// Integral forms of `S̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseForm {
    /// `∫ e^{(i/2ħ)M_S z₀·z₀} T̃(z₀) dz₀`.
    S1,
    /// `∫ T̃(Sz) T̃(−z) dz`.
    Alfa1,
    /// `∫ e^{−(i/2ħ)σ(Sz,z)} T̃((S−I)z) dz`.
    Alfa2,
}

/// Phase `θ` (times ħ) in `T̃(a)T̃(b) = e^{iθ/ħ} T̃(a + b)`, read off by
/// composing the two displacements at `z = 0`.
fn tilde_product_phase(a: &[f64], b: &[f64]) -> f64 {
    let z = vec![0.0; a.len()];
    let za: Vec<f64> = z.iter().zip(a).map(|(u, v)| u - 0.5 * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(u, v)| u + v).collect();
    -sigma(&z, a) - sigma(&za, b) + sigma(&z, &ab)
}

/// `S̃F` for the Conley–Zehnder branch `ν`, by the selected integral form.
pub fn metaplectic_phase_apply(
    s: &SymplecticMatrix,
    nu: ConleyZehnderIndex,
    big_f: &PhaseFunction,
    form: PhaseForm,
    truncation: &Truncation,
    tol: &Tolerances,
) -> Result<PhaseFunction> {
    if s.n() != big_f.grid.n() {
        return Err(Error::DimensionMismatch {
            expected: big_f.grid.n(),
            found: s.n(),
        });
    }
    let det = s.det_minus_identity();
    if det.abs() <= 1e-6 {
        return Err(Error::SingularSminusI { det });
    }
    let hbar = big_f.hbar;
    // (2πħ)ⁿ × the common prefactor, since bopp_apply supplies (2πħ)^{−n}.
    let amp = bochner_prefactor(s, nu, hbar) * (2.0 * PI * hbar).powi(s.n() as i32);
    let symbol = match form {
        PhaseForm::S1 | PhaseForm::Alfa2 => {
            let bf = if form == PhaseForm::S1 {
                BochnerForm::S1
            } else {
                BochnerForm::S2
            };
            let coeff = FormCoefficient::new(bf, s, hbar, tol)?;
            TwistedSymbol::new(move |z0| amp * C::from_polar(1.0, coeff.phase(z0)))
        }
        PhaseForm::Alfa1 => {
            let dim = 2 * s.n();
            let smi = s.matrix() - crate::linalg::Mat::identity(dim, dim);
            let inv = crate::linalg::inverse(&smi).ok_or(Error::SingularSminusI { det })?;
            let s = s.clone();
            TwistedSymbol::new(move |z0| {
                let u = crate::linalg::mat_vec(&inv, z0);
                let a = s.apply(&u);
                let b: Vec<f64> = u.iter().map(|v| -v).collect();
                amp * C::from_polar(1.0, tilde_product_phase(&a, &b) / hbar)
            })
        }
    };
    check_kernel_bandwidth(s, big_f, tol)?;
    bopp_apply(&symbol, big_f, truncation, tol)
}

/// Largest `|k|` along `axis` at which the discrete spectrum of `F` exceeds
/// `rel` times its peak.
fn spectral_radius(big_f: &PhaseFunction, axis: usize, rel: f64) -> f64 {
    let pg = big_f.grid;
    let m = pg.axis_points(axis);
    let inner: usize = (axis + 1..pg.axes()).map(|a| pg.axis_points(a)).product();
    let outer = pg.len() / (m * inner);
    let fft = rustfft::FftPlanner::new().plan_fft_forward(m);
    let mut envelope = vec![0.0_f64; m];
    let mut line = vec![C::new(0.0, 0.0); m];
    for o in 0..outer {
        for i in 0..inner {
            for k in 0..m {
                line[k] = big_f.values[(o * m + k) * inner + i];
            }
            fft.process(&mut line);
            for (e, v) in envelope.iter_mut().zip(&line) {
                *e = e.max(v.norm());
            }
        }
    }
    let peak = envelope.iter().cloned().fold(0.0, f64::max);
    let dk = 2.0 * PI / (m as f64 * pg.axis_step(axis));
    (0..m)
        .filter(|&k| envelope[k] > rel * peak)
        .map(|k| {
            let signed = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            signed.abs() * dk
        })
        .fold(0.0, f64::max)
}

/// The kernel `a_σ(2(z − w))e^{(2i/ħ)σ(z,w)}` oscillates in `w` with
/// frequency `(2/ħ)(J − 2M_S)z + (4/ħ)M_S w`. The chirp spread over the
/// support of `F` and the bandwidth of `F` widen the band about the centre
/// frequency; the whole band must stay below `2π/h` on each axis.
fn check_kernel_bandwidth(s: &SymplecticMatrix, big_f: &PhaseFunction, tol: &Tolerances) -> Result<()> {
    const LEVEL: f64 = 1e-6;
    let pg = big_f.grid;
    let axes = pg.axes();
    let hbar = big_f.hbar;
    let m = crate::symplectic::cayley(s, tol)?.matrix().clone();
    let k_lin = (crate::symplectic::j_matrix(s.n()) - &m * 2.0) * (2.0 / hbar);
    let peak = big_f.values.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    let mut reach = vec![0.0_f64; axes];
    for (i, v) in big_f.values.iter().enumerate() {
        if v.norm() > LEVEL * peak {
            for (a, x) in pg.point(i).iter().enumerate() {
                reach[a] = reach[a].max(x.abs());
            }
        }
    }
    for a in 0..axes {
        let corner: f64 = (0..axes)
            .map(|b| {
                let half = if b < pg.n() { pg.x_half() } else { pg.p_half() };
                k_lin[(a, b)].abs() * half
            })
            .sum();
        let spread: f64 = (0..axes).map(|b| 4.0 / hbar * m[(a, b)].abs() * reach[b]).sum();
        let needed = corner + spread.hypot(spectral_radius(big_f, a, LEVEL));
        let available = 2.0 * PI / pg.axis_step(a);
        if needed >= available {
            return Err(Error::InvalidGrid(format!(
                "phase lattice too coarse for this operator: axis {a} needs frequency {needed:.1}, sampling gives {available:.1}"
            )));
        }
    }
    Ok(())
}

/// `(F|G)_{L²(ℝ²ⁿ)}`.
pub fn moyal_inner(big_f: &PhaseFunction, big_g: &PhaseFunction) -> Result<C> {
    big_f.inner(big_g)
}

/// `(2πħ)^{n/2} W(h_j, h_k)` for `j ≤ j_max`, `k ≤ k_max`, ordered with `k`
/// varying fastest; `n = 1`.
pub fn wigner_basis(
    j_max: usize,
    k_max: usize,
    hbar: f64,
    grid: &Grid,
    pg: &PhaseGrid,
) -> Result<Vec<PhaseFunction>> {
    if grid.n() != 1 {
        return Err(Error::Unsupported("Wigner bases are built for n = 1".into()));
    }
    if j_max.max(k_max) > 8 {
        return Err(Error::InvalidInput("Hermite orders above 8 are not admissible".into()));
    }
    let hs: Vec<SampledFunction> = (0..=j_max.max(k_max))
        .map(|k| hermite(*grid, hbar, &[k]))
        .collect::<Result<_>>()?;
    let scale = C::new((2.0 * PI * hbar).sqrt(), 0.0);
    let mut out = Vec::new();
    for j in 0..=j_max {
        for k in 0..=k_max {
            out.push(cross_wigner_on(&hs[j], &hs[k], pg)?.scaled(scale));
        }
    }
    Ok(out)
}

/// Coefficients `(F|B_i)` of `F` against an orthonormal family.
pub fn basis_coefficients(big_f: &PhaseFunction, basis: &[PhaseFunction]) -> Result<Vec<C>> {
    basis.iter().map(|b| big_f.inner(b)).collect()
}

pub fn basis_expand(coeffs: &[C], basis: &[PhaseFunction]) -> Result<PhaseFunction> {
    let Some(first) = basis.first() else {
        return Err(Error::InvalidInput("empty basis".into()));
    };
    let mut acc = PhaseFunction::zeros(first.grid, first.hbar);
    for (c, b) in coeffs.iter().zip(basis) {
        acc = acc.add(&b.scaled(*c))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_ops::heisenberg_weyl;
    use crate::grid::gaussian;

    fn grid() -> Grid {
        Grid::new(1, 8.0, 128).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn lattice_layout() {
        let pg = PhaseGrid::new(2, 3.0, 8, 4.0, 16).unwrap();
        assert_eq!(pg.len(), 8 * 8 * 16 * 16);
        let idx = [1, 7, 3, 15];
        assert_eq!(pg.multi_index(pg.flat_index(&idx)), idx.to_vec());
        assert_eq!(pg.point(pg.flat_index(&[4, 4, 8, 8])), vec![0.0; 4]);
        let dual = PhaseGrid::dual(&Grid::new(1, 12.0, 512).unwrap(), 1.0);
        assert!((dual.dp() - PI / 24.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_wigner_closed_form() {
        let hbar = 1.0;
        let phi = gaussian(grid(), hbar).unwrap();
        let pg = PhaseGrid::square(&grid());
        let w = cross_wigner_on(&phi, &phi, &pg).unwrap();
        let exact = PhaseFunction::from_fn(pg, hbar, |z| {
            C::new((-(z[0] * z[0] + z[1] * z[1]) / hbar).exp() / (PI * hbar), 0.0)
        })
        .unwrap();
        assert!(w.max_abs_difference(&exact).unwrap() < 1e-8);
    }

    #[test]
    fn conjugate_symmetry_and_marginal() {
        let hbar = 1.0;
        let f = hermite(grid(), hbar, &[1]).unwrap();
        let g = crate::grid::coherent_state(grid(), hbar, &[0.5, -0.3]).unwrap();
        let pg = PhaseGrid::square(&grid());
        let wfg = cross_wigner_on(&f, &g, &pg).unwrap();
        let wgf = cross_wigner_on(&g, &f, &pg).unwrap();
        assert!(wfg.max_abs_difference(&wgf.conj()).unwrap() < 1e-14);
        let wff = cross_wigner_on(&f, &f, &pg).unwrap();
        for j in (0..128).step_by(7) {
            let marginal: f64 = (0..128)
                .map(|k| wff.values()[j * 128 + k].re * if k == 0 { 0.5 } else { 1.0 })
                .sum::<f64>()
                * pg.dp();
            assert!((marginal - f.values()[j].norm_sqr()).abs() < 1e-6);
        }
    }

    #[test]
    fn dual_lattice_wigner() {
        let g = Grid::new(1, 12.0, 256).unwrap();
        let phi = gaussian(g, 1.0).unwrap();
        let w = cross_wigner(&phi, &phi).unwrap();
        assert!((w.integral().re - 1.0).abs() < 1e-10);
        assert!(((2.0 * PI) * w.norm().powi(2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_shift_relations() {
        let t = tol();
        let f = gaussian(grid(), 1.0).unwrap();
        let g = hermite(grid(), 1.0, &[1]).unwrap();
        let pg = PhaseGrid::square(&grid());
        let big_f = cross_wigner_on(&f, &g, &pg).unwrap();
        let h = pg.dx();
        assert_eq!(phase_shift(&big_f, &[0.0, 0.0], &t).unwrap(), big_f);
        let z0 = [4.0 * h, -2.0 * h];
        let z1 = [-6.0 * h, 8.0 * h];
        let sum = [z0[0] + z1[0], z0[1] + z1[1]];
        let lhs = phase_shift(&big_f, &sum, &t).unwrap();
        let rhs = phase_shift(&phase_shift(&big_f, &z1, &t).unwrap(), &z0, &t).unwrap();
        let s = sigma(&z0, &z1);
        assert!(lhs.max_abs_difference(&rhs.scaled(C::from_polar(1.0, -0.5 * s))).unwrap() < 1e-12);
        let swapped = phase_shift(&phase_shift(&big_f, &z0, &t).unwrap(), &z1, &t).unwrap();
        assert!(swapped.max_abs_difference(&rhs.scaled(C::from_polar(1.0, -s))).unwrap() < 1e-12);
    }

    #[test]
    fn intertwines_heisenberg_weyl() {
        let t = tol();
        let f = gaussian(grid(), 1.0).unwrap();
        let g = hermite(grid(), 1.0, &[2]).unwrap();
        let pg = PhaseGrid::square(&grid());
        let z0 = [2.0 * pg.dx(), -10.0 * pg.dp()];
        let lhs = cross_wigner_on(&heisenberg_weyl(&f, &z0, &t).unwrap(), &g, &pg).unwrap();
        let rhs = phase_shift(&cross_wigner_on(&f, &g, &pg).unwrap(), &z0, &t).unwrap();
        assert!(lhs.max_abs_difference(&rhs).unwrap() < 1e-6);
    }

    // Weyl quantization of a(z) = e^{−|z − c|²/2s²}, p-integral in closed form.
    fn weyl_gaussian_apply(f: &SampledFunction, c: [f64; 2], s: f64) -> SampledFunction {
        let g = *f.grid();
        let hbar = f.hbar();
        let xs = g.coords();
        let amp = s * (2.0 * PI).sqrt() / (2.0 * PI * hbar) * g.dx();
        let values = xs
            .iter()
            .map(|&x| {
                xs.iter()
                    .zip(f.values())
                    .map(|(&y, fy)| {
                        let m = 0.5 * (x + y) - c[0];
                        let env = (-m * m / (2.0 * s * s) - s * s * (x - y).powi(2) / (2.0 * hbar * hbar)).exp();
                        fy * C::from_polar(amp * env, c[1] * (x - y) / hbar)
                    })
                    .sum()
            })
            .collect();
        SampledFunction::new(g, values, hbar).unwrap()
    }

    #[test]
    fn bopp_operator_intertwines_weyl_operator() {
        let hbar = 1.0;
        let pg = PhaseGrid::square(&grid());
        let f = gaussian(grid(), hbar).unwrap();
        let g = hermite(grid(), hbar, &[1]).unwrap();
        let (c, s) = ([0.3, -0.2], 1.2);
        let sym = TwistedSymbol::gaussian(c.to_vec(), s, hbar);
        let lhs = bopp_apply(&sym, &cross_wigner_on(&f, &g, &pg).unwrap(), &Truncation::default(), &tol()).unwrap();
        let rhs = cross_wigner_on(&weyl_gaussian_apply(&f, c, s), &g, &pg).unwrap();
        assert!(lhs.relative_distance(&rhs).unwrap() < 1e-8);
    }

    #[test]
    fn tilde_product_phase_matches_commutation_law() {
        let a = [0.3, -1.2];
        let b = [0.9, 0.4];
        assert!((tilde_product_phase(&a, &b) - 0.5 * sigma(&a, &b)).abs() < 1e-15);
    }

    #[test]
    fn moyal_gram_matrix() {
        let pg = PhaseGrid::square(&grid());
        let basis = wigner_basis(3, 3, 1.0, &grid(), &pg).unwrap();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ip = moyal_inner(a, b).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C::new(expected, 0.0)).norm() < 1e-6, "{i} {j} {ip}");
            }
        }
    }
}
