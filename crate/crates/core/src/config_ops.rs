//! Metaplectic operators acting on sampled functions of `x ∈ ℝⁿ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{ChirpZ, Lattice};
use crate::grid::{Grid, SampledFunction, C};
use crate::indices::{ConleyZehnderIndex, MaslovIndex};
use crate::linalg::{self, Mat};
use crate::symplectic::{
    cayley, free_from_generating, generating_from_free, sigma, GeneratingFunction,
    SymplecticMatrix,
};
use crate::tolerances::{Tolerances, Truncation};

fn i_pow(m: u8) -> C {
    match m % 4 {
        0 => C::new(1.0, 0.0),
        1 => C::new(0.0, 1.0),
        2 => C::new(-1.0, 0.0),
        _ => C::new(0.0, -1.0),
    }
}

/// `(2πiħ)^{−n/2}` on the principal branch.
fn fresnel_prefactor(n: usize, hbar: f64) -> C {
    let nf = n as f64;
    C::from_polar((2.0 * PI * hbar).powf(-0.5 * nf), -0.25 * PI * nf)
}

fn require_dim(grid: &Grid, m: &Mat) -> Result<()> {
    if m.nrows() != grid.n() || m.ncols() != grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.n(),
            found: m.nrows(),
        });
    }
    Ok(())
}

fn is_diagonal(m: &Mat) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Runs a chirp-z transform along one axis of an `n ≤ 2` dimensional array
/// with `points` samples per axis.
fn apply_axis(values: &[C], n: usize, points: usize, axis: usize, cz: &ChirpZ) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); values.len()];
    let mut line = vec![C::new(0.0, 0.0); points];
    let mut res = vec![C::new(0.0, 0.0); points];
    let mut buf = Vec::new();
    if n == 1 {
        cz.apply_with(values, &mut out, &mut buf);
        return out;
    }
    for other in 0..points {
        for k in 0..points {
            let idx = if axis == 0 { k * points + other } else { other * points + k };
            line[k] = values[idx];
        }
        cz.apply_with(&line, &mut res, &mut buf);
        for k in 0..points {
            let idx = if axis == 0 { k * points + other } else { other * points + k };
            out[idx] = res[k];
        }
    }
    out
}

/// `V̂_{−P}f(x) = e^{(i/2ħ)Px·x}f(x)`.
pub fn chirp_multiply(f: &SampledFunction, p: &Mat) -> Result<SampledFunction> {
    let grid = *f.grid();
    require_dim(&grid, p)?;
    let hbar = f.hbar();
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * C::from_polar(1.0, 0.5 * linalg::quad_form(p, &grid.point(i)) / hbar))
        .collect();
    Ok(SampledFunction::from_parts(grid, values, hbar))
}

/// Checks that the samples of `f` sent off the grid are negligible.
fn check_lost_mass(f: &SampledFunction, lost: impl Fn(usize) -> bool, tol: &Tolerances) -> Result<()> {
    let worst = f
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| lost(*i))
        .fold(0.0_f64, |m, (_, v)| m.max(v.norm()));
    if worst > tol.tail {
        return Err(Error::OutOfDomain(format!(
            "samples of modulus {worst:.3e} leave the grid"
        )));
    }
    Ok(())
}

/// `M̂_{L,m}f(x) = i^m √|det L| f(Lx)`, by cubic interpolation. `L = −I` is
/// an exact reflection of the grid.
pub fn scale_op(
    f: &SampledFunction,
    l: &Mat,
    m: MaslovIndex,
    tol: &Tolerances,
) -> Result<SampledFunction> {
    let grid = *f.grid();
    require_dim(&grid, l)?;
    let det = linalg::det(l);
    if det.abs() <= tol.sing {
        return Err(Error::SingularL { det });
    }
    let n = grid.n();
    if n == 2 && !is_diagonal(l) {
        return Err(Error::Unsupported("scale_op needs a diagonal L when n = 2".into()));
    }
    let factor = i_pow(m.value()) * det.abs().sqrt();
    let pts = grid.points();
    let reflection = (0..n).all(|a| l[(a, a)] == -1.0) && is_diagonal(l);
    if reflection {
        // x_{N−j} = −x_j; the sample at −X has no partner.
        check_lost_mass(f, |i| grid.multi_index(i)[..n].iter().any(|&j| j == 0), tol)?;
        let values = (0..grid.len())
            .map(|i| {
                let mi = grid.multi_index(i);
                if mi[..n].iter().any(|&j| j == 0) {
                    return C::new(0.0, 0.0);
                }
                let src: Vec<usize> = mi[..n].iter().map(|&j| pts - j).collect();
                f.values()[grid.flat_index(&src)] * factor
            })
            .collect();
        return Ok(SampledFunction::from_parts(grid, values, f.hbar()));
    }
    // Samples of f that no image point Lx_j reaches are lost.
    let reach: Vec<f64> = (0..n).map(|a| l[(a, a)].abs() * grid.half_width()).collect();
    check_lost_mass(
        f,
        |i| {
            let x = grid.point(i);
            (0..n).any(|a| x[a].abs() > reach[a] + grid.dx())
        },
        tol,
    )?;
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let lx = linalg::mat_vec(l, &x);
            f.interpolate(&lx) * factor
        })
        .collect();
    Ok(SampledFunction::from_parts(grid, values, f.hbar()))
}

/// Evaluates `(2πiħ)^{−n/2} ∫ e^{−(i/ħ)y·x′} g(x′) dx′` at `y = Lx_j`.
fn fourier_at(g: &SampledFunction, l: &Mat) -> Vec<C> {
    let grid = *g.grid();
    let n = grid.n();
    let hbar = g.hbar();
    let pts = grid.points();
    let pref = fresnel_prefactor(n, hbar) * grid.cell();
    let input = Lattice::new(-grid.half_width(), grid.dx(), pts);
    let mut values: Vec<C> = g.values().to_vec();
    if is_diagonal(l) {
        for a in 0..n {
            let la = l[(a, a)];
            let output = Lattice::new(-la * grid.half_width(), la * grid.dx(), pts);
            let cz = ChirpZ::new(input, output, -1.0 / hbar);
            values = apply_axis(&values, n, pts, a, &cz);
        }
    } else {
        let src: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.point(i)).collect();
        values = (0..grid.len())
            .map(|i| {
                let y = linalg::mat_vec(l, &grid.point(i));
                src.iter()
                    .zip(g.values())
                    .map(|(xp, v)| v * C::from_polar(1.0, -linalg::dot(&y, xp) / hbar))
                    .sum()
            })
            .collect();
    }
    values.iter_mut().for_each(|v| *v *= pref);
    values
}

/// `Ĵf(x) = (2πiħ)^{−n/2} ∫ e^{−(i/ħ)x·x′} f(x′) dx′`, sampled on the input grid.
pub fn hbar_fourier(f: &SampledFunction) -> Result<SampledFunction> {
    let n = f.grid().n();
    let values = fourier_at(f, &Mat::identity(n, n));
    Ok(SampledFunction::from_parts(*f.grid(), values, f.hbar()))
}

/// `T̂(z₀)f(x) = e^{(i/ħ)(p₀·x − ½p₀·x₀)} f(x − x₀)`. Grid-aligned `x₀` is an
/// index shift; other shifts use cubic interpolation.
pub fn heisenberg_weyl(f: &SampledFunction, z0: &[f64], tol: &Tolerances) -> Result<SampledFunction> {
    let grid = *f.grid();
    let n = grid.n();
    if z0.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: z0.len(),
        });
    }
    let hbar = f.hbar();
    let (x0, p0) = z0.split_at(n);
    let shifts: Vec<f64> = x0.iter().map(|v| v / grid.dx()).collect();
    let aligned = shifts.iter().all(|s| (s - s.round()).abs() < 1e-9);
    let pts = grid.points() as i64;
    let phase0 = -0.5 * linalg::dot(p0, x0);
    let shifted: Vec<C> = if aligned {
        let k: Vec<i64> = shifts.iter().map(|s| s.round() as i64).collect();
        check_lost_mass(
            f,
            |i| {
                let mi = grid.multi_index(i);
                (0..n).any(|a| {
                    let t = mi[a] as i64 + k[a];
                    t < 0 || t >= pts
                })
            },
            tol,
        )?;
        (0..grid.len())
            .map(|i| {
                let mi = grid.multi_index(i);
                let src: Option<Vec<usize>> = (0..n)
                    .map(|a| {
                        let s = mi[a] as i64 - k[a];
                        (0..pts).contains(&s).then_some(s as usize)
                    })
                    .collect();
                src.map_or(C::new(0.0, 0.0), |s| f.values()[grid.flat_index(&s)])
            })
            .collect()
    } else {
        check_lost_mass(
            f,
            |i| {
                let x = grid.point(i);
                (0..n).any(|a| {
                    let t = x[a] + x0[a];
                    t < -grid.half_width() || t > grid.half_width() - grid.dx()
                })
            },
            tol,
        )?;
        (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                let src: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
                f.interpolate(&src)
            })
            .collect()
    };
    let values = shifted
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let x = grid.point(i);
            v * C::from_polar(1.0, (linalg::dot(p0, &x) + phase0) / hbar)
        })
        .collect();
    Ok(SampledFunction::from_parts(grid, values, hbar))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QfioMethod {
    /// `V̂_{−P} M̂_{L,m} Ĵ V̂_{−Q}`, with the Fourier stage evaluated at `Lx`.
    Factored,
    /// Trapezoid rule on the kernel `e^{(i/ħ)W(x, x′)}`.
    Quadrature,
}

/// Largest grid (total sample count) accepted by the O(N²) quadrature path.
pub const QUADRATURE_MAX_POINTS: usize = 4096;

/// `Ŝ_{W,m}f(x) = (2πiħ)^{−n/2} i^m √|det L| ∫ e^{(i/ħ)W(x,x′)} f(x′) dx′`.
pub fn qfio_apply(
    w: &GeneratingFunction,
    m: MaslovIndex,
    f: &SampledFunction,
    method: QfioMethod,
) -> Result<SampledFunction> {
    let grid = *f.grid();
    let n = grid.n();
    require_dim(&grid, w.l())?;
    let hbar = f.hbar();
    let delta = i_pow(m.value()) * w.det_l().abs().sqrt();
    match method {
        QfioMethod::Factored => {
            let g = chirp_multiply(f, w.q())?;
            let h = fourier_at(&g, w.l());
            let h = SampledFunction::from_parts(grid, h.into_iter().map(|v| v * delta).collect(), hbar);
            chirp_multiply(&h, w.p())
        }
        QfioMethod::Quadrature => {
            if grid.len() > QUADRATURE_MAX_POINTS {
                return Err(Error::Unsupported(format!(
                    "quadrature limited to {QUADRATURE_MAX_POINTS} samples, grid has {}",
                    grid.len()
                )));
            }
            let pref = fresnel_prefactor(n, hbar) * delta * grid.cell();
            let pts: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.point(i)).collect();
            let values = pts
                .iter()
                .map(|x| {
                    pts.iter()
                        .zip(f.values())
                        .map(|(xp, v)| v * C::from_polar(1.0, w.eval(x, xp) / hbar))
                        .sum::<C>()
                        * pref
                })
                .collect();
            Ok(SampledFunction::from_parts(grid, values, hbar))
        }
    }
}

/// A product `Ŝ_{W₁,m₁} ⋯ Ŝ_{W_k,m_k}`, applied right to left.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaplecticWord {
    factors: Vec<(GeneratingFunction, MaslovIndex)>,
}

impl MetaplecticWord {
    pub fn new(factors: Vec<(GeneratingFunction, MaslovIndex)>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::InvalidInput("empty word".into()));
        };
        let n = first.0.n();
        if let Some(bad) = factors.iter().find(|(w, _)| w.n() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.0.n(),
            });
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[(GeneratingFunction, MaslovIndex)] {
        &self.factors
    }

    pub fn n(&self) -> usize {
        self.factors[0].0.n()
    }

    /// `S_{W₁} ⋯ S_{W_k}`.
    pub fn projection(&self) -> SymplecticMatrix {
        let mut s = SymplecticMatrix::identity(self.n());
        for (w, _) in &self.factors {
            s = s.compose(&free_from_generating(w)).expect("same dimension");
        }
        s
    }

    pub fn apply(&self, f: &SampledFunction, method: QfioMethod) -> Result<SampledFunction> {
        let mut g = f.clone();
        for (w, m) in self.factors.iter().rev() {
            g = qfio_apply(w, *m, &g, method)?;
        }
        Ok(g)
    }
}

/// Candidate shifts for the factorization scan.
pub const FACTOR_SHIFTS: [f64; 9] = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0];

/// Writes `S = S_W S_{W′}` with both `det(S_W − I)` and `det(S_{W′} − I)`
/// bounded away from zero. `W′ = (−λI, I, μI)` and `W` absorbs the rest;
/// `(λ, μ)` maximizes the smaller of the two determinants.
pub fn factor_pair(
    s: &SymplecticMatrix,
    tol: &Tolerances,
) -> Result<[(GeneratingFunction, MaslovIndex); 2]> {
    const MIN_DET: f64 = 1e-6;
    let n = s.n();
    let id = Mat::identity(n, n);
    let mut best: Option<(f64, GeneratingFunction, GeneratingFunction)> = None;
    for &mu in &FACTOR_SHIFTS {
        // S_{(0, I, μI)} = J V_{−μI}; S·S_{(0,I,μI)}⁻¹ has B-block μB − A.
        let w0 = GeneratingFunction::new(Mat::zeros(n, n), id.clone(), &id * mu, tol)?;
        let s2 = free_from_generating(&w0);
        let s1 = s.compose(&s2.inverse())?;
        let Ok(w1) = generating_from_free(&s1, tol) else { continue };
        for &lambda in &FACTOR_SHIFTS {
            let left = GeneratingFunction::new(w1.p().clone(), w1.l().clone(), w1.q() + &id * lambda, tol)?;
            let right = GeneratingFunction::new(-&id * lambda, id.clone(), &id * mu, tol)?;
            let d1 = crate::symplectic::det_s_minus_i(&left).abs();
            let d2 = crate::symplectic::det_s_minus_i(&right).abs();
            let score = d1.min(d2);
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, left, right));
            }
        }
    }
    let Some((score, left, right)) = best else {
        return Err(Error::FactorizationFailed { best: 0.0 });
    };
    if score <= MIN_DET {
        return Err(Error::FactorizationFailed { best: score });
    }
    let ml = MaslovIndex::principal(left.det_l());
    let mr = MaslovIndex::principal(right.det_l());
    Ok([(left, ml), (right, mr)])
}

/// Integral forms of the Weyl–Bochner representation of `Ŝ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BochnerForm {
    /// `∫ e^{(i/2ħ)M_S z·z} T̂(z) dz`.
    S1,
    /// `∫ e^{−(i/2ħ)σ(Sz,z)} T̂((S−I)z) dz`.
    S2,
    /// `∫ T̂(Sz) T̂(−z) dz`.
    S3,
}

/// Weight of `T̂(z₀)` (or `T̃(z₀)`) in each integral form, up to the common
/// prefactor `(2πħ)^{−n} i^ν / √|det(S − I)|`. For the substituted forms the
/// Jacobian of `z₀ = (S − I)u` has been folded into that prefactor.
pub(crate) struct FormCoefficient {
    form: BochnerForm,
    s: SymplecticMatrix,
    m: Mat,
    s_minus_i_inv: Mat,
    hbar: f64,
}

impl FormCoefficient {
    pub(crate) fn new(form: BochnerForm, s: &SymplecticMatrix, hbar: f64, tol: &Tolerances) -> Result<Self> {
        let m = cayley(s, tol)?.matrix().clone();
        let dim = 2 * s.n();
        let smi = s.matrix() - Mat::identity(dim, dim);
        let det = linalg::det(&smi);
        let s_minus_i_inv = linalg::inverse(&smi).ok_or(Error::SingularSminusI { det })?;
        Ok(Self {
            form,
            s: s.clone(),
            m,
            s_minus_i_inv,
            hbar,
        })
    }

    /// Phase (in radians) of the weight at `z₀`.
    pub(crate) fn phase(&self, z0: &[f64]) -> f64 {
        match self.form {
            BochnerForm::S1 => 0.5 * linalg::quad_form(&self.m, z0) / self.hbar,
            BochnerForm::S2 => {
                let u = linalg::mat_vec(&self.s_minus_i_inv, z0);
                let su = self.s.apply(&u);
                -0.5 * sigma(&su, &u) / self.hbar
            }
            BochnerForm::S3 => {
                let u = linalg::mat_vec(&self.s_minus_i_inv, z0);
                let a = self.s.apply(&u);
                let b: Vec<f64> = u.iter().map(|v| -v).collect();
                product_phase(&a, &b) / self.hbar
            }
        }
    }
}

/// Phase `θ` (times ħ) in `T̂(a)T̂(b) = e^{iθ/ħ} T̂(a + b)`, read off from
/// composing the two translations at `x = 0`.
fn product_phase(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    let (xa, pa) = a.split_at(n);
    let (xb, pb) = b.split_at(n);
    let x = vec![0.0; n];
    let xs: Vec<f64> = x.iter().zip(xa).map(|(u, v)| u - v).collect();
    // T̂(b) first, then T̂(a) evaluated at x.
    let inner = linalg::dot(pb, &xs) - 0.5 * linalg::dot(pb, xb);
    let outer = linalg::dot(pa, &x) - 0.5 * linalg::dot(pa, xa);
    let xab: Vec<f64> = xa.iter().zip(xb).map(|(u, v)| u + v).collect();
    let pab: Vec<f64> = pa.iter().zip(pb).map(|(u, v)| u + v).collect();
    let combined = linalg::dot(&pab, &x) - 0.5 * linalg::dot(&pab, &xab);
    inner + outer - combined
}

/// Common prefactor `(2πħ)^{−n} i^ν / √|det(S − I)|`.
pub(crate) fn bochner_prefactor(s: &SymplecticMatrix, nu: ConleyZehnderIndex, hbar: f64) -> C {
    let det = s.det_minus_identity();
    i_pow(nu.value()) * ((2.0 * PI * hbar).powi(-(s.n() as i32)) / det.abs().sqrt())
}

/// Result of a truncated Bochner quadrature.
#[derive(Debug, Clone)]
pub struct BochnerOutput {
    pub function: SampledFunction,
    /// Estimated relative L² contribution of the cutoff band.
    pub truncation_estimate: f64,
    pub radius: f64,
}

/// Radius outside which `|f|` stays below `tail·max|f|`.
pub fn support_radius(f: &SampledFunction, tail: f64) -> f64 {
    let peak = f.values().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let grid = f.grid();
    (0..grid.len())
        .filter(|&i| f.values()[i].norm() > tail * peak)
        .map(|i| linalg::dot(&grid.point(i), &grid.point(i)).sqrt())
        .fold(grid.dx(), f64::max)
}

/// `Ŝf = (2πħ)^{−1} i^ν |det(S − I)|^{−1/2} ∫ a(z₀) χ(|z₀|/R) T̂(z₀)f dz₀` for
/// `n = 1`, with `a` given by the selected form and `R = r_factor·X`. Nodes `x₀` lie on the grid
/// lattice so `f(x − x₀)` needs no interpolation; the `p₀` sums go through a
/// chirp-z transform.
pub fn bochner_apply(
    s: &SymplecticMatrix,
    nu: ConleyZehnderIndex,
    f: &SampledFunction,
    form: BochnerForm,
    truncation: &Truncation,
    tol: &Tolerances,
) -> Result<BochnerOutput> {
    let grid = *f.grid();
    if grid.n() != 1 || s.n() != 1 {
        return Err(Error::Unsupported("the Bochner quadrature is implemented for n = 1".into()));
    }
    let det = s.det_minus_identity();
    if det.abs() <= 1e-6 {
        return Err(Error::SingularSminusI { det });
    }
    let hbar = f.hbar();
    let coeff = FormCoefficient::new(form, s, hbar, tol)?;
    let m = cayley(s, tol)?.matrix().clone();
    let (mxp, mpp) = (m[(0, 1)], m[(1, 1)]);
    let radius = truncation.r_factor * grid.half_width();
    let inner = radius * (1.0 - truncation.cutoff_fraction);

    let pts = grid.points();
    let dx = grid.dx();
    let big_x = grid.half_width();
    // Largest p₀-frequency of the integrand; the lattice oversamples it 3×.
    let omega = (mpp.abs() * radius + mxp.abs() * radius + big_x + 0.5 * radius) / hbar;
    let dp = 2.0 * PI / (3.0 * omega);
    let lmax = (radius / dp).ceil() as i64;
    let p_lattice = Lattice::new(-(lmax as f64) * dp, dp, (2 * lmax + 1) as usize);
    let x_lattice = Lattice::new(-big_x, dx, pts);
    let cz = ChirpZ::new(p_lattice, x_lattice, 1.0 / hbar);

    let peak = f.values().iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    let live: Vec<usize> = (0..pts).filter(|&j| f.values()[j].norm() > 1e-17 * peak).collect();
    let (Some(&jmin), Some(&jmax)) = (live.first(), live.last()) else {
        return Ok(BochnerOutput {
            function: SampledFunction::zeros(grid, hbar),
            truncation_estimate: 0.0,
            radius,
        });
    };
    let kmax = (radius / dx).floor() as i64;
    let k_lo = (-(jmax as i64)).max(-kmax);
    let k_hi = ((pts - 1 - jmin) as i64).min(kmax);

    let jump = truncation.second_derivative_jump(radius);
    let fresnel = (2.0 * PI * hbar / mpp.abs().max(f64::MIN_POSITIVE)).sqrt();
    let mut out = vec![C::new(0.0, 0.0); pts];
    // Leading boundary terms of the cutoff band, summed coherently, and a
    // fallback bound where a stationary point falls inside the band.
    let mut boundary = vec![C::new(0.0, 0.0); pts];
    let mut captured = vec![0.0_f64; pts];
    let mut coeffs = vec![C::new(0.0, 0.0); p_lattice.len];
    let mut sums = vec![C::new(0.0, 0.0); pts];
    let mut buf = Vec::new();
    for k in k_lo..=k_hi {
        let x0 = k as f64 * dx;
        if x0.abs() >= radius {
            continue;
        }
        for (l, c) in coeffs.iter_mut().enumerate() {
            let p0 = p_lattice.point(l);
            let r = x0.hypot(p0);
            let chi = truncation.chi(r, radius);
            *c = if chi == 0.0 {
                C::new(0.0, 0.0)
            } else {
                C::from_polar(chi, coeff.phase(&[x0, p0]) - 0.5 * p0 * x0 / hbar)
            };
        }
        cz.apply_with(&coeffs, &mut sums, &mut buf);

        // χ(r(p₀)) has second-derivative jumps where the line x = x₀ meets
        // the two circles bounding the band.
        let outer_p = (radius * radius - x0 * x0).sqrt();
        let mut edges = vec![outer_p, -outer_p];
        let inner_p = if x0.abs() < inner {
            let v = (inner * inner - x0 * x0).sqrt();
            edges.extend([v, -v]);
            v
        } else {
            0.0
        };
        for j in 0..pts {
            let src = j as i64 - k;
            if src < 0 || src >= pts as i64 {
                continue;
            }
            let fv = f.values()[src as usize];
            if fv.norm() == 0.0 {
                continue;
            }
            out[j] += fv * sums[j];
            // ħ·∂_{p₀} of the phase: M_pp p₀ + M_xp x₀ + x − x₀/2.
            let x = grid.coord(j);
            let shift = mxp * x0 + x - 0.5 * x0;
            let slope = |p: f64| mpp * p + shift;
            let stationary_in_band = slope(inner_p) * slope(outer_p) <= 0.0
                || slope(-inner_p) * slope(-outer_p) <= 0.0;
            if stationary_in_band {
                captured[j] += fv.norm() * fresnel;
                continue;
            }
            let mut term = C::new(0.0, 0.0);
            for &p in &edges {
                let r2 = x0 * x0 + p * p;
                let g2 = -jump.copysign(p) * p * p / r2;
                let psi = coeff.phase(&[x0, p]) + p * (x - 0.5 * x0) / hbar;
                let d = C::new(0.0, slope(p) / hbar);
                term -= C::from_polar(g2, psi) / (d * d * d);
            }
            boundary[j] += fv * term;
        }
    }
    let base = bochner_prefactor(s, nu, hbar);
    let pref = base * dx * dp;
    out.iter_mut().for_each(|v| *v *= pref);
    let scale = base.norm() * dx;
    let err_sq: f64 = boundary
        .iter()
        .zip(&captured)
        .map(|(b, c)| (scale * (b.norm() + c)).powi(2))
        .sum();
    let estimate = (err_sq * dx).sqrt() / f.norm().max(f64::MIN_POSITIVE);
    if estimate > tol.quad {
        return Err(Error::TruncationError {
            estimate,
            tol: tol.quad,
        });
    }
    Ok(BochnerOutput {
        function: SampledFunction::from_parts(grid, out, hbar),
        truncation_estimate: estimate,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian, hermite};
    use crate::indices::conley_zehnder;

    fn grid() -> Grid {
        Grid::new(1, 12.0, 512).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn chirp_with_zero_is_identity_and_unitary() {
        let f = hermite(grid(), 1.0, &[3]).unwrap();
        let g = chirp_multiply(&f, &Mat::zeros(1, 1)).unwrap();
        assert_eq!(f, g);
        let h = chirp_multiply(&f, &linalg::scalar(1.7)).unwrap();
        assert!((h.norm() - f.norm()).abs() < 1e-14);
    }

    #[test]
    fn chirp_on_gaussian_matches_closed_form() {
        let hbar = 1.0;
        let f = SampledFunction::from_fn(grid(), hbar, |x| C::new((-x[0] * x[0] / (2.0 * hbar)).exp(), 0.0)).unwrap();
        let p0 = 0.8;
        let g = chirp_multiply(&f, &linalg::scalar(p0)).unwrap();
        for (j, v) in g.values().iter().enumerate() {
            let x = grid().coord(j);
            let expected = C::new(-x * x / (2.0 * hbar), p0 * x * x / (2.0 * hbar)).exp();
            assert!((v - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn scale_identity_reflection_and_dilation() {
        let f = hermite(grid(), 1.0, &[1]).unwrap();
        let t = tol();
        let same = scale_op(&f, &Mat::identity(1, 1), MaslovIndex::new(0), &t).unwrap();
        assert_eq!(same, f);
        let refl = scale_op(&f, &-Mat::identity(1, 1), MaslovIndex::new(1), &t).unwrap();
        for j in 1..512 {
            let expected = f.values()[512 - j] * C::new(0.0, 1.0);
            assert!((refl.values()[j] - expected).norm() < 1e-15);
        }
        let g = gaussian(grid(), 1.0).unwrap();
        let d = scale_op(&g, &linalg::scalar(2.0), MaslovIndex::new(0), &t).unwrap();
        assert!((d.norm() - 1.0).abs() < 1e-6);
        let wide = scale_op(&g, &linalg::scalar(0.3), MaslovIndex::new(0), &t);
        assert!(matches!(wide, Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn fourier_fixes_the_gaussian() {
        for hbar in [1.0, 0.25] {
            let g = gaussian(grid(), hbar).unwrap();
            let jg = hbar_fourier(&g).unwrap();
            let expected = g.scaled(C::from_polar(1.0, -PI / 4.0));
            assert!(jg.max_abs_difference(&expected).unwrap() < 1e-12);
        }
    }

    #[test]
    fn fourier_acts_on_hermites_by_powers_of_minus_i() {
        for k in 0..=6 {
            let h = hermite(grid(), 1.0, &[k]).unwrap();
            let jh = hbar_fourier(&h).unwrap();
            let phase = C::from_polar(1.0, -PI / 4.0 - PI / 2.0 * k as f64);
            assert!(jh.max_abs_difference(&h.scaled(phase)).unwrap() < 1e-11);
            assert!((jh.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn fourier_fourth_power_is_a_phase() {
        let f = SampledFunction::from_fn(grid(), 1.0, |x| {
            C::new((-(x[0] - 1.0).powi(2)).exp(), 0.3 * x[0] * (-x[0] * x[0]).exp())
        })
        .unwrap();
        let mut g = f.clone();
        for _ in 0..4 {
            g = hbar_fourier(&g).unwrap();
        }
        // Ĵ⁴ = i^{−2}·F⁴ = −1.
        assert!(g.max_abs_difference(&f.scaled(C::new(-1.0, 0.0))).unwrap() < 1e-10);
    }

    #[test]
    fn two_dimensional_fourier() {
        let g2 = Grid::new(2, 8.0, 64).unwrap();
        let h = hermite(g2, 1.0, &[1, 2]).unwrap();
        let jh = hbar_fourier(&h).unwrap();
        let phase = C::from_polar(1.0, -PI / 2.0 - 3.0 * PI / 2.0);
        assert!(jh.max_abs_difference(&h.scaled(phase)).unwrap() < 1e-10);
    }

    #[test]
    fn heisenberg_weyl_relations() {
        let t = tol();
        let f = gaussian(grid(), 1.0).unwrap();
        let dx = grid().dx();
        assert_eq!(heisenberg_weyl(&f, &[0.0, 0.0], &t).unwrap(), f);
        let z0 = [4.0 * dx, 0.7];
        let z1 = [-6.0 * dx, -0.4];
        let a = heisenberg_weyl(&heisenberg_weyl(&f, &z1, &t).unwrap(), &z0, &t).unwrap();
        let b = heisenberg_weyl(&heisenberg_weyl(&f, &z0, &t).unwrap(), &z1, &t).unwrap();
        let s = sigma(&z0, &z1);
        assert!(a.max_abs_difference(&b.scaled(C::from_polar(1.0, s))).unwrap() < 1e-12);
        let sum = [z0[0] + z1[0], z0[1] + z1[1]];
        let c = heisenberg_weyl(&f, &sum, &t).unwrap();
        assert!(c.max_abs_difference(&a.scaled(C::from_polar(1.0, -0.5 * s))).unwrap() < 1e-12);
    }

    #[test]
    fn heisenberg_weyl_of_gaussian_is_coherent_state() {
        let f = gaussian(grid(), 1.0).unwrap();
        let z0 = [1.234, -0.5];
        let g = heisenberg_weyl(&f, &z0, &tol()).unwrap();
        let expected = crate::grid::coherent_state(grid(), 1.0, &z0).unwrap();
        assert!(g.max_abs_difference(&expected).unwrap() < 1e-6);
        assert!((g.norm() - 1.0).abs() < 1e-6);
        assert!(matches!(
            heisenberg_weyl(&f, &[30.0, 0.0], &tol()),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn trivial_generating_function_is_fourier() {
        let f = hermite(grid(), 1.0, &[2]).unwrap();
        let w = GeneratingFunction::new(Mat::zeros(1, 1), Mat::identity(1, 1), Mat::zeros(1, 1), &tol()).unwrap();
        let a = qfio_apply(&w, MaslovIndex::new(0), &f, QfioMethod::Factored).unwrap();
        let b = hbar_fourier(&f).unwrap();
        assert!(a.max_abs_difference(&b).unwrap() < 1e-14);
    }

    #[test]
    fn factored_matches_quadrature() {
        let g = Grid::new(1, 10.0, 256).unwrap();
        let f = gaussian(g, 1.0).unwrap();
        let w = GeneratingFunction::new(linalg::scalar(0.4), linalg::scalar(-1.2), linalg::scalar(-0.7), &tol()).unwrap();
        let m = MaslovIndex::new(1);
        let a = qfio_apply(&w, m, &f, QfioMethod::Factored).unwrap();
        let b = qfio_apply(&w, m, &f, QfioMethod::Quadrature).unwrap();
        assert!(a.relative_distance(&b).unwrap() < 1e-10);
        assert!((a.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inverse_word_is_identity() {
        let f = hermite(grid(), 1.0, &[1]).unwrap();
        let w = GeneratingFunction::new(linalg::scalar(0.3), linalg::scalar(1.1), linalg::scalar(-0.5), &tol()).unwrap();
        let m = MaslovIndex::new(0);
        let word = MetaplecticWord::new(vec![(w.inverse(), MaslovIndex::new(1)), (w, m)]).unwrap();
        let g = word.apply(&f, QfioMethod::Factored).unwrap();
        assert!(g.relative_distance(&f).unwrap() < 1e-8);
        let proj = word.projection();
        assert!(linalg::max_abs(&(proj.matrix() - Mat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn factor_pair_reproduces_projection() {
        let t = tol();
        let j = crate::symplectic::standard_j(1).unwrap();
        for s in [SymplecticMatrix::identity(1), j, SymplecticMatrix::identity(2)] {
            let [(w1, _), (w2, _)] = factor_pair(&s, &t).unwrap();
            let prod = free_from_generating(&w1).compose(&free_from_generating(&w2)).unwrap();
            assert!(linalg::max_abs(&(prod.matrix() - s.matrix())) < 1e-9);
            assert!(crate::symplectic::det_s_minus_i(&w1).abs() > 1e-6);
            assert!(crate::symplectic::det_s_minus_i(&w2).abs() > 1e-6);
        }
    }

    #[test]
    fn product_phase_matches_commutation_law() {
        let a = [0.3, -1.2];
        let b = [0.9, 0.4];
        assert!((product_phase(&a, &b) - 0.5 * sigma(&a, &b)).abs() < 1e-15);
    }

    #[test]
    fn bochner_forms_and_quarter_rotation() {
        let t = tol();
        let f = gaussian(grid(), 1.0).unwrap();
        let w = GeneratingFunction::rotation(PI / 2.0).unwrap();
        let nu = conley_zehnder(&w, MaslovIndex::new(0), &t).unwrap();
        assert_eq!(nu.value(), 3);
        let s = free_from_generating(&w);
        let reference = qfio_apply(&w, MaslovIndex::new(0), &f, QfioMethod::Factored).unwrap();
        let trunc = Truncation::default();
        let s1 = bochner_apply(&s, nu, &f, BochnerForm::S1, &trunc, &t).unwrap();
        assert!(s1.function.relative_distance(&reference).unwrap() < 1e-3);
        for form in [BochnerForm::S2, BochnerForm::S3] {
            let other = bochner_apply(&s, nu, &f, form, &trunc, &t).unwrap();
            assert!(other.function.relative_distance(&s1.function).unwrap() < 1e-6);
        }
        assert!(matches!(
            bochner_apply(&SymplecticMatrix::identity(1), nu, &f, BochnerForm::S1, &trunc, &t),
            Err(Error::SingularSminusI { .. })
        ));
    }
}
