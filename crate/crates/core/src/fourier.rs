//! Chirp-z (Bluestein) evaluation of exponential sums on uniform lattices.
//!
//! `out_k = Σ_j in_j · e^{i s t_j u_k}` with `t_j = t₀ + j·dt`, `u_k = u₀ + k·du`.
//! Input and output lattices are independent, so sums can be evaluated on any
//! uniform grid without interpolation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type C = Complex64;

/// Uniform lattice `start + k·step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Lattice {
    pub fn new(start: f64, step: f64, len: usize) -> Self {
        Self { start, step, len }
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }
}

pub struct ChirpZ {
    n_in: usize,
    n_out: usize,
    len: usize,
    pre: Vec<C>,
    post: Vec<C>,
    kernel: Vec<C>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

// `θ·m²/2` reduced mod 2π before the exponential.
fn half_square_phase(theta: f64, m: i64) -> f64 {
    let m2 = (m as f64) * (m as f64);
    (0.5 * theta * m2) % (2.0 * PI)
}

impl ChirpZ {
    pub fn new(input: Lattice, output: Lattice, s: f64) -> Self {
        let (n_in, n_out) = (input.len, output.len);
        let len = (n_in + n_out).saturating_sub(1).max(1).next_power_of_two();
        let theta = s * input.step * output.step;
        let (t0, u0) = (input.start, output.start);

        let pre = (0..n_in)
            .map(|j| {
                let ph = s * (j as f64) * input.step * u0 + half_square_phase(theta, j as i64);
                C::from_polar(1.0, ph)
            })
            .collect();
        let scale = 1.0 / len as f64;
        let post = (0..n_out)
            .map(|k| {
                let ph = s * t0 * output.point(k) + half_square_phase(theta, k as i64);
                C::from_polar(scale, ph)
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);

        let mut kernel = vec![C::new(0.0, 0.0); len];
        for m in 0..n_out {
            kernel[m] = C::from_polar(1.0, -half_square_phase(theta, m as i64));
        }
        for m in 1..n_in {
            kernel[len - m] = C::from_polar(1.0, -half_square_phase(theta, m as i64));
        }
        fwd.process(&mut kernel);

        Self {
            n_in,
            n_out,
            len,
            pre,
            post,
            kernel,
            fwd,
            inv,
        }
    }

    pub fn input_len(&self) -> usize {
        self.n_in
    }

    pub fn output_len(&self) -> usize {
        self.n_out
    }

    /// Writes the sums into `output`; `buf` is resized as needed.
    pub fn apply_with(&self, input: &[C], output: &mut [C], buf: &mut Vec<C>) {
        assert_eq!(input.len(), self.n_in);
        assert_eq!(output.len(), self.n_out);
        buf.clear();
        buf.resize(self.len, C::new(0.0, 0.0));
        for j in 0..self.n_in {
            buf[j] = input[j] * self.pre[j];
        }
        self.fwd.process(buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inv.process(buf);
        for k in 0..self.n_out {
            output[k] = buf[k] * self.post[k];
        }
    }

    pub fn apply(&self, input: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.n_out];
        let mut buf = Vec::new();
        self.apply_with(input, &mut out, &mut buf);
        out
    }
}
