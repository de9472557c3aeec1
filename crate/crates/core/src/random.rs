//! Seeded sampling of generating functions and symplectic matrices.
//!
//! Matrices are drawn as products of generator projections, so they are
//! symplectic to rounding without any re-orthogonalisation step.

use rand::Rng;

use crate::linalg::{self, Mat};
use crate::symplectic::{free_from_generating, GeneratingFunction, SymplecticMatrix};
use crate::tolerances::Tolerances;

/// Symmetric n×n matrix with entries uniform in [−bound, bound].
pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize, bound: f64) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-bound..=bound);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// `L = I + E` with `E` entries uniform in [−0.4, 0.4], redrawn until
/// `|det L| ≥ 0.2`. Half the draws are reflected so both signs of det L occur.
pub fn random_l<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    loop {
        let mut l = Mat::identity(n, n);
        for v in l.iter_mut() {
            *v += rng.random_range(-0.4..=0.4);
        }
        if rng.random_bool(0.5) {
            for j in 0..n {
                l[(0, j)] = -l[(0, j)];
            }
        }
        if linalg::det(&l).abs() >= 0.2 {
            return l;
        }
    }
}

pub fn random_generating<R: Rng + ?Sized>(rng: &mut R, n: usize) -> GeneratingFunction {
    let p = random_symmetric(rng, n, 2.0);
    let q = random_symmetric(rng, n, 2.0);
    let l = random_l(rng, n);
    GeneratingFunction::new(p, l, q, &Tolerances::default()).expect("valid by construction")
}

/// Generating function whose operator keeps Hermite functions of low order
/// well inside a grid of half-width ~12: `P`, `Q` entries in [−½, ½] and
/// `L = ±(I + E)` with `E` entries in [−0.25, 0.25], `|det L| ≥ 0.5`.
pub fn random_moderate_generating<R: Rng + ?Sized>(rng: &mut R, n: usize) -> GeneratingFunction {
    let p = random_symmetric(rng, n, 0.5);
    let q = random_symmetric(rng, n, 0.5);
    let l = loop {
        let mut l = Mat::identity(n, n);
        for v in l.iter_mut() {
            *v += rng.random_range(-0.25..=0.25);
        }
        if rng.random_bool(0.5) {
            l = -l;
        }
        if linalg::det(&l).abs() >= 0.5 {
            break l;
        }
    };
    GeneratingFunction::new(p, l, q, &Tolerances::default()).expect("valid by construction")
}

/// Product of two random free matrices; covers non-free elements too.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymplecticMatrix {
    let a = free_from_generating(&random_generating(rng, n));
    let b = free_from_generating(&random_generating(rng, n));
    a.compose(&b).expect("same dimension")
}

/// Random symplectic matrix with `|det(S − I)| > min_det`.
pub fn random_symplectic_away_from_identity<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    min_det: f64,
) -> SymplecticMatrix {
    loop {
        let s = random_symplectic(rng, n);
        if s.det_minus_identity().abs() > min_det {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::is_symplectic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            for _ in 0..20 {
                let s = random_symplectic(&mut rng, n);
                assert!(is_symplectic(s.matrix(), 1e-10).unwrap());
            }
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let a = random_symplectic(&mut ChaCha8Rng::seed_from_u64(42), 2);
        let b = random_symplectic(&mut ChaCha8Rng::seed_from_u64(42), 2);
        assert_eq!(a, b);
    }
}
