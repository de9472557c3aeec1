use std::f64::consts::PI;

use metaplectic::config_ops::{qfio_apply, QfioMethod};
use metaplectic::grid::{coherent_state, gaussian, hermite, C};
use metaplectic::indices::{conley_zehnder, MaslovIndex};
use metaplectic::linalg::{mat_vec, Mat};
use metaplectic::phase_space::*;
use metaplectic::symplectic::{free_from_generating, GeneratingFunction};
use metaplectic::{Grid, Tolerances, Truncation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid {
    Grid::new(1, 8.0, 128).unwrap()
}

fn scalar(v: f64) -> Mat {
    Mat::from_element(1, 1, v)
}

fn generating(p: f64, l: f64, q: f64) -> GeneratingFunction {
    GeneratingFunction::new(scalar(p), scalar(l), scalar(q), &Tolerances::default()).unwrap()
}

// Ã as a Weyl operator on ℝ² with symbol ã(z,ζ) = a(x − ½ζ_p, p + ½ζ_x),
// a(z) = e^{−|z − c|²/2s²}; the ζ-integral is done in closed form.
fn weyl_side_bopp(big_f: &PhaseFunction, c: [f64; 2], s: f64, z: [f64; 2]) -> C {
    let pg = big_f.grid();
    let hbar = big_f.hbar();
    let gauss = 2.0 * s * (2.0 * PI).sqrt();
    let mut acc = C::new(0.0, 0.0);
    for (i, v) in big_f.values().iter().enumerate() {
        let u = pg.point(i);
        let xbar = 0.5 * (z[0] + u[0]);
        let pbar = 0.5 * (z[1] + u[1]);
        let env = (-2.0 * s * s * ((z[0] - u[0]).powi(2) + (z[1] - u[1]).powi(2)) / (hbar * hbar)).exp();
        if env < 1e-300 {
            continue;
        }
        let phase = 2.0 * ((c[1] - pbar) * (z[0] - u[0]) + (xbar - c[0]) * (z[1] - u[1])) / hbar;
        acc += v * C::from_polar(gauss * gauss * env * pg.weight(i), phase);
    }
    acc / (2.0 * PI * hbar).powi(2)
}

#[test]
fn bopp_operator_has_the_shifted_weyl_symbol() {
    let hbar = 1.0;
    let pg = PhaseGrid::square(&grid());
    let f = gaussian(grid(), hbar).unwrap();
    let g = hermite(grid(), hbar, &[1]).unwrap();
    let big_f = cross_wigner_on(&f, &g, &pg).unwrap();
    let (c, s) = ([0.4, -0.3], 1.1);
    let sym = TwistedSymbol::gaussian(c.to_vec(), s, hbar);
    let out = bopp_apply(&sym, &big_f, &Truncation::default(), &Tolerances::default()).unwrap();
    let peak = out.values().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    for idx in [[64, 64], [70, 60], [52, 75], [80, 80], [40, 66]] {
        let flat = pg.flat_index(&idx);
        let z = pg.point(flat);
        let weyl = weyl_side_bopp(&big_f, c, s, [z[0], z[1]]);
        assert!((weyl - out.values()[flat]).norm() < 1e-5 * peak, "{idx:?}");
    }
}

#[test]
fn wigner_covariance_under_metaplectic_operators() {
    let w = generating(0.3, 1.0, -0.2);
    let m = MaslovIndex::principal(w.det_l());
    let s = free_from_generating(&w);
    let f = coherent_state(grid(), 1.0, &[0.3, 0.2]).unwrap();
    let g = gaussian(grid(), 1.0).unwrap();
    let pg = PhaseGrid::square(&grid());
    let sf = qfio_apply(&w, m, &f, QfioMethod::Factored).unwrap();
    let sg = qfio_apply(&w, m, &g, QfioMethod::Factored).unwrap();
    let lhs = cross_wigner_on(&sf, &sg, &pg).unwrap();
    let base = cross_wigner_on(&f, &g, &pg).unwrap();
    let inv = s.inverse();
    let rhs = PhaseFunction::from_fn(pg, 1.0, |z| base.interpolate(&mat_vec(inv.matrix(), z))).unwrap();
    assert!(lhs.relative_distance(&rhs).unwrap() < 1e-4);
}

#[test]
fn scaled_cross_wigner_is_a_partial_isometry() {
    let pg = PhaseGrid::square(&grid());
    let f = hermite(grid(), 1.0, &[2]).unwrap().scaled(C::new(1.7, 0.0));
    let g = coherent_state(grid(), 1.0, &[-0.5, 0.4]).unwrap().scaled(C::new(0.0, 0.6));
    let w = cross_wigner_on(&f, &g, &pg).unwrap();
    let lhs = (2.0 * PI).sqrt() * w.norm();
    assert!((lhs - f.norm() * g.norm()).abs() < 1e-6);
}

#[test]
fn moyal_identity_values() {
    let pg = PhaseGrid::square(&grid());
    let h0 = gaussian(grid(), 1.0).unwrap();
    let h1 = hermite(grid(), 1.0, &[1]).unwrap();
    let w00 = cross_wigner_on(&h0, &h0, &pg).unwrap();
    let w01 = cross_wigner_on(&h0, &h1, &pg).unwrap();
    let w10 = cross_wigner_on(&h1, &h0, &pg).unwrap();
    assert!((moyal_inner(&w00, &w00).unwrap() - C::new(1.0 / (2.0 * PI), 0.0)).norm() < 1e-8);
    assert!(moyal_inner(&w01, &w10).unwrap().norm() < 1e-8);
    let a = moyal_inner(&w01, &w00).unwrap();
    let b = moyal_inner(&w00, &w01).unwrap();
    assert!((a - b.conj()).norm() < 1e-15);
}

#[test]
fn basis_expansion_round_trip_and_parseval() {
    let g = grid();
    let pg = PhaseGrid::square(&g);
    let basis = wigner_basis(3, 3, 1.0, &g, &pg).unwrap();
    for b in &basis {
        assert!((b.norm() - 1.0).abs() < 1e-6);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let coeffs: Vec<C> = (0..basis.len())
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let big_f = basis_expand(&coeffs, &basis).unwrap();
    let back = basis_coefficients(&big_f, &basis).unwrap();
    for (a, b) in coeffs.iter().zip(&back) {
        assert!((a - b).norm() < 1e-6);
    }

    // Parseval under S̃ on the order-2 span, which the lattice resolves.
    let small = wigner_basis(2, 2, 1.0, &g, &pg).unwrap();
    let coeffs = &coeffs[..small.len()];
    let big_f = basis_expand(coeffs, &small).unwrap();
    let w = generating(-0.5, 1.2, 0.4);
    let m = MaslovIndex::principal(w.det_l());
    let nu = conley_zehnder(&w, m, &Tolerances::default()).unwrap();
    let s = free_from_generating(&w);
    let out = metaplectic_phase_apply(&s, nu, &big_f, PhaseForm::S1, &Truncation::default(), &Tolerances::default())
        .unwrap();
    let energy: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    assert!((out.norm().powi(2) / energy - 1.0).abs() < 1e-4);
}

#[test]
fn inverse_generating_function_inverts_the_phase_operator() {
    let tol = Tolerances::default();
    let w = generating(0.2, -0.9, 0.1);
    let m = MaslovIndex::principal(w.det_l());
    let wi = w.inverse();
    let mi = MaslovIndex::new(1 - m.value() as i64);
    let pg = PhaseGrid::square(&grid());
    let f = gaussian(grid(), 1.0).unwrap();
    let g = hermite(grid(), 1.0, &[1]).unwrap();
    let big_f = cross_wigner_on(&f, &g, &pg).unwrap();
    let trunc = Truncation::default();
    let once = metaplectic_phase_apply(
        &free_from_generating(&w),
        conley_zehnder(&w, m, &tol).unwrap(),
        &big_f,
        PhaseForm::Alfa2,
        &trunc,
        &tol,
    )
    .unwrap();
    let back = metaplectic_phase_apply(
        &free_from_generating(&wi),
        conley_zehnder(&wi, mi, &tol).unwrap(),
        &once,
        PhaseForm::Alfa2,
        &trunc,
        &tol,
    )
    .unwrap();
    assert!(back.relative_distance(&big_f).unwrap() < 1e-4);
}

#[test]
fn singular_s_minus_identity_is_rejected() {
    let pg = PhaseGrid::square(&grid());
    let f = gaussian(grid(), 1.0).unwrap();
    let big_f = cross_wigner_on(&f, &f, &pg).unwrap();
    let s = metaplectic::symplectic::SymplecticMatrix::identity(1);
    let err = metaplectic_phase_apply(
        &s,
        metaplectic::indices::ConleyZehnderIndex::new(0),
        &big_f,
        PhaseForm::S1,
        &Truncation::default(),
        &Tolerances::default(),
    )
    .unwrap_err();
    assert!(matches!(err, metaplectic::Error::SingularSminusI { .. }));
}

#[test]
fn mismatched_grids_are_rejected() {
    let f = gaussian(grid(), 1.0).unwrap();
    let g = gaussian(Grid::new(1, 8.0, 64).unwrap(), 1.0).unwrap();
    assert!(matches!(cross_wigner(&f, &g), Err(metaplectic::Error::GridMismatch(_))));
}
