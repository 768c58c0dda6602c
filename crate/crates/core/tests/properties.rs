use bolax::finitegap::{g_infinity, shift_identity_residual};
use bolax::fourier::{HardyVector, Potential};
use bolax::genfun::{
    evaluate_h, functionals, partial_fraction_residual, residue_f, FMethod, HMethod,
};
use bolax::laxop::{build_lax_matrix, neumann_resolvent, resolvent_solve};
use bolax::linalg::{inverse_iteration, qr_eigenvalues, CMatrix, Lu};
use bolax::spectrum::{SpectralData, SpectralOptions};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

/// Real potential of band `1..=4` rescaled to `‖u‖_0 = norm`.
fn real_potential(max_norm: f64) -> impl Strategy<Value = Potential> {
    (
        1usize..=4,
        prop::collection::vec(coeff(), 4),
        0.001..max_norm,
    )
        .prop_map(|(band, cs, norm)| {
            let u = Potential::hermitian(&cs[..band]);
            if u.is_zero() {
                u
            } else {
                u.scaled(c(norm / u.norm(0.0), 0.0))
            }
        })
}

fn complex_potential(max_norm: f64) -> impl Strategy<Value = Potential> {
    (
        1usize..=3,
        prop::collection::vec(coeff(), 6),
        0.001..max_norm,
    )
        .prop_map(|(band, cs, norm)| {
            let entries: Vec<(i64, Complex64)> = (1..=band as i64)
                .flat_map(|k| {
                    [
                        (k, cs[2 * (k as usize - 1)]),
                        (-k, cs[2 * (k as usize - 1) + 1]),
                    ]
                })
                .collect();
            let u = Potential::general(band, &entries).unwrap();
            u.scaled(c(norm / u.norm(0.0), 0.0))
        })
}

fn opts(n_max: usize, k: usize) -> SpectralOptions {
    SpectralOptions {
        n_max,
        truncation: Some(k),
        ..SpectralOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn potential_json_round_trip_is_exact(u in complex_potential(2.0)) {
        let text = u.to_json();
        let back = Potential::from_json(&text).unwrap();
        prop_assert_eq!(&back, &u);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn real_potentials_give_hermitian_matrices(u in real_potential(2.0)) {
        let l = build_lax_matrix(&u, 24).unwrap();
        let m = l.matrix();
        prop_assert!(m.sub(&m.adjoint()).max_abs() < 1e-15);
    }

    #[test]
    fn lu_solves_random_systems(vals in prop::collection::vec(coeff(), 36), rhs in prop::collection::vec(coeff(), 6)) {
        let a = CMatrix::from_fn(6, |i, j| vals[6 * i + j] + if i == j { c(3.0, 0.0) } else { c(0.0, 0.0) });
        let x = Lu::factor(&a).solve(&rhs);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&rhs) {
            prop_assert!((ri - bi).norm() < 1e-12);
        }
    }

    #[test]
    fn qr_eigenvalues_preserve_trace(vals in prop::collection::vec(coeff(), 64)) {
        let a = CMatrix::from_fn(8, |i, j| vals[8 * i + j]);
        let ev = qr_eigenvalues(&a, 1e-13).unwrap();
        let s: Complex64 = ev.iter().sum();
        prop_assert!((s - a.trace()).norm() < 1e-10);
        for l in ev {
            let (_, residual) = inverse_iteration(&a, l);
            prop_assert!(residual < 1e-9 * a.frobenius_norm());
        }
    }

    #[test]
    fn shift_identity_holds(u in complex_potential(3.0), f in prop::collection::vec(coeff(), 1..12)) {
        let f = HardyVector::new(f);
        prop_assert!(shift_identity_residual(&u, &f) < 1e-12);
    }

    #[test]
    fn neumann_matches_direct_solve(u in complex_potential(0.2)) {
        let k = 32;
        let lambda = c(-2.5, 0.7);
        let b = HardyVector::one(k);
        let direct = resolvent_solve(&build_lax_matrix(&u, k).unwrap(), lambda, &b).unwrap();
        let series = neumann_resolvent(&u, lambda, &b, k, bolax::fourier::SobolevParams::l2()).unwrap();
        prop_assert!(series.converged);
        let diff: f64 = direct.as_slice().iter().zip(series.solution.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
        prop_assert!(diff.sqrt() < 1e-9);
    }

    #[test]
    fn g_infinity_is_unimodular(u in real_potential(0.8)) {
        let g = g_infinity(&u, 256, 40).unwrap();
        prop_assert!((g.inner(&g).re - 1.0).abs() < 1e-10);
        for j in 0..16 {
            let x = j as f64 * 0.39;
            prop_assert!((g.eval(x).norm() - 1.0).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn product_representation_matches_resolvent(u in real_potential(0.3), pts in prop::collection::vec((-2.0..12.0f64, 0.3..4.0f64, any::<bool>()), 50)) {
        let d = SpectralData::compute(&u, opts(40, 72)).unwrap();
        for (x, y, up) in pts {
            let l = c(x, if up { y } else { -y });
            let a = evaluate_h(&d, l, HMethod::Resolvent).unwrap();
            let b = evaluate_h(&d, l, HMethod::Product).unwrap();
            prop_assert!((a - b).norm() < 1e-7, "λ = {l}: {a} vs {b}");
        }
    }

    #[test]
    fn real_functionals_have_signs(u in real_potential(0.5)) {
        let d = SpectralData::compute(&u, opts(8, 64)).unwrap();
        let f = functionals(&d, 8).unwrap();
        for r in &f.rows {
            prop_assert!(r.f_contour.re <= 1e-12);
            prop_assert!(r.kappa_product.re > 0.0);
            if let Some(m) = r.mu_product {
                prop_assert!(m.re > 0.0 && m.re <= 1.0 + 1e-12);
            }
            prop_assert!(!r.flagged);
        }
    }

    #[test]
    fn partial_fractions_converge(u in real_potential(0.5)) {
        let d = SpectralData::compute(&u, opts(24, 64)).unwrap();
        let f: Vec<Complex64> = (0..=24).map(|n| residue_f(&d, n, FMethod::Contour).unwrap()).collect();
        let l = c(0.5, 2.0);
        let short = partial_fraction_residual(&d, l, &f[..4]).unwrap().norm();
        let long = partial_fraction_residual(&d, l, &f).unwrap().norm();
        prop_assert!(long <= short + 1e-14);
        prop_assert!(long < 1e-8);
    }

    #[test]
    fn trace_formula_for_complex_potentials(u in complex_potential(0.1)) {
        let d = SpectralData::compute(&u, opts(30, 80)).unwrap();
        let id = d.identities();
        prop_assert!(id.trace[..=10].iter().all(|&r| r < 1e-7));
    }
}
