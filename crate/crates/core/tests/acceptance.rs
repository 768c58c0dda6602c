//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use bolax::certify::{
    estimate_cs, kappa_mu_gap_certificates, region_bound_certificates, DEFAULT_SEED,
};
use bolax::finitegap::{
    eigen_relation_residual, g_infinity, gn_convergence_table, normalized_eigenfunctions,
    potential_from_roots, FiniteGapSpec,
};
use bolax::fourier::{Potential, SobolevParams};
use bolax::genfun::{
    evaluate_h, kappa, mu, residue_f, zero_pole_count, FMethod, HMethod, KappaMethod, MuMethod,
};
use bolax::spectrum::{
    contour_spectrum, counting_certificate, default_layout, SpectralData, SpectralOptions,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const Q: f64 = 0.3;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn opts(n_max: usize, k: usize) -> SpectralOptions {
    SpectralOptions {
        n_max,
        truncation: Some(k),
        ..SpectralOptions::default()
    }
}

fn data(u: &Potential, n_max: usize, k: usize) -> Result<SpectralData, String> {
    SpectralData::compute(u, opts(n_max, k)).map_err(|e| e.to_string())
}

fn from_roots(roots: &[f64], band: usize) -> Potential {
    let spec = FiniteGapSpec::new(roots.iter().map(|&q| c(q, 0.0)).collect()).unwrap();
    potential_from_roots(&spec, band).unwrap()
}

fn one_gap() -> Potential {
    from_roots(&[Q], 24)
}

fn two_gap() -> Potential {
    from_roots(&[0.3, 0.2], 30)
}

/// Band-limited potential with `‖u‖_0 = norm`, complex unless `real`.
fn random_potential(rng: &mut ChaCha8Rng, band: usize, norm: f64, real: bool) -> Potential {
    let mut entries = Vec::new();
    for k in 1..=band as i64 {
        let decay = 1.0 / (k * k) as f64;
        entries.push((
            k,
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay,
        ));
        if !real {
            entries.push((
                -k,
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay,
            ));
        }
    }
    let u = Potential::new(band, real, &entries).unwrap();
    u.scaled(c(norm / u.norm(0.0), 0.0))
}

fn max_over<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> f64) -> f64 {
    items.into_iter().map(f).fold(0.0, f64::max)
}

fn zero_potential() -> Check {
    let k = 64;
    let n_max = k - 32;
    let d = data(&Potential::zero(), n_max, k)?;
    let le = max_over(0..=n_max, |n| (d.lambda(n) - n as f64).norm());
    let ge = max_over(1..=n_max, |n| d.gamma(n).norm());
    ensure(le < 1e-12 && ge < 1e-12, || {
        format!("|λ_n − n| {le:.1e}, |γ_n| {ge:.1e}")
    })?;
    let pts: Vec<Complex64> = (0..20)
        .map(|j| c(-3.0 + 0.7 * j as f64, if j % 2 == 0 { 0.4 } else { -1.3 }))
        .collect();
    let mut he: f64 = 0.0;
    for &l in &pts {
        for m in [HMethod::Resolvent, HMethod::Product] {
            let h = evaluate_h(&d, l, m).map_err(|e| e.to_string())?;
            he = he.max((h + 1.0 / l).norm());
        }
    }
    ensure(he < 1e-12, || format!("|H + 1/λ| {he:.1e}"))?;
    let mut ke: f64 = 0.0;
    for n in 0..=10 {
        let expected = if n == 0 { 1.0 } else { 1.0 / n as f64 };
        for m in [KappaMethod::Eta, KappaMethod::Product] {
            ke = ke.max((kappa(&d, n, m).map_err(|e| e.to_string())? - expected).norm());
        }
    }
    ensure(ke < 1e-10, || format!("|κ_n − 1/n| {ke:.1e}"))?;
    Ok(format!(
        "|λ_n−n| {le:.1e}, |H+1/λ| {he:.1e}, |κ_n−1/n| {ke:.1e}"
    ))
}

fn one_gap_closed_forms() -> Check {
    let q2 = Q * Q;
    let g1 = q2 / (1.0 - q2);
    let d = data(&one_gap(), 12, 64)?;
    let mut worst: f64 = 0.0;
    let mut track = |got: Complex64, want: f64| worst = worst.max((got - want).norm());
    track(d.lambda(0), -g1);
    for n in 1..=12 {
        track(d.lambda(n), n as f64);
    }
    track(d.gamma(1), g1);
    let e = |r: bolax::Result<Complex64>| r.map_err(|e| e.to_string());
    for m in [KappaMethod::Eta, KappaMethod::Product] {
        track(e(kappa(&d, 1, m))?, 1.0 - q2);
    }
    for m in [MuMethod::Product, MuMethod::InnerProduct] {
        track(e(mu(&d, 1, m))?, 1.0 - q2);
    }
    for m in [FMethod::Contour, FMethod::Projector, FMethod::Eigenvector] {
        track(e(residue_f(&d, 1, m))?, -q2);
    }
    let contour = contour_spectrum(&d.lax, &d.layout, 64).map_err(|e| e.to_string())?;
    let agree = max_over(0..=12, |n| (contour.eigenvalues[n] - d.lambda(n)).norm());
    ensure(worst < 1e-8 && agree < 1e-8, || {
        format!("closed forms {worst:.1e}, dense/contour {agree:.1e}")
    })?;
    Ok(format!(
        "closed-form error {worst:.1e}, dense/contour {agree:.1e}"
    ))
}

fn trace_formula() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let potentials = vec![
        ("zero", Potential::zero()),
        ("one-gap", one_gap()),
        ("two-gap", two_gap()),
        ("complex A", random_potential(&mut rng, 3, 0.05, false)),
        ("complex B", random_potential(&mut rng, 5, 0.05, false)),
    ];
    let mut worst: f64 = 0.0;
    for (name, u) in potentials {
        let d = data(&u, 40, 96)?;
        let id = d.identities();
        let r = id.trace[..=10].iter().copied().fold(0.0, f64::max) + id.trace_tail;
        ensure(r < 1e-7, || format!("{name}: residual {r:.1e}"))?;
        worst = worst.max(r);
    }
    Ok(format!("max residual incl. tail {worst:.1e}"))
}

fn action_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 1);
    let potentials = vec![
        ("zero", Potential::zero()),
        ("one-gap", one_gap()),
        ("two-gap", two_gap()),
        ("random real", random_potential(&mut rng, 4, 0.2, true)),
    ];
    let mut worst: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for (name, u) in potentials {
        let d = data(&u, 40, 96)?;
        let id = d.identities();
        let (a, t) = (id.action.unwrap(), id.action_tail.unwrap());
        ensure(a < 1e-6, || format!("{name}: residual {a:.1e}"))?;
        worst = worst.max(a);
        tail = tail.max(t);
    }
    Ok(format!(
        "max residual {worst:.1e}, declared tail {tail:.1e}"
    ))
}

fn generating_function_zero() -> Check {
    let d = data(&one_gap(), 12, 64)?;
    let h = evaluate_h(&d, d.lambda(0) + 1.0, HMethod::Resolvent)
        .map_err(|e| e.to_string())?
        .norm();
    ensure(h < 1e-8, || format!("|H_(λ_0+1)| {h:.1e}"))?;
    for n in 0..=12 {
        let zp = zero_pole_count(&d, n).map_err(|e| e.to_string())?;
        let want = if n == 0 { -1 } else { 0 };
        ensure(zp == want, || format!("n={n}: count {zp}"))?;
    }
    Ok(format!("|H_(λ_0+1)| {h:.1e}, counts −1, 0, …, 0"))
}

fn residue_agreement() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 2);
    let potentials = vec![
        ("one-gap", one_gap()),
        ("two-gap", two_gap()),
        ("random real", random_potential(&mut rng, 4, 0.3, true)),
    ];
    let (mut spread, mut cons): (f64, f64) = (0.0, 0.0);
    for (name, u) in potentials {
        let d = data(&u, 10, 80)?;
        for n in 0..=10 {
            let e = |m| residue_f(&d, n, m).map_err(|e| e.to_string());
            let f = [
                e(FMethod::Contour)?,
                e(FMethod::Projector)?,
                e(FMethod::Eigenvector)?,
            ];
            let s = max_over([(0, 1), (0, 2), (1, 2)], |(i, j)| (f[i] - f[j]).norm());
            ensure(s < 1e-8, || format!("{name} n={n}: spread {s:.1e}"))?;
            spread = spread.max(s);
            if n >= 1 && d.gamma(n).norm() > 1e-10 {
                let k = kappa(&d, n, KappaMethod::Eta).map_err(|e| e.to_string())?;
                let r = (f[0] + k * d.gamma(n)).norm();
                ensure(r < 1e-8, || format!("{name} n={n}: |F + κγ| {r:.1e}"))?;
                cons = cons.max(r);
            }
        }
    }
    Ok(format!(
        "method spread {spread:.1e}, |F_n + κ_nγ_n| {cons:.1e}"
    ))
}

fn counting_with_perturbation() -> Check {
    let w = one_gap();
    let k = 64;
    let n_max = 12;
    let layout = default_layout(&w, k, n_max, 0.25).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 3);
    let (mut im, mut sep): (f64, f64) = (0.0, f64::INFINITY);
    for trial in 0..20 {
        let norm = rng.gen_range(0.005..0.05);
        let v = random_potential(&mut rng, 6, norm, false);
        let u = w.add(&v);
        let rep = counting_certificate(&u, &w, 0.25, n_max, Some(k), 64)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(rep.passed, || {
            format!("trial {trial}: separator check failed")
        })?;
        let d = SpectralData::with_layout(&u, opts(n_max, k), SobolevParams::l2(), layout.clone())
            .map_err(|e| format!("trial {trial}: {e}"))?;
        for n in 0..=n_max {
            im = im.max(d.lambda(n).im.abs());
            if n < n_max {
                sep = sep.min((d.lambda(n + 1) - d.lambda(n)).norm());
            }
        }
    }
    ensure(im < 0.25 && sep > 0.5, || {
        format!("max |Im λ| {im:.3}, min spacing {sep:.3}")
    })?;
    Ok(format!(
        "20 trials, max |Im λ_n| {im:.2e}, min |λ_(n+1)−λ_n| {sep:.3}"
    ))
}

fn kappa_mu_certificates() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 4);
    let mut potentials = vec![
        ("zero".to_string(), Potential::zero()),
        ("one-gap".to_string(), one_gap()),
        ("two-gap".to_string(), two_gap()),
    ];
    for i in 0..3 {
        potentials.push((
            format!("real {i}"),
            random_potential(&mut rng, 4, 0.1, true),
        ));
        potentials.push((
            format!("complex {i}"),
            random_potential(&mut rng, 4, 0.1, false),
        ));
    }
    let mut gated = 0;
    for (name, u) in &potentials {
        let d = data(u, 12, 80)?;
        match kappa_mu_gap_certificates(&d) {
            Ok(rep) => {
                gated += 1;
                if let Some(m) = rep.failures().next() {
                    return Err(format!(
                        "{name}: {} = {:.3e} > {:.3e}",
                        m.label, m.value, m.bound
                    ));
                }
            }
            Err(bolax::Error::GateFailed { .. }) => {}
            Err(e) => return Err(format!("{name}: {e}")),
        }
    }
    let small = random_potential(&mut rng, 3, 0.01, false);
    let cs = estimate_cs(0.0, 500, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let rep = region_bound_certificates(&small, SobolevParams::l2(), 0.25, 0..=9, cs, 64, 10)
        .map_err(|e| e.to_string())?;
    let h_margins: Vec<_> = rep
        .margins
        .iter()
        .filter(|m| m.label.contains("|λH|"))
        .collect();
    ensure(rep.samples >= 100, || {
        format!("only {} Vert samples", rep.samples)
    })?;
    if let Some(m) = h_margins.iter().find(|m| !m.passed) {
        return Err(format!("{}: {:.4} vs {:.4}", m.label, m.value, m.bound));
    }
    Ok(format!(
        "{gated}/{} potentials gated and certified; |λH| bound on {} Vert samples",
        potentials.len(),
        rep.samples
    ))
}

fn eigenfunction_asymptotics() -> Check {
    let mut worst_mod: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut worst_lim: f64 = 0.0;
    for (roots, band) in [(vec![Q], 24), (vec![0.3, 0.2], 30)] {
        let u = from_roots(&roots, band);
        let g = g_infinity(&u, 512, 48).map_err(|e| e.to_string())?;
        for j in 0..64 {
            let x = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
            worst_mod = worst_mod.max((g.eval(x).norm() - 1.0).abs());
        }
        worst_rel = worst_rel.max(eigen_relation_residual(&u, &g, -30, 30));
        let d = data(&u, 10, 64)?;
        let table = gn_convergence_table(&d, 10).map_err(|e| e.to_string())?;
        ensure(table.rows.iter().all(|r| r.step_bound_holds), || {
            format!("step bound fails for roots {roots:?}")
        })?;
        for r in &table.rows[roots.len()..] {
            let lim = r.to_limit.ok_or("g_∞ unavailable")?;
            worst_lim = worst_lim.max(lim);
        }
        normalized_eigenfunctions(&d, 10).map_err(|e| e.to_string())?;
    }
    ensure(
        worst_mod < 1e-10 && worst_rel < 1e-9 && worst_lim < 1e-8,
        || format!("||g_∞|−1| {worst_mod:.1e}, Dg−ug {worst_rel:.1e}, ‖g_n−g_∞‖ {worst_lim:.1e}"),
    )?;
    Ok(format!(
        "||g_∞|−1| {worst_mod:.1e}, |Dg_∞−ug_∞| {worst_rel:.1e}, ‖g_n−g_∞‖ {worst_lim:.1e} (n ≥ N)"
    ))
}

fn refinement_stability() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 5);
    let potentials = vec![
        ("one-gap", one_gap()),
        ("two-gap", two_gap()),
        ("complex", random_potential(&mut rng, 4, 0.1, false)),
    ];
    let (mut dk, mut dm): (f64, f64) = (0.0, 0.0);
    for (name, u) in potentials {
        let coarse = data(&u, 10, 64)?;
        let fine = data(&u, 10, 128)?;
        let c64 = contour_spectrum(&coarse.lax, &coarse.layout, 64).map_err(|e| e.to_string())?;
        let c128 = contour_spectrum(&coarse.lax, &coarse.layout, 128).map_err(|e| e.to_string())?;
        for n in 0..=10 {
            dk = dk.max((coarse.lambda(n) - fine.lambda(n)).norm());
            dm = dm.max((c64.eigenvalues[n] - c128.eigenvalues[n]).norm());
        }
        ensure(dk < 1e-9 && dm < 1e-9, || {
            format!("{name}: K-doubling {dk:.1e}, node-doubling {dm:.1e}")
        })?;
    }
    Ok(format!("K-doubling {dk:.1e}, node-doubling {dm:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("zero potential", zero_potential),
        ("one-gap closed forms", one_gap_closed_forms),
        ("trace formula", trace_formula),
        ("action identity", action_identity),
        (
            "generating-function zero and counts",
            generating_function_zero,
        ),
        ("residue methods agree", residue_agreement),
        (
            "counting under complex perturbation",
            counting_with_perturbation,
        ),
        ("κ/μ and H bound certificates", kappa_mu_certificates),
        ("eigenfunction asymptotics", eigenfunction_asymptotics),
        ("stability under refinement", refinement_stability),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
