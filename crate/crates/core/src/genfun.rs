//! The generating function `H_λ = ⟨(L_u − λ)⁻¹1|1⟩`, its residues `F_n`,
//! the functions `η_n`, the scaling factors `κ_n` and the normalizers `μ_n`,
//! each computed by at least two independent routes.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finitegap::normalized_eigenfunctions;
use crate::fourier::HardyVector;
use crate::laxop::LaxMatrix;
use crate::linalg::inverse_iteration;
use crate::spectrum::{
    adaptive_moments, geometric_tail, riesz_projector, Disc, SpectralData, COLLAPSED_GAP,
};

/// Trapezoid convergence threshold for residues and Cauchy integrals.
pub const QUAD_TOL: f64 = 1e-13;
/// Methods disagreeing by more than this are flagged.
pub const DISAGREEMENT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HMethod {
    Resolvent,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FMethod {
    Contour,
    Projector,
    Eigenvector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaMethod {
    Eta,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MuMethod {
    Product,
    InnerProduct,
}

/// `⟨(L − λ)⁻¹1|1⟩` on a truncation.
pub fn h_resolvent(lax: &LaxMatrix, lambda: Complex64) -> Result<Complex64> {
    Ok(lax.solve(lambda, &HardyVector::one(lax.dim()))?.as_slice()[0])
}

/// `(H_λ, H′_λ)` with `H′_λ = ⟨(L − λ)⁻²1|1⟩` from one factorization.
pub fn h_with_derivative(lax: &LaxMatrix, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    let lu = lax.factor(lambda);
    let x = lax.solve_with(&lu, lambda, &HardyVector::one(lax.dim()))?;
    let y = lax.solve_with(&lu, lambda, &x)?;
    Ok((x.as_slice()[0], y.as_slice()[0]))
}

/// Relative size of the omitted factors `p > N` of an infinite product at
/// `λ`: `exp(Σ_{p>N}|γ_p| / dist) − 1`.
pub fn product_tail(data: &SpectralData, lambda: Complex64) -> f64 {
    let mags: Vec<f64> = data.gaps.gaps.iter().map(|g| g.norm()).collect();
    let tail = geometric_tail(&mags);
    let next = (data.n_max() + 1) as f64;
    let dist = ((Complex64::new(next, 0.0) - lambda).norm() - 0.5).max(0.5);
    (tail / dist).exp() - 1.0
}

/// `H_λ` from the resolvent or from `(1/(λ_0 − λ))∏_{p≥1}(1 − γ_p/(λ_p − λ))`.
pub fn evaluate_h(data: &SpectralData, lambda: Complex64, method: HMethod) -> Result<Complex64> {
    match method {
        HMethod::Resolvent => h_resolvent(&data.lax, lambda),
        HMethod::Product => {
            let mut h = 1.0 / (data.lambda(0) - lambda);
            for p in 1..=data.n_max() {
                h *= 1.0 - data.gamma(p) / (data.lambda(p) - lambda);
            }
            Ok(h)
        }
    }
}

/// `(1/2πi)∮ f dλ` on the boundary of `disc`.
fn contour_integral(
    disc: &Disc,
    nodes: usize,
    f: impl FnMut(Complex64) -> Result<Complex64>,
) -> Result<Complex64> {
    Ok(adaptive_moments(disc, nodes, 1, QUAD_TOL, f)?.0[0])
}

/// Unit eigenvector for `λ_n`.
pub fn eigenvector(data: &SpectralData, n: usize) -> HardyVector {
    HardyVector::new(inverse_iteration(data.lax.matrix(), data.lambda(n)).0)
}

/// Residue `F_n` of `H` at `λ_n`.
pub fn residue_f(data: &SpectralData, n: usize, method: FMethod) -> Result<Complex64> {
    let disc = data.contour(n);
    match method {
        FMethod::Contour => {
            contour_integral(&disc, data.options.nodes, |l| h_resolvent(&data.lax, l))
        }
        FMethod::Projector => {
            let p = riesz_projector(&data.lax, &disc, data.options.nodes)?;
            Ok(-p[(0, 0)])
        }
        FMethod::Eigenvector => {
            if !data.potential.is_hermitian() {
                return Err(Error::MethodUnavailable(
                    "eigenvector route needs the normalized basis of a real potential",
                ));
            }
            let f = eigenvector(data, n);
            Ok(Complex64::new(-f.as_slice()[0].norm_sqr(), 0.0))
        }
    }
}

/// `η_n(λ)` from its defining formula, valid off the disc.
pub fn eta_direct(data: &SpectralData, n: usize, lambda: Complex64) -> Result<Complex64> {
    let h = h_resolvent(&data.lax, lambda)?;
    let l0 = data.lambda(0);
    if n == 0 {
        return Ok(-(lambda - l0) * h);
    }
    let ln = data.lambda(n);
    let zero = data.lambda(n - 1) + 1.0;
    Ok(-(lambda - ln) / (lambda - zero) * (lambda - l0) * h)
}

/// `η_n(λ)` for `λ` inside the contour disc, by the Cauchy integral.
pub fn eta_cauchy(data: &SpectralData, n: usize, lambda: Complex64) -> Result<Complex64> {
    let disc = data.contour(n);
    contour_integral(&disc, data.options.nodes, |m| {
        Ok(eta_direct(data, n, m)? / (m - lambda))
    })
}

/// Scaling factor `κ_n`.
pub fn kappa(data: &SpectralData, n: usize, method: KappaMethod) -> Result<Complex64> {
    let l0 = data.lambda(0);
    match method {
        KappaMethod::Eta => {
            if n == 0 {
                return eta_cauchy(data, 0, l0);
            }
            let ln = data.lambda(n);
            Ok(eta_cauchy(data, n, ln)? / (ln - l0))
        }
        KappaMethod::Product => {
            let ln = data.lambda(n);
            let mut k = if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                1.0 / (ln - l0)
            };
            for p in 1..=data.n_max() {
                if p != n {
                    k *= 1.0 - data.gamma(p) / (data.lambda(p) - ln);
                }
            }
            Ok(k)
        }
    }
}

/// `|F_n + κ_nγ_n|`, skipped for collapsed gaps.
pub fn kappa_consistency(
    data: &SpectralData,
    n: usize,
    f: Complex64,
    kappa_n: Complex64,
) -> Result<f64> {
    let g = data.gamma(n);
    if g.norm() < 1e-12 {
        return Err(Error::GapTooSmall { n, gap: g.norm() });
    }
    Ok((f + kappa_n * g).norm())
}

/// Normalizer `μ_n`, `n ≥ 1`.
pub fn mu(data: &SpectralData, n: usize, method: MuMethod) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidArgument("μ_n is defined for n ≥ 1".into()));
    }
    match method {
        MuMethod::Product => {
            let l = |k: usize| data.lambda(k);
            let gn = data.gamma(n);
            let mut m = 1.0 - gn / (l(n) - l(0));
            for p in 1..=data.n_max() {
                if p != n {
                    m *= 1.0 - gn * data.gamma(p) / ((l(p - 1) - l(n - 1)) * (l(p) - l(n)));
                }
            }
            Ok(m)
        }
        MuMethod::InnerProduct => {
            if !data.potential.is_hermitian() {
                return Err(Error::MethodUnavailable(
                    "inner-product route needs the normalized basis of a real potential",
                ));
            }
            let table = normalized_eigenfunctions(data, n)?;
            let ip = table.shift_inner[n - 1];
            Ok(ip * ip)
        }
    }
}

/// `η_n` on a grid together with `|H_{λ_{n−1}+1}|`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaCheck {
    pub values: Vec<Complex64>,
    /// `None` when `n = 0` or the gap is collapsed.
    pub zero_residual: Option<f64>,
}

/// Evaluate `η_n` on `grid`: by the Cauchy integral inside
/// `D_{τ_n}(r_n + 1/4)`, directly elsewhere.
pub fn eta_and_zero_check(data: &SpectralData, n: usize, grid: &[Complex64]) -> Result<EtaCheck> {
    let inner = Disc::new(data.layout.disc(n).center, data.layout.r[n] + 0.25);
    let values = grid
        .iter()
        .map(|&l| {
            if inner.contains(l) {
                eta_cauchy(data, n, l)
            } else {
                eta_direct(data, n, l)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let zero_residual = if n == 0 || data.gamma(n).norm() < COLLAPSED_GAP {
        None
    } else {
        Some(h_resolvent(&data.lax, data.lambda(n - 1) + 1.0)?.norm())
    };
    Ok(EtaCheck {
        values,
        zero_residual,
    })
}

/// Zeros minus poles of `H` inside the contour of index `n`, from
/// `(1/2πi)∮ H′/H dλ`.
pub fn zero_pole_count(data: &SpectralData, n: usize) -> Result<i64> {
    let disc = data.contour(n);
    let v = contour_integral(&disc, data.options.nodes, |l| {
        let (h, dh) = h_with_derivative(&data.lax, l)?;
        Ok(dh / h)
    })?;
    let r = v.re.round();
    if (v - Complex64::new(r, 0.0)).norm() > 1e-3 {
        return Err(Error::NonIntegerTrace { trace: v });
    }
    Ok(r as i64)
}

/// `H_λ − Σ_{n≤n_max} F_n/(λ − λ_n)`.
pub fn partial_fraction_residual(
    data: &SpectralData,
    lambda: Complex64,
    f: &[Complex64],
) -> Result<Complex64> {
    let h = h_resolvent(&data.lax, lambda)?;
    let sum: Complex64 = f
        .iter()
        .enumerate()
        .map(|(n, fv)| fv / (lambda - data.lambda(n)))
        .sum();
    Ok(h - sum)
}

/// One row of the functional table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalRow {
    pub n: usize,
    pub f_contour: Complex64,
    pub f_projector: Complex64,
    pub f_eigenvector: Option<Complex64>,
    pub kappa_eta: Complex64,
    pub kappa_product: Complex64,
    pub mu_product: Option<Complex64>,
    pub mu_inner: Option<Complex64>,
    /// Largest pairwise gap between the `F_n` routes.
    pub f_discrepancy: f64,
    pub kappa_discrepancy: f64,
    pub mu_discrepancy: Option<f64>,
    /// `|F_n + κ_nγ_n|`, absent when the gap is collapsed.
    pub consistency: Option<f64>,
    /// Some pair of routes disagrees beyond `1e−6`.
    pub flagged: bool,
}

/// `F_n`, `κ_n`, `μ_n` by every available route.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralFunctionals {
    pub rows: Vec<FunctionalRow>,
    /// `Σ n^{2−2s}|F_n|` over the table.
    pub summability: f64,
    pub methods: Vec<&'static str>,
}

fn spread(values: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            d = d.max((values[i] - values[j]).norm());
        }
    }
    d
}

pub fn functionals(data: &SpectralData, n_max: usize) -> Result<SpectralFunctionals> {
    let real = data.potential.is_hermitian();
    let basis = if real && n_max > 0 {
        Some(normalized_eigenfunctions(data, n_max)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut summability = 0.0;
    for n in 0..=n_max {
        let f_contour = residue_f(data, n, FMethod::Contour)?;
        let f_projector = residue_f(data, n, FMethod::Projector)?;
        let f_eigenvector = if real {
            Some(residue_f(data, n, FMethod::Eigenvector)?)
        } else {
            None
        };
        let kappa_eta = kappa(data, n, KappaMethod::Eta)?;
        let kappa_product = kappa(data, n, KappaMethod::Product)?;
        let (mu_product, mu_inner) = if n == 0 {
            (None, None)
        } else {
            let ip = basis
                .as_ref()
                .map(|b| b.shift_inner[n - 1] * b.shift_inner[n - 1]);
            (Some(mu(data, n, MuMethod::Product)?), ip)
        };
        let mut fs = vec![f_contour, f_projector];
        fs.extend(f_eigenvector);
        let f_discrepancy = spread(&fs);
        let kappa_discrepancy = (kappa_eta - kappa_product).norm();
        let mu_discrepancy = match (mu_product, mu_inner) {
            (Some(a), Some(b)) => Some((a - b).norm()),
            _ => None,
        };
        let consistency = if n == 0 {
            None
        } else {
            kappa_consistency(data, n, f_contour, kappa_product).ok()
        };
        let flagged = f_discrepancy > DISAGREEMENT
            || kappa_discrepancy > DISAGREEMENT
            || mu_discrepancy.is_some_and(|d| d > DISAGREEMENT);
        if n >= 1 {
            summability += (n as f64).powf(2.0 - 2.0 * data.params.s()) * f_contour.norm();
        }
        rows.push(FunctionalRow {
            n,
            f_contour,
            f_projector,
            f_eigenvector,
            kappa_eta,
            kappa_product,
            mu_product,
            mu_inner,
            f_discrepancy,
            kappa_discrepancy,
            mu_discrepancy,
            consistency,
            flagged,
        });
    }
    let mut methods = vec!["contour", "projector", "eta", "product"];
    if real {
        methods.extend(["eigenvector", "innerproduct"]);
    }
    Ok(SpectralFunctionals {
        rows,
        summability,
        methods,
    })
}

/// Samples of `H` on a rectangular grid for plotting; points where the
/// resolvent is singular are skipped.
pub fn h_grid(
    data: &SpectralData,
    re: (f64, f64),
    im: (f64, f64),
    steps: usize,
) -> Vec<(Complex64, Complex64)> {
    let steps = steps.max(2);
    let mut out = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let x = re.0 + (re.1 - re.0) * i as f64 / (steps - 1) as f64;
            let y = im.0 + (im.1 - im.0) * j as f64 / (steps - 1) as f64;
            let l = Complex64::new(x, y);
            if let Ok(h) = h_resolvent(&data.lax, l) {
                out.push((l, h));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::Potential;
    use crate::spectrum::SpectralOptions;
    use approx::assert_relative_eq;

    const Q: f64 = 0.3;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_gap() -> SpectralData {
        let u = Potential::hermitian(&(1..=24).map(|k| c(Q.powi(k), 0.0)).collect::<Vec<_>>());
        SpectralData::compute(
            &u,
            SpectralOptions {
                n_max: 12,
                truncation: Some(64),
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn zero() -> SpectralData {
        SpectralData::compute(&Potential::zero(), SpectralOptions::with_n_max(6)).unwrap()
    }

    #[test]
    fn h_of_zero_potential() {
        let d = zero();
        let h = evaluate_h(&d, c(-2.0, 0.0), HMethod::Resolvent).unwrap();
        assert_relative_eq!(h.re, 0.5, epsilon = 1e-15);
        let p = evaluate_h(&d, c(-2.0, 0.0), HMethod::Product).unwrap();
        assert_relative_eq!(p.re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn residues_of_zero_potential() {
        let d = zero();
        for m in [FMethod::Contour, FMethod::Projector, FMethod::Eigenvector] {
            assert!((residue_f(&d, 0, m).unwrap() + 1.0).norm() < 1e-12);
            assert!(residue_f(&d, 3, m).unwrap().norm() < 1e-12);
        }
        assert_relative_eq!(
            kappa(&d, 0, KappaMethod::Eta).unwrap().re,
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            kappa(&d, 4, KappaMethod::Product).unwrap().re,
            0.25,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            kappa(&d, 4, KappaMethod::Eta).unwrap().re,
            0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn one_gap_functionals() {
        let d = one_gap();
        let f1 = residue_f(&d, 1, FMethod::Contour).unwrap();
        assert_relative_eq!(f1.re, -Q * Q, epsilon = 1e-8);
        for m in [KappaMethod::Eta, KappaMethod::Product] {
            assert_relative_eq!(kappa(&d, 1, m).unwrap().re, 1.0 - Q * Q, epsilon = 1e-8);
        }
        for m in [MuMethod::Product, MuMethod::InnerProduct] {
            assert_relative_eq!(mu(&d, 1, m).unwrap().re, 1.0 - Q * Q, epsilon = 1e-8);
            assert_relative_eq!(mu(&d, 3, m).unwrap().re, 1.0, epsilon = 1e-8);
        }
        let zero = d.lambda(0) + 1.0;
        let closed = evaluate_h(&d, zero, HMethod::Product).unwrap();
        assert!(closed.norm() < 1e-8);
        assert!(h_resolvent(&d.lax, zero).unwrap().norm() < 1e-8);
    }

    #[test]
    fn complex_potential_rejects_basis_routes() {
        let u = Potential::general(1, &[(1, c(0.0, 0.01)), (-1, c(0.0, 0.01))]).unwrap();
        let d = SpectralData::compute(&u, SpectralOptions::with_n_max(4)).unwrap();
        assert!(matches!(
            residue_f(&d, 1, FMethod::Eigenvector),
            Err(Error::MethodUnavailable(_))
        ));
        assert!(matches!(
            mu(&d, 1, MuMethod::InnerProduct),
            Err(Error::MethodUnavailable(_))
        ));
    }

    #[test]
    fn eta_is_one_for_zero_potential() {
        let d = zero();
        let grid = [c(3.1, 0.05), c(3.5, 2.0), c(2.6, -0.3), c(3.0, 0.0)];
        let e = eta_and_zero_check(&d, 3, &grid).unwrap();
        for v in e.values {
            assert!((v - 1.0).norm() < 1e-12, "{v}");
        }
        assert_eq!(e.zero_residual, None);
    }

    #[test]
    fn zero_pole_counts() {
        let d = one_gap();
        assert_eq!(zero_pole_count(&d, 0).unwrap(), -1);
        for n in 1..=4 {
            assert_eq!(zero_pole_count(&d, n).unwrap(), 0);
        }
    }

    #[test]
    fn collapsed_gap_consistency_is_skipped() {
        let d = one_gap();
        let f = residue_f(&d, 5, FMethod::Contour).unwrap();
        let k = kappa(&d, 5, KappaMethod::Product).unwrap();
        assert!(matches!(
            kappa_consistency(&d, 5, f, k),
            Err(Error::GapTooSmall { .. })
        ));
        let f1 = residue_f(&d, 1, FMethod::Contour).unwrap();
        let k1 = kappa(&d, 1, KappaMethod::Eta).unwrap();
        assert!(kappa_consistency(&d, 1, f1, k1).unwrap() < 1e-8);
    }
}
