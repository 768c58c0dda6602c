//! Finite-gap potentials from root data, the limit `g_∞ = e^{D⁻¹u}`, the
//! normalized eigenfunctions of a real potential and the convergence
//! `g_n → g_∞`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{multiply, szego_project, CoeffTable, HardyVector, Potential};
use crate::linalg::inverse_iteration;
use crate::spectrum::SpectralData;

/// Geometric tail of the root expansion must stay below this.
pub const BAND_TAIL_TOL: f64 = 1e-12;
/// Largest coefficient allowed at the edge of a transformed table.
pub const EDGE_TOL: f64 = 1e-12;
/// Inner products smaller than this leave the phase undefined.
pub const PHASE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Roots `q_j` of `Q(z) = ∏(1 − q_j z)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteGapSpec {
    roots: Vec<Complex64>,
}

impl FiniteGapSpec {
    pub fn new(roots: Vec<Complex64>) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one root is required".into(),
            ));
        }
        for (index, q) in roots.iter().enumerate() {
            let modulus = q.norm();
            if !(modulus > 0.0 && modulus < 1.0) {
                return Err(Error::RootOutOfDisc { index, modulus });
            }
        }
        Ok(Self { roots })
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// Number of open gaps `N`.
    pub fn gap_count(&self) -> usize {
        self.roots.len()
    }

    /// `Σ_j |q_j|^{B+1}/(1 − |q_j|)`.
    pub fn tail(&self, band: usize) -> f64 {
        self.roots
            .iter()
            .map(|q| q.norm().powi(band as i32 + 1) / (1.0 - q.norm()))
            .sum()
    }

    /// Smallest band meeting the tail criterion.
    pub fn minimal_band(&self) -> usize {
        (1..)
            .find(|&b| self.tail(b) < BAND_TAIL_TOL)
            .unwrap_or(usize::MAX)
    }

    /// `Q(z)`.
    pub fn q(&self, z: Complex64) -> Complex64 {
        self.roots.iter().map(|q| 1.0 - q * z).product()
    }
}

/// `u` with `Πu = −e^{ix}Q′(e^{ix})/Q(e^{ix})`, i.e. `û(k) = Σ_j q_j^k` for `k ≥ 1`.
pub fn potential_from_roots(spec: &FiniteGapSpec, band: usize) -> Result<Potential> {
    let tail = spec.tail(band);
    if band == 0 || tail >= BAND_TAIL_TOL {
        return Err(Error::BandTooSmall { band, tail });
    }
    let coeffs: Vec<Complex64> = (1..=band as i32)
        .map(|k| spec.roots.iter().map(|q| q.powi(k)).sum())
        .collect();
    Ok(Potential::hermitian(&coeffs))
}

/// `e^{D⁻¹u}` on `[−out_band, out_band]` from `grid` equispaced samples.
pub fn g_infinity(u: &Potential, grid: usize, out_band: usize) -> Result<CoeffTable> {
    let b = u.band();
    if grid < 4 * (b + out_band) || grid == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid {grid} is below 4(B + band) = {}",
            4 * (b + out_band)
        )));
    }
    let primitive: Vec<(i64, Complex64)> = u
        .to_table()
        .iter()
        .filter(|&(k, _)| k != 0)
        .map(|(k, c)| (k, c / k as f64))
        .collect();
    let samples: Vec<Complex64> = (0..grid)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / grid as f64;
            let v: Complex64 = primitive
                .iter()
                .map(|&(k, c)| c * Complex64::from_polar(1.0, k as f64 * x))
                .sum();
            v.exp()
        })
        .collect();
    let ob = out_band as i64;
    let table = CoeffTable::from_fn(-ob, ob, |k| {
        let s: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(j, v)| {
                v * Complex64::from_polar(
                    1.0,
                    -2.0 * PI * ((k * j as i64).rem_euclid(grid as i64)) as f64 / grid as f64,
                )
            })
            .sum();
        s / grid as f64
    });
    let edge = table.get(-ob).norm().max(table.get(ob).norm());
    if out_band > 0 && edge > EDGE_TOL {
        return Err(Error::GridTooSmall { grid, edge });
    }
    Ok(table)
}

/// Coefficient residual of `Dg = ug` on `[lo, hi]`.
pub fn eigen_relation_residual(u: &Potential, g: &CoeffTable, lo: i64, hi: i64) -> f64 {
    (lo..=hi)
        .map(|k| {
            let ug: Complex64 = u.to_table().iter().map(|(j, c)| c * g.get(k - j)).sum();
            (g.get(k) * k as f64 - ug).norm()
        })
        .fold(0.0, f64::max)
}

/// Unit eigenvectors with the canonical phases and their reduced forms.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenfunctionTable {
    pub f: Vec<HardyVector>,
    /// `g_n = e^{−inx}f_n` on `[−n, K−1−n]`.
    pub g: Vec<CoeffTable>,
    /// `⟨f_n|e^{ix}f_{n−1}⟩` for `n = 1..`, stored at `n − 1`.
    pub shift_inner: Vec<Complex64>,
    /// `None` when `g_∞` does not fit the truncation window.
    pub g_infinity: Option<CoeffTable>,
}

/// `⟨f|e^{ix}g⟩`.
fn shifted_inner(f: &HardyVector, g: &HardyVector) -> Complex64 {
    let (a, b) = (f.as_slice(), g.as_slice());
    (1..a.len()).map(|k| a[k] * b[k - 1].conj()).sum()
}

fn rotate(f: &HardyVector, phase: Complex64) -> HardyVector {
    HardyVector::new(f.as_slice().iter().map(|c| c * phase).collect())
}

/// `f_0, …, f_{n_max}` with `⟨1|f_0⟩ > 0` and `⟨f_n|e^{ix}f_{n−1}⟩ > 0`.
pub fn normalized_eigenfunctions(data: &SpectralData, n_max: usize) -> Result<EigenfunctionTable> {
    if !data.potential.is_hermitian() {
        return Err(Error::MethodUnavailable(
            "normalized eigenfunctions are defined for real potentials only",
        ));
    }
    if n_max > data.n_max() {
        return Err(Error::InvalidArgument(format!(
            "n_max {n_max} exceeds the computed range {}",
            data.n_max()
        )));
    }
    let mut f: Vec<HardyVector> = Vec::with_capacity(n_max + 1);
    let mut shift_inner = Vec::with_capacity(n_max);
    for n in 0..=n_max {
        let (v, _) = inverse_iteration(data.lax.matrix(), data.lambda(n));
        let v = HardyVector::new(v);
        let v = rotate(&v, Complex64::new(1.0 / v.norm(), 0.0));
        let ip = if n == 0 {
            v.as_slice()[0]
        } else {
            shifted_inner(&v, &f[n - 1])
        };
        if ip.norm() < PHASE_TOL {
            return Err(Error::PhaseDegenerate {
                n,
                magnitude: ip.norm(),
            });
        }
        let v = rotate(&v, ip.conj() / ip.norm());
        if n > 0 {
            shift_inner.push(shifted_inner(&v, &f[n - 1]));
        }
        f.push(v);
    }
    let g = f
        .iter()
        .enumerate()
        .map(|(n, v)| CoeffTable::new(-(n as i64), v.as_slice().to_vec()))
        .collect();
    let out = data.lax.dim() - 1;
    let grid = (4 * (data.potential.band() + out)).next_power_of_two();
    let g_infinity = g_infinity(&data.potential, grid, out).ok();
    Ok(EigenfunctionTable {
        f,
        g,
        shift_inner,
        g_infinity,
    })
}

/// `‖f − ⟨f|h⟩h‖` with `h` the normalized comparison vector.
pub fn collinearity_defect(f: &CoeffTable, h: &CoeffTable) -> f64 {
    let hn = h.inner(h).re.sqrt();
    let h = h.scale(Complex64::new(1.0 / hn, 0.0));
    let p = f.inner(&h);
    f.sub(&h.scale(p))
        .inner(&f.sub(&h.scale(p)))
        .re
        .max(0.0)
        .sqrt()
}

/// One row of [`ConvergenceTable`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `None` when `g_∞` is unavailable.
    pub to_limit: Option<f64>,
    /// `‖g_n − g_{n−1}‖`, absent for `n = 0`.
    pub step: Option<f64>,
    /// `√(1 − μ_n)`, absent for `n = 0`.
    pub mu_defect: Option<f64>,
    /// `‖g_n − g_{n−1}‖ ≤ √2·√(1 − μ_n) + tol`.
    pub step_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log‖g_n − g_∞‖` against `log n`.
    pub fit_exponent: Option<f64>,
    /// Reference rate `τ = (1/2 − s)/2`.
    pub tau: f64,
}

const STEP_TOL: f64 = 1e-9;

fn table_norm(t: &CoeffTable) -> f64 {
    t.inner(t).re.max(0.0).sqrt()
}

fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn gn_convergence_table(data: &SpectralData, n_max: usize) -> Result<ConvergenceTable> {
    let table = normalized_eigenfunctions(data, n_max)?;
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut fit = Vec::new();
    for n in 0..=n_max {
        let to_limit = table
            .g_infinity
            .as_ref()
            .map(|gi| table_norm(&table.g[n].sub(gi)));
        let (step, mu_defect) = if n == 0 {
            (None, None)
        } else {
            let ip = table.shift_inner[n - 1];
            let mu = (ip * ip).re;
            (
                Some(table_norm(&table.g[n].sub(&table.g[n - 1]))),
                Some((1.0 - mu).max(0.0).sqrt()),
            )
        };
        let step_bound_holds = match (step, mu_defect) {
            (Some(s), Some(m)) => s <= SQRT_2 * m + STEP_TOL,
            _ => true,
        };
        if let (true, Some(d)) = (n >= 1, to_limit) {
            if d > 1e-14 {
                fit.push(((n as f64).ln(), d.ln()));
            }
        }
        rows.push(ConvergenceRow {
            n,
            to_limit,
            step,
            mu_defect,
            step_bound_holds,
        });
    }
    Ok(ConvergenceTable {
        rows,
        fit_exponent: log_slope(&fit),
        tau: data.params.tau(),
    })
}

/// `|⟨f_n|1⟩|`, `|⟨uSf_{n−1}|1⟩|` and `‖(L − λ_n)Sf_{n−1}‖`, which vanish
/// together with `γ_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapVanishing {
    pub n: usize,
    pub gap: f64,
    pub constant_mode: f64,
    pub shifted_mean: f64,
    pub shifted_residual: f64,
}

pub fn gap_vanishing(
    data: &SpectralData,
    table: &EigenfunctionTable,
    n: usize,
) -> Result<GapVanishing> {
    if n == 0 || n >= table.f.len() {
        return Err(Error::InvalidArgument(format!(
            "index {n} outside 1..{}",
            table.f.len()
        )));
    }
    let sf = crate::fourier::shift(&table.f[n - 1], crate::fourier::ShiftDirection::Forward);
    let shifted_mean = multiply(&data.potential, &sf).get(0).norm();
    let lsf = data.lax.apply(&sf);
    let lambda = data.lambda(n);
    let r: Vec<Complex64> = lsf
        .as_slice()
        .iter()
        .zip(sf.as_slice())
        .map(|(a, b)| a - lambda * b)
        .collect();
    Ok(GapVanishing {
        n,
        gap: data.gamma(n).norm(),
        constant_mode: table.f[n].as_slice()[0].norm(),
        shifted_mean,
        shifted_residual: HardyVector::new(r).norm(),
    })
}

/// `L_u f` on the whole Hardy space for a polynomial `f`; exact, with
/// `B` extra modes.
pub fn lax_apply_exact(u: &Potential, f: &HardyVector) -> HardyVector {
    let d = f.dim() + u.band();
    let uf = multiply(u, f);
    HardyVector::new(
        szego_project(&uf, d)
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let fk = f.as_slice().get(k).copied().unwrap_or(ZERO);
                fk * k as f64 - c
            })
            .collect(),
    )
}

/// `max_k |(L S f − S L f − S f + ⟨uSf|1⟩1)^(k)|`.
pub fn shift_identity_residual(u: &Potential, f: &HardyVector) -> f64 {
    let mut sf = vec![ZERO];
    sf.extend_from_slice(f.as_slice());
    let sf = HardyVector::new(sf);
    let lsf = lax_apply_exact(u, &sf);
    let lf = lax_apply_exact(u, f);
    let mean = multiply(u, &sf).get(0);
    (0..lsf.dim())
        .map(|k| {
            let slf = if k == 0 {
                ZERO
            } else {
                lf.as_slice().get(k - 1).copied().unwrap_or(ZERO)
            };
            let sfk = sf.as_slice().get(k).copied().unwrap_or(ZERO);
            let one = if k == 0 { mean } else { ZERO };
            (lsf.as_slice()[k] - slf - sfk + one).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectralOptions;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_gap() -> Potential {
        potential_from_roots(&FiniteGapSpec::new(vec![c(0.3, 0.0)]).unwrap(), 24).unwrap()
    }

    fn data(u: &Potential, n_max: usize) -> SpectralData {
        SpectralData::compute(
            u,
            SpectralOptions {
                n_max,
                truncation: Some(64),
                ..Default::default()
            },
        )
        .unwrap()
    }

    /// `−e^{ix}Q′/Q` sampled and transformed back.
    fn grid_oracle(spec: &FiniteGapSpec, k: i64) -> Complex64 {
        let g = 256;
        (0..g)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / g as f64;
                let z = Complex64::from_polar(1.0, x);
                let v: Complex64 = spec.roots().iter().map(|q| q * z / (1.0 - q * z)).sum();
                v * Complex64::from_polar(1.0, -(k as f64) * x)
            })
            .sum::<Complex64>()
            / g as f64
    }

    #[test]
    fn single_root_coefficients() {
        let spec = FiniteGapSpec::new(vec![c(0.3, 0.0)]).unwrap();
        let u = potential_from_roots(&spec, 24).unwrap();
        for k in 1..=24 {
            assert_relative_eq!(u.coeff(k).re, 0.3f64.powi(k as i32), max_relative = 1e-13);
            assert!((u.coeff(k) - grid_oracle(&spec, k)).norm() < 1e-13);
            assert_eq!(u.coeff(-k), u.coeff(k).conj());
        }
    }

    #[test]
    fn two_root_coefficients() {
        let spec = FiniteGapSpec::new(vec![c(0.3, 0.0), c(0.2, 0.0)]).unwrap();
        let u = potential_from_roots(&spec, 30).unwrap();
        assert_relative_eq!(u.coeff(1).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(u.coeff(2).re, 0.13, epsilon = 1e-15);
        for k in 1..=6 {
            assert!((u.coeff(k) - grid_oracle(&spec, k)).norm() < 1e-13);
        }
    }

    #[test]
    fn root_and_band_errors() {
        assert!(matches!(
            FiniteGapSpec::new(vec![c(1.2, 0.0)]),
            Err(Error::RootOutOfDisc { index: 0, .. })
        ));
        assert!(matches!(
            FiniteGapSpec::new(vec![ZERO]),
            Err(Error::RootOutOfDisc { .. })
        ));
        let spec = FiniteGapSpec::new(vec![c(0.9, 0.0)]).unwrap();
        assert!(matches!(
            potential_from_roots(&spec, 24),
            Err(Error::BandTooSmall { .. })
        ));
    }

    #[test]
    fn small_roots_give_small_potentials() {
        let spec = FiniteGapSpec::new(vec![c(1e-4, 0.0)]).unwrap();
        let u = potential_from_roots(&spec, 4).unwrap();
        assert!(u.norm(0.0) < 2e-4);
    }

    #[test]
    fn g_infinity_of_zero() {
        let g = g_infinity(&Potential::zero(), 64, 8).unwrap();
        assert!((g.get(0) - 1.0).norm() < 1e-15);
        assert!(g.sub(&CoeffTable::new(0, vec![c(1.0, 0.0)])).max_abs() < 1e-15);
    }

    #[test]
    fn g_infinity_one_gap_closed_form() {
        let spec = FiniteGapSpec::new(vec![c(0.3, 0.0)]).unwrap();
        let u = potential_from_roots(&spec, 24).unwrap();
        let g = g_infinity(&u, 512, 40).unwrap();
        assert_relative_eq!(g.inner(&g).re, 1.0, epsilon = 1e-10);
        for j in 0..32 {
            let x = 2.0 * PI * j as f64 / 32.0;
            let z = Complex64::from_polar(1.0, x);
            let expected = spec.q(z).conj() / spec.q(z);
            assert!((g.eval(x) - expected).norm() < 1e-10);
            assert!((g.eval(x).norm() - 1.0).abs() < 1e-10);
        }
        assert!(eigen_relation_residual(&u, &g, -10, 10) < 1e-9);
    }

    #[test]
    fn g_infinity_grid_guard() {
        let u = one_gap();
        assert!(matches!(
            g_infinity(&u, 512, 6),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn zero_potential_eigenfunctions() {
        let d = data(&Potential::zero(), 6);
        let t = normalized_eigenfunctions(&d, 6).unwrap();
        for n in 0..=6 {
            assert!((t.f[n].as_slice()[n] - 1.0).norm() < 1e-12);
            assert!((t.g[n].get(0) - 1.0).norm() < 1e-12);
        }
        let table = gn_convergence_table(&d, 6).unwrap();
        for r in &table.rows {
            assert!(r.to_limit.unwrap() < 1e-12);
            assert!(r.step.unwrap_or(0.0) < 1e-12);
        }
    }

    #[test]
    fn one_gap_eigenfunctions_follow_g_infinity() {
        let u = one_gap();
        let d = data(&u, 8);
        let t = normalized_eigenfunctions(&d, 8).unwrap();
        let gi = t.g_infinity.clone().unwrap();
        for n in 1..=8 {
            assert!(collinearity_defect(&t.g[n], &gi) < 1e-8);
            assert!(t.shift_inner[n - 1].re > 0.0);
        }
        assert!(t.f[0].as_slice()[0].re > 0.0);
        assert_relative_eq!(
            (t.shift_inner[0] * t.shift_inner[0]).re,
            0.91,
            epsilon = 1e-8
        );
        let table = gn_convergence_table(&d, 8).unwrap();
        for r in &table.rows[1..] {
            assert!(r.to_limit.unwrap() < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn two_gap_step_bound() {
        let spec = FiniteGapSpec::new(vec![c(0.3, 0.0), c(0.2, 0.0)]).unwrap();
        let u = potential_from_roots(&spec, 30).unwrap();
        let d = data(&u, 8);
        let table = gn_convergence_table(&d, 8).unwrap();
        assert!(table.rows.iter().all(|r| r.step_bound_holds));
    }

    #[test]
    fn gaps_vanish_beyond_root_count() {
        let spec = FiniteGapSpec::new(vec![c(0.3, 0.0), c(0.2, 0.0)]).unwrap();
        let u = potential_from_roots(&spec, 30).unwrap();
        let d = data(&u, 8);
        let t = normalized_eigenfunctions(&d, 8).unwrap();
        for n in 3..=8 {
            let v = gap_vanishing(&d, &t, n).unwrap();
            assert!(v.gap < 1e-8);
            assert!(
                v.constant_mode < 1e-7 && v.shifted_mean < 1e-7 && v.shifted_residual < 1e-7,
                "{v:?}"
            );
        }
        let v = gap_vanishing(&d, &t, 1).unwrap();
        assert!(v.gap > 1e-3 && v.constant_mode > 1e-3);
    }

    #[test]
    fn shift_identity_is_exact() {
        let u = one_gap();
        let f = HardyVector::new(
            (0..10)
                .map(|k| c(1.0 / (k + 1) as f64, 0.1 * k as f64))
                .collect(),
        );
        assert!(shift_identity_residual(&u, &f) < 1e-13);
    }
}
