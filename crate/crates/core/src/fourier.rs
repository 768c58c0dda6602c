//! Fourier-side primitives: coefficient containers, the Szegő projection,
//! multiplication by a potential, Sobolev norms and shift operators.
//!
//! A function on the torus is represented by its Fourier coefficients over an
//! explicit finite band, so products of band-limited objects are exact
//! convolutions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Japanese bracket `⟨k⟩ = max(1, |k|)`.
pub fn bracket(k: i64) -> f64 {
    k.unsigned_abs().max(1) as f64
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sobolev exponent `s ∈ [0, 1/2)` and the derived exponents σ and τ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    s: f64,
}

impl SobolevParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&s) {
            return Err(Error::InvalidArgument(format!(
                "s = {s} is outside [0, 1/2)"
            )));
        }
        Ok(Self { s })
    }

    /// The L² case `s = 0`.
    pub fn l2() -> Self {
        Self { s: 0.0 }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `σ = (s + 1/2)/2`.
    pub fn sigma(&self) -> f64 {
        (self.s + 0.5) / 2.0
    }

    /// `τ = (1/2 − s)/2`.
    pub fn tau(&self) -> f64 {
        (0.5 - self.s) / 2.0
    }
}

impl Default for SobolevParams {
    fn default() -> Self {
        Self::l2()
    }
}

/// Two-sided coefficient table `f̂(k)` for `start ≤ k < start + len`; zero
/// outside.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTable {
    start: i64,
    values: Vec<Complex64>,
}

impl CoeffTable {
    pub fn new(start: i64, values: Vec<Complex64>) -> Self {
        Self { start, values }
    }

    pub fn zero() -> Self {
        Self::new(0, Vec::new())
    }

    /// Table over `lo..=hi` filled from `f`.
    pub fn from_fn(lo: i64, hi: i64, mut f: impl FnMut(i64) -> Complex64) -> Self {
        Self::new(lo, (lo..=hi).map(&mut f).collect())
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// One past the last stored index.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, k: i64) -> Complex64 {
        if k < self.start || k >= self.end() {
            ZERO
        } else {
            self.values[(k - self.start) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.start + i as i64, c))
    }

    /// Coefficientwise `self − other` over the union of supports.
    pub fn sub(&self, other: &CoeffTable) -> CoeffTable {
        let (lo, hi) = union_range(self, other);
        CoeffTable::from_fn(lo, hi - 1, |k| self.get(k) - other.get(k))
    }

    pub fn scale(&self, c: Complex64) -> CoeffTable {
        CoeffTable::new(self.start, self.values.iter().map(|v| v * c).collect())
    }

    /// `max_k |f̂(k)|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Value of the trigonometric sum at `x`.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * x))
            .sum()
    }

    /// `⟨f|g⟩ = Σ f̂(k) conj(ĝ(k))`.
    pub fn inner(&self, other: &CoeffTable) -> Complex64 {
        let (lo, hi) = union_range(self, other);
        (lo..hi).map(|k| self.get(k) * other.get(k).conj()).sum()
    }
}

fn union_range(a: &CoeffTable, b: &CoeffTable) -> (i64, i64) {
    match (a.values.is_empty(), b.values.is_empty()) {
        (true, true) => (0, 0),
        (true, false) => (b.start, b.end()),
        (false, true) => (a.start, a.end()),
        (false, false) => (a.start.min(b.start), a.end().max(b.end())),
    }
}

/// Truncated element of the Hardy space: `f = Σ_{0≤k<K} ĥ(k) e^{ikx}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyVector(Vec<Complex64>);

impl HardyVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        assert!(!values.is_empty(), "a Hardy vector needs at least one mode");
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![ZERO; dim])
    }

    /// `e^{i·mode·x}`.
    pub fn unit(dim: usize, mode: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[mode] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    /// The constant function 1.
    pub fn one(dim: usize) -> Self {
        Self::unit(dim, 0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn to_table(&self) -> CoeffTable {
        CoeffTable::new(0, self.0.clone())
    }

    /// L² norm.
    pub fn norm(&self) -> f64 {
        crate::linalg::vec_norm(&self.0)
    }

    /// `⟨self|other⟩`, linear in the first slot.
    pub fn inner(&self, other: &HardyVector) -> Complex64 {
        crate::linalg::inner(&self.0, &other.0)
    }
}

/// Mean-zero band-limited potential `u = Σ_{1≤|k|≤B} û(k) e^{ikx}`.
///
/// Hermitian potentials are real valued: only `k ≥ 1` is stored and
/// `û(−k) = conj(û(k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    band: usize,
    hermitian: bool,
    stored: BTreeMap<i64, Complex64>,
    full: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    band: usize,
    hermitian: bool,
    coeffs: Vec<CoeffEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffEntry {
    k: i64,
    re: f64,
    im: f64,
}

impl Potential {
    /// Build from stored entries, validating the schema rules.
    pub fn new(band: usize, hermitian: bool, entries: &[(i64, Complex64)]) -> Result<Self> {
        let b = band as i64;
        let mut stored = BTreeMap::new();
        for (i, &(k, c)) in entries.iter().enumerate() {
            if k == 0 {
                return Err(Error::Schema(format!(
                    "coeffs[{i}]: k = 0 violates the mean-zero condition (û(0) must vanish)"
                )));
            }
            if k.abs() > b {
                return Err(Error::Schema(format!(
                    "coeffs[{i}]: |k| = {} exceeds band {band}",
                    k.abs()
                )));
            }
            if hermitian && k < 0 {
                return Err(Error::Schema(format!(
                    "coeffs[{i}]: negative k = {k} stored in a hermitian potential"
                )));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::Schema(format!(
                    "coeffs[{i}]: non-finite coefficient"
                )));
            }
            if stored.insert(k, c).is_some() {
                return Err(Error::Schema(format!("coeffs[{i}]: duplicate k = {k}")));
            }
        }
        let mut full = vec![ZERO; 2 * band + 1];
        for (&k, &c) in &stored {
            full[(k + b) as usize] = c;
            if hermitian {
                full[(b - k) as usize] = c.conj();
            }
        }
        Ok(Self {
            band,
            hermitian,
            stored,
            full,
        })
    }

    /// Real-valued potential from `û(k)`, `k = 1..=B`.
    pub fn hermitian(positive: &[Complex64]) -> Self {
        let entries: Vec<(i64, Complex64)> = positive
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as i64 + 1, c))
            .collect();
        Self::new(positive.len(), true, &entries).expect("entries are in band")
    }

    /// General complex potential from explicit `(k, û(k))` pairs.
    pub fn general(band: usize, entries: &[(i64, Complex64)]) -> Result<Self> {
        Self::new(band, false, entries)
    }

    pub fn zero() -> Self {
        Self::new(0, true, &[]).expect("empty potential is valid")
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `û(k)`; zero outside the band and at `k = 0`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let b = self.band as i64;
        if k.abs() > b {
            ZERO
        } else {
            self.full[(k + b) as usize]
        }
    }

    /// Entries as stored (hermitian potentials only hold `k ≥ 1`).
    pub fn stored(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.stored.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.full.iter().all(|c| *c == ZERO)
    }

    pub fn to_table(&self) -> CoeffTable {
        CoeffTable::new(-(self.band as i64), self.full.clone())
    }

    /// `‖u‖_σ`.
    pub fn norm(&self, sigma: f64) -> f64 {
        sobolev_norm(&self.to_table(), sigma, None)
    }

    /// `c·u`; stays hermitian only for real `c`.
    pub fn scaled(&self, c: Complex64) -> Potential {
        if self.hermitian && c.im == 0.0 {
            let e: Vec<_> = self.stored().map(|(k, v)| (k, v * c)).collect();
            Potential::new(self.band, true, &e).expect("scaling preserves the schema")
        } else {
            Potential::general(self.band, &self.dense_entries(|v| v * c)).expect("in band")
        }
    }

    /// `u + v`, hermitian when both summands are.
    pub fn add(&self, other: &Potential) -> Potential {
        let band = self.band.max(other.band);
        let b = band as i64;
        if self.hermitian && other.hermitian {
            let e: Vec<_> = (1..=b)
                .map(|k| (k, self.coeff(k) + other.coeff(k)))
                .collect();
            Potential::new(band, true, &e).expect("in band")
        } else {
            let e: Vec<_> = (-b..=b)
                .filter(|&k| k != 0)
                .map(|k| (k, self.coeff(k) + other.coeff(k)))
                .collect();
            Potential::general(band, &e).expect("in band")
        }
    }

    /// `u_*(x) = u(−x)`, i.e. `û_*(k) = û(−k)`.
    pub fn reflected(&self) -> Potential {
        let b = self.band as i64;
        if self.hermitian {
            let e: Vec<_> = (1..=b).map(|k| (k, self.coeff(-k))).collect();
            Potential::new(self.band, true, &e).expect("in band")
        } else {
            let e: Vec<_> = (-b..=b)
                .filter(|&k| k != 0)
                .map(|k| (k, self.coeff(-k)))
                .collect();
            Potential::general(self.band, &e).expect("in band")
        }
    }

    /// Real part `(u + ū)/2` as a hermitian potential.
    pub fn real_part(&self) -> Potential {
        let b = self.band as i64;
        let e: Vec<_> = (1..=b)
            .map(|k| (k, (self.coeff(k) + self.coeff(-k).conj()) * 0.5))
            .collect();
        Potential::new(self.band, true, &e).expect("in band")
    }

    fn dense_entries(&self, f: impl Fn(Complex64) -> Complex64) -> Vec<(i64, Complex64)> {
        let b = self.band as i64;
        (-b..=b)
            .filter(|&k| k != 0)
            .map(|k| (k, f(self.coeff(k))))
            .collect()
    }

    /// Canonical JSON text: entries sorted by `k`, shortest round-trip floats.
    pub fn to_json(&self) -> String {
        let file = PotentialFile {
            band: self.band,
            hermitian: self.hermitian,
            coeffs: self
                .stored()
                .map(|(k, c)| CoeffEntry {
                    k,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PotentialFile = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let entries: Vec<(i64, Complex64)> = file
            .coeffs
            .iter()
            .map(|c| (c.k, Complex64::new(c.re, c.im)))
            .collect();
        Self::new(file.band, file.hermitian, &entries)
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Szegő projection: keep modes `0..K`.
pub fn szego_project(f: &CoeffTable, k: usize) -> HardyVector {
    assert!(k >= 1, "projection needs K ≥ 1");
    HardyVector::new((0..k as i64).map(|m| f.get(m)).collect())
}

/// Exact product `u·f` as a two-sided table on `[−B, K−1+B]`.
pub fn multiply(u: &Potential, f: &HardyVector) -> CoeffTable {
    let b = u.band() as i64;
    let k = f.dim() as i64;
    let fs = f.as_slice();
    CoeffTable::from_fn(-b, k - 1 + b, |m| {
        let lo = (m - b).max(0);
        let hi = (m + b).min(k - 1);
        (lo..=hi).map(|j| u.coeff(m - j) * fs[j as usize]).sum()
    })
}

/// `‖f‖_σ`, or the shifted norm `‖f‖_{σ;n}` weighting mode `k` by `⟨k−n⟩`.
pub fn sobolev_norm(f: &CoeffTable, sigma: f64, shift: Option<usize>) -> f64 {
    let n = shift.map_or(0, |n| n as i64);
    compensated_sum(
        f.iter()
            .map(|(k, c)| bracket(k - n).powf(2.0 * sigma) * c.norm_sqr()),
    )
    .sqrt()
}

/// `D⁻¹f`: coefficient `f̂(k)/k`, zero at `k = 0`.
pub fn antiderivative(f: &CoeffTable) -> Result<CoeffTable> {
    if f.get(0) != ZERO {
        return Err(Error::InvalidArgument("D⁻¹ needs a mean-zero input".into()));
    }
    Ok(CoeffTable::new(
        f.start(),
        f.iter()
            .map(|(k, c)| if k == 0 { ZERO } else { c / k as f64 })
            .collect(),
    ))
}

/// Direction of the shift on the Hardy space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    /// `S f = e^{ix} f`.
    Forward,
    /// `S* f = T_{e^{−ix}} f`.
    Adjoint,
}

/// Shift within the truncation; the mode pushed out of range is dropped.
pub fn shift(f: &HardyVector, direction: ShiftDirection) -> HardyVector {
    let v = f.as_slice();
    let k = v.len();
    let out = match direction {
        ShiftDirection::Forward => (0..k)
            .map(|m| if m == 0 { ZERO } else { v[m - 1] })
            .collect(),
        ShiftDirection::Adjoint => (0..k)
            .map(|m| if m + 1 < k { v[m + 1] } else { ZERO })
            .collect(),
    };
    HardyVector::new(out)
}
