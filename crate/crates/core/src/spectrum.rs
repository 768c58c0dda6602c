//! Eigenvalues of the truncated Lax operator by two independent routes
//! (Hessenberg QR and contour-integral traces of the resolvent), labelled by
//! disc membership; gaps, the weighted gap norm, and the trace and action
//! identities.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::certify::{CertReport, Margin};
use crate::error::{Error, Result};
use crate::fourier::{HardyVector, Potential, SobolevParams};
use crate::laxop::{auto_truncation, build_lax_matrix, LaxMatrix, VertRegion};
use crate::linalg::{inverse_iteration, qr_eigenvalues, CMatrix, Lu};

/// Gaps below this size are treated as collapsed when building discs.
pub const COLLAPSED_GAP: f64 = 1e-10;
/// Convergence threshold for adaptive node doubling.
pub const NODE_TOL: f64 = 1e-9;
/// Largest node count tried by the adaptive contour rules.
pub const MAX_NODES: usize = 1024;
/// Gap magnitudes below this level are indistinguishable from rounding.
pub const NOISE_FLOOR: f64 = COLLAPSED_GAP;

/// Open disc `{|λ − center| < radius}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disc {
    pub center: Complex64,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Self { center, radius }
    }

    /// `D_n(ρ)`.
    pub fn around(n: usize, radius: f64) -> Self {
        Self::new(Complex64::new(n as f64, 0.0), radius)
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        (lambda - self.center).norm() < self.radius
    }

    /// Counterclockwise boundary node `j` of `m`.
    pub fn node(&self, j: usize, m: usize) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, 2.0 * PI * j as f64 / m as f64)
    }
}

/// Localization discs `D_{τ_n}(r_n + ρ)` together with the Vert separators
/// between them.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscLayout {
    pub rho: f64,
    pub tau: Vec<f64>,
    pub r: Vec<f64>,
    nu_last: f64,
}

impl DiscLayout {
    /// `D_n(ρ)` for `n ≤ n_max`.
    pub fn near_zero(n_max: usize, rho: f64) -> Self {
        Self {
            rho,
            tau: (0..=n_max).map(|n| n as f64).collect(),
            r: vec![0.0; n_max + 1],
            nu_last: 0.5,
        }
    }

    /// Discs from the real spectrum `λ_0(w) < λ_1(w) < …` of a reference
    /// potential: `τ_0 = λ_0`, `r_0 = 0`, and for `n ≥ 1`
    /// `r_n = γ_n/2`, `τ_n = λ_n − γ_n/2`.
    pub fn from_reference(reference: &[f64], rho: f64) -> Self {
        assert!(!reference.is_empty(), "reference spectrum is empty");
        let mut tau = vec![reference[0]];
        let mut r = vec![0.0];
        for n in 1..reference.len() {
            let gamma = reference[n] - reference[n - 1] - 1.0;
            tau.push(reference[n] - gamma / 2.0);
            r.push(if gamma.abs() < COLLAPSED_GAP {
                0.0
            } else {
                gamma / 2.0
            });
        }
        Self {
            rho,
            tau,
            r,
            nu_last: 0.5,
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Layout restricted to `n ≤ n_max`.
    pub fn truncated(&self, n_max: usize) -> Self {
        let keep = (n_max + 1).min(self.len());
        let nu_last = if keep < self.len() {
            (self.tau[keep] - self.tau[keep - 1]) / 2.0
        } else {
            self.nu_last
        };
        Self {
            rho: self.rho,
            tau: self.tau[..keep].to_vec(),
            r: self.r[..keep].to_vec(),
            nu_last,
        }
    }

    pub fn disc(&self, n: usize) -> Disc {
        Disc::new(Complex64::new(self.tau[n], 0.0), self.r[n] + self.rho)
    }

    /// Same centres and gap radii with a different margin `ρ`.
    pub fn with_rho(&self, rho: f64) -> Self {
        Self {
            rho,
            ..self.clone()
        }
    }

    /// `ν_n = (τ_n − τ_{n−1})/2`, infinite for `n = 0`.
    pub fn nu(&self, n: usize) -> f64 {
        if n == 0 {
            f64::INFINITY
        } else if n < self.len() {
            (self.tau[n] - self.tau[n - 1]) / 2.0
        } else {
            self.nu_last
        }
    }

    /// `Vert_{τ_n}(r_n + ρ; ν_n, ν_{n+1})`.
    pub fn separator(&self, n: usize) -> VertRegion {
        VertRegion {
            center: Complex64::new(self.tau[n], 0.0),
            inner_radius: self.r[n] + self.rho,
            nu_left: self.nu(n),
            nu_right: self.nu(n + 1),
        }
    }
}

/// Which solver produced a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Contour,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Contour => "contour",
        }
    }
}

/// Eigenvalues `λ_0, …, λ_{n_max}` labelled by disc.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    pub discs: Vec<Disc>,
    /// `‖(L − λ_n)v_n‖` for a unit eigenvector estimate `v_n`.
    pub residuals: Vec<f64>,
    pub method: Method,
    pub truncation: usize,
    /// Contour nodes used (largest over discs); `None` for the dense method.
    pub nodes: Option<usize>,
}

impl SpectrumResult {
    pub fn n_max(&self) -> usize {
        self.eigenvalues.len() - 1
    }
}

fn deflation_tol(lax: &LaxMatrix) -> f64 {
    1e-13 * lax.norm()
}

/// All eigenvalues of the truncation, unlabelled.
pub fn all_eigenvalues(lax: &LaxMatrix) -> Result<Vec<Complex64>> {
    qr_eigenvalues(lax.matrix(), deflation_tol(lax))
}

/// Dense eigenvalues matched to the discs of `layout`.
pub fn dense_spectrum(lax: &LaxMatrix, layout: &DiscLayout) -> Result<SpectrumResult> {
    let all = all_eigenvalues(lax)?;
    let mut eigenvalues = Vec::with_capacity(layout.len());
    let mut discs = Vec::with_capacity(layout.len());
    for n in 0..layout.len() {
        let disc = layout.disc(n);
        let inside: Vec<Complex64> = all.iter().copied().filter(|z| disc.contains(*z)).collect();
        if inside.len() != 1 {
            return Err(Error::DiscAssignmentConflict {
                n,
                count: inside.len(),
            });
        }
        eigenvalues.push(inside[0]);
        discs.push(disc);
    }
    let residuals = eigenvalues
        .iter()
        .map(|&l| inverse_iteration(lax.matrix(), l).1)
        .collect();
    Ok(SpectrumResult {
        eigenvalues,
        discs,
        residuals,
        method: Method::Dense,
        truncation: lax.dim(),
        nodes: None,
    })
}

/// Lowest `n_max + 1` eigenvalues of a real potential in increasing order.
/// The spectrum of a real potential is real and simple, so the order is the
/// labelling.
pub fn real_spectrum(lax: &LaxMatrix, n_max: usize) -> Result<Vec<f64>> {
    if !lax.potential().is_hermitian() {
        return Err(Error::InvalidArgument(
            "real_spectrum needs a hermitian potential".into(),
        ));
    }
    if n_max + 1 > lax.dim() {
        return Err(Error::InvalidArgument(format!(
            "n_max = {n_max} exceeds the truncation"
        )));
    }
    let mut re: Vec<f64> = all_eigenvalues(lax)?.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    re.truncate(n_max + 1);
    Ok(re)
}

/// Outcome of a contour-integral eigenvalue search in one disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourEigen {
    pub count: usize,
    pub eigenvalue: Option<Complex64>,
    /// `Tr P` before rounding.
    pub trace: Complex64,
    pub nodes: usize,
}

fn trace_resolvent(lax: &LaxMatrix, lambda: Complex64) -> Result<Complex64> {
    let through = || Error::ContourThroughSpectrum { node: lambda };
    let lu: Lu = lax.factor(lambda);
    lax.solve_with(&lu, lambda, &HardyVector::one(lax.dim()))
        .map_err(|_| through())?;
    let tr = lu.inverse_trace();
    if !tr.re.is_finite() || !tr.im.is_finite() || tr.norm() > 1e6 {
        return Err(through());
    }
    Ok(tr)
}

/// Trapezoid sums `(1/m)Σ f(λ_j)(λ_j − c)^p` accumulated over nested node
/// sets, doubling until every moment moves by less than `tol`.
pub(crate) fn adaptive_moments<F>(
    disc: &Disc,
    start: usize,
    moments: usize,
    tol: f64,
    mut f: F,
) -> Result<(Vec<Complex64>, usize)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut m = start.max(8);
    let mut sums = vec![Complex64::new(0.0, 0.0); moments];
    let accumulate = |sums: &mut Vec<Complex64>, z: Complex64, v: Complex64| {
        let mut w = v * z;
        for s in sums.iter_mut() {
            *s += w;
            w *= z;
        }
    };
    for j in 0..m {
        let lam = disc.node(j, m);
        accumulate(&mut sums, lam - disc.center, f(lam)?);
    }
    let mut est: Vec<Complex64> = sums.iter().map(|s| s / m as f64).collect();
    while m < MAX_NODES {
        let m2 = 2 * m;
        for j in 0..m {
            let lam = disc.node(2 * j + 1, m2);
            accumulate(&mut sums, lam - disc.center, f(lam)?);
        }
        m = m2;
        let next: Vec<Complex64> = sums.iter().map(|s| s / m as f64).collect();
        let done = next.iter().zip(&est).all(|(a, b)| (a - b).norm() < tol);
        est = next;
        if done {
            break;
        }
    }
    Ok((est, m))
}

/// Count and locate eigenvalues in `disc` from `Tr P` and
/// `−Tr (1/2πi)∮ λ R(λ) dλ`, starting from `nodes` trapezoid nodes.
pub fn contour_eigen(lax: &LaxMatrix, disc: &Disc, nodes: usize) -> Result<ContourEigen> {
    let (est, used) = adaptive_moments(disc, nodes, 2, NODE_TOL, |lam| {
        trace_resolvent(lax, lam).map(|t| -t)
    })?;
    let trace = est[0];
    let count = trace.re.round();
    if (trace - Complex64::new(count, 0.0)).norm() > 1e-3 || count < 0.0 {
        return Err(Error::NonIntegerTrace { trace });
    }
    let count = count as usize;
    let eigenvalue = (count == 1).then(|| disc.center + est[1]);
    Ok(ContourEigen {
        count,
        eigenvalue,
        trace,
        nodes: used,
    })
}

/// [`contour_eigen`] for a potential at truncation `k`.
pub fn contour_eigen_for(
    u: &Potential,
    disc: &Disc,
    k: usize,
    nodes: usize,
) -> Result<ContourEigen> {
    contour_eigen(&build_lax_matrix(u, k)?, disc, nodes)
}

/// Contour eigenvalues for every disc of `layout`, one per disc.
pub fn contour_spectrum(
    lax: &LaxMatrix,
    layout: &DiscLayout,
    nodes: usize,
) -> Result<SpectrumResult> {
    let found: Vec<Result<ContourEigen>> = (0..layout.len())
        .into_par_iter()
        .map(|n| contour_eigen(lax, &layout.disc(n), nodes))
        .collect();
    let mut eigenvalues = Vec::with_capacity(layout.len());
    let mut used = 0;
    for (n, r) in found.into_iter().enumerate() {
        let c = r?;
        match c.eigenvalue {
            Some(l) if c.count == 1 => eigenvalues.push(l),
            _ => return Err(Error::DiscAssignmentConflict { n, count: c.count }),
        }
        used = used.max(c.nodes);
    }
    let residuals = eigenvalues
        .iter()
        .map(|&l| inverse_iteration(lax.matrix(), l).1)
        .collect();
    Ok(SpectrumResult {
        eigenvalues,
        discs: (0..layout.len()).map(|n| layout.disc(n)).collect(),
        residuals,
        method: Method::Contour,
        truncation: lax.dim(),
        nodes: Some(used),
    })
}

/// Riesz projector `P = −(1/2πi)∮ R(λ) dλ` over the boundary of `disc`.
pub fn riesz_projector(lax: &LaxMatrix, disc: &Disc, nodes: usize) -> Result<CMatrix> {
    let k = lax.dim();
    let mut m = nodes.max(8);
    loop {
        let mut p = CMatrix::zeros(k);
        for j in 0..m {
            let lam = disc.node(j, m);
            let lu = lax.factor(lam);
            lax.solve_with(&lu, lam, &HardyVector::one(k))
                .map_err(|_| Error::ContourThroughSpectrum { node: lam })?;
            p.add_scaled(&lu.inverse(), -(lam - disc.center) / m as f64);
        }
        let trace = p.trace();
        let defect = p.matmul(&p).sub(&p).frobenius_norm();
        if defect <= 1e-8 || m >= MAX_NODES {
            if (trace - Complex64::new(trace.re.round(), 0.0)).norm() > 1e-6 {
                return Err(Error::NonIntegerTrace { trace });
            }
            return Ok(p);
        }
        m *= 2;
    }
}

/// Gaps `γ_n = λ_n − λ_{n−1} − 1` and the weighted norm `Σ n^{1−2s}|γ_n|`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSequence {
    /// `gaps[n − 1] = γ_n`.
    pub gaps: Vec<Complex64>,
    /// Monotone partial sums of `n^{1−2s}|γ_n|`.
    pub partial_sums: Vec<f64>,
    pub weighted_norm: f64,
}

impl GapSequence {
    pub fn gamma(&self, n: usize) -> Complex64 {
        self.gaps[n - 1]
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }
}

pub fn gaps_and_moment_map(spec: &SpectrumResult, params: SobolevParams) -> GapSequence {
    let l = &spec.eigenvalues;
    let gaps: Vec<Complex64> = (1..l.len()).map(|n| l[n] - l[n - 1] - 1.0).collect();
    let exp = 1.0 - 2.0 * params.s();
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = gaps
        .iter()
        .enumerate()
        .map(|(i, g)| {
            acc += ((i + 1) as f64).powf(exp) * g.norm();
            acc
        })
        .collect();
    GapSequence {
        gaps,
        weighted_norm: acc,
        partial_sums,
    }
}

/// Geometric extrapolation of `Σ_{k>N} a_k` from the last five terms.
/// Terms at rounding level are reported as their maximum.
pub fn geometric_tail(a: &[f64]) -> f64 {
    geometric_tail_above(a, NOISE_FLOOR)
}

/// [`geometric_tail`] with an explicit noise floor.
pub fn geometric_tail_above(a: &[f64], floor: f64) -> f64 {
    let last = &a[a.len().saturating_sub(5)..];
    let max = last.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if max < floor {
        return max;
    }
    if last.len() < 2 || last[0] == 0.0 {
        return f64::INFINITY;
    }
    let ratio = (last[last.len() - 1] / last[0]).powf(1.0 / (last.len() - 1) as f64);
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        last[last.len() - 1] * ratio / (1.0 - ratio)
    }
}

/// Residuals of `λ_n = n − Σ_{k>n} γ_k` and of `∫u²/2π = 2Σ kγ_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `|λ_n − n + Σ_{n<k≤N} γ_k|` for `n < N`.
    pub trace: Vec<f64>,
    /// Declared bound on `|Σ_{k>N} γ_k|`.
    pub trace_tail: f64,
    /// `|Σ_{k≠0} û(k)û(−k) − 2Σ_{k≤N} kγ_k|`, only for `s = 0`.
    pub action: Option<f64>,
    /// Declared bound on `2|Σ_{k>N} kγ_k|`.
    pub action_tail: Option<f64>,
}

pub fn identity_residuals(
    spec: &SpectrumResult,
    gaps: &GapSequence,
    u: &Potential,
    params: SobolevParams,
) -> IdentityResiduals {
    let l = &spec.eigenvalues;
    let big_n = gaps.len();
    let mut suffix = vec![Complex64::new(0.0, 0.0); big_n + 1];
    for k in (1..=big_n).rev() {
        suffix[k - 1] = suffix[k] + gaps.gamma(k);
    }
    let trace = (0..big_n)
        .map(|n| (l[n] - n as f64 + suffix[n]).norm())
        .collect();
    let mags: Vec<f64> = gaps.gaps.iter().map(|g| g.norm()).collect();
    let trace_tail = geometric_tail(&mags);

    let (action, action_tail) = if params.s() == 0.0 {
        let b = u.band() as i64;
        let lhs: Complex64 = (-b..=b)
            .filter(|&k| k != 0)
            .map(|k| u.coeff(k) * u.coeff(-k))
            .sum();
        let rhs: Complex64 = (1..=big_n).map(|k| gaps.gamma(k) * (2.0 * k as f64)).sum();
        let weighted: Vec<f64> = mags
            .iter()
            .enumerate()
            .map(|(i, m)| (i + 1) as f64 * m)
            .collect();
        (
            Some((lhs - rhs).norm()),
            Some(2.0 * geometric_tail_above(&weighted, NOISE_FLOOR * big_n.max(1) as f64)),
        )
    } else {
        (None, None)
    };
    IdentityResiduals {
        trace,
        trace_tail,
        action,
        action_tail,
    }
}

/// Numerical settings shared by the spectral pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralOptions {
    /// Highest eigenvalue index computed.
    pub n_max: usize,
    /// Truncation `K`; `None` selects the default rule.
    pub truncation: Option<usize>,
    /// Initial trapezoid node count.
    pub nodes: usize,
    /// Disc margin `ρ` used for labelling and contours.
    pub rho: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            n_max: 10,
            truncation: None,
            nodes: 64,
            rho: 1.0 / 3.0,
        }
    }
}

impl SpectralOptions {
    pub fn with_n_max(n_max: usize) -> Self {
        Self {
            n_max,
            ..Self::default()
        }
    }

    pub fn truncation_for(&self, u: &Potential) -> usize {
        self.truncation
            .unwrap_or_else(|| auto_truncation(self.n_max, u.band()))
    }
}

/// Discs for `u`: its own ordered spectrum if real, otherwise the spectrum
/// of its real part.
pub fn default_layout(u: &Potential, k: usize, n_max: usize, rho: f64) -> Result<DiscLayout> {
    let w = if u.is_hermitian() {
        u.clone()
    } else {
        u.real_part()
    };
    let wl = build_lax_matrix(&w, k)?;
    let extra = (n_max + 1).min(k - 1);
    let reference = real_spectrum(&wl, extra)?;
    Ok(DiscLayout::from_reference(&reference, rho).truncated(n_max))
}

/// A potential with its truncation, labelled dense spectrum and gaps.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub potential: Potential,
    pub lax: LaxMatrix,
    pub layout: DiscLayout,
    pub spectrum: SpectrumResult,
    pub gaps: GapSequence,
    pub options: SpectralOptions,
    pub params: SobolevParams,
}

impl SpectralData {
    pub fn compute(u: &Potential, options: SpectralOptions) -> Result<Self> {
        Self::compute_with(u, options, SobolevParams::l2())
    }

    pub fn compute_with(
        u: &Potential,
        options: SpectralOptions,
        params: SobolevParams,
    ) -> Result<Self> {
        let k = options.truncation_for(u);
        if k < options.n_max + 2 {
            return Err(Error::InvalidArgument(format!(
                "truncation K = {k} must be at least n_max + 2 = {}",
                options.n_max + 2
            )));
        }
        let layout = default_layout(u, k, options.n_max, options.rho)?;
        Self::with_layout(u, options, params, layout)
    }

    /// Use a caller-supplied disc layout.
    pub fn with_layout(
        u: &Potential,
        options: SpectralOptions,
        params: SobolevParams,
        layout: DiscLayout,
    ) -> Result<Self> {
        let k = options.truncation_for(u);
        let lax = build_lax_matrix(u, k)?;
        let spectrum = dense_spectrum(&lax, &layout)?;
        let gaps = gaps_and_moment_map(&spectrum, params);
        Ok(Self {
            potential: u.clone(),
            lax,
            layout,
            spectrum,
            gaps,
            options,
            params,
        })
    }

    pub fn lambda(&self, n: usize) -> Complex64 {
        self.spectrum.eigenvalues[n]
    }

    pub fn gamma(&self, n: usize) -> Complex64 {
        self.gaps.gamma(n)
    }

    pub fn n_max(&self) -> usize {
        self.spectrum.n_max()
    }

    /// Contour for index `n`: `∂D_{τ_n}(r_n + ρ)`.
    pub fn contour(&self, n: usize) -> Disc {
        self.layout.disc(n)
    }

    pub fn identities(&self) -> IdentityResiduals {
        identity_residuals(&self.spectrum, &self.gaps, &self.potential, self.params)
    }
}

/// Deterministic boundary-heavy samples of a separator region.
pub fn separator_samples(region: &VertRegion) -> Vec<Complex64> {
    let c = region.center;
    let mut pts = Vec::new();
    let r = region.inner_radius;
    for j in 0..16 {
        let z = c + Complex64::from_polar(r, 2.0 * PI * j as f64 / 16.0);
        if region.contains(z) {
            pts.push(z);
        }
    }
    let left = if region.nu_left.is_finite() {
        vec![c.re - region.nu_left]
    } else {
        vec![c.re - 1.0, c.re - 4.0, c.re - 32.0]
    };
    let heights = [0.0, 0.25, -0.25, 1.0, -1.0, 8.0, -8.0];
    for x in left.into_iter().chain([c.re + region.nu_right]) {
        for &y in &heights {
            let z = Complex64::new(x, y);
            if region.contains(z) {
                pts.push(z);
            }
        }
    }
    for &y in &[r * 1.5, -r * 1.5, 3.0, -3.0] {
        let z = Complex64::new(c.re, y);
        if region.contains(z) {
            pts.push(z);
        }
    }
    pts
}

/// Counting check: exactly one eigenvalue of `L_u` in each
/// `D_{τ_n}(r_n + ρ)` built from the real potential `w`, and an invertible
/// resolvent with bounded solution on the separators.
pub fn counting_certificate(
    u: &Potential,
    w: &Potential,
    rho: f64,
    n_max: usize,
    k: Option<usize>,
    nodes: usize,
) -> Result<CertReport> {
    if !w.is_hermitian() {
        return Err(Error::InvalidArgument(
            "the reference potential must be real".into(),
        ));
    }
    let k = k.unwrap_or_else(|| auto_truncation(n_max + 1, u.band().max(w.band())));
    let wl = build_lax_matrix(w, k)?;
    let reference = real_spectrum(&wl, (n_max + 1).min(k - 1))?;
    let layout = DiscLayout::from_reference(&reference, rho).truncated(n_max);
    let lax = build_lax_matrix(u, k)?;

    let counts: Vec<std::result::Result<usize, Option<i64>>> = (0..=n_max)
        .into_par_iter()
        .map(|n| match contour_eigen(&lax, &layout.disc(n), nodes) {
            Ok(c) => Ok(c.count),
            Err(Error::ContourThroughSpectrum { .. }) => Err(None),
            Err(Error::NonIntegerTrace { trace }) => Err(Some(trace.re.round() as i64)),
            Err(_) => Err(None),
        })
        .collect();
    let mut margins = Vec::new();
    for (n, c) in counts.into_iter().enumerate() {
        match c {
            Ok(1) => margins.push(Margin::new(format!("count n={n}"), 1.0, 1.0, None)),
            Ok(other) => {
                return Err(Error::CountMismatch {
                    n,
                    count: Some(other as i64),
                })
            }
            Err(count) => return Err(Error::CountMismatch { n, count }),
        }
    }

    let resolvent = lax.resolvent();
    let one = HardyVector::one(k);
    let mut samples = 0;
    for n in 0..=n_max {
        let region = layout.separator(n);
        let mut worst: f64 = 0.0;
        let mut worst_at = None;
        for z in separator_samples(&region) {
            samples += 1;
            let x = resolvent
                .solve(z, &one)
                .map_err(|_| Error::CountMismatch { n, count: None })?;
            if x.norm() > worst {
                worst = x.norm();
                worst_at = Some(z);
            }
        }
        margins.push(Margin::new(
            format!("separator n={n} ‖(L−λ)⁻¹1‖"),
            worst,
            1e6,
            worst_at,
        ));
    }

    let mut report = CertReport::new("counting", margins, samples + n_max + 1);
    report.parameter("rho", rho);
    report.parameter("n_max", n_max as f64);
    report.parameter("K", k as f64);
    Ok(report)
}
