//! Galerkin truncation of `L_u = D − T_u` on the modes `0..K`, resolvent
//! solves, the Neumann-series resolvent and weighted operator norms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{
    bracket, multiply, sobolev_norm, szego_project, HardyVector, Potential, SobolevParams,
};
use crate::linalg::{spectral_norm, vec_norm, CMatrix, Lu};

/// Relative residual accepted from a resolvent solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Default truncation `K = n_max + 8B + 32`.
pub fn auto_truncation(n_max: usize, band: usize) -> usize {
    n_max + 8 * band + 32
}

/// Dense Galerkin matrix `M[m][k] = k·δ_{mk} − û(m−k)`.
#[derive(Clone, Debug)]
pub struct LaxMatrix {
    potential: Potential,
    matrix: CMatrix,
    norm: f64,
}

pub fn build_lax_matrix(u: &Potential, k: usize) -> Result<LaxMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "truncation K = {k} must be at least 2"
        )));
    }
    let matrix = CMatrix::from_fn(k, |m, j| {
        let d = if m == j {
            Complex64::new(j as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        d - u.coeff(m as i64 - j as i64)
    });
    let norm = matrix.frobenius_norm();
    Ok(LaxMatrix {
        potential: u.clone(),
        matrix,
        norm,
    })
}

impl LaxMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Frobenius norm of the truncation.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn apply(&self, f: &HardyVector) -> HardyVector {
        HardyVector::new(self.matrix.matvec(f.as_slice()))
    }

    /// LU factorization of `L − λ`.
    pub fn factor(&self, lambda: Complex64) -> Lu {
        Lu::factor(&self.matrix.shifted(lambda))
    }

    /// Solve `(L − λ)x = b` with a fresh factorization.
    pub fn solve(&self, lambda: Complex64, b: &HardyVector) -> Result<HardyVector> {
        let lu = self.factor(lambda);
        self.solve_with(&lu, lambda, b)
    }

    /// Solve with a given factorization of `L − λ` and check the residual.
    pub fn solve_with(&self, lu: &Lu, lambda: Complex64, b: &HardyVector) -> Result<HardyVector> {
        let bnorm = b.norm();
        if lu.is_singular() {
            return Err(Error::SingularResolvent {
                lambda,
                residual: f64::INFINITY,
            });
        }
        let x = lu.solve(b.as_slice());
        let r: Vec<Complex64> = self
            .matrix
            .matvec(&x)
            .iter()
            .zip(&x)
            .zip(b.as_slice())
            .map(|((ax, xi), bi)| ax - lambda * xi - bi)
            .collect();
        let residual = if bnorm > 0.0 {
            vec_norm(&r) / bnorm
        } else {
            vec_norm(&r)
        };
        if !residual.is_finite() || residual > SOLVE_TOL {
            return Err(Error::SingularResolvent { lambda, residual });
        }
        Ok(HardyVector::new(x))
    }

    /// Resolvent with a factorization cache keyed by λ.
    pub fn resolvent(&self) -> Resolvent<'_> {
        Resolvent {
            lax: self,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

/// `(L − λ)⁻¹` with factorizations reused across right-hand sides. The cache
/// only ever holds complete factorizations.
pub struct Resolvent<'a> {
    lax: &'a LaxMatrix,
    cache: Mutex<HashMap<(u64, u64), Arc<Lu>>>,
}

impl Resolvent<'_> {
    pub fn factorization(&self, lambda: Complex64) -> Arc<Lu> {
        let key = (lambda.re.to_bits(), lambda.im.to_bits());
        if let Some(lu) = self.cache.lock().expect("cache lock").get(&key) {
            return Arc::clone(lu);
        }
        let lu = Arc::new(self.lax.factor(lambda));
        let mut guard = self.cache.lock().expect("cache lock");
        Arc::clone(guard.entry(key).or_insert(lu))
    }

    pub fn solve(&self, lambda: Complex64, b: &HardyVector) -> Result<HardyVector> {
        let lu = self.factorization(lambda);
        self.lax.solve_with(&lu, lambda, b)
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

/// `(L − λ)⁻¹ b` by dense LU.
pub fn resolvent_solve(lax: &LaxMatrix, lambda: Complex64, b: &HardyVector) -> Result<HardyVector> {
    lax.solve(lambda, b)
}

/// Result of a partial Neumann sum.
#[derive(Clone, Debug)]
pub struct NeumannOutcome {
    pub solution: HardyVector,
    pub converged: bool,
    pub diverged: bool,
    pub terms_used: usize,
    /// `‖y_{m+1}‖/‖y_m‖` in the shifted `−s` norm centred at the nearest
    /// mode, where `y_{m+1} = T_u(D − λ)⁻¹ y_m`.
    pub ratios: Vec<f64>,
}

/// `Σ_m (D − λ)⁻¹ (T_u (D − λ)⁻¹)^m b` on the modes of `b`.
pub fn neumann_resolvent(
    u: &Potential,
    lambda: Complex64,
    b: &HardyVector,
    kmax: usize,
    params: SobolevParams,
) -> Result<NeumannOutcome> {
    let k = b.dim();
    for j in 0..k {
        if Complex64::new(j as f64, 0.0) == lambda {
            return Err(Error::InvalidArgument(format!(
                "λ = {lambda} is a mode of D"
            )));
        }
    }
    if kmax == 0 {
        return Err(Error::InvalidArgument("kmax must be at least 1".into()));
    }
    let s = -params.s();
    let centre = lambda.re.round().max(0.0) as usize;
    let weighted = |v: &HardyVector| sobolev_norm(&v.to_table(), s, Some(centre));
    let divide = |y: &HardyVector| {
        HardyVector::new(
            y.as_slice()
                .iter()
                .enumerate()
                .map(|(j, c)| c / (Complex64::new(j as f64, 0.0) - lambda))
                .collect(),
        )
    };
    let tol = 1e-12 * sobolev_norm(&b.to_table(), s, None);

    let mut y = b.clone();
    let mut term = divide(&y);
    let mut sum = term.as_slice().to_vec();
    let mut terms_used = 1;
    let mut ratios = Vec::new();
    let mut last = sobolev_norm(&term.to_table(), s, None);
    let mut growth = 0;
    let (mut converged, mut diverged) = (last < tol, false);

    while !converged && !diverged && terms_used < kmax {
        let next = szego_project(&multiply(u, &term), k);
        let prev = weighted(&y);
        if prev > 0.0 {
            ratios.push(weighted(&next) / prev);
        }
        y = next;
        term = divide(&y);
        let inc = sobolev_norm(&term.to_table(), s, None);
        for (acc, t) in sum.iter_mut().zip(term.as_slice()) {
            *acc += t;
        }
        if inc < tol {
            converged = true;
            break;
        }
        terms_used += 1;
        growth = if inc > last { growth + 1 } else { 0 };
        diverged = growth >= 3;
        last = inc;
    }

    Ok(NeumannOutcome {
        solution: HardyVector::new(sum),
        converged,
        diverged,
        terms_used,
        ratios,
    })
}

/// Operator norm of the K-truncation of `T_u(D − λ)⁻¹` in `‖·‖_{−s;n}`.
pub fn weighted_block_norm(
    u: &Potential,
    lambda: Complex64,
    n: usize,
    params: SobolevParams,
    k: usize,
) -> Result<f64> {
    let s = params.s();
    let w: Vec<f64> = (0..k)
        .map(|m| bracket(m as i64 - n as i64).powf(-s))
        .collect();
    let mut denom = Vec::with_capacity(k);
    for j in 0..k {
        let d = Complex64::new(j as f64, 0.0) - lambda;
        if d == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument(format!(
                "λ = {lambda} is a mode of D"
            )));
        }
        denom.push(d);
    }
    let b = CMatrix::from_fn(k, |m, j| {
        u.coeff(m as i64 - j as i64) / denom[j] * (w[m] / w[j])
    });
    spectral_norm(&b, 1e-8, 10_000)
}

/// `Vert_τ(r; ν, ν′) = {|λ − τ| ≥ r, Re τ − ν ≤ Re λ ≤ Re τ + ν′}`; `ν` may be
/// infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertRegion {
    pub center: Complex64,
    pub inner_radius: f64,
    pub nu_left: f64,
    pub nu_right: f64,
}

impl VertRegion {
    pub fn new(center: Complex64, inner_radius: f64, nu_left: f64, nu_right: f64) -> Result<Self> {
        if inner_radius < 0.0 || nu_left < 0.0 || nu_right < 0.0 || nu_right.is_infinite() {
            return Err(Error::InvalidArgument(
                "invalid Vert region parameters".into(),
            ));
        }
        Ok(Self {
            center,
            inner_radius,
            nu_left,
            nu_right,
        })
    }

    /// `Vert_n(ρ)`: half-width 1/2 around `n`, unbounded to the left for `n = 0`.
    pub fn near_zero(n: usize, rho: f64) -> Self {
        let left = if n == 0 { f64::INFINITY } else { 0.5 };
        Self {
            center: Complex64::new(n as f64, 0.0),
            inner_radius: rho,
            nu_left: left,
            nu_right: 0.5,
        }
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        let re = lambda.re - self.center.re;
        (lambda - self.center).norm() >= self.inner_radius
            && -self.nu_left <= re
            && re <= self.nu_right
    }
}
