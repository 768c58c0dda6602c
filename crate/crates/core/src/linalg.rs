//! Dense complex linear algebra for Galerkin truncations: LU with partial
//! pivoting, Householder reduction to Hessenberg form, the implicitly shifted
//! QR eigenvalue iteration, inverse iteration and power iteration.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self − λ·I`.
    pub fn shifted(&self, lambda: Complex64) -> CMatrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] -= lambda;
        }
        m
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        CMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self += c·other`.
    pub fn add_scaled(&mut self, other: &CMatrix, c: Complex64) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨x|y⟩ = Σ x_i conj(y_i)`, linear in the first slot.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// LU factorization `P·A = L·U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    growth: f64,
    singular: bool,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Lu {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        let scale = a.max_abs();

        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm_sqr();
            for i in k + 1..n {
                let v = lu[i * n + k].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = ONE / lu[k * n + k];
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            for i in 0..n - k - 1 {
                let row = &mut tail[i * n..(i + 1) * n];
                let l = row[k] * inv;
                row[k] = l;
                if l == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    row[j] -= l * pivot_row[j];
                }
            }
        }

        let mut umax: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                umax = umax.max(lu[i * n + j].norm());
            }
        }
        let growth = if scale > 0.0 { umax / scale } else { 1.0 };
        Lu {
            n,
            lu,
            perm,
            growth,
            singular,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// True when an exactly zero pivot was met.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// `max|U| / max|A|`.
    pub fn pivot_growth(&self) -> f64 {
        self.growth
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n, "dimension mismatch");
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.n;
        let mut inv = CMatrix::zeros(n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e[j] = ONE;
            let col = self.solve(&e);
            e[j] = ZERO;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }

    /// `Tr A⁻¹` from the triangular inverses, about half the work of a full
    /// inverse.
    pub fn inverse_trace(&self) -> Complex64 {
        let n = self.n;
        let lu = &self.lu;
        // Column-major U⁻¹ and L⁻¹.
        let mut uinv = vec![ZERO; n * n];
        let mut linv = vec![ZERO; n * n];
        for j in 0..n {
            let col = &mut uinv[j * n..(j + 1) * n];
            col[j] = ONE / lu[j * n + j];
            for i in (0..j).rev() {
                let row = &lu[i * n..(i + 1) * n];
                let s: Complex64 = (i + 1..=j).map(|k| row[k] * col[k]).sum();
                col[i] = -s / row[i];
            }
            let col = &mut linv[j * n..(j + 1) * n];
            col[j] = ONE;
            for i in j + 1..n {
                let row = &lu[i * n..(i + 1) * n];
                let s: Complex64 = (j..i).map(|k| row[k] * col[k]).sum();
                col[i] = -s;
            }
        }
        let mut invperm = vec![0; n];
        for (r, &p) in self.perm.iter().enumerate() {
            invperm[p] = r;
        }
        let mut tr = ZERO;
        for i in 0..n {
            let r = invperm[i];
            let lcol = &linv[r * n..(r + 1) * n];
            for j in i.max(r)..n {
                tr += uinv[j * n + i] * lcol[j];
            }
        }
        tr
    }
}

/// Reduce to upper Hessenberg form by Householder similarity transforms.
pub fn hessenberg(a: &CMatrix) -> CMatrix {
    let n = a.n;
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        for i in 0..m {
            v[i] = h[(k + 1 + i, k)];
        }
        v[0] += phase * alpha;
        let vn2: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum();
        let beta = 2.0 / vn2;

        for j in k..n {
            let s: Complex64 = (0..m).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            let s = s * beta;
            for i in 0..m {
                h[(k + 1 + i, j)] -= v[i] * s;
            }
        }
        for i in 0..n {
            let s: Complex64 = (0..m).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            let s = s * beta;
            for j in 0..m {
                h[(i, k + 1 + j)] -= s * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

/// Rotation `[[c, s], [−conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, ONE);
    }
    let ax = x.norm();
    let norm = ax.hypot(y.norm());
    let alpha = x / ax;
    (ax / norm, alpha * y.conj() / norm)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let s1 = mid + disc;
    let s2 = mid - disc;
    if (s1 - d).norm() <= (s2 - d).norm() {
        s1
    } else {
        s2
    }
}

/// All eigenvalues by Hessenberg reduction followed by single-shift implicit
/// QR sweeps. A subdiagonal entry is deflated once it drops below `tol`
/// (absolute) or below machine precision relative to its neighbours.
pub fn qr_eigenvalues(a: &CMatrix, tol: f64) -> Result<Vec<Complex64>> {
    let n = a.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut eig = vec![ZERO; n];
    let cap = 30 * n;
    let mut total = 0usize;
    let mut since = 0usize;
    let mut hi = n - 1;

    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let near = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if sub <= tol || sub <= f64::EPSILON * near {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since = 0;
            continue;
        }
        total += 1;
        since += 1;
        if total > cap {
            return Err(Error::QrNonconvergence {
                iterations: total,
                remaining: hi + 1,
            });
        }
        let shift = if since % 10 == 0 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let first = if k == l { l } else { k - 1 };
            for j in first..=hi {
                let p = h[(k, j)];
                let q = h[(k + 1, j)];
                h[(k, j)] = p * c + s * q;
                h[(k + 1, j)] = -s.conj() * p + q * c;
            }
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            let last = (k + 2).min(hi);
            for i in l..=last {
                let p = h[(i, k)];
                let q = h[(i, k + 1)];
                h[(i, k)] = p * c + q * s.conj();
                h[(i, k + 1)] = -p * s + q * c;
            }
        }
    }
    Ok(eig)
}

/// Unit eigenvector for an eigenvalue estimate `lambda` by inverse iteration
/// on a slightly offset shift. Returns the vector and `‖(A − λ)v‖`.
pub fn inverse_iteration(a: &CMatrix, lambda: Complex64) -> (Vec<Complex64>, f64) {
    let n = a.n;
    let mut offset = 1e-10 * (1.0 + lambda.norm());
    let mut lu = Lu::factor(&a.shifted(lambda + Complex64::from_polar(offset, 0.7)));
    while lu.is_singular() {
        offset *= 10.0;
        lu = Lu::factor(&a.shifted(lambda + Complex64::from_polar(offset, 0.7)));
    }
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0, 0.01 * i as f64 / n as f64))
        .collect();
    for _ in 0..3 {
        x = lu.solve(&x);
        let nrm = vec_norm(&x);
        for z in &mut x {
            *z /= nrm;
        }
    }
    let ax = a.matvec(&x);
    let res: Vec<Complex64> = ax.iter().zip(&x).map(|(p, q)| p - lambda * q).collect();
    (x, vec_norm(&res))
}

/// Spectral norm `‖B‖₂` by power iteration on `B*B`; stops when the
/// eigen-residual or the change in the estimate falls below `rel_tol`
/// relative to the estimate.
pub fn spectral_norm(b: &CMatrix, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let n = b.n;
    if n == 0 {
        return Ok(0.0);
    }
    let bh = b.adjoint();
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.37 * ((i * 7919) % 13) as f64 / 13.0, 0.0))
        .collect();
    let nv = vec_norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut previous = f64::NAN;
    for _ in 0..max_iter {
        let w = b.matvec(&v);
        let theta = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if theta == 0.0 {
            return Ok(0.0);
        }
        let z = bh.matvec(&w);
        let resid = z
            .iter()
            .zip(&v)
            .map(|(p, q)| (p - q * theta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let sigma = theta.sqrt();
        if resid <= rel_tol * theta || (sigma - previous).abs() <= rel_tol * sigma {
            return Ok(sigma);
        }
        previous = sigma;
        let nz = vec_norm(&z);
        v = z.into_iter().map(|p| p / nz).collect();
    }
    Err(Error::NonConvergedPowerIteration {
        iterations: max_iter,
    })
}
