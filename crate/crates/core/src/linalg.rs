//! Dense complex matrices for the small (≤ a few dozen) antenna arrays the
//! rate formulas work with.
//!
//! Only what the rate code needs is here: products, adjoints, a Cholesky
//! log-determinant for Hermitian positive definite matrices and a one-sided
//! Jacobi SVD.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// `self * self^H`.
    pub fn gram_rows(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: Complex<T> = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b.conj())
                    .fold(Complex::zero(), |acc, x| acc + x);
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    /// Real parts of the diagonal.
    pub fn diag_re(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).collect()
    }

    /// log2 det of a Hermitian positive definite matrix via Cholesky.
    pub fn log2_det_hpd(&self) -> Result<T> {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut l = vec![Complex::<T>::zero(); n * n];
        let mut acc = T::zero();
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) {
                return Err(Error::InvalidArgument(
                    "matrix is not Hermitian positive definite".into(),
                ));
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex::new(djj, T::zero());
            acc = acc + djj.ln();
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(T::lit(2.0) * acc / T::LN_2())
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Matrix-vector product.
pub fn mat_vec<T: Real>(m: &CMatrix<T>, v: &[Complex<T>]) -> Vec<Complex<T>> {
    assert_eq!(m.cols(), v.len());
    (0..m.rows())
        .map(|r| {
            m.row(r)
                .iter()
                .zip(v)
                .fold(Complex::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}

pub fn vec_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Singular value decomposition `H = U diag(s) V^H`.
///
/// `u` is `rows × rows`, `v` is `cols × cols`, and `singular_values` has
/// `min(rows, cols)` nonincreasing entries.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: CMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: CMatrix<T>,
}

impl<T: Real> Svd<T> {
    /// Rebuilds `U Σ V^H`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let (m, n) = (self.u.rows(), self.v.rows());
        let sigma = CMatrix::from_fn(m, n, |r, c| {
            if r == c {
                Complex::new(self.singular_values[r], T::zero())
            } else {
                Complex::zero()
            }
        });
        &(&self.u * &sigma) * &self.v.adjoint()
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Real>(h: &CMatrix<T>) -> Result<Svd<T>> {
    if h.rows() >= h.cols() {
        svd_tall(h)
    } else {
        // H^H = V Σ U^H
        let t = svd_tall(&h.adjoint())?;
        Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

fn svd_tall<T: Real>(h: &CMatrix<T>) -> Result<Svd<T>> {
    let (m, n) = (h.rows(), h.cols());
    // column-major working copy
    let mut a: Vec<Vec<Complex<T>>> = (0..n).map(|c| h.column(c)).collect();
    let mut v: Vec<Vec<Complex<T>>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|r| if r == c { Complex::one() } else { Complex::zero() })
                .collect()
        })
        .collect();

    let eps = T::epsilon();
    let mut converged = n < 2;
    let mut sweeps = 0;
    let mut worst = T::zero();
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        converged = true;
        worst = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: T = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = a[p]
                    .iter()
                    .zip(&a[q])
                    .fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y);
                let g = gamma.norm();
                let scale = (alpha * beta).sqrt();
                if g == T::zero() || g <= eps * scale {
                    continue;
                }
                let off = g / scale;
                if off > worst {
                    worst = off;
                }
                converged = false;
                let phase = gamma / g; // e^{iφ}
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "jacobi svd",
            iterations: sweeps,
            residual: worst.to_f64_lossy(),
            last: Vec::new(),
        });
    }

    let mut order: Vec<(usize, T)> = a
        .iter()
        .enumerate()
        .map(|(i, col)| (i, col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()))
        .collect();
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal));

    let sigma_max = order.first().map(|o| o.1).unwrap_or(T::zero());
    let tiny = sigma_max * eps * T::lit((m.max(n)) as f64);

    let mut u_cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(m);
    let mut singular_values = Vec::with_capacity(n);
    let mut v_sorted = CMatrix::zeros(n, n);
    for (k, &(idx, s)) in order.iter().enumerate() {
        for r in 0..n {
            v_sorted[(r, k)] = v[idx][r];
        }
        if s > tiny {
            singular_values.push(s);
            u_cols.push(a[idx].iter().map(|z| z / s).collect());
        } else {
            singular_values.push(T::zero());
        }
    }
    complete_basis(&mut u_cols, m);

    let u = CMatrix::from_fn(m, m, |r, c| u_cols[c][r]);
    Ok(Svd {
        u,
        singular_values,
        v: v_sorted,
    })
}

fn rotate<T: Real>(
    cols: &mut [Vec<Complex<T>>],
    p: usize,
    q: usize,
    phase: Complex<T>,
    c: T,
    s: T,
) {
    let conj_phase = phase.conj();
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yq = *y * conj_phase;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

/// Extends orthonormal `cols` to a full basis of C^m by modified Gram-Schmidt
/// over the standard basis.
fn complete_basis<T: Real>(cols: &mut Vec<Vec<Complex<T>>>, m: usize) {
    let mut e = 0;
    while cols.len() < m && e < m {
        let mut cand: Vec<Complex<T>> = (0..m)
            .map(|r| if r == e { Complex::one() } else { Complex::zero() })
            .collect();
        e += 1;
        for _ in 0..2 {
            for col in cols.iter() {
                let proj = col
                    .iter()
                    .zip(&cand)
                    .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b);
                for (c, a) in cand.iter_mut().zip(col) {
                    *c = *c - a * proj;
                }
            }
        }
        let nrm = vec_norm(&cand);
        if nrm > T::lit(1e-3) {
            cols.push(cand.into_iter().map(|z| z / nrm).collect());
        }
    }
}
