//! Small dense complex matrices and the two decompositions the simulator
//! needs: singular values (one-sided Jacobi) and Hermitian eigenvalues
//! (cyclic two-sided Jacobi). Both are accurate to a few ulps of the largest
//! singular value / eigenvalue, which keeps rank decisions at `1e-9`
//! relative tolerance meaningful in double precision.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics when `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self { rows, cols, data }
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

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape");
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] - rhs[(r, c)])
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest entry of `|M - M^dagger|`.
    pub fn hermiticity_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<T> {
        // Work on whichever orientation has fewer columns; the adjoint has the
        // same singular values.
        let mut work = if self.cols > self.rows { self.adjoint() } else { self.clone() };
        let (m, n) = (work.rows, work.cols);
        let eps = T::epsilon();
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = Complex::<T>::zero();
                    for i in 0..m {
                        let a = work[(i, p)];
                        let b = work[(i, q)];
                        alpha += a.norm_sqr();
                        beta += b.norm_sqr();
                        gamma += a.conj() * b;
                    }
                    let g = gamma.norm();
                    if g.is_zero() || g <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    // Rephase column q so the pair overlap is real, then apply
                    // the real Jacobi rotation that orthogonalizes the pair.
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (g + g);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let a = work[(i, p)];
                        let b = work[(i, q)] * phase.conj();
                        work[(i, p)] = a * c - b * s;
                        work[(i, q)] = a * s + b * c;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut values: Vec<T> =
            (0..n).map(|j| (0..m).fold(T::zero(), |acc, i| acc + work[(i, j)].norm_sqr()).sqrt()).collect();
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
        values
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// Only the upper triangle's Hermitian part matters; callers check
    /// Hermiticity separately when it is in doubt.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        assert!(self.is_square(), "eigenvalues of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let scale = a.max_abs();
        if scale.is_zero() {
            return vec![T::zero(); n];
        }
        let eps = T::epsilon();
        for _ in 0..MAX_SWEEPS {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= eps * eps * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let g = apq.norm();
                    if g <= eps * eps * scale {
                        continue;
                    }
                    // D = diag(.., e^{-i phi} at q, ..) makes a_pq real.
                    let phase = apq / g;
                    for k in 0..n {
                        a[(k, q)] *= phase.conj();
                        a[(q, k)] *= phase;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let theta = (aqq - app) / (g + g);
                    let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for k in 0..n {
                        let kp = a[(k, p)];
                        let kq = a[(k, q)];
                        a[(k, p)] = kp * c - kq * s;
                        a[(k, q)] = kp * s + kq * c;
                    }
                    for k in 0..n {
                        let pk = a[(p, k)];
                        let qk = a[(q, k)];
                        a[(p, k)] = pk * c - qk * s;
                        a[(q, k)] = pk * s + qk * c;
                    }
                    a[(p, q)] = Complex::zero();
                    a[(q, p)] = Complex::zero();
                }
            }
        }
        let mut values: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
        values.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        values
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn singular_values_of_diagonal_and_rank_one() {
        let m = CMatrix::from_row_major(2, 2, vec![c(0.0, 0.0), c(3.0, 0.0), c(-4.0, 0.0), c(0.0, 0.0)]);
        let sv = m.singular_values();
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);

        let u = [c(0.3, 0.1), c(-0.2, 0.7), c(0.5, 0.0)];
        let v = [c(1.0, -0.4), c(0.25, 0.5)];
        let outer = CMatrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        let sv = outer.singular_values();
        assert!(sv[1] <= 1e-15 * sv[0], "rank-one matrix leaked {:?}", sv);
        assert!((sv[0] * sv[0] - outer.frobenius_norm().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let m = CMatrix::from_row_major(
            2,
            3,
            vec![c(1.0, 2.0), c(0.0, -1.0), c(0.5, 0.5), c(-0.3, 0.0), c(2.0, 1.0), c(0.1, -0.9)],
        );
        let sv = m.singular_values();
        let gram = m.matmul(&m.adjoint());
        let mut ev = gram.hermitian_eigenvalues();
        ev.reverse();
        for (s, e) in sv.iter().zip(&ev) {
            assert!((s * s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_eigenvalues_of_pauli_y_like() {
        let m = CMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(0.0, -2.0), c(0.0, 2.0), c(1.0, 0.0)]);
        let ev = m.hermitian_eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_eigenvalues_preserve_trace_and_frobenius() {
        let n = 5;
        let m = CMatrix::from_fn(n, n, |r, k| {
            let (a, b) = (r.min(k) as f64, r.max(k) as f64);
            let re = (a * 1.3 + b * 0.7).sin();
            let im = if r == k { 0.0 } else { (a - b * 0.4).cos() * if r < k { 1.0 } else { -1.0 } };
            c(re, im)
        });
        assert!(m.hermiticity_defect() < 1e-15);
        let ev = m.hermitian_eigenvalues();
        let tr: f64 = ev.iter().sum();
        let fro: f64 = ev.iter().map(|x| x * x).sum();
        assert!((tr - m.trace().re).abs() < 1e-12);
        assert!((fro - m.frobenius_norm().powi(2)).abs() < 1e-11);
    }
}
