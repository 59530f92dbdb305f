//! Small dense linear algebra and polynomial helpers.
//!
//! The systems handled here are tiny (a handful of states), so a row-major
//! `Vec` and textbook algorithms are all that is needed.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data: data.to_vec() }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `out += self * x`.
    pub fn mul_vec_add(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = *o + dot(self.row(i), x);
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = (0..self.rows).map(|i| &self.data[i * self.cols..(i + 1) * self.cols]).collect();
        f.debug_struct("Matrix").field("rows", &self.rows).field("cols", &self.cols).field("data", &rows).finish()
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solves the dense complex system `m x = rhs` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot vanishes relative to the
/// matrix scale.
pub fn solve_complex<T: Real>(mut m: Vec<Vec<Complex<T>>>, mut rhs: Vec<Complex<T>>) -> Option<Vec<Complex<T>>> {
    let n = rhs.len();
    let scale = m.iter().flatten().fold(T::zero(), |s, z| s.max(z.norm()));
    let tiny = scale.max(T::one()) * T::epsilon() * T::lit(16.0);
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, m[r][col].norm()))
            .fold((col, T::neg_infinity()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if !(best > tiny) {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        let p = m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / p;
            if f == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            let (top, bottom) = m.split_at_mut(r);
            for (dst, v) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                *dst = *dst - f * *v;
            }
            let v = rhs[col];
            rhs[r] = rhs[r] - f * v;
        }
    }
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc = acc - m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

/// Product of two polynomials in descending powers.
pub fn poly_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + *x * *y;
        }
    }
    out
}

/// Sum of two polynomials in descending powers.
pub fn poly_add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().max(b.len());
    let mut out = vec![T::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[n - a.len() + i] = out[n - a.len() + i] + *x;
    }
    for (i, x) in b.iter().enumerate() {
        out[n - b.len() + i] = out[n - b.len() + i] + *x;
    }
    out
}

/// Horner evaluation of a real polynomial (descending powers) at a complex point.
pub fn poly_eval_complex<T: Real>(p: &[T], s: Complex<T>) -> Complex<T> {
    p.iter().fold(Complex::new(T::zero(), T::zero()), |acc, c| acc * s + Complex::new(*c, T::zero()))
}

/// Monic polynomial with the given roots. Complex roots must come in
/// conjugate pairs; the imaginary residue is dropped.
pub fn poly_from_roots<T: Real>(roots: &[Complex<T>]) -> Vec<T> {
    let mut p = vec![Complex::new(T::one(), T::zero())];
    for r in roots {
        let mut next = vec![Complex::new(T::zero(), T::zero()); p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i] = next[i] + *c;
            next[i + 1] = next[i + 1] - *c * *r;
        }
        p = next;
    }
    p.into_iter().map(|c| c.re).collect()
}

/// Characteristic polynomial `det(sI - A)` (descending, monic) by the
/// Faddeev-LeVerrier recursion.
pub fn char_poly<T: Real>(a: &Matrix<T>) -> Vec<T> {
    let n = a.nrows();
    let mut coeffs = vec![T::one()];
    let mut m = Matrix::<T>::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = a.matmul(&m);
        let c_prev = coeffs[k - 1];
        for i in 0..n {
            next[(i, i)] = next[(i, i)] + c_prev;
        }
        m = next;
        let c = -a.matmul(&m).trace() / T::from_count(k);
        coeffs.push(c);
    }
    coeffs
}

/// Routh-Hurwitz test: all roots of `p` (descending) strictly in the open
/// left half plane.
pub fn is_hurwitz_poly<T: Real>(p: &[T]) -> bool {
    let first = p.iter().position(|c| *c != T::zero());
    let Some(first) = first else { return false };
    let p = &p[first..];
    let n = p.len() - 1;
    if n == 0 {
        return true;
    }
    let sign = p[0].signum();
    let p: Vec<T> = p.iter().map(|c| *c * sign).collect();
    if p.iter().any(|c| !(*c > T::zero())) {
        return false;
    }
    let mut prev: Vec<T> = p.iter().step_by(2).copied().collect();
    let mut cur: Vec<T> = p.iter().skip(1).step_by(2).copied().collect();
    for _ in 0..n {
        if cur.is_empty() {
            break;
        }
        if !(cur[0] > T::zero()) {
            return false;
        }
        let mut next = Vec::with_capacity(prev.len());
        for i in 0..prev.len().saturating_sub(1) {
            let c_next = cur.get(i + 1).copied().unwrap_or_else(T::zero);
            next.push((cur[0] * prev[i + 1] - prev[0] * c_next) / cur[0]);
        }
        while next.last().is_some_and(|c| *c == T::zero()) && next.len() > 1 {
            next.pop();
        }
        prev = cur;
        cur = next;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_of_companion_matrix() {
        // companion of s^3 + 6 s^2 + 11 s + 6
        let a = Matrix::from_rows(&[vec![0.0f64, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![-6.0, -11.0, -6.0]]);
        let p = char_poly(&a);
        for (x, y) in p.iter().zip([1.0, 6.0, 11.0, 6.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn routh_hurwitz() {
        assert!(is_hurwitz_poly(&[1.0, 6.0, 11.0, 6.0]));
        assert!(!is_hurwitz_poly(&[1.0, -1.0]));
        assert!(!is_hurwitz_poly(&[1.0, 0.0, 1.0]));
        assert!(!is_hurwitz_poly(&[1.0, 1.0, 1.0, 10.0]));
        assert!(is_hurwitz_poly(&[2.0]));
        assert!(is_hurwitz_poly(&[-1.0, -3.0, -2.0]));
    }

    #[test]
    fn complex_solve_matches_direct_inverse() {
        let c = |re: f64, im: f64| Complex::new(re, im);
        let m = vec![vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.0, -1.0), c(3.0, 0.5)]];
        let rhs = vec![c(1.0, 0.0), c(0.0, 2.0)];
        let x = solve_complex(m.clone(), rhs.clone()).unwrap();
        for r in 0..2 {
            let lhs = m[r][0] * x[0] + m[r][1] * x[1];
            assert!((lhs - rhs[r]).norm() < 1e-14);
        }
        assert!(solve_complex(vec![vec![c(0.0, 0.0)]], vec![c(1.0, 0.0)]).is_none());
    }

    #[test]
    fn roots_round_trip() {
        let roots = [Complex::new(-1.0, 2.0), Complex::new(-1.0, -2.0), Complex::new(-3.0, 0.0)];
        let p = poly_from_roots(&roots);
        for r in roots {
            assert!(poly_eval_complex(&p, r).norm() < 1e-12);
        }
        assert_eq!(poly_mul(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
        assert_eq!(poly_add(&[1.0, 0.0], &[2.0]), vec![1.0, 2.0]);
    }
}
