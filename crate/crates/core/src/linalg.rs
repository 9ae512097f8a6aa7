//! Small dense linear-algebra helpers. Dimensions here are tiny (a handful of
//! players with a few actions each), so everything is row-major `Vec<f64>`.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from rows. All rows must share the same length; an
    /// empty slice gives a `0 x cols` matrix.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Option<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return None;
            }
            data.extend_from_slice(r);
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `selfᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate().take(self.rows) {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * xr;
            }
        }
        out
    }

    /// Appends a row of length `cols`.
    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Vector norms used for distances and gradient gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl Norm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => norm1(v),
            Norm::L2 => norm2(v),
            Norm::Linf => norm_inf(v),
        }
    }

    /// Distance `‖a - b‖` without allocating.
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        let it = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => it.sum(),
            Norm::L2 => libm::sqrt(it.map(|d| d * d).sum()),
            Norm::Linf => it.fold(0.0, f64::max),
        }
    }
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Matrix, tol: f64) -> Vec<usize> {
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, best_abs) = (r..rows)
            .map(|i| (i, m.get(i, c).abs()))
            .fold((r, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best_abs <= tol {
            continue;
        }
        if best != r {
            for j in 0..cols {
                m.data.swap(best * cols + j, r * cols + j);
            }
        }
        let p = m.get(r, c);
        for j in 0..cols {
            let v = m.get(r, j) / p;
            m.set(r, j, v);
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = m.get(i, c);
            if f != 0.0 {
                for j in 0..cols {
                    let v = m.get(i, j) - f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix, tol: f64) -> usize {
    let mut work = m.clone();
    rref(&mut work, tol).len()
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Vectors whose
/// residual norm falls below `tol` are dropped.
pub fn orthonormalize(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let n = norm2(&w);
        if n > tol {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    basis
}

/// Orthonormal basis of `{z : m z = 0}`.
pub fn null_space(m: &Matrix, tol: f64) -> Vec<Vec<f64>> {
    let cols = m.cols;
    if m.rows == 0 {
        return (0..cols).map(|j| unit(cols, j)).collect();
    }
    let mut work = m.clone();
    let pivots = rref(&mut work, tol);
    let mut raw = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0.0; cols];
        v[free] = 1.0;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -work.get(r, free);
        }
        raw.push(v);
    }
    orthonormalize(&raw, 1e-12)
}

pub fn unit(dim: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[j] = 1.0;
    v
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when `a` is numerically singular.
pub fn solve(a: &Matrix, b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    let mut aug = Matrix::zeros(n, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, a.get(i, j));
        }
        aug.set(i, n, b[i]);
    }
    let pivots = rref(&mut aug, tol);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some((0..n).map(|i| aug.get(i, n)).collect())
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows;
    if a.cols != n {
        return None;
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum();
            if i == j {
                let d = a.get(i, i) - s;
                if d <= 0.0 || !d.is_finite() {
                    return None;
                }
                l.set(i, j, libm::sqrt(d));
            } else {
                if (a.get(i, j) - a.get(j, i)).abs() > 1e-12 * (1.0 + a.get(i, j).abs()) {
                    return None;
                }
                l.set(i, j, (a.get(i, j) - s) / l.get(j, j));
            }
        }
    }
    Some(l)
}
