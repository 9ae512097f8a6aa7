//! Dense two-phase simplex method with Bland's rule.
//!
//! Problems are stated as
//!
//! ```text
//! maximize    cᵀx
//! subject to  A x = b
//!             x_j ≥ l_j   (l_j = -∞ marks a free variable)
//! ```
//!
//! The solver keeps every bit of state in a per-call tableau, so it is safe
//! to call from many threads at once. Pivot order is fully deterministic:
//! identical inputs always return the same vertex.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("inconsistent dimensions")]
    Dimension,
    #[error("pivot limit exceeded")]
    PivotLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

/// Solves `max cᵀx  s.t.  a_eq x = b_eq,  x ≥ lower`.
pub fn lp_solve(c: &[f64], a_eq: &Matrix, b_eq: &[f64], lower: &[f64]) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = a_eq.rows();
    if a_eq.cols() != n || b_eq.len() != m || lower.len() != n {
        return Err(LpError::Dimension);
    }

    // Column map: each original variable becomes one shifted column, or two
    // (positive and negative parts) when it is free.
    let mut cols: Vec<(usize, f64)> = Vec::with_capacity(2 * n);
    let mut rhs = b_eq.to_vec();
    let mut obj_const = 0.0;
    for j in 0..n {
        if lower[j] == f64::NEG_INFINITY {
            cols.push((j, 1.0));
            cols.push((j, -1.0));
        } else {
            let l = lower[j];
            if l != 0.0 {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= a_eq.get(i, j) * l;
                }
                obj_const += c[j] * l;
            }
            cols.push((j, 1.0));
        }
    }
    let nv = cols.len();
    let std_c: Vec<f64> = cols.iter().map(|&(j, s)| s * c[j]).collect();

    let mut tab = Tableau::new(m, nv);
    for i in 0..m {
        let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for (k, &(j, s)) in cols.iter().enumerate() {
            tab.set(i, k, sign * s * a_eq.get(i, j));
        }
        tab.set(i, nv + i, 1.0);
        tab.set_rhs(i, sign * rhs[i]);
        tab.basis[i] = nv + i;
    }

    // Phase 1: maximize -Σ artificials.
    let mut phase1 = vec![0.0; nv + m];
    phase1[nv..].iter_mut().for_each(|v| *v = -1.0);
    tab.optimize(&phase1, nv + m)?;
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= nv).map(|i| tab.rhs(i)).sum();
    let scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if infeas > 1e-9 * scale {
        return Err(LpError::Infeasible);
    }
    tab.expel_artificials(nv);

    // Phase 2 over the structural columns only.
    let mut phase2 = vec![0.0; nv + m];
    phase2[..nv].copy_from_slice(&std_c);
    tab.optimize(&phase2, nv)?;

    let mut w = vec![0.0; nv];
    for i in 0..tab.m {
        if tab.basis[i] < nv {
            w[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let mut x: Vec<f64> = lower.iter().map(|&l| if l.is_finite() { l } else { 0.0 }).collect();
    for (k, &(j, s)) in cols.iter().enumerate() {
        x[j] += s * w[k];
    }
    let value = obj_const + std_c.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    Ok(LpSolution { value, x })
}

struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(m: usize, nv: usize) -> Self {
        let width = nv + m + 1;
        Self {
            m,
            width,
            data: vec![0.0; m * width],
            basis: vec![0; m],
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.width + j] = v;
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn set_rhs(&mut self, i: usize, v: f64) {
        let w = self.width;
        self.data[i * w + w - 1] = v;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.get(r, c);
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.get(i, c);
            if f != 0.0 {
                for j in 0..w {
                    let v = self.data[i * w + j] - f * self.data[r * w + j];
                    self.data[i * w + j] = v;
                }
                self.set(i, c, 0.0);
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for i in 0..self.m {
            d -= cost[self.basis[i]] * self.get(i, j);
        }
        d
    }

    /// Primal simplex on columns `0..allowed`, Bland's rule for both the
    /// entering column and ratio-test ties.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), LpError> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j) > PIVOT_EPS);
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.get(i, c);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c);
        }
        Err(LpError::PivotLimit)
    }

    /// After phase 1, pivots remaining (zero-level) artificial variables out
    /// of the basis, dropping rows that turn out to be redundant.
    fn expel_artificials(&mut self, nv: usize) {
        let mut i = 0;
        while i < self.m {
            if self.basis[i] >= nv {
                if let Some(c) = (0..nv)
                    .filter(|j| !self.basis.contains(j))
                    .find(|&j| self.get(i, j).abs() > 1e-9)
                {
                    self.pivot(i, c);
                    i += 1;
                } else {
                    self.remove_row(i);
                }
            } else {
                i += 1;
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.m -= 1;
    }
}
