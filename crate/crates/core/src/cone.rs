//! Tangent cones of product polytopes and the LP behind the robustness margin.
//!
//! At a point `x` the tangent cone is
//!
//! ```text
//! TC(x) = { z : Aeq z = 0,  s_j z_j ≥ 0 for every active bound j }
//! ```
//!
//! with `s_j = +1` at a lower bound and `-1` at an upper bound. Equalities
//! from different players form a block-diagonal `Aeq`.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{ActiveBound, ProductDomain};
use crate::linalg::{self, dot, null_space, orthonormalize, rank, Matrix};
use crate::lp::{lp_solve, LpError};
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Budget on the number of candidate active subsets examined when
/// enumerating extreme rays.
pub const GENERATOR_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentConeRep {
    pub aeq: Matrix,
    /// Active bounds with indices into the joint coordinate vector.
    pub active: Vec<ActiveBound>,
    pub owner_point: Vec<f64>,
}

impl TangentConeRep {
    pub fn dim(&self) -> usize {
        self.aeq.cols()
    }

    /// Whether `z` satisfies the cone constraints up to `tol`.
    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        if z.len() != self.dim() {
            return false;
        }
        let scale = 1.0 + linalg::norm_inf(z);
        (0..self.aeq.rows()).all(|r| dot(self.aeq.row(r), z).abs() <= tol * scale)
            && self.active.iter().all(|a| a.sign() * z[a.index] >= -tol * scale)
    }

    /// Active bounds restricted to player `i`, with local indices.
    pub fn player_active(&self, domain: &ProductDomain, i: usize) -> Vec<usize> {
        let r = domain.range(i);
        self.active
            .iter()
            .filter(|a| r.contains(&a.index))
            .map(|a| a.index - r.start)
            .collect()
    }
}

/// Active bounds of player `i`'s domain at `x` (local coordinates).
pub fn active_set(domain: &crate::domain::PlayerDomain, x: &[f64], tol: f64) -> Result<Vec<ActiveBound>> {
    domain.active_set(x, tol)
}

pub fn tangent_cone(domain: &ProductDomain, x: &[f64], tol: f64) -> Result<TangentConeRep> {
    domain.check_contains(x, tol)?;
    let n = domain.total_dim();
    let mut aeq = Matrix::zeros(0, n);
    let mut active = Vec::new();
    for (i, p) in domain.players().iter().enumerate() {
        let r = domain.range(i);
        let (a, _) = p.equalities();
        for row in 0..a.rows() {
            let mut full = vec![0.0; n];
            full[r.clone()].copy_from_slice(a.row(row));
            aeq.push_row(&full);
        }
        for ab in p.active_set(domain.slice(i, x), tol)? {
            active.push(ActiveBound { index: ab.index + r.start, side: ab.side });
        }
    }
    Ok(TangentConeRep { aeq, active, owner_point: x.to_vec() })
}

/// Dimension of the largest subspace inside the cone. Zero exactly when the
/// base point is an extreme point of the domain.
pub fn lineality_dim(cone: &TangentConeRep) -> usize {
    let n = cone.dim();
    let mut stacked = cone.aeq.clone();
    for a in &cone.active {
        stacked.push_row(&linalg::unit(n, a.index));
    }
    n - rank(&stacked, RANK_TOL)
}

/// A finite set of unit vectors whose nonnegative combinations give the cone:
/// `±v` for a basis of the lineality space plus the extreme rays of the
/// pointed remainder.
pub fn cone_generators(cone: &TangentConeRep) -> Result<Vec<Vec<f64>>> {
    let n = cone.dim();
    // Work in coordinates of the null space of Aeq: z = N t.
    let basis = null_space(&cone.aeq, RANK_TOL);
    let k = basis.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let lift = |t: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; n];
        for (b, &ti) in basis.iter().zip(t) {
            for (zj, bj) in z.iter_mut().zip(b) {
                *zj += ti * bj;
            }
        }
        z
    };
    // Inequalities g·t ≥ 0, one per active bound.
    let g: Vec<Vec<f64>> = cone
        .active
        .iter()
        .map(|a| basis.iter().map(|b| a.sign() * b[a.index]).collect())
        .collect();
    let g_mat = Matrix::from_rows(&g, k).expect("consistent widths");

    let mut gens: Vec<Vec<f64>> = Vec::new();
    for v in null_space(&g_mat, RANK_TOL) {
        let z = normalized(lift(&v));
        gens.push(z.iter().map(|x| -x).collect());
        gens.push(z);
    }

    // Pointed part: t = P s with P an orthonormal basis of the row space of G.
    let p = orthonormalize(&g, 1e-9);
    let kp = p.len();
    if kp == 0 {
        return Ok(gens);
    }
    let to_t = |s: &[f64]| -> Vec<f64> {
        let mut t = vec![0.0; k];
        for (pi, &si) in p.iter().zip(s) {
            for (tj, pj) in t.iter_mut().zip(pi) {
                *tj += si * pj;
            }
        }
        t
    };
    let gp: Vec<Vec<f64>> = g.iter().map(|row| p.iter().map(|pi| dot(row, pi)).collect()).collect();
    let feasible = |s: &[f64]| gp.iter().all(|row| dot(row, s) >= -1e-9);

    let mut rays: Vec<Vec<f64>> = Vec::new();
    let push_ray = |s: Vec<f64>, rays: &mut Vec<Vec<f64>>| {
        let z = normalized(lift(&to_t(&s)));
        if !rays.iter().any(|r| linalg::norm_inf(&sub(r, &z)) < 1e-9) {
            rays.push(z);
        }
    };

    if kp == 1 {
        for s in [vec![1.0], vec![-1.0]] {
            if feasible(&s) {
                push_ray(s, &mut rays);
            }
        }
    } else {
        let m = gp.len();
        let need = kp - 1;
        if binomial(m, need) > GENERATOR_BUDGET {
            return Err(Error::Unsupported(alloc::format!(
                "extreme-ray enumeration needs C({m}, {need}) subsets, over budget"
            )));
        }
        let mut subset: Vec<usize> = (0..need).collect();
        loop {
            let rows: Vec<Vec<f64>> = subset.iter().map(|&i| gp[i].clone()).collect();
            let sub_m = Matrix::from_rows(&rows, kp).expect("consistent widths");
            let ns = null_space(&sub_m, RANK_TOL);
            if ns.len() == 1 {
                for sign in [1.0, -1.0] {
                    let s: Vec<f64> = ns[0].iter().map(|v| sign * v).collect();
                    if feasible(&s) {
                        push_ray(s, &mut rays);
                    }
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
    }
    gens.extend(rays);
    Ok(gens)
}

/// `margin = -max{⟨g, z⟩ : z ∈ cone, ‖z‖₁ = 1}` with a maximizing witness.
/// A trivial cone `{0}` yields `+∞` and no witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub witness: Option<Vec<f64>>,
}

/// Largest number of unconstrained-sign coordinates for which the exact
/// ℓ₁-sphere program is solved by orthant enumeration.
pub const ORTHANT_BUDGET: usize = 20;

/// `-max{⟨V, z⟩ : z ∈ cone, ‖z‖₁ = 1}`.
///
/// Splitting `z = z⁺ - z⁻` with `Σ(z⁺ + z⁻) = 1` solves the problem over the
/// ℓ₁ ball, which equals the sphere problem whenever the optimum is
/// positive. Otherwise the point is stationary: with a nontrivial lineality
/// space the optimum is 0, and for a pointed cone each sign pattern of the
/// free coordinates gives an LP over one face of the sphere.
pub fn robustness_margin(gradient: &[f64], cone: &TangentConeRep) -> Result<Margin> {
    let n = cone.dim();
    if gradient.len() != n {
        return Err(Error::Dimension { expected: n, got: gradient.len() });
    }
    if null_space(&cone.aeq, RANK_TOL).is_empty() {
        return Ok(Margin { value: f64::INFINITY, witness: None });
    }
    let mut plus = vec![true; n];
    let mut minus = vec![true; n];
    for a in &cone.active {
        match a.side {
            crate::domain::BoundSide::Lower => minus[a.index] = false,
            crate::domain::BoundSide::Upper => plus[a.index] = false,
        }
    }
    let Some((value, witness)) = split_lp(gradient, cone, &plus, &minus)? else {
        return Ok(Margin { value: f64::INFINITY, witness: None });
    };
    if value > 0.0 {
        return Ok(Margin { value: -value, witness: Some(l1_normalized(witness)) });
    }

    let mut stacked = cone.aeq.clone();
    for a in &cone.active {
        stacked.push_row(&linalg::unit(n, a.index));
    }
    if let Some(v) = null_space(&stacked, RANK_TOL).into_iter().next() {
        return Ok(Margin { value: 0.0, witness: Some(l1_normalized(v)) });
    }

    let free: Vec<usize> = (0..n).filter(|&j| plus[j] && minus[j]).collect();
    if free.len() > ORTHANT_BUDGET {
        return Err(Error::Unsupported(alloc::format!(
            "exact margin needs 2^{} sign patterns (budget 2^{ORTHANT_BUDGET})",
            free.len()
        )));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for pattern in 0u64..(1u64 << free.len()) {
        let (mut p, mut m) = (plus.clone(), minus.clone());
        for (b, &j) in free.iter().enumerate() {
            if pattern >> b & 1 == 0 {
                m[j] = false;
            } else {
                p[j] = false;
            }
        }
        if let Some((v, w)) = split_lp(gradient, cone, &p, &m)? {
            if best.as_ref().is_none_or(|b| v > b.0 + 1e-15) {
                best = Some((v, w));
            }
        }
    }
    match best {
        Some((v, w)) => Ok(Margin { value: -v, witness: Some(w) }),
        None => Ok(Margin { value: f64::INFINITY, witness: None }),
    }
}

/// `max ⟨V, z⁺ - z⁻⟩` over `Aeq (z⁺ - z⁻) = 0`, `Σ(z⁺ + z⁻) = 1`, `z± ≥ 0`,
/// using only the columns enabled in `plus` and `minus`. `None` when
/// infeasible.
fn split_lp(gradient: &[f64], cone: &TangentConeRep, plus: &[bool], minus: &[bool]) -> Result<Option<(f64, Vec<f64>)>> {
    let n = cone.dim();
    let cols: Vec<(usize, f64)> = (0..n)
        .filter(|&j| plus[j])
        .map(|j| (j, 1.0))
        .chain((0..n).filter(|&j| minus[j]).map(|j| (j, -1.0)))
        .collect();
    let nc = cols.len();
    if nc == 0 {
        return Ok(None);
    }
    let mut a = Matrix::zeros(0, nc);
    let mut b = Vec::new();
    for r in 0..cone.aeq.rows() {
        let row: Vec<f64> = cols.iter().map(|&(j, s)| s * cone.aeq.get(r, j)).collect();
        a.push_row(&row);
        b.push(0.0);
    }
    a.push_row(&vec![1.0; nc]);
    b.push(1.0);
    let c: Vec<f64> = cols.iter().map(|&(j, s)| s * gradient[j]).collect();
    let sol = match lp_solve(&c, &a, &b, &vec![0.0; nc]) {
        Ok(s) => s,
        Err(LpError::Infeasible) => return Ok(None),
        Err(e) => return Err(Error::Lp(e)),
    };
    let mut witness = vec![0.0; n];
    for (&(j, s), &v) in cols.iter().zip(&sol.x) {
        witness[j] += s * v;
    }
    Ok(Some((sol.value, witness)))
}

fn l1_normalized(mut z: Vec<f64>) -> Vec<f64> {
    let n = linalg::norm1(&z);
    if n > 0.0 {
        z.iter_mut().for_each(|v| *v /= n);
    }
    z
}

fn normalized(mut z: Vec<f64>) -> Vec<f64> {
    let n = linalg::norm2(&z);
    if n > 0.0 {
        z.iter_mut().for_each(|v| *v /= n);
    }
    // Flush rounding noise so generators are reproducible.
    z.iter_mut().for_each(|v| {
        if v.abs() < 1e-14 {
            *v = 0.0;
        }
    });
    z
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
