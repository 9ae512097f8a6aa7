//! Polyhedral action spaces.
//!
//! Every player owns a compact polytope given in one of four forms. Joint
//! action profiles are plain concatenations of per-player coordinates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, dot, null_space, Matrix};
use crate::lp::lp_solve;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DomainKind {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Simplex { dim: usize },
    /// `{x : aeq x = beq, x_j ≥ 0 where nonneg[j]}`.
    Polytope {
        aeq: Vec<Vec<f64>>,
        beq: Vec<f64>,
        nonneg: Vec<bool>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundSide {
    Lower,
    Upper,
}

/// A coordinate sitting on one of its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActiveBound {
    pub index: usize,
    pub side: BoundSide,
}

impl ActiveBound {
    /// Sign `s` such that feasible tangent directions satisfy `s·z_index ≥ 0`.
    pub fn sign(&self) -> f64 {
        match self.side {
            BoundSide::Lower => 1.0,
            BoundSide::Upper => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerDomain {
    kind: DomainKind,
    aeq: Matrix,
    beq: Vec<f64>,
    /// Per-coordinate (lower, upper) bounds; `±∞` when a coordinate is only
    /// bounded through the equalities.
    bounds: Vec<(f64, f64)>,
    /// Tight coordinate ranges (for polytopes, from LP).
    extent: Vec<(f64, f64)>,
    affine_basis: Vec<Vec<f64>>,
    center: Vec<f64>,
}

const GEOM_TOL: f64 = 1e-10;

impl PlayerDomain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDomain(format!("interval requires lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self {
            kind: DomainKind::Interval { lo, hi },
            aeq: Matrix::zeros(0, 1),
            beq: Vec::new(),
            bounds: vec![(lo, hi)],
            extent: vec![(lo, hi)],
            affine_basis: vec![vec![1.0]],
            center: vec![0.5 * (lo + hi)],
        })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidDomain("box bounds must be non-empty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
            return Err(Error::InvalidDomain("box requires lo_j < hi_j for every coordinate".into()));
        }
        let d = lo.len();
        let bounds: Vec<_> = lo.iter().copied().zip(hi.iter().copied()).collect();
        Ok(Self {
            center: bounds.iter().map(|(l, h)| 0.5 * (l + h)).collect(),
            aeq: Matrix::zeros(0, d),
            beq: Vec::new(),
            extent: bounds.clone(),
            bounds,
            affine_basis: (0..d).map(|j| linalg::unit(d, j)).collect(),
            kind: DomainKind::Box { lo, hi },
        })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDomain("simplex needs at least two coordinates".into()));
        }
        // Helmert basis of the hyperplane Σz = 0.
        let affine_basis = (1..dim)
            .map(|k| {
                let s = libm::sqrt((k * (k + 1)) as f64);
                let mut v = vec![0.0; dim];
                v[..k].iter_mut().for_each(|x| *x = 1.0 / s);
                v[k] = -(k as f64) / s;
                v
            })
            .collect();
        Ok(Self {
            kind: DomainKind::Simplex { dim },
            aeq: Matrix::from_rows(&[vec![1.0; dim]], dim).unwrap(),
            beq: vec![1.0],
            bounds: vec![(0.0, f64::INFINITY); dim],
            extent: vec![(0.0, 1.0); dim],
            affine_basis,
            center: vec![1.0 / dim as f64; dim],
        })
    }

    /// `{x : aeq x = beq, x_j ≥ 0 for nonneg[j]}`. The set must be nonempty
    /// and bounded, and every sign-constrained coordinate must be able to
    /// take a strictly positive value (so the equalities describe the
    /// affine hull).
    pub fn polytope(aeq: Vec<Vec<f64>>, beq: Vec<f64>, nonneg: Vec<bool>) -> Result<Self> {
        let d = nonneg.len();
        if d == 0 {
            return Err(Error::InvalidDomain("polytope needs at least one coordinate".into()));
        }
        let a = Matrix::from_rows(&aeq, d)
            .ok_or_else(|| Error::InvalidDomain("polytope equality rows must have one entry per coordinate".into()))?;
        if beq.len() != a.rows() {
            return Err(Error::InvalidDomain("polytope beq must have one entry per equality row".into()));
        }
        let lower: Vec<f64> = nonneg.iter().map(|&nn| if nn { 0.0 } else { f64::NEG_INFINITY }).collect();
        let mut extent = Vec::with_capacity(d);
        let mut center = vec![0.0; d];
        let mut witnesses = 0usize;
        for j in 0..d {
            let mut c = vec![0.0; d];
            c[j] = 1.0;
            let hi = lp_solve(&c, &a, &beq, &lower).map_err(|e| match e {
                crate::lp::LpError::Unbounded => Error::InvalidDomain(format!("polytope is unbounded along coordinate {j}")),
                crate::lp::LpError::Infeasible => Error::InvalidDomain("polytope is empty".into()),
                other => Error::Lp(other),
            })?;
            c[j] = -1.0;
            let lo = lp_solve(&c, &a, &beq, &lower).map_err(|e| match e {
                crate::lp::LpError::Unbounded => Error::InvalidDomain(format!("polytope is unbounded along coordinate {j}")),
                other => Error::Lp(other),
            })?;
            if nonneg[j] && hi.value <= GEOM_TOL {
                return Err(Error::InvalidDomain(format!(
                    "coordinate {j} is forced to zero; state it as an equality instead"
                )));
            }
            extent.push((-lo.value, hi.value));
            for (cv, (h, l)) in center.iter_mut().zip(hi.x.iter().zip(&lo.x)) {
                *cv += h + l;
            }
            witnesses += 2;
        }
        center.iter_mut().for_each(|v| *v /= witnesses as f64);
        let bounds = nonneg
            .iter()
            .map(|&nn| if nn { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, f64::INFINITY) })
            .collect();
        let affine_basis = null_space(&a, 1e-12);
        Ok(Self {
            kind: DomainKind::Polytope { aeq, beq: beq.clone(), nonneg },
            aeq: a,
            beq,
            bounds,
            extent,
            affine_basis,
            center,
        })
    }

    pub fn from_kind(kind: DomainKind) -> Result<Self> {
        match kind {
            DomainKind::Interval { lo, hi } => Self::interval(lo, hi),
            DomainKind::Box { lo, hi } => Self::boxed(lo, hi),
            DomainKind::Simplex { dim } => Self::simplex(dim),
            DomainKind::Polytope { aeq, beq, nonneg } => Self::polytope(aeq, beq, nonneg),
        }
    }

    /// The polytope encoding `{Σx = 1, x ≥ 0}` of the `dim`-simplex.
    pub fn simplex_as_polytope(dim: usize) -> Result<Self> {
        Self::polytope(vec![vec![1.0; dim]], vec![1.0], vec![true; dim])
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_basis.len()
    }

    /// Orthonormal basis of the direction space of the affine hull.
    pub fn affine_basis(&self) -> &[Vec<f64>] {
        &self.affine_basis
    }

    pub fn equalities(&self) -> (&Matrix, &[f64]) {
        (&self.aeq, &self.beq)
    }

    pub fn coordinate_bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Smallest box containing the domain.
    pub fn extent(&self) -> &[(f64, f64)] {
        &self.extent
    }

    /// A relative-interior point: midpoint, barycenter, or for polytopes the
    /// average of the coordinate-extreme LP vertices.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Largest violation of the domain's constraints at `x` (0 inside).
    pub fn violation(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let mut v = 0.0f64;
        for (xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            v = v.max(lo - xi).max(xi - hi);
        }
        for r in 0..self.aeq.rows() {
            v = v.max((dot(self.aeq.row(r), x) - self.beq[r]).abs());
        }
        v
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    pub fn check_contains(&self, x: &[f64], tol: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        let v = self.violation(x);
        if v > tol {
            return Err(Error::Infeasible { violation: v });
        }
        Ok(())
    }

    /// Coordinates sitting on a bound (within `tol`). Intervals and boxes
    /// report both sides; simplices and polytopes only have lower bounds.
    pub fn active_set(&self, x: &[f64], tol: f64) -> Result<Vec<ActiveBound>> {
        self.check_contains(x, tol)?;
        let mut out = Vec::new();
        for (index, (&xi, &(lo, hi))) in x.iter().zip(&self.bounds).enumerate() {
            if lo.is_finite() && xi <= lo + tol {
                out.push(ActiveBound { index, side: BoundSide::Lower });
            } else if hi.is_finite() && xi >= hi - tol {
                out.push(ActiveBound { index, side: BoundSide::Upper });
            }
        }
        Ok(out)
    }

    /// Largest `t ≥ 0` with `x + t·dir` feasible, assuming `dir` lies in the
    /// direction space of the affine hull. Returns `+∞` when unbounded, which
    /// cannot happen for valid domains and directions.
    pub fn max_step(&self, x: &[f64], dir: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for ((xi, di), &(lo, hi)) in x.iter().zip(dir).zip(&self.bounds) {
            if *di < 0.0 && lo.is_finite() {
                t = t.min((lo - xi) / di);
            } else if *di > 0.0 && hi.is_finite() {
                t = t.min((hi - xi) / di);
            }
        }
        if t.is_infinite() {
            // Polytope with free coordinates: fall back to the tight extents.
            for ((xi, di), &(lo, hi)) in x.iter().zip(dir).zip(&self.extent) {
                if *di < -GEOM_TOL {
                    t = t.min((lo - xi) / di);
                } else if *di > GEOM_TOL {
                    t = t.min((hi - xi) / di);
                }
            }
        }
        t.max(0.0)
    }

    /// `max ⟨c, x⟩` over the domain, with a maximizer.
    pub fn maximize_linear(&self, c: &[f64]) -> Result<(f64, Vec<f64>)> {
        if c.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: c.len() });
        }
        match &self.kind {
            DomainKind::Interval { .. } | DomainKind::Box { .. } => {
                let x: Vec<f64> = c
                    .iter()
                    .zip(&self.bounds)
                    .map(|(ci, &(lo, hi))| if *ci > 0.0 { hi } else { lo })
                    .collect();
                Ok((dot(c, &x), x))
            }
            DomainKind::Simplex { dim } => {
                let (k, v) = c
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
                Ok((v, linalg::unit(*dim, k)))
            }
            DomainKind::Polytope { .. } => {
                let lower: Vec<f64> = self.bounds.iter().map(|b| b.0).collect();
                let sol = lp_solve(c, &self.aeq, &self.beq, &lower)?;
                Ok((sol.value, sol.x))
            }
        }
    }

    /// Euclidean diameter. Exact for intervals, boxes and simplices; for
    /// polytopes the diagonal of the bounding box, an upper bound.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Simplex { .. } => core::f64::consts::SQRT_2,
            _ => libm::sqrt(self.extent.iter().map(|(l, h)| (h - l) * (h - l)).sum()),
        }
    }

    /// Number of unit-cube coordinates consumed by [`Self::point_from_unit`].
    pub fn sample_dim(&self) -> usize {
        match &self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Box { lo, .. } => lo.len(),
            DomainKind::Simplex { dim } => *dim,
            DomainKind::Polytope { .. } => self.affine_dim() + 1,
        }
    }

    /// Maps a point of the unit cube to a feasible point. Used with
    /// quasi-random sequences to sample the domain reproducibly.
    pub fn point_from_unit(&self, u: &[f64]) -> Vec<f64> {
        match &self.kind {
            DomainKind::Interval { lo, hi } => vec![lo + u[0] * (hi - lo)],
            DomainKind::Box { lo, hi } => lo.iter().zip(hi).zip(u).map(|((l, h), t)| l + t * (h - l)).collect(),
            DomainKind::Simplex { dim } => {
                // Normalized exponential spacings give the uniform law on the simplex.
                let e: Vec<f64> = u[..*dim].iter().map(|&t| -libm::log(1.0 - t.clamp(0.0, 1.0 - 1e-16))).collect();
                let s: f64 = e.iter().sum();
                if s <= 0.0 {
                    return self.center.clone();
                }
                e.iter().map(|v| v / s).collect()
            }
            DomainKind::Polytope { .. } => {
                let k = self.affine_dim();
                let mut dir = vec![0.0; self.dim()];
                for (b, &t) in self.affine_basis.iter().zip(&u[..k]) {
                    for (d, bi) in dir.iter_mut().zip(b) {
                        *d += (2.0 * t - 1.0) * bi;
                    }
                }
                let n = linalg::norm2(&dir);
                if n < 1e-12 {
                    return self.center.clone();
                }
                dir.iter_mut().for_each(|d| *d /= n);
                let t = u[k] * self.max_step(&self.center, &dir);
                self.center.iter().zip(&dir).map(|(c, d)| c + t * d).collect()
            }
        }
    }

    /// Euclidean projection of `v` onto the direction space of the affine hull.
    pub fn project_tangent(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for b in &self.affine_basis {
            let c = dot(v, b);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductDomain {
    players: Vec<PlayerDomain>,
    offsets: Vec<usize>,
    total_dim: usize,
}

impl ProductDomain {
    pub fn new(players: Vec<PlayerDomain>) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::InvalidDomain("a game needs at least one player".into()));
        }
        let mut offsets = Vec::with_capacity(players.len() + 1);
        let mut acc = 0;
        for p in &players {
            offsets.push(acc);
            acc += p.dim();
        }
        offsets.push(acc);
        Ok(Self { players, offsets, total_dim: acc })
    }

    pub fn single(player: PlayerDomain) -> Self {
        Self::new(vec![player]).expect("one player")
    }

    pub fn players(&self) -> &[PlayerDomain] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &PlayerDomain {
        &self.players[i]
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Coordinate range of player `i` inside a joint vector.
    pub fn range(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn slice<'a>(&self, i: usize, x: &'a [f64]) -> &'a [f64] {
        &x[self.range(i)]
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        if x.len() != self.total_dim {
            return f64::INFINITY;
        }
        (0..self.players.len())
            .map(|i| self.players[i].violation(self.slice(i, x)))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    pub fn check_contains(&self, x: &[f64], tol: f64) -> Result<()> {
        if x.len() != self.total_dim {
            return Err(Error::Dimension { expected: self.total_dim, got: x.len() });
        }
        let v = self.violation(x);
        if v > tol {
            return Err(Error::Infeasible { violation: v });
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        self.players.iter().flat_map(|p| p.center().iter().copied()).collect()
    }

    pub fn sample_dim(&self) -> usize {
        self.players.iter().map(|p| p.sample_dim()).sum()
    }

    pub fn point_from_unit(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_dim);
        let mut k = 0;
        for p in &self.players {
            let s = p.sample_dim();
            out.extend(p.point_from_unit(&u[k..k + s]));
            k += s;
        }
        out
    }

    /// Per-player projection onto the affine-hull direction spaces.
    pub fn project_tangent(&self, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len());
        for (i, p) in self.players.iter().enumerate() {
            out.extend(p.project_tangent(self.slice(i, v)));
        }
        out
    }
}
