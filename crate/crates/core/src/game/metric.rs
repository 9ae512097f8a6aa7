//! Sampled distances between games sharing a domain.
//!
//! Both metrics are suprema over the whole domain. They are estimated as a
//! maximum over a Halton point set plus caller-supplied anchor points, so the
//! reported value is always a lower bound on the true distance.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::Game;
use crate::linalg::Norm;
use crate::rng;
use crate::sampling::{Halton, MAX_DIM};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SampleSpec {
    pub samples: usize,
    /// Seed of a random Cranley-Patterson shift; `None` uses the raw sequence.
    pub shift_seed: Option<u64>,
    /// Extra points always evaluated, e.g. a candidate equilibrium.
    pub anchors: Vec<Vec<f64>>,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            samples: 4096,
            shift_seed: None,
            anchors: Vec::new(),
        }
    }
}

impl SampleSpec {
    pub fn with_anchor(mut self, x: Vec<f64>) -> Self {
        self.anchors.push(x);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DistanceEstimate {
    pub value: f64,
    /// Point attaining the sampled maximum.
    pub argmax: Vec<f64>,
    pub evaluated: usize,
    /// Always `true`: the value is a sampled lower bound on the supremum.
    pub lower_bound: bool,
}

fn points(g: &Game, spec: &SampleSpec) -> Result<Vec<Vec<f64>>> {
    let d = g.domain();
    let sd = d.sample_dim();
    if sd > MAX_DIM {
        return Err(Error::Unsupported(alloc::format!("sampling supports at most {MAX_DIM} dimensions")));
    }
    let halton = match spec.shift_seed {
        Some(seed) => {
            let mut r = rng::stream(seed, 0, 0);
            Halton::with_shift(sd, (0..sd).map(|_| r.random::<f64>()).collect())
        }
        None => Halton::new(sd),
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(spec.samples + spec.anchors.len());
    for a in &spec.anchors {
        d.check_contains(a, 1e-9)?;
        pts.push(a.clone());
    }
    pts.extend(halton.take(spec.samples).map(|u| d.point_from_unit(&u)));
    Ok(pts)
}

fn same_domain(g: &Game, h: &Game) -> Result<()> {
    if g.domain() != h.domain() {
        return Err(Error::InvalidGame("games are defined on different domains".into()));
    }
    Ok(())
}

/// Sampled `sup_x ‖V(x) - V'(x)‖` in the given (dual) norm.
pub fn game_distance(g: &Game, h: &Game, spec: &SampleSpec, norm: Norm) -> Result<DistanceEstimate> {
    same_domain(g, h)?;
    let pts = points(g, spec)?;
    let n = g.domain().total_dim();
    let (mut v, mut w) = (vec![0.0; n], vec![0.0; n]);
    let mut best = DistanceEstimate {
        value: 0.0,
        argmax: g.domain().center(),
        evaluated: pts.len(),
        lower_bound: true,
    };
    for x in pts {
        g.gradient_into(&x, &mut v);
        h.gradient_into(&x, &mut w);
        let gap = norm.dist(&v, &w);
        if gap > best.value {
            best.value = gap;
            best.argmax = x;
        }
    }
    Ok(best)
}

/// Sampled `sup_x max_i |u_i(x) - u'_i(x)|`.
pub fn uniform_payoff_distance(g: &Game, h: &Game, spec: &SampleSpec) -> Result<DistanceEstimate> {
    same_domain(g, h)?;
    let pts = points(g, spec)?;
    let mut best = DistanceEstimate {
        value: 0.0,
        argmax: g.domain().center(),
        evaluated: pts.len(),
        lower_bound: true,
    };
    for x in pts {
        for i in 0..g.num_players() {
            let gap = (g.payoff(i, &x) - h.payoff(i, &x)).abs();
            if gap > best.value {
                best.value = gap;
                best.argmax = x.clone();
            }
        }
    }
    Ok(best)
}
