//! Continuous games: payoff evaluators and the individual gradient field
//! `V(x) = (∇_{x_1} u_1(x), …, ∇_{x_N} u_N(x))`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::ProductDomain;
use crate::{Error, Result};

mod catalog;
mod metric;
mod perturb;

pub use catalog::{Bimatrix, GameSpec};
pub use metric::{game_distance, uniform_payoff_distance, DistanceEstimate, SampleSpec};
pub use perturb::{perturb_collapse1, perturb_collapse2, perturb_constant, Perturbation};

pub const DEFAULT_FD_STEP: f64 = 1e-5;
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Payoff evaluators for every player. Implementations must be pure.
pub trait Payoffs: Send + Sync {
    fn num_players(&self) -> usize;

    /// `u_i(x)` at the joint profile `x`.
    fn payoff(&self, player: usize, x: &[f64]) -> f64;

    /// Writes `∇_{x_i} u_i(x)` into `out` and returns `true`, or returns
    /// `false` when no analytic gradient is available.
    fn gradient(&self, player: usize, x: &[f64], out: &mut [f64]) -> bool {
        let _ = (player, x, out);
        false
    }
}

#[derive(Clone)]
pub struct Game {
    domain: ProductDomain,
    model: Arc<dyn Payoffs>,
    label: String,
    fd_step: f64,
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Game")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl Game {
    pub fn new(domain: ProductDomain, model: Arc<dyn Payoffs>, label: impl Into<String>) -> Result<Self> {
        if model.num_players() != domain.num_players() {
            return Err(Error::InvalidGame(alloc::format!(
                "payoff model has {} players but the domain has {}",
                model.num_players(),
                domain.num_players()
            )));
        }
        Ok(Self {
            domain,
            model,
            label: label.into(),
            fd_step: DEFAULT_FD_STEP,
        })
    }

    /// The same payoffs on another domain with identical player dimensions.
    pub fn with_domain(&self, domain: ProductDomain) -> Result<Self> {
        let same_shape = domain.num_players() == self.domain.num_players()
            && (0..domain.num_players()).all(|i| domain.player(i).dim() == self.domain.player(i).dim());
        if !same_shape {
            return Err(Error::InvalidGame("replacement domain must keep every player's dimension".into()));
        }
        Ok(Self {
            domain,
            ..self.clone()
        })
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn num_players(&self) -> usize {
        self.domain.num_players()
    }

    pub fn model(&self) -> &Arc<dyn Payoffs> {
        &self.model
    }

    pub fn payoff(&self, player: usize, x: &[f64]) -> f64 {
        self.model.payoff(player, x)
    }

    /// `V_i(x)`, analytic if the model provides it, else finite differences.
    pub fn player_gradient_into(&self, player: usize, x: &[f64], out: &mut [f64]) {
        if !self.model.gradient(player, x, out) {
            self.fd_gradient_into(player, x, out);
        }
    }

    /// Relative central differences, one-sided where a step would cross a
    /// coordinate bound.
    pub fn fd_gradient_into(&self, player: usize, x: &[f64], out: &mut [f64]) {
        let range = self.domain.range(player);
        let bounds = self.domain.player(player).coordinate_bounds();
        let mut work = x.to_vec();
        for (local, k) in range.enumerate() {
            let (lo, hi) = bounds[local];
            let h = self.fd_step * x[k].abs().max(1.0);
            let (a, b) = if x[k] - h < lo {
                (x[k], x[k] + h)
            } else if x[k] + h > hi {
                (x[k] - h, x[k])
            } else {
                (x[k] - h, x[k] + h)
            };
            work[k] = b;
            let fb = self.model.payoff(player, &work);
            work[k] = a;
            let fa = self.model.payoff(player, &work);
            work[k] = x[k];
            out[local] = (fb - fa) / (b - a);
        }
    }

    /// `V(x)` without a feasibility check; `out` has the joint dimension.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.num_players() {
            let r = self.domain.range(i);
            self.player_gradient_into(i, x, &mut out[r]);
        }
    }

    pub fn gradient_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.domain.check_contains(x, MEMBERSHIP_TOL)?;
        let mut out = vec![0.0; x.len()];
        self.gradient_into(x, &mut out);
        Ok(out)
    }

    /// Finite-difference gradient field, ignoring any analytic gradient.
    pub fn fd_gradient_field(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for i in 0..self.num_players() {
            let r = self.domain.range(i);
            self.fd_gradient_into(i, x, &mut out[r]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PlayerDomain;

    struct Sum;

    impl Payoffs for Sum {
        fn num_players(&self) -> usize {
            1
        }
        fn payoff(&self, _: usize, x: &[f64]) -> f64 {
            x[0] * x[0] + 3.0 * x[1]
        }
    }

    #[test]
    fn finite_differences_are_one_sided_at_bounds() {
        let d = ProductDomain::single(PlayerDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        let g = Game::new(d, Arc::new(Sum), "custom").unwrap();
        let v = g.gradient_field(&[0.0, 1.0]).unwrap();
        assert!((v[0] - 1e-5).abs() < 1e-9);
        assert!((v[1] - 3.0).abs() < 1e-9);
        let v = g.gradient_field(&[0.5, 0.5]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn player_count_must_match() {
        let d = ProductDomain::new(vec![PlayerDomain::interval(0.0, 1.0).unwrap(); 2]).unwrap();
        assert!(Game::new(d, Arc::new(Sum), "custom").is_err());
    }
}
