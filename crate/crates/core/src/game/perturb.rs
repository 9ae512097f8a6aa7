//! Payoff perturbations that are small in the uniform payoff metric but
//! destroy a given equilibrium, and constant gradient shifts.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

use super::{Game, Payoffs};
use crate::certify::{certify_gradient, Tolerances};
use crate::linalg::{dot, norm2, norm_inf};
use crate::{Error, Result};

/// A perturbed game and a joint profile `(p_i; x*_{-i})` that the perturbed
/// player strictly prefers to move toward.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub game: Game,
    pub deviation: Vec<f64>,
}

struct Collapse1 {
    base: Game,
    player: usize,
    range: Range<usize>,
    anchor: Vec<f64>,
    v_star: Vec<f64>,
    eps: f64,
}

impl Collapse1 {
    fn bump(&self, x: &[f64]) -> f64 {
        let s: f64 = self.v_star.iter().zip(&x[self.range.clone()]).zip(&self.anchor).map(|((v, a), b)| v * (a - b)).sum();
        libm::exp(2.0 * s / self.eps)
    }
}

impl Payoffs for Collapse1 {
    fn num_players(&self) -> usize {
        self.base.num_players()
    }

    fn payoff(&self, j: usize, x: &[f64]) -> f64 {
        let u = self.base.payoff(j, x);
        if j == self.player {
            u - self.eps * self.bump(x)
        } else {
            u
        }
    }

    fn gradient(&self, j: usize, x: &[f64], out: &mut [f64]) -> bool {
        self.base.player_gradient_into(j, x, out);
        if j == self.player {
            let b = self.bump(x);
            for (o, v) in out.iter_mut().zip(&self.v_star) {
                *o -= 2.0 * v * b;
            }
        }
        true
    }
}

/// Adds `⟨shift_i, x_i⟩` to every `u_i`.
struct Shift {
    base: Game,
    shift: Vec<f64>,
}

impl Payoffs for Shift {
    fn num_players(&self) -> usize {
        self.base.num_players()
    }

    fn payoff(&self, j: usize, x: &[f64]) -> f64 {
        let r = self.base.domain().range(j);
        self.base.payoff(j, x) + dot(&self.shift[r.clone()], &x[r])
    }

    fn gradient(&self, j: usize, x: &[f64], out: &mut [f64]) -> bool {
        self.base.player_gradient_into(j, x, out);
        let r = self.base.domain().range(j);
        for (o, s) in out.iter_mut().zip(&self.shift[r]) {
            *o += s;
        }
        true
    }
}

fn check_player(g: &Game, player: usize, x_star: &[f64], eps: f64) -> Result<Vec<f64>> {
    if player >= g.num_players() {
        return Err(Error::InvalidGame(format!("player {player} does not exist")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidGame(format!("eps must be positive, got {eps}")));
    }
    g.gradient_field(x_star)
}

fn deviation(g: &Game, player: usize, x_star: &[f64], p: &[f64]) -> Vec<f64> {
    let mut dev = x_star.to_vec();
    dev[g.domain().range(player)].copy_from_slice(p);
    dev
}

/// `ũ_i = u_i - ε·exp(2ε⁻¹⟨V_i(x*), x_i - x*_i⟩)`, which turns `V_i(x*)` into
/// `-V_i(x*)` while moving payoffs by at most `ε`.
pub fn perturb_collapse1(g: &Game, player: usize, x_star: &[f64], eps: f64, tols: &Tolerances) -> Result<Perturbation> {
    let v = check_player(g, player, x_star, eps)?;
    let cert = certify_gradient(g.domain(), x_star, &v, tols)?;
    if !cert.verdict.is_stationary() {
        return Err(Error::NotApplicable("x* is not stationary for the base game".into()));
    }
    let r = g.domain().range(player);
    let v_i = v[r.clone()].to_vec();
    if norm_inf(&v_i) <= 1e-15 {
        return Err(Error::NotApplicable(format!("V_{player}(x*) vanishes")));
    }
    let neg: Vec<f64> = v_i.iter().map(|c| -c).collect();
    let (_, p) = g.domain().player(player).maximize_linear(&neg)?;
    let x_i = &x_star[r.clone()];
    if dot(&v_i, &p) >= dot(&v_i, x_i) - 1e-12 {
        return Err(Error::NotApplicable(format!("no p with ⟨V_{player}(x*), p - x*⟩ < 0")));
    }
    let model = Collapse1 {
        base: g.clone(),
        player,
        range: r.clone(),
        anchor: x_i.to_vec(),
        v_star: v_i,
        eps,
    };
    Ok(Perturbation {
        game: Game::new(g.domain().clone(), Arc::new(model), format!("{}+collapse1", g.label()))?,
        deviation: deviation(g, player, x_star, &p),
    })
}

/// `ũ_i = u_i + ε·diam(X_i)⁻¹‖y‖⁻¹⟨y, x_i - x*_i⟩` (Euclidean diameter and norm).
/// Requires `V(x*)` to be orthogonal to every feasible direction, which is
/// checked exactly through the affine-hull projection.
pub fn perturb_collapse2(g: &Game, player: usize, x_star: &[f64], eps: f64, y: &[f64]) -> Result<Perturbation> {
    let v = check_player(g, player, x_star, eps)?;
    let d = g.domain();
    let tangential = d.project_tangent(&v);
    if norm_inf(&tangential) > 1e-9 * (1.0 + norm_inf(&v)) {
        return Err(Error::NotApplicable(
            "⟨V(x*), x - x*⟩ is not identically zero on the domain".into(),
        ));
    }
    let pd = d.player(player);
    if y.len() != pd.dim() {
        return Err(Error::Dimension { expected: pd.dim(), got: y.len() });
    }
    let ny = norm2(y);
    if !(ny > 0.0 && ny.is_finite()) {
        return Err(Error::NotApplicable("y must be a nonzero finite vector".into()));
    }
    let (best, p) = pd.maximize_linear(y)?;
    let x_i = &x_star[d.range(player)];
    if best - dot(y, x_i) <= 1e-12 {
        return Err(Error::NotApplicable(format!("no p with ⟨y, p - x*_{player}⟩ > 0")));
    }
    let coef = eps / (pd.diameter() * ny);
    let mut shift = alloc::vec![0.0; d.total_dim()];
    for (s, yj) in shift[d.range(player)].iter_mut().zip(y) {
        *s = coef * yj;
    }
    // The constant ⟨y, x*_i⟩ term does not affect gradients; keep the payoff
    // shift centered at x* so payoffs agree there.
    let offset = coef * dot(y, x_i);
    let model = CenteredShift {
        inner: Shift { base: g.clone(), shift },
        player,
        offset,
    };
    Ok(Perturbation {
        game: Game::new(d.clone(), Arc::new(model), format!("{}+collapse2", g.label()))?,
        deviation: deviation(g, player, x_star, &p),
    })
}

struct CenteredShift {
    inner: Shift,
    player: usize,
    offset: f64,
}

impl Payoffs for CenteredShift {
    fn num_players(&self) -> usize {
        self.inner.num_players()
    }

    fn payoff(&self, j: usize, x: &[f64]) -> f64 {
        let u = self.inner.payoff(j, x);
        if j == self.player {
            u - self.offset
        } else {
            u
        }
    }

    fn gradient(&self, j: usize, x: &[f64], out: &mut [f64]) -> bool {
        self.inner.gradient(j, x, out)
    }
}

/// `ũ_i = u_i + ⟨e_i, x_i⟩`, shifting the gradient field by the constant `e`.
pub fn perturb_constant(g: &Game, shift: &[f64]) -> Result<Game> {
    let n = g.domain().total_dim();
    if shift.len() != n {
        return Err(Error::Dimension { expected: n, got: shift.len() });
    }
    let model = Shift {
        base: g.clone(),
        shift: shift.to_vec(),
    };
    Game::new(g.domain().clone(), Arc::new(model), format!("{}+shift", g.label()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameSpec;
    use alloc::vec;

    #[test]
    fn collapse1_reverses_the_gradient_at_x_star() {
        let g = GameSpec::LinearInterval { slope: 1.0 }.build().unwrap();
        let p = perturb_collapse1(&g, 0, &[1.0], 0.1, &Tolerances::default()).unwrap();
        assert_eq!(p.game.gradient_field(&[1.0]).unwrap(), vec![-1.0]);
        assert_eq!(p.deviation, vec![0.0]);
        assert!((p.game.payoff(0, &[1.0]) - g.payoff(0, &[1.0]) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn collapse1_needs_a_nonzero_gradient() {
        let g = GameSpec::InteriorQuadratic { c: 0.5 }.build().unwrap();
        let r = perturb_collapse1(&g, 0, &[0.5], 0.1, &Tolerances::default());
        assert!(matches!(r, Err(Error::NotApplicable(_))));
    }

    #[test]
    fn collapse2_shifts_the_gradient() {
        let g = GameSpec::InteriorQuadratic { c: 0.5 }.build().unwrap();
        let p = perturb_collapse2(&g, 0, &[0.5], 0.1, &[1.0]).unwrap();
        let v = p.game.gradient_field(&[0.5]).unwrap();
        assert!((v[0] * 0.5 - 0.05).abs() < 1e-15);
        let lin = GameSpec::LinearInterval { slope: 1.0 }.build().unwrap();
        assert!(perturb_collapse2(&lin, 0, &[1.0], 0.1, &[1.0]).is_err());
    }
}
