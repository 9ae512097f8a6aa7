//! Built-in games.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{Game, Payoffs};
use crate::domain::{PlayerDomain, ProductDomain};
use crate::linalg::{dot, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "catalog", rename_all = "snake_case", deny_unknown_fields))]
pub enum GameSpec {
    /// `u(x) = -(3/4) x^{4/3}` on `[0,1]`.
    BoundaryQuartic,
    /// `u(x) = slope · x` on `[0,1]`.
    LinearInterval {
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        slope: f64,
    },
    /// `u(x) = -(x - c)²` on `[0,1]`.
    InteriorQuadratic { c: f64 },
    /// `u ≡ 0` on `[0,1]`.
    Zero,
    /// Mixed extension of a two-player finite game on `Δ_m × Δ_n`.
    Bimatrix {
        #[cfg_attr(feature = "serde", serde(alias = "A1"))]
        a1: Vec<Vec<f64>>,
        #[cfg_attr(feature = "serde", serde(alias = "A2"))]
        a2: Vec<Vec<f64>>,
    },
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

impl GameSpec {
    pub fn label(&self) -> &'static str {
        match self {
            GameSpec::BoundaryQuartic => "boundary_quartic",
            GameSpec::LinearInterval { .. } => "linear_interval",
            GameSpec::InteriorQuadratic { .. } => "interior_quadratic",
            GameSpec::Zero => "zero",
            GameSpec::Bimatrix { .. } => "bimatrix",
        }
    }

    pub fn build(&self) -> Result<Game> {
        let unit = || ProductDomain::single(PlayerDomain::interval(0.0, 1.0).expect("unit interval"));
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidGame(format!("`{name}` must be finite")))
            }
        };
        match self {
            GameSpec::BoundaryQuartic => Game::new(unit(), Arc::new(Scalar::Quartic), self.label()),
            GameSpec::LinearInterval { slope } => {
                finite(*slope, "slope")?;
                Game::new(unit(), Arc::new(Scalar::Linear(*slope)), self.label())
            }
            GameSpec::InteriorQuadratic { c } => {
                finite(*c, "c")?;
                Game::new(unit(), Arc::new(Scalar::Quadratic(*c)), self.label())
            }
            GameSpec::Zero => Game::new(unit(), Arc::new(Scalar::Zero), self.label()),
            GameSpec::Bimatrix { a1, a2 } => {
                let b = Bimatrix::new(a1, a2)?;
                let d = ProductDomain::new(alloc::vec![PlayerDomain::simplex(b.m)?, PlayerDomain::simplex(b.n)?])?;
                Game::new(d, Arc::new(b), self.label())
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    Quartic,
    Linear(f64),
    Quadratic(f64),
    Zero,
}

impl Payoffs for Scalar {
    fn num_players(&self) -> usize {
        1
    }

    fn payoff(&self, _: usize, x: &[f64]) -> f64 {
        let x = x[0];
        match *self {
            Scalar::Quartic => -0.75 * x * libm::cbrt(x),
            Scalar::Linear(s) => s * x,
            Scalar::Quadratic(c) => -(x - c) * (x - c),
            Scalar::Zero => 0.0,
        }
    }

    fn gradient(&self, _: usize, x: &[f64], out: &mut [f64]) -> bool {
        let x = x[0];
        out[0] = match *self {
            // -x^{1/3} extends continuously to V(0) = 0.
            Scalar::Quartic => -libm::cbrt(x),
            Scalar::Linear(s) => s,
            Scalar::Quadratic(c) => -2.0 * (x - c),
            Scalar::Zero => 0.0,
        };
        true
    }
}

/// `u_1 = x_1ᵀ A_1 x_2`, `u_2 = x_1ᵀ A_2 x_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bimatrix {
    a1: Matrix,
    a2: Matrix,
    m: usize,
    n: usize,
}

impl Bimatrix {
    pub fn new(a1: &[Vec<f64>], a2: &[Vec<f64>]) -> Result<Self> {
        let m = a1.len();
        let n = a1.first().map_or(0, |r| r.len());
        if m < 2 || n < 2 {
            return Err(Error::InvalidGame("bimatrix payoffs need at least two actions per player".into()));
        }
        let shape = |a: &[Vec<f64>], name: &str| {
            if a.len() != m || a.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidGame(format!("`{name}` must be a {m}x{n} matrix")));
            }
            if a.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!("`{name}` has non-finite entries")));
            }
            Ok(Matrix::from_rows(a, n).expect("checked shape"))
        };
        Ok(Self {
            a1: shape(a1, "A1")?,
            a2: shape(a2, "A2")?,
            m,
            n,
        })
    }
}

impl Payoffs for Bimatrix {
    fn num_players(&self) -> usize {
        2
    }

    fn payoff(&self, player: usize, x: &[f64]) -> f64 {
        let (x1, x2) = x.split_at(self.m);
        let a = if player == 0 { &self.a1 } else { &self.a2 };
        (0..self.m).map(|r| x1[r] * dot(a.row(r), x2)).sum()
    }

    fn gradient(&self, player: usize, x: &[f64], out: &mut [f64]) -> bool {
        let (x1, x2) = x.split_at(self.m);
        if player == 0 {
            for (r, o) in out.iter_mut().enumerate() {
                *o = dot(self.a1.row(r), x2);
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            for (r, &xr) in x1.iter().enumerate() {
                for (o, a) in out.iter_mut().zip(self.a2.row(r)) {
                    *o += a * xr;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn catalog_gradients() {
        let g = GameSpec::BoundaryQuartic.build().unwrap();
        assert_eq!(g.gradient_field(&[0.0]).unwrap(), vec![0.0]);
        assert!((g.gradient_field(&[0.125]).unwrap()[0] + 0.5).abs() < 1e-15);
        let g = GameSpec::LinearInterval { slope: 1.0 }.build().unwrap();
        assert_eq!(g.gradient_field(&[0.3]).unwrap(), vec![1.0]);
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = GameSpec::Bimatrix { a1: id.clone(), a2: id }.build().unwrap();
        assert_eq!(g.gradient_field(&[1.0, 0.0, 1.0, 0.0]).unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn malformed_matrices_are_rejected() {
        let a = vec![vec![1.0, 0.0], vec![0.0]];
        let b = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(GameSpec::Bimatrix { a1: a, a2: b.clone() }.build().is_err());
        assert!(GameSpec::Bimatrix { a1: vec![vec![1.0, 2.0]], a2: b }.build().is_err());
        assert!(GameSpec::InteriorQuadratic { c: f64::NAN }.build().is_err());
    }
}
