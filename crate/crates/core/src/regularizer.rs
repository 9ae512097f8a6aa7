//! Decomposable regularizers and their mirror maps.
//!
//! A regularizer `h(x) = Σ_j θ(x_j)` induces `Q(y) = argmax_x ⟨y, x⟩ - h(x)`.
//! Only (regularizer, domain) pairs with a closed form are supported; the
//! lattice search in [`mirror_bruteforce`] exists to test them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{DomainKind, PlayerDomain, ProductDomain};
use crate::{Error, Result};

/// A code-registered kernel. All four functions must be mutually consistent.
#[derive(Debug, Clone, Copy)]
pub struct CustomKernel {
    pub name: &'static str,
    pub theta: fn(f64) -> f64,
    pub theta_prime: fn(f64) -> f64,
    /// Inverse of `theta_prime`, clamped to `[0, ∞]` outside its range.
    pub theta_prime_inv: fn(f64) -> f64,
    pub theta_prime_at_zero: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum Kernel {
    /// `θ(z) = z log z`
    Entropic,
    /// `θ(z) = -2√z`
    SquareRoot,
    /// `θ(z) = z²/2`
    Quadratic,
    Custom(CustomKernel),
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Entropic => "entropic",
            Kernel::SquareRoot => "sqrt",
            Kernel::Quadratic => "quadratic",
            Kernel::Custom(c) => c.name,
        }
    }

    pub fn theta(&self, z: f64) -> f64 {
        match self {
            Kernel::Entropic => {
                if z == 0.0 {
                    0.0
                } else {
                    z * libm::log(z)
                }
            }
            Kernel::SquareRoot => -2.0 * libm::sqrt(z),
            Kernel::Quadratic => 0.5 * z * z,
            Kernel::Custom(c) => (c.theta)(z),
        }
    }

    /// `θ'(z)`; at `z = 0` the one-sided limit.
    pub fn theta_prime(&self, z: f64) -> f64 {
        match self {
            Kernel::Entropic => libm::log(z) + 1.0,
            Kernel::SquareRoot => -1.0 / libm::sqrt(z),
            Kernel::Quadratic => z,
            Kernel::Custom(c) => (c.theta_prime)(z),
        }
    }

    /// `(θ')⁻¹(w)`, clamped to the endpoint of `[0, ∞]` when `w` lies
    /// outside the range of `θ'`.
    pub fn theta_prime_inv(&self, w: f64) -> f64 {
        match self {
            Kernel::Entropic => libm::exp(w - 1.0),
            Kernel::SquareRoot => {
                if w < 0.0 {
                    1.0 / (w * w)
                } else {
                    f64::INFINITY
                }
            }
            Kernel::Quadratic => w.max(0.0),
            Kernel::Custom(c) => (c.theta_prime_inv)(w),
        }
    }

    pub fn theta_prime_at_zero(&self) -> f64 {
        match self {
            Kernel::Entropic | Kernel::SquareRoot => f64::NEG_INFINITY,
            Kernel::Quadratic => 0.0,
            Kernel::Custom(c) => c.theta_prime_at_zero,
        }
    }

    pub fn is_steep(&self) -> bool {
        self.theta_prime_at_zero() == f64::NEG_INFINITY
    }

    /// Spot-checks strict convexity and the inverse round trip on a grid.
    /// Local Lipschitz continuity of `θ''` cannot be checked and remains the
    /// caller's responsibility.
    pub fn validate(&self) -> Result<()> {
        let h = 1e-4;
        for k in 1..200 {
            let z = 0.01 * k as f64;
            let second = (self.theta_prime(z + h) - self.theta_prime(z - h)) / (2.0 * h);
            if !(second > 0.0) {
                return Err(Error::Unsupported(format!("kernel `{}` is not strictly convex at {z}", self.name())));
            }
            let back = self.theta_prime_inv(self.theta_prime(z));
            if (back - z).abs() > 1e-10 * (1.0 + z) {
                return Err(Error::Unsupported(format!(
                    "kernel `{}`: theta_prime_inv does not invert theta_prime at {z}",
                    self.name()
                )));
            }
        }
        let steep_limit = self.theta_prime(0.0);
        if self.is_steep() != (steep_limit == f64::NEG_INFINITY) {
            return Err(Error::Unsupported(format!(
                "kernel `{}`: theta_prime_at_zero disagrees with theta_prime(0)",
                self.name()
            )));
        }
        Ok(())
    }
}

/// `ψ(z) = (θ')⁻¹(z)` above `θ'(0⁺)`, zero otherwise.
pub fn rate_function(kernel: &Kernel, z: f64) -> f64 {
    if z > kernel.theta_prime_at_zero() {
        kernel.theta_prime_inv(z)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// `h(x) = ‖x‖²/2` on the whole line (no sign restriction).
    Quadratic,
    Kernel(Kernel),
}

impl Regularizer {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "euclidean" | "quadratic" => Some(Regularizer::Quadratic),
            "entropic" => Some(Regularizer::Kernel(Kernel::Entropic)),
            "sqrt" => Some(Regularizer::Kernel(Kernel::SquareRoot)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Quadratic => "euclidean",
            Regularizer::Kernel(k) => k.name(),
        }
    }

    /// The kernel governing the rate function.
    pub fn kernel(&self) -> Kernel {
        match self {
            Regularizer::Quadratic => Kernel::Quadratic,
            Regularizer::Kernel(k) => *k,
        }
    }

    pub fn is_steep(&self) -> bool {
        match self {
            Regularizer::Quadratic => false,
            Regularizer::Kernel(k) => k.is_steep(),
        }
    }

    fn h_coord(&self, z: f64) -> f64 {
        match self {
            Regularizer::Quadratic => 0.5 * z * z,
            Regularizer::Kernel(k) => k.theta(z),
        }
    }

    fn dh_coord(&self, z: f64) -> f64 {
        match self {
            Regularizer::Quadratic => z,
            Regularizer::Kernel(k) => k.theta_prime(z),
        }
    }
}

/// One regularizer per player.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerSpec {
    pub players: Vec<Regularizer>,
}

impl RegularizerSpec {
    pub fn uniform(reg: Regularizer, num_players: usize) -> Self {
        Self {
            players: vec![reg; num_players],
        }
    }

    pub fn player(&self, i: usize) -> Regularizer {
        self.players[i]
    }

    pub fn all_steep(&self) -> bool {
        self.players.iter().all(|r| r.is_steep())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PlayerMirror {
    /// Coordinate-wise `clamp(Q_j(y_j), lo_j, hi_j)`.
    Clamp { reg: Regularizer, bounds: Vec<(f64, f64)> },
    EuclideanSimplex,
    LogitSimplex,
}

/// A mirror map resolved against a product domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mirror {
    players: Vec<PlayerMirror>,
    ranges: Vec<core::ops::Range<usize>>,
    spec: RegularizerSpec,
}

impl Mirror {
    pub fn new(spec: &RegularizerSpec, domain: &ProductDomain) -> Result<Self> {
        if spec.players.len() != domain.num_players() {
            return Err(Error::Dimension {
                expected: domain.num_players(),
                got: spec.players.len(),
            });
        }
        let mut players = Vec::with_capacity(spec.players.len());
        for (i, (reg, d)) in spec.players.iter().zip(domain.players()).enumerate() {
            players.push(resolve(*reg, d).map_err(|e| match e {
                Error::Unsupported(m) => Error::Unsupported(format!("player {i}: {m}")),
                other => other,
            })?);
        }
        Ok(Self {
            players,
            ranges: (0..domain.num_players()).map(|i| domain.range(i)).collect(),
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &RegularizerSpec {
        &self.spec
    }

    /// Writes `Q(y)` into `out` without allocating.
    pub fn apply_into(&self, y: &[f64], out: &mut [f64]) {
        for (pm, r) in self.players.iter().zip(&self.ranges) {
            let (yi, xi) = (&y[r.clone()], &mut out[r.clone()]);
            match pm {
                PlayerMirror::Clamp { reg, bounds } => {
                    for ((x, &v), &(lo, hi)) in xi.iter_mut().zip(yi).zip(bounds) {
                        let raw = match reg {
                            Regularizer::Quadratic => v,
                            Regularizer::Kernel(k) => k.theta_prime_inv(v),
                        };
                        *x = raw.clamp(lo, hi);
                    }
                }
                PlayerMirror::LogitSimplex => logit(yi, xi),
                PlayerMirror::EuclideanSimplex => project_simplex(yi, xi),
            }
        }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.apply_into(y, &mut out);
        out
    }

    /// A subgradient selection `∇h(x)`. Errors on coordinates where a steep
    /// kernel has no finite derivative.
    pub fn grad_h(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        for (i, r) in self.ranges.iter().enumerate() {
            let reg = self.spec.players[i];
            for j in r.clone() {
                let g = reg.dh_coord(x[j]);
                if !g.is_finite() {
                    return Err(Error::Steepness { coordinate: j });
                }
                out[j] = g;
            }
        }
        Ok(out)
    }
}

fn resolve(reg: Regularizer, d: &PlayerDomain) -> Result<PlayerMirror> {
    match (reg, d.kind()) {
        (Regularizer::Quadratic, DomainKind::Interval { .. } | DomainKind::Box { .. }) => Ok(PlayerMirror::Clamp {
            reg,
            bounds: d.coordinate_bounds().to_vec(),
        }),
        (Regularizer::Quadratic, DomainKind::Simplex { .. }) => Ok(PlayerMirror::EuclideanSimplex),
        (Regularizer::Kernel(Kernel::Entropic), DomainKind::Simplex { .. }) => Ok(PlayerMirror::LogitSimplex),
        (Regularizer::Kernel(k), DomainKind::Interval { lo, .. }) => {
            if *lo < 0.0 {
                return Err(Error::Unsupported(format!(
                    "kernel `{}` is defined on z ≥ 0 but the interval starts at {lo}",
                    k.name()
                )));
            }
            Ok(PlayerMirror::Clamp {
                reg,
                bounds: d.coordinate_bounds().to_vec(),
            })
        }
        (reg, kind) => Err(Error::Unsupported(format!(
            "no mirror map registered for regularizer `{}` on {}",
            reg.name(),
            kind_name(kind)
        ))),
    }
}

fn kind_name(kind: &DomainKind) -> &'static str {
    match kind {
        DomainKind::Interval { .. } => "interval",
        DomainKind::Box { .. } => "box",
        DomainKind::Simplex { .. } => "simplex",
        DomainKind::Polytope { .. } => "polytope",
    }
}

fn logit(y: &[f64], out: &mut [f64]) {
    let m = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut s = 0.0;
    for (o, &v) in out.iter_mut().zip(y) {
        *o = libm::exp(v - m);
        s += *o;
    }
    out.iter_mut().for_each(|o| *o /= s);
}

/// Euclidean projection onto the unit simplex by sorting.
fn project_simplex(y: &[f64], out: &mut [f64]) {
    // The sorted copy lives in `out` until the threshold is known.
    out.copy_from_slice(y);
    out.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in out.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    for (o, &v) in out.iter_mut().zip(y) {
        *o = (v - tau).max(0.0);
    }
}

/// Convenience wrapper around [`Mirror`].
pub fn mirror(spec: &RegularizerSpec, domain: &ProductDomain, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != domain.total_dim() {
        return Err(Error::Dimension {
            expected: domain.total_dim(),
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidRun("dual vector must be finite".into()));
    }
    Ok(Mirror::new(spec, domain)?.apply(y))
}

pub fn grad_h(spec: &RegularizerSpec, domain: &ProductDomain, x: &[f64]) -> Result<Vec<f64>> {
    domain.check_contains(x, 1e-9)?;
    Mirror::new(spec, domain)?.grad_h(x)
}

/// Lattice search for `argmax ⟨y,x⟩ - h(x)`, for total dimension ≤ 3.
pub fn mirror_bruteforce(spec: &RegularizerSpec, domain: &ProductDomain, y: &[f64], grid_step: f64) -> Result<Vec<f64>> {
    if domain.total_dim() > 3 {
        return Err(Error::Unsupported(format!(
            "brute-force mirror needs dimension ≤ 3, got {}",
            domain.total_dim()
        )));
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidRun("grid_step must be positive".into()));
    }
    let mut out = Vec::with_capacity(y.len());
    for (i, d) in domain.players().iter().enumerate() {
        let reg = spec.players[i];
        let yi = &y[domain.range(i)];
        out.extend(player_bruteforce(reg, d, yi, grid_step)?);
    }
    Ok(out)
}

fn player_bruteforce(reg: Regularizer, d: &PlayerDomain, y: &[f64], step: f64) -> Result<Vec<f64>> {
    let objective = |x: &[f64]| -> f64 { x.iter().zip(y).map(|(xj, yj)| xj * yj - reg.h_coord(*xj)).sum() };
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        let n = libm::ceil((hi - lo) / step) as usize;
        (0..=n).map(|k| (lo + k as f64 * step).min(hi)).collect()
    };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut consider = |x: Vec<f64>| {
        let v = objective(&x);
        if v > best.0 {
            best = (v, x);
        }
    };
    match d.kind() {
        DomainKind::Interval { .. } | DomainKind::Box { .. } => {
            let axes: Vec<Vec<f64>> = d.coordinate_bounds().iter().map(|&(l, h)| axis(l, h)).collect();
            let mut idx = vec![0usize; axes.len()];
            loop {
                consider(idx.iter().zip(&axes).map(|(&k, a)| a[k]).collect());
                let mut p = 0;
                while p < idx.len() {
                    idx[p] += 1;
                    if idx[p] < axes[p].len() {
                        break;
                    }
                    idx[p] = 0;
                    p += 1;
                }
                if p == idx.len() {
                    break;
                }
            }
        }
        DomainKind::Simplex { dim } => {
            let n = libm::round(1.0 / step) as usize;
            let h = 1.0 / n as f64;
            match dim {
                2 => (0..=n).for_each(|a| {
                    let x0 = a as f64 * h;
                    consider(vec![x0, (1.0 - x0).max(0.0)]);
                }),
                3 => {
                    for a in 0..=n {
                        for b in 0..=(n - a) {
                            let (x0, x1) = (a as f64 * h, b as f64 * h);
                            consider(vec![x0, x1, (1.0 - x0 - x1).max(0.0)]);
                        }
                    }
                }
                _ => return Err(Error::Unsupported("brute-force simplex needs dimension ≤ 3".into())),
            }
        }
        DomainKind::Polytope { .. } => {
            return Err(Error::Unsupported("brute-force mirror does not support polytopes".into()));
        }
    }
    Ok(best.1)
}

/// Parses a regularizer name, naming the accepted values on failure.
pub fn parse_regularizer(name: &str) -> core::result::Result<Regularizer, String> {
    Regularizer::from_name(name).ok_or_else(|| format!("unknown regularizer `{name}` (expected euclidean, entropic or sqrt)"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> ProductDomain {
        ProductDomain::single(PlayerDomain::interval(0.0, 1.0).unwrap())
    }

    fn simplex3() -> ProductDomain {
        ProductDomain::single(PlayerDomain::simplex(3).unwrap())
    }

    fn spec(name: &str) -> RegularizerSpec {
        RegularizerSpec::uniform(Regularizer::from_name(name).unwrap(), 1)
    }

    #[test]
    fn closed_forms() {
        let x = mirror(&spec("entropic"), &simplex3(), &[0.0, 0.0, 0.0]).unwrap();
        assert!(x.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let x = mirror(&spec("entropic"), &interval(), &[0.0]).unwrap();
        assert!((x[0] - libm::exp(-1.0)).abs() < 1e-15);
        let x = mirror(&spec("sqrt"), &interval(), &[-2.0]).unwrap();
        assert_eq!(x, vec![0.25]);
        let x = mirror(&spec("sqrt"), &interval(), &[-0.5]).unwrap();
        assert_eq!(x, vec![1.0]);
        let x = mirror(&spec("euclidean"), &simplex3(), &[0.8, 0.6, -0.2]).unwrap();
        assert!((x[0] - 0.6).abs() < 1e-12 && (x[1] - 0.4).abs() < 1e-12 && x[2] == 0.0);
    }

    #[test]
    fn rate_examples() {
        assert!((rate_function(&Kernel::Entropic, -5.0) - libm::exp(-6.0)).abs() < 1e-18);
        assert_eq!(rate_function(&Kernel::Quadratic, -1.0), 0.0);
        assert!((rate_function(&Kernel::SquareRoot, -10.0) - 0.01).abs() < 1e-16);
    }

    #[test]
    fn grad_h_examples() {
        let d = ProductDomain::single(PlayerDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        assert_eq!(grad_h(&spec("euclidean"), &d, &[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);
        let g = grad_h(&spec("entropic"), &interval(), &[libm::exp(-1.0)]).unwrap();
        assert!(g[0].abs() < 1e-15);
        assert!(matches!(
            grad_h(&spec("entropic"), &interval(), &[0.0]),
            Err(Error::Steepness { coordinate: 0 })
        ));
    }

    #[test]
    fn unregistered_pairs_are_rejected() {
        assert!(Mirror::new(&spec("sqrt"), &simplex3()).is_err());
        let neg = ProductDomain::single(PlayerDomain::interval(-1.0, 1.0).unwrap());
        assert!(Mirror::new(&spec("entropic"), &neg).is_err());
        assert!(Mirror::new(&spec("euclidean"), &neg).is_ok());
    }

    #[test]
    fn builtin_kernels_validate() {
        for k in [Kernel::Entropic, Kernel::SquareRoot, Kernel::Quadratic] {
            k.validate().unwrap();
        }
    }

    #[test]
    fn bruteforce_saturation_and_clamp() {
        let x = mirror_bruteforce(&spec("entropic"), &interval(), &[5.0], 1e-3).unwrap();
        assert_eq!(x, vec![1.0]);
        let x = mirror_bruteforce(&spec("euclidean"), &interval(), &[-3.0], 1e-3).unwrap();
        assert_eq!(x, vec![0.0]);
    }
}
