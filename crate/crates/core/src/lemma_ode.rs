//! The scalar comparison system that bounds the follower error:
//!
//! ```text
//! η' = (−α + βξ) η + (γξ + δη) √η
//! ξ' = −k ξ,          ξ(0) = 1
//! ```
//!
//! with `η = ‖e^F‖₂²`. The origin is a stable node; `(α²/δ², 0)` is a saddle.
//! A conservative basin estimate comes from where the `η' = 0` nullcline
//! crosses the initial line `ξ = 1`, see [`basin_estimate`].

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub k: f64,
}

impl LemmaParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, k: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be > 0, got {alpha}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param("k", format!("must be > 0, got {k}")));
        }
        for (name, v) in [("beta", beta), ("gamma", gamma), ("delta", delta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(LemmaParams {
            alpha,
            beta,
            gamma,
            delta,
            k,
        })
    }

    /// Right-hand side; `η` is clamped to 0 before taking the root.
    pub fn rhs(&self, eta: f64, xi: f64) -> (f64, f64) {
        let e = eta.max(0.0);
        let deta =
            (-self.alpha + self.beta * xi) * e + (self.gamma * xi + self.delta * e) * e.sqrt();
        (deta, -self.k * xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    StableNode,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub eta: f64,
    pub xi: f64,
    pub eigenvalues: [f64; 2],
    pub kind: EquilibriumKind,
}

/// The origin and, when `δ > 0`, the saddle at `(α²/δ², 0)`.
pub fn equilibria(p: &LemmaParams) -> Vec<Equilibrium> {
    let mut out = vec![Equilibrium {
        eta: 0.0,
        xi: 0.0,
        eigenvalues: [-p.alpha, -p.k],
        kind: EquilibriumKind::StableNode,
    }];
    if p.delta > 0.0 {
        // ∂η'/∂η = −α + (3/2)δ√η = α/2 there; the Jacobian is triangular
        out.push(Equilibrium {
            eta: (p.alpha / p.delta).powi(2),
            xi: 0.0,
            eigenvalues: [0.5 * p.alpha, -p.k],
            kind: EquilibriumKind::Saddle,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinEstimate {
    pub eta_1: Option<f64>,
    pub eta_2: Option<f64>,
    pub basin_bound: Option<f64>,
}

/// Nullcline intersections `η₁,₂ = ((α − β ∓ √((β−α)² − 4γδ)) / 2δ)²`;
/// absent when the discriminant is negative or the larger root is not
/// positive.
pub fn basin_estimate(p: &LemmaParams) -> Result<BasinEstimate> {
    if !(p.delta > 0.0) {
        return Err(Error::param("delta", "basin estimate needs delta > 0"));
    }
    let ab = p.alpha - p.beta;
    let disc = ab * ab - 4.0 * p.gamma * p.delta;
    let none = BasinEstimate {
        eta_1: None,
        eta_2: None,
        basin_bound: None,
    };
    if disc < 0.0 {
        return Ok(none);
    }
    let r = disc.sqrt();
    let s2 = (ab + r) / (2.0 * p.delta);
    if !(s2 > 0.0) {
        return Ok(none);
    }
    let s1 = ((ab - r) / (2.0 * p.delta)).max(0.0);
    let eta_2 = s2 * s2;
    Ok(BasinEstimate {
        eta_1: Some(s1 * s1),
        eta_2: Some(eta_2),
        basin_bound: Some(eta_2),
    })
}

pub const BASIN_CSV_HEADER: &str = "alpha,beta,gamma,delta,k,eta_1,eta_2,bound_present";

pub fn basin_csv_row(p: &LemmaParams, b: &BasinEstimate) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.16e}"));
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
        p.alpha,
        p.beta,
        p.gamma,
        p.delta,
        p.k,
        opt(b.eta_1),
        opt(b.eta_2),
        b.basin_bound.is_some()
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub dt: f64,
    /// Defaults to `200/k` when `None`.
    pub horizon: Option<f64>,
    pub divergence_threshold: f64,
    pub convergence_threshold: f64,
    /// Record every `record_every` steps; 0 records only the endpoints.
    pub record_every: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt: 1e-3,
            horizon: None,
            divergence_threshold: 1e12,
            convergence_threshold: 1e-12,
            record_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    Diverged,
    /// Neither threshold was reached before the horizon.
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, η, ξ)` samples.
    pub samples: Vec<(f64, f64, f64)>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn last(&self) -> (f64, f64, f64) {
        *self
            .samples
            .last()
            .expect("trajectory always has its start point")
    }
}

/// Classical RK4 from `(η₀, 1)`. Stops early on convergence or divergence.
pub fn integrate(p: &LemmaParams, eta0: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    if !(eta0 >= 0.0 && eta0.is_finite()) {
        return Err(Error::param(
            "eta0",
            format!("must be finite and >= 0, got {eta0}"),
        ));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::param("dt", "must be > 0"));
    }
    let horizon = opts.horizon.unwrap_or(200.0 / p.k);
    let steps = (horizon / opts.dt).ceil() as usize;
    let h = opts.dt;
    let (mut eta, mut xi) = (eta0, 1.0);
    let mut samples = vec![(0.0, eta, xi)];
    let mut outcome = Outcome::Undecided;
    if eta0 <= opts.convergence_threshold {
        // η = 0 is invariant; anything this small is treated as on the axis
        outcome = Outcome::Converged;
    }
    let mut step = 0;
    while outcome == Outcome::Undecided && step < steps {
        let (k1e, k1x) = p.rhs(eta, xi);
        let (k2e, k2x) = p.rhs(eta + 0.5 * h * k1e, xi + 0.5 * h * k1x);
        let (k3e, k3x) = p.rhs(eta + 0.5 * h * k2e, xi + 0.5 * h * k2x);
        let (k4e, k4x) = p.rhs(eta + h * k3e, xi + h * k3x);
        eta = (eta + h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)).max(0.0);
        xi += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        step += 1;
        if !eta.is_finite() || eta > opts.divergence_threshold {
            outcome = Outcome::Diverged;
        } else if eta <= opts.convergence_threshold {
            outcome = Outcome::Converged;
        }
        if opts.record_every > 0 && step % opts.record_every == 0 {
            samples.push((step as f64 * h, eta, xi));
        }
    }
    let t = step as f64 * h;
    if samples.last().map(|s| s.0) != Some(t) {
        samples.push((t, eta, xi));
    }
    Ok(Trajectory { samples, outcome })
}
