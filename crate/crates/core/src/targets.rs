//! Target follower densities.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{integral, GridFunction, PeriodicMesh};

/// A strictly positive target profile together with its unit-mass shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDensity {
    profile: GridFunction,
    normalized: GridFunction,
    mass: f64,
}

impl TargetDensity {
    /// Normalizes a positive profile to unit integral; the result has mass 1.
    pub fn from_profile(profile: GridFunction) -> Result<Self> {
        profile.ensure_scalar("target")?;
        let (node, min) = profile.argmin();
        if !(min > 0.0) || profile.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonPositiveDensity { min, node });
        }
        let m = integral(&profile);
        let normalized = profile.scaled(1.0 / m);
        Ok(TargetDensity {
            profile: normalized.clone(),
            normalized,
            mass: 1.0,
        })
    }

    pub fn profile(&self) -> &GridFunction {
        &self.profile
    }

    pub fn normalized(&self) -> &GridFunction {
        &self.normalized
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        self.profile.mesh()
    }
}

/// Rescales a target to follower mass `mass ∈ (0, 1]`.
pub fn scale_to_mass(t: &TargetDensity, mass: f64) -> Result<TargetDensity> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::param(
            "M_F",
            format!("follower mass must lie in (0, 1], got {mass}"),
        ));
    }
    Ok(TargetDensity {
        profile: t.normalized.scaled(mass),
        normalized: t.normalized.clone(),
        mass,
    })
}

/// `e^{−κ} I₀(κ)`, accurate to about 1e−14 relative for all `κ ≥ 0`.
pub fn bessel_i0_scaled(kappa: f64) -> f64 {
    let k = kappa.abs();
    if k <= 50.0 {
        // Σ (k²/4)^j / (j!)², summed until terms stop mattering
        let q = 0.25 * k * k;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut j = 1.0;
        while term > 1e-17 * sum {
            term *= q / (j * j);
            sum += term;
            j += 1.0;
        }
        sum * (-k).exp()
    } else {
        // large-argument expansion; terms keep shrinking well past 1e-16 here
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..30 {
            let a = (2 * j - 1) as f64;
            term *= a * a / (j as f64 * 8.0 * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (TAU * k).sqrt()
    }
}

pub fn bessel_i0(kappa: f64) -> f64 {
    bessel_i0_scaled(kappa) * kappa.abs().exp()
}

/// Unit-mass von Mises density `e^{κ cos(x−μ)} / (2π I₀(κ))` at `x`.
pub fn von_mises_pdf(x: f64, mu: f64, kappa: f64) -> f64 {
    (kappa * ((x - mu).cos() - 1.0)).exp() / (TAU * bessel_i0_scaled(kappa))
}

pub fn von_mises_1d(kappa: f64, mu: f64, mesh: &PeriodicMesh) -> Result<TargetDensity> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", format!("must be > 0, got {kappa}")));
    }
    if mesh.dim() != 1 {
        return Err(Error::InvalidMesh(
            "von Mises target is one-dimensional".into(),
        ));
    }
    let profile = GridFunction::from_fn(*mesh, |x| von_mises_pdf(x[0], mu, kappa));
    Ok(TargetDensity {
        normalized: profile.clone(),
        profile,
        mass: 1.0,
    })
}

/// Exponent of the two-dimensional bimodal target:
/// `κ₁cos(x₁−μ) + κ₂cos(x₂−ν) + cos²(x₁−μ) + sin²(x₂−ν)`.
pub fn bimodal_exponent(x: [f64; 2], kappa: [f64; 2], mu: f64, nu: f64) -> f64 {
    let c1 = (x[0] - mu).cos();
    let c2 = (x[1] - nu).cos();
    let s2 = (x[1] - nu).sin();
    kappa[0] * c1 + kappa[1] * c2 + c1 * c1 + s2 * s2
}

/// Bimodal target normalized numerically on the mesh.
pub fn bimodal_von_mises_2d(
    kappa: [f64; 2],
    mu: f64,
    nu: f64,
    mesh: &PeriodicMesh,
) -> Result<TargetDensity> {
    for (name, k) in [("kappa1", kappa[0]), ("kappa2", kappa[1])] {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param(name, format!("must be > 0, got {k}")));
        }
    }
    if mesh.dim() != 2 {
        return Err(Error::InvalidMesh(
            "bimodal target is two-dimensional".into(),
        ));
    }
    // subtract an upper bound of the exponent to keep exp in range
    let top = kappa[0] + kappa[1] + 2.0;
    let raw = GridFunction::from_fn(*mesh, |x| {
        (bimodal_exponent([x[0], x[1]], kappa, mu, nu) - top).exp()
    });
    TargetDensity::from_profile(raw)
}
