//! Error norms and divergences between densities.

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// `sqrt(∫ (a − b)²)` over all components.
pub fn l2_error(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    a.mesh().ensure_same(b.mesh())?;
    if a.components() != b.components() {
        return Err(Error::Shape("l2_error: component mismatch".into()));
    }
    let s: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((a.mesh().cell_volume() * s).sqrt())
}

/// `∫ p log(p/q)` with `0·log 0 = 0`. Requires `q > 0` at every node.
pub fn kl_divergence(p: &GridFunction, q: &GridFunction) -> Result<f64> {
    p.mesh().ensure_same(q.mesh())?;
    p.ensure_scalar("kl_divergence")?;
    q.ensure_scalar("kl_divergence")?;
    let (node, min) = q.argmin();
    if !(min > 0.0) {
        return Err(Error::NonPositiveDensity { min, node });
    }
    let s: f64 = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum();
    Ok(p.mesh().cell_volume() * s)
}

/// Percentage of `value` relative to `reference`; a zero reference maps a
/// zero value to 0 and anything else to infinity.
pub fn percentage(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * value / reference
    }
}

/// What percentage errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PercentBase {
    /// The error at `t = 0`.
    #[default]
    InitialError,
    /// The L² norm of the reference density.
    ReferenceNorm,
}

impl PercentBase {
    pub fn as_str(&self) -> &'static str {
        match self {
            PercentBase::InitialError => "initial-error",
            PercentBase::ReferenceNorm => "reference-norm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "initial-error" => Some(PercentBase::InitialError),
            "reference-norm" => Some(PercentBase::ReferenceNorm),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticSample {
    pub t: f64,
    pub err_l: f64,
    pub err_f: f64,
    pub kl_l: f64,
    pub kl_f: f64,
    pub mass_l: f64,
    pub mass_f: f64,
    /// Percent errors; NaN until [`fill_percentages`] runs.
    pub pct_l: f64,
    pub pct_f: f64,
}

impl DiagnosticSample {
    pub const HEADER: &'static str = "t,err_L,err_F,kl_L,kl_F,mass_L,mass_F,pct_L,pct_F";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.err_l,
            self.err_f,
            self.kl_l,
            self.kl_f,
            self.mass_l,
            self.mass_f,
            self.pct_l,
            self.pct_f
        )
    }
}

/// Sets the percent columns of a series. `reference_norms` are `‖ρ̄ᴸ‖₂` and
/// `‖ρ̄ᶠ‖₂`, used only with [`PercentBase::ReferenceNorm`].
pub fn fill_percentages(
    samples: &mut [DiagnosticSample],
    base: PercentBase,
    reference_norms: (f64, f64),
) {
    let Some(first) = samples.first().copied() else {
        return;
    };
    let (bl, bf) = match base {
        PercentBase::InitialError => (first.err_l, first.err_f),
        PercentBase::ReferenceNorm => reference_norms,
    };
    for s in samples {
        s.pct_l = percentage(s.err_l, bl);
        s.pct_f = percentage(s.err_f, bf);
    }
}
