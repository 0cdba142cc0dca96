//! Interaction kernels: the periodic exponential repulsion, its Morse-type
//! combination, and the periodized two-dimensional version.
//!
//! In 1D the periodic profile has a closed form
//!
//! ```text
//! f(x) = sgn(x) / (e^{2π/ℓ} − 1) · [e^{(2π−|x|)/ℓ} − e^{|x|/ℓ}],   x ∈ [−π, π]
//! ```
//!
//! which is the periodic sum of `sgn(x) e^{−|x|/ℓ}`. In 2D no closed form is
//! available and the free-space field `x/|x| e^{−|x|/ℓ}` is summed over
//! periodic images ring by ring.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::grid::{wrap, GridFunction, PeriodicMesh};

/// Smallest number of image rings summed by the adaptive periodization.
pub const MIN_IMAGE_RINGS: usize = 5;
/// Hard stop for the adaptive periodization.
pub const MAX_IMAGE_RINGS: usize = 200;
/// A ring is negligible once its sup-norm contribution drops below this
/// fraction of the kernel's sup norm.
pub const RING_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// No interaction at all.
    Zero,
    Repulsive {
        ell: f64,
    },
    Morse {
        ell_r: f64,
        ell_a: f64,
        zeta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Fixed number of image rings for 2D periodization; `None` adds rings
    /// until they stop contributing.
    pub images: Option<usize>,
}

impl KernelSpec {
    pub fn zero() -> Self {
        KernelSpec {
            kind: KernelKind::Zero,
            images: None,
        }
    }

    pub fn repulsive(ell: f64) -> Result<Self> {
        check_length("ell", ell)?;
        Ok(KernelSpec {
            kind: KernelKind::Repulsive { ell },
            images: None,
        })
    }

    pub fn morse(ell_r: f64, ell_a: f64, zeta: f64) -> Result<Self> {
        check_length("ell_r", ell_r)?;
        check_length("ell_a", ell_a)?;
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(Error::param(
                "zeta",
                format!("must be finite and >= 0, got {zeta}"),
            ));
        }
        Ok(KernelSpec {
            kind: KernelKind::Morse { ell_r, ell_a, zeta },
            images: None,
        })
    }

    pub fn with_images(mut self, images: usize) -> Self {
        self.images = Some(images);
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, KernelKind::Zero)
    }

    /// `(weight, length)` pairs; the kernel is `Σ weight · profile(ℓ)`.
    pub fn terms(&self) -> Terms {
        let (pairs, len) = match self.kind {
            KernelKind::Zero => ([(0.0, 1.0); 2], 0),
            KernelKind::Repulsive { ell } => ([(1.0, ell), (0.0, 1.0)], 1),
            KernelKind::Morse { ell_r, ell_a, zeta } => (
                [(1.0 / ell_r, ell_r), (-zeta / ell_a, ell_a)],
                if zeta != 0.0 { 2 } else { 1 },
            ),
        };
        Terms { pairs, len }
    }

    /// Exact 1D evaluation; `x` is wrapped into `[−π, π)` first.
    pub fn eval_1d(&self, x: f64) -> f64 {
        let x = wrap(x);
        self.terms()
            .iter()
            .map(|&(w, l)| w * periodic_profile(x, l))
            .sum()
    }

    /// Almost-everywhere derivative in 1D (the jump at the origin is
    /// dropped; the value at 0 is the common one-sided limit).
    pub fn derivative_1d(&self, x: f64) -> f64 {
        let x = wrap(x);
        self.terms()
            .iter()
            .map(|&(w, l)| w * periodic_profile_derivative(x, l))
            .sum()
    }

    /// Free-space 2D field `Σ w · x/|x| e^{−|x|/ℓ}`, zero at the origin.
    pub fn eval_nonperiodic_2d(&self, x: [f64; 2]) -> [f64; 2] {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let s: f64 = self.terms().iter().map(|&(w, l)| w * (-r / l).exp()).sum();
        [x[0] / r * s, x[1] / r * s]
    }
}

fn check_length(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::param(
            name,
            format!("must be finite and > 0, got {v}"),
        ));
    }
    Ok(())
}

/// At most two `(weight, length)` pairs, without allocating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terms {
    pairs: [(f64, f64); 2],
    len: usize,
}

impl std::ops::Deref for Terms {
    type Target = [(f64, f64)];

    fn deref(&self) -> &[(f64, f64)] {
        &self.pairs[..self.len]
    }
}

/// Closed-form periodic profile for one length scale, written with decaying
/// exponentials only so tiny `ℓ` does not overflow.
pub fn periodic_profile(x: f64, ell: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let a = x.abs();
    let q = (-TAU / ell).exp();
    x.signum() * ((-a / ell).exp() - ((a - TAU) / ell).exp()) / (1.0 - q)
}

pub fn periodic_profile_derivative(x: f64, ell: f64) -> f64 {
    let a = x.abs();
    let q = (-TAU / ell).exp();
    -((-a / ell).exp() + ((a - TAU) / ell).exp()) / (ell * (1.0 - q))
}

/// Repulsive profile of length `ell`, for callers that do not need a spec.
pub fn eval_repulsive_1d(ell: f64, x: f64) -> f64 {
    periodic_profile(wrap(x), ell)
}

/// Morse combination `(1/ℓ_r) f_r − (ζ/ℓ_a) f_a`.
pub fn eval_morse_1d(ell_r: f64, ell_a: f64, zeta: f64, x: f64) -> f64 {
    let x = wrap(x);
    periodic_profile(x, ell_r) / ell_r - zeta / ell_a * periodic_profile(x, ell_a)
}

/// Sum of the image rings `1..` of the free-space field at each point. Returns
/// the per-point sums and the number of rings used.
fn image_rings(
    spec: &KernelSpec,
    points: &[[f64; 2]],
    reference_sup: f64,
) -> (Vec<[f64; 2]>, usize) {
    let mut acc = vec![[0.0; 2]; points.len()];
    let (min_rings, max_rings) = match spec.images {
        Some(k) => (k, k),
        None => (MIN_IMAGE_RINGS, MAX_IMAGE_RINGS),
    };
    let mut sup_total = reference_sup;
    let mut used = 0;
    for r in 1..=max_rings {
        let r_i = r as i64;
        let mut ring_sup: f64 = 0.0;
        for (p, a) in points.iter().zip(acc.iter_mut()) {
            let mut s = [0.0; 2];
            for m0 in -r_i..=r_i {
                for m1 in -r_i..=r_i {
                    if m0.abs().max(m1.abs()) != r_i {
                        continue;
                    }
                    let v =
                        spec.eval_nonperiodic_2d([p[0] + TAU * m0 as f64, p[1] + TAU * m1 as f64]);
                    s[0] += v[0];
                    s[1] += v[1];
                }
            }
            a[0] += s[0];
            a[1] += s[1];
            ring_sup = ring_sup.max(s[0].abs()).max(s[1].abs());
            sup_total = sup_total.max(a[0].abs()).max(a[1].abs());
        }
        used = r;
        if r >= min_rings && ring_sup <= RING_TOLERANCE * sup_total {
            break;
        }
    }
    (acc, used)
}

/// Periodized 2D kernel sampled on the mesh, made exactly odd on the grid.
/// Also returns the number of image rings that were summed.
pub fn periodize_2d(spec: &KernelSpec, mesh: &PeriodicMesh) -> Result<(GridFunction, usize)> {
    if mesh.dim() != 2 {
        return Err(Error::InvalidMesh("periodize_2d needs a 2D mesh".into()));
    }
    if spec.images == Some(0) {
        return Err(Error::param(
            "images",
            "periodization needs at least one ring",
        ));
    }
    let len = mesh.len();
    let points: Vec<[f64; 2]> = (0..len).map(|i| mesh.node(i)).collect();
    let centre: Vec<[f64; 2]> = points
        .iter()
        .map(|&p| spec.eval_nonperiodic_2d(p))
        .collect();
    let sup = centre
        .iter()
        .fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
    let (far, used) = image_rings(spec, &points, sup);
    let mut values = vec![0.0; 2 * len];
    for idx in 0..len {
        let mir = mesh.mirror(idx);
        for c in 0..2 {
            let f = centre[idx][c] + far[idx][c];
            let g = centre[mir][c] + far[mir][c];
            values[c * len + idx] = 0.5 * (f - g);
        }
    }
    Ok((GridFunction::new(*mesh, 2, values)?, used))
}

/// Samples the kernel at every node: closed form in 1D, periodization in 2D.
pub fn materialize(spec: &KernelSpec, mesh: &PeriodicMesh) -> Result<GridFunction> {
    if spec.is_zero() {
        return Ok(GridFunction::zeros(*mesh, mesh.dim()));
    }
    match mesh.dim() {
        1 => Ok(GridFunction::from_fn(*mesh, |x| spec.eval_1d(x[0]))),
        _ => periodize_2d(spec, mesh).map(|(f, _)| f),
    }
}

/// Almost-everywhere derivative sampled on a 1D mesh.
pub fn materialize_derivative_1d(spec: &KernelSpec, mesh: &PeriodicMesh) -> Result<GridFunction> {
    if mesh.dim() != 1 {
        return Err(Error::InvalidMesh("derivative_1d needs a 1D mesh".into()));
    }
    Ok(GridFunction::from_fn(*mesh, |x| spec.derivative_1d(x[0])))
}

/// Point evaluator for the periodized 2D kernel used by agent simulations.
///
/// The central image is evaluated exactly (it carries the direction
/// discontinuity at the origin); the remaining rings are smooth inside the
/// cell and are tabulated on a closed `(n+1)²` grid covering `[−π, π]²`,
/// then interpolated bilinearly.
#[derive(Debug, Clone)]
pub struct PeriodicKernel2d {
    spec: KernelSpec,
    n: usize,
    h: f64,
    far: Vec<[f64; 2]>,
    rings: usize,
    terms: Terms,
}

impl PeriodicKernel2d {
    pub fn new(spec: KernelSpec, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::param(
                "table size",
                format!("need at least 4, got {n}"),
            ));
        }
        let h = TAU / n as f64;
        let m = n + 1;
        let points: Vec<[f64; 2]> = (0..m * m)
            .map(|idx| [-PI + (idx / m) as f64 * h, -PI + (idx % m) as f64 * h])
            .collect();
        let sup = spec
            .terms()
            .iter()
            .map(|(w, _)| w.abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        let (far, rings) = if spec.is_zero() {
            (vec![[0.0; 2]; m * m], 0)
        } else {
            image_rings(&spec, &points, sup)
        };
        Ok(PeriodicKernel2d {
            terms: spec.terms(),
            spec,
            n,
            h,
            far,
            rings,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn rings(&self) -> usize {
        self.rings
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        if self.spec.is_zero() {
            return [0.0, 0.0];
        }
        let w = [wrap(x[0]), wrap(x[1])];
        if w == [0.0, 0.0] {
            return [0.0, 0.0];
        }
        let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let s: f64 = self.terms.iter().map(|&(wt, l)| wt * (-r / l).exp()).sum();
        let c = [w[0] / r * s, w[1] / r * s];
        let m = self.n + 1;
        let locate = |v: f64| {
            let s = (v + PI) / self.h;
            let i = (s.floor() as usize).min(self.n - 1);
            (i, s - i as f64)
        };
        let (i, s) = locate(w[0]);
        let (j, t) = locate(w[1]);
        let at = |a: usize, b: usize, k: usize| self.far[a * m + b][k];
        let mut out = c;
        for (k, o) in out.iter_mut().enumerate() {
            *o += (1.0 - s) * ((1.0 - t) * at(i, j, k) + t * at(i, j + 1, k))
                + s * ((1.0 - t) * at(i + 1, j, k) + t * at(i + 1, j + 1, k));
        }
        out
    }
}
