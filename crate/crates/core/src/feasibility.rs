//! Whether a target follower density can be held at steady state by some
//! nonnegative leader density of a given mass, and what that leader density
//! is.
//!
//! In 1D everything is explicit. With `ρ̂` the unit-mass target and `ℓ` the
//! leader-follower length,
//!
//! ```text
//! g₁ = [log ρ̂]ₓₓ     g₂ = log ρ̂     g_F = (1/2ℓ²)∫v̂ᶠᶠ − v̂ᶠᶠₓ/2
//! H  = 1/2π + h_F    G  = −(D/2)g₁ + (D/2ℓ²)g₂ − DC/(4πℓ²) + h_F
//! ```
//!
//! and a leader mass `Mᴸ` works iff `Mᴸ H ≥ G` everywhere. In 2D the leader
//! density comes from a least-squares Fourier deconvolution instead.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{
    antiderivative, derivative, integral, Convolver, GridFunction, PeriodicMesh, SpectralPlan,
};
use crate::kernels::{materialize, materialize_derivative_1d, KernelKind, KernelSpec};
use crate::lemma_ode::{basin_estimate, LemmaParams};
use crate::targets::TargetDensity;

/// Relative tolerances for the discrete zero-set test on `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityOptions {
    pub eps_h: f64,
    pub eps_g: f64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        FeasibilityOptions {
            eps_h: 1e-8,
            eps_g: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Lower leader-mass threshold; `−∞` when `H > 0` nowhere.
    pub m_hat_1: f64,
    /// Upper leader-mass threshold; `+∞` when `H < 0` nowhere.
    pub m_hat_2: f64,
    /// `G ≤ 0` wherever `H` vanishes (up to tolerance).
    pub zero_set_ok: bool,
    pub g1: GridFunction,
    pub g2: GridFunction,
    pub g_f: GridFunction,
    pub h_f: GridFunction,
    pub h: GridFunction,
    pub g: GridFunction,
    pub c: f64,
    pub c_f: f64,
    pub diffusion: f64,
    pub fl_ell: f64,
}

impl FeasibilityReport {
    pub fn feasible_for(&self, m_l: f64) -> bool {
        m_l > 0.0 && m_l < 1.0 && self.zero_set_ok && self.m_hat_1 <= m_l && m_l <= self.m_hat_2
    }

    /// `G/H` where `H ≠ 0`, NaN elsewhere.
    pub fn ratio(&self) -> GridFunction {
        self.g
            .zip_map(&self.h, |g, h| if h != 0.0 { g / h } else { f64::NAN })
            .expect("same mesh")
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        self.h.mesh()
    }
}

fn leader_length(fl: &KernelSpec) -> Result<f64> {
    match fl.kind {
        KernelKind::Repulsive { ell } => Ok(ell),
        _ => Err(Error::param(
            "fl kernel",
            "the leader-follower kernel must be the repulsive kind",
        )),
    }
}

/// `D ∇ρ̄ / ρ̄ − f^FF * ρ̄` with `ρ̄` the mass-scaled target; vector-valued in
/// 2D. Gradients are central differences.
pub fn steady_interaction_field(
    target: &TargetDensity,
    ff_kernel: &GridFunction,
    d: f64,
) -> Result<GridFunction> {
    let rho = target.profile();
    let mesh = *rho.mesh();
    ff_kernel.mesh().ensure_same(&mesh)?;
    let (node, min) = rho.argmin();
    if !(min > 0.0) {
        return Err(Error::NonPositiveDensity { min, node });
    }
    let vff = Convolver::new(ff_kernel).apply(rho.values());
    let comps = (0..mesh.dim())
        .map(|axis| {
            let dr = derivative(rho, axis)?;
            Ok(dr
                .values()
                .iter()
                .zip(rho.values())
                .zip(&vff[axis])
                .map(|((g, r), v)| d * g / r - v)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    GridFunction::from_components(mesh, comps)
}

/// Closed-form 1D thresholds and the fields behind them.
pub fn theorem1_report(
    target: &TargetDensity,
    ff_kernel: &GridFunction,
    fl_ell: f64,
    d: f64,
    opts: &FeasibilityOptions,
) -> Result<FeasibilityReport> {
    let rho = target.normalized();
    let mesh = *rho.mesh();
    if mesh.dim() != 1 {
        return Err(Error::InvalidMesh(
            "the closed-form feasibility test is 1D".into(),
        ));
    }
    if !(fl_ell > 0.0) {
        return Err(Error::param("ell", "must be > 0"));
    }
    if !(d > 0.0) {
        return Err(Error::param("D", "must be > 0"));
    }
    let (node, min) = rho.argmin();
    if !(min > 0.0) {
        return Err(Error::NonPositiveDensity { min, node });
    }
    let l2 = fl_ell * fl_ell;
    let g2 = rho.map(f64::ln);
    let g1 = derivative(&derivative(&g2, 0)?, 0)?;
    let vff = Convolver::new(ff_kernel).apply_field(rho)?;
    let vff_int = antiderivative(&vff)?;
    let vff_x = derivative(&vff, 0)?;
    let g_f = vff_int.zip_map(&vff_x, |a, b| a / (2.0 * l2) - 0.5 * b)?;
    let c = integral(&g2);
    let c_f = integral(&g_f);
    let h_f = g_f.map(|v| c_f / TAU - v);
    let h = h_f.map(|v| 1.0 / TAU + v);
    let konst = d * c / (4.0 * PI * l2);
    let g = GridFunction::scalar(
        mesh,
        (0..mesh.len())
            .map(|j| {
                -0.5 * d * g1.values()[j] + d / (2.0 * l2) * g2.values()[j] - konst
                    + h_f.values()[j]
            })
            .collect(),
    )?;

    let eps_h = opts.eps_h * h.sup_norm();
    let eps_g = opts.eps_g * g.sup_norm();
    let mut m1 = f64::NEG_INFINITY;
    let mut m2 = f64::INFINITY;
    let mut zero_set_ok = true;
    for (&hv, &gv) in h.values().iter().zip(g.values()) {
        if hv > eps_h {
            m1 = m1.max(gv / hv);
        } else if hv < -eps_h {
            m2 = m2.min(gv / hv);
        } else if gv > eps_g {
            zero_set_ok = false;
        }
    }
    Ok(FeasibilityReport {
        m_hat_1: m1,
        m_hat_2: m2,
        zero_set_ok,
        g1,
        g2,
        g_f,
        h_f,
        h,
        g,
        c,
        c_f,
        diffusion: d,
        fl_ell,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Synthesis {
    /// Refuse infeasible leader masses.
    Strict,
    /// For infeasible masses shift the profile so its minimum is 0 and
    /// rescale it to the requested mass.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderReference {
    pub density: GridFunction,
    /// True when the shifted-and-rescaled profile was used because the mass
    /// is infeasible; `density` then does not hold the target steady.
    pub fallback: bool,
}

fn shift_and_rescale(raw: &GridFunction, m_l: f64) -> GridFunction {
    let shifted = raw.shifted(-raw.min());
    let m = integral(&shifted);
    if m > 0.0 {
        shifted.scaled(m_l / m)
    } else {
        GridFunction::constant(*raw.mesh(), m_l / raw.mesh().volume())
    }
}

/// `ρ̄ᴸ = (D/2)g₁ − (D/2ℓ²)g₂ + Mᶠg_F + B` with `Mᶠ = 1 − Mᴸ` and `B` fixing
/// the mass at `Mᴸ`.
pub fn synthesize_leader_density_1d(
    report: &FeasibilityReport,
    m_l: f64,
    mode: Synthesis,
) -> Result<LeaderReference> {
    if !(m_l > 0.0 && m_l < 1.0) {
        return Err(Error::param(
            "M_L",
            format!("must lie in (0, 1), got {m_l}"),
        ));
    }
    let d = report.diffusion;
    let l2 = report.fl_ell * report.fl_ell;
    let m_f = 1.0 - m_l;
    let b = (m_l + d * report.c / (2.0 * l2) - m_f * report.c_f) / TAU;
    let mesh = *report.mesh();
    let raw = GridFunction::scalar(
        mesh,
        (0..mesh.len())
            .map(|j| {
                0.5 * d * report.g1.values()[j] - d / (2.0 * l2) * report.g2.values()[j]
                    + m_f * report.g_f.values()[j]
                    + b
            })
            .collect(),
    )?;
    if report.feasible_for(m_l) {
        return Ok(LeaderReference {
            density: raw,
            fallback: false,
        });
    }
    match mode {
        Synthesis::Strict => Err(Error::Infeasible {
            mass: m_l,
            reason: format!(
                "thresholds are [{:.6}, {:.6}], zero-set condition {}",
                report.m_hat_1,
                report.m_hat_2,
                if report.zero_set_ok { "holds" } else { "fails" }
            ),
        }),
        Synthesis::Fallback => Ok(LeaderReference {
            density: shift_and_rescale(&raw, m_l),
            fallback: true,
        }),
    }
}

/// Relative size below which a kernel mode counts as vanishing.
pub const MODE_TOLERANCE: f64 = 1e-12;

/// Zero-mean least-squares solution `R` of `f * R = v` for a vector kernel,
/// mode by mode: `R̂ = ⟨F, V⟩ / ‖F‖²`. Modes where the kernel vanishes are
/// dropped when `v` has (relatively) nothing there and reported otherwise.
pub fn deconvolve_vector(v: &GridFunction, kernel: &GridFunction) -> Result<GridFunction> {
    let mesh = *v.mesh();
    kernel.mesh().ensure_same(&mesh)?;
    if v.components() != kernel.components() {
        return Err(Error::Shape(format!(
            "field has {} components, kernel {}",
            v.components(),
            kernel.components()
        )));
    }
    let conv = Convolver::new(kernel);
    let plan: &SpectralPlan = conv.plan();
    let vs: Vec<Vec<Complex64>> = (0..v.components())
        .map(|c| plan.forward_real(v.component(c)))
        .collect();
    let len = mesh.len();
    let den: Vec<f64> = (0..len)
        .map(|i| {
            (0..v.components())
                .map(|c| conv.spectrum(c)[i].norm_sqr())
                .sum()
        })
        .collect();
    let den_max = den.iter().copied().fold(0.0, f64::max);
    let v_max = vs
        .iter()
        .flat_map(|s| s.iter().map(|z| z.norm()))
        .fold(0.0, f64::max);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for i in 1..len {
        if den[i] <= MODE_TOLERANCE * den_max {
            let field = (0..v.components())
                .map(|c| vs[c][i].norm())
                .fold(0.0, f64::max);
            if field > 1e-6 * v_max.max(f64::MIN_POSITIVE) {
                return Err(Error::SingularMode {
                    mode: mesh.unravel(i),
                    field: field / len as f64,
                });
            }
            continue;
        }
        let num: Complex64 = (0..v.components())
            .map(|c| conv.spectrum(c)[i].conj() * vs[c][i])
            .sum();
        out[i] = num / den[i];
    }
    GridFunction::scalar(mesh, plan.inverse_real(&mut out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deconvolution2d {
    /// Leader density integrating to the requested mass.
    pub density: GridFunction,
    /// `R − min R`, the nonnegative solution with the least mass.
    pub minimal: GridFunction,
    pub m_hat: f64,
    pub feasible: bool,
    /// Set when `density` is `minimal` rescaled because `m_hat > Mᴸ`.
    pub fallback: bool,
}

/// Leader reference for a 2D field: deconvolve, lift the minimum to zero,
/// then spread the leftover mass uniformly. Infeasible masses return the
/// rescaled minimal profile with `fallback` set.
pub fn deconvolve_2d(
    vfl: &GridFunction,
    fl_kernel: &GridFunction,
    m_l: f64,
) -> Result<Deconvolution2d> {
    let mesh = *vfl.mesh();
    if mesh.dim() != 2 {
        return Err(Error::InvalidMesh("deconvolve_2d needs a 2D mesh".into()));
    }
    let r = deconvolve_vector(vfl, fl_kernel)?;
    let minimal = r.shifted(-r.min());
    let m_hat = integral(&minimal);
    let feasible = m_hat <= m_l;
    let (density, fallback) = if feasible {
        (minimal.shifted((m_l - m_hat) / mesh.volume()), false)
    } else {
        (minimal.scaled(m_l / m_hat), true)
    };
    Ok(Deconvolution2d {
        density,
        minimal,
        m_hat,
        feasible,
        fallback,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `‖g₁‖∞` in 1D, `‖∇·(∇ρ̄/ρ̄)‖∞` in 2D.
    pub g1_inf: f64,
    pub f: f64,
    pub condition_holds: bool,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `½‖f^FF_x‖₂`, the coefficient used when mapping to the comparison system.
    pub delta: f64,
    /// `‖f^FF_x‖₂`, the coefficient that appears on the cubic term of the
    /// final bound.
    pub delta_alt: f64,
    pub k: f64,
    pub basin_eta_star: Option<f64>,
    pub basin_eta_star_alt: Option<f64>,
}

fn l2_norm_of(v: &[f64], mesh: &PeriodicMesh) -> f64 {
    (mesh.cell_volume() * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

fn divergence_fd(v: &GridFunction) -> Result<GridFunction> {
    let mesh = *v.mesh();
    let mut acc = vec![0.0; mesh.len()];
    for axis in 0..mesh.dim() {
        let d = derivative(&v.component_field(axis), axis)?;
        acc.iter_mut().zip(d.values()).for_each(|(a, b)| *a += b);
    }
    GridFunction::scalar(mesh, acc)
}

fn gradient_fd(f: &GridFunction) -> Result<GridFunction> {
    let mesh = *f.mesh();
    let comps = (0..mesh.dim())
        .map(|axis| derivative(f, axis).map(GridFunction::into_values))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::from_components(mesh, comps)
}

/// Sufficient local-stability condition `D(2 − ‖g₁‖∞) > F` and the constants
/// of the comparison system it leads to.
pub fn stability_report(
    target: &TargetDensity,
    ff: &KernelSpec,
    fl: &KernelSpec,
    d: f64,
    k: f64,
    rho_l0: &GridFunction,
) -> Result<StabilityReport> {
    let rho = target.profile();
    let mesh = *rho.mesh();
    rho_l0.mesh().ensure_same(&mesh)?;
    let ffk = materialize(ff, &mesh)?;
    let flk = materialize(fl, &mesh)?;

    let log_rho = rho.map(f64::ln);
    let g1 = divergence_fd(&gradient_fd(&log_rho)?)?;
    let g1_inf = g1.sup_norm();

    let div_f = if mesh.dim() == 1 {
        materialize_derivative_1d(ff, &mesh)?
    } else {
        divergence_fd(&ffk)?
    };
    let fx_norm = div_f.l2_norm();
    let f_norm = ffk.l2_norm();
    let grad_rho = gradient_fd(rho)?;
    let f_const = 2.0 * (rho.l2_norm() * fx_norm + grad_rho.l2_norm() * f_norm);
    let condition_holds = d * (2.0 - g1_inf) > f_const;

    // h₁ = ∇·(f^FL*ρᴸ₀ + f^FF*ρ̄ᶠ), h₂ = ∇·(ρ̄ᶠ(f^FL*ρᴸ₀ + f^FF*ρ̄ᶠ) − D∇ρ̄ᶠ)
    let a = Convolver::new(&flk).apply_field(rho_l0)?;
    let b = Convolver::new(&ffk).apply_field(rho)?;
    let sum = a.zip_map(&b, |x, y| x + y)?;
    let h1 = divergence_fd(&sum)?;
    let flux: Vec<Vec<f64>> = (0..mesh.dim())
        .map(|axis| {
            (0..mesh.len())
                .map(|i| rho.values()[i] * sum.at(i, axis) - d * grad_rho.at(i, axis))
                .collect()
        })
        .collect();
    let h2 = divergence_fd(&GridFunction::from_components(mesh, flux)?)?;

    let alpha = (-2.0 * d + d * g1_inf + f_const).abs();
    let beta = h1.sup_norm();
    let gamma = 2.0 * l2_norm_of(h2.values(), &mesh);
    let delta = 0.5 * fx_norm;
    let delta_alt = fx_norm;
    let basin = |dl: f64| -> Option<f64> {
        if !(dl > 0.0) {
            return None;
        }
        LemmaParams::new(alpha, beta, gamma, dl, k)
            .ok()
            .and_then(|p| basin_estimate(&p).ok())
            .and_then(|b| b.basin_bound)
    };
    Ok(StabilityReport {
        g1_inf,
        f: f_const,
        condition_holds,
        alpha,
        beta,
        gamma,
        delta,
        delta_alt,
        k,
        basin_eta_star: basin(delta),
        basin_eta_star_alt: basin(delta_alt),
    })
}

/// Leader counts implied by the mass thresholds for `n_f` followers:
/// `⌈M̂₁/(1−M̂₁)·Nᶠ⌉` and, when `M̂₂ < 1`, `⌊M̂₂/(1−M̂₂)·Nᶠ⌋`.
pub fn leader_count_bounds(m_hat_1: f64, m_hat_2: f64, n_f: u64) -> Result<(u64, Option<u64>)> {
    if n_f == 0 {
        return Err(Error::param("N_F", "need at least one follower"));
    }
    if !(m_hat_1 < 1.0) {
        return Err(Error::Infeasible {
            mass: m_hat_1,
            reason: "the lower threshold is at least 1, no finite leader count suffices".into(),
        });
    }
    let n = n_f as f64;
    // ratios like 0.14/0.86·430 land a few ulp off the integer
    let slack = |x: f64| 1e-9 * x.abs().max(1.0);
    let lower = if m_hat_1 <= 0.0 {
        0
    } else {
        let x = m_hat_1 / (1.0 - m_hat_1) * n;
        (x - slack(x)).ceil() as u64
    };
    let upper = if m_hat_2 < 1.0 {
        let x = (m_hat_2 / (1.0 - m_hat_2) * n).max(0.0);
        Some((x + slack(x)).floor() as u64)
    } else {
        None
    };
    Ok((lower, upper))
}

pub const FEASIBILITY_MAP_HEADER: &str = "kappa,D,M_hat_1,M_hat_2,zero_set_ok";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityMapRow {
    pub kappa: f64,
    pub d: f64,
    pub m_hat_1: f64,
    pub m_hat_2: f64,
    pub zero_set_ok: bool,
}

impl FeasibilityMapRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.kappa, self.d, self.m_hat_1, self.m_hat_2, self.zero_set_ok
        )
    }
}

/// Convenience wrapper: leader length from the kernel spec, kernel
/// materialized on the target's mesh.
pub fn report_for(
    target: &TargetDensity,
    ff: &KernelSpec,
    fl: &KernelSpec,
    d: f64,
    opts: &FeasibilityOptions,
) -> Result<FeasibilityReport> {
    let ell = leader_length(fl)?;
    let ffk = materialize(ff, target.mesh())?;
    theorem1_report(target, &ffk, ell, d, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::circular_convolve;
    use crate::targets::{scale_to_mass, von_mises_1d};

    fn line() -> PeriodicMesh {
        PeriodicMesh::line(500).unwrap()
    }

    fn uniform(m: PeriodicMesh) -> TargetDensity {
        TargetDensity::from_profile(GridFunction::constant(m, 1.0)).unwrap()
    }

    #[test]
    fn uniform_target_needs_no_steering() {
        let m = line();
        let t = uniform(m);
        let zero = GridFunction::zeros(m, 1);
        let v = steady_interaction_field(&t, &zero, 0.1).unwrap();
        assert!(v.sup_norm() < 1e-14);
        let r = theorem1_report(&t, &zero, PI, 0.1, &FeasibilityOptions::default()).unwrap();
        assert!(r.g1.sup_norm() < 1e-12);
        assert!(r.h_f.sup_norm() < 1e-12);
        assert!(r.g.sup_norm() < 1e-12);
        assert!(r.h.values().iter().all(|h| (h - 1.0 / TAU).abs() < 1e-12));
        assert!(r.m_hat_1.abs() < 1e-10);
        assert_eq!(r.m_hat_2, f64::INFINITY);
        for ml in [0.05, 0.25, 0.9] {
            assert!(r.feasible_for(ml));
        }
        let rho = synthesize_leader_density_1d(&r, 0.25, Synthesis::Strict).unwrap();
        assert!(rho
            .density
            .values()
            .iter()
            .all(|v| (v - 0.25 / TAU).abs() < 1e-12));
    }

    #[test]
    fn uniform_target_with_odd_ff_kernel_is_stationary() {
        let m = line();
        let t = uniform(m);
        let ff = materialize(&KernelSpec::morse(PI / 2.0, PI, 1.0).unwrap(), &m).unwrap();
        let v = steady_interaction_field(&t, &ff, 0.1).unwrap();
        assert!(v.sup_norm() < 1e-12);
    }

    #[test]
    fn no_interaction_field_is_log_derivative() {
        let m = line();
        let h = m.spacing();
        let t = scale_to_mass(&von_mises_1d(1.0, 0.0, &m).unwrap(), 0.75).unwrap();
        let v = steady_interaction_field(&t, &GridFunction::zeros(m, 1), 0.04).unwrap();
        for (j, val) in v.values().iter().enumerate() {
            let want = -0.04 * m.coordinate(j).sin();
            assert!((val - want).abs() <= 0.04 * h * h, "{j}");
        }
        assert!(integral(&v).abs() < 1e-9);
    }

    #[test]
    fn h_f_ignores_the_antiderivative_anchor() {
        let m = line();
        let t = von_mises_1d(2.0, 0.0, &m).unwrap();
        let ff = materialize(&KernelSpec::morse(PI / 15.0, PI / 2.0, 2.0).unwrap(), &m).unwrap();
        let r = theorem1_report(&t, &ff, PI, 0.16, &FeasibilityOptions::default()).unwrap();
        let shifted = r.g_f.shifted(0.37);
        let c_f = integral(&shifted);
        let h_f = shifted.map(|v| c_f / TAU - v);
        let diff = h_f.zip_map(&r.h_f, |a, b| a - b).unwrap();
        assert!(diff.sup_norm() < 1e-10);
    }

    #[test]
    fn no_ff_reduces_to_lower_bound_only() {
        let m = line();
        let t = von_mises_1d(1.0, 0.0, &m).unwrap();
        let r = theorem1_report(
            &t,
            &GridFunction::zeros(m, 1),
            PI,
            0.04,
            &FeasibilityOptions::default(),
        )
        .unwrap();
        assert!(r.h_f.sup_norm() < 1e-14);
        assert!(r.h.min() > 0.0);
        assert_eq!(r.m_hat_2, f64::INFINITY);
        assert!(r.zero_set_ok);
        assert!(integral(&r.g).abs() < 1e-8);
    }

    #[test]
    fn strict_synthesis_refuses_infeasible_mass() {
        let m = line();
        let t = von_mises_1d(1.0, 0.0, &m).unwrap();
        let r = theorem1_report(
            &t,
            &GridFunction::zeros(m, 1),
            PI,
            0.04,
            &FeasibilityOptions::default(),
        )
        .unwrap();
        assert!(matches!(
            synthesize_leader_density_1d(&r, 0.05, Synthesis::Strict),
            Err(Error::Infeasible { .. })
        ));
        let fb = synthesize_leader_density_1d(&r, 0.05, Synthesis::Fallback).unwrap();
        assert!(fb.fallback);
        assert!(fb.density.min().abs() < 1e-15);
        assert!((integral(&fb.density) - 0.05).abs() < 1e-12);
    }

    fn round_trip_error(n: usize) -> f64 {
        let m = PeriodicMesh::line(n).unwrap();
        let ff_spec = KernelSpec::morse(PI / 2.0, PI, 1.0).unwrap();
        let fl_spec = KernelSpec::repulsive(PI).unwrap();
        let t = von_mises_1d(1.0, 0.0, &m).unwrap();
        let r = report_for(&t, &ff_spec, &fl_spec, 0.02, &FeasibilityOptions::default()).unwrap();
        let rho = synthesize_leader_density_1d(&r, 0.25, Synthesis::Strict).unwrap();
        assert!(!rho.fallback);
        assert!(rho.density.min() >= -1e-9);
        assert!((integral(&rho.density) - 0.25).abs() < 1e-9);
        let target = scale_to_mass(&t, 0.75).unwrap();
        let ffk = materialize(&ff_spec, &m).unwrap();
        let vfl = steady_interaction_field(&target, &ffk, 0.02).unwrap();
        let back = circular_convolve(&materialize(&fl_spec, &m).unwrap(), &rho.density).unwrap();
        back.zip_map(&vfl, |a, b| a - b).unwrap().sup_norm()
    }

    #[test]
    fn weak_morse_synthesis_round_trip_is_second_order() {
        let e: Vec<f64> = [500, 1000, 2000]
            .iter()
            .map(|&n| round_trip_error(n))
            .collect();
        assert!(e[0] / e[1] > 3.5 && e[1] / e[2] > 3.5, "{e:?}");
        assert!(e[2] < 1e-6, "{e:?}");
    }

    #[test]
    fn deconvolution_2d_examples() {
        let m = PeriodicMesh::square(32).unwrap();
        let k = materialize(&KernelSpec::repulsive(PI).unwrap(), &m).unwrap();
        let zero = GridFunction::zeros(m, 2);
        let out = deconvolve_2d(&zero, &k, 0.6).unwrap();
        assert_eq!(out.m_hat, 0.0);
        assert!(out.feasible);
        assert!(out
            .density
            .values()
            .iter()
            .all(|v| (v - 0.6 / (TAU * TAU)).abs() < 1e-15));

        let rho = GridFunction::from_fn(m, |x| {
            (x[0].cos() + 0.5 * (x[1] - 0.3).sin() * x[0].sin()).exp()
        });
        let v = circular_convolve(&k, &rho).unwrap();
        let r = deconvolve_vector(&v, &k).unwrap();
        let diff = r.zip_map(&rho, |a, b| a - b).unwrap();
        let spread = diff.max() - diff.min();
        assert!(spread < 1e-6, "{spread}");
    }

    fn thresholds(kappa: f64, d: f64, ff: KernelSpec) -> FeasibilityReport {
        let m = line();
        let t = von_mises_1d(kappa, 0.0, &m).unwrap();
        report_for(
            &t,
            &ff,
            &KernelSpec::repulsive(PI).unwrap(),
            d,
            &FeasibilityOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn scenario_thresholds() {
        let a = thresholds(1.0, 0.04, KernelSpec::zero());
        assert!((a.m_hat_1 - 0.1384).abs() < 1e-3, "{}", a.m_hat_1);
        assert_eq!(a.m_hat_2, f64::INFINITY);
        let b = thresholds(1.0, 0.02, KernelSpec::morse(PI / 2.0, PI, 1.0).unwrap());
        assert!((b.m_hat_1 - 0.2444).abs() < 1e-3, "{}", b.m_hat_1);
        let c = thresholds(
            2.0,
            0.16,
            KernelSpec::morse(PI / 15.0, PI / 2.0, 2.0).unwrap(),
        );
        assert!((c.m_hat_1 - 0.2615).abs() < 1e-3, "{}", c.m_hat_1);
        assert!((c.m_hat_2 - 0.6280).abs() < 1e-3, "{}", c.m_hat_2);
        assert!(c.zero_set_ok);
        assert!(c.feasible_for(0.45) && !c.feasible_for(0.2) && !c.feasible_for(0.7));
    }

    #[test]
    fn g_has_zero_integral() {
        let c = thresholds(
            2.0,
            0.16,
            KernelSpec::morse(PI / 15.0, PI / 2.0, 2.0).unwrap(),
        );
        assert!(integral(&c.g).abs() < 1e-9 * c.g.sup_norm());
        assert!((integral(&c.h) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn count_bounds() {
        assert_eq!(leader_count_bounds(0.25, 2.0, 375).unwrap(), (125, None));
        assert_eq!(leader_count_bounds(0.0, 0.5, 10).unwrap(), (0, Some(10)));
        assert_eq!(
            leader_count_bounds(f64::NEG_INFINITY, f64::INFINITY, 10).unwrap(),
            (0, None)
        );
        assert_eq!(leader_count_bounds(0.14, 2.0, 430).unwrap().0, 70);
        assert!(leader_count_bounds(1.0, 2.0, 10).is_err());
    }

    #[test]
    fn stability_examples() {
        let m = line();
        let zero = KernelSpec::zero();
        let fl = KernelSpec::repulsive(PI).unwrap();
        let vm = scale_to_mass(&von_mises_1d(1.0, 0.0, &m).unwrap(), 0.75).unwrap();
        let rho_l0 = GridFunction::constant(m, 0.25 / TAU);
        let s = stability_report(&vm, &zero, &fl, 0.02, 1.0, &rho_l0).unwrap();
        assert_eq!(s.f, 0.0);
        assert!((s.g1_inf - 1.0).abs() < 1e-4, "{}", s.g1_inf);
        assert!(s.condition_holds);
        assert_eq!(s.basin_eta_star, None);

        let flat = scale_to_mass(&uniform(m), 0.75).unwrap();
        for d in [1e-4, 0.02, 3.0] {
            let s = stability_report(&flat, &zero, &fl, d, 1.0, &rho_l0).unwrap();
            assert!(s.g1_inf < 1e-12 && s.condition_holds);
        }

        let ff = KernelSpec::morse(PI / 2.0, PI, 1.0).unwrap();
        let s = stability_report(&vm, &ff, &fl, 0.02, 1.0, &rho_l0).unwrap();
        assert!(s.f > 0.0 && s.alpha >= 0.0 && s.beta >= 0.0 && s.gamma >= 0.0);
        assert_eq!(s.delta_alt, 2.0 * s.delta);
    }
}
