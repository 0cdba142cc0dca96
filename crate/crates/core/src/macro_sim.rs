//! Explicit integration of the leader/follower density equations under the
//! feedback control law.
//!
//! Both species are advanced in flux form: for each axis the face flux is
//! `½((ρv)_j + (ρv)_{j+1}) − D(ρ_{j+1} − ρ_j)/h`, and the node update is the
//! difference of its two face fluxes. The sum over nodes telescopes, so the
//! discrete masses only move by rounding.

use log::{debug, warn};

use crate::error::{Error, Result, Species};
use crate::grid::{
    cumulative_trapezoid, integral, spectral_gradient, spectral_solve_poisson, Convolver,
    GridFunction, PeriodicMesh,
};
use crate::metrics::{fill_percentages, kl_divergence, l2_error, DiagnosticSample, PercentBase};

/// Leader density below which the control law refuses to divide.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Explicit diffusion number each substep is held to.
pub const DIFFUSION_NUMBER: f64 = 0.4;

/// Densities may dip this far below zero before a run aborts.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-8;

/// What the control law does where the leader density is (nearly) zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Vacuum {
    /// Fail with [`Error::NearVacuum`].
    #[default]
    Abort,
    /// Divide by the floor instead. Agent runs use this since a KDE of a
    /// few hundred leaders can be tiny far from every leader.
    Clamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub rho_l: GridFunction,
    pub rho_f: GridFunction,
    /// Control velocity used for the most recent step.
    pub u: GridFunction,
    pub step_count: usize,
}

fn check_floor(rho_l: &[f64], flux: impl Fn(usize) -> bool, vacuum: Vacuum) -> Result<()> {
    if vacuum == Vacuum::Clamp {
        return Ok(());
    }
    for (node, &r) in rho_l.iter().enumerate() {
        if r < DENSITY_FLOOR && flux(node) {
            return Err(Error::NearVacuum {
                node,
                value: r,
                floor: DENSITY_FLOOR,
            });
        }
    }
    Ok(())
}

/// Leader flux `ρᴸu = −K P` with `P` the antiderivative of `ρ̄ᴸ − ρᴸ`
/// anchored at `−π`.
fn leader_flux_1d(rho_l: &[f64], rho_l_ref: &[f64], k: f64, h: f64) -> Vec<f64> {
    let e: Vec<f64> = rho_l_ref.iter().zip(rho_l).map(|(a, b)| a - b).collect();
    cumulative_trapezoid(&e, h)
        .into_iter()
        .map(|p| -k * p)
        .collect()
}

/// `ρᴸu = −∇φ` with `∇²φ = K(ρ̄ᴸ − ρᴸ)`; one array per axis.
fn leader_flux_2d(rho_l: &GridFunction, rho_l_ref: &GridFunction, k: f64) -> Result<Vec<Vec<f64>>> {
    let e = rho_l_ref.zip_map(rho_l, |a, b| k * (a - b))?;
    // equal masses leave only rounding in the mean; drop it so the solve
    // does not reject an almost-converged error
    let mean = integral(&e) / e.mesh().volume();
    let scale = k * rho_l_ref.values().iter().map(|v| v.abs()).sum::<f64>() / e.mesh().len() as f64;
    if mean.abs() > 1e-8 * scale {
        return Err(Error::NonZeroMean {
            mean,
            norm: e.l2_norm(),
        });
    }
    let phi = spectral_solve_poisson(&e.shifted(-mean))?;
    let grad = spectral_gradient(&phi)?;
    Ok((0..2)
        .map(|c| grad.component(c).iter().map(|g| -g).collect())
        .collect())
}

fn leader_flux(rho_l: &GridFunction, rho_l_ref: &GridFunction, k: f64) -> Result<Vec<Vec<f64>>> {
    rho_l.mesh().ensure_same(rho_l_ref.mesh())?;
    rho_l.ensure_scalar("leader density")?;
    rho_l_ref.ensure_scalar("leader reference")?;
    let mesh = rho_l.mesh();
    if mesh.dim() == 1 {
        Ok(vec![leader_flux_1d(
            rho_l.values(),
            rho_l_ref.values(),
            k,
            mesh.spacing(),
        )])
    } else {
        leader_flux_2d(rho_l, rho_l_ref, k)
    }
}

fn velocity_from_flux(
    rho_l: &GridFunction,
    flux: Vec<Vec<f64>>,
    vacuum: Vacuum,
) -> Result<GridFunction> {
    let r = rho_l.values();
    check_floor(r, |i| flux.iter().any(|q| q[i] != 0.0), vacuum)?;
    let comps = flux
        .into_iter()
        .map(|q| {
            q.iter()
                .zip(r)
                .map(|(&q, &rho)| {
                    if q == 0.0 {
                        0.0
                    } else {
                        q / rho.max(DENSITY_FLOOR)
                    }
                })
                .collect()
        })
        .collect();
    GridFunction::from_components(*rho_l.mesh(), comps)
}

/// `u = −K P / ρᴸ` with `P(x) = ∫_{−π}^x (ρ̄ᴸ − ρᴸ)`.
pub fn control_field_1d(
    rho_l: &GridFunction,
    rho_l_ref: &GridFunction,
    k: f64,
) -> Result<GridFunction> {
    control_field(rho_l, rho_l_ref, k, Vacuum::Abort)
}

/// `u = −∇φ / ρᴸ` where `∇²φ = K(ρ̄ᴸ − ρᴸ)`, solved spectrally.
pub fn control_field_2d(
    rho_l: &GridFunction,
    rho_l_ref: &GridFunction,
    k: f64,
) -> Result<GridFunction> {
    control_field(rho_l, rho_l_ref, k, Vacuum::Abort)
}

/// Dimension-generic control field with an explicit vacuum policy.
pub fn control_field(
    rho_l: &GridFunction,
    rho_l_ref: &GridFunction,
    k: f64,
    vacuum: Vacuum,
) -> Result<GridFunction> {
    let flux = leader_flux(rho_l, rho_l_ref, k)?;
    velocity_from_flux(rho_l, flux, vacuum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRunConfig {
    pub dt: f64,
    pub horizon: f64,
    pub k: f64,
    pub d: f64,
    /// Materialized kernels; vector-valued in 2D, scalar in 1D.
    pub ff_kernel: GridFunction,
    pub fl_kernel: GridFunction,
    /// Mass-scaled follower target `ρ̄ᶠ`.
    pub rho_f_ref: GridFunction,
    pub rho_l_ref: GridFunction,
    pub rho_l0: GridFunction,
    pub rho_f0: GridFunction,
    /// Diagnostics every this many steps (the first and last step are
    /// always sampled).
    pub stride: usize,
    /// Times at which a copy of the state is kept.
    pub snapshot_times: Vec<f64>,
    pub percent_base: PercentBase,
    /// Policy for the reported control velocity where `ρᴸ` vanishes. The
    /// leader update uses the flux and never divides.
    pub vacuum: Vacuum,
}

impl MacroRunConfig {
    pub fn mesh(&self) -> &PeriodicMesh {
        self.rho_f_ref.mesh()
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Substeps per step so that `D·Δt_sub/h² ≤ 0.4`.
    pub fn substeps(&self) -> usize {
        let h = self.mesh().spacing();
        ((self.dt * self.d / (h * h) / DIFFUSION_NUMBER).ceil() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let mesh = *self.mesh();
        for f in [
            &self.rho_l_ref,
            &self.rho_l0,
            &self.rho_f0,
            &self.ff_kernel,
            &self.fl_kernel,
        ] {
            f.mesh().ensure_same(&mesh)?;
        }
        for (name, f) in [
            ("rho_L_ref", &self.rho_l_ref),
            ("rho_L0", &self.rho_l0),
            ("rho_F0", &self.rho_f0),
        ] {
            if !f.is_scalar() {
                return Err(Error::Shape(format!("{name} must be scalar")));
            }
        }
        for (name, f) in [
            ("ff_kernel", &self.ff_kernel),
            ("fl_kernel", &self.fl_kernel),
        ] {
            if f.components() != mesh.dim() {
                return Err(Error::Shape(format!(
                    "{name} needs {} components",
                    mesh.dim()
                )));
            }
        }
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("T", self.horizon)?;
        positive("K", self.k)?;
        positive("D", self.d)?;
        if self.stride == 0 {
            return Err(Error::param("stride", "must be ≥ 1"));
        }
        let (ml, ml_ref) = (integral(&self.rho_l0), integral(&self.rho_l_ref));
        if (ml - ml_ref).abs() > 1e-6 * ml_ref.abs().max(1e-12) {
            return Err(Error::param(
                "rho_L0",
                format!("initial leader mass {ml} differs from the reference mass {ml_ref}"),
            ));
        }
        Ok(())
    }
}

/// Precomputed operators for one run.
#[derive(Debug, Clone)]
pub struct MacroSim {
    config: MacroRunConfig,
    ff: Convolver,
    fl: Convolver,
    substeps: usize,
    neighbours: Vec<Vec<usize>>,
    state: SimState,
}

impl MacroSim {
    pub fn new(config: MacroRunConfig) -> Result<Self> {
        config.validate()?;
        let mesh = *config.mesh();
        let substeps = config.substeps();
        if substeps > 1 {
            debug!("explicit diffusion limit: {substeps} substeps per step");
        }
        let neighbours = (0..mesh.dim())
            .map(|axis| (0..mesh.len()).map(|i| mesh.shifted(i, axis, 1)).collect())
            .collect();
        let state = SimState {
            t: 0.0,
            rho_l: config.rho_l0.clone(),
            rho_f: config.rho_f0.clone(),
            u: GridFunction::zeros(mesh, mesh.dim()),
            step_count: 0,
        };
        Ok(MacroSim {
            ff: Convolver::new(&config.ff_kernel),
            fl: Convolver::new(&config.fl_kernel),
            substeps,
            neighbours,
            state,
            config,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn config(&self) -> &MacroRunConfig {
        &self.config
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// `ρ ← ρ − τ Σ_axis (F_{j+½} − F_{j−½})/h`.
    fn apply_flux(&self, rho: &mut [f64], flux: &[Vec<f64>], diffusion: f64, tau: f64) {
        let h = self.config.mesh().spacing();
        let mut delta = vec![0.0; rho.len()];
        for (axis, q) in flux.iter().enumerate() {
            let up = &self.neighbours[axis];
            for i in 0..rho.len() {
                let j = up[i];
                let face = 0.5 * (q[i] + q[j]) - diffusion * (rho[j] - rho[i]) / h;
                delta[i] += face;
                delta[j] -= face;
            }
        }
        let c = tau / h;
        rho.iter_mut().zip(&delta).for_each(|(r, d)| *r -= c * d);
    }

    fn substep(&mut self, tau: f64) -> Result<()> {
        let cfg = &self.config;
        let mesh = *cfg.mesh();
        let lflux = leader_flux(&self.state.rho_l, &cfg.rho_l_ref, cfg.k)?;
        let u = velocity_from_flux(&self.state.rho_l, lflux.clone(), cfg.vacuum)?;

        let vfl = self.fl.apply(self.state.rho_l.values());
        let vff = self.ff.apply(self.state.rho_f.values());
        let rf = self.state.rho_f.values();
        let fflux: Vec<Vec<f64>> = vfl
            .iter()
            .zip(&vff)
            .map(|(a, b)| (0..mesh.len()).map(|i| rf[i] * (a[i] + b[i])).collect())
            .collect();

        let mut rho_f = self.state.rho_f.clone().into_values();
        self.apply_flux(&mut rho_f, &fflux, cfg.d, tau);
        let mut rho_l = self.state.rho_l.clone().into_values();
        self.apply_flux(&mut rho_l, &lflux, 0.0, tau);

        self.state.rho_f = GridFunction::scalar(mesh, rho_f)?;
        self.state.rho_l = GridFunction::scalar(mesh, rho_l)?;
        self.state.u = u;
        Ok(())
    }

    fn check(&self) -> Result<()> {
        let s = &self.state;
        for (species, f) in [(Species::Followers, &s.rho_f), (Species::Leaders, &s.rho_l)] {
            if let Some(node) = f.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::Instability {
                    step: s.step_count,
                    t: s.t,
                    what: format!("non-finite {species} density at node {node}"),
                });
            }
            let (node, value) = f.argmin();
            if value < -NEGATIVITY_TOLERANCE {
                return Err(Error::NegativeDensity {
                    species,
                    value,
                    node,
                    step: s.step_count,
                });
            }
        }
        Ok(())
    }

    /// One step of length `Δt`, split into [`MacroSim::substeps`] explicit
    /// substeps.
    pub fn step(&mut self) -> Result<()> {
        let tau = self.config.dt / self.substeps as f64;
        for _ in 0..self.substeps {
            self.substep(tau)?;
        }
        self.state.step_count += 1;
        self.state.t = self.state.step_count as f64 * self.config.dt;
        self.check()
    }

    pub fn diagnostics(&self) -> Result<DiagnosticSample> {
        let s = &self.state;
        let cfg = &self.config;
        // KL is undefined against a reference with zeros (fallback leader profiles)
        let kl = |p: &GridFunction, q: &GridFunction| kl_divergence(p, q).unwrap_or(f64::NAN);
        Ok(DiagnosticSample {
            t: s.t,
            err_l: l2_error(&s.rho_l, &cfg.rho_l_ref)?,
            err_f: l2_error(&s.rho_f, &cfg.rho_f_ref)?,
            kl_l: kl(&s.rho_l, &cfg.rho_l_ref),
            kl_f: kl(&s.rho_f, &cfg.rho_f_ref),
            mass_l: integral(&s.rho_l),
            mass_f: integral(&s.rho_f),
            pct_l: f64::NAN,
            pct_f: f64::NAN,
        })
    }

    /// Largest `Δt·|v|/h` over both species at the current state.
    pub fn advective_courant(&self) -> Result<f64> {
        let h = self.config.mesh().spacing();
        let vfl = self.fl.apply(self.state.rho_l.values());
        let vff = self.ff.apply(self.state.rho_f.values());
        let vf = vfl
            .iter()
            .zip(&vff)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y).abs()))
            .fold(0.0, f64::max);
        let flux = leader_flux(&self.state.rho_l, &self.config.rho_l_ref, self.config.k)?;
        let u = velocity_from_flux(&self.state.rho_l, flux, Vacuum::Clamp)?;
        Ok(self.config.dt * vf.max(u.sup_norm()) / h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRun {
    pub samples: Vec<DiagnosticSample>,
    pub snapshots: Vec<SimState>,
    pub final_state: SimState,
    pub substeps: usize,
}

pub fn run(config: MacroRunConfig) -> Result<MacroRun> {
    let mut sim = MacroSim::new(config)?;
    let courant = sim.advective_courant()?;
    if courant > 1.0 {
        warn!("advective Courant number {courant:.3} exceeds 1 at t = 0");
    }
    let steps = sim.config.steps();
    let stride = sim.config.stride;
    let mut pending: Vec<f64> = sim.config.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let mut snapshots = Vec::new();
    let mut samples = vec![sim.diagnostics()?];
    let half_dt = 0.5 * sim.config.dt;
    let mut take_snapshots = |sim: &MacroSim, snapshots: &mut Vec<SimState>| {
        while pending.last().is_some_and(|&t| t <= sim.state.t + half_dt) {
            pending.pop();
            snapshots.push(sim.state.clone());
        }
    };
    take_snapshots(&sim, &mut snapshots);
    for n in 1..=steps {
        sim.step()?;
        if n % stride == 0 || n == steps {
            samples.push(sim.diagnostics()?);
        }
        take_snapshots(&sim, &mut snapshots);
    }
    let norms = (
        sim.config.rho_l_ref.l2_norm(),
        sim.config.rho_f_ref.l2_norm(),
    );
    fill_percentages(&mut samples, sim.config.percent_base, norms);
    Ok(MacroRun {
        samples,
        snapshots,
        final_state: sim.state.clone(),
        substeps: sim.substeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{
        report_for, steady_interaction_field, synthesize_leader_density_1d, FeasibilityOptions,
        Synthesis,
    };
    use crate::grid::spectral_divergence;
    use crate::kernels::{materialize, KernelSpec};
    use crate::targets::{scale_to_mass, von_mises_1d};
    use std::f64::consts::{PI, TAU};

    fn line(n: usize) -> PeriodicMesh {
        PeriodicMesh::line(n).unwrap()
    }

    fn uniform_config(mesh: PeriodicMesh, ff: &KernelSpec) -> MacroRunConfig {
        let vol = mesh.volume();
        let rl = GridFunction::constant(mesh, 0.25 / vol);
        let rf = GridFunction::constant(mesh, 0.75 / vol);
        MacroRunConfig {
            dt: 0.01,
            horizon: 1.0,
            k: 1.0,
            d: 0.02,
            ff_kernel: materialize(ff, &mesh).unwrap(),
            fl_kernel: materialize(&KernelSpec::repulsive(PI).unwrap(), &mesh).unwrap(),
            rho_f_ref: rf.clone(),
            rho_l_ref: rl.clone(),
            rho_l0: rl,
            rho_f0: rf,
            stride: 10,
            snapshot_times: vec![],
            percent_base: PercentBase::InitialError,
            vacuum: Vacuum::Abort,
        }
    }

    #[test]
    fn control_vanishes_at_reference() {
        let m = line(500);
        let r = GridFunction::from_fn(m, |x| (1.0 + 0.5 * x[0].cos()) / TAU);
        let u = control_field_1d(&r, &r, 1.0).unwrap();
        assert_eq!(u.sup_norm(), 0.0);
        let m2 = PeriodicMesh::square(16).unwrap();
        let r2 = GridFunction::constant(m2, 1.0);
        assert_eq!(control_field_2d(&r2, &r2, 1.0).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn control_for_sine_perturbation() {
        let m = line(500);
        let eps = 1e-3;
        let reference = GridFunction::from_fn(m, |x| (1.0 + 0.5 * x[0].cos()) / TAU);
        let rho = reference
            .zip_map(&GridFunction::from_fn(m, |x| eps * x[0].sin()), |a, b| {
                a + b
            })
            .unwrap();
        let u = control_field_1d(&rho, &reference, 2.0).unwrap();
        let h = m.spacing();
        for j in 0..500 {
            let x = m.coordinate(j);
            // P = ∫_{−π}^x −ε sin = ε(cos x − cos(−π))
            let p = eps * (x.cos() - (-PI).cos());
            let want = -2.0 * p / rho.values()[j];
            assert!((u.values()[j] - want).abs() < 10.0 * eps * h * h, "{j}");
        }
    }

    #[test]
    fn control_refuses_vacuum() {
        let m = line(16);
        let mut v = vec![1.0 / TAU; 16];
        v[3] = 0.0;
        v[4] = 2.0 / TAU;
        let rho = GridFunction::scalar(m, v).unwrap();
        let reference = GridFunction::constant(m, 1.0 / TAU);
        assert!(matches!(
            control_field_1d(&rho, &reference, 1.0),
            Err(Error::NearVacuum { node: 3, .. })
        ));
        assert!(control_field(&rho, &reference, 1.0, Vacuum::Clamp)
            .unwrap()
            .sup_norm()
            .is_finite());
    }

    #[test]
    fn poisson_control_single_mode() {
        let m = PeriodicMesh::square(32).unwrap();
        let c = 0.3;
        let rho = GridFunction::constant(m, c);
        let reference = GridFunction::from_fn(m, |x| c + 0.01 * x[0].cos());
        let u = control_field_2d(&rho, &reference, 2.0).unwrap();
        for i in 0..m.len() {
            let x = m.node(i);
            assert!((u.at(i, 0) + 2.0 / c * 0.01 * x[0].sin()).abs() < 1e-12);
            assert!(u.at(i, 1).abs() < 1e-12);
        }
        // ∇·(ρᴸu) = −K eᴸ
        let flux = GridFunction::from_components(
            m,
            (0..2)
                .map(|a| u.component(a).iter().map(|v| v * c).collect())
                .collect(),
        )
        .unwrap();
        let div = spectral_divergence(&flux).unwrap();
        let e = reference.zip_map(&rho, |a, b| a - b).unwrap();
        let res = div.zip_map(&e, |d, e| d + 2.0 * e).unwrap();
        assert!(res.l2_norm() <= 1e-6 * 2.0 * e.l2_norm());
    }

    #[test]
    fn control_is_anchor_independent() {
        let m = line(200);
        let reference = GridFunction::from_fn(m, |x| (1.0 + 0.4 * (2.0 * x[0]).sin()) / TAU);
        let rho = GridFunction::from_fn(m, |x| (1.0 + 0.3 * x[0].cos()) / TAU);
        let p0 = leader_flux_1d(rho.values(), reference.values(), 1.0, m.spacing());
        let e: Vec<f64> = reference
            .values()
            .iter()
            .zip(rho.values())
            .map(|(a, b)| a - b)
            .collect();
        // antiderivative started at node 77 and carried round the circle
        let start = 77;
        let mut rotated: Vec<f64> = e[start..].to_vec();
        rotated.extend_from_slice(&e[..=start]);
        let q = cumulative_trapezoid(&rotated, m.spacing());
        let offset = p0[start] / -1.0;
        for (i, qv) in q.iter().enumerate().take(200) {
            let node = (start + i) % 200;
            assert!((-(qv + offset) - p0[node]).abs() < 1e-10, "{node}");
        }
    }

    #[test]
    fn uniform_state_is_stationary() {
        let cfg = uniform_config(line(64), &KernelSpec::morse(PI / 2.0, PI, 1.0).unwrap());
        let rho0 = cfg.rho_f0.clone();
        let out = run(cfg).unwrap();
        let diff = l2_error(&out.final_state.rho_f, &rho0).unwrap();
        assert!(diff < 1e-14, "{diff}");
        assert!(out.samples.iter().all(|s| s.err_l < 1e-14));
        assert_eq!(out.samples.len(), 11);
    }

    #[test]
    fn substep_count_matches_diffusion_number() {
        let mut cfg = uniform_config(line(500), &KernelSpec::zero());
        cfg.d = 0.16;
        let h = cfg.mesh().spacing();
        let s = cfg.substeps();
        assert!(cfg.dt / s as f64 * cfg.d / (h * h) <= DIFFUSION_NUMBER);
        assert!(cfg.dt / (s - 1) as f64 * cfg.d / (h * h) > DIFFUSION_NUMBER);
    }

    #[test]
    fn mismatched_leader_mass_is_rejected() {
        let mut cfg = uniform_config(line(32), &KernelSpec::zero());
        cfg.rho_l0 = cfg.rho_l0.scaled(1.1);
        assert!(matches!(
            MacroSim::new(cfg),
            Err(Error::InvalidParameter { .. })
        ));
    }

    fn regulation_config(n: usize, k: f64) -> MacroRunConfig {
        let m = line(n);
        let ff = KernelSpec::morse(PI / 2.0, PI, 1.0).unwrap();
        let fl = KernelSpec::repulsive(PI).unwrap();
        let t = von_mises_1d(1.0, 0.0, &m).unwrap();
        let r = report_for(&t, &ff, &fl, 0.02, &FeasibilityOptions::default()).unwrap();
        let rl = synthesize_leader_density_1d(&r, 0.25, Synthesis::Strict)
            .unwrap()
            .density;
        let rf = scale_to_mass(&t, 0.75).unwrap().profile().clone();
        MacroRunConfig {
            dt: 0.01,
            horizon: 5.0,
            k,
            d: 0.02,
            ff_kernel: materialize(&ff, &m).unwrap(),
            fl_kernel: materialize(&fl, &m).unwrap(),
            rho_f_ref: rf,
            rho_l_ref: rl,
            rho_l0: GridFunction::constant(m, 0.25 / TAU),
            rho_f0: GridFunction::constant(m, 0.75 / TAU),
            stride: 10,
            snapshot_times: vec![1.0, 2.5],
            percent_base: PercentBase::InitialError,
            vacuum: Vacuum::Abort,
        }
    }

    #[test]
    fn leader_error_decays_at_gain() {
        let out = run(regulation_config(200, 1.0)).unwrap();
        let e0 = out.samples[0].err_l;
        for s in &out.samples {
            let want = e0 * (-s.t).exp();
            assert!(
                (s.err_l - want).abs() <= 0.01 * e0,
                "t={} {} {}",
                s.t,
                s.err_l,
                want
            );
        }
        assert_eq!(out.snapshots.len(), 2);
        assert!((out.snapshots[0].t - 1.0).abs() < 1e-12);
        let m0 = out.samples[0].mass_f;
        assert!(out.samples.iter().all(|s| (s.mass_f - m0).abs() < 1e-13));
    }

    #[test]
    fn steady_field_round_trip_through_simulator() {
        // starting at the steady pair only the O(h²) mismatch between the
        // closed-form synthesis and the discrete operators moves the followers
        let mut cfg = regulation_config(500, 1.0);
        cfg.rho_l0 = cfg.rho_l_ref.clone();
        cfg.rho_f0 = cfg.rho_f_ref.clone();
        cfg.horizon = 0.01;
        let target = crate::targets::TargetDensity::from_profile(cfg.rho_f_ref.clone()).unwrap();
        let target = scale_to_mass(&target, 0.75).unwrap();
        let v = steady_interaction_field(&target, &cfg.ff_kernel, cfg.d).unwrap();
        assert!(integral(&v).abs() < 1e-9);
        let out = run(cfg).unwrap();
        let e = out.samples.last().unwrap().err_f;
        assert!(e < 1e-7, "{e}");
    }
}
