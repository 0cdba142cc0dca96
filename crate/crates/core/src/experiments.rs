//! Experiment drivers shared by the command line front end and the
//! acceptance suite: scenario assembly, Mᴸ sweeps with threshold
//! refinement, feasibility maps, micro ensembles and basin studies.

use std::fs::File;
use std::io::BufReader;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feasibility::{
    deconvolve_2d, leader_count_bounds, report_for, stability_report, steady_interaction_field,
    synthesize_leader_density_1d, FeasibilityMapRow, FeasibilityReport, StabilityReport, Synthesis,
};
use crate::grid::{read_csv, GridFunction, PeriodicMesh};
use crate::kernels::materialize;
use crate::lemma_ode::{
    basin_estimate, integrate, BasinEstimate, IntegrateOptions, LemmaParams, Trajectory,
};
use crate::macro_sim::{run, MacroRun, MacroRunConfig, Vacuum};
use crate::metrics::DiagnosticSample;
use crate::micro_sim::{run_micro, BridgeConfig, MicroRun, MicroRunConfig};
use crate::scenario::{
    derive_seed, FollowerStart, LeaderStart, Population, ScenarioConfig, TargetSpec,
};
use crate::targets::{bimodal_von_mises_2d, scale_to_mass, von_mises_1d, TargetDensity};

/// Unit-mass follower target on the scenario mesh.
pub fn follower_target(cfg: &ScenarioConfig) -> Result<TargetDensity> {
    let mesh = PeriodicMesh::new(cfg.dim, cfg.n)?;
    match &cfg.target {
        TargetSpec::VonMises { kappa, mu } => von_mises_1d(*kappa, *mu, &mesh),
        TargetSpec::Bimodal { kappa, mu, nu } => bimodal_von_mises_2d(*kappa, *mu, *nu, &mesh),
        TargetSpec::Uniform => {
            TargetDensity::from_profile(GridFunction::constant(mesh, 1.0 / mesh.volume()))
        }
        TargetSpec::File(path) => {
            let f =
                File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let profile = read_csv(BufReader::new(f))?;
            profile.mesh().ensure_same(&mesh)?;
            TargetDensity::from_profile(profile)
        }
    }
}

/// Threshold information for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Thresholds {
    /// Closed-form 1D thresholds.
    Line(FeasibilityReport),
    /// Least leader mass of the 2D deconvolution.
    Plane { m_hat: f64 },
}

impl Thresholds {
    /// `(M̂ᴸ₁, M̂ᴸ₂)`; the 2D upper bound is 1.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            Thresholds::Line(r) => (r.m_hat_1, r.m_hat_2),
            Thresholds::Plane { m_hat } => (*m_hat, 1.0),
        }
    }

    pub fn feasible_for(&self, m_l: f64) -> bool {
        match self {
            Thresholds::Line(r) => r.feasible_for(m_l),
            Thresholds::Plane { m_hat } => *m_hat <= m_l && m_l > 0.0 && m_l < 1.0,
        }
    }
}

/// Mass-independent pieces of a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub target: TargetDensity,
    pub ff_kernel: GridFunction,
    pub fl_kernel: GridFunction,
    pub thresholds: Thresholds,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    let target = follower_target(cfg)?;
    let mesh = *target.mesh();
    let ff_kernel = materialize(&cfg.ff, &mesh)?;
    let fl_kernel = materialize(&cfg.fl, &mesh)?;
    let thresholds = if cfg.dim == 1 {
        Thresholds::Line(report_for(
            &target,
            &cfg.ff,
            &cfg.fl,
            cfg.d,
            &cfg.feasibility,
        )?)
    } else {
        // the least leader mass depends on the split through ρ̄ᶠ; evaluated
        // at the configured one (or an even split)
        let m_l = cfg.population.map_or(0.5, |p| p.leader_mass());
        let probe = leader_reference_2d(&target, &ff_kernel, &fl_kernel, cfg.d, m_l)?;
        Thresholds::Plane { m_hat: probe.0 .1 }
    };
    Ok(Prepared {
        target,
        ff_kernel,
        fl_kernel,
        thresholds,
    })
}

/// `((density, M̂ᴸ), fallback)` for a 2D mass split.
fn leader_reference_2d(
    target: &TargetDensity,
    ff_kernel: &GridFunction,
    fl_kernel: &GridFunction,
    d: f64,
    m_l: f64,
) -> Result<((GridFunction, f64), bool)> {
    let scaled = scale_to_mass(target, 1.0 - m_l)?;
    let vfl = steady_interaction_field(&scaled, ff_kernel, d)?;
    let dec = deconvolve_2d(&vfl, fl_kernel, m_l)?;
    Ok(((dec.density, dec.m_hat), dec.fallback))
}

/// References for a mass split.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub m_l: f64,
    pub rho_f_ref: GridFunction,
    pub rho_l_ref: GridFunction,
    pub fallback: bool,
}

impl Prepared {
    pub fn mesh(&self) -> &PeriodicMesh {
        self.target.mesh()
    }

    pub fn references(
        &self,
        cfg: &ScenarioConfig,
        m_l: f64,
        mode: Synthesis,
    ) -> Result<References> {
        let rho_f_ref = scale_to_mass(&self.target, 1.0 - m_l)?.profile().clone();
        let (rho_l_ref, fallback) = match &self.thresholds {
            Thresholds::Line(report) => {
                let r = synthesize_leader_density_1d(report, m_l, mode)?;
                (r.density, r.fallback)
            }
            Thresholds::Plane { .. } => {
                let ((density, m_hat), fallback) = leader_reference_2d(
                    &self.target,
                    &self.ff_kernel,
                    &self.fl_kernel,
                    cfg.d,
                    m_l,
                )?;
                if fallback && mode == Synthesis::Strict {
                    return Err(Error::Infeasible {
                        mass: m_l,
                        reason: format!("the deconvolved profile needs leader mass {m_hat:.6}"),
                    });
                }
                (density, fallback)
            }
        };
        Ok(References {
            m_l,
            rho_f_ref,
            rho_l_ref,
            fallback,
        })
    }

    pub fn macro_config(&self, cfg: &ScenarioConfig, refs: &References) -> MacroRunConfig {
        let mesh = *self.mesh();
        let uniform = |m: f64| GridFunction::constant(mesh, m / mesh.volume());
        MacroRunConfig {
            dt: cfg.dt,
            horizon: cfg.horizon,
            k: cfg.k,
            d: cfg.d,
            ff_kernel: self.ff_kernel.clone(),
            fl_kernel: self.fl_kernel.clone(),
            rho_f_ref: refs.rho_f_ref.clone(),
            rho_l_ref: refs.rho_l_ref.clone(),
            rho_l0: match cfg.initial_leaders {
                LeaderStart::Uniform => uniform(refs.m_l),
                LeaderStart::Reference => refs.rho_l_ref.clone(),
            },
            rho_f0: match cfg.initial_followers {
                FollowerStart::Uniform => uniform(1.0 - refs.m_l),
                FollowerStart::Target => refs.rho_f_ref.clone(),
            },
            stride: cfg.stride,
            snapshot_times: cfg.snapshots.clone(),
            percent_base: cfg.percent_base,
            // fallback references vanish somewhere by construction
            vacuum: if refs.fallback {
                Vacuum::Clamp
            } else {
                Vacuum::Abort
            },
        }
    }

    pub fn micro_config(
        &self,
        cfg: &ScenarioConfig,
        refs: &References,
        n_l: usize,
        n_f: usize,
        seed: u64,
    ) -> MicroRunConfig {
        let mut bridge = BridgeConfig::for_mesh(*self.mesh());
        if let Some(c) = cfg.kde_concentration {
            bridge.concentration = c;
        }
        MicroRunConfig {
            dt: cfg.dt,
            horizon: cfg.horizon,
            k: cfg.k,
            d: cfg.d,
            fl: cfg.fl.clone(),
            ff: cfg.ff.clone(),
            rho_f_ref: refs.rho_f_ref.clone(),
            rho_l_ref: refs.rho_l_ref.clone(),
            n_leaders: n_l,
            n_followers: n_f,
            seed,
            stride: cfg.stride,
            bridge,
            snapshot_times: cfg.snapshots.clone(),
            percent_base: cfg.percent_base,
        }
    }
}

/// Agent counts for the configured population.
pub fn agent_counts(cfg: &ScenarioConfig) -> Result<(usize, usize)> {
    match cfg.population {
        Some(Population::Counts { n_l, n_f }) => Ok((n_l, n_f)),
        Some(Population::Masses { m_l, .. }) => counts_for_mass(m_l, cfg.micro_agents),
        None => Err(Error::Config("no population given".into())),
    }
}

/// `(N_L, N_F)` closest to leader mass `m_l` for `total` agents.
pub fn counts_for_mass(m_l: f64, total: usize) -> Result<(usize, usize)> {
    let n_l = (m_l * total as f64).round() as usize;
    if n_l == 0 || n_l >= total {
        return Err(Error::param(
            "M_L",
            format!("{total} agents leave no room for both species at M_L = {m_l}"),
        ));
    }
    Ok((n_l, total - n_l))
}

/// One macro run for the configured population.
pub fn run_macro_scenario(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
) -> Result<(References, MacroRun)> {
    let m_l = cfg
        .population
        .ok_or_else(|| Error::Config("no population given".into()))?
        .leader_mass();
    let refs = prepared.references(cfg, m_l, cfg.synthesis)?;
    let out = run(prepared.macro_config(cfg, &refs))?;
    Ok((refs, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub seed: u64,
    pub run: MicroRun,
}

/// Micro runs for each seed, in seed order regardless of scheduling.
pub fn run_micro_ensemble(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    seeds: &[u64],
) -> Result<(References, Vec<EnsembleMember>)> {
    let (n_l, n_f) = agent_counts(cfg)?;
    let refs = prepared.references(cfg, n_l as f64 / (n_l + n_f) as f64, cfg.synthesis)?;
    let members = seeds
        .par_iter()
        .map(|&seed| {
            let run = run_micro(&prepared.micro_config(cfg, &refs, n_l, n_f, seed))?;
            Ok(EnsembleMember { seed, run })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((refs, members))
}

/// Mean follower error over the last tenth of a run; smooths the sampling
/// noise of single micro snapshots.
pub fn tail_error(samples: &[DiagnosticSample]) -> f64 {
    let Some(last) = samples.last() else {
        return f64::NAN;
    };
    let from = 0.9 * last.t;
    let tail: Vec<f64> = samples
        .iter()
        .filter(|s| s.t >= from)
        .map(|s| s.err_f)
        .collect();
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroSummary {
    pub runs: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl MicroSummary {
    pub fn of(values: &[f64]) -> MicroSummary {
        MicroSummary {
            runs: values.len(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

pub const SWEEP_HEADER: &str =
    "M_L,refined,feasible,fallback,err_F,err_L,kl_F,pct_F,max_err_F,mass_drift,\
micro_runs,micro_err_F_mean,micro_err_F_min,micro_err_F_max";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub m_l: f64,
    pub refined: bool,
    /// Inside the theoretical interval.
    pub feasible: bool,
    pub fallback: bool,
    /// Final macro diagnostics.
    pub last: DiagnosticSample,
    /// Largest follower error over the macro run.
    pub max_err_f: f64,
    /// Largest relative mass change of either species over the macro run.
    pub mass_drift: f64,
    pub micro: Option<MicroSummary>,
}

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        let (runs, mean, min, max) = match self.micro {
            Some(m) => (m.runs, m.mean, m.min, m.max),
            None => (0, f64::NAN, f64::NAN, f64::NAN),
        };
        format!(
            "{:.10},{},{},{},{:.10e},{:.10e},{:.10e},{:.6},{:.10e},{:.3e},{},{:.10e},{:.10e},{:.10e}",
            self.m_l,
            self.refined,
            self.feasible,
            self.fallback,
            self.last.err_f,
            self.last.err_l,
            self.last.kl_f,
            self.last.pct_f,
            self.max_err_f,
            self.mass_drift,
            runs,
            mean,
            min,
            max
        )
    }
}

fn sweep_point(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    index: usize,
    m_l: f64,
    refined: bool,
) -> Result<SweepPoint> {
    // with agents the mass split snaps to N_L/N so macro and micro match
    let counts = if cfg.sweep_micro {
        Some(counts_for_mass(m_l, cfg.micro_agents)?)
    } else {
        None
    };
    let m_l = counts.map_or(m_l, |(n_l, n_f)| n_l as f64 / (n_l + n_f) as f64);
    let refs = prepared.references(cfg, m_l, Synthesis::Fallback)?;
    let micro = match counts {
        None => None,
        Some((n_l, n_f)) => {
            let errs = (0..cfg.micro_runs as u64)
                .into_par_iter()
                .map(|rep| {
                    let seed = derive_seed(cfg.seed, index as u64, rep);
                    run_micro(&prepared.micro_config(cfg, &refs, n_l, n_f, seed))
                        .map(|r| tail_error(&r.samples))
                })
                .collect::<Result<Vec<f64>>>()?;
            Some(MicroSummary::of(&errs))
        }
    };
    let out = run(prepared.macro_config(cfg, &refs))?;
    let feasible = match &prepared.thresholds {
        Thresholds::Line(r) => r.feasible_for(m_l),
        Thresholds::Plane { .. } => !refs.fallback,
    };
    Ok(SweepPoint {
        m_l,
        refined,
        feasible,
        fallback: refs.fallback,
        last: *out.samples.last().expect("runs always sample"),
        max_err_f: out.samples.iter().map(|s| s.err_f).fold(0.0, f64::max),
        mass_drift: mass_drift(&out.samples),
        micro,
    })
}

/// Largest relative change of either species' mass against the first sample.
pub fn mass_drift(samples: &[DiagnosticSample]) -> f64 {
    let Some(first) = samples.first() else {
        return 0.0;
    };
    samples
        .iter()
        .map(|s| {
            ((s.mass_l - first.mass_l) / first.mass_l)
                .abs()
                .max(((s.mass_f - first.mass_f) / first.mass_f).abs())
        })
        .fold(0.0, f64::max)
}

/// Macro (and optionally micro) final errors over the Mᴸ grid, followed by
/// one pass that adds `cfg.refine` points inside every coarse interval
/// whose ends fall on different sides of the steady-state error floor
/// `1e−3·‖ρ̄ᶠ‖₂`. Points are returned sorted by Mᴸ.
pub fn sweep_ml(cfg: &ScenarioConfig, prepared: &Prepared) -> Result<Vec<SweepPoint>> {
    let coarse = cfg.ml_range.values();
    let mut points = coarse
        .par_iter()
        .enumerate()
        .map(|(i, &m)| sweep_point(cfg, prepared, i, m, false))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.m_l.total_cmp(&b.m_l));
    if cfg.refine > 0 {
        let low = |p: &SweepPoint| {
            let norm = scale_to_mass(&prepared.target, 1.0 - p.m_l)
                .map(|t| t.profile().l2_norm())
                .unwrap_or(f64::NAN);
            p.last.err_f <= 1e-3 * norm
        };
        let mut extra = Vec::new();
        for w in points.windows(2) {
            if low(&w[0]) != low(&w[1]) {
                let step = (w[1].m_l - w[0].m_l) / (cfg.refine + 1) as f64;
                extra.extend((1..=cfg.refine).map(|j| w[0].m_l + j as f64 * step));
            }
        }
        let offset = coarse.len();
        let refined = extra
            .par_iter()
            .enumerate()
            .map(|(i, &m)| sweep_point(cfg, prepared, offset + i, m, true))
            .collect::<Result<Vec<_>>>()?;
        points.extend(refined);
        points.sort_by(|a, b| a.m_l.total_cmp(&b.m_l));
    }
    Ok(points)
}

/// Thresholds over the κ × D grid for a 1D von Mises target.
pub fn feasibility_map(cfg: &ScenarioConfig) -> Result<Vec<FeasibilityMapRow>> {
    if cfg.dim != 1 {
        return Err(Error::Config("feasibility maps are one-dimensional".into()));
    }
    let mu = match cfg.target {
        TargetSpec::VonMises { mu, .. } => mu,
        _ => {
            return Err(Error::Config(
                "feasibility maps sweep a von-mises target".into(),
            ))
        }
    };
    let mesh = PeriodicMesh::line(cfg.n)?;
    let kappas = cfg.kappa_range.values();
    let ds = cfg.d_range.values();
    let grid: Vec<(f64, f64)> = kappas
        .iter()
        .flat_map(|&k| ds.iter().map(move |&d| (k, d)))
        .collect();
    grid.par_iter()
        .map(|&(kappa, d)| {
            let target = von_mises_1d(kappa, mu, &mesh)?;
            let r = report_for(&target, &cfg.ff, &cfg.fl, d, &cfg.feasibility)?;
            Ok(FeasibilityMapRow {
                kappa,
                d,
                m_hat_1: r.m_hat_1,
                m_hat_2: r.m_hat_2,
                zero_set_ok: r.zero_set_ok,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinStudy {
    pub stability: StabilityReport,
    pub params: LemmaParams,
    pub estimate: BasinEstimate,
    pub trajectories: Vec<(f64, Trajectory)>,
}

/// Comparison-system constants of the scenario and trajectories from each
/// `η₀` in the configured range.
pub fn basin_study(cfg: &ScenarioConfig, prepared: &Prepared) -> Result<BasinStudy> {
    let m_l = cfg
        .population
        .ok_or_else(|| Error::Config("no population given".into()))?
        .leader_mass();
    let refs = prepared.references(cfg, m_l, Synthesis::Fallback)?;
    let scaled = scale_to_mass(&prepared.target, 1.0 - m_l)?;
    let rho_l0 = prepared.macro_config(cfg, &refs).rho_l0;
    let stability = stability_report(&scaled, &cfg.ff, &cfg.fl, cfg.d, cfg.k, &rho_l0)?;
    if !(stability.delta > 0.0) {
        return Err(Error::Config(
            "the basin study needs a follower-follower kernel (delta = 0 otherwise)".into(),
        ));
    }
    let params = LemmaParams::new(
        stability.alpha,
        stability.beta,
        stability.gamma,
        stability.delta,
        cfg.k,
    )?;
    let estimate = basin_estimate(&params)?;
    let opts = IntegrateOptions {
        dt: cfg.basin_dt,
        record_every: 10,
        ..IntegrateOptions::default()
    };
    let trajectories = cfg
        .basin_eta0
        .values()
        .par_iter()
        .map(|&eta0| integrate(&params, eta0, &opts).map(|t| (eta0, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BasinStudy {
        stability,
        params,
        estimate,
        trajectories,
    })
}

/// Human-readable threshold lines for run reports.
pub fn threshold_summary(cfg: &ScenarioConfig, prepared: &Prepared) -> Vec<String> {
    let mut lines = Vec::new();
    match &prepared.thresholds {
        Thresholds::Line(r) => {
            lines.push(format!("M_hat_1 = {:.6}", r.m_hat_1));
            lines.push(format!("M_hat_2 = {:.6}", r.m_hat_2));
            lines.push(format!(
                "zero-set condition: {}",
                if r.zero_set_ok { "holds" } else { "fails" }
            ));
        }
        Thresholds::Plane { m_hat } => lines.push(format!("M_hat (2D deconvolution) = {m_hat:.6}")),
    }
    if let Some(p) = cfg.population {
        let m_l = p.leader_mass();
        lines.push(format!(
            "M_L = {m_l:.6}: {}",
            if prepared.thresholds.feasible_for(m_l) {
                "feasible"
            } else {
                "infeasible"
            }
        ));
        if let Some(Population::Counts { n_f, .. }) = cfg.population {
            let (lo, hi) = prepared.thresholds.interval();
            if let Ok((min, max)) = leader_count_bounds(lo, hi, n_f as u64) {
                let max = max.map_or_else(|| "unbounded".to_string(), |m| m.to_string());
                lines.push(format!(
                    "leader count bounds for N_F = {n_f}: [{min}, {max}]"
                ));
            }
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{parse_config, Mode};

    fn scenario(mode: Mode, extra: &str) -> ScenarioConfig {
        let base = "target.kappa = 1\nkernels.ff.kind = morse\nkernels.ff.ell_r = pi/2\nkernels.ff.ell_a = pi\nkernels.ff.zeta = 1\nphysics.D = 0.02\ndomain.n = 64\n";
        parse_config(&format!("{base}{extra}"), Some(mode)).unwrap()
    }

    #[test]
    fn references_have_the_right_masses() {
        let cfg = scenario(Mode::Macro, "masses.M_L = 0.5\nmasses.M_F = 0.5");
        let p = prepare(&cfg).unwrap();
        let r = p.references(&cfg, 0.5, Synthesis::Strict).unwrap();
        assert!(!r.fallback);
        assert!((crate::grid::integral(&r.rho_l_ref) - 0.5).abs() < 1e-12);
        assert!((crate::grid::integral(&r.rho_f_ref) - 0.5).abs() < 1e-12);
        assert!(p.references(&cfg, 0.1, Synthesis::Strict).is_err());
        assert!(
            p.references(&cfg, 0.1, Synthesis::Fallback)
                .unwrap()
                .fallback
        );
    }

    #[test]
    fn counts() {
        assert_eq!(counts_for_mass(0.34, 1000).unwrap(), (340, 660));
        assert!(counts_for_mass(0.0001, 100).is_err());
    }

    #[test]
    fn tail_error_averages_the_last_tenth() {
        let s = |t: f64, e: f64| DiagnosticSample {
            t,
            err_l: 0.0,
            err_f: e,
            kl_l: 0.0,
            kl_f: 0.0,
            mass_l: 0.0,
            mass_f: 0.0,
            pct_l: 0.0,
            pct_f: 0.0,
        };
        let samples = [s(0.0, 9.0), s(5.0, 9.0), s(9.0, 1.0), s(10.0, 3.0)];
        assert_eq!(tail_error(&samples), 2.0);
    }

    #[test]
    fn sweep_is_sorted_and_refined_at_knees() {
        let cfg = scenario(
            Mode::SweepMl,
            "time.T = 2\ntime.dt = 0.05\nsweep.ML_range = 0.1:0.9:3\nsweep.refine = 1",
        );
        let p = prepare(&cfg).unwrap();
        let pts = sweep_ml(&cfg, &p).unwrap();
        assert!(pts.windows(2).all(|w| w[0].m_l < w[1].m_l));
        assert_eq!(pts.iter().filter(|p| !p.refined).count(), 3);
        assert!(pts.iter().all(|p| p.feasible != p.fallback));
    }

    #[test]
    fn map_covers_the_grid() {
        let cfg = scenario(
            Mode::FeasibilityMap,
            "sweep.kappa_range = 0.5:1:2\nsweep.D_range = 0.01:0.02:3",
        );
        let rows = feasibility_map(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[1].kappa, rows[1].d), (0.5, 0.015));
    }

    #[test]
    fn basin_study_runs() {
        let cfg = scenario(
            Mode::Macro,
            "masses.M_L = 0.5\nmasses.M_F = 0.5\nbasin.eta0_range = 0:1:3\nbasin.dt = 0.01",
        );
        let p = prepare(&cfg).unwrap();
        let b = basin_study(&cfg, &p).unwrap();
        assert_eq!(b.trajectories.len(), 3);
        assert!(b.params.alpha > 0.0 && b.params.delta > 0.0);
    }
}
