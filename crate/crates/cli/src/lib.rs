//! `densctl`: runs scenario files and writes CSV artifacts plus a plain
//! text report into a fresh timestamped directory.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use densctl::experiments::{
    basin_study, feasibility_map, prepare, run_macro_scenario, run_micro_ensemble, sweep_ml,
    tail_error, threshold_summary, Prepared, SWEEP_HEADER,
};
use densctl::feasibility::{stability_report, StabilityReport, FEASIBILITY_MAP_HEADER};
use densctl::grid::{write_csv, GridFunction};
use densctl::lemma_ode::{basin_csv_row, BASIN_CSV_HEADER};
use densctl::metrics::DiagnosticSample;
use densctl::scenario::{parse_config, Mode, ScenarioConfig};
use densctl::targets::scale_to_mass;
use densctl::Error;
use log::info;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    FeasibilityMap,
    Macro,
    Micro,
    Basin,
    SweepMl,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::FeasibilityMap => Mode::FeasibilityMap,
            ModeArg::Macro => Mode::Macro,
            ModeArg::Micro => Mode::Micro,
            ModeArg::Basin => Mode::Basin,
            ModeArg::SweepMl => Mode::SweepMl,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "densctl",
    version,
    about = "Leader-follower density control experiments"
)]
pub struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    pub mode: ModeArg,
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads for sweeps and ensembles.
    #[arg(long, env = "DENSCTL_JOBS")]
    pub jobs: Option<usize>,
    /// Master seed; overrides `seed` in the file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parent of the run directory; overrides `output` in the file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a run, already mapped to its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() || matches!(e, Error::Io(_)) {
            EXIT_NUMERICAL
        } else {
            EXIT_CONFIG
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

/// Loads and validates the scenario with command line overrides applied.
pub fn load(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| Failure::config(format!("{}: {e}", cli.config.display())))?;
    let mut cfg =
        parse_config(&text, Some(cli.mode.into())).map_err(|e| Failure::config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

/// Runs the command line and returns the process exit code; on success the
/// run directory is printed.
pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            EXIT_OK
        }
        Err(f) => {
            eprintln!("densctl: {}", f.message);
            f.code
        }
    }
}

/// Parses the scenario, runs it and returns the finished run directory.
pub fn execute(cli: &Cli) -> Result<PathBuf, Failure> {
    let cfg = load(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::config("--jobs must be ≥ 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    let jobs = pool.current_num_threads();

    fs::create_dir_all(&cfg.output)?;
    let name = run_name(&cfg);
    let partial = cfg.output.join(format!(".partial-{name}"));
    fs::create_dir(&partial)?;
    let started = Instant::now();
    let result = pool.install(|| run_mode(&cfg, &partial));
    match result {
        Ok(mut report) => {
            let _ = writeln!(
                report,
                "wall_clock_seconds = {:.3}",
                started.elapsed().as_secs_f64()
            );
            let _ = writeln!(report, "jobs = {jobs}");
            fs::write(partial.join("report.txt"), report)?;
            let done = cfg.output.join(&name);
            fs::rename(&partial, &done)?;
            info!("finished {}", done.display());
            Ok(done)
        }
        Err(f) => {
            let _ = fs::remove_dir_all(&partial);
            Err(f)
        }
    }
}

fn run_name(cfg: &ScenarioConfig) -> String {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
    let base = format!("{}-{stamp}", cfg.mode.as_str());
    let mut name = base.clone();
    let mut i = 1;
    while cfg.output.join(&name).exists() || cfg.output.join(format!(".partial-{name}")).exists() {
        name = format!("{base}-{i}");
        i += 1;
    }
    name
}

/// Commented header lines: the full resolved configuration.
fn header(cfg: &ScenarioConfig) -> Vec<String> {
    cfg.to_text().lines().map(str::to_string).collect()
}

fn create(dir: &Path, name: &str, cfg: &ScenarioConfig) -> Result<BufWriter<fs::File>, Failure> {
    let mut w = BufWriter::new(fs::File::create(dir.join(name))?);
    for line in header(cfg) {
        writeln!(w, "# {line}")?;
    }
    Ok(w)
}

fn write_table(
    dir: &Path,
    name: &str,
    cfg: &ScenarioConfig,
    head: &str,
    rows: &[String],
) -> Result<(), Failure> {
    let mut w = create(dir, name, cfg)?;
    writeln!(w, "{head}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_series(
    dir: &Path,
    name: &str,
    cfg: &ScenarioConfig,
    samples: &[DiagnosticSample],
) -> Result<(), Failure> {
    let rows: Vec<String> = samples.iter().map(DiagnosticSample::csv_row).collect();
    write_table(dir, name, cfg, DiagnosticSample::HEADER, &rows)
}

fn write_field(
    dir: &Path,
    name: &str,
    cfg: &ScenarioConfig,
    f: &GridFunction,
) -> Result<(), Failure> {
    let mut w = BufWriter::new(fs::File::create(dir.join(name))?);
    write_csv(&mut w, f, &header(cfg))?;
    w.flush()?;
    Ok(())
}

fn report_head(cfg: &ScenarioConfig) -> String {
    let mut r = String::new();
    let _ = writeln!(r, "densctl {} run", cfg.mode.as_str());
    let _ = writeln!(r, "\n[config]");
    r.push_str(&cfg.to_text());
    r
}

fn stability_lines(r: &StabilityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n[stability]");
    let _ = writeln!(
        s,
        "condition D(2 - |g1|_inf) > F: {} (|g1|_inf = {:.6}, F = {:.6})",
        if r.condition_holds { "holds" } else { "fails" },
        r.g1_inf,
        r.f
    );
    let _ = writeln!(
        s,
        "alpha = {:.6e}, beta = {:.6e}, gamma = {:.6e}, delta = {:.6e}, k = {:.6e}",
        r.alpha, r.beta, r.gamma, r.delta, r.k
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6e}"));
    let _ = writeln!(
        s,
        "basin bound eta* = {} (with delta = |f_x|: {})",
        opt(r.basin_eta_star),
        opt(r.basin_eta_star_alt)
    );
    s
}

fn threshold_lines(cfg: &ScenarioConfig, prepared: &Prepared) -> String {
    let mut s = String::from("\n[thresholds]\n");
    for l in threshold_summary(cfg, prepared) {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

fn stability_for(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    rho_l0: &GridFunction,
) -> Result<StabilityReport, Failure> {
    let m_l = cfg.population.map_or(0.5, |p| p.leader_mass());
    let scaled = scale_to_mass(&prepared.target, 1.0 - m_l)?;
    Ok(stability_report(
        &scaled, &cfg.ff, &cfg.fl, cfg.d, cfg.k, rho_l0,
    )?)
}

fn time_tag(t: f64) -> String {
    format!("{t:.4}").replace('.', "p")
}

/// Runs one mode, writing artifacts into `dir`, and returns the report
/// body.
pub fn run_mode(cfg: &ScenarioConfig, dir: &Path) -> Result<String, Failure> {
    let mut report = report_head(cfg);
    match cfg.mode {
        Mode::FeasibilityMap => {
            let rows: Vec<String> = feasibility_map(cfg)?.iter().map(|r| r.csv_row()).collect();
            write_table(dir, "map.csv", cfg, FEASIBILITY_MAP_HEADER, &rows)?;
            let _ = writeln!(report, "\n[output]\nmap.csv: {} points", rows.len());
        }
        Mode::Macro => {
            let prepared = prepare(cfg)?;
            report.push_str(&threshold_lines(cfg, &prepared));
            let (refs, out) = run_macro_scenario(cfg, &prepared)?;
            let rho_l0 = prepared.macro_config(cfg, &refs).rho_l0;
            report.push_str(&stability_lines(&stability_for(cfg, &prepared, &rho_l0)?));
            write_series(dir, "series.csv", cfg, &out.samples)?;
            write_field(dir, "reference_leaders.csv", cfg, &refs.rho_l_ref)?;
            write_field(dir, "reference_followers.csv", cfg, &refs.rho_f_ref)?;
            for s in out
                .snapshots
                .iter()
                .chain(std::iter::once(&out.final_state))
            {
                let tag = time_tag(s.t);
                write_field(dir, &format!("leaders_t{tag}.csv"), cfg, &s.rho_l)?;
                write_field(dir, &format!("followers_t{tag}.csv"), cfg, &s.rho_f)?;
            }
            let last = out.samples.last().expect("runs always sample");
            let _ = writeln!(report, "\n[result]");
            let _ = writeln!(report, "reference fallback: {}", refs.fallback);
            let _ = writeln!(report, "substeps per step: {}", out.substeps);
            let _ = writeln!(
                report,
                "final err_F = {:.6e} ({:.3}%), err_L = {:.6e}, kl_F = {:.6e}",
                last.err_f, last.pct_f, last.err_l, last.kl_f
            );
        }
        Mode::Micro => {
            let prepared = prepare(cfg)?;
            report.push_str(&threshold_lines(cfg, &prepared));
            let seeds = cfg.ensemble_seeds();
            let (refs, members) = run_micro_ensemble(cfg, &prepared, &seeds)?;
            let uniform =
                GridFunction::constant(*prepared.mesh(), refs.m_l / prepared.mesh().volume());
            report.push_str(&stability_lines(&stability_for(cfg, &prepared, &uniform)?));
            write_field(dir, "reference_leaders.csv", cfg, &refs.rho_l_ref)?;
            write_field(dir, "reference_followers.csv", cfg, &refs.rho_f_ref)?;
            let mut rows = Vec::new();
            for m in &members {
                write_series(
                    dir,
                    &format!("series_seed{}.csv", m.seed),
                    cfg,
                    &m.run.samples,
                )?;
                for s in m
                    .run
                    .snapshots
                    .iter()
                    .chain(std::iter::once(&m.run.final_state))
                {
                    let mut w = create(
                        dir,
                        &format!("agents_seed{}_t{}.csv", m.seed, time_tag(s.t)),
                        cfg,
                    )?;
                    s.write_csv(&mut w, &[])?;
                    w.flush()?;
                }
                let last = m.run.samples.last().expect("runs always sample");
                rows.push(format!(
                    "{},{:.10e},{:.10e},{:.10e}",
                    m.seed,
                    last.err_f,
                    tail_error(&m.run.samples),
                    last.kl_f
                ));
            }
            write_table(
                dir,
                "ensemble.csv",
                cfg,
                "seed,final_err_F,tail_err_F,final_kl_F",
                &rows,
            )?;
            let _ = writeln!(report, "\n[seeds]");
            let _ = writeln!(
                report,
                "master = {}\nruns = {}",
                cfg.seed,
                seeds
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            );
            let _ = writeln!(report, "reference fallback: {}", refs.fallback);
        }
        Mode::Basin => {
            let prepared = prepare(cfg)?;
            report.push_str(&threshold_lines(cfg, &prepared));
            let study = basin_study(cfg, &prepared)?;
            report.push_str(&stability_lines(&study.stability));
            write_table(
                dir,
                "basin.csv",
                cfg,
                BASIN_CSV_HEADER,
                &[basin_csv_row(&study.params, &study.estimate)],
            )?;
            let mut rows = Vec::new();
            for (eta0, tr) in &study.trajectories {
                for &(t, eta, xi) in &tr.samples {
                    rows.push(format!(
                        "{eta0:.10e},{t:.10e},{eta:.10e},{xi:.10e},{:?}",
                        tr.outcome
                    ));
                }
            }
            write_table(dir, "trajectories.csv", cfg, "eta0,t,eta,xi,outcome", &rows)?;
        }
        Mode::SweepMl => {
            let prepared = prepare(cfg)?;
            report.push_str(&threshold_lines(cfg, &prepared));
            let points = sweep_ml(cfg, &prepared)?;
            let rows: Vec<String> = points.iter().map(|p| p.csv_row()).collect();
            write_table(dir, "sweep.csv", cfg, SWEEP_HEADER, &rows)?;
            let _ = writeln!(report, "\n[output]\nsweep.csv: {} points", rows.len());
            if cfg.sweep_micro {
                let _ = writeln!(
                    report,
                    "micro seeds derived from master seed {} and point index",
                    cfg.seed
                );
            }
        }
    }
    Ok(report)
}
