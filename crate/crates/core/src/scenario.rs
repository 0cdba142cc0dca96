//! Scenario files: line-oriented `key = value` text with dotted section
//! prefixes, `#` comments and blank lines.
//!
//! ```text
//! mode = macro
//! target.kappa = 1
//! kernels.ff.kind = morse
//! kernels.ff.ell_r = pi/2
//! kernels.ff.ell_a = pi
//! kernels.ff.zeta = 1
//! physics.D = 0.02
//! masses.M_L = 0.25
//! masses.M_F = 0.75
//! ```
//!
//! Numbers accept `pi` in the forms `pi`, `a*pi`, `pi/b` and `a*pi/b`.
//! Ranges are `start:stop:count` with both ends included.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::feasibility::{FeasibilityOptions, Synthesis};
use crate::kernels::{KernelKind, KernelSpec};
use crate::metrics::PercentBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    FeasibilityMap,
    Macro,
    Micro,
    Basin,
    SweepMl,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::FeasibilityMap,
        Mode::Macro,
        Mode::Micro,
        Mode::Basin,
        Mode::SweepMl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::FeasibilityMap => "feasibility-map",
            Mode::Macro => "macro",
            Mode::Micro => "micro",
            Mode::Basin => "basin",
            Mode::SweepMl => "sweep-ml",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    VonMises {
        kappa: f64,
        mu: f64,
    },
    Bimodal {
        kappa: [f64; 2],
        mu: f64,
        nu: f64,
    },
    Uniform,
    /// Tabulated profile in the grid CSV format.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Population {
    Masses { m_l: f64, m_f: f64 },
    Counts { n_l: usize, n_f: usize },
}

impl Population {
    pub fn leader_mass(&self) -> f64 {
        match *self {
            Population::Masses { m_l, .. } => m_l,
            Population::Counts { n_l, n_f } => n_l as f64 / (n_l + n_f) as f64,
        }
    }

    pub fn follower_mass(&self) -> f64 {
        match *self {
            Population::Masses { m_f, .. } => m_f,
            Population::Counts { n_l, n_f } => n_f as f64 / (n_l + n_f) as f64,
        }
    }
}

/// Evenly spaced values `start..=stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.start + i as f64 * step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaderStart {
    Uniform,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowerStart {
    Uniform,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub dim: usize,
    pub n: usize,
    pub target: TargetSpec,
    pub fl: KernelSpec,
    pub ff: KernelSpec,
    pub d: f64,
    pub k: f64,
    pub population: Option<Population>,
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
    pub snapshots: Vec<f64>,
    pub initial_leaders: LeaderStart,
    pub initial_followers: FollowerStart,
    pub synthesis: Synthesis,
    pub feasibility: FeasibilityOptions,
    pub percent_base: PercentBase,
    pub seed: u64,
    /// Explicit micro seeds; empty means `micro_runs` seeds derived from
    /// `seed`.
    pub micro_seeds: Vec<u64>,
    pub micro_runs: usize,
    /// Total agent count when the population is given as masses.
    pub micro_agents: usize,
    pub kde_concentration: Option<f64>,
    pub kappa_range: Range,
    pub d_range: Range,
    pub ml_range: Range,
    /// Extra sweep points placed around each detected threshold.
    pub refine: usize,
    pub sweep_micro: bool,
    pub basin_eta0: Range,
    pub basin_dt: f64,
    pub output: PathBuf,
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "mode",
    "domain.dim",
    "domain.n",
    "target.family",
    "target.kappa",
    "target.mu",
    "target.kappa1",
    "target.kappa2",
    "target.nu",
    "target.file",
    "kernels.fl.ell",
    "kernels.ff.kind",
    "kernels.ff.ell",
    "kernels.ff.ell_r",
    "kernels.ff.ell_a",
    "kernels.ff.zeta",
    "physics.D",
    "control.K",
    "masses.M_L",
    "masses.M_F",
    "counts.N_L",
    "counts.N_F",
    "time.dt",
    "time.T",
    "time.output_stride",
    "time.snapshots",
    "initial.leaders",
    "initial.followers",
    "feasibility.synthesis",
    "feasibility.eps_H",
    "feasibility.eps_G",
    "metrics.percent_base",
    "seed",
    "micro.seeds",
    "micro.runs",
    "micro.agents",
    "micro.kde_concentration",
    "sweep.kappa_range",
    "sweep.D_range",
    "sweep.ML_range",
    "sweep.refine",
    "sweep.micro",
    "basin.eta0_range",
    "basin.dt",
    "output",
];

/// Parses `1.5`, `pi`, `2*pi`, `pi/15`, `3*pi/4` and plain fractions `a/b`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim().parse::<f64>().ok()?)),
        None => (s, None),
    };
    let num = match num.split_once('*') {
        Some((a, b)) if b.trim() == "pi" => a.trim().parse::<f64>().ok()? * PI,
        Some(_) => return None,
        None if num == "pi" => PI,
        None => num.parse::<f64>().ok()?,
    };
    Some(match den {
        Some(d) => num / d,
        None => num,
    })
}

fn parse_range(s: &str) -> Option<Range> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return None;
    }
    let count = parts[2].trim().parse::<usize>().ok().filter(|&c| c >= 1)?;
    Some(Range {
        start: parse_number(parts[0])?,
        stop: parse_number(parts[1])?,
        count,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_range(r: &Range) -> String {
    format!("{}:{}:{}", fmt_f64(r.start), fmt_f64(r.stop), r.count)
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn bad(&self, key: &str, what: &str) -> Error {
        let v = self.raw(key).unwrap_or("");
        Error::Config(format!("line {}: `{key} = {v}`: {what}", self.line(key)))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => parse_number(v)
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| self.bad(key, "expected a number")),
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn integer(&self, key: &str) -> Result<Option<u64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse::<u64>()
                .map(Some)
                .map_err(|_| self.bad(key, "expected a nonnegative integer")),
        }
    }

    fn range_or(&self, key: &str, default: Range) -> Result<Range> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_range(v).ok_or_else(|| self.bad(key, "expected start:stop:count")),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(vec![]),
            Some(v) if v.trim().is_empty() => Ok(vec![]),
            Some(v) => v
                .split(',')
                .map(|x| {
                    parse_number(x)
                        .ok_or_else(|| self.bad(key, "expected a comma-separated list of numbers"))
                })
                .collect(),
        }
    }

    fn word<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).map_or(default, str::trim)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("`{name}` must be > 0, got {v}")))
    }
}

/// Parses and validates a scenario. `mode` from the command line wins over
/// an absent `mode` key and must agree with a present one.
pub fn parse_config(text: &str, mode: Option<Mode>) -> Result<ScenarioConfig> {
    let mut map = BTreeMap::new();
    let mut unknown = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`",
                i + 1
            )));
        };
        let k = k.trim();
        if !KEYS.contains(&k) {
            unknown.push(k.to_string());
            continue;
        }
        if map
            .insert(k.to_string(), (i + 1, v.trim().to_string()))
            .is_some()
        {
            return Err(Error::Config(format!("line {}: `{k}` given twice", i + 1)));
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Config(format!(
            "unknown keys: {}",
            unknown.join(", ")
        )));
    }
    let e = Entries { map };

    let file_mode = match e.raw("mode") {
        None => None,
        Some(m) => Some(Mode::parse(m).ok_or_else(|| e.bad("mode", "unknown mode"))?),
    };
    let mode = match (mode, file_mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!(
                "mode `{}` requested but the file says `{}`",
                a.as_str(),
                b.as_str()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(Error::Config("no mode given".into())),
    };

    let dim = e.integer("domain.dim")?.unwrap_or(1) as usize;
    if !(dim == 1 || dim == 2) {
        return Err(e.bad("domain.dim", "must be 1 or 2"));
    }
    let n = e
        .integer("domain.n")?
        .unwrap_or(if dim == 1 { 500 } else { 50 }) as usize;
    if n < 4 || n % 2 != 0 {
        return Err(e.bad("domain.n", "must be even and at least 4"));
    }

    let family = e.word(
        "target.family",
        if dim == 1 {
            "von-mises"
        } else {
            "bimodal-von-mises"
        },
    );
    let target = match family {
        "von-mises" => TargetSpec::VonMises {
            kappa: positive("target.kappa", e.number_or("target.kappa", 1.0)?)?,
            mu: e.number_or("target.mu", 0.0)?,
        },
        "bimodal-von-mises" => TargetSpec::Bimodal {
            kappa: [
                positive("target.kappa1", e.number_or("target.kappa1", 1.0)?)?,
                positive("target.kappa2", e.number_or("target.kappa2", 1.0)?)?,
            ],
            mu: e.number_or("target.mu", 0.0)?,
            nu: e.number_or("target.nu", 0.0)?,
        },
        "uniform" => TargetSpec::Uniform,
        "file" => {
            let p = e.raw("target.file").ok_or_else(|| {
                Error::Config("`target.family = file` needs `target.file`".into())
            })?;
            let path = PathBuf::from(p);
            if !path.is_file() {
                return Err(e.bad("target.file", "file does not exist"));
            }
            TargetSpec::File(path)
        }
        _ => {
            return Err(e.bad(
                "target.family",
                "expected von-mises, bimodal-von-mises, uniform or file",
            ))
        }
    };
    match (&target, dim) {
        (TargetSpec::VonMises { .. }, 2) => {
            return Err(e.bad("target.family", "von-mises is one-dimensional"))
        }
        (TargetSpec::Bimodal { .. }, 1) => {
            return Err(e.bad("target.family", "bimodal-von-mises is two-dimensional"))
        }
        _ => {}
    }

    let fl = KernelSpec::repulsive(e.number_or("kernels.fl.ell", PI)?)?;
    let ff = match e.word("kernels.ff.kind", "none") {
        "none" => KernelSpec::zero(),
        "repulsive" => KernelSpec::repulsive(e.required("kernels.ff.ell")?)?,
        "morse" => KernelSpec::morse(
            e.required("kernels.ff.ell_r")?,
            e.required("kernels.ff.ell_a")?,
            e.required("kernels.ff.zeta")?,
        )?,
        _ => return Err(e.bad("kernels.ff.kind", "expected none, repulsive or morse")),
    };

    let d = positive("physics.D", e.required("physics.D")?)?;
    let k = positive("control.K", e.number_or("control.K", 1.0)?)?;

    let masses = (e.number("masses.M_L")?, e.number("masses.M_F")?);
    let counts = (e.integer("counts.N_L")?, e.integer("counts.N_F")?);
    let population = match (masses, counts) {
        ((None, None), (None, None)) => None,
        ((Some(m_l), Some(m_f)), (None, None)) => {
            if (m_l + m_f - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "masses.M_L + masses.M_F = {} but leader and follower masses must sum to 1",
                    m_l + m_f
                )));
            }
            if !(m_l > 0.0 && m_f > 0.0) {
                return Err(Error::Config("both masses must be > 0".into()));
            }
            Some(Population::Masses { m_l, m_f })
        }
        ((None, None), (Some(n_l), Some(n_f))) => {
            if n_l == 0 || n_f == 0 {
                return Err(Error::Config("both counts must be ≥ 1".into()));
            }
            Some(Population::Counts {
                n_l: n_l as usize,
                n_f: n_f as usize,
            })
        }
        ((Some(_), None), _) | ((None, Some(_)), _) => {
            return Err(Error::Config("give both masses.M_L and masses.M_F".into()))
        }
        (_, (Some(_), None)) | (_, (None, Some(_))) => {
            return Err(Error::Config("give both counts.N_L and counts.N_F".into()))
        }
        _ => {
            return Err(Error::Config(
                "give either masses or counts, not both".into(),
            ))
        }
    };
    if matches!(mode, Mode::Macro | Mode::Micro | Mode::Basin) && population.is_none() {
        return Err(Error::Config(format!(
            "mode {} needs masses.M_L/M_F or counts.N_L/N_F",
            mode.as_str()
        )));
    }

    let dt = positive("time.dt", e.number_or("time.dt", 0.01)?)?;
    let horizon = positive("time.T", e.number_or("time.T", 100.0)?)?;
    let stride = e.integer("time.output_stride")?.unwrap_or(10) as usize;
    if stride == 0 {
        return Err(e.bad("time.output_stride", "must be ≥ 1"));
    }
    let snapshots = e.list("time.snapshots")?;

    let initial_leaders = match e.word("initial.leaders", "uniform") {
        "uniform" => LeaderStart::Uniform,
        "reference" => LeaderStart::Reference,
        _ => return Err(e.bad("initial.leaders", "expected uniform or reference")),
    };
    let initial_followers = match e.word("initial.followers", "uniform") {
        "uniform" => FollowerStart::Uniform,
        "target" => FollowerStart::Target,
        _ => return Err(e.bad("initial.followers", "expected uniform or target")),
    };
    let synthesis = match e.word("feasibility.synthesis", "strict") {
        "strict" => Synthesis::Strict,
        "fallback" => Synthesis::Fallback,
        _ => return Err(e.bad("feasibility.synthesis", "expected strict or fallback")),
    };
    let defaults = FeasibilityOptions::default();
    let feasibility = FeasibilityOptions {
        eps_h: positive(
            "feasibility.eps_H",
            e.number_or("feasibility.eps_H", defaults.eps_h)?,
        )?,
        eps_g: positive(
            "feasibility.eps_G",
            e.number_or("feasibility.eps_G", defaults.eps_g)?,
        )?,
    };
    let percent_base = PercentBase::parse(e.word("metrics.percent_base", "initial-error"))
        .ok_or_else(|| {
            e.bad(
                "metrics.percent_base",
                "expected initial-error or reference-norm",
            )
        })?;

    let seed = e.integer("seed")?.unwrap_or(0);
    let micro_seeds = match e.raw("micro.seeds") {
        None => vec![],
        Some(v) if v.trim().is_empty() => vec![],
        Some(v) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| e.bad("micro.seeds", "expected integers"))
            })
            .collect::<Result<_>>()?,
    };
    let micro_runs = e.integer("micro.runs")?.unwrap_or(20) as usize;
    let micro_agents = e
        .integer("micro.agents")?
        .unwrap_or(if dim == 1 { 500 } else { 1000 }) as usize;
    if micro_runs == 0 || micro_agents < 2 {
        return Err(Error::Config(
            "micro.runs must be ≥ 1 and micro.agents ≥ 2".into(),
        ));
    }
    let kde_concentration = e
        .number("micro.kde_concentration")?
        .map(|c| positive("micro.kde_concentration", c))
        .transpose()?;

    let kappa_range = e.range_or(
        "sweep.kappa_range",
        Range {
            start: 0.1,
            stop: 3.0,
            count: 30,
        },
    )?;
    let d_range = e.range_or(
        "sweep.D_range",
        Range {
            start: 0.01,
            stop: 0.2,
            count: 20,
        },
    )?;
    let ml_range = e.range_or(
        "sweep.ML_range",
        Range {
            start: 0.05,
            stop: 0.95,
            count: 19,
        },
    )?;
    if ml_range.values().iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
        return Err(e.bad("sweep.ML_range", "leader masses must lie in (0, 1)"));
    }
    if kappa_range.values().iter().any(|v| *v <= 0.0) || d_range.values().iter().any(|v| *v <= 0.0)
    {
        return Err(Error::Config(
            "sweep ranges for kappa and D must be positive".into(),
        ));
    }
    let refine = e.integer("sweep.refine")?.unwrap_or(4) as usize;
    let sweep_micro = match e.word("sweep.micro", "false") {
        "true" => true,
        "false" => false,
        _ => return Err(e.bad("sweep.micro", "expected true or false")),
    };
    let basin_eta0 = e.range_or(
        "basin.eta0_range",
        Range {
            start: 0.0,
            stop: 2.0,
            count: 21,
        },
    )?;
    let basin_dt = positive("basin.dt", e.number_or("basin.dt", 1e-3)?)?;
    let output = PathBuf::from(e.word("output", "runs"));

    Ok(ScenarioConfig {
        mode,
        dim,
        n,
        target,
        fl,
        ff,
        d,
        k,
        population,
        dt,
        horizon,
        stride,
        snapshots,
        initial_leaders,
        initial_followers,
        synthesis,
        feasibility,
        percent_base,
        seed,
        micro_seeds,
        micro_runs,
        micro_agents,
        kde_concentration,
        kappa_range,
        d_range,
        ml_range,
        refine,
        sweep_micro,
        basin_eta0,
        basin_dt,
        output,
    })
}

impl ScenarioConfig {
    /// Full resolved configuration; `parse_config` of the result yields an
    /// identical value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("mode", self.mode.as_str().into());
        put("domain.dim", self.dim.to_string());
        put("domain.n", self.n.to_string());
        match &self.target {
            TargetSpec::VonMises { kappa, mu } => {
                put("target.family", "von-mises".into());
                put("target.kappa", fmt_f64(*kappa));
                put("target.mu", fmt_f64(*mu));
            }
            TargetSpec::Bimodal { kappa, mu, nu } => {
                put("target.family", "bimodal-von-mises".into());
                put("target.kappa1", fmt_f64(kappa[0]));
                put("target.kappa2", fmt_f64(kappa[1]));
                put("target.mu", fmt_f64(*mu));
                put("target.nu", fmt_f64(*nu));
            }
            TargetSpec::Uniform => put("target.family", "uniform".into()),
            TargetSpec::File(p) => {
                put("target.family", "file".into());
                put("target.file", p.display().to_string());
            }
        }
        if let KernelKind::Repulsive { ell } = self.fl.kind {
            put("kernels.fl.ell", fmt_f64(ell));
        }
        match self.ff.kind {
            KernelKind::Zero => put("kernels.ff.kind", "none".into()),
            KernelKind::Repulsive { ell } => {
                put("kernels.ff.kind", "repulsive".into());
                put("kernels.ff.ell", fmt_f64(ell));
            }
            KernelKind::Morse { ell_r, ell_a, zeta } => {
                put("kernels.ff.kind", "morse".into());
                put("kernels.ff.ell_r", fmt_f64(ell_r));
                put("kernels.ff.ell_a", fmt_f64(ell_a));
                put("kernels.ff.zeta", fmt_f64(zeta));
            }
        }
        put("physics.D", fmt_f64(self.d));
        put("control.K", fmt_f64(self.k));
        match self.population {
            Some(Population::Masses { m_l, m_f }) => {
                put("masses.M_L", fmt_f64(m_l));
                put("masses.M_F", fmt_f64(m_f));
            }
            Some(Population::Counts { n_l, n_f }) => {
                put("counts.N_L", n_l.to_string());
                put("counts.N_F", n_f.to_string());
            }
            None => {}
        }
        put("time.dt", fmt_f64(self.dt));
        put("time.T", fmt_f64(self.horizon));
        put("time.output_stride", self.stride.to_string());
        put(
            "time.snapshots",
            self.snapshots
                .iter()
                .map(|v| fmt_f64(*v))
                .collect::<Vec<_>>()
                .join(","),
        );
        put(
            "initial.leaders",
            match self.initial_leaders {
                LeaderStart::Uniform => "uniform",
                LeaderStart::Reference => "reference",
            }
            .into(),
        );
        put(
            "initial.followers",
            match self.initial_followers {
                FollowerStart::Uniform => "uniform",
                FollowerStart::Target => "target",
            }
            .into(),
        );
        put(
            "feasibility.synthesis",
            match self.synthesis {
                Synthesis::Strict => "strict",
                Synthesis::Fallback => "fallback",
            }
            .into(),
        );
        put("feasibility.eps_H", fmt_f64(self.feasibility.eps_h));
        put("feasibility.eps_G", fmt_f64(self.feasibility.eps_g));
        put("metrics.percent_base", self.percent_base.as_str().into());
        put("seed", self.seed.to_string());
        put(
            "micro.seeds",
            self.micro_seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        put("micro.runs", self.micro_runs.to_string());
        put("micro.agents", self.micro_agents.to_string());
        if let Some(c) = self.kde_concentration {
            put("micro.kde_concentration", fmt_f64(c));
        }
        put("sweep.kappa_range", fmt_range(&self.kappa_range));
        put("sweep.D_range", fmt_range(&self.d_range));
        put("sweep.ML_range", fmt_range(&self.ml_range));
        put("sweep.refine", self.refine.to_string());
        put("sweep.micro", self.sweep_micro.to_string());
        put("basin.eta0_range", fmt_range(&self.basin_eta0));
        put("basin.dt", fmt_f64(self.basin_dt));
        put("output", self.output.display().to_string());
        s
    }

    /// Seeds of the micro ensemble: the explicit list, or `micro_runs`
    /// seeds derived from the master seed.
    pub fn ensemble_seeds(&self) -> Vec<u64> {
        if self.micro_seeds.is_empty() {
            (0..self.micro_runs as u64)
                .map(|i| derive_seed(self.seed, 0, i))
                .collect()
        } else {
            self.micro_seeds.clone()
        }
    }
}

/// Seed for sweep point `point`, replicate `replicate`; depends only on the
/// indices, never on scheduling (splitmix64 finalizer over the mixed words).
pub fn derive_seed(master: u64, point: u64, replicate: u64) -> u64 {
    let mut z = master
        .wrapping_add(point.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(replicate.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
mode = macro
# regulation trial
target.kappa = 1
kernels.ff.kind = morse
kernels.ff.ell_r = pi/2
kernels.ff.ell_a = pi
kernels.ff.zeta = 1
physics.D = 0.02
masses.M_L = 0.25
masses.M_F = 0.75
time.T = 150
";

    #[test]
    fn numbers() {
        assert_eq!(parse_number("pi"), Some(PI));
        assert_eq!(parse_number("pi/15"), Some(PI / 15.0));
        assert_eq!(parse_number("2*pi"), Some(2.0 * PI));
        assert_eq!(parse_number("3*pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_number("1/4"), Some(0.25));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("tau"), None);
        assert_eq!(parse_number("2*e"), None);
    }

    #[test]
    fn minimal_macro_config() {
        let c = parse_config(MINIMAL, None).unwrap();
        assert_eq!(c.mode, Mode::Macro);
        assert_eq!((c.dim, c.n), (1, 500));
        assert_eq!(c.ff, KernelSpec::morse(PI / 2.0, PI, 1.0).unwrap());
        assert_eq!(c.fl, KernelSpec::repulsive(PI).unwrap());
        assert_eq!((c.d, c.k, c.dt, c.horizon), (0.02, 1.0, 0.01, 150.0));
        assert_eq!(
            c.population,
            Some(Population::Masses {
                m_l: 0.25,
                m_f: 0.75
            })
        );
        let text = c.to_text();
        assert!(text.contains("control.K = 1.0"));
        assert!(text.contains("time.dt = 0.01"));
    }

    #[test]
    fn round_trip() {
        let c = parse_config(MINIMAL, None).unwrap();
        let again = parse_config(&c.to_text(), None).unwrap();
        assert_eq!(c, again);
        let two_d = "mode = micro\ndomain.dim = 2\nphysics.D = 0.01\ncounts.N_L = 340\ncounts.N_F = 660\nmicro.seeds = 3,4\nmicro.kde_concentration = 12";
        let c = parse_config(two_d, None).unwrap();
        assert_eq!(parse_config(&c.to_text(), None).unwrap(), c);
    }

    #[test]
    fn mass_sum_is_enforced() {
        let text = MINIMAL
            .replace("masses.M_F = 0.75", "masses.M_F = 0.6")
            .replace("masses.M_L = 0.25", "masses.M_L = 0.5");
        let err = parse_config(&text, None).unwrap_err().to_string();
        assert!(err.contains("sum to 1"), "{err}");
    }

    #[test]
    fn rejections() {
        let err = parse_config("mode = macro\nphysics.D = 1\nfoo.bar = 1\nbaz = 2", None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("foo.bar") && err.contains("baz"), "{err}");
        assert!(
            parse_config("mode = macro\nmasses.M_L = 0.5\nmasses.M_F = 0.5", None)
                .unwrap_err()
                .to_string()
                .contains("physics.D")
        );
        assert!(parse_config(MINIMAL, Some(Mode::Micro)).is_err());
        assert!(parse_config("physics.D = 1", None).is_err());
        assert!(parse_config("mode = macro\nphysics.D = 1", None).is_err());
        assert!(parse_config(
            "mode = basin\nphysics.D = 0.1\nmasses.M_L=0.5\nmasses.M_F=0.5\ndomain.n = 7",
            None
        )
        .is_err());
        assert!(parse_config(
            "mode = sweep-ml\nphysics.D = 0.1\nsweep.ML_range = 0:1:5",
            None
        )
        .is_err());
        assert!(parse_config("mode = macro\nphysics.D = 0.1\nmasses.M_L=0.5\nmasses.M_F=0.5\ntarget.family = file\ntarget.file = /nonexistent/x.csv", None).is_err());
    }

    #[test]
    fn cli_mode_fills_in() {
        let c = parse_config("physics.D = 0.04", Some(Mode::FeasibilityMap)).unwrap();
        assert_eq!(c.mode, Mode::FeasibilityMap);
        assert_eq!(c.population, None);
    }

    #[test]
    fn ranges() {
        let r = parse_range("0.1:0.9:5").unwrap();
        let v = r.values();
        assert_eq!(v.len(), 5);
        assert!((v[4] - 0.9).abs() < 1e-15 && (v[1] - 0.3).abs() < 1e-15);
        assert_eq!(parse_range("1:2:1").unwrap().values(), vec![1.0]);
        assert!(parse_range("1:2:0").is_none());
    }

    #[test]
    fn derived_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, i, 0)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_eq!(derive_seed(7, 3, 2), derive_seed(7, 3, 2));
        assert_ne!(derive_seed(7, 3, 2), derive_seed(7, 2, 3));
    }
}
