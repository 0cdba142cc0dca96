//! Agent-based counterpart of the density model: leaders move with the
//! collocated control field, followers follow the pairwise interactions plus
//! Brownian noise (Euler–Maruyama).
//!
//! Positions are stored as `[f64; 2]`; in 1D only the first coordinate is
//! used and the second stays 0.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{interpolate_component, wrap, wrap_displacement, GridFunction, PeriodicMesh};
use crate::kernels::{KernelSpec, PeriodicKernel2d};
use crate::macro_sim::{control_field, Vacuum};
use crate::metrics::{fill_percentages, kl_divergence, l2_error, DiagnosticSample, PercentBase};
use crate::targets::bessel_i0_scaled;

/// Resolution of the tabulated far-field image sum used by 2D agents.
pub const KERNEL_TABLE_SIZE: usize = 128;

/// Below this many agents the 1D drift is summed pair by pair.
const DIRECT_THRESHOLD: usize = 64;

/// `2π/ℓ` beyond which the sorted 1D sums could overflow.
const SORTED_MAX_RATE: f64 = 600.0;

/// An interaction kernel that can be evaluated at arbitrary displacements.
#[derive(Debug, Clone)]
pub enum PointKernel {
    Line(KernelSpec),
    Plane(PeriodicKernel2d),
}

impl PointKernel {
    pub fn new(spec: &KernelSpec, dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(PointKernel::Line(*spec)),
            2 => Ok(PointKernel::Plane(PeriodicKernel2d::new(
                *spec,
                KERNEL_TABLE_SIZE,
            )?)),
            _ => Err(Error::InvalidMesh(format!("unsupported dimension {dim}"))),
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        match self {
            PointKernel::Line(s) => s,
            PointKernel::Plane(k) => k.spec(),
        }
    }

    /// Kernel at the wrapped displacement `d`.
    #[inline]
    pub fn eval(&self, d: [f64; 2]) -> [f64; 2] {
        match self {
            PointKernel::Line(s) => [s.eval_1d(d[0]), 0.0],
            PointKernel::Plane(k) => k.eval(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub dim: usize,
    pub leaders: Vec<[f64; 2]>,
    pub followers: Vec<[f64; 2]>,
    pub t: f64,
    pub step_count: usize,
    pub seed: u64,
    /// One noise stream per follower.
    rngs: Vec<ChaCha8Rng>,
}

fn follower_rngs(seed: u64, n: usize) -> Vec<ChaCha8Rng> {
    (0..n)
        .map(|k| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k as u64);
            r
        })
        .collect()
}

/// `n` points spread evenly: midpoints of equal cells in 1D, and in 2D a
/// near-square arrangement of rows, each row evenly filled.
pub fn equally_spaced(n: usize, dim: usize) -> Vec<[f64; 2]> {
    let cell = |i: usize, m: usize| -PI + (i as f64 + 0.5) * TAU / m as f64;
    if dim == 1 {
        return (0..n).map(|i| [cell(i, n), 0.0]).collect();
    }
    let rows = ((n as f64).sqrt().round() as usize).clamp(1, n.max(1));
    let mut out = Vec::with_capacity(n);
    for r in 0..rows {
        let cols = n / rows + usize::from(r < n % rows);
        for c in 0..cols {
            out.push([cell(r, rows), cell(c, cols)]);
        }
    }
    out
}

impl AgentState {
    pub fn new(
        dim: usize,
        leaders: Vec<[f64; 2]>,
        followers: Vec<[f64; 2]>,
        seed: u64,
    ) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidMesh(format!("unsupported dimension {dim}")));
        }
        let clean = |p: [f64; 2]| {
            if dim == 1 {
                [wrap(p[0]), 0.0]
            } else {
                [wrap(p[0]), wrap(p[1])]
            }
        };
        let rngs = follower_rngs(seed, followers.len());
        Ok(AgentState {
            dim,
            leaders: leaders.into_iter().map(clean).collect(),
            followers: followers.into_iter().map(clean).collect(),
            t: 0.0,
            step_count: 0,
            seed,
            rngs,
        })
    }

    pub fn equally_spaced(
        dim: usize,
        n_leaders: usize,
        n_followers: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::new(
            dim,
            equally_spaced(n_leaders, dim),
            equally_spaced(n_followers, dim),
            seed,
        )
    }

    pub fn population(&self) -> usize {
        self.leaders.len() + self.followers.len()
    }

    /// Snapshot CSV: `species,agent_id,x1[,x2]`.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "# t={:.16e}", self.t)?;
        let header = if self.dim == 1 {
            "species,agent_id,x1"
        } else {
            "species,agent_id,x1,x2"
        };
        writeln!(out, "{header}")?;
        for (species, pts) in [("leader", &self.leaders), ("follower", &self.followers)] {
            for (i, p) in pts.iter().enumerate() {
                if self.dim == 1 {
                    writeln!(out, "{species},{i},{:.16e}", p[0])?;
                } else {
                    writeln!(out, "{species},{i},{:.16e},{:.16e}", p[0], p[1])?;
                }
            }
        }
        Ok(())
    }
}

/// Pairwise reference: `(1/N) Σ_j f^FL(x_k − y_j) + (1/N) Σ_m f^FF(x_k − x_m)`.
/// Follower–follower pairs are visited once, so the result is exactly
/// antisymmetric in each pair.
pub fn follower_drift_direct(
    state: &AgentState,
    fl: &PointKernel,
    ff: &PointKernel,
) -> Vec<[f64; 2]> {
    let n = state.population().max(1) as f64;
    let mut out: Vec<[f64; 2]> = if fl.spec().is_zero() {
        vec![[0.0; 2]; state.followers.len()]
    } else {
        state
            .followers
            .par_iter()
            .map(|&x| {
                let mut acc = [0.0; 2];
                for &y in &state.leaders {
                    let v = fl.eval(wrap_displacement(x, y));
                    acc[0] += v[0];
                    acc[1] += v[1];
                }
                acc
            })
            .collect()
    };
    if !ff.spec().is_zero() {
        let f = &state.followers;
        for k in 0..f.len() {
            for m in 0..k {
                let v = ff.eval(wrap_displacement(f[k], f[m]));
                out[k][0] += v[0];
                out[k][1] += v[1];
                out[m][0] -= v[0];
                out[m][1] -= v[1];
            }
        }
    }
    for o in &mut out {
        o[0] /= n;
        o[1] /= n;
    }
    out
}

/// `Σ_j profile_ℓ(x_k − y_j)` for every target, in `O((N + M) log M)`.
///
/// On `(0, 2π)` the periodic profile is `(e^{−δ/ℓ} − q e^{δ/ℓ})/(1 − q)`
/// with `δ = (x − y) mod 2π`, so after sorting the sources both exponentials
/// split into prefix and suffix sums. Coincident points contribute 0.
pub fn profile_sums_sorted(targets: &[f64], sources: &[f64], ell: f64) -> Vec<f64> {
    let a = 1.0 / ell;
    let q = (-TAU * a).exp();
    let mut theta: Vec<f64> = sources.iter().map(|&y| wrap(y) + PI).collect();
    theta.sort_unstable_by(f64::total_cmp);
    let m = theta.len();
    // prefix (j < i) and suffix (j ≥ i) sums of e^{a(θ−2π)} and e^{−aθ}
    let ep: Vec<f64> = theta.iter().map(|&t| (a * (t - TAU)).exp()).collect();
    let em: Vec<f64> = theta.iter().map(|&t| (-a * t).exp()).collect();
    let mut lp = vec![0.0; m + 1];
    let mut lm = vec![0.0; m + 1];
    for i in 0..m {
        lp[i + 1] = lp[i] + ep[i];
        lm[i + 1] = lm[i] + em[i];
    }
    let mut sp = vec![0.0; m + 1];
    let mut sm = vec![0.0; m + 1];
    for i in (0..m).rev() {
        sp[i] = sp[i + 1] + ep[i];
        sm[i] = sm[i + 1] + em[i];
    }
    targets
        .iter()
        .map(|&x| {
            let t = wrap(x) + PI;
            let lo = theta.partition_point(|&s| s < t);
            let hi = theta.partition_point(|&s| s <= t);
            let (up, down) = ((a * (t - TAU)).exp(), (-a * t).exp());
            let decay = lp[lo] / up + down * sp[hi];
            let grow = up * lm[lo] + sm[hi] / down;
            (decay - grow) / (1.0 - q)
        })
        .collect()
}

fn sorted_applies(state: &AgentState, fl: &PointKernel, ff: &PointKernel) -> bool {
    state.dim == 1
        && state.population() > DIRECT_THRESHOLD
        && fl
            .spec()
            .terms()
            .iter()
            .chain(ff.spec().terms().iter())
            .all(|&(_, l)| TAU / l <= SORTED_MAX_RATE)
}

/// Follower drift; 1D populations above a small size use sorted exponential
/// sums, everything else the pairwise loop.
pub fn follower_drift(state: &AgentState, fl: &PointKernel, ff: &PointKernel) -> Vec<[f64; 2]> {
    if !sorted_applies(state, fl, ff) {
        return follower_drift_direct(state, fl, ff);
    }
    let n = state.population() as f64;
    let xs: Vec<f64> = state.followers.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = state.leaders.iter().map(|p| p[0]).collect();
    let mut acc = vec![0.0; xs.len()];
    for (sources, kernel) in [(&ys, fl), (&xs, ff)] {
        for &(w, l) in kernel.spec().terms().iter() {
            for (a, s) in acc.iter_mut().zip(profile_sums_sorted(&xs, sources, l)) {
                *a += w * s;
            }
        }
    }
    acc.into_iter().map(|v| [v / n, 0.0]).collect()
}

/// Control velocity at each leader, by interpolation of the field.
pub fn collocate(u: &GridFunction, leaders: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let dim = u.mesh().dim();
    leaders
        .iter()
        .map(|p| {
            let mut out = [0.0; 2];
            for (c, o) in out.iter_mut().enumerate().take(u.components().min(dim)) {
                *o = interpolate_component(u, c, &p[..dim]);
            }
            out
        })
        .collect()
}

/// Micro-to-macro bridge settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeConfig {
    /// von Mises concentration of each agent's kernel.
    pub concentration: f64,
    pub mesh: PeriodicMesh,
}

impl BridgeConfig {
    /// Concentration 50 in 1D and 10 in 2D.
    pub fn for_mesh(mesh: PeriodicMesh) -> Self {
        BridgeConfig {
            concentration: if mesh.dim() == 1 { 50.0 } else { 10.0 },
            mesh,
        }
    }
}

/// `I_k(κ)/I₀(κ)` for `k = 0, 1, …` until the ratio drops below `1e−17`,
/// from the backward continued-fraction recurrence
/// `I_k/I_{k−1} = 1/(2k/κ + I_{k+1}/I_k)`.
pub fn bessel_ratios(kappa: f64) -> Vec<f64> {
    let start = 2 * kappa.ceil() as usize + 100;
    let mut r = vec![0.0; start + 2];
    for k in (1..=start).rev() {
        r[k] = 1.0 / (2.0 * k as f64 / kappa + r[k + 1]);
    }
    let mut out = vec![1.0];
    let mut a = 1.0;
    for rk in r.iter().take(start + 1).skip(1) {
        a *= rk;
        if a < 1e-17 {
            break;
        }
        out.push(a);
    }
    out
}

thread_local! {
    static INVERSE_FFT: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Von Mises kernel density estimate scaled to `mass`. 1D uses the Fourier
/// series of the kernel (exact up to truncation at `1e−17`); 2D uses the
/// separable product kernel evaluated at the nodes.
pub fn kde(positions: &[[f64; 2]], mass: f64, bridge: &BridgeConfig) -> Result<GridFunction> {
    if positions.is_empty() {
        return Err(Error::EmptyPositions);
    }
    let kappa = bridge.concentration;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param(
            "kde concentration",
            format!("must be > 0, got {kappa}"),
        ));
    }
    let mesh = bridge.mesh;
    let n = mesh.points_per_axis();
    let w = mass / positions.len() as f64;
    let nodes = mesh.axis_coordinates();
    match mesh.dim() {
        1 => {
            let ratios = bessel_ratios(kappa);
            let kmax = ratios.len() - 1;
            let mut c = vec![(0.0, 0.0); kmax + 1];
            for p in positions {
                let (s, co) = (-p[0]).sin_cos();
                let (mut re, mut im) = (1.0, 0.0);
                for ck in c.iter_mut().skip(1) {
                    (re, im) = (re * co - im * s, re * s + im * co);
                    ck.0 += re;
                    ck.1 += im;
                }
            }
            // nodes sit at x_j = (j − n/2)h, so e^{ikx_j} = (−1)^k e^{2πikj/n}
            // and the series is one inverse DFT
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (k, (ck, rk)) in c.iter().zip(&ratios).enumerate().skip(1) {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                buf[k % n] += Complex64::new(ck.0, ck.1) * (sign * rk);
            }
            INVERSE_FFT.with(|planner| planner.borrow_mut().plan_fft_inverse(n).process(&mut buf));
            let count = positions.len() as f64;
            let values = buf.iter().map(|z| w * (count + 2.0 * z.re) / TAU).collect();
            GridFunction::scalar(mesh, values)
        }
        _ => {
            let norm = 1.0 / (TAU * bessel_i0_scaled(kappa));
            let trig: Vec<(f64, f64)> = nodes.iter().map(|x| x.sin_cos()).collect();
            let profile = |c: f64| -> Vec<f64> {
                let (s0, c0) = c.sin_cos();
                trig.iter()
                    .map(|&(s, co)| norm * (kappa * (co * c0 + s * s0 - 1.0)).exp())
                    .collect()
            };
            let mut out = vec![0.0; n * n];
            for p in positions {
                let a = profile(p[0]);
                let b = profile(p[1]);
                for (i, &ai) in a.iter().enumerate() {
                    let s = w * ai;
                    for (o, &bj) in out[i * n..(i + 1) * n].iter_mut().zip(&b) {
                        *o += s * bj;
                    }
                }
            }
            GridFunction::scalar(mesh, out)
        }
    }
}

/// One Euler–Maruyama step for the followers and one Euler step for the
/// leaders with velocities `u_leaders`.
pub fn step_euler_maruyama(
    state: &mut AgentState,
    fl: &PointKernel,
    ff: &PointKernel,
    u_leaders: &[[f64; 2]],
    d: f64,
    dt: f64,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if u_leaders.len() != state.leaders.len() {
        return Err(Error::Shape(format!(
            "{} leader velocities for {} leaders",
            u_leaders.len(),
            state.leaders.len()
        )));
    }
    let drift = follower_drift(state, fl, ff);
    let sigma = (2.0 * d * dt).sqrt();
    let dim = state.dim;
    for ((x, v), rng) in state.followers.iter_mut().zip(&drift).zip(&mut state.rngs) {
        for c in 0..dim {
            let xi: f64 = if sigma > 0.0 {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            x[c] = wrap(x[c] + v[c] * dt + sigma * xi);
        }
    }
    for (x, u) in state.leaders.iter_mut().zip(u_leaders) {
        for c in 0..dim {
            x[c] = wrap(x[c] + u[c] * dt);
        }
    }
    state.step_count += 1;
    state.t = state.step_count as f64 * dt;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroRunConfig {
    pub dt: f64,
    pub horizon: f64,
    pub k: f64,
    pub d: f64,
    pub fl: KernelSpec,
    pub ff: KernelSpec,
    /// Follower target scaled to `Nᶠ/N`.
    pub rho_f_ref: GridFunction,
    /// Leader reference integrating to `Nᴸ/N`.
    pub rho_l_ref: GridFunction,
    pub n_leaders: usize,
    pub n_followers: usize,
    pub seed: u64,
    pub stride: usize,
    pub bridge: BridgeConfig,
    pub snapshot_times: Vec<f64>,
    pub percent_base: PercentBase,
}

impl MicroRunConfig {
    pub fn mesh(&self) -> &PeriodicMesh {
        self.rho_f_ref.mesh()
    }

    pub fn leader_mass(&self) -> f64 {
        self.n_leaders as f64 / (self.n_leaders + self.n_followers) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let mesh = *self.mesh();
        self.rho_l_ref.mesh().ensure_same(&mesh)?;
        self.bridge.mesh.ensure_same(&mesh)?;
        if self.n_leaders == 0 || self.n_followers == 0 {
            return Err(Error::param(
                "N_L/N_F",
                "need at least one leader and one follower",
            ));
        }
        for (name, v) in [("dt", self.dt), ("T", self.horizon), ("K", self.k)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::param("D", format!("must be ≥ 0, got {}", self.d)));
        }
        if self.stride == 0 {
            return Err(Error::param("stride", "must be ≥ 1"));
        }
        let ml = crate::grid::integral(&self.rho_l_ref);
        if (ml - self.leader_mass()).abs() > 1e-9 {
            return Err(Error::param(
                "rho_L_ref",
                format!(
                    "integrates to {ml}, expected N_L/N = {}",
                    self.leader_mass()
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroRun {
    pub samples: Vec<DiagnosticSample>,
    pub snapshots: Vec<AgentState>,
    pub final_state: AgentState,
}

fn micro_diagnostics(state: &AgentState, cfg: &MicroRunConfig) -> Result<DiagnosticSample> {
    let n = state.population() as f64;
    let (ml, mf) = (
        state.leaders.len() as f64 / n,
        state.followers.len() as f64 / n,
    );
    let rl = kde(&state.leaders, ml, &cfg.bridge)?;
    let rf = kde(&state.followers, mf, &cfg.bridge)?;
    let kl = |p: &GridFunction, q: &GridFunction| kl_divergence(p, q).unwrap_or(f64::NAN);
    Ok(DiagnosticSample {
        t: state.t,
        err_l: l2_error(&rl, &cfg.rho_l_ref)?,
        err_f: l2_error(&rf, &cfg.rho_f_ref)?,
        kl_l: kl(&rl, &cfg.rho_l_ref),
        kl_f: kl(&rf, &cfg.rho_f_ref),
        mass_l: ml,
        mass_f: mf,
        pct_l: f64::NAN,
        pct_f: f64::NAN,
    })
}

/// Closed loop: leader KDE → control field → collocation → step.
pub fn run_micro(cfg: &MicroRunConfig) -> Result<MicroRun> {
    cfg.validate()?;
    let dim = cfg.mesh().dim();
    let fl = PointKernel::new(&cfg.fl, dim)?;
    let ff = PointKernel::new(&cfg.ff, dim)?;
    let mut state = AgentState::equally_spaced(dim, cfg.n_leaders, cfg.n_followers, cfg.seed)?;
    let ml = cfg.leader_mass();
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let mut pending = cfg.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let mut snapshots = Vec::new();
    let half_dt = 0.5 * cfg.dt;
    let mut take = |s: &AgentState, snaps: &mut Vec<AgentState>| {
        while pending.last().is_some_and(|&t| t <= s.t + half_dt) {
            pending.pop();
            snaps.push(s.clone());
        }
    };
    take(&state, &mut snapshots);
    let mut samples = vec![micro_diagnostics(&state, cfg)?];
    for n in 1..=steps {
        let rho_l = kde(&state.leaders, ml, &cfg.bridge)?;
        let u = control_field(&rho_l, &cfg.rho_l_ref, cfg.k, Vacuum::Clamp)?;
        let ul = collocate(&u, &state.leaders);
        step_euler_maruyama(&mut state, &fl, &ff, &ul, cfg.d, cfg.dt)?;
        if n % cfg.stride == 0 || n == steps {
            samples.push(micro_diagnostics(&state, cfg)?);
        }
        take(&state, &mut snapshots);
    }
    let norms = (cfg.rho_l_ref.l2_norm(), cfg.rho_f_ref.l2_norm());
    fill_percentages(&mut samples, cfg.percent_base, norms);
    Ok(MicroRun {
        samples,
        snapshots,
        final_state: state,
    })
}
