//! Config-driven experiment driver: build a heavy-traffic ladder, run seeded
//! replications in parallel, aggregate the convergence diagnostics, and emit
//! CSV/JSON/SVG artifacts plus a manifest.
//!
//! All computation happens before any file is written, replication results
//! are collected in index order, and every random stream is derived from
//! `(seed, r, replication)` alone, so reruns with the same seed produce
//! byte-identical artifacts regardless of the thread count.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    bl_to_packed_limit, concentration_profile, count_max_per_rep, fclt_variance_check,
    queue_vs_workload, workload_law_check, workload_samples, ConvergenceReport, SummaryStats,
};
use crate::dist::{InterarrivalDistribution, ServiceDistribution, SupportSup};
use crate::engine::{check_bounds, simulate, BoundReport, Policy, SimOptions};
use crate::ht::{validate as validate_ladder, AssumptionReport, HeavyTrafficSpec, ModelAtR};
use crate::plot::line_plot_svg;
use crate::primitives::{generate, SeedPlan};
use crate::rbm::{simulate_rbm, RbmParams};
use crate::scaling::{scale_load, scale_state_with_levels, ScaledLoadPath, ScaledPath};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitKind {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for EmitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EmitKind::Csv),
            "json" => Ok(EmitKind::Json),
            "svg" => Ok(EmitKind::Svg),
            other => Err(Error::Config(format!(
                "unknown emit kind `{other}` (expected csv, json, or svg)"
            ))),
        }
    }
}

fn default_horizon() -> f64 {
    1.0
}
fn default_grid_points() -> usize {
    200
}
fn default_t0() -> f64 {
    1.0
}
fn default_emit() -> Vec<EmitKind> {
    vec![EmitKind::Csv, EmitKind::Json]
}

/// Top-level experiment configuration; a single JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub service: ServiceDistribution,
    /// Base interarrival shape; rescaled per rung to hit the traffic
    /// intensity, so only its coefficient of variation matters.
    pub interarrival: InterarrivalDistribution,
    pub gamma: f64,
    /// Target initial workload on diffusion scale.
    pub w0: f64,
    pub r_ladder: Vec<f64>,
    /// Replications per rung.
    pub replications: usize,
    /// Scaled-time horizon.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Truncation levels for state and load splits; each must be a
    /// continuity point of the service law.
    #[serde(default)]
    pub truncation_levels: Vec<f64>,
    /// Concentration band half-width around the support supremum.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Scaled time of the marginal-law checks.
    #[serde(default = "default_t0")]
    pub t0: f64,
    /// Extra policies to couple against SRPT for the pathwise bound report.
    #[serde(default)]
    pub compare_policies: Vec<Policy>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_emit")]
    pub emit: Vec<EmitKind>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        self.service.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.interarrival.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.replications < 1 {
            return err("replications must be at least 1".into());
        }
        if !(self.horizon > 0.0) {
            return err(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.grid_points < 2 {
            return err("grid needs at least 2 points".into());
        }
        if !(self.t0 > 0.0 && self.t0 <= self.horizon) {
            return err(format!(
                "t0 must lie in (0, horizon], got {} with horizon {}",
                self.t0, self.horizon
            ));
        }
        for &x in &self.truncation_levels {
            if !(x.is_finite() && x >= 0.0) {
                return err(format!("truncation level {x} must be nonnegative"));
            }
            if !self.service.is_continuity_point(x) {
                return err(format!(
                    "truncation level {x} coincides with an atom of the service distribution"
                ));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return err(format!("epsilon must be positive, got {eps}"));
            }
            let Some(x_star) = self.service.support_sup().finite() else {
                return err("epsilon requires a service law with bounded support".into());
            };
            for lvl in [x_star - eps, x_star + eps] {
                if lvl < 0.0 {
                    return err(format!("band level {lvl} is negative"));
                }
                if !self.service.is_continuity_point(lvl) {
                    return err(format!(
                        "band level {lvl} coincides with an atom of the service distribution"
                    ));
                }
            }
        }
        // Ladder feasibility (increasing r, gamma/r < 1).
        self.ht_spec().map_err(|e| Error::Config(e.to_string()))?.build().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn ht_spec(&self) -> Result<HeavyTrafficSpec> {
        HeavyTrafficSpec::new(
            self.service.clone(),
            self.interarrival.clone(),
            self.gamma,
            self.r_ladder.clone(),
            self.w0,
        )
    }

    /// Configured truncation levels plus the concentration band edges,
    /// sorted and deduplicated.
    pub fn effective_levels(&self) -> Vec<f64> {
        let mut levels = self.truncation_levels.clone();
        if let (Some(eps), Some(x_star)) = (self.epsilon, self.service.support_sup().finite()) {
            levels.push(x_star - eps);
            levels.push(x_star + eps);
        }
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }

    /// Uniform scaled-time grid, with `t0` inserted if it is not a grid
    /// point already.
    pub fn grid(&self) -> Vec<f64> {
        let m = self.grid_points;
        // The fraction is computed first so the endpoint is exactly the
        // horizon (the product form can overshoot by an ulp).
        let mut grid: Vec<f64> = (0..m)
            .map(|i| self.horizon * (i as f64 / (m - 1) as f64))
            .collect();
        if !grid.contains(&self.t0) {
            grid.push(self.t0);
            grid.sort_by(f64::total_cmp);
        }
        grid
    }
}

/// Everything produced per replication; measures are kept only at `t0` to
/// bound memory across large ladders.
struct RepOutcome {
    state: ScaledPath,
    load: ScaledLoadPath,
    bound: Option<BoundReport>,
}

/// Replication outcomes grouped by ladder rung.
type RungOutcomes = Vec<(f64, Vec<RepOutcome>)>;

/// Results of one experiment run, before and after artifact emission.
pub struct RunOutput {
    pub report: ConvergenceReport,
    pub assumptions: AssumptionReport,
    /// Paths of all written artifacts (empty when no output directory).
    pub files: Vec<PathBuf>,
}

fn run_replication(
    config: &ExperimentConfig,
    model: &ModelAtR,
    grid: &[f64],
    levels: &[f64],
    rep: u64,
) -> Result<RepOutcome> {
    let r = model.r;
    let seeds = SeedPlan::new(config.seed).replication(r, rep);
    let horizon = r * r * config.horizon;
    let streams = generate(
        &model.interarrival,
        &model.service,
        &model.initial_jobs,
        horizon,
        &seeds,
    )?;
    let sample_times: Vec<f64> = grid.iter().map(|&t| r * r * t).collect();
    let opts = SimOptions {
        sample_times: sample_times.clone(),
        levels: levels.to_vec(),
        record_events: false,
        record_measures: true,
    };
    let traj = simulate(Policy::Srpt, &streams, &opts)?;
    let mut state = scale_state_with_levels(&traj, r, grid, levels)?;
    let keep = state.index_at(config.t0)?;
    for (i, p) in state.points.iter_mut().enumerate() {
        if i != keep {
            p.measure = None;
        }
    }
    let load = scale_load(&streams, model, grid, levels)?;
    let bound = if config.compare_policies.is_empty() {
        None
    } else {
        let light = SimOptions {
            sample_times,
            levels: Vec::new(),
            record_events: false,
            record_measures: false,
        };
        let mut trajs = vec![simulate(Policy::Srpt, &streams, &light)?];
        for &p in &config.compare_policies {
            if p != Policy::Srpt {
                trajs.push(simulate(p, &streams, &light)?);
            }
        }
        Some(check_bounds(&trajs, model.service.support_sup())?)
    };
    Ok(RepOutcome { state, load, bound })
}

/// Run the full experiment: simulate the ladder, aggregate diagnostics, and
/// (when an output directory is configured) emit artifacts. On any failure
/// partially written artifacts are removed.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let spec = config.ht_spec()?;
    let models = spec.build()?;
    let limit = spec.limit_params();
    let assumptions = validate_ladder(&config.service, config.gamma, &models);
    let rbm_params = RbmParams::new(config.w0, config.gamma, limit.sigma2)?;
    let grid = config.grid();
    let levels = config.effective_levels();
    let x_star = config.service.support_sup();

    let compute = || -> Result<(ConvergenceReport, RungOutcomes)> {
        let mut report = ConvergenceReport::new();
        let mut per_rung: RungOutcomes = Vec::new();
        for model in &models {
            let outcomes: Vec<RepOutcome> = (0..config.replications as u64)
                .into_par_iter()
                .map(|rep| run_replication(config, model, &grid, &levels, rep))
                .collect::<Result<Vec<_>>>()?;
            let n = outcomes.len();
            let r = model.r;
            let states: Vec<ScaledPath> = outcomes.iter().map(|o| o.state.clone()).collect();

            match x_star {
                SupportSup::Finite(xs) => {
                    let dev = queue_vs_workload(&states, xs)?;
                    report.push_row("count_vs_workload_dev", r, n, dev.abs.mean, dev.abs.se);
                    report.push_row("count_vs_workload_rel", r, n, dev.rel.mean, dev.rel.se);
                    let bl = bl_to_packed_limit(&states, xs, config.t0)?;
                    report.push_row("bl_to_limit", r, n, bl.mean, bl.se);
                }
                SupportSup::Infinite => {
                    let cm = count_max_per_rep(&states)?;
                    report.push_row("count_max", r, n, cm.mean, cm.se);
                }
            }
            if let Some(eps) = config.epsilon {
                let c = concentration_profile(&states, &config.service, eps)?;
                report.push_row("mass_below_band", r, n, c.below_max.mean, c.below_max.se);
                report.push_row("mass_above_band", r, n, c.above_max.mean, c.above_max.se);
                report.push_row("band_work_gap", r, n, c.band_work_gap.mean, c.band_work_gap.se);
            }
            let w = SummaryStats::from_values(&workload_samples(&states, config.t0)?);
            report.push_row("workload_t0_mean", r, n, w.mean, w.se);
            if n >= 200 {
                let ks = workload_law_check(&states, &rbm_params, config.t0)?;
                report.push_row("workload_ks", r, n, ks.ks, ks.se);
            }
            if n >= 1000 {
                let loads: Vec<ScaledLoadPath> =
                    outcomes.iter().map(|o| o.load.clone()).collect();
                for row in
                    fclt_variance_check(&loads, &config.service, limit.alpha, limit.a, config.t0)?
                {
                    match row.ratio {
                        Some(ratio) => report.push_row(
                            &format!("var_ratio_{}", row.name),
                            r,
                            n,
                            ratio,
                            ratio * row.rel_se,
                        ),
                        None => report.push_row(
                            &format!("var_{}", row.name),
                            r,
                            n,
                            row.sample_variance,
                            0.0,
                        ),
                    }
                }
            }
            if !config.compare_policies.is_empty() {
                let gap = outcomes
                    .iter()
                    .filter_map(|o| o.bound.as_ref())
                    .map(|b| b.workload_max_gap)
                    .fold(0.0, f64::max);
                let excess = outcomes
                    .iter()
                    .filter_map(|o| o.bound.as_ref())
                    .map(|b| b.srpt_count_excess)
                    .max()
                    .unwrap_or(0);
                let slack = outcomes
                    .iter()
                    .filter_map(|o| o.bound.as_ref())
                    .map(|b| b.static_bound_excess)
                    .fold(0.0, f64::max);
                report.push_row("bounds_workload_gap", r, n, gap, 0.0);
                report.push_row("bounds_count_excess", r, n, excess as f64, 0.0);
                report.push_row("bounds_static_excess", r, n, slack, 0.0);
            }
            per_rung.push((r, outcomes));
        }
        // Trend verdicts across the ladder.
        if config.r_ladder.len() >= 2 {
            match x_star {
                SupportSup::Finite(_) => {
                    report.verdict_trend("count_vs_workload_dev");
                    report.verdict_trend("bl_to_limit");
                }
                SupportSup::Infinite => {
                    report.verdict_trend("count_max");
                }
            }
            if config.epsilon.is_some() {
                report.verdict_trend("mass_below_band");
            }
            if config.replications >= 200 {
                report.verdict_trend("workload_ks");
            }
        }
        report.sort_rows();
        Ok((report, per_rung))
    };

    let (report, per_rung) = match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(compute)?
        }
        None => compute()?,
    };

    let mut files = Vec::new();
    if let Some(dir) = &config.out_dir {
        if let Err(e) = emit_artifacts(config, &report, &assumptions, &per_rung, &rbm_params, &grid, &levels, dir, &mut files)
        {
            for f in &files {
                let _ = fs::remove_file(f);
            }
            return Err(e);
        }
    }
    Ok(RunOutput {
        report,
        assumptions,
        files,
    })
}

#[allow(clippy::too_many_arguments)]
fn emit_artifacts(
    config: &ExperimentConfig,
    report: &ConvergenceReport,
    assumptions: &AssumptionReport,
    per_rung: &RungOutcomes,
    rbm_params: &RbmParams,
    grid: &[f64],
    levels: &[f64],
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let emit = |kind: EmitKind| config.emit.contains(&kind);
    let write = |name: &str, bytes: &[u8], files: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        files.push(path);
        Ok(())
    };

    if emit(EmitKind::Json) {
        write(
            "report.json",
            serde_json::to_string_pretty(report)?.as_bytes(),
            files,
        )?;
        write(
            "assumptions.json",
            serde_json::to_string_pretty(assumptions)?.as_bytes(),
            files,
        )?;
    }
    if emit(EmitKind::Csv) {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write("report.csv", &buf, files)?;

        let mut buf = Vec::new();
        write!(buf, "r,replication,t,Zhat,What")?;
        for x in levels {
            write!(buf, ",Zhat_below_{x},What_below_{x}")?;
        }
        write!(buf, ",Ehat,Vhat")?;
        for x in levels {
            write!(buf, ",Vhat_below_{x},Vhat_above_{x}")?;
        }
        writeln!(buf)?;
        for (r, outcomes) in per_rung {
            for (rep, o) in outcomes.iter().enumerate() {
                for (i, p) in o.state.points.iter().enumerate() {
                    write!(buf, "{r},{rep},{},{},{}", p.time, p.count, p.workload)?;
                    for &(mass, work) in &p.level_stats {
                        write!(buf, ",{mass},{work}")?;
                    }
                    let lp = &o.load.points[i];
                    write!(buf, ",{},{}", lp.arrivals, lp.load)?;
                    for j in 0..levels.len() {
                        write!(buf, ",{},{}", o.load.truncated[i][j], o.load.tail[i][j])?;
                    }
                    writeln!(buf)?;
                }
            }
        }
        write("scaled_paths.csv", &buf, files)?;

        // Reference diffusion paths on the same grid.
        let mut buf = Vec::new();
        writeln!(buf, "replication,t,W")?;
        let n_paths = config.replications.min(100);
        for rep in 0..n_paths {
            let mut rng = SeedPlan::new(config.seed)
                .replication(0.0, rep as u64)
                .stream(crate::primitives::StreamLabel::Rbm);
            let path = simulate_rbm(rbm_params, grid, &mut rng)?;
            for (&t, &wv) in grid.iter().zip(path.iter()) {
                writeln!(buf, "{rep},{t},{wv}")?;
            }
        }
        write("rbm_reference.csv", &buf, files)?;
    }
    if emit(EmitKind::Svg) {
        let plot_dir = dir.join("plots");
        fs::create_dir_all(&plot_dir)?;
        let mut names: Vec<String> = report.rows.iter().map(|r| r.statistic.clone()).collect();
        names.dedup();
        for statistic in names {
            let pts: Vec<(f64, f64)> = report
                .series(&statistic)
                .iter()
                .map(|&(r, v, _)| (r, v))
                .collect();
            if pts.len() < 2 {
                continue;
            }
            let svg = line_plot_svg(&statistic, "r", &statistic, &pts, true);
            let path = plot_dir.join(format!("{statistic}.svg"));
            fs::write(&path, svg)?;
            files.push(path);
        }
    }
    // The manifest is always written and pins exactly what determines the
    // outputs: seed plus the config with execution-only knobs (threads,
    // output directory) cleared.
    #[derive(Serialize)]
    struct Manifest {
        tool: &'static str,
        version: &'static str,
        seed: u64,
        config: ExperimentConfig,
        artifacts: Vec<String>,
    }
    let mut pinned = config.clone();
    pinned.threads = None;
    pinned.out_dir = None;
    let manifest = Manifest {
        tool: "srptlab",
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config: pinned,
        artifacts: files
            .iter()
            .map(|p| {
                p.strip_prefix(dir)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .into_owned()
            })
            .collect(),
    };
    write(
        "manifest.json",
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
        files,
    )?;
    Ok(())
}

/// Assumption report for the configured ladder, without simulating.
pub fn validate_only(config: &ExperimentConfig) -> Result<AssumptionReport> {
    config.validate()?;
    let spec = config.ht_spec()?;
    let models = spec.build()?;
    Ok(validate_ladder(&config.service, config.gamma, &models))
}

/// The three built-in exact scenarios, printed as event logs with departure
/// times; used by the `demo` subcommand and pinned by tests.
pub fn demo() -> Result<String> {
    use crate::primitives::PrimitiveStreams;
    let mut out = String::new();
    type Scenario = (&'static str, Policy, Vec<f64>, Vec<(f64, f64)>);
    let scenarios: [Scenario; 3] = [
        (
            "srpt preemption: initial job of size 3, size-1 arrival at t=1",
            Policy::Srpt,
            vec![3.0],
            vec![(1.0, 1.0)],
        ),
        (
            "srpt tie: initial job of size 2, size-1 arrival at t=1 (residuals tie; incumbent keeps the server)",
            Policy::Srpt,
            vec![2.0],
            vec![(1.0, 1.0)],
        ),
        (
            "fifo on the first scenario (workload identical to srpt)",
            Policy::Fifo,
            vec![3.0],
            vec![(1.0, 1.0)],
        ),
    ];
    for (title, policy, initial, arrivals) in scenarios {
        let streams = PrimitiveStreams {
            initial_jobs: initial,
            arrival_times: arrivals.iter().map(|&(t, _)| t).collect(),
            service_sizes: arrivals.iter().map(|&(_, v)| v).collect(),
            horizon: 10.0,
        };
        let opts = SimOptions {
            sample_times: vec![],
            levels: vec![],
            record_events: true,
            record_measures: false,
        };
        let traj = simulate(policy, &streams, &opts)?;
        out.push_str(&format!("# {title}\n"));
        out.push_str("time,kind,job_index\n");
        for e in &traj.events {
            let kind = match e.kind {
                crate::engine::EventKind::Arrival => "arrival",
                crate::engine::EventKind::Departure => "departure",
            };
            out.push_str(&format!("{},{},{}\n", e.time, kind, e.job));
        }
        for j in &traj.jobs {
            out.push_str(&format!(
                "job {} (size {}): departed at {}\n",
                j.index,
                j.size,
                j.departure.map(|d| d.to_string()).unwrap_or_else(|| "-".into())
            ));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Map an error to the driver's exit code: 2 for configuration problems,
/// 3 for invariant violations detected during simulation.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Json(_) | Error::Io(_) => 2,
        Error::Invariant(_) | Error::Grid(_) => 3,
    }
}
