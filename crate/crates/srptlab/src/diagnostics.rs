//! Statistical verification of the scaling limits: per-replication path
//! statistics, Kolmogorov-Smirnov comparisons against the diffusion
//! reference, FCLT variance tables, and monotone-trend verdicts across a
//! ladder.
//!
//! Every statistic is a deterministic function of the seed plan and the
//! configuration; a rerun reproduces the report bit for bit. Finite-ladder
//! thresholds are engineering choices calibrated by pilot runs, not limit
//! theorems, and reports label them as such.

use serde::Serialize;

use crate::dist::ServiceDistribution;
use crate::measure::PointMeasure;
use crate::rbm::{rbm_marginal_cdf, RbmParams};
use crate::scaling::{
    tail_variance, total_load_variance, truncated_variance, ScaledLoadPath, ScaledPath,
};
use crate::{Error, Result};

/// Kolmogorov-Smirnov statistic: the sup distance between the empirical CDF
/// of `samples` and `cdf`, evaluated two-sided at the sample points.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "ks_statistic needs at least one sample".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((f - i as f64 / n).abs());
        sup = sup.max((f - (i + 1) as f64 / n).abs());
    }
    Ok(sup)
}

/// Location summaries of a batch of per-replication statistics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
        Self {
            n,
            mean,
            se: (var / n as f64).sqrt(),
            median: q(0.5),
            q90: q(0.9),
            max: sorted[n - 1],
        }
    }
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n > 1);
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

/// Deviation of the scaled queue length from scaled workload over the
/// largest job size.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationStats {
    /// Per replication: `max_t |count(t) - workload(t)/x*|`.
    pub per_rep: Vec<f64>,
    pub abs: SummaryStats,
    /// The same deviations divided by `max_t workload(t)/x* + 0.01`.
    pub rel: SummaryStats,
}

/// Per replication, the sup-over-grid gap between the scaled count and the
/// scaled workload divided by the (finite) support supremum.
pub fn queue_vs_workload(paths: &[ScaledPath], x_star: f64) -> Result<DeviationStats> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no paths".into()));
    }
    assert!(x_star.is_finite() && x_star > 0.0);
    let mut per_rep = Vec::with_capacity(paths.len());
    let mut rel = Vec::with_capacity(paths.len());
    for path in paths {
        let mut dev: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for p in &path.points {
            let target = p.workload / x_star;
            dev = dev.max((p.count - target).abs());
            peak = peak.max(target);
        }
        per_rep.push(dev);
        rel.push(dev / (peak + 0.01));
    }
    Ok(DeviationStats {
        abs: SummaryStats::from_values(&per_rep),
        rel: SummaryStats::from_values(&rel),
        per_rep,
    })
}

/// Where the scaled queue mass sits relative to a band around the support
/// supremum.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationSummary {
    pub x_star: f64,
    pub epsilon: f64,
    /// Per-replication `max_t` scaled mass in `[0, x* - eps]`.
    pub below_max: SummaryStats,
    /// Per-replication `max_t` scaled mass in `(x* + eps, inf)`.
    pub above_max: SummaryStats,
    /// Per-replication grid mean of `|work in (x*-eps, x*+eps] - workload|`.
    pub band_work_gap: SummaryStats,
}

/// Mass-location profile of scaled paths around the support supremum. The
/// paths must carry the truncation levels `x* - eps` and `x* + eps`, and
/// both must be continuity points of the service law.
pub fn concentration_profile(
    paths: &[ScaledPath],
    service: &ServiceDistribution,
    eps: f64,
) -> Result<ConcentrationSummary> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no paths".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("band half-width must be positive".into()));
    }
    let x_star = service.support_sup().finite().ok_or_else(|| {
        Error::InvalidParameter("concentration profile needs a bounded service law".into())
    })?;
    let (lo, hi) = (x_star - eps, x_star + eps);
    for lvl in [lo, hi] {
        if !service.is_continuity_point(lvl) {
            return Err(Error::InvalidParameter(format!(
                "truncation level {lvl} is an atom of the service law"
            )));
        }
    }
    let mut below = Vec::with_capacity(paths.len());
    let mut above = Vec::with_capacity(paths.len());
    let mut band = Vec::with_capacity(paths.len());
    for path in paths {
        let i_lo = path.level_index(lo)?;
        let i_hi = path.level_index(hi)?;
        let mut below_max: f64 = 0.0;
        let mut above_max: f64 = 0.0;
        let mut gap_sum = 0.0;
        for p in &path.points {
            let (mass_lo, work_lo) = p.level_stats[i_lo];
            let (mass_hi, work_hi) = p.level_stats[i_hi];
            below_max = below_max.max(mass_lo);
            above_max = above_max.max(p.count - mass_hi);
            gap_sum += ((work_hi - work_lo) - p.workload).abs();
        }
        below.push(below_max);
        above.push(above_max);
        band.push(gap_sum / path.points.len() as f64);
    }
    Ok(ConcentrationSummary {
        x_star,
        epsilon: eps,
        below_max: SummaryStats::from_values(&below),
        above_max: SummaryStats::from_values(&above),
        band_work_gap: SummaryStats::from_values(&band),
    })
}

/// Per-replication bounded-Lipschitz distance at scaled time `t0` between
/// the scaled state and the packed limit `(workload/x*) delta_{x*}`. The
/// paths must carry state measures.
pub fn bl_to_packed_limit(paths: &[ScaledPath], x_star: f64, t0: f64) -> Result<SummaryStats> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no paths".into()));
    }
    let mut vals = Vec::with_capacity(paths.len());
    for path in paths {
        let i = path.index_at(t0)?;
        let p = &path.points[i];
        let measure = p.measure.as_ref().ok_or_else(|| {
            Error::InvalidParameter("paths must record state measures".into())
        })?;
        let weight = p.workload / x_star;
        let limit = if weight > 0.0 {
            PointMeasure::from_atoms([(x_star, weight)])?
        } else {
            PointMeasure::zero()
        };
        vals.push(measure.bl_distance(&limit));
    }
    Ok(SummaryStats::from_values(&vals))
}

/// Scaled workloads at `t0`, one per replication.
pub fn workload_samples(paths: &[ScaledPath], t0: f64) -> Result<Vec<f64>> {
    paths
        .iter()
        .map(|p| Ok(p.points[p.index_at(t0)?].workload))
        .collect()
}

/// Scaled counts' per-replication maxima over the grid.
pub fn count_max_per_rep(paths: &[ScaledPath]) -> Result<SummaryStats> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no paths".into()));
    }
    let vals: Vec<f64> = paths
        .iter()
        .map(|p| p.points.iter().map(|q| q.count).fold(0.0, f64::max))
        .collect();
    Ok(SummaryStats::from_values(&vals))
}

/// Kolmogorov-Smirnov verdict for one rung.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsCheck {
    pub t0: f64,
    pub n: usize,
    pub ks: f64,
    /// Asymptotic standard error of the statistic, `0.26 / sqrt(n)`
    /// (the standard deviation of the Kolmogorov law scaled back).
    pub se: f64,
}

/// Compare the empirical law of the scaled workload at `t0` across
/// replications with the closed-form diffusion marginal. Needs at least
/// 200 replications to say anything.
pub fn workload_law_check(
    paths: &[ScaledPath],
    params: &RbmParams,
    t0: f64,
) -> Result<KsCheck> {
    if paths.len() < 200 {
        return Err(Error::InvalidParameter(format!(
            "workload law check needs >= 200 replications, got {}",
            paths.len()
        )));
    }
    let samples = workload_samples(paths, t0)?;
    let ks = ks_statistic(&samples, |x| {
        rbm_marginal_cdf(params, t0, x).expect("t0 > 0")
    })?;
    Ok(KsCheck {
        t0,
        n: samples.len(),
        ks,
        se: 0.26 / (samples.len() as f64).sqrt(),
    })
}

/// One row of the FCLT variance table.
#[derive(Clone, Debug, Serialize)]
pub struct VarianceRow {
    pub name: String,
    pub sample_variance: f64,
    /// Limit variance at `t0` (per-unit-time variance times `t0`).
    pub predicted: f64,
    /// `sample/predicted`; absent when the prediction is zero.
    pub ratio: Option<f64>,
    /// Relative Monte Carlo standard error of the sample variance under a
    /// Gaussian limit, `sqrt(2/(n-1))`.
    pub rel_se: f64,
}

/// Sample variances of the centered scaled arrival, total-load, truncated,
/// and tail processes at `t0`, against the analytic limit variances.
/// `alpha` and `a` are the limiting arrival rate and interarrival standard
/// deviation.
pub fn fclt_variance_check(
    paths: &[ScaledLoadPath],
    service: &ServiceDistribution,
    alpha: f64,
    a: f64,
    t0: f64,
) -> Result<Vec<VarianceRow>> {
    if paths.len() < 1000 {
        return Err(Error::InvalidParameter(format!(
            "variance check needs >= 1000 replications, got {}",
            paths.len()
        )));
    }
    let n = paths.len();
    let rel_se = (2.0 / (n as f64 - 1.0)).sqrt();
    let idx: Vec<usize> = paths
        .iter()
        .map(|p| p.index_at(t0))
        .collect::<Result<_>>()?;
    let levels = paths[0].levels.clone();

    let mut rows = Vec::new();
    let mut push = |name: String, values: Vec<f64>, predicted: f64| {
        let sample = sample_variance(&values);
        rows.push(VarianceRow {
            name,
            sample_variance: sample,
            predicted,
            ratio: (predicted != 0.0).then(|| sample / predicted),
            rel_se,
        });
    };

    let arr: Vec<f64> = paths
        .iter()
        .zip(&idx)
        .map(|(p, &i)| p.points[i].arrivals)
        .collect();
    push("arrivals".into(), arr, t0 * a * a * alpha.powi(3));

    let load: Vec<f64> = paths
        .iter()
        .zip(&idx)
        .map(|(p, &i)| p.points[i].load)
        .collect();
    push("load".into(), load, t0 * total_load_variance(service, alpha, a));

    for (j, &x) in levels.iter().enumerate() {
        let below: Vec<f64> = paths
            .iter()
            .zip(&idx)
            .map(|(p, &i)| p.truncated[i][j])
            .collect();
        push(
            format!("load_below_{x}"),
            below,
            t0 * truncated_variance(service, alpha, a, x)?,
        );
        let above: Vec<f64> = paths
            .iter()
            .zip(&idx)
            .map(|(p, &i)| p.tail[i][j])
            .collect();
        push(
            format!("load_above_{x}"),
            above,
            t0 * tail_variance(service, alpha, a, x)?,
        );
    }
    Ok(rows)
}

/// Monotone-decrease verdict across a ladder of `(mean, standard error)`
/// rows: strict decrease, with one inversion forgiven when the inverting
/// pair differs by less than twice the combined standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct TrendVerdict {
    pub decreasing: bool,
    pub inversions: usize,
    pub forgiven: bool,
    pub detail: String,
}

pub fn trend_decreasing(rows: &[(f64, f64)]) -> TrendVerdict {
    let mut inversions = Vec::new();
    for (i, pair) in rows.windows(2).enumerate() {
        let (v0, se0) = pair[0];
        let (v1, se1) = pair[1];
        if v1 >= v0 {
            inversions.push((i, v1 - v0, 2.0 * (se0 * se0 + se1 * se1).sqrt()));
        }
    }
    match inversions.as_slice() {
        [] => TrendVerdict {
            decreasing: true,
            inversions: 0,
            forgiven: false,
            detail: "strictly decreasing".into(),
        },
        [(i, gap, allowance)] if gap < allowance => TrendVerdict {
            decreasing: true,
            inversions: 1,
            forgiven: true,
            detail: format!(
                "one inversion at step {i} (gap {gap:.4} < allowance {allowance:.4}), statistically insignificant"
            ),
        },
        inv => TrendVerdict {
            decreasing: false,
            inversions: inv.len(),
            forgiven: false,
            detail: format!("{} significant inversion(s)", inv.len()),
        },
    }
}

/// One `(statistic, r)` cell of a convergence report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub statistic: String,
    pub r: f64,
    pub replications: usize,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Ladder-wide report: per-rung statistic values plus trend and threshold
/// verdicts. Thresholds are pilot-calibrated engineering numbers, which the
/// emitted JSON records explicitly.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvergenceReport {
    pub note: &'static str,
    pub rows: Vec<ReportRow>,
    pub verdicts: Vec<Verdict>,
}

impl ConvergenceReport {
    pub fn new() -> Self {
        Self {
            note: "finite-ladder thresholds are pilot-calibrated, not limit-theorem values",
            rows: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn push_row(&mut self, statistic: &str, r: f64, replications: usize, value: f64, std_error: f64) {
        self.rows.push(ReportRow {
            statistic: statistic.into(),
            r,
            replications,
            value,
            std_error,
        });
    }

    /// Rows of one statistic ordered by `r`.
    pub fn series(&self, statistic: &str) -> Vec<(f64, f64, f64)> {
        let mut v: Vec<(f64, f64, f64)> = self
            .rows
            .iter()
            .filter(|row| row.statistic == statistic)
            .map(|row| (row.r, row.value, row.std_error))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    /// Add a trend verdict (decreasing across the ladder) for a statistic.
    pub fn verdict_trend(&mut self, statistic: &str) -> bool {
        let series = self.series(statistic);
        let rows: Vec<(f64, f64)> = series.iter().map(|&(_, v, se)| (v, se)).collect();
        let t = trend_decreasing(&rows);
        let passed = t.decreasing;
        self.verdicts.push(Verdict {
            name: format!("{statistic} decreasing in r"),
            passed,
            detail: t.detail,
        });
        passed
    }

    /// Add a threshold verdict on the statistic's value at the largest `r`.
    pub fn verdict_final_at_most(&mut self, statistic: &str, bound: f64) -> bool {
        let series = self.series(statistic);
        let passed = series
            .last()
            .map(|&(_, v, _)| v <= bound)
            .unwrap_or(false);
        let detail = series
            .last()
            .map(|&(r, v, _)| format!("value {v:.4} at r = {r} vs bound {bound}"))
            .unwrap_or_else(|| "no rows".into());
        self.verdicts.push(Verdict {
            name: format!("{statistic} <= {bound} at the largest r"),
            passed,
            detail,
        });
        passed
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn sort_rows(&mut self) {
        self.rows
            .sort_by(|a, b| a.statistic.cmp(&b.statistic).then(a.r.total_cmp(&b.r)));
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "statistic,r,replications,value,std_error")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.statistic, row.r, row.replications, row.value, row.std_error
            )?;
        }
        Ok(())
    }
}

impl std::fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut stats: Vec<&str> = self.rows.iter().map(|r| r.statistic.as_str()).collect();
        stats.dedup();
        for statistic in stats {
            writeln!(f, "{statistic}:")?;
            for (r, v, se) in self.series(statistic) {
                writeln!(f, "  r = {r:>6}: {v:.5} (se {se:.5})")?;
            }
        }
        for v in &self.verdicts {
            writeln!(
                f,
                "[{}] {} — {}",
                if v.passed { "PASS" } else { "FAIL" },
                v.name,
                v.detail
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScaledPoint;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ks_point_mass_at_the_median() {
        let cdf = |x: f64| x.clamp(0.0, 1.0); // uniform on [0, 1]
        let samples = vec![0.5; 100];
        assert_relative_eq!(ks_statistic(&samples, cdf).unwrap(), 0.5);
        let one = vec![0.5];
        assert_relative_eq!(ks_statistic(&one, cdf).unwrap(), 0.5);
        assert!(ks_statistic(&[], cdf).is_err());
    }

    #[test]
    fn ks_is_small_for_samples_from_the_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<f64> = (0..100_000).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let ks = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(ks <= 0.01, "ks {ks}");
        assert!((0.0..=1.0).contains(&ks));
    }

    fn path_from_points(r: f64, points: Vec<ScaledPoint>) -> ScaledPath {
        ScaledPath {
            r,
            levels: vec![],
            points,
        }
    }

    fn point(t: f64, count: f64, workload: f64) -> ScaledPoint {
        ScaledPoint {
            time: t,
            count,
            workload,
            level_stats: vec![],
            measure: None,
        }
    }

    #[test]
    fn deviation_of_packed_states_is_granularity() {
        // A state holding floor(W/x*) jobs of size x* plus one fractional
        // job deviates by at most 1/r in scaled count.
        let r = 10.0;
        let x_star = 2.0;
        let w: f64 = 7.3; // unscaled workload
        let full = (w / x_star).floor();
        let count = full + 1.0; // one partial job carries the remainder
        let p = point(0.0, count / r, w / r);
        let stats = queue_vs_workload(&[path_from_points(r, vec![p])], x_star).unwrap();
        assert!(stats.abs.max <= 1.0 / r + 1e-12);
        // An empty system deviates by exactly zero.
        let stats =
            queue_vs_workload(&[path_from_points(r, vec![point(0.0, 0.0, 0.0)])], x_star).unwrap();
        assert_eq!(stats.abs.max, 0.0);
    }

    #[test]
    fn trend_rules() {
        let t = trend_decreasing(&[(4.0, 0.1), (3.0, 0.1), (2.0, 0.1)]);
        assert!(t.decreasing && t.inversions == 0);
        // One statistically insignificant inversion is forgiven.
        let t = trend_decreasing(&[(4.0, 0.1), (3.0, 0.1), (3.05, 0.1), (2.0, 0.1)]);
        assert!(t.decreasing && t.forgiven);
        // A large inversion is not.
        let t = trend_decreasing(&[(4.0, 0.1), (3.0, 0.1), (3.9, 0.1)]);
        assert!(!t.decreasing);
        // Two inversions are never forgiven.
        let t = trend_decreasing(&[(4.0, 1.0), (4.1, 1.0), (4.2, 1.0)]);
        assert!(!t.decreasing);
    }

    #[test]
    fn report_series_and_verdicts() {
        let mut report = ConvergenceReport::new();
        for (r, v) in [(5.0, 0.4), (10.0, 0.3), (20.0, 0.2), (40.0, 0.1)] {
            report.push_row("dev", r, 100, v, 0.01);
        }
        assert!(report.verdict_trend("dev"));
        assert!(report.verdict_final_at_most("dev", 0.15));
        assert!(!report.verdict_final_at_most("dev", 0.05));
        let series = report.series("dev");
        assert_eq!(series.len(), 4);
        assert_eq!(series[0].0, 5.0);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("statistic,r,replications,value,std_error\n"));
        assert!(text.contains("dev,5,100,0.4,0.01"));
    }

    #[test]
    fn concentration_single_atom_service_law() {
        // All sizes equal x*, so nothing ever sits above x* + eps; only the
        // job in service can sit below x* - eps, which caps the below-band
        // scaled mass at 1/r.
        use crate::dist::{InterarrivalDistribution, ServiceDistribution};
        use crate::engine::{simulate, Policy, SimOptions};
        use crate::ht::HeavyTrafficSpec;
        use crate::primitives::{generate, SeedPlan};
        use crate::scaling::scale_state_with_levels;

        let service = ServiceDistribution::deterministic(2.0).unwrap();
        let spec = HeavyTrafficSpec::new(
            service.clone(),
            InterarrivalDistribution::exponential(1.0).unwrap(),
            1.0,
            vec![6.0],
            1.0,
        )
        .unwrap();
        let model = &spec.build().unwrap()[0];
        let r = model.r;
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let levels = vec![1.5, 2.5];
        let paths: Vec<ScaledPath> = (0..20u64)
            .map(|rep| {
                let seeds = SeedPlan::new(55).replication(r, rep);
                let streams = generate(
                    &model.interarrival,
                    &model.service,
                    &model.initial_jobs,
                    r * r,
                    &seeds,
                )
                .unwrap();
                let opts = SimOptions {
                    sample_times: grid.iter().map(|&t| r * r * t).collect(),
                    levels: levels.clone(),
                    record_events: false,
                    record_measures: false,
                };
                let traj = simulate(Policy::Srpt, &streams, &opts).unwrap();
                scale_state_with_levels(&traj, r, &grid, &levels).unwrap()
            })
            .collect();
        let profile = concentration_profile(&paths, &service, 0.5).unwrap();
        assert_eq!(profile.above_max.max, 0.0);
        assert!(profile.below_max.max <= 1.0 / r + 1e-12);
        // An empty system yields all-zero components.
        let empty = ScaledPath {
            r,
            levels: levels.clone(),
            points: (0..3)
                .map(|i| ScaledPoint {
                    time: i as f64,
                    count: 0.0,
                    workload: 0.0,
                    level_stats: vec![(0.0, 0.0); 2],
                    measure: None,
                })
                .collect(),
        };
        let profile = concentration_profile(&[empty], &service, 0.5).unwrap();
        assert_eq!(profile.below_max.max, 0.0);
        assert_eq!(profile.above_max.max, 0.0);
        assert_eq!(profile.band_work_gap.max, 0.0);
    }

    #[test]
    fn fclt_degenerate_rows() {
        // Above the support supremum the tail process is identically zero;
        // with deterministic arrivals and sizes nothing fluctuates at all.
        use crate::dist::{InterarrivalDistribution, ServiceDistribution};
        use crate::ht::ModelAtR;
        use crate::primitives::{generate, SeedPlan};
        use crate::scaling::scale_load;

        let service = ServiceDistribution::two_point(1.0, 0.5, 2.0).unwrap();
        let model = ModelAtR {
            r: 10.0,
            alpha_r: 0.6,
            a_r: 1.5,
            interarrival: InterarrivalDistribution::exponential(0.6).unwrap(),
            service: service.clone(),
            initial_jobs: vec![],
        };
        let grid = vec![0.0, 1.0];
        let paths: Vec<_> = (0..1000u64)
            .map(|rep| {
                let seeds = SeedPlan::new(66).replication(10.0, rep);
                let streams =
                    generate(&model.interarrival, &model.service, &[], 100.0, &seeds).unwrap();
                scale_load(&streams, &model, &grid, &[2.5]).unwrap()
            })
            .collect();
        let rows = fclt_variance_check(&paths, &service, 2.0 / 3.0, 1.0, 1.0).unwrap();
        let tail = rows.iter().find(|r| r.name == "load_above_2.5").unwrap();
        assert_eq!(tail.predicted, 0.0);
        assert!(tail.ratio.is_none());
        assert_eq!(tail.sample_variance, 0.0);

        let det_service = ServiceDistribution::deterministic(1.0).unwrap();
        let det_model = ModelAtR {
            r: 10.0,
            alpha_r: 0.8,
            a_r: 0.0,
            interarrival: InterarrivalDistribution::deterministic(1.25).unwrap(),
            service: det_service.clone(),
            initial_jobs: vec![],
        };
        let paths: Vec<_> = (0..1000u64)
            .map(|rep| {
                let seeds = SeedPlan::new(67).replication(10.0, rep);
                let streams =
                    generate(&det_model.interarrival, &det_model.service, &[], 100.0, &seeds)
                        .unwrap();
                scale_load(&streams, &det_model, &grid, &[]).unwrap()
            })
            .collect();
        let rows = fclt_variance_check(&paths, &det_service, 0.8, 0.0, 1.0).unwrap();
        for row in rows {
            // Identical replications: zero sample variance everywhere.
            assert_eq!(row.sample_variance, 0.0, "{}", row.name);
        }
    }

    #[test]
    fn summary_stats_quantiles() {
        let vals: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let s = SummaryStats::from_values(&vals);
        assert_eq!(s.mean, 5.5);
        assert_eq!(s.median, 5.0);
        assert_eq!(s.q90, 9.0);
        assert_eq!(s.max, 10.0);
        assert!(s.se > 0.0);
    }
}
