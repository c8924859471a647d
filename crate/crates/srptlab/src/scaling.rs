//! Diffusion scaling of trajectories and load processes.
//!
//! The scaled state at scaled time `t` is the unscaled state at `r^2 t` with
//! every atom's weight divided by `r`; locations (residual sizes) are not
//! scaled. The centered, scaled arrival and load processes subtract the
//! exact per-model drift `r^2 t alpha_r` times the analytic moment, never an
//! estimated mean.

use crate::dist::ServiceDistribution;
use crate::engine::Trajectory;
use crate::ht::ModelAtR;
use crate::measure::PointMeasure;
use crate::primitives::PrimitiveStreams;
use crate::{Error, Result};

/// One grid point of a diffusion-scaled state path.
#[derive(Clone, Debug)]
pub struct ScaledPoint {
    /// Scaled time.
    pub time: f64,
    /// Scaled queue length `Z(r^2 t)/r`.
    pub count: f64,
    /// Scaled workload `W(r^2 t)/r`.
    pub workload: f64,
    /// Per-level scaled `(mass in [0, x], work in [0, x])`.
    pub level_stats: Vec<(f64, f64)>,
    /// The mass-scaled state measure, when the trajectory recorded measures.
    pub measure: Option<PointMeasure>,
}

/// A diffusion-scaled state path on a scaled-time grid.
#[derive(Clone, Debug)]
pub struct ScaledPath {
    pub r: f64,
    pub levels: Vec<f64>,
    pub points: Vec<ScaledPoint>,
}

impl ScaledPath {
    /// Index of the grid point at scaled time `t0`.
    pub fn index_at(&self, t0: f64) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.time == t0)
            .ok_or_else(|| Error::Grid(format!("no grid point at scaled time {t0}")))
    }

    pub fn level_index(&self, x: f64) -> Result<usize> {
        self.levels
            .iter()
            .position(|&l| l == x)
            .ok_or_else(|| Error::Grid(format!("level {x} not configured on this path")))
    }
}

/// Scale a sampled trajectory onto a scaled-time grid. The trajectory must
/// have been sampled exactly at the unscaled times `r^2 t` for every grid
/// point, and its horizon must cover the last of them.
pub fn scale_state(traj: &Trajectory, r: f64, grid: &[f64]) -> Result<ScaledPath> {
    assert!(r >= 1.0, "scale index must be at least 1");
    let last = grid.last().copied().unwrap_or(0.0);
    if traj.horizon < r * r * last {
        return Err(Error::Grid(format!(
            "trajectory horizon {} does not cover r^2 * {last}",
            traj.horizon
        )));
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut snap_iter = traj.snapshots.iter();
    for &t in grid {
        let unscaled = r * r * t;
        let snap = snap_iter
            .find(|s| s.time == unscaled)
            .ok_or_else(|| Error::Grid(format!("trajectory was not sampled at {unscaled}")))?;
        points.push(ScaledPoint {
            time: t,
            count: snap.count as f64 / r,
            workload: snap.workload / r,
            level_stats: snap
                .level_stats
                .iter()
                .map(|l| (l.mass_below as f64 / r, l.work_below / r))
                .collect(),
            measure: snap.measure.as_ref().map(|m| m.scale_mass(1.0 / r)),
        });
    }
    Ok(ScaledPath {
        r,
        levels: Vec::new(),
        points,
    })
}

/// As [`scale_state`], recording which truncation levels the trajectory was
/// sampled with.
pub fn scale_state_with_levels(
    traj: &Trajectory,
    r: f64,
    grid: &[f64],
    levels: &[f64],
) -> Result<ScaledPath> {
    let mut path = scale_state(traj, r, grid)?;
    path.levels = levels.to_vec();
    Ok(path)
}

/// One grid point of the centered, scaled load processes.
#[derive(Clone, Copy, Debug)]
pub struct ScaledLoadPoint {
    pub time: f64,
    /// Centered scaled arrival count `(E(r^2 t) - r^2 t alpha_r)/r`.
    pub arrivals: f64,
    /// Centered scaled total load.
    pub load: f64,
}

/// Centered, scaled load path, with per-level truncated and tail versions.
#[derive(Clone, Debug)]
pub struct ScaledLoadPath {
    pub r: f64,
    pub levels: Vec<f64>,
    pub points: Vec<ScaledLoadPoint>,
    /// `points.len() x levels.len()`: centered scaled load below each level.
    pub truncated: Vec<Vec<f64>>,
    /// `points.len() x levels.len()`: centered scaled load above each level.
    pub tail: Vec<Vec<f64>>,
}

impl ScaledLoadPath {
    pub fn index_at(&self, t0: f64) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.time == t0)
            .ok_or_else(|| Error::Grid(format!("no grid point at scaled time {t0}")))
    }

    pub fn level_index(&self, x: f64) -> Result<usize> {
        self.levels
            .iter()
            .position(|&l| l == x)
            .ok_or_else(|| Error::Grid(format!("level {x} not configured on this path")))
    }
}

/// Center and scale the arrival and load processes of one realized stream
/// under the model that generated it.
pub fn scale_load(
    streams: &PrimitiveStreams,
    model: &ModelAtR,
    grid: &[f64],
    levels: &[f64],
) -> Result<ScaledLoadPath> {
    let r = model.r;
    let last = grid.last().copied().unwrap_or(0.0);
    if streams.horizon < r * r * last {
        return Err(Error::Grid(format!(
            "stream horizon {} does not cover r^2 * {last}",
            streams.horizon
        )));
    }
    // Prefix sums of the sizes and of the sizes clipped to each level.
    let n = streams.service_sizes.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for &v in &streams.service_sizes {
        acc += v;
        cum.push(acc);
    }
    let mut cum_levels: Vec<Vec<f64>> = Vec::with_capacity(levels.len());
    for &x in levels {
        let mut c = Vec::with_capacity(n + 1);
        c.push(0.0);
        let mut acc = 0.0;
        for &v in &streams.service_sizes {
            if v <= x {
                acc += v;
            }
            c.push(acc);
        }
        cum_levels.push(c);
    }
    let mean = model.service.moments().mean;
    let level_means: Vec<f64> = levels
        .iter()
        .map(|&x| model.service.truncated_moments(x).mean_below)
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    let mut truncated = Vec::with_capacity(grid.len());
    let mut tail = Vec::with_capacity(grid.len());
    for &t in grid {
        let unscaled = r * r * t;
        let k = streams.arrival_times.partition_point(|&a| a <= unscaled);
        let drift = unscaled * model.alpha_r;
        let arrivals = (k as f64 - drift) / r;
        let load = (cum[k] - drift * mean) / r;
        points.push(ScaledLoadPoint {
            time: t,
            arrivals,
            load,
        });
        let mut row_trunc = Vec::with_capacity(levels.len());
        let mut row_tail = Vec::with_capacity(levels.len());
        for (c, &lm) in cum_levels.iter().zip(level_means.iter()) {
            let below = (c[k] - drift * lm) / r;
            row_trunc.push(below);
            row_tail.push(load - below);
        }
        truncated.push(row_trunc);
        tail.push(row_tail);
    }
    Ok(ScaledLoadPath {
        r,
        levels: levels.to_vec(),
        points,
        truncated,
        tail,
    })
}

/// Variance per unit time of the limiting tail-load fluctuation above a
/// continuity level `x`:
///
/// `s_x^2 = alpha (m2_tail - m1_tail^2) + m1_tail^2 alpha^3 a^2`,
///
/// where `m1_tail`, `m2_tail` are the first and second moments of the
/// limiting service law on `(x, inf)`. Above the support supremum both tail
/// moments vanish and so does the variance.
pub fn tail_variance(service: &ServiceDistribution, alpha: f64, a: f64, x: f64) -> Result<f64> {
    if !service.is_continuity_point(x) {
        return Err(Error::InvalidParameter(format!(
            "tail variance requires a continuity level, but the service law has an atom at {x}"
        )));
    }
    let t = service.truncated_moments(x);
    Ok(alpha * (t.second_above - t.mean_above * t.mean_above)
        + t.mean_above * t.mean_above * alpha.powi(3) * a * a)
}

/// Variance per unit time of the limiting truncated-load fluctuation below
/// a continuity level `x` (same form with the below-level moments).
pub fn truncated_variance(
    service: &ServiceDistribution,
    alpha: f64,
    a: f64,
    x: f64,
) -> Result<f64> {
    if !service.is_continuity_point(x) {
        return Err(Error::InvalidParameter(format!(
            "truncated variance requires a continuity level, but the service law has an atom at {x}"
        )));
    }
    let t = service.truncated_moments(x);
    Ok(alpha * (t.second_below - t.mean_below * t.mean_below)
        + t.mean_below * t.mean_below * alpha.powi(3) * a * a)
}

/// Variance per unit time of the limiting total-load fluctuation:
/// `alpha (a^2 + b^2)`.
pub fn total_load_variance(service: &ServiceDistribution, alpha: f64, a: f64) -> f64 {
    let b = service.moments().sd;
    alpha * (a * a + b * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::InterarrivalDistribution;
    use crate::engine::{simulate, Policy, SimOptions};
    use crate::ht::HeavyTrafficSpec;
    use crate::primitives::{generate, SeedPlan};
    use approx::assert_relative_eq;

    fn model(r: f64) -> ModelAtR {
        HeavyTrafficSpec::new(
            ServiceDistribution::two_point(1.0, 0.5, 2.0).unwrap(),
            InterarrivalDistribution::scaled_gamma(2.25, 1.5).unwrap(),
            1.0,
            vec![r],
            1.0,
        )
        .unwrap()
        .build()
        .unwrap()
        .remove(0)
    }

    #[test]
    fn scale_state_identity_at_r_one() {
        let s = PrimitiveStreams {
            initial_jobs: vec![3.0],
            arrival_times: vec![1.0],
            service_sizes: vec![1.0],
            horizon: 6.0,
        };
        let grid = vec![0.0, 1.5, 3.0];
        let opts = SimOptions {
            sample_times: grid.clone(),
            levels: vec![],
            record_events: false,
            record_measures: true,
        };
        let traj = simulate(Policy::Srpt, &s, &opts).unwrap();
        let path = scale_state(&traj, 1.0, &grid).unwrap();
        for (p, snap) in path.points.iter().zip(traj.snapshots.iter()) {
            assert_eq!(p.count, snap.count as f64);
            assert_eq!(p.workload, snap.workload);
            assert_eq!(
                p.measure.as_ref().unwrap().sorted_atoms(),
                snap.measure.as_ref().unwrap().sorted_atoms()
            );
        }
    }

    #[test]
    fn scale_state_divides_mass_not_locations() {
        let s = PrimitiveStreams {
            initial_jobs: vec![2.0],
            arrival_times: vec![],
            service_sizes: vec![],
            horizon: 100.0,
        };
        let grid = vec![0.0];
        let opts = SimOptions {
            sample_times: vec![0.0],
            levels: vec![],
            record_events: false,
            record_measures: true,
        };
        let traj = simulate(Policy::Srpt, &s, &opts).unwrap();
        let path = scale_state(&traj, 10.0, &grid).unwrap();
        let p = &path.points[0];
        assert_eq!(p.measure.as_ref().unwrap().sorted_atoms(), vec![(2.0, 0.1)]);
        assert_relative_eq!(p.workload, 0.2, max_relative = 1e-15);
        assert_relative_eq!(p.count, 0.1, max_relative = 1e-15);
    }

    #[test]
    fn scaled_workload_is_first_moment_of_scaled_measure() {
        let m = model(5.0);
        let seeds = SeedPlan::new(3).replication(5.0, 0);
        let s = generate(&m.interarrival, &m.service, &m.initial_jobs, 25.0, &seeds).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let sample_times: Vec<f64> = grid.iter().map(|&t| 25.0 * t).collect();
        let opts = SimOptions {
            sample_times,
            levels: vec![],
            record_events: false,
            record_measures: true,
        };
        let traj = simulate(Policy::Srpt, &s, &opts).unwrap();
        let path = scale_state(&traj, 5.0, &grid).unwrap();
        for p in &path.points {
            let w = p.measure.as_ref().unwrap().first_moment();
            assert!((w - p.workload).abs() <= 1e-9);
        }
    }

    #[test]
    fn insufficient_horizon_is_rejected() {
        let s = PrimitiveStreams {
            initial_jobs: vec![1.0],
            arrival_times: vec![],
            service_sizes: vec![],
            horizon: 5.0,
        };
        let traj = simulate(Policy::Srpt, &s, &SimOptions::default()).unwrap();
        assert!(scale_state(&traj, 10.0, &[1.0]).is_err());
        let m = model(10.0);
        assert!(scale_load(&s, &m, &[1.0], &[]).is_err());
    }

    #[test]
    fn deterministic_arrivals_keep_scaled_count_within_one_over_r() {
        // With deterministic gaps at exactly rate alpha_r the counting error
        // is at most one arrival, so the centered scaled count is <= 1/r.
        let m = ModelAtR {
            interarrival: InterarrivalDistribution::deterministic(1.25).unwrap(),
            alpha_r: 0.8,
            ..model(4.0)
        };
        let s = generate(
            &m.interarrival,
            &m.service,
            &[],
            16.0,
            &SeedPlan::new(1),
        )
        .unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
        let path = scale_load(&s, &m, &grid, &[]).unwrap();
        for p in &path.points {
            assert!(p.arrivals.abs() <= 1.0 / 4.0 + 1e-12, "{}", p.arrivals);
        }
        assert_eq!(path.points[0].arrivals, 0.0);
        assert_eq!(path.points[0].load, 0.0);
    }

    #[test]
    fn tail_plus_truncated_is_total_identically() {
        let m = model(6.0);
        let seeds = SeedPlan::new(8).replication(6.0, 0);
        let s = generate(&m.interarrival, &m.service, &[], 36.0, &seeds).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let path = scale_load(&s, &m, &grid, &[1.5]).unwrap();
        for (i, p) in path.points.iter().enumerate() {
            let below = path.truncated[i][0];
            let above = path.tail[i][0];
            assert!((below + above - p.load).abs() <= 1e-12 * (1.0 + p.load.abs()));
        }
    }

    #[test]
    fn tail_variance_formula() {
        let svc = ServiceDistribution::two_point(1.0, 0.5, 2.0).unwrap();
        let alpha = 2.0 / 3.0;
        // Tail above 1.5 holds the atom at 2: first moment 1, second 2.
        let s2 = tail_variance(&svc, alpha, 1.0, 1.5).unwrap();
        assert_relative_eq!(s2, 26.0 / 27.0, max_relative = 1e-12);
        // Independent arithmetic for the same quantity.
        let direct = alpha * (2.0 - 1.0) + 1.0 * alpha.powi(3);
        assert_relative_eq!(s2, direct, max_relative = 1e-15);
        // Above the support supremum the tail variance vanishes.
        assert_eq!(tail_variance(&svc, alpha, 1.0, 2.5).unwrap(), 0.0);
        // At zero the tail is the whole law: alpha (a^2 + b^2) when the
        // mean ties to 1/alpha.
        let s0 = tail_variance(&svc, alpha, 1.0, 0.0).unwrap();
        assert_relative_eq!(s0, total_load_variance(&svc, alpha, 1.0), max_relative = 1e-12);
        // Atoms are rejected as truncation levels.
        assert!(tail_variance(&svc, alpha, 1.0, 2.0).is_err());
    }

    #[test]
    fn monte_carlo_total_load_variance() {
        // Sample variance of the centered scaled load at t = 1 approaches
        // alpha (a^2 + b^2); moderate scale keeps this test quick.
        let m = model(20.0);
        let grid = vec![0.0, 1.0];
        let reps = 400;
        let mut vals = Vec::with_capacity(reps);
        for i in 0..reps {
            let seeds = SeedPlan::new(77).replication(20.0, i as u64);
            let s = generate(&m.interarrival, &m.service, &[], 400.0, &seeds).unwrap();
            let path = scale_load(&s, &m, &grid, &[]).unwrap();
            vals.push(path.points[1].load);
        }
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64;
        let predicted = total_load_variance(&m.service, 2.0 / 3.0, 1.0);
        assert!(
            (var / predicted - 1.0).abs() < 0.25,
            "variance ratio {}",
            var / predicted
        );
    }
}
