//! Event-exact simulation of a single-server queue under preemptive
//! work-conserving policies.
//!
//! Between events the served job's residual decreases at rate one and every
//! other residual is frozen, so the next state change is either the next
//! arrival or the served job's completion at `now + residual`. Completion
//! times are computed by addition and event ties are decided by exact float
//! comparison; no epsilons and no time stepping, so deterministic inputs
//! produce exact departure times.
//!
//! Under SRPT the server holds the job with the smallest residual, ties
//! going to the smallest index (the earliest arrival). Since a served
//! residual only decreases and waiting residuals are frozen, the selection
//! can only change at an arrival or a departure, which is where it is
//! re-evaluated.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dist::SupportSup;
use crate::measure::PointMeasure;
use crate::primitives::PrimitiveStreams;
use crate::{Error, Result};

/// Work-conserving service policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Shortest remaining processing time, preemptive, ties to the earliest
    /// arrival.
    Srpt,
    /// First in, first out (run to completion).
    Fifo,
    /// Last come, first served, preemptive.
    LcfsPreempt,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Srpt => "srpt",
            Policy::Fifo => "fifo",
            Policy::LcfsPreempt => "lcfs_preempt",
        }
    }

    /// Selection key; the policy serves the job minimizing it.
    fn key(self, residual: f64, index: usize) -> QueueKey {
        let (primary, tie) = match self {
            Policy::Srpt => (residual, index as u64),
            Policy::Fifo => (0.0, index as u64),
            Policy::LcfsPreempt => (0.0, !(index as u64)),
        };
        QueueKey {
            primary,
            tie,
            job: index,
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug)]
struct QueueKey {
    primary: f64,
    tie: u64,
    job: usize,
}

impl PartialEq for QueueKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for QueueKey {}
impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.tie.cmp(&other.tie))
    }
}

/// The SRPT selection rule on `(index, residual)` pairs: the job with the
/// minimal residual, ties going to the smallest index.
pub fn srpt_select(jobs: &[(usize, f64)]) -> Result<usize> {
    if jobs.iter().any(|&(_, w)| w <= 0.0) {
        return Err(Error::InvalidParameter(
            "srpt_select requires positive residuals".into(),
        ));
    }
    jobs.iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|&(i, _)| i)
        .ok_or_else(|| Error::InvalidParameter("srpt_select on an empty job set".into()))
}

/// Per-job record: arrival order index (initial jobs first), arrival time,
/// initial size, and the departure time once the job completes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JobRecord {
    pub index: usize,
    pub arrival: f64,
    pub size: f64,
    pub departure: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    Departure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub job: usize,
}

/// Mass and work of the state at or below one truncation level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevelStat {
    pub mass_below: u64,
    pub work_below: f64,
}

/// State sampled at one requested time, right-continuous in the event times.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    /// Number of jobs in the system.
    pub count: u64,
    /// Total residual work.
    pub workload: f64,
    /// Cumulative server idle time in `[0, time]`.
    pub idle: f64,
    /// Exogenous arrivals in `(0, time]`.
    pub arrivals: u64,
    /// Cumulative arrived service work in `(0, time]`.
    pub arrived_work: f64,
    /// One entry per configured truncation level.
    pub level_stats: Vec<LevelStat>,
    /// The state measure (one unit atom per positive residual), when recorded.
    pub measure: Option<PointMeasure>,
}

/// Result of one simulation run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub policy: Policy,
    pub horizon: f64,
    pub initial_count: u64,
    pub initial_workload: f64,
    pub snapshots: Vec<Snapshot>,
    pub jobs: Vec<JobRecord>,
    /// Event log; populated only when requested.
    pub events: Vec<EventRecord>,
    /// Arrivals plus departures processed (initial jobs count as arrivals).
    pub event_count: u64,
    pub departures: u64,
}

/// Sampling and recording options for a run.
#[derive(Clone, Debug, Default)]
pub struct SimOptions {
    /// Nondecreasing times in `[0, horizon]` at which to snapshot the state.
    pub sample_times: Vec<f64>,
    /// Truncation levels for per-snapshot mass/work splits.
    pub levels: Vec<f64>,
    pub record_events: bool,
    pub record_measures: bool,
}

impl SimOptions {
    pub fn sampled(sample_times: Vec<f64>) -> Self {
        Self {
            sample_times,
            ..Self::default()
        }
    }
}

/// Work-conservation slack allowed at snapshots, absolute.
const CONSERVATION_TOL: f64 = 1e-9;

/// Compensated (Kahan) accumulator; keeps the long-horizon idle and
/// arrived-work sums within the conservation tolerance.
#[derive(Clone, Copy, Debug, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum
    }
}

pub fn simulate(policy: Policy, streams: &PrimitiveStreams, opts: &SimOptions) -> Result<Trajectory> {
    streams.check()?;
    let horizon = streams.horizon;
    {
        let mut prev = 0.0;
        for &s in &opts.sample_times {
            if !(s >= prev) || s > horizon {
                return Err(Error::Grid(format!(
                    "sample times must be nondecreasing within [0, {horizon}], got {s}"
                )));
            }
            prev = s;
        }
    }

    let z0 = streams.initial_count();
    let n_jobs = z0 + streams.arrival_times.len();
    // 1-based job indexing; slot 0 unused.
    let mut residual = vec![0.0f64; n_jobs + 1];
    let mut jobs: Vec<JobRecord> = Vec::with_capacity(n_jobs);
    for (i, &v) in streams.initial_jobs.iter().enumerate() {
        residual[i + 1] = v;
        jobs.push(JobRecord {
            index: i + 1,
            arrival: 0.0,
            size: v,
            departure: None,
        });
    }
    for (k, (&t, &v)) in streams
        .arrival_times
        .iter()
        .zip(streams.service_sizes.iter())
        .enumerate()
    {
        jobs.push(JobRecord {
            index: z0 + k + 1,
            arrival: t,
            size: v,
            departure: None,
        });
    }
    let initial_workload: f64 = streams.initial_jobs.iter().sum();

    let mut waiting: BTreeSet<QueueKey> = BTreeSet::new();
    let mut served: Option<(usize, f64)> = None;
    let mut events: Vec<EventRecord> = Vec::new();
    let mut event_count: u64 = z0 as u64;
    #[allow(clippy::needless_range_loop)] // jobs are addressed by 1-based index
    for j in 1..=z0 {
        waiting.insert(policy.key(residual[j], j));
        if opts.record_events {
            events.push(EventRecord {
                time: 0.0,
                kind: EventKind::Arrival,
                job: j,
            });
        }
    }
    if let Some(first) = waiting.pop_first() {
        served = Some((first.job, residual[first.job]));
    }

    let mut now = 0.0;
    let mut idle = Kahan::default();
    let mut arrived_work = Kahan::default();
    let mut arrivals_seen: u64 = 0;
    let mut departures: u64 = 0;
    let mut next_arrival_idx = 0usize;
    let mut sample_idx = 0usize;
    let mut snapshots: Vec<Snapshot> = Vec::with_capacity(opts.sample_times.len());

    loop {
        let next_arrival = streams.arrival_times.get(next_arrival_idx).copied();
        let next_completion = served.map(|(_, res)| now + res);
        let t_event = match (next_arrival, next_completion) {
            (Some(a), Some(c)) => Some(a.min(c)),
            (Some(a), None) => Some(a),
            (None, Some(c)) => Some(c),
            (None, None) => None,
        };

        // Snapshots strictly before the next event see the current state
        // with the served residual decayed to the sample time.
        let cutoff = t_event.unwrap_or(f64::INFINITY);
        while sample_idx < opts.sample_times.len() && opts.sample_times[sample_idx] < cutoff {
            let s = opts.sample_times[sample_idx];
            let snap = take_snapshot(
                s,
                now,
                idle.value(),
                arrivals_seen,
                arrived_work.value(),
                &waiting,
                served,
                &residual,
                opts,
            );
            let busy = s - snap.idle;
            let balance = initial_workload + arrived_work.value() - busy;
            // Event times round at ~eps per unit of absolute time, so the
            // tripwire loosens proportionally on very long horizons; at desk
            // scale it stays at the absolute tolerance.
            let tol = CONSERVATION_TOL + 1e-13 * (s + arrived_work.value());
            if (snap.workload - balance).abs() > tol {
                return Err(Error::Invariant(format!(
                    "work conservation violated at t = {s}: workload {} vs balance {}",
                    snap.workload, balance
                )));
            }
            if snap.count != z0 as u64 + arrivals_seen - departures {
                return Err(Error::Invariant(format!(
                    "job count {} disagrees with arrivals minus departures at t = {s}",
                    snap.count
                )));
            }
            snapshots.push(snap);
            sample_idx += 1;
        }

        let Some(te) = t_event else { break };
        if te > horizon {
            break;
        }

        let dt = te - now;
        match &mut served {
            Some((_, res)) => *res -= dt,
            None => idle.add(dt),
        }
        now = te;

        if next_completion == Some(te) {
            let (j, _) = served.take().expect("completion implies a served job");
            residual[j] = 0.0;
            jobs[j - 1].departure = Some(te);
            departures += 1;
            event_count += 1;
            if opts.record_events {
                events.push(EventRecord {
                    time: te,
                    kind: EventKind::Departure,
                    job: j,
                });
            }
        }
        if next_arrival == Some(te) {
            let j = z0 + next_arrival_idx + 1;
            let size = streams.service_sizes[next_arrival_idx];
            residual[j] = size;
            arrived_work.add(size);
            arrivals_seen += 1;
            next_arrival_idx += 1;
            event_count += 1;
            waiting.insert(policy.key(size, j));
            if opts.record_events {
                events.push(EventRecord {
                    time: te,
                    kind: EventKind::Arrival,
                    job: j,
                });
            }
        }

        // Re-evaluate the selection; an incumbent keeps the server on ties.
        match served {
            Some((j, res)) => {
                let incumbent = policy.key(res, j);
                if let Some(&best) = waiting.first() {
                    if best < incumbent {
                        waiting.remove(&best);
                        residual[j] = res;
                        waiting.insert(incumbent);
                        served = Some((best.job, residual[best.job]));
                    }
                }
            }
            None => {
                if let Some(first) = waiting.pop_first() {
                    served = Some((first.job, residual[first.job]));
                }
            }
        }
        if policy == Policy::Srpt {
            if let (Some((_, res)), Some(first)) = (served, waiting.first()) {
                if residual[first.job] < res {
                    return Err(Error::Invariant(format!(
                        "served residual {res} above a waiting residual {} at t = {te}",
                        residual[first.job]
                    )));
                }
            }
        }
    }

    Ok(Trajectory {
        policy,
        horizon,
        initial_count: z0 as u64,
        initial_workload,
        snapshots,
        jobs,
        events,
        event_count,
        departures,
    })
}

#[allow(clippy::too_many_arguments)]
fn take_snapshot(
    s: f64,
    now: f64,
    idle: f64,
    arrivals_seen: u64,
    arrived_work: f64,
    waiting: &BTreeSet<QueueKey>,
    served: Option<(usize, f64)>,
    residual: &[f64],
    opts: &SimOptions,
) -> Snapshot {
    let served_virtual = served.map(|(j, res)| (j, res - (s - now)));
    let idle_now = idle + if served.is_none() { s - now } else { 0.0 };
    let actives = served_virtual
        .into_iter()
        .chain(waiting.iter().map(|k| (k.job, residual[k.job])));

    let mut count = 0u64;
    let mut workload = 0.0;
    let mut level_stats = vec![LevelStat::default(); opts.levels.len()];
    let mut atoms: Vec<f64> = Vec::new();
    for (_, w) in actives {
        debug_assert!(w > 0.0);
        count += 1;
        workload += w;
        for (stat, &x) in level_stats.iter_mut().zip(opts.levels.iter()) {
            if w <= x {
                stat.mass_below += 1;
                stat.work_below += w;
            }
        }
        if opts.record_measures {
            atoms.push(w);
        }
    }
    let measure = opts.record_measures.then(|| {
        PointMeasure::from_unit_locations(atoms).expect("residuals are positive")
    });
    Snapshot {
        time: s,
        count,
        workload,
        idle: idle_now,
        arrivals: arrivals_seen,
        arrived_work,
        level_stats,
        measure,
    }
}

/// Run several policies on the identical primitive streams, aligned on the
/// same sample grid.
pub fn coupled_run(
    policies: &[Policy],
    streams: &PrimitiveStreams,
    opts: &SimOptions,
) -> Result<Vec<Trajectory>> {
    policies
        .iter()
        .map(|&p| simulate(p, streams, opts))
        .collect()
}

/// Pathwise comparisons across a coupled run: the workload must agree
/// across policies, no policy may beat SRPT's job count, and with a bounded
/// service law no policy's count may drop below workload divided by the
/// largest job size.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BoundReport {
    pub samples: usize,
    /// `max over policies, times |W_srpt - W_pi|`.
    pub workload_max_gap: f64,
    /// `max over policies, times (Z_srpt - Z_pi)`; positive means violation.
    pub srpt_count_excess: i64,
    /// `max over policies, times (W/x* - Z_pi)`; positive means violation.
    /// Zero when the support supremum is unbounded (the lower bound is
    /// vacuous there).
    pub static_bound_excess: f64,
}

impl BoundReport {
    /// No violation beyond the given slack.
    pub fn ok(&self, tol: f64) -> bool {
        self.workload_max_gap <= tol
            && self.srpt_count_excess <= 0
            && self.static_bound_excess <= tol
    }
}

pub fn check_bounds(trajectories: &[Trajectory], x_star: SupportSup) -> Result<BoundReport> {
    let srpt = trajectories
        .iter()
        .find(|t| t.policy == Policy::Srpt)
        .ok_or_else(|| Error::InvalidParameter("check_bounds needs an SRPT trajectory".into()))?;
    let n = srpt.snapshots.len();
    let mut report = BoundReport {
        samples: n,
        ..BoundReport::default()
    };
    for traj in trajectories {
        if traj.snapshots.len() != n
            || traj
                .snapshots
                .iter()
                .zip(srpt.snapshots.iter())
                .any(|(a, b)| a.time != b.time)
        {
            return Err(Error::Grid(
                "coupled trajectories must share their sample grid".into(),
            ));
        }
        for (snap, srpt_snap) in traj.snapshots.iter().zip(srpt.snapshots.iter()) {
            let gap = (snap.workload - srpt_snap.workload).abs();
            report.workload_max_gap = report.workload_max_gap.max(gap);
            let excess = srpt_snap.count as i64 - snap.count as i64;
            report.srpt_count_excess = report.srpt_count_excess.max(excess);
            if let Some(x) = x_star.finite() {
                let slack = snap.workload / x - snap.count as f64;
                report.static_bound_excess = report.static_bound_excess.max(slack);
            }
        }
    }
    Ok(report)
}

/// CSV dump of one trajectory's snapshots:
/// `t,policy,Z,W,Z_below_{x},...,W_below_{x},...` per configured level.
pub fn write_trajectory_csv(
    traj: &Trajectory,
    levels: &[f64],
    mut w: impl std::io::Write,
) -> Result<()> {
    write!(w, "t,policy,Z,W")?;
    for x in levels {
        write!(w, ",Z_below_{x},W_below_{x}")?;
    }
    writeln!(w)?;
    for s in &traj.snapshots {
        write!(w, "{},{},{},{}", s.time, traj.policy, s.count, s.workload)?;
        for stat in &s.level_stats {
            write!(w, ",{},{}", stat.mass_below, stat.work_below)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// CSV dump of the event log: `time,kind,job_index`.
pub fn write_event_csv(traj: &Trajectory, mut w: impl std::io::Write) -> Result<()> {
    writeln!(w, "time,kind,job_index")?;
    for e in &traj.events {
        let kind = match e.kind {
            EventKind::Arrival => "arrival",
            EventKind::Departure => "departure",
        };
        writeln!(w, "{},{},{}", e.time, kind, e.job)?;
    }
    Ok(())
}
