//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them). Thresholds on finite ladders are
//! pilot-calibrated engineering numbers; exact claims are asserted exactly.

use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use srptlab::diagnostics::{fclt_variance_check, trend_decreasing};
use srptlab::dist::{InterarrivalDistribution, ServiceDistribution, SupportSup};
use srptlab::engine::{check_bounds, coupled_run, simulate, Policy, SimOptions, Trajectory};
use srptlab::experiment::{run, ExperimentConfig, RunOutput};
use srptlab::ht::HeavyTrafficSpec;
use srptlab::primitives::{generate, PrimitiveStreams, SeedPlan};
use srptlab::rbm::{cdf_oracle_gap, rbm_endpoint, RbmParams};
use srptlab::scaling::scale_load;

fn criterion(n: u32, title: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] criterion {n:02} ({title}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({title}) failed: {detail}");
}

fn config_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// The TwoPoint ladder experiment (criteria 5 and 6), run once.
fn ladder_run() -> &'static RunOutput {
    static RUN: OnceLock<RunOutput> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig::from_json_file(&config_path("acceptance.json")).unwrap();
        assert_eq!(cfg.replications, 500);
        run(&cfg).unwrap()
    })
}

/// The exponential-service ladder (criterion 7), run once.
fn exponential_run() -> &'static RunOutput {
    static RUN: OnceLock<RunOutput> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig::from_json_file(&config_path("exponential.json")).unwrap();
        run(&cfg).unwrap()
    })
}

// --- criterion 1: exact hand simulations --------------------------------

#[test]
fn criterion_01_exact_hand_simulations() {
    let tol = 1e-12;
    let mk = |initial: Vec<f64>, arrivals: Vec<(f64, f64)>| PrimitiveStreams {
        initial_jobs: initial,
        arrival_times: arrivals.iter().map(|&(t, _)| t).collect(),
        service_sizes: arrivals.iter().map(|&(_, v)| v).collect(),
        horizon: 8.0,
    };
    let grid: Vec<f64> = (0..=32).map(|i| 0.25 * i as f64).collect();
    let opts = SimOptions::sampled(grid.clone());

    // Preemption scenario.
    let s1 = mk(vec![3.0], vec![(1.0, 1.0)]);
    let srpt = simulate(Policy::Srpt, &s1, &opts).unwrap();
    let d = |t: &Trajectory, j: usize| t.jobs[j - 1].departure.unwrap();
    let mut ok = (d(&srpt, 2) - 2.0).abs() <= tol && (d(&srpt, 1) - 4.0).abs() <= tol;
    for snap in &srpt.snapshots {
        let expected = if snap.time < 1.0 {
            1
        } else if snap.time < 2.0 {
            2
        } else if snap.time < 4.0 {
            1
        } else {
            0
        };
        ok &= snap.count == expected;
    }

    // Tie scenario: the incumbent keeps the server on an exact residual tie.
    let s2 = mk(vec![2.0], vec![(1.0, 1.0)]);
    let tie = simulate(Policy::Srpt, &s2, &opts).unwrap();
    ok &= (d(&tie, 1) - 2.0).abs() <= tol && (d(&tie, 2) - 3.0).abs() <= tol;

    // FIFO on the first scenario; workload path matches SRPT's exactly.
    let fifo = simulate(Policy::Fifo, &s1, &opts).unwrap();
    ok &= (d(&fifo, 1) - 3.0).abs() <= tol && (d(&fifo, 2) - 4.0).abs() <= tol;
    for (a, b) in fifo.snapshots.iter().zip(srpt.snapshots.iter()) {
        ok &= (a.workload - b.workload).abs() <= tol;
    }
    criterion(1, "exact hand simulations", ok, "departure times and queue steps exact");
}

// --- criteria 2-4: random coupled instances ------------------------------

struct Instance {
    support: SupportSup,
    trajectories: Vec<Trajectory>,
}

fn random_service(rng: &mut ChaCha8Rng) -> ServiceDistribution {
    // Discrete families use dyadic values so exact event ties stay exact.
    let dyadic = |rng: &mut ChaCha8Rng| rng.random_range(1..=16) as f64 * 0.25;
    match rng.random_range(0..6) {
        0 => {
            let x1 = dyadic(rng);
            let mut x2 = dyadic(rng);
            while x2 == x1 {
                x2 = dyadic(rng);
            }
            ServiceDistribution::two_point(x1, rng.random_range(0.2..0.8), x2).unwrap()
        }
        1 => {
            let xs: Vec<f64> = {
                let mut v: Vec<f64> = (0..3).map(|_| dyadic(rng)).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            };
            let p = 1.0 / xs.len() as f64;
            let atoms: Vec<(f64, f64)> = xs.iter().map(|&x| (x, p)).collect();
            ServiceDistribution::discrete(atoms).unwrap()
        }
        2 => {
            let lo = rng.random_range(0.0..1.0);
            ServiceDistribution::uniform(lo, lo + rng.random_range(0.5..2.0)).unwrap()
        }
        3 => ServiceDistribution::deterministic(dyadic(rng)).unwrap(),
        4 => ServiceDistribution::exponential(rng.random_range(0.5..2.0)).unwrap(),
        _ => {
            let lo = rng.random_range(0.25..0.75);
            ServiceDistribution::bounded_pareto(
                rng.random_range(0.8..2.5),
                lo,
                lo * rng.random_range(2.0..6.0),
            )
            .unwrap()
        }
    }
}

fn random_interarrival(rng: &mut ChaCha8Rng, mean: f64) -> InterarrivalDistribution {
    match rng.random_range(0..4) {
        0 => InterarrivalDistribution::exponential(1.0 / mean).unwrap(),
        1 => {
            // Dyadic gap near the requested mean keeps tie arithmetic exact.
            let gap = ((mean * 8.0).round() / 8.0).max(0.125);
            InterarrivalDistribution::deterministic(gap).unwrap()
        }
        2 => InterarrivalDistribution::scaled_gamma(rng.random_range(0.5..4.0), mean).unwrap(),
        _ => InterarrivalDistribution::scaled_uniform(mean, mean * rng.random_range(0.1..0.9))
            .unwrap(),
    }
}

fn instances() -> &'static Vec<Instance> {
    static INSTANCES: OnceLock<Vec<Instance>> = OnceLock::new();
    INSTANCES.get_or_init(|| {
        (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(10_000 + i);
                let svc = random_service(&mut rng);
                let mean_svc = svc.moments().mean;
                let rho = rng.random_range(0.5..1.05);
                let mean_gap = mean_svc / rho;
                let arr = random_interarrival(&mut rng, mean_gap);
                // Horizon sized for roughly a thousand jobs.
                let horizon = 1000.0 * arr.mean();
                let n_init = rng.random_range(0..4);
                let initial: Vec<f64> = (0..n_init).map(|_| svc.sample(&mut rng)).collect();
                let streams =
                    generate(&arr, &svc, &initial, horizon, &SeedPlan::new(20_000 + i)).unwrap();
                let sample_times: Vec<f64> =
                    (0..50).map(|k| horizon * (k as f64 / 49.0)).collect();
                let opts = SimOptions::sampled(sample_times);
                let trajectories = coupled_run(
                    &[Policy::Srpt, Policy::Fifo, Policy::LcfsPreempt],
                    &streams,
                    &opts,
                )
                .unwrap();
                Instance {
                    support: svc.support_sup(),
                    trajectories,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_02_srpt_minimizes_queue_length_pathwise() {
    let mut worst: i64 = i64::MIN;
    let mut violations = 0usize;
    for inst in instances() {
        let report = check_bounds(&inst.trajectories, inst.support).unwrap();
        worst = worst.max(report.srpt_count_excess);
        if report.srpt_count_excess > 0 {
            violations += 1;
        }
    }
    criterion(
        2,
        "SRPT count minimal across policies",
        violations == 0,
        &format!("1000 instances, max (Z_srpt - Z_other) = {worst}, violations: {violations}"),
    );
}

#[test]
fn criterion_03_static_workload_bound() {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut bounded = 0usize;
    let mut violations = 0usize;
    for inst in instances() {
        if !inst.support.is_finite() {
            continue;
        }
        bounded += 1;
        let report = check_bounds(&inst.trajectories, inst.support).unwrap();
        worst = worst.max(report.static_bound_excess);
        if report.static_bound_excess > 1e-9 {
            violations += 1;
        }
    }
    criterion(
        3,
        "workload <= x* times count for every policy",
        violations == 0 && bounded > 500,
        &format!("{bounded} bounded instances, max (W/x* - Z) = {worst:.3e}"),
    );
}

#[test]
fn criterion_04_workload_invariance_and_conservation() {
    let mut max_gap: f64 = 0.0;
    let mut max_balance: f64 = 0.0;
    for inst in instances() {
        let report = check_bounds(&inst.trajectories, SupportSup::Infinite).unwrap();
        max_gap = max_gap.max(report.workload_max_gap);
        for traj in &inst.trajectories {
            for snap in &traj.snapshots {
                let balance =
                    traj.initial_workload + snap.arrived_work - (snap.time - snap.idle);
                max_balance = max_balance.max((snap.workload - balance).abs());
            }
        }
    }
    criterion(
        4,
        "workload policy-invariant and work-conserving",
        max_gap <= 1e-9 && max_balance <= 1e-9,
        &format!("max cross-policy gap {max_gap:.3e}, max conservation slack {max_balance:.3e}"),
    );
}

// --- criteria 5-6: TwoPoint ladder ---------------------------------------

#[test]
fn criterion_05_queue_length_tracks_workload_over_xstar() {
    let out = ladder_run();
    let series = out.report.series("count_vs_workload_dev");
    let rows: Vec<(f64, f64)> = series.iter().map(|&(_, v, se)| (v, se)).collect();
    let trend = trend_decreasing(&rows);
    let last = series.last().unwrap().1;
    criterion(
        5,
        "scaled count converges to workload/x*",
        trend.decreasing && last <= 0.15,
        &format!(
            "means {:?}, trend: {}, final {last:.4} (bound 0.15)",
            series.iter().map(|&(r, v, _)| (r, (v * 1e4).round() / 1e4)).collect::<Vec<_>>(),
            trend.detail
        ),
    );
}

#[test]
fn criterion_06_mass_concentrates_at_xstar() {
    let out = ladder_run();
    let below = out.report.series("mass_below_band");
    let below_rows: Vec<(f64, f64)> = below.iter().map(|&(_, v, se)| (v, se)).collect();
    let below_trend = trend_decreasing(&below_rows);
    let below_last = below.last().unwrap().1;

    let above = out.report.series("mass_above_band");
    let above_max = above.iter().map(|&(_, v, _)| v).fold(0.0, f64::max);

    let bl = out.report.series("bl_to_limit");
    let bl_rows: Vec<(f64, f64)> = bl.iter().map(|&(_, v, se)| (v, se)).collect();
    let bl_trend = trend_decreasing(&bl_rows);

    let pass = below_trend.decreasing
        && below_last <= 0.1
        && above_max <= 1e-9
        && bl_trend.decreasing;
    criterion(
        6,
        "mass below x*-eps vanishes, none above x*+eps, BL to packed limit shrinks",
        pass,
        &format!(
            "below final {below_last:.4} (bound 0.1, trend {}), above max {above_max:.1e}, BL trend {}",
            below_trend.detail, bl_trend.detail
        ),
    );
}

// --- criterion 7: unbounded support --------------------------------------

#[test]
fn criterion_07_queue_length_vanishes_unbounded_support() {
    let out = exponential_run();
    let series = out.report.series("count_max");
    let rows: Vec<(f64, f64)> = series.iter().map(|&(_, v, se)| (v, se)).collect();
    let trend = trend_decreasing(&rows);
    let last = series.last().unwrap().1;

    // Workload marginals stay nondegenerate: mean within 25% of the
    // diffusion reference mean (Monte Carlo, exact-bridge sampling).
    let w_mean = out.report.series("workload_t0_mean").last().unwrap().1;
    let params = RbmParams::new(1.0, 1.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let n = 100_000;
    let rbm_mean: f64 =
        (0..n).map(|_| rbm_endpoint(&params, 1.0, 400, &mut rng)).sum::<f64>() / n as f64;
    let w_ok = (w_mean - rbm_mean).abs() <= 0.25 * rbm_mean;

    criterion(
        7,
        "scaled count vanishes when x* is infinite",
        trend.decreasing && last <= 0.2 && w_ok,
        &format!(
            "means {:?}, trend: {}, final {last:.4} (bound 0.2; see notes: the \
             exponential-service count decays like 1/log r, so 0.2 is out of reach \
             by r = 40 on every admissible frame), workload mean {w_mean:.3} vs RBM {rbm_mean:.3}",
            series.iter().map(|&(r, v, _)| (r, (v * 1e4).round() / 1e4)).collect::<Vec<_>>(),
            trend.detail
        ),
    );
}

// --- criterion 8: workload marginal vs RBM -------------------------------

#[test]
fn criterion_08_workload_marginal_matches_rbm() {
    let mut cfg = ExperimentConfig::from_json_file(&config_path("acceptance.json")).unwrap();
    cfg.replications = 1000;
    let out = run(&cfg).unwrap();
    let series = out.report.series("workload_ks");
    let rows: Vec<(f64, f64)> = series.iter().map(|&(_, v, se)| (v, se)).collect();
    let trend = trend_decreasing(&rows);
    let last = series.last().unwrap().1;
    criterion(
        8,
        "scaled workload marginal approaches the RBM law",
        trend.decreasing && last <= 0.10,
        &format!(
            "KS {:?}, trend: {}, final {last:.4} (bound 0.10)",
            series.iter().map(|&(r, v, _)| (r, (v * 1e4).round() / 1e4)).collect::<Vec<_>>(),
            trend.detail
        ),
    );
}

// --- criterion 9: FCLT variances ------------------------------------------

#[test]
fn criterion_09_load_fclt_variances() {
    let spec = HeavyTrafficSpec::new(
        ServiceDistribution::two_point(1.0, 0.5, 2.0).unwrap(),
        InterarrivalDistribution::scaled_gamma(2.25, 1.5).unwrap(),
        1.0,
        vec![50.0],
        0.0,
    )
    .unwrap();
    let model = &spec.build().unwrap()[0];
    let lp = spec.limit_params();
    let grid = vec![0.0, 1.0];
    let levels = vec![1.5];
    let horizon = 2500.0;
    let paths: Vec<_> = (0..2000u64)
        .into_par_iter()
        .map(|rep| {
            let seeds = SeedPlan::new(90_000).replication(50.0, rep);
            let streams = generate(&model.interarrival, &model.service, &[], horizon, &seeds).unwrap();
            scale_load(&streams, model, &grid, &levels).unwrap()
        })
        .collect();
    let rows = fclt_variance_check(&paths, &model.service, lp.alpha, lp.a, 1.0).unwrap();
    let find = |name: &str| rows.iter().find(|r| r.name == name).unwrap();
    let load = find("load");
    let tail = find("load_above_1.5");
    // Pinned limit constants: alpha (a^2 + b^2) = 5/6, tail s^2 = 26/27.
    let consts_ok = (load.predicted - 5.0 / 6.0).abs() <= 1e-12
        && (tail.predicted - 26.0 / 27.0).abs() <= 1e-12;
    let load_ratio = load.ratio.unwrap();
    let tail_ratio = tail.ratio.unwrap();
    let pass = consts_ok && (0.9..=1.1).contains(&load_ratio) && (0.9..=1.1).contains(&tail_ratio);
    criterion(
        9,
        "load and tail-load fluctuation variances",
        pass,
        &format!(
            "load var ratio {load_ratio:.4} (predicted {:.4}), tail var ratio {tail_ratio:.4} (predicted {:.4}), 2000 replications at r = 50",
            load.predicted, tail.predicted
        ),
    );
}

// --- criterion 10: RBM closed form vs reflection oracle -------------------

#[test]
fn criterion_10_rbm_marginal_gate() {
    // Acceptance parameters (w0 = 1, drift -1, sigma^2 = 5/6) and the
    // analytic special case (|N| law) both at t in {0.25, 1}.
    let params = RbmParams::new(1.0, 1.0, 5.0 / 6.0).unwrap();
    let driftless = RbmParams::new(0.0, 0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for (p, seed) in [(params, 1u64), (driftless, 2)] {
        for t in [0.25, 1.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(31_000 + seed);
            let gap = cdf_oracle_gap(&p, t, 100_000, 1000, &mut rng).unwrap();
            worst = worst.max(gap);
        }
    }
    criterion(
        10,
        "closed-form RBM marginal vs Monte Carlo reflection",
        worst <= 0.01,
        &format!("max CDF discrepancy {worst:.5} over both parameter sets at t in {{0.25, 1}}"),
    );
}

// --- criterion 11: determinism --------------------------------------------

#[test]
fn criterion_11_byte_identical_reruns() {
    // The seed derivation is per (seed, r, replication) and results are
    // collected in replication order, so the thread count cannot influence
    // any artifact; a reduced-replication ladder exercises the same path.
    let mut cfg = ExperimentConfig::from_json_file(&config_path("acceptance.json")).unwrap();
    cfg.replications = 30;
    cfg.r_ladder = vec![5.0, 10.0];
    cfg.emit = vec![
        srptlab::experiment::EmitKind::Csv,
        srptlab::experiment::EmitKind::Json,
        srptlab::experiment::EmitKind::Svg,
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for (i, threads) in [(0, 1usize), (1, 3usize)] {
        let mut c = cfg.clone();
        c.threads = Some(threads);
        c.out_dir = Some(dir.path().join(format!("run{i}")));
        let out = run(&c).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = out
            .files
            .iter()
            .map(|p| {
                let rel = p
                    .strip_prefix(c.out_dir.as_ref().unwrap())
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                (rel, std::fs::read(p).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    let names_match = outputs[0].iter().map(|(n, _)| n).eq(outputs[1].iter().map(|(n, _)| n));
    let bytes_match = outputs[0] == outputs[1];
    criterion(
        11,
        "byte-identical artifacts across thread counts",
        names_match && bytes_match,
        &format!(
            "{} artifacts compared ({})",
            outputs[0].len(),
            outputs[0]
                .iter()
                .map(|(n, _)| n.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}
