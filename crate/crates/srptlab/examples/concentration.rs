//! Where does the queue mass sit? Along the heavy-traffic ladder the scaled
//! state concentrates at the largest job size x*: mass below x* - eps
//! vanishes, nothing lives above x* + eps, the work in the band approaches
//! the whole workload, and the bounded-Lipschitz distance to the packed
//! limit (What/x*) delta_{x*} shrinks.

use rayon::prelude::*;
use srptlab::diagnostics::{bl_to_packed_limit, concentration_profile};
use srptlab::dist::{InterarrivalDistribution, ServiceDistribution};
use srptlab::engine::{simulate, Policy, SimOptions};
use srptlab::ht::HeavyTrafficSpec;
use srptlab::primitives::{generate, SeedPlan};
use srptlab::scaling::scale_state_with_levels;

fn main() {
    let service = ServiceDistribution::two_point(1.0, 0.5, 2.0).unwrap();
    let eps = 0.5;
    let levels = vec![1.5, 2.5]; // x* -+ eps, both continuity points
    let spec = HeavyTrafficSpec::new(
        service.clone(),
        InterarrivalDistribution::scaled_gamma(2.25, 1.5).unwrap(),
        1.0,
        vec![5.0, 10.0, 20.0, 40.0],
        1.0,
    )
    .unwrap();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let reps = 200u64;

    println!("r    | mass below {:.1} | mass above {:.1} | band work gap | BL to limit", 1.5, 2.5);
    for model in spec.build().unwrap() {
        let r = model.r;
        let paths: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let seeds = SeedPlan::new(23).replication(r, rep);
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
                    record_measures: true,
                };
                let traj = simulate(Policy::Srpt, &streams, &opts).unwrap();
                scale_state_with_levels(&traj, r, &grid, &levels).unwrap()
            })
            .collect();
        let profile = concentration_profile(&paths, &service, eps).unwrap();
        let bl = bl_to_packed_limit(&paths, 2.0, 1.0).unwrap();
        println!(
            "{r:<4} | {:15.4} | {:15.1e} | {:13.4} | {:.4}",
            profile.below_max.mean, profile.above_max.max, profile.band_work_gap.mean, bl.mean
        );
    }
}
