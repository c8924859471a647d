//! Small ladder demonstration that under SRPT the diffusion-scaled queue
//! length tracks the scaled workload divided by the largest job size: the
//! mean pathwise gap max_t |Zhat(t) - What(t)/x*| shrinks as r grows.

use rayon::prelude::*;
use srptlab::diagnostics::queue_vs_workload;
use srptlab::dist::{InterarrivalDistribution, ServiceDistribution};
use srptlab::engine::{simulate, Policy, SimOptions};
use srptlab::ht::HeavyTrafficSpec;
use srptlab::primitives::{generate, SeedPlan};
use srptlab::scaling::scale_state;

fn main() {
    let spec = HeavyTrafficSpec::new(
        ServiceDistribution::two_point(1.0, 0.5, 2.0).unwrap(),
        InterarrivalDistribution::scaled_gamma(2.25, 1.5).unwrap(),
        1.0,
        vec![5.0, 10.0, 20.0, 40.0],
        1.0,
    )
    .unwrap();
    let x_star = 2.0;
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let reps = 200u64;

    println!("r    | mean max_t |Zhat - What/x*| (se)");
    for model in spec.build().unwrap() {
        let r = model.r;
        let paths: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let seeds = SeedPlan::new(11).replication(r, rep);
                let streams = generate(
                    &model.interarrival,
                    &model.service,
                    &model.initial_jobs,
                    r * r,
                    &seeds,
                )
                .unwrap();
                let sample_times: Vec<f64> = grid.iter().map(|&t| r * r * t).collect();
                let opts = SimOptions {
                    sample_times,
                    levels: vec![],
                    record_events: false,
                    record_measures: false,
                };
                let traj = simulate(Policy::Srpt, &streams, &opts).unwrap();
                scale_state(&traj, r, &grid).unwrap()
            })
            .collect();
        let stats = queue_vs_workload(&paths, x_star).unwrap();
        println!("{r:<4} | {:.4} ({:.4})", stats.abs.mean, stats.abs.se);
    }
}
