//! The scaled workload marginal against its diffusion limit: simulate the
//! queue along the ladder, collect What(1) across replications, and compare
//! with the closed-form reflected-Brownian-motion CDF (drift -gamma,
//! variance (a^2 + b^2) alpha, started at w0) via the Kolmogorov-Smirnov
//! distance.

use rayon::prelude::*;
use srptlab::diagnostics::workload_law_check;
use srptlab::dist::{InterarrivalDistribution, ServiceDistribution};
use srptlab::engine::{simulate, Policy, SimOptions};
use srptlab::ht::HeavyTrafficSpec;
use srptlab::primitives::{generate, SeedPlan};
use srptlab::rbm::RbmParams;
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
    let lp = spec.limit_params();
    let params = RbmParams::new(lp.w0, lp.gamma, lp.sigma2).unwrap();
    println!(
        "workload limit: drift -{}, variance {:.4} per unit time, start {}",
        lp.gamma, lp.sigma2, lp.w0
    );
    let grid = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let reps = 400u64;
    println!("r    | KS( What(1), RBM marginal )");
    for model in spec.build().unwrap() {
        let r = model.r;
        let paths: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let seeds = SeedPlan::new(37).replication(r, rep);
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
                    levels: vec![],
                    record_events: false,
                    record_measures: false,
                };
                let traj = simulate(Policy::Srpt, &streams, &opts).unwrap();
                scale_state(&traj, r, &grid).unwrap()
            })
            .collect();
        let ks = workload_law_check(&paths, &params, 1.0).unwrap();
        println!("{r:<4} | {:.4} (n = {}, se ~ {:.4})", ks.ks, ks.n, ks.se);
    }
}
