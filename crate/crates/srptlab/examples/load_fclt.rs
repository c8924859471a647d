//! Functional-CLT variance table for the centered, diffusion-scaled load
//! processes: arrivals, total load, and the load below/above a truncation
//! level, against their analytic limit variances (the tail one is
//! alpha (m2_tail - m1_tail^2) + m1_tail^2 alpha^3 a^2).

use rayon::prelude::*;
use srptlab::diagnostics::fclt_variance_check;
use srptlab::dist::{InterarrivalDistribution, ServiceDistribution};
use srptlab::ht::HeavyTrafficSpec;
use srptlab::primitives::{generate, SeedPlan};
use srptlab::scaling::scale_load;

fn main() {
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
    let reps = 2000u64;
    let paths: Vec<_> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seeds = SeedPlan::new(90_000).replication(model.r, rep);
            let streams =
                generate(&model.interarrival, &model.service, &[], 2500.0, &seeds).unwrap();
            scale_load(&streams, model, &grid, &levels).unwrap()
        })
        .collect();

    println!("process          | sample var | limit var | ratio");
    for row in fclt_variance_check(&paths, &model.service, lp.alpha, lp.a, 1.0).unwrap() {
        match row.ratio {
            Some(ratio) => println!(
                "{:16} | {:10.4} | {:9.4} | {ratio:.4}",
                row.name, row.sample_variance, row.predicted
            ),
            None => println!(
                "{:16} | {:10.4} | {:9.4} | (limit variance is zero)",
                row.name, row.sample_variance, row.predicted
            ),
        }
    }
}
