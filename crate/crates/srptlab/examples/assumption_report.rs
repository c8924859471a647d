//! Build a heavy-traffic ladder and print its assumption report: exact
//! traffic-intensity targeting, second-moment convergence, and the vanishing
//! scaled tail above the support supremum.

use srptlab::dist::{InterarrivalDistribution, ServiceDistribution};
use srptlab::ht::{validate, HeavyTrafficSpec};

fn main() {
    for (name, service, interarrival) in [
        (
            "two-point service, gamma-shaped arrivals",
            ServiceDistribution::two_point(1.0, 0.5, 2.0).unwrap(),
            InterarrivalDistribution::scaled_gamma(2.25, 1.5).unwrap(),
        ),
        (
            "exponential service, Poisson arrivals",
            ServiceDistribution::exponential(1.0).unwrap(),
            InterarrivalDistribution::exponential(1.0).unwrap(),
        ),
    ] {
        let spec = HeavyTrafficSpec::new(
            service.clone(),
            interarrival,
            1.0,
            vec![5.0, 10.0, 20.0, 40.0],
            1.0,
        )
        .unwrap();
        let models = spec.build().unwrap();
        println!("=== {name} ===");
        let lp = spec.limit_params();
        println!(
            "limit: alpha = {:.4}, a = {:.4}, b = {:.4}, workload variance = {:.4}",
            lp.alpha, lp.a, lp.b, lp.sigma2
        );
        for m in &models {
            println!(
                "r = {:>4}: rho_r = {:.6}, initial jobs: {} of size {:?}",
                m.r,
                m.rho(),
                m.initial_jobs.len(),
                m.initial_jobs.first()
            );
        }
        print!("{}", validate(&service, 1.0, &models));
        println!();
    }
}
