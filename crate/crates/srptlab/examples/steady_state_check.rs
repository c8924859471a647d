//! Cross-check of the event engine against the classical mean queue length
//! of an M/M/1 queue under SRPT (conditional response-time formula plus
//! Little's law). Prints simulated time-average queue lengths next to the
//! analytic values for a few loads.

use srptlab::dist::{InterarrivalDistribution, ServiceDistribution};
use srptlab::engine::{simulate, Policy, SimOptions};
use srptlab::primitives::{generate, SeedPlan};

fn analytic_mm1_srpt(lam: f64) -> f64 {
    // E[T(x)] = lam m2(x) / (2 (1 - rho(x))^2) + int_0^x dt/(1 - rho(t)),
    // E[N] = lam int E[T(x)] f(x) dx, exponential(1) service.
    let rho = |x: f64| lam * (1.0 - (-x). exp() * (1.0 + x));
    let m2 = |x: f64| 2.0 - (-x).exp() * (x * x + 2.0 * x + 2.0) + x * x * (-x).exp();
    let n = 400_000;
    let h = 40.0 / n as f64;
    let mut inner = 0.0; // running int_0^x dt/(1-rho(t))
    let mut en = 0.0;
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        inner += h / (1.0 - rho(x));
        let t = lam * m2(x) / (2.0 * (1.0 - rho(x)).powi(2)) + inner;
        en += t * (-x).exp() * h;
    }
    lam * en
}

fn main() {
    for (lam, seed) in [(0.8, 1u64), (0.9, 2), (0.95, 3), (0.975, 4)] {
        let arr = InterarrivalDistribution::exponential(lam).unwrap();
        let svc = ServiceDistribution::exponential(1.0).unwrap();
        let horizon = 400_000.0;
        let streams = generate(&arr, &svc, &[], horizon, &SeedPlan::new(seed)).unwrap();
        let warmup = 20_000.0;
        let sample_times: Vec<f64> = (0..38_000).map(|i| warmup + i as f64 * 10.0).collect();
        let opts = SimOptions::sampled(sample_times);
        let traj = simulate(Policy::Srpt, &streams, &opts).unwrap();
        let mean =
            traj.snapshots.iter().map(|s| s.count as f64).sum::<f64>() / traj.snapshots.len() as f64;
        println!(
            "load {lam}: simulated E[N] = {mean:.3}, analytic = {:.3}",
            analytic_mm1_srpt(lam)
        );
    }
}
