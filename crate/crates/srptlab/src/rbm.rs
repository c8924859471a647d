//! Reflected Brownian motion on the half line: grid simulation via the
//! one-sided reflection map, and the closed-form transient marginal CDF.
//!
//! The closed form is validated against the Monte Carlo reflection oracle
//! (see [`cdf_oracle_gap`]) rather than taken on faith; the acceptance suite
//! gates it at a maximum CDF discrepancy of 0.01.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dist::ServiceDistribution;
use crate::{Error, Result};

/// Parameters of the workload diffusion: initial value `w0 >= 0`, drift
/// `-gamma`, and variance `sigma2 > 0` per unit time.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RbmParams {
    pub w0: f64,
    pub gamma: f64,
    pub sigma2: f64,
}

impl RbmParams {
    pub fn new(w0: f64, gamma: f64, sigma2: f64) -> Result<Self> {
        if !(w0.is_finite() && w0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial value must be nonnegative, got {w0}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter("drift must be finite".into()));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance must be positive, got {sigma2}"
            )));
        }
        Ok(Self { w0, gamma, sigma2 })
    }

    /// Workload-limit parameters for a service law with limiting
    /// interarrival standard deviation `a`: variance `(a^2 + b^2) alpha`
    /// per unit time with `alpha = 1 / mean`.
    pub fn for_workload_limit(
        service: &ServiceDistribution,
        a: f64,
        gamma: f64,
        w0: f64,
    ) -> Result<Self> {
        let m = service.moments();
        let alpha = 1.0 / m.mean;
        Self::new(w0, gamma, (a * a + m.sd * m.sd) * alpha)
    }
}

/// Exact sample of the minimum of a Brownian bridge over a step of length
/// `dt` with endpoints `x0`, `x1` and variance `sigma2` per unit time:
/// inverting `P(min <= y) = exp(-2 (x0-y)(x1-y) / (sigma2 dt))`.
fn bridge_min(x0: f64, x1: f64, sigma2: f64, dt: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    let u = u.max(f64::MIN_POSITIVE);
    0.5 * (x0 + x1 - ((x1 - x0).powi(2) - 2.0 * sigma2 * dt * u.ln()).sqrt())
}

/// Simulate the reflected path on the given grid: exact Gaussian increments
/// of the free path `X(t) = w0 - gamma t + sigma B(t)`, reflected by
/// `W(t) = X(t) + max(0, max_{s <= t} -X(s))`. The running infimum between
/// grid points is sampled exactly from the Brownian bridge law, so the grid
/// values have the exact finite-dimensional law of the reflected process
/// (a plain grid-point infimum would bias the boundary by order sqrt(step)).
pub fn simulate_rbm(params: &RbmParams, grid: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
    let mut prev_t = 0.0;
    for &t in grid {
        if !(t >= prev_t) || (t == prev_t && t != 0.0 && grid.len() > 1) {
            return Err(Error::Grid(format!(
                "grid must increase from 0, got {t} after {prev_t}"
            )));
        }
        prev_t = t;
    }
    let sigma = params.sigma2.sqrt();
    let mut x = params.w0;
    let mut running_min: f64 = x;
    let mut t_prev = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let dt = t - t_prev;
        if dt > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            let x1 = x - params.gamma * dt + sigma * dt.sqrt() * z;
            running_min = running_min.min(bridge_min(x, x1, params.sigma2, dt, rng));
            x = x1;
            t_prev = t;
        }
        out.push(x + (-running_min).max(0.0));
    }
    Ok(out)
}

/// Endpoint sample of the reflected path at time `t` using `steps` uniform
/// increments; avoids storing the whole path.
pub fn rbm_endpoint(params: &RbmParams, t: f64, steps: usize, rng: &mut impl Rng) -> f64 {
    assert!(t > 0.0 && steps > 0);
    let sigma = params.sigma2.sqrt();
    let dt = t / steps as f64;
    let scale = sigma * dt.sqrt();
    let mut x = params.w0;
    let mut running_min = x;
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        let x1 = x - params.gamma * dt + scale * z;
        running_min = running_min.min(bridge_min(x, x1, params.sigma2, dt, rng));
        x = x1;
    }
    x + (-running_min).max(0.0)
}

/// `P(W(t) <= x | W(0) = w0)` for reflected Brownian motion with drift
/// `mu = -gamma` and variance `sigma2`:
///
/// `Phi((x - w0 - mu t)/(sigma sqrt t)) - e^{2 mu x / sigma2} Phi((-x - w0 - mu t)/(sigma sqrt t))`.
pub fn rbm_marginal_cdf(params: &RbmParams, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "marginal CDF needs t > 0, got {t}"
        )));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    let mu = -params.gamma;
    let s = (params.sigma2 * t).sqrt();
    let z1 = (x - params.w0 - mu * t) / s;
    let z2 = (-x - params.w0 - mu * t) / s;
    // The second term can pair a huge exponential with a tiny Gaussian tail
    // when the drift is positive, so combine them in log space.
    let log_term = 2.0 * mu * x / params.sigma2 + ln_normal_cdf(z2);
    let term = if log_term < -745.0 { 0.0 } else { log_term.exp() };
    Ok((normal_cdf(z1) - term).clamp(0.0, 1.0))
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn ln_normal_cdf(z: f64) -> f64 {
    if z > -37.0 {
        normal_cdf(z).ln()
    } else {
        // Asymptotic tail: Phi(z) ~ phi(z) / |z| for z -> -inf.
        -0.5 * z * z - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Maximum discrepancy between the closed-form marginal CDF and the
/// empirical CDF of `paths` grid-simulated endpoints at time `t`, evaluated
/// at the sample points. This is the validation gate for
/// [`rbm_marginal_cdf`].
pub fn cdf_oracle_gap(
    params: &RbmParams,
    t: f64,
    paths: usize,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let mut samples: Vec<f64> = (0..paths)
        .map(|_| rbm_endpoint(params, t, steps, rng))
        .collect();
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut gap: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = rbm_marginal_cdf(params, t, x)?;
        gap = gap.max((f - i as f64 / n).abs());
        gap = gap.max((f - (i + 1) as f64 / n).abs());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reflection_inactive_away_from_the_boundary() {
        let p = RbmParams::new(5.0, 0.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.001).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let path = simulate_rbm(&p, &grid, &mut rng).unwrap();
        assert_eq!(path[0], 5.0);
        // Over a horizon of 0.1 the free path stays positive, so the
        // reflected path equals the free path and hovers near 5.
        assert!(path.iter().all(|&w| w > 3.0 && w < 7.0));
    }

    #[test]
    fn starts_at_zero_when_w0_is_zero() {
        let p = RbmParams::new(0.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path = simulate_rbm(&p, &[0.0, 0.5, 1.0], &mut rng).unwrap();
        assert_eq!(path[0], 0.0);
        assert!(path.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn paths_are_nonnegative_and_match_free_path_off_boundary() {
        let p = RbmParams::new(1.0, 1.0, 2.0).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.005).collect();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = simulate_rbm(&p, &grid, &mut rng).unwrap();
            assert!(path.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn driftless_mean_is_folded_normal() {
        // With zero drift and zero start the reflected path has the law of
        // |B|, so E W(1) = sqrt(2/pi).
        let p = RbmParams::new(0.0, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| rbm_endpoint(&p, 1.0, 200, &mut rng))
            .sum::<f64>()
            / n as f64;
        let target = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - target).abs() < 0.01, "mean {mean} vs {target}");
    }

    #[test]
    fn doubling_sigma_doubles_the_driftless_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 50_000;
        let mean = |sigma2: f64, rng: &mut ChaCha8Rng| {
            let p = RbmParams::new(0.0, 0.0, sigma2).unwrap();
            (0..n).map(|_| rbm_endpoint(&p, 1.0, 100, rng)).sum::<f64>() / n as f64
        };
        let m1 = mean(1.0, &mut rng);
        let m2 = mean(4.0, &mut rng);
        let se = 3.0 * (1.0 - 2.0 / std::f64::consts::PI).sqrt() / (n as f64).sqrt();
        assert!((m2 - 2.0 * m1).abs() < 3.0 * se * 2.0, "{m1} vs {m2}");
    }

    #[test]
    fn marginal_cdf_closed_forms() {
        // Zero drift from zero: the law of |N(0, 1)| at t = 1.
        let p = RbmParams::new(0.0, 0.0, 1.0).unwrap();
        let f = rbm_marginal_cdf(&p, 1.0, 1.0).unwrap();
        assert_relative_eq!(f, 2.0 * normal_cdf(1.0) - 1.0, max_relative = 1e-12);
        assert_relative_eq!(f, 0.6826894921370859, max_relative = 1e-12);
        // The boundary holds no mass for t > 0.
        let p = RbmParams::new(1.0, 1.0, 0.8).unwrap();
        assert!(rbm_marginal_cdf(&p, 1.0, 0.0).unwrap() < 0.005);
        // Far tail.
        let x = p.w0 + 10.0 * p.sigma2.sqrt() + p.gamma.abs();
        assert!(rbm_marginal_cdf(&p, 1.0, x).unwrap() >= 0.999);
        assert!(rbm_marginal_cdf(&p, 0.0, 1.0).is_err());
        assert_eq!(rbm_marginal_cdf(&p, 1.0, -0.5).unwrap(), 0.0);
    }

    #[test]
    fn marginal_cdf_monotone_in_x_and_bounded() {
        for (w0, gamma, sigma2) in [(0.0, 0.0, 1.0), (1.0, 1.0, 5.0 / 6.0), (0.5, -0.5, 2.0)] {
            let p = RbmParams::new(w0, gamma, sigma2).unwrap();
            let mut prev = 0.0;
            for i in 0..=60 {
                let x = i as f64 * 0.1;
                let f = rbm_marginal_cdf(&p, 0.7, x).unwrap();
                assert!((0.0..=1.0).contains(&f));
                assert!(f >= prev - 1e-12);
                prev = f;
            }
        }
    }

    #[test]
    fn stationary_tail_for_negative_drift() {
        // As t grows with drift -gamma < 0 the law approaches
        // 1 - exp(-2 gamma x / sigma2).
        let p = RbmParams::new(0.5, 1.0, 1.0).unwrap();
        for x in [0.25, 0.5, 1.0, 2.0] {
            let f = rbm_marginal_cdf(&p, 200.0, x).unwrap();
            let stat = 1.0 - (-2.0 * x).exp();
            assert_relative_eq!(f, stat, epsilon = 1e-6);
        }
    }

    #[test]
    fn closed_form_matches_reflection_oracle() {
        // Smaller than the acceptance gate but same construction.
        let p = RbmParams::new(1.0, 1.0, 5.0 / 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let gap = cdf_oracle_gap(&p, 1.0, 20_000, 1000, &mut rng).unwrap();
        assert!(gap <= 0.015, "gap {gap}");
    }

    #[test]
    fn rejects_bad_grids_and_params() {
        assert!(RbmParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(RbmParams::new(0.0, 0.0, 0.0).is_err());
        let p = RbmParams::new(0.0, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(simulate_rbm(&p, &[0.5, 0.25], &mut rng).is_err());
    }
}
