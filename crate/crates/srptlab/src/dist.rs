//! Service-time and interarrival distribution families.
//!
//! Every family carries closed-form moments, truncated moments, and the
//! supremum of its support, so that assumption checks and variance formulas
//! can be evaluated analytically rather than estimated. Service laws must
//! put no mass at zero and have a finite, positive mean and a finite second
//! moment; interarrival laws are strictly positive with finite mean and
//! standard deviation.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Supremum of the support of a service distribution. The unbounded case is
/// a tagged marker, never a float infinity in arithmetic; formulas that would
/// divide by it must branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportSup {
    Finite(f64),
    Infinite,
}

impl SupportSup {
    pub fn finite(self) -> Option<f64> {
        match self {
            SupportSup::Finite(x) => Some(x),
            SupportSup::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, SupportSup::Finite(_))
    }
}

/// Closed-form moments of a service distribution.
#[derive(Clone, Copy, Debug)]
pub struct ServiceMoments {
    pub mean: f64,
    pub second: f64,
    /// Standard deviation `sqrt(second - mean^2)`.
    pub sd: f64,
    /// Supremum of the support.
    pub sup: SupportSup,
}

/// First and second moments restricted to `[0, x]` and `(x, inf)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TruncatedMoments {
    pub mean_below: f64,
    pub second_below: f64,
    pub mean_above: f64,
    pub second_above: f64,
}

/// Service-time distribution families with strictly positive support and
/// finite second moment.
#[derive(Clone, Debug, PartialEq)]
pub enum ServiceDistribution {
    TwoPoint { x1: f64, p1: f64, x2: f64 },
    DiscreteFinite { atoms: Vec<(f64, f64)> },
    Uniform { lo: f64, hi: f64 },
    Deterministic { x: f64 },
    Exponential { rate: f64 },
    BoundedPareto { shape: f64, lo: f64, hi: f64 },
}

impl ServiceDistribution {
    pub fn two_point(x1: f64, p1: f64, x2: f64) -> Result<Self> {
        let d = Self::TwoPoint { x1, p1, x2 };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let d = Self::DiscreteFinite { atoms };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Self::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(x: f64) -> Result<Self> {
        let d = Self::Deterministic { x };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn bounded_pareto(shape: f64, lo: f64, hi: f64) -> Result<Self> {
        let d = Self::BoundedPareto { shape, lo, hi };
        d.validate()?;
        Ok(d)
    }

    /// Parameter checks; invalid parameters are rejected here, not at
    /// sampling time.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::TwoPoint { x1, p1, x2 } => {
                if !(x1.is_finite() && *x1 > 0.0 && x2.is_finite() && *x2 > 0.0) {
                    return bad(format!("two_point support must be positive: {x1}, {x2}"));
                }
                if !(p1.is_finite() && *p1 > 0.0 && *p1 < 1.0) {
                    return bad(format!("two_point p1 must lie in (0,1): {p1}"));
                }
                if x1 == x2 {
                    return bad("two_point atoms must be distinct".into());
                }
            }
            Self::DiscreteFinite { atoms } => {
                if atoms.is_empty() {
                    return bad("discrete law needs at least one atom".into());
                }
                let mut total = 0.0;
                for &(x, p) in atoms {
                    if !(x.is_finite() && x > 0.0) {
                        return bad(format!("discrete atom location must be positive: {x}"));
                    }
                    if !(p.is_finite() && p > 0.0) {
                        return bad(format!("discrete atom probability must be positive: {p}"));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("discrete probabilities sum to {total}, not 1"));
                }
            }
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                    return bad(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            Self::Deterministic { x } => {
                if !(x.is_finite() && *x > 0.0) {
                    return bad(format!("deterministic size must be positive: {x}"));
                }
            }
            Self::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate must be positive: {rate}"));
                }
            }
            Self::BoundedPareto { shape, lo, hi } => {
                if !(shape.is_finite() && *shape > 0.0) {
                    return bad(format!("bounded_pareto shape must be positive: {shape}"));
                }
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && hi > lo) {
                    return bad(format!("bounded_pareto needs 0 < lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Self::TwoPoint { x1, p1, x2 } => {
                if rng.random::<f64>() < *p1 {
                    *x1
                } else {
                    *x2
                }
            }
            Self::DiscreteFinite { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(x, p) in atoms {
                    acc += p;
                    if u < acc {
                        return x;
                    }
                }
                atoms.last().unwrap().0
            }
            Self::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            Self::Deterministic { x } => *x,
            Self::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Self::BoundedPareto { shape, lo, hi } => {
                // Inverse CDF of the Pareto law conditioned on [lo, hi].
                let u: f64 = rng.random();
                let scale = 1.0 - (lo / hi).powf(*shape);
                lo * (1.0 - u * scale).powf(-1.0 / shape)
            }
        }
    }

    /// Closed-form mean, second moment, standard deviation, and support
    /// supremum.
    pub fn moments(&self) -> ServiceMoments {
        let (mean, second, sup) = match self {
            Self::TwoPoint { x1, p1, x2 } => (
                p1 * x1 + (1.0 - p1) * x2,
                p1 * x1 * x1 + (1.0 - p1) * x2 * x2,
                SupportSup::Finite(x1.max(*x2)),
            ),
            Self::DiscreteFinite { atoms } => {
                let mean = atoms.iter().map(|&(x, p)| p * x).sum();
                let second = atoms.iter().map(|&(x, p)| p * x * x).sum();
                let top = atoms.iter().map(|&(x, _)| x).fold(0.0, f64::max);
                (mean, second, SupportSup::Finite(top))
            }
            Self::Uniform { lo, hi } => (
                0.5 * (lo + hi),
                (lo * lo + lo * hi + hi * hi) / 3.0,
                SupportSup::Finite(*hi),
            ),
            Self::Deterministic { x } => (*x, x * x, SupportSup::Finite(*x)),
            Self::Exponential { rate } => {
                (1.0 / rate, 2.0 / (rate * rate), SupportSup::Infinite)
            }
            Self::BoundedPareto { shape, lo, hi } => (
                pareto_partial_moment(*shape, *lo, *hi, 1.0, *lo, *hi),
                pareto_partial_moment(*shape, *lo, *hi, 2.0, *lo, *hi),
                SupportSup::Finite(*hi),
            ),
        };
        ServiceMoments {
            mean,
            second,
            sd: (second - mean * mean).max(0.0).sqrt(),
            sup,
        }
    }

    /// Analytic `<chi 1_[0,x]>`, `<chi^2 1_[0,x]>` and the tail counterparts
    /// over `(x, inf)`; below and above always sum to the full moments.
    pub fn truncated_moments(&self, x: f64) -> TruncatedMoments {
        assert!(x >= 0.0, "truncation level must be nonnegative");
        let m = self.moments();
        let (mean_below, second_below) = match self {
            Self::TwoPoint { x1, p1, x2 } => {
                let mut acc = (0.0, 0.0);
                for (xi, p) in [(*x1, *p1), (*x2, 1.0 - p1)] {
                    if xi <= x {
                        acc.0 += p * xi;
                        acc.1 += p * xi * xi;
                    }
                }
                acc
            }
            Self::DiscreteFinite { atoms } => {
                let mut acc = (0.0, 0.0);
                for &(xi, p) in atoms {
                    if xi <= x {
                        acc.0 += p * xi;
                        acc.1 += p * xi * xi;
                    }
                }
                acc
            }
            Self::Uniform { lo, hi } => {
                let c = x.clamp(*lo, *hi);
                let w = hi - lo;
                ((c * c - lo * lo) / (2.0 * w), (c * c * c - lo * lo * lo) / (3.0 * w))
            }
            Self::Deterministic { x: point } => {
                if *point <= x {
                    (m.mean, m.second)
                } else {
                    (0.0, 0.0)
                }
            }
            Self::Exponential { rate } => {
                if x == 0.0 {
                    (0.0, 0.0)
                } else {
                    let e = (-rate * x).exp();
                    let mean_b = (1.0 - e * (1.0 + rate * x)) / rate;
                    let second_b = 2.0 / (rate * rate)
                        - e * (x * x + 2.0 * x / rate + 2.0 / (rate * rate));
                    (mean_b, second_b)
                }
            }
            Self::BoundedPareto { shape, lo, hi } => {
                let c = x.clamp(*lo, *hi);
                (
                    pareto_partial_moment(*shape, *lo, *hi, 1.0, *lo, c),
                    pareto_partial_moment(*shape, *lo, *hi, 2.0, *lo, c),
                )
            }
        };
        TruncatedMoments {
            mean_below,
            second_below,
            mean_above: (m.mean - mean_below).max(0.0),
            second_above: (m.second - second_below).max(0.0),
        }
    }

    /// True iff the law puts no mass at `x`; truncation levels used in tail
    /// limit statements must be continuity points.
    pub fn is_continuity_point(&self, x: f64) -> bool {
        match self {
            Self::TwoPoint { x1, x2, .. } => x != *x1 && x != *x2,
            Self::DiscreteFinite { atoms } => atoms.iter().all(|&(xi, _)| xi != x),
            Self::Deterministic { x: point } => x != *point,
            Self::Uniform { .. } | Self::Exponential { .. } | Self::BoundedPareto { .. } => true,
        }
    }

    pub fn support_sup(&self) -> SupportSup {
        self.moments().sup
    }
}

/// `int_a^b x^m f(x) dx` for the Pareto density with the given shape
/// truncated to `[lo, hi]`.
fn pareto_partial_moment(shape: f64, lo: f64, hi: f64, m: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let norm = shape * lo.powf(shape) / (1.0 - (lo / hi).powf(shape));
    if (m - shape).abs() < 1e-12 {
        norm * (b / a).ln()
    } else {
        norm * (b.powf(m - shape) - a.powf(m - shape)) / (m - shape)
    }
}

/// Interarrival distribution families; all strictly positive with finite
/// mean and standard deviation. `with_mean` rescales the law by a constant
/// factor, preserving its shape (so the coefficient of variation is fixed).
#[derive(Clone, Debug, PartialEq)]
pub enum InterarrivalDistribution {
    Exponential { rate: f64 },
    Deterministic { gap: f64 },
    ScaledGamma { shape: f64, mean: f64 },
    ScaledUniform { mean: f64, halfwidth: f64 },
}

impl InterarrivalDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(gap: f64) -> Result<Self> {
        let d = Self::Deterministic { gap };
        d.validate()?;
        Ok(d)
    }

    pub fn scaled_gamma(shape: f64, mean: f64) -> Result<Self> {
        let d = Self::ScaledGamma { shape, mean };
        d.validate()?;
        Ok(d)
    }

    pub fn scaled_uniform(mean: f64, halfwidth: f64) -> Result<Self> {
        let d = Self::ScaledUniform { mean, halfwidth };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate must be positive: {rate}"));
                }
            }
            Self::Deterministic { gap } => {
                if !(gap.is_finite() && *gap > 0.0) {
                    return bad(format!("deterministic gap must be positive: {gap}"));
                }
            }
            Self::ScaledGamma { shape, mean } => {
                if !(shape.is_finite() && *shape > 0.0 && mean.is_finite() && *mean > 0.0) {
                    return bad(format!("scaled_gamma needs positive shape and mean: {shape}, {mean}"));
                }
            }
            Self::ScaledUniform { mean, halfwidth } => {
                if !(mean.is_finite() && *mean > 0.0 && halfwidth.is_finite() && *halfwidth >= 0.0) {
                    return bad(format!("scaled_uniform needs mean > 0, halfwidth >= 0: {mean}, {halfwidth}"));
                }
                if halfwidth >= mean {
                    return bad(format!(
                        "scaled_uniform halfwidth {halfwidth} must be smaller than mean {mean}"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { gap } => *gap,
            Self::ScaledGamma { mean, .. } => *mean,
            Self::ScaledUniform { mean, .. } => *mean,
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { .. } => 0.0,
            Self::ScaledGamma { shape, mean } => mean / shape.sqrt(),
            Self::ScaledUniform { halfwidth, .. } => halfwidth / 3.0f64.sqrt(),
        }
    }

    /// The same family rescaled to the given mean.
    pub fn with_mean(&self, new_mean: f64) -> Result<Self> {
        if !(new_mean.is_finite() && new_mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rescaled mean must be positive: {new_mean}"
            )));
        }
        Ok(match self {
            Self::Exponential { .. } => Self::Exponential { rate: 1.0 / new_mean },
            Self::Deterministic { .. } => Self::Deterministic { gap: new_mean },
            Self::ScaledGamma { shape, .. } => Self::ScaledGamma {
                shape: *shape,
                mean: new_mean,
            },
            Self::ScaledUniform { mean, halfwidth } => Self::ScaledUniform {
                mean: new_mean,
                halfwidth: halfwidth * new_mean / mean,
            },
        })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Self::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Self::Deterministic { gap } => *gap,
            Self::ScaledGamma { shape, mean } => {
                let g = Gamma::new(*shape, mean / shape).expect("validated parameters");
                g.sample(rng)
            }
            Self::ScaledUniform { mean, halfwidth } => {
                rng.random_range((mean - halfwidth)..(mean + halfwidth))
            }
        }
    }
}

// --- config encoding ----------------------------------------------------
//
// Both families serialize as a flat map with a "family" tag, e.g.
// {"family": "two_point", "x1": 1.0, "p1": 0.5, "x2": 2.0}.
// Unknown or misplaced keys are rejected.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServiceSpec {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    x1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    atoms: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<f64>,
}

impl ServiceSpec {
    fn empty(family: &str) -> Self {
        Self {
            family: family.into(),
            x1: None,
            p1: None,
            x2: None,
            atoms: None,
            lo: None,
            hi: None,
            x: None,
            rate: None,
            shape: None,
        }
    }
}

impl Serialize for ServiceDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut spec = ServiceSpec::empty("");
        match self {
            Self::TwoPoint { x1, p1, x2 } => {
                spec.family = "two_point".into();
                spec.x1 = Some(*x1);
                spec.p1 = Some(*p1);
                spec.x2 = Some(*x2);
            }
            Self::DiscreteFinite { atoms } => {
                spec.family = "discrete_finite".into();
                spec.atoms = Some(atoms.clone());
            }
            Self::Uniform { lo, hi } => {
                spec.family = "uniform".into();
                spec.lo = Some(*lo);
                spec.hi = Some(*hi);
            }
            Self::Deterministic { x } => {
                spec.family = "deterministic".into();
                spec.x = Some(*x);
            }
            Self::Exponential { rate } => {
                spec.family = "exponential".into();
                spec.rate = Some(*rate);
            }
            Self::BoundedPareto { shape, lo, hi } => {
                spec.family = "bounded_pareto".into();
                spec.shape = Some(*shape);
                spec.lo = Some(*lo);
                spec.hi = Some(*hi);
            }
        }
        spec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ServiceDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = ServiceSpec::deserialize(deserializer)?;
        let fields = [
            ("x1", spec.x1.is_some()),
            ("p1", spec.p1.is_some()),
            ("x2", spec.x2.is_some()),
            ("atoms", spec.atoms.is_some()),
            ("lo", spec.lo.is_some()),
            ("hi", spec.hi.is_some()),
            ("x", spec.x.is_some()),
            ("rate", spec.rate.is_some()),
            ("shape", spec.shape.is_some()),
        ];
        let expect = |wanted: &[&str]| -> std::result::Result<(), D::Error> {
            for (name, present) in fields {
                if present != wanted.contains(&name) {
                    return Err(D::Error::custom(format!(
                        "field `{name}` is {} for service family `{}`",
                        if present { "not allowed" } else { "required" },
                        spec.family
                    )));
                }
            }
            Ok(())
        };
        let dist = match spec.family.as_str() {
            "two_point" => {
                expect(&["x1", "p1", "x2"])?;
                ServiceDistribution::TwoPoint {
                    x1: spec.x1.unwrap(),
                    p1: spec.p1.unwrap(),
                    x2: spec.x2.unwrap(),
                }
            }
            "discrete_finite" => {
                expect(&["atoms"])?;
                ServiceDistribution::DiscreteFinite {
                    atoms: spec.atoms.unwrap(),
                }
            }
            "uniform" => {
                expect(&["lo", "hi"])?;
                ServiceDistribution::Uniform {
                    lo: spec.lo.unwrap(),
                    hi: spec.hi.unwrap(),
                }
            }
            "deterministic" => {
                expect(&["x"])?;
                ServiceDistribution::Deterministic { x: spec.x.unwrap() }
            }
            "exponential" => {
                expect(&["rate"])?;
                ServiceDistribution::Exponential {
                    rate: spec.rate.unwrap(),
                }
            }
            "bounded_pareto" => {
                expect(&["shape", "lo", "hi"])?;
                ServiceDistribution::BoundedPareto {
                    shape: spec.shape.unwrap(),
                    lo: spec.lo.unwrap(),
                    hi: spec.hi.unwrap(),
                }
            }
            other => {
                return Err(D::Error::custom(format!("unknown service family `{other}`")))
            }
        };
        dist.validate().map_err(D::Error::custom)?;
        Ok(dist)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterarrivalSpec {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    halfwidth: Option<f64>,
}

impl Serialize for InterarrivalDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut spec = InterarrivalSpec {
            family: String::new(),
            rate: None,
            gap: None,
            shape: None,
            mean: None,
            halfwidth: None,
        };
        match self {
            Self::Exponential { rate } => {
                spec.family = "exponential".into();
                spec.rate = Some(*rate);
            }
            Self::Deterministic { gap } => {
                spec.family = "deterministic".into();
                spec.gap = Some(*gap);
            }
            Self::ScaledGamma { shape, mean } => {
                spec.family = "scaled_gamma".into();
                spec.shape = Some(*shape);
                spec.mean = Some(*mean);
            }
            Self::ScaledUniform { mean, halfwidth } => {
                spec.family = "scaled_uniform".into();
                spec.mean = Some(*mean);
                spec.halfwidth = Some(*halfwidth);
            }
        }
        spec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for InterarrivalDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = InterarrivalSpec::deserialize(deserializer)?;
        let fields = [
            ("rate", spec.rate.is_some()),
            ("gap", spec.gap.is_some()),
            ("shape", spec.shape.is_some()),
            ("mean", spec.mean.is_some()),
            ("halfwidth", spec.halfwidth.is_some()),
        ];
        let expect = |wanted: &[&str]| -> std::result::Result<(), D::Error> {
            for (name, present) in fields {
                if present != wanted.contains(&name) {
                    return Err(D::Error::custom(format!(
                        "field `{name}` is {} for interarrival family `{}`",
                        if present { "not allowed" } else { "required" },
                        spec.family
                    )));
                }
            }
            Ok(())
        };
        let dist = match spec.family.as_str() {
            "exponential" => {
                expect(&["rate"])?;
                InterarrivalDistribution::Exponential {
                    rate: spec.rate.unwrap(),
                }
            }
            "deterministic" => {
                expect(&["gap"])?;
                InterarrivalDistribution::Deterministic {
                    gap: spec.gap.unwrap(),
                }
            }
            "scaled_gamma" => {
                expect(&["shape", "mean"])?;
                InterarrivalDistribution::ScaledGamma {
                    shape: spec.shape.unwrap(),
                    mean: spec.mean.unwrap(),
                }
            }
            "scaled_uniform" => {
                expect(&["mean", "halfwidth"])?;
                InterarrivalDistribution::ScaledUniform {
                    mean: spec.mean.unwrap(),
                    halfwidth: spec.halfwidth.unwrap(),
                }
            }
            other => {
                return Err(D::Error::custom(format!(
                    "unknown interarrival family `{other}`"
                )))
            }
        };
        dist.validate().map_err(D::Error::custom)?;
        Ok(dist)
    }
}
