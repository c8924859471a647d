//! Finite nonnegative point measures on the half line `[0, inf)`.
//!
//! A measure is a list of `(location, weight)` atoms with finite nonnegative
//! locations and strictly positive finite weights. Unit weights represent
//! jobs; fractional weights arise from diffusion scaling of the mass. The
//! zero measure is the empty atom list.
//!
//! Integration `<g, xi> = sum_i w_i g(x_i)` is exact, and the
//! bounded-Lipschitz distance (which metrizes weak convergence on finite
//! measures) is computed exactly on atom sets by a chain dynamic program.

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A finite point measure on `[0, inf)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointMeasure {
    atoms: Vec<(f64, f64)>,
}

/// Mass and first moment of a measure split at a truncation level `x`:
/// the `below` parts integrate over the closed interval `[0, x]`, the
/// `above` parts over the open ray `(x, inf)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TruncatedStats {
    pub mass_below: f64,
    pub work_below: f64,
    pub mass_above: f64,
    pub work_above: f64,
}

fn check_atom(location: f64, weight: f64) -> Result<()> {
    if !location.is_finite() || location < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "atom location must be finite and nonnegative, got {location}"
        )));
    }
    if !weight.is_finite() || weight <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "atom weight must be finite and positive, got {weight}"
        )));
    }
    Ok(())
}

impl PointMeasure {
    /// The zero measure.
    pub fn zero() -> Self {
        Self { atoms: Vec::new() }
    }

    /// Unit mass at `location`.
    pub fn dirac(location: f64) -> Self {
        assert!(location.is_finite() && location >= 0.0);
        Self {
            atoms: vec![(location, 1.0)],
        }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut m = Self::zero();
        for (x, w) in atoms {
            m.push(x, w)?;
        }
        Ok(m)
    }

    /// Measure with one unit atom per location (jobs with the given residuals).
    pub fn from_unit_locations(locations: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::from_atoms(locations.into_iter().map(|x| (x, 1.0)))
    }

    /// Builder-style append of one atom.
    pub fn push(&mut self, location: f64, weight: f64) -> Result<()> {
        check_atom(location, weight)?;
        self.atoms.push((location, weight));
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms in insertion order.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Atoms sorted by location (ties kept in insertion order).
    pub fn sorted_atoms(&self) -> Vec<(f64, f64)> {
        let mut v = self.atoms.clone();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    /// `<g, xi> = sum_i w_i g(x_i)`; zero for the zero measure.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(x, w)| w * g(x)).sum()
    }

    /// Total mass `<1, xi>`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    /// First moment `<chi, xi>`.
    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|&(x, w)| w * x).sum()
    }

    /// Mass and work split at level `x >= 0`; `below` uses `[0, x]` (closed
    /// at the right endpoint), `above` uses `(x, inf)`.
    pub fn truncated_stats(&self, x: f64) -> TruncatedStats {
        assert!(x >= 0.0, "truncation level must be nonnegative");
        let mut s = TruncatedStats::default();
        for &(loc, w) in &self.atoms {
            if loc <= x {
                s.mass_below += w;
                s.work_below += w * loc;
            } else {
                s.mass_above += w;
                s.work_above += w * loc;
            }
        }
        s
    }

    /// Same locations with every weight multiplied by `c > 0`.
    pub fn scale_mass(&self, c: f64) -> PointMeasure {
        assert!(c.is_finite() && c > 0.0, "mass scale factor must be positive");
        PointMeasure {
            atoms: self.atoms.iter().map(|&(x, w)| (x, w * c)).collect(),
        }
    }

    /// Atom-list sum of two measures.
    pub fn merged(&self, other: &PointMeasure) -> PointMeasure {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        PointMeasure { atoms }
    }

    /// Bounded-Lipschitz distance
    /// `sup { |<g, xi> - <g, zeta>| : |g| <= 1, Lip(g) <= 1 }`,
    /// computed exactly on the merged atom set.
    ///
    /// An optimal test function can be taken piecewise linear with nodes at
    /// the atom locations, so the supremum is a finite linear program over
    /// the node values with chain constraints `|g_{i+1} - g_i| <= x_{i+1} - x_i`
    /// and box constraints `|g_i| <= 1`. The program is solved by a dynamic
    /// program over concave piecewise-linear value functions.
    pub fn bl_distance(&self, other: &PointMeasure) -> f64 {
        let diff = signed_difference(self, other);
        if diff.is_empty() {
            return 0.0;
        }
        chain_lp_max(&diff)
    }
}

/// Consolidated signed atom list of `a - b`, sorted by location, exact-zero
/// weights dropped.
fn signed_difference(a: &PointMeasure, b: &PointMeasure) -> Vec<(f64, f64)> {
    let mut all: Vec<(f64, f64)> = a
        .atoms
        .iter()
        .copied()
        .chain(b.atoms.iter().map(|&(x, w)| (x, -w)))
        .collect();
    all.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(all.len());
    for (x, w) in all {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => out.push((x, w)),
        }
    }
    out.retain(|&(_, w)| w != 0.0);
    out
}

/// Maximize `sum_i c_i g_i` subject to `|g_i| <= 1` and
/// `|g_{i+1} - g_i| <= x_{i+1} - x_i` for atoms `(x_i, c_i)` sorted by `x`.
fn chain_lp_max(atoms: &[(f64, f64)]) -> f64 {
    let mut value = Pl::linear(atoms[0].1);
    for i in 1..atoms.len() {
        let gap = atoms[i].0 - atoms[i - 1].0;
        value = value.window_max(gap);
        value.add_linear(atoms[i].1);
    }
    value.max().0
}

/// Concave piecewise-linear function on `[-1, 1]`, stored as knots with
/// strictly increasing abscissae; linear between knots.
struct Pl {
    knots: Vec<(f64, f64)>,
}

impl Pl {
    /// The function `v -> c * v` on `[-1, 1]`.
    fn linear(c: f64) -> Pl {
        Pl {
            knots: vec![(-1.0, -c), (1.0, c)],
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        for w in k.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x <= x1 {
                let t = (x - x0) / (x1 - x0);
                return y0 + t * (y1 - y0);
            }
        }
        unreachable!("knot abscissae cover the query point")
    }

    /// Maximum value and the knot interval `[p, q]` attaining it.
    fn max(&self) -> (f64, f64, f64) {
        let ymax = self
            .knots
            .iter()
            .map(|&(_, y)| y)
            .fold(f64::NEG_INFINITY, f64::max);
        let p = self
            .knots
            .iter()
            .find(|&&(_, y)| y == ymax)
            .map(|&(x, _)| x)
            .unwrap();
        let q = self
            .knots
            .iter()
            .rev()
            .find(|&&(_, y)| y == ymax)
            .map(|&(x, _)| x)
            .unwrap();
        (ymax, p, q)
    }

    /// `v -> max { f(u) : |u - v| <= d }`, restricted back to `[-1, 1]`.
    fn window_max(&self, d: f64) -> Pl {
        debug_assert!(d >= 0.0);
        let (ymax, p, q) = self.max();
        // Rising knots shift left by d, falling knots shift right by d, and
        // the top flattens over [p - d, q + d].
        let mut wide: Vec<(f64, f64)> = Vec::with_capacity(self.knots.len() + 2);
        for &(x, y) in self.knots.iter().filter(|&&(x, _)| x < p) {
            wide.push((x - d, y));
        }
        wide.push((p - d, ymax));
        if q + d > p - d {
            wide.push((q + d, ymax));
        }
        for &(x, y) in self.knots.iter().filter(|&&(x, _)| x > q) {
            wide.push((x + d, y));
        }
        // Clip the domain to [-1, 1].
        let widened = Pl { knots: wide };
        let mut knots = vec![(-1.0, widened.eval(-1.0))];
        knots.extend(
            widened
                .knots
                .iter()
                .copied()
                .filter(|&(x, _)| x > -1.0 && x < 1.0),
        );
        knots.push((1.0, widened.eval(1.0)));
        Pl { knots }
    }

    fn add_linear(&mut self, c: f64) {
        for (x, y) in &mut self.knots {
            *y += c * *x;
        }
    }
}

impl Serialize for PointMeasure {
    /// JSON array of `[location, weight]` pairs, sorted by location.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let sorted = self.sorted_atoms();
        let mut seq = serializer.serialize_seq(Some(sorted.len()))?;
        for (x, w) in sorted {
            seq.serialize_element(&[x, w])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for PointMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = PointMeasure;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a sequence of [location, weight] pairs")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<PointMeasure, A::Error> {
                let mut m = PointMeasure::zero();
                while let Some([x, w]) = seq.next_element::<[f64; 2]>()? {
                    m.push(x, w).map_err(de::Error::custom)?;
                }
                Ok(m)
            }
        }
        deserializer.deserialize_seq(V)
    }
}
