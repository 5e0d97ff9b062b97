//! Configurations, permutations, and empirical measures.
//!
//! A [`Configuration`] is an ordered n-tuple of points; an [`AtomicMeasure`]
//! is a finitely supported probability measure kept in canonical form
//! (atoms sorted, equal atoms merged). The empirical constructions map
//! configurations to atomic measures on `S` or on `S^k`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::point::{Point, PointKind};

/// Weight sums must be within this distance of 1.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default cap on the number of tuples enumerated exactly.
pub const DEFAULT_TUPLE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Configuration {
    points: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Configuration {
    type Error = Error;

    fn try_from(points: Vec<Point>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<Configuration> for Vec<Point> {
    fn from(c: Configuration) -> Self {
        c.points
    }
}

impl Configuration {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let Some(first) = points.first() else {
            return invalid("configuration must have at least one point");
        };
        let kind = first.kind();
        if let Some(i) = points.iter().position(|p| p.kind() != kind) {
            return invalid(format!("point {i} has a different kind than point 0"));
        }
        Ok(Self { points })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Point::Scalar(v)).collect())
    }

    pub fn from_vec3(values: &[[f64; 3]]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Point::Vec3(v)).collect())
    }

    pub fn from_symbols(values: &[u32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Point::Symbol(v)).collect())
    }

    /// Phase points in `R^1 x R^1`.
    pub fn from_phase_1d(xs: &[f64], vs: &[f64]) -> Result<Self> {
        if xs.len() != vs.len() {
            return invalid("positions and velocities differ in length");
        }
        Self::new(
            xs.iter()
                .zip(vs)
                .map(|(&x, &v)| Point::Phase { x: vec![x], v: vec![v] })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn kind(&self) -> PointKind {
        self.points[0].kind()
    }

    pub fn scalars(&self) -> Option<Vec<f64>> {
        self.points.iter().map(Point::as_scalar).collect()
    }

    pub fn symbols(&self) -> Option<Vec<u32>> {
        self.points.iter().map(Point::as_symbol).collect()
    }

    pub fn vec3s(&self) -> Option<Vec<[f64; 3]>> {
        self.points
            .iter()
            .map(|p| match p {
                Point::Vec3(v) => Some(*v),
                _ => None,
            })
            .collect()
    }
}

/// A finitely supported probability measure in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightedAtom {
    atom: Point,
    weight: f64,
}

impl Serialize for AtomicMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<WeightedAtom> = self
            .iter()
            .map(|(a, w)| WeightedAtom { atom: a.clone(), weight: w })
            .collect();
        items.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<WeightedAtom>::deserialize(d)?;
        let (atoms, weights) = items.into_iter().map(|w| (w.atom, w.weight)).unzip();
        AtomicMeasure::new(atoms, weights).map_err(serde::de::Error::custom)
    }
}

impl AtomicMeasure {
    /// Builds a measure from weighted atoms, validating the weights and
    /// coalescing repeated atoms.
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return invalid("atoms and weights differ in length");
        }
        if atoms.is_empty() {
            return invalid("measure must have at least one atom");
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return invalid(format!("weight {w} is negative or not finite"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return invalid(format!("weights sum to {sum}, not 1"));
        }
        let kind = atoms[0].kind();
        if atoms.iter().any(|a| a.kind() != kind) {
            return invalid("atoms of different kinds");
        }
        Ok(Self::coalesce(atoms, weights))
    }

    /// Renormalizes nonnegative masses to sum 1 before building.
    pub fn from_masses(atoms: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return invalid("total mass must be positive and finite");
        }
        let weights = masses.iter().map(|m| m / total).collect();
        Self::new(atoms, weights)
    }

    pub fn dirac(atom: Point) -> Self {
        Self { atoms: vec![atom], weights: vec![1.0] }
    }

    /// Uniform measure on the given points (with multiplicity).
    pub fn uniform(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return invalid("uniform measure over no points");
        }
        let kind = points[0].kind();
        if points.iter().any(|a| a.kind() != kind) {
            return invalid("atoms of different kinds");
        }
        let mut sorted: Vec<&Point> = points.iter().collect();
        sorted.sort();
        let n = points.len() as f64;
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            atoms.push(sorted[i].clone());
            weights.push((j - i) as f64 / n);
            i = j;
        }
        Ok(Self { atoms, weights })
    }

    fn coalesce(atoms: Vec<Point>, weights: Vec<f64>) -> Self {
        let mut pairs: Vec<(Point, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut atoms: Vec<Point> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            if atoms.last() == Some(&a) {
                *weights.last_mut().unwrap() += w;
            } else {
                atoms.push(a);
                weights.push(w);
            }
        }
        // Zero-weight atoms are not part of the support.
        let (atoms, weights): (Vec<_>, Vec<_>) =
            atoms.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).unzip();
        Self { atoms, weights }
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn kind(&self) -> PointKind {
        self.atoms[0].kind()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Mass of a single atom (0 if it is not in the support).
    pub fn mass_of(&self, atom: &Point) -> f64 {
        self.atoms
            .binary_search(atom)
            .map(|i| self.weights[i])
            .unwrap_or(0.0)
    }

    /// Integral of `f` against the measure.
    pub fn integrate(&self, mut f: impl FnMut(&Point) -> f64) -> f64 {
        self.iter().map(|(a, w)| w * f(a)).sum()
    }

    /// Product measure on tuples, `self ⊗ other`, flattening nested tuples
    /// only at the outer level.
    pub fn product(&self, other: &AtomicMeasure) -> AtomicMeasure {
        let mut atoms = Vec::with_capacity(self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (a, wa) in self.iter() {
            for (b, wb) in other.iter() {
                let mut parts = match a {
                    Point::Tuple(p) => p.clone(),
                    _ => vec![a.clone()],
                };
                parts.push(b.clone());
                atoms.push(Point::Tuple(parts));
                weights.push(wa * wb);
            }
        }
        Self::coalesce(atoms, weights)
    }

    /// k-fold product measure on `S^k` (tuples of length k).
    pub fn power(&self, k: usize) -> Result<AtomicMeasure> {
        if k == 0 {
            return invalid("power k must be at least 1");
        }
        let mut out = AtomicMeasure {
            atoms: self.atoms.iter().map(|a| Point::Tuple(vec![a.clone()])).collect(),
            weights: self.weights.clone(),
        };
        for _ in 1..k {
            out = out.product(self);
        }
        Ok(out)
    }

    /// `count` independent draws, by inverse CDF over the atoms.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Point> {
        let mut cdf = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cdf.push(acc);
        }
        (0..count)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let i = cdf.partition_point(|&c| c <= u).min(self.len() - 1);
                self.atoms[i].clone()
            })
            .collect()
    }

    /// Pushes the measure forward through `f`, re-coalescing.
    pub fn map(&self, f: impl Fn(&Point) -> Point) -> Result<AtomicMeasure> {
        Self::new(self.atoms.iter().map(f).collect(), self.weights.clone())
    }
}

/// `ε_n(s) = (1/n) Σ δ(s_i)`.
pub fn empirical_measure(config: &Configuration) -> AtomicMeasure {
    AtomicMeasure::uniform(config.points()).expect("configurations are nonempty and homogeneous")
}

/// How k-tuple empirical measures are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TupleOptions {
    /// Maximum number of tuples enumerated exactly.
    pub cap: u64,
    /// Sample budget used when the count exceeds `cap`; without one the
    /// construction fails with a capacity error.
    pub mc_samples: Option<usize>,
}

impl Default for TupleOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_TUPLE_CAP, mc_samples: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TupleMode {
    Enumerated,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleMeasure {
    pub measure: AtomicMeasure,
    pub mode: TupleMode,
}

fn falling_factorial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(u128::from(n - i)))
}

fn check_k(config: &Configuration, k: usize) -> Result<()> {
    if k == 0 || k > config.len() {
        return invalid(format!("k = {k} must satisfy 1 <= k <= n = {}", config.len()));
    }
    Ok(())
}

fn tuple_of(points: &[Point], idx: &[usize]) -> Point {
    Point::Tuple(idx.iter().map(|&i| points[i].clone()).collect())
}

/// `ε_{n:k}(s)`: empirical measure of k-tuples sampled without replacement.
pub fn empirical_k_without_replacement<R: Rng + ?Sized>(
    config: &Configuration,
    k: usize,
    opts: &TupleOptions,
    rng: &mut R,
) -> Result<TupleMeasure> {
    check_k(config, k)?;
    let n = config.len();
    let count = falling_factorial(n as u64, k as u64);
    let pts = config.points();
    if count <= u128::from(opts.cap) {
        let mut tuples = Vec::with_capacity(count as usize);
        let mut idx = Vec::with_capacity(k);
        let mut used = vec![false; n];
        enumerate_injections(n, k, &mut idx, &mut used, &mut |ix| tuples.push(tuple_of(pts, ix)));
        return Ok(TupleMeasure {
            measure: AtomicMeasure::uniform(&tuples)?,
            mode: TupleMode::Enumerated,
        });
    }
    let Some(samples) = opts.mc_samples.filter(|&s| s > 0) else {
        return Err(Error::Capacity { what: "injections", needed: count, cap: u128::from(opts.cap) });
    };
    let mut tuples = Vec::with_capacity(samples);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..samples {
        let (head, _) = order.partial_shuffle(rng, k);
        tuples.push(tuple_of(pts, head));
    }
    Ok(TupleMeasure { measure: AtomicMeasure::uniform(&tuples)?, mode: TupleMode::MonteCarlo })
}

fn enumerate_injections(
    n: usize,
    k: usize,
    idx: &mut Vec<usize>,
    used: &mut [bool],
    emit: &mut dyn FnMut(&[usize]),
) {
    if idx.len() == k {
        emit(idx);
        return;
    }
    for i in 0..n {
        if !used[i] {
            used[i] = true;
            idx.push(i);
            enumerate_injections(n, k, idx, used, emit);
            idx.pop();
            used[i] = false;
        }
    }
}

/// `ϑ_{n:k}(s) = ε_n(s)^{⊗k}`: empirical measure of all k-tuples.
pub fn empirical_k_with_replacement<R: Rng + ?Sized>(
    config: &Configuration,
    k: usize,
    opts: &TupleOptions,
    rng: &mut R,
) -> Result<TupleMeasure> {
    check_k(config, k)?;
    let n = config.len();
    let count = (0..k).fold(1u128, |acc, _| acc.saturating_mul(n as u128));
    if count <= u128::from(opts.cap) {
        // Enumerate over distinct atoms with integer multiplicities, so every
        // weight is one exact product divided once by n^k.
        let mut sorted: Vec<&Point> = config.points().iter().collect();
        sorted.sort();
        let mut distinct: Vec<(&Point, u128)> = Vec::new();
        for p in sorted {
            match distinct.last_mut() {
                Some((q, c)) if *q == p => *c += 1,
                _ => distinct.push((p, 1)),
            }
        }
        let total = count as f64;
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; k];
        loop {
            let mult: u128 = idx.iter().map(|&i| distinct[i].1).product();
            atoms.push(Point::Tuple(idx.iter().map(|&i| distinct[i].0.clone()).collect()));
            weights.push(mult as f64 / total);
            let mut j = k;
            loop {
                if j == 0 {
                    return Ok(TupleMeasure {
                        measure: AtomicMeasure::new(atoms, weights)?,
                        mode: TupleMode::Enumerated,
                    });
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < distinct.len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
    let Some(samples) = opts.mc_samples.filter(|&s| s > 0) else {
        return Err(Error::Capacity { what: "maps", needed: count, cap: u128::from(opts.cap) });
    };
    let pts = config.points();
    let tuples: Vec<Point> = (0..samples)
        .map(|_| Point::Tuple((0..k).map(|_| pts[rng.random_range(0..n)].clone()).collect()))
        .collect();
    Ok(TupleMeasure { measure: AtomicMeasure::uniform(&tuples)?, mode: TupleMode::MonteCarlo })
}

/// Applies a permutation: coordinate `i` of the result is coordinate
/// `perm[i]` of the input. `perm` is 0-based.
pub fn permute(config: &Configuration, perm: &[usize]) -> Result<Configuration> {
    let n = config.len();
    if perm.len() != n {
        return invalid(format!("permutation has length {}, configuration {n}", perm.len()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return invalid("not a permutation");
        }
        seen[p] = true;
    }
    Configuration::new(perm.iter().map(|&p| config.points()[p].clone()).collect())
}

/// A uniformly random configuration whose empirical measure is `mu`.
/// Every weight of `mu` must be a multiple of `1/n`.
pub fn random_preimage<R: Rng + ?Sized>(
    mu: &AtomicMeasure,
    n: usize,
    rng: &mut R,
) -> Result<Configuration> {
    if n == 0 {
        return invalid("n must be positive");
    }
    let tol = 1e-9 / n as f64;
    let mut points = Vec::with_capacity(n);
    for (a, w) in mu.iter() {
        let copies = (w * n as f64).round();
        if (w - copies / n as f64).abs() > tol {
            return invalid(format!("weight {w} is not a multiple of 1/{n}"));
        }
        points.extend(std::iter::repeat_n(a.clone(), copies as usize));
    }
    if points.len() != n {
        return invalid(format!("weights give {} points, expected {n}", points.len()));
    }
    points.shuffle(rng);
    Configuration::new(points)
}
