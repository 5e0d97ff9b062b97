//! Replica-based estimators for chaoticity and propagation of chaos.
//!
//! Every estimator works on a [`ReplicaEnsemble`]: R independent n-particle
//! configurations, typically samples of the law at time `t`. Indices are
//! always drawn at random, so the estimators are symmetric in distribution
//! under permutations inside a replica.

mod initial;
mod report;

pub use initial::{InitialFamily, InitialLaw};
pub use report::{
    diagnose, propagation_sweep, run_ensemble, run_replica, CellReport, DiagnosticsReport, Marginals, SweepOptions, Verdict,
    NON_CHAOTIC_FLAG,
};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::TestFunction;
use crate::empirical::{empirical_measure, AtomicMeasure, Configuration};
use crate::error::{invalid, Error, Result};
use crate::metrics::{bl_distance, DistanceResult, MetricOptions};
use crate::point::{Point, PointKind};

/// R configurations of equal length and kind, with the metadata of the run
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaEnsemble {
    runs: Vec<Configuration>,
    pub kernel: String,
    pub t: f64,
    pub seed: u64,
}

impl ReplicaEnsemble {
    pub fn new(runs: Vec<Configuration>, kernel: impl Into<String>, t: f64, seed: u64) -> Result<Self> {
        if runs.len() < 2 {
            return invalid(format!("an ensemble needs at least 2 replicas, got {}", runs.len()));
        }
        let (n, kind) = (runs[0].len(), runs[0].kind());
        if let Some(r) = runs.iter().position(|c| c.len() != n || c.kind() != kind) {
            return invalid(format!("replica {r} differs in length or state space from replica 0"));
        }
        Ok(Self { runs, kernel: kernel.into(), t, seed })
    }

    pub fn runs(&self) -> &[Configuration] {
        &self.runs
    }

    pub fn replicas(&self) -> usize {
        self.runs.len()
    }

    pub fn n(&self) -> usize {
        self.runs[0].len()
    }

    pub fn kind(&self) -> PointKind {
        self.runs[0].kind()
    }
}

/// Covariance estimate with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacCov {
    pub est: f64,
    pub se: f64,
    pub replicas: usize,
}

/// Mean distance over replicas with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub mean: f64,
    pub se: f64,
    pub replicas: usize,
}

/// Sums shifted by the first value, so that constant data give exact
/// means and leave-one-out means.
struct ShiftedSum {
    shift: f64,
    sum: f64,
    len: usize,
}

impl ShiftedSum {
    fn new(xs: &[f64]) -> Self {
        let shift = xs[0];
        Self { shift, sum: xs.iter().map(|x| x - shift).sum(), len: xs.len() }
    }

    fn mean(&self) -> f64 {
        self.shift + self.sum / self.len as f64
    }

    fn mean_without(&self, x: f64) -> f64 {
        self.shift + (self.sum - (x - self.shift)) / (self.len - 1) as f64
    }
}

/// Estimates `E[g1(s_i) g2(s_j)] − E[g1(s)] E[g2(s)]` for `i ≠ j`.
///
/// Each replica contributes the cross product at one uniformly random
/// ordered pair and one value of each function at fresh uniform indices;
/// the estimate is the mean cross product minus the product of the single
/// means. The standard error is the leave-one-replica-out jackknife.
pub fn kac_pair_test<R: Rng + ?Sized>(
    ensemble: &ReplicaEnsemble,
    g1: &TestFunction,
    g2: &TestFunction,
    rng: &mut R,
) -> Result<KacCov> {
    let n = ensemble.n();
    if n < 2 {
        return invalid("the pair test needs at least two particles per replica");
    }
    let r = ensemble.replicas();
    let (mut cross, mut a, mut b) = (Vec::with_capacity(r), Vec::with_capacity(r), Vec::with_capacity(r));
    for run in ensemble.runs() {
        let p = run.points();
        let pair = sample_indices(rng, n, 2);
        cross.push(g1.eval_point(&p[pair.index(0)]) * g2.eval_point(&p[pair.index(1)]));
        a.push(g1.eval_point(&p[rng.random_range(0..n)]));
        b.push(g2.eval_point(&p[rng.random_range(0..n)]));
    }
    let (sc, sa, sb) = (ShiftedSum::new(&cross), ShiftedSum::new(&a), ShiftedSum::new(&b));
    let est = sc.mean() - sa.mean() * sb.mean();
    let loo: Vec<f64> =
        (0..r).map(|i| sc.mean_without(cross[i]) - sa.mean_without(a[i]) * sb.mean_without(b[i])).collect();
    let lm = ShiftedSum::new(&loo).mean();
    let ss: f64 = loo.iter().map(|x| (x - lm) * (x - lm)).sum();
    let se = ((r - 1) as f64 / r as f64 * ss).sqrt();
    Ok(KacCov { est, se, replicas: r })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let mean = ShiftedSum::new(xs).mean();
    let r = xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Mean over replicas of `BL*(ε_n(run), reference)`.
pub fn concentration_test(
    ensemble: &ReplicaEnsemble,
    reference: &AtomicMeasure,
    opts: &MetricOptions,
) -> Result<Concentration> {
    let d = ensemble
        .runs()
        .iter()
        .enumerate()
        .map(|(i, run)| {
            bl_distance(&empirical_measure(run), reference, opts)
                .map(|r| r.value)
                .map_err(|e| with_context(e, &format!("replica {i}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, se) = mean_and_se(&d);
    Ok(Concentration { mean, se, replicas: ensemble.replicas() })
}

fn with_context(e: Error, what: &str) -> Error {
    match e {
        Error::Capacity { .. } => Error::Solver(format!("{what}: {e}")),
        e => e,
    }
}

/// Empirical law of one uniformly random injection `(s_{i_1}, …, s_{i_k})`
/// per replica; plain points for `k = 1`, tuples otherwise.
pub fn marginal_sample<R: Rng + ?Sized>(ensemble: &ReplicaEnsemble, k: usize, rng: &mut R) -> Result<AtomicMeasure> {
    if !(1..=ensemble.n()).contains(&k) {
        return invalid(format!("marginal order {k} must lie in 1..={}", ensemble.n()));
    }
    let points = ensemble
        .runs()
        .iter()
        .map(|run| {
            let idx = sample_indices(rng, run.len(), k);
            if k == 1 {
                run.points()[idx.index(0)].clone()
            } else {
                Point::Tuple(idx.iter().map(|i| run.points()[i].clone()).collect())
            }
        })
        .collect();
    Ok(empirical_measure(&Configuration::new(points)?))
}

fn power_of(reference: &AtomicMeasure, k: usize) -> Result<AtomicMeasure> {
    if k == 1 {
        Ok(reference.clone())
    } else {
        reference.power(k)
    }
}

/// `BL*` between the sampled k-marginal and `reference^{⊗k}` (max metric on
/// tuples), for `k ∈ {1, 2, 3}`.
pub fn marginal_product_distance<R: Rng + ?Sized>(
    ensemble: &ReplicaEnsemble,
    k: usize,
    reference: &AtomicMeasure,
    rng: &mut R,
    opts: &MetricOptions,
) -> Result<DistanceResult> {
    if !(1..=3).contains(&k) {
        return invalid(format!("marginal order must be 1, 2 or 3, got {k}"));
    }
    let sample = marginal_sample(ensemble, k, rng)?;
    bl_distance(&sample, &power_of(reference, k)?, opts)
}

/// Smallest `BL*` from the sampled k-marginal to `ν^{⊗k}` over the
/// candidate laws `ν`, with the index of the minimizer.
pub fn nearest_product_distance<R: Rng + ?Sized>(
    ensemble: &ReplicaEnsemble,
    k: usize,
    candidates: &[AtomicMeasure],
    rng: &mut R,
    opts: &MetricOptions,
) -> Result<(f64, usize)> {
    if candidates.is_empty() {
        return invalid("no candidate product laws");
    }
    let sample = marginal_sample(ensemble, k, rng)?;
    let mut best = (f64::INFINITY, 0);
    for (i, c) in candidates.iter().enumerate() {
        let d = bl_distance(&sample, &power_of(c, k)?, opts)?.value;
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best)
}

/// All coordinates of all replicas pooled: the average of the replicas'
/// empirical measures, an estimate of the one-particle marginal.
pub fn pooled_marginal(ensemble: &ReplicaEnsemble) -> Result<AtomicMeasure> {
    let points: Vec<Point> = ensemble.runs().iter().flat_map(|r| r.points().iter().cloned()).collect();
    Ok(empirical_measure(&Configuration::new(points)?))
}
