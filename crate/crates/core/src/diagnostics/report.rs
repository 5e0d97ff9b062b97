//! Propagation sweeps along an n-ladder and their reports.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    concentration_test, kac_pair_test, marginal_product_distance, Concentration, InitialFamily, KacCov,
    ReplicaEnsemble,
};
use crate::dictionary::{dictionary, TestFunction};
use crate::empirical::AtomicMeasure;
use crate::error::{invalid, Error, Result};
use crate::meanfield::quantize;
use crate::metrics::{MetricOptions, Method};
use crate::processes::{RunOutcome, TransitionKernel};
use crate::stream::RandomStream;

/// Report-level flag raised when concentration fails along the ladder.
pub const NON_CHAOTIC_FLAG: &str = "non-chaotic output detected";

/// A chaotic verdict needs the last concentration mean at or below this
/// fraction of the first.
const DECAY_FRACTION: f64 = 0.6;
/// Means at or below this count as exact concentration.
const EXACT_ZERO: f64 = 1e-12;

const TAG_INIT: u64 = 1;
const TAG_RUN: u64 = 2;
const TAG_EST: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub metric: MetricOptions,
    /// Test functions for the pair covariance.
    pub g1: TestFunction,
    pub g2: TestFunction,
    /// Atoms kept in a continuous reference before forming its k-fold
    /// product for the k ≥ 2 marginal.
    pub product_atoms: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        let g = dictionary()[2];
        Self { metric: MetricOptions::default(), g1: g, g2: g, product_atoms: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Marginals {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
}

/// Diagnostics of one ladder cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub replicas: usize,
    pub kac_cov: Option<KacCov>,
    pub concentration: Option<Concentration>,
    pub marginal: Marginals,
    pub flags: Vec<String>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Chaotic,
    NonChaotic,
    /// Some cell has no concentration estimate.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub kernel: String,
    pub initial: String,
    pub t: f64,
    pub seed: u64,
    pub replicas: usize,
    pub ladder: Vec<CellReport>,
    pub modes: Vec<String>,
    pub flags: Vec<String>,
}

impl DiagnosticsReport {
    /// Chaotic if every concentration mean is (numerically) zero, or the
    /// means strictly decrease and the last is at most 0.6 of the first.
    pub fn verdict(&self) -> Verdict {
        let means: Option<Vec<f64>> = self.ladder.iter().map(|c| c.concentration.map(|x| x.mean)).collect();
        let Some(means) = means else { return Verdict::Undetermined };
        if means.is_empty() {
            return Verdict::Undetermined;
        }
        let zero = means.iter().all(|&m| m <= EXACT_ZERO);
        let decaying = means.windows(2).all(|w| w[1] < w[0]) && means[means.len() - 1] <= DECAY_FRACTION * means[0];
        if zero || decaying {
            Verdict::Chaotic
        } else {
            Verdict::NonChaotic
        }
    }

    pub fn has_errors(&self) -> bool {
        self.ladder.iter().any(|c| !c.errors.is_empty())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad report JSON: {e}")))
    }

    /// One row per (n, metric): `n,metric,value,se,replicas`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,metric,value,se,replicas\n");
        for c in &self.ladder {
            if let Some(k) = c.kac_cov {
                let _ = writeln!(out, "{},kac_cov,{:?},{:?},{}", c.n, k.est, k.se, k.replicas);
            }
            if let Some(k) = c.concentration {
                let _ = writeln!(out, "{},concentration,{:?},{:?},{}", c.n, k.mean, k.se, k.replicas);
            }
            for (name, v) in [("marginal_k1", c.marginal.k1), ("marginal_k2", c.marginal.k2)] {
                if let Some(v) = v {
                    let _ = writeln!(out, "{},{name},{v:?},,{}", c.n, c.replicas);
                }
            }
        }
        out
    }

    /// A short human-readable table with the verdict on the last line.
    pub fn summary(&self) -> String {
        let mut out = format!("kernel {} | initial {} | t = {} | R = {} | seed {}\n", self.kernel, self.initial, self.t, self.replicas, self.seed);
        let _ = writeln!(out, "{:>8}  {:>22}  {:>22}  {:>10}  {:>10}", "n", "kac cov (se)", "BL* to ref (se)", "k=1", "k=2");
        let num = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        for c in &self.ladder {
            let kac = c.kac_cov.map_or("-".into(), |k| format!("{:.4} ({:.4})", k.est, k.se));
            let conc = c.concentration.map_or("-".into(), |k| format!("{:.4} ({:.4})", k.mean, k.se));
            let _ = writeln!(out, "{:>8}  {:>22}  {:>22}  {:>10}  {:>10}", c.n, kac, conc, num(c.marginal.k1), num(c.marginal.k2));
            for e in &c.errors {
                let _ = writeln!(out, "{:>8}  error: {e}", "");
            }
        }
        let verdict = match self.verdict() {
            Verdict::Chaotic => "chaos consistent along the ladder".to_string(),
            Verdict::NonChaotic => NON_CHAOTIC_FLAG.to_string(),
            Verdict::Undetermined => "undetermined (cells failed)".to_string(),
        };
        let _ = writeln!(out, "verdict: {verdict}");
        out
    }
}

/// Replica `r` of the `(seed, n)` sweep cell: its initial draw and kernel
/// run, each from its own stream.
pub fn run_replica(
    kernel: &TransitionKernel,
    initial: &InitialFamily,
    n: usize,
    t: f64,
    seed: u64,
    r: usize,
) -> Result<RunOutcome> {
    let mut init = RandomStream::derived(seed, &[TAG_INIT, n as u64, r as u64]);
    let start = initial.draw(n, &mut init)?;
    let mut rng = RandomStream::derived(seed, &[TAG_RUN, n as u64, r as u64]);
    kernel.run(&start, t, &mut rng).map_err(|e| match e {
        Error::NumericBlowup { step, detail } => Error::NumericBlowup { step, detail: format!("replica {r}: {detail}") },
        e => e,
    })
}

/// Draws R initial configurations of size `n` and runs the kernel on each,
/// replicas in parallel with one stream per (purpose, n, replica).
pub fn run_ensemble(
    kernel: &TransitionKernel,
    initial: &InitialFamily,
    n: usize,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<(ReplicaEnsemble, Vec<String>)> {
    let outcomes: Vec<Result<_>> = (0..replicas)
        .into_par_iter()
        .map(|r| run_replica(kernel, initial, n, t, seed, r))
        .collect();
    let mut runs = Vec::with_capacity(replicas);
    let mut flags = Vec::new();
    for o in outcomes {
        let o = o?;
        for f in o.flags {
            if !flags.contains(&f) {
                flags.push(f);
            }
        }
        runs.push(o.config);
    }
    Ok((ReplicaEnsemble::new(runs, kernel.to_string(), t, seed)?, flags))
}

/// Diagnostics of one ensemble against `reference`. Estimator randomness
/// comes from the `(seed, n)` estimator stream.
pub fn diagnose(ensemble: &ReplicaEnsemble, reference: &AtomicMeasure, opts: &SweepOptions, seed: u64) -> CellReport {
    let n = ensemble.n();
    let mut cell = CellReport {
        n,
        replicas: ensemble.replicas(),
        kac_cov: None,
        concentration: None,
        marginal: Marginals::default(),
        flags: vec![],
        errors: vec![],
    };
    let mut rng = RandomStream::derived(seed, &[TAG_EST, n as u64]);
    match kac_pair_test(ensemble, &opts.g1, &opts.g2, &mut rng) {
        Ok(k) => cell.kac_cov = Some(k),
        Err(e) => cell.errors.push(format!("kac pair test: {e}")),
    }
    match concentration_test(ensemble, reference, &opts.metric) {
        Ok(c) => cell.concentration = Some(c),
        Err(e) => cell.errors.push(format!("concentration: {e}")),
    }
    for k in [1, 2] {
        let r = if k >= 2 && reference.kind().real_dim().is_some() && reference.len() > opts.product_atoms {
            quantize(reference, opts.product_atoms).inspect(|_| {
                cell.flags.push(format!("marginal k={k}: reference quantized to {} atoms", opts.product_atoms));
            })
        } else {
            Ok(reference.clone())
        };
        match r.and_then(|r| marginal_product_distance(ensemble, k, &r, &mut rng, &opts.metric)) {
            Ok(d) => {
                if d.method == Method::MonteCarlo {
                    cell.flags.push(format!("marginal k={k}: dictionary lower bound"));
                }
                if k == 1 {
                    cell.marginal.k1 = Some(d.value);
                } else {
                    cell.marginal.k2 = Some(d.value);
                }
            }
            Err(e) => cell.errors.push(format!("marginal k={k}: {e}")),
        }
    }
    cell
}

/// For each n of the ladder: R initial draws, a kernel run to time `t`,
/// and the diagnostics of [`diagnose`]. Failures are recorded in the cell
/// and the sweep moves on.
#[allow(clippy::too_many_arguments)]
pub fn propagation_sweep(
    kernel: &TransitionKernel,
    initial: &InitialFamily,
    ladder: &[usize],
    t: f64,
    replicas: usize,
    seed: u64,
    reference: &AtomicMeasure,
    opts: &SweepOptions,
) -> Result<DiagnosticsReport> {
    if replicas < 2 {
        return invalid(format!("a sweep needs at least 2 replicas, got {replicas}"));
    }
    if ladder.is_empty() {
        return invalid("empty n-ladder");
    }
    initial.validate()?;
    let mut report = DiagnosticsReport {
        kernel: kernel.to_string(),
        initial: initial.to_string(),
        t,
        seed,
        replicas,
        ladder: Vec::with_capacity(ladder.len()),
        modes: kernel.modes(),
        flags: vec![],
    };
    for &n in ladder {
        let cell = match run_ensemble(kernel, initial, n, t, replicas, seed) {
            Ok((ens, run_flags)) => {
                let mut cell = diagnose(&ens, reference, opts, seed);
                cell.flags.splice(0..0, run_flags);
                cell
            }
            Err(e) => CellReport {
                n,
                replicas,
                kac_cov: None,
                concentration: None,
                marginal: Marginals::default(),
                flags: vec![],
                errors: vec![format!("run: {e}")],
            },
        };
        report.ladder.push(cell);
    }
    if report.verdict() == Verdict::NonChaotic {
        report.flags.push(NON_CHAOTIC_FLAG.to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::InitialLaw;
    use crate::point::Point;
    use crate::processes::{Diffusion, Drift};

    fn delta0() -> AtomicMeasure {
        AtomicMeasure::dirac(Point::Symbol(0))
    }

    #[test]
    fn counterexample_all_zeros_stays_at_delta0() {
        let fam = InitialFamily::PureAtomic(InitialLaw::Bernoulli { p: 0.0 });
        let rep =
            propagation_sweep(&TransitionKernel::Counterexample, &fam, &[8, 16, 32], 1.0, 20, 1, &delta0(), &SweepOptions::default())
                .unwrap();
        assert!(rep.ladder.iter().all(|c| c.concentration.unwrap().mean == 0.0 && c.marginal.k2 == Some(0.0)));
        assert_eq!(rep.verdict(), Verdict::Chaotic);
        assert!(rep.flags.is_empty());
    }

    #[test]
    fn counterexample_bernoulli_flagged() {
        let fam = InitialFamily::Product(InitialLaw::BernoulliInverseN);
        let rep = propagation_sweep(
            &TransitionKernel::Counterexample,
            &fam,
            &[16, 64, 256],
            1.0,
            200,
            2,
            &delta0(),
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.verdict(), Verdict::NonChaotic);
        assert_eq!(rep.flags, vec![NON_CHAOTIC_FLAG.to_string()]);
        assert!(rep.summary().contains(NON_CHAOTIC_FLAG));
    }

    #[test]
    fn kac_at_time_zero_is_identity() {
        let fam = InitialFamily::Product(InitialLaw::Gaussian { mean: 0.0, std: 1.0 });
        let reference = InitialLaw::Gaussian { mean: 0.0, std: 1.0 }.pure_atomic(200).unwrap();
        let reference = crate::empirical::empirical_measure(&reference);
        let opts = SweepOptions::default();
        let k = TransitionKernel::Kac { tau: 1.0 };
        let rep = propagation_sweep(&k, &fam, &[10, 20, 40], 0.0, 30, 5, &reference, &opts).unwrap();
        for cell in &rep.ladder {
            let n = cell.n as u64;
            let runs = (0..30).map(|r| fam.draw(cell.n, &mut RandomStream::derived(5, &[TAG_INIT, n, r])).unwrap()).collect();
            let ens = ReplicaEnsemble::new(runs, "initial", 0.0, 5).unwrap();
            assert_eq!(&diagnose(&ens, &reference, &opts, 5), cell);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_round_trips() {
        let fam = InitialFamily::Product(InitialLaw::Gaussian { mean: 0.5, std: 1.0 });
        let k = TransitionKernel::McKeanVlasov { drift: Drift::Ou(1.0), diffusion: Diffusion::Constant(1.0), dt: 0.05 };
        let reference = AtomicMeasure::dirac(Point::Scalar(0.0));
        let run = || propagation_sweep(&k, &fam, &[5, 10, 20], 0.5, 8, 11, &reference, &SweepOptions::default()).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.to_json(), b.to_json());
        let back = DiagnosticsReport::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.to_json(), a.to_json());
        assert!(a.to_csv().starts_with("n,metric,value,se,replicas\n5,kac_cov,"));
        assert_eq!(a.modes, vec!["euler-maruyama".to_string()]);
    }

    #[test]
    fn cell_errors_do_not_stop_the_sweep() {
        // Symbols cannot run under Kac: every cell records the failure.
        let fam = InitialFamily::Product(InitialLaw::Bernoulli { p: 0.5 });
        let rep = propagation_sweep(&TransitionKernel::Kac { tau: 1.0 }, &fam, &[4, 8, 16], 1.0, 4, 1, &delta0(), &SweepOptions::default())
            .unwrap();
        assert_eq!(rep.ladder.len(), 3);
        assert!(rep.has_errors());
        assert_eq!(rep.verdict(), Verdict::Undetermined);
    }

    #[test]
    fn replica_count_checked() {
        let fam = InitialFamily::Product(InitialLaw::Bernoulli { p: 0.5 });
        assert!(propagation_sweep(&TransitionKernel::Counterexample, &fam, &[4], 1.0, 1, 1, &delta0(), &SweepOptions::default()).is_err());
    }
}
