//! Distances between atomic measures: total variation, Dudley's
//! bounded-Lipschitz distance BL*, and the Lévy–Prohorov distance.
//!
//! Tuple points (measures on `S^k`) use the max metric over coordinates.

mod flow;
mod line;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::dictionary::dictionary;
use crate::empirical::AtomicMeasure;
use crate::error::{invalid, Error, Result};
use crate::point::{Point, PointKind};

use flow::FlowNetwork;

/// Default union-support cap for the general BL linear program.
pub const DEFAULT_BL_CAP: usize = 400;
/// Default union-support cap for the Lévy–Prohorov solver.
pub const DEFAULT_LP_CAP: usize = 200;
/// Default support cap for the exact solver on the real line.
pub const DEFAULT_LINE_CAP: usize = 4_000_000;
/// Width of the final Lévy–Prohorov bisection bracket.
pub const LP_BISECTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEnumeration,
    LpSolve,
    BisectionFlow,
    MonteCarlo,
}

impl Method {
    pub fn is_exact(self) -> bool {
        !matches!(self, Method::MonteCarlo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactEnumeration => "exact-enumeration",
            Method::LpSolve => "lp-solve",
            Method::BisectionFlow => "bisection-flow",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// Evidence backing a distance value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Test function values on the union support (in canonical atom order,
    /// zero-difference atoms omitted) with its sup and Lipschitz bounds.
    TestFunction { atoms: Vec<Point>, values: Vec<f64>, sup_bound: f64, lipschitz: f64 },
    /// Index of the best dictionary feature and the projection used.
    Dictionary { function: usize, coordinate: Option<usize> },
    /// Final bisection bracket; `hi` is feasible.
    Bracket { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub value: f64,
    pub method: Method,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub bl_cap: usize,
    pub lp_cap: usize,
    pub line_cap: usize,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self { bl_cap: DEFAULT_BL_CAP, lp_cap: DEFAULT_LP_CAP, line_cap: DEFAULT_LINE_CAP }
    }
}

impl MetricOptions {
    /// Largest union support solved exactly for measures of `kind`.
    pub fn exact_cap(&self, kind: &PointKind) -> usize {
        if *kind == PointKind::Scalar {
            self.line_cap
        } else {
            self.bl_cap
        }
    }
}

fn check_kinds(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<PointKind> {
    let k = mu.kind();
    if k != nu.kind() {
        return invalid(format!("measures live on different spaces: {k:?} vs {:?}", nu.kind()));
    }
    Ok(k)
}

/// Union support (canonical order) with `mu − nu` at each atom.
fn signed_difference(mu: &AtomicMeasure, nu: &AtomicMeasure) -> (Vec<Point>, Vec<f64>) {
    let (a, wa) = (mu.atoms(), mu.weights());
    let (b, wb) = (nu.atoms(), nu.weights());
    let mut atoms = Vec::with_capacity(a.len() + b.len());
    let mut diff = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                atoms.push(a[i].clone());
                diff.push(wa[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                atoms.push(b[j].clone());
                diff.push(-wb[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                atoms.push(a[i].clone());
                diff.push(wa[i] - wb[j]);
                i += 1;
                j += 1;
            }
        }
    }
    (atoms, diff)
}

/// `sup_A |mu(A) − nu(A)| = ½ Σ |mu(a) − nu(a)|`.
pub fn tv_distance(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<DistanceResult> {
    check_kinds(mu, nu)?;
    let (_, diff) = signed_difference(mu, nu);
    let value = 0.5 * diff.iter().map(|d| d.abs()).sum::<f64>();
    Ok(DistanceResult { value, method: Method::ExactEnumeration, certificate: None })
}

/// Dudley's bounded-Lipschitz distance.
///
/// Atoms where the two measures agree are dropped first (a bounded
/// Lipschitz function on the remaining points extends to the whole space
/// with the same bounds). Scalar measures go to the exact line solver;
/// other kinds to the linear program when the remaining support fits
/// `bl_cap`, and otherwise to the dictionary lower bound flagged
/// [`Method::MonteCarlo`].
pub fn bl_distance(mu: &AtomicMeasure, nu: &AtomicMeasure, opts: &MetricOptions) -> Result<DistanceResult> {
    let kind = check_kinds(mu, nu)?;
    let (atoms, diff) = signed_difference(mu, nu);
    let (atoms, diff): (Vec<Point>, Vec<f64>) =
        atoms.into_iter().zip(diff).filter(|(_, d)| *d != 0.0).unzip();
    if atoms.is_empty() {
        return Ok(DistanceResult {
            value: 0.0,
            method: Method::LpSolve,
            certificate: Some(Certificate::TestFunction { atoms, values: vec![], sup_bound: 0.0, lipschitz: 0.0 }),
        });
    }
    if atoms.len() <= opts.exact_cap(&kind) {
        if kind == PointKind::Scalar {
            let xs: Vec<f64> = atoms.iter().map(|p| p.as_scalar().unwrap()).collect();
            let sol = line::bl_on_line(&xs, &diff);
            return Ok(DistanceResult {
                value: sol.value,
                method: Method::LpSolve,
                certificate: Some(Certificate::TestFunction {
                    atoms,
                    values: sol.witness,
                    sup_bound: sol.sup_bound,
                    lipschitz: 1.0 - sol.sup_bound,
                }),
            });
        }
        let m = atoms.len();
        let mut dist = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..i {
                let d = atoms[i].distance(&atoms[j]);
                dist[i * m + j] = d;
                dist[j * m + i] = d;
            }
        }
        let sol = simplex::bl_simplex(&diff, &dist)?;
        return Ok(DistanceResult {
            value: sol.value,
            method: Method::LpSolve,
            certificate: Some(Certificate::TestFunction {
                atoms,
                values: sol.witness,
                sup_bound: sol.sup_bound,
                lipschitz: sol.lipschitz,
            }),
        });
    }
    Ok(dictionary_bl(&atoms, &diff, &kind))
}

/// Lower bound on BL* from the fixed dictionary, applied to every real
/// coordinate (each a 1-Lipschitz projection). Discrete spaces use the
/// indicator features `(2·1[x = a] − 1)/3`.
fn dictionary_bl(atoms: &[Point], diff: &[f64], kind: &PointKind) -> DistanceResult {
    let mut best = 0.0;
    let mut cert = Certificate::Dictionary { function: 0, coordinate: None };
    if kind.is_discrete() {
        // Indicator of one atom; distinct atoms are at distance 1.
        for (i, d) in diff.iter().enumerate() {
            let rest: f64 = diff.iter().sum::<f64>() - d;
            let v = ((2.0 * d - (d + rest)) / 3.0).abs();
            if v > best {
                best = v;
                cert = Certificate::Dictionary { function: i, coordinate: None };
            }
        }
    } else {
        let coords: Vec<Vec<f64>> = atoms.iter().map(|p| p.coords().unwrap_or_default()).collect();
        let dim = kind.real_dim().unwrap_or(0);
        for (fi, g) in dictionary().iter().enumerate() {
            for c in 0..dim {
                let v: f64 = coords.iter().zip(diff).map(|(x, d)| d * g.eval(x[c])).sum::<f64>().abs();
                if v > best {
                    best = v;
                    cert = Certificate::Dictionary { function: fi, coordinate: Some(c) };
                }
            }
        }
    }
    DistanceResult { value: best, method: Method::MonteCarlo, certificate: Some(cert) }
}

/// Lévy–Prohorov distance by bisection on δ.
///
/// `LP ≤ δ` iff the bipartite network source → ν-atoms → μ-atoms → sink,
/// with middle edges only where `d < δ`, carries flow at least `1 − δ`
/// (max-flow/min-cut turns this into the closed-set condition restricted
/// to subsets of ν's support). The reported value is the feasible end of
/// the final bracket.
pub fn lp_distance(mu: &AtomicMeasure, nu: &AtomicMeasure, opts: &MetricOptions) -> Result<DistanceResult> {
    check_kinds(mu, nu)?;
    let (union, _) = signed_difference(mu, nu);
    if union.len() > opts.lp_cap {
        return Err(Error::Capacity {
            what: "Lévy–Prohorov union support",
            needed: union.len() as u128,
            cap: opts.lp_cap as u128,
        });
    }
    if mu == nu {
        return Ok(DistanceResult {
            value: 0.0,
            method: Method::BisectionFlow,
            certificate: Some(Certificate::Bracket { lo: 0.0, hi: 0.0 }),
        });
    }
    let dist: Vec<Vec<f64>> = nu
        .atoms()
        .iter()
        .map(|b| mu.atoms().iter().map(|a| a.distance(b)).collect())
        .collect();
    let feasible = |delta: f64| -> bool {
        let (nn, nm) = (nu.len(), mu.len());
        let (s, t) = (nn + nm, nn + nm + 1);
        let mut g = FlowNetwork::new(nn + nm + 2);
        for (j, w) in nu.weights().iter().enumerate() {
            g.add_edge(s, j, *w);
        }
        for (i, w) in mu.weights().iter().enumerate() {
            g.add_edge(nn + i, t, *w);
        }
        for (j, row) in dist.iter().enumerate() {
            for (i, &d) in row.iter().enumerate() {
                if d < delta {
                    g.add_edge(j, nn + i, f64::INFINITY);
                }
            }
        }
        g.max_flow(s, t) >= 1.0 - delta - 1e-12
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > LP_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(DistanceResult {
        value: hi,
        method: Method::BisectionFlow,
        certificate: Some(Certificate::Bracket { lo, hi }),
    })
}

/// `2(1 − n!/(n^k (n−k)!))`, the total-variation gap between sampling k
/// coordinates with and without replacement.
pub fn sampling_identity_bound(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got n = {n}, k = {k}"));
    }
    let log_ratio: f64 = (0..k).map(|i| (-(i as f64) / n as f64).ln_1p()).sum();
    Ok(2.0 * (-log_ratio.exp_m1()))
}
