//! Symmetric laws on a finite alphabet through their occupancy counts.
//!
//! A symmetric law `ρ_n` on `{0..k}^n` is fixed by the probabilities
//! `P_n(j)` of the count vectors `j = (j_0, …, j_{k−1})`, since every
//! configuration with counts `j` has probability `P_n(j) / M(n; j)` where
//! `M` is the multinomial coefficient. All logarithms are natural.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::empirical::Configuration;
use crate::error::{invalid, Result};

/// `ln k!` for `k ≤ n`, by cumulative sums.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln (n! / Π j_i!)` with `n = Σ j_i`.
    pub fn log_multinomial(&self, j: &[usize]) -> f64 {
        let n: usize = j.iter().sum();
        self.table[n] - j.iter().map(|&x| self.table[x]).sum::<f64>()
    }
}

/// Probability function over compositions of `n` into `k` parts. Only
/// compositions with positive probability are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyLaw {
    n: usize,
    k: usize,
    table: BTreeMap<Vec<usize>, f64>,
}

impl OccupancyLaw {
    pub fn new(n: usize, k: usize, entries: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Result<Self> {
        if n == 0 || k == 0 {
            return invalid("occupancy law needs n >= 1 and k >= 1");
        }
        let mut table = BTreeMap::new();
        for (j, p) in entries {
            if j.len() != k || j.iter().sum::<usize>() != n {
                return invalid(format!("{j:?} is not a composition of {n} into {k} parts"));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return invalid(format!("probability {p} at {j:?} is negative or not finite"));
            }
            if p > 0.0 {
                *table.entry(j).or_insert(0.0) += p;
            }
        }
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { n, k, table })
    }

    /// Point mass at the composition `j`.
    pub fn delta(j: Vec<usize>) -> Result<Self> {
        let n = j.iter().sum();
        Self::new(n, j.len(), [(j, 1.0)])
    }

    /// Occupancy law of the product `p^{⊗n}`: multinomial(n, p).
    pub fn product(n: usize, p: &[f64]) -> Result<Self> {
        check_simplex_point(p)?;
        let lf = LogFactorials::new(n);
        let mut entries = Vec::new();
        for_each_composition(n, p.len(), |j| {
            let mut log_p = lf.log_multinomial(j);
            for (&c, &q) in j.iter().zip(p) {
                if c > 0 {
                    if q == 0.0 {
                        return;
                    }
                    log_p += c as f64 * q.ln();
                }
            }
            entries.push((j.to_vec(), log_p.exp()));
        });
        // Renormalize away the rounding of the exponentials.
        let total: f64 = entries.iter().map(|e| e.1).sum();
        entries.iter_mut().for_each(|e| e.1 /= total);
        Self::new(n, p.len(), entries)
    }

    /// Point mass at the composition nearest `n·p` (largest remainder,
    /// ties to the lower symbol).
    pub fn pure_atomic(n: usize, p: &[f64]) -> Result<Self> {
        check_simplex_point(p)?;
        Self::delta(apportion(n, p))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.table.iter().map(|(j, p)| (j.as_slice(), *p))
    }

    pub fn probability(&self, j: &[usize]) -> f64 {
        self.table.get(j).copied().unwrap_or(0.0)
    }

    /// One-particle marginal: `ρ^{(1)}(i) = E[j_i] / n`.
    pub fn one_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        for (j, p) in self.iter() {
            for (mi, &c) in m.iter_mut().zip(j) {
                *mi += p * c as f64 / self.n as f64;
            }
        }
        m
    }
}

fn check_simplex_point(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&q| !(q >= 0.0) || !q.is_finite()) {
        return invalid("simplex point needs nonnegative finite coordinates");
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return invalid(format!("simplex point sums to {s}, not 1"));
    }
    Ok(())
}

/// Integer counts summing to `n` nearest to `n·p` by largest remainder;
/// ties go to the lower index.
pub fn apportion(n: usize, p: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = p.iter().map(|&q| (q * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    let rem = |i: usize| p[i] * n as f64 - counts[i] as f64;
    order.sort_by(|&a, &b| rem(b).total_cmp(&rem(a)).then(a.cmp(&b)));
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Calls `f` on every composition of `n` into `k` parts, in
/// lexicographic order.
pub fn for_each_composition(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(left: usize, slot: usize, j: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if slot + 1 == j.len() {
            j[slot] = left;
            f(j);
            return;
        }
        for c in 0..=left {
            j[slot] = c;
            rec(left - c, slot + 1, j, f);
        }
    }
    if k == 0 {
        return;
    }
    let mut j = vec![0; k];
    rec(n, 0, &mut j, &mut f);
}

/// Counts of each symbol in a configuration over `{0..k}`.
pub fn occupancy_counts(config: &Configuration, k: usize) -> Result<Vec<usize>> {
    let Some(s) = config.symbols() else {
        return invalid("occupancy counts need symbol configurations");
    };
    let mut j = vec![0; k];
    for x in s {
        match j.get_mut(x as usize) {
            Some(c) => *c += 1,
            None => return invalid(format!("symbol {x} is outside the alphabet of size {k}")),
        }
    }
    Ok(j)
}

/// `ρ_n(x) = P_n(j(x)) / M(n; j(x))`.
pub fn pointwise_probability(law: &OccupancyLaw, config: &Configuration) -> Result<f64> {
    if config.len() != law.n {
        return invalid(format!("configuration has {} points, law has n = {}", config.len(), law.n));
    }
    let j = occupancy_counts(config, law.k)?;
    let p = law.probability(&j);
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok((p.ln() - LogFactorials::new(law.n).log_multinomial(&j)).exp())
}

/// Law on the simplex: atoms `j/n` with weights `P_n(j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexMeasure {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexMeasure {
    /// `Σ w · ‖atom − p‖₁`; tends to 0 exactly when the laws are
    /// `p`-chaotic.
    pub fn mean_l1_distance(&self, p: &[f64]) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * a.iter().zip(p).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum()
    }
}

pub fn simplex_pushforward(law: &OccupancyLaw) -> SimplexMeasure {
    let n = law.n as f64;
    let (atoms, weights) = law.iter().map(|(j, p)| (j.iter().map(|&c| c as f64 / n).collect(), p)).unzip();
    SimplexMeasure { atoms, weights }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `−Σ p_i ln p_i`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlogx(x)).sum::<f64>()
}

/// Entropy per particle `−(1/n) Σ_x ρ_n(x) ln ρ_n(x)`, computed from the
/// counts: `(1/n)[−Σ_j P ln P + Σ_j P ln M(n; j)]`.
pub fn specific_entropy(law: &OccupancyLaw) -> f64 {
    let lf = LogFactorials::new(law.n);
    let s: f64 = law.iter().map(|(j, p)| -xlogx(p) + p * lf.log_multinomial(j)).sum();
    s / law.n as f64
}

/// Stirling form of [`specific_entropy`]: replaces `(1/n) ln M(n; j)` by
/// `H(j/n)`. Differs from the exact value by at most
/// `(1 + k)(1 + ln n)/n`.
pub fn specific_entropy_stirling(law: &OccupancyLaw) -> f64 {
    let n = law.n as f64;
    let s: f64 = law
        .iter()
        .map(|(j, p)| {
            let frac: Vec<f64> = j.iter().map(|&c| c as f64 / n).collect();
            -xlogx(p) / n + p * shannon_entropy(&frac)
        })
        .sum();
    s
}

/// Relative entropy `−Σ μ_i ln(μ_i/π_i)`: nonpositive, zero iff `μ = π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelativeEntropy {
    Finite(f64),
    /// `μ` charges a symbol that `π` does not.
    NegInfinity,
}

impl RelativeEntropy {
    pub fn value(self) -> f64 {
        match self {
            RelativeEntropy::Finite(v) => v,
            RelativeEntropy::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

pub fn relative_entropy(mu: &[f64], pi: &[f64]) -> Result<RelativeEntropy> {
    if mu.len() != pi.len() {
        return invalid(format!("alphabets differ: {} vs {}", mu.len(), pi.len()));
    }
    check_simplex_point(mu)?;
    check_simplex_point(pi)?;
    let mut s = 0.0;
    for (&m, &q) in mu.iter().zip(pi) {
        if m > 0.0 {
            if q == 0.0 {
                return Ok(RelativeEntropy::NegInfinity);
            }
            s -= m * (m / q).ln();
        }
    }
    Ok(RelativeEntropy::Finite(s.min(0.0)))
}

/// Sequences of occupancy laws indexed by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum OccupancyFamily {
    /// `p^{⊗n}`.
    Product { p: Vec<f64> },
    /// Point mass at the counts nearest `n·p`.
    PureAtomic { p: Vec<f64> },
}

impl OccupancyFamily {
    pub fn law(&self, n: usize) -> Result<OccupancyLaw> {
        match self {
            OccupancyFamily::Product { p } => OccupancyLaw::product(n, p),
            OccupancyFamily::PureAtomic { p } => OccupancyLaw::pure_atomic(n, p),
        }
    }

    pub fn target(&self) -> &[f64] {
        match self {
            OccupancyFamily::Product { p } | OccupancyFamily::PureAtomic { p } => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    pub specific_entropy: Option<f64>,
    pub gap: Option<f64>,
    /// Mean `‖j/n − p‖₁` under `P_n`.
    pub simplex_distance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCheck {
    pub target: f64,
    pub rows: Vec<EntropyRow>,
    /// Smallest `C` with `gap ≤ C ln n / n` on every row with `n ≥ 2`.
    pub envelope: f64,
}

impl EntropyCheck {
    /// Gaps strictly decrease along the ladder.
    pub fn gaps_strictly_decrease(&self) -> bool {
        let gaps: Vec<f64> = self.rows.iter().filter_map(|r| r.gap).collect();
        gaps.len() == self.rows.len() && gaps.windows(2).all(|w| w[1] < w[0])
    }

    /// CSV with header `n,specific_entropy,target,gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,specific_entropy,target,gap\n");
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!("{},{},{:?},{}\n", r.n, fmt(r.specific_entropy), self.target, fmt(r.gap)));
        }
        out
    }
}

/// Specific entropy along `ladder` against the target `H(p)`. A failure
/// at one `n` is recorded in its row and the check continues.
pub fn entropy_convergence_check(
    family: impl Fn(usize) -> Result<OccupancyLaw>,
    p: &[f64],
    ladder: &[usize],
) -> Result<EntropyCheck> {
    check_simplex_point(p)?;
    let target = shannon_entropy(p);
    let mut rows = Vec::with_capacity(ladder.len());
    let mut envelope = 0.0f64;
    for &n in ladder {
        match family(n) {
            Ok(law) if law.k() != p.len() => rows.push(EntropyRow {
                n,
                specific_entropy: None,
                gap: None,
                simplex_distance: None,
                error: Some(format!("law has alphabet {} but target has {}", law.k(), p.len())),
            }),
            Ok(law) => {
                let h = specific_entropy(&law);
                let gap = (h - target).abs();
                if n >= 2 {
                    envelope = envelope.max(gap * n as f64 / (n as f64).ln());
                }
                rows.push(EntropyRow {
                    n,
                    specific_entropy: Some(h),
                    gap: Some(gap),
                    simplex_distance: Some(simplex_pushforward(&law).mean_l1_distance(p)),
                    error: None,
                });
            }
            Err(e) => rows.push(EntropyRow {
                n,
                specific_entropy: None,
                gap: None,
                simplex_distance: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(EntropyCheck { target, rows, envelope })
}
