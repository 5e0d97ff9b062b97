//! Greedy atom merging down to a support cap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::empirical::AtomicMeasure;
use crate::error::{Error, Result};
use crate::point::{Point, PointKind};

/// Reduces `mu` to at most `cap` atoms by repeatedly merging the closest
/// pair into its mass-weighted midpoint. Ties go to the pair whose lower
/// atom is smaller. Measures on finite alphabets cannot be merged and
/// fail with a capacity error if they exceed the cap.
pub fn quantize(mu: &AtomicMeasure, cap: usize) -> Result<AtomicMeasure> {
    if mu.len() <= cap {
        return Ok(mu.clone());
    }
    let kind = mu.kind();
    if cap == 0 || kind.real_dim().is_none() {
        return Err(Error::Capacity { what: "atoms after quantization", needed: mu.len() as u128, cap: cap as u128 });
    }
    let coords: Vec<Vec<f64>> = mu.atoms().iter().map(|p| p.coords().unwrap()).collect();
    let (coords, weights) = if kind == PointKind::Scalar {
        merge_on_line(coords.iter().map(|c| c[0]).collect(), mu.weights().to_vec(), cap)
    } else {
        merge_general(coords, mu.weights().to_vec(), cap)
    };
    let atoms = coords.iter().map(|c| Point::from_coords(&kind, c).unwrap()).collect();
    AtomicMeasure::from_masses(atoms, weights)
}

fn midpoint(a: &[f64], wa: f64, b: &[f64], wb: f64) -> Vec<f64> {
    let w = wa + wb;
    a.iter().zip(b).map(|(x, y)| (wa * x + wb * y) / w).collect()
}

#[derive(PartialEq)]
struct Candidate {
    gap: f64,
    left: f64,
    i: usize,
    j: usize,
    version: (u64, u64),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Reversed so the max-heap pops the smallest gap, then lowest left end.
    fn cmp(&self, o: &Self) -> Ordering {
        o.gap.total_cmp(&self.gap).then(o.left.total_cmp(&self.left))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Sorted scalar atoms: only neighbours can be closest, and a merged atom
/// stays between its old neighbours.
fn merge_on_line(mut x: Vec<f64>, mut w: Vec<f64>, cap: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = x.len();
    let mut next: Vec<usize> = (1..=m).collect();
    let mut prev: Vec<Option<usize>> = (0..m).map(|i| i.checked_sub(1)).collect();
    let mut version = vec![0u64; m];
    let mut alive = vec![true; m];
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Candidate>, x: &[f64], version: &[u64], i: usize, j: usize| {
        heap.push(Candidate { gap: x[j] - x[i], left: x[i], i, j, version: (version[i], version[j]) });
    };
    for i in 0..m - 1 {
        push(&mut heap, &x, &version, i, i + 1);
    }
    let mut count = m;
    while count > cap {
        let Some(c) = heap.pop() else { break };
        if !alive[c.i] || !alive[c.j] || c.version != (version[c.i], version[c.j]) {
            continue;
        }
        let (i, j) = (c.i, c.j);
        let total = w[i] + w[j];
        x[i] = (w[i] * x[i] + w[j] * x[j]) / total;
        w[i] = total;
        alive[j] = false;
        version[i] += 1;
        next[i] = next[j];
        if next[j] < m {
            prev[next[j]] = Some(i);
            push(&mut heap, &x, &version, i, next[j]);
        }
        if let Some(p) = prev[i] {
            push(&mut heap, &x, &version, p, i);
        }
        count -= 1;
    }
    (0..m).filter(|&i| alive[i]).map(|i| (vec![x[i]], w[i])).unzip()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Euclidean merging with a nearest-neighbour cache.
fn merge_general(mut x: Vec<Vec<f64>>, mut w: Vec<f64>, cap: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = x.len();
    let mut alive = vec![true; m];
    let nearest = |x: &[Vec<f64>], alive: &[bool], i: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..x.len() {
            if j != i && alive[j] {
                let d = dist(&x[i], &x[j]);
                if d < best.0 || (d == best.0 && lex(&x[j], &x[best.1]).is_lt()) {
                    best = (d, j);
                }
            }
        }
        best
    };
    let mut nn: Vec<(f64, usize)> = (0..m).map(|i| nearest(&x, &alive, i)).collect();
    let mut count = m;
    while count > cap {
        let mut best: Option<usize> = None;
        for i in 0..m {
            if !alive[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let low = |k: usize| if lex(&x[k], &x[nn[k].1]).is_le() { &x[k] } else { &x[nn[k].1] };
                    let ord = nn[i].0.total_cmp(&nn[b].0).then_with(|| lex(low(i), low(b)));
                    if ord.is_lt() {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let i = best.unwrap();
        let j = nn[i].1;
        let (a, b) = if lex(&x[i], &x[j]).is_le() { (i, j) } else { (j, i) };
        x[a] = midpoint(&x[a], w[a], &x[b], w[b]);
        w[a] += w[b];
        alive[b] = false;
        count -= 1;
        for k in 0..m {
            if alive[k] && (k == a || nn[k].1 == a || nn[k].1 == b) {
                nn[k] = nearest(&x, &alive, k);
            } else if alive[k] && k != a {
                let d = dist(&x[k], &x[a]);
                if d < nn[k].0 {
                    nn[k] = (d, a);
                }
            }
        }
    }
    (0..m).filter(|&i| alive[i]).map(|i| (x[i].clone(), w[i])).unzip()
}
