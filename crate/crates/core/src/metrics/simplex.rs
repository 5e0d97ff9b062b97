//! Dense revised simplex for the bounded-Lipschitz linear program.
//!
//! The maximization over test values `g_i`, sup bound `c` and Lipschitz
//! bound `L` is solved through its dual, which has only `m + 2` rows:
//!
//! ```text
//! minimize λ
//!   Σ_j π_ij − Σ_j π_ji + α_i − β_i = w_i        (i = 0..m)
//!   Σ_ij d_ij π_ij − λ + s₁          = 0
//!   Σ_i (α_i + β_i) − λ + s₂         = 0
//!   π, α, β, λ, s ≥ 0
//! ```
//!
//! Every column has at most three nonzeros. The simplex multipliers of the
//! first `m` rows at the optimum are the maximizing `g`, with `L = −y_m`
//! and `c = −y_{m+1}`.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const PRICE_TOL: f64 = 1e-11;

pub(crate) struct SimplexSolution {
    pub value: f64,
    pub witness: Vec<f64>,
    pub sup_bound: f64,
    pub lipschitz: f64,
}

struct Lp<'a> {
    m: usize,
    rows: usize,
    w: &'a [f64],
    dist: &'a [f64],
}

// Column layout: 0 = λ, 1 = s₁, 2 = s₂, 3.. = α_i, then β_i, then π_ij.
impl Lp<'_> {
    fn ncols(&self) -> usize {
        3 + 2 * self.m + self.m * (self.m - 1)
    }

    fn pair(&self, k: usize) -> (usize, usize) {
        let i = k / (self.m - 1);
        let r = k % (self.m - 1);
        (i, if r >= i { r + 1 } else { r })
    }

    /// Sparse entries `(row, value)` of a column.
    fn column(&self, col: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let m = self.m;
        match col {
            0 => {
                out.push((m, -1.0));
                out.push((m + 1, -1.0));
            }
            1 => out.push((m, 1.0)),
            2 => out.push((m + 1, 1.0)),
            c if c < 3 + m => {
                out.push((c - 3, 1.0));
                out.push((m + 1, 1.0));
            }
            c if c < 3 + 2 * m => {
                out.push((c - 3 - m, -1.0));
                out.push((m + 1, 1.0));
            }
            c => {
                let (i, j) = self.pair(c - 3 - 2 * m);
                out.push((i, 1.0));
                out.push((j, -1.0));
                out.push((m, self.dist[i * m + j]));
            }
        }
    }

    fn rhs(&self, row: usize) -> f64 {
        if row < self.m {
            self.w[row]
        } else {
            0.0
        }
    }
}

/// Inverts the basis matrix by Gauss-Jordan elimination with partial pivoting.
fn invert_basis(lp: &Lp, basis: &[usize]) -> Result<Vec<f64>> {
    let n = lp.rows;
    let mut a = vec![0.0; n * n];
    let mut col = Vec::new();
    for (k, &b) in basis.iter().enumerate() {
        lp.column(b, &mut col);
        for &(r, v) in &col {
            a[r * n + k] = v;
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs()))
            .unwrap();
        if a[piv * n + c].abs() < 1e-14 {
            return Err(Error::Solver("singular basis".into()));
        }
        if piv != c {
            for k in 0..n {
                a.swap(piv * n + k, c * n + k);
                inv.swap(piv * n + k, c * n + k);
            }
        }
        let d = a[c * n + c];
        for k in 0..n {
            a[c * n + k] /= d;
            inv[c * n + k] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r * n + c];
                if f != 0.0 {
                    for k in 0..n {
                        a[r * n + k] -= f * a[c * n + k];
                        inv[r * n + k] -= f * inv[c * n + k];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Solves the BL program for signed weights `w` (total mass 0) on `m`
/// points with row-major distance matrix `dist`.
pub(crate) fn bl_simplex(w: &[f64], dist: &[f64]) -> Result<SimplexSolution> {
    let m = w.len();
    if m < 2 {
        return Ok(SimplexSolution { value: 0.0, witness: vec![0.0; m], sup_bound: 0.0, lipschitz: 0.0 });
    }
    let lp = Lp { m, rows: m + 2, w, dist };
    let n = lp.rows;
    let ncols = lp.ncols();

    let mut basis: Vec<usize> = (0..m).map(|i| if w[i] >= 0.0 { 3 + i } else { 3 + m + i }).collect();
    basis.push(1);
    basis.push(0);
    let mut in_basis = vec![false; ncols];
    for &b in &basis {
        in_basis[b] = true;
    }
    let mut binv = invert_basis(&lp, &basis)?;
    let mut xb = vec![0.0; n];
    let recompute_x = |binv: &[f64], xb: &mut [f64]| {
        for (r, x) in xb.iter_mut().enumerate() {
            *x = (0..n).map(|k| binv[r * n + k] * lp.rhs(k)).sum::<f64>();
        }
    };
    recompute_x(&binv, &mut xb);

    let mut y = vec![0.0; n];
    let mut dcol = vec![0.0; n];
    let mut col = Vec::new();
    let mut degenerate_run = 0usize;
    let mut since_refactor = 0usize;
    let max_pivots = 200 * n + 10_000;
    let mut pivots = 0;

    loop {
        // Multipliers y = c_B^T B^{-1}; only λ has nonzero cost.
        match basis.iter().position(|&b| b == 0) {
            Some(r) => y.copy_from_slice(&binv[r * n..(r + 1) * n]),
            None => y.fill(0.0),
        }

        let bland = degenerate_run > 50;
        let mut entering = None;
        let mut best = -PRICE_TOL;
        let reduced = |col_idx: usize, y: &[f64]| -> f64 {
            match col_idx {
                0 => 1.0 + y[m] + y[m + 1],
                1 => -y[m],
                2 => -y[m + 1],
                c if c < 3 + m => -(y[c - 3] + y[m + 1]),
                c if c < 3 + 2 * m => y[c - 3 - m] - y[m + 1],
                _ => unreachable!(),
            }
        };
        for c in 0..3 + 2 * m {
            if in_basis[c] {
                continue;
            }
            let rc = reduced(c, &y);
            if rc < best {
                best = rc;
                entering = Some(c);
                if bland {
                    break;
                }
            }
        }
        if !(bland && entering.is_some()) {
            let ym = y[m];
            let base = 3 + 2 * m;
            'outer: for i in 0..m {
                let yi = y[i];
                let drow = &dist[i * m..(i + 1) * m];
                for j in 0..m {
                    if j == i {
                        continue;
                    }
                    let rc = y[j] - yi - drow[j] * ym;
                    if rc < best {
                        let c = base + i * (m - 1) + if j > i { j - 1 } else { j };
                        if in_basis[c] {
                            continue;
                        }
                        best = rc;
                        entering = Some(c);
                        if bland {
                            break 'outer;
                        }
                    }
                }
            }
        }
        let Some(q) = entering else { break };

        lp.column(q, &mut col);
        for (r, d) in dcol.iter_mut().enumerate() {
            *d = col.iter().map(|&(k, v)| binv[r * n + k] * v).sum();
        }
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for r in 0..n {
            if dcol[r] > PIVOT_TOL {
                let ratio = xb[r].max(0.0) / dcol[r];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < best_ratio - 1e-14 {
                            true
                        } else if ratio <= best_ratio + 1e-14 {
                            if bland {
                                basis[r] < basis[l]
                            } else {
                                dcol[r] > dcol[l]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best_ratio = ratio.min(best_ratio);
                    leave = Some(r);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::Solver("unbounded direction in BL program".into()));
        };
        let theta = xb[r].max(0.0) / dcol[r];
        if theta <= 1e-14 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        for k in 0..n {
            xb[k] -= theta * dcol[k];
        }
        xb[r] = theta;

        let piv = dcol[r];
        for k in 0..n {
            binv[r * n + k] /= piv;
        }
        let (before, rest) = binv.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for (rr, row) in before.chunks_exact_mut(n).chain(after.chunks_exact_mut(n)).enumerate() {
            let idx = if rr < r { rr } else { rr + 1 };
            let f = dcol[idx];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
            }
        }
        in_basis[basis[r]] = false;
        in_basis[q] = true;
        basis[r] = q;

        pivots += 1;
        since_refactor += 1;
        if since_refactor >= 4 * n {
            binv = invert_basis(&lp, &basis)?;
            recompute_x(&binv, &mut xb);
            since_refactor = 0;
        }
        if pivots > max_pivots {
            return Err(Error::Solver(format!("no convergence after {pivots} pivots")));
        }
    }

    let value = (0..n).filter(|&r| basis[r] == 0).map(|r| xb[r]).sum::<f64>().max(0.0);
    let witness = y[..m].to_vec();
    Ok(SimplexSolution {
        value,
        witness,
        sup_bound: -y[m + 1],
        lipschitz: -y[m],
    })
}
