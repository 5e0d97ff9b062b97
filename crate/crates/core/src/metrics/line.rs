//! Exact bounded-Lipschitz distance for measures on the real line.
//!
//! On sorted support points the Lipschitz constraints between neighbours
//! imply all others, so for a fixed sup-norm budget `c` (and `L = 1 − c`)
//! the problem
//!
//! ```text
//! maximize Σ w_i g_i   s.t.  |g_i| ≤ c,  |g_{i+1} − g_i| ≤ L·(x_{i+1} − x_i)
//! ```
//!
//! is a chain. Its value function `V_i(g)` (best partial sum with `g_i = g`)
//! is concave piecewise linear and is carried forward by three operations:
//! a sliding-window max of radius `L·Δx`, truncation to `[−c, c]`, and
//! adding `w_i·g`. The optimum over `c` is found by golden-section search,
//! valid because the optimum is concave in `c`.

use std::collections::VecDeque;

/// Concave piecewise-linear function on an interval, stored as a flat top
/// `[p, q]` with value `top`, and segments running outward from it.
#[derive(Debug, Clone)]
struct Concave {
    p: f64,
    q: f64,
    top: f64,
    /// `(length, stored slope)`, front nearest `p`. Real ascent toward the
    /// top is `stored + left_off` and is > 0.
    left: VecDeque<(f64, f64)>,
    left_off: f64,
    left_len: f64,
    /// `(length, stored rate)`, front nearest `q`. Real descent away from
    /// the top is `stored + right_off` and is > 0.
    right: VecDeque<(f64, f64)>,
    right_off: f64,
    right_len: f64,
}

impl Concave {
    fn flat(lo: f64, hi: f64) -> Self {
        Self {
            p: lo,
            q: hi,
            top: 0.0,
            left: VecDeque::new(),
            left_off: 0.0,
            left_len: 0.0,
            right: VecDeque::new(),
            right_off: 0.0,
            right_len: 0.0,
        }
    }

    /// `f(g) ← f(g) + w·g`.
    fn add_linear(&mut self, w: f64) {
        if w == 0.0 {
            return;
        }
        self.left_off += w;
        self.right_off -= w;
        if w > 0.0 {
            self.top += w * self.q;
            let flat = self.q - self.p;
            if flat > 0.0 {
                self.left.push_front((flat, w - self.left_off));
                self.left_len += flat;
            }
            self.p = self.q;
            while let Some(&(len, st)) = self.right.front() {
                let ascent = -(st + self.right_off);
                if ascent <= 0.0 {
                    break;
                }
                self.right.pop_front();
                self.right_len -= len;
                self.top += ascent * len;
                self.left.push_front((len, ascent - self.left_off));
                self.left_len += len;
                self.q += len;
                self.p = self.q;
            }
            while let Some(&(len, st)) = self.right.front() {
                if st + self.right_off != 0.0 {
                    break;
                }
                self.right.pop_front();
                self.right_len -= len;
                self.q += len;
            }
        } else {
            self.top += w * self.p;
            let flat = self.q - self.p;
            if flat > 0.0 {
                self.right.push_front((flat, -w - self.right_off));
                self.right_len += flat;
            }
            self.q = self.p;
            while let Some(&(len, st)) = self.left.front() {
                let descent = -(st + self.left_off);
                if descent <= 0.0 {
                    break;
                }
                self.left.pop_front();
                self.left_len -= len;
                self.top += descent * len;
                self.right.push_front((len, descent - self.right_off));
                self.right_len += len;
                self.p -= len;
                self.q = self.p;
            }
            while let Some(&(len, st)) = self.left.front() {
                if st + self.left_off != 0.0 {
                    break;
                }
                self.left.pop_front();
                self.left_len -= len;
                self.p -= len;
            }
        }
    }

    /// `f(g) ← max_{|h − g| ≤ r} f(h)`.
    fn window(&mut self, r: f64) {
        self.p -= r;
        self.q += r;
    }

    /// Restricts the domain to `[lo, hi]`, which must meet the current domain.
    fn truncate(&mut self, lo: f64, hi: f64) {
        let mut excess = lo - (self.p - self.left_len);
        while excess > 0.0 {
            let Some(back) = self.left.back_mut() else { break };
            if back.0 <= excess {
                excess -= back.0;
                self.left_len -= back.0;
                self.left.pop_back();
            } else {
                back.0 -= excess;
                self.left_len -= excess;
                excess = 0.0;
            }
        }
        if self.left.is_empty() {
            self.left_len = 0.0;
            if self.p < lo {
                self.p = lo;
            }
            if self.p > self.q {
                // The cut passed the top: walk down the right side.
                let mut over = self.p - self.q;
                self.p = self.q;
                while over > 0.0 {
                    let Some(front) = self.right.front_mut() else {
                        self.q += over;
                        self.p = self.q;
                        break;
                    };
                    let take = front.0.min(over);
                    self.top -= (front.1 + self.right_off) * take;
                    front.0 -= take;
                    self.right_len -= take;
                    over -= take;
                    self.p += take;
                    self.q += take;
                    if front.0 <= 0.0 {
                        self.right.pop_front();
                    }
                }
            }
        }

        let mut excess = (self.q + self.right_len) - hi;
        while excess > 0.0 {
            let Some(back) = self.right.back_mut() else { break };
            if back.0 <= excess {
                excess -= back.0;
                self.right_len -= back.0;
                self.right.pop_back();
            } else {
                back.0 -= excess;
                self.right_len -= excess;
                excess = 0.0;
            }
        }
        if self.right.is_empty() {
            self.right_len = 0.0;
            if self.q > hi {
                self.q = hi;
            }
            if self.q < self.p {
                let mut over = self.p - self.q;
                self.q = self.p;
                while over > 0.0 {
                    let Some(front) = self.left.front_mut() else {
                        self.p -= over;
                        self.q = self.p;
                        break;
                    };
                    let take = front.0.min(over);
                    self.top -= (front.1 + self.left_off) * take;
                    front.0 -= take;
                    self.left_len -= take;
                    over -= take;
                    self.p -= take;
                    self.q -= take;
                    if front.0 <= 0.0 {
                        self.left.pop_front();
                    }
                }
            }
        }
    }
}

/// Optimal value of the chain problem at budget `c`, and optionally the
/// maximizing `g`.
fn chain_value(xs: &[f64], ws: &[f64], c: f64, want_witness: bool) -> (f64, Option<Vec<f64>>) {
    let lip = 1.0 - c;
    let mut f = Concave::flat(-c, c);
    let mut tops: Vec<(f64, f64)> = Vec::new();
    for i in 0..xs.len() {
        if i > 0 {
            if want_witness {
                tops.push((f.p, f.q));
            }
            f.window(lip * (xs[i] - xs[i - 1]));
            f.truncate(-c, c);
        }
        f.add_linear(ws[i]);
    }
    if !want_witness {
        return (f.top, None);
    }
    let m = xs.len();
    let mut g = vec![0.0; m];
    g[m - 1] = f.p.clamp(-c, c);
    for i in (1..m).rev() {
        let r = lip * (xs[i] - xs[i - 1]);
        let (p, q) = tops[i - 1];
        g[i - 1] = g[i].clamp(p, q).clamp(g[i] - r, g[i] + r).clamp(-c, c);
    }
    (f.top, Some(g))
}

/// Result of the line solver.
#[derive(Debug, Clone)]
pub(crate) struct LineSolution {
    pub value: f64,
    pub sup_bound: f64,
    pub witness: Vec<f64>,
}

/// Exact BL* for a signed measure `Σ w_i δ(x_i)` with total mass 0 on
/// strictly increasing points `xs`.
pub(crate) fn bl_on_line(xs: &[f64], ws: &[f64]) -> LineSolution {
    debug_assert!(xs.windows(2).all(|p| p[0] < p[1]));
    if xs.is_empty() {
        return LineSolution { value: 0.0, sup_bound: 0.0, witness: vec![] };
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c1 = b - inv_phi * (b - a);
    let mut c2 = a + inv_phi * (b - a);
    let mut f1 = chain_value(xs, ws, c1, false).0;
    let mut f2 = chain_value(xs, ws, c2, false).0;
    while b - a > 1e-12 {
        if f1 < f2 {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = chain_value(xs, ws, c2, false).0;
        } else {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = chain_value(xs, ws, c1, false).0;
        }
    }
    let c = if f1 >= f2 { c1 } else { c2 };
    let (value, witness) = chain_value(xs, ws, c, true);
    LineSolution { value: value.max(0.0), sup_bound: c, witness: witness.unwrap_or_default() }
}
