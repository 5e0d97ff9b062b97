//! Deterministic mean-field dynamics
//! `dx_i/dt = v_i`, `dv_i/dt = (1/n) Σ_j F(x_i − x_j)` on phase points,
//! integrated by velocity Verlet.

use super::builtins::Force;
use super::mckean::canonical_order;
use super::{steps_for, RunOutcome};
use crate::empirical::Configuration;
use crate::error::{invalid, Error, Result};
use crate::point::{Point, PointKind};

fn accelerations(force: Force, x: &[f64], d: usize, acc: &mut [f64], r: &mut [f64], f: &mut [f64]) {
    let n = x.len() / d;
    if force == Force::Zero {
        acc.fill(0.0);
        return;
    }
    let order = canonical_order(x, d);
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        let a = &mut acc[i * d..(i + 1) * d];
        a.fill(0.0);
        for &j in &order {
            for k in 0..d {
                r[k] = x[i * d + k] - x[j * d + k];
            }
            force.eval(r, f);
            for k in 0..d {
                a[k] += f[k];
            }
        }
        a.iter_mut().for_each(|v| *v *= inv_n);
    }
}

/// Integrates the Vlasov particle system for duration `t` with step `dt`.
pub fn simulate_vlasov(config: &Configuration, t: f64, dt: f64, force: Force) -> Result<RunOutcome> {
    let PointKind::Phase(d) = config.kind() else {
        return invalid("Vlasov dynamics need phase points");
    };
    if d == 0 {
        return invalid("phase points need at least one dimension");
    }
    let steps = steps_for(t, dt)?;
    let n = config.len();
    let mut x = Vec::with_capacity(n * d);
    let mut v = Vec::with_capacity(n * d);
    for p in config.points() {
        if let Point::Phase { x: px, v: pv } = p {
            x.extend_from_slice(px);
            v.extend_from_slice(pv);
        }
    }
    let mut acc = vec![0.0; n * d];
    let (mut r, mut f) = (vec![0.0; d], vec![0.0; d]);
    accelerations(force, &x, d, &mut acc, &mut r, &mut f);
    let half = 0.5 * dt;
    for step in 0..steps {
        for k in 0..n * d {
            v[k] += half * acc[k];
            x[k] += dt * v[k];
        }
        accelerations(force, &x, d, &mut acc, &mut r, &mut f);
        for k in 0..n * d {
            v[k] += half * acc[k];
        }
        if let Some(bad) = x.iter().chain(&v).position(|z| !z.is_finite()) {
            return Err(Error::NumericBlowup {
                step: step + 1,
                detail: format!("particle {} left the reals", (bad % (n * d)) / d),
            });
        }
    }
    let pts = (0..n)
        .map(|i| Point::Phase { x: x[i * d..(i + 1) * d].to_vec(), v: v[i * d..(i + 1) * d].to_vec() })
        .collect();
    Ok(RunOutcome { config: Configuration::new(pts)?, events: steps as u64, flags: vec![] })
}
