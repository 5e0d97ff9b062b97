//! Euler–Maruyama for the McKean–Vlasov particle system
//!
//! ```text
//! dX_i = (1/n) Σ_j b(X_i, X_j) dt + (1/n) Σ_j σ(X_i, X_j) dW_i
//! ```
//!
//! on real-coordinate points (scalars, 3-vectors, phase points; drift and
//! noise act on every coordinate). Mean-field sums run over particles in
//! canonical (sorted) order, so relabelling particles relabels the output
//! bit-for-bit.

use rand::Rng;
use rand_distr::StandardNormal;

use super::builtins::{Diffusion, Drift};
use super::{steps_for, RunOutcome};
use crate::empirical::Configuration;
use crate::error::{invalid, Error, Result};
use crate::point::Point;

pub(crate) fn flatten(config: &Configuration) -> Result<(Vec<f64>, usize)> {
    let d = match config.kind().real_dim() {
        Some(d) if d > 0 => d,
        _ => return invalid("continuous dynamics need real-valued points"),
    };
    let mut x = Vec::with_capacity(config.len() * d);
    for p in config.points() {
        x.extend(p.coords().unwrap());
    }
    Ok((x, d))
}

pub(crate) fn unflatten(config: &Configuration, x: &[f64], d: usize) -> Result<Configuration> {
    let kind = config.kind();
    let pts: Vec<Point> = x.chunks_exact(d).map(|c| Point::from_coords(&kind, c).unwrap()).collect();
    Configuration::new(pts)
}

/// Particle indices sorted lexicographically by coordinates.
pub(crate) fn canonical_order(x: &[f64], d: usize) -> Vec<usize> {
    let n = x.len() / d;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&x[a * d..(a + 1) * d], &x[b * d..(b + 1) * d]);
        pa.iter().zip(pb).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Runs the particle system with standard normal increments drawn from
/// `rng` in (step, particle, coordinate) order.
pub fn simulate_mckean_vlasov<R: Rng + ?Sized>(
    config: &Configuration,
    t: f64,
    dt: f64,
    drift: Drift,
    diffusion: Diffusion,
    rng: &mut R,
) -> Result<RunOutcome> {
    simulate_mckean_vlasov_with_noise(config, t, dt, drift, diffusion, |_, _, _| rng.sample(StandardNormal))
}

/// As [`simulate_mckean_vlasov`], with the increment `ξ` for
/// `(step, particle, coordinate)` supplied by `noise`. Called in that
/// lexicographic order, and not at all when the diffusion is zero.
pub fn simulate_mckean_vlasov_with_noise(
    config: &Configuration,
    t: f64,
    dt: f64,
    drift: Drift,
    diffusion: Diffusion,
    mut noise: impl FnMut(usize, usize, usize) -> f64,
) -> Result<RunOutcome> {
    let steps = steps_for(t, dt)?;
    let (mut x, d) = flatten(config)?;
    let n = config.len();
    let inv_n = 1.0 / n as f64;
    let sqrt_dt = dt.sqrt();
    let mut next = x.clone();
    let mut mean = vec![0.0; d];
    for step in 0..steps {
        let order = canonical_order(&x, d);
        let affine = drift.affine_in_y(0.0).is_some();
        if affine {
            mean.fill(0.0);
            for &j in &order {
                for c in 0..d {
                    mean[c] += x[j * d + c];
                }
            }
            mean.iter_mut().for_each(|m| *m *= inv_n);
        }
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            let sigma = match diffusion {
                Diffusion::Zero => 0.0,
                Diffusion::Constant(s) => s,
                Diffusion::Soft(_) => {
                    order.iter().map(|&j| diffusion.eval(xi, &x[j * d..(j + 1) * d])).sum::<f64>() * inv_n
                }
            };
            for c in 0..d {
                let b = if affine {
                    let (a, k) = drift.affine_in_y(xi[c]).unwrap();
                    a + k * mean[c]
                } else {
                    order.iter().map(|&j| drift.eval(xi[c], x[j * d + c])).sum::<f64>() * inv_n
                };
                let mut y = xi[c] + b * dt;
                if diffusion != Diffusion::Zero {
                    y += sigma * sqrt_dt * noise(step, i, c);
                }
                next[i * d + c] = y;
            }
        }
        if let Some(bad) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericBlowup {
                step: step + 1,
                detail: format!("particle {} left the reals", bad / d),
            });
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(RunOutcome { config: unflatten(config, &x, d)?, events: steps as u64, flags: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::permute;
    use crate::stream::RandomStream;

    #[test]
    fn no_drift_no_noise_is_constant() {
        let c = Configuration::from_scalars(&[0.5, -1.0, 3.0]).unwrap();
        let out = simulate_mckean_vlasov(&c, 1.0, 0.1, Drift::Zero, Diffusion::Zero, &mut RandomStream::new(0, 0))
            .unwrap();
        assert_eq!(out.config, c);
    }

    #[test]
    fn duration_must_be_multiple_of_step() {
        let c = Configuration::from_scalars(&[0.5]).unwrap();
        let r = simulate_mckean_vlasov(&c, 1.05, 0.1, Drift::Zero, Diffusion::Zero, &mut RandomStream::new(0, 0));
        assert!(r.is_err());
        let r = simulate_mckean_vlasov(&c, 1.0, 0.0, Drift::Zero, Diffusion::Zero, &mut RandomStream::new(0, 0));
        assert!(r.is_err());
    }

    #[test]
    fn blowup_reports_step() {
        let c = Configuration::from_scalars(&[1.0, 2.0]).unwrap();
        let r = simulate_mckean_vlasov(&c, 100.0, 1.0, Drift::Ou(-1e30), Diffusion::Zero, &mut RandomStream::new(0, 0));
        match r {
            Err(Error::NumericBlowup { step, .. }) => assert!((1..100).contains(&step)),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn ou_variance_approaches_one() {
        let c = Configuration::from_scalars(&[0.0]).unwrap();
        let reps = 10_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for r in 0..reps {
            let out = simulate_mckean_vlasov(
                &c,
                5.0,
                0.01,
                Drift::Ou(1.0),
                Diffusion::Constant(2f64.sqrt()),
                &mut RandomStream::new(11, r),
            )
            .unwrap();
            let x = out.config.scalars().unwrap()[0];
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / reps as f64;
        let var = sum2 / reps as f64 - mean * mean;
        let target = 1.0 - (-10f64).exp();
        assert!((var - target).abs() < 0.05 * target, "variance {var}");
    }

    fn check_exact_equivariance(drift: Drift, diffusion: Diffusion, c: &Configuration) {
        let n = c.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 3 + 1) % n).collect();
        let table: Vec<f64> = {
            let mut rng = RandomStream::new(3, 0);
            (0..20 * n * 3).map(|_| rng.sample(StandardNormal)).collect()
        };
        let d = c.kind().real_dim().unwrap();
        let base = simulate_mckean_vlasov_with_noise(c, 2.0, 0.1, drift, diffusion, |s, i, k| table[(s * n + i) * d + k])
            .unwrap();
        let moved = permute(c, &perm).unwrap();
        let out = simulate_mckean_vlasov_with_noise(&moved, 2.0, 0.1, drift, diffusion, |s, i, k| {
            table[(s * n + perm[i]) * d + k]
        })
        .unwrap();
        assert_eq!(out.config, permute(&base.config, &perm).unwrap());
    }

    #[test]
    fn permutation_equivariance_is_exact() {
        let c = Configuration::from_scalars(&[0.3, -1.2, 0.7, 2.5, -0.1]).unwrap();
        check_exact_equivariance(Drift::LinearAttraction(0.8), Diffusion::Constant(0.5), &c);
        check_exact_equivariance(Drift::TanhAttraction(1.1), Diffusion::Soft(0.7), &c);
        let v = Configuration::from_vec3(&[[0.1, 0.2, 0.3], [1.0, -1.0, 0.0], [0.5, 0.5, -0.5], [2.0, 0.0, 1.0]])
            .unwrap();
        check_exact_equivariance(Drift::TanhAttraction(0.5), Diffusion::Soft(1.0), &v);
    }
}
