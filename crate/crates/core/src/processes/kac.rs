//! Kac's velocity-exchange process on scalar velocities.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{check_duration, RunOutcome};
use crate::empirical::Configuration;
use crate::error::{invalid, Result};

/// Rotates the pair `(v, w)` by `θ`.
pub fn kac_rotation(v: f64, w: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (v * c - w * s, v * s + w * c)
}

/// Event-driven Kac process: collisions arrive at rate `n/τ`, each rotating
/// a uniformly chosen unordered pair by a uniform angle.
pub fn simulate_kac<R: Rng + ?Sized>(config: &Configuration, t: f64, tau: f64, rng: &mut R) -> Result<RunOutcome> {
    let Some(mut v) = config.scalars() else {
        return invalid("Kac process needs scalar velocities");
    };
    let n = v.len();
    if n < 2 {
        return invalid("Kac process needs n >= 2");
    }
    check_duration(t)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return invalid(format!("timescale must be positive, got {tau}"));
    }
    let wait = Exp::new(n as f64 / tau).map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
    let mut clock = 0.0;
    let mut events = 0u64;
    loop {
        clock += wait.sample(rng);
        if clock > t {
            break;
        }
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let theta = rng.random::<f64>() * TAU;
        (v[i], v[j]) = kac_rotation(v[i], v[j], theta);
        events += 1;
    }
    Ok(RunOutcome { config: Configuration::from_scalars(&v)?, events, flags: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

    fn energy(c: &Configuration) -> f64 {
        c.scalars().unwrap().iter().map(|v| v * v).sum()
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(kac_rotation(1.5, -2.0, 0.0), (1.5, -2.0));
        let (a, b) = kac_rotation(1.0, 2.0, std::f64::consts::FRAC_PI_2);
        assert!((a + 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_duration_is_identity() {
        let c = Configuration::from_scalars(&[0.1, -0.4, 2.0]).unwrap();
        let out = simulate_kac(&c, 0.0, 1.0, &mut RandomStream::new(1, 0)).unwrap();
        assert_eq!(out.config, c);
        assert_eq!(out.events, 0);
    }

    #[test]
    fn rejects_bad_input() {
        let one = Configuration::from_scalars(&[1.0]).unwrap();
        assert!(simulate_kac(&one, 1.0, 1.0, &mut RandomStream::new(0, 0)).is_err());
        let two = Configuration::from_scalars(&[1.0, 2.0]).unwrap();
        assert!(simulate_kac(&two, -1.0, 1.0, &mut RandomStream::new(0, 0)).is_err());
        assert!(simulate_kac(&two, 1.0, 0.0, &mut RandomStream::new(0, 0)).is_err());
    }

    #[test]
    fn deterministic_per_stream() {
        let c = Configuration::from_scalars(&[0.3, -1.0, 0.8, 2.2]).unwrap();
        let a = simulate_kac(&c, 3.0, 1.0, &mut RandomStream::new(9, 4)).unwrap();
        let b = simulate_kac(&c, 3.0, 1.0, &mut RandomStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn event_counts_are_poisson() {
        let (n, t, tau, reps) = (10usize, 0.5, 1.0, 10_000u64);
        let c = Configuration::from_scalars(&(0..n).map(|i| i as f64 - 4.5).collect::<Vec<_>>()).unwrap();
        let mean = n as f64 * t / tau;
        let mut counts = [0u64; 13];
        let mut total = 0u64;
        for r in 0..reps {
            let e = simulate_kac(&c, t, tau, &mut RandomStream::new(77, r)).unwrap().events;
            total += e;
            counts[(e as usize).min(12)] += 1;
        }
        let avg = total as f64 / reps as f64;
        let se = (mean / reps as f64).sqrt();
        assert!((avg - mean).abs() < 3.0 * se, "mean count {avg} vs {mean}");

        let pois = Poisson::new(mean).unwrap();
        let mut probs: Vec<f64> = (0..12).map(|k| pois.pmf(k)).collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        let chi2: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&o, &p)| {
                let e = p * reps as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let p_value = 1.0 - ChiSquared::new((probs.len() - 1) as f64).unwrap().cdf(chi2);
        assert!(p_value > 0.001, "chi2 = {chi2}, p = {p_value}");
    }

    proptest! {
        #[test]
        fn rotation_preserves_energy(v in -1e3f64..1e3, w in -1e3f64..1e3, th in 0.0f64..TAU) {
            let (a, b) = kac_rotation(v, w, th);
            let e = v * v + w * w;
            prop_assert!((a * a + b * b - e).abs() <= 1e-12 * e.max(1e-300));
        }

        #[test]
        fn run_conserves_energy(seed in any::<u64>(), xs in prop::collection::vec(-3.0f64..3.0, 2..20)) {
            let c = Configuration::from_scalars(&xs).unwrap();
            let out = simulate_kac(&c, 2.0, 1.0, &mut RandomStream::new(seed, 0)).unwrap();
            let (e0, e1) = (energy(&c), energy(&out.config));
            prop_assert!((e1 - e0).abs() <= 1e-9 * e0.max(1e-300));
        }
    }
}
