//! n-particle Markov dynamics.
//!
//! Every kernel maps a [`Configuration`] and a duration to a new
//! configuration and is equivariant under relabelling of particles.

pub mod builtins;
mod grunbaum;
mod kac;
mod mckean;
mod vlasov;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use builtins::{Diffusion, Drift, Force};
pub use grunbaum::{hard_sphere_collision, sample_admissible_direction, simulate_grunbaum, GrunbaumMode, FROZEN_FLAG};
pub use kac::{kac_rotation, simulate_kac};
pub use mckean::{simulate_mckean_vlasov, simulate_mckean_vlasov_with_noise};
pub use vlasov::simulate_vlasov;

use crate::empirical::Configuration;
use crate::error::{invalid, Result};
use crate::point::Point;

/// Final state of a run plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub config: Configuration,
    /// Collisions for jump processes, time steps for integrators.
    pub events: u64,
    pub flags: Vec<String>,
}

pub(crate) fn check_duration(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("duration must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

/// Number of steps of size `dt` covering `t`, which must be a multiple of
/// `dt` within 1e-9.
pub(crate) fn steps_for(t: f64, dt: f64) -> Result<usize> {
    check_duration(t)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("step must be positive, got {dt}"));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t.max(1.0) {
        return invalid(format!("duration {t} is not a multiple of the step {dt}"));
    }
    Ok(steps as usize)
}

/// The weak-but-not-strong example kernel on binary symbols: all zeros
/// stay all zeros, anything else jumps to all ones.
pub fn counterexample_step(config: &Configuration) -> Result<Configuration> {
    let Some(s) = config.symbols() else {
        return invalid("counterexample kernel needs binary symbols");
    };
    if s.iter().any(|&x| x > 1) {
        return invalid("counterexample kernel needs symbols in {0, 1}");
    }
    let target = u32::from(s.contains(&1));
    Configuration::new(vec![Point::Symbol(target); s.len()])
}

/// One of the built-in n-particle dynamics with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransitionKernel {
    Kac { tau: f64 },
    Grunbaum { mode: GrunbaumMode },
    McKeanVlasov { drift: Drift, diffusion: Diffusion, dt: f64 },
    Vlasov { force: Force, dt: f64 },
    Counterexample,
}

impl TransitionKernel {
    pub fn kind(&self) -> &'static str {
        match self {
            TransitionKernel::Kac { .. } => "kac",
            TransitionKernel::Grunbaum { .. } => "grunbaum",
            TransitionKernel::McKeanVlasov { .. } => "mckean-vlasov",
            TransitionKernel::Vlasov { .. } => "vlasov",
            TransitionKernel::Counterexample => "counterexample",
        }
    }

    /// Mode strings for reports (simulation scheme and options).
    pub fn modes(&self) -> Vec<String> {
        match self {
            TransitionKernel::Kac { .. } => vec!["event-driven".into()],
            TransitionKernel::Grunbaum { mode } => vec![format!("grunbaum-{}", mode.as_str())],
            TransitionKernel::McKeanVlasov { .. } => vec!["euler-maruyama".into()],
            TransitionKernel::Vlasov { .. } => vec!["velocity-verlet".into()],
            TransitionKernel::Counterexample => vec!["single-jump".into()],
        }
    }

    /// True if the kernel draws no random numbers.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, TransitionKernel::Vlasov { .. } | TransitionKernel::Counterexample)
    }

    /// Runs the dynamics for duration `t`. The counterexample kernel jumps
    /// once for any `t > 0` and is the identity at `t = 0`.
    pub fn run<R: Rng + ?Sized>(&self, config: &Configuration, t: f64, rng: &mut R) -> Result<RunOutcome> {
        match *self {
            TransitionKernel::Kac { tau } => simulate_kac(config, t, tau, rng),
            TransitionKernel::Grunbaum { mode } => simulate_grunbaum(config, t, mode, rng),
            TransitionKernel::McKeanVlasov { drift, diffusion, dt } => {
                simulate_mckean_vlasov(config, t, dt, drift, diffusion, rng)
            }
            TransitionKernel::Vlasov { force, dt } => simulate_vlasov(config, t, dt, force),
            TransitionKernel::Counterexample => {
                check_duration(t)?;
                if t == 0.0 {
                    counterexample_step(config)?;
                    return Ok(RunOutcome { config: config.clone(), events: 0, flags: vec![] });
                }
                Ok(RunOutcome { config: counterexample_step(config)?, events: 1, flags: vec![] })
            }
        }
    }
}

impl fmt::Display for TransitionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionKernel::Kac { tau } => write!(f, "kac(tau={tau:?})"),
            TransitionKernel::Grunbaum { mode } => write!(f, "grunbaum({})", mode.as_str()),
            TransitionKernel::McKeanVlasov { drift, diffusion, dt } => {
                write!(f, "mckean-vlasov(drift={drift}, diffusion={diffusion}, dt={dt:?})")
            }
            TransitionKernel::Vlasov { force, dt } => write!(f, "vlasov(force={force}, dt={dt:?})"),
            TransitionKernel::Counterexample => write!(f, "counterexample"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::permute;
    use crate::stream::RandomStream;

    fn syms(s: &[u32]) -> Configuration {
        Configuration::from_symbols(s).unwrap()
    }

    #[test]
    fn counterexample_examples() {
        assert_eq!(counterexample_step(&syms(&[0, 0, 0])).unwrap(), syms(&[0, 0, 0]));
        assert_eq!(counterexample_step(&syms(&[0, 1, 0])).unwrap(), syms(&[1, 1, 1]));
        assert_eq!(counterexample_step(&syms(&[1, 1])).unwrap(), syms(&[1, 1]));
        assert!(counterexample_step(&syms(&[2, 0])).is_err());
    }

    #[test]
    fn counterexample_is_exactly_equivariant() {
        for bits in 0u32..16 {
            let s: Vec<u32> = (0..4).map(|i| bits >> i & 1).collect();
            let c = syms(&s);
            let perm = [3, 1, 0, 2];
            let lhs = counterexample_step(&permute(&c, &perm).unwrap()).unwrap();
            let rhs = permute(&counterexample_step(&c).unwrap(), &perm).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn counterexample_kernel_identity_at_zero() {
        let k = TransitionKernel::Counterexample;
        let c = syms(&[0, 1]);
        let mut rng = RandomStream::new(0, 0);
        assert_eq!(k.run(&c, 0.0, &mut rng).unwrap().config, c);
        assert_eq!(k.run(&c, 0.1, &mut rng).unwrap().config, syms(&[1, 1]));
    }

    #[test]
    fn kernel_serde_round_trip() {
        let ks = [
            TransitionKernel::Kac { tau: 1.0 },
            TransitionKernel::Grunbaum { mode: GrunbaumMode::Gillespie },
            TransitionKernel::McKeanVlasov { drift: Drift::Ou(1.0), diffusion: Diffusion::Constant(0.5), dt: 0.01 },
            TransitionKernel::Vlasov { force: Force::SmoothedCoulomb(0.1), dt: 0.01 },
            TransitionKernel::Counterexample,
        ];
        for k in ks {
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<TransitionKernel>(&json).unwrap(), k);
        }
    }

    /// Two-sample comparison of `step(π·x)` against `π·step(x)`: binned
    /// marginals of every coordinate, each cell within 4.5 standard errors.
    fn distributional_equivariance(kernel: TransitionKernel, c: &Configuration, t: f64, bin: impl Fn(&Point) -> usize, bins: usize) {
        let reps = 10_000u64;
        let n = c.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let moved = permute(c, &perm).unwrap();
        let mut a = vec![vec![0f64; bins]; n];
        let mut b = vec![vec![0f64; bins]; n];
        for r in 0..reps {
            let x = kernel.run(&moved, t, &mut RandomStream::new(1, r)).unwrap().config;
            let y = permute(&kernel.run(c, t, &mut RandomStream::new(2, r)).unwrap().config, &perm).unwrap();
            for i in 0..n {
                a[i][bin(&x.points()[i])] += 1.0;
                b[i][bin(&y.points()[i])] += 1.0;
            }
        }
        for i in 0..n {
            for k in 0..bins {
                let (p, q) = (a[i][k] / reps as f64, b[i][k] / reps as f64);
                let se = ((p * (1.0 - p) + q * (1.0 - q)) / reps as f64).sqrt().max(1e-12);
                assert!((p - q).abs() <= 4.5 * se, "{kernel}: coordinate {i} bin {k}: {p} vs {q}");
            }
        }
    }

    fn scalar_bin(p: &Point) -> usize {
        let x = p.lead();
        (((x + 2.0) / 4.0 * 8.0).floor().clamp(0.0, 7.0)) as usize
    }

    #[test]
    fn kac_equivariant_in_distribution() {
        let c = Configuration::from_scalars(&[1.5, -0.5, 0.2]).unwrap();
        distributional_equivariance(TransitionKernel::Kac { tau: 1.0 }, &c, 0.4, scalar_bin, 8);
    }

    #[test]
    fn grunbaum_equivariant_in_distribution() {
        let c = Configuration::from_vec3(&[[1.0, 0.0, 0.0], [-0.5, 0.5, 0.0], [0.0, -1.0, 0.5]]).unwrap();
        for mode in [GrunbaumMode::Literal, GrunbaumMode::Gillespie] {
            distributional_equivariance(TransitionKernel::Grunbaum { mode }, &c, 0.3, scalar_bin, 8);
        }
    }

    #[test]
    fn mckean_equivariant_in_distribution() {
        let c = Configuration::from_scalars(&[1.0, -1.0, 0.0]).unwrap();
        let k = TransitionKernel::McKeanVlasov { drift: Drift::TanhAttraction(1.0), diffusion: Diffusion::Soft(1.0), dt: 0.05 };
        distributional_equivariance(k, &c, 0.5, scalar_bin, 8);
    }

    #[test]
    fn same_stream_same_output() {
        let c = Configuration::from_vec3(&[[1.0, 0.0, 0.0], [-0.5, 0.5, 0.0], [0.0, -1.0, 0.5]]).unwrap();
        let k = TransitionKernel::Grunbaum { mode: GrunbaumMode::Literal };
        let a = k.run(&c, 1.0, &mut RandomStream::new(4, 2)).unwrap();
        let b = k.run(&c, 1.0, &mut RandomStream::new(4, 2)).unwrap();
        assert_eq!(a, b);
    }
}
