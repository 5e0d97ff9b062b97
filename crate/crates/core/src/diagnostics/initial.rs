//! Initial laws and the n-particle families built from them.

use std::f64::consts::PI;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::empirical::{AtomicMeasure, Configuration};
use crate::entropy::apportion;
use crate::error::{invalid, Result};
use crate::point::{Point, PointKind};

/// A single-particle law that can be sampled and discretized.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Gaussian { mean: f64, std: f64 },
    /// Isotropic normal velocities in three dimensions.
    Maxwellian3 { std: f64 },
    Uniform { lo: f64, hi: f64 },
    Bernoulli { p: f64 },
    /// `Bernoulli(1/n)` on the n-particle level.
    BernoulliInverseN,
    /// Cold sheet in phase space: `x` uniform on `[−1, 1]`,
    /// `v = amplitude·sin(πx)`.
    SineSheet { amplitude: f64 },
    Atoms(AtomicMeasure),
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialLaw::Gaussian { mean, std } if !(std > 0.0 && std.is_finite() && mean.is_finite()) => {
                invalid(format!("gaussian needs finite mean and positive std, got ({mean}, {std})"))
            }
            InitialLaw::Maxwellian3 { std } if !(std > 0.0 && std.is_finite()) => {
                invalid(format!("maxwellian std must be positive, got {std}"))
            }
            InitialLaw::Uniform { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                invalid(format!("uniform needs lo < hi, got [{lo}, {hi}]"))
            }
            InitialLaw::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                invalid(format!("bernoulli p must lie in [0, 1], got {p}"))
            }
            InitialLaw::SineSheet { amplitude } if !amplitude.is_finite() => invalid("sine-sheet amplitude must be finite"),
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> PointKind {
        match self {
            InitialLaw::Gaussian { .. } | InitialLaw::Uniform { .. } => PointKind::Scalar,
            InitialLaw::Maxwellian3 { .. } => PointKind::Vec3,
            InitialLaw::Bernoulli { .. } | InitialLaw::BernoulliInverseN => PointKind::Symbol,
            InitialLaw::SineSheet { .. } => PointKind::Phase(1),
            InitialLaw::Atoms(mu) => mu.kind(),
        }
    }

    fn bernoulli_p(&self, n: usize) -> Option<f64> {
        match *self {
            InitialLaw::Bernoulli { p } => Some(p),
            InitialLaw::BernoulliInverseN => Some(1.0 / n as f64),
            _ => None,
        }
    }

    /// `n` independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Configuration> {
        self.validate()?;
        if let Some(p) = self.bernoulli_p(n) {
            return Configuration::new((0..n).map(|_| Point::Symbol(u32::from(rng.random::<f64>() < p))).collect());
        }
        let points = match self {
            InitialLaw::Gaussian { mean, std } => {
                (0..n).map(|_| Point::Scalar(mean + std * rng.sample::<f64, _>(StandardNormal))).collect()
            }
            InitialLaw::Maxwellian3 { std } => (0..n)
                .map(|_| Point::Vec3(std::array::from_fn(|_| std * rng.sample::<f64, _>(StandardNormal))))
                .collect(),
            InitialLaw::Uniform { lo, hi } => (0..n).map(|_| Point::Scalar(rng.random_range(*lo..*hi))).collect(),
            InitialLaw::SineSheet { amplitude } => {
                (0..n).map(|_| sheet_point(rng.random_range(-1.0..1.0), *amplitude)).collect()
            }
            InitialLaw::Atoms(mu) => mu.sample(n, rng),
            InitialLaw::Bernoulli { .. } | InitialLaw::BernoulliInverseN => unreachable!(),
        };
        Configuration::new(points)
    }

    /// A deterministic configuration whose empirical measure approximates
    /// the law: quantile midpoints on the line, a Hammersley set pushed
    /// through the normal quantile in three dimensions, largest-remainder
    /// counts on finite supports. Returned in canonical (sorted) order.
    pub fn pure_atomic(&self, n: usize) -> Result<Configuration> {
        self.validate()?;
        if n == 0 {
            return invalid("n must be positive");
        }
        let u = |i: usize| (i as f64 + 0.5) / n as f64;
        let mut points: Vec<Point> = if let Some(p) = self.bernoulli_p(n) {
            let c = apportion(n, &[1.0 - p, p]);
            std::iter::repeat_n(Point::Symbol(0), c[0]).chain(std::iter::repeat_n(Point::Symbol(1), c[1])).collect()
        } else {
            match self {
                InitialLaw::Gaussian { mean, std } => {
                    let q = Normal::new(*mean, *std).expect("validated");
                    (0..n).map(|i| Point::Scalar(q.inverse_cdf(u(i)))).collect()
                }
                InitialLaw::Maxwellian3 { std } => {
                    let q = Normal::new(0.0, *std).expect("validated");
                    (0..n)
                        .map(|i| {
                            Point::Vec3([
                                q.inverse_cdf(u(i)),
                                q.inverse_cdf(radical_inverse(i + 1, 2)),
                                q.inverse_cdf(radical_inverse(i + 1, 3)),
                            ])
                        })
                        .collect()
                }
                InitialLaw::Uniform { lo, hi } => (0..n).map(|i| Point::Scalar(lo + (hi - lo) * u(i))).collect(),
                InitialLaw::SineSheet { amplitude } => {
                    (0..n).map(|i| sheet_point(2.0 * u(i) - 1.0, *amplitude)).collect()
                }
                InitialLaw::Atoms(mu) => {
                    let c = apportion(n, mu.weights());
                    mu.atoms().iter().zip(c).flat_map(|(a, k)| std::iter::repeat_n(a.clone(), k)).collect()
                }
                InitialLaw::Bernoulli { .. } | InitialLaw::BernoulliInverseN => unreachable!(),
            }
        };
        points.sort();
        Configuration::new(points)
    }

    /// Finitely supported stand-in for the law: exact for finite laws,
    /// otherwise the empirical measure of [`InitialLaw::pure_atomic`] with
    /// `n` points.
    pub fn atomic_approximation(&self, n: usize) -> Result<AtomicMeasure> {
        self.validate()?;
        match self {
            InitialLaw::Atoms(mu) => Ok(mu.clone()),
            InitialLaw::Bernoulli { .. } | InitialLaw::BernoulliInverseN => {
                let p = self.bernoulli_p(n).expect("bernoulli");
                AtomicMeasure::from_masses(vec![Point::Symbol(0), Point::Symbol(1)], vec![1.0 - p, p])
            }
            _ => Ok(crate::empirical::empirical_measure(&self.pure_atomic(n)?)),
        }
    }
}

fn sheet_point(x: f64, amplitude: f64) -> Point {
    Point::Phase { x: vec![x], v: vec![amplitude * (PI * x).sin()] }
}

/// Van der Corput radical inverse of `i` in `base`; lies in (0, 1) for i ≥ 1.
fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut out = 0.0;
    let mut scale = 1.0 / base as f64;
    while i > 0 {
        out += (i % base) as f64 * scale;
        i /= base;
        scale /= base as f64;
    }
    out
}

impl fmt::Display for InitialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialLaw::Gaussian { mean, std } => write!(f, "gaussian(mean={mean:?}, std={std:?})"),
            InitialLaw::Maxwellian3 { std } => write!(f, "maxwellian3(std={std:?})"),
            InitialLaw::Uniform { lo, hi } => write!(f, "uniform({lo:?}, {hi:?})"),
            InitialLaw::Bernoulli { p } => write!(f, "bernoulli({p:?})"),
            InitialLaw::BernoulliInverseN => write!(f, "bernoulli(1/n)"),
            InitialLaw::SineSheet { amplitude } => write!(f, "sine-sheet(amplitude={amplitude:?})"),
            InitialLaw::Atoms(mu) => write!(f, "atoms({})", mu.len()),
        }
    }
}

/// How the n-particle initial law is built from single-particle laws.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialFamily {
    /// i.i.d. coordinates.
    Product(InitialLaw),
    /// Uniformly permuted copies of [`InitialLaw::pure_atomic`].
    PureAtomic(InitialLaw),
    /// Each replica picks one component uniformly, then draws i.i.d. from
    /// it. Not chaotic unless all components agree.
    Mixture(Vec<InitialLaw>),
}

impl InitialFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialFamily::Product(l) | InitialFamily::PureAtomic(l) => l.validate(),
            InitialFamily::Mixture(ls) => {
                let Some(first) = ls.first() else { return invalid("mixture needs at least one component") };
                for l in ls {
                    l.validate()?;
                    if l.kind() != first.kind() {
                        return invalid("mixture components live in different state spaces");
                    }
                }
                Ok(())
            }
        }
    }

    /// One-particle law of the family (the equal-weight average for
    /// mixtures), see [`InitialLaw::atomic_approximation`].
    pub fn atomic_approximation(&self, n: usize) -> Result<AtomicMeasure> {
        match self {
            InitialFamily::Product(l) | InitialFamily::PureAtomic(l) => l.atomic_approximation(n),
            InitialFamily::Mixture(ls) => {
                self.validate()?;
                let parts = ls.iter().map(|l| l.atomic_approximation(n)).collect::<Result<Vec<_>>>()?;
                let mut atoms = Vec::new();
                let mut masses = Vec::new();
                for part in &parts {
                    for (a, w) in part.iter() {
                        atoms.push(a.clone());
                        masses.push(w);
                    }
                }
                AtomicMeasure::from_masses(atoms, masses)
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Configuration> {
        match self {
            InitialFamily::Product(l) => l.sample(n, rng),
            InitialFamily::PureAtomic(l) => {
                let mut points = l.pure_atomic(n)?.into_points();
                points.shuffle(rng);
                Configuration::new(points)
            }
            InitialFamily::Mixture(ls) => {
                self.validate()?;
                let i = rng.random_range(0..ls.len());
                ls[i].sample(n, rng)
            }
        }
    }
}

impl fmt::Display for InitialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialFamily::Product(l) => write!(f, "product {l}"),
            InitialFamily::PureAtomic(l) => write!(f, "pure-atomic {l}"),
            InitialFamily::Mixture(ls) => {
                let parts: Vec<String> = ls.iter().map(ToString::to_string).collect();
                write!(f, "mixture [{}]", parts.join(", "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::empirical_measure;
    use crate::metrics::{bl_distance, MetricOptions};
    use crate::stream::RandomStream;

    #[test]
    fn pure_atomic_bernoulli_counts() {
        let c = InitialLaw::BernoulliInverseN.pure_atomic(10).unwrap();
        assert_eq!(c.symbols().unwrap(), vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        let z = InitialLaw::Bernoulli { p: 0.0 }.pure_atomic(5).unwrap();
        assert_eq!(z.symbols().unwrap(), vec![0; 5]);
    }

    #[test]
    fn gaussian_quantiles_symmetric() {
        let c = InitialLaw::Gaussian { mean: 0.0, std: 1.0 }.pure_atomic(101).unwrap();
        let s = c.scalars().unwrap();
        assert!(s[50].abs() < 1e-12);
        for i in 0..50 {
            assert!((s[i] + s[100 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_atomic_matches_sampling() {
        let law = InitialLaw::Gaussian { mean: 0.5, std: 2.0 };
        let mut rng = RandomStream::new(4, 0);
        let sampled = empirical_measure(&law.sample(4000, &mut rng).unwrap());
        let o = MetricOptions::default();
        let gaps: Vec<f64> = [50, 200, 800]
            .iter()
            .map(|&n| bl_distance(&empirical_measure(&law.pure_atomic(n).unwrap()), &sampled, &o).unwrap().value)
            .collect();
        assert!(gaps[2] < 0.05, "{gaps:?}");
    }

    #[test]
    fn sheet_and_maxwellian_shapes() {
        let s = InitialLaw::SineSheet { amplitude: 0.5 }.pure_atomic(4).unwrap();
        assert_eq!(s.kind(), PointKind::Phase(1));
        let m = InitialLaw::Maxwellian3 { std: 1.0 }.pure_atomic(64).unwrap();
        let mean: [f64; 3] = std::array::from_fn(|c| m.vec3s().unwrap().iter().map(|v| v[c]).sum::<f64>() / 64.0);
        assert!(mean.iter().all(|x| x.abs() < 0.1), "{mean:?}");
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn family_draws_are_reproducible() {
        let fam = InitialFamily::PureAtomic(InitialLaw::Uniform { lo: 0.0, hi: 1.0 });
        let a = fam.draw(20, &mut RandomStream::new(1, 2)).unwrap();
        let b = fam.draw(20, &mut RandomStream::new(1, 2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(empirical_measure(&a), empirical_measure(&InitialLaw::Uniform { lo: 0.0, hi: 1.0 }.pure_atomic(20).unwrap()));
        let mix = InitialFamily::Mixture(vec![InitialLaw::Bernoulli { p: 0.0 }, InitialLaw::Bernoulli { p: 1.0 }]);
        let c = mix.draw(8, &mut RandomStream::new(3, 0)).unwrap().symbols().unwrap();
        assert!(c.iter().all(|&x| x == c[0]));
        assert!(InitialFamily::Mixture(vec![]).validate().is_err());
    }

    #[test]
    fn atomic_approximations() {
        let b = InitialLaw::BernoulliInverseN.atomic_approximation(4).unwrap();
        assert_eq!(b.weights(), &[0.75, 0.25]);
        let mix = InitialFamily::Mixture(vec![InitialLaw::Bernoulli { p: 0.0 }, InitialLaw::Bernoulli { p: 1.0 }]);
        assert_eq!(mix.atomic_approximation(10).unwrap().weights(), &[0.5, 0.5]);
        let g = InitialLaw::Gaussian { mean: 0.0, std: 1.0 }.atomic_approximation(100).unwrap();
        assert_eq!(g.len(), 100);
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(InitialLaw::Gaussian { mean: 0.0, std: 0.0 }.validate().is_err());
        assert!(InitialLaw::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(InitialLaw::Bernoulli { p: 1.5 }.validate().is_err());
    }
}
