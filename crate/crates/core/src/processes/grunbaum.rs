//! Hard-sphere collisions and Grünbaum's three-stage jump process on
//! 3D velocities.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{check_duration, RunOutcome};
use crate::empirical::Configuration;
use crate::error::{invalid, Error, Result};

pub type Vec3 = [f64; 3];

/// Flag attached to runs whose velocities were all equal.
pub const FROZEN_FLAG: &str = "frozen: all velocities equal";

/// How pair selection and waiting times are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrunbaumMode {
    /// Select a pair, wait `Exp(mean ‖v_i − v_j‖/(n − 1))`, then collide
    /// with probability ½ along `l` drawn with density ∝ `|(v_i − v_j)·l|`.
    #[default]
    Literal,
    /// As `Literal` but the wait has rate `(n − 1)‖v_i − v_j‖`.
    Inverse,
    /// Global clock with total rate `Σ_p r_p / N_pairs`, pair `p` chosen
    /// with probability ∝ `r_p = (n − 1)‖Δv_p‖`, thinning as above.
    Gillespie,
}

impl GrunbaumMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GrunbaumMode::Literal => "literal",
            GrunbaumMode::Inverse => "inverse",
            GrunbaumMode::Gillespie => "gillespie",
        }
    }
}

impl std::str::FromStr for GrunbaumMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(GrunbaumMode::Literal),
            "inverse" => Ok(GrunbaumMode::Inverse),
            "gillespie" => Ok(GrunbaumMode::Gillespie),
            _ => Err(Error::Config(format!("unknown grunbaum mode {s:?} (expected literal, inverse, gillespie)"))),
        }
    }
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Elastic collision of equal-mass spheres along the unit vector `l`.
pub fn hard_sphere_collision(v: &Vec3, w: &Vec3, l: &Vec3) -> Result<(Vec3, Vec3)> {
    if (norm(l) - 1.0).abs() > 1e-12 {
        return invalid(format!("collision direction has norm {}, not 1", norm(l)));
    }
    let k = dot(&sub(w, v), l);
    Ok((
        [v[0] + k * l[0], v[1] + k * l[1], v[2] + k * l[2]],
        [w[0] - k * l[0], w[1] - k * l[1], w[2] - k * l[2]],
    ))
}

/// Orthonormal pair spanning the plane perpendicular to the unit vector `a`.
fn perpendicular_frame(a: &Vec3) -> (Vec3, Vec3) {
    let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&helper, a);
    let mut e1 = [helper[0] - d * a[0], helper[1] - d * a[1], helper[2] - d * a[2]];
    let n1 = norm(&e1);
    e1.iter_mut().for_each(|x| *x /= n1);
    let e2 = [a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2], a[0] * e1[1] - a[1] * e1[0]];
    (e1, e2)
}

/// Unit vector on the hemisphere `{l : (w − v)·l < 0}` with density
/// proportional to `|(w − v)·l|`, by inverse CDF of the polar angle about
/// `−(w − v)`. `v ≠ w` is required.
pub fn sample_admissible_direction<R: Rng + ?Sized>(v: &Vec3, w: &Vec3, rng: &mut R) -> Vec3 {
    let rel = sub(w, v);
    let r = norm(&rel);
    let axis = [-rel[0] / r, -rel[1] / r, -rel[2] / r];
    // Polar density ∝ cos α sin α on [0, π/2] has CDF sin²α.
    let cos_a = rng.random::<f64>().sqrt();
    let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
    let phi = rng.random::<f64>() * TAU;
    let (e1, e2) = perpendicular_frame(&axis);
    let (s, c) = phi.sin_cos();
    let mut l = [0.0; 3];
    for k in 0..3 {
        l[k] = cos_a * axis[k] + sin_a * (c * e1[k] + s * e2[k]);
    }
    let nl = norm(&l);
    l.iter_mut().for_each(|x| *x /= nl);
    l
}

/// Grünbaum's jump process, run for duration `t`.
///
/// An all-equal initial state is returned unchanged with [`FROZEN_FLAG`],
/// since stage 2 could never find a distinct pair.
pub fn simulate_grunbaum<R: Rng + ?Sized>(
    config: &Configuration,
    t: f64,
    mode: GrunbaumMode,
    rng: &mut R,
) -> Result<RunOutcome> {
    let Some(mut v) = config.vec3s() else {
        return invalid("Grünbaum process needs 3D velocities");
    };
    let n = v.len();
    if n < 2 {
        return invalid("Grünbaum process needs n >= 2");
    }
    check_duration(t)?;
    if v.iter().all(|x| x == &v[0]) {
        return Ok(RunOutcome { config: config.clone(), events: 0, flags: vec![FROZEN_FLAG.to_string()] });
    }
    let events = match mode {
        GrunbaumMode::Literal | GrunbaumMode::Inverse => run_pairwise(&mut v, t, mode, rng),
        GrunbaumMode::Gillespie => run_gillespie(&mut v, t, rng),
    };
    Ok(RunOutcome { config: Configuration::from_vec3(&v)?, events, flags: vec![] })
}

fn pick_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Stage 3: with probability ½ (the mean of `|û·l|` over uniform `l` on the
/// hemisphere, so the most favourable `l` is accepted with probability 1)
/// collide along a direction drawn ∝ `|û·l|`. Returns whether it collided.
fn stage_three<R: Rng + ?Sized>(v: &mut [Vec3], i: usize, j: usize, rng: &mut R) -> bool {
    if rng.random::<f64>() >= 0.5 {
        return false;
    }
    let l = sample_admissible_direction(&v[i], &v[j], rng);
    let k = dot(&sub(&v[j], &v[i]), &l);
    for c in 0..3 {
        v[i][c] += k * l[c];
        v[j][c] -= k * l[c];
    }
    true
}

fn run_pairwise<R: Rng + ?Sized>(v: &mut [Vec3], t: f64, mode: GrunbaumMode, rng: &mut R) -> u64 {
    let n = v.len();
    let scale = (n - 1) as f64;
    let mut clock = 0.0;
    let mut events = 0;
    loop {
        let (i, j) = loop {
            let (i, j) = pick_pair(n, rng);
            if v[i] != v[j] {
                break (i, j);
            }
        };
        let speed = norm(&sub(&v[i], &v[j]));
        let rate = match mode {
            GrunbaumMode::Inverse => scale * speed,
            _ => scale / speed,
        };
        // Exp::new only fails for a negative or NaN rate.
        let Ok(wait) = Exp::new(rate) else { break };
        clock += wait.sample(rng);
        if clock > t {
            break;
        }
        if stage_three(v, i, j, rng) {
            events += 1;
        }
    }
    events
}

fn run_gillespie<R: Rng + ?Sized>(v: &mut [Vec3], t: f64, rng: &mut R) -> u64 {
    let n = v.len();
    let scale = (n - 1) as f64;
    let pairs = n * (n - 1) / 2;
    let index = |i: usize, j: usize| i * n - i * (i + 1) / 2 + (j - i - 1);
    let mut rates = vec![0.0; pairs];
    for i in 0..n {
        for j in i + 1..n {
            rates[index(i, j)] = scale * norm(&sub(&v[i], &v[j]));
        }
    }
    let mut clock = 0.0;
    let mut events = 0;
    loop {
        let total: f64 = rates.iter().sum();
        let Ok(wait) = Exp::new(total / pairs as f64) else { break };
        clock += wait.sample(rng);
        if clock > t {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = pairs - 1;
        for (p, r) in rates.iter().enumerate() {
            if u < *r {
                chosen = p;
                break;
            }
            u -= r;
        }
        let (mut i, mut j) = (0, 0);
        'find: for a in 0..n {
            for b in a + 1..n {
                if index(a, b) == chosen {
                    (i, j) = (a, b);
                    break 'find;
                }
            }
        }
        if rng.random::<bool>() {
            std::mem::swap(&mut i, &mut j);
        }
        if v[i] == v[j] {
            continue;
        }
        if stage_three(v, i, j, rng) {
            events += 1;
            for k in 0..n {
                for &m in &[i, j] {
                    if k != m {
                        let (a, b) = if k < m { (k, m) } else { (m, k) };
                        rates[index(a, b)] = scale * norm(&sub(&v[a], &v[b]));
                    }
                }
            }
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;
    use proptest::prelude::*;
    use rand::Rng;

    fn totals(c: &Configuration) -> (Vec3, f64) {
        let vs = c.vec3s().unwrap();
        let mut p = [0.0; 3];
        let mut e = 0.0;
        for v in &vs {
            for k in 0..3 {
                p[k] += v[k];
            }
            e += dot(v, v);
        }
        (p, e)
    }

    #[test]
    fn head_on_exchange() {
        let (a, b) = hard_sphere_collision(&[0.0; 3], &[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a, [1.0, 0.0, 0.0]);
        assert_eq!(b, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn grazing_leaves_velocities() {
        let v = [0.2, 0.0, 1.0];
        let w = [1.2, 0.0, 1.0];
        let (a, b) = hard_sphere_collision(&v, &w, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!((a, b), (v, w));
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(hard_sphere_collision(&[0.0; 3], &[1.0; 3], &[1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn two_particle_energy_is_two() {
        let c = Configuration::from_vec3(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        for mode in [GrunbaumMode::Literal, GrunbaumMode::Inverse, GrunbaumMode::Gillespie] {
            for seed in 0..50 {
                let out = simulate_grunbaum(&c, 3.0, mode, &mut RandomStream::new(seed, 0)).unwrap();
                assert!((totals(&out.config).1 - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_duration_and_frozen() {
        let c = Configuration::from_vec3(&[[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [3.0, 0.0, 0.0]]).unwrap();
        let out = simulate_grunbaum(&c, 0.0, GrunbaumMode::Literal, &mut RandomStream::new(0, 0)).unwrap();
        assert_eq!(out.config, c);
        let same = Configuration::from_vec3(&[[1.0, 1.0, 1.0]; 4]).unwrap();
        let out = simulate_grunbaum(&same, 5.0, GrunbaumMode::Literal, &mut RandomStream::new(0, 0)).unwrap();
        assert_eq!(out.config, same);
        assert_eq!(out.flags, vec![FROZEN_FLAG.to_string()]);
    }

    /// The inverse-CDF sampler against rejection sampling from the uniform
    /// hemisphere with acceptance `|û·l|`: compare the polar-cosine
    /// histograms.
    #[test]
    fn direction_sampler_matches_rejection() {
        let v = [0.3, -0.2, 0.5];
        let w = [1.0, 0.4, -0.3];
        let rel = sub(&w, &v);
        let u = rel.map(|x| x / norm(&rel));
        let mut rng = RandomStream::new(5, 0);
        let bins = 10;
        let samples = 40_000;
        let mut direct = vec![0f64; bins];
        for _ in 0..samples {
            let l = sample_admissible_direction(&v, &w, &mut rng);
            assert!((norm(&l) - 1.0).abs() < 1e-12);
            let c = -dot(&u, &l);
            assert!(c >= 0.0);
            direct[((c * bins as f64) as usize).min(bins - 1)] += 1.0;
        }
        let mut reject = vec![0f64; bins];
        let mut got = 0;
        while got < samples {
            let z: Vec3 = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
            let nz = norm(&z);
            if !(1e-9..=1.0).contains(&nz) {
                continue;
            }
            let l = z.map(|x| x / nz);
            let c = -dot(&u, &l);
            if c <= 0.0 || rng.random::<f64>() >= c {
                continue;
            }
            reject[((c * bins as f64) as usize).min(bins - 1)] += 1.0;
            got += 1;
        }
        for b in 0..bins {
            let (p, q) = (direct[b] / samples as f64, reject[b] / samples as f64);
            let se = ((p * (1.0 - p) + q * (1.0 - q)) / samples as f64).sqrt();
            assert!((p - q).abs() < 5.0 * se, "bin {b}: {p} vs {q}");
        }
    }

    proptest! {
        #[test]
        fn collision_conserves(v in prop::array::uniform3(-5.0f64..5.0), w in prop::array::uniform3(-5.0f64..5.0),
                               l in prop::array::uniform3(-1.0f64..1.0)) {
            let nl = norm(&l);
            prop_assume!(nl > 1e-3);
            let l = l.map(|x| x / nl);
            let (a, b) = hard_sphere_collision(&v, &w, &l).unwrap();
            for k in 0..3 {
                prop_assert!((a[k] + b[k] - v[k] - w[k]).abs() < 1e-12);
            }
            let e0 = dot(&v, &v) + dot(&w, &w);
            prop_assert!((dot(&a, &a) + dot(&b, &b) - e0).abs() < 1e-12 * e0.max(1.0));
        }

        #[test]
        fn run_conserves_momentum_and_energy(seed in any::<u64>(), mode in 0usize..3) {
            let mode = [GrunbaumMode::Literal, GrunbaumMode::Inverse, GrunbaumMode::Gillespie][mode];
            let mut rng = RandomStream::new(seed, 1);
            let vs: Vec<Vec3> = (0..12).map(|_| [rng.random::<f64>() - 0.5, rng.random::<f64>(), rng.random::<f64>() * 2.0]).collect();
            let c = Configuration::from_vec3(&vs).unwrap();
            let out = simulate_grunbaum(&c, 1.0, mode, &mut rng).unwrap();
            let ((p0, e0), (p1, e1)) = (totals(&c), totals(&out.config));
            let scale = e0.sqrt();
            for k in 0..3 {
                prop_assert!((p1[k] - p0[k]).abs() <= 1e-9 * scale);
            }
            prop_assert!((e1 - e0).abs() <= 1e-9 * e0);
        }
    }
}
