//! Explicit solver for the one-dimensional Kac–Boltzmann equation
//!
//! ```text
//! ∂f/∂t = (2/τ) [ c·G[f](v) − f(v) ],
//! G[f](v) = (1/2π) ∮ ∫ f(v cosθ − w sinθ) f(v sinθ + w cosθ) dw dθ.
//! ```
//!
//! `G` uses the periodic trapezoid rule in θ and the midpoint rule on the
//! grid in `w`, with linear interpolation of the density between cell
//! centers. The discrete gain is reweighted by `c(v) = c₀ + c₂v²`, with
//! `c₀, c₂` chosen so that the gain has exactly the mass and energy of the
//! loss term; every step then conserves both up to rounding.

use std::f64::consts::TAU;

use super::GridLaw1D;
use crate::error::{invalid, Error, Result};
use crate::processes::steps_for;

/// Cells near each boundary that must stay (almost) empty.
const GUARD_CELLS: usize = 3;
const GUARD_MASS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KacPdeOptions {
    pub theta_nodes: usize,
}

impl Default for KacPdeOptions {
    fn default() -> Self {
        Self { theta_nodes: 64 }
    }
}

/// Linear interpolation of `dens` (values at centers `lo + (i + ½)dx`),
/// zero outside the outermost centers.
#[inline]
fn interp(dens: &[f64], first_center: f64, inv_dx: f64, x: f64) -> f64 {
    let s = (x - first_center) * inv_dx;
    if !(s >= 0.0) {
        return 0.0;
    }
    let i = s as usize;
    if i + 1 >= dens.len() {
        return if i + 1 == dens.len() && s == i as f64 { dens[i] } else { 0.0 };
    }
    let frac = s - i as f64;
    dens[i] + frac * (dens[i + 1] - dens[i])
}

fn guard_mass(masses: &[f64]) -> f64 {
    let g = GUARD_CELLS.min(masses.len() / 2);
    masses[..g].iter().sum::<f64>() + masses[masses.len() - g..].iter().sum::<f64>()
}

/// Discrete gain masses `G[f](v_i)·Δx`.
fn gain(grid: &GridLaw1D, masses: &[f64], trig: &[(f64, f64)]) -> Vec<f64> {
    let m = masses.len();
    let dx = grid.dx();
    let inv_dx = 1.0 / dx;
    let dens: Vec<f64> = masses.iter().map(|x| x * inv_dx).collect();
    let c0 = grid.center(0);
    let centers = grid.centers();
    // Skip w-cells whose density is negligible: their products vanish.
    let active: Vec<usize> = (0..m).filter(|&j| dens[j] > 0.0 || (j > 0 && dens[j - 1] > 0.0)).collect();
    let weight = dx / trig.len() as f64;
    centers
        .iter()
        .map(|&v| {
            let mut acc = 0.0;
            for &(s, c) in trig {
                let (vc, vs) = (v * c, v * s);
                for &j in &active {
                    let w = centers[j];
                    let a = interp(&dens, c0, inv_dx, vc - w * s);
                    if a == 0.0 {
                        continue;
                    }
                    acc += a * interp(&dens, c0, inv_dx, vs + w * c);
                }
            }
            acc * weight * dx
        })
        .collect()
}

/// Coefficients `(c₀, c₂)` with `Σ g(c₀ + c₂v²) = Σ m` and
/// `Σ g v²(c₀ + c₂v²) = Σ m v²`. Falls back to pure mass scaling when all
/// gain sits at a single `|v|`.
fn moment_match(centers: &[f64], masses: &[f64], g: &[f64]) -> Option<(f64, f64)> {
    let (mut g0, mut g2, mut g4, mut m0, mut m2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((v, gi), mi) in centers.iter().zip(g).zip(masses) {
        let v2 = v * v;
        g0 += gi;
        g2 += gi * v2;
        g4 += gi * v2 * v2;
        m0 += mi;
        m2 += mi * v2;
    }
    if !(g0 > 0.0) {
        return None;
    }
    let det = g0 * g4 - g2 * g2;
    if det <= 1e-12 * g0 * g4 {
        return Some((m0 / g0, 0.0));
    }
    Some(((m0 * g4 - m2 * g2) / det, (g0 * m2 - g2 * m0) / det))
}

/// Advances `f0` to time `t` with step `dt`.
///
/// Fails with a step-size error if a cell mass turns negative and with a
/// domain error if more than 1e-6 of the mass sits within three cells of
/// the boundary.
pub fn solve_kac_caricature(
    f0: &GridLaw1D,
    t: f64,
    tau: f64,
    dt: f64,
    opts: &KacPdeOptions,
) -> Result<GridLaw1D> {
    if !(tau > 0.0 && tau.is_finite()) {
        return invalid(format!("timescale must be positive, got {tau}"));
    }
    if opts.theta_nodes == 0 {
        return invalid("need at least one θ node");
    }
    let steps = steps_for(t, dt)?;
    let check_guard = |masses: &[f64], step: usize| -> Result<()> {
        let g = guard_mass(masses);
        if g > GUARD_MASS {
            return Err(Error::Domain(format!(
                "mass {g:e} within {GUARD_CELLS} cells of the boundary at step {step}; widen the grid"
            )));
        }
        Ok(())
    };
    check_guard(f0.masses(), 0)?;
    let trig: Vec<(f64, f64)> = (0..opts.theta_nodes)
        .map(|k| (TAU * k as f64 / opts.theta_nodes as f64).sin_cos())
        .collect();
    let rate = 2.0 / tau;
    let centers = f0.centers();
    let mut masses = f0.masses().to_vec();
    for step in 1..=steps {
        let g = gain(f0, &masses, &trig);
        let (c0, c2) = moment_match(&centers, &masses, &g)
            .ok_or_else(|| Error::Solver(format!("gain term degenerate at step {step}")))?;
        for ((m, gi), v) in masses.iter_mut().zip(&g).zip(&centers) {
            *m += dt * rate * ((c0 + c2 * v * v) * gi - *m);
        }
        if let Some(i) = masses.iter().position(|&m| m < 0.0) {
            return Err(Error::StepSize {
                step,
                detail: format!("cell {i} mass {:e} went negative; reduce the step", masses[i]),
            });
        }
        check_guard(&masses, step)?;
    }
    GridLaw1D::new(f0.half_width(), masses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_duration_is_identity() {
        let f0 = GridLaw1D::gaussian(0.0, 1.0, 64).unwrap();
        let f = solve_kac_caricature(&f0, 0.0, 1.0, 0.1, &KacPdeOptions::default()).unwrap();
        assert_eq!(f, f0);
    }

    #[test]
    fn interpolation_hits_nodes() {
        let d = [1.0, 3.0, 2.0];
        assert_eq!(interp(&d, 0.5, 1.0, 0.5), 1.0);
        assert_eq!(interp(&d, 0.5, 1.0, 1.0), 2.0);
        assert_eq!(interp(&d, 0.5, 1.0, 2.5), 2.0);
        assert_eq!(interp(&d, 0.5, 1.0, 2.6), 0.0);
        assert_eq!(interp(&d, 0.5, 1.0, 0.4), 0.0);
    }

    #[test]
    fn gaussian_is_nearly_stationary_and_conserves() {
        let f0 = GridLaw1D::gaussian(0.0, 1.0, 256).unwrap();
        let f = solve_kac_caricature(&f0, 1.0, 1.0, 0.05, &KacPdeOptions::default()).unwrap();
        assert!((f.total_mass() - 1.0).abs() < 1e-8);
        assert!((f.energy() - f0.energy()).abs() <= 1e-4 * f0.energy(), "{} vs {}", f.energy(), f0.energy());
        let r = f.l1_distance(&f0).unwrap();
        assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn non_gaussian_relaxes_with_conservation() {
        // Two bumps relax toward a single Maxwellian of equal energy.
        let f0 = GridLaw1D::from_density(6.0, 256, |x| {
            (-2.0 * (x - 1.0).powi(2)).exp() + (-2.0 * (x + 1.0).powi(2)).exp()
        })
        .unwrap();
        let f = solve_kac_caricature(&f0, 1.0, 1.0, 0.05, &KacPdeOptions::default()).unwrap();
        assert!((f.total_mass() - 1.0).abs() < 1e-8);
        assert!((f.energy() - f0.energy()).abs() <= 1e-4 * f0.energy(), "{} vs {}", f.energy(), f0.energy());
        let e = f0.energy();
        let maxwell = GridLaw1D::from_density(6.0, 256, |x| (-0.5 * x * x / e).exp()).unwrap();
        assert!(f.l1_distance(&maxwell).unwrap() < f0.l1_distance(&maxwell).unwrap());
    }

    #[test]
    fn boundary_escape_detected() {
        let f0 = GridLaw1D::from_density(2.0, 64, |x| (-0.5 * x * x).exp()).unwrap();
        let r = solve_kac_caricature(&f0, 0.1, 1.0, 0.05, &KacPdeOptions::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn oversized_step_detected() {
        let f0 = GridLaw1D::from_density(6.0, 64, |x| {
            (-8.0 * (x - 1.5).powi(2)).exp() + (-8.0 * (x + 1.5).powi(2)).exp()
        })
        .unwrap();
        let r = solve_kac_caricature(&f0, 3.0, 1.0, 1.5, &KacPdeOptions::default());
        assert!(matches!(r, Err(Error::StepSize { .. })), "{r:?}");
    }
}
