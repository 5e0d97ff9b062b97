//! Conservative finite differences for the one-dimensional nonlinear
//! Fokker–Planck equation
//!
//! ```text
//! ∂f/∂t = −∂_x(V_f f) + ½ ∂_xx(D_f f),
//! V_f(x) = ∫ b(x, y) f(y) dy,   D_f(x) = (∫ σ(x, y) f(y) dy)².
//! ```
//!
//! Fluxes live on cell faces: upwind for advection, centered differences
//! of `D_f f` for diffusion, zero flux through the two boundary faces.

use super::GridLaw1D;
use crate::error::{Error, Result};
use crate::processes::{steps_for, Diffusion, Drift};

fn coefficients(grid: &GridLaw1D, masses: &[f64], drift: Drift, diffusion: Diffusion, vel: &mut [f64], diff: &mut [f64]) {
    let centers = grid.centers();
    let mean: f64 = masses.iter().zip(&centers).map(|(m, x)| m * x).sum();
    for (i, &x) in centers.iter().enumerate() {
        vel[i] = match drift.affine_in_y(x) {
            Some((a, c)) => a + c * mean,
            None => masses.iter().zip(&centers).map(|(m, &y)| m * drift.eval(x, y)).sum(),
        };
        let s = match diffusion {
            Diffusion::Zero => 0.0,
            Diffusion::Constant(s) => s,
            Diffusion::Soft(_) => masses.iter().zip(&centers).map(|(m, &y)| m * diffusion.eval(&[x], &[y])).sum(),
        };
        diff[i] = s * s;
    }
}

/// Advances `f0` to time `t` with step `dt`.
///
/// The step must satisfy `σ_max² Δt ≤ 0.4 Δx²`, checked before stepping.
pub fn solve_mckean_vlasov_fp1d(
    f0: &GridLaw1D,
    t: f64,
    drift: Drift,
    diffusion: Diffusion,
    dt: f64,
) -> Result<GridLaw1D> {
    let steps = steps_for(t, dt)?;
    let dx = f0.dx();
    let smax = diffusion.sup();
    if smax * smax * dt > 0.4 * dx * dx {
        return Err(Error::Config(format!(
            "step {dt} violates σ_max²Δt ≤ 0.4Δx² (σ_max = {smax}, Δx = {dx}); use Δt ≤ {:e}",
            0.4 * dx * dx / (smax * smax)
        )));
    }
    let m = f0.cells();
    let mut masses = f0.masses().to_vec();
    let mut vel = vec![0.0; m];
    let mut diff = vec![0.0; m];
    let mut flux = vec![0.0; m + 1];
    let inv_dx = 1.0 / dx;
    for step in 1..=steps {
        coefficients(f0, &masses, drift, diffusion, &mut vel, &mut diff);
        for face in 1..m {
            let (l, r) = (face - 1, face);
            let v = 0.5 * (vel[l] + vel[r]);
            let upwind = if v > 0.0 { masses[l] } else { masses[r] } * inv_dx;
            let dflux = 0.5 * (diff[r] * masses[r] - diff[l] * masses[l]) * inv_dx * inv_dx;
            flux[face] = v * upwind - dflux;
        }
        for i in 0..m {
            masses[i] -= dt * (flux[i + 1] - flux[i]);
        }
        if let Some(i) = masses.iter().position(|x| !x.is_finite()) {
            return Err(Error::NumericBlowup { step, detail: format!("cell {i} is not finite") });
        }
        if let Some(i) = masses.iter().position(|&x| x < 0.0) {
            return Err(Error::StepSize {
                step,
                detail: format!("cell {i} mass {:e} went negative; reduce the step", masses[i]),
            });
        }
    }
    GridLaw1D::new(f0.half_width(), masses)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou_stationary(half_width: f64, cells: usize) -> GridLaw1D {
        GridLaw1D::from_density(half_width, cells, |x| (-0.5 * x * x).exp()).unwrap()
    }

    #[test]
    fn nothing_moves_without_coefficients() {
        let f0 = GridLaw1D::gaussian(0.3, 0.5, 50).unwrap();
        let f = solve_mckean_vlasov_fp1d(&f0, 1.0, Drift::Zero, Diffusion::Zero, 0.1).unwrap();
        assert_eq!(f, f0);
    }

    #[test]
    fn cfl_violation_rejected() {
        let f0 = GridLaw1D::gaussian(0.0, 1.0, 400).unwrap();
        let r = solve_mckean_vlasov_fp1d(&f0, 1.0, Drift::Zero, Diffusion::Constant(1.0), 0.1);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn mass_conserved_every_step() {
        let mut f = GridLaw1D::from_density(6.0, 120, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        for _ in 0..50 {
            f = solve_mckean_vlasov_fp1d(&f, 0.01, Drift::TanhAttraction(1.0), Diffusion::Soft(1.0), 0.001).unwrap();
            assert!((f.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ou_relaxes_to_gaussian() {
        let f0 = GridLaw1D::from_density(6.0, 400, |x| (-2.0 * (x - 1.5).powi(2)).exp()).unwrap();
        let dx = f0.dx();
        let dt = 10.0 / (10.0 / (0.2 * dx * dx)).ceil();
        let f = solve_mckean_vlasov_fp1d(&f0, 10.0, Drift::Ou(1.0), Diffusion::Constant(2f64.sqrt()), dt).unwrap();
        let gap = f.l1_distance(&ou_stationary(6.0, 400)).unwrap();
        assert!(gap <= 2e-2, "L1 gap {gap}");
    }

    /// Refining Δx by 2 (and Δt by 4, keeping the diffusive ratio) changes
    /// the t = 1 solution less each time.
    #[test]
    fn refinement_changes_shrink() {
        let init = |x: f64| (-2.0 * (x - 1.0).powi(2)).exp();
        let solve = |cells: usize, dt: f64| {
            let f0 = GridLaw1D::from_density(6.0, cells, init).unwrap();
            solve_mckean_vlasov_fp1d(&f0, 1.0, Drift::Ou(1.0), Diffusion::Constant(2f64.sqrt()), dt).unwrap()
        };
        let a = solve(50, 0.01);
        let b = solve(100, 0.0025);
        let c = solve(200, 0.000625);
        let d1 = b.coarsen().unwrap().l1_distance(&a).unwrap();
        let d2 = c.coarsen().unwrap().l1_distance(&b).unwrap();
        assert!(d2 <= d1, "{d2} > {d1}");
    }
}
