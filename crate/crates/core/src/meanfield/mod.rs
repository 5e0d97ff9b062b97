//! Solvers for the limiting one-particle equations and large-n reference
//! laws.

mod fokker_planck;
mod kac_pde;
mod quantize;
mod reference;

pub use fokker_planck::solve_mckean_vlasov_fp1d;
pub use kac_pde::{solve_kac_caricature, KacPdeOptions};
pub use quantize::quantize;
pub use reference::reference_limit_by_large_n;

use std::fmt::Write as _;

use crate::empirical::AtomicMeasure;
use crate::error::{invalid, Error, Result};
use crate::point::Point;

/// Tolerance on the total mass of a grid law.
pub const GRID_MASS_TOL: f64 = 1e-10;

/// Cell masses on a uniform grid of `[−V, V]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLaw1D {
    half_width: f64,
    masses: Vec<f64>,
}

impl GridLaw1D {
    pub fn new(half_width: f64, masses: Vec<f64>) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return invalid(format!("grid half-width must be positive, got {half_width}"));
        }
        if masses.is_empty() {
            return invalid("grid needs at least one cell");
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return invalid(format!("cell mass {m} is negative or not finite"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > GRID_MASS_TOL {
            return invalid(format!("cell masses sum to {total}, not 1"));
        }
        Ok(Self { half_width, masses })
    }

    /// Discretizes a density (up to normalization) by its values at cell
    /// centers.
    pub fn from_density(half_width: f64, cells: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        if cells == 0 {
            return invalid("grid needs at least one cell");
        }
        let dx = 2.0 * half_width / cells as f64;
        let raw: Vec<f64> = (0..cells).map(|i| density(-half_width + (i as f64 + 0.5) * dx)).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return invalid("density has no positive mass on the grid");
        }
        Self::new(half_width, raw.into_iter().map(|r| r / total).collect())
    }

    /// Normal law with the domain set to six standard deviations.
    pub fn gaussian(mean: f64, std: f64, cells: usize) -> Result<Self> {
        if !(std > 0.0) {
            return invalid("standard deviation must be positive");
        }
        let half_width = mean.abs() + 6.0 * std;
        Self::from_density(half_width, cells, |x| (-0.5 * ((x - mean) / std).powi(2)).exp())
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells(&self) -> usize {
        self.masses.len()
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.masses.len() as f64
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.center(i)).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(i, m)| m * self.center(i)).sum()
    }

    /// `Σ v_i² m_i`.
    pub fn energy(&self) -> f64 {
        self.masses.iter().enumerate().map(|(i, m)| m * self.center(i).powi(2)).sum()
    }

    /// `Σ |m_i − m'_i|` between laws on the same grid.
    pub fn l1_distance(&self, other: &GridLaw1D) -> Result<f64> {
        if self.cells() != other.cells() || self.half_width != other.half_width {
            return invalid("grid laws live on different grids");
        }
        Ok(self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs()).sum())
    }

    /// Sums pairs of neighbouring cells (the grid with half as many cells).
    pub fn coarsen(&self) -> Result<GridLaw1D> {
        if !self.cells().is_multiple_of(2) {
            return invalid("coarsening needs an even cell count");
        }
        GridLaw1D::new(self.half_width, self.masses.chunks_exact(2).map(|c| c[0] + c[1]).collect())
    }

    /// Atoms at cell centers with the cell masses (empty cells dropped).
    pub fn to_atomic(&self) -> Result<AtomicMeasure> {
        let (atoms, masses): (Vec<Point>, Vec<f64>) = self
            .masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(i, m)| (Point::Scalar(self.center(i)), *m))
            .unzip();
        AtomicMeasure::from_masses(atoms, masses)
    }

    /// CSV with header `center,mass`, values printed round-trip exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("center,mass\n");
        for (i, m) in self.masses.iter().enumerate() {
            let _ = writeln!(out, "{:?},{:?}", self.center(i), m);
        }
        out
    }

    /// Reads the format of [`GridLaw1D::to_csv`]; centers must be uniform.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "center,mass" => {}
            _ => return Err(Error::Config("grid CSV must start with the header center,mass".into())),
        }
        let mut centers = Vec::new();
        let mut masses = Vec::new();
        for (k, line) in lines.enumerate() {
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad grid CSV row {}: {line:?}", k + 2)))
            };
            centers.push(parse(parts.next())?);
            masses.push(parse(parts.next())?);
        }
        if centers.len() < 2 {
            return Err(Error::Config("grid CSV needs at least two rows".into()));
        }
        let dx = centers[1] - centers[0];
        let half_width = -(centers[0] - 0.5 * dx);
        let grid = Self::new(half_width, masses)?;
        for (i, c) in centers.iter().enumerate() {
            if (grid.center(i) - c).abs() > 1e-9 * half_width.max(1.0) {
                return Err(Error::Config(format!("grid CSV centers are not uniform on a symmetric domain at row {}", i + 2)));
            }
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_grid_basics() {
        let g = GridLaw1D::gaussian(0.0, 1.0, 256).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        assert!(g.mean().abs() < 1e-12);
        assert!((g.energy() - 1.0).abs() < 1e-3);
        assert_eq!(g.half_width(), 6.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = GridLaw1D::gaussian(0.5, 0.7, 40).unwrap();
        let back = GridLaw1D::from_csv(&g.to_csv()).unwrap();
        assert_eq!(back.masses(), g.masses());
        assert!((back.half_width() - g.half_width()).abs() < 1e-12);
        assert!(GridLaw1D::from_csv("x,y\n1,2\n").is_err());
        assert!(GridLaw1D::from_csv("center,mass\n-0.5,0.5\n0.5,oops\n").is_err());
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(GridLaw1D::new(1.0, vec![0.5, 0.6]).is_err());
        assert!(GridLaw1D::new(1.0, vec![-0.5, 1.5]).is_err());
        assert!(GridLaw1D::new(0.0, vec![1.0]).is_err());
    }

    #[test]
    fn to_atomic_keeps_mass() {
        let g = GridLaw1D::new(1.0, vec![0.25, 0.0, 0.75, 0.0]).unwrap();
        let a = g.to_atomic().unwrap();
        assert_eq!(a.atoms(), &[Point::Scalar(-0.75), Point::Scalar(0.25)]);
        assert_eq!(a.weights(), &[0.25, 0.75]);
    }
}
