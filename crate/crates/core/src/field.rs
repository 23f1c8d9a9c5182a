//! Discrete velocity and pressure storage on the staggered grid.
//!
//! Arrays are indexed (k, i, j) = (theta node, radial index, axial index);
//! axisymmetric grids use k_dim = 1. Radial extents differ per component:
//! v_r lives on the n_r+1 radial faces (entries 0 and n_r sit on the walls
//! and stay zero), v_theta / v_z / p use the n_r cell-centered radii.

use crate::error::{Error, Result};
use crate::grid::Grid;
use ndarray::Array3;

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    /// Radial velocity at (r_face(i), z_center(j)).
    pub v_r: Array3<f64>,
    /// Azimuthal velocity at cell centers.
    pub v_theta: Array3<f64>,
    /// Axial velocity at (r_center(i), z_face(j)).
    pub v_z: Array3<f64>,
    /// Azimuthal wall speeds R_j w_j carried as boundary data.
    pub wall_inner: f64,
    pub wall_outer: f64,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        let k = grid.k_dim();
        Field {
            grid,
            v_r: Array3::zeros((k, grid.n_r + 1, grid.n_z)),
            v_theta: Array3::zeros((k, grid.n_r, grid.n_z)),
            v_z: Array3::zeros((k, grid.n_r, grid.n_z)),
            wall_inner: 0.0,
            wall_outer: 0.0,
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        let k = self.grid.k_dim();
        let (n_r, n_z) = (self.grid.n_r, self.grid.n_z);
        if self.v_r.dim() != (k, n_r + 1, n_z)
            || self.v_theta.dim() != (k, n_r, n_z)
            || self.v_z.dim() != (k, n_r, n_z)
        {
            return Err(Error::ShapeMismatch);
        }
        Ok(())
    }

    /// Largest magnitude over all velocity components.
    pub fn max_abs(&self) -> f64 {
        let m = |a: &Array3<f64>| a.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        m(&self.v_r).max(m(&self.v_theta)).max(m(&self.v_z))
    }

    /// Largest wall-face radial velocity; zero for any admissible field.
    pub fn wall_face_leak(&self) -> f64 {
        let n_r = self.grid.n_r;
        let mut worst = 0.0f64;
        for k in 0..self.grid.k_dim() {
            for j in 0..self.grid.n_z {
                worst = worst.max(self.v_r[(k, 0, j)].abs());
                worst = worst.max(self.v_r[(k, n_r, j)].abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub grid: Grid,
    /// Periodic pressure part at cell centers; the linear-in-z part is
    /// carried separately by `axial_gradient`.
    pub p: Array3<f64>,
    pub axial_gradient: f64,
}

impl PressureField {
    pub fn zeros(grid: Grid, axial_gradient: f64) -> Self {
        PressureField {
            grid,
            p: Array3::zeros((grid.k_dim(), grid.n_r, grid.n_z)),
            axial_gradient,
        }
    }

    /// Mean of p against the cylindrical measure r dr dtheta dz.
    pub fn r_weighted_mean(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.grid.n_r {
            let r = self.grid.r_center(i);
            for k in 0..self.grid.k_dim() {
                for j in 0..self.grid.n_z {
                    num += self.p[(k, i, j)] * r;
                    den += r;
                }
            }
        }
        num / den
    }

    pub fn apply_mean_zero_gauge(&mut self) {
        let mean = self.r_weighted_mean();
        self.p.mapv_inplace(|v| v - mean);
    }
}
