//! Staggered (MAC) grid on the z-periodic annulus.
//!
//! Layout: v_r at radial faces (n_r+1 of them, the first and last on the
//! walls), v_theta and p at cell centers, v_z at axial faces (z-periodic, so
//! face j=0 is shared). The optional theta direction is collocated: all
//! quantities share the same theta nodes, wrap-indexed.

use crate::annulus::Annulus;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub annulus: Annulus,
    pub n_r: usize,
    pub n_z: usize,
    pub n_theta: Option<usize>,
    pub z_period: f64,
    pub h_r: f64,
    pub h_z: f64,
}

impl Grid {
    pub fn build(
        annulus: Annulus,
        n_r: usize,
        n_z: usize,
        z_period: f64,
        n_theta: Option<usize>,
    ) -> Result<Self> {
        if n_r < 4 || n_z < 4 {
            return Err(Error::GridTooCoarse { n_r, n_z });
        }
        if !z_period.is_finite() || z_period <= 0.0 {
            return Err(Error::NonPositivePeriod(z_period));
        }
        if let Some(nt) = n_theta {
            if nt < 4 {
                return Err(Error::ThetaTooCoarse(nt));
            }
        }
        Ok(Grid {
            annulus,
            n_r,
            n_z,
            n_theta,
            z_period,
            h_r: annulus.gap() / n_r as f64,
            h_z: z_period / n_z as f64,
        })
    }

    /// Default axial period used when a config does not set one.
    pub fn default_z_period(annulus: &Annulus) -> f64 {
        2.0 * annulus.gap()
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.n_theta.is_none()
    }

    /// Extent of the theta array axis: 1 when axisymmetric.
    pub fn k_dim(&self) -> usize {
        self.n_theta.unwrap_or(1)
    }

    pub fn h_theta(&self) -> f64 {
        2.0 * PI / self.n_theta.unwrap_or(1) as f64
    }

    pub fn r_face(&self, i: usize) -> f64 {
        self.annulus.r_inner + i as f64 * self.h_r
    }

    pub fn r_center(&self, i: usize) -> f64 {
        self.annulus.r_inner + (i as f64 + 0.5) * self.h_r
    }

    pub fn z_face(&self, j: usize) -> f64 {
        j as f64 * self.h_z
    }

    pub fn z_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h_z
    }

    /// Axial coordinate re-centred so the periodic cell is symmetric about 0;
    /// cutoff functions are evaluated in this coordinate.
    pub fn z_center_symmetric(&self, j: usize) -> f64 {
        self.z_center(j) - 0.5 * self.z_period
    }

    pub fn z_face_symmetric(&self, j: usize) -> f64 {
        self.z_face(j) - 0.5 * self.z_period
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.h_theta()
    }

    pub fn r_faces(&self) -> Vec<f64> {
        (0..=self.n_r).map(|i| self.r_face(i)).collect()
    }

    pub fn r_centers(&self) -> Vec<f64> {
        (0..self.n_r).map(|i| self.r_center(i)).collect()
    }

    pub fn z_faces(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| self.z_face(j)).collect()
    }

    pub fn z_centers(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| self.z_center(j)).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.k_dim()).map(|k| self.theta(k)).collect()
    }

    /// j+1 with periodic wrap.
    pub fn jp(&self, j: usize) -> usize {
        if j + 1 == self.n_z {
            0
        } else {
            j + 1
        }
    }

    /// j-1 with periodic wrap.
    pub fn jm(&self, j: usize) -> usize {
        if j == 0 {
            self.n_z - 1
        } else {
            j - 1
        }
    }

    /// k+1 with periodic wrap over theta.
    pub fn kp(&self, k: usize) -> usize {
        if k + 1 == self.k_dim() {
            0
        } else {
            k + 1
        }
    }

    pub fn km(&self, k: usize) -> usize {
        if k == 0 {
            self.k_dim() - 1
        } else {
            k - 1
        }
    }
}
