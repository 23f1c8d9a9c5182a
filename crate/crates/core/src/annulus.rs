//! Annulus geometry, wall rotation parameters, and the explicit constants
//! (Poincaré constant, smallness thresholds, Reynolds bound) attached to them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Region between two concentric cylinders, 0 < r_inner < r_outer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Annulus {
    pub fn new(r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(r_inner.is_finite() && r_outer.is_finite()) || r_inner <= 0.0 || r_inner >= r_outer {
            return Err(Error::InvalidAnnulus {
                inner: r_inner,
                outer: r_outer,
            });
        }
        Ok(Self { r_inner, r_outer })
    }

    pub fn gap(&self) -> f64 {
        self.r_outer - self.r_inner
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_inner && r <= self.r_outer
    }
}

/// Kinematic viscosity and the angular velocities of the two walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub viscosity: f64,
    pub omega_inner: f64,
    pub omega_outer: f64,
}

impl FlowConfig {
    pub fn new(viscosity: f64, omega_inner: f64, omega_outer: f64) -> Result<Self> {
        if !viscosity.is_finite() || viscosity <= 0.0 {
            return Err(Error::NonPositiveViscosity(viscosity));
        }
        if !omega_inner.is_finite() || !omega_outer.is_finite() {
            return Err(Error::InvalidAnnulus {
                inner: omega_inner,
                outer: omega_outer,
            });
        }
        Ok(Self {
            viscosity,
            omega_inner,
            omega_outer,
        })
    }
}

/// Radius ratio η = R₁/R₂ and rotation ratio μ = ω₂/ω₁.
/// μ is structurally absent when the inner wall does not rotate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonDimensional {
    pub eta: f64,
    pub mu: Option<f64>,
}

pub fn non_dimensional(annulus: &Annulus, config: &FlowConfig) -> NonDimensional {
    let eta = annulus.r_inner / annulus.r_outer;
    let mu = if config.omega_inner != 0.0 {
        Some(config.omega_outer / config.omega_inner)
    } else {
        None
    };
    NonDimensional { eta, mu }
}

/// C_P = R₂(R₂−R₁)²/(R₁π²), the constant in the weighted Poincaré inequality
/// for wall-vanishing profiles on the annulus.
pub fn poincare_constant(annulus: &Annulus) -> f64 {
    let gap = annulus.gap();
    annulus.r_outer * gap * gap / (annulus.r_inner * PI * PI)
}

/// Smallness threshold ν/(2√C_P) for uniqueness of axisymmetric steady flows.
pub fn threshold_c1(nu: f64, annulus: &Annulus) -> f64 {
    nu / (2.0 * poincare_constant(annulus).sqrt())
}

/// Smallness threshold ν·[√C_P(2 + C_P/R₁²) + 3C_P/(2R₁)]⁻¹ for uniqueness
/// without the axisymmetry assumption.
pub fn threshold_c2(nu: f64, annulus: &Annulus) -> f64 {
    let cp = poincare_constant(annulus);
    let r1 = annulus.r_inner;
    nu / (cp.sqrt() * (2.0 + cp / (r1 * r1)) + 1.5 * cp / r1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Inner,
    Outer,
}

/// Re_j = R_j ω_j (R₂−R₁)/ν for the selected wall.
pub fn reynolds(nu: f64, annulus: &Annulus, omega: f64, which: Wall) -> f64 {
    let r = match which {
        Wall::Inner => annulus.r_inner,
        Wall::Outer => annulus.r_outer,
    };
    r * omega * annulus.gap() / nu
}

/// Dimensionless bound π√R₁/(2√R₂): both wall Reynolds numbers below this
/// value puts the boundary data inside the axisymmetric uniqueness regime.
/// Equals (R₂−R₁)·threshold_c1(ν)/ν for every ν.
pub fn reynolds_bound(annulus: &Annulus) -> f64 {
    PI * annulus.r_inner.sqrt() / (2.0 * annulus.r_outer.sqrt())
}

/// All explicit constants for one (ν, annulus) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub c_p: f64,
    pub c1: f64,
    pub c2: f64,
    pub c_star: f64,
    pub re_bound: f64,
}

impl Thresholds {
    pub fn compute(nu: f64, annulus: &Annulus) -> Self {
        let c1 = threshold_c1(nu, annulus);
        let c2 = threshold_c2(nu, annulus);
        Thresholds {
            c_p: poincare_constant(annulus),
            c1,
            c2,
            c_star: c1.min(c2),
            re_bound: reynolds_bound(annulus),
        }
    }
}
