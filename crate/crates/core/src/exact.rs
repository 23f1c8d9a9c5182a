//! Closed-form Taylor-Couette flows: the canonical azimuthal profile
//! A r + B/r, its generalization with an annular-Poiseuille axial profile
//! driven by a constant axial pressure gradient, and the matching pressure.
//!
//! Both published algebraic forms of (A, B) and of the axial profile are
//! implemented and cross-checked in tests; the (R, omega) forms are the
//! ones used at runtime.

use crate::annulus::{Annulus, FlowConfig, NonDimensional};
use crate::error::{Error, Result};
use crate::field::{Field, PressureField};
use crate::grid::Grid;
use serde::{Deserialize, Serialize};

/// Coefficients of the azimuthal profile v_theta(r) = A r + B / r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TCCoefficients {
    pub a_coef: f64,
    pub b_coef: f64,
}

impl TCCoefficients {
    /// Profile value without a range check; callers sampling grids stay
    /// inside the annulus by construction.
    pub fn profile(&self, r: f64) -> f64 {
        self.a_coef * r + self.b_coef / r
    }
}

/// A = (R2^2 w2 - R1^2 w1) / (R2^2 - R1^2), B = R1^2 R2^2 (w1 - w2) / (R2^2 - R1^2):
/// the unique coefficients matching v_theta(R_j) = R_j w_j.
pub fn tc_coefficients(annulus: &Annulus, config: &FlowConfig) -> TCCoefficients {
    let r1sq = annulus.r_inner * annulus.r_inner;
    let r2sq = annulus.r_outer * annulus.r_outer;
    let denom = r2sq - r1sq;
    TCCoefficients {
        a_coef: (r2sq * config.omega_outer - r1sq * config.omega_inner) / denom,
        b_coef: r1sq * r2sq * (config.omega_inner - config.omega_outer) / denom,
    }
}

/// Same coefficients via the non-dimensional ratios eta = R1/R2 and
/// mu = w2/w1, with the structural branch at w1 = 0.
pub fn tc_coefficients_ratio_form(
    nd: &NonDimensional,
    config: &FlowConfig,
    annulus: &Annulus,
) -> TCCoefficients {
    let eta2 = nd.eta * nd.eta;
    let r1sq = annulus.r_inner * annulus.r_inner;
    match nd.mu {
        Some(mu) => TCCoefficients {
            a_coef: (mu - eta2) / (1.0 - eta2) * config.omega_inner,
            b_coef: (1.0 - mu) / (1.0 - eta2) * config.omega_inner * r1sq,
        },
        None => TCCoefficients {
            a_coef: config.omega_outer / (1.0 - eta2),
            b_coef: -config.omega_outer * r1sq / (1.0 - eta2),
        },
    }
}

/// Exact steady flow: canonical Taylor-Couette azimuthal profile plus an
/// annular Poiseuille axial profile driven by the constant axial pressure
/// gradient `axial_gradient`; `pressure_offset` is the free additive constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedTC {
    pub coeffs: TCCoefficients,
    pub axial_gradient: f64,
    pub pressure_offset: f64,
    pub annulus: Annulus,
    pub viscosity: f64,
}

impl GeneralizedTC {
    pub fn new(
        coeffs: TCCoefficients,
        axial_gradient: f64,
        pressure_offset: f64,
        annulus: Annulus,
        viscosity: f64,
    ) -> Result<Self> {
        if !viscosity.is_finite() || viscosity <= 0.0 {
            return Err(Error::NonPositiveViscosity(viscosity));
        }
        Ok(Self {
            coeffs,
            axial_gradient,
            pressure_offset,
            annulus,
            viscosity,
        })
    }

    pub fn from_boundary(
        annulus: Annulus,
        config: &FlowConfig,
        axial_gradient: f64,
    ) -> Result<Self> {
        Self::new(
            tc_coefficients(&annulus, config),
            axial_gradient,
            0.0,
            annulus,
            config.viscosity,
        )
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if self.annulus.contains(r) {
            Ok(())
        } else {
            Err(Error::RadiusOutsideAnnulus {
                r,
                inner: self.annulus.r_inner,
                outer: self.annulus.r_outer,
            })
        }
    }

    /// Axial profile without range check (proof form):
    /// (a/4 nu) [ (r^2 - R1^2) - (R2^2 - R1^2)/log(R2/R1) * log(r/R1) ].
    pub fn vz_profile(&self, r: f64) -> f64 {
        let r1 = self.annulus.r_inner;
        let r2 = self.annulus.r_outer;
        let r1sq = r1 * r1;
        let coeff = -(r2 * r2 - r1sq) / (r2 / r1).ln();
        self.axial_gradient / (4.0 * self.viscosity) * ((r * r - r1sq) + coeff * (r / r1).ln())
    }

    /// Same profile written with the radius ratio eta = R1/R2:
    /// (a/4 nu) R1^2 [ (r/R1)^2 - 1 + (1 - eta^2)/(eta^2 log eta) * log(r/R1) ].
    pub fn vz_profile_ratio_form(&self, r: f64) -> f64 {
        let r1 = self.annulus.r_inner;
        let eta = r1 / self.annulus.r_outer;
        let eta2 = eta * eta;
        let coeff = (1.0 - eta2) / (eta2 * eta.ln());
        self.axial_gradient / (4.0 * self.viscosity)
            * (r1 * r1)
            * ((r / r1) * (r / r1) - 1.0 + coeff * (r / r1).ln())
    }

    /// Pressure a z + b + (A^2/2) r^2 + 2AB log r - (B^2/2)/r^2, whose
    /// radial derivative balances centrifugal acceleration: dp/dr = v_theta^2/r.
    pub fn pressure_radial_part(&self, r: f64) -> f64 {
        let a = self.coeffs.a_coef;
        let b = self.coeffs.b_coef;
        0.5 * a * a * r * r + 2.0 * a * b * r.ln() - 0.5 * b * b / (r * r)
    }
}

pub fn eval_vtheta(gtc: &GeneralizedTC, r: f64) -> Result<f64> {
    gtc.check_radius(r)?;
    Ok(gtc.coeffs.profile(r))
}

pub fn eval_vz(gtc: &GeneralizedTC, r: f64) -> Result<f64> {
    gtc.check_radius(r)?;
    Ok(gtc.vz_profile(r))
}

pub fn eval_pressure(gtc: &GeneralizedTC, r: f64, z: f64) -> Result<f64> {
    gtc.check_radius(r)?;
    Ok(gtc.axial_gradient * z + gtc.pressure_offset + gtc.pressure_radial_part(r))
}

/// Sample the closed form at the grid's staggered locations. The result has
/// v_r identically zero, is z-independent, and its pressure carries the
/// axial gradient separately with the periodic part gauged to r-weighted
/// mean zero.
pub fn sample_on_grid(gtc: &GeneralizedTC, grid: &Grid) -> Result<(Field, PressureField)> {
    if grid.annulus != gtc.annulus {
        return Err(Error::GridMismatch);
    }
    let mut field = Field::zeros(*grid);
    field.wall_inner = gtc.coeffs.profile(gtc.annulus.r_inner);
    field.wall_outer = gtc.coeffs.profile(gtc.annulus.r_outer);
    for i in 0..grid.n_r {
        let vt = gtc.coeffs.profile(grid.r_center(i));
        let vz = gtc.vz_profile(grid.r_center(i));
        for k in 0..grid.k_dim() {
            for j in 0..grid.n_z {
                field.v_theta[(k, i, j)] = vt;
                field.v_z[(k, i, j)] = vz;
            }
        }
    }
    let mut pressure = PressureField::zeros(*grid, gtc.axial_gradient);
    for i in 0..grid.n_r {
        let h = gtc.pressure_radial_part(grid.r_center(i)) + gtc.pressure_offset;
        for k in 0..grid.k_dim() {
            for j in 0..grid.n_z {
                pressure.p[(k, i, j)] = h;
            }
        }
    }
    pressure.apply_mean_zero_gauge();
    Ok((field, pressure))
}
