//! Discrete cylindrical operators on the staggered grid: divergence,
//! momentum residuals for the axisymmetric system and the general
//! (theta-resolved) system, a quadrature check of the weighted Poincare
//! inequality, and an axisymmetry diagnostic.
//!
//! All stencils are second-order centered. Radial second derivatives use the
//! conservative form d_r(r d_r .)/r, which preserves summation-by-parts in
//! the r-weighted inner product. Wall closures for cell-centered components
//! use cubic ghost extrapolation through the wall value, keeping the
//! boundary-cell truncation error at O(h^2):
//!   ghost = (16/5) wall - 3 u0 + u1 - (1/5) u2.

use crate::error::{Error, Result};
use crate::exec;
use crate::field::{Field, PressureField};
use crate::grid::Grid;
use crate::lab::{phi_l, CutoffSpec};
use ndarray::Array3;

#[inline]
fn ghost(wall: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    (16.0 / 5.0) * wall - 3.0 * u0 + u1 - (1.0 / 5.0) * u2
}

/// Cell-centered component value at radial index `i`, which may be -1 or
/// n_r (ghost cells past the walls).
#[inline]
fn center_at(
    u: &Array3<f64>,
    k: usize,
    i: isize,
    j: usize,
    n_r: usize,
    wall_in: f64,
    wall_out: f64,
) -> f64 {
    if i < 0 {
        ghost(wall_in, u[(k, 0, j)], u[(k, 1, j)], u[(k, 2, j)])
    } else if i as usize >= n_r {
        ghost(wall_out, u[(k, n_r - 1, j)], u[(k, n_r - 2, j)], u[(k, n_r - 3, j)])
    } else {
        u[(k, i as usize, j)]
    }
}

fn fill3<F>(arr: &mut Array3<f64>, f: F)
where
    F: Fn(usize, usize, &mut [f64]) + Sync,
{
    let (_, ni, nj) = arr.dim();
    let buf = arr.as_slice_mut().expect("standard layout");
    exec::fill_rows(buf, nj, |row, chunk| f(row / ni, row % ni, chunk));
}

/// Conservative discrete divergence (1/r) d_r(r v^r) + (1/r) d_theta v^theta
/// + d_z v^z at cell centers.
pub fn divergence(field: &Field) -> Array3<f64> {
    let g = field.grid;
    let theta_resolved = !g.is_axisymmetric();
    let mut out = Array3::zeros((g.k_dim(), g.n_r, g.n_z));
    let (vr, vt, vz) = (&field.v_r, &field.v_theta, &field.v_z);
    fill3(&mut out, |k, i, row| {
        let rc = g.r_center(i);
        let rf0 = g.r_face(i);
        let rf1 = g.r_face(i + 1);
        for (j, out_v) in row.iter_mut().enumerate() {
            let jp = g.jp(j);
            let mut d = (rf1 * vr[(k, i + 1, j)] - rf0 * vr[(k, i, j)]) / (rc * g.h_r)
                + (vz[(k, i, jp)] - vz[(k, i, j)]) / g.h_z;
            if theta_resolved {
                d += (vt[(g.kp(k), i, j)] - vt[(g.km(k), i, j)]) / (2.0 * g.h_theta() * rc);
            }
            *out_v = d;
        }
    });
    out
}

/// Residual arrays of the stationary system, one per equation, at the
/// staggered locations of the corresponding unknowns. Wall rows of the
/// radial-momentum array are left zero (walls are data, not equations).
#[derive(Debug, Clone)]
pub struct ResidualFields {
    pub r_mom: Array3<f64>,
    pub theta_mom: Array3<f64>,
    pub z_mom: Array3<f64>,
    pub div: Array3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EquationNorms {
    pub linf: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    pub radial: EquationNorms,
    pub azimuthal: EquationNorms,
    pub axial: EquationNorms,
    pub continuity: EquationNorms,
    pub h_r: f64,
    pub h_z: f64,
}

impl ResidualReport {
    pub fn max_linf(&self) -> f64 {
        self.radial
            .linf
            .max(self.azimuthal.linf)
            .max(self.axial.linf)
            .max(self.continuity.linf)
    }
}

impl ResidualFields {
    /// Norms against the cylindrical measure r dr dtheta dz; the azimuthal
    /// weight is 2*pi on axisymmetric grids and h_theta otherwise.
    pub fn report(&self, grid: &Grid) -> ResidualReport {
        let w_theta = if grid.is_axisymmetric() {
            2.0 * std::f64::consts::PI
        } else {
            grid.h_theta()
        };
        let cell = grid.h_r * grid.h_z * w_theta;
        let norms_center = |arr: &Array3<f64>| {
            let (nk, ni, _) = arr.dim();
            let linf = exec::max_rows(nk * ni, |row| {
                let (k, i) = (row / ni, row % ni);
                (0..grid.n_z).fold(0.0f64, |m, j| m.max(arr[(k, i, j)].abs()))
            });
            let sq = exec::sum_rows(nk * ni, |row| {
                let (k, i) = (row / ni, row % ni);
                let r = grid.r_center(i);
                (0..grid.n_z).map(|j| arr[(k, i, j)] * arr[(k, i, j)] * r).sum::<f64>()
            });
            EquationNorms {
                linf,
                l2: (sq * cell).sqrt(),
            }
        };
        // radial momentum lives on interior faces
        let (nk, _, _) = self.r_mom.dim();
        let linf_r = exec::max_rows(nk * (grid.n_r + 1), |row| {
            let (k, i) = (row / (grid.n_r + 1), row % (grid.n_r + 1));
            if i == 0 || i == grid.n_r {
                return 0.0;
            }
            (0..grid.n_z).fold(0.0f64, |m, j| m.max(self.r_mom[(k, i, j)].abs()))
        });
        let sq_r = exec::sum_rows(nk * (grid.n_r + 1), |row| {
            let (k, i) = (row / (grid.n_r + 1), row % (grid.n_r + 1));
            if i == 0 || i == grid.n_r {
                return 0.0;
            }
            let r = grid.r_face(i);
            (0..grid.n_z)
                .map(|j| self.r_mom[(k, i, j)] * self.r_mom[(k, i, j)] * r)
                .sum::<f64>()
        });
        ResidualReport {
            radial: EquationNorms {
                linf: linf_r,
                l2: (sq_r * cell).sqrt(),
            },
            azimuthal: norms_center(&self.theta_mom),
            axial: norms_center(&self.z_mom),
            continuity: norms_center(&self.div),
            h_r: grid.h_r,
            h_z: grid.h_z,
        }
    }
}

/// Evaluate all residual arrays. `advection` off gives the Stokes system
/// (no (v.grad)v, no centrifugal/Coriolis-type geometric terms). Theta
/// derivative terms are included exactly when the grid is theta-resolved.
pub(crate) fn residual_fields_impl(
    field: &Field,
    pressure: &PressureField,
    axial_gradient: f64,
    nu: f64,
    advection: bool,
) -> ResidualFields {
    let g = field.grid;
    let n_r = g.n_r;
    let theta = !g.is_axisymmetric();
    let h_t = g.h_theta();
    let (vr, vt, vz, p) = (&field.v_r, &field.v_theta, &field.v_z, &pressure.p);
    let (w_in, w_out) = (field.wall_inner, field.wall_outer);

    let mut r_mom = Array3::zeros((g.k_dim(), n_r + 1, g.n_z));
    let mut theta_mom = Array3::zeros((g.k_dim(), n_r, g.n_z));
    let mut z_mom = Array3::zeros((g.k_dim(), n_r, g.n_z));

    // radial momentum at interior faces
    fill3(&mut r_mom, |k, i, row| {
        if i == 0 || i == n_r {
            return;
        }
        let rf = g.r_face(i);
        let (rc_m, rc) = (g.r_center(i - 1), g.r_center(i));
        let (kp, km) = (g.kp(k), g.km(k));
        for (j, out_v) in row.iter_mut().enumerate() {
            let (jp, jm) = (g.jp(j), g.jm(j));
            let u = vr[(k, i, j)];
            // average of the four surrounding azimuthal / axial values
            let vt_avg = 0.5 * (vt[(k, i - 1, j)] + vt[(k, i, j)]);
            let vz_avg = 0.25
                * (vz[(k, i - 1, j)] + vz[(k, i, j)] + vz[(k, i - 1, jp)] + vz[(k, i, jp)]);
            let dp = (p[(k, i, j)] - p[(k, i - 1, j)]) / g.h_r;
            let visc_r = (rc * (vr[(k, i + 1, j)] - u) - rc_m * (u - vr[(k, i - 1, j)]))
                / (rf * g.h_r * g.h_r);
            let visc_z = (vr[(k, i, jp)] - 2.0 * u + vr[(k, i, jm)]) / (g.h_z * g.h_z);
            let mut res = dp - nu * (visc_r + visc_z - u / (rf * rf));
            if advection {
                let dr = (vr[(k, i + 1, j)] - vr[(k, i - 1, j)]) / (2.0 * g.h_r);
                let dz = (vr[(k, i, jp)] - vr[(k, i, jm)]) / (2.0 * g.h_z);
                res += u * dr + vz_avg * dz - vt_avg * vt_avg / rf;
            }
            if theta {
                let dtt = (vr[(kp, i, j)] - 2.0 * u + vr[(km, i, j)]) / (h_t * h_t);
                res -= nu * dtt / (rf * rf);
                let vt_avg_p = 0.5 * (vt[(kp, i - 1, j)] + vt[(kp, i, j)]);
                let vt_avg_m = 0.5 * (vt[(km, i - 1, j)] + vt[(km, i, j)]);
                // coupling +nu (2/r^2) d_theta v_theta moved to the left side
                res += nu * (vt_avg_p - vt_avg_m) / (h_t * rf * rf);
                if advection {
                    let dt = (vr[(kp, i, j)] - vr[(km, i, j)]) / (2.0 * h_t);
                    res += vt_avg / rf * dt;
                }
            }
            *out_v = res;
        }
    });

    // azimuthal momentum at cell centers
    fill3(&mut theta_mom, |k, i, row| {
        let rc = g.r_center(i);
        let (rf0, rf1) = (g.r_face(i), g.r_face(i + 1));
        let (kp, km) = (g.kp(k), g.km(k));
        let ii = i as isize;
        for (j, out_v) in row.iter_mut().enumerate() {
            let (jp, jm) = (g.jp(j), g.jm(j));
            let u = vt[(k, i, j)];
            let u_m = center_at(vt, k, ii - 1, j, n_r, w_in, w_out);
            let u_p = center_at(vt, k, ii + 1, j, n_r, w_in, w_out);
            let vr_avg = 0.5 * (vr[(k, i, j)] + vr[(k, i + 1, j)]);
            let vz_avg = 0.5 * (vz[(k, i, j)] + vz[(k, i, jp)]);
            let visc_r = (rf1 * (u_p - u) - rf0 * (u - u_m)) / (rc * g.h_r * g.h_r);
            let visc_z = (vt[(k, i, jp)] - 2.0 * u + vt[(k, i, jm)]) / (g.h_z * g.h_z);
            let mut res = -nu * (visc_r + visc_z - u / (rc * rc));
            if advection {
                let dr = (u_p - u_m) / (2.0 * g.h_r);
                let dz = (vt[(k, i, jp)] - vt[(k, i, jm)]) / (2.0 * g.h_z);
                res += vr_avg * dr + vz_avg * dz + vr_avg * u / rc;
            }
            if theta {
                let dtt = (vt[(kp, i, j)] - 2.0 * u + vt[(km, i, j)]) / (h_t * h_t);
                res -= nu * dtt / (rc * rc);
                let dp_t = (p[(kp, i, j)] - p[(km, i, j)]) / (2.0 * h_t);
                res += dp_t / rc;
                let vr_avg_p = 0.5 * (vr[(kp, i, j)] + vr[(kp, i + 1, j)]);
                let vr_avg_m = 0.5 * (vr[(km, i, j)] + vr[(km, i + 1, j)]);
                // coupling -nu (2/r^2) d_theta v_r stays on the left side
                res -= nu * (vr_avg_p - vr_avg_m) / (h_t * rc * rc);
                if advection {
                    let dt = (vt[(kp, i, j)] - vt[(km, i, j)]) / (2.0 * h_t);
                    res += u / rc * dt;
                }
            }
            *out_v = res;
        }
    });

    // axial momentum at axial faces
    fill3(&mut z_mom, |k, i, row| {
        let rc = g.r_center(i);
        let (rf0, rf1) = (g.r_face(i), g.r_face(i + 1));
        let (kp, km) = (g.kp(k), g.km(k));
        let ii = i as isize;
        for (j, out_v) in row.iter_mut().enumerate() {
            let (jp, jm) = (g.jp(j), g.jm(j));
            let u = vz[(k, i, j)];
            let u_m = center_at(vz, k, ii - 1, j, n_r, 0.0, 0.0);
            let u_p = center_at(vz, k, ii + 1, j, n_r, 0.0, 0.0);
            let vr_avg = 0.25
                * (vr[(k, i, j)] + vr[(k, i + 1, j)] + vr[(k, i, jm)] + vr[(k, i + 1, jm)]);
            let dp = (p[(k, i, j)] - p[(k, i, jm)]) / g.h_z + axial_gradient;
            let visc_r = (rf1 * (u_p - u) - rf0 * (u - u_m)) / (rc * g.h_r * g.h_r);
            let visc_z = (vz[(k, i, jp)] - 2.0 * u + vz[(k, i, jm)]) / (g.h_z * g.h_z);
            let mut res = dp - nu * (visc_r + visc_z);
            if advection {
                let dr = (u_p - u_m) / (2.0 * g.h_r);
                let dz = (vz[(k, i, jp)] - vz[(k, i, jm)]) / (2.0 * g.h_z);
                res += vr_avg * dr + u * dz;
            }
            if theta {
                let dtt = (vz[(kp, i, j)] - 2.0 * u + vz[(km, i, j)]) / (h_t * h_t);
                res -= nu * dtt / (rc * rc);
                if advection {
                    let vt_avg = 0.5 * (vt[(k, i, j)] + vt[(k, i, jm)]);
                    let dt = (vz[(kp, i, j)] - vz[(km, i, j)]) / (2.0 * h_t);
                    res += vt_avg / rc * dt;
                }
            }
            *out_v = res;
        }
    });

    ResidualFields {
        r_mom,
        theta_mom,
        z_mom,
        div: divergence(field),
    }
}

pub fn residual_fields_axisym(
    field: &Field,
    pressure: &PressureField,
    axial_gradient: f64,
    nu: f64,
) -> Result<ResidualFields> {
    field.check_shapes()?;
    if !field.grid.is_axisymmetric() {
        return Err(Error::GridMismatch);
    }
    if pressure.grid != field.grid {
        return Err(Error::GridMismatch);
    }
    Ok(residual_fields_impl(field, pressure, axial_gradient, nu, true))
}

/// Residual norms of the axisymmetric stationary system: the imposed axial
/// pressure gradient enters the axial equation additively (the stored
/// periodic pressure carries no linear-in-z part).
pub fn momentum_residual_axisym(
    field: &Field,
    pressure: &PressureField,
    axial_gradient: f64,
    nu: f64,
) -> Result<ResidualReport> {
    Ok(residual_fields_axisym(field, pressure, axial_gradient, nu)?.report(&field.grid))
}

/// Residual norms of the general (theta-resolved) system, including the
/// viscous coupling terms -/+ (2 nu / r^2) d_theta v^{theta,r}. The axial
/// gradient is taken from the pressure field.
pub fn momentum_residual_general(
    field: &Field,
    pressure: &PressureField,
    nu: f64,
) -> Result<ResidualReport> {
    field.check_shapes()?;
    if field.grid.is_axisymmetric() {
        return Err(Error::RequiresTheta);
    }
    if pressure.grid != field.grid {
        return Err(Error::GridMismatch);
    }
    let fields = residual_fields_impl(field, pressure, pressure.axial_gradient, nu, true);
    Ok(fields.report(&field.grid))
}

/// L-infinity norm of the centered discrete d_theta over all components.
pub fn theta_asymmetry(field: &Field) -> Result<f64> {
    field.check_shapes()?;
    let g = field.grid;
    if g.is_axisymmetric() {
        return Err(Error::RequiresTheta);
    }
    let two_h = 2.0 * g.h_theta();
    let comp_max = |arr: &Array3<f64>| {
        let (nk, ni, nj) = arr.dim();
        exec::max_rows(nk * ni, |row| {
            let (k, i) = (row / ni, row % ni);
            let (kp, km) = (g.kp(k), g.km(k));
            (0..nj).fold(0.0f64, |m, j| {
                m.max(((arr[(kp, i, j)] - arr[(km, i, j)]) / two_h).abs())
            })
        })
    };
    Ok(comp_max(&field.v_r)
        .max(comp_max(&field.v_theta))
        .max(comp_max(&field.v_z)))
}

#[derive(Debug, Clone, Copy)]
pub struct PoincareReport {
    /// ||f sqrt(phi_L)|| and ||d_r f sqrt(phi_L)|| over the whole cell,
    /// then over the strip L-1 <= |z| <= L.
    pub norm_f: f64,
    pub norm_df: f64,
    pub norm_f_strip: f64,
    pub norm_df_strip: f64,
    /// sqrt(C_P) and the discrete-tolerance bound sqrt(C_P)(1 + 5 h_r).
    pub bound: f64,
    pub bound_with_margin: f64,
    pub degenerate: bool,
}

impl PoincareReport {
    pub fn ratio(&self) -> Option<f64> {
        (!self.degenerate).then(|| self.norm_f / self.norm_df)
    }

    pub fn ratio_strip(&self) -> Option<f64> {
        (self.norm_df_strip > 0.0).then(|| self.norm_f_strip / self.norm_df_strip)
    }

    /// Vacuously true for the zero profile.
    pub fn within_bound(&self) -> bool {
        self.ratio().map_or(true, |r| r <= self.bound_with_margin)
            && self.ratio_strip().map_or(true, |r| r <= self.bound_with_margin)
    }
}

/// Quadrature check of the weighted Poincare inequality
/// ||f sqrt(phi_L)|| <= sqrt(C_P) ||d_r f sqrt(phi_L)|| for wall-vanishing
/// radial profiles. `profile` holds samples at the n_r+1 radial faces (walls
/// included); `axial` optionally modulates the profile in z (samples at the
/// n_z cell centers, default identically 1).
pub fn poincare_check(
    profile: &[f64],
    axial: Option<&[f64]>,
    grid: &Grid,
    l_cut: f64,
) -> Result<PoincareReport> {
    if profile.len() != grid.n_r + 1 {
        return Err(Error::ShapeMismatch);
    }
    if let Some(ax) = axial {
        if ax.len() != grid.n_z {
            return Err(Error::ShapeMismatch);
        }
    }
    let spec = CutoffSpec::new(l_cut)?;
    if l_cut > 0.5 * grid.z_period {
        return Err(Error::CutoffBeyondPeriod {
            l: l_cut,
            half_period: 0.5 * grid.z_period,
        });
    }
    let scale = profile.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let limit = 1e-12 * scale;
    let trace = profile[0].abs().max(profile[grid.n_r].abs());
    if scale > 0.0 && trace > limit {
        return Err(Error::NonVanishingTrace { trace, limit });
    }

    // z-factors: squared modulation times cutoff weight / strip indicator
    let mut w_cut = 0.0;
    let mut w_strip = 0.0;
    for j in 0..grid.n_z {
        let zs = grid.z_center_symmetric(j);
        let gsq = axial.map_or(1.0, |ax| ax[j] * ax[j]);
        w_cut += gsq * phi_l(zs, &spec) * grid.h_z;
        if (l_cut - 1.0..=l_cut).contains(&zs.abs()) {
            w_strip += gsq * grid.h_z;
        }
    }

    // radial quadrature: midpoint rule on cell centers, profile resampled
    // by face averaging, derivative from face differences
    let mut f_sq = 0.0;
    let mut df_sq = 0.0;
    for i in 0..grid.n_r {
        let r = grid.r_center(i);
        let f_mid = 0.5 * (profile[i] + profile[i + 1]);
        let df = (profile[i + 1] - profile[i]) / grid.h_r;
        f_sq += f_mid * f_mid * r * grid.h_r;
        df_sq += df * df * r * grid.h_r;
    }

    let two_pi = 2.0 * std::f64::consts::PI;
    let bound = crate::annulus::poincare_constant(&grid.annulus).sqrt();
    Ok(PoincareReport {
        norm_f: (two_pi * w_cut * f_sq).sqrt(),
        norm_df: (two_pi * w_cut * df_sq).sqrt(),
        norm_f_strip: (two_pi * w_strip * f_sq).sqrt(),
        norm_df_strip: (two_pi * w_strip * df_sq).sqrt(),
        bound,
        bound_with_margin: bound * (1.0 + 5.0 * grid.h_r),
        degenerate: df_sq * w_cut == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{Annulus, FlowConfig};
    use crate::exact::{sample_on_grid, GeneralizedTC};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::build(Annulus::new(1.0, 2.0).unwrap(), n, n, 2.0, None).unwrap()
    }

    fn gtc(w1: f64, w2: f64, a: f64) -> GeneralizedTC {
        GeneralizedTC::from_boundary(
            Annulus::new(1.0, 2.0).unwrap(),
            &FlowConfig::new(1.0, w1, w2).unwrap(),
            a,
        )
        .unwrap()
    }

    /// Least-squares slope of log(err) vs log(h).
    fn fit_order(hs: &[f64], errs: &[f64]) -> f64 {
        let n = hs.len() as f64;
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn divergence_exact_zeros() {
        let g = grid(16);
        let mut f = Field::zeros(g);
        f.v_z.fill(0.7);
        assert!(divergence(&f).iter().all(|&d| d == 0.0));
        let (tc, _) = sample_on_grid(&gtc(1.0, -0.3, 0.8), &g).unwrap();
        assert!(divergence(&tc).iter().all(|&d| d == 0.0));
    }

    #[test]
    fn divergence_gauss_identity() {
        // r-weighted divergence sums to zero for wall-respecting periodic data
        let g = grid(12);
        let mut f = Field::zeros(g);
        let mut rng = StdRng::seed_from_u64(3);
        for i in 1..12 {
            for j in 0..12 {
                f.v_r[(0, i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                f.v_z[(0, i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        let div = divergence(&f);
        let mut total = 0.0;
        for i in 0..12 {
            for j in 0..12 {
                total += div[(0, i, j)] * g.r_center(i) * g.h_r * g.h_z;
            }
        }
        assert!(total.abs() < 1e-12, "gauss defect {total:e}");
    }

    #[test]
    fn radial_laplacian_of_r_squared_is_four() {
        // v_z = r^2, z-independent: axial residual = -nu * (d_rr + d_r/r) r^2
        // = -4 nu at interior cells, to O(h^2).
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for &n in &[16usize, 32, 64] {
            let g = grid(n);
            let mut f = Field::zeros(g);
            for i in 0..n {
                let r = g.r_center(i);
                for j in 0..n {
                    f.v_z[(0, i, j)] = r * r;
                }
            }
            let p = PressureField::zeros(g, 0.0);
            let rf = residual_fields_impl(&f, &p, 0.0, 1.0, false);
            let mut worst = 0.0f64;
            for i in 2..n - 2 {
                for j in 0..n {
                    worst = worst.max((rf.z_mom[(0, i, j)] + 4.0).abs());
                }
            }
            errs.push(worst);
            hs.push(g.h_r);
        }
        // conservative radial stencil is exact on r^2 away from walls
        assert!(errs.iter().all(|&e| e < 1e-11), "errors {errs:?}");
    }

    #[test]
    fn azimuthal_viscous_annihilates_tc_profile() {
        // v_theta = A r + B/r with matching wall data: residual -> 0 at order 2
        let flow = gtc(1.0, 0.0, 0.0);
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for &n in &[48usize, 96, 192] {
            let g = grid(n);
            let (f, p) = sample_on_grid(&flow, &g).unwrap();
            let rf = residual_fields_axisym(&f, &p, 0.0, 1.0).unwrap();
            let worst = rf
                .theta_mom
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            errs.push(worst);
            hs.push(g.h_r);
        }
        let order = fit_order(&hs, &errs);
        assert!(order >= 1.9, "order {order}, errors {errs:?}");
    }

    #[test]
    fn residual_zero_field_is_zero() {
        let g = grid(8);
        let f = Field::zeros(g);
        let p = PressureField::zeros(g, 0.0);
        let rep = momentum_residual_axisym(&f, &p, 0.0, 1.0).unwrap();
        assert_eq!(rep.max_linf(), 0.0);
        assert_eq!(rep.radial.l2, 0.0);
    }

    #[test]
    fn residual_converges_on_sampled_generalized_tc() {
        let flow = gtc(1.0, 0.0, 0.5);
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for &n in &[32usize, 64, 128] {
            let g = grid(n);
            let (f, p) = sample_on_grid(&flow, &g).unwrap();
            let rep = momentum_residual_axisym(&f, &p, flow.axial_gradient, 1.0).unwrap();
            errs.push(rep.max_linf());
            hs.push(g.h_r);
        }
        let order = fit_order(&hs, &errs);
        assert!(order >= 1.9, "order {order}, errors {errs:?}");
    }

    #[test]
    fn manufactured_azimuthal_solution_matches_forcing() {
        // v_theta = sin(pi (r - R1)/(R2 - R1)), all else zero. The azimuthal
        // residual must converge to the analytic forcing
        //   -nu (d_rr + d_r/r - 1/r^2) v_theta.
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for &n in &[32usize, 64, 128] {
            let g = grid(n);
            let mut f = Field::zeros(g);
            // wall values of the manufactured profile are 0 at both walls
            for i in 0..n {
                let x = PI * (g.r_center(i) - 1.0);
                for j in 0..n {
                    f.v_theta[(0, i, j)] = x.sin();
                }
            }
            let p = PressureField::zeros(g, 0.0);
            let rf = residual_fields_axisym(&f, &p, 0.0, 1.0).unwrap();
            let mut worst = 0.0f64;
            for i in 0..n {
                let r = g.r_center(i);
                let x = PI * (r - 1.0);
                let forcing = -1.0
                    * (-PI * PI * x.sin() + PI * x.cos() / r - x.sin() / (r * r));
                for j in 0..n {
                    worst = worst.max((rf.theta_mom[(0, i, j)] - forcing).abs());
                }
            }
            errs.push(worst);
            hs.push(g.h_r);
        }
        let order = fit_order(&hs, &errs);
        assert!(order >= 1.9, "order {order}, errors {errs:?}");
        // the radial equation sees the centrifugal term of the manufactured
        // profile; check it against the analytic value at one resolution
        let g = grid(64);
        let mut f = Field::zeros(g);
        for i in 0..64 {
            let x = PI * (g.r_center(i) - 1.0);
            for j in 0..64 {
                f.v_theta[(0, i, j)] = x.sin();
            }
        }
        let p = PressureField::zeros(g, 0.0);
        let rf = residual_fields_axisym(&f, &p, 0.0, 1.0).unwrap();
        let mut worst = 0.0f64;
        for i in 1..64 {
            let r = g.r_face(i);
            let x = PI * (r - 1.0);
            let expected = -x.sin() * x.sin() / r;
            worst = worst.max((rf.r_mom[(0, i, 5)] - expected).abs());
        }
        assert!(worst < 5e-3, "centrifugal mismatch {worst}");
    }

    #[test]
    fn general_reduces_to_axisym_on_theta_constant_data() {
        let flow = gtc(0.7, -0.2, 0.3);
        let g2 = grid(24);
        let g3 = Grid::build(g2.annulus, 24, 24, 2.0, Some(8)).unwrap();
        let (f2, p2) = sample_on_grid(&flow, &g2).unwrap();
        let (f3, p3) = sample_on_grid(&flow, &g3).unwrap();
        let rep2 = momentum_residual_axisym(&f2, &p2, flow.axial_gradient, 1.0).unwrap();
        let rep3 = momentum_residual_general(&f3, &p3, 1.0).unwrap();
        assert!((rep2.radial.linf - rep3.radial.linf).abs() < 1e-14);
        assert!((rep2.azimuthal.linf - rep3.azimuthal.linf).abs() < 1e-14);
        assert!((rep2.axial.linf - rep3.axial.linf).abs() < 1e-14);
        assert!((rep2.continuity.linf - rep3.continuity.linf).abs() < 1e-14);
        assert!((rep2.radial.l2 - rep3.radial.l2).abs() < 1e-14);
        assert!((rep2.azimuthal.l2 - rep3.azimuthal.l2).abs() < 1e-14);
        assert!((rep2.axial.l2 - rep3.axial.l2).abs() < 1e-14);
        assert!((rep2.continuity.l2 - rep3.continuity.l2).abs() < 1e-14);
    }

    #[test]
    fn general_coupling_term_single_mode_oracle() {
        // v_r = eps cos(theta) bump(r), all else zero: the azimuthal residual
        // reduces to the coupling term -(2 nu / r^2) d_theta <v_r>, with
        // d_theta the centered difference and <.> the radial face average.
        let nu = 0.9;
        let eps = 1e-3;
        let ann = Annulus::new(1.0, 2.0).unwrap();
        let g = Grid::build(ann, 16, 8, 2.0, Some(32)).unwrap();
        let bump = |r: f64| (r - 1.0) * (2.0 - r);
        let mut f = Field::zeros(g);
        for k in 0..32 {
            let c = (g.theta(k)).cos();
            for i in 1..16 {
                for j in 0..8 {
                    f.v_r[(k, i, j)] = eps * c * bump(g.r_face(i));
                }
            }
        }
        let p = PressureField::zeros(g, 0.0);
        let rf = residual_fields_impl(&f, &p, 0.0, nu, true);
        let h_t = g.h_theta();
        let mut worst = 0.0f64;
        for k in 0..32 {
            let (kp, km) = (g.kp(k), g.km(k));
            let d_cos = ((g.theta(kp)).cos() - (g.theta(km)).cos()) / (2.0 * h_t);
            for i in 0..16 {
                let rc = g.r_center(i);
                let bump_avg = 0.5 * (bump(g.r_face(i)) + bump(g.r_face(i + 1)));
                // interior faces only carry the perturbation; walls are zero
                let bump_avg = if i == 0 {
                    0.5 * bump(g.r_face(1))
                } else if i == 15 {
                    0.5 * bump(g.r_face(15))
                } else {
                    bump_avg
                };
                let expected = -(2.0 * nu / (rc * rc)) * eps * d_cos * bump_avg;
                for j in 0..8 {
                    worst = worst.max((rf.theta_mom[(k, i, j)] - expected).abs());
                }
            }
        }
        assert!(worst < 1e-14 * (eps / h_t).max(1.0), "coupling defect {worst:e}");
    }

    #[test]
    fn theta_asymmetry_oracle() {
        let ann = Annulus::new(1.0, 2.0).unwrap();
        let g = Grid::build(ann, 8, 8, 2.0, Some(64)).unwrap();
        let mut f = Field::zeros(g);
        assert_eq!(theta_asymmetry(&f).unwrap(), 0.0);

        let eps = 1e-2;
        for k in 0..64 {
            let c = (g.theta(k)).cos();
            for i in 0..8 {
                for j in 0..8 {
                    f.v_theta[(k, i, j)] = eps * c;
                }
            }
        }
        let h_t = g.h_theta();
        // centered difference of cos at the nodes: max |sin(theta_k)| sin(h)/h
        let expected = (0..64usize)
            .map(|k| {
                let (kp, km) = (g.kp(k), g.km(k));
                ((g.theta(kp).cos() - g.theta(km).cos()) / (2.0 * h_t)).abs()
            })
            .fold(0.0f64, f64::max)
            * eps;
        let got = theta_asymmetry(&f).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);

        // linearity in the amplitude
        let mut f2 = f.clone();
        f2.v_theta.mapv_inplace(|v| 2.0 * v);
        let got2 = theta_asymmetry(&f2).unwrap();
        assert_relative_eq!(got2, 2.0 * got, max_relative = 1e-12);

        // axisymmetric grids are rejected
        let g2 = grid(8);
        assert!(theta_asymmetry(&Field::zeros(g2)).is_err());
    }

    #[test]
    fn poincare_fundamental_mode() {
        let g = Grid::build(Annulus::new(1.0, 2.0).unwrap(), 64, 64, 4.0, None).unwrap();
        let profile: Vec<f64> = (0..=64).map(|i| (PI * (g.r_face(i) - 1.0)).sin()).collect();
        let rep = poincare_check(&profile, None, &g, 1.5).unwrap();
        let ratio = rep.ratio().unwrap();
        assert!((ratio - 1.0 / PI).abs() < 1e-3, "ratio {ratio}");
        assert!(ratio <= rep.bound, "fundamental mode should sit inside the bound");
        assert!(rep.within_bound());
        assert_relative_eq!(rep.bound, 0.45015815807855303, max_relative = 1e-12);
    }

    #[test]
    fn poincare_degenerate_and_validation() {
        let g = Grid::build(Annulus::new(1.0, 2.0).unwrap(), 16, 16, 4.0, None).unwrap();
        let zeros = vec![0.0; 17];
        let rep = poincare_check(&zeros, None, &g, 1.5).unwrap();
        assert!(rep.degenerate);
        assert!(rep.within_bound());

        let mut bad = zeros.clone();
        bad[0] = 0.5;
        bad[8] = 1.0;
        assert!(matches!(
            poincare_check(&bad, None, &g, 1.5),
            Err(Error::NonVanishingTrace { .. })
        ));
        let mut ok = zeros.clone();
        ok[8] = 1.0;
        assert!(poincare_check(&ok, None, &g, 1.0).is_err());
        assert!(poincare_check(&ok, None, &g, 2.5).is_err());
    }

    #[test]
    fn poincare_random_separable_profiles() {
        let g = Grid::build(Annulus::new(1.0, 2.0).unwrap(), 48, 32, 4.0, None).unwrap();
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..50 {
            // random wall-vanishing radial mode mixture
            let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let profile: Vec<f64> = (0..=48)
                .map(|i| {
                    let x = PI * (g.r_face(i) - 1.0);
                    c.iter()
                        .enumerate()
                        .map(|(m, cm)| cm * ((m + 1) as f64 * x).sin())
                        .sum()
                })
                .collect();
            let (a1, b1): (f64, f64) =
                (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let axial: Vec<f64> = (0..32)
                .map(|j| {
                    let z = 2.0 * PI * g.z_center(j) / g.z_period;
                    1.0 + a1 * z.cos() + b1 * z.sin()
                })
                .collect();
            let rep = poincare_check(&profile, Some(&axial), &g, 1.75).unwrap();
            assert!(rep.within_bound(), "ratio {:?}", rep.ratio());
        }
    }
}
