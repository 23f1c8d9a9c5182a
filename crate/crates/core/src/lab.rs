//! Verification instruments for the uniqueness estimates: the localized
//! second-derivative functional Y(L), least-squares projection onto the
//! Couette manifold, and the randomized Reynolds sweep that drives both.

use crate::annulus::Thresholds;
use crate::error::{Error, Result};
use crate::exact::{sample_on_grid, GeneralizedTC, TCCoefficients};
use crate::exec;
use crate::field::{Field, PressureField};
use crate::grid::Grid;
use crate::solver::{perturb, solve_steady, PerturbSpec, SolveOptions, SolveOutcome};
use ndarray::Array3;

/// Axial cutoff: the weight is 1 on |z| <= L-1, ramps linearly to 0 on
/// L-1 <= |z| <= L, and vanishes beyond. The unit-width ramp is what makes
/// the strip functional Y'(L) the L-derivative of the weighted one.
#[derive(Debug, Clone, Copy)]
pub struct CutoffSpec {
    pub l_cut: f64,
}

impl CutoffSpec {
    pub fn new(l_cut: f64) -> Result<Self> {
        if !(l_cut.is_finite() && l_cut > 1.0) {
            return Err(Error::CutoffTooSmall(l_cut));
        }
        Ok(CutoffSpec { l_cut })
    }
}

pub fn phi_l(z: f64, spec: &CutoffSpec) -> f64 {
    let a = z.abs();
    if a <= spec.l_cut - 1.0 {
        1.0
    } else if a < spec.l_cut {
        spec.l_cut - a
    } else {
        0.0
    }
}

/// One squared-norm contribution, phi-weighted over the cell and unweighted
/// over the strip L-1 <= |z| <= L.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct TermPair {
    pub weighted: f64,
    pub strip: f64,
}

#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct AzimuthalPart {
    pub mixed_rtheta: TermPair,
    pub mixed_ztheta: TermPair,
    /// r^-1 (d_theta^2 v^theta + d_theta v^r)
    pub swirl_pair: TermPair,
    /// r^-1 (d_theta^2 v^r - d_theta v^theta)
    pub radial_pair: TermPair,
    /// r^-1 d_theta^2 v^z
    pub axial_second: TermPair,
    pub y: f64,
    pub y_strip: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EnergyReport {
    pub l_cut: f64,
    /// ||d_r d_z v||^2 over all three components
    pub mixed_rz: TermPair,
    /// ||d_z^2 v||^2 over all three components
    pub zz: TermPair,
    /// sum over lambda in {r, theta} of ||r^-1 d_z v^lambda||^2
    pub z_over_r: TermPair,
    /// nu times the sum of the axial terms
    pub y: f64,
    pub y_strip: f64,
    /// theta-derivative functional, present on theta-resolved grids
    pub azimuthal: Option<AzimuthalPart>,
}

struct Quadrature<'a> {
    grid: &'a Grid,
    w_phi: Vec<f64>,
    w_strip: Vec<f64>,
    w_theta: f64,
}

impl<'a> Quadrature<'a> {
    fn new(grid: &'a Grid, spec: &CutoffSpec) -> Self {
        let w_phi: Vec<f64> = (0..grid.n_z)
            .map(|j| phi_l(grid.z_center_symmetric(j), spec) * grid.h_z)
            .collect();
        let w_strip: Vec<f64> = (0..grid.n_z)
            .map(|j| {
                let a = grid.z_center_symmetric(j).abs();
                if (spec.l_cut - 1.0..=spec.l_cut).contains(&a) {
                    grid.h_z
                } else {
                    0.0
                }
            })
            .collect();
        let w_theta = if grid.is_axisymmetric() {
            2.0 * std::f64::consts::PI
        } else {
            grid.h_theta()
        };
        Quadrature {
            grid,
            w_phi,
            w_strip,
            w_theta,
        }
    }

    /// Squared L2 norms of a cell-centered integrand against r dr dtheta dz.
    fn norms(&self, arr: &Array3<f64>) -> TermPair {
        let (nk, ni, _) = arr.dim();
        let g = self.grid;
        let partials: Vec<[f64; 2]> = exec::map_rows(nk * ni, |row| {
            let (k, i) = (row / ni, row % ni);
            let r = g.r_center(i);
            let mut w = 0.0;
            let mut s = 0.0;
            for j in 0..g.n_z {
                let sq = arr[(k, i, j)] * arr[(k, i, j)] * r;
                w += sq * self.w_phi[j];
                s += sq * self.w_strip[j];
            }
            [w, s]
        });
        // combine in row order so the result never depends on scheduling
        let (mut w, mut s) = (0.0, 0.0);
        for p in partials {
            w += p[0];
            s += p[1];
        }
        TermPair {
            weighted: w * g.h_r * self.w_theta,
            strip: s * g.h_r * self.w_theta,
        }
    }
}

/// Ghost value past a wall for a cell-centered derivative quantity whose
/// wall trace is known (cubic extrapolation, same closure as the stencils).
#[inline]
fn ghost(wall: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    (16.0 / 5.0) * wall - 3.0 * u0 + u1 - (1.0 / 5.0) * u2
}

/// Centered radial derivative of a cell-centered array with zero wall trace.
fn d_r_centered_zero_wall(arr: &Array3<f64>, g: &Grid) -> Array3<f64> {
    let (nk, ni, nj) = arr.dim();
    let mut out = Array3::zeros((nk, ni, nj));
    for k in 0..nk {
        for i in 0..ni {
            for j in 0..nj {
                let u_m = if i == 0 {
                    ghost(0.0, arr[(k, 0, j)], arr[(k, 1, j)], arr[(k, 2, j)])
                } else {
                    arr[(k, i - 1, j)]
                };
                let u_p = if i + 1 == ni {
                    ghost(0.0, arr[(k, ni - 1, j)], arr[(k, ni - 2, j)], arr[(k, ni - 3, j)])
                } else {
                    arr[(k, i + 1, j)]
                };
                out[(k, i, j)] = (u_p - u_m) / (2.0 * g.h_r);
            }
        }
    }
    out
}

/// Localized second-derivative functional
///   Y(L) = nu ( ||d_r d_z v sqrt(phi)||^2 + ||d_z^2 v sqrt(phi)||^2
///             + sum_{lambda=r,theta} ||r^-1 d_z v^lambda sqrt(phi)||^2 )
/// together with the unweighted strip version Y'(L), and the analogous
/// theta-derivative functional on theta-resolved grids. A steady flow on the
/// Couette manifold makes every term vanish.
pub fn y_functional(field: &Field, nu: f64, l_cut: f64) -> Result<EnergyReport> {
    field.check_shapes()?;
    let g = field.grid;
    let spec = CutoffSpec::new(l_cut)?;
    if l_cut > 0.5 * g.z_period {
        return Err(Error::CutoffBeyondPeriod {
            l: l_cut,
            half_period: 0.5 * g.z_period,
        });
    }
    let quad = Quadrature::new(&g, &spec);
    let (nk, nr, nz) = (g.k_dim(), g.n_r, g.n_z);
    let (vr, vt, vz) = (&field.v_r, &field.v_theta, &field.v_z);
    let (h_r, h_z) = (g.h_r, g.h_z);

    // z-derivatives at native radial locations
    let mut dz_vr_face = Array3::zeros((nk, nr + 1, nz));
    let mut d2z_vr_face = Array3::zeros((nk, nr + 1, nz));
    for k in 0..nk {
        for i in 0..=nr {
            for j in 0..nz {
                let (jp, jm) = (g.jp(j), g.jm(j));
                dz_vr_face[(k, i, j)] = (vr[(k, i, jp)] - vr[(k, i, jm)]) / (2.0 * h_z);
                d2z_vr_face[(k, i, j)] =
                    (vr[(k, i, jp)] - 2.0 * vr[(k, i, j)] + vr[(k, i, jm)]) / (h_z * h_z);
            }
        }
    }
    let face_avg = |arr: &Array3<f64>| {
        let mut out = Array3::zeros((nk, nr, nz));
        for k in 0..nk {
            for i in 0..nr {
                for j in 0..nz {
                    out[(k, i, j)] = 0.5 * (arr[(k, i, j)] + arr[(k, i + 1, j)]);
                }
            }
        }
        out
    };
    let dz_vr = face_avg(&dz_vr_face);
    let d2z_vr = face_avg(&d2z_vr_face);

    let mut dz_vt = Array3::zeros((nk, nr, nz));
    let mut d2z_vt = Array3::zeros((nk, nr, nz));
    let mut dz_vz = Array3::zeros((nk, nr, nz));
    let mut d2z_vz_face = Array3::zeros((nk, nr, nz));
    for k in 0..nk {
        for i in 0..nr {
            for j in 0..nz {
                let (jp, jm) = (g.jp(j), g.jm(j));
                dz_vt[(k, i, j)] = (vt[(k, i, jp)] - vt[(k, i, jm)]) / (2.0 * h_z);
                d2z_vt[(k, i, j)] =
                    (vt[(k, i, jp)] - 2.0 * vt[(k, i, j)] + vt[(k, i, jm)]) / (h_z * h_z);
                dz_vz[(k, i, j)] = (vz[(k, i, jp)] - vz[(k, i, j)]) / h_z;
                d2z_vz_face[(k, i, j)] =
                    (vz[(k, i, jp)] - 2.0 * vz[(k, i, j)] + vz[(k, i, jm)]) / (h_z * h_z);
            }
        }
    }
    let z_face_avg = |arr: &Array3<f64>| {
        let mut out = Array3::zeros((nk, nr, nz));
        for k in 0..nk {
            for i in 0..nr {
                for j in 0..nz {
                    out[(k, i, j)] = 0.5 * (arr[(k, i, j)] + arr[(k, i, g.jp(j))]);
                }
            }
        }
        out
    };
    let d2z_vz = z_face_avg(&d2z_vz_face);

    // mixed d_r d_z at cell centers
    let mut drz_vr = Array3::zeros((nk, nr, nz));
    for k in 0..nk {
        for i in 0..nr {
            for j in 0..nz {
                drz_vr[(k, i, j)] =
                    (dz_vr_face[(k, i + 1, j)] - dz_vr_face[(k, i, j)]) / h_r;
            }
        }
    }
    // wall traces of d_z v_theta and d_z v_z vanish (steady wall data)
    let drz_vt = d_r_centered_zero_wall(&dz_vt, &g);
    let drz_vz = d_r_centered_zero_wall(&dz_vz, &g);

    let mut mixed_rz = quad.norms(&drz_vr);
    let t = quad.norms(&drz_vt);
    mixed_rz.weighted += t.weighted;
    mixed_rz.strip += t.strip;
    let t = quad.norms(&drz_vz);
    mixed_rz.weighted += t.weighted;
    mixed_rz.strip += t.strip;

    let mut zz = quad.norms(&d2z_vr);
    let t = quad.norms(&d2z_vt);
    zz.weighted += t.weighted;
    zz.strip += t.strip;
    let t = quad.norms(&d2z_vz);
    zz.weighted += t.weighted;
    zz.strip += t.strip;

    let over_r = |arr: &Array3<f64>| {
        let mut out = arr.clone();
        for k in 0..nk {
            for i in 0..nr {
                let r = g.r_center(i);
                for j in 0..nz {
                    out[(k, i, j)] /= r;
                }
            }
        }
        out
    };
    let mut z_over_r = quad.norms(&over_r(&dz_vr));
    let t = quad.norms(&over_r(&dz_vt));
    z_over_r.weighted += t.weighted;
    z_over_r.strip += t.strip;

    let azimuthal = if g.is_axisymmetric() {
        None
    } else {
        Some(azimuthal_part(field, &quad, nu))
    };

    Ok(EnergyReport {
        l_cut,
        mixed_rz,
        zz,
        z_over_r,
        y: nu * (mixed_rz.weighted + zz.weighted + z_over_r.weighted),
        y_strip: nu * (mixed_rz.strip + zz.strip + z_over_r.strip),
        azimuthal,
    })
}

fn azimuthal_part(field: &Field, quad: &Quadrature, nu: f64) -> AzimuthalPart {
    let g = field.grid;
    let (nk, nr, nz) = (g.k_dim(), g.n_r, g.n_z);
    let (vr, vt, vz) = (&field.v_r, &field.v_theta, &field.v_z);
    let h_t = g.h_theta();

    let d_theta = |arr: &Array3<f64>| {
        let (nk2, ni, nj) = arr.dim();
        let mut out = Array3::zeros((nk2, ni, nj));
        for k in 0..nk2 {
            let (kp, km) = (g.kp(k), g.km(k));
            for i in 0..ni {
                for j in 0..nj {
                    out[(k, i, j)] = (arr[(kp, i, j)] - arr[(km, i, j)]) / (2.0 * h_t);
                }
            }
        }
        out
    };
    let d_theta2 = |arr: &Array3<f64>| {
        let (nk2, ni, nj) = arr.dim();
        let mut out = Array3::zeros((nk2, ni, nj));
        for k in 0..nk2 {
            let (kp, km) = (g.kp(k), g.km(k));
            for i in 0..ni {
                for j in 0..nj {
                    out[(k, i, j)] =
                        (arr[(kp, i, j)] - 2.0 * arr[(k, i, j)] + arr[(km, i, j)]) / (h_t * h_t);
                }
            }
        }
        out
    };
    let face_avg = |arr: &Array3<f64>| {
        let mut out = Array3::zeros((nk, nr, nz));
        for k in 0..nk {
            for i in 0..nr {
                for j in 0..nz {
                    out[(k, i, j)] = 0.5 * (arr[(k, i, j)] + arr[(k, i + 1, j)]);
                }
            }
        }
        out
    };
    let z_face_avg = |arr: &Array3<f64>| {
        let mut out = Array3::zeros((nk, nr, nz));
        for k in 0..nk {
            for i in 0..nr {
                for j in 0..nz {
                    out[(k, i, j)] = 0.5 * (arr[(k, i, j)] + arr[(k, i, g.jp(j))]);
                }
            }
        }
        out
    };

    let dt_vr_face = d_theta(vr);
    let dt_vt = d_theta(vt);
    let dt_vz_face = d_theta(vz);
    let dt_vr = face_avg(&dt_vr_face);
    let dt_vz = z_face_avg(&dt_vz_face);

    // d_r d_theta at centers
    let mut drt_vr = Array3::zeros((nk, nr, nz));
    for k in 0..nk {
        for i in 0..nr {
            for j in 0..nz {
                drt_vr[(k, i, j)] = (dt_vr_face[(k, i + 1, j)] - dt_vr_face[(k, i, j)]) / g.h_r;
            }
        }
    }
    let drt_vt = d_r_centered_zero_wall(&dt_vt, &g);
    let drt_vz = d_r_centered_zero_wall(&dt_vz, &g);

    // d_z d_theta at centers
    let mut dzt = Array3::zeros((nk, nr, nz));
    for k in 0..nk {
        for i in 0..nr {
            for j in 0..nz {
                let (jp, jm) = (g.jp(j), g.jm(j));
                dzt[(k, i, j)] = 0.5
                    * ((dt_vr_face[(k, i, jp)] - dt_vr_face[(k, i, jm)])
                        + (dt_vr_face[(k, i + 1, jp)] - dt_vr_face[(k, i + 1, jm)]))
                    / (2.0 * g.h_z);
            }
        }
    }
    let dzt_vr = dzt;
    let mut dzt_vt = Array3::zeros((nk, nr, nz));
    let mut dzt_vz = Array3::zeros((nk, nr, nz));
    for k in 0..nk {
        for i in 0..nr {
            for j in 0..nz {
                let (jp, jm) = (g.jp(j), g.jm(j));
                dzt_vt[(k, i, j)] = (dt_vt[(k, i, jp)] - dt_vt[(k, i, jm)]) / (2.0 * g.h_z);
                dzt_vz[(k, i, j)] =
                    (dt_vz_face[(k, i, jp)] - dt_vz_face[(k, i, j)]) / g.h_z;
            }
        }
    }

    let dtt_vt = d_theta2(vt);
    let dtt_vr = face_avg(&d_theta2(vr));
    let dtt_vz = z_face_avg(&d_theta2(vz));

    let combine = |a: &Array3<f64>, b: &Array3<f64>, sign: f64| {
        let mut out = Array3::zeros((nk, nr, nz));
        for k in 0..nk {
            for i in 0..nr {
                let r = g.r_center(i);
                for j in 0..nz {
                    out[(k, i, j)] = (a[(k, i, j)] + sign * b[(k, i, j)]) / r;
                }
            }
        }
        out
    };

    let mut mixed_rtheta = quad.norms(&drt_vr);
    for arr in [&drt_vt, &drt_vz] {
        let t = quad.norms(arr);
        mixed_rtheta.weighted += t.weighted;
        mixed_rtheta.strip += t.strip;
    }
    let mut mixed_ztheta = quad.norms(&dzt_vr);
    for arr in [&dzt_vt, &dzt_vz] {
        let t = quad.norms(arr);
        mixed_ztheta.weighted += t.weighted;
        mixed_ztheta.strip += t.strip;
    }
    let over_r = |arr: &Array3<f64>| {
        let mut out = arr.clone();
        for k in 0..nk {
            for i in 0..nr {
                let r = g.r_center(i);
                for j in 0..nz {
                    out[(k, i, j)] /= r;
                }
            }
        }
        out
    };
    let swirl_pair = quad.norms(&combine(&dtt_vt, &dt_vr, 1.0));
    let radial_pair = quad.norms(&combine(&dtt_vr, &dt_vt, -1.0));
    let axial_second = quad.norms(&over_r(&dtt_vz));

    let sum_w = mixed_rtheta.weighted
        + mixed_ztheta.weighted
        + swirl_pair.weighted
        + radial_pair.weighted
        + axial_second.weighted;
    let sum_s = mixed_rtheta.strip
        + mixed_ztheta.strip
        + swirl_pair.strip
        + radial_pair.strip
        + axial_second.strip;
    AzimuthalPart {
        mixed_rtheta,
        mixed_ztheta,
        swirl_pair,
        radial_pair,
        axial_second,
        y: nu * sum_w,
        y_strip: nu * sum_s,
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ManifoldFit {
    pub a_coef: f64,
    pub b_coef: f64,
    pub axial_gradient: f64,
    pub pressure_offset: f64,
    pub distance_linf: f64,
    pub distance_l2: f64,
    pub velocity_scale: f64,
}

/// Project a state onto the generalized-Couette manifold: (A, B) from an
/// r-weighted least-squares fit of the z,theta-averaged azimuthal profile
/// against {r, 1/r}; the axial gradient either imposed or fitted from the
/// axial profile shape; the offset b from aligning the stored gauge.
/// Distances are over the velocity components.
pub fn fit_tc_manifold(
    field: &Field,
    pressure: &PressureField,
    viscosity: f64,
    imposed_a: Option<f64>,
) -> Result<ManifoldFit> {
    field.check_shapes()?;
    let g = field.grid;
    let (nk, nr, nz) = (g.k_dim(), g.n_r, g.n_z);
    let samples = (nk * nz) as f64;

    // z,theta-averaged center profiles
    let mut vt_bar = vec![0.0; nr];
    let mut vz_bar = vec![0.0; nr];
    for i in 0..nr {
        let mut st = 0.0;
        let mut sz = 0.0;
        for k in 0..nk {
            for j in 0..nz {
                st += field.v_theta[(k, i, j)];
                sz += field.v_z[(k, i, j)];
            }
        }
        vt_bar[i] = st / samples;
        vz_bar[i] = sz / samples;
    }

    // normal equations for v_theta ~ A r + B / r, weight r dr
    let (mut m11, mut m12, mut m22, mut rhs1, mut rhs2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..nr {
        let r = g.r_center(i);
        let w = r * g.h_r;
        m11 += w * r * r;
        m12 += w;
        m22 += w / (r * r);
        rhs1 += w * r * vt_bar[i];
        rhs2 += w * vt_bar[i] / r;
    }
    let det = m11 * m22 - m12 * m12;
    let a_coef = (rhs1 * m22 - rhs2 * m12) / det;
    let b_coef = (m11 * rhs2 - m12 * rhs1) / det;

    let axial_gradient = match imposed_a {
        Some(a) => a,
        None => {
            // v_z is linear in a: project onto the unit-gradient profile
            let unit = GeneralizedTC::new(
                TCCoefficients {
                    a_coef: 0.0,
                    b_coef: 0.0,
                },
                1.0,
                0.0,
                g.annulus,
                viscosity,
            )?;
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..nr {
                let r = g.r_center(i);
                let w = r * g.h_r;
                let s = unit.vz_profile(r);
                num += w * s * vz_bar[i];
                den += w * s * s;
            }
            num / den
        }
    };

    let reference = GeneralizedTC::new(
        TCCoefficients { a_coef, b_coef },
        axial_gradient,
        0.0,
        g.annulus,
        viscosity,
    )?;
    let (ref_field, ref_pressure) = sample_on_grid(&reference, &g)?;

    // offset between the stored pressure gauge and the analytic radial part
    let mut diff = pressure.clone();
    for k in 0..nk {
        for i in 0..nr {
            for j in 0..nz {
                diff.p[(k, i, j)] -= ref_pressure.p[(k, i, j)];
            }
        }
    }
    let pressure_offset = diff.r_weighted_mean();

    // velocity distance over all staggered samples
    let mut linf = 0.0f64;
    let mut sq = 0.0;
    let mut accum = |a: &Array3<f64>, b: &Array3<f64>, face_based: bool| {
        let (nk2, ni, nj) = a.dim();
        for k in 0..nk2 {
            for i in 0..ni {
                let r = if face_based { g.r_face(i) } else { g.r_center(i) };
                for j in 0..nj {
                    let d = a[(k, i, j)] - b[(k, i, j)];
                    linf = linf.max(d.abs());
                    sq += d * d * r;
                }
            }
        }
    };
    accum(&field.v_r, &ref_field.v_r, true);
    accum(&field.v_theta, &ref_field.v_theta, false);
    accum(&field.v_z, &ref_field.v_z, false);
    let w_theta = if g.is_axisymmetric() {
        2.0 * std::f64::consts::PI
    } else {
        g.h_theta()
    };
    let distance_l2 = (sq * g.h_r * g.h_z * w_theta).sqrt();

    Ok(ManifoldFit {
        a_coef,
        b_coef,
        axial_gradient,
        pressure_offset,
        distance_linf: linf,
        distance_l2,
        velocity_scale: field.max_abs().max(ref_field.max_abs()),
    })
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentRecord {
    pub omega_inner: f64,
    pub omega_outer: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub reynolds_inner: f64,
    pub reynolds_outer: f64,
    pub thresholds: Thresholds,
    /// sup-norm of the perturbed initial deviation from the manifold
    pub perturbation_linf: f64,
    /// sup-norm of the final (best) iterate
    pub velocity_linf: f64,
    /// final velocity below c_star and both Reynolds numbers below the bound
    pub within_hypothesis: bool,
    pub converged: bool,
    pub newton_iterations: usize,
    pub final_residual: f64,
    pub manifold_distance: f64,
    pub distance_tolerance: f64,
    pub fitted_a: f64,
    pub fitted_a_coef: f64,
    pub fitted_b_coef: f64,
    /// (L, Y(L)) over the cutoff ladder
    pub y_ladder: Vec<(f64, f64)>,
    pub y_max: f64,
}

impl ExperimentRecord {
    pub fn on_manifold(&self) -> bool {
        self.converged && self.manifold_distance <= self.distance_tolerance
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepConfig {
    pub annulus: crate::annulus::Annulus,
    pub viscosity: f64,
    pub omega_pairs: Vec<(f64, f64)>,
    pub amplitudes: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_r: usize,
    pub n_z: usize,
    pub z_period: f64,
    pub axial_gradient: f64,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepSummary {
    pub records: Vec<ExperimentRecord>,
    pub ladder: Vec<f64>,
    pub all_converged: bool,
    pub all_on_manifold: bool,
}

impl SweepSummary {
    pub fn n_converged(&self) -> usize {
        self.records.iter().filter(|r| r.converged).count()
    }
    pub fn n_on_manifold(&self) -> usize {
        self.records.iter().filter(|r| r.on_manifold()).count()
    }
    pub fn n_within_hypothesis(&self) -> usize {
        self.records.iter().filter(|r| r.within_hypothesis).count()
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub const RECORD_COLUMNS: [&str; 23] = [
    "omega_inner",
    "omega_outer",
    "amplitude",
    "seed",
    "reynolds_inner",
    "reynolds_outer",
    "c_p",
    "c1",
    "c2",
    "c_star",
    "re_bound",
    "perturbation_linf",
    "velocity_linf",
    "within_hypothesis",
    "converged",
    "newton_iterations",
    "final_residual",
    "manifold_distance",
    "distance_tolerance",
    "fitted_a",
    "fitted_a_coef",
    "fitted_b_coef",
    "y_max",
];

/// One row per experiment, fixed column order, 17-significant-digit floats.
/// An empty record list still writes the header.
pub fn write_records_csv<W: std::io::Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record([
            fmt_float(r.omega_inner),
            fmt_float(r.omega_outer),
            fmt_float(r.amplitude),
            r.seed.to_string(),
            fmt_float(r.reynolds_inner),
            fmt_float(r.reynolds_outer),
            fmt_float(r.thresholds.c_p),
            fmt_float(r.thresholds.c1),
            fmt_float(r.thresholds.c2),
            fmt_float(r.thresholds.c_star),
            fmt_float(r.thresholds.re_bound),
            fmt_float(r.perturbation_linf),
            fmt_float(r.velocity_linf),
            r.within_hypothesis.to_string(),
            r.converged.to_string(),
            r.newton_iterations.to_string(),
            fmt_float(r.final_residual),
            fmt_float(r.manifold_distance),
            fmt_float(r.distance_tolerance),
            fmt_float(r.fitted_a),
            fmt_float(r.fitted_a_coef),
            fmt_float(r.fitted_b_coef),
            fmt_float(r.y_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format cutoff ladder: one row per (experiment, L), keyed by the
/// experiment's identifying inputs so the file is plot-ready on its own.
pub fn write_ladder_csv<W: std::io::Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega_inner", "omega_outer", "amplitude", "seed", "l_cut", "y_value"])?;
    for r in records {
        for &(l, y) in &r.y_ladder {
            w.write_record([
                fmt_float(r.omega_inner),
                fmt_float(r.omega_outer),
                fmt_float(r.amplitude),
                r.seed.to_string(),
                fmt_float(l),
                fmt_float(y),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cutoff ladder 1.25, 1.5, ... up to half the axial period.
pub fn cutoff_ladder(z_period: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut l = 1.25;
    while l <= 0.5 * z_period + 1e-12 {
        out.push(l);
        l += 0.25;
    }
    out
}

/// Run the full randomized verification grid: for every (omega pair,
/// amplitude, seed) start from the exact Couette state, superpose a
/// solenoidal perturbation, solve the steady system, project back onto the
/// manifold, and evaluate Y(L) along the cutoff ladder. Experiments are
/// independent and run through the deterministic parallel executor, so the
/// record order never depends on scheduling.
pub fn sweep_reynolds(config: &SweepConfig) -> Result<SweepSummary> {
    let grid = Grid::build(config.annulus, config.n_r, config.n_z, config.z_period, None)?;
    let flow_checks: Vec<(f64, f64)> = config.omega_pairs.clone();
    for &(w1, w2) in &flow_checks {
        crate::annulus::FlowConfig::new(config.viscosity, w1, w2)?;
    }
    let ladder = cutoff_ladder(config.z_period);

    let mut cases = Vec::new();
    for &(w1, w2) in &config.omega_pairs {
        for &amp in &config.amplitudes {
            for &seed in &config.seeds {
                cases.push((w1, w2, amp, seed));
            }
        }
    }

    let results: Vec<Result<ExperimentRecord>> = exec::map_rows(cases.len(), |idx| {
        let (w1, w2, amp, seed) = cases[idx];
        run_experiment(config, &grid, &ladder, w1, w2, amp, seed)
    });
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }
    let all_converged = records.iter().all(|r| r.converged);
    let all_on_manifold = records
        .iter()
        .all(|r| r.converged && r.manifold_distance <= r.distance_tolerance);
    Ok(SweepSummary {
        records,
        ladder,
        all_converged,
        all_on_manifold,
    })
}

fn run_experiment(
    config: &SweepConfig,
    grid: &Grid,
    ladder: &[f64],
    w1: f64,
    w2: f64,
    amplitude: f64,
    seed: u64,
) -> Result<ExperimentRecord> {
    let flow = crate::annulus::FlowConfig::new(config.viscosity, w1, w2)?;
    let gtc = GeneralizedTC::from_boundary(config.annulus, &flow, config.axial_gradient)?;
    let (base, base_p) = sample_on_grid(&gtc, grid)?;

    let mut state = base.clone();
    perturb(
        &mut state,
        &PerturbSpec {
            amplitude,
            seed,
            modes: 3,
        },
    )?;
    let perturbation_linf = {
        let mut m = 0.0f64;
        let each = |a: &Array3<f64>, b: &Array3<f64>, m: &mut f64| {
            for (x, y) in a.iter().zip(b.iter()) {
                *m = m.max((x - y).abs());
            }
        };
        each(&state.v_r, &base.v_r, &mut m);
        each(&state.v_theta, &base.v_theta, &mut m);
        each(&state.v_z, &base.v_z, &mut m);
        m
    };

    let thresholds = Thresholds::compute(config.viscosity, &config.annulus);
    let re_in = crate::annulus::reynolds(
        config.viscosity,
        &config.annulus,
        w1,
        crate::annulus::Wall::Inner,
    );
    let re_out = crate::annulus::reynolds(
        config.viscosity,
        &config.annulus,
        w2,
        crate::annulus::Wall::Outer,
    );
    let mut pressure = base_p.clone();
    let outcome = solve_steady(
        &mut state,
        &mut pressure,
        config.axial_gradient,
        config.viscosity,
        &config.options,
    );
    let (converged, iterations, final_residual) = match outcome {
        Ok(SolveOutcome {
            converged,
            iterations,
            final_residual,
            ..
        }) => (converged, iterations, final_residual),
        Err(Error::SingularJacobian) => (false, 0, f64::INFINITY),
        Err(e) => return Err(e),
    };
    let velocity_linf = state.max_abs();
    let within_hypothesis = velocity_linf < thresholds.c_star
        && re_in.abs().max(re_out.abs()) < thresholds.re_bound;

    let fit = fit_tc_manifold(&state, &pressure, config.viscosity, None)?;
    let h = grid.h_r.max(grid.h_z);
    let distance_tolerance = (5.0 * h * h * fit.velocity_scale).max(1e-8);

    let mut y_ladder = Vec::with_capacity(ladder.len());
    let mut y_max = 0.0f64;
    for &l in ladder {
        let rep = y_functional(&state, config.viscosity, l)?;
        y_max = y_max.max(rep.y);
        y_ladder.push((l, rep.y));
    }

    Ok(ExperimentRecord {
        omega_inner: w1,
        omega_outer: w2,
        amplitude,
        seed,
        reynolds_inner: re_in,
        reynolds_outer: re_out,
        thresholds,
        perturbation_linf,
        velocity_linf,
        within_hypothesis,
        converged,
        newton_iterations: iterations,
        final_residual,
        manifold_distance: fit.distance_linf,
        distance_tolerance,
        fitted_a: fit.axial_gradient,
        fitted_a_coef: fit.a_coef,
        fitted_b_coef: fit.b_coef,
        y_ladder,
        y_max,
    })
}
