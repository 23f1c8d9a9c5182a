//! Newton solver for the axisymmetric steady system on the staggered grid,
//! plus the solenoidal perturbation generator used by the sweeps.
//!
//! The discrete residual is a quadratic polynomial in the unknowns
//! (advection is bilinear, the centrifugal term quadratic, everything else
//! linear, and the wall ghosts are affine), so central differences with unit
//! step recover the exact Jacobian: [R(u + e) - R(u - e)] / 2 = J e. Columns
//! are probed in groups from a greedy distance-2 coloring of a conservative
//! sparsity superset, which keeps a full Jacobian at roughly a hundred
//! residual sweeps. The small-step finite-difference comparison stays a
//! separate code path so the two routes remain independent checks.

use crate::error::{Error, Result};
use crate::field::{Field, PressureField};
use crate::grid::Grid;
use crate::operators::residual_fields_impl;
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Flat layout of the unknowns: interior radial faces of v^r, then the
/// cell-centered v^theta, v^z and p blocks, each row-major in (i, j).
/// Residual rows use the same layout, with the continuity row of cell (0,0)
/// replaced by the pressure pin p(0,0) = 0 (that continuity equation is a
/// linear combination of the others by the discrete Gauss identity).
#[derive(Debug, Clone, Copy)]
pub(crate) struct StateMap {
    n_r: usize,
    n_z: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    VR,
    VT,
    VZ,
    P,
}

impl StateMap {
    fn new(grid: &Grid) -> Self {
        StateMap {
            n_r: grid.n_r,
            n_z: grid.n_z,
        }
    }

    fn n_vr(&self) -> usize {
        (self.n_r - 1) * self.n_z
    }

    fn n_center(&self) -> usize {
        self.n_r * self.n_z
    }

    fn n_unknowns(&self) -> usize {
        self.n_vr() + 3 * self.n_center()
    }

    fn vr(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n_z + j
    }

    fn vt(&self, i: usize, j: usize) -> usize {
        self.n_vr() + i * self.n_z + j
    }

    fn vz(&self, i: usize, j: usize) -> usize {
        self.n_vr() + self.n_center() + i * self.n_z + j
    }

    fn p(&self, i: usize, j: usize) -> usize {
        self.n_vr() + 2 * self.n_center() + i * self.n_z + j
    }

    fn n_momentum(&self) -> usize {
        self.n_vr() + 2 * self.n_center()
    }

    fn decode(&self, c: usize) -> (Var, usize, usize) {
        if c < self.n_vr() {
            (Var::VR, c / self.n_z + 1, c % self.n_z)
        } else {
            let c = c - self.n_vr();
            let var = [Var::VT, Var::VZ, Var::P][c / self.n_center()];
            let c = c % self.n_center();
            (var, c / self.n_z, c % self.n_z)
        }
    }

    fn pack(&self, field: &Field, pressure: &PressureField) -> Vec<f64> {
        let mut x = vec![0.0; self.n_unknowns()];
        for i in 1..self.n_r {
            for j in 0..self.n_z {
                x[self.vr(i, j)] = field.v_r[(0, i, j)];
            }
        }
        for i in 0..self.n_r {
            for j in 0..self.n_z {
                x[self.vt(i, j)] = field.v_theta[(0, i, j)];
                x[self.vz(i, j)] = field.v_z[(0, i, j)];
                x[self.p(i, j)] = pressure.p[(0, i, j)];
            }
        }
        x
    }

    fn unpack(&self, x: &[f64], field: &mut Field, pressure: &mut PressureField) {
        for i in 1..self.n_r {
            for j in 0..self.n_z {
                field.v_r[(0, i, j)] = x[self.vr(i, j)];
            }
        }
        for i in 0..self.n_r {
            for j in 0..self.n_z {
                field.v_theta[(0, i, j)] = x[self.vt(i, j)];
                field.v_z[(0, i, j)] = x[self.vz(i, j)];
                pressure.p[(0, i, j)] = x[self.p(i, j)];
            }
        }
    }

    /// Conservative superset of the residual rows an unknown can touch:
    /// every equation within two radial and one axial index. The exact-zero
    /// filter after probing drops the slack entries.
    fn rows_of_col(&self, c: usize) -> Vec<usize> {
        let (_, i0, j0) = self.decode(c);
        let mut rows = Vec::with_capacity(60);
        for di in -2i64..=2 {
            let i = i0 as i64 + di;
            if i < 0 {
                continue;
            }
            let i = i as usize;
            for dj in -1i64..=1 {
                let j = (j0 as i64 + dj).rem_euclid(self.n_z as i64) as usize;
                if i >= 1 && i <= self.n_r - 1 {
                    rows.push(self.vr(i, j));
                }
                if i < self.n_r {
                    rows.push(self.vt(i, j));
                    rows.push(self.vz(i, j));
                    rows.push(self.p(i, j));
                }
            }
        }
        rows
    }
}

/// Greedy distance-2 coloring: no residual row is reachable from two columns
/// of the same color, so one probe pair resolves a whole color class.
fn color_columns(map: &StateMap, rows_of: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = map.n_unknowns();
    let mut row_colors = vec![0u128; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for c in 0..n {
        let mut used: u128 = 0;
        for &row in &rows_of[c] {
            used |= row_colors[row];
        }
        let color = (!used).trailing_zeros() as usize;
        assert!(color < 128, "coloring exceeded 128 classes");
        if color == groups.len() {
            groups.push(Vec::new());
        }
        for &row in &rows_of[c] {
            row_colors[row] |= 1 << color;
        }
        groups[color].push(c);
    }
    groups
}

struct Workspace {
    field: Field,
    pressure: PressureField,
    map: StateMap,
    axial_gradient: f64,
    nu: f64,
    advection: bool,
}

impl Workspace {
    fn residual(&mut self, x: &[f64], out: &mut [f64]) {
        self.map.unpack(x, &mut self.field, &mut self.pressure);
        let rf = residual_fields_impl(
            &self.field,
            &self.pressure,
            self.axial_gradient,
            self.nu,
            self.advection,
        );
        let m = self.map;
        for i in 1..m.n_r {
            for j in 0..m.n_z {
                out[m.vr(i, j)] = rf.r_mom[(0, i, j)];
            }
        }
        for i in 0..m.n_r {
            for j in 0..m.n_z {
                out[m.vt(i, j)] = rf.theta_mom[(0, i, j)];
                out[m.vz(i, j)] = rf.z_mom[(0, i, j)];
                out[m.p(i, j)] = rf.div[(0, i, j)];
            }
        }
        // gauge pin replaces the redundant continuity row
        out[m.p(0, 0)] = x[m.p(0, 0)];
    }

    fn divergence_linf(&mut self, x: &[f64]) -> f64 {
        self.map.unpack(x, &mut self.field, &mut self.pressure);
        crate::operators::divergence(&self.field)
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Exact Jacobian entries at `x` by colored unit-step central probes.
/// `ptc_diag` is added to the diagonal of the momentum rows. Each (row, col)
/// pair appears at most once; exact zeros from the sparsity slack are
/// dropped.
fn assemble_triplets(
    ws: &mut Workspace,
    x: &[f64],
    rows_of: &[Vec<usize>],
    groups: &[Vec<usize>],
    ptc_diag: f64,
) -> Vec<(usize, usize, f64)> {
    let n = ws.map.n_unknowns();
    let n_mom = ws.map.n_momentum();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(n * 16);
    let mut xp = vec![0.0; n];
    let mut xm = vec![0.0; n];
    let mut rp = vec![0.0; n];
    let mut rm = vec![0.0; n];
    for group in groups {
        xp.copy_from_slice(x);
        xm.copy_from_slice(x);
        for &c in group {
            xp[c] += 1.0;
            xm[c] -= 1.0;
        }
        ws.residual(&xp, &mut rp);
        ws.residual(&xm, &mut rm);
        for &c in group {
            for &row in &rows_of[c] {
                let mut val = 0.5 * (rp[row] - rm[row]);
                if row == c && row < n_mom {
                    val += ptc_diag;
                }
                if val != 0.0 {
                    triplets.push((row, c, val));
                }
            }
        }
    }
    triplets
}

fn assemble_jacobian(
    ws: &mut Workspace,
    x: &[f64],
    rows_of: &[Vec<usize>],
    groups: &[Vec<usize>],
    ptc_diag: f64,
) -> SparseColMat<usize, f64> {
    let n = ws.map.n_unknowns();
    let triplets: Vec<Triplet<usize, usize, f64>> = assemble_triplets(ws, x, rows_of, groups, ptc_diag)
        .into_iter()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    SparseColMat::try_new_from_triplets(n, n, &triplets).expect("valid triplet indices")
}

fn lu_solve(mat: &SparseColMat<usize, f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = mat.sp_lu().map_err(|_| Error::SingularJacobian)?;
    let n = rhs.len();
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let sol = lu.solve(&b);
    let out: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularJacobian);
    }
    Ok(out)
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// absolute L-infinity target for the full residual vector
    pub tolerance: f64,
    /// drop advection and centrifugal terms; the system becomes linear and
    /// one Newton step is exact
    pub stokes_only: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: 50,
            tolerance: 1e-10,
            stokes_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub residual_linf: f64,
    pub divergence_linf: f64,
    /// pseudo-time step; infinite once the iteration is pure Newton
    pub dt: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolveOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_divergence: f64,
    pub history: Vec<IterationStats>,
}

/// Per-iteration convergence history, 17-significant-digit floats.
pub fn write_history_csv<W: std::io::Write>(history: &[IterationStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "residual_linf", "divergence_linf", "dt"])?;
    for s in history {
        w.write_record([
            s.iteration.to_string(),
            format!("{:.16e}", s.residual_linf),
            format!("{:.16e}", s.divergence_linf),
            format!("{:.16e}", s.dt),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Drive the state to a root of the discrete steady system, in place.
/// Plain Newton steps while they reduce the residual; a step that fails to
/// is discarded and pseudo-transient continuation takes over, putting 1/dt
/// on the momentum diagonal with dt ramped back out as the residual falls,
/// until Newton can be trusted again. Returns Err(SingularJacobian) only
/// when the linear algebra breaks down; stagnation past `max_iterations`
/// is a normal Ok with converged = false.
pub fn solve_steady(
    field: &mut Field,
    pressure: &mut PressureField,
    axial_gradient: f64,
    nu: f64,
    options: &SolveOptions,
) -> Result<SolveOutcome> {
    field.check_shapes()?;
    let grid = field.grid;
    if !grid.is_axisymmetric() {
        return Err(Error::RequiresAxisymmetric);
    }
    if pressure.grid != grid {
        return Err(Error::GridMismatch);
    }
    if !(nu > 0.0) {
        return Err(Error::NonPositiveViscosity(nu));
    }

    let map = StateMap::new(&grid);
    let n = map.n_unknowns();
    let mut x = map.pack(field, pressure);
    // align the gauge with the pin before iterating
    let p00 = x[map.p(0, 0)];
    for i in 0..grid.n_r {
        for j in 0..grid.n_z {
            x[map.p(i, j)] -= p00;
        }
    }

    let mut ws = Workspace {
        field: {
            let mut f = Field::zeros(grid);
            f.wall_inner = field.wall_inner;
            f.wall_outer = field.wall_outer;
            f
        },
        pressure: PressureField::zeros(grid, pressure.axial_gradient),
        map,
        axial_gradient,
        nu,
        advection: !options.stokes_only,
    };

    let rows_of: Vec<Vec<usize>> = (0..n).map(|c| map.rows_of_col(c)).collect();
    let groups = color_columns(&map, &rows_of);

    let mut res = vec![0.0; n];
    ws.residual(&x, &mut res);
    let r0 = linf(&res);
    let mut history = vec![IterationStats {
        iteration: 0,
        residual_linf: r0,
        divergence_linf: ws.divergence_linf(&x),
        dt: f64::INFINITY,
    }];

    let mut converged = r0 <= options.tolerance;
    let mut r_prev = r0;
    let mut iterations = 0;
    // Newton first; pseudo-transient damping only engages after a step that
    // fails to reduce the residual, then ramps dt back out (SER) as it falls.
    let dt0 = 0.1 * grid.annulus.gap() * grid.annulus.gap() / nu;
    let mut dt = f64::INFINITY;
    let mut newton = true;
    let mut r_floor = r0;

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let pure = options.stokes_only || newton;
        let ptc_diag = if pure { 0.0 } else { 1.0 / dt };
        let jac = assemble_jacobian(&mut ws, &x, &rows_of, &groups, ptc_diag);
        let rhs: Vec<f64> = res.iter().map(|&r| -r).collect();
        let delta = lu_solve(&jac, &rhs)?;
        let x_trial: Vec<f64> = x.iter().zip(&delta).map(|(xi, di)| xi + di).collect();
        let mut res_trial = vec![0.0; n];
        ws.residual(&x_trial, &mut res_trial);
        let r = linf(&res_trial);

        let accept = r < r_prev || r <= options.tolerance || options.stokes_only;
        if !accept {
            // keep the old state; a non-finite trial lands here too
            if pure {
                newton = false;
                r_floor = r_prev;
                dt = dt0 * (r0 / r_prev).max(1.0);
            } else {
                dt *= 0.5;
            }
            history.push(IterationStats {
                iteration: iterations,
                residual_linf: r_prev,
                divergence_linf: ws.divergence_linf(&x),
                dt,
            });
            continue;
        }

        x = x_trial;
        res = res_trial;
        if !pure {
            dt = if r < r_prev {
                (dt * 2.0).max(dt0 * (r0 / r))
            } else {
                dt * 0.5
            };
            if r < 1e-3 * r_floor {
                newton = true;
            }
        }
        r_prev = r;
        history.push(IterationStats {
            iteration: iterations,
            residual_linf: r,
            divergence_linf: ws.divergence_linf(&x),
            dt: if pure { f64::INFINITY } else { dt },
        });
        converged = r <= options.tolerance;
    }

    map.unpack(&x, field, pressure);
    pressure.apply_mean_zero_gauge();
    let final_divergence = ws.divergence_linf(&x);
    Ok(SolveOutcome {
        converged,
        iterations,
        final_residual: r_prev,
        final_divergence,
        history,
    })
}

/// Independent small-step finite-difference probe of single Jacobian
/// columns, for cross-checking the assembled matrix. Deliberately not
/// reusing the unit-step path.
pub fn jacobian_fd_column(
    field: &Field,
    pressure: &PressureField,
    axial_gradient: f64,
    nu: f64,
    col: usize,
    eps: f64,
) -> Result<Vec<f64>> {
    field.check_shapes()?;
    let grid = field.grid;
    if !grid.is_axisymmetric() {
        return Err(Error::RequiresAxisymmetric);
    }
    let map = StateMap::new(&grid);
    let mut ws = Workspace {
        field: {
            let mut f = Field::zeros(grid);
            f.wall_inner = field.wall_inner;
            f.wall_outer = field.wall_outer;
            f
        },
        pressure: PressureField::zeros(grid, pressure.axial_gradient),
        map,
        axial_gradient,
        nu,
        advection: true,
    };
    let n = map.n_unknowns();
    let x = map.pack(field, pressure);
    let mut xp = x.clone();
    let mut xm = x;
    xp[col] += eps;
    xm[col] -= eps;
    let mut rp = vec![0.0; n];
    let mut rm = vec![0.0; n];
    ws.residual(&xp, &mut rp);
    ws.residual(&xm, &mut rm);
    Ok(rp
        .iter()
        .zip(&rm)
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect())
}

/// Dense column of the assembled (exact) Jacobian, same cross-check surface.
pub fn jacobian_column(
    field: &Field,
    pressure: &PressureField,
    axial_gradient: f64,
    nu: f64,
    col: usize,
) -> Result<Vec<f64>> {
    field.check_shapes()?;
    let grid = field.grid;
    if !grid.is_axisymmetric() {
        return Err(Error::RequiresAxisymmetric);
    }
    let map = StateMap::new(&grid);
    let mut ws = Workspace {
        field: {
            let mut f = Field::zeros(grid);
            f.wall_inner = field.wall_inner;
            f.wall_outer = field.wall_outer;
            f
        },
        pressure: PressureField::zeros(grid, pressure.axial_gradient),
        map,
        axial_gradient,
        nu,
        advection: true,
    };
    let n = map.n_unknowns();
    let rows_of: Vec<Vec<usize>> = (0..n).map(|c| map.rows_of_col(c)).collect();
    let groups = color_columns(&map, &rows_of);
    let x = map.pack(field, pressure);
    let triplets = assemble_triplets(&mut ws, &x, &rows_of, &groups, 0.0);
    let mut out = vec![0.0; n];
    for &(row, c, val) in &triplets {
        if c == col {
            out[row] = val;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct PerturbSpec {
    /// final sup-norm of the added deviation
    pub amplitude: f64,
    pub seed: u64,
    /// number of axial Fourier modes in the stream function
    pub modes: usize,
}

/// Superpose a deterministic, exactly solenoidal deviation: an axisymmetric
/// stream function psi = q(r) * (random axial harmonics) with
/// q = ((r-R1)(R2-r))^2 generates (v^r, v^z) through the discrete curl, so
/// the staggered divergence vanishes to rounding; an independent
/// wall-vanishing bump perturbs v^theta. The whole deviation is rescaled so
/// its sup-norm equals `amplitude` and wall data is untouched.
pub fn perturb(field: &mut Field, spec: &PerturbSpec) -> Result<()> {
    field.check_shapes()?;
    let g = field.grid;
    if !g.is_axisymmetric() {
        return Err(Error::RequiresAxisymmetric);
    }
    if !(spec.amplitude.is_finite() && spec.amplitude > 0.0) || spec.modes == 0 {
        return Err(Error::ShapeMismatch);
    }
    let (r1, r2) = (g.annulus.r_inner, g.annulus.r_outer);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coeff = Vec::with_capacity(spec.modes);
    for _ in 0..spec.modes {
        let c: f64 = rng.random_range(-1.0..1.0);
        let s: f64 = rng.random_range(-1.0..1.0);
        let ct: f64 = rng.random_range(-1.0..1.0);
        let st: f64 = rng.random_range(-1.0..1.0);
        coeff.push((c, s, ct, st));
    }

    let q = |r: f64| {
        let b = (r - r1) * (r2 - r);
        b * b
    };
    let harmonics = |z: f64, pick: fn(&(f64, f64, f64, f64)) -> (f64, f64)| {
        let mut sum = 0.0;
        for (m, cs) in coeff.iter().enumerate() {
            let kz = 2.0 * std::f64::consts::PI * (m + 1) as f64 / g.z_period;
            let (c, s) = pick(cs);
            sum += c * (kz * z).cos() + s * (kz * z).sin();
        }
        sum
    };

    // stream function at the (r-face, z-face) nodes
    let mut psi = vec![vec![0.0; g.n_z]; g.n_r + 1];
    for (i, row) in psi.iter_mut().enumerate() {
        let qr = q(g.r_face(i));
        for (j, v) in row.iter_mut().enumerate() {
            *v = qr * harmonics(g.z_face(j), |t| (t.0, t.1));
        }
    }

    let mut dvr = vec![vec![0.0; g.n_z]; g.n_r + 1];
    let mut dvz = vec![vec![0.0; g.n_z]; g.n_r];
    let mut dvt = vec![vec![0.0; g.n_z]; g.n_r];
    for i in 1..g.n_r {
        let rf = g.r_face(i);
        for j in 0..g.n_z {
            dvr[i][j] = (psi[i][g.jp(j)] - psi[i][j]) / (g.h_z * rf);
        }
    }
    for i in 0..g.n_r {
        let rc = g.r_center(i);
        let bump = (g.r_center(i) - r1) * (r2 - g.r_center(i));
        for j in 0..g.n_z {
            dvz[i][j] = -(psi[i + 1][j] - psi[i][j]) / (g.h_r * rc);
            dvt[i][j] = bump * harmonics(g.z_center(j), |t| (t.2, t.3));
        }
    }

    let mut sup = 0.0f64;
    for row in dvr.iter().chain(dvz.iter()).chain(dvt.iter()) {
        for &v in row {
            sup = sup.max(v.abs());
        }
    }
    if sup == 0.0 {
        return Err(Error::ShapeMismatch);
    }
    let scale = spec.amplitude / sup;
    for i in 1..g.n_r {
        for j in 0..g.n_z {
            field.v_r[(0, i, j)] += scale * dvr[i][j];
        }
    }
    for i in 0..g.n_r {
        for j in 0..g.n_z {
            field.v_z[(0, i, j)] += scale * dvz[i][j];
            field.v_theta[(0, i, j)] += scale * dvt[i][j];
        }
    }
    Ok(())
}
