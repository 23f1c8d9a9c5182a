//! End-to-end acceptance checks, one test per claim, each printing a single
//! PASS/FAIL line (visible with --nocapture). Grids are desk-scale; the whole
//! target runs in well under five minutes.

use couette_core::annulus::{
    non_dimensional, poincare_constant, reynolds_bound, threshold_c1, threshold_c2, Annulus,
    FlowConfig, Thresholds,
};
use couette_core::exact::{
    eval_vtheta, eval_vz, sample_on_grid, tc_coefficients, tc_coefficients_ratio_form,
    GeneralizedTC,
};
use couette_core::{lab, operators, solver};
use couette_core::{Grid, PerturbSpec, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;

macro_rules! ensure {
    ($cond:expr, $($t:tt)+) => {
        if !$cond {
            return Err(format!($($t)+));
        }
    };
}

fn check(name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("acceptance: {name}: PASS"),
        Err(msg) => {
            println!("acceptance: {name}: FAIL ({msg})");
            panic!("{name}: {msg}");
        }
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

/// Least-squares slope of log err vs log h.
fn fit_order(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[test]
fn closed_form_identities() {
    check("closed-form identity suite", || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for case in 0..100 {
            let r1 = rng.random_range(0.3..3.0);
            let r2 = r1 + rng.random_range(0.2..3.0);
            let annulus = Annulus::new(r1, r2).map_err(|e| e.to_string())?;
            // keep omega_inner away from 0 so mu exists; the 0 branch is
            // exercised separately below
            let w1 = rng.random_range(0.1..2.0) * if case % 2 == 0 { 1.0 } else { -1.0 };
            let w2 = rng.random_range(-2.0..2.0);
            let flow = FlowConfig::new(1.0, w1, w2).map_err(|e| e.to_string())?;

            let direct = tc_coefficients(&annulus, &flow);
            let ratio = tc_coefficients_ratio_form(&non_dimensional(&annulus, &flow), &flow, &annulus);
            ensure!(
                rel(ratio.a_coef, direct.a_coef) < 1e-12 && rel(ratio.b_coef, direct.b_coef) < 1e-12,
                "coefficient forms disagree at case {case}: {direct:?} vs {ratio:?}"
            );

            let a = rng.random_range(-2.0..2.0);
            let gtc = GeneralizedTC::from_boundary(annulus, &flow, a).map_err(|e| e.to_string())?;
            let r = rng.random_range(r1..r2);
            let proof = gtc.vz_profile(r);
            let theorem = gtc.vz_profile_ratio_form(r);
            ensure!(
                (proof - theorem).abs() <= 1e-12 * proof.abs().max(a.abs() * r2 * r2),
                "axial profile forms disagree at case {case}: {proof} vs {theorem}"
            );

            // wall conditions
            let vt1 = eval_vtheta(&gtc, r1).map_err(|e| e.to_string())?;
            let vt2 = eval_vtheta(&gtc, r2).map_err(|e| e.to_string())?;
            let speed = (r1 * w1).abs().max((r2 * w2).abs()).max(1.0);
            ensure!(
                (vt1 - r1 * w1).abs() < 1e-12 * speed && (vt2 - r2 * w2).abs() < 1e-12 * speed,
                "azimuthal wall condition violated at case {case}"
            );
            let vz_scale = (a.abs() * r2 * r2).max(1.0);
            for wall in [r1, r2] {
                let vz = eval_vz(&gtc, wall).map_err(|e| e.to_string())?;
                ensure!(vz.abs() < 1e-12 * vz_scale, "axial wall condition violated at {wall}");
            }
        }
        // the structural branch: inner wall at rest
        let annulus = Annulus::new(1.0, 2.0).unwrap();
        let flow = FlowConfig::new(1.0, 0.0, 0.7).unwrap();
        let direct = tc_coefficients(&annulus, &flow);
        let branch = tc_coefficients_ratio_form(&non_dimensional(&annulus, &flow), &flow, &annulus);
        ensure!(
            rel(branch.a_coef, direct.a_coef) < 1e-12 && rel(branch.b_coef, direct.b_coef) < 1e-12,
            "resting-inner-wall branch disagrees"
        );
        Ok(())
    });
}

#[test]
fn threshold_values() {
    check("threshold values and identities", || {
        let annulus = Annulus::new(1.0, 2.0).unwrap();
        let t = Thresholds::compute(1.0, &annulus);
        // independent arithmetic for (nu, R1, R2) = (1, 1, 2)
        ensure!(rel(t.c_p, 2.0 / (PI * PI)) < 1e-10, "c_p = {}", t.c_p);
        ensure!(rel(t.c1, PI / (2.0 * 2.0f64.sqrt())) < 1e-10, "c1 = {}", t.c1);
        ensure!(rel(t.c2, 0.77190215521208043) < 1e-10, "c2 = {}", t.c2);
        ensure!(rel(t.re_bound, PI / (2.0 * 2.0f64.sqrt())) < 1e-10, "re_bound = {}", t.re_bound);
        ensure!(
            t.c_star == t.c1.min(t.c2),
            "c_star is not the bitwise min of c1, c2"
        );

        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..100 {
            let r1 = rng.random_range(0.3..3.0);
            let r2 = r1 + rng.random_range(0.2..3.0);
            let annulus = Annulus::new(r1, r2).unwrap();
            let nu = rng.random_range(0.05..5.0);
            let lambda = rng.random_range(0.1..10.0);
            // degree-1 homogeneity in viscosity
            ensure!(
                rel(threshold_c1(lambda * nu, &annulus), lambda * threshold_c1(nu, &annulus)) < 1e-14,
                "c1 homogeneity fails"
            );
            ensure!(
                rel(threshold_c2(lambda * nu, &annulus), lambda * threshold_c2(nu, &annulus)) < 1e-14,
                "c2 homogeneity fails"
            );
            // Reynolds bound is the gap-scaled c1 and independent of nu
            ensure!(
                rel(reynolds_bound(&annulus), annulus.gap() / nu * threshold_c1(nu, &annulus)) < 1e-14,
                "re_bound / c1 consistency fails"
            );
        }
        Ok(())
    });
}

#[test]
fn residual_convergence_order() {
    check("residual convergence order", || {
        let annulus = Annulus::new(1.0, 2.0).unwrap();
        let flow = FlowConfig::new(1.0, 1.0, 0.0).unwrap();
        let gtc = GeneralizedTC::from_boundary(annulus, &flow, 0.5).unwrap();
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let grid = Grid::build(annulus, n, n, 2.0, None).unwrap();
            let (f, p) = sample_on_grid(&gtc, &grid).map_err(|e| e.to_string())?;
            let rep = operators::momentum_residual_axisym(&f, &p, 0.5, 1.0)
                .map_err(|e| e.to_string())?;
            hs.push(grid.h_r);
            errs.push(rep.max_linf());
        }
        let order = fit_order(&hs, &errs);
        ensure!(order >= 1.9, "fitted order {order:.3}, residuals {errs:?}");

        // the general evaluator on theta-constant data reproduces the
        // axisymmetric report to 1e-14
        let grid = Grid::build(annulus, 32, 32, 2.0, None).unwrap();
        let grid_t = Grid::build(annulus, 32, 32, 2.0, Some(8)).unwrap();
        let (f, p) = sample_on_grid(&gtc, &grid).unwrap();
        let (ft, pt) = sample_on_grid(&gtc, &grid_t).unwrap();
        let axi = operators::momentum_residual_axisym(&f, &p, 0.5, 1.0).unwrap();
        let gen = operators::momentum_residual_general(&ft, &pt, 1.0).map_err(|e| e.to_string())?;
        for (name, a, b) in [
            ("radial linf", axi.radial.linf, gen.radial.linf),
            ("radial l2", axi.radial.l2, gen.radial.l2),
            ("azimuthal linf", axi.azimuthal.linf, gen.azimuthal.linf),
            ("azimuthal l2", axi.azimuthal.l2, gen.azimuthal.l2),
            ("axial linf", axi.axial.linf, gen.axial.linf),
            ("axial l2", axi.axial.l2, gen.axial.l2),
            ("continuity linf", axi.continuity.linf, gen.continuity.linf),
            ("continuity l2", axi.continuity.l2, gen.continuity.l2),
        ] {
            ensure!((a - b).abs() <= 1e-14, "{name}: axisym {a} vs general {b}");
        }
        Ok(())
    });
}

#[test]
fn poincare_inequality_suite() {
    check("weighted Poincare inequality", || {
        let annulus = Annulus::new(1.0, 2.0).unwrap();
        let grid = Grid::build(annulus, 64, 64, 4.0, None).unwrap();
        let faces = grid.r_faces();

        let fundamental: Vec<f64> = faces.iter().map(|&r| (PI * (r - 1.0)).sin()).collect();
        let rep = operators::poincare_check(&fundamental, None, &grid, 2.0)
            .map_err(|e| e.to_string())?;
        let ratio = rep.ratio().ok_or("degenerate fundamental mode")?;
        ensure!((ratio - 1.0 / PI).abs() < 1e-3, "fundamental ratio {ratio}");
        let sqrt_cp = poincare_constant(&annulus).sqrt();
        ensure!(rel(sqrt_cp, 0.45015815807855303) < 1e-12, "sqrt(C_P) = {sqrt_cp}");
        ensure!(ratio <= sqrt_cp, "fundamental ratio {ratio} above {sqrt_cp}");

        let mut rng = ChaCha8Rng::seed_from_u64(303);
        for s in 0..50 {
            let coef: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let profile: Vec<f64> = faces
                .iter()
                .map(|&r| {
                    let s01 = r - 1.0;
                    let mix: f64 = coef
                        .iter()
                        .enumerate()
                        .map(|(m, c)| c * ((m + 1) as f64 * PI * s01).sin())
                        .sum();
                    (r - 1.0) * (2.0 - r) * (1.0 + 0.5 * mix)
                })
                .collect();
            let base = rng.random_range(0.5..1.5);
            let (c, d) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
            let axial: Vec<f64> = (0..grid.n_z)
                .map(|j| {
                    let z = 2.0 * PI * (j as f64 + 0.5) / grid.n_z as f64;
                    base + c * z.cos() + d * z.sin()
                })
                .collect();
            let rep = operators::poincare_check(&profile, Some(&axial), &grid, 2.0)
                .map_err(|e| e.to_string())?;
            ensure!(
                rep.within_bound(),
                "random profile {s}: ratio {:?} above bound {}",
                rep.ratio(),
                rep.bound_with_margin
            );
        }
        Ok(())
    });
}

#[test]
fn jacobian_matches_finite_differences() {
    check("Jacobian vs finite differences", || {
        let annulus = Annulus::new(1.0, 2.0).unwrap();
        let grid = Grid::build(annulus, 8, 8, 2.0, None).unwrap();
        let n_unknowns = (4 * grid.n_r - 1) * grid.n_z;
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for state in 0..20 {
            let w1 = rng.random_range(-1.0..1.0);
            let w2 = rng.random_range(-1.0..1.0);
            let a = rng.random_range(-0.5..0.5);
            let flow = FlowConfig::new(1.0, w1, w2).unwrap();
            let gtc = GeneralizedTC::from_boundary(annulus, &flow, a).unwrap();
            let (mut field, pressure) = sample_on_grid(&gtc, &grid).unwrap();
            solver::perturb(
                &mut field,
                &PerturbSpec {
                    amplitude: rng.random_range(0.02..0.3),
                    seed: 1000 + state,
                    modes: 2,
                },
            )
            .unwrap();
            let scale = field.max_abs().max(1.0);
            let eps = 1e-7 * scale;
            for _ in 0..5 {
                let col = rng.random_range(0..n_unknowns);
                let assembled = solver::jacobian_column(&field, &pressure, a, 1.0, col)
                    .map_err(|e| e.to_string())?;
                let fd = solver::jacobian_fd_column(&field, &pressure, a, 1.0, col, eps)
                    .map_err(|e| e.to_string())?;
                let denom = fd.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                let diff = assembled
                    .iter()
                    .zip(&fd)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                ensure!(
                    diff <= 1e-6 * denom.max(1e-12),
                    "state {state} column {col}: |J - FD| = {diff:.3e} vs scale {denom:.3e}"
                );
            }
        }
        Ok(())
    });
}

/// The below-threshold experiment shared by the uniqueness and determinism
/// criteria: annulus (1,2), nu 1, walls (0.3, 0.1), 64x64 cells on an axial
/// period of 4, perturbation amplitude 0.1, five seeds.
fn below_threshold_sweep() -> lab::SweepSummary {
    let config = lab::SweepConfig {
        annulus: Annulus::new(1.0, 2.0).unwrap(),
        viscosity: 1.0,
        omega_pairs: vec![(0.3, 0.1)],
        amplitudes: vec![0.1],
        seeds: vec![1, 2, 3, 4, 5],
        n_r: 64,
        n_z: 64,
        z_period: 4.0,
        axial_gradient: 0.0,
        options: SolveOptions::default(),
    };
    lab::sweep_reynolds(&config).expect("sweep runs")
}

fn first_sweep() -> &'static lab::SweepSummary {
    static FIRST: OnceLock<lab::SweepSummary> = OnceLock::new();
    FIRST.get_or_init(below_threshold_sweep)
}

#[test]
fn perturbed_below_threshold_runs_return_to_manifold() {
    check("below-threshold uniqueness experiment", || {
        let summary = first_sweep();
        ensure!(summary.records.len() == 5, "expected 5 runs");
        ensure!(summary.ladder == vec![1.25, 1.5, 1.75, 2.0], "ladder {:?}", summary.ladder);
        let h = 4.0 / 64.0; // max(h_r, h_z)
        for rec in &summary.records {
            ensure!(rec.converged, "seed {} did not converge", rec.seed);
            ensure!(
                rel(rec.reynolds_inner, 0.3) < 1e-12 && rel(rec.reynolds_outer, 0.2) < 1e-12,
                "Reynolds numbers off: {} {}",
                rec.reynolds_inner,
                rec.reynolds_outer
            );
            ensure!(rec.within_hypothesis, "seed {} left the hypothesis set", rec.seed);
            let tol = (5.0 * h * h * rec.velocity_linf).max(1e-8);
            ensure!(
                rec.manifold_distance <= tol,
                "seed {}: distance {} above {}",
                rec.seed,
                rec.manifold_distance,
                tol
            );
            ensure!(
                rec.fitted_a.abs() <= 1e-10,
                "seed {}: fitted axial gradient {}",
                rec.seed,
                rec.fitted_a
            );
            let y_tol = 1e-10 * rec.velocity_linf;
            for &(l, y) in &rec.y_ladder {
                ensure!(y <= y_tol, "seed {}: Y({l}) = {y} above {y_tol}", rec.seed);
            }
        }
        Ok(())
    });
}

#[test]
fn axial_gradient_drives_generalized_flow() {
    check("imposed axial gradient reaches the generalized flow", || {
        let annulus = Annulus::new(1.0, 2.0).unwrap();
        let grid = Grid::build(annulus, 64, 64, 4.0, None).unwrap();
        let flow = FlowConfig::new(1.0, 0.3, 0.1).unwrap();
        let gtc = GeneralizedTC::from_boundary(annulus, &flow, 0.5).unwrap();
        let (mut field, mut pressure) = sample_on_grid(&gtc, &grid).unwrap();
        solver::perturb(
            &mut field,
            &PerturbSpec {
                amplitude: 0.1,
                seed: 1,
                modes: 3,
            },
        )
        .unwrap();
        let out = solver::solve_steady(&mut field, &mut pressure, 0.5, 1.0, &SolveOptions::default())
            .map_err(|e| e.to_string())?;
        ensure!(out.converged, "solve stalled: {:?}", out.history.last());

        // the axial component is genuinely active and matches the closed form
        let mut vz_max = 0.0f64;
        let mut vz_err = 0.0f64;
        for i in 0..grid.n_r {
            let want = eval_vz(&gtc, grid.r_center(i)).unwrap();
            for j in 0..grid.n_z {
                let got = field.v_z[(0, i, j)];
                vz_max = vz_max.max(got.abs());
                vz_err = vz_err.max((got - want).abs());
            }
        }
        let h = grid.h_r.max(grid.h_z);
        let scale = field.max_abs();
        ensure!(vz_max > 0.05, "axial flow never developed: max |v_z| = {vz_max}");
        ensure!(
            vz_err <= 5.0 * h * h * scale,
            "v_z off closed form by {vz_err} (allowance {})",
            5.0 * h * h * scale
        );

        let fit = lab::fit_tc_manifold(&field, &pressure, 1.0, Some(0.5)).map_err(|e| e.to_string())?;
        ensure!(
            fit.distance_linf <= (5.0 * h * h * fit.velocity_scale).max(1e-8),
            "manifold distance {}",
            fit.distance_linf
        );
        let free = lab::fit_tc_manifold(&field, &pressure, 1.0, None).map_err(|e| e.to_string())?;
        ensure!(
            (free.axial_gradient - 0.5).abs() < 0.01,
            "freely fitted axial gradient {}",
            free.axial_gradient
        );
        Ok(())
    });
}

#[test]
fn stokes_mode_recovers_closed_form() {
    check("Stokes mode one-step recovery", || {
        let annulus = Annulus::new(1.0, 2.0).unwrap();
        let opts = SolveOptions {
            stokes_only: true,
            ..SolveOptions::default()
        };
        let cases = [(0.4, -0.2, 1.0), (0.0, 0.0, 2.0), (1.0, 0.5, 0.0)];
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let grid = Grid::build(annulus, n, n, 2.0, None).unwrap();
            for (case, &(w1, w2, a)) in cases.iter().enumerate() {
                let flow = FlowConfig::new(1.0, w1, w2).unwrap();
                let gtc = GeneralizedTC::from_boundary(annulus, &flow, a).unwrap();
                let (reference, _) = sample_on_grid(&gtc, &grid).unwrap();
                let (mut field, mut pressure) = sample_on_grid(&gtc, &grid).unwrap();
                let out = solver::solve_steady(&mut field, &mut pressure, a, 1.0, &opts)
                    .map_err(|e| e.to_string())?;
                ensure!(out.converged, "case {case} at n={n} stalled");
                ensure!(
                    out.iterations <= 1,
                    "case {case} at n={n} took {} steps of a linear problem",
                    out.iterations
                );
                if case == 0 {
                    let mut gap = 0.0f64;
                    for (arr, ref_arr) in [
                        (&field.v_r, &reference.v_r),
                        (&field.v_theta, &reference.v_theta),
                        (&field.v_z, &reference.v_z),
                    ] {
                        for (x, y) in arr.iter().zip(ref_arr.iter()) {
                            gap = gap.max((x - y).abs());
                        }
                    }
                    errs.push(gap);
                }
            }
        }
        ensure!(
            errs[0] / errs[1] > 3.4,
            "velocity gap halved from {} to {} — not second order",
            errs[0],
            errs[1]
        );
        Ok(())
    });
}

#[test]
fn repeated_sweep_is_byte_identical() {
    check("determinism of repeated sweeps", || {
        let first = first_sweep();
        let second = below_threshold_sweep();
        let csv_of = |s: &lab::SweepSummary| {
            let mut records = Vec::new();
            lab::write_records_csv(&s.records, &mut records).unwrap();
            let mut ladder = Vec::new();
            lab::write_ladder_csv(&s.records, &mut ladder).unwrap();
            (records, ladder)
        };
        let (rec1, lad1) = csv_of(first);
        let (rec2, lad2) = csv_of(&second);
        ensure!(rec1 == rec2, "records.csv differs between identical sweeps");
        ensure!(lad1 == lad2, "ladder.csv differs between identical sweeps");
        ensure!(!rec1.is_empty() && !lad1.is_empty(), "exports were empty");
        Ok(())
    });
}
