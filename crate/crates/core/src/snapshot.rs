//! On-disk state format: a directory holding metadata.json plus one CSV per
//! component. Values are written with 17 significant digits, so a write/read
//! cycle reproduces every f64 bit for bit.

use crate::error::{Error, Result};
use crate::field::{Field, PressureField};
use crate::grid::Grid;
use ndarray::Array3;
use std::path::Path;

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct SnapshotMeta {
    r_inner: f64,
    r_outer: f64,
    n_r: usize,
    n_z: usize,
    n_theta: Option<usize>,
    z_period: f64,
    axial_gradient: f64,
    wall_inner: f64,
    wall_outer: f64,
}

const COMPONENTS: [&str; 4] = ["v_r.csv", "v_theta.csv", "v_z.csv", "p.csv"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_component(
    path: &Path,
    arr: &Array3<f64>,
    grid: &Grid,
    radial_face: bool,
    axial_face: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let theta_resolved = !grid.is_axisymmetric();
    if theta_resolved {
        w.write_record(["k", "i", "j", "theta", "r", "z", "value"])?;
    } else {
        w.write_record(["i", "j", "r", "z", "value"])?;
    }
    let (nk, ni, nj) = arr.dim();
    for k in 0..nk {
        for i in 0..ni {
            let r = if radial_face {
                grid.r_face(i)
            } else {
                grid.r_center(i)
            };
            for j in 0..nj {
                let z = if axial_face {
                    grid.z_face(j)
                } else {
                    grid.z_center(j)
                };
                if theta_resolved {
                    w.write_record([
                        k.to_string(),
                        i.to_string(),
                        j.to_string(),
                        fmt(grid.theta(k)),
                        fmt(r),
                        fmt(z),
                        fmt(arr[(k, i, j)]),
                    ])?;
                } else {
                    w.write_record([
                        i.to_string(),
                        j.to_string(),
                        fmt(r),
                        fmt(z),
                        fmt(arr[(k, i, j)]),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_component(path: &Path, arr: &mut Array3<f64>, theta_resolved: bool) -> Result<()> {
    if !path.exists() {
        return Err(Error::SnapshotMissing(path.display().to_string()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let (nk, ni, nj) = arr.dim();
    let mut seen = vec![false; nk * ni * nj];
    for record in r.records() {
        let record = record?;
        let bad = |what: &str| Error::SnapshotFormat(format!("{}: {what}", path.display()));
        let get_idx = |pos: usize| -> Result<usize> {
            record
                .get(pos)
                .ok_or_else(|| bad("missing column"))?
                .parse()
                .map_err(|_| bad("bad index"))
        };
        let (k, i, j, vpos) = if theta_resolved {
            (get_idx(0)?, get_idx(1)?, get_idx(2)?, 6)
        } else {
            (0, get_idx(0)?, get_idx(1)?, 4)
        };
        if k >= nk || i >= ni || j >= nj {
            return Err(bad("index out of range"));
        }
        let v: f64 = record
            .get(vpos)
            .ok_or_else(|| bad("missing value"))?
            .parse()
            .map_err(|_| bad("bad value"))?;
        arr[(k, i, j)] = v;
        seen[(k * ni + i) * nj + j] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::SnapshotFormat(format!(
            "{}: incomplete component",
            path.display()
        )));
    }
    Ok(())
}

pub fn write_snapshot(dir: &Path, field: &Field, pressure: &PressureField) -> Result<()> {
    field.check_shapes()?;
    if pressure.grid != field.grid {
        return Err(Error::GridMismatch);
    }
    std::fs::create_dir_all(dir)?;
    let g = field.grid;
    let meta = SnapshotMeta {
        r_inner: g.annulus.r_inner,
        r_outer: g.annulus.r_outer,
        n_r: g.n_r,
        n_z: g.n_z,
        n_theta: g.n_theta,
        z_period: g.z_period,
        axial_gradient: pressure.axial_gradient,
        wall_inner: field.wall_inner,
        wall_outer: field.wall_outer,
    };
    std::fs::write(
        dir.join("metadata.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    write_component(&dir.join(COMPONENTS[0]), &field.v_r, &g, true, false)?;
    write_component(&dir.join(COMPONENTS[1]), &field.v_theta, &g, false, false)?;
    write_component(&dir.join(COMPONENTS[2]), &field.v_z, &g, false, true)?;
    write_component(&dir.join(COMPONENTS[3]), &pressure.p, &g, false, false)?;
    Ok(())
}

pub fn read_snapshot(dir: &Path) -> Result<(Field, PressureField)> {
    let meta_path = dir.join("metadata.json");
    if !meta_path.exists() {
        return Err(Error::SnapshotMissing(meta_path.display().to_string()));
    }
    let meta: SnapshotMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
    let annulus = crate::annulus::Annulus::new(meta.r_inner, meta.r_outer)?;
    let grid = Grid::build(annulus, meta.n_r, meta.n_z, meta.z_period, meta.n_theta)?;
    let mut field = Field::zeros(grid);
    field.wall_inner = meta.wall_inner;
    field.wall_outer = meta.wall_outer;
    let mut pressure = PressureField::zeros(grid, meta.axial_gradient);
    let theta = !grid.is_axisymmetric();
    read_component(&dir.join(COMPONENTS[0]), &mut field.v_r, theta)?;
    read_component(&dir.join(COMPONENTS[1]), &mut field.v_theta, theta)?;
    read_component(&dir.join(COMPONENTS[2]), &mut field.v_z, theta)?;
    read_component(&dir.join(COMPONENTS[3]), &mut pressure.p, theta)?;
    Ok((field, pressure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::Annulus;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_state(grid: Grid, seed: u64) -> (Field, PressureField) {
        let mut f = Field::zeros(grid);
        let mut p = PressureField::zeros(grid, 0.625);
        let mut rng = StdRng::seed_from_u64(seed);
        for v in f.v_r.iter_mut().skip(grid.n_z) {
            *v = rng.random_range(-1.0..1.0) * 1e-3;
        }
        // walls back to zero
        for k in 0..grid.k_dim() {
            for j in 0..grid.n_z {
                f.v_r[(k, 0, j)] = 0.0;
                f.v_r[(k, grid.n_r, j)] = 0.0;
            }
        }
        for v in f.v_theta.iter_mut() {
            *v = rng.random_range(-1.0..1.0) / 3.0;
        }
        for v in f.v_z.iter_mut() {
            *v = rng.random_range(-1e-12..1e-12);
        }
        for v in p.p.iter_mut() {
            *v = rng.random_range(-1e3..1e3);
        }
        f.wall_inner = 1.0 / 3.0;
        f.wall_outer = -2.0 / 7.0;
        (f, p)
    }

    fn bits(a: &ndarray::Array3<f64>) -> Vec<u64> {
        a.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::build(Annulus::new(1.0, 2.0).unwrap(), 6, 4, 2.0, None).unwrap();
        let (mut f, p) = random_state(grid, 9);
        f.v_z[(0, 0, 0)] = -0.0;
        f.v_z[(0, 1, 0)] = 1e-308;
        f.v_z[(0, 2, 0)] = std::f64::consts::PI;
        write_snapshot(dir.path(), &f, &p).unwrap();
        let (f2, p2) = read_snapshot(dir.path()).unwrap();
        assert_eq!(bits(&f.v_r), bits(&f2.v_r));
        assert_eq!(bits(&f.v_theta), bits(&f2.v_theta));
        assert_eq!(bits(&f.v_z), bits(&f2.v_z));
        assert_eq!(bits(&p.p), bits(&p2.p));
        assert_eq!(f.wall_inner.to_bits(), f2.wall_inner.to_bits());
        assert_eq!(p.axial_gradient.to_bits(), p2.axial_gradient.to_bits());
        assert_eq!(f2.grid, grid);
    }

    #[test]
    fn round_trip_theta_resolved() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::build(Annulus::new(0.5, 4.0).unwrap(), 4, 4, 1.0, Some(6)).unwrap();
        let (f, p) = random_state(grid, 10);
        write_snapshot(dir.path(), &f, &p).unwrap();
        let (f2, p2) = read_snapshot(dir.path()).unwrap();
        assert_eq!(bits(&f.v_theta), bits(&f2.v_theta));
        assert_eq!(bits(&p.p), bits(&p2.p));
    }

    #[test]
    fn missing_and_malformed_inputs_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_snapshot(dir.path()),
            Err(Error::SnapshotMissing(_))
        ));
        let grid = Grid::build(Annulus::new(1.0, 2.0).unwrap(), 4, 4, 2.0, None).unwrap();
        let (f, p) = random_state(grid, 11);
        write_snapshot(dir.path(), &f, &p).unwrap();
        std::fs::remove_file(dir.path().join("v_z.csv")).unwrap();
        assert!(matches!(
            read_snapshot(dir.path()),
            Err(Error::SnapshotMissing(_))
        ));
        // restore v_z but truncate v_theta: the reader must notice the hole
        std::fs::write(
            dir.path().join("v_z.csv"),
            "i,j,r,z,value\n0,0,1.0,0.0,nope\n",
        )
        .unwrap();
        let vt = dir.path().join("v_theta.csv");
        let text = std::fs::read_to_string(&vt).unwrap();
        let head: Vec<&str> = text.lines().take(3).collect();
        std::fs::write(&vt, head.join("\n")).unwrap();
        assert!(matches!(
            read_snapshot(dir.path()),
            Err(Error::SnapshotFormat(_))
        ));
    }
}
