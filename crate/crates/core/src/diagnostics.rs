//! Error metrics, coarsening, and the conservation/energy/enstrophy records
//! written during a run.

use std::fmt::Write as _;

use crate::equations::{dot, EquationModel};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::State;

/// Mean relative error `(1/n) Σ |ref - test| / ref` of a positive reference.
pub fn relative_error(test: &[f64], reference: &[f64]) -> Result<f64> {
    if test.len() != reference.len() || test.is_empty() {
        return Err(Error::Metric(format!(
            "cannot compare {} values against {}",
            test.len(),
            reference.len()
        )));
    }
    let mut sum = 0.0;
    for (i, (t, r)) in test.iter().zip(reference).enumerate() {
        if !(*r > 0.0) {
            return Err(Error::Metric(format!("reference value {r} at cell {i} is not positive")));
        }
        sum += (r - t).abs() / r;
    }
    Ok(sum / test.len() as f64)
}

/// Block-average `factor` (1D) or `factor x factor` (2D) groups of cells.
/// With `weights` (cell areas) the average is weighted so that `Σ Q Δc` is kept.
pub fn coarsen(
    cells: &[State],
    dims: (usize, usize),
    ndim: usize,
    factor: usize,
    weights: Option<&[f64]>,
) -> Result<(Vec<State>, (usize, usize))> {
    let (nx, ny) = dims;
    if cells.len() != nx * ny {
        return Err(Error::Shape(format!("{} cells for a {nx} x {ny} grid", cells.len())));
    }
    let fy = if ndim == 1 { 1 } else { factor };
    if factor == 0 || nx % factor != 0 || ny % fy != 0 {
        return Err(Error::Shape(format!(
            "{nx} x {ny} grid is not divisible by factor {factor}"
        )));
    }
    if let Some(w) = weights {
        if w.len() != cells.len() {
            return Err(Error::Shape("weight count does not match cell count".into()));
        }
    }
    let (cx, cy) = (nx / factor, ny / fy);
    let mut out = Vec::with_capacity(cx * cy);
    for j in 0..cy {
        for i in 0..cx {
            let mut acc = State::ZERO;
            let mut wsum = 0.0;
            for jj in 0..fy {
                for ii in 0..factor {
                    let c = (j * fy + jj) * nx + i * factor + ii;
                    let w = weights.map_or(1.0, |w| w[c]);
                    acc += cells[c] * w;
                    wsum += w;
                }
            }
            out.push(acc * (1.0 / wsum));
        }
    }
    Ok((out, (cx, cy)))
}

/// Area-weighted `(potential, kinetic, total)` energy. For the shallow water
/// systems the potential part is `g h^2 / 2`; for Euler it is the internal
/// energy `p / (gamma - 1)`.
pub fn total_energy(model: &EquationModel, grid: &Grid, cells: &[State]) -> Result<(f64, f64, f64)> {
    let (mut pot, mut kin) = (0.0, 0.0);
    for (c, q) in cells.iter().enumerate() {
        if !(q[0] > 0.0) {
            return Err(Error::Metric(format!("non-positive depth/density {} at cell {c}", q[0])));
        }
        let area = grid.cell_area(c);
        let k = 0.5 * model.speed_sq(q) * q[0];
        let p = if model.system.is_swe() {
            0.5 * model.g * q[0] * q[0]
        } else {
            model.pressure_unchecked(q) / (model.gamma - 1.0)
        };
        pot += p * area;
        kin += k * area;
    }
    Ok((pot, kin, pot + kin))
}

/// Relative vorticity per cell. Planar grids use centered differences
/// (one-sided on the boundary); the sphere uses the edge circulation.
pub fn vorticity(model: &EquationModel, grid: &Grid, cells: &[State]) -> Result<Vec<f64>> {
    match grid {
        Grid::Line(_) => Err(Error::Metric("vorticity needs a 2D grid".into())),
        Grid::Plane(g) => {
            let (nx, ny) = (g.nx, g.ny);
            let vel = |i: usize, j: usize, k: usize| {
                let q = &cells[j * nx + i];
                q[k] / q[0]
            };
            let diff = |n: usize, idx: usize, h: f64, f: &dyn Fn(usize) -> f64| {
                if n == 1 {
                    0.0
                } else if idx == 0 {
                    (f(1) - f(0)) / h
                } else if idx == n - 1 {
                    (f(n - 1) - f(n - 2)) / h
                } else {
                    (f(idx + 1) - f(idx - 1)) / (2.0 * h)
                }
            };
            let mut out = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    let dvdx = diff(nx, i, g.dx, &|ii| vel(ii, j, 2));
                    let dudy = diff(ny, j, g.dy, &|jj| vel(i, jj, 1));
                    out.push(dvdx - dudy);
                }
            }
            Ok(out)
        }
        Grid::Sphere(s) => {
            let velocity = |q: &State| {
                let m = model.momentum(q);
                [m[0] / q[0], m[1] / q[0], m[2] / q[0]]
            };
            let circulation: Vec<f64> = s
                .edges
                .iter()
                .map(|e| {
                    let (ul, ur) = (velocity(&cells[e.left]), velocity(&cells[e.right]));
                    let avg = [
                        0.5 * (ul[0] + ur[0]),
                        0.5 * (ul[1] + ur[1]),
                        0.5 * (ul[2] + ur[2]),
                    ];
                    e.length * dot(avg, e.frame.t)
                })
                .collect();
            Ok((0..s.ncells())
                .map(|c| {
                    s.cell_edges[c]
                        .iter()
                        .map(|&(e, sign)| sign * circulation[e])
                        .sum::<f64>()
                        / s.cell_area[c]
                })
                .collect())
        }
    }
}

/// `Σ (ζ + f)^2 / (2 h) Δc`; zero for 1D and Euler systems.
pub fn potential_enstrophy(model: &EquationModel, grid: &Grid, cells: &[State]) -> Result<f64> {
    if !model.system.is_swe() || matches!(grid, Grid::Line(_)) {
        return Ok(0.0);
    }
    let zeta = vorticity(model, grid, cells)?;
    let mut sum = 0.0;
    for (c, q) in cells.iter().enumerate() {
        if !(q[0] > 0.0) {
            return Err(Error::Metric(format!("non-positive depth {} at cell {c}", q[0])));
        }
        let f = match grid {
            Grid::Sphere(s) => model.omega * s.coriolis_f[c],
            _ => 0.0,
        };
        let a = zeta[c] + f;
        sum += a * a / (2.0 * q[0]) * grid.cell_area(c);
    }
    Ok(sum)
}

pub const CSV_HEADER: &str = "time,mass,potential,kinetic,energy,enstrophy,min_h,max_wavespeed";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub time: f64,
    pub mass: f64,
    pub potential: f64,
    pub kinetic: f64,
    pub energy: f64,
    pub enstrophy: f64,
    /// Minimum depth, or minimum density for Euler.
    pub min_h: f64,
    pub max_wavespeed: f64,
}

impl DiagnosticRecord {
    pub fn compute(model: &EquationModel, grid: &Grid, cells: &[State], time: f64) -> Result<Self> {
        let mass = cells
            .iter()
            .enumerate()
            .map(|(c, q)| q[0] * grid.cell_area(c))
            .sum();
        let (potential, kinetic, energy) = total_energy(model, grid, cells)?;
        let enstrophy = potential_enstrophy(model, grid, cells)?;
        let min_h = cells.iter().fold(f64::INFINITY, |m, q| m.min(q[0]));
        let max_wavespeed = cells
            .iter()
            .fold(0.0_f64, |m, q| m.max(model.max_wave_speed(q)));
        Ok(DiagnosticRecord {
            time,
            mass,
            potential,
            kinetic,
            energy,
            enstrophy,
            min_h,
            max_wavespeed,
        })
    }

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let vals = [
            self.time,
            self.mass,
            self.potential,
            self.kinetic,
            self.energy,
            self.enstrophy,
            self.min_h,
            self.max_wavespeed,
        ];
        for (k, v) in vals.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            write!(s, "{v:.16e}").unwrap();
        }
        s
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let vals: Vec<f64> = line
            .trim()
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Metric(format!("bad diagnostics row '{line}': {e}")))?;
        if vals.len() != 8 {
            return Err(Error::Metric(format!("expected 8 columns, got {}", vals.len())));
        }
        Ok(DiagnosticRecord {
            time: vals[0],
            mass: vals[1],
            potential: vals[2],
            kinetic: vals[3],
            energy: vals[4],
            enstrophy: vals[5],
            min_h: vals[6],
            max_wavespeed: vals[7],
        })
    }
}

/// Full diagnostics time series as CSV text with header.
pub fn to_csv(records: &[DiagnosticRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Metric("missing diagnostics header".into())),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(DiagnosticRecord::parse_csv_row)
        .collect()
}

/// Height (or density) component of each cell.
pub fn heights(cells: &[State]) -> Vec<f64> {
    cells.iter().map(|q| q[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid1D, Grid2D};
    use crate::state::System;

    fn s(v: &[f64]) -> State {
        State::from_slice(v)
    }

    #[test]
    fn relative_error_basics() {
        let r = [1.0, 2.0, 4.0];
        assert_eq!(relative_error(&r, &r).unwrap(), 0.0);
        let t: Vec<f64> = r.iter().map(|v| v * 1.01).collect();
        assert!((relative_error(&t, &r).unwrap() - 0.01).abs() < 1e-15);
        assert!(relative_error(&r, &[1.0, 0.0, 1.0]).is_err());
        assert!(relative_error(&r, &r[..2]).is_err());
    }

    #[test]
    fn coarsen_block_means() {
        let cells: Vec<State> = [1.0, 3.0, 5.0, 7.0].iter().map(|&h| s(&[h, 0.0])).collect();
        let (c, dims) = coarsen(&cells, (4, 1), 1, 2, None).unwrap();
        assert_eq!(dims, (2, 1));
        assert_eq!((c[0][0], c[1][0]), (2.0, 6.0));
        let (same, _) = coarsen(&cells, (4, 1), 1, 1, None).unwrap();
        assert_eq!(same, cells);
        assert!(coarsen(&cells, (4, 1), 1, 3, None).is_err());
    }

    #[test]
    fn coarsen_2d_blocks() {
        let cells: Vec<State> = (0..16).map(|c| s(&[c as f64, 0.0, 0.0])).collect();
        let (c, dims) = coarsen(&cells, (4, 4), 2, 2, None).unwrap();
        assert_eq!(dims, (2, 2));
        assert_eq!(c[0][0], (0.0 + 1.0 + 4.0 + 5.0) / 4.0);
        assert_eq!(c[3][0], (10.0 + 11.0 + 14.0 + 15.0) / 4.0);
    }

    #[test]
    fn energy_of_still_water() {
        let model = EquationModel::new(System::Swe1D);
        let grid = Grid::Line(Grid1D::new(0.0, 1.0, 8).unwrap());
        let cells = vec![s(&[1.0, 0.0]); 8];
        let (p, k, e) = total_energy(&model, &grid, &cells).unwrap();
        assert!((p - 4.9).abs() < 1e-14);
        assert_eq!(k, 0.0);
        assert_eq!(e, p);
    }

    #[test]
    fn rigid_rotation_enstrophy() {
        let model = EquationModel::new(System::Swe2D);
        let g2 = Grid2D::new((-1.0, 1.0), (-1.0, 1.0), 16, 16).unwrap();
        let omega = 0.3;
        let h = 2.0;
        let mut cells = Vec::new();
        for j in 0..16 {
            for i in 0..16 {
                let (x, y) = g2.center(i, j);
                cells.push(s(&[h, -omega * y * h, omega * x * h]));
            }
        }
        let grid = Grid::Plane(g2);
        let z = vorticity(&model, &grid, &cells).unwrap();
        assert!(z.iter().all(|v| (v - 2.0 * omega).abs() < 1e-12));
        let ens = potential_enstrophy(&model, &grid, &cells).unwrap();
        let exact = (2.0 * omega).powi(2) / (2.0 * h) * 4.0;
        assert!((ens - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn rest_state_has_no_enstrophy() {
        let model = EquationModel::new(System::Swe2D);
        let grid = Grid::Plane(Grid2D::new((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap());
        let cells = vec![s(&[1.0, 0.0, 0.0]); 16];
        assert_eq!(potential_enstrophy(&model, &grid, &cells).unwrap(), 0.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rec = DiagnosticRecord {
            time: 0.1,
            mass: 1.0 / 3.0,
            potential: 4.9,
            kinetic: 1e-300,
            energy: std::f64::consts::PI,
            enstrophy: 0.0,
            min_h: 0.35,
            max_wavespeed: 3.130_495_168_499_705_6,
        };
        let text = to_csv(&[rec, rec]);
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.ends_with('\n'));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, vec![rec, rec]);
    }
}
