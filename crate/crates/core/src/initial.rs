//! Initial conditions and bed profiles for the test problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equations::{EquationModel, DAY, EARTH_OMEGA, EARTH_RADIUS};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::{State, System};

/// Primitive Euler state `(rho, u, v, p)` converted to conserved variables.
pub fn euler_state(model: &EquationModel, rho: f64, u: f64, v: f64, p: f64) -> State {
    let e = p / (model.gamma - 1.0) + 0.5 * rho * (u * u + v * v);
    match model.system {
        System::Euler1D => State::from_slice(&[rho, rho * u, e]),
        _ => State::from_slice(&[rho, rho * u, rho * v, e]),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Still water with a depth jump at `x0`.
    DamBreak1D { h_left: f64, h_right: f64, x0: f64 },
    /// `amplitude * exp(-r^2 / sigma^2) + base` around `center`.
    Gaussian2D {
        sigma: f64,
        center: (f64, f64),
        base: f64,
        amplitude: f64,
    },
    /// Sod shock tube with the diaphragm at `x0`.
    Sod1D { x0: f64 },
    /// Four-quadrant Riemann problem (Liska-Wendroff configuration 3).
    Euler2DRiemann { split: (f64, f64) },
    /// Wave-number-4 Rossby-Haurwitz wave on the sphere.
    RossbyHaurwitz,
    /// Flat free surface at `level` over the bed, fluid at rest.
    LakeAtRest { level: f64 },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::DamBreak1D { .. } => "dambreak1d",
            InitialCondition::Gaussian2D { .. } => "gaussian2d",
            InitialCondition::Sod1D { .. } => "sod1d",
            InitialCondition::Euler2DRiemann { .. } => "euler2d_riemann",
            InitialCondition::RossbyHaurwitz => "rossby_haurwitz",
            InitialCondition::LakeAtRest { .. } => "lake_at_rest",
        }
    }

    /// The condition with its standard parameters.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "dambreak1d" => InitialCondition::DamBreak1D {
                h_left: 1.0,
                h_right: 0.35,
                x0: 0.5,
            },
            "gaussian2d" => InitialCondition::Gaussian2D {
                sigma: 0.5,
                center: (0.5, 0.5),
                base: 0.5,
                amplitude: 1.0,
            },
            "sod1d" => InitialCondition::Sod1D { x0: 0.5 },
            "euler2d_riemann" => InitialCondition::Euler2DRiemann { split: (0.8, 0.8) },
            "rossby_haurwitz" => InitialCondition::RossbyHaurwitz,
            "lake_at_rest" => InitialCondition::LakeAtRest { level: 1.0 },
            other => return Err(Error::config(format!("unknown initial condition '{other}'"))),
        })
    }

    fn expect_system(&self, model: &EquationModel, allowed: &[System]) -> Result<()> {
        if allowed.contains(&model.system) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "initial condition {} does not apply to {}",
                self.name(),
                model.system
            )))
        }
    }

    /// Cell values by midpoint sampling. `bed` is the bed elevation per cell
    /// (only read by `lake_at_rest`).
    pub fn evaluate(&self, model: &EquationModel, grid: &Grid, bed: Option<&[f64]>) -> Result<Vec<State>> {
        let n = grid.ncells();
        let mut cells = Vec::with_capacity(n);
        match (self, grid) {
            (InitialCondition::DamBreak1D { h_left, h_right, x0 }, Grid::Line(g)) => {
                self.expect_system(model, &[System::Swe1D])?;
                for i in 0..n {
                    let h = if g.center(i) < *x0 { *h_left } else { *h_right };
                    cells.push(State::from_slice(&[h, 0.0]));
                }
            }
            (
                InitialCondition::Gaussian2D {
                    sigma,
                    center,
                    base,
                    amplitude,
                },
                Grid::Plane(g),
            ) => {
                self.expect_system(model, &[System::Swe2D])?;
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let (x, y) = g.center(i, j);
                        let r2 = (x - center.0).powi(2) + (y - center.1).powi(2);
                        let h = amplitude * (-r2 / (sigma * sigma)).exp() + base;
                        cells.push(State::from_slice(&[h, 0.0, 0.0]));
                    }
                }
            }
            (InitialCondition::Sod1D { x0 }, Grid::Line(g)) => {
                self.expect_system(model, &[System::Euler1D])?;
                for i in 0..n {
                    let (rho, p) = if g.center(i) < *x0 { (1.0, 1.0) } else { (0.125, 0.1) };
                    cells.push(euler_state(model, rho, 0.0, 0.0, p));
                }
            }
            (InitialCondition::Euler2DRiemann { split }, Grid::Plane(g)) => {
                self.expect_system(model, &[System::Euler2D])?;
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let (x, y) = g.center(i, j);
                        let (rho, u, v, p) = match (x >= split.0, y >= split.1) {
                            (true, true) => (1.5, 0.0, 0.0, 1.5),
                            (false, true) => (0.532258064516129, 1.206045378311055, 0.0, 0.3),
                            (false, false) => (0.137992831541219, 1.206045378311055, 1.206045378311055, 0.029032258064516),
                            (true, false) => (0.532258064516129, 0.0, 1.206045378311055, 0.3),
                        };
                        cells.push(euler_state(model, rho, u, v, p));
                    }
                }
            }
            (InitialCondition::RossbyHaurwitz, Grid::Sphere(s)) => {
                self.expect_system(model, &[System::SweSphere])?;
                for c in 0..n {
                    cells.push(s.cell_average(c, |p| rossby_haurwitz(model, p)));
                }
            }
            (InitialCondition::LakeAtRest { level }, _) => {
                if !model.system.is_swe() {
                    return Err(Error::config("lake_at_rest needs a shallow water system"));
                }
                for c in 0..n {
                    let z = bed.map_or(0.0, |b| b[c]);
                    let mut q = State::ZERO;
                    q[0] = level - z;
                    if !(q[0] > 0.0) {
                        return Err(Error::config(format!(
                            "lake_at_rest level {level} leaves cell {c} dry"
                        )));
                    }
                    cells.push(q);
                }
            }
            _ => {
                return Err(Error::config(format!(
                    "initial condition {} does not fit a {} grid",
                    self.name(),
                    grid.summary().kind
                )))
            }
        }
        Ok(cells)
    }
}

/// Physical gravity used by the Rossby-Haurwitz height formula.
const RH_GRAVITY: f64 = 9.80616;
const RH_H0: f64 = 8000.0;
const RH_OMEGA: f64 = 7.848e-6;
const RH_K: f64 = 7.848e-6;
const RH_WAVENUMBER: i32 = 4;

/// Rossby-Haurwitz state (Williamson et al. standard test case 6) at the unit
/// vector `p`, converted to the units of `model`: lengths in earth radii,
/// times in days. Momentum is returned as a Cartesian 3-vector.
pub fn rossby_haurwitz(model: &EquationModel, p: [f64; 3]) -> State {
    let (a, om) = (EARTH_RADIUS, EARTH_OMEGA);
    let (w, k, r) = (RH_OMEGA, RH_K, RH_WAVENUMBER);
    let rf = r as f64;
    let theta = p[2].clamp(-1.0, 1.0).asin();
    let lam = p[1].atan2(p[0]);
    let (ct, st) = (theta.cos(), theta.sin());
    let c2 = ct * ct;
    let c2r = ct.powi(2 * r);

    let big_a = 0.5 * w * (2.0 * om + w) * c2
        + 0.25 * k * k * c2r * ((rf + 1.0) * c2 + (2.0 * rf * rf - rf - 2.0) - 2.0 * rf * rf / c2);
    let big_b = 2.0 * (om + w) * k / ((rf + 1.0) * (rf + 2.0))
        * ct.powi(r)
        * ((rf * rf + 2.0 * rf + 2.0) - (rf + 1.0).powi(2) * c2);
    let big_c = 0.25 * k * k * c2r * ((rf + 1.0) * c2 - (rf + 2.0));
    let gh = RH_GRAVITY * RH_H0
        + a * a * (big_a + big_b * (rf * lam).cos() + big_c * (2.0 * rf * lam).cos());

    let u = a * w * ct + a * k * ct.powi(r - 1) * (rf * st * st - c2) * (rf * lam).cos();
    let v = -a * k * rf * ct.powi(r - 1) * st * (rf * lam).sin();

    let (length, time) = (EARTH_RADIUS / model.radius, DAY);
    let h = gh * time * time / (length * length * model.g);
    let vel = time / length;
    let e_lam = [-lam.sin(), lam.cos(), 0.0];
    let e_th = [-st * lam.cos(), -st * lam.sin(), ct];
    let mut q = State::ZERO;
    q[0] = h;
    for d in 0..3 {
        q[1 + d] = h * vel * (u * e_lam[d] + v * e_th[d]);
    }
    q
}

/// Bed elevation and its cell-centered slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct Bathymetry {
    pub elevation: Vec<f64>,
    pub slope: Vec<(f64, f64)>,
}

impl Bathymetry {
    /// Slopes from centered differences, one-sided in boundary cells.
    pub fn new(grid: &Grid, elevation: Vec<f64>) -> Result<Self> {
        if elevation.len() != grid.ncells() {
            return Err(Error::Shape(format!(
                "{} bed values for {} cells",
                elevation.len(),
                grid.ncells()
            )));
        }
        let diff = |n: usize, i: usize, h: f64, f: &dyn Fn(usize) -> f64| {
            if n < 2 {
                0.0
            } else if i == 0 {
                (f(1) - f(0)) / h
            } else if i == n - 1 {
                (f(n - 1) - f(n - 2)) / h
            } else {
                (f(i + 1) - f(i - 1)) / (2.0 * h)
            }
        };
        let z = &elevation;
        let slope = match grid {
            Grid::Line(g) => (0..g.n_cells)
                .map(|i| (diff(g.n_cells, i, g.dx, &|k| z[k]), 0.0))
                .collect(),
            Grid::Plane(g) => {
                let mut s = Vec::with_capacity(g.nx * g.ny);
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        s.push((
                            diff(g.nx, i, g.dx, &|k| z[j * g.nx + k]),
                            diff(g.ny, j, g.dy, &|k| z[k * g.nx + i]),
                        ));
                    }
                }
                s
            }
            Grid::Sphere(_) => return Err(Error::config("bathymetry is not supported on the sphere")),
        };
        Ok(Bathymetry { elevation, slope })
    }

    /// Smooth random bed: a sum of a few Fourier modes with seeded phases.
    pub fn random(grid: &Grid, amplitude: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(f64, f64, f64, f64)> = (1..=4)
            .map(|k| {
                (
                    k as f64,
                    rng.gen_range(-1.0..1.0) / k as f64,
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let norm: f64 = modes.iter().map(|m| m.1.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let profile = |x: f64, y: f64| {
            modes
                .iter()
                .map(|&(k, a, px, py)| a * (std::f64::consts::TAU * k * x + px).sin() * (std::f64::consts::TAU * k * y + py).cos())
                .sum::<f64>()
                * amplitude
                / norm
        };
        let elevation = match grid {
            Grid::Line(g) => {
                let len = g.x_right - g.x_left;
                (0..g.n_cells)
                    .map(|i| profile((g.center(i) - g.x_left) / len, 0.0))
                    .collect()
            }
            Grid::Plane(g) => {
                let (lx, ly) = (g.x_max - g.x_min, g.y_max - g.y_min);
                let mut z = Vec::with_capacity(g.nx * g.ny);
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let (x, y) = g.center(i, j);
                        z.push(profile((x - g.x_min) / lx, (y - g.y_min) / ly));
                    }
                }
                z
            }
            Grid::Sphere(_) => return Err(Error::config("bathymetry is not supported on the sphere")),
        };
        Self::new(grid, elevation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid1D, Grid2D};

    #[test]
    fn dam_break_on_four_cells() {
        let model = EquationModel::new(System::Swe1D);
        let grid = Grid::Line(Grid1D::new(0.0, 1.0, 4).unwrap());
        let ic = InitialCondition::default_for("dambreak1d").unwrap();
        let h: Vec<f64> = ic.evaluate(&model, &grid, None).unwrap().iter().map(|q| q[0]).collect();
        assert_eq!(h, vec![1.0, 1.0, 0.35, 0.35]);
    }

    #[test]
    fn gaussian_peak_at_center_cell() {
        let model = EquationModel::new(System::Swe2D);
        let grid = Grid::Plane(Grid2D::new((0.0, 1.0), (0.0, 1.0), 5, 5).unwrap());
        let ic = InitialCondition::default_for("gaussian2d").unwrap();
        let cells = ic.evaluate(&model, &grid, None).unwrap();
        assert_eq!(cells[12][0], 1.5);
    }

    #[test]
    fn sod_states() {
        let model = EquationModel::new(System::Euler1D);
        let grid = Grid::Line(Grid1D::new(0.0, 1.0, 2).unwrap());
        let ic = InitialCondition::default_for("sod1d").unwrap();
        let cells = ic.evaluate(&model, &grid, None).unwrap();
        assert_eq!((cells[0][0], cells[0][1]), (1.0, 0.0));
        assert!((cells[0][2] - 2.5).abs() < 1e-15);
        assert!((cells[1][2] - 0.25).abs() < 1e-15);
        assert_eq!(cells[1][0], 0.125);
    }

    #[test]
    fn mismatched_system_is_a_config_error() {
        let model = EquationModel::new(System::Euler1D);
        let grid = Grid::Line(Grid1D::new(0.0, 1.0, 4).unwrap());
        let ic = InitialCondition::default_for("dambreak1d").unwrap();
        assert!(matches!(ic.evaluate(&model, &grid, None), Err(Error::Config { .. })));
        assert!(InitialCondition::default_for("vortex").is_err());
    }

    #[test]
    fn rossby_haurwitz_is_tangent_and_positive() {
        let model = EquationModel::earth_nondimensional();
        for p in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.36, 0.48, -0.8]] {
            let q = rossby_haurwitz(&model, p);
            assert!(q[0] > 0.0);
            let radial = p[0] * q[1] + p[1] * q[2] + p[2] * q[3];
            assert!(radial.abs() < 1e-15 * q.max_abs().max(1.0));
        }
    }

    #[test]
    fn random_bed_is_reproducible() {
        let grid = Grid::Line(Grid1D::new(0.0, 1.0, 32).unwrap());
        let a = Bathymetry::random(&grid, 0.1, 7).unwrap();
        let b = Bathymetry::random(&grid, 0.1, 7).unwrap();
        let c = Bathymetry::random(&grid, 0.1, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.elevation.iter().all(|z| z.abs() <= 0.1 + 1e-15));
    }

    #[test]
    fn linear_bed_slope() {
        let grid = Grid::Line(Grid1D::new(0.0, 1.0, 4).unwrap());
        let bed = Bathymetry::new(&grid, vec![0.0, 0.5, 1.0, 1.5]).unwrap();
        assert!(bed.slope.iter().all(|s| (s.0 - 2.0).abs() < 1e-14));
    }
}
