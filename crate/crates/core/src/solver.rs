//! Finite-volume drivers: right-hand-side assembly on Cartesian and sphere
//! grids, time stepping, and the main run loop.

use std::sync::Arc;

use rayon::prelude::*;

use crate::diagnostics::DiagnosticRecord;
use crate::equations::{project_tangent, EquationModel};
use crate::error::{Error, Result};
use crate::field::{fill_ghosts, reflect, BcKind, BoundaryCondition, ConservedField, DEFAULT_HALO};
use crate::flux::{interface_flux, rotated_flux_unchecked, FluxKind, FluxScheme, Frame};
use crate::grid::{Face, Grid, SphereGrid};
use crate::initial::Bathymetry;
use crate::nn::{infer_boundary_states, infer_slope_coefficients, Approach, Padding, WeightBundle};
use crate::reconstruction::{reconstruct_first_order, reconstruct_minmod, reconstruct_with_coefficients, FaceStates};
use crate::state::State;
use crate::time_integration::{compute_dt, StepControl, Stepper};

#[derive(Clone, Debug)]
pub enum Reconstruction {
    FirstOrder,
    Minmod { literal_sign: bool },
    /// Slopes from network-predicted stencil coefficients.
    Coefficients(Arc<WeightBundle>),
    /// Face states predicted directly by a network.
    BoundaryStates(Arc<WeightBundle>),
}

impl Reconstruction {
    pub fn minmod() -> Self {
        Reconstruction::Minmod { literal_sign: false }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reconstruction::FirstOrder => "order1",
            Reconstruction::Minmod { literal_sign: false } => "minmod",
            Reconstruction::Minmod { literal_sign: true } => "minmod-literal",
            Reconstruction::Coefficients(_) => "coeff",
            Reconstruction::BoundaryStates(_) => "nn",
        }
    }
}

/// Everything needed to evaluate the semi-discrete operator and step it.
#[derive(Clone, Debug)]
pub struct Solver {
    pub model: EquationModel,
    pub grid: Grid,
    pub bc: BoundaryCondition,
    pub flux: FluxScheme,
    pub reconstruction: Reconstruction,
    pub stepper: Stepper,
    pub bed: Option<Bathymetry>,
}

impl Solver {
    pub fn new(model: EquationModel, grid: Grid, flux: FluxScheme, reconstruction: Reconstruction) -> Self {
        Solver {
            model,
            grid,
            bc: BoundaryCondition::periodic(),
            flux,
            reconstruction,
            stepper: Stepper::TvdRk3,
            bed: None,
        }
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    pub fn with_bed(mut self, bed: Option<Bathymetry>) -> Self {
        self.bed = bed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate_parameters()?;
        self.bc.validate()?;
        let ok = match &self.grid {
            Grid::Line(_) => self.model.system.grid_dims() == 1,
            Grid::Plane(_) => self.model.system.grid_dims() == 2 && self.model.system != crate::System::SweSphere,
            Grid::Sphere(_) => self.model.system == crate::System::SweSphere,
        };
        if !ok {
            return Err(Error::config(format!(
                "system {} does not run on a {} grid",
                self.model.system,
                self.grid.summary().kind
            )));
        }
        let bundle = match &self.reconstruction {
            Reconstruction::Coefficients(b) => Some((b, Approach::SlopeCoefficients)),
            Reconstruction::BoundaryStates(b) => Some((b, Approach::BoundaryStates)),
            _ => None,
        };
        if let Some((b, approach)) = bundle {
            b.validate()?;
            if b.approach != approach {
                return Err(Error::config(format!(
                    "reconstruction {} needs a {approach} bundle, got {}",
                    self.reconstruction.name(),
                    b.approach
                )));
            }
            if b.system != self.model.system {
                return Err(Error::config(format!(
                    "weight bundle is for {}, run uses {}",
                    b.system, self.model.system
                )));
            }
        }
        if self.bed.is_some() && matches!(self.grid, Grid::Sphere(_)) {
            return Err(Error::config("bathymetry is not supported on the sphere"));
        }
        Ok(())
    }

    fn padding(&self) -> Padding {
        match (&self.grid, self.bc.left) {
            (Grid::Sphere(_), _) | (_, BcKind::Periodic) => Padding::Periodic,
            _ => Padding::Reflect,
        }
    }

    fn field(&self, cells: &[State]) -> Result<ConservedField> {
        let (nx, ny) = self.grid.dims();
        let mut f = ConservedField::from_interior(self.model.system, nx, ny, DEFAULT_HALO, cells)?;
        fill_ghosts(&mut f, &self.bc, &self.grid);
        Ok(f)
    }

    fn faces(&self, field: &ConservedField) -> Result<FaceStates> {
        Ok(match &self.reconstruction {
            Reconstruction::FirstOrder => reconstruct_first_order(field),
            Reconstruction::Minmod { literal_sign } => reconstruct_minmod(field, *literal_sign),
            Reconstruction::Coefficients(b) => {
                let coeffs = infer_slope_coefficients(b, field, self.padding())?;
                reconstruct_with_coefficients(field, &coeffs)?
            }
            Reconstruction::BoundaryStates(b) => infer_boundary_states(b, field, self.padding())?,
        })
    }

    /// Flux scheme with the Lax-Friedrichs ratio set for grid spacing `h`.
    /// On 2D grids the ratio is halved per direction, so the unsplit update
    /// is the four-neighbour average of classic 2D Lax-Friedrichs.
    fn scheme_for(&self, h: f64, dt: f64) -> FluxScheme {
        if self.flux.kind == FluxKind::LaxFriedrichs && dt > 0.0 {
            let dims = self.model.system.grid_dims() as f64;
            self.flux.with_lf_ratio(h / (dims * dt))
        } else {
            self.flux
        }
    }

    /// Time derivative of the cell averages. `dt` is only used by the
    /// Lax-Friedrichs flux, whose dissipation scales with `dx / dt`.
    pub fn rhs(&self, cells: &[State], dt: f64) -> Result<Vec<State>> {
        let field = self.field(cells)?;
        let faces = self.faces(&field)?;
        match &self.grid {
            Grid::Sphere(s) => self.rhs_sphere(cells, &faces, s, dt),
            _ => self.rhs_cartesian(cells, &faces, dt),
        }
    }

    fn rhs_cartesian(&self, cells: &[State], faces: &FaceStates, dt: f64) -> Result<Vec<State>> {
        let (nx, ny) = self.grid.dims();
        let (dx, dy) = match &self.grid {
            Grid::Line(g) => (g.dx, 1.0),
            Grid::Plane(g) => (g.dx, g.dy),
            Grid::Sphere(_) => unreachable!(),
        };
        let model = &self.model;
        let bc = &self.bc;

        let sx = self.scheme_for(dx, dt);
        let fx: Vec<State> = (0..(nx + 1) * ny)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % (nx + 1), k / (nx + 1));
                let row = j * nx;
                let ql = if i == 0 {
                    match bc.left {
                        BcKind::Periodic => faces.east[row + nx - 1],
                        BcKind::Wall => reflect(faces.west[row], 0),
                    }
                } else {
                    faces.east[row + i - 1]
                };
                let qr = if i == nx {
                    match bc.right {
                        BcKind::Periodic => faces.west[row],
                        BcKind::Wall => reflect(faces.east[row + nx - 1], 0),
                    }
                } else {
                    faces.west[row + i]
                };
                interface_flux(&sx, model, &ql, &qr).map_err(|e| e.at_cell(row + i.min(nx - 1)))
            })
            .collect::<Result<_>>()?;

        let fy: Vec<State> = if self.grid.ndim() == 2 {
            let sy = self.scheme_for(dy, dt);
            let frame = Frame::axis_aligned(1);
            (0..nx * (ny + 1))
                .into_par_iter()
                .map(|k| {
                    let (i, j) = (k % nx, k / nx);
                    let ql = if j == 0 {
                        match bc.bottom {
                            BcKind::Periodic => faces.north[(ny - 1) * nx + i],
                            BcKind::Wall => reflect(faces.south[i], 1),
                        }
                    } else {
                        faces.north[(j - 1) * nx + i]
                    };
                    let qr = if j == ny {
                        match bc.top {
                            BcKind::Periodic => faces.south[i],
                            BcKind::Wall => reflect(faces.north[(ny - 1) * nx + i], 1),
                        }
                    } else {
                        faces.south[j * nx + i]
                    };
                    rotated_flux_unchecked(&sy, model, &ql, &qr, &frame)
                        .map_err(|e| e.at_cell(j.min(ny - 1) * nx + i))
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        let two_d = self.grid.ndim() == 2;
        let bed = self.bed.as_ref();
        Ok((0..nx * ny)
            .into_par_iter()
            .map(|c| {
                let (i, j) = (c % nx, c / nx);
                let xk = j * (nx + 1) + i;
                let mut d = (fx[xk + 1] - fx[xk]) * (-1.0 / dx);
                if two_d {
                    d -= (fy[(j + 1) * nx + i] - fy[j * nx + i]) * (1.0 / dy);
                }
                let q = &cells[c];
                if let Some(b) = bed {
                    d += model.bathymetry_source(q, b.slope[c]);
                }
                if model.manning_n > 0.0 {
                    d += model.friction_source(q);
                }
                d
            })
            .collect())
    }

    fn rhs_sphere(&self, cells: &[State], faces: &FaceStates, grid: &SphereGrid, dt: f64) -> Result<Vec<State>> {
        let model = &self.model;
        let face = |c: usize, f: Face| match f {
            Face::West => faces.west[c],
            Face::East => faces.east[c],
            Face::South => faces.south[c],
            Face::North => faces.north[c],
        };
        let min_len = grid.cfl_length.iter().cloned().fold(f64::INFINITY, f64::min);
        let scheme = self.scheme_for(min_len, dt);
        let edge_flux: Vec<State> = grid
            .edges
            .par_iter()
            .map(|e| {
                let ql = face(e.left, e.left_face);
                let qr = face(e.right, e.right_face);
                rotated_flux_unchecked(&scheme, model, &ql, &qr, &e.frame)
                    .map(|f| f * e.length)
                    .map_err(|err| err.at_cell(e.left))
            })
            .collect::<Result<_>>()?;

        Ok((0..grid.ncells())
            .into_par_iter()
            .map(|c| {
                let q = &cells[c];
                let mut net = State::ZERO;
                for &(e, sign) in &grid.cell_edges[c] {
                    net += edge_flux[e] * sign;
                }
                // Flux of the cell's own state through its (not exactly closed)
                // boundary; removing it keeps constant states at rest. Only the
                // momentum part is corrected so mass stays exactly conserved.
                let mut corr = model.flux_along(q, grid.normal_sum[c]);
                corr[0] = 0.0;
                (corr - net) * (1.0 / grid.cell_area[c]) + model.coriolis_source(grid.center_point(c), q)
            })
            .collect())
    }

    /// One step of the configured time stepper.
    pub fn step(&self, cells: &[State], dt: f64) -> Result<Vec<State>> {
        let sphere = match &self.grid {
            Grid::Sphere(s) => Some(s.clone()),
            _ => None,
        };
        self.stepper.step(
            cells,
            dt,
            |q| self.rhs(q, dt),
            |q| {
                if let Some(s) = &sphere {
                    q.par_iter_mut()
                        .enumerate()
                        .for_each(|(c, v)| *v = project_tangent(s.cell_center[c], v));
                }
            },
        )
    }

    pub fn compute_dt(&self, control: &StepControl, cells: &[State], t: f64) -> Result<f64> {
        compute_dt(control, &self.model, cells, &self.grid, t)
    }

    /// Remove any radial momentum (sphere grids only).
    pub fn project(&self, cells: &mut [State]) {
        if let Grid::Sphere(s) = &self.grid {
            for (c, v) in cells.iter_mut().enumerate() {
                *v = project_tangent(s.cell_center[c], v);
            }
        }
    }

    pub fn diagnostics(&self, cells: &[State], time: f64) -> Result<DiagnosticRecord> {
        DiagnosticRecord::compute(&self.model, &self.grid, cells, time)
    }

    /// Integrate to `control.t_end`, reporting progress to `observer`.
    pub fn run_with(
        &self,
        initial: Vec<State>,
        control: &StepControl,
        schedule: &Schedule,
        observer: &mut dyn Observer,
    ) -> Result<RunState> {
        control.validate()?;
        if initial.len() != self.grid.ncells() {
            return Err(Error::Shape(format!(
                "{} initial values for {} cells",
                initial.len(),
                self.grid.ncells()
            )));
        }
        let mut state = RunState {
            cells: initial,
            time: 0.0,
            steps: 0,
            history: Vec::new(),
        };
        self.project(&mut state.cells);
        if let Some((c, k)) = first_non_finite(&state.cells) {
            return Err(Error::NonFinite {
                step: 0,
                cell: c,
                component: k,
            });
        }
        self.record(&mut state, schedule, observer, true)?;
        observer.snapshot(&state)?;
        let mut next_snapshot_time = schedule.snapshot_every_time;

        while state.time < control.t_end {
            let dt = match self.compute_dt(control, &state.cells, state.time) {
                Ok(dt) => dt,
                Err(e) => return Err(self.abort(e, &state, observer)),
            };
            if dt <= 0.0 {
                break;
            }
            let next = match self.step(&state.cells, dt) {
                Ok(n) => n,
                Err(e) => return Err(self.abort(e, &state, observer)),
            };
            if let Some((c, k)) = first_non_finite(&next) {
                let e = Error::NonFinite {
                    step: state.steps + 1,
                    cell: c,
                    component: k,
                };
                return Err(self.abort(e, &state, observer));
            }
            state.cells = next;
            state.steps += 1;
            state.time = if control.t_end - state.time <= dt {
                control.t_end
            } else {
                state.time + dt
            };

            let at_end = state.time >= control.t_end;
            if let Err(e) = self.record(&mut state, schedule, observer, at_end) {
                return Err(self.abort(e, &state, observer));
            }
            let mut snap = at_end;
            if let Some(every) = schedule.snapshot_every_steps {
                snap |= every > 0 && state.steps % every == 0;
            }
            if let Some(t) = next_snapshot_time.as_mut() {
                let interval = schedule.snapshot_every_time.unwrap_or(f64::INFINITY);
                if state.time >= *t {
                    snap = true;
                    while *t <= state.time {
                        *t += interval;
                    }
                }
            }
            if snap {
                observer.snapshot(&state)?;
            }
        }
        Ok(state)
    }

    /// Integrate to `control.t_end` recording diagnostics every `diag_every` steps.
    pub fn run(&self, initial: Vec<State>, control: &StepControl, diag_every: Option<u64>) -> Result<RunState> {
        let schedule = Schedule {
            diagnostics_every: diag_every,
            ..Schedule::default()
        };
        self.run_with(initial, control, &schedule, &mut NoOutput)
    }

    fn record(&self, state: &mut RunState, schedule: &Schedule, observer: &mut dyn Observer, force: bool) -> Result<()> {
        let Some(every) = schedule.diagnostics_every else {
            return Ok(());
        };
        if force || (every > 0 && state.steps % every == 0) {
            let rec = self.diagnostics(&state.cells, state.time)?;
            observer.diagnostics(&rec)?;
            state.history.push(rec);
        }
        Ok(())
    }

    /// Flush the last valid state before surfacing `err`.
    fn abort(&self, err: Error, state: &RunState, observer: &mut dyn Observer) -> Error {
        match observer.snapshot(state) {
            Ok(()) => err,
            Err(io) => Error::Io(std::io::Error::other(format!(
                "{err}; flushing the last valid snapshot also failed: {io}"
            ))),
        }
    }
}

fn first_non_finite(cells: &[State]) -> Option<(usize, usize)> {
    cells
        .iter()
        .enumerate()
        .find_map(|(c, q)| q.0.iter().position(|v| !v.is_finite()).map(|k| (c, k)))
}

/// Progress of a run.
#[derive(Clone, Debug)]
pub struct RunState {
    pub cells: Vec<State>,
    pub time: f64,
    pub steps: u64,
    pub history: Vec<DiagnosticRecord>,
}

/// When to record diagnostics and write snapshots. The initial and final
/// states are always reported.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Schedule {
    pub diagnostics_every: Option<u64>,
    pub snapshot_every_steps: Option<u64>,
    pub snapshot_every_time: Option<f64>,
}

/// Receives diagnostics records and snapshot requests during a run.
pub trait Observer {
    fn diagnostics(&mut self, _record: &DiagnosticRecord) -> Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _state: &RunState) -> Result<()> {
        Ok(())
    }
}

pub struct NoOutput;

impl Observer for NoOutput {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid1D, Grid2D};
    use crate::initial::InitialCondition;
    use crate::System;

    fn dam_break_solver(n: usize, kind: FluxKind, recon: Reconstruction) -> (Solver, Vec<State>) {
        let model = EquationModel::new(System::Swe1D);
        let grid = Grid::Line(Grid1D::new(0.0, 1.0, n).unwrap());
        let cells = InitialCondition::default_for("dambreak1d")
            .unwrap()
            .evaluate(&model, &grid, None)
            .unwrap();
        (
            Solver::new(model, grid, FluxScheme::new(kind), recon).with_bc(BoundaryCondition::wall()),
            cells,
        )
    }

    #[test]
    fn uniform_state_has_zero_derivative() {
        let model = EquationModel::new(System::Swe2D);
        let grid = Grid::Plane(Grid2D::new((0.0, 1.0), (0.0, 1.0), 6, 5).unwrap());
        let s = Solver::new(model, grid, FluxScheme::new(FluxKind::Hllc), Reconstruction::minmod());
        let cells = vec![State::from_slice(&[1.3, 0.2, -0.4]); 30];
        let d = s.rhs(&cells, 1e-3).unwrap();
        assert!(d.iter().all(|v| v.max_abs() < 1e-14));
    }

    #[test]
    fn dam_break_derivative_is_local_to_the_jump() {
        let (s, cells) = dam_break_solver(8, FluxKind::Rusanov, Reconstruction::FirstOrder);
        let d = s.rhs(&cells, 1e-3).unwrap();
        for (c, v) in d.iter().enumerate() {
            if c == 3 || c == 4 {
                assert!(v.max_abs() > 0.0);
            } else {
                assert_eq!(v.max_abs(), 0.0, "cell {c}");
            }
        }
    }

    #[test]
    fn derivative_sums_to_zero_on_periodic_domain() {
        let (s, _) = dam_break_solver(16, FluxKind::Roe, Reconstruction::minmod());
        let s = s.with_bc(BoundaryCondition::periodic());
        let cells: Vec<State> = (0..16)
            .map(|i| State::from_slice(&[1.0 + 0.3 * (i as f64).sin(), 0.1 * (i as f64).cos()]))
            .collect();
        let d = s.rhs(&cells, 1e-3).unwrap();
        let total: f64 = d.iter().map(|v| v[0]).sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn zero_end_time_returns_initial_state() {
        let (s, cells) = dam_break_solver(8, FluxKind::Hll, Reconstruction::minmod());
        let out = s.run(cells.clone(), &StepControl::adaptive(0.3, 0.0), None).unwrap();
        assert_eq!(out.cells, cells);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn run_lands_on_end_time() {
        let (s, cells) = dam_break_solver(32, FluxKind::Hlle, Reconstruction::minmod());
        let out = s.run(cells, &StepControl::adaptive(0.3, 0.05), Some(1)).unwrap();
        assert_eq!(out.time, 0.05);
        assert_eq!(out.history.len() as u64, out.steps + 1);
        assert!(out.history.windows(2).all(|w| w[1].time > w[0].time));
    }

    #[test]
    fn negative_depth_is_reported_with_cell() {
        let (s, mut cells) = dam_break_solver(8, FluxKind::Rusanov, Reconstruction::FirstOrder);
        cells[5][0] = -1.0;
        let err = s.rhs(&cells, 1e-3).unwrap_err();
        assert!(matches!(err, Error::Domain { cell: Some(_), .. }), "{err}");
    }

    #[test]
    fn sphere_mismatch_is_rejected() {
        let model = EquationModel::new(System::Swe1D);
        let grid = Grid::Sphere(Arc::new(SphereGrid::build(8, 4, 1.0).unwrap()));
        let s = Solver::new(model, grid, FluxScheme::new(FluxKind::Roe), Reconstruction::FirstOrder);
        assert!(s.validate().is_err());
    }
}
