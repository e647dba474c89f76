//! Explicit time steppers and CFL step control.

use std::ops::{Add, Mul};
use std::str::FromStr;

use crate::equations::EquationModel;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::State;

pub const DEFAULT_CFL: f64 = 0.3;
/// Resolution the fixed-step protocol is calibrated at.
pub const BASELINE_RESOLUTION: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepMode {
    Adaptive,
    /// A constant step, optionally rescaled by `128 / nx`.
    Fixed { dt: f64, scale_with_resolution: bool },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub cfl: f64,
    pub mode: StepMode,
    pub t_end: f64,
    /// Upper bound on any step, also used when all wave speeds vanish.
    pub dt_max: f64,
}

impl StepControl {
    pub fn adaptive(cfl: f64, t_end: f64) -> Self {
        StepControl {
            cfl,
            mode: StepMode::Adaptive,
            t_end,
            dt_max: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::config(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::config("dt_max must be positive"));
        }
        if let StepMode::Fixed { dt, .. } = self.mode {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::config(format!("fixed_dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

/// Largest stable step for `cells` on `grid`, clipped to land on `t_end`.
pub fn compute_dt(control: &StepControl, model: &EquationModel, cells: &[State], grid: &Grid, t: f64) -> Result<f64> {
    let remaining = control.t_end - t;
    if remaining <= 0.0 {
        return Ok(0.0);
    }
    let dt = match control.mode {
        StepMode::Fixed {
            dt,
            scale_with_resolution,
        } => {
            if scale_with_resolution {
                dt * BASELINE_RESOLUTION as f64 / grid.dims().0 as f64
            } else {
                dt
            }
        }
        StepMode::Adaptive => {
            let inv = max_inverse_time(model, cells, grid)?;
            if inv > 0.0 {
                control.cfl / inv
            } else {
                f64::INFINITY
            }
        }
    };
    let dt = dt.min(control.dt_max);
    if !dt.is_finite() {
        return Ok(remaining);
    }
    Ok(if dt >= remaining { remaining } else { dt })
}

/// `max_cells |lambda| / length`, the reciprocal of the CFL-limited step at cfl = 1.
fn max_inverse_time(model: &EquationModel, cells: &[State], grid: &Grid) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (c, q) in cells.iter().enumerate() {
        model.check(q).map_err(|e| e.at_cell(c))?;
        let cs = model.signal_speed(q);
        let inv = match grid {
            Grid::Line(g) => ((q[1] / q[0]).abs() + cs) / g.dx,
            Grid::Plane(g) => {
                let ix = ((q[1] / q[0]).abs() + cs) / g.dx;
                let iy = ((q[2] / q[0]).abs() + cs) / g.dy;
                ix.max(iy)
            }
            Grid::Sphere(s) => model.max_wave_speed(q) / s.cfl_length[c],
        };
        if !inv.is_finite() {
            return Err(Error::domain("non-finite wave speed").at_cell(c));
        }
        worst = worst.max(inv);
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stepper {
    Euler,
    Heun,
    TvdRk3,
}

impl Stepper {
    pub fn name(self) -> &'static str {
        match self {
            Stepper::Euler => "euler",
            Stepper::Heun => "heun",
            Stepper::TvdRk3 => "tvd_rk3",
        }
    }

    /// Advance `q` by `dt`, calling `after_stage` on every stage result.
    pub fn step<T, L, P>(self, q: &[T], dt: f64, rhs: L, after_stage: P) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
        L: FnMut(&[T]) -> Result<Vec<T>>,
        P: FnMut(&mut [T]),
    {
        match self {
            Stepper::Euler => step_euler(q, dt, rhs, after_stage),
            Stepper::Heun => step_heun(q, dt, rhs, after_stage),
            Stepper::TvdRk3 => step_tvd_rk3(q, dt, rhs, after_stage),
        }
    }
}

impl FromStr for Stepper {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(Stepper::Euler),
            "heun" | "rk2" => Ok(Stepper::Heun),
            "tvd_rk3" | "rk3" => Ok(Stepper::TvdRk3),
            other => Err(Error::config(format!("unknown time stepper '{other}'"))),
        }
    }
}

/// `a * q + b * (r + dt * l)` elementwise.
fn combine<T>(a: f64, q: &[T], b: f64, r: &[T], dt: f64, l: &[T]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    q.iter()
        .zip(r)
        .zip(l)
        .map(|((&q, &r), &l)| q * a + (r + l * dt) * b)
        .collect()
}

fn checked_len<T>(q: &[T], l: Vec<T>) -> Result<Vec<T>> {
    if l.len() != q.len() {
        return Err(Error::Shape(format!(
            "rhs returned {} values for {} unknowns",
            l.len(),
            q.len()
        )));
    }
    Ok(l)
}

pub fn step_euler<T, L, P>(q: &[T], dt: f64, mut rhs: L, mut after_stage: P) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    L: FnMut(&[T]) -> Result<Vec<T>>,
    P: FnMut(&mut [T]),
{
    if dt == 0.0 {
        return Ok(q.to_vec());
    }
    let l = checked_len(q, rhs(q)?)?;
    let mut out: Vec<T> = q.iter().zip(&l).map(|(&q, &l)| q + l * dt).collect();
    after_stage(&mut out);
    Ok(out)
}

/// Heun's method: `q1 = q + dt L(q)`, `q' = q/2 + q1/2 + dt/2 L(q1)`.
pub fn step_heun<T, L, P>(q: &[T], dt: f64, mut rhs: L, mut after_stage: P) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    L: FnMut(&[T]) -> Result<Vec<T>>,
    P: FnMut(&mut [T]),
{
    if dt == 0.0 {
        return Ok(q.to_vec());
    }
    let l0 = checked_len(q, rhs(q)?)?;
    let mut q1: Vec<T> = q.iter().zip(&l0).map(|(&q, &l)| q + l * dt).collect();
    after_stage(&mut q1);
    let l1 = checked_len(q, rhs(&q1)?)?;
    let mut out = combine(0.5, q, 0.5, &q1, dt, &l1);
    after_stage(&mut out);
    Ok(out)
}

/// Three-stage TVD Runge-Kutta with weights (3/4, 1/4) and (1/3, 2/3).
pub fn step_tvd_rk3<T, L, P>(q: &[T], dt: f64, mut rhs: L, mut after_stage: P) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    L: FnMut(&[T]) -> Result<Vec<T>>,
    P: FnMut(&mut [T]),
{
    if dt == 0.0 {
        return Ok(q.to_vec());
    }
    let l0 = checked_len(q, rhs(q)?)?;
    let mut q1: Vec<T> = q.iter().zip(&l0).map(|(&q, &l)| q + l * dt).collect();
    after_stage(&mut q1);
    let l1 = checked_len(q, rhs(&q1)?)?;
    let mut q2 = combine(0.75, q, 0.25, &q1, dt, &l1);
    after_stage(&mut q2);
    let l2 = checked_len(q, rhs(&q2)?)?;
    let mut out = combine(1.0 / 3.0, q, 2.0 / 3.0, &q2, dt, &l2);
    after_stage(&mut out);
    Ok(out)
}
