//! Physical fluxes, characteristic speeds, the ideal-gas equation of state
//! and the source terms of the shallow water and Euler systems.

use crate::error::{Error, Result};
use crate::state::{State, System};

/// Gravity constant used throughout unless a run overrides it.
pub const GRAVITY: f64 = 9.8;
/// Earth rotation rate in rad/s.
pub const EARTH_OMEGA: f64 = 7.292e-5;
/// Earth radius in m.
pub const EARTH_RADIUS: f64 = 6.37122e6;
/// Seconds per day, the time scale of the nondimensional sphere runs.
pub const DAY: f64 = 86_400.0;

#[derive(Clone, Debug, PartialEq)]
pub struct EquationModel {
    pub system: System,
    pub g: f64,
    pub gamma: f64,
    /// Rotation rate, used by the Coriolis term on the sphere.
    pub omega: f64,
    /// Sphere radius.
    pub radius: f64,
    /// Manning roughness; zero disables bed friction.
    pub manning_n: f64,
    /// Reject non-positive depth, density and pressure with a domain error.
    pub strict_positivity: bool,
}

impl EquationModel {
    pub fn new(system: System) -> Self {
        EquationModel {
            system,
            g: GRAVITY,
            gamma: 1.4,
            omega: 0.0,
            radius: 1.0,
            manning_n: 0.0,
            strict_positivity: true,
        }
    }

    /// Spherical shallow water model in units where the length scale is the
    /// earth radius and the time scale is one day.
    pub fn earth_nondimensional() -> Self {
        EquationModel {
            g: GRAVITY * DAY * DAY / EARTH_RADIUS,
            omega: EARTH_OMEGA * DAY,
            radius: 1.0,
            ..EquationModel::new(System::SweSphere)
        }
    }

    pub fn validate_parameters(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::config(format!("g must be positive, got {}", self.g)));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::config(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::config("radius must be positive"));
        }
        if self.manning_n < 0.0 {
            return Err(Error::config("manning_n must be non-negative"));
        }
        Ok(())
    }

    fn md(&self) -> usize {
        self.system.momentum_dims()
    }

    fn energy_index(&self) -> usize {
        self.md() + 1
    }

    /// Check the state invariants (finite values, positive depth/density,
    /// positive pressure for Euler). A no-op when strict checking is off.
    pub fn check(&self, q: &State) -> Result<()> {
        if !self.strict_positivity {
            return Ok(());
        }
        if !q.is_finite() {
            return Err(Error::domain(format!("non-finite state {:?}", q.0)));
        }
        if !(q[0] > 0.0) {
            let name = if self.system.is_swe() { "h" } else { "rho" };
            return Err(Error::domain(format!("{name} = {} is not positive", q[0])));
        }
        if self.system.has_energy() {
            let p = self.pressure_unchecked(q);
            if !(p > 0.0) {
                return Err(Error::domain(format!("pressure {p} is not positive")));
            }
        }
        Ok(())
    }

    pub fn momentum(&self, q: &State) -> [f64; 3] {
        let mut m = [0.0; 3];
        m[..self.md()].copy_from_slice(&q.0[1..=self.md()]);
        m
    }

    /// Squared velocity magnitude.
    pub fn speed_sq(&self, q: &State) -> f64 {
        let m = self.momentum(q);
        (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) / (q[0] * q[0])
    }

    pub fn pressure_unchecked(&self, q: &State) -> f64 {
        let m = self.momentum(q);
        let msq = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        (self.gamma - 1.0) * (q[self.energy_index()] - 0.5 * msq / q[0])
    }

    /// Ideal-gas pressure `p = (gamma - 1)(E - |m|^2 / (2 rho))`.
    pub fn pressure(&self, q: &State) -> Result<f64> {
        if !self.system.has_energy() {
            return Err(Error::domain("pressure is only defined for the Euler systems"));
        }
        if self.strict_positivity && !(q[0] > 0.0) {
            return Err(Error::domain(format!("rho = {} is not positive", q[0])));
        }
        let p = self.pressure_unchecked(q);
        if self.strict_positivity && !(p > 0.0) {
            return Err(Error::domain(format!("pressure {p} is not positive")));
        }
        Ok(p)
    }

    /// Pressure-like term of the momentum flux: `g h^2 / 2` or `p`.
    fn pressure_term(&self, q: &State) -> f64 {
        if self.system.is_swe() {
            0.5 * self.g * q[0] * q[0]
        } else {
            self.pressure_unchecked(q)
        }
    }

    /// Gravity-wave celerity or sound speed.
    pub fn signal_speed(&self, q: &State) -> f64 {
        if self.system.is_swe() {
            (self.g * q[0]).sqrt()
        } else {
            (self.gamma * self.pressure_unchecked(q) / q[0]).sqrt()
        }
    }

    /// Flux matrix contracted with `n` (not necessarily unit). No validity
    /// checks; `n` components beyond the momentum dimension are ignored.
    pub fn flux_along(&self, q: &State, n: [f64; 3]) -> State {
        let md = self.md();
        let m = self.momentum(q);
        let mn: f64 = (0..md).map(|k| m[k] * n[k]).sum();
        let un = mn / q[0];
        let p = self.pressure_term(q);
        let mut f = State::ZERO;
        f[0] = mn;
        for k in 0..md {
            f[1 + k] = m[k] * un + p * n[k];
        }
        if self.system.has_energy() {
            let e = self.energy_index();
            f[e] = (q[e] + p) * un;
        }
        f
    }

    /// Physical flux in direction `n`.
    pub fn physical_flux(&self, q: &State, n: [f64; 3]) -> Result<State> {
        self.check(q)?;
        Ok(self.flux_along(q, n))
    }

    /// `(lambda_min, lambda_max)` along the unit direction `n`.
    pub fn wave_speeds(&self, q: &State, n: [f64; 3]) -> Result<(f64, f64)> {
        self.check(q)?;
        Ok(self.wave_speeds_unchecked(q, n))
    }

    pub fn wave_speeds_unchecked(&self, q: &State, n: [f64; 3]) -> (f64, f64) {
        let m = self.momentum(q);
        let un = (0..self.md()).map(|k| m[k] * n[k]).sum::<f64>() / q[0];
        let c = self.signal_speed(q);
        (un - c, un + c)
    }

    /// Largest characteristic speed in any direction, `|u| + c`.
    pub fn max_wave_speed(&self, q: &State) -> f64 {
        self.speed_sq(q).sqrt() + self.signal_speed(q)
    }

    /// Bed-slope source `(0, -g h dz/dx, -g h dz/dy)`.
    pub fn bathymetry_source(&self, q: &State, slope: (f64, f64)) -> State {
        let mut s = State::ZERO;
        if !self.system.is_swe() {
            return s;
        }
        let slopes = [slope.0, slope.1, 0.0];
        for k in 0..self.md() {
            s[1 + k] = -self.g * q[0] * slopes[k];
        }
        s
    }

    /// Manning bed friction, with `C_f = g n^2 / h^(1/3)`.
    pub fn friction_source(&self, q: &State) -> State {
        let mut s = State::ZERO;
        if self.manning_n == 0.0 || !self.system.is_swe() {
            return s;
        }
        let h = q[0];
        let cf = self.g * self.manning_n * self.manning_n / h.cbrt();
        let speed = self.speed_sq(q).sqrt();
        for k in 0..self.md() {
            s[1 + k] = -cf * (q[1 + k] / h) * speed;
        }
        s
    }

    /// Coriolis source on the sphere: `-(2 omega / a) z_c (x_hat x m)`.
    pub fn coriolis_source(&self, center: [f64; 3], q: &State) -> State {
        let mut s = State::ZERO;
        if self.system != System::SweSphere || self.omega == 0.0 {
            return s;
        }
        let xhat = normalize(center);
        let m = self.momentum(q);
        let c = cross(xhat, m);
        let f = 2.0 * self.omega * center[2] / self.radius;
        for k in 0..3 {
            s[1 + k] = -f * c[k];
        }
        s
    }
}

/// Remove the radial part of the momentum: `m' = m - (x_hat . m) x_hat`.
pub fn project_tangent(center: [f64; 3], q: &State) -> State {
    let xhat = normalize(center);
    let m = [q[1], q[2], q[3]];
    let radial = dot(xhat, m);
    let mut out = *q;
    for k in 0..3 {
        out[1 + k] = m[k] - radial * xhat[k];
    }
    out
}

/// Unit vector along coordinate axis `d`.
pub fn axis(d: usize) -> [f64; 3] {
    let mut a = [0.0; 3];
    a[d] = 1.0;
    a
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
