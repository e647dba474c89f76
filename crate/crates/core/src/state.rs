//! Fixed-capacity conserved-variable vectors and the PDE system tags.
//!
//! Every system stores its conserved variables in the same order:
//! the mass-like scalar first (`h` or `rho`), then the momentum
//! components, then the total energy for the Euler systems. Unused
//! trailing slots stay zero, so plain vector arithmetic never mixes them in.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct State(pub [f64; MAX_VARS]);

impl State {
    pub const ZERO: State = State([0.0; MAX_VARS]);

    pub fn from_slice(values: &[f64]) -> Self {
        assert!(values.len() <= MAX_VARS, "too many components");
        let mut s = State::ZERO;
        s.0[..values.len()].copy_from_slice(values);
        s
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        State(self.0.map(f))
    }

    pub fn zip_with(self, other: State, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self;
        for (o, b) in out.0.iter_mut().zip(other.0) {
            *o = f(*o, b);
        }
        out
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl AddAssign for State {
    fn add_assign(&mut self, rhs: State) {
        *self = *self + rhs;
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl SubAssign for State {
    fn sub_assign(&mut self, rhs: State) {
        *self = *self - rhs;
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, rhs: f64) -> State {
        self.map(|a| a * rhs)
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        self.map(|a| -a)
    }
}

impl Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for State {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// The PDE systems the solvers understand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum System {
    Swe1D,
    Swe2D,
    SweSphere,
    Euler1D,
    Euler2D,
}

impl System {
    pub const ALL: [System; 5] = [
        System::Swe1D,
        System::Swe2D,
        System::SweSphere,
        System::Euler1D,
        System::Euler2D,
    ];

    /// Number of conserved components.
    pub fn ncomp(self) -> usize {
        match self {
            System::Swe1D => 2,
            System::Swe2D => 3,
            System::SweSphere => 4,
            System::Euler1D => 3,
            System::Euler2D => 4,
        }
    }

    /// Number of momentum components (stored at indices `1..=momentum_dims`).
    pub fn momentum_dims(self) -> usize {
        match self {
            System::Swe1D | System::Euler1D => 1,
            System::Swe2D | System::Euler2D => 2,
            System::SweSphere => 3,
        }
    }

    pub fn is_swe(self) -> bool {
        matches!(self, System::Swe1D | System::Swe2D | System::SweSphere)
    }

    pub fn has_energy(self) -> bool {
        !self.is_swe()
    }

    /// Spatial dimension of the grid the system lives on (the sphere grid is
    /// logically two-dimensional).
    pub fn grid_dims(self) -> usize {
        match self {
            System::Swe1D | System::Euler1D => 1,
            _ => 2,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            System::Swe1D => 0,
            System::Swe2D => 1,
            System::SweSphere => 2,
            System::Euler1D => 3,
            System::Euler2D => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<System> {
        System::ALL.into_iter().find(|s| s.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            System::Swe1D => "swe1d",
            System::Swe2D => "swe2d",
            System::SweSphere => "swe_sphere",
            System::Euler1D => "euler1d",
            System::Euler2D => "euler2d",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        System::ALL
            .into_iter()
            .find(|sys| sys.name() == lower)
            .ok_or_else(|| Error::config(format!("unknown system '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_leaves_unused_slots_zero() {
        let a = State::from_slice(&[1.0, 2.0]);
        let b = State::from_slice(&[0.5, -1.0]);
        let c = (a + b) * 2.0 - b;
        assert_eq!(c.0, [2.5, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn system_tags_round_trip() {
        for sys in System::ALL {
            assert_eq!(System::from_tag(sys.tag()), Some(sys));
            assert_eq!(sys.name().parse::<System>().unwrap(), sys);
        }
        assert!(System::from_tag(9).is_none());
        assert!("swe3d".parse::<System>().is_err());
    }
}
