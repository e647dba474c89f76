//! Interface flux formulas and the rotated-interface wrapper.
//!
//! [`interface_flux`] works in the face-normal frame: the first momentum
//! component of both states is the velocity normal to the interface and
//! the remaining momentum components are transverse. [`rotated_flux`]
//! brings Cartesian states into that frame and rotates the result back.

use std::fmt;
use std::str::FromStr;

use crate::equations::{dot, EquationModel};
use crate::error::{Error, Result};
use crate::state::State;

const NORMAL: [f64; 3] = [1.0, 0.0, 0.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FluxKind {
    LaxFriedrichs,
    Rusanov,
    Roe,
    Hll,
    Hlle,
    Hllc,
}

impl FluxKind {
    pub const ALL: [FluxKind; 6] = [
        FluxKind::LaxFriedrichs,
        FluxKind::Rusanov,
        FluxKind::Roe,
        FluxKind::Hll,
        FluxKind::Hlle,
        FluxKind::Hllc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FluxKind::LaxFriedrichs => "lf",
            FluxKind::Rusanov => "rusanov",
            FluxKind::Roe => "roe",
            FluxKind::Hll => "hll",
            FluxKind::Hlle => "hlle",
            FluxKind::Hllc => "hllc",
        }
    }
}

impl fmt::Display for FluxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        FluxKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::config(format!("unknown flux scheme '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxScheme {
    pub kind: FluxKind,
    /// `dx / dt`, only read by the Lax-Friedrichs flux.
    pub lf_ratio: f64,
    /// Harten entropy fix for the Roe flux.
    pub entropy_fix: bool,
}

impl FluxScheme {
    pub fn new(kind: FluxKind) -> Self {
        FluxScheme {
            kind,
            lf_ratio: 0.0,
            entropy_fix: false,
        }
    }

    pub fn lax_friedrichs(lf_ratio: f64) -> Self {
        FluxScheme {
            lf_ratio,
            ..FluxScheme::new(FluxKind::LaxFriedrichs)
        }
    }

    pub fn with_lf_ratio(self, lf_ratio: f64) -> Self {
        FluxScheme { lf_ratio, ..self }
    }
}

/// Numerical flux through an interface whose normal is the local x-axis.
pub fn interface_flux(
    scheme: &FluxScheme,
    model: &EquationModel,
    ql: &State,
    qr: &State,
) -> Result<State> {
    model.check(ql)?;
    model.check(qr)?;
    match scheme.kind {
        FluxKind::LaxFriedrichs => lax_friedrichs(scheme.lf_ratio, model, ql, qr),
        FluxKind::Rusanov => Ok(rusanov(model, ql, qr)),
        FluxKind::Roe => roe(model, ql, qr, scheme.entropy_fix),
        FluxKind::Hll => Ok(hll(model, ql, qr)),
        FluxKind::Hlle => hlle(model, ql, qr),
        FluxKind::Hllc => hllc(model, ql, qr),
    }
}

fn central(model: &EquationModel, ql: &State, qr: &State) -> (State, State, State) {
    let fl = model.flux_along(ql, NORMAL);
    let fr = model.flux_along(qr, NORMAL);
    (fl, fr, (fl + fr) * 0.5)
}

fn lax_friedrichs(ratio: f64, model: &EquationModel, ql: &State, qr: &State) -> Result<State> {
    if !(ratio > 0.0) {
        return Err(Error::Scheme(format!(
            "Lax-Friedrichs needs a positive dx/dt ratio, got {ratio}"
        )));
    }
    let (_, _, avg) = central(model, ql, qr);
    Ok(avg - (*qr - *ql) * (0.5 * ratio))
}

fn rusanov(model: &EquationModel, ql: &State, qr: &State) -> State {
    let (_, _, avg) = central(model, ql, qr);
    let (al, bl) = model.wave_speeds_unchecked(ql, NORMAL);
    let (ar, br) = model.wave_speeds_unchecked(qr, NORMAL);
    let radius = al.abs().max(bl.abs()).max(ar.abs()).max(br.abs());
    let s = 0.5 * radius;
    avg - (*qr - *ql) * s
}

/// Roe-averaged normal velocity, transverse velocities and signal speed.
struct RoeAverage {
    u: f64,
    v: [f64; 2],
    c: f64,
    /// Averaged total enthalpy (Euler only).
    enthalpy: f64,
}

fn roe_average(model: &EquationModel, ql: &State, qr: &State) -> Result<RoeAverage> {
    let (dl, dr) = (ql[0], qr[0]);
    if !(dl > 0.0 && dr > 0.0) {
        return Err(Error::Scheme(format!(
            "Roe average undefined for left/right {} ({dl}, {dr}); use the rusanov flux",
            if model.system.is_swe() { "depths" } else { "densities" }
        )));
    }
    let (sl, sr) = (dl.sqrt(), dr.sqrt());
    let w = 1.0 / (sl + sr);
    let avg = |a: f64, b: f64| (sl * a + sr * b) * w;
    let md = model.system.momentum_dims();
    let u = avg(ql[1] / dl, qr[1] / dr);
    let mut v = [0.0; 2];
    for k in 0..md - 1 {
        v[k] = avg(ql[2 + k] / dl, qr[2 + k] / dr);
    }
    if model.system.is_swe() {
        let c = (0.5 * model.g * (dl + dr)).sqrt();
        return Ok(RoeAverage {
            u,
            v,
            c,
            enthalpy: 0.0,
        });
    }
    let e = md + 1;
    let hl = (ql[e] + model.pressure_unchecked(ql)) / dl;
    let hr = (qr[e] + model.pressure_unchecked(qr)) / dr;
    let enthalpy = avg(hl, hr);
    let vsq = u * u + v[0] * v[0] + v[1] * v[1];
    let c2 = (model.gamma - 1.0) * (enthalpy - 0.5 * vsq);
    if !(c2 > 0.0) || !c2.is_finite() {
        return Err(Error::Scheme(format!(
            "Roe-averaged sound speed squared {c2} is not positive; use the rusanov flux"
        )));
    }
    Ok(RoeAverage {
        u,
        v,
        c: c2.sqrt(),
        enthalpy,
    })
}

fn roe(model: &EquationModel, ql: &State, qr: &State, entropy_fix: bool) -> Result<State> {
    let avg = roe_average(model, ql, qr)?;
    let (_, _, central_flux) = central(model, ql, qr);
    let d = *qr - *ql;
    let md = model.system.momentum_dims();
    let (u, c) = (avg.u, avg.c);
    let delta = 0.1 * c;
    let speed = |lambda: f64| {
        let a = lambda.abs();
        if entropy_fix && a < delta {
            (lambda * lambda + delta * delta) / (2.0 * delta)
        } else {
            a
        }
    };
    let (l1, l2, l3) = (speed(u - c), speed(u), speed(u + c));
    let mut diss = State::ZERO;

    if model.system.is_swe() {
        let a1 = ((u + c) * d[0] - d[1]) / (2.0 * c);
        let a3 = (d[1] - (u - c) * d[0]) / (2.0 * c);
        let acoustic = l1 * a1 + l3 * a3;
        diss[0] = acoustic;
        diss[1] = l1 * a1 * (u - c) + l3 * a3 * (u + c);
        for k in 0..md - 1 {
            let vk = avg.v[k];
            let shear = d[2 + k] - vk * d[0];
            diss[2 + k] = acoustic * vk + l2 * shear;
        }
    } else {
        let g1 = model.gamma - 1.0;
        let h = avg.enthalpy;
        let e = md + 1;
        let vsq = u * u + avg.v[0] * avg.v[0] + avg.v[1] * avg.v[1];
        let mut shear = [0.0; 2];
        let mut de_bar = d[e];
        for k in 0..md - 1 {
            shear[k] = d[2 + k] - avg.v[k] * d[0];
            de_bar -= shear[k] * avg.v[k];
        }
        let a2 = g1 / (c * c) * (d[0] * (h - u * u) + u * d[1] - de_bar);
        let a1 = (d[0] * (u + c) - d[1] - c * a2) / (2.0 * c);
        let a5 = d[0] - (a1 + a2);

        let (w1, w2, w5) = (l1 * a1, l2 * a2, l3 * a5);
        diss[0] = w1 + w2 + w5;
        diss[1] = w1 * (u - c) + w2 * u + w5 * (u + c);
        diss[e] = w1 * (h - u * c) + w2 * 0.5 * vsq + w5 * (h + u * c);
        for k in 0..md - 1 {
            let vk = avg.v[k];
            diss[2 + k] = (w1 + w2 + w5) * vk + l2 * shear[k];
            diss[e] += l2 * shear[k] * vk;
        }
    }
    Ok(central_flux - diss * 0.5)
}

fn hll_combine(fl: State, fr: State, ql: &State, qr: &State, sl: f64, sr: f64) -> State {
    if 0.0 <= sl {
        fl
    } else if sr < 0.0 {
        fr
    } else {
        let width = sr - sl;
        if width <= 0.0 {
            return (fl + fr) * 0.5;
        }
        (fl * sr - fr * sl + (*qr - *ql) * (sl * sr)) * (1.0 / width)
    }
}

fn hll(model: &EquationModel, ql: &State, qr: &State) -> State {
    let (fl, fr, _) = central(model, ql, qr);
    let (al, bl) = model.wave_speeds_unchecked(ql, NORMAL);
    let (ar, br) = model.wave_speeds_unchecked(qr, NORMAL);
    hll_combine(fl, fr, ql, qr, al.min(ar), bl.max(br))
}

fn hlle(model: &EquationModel, ql: &State, qr: &State) -> Result<State> {
    let (fl, fr, _) = central(model, ql, qr);
    let avg = roe_average(model, ql, qr)?;
    let (al, _) = model.wave_speeds_unchecked(ql, NORMAL);
    let (_, br) = model.wave_speeds_unchecked(qr, NORMAL);
    let sl = al.min(avg.u - avg.c).min(0.0);
    let sr = br.max(avg.u + avg.c).max(0.0);
    Ok(hll_combine(fl, fr, ql, qr, sl, sr))
}

fn hllc(model: &EquationModel, ql: &State, qr: &State) -> Result<State> {
    let (fl, fr, _) = central(model, ql, qr);
    let avg = roe_average(model, ql, qr)?;
    let (al, _) = model.wave_speeds_unchecked(ql, NORMAL);
    let (_, br) = model.wave_speeds_unchecked(qr, NORMAL);
    let sl = al.min(avg.u - avg.c);
    let sr = br.max(avg.u + avg.c);
    if 0.0 <= sl {
        return Ok(fl);
    }
    if sr <= 0.0 {
        return Ok(fr);
    }

    let (dl, dr) = (ql[0], qr[0]);
    let (ul, ur) = (ql[1] / dl, qr[1] / dr);
    let swe = model.system.is_swe();
    let (pl, pr) = if swe {
        (0.0, 0.0)
    } else {
        (model.pressure_unchecked(ql), model.pressure_unchecked(qr))
    };
    let s_star = if swe {
        (sl * dr * (ur - sr) - sr * dl * (ul - sl)) / (dr * (ur - sr) - dl * (ul - sl))
    } else {
        (pr - pl + dl * ul * (sl - ul) - dr * ur * (sr - ur)) / (dl * (sl - ul) - dr * (sr - ur))
    };
    if !s_star.is_finite() || s_star <= sl || s_star >= sr {
        return Ok(hll_combine(fl, fr, ql, qr, sl, sr));
    }

    let md = model.system.momentum_dims();
    let star = |q: &State, s: f64, u: f64, p: f64| {
        let rho = q[0];
        let factor = rho * (s - u) / (s - s_star);
        let mut out = State::ZERO;
        out[0] = factor;
        out[1] = factor * s_star;
        for k in 0..md - 1 {
            out[2 + k] = factor * q[2 + k] / rho;
        }
        if !swe {
            let e = md + 1;
            out[e] = factor * (q[e] / rho + (s_star - u) * (s_star + p / (rho * (s - u))));
        }
        out
    };

    if 0.0 <= s_star {
        Ok(fl + (star(ql, sl, ul, pl) - *ql) * sl)
    } else {
        Ok(fr + (star(qr, sr, ur, pr) - *qr) * sr)
    }
}

/// Orthonormal interface frame: normal, tangent and (on the sphere) radial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub n: [f64; 3],
    pub t: [f64; 3],
    pub r: [f64; 3],
}

impl Frame {
    /// Frame of a face whose normal is Cartesian axis `d`.
    pub fn axis_aligned(d: usize) -> Frame {
        match d {
            0 => Frame {
                n: [1.0, 0.0, 0.0],
                t: [0.0, 1.0, 0.0],
                r: [0.0, 0.0, 1.0],
            },
            1 => Frame {
                n: [0.0, 1.0, 0.0],
                t: [-1.0, 0.0, 0.0],
                r: [0.0, 0.0, 1.0],
            },
            _ => panic!("no axis-aligned frame for direction {d}"),
        }
    }

    /// In-plane frame with normal `(nx, ny)`.
    pub fn planar(nx: f64, ny: f64) -> Frame {
        Frame {
            n: [nx, ny, 0.0],
            t: [-ny, nx, 0.0],
            r: [0.0, 0.0, 1.0],
        }
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let vs = [self.n, self.t, self.r];
        for (i, a) in vs.iter().enumerate() {
            if (dot(*a, *a) - 1.0).abs() > tol {
                return Err(Error::Geometry(format!("frame vector {i} is not unit length")));
            }
            for b in &vs[i + 1..] {
                if dot(*a, *b).abs() > tol {
                    return Err(Error::Geometry("frame vectors are not orthogonal".into()));
                }
            }
        }
        Ok(())
    }

    /// Express the momentum of `q` in (normal, tangent, radial) components.
    pub fn to_local(&self, model: &EquationModel, q: &State) -> State {
        let md = model.system.momentum_dims();
        let m = model.momentum(q);
        let axes = [self.n, self.t, self.r];
        let mut out = *q;
        for (k, a) in axes.iter().enumerate().take(md) {
            out[1 + k] = (0..md).map(|j| m[j] * a[j]).sum();
        }
        out
    }

    /// Inverse of [`Frame::to_local`] (the transpose rotation).
    pub fn to_global(&self, model: &EquationModel, f: &State) -> State {
        let md = model.system.momentum_dims();
        let axes = [self.n, self.t, self.r];
        let mut out = *f;
        for j in 0..md {
            out[1 + j] = (0..md).map(|k| f[1 + k] * axes[k][j]).sum();
        }
        out
    }
}

/// Flux through a face with the given frame, returned in Cartesian components.
pub fn rotated_flux(
    scheme: &FluxScheme,
    model: &EquationModel,
    ql: &State,
    qr: &State,
    frame: &Frame,
) -> Result<State> {
    frame.check(1e-10)?;
    rotated_flux_unchecked(scheme, model, ql, qr, frame)
}

/// [`rotated_flux`] without the frame orthonormality check; for frames
/// validated once at grid construction.
pub fn rotated_flux_unchecked(
    scheme: &FluxScheme,
    model: &EquationModel,
    ql: &State,
    qr: &State,
    frame: &Frame,
) -> Result<State> {
    let l = frame.to_local(model, ql);
    let r = frame.to_local(model, qr);
    let f = interface_flux(scheme, model, &l, &r)?;
    Ok(frame.to_global(model, &f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::System;

    fn st(v: &[f64]) -> State {
        State::from_slice(v)
    }

    #[test]
    fn names_parse_case_insensitively() {
        for k in FluxKind::ALL {
            assert_eq!(k.name().to_uppercase().parse::<FluxKind>().unwrap(), k);
        }
        assert!("godunov".parse::<FluxKind>().is_err());
    }

    #[test]
    fn rusanov_dam_break_hand_value() {
        let model = EquationModel::new(System::Swe1D);
        let ql = st(&[1.0, 0.0]);
        let qr = st(&[0.35, 0.0]);
        let f = interface_flux(&FluxScheme::new(FluxKind::Rusanov), &model, &ql, &qr).unwrap();
        // Rusanov evaluated by hand: s = max(sqrt(g*1), sqrt(g*0.35)) / 2.
        let s = 0.5 * 9.8_f64.sqrt();
        let expected_mass = -s * (0.35 - 1.0);
        let expected_mom = 0.5 * (4.9 + 0.5 * 9.8 * 0.35 * 0.35);
        assert!((f[0] - expected_mass).abs() < 1e-14);
        assert!((f[1] - expected_mom).abs() < 1e-14);
    }

    #[test]
    fn lax_friedrichs_matches_scalar_formula() {
        let model = EquationModel::new(System::Swe1D);
        let ratio = 7.5;
        let eps = 1e-3;
        let ql = st(&[1.0, 0.0]);
        let qr = st(&[1.0, eps]);
        let f = interface_flux(&FluxScheme::lax_friedrichs(ratio), &model, &ql, &qr).unwrap();
        let fl = [0.0, 4.9];
        let fr = [eps, eps * eps + 4.9];
        let dq = [0.0, eps];
        for k in 0..2 {
            let expected = 0.5 * (fl[k] + fr[k]) - 0.5 * ratio * dq[k];
            assert!((f[k] - expected).abs() < 1e-14, "{k}");
        }
        assert!(interface_flux(&FluxScheme::new(FluxKind::LaxFriedrichs), &model, &ql, &qr).is_err());
    }

    #[test]
    fn roe_rejects_dry_state() {
        let mut model = EquationModel::new(System::Swe1D);
        model.strict_positivity = false;
        let err = interface_flux(
            &FluxScheme::new(FluxKind::Roe),
            &model,
            &st(&[0.0, 0.0]),
            &st(&[1.0, 0.0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("rusanov"));
    }

    #[test]
    fn roe_satisfies_the_jump_condition_on_a_single_shock() {
        // For a state pair joined by a single shock the Roe flux equals the
        // upwind physical flux.
        let model = EquationModel::new(System::Swe1D);
        let (hl, hr) = (2.0, 1.0);
        let g = model.g;
        // Stationary right state; left state on the shock Hugoniot locus.
        let ul = (hl - hr) * (g * (hl + hr) / (2.0 * hl * hr)).sqrt();
        let ql = st(&[hl, hl * ul]);
        let qr = st(&[hr, 0.0]);
        let f = interface_flux(&FluxScheme::new(FluxKind::Roe), &model, &ql, &qr).unwrap();
        let fl = model.flux_along(&ql, NORMAL);
        for k in 0..2 {
            assert!((f[k] - fl[k]).abs() < 1e-12, "{k}: {} vs {}", f[k], fl[k]);
        }
    }

    #[test]
    fn identity_frame_reproduces_interface_flux() {
        let model = EquationModel::new(System::Swe2D);
        let ql = st(&[1.2, 0.3, -0.2]);
        let qr = st(&[0.8, -0.1, 0.4]);
        let scheme = FluxScheme::new(FluxKind::Hllc);
        let a = interface_flux(&scheme, &model, &ql, &qr).unwrap();
        let b = rotated_flux(&scheme, &model, &ql, &qr, &Frame::axis_aligned(0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rotated_frame_consistency_gives_y_flux() {
        for sys in [System::Swe2D, System::Euler2D] {
            let model = EquationModel::new(sys);
            let q = if sys == System::Swe2D {
                st(&[1.3, 0.4, -0.7])
            } else {
                st(&[1.1, 0.3, -0.2, 3.0])
            };
            let expected = model.physical_flux(&q, [0.0, 1.0, 0.0]).unwrap();
            for kind in FluxKind::ALL {
                let scheme = FluxScheme {
                    lf_ratio: 3.0,
                    ..FluxScheme::new(kind)
                };
                let f = rotated_flux(&scheme, &model, &q, &q, &Frame::axis_aligned(1)).unwrap();
                for k in 0..sys.ncomp() {
                    assert!((f[k] - expected[k]).abs() < 1e-13, "{sys} {kind} {k}");
                }
            }
        }
    }

    #[test]
    fn non_orthonormal_frame_is_rejected() {
        let model = EquationModel::new(System::Swe2D);
        let q = st(&[1.0, 0.0, 0.0]);
        let frame = Frame {
            n: [1.0, 0.0, 0.0],
            t: [0.6, 0.8, 0.0],
            r: [0.0, 0.0, 1.0],
        };
        let err = rotated_flux(&FluxScheme::new(FluxKind::Roe), &model, &q, &q, &frame);
        assert!(matches!(err, Err(Error::Geometry(_))));
    }

    #[test]
    fn sphere_rotation_preserves_norms() {
        let model = EquationModel::new(System::SweSphere);
        let s = 1.0 / 3.0_f64.sqrt();
        let r = [s, s, s];
        let t = crate::equations::normalize([1.0, -1.0, 0.0]);
        let n = crate::equations::cross(t, r);
        let frame = Frame { n, t, r };
        frame.check(1e-12).unwrap();
        let q = st(&[2.0, 0.3, -0.5, 0.7]);
        let local = frame.to_local(&model, &q);
        let back = frame.to_global(&model, &local);
        let m2 = |q: &State| q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
        assert!((m2(&local) - m2(&q)).abs() < 1e-14);
        for k in 0..4 {
            assert!((back[k] - q[k]).abs() < 1e-15);
        }
        // Radial flux output of the local solve is what ends up along r.
        let qr = st(&[1.5, -0.2, 0.1, 0.2]);
        let scheme = FluxScheme::new(FluxKind::Roe);
        let f_local =
            interface_flux(&scheme, &model, &local, &frame.to_local(&model, &qr)).unwrap();
        let f = rotated_flux(&scheme, &model, &q, &qr, &frame).unwrap();
        let radial = f[1] * r[0] + f[2] * r[1] + f[3] * r[2];
        assert!((radial - f_local[3]).abs() < 1e-14);
    }
}
