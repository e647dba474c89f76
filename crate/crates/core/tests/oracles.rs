//! Exact Riemann solvers against values frozen from an independent bisection,
//! jump conditions across their shocks, and quadrature refinement.

use fvx::equations::{EquationModel, GRAVITY};
use fvx::grid::Grid1D;
use fvx::oracle::{
    exact_euler_riemann, exact_swe_dambreak, reference_field_with, EulerRiemann, Primitive, RiemannSolution,
    SweRiemann, Wave,
};
use fvx::{State, System};

// Frozen from a 200-step bisection of the depth and pressure functions
// written out longhand below.
const DAM_H_STAR: f64 = 0.6281584088876515;
const DAM_U_STAR: f64 = 1.2987519682392061;
const SOD_P_STAR: f64 = 0.30313017805064674;
const SOD_U_STAR: f64 = 0.9274526200489497;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m) > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    lo
}

fn swe_side(g: f64, h: f64, hk: f64) -> f64 {
    if h <= hk {
        2.0 * ((g * h).sqrt() - (g * hk).sqrt())
    } else {
        (h - hk) * (0.5 * g * (1.0 / h + 1.0 / hk)).sqrt()
    }
}

fn euler_side(gamma: f64, p: f64, rho: f64, pk: f64) -> f64 {
    if p > pk {
        let a = 2.0 / ((gamma + 1.0) * rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * pk;
        (p - pk) * (a / (p + b)).sqrt()
    } else {
        let c = (gamma * pk / rho).sqrt();
        2.0 * c / (gamma - 1.0) * ((p / pk).powf((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    }
}

fn sod() -> EulerRiemann {
    exact_euler_riemann(Primitive::new(1.0, 0.0, 1.0), Primitive::new(0.125, 0.0, 0.1), 1.4).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn dam_break_star_state_matches_bisection() {
    let h = bisect(|h| swe_side(GRAVITY, h, 1.0) + swe_side(GRAVITY, h, 0.35), 0.35, 1.0);
    assert!(close(h, DAM_H_STAR, 1e-15), "{h}");
    let s = exact_swe_dambreak(1.0, 0.35, GRAVITY).unwrap();
    assert!(close(s.h_star, DAM_H_STAR, 1e-12), "{}", s.h_star);
    assert!(close(s.u_star, DAM_U_STAR, 1e-12), "{}", s.u_star);
    assert!(matches!(s.left_wave(), Wave::Rarefaction { .. }));
    assert!(matches!(s.right_wave(), Wave::Shock { .. }));
}

#[test]
fn sod_star_state_matches_bisection() {
    let p = bisect(|p| euler_side(1.4, p, 1.0, 1.0) + euler_side(1.4, p, 0.125, 0.1), 1e-6, 1.0);
    assert!(close(p, SOD_P_STAR, 1e-14), "{p}");
    let s = sod();
    assert!(close(s.p_star, SOD_P_STAR, 1e-12), "{}", s.p_star);
    assert!(close(s.u_star, SOD_U_STAR, 1e-12), "{}", s.u_star);
    let (rho_l, rho_r) = s.star_densities();
    assert!(close(rho_l, 0.4263194281784951, 1e-10), "{rho_l}");
    assert!(close(rho_r, 0.265573711705307, 1e-10), "{rho_r}");
}

fn swe_flux(g: f64, q: State) -> [f64; 2] {
    [q[1], q[1] * q[1] / q[0] + 0.5 * g * q[0] * q[0]]
}

fn euler_flux(gamma: f64, q: State) -> [f64; 3] {
    let u = q[1] / q[0];
    let p = (gamma - 1.0) * (q[2] - 0.5 * q[0] * u * u);
    [q[1], q[1] * u + p, u * (q[2] + p)]
}

fn shock_speed(w: Wave) -> f64 {
    match w {
        Wave::Shock { speed } => speed,
        other => panic!("expected a shock, got {other:?}"),
    }
}

#[test]
fn dam_break_shock_satisfies_jump_conditions() {
    let s: SweRiemann = exact_swe_dambreak(1.0, 0.35, GRAVITY).unwrap();
    let speed = shock_speed(s.right_wave());
    let (ahead, behind) = (s.sample(speed + 1e-9), s.sample(speed - 1e-9));
    let (fa, fb) = (swe_flux(GRAVITY, ahead), swe_flux(GRAVITY, behind));
    for k in 0..2 {
        let lhs = speed * (behind[k] - ahead[k]);
        assert!(close(lhs, fb[k] - fa[k], 1e-12), "component {k}: {lhs} vs {}", fb[k] - fa[k]);
    }
}

#[test]
fn sod_shock_satisfies_jump_conditions() {
    let s = sod();
    let speed = shock_speed(s.right_wave());
    let (ahead, behind) = (s.sample(speed + 1e-9), s.sample(speed - 1e-9));
    let (fa, fb) = (euler_flux(1.4, ahead), euler_flux(1.4, behind));
    for k in 0..3 {
        let lhs = speed * (behind[k] - ahead[k]);
        assert!(close(lhs, fb[k] - fa[k], 1e-12), "component {k}: {lhs} vs {}", fb[k] - fa[k]);
    }
    // Pressure and velocity are continuous across the contact.
    let (l, r) = (s.sample_primitive(s.u_star - 1e-9), s.sample_primitive(s.u_star + 1e-9));
    assert!(close(l.p, r.p, 1e-12) && close(l.u, r.u, 1e-12));
    assert!(l.rho > r.rho);
}

/// Positions (at `t`) of every wave edge of the solution.
fn wave_edges(solution: &RiemannSolution, x0: f64, t: f64) -> Vec<f64> {
    let (left, right, contact) = match solution {
        RiemannSolution::Swe(s) => (s.left_wave(), s.right_wave(), None),
        RiemannSolution::Euler(e) => (e.left_wave(), e.right_wave(), Some(e.u_star)),
    };
    let mut xi = contact.into_iter().collect::<Vec<_>>();
    for w in [left, right] {
        match w {
            Wave::Shock { speed } => xi.push(speed),
            Wave::Rarefaction { head, tail } => xi.extend([head, tail]),
        }
    }
    xi.into_iter().map(|s| x0 + s * t).collect()
}

#[test]
fn three_and_five_point_averages_agree_away_from_wave_edges() {
    let g = EquationModel::new(System::Swe1D).g;
    let cases = [
        (RiemannSolution::Swe(exact_swe_dambreak(1.0, 0.35, g).unwrap()), 2),
        (RiemannSolution::Euler(sod()), 3),
    ];
    for (solution, ncomp) in cases {
        let (x0, t) = (0.5, 0.15);
        let grid = Grid1D::new(0.0, 1.0, 400).unwrap();
        let three = reference_field_with(&solution, &grid, t, x0, 3).unwrap();
        let five = reference_field_with(&solution, &grid, t, x0, 5).unwrap();
        let edges = wave_edges(&solution, x0, t);
        let mut checked = 0;
        for i in 0..grid.n_cells {
            let (a, b) = (grid.interface(i), grid.interface(i + 1));
            if edges.iter().any(|&e| e >= a && e <= b) {
                continue;
            }
            for k in 0..ncomp {
                let diff = (three[i][k] - five[i][k]).abs();
                assert!(diff < 1e-8, "cell {i} component {k}: {diff:e}");
            }
            checked += 1;
        }
        assert!(checked > 390);
    }
}
