//! Invariants checked on random inputs.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fvx::equations::EquationModel;
use fvx::field::{fill_ghosts, BoundaryCondition, ConservedField};
use fvx::flux::{interface_flux, rotated_flux, FluxKind, FluxScheme, Frame};
use fvx::grid::{Grid, Grid1D};
use fvx::initial::euler_state;
use fvx::nn::{infer_boundary_states, Approach, Conv, Layer, Padding, WeightBundle};
use fvx::reconstruction::reconstruct_minmod;
use fvx::solver::{Reconstruction, Solver};
use fvx::{State, System};

const CARTESIAN: [System; 4] = [System::Swe1D, System::Swe2D, System::Euler1D, System::Euler2D];

fn scheme(kind: FluxKind) -> FluxScheme {
    match kind {
        FluxKind::LaxFriedrichs => FluxScheme::lax_friedrichs(4.0),
        k => FluxScheme::new(k),
    }
}

/// A valid state of `system` from depth/density `a`, velocity `(u, v)` and pressure `p`.
fn make_state(model: &EquationModel, a: f64, u: f64, v: f64, p: f64) -> State {
    match model.system {
        System::Swe1D => State::from_slice(&[a, a * u]),
        System::Swe2D => State::from_slice(&[a, a * u, a * v]),
        _ => euler_state(model, a, u, v, p),
    }
}

fn primitive() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.05..10.0f64, -5.0..5.0f64, -5.0..5.0f64, 0.05..10.0f64)
}

fn rotate(model: &EquationModel, q: State, angle: f64) -> State {
    let (c, s) = (angle.cos(), angle.sin());
    let mut out = q;
    if model.system.momentum_dims() >= 2 {
        out[1] = c * q[1] - s * q[2];
        out[2] = s * q[1] + c * q[2];
    }
    out
}

fn periodic_line(n: usize) -> Grid {
    Grid::Line(Grid1D::new(0.0, 1.0, n).unwrap())
}

/// Rough but moderate data: componentwise limited faces of much wilder data
/// can have negative pressure.
fn random_cells(rng: &mut ChaCha8Rng, model: &EquationModel, n: usize) -> Vec<State> {
    (0..n)
        .map(|_| {
            make_state(
                model,
                rng.gen_range(0.7..1.3),
                rng.gen_range(-0.5..0.5),
                0.0,
                rng.gen_range(0.7..1.3),
            )
        })
        .collect()
}

fn boundary_bundle(rng: &mut ChaCha8Rng) -> WeightBundle {
    let mut w = |n: usize| (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect::<Vec<f64>>();
    WeightBundle {
        approach: Approach::BoundaryStates,
        system: System::Swe1D,
        normalization: vec![(1.0, 0.5); 2],
        layers: vec![
            Layer::Conv1D(Conv {
                in_ch: 2,
                out_ch: 5,
                kernel: vec![3],
                weights: w(30),
                bias: w(5),
            }),
            Layer::Gelu,
            Layer::Conv1D(Conv {
                in_ch: 5,
                out_ch: 4,
                kernel: vec![3],
                weights: w(60),
                bias: w(4),
            }),
            Layer::Softplus,
        ],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn equal_states_give_the_physical_flux(sys in 0..4usize, kind in 0..6usize, (a, u, v, p) in primitive()) {
        let model = EquationModel::new(CARTESIAN[sys]);
        let q = make_state(&model, a, u, v, p);
        let f = interface_flux(&scheme(FluxKind::ALL[kind]), &model, &q, &q).unwrap();
        let exact = model.physical_flux(&q, [1.0, 0.0, 0.0]).unwrap();
        for k in 0..model.system.ncomp() {
            prop_assert!((f[k] - exact[k]).abs() <= 1e-12 * exact[k].abs().max(1.0), "{k}: {} vs {}", f[k], exact[k]);
        }
    }

    #[test]
    fn fluxes_commute_with_rotations(
        euler in any::<bool>(),
        kind in 0..6usize,
        l in primitive(),
        r in primitive(),
        normal in 0.0..std::f64::consts::TAU,
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let model = EquationModel::new(if euler { System::Euler2D } else { System::Swe2D });
        let s = scheme(FluxKind::ALL[kind]);
        let ql = make_state(&model, l.0, l.1, l.2, l.3);
        let qr = make_state(&model, r.0, r.1, r.2, r.3);
        let f = rotated_flux(&s, &model, &ql, &qr, &Frame::planar(normal.cos(), normal.sin())).unwrap();
        let turned = Frame::planar((normal + angle).cos(), (normal + angle).sin());
        let g = rotated_flux(&s, &model, &rotate(&model, ql, angle), &rotate(&model, qr, angle), &turned).unwrap();
        let expected = rotate(&model, f, angle);
        for k in 0..model.system.ncomp() {
            prop_assert!((g[k] - expected[k]).abs() <= 1e-10 * expected[k].abs().max(1.0), "{k}: {} vs {}", g[k], expected[k]);
        }
    }

    #[test]
    fn minmod_faces_stay_within_neighbouring_values(seed in any::<u64>(), n in 3..40usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = EquationModel::new(System::Euler1D);
        let grid = periodic_line(n);
        let cells = random_cells(&mut rng, &model, n);
        let mut field = ConservedField::from_interior(System::Euler1D, n, 1, 2, &cells).unwrap();
        fill_ghosts(&mut field, &BoundaryCondition::periodic(), &grid);
        let faces = reconstruct_minmod(&field, false);
        for i in 0..n {
            let around = [cells[(i + n - 1) % n], cells[i], cells[(i + 1) % n]];
            for k in 0..3 {
                let lo = around.iter().map(|q| q[k]).fold(f64::INFINITY, f64::min);
                let hi = around.iter().map(|q| q[k]).fold(f64::NEG_INFINITY, f64::max);
                for face in [faces.west[i][k], faces.east[i][k]] {
                    prop_assert!(face >= lo - 1e-14 && face <= hi + 1e-14, "cell {i} comp {k}: {face} not in [{lo}, {hi}]");
                }
            }
        }
    }

    #[test]
    fn periodic_steps_conserve_totals(seed in any::<u64>(), euler in any::<bool>(), kind in 0..6usize, second in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = EquationModel::new(if euler { System::Euler1D } else { System::Swe1D });
        let n = 32;
        let cells = random_cells(&mut rng, &model, n);
        let recon = if second { Reconstruction::minmod() } else { Reconstruction::FirstOrder };
        let solver = Solver::new(model.clone(), periodic_line(n), FluxScheme::new(FluxKind::ALL[kind]), recon)
            .with_bc(BoundaryCondition::periodic());
        let dt = 0.1 / cells.iter().map(|q| model.max_wave_speed(q)).fold(0.0, f64::max) / n as f64;
        let next = solver.step(&cells, dt).unwrap();
        for k in 0..model.system.ncomp() {
            let before: f64 = cells.iter().map(|q| q[k]).sum();
            let after: f64 = next.iter().map(|q| q[k]).sum();
            let scale: f64 = cells.iter().map(|q| q[k].abs()).sum();
            prop_assert!((after - before).abs() <= 1e-13 * scale, "component {k}: {before} -> {after}");
        }
    }

    #[test]
    fn boundary_state_networks_keep_depth_positive_and_commute_with_shifts(seed in any::<u64>(), shift in 1..24usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bundle = Arc::new(boundary_bundle(&mut rng));
        let n = 24;
        let cells: Vec<State> = (0..n)
            .map(|_| State::from_slice(&[rng.gen_range(0.01..8.0), rng.gen_range(-20.0..20.0)]))
            .collect();
        let shifted: Vec<State> = (0..n).map(|i| cells[(i + n - shift) % n]).collect();
        let infer = |c: &[State]| {
            let field = ConservedField::from_interior(System::Swe1D, n, 1, 2, c).unwrap();
            infer_boundary_states(&bundle, &field, Padding::Periodic).unwrap()
        };
        let (a, b) = (infer(&cells), infer(&shifted));
        for i in 0..n {
            prop_assert!(a.west[i][0] > 0.0 && a.east[i][0] > 0.0);
            let j = (i + shift) % n;
            prop_assert_eq!(a.west[i], b.west[j]);
            prop_assert_eq!(a.east[i], b.east[j]);
        }
    }
}
