use approx::assert_abs_diff_eq;
use nalgebra::DVector;
use proptest::prelude::*;

use super::*;
use crate::control::{stability_verdict, Alpha, GainSet, Gains, SynthesisRecipe};
use crate::dynamics::{closed_loop_matrix, OutputMask, VehicleParams};
use crate::graph::{Topology, TopologyKind};
use crate::Error;

const TAUS: [f64; 7] = [0.40, 0.55, 0.32, 0.44, 0.38, 0.51, 0.29];

fn table_gains() -> Vec<Gains> {
    let kp = [3.00, 1.30, 2.31, 1.65, 3.83, 2.42, 2.91];
    let kv = [3.40, 3.55, 3.32, 3.44, 3.38, 3.51, 3.29];
    let ka = [2.00, 2.62, 2.87, 2.97, 3.07, 3.70, 2.79];
    (0..7).map(|i| Gains::new(kp[i], kv[i], ka[i])).collect()
}

fn perturbations(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let x = i as f64;
            [0.8 - 0.3 * x, 0.2 * (x - 2.0), 0.1 * (-1.0f64).powi(i as i32)]
        })
        .collect()
}

fn cruising(kind: TopologyKind, horizon: f64, dt: f64) -> Scenario {
    let mut s = Scenario::linear(
        &TAUS,
        Topology::standard(kind, 7).unwrap(),
        Controller::Explicit(table_gains()),
        LeaderProfile::constant(20.0),
    );
    s.initial_errors = perturbations(7);
    s.integration = Integration {
        method: Method::Rk4,
        dt,
        horizon,
    };
    s
}

/// Stacks per-follower errors in the `(p̂ block, v̂ block, â block)` order.
fn stacked(errors: &[[f64; 3]]) -> DVector<f64> {
    let n = errors.len();
    DVector::from_fn(3 * n, |r, _| errors[r % n][r / n])
}

#[test]
fn matches_the_matrix_exponential() {
    for kind in TopologyKind::ALL {
        let s = cruising(kind, 8.0, 0.01);
        let traj = simulate(&s).unwrap();
        let gains = s.resolve_gains().unwrap();
        let a_hat = closed_loop_matrix(&TAUS, &gains, &s.topology).unwrap();
        let e0 = stacked(&s.initial_errors);
        let expected = (a_hat * 8.0).exp() * &e0;
        let got = stacked(traj.final_errors());
        let rel = (&got - &expected).norm() / expected.norm();
        assert!(rel < 1e-6, "{kind}: relative error {rel}");
        assert_eq!(traj.len(), 801);
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 8.0, epsilon = 1e-12);
    }
}

#[test]
fn integrator_is_fourth_order() {
    let run = |dt: f64| {
        let traj = simulate(&cruising(TopologyKind::Tpf, 4.0, dt)).unwrap();
        stacked(traj.final_errors())
    };
    let reference = run(0.01 / 16.0);
    let coarse = (run(0.02) - &reference).norm();
    let fine = (run(0.01) - &reference).norm();
    let ratio = coarse / fine;
    assert!((13.0..=19.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn forward_euler_is_first_order() {
    let run = |dt: f64| {
        let mut s = cruising(TopologyKind::Pf, 4.0, dt);
        s.integration.method = Method::ForwardEuler;
        stacked(simulate(&s).unwrap().final_errors())
    };
    let reference = run(0.01 / 16.0);
    let ratio = (run(0.02) - &reference).norm() / (run(0.01) - &reference).norm();
    assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn equilibrium_is_invariant() {
    for kind in TopologyKind::ALL {
        let mut s = cruising(kind, 20.0, 0.01);
        s.initial_errors.clear();
        let traj = simulate(&s).unwrap();
        for row in &traj.errors {
            for e in row {
                assert!(e.iter().all(|x| x.abs() <= 1e-9), "{kind}: {e:?}");
            }
        }
        assert_eq!(convergence_time(&traj, 0.1).unwrap(), 0.0);
        for i in 0..7 {
            assert!(max_spacing_error(&traj, i).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn spacing_error_scales_linearly() {
    let base = cruising(TopologyKind::Plf, 10.0, 0.01);
    let mut doubled = base.clone();
    for e in &mut doubled.initial_errors {
        for x in e.iter_mut() {
            *x *= 2.0;
        }
    }
    let a = simulate(&base).unwrap();
    let b = simulate(&doubled).unwrap();
    for i in 0..7 {
        let ma = max_spacing_error(&a, i).unwrap();
        let mb = max_spacing_error(&b, i).unwrap();
        assert_abs_diff_eq!(mb, 2.0 * ma, epsilon = 1e-9 * (1.0 + ma));
    }
}

#[test]
fn trajectory_layout() {
    let mut s = cruising(TopologyKind::Pf, 1.0, 0.25);
    s.spacing = 15.0;
    let traj = simulate(&s).unwrap();
    assert_eq!(traj.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(traj.followers(), 7);
    for k in 0..traj.len() {
        assert_eq!(traj.states[k].len(), 7);
        assert_eq!(traj.errors[k].len(), 7);
        assert_eq!(traj.inputs[k].len(), 7);
        let l = traj.leader[k];
        for i in 0..7 {
            let [p, v, a] = traj.states[k][i];
            let [ep, ev, ea] = traj.errors[k][i];
            assert_abs_diff_eq!(ep, p - l.position + (i + 1) as f64 * 15.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ev, v - l.velocity, epsilon = 1e-12);
            assert_abs_diff_eq!(ea, a - l.acceleration, epsilon = 1e-12);
        }
    }
    assert!(traj.torque.is_none() && traj.sliding.is_none());
    for (got, want) in traj.errors[0].iter().zip(&s.initial_errors) {
        for c in 0..3 {
            assert_abs_diff_eq!(got[c], want[c], epsilon = 1e-12);
        }
    }
}

#[test]
fn validation_rejects_bad_scenarios() {
    let good = cruising(TopologyKind::Pf, 1.0, 0.01);
    assert!(good.validate().is_ok());

    let mut s = good.clone();
    s.integration.dt = 0.0;
    assert!(simulate(&s).is_err());
    let mut s = good.clone();
    s.integration.horizon = 0.005;
    assert!(simulate(&s).is_err());
    let mut s = good.clone();
    s.spacing = -1.0;
    assert!(simulate(&s).is_err());
    let mut s = good.clone();
    s.vehicles[2] = VehicleParams::linear(-0.3);
    assert!(simulate(&s).is_err());
    let mut s = good.clone();
    s.initial_errors.pop();
    assert!(matches!(simulate(&s), Err(Error::DimensionMismatch(_))));
    let mut s = good.clone();
    s.plant = Plant::Nonlinear;
    assert!(simulate(&s).is_err());
    let mut s = good;
    s.controller = Controller::Explicit(vec![Gains::new(1.0, 1.0, 1.0); 3]);
    assert!(simulate(&s).is_err());
}

#[test]
fn blowup_is_reported_with_its_time() {
    let mut s = cruising(TopologyKind::Pf, 60.0, 0.01);
    s.controller = Controller::Explicit(vec![Gains::new(1e6, -1e6, 0.0); 7]);
    match simulate(&s) {
        Err(Error::NumericalBlowup { time }) => assert!(time > 0.0 && time < 60.0),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn table_gains_converge_on_eq39() {
    let mut s = cruising(TopologyKind::Pf, 60.0, 0.01);
    s.initial_errors.clear();
    s.leader = LeaderProfile::eq39();
    let traj = simulate(&s).unwrap();
    let last = worst_position_error(&traj).pop().unwrap();
    assert!(last < 1e-3, "{last}");
    assert!(convergence_time(&traj, 0.1).unwrap() > 3.0);
}

#[test]
fn ramp_leader_leaves_a_constant_offset() {
    let mut s = cruising(TopologyKind::Plf, 60.0, 0.01);
    s.initial_errors.clear();
    s.leader = LeaderProfile::eq40();
    let traj = simulate(&s).unwrap();
    let k = traj.len() - 1;
    for i in 0..7 {
        let p = traj.errors[k][i][0];
        let rate = traj.errors[k][i][1];
        assert!(p.abs() > 0.01, "follower {i}: {p}");
        assert!(rate.abs() < 1e-3, "follower {i}: {rate}");
    }
}

#[test]
fn nonlinear_plant_with_exact_estimates_is_the_linear_plant() {
    let n = 4;
    let params: Vec<_> = (1..=n)
        .map(|i| {
            let actual = VehicleParams::reference_nonlinear(i).nonlinear.unwrap().actual;
            VehicleParams::nonlinear(actual, actual)
        })
        .collect();
    let topology = Topology::standard(TopologyKind::Tplf, n).unwrap();
    let gains = table_gains()[..n].to_vec();
    let mut nl = Scenario {
        vehicles: params.clone(),
        topology: topology.clone(),
        controller: Controller::Explicit(gains.clone()),
        mask: OutputMask::FULL,
        spacing: 20.0,
        leader: LeaderProfile::eq39(),
        initial_errors: vec![],
        plant: Plant::Nonlinear,
        robust: None,
        integration: Integration {
            method: Method::Rk4,
            dt: 0.005,
            horizon: 20.0,
        },
    };
    nl.initial_errors = perturbations(n);
    let mut lin = nl.clone();
    lin.plant = Plant::Linear;
    let a = simulate(&nl).unwrap();
    let b = simulate(&lin).unwrap();
    assert!(a.torque.is_some());
    for (ra, rb) in a.errors.iter().zip(&b.errors) {
        for (ea, eb) in ra.iter().zip(rb) {
            for c in 0..3 {
                assert_abs_diff_eq!(ea[c], eb[c], epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn sliding_variable_stays_zero_without_mismatch() {
    let mut s = cruising(TopologyKind::Pf, 10.0, 0.01);
    s.robust = Some(0.3);
    let traj = simulate(&s).unwrap();
    let sliding = traj.sliding.as_ref().unwrap();
    // On the exact linear plant s' = -k_s sign(s), so s only chatters near 0.
    for row in sliding {
        for x in row {
            assert!(x.abs() <= 0.3 * 0.01 + 1e-12, "{x}");
        }
    }
}

#[test]
fn robust_nonlinear_platoon_converges() {
    let n = 7;
    let s = Scenario {
        vehicles: (1..=n).map(VehicleParams::reference_nonlinear).collect(),
        topology: Topology::standard(TopologyKind::Pf, n).unwrap(),
        controller: Controller::Synthesis(SynthesisRecipe::uniform(n, 3.0, Alpha::Auto)),
        mask: OutputMask::FULL,
        spacing: 20.0,
        leader: LeaderProfile::eq39(),
        initial_errors: vec![],
        plant: Plant::Nonlinear,
        robust: Some(0.3),
        integration: Integration::default(),
    };
    let traj = simulate(&s).unwrap();
    assert!(worst_position_error(&traj).pop().unwrap() < 0.1);
    assert!(traj.sliding.is_some());
}

#[test]
fn single_cell_sweep_equals_a_run() {
    let mut base = Scenario::linear(
        &TAUS,
        Topology::standard(TopologyKind::Pf, 7).unwrap(),
        Controller::Synthesis(SynthesisRecipe::uniform(7, 5.0, Alpha::Auto)),
        LeaderProfile::eq39(),
    );
    base.integration.horizon = 40.0;
    let cells = sweep(&base, &[5.0], &[TopologyKind::Tpf], 0.1).unwrap();
    let mut direct = base.clone();
    direct.topology = Topology::standard(TopologyKind::Tpf, 7).unwrap();
    let tc = convergence_time(&simulate(&direct).unwrap(), 0.1).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].outcome, CellOutcome::Converged(tc));

    let grid = sweep(&base, &[1.0, 7.0], &TopologyKind::ALL, 0.1).unwrap();
    assert_eq!(grid.len(), 8);
    assert_eq!((grid[5].epsilon, grid[5].kind), (7.0, TopologyKind::Plf));

    let mut short = base.clone();
    short.integration.horizon = 5.0;
    let cells = sweep(&short, &[1.0], &[TopologyKind::Pf], 0.1).unwrap();
    assert_eq!(cells[0].outcome, CellOutcome::NotConverged);

    let mut explicit = base;
    explicit.controller = Controller::Explicit(table_gains());
    assert!(sweep(&explicit, &[1.0], &[TopologyKind::Pf], 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verdict_predicts_decay_or_growth(
        n in 1usize..5,
        taus in proptest::collection::vec(0.2f64..0.8, 4),
        kp in proptest::collection::vec(0.5f64..3.0, 4),
        kv_scale in proptest::collection::vec(0.3f64..3.0, 4),
        ka in proptest::collection::vec(0.0f64..2.0, 4),
        kind in proptest::sample::select(TopologyKind::ALL.to_vec()),
    ) {
        let topology = Topology::standard(kind, n).unwrap();
        let dps = topology.degree_plus_pin();
        let gains: Vec<_> = (0..n)
            .map(|i| {
                let bound = taus[i] * kp[i] / (1.0 + ka[i] * dps[i]);
                Gains::new(kp[i], bound * kv_scale[i], ka[i])
            })
            .collect();
        let set = GainSet::new(gains.clone(), OutputMask::FULL);
        let verdict = stability_verdict(&taus[..n], &set, &topology).unwrap();
        let a_hat = closed_loop_matrix(&taus[..n], &set, &topology).unwrap();
        let abscissa = a_hat.complex_eigenvalues().iter().map(|l| l.re).fold(f64::MIN, f64::max);
        prop_assume!(abscissa.abs() > 0.05);

        let mut s = Scenario::linear(&taus[..n], topology, Controller::Explicit(gains), LeaderProfile::constant(15.0));
        s.initial_errors = perturbations(n);
        s.integration.horizon = 60.0;
        s.integration.dt = 0.01;
        let traj = simulate(&s).unwrap();
        let norm = |k: usize| stacked(&traj.errors[k]).norm();
        let mid = norm(traj.len() / 2);
        let tail = norm(traj.len() - 1);
        if verdict.overall {
            prop_assert!(abscissa < 0.0);
            prop_assert!(tail < mid, "stable but {} -> {}", mid, tail);
        } else {
            prop_assert!(abscissa > 0.0);
            prop_assert!(tail > mid, "unstable but {} -> {}", mid, tail);
        }
    }
}
