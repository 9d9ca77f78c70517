mod common;

use std::sync::Arc;

use common::{euler_factor, radau_factor, scalar_system};
use parareal_core::integrators::{step_implicit_euler, step_radau3};
use parareal_core::linalg::{norm_inf, seeded_vector};
use parareal_core::{assemble, build_strip_mesh, DiscreteSystem, Method, NuProfile, Propagator, StripCoefficients, StripGeometry};
use parareal_core::fem::project_initial_condition;
use parareal_core::InitialCondition;

fn heat(jump: f64, h: f64) -> (Arc<DiscreteSystem>, Vec<f64>) {
    let mesh = build_strip_mesh(&StripGeometry::centered(0.2).unwrap(), h).unwrap();
    let sys = assemble(&mesh, &StripCoefficients::with_jump(0.01, jump).unwrap()).unwrap();
    let b = project_initial_condition(&mesh, &InitialCondition::default(), &sys);
    (Arc::new(sys), b)
}

fn scalar_error(method: Method, dt: f64) -> f64 {
    let p = Propagator::new(scalar_system(1.0), method, dt, NuProfile::Constant).unwrap();
    (p.propagate(&[1.0], 0.0, 1.0).unwrap()[0] - (-1f64).exp()).abs()
}

#[test]
fn empirical_orders() {
    for (method, dts, expect, tol) in [
        (Method::ImplicitEuler, [0.02, 0.01, 0.005], 1.0, 0.1),
        (Method::RadauIIA3, [0.1, 0.05, 0.025], 3.0, 0.2),
    ] {
        let e: Vec<f64> = dts.iter().map(|&dt| scalar_error(method, dt)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - expect).abs() <= tol, "{method:?}: order {order}");
        }
    }
}

#[test]
fn scalar_decay_over_long_horizon() {
    // matches the stability-function recursion to rounding
    let sys = scalar_system(1.0);
    let ie = Propagator::new(sys.clone(), Method::ImplicitEuler, 0.01, NuProfile::Constant).unwrap();
    let ra = Propagator::new(sys, Method::RadauIIA3, 0.005, NuProfile::Constant).unwrap();
    let y_ie = ie.propagate(&[1.0], 0.0, 4.0).unwrap()[0];
    let y_ra = ra.propagate(&[1.0], 0.0, 4.0).unwrap()[0];
    let o_ie = euler_factor(-0.01).powi(400);
    let o_ra = radau_factor(-0.005).powi(800);
    assert!((y_ie - o_ie).abs() <= 1e-13);
    assert!((y_ra - o_ra).abs() <= 1e-13);
    let exact = (-4f64).exp();
    assert!((y_ie - exact).abs() > 1e-5, "implicit Euler should carry O(dt) error");
    assert!((y_ra - exact).abs() < 1e-9);
}

#[test]
fn radau_stability_value() {
    let sys = DiscreteSystem::scalar(1.0, 1.0);
    let y = step_radau3(&[1.0], 0.0, 1.0, &sys, &NuProfile::Constant).unwrap();
    assert!((y[0] - 4.0 / 11.0).abs() < 1e-12);
    assert!((radau_factor(-1.0) - 4.0 / 11.0).abs() < 1e-15);
}

#[test]
fn zero_stiffness_is_identity() {
    let sys = DiscreteSystem::scalar(1.0, 0.0);
    let nu = NuProfile::Cosine { alpha: 1.0 };
    assert_eq!(step_implicit_euler(&[2.5], 0.3, 0.1, &sys, &nu).unwrap(), vec![2.5]);
    assert!((step_radau3(&[2.5], 0.3, 0.1, &sys, &nu).unwrap()[0] - 2.5).abs() < 1e-15);
}

#[test]
fn propagators_are_linear() {
    let (sys, _) = heat(100.0, 0.125);
    let x = seeded_vector(sys.dim(), 1);
    let y = seeded_vector(sys.dim(), 2);
    let (a, b) = (0.7, -2.3);
    let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
    for method in [Method::ImplicitEuler, Method::RadauIIA3] {
        let p = Propagator::new(sys.clone(), method, 0.01, NuProfile::Erf { alpha: 10.0 }).unwrap();
        let (fx, fy, fc) = (
            p.propagate(&x, 1.9, 2.1).unwrap(),
            p.propagate(&y, 1.9, 2.1).unwrap(),
            p.propagate(&combo, 1.9, 2.1).unwrap(),
        );
        let lin: Vec<f64> = fx.iter().zip(&fy).map(|(p, q)| a * p + b * q).collect();
        assert!(common::max_abs_diff(&fc, &lin) <= 1e-11, "{method:?}");
    }
}

#[test]
fn implicit_euler_contracts_in_mass_norm() {
    let (sys, _) = heat(10000.0, 0.1);
    let p = Propagator::new(sys.clone(), Method::ImplicitEuler, 0.01, NuProfile::Cosine { alpha: 1.0 }).unwrap();
    let mut y = seeded_vector(sys.dim(), 3);
    let mut t = 0.0;
    for _ in 0..50 {
        let next = p.step(&y, t).unwrap();
        assert!(sys.mass.quadratic_form(&next) <= sys.mass.quadratic_form(&y) * (1.0 + 1e-14));
        y = next;
        t += 0.01;
    }
}

#[test]
fn composition_over_adjacent_intervals() {
    let (sys, b) = heat(100.0, 0.125);
    for method in [Method::ImplicitEuler, Method::RadauIIA3] {
        for nu in [NuProfile::Constant, NuProfile::Erf { alpha: 10.0 }, NuProfile::Cosine { alpha: 10.0 }] {
            let p = Propagator::new(sys.clone(), method, 0.005, nu).unwrap();
            let whole = p.propagate(&b, 0.0, 0.2).unwrap();
            let half = p.propagate(&b, 0.0, 0.1).unwrap();
            let parts = p.propagate(&half, 0.1, 0.2).unwrap();
            assert!(common::max_abs_diff(&whole, &parts) <= 1e-13, "{method:?} {nu:?}");
        }
    }
}

#[test]
fn single_step_equals_one_step_propagation() {
    let (sys, b) = heat(1.0, 0.125);
    let p = Propagator::new(sys, Method::RadauIIA3, 0.05, NuProfile::Erf { alpha: 1.0 }).unwrap();
    assert_eq!(p.step(&b, 1.0).unwrap(), p.propagate(&b, 1.0, 1.05).unwrap());
}

#[test]
fn implicit_euler_respects_initial_maximum() {
    let (sys, b) = heat(100.0, 0.04);
    let p = Propagator::new(sys, Method::ImplicitEuler, 0.01, NuProfile::Constant).unwrap();
    let bound = norm_inf(&b);
    let mut y = b;
    for i in 0..100 {
        y = p.step(&y, i as f64 * 0.01).unwrap();
        assert!(norm_inf(&y) <= bound + 1e-10);
    }
}

#[test]
fn rejects_non_integer_step_counts() {
    let p = Propagator::new(scalar_system(1.0), Method::ImplicitEuler, 0.03, NuProfile::Constant).unwrap();
    assert!(p.propagate(&[1.0], 0.0, 0.1).is_err());
    assert!(p.propagate(&[1.0, 2.0], 0.0, 0.09).is_err());
    assert!(Propagator::new(scalar_system(1.0), Method::ImplicitEuler, 0.0, NuProfile::Constant).is_err());
}
