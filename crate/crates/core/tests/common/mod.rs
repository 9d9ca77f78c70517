//! Helpers shared by the integration tests. Everything marked "oracle" is
//! written from scratch here and does not call into the library's numerics.

#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::Arc;

use parareal_core::experiment::ExperimentConfig;
use parareal_core::linalg::DenseMatrix;
use parareal_core::{DiscreteSystem, Method, NuProfile, PararealConfig, Propagator, TimeSlicePartition};

pub fn scalar_system(lambda: f64) -> Arc<DiscreteSystem> {
    Arc::new(DiscreteSystem::scalar(1.0, lambda))
}

/// Parareal on `y' = -λ y` with implicit Euler as coarse and RadauIIA as
/// fine propagator.
pub fn scalar_config(
    lambda: f64,
    t_end: f64,
    slices: usize,
    coarse_dt: f64,
    fine_dt: f64,
    max_iter: usize,
    workers: usize,
) -> PararealConfig {
    let sys = scalar_system(lambda);
    let g = Propagator::new(sys.clone(), Method::ImplicitEuler, coarse_dt, NuProfile::Constant).unwrap();
    let f = Propagator::new(sys, Method::RadauIIA3, fine_dt, NuProfile::Constant).unwrap();
    PararealConfig::new(TimeSlicePartition::new(t_end, slices).unwrap(), g, f, max_iter, workers).unwrap()
}

/// Oracle: implicit Euler amplification factor for `z = -λ dt`.
pub fn euler_factor(z: f64) -> f64 {
    1.0 / (1.0 - z)
}

/// Oracle: RadauIIA(3) stability function, the (1,2) Padé approximant.
pub fn radau_factor(z: f64) -> f64 {
    (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0)
}

/// Oracle: literal Parareal recursion with every propagation recomputed.
/// Returns `d^0 … d^{iterations}`.
pub fn brute_force_defects<G, F>(b: f64, slices: usize, iterations: usize, g: G, f: F) -> Vec<f64>
where
    G: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
{
    let mut exact = vec![b];
    for n in 0..slices {
        exact.push(f(exact[n]));
    }
    let mut y = vec![b];
    for n in 0..slices {
        y.push(g(y[n]));
    }
    let defect = |y: &[f64]| {
        y.iter()
            .zip(&exact)
            .map(|(a, e)| (a - e).abs())
            .fold(0.0, f64::max)
    };
    let mut out = vec![defect(&y)];
    for _ in 0..iterations {
        let mut next = vec![b];
        for n in 0..slices {
            next.push(g(next[n]) + f(y[n]) - g(y[n]));
        }
        y = next;
        out.push(defect(&y));
    }
    out
}

/// Same recursion for vector states, with the propagators supplied as
/// closures over whole slices.
pub fn brute_force_trajectories<G, F>(
    b: &[f64],
    slices: usize,
    iterations: usize,
    g: G,
    f: F,
) -> Vec<Vec<Vec<f64>>>
where
    G: Fn(usize, &[f64]) -> Vec<f64>,
    F: Fn(usize, &[f64]) -> Vec<f64>,
{
    let mut y = vec![b.to_vec()];
    for n in 0..slices {
        let next = g(n, &y[n]);
        y.push(next);
    }
    let mut all = vec![y.clone()];
    for _ in 0..iterations {
        let mut next = vec![b.to_vec()];
        for n in 0..slices {
            let gn = g(n, &next[n]);
            let fo = f(n, &y[n]);
            let go = g(n, &y[n]);
            next.push(gn.iter().zip(&fo).zip(&go).map(|((a, b), c)| a + b - c).collect());
        }
        y = next;
        all.push(y.clone());
    }
    all
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Small heat configuration used by several suites: coarse mesh, few slices.
pub fn small_heat_config(slices: usize, jump: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::baseline(0.2, jump);
    c.t_end = 0.1 * slices as f64;
    c.slices = slices;
    c.target_h = 0.2;
    c.refinements = 0;
    c.max_iter = slices;
    c.workers = 2;
    c
}

/// One-sided Jacobi SVD: rotates column pairs until mutually orthogonal and
/// returns the column norms.
pub fn jacobi_singular_values(a: &DenseMatrix) -> Vec<f64> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}
