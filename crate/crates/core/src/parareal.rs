//! The Parareal iteration over equal time slices, with the fine propagations
//! of each iteration distributed over a worker pool.
//!
//! Each iteration evaluates `F(y^k_n)` for all slices concurrently and then
//! runs the serial coarse correction sweep
//!
//! ```text
//! y^{k+1}_{n+1} = G(y^{k+1}_n) + F(y^k_n) − G(y^k_n)
//! ```
//!
//! The `G(y^k_n)` terms are kept from the previous sweep rather than being
//! recomputed. Every worker writes only its own slice and the sweep runs in a
//! fixed order, so results do not depend on the number of workers.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrators::{step_count, Propagator};
use crate::linalg::norm_inf;

/// Equal-length slices `t_n = n T / N` of `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSlicePartition {
    t_end: f64,
    slices: usize,
}

impl TimeSlicePartition {
    pub fn new(t_end: f64, slices: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Config(format!("final time must be positive, got {t_end}")));
        }
        if slices == 0 {
            return Err(Error::Config("need at least one time slice".into()));
        }
        Ok(Self { t_end, slices })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn boundary(&self, n: usize) -> f64 {
        if n == self.slices {
            self.t_end
        } else {
            n as f64 * self.t_end / self.slices as f64
        }
    }

    pub fn slice_length(&self) -> f64 {
        self.t_end / self.slices as f64
    }
}

pub struct PararealConfig {
    pub partition: TimeSlicePartition,
    pub coarse: Propagator,
    pub fine: Propagator,
    /// Number of Parareal iterations after the initial coarse sweep.
    pub max_iter: usize,
    /// Stop early once the defect falls to or below this value.
    pub stop_defect: Option<f64>,
    workers: usize,
    pool: Arc<rayon::ThreadPool>,
}

impl std::fmt::Debug for PararealConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PararealConfig")
            .field("partition", &self.partition)
            .field("coarse", &self.coarse)
            .field("fine", &self.fine)
            .field("max_iter", &self.max_iter)
            .field("stop_defect", &self.stop_defect)
            .field("workers", &self.workers)
            .finish()
    }
}

impl PararealConfig {
    pub fn new(
        partition: TimeSlicePartition,
        coarse: Propagator,
        fine: Propagator,
        max_iter: usize,
        workers: usize,
    ) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if coarse.system().dim() != fine.system().dim() {
            return Err(Error::Config(
                "coarse and fine propagators act on different systems".into(),
            ));
        }
        let len = partition.slice_length();
        for (which, p) in [("coarse", &coarse), ("fine", &fine)] {
            step_count(len, p.dt()).map_err(|_| {
                Error::Config(format!(
                    "slice length {len} is not a multiple of the {which} step {}",
                    p.dt()
                ))
            })?;
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            partition,
            coarse,
            fine,
            max_iter,
            stop_defect: None,
            workers,
            pool: Arc::new(pool),
        })
    }

    pub fn with_stop_defect(mut self, threshold: f64) -> Self {
        self.stop_defect = Some(threshold);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn dim(&self) -> usize {
        self.fine.system().dim()
    }

    fn check_initial_value(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: b.len(),
            });
        }
        Ok(())
    }

    fn slice(&self, n: usize) -> (f64, f64) {
        (self.partition.boundary(n), self.partition.boundary(n + 1))
    }
}

/// Iterates, fine reference and defect history of one Parareal run.
#[derive(Clone, Debug)]
pub struct PararealState {
    /// `iterates[k][n]` is `y^k_n`.
    pub iterates: Vec<Vec<Vec<f64>>>,
    /// Serial fine trajectory `y_0 … y_N`.
    pub fine_reference: Vec<Vec<f64>>,
    /// `defects[k]` is `d^k`.
    pub defects: Vec<f64>,
    /// `G(y^k_n)` for the latest iterate, reused by the next correction.
    coarse_of_latest: Vec<Vec<f64>>,
}

impl PararealState {
    /// Builds a state directly from a trajectory, e.g. to test the fixed
    /// point of the iteration. Coarse values are recomputed from `cfg`.
    pub fn from_iterate(
        cfg: &PararealConfig,
        fine_reference: Vec<Vec<f64>>,
        iterate: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = cfg.partition.slices();
        if iterate.len() != n + 1 || fine_reference.len() != n + 1 {
            return Err(Error::Dimension {
                expected: n + 1,
                found: iterate.len().min(fine_reference.len()),
            });
        }
        let coarse_of_latest = (0..n)
            .map(|i| {
                let (t0, t1) = cfg.slice(i);
                cfg.coarse.propagate(&iterate[i], t0, t1)
            })
            .collect::<Result<_>>()?;
        let mut state = Self {
            iterates: vec![iterate],
            fine_reference,
            defects: Vec::new(),
            coarse_of_latest,
        };
        state.defects.push(defect(&state, 0));
        Ok(state)
    }

    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn latest(&self) -> &[Vec<f64>] {
        self.iterates.last().expect("state holds at least iterate 0")
    }
}

/// Serial fine trajectory `y_{n+1} = F(y_n)`, `y_0 = b`.
pub fn run_fine_serial(cfg: &PararealConfig, b: &[f64]) -> Result<Vec<Vec<f64>>> {
    cfg.check_initial_value(b)?;
    let mut traj = Vec::with_capacity(cfg.partition.slices() + 1);
    traj.push(b.to_vec());
    for n in 0..cfg.partition.slices() {
        let (t0, t1) = cfg.slice(n);
        let next = cfg.fine.propagate(&traj[n], t0, t1)?;
        traj.push(next);
    }
    Ok(traj)
}

/// Iterate 0 from a serial coarse sweep.
pub fn initialize(cfg: &PararealConfig, b: &[f64], fine_reference: Vec<Vec<f64>>) -> Result<PararealState> {
    cfg.check_initial_value(b)?;
    let slices = cfg.partition.slices();
    if fine_reference.len() != slices + 1 {
        return Err(Error::Dimension {
            expected: slices + 1,
            found: fine_reference.len(),
        });
    }
    let mut y0 = Vec::with_capacity(slices + 1);
    y0.push(b.to_vec());
    for n in 0..slices {
        let (t0, t1) = cfg.slice(n);
        let next = cfg.coarse.propagate(&y0[n], t0, t1)?;
        y0.push(next);
    }
    let coarse_of_latest = y0[1..].to_vec();
    let mut state = PararealState {
        iterates: vec![y0],
        fine_reference,
        defects: Vec::new(),
        coarse_of_latest,
    };
    state.defects.push(defect(&state, 0));
    Ok(state)
}

/// One Parareal iteration: concurrent fine propagations, then the serial
/// coarse correction sweep.
pub fn iterate(cfg: &PararealConfig, state: &mut PararealState) -> Result<()> {
    let slices = cfg.partition.slices();
    let prev = state.latest();
    let fine_values: Vec<Vec<f64>> = cfg.pool.install(|| {
        (0..slices)
            .into_par_iter()
            .map(|n| {
                let (t0, t1) = cfg.slice(n);
                cfg.fine.propagate(&prev[n], t0, t1)
            })
            .collect::<Result<_>>()
    })?;

    let mut next = Vec::with_capacity(slices + 1);
    next.push(prev[0].clone());
    let mut coarse_of_next = Vec::with_capacity(slices);
    for n in 0..slices {
        let (t0, t1) = cfg.slice(n);
        let g_new = cfg.coarse.propagate(&next[n], t0, t1)?;
        let corrected = g_new
            .iter()
            .zip(&fine_values[n])
            .zip(&state.coarse_of_latest[n])
            .map(|((g, f), g_old)| (g + f) - g_old)
            .collect();
        next.push(corrected);
        coarse_of_next.push(g_new);
    }
    state.iterates.push(next);
    state.coarse_of_latest = coarse_of_next;
    let k = state.iterations();
    let d = defect(state, k);
    state.defects.push(d);
    Ok(())
}

/// `d^k = max_n ‖y_n − y^k_n‖_∞`
pub fn defect(state: &PararealState, k: usize) -> f64 {
    state.iterates[k]
        .iter()
        .zip(&state.fine_reference)
        .map(|(yk, yf)| {
            norm_inf(&yk.iter().zip(yf).map(|(a, b)| a - b).collect::<Vec<_>>())
        })
        .fold(0.0, f64::max)
}

/// Stacked Euclidean error `‖y − y^k‖₂` over all slices.
pub fn stacked_error_norm(state: &PararealState, k: usize) -> f64 {
    state.iterates[k]
        .iter()
        .zip(&state.fine_reference)
        .flat_map(|(yk, yf)| yk.iter().zip(yf).map(|(a, b)| (a - b) * (a - b)))
        .sum::<f64>()
        .sqrt()
}

/// A failed run, with whatever history was computed before the failure.
#[derive(Debug, thiserror::Error)]
#[error("parareal run failed after {} iterations: {source}", partial.as_ref().map_or(0, |s| s.iterations()))]
pub struct RunFailure {
    pub partial: Option<Box<PararealState>>,
    #[source]
    pub source: Error,
}

/// Fine reference, coarse initialization, then iterations until `max_iter`
/// or until the defect reaches `stop_defect`.
pub fn run(cfg: &PararealConfig, b: &[f64]) -> Result<PararealState, RunFailure> {
    let fail = |source, partial: Option<PararealState>| RunFailure {
        partial: partial.map(Box::new),
        source,
    };
    let reference = run_fine_serial(cfg, b).map_err(|e| fail(e, None))?;
    let mut state = initialize(cfg, b, reference).map_err(|e| fail(e, None))?;
    for _ in 0..cfg.max_iter {
        if let Some(stop) = cfg.stop_defect {
            if *state.defects.last().unwrap() <= stop {
                break;
            }
        }
        if let Err(e) = iterate(cfg, &mut state) {
            return Err(fail(e, Some(state)));
        }
    }
    Ok(state)
}
