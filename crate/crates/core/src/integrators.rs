//! One-slice propagators for `M y' = -ν(t) K y`: implicit Euler (coarse) and
//! two-stage RadauIIA (fine).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::DiscreteSystem;
use crate::linalg::{erf, solve_block2_preconditioned, BandedCholesky, BlockSystem, SolverConfig};

/// Time-dependent factor of the diffusion coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NuProfile {
    /// `ν(t) = 1`
    Constant,
    /// `ν(t) = ½(1 + cos(α π t / 2))`
    Cosine { alpha: f64 },
    /// `ν(t) = ½(1 + erf(α (t − 2)))`
    Erf { alpha: f64 },
}

impl NuProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            NuProfile::Constant => 1.0,
            NuProfile::Cosine { alpha } => {
                0.5 * (1.0 + (alpha * std::f64::consts::FRAC_PI_2 * t).cos())
            }
            NuProfile::Erf { alpha } => 0.5 * (1.0 + erf(alpha * (t - 2.0))),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, NuProfile::Constant)
    }

    pub fn name(&self) -> &'static str {
        match self {
            NuProfile::Constant => "constant",
            NuProfile::Cosine { .. } => "cosine",
            NuProfile::Erf { .. } => "erf",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            NuProfile::Constant => None,
            NuProfile::Cosine { alpha } | NuProfile::Erf { alpha } => Some(alpha),
        }
    }

    /// Builds a profile from its name and rate; `alpha` is ignored for
    /// `constant`.
    pub fn from_name(name: &str, alpha: f64) -> Result<Self> {
        let p = match name {
            "constant" => NuProfile::Constant,
            "cosine" => NuProfile::Cosine { alpha },
            "erf" => NuProfile::Erf { alpha },
            other => {
                return Err(Error::Config(format!(
                    "unknown nu profile '{other}' (expected constant, cosine or erf)"
                )))
            }
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self.alpha() {
            Some(a) if !(a > 0.0) || !a.is_finite() => Err(Error::Config(format!(
                "alpha must be positive for the {} profile, got {a}",
                self.name()
            ))),
            _ => Ok(()),
        }
    }
}

pub fn nu_eval(profile: &NuProfile, t: f64) -> f64 {
    profile.eval(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "implicit-euler")]
    ImplicitEuler,
    #[serde(rename = "radau-iia3")]
    RadauIIA3,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ImplicitEuler => "implicit-euler",
            Method::RadauIIA3 => "radau-iia3",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "implicit-euler" => Ok(Method::ImplicitEuler),
            "radau-iia3" => Ok(Method::RadauIIA3),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected implicit-euler or radau-iia3)"
            ))),
        }
    }
}

/// Two-stage RadauIIA: nodes and coefficient matrix.
const RADAU_C: [f64; 2] = [1.0 / 3.0, 1.0];
const RADAU_A: [[f64; 2]; 2] = [[5.0 / 12.0, -1.0 / 12.0], [3.0 / 4.0, 1.0 / 4.0]];

const FACTOR_CACHE_CAPACITY: usize = 16;

/// Cholesky factors of `M + c K`, keyed by the bits of `c`.
#[derive(Default)]
struct FactorCache {
    entries: Mutex<HashMap<u64, Arc<BandedCholesky>>>,
}

impl FactorCache {
    fn get(&self, system: &DiscreteSystem, shift: f64) -> Result<Arc<BandedCholesky>> {
        let key = shift.to_bits();
        if let Some(f) = self.entries.lock().unwrap().get(&key) {
            return Ok(Arc::clone(f));
        }
        let factor = Arc::new(shifted_factor(system, shift)?);
        let mut entries = self.entries.lock().unwrap();
        if entries.len() >= FACTOR_CACHE_CAPACITY {
            entries.clear();
        }
        entries.insert(key, Arc::clone(&factor));
        Ok(factor)
    }
}

fn shifted_factor(system: &DiscreteSystem, shift: f64) -> Result<BandedCholesky> {
    let a = system.mass.linear_combination(1.0, &system.stiffness, shift)?;
    BandedCholesky::factor(&a)
}

/// A one-step method with fixed step size bound to a discrete system.
///
/// Stepping is a pure function of its inputs. Factorizations of the shifted
/// matrices are memoized internally, which is safe to share across threads
/// because the memoized values are deterministic.
pub struct Propagator {
    system: Arc<DiscreteSystem>,
    method: Method,
    dt: f64,
    nu: NuProfile,
    solver: SolverConfig,
    cache: FactorCache,
}

impl fmt::Debug for Propagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Propagator")
            .field("method", &self.method)
            .field("dt", &self.dt)
            .field("nu", &self.nu)
            .field("dofs", &self.system.dim())
            .finish()
    }
}

impl Clone for Propagator {
    fn clone(&self) -> Self {
        Self {
            system: Arc::clone(&self.system),
            method: self.method,
            dt: self.dt,
            nu: self.nu,
            solver: self.solver,
            cache: FactorCache::default(),
        }
    }
}

impl Propagator {
    pub fn new(system: Arc<DiscreteSystem>, method: Method, dt: f64, nu: NuProfile) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        nu.validate()?;
        Ok(Self {
            system,
            method,
            dt,
            nu,
            solver: SolverConfig::default(),
            cache: FactorCache::default(),
        })
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Result<Self> {
        solver.validate()?;
        self.solver = solver;
        Ok(self)
    }

    pub fn system(&self) -> &Arc<DiscreteSystem> {
        &self.system
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nu(&self) -> &NuProfile {
        &self.nu
    }

    /// Number of steps covering an interval of `length`, which must be an
    /// integer multiple of `dt` to 1e-12 relative.
    pub fn steps_for(&self, length: f64) -> Result<usize> {
        step_count(length, self.dt)
    }

    /// One step from `(t, y)` to `t + dt`.
    pub fn step(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        if y.len() != self.system.dim() {
            return Err(Error::Dimension {
                expected: self.system.dim(),
                found: y.len(),
            });
        }
        match self.method {
            Method::ImplicitEuler => self.implicit_euler(y, t),
            Method::RadauIIA3 => self.radau3(y, t),
        }
    }

    /// Integrates from `t_start` to `t_end` with `(t_end - t_start) / dt`
    /// steps; step `i` starts at `t_start + i·dt`.
    pub fn propagate(&self, y: &[f64], t_start: f64, t_end: f64) -> Result<Vec<f64>> {
        if !(t_end > t_start) {
            return Err(Error::Config(format!(
                "empty integration interval [{t_start}, {t_end}]"
            )));
        }
        let steps = self.steps_for(t_end - t_start)?;
        let mut state = y.to_vec();
        for i in 0..steps {
            state = self.step(&state, t_start + i as f64 * self.dt)?;
        }
        Ok(state)
    }

    fn factor(&self, shift: f64) -> Result<Arc<BandedCholesky>> {
        self.cache.get(&self.system, shift)
    }

    fn implicit_euler(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        let sys = &self.system;
        let shift = self.dt * self.nu.eval(t + self.dt);
        let mut rhs = sys.mass.mul_vec(y);
        self.factor(shift)?.solve_in_place(&mut rhs);
        Ok(rhs)
    }

    fn radau3(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        let sys = &self.system;
        let dt = self.dt;
        let nu = RADAU_C.map(|c| self.nu.eval(t + c * dt));
        let coef = |i: usize, j: usize| dt * RADAU_A[i][j] * nu[j];

        let s11 = coef(0, 0);
        let s22 = coef(1, 1);
        let a11 = sys.mass.linear_combination(1.0, &sys.stiffness, s11)?;
        let a22 = sys.mass.linear_combination(1.0, &sys.stiffness, s22)?;
        let a12 = sys.stiffness.scaled(coef(0, 1));
        let a21 = sys.stiffness.scaled(coef(1, 0));
        let blocks = BlockSystem {
            a11: &a11,
            a12: &a12,
            a21: &a21,
            a22: &a22,
        };
        let rhs = sys.mass.mul_vec(y);
        let (p11, p22) = (self.factor(s11)?, self.factor(s22)?);
        let (_, stage2) = solve_block2_preconditioned(&blocks, &p11, &p22, &rhs, &rhs, &self.solver)?;
        // stiffly accurate: the step result is the last stage
        Ok(stage2)
    }
}

pub(crate) fn step_count(length: f64, dt: f64) -> Result<usize> {
    let ratio = length / dt;
    let steps = ratio.round();
    if !(steps >= 1.0) || (ratio - steps).abs() > 1e-12 * ratio {
        return Err(Error::Config(format!(
            "interval length {length} is not an integer multiple of the step {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Single implicit Euler step: solves `(M + dt ν(t+dt) K) y⁺ = M y`.
pub fn step_implicit_euler(
    y: &[f64],
    t: f64,
    dt: f64,
    sys: &DiscreteSystem,
    nu: &NuProfile,
) -> Result<Vec<f64>> {
    Propagator::new(Arc::new(sys.clone()), Method::ImplicitEuler, dt, *nu)?.step(y, t)
}

/// Single two-stage RadauIIA step on the coupled stage system.
pub fn step_radau3(
    y: &[f64],
    t: f64,
    dt: f64,
    sys: &DiscreteSystem,
    nu: &NuProfile,
) -> Result<Vec<f64>> {
    Propagator::new(Arc::new(sys.clone()), Method::RadauIIA3, dt, *nu)?.step(y, t)
}
