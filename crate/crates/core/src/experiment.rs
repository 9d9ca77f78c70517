//! Experiment configurations, the three reproduction presets, and CSV plus
//! metadata output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble, project_initial_condition, DiscreteSystem, InitialCondition, StripCoefficients};
use crate::integrators::{step_count, Method, NuProfile, Propagator};
use crate::linalg::SingularValueEstimate;
use crate::mesh::{build_strip_mesh, mesh_width_stats, refine_uniform, Mesh, StripGeometry};
use crate::parareal::{self, PararealConfig, PararealState, TimeSlicePartition};
use crate::spectral::{convergence_bound, estimate_sigma_max, IterationOperator};

/// Relative tolerance of the singular value estimate.
pub const SIGMA_TOL: f64 = 1e-8;
pub const SIGMA_MAX_ITER: usize = 20_000;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 3] = ["fig1", "fig2", "fig3"];

/// One experiment; serialized as a flat JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Left edge of the middle strip; centred when absent.
    #[serde(default)]
    pub x0: Option<f64>,
    pub w: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `constant`, `cosine` or `erf`.
    pub nu: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub t_end: f64,
    pub slices: usize,
    pub coarse_method: Method,
    pub coarse_dt: f64,
    pub fine_method: Method,
    pub fine_dt: f64,
    pub target_h: f64,
    #[serde(default)]
    pub refinements: usize,
    pub max_iter: usize,
    /// Output directory.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub preset: Option<String>,
    /// Also estimate `σ_max` of the iteration operator (constant `nu` only).
    #[serde(default)]
    pub estimate_sigma: bool,
    #[serde(default)]
    pub stop_defect: Option<f64>,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// Common setup of all presets: `T = 4`, `N = 40`, implicit Euler with
    /// `Δt = 1/100` as coarse and RadauIIA with `δt = 1/200` as fine method,
    /// `a₁ = a₃ = 0.01`.
    pub fn baseline(w: f64, jump: f64) -> Self {
        Self {
            x0: None,
            w,
            a1: 0.01,
            a2: 0.01 * jump,
            a3: 0.01,
            nu: "constant".into(),
            alpha: 1.0,
            t_end: 4.0,
            slices: 40,
            coarse_method: Method::ImplicitEuler,
            coarse_dt: 1.0 / 100.0,
            fine_method: Method::RadauIIA3,
            fine_dt: 1.0 / 200.0,
            target_h: 0.04,
            refinements: 1,
            max_iter: 12,
            output: default_output(),
            workers: default_workers(),
            preset: None,
            estimate_sigma: false,
            stop_defect: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn geometry(&self) -> Result<StripGeometry> {
        match self.x0 {
            Some(x0) => StripGeometry::new(x0, self.w),
            None => StripGeometry::centered(self.w),
        }
    }

    pub fn coefficients(&self) -> Result<StripCoefficients> {
        StripCoefficients::new(self.a1, self.a2, self.a3)
    }

    pub fn nu_profile(&self) -> Result<NuProfile> {
        NuProfile::from_name(&self.nu, self.alpha)
    }

    pub fn partition(&self) -> Result<TimeSlicePartition> {
        TimeSlicePartition::new(self.t_end, self.slices)
    }

    /// Coefficient ratio `a₂ / a₁`.
    pub fn jump(&self) -> f64 {
        self.a2 / self.a1
    }

    /// Checks every parameter before any computation starts.
    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.coefficients()?;
        let nu = self.nu_profile()?;
        let partition = self.partition()?;
        if !(self.target_h > 0.0) || !self.target_h.is_finite() {
            return Err(Error::Config(format!(
                "target_h must be positive, got {}",
                self.target_h
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let len = partition.slice_length();
        for (name, dt) in [("coarse_dt", self.coarse_dt), ("fine_dt", self.fine_dt)] {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {dt}")));
            }
            if step_count(len, dt).is_err() {
                return Err(Error::Config(format!(
                    "slice length T/N = {len} is not a multiple of {name} = {dt}"
                )));
            }
        }
        if let Some(s) = self.stop_defect {
            if !(s >= 0.0) {
                return Err(Error::Config(format!("stop_defect must be nonnegative, got {s}")));
            }
        }
        if self.estimate_sigma && !nu.is_constant() {
            return Err(Error::Config(
                "estimate_sigma requires the constant nu profile".into(),
            ));
        }
        Ok(())
    }

    /// File stem `<preset>_<params>` for the CSV and metadata outputs.
    pub fn file_stem(&self) -> String {
        let mut stem = format!(
            "{}_w{}_da{}_{}",
            self.preset.as_deref().unwrap_or("custom"),
            self.w,
            round_label(self.jump()),
            self.nu
        );
        let _ = write!(stem, "_alpha{}_N{}", self.alpha, self.slices);
        stem
    }
}

fn round_label(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Configurations of a named preset.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let tag = |mut c: ExperimentConfig| {
        c.preset = Some(name.to_string());
        c
    };
    match name {
        "fig1" => Ok([0.2, 0.02]
            .into_iter()
            .flat_map(|w| [1.0, 100.0, 10000.0].map(|jump| tag(ExperimentConfig::baseline(w, jump))))
            .collect()),
        "fig2" => Ok([1.0, 10.0]
            .into_iter()
            .flat_map(|alpha| {
                ["constant", "cosine", "erf"].map(|nu| {
                    let mut c = ExperimentConfig::baseline(0.2, 100.0);
                    c.nu = nu.into();
                    c.alpha = alpha;
                    tag(c)
                })
            })
            .collect()),
        "fig3" => Ok([1.0, 10000.0]
            .into_iter()
            .map(|jump| {
                let mut c = ExperimentConfig::baseline(0.2, jump);
                c.slices = 20;
                c.target_h = 0.08;
                c.refinements = 0;
                c.max_iter = 10;
                c.estimate_sigma = true;
                tag(c)
            })
            .collect()),
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (expected one of {})",
            PRESETS.join(", ")
        ))),
    }
}

/// Mesh, discrete system and initial value of a validated configuration.
pub struct ExperimentSetup {
    pub config: ExperimentConfig,
    pub geometry: StripGeometry,
    pub mesh: Mesh,
    pub system: Arc<DiscreteSystem>,
    pub initial_value: Vec<f64>,
    pub h_min: f64,
    pub h_max: f64,
}

impl ExperimentSetup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let geometry = config.geometry()?;
        let mut mesh = build_strip_mesh(&geometry, config.target_h)?;
        for _ in 0..config.refinements {
            mesh = refine_uniform(&mesh);
        }
        let (h_min, h_max) = mesh_width_stats(&mesh);
        let system = assemble(&mesh, &config.coefficients()?)?;
        let initial_value = project_initial_condition(&mesh, &InitialCondition::default(), &system);
        Ok(Self {
            config: config.clone(),
            geometry,
            mesh,
            system: Arc::new(system),
            initial_value,
            h_min,
            h_max,
        })
    }

    pub fn coarse(&self) -> Result<Propagator> {
        let c = &self.config;
        Propagator::new(self.system.clone(), c.coarse_method, c.coarse_dt, c.nu_profile()?)
    }

    pub fn fine(&self) -> Result<Propagator> {
        let c = &self.config;
        Propagator::new(self.system.clone(), c.fine_method, c.fine_dt, c.nu_profile()?)
    }

    pub fn parareal_config(&self) -> Result<PararealConfig> {
        let c = &self.config;
        let mut cfg = PararealConfig::new(c.partition()?, self.coarse()?, self.fine()?, c.max_iter, c.workers)?;
        cfg.stop_defect = c.stop_defect;
        Ok(cfg)
    }

    pub fn iteration_operator(&self) -> Result<IterationOperator> {
        IterationOperator::from_propagators(
            &self.coarse()?,
            &self.fine()?,
            self.config.t_end,
            self.config.slices,
        )
    }
}

/// Everything one experiment produced.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub state: PararealState,
    pub sigma: Option<SingularValueEstimate>,
    pub dofs: usize,
    pub nodes: usize,
    pub elements: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub elapsed_seconds: f64,
}

impl ExperimentResult {
    pub fn defects(&self) -> &[f64] {
        &self.state.defects
    }

    /// `d⁰ σ_max^k` for every recorded iteration, when `σ_max` is known.
    pub fn bound(&self) -> Option<Vec<f64>> {
        let sigma = self.sigma?.sigma;
        let d0 = self.state.defects[0];
        Some(
            (0..self.state.defects.len())
                .map(|k| convergence_bound(sigma, d0, k as u32))
                .collect(),
        )
    }

    /// CSV text: header `k,defect[,bound]`, then one row per iteration.
    pub fn csv(&self) -> Result<String> {
        let bound = self.bound();
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Config(format!("csv encoding failed: {e}"));
        if bound.is_some() {
            w.write_record(["k", "defect", "bound"]).map_err(csv_err)?;
        } else {
            w.write_record(["k", "defect"]).map_err(csv_err)?;
        }
        for (k, d) in self.state.defects.iter().enumerate() {
            let mut row = vec![k.to_string(), format!("{d:.16e}")];
            if let Some(b) = &bound {
                row.push(format!("{:.16e}", b[k]));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }

    /// Plain-text `key = value` sidecar with every parameter and derived
    /// quantity of the run.
    pub fn metadata(&self) -> String {
        let c = &self.config;
        let geom = c.geometry().ok();
        let mut m = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(m, "{k} = {v}");
        };
        kv("preset", c.preset.clone().unwrap_or_else(|| "custom".into()));
        kv("x0", format!("{:?}", geom.map_or(f64::NAN, |g| g.x0())));
        kv("w", format!("{:?}", c.w));
        kv("a1", format!("{:?}", c.a1));
        kv("a2", format!("{:?}", c.a2));
        kv("a3", format!("{:?}", c.a3));
        kv("delta_a", format!("{:?}", c.jump()));
        kv("nu", c.nu.clone());
        kv("alpha", format!("{:?}", c.alpha));
        kv("t_end", format!("{:?}", c.t_end));
        kv("slices", c.slices.to_string());
        kv("coarse_method", c.coarse_method.name().into());
        kv("coarse_dt", format!("{:?}", c.coarse_dt));
        kv("fine_method", c.fine_method.name().into());
        kv("fine_dt", format!("{:?}", c.fine_dt));
        kv("target_h", format!("{:?}", c.target_h));
        kv("refinements", c.refinements.to_string());
        kv("max_iter", c.max_iter.to_string());
        kv(
            "stop_defect",
            c.stop_defect.map_or("none".into(), |s| format!("{s:?}")),
        );
        kv("estimate_sigma", c.estimate_sigma.to_string());
        kv("workers", c.workers.to_string());
        kv("h_min", format!("{:?}", self.h_min));
        kv("h_max", format!("{:?}", self.h_max));
        kv("nodes", self.nodes.to_string());
        kv("elements", self.elements.to_string());
        kv("dofs", self.dofs.to_string());
        kv("iterations", self.state.iterations().to_string());
        if let Some(s) = self.sigma {
            kv("sigma_max", format!("{:?}", s.sigma));
            kv("sigma_iterations", s.iterations.to_string());
            kv("sigma_converged", s.converged.to_string());
        }
        kv("wall_clock_seconds", format!("{:.3}", self.elapsed_seconds));
        kv(
            "config_json",
            serde_json::to_string(c).expect("config serializes"),
        );
        m
    }

    /// Writes `<stem>.csv` and `<stem>.meta.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = self.config.file_stem();
        let csv_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.meta.txt"));
        std::fs::write(&csv_path, self.csv()?).map_err(|e| Error::io(&csv_path, e))?;
        std::fs::write(&meta_path, self.metadata()).map_err(|e| Error::io(&meta_path, e))?;
        Ok((csv_path, meta_path))
    }
}

/// Runs one configuration without writing anything.
pub fn compute(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let started = Instant::now();
    let setup = ExperimentSetup::new(config)?;
    let pcfg = setup.parareal_config()?;
    let state = parareal::run(&pcfg, &setup.initial_value).map_err(|f| f.source)?;
    let sigma = if config.estimate_sigma {
        let op = setup.iteration_operator()?;
        Some(estimate_sigma_max(&op, SIGMA_TOL, SIGMA_MAX_ITER))
    } else {
        None
    };
    Ok(ExperimentResult {
        config: config.clone(),
        state,
        sigma,
        dofs: setup.system.dim(),
        nodes: setup.mesh.node_count(),
        elements: setup.mesh.element_count(),
        h_min: setup.h_min,
        h_max: setup.h_max,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs one configuration and writes its CSV and metadata into
/// `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(ExperimentResult, PathBuf, PathBuf)> {
    let result = compute(config)?;
    let (csv, meta) = result.write(&config.output)?;
    Ok((result, csv, meta))
}
