//! Single runs and viscosity sweeps: configuration, orchestration, the
//! two-sided consistency verdict and the sweep CSV.

use crate::corrector::{build_corrector, default_cutoff, CorrectorError};
use crate::diagnostics::{fit_rate, sample_density, write_diagnostic_csv, DiagnosticRow, GronwallTracker, RateFit};
use crate::euler::{CatalogError, ScenarioSpec};
use crate::fields::VectorField;
use crate::geometry::{Domain, GeometryError, Grid};
use crate::inequalities::{measured_hardy_constant, InequalityError};
use crate::solver::snapshot::write_snapshot;
use crate::solver::{EnergyLedger, FlowSolver, SolverError, SolverSettings};
use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Cells required inside each layer strip before a run is trusted.
pub const MIN_STRIP_CELLS: usize = 6;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("run nu = {nu}: {source}")]
    Solver { nu: f64, source: SolverError },
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Catalog(_) | RunError::Geometry(_) | RunError::Json(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub stretch: f64,
    #[serde(default = "one")]
    pub length_x: f64,
    #[serde(default = "one")]
    pub length_y: f64,
}

fn one() -> f64 {
    1.0
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, GeometryError> {
        Grid::new(
            Domain::new(self.length_x, self.length_y)?,
            self.nx,
            self.ny,
            self.stretch,
        )
    }
}

fn default_cfl() -> f64 {
    0.5
}
fn default_dt_max() -> f64 {
    1e-3
}
fn default_poisson_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub nu: f64,
    pub grid: GridSpec,
    pub horizon: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_poisson_tol")]
    pub poisson_tol: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub output_interval: f64,
    #[serde(default)]
    pub seed: u64,
    /// Amplitude of a seeded perturbation added to the initial velocity
    /// before projection; 0 keeps NSE and Euler initial data equal.
    #[serde(default)]
    pub velocity_noise: f64,
    #[serde(default)]
    pub snapshots: bool,
    /// Measure wall-clock time; otherwise the record carries 0 so that
    /// outputs stay byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let positive = [
            ("nu", self.nu),
            ("horizon", self.horizon),
            ("cfl", self.cfl),
            ("dt_max", self.dt_max),
            ("poisson_tol", self.poisson_tol),
            ("output_interval", self.output_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RunError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cfl > 1.0 {
            return Err(RunError::Config(format!("cfl must not exceed 1, got {}", self.cfl)));
        }
        if !(self.velocity_noise >= 0.0) {
            return Err(RunError::Config("velocity_noise must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Summary of one run; `grid` is not part of the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub nu: f64,
    pub e1_final: f64,
    pub e2_final: f64,
    pub e_sup: f64,
    pub kato_d: f64,
    pub diss_total: f64,
    pub gronwall_max_violation: f64,
    pub wall_clock: f64,
    #[serde(skip)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: SweepRecord,
    pub rows: Vec<DiagnosticRow>,
    /// Largest relative excess in the discrete energy inequality.
    pub energy_violation: f64,
    pub energy_inequality_holds: bool,
    /// Max-norm change made to the initial velocity by the projection.
    pub initial_correction: f64,
    pub steps: usize,
}

fn solver_err(nu: f64) -> impl Fn(SolverError) -> RunError {
    move |source| RunError::Solver { nu, source }
}

pub fn run_single(config: &RunConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    let clock = Instant::now();
    let nu = config.nu;
    let grid = config.grid.build()?;
    let cells = grid.cells_in_strip(nu);
    if cells < MIN_STRIP_CELLS {
        return Err(RunError::Config(format!(
            "grid resolves the nu = {nu} strip with {cells} cells; at least {MIN_STRIP_CELLS} are required"
        )));
    }
    let sol = config.scenario.build(grid.domain)?;
    let solver = FlowSolver::new(
        grid.clone(),
        SolverSettings {
            poisson_tol: config.poisson_tol,
            dt_max: config.dt_max,
            ..Default::default()
        },
    );
    let mut vel = VectorField::from_fn(&grid, |x, y| {
        let u = sol.velocity(0.0, x, y);
        (u[0], u[1])
    });
    if config.velocity_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for u in vel.u.iter_mut() {
            *u += config.velocity_noise * rng.gen_range(-1.0..1.0);
        }
    }
    let init = solver
        .initial_state(sample_density(&grid, &sol, 0.0), vel, nu)
        .map_err(solver_err(nu))?;
    debug!(
        "nu = {nu}: initial projection changed the velocity by {:.3e}",
        init.correction
    );
    let mut state = init.state;

    let corr = build_corrector(&sol, &grid, nu, 0.0, &default_cutoff())?;
    let hardy = measured_hardy_constant(&grid, nu)?;
    let mut ledger = EnergyLedger::new(&grid, &state, nu).map_err(solver_err(nu))?;
    let mut tracker = GronwallTracker::new(&grid, &sol, &corr, hardy);
    tracker.observe(&state, &ledger).map_err(solver_err(nu))?;

    let out_dir = config.output_dir.as_deref();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let snapshot = |state: &crate::solver::FlowState, k: usize| -> Result<(), RunError> {
        if let (Some(dir), true) = (out_dir, config.snapshots) {
            write_snapshot(&dir.join(format!("snap_{k:05}.flow")), &grid, state).map_err(solver_err(nu))?;
        }
        Ok(())
    };
    snapshot(&state, 0)?;

    let n_out = (config.horizon / config.output_interval).ceil() as usize;
    let mut steps = 0;
    for k in 1..=n_out {
        let target = (k as f64 * config.output_interval).min(config.horizon);
        while state.time < target * (1.0 - 1e-14) {
            let dt = solver.stable_dt(&state, config.cfl).min(target - state.time);
            state = solver.step(&state, dt, &mut ledger).map_err(solver_err(nu))?;
            steps += 1;
        }
        state.time = target;
        *ledger.times.last_mut().unwrap() = target;
        tracker.observe(&state, &ledger).map_err(solver_err(nu))?;
        snapshot(&state, k)?;
    }
    let rows = tracker.rows().to_vec();
    if let Some(dir) = out_dir {
        write_diagnostic_csv(&dir.join("diagnostics.csv"), &rows)?;
    }
    let last = rows.last().unwrap();
    let record = SweepRecord {
        nu,
        e1_final: last.e1,
        e2_final: last.e2,
        e_sup: tracker.e_sup(),
        kato_d: ledger.layer_at(config.horizon).map_err(solver_err(nu))?,
        diss_total: ledger.total_at(config.horizon).map_err(solver_err(nu))?,
        gronwall_max_violation: tracker.max_violation(),
        wall_clock: if config.record_timing {
            clock.elapsed().as_secs_f64()
        } else {
            0.0
        },
        grid: Some(config.grid),
    };
    info!(
        "nu = {nu}: {steps} steps, e_sup = {:.4e}, kato_d = {:.4e}",
        record.e_sup, record.kato_d
    );
    Ok(RunOutput {
        record,
        rows,
        energy_violation: ledger.max_energy_violation(),
        energy_inequality_holds: ledger.energy_inequality_holds(),
        initial_correction: init.correction,
        steps,
    })
}

/// Energies at or below this are roundoff of O(1) fields (errors near
/// 1e-12) and count as zero when classifying a trend.
pub const ROUNDOFF_ENERGY: f64 = 1e-24;

/// Rate fit of one sweep quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum Trend {
    Fitted(RateFit),
    /// Every value is zero up to [`ROUNDOFF_ENERGY`].
    Vanishing,
    /// Mixed zero and positive values, or otherwise unfittable.
    Degenerate(String),
}

impl Trend {
    fn of(records: &[SweepRecord], f: impl Fn(&SweepRecord) -> f64) -> Self {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .map(|r| (r.nu, f(r)))
            .map(|(nu, v)| (nu, if v.abs() <= ROUNDOFF_ENERGY { 0.0 } else { v }))
            .collect();
        if pts.iter().all(|p| p.1 == 0.0) {
            return Trend::Vanishing;
        }
        match fit_rate(&pts) {
            Ok(fit) => Trend::Fitted(fit),
            Err(e) => Trend::Degenerate(e.to_string()),
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            Trend::Fitted(f) => Some(f.slope),
            _ => None,
        }
    }

    fn tends_to_zero(&self) -> bool {
        match self {
            Trend::Vanishing => true,
            Trend::Fitted(f) => f.slope > 0.1 && f.max_residual < 0.2,
            Trend::Degenerate(_) => false,
        }
    }

    fn stalls(&self) -> bool {
        matches!(self, Trend::Fitted(f) if f.slope < 0.02)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    TriviallyConsistent,
    Inconsistent,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "CONSISTENT",
            Verdict::TriviallyConsistent => "trivially consistent",
            Verdict::Inconsistent => "INCONSISTENT",
        })
    }
}

/// The relative energy and the layer dissipation must vanish together; the
/// verdict is INCONSISTENT only when one clearly does and the other does not.
pub fn verdict(e_sup: &Trend, kato_d: &Trend) -> Verdict {
    if *e_sup == Trend::Vanishing && *kato_d == Trend::Vanishing {
        return Verdict::TriviallyConsistent;
    }
    if (e_sup.tends_to_zero() && kato_d.stalls()) || (kato_d.tends_to_zero() && e_sup.stalls()) {
        Verdict::Inconsistent
    } else {
        Verdict::Consistent
    }
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    /// Ordered by decreasing viscosity.
    pub records: Vec<SweepRecord>,
    pub outputs: Vec<RunOutput>,
    pub e_sup: Trend,
    pub e1_final: Trend,
    pub e2_final: Trend,
    pub kato_d: Trend,
    pub verdict: Verdict,
    /// Constant Euler density: the density part of the relative energy is
    /// identically zero and the check reduces to the homogeneous case.
    pub homogeneous: bool,
}

impl SweepSummary {
    pub fn regime(&self) -> &'static str {
        if self.homogeneous {
            "homogeneous regime"
        } else {
            "variable-density regime"
        }
    }
}

/// Runs the configurations on `workers` threads; results are ordered by
/// decreasing viscosity regardless of scheduling.
pub fn run_sweep(configs: &[RunConfig], workers: usize) -> Result<SweepSummary, RunError> {
    if configs.len() < 3 {
        return Err(RunError::Config(format!(
            "a sweep needs at least 3 runs, got {}",
            configs.len()
        )));
    }
    let first = &configs[0];
    if configs
        .iter()
        .any(|c| c.scenario != first.scenario || c.horizon != first.horizon)
    {
        return Err(RunError::Config(
            "all runs of a sweep must share scenario and horizon".into(),
        ));
    }
    let mut sorted = configs.to_vec();
    sorted.sort_by(|a, b| b.nu.total_cmp(&a.nu));
    if sorted.windows(2).any(|w| w[0].nu == w[1].nu) {
        return Err(RunError::Config("sweep viscosities must be distinct".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let outputs: Vec<RunOutput> = pool.install(|| sorted.par_iter().map(run_single).collect::<Result<_, _>>())?;
    let records: Vec<SweepRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    let e_sup = Trend::of(&records, |r| r.e_sup);
    let kato_d = Trend::of(&records, |r| r.kato_d);
    let verdict = verdict(&e_sup, &kato_d);
    Ok(SweepSummary {
        e1_final: Trend::of(&records, |r| r.e1_final),
        e2_final: Trend::of(&records, |r| r.e2_final),
        e_sup,
        kato_d,
        verdict,
        homogeneous: first.scenario.rho_contrast == 0.0,
        records,
        outputs,
    })
}

/// Sweep description for the command line: a base run plus viscosities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub run: RunConfig,
    pub nus: Vec<f64>,
    /// Sweep CSV path; defaults to `sweep.csv` in the run output directory.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

impl SweepConfig {
    /// One run per viscosity; per-run outputs go to `nu_<value>` below the
    /// base output directory.
    pub fn runs(&self) -> Vec<RunConfig> {
        self.nus
            .iter()
            .map(|&nu| RunConfig {
                nu,
                output_dir: self.run.output_dir.as_ref().map(|d| d.join(format!("nu_{nu}"))),
                ..self.run.clone()
            })
            .collect()
    }
}

pub const SWEEP_HEADER: [&str; 8] = [
    "nu",
    "e1_final",
    "e2_final",
    "e_sup",
    "kato_d",
    "diss_total",
    "gronwall_max_violation",
    "wall_clock",
];

pub fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<(), RunError> {
    if records.is_empty() {
        return Err(RunError::Config("no records to write".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>, RunError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(RunError::Config(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    Ok(r.deserialize().collect::<Result<Vec<SweepRecord>, _>>()?)
}
