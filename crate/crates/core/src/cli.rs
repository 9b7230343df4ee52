//! Configurations and drivers behind the `corrector-check` and
//! `inequalities` subcommands.

use crate::corrector::{default_cutoff, verify_corrector_bounds, CorrectorBounds, BOUND_NAMES};
use crate::euler::ScenarioSpec;
use crate::inequalities::{constant_stability, Ratio, StabilityReport, TestFunctionFamily};
use crate::sweep::{GridSpec, RunError};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorCheckConfig {
    pub scenario: ScenarioSpec,
    pub grid: GridSpec,
    pub nus: Vec<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

pub const CORRECTOR_HEADER: [&str; 7] = ["nu", "linf", "grad_linf", "l2", "dt_l2", "grad_l2", "dist2_grad_linf"];

pub fn run_corrector_check(cfg: &CorrectorCheckConfig) -> Result<CorrectorBounds, RunError> {
    let grid = cfg.grid.build()?;
    let sol = cfg.scenario.build(grid.domain)?;
    Ok(verify_corrector_bounds(&sol, &[grid], &cfg.nus, &default_cutoff())?)
}

pub fn write_corrector_csv(path: &Path, bounds: &CorrectorBounds) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CORRECTOR_HEADER)?;
    for n in &bounds.norms {
        let mut row = vec![n.nu.to_string()];
        row.extend(n.as_array().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn print_corrector_summary(out: &mut dyn Write, bounds: &CorrectorBounds) -> std::io::Result<()> {
    for (name, fit) in BOUND_NAMES.iter().zip(&bounds.fits) {
        match fit {
            Some(f) => writeln!(
                out,
                "{name:>16}: slope {:+.4} (residual {:.3}), prefactor {:.4}",
                f.fit.slope, f.fit.max_residual, f.prefactor
            )?,
            None => writeln!(out, "{name:>16}: identically zero")?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityConfig {
    pub grid: GridSpec,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

pub struct FamilyResult {
    pub family: TestFunctionFamily,
    pub hardy: StabilityReport,
    pub poincare: StabilityReport,
}

pub fn run_inequalities(cfg: &InequalityConfig) -> Result<Vec<FamilyResult>, RunError> {
    let grid = cfg.grid.build()?;
    let families = [
        TestFunctionFamily::distance_power(),
        TestFunctionFamily::sine(),
        TestFunctionFamily::random_bumps(cfg.seed),
    ];
    families
        .into_iter()
        .map(|family| {
            let hardy = constant_stability(&family, &grid, &cfg.eps, Ratio::Hardy)?;
            let poincare = constant_stability(&family, &grid, &cfg.eps, Ratio::Poincare)?;
            Ok(FamilyResult {
                family,
                hardy,
                poincare,
            })
        })
        .collect()
}

pub fn write_inequality_csv(path: &Path, results: &[FamilyResult]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["family", "member", "eps", "hardy_ratio", "poincare_ratio"])?;
    for r in results {
        for s in &r.hardy.samples {
            w.write_record([
                r.family.name().to_string(),
                r.family.member_label(s.member),
                s.eps.to_string(),
                s.hardy.to_string(),
                s.poincare.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn print_inequality_summary(out: &mut dyn Write, results: &[FamilyResult]) -> std::io::Result<()> {
    for r in results {
        writeln!(
            out,
            "{:>14}: hardy sup {:.6} slope {:+.4} | poincare sup {:.6} slope {:+.4}",
            r.family.name(),
            r.hardy.supremum,
            r.hardy.fit.slope,
            r.poincare.supremum,
            r.poincare.fit.slope
        )?;
    }
    Ok(())
}
