use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use viscous_limit::cli::{
    print_corrector_summary, print_inequality_summary, run_corrector_check, run_inequalities, write_corrector_csv,
    write_inequality_csv, CorrectorCheckConfig, InequalityConfig,
};
use viscous_limit::report::write_report;
use viscous_limit::sweep::{
    read_csv, run_single, run_sweep, write_csv, RunConfig, RunError, SweepConfig, Trend, Verdict,
};

#[derive(Parser)]
#[command(
    name = "vlab",
    version,
    about = "Vanishing-viscosity experiments in a wall-bounded channel"
)]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one viscosity.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a viscosity sweep and report the consistency verdict.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Measure the corrector norms and their exponents.
    CorrectorCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Hardy and Poincaré ratios over the test families.
    Inequalities {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render the SVG chart of a sweep CSV.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

fn ensure_parent(path: &Path) -> std::io::Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir),
        None => Ok(()),
    }
}

fn describe(name: &str, t: &Trend) -> String {
    match t {
        Trend::Fitted(f) => format!("{name}: slope {:+.4} (residual {:.3})", f.slope, f.max_residual),
        Trend::Vanishing => format!("{name}: identically zero"),
        Trend::Degenerate(why) => format!("{name}: no fit ({why})"),
    }
}

fn run(cli: Cli) -> Result<ExitCode, RunError> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg: RunConfig = load(&config)?;
            cfg.validate()?;
            let out = run_single(&cfg)?;
            let r = &out.record;
            println!(
                "nu={} e1_final={:e} e2_final={:e} e_sup={:e} kato_d={:e} diss_total={:e} gronwall_max_violation={:e}",
                r.nu, r.e1_final, r.e2_final, r.e_sup, r.kato_d, r.diss_total, r.gronwall_max_violation
            );
            println!(
                "steps={} energy_inequality={}",
                out.steps,
                if out.energy_inequality_holds {
                    "holds"
                } else {
                    "VIOLATED"
                }
            );
        }
        Command::Sweep { config } => {
            let cfg: SweepConfig = load(&config)?;
            cfg.run.validate()?;
            let summary = run_sweep(&cfg.runs(), cli.workers)?;
            let csv_path = cfg.csv.clone().unwrap_or_else(|| match &cfg.run.output_dir {
                Some(d) => d.join("sweep.csv"),
                None => PathBuf::from("sweep.csv"),
            });
            ensure_parent(&csv_path)?;
            write_csv(&csv_path, &summary.records)?;
            if let Some(svg) = &cfg.report {
                ensure_parent(svg)?;
                write_report(svg, &summary.records).map_err(|e| RunError::Config(e.to_string()))?;
            }
            for line in [
                describe("e_sup", &summary.e_sup),
                describe("e1_final", &summary.e1_final),
                describe("e2_final", &summary.e2_final),
                describe("kato_d", &summary.kato_d),
            ] {
                println!("{line}");
            }
            println!("verdict: {} ({})", summary.verdict, summary.regime());
            println!("wrote {}", csv_path.display());
            if summary.verdict == Verdict::Inconsistent {
                return Ok(ExitCode::from(4));
            }
        }
        Command::CorrectorCheck { config } => {
            let cfg: CorrectorCheckConfig = load(&config)?;
            let bounds = run_corrector_check(&cfg)?;
            if let Some(path) = &cfg.output {
                ensure_parent(path)?;
                write_corrector_csv(path, &bounds)?;
            }
            print_corrector_summary(&mut std::io::stdout(), &bounds)?;
        }
        Command::Inequalities { config } => {
            let cfg: InequalityConfig = load(&config)?;
            let results = run_inequalities(&cfg)?;
            if let Some(path) = &cfg.output {
                ensure_parent(path)?;
                write_inequality_csv(path, &results)?;
            }
            print_inequality_summary(&mut std::io::stdout(), &results)?;
        }
        Command::Report { input, out } => {
            let records = read_csv(&input)?;
            ensure_parent(&out)?;
            write_report(&out, &records).map_err(|e| RunError::Config(e.to_string()))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
