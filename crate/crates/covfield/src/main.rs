//! `covfield` — command-line front end: property-suite runner, continuity
//! probe, metric tables, CPU-map certification, monotone-function checks,
//! and GNS/modular inspection of states.
//!
//! Exit codes: 0 all checks pass, 1 a property or certification fails,
//! 2 invalid input or configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covfield::algebra::AlgebraShape;
use covfield::channels::{cpu_map_from_json, verify_cpu};
use covfield::covariance::{covariance_form, CovarianceSpec};
use covfield::error::{CovError, Result};
use covfield::gns::{gelfand_ideal_basis, gns_space};
use covfield::harness::{continuity_probe, metric_table, run_suite, SuiteConfig};
use covfield::modular::modular_operator;
use covfield::monotone::{by_name, log_grid, random_log_grid, MonotoneFunction};
use covfield::states::{state_from_cli_arg, State};

#[derive(Parser)]
#[command(name = "covfield", version, about = "GNS spaces, modular operators, and monotone covariance fields on finite-dimensional C*-algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StateArgs {
    /// State: a JSON file path, or `tracial`, `random:SEED`, `pure:INDEX`.
    #[arg(long)]
    state: String,
    /// Block dimensions, e.g. `2` or `1,2` (required for state literals).
    #[arg(long)]
    shape: Option<String>,
}

impl StateArgs {
    fn load(&self) -> Result<State> {
        let shape = match &self.shape {
            Some(s) => Some(AlgebraShape::parse(s)?),
            None => None,
        };
        state_from_cli_arg(&self.state, shape.as_ref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full property suite and emit a JSON report.
    RunSuite {
        /// JSON config file; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Semicolon-separated algebras with comma-separated block dims,
        /// e.g. `2;1,2;3`.
        #[arg(long)]
        shapes: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress wall-clock fields for byte-identical reruns.
        #[arg(long)]
        no_timestamp: bool,
        /// Inject a transpose-map fixture that must fail certification.
        #[arg(long)]
        inject_noncp: bool,
    },
    /// Walk a state toward the trace along ε = 1/n and tabulate covariance
    /// values, the partial-inverse norm, and the restricted modular gap.
    ContinuityProbe {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long = "F", default_value = "bures")]
        function: String,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_n: u64,
    },
    /// CSV table of metric values over a simplex grid of diagonal states.
    MetricTable {
        #[arg(long)]
        shape: String,
        /// Comma-separated catalog names.
        #[arg(long = "F", default_value = "bures,harmonic,geometric,kubo-mori,wigner-yanase")]
        functions: String,
        #[arg(long, default_value_t = 3)]
        grid: usize,
    },
    /// Certify a CPU map stored as JSON; exits 1 when certification fails.
    VerifyCpu { file: PathBuf },
    /// Löwner certification and Petz symmetry of a monotone function.
    CheckMonotoneFn {
        /// Catalog name.
        #[arg(long, conflicts_with = "expr")]
        name: Option<String>,
        /// File holding a scalar expression in `t`, e.g. `(1+t)/2`.
        #[arg(long)]
        expr: Option<PathBuf>,
    },
    /// GNS dimension, Gelfand-ideal dimension, and basis Gram error.
    GnsInfo {
        #[command(flatten)]
        state: StateArgs,
    },
    /// Sorted eigenvalue multiset of the modular operator.
    ModularSpectrum {
        #[command(flatten)]
        state: StateArgs,
    },
    /// Evaluate the covariance form on a pair of algebra elements.
    CovarianceEval {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long = "F", default_value = "bures")]
        function: String,
        #[arg(long)]
        alpha: Option<f64>,
        /// JSON file with the first algebra element.
        #[arg(long)]
        a: PathBuf,
        /// JSON file with the second algebra element.
        #[arg(long)]
        b: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::RunSuite { config, seed, shapes, trials, out, no_timestamp, inject_noncp } => {
            let mut cfg: SuiteConfig = match config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => SuiteConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(shapes) = shapes {
                cfg.shapes = shapes.split(';').map(|s| s.trim().to_string()).collect();
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            if no_timestamp {
                cfg.no_timestamp = true;
            }
            if inject_noncp {
                cfg.inject_noncp_fixture = true;
            }
            if let Some(out) = out {
                cfg.out = Some(out);
            }
            let report = run_suite(&cfg)?;
            let bytes = report.to_json_bytes()?;
            match &cfg.out {
                Some(path) => std::fs::write(path, &bytes)?,
                None => print!("{}", String::from_utf8_lossy(&bytes)),
            }
            Ok(report.passed())
        }
        Command::ContinuityProbe { state, function, steps, max_n } => {
            let s = state.load()?;
            let f = by_name(&function)?;
            let probe = continuity_probe(&s, &f, steps, max_n)?;
            println!("{}", serde_json::to_string_pretty(&probe)?);
            Ok(true)
        }
        Command::MetricTable { shape, functions, grid } => {
            let shape = AlgebraShape::parse(&shape)?;
            let names: Vec<String> =
                functions.split(',').map(|s| s.trim().to_string()).collect();
            print!("{}", metric_table(&shape, &names, grid)?);
            Ok(true)
        }
        Command::VerifyCpu { file } => {
            let map = cpu_map_from_json(&std::fs::read_to_string(file)?)?;
            let report = verify_cpu(&map)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.passes)
        }
        Command::CheckMonotoneFn { name, expr } => {
            let f: MonotoneFunction = match (name, expr) {
                (Some(name), None) => by_name(&name)?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path)?;
                    let stem = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().to_string())
                        .unwrap_or_else(|| "user".into());
                    MonotoneFunction::from_expr(&stem, text.trim())?
                }
                _ => {
                    return Err(CovError::InvalidInput(
                        "pass exactly one of --name or --expr".into(),
                    ))
                }
            };
            let mut passes = true;
            let mut worst = f64::INFINITY;
            for seed in 0..50u64 {
                let (ok, min) = f.loewner_test(&random_log_grid(seed, 12))?;
                passes &= ok;
                worst = worst.min(min);
            }
            let petz = f.petz_symmetry_test(&log_grid(1e-3, 1e3, 41));
            let out = serde_json::json!({
                "name": f.name(),
                "loewner": if passes { "pass" } else { "fail" },
                "loewner_min_eigenvalue": worst,
                "petz": petz,
                "F0": f.f_zero(),
                "F1": f.f_one(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(passes)
        }
        Command::GnsInfo { state } => {
            let s = state.load()?;
            let g = gns_space(&s);
            let ideal = gelfand_ideal_basis(&s);
            let out = serde_json::json!({
                "shape": s.shape().block_dims(),
                "dimension": g.dim(),
                "ideal_dimension": ideal.len(),
                "algebra_dimension": s.shape().algebra_dim(),
                "gram_error": g.gram_error(),
                "faithful": s.is_faithful(),
                "tracial": s.is_tracial(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::ModularSpectrum { state } => {
            let s = state.load()?;
            let md = modular_operator(&s)?;
            let mut spec = md.spectrum.clone();
            spec.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            println!("{}", serde_json::to_string(&spec)?);
            Ok(true)
        }
        Command::CovarianceEval { state, function, alpha, a, b } => {
            let s = state.load()?;
            let f = by_name(&function)?;
            let spec = match alpha {
                Some(alpha) => CovarianceSpec::new(f, alpha)?,
                None => CovarianceSpec::reduced(f)?,
            };
            let g = gns_space(&s);
            let elem_a: covfield::AlgebraElement =
                serde_json::from_str(&std::fs::read_to_string(a)?)?;
            let elem_b: covfield::AlgebraElement =
                serde_json::from_str(&std::fs::read_to_string(b)?)?;
            let value = covariance_form(&g, &spec, &g.vector(&elem_a)?, &g.vector(&elem_b)?)?;
            let out = serde_json::json!({
                "function": spec.function().name(),
                "alpha": spec.alpha(),
                "beta": spec.beta(),
                "re": value.re,
                "im": value.im,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
    }
}
