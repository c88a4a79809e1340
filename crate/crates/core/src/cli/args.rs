use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use super::{execute, is_toml, read_file, Command, Format, JobError, JobSpec};

#[derive(Debug, Parser)]
#[command(name = "ncp", version, about = "Free probability and quantum Levy process computations")]
pub struct Cli {
    /// Job specification (JSON, or TOML by extension).
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,

    /// Write the result here instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Include the elapsed time in the result.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Args)]
struct FlavorArg {
    #[arg(long, default_value = "free")]
    flavor: String,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Moments to cumulants, or back with --kappa.
    Cumulants {
        #[command(flatten)]
        flavor: FlavorArg,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "kappa")]
        m: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        kappa: Option<Vec<f64>>,
    },
    /// Additive convolution of two moment sequences.
    Convolve {
        #[command(flatten)]
        flavor: FlavorArg,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        m1: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        m2: Vec<f64>,
    },
    /// Bercovici-Pata map of a moment sequence.
    BpMap {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        m: Vec<f64>,
    },
    /// Joint moment from marginal laws; the payload is read from a file.
    MixedMoment {
        #[arg(long, value_name = "FILE")]
        payload: PathBuf,
    },
    /// Vacuum expectation of an operator word on a truncated Fock space.
    FockOracle {
        #[arg(long, value_name = "FILE")]
        payload: PathBuf,
    },
    /// Cumulants and moments of a Levy process at time t.
    LevyMoments {
        #[arg(long, value_name = "FILE")]
        tuple: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        order: usize,
        #[command(flatten)]
        flavor: FlavorArg,
        /// Compare with moments of the Fock space realization.
        #[arg(long)]
        oracle: bool,
    },
    /// Gaussian, compound Poisson or general.
    Classify {
        #[arg(long, value_name = "FILE")]
        tuple: PathBuf,
    },
    /// Gaussian and jump parts of a tuple.
    ItoSplit {
        #[arg(long, value_name = "FILE")]
        tuple: PathBuf,
    },
    /// Compress a tuple to its minimal invariant subspace.
    Minimal {
        #[arg(long, value_name = "FILE")]
        tuple: PathBuf,
    },
    /// Moments of the discretized free Azema martingale.
    Azema {
        #[arg(long, allow_negative_numbers = true)]
        gamma_re: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gamma_im: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = crate::affine::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long)]
        max_order: Option<usize>,
        /// Add a convergence table over N = 4, 8, 16, 32.
        #[arg(long)]
        converge: bool,
    },
    /// Run the oracle cross-checks.
    Check {
        #[arg(long)]
        filter: Option<String>,
        /// Perturb computed values; every selected check must then fail.
        #[arg(long)]
        perturb: bool,
    },
}

fn document(path: &Path) -> Result<Value, JobError> {
    let text = read_file(path)?;
    let field = path.display().to_string();
    if is_toml(path) {
        let table: toml::Table = toml::from_str(&text).map_err(|e| JobError::schema(&field, e))?;
        serde_json::to_value(table).map_err(|e| JobError::schema(field, e))
    } else {
        serde_json::from_str(&text).map_err(|e| JobError::schema(field, e))
    }
}

fn build(sub: Sub) -> Result<(Command, Value), JobError> {
    Ok(match sub {
        Sub::Cumulants { flavor, m, kappa } => {
            let mut p = json!({"flavor": flavor.flavor});
            if let Some(m) = m {
                p["m"] = json!(m);
            }
            if let Some(k) = kappa {
                p["kappa"] = json!(k);
            }
            (Command::Cumulants, p)
        }
        Sub::Convolve { flavor, m1, m2 } => (Command::Convolve, json!({"flavor": flavor.flavor, "m1": m1, "m2": m2})),
        Sub::BpMap { m } => (Command::BpMap, json!({"m": m})),
        Sub::MixedMoment { payload } => (Command::MixedMoment, document(&payload)?),
        Sub::FockOracle { payload } => (Command::FockOracle, document(&payload)?),
        Sub::LevyMoments {
            tuple,
            t,
            order,
            flavor,
            oracle,
        } => (
            Command::LevyMoments,
            json!({"tuple": document(&tuple)?, "t": t, "order": order, "flavor": flavor.flavor, "oracle": oracle}),
        ),
        Sub::Classify { tuple } => (Command::Classify, json!({"tuple": document(&tuple)?})),
        Sub::ItoSplit { tuple } => (Command::ItoSplit, json!({"tuple": document(&tuple)?})),
        Sub::Minimal { tuple } => (Command::Minimal, json!({"tuple": document(&tuple)?})),
        Sub::Azema {
            gamma_re,
            gamma_im,
            t,
            steps,
            depth,
            max_order,
            converge,
        } => {
            let mut p = json!({
                "gamma_re": gamma_re, "gamma_im": gamma_im, "t": t,
                "steps": steps, "depth": depth, "converge": converge,
            });
            if let Some(k) = max_order {
                p["max_order"] = json!(k);
            }
            (Command::Azema, p)
        }
        Sub::Check { filter, perturb } => {
            let mut p = json!({"perturb": perturb});
            if let Some(f) = filter {
                p["filter"] = json!(f);
            }
            (Command::Check, p)
        }
    })
}

fn job(cli: Cli) -> Result<JobSpec, JobError> {
    let mut spec = match (cli.spec, cli.command) {
        (Some(path), None) => JobSpec::load(&path)?,
        (None, Some(sub)) => {
            let (command, payload) = build(sub)?;
            JobSpec {
                command,
                payload,
                output: None,
                format: Format::Json,
                timing: false,
            }
        }
        (Some(_), Some(_)) => return Err(JobError::schema("spec", "give either --spec or a subcommand, not both")),
        (None, None) => return Err(JobError::schema("command", "a subcommand or --spec FILE is required")),
    };
    if cli.output.is_some() {
        spec.output = cli.output;
    }
    if let Some(f) = cli.format {
        spec.format = f;
    }
    spec.timing |= cli.timing;
    Ok(spec)
}

/// Entry point of the `ncp` binary. Returns the exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match job(cli) {
        Ok(spec) => execute(&spec),
        Err(e) => {
            eprintln!("ncp: {e}");
            e.exit_code()
        }
    }
}
