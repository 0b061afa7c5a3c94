//! Command-line interface.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver non-convergence,
//! 3 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ecbures::harness::json;
use ecbures::harness::verify::{run_and_write, VerifyConfig};
use ecbures::harness::{gen, rng};
use ecbures::{enorm, fidelity, ksw, Error};

#[derive(Parser)]
#[command(
    name = "ecbures",
    about = "Energy-constrained distances between finite-dimensional quantum operations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity F(ρ,σ) of two positive operators from JSON files.
    Fidelity(PairArgs),
    /// Bures distance β(ρ,σ) of two positive operators.
    Bures(PairArgs),
    /// Operator E-norm ‖X‖_E of a matrix under a Hamiltonian and bound.
    Enorm(EnormArgs),
    /// Energy-constrained Bures distance between two operations.
    Ecbures(EcburesArgs),
    /// Generate instances (operations, Hamiltonians, states) as JSON.
    Gen(GenArgs),
    /// Run the verification suite and write a report.
    VerifyKsw(VerifyArgs),
}

#[derive(Args)]
struct PairArgs {
    /// JSON matrix file for ρ.
    #[arg(long)]
    rho: PathBuf,
    /// JSON matrix file for σ.
    #[arg(long)]
    sigma: PathBuf,
}

#[derive(Args)]
struct EnormArgs {
    /// JSON matrix file for X (columns must match the Hamiltonian).
    #[arg(long)]
    x: PathBuf,
    /// JSON Hamiltonian file.
    #[arg(long)]
    hamiltonian: PathBuf,
    /// Energy bound E (must exceed the ground energy).
    #[arg(long)]
    energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Ksw,
    Direct,
    Both,
}

#[derive(Args)]
struct EcburesArgs {
    /// JSON operation file for Φ.
    #[arg(long)]
    phi: PathBuf,
    /// JSON operation file for Ψ.
    #[arg(long)]
    psi: PathBuf,
    /// JSON Hamiltonian file.
    #[arg(long)]
    hamiltonian: PathBuf,
    /// Energy bound E.
    #[arg(long)]
    energy: f64,
    /// Solution method.
    #[arg(long, value_enum, default_value_t = Method::Ksw)]
    method: Method,
    /// Environment padding beyond the common Kraus count.
    #[arg(long, default_value_t = 2)]
    pad: usize,
    /// Duality-gap target.
    #[arg(long, default_value_t = ksw::DEFAULT_TOL)]
    tol: f64,
    /// Comma-separated decreasing smoothing schedule, e.g. "1e-1,1e-2".
    #[arg(long, value_delimiter = ',', default_values_t = ksw::DEFAULT_SCHEDULE)]
    schedule: Vec<f64>,
    /// Restarts for the direct estimator.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Seed for the direct estimator.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the certificate JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenWhat,
}

#[derive(Subcommand)]
enum GenWhat {
    /// Generate a quantum operation.
    Operation {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 2)]
        d_a: usize,
        #[arg(long, default_value_t = 2)]
        d_b: usize,
        #[arg(long, default_value_t = 2)]
        kraus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mixing parameter for depolarizing instances.
        #[arg(long)]
        param: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a Hamiltonian.
    Hamiltonian {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = SpacingArg::Linear)]
        spacing: SpacingArg,
        /// Comma-separated eigenvalues for --spacing custom.
        #[arg(long, value_delimiter = ',')]
        custom: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random density matrix.
    State {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    RandomChannel,
    RandomOperation,
    Dephasing,
    Depolarizing,
    PrepareState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpacingArg {
    Linear,
    Harmonic,
    Custom,
}

#[derive(Args)]
struct VerifyArgs {
    /// Override the channel-pair count of the closure check (d = 3 and
    /// operation counts scale to a third of it).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Closure-check dimensions as dA,dB,k.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Reduced trial counts for a fast smoke run.
    #[arg(long, default_value_t = false)]
    quick: bool,
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> ecbures::Result<()> {
    match out {
        Some(path) => json::write_value(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> ecbures::Result<u8> {
    match cli.command {
        Command::Fidelity(args) => {
            let rho = json::state_from_value(&json::read_value(&args.rho)?)?;
            let sigma = json::state_from_value(&json::read_value(&args.sigma)?)?;
            let f = fidelity::fidelity(&rho, &sigma)?;
            println!("{}", serde_json::json!({ "fidelity": f }));
            Ok(0)
        }
        Command::Bures(args) => {
            let rho = json::state_from_value(&json::read_value(&args.rho)?)?;
            let sigma = json::state_from_value(&json::read_value(&args.sigma)?)?;
            let b = fidelity::bures_distance(&rho, &sigma)?;
            println!("{}", serde_json::json!({ "bures_distance": b }));
            Ok(0)
        }
        Command::Enorm(args) => {
            let x = json::matrix_from_value(&json::read_value(&args.x)?)?;
            let h = json::hamiltonian_from_value(&json::read_value(&args.hamiltonian)?)?;
            let value = enorm::enorm(&x, &h, enorm::EnergyBound::new(args.energy))?;
            println!("{}", serde_json::json!({ "enorm": value, "energy": args.energy }));
            Ok(0)
        }
        Command::Ecbures(args) => {
            let phi = json::operation_from_value(&json::read_value(&args.phi)?)?;
            let psi = json::operation_from_value(&json::read_value(&args.psi)?)?;
            let h = json::hamiltonian_from_value(&json::read_value(&args.hamiltonian)?)?;
            let e = enorm::EnergyBound::new(args.energy);
            let mut exit = 0u8;
            let mut payload = serde_json::Map::new();
            if matches!(args.method, Method::Ksw | Method::Both) {
                let cert = ksw::solve_with_continuation(
                    &phi,
                    &psi,
                    &h,
                    e,
                    &args.schedule,
                    args.pad,
                    args.tol,
                )?;
                if !cert.converged {
                    exit = 2;
                }
                payload.insert("ksw".into(), json::certificate_to_value(&cert));
            }
            if matches!(args.method, Method::Direct | Method::Both) {
                let value =
                    ksw::direct_ecbures(&phi, &psi, &h, e, args.restarts, args.seed)?;
                payload.insert(
                    "direct".into(),
                    serde_json::json!({
                        "lower_bound": value,
                        "restarts": args.restarts,
                        "seed": args.seed,
                        "generator": rng::GENERATOR_NAME,
                    }),
                );
            }
            emit(&serde_json::Value::Object(payload), args.out.as_deref())?;
            Ok(exit)
        }
        Command::Gen(args) => {
            match args.what {
                GenWhat::Operation {
                    kind,
                    d_a,
                    d_b,
                    kraus,
                    seed,
                    param,
                    out,
                } => {
                    let spec = gen::InstanceSpec {
                        kind: match kind {
                            GenKind::RandomChannel => gen::InstanceKind::RandomChannel,
                            GenKind::RandomOperation => gen::InstanceKind::RandomOperation,
                            GenKind::Dephasing => gen::InstanceKind::Dephasing,
                            GenKind::Depolarizing => gen::InstanceKind::Depolarizing,
                            GenKind::PrepareState => gen::InstanceKind::PrepareState,
                        },
                        d_a,
                        d_b,
                        kraus_count: kraus,
                        seed,
                        param,
                    };
                    let op = gen::gen_operation(&spec)?;
                    emit(&json::operation_to_value(&op), out.as_deref())?;
                }
                GenWhat::Hamiltonian {
                    dim,
                    spacing,
                    custom,
                    out,
                } => {
                    let spacing = match (spacing, custom) {
                        (SpacingArg::Linear, _) => gen::Spacing::Linear,
                        (SpacingArg::Harmonic, _) => gen::Spacing::Harmonic,
                        (SpacingArg::Custom, Some(list)) => gen::Spacing::Custom(list),
                        (SpacingArg::Custom, None) => {
                            return Err(Error::InvalidInput(
                                "--spacing custom requires --custom e0,e1,…".into(),
                            ))
                        }
                    };
                    let h = gen::gen_hamiltonian(dim, &spacing)?;
                    emit(&json::hamiltonian_to_value(&h), out.as_deref())?;
                }
                GenWhat::State {
                    dim,
                    rank,
                    seed,
                    out,
                } => {
                    let state = gen::gen_state(dim, rank.unwrap_or(dim), seed)?;
                    emit(&json::state_to_value(&state), out.as_deref())?;
                }
            }
            Ok(0)
        }
        Command::VerifyKsw(args) => {
            let mut cfg = if args.quick {
                VerifyConfig::quick(args.seed)
            } else {
                VerifyConfig {
                    seed: args.seed,
                    ..VerifyConfig::default()
                }
            };
            if let Some(trials) = args.trials {
                cfg.channel_pairs_d2 = trials;
                cfg.channel_pairs_d3 = trials.div_ceil(3);
                cfg.operation_pairs = trials.div_ceil(3);
            }
            if let Some(dims) = args.dims {
                if dims.len() != 3 {
                    return Err(Error::InvalidInput("--dims expects dA,dB,k".into()));
                }
                cfg.dims_d2 = (dims[0], dims[1], dims[2]);
            }
            let report = run_and_write(&cfg, args.report.as_deref())?;
            print!("{}", report.render_text());
            Ok(if report.all_passed() { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::InvalidInput(_) | Error::Io(_) | Error::Json(_) => 1u8,
                Error::NumericalFailure(_) => 2u8,
            };
            ExitCode::from(code)
        }
    }
}
