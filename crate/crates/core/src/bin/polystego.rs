//! Command-line front end: embed messages into plans, extract them back,
//! solve enclosing ellipsoids for raw point sets, and run the toy
//! encryption demo.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags or flag values),
//! 2 for data errors (unreadable or malformed files, failed runs).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polystego::config::RunConfig;
use polystego::{fhe, io, mvee, stego};

/// `println!` that exits quietly when stdout closes early (e.g. piped into
/// `head`) instead of panicking on the broken pipe.
macro_rules! outln {
    ($($arg:tt)*) => {
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    };
}

/// Solver seed for the standalone `mvee` subcommand; pinned so identical
/// inputs give identical output.
const MVEE_CLI_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "polystego", version, about = "Hide vectors as longest ellipsoid axes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a plan hiding the messages from a messages file.
    Embed(EmbedArgs),
    /// Recover messages from a plan file.
    Extract(ExtractArgs),
    /// Solve the minimum-volume enclosing ellipsoid of a points file.
    Mvee(MveeArgs),
    /// Exercise the toy encryption scheme end to end.
    FheDemo(FheDemoArgs),
}

#[derive(Args)]
struct EmbedArgs {
    /// Messages file (`polystego-messages v1`).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Plan file to write (`polystego-plan v1`).
    #[arg(long = "out", value_name = "FILE")]
    output: PathBuf,
    /// Decoy polytopes to mix in.
    #[arg(long, default_value_t = 8)]
    decoys: usize,
    /// Seed for all randomized choices.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Carrier dimension; must equal payload length + 2 when given.
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    tuning: Tuning,
    /// Smallest admissible payload coordinate magnitude.
    #[arg(long, default_value_t = 1e-6)]
    payload_min: f64,
    /// Longest-to-other semi-axis ratio for carrier ellipsoids.
    #[arg(long, default_value_t = 2.0)]
    axis_ratio: f64,
}

#[derive(Args)]
struct ExtractArgs {
    /// Plan file (`polystego-plan v1`).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Messages file to write (`polystego-messages v1`).
    #[arg(long = "out", value_name = "FILE")]
    output: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct MveeArgs {
    /// Points file (`polystego-points v1`).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Duality-gap target for the solver.
    #[arg(long, default_value_t = 1e-7)]
    eps: f64,
}

#[derive(Args)]
struct FheDemoArgs {
    /// Odd modulus.
    #[arg(long, default_value_t = 2_147_483_647)]
    q: u64,
    /// Secret-key length.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Seed for key generation and encryption randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Tuning {
    /// Duality-gap target for the enclosing-ellipsoid solver.
    #[arg(long, default_value_t = 1e-7)]
    eps: f64,
    /// Relative eigenvalue gap that makes a longest axis count as unique.
    #[arg(long, default_value_t = 0.1)]
    gap_tol: f64,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Embed(args) => run_embed(args),
        Command::Extract(args) => run_extract(args),
        Command::Mvee(args) => run_mvee(args),
        Command::FheDemo(args) => run_fhe_demo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn run_embed(args: EmbedArgs) -> Result<(), CliError> {
    let config = RunConfig {
        eps: args.tuning.eps,
        gap_tol: args.tuning.gap_tol,
        axis_ratio: args.axis_ratio,
        payload_min: args.payload_min,
        decoys: args.decoys,
        seed: args.seed,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let messages = io::read_messages(&args.input).map_err(data_err)?;
    if let Some(dim) = args.dim {
        if let Some(bad) = messages.iter().find(|m| m.carrier_dim() != dim) {
            return Err(CliError::Data(format!(
                "message {} encodes to dimension {}, requested {dim}",
                bad.index(),
                bad.carrier_dim()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let plan = stego::embed(&messages, args.decoys, &config, &mut rng).map_err(data_err)?;
    io::write_plan(&args.output, &plan).map_err(data_err)?;
    outln!(
        "embedded {} message(s) into {} polytope(s) (dim {}, threshold {})",
        messages.len(),
        plan.polytopes().len(),
        plan.dim(),
        plan.carrier_threshold()
    );
    Ok(())
}

fn run_extract(args: ExtractArgs) -> Result<(), CliError> {
    let tuning_probe = RunConfig {
        eps: args.tuning.eps,
        gap_tol: args.tuning.gap_tol,
        ..RunConfig::default()
    };
    tuning_probe
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let plan = io::read_plan(&args.input).map_err(data_err)?;
    let result = stego::extract(&plan, args.tuning.eps, args.tuning.gap_tol);
    io::write_messages(&args.output, &result.messages).map_err(data_err)?;
    for r in &result.rejected {
        outln!("polytope {}: rejected ({})", r.position, r.reason);
    }
    outln!(
        "recovered {} message(s), rejected {} polytope(s)",
        result.messages.len(),
        result.rejected.len()
    );
    Ok(())
}

fn run_mvee(args: MveeArgs) -> Result<(), CliError> {
    if !(args.eps > 0.0 && args.eps < 1.0) {
        return Err(CliError::Usage(format!(
            "eps must lie in (0, 1), got {}",
            args.eps
        )));
    }
    let points = io::read_points(&args.input).map_err(data_err)?;
    let ps = mvee::PointSet::new(points).map_err(data_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(MVEE_CLI_SEED);
    let sol = mvee::solve_mvee(&ps, args.eps, &mut rng).map_err(data_err)?;
    let center = sol.ellipsoid.center();
    print!("center");
    for x in center.iter() {
        print!(" {x}");
    }
    outln!();
    for r in 0..ps.dim() {
        print!("shape");
        for c in 0..ps.dim() {
            print!(" {}", sol.ellipsoid.shape()[(r, c)]);
        }
        outln!();
    }
    print!("semi_axes");
    for x in sol.ellipsoid.semi_axis_lengths().iter() {
        print!(" {x}");
    }
    outln!();
    outln!(
        "iterations {} final_eps {} support {}",
        sol.report.iterations,
        sol.report.final_eps,
        sol.report.support.len()
    );
    Ok(())
}

fn run_fhe_demo(args: FheDemoArgs) -> Result<(), CliError> {
    let params = fhe::FheParams::new(args.q, args.n, 4, 32)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let km = fhe::keygen(&params, &mut rng);

    outln!(
        "params q {} n {} noise_bound {} pk_size {}",
        params.q(),
        params.n(),
        params.noise_bound(),
        params.pk_size()
    );
    for (m1, m2) in [(0u64, 0u64), (0, 1), (1, 0), (1, 1)] {
        let c1 = fhe::encrypt(&km.public, m1, &mut rng).map_err(data_err)?;
        let c2 = fhe::encrypt(&km.public, m2, &mut rng).map_err(data_err)?;
        let sum = fhe::add(&c1, &c2).map_err(data_err)?;
        let prod = fhe::mul(&c1, &c2).map_err(data_err)?;
        let switched = fhe::switch_key(&km.hints, &prod).map_err(data_err)?;
        let s = fhe::decrypt(&km.secret, &sum).map_err(data_err)?;
        let p = fhe::decrypt_quadratic(&km.secret, &prod).map_err(data_err)?;
        let w = fhe::decrypt(&km.switch_secret, &switched).map_err(data_err)?;
        outln!(
            "bits {m1} {m2}: sum {s} product {p} switched_product {w} noise_sum {} noise_product {} noise_switched {}",
            fhe::noise_of(&km.secret, &sum).map_err(data_err)?,
            fhe::noise_of_quadratic(&km.secret, &prod).map_err(data_err)?,
            fhe::noise_of(&km.switch_secret, &switched).map_err(data_err)?,
        );
        if s != (m1 + m2) % 2 || p != m1 * m2 || w != m1 * m2 {
            return Err(CliError::Data(format!(
                "homomorphic result mismatch for bits {m1}, {m2}"
            )));
        }
    }

    // Drive the noise past q/2 by repeated doubling; parity breaks exactly
    // at the first wrap.
    let mut c = fhe::encrypt(&km.public, 1, &mut rng).map_err(data_err)?;
    for step in 1..=50 {
        c = fhe::add(&c, &c).map_err(data_err)?;
        let bit = fhe::decrypt(&km.secret, &c).map_err(data_err)?;
        if bit != 0 {
            outln!(
                "overflow after {step} doubling(s): decrypt {bit} (expected 0), noise {}",
                fhe::noise_of(&km.secret, &c).map_err(data_err)?
            );
            return Ok(());
        }
    }
    Err(CliError::Data(
        "noise never overflowed within 50 doublings".into(),
    ))
}
