use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bubbleforge::commands::{cmd_constants, cmd_delta, cmd_scan, cmd_verify};
use bubbleforge::exec::PoolExecutor;
use bubbleforge::params::{default_beta, RunParams};
use bubbleforge::{CliError, Report, Suite};
use bubbleforge_core::quadrature::Quadrature;
use bubbleforge_core::QuadratureSpec;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bubbleforge",
    version,
    about = "Polygonal bubble ansatz: constants, scales, energy scans and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[arg(long, global = true, default_value_t = QuadratureSpec::default().rel_tol)]
    rel_tol: f64,

    #[arg(long, global = true, default_value_t = QuadratureSpec::default().max_subdivisions)]
    max_subdivisions: usize,

    /// Offset of the quasi-random sample sequence
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Model {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long, default_value_t = 2.0 / 9.0)]
    t: f64,
    #[arg(long, default_value_t = default_beta(), allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    alpha: f64,
    /// Use this scale and derive beta from it
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Reduced-energy constants for a k-gon
    Constants {
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Concentration scale solving sqrt(delta)|log delta| = -1/beta
    Delta {
        #[arg(long, default_value_t = default_beta(), allow_hyphen_values = true)]
        beta: f64,
    },
    /// Numerical against predicted energy over a grid of t
    Scan {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 0.1)]
        t_min: f64,
        #[arg(long, default_value_t = 0.4)]
        t_max: f64,
        #[arg(long, default_value_t = 31)]
        steps: usize,
    },
    /// Run verification suites
    Verify {
        #[command(flatten)]
        model: Model,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

fn params(cli: &Cli, m: &Model) -> RunParams {
    RunParams {
        k: m.k,
        q: m.q,
        t: m.t,
        beta: m.beta,
        alpha: m.alpha,
        delta: m.delta,
        seed: cli.seed,
        spec: QuadratureSpec {
            rel_tol: cli.rel_tol,
            max_subdivisions: cli.max_subdivisions,
            ..QuadratureSpec::default()
        },
    }
}

fn warn_regime(beta: f64) {
    if let Some(w) = RunParams::regime_warning(beta) {
        eprintln!("{w}");
    }
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let exec = PoolExecutor::from_env()?;
    match &cli.command {
        Command::Constants { k } => cmd_constants(*k),
        Command::Delta { beta } => {
            warn_regime(*beta);
            cmd_delta(*beta)
        }
        Command::Scan {
            model,
            t_min,
            t_max,
            steps,
        } => {
            let p = params(cli, model);
            p.validate()?;
            warn_regime(p.resolve()?.0);
            let quad = Quadrature::with_executor(p.spec, &exec);
            cmd_scan(&p, *t_min, *t_max, *steps, &quad)
        }
        Command::Verify { model, suite } => {
            let p = params(cli, model);
            p.validate()?;
            warn_regime(p.resolve()?.0);
            let quad = Quadrature::with_executor(p.spec, &exec);
            cmd_verify(*suite, &p, &quad)
        }
    }
}

fn write(cli: &Cli, report: &Report) -> anyhow::Result<()> {
    let out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.format {
        Format::Json => report.write_json(out),
        Format::Csv => report.write_csv(out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Err(e) = write(&cli, &report) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for c in report.failed_checks() {
        eprintln!(
            "FAIL {}/{}: measured {:e} > tolerance {:e}",
            c.suite, c.name, c.measured, c.tolerance
        );
    }
    ExitCode::from(report.exit_code())
}
