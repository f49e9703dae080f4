//! conetrace command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conetrace::cli::{
    cmd_expand, cmd_poles, cmd_traces, cmd_verify, parse_spec, CliError, CutoffChoice, Overrides,
};

#[derive(Parser)]
#[command(name = "conetrace", about = "heat trace expansions of model cone operators")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the full expansion table (both coefficient routes).
    Expand(RunArgs),
    /// List the poles of B(z)Gamma(z) with orders and Laurent data.
    Poles(RunArgs),
    /// Print the residue trace functionals Tr_sigma, Tr_partial, Tr_partial_sigma.
    Traces(RunArgs),
    /// Run the full oracle chain; nonzero exit on any failed check.
    Verify(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Model file.
    spec: PathBuf,
    /// Write the machine-readable CSV table here (expand only).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Override the pole-catalog strip in Re z.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    strip: Option<Vec<f64>>,
    /// Override the expansion horizon K.
    #[arg(long)]
    horizon: Option<f64>,
    /// Override the excision function.
    #[arg(long, value_parser = ["sharp", "smooth"])]
    cutoff: Option<String>,
    /// Worker threads for the numeric paths (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            horizon: self.horizon,
            strip: self.strip.as_ref().map(|v| (v[0], v[1])),
            cutoff: self.cutoff.as_deref().map(|s| match s {
                "smooth" => CutoffChoice::Smooth,
                _ => CutoffChoice::Sharp,
            }),
        }
    }
}

fn run() -> Result<bool, CliError> {
    let args = Args::parse();
    let run_args = match &args.command {
        Command::Expand(a) | Command::Poles(a) | Command::Traces(a) | Command::Verify(a) => a,
    };
    if run_args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(run_args.threads)
            .build_global()
            .map_err(|e| CliError::Spec(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&run_args.spec)?;
    let spec = parse_spec(&text)?;
    let ov = run_args.overrides();
    match &args.command {
        Command::Expand(a) => {
            let report = cmd_expand(&spec, &ov)?;
            print!("{}", report.to_text());
            if let Some(path) = &a.csv {
                std::fs::write(path, report.to_csv())?;
            }
            Ok(true)
        }
        Command::Poles(_) => {
            let report = cmd_poles(&spec, &ov)?;
            print!("{}", report.to_text());
            Ok(true)
        }
        Command::Traces(_) => {
            let report = cmd_traces(&spec, &ov)?;
            print!("{}", report.to_text());
            Ok(true)
        }
        Command::Verify(_) => {
            let report = cmd_verify(&spec, &ov)?;
            print!("{}", report.to_text());
            Ok(report.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
