use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gasdecay_cli::commands::{cmd_riemann, cmd_run, cmd_verify};
use gasdecay_cli::CliError;

#[derive(Parser)]
#[command(name = "gasdecay", version, about = "Isentropic gas dynamics solver with decay diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme and write snapshots, diagnostics, summary and manifest.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config value, e.g. `--set mesh.dx=0.025`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a snapshot every N steps (initial and final are always written).
        #[arg(long, value_name = "N")]
        snapshots: Option<usize>,
    },
    /// Solve one Riemann problem and print its structure.
    Riemann {
        /// Left state as `rho,v`.
        #[arg(long, allow_hyphen_values = true)]
        left: String,
        /// Right state as `rho,v`.
        #[arg(long, allow_hyphen_values = true)]
        right: String,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        rho_bar: f64,
        /// Points in the sampled profile.
        #[arg(long, default_value_t = 401)]
        samples: usize,
        /// Directory for `riemann_profile.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the inequalities; ids: poly-f, poly-g, poly-g-third, g1-sign,
    /// g2-sign, square-identity, all.
    Verify {
        #[arg(default_value = "all")]
        claims: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "verify.KEY=VALUE")]
        set: Vec<String>,
    },
}

/// Print to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, set, out, snapshots } => cmd_run(config.as_deref(), &set, out, snapshots).map(|o| {
            let s = &o.summary;
            emit(&format!(
                "{} steps to t = {:.6}: E0 = {:.6}, M0 = {:.6}, mass drift = {:.3e}, t0 = {}",
                s.steps,
                s.t_final,
                s.e0,
                s.m0,
                s.mass_drift,
                s.t0.map_or("none".to_string(), |t| format!("{t:.6}"))
            ));
            emit(&format!("output in {}", o.out_dir.display()));
            true
        }),
        Command::Riemann {
            left,
            right,
            gamma,
            rho_bar,
            samples,
            out,
        } => cmd_riemann(&left, &right, gamma, rho_bar, samples, out.as_deref()).and_then(|r| {
            let text = serde_json::to_string_pretty(&r).map_err(|e| CliError::Runtime(e.to_string()))?;
            emit(&text);
            Ok(true)
        }),
        Command::Verify { claims, config, set } => {
            cmd_verify(&claims, config.as_deref(), &set, &mut std::io::stdout()).map(|reports| reports.iter().all(|r| r.pass))
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more claims failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
