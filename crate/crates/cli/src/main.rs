use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "geostab", version, about = "Stability experiments for geometric integrators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or a bundled fixture name.
    Run {
        config: String,
        /// Override a config key, e.g. `--set h.count=20`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory; takes precedence over GEOSTAB_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiment kinds, their keys and the bundled fixtures.
    List,
    /// Print the tool version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", geostab_cli::list_text());
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("geostab {}", geostab_cli::VERSION);
            ExitCode::SUCCESS
        }
        Command::Run { config, set, out } => match geostab_cli::run(&config, &set, out.as_deref()) {
            Ok(report) => {
                for n in &report.manifest.notes {
                    eprintln!("{n}");
                }
                eprintln!("wrote {}", report.out_dir.display());
                match report.error {
                    None => ExitCode::SUCCESS,
                    Some(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(e.exit_code() as u8)
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
