use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qnoise::netlist::parse_netlist;
use qnoise::run::{budget_rows, run};

#[derive(Parser)]
#[command(name = "qnoise", version, about = "Quantum network noise budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a netlist and write spectra.csv and budget.csv.
    Run {
        file: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write budget.json.
        #[arg(long)]
        json: bool,
        /// Override a preset parameter, e.g. `--set loop_gain=inf`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        file,
        out,
        json,
        overrides,
    } = Cli::parse().command;

    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    let mut doc = match parse_netlist(&text) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{}:{e}", file.display());
            return ExitCode::from(1);
        }
    };
    for o in &overrides {
        if let Err(e) = doc.apply_override(o) {
            eprintln!("error: --set {o}: {e}");
            return ExitCode::from(if doc.preset().is_some() { 1 } else { 2 });
        }
    }
    match run(&doc, &out, json) {
        Ok(result) => {
            for row in budget_rows(&result).iter().filter(|r| r.source == "total") {
                print!(
                    "{}: band mean {:.4e}, dominant {}",
                    row.estimator,
                    row.band_mean_psd,
                    row.dominant.join(", ")
                );
                match row.acceleration_asd {
                    Some(a) => println!(", acceleration {a:.4e} m/s^2/rtHz"),
                    None => println!(),
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
