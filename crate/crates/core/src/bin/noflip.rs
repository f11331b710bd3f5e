use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use noflip::{acceptance, report, scenario};

#[derive(Parser)]
#[command(name = "noflip", version, about = "Order-invariance checks for a universal qubit NOT device")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses requested by a scenario file.
    Verify {
        scenario: PathBuf,
        #[arg(long, default_value_t = report::DEFAULT_SEED)]
        seed: u64,
        /// Directory for the report and plot tables.
        #[arg(long, default_value = "noflip-out")]
        out: PathBuf,
        /// Overrides such as `differs=1e-8`; comma separated or repeated.
        #[arg(long = "tolerance-overrides", value_delimiter = ',', num_args = 1..)]
        tolerance_overrides: Vec<String>,
    },
    /// Run the acceptance suite.
    Selftest {
        #[arg(long, default_value_t = acceptance::DEFAULT_SEED)]
        seed: u64,
        /// Also write the report to DIR/selftest.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn verify(path: PathBuf, seed: u64, out: PathBuf, overrides: Vec<String>) -> Result<i32, String> {
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut sc = scenario::parse_scenario(&text).map_err(|e| format!("{}:\n{e}", path.display()))?;
    for o in &overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| format!("tolerance override '{o}' is not key=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("tolerance override '{o}' has a non-numeric value"))?;
        sc.tolerances.set(key.trim(), value)?;
    }
    let rep = report::run_scenario(&sc, seed);
    print!("{}", rep.render());
    let files = report::write_outputs(&rep, &out).map_err(|e| format!("{}: {e}", out.display()))?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(rep.exit_status())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            scenario,
            seed,
            out,
            tolerance_overrides,
        } => verify(scenario, seed, out, tolerance_overrides),
        Command::Selftest { seed, out } => {
            let st = acceptance::selftest(seed);
            print!("{}", st.report);
            match out {
                Some(dir) => fs::create_dir_all(&dir)
                    .and_then(|_| fs::write(dir.join("selftest.txt"), &st.report))
                    .map(|_| i32::from(!st.passed()))
                    .map_err(|e| format!("{}: {e}", dir.display())),
                None => Ok(i32::from(!st.passed())),
            }
        }
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
