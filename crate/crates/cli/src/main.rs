use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qafem::poly::{annihilator_with_cap, verify_polynomial, DEFAULT_TERM_CAP};
use qafem_cli::compare::{compare, parse_reference, read_history};
use qafem_cli::witness::run_witness;
use qafem_cli::{run, CliError};

#[derive(Parser)]
#[command(name = "qafem", version, about = "Adaptive finite elements for nonlinear eigenvalue problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop described by a TOML config.
    Afem { config: PathBuf },
    /// Write the annihilator of sums of k-th roots of n variables.
    Annihilator {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
        cap: usize,
        /// Also check the result on this many exact random samples.
        #[arg(long)]
        verify: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Search for a point where a fractional polynomial or log-sum is nonzero.
    Witness { config: PathBuf },
    /// Slopes against DOFs and final deltas for two history.csv files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// `column=value`: fit |value - reference| instead of |value|.
        #[arg(long = "reference", value_parser = parse_reference)]
        reference: Vec<(String, f64)>,
        /// Fit over the last N rows only.
        #[arg(long)]
        last: Option<usize>,
    },
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Afem { config } => {
            let out = std::env::var_os("OUT_DIR").map(PathBuf::from);
            let outcome = run::run(&config, out.as_deref())?;
            let h = &outcome.history;
            println!(
                "{} iterations, {}; artifacts in {}",
                h.records.len(),
                h.stop_reason,
                outcome.out_dir.display()
            );
            Ok(())
        }
        Command::Annihilator {
            n,
            k,
            out,
            cap,
            verify,
            seed,
        } => {
            let p = annihilator_with_cap(n, k, cap).map_err(|e| CliError::Solver(e.to_string()))?;
            write_file(&out, &p.to_text())?;
            println!("{} terms, total degree {:?}, written to {}", p.len(), p.total_degree(), out.display());
            if let Some(samples) = verify {
                let r = verify_polynomial(&p, k, samples, seed).map_err(|e| CliError::Solver(e.to_string()))?;
                println!(
                    "verification: {} samples, max |P| = {}, {}",
                    r.samples,
                    r.max_abs_exact,
                    if r.pass { "pass" } else { "FAIL" }
                );
                if !r.pass {
                    return Err(CliError::Solver("annihilation check failed".into()));
                }
            }
            Ok(())
        }
        Command::Witness { config } => {
            println!("{}", run_witness(&config)?.to_text());
            Ok(())
        }
        Command::Compare { a, b, reference, last } => {
            let mut ha = read_history(&a)?;
            let mut hb = read_history(&b)?;
            if let Some(n) = last {
                ha = ha.tail(n);
                hb = hb.tail(n);
            }
            let refs: BTreeMap<String, f64> = reference.into_iter().collect();
            print!("{}", compare(&ha, &hb, &refs)?.to_text());
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qafem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
