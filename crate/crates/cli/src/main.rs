use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use memoryless_bench::{run_sweep, write_csv, SweepConfig};
use memoryless_core::io::{load_instance, load_peaks, peaks_to_json, trajectory_rows, SolvedGrid};
use memoryless_core::{
    follow_local_policy, reconstruct_value_function, solve_memoized, solve_memoryless,
    value_iteration, value_on_demand, MdpInstance, DEFAULT_RESIDUAL,
};

const TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "memoryless",
    version,
    about = "Exact peak-based solver for sparse-reward grid MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write its peak list
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Memoryless)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Value of one state, computed from a peak list
    Value {
        peaks: PathBuf,
        #[arg(long, value_parser = parse_xy)]
        state: (i64, i64),
    },
    /// Follow the optimal policy from a start state
    Follow {
        peaks: PathBuf,
        #[arg(long, value_parser = parse_xy)]
        start: (i64, i64),
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        steps: u64,
    },
    /// Check the memoryless solution against value iteration
    Compare { instance: PathBuf },
    /// Run a benchmark sweep and write CSV
    Bench {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Memoryless,
    Memoized,
}

fn parse_xy(s: &str) -> Result<(i64, i64), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let n = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((n(x)?, n(y)?))
}

struct Failure {
    code: u8,
    message: String,
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

fn solve_failed(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| solve_failed(format!("{}: {e}", path.display())))
}

fn load_instance_file(path: &Path) -> Result<MdpInstance, Failure> {
    load_instance(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn load_peaks_file(path: &Path) -> Result<SolvedGrid, Failure> {
    load_peaks(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve {
            instance,
            mode,
            out,
        } => {
            let inst = load_instance_file(&instance)?;
            let start = Instant::now();
            let peaks = match mode {
                Mode::Memoryless => solve_memoryless(&inst),
                Mode::Memoized => solve_memoized(&inst).map(|(p, _)| p),
            }
            .map_err(solve_failed)?;
            let secs = start.elapsed().as_secs_f64();
            write(
                &out,
                peaks_to_json(&peaks, inst.env(), inst.discount()).as_bytes(),
            )?;
            println!("peaks: {}", peaks.len());
            println!("wall_seconds: {secs:.6e}");
        }
        Command::Value { peaks, state } => {
            let solved = load_peaks_file(&peaks)?;
            let s = solved.grid.state_at(state.0, state.1).map_err(invalid)?;
            let v = value_on_demand(&solved.peaks, s, &solved.grid, solved.discount)
                .map_err(solve_failed)?;
            println!("{}", significant(v, 9));
        }
        Command::Follow {
            peaks,
            start,
            steps,
        } => {
            let solved = load_peaks_file(&peaks)?;
            let s = solved.grid.state_at(start.0, start.1).map_err(invalid)?;
            let steps = usize::try_from(steps).map_err(invalid)?;
            let (trajectory, err) =
                match follow_local_policy(&solved.peaks, s, steps, &solved.grid, solved.discount) {
                    Ok(t) => (t, None),
                    Err(e) => (e.partial.clone(), Some(e)),
                };
            for row in trajectory_rows(&trajectory, &solved.grid) {
                println!(
                    "{}",
                    serde_json::to_string(&row).expect("plain data serializes")
                );
            }
            if let Some(e) = err {
                return Err(solve_failed(e));
            }
        }
        Command::Compare { instance } => {
            let inst = load_instance_file(&instance)?;
            let start = Instant::now();
            let vi = value_iteration(&inst, DEFAULT_RESIDUAL).map_err(solve_failed)?;
            let vi_secs = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let peaks = solve_memoryless(&inst).map_err(solve_failed)?;
            let ml_secs = start.elapsed().as_secs_f64();
            let diff =
                reconstruct_value_function(&peaks, inst.env(), inst.discount()).max_abs_diff(&vi);
            println!("max_abs_diff: {diff:.6e}");
            println!("vi_seconds: {vi_secs:.6e}");
            println!("memoryless_seconds: {ml_secs:.6e}");
            if diff > TOLERANCE {
                return Err(Failure {
                    code: 3,
                    message: format!("difference {diff:.3e} exceeds {TOLERANCE:e}"),
                });
            }
        }
        Command::Bench { config, out } => {
            let text = read(&config)?;
            let config = SweepConfig::from_json(&text).map_err(invalid)?;
            let outcome = run_sweep(&config).map_err(invalid)?;
            for f in &outcome.failures {
                let solver = f
                    .solver
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "-".into());
                eprintln!("config {} solver {solver}: {}", f.config_id, f.message);
            }
            let mut buf = Vec::new();
            write_csv(&outcome.records, &mut buf).map_err(solve_failed)?;
            write(&out, &buf)?;
            eprintln!(
                "{} records written to {}",
                outcome.records.len(),
                out.display()
            );
        }
    }
    Ok(())
}

/// `v` rounded to `digits` significant digits, in plain notation.
fn significant(v: f64, digits: i32) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
