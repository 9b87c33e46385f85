use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weaktime::harness::{cmd_fig1, cmd_fig2, cmd_sweep, cmd_table, cmd_verify, ExperimentConfig};
use weaktime::{Error, Result};

#[derive(Parser)]
#[command(name = "weaktime", version, about = "Transition path times and time-averaged weak values")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON). Defaults to the built-in reference experiment.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "WEAKTIME_OUT_DIR")]
    out: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// P(t;x) with its steepest-descent overlay.
    Fig1,
    /// Weak momentum deviation from its mean, exact and steepest-descent.
    Fig2,
    /// Time-averaged weak values, uncertainty products, arrival momentum.
    Table {
        /// Fail with exit code 3 if any scalar drifts by more than 1e-8 at doubled resolution.
        #[arg(long)]
        resolution_check: bool,
    },
    /// Run the invariant suite; exit code 1 if any check fails.
    Verify,
    /// Repeat `table` over several width parameters.
    Sweep {
        /// Comma-separated gammas; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidConfig(vec![format!("cannot start thread pool: {e}")]))?;
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    match cli.command {
        Command::Fig1 => println!("{}", cmd_fig1(&cfg, &out)?.display()),
        Command::Fig2 => println!("{}", cmd_fig2(&cfg, &out)?.display()),
        Command::Table { resolution_check } => {
            let (record, path) = cmd_table(&cfg, &out, resolution_check)?;
            let s = &record.summary;
            let sd = &record.steepest_descent;
            println!("{:<24}{:>16}{:>16}{:>12}", "quantity", "exact", "steepest", "drift");
            let rows = [
                ("mean_p", s.mean_p, sd.mean_p, "mean_p"),
                ("std_p", s.std_p(), sd.std_p, "std_p"),
                ("mean_t", s.mean_t, f64::NAN, "mean_t"),
                ("var_t", s.var_t, sd.var_t, "var_t"),
                ("mean_h", s.mean_h, sd.mean_h, "mean_h"),
                ("var_h", s.var_h, sd.var_h, "var_h"),
                ("var_t*var_h", s.variance_product(), sd.uncertainty_product, "variance_product"),
                ("sqrt(var_t*var_h)", s.product_stddev, sd.uncertainty_product.sqrt(), "product_stddev"),
                ("arrival_momentum", record.arrival.momentum, sd.arrival_momentum, "arrival_momentum"),
                ("N(x)", record.normalization, sd.normalization, "normalization"),
            ];
            for (label, exact, approx, key) in rows {
                let drift = record.resolution.get(key).map_or(f64::NAN, |r| r.relative_drift);
                println!("{label:<24}{exact:>16.8}{approx:>16.8}{drift:>12.2e}");
            }
            println!(
                "commutator = {:.6}{:+.6}i (expected {:+.6}i)",
                s.commutator.re,
                s.commutator.im,
                s.expected_commutator().im
            );
            println!("{}", path.display());
        }
        Command::Verify => {
            let (report, path) = cmd_verify(&cfg, &out)?;
            for line in report.lines() {
                println!("{line}");
            }
            println!("{}", path.display());
            return Ok(report.passed());
        }
        Command::Sweep { gammas } => {
            let gammas = gammas.unwrap_or_else(|| cfg.gammas.clone());
            let (records, path) = cmd_sweep(&cfg, &gammas, &out)?;
            for r in &records {
                println!(
                    "gamma = {:e}: mean_p = {:.6}, std_p = {:.6}",
                    r.config.state.gamma,
                    r.summary.mean_p,
                    r.summary.std_p()
                );
            }
            println!("{}", path.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
