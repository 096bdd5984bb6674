//! Command-line front end: `run` executes a JSON experiment config and writes
//! artifacts, `validate` checks a config without running it, `list-models`
//! prints the registered model families with their moment tables.
//!
//! Exit codes: 0 all checks passed, 1 configuration or resource error,
//! 2 run completed but a statistical check failed.

mod config;
mod output;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fluctlab::{
    disorder_moments, fisher_information, prior_moments, second_fisher, DensityModel,
    DisorderSpec, Error, PriorSpec, Result,
};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "fluctlab",
    version,
    about = "Numerical laboratory for Gaussian fluctuations of spin-glass free energies and \
             spiked-matrix likelihood ratios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config and write artifacts.
    Run {
        /// Path to the JSON experiment configuration.
        config: PathBuf,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: config `threads`, then $FLUCTLAB_THREADS,
        /// then the core count). Results do not depend on this value.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (default: config `output`, then
        /// runs/<experiment>-seed<seed>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config against the schema and model registry without running.
    Validate {
        /// Path to the JSON experiment configuration.
        config: PathBuf,
    },
    /// Print registered disorder families, priors, and densities with their
    /// moment tables.
    ListModels,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, threads, out } => cmd_run(config, seed, threads, out),
        Command::Validate { config: path } => {
            let config = ExperimentConfig::load(&path)?;
            let resolved = config::resolve(&config)?;
            println!(
                "ok: {} is a valid {} experiment (seed {})",
                path.display(),
                resolved.kind.name(),
                config.seed
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ListModels => {
            list_models()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_run(
    path: PathBuf,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let threads = config::resolve_threads(threads, config.threads)?;
    if threads > 0 {
        // Echo the effective worker count so the artifact records the run as
        // executed (the payload itself is thread-count independent).
        config.threads = Some(threads);
    }
    let resolved = config::resolve(&config)?;
    let out_dir = output::resolve_out_dir(out, &config);

    let run_output = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Resource(format!("cannot build a {threads}-thread pool: {e}")))?;
        pool.install(|| runner::run(&resolved))?
    } else {
        runner::run(&resolved)?
    };

    output::write_artifacts(&out_dir, &config, &run_output)?;

    let mut passed = 0usize;
    let mut failed = 0usize;
    let mut ungated = 0usize;
    if let Some(sections) = run_output.summary.get("sections").and_then(|s| s.as_array()) {
        for section in sections {
            match section.get("pass") {
                Some(serde_json::Value::Bool(true)) => passed += 1,
                Some(serde_json::Value::Bool(false)) => failed += 1,
                _ => ungated += 1,
            }
        }
    }
    println!("experiment: {}", resolved.kind.name());
    println!("sections: {passed} passed, {failed} failed, {ungated} without a gated check");
    println!("artifacts: {}", out_dir.display());
    println!("overall: {}", if run_output.all_pass { "PASS" } else { "FAIL" });
    Ok(if run_output.all_pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn list_models() -> Result<()> {
    println!("disorder families (w2 = N·E[W_kk²] diagonal, w4 = N²·E[W_ij⁴], κ₄ = w4 − 3):");
    let disorders = [
        ("gaussian", DisorderSpec::gaussian_goe(), "GOE: N(0,1/N) off-diagonal, N(0,2/N) diagonal"),
        ("rademacher", DisorderSpec::rademacher_scaled(1.0)?, "entries ±1/√N"),
        ("uniform", DisorderSpec::uniform_scaled(1.0)?, "entries uniform on ±√(3/N)"),
    ];
    for (name, spec, note) in &disorders {
        let m = disorder_moments(spec);
        println!(
            "  {name:<11} w2={:.3}  w4={:.3}  kappa4={:+.3}   ({note})",
            m.w2, m.w4, m.kappa4
        );
    }

    println!();
    println!("spike priors (m4 = N²·E[x_1⁴], m8 = N⁴·E[x_1⁸]):");
    let priors = [
        ("rademacher", PriorSpec::rademacher(), "x_i = ±1/√N; unit norm by construction"),
        ("gaussian", PriorSpec::gaussian(false), "x_i ~ N(0,1/N); normalized variant available"),
        ("uniform", PriorSpec::uniform(false), "x_i uniform; normalized variant available"),
    ];
    for (name, prior, note) in &priors {
        let m = prior_moments(prior);
        println!("  {name:<11} m4={:.3}  m8={:.3}   ({note})", m.m4, m.m8);
    }

    println!();
    println!("noise densities (F_p = Fisher information, G_p = second-order Fisher):");
    let densities = [
        ("gaussian", DensityModel::standard_gaussian(), "standard normal"),
        ("logistic", DensityModel::logistic_unit_variance(), "unit-variance logistic"),
    ];
    for (name, density, note) in &densities {
        let f_p = fisher_information(density)?;
        let g_p = second_fisher(density)?;
        println!("  {name:<11} F_p={f_p:.6}  G_p={g_p:.6}   ({note})");
    }
    println!();
    println!("custom models: tabulated (x, log p) CSV densities via model.density.table or");
    println!("model.disorder.off_table; see the config schema in the README.");
    Ok(())
}
