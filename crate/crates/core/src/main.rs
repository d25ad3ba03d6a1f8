//! Command-line harness: equilibrium solves, ε-sweeps, structure audits
//! and benchmarks driven by a TOML config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emrelax::equilibrium::{equilibrium_residuals, solve_equilibrium, SolveOptions};
use emrelax::experiments::bench::{bench_csv, benchmark};
use emrelax::experiments::structure_audit::run_audit;
use emrelax::experiments::sweep::{run_sweep, write_report};
use emrelax::experiments::ExperimentConfig;
use emrelax::snapshot::Snapshot;

#[derive(Parser)]
#[command(
    name = "emrelax",
    about = "Pseudo-spectral Euler-Maxwell / Euler-Poisson relaxation runs, \
             their drift-diffusion limit, and convergence-rate sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent sweep workers (one per ε by default).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationary state and write its snapshot and residuals.
    Equilibrium(Common),
    /// Run the ε-sweep: relaxation vs limit trajectories, error
    /// functionals, rate fits. Writes report.csv/report.json/rate.txt.
    Sweep(Common),
    /// Run the structural identity audit over the γ test matrix.
    Structure(Common),
    /// Measure wall-clock cost per simulated time unit.
    Bench(Common),
}

fn load(common: &Common) -> emrelax::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_equilibrium(common: &Common) -> emrelax::Result<bool> {
    let cfg = load(common)?;
    let grid = cfg.build_grid()?;
    let law = cfg.build_law()?;
    let doping = cfg.build_doping()?;
    let eq = solve_equilibrium(
        &doping,
        &law,
        &grid,
        &SolveOptions {
            b_e: cfg.b_e.clone(),
            ..Default::default()
        },
    )?;
    let res = equilibrium_residuals(&eq, &doping, &law)?;
    std::fs::create_dir_all(&common.out)?;
    Snapshot::from_scalar(&eq.n_e).write(&common.out.join("equilibrium_n.field"))?;
    Snapshot::from_scalar(&eq.phi_e).write(&common.out.join("equilibrium_phi.field"))?;
    Snapshot::from_vector(&eq.e_e).write(&common.out.join("equilibrium_e.field"))?;
    let header = serde_json::json!({
        "law": { "gamma": law.gamma, "k_const": law.k_const },
        "doping": doping,
        "b_e": eq.b_e,
        "newton_iterations": eq.stats.iterations,
        "residuals": res,
    });
    std::fs::write(
        common.out.join("equilibrium.json"),
        serde_json::to_string_pretty(&header).expect("serializable"),
    )?;
    println!(
        "equilibrium: {} Newton iterations, residuals: elliptic {:.3e}, force {:.3e}, gauss {:.3e}, curl {:.3e}",
        eq.stats.iterations, res.elliptic, res.force, res.gauss, res.curl
    );
    Ok(true)
}

fn cmd_sweep(common: &Common) -> emrelax::Result<bool> {
    let cfg = load(common)?;
    let workers = common
        .workers
        .unwrap_or_else(|| cfg.epsilon_list.len().max(1));
    let report = run_sweep(&cfg, workers, Some(&common.out))?;
    write_report(&report, &common.out)?;
    print!("{}", emrelax::experiments::sweep::rate_text(&report));
    for row in &report.rows {
        println!(
            "epsilon {:>7.4}: E_T {:.6e}, D_T {:.6e}, drift_E {:.2e}, drift_B {:.2e}{}",
            row.epsilon,
            row.e_t,
            row.d_t,
            row.drift_e,
            row.drift_b,
            if row.valid { "" } else { "  [invalid]" }
        );
    }
    Ok(report.rows.iter().all(|r| r.valid))
}

fn cmd_structure(common: &Common) -> emrelax::Result<bool> {
    let cfg = load(common)?;
    let report = run_audit(&cfg)?;
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(
        common.out.join("structure.json"),
        serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    for row in &report.rows {
        println!(
            "{}: {} = {:.3e} (threshold {:.3e})",
            if row.pass { "PASS" } else { "FAIL" },
            row.name,
            row.value,
            row.threshold
        );
    }
    Ok(report.all_pass)
}

fn cmd_bench(common: &Common) -> emrelax::Result<bool> {
    let cfg = load(common)?;
    let report = benchmark(&cfg)?;
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(common.out.join("bench.csv"), bench_csv(&report))?;
    std::fs::write(
        common.out.join("bench.json"),
        serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    print!("{}", bench_csv(&report));
    if let Some(spread) = report.relax_cost_spread {
        println!("relaxation cost spread across epsilon: {:.1}%", 100.0 * spread);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Equilibrium(c) => cmd_equilibrium(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Structure(c) => cmd_structure(c),
        Command::Bench(c) => cmd_bench(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
