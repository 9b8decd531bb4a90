//! `riesz`: verification suites, constant searches, and demonstrations.
//!
//! Exit codes: 0 success, 1 assertion violation, 2 usage error, 3
//! falsification alarm.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod measures;
mod run;
mod search;
mod torus;
mod trace;
mod verify;

use run::{Artifacts, Failure, Outcome, RunConfig, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "riesz", version, about = "Dilation inequalities for Hardy spaces on the disc and the infinite torus")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Global {
    /// Base seed of every random stream
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Quadrature nodes per circle
    #[arg(long, global = true, default_value_t = riesz_core::circle::DEFAULT_POINTS)]
    quad_points: usize,
    /// Monte Carlo sample budget
    #[arg(long, global = true, default_value_t = riesz_core::polytorus::DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    /// Directory for CSV / JSON-lines artifacts (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (all cores when absent)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replay the documented examples of the command and exit
    #[arg(long, global = true)]
    selftest: bool,
    #[arg(long, global = true, default_value_t = riesz_core::lemma::LEMMA_TOL)]
    tol_lemma: f64,
    #[arg(long, global = true, default_value_t = riesz_core::blaschke::CHAIN_TOL)]
    tol_chain: f64,
    #[arg(long, global = true, default_value_t = riesz_core::lemma::MONOTONE_TOL)]
    tol_monotone: f64,
    #[arg(long, global = true, default_value_t = riesz_core::polytorus::GRID_TOL)]
    tol_grid: f64,
    #[arg(long, global = true, default_value_t = riesz_core::measures::ANALYTIC_TOL)]
    tol_analytic: f64,
    #[arg(long, global = true, default_value_t = riesz_core::extremal::CEILING_TOL)]
    tol_ceiling: f64,
    /// Recovered Fourier coefficients versus exact ones
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol_coeff: f64,
    /// Chain-property residual of Poisson products
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_residual: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Random-instance suite for the dilation inequality
    VerifyLemma(verify::Args),
    /// Nelder-Mead search for the best constant
    SearchConstant(search::Args),
    /// Factorization trace of one polynomial
    Trace(trace::Args),
    /// Abschnitt suites on the torus
    Torus(torus::Args),
    /// Measure demonstrations and Poisson-product chains
    Measures(measures::Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyLemma(_) => "verify-lemma",
            Command::SearchConstant(_) => "search-constant",
            Command::Trace(_) => "trace",
            Command::Torus(_) => "torus",
            Command::Measures(_) => "measures",
        }
    }

    fn args_json(&self) -> serde_json::Value {
        let v = match self {
            Command::VerifyLemma(a) => serde_json::to_value(a),
            Command::SearchConstant(a) => serde_json::to_value(a),
            Command::Trace(a) => serde_json::to_value(a),
            Command::Torus(a) => serde_json::to_value(a),
            Command::Measures(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("riesz: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn execute(cli: Cli) -> Outcome {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let tolerances = Tolerances {
        lemma: g.tol_lemma,
        chain: g.tol_chain,
        monotone: g.tol_monotone,
        grid: g.tol_grid,
        analytic: g.tol_analytic,
        ceiling: g.tol_ceiling,
        coeff: g.tol_coeff,
        residual: g.tol_residual,
    };
    for (name, v) in [
        ("lemma", tolerances.lemma),
        ("chain", tolerances.chain),
        ("monotone", tolerances.monotone),
        ("grid", tolerances.grid),
        ("analytic", tolerances.analytic),
        ("ceiling", tolerances.ceiling),
        ("coeff", tolerances.coeff),
        ("residual", tolerances.residual),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Failure::Usage(format!("--tol-{name} must be a nonnegative number")));
        }
    }
    let config = RunConfig {
        command: cli.command.name(),
        seed: g.seed,
        quad_points: g.quad_points,
        mc_samples: g.mc_samples,
        tolerances,
        args: cli.command.args_json(),
    };
    if g.selftest {
        return match &cli.command {
            Command::VerifyLemma(_) => verify::selftest(),
            Command::SearchConstant(_) => search::selftest(),
            Command::Trace(_) => trace::selftest(),
            Command::Torus(_) => torus::selftest(),
            Command::Measures(_) => measures::selftest(),
        };
    }
    let out = Artifacts::new(g.out.clone(), &config)?;
    match &cli.command {
        Command::VerifyLemma(a) => verify::run(a, &config, &out),
        Command::SearchConstant(a) => search::run(a, &config, &out),
        Command::Trace(a) => trace::run(a, &config, &out),
        Command::Torus(a) => torus::run(a, &config, &out),
        Command::Measures(a) => measures::run(a, &config, &out),
    }
}
