use rayon::prelude::*;
use serde::Serialize;

use riesz_core::extremal::{self, SearchConfig, SearchMode, CEILING};
use riesz_core::Complex64;

use crate::run::{num, Artifacts, Failure, Outcome, RunConfig, SelfTest};

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    RZero,
    RFree,
    PVariant,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long, default_value_t = 8)]
    pub degree: usize,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    /// Objective evaluations per restart
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, value_enum, default_value_t = Mode::RFree)]
    pub mode: Mode,
    /// Exponent of the L^p variant
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Quadrature nodes inside the search (the certificate uses --quad-points)
    #[arg(long, default_value_t = 1024)]
    pub search_points: usize,
    /// Also emit the ε-sweep of 1 + εz at r = 0, ϱ = 0.99
    #[arg(long)]
    pub sweep: bool,
}

pub fn run(args: &Args, config: &RunConfig, out: &Artifacts) -> Outcome {
    let search = SearchConfig {
        degree: args.degree,
        restarts: args.restarts,
        iterations: args.iterations,
        seed: config.seed,
        mode: match args.mode {
            Mode::RZero => SearchMode::RZero,
            Mode::RFree => SearchMode::RFree,
            Mode::PVariant => SearchMode::PVariant(args.p),
        },
        points: args.search_points,
        certify_points: config.quad_points,
    };
    search.validate()?;
    let outcomes: Vec<_> = (0..search.restarts)
        .into_par_iter()
        .map(|i| extremal::run_restart(&search, i))
        .collect();
    let result = extremal::merge(&search, outcomes)?;
    out.write("search_history.csv", &result.history_csv())?;
    out.write(
        "search.jsonl",
        &format!("{}\n", serde_json::to_string(&result).map_err(|e| Failure::Usage(e.to_string()))?),
    )?;
    if args.sweep {
        let eps: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let rows = extremal::epsilon_sweep(&eps, 0.99, config.quad_points)?;
        let mut csv = String::from("epsilon,ratio\n");
        for (e, q) in rows {
            let q = q.map_or_else(|| "degenerate".to_string(), num);
            csv.push_str(&format!("{},{q}\n", num(e)));
        }
        out.write("sweep.csv", &csv)?;
    }
    eprint!("{}", result.to_report());
    let certified = result.certified_ratio();
    if search.mode.exponent() == 1.0 && certified > CEILING + config.tolerances.ceiling {
        return Err(Failure::Alarm(format!(
            "certified ratio {certified} exceeds the proven ceiling {CEILING}"
        )));
    }
    Ok(())
}

pub fn selftest() -> Outcome {
    let mut t = SelfTest::new();
    let c = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
    t.check(
        "constant is degenerate",
        extremal::objective(&c(&[1.5]), 0.2, 0.7, 1024).is_ok_and(|q| q == 0.0),
    );
    t.check(
        "1 + εz near √2",
        extremal::objective(&c(&[1.0, 1e-4]), 0.0, 0.99, 4096).is_ok_and(|q| (q - 2f64.sqrt()).abs() < 1e-2),
    );
    t.check(
        "monomial ratio",
        extremal::objective(&c(&[0.0, 1.0]), 0.2, 0.5, 1024).is_ok_and(|q| (q - 0.3 / 0.21f64.sqrt()).abs() < 1e-12),
    );
    t.finish()
}
