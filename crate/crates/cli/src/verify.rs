use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use riesz_core::circle::{self, AnalyticPoly};
use riesz_core::lemma::{self, BatchRow, Instance, LemmaReport};
use riesz_core::{Complex64, Error};

use crate::run::{num, Artifacts, Failure, Outcome, RunConfig, SelfTest, Tolerances};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Number of random instances
    #[arg(long, default_value_t = 10_000)]
    pub instances: u64,
    /// Largest polynomial degree (0 gives constants)
    #[arg(long, default_value_t = 16)]
    pub degree: usize,
    /// Fixed radii `r ϱ` for every instance instead of random ones
    #[arg(long, num_args = 2, value_names = ["R", "RHO"])]
    pub radii: Option<Vec<f64>>,
}

enum Verdict {
    Row(BatchRow, bool),
    Failed(Error),
}

pub fn run(args: &Args, config: &RunConfig, out: &Artifacts) -> Outcome {
    let m = config.quad_points;
    if m < circle::min_points(args.degree) || m % 2 != 0 {
        return Err(Failure::Usage(format!(
            "--quad-points {m} must be even and at least {} for degree {}",
            circle::min_points(args.degree),
            args.degree
        )));
    }
    let fixed = match args.radii.as_deref() {
        Some(&[r, rho]) => {
            if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&rho) {
                return Err(Failure::Usage(format!("radii {r} {rho} must lie in [0, 1]")));
            }
            if r > rho {
                return Err(Failure::Usage(format!("r = {r} exceeds ϱ = {rho}")));
            }
            Some((r, rho))
        }
        _ => None,
    };
    let tol = config.tolerances.lemma;
    let instances: Vec<Instance> = (0..args.instances)
        .map(|i| {
            let mut inst = lemma::random_instance(config.seed, i, args.degree);
            if let Some((r, rho)) = fixed {
                inst.r = r;
                inst.rho = rho;
            }
            inst
        })
        .collect();
    let verdicts: Vec<Verdict> = instances
        .par_iter()
        .map(|inst| match BatchRow::evaluate(inst, m) {
            Ok(row) => {
                let ok = holds(&row.report, tol);
                Verdict::Row(row, ok)
            }
            Err(e) => Verdict::Failed(e),
        })
        .collect();

    let mut csv = format!("index,{},holds_main,holds_adjusted\n", BatchRow::HEADER);
    let mut bad = String::new();
    let (mut violations, mut degenerate) = (0usize, 0usize);
    for (i, (inst, v)) in instances.iter().zip(&verdicts).enumerate() {
        match v {
            Verdict::Row(row, ok) => {
                let rep = &row.report;
                degenerate += rep.ratio.is_none() as usize;
                csv.push_str(&format!(
                    "{i},{},{},{}\n",
                    row.to_csv(),
                    main_holds(rep, tol),
                    adjusted_holds(rep, tol)
                ));
                if !ok {
                    violations += 1;
                    bad.push_str(&replay_line(i, inst, None));
                }
            }
            Verdict::Failed(e) => {
                violations += 1;
                bad.push_str(&replay_line(i, inst, Some(e)));
            }
        }
    }
    out.write("lemma.csv", &csv)?;
    out.write("violations.jsonl", &bad)?;
    eprintln!(
        "verify-lemma: {} instances, {} degenerate, {} violations",
        instances.len(),
        degenerate,
        violations
    );
    if violations > 0 {
        return Err(Failure::Violation(format!("{violations} instances violate the inequality")));
    }
    Ok(())
}

fn main_holds(rep: &LemmaReport, tol: f64) -> bool {
    rep.slack_main() >= -Tolerances::slack(tol, rep.lhs, rep.rhs_main)
}

fn adjusted_holds(rep: &LemmaReport, tol: f64) -> bool {
    rep.slack_adjusted() >= -Tolerances::slack(tol, rep.lhs, rep.rhs_adjusted)
}

fn holds(rep: &LemmaReport, tol: f64) -> bool {
    main_holds(rep, tol) && adjusted_holds(rep, tol)
}

/// Everything needed to replay one instance.
fn replay_line(index: usize, inst: &Instance, error: Option<&Error>) -> String {
    let coeffs: Vec<[String; 2]> = inst.poly.coeffs().iter().map(|a| [num(a.re), num(a.im)]).collect();
    let mut v = json!({
        "index": index,
        "seed": inst.seed,
        "r": num(inst.r),
        "rho": num(inst.rho),
        "coeffs": coeffs,
    });
    if let Some(e) = error {
        v["error"] = json!(e.to_string());
    }
    format!("{v}\n")
}

pub fn selftest() -> Outcome {
    let m = circle::DEFAULT_POINTS;
    let mut t = SelfTest::new();
    let rep = lemma::check_main_lemma(&AnalyticPoly::constant(Complex64::new(2.0, -1.0)), 0.3, 0.8, m);
    t.check("constant is an equality", rep.is_ok_and(|r| r.lhs == 0.0 && r.rhs_main == 0.0));
    let rep = lemma::check_main_lemma(&AnalyticPoly::from_real(&[1.0, 1e-4]), 0.0, 0.99, m);
    t.check(
        "1 + εz approaches √2",
        rep.is_ok_and(|r| r.ratio.is_some_and(|q| (1.40..=1.4143).contains(&q))),
    );
    let rep = lemma::check_main_lemma(&AnalyticPoly::from_real(&[0.0, 1.0]), 0.2, 0.5, m);
    t.check(
        "monomial norms",
        rep.is_ok_and(|r| (r.lhs - 0.3).abs() < 1e-12 && (r.rhs_main - 2.0 * 0.21f64.sqrt()).abs() < 1e-12),
    );
    t.finish()
}
