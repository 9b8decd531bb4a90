use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use riesz_core::blaschke::{self, FactorizationTrace};
use riesz_core::circle::AnalyticPoly;
use riesz_core::{lemma, Complex64, Error};

use crate::run::{num, Artifacts, Failure, Outcome, RunConfig, SelfTest, Tolerances};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Coefficient file, one `re im` pair per line, a_0 first
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Times ϱ may be nudged off a zero on the circle
    #[arg(long, default_value_t = 0)]
    pub nudges: usize,
}

pub fn run(args: &Args, config: &RunConfig, out: &Artifacts) -> Outcome {
    let (Some(file), Some(r), Some(rho)) = (&args.file, args.r, args.rho) else {
        return Err(Failure::Usage("trace needs a coefficient file, --r and --rho".into()));
    };
    let text = fs::read_to_string(file).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
    let f = AnalyticPoly::parse(&text)?;
    let trace = match blaschke::trace_with_nudge(&f, r, rho, config.quad_points, args.nudges) {
        Ok(t) => t,
        Err(e @ Error::ZeroOnCircle { .. }) => {
            return Err(Failure::Usage(format!("{e}; retry with --nudges")));
        }
        Err(e) => return Err(e.into()),
    };
    let tol = config.tolerances.chain;
    out.write("trace.csv", &steps_csv(&trace, tol))?;
    out.write("trace.txt", &trace.to_record())?;
    eprint!("{}", trace.to_record());
    match trace.steps.iter().find(|s| !step_holds(s, tol)) {
        None => Ok(()),
        Some(s) => Err(Failure::Violation(format!(
            "step {} fails: {} vs {}",
            s.name, s.lhs, s.rhs
        ))),
    }
}

fn step_holds(s: &blaschke::ChainStep, tol: f64) -> bool {
    s.slack() >= -Tolerances::slack(tol, s.lhs, s.rhs)
}

fn steps_csv(trace: &FactorizationTrace, tol: f64) -> String {
    let mut csv = String::from("step,stage,relation,lhs,rhs,slack,holds\n");
    for s in &trace.steps {
        csv.push_str(&format!(
            "{},{},{:?},{},{},{},{}\n",
            s.name,
            s.stage,
            s.relation,
            num(s.lhs),
            num(s.rhs),
            num(s.slack()),
            step_holds(s, tol)
        ));
    }
    csv
}

pub fn selftest() -> Outcome {
    let m = 4096;
    let mut t = SelfTest::new();
    let trace = blaschke::trace_inequality_chain(&AnalyticPoly::constant(Complex64::new(0.7, 0.2)), 0.3, 0.8, m);
    t.check(
        "constant gives equalities",
        trace.is_ok_and(|tr| tr.steps.iter().all(|s| s.holds() && s.slack().abs() < 1e-9)),
    );
    let trace = blaschke::trace_inequality_chain(&AnalyticPoly::from_real(&[1.0, 0.1]), 0.0, 0.9, m);
    t.check(
        "endpoint identity",
        trace.is_ok_and(|tr| {
            tr.steps
                .iter()
                .filter(|s| s.name == "endpoint_g")
                .all(|s| (s.lhs - s.rhs).abs() <= 1e-9)
        }),
    );
    let clean = (0..50u64).all(|i| {
        let inst = lemma::random_instance(7, i, 16);
        blaschke::trace_with_nudge(&inst.poly, inst.r, inst.rho, m, 3).is_ok_and(|tr| tr.verify().is_ok())
    });
    t.check("random chains hold", clean);
    t.finish()
}
