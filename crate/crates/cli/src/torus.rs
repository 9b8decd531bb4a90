use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use riesz_core::polytorus::{
    self, AbschnittBound, Estimate, MultiIndex, TorusSampler, TrigPoly, MC_SIGMAS,
};
use riesz_core::{Complex64, Error};

use crate::run::{num, Artifacts, Failure, Outcome, RunConfig, SelfTest};

#[derive(Debug, Clone, Copy, PartialEq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    All,
    Monotone,
    Substitution,
    H1Bound,
    Chain,
    Density,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = Check::All)]
    pub check: Check,
    /// Polynomial file (`κ_1 … κ_k : re im` lines) instead of random instances
    #[arg(long)]
    pub poly: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub instances: u64,
    /// Variables of the random instances and of the sampler
    #[arg(long, default_value_t = 3)]
    pub dims: usize,
    /// Tensor-grid nodes per axis (up to three variables)
    #[arg(long, default_value_t = polytorus::DEFAULT_AXIS_POINTS)]
    pub axis_points: usize,
    /// Exponents for the monotonicity and density checks
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub d1: usize,
    /// Upper Abschnitt (defaults to --dims)
    #[arg(long)]
    pub d2: Option<usize>,
    /// Grid nodes per axis for the χ-integral of the slice route
    #[arg(long, default_value_t = 16)]
    pub slice_points: usize,
    /// Monte Carlo χ-samples of the slice route beyond three variables
    #[arg(long, default_value_t = 4096)]
    pub slice_samples: usize,
    /// Nodes on the z-circle of each slice
    #[arg(long, default_value_t = 16)]
    pub z_points: usize,
}

struct Row {
    check: &'static str,
    instance: u64,
    d: usize,
    p: Option<f64>,
    value: Option<Estimate>,
    bound: Option<f64>,
    holds: bool,
}

impl Row {
    fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}\n",
            self.check,
            self.instance,
            self.d,
            opt(self.p),
            opt(self.value.map(|e| e.value)),
            opt(self.value.map(|e| e.std_error)),
            opt(self.bound),
            self.holds
        )
    }
}

fn wants(args: &Args, c: Check) -> bool {
    args.check == Check::All || args.check == c
}

fn bound_holds(b: &AbschnittBound, tol: f64) -> bool {
    b.slack() >= -(tol + tol * b.lhs.value.max(b.rhs) + MC_SIGMAS * b.std_error)
}

pub fn run(args: &Args, config: &RunConfig, out: &Artifacts) -> Outcome {
    let d2 = args.d2.unwrap_or(args.dims);
    if args.d1 > d2 || d2 > args.dims {
        return Err(Failure::Usage(format!("need d1 ≤ d2 ≤ dims, got {} {} {}", args.d1, d2, args.dims)));
    }
    if args.p.iter().any(|&p| !(p >= 1.0)) {
        return Err(Failure::Usage("every exponent must be at least 1".into()));
    }
    let seed = config.seed;
    let sampler = TorusSampler::auto(args.dims, args.axis_points, config.mc_samples, seed)?;
    let chi = TorusSampler::auto(args.dims, args.slice_points, args.slice_samples, seed ^ 1)?;
    let fixed = match &args.poly {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            Some(TrigPoly::parse(&text)?)
        }
        None => None,
    };
    let count = if fixed.is_some() { 1 } else { args.instances };
    let tol = config.tolerances.grid;
    let results: Vec<Result<Vec<Row>, Error>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let general = fixed
                .clone()
                .unwrap_or_else(|| polytorus::random_instance(seed, i, args.dims, false));
            let analytic = match &fixed {
                Some(p) if p.is_analytic() => Some(p.clone()),
                Some(_) => None,
                None => Some(polytorus::random_instance(seed ^ 0x5eed, i, args.dims, true)),
            };
            instance_rows(args, i, &general, analytic.as_ref(), d2, &sampler, &chi, tol)
        })
        .collect();
    let mut csv = String::from("check,instance,d,p,value,std_error,bound,holds\n");
    let mut failures = 0usize;
    for r in results {
        for row in r? {
            failures += !row.holds as usize;
            csv.push_str(&row.csv());
        }
    }
    out.write("torus.csv", &csv)?;
    eprintln!("torus: {count} instances, {failures} failed rows");
    if failures > 0 {
        return Err(Failure::Violation(format!("{failures} torus checks failed")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn instance_rows(
    args: &Args,
    i: u64,
    general: &TrigPoly,
    analytic: Option<&TrigPoly>,
    d2: usize,
    sampler: &TorusSampler,
    chi: &TorusSampler,
    tol: f64,
) -> Result<Vec<Row>, Error> {
    let mut rows = Vec::new();
    if wants(args, Check::Monotone) {
        let profile = polytorus::abschnitt_profile(general, &args.p, sampler)?;
        for (k, &p) in args.p.iter().enumerate() {
            let column: Vec<Estimate> = profile.iter().map(|row| row[k]).collect();
            let ok = polytorus::is_nondecreasing(&column, tol);
            for (d, e) in column.iter().enumerate() {
                rows.push(Row {
                    check: "monotone",
                    instance: i,
                    d: d + 1,
                    p: Some(p),
                    value: Some(*e),
                    bound: None,
                    holds: ok,
                });
            }
        }
    }
    if wants(args, Check::Density) {
        for &p in &args.p {
            let tail = polytorus::check_lp_density_convergence(general, p, sampler)?;
            let last = tail.last().map_or(0.0, |e| e.value);
            for (d, e) in tail.iter().enumerate() {
                rows.push(Row {
                    check: "density",
                    instance: i,
                    d: d + 1,
                    p: Some(p),
                    value: Some(*e),
                    bound: None,
                    holds: last <= 1e-12,
                });
            }
        }
    }
    let Some(p) = analytic else {
        return Ok(rows);
    };
    if wants(args, Check::Substitution) {
        for d in 0..=p.dimension() + 1 {
            rows.push(Row {
                check: "substitution",
                instance: i,
                d,
                p: None,
                value: None,
                bound: None,
                holds: polytorus::abschnitt_substitution(p, d)? == polytorus::abschnitt(p, d),
            });
        }
    }
    if wants(args, Check::H1Bound) {
        let rep = polytorus::check_h1_abschnitt_both(p, args.d1, d2, sampler, chi, args.z_points)?;
        let slice = rep.slice.expect("slice route ran");
        rows.push(Row {
            check: "h1-bound",
            instance: i,
            d: d2,
            p: Some(1.0),
            value: Some(rep.direct.lhs),
            bound: Some(rep.direct.rhs),
            holds: bound_holds(&rep.direct, tol) && rep.routes_agree(),
        });
        rows.push(Row {
            check: "h1-bound-slice",
            instance: i,
            d: d2,
            p: Some(1.0),
            value: Some(slice.bound.lhs),
            bound: Some(slice.bound.rhs),
            holds: bound_holds(&slice.bound, tol) && slice.slice_violations == 0,
        });
    }
    if wants(args, Check::Chain) {
        let chain = polytorus::abschnitt_chain(p, d2.max(1));
        let rebuilt = polytorus::chain_reconstruct(&chain)?;
        rows.push(Row {
            check: "chain",
            instance: i,
            d: 0,
            p: None,
            value: None,
            bound: None,
            holds: rebuilt == polytorus::abschnitt(p, d2.max(1)),
        });
        for inc in polytorus::chain_increments(&chain, sampler)? {
            rows.push(Row {
                check: "chain-increment",
                instance: i,
                d: inc.d,
                p: Some(1.0),
                value: Some(inc.bound.lhs),
                bound: Some(inc.bound.rhs),
                holds: bound_holds(&inc.bound, tol),
            });
        }
    }
    Ok(rows)
}

pub fn selftest() -> Outcome {
    let mut t = SelfTest::new();
    let c = |x: f64| Complex64::new(x, 0.0);
    let mono = |k: &[i32], a: f64| (MultiIndex::new(k.to_vec()), c(a));
    let poly = TrigPoly::from_terms([mono(&[], 3.0), mono(&[1, 1], 2.0), mono(&[0, 0, 1], 5.0)]);
    let want = TrigPoly::from_terms([mono(&[], 3.0), mono(&[1, 1], 2.0)]);
    t.check(
        "abschnitt drops χ₃",
        polytorus::abschnitt(&poly, 2) == want && polytorus::abschnitt_substitution(&poly, 2).is_ok_and(|s| s == want),
    );
    let sum = TrigPoly::from_terms([mono(&[1], 1.0), mono(&[0, 1], 1.0)]);
    let ok = TorusSampler::tensor(2, 16)
        .and_then(|s| polytorus::norm_lp(&sum, 2.0, &s))
        .is_ok_and(|e| (e.value - 2f64.sqrt()).abs() < 1e-12);
    t.check("Parseval on χ₁ + χ₂", ok);
    let p = TrigPoly::from_terms([mono(&[], 1.0), mono(&[0, 1], 1.0)]);
    let ok = TorusSampler::tensor(2, 1024)
        .and_then(|s| polytorus::check_h1_abschnitt_lemma(&p, 1, 2, &s))
        .is_ok_and(|r| {
            (r.direct.lhs.value - 1.0).abs() < 1e-12 && (r.direct.rhs - 1.668_291_086_213_054_5).abs() < 1e-5 && r.holds()
        });
    t.check("1 + χ₂ bound", ok);
    t.finish()
}
