use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use riesz_core::measures::{
    self, CircleMeasure, PolydiscPoint, Summability, TailRule, DEFAULT_DEPTH, DEFAULT_RADII,
};
use riesz_core::Complex64;

use crate::run::{num, Artifacts, Failure, Outcome, RunConfig, SelfTest};

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    /// z_j = 2^{-j}
    Geometric,
    /// z_j = 1/(j+1)
    Harmonic,
    /// z_j = 1/√(j+1)
    Root,
}

impl Tail {
    fn point(self) -> PolydiscPoint {
        let one = Complex64::new(1.0, 0.0);
        let rule = match self {
            Tail::Geometric => TailRule::Geometric { c: one, q: 0.5 },
            Tail::Harmonic => TailRule::Power { c: one, a: 1.0, shift: 1.0 },
            Tail::Root => TailRule::Power { c: one, a: 0.5, shift: 1.0 },
        };
        PolydiscPoint::new(rule).expect("built-in rules lie in the polydisc")
    }
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Measure file (`atoms n`, `theta re im` lines, `density`, `k : re im` lines);
    /// defaults to the density 1 + χ/2
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Run the non-analytic control (the unit point mass unless a file is given)
    #[arg(long)]
    pub contrast: bool,
    /// Radii 1 − 0.7·2^{-n}, n = 0..count
    #[arg(long, default_value_t = DEFAULT_RADII)]
    pub radii_count: usize,
    /// Frequencies |k| ≤ depth compared after recovery
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: usize,
    #[arg(long, value_enum, default_value_t = Tail::Harmonic)]
    pub tail: Tail,
    #[arg(long, default_value_t = 6)]
    pub chain_depth: usize,
    /// Random points of the chain-property check
    #[arg(long, default_value_t = 100)]
    pub chain_points: usize,
    /// Nodes of the one-variable integrals of the chain
    #[arg(long, default_value_t = 256)]
    pub chain_quad: usize,
    /// Depth of the summability diagnostics
    #[arg(long, default_value_t = 64)]
    pub cg_depth: usize,
}

pub fn run(args: &Args, config: &RunConfig, out: &Artifacts) -> Outcome {
    let m = config.quad_points;
    let mu = match &args.measure {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            CircleMeasure::parse(&text)?
        }
        None if args.contrast => CircleMeasure::point_mass(0.0)?,
        None => CircleMeasure::from_coefficients(0, &[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)])?,
    };
    let tol = &config.tolerances;
    let mut problems = Vec::new();

    let radii = measures::default_radii(args.radii_count);
    let demo = measures::fm_riesz_demo(&mu, &radii, m, args.depth, args.contrast)?;
    let mut csv = String::from("r,rho,increment,bound,norm_rho\n");
    for s in &demo.steps {
        csv.push_str(&format!("{},{},{},{},{}\n", num(s.r), num(s.rho), num(s.increment), num(s.bound), num(s.norm_rho)));
    }
    out.write("fm_riesz.csv", &csv)?;
    if !demo.contrast {
        let mut csv = String::from("k,re,im,exact_re,exact_im,error\n");
        for c in &demo.recovered {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.k,
                num(c.recovered.re),
                num(c.recovered.im),
                num(c.exact.re),
                num(c.exact.im),
                num(c.error())
            ));
        }
        out.write("coefficients.csv", &csv)?;
        if demo.max_coefficient_error() > tol.coeff {
            problems.push(format!("coefficient error {}", demo.max_coefficient_error()));
        }
        if !demo.bounds_hold() {
            problems.push("an increment exceeds its bound".into());
        }
    }
    if !demo.fubini_holds(1e-9) {
        problems.push("a radial mean exceeds the total variation".into());
    }

    let point = args.tail.point();
    let chain = measures::poisson_chain(&point, args.chain_depth)?;
    let residual = chain.chain_residual(args.chain_points, config.seed, args.chain_quad)?;
    if residual > tol.residual {
        problems.push(format!("chain residual {residual}"));
    }
    let masses = chain.masses(args.chain_quad)?;
    let mut csv = String::from("d,increment,increment_mc,std_error,agrees\n");
    for d in 1..args.chain_depth {
        let exact = measures::chain_increment_l1(&point, d, m)?;
        let mc = measures::chain_increment_mc(&point, d, config.mc_samples, config.seed.wrapping_add(d as u64))?;
        let agrees = (exact - mc.value).abs() <= 3.0 * mc.std_error;
        if !agrees {
            problems.push(format!("increment {d}: {exact} vs {} ± {}", mc.value, mc.std_error));
        }
        csv.push_str(&format!("{d},{},{},{},{agrees}\n", num(exact), num(mc.value), num(mc.std_error)));
    }
    out.write("chain.csv", &csv)?;

    let cg = measures::cole_gamelin_diagnostics(&point, args.cg_depth, m)?;
    let mut csv = String::from("d,l1_partial,l2_partial,increment,sup_product\n");
    for d in 0..args.cg_depth {
        let inc = cg.increments.get(d).map(|&x| num(x)).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{inc},{}\n",
            d + 1,
            num(cg.l1_partial[d]),
            num(cg.l2_partial[d]),
            num(cg.sup_products[d])
        ));
    }
    out.write("cole_gamelin.csv", &csv)?;

    let summary = json!({
        "analyticity": demo.analyticity,
        "contrast": demo.contrast,
        "total_variation": num(demo.total_variation),
        "min_increment": num(demo.min_increment()),
        "max_coefficient_error": num(demo.max_coefficient_error()),
        "chain_residual": num(residual),
        "masses": masses.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "summability": cg.summability,
    });
    out.write("measures.jsonl", &format!("{summary}\n"))?;
    eprintln!(
        "measures: analytic {} contrast {} min increment {:.4} coefficient error {:.2e} chain residual {:.2e} summability {:?}",
        demo.analyticity.analytic,
        demo.contrast,
        demo.min_increment(),
        demo.max_coefficient_error(),
        residual,
        cg.summability
    );
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(problems.join("; ")))
    }
}

pub fn selftest() -> Outcome {
    let mut t = SelfTest::new();
    let one = Complex64::new(1.0, 0.0);
    t.check(
        "point mass coefficients",
        CircleMeasure::point_mass(0.0).is_ok_and(|mu| (-3..=3).all(|k| mu.fourier_coefficient(k) == one)),
    );
    let z = Complex64::new(0.3, -0.4);
    t.check(
        "extension of 1 + χ",
        CircleMeasure::from_coefficients(0, &[one, one])
            .and_then(|mu| mu.poisson_extension(z))
            .is_ok_and(|v| (v - (one + z)).norm() < 1e-15),
    );
    let point = PolydiscPoint::new(TailRule::Explicit(vec![Complex64::new(0.1, 0.0), Complex64::new(0.5, 0.0)]));
    t.check(
        "increment at z = 0.5",
        point
            .and_then(|p| measures::chain_increment_l1(&p, 1, 4096))
            .is_ok_and(|v| (v - 2.0 / 3.0).abs() < 1e-6),
    );
    t.check("harmonic tail is ℓ² not ℓ¹", Tail::Harmonic.point().summability() == Summability::L2NotL1);
    t.finish()
}
