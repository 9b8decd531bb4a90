//! Derivative-free search for the best constant of the dilation inequality.
//!
//! The searched quantity is
//!
//! ```text
//! ratio(f, r, ϱ) = ‖f_r − f_ϱ‖_p / √(‖f_ϱ‖_p² − ‖f_r‖_p²)
//! ```
//!
//! (with `p = 1` outside the L^p variant), maximized by Nelder–Mead over the
//! real and imaginary parts of the coefficients and two logits that fix
//! `ϱ = 0.999·σ(s)` and `r = ϱ·σ(t)`, so every simplex vertex satisfies
//! `0 ≤ r ≤ ϱ < 1`. Restarts are seeded by `(seed, restart)` and can run in
//! any order; [`merge`] is an associative maximum.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::circle::{self, unit_roots, AnalyticPoly};
use crate::error::{Error, Result};
use crate::lemma::{self, LemmaReport};
use crate::rng;

/// Denominators at or below this are degenerate.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-10;
/// Degenerate also when `‖f_ϱ‖² − ‖f_r‖² ≤ REL_FLOOR · ‖f_ϱ‖²`; below it the
/// difference of squares is dominated by rounding.
pub const REL_FLOOR: f64 = 1e-9;
/// The proven ceiling of the ratio for `p = 1`.
pub const CEILING: f64 = 2.0;
/// Slack above [`CEILING`] before an evaluation counts as a breach.
pub const CEILING_TOL: f64 = 1e-6;
pub const MAX_DEGREE: usize = 32;
const RHO_CAP: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// `r = 0`, `ϱ` free.
    RZero,
    /// Both radii free.
    RFree,
    /// Both radii free, L^p norms in place of L¹.
    PVariant(f64),
}

impl SearchMode {
    pub fn exponent(&self) -> f64 {
        match self {
            SearchMode::PVariant(p) => *p,
            _ => 1.0,
        }
    }

    fn r_free(&self) -> bool {
        !matches!(self, SearchMode::RZero)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub degree: usize,
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub iterations: usize,
    pub seed: u64,
    pub mode: SearchMode,
    /// Quadrature nodes inside the search.
    pub points: usize,
    /// Quadrature nodes of the certificate.
    pub certify_points: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            degree: 8,
            restarts: 64,
            iterations: 2000,
            seed: 42,
            mode: SearchMode::RFree,
            points: 1024,
            certify_points: 4096,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!("degree must be at most {MAX_DEGREE}")));
        }
        if let SearchMode::PVariant(p) = self.mode {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidArgument(format!("exponent p = {p} must be positive")));
            }
        }
        for m in [self.points, self.certify_points] {
            if m < circle::min_points(self.degree) || m % 2 != 0 {
                return Err(Error::GridTooCoarse {
                    points: m,
                    degree: self.degree,
                    required: circle::min_points(self.degree),
                });
            }
        }
        Ok(())
    }

    /// Number of real search parameters.
    fn dimension(&self) -> usize {
        2 * (self.degree + 1) + if self.mode.r_free() { 2 } else { 1 }
    }
}

/// Evaluates the ratio on a fixed angular grid.
#[derive(Debug, Clone)]
pub struct RatioEvaluator {
    roots: Vec<Complex64>,
    p: f64,
}

/// `‖f_r‖_p`, `‖f_ϱ‖_p` and `‖f_r − f_ϱ‖_p` on one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioParts {
    pub norm_r: f64,
    pub norm_rho: f64,
    pub diff: f64,
}

impl RatioEvaluator {
    pub fn new(points: usize, p: f64) -> Self {
        Self {
            roots: unit_roots(points),
            p,
        }
    }

    pub fn parts(&self, coeffs: &[Complex64], r: f64, rho: f64) -> RatioParts {
        let horner = |z: Complex64| {
            coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
        };
        let p = self.p;
        let pow = |x: f64| if p == 1.0 { x } else { x.powf(p) };
        let mut terms = [Vec::with_capacity(self.roots.len()), Vec::new(), Vec::new()];
        terms[1].reserve(self.roots.len());
        terms[2].reserve(self.roots.len());
        for &w in &self.roots {
            let a = horner(w * r);
            let b = horner(w * rho);
            terms[0].push(pow(a.norm()));
            terms[1].push(pow(b.norm()));
            terms[2].push(pow((a - b).norm()));
        }
        let [sr, srho, sd] = terms.map(circle::mean);
        let root = |s: f64| if p == 1.0 { s } else { s.powf(1.0 / p) };
        RatioParts {
            norm_r: root(sr),
            norm_rho: root(srho),
            diff: root(sd),
        }
    }

    /// The ratio, or 0 for degenerate denominators.
    pub fn ratio(&self, coeffs: &[Complex64], r: f64, rho: f64) -> f64 {
        let scale = coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(scale > 0.0) || !scale.is_finite() {
            return 0.0;
        }
        let unit: Vec<Complex64> = coeffs.iter().map(|a| a / scale).collect();
        let parts = self.parts(&unit, r, rho);
        let b2 = parts.norm_rho * parts.norm_rho;
        let gap = (parts.norm_rho - parts.norm_r) * (parts.norm_rho + parts.norm_r);
        if gap <= REL_FLOOR * b2 || gap.sqrt() <= DEGENERATE_DENOMINATOR {
            return 0.0;
        }
        parts.diff / gap.sqrt()
    }
}

/// The L¹ ratio of one instance at `points` nodes.
pub fn objective(coeffs: &[Complex64], r: f64, rho: f64, points: usize) -> Result<f64> {
    objective_lp(coeffs, r, rho, points, 1.0)
}

/// The L^p ratio of one instance.
pub fn objective_lp(coeffs: &[Complex64], r: f64, rho: f64, points: usize, p: f64) -> Result<f64> {
    if r > rho {
        return Err(Error::RadiiOutOfOrder { r, rho });
    }
    if r < 0.0 || rho >= 1.0 {
        return Err(Error::RadiusOutOfRange(if r < 0.0 { r } else { rho }));
    }
    let _ = circle::CircleGrid::new(rho, points)?;
    Ok(RatioEvaluator::new(points, p).ratio(coeffs, r, rho))
}

/// Scales coefficients to unit ℓ² norm with `a_0` real and nonnegative (the
/// ratio does not change).
pub fn normalize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let scale = coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return coeffs.to_vec();
    }
    let phase = match coeffs.first() {
        Some(a) if a.norm() > 0.0 => a.conj() / a.norm(),
        _ => Complex64::new(1.0, 0.0),
    };
    coeffs.iter().map(|a| a * phase / scale).collect()
}

/// Ratio, lhs and norms of an instance in L^p, packed as a [`LemmaReport`]
/// (for `p = 1` this is exactly the lemma report).
pub fn lp_report(coeffs: &[Complex64], r: f64, rho: f64, points: usize, p: f64) -> Result<LemmaReport> {
    if p == 1.0 {
        return lemma::check_main_lemma(&AnalyticPoly::new(normalize(coeffs)), r, rho, points);
    }
    let parts = RatioEvaluator::new(points, p).parts(&normalize(coeffs), r, rho);
    Ok(LemmaReport::from_norms(r, rho, parts.diff, parts.norm_r, parts.norm_rho))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Decodes a parameter vector into `(coeffs, r, ϱ)`.
fn decode(x: &[f64], degree: usize, mode: SearchMode) -> (Vec<Complex64>, f64, f64) {
    let n = degree + 1;
    let coeffs = (0..n).map(|k| Complex64::new(x[k], x[n + k])).collect();
    let rho = RHO_CAP * sigmoid(x[2 * n]);
    let r = if mode.r_free() { rho * sigmoid(x[2 * n + 1]) } else { 0.0 };
    (coeffs, r, rho)
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartOutcome {
    pub restart: usize,
    pub best_ratio: f64,
    pub coeffs: Vec<(f64, f64)>,
    pub r: f64,
    pub rho: f64,
    pub evaluations: usize,
    /// Largest ratio seen at any evaluated point.
    pub max_evaluated: f64,
}

/// Nelder–Mead minimizer with a fixed evaluation budget. Reinitializes the
/// simplex around the incumbent when it collapses before the budget runs out.
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub budget: usize,
    pub initial_step: f64,
    pub collapse_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            budget: 2000,
            initial_step: 0.25,
            collapse_tol: 1e-10,
        }
    }
}

/// Best point and value found by [`NelderMead::minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

impl NelderMead {
    pub fn minimize(&self, mut func: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        const REFLECT: f64 = 1.0;
        const EXPAND: f64 = 2.0;
        const CONTRACT: f64 = 0.5;
        const SHRINK: f64 = 0.5;

        let n = x0.len();
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = func(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut best = Minimum {
            x: x0.to_vec(),
            value: eval(x0, &mut evals),
            evaluations: 0,
        };
        let mut step = self.initial_step;

        'outer: while evals < self.budget {
            let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
            simplex.push((best.x.clone(), best.value));
            for i in 0..n {
                let mut x = best.x.clone();
                x[i] += step;
                let v = eval(&x, &mut evals);
                simplex.push((x, v));
            }
            loop {
                simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
                if simplex[0].1 < best.value {
                    best.x.clone_from(&simplex[0].0);
                    best.value = simplex[0].1;
                }
                if evals >= self.budget {
                    break 'outer;
                }
                let spread = simplex[n].1 - simplex[0].1;
                let size = simplex[1..]
                    .iter()
                    .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                    .fold(0.0, f64::max);
                if size < self.collapse_tol || (spread.abs() < 1e-15 && size < 1e-6) {
                    step *= 0.5;
                    if step < 1e-6 {
                        step = self.initial_step;
                    }
                    continue 'outer;
                }
                let centroid: Vec<f64> = (0..n)
                    .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
                    .collect();
                let along = |t: f64, from: &[f64]| -> Vec<f64> {
                    centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect()
                };
                let worst = simplex[n].0.clone();
                let xr = along(REFLECT, &worst);
                let fr = eval(&xr, &mut evals);
                if fr < simplex[0].1 {
                    let xe = along(EXPAND, &worst);
                    let fe = eval(&xe, &mut evals);
                    simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                } else if fr < simplex[n - 1].1 {
                    simplex[n] = (xr, fr);
                } else {
                    let (xc, fc) = if fr < simplex[n].1 {
                        let xc = along(CONTRACT, &worst);
                        let fc = eval(&xc, &mut evals);
                        (xc, fc)
                    } else {
                        let xc = along(-CONTRACT, &worst);
                        let fc = eval(&xc, &mut evals);
                        (xc, fc)
                    };
                    if fc < fr.min(simplex[n].1) {
                        simplex[n] = (xc, fc);
                    } else {
                        let anchor = simplex[0].0.clone();
                        for vertex in simplex.iter_mut().skip(1) {
                            let x: Vec<f64> = anchor.iter().zip(&vertex.0).map(|(a, v)| a + SHRINK * (v - a)).collect();
                            let v = eval(&x, &mut evals);
                            *vertex = (x, v);
                        }
                    }
                }
            }
        }
        best.evaluations = evals;
        best
    }
}

/// Starting point of a restart: `a_0 = 1` and the remaining coefficients
/// Gaussian at a log-uniform scale in `[10⁻², 1]`, logits standard normal.
fn initial_point<R: Rng>(rng: &mut R, config: &SearchConfig) -> Vec<f64> {
    let n = config.degree + 1;
    let scale = 10f64.powf(-2.0 * rng.random::<f64>());
    let mut x = vec![0.0; config.dimension()];
    x[0] = 1.0;
    for k in 1..n {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        x[k] = re * scale;
        x[n + k] = im * scale;
    }
    for v in x.iter_mut().skip(2 * n) {
        *v = rng.sample(StandardNormal);
    }
    x
}

/// Runs restart `index` of the search.
pub fn run_restart(config: &SearchConfig, index: usize) -> RestartOutcome {
    let mut rng = rng::instance_rng(config.seed, index as u64);
    let x0 = initial_point(&mut rng, config);
    let evaluator = RatioEvaluator::new(config.points, config.mode.exponent());
    let mut max_evaluated: f64 = 0.0;
    let nm = NelderMead {
        budget: config.iterations.max(config.dimension() + 2),
        ..NelderMead::default()
    };
    let min = nm.minimize(
        |x| {
            let (coeffs, r, rho) = decode(x, config.degree, config.mode);
            let v = evaluator.ratio(&coeffs, r, rho);
            max_evaluated = max_evaluated.max(v);
            -v
        },
        &x0,
    );
    let (coeffs, r, rho) = decode(&min.x, config.degree, config.mode);
    RestartOutcome {
        restart: index,
        best_ratio: -min.value,
        coeffs: normalize(&coeffs).iter().map(|a| (a.re, a.im)).collect(),
        r,
        rho,
        evaluations: min.evaluations,
        max_evaluated,
    }
}

/// Best instance, its certificate, and the per-restart history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub config: SearchConfig,
    pub best_ratio: f64,
    /// Normalized coefficients, `r`, `ϱ` of the maximizer.
    pub argmax: (Vec<(f64, f64)>, f64, f64),
    pub history: Vec<RestartOutcome>,
    /// The maximizer re-evaluated at `certify_points` nodes.
    pub certificate: LemmaReport,
    /// Largest ratio at any evaluated point of any restart.
    pub max_evaluated: f64,
}

impl SearchResult {
    pub fn certified_ratio(&self) -> f64 {
        self.certificate.ratio.unwrap_or(0.0)
    }

    /// True when the certified ratio breaks the proven ceiling (`p = 1`).
    pub fn ceiling_breached(&self) -> bool {
        self.config.mode.exponent() == 1.0 && self.certified_ratio() > CEILING + CEILING_TOL
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("restart,best_ratio,evaluations,max_evaluated,r,rho\n");
        for h in &self.history {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                h.restart, h.best_ratio, h.evaluations, h.max_evaluated, h.r, h.rho
            );
        }
        out
    }

    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode {:?}", self.config.mode);
        let _ = writeln!(out, "best_ratio {}", self.best_ratio);
        let _ = writeln!(out, "certified_ratio {}", self.certified_ratio());
        let _ = writeln!(out, "certify_points {}", self.config.certify_points);
        let _ = writeln!(out, "max_evaluated {}", self.max_evaluated);
        let _ = writeln!(out, "r {}", self.argmax.1);
        let _ = writeln!(out, "rho {}", self.argmax.2);
        for (k, (re, im)) in self.argmax.0.iter().enumerate() {
            let _ = writeln!(out, "a{k} {re} {im}");
        }
        out
    }
}

/// Combines restart outcomes (in any order) and certifies the maximizer.
pub fn merge(config: &SearchConfig, mut outcomes: Vec<RestartOutcome>) -> Result<SearchResult> {
    outcomes.sort_by_key(|o| o.restart);
    let best = outcomes
        .iter()
        .max_by(|a, b| a.best_ratio.total_cmp(&b.best_ratio).then(b.restart.cmp(&a.restart)))
        .ok_or_else(|| Error::InvalidArgument("no restarts".into()))?
        .clone();
    let coeffs: Vec<Complex64> = best.coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    let certificate = lp_report(&coeffs, best.r, best.rho, config.certify_points, config.mode.exponent())?;
    let max_evaluated = outcomes.iter().map(|o| o.max_evaluated).fold(0.0, f64::max);
    Ok(SearchResult {
        config: config.clone(),
        best_ratio: best.best_ratio,
        argmax: (best.coeffs, best.r, best.rho),
        history: outcomes,
        certificate,
        max_evaluated,
    })
}

/// Sequential search over all restarts.
pub fn maximize(config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    let outcomes = (0..config.restarts).map(|i| run_restart(config, i)).collect();
    merge(config, outcomes)
}

/// Ratios of `f = 1 + εz` at `r = 0` along a sweep of `ε`; `None` once the
/// norm gap falls under the degeneracy floor (about `ε ≤ 1e-5` at `ϱ ≈ 1`).
pub fn epsilon_sweep(epsilons: &[f64], rho: f64, points: usize) -> Result<Vec<(f64, Option<f64>)>> {
    epsilons
        .iter()
        .map(|&eps| {
            let coeffs = [Complex64::new(1.0, 0.0), Complex64::new(eps, 0.0)];
            let q = objective(&coeffs, 0.0, rho, points)?;
            Ok((eps, (q > 0.0).then_some(q)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective(&[c(2.0, 1.0)], 0.1, 0.5, 64).unwrap(), 0.0);
        let v = objective(&[c(1.0, 0.0), c(1e-4, 0.0)], 0.0, 0.99, 4096).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-2, "{v}");
        let v = objective(&[c(0.0, 0.0), c(1.0, 0.0)], 0.2, 0.5, 64).unwrap();
        assert!((v - 0.3 / 0.21f64.sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn objective_refuses_bad_radii() {
        assert!(objective(&[c(1.0, 0.0)], 0.6, 0.5, 64).is_err());
        assert!(objective(&[c(1.0, 0.0)], 0.0, 1.0, 64).is_err());
    }

    #[test]
    fn objective_is_scale_invariant() {
        let a = [c(0.3, -0.2), c(1.0, 0.5), c(-0.4, 0.9), c(0.2, 0.0)];
        let base = objective(&a, 0.3, 0.8, 512).unwrap();
        let s = c(-3.7, 12.1);
        let scaled: Vec<_> = a.iter().map(|x| x * s).collect();
        let v = objective(&scaled, 0.3, 0.8, 512).unwrap();
        assert!((v - base).abs() < 1e-10);
    }

    #[test]
    fn normalize_fixes_phase_and_norm() {
        let v = normalize(&[c(0.0, 2.0), c(1.0, 1.0)]);
        assert!(v[0].im.abs() < 1e-15 && v[0].re > 0.0);
        assert!((v.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let nm = NelderMead {
            budget: 4000,
            ..NelderMead::default()
        };
        let m = nm.minimize(|x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + 3.0, &[0.0, 0.0]);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] + 2.0).abs() < 1e-5);
        assert!((m.value - 3.0).abs() < 1e-9);
        assert!(m.evaluations <= 4000 + 4);
    }

    #[test]
    fn decode_respects_radius_order() {
        let cfg = SearchConfig {
            degree: 1,
            ..SearchConfig::default()
        };
        for &(s, t) in &[(-30.0, 30.0), (30.0, 30.0), (0.0, -30.0), (5.0, 0.0)] {
            let (_, r, rho) = decode(&[1.0, 0.0, 0.0, 0.0, s, t], 1, cfg.mode);
            assert!(0.0 <= r && r <= rho && rho < 1.0);
        }
    }

    #[test]
    fn sweep_increases_toward_sqrt2() {
        let sweep = epsilon_sweep(&[0.3, 0.1, 0.01, 1e-3, 1e-4, 1e-6], 0.99, 4096).unwrap();
        let (measured, floor) = sweep.split_at(5);
        let ratios: Vec<f64> = measured.iter().map(|s| s.1.unwrap()).collect();
        for w in ratios.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{sweep:?}");
        }
        // the exact ratio at ε = 1e-4 is √2 − 1.3e-9; rounding in the
        // difference of squares is ~1e-8
        let last = ratios[4];
        assert!((last - 2f64.sqrt()).abs() < 1e-6, "{last}");
        assert_eq!(floor[0].1, None);
    }

    #[test]
    fn search_is_reproducible() {
        let cfg = SearchConfig {
            degree: 2,
            restarts: 2,
            iterations: 200,
            points: 128,
            certify_points: 256,
            ..SearchConfig::default()
        };
        let a = maximize(&cfg).unwrap();
        let b = maximize(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.best_ratio <= CEILING + CEILING_TOL);
    }

    #[test]
    fn validate_rejects_bad_configs() {
        let bad = SearchConfig {
            restarts: 0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchConfig {
            mode: SearchMode::PVariant(0.0),
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchConfig {
            degree: 40,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
