//! Direct evaluation of the dilation inequality
//!
//! ```text
//! ‖f_r − f_ϱ‖₁ ≤ 2 √(‖f_ϱ‖₁² − ‖f_r‖₁²)              (main form)
//! ‖f_r − f_ϱ‖₁ ≤ 2√2 √‖f_ϱ‖₁ √(‖f_ϱ‖₁ − ‖f_r‖₁)       (adjusted form)
//! ```
//!
//! together with radial-mean diagnostics, a harmonic counterexample, and the
//! random-instance generator used by the batch suites.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::circle::{self, AnalyticPoly, CircleGrid, DilatedSamples};
use crate::error::{Error, Result};
use crate::rng;

/// Absolute and relative slack of every inequality check.
pub const LEMMA_TOL: f64 = 1e-8;
/// Below this `rhs_main` the ratio is reported as degenerate.
pub const DEGENERATE_RHS: f64 = 1e-12;
/// Largest decrease of the radial means tolerated before flagging.
pub const MONOTONE_TOL: f64 = 1e-10;

/// `tol` absolute plus `tol` relative to the larger side.
pub fn tolerance(lhs: f64, rhs: f64, tol: f64) -> f64 {
    tol + tol * lhs.abs().max(rhs.abs())
}

/// Both bounds evaluated on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub r: f64,
    pub rho: f64,
    /// `‖f_r − f_ϱ‖₁`
    pub lhs: f64,
    /// `2 √(‖f_ϱ‖₁² − ‖f_r‖₁²)`
    pub rhs_main: f64,
    /// `2√2 √‖f_ϱ‖₁ √(‖f_ϱ‖₁ − ‖f_r‖₁)`
    pub rhs_adjusted: f64,
    /// `lhs / (rhs_main / 2)`, the constant this instance demands; `None`
    /// when `rhs_main` is degenerate.
    pub ratio: Option<f64>,
    pub norm_r: f64,
    pub norm_rho: f64,
}

impl LemmaReport {
    pub(crate) fn from_norms(r: f64, rho: f64, lhs: f64, norm_r: f64, norm_rho: f64) -> Self {
        let rhs_main = 2.0 * ((norm_rho - norm_r) * (norm_rho + norm_r)).max(0.0).sqrt();
        let rhs_adjusted = 2.0 * 2f64.sqrt() * norm_rho.max(0.0).sqrt() * (norm_rho - norm_r).max(0.0).sqrt();
        let ratio = (rhs_main >= DEGENERATE_RHS).then(|| lhs / (rhs_main / 2.0));
        Self {
            r,
            rho,
            lhs,
            rhs_main,
            rhs_adjusted,
            ratio,
            norm_r,
            norm_rho,
        }
    }

    pub fn slack_main(&self) -> f64 {
        self.rhs_main - self.lhs
    }

    pub fn slack_adjusted(&self) -> f64 {
        self.rhs_adjusted - self.lhs
    }

    pub fn holds_main(&self) -> bool {
        self.slack_main() >= -tolerance(self.lhs, self.rhs_main, LEMMA_TOL)
    }

    pub fn holds_adjusted(&self) -> bool {
        self.slack_adjusted() >= -tolerance(self.lhs, self.rhs_adjusted, LEMMA_TOL)
    }

    /// `rhs_main ≤ rhs_adjusted`, from `b² − a² ≤ 2b(b − a)`.
    pub fn bounds_ordered(&self) -> bool {
        self.rhs_main <= self.rhs_adjusted + tolerance(self.rhs_main, self.rhs_adjusted, LEMMA_TOL)
    }
}

fn check_radii(r: f64, rho: f64) -> Result<()> {
    if r > rho {
        return Err(Error::RadiiOutOfOrder { r, rho });
    }
    if r < 0.0 {
        return Err(Error::RadiusOutOfRange(r));
    }
    if rho > 1.0 {
        return Err(Error::RadiusOutOfRange(rho));
    }
    Ok(())
}

fn report_from_samples(f_r: &DilatedSamples, f_rho: &DilatedSamples) -> Result<LemmaReport> {
    let lhs = circle::norm_l1_diff(f_r, f_rho)?;
    let norm_r = circle::norm_l1(f_r);
    let norm_rho = circle::norm_l1(f_rho);
    Ok(LemmaReport::from_norms(f_r.radius(), f_rho.radius(), lhs, norm_r, norm_rho))
}

/// Evaluates both sides of the inequality for a polynomial at radii `r ≤ ϱ`.
///
/// Polynomials are entire, so `ϱ = 1` is accepted. A decrease of the radial
/// means beyond [`MONOTONE_TOL`] is reported as an error.
pub fn check_main_lemma(f: &AnalyticPoly, r: f64, rho: f64, m: usize) -> Result<LemmaReport> {
    check_radii(r, rho)?;
    let f_r = circle::dilate(f, r, m)?;
    let f_rho = circle::dilate(f, rho, m)?;
    let report = report_from_samples(&f_r, &f_rho)?;
    if report.norm_rho < report.norm_r - tolerance(report.norm_r, report.norm_rho, MONOTONE_TOL) {
        return Err(Error::MonotonicityViolated {
            inner: report.norm_r,
            outer: report.norm_rho,
        });
    }
    Ok(report)
}

/// Same evaluation as [`check_main_lemma`]; callers assert
/// [`LemmaReport::holds_adjusted`].
pub fn check_adjusted_lemma(f: &AnalyticPoly, r: f64, rho: f64, m: usize) -> Result<LemmaReport> {
    check_main_lemma(f, r, rho, m)
}

/// Radial means of a polynomial with the log-convexity diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    /// `(r, ‖f_r‖₁)` in increasing `r`.
    pub means: Vec<(f64, f64)>,
    /// Largest drop `‖f_{r_i}‖₁ − ‖f_{r_{i+1}}‖₁` (negative when increasing).
    pub max_decrease: f64,
    /// Second differences of `log ‖f_r‖₁` against `log r`, scaled so that a
    /// uniform grid gives the plain `y₀ − 2y₁ + y₂`. Convexity makes them
    /// nonnegative.
    pub log_second_differences: Vec<f64>,
}

impl RadialProfile {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.max_decrease <= tol
    }

    pub fn min_second_difference(&self) -> f64 {
        self.log_second_differences.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `r ↦ ‖f_r‖₁` on a strictly increasing grid in `[0, 1]`.
pub fn radial_mean_profile(f: &AnalyticPoly, radii: &[f64], m: usize) -> Result<RadialProfile> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
    }
    let means = radii
        .iter()
        .map(|&r| Ok((r, circle::norm_l1(&circle::dilate(f, r, m)?))))
        .collect::<Result<Vec<_>>>()?;
    let max_decrease = means
        .windows(2)
        .map(|w| w[0].1 - w[1].1)
        .fold(f64::NEG_INFINITY, f64::max);
    let logs: Vec<(f64, f64)> = means
        .iter()
        .filter(|(r, v)| *r > 0.0 && *v > 0.0)
        .map(|&(r, v)| (r.ln(), v.ln()))
        .collect();
    let log_second_differences = logs
        .windows(3)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let (x2, y2) = w[2];
            ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) * (x2 - x0) / 2.0
        })
        .collect();
    Ok(RadialProfile {
        means,
        max_decrease,
        log_second_differences,
    })
}

/// Radii `lo·(hi/lo)^{i/(n−1)}`, uniform in `log r`.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Poisson kernel of the point mass at 1, composed with `z ↦ conj(w) z`:
/// `u(z) = (1 − |w z|²) / |1 − conj(w) z|²`. Positive, harmonic, `u(0) = 1`,
/// and not analytic unless `w = 0`.
pub fn harmonic_control(w: Complex64) -> impl Fn(Complex64) -> Complex64 {
    move |z: Complex64| {
        let num = 1.0 - (w * z).norm_sqr();
        let den = (Complex64::new(1.0, 0.0) - w.conj() * z).norm_sqr();
        Complex64::new(num / den, 0.0)
    }
}

/// The inequality applied to a harmonic, non-analytic function. Every
/// circle has unit mass, so `rhs_main` collapses while `lhs` stays positive.
pub fn negative_control_poisson(w: Complex64, r: f64, rho: f64, m: usize) -> Result<LemmaReport> {
    check_radii(r, rho)?;
    if w.norm() >= 1.0 {
        return Err(Error::OutsideDisc(w));
    }
    if rho >= 1.0 {
        return Err(Error::RadiusOutOfRange(rho));
    }
    let u = harmonic_control(w);
    let u_r = DilatedSamples::from_fn(CircleGrid::new(r, m)?, &u);
    let u_rho = DilatedSamples::from_fn(CircleGrid::new(rho, m)?, &u);
    report_from_samples(&u_r, &u_rho)
}

/// Tail of the Cauchy sequence `(f_{r_n})` along an increasing radius grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyTail {
    pub r: f64,
    /// `sup_{m > n} ‖f_{r_n} − f_{r_m}‖₁` over the grid, including `r = 1`.
    pub sup_increment: f64,
    /// `2 √(‖f_1‖₁² − ‖f_{r_n}‖₁²)`
    pub bound: f64,
}

/// Cauchy tails of the dilations of a polynomial along `radii`, closed by
/// the boundary circle `r = 1`.
pub fn cauchy_tails(f: &AnalyticPoly, radii: &[f64], m: usize) -> Result<Vec<CauchyTail>> {
    let mut all: Vec<f64> = radii.to_vec();
    if all.last() != Some(&1.0) {
        all.push(1.0);
    }
    let samples = all
        .iter()
        .map(|&r| circle::dilate(f, r, m))
        .collect::<Result<Vec<_>>>()?;
    let boundary = circle::norm_l1(samples.last().expect("nonempty"));
    let mut out = Vec::with_capacity(radii.len());
    for n in 0..samples.len() - 1 {
        let mut sup: f64 = 0.0;
        for later in &samples[n + 1..] {
            sup = sup.max(circle::norm_l1_diff(&samples[n], later)?);
        }
        let inner = circle::norm_l1(&samples[n]);
        out.push(CauchyTail {
            r: all[n],
            sup_increment: sup,
            bound: 2.0 * (boundary * boundary - inner * inner).max(0.0).sqrt(),
        });
    }
    Ok(out)
}

/// One random instance of the batch suites.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub seed: u64,
    pub poly: AnalyticPoly,
    pub r: f64,
    pub rho: f64,
}

impl Instance {
    pub fn degree(&self) -> usize {
        self.poly.degree()
    }
}

/// A polynomial of exactly `degree` with i.i.d. complex standard Gaussian
/// coefficients.
pub fn gaussian_poly<R: Rng>(rng: &mut R, degree: usize) -> AnalyticPoly {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let coeffs: Vec<Complex64> = (0..=degree)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    AnalyticPoly::new(coeffs)
}

/// Instance `index` of the stream `seed`: degree uniform in `1..=max_degree`
/// (constants when `max_degree = 0`), `ϱ` uniform in `(0.05, 0.95)` and
/// `r = ϱ u` with `u` uniform in `(0, 1)`.
pub fn random_instance(seed: u64, index: u64, max_degree: usize) -> Instance {
    let instance_seed = rng::instance_seed(seed, index);
    let mut g = rng::instance_rng(seed, index);
    let degree = if max_degree == 0 { 0 } else { g.random_range(1..=max_degree) };
    let poly = gaussian_poly(&mut g, degree);
    let rho = g.random_range(0.05..0.95);
    let r = rho * g.random::<f64>();
    Instance {
        seed: instance_seed,
        poly,
        r,
        rho,
    }
}

/// One CSV row of the batch stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRow {
    pub seed: u64,
    pub degree: usize,
    pub report: LemmaReport,
}

impl BatchRow {
    pub const HEADER: &'static str = "seed,degree,r,rho,lhs,rhs_main,rhs_adjusted,ratio,slack";

    pub fn evaluate(instance: &Instance, m: usize) -> Result<Self> {
        Ok(Self {
            seed: instance.seed,
            degree: instance.degree(),
            report: check_main_lemma(&instance.poly, instance.r, instance.rho, m)?,
        })
    }

    pub fn to_csv(&self) -> String {
        let rep = &self.report;
        let ratio = rep.ratio.map_or_else(|| "degenerate".to_string(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.degree,
            rep.r,
            rep.rho,
            rep.lhs,
            rep.rhs_main,
            rep.rhs_adjusted,
            ratio,
            rep.slack_main()
        )
    }
}
