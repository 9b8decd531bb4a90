//! Blaschke factorization of a polynomial on a disc of radius `ϱ`.
//!
//! The zeros `α_n` of `f` in `ϱD` define
//!
//! ```text
//! B(z) = Π ϱ(α_n − z) / (ϱ² − conj(α_n) z),
//! ```
//!
//! unimodular on `|z| = ϱ`. The quotient `F = f/B` has no zeros on the closed
//! disc, so it has a square root and `f = g·h` with `g = B F^{1/2}` and
//! `h = F^{1/2}`. [`trace_inequality_chain`] samples `g` and `h` on the two
//! circles `|z| = r` and `|z| = ϱ` and records every inequality that leads
//! from the factorization to the dilation bound.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle::{self, AnalyticPoly, CircleGrid, DilatedSamples};
use crate::error::{Error, Result};

/// Roots closer than this to `|z| = ϱ` are reported as [`Error::ZeroOnCircle`].
pub const ZERO_ON_CIRCLE_GAP: f64 = 1e-6;
/// Amount added to `ϱ` by [`trace_with_nudge`] after a zero-on-circle refusal.
pub const RHO_NUDGE: f64 = 1e-4;
/// Absolute and relative slack allowed in every traced step.
pub const CHAIN_TOL: f64 = 1e-8;

const ABERTH_MAX_ITER: usize = 500;
const ROOT_SEED: u64 = 0x5eed_b1a5_c4e0;
const RADIAL_STEPS: usize = 256;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// All roots of `f` with multiplicity, by Aberth–Ehrlich iteration started
/// on a perturbed circle of radius `start_radius`, then Newton polishing.
/// Falls back to the companion-matrix eigenvalues when the iteration stalls.
pub fn all_roots(f: &AnalyticPoly, start_radius: f64) -> Result<Vec<Complex64>> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let coeffs = f.coeffs();
    // exact zeros at the origin are split off before iterating
    let zeros_at_origin = coeffs.iter().take_while(|a| a.norm_sqr() == 0.0).count();
    let reduced = AnalyticPoly::new(coeffs[zeros_at_origin..].to_vec());
    let mut roots = vec![czero(); zeros_at_origin];
    if reduced.degree() == 0 {
        return Ok(roots);
    }
    let found = match aberth(&reduced, start_radius) {
        Some(r) => r,
        None => companion_roots(&reduced).ok_or(Error::RootsDidNotConverge(reduced.degree()))?,
    };
    roots.extend(found.into_iter().map(|z| newton_polish(&reduced, z)));
    Ok(roots)
}

fn aberth(p: &AnalyticPoly, start_radius: f64) -> Option<Vec<Complex64>> {
    let n = p.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(ROOT_SEED ^ n as u64);
    let radius = if start_radius > 0.0 { start_radius } else { 1.0 };
    let offset: f64 = rng.random::<f64>() * 2.0 * PI / n as f64;
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| {
            let jitter = 1.0 + 0.1 * (rng.random::<f64>() - 0.5);
            Complex64::from_polar(radius * jitter, offset + 2.0 * PI * j as f64 / n as f64)
        })
        .collect();

    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let (val, der) = p.evaluate_with_derivative(z[i]);
            if val.norm_sqr() == 0.0 {
                continue;
            }
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm_sqr() == 0.0 {
                        czero()
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let newton = if der.norm_sqr() == 0.0 {
                // stationary point: push off along an arbitrary direction
                Complex64::new(1e-3 * (1.0 + z[i].norm()), 0.0)
            } else {
                val / der
            };
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm_sqr() == 0.0 { newton } else { newton / denom };
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            z[i] -= step;
            max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
        }
        if max_step <= 4.0 * f64::EPSILON {
            return Some(z);
        }
    }
    // slow convergence toward clustered roots is still usable if every
    // residual is small after polishing
    let scale = p.max_coeff_norm();
    let ok = z.iter().all(|&r| {
        let polished = newton_polish(p, r);
        p.evaluate(polished).norm() <= 1e-10 * scale * polished.norm().max(1.0).powi(p.degree() as i32)
    });
    ok.then_some(z)
}

fn companion_roots(p: &AnalyticPoly) -> Option<Vec<Complex64>> {
    let n = p.degree();
    let a = p.coeffs();
    let lead = a[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -a[i] / lead;
    }
    let eig = m.schur().eigenvalues()?;
    Some(eig.iter().copied().collect())
}

fn newton_polish(p: &AnalyticPoly, mut z: Complex64) -> Complex64 {
    let mut best = p.evaluate(z).norm();
    for _ in 0..8 {
        let (val, der) = p.evaluate_with_derivative(z);
        if der.norm_sqr() == 0.0 || val.norm_sqr() == 0.0 {
            break;
        }
        let cand = z - val / der;
        let res = p.evaluate(cand).norm();
        if !(res < best) {
            break;
        }
        z = cand;
        best = res;
    }
    z
}

/// Zeros of `f` strictly inside `|z| < ρ`, repeated by multiplicity.
///
/// Refuses with [`Error::ZeroOnCircle`] when any root of `f` lies within
/// [`ZERO_ON_CIRCLE_GAP`] of the circle.
pub fn find_zeros(f: &AnalyticPoly, rho: f64) -> Result<Vec<Complex64>> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::RadiusOutOfRange(rho));
    }
    let roots = all_roots(f, rho)?;
    if let Some(distance) = roots
        .iter()
        .map(|z| (z.norm() - rho).abs())
        .find(|&d| d < ZERO_ON_CIRCLE_GAP)
    {
        return Err(Error::ZeroOnCircle { rho, distance });
    }
    Ok(roots.into_iter().filter(|z| z.norm() < rho).collect())
}

/// Finite Blaschke product for the disc of radius `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeProduct {
    zeros: Vec<Complex64>,
    rho: f64,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<Complex64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::RadiusOutOfRange(rho));
        }
        if let Some(z) = zeros.iter().find(|z| z.norm() >= rho) {
            return Err(Error::InvalidArgument(format!(
                "Blaschke zero {z} is not inside the disc of radius {rho}"
            )));
        }
        Ok(Self { zeros, rho })
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `Π ϱ(α_n − z) / (ϱ² − conj(α_n) z)`; the empty product is 1.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let rho = self.rho;
        self.zeros
            .iter()
            .map(|&a| rho * (a - z) / (rho * rho - a.conj() * z))
            .fold(Complex64::new(1.0, 0.0), |acc, t| acc * t)
    }
}

/// Evaluates the Blaschke product at `z`.
pub fn blaschke_eval(b: &BlaschkeProduct, z: Complex64) -> Complex64 {
    b.eval(z)
}

/// Net number of turns of the sampled phase around the origin.
pub fn winding_number(values: &[Complex64]) -> Result<i64> {
    if let Some(j) = values.iter().position(|v| v.norm_sqr() == 0.0) {
        return Err(Error::VanishingSample(j));
    }
    let n = values.len();
    let total: f64 = (0..n).map(|j| (values[(j + 1) % n] * values[j].conj()).arg()).sum();
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Continuous square root of samples on a closed curve, principal at sample 0.
pub fn sqrt_branch(values: &[Complex64]) -> Result<Vec<Complex64>> {
    let anchor = values.first().map(|v| v.sqrt()).unwrap_or_default();
    sqrt_branch_anchored(values, anchor)
}

/// As [`sqrt_branch`], with the sign at sample 0 chosen closest to `anchor`.
pub fn sqrt_branch_anchored(values: &[Complex64], anchor: Complex64) -> Result<Vec<Complex64>> {
    let winding = winding_number(values)?;
    if winding != 0 {
        return Err(Error::NotFactorizable(winding));
    }
    Ok(continue_sqrt(values, anchor))
}

/// Square roots along a path, each chosen on the same side as its predecessor.
fn continue_sqrt(values: &[Complex64], anchor: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev = anchor;
    for (j, v) in values.iter().enumerate() {
        let mut w = v.sqrt();
        let flip = if j == 0 {
            (w - prev).norm_sqr() > (w + prev).norm_sqr()
        } else {
            (w * prev.conj()).re < 0.0
        };
        if flip {
            w = -w;
        }
        out.push(w);
        prev = w;
    }
    out
}

/// Divides out the linear factors `z − α` and drops the remainders.
fn deflate(f: &AnalyticPoly, zeros: &[Complex64]) -> AnalyticPoly {
    let mut c = f.coeffs().to_vec();
    for &alpha in zeros {
        let n = c.len() - 1;
        if n == 0 {
            break;
        }
        let mut q = vec![czero(); n];
        q[n - 1] = c[n];
        for k in (1..n).rev() {
            q[k - 1] = c[k] + alpha * q[k];
        }
        c = q;
    }
    AnalyticPoly::new(c)
}

/// `f = g·h` sampled on the circles `|z| = r` and `|z| = ϱ`.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub blaschke: BlaschkeProduct,
    pub f_r: DilatedSamples,
    pub f_rho: DilatedSamples,
    pub g_r: DilatedSamples,
    pub g_rho: DilatedSamples,
    pub h_r: DilatedSamples,
    pub h_rho: DilatedSamples,
    /// Winding of `F = f/B` around the `ϱ`-circle (zero on success).
    pub winding: i64,
    /// `max |f − g h| / max |f|` over both circles.
    pub residual: f64,
    /// `max ||B| − 1|` over the `ϱ`-circle.
    pub boundary_defect: f64,
}

/// Factorizes `f` as `g·h` and samples both factors at radii `r ≤ ϱ`.
pub fn factorize(f: &AnalyticPoly, r: f64, rho: f64, m: usize) -> Result<Factorization> {
    if r > rho {
        return Err(Error::RadiiOutOfOrder { r, rho });
    }
    if r < 0.0 {
        return Err(Error::RadiusOutOfRange(r));
    }
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let zeros = find_zeros(f, rho)?;
    let blaschke = BlaschkeProduct::new(zeros, rho)?;
    let f_r = circle::dilate(f, r, m)?;
    let f_rho = circle::dilate(f, rho, m)?;

    // F = f/B = q(z) Π (ϱ² − conj(α) z)/(−ϱ) with q the deflated quotient,
    // which avoids the 0/0 of a direct division near interior zeros.
    let quotient = deflate(f, blaschke.zeros());
    let big_f = |z: Complex64| -> Complex64 {
        blaschke
            .zeros()
            .iter()
            .fold(quotient.evaluate(z), |acc, &a| acc * (rho * rho - a.conj() * z) / (-rho))
    };

    let grid_rho = CircleGrid::new(rho, m)?;
    let grid_r = CircleGrid::new(r, m)?;
    let big_f_rho = DilatedSamples::from_fn(grid_rho.clone(), big_f);
    let big_f_r = DilatedSamples::from_fn(grid_r.clone(), big_f);
    let b_rho = DilatedSamples::from_fn(grid_rho, |z| blaschke.eval(z));
    let b_r = DilatedSamples::from_fn(grid_r, |z| blaschke.eval(z));

    let winding = winding_number(&big_f_rho.values)?;
    let h_rho_values = sqrt_branch(&big_f_rho.values)?;

    // carry the branch along the ray θ = 0 from ϱ down to r
    let ray: Vec<Complex64> = (0..=RADIAL_STEPS)
        .map(|i| big_f(Complex64::new(rho + (r - rho) * i as f64 / RADIAL_STEPS as f64, 0.0)))
        .collect();
    let anchor = *continue_sqrt(&ray, h_rho_values[0]).last().expect("nonempty ray");
    let h_r_values = sqrt_branch_anchored(&big_f_r.values, anchor)?;

    let h_rho = DilatedSamples {
        grid: f_rho.grid.clone(),
        values: h_rho_values,
    };
    let h_r = DilatedSamples {
        grid: f_r.grid.clone(),
        values: h_r_values,
    };
    let g_rho = b_rho.mul(&h_rho)?;
    let g_r = b_r.mul(&h_r)?;

    let scale = f_r.max_modulus().max(f_rho.max_modulus());
    let residual = [(&f_r, &g_r, &h_r), (&f_rho, &g_rho, &h_rho)]
        .iter()
        .flat_map(|(fs, gs, hs)| {
            fs.values
                .iter()
                .zip(&gs.values)
                .zip(&hs.values)
                .map(|((fv, gv), hv)| (fv - gv * hv).norm())
        })
        .fold(0.0, f64::max)
        / scale;
    let boundary_defect = b_rho.values.iter().map(|b| (b.norm() - 1.0).abs()).fold(0.0, f64::max);

    Ok(Factorization {
        blaschke,
        f_r,
        f_rho,
        g_r,
        g_rho,
        h_r,
        h_rho,
        winding,
        residual,
        boundary_defect,
    })
}

/// How a traced step is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs ≤ rhs`
    AtMost,
    /// `lhs = rhs`
    Equal,
}

/// One recorded step of the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStep {
    pub name: &'static str,
    /// `a` … `e`: triangle split, Cauchy–Schwarz, orthogonality, combined
    /// bound, endpoint identities. `f` marks the concluding inequality.
    pub stage: char,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
}

impl ChainStep {
    /// `rhs − lhs` for inequalities, `−|lhs − rhs|` for identities.
    pub fn slack(&self) -> f64 {
        match self.relation {
            Relation::AtMost => self.rhs - self.lhs,
            Relation::Equal => -(self.lhs - self.rhs).abs(),
        }
    }

    pub fn tolerance(&self) -> f64 {
        CHAIN_TOL + CHAIN_TOL * self.lhs.abs().max(self.rhs.abs())
    }

    pub fn holds(&self) -> bool {
        self.slack() >= -self.tolerance()
    }
}

/// The six L-norms entering the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceNorms {
    pub g_r_l2: f64,
    pub g_rho_l2: f64,
    pub h_r_l2: f64,
    pub h_rho_l2: f64,
    pub f_r_l1: f64,
    pub f_rho_l1: f64,
}

/// Every intermediate inequality from `f = g·h` to the dilation bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationTrace {
    pub r: f64,
    pub rho: f64,
    pub zeros: Vec<(f64, f64)>,
    pub norms: TraceNorms,
    pub steps: Vec<ChainStep>,
    pub winding_check: i64,
    pub residual: f64,
    pub boundary_defect: f64,
}

impl FactorizationTrace {
    pub fn first_violation(&self) -> Option<&ChainStep> {
        self.steps.iter().find(|s| !s.holds())
    }

    /// Fails with the first violated step.
    pub fn verify(&self) -> Result<()> {
        match self.first_violation() {
            None => Ok(()),
            Some(s) => Err(Error::ChainStepViolated {
                step: s.name.to_string(),
                lhs: s.lhs,
                rhs: s.rhs,
            }),
        }
    }

    pub fn min_slack(&self) -> f64 {
        self.steps.iter().map(|s| s.slack()).fold(f64::INFINITY, f64::min)
    }

    /// Key/value record, one step per line as `step <name> <lhs> <rhs> <slack>`.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let n = &self.norms;
        let _ = writeln!(out, "r {:.17e}", self.r);
        let _ = writeln!(out, "rho {:.17e}", self.rho);
        let _ = writeln!(out, "zeros {}", self.zeros.len());
        for (re, im) in &self.zeros {
            let _ = writeln!(out, "zero {re:.17e} {im:.17e}");
        }
        for (key, v) in [
            ("g_r_l2", n.g_r_l2),
            ("g_rho_l2", n.g_rho_l2),
            ("h_r_l2", n.h_r_l2),
            ("h_rho_l2", n.h_rho_l2),
            ("f_r_l1", n.f_r_l1),
            ("f_rho_l1", n.f_rho_l1),
        ] {
            let _ = writeln!(out, "{key} {v:.17e}");
        }
        let _ = writeln!(out, "winding_check {}", self.winding_check);
        let _ = writeln!(out, "residual {:.6e}", self.residual);
        let _ = writeln!(out, "boundary_defect {:.6e}", self.boundary_defect);
        for s in &self.steps {
            let _ = writeln!(out, "step {} {:.17e} {:.17e} {:.6e}", s.name, s.lhs, s.rhs, s.slack());
        }
        out
    }
}

/// Runs the factorization and records the chain at radii `r ≤ ϱ`.
///
/// Violated steps do not fail the call; use [`FactorizationTrace::verify`].
pub fn trace_inequality_chain(f: &AnalyticPoly, r: f64, rho: f64, m: usize) -> Result<FactorizationTrace> {
    let fac = factorize(f, r, rho, m)?;
    let l2 = circle::norm_l2;
    let l1 = circle::norm_l1;
    let (gr, grho, hr, hrho) = (l2(&fac.g_r), l2(&fac.g_rho), l2(&fac.h_r), l2(&fac.h_rho));
    let (fr, frho) = (l1(&fac.f_r), l1(&fac.f_rho));
    let (gr2, grho2, hr2, hrho2) = (gr * gr, grho * grho, hr * hr, hrho * hrho);
    let root = |x: f64| x.max(0.0).sqrt();

    let lhs = circle::norm_l1_diff(&fac.f_r, &fac.f_rho)?;
    let g_rho_h_r = fac.g_rho.mul(&fac.h_r)?;
    let gh_split_1 = circle::norm_l1_diff(&fac.g_r.mul(&fac.h_r)?, &g_rho_h_r)?;
    let gh_split_2 = circle::norm_l1_diff(&g_rho_h_r, &fac.g_rho.mul(&fac.h_rho)?)?;
    let g_diff = circle::norm_lp_diff(&fac.g_r, &fac.g_rho, 2.0)?;
    let h_diff = circle::norm_lp_diff(&fac.h_r, &fac.h_rho, 2.0)?;
    let cs = g_diff * hr + grho * h_diff;
    let ortho_sum = root(grho2 * hr2 - gr2 * hr2) + root(hrho2 * grho2 - grho2 * hr2);
    let combined = 2.0 * root(grho2 * hrho2 - gr2 * hr2);

    // per-coefficient orthogonality weights of g on the ϱ-circle
    let t = if rho > 0.0 { r / rho } else { 0.0 };
    let (coef_lhs, coef_rhs) = fac
        .g_rho
        .fourier_coefficients()
        .iter()
        .take(m / 2)
        .enumerate()
        .fold((0.0, 0.0), |(a, b), (k, c)| {
            let tk = t.powi(k as i32);
            (a + c.norm_sqr() * (1.0 - tk) * (1.0 - tk), b + c.norm_sqr() * (1.0 - tk * tk))
        });

    let step = |name, stage, relation, lhs, rhs| ChainStep {
        name,
        stage,
        relation,
        lhs,
        rhs,
    };
    use Relation::{AtMost, Equal};
    let steps = vec![
        step("triangle", 'a', AtMost, lhs, gh_split_1 + gh_split_2),
        step("cauchy_schwarz", 'b', AtMost, gh_split_1 + gh_split_2, cs),
        step("orthogonality_g", 'c', AtMost, g_diff, root(grho2 - gr2)),
        step("orthogonality_h", 'c', AtMost, h_diff, root(hrho2 - hr2)),
        step("coefficient_orthogonality", 'c', AtMost, coef_lhs, coef_rhs),
        step("orthogonality_sum", 'd', AtMost, cs, ortho_sum),
        step("combined", 'd', AtMost, ortho_sum, combined),
        step("endpoint_g", 'e', Equal, grho2, frho),
        step("endpoint_h", 'e', Equal, hrho2, frho),
        step("endpoint_cauchy_schwarz", 'e', AtMost, fr * fr, gr2 * hr2),
        step("dilation_bound", 'f', AtMost, lhs, 2.0 * root(frho * frho - fr * fr)),
    ];

    Ok(FactorizationTrace {
        r,
        rho,
        zeros: fac.blaschke.zeros().iter().map(|z| (z.re, z.im)).collect(),
        norms: TraceNorms {
            g_r_l2: gr,
            g_rho_l2: grho,
            h_r_l2: hr,
            h_rho_l2: hrho,
            f_r_l1: fr,
            f_rho_l1: frho,
        },
        steps,
        winding_check: fac.winding,
        residual: fac.residual,
        boundary_defect: fac.boundary_defect,
    })
}

/// [`trace_inequality_chain`], nudging `ϱ` outward by [`RHO_NUDGE`] while a
/// zero sits on the circle.
pub fn trace_with_nudge(f: &AnalyticPoly, r: f64, rho: f64, m: usize, max_nudges: usize) -> Result<FactorizationTrace> {
    let mut rho = rho;
    let mut attempt = 0;
    loop {
        match trace_inequality_chain(f, r, rho, m) {
            Err(Error::ZeroOnCircle { .. }) if attempt < max_nudges && rho + RHO_NUDGE < 1.0 => {
                rho += RHO_NUDGE;
                attempt += 1;
            }
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted_by_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        v
    }

    #[test]
    fn find_zeros_examples() {
        let f = AnalyticPoly::from_real(&[-1.0 / 16.0, 0.0, 1.0]);
        let z = sorted_by_re(find_zeros(&f, 0.5).unwrap());
        assert_eq!(z.len(), 2);
        assert!((z[0] - c(-0.25, 0.0)).norm() < 1e-14);
        assert!((z[1] - c(0.25, 0.0)).norm() < 1e-14);

        assert!(find_zeros(&AnalyticPoly::from_real(&[1.0, 1.0]), 0.5).unwrap().is_empty());

        let z = find_zeros(&AnalyticPoly::from_real(&[0.0, 0.0, 1.0]), 0.5).unwrap();
        assert_eq!(z, vec![c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn find_zeros_refuses_zero_on_circle() {
        let f = AnalyticPoly::from_real(&[-0.5, 1.0]);
        assert!(matches!(find_zeros(&f, 0.5), Err(Error::ZeroOnCircle { .. })));
        assert!(matches!(find_zeros(&AnalyticPoly::new(vec![]), 0.5), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn roots_have_small_residual() {
        let f = AnalyticPoly::new(vec![c(0.3, -1.0), c(2.0, 0.1), c(-0.7, 0.7), c(1.1, 0.0), c(0.0, -0.4), c(0.9, 0.2)]);
        let roots = all_roots(&f, 0.9).unwrap();
        assert_eq!(roots.len(), 5);
        for z in roots {
            assert!(f.evaluate(z).norm() <= 1e-8 * f.max_coeff_norm() * z.norm().max(1.0).powi(5));
        }
    }

    #[test]
    fn companion_fallback_agrees() {
        let f = AnalyticPoly::from_real(&[6.0, -5.0, 1.0]);
        let mut roots = companion_roots(&f).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((roots[0] - c(2.0, 0.0)).norm() < 1e-12);
        assert!((roots[1] - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn blaschke_eval_examples() {
        let b = BlaschkeProduct::new(vec![c(0.0, 0.0)], 0.5).unwrap();
        assert!((b.eval(c(0.5, 0.0)) - c(-1.0, 0.0)).norm() < 1e-15);
        let b = BlaschkeProduct::new(vec![c(0.25, 0.0)], 0.5).unwrap();
        assert!((b.eval(c(0.5, 0.0)) - c(-1.0, 0.0)).norm() < 1e-15);
        let b = BlaschkeProduct::new(vec![], 0.5).unwrap();
        assert_eq!(b.eval(c(0.1, 0.3)), c(1.0, 0.0));
    }

    #[test]
    fn blaschke_is_unimodular_on_circle_and_contractive_inside() {
        let b = BlaschkeProduct::new(vec![c(0.1, 0.2), c(-0.3, 0.05), c(0.0, -0.55)], 0.6).unwrap();
        let grid = CircleGrid::new(0.6, 256).unwrap();
        for &z in grid.points() {
            assert!((b.eval(z).norm() - 1.0).abs() < 1e-12);
        }
        let inner = CircleGrid::new(0.4, 256).unwrap();
        assert!(inner.points().iter().all(|&z| b.eval(z).norm() < 1.0));
        assert!(BlaschkeProduct::new(vec![c(0.7, 0.0)], 0.6).is_err());
    }

    #[test]
    fn sqrt_branch_examples() {
        let four = vec![c(4.0, 0.0); 16];
        assert!(sqrt_branch(&four).unwrap().iter().all(|&w| w == c(2.0, 0.0)));

        let grid = CircleGrid::new(1.0, 64).unwrap();
        let ones: Vec<_> = grid.points().iter().map(|&z| z * z.inv()).collect();
        assert!(sqrt_branch(&ones).unwrap().iter().all(|w| (w - c(1.0, 0.0)).norm() < 1e-15));

        let vals: Vec<_> = grid.points().iter().map(|&z| c(2.0, 0.0) + z).collect();
        let roots = sqrt_branch(&vals).unwrap();
        for (w, v) in roots.iter().zip(&vals) {
            assert!((w * w - v).norm() <= 1e-12 * v.norm());
            assert!(w.re > 0.0);
        }
        for pair in roots.windows(2) {
            let turn = (pair[1] * pair[0].conj()).arg().abs();
            assert!(turn < PI / 2.0);
        }
    }

    #[test]
    fn sqrt_branch_detects_winding() {
        let grid = CircleGrid::new(1.0, 64).unwrap();
        let z: Vec<_> = grid.points().to_vec();
        assert!(matches!(sqrt_branch(&z), Err(Error::NotFactorizable(1))));
        let mut with_zero = vec![c(1.0, 0.0); 8];
        with_zero[3] = c(0.0, 0.0);
        assert!(matches!(sqrt_branch(&with_zero), Err(Error::VanishingSample(3))));
    }

    #[test]
    fn factorize_constant() {
        let fac = factorize(&AnalyticPoly::from_real(&[1.0]), 0.3, 0.8, 64).unwrap();
        for s in [&fac.g_r, &fac.g_rho, &fac.h_r, &fac.h_rho] {
            assert!(s.values.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn factorize_monomial() {
        let f = AnalyticPoly::from_real(&[0.0, 1.0]);
        let fac = factorize(&f, 0.2, 0.5, 128).unwrap();
        assert_eq!(fac.blaschke.zeros().len(), 1);
        for (samples, g, h) in [(&fac.f_r, &fac.g_r, &fac.h_r), (&fac.f_rho, &fac.g_rho, &fac.h_rho)] {
            for ((fv, gv), hv) in samples.values.iter().zip(&g.values).zip(&h.values) {
                assert!((fv - gv * hv).norm() < 1e-15);
                // F = −ϱ
                assert!((hv * hv - c(-0.5, 0.0)).norm() < 1e-15);
            }
        }
        assert!(fac.residual < 1e-14);
    }

    #[test]
    fn branches_agree_between_circles() {
        // F = f/B near −1 on both circles, where the principal root flips sign
        let f = AnalyticPoly::new(vec![c(-1.0, 0.02), c(0.0, -0.3)]);
        let fac = factorize(&f, 0.1, 0.9, 256).unwrap();
        assert!((fac.h_r.values[0] - fac.h_rho.values[0]).norm() < 0.5);
        let trace = trace_inequality_chain(&f, 0.1, 0.9, 256).unwrap();
        trace.verify().unwrap();
    }

    #[test]
    fn constant_trace_is_all_equalities() {
        let trace = trace_inequality_chain(&AnalyticPoly::from_real(&[2.5]), 0.2, 0.7, 64).unwrap();
        for s in &trace.steps {
            if s.name.starts_with("endpoint") {
                continue;
            }
            assert!(s.lhs.abs() < 1e-14 && s.rhs.abs() < 1e-7, "{s:?}");
        }
        trace.verify().unwrap();
        assert_eq!(trace.winding_check, 0);
    }

    #[test]
    fn endpoint_identity_for_small_perturbation() {
        let f = AnalyticPoly::from_real(&[1.0, 0.1]);
        let trace = trace_inequality_chain(&f, 0.0, 0.9, 4096).unwrap();
        trace.verify().unwrap();
        let n = trace.norms;
        // independent value of ‖1 + 0.1z‖₁ at radius 0.9
        assert!((n.f_rho_l1 - 1.002_026_027_238_786).abs() < 1e-9);
        assert!((n.g_rho_l2 * n.g_rho_l2 - n.f_rho_l1).abs() < 1e-9);
    }

    #[test]
    fn trace_record_lists_every_step() {
        let f = AnalyticPoly::from_real(&[0.5, -1.0, 0.3]);
        let trace = trace_inequality_chain(&f, 0.4, 0.8, 256).unwrap();
        let record = trace.to_record();
        assert_eq!(record.lines().filter(|l| l.starts_with("step ")).count(), trace.steps.len());
        assert!(record.contains("winding_check 0"));
        assert!(record.contains("zeros 1"));
    }

    #[test]
    fn nudge_moves_rho_off_zero() {
        let f = AnalyticPoly::from_real(&[-0.5, 1.0]);
        let trace = trace_with_nudge(&f, 0.1, 0.5, 256, 3).unwrap();
        assert!((trace.rho - 0.5001).abs() < 1e-12);
        assert_eq!(trace.zeros.len(), 1);
        trace.verify().unwrap();
    }
}
