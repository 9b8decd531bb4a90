//! Measures on the circle, Poisson extensions, and Poisson-product chains on
//! the infinite torus.
//!
//! A [`CircleMeasure`] is finitely many atoms plus a trigonometric-polynomial
//! density against `dθ/2π`, so every Fourier coefficient and every Poisson
//! extension is exact. The chain `f_d(χ) = Π_{j≤d} P(χ_j, z_j)` built from a
//! [`PolydiscPoint`] is the standard example of a bounded chain whose
//! convergence depends on the summability of `z`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::{self, AnalyticPoly, CircleGrid, DilatedSamples};
use crate::error::{Error, Result};
use crate::lemma::{self, LemmaReport};
use crate::polytorus::{self, Estimate, MultiIndex, TorusSampler, TrigPoly};
use crate::rng::CounterRng;

/// Negative frequencies checked by default.
pub const DEFAULT_DEPTH: usize = 64;
pub const ANALYTIC_TOL: f64 = 1e-10;
/// Radii `1 − 0.7·2^{−n}` used by default.
pub const DEFAULT_RADII: usize = 9;
/// Radii entering the pointwise extrapolation to the boundary.
pub const EXTRAPOLATION_POINTS: usize = 5;

/// Poisson kernel `(1 − |z|²)/|ζ − z|²`.
#[inline]
pub fn poisson_kernel(zeta: Complex64, z: Complex64) -> f64 {
    (1.0 - z.norm_sqr()) / (zeta - z).norm_sqr()
}

/// Atoms plus a one-variable density.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMeasure {
    atoms: Vec<(f64, Complex64)>,
    density: TrigPoly,
}

impl CircleMeasure {
    pub fn new(atoms: Vec<(f64, Complex64)>, density: TrigPoly) -> Result<Self> {
        for (i, &(theta, _)) in atoms.iter().enumerate() {
            if !(0.0..TAU).contains(&theta) {
                return Err(Error::InvalidArgument(format!("atom angle {theta} is outside [0, 2π)")));
            }
            if atoms[..i].iter().any(|&(t, _)| t == theta) {
                return Err(Error::InvalidArgument(format!("repeated atom angle {theta}")));
            }
        }
        if density.dimension() > 1 {
            return Err(Error::InvalidArgument("the density must be a polynomial in one variable".into()));
        }
        Ok(Self { atoms, density })
    }

    pub fn zero() -> Self {
        Self {
            atoms: Vec::new(),
            density: TrigPoly::zero(),
        }
    }

    /// Unit point mass at `theta`.
    pub fn point_mass(theta: f64) -> Result<Self> {
        Self::new(vec![(theta, Complex64::new(1.0, 0.0))], TrigPoly::zero())
    }

    pub fn from_density(density: TrigPoly) -> Result<Self> {
        Self::new(Vec::new(), density)
    }

    /// Density `Σ c_n χ^n` with `c` indexed from `n = lowest`.
    pub fn from_coefficients(lowest: i32, c: &[Complex64]) -> Result<Self> {
        Self::from_density(TrigPoly::one_variable(1, lowest, c))
    }

    pub fn atoms(&self) -> &[(f64, Complex64)] {
        &self.atoms
    }

    pub fn density(&self) -> &TrigPoly {
        &self.density
    }

    /// `μ̂(k) = Σ w_j e^{−ikθ_j} + c_k`.
    pub fn fourier_coefficient(&self, k: i32) -> Complex64 {
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|&(theta, w)| w * Complex64::from_polar(1.0, -(k as f64) * theta))
            .sum();
        atoms + self.density.coefficient(&MultiIndex::new(vec![k]))
    }

    /// Largest `|μ̂(−k)|` for `1 ≤ k ≤ depth`.
    pub fn negative_residual(&self, depth: usize) -> f64 {
        (1..=depth as i32)
            .map(|k| self.fourier_coefficient(-k).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_analytic(&self, depth: usize, tol: f64) -> Result<AnalyticityCheck> {
        if depth == 0 {
            return Err(Error::InvalidArgument("at least one negative frequency must be checked".into()));
        }
        let max_residual = self.negative_residual(depth);
        Ok(AnalyticityCheck {
            analytic: max_residual <= tol,
            max_residual,
            depth,
        })
    }

    /// `Σ |w_j| + ‖density‖₁`, the density norm by quadrature on `m` nodes.
    pub fn total_variation(&self, m: usize) -> Result<f64> {
        let atoms = circle::compensated_sum(self.atoms.iter().map(|(_, w)| w.norm()));
        Ok(atoms + circle::norm_l1(&self.density_samples(m)?))
    }

    fn density_samples(&self, m: usize) -> Result<DilatedSamples> {
        let e = self.density.max_abs_exponent() as usize;
        if m < 2 * (e + 1) {
            return Err(Error::GridTooCoarse {
                points: m,
                degree: e,
                required: 2 * (e + 1),
            });
        }
        Ok(DilatedSamples::from_fn(CircleGrid::new(1.0, m)?, |z| self.density.evaluate(&[z])))
    }

    /// `𝔓μ(z)`: kernel values at the atoms, and `c_n z^n` / `c_{−n} z̄^n`
    /// term by term for the density.
    pub fn poisson_extension(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisc(z));
        }
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|&(theta, w)| w * poisson_kernel(Complex64::from_polar(1.0, theta), z))
            .sum();
        let density: Complex64 = self
            .density
            .terms()
            .map(|(k, &a)| {
                let n = k.get(1);
                if n >= 0 {
                    a * z.powi(n)
                } else {
                    a * z.conj().powi(-n)
                }
            })
            .sum();
        Ok(atoms + density)
    }

    /// `𝔓μ` on the radius-`r` circle.
    pub fn extension_samples(&self, r: f64, m: usize) -> Result<DilatedSamples> {
        if r >= 1.0 {
            return Err(Error::RadiusOutOfRange(r));
        }
        let grid = CircleGrid::new(r, m)?;
        let values = grid
            .points()
            .iter()
            .map(|&z| self.poisson_extension(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(DilatedSamples { grid, values })
    }

    /// Parses `atoms n`, `n` lines `theta re im`, then `density` followed by
    /// one-variable polynomial lines `k : re im`. Either section may be
    /// omitted; `#` comments and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut density = TrigPoly::zero();
        let mut expected_atoms = 0usize;
        let mut in_density = false;
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("atoms") {
                expected_atoms = rest.trim().parse().map_err(|e| Error::Parse {
                    line: n,
                    message: format!("bad atom count: {e}"),
                })?;
                in_density = false;
            } else if line == "density" {
                in_density = true;
            } else if in_density {
                let (k, a) = polytorus::parse_term(line, n)?;
                density.add_term(k, a);
            } else if atoms.len() < expected_atoms {
                let mut parts = line.splitn(2, char::is_whitespace);
                let theta: f64 = parts.next().unwrap_or("").parse().map_err(|e| Error::Parse {
                    line: n,
                    message: format!("bad angle: {e}"),
                })?;
                atoms.push((theta, circle::parse_complex(parts.next().unwrap_or("").trim(), n)?));
            } else {
                return Err(Error::Parse {
                    line: n,
                    message: "unexpected line outside the atoms and density sections".into(),
                });
            }
        }
        if atoms.len() != expected_atoms {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {expected_atoms} atoms, found {}", atoms.len()),
            });
        }
        Self::new(atoms, density)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("atoms {}\n", self.atoms.len());
        for (theta, w) in &self.atoms {
            let _ = writeln!(out, "{theta:e} {:e} {:e}", w.re, w.im);
        }
        out.push_str("density\n");
        out.push_str(&self.density.to_text());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticityCheck {
    pub analytic: bool,
    pub max_residual: f64,
    pub depth: usize,
}

/// `∫|𝔓μ(r·)| dθ/2π` against `‖μ‖` at each radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FubiniRow {
    pub r: f64,
    pub mean: f64,
    pub total_variation: f64,
    pub points: usize,
}

impl FubiniRow {
    pub fn holds(&self, tol: f64) -> bool {
        self.mean <= self.total_variation * (1.0 + aliasing_excess(self.r, self.points)) + tol
    }
}

/// Relative excess `2r^M/(1 − r^M)` of the `M`-node trapezoid sum of the
/// Poisson kernel over its integral 1.
pub fn aliasing_excess(r: f64, m: usize) -> f64 {
    let q = r.powf(m as f64);
    2.0 * q / (1.0 - q)
}

pub fn fubini_bound(mu: &CircleMeasure, radii: &[f64], m: usize) -> Result<Vec<FubiniRow>> {
    let tv = mu.total_variation(m)?;
    radii
        .iter()
        .map(|&r| {
            Ok(FubiniRow {
                r,
                mean: circle::norm_l1(&mu.extension_samples(r, m)?),
                total_variation: tv,
                points: m,
            })
        })
        .collect()
}

/// `1 − 0.7·2^{−n}` for `n = 0, …, count − 1`.
pub fn default_radii(count: usize) -> Vec<f64> {
    (0..count).map(|n| 1.0 - 0.7 * 0.5f64.powi(n as i32)).collect()
}

/// One consecutive pair of radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemoStep {
    pub r: f64,
    pub rho: f64,
    pub increment: f64,
    /// `2 √(‖f_ϱ‖₁² − ‖f_r‖₁²)`; meaningful only for analytic measures.
    pub bound: f64,
    pub norm_rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveredCoefficient {
    pub k: i32,
    pub recovered: Complex64,
    pub exact: Complex64,
}

impl RecoveredCoefficient {
    pub fn error(&self) -> f64 {
        (self.recovered - self.exact).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmRieszReport {
    pub analyticity: AnalyticityCheck,
    /// Run as the non-analytic control.
    pub contrast: bool,
    pub total_variation: f64,
    /// Quadrature nodes per circle.
    pub points: usize,
    pub steps: Vec<DemoStep>,
    /// Empty in contrast mode.
    pub recovered: Vec<RecoveredCoefficient>,
}

impl FmRieszReport {
    pub fn max_coefficient_error(&self) -> f64 {
        self.recovered.iter().map(RecoveredCoefficient::error).fold(0.0, f64::max)
    }

    pub fn min_increment(&self) -> f64 {
        self.steps.iter().map(|s| s.increment).fold(f64::INFINITY, f64::min)
    }

    /// Every increment within its bound (analytic mode only).
    pub fn bounds_hold(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.increment <= s.bound + lemma::tolerance(s.increment, s.bound, lemma::LEMMA_TOL))
    }

    /// `∫|f_r|` never exceeds `‖μ‖`.
    pub fn fubini_holds(&self, tol: f64) -> bool {
        self.steps
            .iter()
            .all(|s| s.norm_rho <= self.total_variation * (1.0 + aliasing_excess(s.rho, self.points)) + tol)
    }
}

/// Samples `𝔓μ` on `radii`, measures consecutive increments, and for
/// analytic `μ` extrapolates the samples to the boundary and compares their
/// Fourier coefficients with `μ̂(k)` for `|k| ≤ depth`. Non-analytic measures,
/// or `force_contrast`, only report the increments.
pub fn fm_riesz_demo(
    mu: &CircleMeasure,
    radii: &[f64],
    m: usize,
    depth: usize,
    force_contrast: bool,
) -> Result<FmRieszReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("radii must be strictly increasing, at least two".into()));
    }
    if 2 * depth + 2 > m {
        return Err(Error::GridTooCoarse {
            points: m,
            degree: depth,
            required: 2 * depth + 2,
        });
    }
    let analyticity = mu.is_analytic(depth, ANALYTIC_TOL)?;
    let contrast = force_contrast || !analyticity.analytic;
    let samples = radii
        .iter()
        .map(|&r| mu.extension_samples(r, m))
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = samples.iter().map(circle::norm_l1).collect();
    let mut steps = Vec::with_capacity(radii.len() - 1);
    for i in 1..radii.len() {
        let increment = circle::norm_l1_diff(&samples[i - 1], &samples[i])?;
        let rep = LemmaReport::from_norms(radii[i - 1], radii[i], increment, norms[i - 1], norms[i]);
        steps.push(DemoStep {
            r: radii[i - 1],
            rho: radii[i],
            increment,
            bound: rep.rhs_main,
            norm_rho: norms[i],
        });
    }
    let mut recovered = Vec::new();
    if !contrast {
        let q = EXTRAPOLATION_POINTS.min(radii.len());
        let xs = &radii[radii.len() - q..];
        let tail = &samples[samples.len() - q..];
        let limit: Vec<Complex64> = (0..m)
            .map(|j| {
                let ys: Vec<Complex64> = tail.iter().map(|s| s.values[j]).collect();
                neville(xs, &ys, 1.0)
            })
            .collect();
        let boundary = DilatedSamples {
            grid: CircleGrid::new(1.0, m)?,
            values: limit,
        };
        let c = boundary.fourier_coefficients();
        for k in -(depth as i32)..=depth as i32 {
            let bin = k.rem_euclid(m as i32) as usize;
            recovered.push(RecoveredCoefficient {
                k,
                recovered: c[bin],
                exact: mu.fourier_coefficient(k),
            });
        }
    }
    Ok(FmRieszReport {
        analyticity,
        contrast,
        total_variation: mu.total_variation(m)?,
        points: m,
        steps,
        recovered,
    })
}

/// Value at `x` of the polynomial through `(xs, ys)`.
pub fn neville(xs: &[f64], ys: &[Complex64], x: f64) -> Complex64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (a, b) = (xs[i], xs[i + level]);
            p[i] = (p[i] * (b - x) + p[i + 1] * (x - a)) / (b - a);
        }
    }
    p.first().copied().unwrap_or(Complex64::new(0.0, 0.0))
}

/// How the coordinates of a polydisc point are generated (1-based `j`).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailRule {
    /// `z_j = c·q^j`
    Geometric { c: Complex64, q: f64 },
    /// `z_j = c·(j + shift)^{−a}`
    Power { c: Complex64, a: f64, shift: f64 },
    /// Listed coordinates, zero afterwards.
    Explicit(Vec<Complex64>),
    Zero,
}

/// Summability class of a tail rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Summability {
    L1,
    L2NotL1,
    OutsideL2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolydiscPoint {
    pub rule: TailRule,
}

impl PolydiscPoint {
    pub fn new(rule: TailRule) -> Result<Self> {
        let sup = match &rule {
            TailRule::Geometric { c, q } => {
                if !(q.abs() <= 1.0) {
                    return Err(Error::InvalidArgument(format!("ratio {q} exceeds 1 in modulus")));
                }
                c.norm() * q.abs()
            }
            TailRule::Power { c, a, shift } => {
                if !(*a >= 0.0 && *shift >= 0.0) {
                    return Err(Error::InvalidArgument("power rule needs a ≥ 0 and shift ≥ 0".into()));
                }
                c.norm() * (1.0 + shift).powf(-a)
            }
            TailRule::Explicit(zs) => zs.iter().map(|z| z.norm()).fold(0.0, f64::max),
            TailRule::Zero => 0.0,
        };
        if !(sup < 1.0) {
            return Err(Error::InvalidArgument("every coordinate must lie in the open disc".into()));
        }
        Ok(Self { rule })
    }

    pub fn coordinate(&self, j: usize) -> Complex64 {
        assert!(j >= 1, "coordinates are 1-based");
        match &self.rule {
            TailRule::Geometric { c, q } => c * q.powi(j as i32),
            TailRule::Power { c, a, shift } => c * (j as f64 + shift).powf(-a),
            TailRule::Explicit(zs) => zs.get(j - 1).copied().unwrap_or(Complex64::new(0.0, 0.0)),
            TailRule::Zero => Complex64::new(0.0, 0.0),
        }
    }

    pub fn coordinates(&self, depth: usize) -> Vec<Complex64> {
        (1..=depth).map(|j| self.coordinate(j)).collect()
    }

    /// Classification from the closed form of the rule.
    pub fn summability(&self) -> Summability {
        match &self.rule {
            TailRule::Power { c, a, .. } if c.norm() > 0.0 => {
                if *a > 1.0 {
                    Summability::L1
                } else if *a > 0.5 {
                    Summability::L2NotL1
                } else {
                    Summability::OutsideL2
                }
            }
            TailRule::Geometric { c, q } if c.norm() > 0.0 && q.abs() == 1.0 => Summability::OutsideL2,
            _ => Summability::L1,
        }
    }
}

/// `f_d(χ) = Π_{j≤d} P(χ_j, z_j)` for `d = 1, …, depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonChain {
    pub point: PolydiscPoint,
    pub z: Vec<Complex64>,
}

impl PoissonChain {
    pub fn depth(&self) -> usize {
        self.z.len()
    }

    /// `f_d(χ)`; `chi` needs at least `d` coordinates.
    pub fn evaluate(&self, d: usize, chi: &[Complex64]) -> f64 {
        self.z[..d].iter().zip(chi).map(|(&z, &c)| poisson_kernel(c, z)).product()
    }

    /// Largest `|∫ f_{d+1} dχ_{d+1} − f_d|` over `d < depth` and `points`
    /// random points, the inner integral on `m` nodes.
    pub fn chain_residual(&self, points: usize, seed: u64, m: usize) -> Result<f64> {
        let grid = CircleGrid::new(1.0, m)?;
        let stream = CounterRng::new(seed);
        let d_max = self.depth();
        let mut worst: f64 = 0.0;
        let mut chi = vec![Complex64::new(1.0, 0.0); d_max];
        for n in 0..points as u64 {
            for (j, c) in chi.iter_mut().enumerate() {
                *c = Complex64::from_polar(1.0, TAU * stream.uniform(n * d_max as u64 + j as u64));
            }
            for d in 0..d_max {
                let head = self.evaluate(d, &chi);
                let avg = circle::mean(grid.points().iter().map(|&w| poisson_kernel(w, self.z[d])));
                worst = worst.max((head * avg - head).abs());
            }
        }
        Ok(worst)
    }

    /// `∫ P(·, z_j)` on `m` nodes for every coordinate.
    pub fn masses(&self, m: usize) -> Result<Vec<f64>> {
        let grid = CircleGrid::new(1.0, m)?;
        Ok(self
            .z
            .iter()
            .map(|&z| circle::mean(grid.points().iter().map(|&w| poisson_kernel(w, z))))
            .collect())
    }
}

pub fn poisson_chain(point: &PolydiscPoint, depth: usize) -> Result<PoissonChain> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    Ok(PoissonChain {
        point: point.clone(),
        z: point.coordinates(depth),
    })
}

/// `‖P_w − 1‖_{L¹(T)}` on `m` nodes.
pub fn kernel_deviation_l1(w: Complex64, m: usize) -> Result<f64> {
    if w.norm() >= 1.0 {
        return Err(Error::OutsideDisc(w));
    }
    let grid = CircleGrid::new(1.0, m)?;
    Ok(circle::mean(grid.points().iter().map(|&c| (poisson_kernel(c, w) - 1.0).abs())))
}

/// `‖f_{d+1} − f_d‖₁`, which factors as `‖P_{z_{d+1}} − 1‖₁` because
/// `f_d ≥ 0` has unit mass and does not involve `χ_{d+1}`.
pub fn chain_increment_l1(point: &PolydiscPoint, d: usize, m: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    kernel_deviation_l1(point.coordinate(d + 1), m)
}

/// Direct Monte Carlo estimate of `‖f_{d+1} − f_d‖₁` on `T^{d+1}`.
pub fn chain_increment_mc(point: &PolydiscPoint, d: usize, samples: usize, seed: u64) -> Result<Estimate> {
    let chain = poisson_chain(point, d + 1)?;
    let sampler = TorusSampler::monte_carlo(d + 1, samples, seed)?;
    let (mut s1, mut s2) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
    sampler.for_each_point(&mut |chi| {
        let head = chain.evaluate(d, chi);
        let x = (head * poisson_kernel(chi[d], chain.z[d]) - head).abs();
        s1.push(x);
        s2.push(x * x);
    });
    let n = s1.len() as f64;
    let mean = circle::mean(s1);
    let second = circle::mean(s2);
    Ok(Estimate {
        value: mean,
        std_error: ((second - mean * mean).max(0.0) / (n - 1.0)).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColeGamelinReport {
    pub summability: Summability,
    pub l1_partial: Vec<f64>,
    pub l2_partial: Vec<f64>,
    /// `‖f_{d+1} − f_d‖₁` for `d = 1, …, depth − 1`.
    pub increments: Vec<f64>,
    /// `sup_χ f_d(χ) = Π_{j≤d} (1 + |z_j|)/(1 − |z_j|)`, attained at
    /// `χ_j = z_j/|z_j|` (at `χ = (1, 1, …)` for positive `z`).
    pub sup_products: Vec<f64>,
}

pub fn cole_gamelin_diagnostics(point: &PolydiscPoint, depth: usize, m: usize) -> Result<ColeGamelinReport> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let z = point.coordinates(depth);
    let mut l1 = Vec::with_capacity(depth);
    let mut l2 = Vec::with_capacity(depth);
    let mut sup = Vec::with_capacity(depth);
    let (mut a, mut b, mut log_p) = (0.0, 0.0, 0.0);
    for w in &z {
        let s = w.norm();
        a += s;
        b += s * s;
        log_p += (1.0 + s).ln() - (1.0 - s).ln();
        l1.push(a);
        l2.push(b.sqrt());
        sup.push(log_p.exp());
    }
    let increments = (1..depth)
        .map(|d| chain_increment_l1(point, d, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(ColeGamelinReport {
        summability: point.summability(),
        l1_partial: l1,
        l2_partial: l2,
        increments,
        sup_products: sup,
    })
}

/// One level `d` of the product-measure construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductLevel {
    pub d: usize,
    /// `‖f_d‖₁` on the torus.
    pub norm: Estimate,
    /// `‖f_d − f_{d−1}‖₁` (zero at `d = 1`).
    pub increment: Estimate,
    /// Slices where the adjusted disc bound failed.
    pub slice_violations: usize,
    pub slices: usize,
    /// Smallest slack of the adjusted bound over the slices.
    pub min_slack: f64,
}

/// Product measure `⊗ μ_j` with analytic densities `p_j` (each a polynomial
/// in the first variable), Haar measure in the remaining coordinates.
/// For `d = 1, …, factors.len()` builds `f_d(χ) = Π_{j≤d} p_j(χ_j) Π_{j>d} p_j(0)`,
/// checks the chain property exactly, and applies the adjusted disc bound
/// at `(r, ϱ)` to every slice `z ↦ f_d(χ_1 z, …, χ_d z)` on the points of
/// `chi_sampler`.
pub fn product_measure_demo(
    factors: &[TrigPoly],
    r: f64,
    rho: f64,
    sampler: &TorusSampler,
    chi_sampler: &TorusSampler,
    z_points: usize,
) -> Result<Vec<ProductLevel>> {
    for p in factors {
        if !p.is_analytic() || p.dimension() > 1 {
            return Err(Error::NotAnalytic);
        }
    }
    let depth = factors.len();
    let shifted: Vec<TrigPoly> = factors
        .iter()
        .enumerate()
        .map(|(j, p)| {
            TrigPoly::from_terms(p.terms().map(|(k, &a)| {
                let mut e = vec![0; j + 1];
                e[j] = k.get(1);
                (MultiIndex::new(e), a)
            }))
        })
        .collect();
    let constants: Vec<Complex64> = factors.iter().map(|p| p.coefficient(&MultiIndex::zero())).collect();
    let chain: Vec<TrigPoly> = (1..=depth)
        .map(|d| {
            let tail: Complex64 = constants[d..].iter().product();
            shifted[..d]
                .iter()
                .fold(TrigPoly::constant(tail), |acc, p| acc.mul(p))
        })
        .collect();
    polytorus::chain_reconstruct(&chain)?;
    let mut out = Vec::with_capacity(depth);
    let mut prev: Option<&TrigPoly> = None;
    for (i, f) in chain.iter().enumerate() {
        let d = i + 1;
        let norm = polytorus::norm_lp(f, 1.0, sampler)?;
        let increment = match prev {
            Some(g) => polytorus::norm_lp(&f.sub(g), 1.0, sampler)?,
            None => Estimate::exact(0.0),
        };
        let emb = polytorus::slice_embed(f, 0)?;
        let (mut violations, mut slices, mut min_slack) = (0usize, 0usize, f64::INFINITY);
        let mut failure = None;
        chi_sampler.for_each_point(&mut |chi| {
            if failure.is_some() {
                return;
            }
            let slice: AnalyticPoly = emb.at(chi);
            match lemma::check_adjusted_lemma(&slice, r, rho, z_points) {
                Ok(rep) => {
                    if !rep.holds_adjusted() {
                        violations += 1;
                    }
                    min_slack = min_slack.min(rep.slack_adjusted());
                    slices += 1;
                }
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        out.push(ProductLevel {
            d,
            norm,
            increment,
            slice_violations: violations,
            slices,
            min_slack,
        });
        prev = Some(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fourier_coefficient_examples() {
        let delta = CircleMeasure::point_mass(0.0).unwrap();
        for k in [-3, 0, 5] {
            assert_eq!(delta.fourier_coefficient(k), c(1.0));
        }
        let mu = CircleMeasure::from_coefficients(0, &[c(1.0), c(1.0)]).unwrap();
        assert_eq!(mu.fourier_coefficient(-1), c(0.0));
        assert_eq!(mu.fourier_coefficient(1), c(1.0));
        let mu = CircleMeasure::new(vec![(0.0, c(1.0)), (std::f64::consts::PI, c(1.0))], TrigPoly::zero()).unwrap();
        assert!(mu.fourier_coefficient(1).norm() < 1e-15);
    }

    #[test]
    fn analyticity_examples() {
        let mu = CircleMeasure::from_coefficients(0, &[c(1.0), c(1.0)]).unwrap();
        assert!(mu.is_analytic(DEFAULT_DEPTH, ANALYTIC_TOL).unwrap().analytic);
        let delta = CircleMeasure::point_mass(0.0).unwrap();
        let check = delta.is_analytic(DEFAULT_DEPTH, ANALYTIC_TOL).unwrap();
        assert!(!check.analytic && (check.max_residual - 1.0).abs() < 1e-15);
        assert!(delta.is_analytic(0, 1.0).is_err());

        // atoms w_j = (1 + e^{iθ_j})/N discretize the density 1 + χ; aliasing
        // makes μ̂(−k) nonzero only at k ≡ −1, 0 (mod N)
        let n = 16;
        let atoms = (0..n)
            .map(|j| {
                let theta = TAU * j as f64 / n as f64;
                (theta, (c(1.0) + Complex64::from_polar(1.0, theta)) / n as f64)
            })
            .collect();
        let mu = CircleMeasure::new(atoms, TrigPoly::zero()).unwrap();
        let check = mu.is_analytic(8, ANALYTIC_TOL).unwrap();
        assert!(check.analytic, "{check:?}");
        let check = mu.is_analytic(32, ANALYTIC_TOL).unwrap();
        assert!(!check.analytic && (check.max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_validation() {
        assert!(CircleMeasure::point_mass(TAU).is_err());
        assert!(CircleMeasure::new(vec![(1.0, c(1.0)), (1.0, c(2.0))], TrigPoly::zero()).is_err());
        let two = TrigPoly::from_terms([(MultiIndex::unit(2), c(1.0))]);
        assert!(CircleMeasure::from_density(two).is_err());
    }

    #[test]
    fn poisson_extension_examples() {
        let z = Complex64::new(0.3, -0.4);
        let arc = CircleMeasure::from_coefficients(0, &[c(1.0)]).unwrap();
        assert!((arc.poisson_extension(z).unwrap() - c(1.0)).norm() < 1e-15);
        let delta = CircleMeasure::point_mass(0.0).unwrap();
        assert_eq!(delta.poisson_extension(c(0.0)).unwrap(), c(1.0));
        let mu = CircleMeasure::from_coefficients(0, &[c(1.0), c(1.0)]).unwrap();
        assert!((mu.poisson_extension(z).unwrap() - (c(1.0) + z)).norm() < 1e-15);
        let mu = CircleMeasure::from_coefficients(-1, &[c(2.0), c(0.0), c(0.0)]).unwrap();
        assert!((mu.poisson_extension(z).unwrap() - 2.0 * z.conj()).norm() < 1e-15);
        assert!(matches!(delta.poisson_extension(c(1.0)), Err(Error::OutsideDisc(_))));
    }

    #[test]
    fn extension_matches_quadrature_of_kernel() {
        let mu = CircleMeasure::from_coefficients(-2, &[c(0.5), Complex64::new(0.0, 1.0), c(1.0), c(-0.3)]).unwrap();
        let z = Complex64::new(-0.2, 0.5);
        let grid = CircleGrid::new(1.0, 512).unwrap();
        let direct: Complex64 = grid
            .points()
            .iter()
            .map(|&w| mu.density().evaluate(&[w]) * poisson_kernel(w, z))
            .sum::<Complex64>()
            / 512.0;
        assert!((direct - mu.poisson_extension(z).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn text_roundtrip() {
        let mu = CircleMeasure::new(
            vec![(0.5, Complex64::new(1.0, -2.0))],
            TrigPoly::one_variable(1, -1, &[c(0.25), c(1.0), c(0.5)]),
        )
        .unwrap();
        assert_eq!(CircleMeasure::parse(&mu.to_text()).unwrap(), mu);
        let parsed = CircleMeasure::parse("atoms 1\n0 1 0\n").unwrap();
        assert_eq!(parsed, CircleMeasure::point_mass(0.0).unwrap());
        assert!(CircleMeasure::parse("atoms 2\n0 1 0\n").is_err());
        assert!(CircleMeasure::parse("0 1 0\n").is_err());
        assert!(CircleMeasure::parse("density\n1 2 : 1 0\n").is_err());
    }

    #[test]
    fn fubini_bound_holds() {
        let mu = CircleMeasure::new(
            vec![(1.0, c(0.5)), (4.0, Complex64::new(0.0, -0.25))],
            TrigPoly::one_variable(1, -2, &[c(0.3), c(-1.0), c(1.0), c(0.2)]),
        )
        .unwrap();
        for row in fubini_bound(&mu, &default_radii(7), 4096).unwrap() {
            assert!(row.holds(1e-9), "{row:?}");
        }
    }

    #[test]
    fn point_mass_trapezoid_sum_is_aliased_exactly() {
        let delta = CircleMeasure::point_mass(0.0).unwrap();
        for (r, m) in [(0.997, 4096), (0.9, 64), (0.5, 16)] {
            let mean = circle::norm_l1(&delta.extension_samples(r, m).unwrap());
            assert!((mean - 1.0 - aliasing_excess(r, m)).abs() < 1e-12, "{r} {m} {mean}");
        }
    }

    #[test]
    fn neville_is_exact_on_polynomials() {
        let xs = [0.1, 0.4, 0.7, 0.9];
        let ys: Vec<Complex64> = xs.iter().map(|&x| c(2.0 - x + 3.0 * x * x * x)).collect();
        assert!((neville(&xs, &ys, 1.0) - c(4.0)).norm() < 1e-12);
    }

    #[test]
    fn demo_examples() {
        let radii = default_radii(DEFAULT_RADII);
        let mu = CircleMeasure::from_coefficients(0, &[c(1.0), c(0.5)]).unwrap();
        let rep = fm_riesz_demo(&mu, &radii, 4096, DEFAULT_DEPTH, false).unwrap();
        assert!(!rep.contrast && rep.bounds_hold() && rep.fubini_holds(1e-9));
        assert!(rep.max_coefficient_error() < 1e-6, "{}", rep.max_coefficient_error());
        assert_eq!(rep.recovered.len(), 2 * DEFAULT_DEPTH + 1);
        assert!(rep.steps.windows(2).all(|w| w[1].increment < w[0].increment));

        let delta = CircleMeasure::point_mass(0.0).unwrap();
        let rep = fm_riesz_demo(&delta, &[0.3, 0.9], 4096, DEFAULT_DEPTH, false).unwrap();
        assert!(rep.contrast && rep.recovered.is_empty());
        assert!((rep.steps[0].increment - 1.228_382_822_586_287_6).abs() < 1e-5);

        let rep = fm_riesz_demo(&CircleMeasure::zero(), &radii, 256, 8, false).unwrap();
        assert!(rep.steps.iter().all(|s| s.increment == 0.0 && s.bound == 0.0));
        assert_eq!(rep.max_coefficient_error(), 0.0);
        assert_eq!(rep.total_variation, 0.0);

        assert!(fm_riesz_demo(&mu, &[0.5, 0.4], 64, 4, false).is_err());
        assert!(fm_riesz_demo(&mu, &radii, 64, 64, false).is_err());
    }

    #[test]
    fn tail_rules() {
        let geo = PolydiscPoint::new(TailRule::Geometric { c: c(1.0), q: 0.5 }).unwrap();
        assert_eq!(geo.coordinate(1), c(0.5));
        assert_eq!(geo.summability(), Summability::L1);
        let harm = PolydiscPoint::new(TailRule::Power { c: c(1.0), a: 1.0, shift: 1.0 }).unwrap();
        assert_eq!(harm.coordinate(3), c(0.25));
        assert_eq!(harm.summability(), Summability::L2NotL1);
        let root = PolydiscPoint::new(TailRule::Power { c: c(1.0), a: 0.5, shift: 1.0 }).unwrap();
        assert_eq!(root.summability(), Summability::OutsideL2);
        assert!(PolydiscPoint::new(TailRule::Power { c: c(1.0), a: 1.0, shift: 0.0 }).is_err());
        assert!(PolydiscPoint::new(TailRule::Explicit(vec![c(0.2), c(1.0)])).is_err());
        let e = PolydiscPoint::new(TailRule::Explicit(vec![c(0.5)])).unwrap();
        assert_eq!(e.coordinate(2), c(0.0));
    }

    #[test]
    fn chain_examples() {
        let zero = PolydiscPoint::new(TailRule::Zero).unwrap();
        let chain = poisson_chain(&zero, 4).unwrap();
        let chi = [Complex64::from_polar(1.0, 0.7); 4];
        assert_eq!(chain.evaluate(4, &chi), 1.0);

        let single = PolydiscPoint::new(TailRule::Explicit(vec![c(0.5)])).unwrap();
        let chain = poisson_chain(&single, 5).unwrap();
        for d in 1..=5 {
            assert!((chain.evaluate(d, &chi) - poisson_kernel(chi[0], c(0.5))).abs() < 1e-15);
        }

        let harm = PolydiscPoint::new(TailRule::Power { c: c(1.0), a: 1.0, shift: 1.0 }).unwrap();
        let chain = poisson_chain(&harm, 6).unwrap();
        assert!(chain.chain_residual(100, 7, 256).unwrap() <= 1e-10);
        for m in chain.masses(256).unwrap() {
            assert!((m - 1.0).abs() < 1e-12);
        }
        assert!(poisson_chain(&harm, 0).is_err());
    }

    #[test]
    fn increment_examples() {
        let z = |w: f64| PolydiscPoint::new(TailRule::Explicit(vec![c(0.1), c(w)])).unwrap();
        assert!(chain_increment_l1(&z(0.0), 1, 4096).unwrap().abs() < 1e-15);
        let v = chain_increment_l1(&z(0.5), 1, 4096).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-6, "{v}");
        let mc = chain_increment_mc(&z(0.5), 1, 1 << 16, 11).unwrap();
        assert!((mc.value - v).abs() < 3.0 * mc.std_error, "{mc:?} vs {v}");
        let v = chain_increment_l1(&z(0.99), 1, 4096).unwrap();
        assert!((v - 1.819_786_345_422_351_6).abs() < 1e-5 && v >= 1.5, "{v}");
    }

    #[test]
    fn cole_gamelin_examples() {
        let geo = PolydiscPoint::new(TailRule::Geometric { c: c(1.0), q: 0.5 }).unwrap();
        let rep = cole_gamelin_diagnostics(&geo, 40, 1024).unwrap();
        assert!(*rep.sup_products.last().unwrap() < 10.0);
        assert!((rep.l1_partial.last().unwrap() - 1.0).abs() < 1e-9);

        let harm = PolydiscPoint::new(TailRule::Power { c: c(1.0), a: 1.0, shift: 1.0 }).unwrap();
        let rep = cole_gamelin_diagnostics(&harm, 64, 1024).unwrap();
        assert_eq!(rep.summability, Summability::L2NotL1);
        // Π_{j≤n} (1 + 1/(j+1))/(1 − 1/(j+1)) = (n+1)(n+2)/2
        let n = 64.0;
        assert!((rep.sup_products[63] / ((n + 1.0) * (n + 2.0) / 2.0) - 1.0).abs() < 1e-12);
        assert_eq!(rep.increments.len(), 63);
    }

    #[test]
    fn product_measure_levels() {
        let factors: Vec<TrigPoly> = (0..3)
            .map(|j| TrigPoly::one_variable(1, 0, &[c(1.0), c(0.5 / (j + 1) as f64)]))
            .collect();
        let sampler = TorusSampler::tensor(3, 64).unwrap();
        let chi = TorusSampler::monte_carlo(3, 64, 1).unwrap();
        let levels = product_measure_demo(&factors, 0.3, 0.9, &sampler, &chi, 64).unwrap();
        assert_eq!(levels.len(), 3);
        for l in &levels {
            assert_eq!(l.slice_violations, 0);
            assert!(l.min_slack > 0.0);
        }
        assert_eq!(levels[0].increment.value, 0.0);
        assert!(levels[2].increment.value < levels[1].increment.value);
        let bad = [TrigPoly::one_variable(1, -1, &[c(1.0)])];
        assert!(product_measure_demo(&bad, 0.3, 0.9, &sampler, &chi, 64).is_err());
    }
}
