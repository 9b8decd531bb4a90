//! Trigonometric polynomials on the infinite torus and die Abschnitte.
//!
//! A polynomial `T(χ) = Σ a_κ χ^κ` is stored as a sparse map from canonical
//! multi-indices to coefficients; all algebra on it is exact. Only norms are
//! approximate: they integrate against Haar measure on the first `d`
//! coordinates either on a tensor grid (staged evaluation, last axis
//! streamed) or by Monte Carlo with a reported standard error.
//!
//! On a tensor grid with more than `max|κ_j|` nodes per axis, averaging over
//! the trailing axes reproduces `A_d T` exactly at the grid nodes, so the
//! discrete norms inherit `‖A_d T‖_p ≤ ‖T‖_p` up to rounding.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::circle::{self, unit_roots, AnalyticPoly, CircleGrid, DilatedSamples};
use crate::error::{Error, Result};
use crate::rng::{self, CounterRng};

/// Tensor-grid integration is offered up to this many variables.
pub const MAX_TENSOR_DIM: usize = 3;
pub const DEFAULT_AXIS_POINTS: usize = 256;
pub const DEFAULT_MC_SAMPLES: usize = 1 << 20;
/// Absolute and relative slack of exact-in-principle comparisons.
pub const GRID_TOL: f64 = 1e-8;
/// Standard errors added to Monte Carlo tolerances.
pub const MC_SIGMAS: f64 = 3.0;
const BLOCK: usize = 64;

/// A compactly supported integer sequence, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<i32>);

impl MultiIndex {
    pub fn new(entries: impl Into<Vec<i32>>) -> Self {
        let mut v = entries.into();
        while v.last() == Some(&0) {
            v.pop();
        }
        Self(v)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    /// `e_j` for a 1-based coordinate `j`.
    pub fn unit(j: usize) -> Self {
        assert!(j >= 1, "coordinates are 1-based");
        let mut v = vec![0; j];
        v[j - 1] = 1;
        Self(v)
    }

    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    /// Entry at 1-based coordinate `j` (zero past the support).
    pub fn get(&self, j: usize) -> i32 {
        self.0.get(j.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// Largest coordinate with a nonzero entry.
    pub fn support(&self) -> usize {
        self.0.len()
    }

    pub fn is_analytic(&self) -> bool {
        self.0.iter().all(|&k| k >= 0)
    }

    /// Sum of the entries past coordinate `d`.
    pub fn degree_beyond(&self, d: usize) -> i64 {
        self.0.iter().skip(d).map(|&k| k as i64).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self::new((1..=n).map(|j| self.get(j) + other.get(j)).collect::<Vec<_>>())
    }

    /// `χ^κ` at a point given by its first coordinates.
    pub fn character(&self, chi: &[Complex64]) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for (j, &k) in self.0.iter().enumerate() {
            if k != 0 {
                v *= chi[j].powi(k);
            }
        }
        v
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// A finite sum `Σ a_κ χ^κ` with no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_terms([(MultiIndex::zero(), c)])
    }

    /// Sums repeated indices and drops zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = (MultiIndex, Complex64)>) -> Self {
        let mut out = Self::zero();
        for (k, a) in terms {
            out.add_term(k, a);
        }
        out
    }

    /// A polynomial in `χ_j` alone with coefficients indexed from `lowest`.
    pub fn one_variable(j: usize, lowest: i32, coeffs: &[Complex64]) -> Self {
        let mut k = vec![0; j];
        Self::from_terms(coeffs.iter().enumerate().map(|(n, &a)| {
            k[j - 1] = lowest + n as i32;
            (MultiIndex::new(k.clone()), a)
        }))
    }

    pub fn add_term(&mut self, k: MultiIndex, a: Complex64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(k) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += a;
                if e.get().norm_sqr() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if a.norm_sqr() != 0.0 {
                    e.insert(a);
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, k: &MultiIndex) -> Complex64 {
        self.terms.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn dimension(&self) -> usize {
        self.terms.keys().map(MultiIndex::support).max().unwrap_or(0)
    }

    pub fn is_analytic(&self) -> bool {
        self.terms.keys().all(MultiIndex::is_analytic)
    }

    /// `max |κ_j|` over all terms and coordinates.
    pub fn max_abs_exponent(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|k| k.entries().iter().map(|e| e.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, &a) in &other.terms {
            out.add_term(k.clone(), a);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, &a)| (k.clone(), a * c)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (k, &a) in &self.terms {
            for (l, &b) in &other.terms {
                out.add_term(k.add(l), a * b);
            }
        }
        out
    }

    /// Value at a point; `chi` must cover the dimension.
    pub fn evaluate(&self, chi: &[Complex64]) -> Complex64 {
        assert!(chi.len() >= self.dimension(), "point has too few coordinates");
        self.terms.iter().map(|(k, &a)| a * k.character(chi)).sum()
    }

    /// Parses `κ_1 κ_2 … : re im` lines; `#` comments and blank lines are
    /// skipped, and an empty index is the constant term.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::zero();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, a) = parse_term(line, i + 1)?;
            out.add_term(k, a);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, a) in &self.terms {
            let _ = writeln!(out, "{k} : {:e} {:e}", a.re, a.im);
        }
        out
    }
}

pub(crate) fn parse_term(line: &str, n: usize) -> Result<(MultiIndex, Complex64)> {
    let (lhs, rhs) = line.split_once(':').ok_or_else(|| Error::Parse {
        line: n,
        message: "expected `κ_1 … κ_k : re im`".into(),
    })?;
    let k = lhs
        .split_whitespace()
        .map(|s| {
            s.parse::<i32>().map_err(|e| Error::Parse {
                line: n,
                message: format!("bad exponent `{s}`: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((MultiIndex::new(k), circle::parse_complex(rhs.trim(), n)?))
}

/// `A_d T`: keeps the terms supported on the first `d` coordinates.
pub fn abschnitt(t: &TrigPoly, d: usize) -> TrigPoly {
    TrigPoly {
        terms: t
            .terms
            .iter()
            .filter(|(k, _)| k.support() <= d)
            .map(|(k, &a)| (k.clone(), a))
            .collect(),
    }
}

/// `P(χ_1, …, χ_d, 0, 0, …)` expanded term by term.
pub fn abschnitt_substitution(p: &TrigPoly, d: usize) -> Result<TrigPoly> {
    if !p.is_analytic() {
        return Err(Error::NotAnalytic);
    }
    let mut out = TrigPoly::zero();
    for (k, &a) in &p.terms {
        let mut coeff = a;
        let mut kept = Vec::with_capacity(d.min(k.support()));
        for (j, &e) in k.entries().iter().enumerate() {
            if j < d {
                kept.push(e);
            } else {
                coeff *= Complex64::new(0.0, 0.0).powi(e);
            }
        }
        out.add_term(MultiIndex::new(kept), coeff);
    }
    Ok(out)
}

/// An integral with its Monte Carlo standard error (zero on a grid).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TensorGrid { points: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

/// Integration against Haar measure on the first `d` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusSampler {
    pub d: usize,
    pub scheme: Scheme,
}

impl TorusSampler {
    pub fn tensor(d: usize, points: usize) -> Result<Self> {
        if d > MAX_TENSOR_DIM {
            return Err(Error::InvalidArgument(format!(
                "tensor grids are limited to {MAX_TENSOR_DIM} variables"
            )));
        }
        if points == 0 || points % 2 != 0 {
            return Err(Error::InvalidGridSize(points));
        }
        Ok(Self {
            d,
            scheme: Scheme::TensorGrid { points },
        })
    }

    pub fn monte_carlo(d: usize, samples: usize, seed: u64) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidArgument("at least two samples are needed".into()));
        }
        Ok(Self {
            d,
            scheme: Scheme::MonteCarlo { samples, seed },
        })
    }

    /// Tensor grid up to [`MAX_TENSOR_DIM`] variables, Monte Carlo beyond.
    pub fn auto(d: usize, points: usize, samples: usize, seed: u64) -> Result<Self> {
        if d <= MAX_TENSOR_DIM {
            Self::tensor(d, points)
        } else {
            Self::monte_carlo(d, samples, seed)
        }
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.scheme, Scheme::MonteCarlo { .. })
    }

    fn check(&self, polys: &[&TrigPoly]) -> Result<()> {
        let required = polys.iter().map(|t| t.dimension()).max().unwrap_or(0);
        if required > self.d {
            return Err(Error::SamplerTooSmall {
                available: self.d,
                required,
            });
        }
        if let Scheme::TensorGrid { points } = self.scheme {
            let e = polys.iter().map(|t| t.max_abs_exponent()).max().unwrap_or(0) as usize;
            if points <= 2 * e {
                return Err(Error::GridTooCoarse {
                    points,
                    degree: e,
                    required: 2 * e + 2,
                });
            }
        }
        Ok(())
    }

    /// Calls `visit` with batches of values of `t` at the sample points, in a
    /// fixed order. Tensor grids only integrate over the variables `t` uses.
    fn for_each_value(&self, t: &TrigPoly, visit: &mut dyn FnMut(&[Complex64])) {
        match self.scheme {
            Scheme::TensorGrid { points } => grid_values(t, t.dimension(), points, visit),
            Scheme::MonteCarlo { samples, seed } => {
                let d = t.dimension();
                let axes: Vec<CounterRng> = (0..d).map(|j| axis_stream(seed, j)).collect();
                let mut chi = vec![Complex64::new(1.0, 0.0); d];
                let mut batch = Vec::with_capacity(4096);
                for n in 0..samples as u64 {
                    for (j, a) in axes.iter().enumerate() {
                        chi[j] = Complex64::from_polar(1.0, std::f64::consts::TAU * a.uniform(n));
                    }
                    batch.push(t.evaluate(&chi));
                    if batch.len() == batch.capacity() {
                        visit(&batch);
                        batch.clear();
                    }
                }
                visit(&batch);
            }
        }
    }

    /// Means of `|t|^p` for every exponent, sharing one pass.
    fn power_means(&self, t: &TrigPoly, exponents: &[f64]) -> Vec<Estimate> {
        let k = exponents.len();
        let second = self.is_monte_carlo();
        let mut sums = vec![Neumaier::default(); 2 * k];
        let mut n = 0usize;
        let mut moduli = Vec::new();
        self.for_each_value(t, &mut |vals| {
            n += vals.len();
            moduli.clear();
            moduli.extend(vals.iter().map(|v| (v.re * v.re + v.im * v.im).sqrt()));
            for (i, &p) in exponents.iter().enumerate() {
                // short plain blocks, compensated across blocks
                for block in moduli.chunks(BLOCK) {
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for &m in block {
                        let x = power(m, p);
                        s1 += x;
                        if second {
                            s2 += x * x;
                        }
                    }
                    sums[2 * i].add(s1);
                    sums[2 * i + 1].add(s2);
                }
            }
        });
        let n = n.max(1) as f64;
        (0..k)
            .map(|i| {
                let mean = sums[2 * i].total() / n;
                let std_error = if second {
                    let m2 = sums[2 * i + 1].total() / n;
                    ((m2 - mean * mean).max(0.0) / (n - 1.0).max(1.0)).sqrt()
                } else {
                    0.0
                };
                Estimate {
                    value: mean,
                    std_error,
                }
            })
            .collect()
    }

    /// L¹ means of `big` and `big − small` in one pass, where `small` uses
    /// no more variables than `big`.
    fn pair_means(&self, big: &TrigPoly, small: &TrigPoly) -> [Estimate; 2] {
        let mut sums = [Neumaier::default(); 4];
        let mut n = 0usize;
        let fold = |pairs: &mut dyn Iterator<Item = (Complex64, Complex64)>, sums: &mut [Neumaier; 4]| {
            let mut block = [0.0; 4];
            let mut k = 0;
            for (a, b) in pairs {
                let d = a - b;
                let x = (a.re * a.re + a.im * a.im).sqrt();
                let y = (d.re * d.re + d.im * d.im).sqrt();
                block[0] += x;
                block[1] += x * x;
                block[2] += y;
                block[3] += y * y;
                k += 1;
                if k == BLOCK {
                    for (s, b) in sums.iter_mut().zip(&mut block) {
                        s.add(std::mem::take(b));
                    }
                    k = 0;
                }
            }
            for (s, b) in sums.iter_mut().zip(block) {
                s.add(b);
            }
        };
        match self.scheme {
            Scheme::TensorGrid { points } => {
                let ds = small.dimension();
                let mut table = Vec::with_capacity(points.pow(ds as u32));
                grid_values(small, ds, points, &mut |v| table.extend_from_slice(v));
                let period = table.len();
                grid_values(big, big.dimension(), points, &mut |vals| {
                    let start = n;
                    fold(
                        &mut vals.iter().enumerate().map(|(i, &a)| (a, table[(start + i) % period])),
                        &mut sums,
                    );
                    n += vals.len();
                });
            }
            Scheme::MonteCarlo { .. } => {
                let mut batch = Vec::with_capacity(4096);
                self.for_each_point(&mut |chi| {
                    batch.push((big.evaluate(chi), small.evaluate(chi)));
                    if batch.len() == batch.capacity() {
                        fold(&mut batch.drain(..), &mut sums);
                    }
                    n += 1;
                });
                fold(&mut batch.drain(..), &mut sums);
            }
        }
        let nf = n.max(1) as f64;
        let est = |i: usize| {
            let mean = sums[i].total() / nf;
            let std_error = if self.is_monte_carlo() {
                ((sums[i + 1].total() / nf - mean * mean).max(0.0) / (nf - 1.0).max(1.0)).sqrt()
            } else {
                0.0
            };
            Estimate { value: mean, std_error }
        };
        [est(0), est(2)]
    }

    /// Sample points with weights, for integrands that are not polynomials.
    pub fn for_each_point(&self, visit: &mut dyn FnMut(&[Complex64])) {
        match self.scheme {
            Scheme::TensorGrid { points } => {
                let roots = unit_roots(points);
                let total = points.pow(self.d as u32);
                let mut chi = vec![Complex64::new(1.0, 0.0); self.d];
                for mut idx in 0..total {
                    for c in chi.iter_mut() {
                        *c = roots[idx % points];
                        idx /= points;
                    }
                    visit(&chi);
                }
            }
            Scheme::MonteCarlo { samples, seed } => {
                let axes: Vec<CounterRng> = (0..self.d).map(|j| axis_stream(seed, j)).collect();
                let mut chi = vec![Complex64::new(1.0, 0.0); self.d];
                for n in 0..samples as u64 {
                    for (j, a) in axes.iter().enumerate() {
                        chi[j] = Complex64::from_polar(1.0, std::f64::consts::TAU * a.uniform(n));
                    }
                    visit(&chi);
                }
            }
        }
    }
}

fn axis_stream(seed: u64, axis: usize) -> CounterRng {
    CounterRng::new(rng::instance_seed(seed, axis as u64))
}

#[inline]
fn power(m: f64, p: f64) -> f64 {
    if p == 1.0 {
        m
    } else if p == 2.0 {
        m * m
    } else {
        m.powf(p)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Values of `t` on the `m^d` grid, axis 1 fastest, streamed in chunks of
/// `m^{d−1}` along the last axis.
fn grid_values(t: &TrigPoly, d: usize, m: usize, visit: &mut dyn FnMut(&[Complex64])) {
    if d == 0 {
        visit(&[t.coefficient(&MultiIndex::zero())]);
        return;
    }
    let roots = unit_roots(m);
    let phase = |k: i32, j: usize| roots[(k as i64 * j as i64).rem_euclid(m as i64) as usize];
    // stage s: key = exponents of axes s+1..d, value = partial sums on m^s nodes
    let mut stage: BTreeMap<Vec<i32>, Vec<Complex64>> = BTreeMap::new();
    let mut first: BTreeMap<Vec<i32>, Vec<(i32, Complex64)>> = BTreeMap::new();
    for (k, &a) in &t.terms {
        let tail: Vec<i32> = (2..=d).map(|j| k.get(j)).collect();
        first.entry(tail).or_default().push((k.get(1), a));
    }
    for (tail, terms) in first {
        let v = (0..m).map(|j| terms.iter().map(|&(k, a)| a * phase(k, j)).sum()).collect();
        stage.insert(tail, v);
    }
    for s in 2..d {
        let mut next: BTreeMap<Vec<i32>, Vec<(i32, Vec<Complex64>)>> = BTreeMap::new();
        for (key, v) in stage {
            next.entry(key[1..].to_vec()).or_default().push((key[0], v));
        }
        stage = BTreeMap::new();
        let block = m.pow(s as u32 - 1);
        for (tail, parts) in next {
            let mut out = vec![Complex64::new(0.0, 0.0); block * m];
            for j in 0..m {
                let dst = &mut out[j * block..(j + 1) * block];
                for (k, v) in &parts {
                    let w = phase(*k, j);
                    for (o, x) in dst.iter_mut().zip(v) {
                        *o += x * w;
                    }
                }
            }
            stage.insert(tail, out);
        }
    }
    let block = if d == 1 { 1 } else { m.pow(d as u32 - 1) };
    if d == 1 {
        visit(&stage.into_values().next().unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); m]));
        return;
    }
    let parts: Vec<(i32, Vec<Complex64>)> = stage.into_iter().map(|(k, v)| (k[0], v)).collect();
    let mut chunk = vec![Complex64::new(0.0, 0.0); block];
    for j in 0..m {
        chunk.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (k, v) in &parts {
            let w = phase(*k, j);
            for (o, x) in chunk.iter_mut().zip(v) {
                *o += x * w;
            }
        }
        visit(&chunk);
    }
}

/// `(∫|T|^p dm)^{1/p}` with the standard error propagated to the norm.
pub fn norm_lp(t: &TrigPoly, p: f64, sampler: &TorusSampler) -> Result<Estimate> {
    Ok(norms_lp(t, &[p], sampler)?[0])
}

/// [`norm_lp`] for several exponents in one pass.
pub fn norms_lp(t: &TrigPoly, exponents: &[f64], sampler: &TorusSampler) -> Result<Vec<Estimate>> {
    for &p in exponents {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponent p = {p} must be at least 1")));
        }
    }
    sampler.check(&[t])?;
    let means = sampler.power_means(t, exponents);
    Ok(exponents
        .iter()
        .zip(means)
        .map(|(&p, m)| {
            let value = m.value.powf(1.0 / p);
            let std_error = if m.value > 0.0 {
                m.std_error * value / (p * m.value)
            } else {
                m.std_error
            };
            Estimate { value, std_error }
        })
        .collect())
}

/// `(‖A_1 T‖_p, …, ‖A_D T‖_p)` with `D = max(dimension, 1)`; the last entry
/// is `‖T‖_p`.
pub fn check_abschnitt_monotone(t: &TrigPoly, p: f64, sampler: &TorusSampler) -> Result<Vec<Estimate>> {
    Ok(abschnitt_profile(t, &[p], sampler)?.into_iter().map(|row| row[0]).collect())
}

/// [`check_abschnitt_monotone`] for several exponents; row `d − 1` holds
/// `‖A_d T‖_p` for every `p`.
pub fn abschnitt_profile(t: &TrigPoly, exponents: &[f64], sampler: &TorusSampler) -> Result<Vec<Vec<Estimate>>> {
    sampler.check(&[t])?;
    (1..=t.dimension().max(1))
        .map(|d| norms_lp(&abschnitt(t, d), exponents, sampler))
        .collect()
}

/// True when `values` is nondecreasing within `tol` absolute and relative,
/// widened by [`MC_SIGMAS`] standard errors.
pub fn is_nondecreasing(values: &[Estimate], tol: f64) -> bool {
    values.windows(2).all(|w| {
        let slack = tol + tol * w[1].value.abs() + MC_SIGMAS * (w[0].std_error + w[1].std_error);
        w[1].value >= w[0].value - slack
    })
}

/// `‖T − A_d T‖_p` for `d = 1, …, max(dimension, 1)`.
pub fn check_lp_density_convergence(t: &TrigPoly, p: f64, sampler: &TorusSampler) -> Result<Vec<Estimate>> {
    sampler.check(&[t])?;
    (1..=t.dimension().max(1))
        .map(|d| norm_lp(&t.sub(&abschnitt(t, d)), p, sampler))
        .collect()
}

/// Average of `t` over the coordinates `d+1..=t.dimension()` on an `m`-point
/// grid per axis, at a point fixing the first `d` coordinates.
pub fn partial_mean(t: &TrigPoly, head: &[Complex64], m: usize) -> Result<Complex64> {
    let d = head.len();
    let dim = t.dimension().max(d);
    let rest = dim - d;
    if m == 0 || m <= t.max_abs_exponent() as usize {
        return Err(Error::GridTooCoarse {
            points: m,
            degree: t.max_abs_exponent() as usize,
            required: t.max_abs_exponent() as usize + 1,
        });
    }
    let roots = unit_roots(m);
    let mut chi = head.to_vec();
    chi.resize(dim, Complex64::new(1.0, 0.0));
    let total = m.pow(rest as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    for mut idx in 0..total {
        for c in chi[d..].iter_mut() {
            *c = roots[idx % m];
            idx /= m;
        }
        acc += t.evaluate(&chi);
    }
    Ok(acc / total as f64)
}

/// `F(χ, z) = P(χ_1, …, χ_{d1}, χ_{d1+1} z, …)`, stored as the polynomials
/// `c_n(χ)` multiplying `z^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceEmbedding {
    pub d1: usize,
    pub coefficients: Vec<TrigPoly>,
}

impl SliceEmbedding {
    /// The one-variable polynomial `z ↦ F(χ, z)`.
    pub fn at(&self, chi: &[Complex64]) -> AnalyticPoly {
        AnalyticPoly::new(self.coefficients.iter().map(|c| c.evaluate(chi)).collect::<Vec<_>>())
    }

    pub fn evaluate(&self, chi: &[Complex64], z: Complex64) -> Complex64 {
        self.at(chi).evaluate(z)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }
}

pub fn slice_embed(p: &TrigPoly, d1: usize) -> Result<SliceEmbedding> {
    if !p.is_analytic() {
        return Err(Error::NotAnalytic);
    }
    let mut coefficients: Vec<TrigPoly> = Vec::new();
    for (k, &a) in &p.terms {
        let n = k.degree_beyond(d1) as usize;
        if coefficients.len() <= n {
            coefficients.resize(n + 1, TrigPoly::zero());
        }
        coefficients[n].add_term(k.clone(), a);
    }
    if coefficients.is_empty() {
        coefficients.push(TrigPoly::zero());
    }
    Ok(SliceEmbedding { d1, coefficients })
}

/// Both sides of the Abschnitt inequality
/// `‖A_{d1}f − A_{d2}f‖₁ ≤ 2√2 √‖A_{d2}f‖₁ √(‖A_{d2}f‖₁ − ‖A_{d1}f‖₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbschnittBound {
    pub lhs: Estimate,
    pub norm_d1: Estimate,
    pub norm_d2: Estimate,
    pub rhs: f64,
    /// Standard error of `rhs − lhs` by finite differences.
    pub std_error: f64,
}

impl AbschnittBound {
    fn new(lhs: Estimate, norm_d1: Estimate, norm_d2: Estimate) -> Self {
        let rhs = adjusted_rhs(norm_d1.value, norm_d2.value);
        let rhs_se = (adjusted_rhs(norm_d1.value - norm_d1.std_error, norm_d2.value + norm_d2.std_error) - rhs).abs();
        Self {
            lhs,
            norm_d1,
            norm_d2,
            rhs,
            std_error: (lhs.std_error.powi(2) + rhs_se.powi(2)).sqrt(),
        }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs.value
    }

    pub fn tolerance(&self) -> f64 {
        GRID_TOL + GRID_TOL * self.lhs.value.max(self.rhs) + MC_SIGMAS * self.std_error
    }

    pub fn holds(&self) -> bool {
        self.slack() >= -self.tolerance()
    }
}

fn adjusted_rhs(a: f64, b: f64) -> f64 {
    2.0 * 2f64.sqrt() * b.max(0.0).sqrt() * (b - a).max(0.0).sqrt()
}

/// The same inequality assembled from one-variable slices: per `χ`, the disc
/// bound at `r = 0`, `ϱ = 1`, then integrated over `χ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceRoute {
    pub bound: AbschnittBound,
    /// Mean over `χ` of the per-slice right-hand sides.
    pub pointwise_rhs: f64,
    /// Slices where the disc bound failed.
    pub slice_violations: usize,
    pub slices: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H1AbschnittReport {
    pub d1: usize,
    pub d2: usize,
    pub direct: AbschnittBound,
    pub slice: Option<SliceRoute>,
}

impl H1AbschnittReport {
    pub fn holds(&self) -> bool {
        self.direct.holds() && self.slice.is_none_or(|s| s.bound.holds() && s.slice_violations == 0)
    }

    /// Both routes find the same side larger (ties within tolerance count as
    /// either).
    pub fn routes_agree(&self) -> bool {
        match self.slice {
            None => true,
            Some(s) => {
                let side = |b: &AbschnittBound| {
                    if b.slack().abs() <= b.tolerance() {
                        0
                    } else {
                        b.slack().signum() as i32
                    }
                };
                let (a, b) = (side(&self.direct), side(&s.bound));
                a == b || a == 0 || b == 0
            }
        }
    }
}

/// Direct route: norms of the two projections and their difference.
pub fn check_h1_abschnitt_lemma(p: &TrigPoly, d1: usize, d2: usize, sampler: &TorusSampler) -> Result<H1AbschnittReport> {
    if !p.is_analytic() {
        return Err(Error::NotAnalytic);
    }
    if d1 > d2 {
        return Err(Error::InvalidArgument(format!("d1 = {d1} exceeds d2 = {d2}")));
    }
    let f1 = abschnitt(p, d1);
    let f2 = abschnitt(p, d2);
    sampler.check(&[&f2])?;
    let [n2, lhs] = sampler.pair_means(&f2, &f1);
    let n1 = norm_lp(&f1, 1.0, sampler)?;
    Ok(H1AbschnittReport {
        d1,
        d2,
        direct: AbschnittBound::new(lhs, n1, n2),
        slice: None,
    })
}

/// Runs the direct route and the slice route; the slice route takes `χ`
/// from `chi_sampler` and integrates `z` on `z_points` nodes.
pub fn check_h1_abschnitt_both(
    p: &TrigPoly,
    d1: usize,
    d2: usize,
    sampler: &TorusSampler,
    chi_sampler: &TorusSampler,
    z_points: usize,
) -> Result<H1AbschnittReport> {
    let mut report = check_h1_abschnitt_lemma(p, d1, d2, sampler)?;
    report.slice = Some(slice_route(p, d1, d2, chi_sampler, z_points)?);
    Ok(report)
}

pub fn slice_route(p: &TrigPoly, d1: usize, d2: usize, chi_sampler: &TorusSampler, z_points: usize) -> Result<SliceRoute> {
    let f2 = abschnitt(p, d2);
    chi_sampler.check(&[&f2])?;
    let emb = slice_embed(&f2, d1)?;
    let grid = CircleGrid::new(1.0, z_points)?;
    if z_points < circle::min_points(emb.degree()) {
        return Err(Error::GridTooCoarse {
            points: z_points,
            degree: emb.degree(),
            required: circle::min_points(emb.degree()),
        });
    }
    let mc = chi_sampler.is_monte_carlo();
    let mut acc = [Neumaier::default(); 7];
    let (mut n, mut violations) = (0usize, 0usize);
    let mut failed = None;
    chi_sampler.for_each_point(&mut |chi| {
        if failed.is_some() {
            return;
        }
        let f = emb.at(chi);
        let ones = DilatedSamples::from_fn(grid.clone(), |z| f.evaluate(z));
        let a = f.coeffs()[0].norm();
        let b = circle::norm_l1(&ones);
        let c = match circle::mean(ones.values.iter().map(|v| (v - f.coeffs()[0]).norm())) {
            x if x.is_finite() => x,
            _ => {
                failed = Some(Error::ZeroPolynomial);
                return;
            }
        };
        let bound = adjusted_rhs(a, b);
        if c - bound > crate::lemma::tolerance(c, bound, GRID_TOL) {
            violations += 1;
        }
        for (i, x) in [a, b, c, bound].into_iter().enumerate() {
            acc[i].add(x);
        }
        acc[4].add(a * a);
        acc[5].add(b * b);
        acc[6].add(c * c);
        n += 1;
    });
    if let Some(e) = failed {
        return Err(e);
    }
    let nf = n.max(1) as f64;
    let est = |i: usize, sq: usize| {
        let mean = acc[i].total() / nf;
        let std_error = if mc {
            ((acc[sq].total() / nf - mean * mean).max(0.0) / (nf - 1.0).max(1.0)).sqrt()
        } else {
            0.0
        };
        Estimate { value: mean, std_error }
    };
    Ok(SliceRoute {
        bound: AbschnittBound::new(est(2, 6), est(0, 4), est(1, 5)),
        pointwise_rhs: acc[3].total() / nf,
        slice_violations: violations,
        slices: n,
    })
}

/// Checks `A_d f_{d+1} = f_d` coefficient-exactly and returns `f_D`.
pub fn chain_reconstruct(chain: &[TrigPoly]) -> Result<TrigPoly> {
    for (i, f) in chain.iter().enumerate() {
        if f.dimension() > i + 1 {
            return Err(Error::InvalidArgument(format!(
                "f_{} depends on {} variables",
                i + 1,
                f.dimension()
            )));
        }
    }
    for d in 1..chain.len() {
        if abschnitt(&chain[d], d) != chain[d - 1] {
            return Err(Error::ChainViolated(d));
        }
    }
    Ok(chain.last().cloned().unwrap_or_default())
}

/// `‖f_{d+1} − f_d‖₁` against the Abschnitt bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainIncrement {
    pub d: usize,
    pub bound: AbschnittBound,
}

/// Cauchy increments of a chain that passed [`chain_reconstruct`].
pub fn chain_increments(chain: &[TrigPoly], sampler: &TorusSampler) -> Result<Vec<ChainIncrement>> {
    chain_reconstruct(chain)?;
    let norms = chain
        .iter()
        .map(|f| norm_lp(f, 1.0, sampler))
        .collect::<Result<Vec<_>>>()?;
    (1..chain.len())
        .map(|d| {
            let lhs = norm_lp(&chain[d].sub(&chain[d - 1]), 1.0, sampler)?;
            Ok(ChainIncrement {
                d,
                bound: AbschnittBound::new(lhs, norms[d - 1], norms[d]),
            })
        })
        .collect()
}

/// The chain `A_1 P, …, A_D P`.
pub fn abschnitt_chain(p: &TrigPoly, depth: usize) -> Vec<TrigPoly> {
    (1..=depth).map(|d| abschnitt(p, d)).collect()
}

/// A random polynomial in `dims` variables: `terms` draws of exponents in
/// `lo..=hi` per axis with complex Gaussian coefficients.
pub fn random_trig_poly<R: Rng>(rng: &mut R, dims: usize, lo: i32, hi: i32, terms: usize) -> TrigPoly {
    let mut out = TrigPoly::zero();
    for _ in 0..terms {
        let k: Vec<i32> = (0..dims).map(|_| rng.random_range(lo..=hi)).collect();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.add_term(MultiIndex::new(k), Complex64::new(re, im) / 2f64.sqrt());
    }
    out
}

/// Random analytic polynomial with exponents in `0..=max_exp`.
pub fn random_analytic_poly<R: Rng>(rng: &mut R, dims: usize, max_exp: i32, terms: usize) -> TrigPoly {
    random_trig_poly(rng, dims, 0, max_exp, terms)
}

/// Generator of instance `index` under `seed` for batch suites.
pub fn random_instance(seed: u64, index: u64, dims: usize, analytic: bool) -> TrigPoly {
    let mut rng = rng::instance_rng(seed, index);
    let terms = rng.random_range(2..=8);
    if analytic {
        random_analytic_poly(&mut rng, dims, 2, terms)
    } else {
        random_trig_poly(&mut rng, dims, -2, 2, terms)
    }
}
