//! Polynomials on the disc, circle grids, and trapezoidal norms of dilations.
//!
//! An analytic function is represented by a finite power series. Its
//! dilation `f_r(e^{iθ}) = f(r e^{iθ})` is sampled on `M` equispaced angles
//! and integrated against `dθ/2π` with the uniform trapezoidal rule, which is
//! spectrally accurate for smooth periodic integrands. All grids share the
//! same angular nodes so samples at different radii can be subtracted.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Default number of quadrature nodes.
pub const DEFAULT_POINTS: usize = 4096;

/// A finite complex power series `Σ a_k z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPoly {
    coeffs: Vec<Complex64>,
}

impl AnalyticPoly {
    /// Builds a polynomial from `a_0, a_1, …`, trimming exact trailing zeros.
    /// An empty slice is the zero polynomial.
    pub fn new(coeffs: impl Into<Vec<Complex64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect::<Vec<_>>())
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|a| a.norm_sqr() == 0.0)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    #[inline]
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    /// Value and first derivative at `z`.
    pub fn evaluate_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &a in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect::<Vec<_>>())
    }

    /// `√(Σ |a_k|² r^{2k})`, the L² norm of the dilation by Parseval.
    pub fn norm_l2_parseval(&self, r: f64) -> f64 {
        let r2 = r * r;
        let mut weight = 1.0;
        let mut sum = 0.0;
        for a in &self.coeffs {
            sum += a.norm_sqr() * weight;
            weight *= r2;
        }
        sum.sqrt()
    }

    /// Parses the coefficient file format: one `re im` pair per line, `a_0`
    /// first. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut coeffs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            coeffs.push(parse_complex(line, i + 1)?);
        }
        if coeffs.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "no coefficients".into(),
            });
        }
        Ok(Self::new(coeffs))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.coeffs {
            let _ = writeln!(out, "{:e} {:e}", a.re, a.im);
        }
        out
    }
}

/// Parses `"re im"` (a lone `re` is accepted as a real number).
pub(crate) fn parse_complex(text: &str, line: usize) -> Result<Complex64> {
    let mut parts = text.split_whitespace();
    let parse = |s: Option<&str>, what: &str| -> Result<f64> {
        match s {
            None => Ok(0.0),
            Some(s) => s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("bad {what} part `{s}`: {e}"),
            }),
        }
    };
    let re = parse(parts.next(), "real")?;
    let im = parse(parts.next(), "imaginary")?;
    if parts.next().is_some() {
        return Err(Error::Parse {
            line,
            message: "expected `re im`".into(),
        });
    }
    Ok(Complex64::new(re, im))
}

/// `M` equispaced points on the circle of the given radius.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleGrid {
    radius: f64,
    points: Vec<Complex64>,
}

/// The `M`-th roots of unity `e^{2πij/M}`.
pub fn unit_roots(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|j| {
            let (s, c) = (TAU * j as f64 / m as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

impl CircleGrid {
    pub fn new(radius: f64, m: usize) -> Result<Self> {
        if m == 0 || m % 2 != 0 {
            return Err(Error::InvalidGridSize(m));
        }
        if !(0.0..=1.0).contains(&radius) {
            return Err(Error::RadiusOutOfRange(radius));
        }
        let points = unit_roots(m).into_iter().map(|w| w * radius).collect();
        Ok(Self { radius, points })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    /// Angle of node `j`.
    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.points.len() as f64
    }
}

/// Samples of a function on a [`CircleGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedSamples {
    pub grid: CircleGrid,
    pub values: Vec<Complex64>,
}

impl DilatedSamples {
    /// Samples `func` at every grid node.
    pub fn from_fn(grid: CircleGrid, func: impl Fn(Complex64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&z| func(z)).collect();
        Self { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.grid.radius()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise product; both operands must share the angular grid.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_same_grid(self, other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    /// Fourier coefficients `c_k = (1/M) Σ_j v_j e^{−2πijk/M}` for bins
    /// `k = 0, …, M − 1`; bin `k ≥ M/2` carries frequency `k − M`.
    pub fn fourier_coefficients(&self) -> Vec<Complex64> {
        let m = self.values.len();
        let mut buf = self.values.clone();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
        fft.process(&mut buf);
        let w = 1.0 / m as f64;
        buf.iter_mut().for_each(|c| *c *= w);
        buf
    }
}

fn check_same_grid(s: &DilatedSamples, t: &DilatedSamples) -> Result<()> {
    if s.values.len() != t.values.len() {
        return Err(Error::GridMismatch {
            left: s.values.len(),
            right: t.values.len(),
        });
    }
    Ok(())
}

/// Smallest admissible grid for a polynomial of the given degree.
pub fn min_points(degree: usize) -> usize {
    2 * (degree + 1)
}

/// Samples `f` on the radius-`r` circle at `m` equispaced angles.
pub fn dilate(f: &AnalyticPoly, r: f64, m: usize) -> Result<DilatedSamples> {
    let required = min_points(f.degree());
    let grid = CircleGrid::new(r, m)?;
    if m < required {
        return Err(Error::GridTooCoarse {
            points: m,
            degree: f.degree(),
            required,
        });
    }
    Ok(DilatedSamples::from_fn(grid, |z| f.evaluate(z)))
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Compensated mean; zero for an empty sequence.
pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let total = compensated_sum(values.into_iter().inspect(|_| n += 1));
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// `(1/M) Σ |v_j|`.
pub fn norm_l1(s: &DilatedSamples) -> f64 {
    mean(s.values.iter().map(|v| v.norm()))
}

/// `√((1/M) Σ |v_j|²)`.
pub fn norm_l2(s: &DilatedSamples) -> f64 {
    mean(s.values.iter().map(|v| v.norm_sqr())).sqrt()
}

/// `((1/M) Σ |v_j|^p)^{1/p}` for `p > 0`.
pub fn norm_lp(s: &DilatedSamples, p: f64) -> f64 {
    if p == 1.0 {
        return norm_l1(s);
    }
    if p == 2.0 {
        return norm_l2(s);
    }
    mean(s.values.iter().map(|v| v.norm().powf(p))).powf(1.0 / p)
}

/// `(1/M) Σ |s_j − t_j|`.
pub fn norm_l1_diff(s: &DilatedSamples, t: &DilatedSamples) -> Result<f64> {
    norm_lp_diff(s, t, 1.0)
}

/// `((1/M) Σ |s_j − t_j|^p)^{1/p}`.
pub fn norm_lp_diff(s: &DilatedSamples, t: &DilatedSamples, p: f64) -> Result<f64> {
    check_same_grid(s, t)?;
    let diffs = s.values.iter().zip(&t.values).map(|(a, b)| (a - b).norm());
    Ok(if p == 1.0 {
        mean(diffs)
    } else if p == 2.0 {
        mean(diffs.map(|d| d * d)).sqrt()
    } else {
        mean(diffs.map(|d| d.powf(p))).powf(1.0 / p)
    })
}

/// L² norm of the dilation by Parseval.
pub fn norm_l2_parseval(f: &AnalyticPoly, r: f64) -> f64 {
    f.norm_l2_parseval(r)
}
