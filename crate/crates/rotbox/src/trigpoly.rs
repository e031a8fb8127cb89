//! Real trigonometric polynomials on the circle.
//!
//! A [`TrigPoly`] of degree `d = 2J` is stored in its real form
//! `p(theta) = c_0 + sum_k (c_k cos(k theta) + s_k sin(k theta))`. The complex
//! form `p(theta) = sum_{|k|<=d} a_k e^{i k theta}` is derived on demand using
//! `a_0 = c_0`, `c_k = 2 Re a_k`, `s_k = -2 Im a_k` and `a_{-k} = conj(a_k)`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::linalg::{c, poly_roots, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrigPolyError {
    #[error("coefficient lengths do not match two_j = {two_j}: |c| = {c_len}, |s| = {s_len}")]
    Shape { two_j: usize, c_len: usize, s_len: usize },
    #[error("coefficient vector of length {0} is not of the form 2*two_j + 1")]
    VectorLength(usize),
    #[error("complex coefficients violate a_(-k) = conj(a_k) at k = {k} (deviation {deviation:e})")]
    NotHermitian { k: usize, deviation: f64 },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("Fourier quadrature did not converge: change {change:e} after {nodes} nodes")]
    QuadratureNonConvergence { nodes: usize, change: f64 },
}

/// Doubled spin label; `J = two_j / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinLabel {
    pub two_j: usize,
}

impl SpinLabel {
    pub fn new(two_j: usize) -> Self {
        SpinLabel { two_j }
    }

    /// Parse a spin value such as `1.5`; only multiples of one half are valid.
    pub fn from_j(j: f64) -> Option<Self> {
        let t = 2.0 * j;
        if j >= 0.0 && (t - t.round()).abs() < 1e-12 {
            Some(SpinLabel::new(t.round() as usize))
        } else {
            None
        }
    }

    pub fn j(self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Hilbert-space dimension `2J + 1`.
    pub fn dim(self) -> usize {
        self.two_j + 1
    }

    /// Length `4J + 1` of the real coefficient vector.
    pub fn coeff_len(self) -> usize {
        2 * self.two_j + 1
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_j.is_multiple_of(2) {
            write!(f, "{}", self.two_j / 2)
        } else {
            write!(f, "{}/2", self.two_j)
        }
    }
}

#[derive(Deserialize)]
struct RawTrigPoly {
    two_j: usize,
    c: Vec<f64>,
    s: Vec<f64>,
}

impl TryFrom<RawTrigPoly> for TrigPoly {
    type Error = TrigPolyError;
    fn try_from(r: RawTrigPoly) -> Result<Self, Self::Error> {
        TrigPoly::new(r.two_j, r.c, r.s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrigPoly")]
pub struct TrigPoly {
    two_j: usize,
    c: Vec<f64>,
    s: Vec<f64>,
}

/// Global extrema over one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

/// Values within this distance of `[0, 1]` count as valid probabilities.
pub const RANGE_TOL: f64 = 1e-10;

/// Reduce an angle into `[0, 2 pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(2.0 * PI - d)
}

impl TrigPoly {
    pub fn new(two_j: usize, c: Vec<f64>, s: Vec<f64>) -> Result<Self, TrigPolyError> {
        if c.len() != two_j + 1 || s.len() != two_j {
            return Err(TrigPolyError::Shape {
                two_j,
                c_len: c.len(),
                s_len: s.len(),
            });
        }
        if c.iter().chain(s.iter()).any(|x| !x.is_finite()) {
            return Err(TrigPolyError::NonFinite);
        }
        Ok(TrigPoly { two_j, c, s })
    }

    pub fn zero(two_j: usize) -> Self {
        TrigPoly {
            two_j,
            c: vec![0.0; two_j + 1],
            s: vec![0.0; two_j],
        }
    }

    pub fn constant(two_j: usize, value: f64) -> Self {
        let mut p = Self::zero(two_j);
        p.c[0] = value;
        p
    }

    /// `(1 + cos theta) / 2`-style helper: `c_0 + a cos(k theta) + b sin(k theta)`.
    pub fn harmonic(two_j: usize, c0: f64, k: usize, a: f64, b: f64) -> Self {
        assert!(k >= 1 && k <= two_j, "harmonic order out of range");
        let mut p = Self::constant(two_j, c0);
        p.c[k] = a;
        p.s[k - 1] = b;
        p
    }

    pub fn two_j(&self) -> usize {
        self.two_j
    }

    pub fn degree(&self) -> usize {
        self.two_j
    }

    pub fn spin(&self) -> SpinLabel {
        SpinLabel::new(self.two_j)
    }

    /// Cosine coefficients `c_0..c_d`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Sine coefficients `s_1..s_d`.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn c_k(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    pub fn s_k(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.s.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// Coefficients interleaved as `(c_0, c_1, s_1, ..., c_d, s_d)`; this is
    /// the layout used for directions and GPT effects.
    pub fn coeff_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.two_j + 1);
        v.push(self.c[0]);
        for k in 1..=self.two_j {
            v.push(self.c[k]);
            v.push(self.s[k - 1]);
        }
        v
    }

    pub fn from_coeff_vector(v: &[f64]) -> Result<Self, TrigPolyError> {
        if v.len().is_multiple_of(2) {
            return Err(TrigPolyError::VectorLength(v.len()));
        }
        let two_j = (v.len() - 1) / 2;
        let mut c = vec![v[0]];
        let mut s = Vec::with_capacity(two_j);
        for k in 1..=two_j {
            c.push(v[2 * k - 1]);
            s.push(v[2 * k]);
        }
        TrigPoly::new(two_j, c, s)
    }

    pub fn evaluate(&self, theta: f64) -> f64 {
        let mut acc = self.c[0];
        for k in 1..=self.two_j {
            let (sn, cs) = (k as f64 * theta).sin_cos();
            acc += self.c[k] * cs + self.s[k - 1] * sn;
        }
        acc
    }

    /// Complex coefficient `a_k` for any integer `k` (zero beyond the degree).
    pub fn a(&self, k: i64) -> C64 {
        let m = k.unsigned_abs() as usize;
        if m > self.two_j {
            return c(0.0, 0.0);
        }
        if m == 0 {
            return c(self.c[0], 0.0);
        }
        let z = c(self.c[m] / 2.0, -self.s[m - 1] / 2.0);
        if k > 0 {
            z
        } else {
            z.conj()
        }
    }

    /// `(a_{-d}, ..., a_0, ..., a_d)`.
    pub fn to_complex(&self) -> Vec<C64> {
        let d = self.two_j as i64;
        (-d..=d).map(|k| self.a(k)).collect()
    }

    /// Inverse of [`TrigPoly::to_complex`]; requires Hermitian symmetry to 1e-12.
    pub fn from_complex(a: &[C64]) -> Result<Self, TrigPolyError> {
        if a.len().is_multiple_of(2) {
            return Err(TrigPolyError::VectorLength(a.len()));
        }
        let d = (a.len() - 1) / 2;
        let at = |k: i64| a[(k + d as i64) as usize];
        for k in 0..=d as i64 {
            let dev = (at(-k) - at(k).conj()).norm();
            if dev > 1e-12 {
                return Err(TrigPolyError::NotHermitian {
                    k: k as usize,
                    deviation: dev,
                });
            }
        }
        Self::from_nonneg_complex(d, |k| at(k as i64))
    }

    /// Build from `a_0..a_d`; `a_0` must be real up to rounding.
    pub fn from_nonneg_complex<F: Fn(usize) -> C64>(two_j: usize, a: F) -> Result<Self, TrigPolyError> {
        let mut c = vec![a(0).re];
        let mut s = Vec::with_capacity(two_j);
        for k in 1..=two_j {
            let z = a(k);
            c.push(2.0 * z.re);
            s.push(-2.0 * z.im);
        }
        TrigPoly::new(two_j, c, s)
    }

    /// Same function viewed at a larger degree.
    pub fn padded(&self, two_j: usize) -> Self {
        assert!(two_j >= self.two_j, "cannot pad to a smaller degree");
        let mut p = TrigPoly::zero(two_j);
        p.c[..=self.two_j].copy_from_slice(&self.c);
        p.s[..self.two_j].copy_from_slice(&self.s);
        p
    }

    /// Largest `k` with `|a_k| > tol` (zero for constants).
    pub fn effective_degree(&self, tol: f64) -> usize {
        (1..=self.two_j)
            .rev()
            .find(|&k| self.a(k as i64).norm() > tol)
            .unwrap_or(0)
    }

    pub fn derivative(&self) -> Self {
        let mut p = TrigPoly::zero(self.two_j);
        for k in 1..=self.two_j {
            let kf = k as f64;
            p.c[k] = kf * self.s[k - 1];
            p.s[k - 1] = -kf * self.c[k];
        }
        p
    }

    /// `theta -> 1 - p(theta)`.
    pub fn one_minus(&self) -> Self {
        TrigPoly::constant(self.two_j, 1.0) - self.clone()
    }

    /// `theta -> p(theta - phi)`: features move forward by `phi`.
    pub fn shifted(&self, phi: f64) -> Self {
        let d = self.two_j;
        TrigPoly::from_nonneg_complex(d, |k| self.a(k as i64) * C64::from_polar(1.0, -(k as f64) * phi))
            .expect("finite coefficients")
    }

    /// `theta -> p(delta - theta)`.
    pub fn reflected(&self, delta: f64) -> Self {
        let d = self.two_j;
        TrigPoly::from_nonneg_complex(d, |k| self.a(-(k as i64)) * C64::from_polar(1.0, -(k as f64) * delta))
            .expect("finite coefficients")
    }

    /// Pointwise product; the degree is the sum of the degrees.
    pub fn product(&self, other: &TrigPoly) -> Self {
        let d = self.two_j + other.two_j;
        let (d1, d2) = (self.two_j as i64, other.two_j as i64);
        TrigPoly::from_nonneg_complex(d, |k| {
            let k = k as i64;
            let mut acc = c(0.0, 0.0);
            for j in -d1..=d1 {
                let r = k - j;
                if r.abs() <= d2 {
                    acc += self.a(j) * other.a(r);
                }
            }
            acc
        })
        .expect("finite coefficients")
    }

    /// Largest absolute difference between coefficient vectors (after padding).
    pub fn coeff_distance(&self, other: &TrigPoly) -> f64 {
        let d = self.two_j.max(other.two_j);
        let a = self.padded(d).coeff_vector();
        let b = other.padded(d).coeff_vector();
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Sup-norm distance sampled on a uniform grid of `n` angles.
    pub fn grid_distance(&self, other: &TrigPoly, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                (self.evaluate(t) - other.evaluate(t)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Stationary points of `p` in `[0, 2 pi)`, found from the unit-circle
    /// roots of the Laurent polynomial of `p'` and polished by Newton steps.
    pub fn critical_points(&self) -> Vec<f64> {
        let scale = (1..=self.two_j).map(|k| self.a(k as i64).norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Vec::new();
        }
        let d = self.effective_degree(1e-13 * scale);
        let di = d as i64;
        let coeffs: Vec<C64> = (0..=2 * di)
            .map(|m| {
                let k = m - di;
                C64::new(0.0, k as f64) * self.a(k)
            })
            .collect();
        let roots = poly_roots(&coeffs);
        let dp = self.derivative();
        let ddp = dp.derivative();
        let mut out: Vec<f64> = Vec::new();
        for z in roots {
            if (z.norm() - 1.0).abs() > 1e-4 {
                continue;
            }
            let mut t = z.arg();
            for _ in 0..8 {
                let g = dp.evaluate(t);
                let h = ddp.evaluate(t);
                if h.abs() < 1e-300 {
                    break;
                }
                let step = g / h;
                let cand = t - step;
                if dp.evaluate(cand).abs() < g.abs() {
                    t = cand;
                } else {
                    break;
                }
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let t = wrap_angle(t);
            if !out.iter().any(|&u| circular_distance(u, t) < 1e-12) {
                out.push(t);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn extrema(&self) -> Extrema {
        let mut best = Extrema {
            min: self.c[0],
            argmin: 0.0,
            max: self.c[0],
            argmax: 0.0,
        };
        if self.effective_degree(0.0) == 0 {
            return best;
        }
        let v0 = self.evaluate(0.0);
        best.min = v0;
        best.max = v0;
        for t in self.critical_points() {
            let v = self.evaluate(t);
            if v < best.min {
                best.min = v;
                best.argmin = t;
            }
            if v > best.max {
                best.max = v;
                best.argmax = t;
            }
        }
        best
    }

    /// Whether `0 <= p <= 1` holds everywhere (to [`RANGE_TOL`]).
    pub fn range_valid(&self) -> bool {
        let e = self.extrema();
        e.min >= -RANGE_TOL && e.max <= 1.0 + RANGE_TOL
    }

    /// Distinct stationary angles at which `|p - level| <= tol`; includes
    /// `theta = 0` when it qualifies.
    pub fn level_points(&self, level: f64, tol: f64) -> Vec<f64> {
        let mut cands = self.critical_points();
        cands.push(0.0);
        let mut out: Vec<f64> = Vec::new();
        for t in cands {
            if (self.evaluate(t) - level).abs() <= tol && !out.iter().any(|&u| circular_distance(u, t) < 1e-6) {
                out.push(t);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Project a periodic function onto the trigonometric polynomials of
/// degree `d`: `a_k = (1/2 pi) int f(theta) e^{-i k theta} d theta`.
///
/// Uses the periodic trapezoid rule starting from `8(d+1)` nodes and
/// doubling until successive estimates agree to `1e-10`.
pub fn fourier_project<F: Fn(f64) -> f64>(f: F, d: usize) -> Result<TrigPoly, TrigPolyError> {
    fourier_project_with(f, d, 1e-10, 1 << 22)
}

/// [`fourier_project`] with explicit tolerance and node cap.
pub fn fourier_project_with<F: Fn(f64) -> f64>(
    f: F,
    d: usize,
    tol: f64,
    max_nodes: usize,
) -> Result<TrigPoly, TrigPolyError> {
    let mut n = (8 * (d + 1)).next_power_of_two();
    let mut samples: Vec<f64> = (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect();
    let mut prev = trapezoid_coeffs(&samples, d);
    loop {
        let m = 2 * n;
        let mut next = Vec::with_capacity(m);
        for (i, &v) in samples.iter().enumerate() {
            next.push(v);
            next.push(f(2.0 * PI * (2 * i + 1) as f64 / m as f64));
        }
        samples = next;
        n = m;
        let cur = trapezoid_coeffs(&samples, d);
        let change = prev.iter().zip(&cur).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        if change <= tol {
            return TrigPoly::from_nonneg_complex(d, |k| cur[k]);
        }
        if n >= max_nodes {
            return Err(TrigPolyError::QuadratureNonConvergence { nodes: n, change });
        }
        prev = cur;
    }
}

fn trapezoid_coeffs(samples: &[f64], d: usize) -> Vec<C64> {
    let n = samples.len();
    let mut acc = vec![c(0.0, 0.0); d + 1];
    for (i, &v) in samples.iter().enumerate() {
        let theta = 2.0 * PI * i as f64 / n as f64;
        let w = C64::from_polar(1.0, -theta);
        let mut pw = c(1.0, 0.0);
        for a in acc.iter_mut() {
            *a += pw * v;
            pw *= w;
        }
    }
    acc.into_iter().map(|a| a / n as f64).collect()
}

impl Add for TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: TrigPoly) -> TrigPoly {
        let d = self.two_j.max(rhs.two_j);
        let (mut a, b) = (self.padded(d), rhs.padded(d));
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x += y;
        }
        for (x, y) in a.s.iter_mut().zip(&b.s) {
            *x += y;
        }
        a
    }
}

impl Sub for TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: TrigPoly) -> TrigPoly {
        self + (-rhs)
    }
}

impl Neg for TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self * -1.0
    }
}

impl Mul<f64> for TrigPoly {
    type Output = TrigPoly;
    fn mul(mut self, k: f64) -> TrigPoly {
        self.c.iter_mut().for_each(|x| *x *= k);
        self.s.iter_mut().for_each(|x| *x *= k);
        self
    }
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.c[0])?;
        for k in 1..=self.two_j {
            if self.c[k] != 0.0 {
                write!(f, " {:+} cos({k}t)", self.c[k])?;
            }
            if self.s[k - 1] != 0.0 {
                write!(f, " {:+} sin({k}t)", self.s[k - 1])?;
            }
        }
        Ok(())
    }
}
