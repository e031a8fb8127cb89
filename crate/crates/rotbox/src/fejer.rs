//! Fejer-Riesz spectral factorization.
//!
//! A nonnegative trigonometric polynomial `p` of degree `d` is written as
//! `p(theta) = |Q(theta)|^2` with `Q(theta) = sum_{j=0}^{d} b_j e^{i j theta}`,
//! equivalently `a_k = sum_j conj(b_j) b_{j+k}`. The factor is computed from
//! the roots of `z^d p(z)`, which come in pairs `(z, 1/conj(z))`; roots on the
//! unit circle have even multiplicity and half of them go into `Q`.
//!
//! Phase convention: the first nonzero `b_j` is real and nonnegative.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{c, eigvalsh, poly_roots, CMat, C64};
use crate::trigpoly::TrigPoly;

/// Polynomials with a minimum below this are rejected.
pub const NONNEG_TOL: f64 = 1e-9;
/// Radial distance from the unit circle below which a root counts as on it.
pub const CIRCLE_TOL: f64 = 1e-7;
/// Angular distance used to group unit-circle roots into multiple roots.
pub const CLUSTER_TOL: f64 = 1e-5;
/// Maximum allowed mismatch between `r` and `1/conj(r')` for paired roots.
pub const PAIRING_TOL: f64 = 1e-6;
/// Complex coefficients smaller than this at the top are dropped.
pub const LEADING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FejerError {
    #[error("polynomial is negative: minimum {min:e} at theta = {at}")]
    NotNonnegative { min: f64, at: f64 },
    #[error("root pairing failed: {0}")]
    RootPairingFailure(String),
}

/// Coefficients `b_0..b_d` of the analytic factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorVector {
    #[serde(with = "crate::json::cvec")]
    pub b: Vec<C64>,
}

impl FactorVector {
    pub fn degree(&self) -> usize {
        self.b.len().saturating_sub(1)
    }

    /// `Q(theta) = sum_j b_j e^{i j theta}`.
    pub fn q(&self, theta: f64) -> C64 {
        self.b
            .iter()
            .enumerate()
            .map(|(j, &bj)| bj * C64::from_polar(1.0, j as f64 * theta))
            .sum()
    }

    /// The polynomial `|Q|^2`.
    pub fn reconstruct(&self) -> TrigPoly {
        let d = self.degree();
        TrigPoly::from_nonneg_complex(d, |k| (0..=d - k).map(|j| self.b[j].conj() * self.b[j + k]).sum())
            .expect("finite factor")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.b.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Rank-one Gram matrix `Q_{jk} = conj(b_j) b_k`, so that
    /// `a_k = sum_j Q_{j,j+k}`.
    pub fn gram(&self) -> CMat {
        let n = self.b.len();
        CMat::from_fn(n, n, |j, k| self.b[j].conj() * self.b[k])
    }
}

/// Diagnostics of the root split, useful when auditing a factorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnostics {
    pub effective_degree: usize,
    pub inside: usize,
    pub on_circle: usize,
    pub outside: usize,
    /// Largest `|r_out - 1/conj(r_in)|` over matched pairs.
    pub pairing_error: f64,
    /// Tolerances that were needed to resolve unit-circle multiplicities.
    pub circle_tol: f64,
    pub cluster_tol: f64,
}

pub fn factorize(p: &TrigPoly) -> Result<FactorVector, FejerError> {
    factorize_with_diagnostics(p).map(|(f, _)| f)
}

pub fn factorize_with_diagnostics(p: &TrigPoly) -> Result<(FactorVector, FactorDiagnostics), FejerError> {
    let ext = p.extrema();
    if ext.min < -NONNEG_TOL {
        return Err(FejerError::NotNonnegative {
            min: ext.min,
            at: ext.argmin,
        });
    }
    let d = p.degree();
    let a0 = p.a(0).re.max(0.0);
    let dd = p.effective_degree(LEADING_TOL);
    let mut diag = FactorDiagnostics {
        effective_degree: dd,
        inside: 0,
        on_circle: 0,
        outside: 0,
        pairing_error: 0.0,
        circle_tol: CIRCLE_TOL,
        cluster_tol: CLUSTER_TOL,
    };
    let mut b = vec![c(0.0, 0.0); d + 1];
    if dd == 0 {
        b[0] = c(a0.sqrt(), 0.0);
        return Ok((FactorVector { b }, diag));
    }

    let ddi = dd as i64;
    let coeffs: Vec<C64> = (0..=2 * ddi).map(|m| p.a(m - ddi)).collect();
    let roots = poly_roots(&coeffs);

    // Try a ladder of tolerances: a root of multiplicity m is perturbed by
    // roughly eps^(1/m), so higher multiplicities need looser grouping than
    // the defaults. Among the admissible splits the one with the smallest
    // reconstruction error wins.
    let mut last_err = String::new();
    let mut best: Option<(f64, Vec<C64>, Split, f64, f64)> = None;
    for widen in 0..5 {
        let ctol = CIRCLE_TOL * 10f64.powi(widen);
        let ktol = CLUSTER_TOL * 10f64.powi(widen);
        match split_roots(&roots, dd, ctol, ktol) {
            Ok(sel) => {
                let cand = factor_from_roots(&sel.roots, a0, d);
                let err = FactorVector { b: cand.clone() }.reconstruct().coeff_distance(p);
                if best.as_ref().is_none_or(|bst| err < bst.0) {
                    best = Some((err, cand, sel, ctol, ktol));
                }
            }
            Err(e) => last_err = e,
        }
    }
    let (_, mut b, sel, ctol, ktol) = best.ok_or(FejerError::RootPairingFailure(last_err))?;
    diag.circle_tol = ctol;
    diag.cluster_tol = ktol;
    diag.inside = sel.inside;
    diag.on_circle = sel.on_circle;
    diag.outside = sel.outside;
    diag.pairing_error = sel.pairing_error;
    normalize_phase(&mut b);
    Ok((FactorVector { b }, diag))
}

/// `sqrt(a0 / |h|^2) h` with `h(z) = prod (z - r)`, padded to length `d + 1`.
fn factor_from_roots(roots: &[C64], a0: f64, d: usize) -> Vec<C64> {
    let mut h = vec![c(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![c(0.0, 0.0); h.len() + 1];
        for (k, &hk) in h.iter().enumerate() {
            next[k + 1] += hk;
            next[k] -= hk * r;
        }
        h = next;
    }
    let hn: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let scale = (a0 / hn).sqrt();
    let mut b = vec![c(0.0, 0.0); d + 1];
    for (k, hk) in h.iter().enumerate() {
        b[k] = hk * scale;
    }
    b
}

fn normalize_phase(b: &mut [C64]) {
    let top = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return;
    }
    if let Some(first) = b.iter().find(|z| z.norm() > 1e-14 * top).copied() {
        let ph = first.conj() / first.norm();
        for z in b.iter_mut() {
            *z *= ph;
        }
        // Remove residual rounding on the reference entry.
        if let Some(z) = b.iter_mut().find(|z| z.norm() > 1e-14 * top) {
            *z = c(z.norm(), 0.0);
        }
    }
}

struct Split {
    roots: Vec<C64>,
    inside: usize,
    on_circle: usize,
    outside: usize,
    pairing_error: f64,
}

fn split_roots(roots: &[C64], dd: usize, ctol: f64, ktol: f64) -> Result<Split, String> {
    // Group roots near the unit circle into clusters (chain-linked by
    // distance); a cluster whose centroid sits on the circle is one multiple
    // root of even multiplicity. The centroid of a perturbed multiple root is
    // far more accurate than any single member.
    let near: Vec<usize> = (0..roots.len())
        .filter(|&i| (roots[i].norm() - 1.0).abs() < ktol)
        .collect();
    let mut label: Vec<Option<usize>> = vec![None; roots.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &near {
        if label[i].is_some() {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        label[i] = Some(id);
        let mut head = 0;
        while head < members.len() {
            let cur = members[head];
            head += 1;
            for &j in &near {
                if label[j].is_none() && (roots[j] - roots[cur]).norm() < ktol {
                    label[j] = Some(id);
                    members.push(j);
                }
            }
        }
        clusters.push(members);
    }

    let mut selected = Vec::new();
    let mut on_circle = 0;
    let mut regular: Vec<C64> = Vec::new();
    let mut in_circle_cluster = vec![false; roots.len()];
    for cl in &clusters {
        let centroid: C64 = cl.iter().map(|&i| roots[i]).sum::<C64>() / cl.len() as f64;
        if (centroid.norm() - 1.0).abs() < ctol {
            if cl.len() % 2 != 0 {
                return Err(format!(
                    "unit-circle root near angle {:.6} has odd multiplicity {}",
                    centroid.arg().rem_euclid(2.0 * PI),
                    cl.len()
                ));
            }
            let unit = centroid / centroid.norm();
            for _ in 0..cl.len() / 2 {
                selected.push(unit);
            }
            on_circle += cl.len();
            for &i in cl {
                in_circle_cluster[i] = true;
            }
        }
    }
    for (i, &z) in roots.iter().enumerate() {
        if !in_circle_cluster[i] {
            regular.push(z);
        }
    }
    let inside: Vec<C64> = regular.iter().copied().filter(|z| z.norm() < 1.0).collect();
    let outside: Vec<C64> = regular.iter().copied().filter(|z| z.norm() >= 1.0).collect();
    if inside.len() != outside.len() {
        return Err(format!(
            "{} roots inside the unit circle but {} outside",
            inside.len(),
            outside.len()
        ));
    }
    let mut pairing_error: f64 = 0.0;
    let mut pool = outside.clone();
    for &r in &inside {
        let target = c(1.0, 0.0) / r.conj();
        let (idx, dist) = pool
            .iter()
            .enumerate()
            .map(|(i, &o)| (i, (o - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty pool");
        let rel = dist / target.norm().max(1.0);
        if rel > PAIRING_TOL.max(ctol) {
            return Err(format!("root {r} has no partner near {target} (mismatch {rel:e})"));
        }
        pairing_error = pairing_error.max(rel);
        pool.swap_remove(idx);
    }
    selected.extend(inside.iter().copied());
    if selected.len() != dd {
        return Err(format!("selected {} roots, expected {dd}", selected.len()));
    }
    Ok(Split {
        roots: selected,
        inside: inside.len(),
        on_circle,
        outside: outside.len(),
        pairing_error,
    })
}

/// Rank-one Gram certificate of nonnegativity.
pub fn gram_certificate(p: &TrigPoly) -> Result<CMat, FejerError> {
    Ok(factorize(p)?.gram())
}

/// A pure state together with a PSD operator that reproduces a polynomial,
/// without the requirement `E <= I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedModel {
    pub two_j: usize,
    #[serde(with = "crate::json::cvec")]
    pub psi: Vec<C64>,
    #[serde(with = "crate::json::cmat")]
    pub effect: CMat,
    pub max_eigenvalue: f64,
    /// Whether the operator also satisfies `E <= I` (to 1e-10).
    pub below_identity: bool,
}

impl RelaxedModel {
    /// `<psi| U_theta^dagger E U_theta |psi>` with `U_theta = e^{i theta Z}`.
    pub fn probability(&self, theta: f64) -> f64 {
        let n = self.psi.len();
        let j = self.two_j as f64 / 2.0;
        let v: Vec<C64> = (0..n)
            .map(|m| self.psi[m] * C64::from_polar(1.0, theta * (j - m as f64)))
            .collect();
        let mut acc = c(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                acc += v[a].conj() * self.effect[(a, b)] * v[b];
            }
        }
        acc.re
    }
}

/// Uniform state and `E = (2J+1) |b><b|` built from the Fejer-Riesz factor.
pub fn relaxed_quantum_model(p: &TrigPoly, two_j: usize) -> Result<RelaxedModel, FejerError> {
    let n = two_j + 1;
    let padded = if p.degree() < two_j { p.padded(two_j) } else { p.clone() };
    let f = factorize(&padded)?;
    let mut b = f.b.clone();
    b.resize(n, c(0.0, 0.0));
    let effect = CMat::from_fn(n, n, |j, k| b[j] * b[k].conj() * n as f64);
    let max_eigenvalue = eigvalsh(&effect).last().copied().unwrap_or(0.0);
    let psi = vec![c(1.0 / (n as f64).sqrt(), 0.0); n];
    Ok(RelaxedModel {
        two_j,
        psi,
        effect,
        max_eigenvalue,
        below_identity: max_eigenvalue <= 1.0 + 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eig;

    fn pstar() -> TrigPoly {
        TrigPoly::new(3, vec![0.4, 0.0, 0.35, 0.0], vec![0.25, 0.0, 0.25]).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn one_minus_cos() {
        let p = TrigPoly::new(1, vec![1.0, -1.0], vec![0.0]).unwrap();
        let f = factorize(&p).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!(
            close(f.b[0], c(r, 0.0), 1e-7) && close(f.b[1], c(-r, 0.0), 1e-7),
            "{:?}",
            f.b
        );
        let q = gram_certificate(&p).unwrap();
        let want = [[0.5, -0.5], [-0.5, 0.5]];
        for j in 0..2 {
            for k in 0..2 {
                assert!(close(q[(j, k)], c(want[j][k], 0.0), 1e-7));
            }
        }
    }

    #[test]
    fn sin_squared() {
        let p = TrigPoly::new(2, vec![0.5, 0.0, -0.5], vec![0.0, 0.0]).unwrap();
        let f = factorize(&p).unwrap();
        assert!(close(f.b[0], c(0.5, 0.0), 1e-7));
        assert!(close(f.b[1], c(0.0, 0.0), 1e-7));
        assert!(close(f.b[2], c(-0.5, 0.0), 1e-7));
    }

    #[test]
    fn zero_and_constant() {
        let f = factorize(&TrigPoly::zero(3)).unwrap();
        assert!(f.b.iter().all(|z| z.norm() == 0.0));
        assert!(gram_certificate(&TrigPoly::zero(2))
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));
        let one = factorize(&TrigPoly::constant(2, 1.0)).unwrap();
        assert_eq!(one.b, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn pstar_gram_reproduces_coefficients() {
        let p = pstar();
        let q = gram_certificate(&p).unwrap();
        assert!(min_eig(&q) > -1e-12);
        for k in 0..=3usize {
            let s: C64 = (0..=3 - k).map(|j| q[(j, j + k)]).sum();
            assert!(close(s, p.a(k as i64), 1e-8), "k={k}");
        }
    }

    #[test]
    fn higher_multiplicity_root() {
        // sin^4(theta/2) has a fourfold root of z^2 p(z) at z = 1.
        let half = TrigPoly::new(1, vec![0.5, -0.5], vec![0.0]).unwrap();
        let p = half.product(&half);
        let f = factorize(&p).unwrap();
        assert!(f.reconstruct().grid_distance(&p, 10_000) < 1e-7);
    }

    #[test]
    fn rejects_negative() {
        let p = TrigPoly::harmonic(1, 0.5, 1, 0.6, 0.0);
        assert!(matches!(factorize(&p), Err(FejerError::NotNonnegative { .. })));
    }

    #[test]
    fn relaxed_model_examples() {
        let m = relaxed_quantum_model(&pstar(), 3).unwrap();
        assert!((m.max_eigenvalue - 1.6).abs() < 1e-8);
        assert!(!m.below_identity);
        for i in 0..200 {
            let t = 2.0 * PI * i as f64 / 200.0;
            assert!((m.probability(t) - pstar().evaluate(t)).abs() < 1e-8);
        }
        let one = relaxed_quantum_model(&TrigPoly::constant(0, 1.0), 2).unwrap();
        assert!((one.probability(0.3) - 1.0).abs() < 1e-12);
        let s2 = TrigPoly::new(2, vec![0.5, 0.0, -0.5], vec![0.0, 0.0]).unwrap();
        let m = relaxed_quantum_model(&s2, 2).unwrap();
        assert!((m.probability(0.7) - 0.7f64.sin().powi(2)).abs() < 1e-8);
    }
}
