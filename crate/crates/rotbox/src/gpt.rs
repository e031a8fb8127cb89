//! The GPT system whose states are the orbitope `conv{omega_J(theta)}` and
//! whose effects are exactly the boxes of `R_J`.
//!
//! States and effects live in `R^{4J+1}` with coordinates
//! `(1, cos t, sin t, ..., cos 2Jt, sin 2Jt)`; the pairing `e . omega(theta)`
//! is the box `p(theta)` with coefficient vector `e`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{c, eigvalsh, CMat, RMat, C64};
use crate::qset::born_coefficients;
use crate::rset::{membership_multi, toeplitz_membership, RsetError};
use crate::trigpoly::{SpinLabel, TrigPoly, RANGE_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GptError {
    #[error("the outcome tuple is not in R_J^A")]
    NotInRJA,
    #[error(transparent)]
    Rset(#[from] RsetError),
    #[error("vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("symmetric-subspace check supports 1 <= 2J <= 8, got 2J = {0}")]
    SpinOutOfRange(usize),
    #[error("witness residual {residual:e} exceeds {tol:e}")]
    Residual { residual: f64, tol: f64 },
}

/// A (possibly unnormalized) state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GptState {
    pub v: Vec<f64>,
}

/// An effect vector; valid iff its box is range-valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GptEffect {
    pub e: Vec<f64>,
}

impl GptState {
    pub fn two_j(&self) -> usize {
        (self.v.len() - 1) / 2
    }

    /// Membership of a normalized state in the orbitope, through the
    /// Toeplitz spectrahedron.
    pub fn in_state_space(&self) -> bool {
        (self.v[0] - 1.0).abs() <= 1e-12 && toeplitz_membership(&self.v[1..])
    }

    pub fn transformed(&self, t: &RMat) -> GptState {
        let v = t * DVector::from_column_slice(&self.v);
        GptState {
            v: v.iter().copied().collect(),
        }
    }
}

impl GptEffect {
    pub fn unit(two_j: usize) -> Self {
        let mut e = vec![0.0; 2 * two_j + 1];
        e[0] = 1.0;
        GptEffect { e }
    }

    pub fn apply(&self, state: &GptState) -> f64 {
        self.e.iter().zip(&state.v).map(|(a, b)| a * b).sum()
    }

    /// The box `theta -> e . omega(theta)`.
    pub fn polynomial(&self) -> TrigPoly {
        TrigPoly::from_coeff_vector(&self.e).expect("odd-length effect vector")
    }

    pub fn is_valid(&self) -> bool {
        self.polynomial().range_valid()
    }

    /// Whether `0 <= e . omega(theta) <= 1` on a uniform grid of angles.
    pub fn valid_on_grid(&self, points: usize) -> bool {
        let two_j = (self.e.len() - 1) / 2;
        (0..points).all(|i| {
            let v = self.apply(&omega(two_j, 2.0 * PI * i as f64 / points as f64));
            (-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v)
        })
    }
}

/// A finite mixture of orbit points, `sum_i w_i omega(theta_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<(f64, f64)>,
}

impl Mixture {
    pub fn state(&self, two_j: usize) -> GptState {
        let mut v = vec![0.0; 2 * two_j + 1];
        for &(w, t) in &self.components {
            for (x, y) in v.iter_mut().zip(omega(two_j, t).v) {
                *x += w * y;
            }
        }
        GptState { v }
    }
}

pub fn omega(two_j: usize, theta: f64) -> GptState {
    let mut v = Vec::with_capacity(2 * two_j + 1);
    v.push(1.0);
    for k in 1..=two_j {
        let (s, co) = (k as f64 * theta).sin_cos();
        v.push(co);
        v.push(s);
    }
    GptState { v }
}

/// `T_theta = 1 (+) R(theta) (+) R(2 theta) (+) ...` with planar rotations `R`.
pub fn rotation_matrix(two_j: usize, theta: f64) -> RMat {
    let n = 2 * two_j + 1;
    let mut t = RMat::zeros(n, n);
    t[(0, 0)] = 1.0;
    for k in 1..=two_j {
        let (s, co) = (k as f64 * theta).sin_cos();
        let i = 2 * k - 1;
        t[(i, i)] = co;
        t[(i, i + 1)] = -s;
        t[(i + 1, i)] = s;
        t[(i + 1, i + 1)] = co;
    }
    t
}

/// Effects reproducing an outcome tuple of `R_J^A`.
pub fn measurement_from_correlations(polys: &[TrigPoly], spin: SpinLabel) -> Result<Vec<GptEffect>, GptError> {
    let m = membership_multi(polys, spin)?;
    if !m.feasible {
        return Err(GptError::NotInRJA);
    }
    Ok(polys
        .iter()
        .map(|p| GptEffect {
            e: p.padded(spin.two_j).coeff_vector(),
        })
        .collect())
}

/// Joint and pairwise distinguishability data for the spin-1 system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguishabilityTables {
    /// `joint[a][b] = e_a . omega(2 pi b / 3)`.
    pub joint: [[f64; 3]; 3],
    /// The three effects of the joint measurement.
    pub joint_effects: Vec<GptEffect>,
    /// Effects `e_{+-pi/2}`, `e_{0,pi}`, `e_{pi/2,3pi/2}`.
    pub pair_effects: Vec<(String, GptEffect)>,
    /// `pairwise[i][j]` = value of the effect separating states `i`, `j`
    /// (angles `0, pi/2, pi, 3pi/2`) on state `i`, and `pairwise[j][i]` on `j`.
    pub pairwise: [[f64; 4]; 4],
    pub joint_error: f64,
    pub pairwise_error: f64,
    pub effects_valid: bool,
}

/// Boxes `|<omega^a| U_theta |1>|^2` of the three-outcome spin-1 measurement
/// that distinguishes `omega(0)`, `omega(2 pi / 3)`, `omega(4 pi / 3)`.
pub fn trine_boxes() -> Vec<TrigPoly> {
    let s = 1.0 / 3f64.sqrt();
    let rho = CMat::from_element(3, 3, c(s * s, 0.0));
    (0..3)
        .map(|a| {
            let t = 2.0 * PI * a as f64 / 3.0;
            let phases = crate::qset::rotation_phases(2, t);
            let v = nalgebra::DVector::from_iterator(3, phases.iter().map(|z| z * s));
            let e = &v * v.adjoint();
            born_coefficients(&rho, &e)
        })
        .collect()
}

pub fn distinguishability_tables() -> Result<DistinguishabilityTables, GptError> {
    let spin = SpinLabel::new(2);
    let boxes = trine_boxes();
    let joint_effects = measurement_from_correlations(&boxes, spin)?;
    let mut joint = [[0.0; 3]; 3];
    let mut joint_error: f64 = 0.0;
    for (a, row) in joint.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate() {
            let v = joint_effects[a].apply(&omega(2, 2.0 * PI * b as f64 / 3.0));
            *slot = v;
            joint_error = joint_error.max((v - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    let e = |v: [f64; 5]| GptEffect { e: v.to_vec() };
    let pair_effects = vec![
        ("pm_pi_2".to_string(), e([0.5, 0.0, 0.0, 0.5, 0.0])),
        ("0_pi".to_string(), e([0.5, 0.5, 0.0, 0.0, 0.0])),
        ("pi_2_3pi_2".to_string(), e([0.5, 0.0, 0.5, 0.0, 0.0])),
    ];
    let angles = [0.0, PI / 2.0, PI, 1.5 * PI];
    // states i and j are separated by e_{pm pi/2} when adjacent, by e_{0,pi}
    // for {0, pi} and by e_{pi/2, 3pi/2} for {pi/2, 3pi/2}
    let separator = |i: usize, j: usize| -> &GptEffect {
        if (i + j) % 2 == 1 {
            &pair_effects[0].1
        } else if i.is_multiple_of(2) {
            &pair_effects[1].1
        } else {
            &pair_effects[2].1
        }
    };
    let mut pairwise = [[0.0; 4]; 4];
    let mut pairwise_error: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                pairwise[i][j] = f64::NAN;
                continue;
            }
            let eff = separator(i, j);
            let vi = eff.apply(&omega(2, angles[i]));
            let vj = eff.apply(&omega(2, angles[j]));
            pairwise[i][j] = vi;
            // one of the two states must give 1 and the other 0
            let err = ((vi - 1.0).abs() + vj.abs()).min(vi.abs() + (vj - 1.0).abs());
            pairwise_error = pairwise_error.max(err);
        }
    }
    let effects_valid = pair_effects.iter().all(|(_, e)| e.is_valid()) && joint_effects.iter().all(|e| e.is_valid());
    Ok(DistinguishabilityTables {
        joint,
        joint_effects,
        pair_effects,
        pairwise,
        joint_error,
        pairwise_error,
        effects_valid,
    })
}

/// Outcome of the bit-symmetry test for invariant inner products
/// `diag(a, b, b, c, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitSymmetryReport {
    /// Coefficients of `(b, c)` in the two homogeneous equations.
    pub system: [[f64; 2]; 2],
    pub determinant: f64,
    /// Dimension of the solution space of the full system.
    pub nullity: usize,
    /// Positive `(b, c)` solving only the first equation.
    pub first_pair_solution: (f64, f64),
    /// Largest mismatch between explicit and symbolic inner products.
    pub inner_product_error: f64,
    pub violated: bool,
}

fn invariant_inner(a: f64, b: f64, cc: f64, x: &GptState, y: &GptState) -> f64 {
    let m = [a, b, b, cc, cc];
    (0..5).map(|i| m[i] * x.v[i] * y.v[i]).sum()
}

/// Pairs `{omega(0), omega(3pi/2)}`, `{omega(0), omega(pi)}`,
/// `{omega(0), omega(2pi/3)}` are all perfectly distinguishable; equal
/// invariant inner products would force `b = c = 0`.
pub fn bit_symmetry_witness() -> BitSymmetryReport {
    // <w0, w(3pi/2)> - <w0, w(pi)>         = b - 2c
    // <w0, w(3pi/2)> - <w0, w(2pi/3)>      = b/2 - c/2
    let system = [[1.0, -2.0], [0.5, -0.5]];
    let m = DMatrix::from_row_slice(2, 2, &[system[0][0], system[0][1], system[1][0], system[1][1]]);
    let determinant = m.determinant();
    let nullity = 2 - m.rank(1e-12);
    // the first equation alone: b = 2c, e.g. c = 1
    let first_pair_solution = (2.0, 1.0);
    let (a, b, cc) = (1.7, 0.6, 0.35);
    let w0 = omega(2, 0.0);
    let symbolic = [
        (1.5 * PI, a - cc),
        (PI, a - b + cc),
        (2.0 * PI / 3.0, a - 0.5 * b - 0.5 * cc),
    ];
    let inner_product_error = symbolic
        .iter()
        .map(|&(t, s)| (invariant_inner(a, b, cc, &w0, &omega(2, t)) - s).abs())
        .fold(0.0, f64::max);
    BitSymmetryReport {
        system,
        determinant,
        nullity,
        first_pair_solution,
        inner_product_error,
        violated: nullity == 0,
    }
}

/// Orthonormal-basis coordinates of `|psi(theta)>^{(x) d}`: the unnormalized
/// Hamming vector `|j>` carries amplitude `2^{-d/2} e^{i (d/2 - j) theta}`
/// and has squared norm `C(d, j)`.
pub fn symmetric_orbit_vector(d: usize, theta: f64) -> Vec<C64> {
    let scale = 2f64.powf(-(d as f64) / 2.0);
    (0..=d)
        .map(|j| {
            let norm = binomial(d, j).sqrt();
            C64::from_polar(scale * norm, theta * (d as f64 / 2.0 - j as f64))
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Single rebit `psi(theta) = (e^{i theta/2} |0> + e^{-i theta/2} |1>)/sqrt 2`.
fn rebit(theta: f64) -> [C64; 2] {
    let h = 1.0 / 2f64.sqrt();
    [C64::from_polar(h, theta / 2.0), C64::from_polar(h, -theta / 2.0)]
}

/// The explicit spin-1 maps `L` (3x4) and `M` (4x3).
pub fn spin_one_maps() -> (RMat, RMat) {
    let l = RMat::from_row_slice(3, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0])
        * (4.0f64 / 3.0).sqrt();
    let m =
        RMat::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]) * (0.75f64).sqrt();
    (l, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricReport {
    pub two_j: usize,
    /// Residual of `L (psi psi^dagger)^{(x)2} L^T = U rho U^dagger` (spin 1).
    pub l_residual: Option<f64>,
    /// Residual of the inverse map `M`.
    pub m_residual: Option<f64>,
    /// Least-squares operator on the symmetric subspace (orthonormal
    /// Hamming basis) reproducing the box along the orbit.
    #[serde(with = "crate::json::cmat")]
    pub witness: CMat,
    pub witness_eigenvalues: Vec<f64>,
    /// Sup deviation of `Tr(W |psi(theta)><psi(theta)|^{(x)2J})` from the box.
    pub residual: f64,
}

/// Sup over `points` angles of `|Tr(W sigma(theta)) - p(theta)|` for the
/// symmetric orbit `sigma`.
pub fn orbit_residual(w: &CMat, p: &TrigPoly, points: usize) -> f64 {
    let d = w.nrows() - 1;
    (0..points)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / points as f64;
            let v = symmetric_orbit_vector(d, t);
            let mut acc = c(0.0, 0.0);
            for a in 0..=d {
                for b in 0..=d {
                    acc += v[a].conj() * w[(a, b)] * v[b];
                }
            }
            (acc.re - p.evaluate(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Check the symmetric-rebit picture of the orbit and find a least-squares
/// operator `W` with `Tr(W |psi(theta)><psi(theta)|^{(x)2J}) = p(theta)`.
pub fn symmetric_orbit_isomorphism(two_j: usize, p: &TrigPoly) -> Result<SymmetricReport, GptError> {
    if two_j == 0 || two_j > 8 {
        return Err(GptError::SpinOutOfRange(two_j));
    }
    let d = two_j;
    let (mut l_residual, mut m_residual) = (None, None);
    if d == 2 {
        let (l, m) = spin_one_maps();
        let (lc, mc) = (l.map(|x| c(x, 0.0)), m.map(|x| c(x, 0.0)));
        let mut lr: f64 = 0.0;
        let mut mr: f64 = 0.0;
        let s = 1.0 / 3f64.sqrt();
        for i in 0..100 {
            let t = 2.0 * PI * i as f64 / 100.0;
            let r = rebit(t);
            let two = DVector::from_vec(vec![r[0] * r[0], r[0] * r[1], r[1] * r[0], r[1] * r[1]]);
            let tensor = &two * two.adjoint();
            let u = DVector::from_iterator(3, crate::qset::rotation_phases(2, t).into_iter().map(|z| z * s));
            let orbit = &u * u.adjoint();
            let mapped = &lc * &tensor * lc.transpose();
            lr = lr.max((mapped - &orbit).iter().map(|z| z.norm()).fold(0.0, f64::max));
            let back = &mc * &orbit * mc.transpose();
            mr = mr.max((back - &tensor).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        l_residual = Some(lr);
        m_residual = Some(mr);
    }
    // Least squares over Hermitian W: unknowns are the real coordinates
    // of W in the basis {E_jj, E_jk + E_kj, i(E_jk - E_kj)}.
    let n = d + 1;
    let mut basis: Vec<CMat> = Vec::new();
    for j in 0..n {
        let mut m = CMat::zeros(n, n);
        m[(j, j)] = c(1.0, 0.0);
        basis.push(m);
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut m = CMat::zeros(n, n);
            m[(j, k)] = c(1.0, 0.0);
            m[(k, j)] = c(1.0, 0.0);
            basis.push(m);
            let mut m = CMat::zeros(n, n);
            m[(j, k)] = c(0.0, 1.0);
            m[(k, j)] = c(0.0, -1.0);
            basis.push(m);
        }
    }
    let samples = 8 * n;
    let target = p.padded(p.degree().max(d));
    let mut a = RMat::zeros(samples, basis.len());
    let mut rhs = DVector::zeros(samples);
    for i in 0..samples {
        let t = 2.0 * PI * i as f64 / samples as f64;
        let v = DVector::from_vec(symmetric_orbit_vector(d, t));
        let sigma = &v * v.adjoint();
        for (col, b) in basis.iter().enumerate() {
            a[(i, col)] = crate::sdp::herm_inner(b, &sigma);
        }
        rhs[i] = target.evaluate(t);
    }
    // Minimum-norm least squares through the spectral decomposition of the
    // normal equations; the design has exactly repeated singular values,
    // where a spectral pseudo-inverse is more reliable than bidiagonal SVD.
    let normal = a.transpose() * &a;
    let eig = normal.symmetric_eigen();
    let cutoff = 1e-12 * eig.eigenvalues.amax().max(1.0);
    let atb = a.transpose() * &rhs;
    let mut x = DVector::zeros(basis.len());
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cutoff {
            let u = eig.eigenvectors.column(k);
            x += u * (u.dot(&atb) / lam);
        }
    }
    let mut witness = CMat::zeros(n, n);
    for (coef, b) in x.iter().zip(&basis) {
        witness += b * c(*coef, 0.0);
    }
    let residual = orbit_residual(&witness, &target, 100);
    if residual > 1e-8 {
        return Err(GptError::Residual { residual, tol: 1e-8 });
    }
    Ok(SymmetricReport {
        two_j,
        l_residual,
        m_residual,
        witness_eigenvalues: eigvalsh(&witness),
        witness,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_basics() {
        let w = omega(3, 0.0);
        assert_eq!(w.v, vec![1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let w = omega(1, PI / 2.0);
        assert!((w.v[0] - 1.0).abs() < 1e-15 && w.v[1].abs() < 1e-15 && (w.v[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equivariance_and_group_law() {
        let (t, f) = (0.77, -2.1);
        let moved = omega(4, t).transformed(&rotation_matrix(4, f));
        let direct = omega(4, t + f);
        for (a, b) in moved.v.iter().zip(&direct.v) {
            assert!((a - b).abs() < 1e-12);
        }
        let prod = rotation_matrix(4, 0.3) * rotation_matrix(4, 1.1);
        assert!((prod - rotation_matrix(4, 1.4)).abs().max() < 1e-12);
        assert!((rotation_matrix(2, 0.0) - RMat::identity(5, 5)).abs().max() == 0.0);
    }

    #[test]
    fn orbit_points_are_states() {
        for i in 0..10 {
            assert!(omega(3, i as f64).in_state_space());
        }
        let mix = Mixture {
            components: vec![(0.5, 0.0), (0.5, PI)],
        };
        assert!(mix.state(2).in_state_space());
        let bad = GptState {
            v: vec![1.0, 2.0, 0.0, 0.0, 0.0],
        };
        assert!(!bad.in_state_space());
    }

    #[test]
    fn measurement_from_spin_one_pair() {
        let s2 = TrigPoly::new(2, vec![0.5, 0.0, -0.5], vec![0.0, 0.0]).unwrap();
        let effects = measurement_from_correlations(&[s2.clone(), s2.one_minus()], SpinLabel::new(2)).unwrap();
        assert_eq!(effects[0].e, vec![0.5, 0.0, 0.0, -0.5, 0.0]);
        assert_eq!(effects[1].e, vec![0.5, 0.0, 0.0, 0.5, 0.0]);
        for i in 0..20 {
            let t = 0.3 * i as f64;
            assert!((effects[0].apply(&omega(2, t)) - s2.evaluate(t)).abs() < 1e-14);
        }
        let half = TrigPoly::constant(2, 0.5);
        let e = measurement_from_correlations(&[half.clone(), half], SpinLabel::new(2)).unwrap();
        assert_eq!(e[0].e, vec![0.5, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn measurement_rejects_invalid_tuple() {
        let p = TrigPoly::harmonic(2, 0.5, 1, 0.6, 0.0);
        let r = measurement_from_correlations(&[p.clone(), p.one_minus()], SpinLabel::new(2));
        assert!(matches!(r, Err(GptError::NotInRJA)));
    }

    #[test]
    fn tables_are_exact() {
        let t = distinguishability_tables().unwrap();
        assert!(t.joint_error < 1e-12);
        assert!(t.pairwise_error < 1e-12);
        assert!(t.effects_valid);
        let e0pi = &t.pair_effects[1].1;
        assert!((e0pi.apply(&omega(2, 0.0)) - 1.0).abs() < 1e-15);
        assert!(e0pi.apply(&omega(2, PI)).abs() < 1e-15);
        let epm = &t.pair_effects[0].1;
        for i in 0..100 {
            let th = 2.0 * PI * i as f64 / 100.0;
            let v = epm.apply(&omega(2, th));
            assert!((v - (0.5 + 0.5 * (2.0 * th).cos())).abs() < 1e-14);
            assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        }
    }

    #[test]
    fn bit_symmetry() {
        let r = bit_symmetry_witness();
        assert_eq!(r.nullity, 0);
        assert!(r.violated);
        assert!(r.inner_product_error < 1e-12);
        let (b, cc) = r.first_pair_solution;
        assert!(b > 0.0 && cc > 0.0 && (b - 2.0 * cc).abs() < 1e-15);
    }

    #[test]
    fn effect_validity_matches_range() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let mut e: Vec<f64> = (0..5).map(|_| rng.random_range(-0.4..0.4)).collect();
            e[0] = 0.5;
            let eff = GptEffect { e };
            let grid = eff.valid_on_grid(20000);
            if eff.is_valid() {
                assert!(grid);
            } else {
                let ext = eff.polynomial().extrema();
                let margin = (-ext.min).max(ext.max - 1.0);
                assert!(!grid || margin < 1e-6);
            }
        }
    }

    #[test]
    fn spin_one_maps_are_exact() {
        let p = TrigPoly::constant(2, 0.5);
        let r = symmetric_orbit_isomorphism(2, &p).unwrap();
        assert!(r.l_residual.unwrap() < 1e-12);
        assert!(r.m_residual.unwrap() < 1e-12);
        let half = CMat::identity(3, 3) * c(0.5, 0.0);
        assert!(orbit_residual(&half, &p, 100) < 1e-12);
    }

    #[test]
    fn pstar_witness_is_not_positive() {
        let p = TrigPoly::new(3, vec![0.4, 0.0, 0.35, 0.0], vec![0.25, 0.0, 0.25]).unwrap();
        let r = symmetric_orbit_isomorphism(3, &p).unwrap();
        assert!(r.residual < 1e-8);
        assert!(r.witness_eigenvalues[0] < -1e-3);
    }
}
