//! The general correlation set `R_J`: trigonometric polynomials of degree at
//! most `2J` with values in `[0, 1]`.
//!
//! Membership is decided by the Gram characterization: `p` lies in `R_J`
//! iff there are PSD matrices `Q`, `S` of size `2J + 1` with
//! `a_k(p) = sum_j Q_{j,j+k}` and `a_k(1 - p) = sum_j S_{j,j+k}`. Rows and
//! columns of `Q`, `S` are labeled `0..=2J`, so for `J = 1` the coefficient
//! `a_{-2}` is carried by the entry `Q_{2,0}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{c, eigvalsh, CMat, C64, I};
use crate::par::map_indexed;
use crate::sdp::{self, BlockTerm, SdpError, SdpProblem, Sense, Status, VerificationReport};
use crate::trigpoly::{SpinLabel, TrigPoly};

/// Tolerance for the normalization of multi-outcome tuples.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Default tolerance for checking solver-produced certificates.
pub const CERTIFICATE_TOL: f64 = 1e-7;
/// A Toeplitz matrix with smallest eigenvalue above `-TOEPLITZ_TOL` is PSD.
pub const TOEPLITZ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RsetError {
    #[error("polynomial degree {degree} exceeds 2J = {two_j}")]
    DegreeTooHigh { degree: usize, two_j: usize },
    #[error("outcome probabilities do not sum to one: {0}")]
    NormalizationViolation(String),
    #[error("direction has length {got}, expected {expected}")]
    DirectionLength { got: usize, expected: usize },
    #[error("at least one outcome is required")]
    NoOutcomes,
    #[error("need at least 3 sweep angles, got {0}")]
    TooFewAngles(usize),
    #[error("sweep directions are linearly dependent")]
    DependentDirections,
    #[error("solver stopped with status {0:?}")]
    Solver(Status),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Named coordinate of the coefficient vector `(c_0, c_1, s_1, ..., c_d, s_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coef {
    C(usize),
    S(usize),
}

impl Coef {
    pub fn index(self) -> usize {
        match self {
            Coef::C(0) => 0,
            Coef::C(k) => 2 * k - 1,
            Coef::S(0) => panic!("there is no s_0 coefficient"),
            Coef::S(k) => 2 * k,
        }
    }
}

/// Weights on the coefficient vector; `n . (c, s)` is maximized over `R_J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub n: Vec<f64>,
}

impl Direction {
    pub fn new(n: Vec<f64>) -> Self {
        Direction { n }
    }

    pub fn zero(two_j: usize) -> Self {
        Direction {
            n: vec![0.0; 2 * two_j + 1],
        }
    }

    pub fn from_terms(two_j: usize, terms: &[(Coef, f64)]) -> Self {
        let mut d = Self::zero(two_j);
        for &(k, w) in terms {
            d.n[k.index()] += w;
        }
        d
    }

    /// `c_{2J-1} + s_{2J}`, the functional separating quantum from general
    /// boxes for `J >= 3/2`.
    pub fn gap_functional(two_j: usize) -> Self {
        assert!(two_j >= 2, "needs 2J >= 2");
        Self::from_terms(two_j, &[(Coef::C(two_j - 1), 1.0), (Coef::S(two_j), 1.0)])
    }

    pub fn value(&self, p: &TrigPoly) -> f64 {
        self.n.iter().zip(p.coeff_vector()).map(|(a, b)| a * b).sum()
    }

    pub fn combine(&self, a: f64, other: &Direction, b: f64) -> Direction {
        Direction {
            n: self.n.iter().zip(&other.n).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn two_j(&self) -> Option<usize> {
        (self.n.len() % 2 == 1).then(|| (self.n.len() - 1) / 2)
    }
}

/// Hermitian `F_i` with `Tr(F_i Q)` equal to the `i`-th entry of the
/// coefficient vector of `sum_j Q_{j,j+k}`.
pub fn coefficient_matrices(two_j: usize) -> Vec<CMat> {
    let n = two_j + 1;
    let mut out = vec![CMat::identity(n, n)];
    for k in 1..=two_j {
        let mut shift = CMat::zeros(n, n);
        for j in 0..n - k {
            shift[(j + k, j)] = c(1.0, 0.0);
        }
        let t = shift.transpose();
        out.push(&shift + &t);
        out.push((&shift - &t) * I);
    }
    out
}

/// Polynomial with `a_k = sum_j M_{j,j+k}` for a Hermitian `M`.
pub fn gram_polynomial(m: &CMat) -> TrigPoly {
    let d = m.nrows().saturating_sub(1);
    TrigPoly::from_nonneg_complex(d, |k| (0..=d - k).map(|j| m[(j, j + k)]).sum()).expect("finite matrix")
}

/// Gram pair witnessing `p` and `1 - p` nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "crate::json::cmat")]
    pub q: CMat,
    #[serde(with = "crate::json::cmat")]
    pub s: CMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub q_min_eigenvalue: f64,
    pub s_min_eigenvalue: f64,
    /// Largest deviation in the coefficient identities.
    pub max_coefficient_error: f64,
    /// `|Tr Q + Tr S - 1|`.
    pub trace_error: f64,
    pub passed: bool,
}

impl Certificate {
    /// Independent check against `p` at tolerance `tol`.
    pub fn check(&self, p: &TrigPoly, tol: f64) -> CertificateCheck {
        let qmin = eigvalsh(&self.q).first().copied().unwrap_or(0.0);
        let smin = eigvalsh(&self.s).first().copied().unwrap_or(0.0);
        let d = self.q.nrows().saturating_sub(1);
        let target = p.padded(d.max(p.degree()));
        let from_q = gram_polynomial(&self.q);
        let from_s = gram_polynomial(&self.s);
        let err_q = from_q.coeff_distance(&target);
        let err_s = from_s.coeff_distance(&target.one_minus());
        let trace_error = (self.q.trace().re + self.s.trace().re - 1.0).abs();
        let herm = crate::linalg::hermitian_error(&self.q).max(crate::linalg::hermitian_error(&self.s));
        let max_coefficient_error = err_q.max(err_s).max(herm);
        CertificateCheck {
            q_min_eigenvalue: qmin,
            s_min_eigenvalue: smin,
            max_coefficient_error,
            trace_error,
            passed: qmin >= -tol && smin >= -tol && max_coefficient_error <= tol && trace_error <= tol,
        }
    }

    /// The polynomial encoded by `Q`.
    pub fn polynomial(&self) -> TrigPoly {
        gram_polynomial(&self.q)
    }
}

/// The feasibility SDP whose solutions are exactly the certificates of `p`.
pub fn membership_problem(p: &TrigPoly, spin: SpinLabel) -> Result<SdpProblem, RsetError> {
    let two_j = spin.two_j;
    check_degree(p, two_j)?;
    let v = p.padded(two_j).coeff_vector();
    let f = coefficient_matrices(two_j);
    let n = two_j + 1;
    let mut prob = SdpProblem::new(vec![n, n], Sense::Feasibility);
    for (i, fi) in f.iter().enumerate() {
        prob.add_constraint(vec![BlockTerm::new(0, fi.clone())], v[i]);
        let e0 = if i == 0 { 1.0 } else { 0.0 };
        prob.add_constraint(vec![BlockTerm::new(1, fi.clone())], e0 - v[i]);
    }
    Ok(prob)
}

/// Run the independent SDP-level check of a certificate.
pub fn verify_certificate(
    p: &TrigPoly,
    spin: SpinLabel,
    cert: &Certificate,
    tol: f64,
) -> Result<VerificationReport, RsetError> {
    let prob = membership_problem(p, spin)?;
    Ok(sdp::verify_blocks(&prob, &[cert.q.clone(), cert.s.clone()], tol))
}

fn check_degree(p: &TrigPoly, two_j: usize) -> Result<(), RsetError> {
    if p.effective_degree(0.0) > two_j {
        return Err(RsetError::DegreeTooHigh {
            degree: p.degree(),
            two_j,
        });
    }
    Ok(())
}

/// Diagnostics for a polynomial outside `R_J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    /// `"lower"` when `p < 0` somewhere, `"upper"` when `p > 1` somewhere.
    pub violated_bound: String,
    pub angle: f64,
    pub value: f64,
    pub farkas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub feasible: bool,
    pub certificate: Option<Certificate>,
    pub infeasibility: Option<InfeasibilityReport>,
    pub status: Status,
}

pub fn membership(p: &TrigPoly, spin: SpinLabel) -> Result<Membership, RsetError> {
    let prob = membership_problem(p, spin)?;
    let sol = sdp::solve(&prob, sdp::DEFAULT_TOL)?;
    match sol.status {
        Status::Optimal => Ok(Membership {
            feasible: true,
            certificate: Some(Certificate {
                q: sol.x[0].clone(),
                s: sol.x[1].clone(),
            }),
            infeasibility: None,
            status: sol.status,
        }),
        Status::Infeasible => {
            let e = p.extrema();
            let (bound, angle, value) = if e.min < -crate::trigpoly::RANGE_TOL {
                ("lower", e.argmin, e.min)
            } else {
                ("upper", e.argmax, e.max)
            };
            Ok(Membership {
                feasible: false,
                certificate: None,
                infeasibility: Some(InfeasibilityReport {
                    violated_bound: bound.to_string(),
                    angle,
                    value,
                    farkas: sol.farkas,
                }),
                status: sol.status,
            })
        }
        other => Err(RsetError::Solver(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiMembership {
    pub feasible: bool,
    /// One Gram matrix per outcome; the last is the slack block for
    /// `1 - sum_{a < n} p_a`.
    #[serde(with = "crate::json::cmat_vec")]
    pub certificates: Vec<CMat>,
    pub status: Status,
}

/// Check `sum_a p_a = 1` at the coefficient level.
pub fn check_normalization(polys: &[TrigPoly]) -> Result<(), RsetError> {
    if polys.is_empty() {
        return Err(RsetError::NoOutcomes);
    }
    let d = polys.iter().map(|p| p.degree()).max().unwrap_or(0);
    let sum = polys.iter().fold(TrigPoly::zero(d), |acc, p| acc + p.padded(d));
    let err = sum.coeff_distance(&TrigPoly::constant(d, 1.0));
    if err > NORMALIZATION_TOL {
        return Err(RsetError::NormalizationViolation(format!(
            "coefficients of the sum differ from the constant 1 by {err:e}"
        )));
    }
    Ok(())
}

/// Membership of an outcome tuple in `R_J^A`.
pub fn membership_multi(polys: &[TrigPoly], spin: SpinLabel) -> Result<MultiMembership, RsetError> {
    check_normalization(polys)?;
    let two_j = spin.two_j;
    for p in polys {
        check_degree(p, two_j)?;
    }
    let n = two_j + 1;
    let f = coefficient_matrices(two_j);
    let outcomes = polys.len();
    let mut prob = SdpProblem::new(vec![n; outcomes], Sense::Feasibility);
    let mut rest = TrigPoly::constant(two_j, 1.0);
    for (a, p) in polys.iter().enumerate().take(outcomes - 1) {
        let v = p.padded(two_j).coeff_vector();
        for (i, fi) in f.iter().enumerate() {
            prob.add_constraint(vec![BlockTerm::new(a, fi.clone())], v[i]);
        }
        rest = rest - p.padded(two_j);
    }
    let v = rest.coeff_vector();
    for (i, fi) in f.iter().enumerate() {
        prob.add_constraint(vec![BlockTerm::new(outcomes - 1, fi.clone())], v[i]);
    }
    let sol = sdp::solve(&prob, sdp::DEFAULT_TOL)?;
    match sol.status {
        Status::Optimal | Status::Infeasible => Ok(MultiMembership {
            feasible: sol.status == Status::Optimal,
            certificates: if sol.status == Status::Optimal {
                sol.x
            } else {
                Vec::new()
            },
            status: sol.status,
        }),
        other => Err(RsetError::Solver(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionOptimum {
    pub value: f64,
    pub optimizer: TrigPoly,
    pub certificate: Certificate,
    /// Upper bound from the dual solution.
    pub dual_bound: f64,
}

/// Maximize `n . (c, s)` over `R_J`.
pub fn optimize_direction(dir: &Direction, spin: SpinLabel) -> Result<DirectionOptimum, RsetError> {
    let two_j = spin.two_j;
    let expected = spin.coeff_len();
    if dir.n.len() != expected {
        return Err(RsetError::DirectionLength {
            got: dir.n.len(),
            expected,
        });
    }
    let n = two_j + 1;
    let f = coefficient_matrices(two_j);
    let mut obj = CMat::zeros(n, n);
    for (w, fi) in dir.n.iter().zip(&f) {
        obj += fi * C64::new(*w, 0.0);
    }
    let mut prob = SdpProblem::new(vec![n, n], Sense::Maximize).with_objective(vec![BlockTerm::new(0, obj)]);
    for (i, fi) in f.iter().enumerate() {
        let e0 = if i == 0 { 1.0 } else { 0.0 };
        prob.add_constraint(vec![BlockTerm::new(0, fi.clone()), BlockTerm::new(1, fi.clone())], e0);
    }
    let sol = sdp::solve(&prob, sdp::DEFAULT_TOL)?;
    if sol.status != Status::Optimal {
        return Err(RsetError::Solver(sol.status));
    }
    let certificate = Certificate {
        q: sol.x[0].clone(),
        s: sol.x[1].clone(),
    };
    Ok(DirectionOptimum {
        value: sol.objective,
        optimizer: certificate.polynomial(),
        certificate,
        dual_bound: sol.dual_objective,
    })
}

/// One direction of a boundary sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub phi: f64,
    /// Support value `max (cos phi v1 + sin phi v2) . x`.
    pub value: Option<f64>,
    /// Coefficient vector of the optimizer.
    pub point: Option<Vec<f64>>,
    /// `(v1 . x, v2 . x)` for the optimizer.
    pub projection: Option<(f64, f64)>,
    pub error: Option<String>,
}

/// Support function of `R_J` projected onto the plane spanned by `v1`, `v2`,
/// sampled at `num_angles` uniform angles in `[0, 2 pi)`.
pub fn boundary_sweep(
    v1: &Direction,
    v2: &Direction,
    spin: SpinLabel,
    num_angles: usize,
) -> Result<Vec<SweepPoint>, RsetError> {
    if num_angles < 3 {
        return Err(RsetError::TooFewAngles(num_angles));
    }
    let expected = spin.coeff_len();
    for v in [v1, v2] {
        if v.n.len() != expected {
            return Err(RsetError::DirectionLength {
                got: v.n.len(),
                expected,
            });
        }
    }
    let (n11, n22, n12) = (
        v1.n.iter().map(|x| x * x).sum::<f64>(),
        v2.n.iter().map(|x| x * x).sum::<f64>(),
        v1.n.iter().zip(&v2.n).map(|(x, y)| x * y).sum::<f64>(),
    );
    if n11 * n22 - n12 * n12 <= 1e-12 * n11.max(1.0) * n22.max(1.0) {
        return Err(RsetError::DependentDirections);
    }
    Ok(map_indexed(num_angles, |i| {
        let phi = 2.0 * PI * i as f64 / num_angles as f64;
        let dir = v1.combine(phi.cos(), v2, phi.sin());
        match optimize_direction(&dir, spin) {
            Ok(opt) => SweepPoint {
                phi,
                value: Some(opt.value),
                projection: Some((v1.value(&opt.optimizer), v2.value(&opt.optimizer))),
                point: Some(opt.optimizer.coeff_vector()),
                error: None,
            },
            Err(e) => SweepPoint {
                phi,
                value: None,
                point: None,
                projection: None,
                error: Some(e.to_string()),
            },
        }
    }))
}

/// Hermitian Toeplitz matrix with unit diagonal and `T_{jk} = x_{k-j}` above
/// it, where `point = (Re x_1, Im x_1, ..., Re x_d, Im x_d)`.
pub fn toeplitz_matrix(point: &[f64]) -> CMat {
    assert!(point.len().is_multiple_of(2), "point length must be even");
    let d = point.len() / 2;
    let x = |k: usize| c(point[2 * k - 2], point[2 * k - 1]);
    CMat::from_fn(d + 1, d + 1, |j, k| {
        if j == k {
            c(1.0, 0.0)
        } else if k > j {
            x(k - j)
        } else {
            x(j - k).conj()
        }
    })
}

pub fn toeplitz_min_eigenvalue(point: &[f64]) -> f64 {
    eigvalsh(&toeplitz_matrix(point))[0]
}

/// Whether `(1, point)` lies in the Caratheodory orbitope, tested through
/// the Toeplitz spectrahedron.
pub fn toeplitz_membership(point: &[f64]) -> bool {
    toeplitz_min_eigenvalue(point) >= -TOEPLITZ_TOL
}

/// Dual test of orbitope membership: `min_{e in R_J} e . (1, point)`, which
/// is nonnegative exactly for points of the orbitope.
pub fn orbitope_dual_value(point: &[f64]) -> Result<f64, RsetError> {
    assert!(point.len().is_multiple_of(2), "point length must be even");
    let d = point.len() / 2;
    let mut n = vec![-1.0];
    n.extend(point.iter().map(|x| -x));
    let opt = optimize_direction(&Direction::new(n), SpinLabel::new(d))?;
    Ok(-opt.value)
}
