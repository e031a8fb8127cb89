//! The quantum set `Q_J`: Born-rule realizations on `C^{2J+1}`.
//!
//! Conventions: `U_theta = e^{i theta Z}` with `Z = diag(J, J-1, ..., -J)`,
//! so matrix index `m` carries the eigenvalue `J - m`. A state `rho` and an
//! effect `E` produce `P(theta) = Tr(E U_theta rho U_theta^dagger)` whose
//! Fourier coefficients are
//!
//! ```text
//! a_k = sum_j rho_{j,j+k} E_{j+k,j},
//! ```
//!
//! i.e. `P` is the Gram polynomial of the Schur product `rho o E^T`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    c, clip_spectrum, eigvalsh, hermitian_error, hermitian_part, outer, positive_projector, top_eigvec, CMat, CVec,
    C64, I,
};
use crate::par::map_indexed;
use crate::rset::{gram_polynomial, Direction};
use crate::sdp::{self, BlockTerm, SdpError, SdpProblem, Sense, Status};
use crate::trigpoly::{circular_distance, fourier_project, wrap_angle, SpinLabel, TrigPoly, TrigPolyError};

/// Tolerance for state normalization and POVM validity.
pub const REALIZATION_TOL: f64 = 1e-10;
/// Absolute objective gain below which the see-saw stops.
pub const SEESAW_GAIN_TOL: f64 = 1e-10;
/// Round cap for one see-saw restart.
pub const SEESAW_MAX_ROUNDS: usize = 500;
/// Grid size used when checking a realization against a target polynomial.
pub const CHECK_GRID: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QsetError {
    #[error("state has length {got}, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error("state norm is {0}, expected 1")]
    StateNorm(f64),
    #[error("POVM element {index} has shape {rows}x{cols}, expected {dim}x{dim}")]
    EffectShape {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("POVM element {index} is not Hermitian (deviation {deviation:e})")]
    EffectNotHermitian { index: usize, deviation: f64 },
    #[error("POVM element {index} has spectrum [{min}, {max}] outside [0, 1]")]
    EffectRange { index: usize, min: f64, max: f64 },
    #[error("POVM elements sum to the identity only within {0:e}")]
    Completeness(f64),
    #[error("the POVM is empty")]
    EmptyPovm,
    #[error("outcome {outcome} out of range for {outcomes} outcomes")]
    Outcome { outcome: usize, outcomes: usize },
    #[error("direction has length {got}, expected {expected}")]
    DirectionLength { got: usize, expected: usize },
    #[error("at least one restart is required")]
    NoRestarts,
    #[error("objective decreased by {drop:e} in restart {restart}, round {round} ({step} step)")]
    NonMonotone {
        restart: usize,
        round: usize,
        step: &'static str,
        drop: f64,
    },
    #[error("effect step solver stopped with status {0:?}")]
    Solver(Status),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    TrigPoly(#[from] TrigPolyError),
    #[error("the analytic bound needs 2J >= 3, got 2J = {0}")]
    GapBoundSpin(usize),
    #[error("the face with angular separation {0} is empty")]
    EmptyFace(f64),
    #[error("polynomial is not a spin-1 extremal form: {0}")]
    NotExtremalForm(String),
    #[error("continuous approximation needs an integer spin J >= 1, got 2J = {0}")]
    ApproximationSpin(usize),
    #[error("window parameter n must be >= 1, got {0}")]
    Window(f64),
}

/// Diagonal of `U_theta` for the doubled spin `two_j`.
pub fn rotation_phases(two_j: usize, theta: f64) -> Vec<C64> {
    let j = two_j as f64 / 2.0;
    (0..=two_j)
        .map(|m| C64::from_polar(1.0, theta * (j - m as f64)))
        .collect()
}

/// Polynomial `Tr(E U_theta rho U_theta^dagger)` for any `rho` and `E`.
pub fn born_coefficients(rho: &CMat, e: &CMat) -> TrigPoly {
    gram_polynomial(&schur_gram(rho, e))
}

/// `rho o E^T`, whose band sums are the Fourier coefficients of the box.
pub fn schur_gram(rho: &CMat, e: &CMat) -> CMat {
    let n = rho.nrows();
    CMat::from_fn(n, n, |a, b| rho[(a, b)] * e[(b, a)])
}

/// A pure state and a POVM on `C^{2J+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumRealization {
    pub two_j: usize,
    #[serde(with = "crate::json::cvec")]
    pub psi: Vec<C64>,
    #[serde(with = "crate::json::cmat_vec")]
    pub povm: Vec<CMat>,
}

impl QuantumRealization {
    /// Build and validate.
    pub fn new(two_j: usize, psi: Vec<C64>, povm: Vec<CMat>) -> Result<Self, QsetError> {
        let r = QuantumRealization { two_j, psi, povm };
        r.validate()?;
        Ok(r)
    }

    /// Two-outcome realization `{E, I - E}`.
    pub fn binary(two_j: usize, psi: Vec<C64>, e: CMat) -> Result<Self, QsetError> {
        let n = two_j + 1;
        let rest = CMat::identity(n, n) - &e;
        Self::new(two_j, psi, vec![e, rest])
    }

    pub fn dim(&self) -> usize {
        self.two_j + 1
    }

    pub fn validate(&self) -> Result<(), QsetError> {
        let n = self.dim();
        if self.psi.len() != n {
            return Err(QsetError::StateLength {
                got: self.psi.len(),
                expected: n,
            });
        }
        let norm = self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > REALIZATION_TOL {
            return Err(QsetError::StateNorm(norm));
        }
        if self.povm.is_empty() {
            return Err(QsetError::EmptyPovm);
        }
        let mut sum = CMat::zeros(n, n);
        for (index, e) in self.povm.iter().enumerate() {
            if e.nrows() != n || e.ncols() != n {
                return Err(QsetError::EffectShape {
                    index,
                    rows: e.nrows(),
                    cols: e.ncols(),
                    dim: n,
                });
            }
            let deviation = hermitian_error(e);
            if deviation > REALIZATION_TOL {
                return Err(QsetError::EffectNotHermitian { index, deviation });
            }
            let ev = eigvalsh(&hermitian_part(e));
            let (min, max) = (ev[0], ev[n - 1]);
            if min < -REALIZATION_TOL || max > 1.0 + REALIZATION_TOL {
                return Err(QsetError::EffectRange { index, min, max });
            }
            sum += e;
        }
        let err = (sum - CMat::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if err > REALIZATION_TOL {
            return Err(QsetError::Completeness(err));
        }
        Ok(())
    }

    pub fn rho(&self) -> CMat {
        outer(&CVec::from_column_slice(&self.psi))
    }

    pub fn born_polynomial(&self, outcome: usize) -> Result<TrigPoly, QsetError> {
        let e = self.povm.get(outcome).ok_or(QsetError::Outcome {
            outcome,
            outcomes: self.povm.len(),
        })?;
        Ok(born_coefficients(&self.rho(), e))
    }

    pub fn born_polynomials(&self) -> Vec<TrigPoly> {
        let rho = self.rho();
        self.povm.iter().map(|e| born_coefficients(&rho, e)).collect()
    }

    /// Direct evaluation `<psi| U^dagger E_a U |psi>` at one angle.
    pub fn probability(&self, outcome: usize, theta: f64) -> f64 {
        let e = &self.povm[outcome];
        let ph = rotation_phases(self.two_j, theta);
        let v: Vec<C64> = self.psi.iter().zip(&ph).map(|(a, b)| a * b).collect();
        let n = v.len();
        let mut acc = c(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                acc += v[a].conj() * e[(a, b)] * v[b];
            }
        }
        acc.re
    }

    /// The same box on `C^{2J+2}`: indices keep their meaning and the new
    /// lowest-weight level is split evenly among the outcomes.
    pub fn lift_spin(&self) -> QuantumRealization {
        let n = self.dim();
        let outcomes = self.povm.len() as f64;
        let mut psi = self.psi.clone();
        psi.push(c(0.0, 0.0));
        let povm = self
            .povm
            .iter()
            .map(|e| {
                let mut big = CMat::zeros(n + 1, n + 1);
                big.view_mut((0, 0), (n, n)).copy_from(e);
                big[(n, n)] = c(1.0 / outcomes, 0.0);
                big
            })
            .collect();
        QuantumRealization {
            two_j: self.two_j + 1,
            psi,
            povm,
        }
    }

    /// Largest deviation between outcome `a` and `target` on a uniform grid.
    pub fn grid_error(&self, outcome: usize, target: &TrigPoly, points: usize) -> f64 {
        (0..points)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / points as f64;
                (self.probability(outcome, t) - target.evaluate(t)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// A density matrix and an effect; the box is `Tr(E U rho U^dagger)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurPair {
    #[serde(with = "crate::json::cmat")]
    pub rho: CMat,
    #[serde(with = "crate::json::cmat")]
    pub e: CMat,
}

impl SchurPair {
    /// The PSD Gram matrix `rho o E^T`.
    pub fn gram(&self) -> CMat {
        schur_gram(&self.rho, &self.e)
    }

    pub fn polynomial(&self) -> TrigPoly {
        born_coefficients(&self.rho, &self.e)
    }

    /// Pure-state realization from the top eigenvector of `rho`.
    pub fn realization(&self) -> Result<QuantumRealization, QsetError> {
        let (_, v) = top_eigvec(&self.rho);
        let two_j = self.rho.nrows() - 1;
        QuantumRealization::binary(two_j, v.iter().copied().collect(), self.e.clone())
    }
}

/// `w_0 = n_{c_0}` and `w_k = n_{c_k} + i n_{s_k}`; the functional is
/// `n . (c, s) = sum_{|k| <= d} w_k a_k` with `w_{-k} = conj(w_k)`.
pub fn direction_weights(dir: &Direction) -> Vec<C64> {
    let d = (dir.n.len() - 1) / 2;
    let mut w = vec![c(dir.n[0], 0.0)];
    for k in 1..=d {
        w.push(c(dir.n[2 * k - 1], dir.n[2 * k]));
    }
    w
}

fn weight_at(w: &[C64], k: i64) -> C64 {
    if k >= 0 {
        w[k as usize]
    } else {
        w[(-k) as usize].conj()
    }
}

/// `M[E] = W o E` with `W_{ab} = w_{a-b}`, so that `Tr(M[E] rho)` is the
/// functional evaluated on the box of `(rho, E)`.
pub fn effective_matrix(dir: &Direction, e: &CMat) -> CMat {
    let w = direction_weights(dir);
    let n = e.nrows();
    CMat::from_fn(n, n, |a, b| weight_at(&w, a as i64 - b as i64) * e[(a, b)])
}

/// `G[rho]` with `Tr(E G[rho]) = Tr(M[E] rho)`.
pub fn effect_objective(dir: &Direction, rho: &CMat) -> CMat {
    let w = direction_weights(dir);
    let n = rho.nrows();
    CMat::from_fn(n, n, |a, b| weight_at(&w, a as i64 - b as i64).conj() * rho[(a, b)])
}

fn objective(dir: &Direction, rho: &CMat, e: &CMat) -> f64 {
    crate::linalg::trace_product(&effective_matrix(dir, e), rho).re
}

/// How the effect half-step is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EffectStep {
    /// Projector onto the positive eigenspace of `G[rho]`, the exact
    /// maximizer of `Tr(E G)` over `0 <= E <= I`.
    #[default]
    Projector,
    /// The same problem passed to the interior-point solver.
    Sdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_rounds: usize,
    pub gain_tol: f64,
    pub effect_step: EffectStep,
    pub record_trace: bool,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            restarts: 20,
            seed: 0,
            max_rounds: SEESAW_MAX_ROUNDS,
            gain_tol: SEESAW_GAIN_TOL,
            effect_step: EffectStep::Projector,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub restart: usize,
    pub round: usize,
    pub step: String,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeesawResult {
    /// Best objective; a valid lower bound on the quantum maximum.
    pub value: f64,
    pub best_restart: usize,
    pub pair: SchurPair,
    pub polynomial: TrigPoly,
    pub restart_values: Vec<f64>,
    pub rounds: Vec<usize>,
    pub trace: Vec<TraceRow>,
}

struct RestartOutcome {
    value: f64,
    pair: SchurPair,
    rounds: usize,
    trace: Vec<TraceRow>,
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    let mut v = CVec::from_fn(n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let norm = v.norm();
    v /= c(norm, 0.0);
    v
}

fn random_effect(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let h = (&g + g.adjoint()) * c(0.25, 0.0) + CMat::identity(n, n) * c(0.5, 0.0);
    clip_spectrum(&h, 0.0, 1.0).0
}

/// Hermitian basis of `n x n` matrices used to pin `E + S = I`.
fn hermitian_basis(n: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let mut m = CMat::zeros(n, n);
        m[(j, j)] = c(1.0, 0.0);
        out.push(m);
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut m = CMat::zeros(n, n);
            m[(j, k)] = c(1.0, 0.0);
            m[(k, j)] = c(1.0, 0.0);
            out.push(m);
            let mut m = CMat::zeros(n, n);
            m[(j, k)] = I;
            m[(k, j)] = -I;
            out.push(m);
        }
    }
    out
}

fn sdp_effect_step(g: &CMat) -> Result<CMat, QsetError> {
    let n = g.nrows();
    let mut prob = SdpProblem::new(vec![n, n], Sense::Maximize).with_objective(vec![BlockTerm::new(0, g.clone())]);
    for b in hermitian_basis(n) {
        let rhs = b.trace().re;
        prob.add_constraint(vec![BlockTerm::new(0, b.clone()), BlockTerm::new(1, b)], rhs);
    }
    let sol = sdp::solve(&prob, sdp::DEFAULT_TOL)?;
    if sol.status != Status::Optimal {
        return Err(QsetError::Solver(sol.status));
    }
    Ok(clip_spectrum(&hermitian_part(&sol.x[0]), 0.0, 1.0).0)
}

fn run_restart(dir: &Direction, n: usize, opts: &SeesawOptions, restart: usize) -> Result<RestartOutcome, QsetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let psi = random_state(&mut rng, n);
    let mut rho = outer(&psi);
    let mut e = random_effect(&mut rng, n);
    let slack = match opts.effect_step {
        EffectStep::Projector => 1e-9,
        EffectStep::Sdp => 1e-6,
    };
    let mut value = objective(dir, &rho, &e);
    let mut trace = Vec::new();
    let mut log = |round: usize, step: &str, v: f64| {
        if opts.record_trace {
            trace.push(TraceRow {
                restart,
                round,
                step: step.to_string(),
                objective: v,
            });
        }
    };
    log(0, "init", value);
    let mut rounds = 0;
    for round in 1..=opts.max_rounds {
        rounds = round;
        let start = value;
        let g = effect_objective(dir, &rho);
        let e_new = match opts.effect_step {
            EffectStep::Projector => positive_projector(&g),
            EffectStep::Sdp => sdp_effect_step(&g)?,
        };
        let v_e = objective(dir, &rho, &e_new);
        if v_e < value - slack * value.abs().max(1.0) {
            return Err(QsetError::NonMonotone {
                restart,
                round,
                step: "effect",
                drop: value - v_e,
            });
        }
        e = e_new;
        value = v_e;
        log(round, "effect", value);
        let (_, v) = top_eigvec(&effective_matrix(dir, &e));
        let rho_new = outer(&v);
        let v_r = objective(dir, &rho_new, &e);
        if v_r < value - 1e-9 * value.abs().max(1.0) {
            return Err(QsetError::NonMonotone {
                restart,
                round,
                step: "state",
                drop: value - v_r,
            });
        }
        rho = rho_new;
        value = v_r;
        log(round, "state", value);
        if value - start < opts.gain_tol {
            break;
        }
    }
    Ok(RestartOutcome {
        value,
        pair: SchurPair { rho, e },
        rounds,
        trace,
    })
}

/// Alternating maximization of `n . (c, s)` over quantum boxes.
pub fn seesaw(dir: &Direction, spin: SpinLabel, opts: &SeesawOptions) -> Result<SeesawResult, QsetError> {
    let expected = spin.coeff_len();
    if dir.n.len() != expected {
        return Err(QsetError::DirectionLength {
            got: dir.n.len(),
            expected,
        });
    }
    if opts.restarts == 0 {
        return Err(QsetError::NoRestarts);
    }
    let n = spin.dim();
    let outcomes = map_indexed(opts.restarts, |r| run_restart(dir, n, opts, r));
    let mut runs = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        runs.push(o?);
    }
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let restart_values = runs.iter().map(|r| r.value).collect();
    let rounds = runs.iter().map(|r| r.rounds).collect();
    let trace = runs.iter().flat_map(|r| r.trace.iter().cloned()).collect();
    let pair = runs[best].pair.clone();
    Ok(SeesawResult {
        value: runs[best].value,
        best_restart: best,
        polynomial: pair.polynomial(),
        pair,
        restart_values,
        rounds,
        trace,
    })
}

/// Witness that the quantum maximum of `c_{2J-1} + s_{2J}` is `1/sqrt(3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    pub two_j: usize,
    pub beta: f64,
    #[serde(with = "crate::json::cmat")]
    pub e: CMat,
    #[serde(with = "crate::json::cmat")]
    pub rho: CMat,
    /// `Tr(M[E] rho)` for the gap functional.
    pub value: f64,
    pub e_min_eigenvalue: f64,
    pub e_max_eigenvalue: f64,
    pub rho_min_eigenvalue: f64,
    pub rho_trace: f64,
    pub verified: bool,
}

impl GapBound {
    pub fn pair(&self) -> SchurPair {
        SchurPair {
            rho: self.rho.clone(),
            e: self.e.clone(),
        }
    }

    pub fn polynomial(&self) -> TrigPoly {
        born_coefficients(&self.rho, &self.e)
    }
}

/// The optimal `4 x 4` effect and state, in the index order
/// `(0, 1, 2J-1, 2J)`.
pub fn optimal_corner_blocks() -> (CMat, CMat) {
    let s6 = 1.0 / 6f64.sqrt();
    let t = 1.0 / (2.0 * 3f64.sqrt());
    let h = 0.5;
    let r = c;
    let e = CMat::from_row_slice(
        4,
        4,
        &[
            r(h, 0.0),
            r(0.0, 0.0),
            r(s6, 0.0),
            r(0.0, t),
            r(0.0, 0.0),
            r(h, 0.0),
            r(0.0, t),
            r(s6, 0.0),
            r(s6, 0.0),
            r(0.0, -t),
            r(h, 0.0),
            r(0.0, 0.0),
            r(0.0, -t),
            r(s6, 0.0),
            r(0.0, 0.0),
            r(h, 0.0),
        ],
    );
    let v = [
        1.0 / 3f64.sqrt(),
        1.0 / 6f64.sqrt(),
        1.0 / 6f64.sqrt(),
        1.0 / 3f64.sqrt(),
    ];
    let rho = CMat::from_fn(4, 4, |a, b| c(v[a] * v[b], 0.0));
    (e, rho)
}

pub fn analytic_gap_bound(two_j: usize) -> Result<GapBound, QsetError> {
    if two_j < 3 {
        return Err(QsetError::GapBoundSpin(two_j));
    }
    let n = two_j + 1;
    let idx = [0, 1, two_j - 1, two_j];
    let (e4, r4) = optimal_corner_blocks();
    let mut e = CMat::zeros(n, n);
    let mut rho = CMat::zeros(n, n);
    for a in 0..4 {
        for b in 0..4 {
            e[(idx[a], idx[b])] = e4[(a, b)];
            rho[(idx[a], idx[b])] = r4[(a, b)];
        }
    }
    let dir = Direction::gap_functional(two_j);
    let value = objective(&dir, &rho, &e);
    let ee = eigvalsh(&e);
    let re = eigvalsh(&rho);
    let beta = 1.0 / 3f64.sqrt();
    let rho_trace = rho.trace().re;
    let verified = (value - beta).abs() <= 1e-12
        && ee[0] >= -1e-12
        && ee[n - 1] <= 1.0 + 1e-12
        && re[0] >= -1e-12
        && (rho_trace - 1.0).abs() <= 1e-12;
    Ok(GapBound {
        two_j,
        beta,
        e_min_eigenvalue: ee[0],
        e_max_eigenvalue: ee[n - 1],
        rho_min_eigenvalue: re[0],
        rho_trace,
        e,
        rho,
        value,
        verified,
    })
}

/// `f(x, y, z) = s + sqrt(s^2 - 4xz)` with `s = x + y + z`.
pub fn polytope_objective(p: [f64; 3]) -> f64 {
    let s = p[0] + p[1] + p[2];
    s + (s * s - 4.0 * p[0] * p[2]).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub from: [f64; 3],
    pub to: [f64; 3],
    /// Interior stationary points with their values.
    pub stationary: Vec<([f64; 3], f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeReport {
    pub value: f64,
    pub point: [f64; 3],
    pub vertices: Vec<([f64; 3], f64)>,
    pub edges: Vec<EdgeReport>,
}

const POLYTOPE_VERTICES: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.0, 0.25],
    [0.0, 0.25, 0.0],
    [0.25, 0.0, 0.0],
    [0.25, 0.0, 0.25],
];

/// Constraints `a . p <= b` describing `x, y, z >= 0, x + y <= 1/4, y + z <= 1/4`.
const POLYTOPE_FACETS: [([f64; 3], f64); 5] = [
    ([-1.0, 0.0, 0.0], 0.0),
    ([0.0, -1.0, 0.0], 0.0),
    ([0.0, 0.0, -1.0], 0.0),
    ([1.0, 1.0, 0.0], 0.25),
    ([0.0, 1.0, 1.0], 0.25),
];

fn active(p: &[f64; 3]) -> Vec<usize> {
    POLYTOPE_FACETS
        .iter()
        .enumerate()
        .filter(|(_, (a, b))| (a[0] * p[0] + a[1] * p[1] + a[2] * p[2] - b).abs() < 1e-15)
        .map(|(i, _)| i)
        .collect()
}

fn rank(rows: &[[f64; 3]]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    m.rank(1e-12)
}

/// Stationary points of `t -> f(A + t D)` on `(0, 1)`.
fn edge_stationary(a: [f64; 3], b: [f64; 3]) -> Vec<f64> {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let l0 = a[0] + a[1] + a[2];
    let l1 = d[0] + d[1] + d[2];
    // q(t) = L(t)^2 - 4 x(t) z(t)
    let q0 = l0 * l0 - 4.0 * a[0] * a[2];
    let q1 = 2.0 * l0 * l1 - 4.0 * (a[0] * d[2] + d[0] * a[2]);
    let q2 = l1 * l1 - 4.0 * d[0] * d[2];
    // f' = 0  <=>  q' = -2 L' sqrt(q); squared: q'^2 = 4 L'^2 q
    let ca = 4.0 * q2 * q2 - 4.0 * l1 * l1 * q2;
    let cb = 4.0 * q1 * q2 - 4.0 * l1 * l1 * q1;
    let cc = q1 * q1 - 4.0 * l1 * l1 * q0;
    let mut roots = Vec::new();
    if ca.abs() > 1e-15 {
        let disc = cb * cb - 4.0 * ca * cc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            roots.push((-cb + sq) / (2.0 * ca));
            roots.push((-cb - sq) / (2.0 * ca));
        }
    } else if cb.abs() > 1e-15 {
        roots.push(-cc / cb);
    }
    roots
        .into_iter()
        .filter(|&t| t > 1e-12 && t < 1.0 - 1e-12)
        .filter(|&t| {
            let q = q0 + q1 * t + q2 * t * t;
            let dq = q1 + 2.0 * q2 * t;
            q > 0.0 && dq * l1 <= 0.0 && (l1 + dq / (2.0 * q.sqrt())).abs() < 1e-9
        })
        .collect()
}

/// Exact maximization over the polytope by enumerating vertices and edges.
pub fn polytope_max() -> PolytopeReport {
    let vertices: Vec<([f64; 3], f64)> = POLYTOPE_VERTICES.iter().map(|&v| (v, polytope_objective(v))).collect();
    let mut edges = Vec::new();
    for (i, &a) in POLYTOPE_VERTICES.iter().enumerate() {
        for &b in &POLYTOPE_VERTICES[i + 1..] {
            let ai = active(&a);
            let common: Vec<[f64; 3]> = ai
                .iter()
                .filter(|k| active(&b).contains(k))
                .map(|&k| POLYTOPE_FACETS[k].0)
                .collect();
            if rank(&common) != 2 {
                continue;
            }
            let stationary = edge_stationary(a, b)
                .into_iter()
                .map(|t| {
                    let p = [
                        a[0] + t * (b[0] - a[0]),
                        a[1] + t * (b[1] - a[1]),
                        a[2] + t * (b[2] - a[2]),
                    ];
                    (p, polytope_objective(p))
                })
                .collect();
            edges.push(EdgeReport {
                from: a,
                to: b,
                stationary,
            });
        }
    }
    let mut best = vertices[0];
    for cand in vertices.iter().chain(edges.iter().flat_map(|e| e.stationary.iter())) {
        if cand.1 > best.1 {
            best = *cand;
        }
    }
    PolytopeReport {
        value: best.1,
        point: best.0,
        vertices,
        edges,
    }
}

/// Dense grid maximum of the polytope objective with spacing `step`.
pub fn polytope_grid_max(step: f64) -> (f64, [f64; 3]) {
    let m = (0.25 / step).round() as usize;
    let rows = map_indexed(m + 1, |i| {
        let x = i as f64 * step;
        let mut best = (f64::NEG_INFINITY, [0.0; 3]);
        for j in 0..=m {
            let y = j as f64 * step;
            if x + y > 0.25 + 1e-12 {
                break;
            }
            for k in 0..=m {
                let z = k as f64 * step;
                if y + z > 0.25 + 1e-12 {
                    break;
                }
                let v = polytope_objective([x, y, z]);
                if v > best.0 {
                    best = (v, [x, y, z]);
                }
            }
        }
        best
    });
    rows.into_iter()
        .fold((f64::NEG_INFINITY, [0.0; 3]), |a, b| if b.0 > a.0 { b } else { a })
}

const ANGLE_TOL: f64 = 1e-9;

fn sin_squared(theta0: f64) -> TrigPoly {
    TrigPoly::harmonic(2, 0.5, 2, -0.5, 0.0).shifted(theta0)
}

/// Extremal points of the face of `R_1` with `p(theta0) = 0` and
/// `p(theta1) = 1`.
pub fn r1_face_extremals(theta0: f64, theta1: f64) -> Result<Vec<TrigPoly>, QsetError> {
    let delta = wrap_angle(theta1 - theta0);
    let near = |x: f64| circular_distance(delta, x) < ANGLE_TOL;
    if near(PI / 2.0) || near(1.5 * PI) {
        return Ok(vec![sin_squared(theta0)]);
    }
    if !(PI / 2.0..=1.5 * PI).contains(&delta) {
        return Err(QsetError::EmptyFace(delta));
    }
    if near(PI) {
        // sin^4(theta/2) = (1 - cos theta)^2 / 4
        let p = TrigPoly::new(2, vec![0.375, -0.5, 0.125], vec![0.0, 0.0])?;
        let q = TrigPoly::new(2, vec![0.625, -0.5, -0.125], vec![0.0, 0.0])?;
        return Ok(vec![p.shifted(theta0), q.shifted(theta0)]);
    }
    let second_zero = if delta < PI { 2.0 * delta } else { 2.0 * (delta - PI) };
    let one_minus_cos = |phi: f64| TrigPoly::harmonic(2, 1.0, 1, -1.0, 0.0).shifted(phi);
    let prod = one_minus_cos(0.0).product(&one_minus_cos(second_zero));
    let f = TrigPoly::from_nonneg_complex(2, |k| prod.a(k as i64))?;
    let scale = 1.0 / f.extrema().max;
    let p = (f * scale).shifted(theta0);
    // the tilde partner 1 - p(theta0 + theta1 - theta)
    let tilde = p.reflected(theta0 + theta1).one_minus();
    Ok(vec![p, tilde])
}

/// Spin-1 realization `psi = (b, a, b)`, `E = |U_{theta1} psi><U_{theta1} psi|`
/// of `p(theta) = (a^2 + 2 b^2 cos(theta - theta1))^2`, where
/// `b^2 = 1 / (2 (1 - cos(theta0')))` for the partner zero `theta0' = 2 theta1`.
pub fn r1_family_realization(beta_sq: f64, theta1: f64) -> Result<QuantumRealization, QsetError> {
    let alpha_sq = (1.0 - 2.0 * beta_sq).max(0.0);
    let (b, a) = (beta_sq.sqrt(), alpha_sq.sqrt());
    let psi = vec![c(b, 0.0), c(a, 0.0), c(b, 0.0)];
    let ph = rotation_phases(2, theta1);
    let phi = CVec::from_iterator(3, psi.iter().zip(&ph).map(|(x, y)| x * y));
    QuantumRealization::binary(2, psi, outer(&phi))
}

/// `psi = (|1> - |-1>)/sqrt 2`, `E = |phi><phi|` with `phi = (|1> + |-1>)/sqrt 2`;
/// the box is `sin^2 theta`.
pub fn sin_squared_realization() -> QuantumRealization {
    let h = 1.0 / 2f64.sqrt();
    let phi = CVec::from_vec(vec![c(h, 0.0), c(0.0, 0.0), c(h, 0.0)]);
    QuantumRealization::binary(2, vec![c(h, 0.0), c(0.0, 0.0), c(-h, 0.0)], outer(&phi)).expect("valid by construction")
}

/// `psi = (|1> + sqrt2 |0> + |-1>)/2` with the matching rank-one effect; the
/// box is `sin^4(theta/2)`.
pub fn sin_fourth_half_realization() -> QuantumRealization {
    let r = 2f64.sqrt() / 2.0;
    let phi = CVec::from_vec(vec![c(-0.5, 0.0), c(r, 0.0), c(-0.5, 0.0)]);
    QuantumRealization::binary(2, vec![c(0.5, 0.0), c(r, 0.0), c(0.5, 0.0)], outer(&phi))
        .expect("valid by construction")
}

fn fit_family(p: &TrigPoly) -> Option<(QuantumRealization, f64)> {
    if p.effective_degree(1e-12) > 2 || p.degree() < 2 {
        return None;
    }
    let a2 = p.a(2);
    let beta_sq = a2.norm().sqrt();
    if beta_sq <= 1e-12 || 1.0 - 2.0 * beta_sq < -1e-9 {
        return None;
    }
    let base = -a2.arg() / 2.0;
    let mut best: Option<(QuantumRealization, f64)> = None;
    for theta1 in [base, base + PI] {
        let Ok(r) = r1_family_realization(beta_sq, theta1) else {
            continue;
        };
        let err = r.grid_error(0, p, CHECK_GRID);
        if best.as_ref().is_none_or(|b| err < b.1) {
            best = Some((r, err));
        }
    }
    best
}

/// Quantum realization of an extremal spin-1 box (the lemma's forms, their
/// rotations and their complements).
pub fn r1_quantum_realize(p: &TrigPoly) -> Result<QuantumRealization, QsetError> {
    if p.effective_degree(1e-12) > 2 {
        return Err(QsetError::NotExtremalForm(format!("degree {} exceeds 2", p.degree())));
    }
    let p = p.padded(p.degree().max(2));
    if p.degree() > 2 {
        return Err(QsetError::NotExtremalForm(format!("degree {} exceeds 2", p.degree())));
    }
    let ext = p.extrema();
    if ext.min.abs() > 1e-8 || (ext.max - 1.0).abs() > 1e-8 {
        return Err(QsetError::NotExtremalForm(format!(
            "range is [{}, {}], expected [0, 1]",
            ext.min, ext.max
        )));
    }
    let mut best_err = f64::INFINITY;
    if let Some((r, err)) = fit_family(&p) {
        if err <= 1e-9 {
            return Ok(r);
        }
        best_err = err;
    }
    if let Some((r, err)) = fit_family(&p.one_minus()) {
        if err <= 1e-9 {
            let povm = vec![r.povm[1].clone(), r.povm[0].clone()];
            return Ok(QuantumRealization { povm, ..r });
        }
        best_err = best_err.min(err);
    }
    Err(QsetError::NotExtremalForm(format!(
        "closest spin-1 construction deviates by {best_err:e}"
    )))
}

/// A finite-spin quantum box approximating a continuous one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousApproximation {
    pub realization: QuantumRealization,
    pub n: f64,
    /// `1 - ||Pi_J f_n||^2`.
    pub epsilon: f64,
    pub sqrt_epsilon: f64,
    /// Sup of `|f - window average of f|` on the check grid.
    pub averaging_error: f64,
    /// `sqrt(epsilon) + averaging_error`.
    pub bound: f64,
    /// Sup of `|f - P^J|` on the check grid.
    pub measured_error: f64,
    /// Largest eigenvalue displacement when clipping the effect into `[0, I]`.
    pub clipping: f64,
}

/// Overlaps `<phi_j | f_n>` of the normalized indicator of `[-1/n, 1/n]`
/// with the Fourier modes `e^{i j theta}`.
pub fn window_overlaps(n: f64, max_mode: i64) -> Vec<f64> {
    (-max_mode..=max_mode)
        .map(|j| {
            if j == 0 {
                1.0 / (PI * n).sqrt()
            } else {
                let jf = j as f64;
                (n / PI).sqrt() * (jf / n).sin() / jf
            }
        })
        .collect()
}

fn window_average<F: Fn(f64) -> f64>(f: &F, theta: f64, n: f64) -> f64 {
    // composite Simpson on [theta - 1/n, theta + 1/n]
    let panels = 256;
    let h = 2.0 / (n * panels as f64);
    let a = theta - 1.0 / n;
    let mut acc = f(a) + f(a + 2.0 / n);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0 * n / 2.0
}

/// Approximate the continuous box `f` on `C^{2J+1}` (integer `J`) with the
/// truncated window state of half-width `1/n`.
pub fn approximate_continuous<F>(f: F, two_j: usize, n: f64) -> Result<ContinuousApproximation, QsetError>
where
    F: Fn(f64) -> f64 + Sync,
{
    if two_j < 2 || two_j % 2 == 1 {
        return Err(QsetError::ApproximationSpin(two_j));
    }
    if n.is_nan() || n < 1.0 {
        return Err(QsetError::Window(n));
    }
    let jj = (two_j / 2) as i64;
    let dim = two_j + 1;
    let g = window_overlaps(n, jj);
    let kept: f64 = g.iter().map(|x| x * x).sum();
    let epsilon = (1.0 - kept).max(0.0);
    // index m <-> Fourier mode j = m - J (eigenvalue -j of Z)
    let psi: Vec<C64> = g.iter().map(|&x| c(x / kept.sqrt(), 0.0)).collect();
    let fp = fourier_project(&f, two_j)?;
    let e = CMat::from_fn(dim, dim, |a, b| fp.a(a as i64 - b as i64));
    let (e, clipping) = clip_spectrum(&e, 0.0, 1.0);
    let realization = QuantumRealization::binary(two_j, psi, e)?;
    let grid: Vec<f64> = (0..CHECK_GRID)
        .map(|i| 2.0 * PI * i as f64 / CHECK_GRID as f64)
        .collect();
    let box_poly = realization.born_polynomial(0)?;
    let measured_error = grid
        .iter()
        .map(|&t| (f(t) - box_poly.evaluate(t)).abs())
        .fold(0.0, f64::max);
    let averaging_error = map_indexed(grid.len(), |i| (f(grid[i]) - window_average(&f, grid[i], n)).abs())
        .into_iter()
        .fold(0.0, f64::max);
    let sqrt_epsilon = epsilon.sqrt();
    Ok(ContinuousApproximation {
        realization,
        n,
        epsilon,
        sqrt_epsilon,
        averaging_error,
        bound: sqrt_epsilon + averaging_error,
        measured_error,
        clipping,
    })
}
