//! Dense primal-dual interior-point solver for semidefinite programs over
//! Hermitian PSD blocks.
//!
//! Problems have the primal form
//!
//! ```text
//! maximize   sum_b <C_b, X_b>
//! subject to sum_b <A_{i,b}, X_b> = b_i   (i = 1..m)
//!            X_b PSD
//! ```
//!
//! with `<A, X> = Tr(A X)` for Hermitian `A`, `X`. The dual is
//! `minimize b^T y` subject to `S_b = sum_i y_i A_{i,b} - C_b PSD`.
//!
//! Complex blocks are solved through the real symmetric embedding
//! `[[Re X, -Im X], [Im X, Re X]]`; blocks whose data are entirely real are
//! solved directly as real symmetric blocks, which loses nothing because the
//! real part of any optimal Hermitian solution is again optimal. Each
//! iteration uses the Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{eigvalsh, hermitian_error, real_embed, real_unembed, sym_eigh, CMat, RMat, C64};

/// Default convergence tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 200;
/// Feasibility problems are declared infeasible above this slack.
pub const INFEASIBLE_SLACK: f64 = 1e-7;
/// Newton systems with a larger condition number abort the solve.
pub const MAX_CONDITION: f64 = 1e18;

const HERMITIAN_TOL: f64 = 1e-12;
const STEP_FACTOR: f64 = 0.98;
const DIVERGENCE: f64 = 1e12;
const FEASIBILITY_TRACE_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdpError {
    #[error("problem has no blocks")]
    NoBlocks,
    #[error("term refers to block {block}, but only {count} blocks exist")]
    BlockIndex { block: usize, count: usize },
    #[error("matrix for block {block} is {rows}x{cols}, expected {dim}x{dim}")]
    Dimension {
        block: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("coefficient matrix for block {block} is not Hermitian (deviation {deviation:e})")]
    NotHermitian { block: usize, deviation: f64 },
    #[error("tolerance {0:e} outside [1e-12, 1e-4]")]
    Tolerance(f64),
    #[error("non-finite problem data")]
    NonFinite,
}

/// A Hermitian coefficient matrix attached to one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    pub block: usize,
    #[serde(with = "crate::json::cmat")]
    pub matrix: CMat,
}

impl BlockTerm {
    pub fn new(block: usize, matrix: CMat) -> Self {
        BlockTerm { block, matrix }
    }
}

/// `sum_b <A_b, X_b> = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<BlockTerm>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<BlockTerm>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    IllConditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: Status,
    /// Primal blocks `X_b`.
    #[serde(with = "crate::json::cmat_vec")]
    pub x: Vec<CMat>,
    /// Dual slack blocks `S_b = sum_i y_i A_{i,b} - C_b`.
    #[serde(with = "crate::json::cmat_vec")]
    pub dual_slack: Vec<CMat>,
    /// Dual multipliers, one per constraint.
    pub y: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// For infeasible feasibility problems: `y` with `sum_i y_i A_i` PSD and
    /// `b^T y < 0`, which rules out every PSD solution.
    pub farkas: Option<Vec<f64>>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, sense: Sense) -> Self {
        SdpProblem {
            blocks,
            objective: Vec::new(),
            constraints: Vec::new(),
            sense,
        }
    }

    pub fn with_objective(mut self, terms: Vec<BlockTerm>) -> Self {
        self.objective = terms;
        self
    }

    pub fn add_constraint(&mut self, terms: Vec<BlockTerm>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.blocks.is_empty() {
            return Err(SdpError::NoBlocks);
        }
        let all = self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.terms.iter()));
        for t in all {
            let dim = *self.blocks.get(t.block).ok_or(SdpError::BlockIndex {
                block: t.block,
                count: self.blocks.len(),
            })?;
            if t.matrix.nrows() != dim || t.matrix.ncols() != dim {
                return Err(SdpError::Dimension {
                    block: t.block,
                    rows: t.matrix.nrows(),
                    cols: t.matrix.ncols(),
                    dim,
                });
            }
            if t.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(SdpError::NonFinite);
            }
            let dev = hermitian_error(&t.matrix);
            let scale = 1.0 + t.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if dev > HERMITIAN_TOL * scale {
                return Err(SdpError::NotHermitian {
                    block: t.block,
                    deviation: dev,
                });
            }
        }
        if self.constraints.iter().any(|c| !c.rhs.is_finite()) {
            return Err(SdpError::NonFinite);
        }
        Ok(())
    }

    /// `sum_b <A_{i,b}, X_b>` for every constraint.
    pub fn constraint_values(&self, x: &[CMat]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|t| herm_inner(&t.matrix, &x[t.block])).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[CMat]) -> f64 {
        self.objective.iter().map(|t| herm_inner(&t.matrix, &x[t.block])).sum()
    }

    /// `sum_i y_i A_{i,b} - C_b` for every block.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<CMat> {
        let mut s: Vec<CMat> = self.blocks.iter().map(|&n| CMat::zeros(n, n)).collect();
        for t in &self.objective {
            s[t.block] -= &t.matrix;
        }
        for (c, &yi) in self.constraints.iter().zip(y) {
            for t in &c.terms {
                s[t.block] += &t.matrix * C64::new(yi, 0.0);
            }
        }
        s
    }
}

/// `Re Tr(A X)` for Hermitian arguments.
pub fn herm_inner(a: &CMat, x: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            acc += (a[(j, k)] * x[(k, j)]).re;
        }
    }
    acc
}

/// Solve with the given tolerance and the default iteration cap.
pub fn solve(problem: &SdpProblem, tol: f64) -> Result<SdpSolution, SdpError> {
    solve_with(
        problem,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    if !(1e-12..=1e-4).contains(&opts.tol) {
        return Err(SdpError::Tolerance(opts.tol));
    }
    problem.validate()?;
    match problem.sense {
        Sense::Feasibility => Ok(solve_feasibility(problem, opts)),
        Sense::Maximize => {
            let sol = solve_maximize(problem, opts);
            if sol.status == Status::Optimal {
                return Ok(sol);
            }
            // Classify the failure: an infeasible primal is reported as such.
            let feas = solve_feasibility(problem, opts);
            if feas.status == Status::Infeasible {
                return Ok(SdpSolution {
                    status: Status::Infeasible,
                    farkas: feas.farkas,
                    ..sol
                });
            }
            Ok(sol)
        }
    }
}

fn solve_maximize(problem: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let internal = Internal::build(problem);
    let run = internal.run(opts);
    let x = internal.lift_blocks(&run.x);
    let y = run.y.as_slice().to_vec();
    let dual_slack = problem.dual_slack(&y);
    let objective = problem.objective_value(&x);
    let dual_objective: f64 = problem.constraints.iter().zip(&y).map(|(c, yi)| c.rhs * yi).sum();
    SdpSolution {
        status: run.status,
        x,
        dual_slack,
        y,
        objective,
        dual_objective,
        gap: dual_objective - objective,
        primal_residual: run.primal_residual,
        dual_residual: run.dual_residual,
        iterations: run.iterations,
        farkas: None,
    }
}

/// Solve `maximize -t - eps Tr(X')` over `X' = X + t I PSD`, `t >= 0`,
/// `A(X) = b`. The small trace weight keeps the dual strictly feasible
/// without moving the optimal `t`.
fn solve_feasibility(problem: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let n_blocks = problem.blocks.len();
    let mut aug = SdpProblem::new(problem.blocks.clone(), Sense::Maximize);
    aug.blocks.push(1);
    let t_block = n_blocks;
    for (b, &n) in problem.blocks.iter().enumerate() {
        aug.objective.push(BlockTerm::new(
            b,
            CMat::identity(n, n) * C64::new(-FEASIBILITY_TRACE_WEIGHT, 0.0),
        ));
    }
    aug.objective
        .push(BlockTerm::new(t_block, CMat::from_element(1, 1, C64::new(-1.0, 0.0))));
    for c in &problem.constraints {
        let tau: f64 = c.terms.iter().map(|t| t.matrix.trace().re).sum();
        let mut terms = c.terms.clone();
        terms.push(BlockTerm::new(t_block, CMat::from_element(1, 1, C64::new(-tau, 0.0))));
        aug.add_constraint(terms, c.rhs);
    }

    // An empty affine space is caught up front: the augmented problem is
    // always feasible only when `A(X) = b` has some solution.
    if let Some(ray) = affine_infeasibility(problem) {
        let x: Vec<CMat> = problem.blocks.iter().map(|&n| CMat::zeros(n, n)).collect();
        return SdpSolution {
            status: Status::Infeasible,
            dual_slack: problem.dual_slack(&ray),
            y: ray.clone(),
            objective: f64::NEG_INFINITY,
            dual_objective: f64::NEG_INFINITY,
            gap: f64::NAN,
            primal_residual: f64::INFINITY,
            dual_residual: 0.0,
            iterations: 0,
            farkas: Some(ray),
            x,
        };
    }

    let internal = Internal::build(&aug);
    let run = internal.run(opts);
    let lifted = internal.lift_blocks(&run.x);
    let t = lifted[t_block][(0, 0)].re;
    let x: Vec<CMat> = lifted[..n_blocks]
        .iter()
        .map(|m| m - CMat::identity(m.nrows(), m.nrows()) * C64::new(t, 0.0))
        .collect();
    let y = run.y.as_slice().to_vec();
    let values = problem.constraint_values(&x);
    let primal_residual = values
        .iter()
        .zip(&problem.constraints)
        .map(|(v, c)| (v - c.rhs).abs() / (1.0 + c.rhs.abs()))
        .fold(0.0, f64::max);
    let converged = matches!(run.status, Status::Optimal);
    let status = if t > INFEASIBLE_SLACK && (converged || run.dual_objective < -INFEASIBLE_SLACK) {
        Status::Infeasible
    } else if converged {
        Status::Optimal
    } else if t <= INFEASIBLE_SLACK && primal_residual <= INFEASIBLE_SLACK {
        // The slack fell below the infeasibility threshold before the
        // auxiliary problem fully converged, which happens for boundary
        // points whose certificates are rank deficient. The recovered
        // point is feasible up to a `t` shift of the spectrum.
        Status::Optimal
    } else {
        run.status
    };
    let farkas = (status == Status::Infeasible).then(|| y.clone());
    let dual_objective: f64 = problem.constraints.iter().zip(&y).map(|(c, yi)| c.rhs * yi).sum();
    SdpSolution {
        status,
        dual_slack: problem.dual_slack(&y),
        y,
        objective: -t,
        dual_objective,
        gap: run.gap,
        primal_residual,
        dual_residual: run.dual_residual,
        iterations: run.iterations,
        farkas,
        x,
    }
}

/// If `A(X) = b` has no Hermitian solution at all, return `y` with
/// `A^T y = 0` and `b^T y = -1`.
fn affine_infeasibility(problem: &SdpProblem) -> Option<Vec<f64>> {
    let m = problem.constraints.len();
    if m == 0 {
        return None;
    }
    // Gram matrix of the constraint functionals in the real inner product
    // on Hermitian matrices: <A_i, A_j> = Re Tr(A_i A_j).
    let mut gram = RMat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut v = 0.0;
            for ti in &problem.constraints[i].terms {
                for tj in &problem.constraints[j].terms {
                    if ti.block == tj.block {
                        v += herm_inner(&ti.matrix, &tj.matrix);
                    }
                }
            }
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let b = DVector::from_iterator(m, problem.constraints.iter().map(|c| c.rhs));
    let (vals, vecs) = sym_eigh(&gram);
    let top = vals.last().copied().unwrap_or(0.0).max(1.0);
    let mut best: Option<Vec<f64>> = None;
    let mut best_score = 0.0;
    for (k, &v) in vals.iter().enumerate() {
        if v.abs() > 1e-10 * top {
            continue;
        }
        let u = vecs.column(k);
        let proj = u.dot(&b);
        let score = proj.abs() / (1.0 + b.norm());
        if score > 1e-9 && score > best_score {
            best_score = score;
            let scale = -1.0 / proj;
            best = Some(u.iter().map(|x| x * scale).collect());
        }
    }
    best
}

/// Independent check of a candidate primal (and optionally dual) solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `|<A_i, X> - b_i| / (1 + |b_i|)` per constraint.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub min_eigenvalues: Vec<f64>,
    pub hermitian_errors: Vec<f64>,
    pub dual_min_eigenvalues: Option<Vec<f64>>,
    pub duality_gap: Option<f64>,
    pub primal_ok: bool,
    pub dual_ok: bool,
    pub passed: bool,
}

/// Check primal blocks against a problem without trusting any solver state.
pub fn verify_blocks(problem: &SdpProblem, x: &[CMat], tol: f64) -> VerificationReport {
    let shape_ok = x.len() == problem.blocks.len()
        && x.iter()
            .zip(&problem.blocks)
            .all(|(m, &n)| m.nrows() == n && m.ncols() == n);
    if !shape_ok {
        return VerificationReport {
            residuals: Vec::new(),
            max_residual: f64::INFINITY,
            min_eigenvalues: Vec::new(),
            hermitian_errors: Vec::new(),
            dual_min_eigenvalues: None,
            duality_gap: None,
            primal_ok: false,
            dual_ok: false,
            passed: false,
        };
    }
    let values = problem.constraint_values(x);
    let residuals: Vec<f64> = values
        .iter()
        .zip(&problem.constraints)
        .map(|(v, c)| (v - c.rhs).abs() / (1.0 + c.rhs.abs()))
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let hermitian_errors: Vec<f64> = x.iter().map(hermitian_error).collect();
    let min_eigenvalues: Vec<f64> = x.iter().map(|m| eigvalsh(m).first().copied().unwrap_or(0.0)).collect();
    let primal_ok =
        max_residual <= tol && hermitian_errors.iter().all(|&e| e <= tol) && min_eigenvalues.iter().all(|&e| e >= -tol);
    VerificationReport {
        residuals,
        max_residual,
        min_eigenvalues,
        hermitian_errors,
        dual_min_eigenvalues: None,
        duality_gap: None,
        primal_ok,
        dual_ok: true,
        passed: primal_ok,
    }
}

/// Check a solver answer: primal feasibility always, plus dual feasibility
/// and the duality gap for optimization problems.
pub fn verify_solution(problem: &SdpProblem, solution: &SdpSolution, tol: f64) -> VerificationReport {
    let mut report = verify_blocks(problem, &solution.x, tol);
    if problem.sense == Sense::Maximize && solution.y.len() == problem.constraints.len() {
        let slack = problem.dual_slack(&solution.y);
        let c_scale = 1.0 + problem.objective.iter().map(|t| t.matrix.norm()).fold(0.0, f64::max);
        let mins: Vec<f64> = slack
            .iter()
            .map(|m| eigvalsh(m).first().copied().unwrap_or(0.0))
            .collect();
        let primal = problem.objective_value(&solution.x);
        let dual: f64 = problem
            .constraints
            .iter()
            .zip(&solution.y)
            .map(|(c, y)| c.rhs * y)
            .sum();
        let gap = dual - primal;
        report.dual_ok = mins.iter().all(|&e| e >= -tol * c_scale) && gap.abs() <= tol * (1.0 + primal.abs());
        report.dual_min_eigenvalues = Some(mins);
        report.duality_gap = Some(gap);
        report.passed = report.primal_ok && report.dual_ok;
    }
    report
}

// ---------------------------------------------------------------------------
// Internal real-symmetric formulation.

struct Internal {
    /// Embedded dimension of each block.
    dims: Vec<usize>,
    /// Whether each block is the embedding of a complex block.
    complex: Vec<bool>,
    c: Vec<RMat>,
    /// `a[i][b]`, absent when constraint `i` does not touch block `b`.
    a: Vec<Vec<Option<RMat>>>,
    b: DVector<f64>,
}

struct Run {
    status: Status,
    x: Vec<RMat>,
    y: DVector<f64>,
    primal_residual: f64,
    dual_residual: f64,
    dual_objective: f64,
    gap: f64,
    iterations: usize,
}

type Blocks = Vec<RMat>;

fn block_is_real(problem: &SdpProblem, b: usize) -> bool {
    problem
        .objective
        .iter()
        .chain(problem.constraints.iter().flat_map(|c| c.terms.iter()))
        .filter(|t| t.block == b)
        .all(|t| t.matrix.iter().all(|z| z.im == 0.0))
}

fn embed(m: &CMat, complex: bool) -> RMat {
    if complex {
        real_embed(m) * 0.5
    } else {
        let re = m.map(|z| z.re);
        (&re + re.transpose()) * 0.5
    }
}

fn inner(a: &RMat, b: &RMat) -> f64 {
    a.dot(b)
}

fn blocks_inner(a: &[RMat], b: &[RMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| inner(x, y)).sum()
}

fn sym(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

/// Largest `alpha` with `x + alpha dx` PSD (infinity if unbounded).
fn max_step(x: &RMat, dx: &RMat) -> Option<f64> {
    let l = x.clone().cholesky()?.unpack();
    let linv_dx = l.solve_lower_triangular(dx)?;
    let z = l.solve_lower_triangular(&linv_dx.transpose())?;
    let zmin = sym(&z)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Some(if zmin < 0.0 { -1.0 / zmin } else { f64::INFINITY })
}

struct Scaling {
    g: RMat,
    g_inv: RMat,
    w: RMat,
    lambda: Vec<f64>,
}

fn nt_scaling(x: &RMat, s: &RMat) -> Option<Scaling> {
    let lx = x.clone().cholesky()?.unpack();
    let ls = s.clone().cholesky()?.unpack();
    let svd = (ls.transpose() * &lx).svd(true, true);
    let v = svd.v_t?.transpose();
    let d = svd.singular_values;
    if d.iter().any(|&x| x.is_nan() || x <= 0.0) {
        return None;
    }
    let n = d.len();
    let d_isqrt = RMat::from_diagonal(&DVector::from_iterator(n, d.iter().map(|x| 1.0 / x.sqrt())));
    let d_sqrt = RMat::from_diagonal(&DVector::from_iterator(n, d.iter().map(|x| x.sqrt())));
    let g = &lx * &v * d_isqrt;
    let lx_inv = lx.solve_lower_triangular(&RMat::identity(n, n))?;
    let g_inv = d_sqrt * v.transpose() * lx_inv;
    let w = &g * g.transpose();
    Some(Scaling {
        g,
        g_inv,
        w,
        lambda: d.iter().copied().collect(),
    })
}

impl Internal {
    fn build(problem: &SdpProblem) -> Self {
        let complex: Vec<bool> = (0..problem.blocks.len()).map(|b| !block_is_real(problem, b)).collect();
        let dims: Vec<usize> = problem
            .blocks
            .iter()
            .zip(&complex)
            .map(|(&n, &cx)| if cx { 2 * n } else { n })
            .collect();
        let mut c: Vec<RMat> = dims.iter().map(|&n| RMat::zeros(n, n)).collect();
        for t in &problem.objective {
            c[t.block] += embed(&t.matrix, complex[t.block]);
        }
        let a = problem
            .constraints
            .iter()
            .map(|con| {
                let mut row: Vec<Option<RMat>> = vec![None; dims.len()];
                for t in &con.terms {
                    let e = embed(&t.matrix, complex[t.block]);
                    row[t.block] = Some(match row[t.block].take() {
                        Some(prev) => prev + e,
                        None => e,
                    });
                }
                row
            })
            .collect();
        let b = DVector::from_iterator(problem.constraints.len(), problem.constraints.iter().map(|c| c.rhs));
        Internal { dims, complex, c, a, b }
    }

    fn lift_blocks(&self, x: &[RMat]) -> Vec<CMat> {
        x.iter()
            .zip(&self.complex)
            .map(|(m, &cx)| {
                if cx {
                    real_unembed(m)
                } else {
                    let s = sym(m);
                    s.map(|v| C64::new(v, 0.0))
                }
            })
            .collect()
    }

    fn apply_a(&self, x: &[RMat]) -> DVector<f64> {
        DVector::from_iterator(
            self.a.len(),
            self.a.iter().map(|row| {
                row.iter()
                    .zip(x)
                    .filter_map(|(ab, xb)| ab.as_ref().map(|ab| inner(ab, xb)))
                    .sum()
            }),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.dims.iter().map(|&n| RMat::zeros(n, n)).collect();
        for (row, &yi) in self.a.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for (o, ab) in out.iter_mut().zip(row) {
                if let Some(ab) = ab {
                    *o += ab * yi;
                }
            }
        }
        out
    }

    fn run(&self, opts: &SolverOptions) -> Run {
        let m = self.a.len();
        let n_tot: f64 = self.dims.iter().sum::<usize>() as f64;
        let b_norm = self.b.norm();
        let c_norm = self.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
        let b_inf = self.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let mut x: Blocks = self
            .dims
            .iter()
            .map(|&n| RMat::identity(n, n) * (1.0 + b_norm))
            .collect();
        let mut s: Blocks = self
            .dims
            .iter()
            .map(|&n| RMat::identity(n, n) * (1.0 + c_norm))
            .collect();
        let mut y = DVector::zeros(m);

        for iter in 0..=opts.max_iterations {
            let rp = &self.b - self.apply_a(&x);
            let aty = self.apply_at(&y);
            let rd: Blocks = (0..x.len()).map(|k| &self.c[k] + &s[k] - &aty[k]).collect();
            let pobj = blocks_inner(&self.c, &x);
            let dobj = self.b.dot(&y);
            let xs = blocks_inner(&x, &s);
            let mu = xs / n_tot;
            let pinf = rp
                .iter()
                .zip(self.b.iter())
                .map(|(r, bi)| r.abs() / (1.0 + bi.abs()))
                .fold(0.0, f64::max);
            let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
            let gap = (pobj - dobj).abs().max(xs);
            let rel_gap = gap / (1.0 + pobj.abs());

            let finish = |status: Status, x: Blocks, y: DVector<f64>, iterations: usize| Run {
                status,
                x,
                y,
                primal_residual: pinf,
                dual_residual: dinf,
                dual_objective: dobj,
                gap: dobj - pobj,
                iterations,
            };

            if pinf <= opts.tol && dinf <= opts.tol && rel_gap <= opts.tol {
                return finish(Status::Optimal, x, y, iter);
            }
            if iter == opts.max_iterations {
                return finish(Status::MaxIterations, x, y, iter);
            }
            let x_size = x.iter().map(|b| b.norm()).fold(0.0, f64::max);
            if x_size > DIVERGENCE * (1.0 + b_inf) && dinf <= opts.tol.sqrt() {
                return finish(Status::Unbounded, x, y, iter);
            }
            if y.norm() > DIVERGENCE * (1.0 + c_norm) && pinf <= opts.tol.sqrt() {
                // A growing dual with a consistent primal only happens for
                // feasible problems whose value is unbounded below in the dual.
                return finish(Status::Unbounded, x, y, iter);
            }
            if y.norm() > DIVERGENCE * (1.0 + c_norm) {
                return finish(Status::Infeasible, x, y, iter);
            }

            let mut scal = Vec::with_capacity(x.len());
            for k in 0..x.len() {
                match nt_scaling(&x[k], &s[k]) {
                    Some(sc) => scal.push(sc),
                    None => return finish(Status::IllConditioned, x, y, iter),
                }
            }

            // Schur complement M_ij = <A_i, W A_j W>.
            let wa: Vec<Vec<Option<RMat>>> = self
                .a
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&scal)
                        .map(|(ab, sc)| ab.as_ref().map(|ab| &sc.w * ab * &sc.w))
                        .collect()
                })
                .collect();
            let mut mm = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let mut v = 0.0;
                    for (ai, waj) in self.a[i].iter().zip(&wa[j]) {
                        if let (Some(ai), Some(waj)) = (ai, waj) {
                            v += inner(ai, waj);
                        }
                    }
                    mm[(i, j)] = v;
                    mm[(j, i)] = v;
                }
            }
            let eig = mm.clone().symmetric_eigenvalues();
            let (emin, emax) = eig
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
            if m > 0 && (emin <= 0.0 || emax / emin > MAX_CONDITION) {
                return finish(Status::IllConditioned, x, y, iter);
            }
            let chol = match mm.cholesky() {
                Some(ch) => ch,
                None if m == 0 => DMatrix::<f64>::identity(0, 0).cholesky().unwrap(),
                None => return finish(Status::IllConditioned, x, y, iter),
            };
            let wrdw: Blocks = (0..x.len()).map(|k| &scal[k].w * &rd[k] * &scal[k].w).collect();

            let direction = |rc: &Blocks| -> (Blocks, DVector<f64>, Blocks) {
                let tmp: Blocks = (0..x.len()).map(|k| &rc[k] + &wrdw[k]).collect();
                let rhs = self.apply_a(&tmp) - &rp;
                let dy = chol.solve(&rhs);
                let atdy = self.apply_at(&dy);
                let ds: Blocks = (0..x.len()).map(|k| &atdy[k] - &rd[k]).collect();
                let dx: Blocks = (0..x.len())
                    .map(|k| sym(&(&rc[k] - &scal[k].w * &ds[k] * &scal[k].w)))
                    .collect();
                (dx, dy, ds)
            };
            let steps = |dx: &Blocks, ds: &Blocks| -> Option<(f64, f64)> {
                let mut ap = f64::INFINITY;
                let mut ad = f64::INFINITY;
                for k in 0..x.len() {
                    ap = ap.min(max_step(&x[k], &dx[k])?);
                    ad = ad.min(max_step(&s[k], &ds[k])?);
                }
                Some((ap, ad))
            };

            // Predictor.
            let rc_aff: Blocks = x.iter().map(|xb| -xb).collect();
            let (dx_a, _, ds_a) = direction(&rc_aff);
            let Some((ap_a, ad_a)) = steps(&dx_a, &ds_a) else {
                return finish(Status::IllConditioned, x, y, iter);
            };
            let (ap_a, ad_a) = (ap_a.min(1.0), ad_a.min(1.0));
            let mut mu_aff = 0.0;
            for k in 0..x.len() {
                mu_aff += inner(&(&x[k] + &dx_a[k] * ap_a), &(&s[k] + &ds_a[k] * ad_a));
            }
            mu_aff /= n_tot;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let mut rc: Blocks = Vec::with_capacity(x.len());
            for k in 0..x.len() {
                let sc = &scal[k];
                let dxt = &sc.g_inv * &dx_a[k] * sc.g_inv.transpose();
                let dst = sc.g.transpose() * &ds_a[k] * &sc.g;
                let corr = sym(&(dxt * dst));
                let n = sc.lambda.len();
                let t = RMat::from_fn(n, n, |i, j| {
                    let diag = if i == j {
                        sigma * mu - sc.lambda[i] * sc.lambda[i]
                    } else {
                        0.0
                    };
                    2.0 * (diag - corr[(i, j)]) / (sc.lambda[i] + sc.lambda[j])
                });
                rc.push(&sc.g * t * sc.g.transpose());
            }
            let (dx, dy, ds) = direction(&rc);
            let Some((ap, ad)) = steps(&dx, &ds) else {
                return finish(Status::IllConditioned, x, y, iter);
            };
            let ap = (STEP_FACTOR * ap).min(1.0);
            let ad = (STEP_FACTOR * ad).min(1.0);
            for k in 0..x.len() {
                x[k] = sym(&(&x[k] + &dx[k] * ap));
                s[k] = sym(&(&s[k] + &ds[k] * ad));
            }
            y += dy * ad;
        }
        unreachable!("loop returns at the iteration cap")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re};

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| re(x))))
    }

    fn trace_one(n: usize, obj: CMat) -> SdpProblem {
        let mut p = SdpProblem::new(vec![n], Sense::Maximize).with_objective(vec![BlockTerm::new(0, obj)]);
        p.add_constraint(vec![BlockTerm::new(0, CMat::identity(n, n))], 1.0);
        p
    }

    #[test]
    fn spectral_maximum() {
        let sol = solve(&trace_one(3, diag(&[3.0, 1.0, -1.0])), 1e-9).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-7, "{}", sol.objective);
        let rep = verify_solution(&trace_one(3, diag(&[3.0, 1.0, -1.0])), &sol, 1e-7);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn complex_spectral_maximum() {
        let h = CMat::from_row_slice(2, 2, &[re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)]);
        let sol = solve(&trace_one(2, h), 1e-9).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn scalar_block() {
        // maximize x subject to x + s = 1 with x, s >= 0.
        let mut p = SdpProblem::new(vec![1, 1], Sense::Maximize).with_objective(vec![BlockTerm::new(0, diag(&[1.0]))]);
        p.add_constraint(
            vec![BlockTerm::new(0, diag(&[1.0])), BlockTerm::new(1, diag(&[1.0]))],
            1.0,
        );
        let sol = solve(&p, 1e-9).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-8);
        assert!(sol.dual_objective >= sol.objective - 1e-9);
    }

    #[test]
    fn feasibility_and_infeasibility() {
        let mut p = SdpProblem::new(vec![2], Sense::Feasibility);
        p.add_constraint(vec![BlockTerm::new(0, diag(&[1.0, 0.0]))], 1.0);
        p.add_constraint(vec![BlockTerm::new(0, diag(&[0.0, 1.0]))], 1.0);
        let off = CMat::from_row_slice(2, 2, &[re(0.0), re(0.5), re(0.5), re(0.0)]);
        p.add_constraint(vec![BlockTerm::new(0, off.clone())], 0.5);
        let sol = solve(&p, 1e-9).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(verify_blocks(&p, &sol.x, 1e-7).passed);

        let mut q = SdpProblem::new(vec![2], Sense::Feasibility);
        q.add_constraint(vec![BlockTerm::new(0, diag(&[1.0, 0.0]))], 1.0);
        q.add_constraint(vec![BlockTerm::new(0, diag(&[0.0, 1.0]))], 1.0);
        q.add_constraint(vec![BlockTerm::new(0, off)], 2.0);
        let sol = solve(&q, 1e-9).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
        let y = sol.farkas.unwrap();
        let s = q.dual_slack(&y);
        assert!(eigvalsh(&s[0])[0] >= -1e-5);
        let by: f64 = q.constraints.iter().zip(&y).map(|(c, y)| c.rhs * y).sum();
        assert!(by < 0.0);
    }

    #[test]
    fn inconsistent_affine_constraints() {
        let mut p = SdpProblem::new(vec![2], Sense::Feasibility);
        p.add_constraint(vec![BlockTerm::new(0, CMat::identity(2, 2))], 1.0);
        p.add_constraint(vec![BlockTerm::new(0, CMat::identity(2, 2))], 2.0);
        let sol = solve(&p, 1e-9).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)]);
        assert!(matches!(
            solve(&trace_one(2, bad), 1e-9),
            Err(SdpError::NotHermitian { .. })
        ));
        assert!(matches!(
            solve(&trace_one(2, diag(&[1.0, 0.0])), 1e-2),
            Err(SdpError::Tolerance(_))
        ));
        assert!(matches!(
            solve(&SdpProblem::new(vec![], Sense::Maximize), 1e-9),
            Err(SdpError::NoBlocks)
        ));
    }

    #[test]
    fn verify_detects_sign_flip() {
        let p = trace_one(2, diag(&[1.0, 0.0]));
        assert!(verify_blocks(&p, &[diag(&[0.5, 0.5])], 1e-12).passed);
        assert!(!verify_blocks(&p, &[diag(&[1.5, -0.5])], 1e-12).passed);
    }

    #[test]
    fn deterministic() {
        let p = trace_one(3, diag(&[0.3, 2.0, -1.0]));
        let a = solve(&p, 1e-9).unwrap();
        let b = solve(&p, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip() {
        let p = trace_one(2, diag(&[1.0, 2.0]));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<SdpProblem>(&s).unwrap(), p);
    }
}
