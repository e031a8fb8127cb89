//! Two-party rotation-box behaviors and the multipartite Nagata evaluator.
//!
//! A behavior assigns to each outcome pair `(a, b)` with `a, b = +-1` a
//! bivariate polynomial `P(a, b | alpha, beta) = sum_ij M_ij f_i(alpha) f_j(beta)`
//! on the basis `f = (1, cos, sin)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::trigpoly::TrigPoly;

pub type Coeffs = [[f64; 3]; 3];

/// Outcome pairs in storage order.
pub const OUTCOME_PAIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BellError {
    #[error("outcome must be +1 or -1, got {0}")]
    Outcome(i8),
    #[error("local box has degree {0}, expected at most 1")]
    Degree(usize),
    #[error("conditioning marginal {0:e} is below 1e-9")]
    ZeroMarginal(f64),
    #[error("tensor has {got} entries, expected 3^{parties} = {expected}")]
    TensorShape {
        parties: usize,
        got: usize,
        expected: usize,
    },
    #[error("party count must be between 1 and 5, got {0}")]
    Parties(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    A,
    B,
}

fn basis(t: f64) -> [f64; 3] {
    [1.0, t.cos(), t.sin()]
}

fn pair_index(a: i8, b: i8) -> Result<usize, BellError> {
    let ia = match a {
        1 => 0,
        -1 => 1,
        other => return Err(BellError::Outcome(other)),
    };
    let ib = match b {
        1 => 0,
        -1 => 1,
        other => return Err(BellError::Outcome(other)),
    };
    Ok(2 * ia + ib)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    /// Coefficient matrices in the order of [`OUTCOME_PAIRS`]; row index is
    /// Alice's basis function, column index Bob's.
    pub coeffs: [Coeffs; 4],
}

fn outer(u: [f64; 3], v: [f64; 3]) -> Coeffs {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = u[i] * v[j];
        }
    }
    m
}

impl Behavior {
    /// The product of two local two-outcome boxes given by `P_A(+1|.)` and
    /// `P_B(+1|.)` of degree at most 1.
    pub fn product(pa: &TrigPoly, pb: &TrigPoly) -> Result<Self, BellError> {
        let loc = |p: &TrigPoly, sign: i8| -> Result<[f64; 3], BellError> {
            if p.two_j() > 1 {
                return Err(BellError::Degree(p.two_j()));
            }
            let p = p.padded(1);
            let v = [p.c_k(0), p.c_k(1), p.s_k(1)];
            Ok(if sign == 1 { v } else { [1.0 - v[0], -v[1], -v[2]] })
        };
        let mut coeffs = [[[0.0; 3]; 3]; 4];
        for (k, &(a, b)) in OUTCOME_PAIRS.iter().enumerate() {
            coeffs[k] = outer(loc(pa, a)?, loc(pb, b)?);
        }
        Ok(Behavior { coeffs })
    }

    pub fn probability(&self, a: i8, b: i8, alpha: f64, beta: f64) -> Result<f64, BellError> {
        let m = &self.coeffs[pair_index(a, b)?];
        let (fa, fb) = (basis(alpha), basis(beta));
        Ok((0..3)
            .map(|i| (0..3).map(|j| m[i][j] * fa[i] * fb[j]).sum::<f64>())
            .sum())
    }

    /// Coefficients of `sum_{a,b} P - 1`; zero for a normalized behavior.
    pub fn normalization_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = self.coeffs.iter().map(|m| m[i][j]).sum();
                let target = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// Largest coefficient of the other party's angle that survives in a
    /// marginal.
    pub fn signalling(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in [1, -1] {
            let ma: Vec<&Coeffs> = [1, -1]
                .iter()
                .map(|&b| &self.coeffs[pair_index(a, b).unwrap()])
                .collect();
            let mb: Vec<&Coeffs> = [1, -1]
                .iter()
                .map(|&b| &self.coeffs[pair_index(b, a).unwrap()])
                .collect();
            for i in 0..3 {
                for j in 1..3 {
                    worst = worst.max((ma[0][i][j] + ma[1][i][j]).abs());
                    worst = worst.max((mb[0][j][i] + mb[1][j][i]).abs());
                }
            }
        }
        worst
    }

    pub fn is_no_signalling(&self, tol: f64) -> bool {
        self.signalling() <= tol
    }

    /// Smallest value on an `n x n` angle grid over all outcome pairs.
    pub fn grid_minimum(&self, n: usize) -> f64 {
        let mut worst = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64);
                for &(a, b) in &OUTCOME_PAIRS {
                    worst = worst.min(self.probability(a, b, x, y).unwrap());
                }
            }
        }
        worst
    }

    /// Local marginal of one party, read from the constant component of the
    /// other party's basis.
    pub fn marginal(&self, party: Party, outcome: i8) -> Result<TrigPoly, BellError> {
        let mut v = [0.0; 3];
        for other in [1, -1] {
            let m = match party {
                Party::A => &self.coeffs[pair_index(outcome, other)?],
                Party::B => &self.coeffs[pair_index(other, outcome)?],
            };
            for (i, vi) in v.iter_mut().enumerate() {
                *vi += match party {
                    Party::A => m[i][0],
                    Party::B => m[0][i],
                };
            }
        }
        Ok(TrigPoly::new(1, vec![v[0], v[1]], vec![v[2]]).expect("degree-1 lengths"))
    }

    /// `P^A_{b,beta}(a | alpha)` when `party = B` (condition on Bob), or the
    /// symmetric box for Alice's outcome when `party = A`. The returned box
    /// is a polynomial in the free party's angle for the fixed `outcome` of
    /// the free party.
    pub fn conditional_box(
        &self,
        party: Party,
        cond_outcome: i8,
        angle: f64,
        outcome: i8,
    ) -> Result<TrigPoly, BellError> {
        let marginal = self.marginal(party, cond_outcome)?.evaluate(angle);
        if marginal <= 1e-9 {
            return Err(BellError::ZeroMarginal(marginal));
        }
        let f = basis(angle);
        let mut v = [0.0; 3];
        match party {
            Party::B => {
                let m = &self.coeffs[pair_index(outcome, cond_outcome)?];
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi = (0..3).map(|j| m[i][j] * f[j]).sum::<f64>() / marginal;
                }
            }
            Party::A => {
                let m = &self.coeffs[pair_index(cond_outcome, outcome)?];
                for (j, vj) in v.iter_mut().enumerate() {
                    *vj = (0..3).map(|i| m[i][j] * f[i]).sum::<f64>() / marginal;
                }
            }
        }
        Ok(TrigPoly::new(1, vec![v[0], v[1]], vec![v[2]]).expect("degree-1 lengths"))
    }
}

/// A degree-1 two-outcome box `P(+1|alpha)` is unbiased iff `c_0 = 1/2`.
pub fn is_unbiased(local: &TrigPoly) -> Result<bool, BellError> {
    let d = local.effective_degree(1e-12);
    if d > 1 {
        return Err(BellError::Degree(d));
    }
    Ok((local.c_k(0) - 0.5).abs() <= 1e-10)
}

/// `P_PR(a, b | x, y) = delta_{(1 - ab)/2, xy} / 2`.
pub fn pr_box(a: i8, b: i8, x: u8, y: u8) -> f64 {
    let parity = u8::from(a * b == -1);
    if parity == x * y {
        0.5
    } else {
        0.0
    }
}

/// `Q(1 | alpha) = (1 + cos alpha) / 2`, `Q(0 | alpha) = (1 - cos alpha) / 2`.
fn input_coeffs(x: u8) -> [f64; 3] {
    if x == 1 {
        [0.5, 0.5, 0.0]
    } else {
        [0.5, -0.5, 0.0]
    }
}

/// Feed each party's angle into a classical bit `x` through
/// `Q(x | angle)` and then into a PR box.
pub fn pr_wiring_behavior() -> Behavior {
    let mut coeffs = [[[0.0; 3]; 3]; 4];
    for (k, &(a, b)) in OUTCOME_PAIRS.iter().enumerate() {
        for x in 0..2u8 {
            for y in 0..2u8 {
                let w = pr_box(a, b, x, y);
                let o = outer(input_coeffs(x), input_coeffs(y));
                for i in 0..3 {
                    for j in 0..3 {
                        coeffs[k][i][j] += w * o[i][j];
                    }
                }
            }
        }
    }
    Behavior { coeffs }
}

/// The angle that deterministically selects input bit `x`.
pub fn wiring_angle(x: u8) -> f64 {
    if x == 1 {
        0.0
    } else {
        PI
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalBiasRow {
    pub beta: f64,
    pub c0: f64,
    pub expected: f64,
    pub unbiased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrWiringReport {
    pub behavior: Behavior,
    pub signalling: f64,
    pub no_signalling: bool,
    pub normalization_error: f64,
    pub grid_minimum: f64,
    /// All conditional boxes on a grid of conditioning angles are degree-1
    /// and nonnegative.
    pub conditional_boxes_ok: bool,
    pub pr_table_error: f64,
    pub marginal_error: f64,
    /// `c_0` of `P^A_{-1,beta}(+1 | .)` against `(1 + cos beta) / 4`.
    pub bias_rows: Vec<ConditionalBiasRow>,
    pub bias_error: f64,
    pub fails_unbiasedness: bool,
}

pub fn pr_wiring_report() -> PrWiringReport {
    let behavior = pr_wiring_behavior();
    let mut pr_table_error: f64 = 0.0;
    for x in 0..2u8 {
        for y in 0..2u8 {
            for &(a, b) in &OUTCOME_PAIRS {
                let p = behavior.probability(a, b, wiring_angle(x), wiring_angle(y)).unwrap();
                pr_table_error = pr_table_error.max((p - pr_box(a, b, x, y)).abs());
            }
        }
    }
    let mut marginal_error: f64 = 0.0;
    for party in [Party::A, Party::B] {
        for o in [1, -1] {
            let m = behavior.marginal(party, o).unwrap();
            marginal_error = marginal_error.max(m.coeff_distance(&TrigPoly::constant(1, 0.5)));
        }
    }
    let mut conditional_boxes_ok = true;
    for k in 0..16 {
        let angle = 2.0 * PI * k as f64 / 16.0;
        for party in [Party::A, Party::B] {
            for cond in [1, -1] {
                for o in [1, -1] {
                    match behavior.conditional_box(party, cond, angle, o) {
                        Ok(p) => conditional_boxes_ok &= p.two_j() <= 1 && p.extrema().min >= -1e-12,
                        Err(_) => conditional_boxes_ok = false,
                    }
                }
            }
        }
    }
    let bias_rows: Vec<ConditionalBiasRow> = (0..=8)
        .map(|k| {
            let beta = PI * k as f64 / 8.0;
            let p = behavior.conditional_box(Party::B, -1, beta, 1).unwrap();
            ConditionalBiasRow {
                beta,
                c0: p.c_k(0),
                expected: (1.0 + beta.cos()) / 4.0,
                unbiased: is_unbiased(&p).unwrap(),
            }
        })
        .collect();
    let bias_error = bias_rows.iter().map(|r| (r.c0 - r.expected).abs()).fold(0.0, f64::max);
    let fails_unbiasedness = bias_rows.iter().any(|r| !r.unbiased);
    PrWiringReport {
        signalling: behavior.signalling(),
        no_signalling: behavior.is_no_signalling(1e-12),
        normalization_error: behavior.normalization_error(),
        grid_minimum: behavior.grid_minimum(64),
        conditional_boxes_ok,
        pr_table_error,
        marginal_error,
        bias_rows,
        bias_error,
        fails_unbiasedness,
        behavior,
    }
}

/// Full correlation tensor `T_{i_1 ... i_N}` over components `(x, y, z)`,
/// flattened row-major (first index slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTensor {
    pub parties: usize,
    pub t: Vec<f64>,
}

impl CorrelationTensor {
    pub fn new(parties: usize, t: Vec<f64>) -> Result<Self, BellError> {
        if !(1..=5).contains(&parties) {
            return Err(BellError::Parties(parties));
        }
        let expected = 3usize.pow(parties as u32);
        if t.len() != expected {
            return Err(BellError::TensorShape {
                parties,
                got: t.len(),
                expected,
            });
        }
        Ok(CorrelationTensor { parties, t })
    }

    /// `T . (n_1 (x) ... (x) n_N)` with planar unit vectors at `angles`.
    pub fn contract(&self, angles: &[f64]) -> f64 {
        let vecs: Vec<[f64; 3]> = angles.iter().map(|a| [a.cos(), a.sin(), 0.0]).collect();
        self.contract_vectors(&vecs)
    }

    fn contract_vectors(&self, vecs: &[[f64; 3]]) -> f64 {
        let mut acc = self.t.clone();
        // contract the last index repeatedly
        for v in vecs.iter().rev() {
            acc = acc.chunks(3).map(|c| c[0] * v[0] + c[1] * v[1] + c[2] * v[2]).collect();
        }
        acc[0]
    }

    /// `sum T^2` over indices restricted to the planar components.
    pub fn planar_square_sum(&self) -> f64 {
        let n = self.parties;
        (0..1usize << n)
            .map(|mask| {
                let idx = (0..n).fold(0, |acc, k| 3 * acc + ((mask >> (n - 1 - k)) & 1));
                self.t[idx] * self.t[idx]
            })
            .sum()
    }
}

/// Coordinate ascent: for fixed other angles the contraction is
/// `A cos a_j + B sin a_j`, maximized at `atan2(B, A)`.
fn ascend(t: &CorrelationTensor, mut angles: Vec<f64>) -> (f64, Vec<f64>) {
    let mut value = t.contract(&angles);
    for _ in 0..10_000 {
        for j in 0..angles.len() {
            let mut vecs: Vec<[f64; 3]> = angles.iter().map(|a| [a.cos(), a.sin(), 0.0]).collect();
            vecs[j] = [1.0, 0.0, 0.0];
            let a = t.contract_vectors(&vecs);
            vecs[j] = [0.0, 1.0, 0.0];
            let b = t.contract_vectors(&vecs);
            if a.hypot(b) > 0.0 {
                angles[j] = b.atan2(a);
            }
        }
        let next = t.contract(&angles);
        let gain = next - value;
        value = next;
        if gain <= 1e-14 {
            break;
        }
    }
    (value, angles)
}

fn grid_angles(index: usize, parties: usize, per_axis: usize) -> Vec<f64> {
    let mut rest = index;
    let mut out = vec![0.0; parties];
    for k in (0..parties).rev() {
        out[k] = 2.0 * PI * (rest % per_axis) as f64 / per_axis as f64;
        rest /= per_axis;
    }
    out
}

/// Largest contraction value over a uniform grid with `per_axis` points per party.
pub fn grid_maximum(t: &CorrelationTensor, per_axis: usize) -> f64 {
    let total = per_axis.pow(t.parties as u32);
    crate::par::map_indexed(total, |i| t.contract(&grid_angles(i, t.parties, per_axis)))
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NagataReport {
    pub parties: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
    pub t_max: f64,
    pub argmax: Vec<f64>,
    /// Grid maximum used as a validation oracle (64 points per party, up to
    /// three parties).
    pub validation_grid_max: Option<f64>,
}

/// Number of coarse-grid seeds that are refined for `N <= 3`.
pub const NAGATA_GRID_SEEDS: usize = 16;
/// Random starts for `N > 3`.
pub const NAGATA_RANDOM_STARTS: usize = 500;

/// Evaluate `pi^N sum_{i in {x,y}^N} T^2 <= 4^N T_max`.
pub fn nagata_inequality(t: &CorrelationTensor, seed: u64) -> NagataReport {
    let n = t.parties;
    let starts: Vec<Vec<f64>> = if n <= 3 {
        let per_axis: usize = 32;
        let total = per_axis.pow(n as u32);
        let vals = crate::par::map_indexed(total, |i| t.contract(&grid_angles(i, n, per_axis)));
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .take(NAGATA_GRID_SEEDS)
            .map(|i| grid_angles(i, n, per_axis))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..NAGATA_RANDOM_STARTS)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
            .collect()
    };
    let results = crate::par::map_indexed(starts.len(), |i| ascend(t, starts[i].clone()));
    let (mut t_max, mut argmax) = (f64::NEG_INFINITY, vec![0.0; n]);
    for (v, a) in results {
        if v > t_max {
            t_max = v;
            argmax = a;
        }
    }
    let lhs = PI.powi(n as i32) * t.planar_square_sum();
    let rhs = 4f64.powi(n as i32) * t_max;
    NagataReport {
        parties: n,
        lhs,
        rhs,
        violated: lhs > rhs + 1e-9,
        t_max,
        argmax: argmax.into_iter().map(crate::trigpoly::wrap_angle).collect(),
        validation_grid_max: (n <= 3).then(|| grid_maximum(t, 64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbiased_examples() {
        assert!(is_unbiased(&TrigPoly::harmonic(1, 0.5, 1, 0.5, 0.0)).unwrap());
        assert!(is_unbiased(&TrigPoly::constant(1, 0.5)).unwrap());
        let beta: f64 = PI / 3.0;
        let f = TrigPoly::harmonic(1, (1.0 + beta.cos()) / 4.0, 1, (1.0 + beta.cos()) / 4.0, 0.0);
        assert!(!is_unbiased(&f).unwrap());
        let deg2 = TrigPoly::harmonic(2, 0.5, 2, 0.2, 0.0);
        assert!(is_unbiased(&deg2).is_err());
        assert!(is_unbiased(&TrigPoly::constant(2, 0.5)).unwrap());
    }

    #[test]
    fn product_behavior_conditions_to_factor() {
        let pa = TrigPoly::harmonic(1, 0.5, 1, 0.5, 0.0);
        let pb = TrigPoly::harmonic(1, 0.5, 1, 0.1, 0.3);
        let beh = Behavior::product(&pa, &pb).unwrap();
        assert!(beh.is_no_signalling(1e-15));
        assert!(beh.normalization_error() < 1e-15);
        let cond = beh.conditional_box(Party::B, 1, 0.7, 1).unwrap();
        assert!(cond.coeff_distance(&pa) < 1e-14);
        let cond = beh.conditional_box(Party::A, -1, 1.3, 1).unwrap();
        assert!(cond.coeff_distance(&pb) < 1e-14);
        assert!(matches!(
            beh.conditional_box(Party::A, 1, PI, 1),
            Err(BellError::ZeroMarginal(_))
        ));
    }

    #[test]
    fn pr_wiring_properties() {
        let r = pr_wiring_report();
        assert!(r.no_signalling && r.signalling < 1e-12);
        assert!(r.normalization_error < 1e-15);
        assert!(r.grid_minimum >= -1e-10);
        assert!(r.conditional_boxes_ok);
        assert_eq!(r.pr_table_error, 0.0);
        assert!(r.marginal_error < 1e-15);
        assert!(r.bias_error < 1e-12);
        assert!(r.fails_unbiasedness);
        assert!((r.bias_rows[0].c0 - 0.5).abs() < 1e-12 && r.bias_rows[0].unbiased);
        assert!(r.bias_rows[8].c0.abs() < 1e-12);
    }

    #[test]
    fn pr_conditional_is_twice_joint() {
        let beh = pr_wiring_behavior();
        let (al, be) = (0.4, 1.9);
        let p = beh.conditional_box(Party::B, -1, be, 1).unwrap();
        let joint = beh.probability(1, -1, al, be).unwrap();
        assert!((p.evaluate(al) - 2.0 * joint).abs() < 1e-14);
    }

    #[test]
    fn random_behaviors_have_degree_one_conditionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut loc = || {
                let r: f64 = rng.random_range(0.0..0.5);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                TrigPoly::new(1, vec![0.5, r * phi.cos()], vec![r * phi.sin()]).unwrap()
            };
            let beh = Behavior::product(&loc(), &loc()).unwrap();
            let p = beh.conditional_box(Party::B, 1, 0.3, -1).unwrap();
            assert_eq!(p.two_j(), 1);
            assert!(p.extrema().min >= -1e-12);
        }
    }

    #[test]
    fn nagata_single_party() {
        let t = CorrelationTensor::new(1, vec![1.0, 0.0, 0.0]).unwrap();
        let r = nagata_inequality(&t, 0);
        assert!((r.lhs - PI).abs() < 1e-12);
        assert!((r.t_max - 1.0).abs() < 1e-12);
        assert!((r.rhs - 4.0).abs() < 1e-12);
        assert!(!r.violated);
    }

    #[test]
    fn nagata_planar_singlet() {
        let mut t = vec![0.0; 9];
        t[0] = 1.0;
        t[4] = 1.0;
        let t = CorrelationTensor::new(2, t).unwrap();
        let r = nagata_inequality(&t, 0);
        assert!((r.lhs - 2.0 * PI * PI).abs() < 1e-12);
        assert!((r.t_max - 1.0).abs() < 1e-12);
        assert!((r.rhs - 16.0).abs() < 1e-12);
        assert!(r.violated);
    }

    #[test]
    fn nagata_zero_tensor() {
        let t = CorrelationTensor::new(3, vec![0.0; 27]).unwrap();
        let r = nagata_inequality(&t, 0);
        assert_eq!(r.lhs, 0.0);
        assert!(!r.violated);
    }

    #[test]
    fn optimizer_beats_validation_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3 {
            for _ in 0..3 {
                let t: Vec<f64> = (0..3usize.pow(n as u32)).map(|_| rng.random_range(-1.0..1.0)).collect();
                let t = CorrelationTensor::new(n, t).unwrap();
                let r = nagata_inequality(&t, 1);
                assert!(r.t_max >= r.validation_grid_max.unwrap() - 1e-12);
                assert!((t.contract(&r.argmax) - r.t_max).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn many_parties_use_random_starts() {
        let mut t = vec![0.0; 81];
        t[0] = 1.0;
        let t = CorrelationTensor::new(4, t).unwrap();
        let r = nagata_inequality(&t, 3);
        assert!((r.t_max - 1.0).abs() < 1e-12);
        assert!(r.validation_grid_max.is_none());
        assert!(CorrelationTensor::new(2, vec![0.0; 8]).is_err());
    }
}
