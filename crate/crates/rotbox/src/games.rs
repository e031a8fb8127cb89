//! The metrological game and the two-setting correlation sets.
//!
//! In the game a referee draws `theta` from the density
//! `mu(theta) = |cos 2 theta + sin 3 theta| / n` and the player must report
//! the sign of `w(theta) = cos 2 theta + sin 3 theta` after feeding `theta`
//! to a spin-3/2 rotation box. Outcome 0 of the box is read as "plus".

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gpt::{omega, GptEffect};
use crate::qset::{seesaw, QsetError, QuantumRealization, SeesawOptions};
use crate::rset::{membership, Direction, RsetError};
use crate::trigpoly::{circular_distance, SpinLabel, TrigPoly};

/// Resolution of the inverse-CDF table.
pub const CDF_TABLE_SIZE: usize = 1 << 16;
/// Number of independent Monte-Carlo shards; fixed so that results do not
/// depend on the thread count.
pub const MC_SHARDS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GamesError {
    #[error("box is not in R_3/2")]
    NotMember,
    #[error("game boxes must have 2J <= 3, got 2J = {0}")]
    Degree(usize),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("E1 = {0} is outside [-1, 1]")]
    Correlator(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Rset(#[from] RsetError),
    #[error(transparent)]
    Qset(#[from] QsetError),
}

/// Zeros of `w` on `[0, 2 pi]`, including the endpoints. `3 pi / 2` is a
/// double zero where `w` does not change sign.
const BREAKS: [f64; 7] = [0.0, 0.3 * PI, 0.7 * PI, 1.1 * PI, 1.5 * PI, 1.9 * PI, 2.0 * PI];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub normalization: f64,
    /// `R_+` as half-open angle intervals.
    pub region_plus: Vec<(f64, f64)>,
    pub weight: TrigPoly,
    #[serde(skip)]
    table: Vec<f64>,
}

fn antiderivative(t: f64) -> f64 {
    (2.0 * t).sin() / 2.0 - (3.0 * t).cos() / 3.0
}

impl Default for GameSpec {
    fn default() -> Self {
        Self::new()
    }
}

impl GameSpec {
    pub fn new() -> Self {
        let normalization = 5.0 / 3.0 * (5.0 + 2.0 * 5f64.sqrt()).sqrt();
        let weight = TrigPoly::new(3, vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]).expect("valid lengths");
        let mut spec = GameSpec {
            normalization,
            region_plus: vec![(0.0, 0.3 * PI), (0.7 * PI, 1.1 * PI), (1.9 * PI, 2.0 * PI)],
            weight,
            table: Vec::new(),
        };
        spec.table = spec.build_table();
        spec
    }

    pub fn w(&self, theta: f64) -> f64 {
        (2.0 * theta).cos() + (3.0 * theta).sin()
    }

    pub fn mu(&self, theta: f64) -> f64 {
        self.w(theta).abs() / self.normalization
    }

    pub fn in_region_plus(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(2.0 * PI);
        self.region_plus.iter().any(|&(a, b)| t > a && t < b)
    }

    /// Exact cumulative distribution of `mu` on `[0, 2 pi]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        let t = theta.clamp(0.0, 2.0 * PI);
        let mut acc = 0.0;
        for win in BREAKS.windows(2) {
            let (a, b) = (win[0], win[1]);
            if t <= a {
                break;
            }
            acc += (antiderivative(t.min(b)) - antiderivative(a)).abs();
        }
        acc / self.normalization
    }

    /// `mu`-measure of `R_+`.
    pub fn region_plus_measure(&self) -> f64 {
        self.region_plus.iter().map(|&(a, b)| self.cdf(b) - self.cdf(a)).sum()
    }

    /// Composite Simpson quadrature of `mu` with `2 * half_panels` panels.
    pub fn quadrature_mass(&self, half_panels: usize) -> f64 {
        let m = 2 * half_panels;
        let h = 2.0 * PI / m as f64;
        let mut acc = self.mu(0.0) + self.mu(2.0 * PI);
        for i in 1..m {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * self.mu(i as f64 * h);
        }
        acc * h / 3.0
    }

    fn build_table(&self) -> Vec<f64> {
        (0..=CDF_TABLE_SIZE)
            .map(|i| {
                let u = i as f64 / CDF_TABLE_SIZE as f64;
                let (mut lo, mut hi) = (0.0, 2.0 * PI);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Map a uniform variate to an angle through the quantile table.
    pub fn quantile(&self, u: f64) -> f64 {
        let x = u.clamp(0.0, 1.0) * CDF_TABLE_SIZE as f64;
        let i = (x.floor() as usize).min(CDF_TABLE_SIZE - 1);
        let f = x - i as f64;
        self.table[i] + f * (self.table[i + 1] - self.table[i])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// `1/2 + (pi / n) (c_2 + s_3)`, valid for any box of degree at most 3.
pub fn success_formula(p: &TrigPoly) -> Result<f64, GamesError> {
    if p.two_j() > 3 {
        return Err(GamesError::Degree(p.two_j()));
    }
    let p = p.padded(3);
    Ok(0.5 + PI / GameSpec::new().normalization * (p.c_k(2) + p.s_k(3)))
}

/// Success probability of a box after checking it lies in `R_{3/2}`.
pub fn game_success(p: &TrigPoly) -> Result<f64, GamesError> {
    let value = success_formula(p)?;
    if !membership(&p.padded(3), SpinLabel::new(3))?.feasible {
        return Err(GamesError::NotMember);
    }
    Ok(value)
}

/// Anything that answers an angle with outcome 0 ("plus") or 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameBox {
    Quantum(QuantumRealization),
    /// An orbit state `omega(theta)` measured with the effect for "plus".
    Gpt {
        two_j: usize,
        effect: GptEffect,
    },
    Polynomial(TrigPoly),
}

impl GameBox {
    pub fn plus_probability(&self, theta: f64) -> f64 {
        match self {
            GameBox::Quantum(r) => r.probability(0, theta),
            GameBox::Gpt { two_j, effect } => effect.apply(&omega(*two_j, theta)),
            GameBox::Polynomial(p) => p.evaluate(theta),
        }
    }

    pub fn polynomial(&self) -> TrigPoly {
        match self {
            GameBox::Quantum(r) => r.born_polynomial(0).expect("outcome 0 exists"),
            GameBox::Gpt { effect, .. } => effect.polynomial(),
            GameBox::Polynomial(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub trials: u64,
    pub wins: u64,
    pub empirical: f64,
    pub stderr: f64,
    /// Fraction of sampled angles inside `R_+`.
    pub region_fraction: f64,
}

fn shard_sizes(trials: u64) -> Vec<u64> {
    let base = trials / MC_SHARDS as u64;
    let extra = trials % MC_SHARDS as u64;
    (0..MC_SHARDS as u64).map(|i| base + u64::from(i < extra)).collect()
}

/// Play the game `trials` times in seeded shards.
pub fn game_monte_carlo(b: &GameBox, trials: u64, seed: u64) -> Result<MonteCarloResult, GamesError> {
    if trials == 0 {
        return Err(GamesError::NoTrials);
    }
    let spec = GameSpec::new();
    let sizes = shard_sizes(trials);
    let counts = crate::par::map_indexed(MC_SHARDS, |shard| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard as u64);
        let (mut wins, mut plus) = (0u64, 0u64);
        for _ in 0..sizes[shard] {
            let theta = spec.sample(&mut rng);
            let truth = spec.w(theta) > 0.0;
            plus += u64::from(spec.in_region_plus(theta));
            let guess = rng.random::<f64>() < b.plus_probability(theta);
            wins += u64::from(guess == truth);
        }
        (wins, plus)
    });
    let (wins, plus) = counts.iter().fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
    let empirical = wins as f64 / trials as f64;
    Ok(MonteCarloResult {
        trials,
        wins,
        empirical,
        stderr: (empirical * (1.0 - empirical) / trials as f64).sqrt(),
        region_fraction: plus as f64 / trials as f64,
    })
}

/// Fraction of `trials` sampled angles that land in `R_+`.
pub fn region_fraction(trials: u64, seed: u64) -> f64 {
    let spec = GameSpec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..trials)
        .filter(|_| spec.in_region_plus(spec.sample(&mut rng)))
        .count();
    hits as f64 / trials as f64
}

/// `delta = cos(J alpha)` when `|J alpha| < pi/2`, else 0.
pub fn two_setting_delta(two_j: usize, alpha: f64) -> f64 {
    let x = 0.5 * two_j as f64 * alpha;
    if x.abs() < PI / 2.0 {
        x.cos()
    } else {
        0.0
    }
}

/// The range of `E2` compatible with a given `E1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSettingBoundary {
    pub delta: f64,
    pub e1: f64,
    pub e2_min: f64,
    pub e2_max: f64,
}

/// Left-hand side of the two-setting inequality,
/// `(sqrt(1+E1) sqrt(1+E2) + sqrt(1-E1) sqrt(1-E2)) / 2`.
pub fn two_setting_overlap(e1: f64, e2: f64) -> f64 {
    0.5 * ((1.0 + e1).max(0.0).sqrt() * (1.0 + e2).max(0.0).sqrt()
        + (1.0 - e1).max(0.0).sqrt() * (1.0 - e2).max(0.0).sqrt())
}

/// Writing `E = cos 2x` with `x in [0, pi/2]`, the overlap is `cos(x1 - x2)`,
/// so the region is `|x1 - x2| <= arccos delta`.
pub fn two_setting_quantum_boundary(two_j: usize, alpha: f64, e1: f64) -> Result<TwoSettingBoundary, GamesError> {
    if !(-1.0..=1.0).contains(&e1) {
        return Err(GamesError::Correlator(e1));
    }
    let delta = two_setting_delta(two_j, alpha);
    let gamma = delta.clamp(-1.0, 1.0).acos();
    let x1 = 0.5 * e1.acos();
    Ok(TwoSettingBoundary {
        delta,
        e1,
        e2_min: (2.0 * (x1 + gamma).min(PI / 2.0)).cos(),
        e2_max: (2.0 * (x1 - gamma).max(0.0)).cos(),
    })
}

/// `max w1 E1 + w2 E2` over the closed-form region by a dense scan over
/// `E1` followed by golden-section refinement.
pub fn two_setting_support(two_j: usize, alpha: f64, w1: f64, w2: f64) -> f64 {
    let gamma = two_setting_delta(two_j, alpha).acos();
    let value = |x1: f64| {
        let lo = (x1 - gamma).max(0.0);
        let hi = (x1 + gamma).min(PI / 2.0);
        let x2 = if w2 >= 0.0 { lo } else { hi };
        w1 * (2.0 * x1).cos() + w2 * (2.0 * x2).cos()
    };
    let n = 4000;
    let h = PI / 2.0 / n as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..=n {
        let v = value(i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = (
        ((best_i as f64) - 1.0).max(0.0) * h,
        ((best_i as f64 + 1.0) * h).min(PI / 2.0),
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if value(c) >= value(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(value(0.5 * (a + b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSettingCheck {
    pub two_j: usize,
    pub alpha: f64,
    pub weights: (f64, f64),
    pub seesaw_value: f64,
    pub closed_form: f64,
    pub difference: f64,
    /// Correlators of the best see-saw box.
    pub e1: f64,
    pub e2: f64,
}

/// See-saw maximum of `w1 E1 + w2 E2`. Since `E(theta) = 2 p(theta) - 1`
/// with `p = e . omega(theta)`, this is the direction
/// `2 (w1 omega(0) + w2 omega(alpha))` shifted by `-(w1 + w2)`.
pub fn two_setting_seesaw_check(
    two_j: usize,
    alpha: f64,
    weights: (f64, f64),
    opts: &SeesawOptions,
) -> Result<TwoSettingCheck, GamesError> {
    let (w1, w2) = weights;
    let (o0, oa) = (omega(two_j, 0.0), omega(two_j, alpha));
    let dir = Direction::new(o0.v.iter().zip(&oa.v).map(|(a, b)| 2.0 * (w1 * a + w2 * b)).collect());
    let res = seesaw(&dir, SpinLabel::new(two_j), opts)?;
    let seesaw_value = res.value - (w1 + w2);
    let closed_form = two_setting_support(two_j, alpha, w1, w2);
    Ok(TwoSettingCheck {
        two_j,
        alpha,
        weights,
        seesaw_value,
        closed_form,
        difference: (seesaw_value - closed_form).abs(),
        e1: 2.0 * res.polynomial.evaluate(0.0) - 1.0,
        e2: 2.0 * res.polynomial.evaluate(alpha) - 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguishCheck {
    pub two_j: usize,
    pub zeros: Vec<f64>,
    pub ones: Vec<f64>,
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
}

/// For a box reaching both 0 and 1, the angles where it does are at least
/// `pi / (2J)` apart.
pub fn min_distinguish_angle(p: &TrigPoly, two_j: usize) -> Result<DistinguishCheck, GamesError> {
    if p.two_j() > two_j {
        return Err(GamesError::Degree(p.two_j()));
    }
    let ext = p.extrema();
    if ext.min.abs() > 1e-9 || (ext.max - 1.0).abs() > 1e-9 {
        return Err(GamesError::Precondition(format!(
            "box range [{:.3e}, {:.12}] does not touch both 0 and 1",
            ext.min, ext.max
        )));
    }
    let zeros = p.level_points(0.0, 1e-8);
    let ones = p.level_points(1.0, 1e-8);
    if zeros.is_empty() || ones.is_empty() {
        return Err(GamesError::Precondition("no level points found".into()));
    }
    let distance = zeros
        .iter()
        .flat_map(|&a| ones.iter().map(move |&b| circular_distance(a, b)))
        .fold(f64::INFINITY, f64::min);
    let bound = PI / two_j as f64;
    Ok(DistinguishCheck {
        two_j,
        zeros,
        ones,
        distance,
        bound,
        holds: distance >= bound - 1e-6,
    })
}

/// Affinely rescale a polynomial so that its range becomes exactly `[0, 1]`.
pub fn rescale_to_unit_range(p: &TrigPoly) -> Option<TrigPoly> {
    let ext = p.extrema();
    let span = ext.max - ext.min;
    if span <= 1e-6 {
        return None;
    }
    let shifted = p.clone() - TrigPoly::constant(p.two_j(), ext.min);
    Some(shifted * (1.0 / span))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qset::analytic_gap_bound;
    use crate::rset::optimize_direction;

    #[test]
    fn measure_is_normalized() {
        let g = GameSpec::new();
        assert!((g.cdf(2.0 * PI) - 1.0).abs() < 1e-12);
        assert!((g.quadrature_mass(200_000) - 1.0).abs() < 1e-8);
        assert!((g.region_plus_measure() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn region_matches_sign_of_weight() {
        let g = GameSpec::new();
        for i in 1..1000 {
            let t = 2.0 * PI * (i as f64 + 0.37) / 1000.0;
            if g.w(t).abs() > 1e-9 {
                assert_eq!(g.in_region_plus(t), g.w(t) > 0.0, "theta = {t}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let g = GameSpec::new();
        for i in 0..50 {
            let u = (i as f64 + 0.5) / 50.0;
            assert!((g.cdf(g.quantile(u)) - u).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_box_is_a_coin() {
        let half = TrigPoly::constant(3, 0.5);
        assert!((game_success(&half).unwrap() - 0.5).abs() < 1e-15);
        let mc = game_monte_carlo(&GameBox::Polynomial(half), 200_000, 1).unwrap();
        assert!((mc.empirical - 0.5).abs() < 4.0 * mc.stderr + 1e-3);
        assert!((mc.region_fraction - 0.5).abs() < 0.005);
    }

    #[test]
    fn quantum_witness_value() {
        let gb = analytic_gap_bound(3).unwrap();
        let p = gb.polynomial();
        let v = game_success(&p).unwrap();
        assert!((v - 0.8536).abs() < 1e-3, "{v}");
        let r = gb.pair().realization().unwrap();
        let mc = game_monte_carlo(&GameBox::Quantum(r), 100_000, 7).unwrap();
        assert!((mc.empirical - v).abs() < 4.0 * mc.stderr);
    }

    #[test]
    fn general_optimum_value() {
        let opt = optimize_direction(&Direction::gap_functional(3), SpinLabel::new(3)).unwrap();
        let v = success_formula(&opt.optimizer).unwrap();
        assert!((v - (0.5 + PI / GameSpec::new().normalization * opt.value)).abs() < 1e-12);
        assert!(v > 0.85);
    }

    #[test]
    fn rejects_non_member() {
        let p = TrigPoly::harmonic(3, 0.5, 2, 0.7, 0.0);
        assert!(matches!(game_success(&p), Err(GamesError::NotMember)));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let b = GameBox::Polynomial(TrigPoly::harmonic(3, 0.5, 2, 0.5, 0.0));
        let a = game_monte_carlo(&b, 10_000, 3).unwrap();
        let c = game_monte_carlo(&b, 10_000, 3).unwrap();
        assert_eq!(a, c);
        assert_ne!(a, game_monte_carlo(&b, 10_000, 4).unwrap());
    }

    #[test]
    fn boundary_edge_cases() {
        let b = two_setting_quantum_boundary(1, PI, 0.3).unwrap();
        assert_eq!(b.delta, 0.0);
        assert!((b.e2_min + 1.0).abs() < 1e-12 && (b.e2_max - 1.0).abs() < 1e-12);
        let b = two_setting_quantum_boundary(1, 0.0, 0.3).unwrap();
        assert!((b.e2_min - 0.3).abs() < 1e-12 && (b.e2_max - 0.3).abs() < 1e-12);
        let alpha = 0.8;
        let b = two_setting_quantum_boundary(2, alpha, 1.0).unwrap();
        let d = b.delta;
        assert!((b.e2_min - (2.0 * d * d - 1.0)).abs() < 1e-12);
        // bisection on the inequality itself
        let (mut lo, mut hi) = (-1.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if two_setting_overlap(1.0, mid) >= d {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((hi - b.e2_min).abs() < 1e-6);
        assert!(two_setting_quantum_boundary(1, 0.1, 1.5).is_err());
    }

    #[test]
    fn boundary_symmetries() {
        let (tj, alpha) = (1, 1.1);
        for i in 0..=20 {
            let e1 = -1.0 + i as f64 / 10.0;
            let b = two_setting_quantum_boundary(tj, alpha, e1).unwrap();
            for e2 in [b.e2_min, b.e2_max] {
                assert!((two_setting_overlap(e1, e2) - b.delta).abs() < 1e-9 || e2.abs() > 1.0 - 1e-12);
                let back = two_setting_quantum_boundary(tj, alpha, e2).unwrap();
                assert!(back.e2_min <= e1 + 1e-9 && e1 <= back.e2_max + 1e-9);
            }
            let neg = two_setting_quantum_boundary(tj, alpha, -e1).unwrap();
            assert!((neg.e2_min + b.e2_max).abs() < 1e-12);
        }
    }

    #[test]
    fn support_trivial_cases() {
        assert!((two_setting_support(1, PI, 1.0, 1.0) - 2.0).abs() < 1e-12);
        assert!((two_setting_support(1, PI / 3.0, 1.0, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seesaw_matches_closed_form() {
        let opts = SeesawOptions {
            restarts: 6,
            seed: 5,
            ..Default::default()
        };
        for w in [(1.0, 1.0), (1.0, -1.0), (0.3, 0.8)] {
            let c = two_setting_seesaw_check(1, PI / 3.0, w, &opts).unwrap();
            assert!(c.difference < 1e-3, "{c:?}");
        }
        let c = two_setting_seesaw_check(1, PI, (1.0, 1.0), &opts).unwrap();
        assert!((c.seesaw_value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn distinguish_angle_examples() {
        let s2 = TrigPoly::new(2, vec![0.5, 0.0, -0.5], vec![0.0, 0.0]).unwrap();
        let r = min_distinguish_angle(&s2, 2).unwrap();
        assert!(r.holds && (r.distance - PI / 2.0).abs() < 1e-6);
        let s4 = TrigPoly::new(2, vec![0.375, -0.5, 0.125], vec![0.0, 0.0]).unwrap();
        let r = min_distinguish_angle(&s4, 2).unwrap();
        assert!(r.holds && (r.distance - PI).abs() < 1e-6);
        let cos1 = TrigPoly::harmonic(1, 0.5, 1, 0.5, 0.0);
        let r = min_distinguish_angle(&cos1, 1).unwrap();
        assert!((r.distance - PI).abs() < 1e-6 && r.holds);
        assert!(min_distinguish_angle(&TrigPoly::constant(2, 0.5), 2).is_err());
    }
}
