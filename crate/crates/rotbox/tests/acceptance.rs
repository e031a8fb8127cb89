//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p rotbox --test acceptance`. The process exits with
//! status 1 when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rotbox::bell::pr_wiring_report;
use rotbox::fejer::factorize;
use rotbox::fixtures::{fixture, gap_value, pstar_family};
use rotbox::games::{
    game_monte_carlo, game_success, min_distinguish_angle, rescale_to_unit_range, two_setting_seesaw_check, GameBox,
};
use rotbox::gpt::{bit_symmetry_witness, distinguishability_tables, GptEffect};
use rotbox::linalg::{max_eig, CMat, C64};
use rotbox::qset::{
    analytic_gap_bound, approximate_continuous, polytope_grid_max, polytope_max, r1_face_extremals, r1_quantum_realize,
    seesaw, SeesawOptions,
};
use rotbox::rset::{membership, optimize_direction, orbitope_dual_value, toeplitz_min_eigenvalue, Direction};
use rotbox::sdp::{self, BlockTerm, SdpProblem, Sense, Status};
use rotbox::{SpinLabel, TrigPoly};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }
}

type Check = fn() -> Outcome;

fn quantum_bound() -> f64 {
    1.0 / 3f64.sqrt()
}

fn random_direction(rng: &mut ChaCha8Rng, len: usize) -> Direction {
    loop {
        let n: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return Direction::new(n.into_iter().map(|x| x / norm).collect());
        }
    }
}

fn rotation_bound() -> Outcome {
    match optimize_direction(&Direction::gap_functional(3), SpinLabel::new(3)) {
        Ok(opt) => Outcome::new(
            (opt.value - 0.625).abs() <= 1e-6,
            format!("max c2+s3 over R_3/2 = {:.10} (target 0.625 +- 1e-6)", opt.value),
        ),
        Err(e) => Outcome::error(e),
    }
}

fn quantum_bound_check() -> Outcome {
    let gb = match analytic_gap_bound(3) {
        Ok(g) => g,
        Err(e) => return Outcome::error(e),
    };
    let exact = (gb.value - quantum_bound()).abs() <= 1e-12 && gb.verified;
    let opts = SeesawOptions {
        restarts: 20,
        seed: 2024,
        ..SeesawOptions::default()
    };
    let res = match seesaw(&Direction::gap_functional(3), SpinLabel::new(3), &opts) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let never_exceeds = res.restart_values.iter().all(|&v| v <= quantum_bound() + 1e-9);
    let reaches = res.value >= quantum_bound() - 1e-4;
    Outcome::new(
        exact && never_exceeds && reaches,
        format!(
            "Tr(M[E]rho) = {:.15}, seesaw best = {:.10}, max restart = {:.12}",
            gb.value,
            res.value,
            res.restart_values.iter().cloned().fold(f64::MIN, f64::max)
        ),
    )
}

fn gap_witness() -> Outcome {
    let p = match fixture("pstar").and_then(|f| f.polynomial()) {
        Ok(Some(p)) => p,
        Ok(None) => return Outcome::new(false, "pstar fixture has no polynomial"),
        Err(e) => return Outcome::error(e),
    };
    let feasible = membership(&p, SpinLabel::new(3)).map(|m| m.feasible).unwrap_or(false);
    let g = gap_value(&p);
    Outcome::new(
        feasible && g == 0.6 && g > quantum_bound(),
        format!(
            "feasible = {feasible}, c2+s3 = {g}, quantum bound = {:.6}",
            quantum_bound()
        ),
    )
}

fn polytope() -> Outcome {
    let rep = polytope_max();
    let target = [1.0 / 6.0, 1.0 / 12.0, 1.0 / 6.0];
    let point_err = rep
        .point
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (grid, _) = polytope_grid_max(1e-3);
    let ok = (rep.value - 2.0 / 3.0).abs() <= 1e-12 && point_err <= 1e-12 && (grid - 2.0 / 3.0).abs() <= 1e-5;
    Outcome::new(
        ok,
        format!("max = {:.15} at {:?}, grid oracle = {:.10}", rep.value, rep.point, grid),
    )
}

fn metrological_game() -> Outcome {
    let gb = match analytic_gap_bound(3) {
        Ok(g) => g,
        Err(e) => return Outcome::error(e),
    };
    let q_poly = gb.polynomial();
    let q_value = match game_success(&q_poly) {
        Ok(v) => v,
        Err(e) => return Outcome::error(e),
    };
    let q_box = match gb.pair().realization() {
        Ok(r) => GameBox::Quantum(r),
        Err(e) => return Outcome::error(e),
    };
    let opt = match optimize_direction(&Direction::gap_functional(3), SpinLabel::new(3)) {
        Ok(o) => o,
        Err(e) => return Outcome::error(e),
    };
    let r_value = match game_success(&opt.optimizer) {
        Ok(v) => v,
        Err(e) => return Outcome::error(e),
    };
    let r_box = GameBox::Gpt {
        two_j: 3,
        effect: GptEffect {
            e: opt.optimizer.coeff_vector(),
        },
    };
    let (q_mc, r_mc) = match (
        game_monte_carlo(&q_box, 1_000_000, 11),
        game_monte_carlo(&r_box, 1_000_000, 12),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::error(e),
    };
    let ok = (q_value - 0.8536).abs() <= 1e-3
        && (r_value - 0.8828).abs() <= 1e-3
        && (q_mc.empirical - q_value).abs() <= 4.0 * q_mc.stderr
        && (r_mc.empirical - r_value).abs() <= 4.0 * r_mc.stderr;
    Outcome::new(
        ok,
        format!(
            "quantum {:.5} (MC {:.5} +- {:.5}), general {:.5} (MC {:.5} +- {:.5}); targets 0.8536, 0.8828",
            q_value, q_mc.empirical, q_mc.stderr, r_value, r_mc.empirical, r_mc.stderr
        ),
    )
}

fn phase_aligned_distance(b: &[C64], reference: &[C64]) -> f64 {
    if b.len() != reference.len() {
        return f64::INFINITY;
    }
    let inner: C64 = b.iter().zip(reference).map(|(x, r)| x.conj() * r).sum();
    let phase = if inner.norm() > 0.0 {
        inner / inner.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    b.iter()
        .zip(reference)
        .map(|(x, r)| (x * phase - r).norm())
        .fold(0.0, f64::max)
}

fn fejer_riesz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for i in 0..1000 {
        let d = 1 + i % 10;
        let b: Vec<C64> = (0..=d)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let g = rotbox::fejer::FactorVector {
            b: b.iter().map(|z| z / norm).collect(),
        };
        let p = g.reconstruct();
        match factorize(&p) {
            Ok(f) => worst = worst.max(f.reconstruct().grid_distance(&p, 2000)),
            Err(_) => failures += 1,
        }
    }
    let s = 0.5f64.sqrt();
    let one_minus_cos = TrigPoly::harmonic(1, 1.0, 1, -1.0, 0.0);
    let sin_sq = TrigPoly::harmonic(2, 0.5, 2, -0.5, 0.0);
    let closed = [
        (one_minus_cos, vec![C64::new(s, 0.0), C64::new(-s, 0.0)]),
        (
            sin_sq,
            vec![C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::new(-0.5, 0.0)],
        ),
    ];
    let mut closed_err = 0.0f64;
    for (p, reference) in &closed {
        match factorize(p) {
            Ok(f) => closed_err = closed_err.max(phase_aligned_distance(&f.b, reference)),
            Err(_) => closed_err = f64::INFINITY,
        }
    }
    Outcome::new(
        failures == 0 && worst <= 1e-7 && closed_err <= 1e-7,
        format!(
            "1000 random: {failures} failures, worst sup error {worst:.2e}; closed forms up to phase {closed_err:.2e}"
        ),
    )
}

fn r1_equals_q1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spin = SpinLabel::new(2);
    let opts = SeesawOptions {
        restarts: 10,
        seed: 7,
        ..SeesawOptions::default()
    };
    let mut worst = 0.0f64;
    for k in 0..64 {
        let dir = random_direction(&mut rng, spin.coeff_len());
        let r = match optimize_direction(&dir, spin) {
            Ok(o) => o.value,
            Err(e) => return Outcome::error(e),
        };
        let q = match seesaw(
            &dir,
            spin,
            &SeesawOptions {
                seed: opts.seed + k,
                ..opts
            },
        ) {
            Ok(s) => s.value,
            Err(e) => return Outcome::error(e),
        };
        worst = worst.max((r - q).abs());
    }
    let mut grid_worst = 0.0f64;
    let mut count = 0;
    for t1 in [0.5 * PI, 0.75 * PI, PI, 1.25 * PI, 1.5 * PI] {
        let family = match r1_face_extremals(0.0, t1) {
            Ok(f) => f,
            Err(e) => return Outcome::error(e),
        };
        for p in family {
            count += 1;
            match r1_quantum_realize(&p) {
                Ok(r) => grid_worst = grid_worst.max(r.grid_error(0, &p, 1000)),
                Err(_) => grid_worst = f64::INFINITY,
            }
        }
    }
    Outcome::new(
        worst <= 1e-4 && grid_worst <= 1e-9,
        format!("64 directions: max |seesaw - optimize| = {worst:.2e}; {count} face extremals realized, grid error {grid_worst:.2e}"),
    )
}

fn small_spins() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for two_j in [0usize, 1] {
        let spin = SpinLabel::new(two_j);
        for k in 0..32 {
            let dir = random_direction(&mut rng, spin.coeff_len());
            let r = match optimize_direction(&dir, spin) {
                Ok(o) => o.value,
                Err(e) => return Outcome::error(e),
            };
            let opts = SeesawOptions {
                restarts: 5,
                seed: 100 + k,
                ..SeesawOptions::default()
            };
            let q = match seesaw(&dir, spin, &opts) {
                Ok(s) => s.value,
                Err(e) => return Outcome::error(e),
            };
            worst = worst.max((r - q).abs());
        }
    }
    Outcome::new(
        worst <= 1e-6,
        format!("J in {{0, 1/2}}: max |seesaw - optimize| = {worst:.2e}"),
    )
}

fn certificates() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["q32", "q2", "q52", "q3"] {
        let f = match fixture(name) {
            Ok(f) => f,
            Err(e) => return Outcome::error(e),
        };
        let rep = match f.verify() {
            Ok(r) => r,
            Err(e) => return Outcome::error(e),
        };
        let g = match f.polynomial() {
            Ok(Some(p)) => gap_value(&p),
            _ => f64::NAN,
        };
        let beyond = g > quantum_bound();
        ok &= rep.passed && beyond;
        let failed: Vec<&str> = rep
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        parts.push(if failed.is_empty() {
            format!("{name} ok (gap {g:.4})")
        } else {
            format!("{name} failed {failed:?} (gap {g:.4})")
        });
    }
    Outcome::new(ok, parts.join("; "))
}

fn pstar_family_check() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for two_j in 7..=10 {
        let p = pstar_family(two_j, 1.0);
        let ext = p.extrema();
        let valid = p.range_valid();
        let g = gap_value(&p);
        ok &= valid && (g - 0.625).abs() <= 1e-12;
        parts.push(format!(
            "2J={two_j}: range [{:.5}, {:.5}] valid={valid}, gap {g:.12}",
            ext.min, ext.max
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn two_setting() -> Outcome {
    let opts = SeesawOptions {
        restarts: 8,
        seed: 11,
        ..SeesawOptions::default()
    };
    let mut worst = 0.0f64;
    for alpha in [PI / 6.0, PI / 3.0, 0.45 * PI] {
        for k in 0..8 {
            let phi = 2.0 * PI * k as f64 / 8.0 + 0.1;
            match two_setting_seesaw_check(1, alpha, (phi.cos(), phi.sin()), &opts) {
                Ok(c) => worst = worst.max(c.difference),
                Err(e) => return Outcome::error(e),
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    let mut checked = 0;
    for two_j in [1usize, 2, 3] {
        let spin = SpinLabel::new(two_j);
        let mut sampled = 0;
        while sampled < 200 {
            let dir = random_direction(&mut rng, spin.coeff_len());
            let opt = match optimize_direction(&dir, spin) {
                Ok(o) => o,
                Err(e) => return Outcome::error(e),
            };
            // optimizers that collapse to a constant carry only solver noise
            let ext = opt.optimizer.extrema();
            if ext.max - ext.min < 0.5 {
                continue;
            }
            let Some(p) = rescale_to_unit_range(&opt.optimizer) else {
                continue;
            };
            sampled += 1;
            checked += 1;
            match min_distinguish_angle(&p, two_j) {
                Ok(c) if c.holds => {}
                _ => violations += 1,
            }
        }
    }
    let sin_sq = TrigPoly::harmonic(2, 0.5, 2, -0.5, 0.0);
    let saturation = match min_distinguish_angle(&sin_sq, 2) {
        Ok(c) => (c.distance - c.bound).abs(),
        Err(e) => return Outcome::error(e),
    };
    Outcome::new(
        worst <= 1e-3 && violations == 0 && saturation <= 1e-6,
        format!(
            "support max diff {worst:.2e}; {checked} extremal boxes, {violations} violations; sin^2 at J=1 gap to bound {saturation:.2e}"
        ),
    )
}

fn continuum_approximation() -> Outcome {
    let f = |t: f64| 0.5 * (1.0 + t.cos());
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, n) in [(5usize, 10.0), (20, 10.0), (20, 40.0)] {
        match approximate_continuous(f, 2 * j, n) {
            Ok(a) => {
                ok &= a.measured_error <= a.bound;
                parts.push(format!(
                    "(J={j}, n={n}): measured {:.4e} <= bound {:.4e}",
                    a.measured_error, a.bound
                ));
            }
            Err(e) => return Outcome::error(e),
        }
    }
    for n in [10.0, 40.0] {
        let mut prev = f64::INFINITY;
        for j in [5usize, 10, 15, 20] {
            match approximate_continuous(f, 2 * j, n) {
                Ok(a) => {
                    ok &= a.bound <= prev + 1e-15;
                    prev = a.bound;
                }
                Err(e) => return Outcome::error(e),
            }
        }
    }
    parts.push("bound monotone in J at n = 10, 40 checked".into());
    Outcome::new(ok, parts.join("; "))
}

fn orbitope() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let d = 4;
    let mut tested = 0;
    let mut disagreements = 0;
    let mut inside = 0;
    while tested < 200 {
        // mixture of orbit points, then scaled so both sides of the boundary occur
        let k = rng.random_range(1..=4);
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let scale = rng.random_range(0.6..1.3);
        let mut point = vec![0.0; 2 * d];
        for w in &weights {
            let t = rng.random_range(0.0..2.0 * PI);
            for m in 1..=d {
                point[2 * m - 2] += scale * w / total * (m as f64 * t).cos();
                point[2 * m - 1] += scale * w / total * (m as f64 * t).sin();
            }
        }
        let lam = toeplitz_min_eigenvalue(&point);
        if lam.abs() < 1e-6 {
            continue;
        }
        tested += 1;
        let toeplitz = lam >= 0.0;
        inside += toeplitz as usize;
        let dual = match orbitope_dual_value(&point) {
            Ok(v) => v >= -1e-8,
            Err(e) => return Outcome::error(e),
        };
        if dual != toeplitz {
            disagreements += 1;
        }
    }
    Outcome::new(
        disagreements == 0,
        format!("200 points at d = 4 ({inside} inside): {disagreements} disagreements"),
    )
}

fn bell_and_gpt() -> Outcome {
    let pr = pr_wiring_report();
    let pr_ok = pr.no_signalling
        && pr.conditional_boxes_ok
        && pr.pr_table_error <= 1e-12
        && pr.fails_unbiasedness
        && pr.bias_error <= 1e-12;
    let tables = match distinguishability_tables() {
        Ok(t) => t,
        Err(e) => return Outcome::error(e),
    };
    let tables_ok = tables.joint_error <= 1e-12 && tables.pairwise_error <= 1e-12 && tables.effects_valid;
    let bits = bit_symmetry_witness();
    let bits_ok = bits.nullity == 0 && bits.violated;
    Outcome::new(
        pr_ok && tables_ok && bits_ok,
        format!(
            "PR: signalling {:.1e}, table error {:.1e}, bias error {:.1e}, unbiased fails {}; GPT tables error {:.1e}/{:.1e}; bit symmetry nullity {}",
            pr.signalling,
            pr.pr_table_error,
            pr.bias_error,
            pr.fails_unbiasedness,
            tables.joint_error,
            tables.pairwise_error,
            bits.nullity
        ),
    )
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn sdp_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 16;
        let h = random_hermitian(&mut rng, n);
        let mut prob = SdpProblem::new(vec![n], Sense::Maximize).with_objective(vec![BlockTerm::new(0, h.clone())]);
        prob.add_constraint(vec![BlockTerm::new(0, CMat::identity(n, n))], 1.0);
        match sdp::solve(&prob, sdp::DEFAULT_TOL) {
            Ok(sol) if sol.status == Status::Optimal => worst = worst.max((sol.objective - max_eig(&h)).abs()),
            Ok(sol) => return Outcome::new(false, format!("lambda_max instance {i}: status {:?}", sol.status)),
            Err(e) => return Outcome::error(e),
        }
    }
    let mut detected = 0;
    for i in 0..20 {
        let n = 2 + i % 5;
        let mut prob = SdpProblem::new(vec![n], Sense::Feasibility);
        if i % 2 == 0 {
            // a PSD functional forced negative
            let g = CMat::from_fn(n, n, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let psd = &g * g.adjoint() + CMat::identity(n, n) * C64::new(0.1, 0.0);
            prob.add_constraint(vec![BlockTerm::new(0, psd)], -rng.random_range(0.1..1.0));
        } else {
            // unit diagonal with an off-diagonal entry beyond 1 in modulus
            for j in 0..n {
                let mut e = CMat::zeros(n, n);
                e[(j, j)] = C64::new(1.0, 0.0);
                prob.add_constraint(vec![BlockTerm::new(0, e)], 1.0);
            }
            let mut off = CMat::zeros(n, n);
            off[(0, n - 1)] = C64::new(0.5, 0.0);
            off[(n - 1, 0)] = C64::new(0.5, 0.0);
            prob.add_constraint(vec![BlockTerm::new(0, off)], rng.random_range(1.2..3.0));
        }
        if let Ok(sol) = sdp::solve(&prob, sdp::DEFAULT_TOL) {
            if sol.status == Status::Infeasible {
                detected += 1;
            }
        }
    }
    Outcome::new(
        worst <= 1e-7 && detected == 20,
        format!("lambda_max max error {worst:.2e} over 100; infeasible detected {detected}/20"),
    )
}

fn main() {
    let checks: [(&str, Check); 15] = [
        ("rotation bound", rotation_bound),
        ("quantum bound", quantum_bound_check),
        ("gap witness", gap_witness),
        ("polytope", polytope),
        ("metrological game", metrological_game),
        ("fejer-riesz", fejer_riesz),
        ("R1 = Q1", r1_equals_q1),
        ("Q = R at J <= 1/2", small_spins),
        ("certificates", certificates),
        ("P*_J family", pstar_family_check),
        ("two-setting", two_setting),
        ("continuum approximation", continuum_approximation),
        ("orbitope", orbitope),
        ("bell and gpt", bell_and_gpt),
        ("sdp solver", sdp_suite),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if out.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {} [{secs:.1}s]", i + 1, out.detail);
        failed += usize::from(!out.passed);
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
