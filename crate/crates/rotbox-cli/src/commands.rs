use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rotbox::bell::{nagata_inequality, pr_wiring_report};
use rotbox::fejer::factorize_with_diagnostics;
use rotbox::fixtures::{fixture, load_fixtures, FixtureData};
use rotbox::games::{game_monte_carlo, success_formula, two_setting_quantum_boundary, GameBox};
use rotbox::gpt::GptEffect;
use rotbox::qset::{analytic_gap_bound, approximate_continuous, seesaw, EffectStep, SeesawOptions};
use rotbox::rset::{boundary_sweep, membership, optimize_direction, Direction};
use rotbox::{SpinLabel, TrigPoly};

use crate::error::CliError;
use crate::input::{load_tensor, parse_terms, DirectionArgs, PolyArgs};
use crate::output::{csv_rows, json, Verdict};

const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Parser)]
#[command(name = "rotbox", version, about = "Spin-bounded rotation boxes: R_J and Q_J")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a polynomial box lies in R_J; emits the certificate.
    Membership(PolyArgs),
    /// Maximize a linear functional of the coefficients over R_J.
    Optimize {
        #[arg(long = "two-j")]
        two_j: usize,
        #[command(flatten)]
        direction: DirectionArgs,
    },
    /// Support function of R_J projected onto a plane.
    Boundary {
        #[arg(long = "two-j")]
        two_j: usize,
        /// First axis as named terms; defaults to c_{2J-1}.
        #[arg(long, allow_hyphen_values = true)]
        v1: Option<String>,
        /// Second axis as named terms; defaults to s_{2J}.
        #[arg(long, allow_hyphen_values = true)]
        v2: Option<String>,
        #[arg(long, default_value_t = 64)]
        angles: usize,
        #[arg(long)]
        csv: bool,
    },
    /// Fejer-Riesz factorization of a nonnegative polynomial.
    Factor(PolyArgs),
    /// See-saw lower bound on the quantum maximum of a functional.
    Seesaw {
        #[arg(long = "two-j")]
        two_j: usize,
        #[command(flatten)]
        direction: DirectionArgs,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Solve the effect step with the SDP solver instead of the projector.
        #[arg(long)]
        sdp_effect: bool,
        /// Emit the per-round objective trace (as CSV with --csv).
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Metrological game: analytic success probability and a Monte-Carlo run.
    Game {
        #[arg(long = "box", value_enum, default_value_t = GameBoxKind::Quantum)]
        kind: GameBoxKind,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Quantum boundary of the two-setting correlator region over an E1 grid.
    RandomnessCurve {
        #[arg(long = "two-j", default_value_t = 1)]
        two_j: usize,
        /// Angle between the two settings, in radians.
        #[arg(long, default_value_t = PI / 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        csv: bool,
    },
    /// Verify bundled certificates and counterexamples.
    Certify {
        #[arg(long, conflicts_with = "all")]
        fixture: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Two-party wiring that reproduces the PR box.
    BellDemo,
    /// Planar correlation bound for an N-party correlation tensor.
    Nagata {
        /// JSON `{"parties": n, "t": [...]}` with 3^n entries, first index slowest.
        #[arg(long, value_name = "FILE")]
        tensor: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Finite-spin approximation of a continuous box.
    Approx {
        /// Doubled spin; must be even.
        #[arg(long = "two-j")]
        two_j: usize,
        /// Window parameter: the window has half-width 1/n.
        #[arg(long, default_value_t = 10.0)]
        n: f64,
        #[arg(long, value_enum, default_value_t = Target::RaisedCosine)]
        function: Target,
        /// Include the realization (state and effects) in the output.
        #[arg(long)]
        full: bool,
    },
    /// List bundled fixtures, or print one in full.
    Fixtures {
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameBoxKind {
    /// Born-rule optimum at J = 3/2.
    Quantum,
    /// Optimum over all of R_3/2, played as a GPT measurement.
    General,
    /// The constant box 1/2.
    Coin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// (1 + cos t) / 2
    RaisedCosine,
    /// cos^2 t
    CosSquared,
    /// 1 - |t| / pi on (-pi, pi]
    Triangle,
}

impl Target {
    fn eval(self, t: f64) -> f64 {
        match self {
            Target::RaisedCosine => 0.5 * (1.0 + t.cos()),
            Target::CosSquared => t.cos().powi(2),
            Target::Triangle => {
                let w = (t + PI).rem_euclid(2.0 * PI) - PI;
                1.0 - w.abs() / PI
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<Verdict, CliError> {
    match cli.command {
        Command::Membership(args) => cmd_membership(&args),
        Command::Optimize { two_j, direction } => cmd_optimize(two_j, &direction),
        Command::Boundary {
            two_j,
            v1,
            v2,
            angles,
            csv,
        } => cmd_boundary(two_j, v1.as_deref(), v2.as_deref(), angles, csv),
        Command::Factor(args) => cmd_factor(&args),
        Command::Seesaw {
            two_j,
            direction,
            restarts,
            seed,
            sdp_effect,
            trace,
            csv,
        } => {
            let opts = SeesawOptions {
                restarts,
                seed,
                effect_step: if sdp_effect {
                    EffectStep::Sdp
                } else {
                    EffectStep::Projector
                },
                record_trace: trace,
                ..SeesawOptions::default()
            };
            cmd_seesaw(two_j, &direction, &opts, csv)
        }
        Command::Game { kind, trials, seed } => cmd_game(kind, trials, seed),
        Command::RandomnessCurve {
            two_j,
            alpha,
            points,
            csv,
        } => cmd_randomness_curve(two_j, alpha, points, csv),
        Command::Certify { fixture, all } => cmd_certify(fixture.as_deref(), all),
        Command::BellDemo => cmd_bell_demo(),
        Command::Nagata { tensor, seed } => {
            let t = load_tensor(&tensor)?;
            let report = nagata_inequality(&t, seed);
            json(&report)?;
            Ok(Verdict::from_ok(!report.violated))
        }
        Command::Approx {
            two_j,
            n,
            function,
            full,
        } => cmd_approx(two_j, n, function, full),
        Command::Fixtures { name } => cmd_fixtures(name.as_deref()),
    }
}

fn cmd_membership(args: &PolyArgs) -> Result<Verdict, CliError> {
    let p = args.load()?;
    let m = membership(&p, p.spin())?;
    json(&json!({
        "two_j": p.two_j(),
        "polynomial": p,
        "feasible": m.feasible,
        "status": m.status,
        "certificate": m.certificate,
        "infeasibility": m.infeasibility,
    }))?;
    Ok(Verdict::from_ok(m.feasible))
}

fn cmd_optimize(two_j: usize, direction: &DirectionArgs) -> Result<Verdict, CliError> {
    let dir = direction.load(two_j)?;
    let opt = optimize_direction(&dir, SpinLabel::new(two_j))?;
    json(&json!({
        "two_j": two_j,
        "direction": dir.n,
        "value": opt.value,
        "dual_bound": opt.dual_bound,
        "optimizer": opt.optimizer,
        "certificate": opt.certificate,
    }))?;
    Ok(Verdict::Ok)
}

#[derive(Serialize)]
struct SweepRow {
    phi: f64,
    value: Option<f64>,
    x: Option<f64>,
    y: Option<f64>,
    error: Option<String>,
}

fn cmd_boundary(
    two_j: usize,
    v1: Option<&str>,
    v2: Option<&str>,
    angles: usize,
    csv: bool,
) -> Result<Verdict, CliError> {
    if two_j == 0 {
        return Err(CliError::usage("a boundary sweep needs 2J >= 1"));
    }
    let axis = |spec: Option<&str>, default: String| parse_terms(spec.unwrap_or(&default), two_j);
    let d1 = axis(v1, format!("c{}", two_j - 1))?;
    let d2 = axis(v2, format!("s{two_j}"))?;
    let sweep = boundary_sweep(&d1, &d2, SpinLabel::new(two_j), angles)?;
    let failures = sweep.iter().filter(|p| p.error.is_some()).count();
    if csv {
        let rows: Vec<SweepRow> = sweep
            .iter()
            .map(|p| SweepRow {
                phi: p.phi,
                value: p.value,
                x: p.projection.map(|q| q.0),
                y: p.projection.map(|q| q.1),
                error: p.error.clone(),
            })
            .collect();
        csv_rows(&rows)?;
    } else {
        json(&json!({
            "two_j": two_j,
            "v1": d1.n,
            "v2": d2.n,
            "points": sweep,
        }))?;
    }
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} sweep angles failed")));
    }
    Ok(Verdict::Ok)
}

fn cmd_factor(args: &PolyArgs) -> Result<Verdict, CliError> {
    let p = args.load()?;
    let (f, diag) = factorize_with_diagnostics(&p)?;
    let error = f.reconstruct().grid_distance(&p, 4096);
    json(&json!({
        "polynomial": p,
        "factor": f,
        "diagnostics": diag,
        "reconstruction_error": error,
        "gram": rotbox::json::cmat_rows(&f.gram()),
    }))?;
    Ok(Verdict::Ok)
}

#[derive(Serialize)]
struct TraceCsvRow {
    restart: usize,
    round: usize,
    step: String,
    objective: f64,
}

fn cmd_seesaw(two_j: usize, direction: &DirectionArgs, opts: &SeesawOptions, csv: bool) -> Result<Verdict, CliError> {
    let dir = direction.load(two_j)?;
    let res = seesaw(&dir, SpinLabel::new(two_j), opts)?;
    if csv {
        if !opts.record_trace {
            return Err(CliError::usage("--csv for seesaw emits the trace; add --trace"));
        }
        let rows: Vec<TraceCsvRow> = res
            .trace
            .iter()
            .map(|t| TraceCsvRow {
                restart: t.restart,
                round: t.round,
                step: t.step.clone(),
                objective: t.objective,
            })
            .collect();
        csv_rows(&rows)?;
    } else {
        json(&json!({
            "two_j": two_j,
            "direction": dir.n,
            "seed": opts.seed,
            "restarts": opts.restarts,
            "value": res.value,
            "best_restart": res.best_restart,
            "restart_values": res.restart_values,
            "rounds": res.rounds,
            "polynomial": res.polynomial,
            "pair": res.pair,
            "trace": if opts.record_trace { Some(&res.trace) } else { None },
        }))?;
    }
    Ok(Verdict::Ok)
}

fn cmd_game(kind: GameBoxKind, trials: u64, seed: u64) -> Result<Verdict, CliError> {
    let game_box = match kind {
        GameBoxKind::Quantum => GameBox::Quantum(analytic_gap_bound(3)?.pair().realization()?),
        GameBoxKind::General => {
            let opt = optimize_direction(&Direction::gap_functional(3), SpinLabel::new(3))?;
            GameBox::Gpt {
                two_j: 3,
                effect: GptEffect {
                    e: opt.optimizer.coeff_vector(),
                },
            }
        }
        GameBoxKind::Coin => GameBox::Polynomial(TrigPoly::constant(3, 0.5)),
    };
    let analytic = success_formula(&game_box.polynomial())?;
    let mc = game_monte_carlo(&game_box, trials, seed)?;
    json(&json!({
        "box": format!("{kind:?}").to_lowercase(),
        "analytic": analytic,
        "empirical": mc.empirical,
        "stderr": mc.stderr,
        "trials": mc.trials,
        "wins": mc.wins,
        "region_fraction": mc.region_fraction,
        "seed": seed,
    }))?;
    Ok(Verdict::Ok)
}

#[derive(Serialize)]
struct CurveRow {
    e1: f64,
    e2_min: f64,
    e2_max: f64,
}

fn cmd_randomness_curve(two_j: usize, alpha: f64, points: usize, csv: bool) -> Result<Verdict, CliError> {
    if points < 2 {
        return Err(CliError::usage("--points must be at least 2"));
    }
    let mut rows = Vec::with_capacity(points);
    let mut delta = 0.0;
    for i in 0..points {
        let e1 = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
        let b = two_setting_quantum_boundary(two_j, alpha, e1)?;
        delta = b.delta;
        rows.push(CurveRow {
            e1,
            e2_min: b.e2_min,
            e2_max: b.e2_max,
        });
    }
    if csv {
        csv_rows(&rows)?;
    } else {
        json(&json!({ "two_j": two_j, "alpha": alpha, "delta": delta, "points": rows }))?;
    }
    Ok(Verdict::Ok)
}

fn cmd_certify(name: Option<&str>, all: bool) -> Result<Verdict, CliError> {
    let fixtures = match (name, all) {
        (Some(n), _) => vec![fixture(n)?],
        (None, true) => load_fixtures()?,
        (None, false) => return Err(CliError::usage("give --fixture NAME or --all")),
    };
    let reports = fixtures.iter().map(|f| f.verify()).collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    if reports.len() == 1 {
        json(&reports[0])?;
    } else {
        json(&json!({ "passed": passed, "reports": reports }))?;
    }
    for r in reports.iter().filter(|r| !r.passed) {
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        eprintln!("fixture {} failed: {}", r.name, failed.join(", "));
    }
    Ok(Verdict::from_ok(passed))
}

fn cmd_bell_demo() -> Result<Verdict, CliError> {
    let r = pr_wiring_report();
    let ok = r.no_signalling && r.conditional_boxes_ok && r.pr_table_error <= 1e-12 && r.fails_unbiasedness;
    json(&r)?;
    Ok(Verdict::from_ok(ok))
}

fn cmd_approx(two_j: usize, n: f64, function: Target, full: bool) -> Result<Verdict, CliError> {
    let a = approximate_continuous(|t| function.eval(t), two_j, n)?;
    let mut out = json!({
        "two_j": two_j,
        "n": a.n,
        "function": format!("{function:?}"),
        "epsilon": a.epsilon,
        "sqrt_epsilon": a.sqrt_epsilon,
        "averaging_error": a.averaging_error,
        "bound": a.bound,
        "measured_error": a.measured_error,
        "clipping": a.clipping,
        "within_bound": a.measured_error <= a.bound,
    });
    if full {
        out["realization"] = serde_json::to_value(&a.realization).map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    json(&out)?;
    Ok(Verdict::from_ok(a.measured_error <= a.bound))
}

fn cmd_fixtures(name: Option<&str>) -> Result<Verdict, CliError> {
    if let Some(n) = name {
        json(&fixture(n)?)?;
        return Ok(Verdict::Ok);
    }
    let list: Vec<_> = load_fixtures()?
        .into_iter()
        .map(|f| {
            let kind = match f.data {
                FixtureData::Polynomial { .. } => "polynomial",
                FixtureData::PstarFamily { .. } => "pstar_family",
                FixtureData::Certificate { .. } => "certificate",
                FixtureData::OptimalPair { .. } => "optimal_pair",
                FixtureData::Gallery { .. } => "gallery",
            };
            json!({ "name": f.name, "two_j": f.two_j, "kind": kind, "description": f.description })
        })
        .collect();
    json(&list)?;
    Ok(Verdict::Ok)
}
