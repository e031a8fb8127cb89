//! Bundled certificates, counterexamples and galleries.
//!
//! Numbers are stored as strings so that exact rationals (`"377/2400"`),
//! decimals (`"0.1665"`) and square roots of rationals (`"-sqrt(1/6)"`)
//! survive unchanged. Every fixture carries enough data to verify itself.

use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::linalg::{eigvalsh, hermitian_error, CMat, C64};
use crate::qset::{born_coefficients, r1_quantum_realize};
use crate::rset::{membership, Certificate, Direction};
use crate::trigpoly::{SpinLabel, TrigPoly};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FixtureError {
    #[error("cannot parse number {0:?}")]
    Number(String),
    #[error("fixture {name}: {reason}")]
    Shape { name: String, reason: String },
    #[error("fixture file {file}: {reason}")]
    Json { file: String, reason: String },
    #[error("no fixture named {0:?}")]
    Unknown(String),
}

const BUNDLE: [(&str, &str); 8] = [
    ("pstar.json", include_str!("../fixtures/pstar.json")),
    ("pstar_family.json", include_str!("../fixtures/pstar_family.json")),
    ("q32.json", include_str!("../fixtures/q32.json")),
    ("q2.json", include_str!("../fixtures/q2.json")),
    ("q52.json", include_str!("../fixtures/q52.json")),
    ("q3.json", include_str!("../fixtures/q3.json")),
    ("optimal_e_rho.json", include_str!("../fixtures/optimal_e_rho.json")),
    ("j1_gallery.json", include_str!("../fixtures/j1_gallery.json")),
];

/// Parse `"p/q"`, an integer, a decimal or `"[-]sqrt(x)"` with rational `x`.
pub fn parse_number(s: &str) -> Result<f64, FixtureError> {
    let t = s.trim();
    let err = || FixtureError::Number(s.to_string());
    if let Some(rest) = t.strip_prefix('-') {
        if rest.starts_with("sqrt(") {
            return parse_number(rest).map(|v| -v);
        }
    }
    if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let v = parse_number(inner)?;
        return if v >= 0.0 { Ok(v.sqrt()) } else { Err(err()) };
    }
    if t.contains('/') {
        let r = Ratio::<i64>::from_str(t).map_err(|_| err())?;
        return Ok(*r.numer() as f64 / *r.denom() as f64);
    }
    f64::from_str(t).map_err(|_| err())
}

fn parse_all(v: &[String]) -> Result<Vec<f64>, FixtureError> {
    v.iter().map(|s| parse_number(s)).collect()
}

/// Row-major matrix of `[re, im]` string pairs.
pub type MatrixData = Vec<Vec<[String; 2]>>;

fn parse_matrix(name: &str, m: &MatrixData) -> Result<CMat, FixtureError> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(FixtureError::Shape {
            name: name.into(),
            reason: "matrix is not square".into(),
        });
    }
    let mut out = CMat::zeros(n, n);
    for (j, row) in m.iter().enumerate() {
        for (k, [re, im]) in row.iter().enumerate() {
            out[(j, k)] = C64::new(parse_number(re)?, parse_number(im)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryBox {
    pub label: String,
    pub c: Vec<String>,
    pub s: Vec<String>,
    pub touches_zero_and_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixtureData {
    Polynomial {
        c: Vec<String>,
        s: Vec<String>,
        expected_gap_value: String,
    },
    PstarFamily {
        /// `"1"` or `"scaled"` for `1 / (1 + 9 * 4^-J)`.
        beta: String,
        #[serde(default)]
        expected_gap_value: Option<String>,
    },
    Certificate {
        c: Vec<String>,
        s: Vec<String>,
        q: MatrixData,
        s_matrix: MatrixData,
        tolerance: f64,
        expected_gap_value: String,
    },
    OptimalPair {
        e: MatrixData,
        rho: MatrixData,
    },
    Gallery {
        boxes: Vec<GalleryBox>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub two_j: usize,
    pub description: String,
    #[serde(flatten)]
    pub data: FixtureData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureCheck {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl FixtureCheck {
    fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        FixtureCheck {
            name: name.into(),
            value,
            target: Some(target),
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        FixtureCheck {
            name: name.into(),
            value,
            target: Some(bound),
            tolerance: 0.0,
            passed: value >= bound,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        FixtureCheck {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            target: None,
            tolerance: 0.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub name: String,
    pub two_j: usize,
    pub passed: bool,
    pub checks: Vec<FixtureCheck>,
}

fn quantum_bound() -> f64 {
    1.0 / 3f64.sqrt()
}

/// The gap functional `c_{2J-1} + s_{2J}`.
pub fn gap_value(p: &TrigPoly) -> f64 {
    let d = p.two_j();
    p.c_k(d - 1) + p.s_k(d)
}

/// `a_0 = 1/2`, `a_{2J} = -i/8`, `a_{2J-1-2m} = (3/16)(-1/4)^m` and
/// `a_{2J-2-2l} = -(3i/32)(-1/4)^l`, then shrunk towards `1/2` by `beta`.
pub fn pstar_family(two_j: usize, beta: f64) -> TrigPoly {
    assert!(two_j >= 2, "family needs 2J >= 2");
    let mut a = vec![C64::new(0.0, 0.0); two_j + 1];
    a[0] = C64::new(0.5, 0.0);
    a[two_j] = C64::new(0.0, -0.125);
    let j = two_j as f64 / 2.0;
    for m in 0..=(j - 1.0).floor() as usize {
        a[two_j - 1 - 2 * m] = C64::new(3.0 / 16.0 * (-0.25f64).powi(m as i32), 0.0);
    }
    let l_max = (j - 2.0).ceil();
    if l_max >= 0.0 {
        for l in 0..=l_max as usize {
            a[two_j - 2 - 2 * l] = C64::new(0.0, -3.0 / 32.0 * (-0.25f64).powi(l as i32));
        }
    }
    let p = TrigPoly::from_complex(
        &a.iter()
            .rev()
            .map(|z| z.conj())
            .chain(a[1..].iter().copied())
            .collect::<Vec<_>>(),
    )
    .expect("consistent coefficient list");
    TrigPoly::constant(two_j, 0.5) + (p - TrigPoly::constant(two_j, 0.5)) * beta
}

/// `1 / (1 + 9 * 4^-J)`, small enough to keep the family inside `[0, 1]`.
pub fn pstar_safe_beta(two_j: usize) -> f64 {
    1.0 / (1.0 + 9.0 * 4f64.powf(-(two_j as f64) / 2.0))
}

fn poly_from(name: &str, two_j: usize, c: &[String], s: &[String]) -> Result<TrigPoly, FixtureError> {
    TrigPoly::new(two_j, parse_all(c)?, parse_all(s)?).map_err(|e| FixtureError::Shape {
        name: name.into(),
        reason: e.to_string(),
    })
}

impl Fixture {
    /// The box this fixture is about, if it has a single one.
    pub fn polynomial(&self) -> Result<Option<TrigPoly>, FixtureError> {
        Ok(match &self.data {
            FixtureData::Polynomial { c, s, .. } | FixtureData::Certificate { c, s, .. } => {
                Some(poly_from(&self.name, self.two_j, c, s)?)
            }
            FixtureData::PstarFamily { beta, .. } => Some(pstar_family(self.two_j, self.beta_value(beta)?)),
            FixtureData::OptimalPair { e, rho } => {
                let e = parse_matrix(&self.name, e)?;
                let rho = parse_matrix(&self.name, rho)?;
                Some(born_coefficients(&rho, &e))
            }
            FixtureData::Gallery { .. } => None,
        })
    }

    fn beta_value(&self, beta: &str) -> Result<f64, FixtureError> {
        if beta == "scaled" {
            Ok(pstar_safe_beta(self.two_j))
        } else {
            parse_number(beta)
        }
    }

    /// Gram pair for certificate fixtures.
    pub fn certificate(&self) -> Result<Option<Certificate>, FixtureError> {
        match &self.data {
            FixtureData::Certificate { q, s_matrix, .. } => Ok(Some(Certificate {
                q: parse_matrix(&self.name, q)?,
                s: parse_matrix(&self.name, s_matrix)?,
            })),
            _ => Ok(None),
        }
    }

    pub fn verify(&self) -> Result<FixtureReport, FixtureError> {
        let mut checks = Vec::new();
        let bound = quantum_bound();
        match &self.data {
            FixtureData::Polynomial { expected_gap_value, .. } => {
                let p = self.polynomial()?.expect("polynomial fixture");
                let g = gap_value(&p);
                checks.push(FixtureCheck::near(
                    "gap_value",
                    g,
                    parse_number(expected_gap_value)?,
                    1e-15,
                ));
                checks.push(FixtureCheck::at_least("gap_minus_quantum_bound", g - bound, 0.0));
                checks.push(FixtureCheck::flag("range_valid", p.range_valid()));
                let m = membership(&p, SpinLabel::new(self.two_j)).map_err(|e| FixtureError::Shape {
                    name: self.name.clone(),
                    reason: e.to_string(),
                })?;
                checks.push(FixtureCheck::flag("membership_feasible", m.feasible));
            }
            FixtureData::PstarFamily {
                beta,
                expected_gap_value,
            } => {
                let b = self.beta_value(beta)?;
                let p = pstar_family(self.two_j, b);
                let g = gap_value(&p);
                let target = match expected_gap_value {
                    Some(v) => parse_number(v)?,
                    None => 0.625 * b,
                };
                checks.push(FixtureCheck::near("gap_value", g, target, 1e-12));
                checks.push(FixtureCheck::at_least("gap_minus_quantum_bound", g - bound, 0.0));
                let ext = p.extrema();
                checks.push(FixtureCheck::at_least("minimum", ext.min, -crate::trigpoly::RANGE_TOL));
                checks.push(FixtureCheck::at_least(
                    "one_minus_maximum",
                    1.0 - ext.max,
                    -crate::trigpoly::RANGE_TOL,
                ));
            }
            FixtureData::Certificate {
                tolerance,
                expected_gap_value,
                ..
            } => {
                let p = self.polynomial()?.expect("certificate fixture");
                let cert = self.certificate()?.expect("certificate fixture");
                let tol = *tolerance;
                let chk = cert.check(&p, tol);
                checks.push(FixtureCheck::at_least("q_min_eigenvalue", chk.q_min_eigenvalue, -tol));
                checks.push(FixtureCheck::at_least("s_min_eigenvalue", chk.s_min_eigenvalue, -tol));
                checks.push(FixtureCheck::near(
                    "coefficient_error",
                    chk.max_coefficient_error,
                    0.0,
                    tol,
                ));
                checks.push(FixtureCheck::near("trace_error", chk.trace_error, 0.0, tol));
                let g = gap_value(&p);
                checks.push(FixtureCheck::near(
                    "gap_value",
                    g,
                    parse_number(expected_gap_value)?,
                    1e-12,
                ));
                checks.push(FixtureCheck::at_least("gap_minus_quantum_bound", g - bound, 0.0));
                let from_q = gap_value(&cert.polynomial());
                checks.push(FixtureCheck::at_least(
                    "certificate_gap_minus_quantum_bound",
                    from_q - bound,
                    0.0,
                ));
            }
            FixtureData::OptimalPair { e, rho } => {
                let e = parse_matrix(&self.name, e)?;
                let rho = parse_matrix(&self.name, rho)?;
                let ee = eigvalsh(&e);
                let re = eigvalsh(&rho);
                checks.push(FixtureCheck::near("e_hermitian_error", hermitian_error(&e), 0.0, 1e-15));
                checks.push(FixtureCheck::at_least("e_min_eigenvalue", ee[0], -1e-12));
                checks.push(FixtureCheck::at_least(
                    "one_minus_e_max_eigenvalue",
                    1.0 - ee[ee.len() - 1],
                    -1e-12,
                ));
                checks.push(FixtureCheck::at_least("rho_min_eigenvalue", re[0], -1e-12));
                checks.push(FixtureCheck::near("rho_trace", rho.trace().re, 1.0, 1e-12));
                let p = born_coefficients(&rho, &e);
                let value = Direction::gap_functional(self.two_j).value(&p);
                checks.push(FixtureCheck::near("gap_value", value, bound, 1e-12));
            }
            FixtureData::Gallery { boxes } => {
                for b in boxes {
                    let p = poly_from(&self.name, self.two_j, &b.c, &b.s)?;
                    checks.push(FixtureCheck::flag(format!("{}: range_valid", b.label), p.range_valid()));
                    let err = match r1_quantum_realize(&p) {
                        Ok(r) => r.grid_error(0, &p, 1000),
                        Err(_) => f64::INFINITY,
                    };
                    checks.push(FixtureCheck::near(
                        format!("{}: realization_error", b.label),
                        err,
                        0.0,
                        1e-9,
                    ));
                    if b.touches_zero_and_one {
                        let ok = crate::games::min_distinguish_angle(&p, self.two_j).is_ok_and(|c| c.holds);
                        checks.push(FixtureCheck::flag(format!("{}: distinguish_angle", b.label), ok));
                    }
                }
            }
        }
        Ok(FixtureReport {
            name: self.name.clone(),
            two_j: self.two_j,
            passed: checks.iter().all(|c| c.passed),
            checks,
        })
    }
}

/// Parse one fixture file holding either an object or an array of objects.
pub fn parse_fixture_file(file: &str, text: &str) -> Result<Vec<Fixture>, FixtureError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| FixtureError::Json {
        file: file.into(),
        reason: e.to_string(),
    })?;
    let items = match value {
        serde_json::Value::Array(v) => v,
        other => vec![other],
    };
    items
        .into_iter()
        .map(|v| {
            serde_json::from_value(v).map_err(|e| FixtureError::Json {
                file: file.into(),
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn load_fixtures() -> Result<Vec<Fixture>, FixtureError> {
    let mut out = Vec::new();
    for (file, text) in BUNDLE {
        out.extend(parse_fixture_file(file, text)?);
    }
    Ok(out)
}

pub fn fixture(name: &str) -> Result<Fixture, FixtureError> {
    load_fixtures()?
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| FixtureError::Unknown(name.into()))
}
