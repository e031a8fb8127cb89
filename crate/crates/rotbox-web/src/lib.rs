//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; the page parses it with
//! `JSON.parse`. Errors surface as thrown JavaScript `Error`s.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rotbox::fejer::factorize_with_diagnostics;
use rotbox::games::two_setting_quantum_boundary;
use rotbox::rset::{boundary_sweep, Coef, Direction};
use rotbox::{SpinLabel, TrigPoly};

/// Samples per curve returned to the page for plotting.
const PLOT_SAMPLES: usize = 256;

#[derive(Debug, Serialize)]
pub struct SweepOutput {
    pub two_j: usize,
    /// `(x, y) = (c_{2J-1}, s_{2J})` of each support point.
    pub points: Vec<[f64; 2]>,
    pub support: Vec<f64>,
    pub angles: Vec<f64>,
    /// Largest value of `c_{2J-1} + s_{2J}` on the swept boundary.
    pub gap_max: f64,
    pub failures: usize,
}

/// Sweep the boundary of `R_J` projected on the `(c_{2J-1}, s_{2J})` plane.
pub fn sweep(two_j: usize, angles: usize) -> Result<SweepOutput, String> {
    if two_j == 0 {
        return Err("2J must be at least 1".into());
    }
    let v1 = Direction::from_terms(two_j, &[(Coef::C(two_j - 1), 1.0)]);
    let v2 = Direction::from_terms(two_j, &[(Coef::S(two_j), 1.0)]);
    let pts = boundary_sweep(&v1, &v2, SpinLabel::new(two_j), angles).map_err(|e| e.to_string())?;
    let mut out = SweepOutput {
        two_j,
        points: Vec::new(),
        support: Vec::new(),
        angles: Vec::new(),
        gap_max: f64::NEG_INFINITY,
        failures: 0,
    };
    for p in pts {
        match (p.value, p.projection) {
            (Some(v), Some((x, y))) => {
                out.points.push([x, y]);
                out.support.push(v);
                out.angles.push(p.phi);
                out.gap_max = out.gap_max.max(x + y);
            }
            _ => out.failures += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct FactorOutput {
    /// Coefficients `b_j` as `[re, im]`.
    pub b: Vec<[f64; 2]>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    /// `|Q(theta)|^2` on the same grid.
    pub q_abs_sq: Vec<f64>,
    pub reconstruction_error: f64,
    pub roots_inside: usize,
    pub roots_on_circle: usize,
}

/// Fejer-Riesz factor of `p = c_0 + sum c_k cos k t + s_k sin k t`.
pub fn factor(c: &[f64], s: &[f64]) -> Result<FactorOutput, String> {
    if c.is_empty() {
        return Err("c must contain c_0".into());
    }
    let p = TrigPoly::new(c.len() - 1, c.to_vec(), s.to_vec()).map_err(|e| e.to_string())?;
    let (f, diag) = factorize_with_diagnostics(&p).map_err(|e| e.to_string())?;
    let theta: Vec<f64> = (0..=PLOT_SAMPLES)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / PLOT_SAMPLES as f64)
        .collect();
    let values: Vec<f64> = theta.iter().map(|&t| p.evaluate(t)).collect();
    let q_abs_sq: Vec<f64> = theta.iter().map(|&t| f.q(t).norm_sqr()).collect();
    let reconstruction_error = values
        .iter()
        .zip(&q_abs_sq)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(FactorOutput {
        b: f.b.iter().map(|z| [z.re, z.im]).collect(),
        theta,
        p: values,
        q_abs_sq,
        reconstruction_error,
        roots_inside: diag.inside,
        roots_on_circle: diag.on_circle,
    })
}

#[derive(Debug, Serialize)]
pub struct CurveOutput {
    pub two_j: usize,
    pub alpha: f64,
    pub delta: f64,
    pub e1: Vec<f64>,
    pub e2_min: Vec<f64>,
    pub e2_max: Vec<f64>,
}

/// Quantum region of the correlators `(E1, E2)` for settings `0` and `alpha`.
pub fn two_setting_curve(two_j: usize, alpha: f64, points: usize) -> Result<CurveOutput, String> {
    if points < 2 {
        return Err("need at least 2 points".into());
    }
    let mut out = CurveOutput {
        two_j,
        alpha,
        delta: 0.0,
        e1: Vec::with_capacity(points),
        e2_min: Vec::with_capacity(points),
        e2_max: Vec::with_capacity(points),
    };
    for i in 0..points {
        let e1 = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
        let b = two_setting_quantum_boundary(two_j, alpha, e1).map_err(|e| e.to_string())?;
        out.delta = b.delta;
        out.e1.push(e1);
        out.e2_min.push(b.e2_min);
        out.e2_max.push(b.e2_max);
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = boundarySweep)]
pub fn boundary_sweep_js(two_j: usize, angles: usize) -> Result<String, JsError> {
    to_js(sweep(two_j, angles))
}

#[wasm_bindgen(js_name = fejerFactor)]
pub fn fejer_factor_js(c: Vec<f64>, s: Vec<f64>) -> Result<String, JsError> {
    to_js(factor(&c, &s))
}

#[wasm_bindgen(js_name = twoSettingCurve)]
pub fn two_setting_curve_js(two_j: usize, alpha: f64, points: usize) -> Result<String, JsError> {
    to_js(two_setting_curve(two_j, alpha, points))
}
