//! Parsing of polynomials, directions and tensors from files and flags.

use std::path::Path;

use rotbox::bell::CorrelationTensor;
use rotbox::fixtures::parse_number;
use rotbox::rset::{Coef, Direction};
use rotbox::TrigPoly;
use serde_json::Value;

use crate::error::CliError;

fn number(v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| CliError::usage(format!("number out of range: {n}"))),
        Value::String(s) => parse_number(s).map_err(|e| CliError::usage(e.to_string())),
        other => Err(CliError::usage(format!("expected a number, got {other}"))),
    }
}

fn number_list(v: &Value, field: &str) -> Result<Vec<f64>, CliError> {
    v.as_array()
        .ok_or_else(|| CliError::usage(format!("field {field:?} must be an array")))?
        .iter()
        .map(number)
        .collect()
}

/// Comma-separated numbers; each entry may be a fraction or `sqrt(...)`.
pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| parse_number(t).map_err(|e| CliError::usage(e.to_string())))
        .collect()
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Select an object from a file holding either one object or an array of
/// them (optionally by `name`).
fn pick<'a>(value: &'a Value, name: Option<&str>) -> Result<&'a Value, CliError> {
    match value {
        Value::Array(items) => match name {
            Some(n) => items
                .iter()
                .find(|v| v.get("name").and_then(Value::as_str) == Some(n))
                .ok_or_else(|| CliError::usage(format!("no entry named {n:?}"))),
            None => items.first().ok_or_else(|| CliError::usage("empty array")),
        },
        obj => Ok(obj),
    }
}

/// A polynomial from `{"c": [...], "s": [...], "two_j"?: n}`, where entries
/// are numbers or numeric strings. Fixture files work as-is.
pub fn poly_from_value(v: &Value, two_j: Option<usize>) -> Result<TrigPoly, CliError> {
    let c = number_list(
        v.get("c")
            .ok_or_else(|| CliError::usage("polynomial needs a \"c\" array"))?,
        "c",
    )?;
    let s = match v.get("s") {
        Some(s) => number_list(s, "s")?,
        None => Vec::new(),
    };
    if c.is_empty() {
        return Err(CliError::usage("\"c\" must contain c_0"));
    }
    let native = c.len() - 1;
    let p = TrigPoly::new(native, c, s)?;
    let declared = v.get("two_j").and_then(Value::as_u64).map(|x| x as usize);
    pad(p, two_j.or(declared))
}

fn pad(p: TrigPoly, two_j: Option<usize>) -> Result<TrigPoly, CliError> {
    match two_j {
        Some(t) if t < p.two_j() => Err(CliError::usage(format!(
            "polynomial has degree {} but --two-j is {t}",
            p.two_j()
        ))),
        Some(t) => Ok(p.padded(t)),
        None => Ok(p),
    }
}

/// Source of a polynomial on the command line.
#[derive(Debug, Clone, clap::Args)]
pub struct PolyArgs {
    /// JSON file with `c` and `s` arrays (fixture files are accepted).
    #[arg(long, value_name = "FILE")]
    pub poly: Option<std::path::PathBuf>,
    /// Entry to use when the file holds an array of fixtures.
    #[arg(long)]
    pub name: Option<String>,
    /// Cosine coefficients `c_0,...,c_d`.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Sine coefficients `s_1,...,s_d`.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Doubled spin `2J`; the polynomial is padded to this degree.
    #[arg(long = "two-j")]
    pub two_j: Option<usize>,
}

impl PolyArgs {
    pub fn load(&self) -> Result<TrigPoly, CliError> {
        match (&self.poly, &self.c) {
            (Some(path), None) => {
                let v = read_json(path)?;
                poly_from_value(pick(&v, self.name.as_deref())?, self.two_j)
            }
            (None, Some(c)) => {
                let c = parse_list(c)?;
                let s = parse_list(self.s.as_deref().unwrap_or(""))?;
                if c.is_empty() {
                    return Err(CliError::usage("--c must contain c_0"));
                }
                let p = TrigPoly::new(c.len() - 1, c, s)?;
                pad(p, self.two_j)
            }
            (Some(_), Some(_)) => Err(CliError::usage("give either --poly or --c/--s, not both")),
            (None, None) => Err(CliError::usage(
                "a polynomial is required (--poly FILE or --c ... --s ...)",
            )),
        }
    }
}

fn coef(token: &str) -> Result<Coef, CliError> {
    let bad = || CliError::usage(format!("bad coefficient name {token:?}; use c0, c1, s1, ..."));
    let (kind, k) = token.split_at(1);
    let k: usize = k.parse().map_err(|_| bad())?;
    match kind {
        "c" | "C" => Ok(Coef::C(k)),
        "s" | "S" if k >= 1 => Ok(Coef::S(k)),
        _ => Err(bad()),
    }
}

/// Split at `,` and `+`, and before a `-` that starts a new term.
fn split_terms(text: &str) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut prev = None;
    for ch in text.chars().filter(|c| !c.is_whitespace()) {
        let starts_term = matches!(ch, ',' | '+')
            || (ch == '-' && !matches!(prev, None | Some('=') | Some('*') | Some(',') | Some('+')));
        if starts_term {
            parts.push(String::new());
        }
        if ch != ',' && ch != '+' {
            parts.last_mut().expect("non-empty").push(ch);
        }
        prev = Some(ch);
    }
    parts
}

/// Named terms such as `c2+s3`, `c2=1,s3=-0.5` or `2*c1-s1`.
pub fn parse_terms(text: &str, two_j: usize) -> Result<Direction, CliError> {
    let mut terms = Vec::new();
    for part in split_terms(text).iter().filter(|p| !p.is_empty()) {
        let (weight, name) = if let Some((name, w)) = part.split_once('=') {
            (
                parse_number(w).map_err(|e| CliError::usage(e.to_string()))?,
                name.to_string(),
            )
        } else if let Some((w, name)) = part.split_once('*') {
            (
                parse_number(w).map_err(|e| CliError::usage(e.to_string()))?,
                name.to_string(),
            )
        } else if let Some(name) = part.strip_prefix('-') {
            (-1.0, name.to_string())
        } else {
            (1.0, part.to_string())
        };
        let c = coef(&name)?;
        if c.index() > 2 * two_j {
            return Err(CliError::usage(format!("{name} exceeds degree 2J = {two_j}")));
        }
        terms.push((c, weight));
    }
    if terms.is_empty() {
        return Err(CliError::usage(format!("no terms in {text:?}")));
    }
    Ok(Direction::from_terms(two_j, &terms))
}

/// A direction either as raw coefficients or as named terms; defaults to the
/// gap functional `c_{2J-1} + s_{2J}`.
#[derive(Debug, Clone, clap::Args)]
pub struct DirectionArgs {
    /// Full direction vector `(n_c0, n_c1, n_s1, ...)`, comma separated.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "terms")]
    pub direction: Option<String>,
    /// Named terms, e.g. `c2+s3` or `c1=0.5,s2=-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub terms: Option<String>,
}

impl DirectionArgs {
    pub fn load(&self, two_j: usize) -> Result<Direction, CliError> {
        if let Some(d) = &self.direction {
            let n = parse_list(d)?;
            if n.len() != 2 * two_j + 1 {
                return Err(CliError::usage(format!(
                    "direction has {} entries, expected {} for 2J = {two_j}",
                    n.len(),
                    2 * two_j + 1
                )));
            }
            return Ok(Direction::new(n));
        }
        if let Some(t) = &self.terms {
            return parse_terms(t, two_j);
        }
        if two_j == 0 {
            return Err(CliError::usage("the default gap functional needs 2J >= 1"));
        }
        Ok(Direction::gap_functional(two_j))
    }
}

/// `{"parties": n, "t": [...]}` or a bare array (party count inferred).
pub fn load_tensor(path: &Path) -> Result<CorrelationTensor, CliError> {
    let v = read_json(path)?;
    let (parties, t) = match &v {
        Value::Array(_) => {
            let t = number_list(&v, "tensor")?;
            let mut parties = 0;
            let mut len = 1;
            while len < t.len() {
                len *= 3;
                parties += 1;
            }
            (parties, t)
        }
        obj => {
            let t = number_list(
                obj.get("t")
                    .ok_or_else(|| CliError::usage("tensor file needs a \"t\" array"))?,
                "t",
            )?;
            let parties = obj
                .get("parties")
                .and_then(Value::as_u64)
                .ok_or_else(|| CliError::usage("tensor file needs \"parties\""))? as usize;
            (parties, t)
        }
    };
    Ok(CorrelationTensor::new(parties, t)?)
}
