//! Serde adapters: complex numbers travel as `[re, im]` pairs and complex
//! matrices as row-major nested arrays of such pairs.

use crate::linalg::{CMat, C64};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn unpair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

pub fn cmat_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|j| (0..m.ncols()).map(|k| pair(m[(j, k)])).collect())
        .collect()
}

pub fn cmat_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat, String> {
    let n = rows.len();
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMat::from_fn(n, cols, |j, k| unpair(rows[j][k])))
}

/// `#[serde(with = "crate::json::cmat")]`
pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        cmat_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        cmat_from_rows(&rows).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "crate::json::cmat_vec")]`
pub mod cmat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(cmat_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        let all: Vec<Vec<Vec<[f64; 2]>>> = Vec::deserialize(d)?;
        all.iter()
            .map(|rows| cmat_from_rows(rows).map_err(D::Error::custom))
            .collect()
    }
}

/// `#[serde(with = "crate::json::cvec")]`
pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&z| pair(z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(unpair).collect())
    }
}
