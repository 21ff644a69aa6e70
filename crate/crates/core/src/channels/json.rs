use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnsembleJson {
    pub alphabet: Vec<serde_json::Value>,
    pub pmf: Vec<f64>,
    pub states: Vec<MatrixJson>,
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if nr == 0 || nc == 0 {
        return Err(Error::MalformedInput("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::MalformedInput("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(nr, nc, |r, k| c(rows[r][k][0], rows[r][k][1])))
}
