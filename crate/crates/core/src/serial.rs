//! JSON wire shapes shared by operators, states and covariance matrices.
//!
//! Complex data is split into row-major `re` / `im` arrays of IEEE-754 doubles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        MatrixJson {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.dim;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Shape(format!("expected {n} rows in re/im")));
        }
        let mut m = CMat::zeros(n, n);
        for r in 0..n {
            if self.re[r].len() != n || self.im[r].len() != n {
                return Err(Error::Shape(format!("row {r} must have {n} entries")));
            }
            for c in 0..n {
                m[(r, c)] = C64::new(self.re[r][c], self.im[r][c]);
            }
        }
        Ok(m)
    }
}

pub(crate) fn split_vec(v: &CVec) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect())
}

pub(crate) fn join_vec(re: &[f64], im: &[f64]) -> Result<CVec> {
    if re.len() != im.len() {
        return Err(Error::Shape(format!(
            "re has {} entries, im has {}",
            re.len(),
            im.len()
        )));
    }
    Ok(CVec::from_iterator(
        re.len(),
        re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)),
    ))
}

pub(crate) fn split_rows(m: &CMat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let j = MatrixJson::from_matrix(m);
    (j.re, j.im)
}
