use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TrigSeries;
use crate::error::{invalid, Error};

/// One stored mode in the JSON form of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRepr {
    pub k: Vec<i64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Sparse JSON form: only modes with a nonzero component are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRepr {
    pub dim: usize,
    pub value_dim: usize,
    pub band: usize,
    pub coeffs: Vec<ModeRepr>,
}

impl From<TrigSeries> for SeriesRepr {
    fn from(s: TrigSeries) -> Self {
        let mut coeffs = Vec::new();
        let vd = s.value_dim();
        s.for_each_mode(|idx, k| {
            let c = &s.coeffs()[idx * vd..(idx + 1) * vd];
            if c.iter().any(|z| z.re != 0.0 || z.im != 0.0) {
                coeffs.push(ModeRepr {
                    k: k.to_vec(),
                    re: c.iter().map(|z| z.re).collect(),
                    im: c.iter().map(|z| z.im).collect(),
                });
            }
        });
        SeriesRepr { dim: s.dim(), value_dim: vd, band: s.band(), coeffs }
    }
}

impl TryFrom<SeriesRepr> for TrigSeries {
    type Error = Error;

    fn try_from(r: SeriesRepr) -> Result<Self, Error> {
        if r.value_dim == 0 {
            return Err(invalid!("value_dim must be positive"));
        }
        let mut s = TrigSeries::zeros(r.dim, r.value_dim, r.band);
        for m in &r.coeffs {
            if m.k.len() != r.dim || m.re.len() != r.value_dim || m.im.len() != r.value_dim {
                return Err(invalid!("mode {:?} has the wrong shape", m.k));
            }
            if s.index_of(&m.k).is_none() {
                return Err(invalid!("mode {:?} lies outside band {}", m.k, r.band));
            }
            if m.re.iter().chain(&m.im).any(|v| !v.is_finite()) {
                return Err(invalid!("mode {:?} has a non-finite coefficient", m.k));
            }
            for c in 0..r.value_dim {
                s.set(&m.k, c, Complex64::new(m.re[c], m.im[c]));
            }
        }
        s.check_reality(1e-12)?;
        Ok(s)
    }
}
