use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{oversampled_grid, TrigSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub rho: f64,
    /// `sum_k max_c |w(k)| e^{2 pi |k|_1 rho}`.
    pub sup_norm_rho: f64,
    /// The same sum at `rho = 0`.
    pub sup_norm_0: f64,
    /// Grid sup of all order-`j` partial derivatives, `j = 0..=j_max`.
    pub c_norms: Vec<f64>,
}

/// Multi-indices of total order `j` in `d` variables.
pub(crate) fn multi_indices(d: usize, j: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return if j == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=j).rev() {
        for mut rest in multi_indices(d - 1, j - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn norms(series: &TrigSeries, rho: f64, j_max: usize) -> NormReport {
    let vd = series.value_dim();
    let mut sup_rho = 0.0;
    let mut sup_0 = 0.0;
    series.for_each_mode(|idx, k| {
        let m = series.coeffs()[idx * vd..(idx + 1) * vd].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let l1: i64 = k.iter().map(|x| x.abs()).sum();
        sup_rho += m * (2.0 * PI * l1 as f64 * rho).exp();
        sup_0 += m;
    });
    let n = oversampled_grid(series.band());
    let c_norms = (0..=j_max)
        .map(|j| {
            multi_indices(series.dim(), j)
                .iter()
                .map(|beta| series.partial(beta).grid_sup(n))
                .fold(0.0, f64::max)
        })
        .collect();
    NormReport { rho, sup_norm_rho: sup_rho, sup_norm_0: sup_0, c_norms }
}
