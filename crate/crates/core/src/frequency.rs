//! Resonance detection, unimodular reduction to the intrinsic frequency,
//! and empirical Diophantine constants.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{self, IntMatrix};

/// Default search box for resonance detection.
pub const DEFAULT_K_MAX: usize = 32;
/// Default tolerance on `dist(k.Omega, Z)`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Golden mean conjugate `(sqrt 5 - 1) / 2`.
pub fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Integer relation `k . Omega = n` (within tolerance).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceRelation {
    pub k: Vec<i64>,
    pub n: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectOptions {
    pub k_max: usize,
    pub tol: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { k_max: DEFAULT_K_MAX, tol: DEFAULT_TOL }
    }
}

/// Resonance module of a frequency vector and its unimodular reduction
/// `A Omega = (omega, 0) + L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceData {
    /// The analysed frequency vector.
    pub frequency: Vec<f64>,
    pub relations: Vec<ResonanceRelation>,
    /// Hermite basis of the module, `(d - r) x d`.
    pub basis: IntMatrix,
    pub a_matrix: IntMatrix,
    /// Intrinsic frequency, length `r`.
    pub omega: Vec<f64>,
    pub l: Vec<i64>,
    pub r: usize,
}

impl ResonanceData {
    pub fn dim(&self) -> usize {
        self.frequency.len()
    }

    /// `A Omega` as floats.
    pub fn reduced_frequency(&self) -> Vec<f64> {
        lattice::mat_vec_f64(&self.a_matrix, &self.frequency)
    }

    /// `A^{-1}`, integer since `A` is unimodular.
    pub fn a_inverse(&self) -> IntMatrix {
        lattice::inverse_unimodular(&self.a_matrix).expect("A is unimodular")
    }

    /// Full reduced rotation `(omega, 0) + L`.
    pub fn reduced_rotation(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.l.iter().map(|&x| x as f64).collect();
        for (vi, w) in v.iter_mut().zip(&self.omega) {
            *vi += w;
        }
        v
    }

    /// Trivial decomposition for a non-resonant vector: `A = I`, `r = d`.
    pub fn non_resonant(frequency: &[f64]) -> Self {
        let d = frequency.len();
        ResonanceData {
            frequency: frequency.to_vec(),
            relations: Vec::new(),
            basis: Vec::new(),
            a_matrix: (0..d).map(|i| (0..d).map(|j| (i == j) as i64).collect()).collect(),
            omega: frequency.to_vec(),
            l: vec![0; d],
            r: d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineEstimate {
    pub tau: f64,
    pub nu: f64,
    pub k_max: usize,
    /// Mode attaining the minimum.
    pub argmin: Vec<i64>,
}

fn dist_to_int(x: f64) -> (f64, i64) {
    let n = x.round();
    ((x - n).abs(), n as i64)
}

fn dot(k: &[i64], v: &[f64]) -> f64 {
    k.iter().zip(v).map(|(&a, &b)| a as f64 * b).sum()
}

/// Visit every `k` in the box `|k|_inf <= k_max` whose first nonzero
/// component is positive.
fn for_each_half_box(d: usize, k_max: i64, mut f: impl FnMut(&[i64])) {
    let mut k = vec![-k_max; d];
    loop {
        if let Some(first) = k.iter().find(|&&x| x != 0) {
            if *first > 0 {
                f(&k);
            }
        }
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if k[i] < k_max {
                k[i] += 1;
                break;
            }
            k[i] = -k_max;
        }
    }
}

/// All integer relations of `omega` in the box `|k|_inf <= k_max`,
/// returned as a Hermite basis of the lattice they generate.
pub fn detect_resonances(omega: &[f64], opts: DetectOptions) -> Vec<ResonanceRelation> {
    let d = omega.len();
    let mut basis: IntMatrix = Vec::new();
    for_each_half_box(d, opts.k_max as i64, |k| {
        if dist_to_int(dot(k, omega)).0 <= opts.tol {
            let mut rows = basis.clone();
            rows.push(k.to_vec());
            basis = lattice::hermite_rows(&rows);
        }
    });
    basis
        .into_iter()
        .map(|k| {
            let n = dist_to_int(dot(&k, omega)).1;
            ResonanceRelation { k, n }
        })
        .collect()
}

/// Unimodular `A` whose last `d - r` rows span the resonance module, with
/// the intrinsic frequency `omega = (A Omega)[..r]`.
pub fn intrinsic_decomposition(
    frequency: &[f64],
    relations: &[ResonanceRelation],
    opts: DetectOptions,
) -> Result<ResonanceData> {
    let d = frequency.len();
    if relations.is_empty() {
        return Err(invalid!("intrinsic decomposition needs at least one relation"));
    }
    if relations.iter().any(|r| r.k.len() != d) {
        return Err(invalid!("relation length does not match dimension {d}"));
    }
    let rows: IntMatrix = relations.iter().map(|r| r.k.clone()).collect();
    let basis = lattice::hermite_rows(&rows);
    let m = basis.len();
    let r = d - m;
    let divisors = lattice::smith_diagonal(&basis);
    if divisors.iter().any(|&x| x != 1) {
        return Err(Error::NonSaturatedModule { divisors });
    }
    let (h, w) = lattice::column_reduce(&basis)
        .ok_or_else(|| invalid!("relations are linearly dependent"))?;
    if lattice::det(&h).abs() != 1 {
        return Err(Error::NonSaturatedModule { divisors: lattice::smith_diagonal(&h) });
    }
    let w_inv = lattice::inverse_unimodular(&w).expect("column reduction is unimodular");
    let mut a: IntMatrix = w_inv[m..].to_vec();
    a.extend(basis.iter().cloned());
    if lattice::det(&a) < 0 {
        if r >= 2 {
            a.swap(0, 1);
        } else {
            for x in a[0].iter_mut() {
                *x = -*x;
            }
        }
    }
    debug_assert_eq!(lattice::det(&a), 1);
    let reduced = lattice::mat_vec_f64(&a, frequency);
    let omega = reduced[..r].to_vec();
    let mut l = vec![0i64; d];
    for i in r..d {
        let (gap, n) = dist_to_int(reduced[i]);
        if gap > 10.0 * opts.tol {
            return Err(invalid!("relations do not hold for the given frequency (gap {gap:e})"));
        }
        l[i] = n;
    }
    if r > 0 {
        if let Some(rel) = detect_resonances(&omega, opts).into_iter().next() {
            return Err(Error::ResidualResonance { k: rel.k });
        }
    }
    let relations = basis
        .iter()
        .map(|k| ResonanceRelation { k: k.clone(), n: dist_to_int(dot(k, frequency)).1 })
        .collect();
    Ok(ResonanceData { frequency: frequency.to_vec(), relations, basis, a_matrix: a, omega, l, r })
}

/// Detection followed by decomposition; non-resonant vectors give the
/// trivial decomposition.
pub fn analyze(frequency: &[f64], opts: DetectOptions) -> Result<ResonanceData> {
    let relations = detect_resonances(frequency, opts);
    if relations.is_empty() {
        Ok(ResonanceData::non_resonant(frequency))
    } else {
        intrinsic_decomposition(frequency, &relations, opts)
    }
}

/// `min |k.omega - n| |k|_1^tau` over `0 < |k|_1 <= k_max`.
pub fn diophantine_estimate(omega: &[f64], tau: f64, k_max: usize) -> Result<DiophantineEstimate> {
    if omega.is_empty() || k_max == 0 || !(tau > 0.0) {
        return Err(invalid!("diophantine estimate needs r >= 1, k_max >= 1, tau > 0"));
    }
    let r = omega.len();
    let mut best = f64::INFINITY;
    let mut argmin = vec![0i64; r];
    let mut k = vec![0i64; r];
    let mut exact: Option<Vec<i64>> = None;
    // Depth-first walk over the half-space of the l1 ball.
    fn walk(
        i: usize,
        budget: i64,
        k: &mut Vec<i64>,
        omega: &[f64],
        tau: f64,
        leading: bool,
        best: &mut f64,
        argmin: &mut Vec<i64>,
        exact: &mut Option<Vec<i64>>,
    ) {
        let r = k.len();
        if i == r {
            let norm: i64 = k.iter().map(|x| x.abs()).sum();
            if norm == 0 {
                return;
            }
            let x = dot(k, omega);
            let (gap, _) = dist_to_int(x);
            if gap <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                if exact.is_none() {
                    *exact = Some(k.clone());
                }
                return;
            }
            let v = gap * (norm as f64).powf(tau);
            if v < *best {
                *best = v;
                argmin.clone_from(k);
            }
            return;
        }
        let lo = if leading { 0 } else { -budget };
        for c in lo..=budget {
            k[i] = c;
            walk(i + 1, budget - c.abs(), k, omega, tau, leading && c == 0, best, argmin, exact);
        }
        k[i] = 0;
    }
    if r == 1 {
        for n in 1..=k_max as i64 {
            let x = n as f64 * omega[0];
            let (gap, _) = dist_to_int(x);
            if gap <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                return Err(Error::ZeroDivisor { k: vec![n] });
            }
            let v = gap * (n as f64).powf(tau);
            if v < best {
                best = v;
                argmin = vec![n];
            }
        }
    } else {
        walk(0, k_max as i64, &mut k, omega, tau, true, &mut best, &mut argmin, &mut exact);
        if let Some(k) = exact {
            return Err(Error::ZeroDivisor { k });
        }
    }
    Ok(DiophantineEstimate { tau, nu: best, k_max, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_with_integer_component() {
        let rel = detect_resonances(&[golden(), 1.0], DetectOptions { k_max: 8, tol: 1e-9 });
        assert_eq!(rel, vec![ResonanceRelation { k: vec![0, 1], n: 1 }]);
        let data = intrinsic_decomposition(&[golden(), 1.0], &rel, DetectOptions::default()).unwrap();
        assert_eq!(data.a_matrix, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(data.l, vec![0, 1]);
        assert_eq!(data.r, 1);
        assert!((data.omega[0] - golden()).abs() < 1e-15);
    }

    #[test]
    fn irrational_scalar_has_no_resonance() {
        let rel = detect_resonances(&[golden()], DetectOptions { k_max: 100, tol: 1e-9 });
        assert!(rel.is_empty());
        assert!(intrinsic_decomposition(&[golden()], &rel, DetectOptions::default()).is_err());
    }

    #[test]
    fn proportional_components() {
        let om = [golden(), 2.0 * golden()];
        let rel = detect_resonances(&om, DetectOptions { k_max: 8, tol: 1e-9 });
        assert_eq!(rel, vec![ResonanceRelation { k: vec![2, -1], n: 0 }]);
        let data = intrinsic_decomposition(&om, &rel, DetectOptions::default()).unwrap();
        assert_eq!(lattice::det(&data.a_matrix), 1);
        assert_eq!(data.a_matrix[1], vec![2, -1]);
        let red = data.reduced_frequency();
        assert!(red[1].abs() < 1e-12);
        assert_eq!(data.l, vec![0, 0]);
    }

    #[test]
    fn non_saturated_rejected() {
        let om = [0.5, golden()];
        let rel = detect_resonances(&om, DetectOptions::default());
        assert_eq!(rel[0].k, vec![2, 0]);
        let err = intrinsic_decomposition(&om, &rel, DetectOptions::default()).unwrap_err();
        assert_eq!(err, Error::NonSaturatedModule { divisors: vec![2] });
    }

    #[test]
    fn residual_resonance_reported() {
        // The relation (0, 1) alone leaves omega = 1/2 resonant.
        let om = [0.5, 1.0];
        let rel = [ResonanceRelation { k: vec![0, 1], n: 1 }];
        let err = intrinsic_decomposition(&om, &rel, DetectOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ResidualResonance { .. }));
    }

    #[test]
    fn diophantine_golden() {
        let e1 = diophantine_estimate(&[golden()], 1.0, 10_000).unwrap();
        let e2 = diophantine_estimate(&[golden()], 2.0, 10_000).unwrap();
        assert!(e1.nu > 0.38 && e1.nu < 0.382);
        assert!(e2.nu >= e1.nu);
        let err = diophantine_estimate(&[0.5], 1.0, 10).unwrap_err();
        assert_eq!(err, Error::ZeroDivisor { k: vec![2] });
    }

    #[test]
    fn diophantine_two_dim_matches_brute_force() {
        let om = [golden(), 2f64.sqrt() - 1.0];
        let est = diophantine_estimate(&om, 2.0, 40).unwrap();
        let mut best = f64::INFINITY;
        for a in -40i64..=40 {
            for b in -40i64..=40 {
                let n = a.abs() + b.abs();
                if n == 0 || n > 40 {
                    continue;
                }
                let x = a as f64 * om[0] + b as f64 * om[1];
                best = best.min((x - x.round()).abs() * (n as f64).powi(2));
            }
        }
        assert!((est.nu - best).abs() < 1e-15);
    }
}
