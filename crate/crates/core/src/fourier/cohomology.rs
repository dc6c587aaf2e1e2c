use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::{TrigSeries, ZERO};
use crate::error::{Error, Result};
use crate::frequency::ResonanceData;

/// Which modes are treated as resonant by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resonant {
    /// Only `k = 0`.
    OnlyMean,
    /// Every `k` whose first `r` components vanish (reduced coordinates).
    Leading(usize),
}

impl Resonant {
    pub fn from_data(data: Option<&ResonanceData>) -> Self {
        match data {
            Some(d) => Resonant::Leading(d.r),
            None => Resonant::OnlyMean,
        }
    }

    fn contains(&self, k: &[i64]) -> bool {
        match *self {
            Resonant::OnlyMean => k.iter().all(|&x| x == 0),
            Resonant::Leading(r) => k[..r].iter().all(|&x| x == 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohomologySolution {
    /// Zero-average solution of `W - W o T = Q - resonant_part`.
    pub w: TrigSeries,
    pub resonant_part: TrigSeries,
    /// Smallest divisor modulus met among solved modes.
    pub min_divisor: f64,
}

/// Solve `W(x) - W(x + frequency) = Q(x)` mode by mode.
///
/// Resonant modes are moved to `resonant_part` and left unsolved.
/// Non-resonant modes whose coefficient is below `1e-15` of the largest
/// are dropped; any other divisor below `divisor_floor` is an error.
pub fn cohomology_solve(
    q: &TrigSeries,
    frequency: &[f64],
    resonant: Resonant,
    divisor_floor: f64,
) -> Result<CohomologySolution> {
    assert_eq!(frequency.len(), q.dim(), "frequency length must match series dimension");
    let s = q.value_dim();
    let mut w = TrigSeries::zeros(q.dim(), s, q.band());
    let mut res = TrigSeries::zeros(q.dim(), s, q.band());
    let floor = 1e-15 * q.max_abs_coeff();
    let mut min_divisor = f64::INFINITY;
    let mut breach: Option<(Vec<i64>, f64)> = None;
    q.for_each_mode(|idx, k| {
        let src = &q.coeffs()[idx * s..(idx + 1) * s];
        if resonant.contains(k) {
            res.coeffs_mut()[idx * s..(idx + 1) * s].copy_from_slice(src);
            return;
        }
        if src.iter().all(|c| c.norm() <= floor) {
            return;
        }
        let kw: f64 = k.iter().zip(frequency).map(|(&a, &b)| a as f64 * b).sum();
        let div = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 2.0 * PI * kw);
        let modulus = div.norm();
        min_divisor = min_divisor.min(modulus);
        if modulus < divisor_floor {
            if breach.is_none() {
                breach = Some((k.to_vec(), modulus));
            }
            return;
        }
        for c in 0..s {
            w.coeffs_mut()[idx * s + c] = if src[c] == ZERO { ZERO } else { src[c] / div };
        }
    });
    if let Some((k, modulus)) = breach {
        return Err(Error::SmallDivisorBreach { k, modulus, floor: divisor_floor });
    }
    Ok(CohomologySolution { w, resonant_part: res, min_divisor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::golden;

    #[test]
    fn zero_input() {
        let q = TrigSeries::zeros(1, 1, 4);
        let sol = cohomology_solve(&q, &[golden()], Resonant::OnlyMean, 1e-12).unwrap();
        assert_eq!(sol.w.max_abs_coeff(), 0.0);
        assert_eq!(sol.resonant_part.max_abs_coeff(), 0.0);
    }

    #[test]
    fn cosine_closed_form() {
        let mut q = TrigSeries::zeros(1, 1, 1);
        q.set_pair(&[1], 0, Complex64::new(0.5, 0.0));
        let om = golden();
        let sol = cohomology_solve(&q, &[om], Resonant::OnlyMean, 1e-12).unwrap();
        for k in [-1i64, 1] {
            let expect = Complex64::new(0.5, 0.0)
                / (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 2.0 * PI * k as f64 * om));
            assert!((sol.w.get(&[k], 0) - expect).norm() < 1e-15);
        }
        let mut worst = 0.0f64;
        for i in 0..64 {
            let x = i as f64 / 64.0;
            let lhs = sol.w.eval1(&[x]) - sol.w.eval1(&[x + om]);
            worst = worst.max((lhs - (2.0 * PI * x).cos()).abs());
        }
        assert!(worst <= 1e-12);
    }

    #[test]
    fn pure_resonant_mode() {
        let mut q = TrigSeries::zeros(2, 1, 1);
        q.set_pair(&[0, 1], 0, Complex64::new(0.0, -0.5));
        let sol = cohomology_solve(&q, &[golden(), 0.0], Resonant::Leading(1), 1e-12).unwrap();
        assert_eq!(sol.w.max_abs_coeff(), 0.0);
        assert_eq!(sol.resonant_part, q);
    }

    #[test]
    fn breach_reported() {
        let mut q = TrigSeries::zeros(1, 1, 2);
        q.set_pair(&[2], 0, Complex64::new(1.0, 0.0));
        let err = cohomology_solve(&q, &[0.5], Resonant::OnlyMean, 1e-12).unwrap_err();
        assert!(matches!(err, Error::SmallDivisorBreach { .. }));
    }
}
