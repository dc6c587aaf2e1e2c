//! A-posteriori KAM for foliation-preserving maps `F(x) = x + f(x) Omega`.
//!
//! The unknowns are a scalar `h` with `H = Id + h Omega` and a constant
//! `lambda` such that `F o H = H o T_{alpha Omega} + lambda Omega`. Newton
//! steps use the rank-one structure of `DH = I + Omega grad(h)^T`, which
//! reduces the linearized equation to one cohomological equation.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{cohomology_solve, norms, oversampled_grid, wrap, Grid, Resonant, TrigSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KamConfig {
    pub band: usize,
    /// Collocation grid per axis; `None` means `4K`.
    pub grid: Option<usize>,
    pub tol: f64,
    pub max_steps: usize,
    pub divisor_floor: f64,
    /// Floor for `min |1 + grad h . Omega|`.
    pub invertibility_floor: f64,
    /// Floor for `det <(DH)^{-1}> = <1 / (1 + grad h . Omega)>`.
    pub nondegeneracy_floor: f64,
    /// Initial width of the analyticity ledger.
    pub rho0: f64,
}

impl Default for KamConfig {
    fn default() -> Self {
        KamConfig {
            band: 32,
            grid: None,
            tol: 1e-11,
            max_steps: 12,
            divisor_floor: 1e-9,
            invertibility_floor: 1e-6,
            nondegeneracy_floor: 1e-8,
            rho0: 0.05,
        }
    }
}

impl KamConfig {
    pub fn grid_size(&self) -> usize {
        self.grid.unwrap_or_else(|| oversampled_grid(self.band))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KamRecord {
    /// Grid sup of the residual.
    pub residual: f64,
    /// Average of the residual.
    pub mean: f64,
    /// `sum_k |e(k)| e^{2 pi |k| rho_n}`.
    pub coefficient_norm: f64,
    /// Mass of the residual beyond the band.
    pub tail: f64,
    pub nondegeneracy: f64,
    /// `sum_k |h(k)| e^{2 pi |k| rho_n}` at the current ledger width.
    pub weighted_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KamState {
    pub h: TrigSeries,
    pub lambda: f64,
    pub residual_norm: f64,
    pub history: Vec<KamRecord>,
    pub rho_schedule: Vec<f64>,
    pub converged: bool,
    /// `|lambda - lambda0|` and `sup |h - h0|`.
    pub lambda_shift: f64,
    pub h_shift: f64,
    pub initial_residual: f64,
}

impl KamState {
    pub fn steps(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    /// Ratio of the distance travelled to the initial residual.
    pub fn bound_ratio(&self) -> f64 {
        self.lambda_shift.max(self.h_shift) / self.initial_residual
    }

    /// Slope of `log e_{n+1}` against `log e_n`. Pairs ending at the
    /// truncation or round-off floor are skipped, and so is a first step
    /// whose residual is mostly constant: `dlambda` removes that exactly.
    /// `None` with fewer than three pairs.
    pub fn convergence_slope(&self) -> Option<f64> {
        let skip = match self.history.first() {
            Some(r) if r.mean.abs() > 0.5 * r.residual => 1,
            _ => 0,
        };
        let pts: Vec<(f64, f64)> = self.history[skip.min(self.history.len())..]
            .windows(2)
            .filter(|w| w[1].residual > 100.0 * w[1].tail.max(1e-16))
            .map(|w| (w[0].residual.ln(), w[1].residual.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }
}

fn check(f: &TrigSeries, omega: &[f64], h: &TrigSeries) -> Result<()> {
    let d = omega.len();
    if d == 0 || f.dim() != d || f.value_dim() != 1 || h.dim() != d || h.value_dim() != 1 {
        return Err(invalid!("f and h must be scalar series on T^{d}"));
    }
    Ok(())
}

/// Pointwise residual `e = h - h o T - alpha - lambda + f o (Id + h Omega)`
/// on the `n^d` grid.
fn residual_samples(f: &TrigSeries, h: &TrigSeries, lambda: f64, alpha: f64, omega: &[f64], n: usize) -> Vec<f64> {
    let d = omega.len();
    let shift: Vec<f64> = omega.iter().map(|w| alpha * w).collect();
    let hv = h.sample(n).swap_remove(0);
    let ht = h.shift(&shift).sample(n).swap_remove(0);
    let grid = Grid::new(d, n);
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    (0..grid.len())
        .map(|p| {
            grid.point_into(p, &mut x);
            for i in 0..d {
                y[i] = x[i] + hv[p] * omega[i];
            }
            hv[p] - ht[p] - alpha - lambda + f.eval1(&y)
        })
        .collect()
}

/// Residual series (truncated to `band`), its dropped tail and the grid sup.
pub fn residual(
    f: &TrigSeries,
    h: &TrigSeries,
    lambda: f64,
    alpha: f64,
    omega: &[f64],
    band: usize,
    n: usize,
) -> Result<(TrigSeries, f64, f64)> {
    check(f, omega, h)?;
    let e = residual_samples(f, h, lambda, alpha, omega, n);
    let sup = e.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let (series, tail) = TrigSeries::from_samples(omega.len(), n, band, &[e])?;
    Ok((series, tail, sup))
}

/// `sup |F o H - H o T_{alpha Omega} - lambda Omega|` as torus vectors, on
/// an `n^d` grid.
pub fn solution_defect(f: &TrigSeries, h: &TrigSeries, lambda: f64, alpha: f64, omega: &[f64], n: usize) -> f64 {
    let d = omega.len();
    let shift: Vec<f64> = omega.iter().map(|w| alpha * w).collect();
    let hv = h.sample(n).swap_remove(0);
    let ht = h.shift(&shift).sample(n).swap_remove(0);
    let grid = Grid::new(d, n);
    let mut worst = 0.0f64;
    let mut x = vec![0.0; d];
    let mut hx = vec![0.0; d];
    for p in 0..grid.len() {
        grid.point_into(p, &mut x);
        for i in 0..d {
            hx[i] = x[i] + hv[p] * omega[i];
        }
        let fs = f.eval1(&hx);
        for i in 0..d {
            let lhs = hx[i] + fs * omega[i];
            let rhs = x[i] + alpha * omega[i] + (ht[p] + lambda) * omega[i];
            worst = worst.max(wrap(lhs - rhs).abs());
        }
    }
    worst
}

struct Linearization {
    q: Vec<f64>,
    qt: Vec<f64>,
    nondegeneracy: f64,
}

fn linearize(h: &TrigSeries, alpha: f64, omega: &[f64], n: usize, cfg: &KamConfig) -> Result<Linearization> {
    let shift: Vec<f64> = omega.iter().map(|w| alpha * w).collect();
    let dq = h.directional(omega);
    let q: Vec<f64> = dq.sample(n).swap_remove(0).into_iter().map(|v| 1.0 + v).collect();
    let qt: Vec<f64> = dq.shift(&shift).sample(n).swap_remove(0).into_iter().map(|v| 1.0 + v).collect();
    let min_abs = q.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let positive = q.iter().all(|&v| v > 0.0);
    if min_abs < cfg.invertibility_floor || !positive {
        return Err(Error::NotInvertible { min_jacobian: if positive { min_abs } else { 0.0 } });
    }
    let nondegeneracy = q.iter().map(|v| 1.0 / v).sum::<f64>() / q.len() as f64;
    if nondegeneracy < cfg.nondegeneracy_floor {
        return Err(Error::NonDegeneracyFail { quantity: nondegeneracy });
    }
    Ok(Linearization { q, qt, nondegeneracy })
}

fn record(h: &TrigSeries, e: &TrigSeries, residual: f64, tail: f64, nondegeneracy: f64, rho: f64) -> KamRecord {
    KamRecord {
        residual,
        mean: e.mean()[0],
        coefficient_norm: norms(e, rho, 0).sup_norm_rho,
        tail,
        nondegeneracy,
        weighted_norm: norms(h, rho, 0).sup_norm_rho,
    }
}

/// One Newton step; the returned state carries a freshly computed residual.
pub fn newton_step(state: &KamState, f: &TrigSeries, alpha: f64, omega: &[f64], cfg: &KamConfig) -> Result<KamState> {
    check(f, omega, &state.h)?;
    let d = omega.len();
    let n = cfg.grid_size();
    let band = cfg.band;
    let e = residual_samples(f, &state.h, state.lambda, alpha, omega, n);
    let lin = linearize(&state.h, alpha, omega, n, cfg)?;

    // Zero average of (dlambda - e) / q o T fixes dlambda.
    let m = e.len() as f64;
    let num = e.iter().zip(&lin.qt).map(|(a, b)| a / b).sum::<f64>() / m;
    let den = lin.qt.iter().map(|b| 1.0 / b).sum::<f64>() / m;
    let dlambda = num / den;
    let rhs: Vec<f64> = e.iter().zip(&lin.qt).map(|(a, b)| (dlambda - a) / b).collect();
    let (rhs, _) = TrigSeries::from_samples(d, n, band, &[rhs])?;
    let freq: Vec<f64> = omega.iter().map(|w| alpha * w).collect();
    let w = cohomology_solve(&rhs, &freq, Resonant::OnlyMean, cfg.divisor_floor)?.w;
    let wv = w.sample(n).swap_remove(0);
    let dh: Vec<f64> = wv.iter().zip(&lin.q).map(|(a, b)| a * b).collect();
    let (dh, _) = TrigSeries::from_samples(d, n, band, &[dh])?;

    let h = state.h.with_band(band).0.add(&dh);
    let lambda = state.lambda + dlambda;
    let (es, tail, sup) = residual(f, &h, lambda, alpha, omega, band, n)?;
    let nondeg = linearize(&h, alpha, omega, n, cfg).map(|l| l.nondegeneracy).unwrap_or(0.0);
    let k = state.rho_schedule.len();
    // rho_{n+1} = rho_n - sigma_{n+1}, sigma_n = 2^{-(n-1)} sigma, sigma = rho0 / 4.
    let sigma = cfg.rho0 / 4.0 * 0.5f64.powi(k as i32 - 1);
    let rho = state.rho_schedule.last().copied().unwrap_or(cfg.rho0) - sigma;
    let mut history = state.history.clone();
    history.push(record(&h, &es, sup, tail, nondeg, rho));
    let mut rho_schedule = state.rho_schedule.clone();
    rho_schedule.push(rho);
    Ok(KamState { h, lambda, residual_norm: sup, history, rho_schedule, ..state.clone() })
}

/// Newton iteration from `(h0, lambda0)` until the residual is below
/// `cfg.tol`, `cfg.max_steps` is spent, or the residual grows twice in a row.
pub fn kam_solve(
    f: &TrigSeries,
    alpha: f64,
    omega: &[f64],
    h0: &TrigSeries,
    lambda0: f64,
    cfg: &KamConfig,
) -> Result<KamState> {
    check(f, omega, h0)?;
    let n = cfg.grid_size();
    let h0 = h0.with_band(cfg.band).0;
    let lin = linearize(&h0, alpha, omega, n, cfg)?;
    let (es, tail, sup) = residual(f, &h0, lambda0, alpha, omega, cfg.band, n)?;
    let mut state = KamState {
        h: h0.clone(),
        lambda: lambda0,
        residual_norm: sup,
        history: vec![record(&h0, &es, sup, tail, lin.nondegeneracy, cfg.rho0)],
        rho_schedule: vec![cfg.rho0],
        converged: false,
        lambda_shift: 0.0,
        h_shift: 0.0,
        initial_residual: sup,
    };
    let mut increases = 0;
    while state.residual_norm > cfg.tol && state.steps() < cfg.max_steps {
        let prev = state.residual_norm;
        state = newton_step(&state, f, alpha, omega, cfg)?;
        if !state.residual_norm.is_finite() {
            return Err(Error::Diverged { steps: state.steps(), residual: state.residual_norm });
        }
        if state.residual_norm > prev {
            increases += 1;
            if increases >= 2 {
                return Err(Error::Diverged { steps: state.steps(), residual: state.residual_norm });
            }
        } else {
            increases = 0;
        }
        // Past the quadratic phase a step that does not halve the residual
        // has hit the truncation floor; more steps only repeat it.
        if state.residual_norm <= 1e-6 && state.residual_norm > 0.5 * prev {
            break;
        }
    }
    state.converged = state.residual_norm <= cfg.tol;
    state.lambda_shift = (state.lambda - lambda0).abs();
    state.h_shift = state.h.sub(&h0).grid_sup(n);
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationConjugacy {
    /// Rotation number along `Omega`: `F` is conjugate to `T_{rho Omega}`.
    pub rho: f64,
    pub state: KamState,
    /// Values of `rho` tried, with the counterterm found at each.
    pub trials: Vec<(f64, f64)>,
}

/// Conjugacy of `F` itself to a rotation: the target rotation `rho` is
/// adjusted by secant steps until the counterterm `lambda(rho)` vanishes.
pub fn conjugate_to_rotation(f: &TrigSeries, omega: &[f64], cfg: &KamConfig, max_outer: usize) -> Result<RotationConjugacy> {
    let d = omega.len();
    let mut h = TrigSeries::zeros(d, 1, cfg.band);
    let mut rho = f.mean()[0];
    let mut trials: Vec<(f64, f64)> = Vec::new();
    for _ in 0..max_outer.max(1) {
        let state = kam_solve(f, rho, omega, &h, 0.0, cfg)?;
        if !state.converged {
            return Err(Error::NotContracting { context: "KAM Newton", ratio: state.residual_norm });
        }
        let lambda = state.lambda;
        trials.push((rho, lambda));
        if lambda.abs() <= cfg.tol {
            return Ok(RotationConjugacy { rho, state, trials });
        }
        h = state.h;
        // lambda(rho) has slope close to -1.
        let next = match trials.len() {
            1 => rho + lambda,
            k => {
                let (r0, l0) = trials[k - 2];
                let slope = (lambda - l0) / (rho - r0);
                if slope.abs() > 1e-3 && slope.is_finite() { rho - lambda / slope } else { rho + lambda }
            }
        };
        rho = next;
    }
    let last = trials.last().map(|t| t.1).unwrap_or(f64::NAN);
    Err(Error::NotContracting { context: "rotation fixed point", ratio: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::golden;
    use num_complex::Complex64;

    fn omega2() -> Vec<f64> {
        vec![golden(), core::f64::consts::SQRT_2 - 1.0]
    }

    fn fixture(alpha: f64, s: f64) -> TrigSeries {
        let mut f = TrigSeries::constant(2, 1, &[alpha]);
        f.set_pair(&[1, 0], 0, Complex64::new(0.0, -s / 2.0));
        f.set_pair(&[0, 1], 0, Complex64::new(s / 2.0, 0.0));
        f
    }

    fn cfg() -> KamConfig {
        KamConfig { band: 24, ..Default::default() }
    }

    #[test]
    fn exact_rotation() {
        let om = omega2();
        let f = TrigSeries::constant(2, 1, &[0.7]);
        let h0 = TrigSeries::zeros(2, 1, 4);
        let (e, _, sup) = residual(&f, &h0, 0.7 - 0.2, 0.2, &om, 4, 16).unwrap();
        assert!(sup < 1e-15 && e.max_abs_coeff() < 1e-15);
        let st = kam_solve(&f, 0.2, &om, &h0, 0.0, &cfg()).unwrap();
        assert!(st.converged);
        assert!((st.lambda - 0.5).abs() < 1e-14);
        assert!(st.h.max_abs_coeff() < 1e-14);
    }

    #[test]
    fn residual_matches_pointwise_definition() {
        let om = omega2();
        let f = fixture(0.1, 0.05);
        let h0 = TrigSeries::zeros(2, 1, 4);
        let n = 16;
        let (_, _, sup) = residual(&f, &h0, 0.0, 0.3, &om, 4, n).unwrap();
        let worst = Grid::new(2, n).points().map(|x| (f.eval1(&x) - 0.3).abs()).fold(0.0, f64::max);
        assert!((sup - worst).abs() < 1e-15);
    }

    /// `f` with `(h_t, lambda_t)` as an exact solution.
    fn manufactured(ht: &TrigSeries, lt: f64, alpha: f64, om: &[f64], band: usize) -> TrigSeries {
        let shift: Vec<f64> = om.iter().map(|w| alpha * w).collect();
        let n = oversampled_grid(band);
        let mut x = vec![0.0; 2];
        TrigSeries::from_fn(2, 1, band, n, |y, out| {
            let mut t = ht.eval1(y);
            for _ in 0..80 {
                for i in 0..2 {
                    x[i] = y[i] - t * om[i];
                }
                t = ht.eval1(&x);
            }
            for i in 0..2 {
                x[i] = y[i] - t * om[i];
            }
            let xt: Vec<f64> = (0..2).map(|i| x[i] + shift[i]).collect();
            out[0] = ht.eval1(&xt) - t + alpha + lt;
        })
        .unwrap()
        .0
    }

    fn small_h() -> TrigSeries {
        let mut h = TrigSeries::zeros(2, 1, 2);
        h.set_pair(&[1, 0], 0, Complex64::new(0.01, 0.004));
        h.set_pair(&[1, -1], 0, Complex64::new(-0.003, 0.002));
        h
    }

    #[test]
    fn manufactured_solution() {
        let om = omega2();
        let (alpha, lt) = (1.0, 0.013);
        let ht = small_h();
        let c = cfg();
        let f = manufactured(&ht, lt, alpha, &om, c.band);
        let (_, _, sup) = residual(&f, &ht.with_band(c.band).0, lt, alpha, &om, c.band, c.grid_size()).unwrap();
        assert!(sup <= 1e-12, "{sup}");

        // A perturbed start is pulled back with quadratic gain.
        let mut pert = TrigSeries::zeros(2, 1, 2);
        pert.set_pair(&[0, 2], 0, Complex64::new(5e-5, 0.0));
        let h0 = ht.add(&pert.with_band(2).0);
        let st0 = kam_solve(&f, alpha, &om, &h0, lt, &KamConfig { max_steps: 0, ..c }).unwrap();
        let st1 = newton_step(&st0, &f, alpha, &om, &c).unwrap();
        assert!(st1.residual_norm * 50.0 <= st0.residual_norm, "{} -> {}", st0.residual_norm, st1.residual_norm);
    }

    #[test]
    fn zero_residual_is_a_fixed_point() {
        let om = omega2();
        let f = TrigSeries::constant(2, 1, &[0.4]);
        let h0 = TrigSeries::zeros(2, 1, 8);
        let st = kam_solve(&f, 0.4, &om, &h0, 0.0, &KamConfig { max_steps: 0, ..cfg() }).unwrap();
        let next = newton_step(&st, &f, 0.4, &om, &cfg()).unwrap();
        assert_eq!(next.lambda, 0.0);
        assert_eq!(next.h.max_abs_coeff(), 0.0);
    }

    #[test]
    fn diophantine_fixture_converges_quadratically() {
        let om = omega2();
        let f = fixture(1.0, 0.05);
        let h0 = TrigSeries::zeros(2, 1, 1);
        let c = cfg();
        let st = kam_solve(&f, 1.0, &om, &h0, 0.0, &c).unwrap();
        assert!(st.converged && st.steps() <= 6, "{:?}", st.history);
        let slope = st.convergence_slope().unwrap();
        assert!((slope - 2.0).abs() <= 0.2, "slope {slope}");
        // Exact-residual discipline.
        let (_, _, again) = residual(&f, &st.h, st.lambda, 1.0, &om, c.band, c.grid_size()).unwrap();
        assert!((again - st.residual_norm).abs() <= 1e-13);
        assert!(solution_defect(&f, &st.h, st.lambda, 1.0, &om, 2 * c.grid_size()) <= 1e-11);
        for w in st.rho_schedule.windows(2) {
            assert!(w[1] < w[0] && w[1] > c.rho0 / 2.0);
        }
    }

    #[test]
    fn single_mode_forcing() {
        let om = omega2();
        let mut f = TrigSeries::zeros(2, 1, 1);
        f.set_pair(&[1, 0], 0, Complex64::new(0.0, -0.05));
        let st = kam_solve(&f, 1.0, &om, &TrigSeries::zeros(2, 1, 1), 0.0, &cfg()).unwrap();
        let slope = st.convergence_slope().unwrap();
        assert!(st.converged && (slope - 2.0).abs() <= 0.2, "{slope} {:?}", st.history);
    }

    #[test]
    fn distance_is_linear_in_initial_residual() {
        let om = omega2();
        let h0 = TrigSeries::zeros(2, 1, 1);
        let ratios: Vec<f64> = [0.002, 0.02]
            .iter()
            .map(|&s| kam_solve(&fixture(1.0, s), 1.0, &om, &h0, 0.0, &cfg()).unwrap().bound_ratio())
            .collect();
        assert!(ratios[1] / ratios[0] > 0.5 && ratios[1] / ratios[0] < 1.5, "{ratios:?}");
    }

    #[test]
    fn circle_map_rotation() {
        // A circle diffeomorphism with a Diophantine rotation number.
        let mut f = TrigSeries::constant(1, 1, &[golden() - 1.0]);
        f.set_pair(&[1], 0, Complex64::new(0.0, -0.02));
        let rc = conjugate_to_rotation(&f, &[1.0], &KamConfig { band: 32, ..Default::default() }, 30).unwrap();
        assert!(rc.state.lambda.abs() <= 1e-11);
        assert!(solution_defect(&f, &rc.state.h, 0.0, rc.rho, &[1.0], 256) <= 1e-10);
        // Independent estimate by orbit averaging.
        let mut x = 0.1;
        let steps = 200_000;
        for _ in 0..steps {
            x += f.eval1(&[x]);
        }
        assert!(((x - 0.1) / steps as f64 - rc.rho).abs() < 1e-5);
    }

    #[test]
    fn locked_map_is_not_conjugate() {
        // x + 0.5 + 0.04 sin(2 pi x): rotation locked at 1/2.
        let mut f = TrigSeries::constant(1, 2, &[0.5]);
        f.set_pair(&[1], 0, Complex64::new(0.0, -0.02));
        f.set_pair(&[2], 0, Complex64::new(0.0, -0.01));
        let r = conjugate_to_rotation(&f, &[1.0], &KamConfig { band: 32, ..Default::default() }, 30);
        assert!(r.is_err(), "{:?}", r.map(|c| c.rho));
    }
}
