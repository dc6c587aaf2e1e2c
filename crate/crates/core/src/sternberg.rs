//! Fiberwise linearization of a skew product `(sigma, rho) -> (u(sigma),
//! Gamma_sigma(rho))` around an invariant circle, and reduction of the
//! linear cocycle to a constant multiplier.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::circle::GraphSolution;
use crate::dynamics::MapKind;
use crate::error::{invalid, Error, Result};
use crate::fourier::{cohomology_solve, oversampled_grid, Grid, Resonant, TrigSeries};
use crate::frequency::diophantine_estimate;
use crate::normalform::NormalForm;

/// Skew product with analytic fibers, carried as Taylor polynomials in `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewProduct {
    /// `u(sigma) = sigma + base_shift + base_disp(sigma)`.
    pub base_shift: Vec<f64>,
    pub base_disp: TrigSeries,
    /// Component `k - 1` is the coefficient of `rho^k`, `k = 1..=D`.
    pub fiber: TrigSeries,
}

impl SkewProduct {
    pub fn new(base_shift: Vec<f64>, base_disp: TrigSeries, fiber: TrigSeries) -> Result<Self> {
        let r = base_shift.len();
        if base_disp.dim() != r || base_disp.value_dim() != r || fiber.dim() != r {
            return Err(invalid!("base and fiber data must live on T^{r}"));
        }
        Ok(SkewProduct { base_shift, base_disp, fiber })
    }

    pub fn degree(&self) -> usize {
        self.fiber.value_dim()
    }

    pub fn base_dim(&self) -> usize {
        self.base_shift.len()
    }

    /// `A_sigma = Gamma'_sigma(0)`.
    pub fn a_sigma(&self) -> TrigSeries {
        self.fiber.component(0)
    }

    pub fn base_map(&self, s: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; s.len()];
        self.base_disp.eval_into(s, &mut d);
        (0..s.len()).map(|i| s[i] + self.base_shift[i] + d[i]).collect()
    }

    /// `w = u^{-1}` by fixed-point iteration.
    pub fn base_inverse(&self, t: &[f64]) -> Result<Vec<f64>> {
        let r = t.len();
        let mut s: Vec<f64> = (0..r).map(|i| t[i] - self.base_shift[i]).collect();
        let mut d = vec![0.0; r];
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            self.base_disp.eval_into(&s, &mut d);
            let mut step = 0.0f64;
            for i in 0..r {
                let ns = t[i] - self.base_shift[i] - d[i];
                step = step.max((ns - s[i]).abs());
                s[i] = ns;
            }
            if step < 1e-15 {
                return Ok(s);
            }
            if step >= last && step > 1e-13 {
                return Err(Error::NotContracting { context: "base inverse", ratio: step / last });
            }
            last = step;
        }
        Ok(s)
    }

    /// Taylor coefficients `[0, c_1, .., c_D]` at `sigma`.
    pub fn fiber_poly(&self, s: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.degree() + 1];
        self.fiber.eval_into(s, &mut c[1..]);
        c
    }

    /// The skew product around an invariant circle of a foliation-kind
    /// map in the plane. Fibers are the segments along `A Omega` through
    /// the circle, which the map sends into each other.
    pub fn from_circle(nf: &NormalForm, sol: &GraphSolution, degree: usize, band: usize) -> Result<Self> {
        if nf.kind != MapKind::Foliation || nf.dim() != 2 || nf.r() != 1 {
            return Err(invalid!("skew products are built for planar foliation-kind maps"));
        }
        if degree == 0 {
            return Err(invalid!("fiber degree must be positive"));
        }
        let eps = sol.eps;
        let conj = nf.conjugacy(eps);
        let red = nf.reduced.with_params(sol.alpha, eps);
        let f = red.evaluator();
        let field = red.field();
        let omega = red.omega.clone();
        let rot = nf.resonance.reduced_rotation();
        let n = oversampled_grid(band);
        let mut c = vec![0.0; 2];
        let mut fc = vec![0.0; 2];
        let mut back = vec![0.0; 2];
        let mut failure = None;
        let (base_disp, _) = TrigSeries::from_fn(1, 1, band, n, |s, out| {
            conj.apply(&sol.point(s), &mut c);
            f.apply(&c, &mut fc);
            if let Err(e) = conj.inverse(&fc, &mut back) {
                failure = Some(e);
            }
            out[0] = back[0] - s[0] - rot[0];
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        let mut derivs = Vec::with_capacity(degree);
        let mut dk = field.clone();
        for _ in 0..degree {
            dk = dk.directional(&omega);
            derivs.push(dk.trimmed(1e-17));
        }
        let (fiber, _) = TrigSeries::from_fn(1, degree, band, n, |s, out| {
            conj.apply(&sol.point(s), &mut c);
            let mut fact = 1.0;
            for (k, d) in derivs.iter().enumerate() {
                fact *= (k + 1) as f64;
                out[k] = eps * d.eval1(&c) / fact;
            }
            out[0] += 1.0;
        })?;
        SkewProduct::new(vec![rot[0]], base_disp, fiber)
    }
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Truncated `p o q` with `q(0) = 0`.
pub fn poly_compose(p: &[f64], q: &[f64]) -> Vec<f64> {
    let d = p.len().max(q.len()) - 1;
    let mut out = vec![0.0; d + 1];
    out[0] = p[0];
    let mut pow = vec![0.0; d + 1];
    pow[0] = 1.0;
    for k in 1..p.len() {
        let mut next = vec![0.0; d + 1];
        for (i, &a) in pow.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in q.iter().enumerate().skip(1) {
                if i + j > d {
                    break;
                }
                next[i + j] += a * b;
            }
        }
        pow = next;
        for i in 0..=d {
            out[i] += p[k] * pow[i];
        }
    }
    out
}

/// Truncated compositional inverse of `p` with `p(0) = 0`, `p'(0) != 0`.
pub fn poly_revert(p: &[f64]) -> Vec<f64> {
    let d = p.len() - 1;
    let mut q = vec![0.0; d + 1];
    if d == 0 {
        return q;
    }
    q[1] = 1.0 / p[1];
    for k in 2..=d {
        let c = poly_compose(p, &q);
        q[k] -= c[k] / p[1];
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SternbergConfig {
    pub tol: f64,
    pub max_iterations: usize,
    /// Points on the circle `|rho| = gamma` used to recover Taylor data.
    pub circle_samples: usize,
    /// Bound on `|c_D| gamma^D`.
    pub tail_tol: f64,
    pub gamma_max: f64,
    /// Base grid; `None` means `4K` for the band of the fiber data.
    pub grid: Option<usize>,
}

impl Default for SternbergConfig {
    fn default() -> Self {
        SternbergConfig { tol: 1e-11, max_iterations: 20000, circle_samples: 64, tail_tol: 1e-12, gamma_max: 0.5, grid: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pinching {
    pub lambda: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl Pinching {
    /// Contraction rate of the proof, `(lambda + delta) / (lambda - delta)^2`.
    pub fn predicted_rate(&self) -> f64 {
        (self.lambda + self.delta) / (self.lambda - self.delta).powi(2)
    }

    pub fn holds(&self) -> bool {
        self.lambda - self.delta > 0.0 && self.predicted_rate() < 1.0
    }
}

/// `sup |Gamma'_sigma(rho) - lambda|` over grid `sigma` and `|rho| <= gamma`,
/// with `lambda` centered on the range of `A_sigma`.
pub fn measure_pinching(sp: &SkewProduct, gamma: f64, n: usize) -> Pinching {
    let grid = Grid::new(sp.base_dim(), n);
    let polys: Vec<Vec<f64>> = grid.points().map(|s| sp.fiber_poly(&s)).collect();
    let (lo, hi) = polys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[1]), h.max(p[1])));
    let lambda = 0.5 * (lo + hi);
    let mut delta = 0.0f64;
    let m = 32;
    for p in &polys {
        let dp: Vec<f64> = (1..p.len()).map(|k| k as f64 * p[k]).collect();
        delta = delta.max((dp[0] - lambda).abs());
        for j in 0..m {
            let z = Complex64::from_polar(gamma, 2.0 * core::f64::consts::PI * j as f64 / m as f64);
            let (v, _) = horner(&dp, z);
            delta = delta.max((v - lambda).norm());
        }
    }
    Pinching { lambda, delta, gamma }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SternbergConjugacy {
    /// Component `k - 1` is the coefficient of `rho^k` in `h_sigma`.
    pub h_fiber: TrigSeries,
    pub a_sigma: TrigSeries,
    pub pinching: Pinching,
    pub iterations_used: usize,
    /// Geometric decay of `|h^{N+1} - h^N|` fitted over the run.
    pub measured_rate: f64,
    /// `h_sigma o Gamma_sigma - A_sigma h_{w(sigma)}` on test points.
    pub residual: f64,
    /// Largest `rho^2` coefficient of the conjugated fiber map.
    pub quadratic_residual: f64,
    /// Largest `|h_sigma(0)|` and `|h'_sigma(0) - 1|`.
    pub tangency: f64,
    pub b: Option<TrigSeries>,
    pub kappa: Option<f64>,
}

/// Fiber linearization `h_sigma = lim A_sigma .. A_{w^N sigma} Gamma^{-1}_{w^N sigma} o .. o Gamma^{-1}_sigma`.
pub fn fiber_linearize(sp: &SkewProduct, cfg: &SternbergConfig) -> Result<SternbergConjugacy> {
    let r = sp.base_dim();
    let deg = sp.degree();
    let band = sp.fiber.band().max(sp.base_disp.band());
    let n = cfg.grid.unwrap_or_else(|| oversampled_grid(band.max(1)));
    let grid = Grid::new(r, n);
    let sigmas: Vec<Vec<f64>> = grid.points().collect();

    // Radius: small tail, then shrink until pinching holds.
    let top = sp.fiber.component(deg - 1).grid_sup(n);
    let mut gamma = if top > 0.0 { (cfg.tail_tol / top).powf(1.0 / deg as f64) } else { f64::INFINITY };
    gamma = gamma.min(cfg.gamma_max);
    let mut pin = measure_pinching(sp, gamma, n);
    while !pin.holds() && gamma > 1e-8 {
        gamma *= 0.5;
        pin = measure_pinching(sp, gamma, n);
    }
    if !pin.holds() {
        return Err(Error::PinchingFail { lambda: pin.lambda, delta: pin.delta });
    }

    let m = cfg.circle_samples.max(2 * deg + 2);
    let zetas: Vec<Complex64> = (0..m).map(|j| Complex64::from_polar(gamma, 2.0 * core::f64::consts::PI * j as f64 / m as f64)).collect();
    let np = sigmas.len();
    let mut orbit: Vec<Vec<f64>> = sigmas.clone();
    let mut z: Vec<Vec<Complex64>> = vec![zetas.clone(); np];
    let mut scale = vec![1.0f64; np];
    let mut h: Vec<Vec<Complex64>> = vec![zetas.clone(); np];
    let mut diffs: Vec<f64> = Vec::new();
    let mut iterations = 0;
    loop {
        let mut worst = 0.0f64;
        for p in 0..np {
            let poly = sp.fiber_poly(&orbit[p]);
            let a = poly[1];
            for j in 0..m {
                let target = z[p][j];
                let mut x = target / a;
                let mut ok = false;
                for _ in 0..60 {
                    let (v, dv) = horner(&poly, x);
                    let step = (v - target) / dv;
                    x -= step;
                    if step.norm() <= 1e-16 * (1.0 + x.norm()) {
                        ok = true;
                        break;
                    }
                }
                if !ok || !x.is_finite() {
                    return Err(Error::FiberInversionFail { sigma: orbit[p][0] });
                }
                z[p][j] = x;
            }
            scale[p] *= a;
            for j in 0..m {
                let next = z[p][j] * scale[p];
                worst = worst.max((next - h[p][j]).norm());
                h[p][j] = next;
            }
            orbit[p] = sp.base_inverse(&orbit[p])?;
        }
        iterations += 1;
        diffs.push(worst);
        // Remaining error is a geometric tail, and the Cauchy formula
        // divides it by gamma^k; aim the quadratic coefficient at tol.
        let q = pin.predicted_rate().min(0.999);
        if worst <= cfg.tol && worst * q / (1.0 - q) <= cfg.tol * gamma.min(1.0).powi(2) {
            break;
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::NotContracting { context: "fiber linearization", ratio: fitted_rate(&diffs) });
        }
    }

    // Taylor coefficients by the discrete Cauchy formula.
    let mut samples = vec![vec![0.0; np]; deg];
    let mut tangency = 0.0f64;
    for p in 0..np {
        for k in 0..=deg {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                acc += h[p][j] * Complex64::from_polar(1.0, -2.0 * core::f64::consts::PI * (j * k) as f64 / m as f64);
            }
            let coef = acc.re / m as f64 / gamma.powi(k as i32);
            match k {
                0 => tangency = tangency.max(coef.abs()),
                _ => {
                    if k == 1 {
                        tangency = tangency.max((coef - 1.0).abs());
                    }
                    samples[k - 1][p] = coef;
                }
            }
        }
    }
    let (h_fiber, _) = TrigSeries::from_samples(r, n, band, &samples)?;

    // Conjugacy residual on interior test points, and the quadratic term.
    let mut residual = 0.0f64;
    let mut quadratic = 0.0f64;
    let tests = [gamma / 4.0, -gamma / 4.0, gamma / 8.0, -gamma / 8.0];
    let mut hw = vec![0.0; deg];
    for (p, s) in sigmas.iter().enumerate() {
        let gpoly = sp.fiber_poly(s);
        let mut hs = vec![0.0; deg + 1];
        for k in 1..=deg {
            hs[k] = samples[k - 1][p];
        }
        let w = sp.base_inverse(s)?;
        h_fiber.eval_into(&w, &mut hw);
        let mut hwp = vec![0.0; deg + 1];
        hwp[1..].copy_from_slice(&hw);
        let a = gpoly[1];
        for &rho in &tests {
            let (g, _) = horner(&gpoly, Complex64::new(rho, 0.0));
            let (lhs, _) = horner(&hs, g);
            let (rhs, _) = horner(&hwp, Complex64::new(rho, 0.0));
            residual = residual.max((lhs - rhs * a).norm());
        }
        let conj = poly_compose(&poly_compose(&hs, &gpoly), &poly_revert(&hwp));
        if deg >= 2 {
            quadratic = quadratic.max(conj[2].abs());
        }
    }
    Ok(SternbergConjugacy {
        h_fiber,
        a_sigma: sp.a_sigma(),
        pinching: pin,
        iterations_used: iterations,
        measured_rate: fitted_rate(&diffs),
        residual,
        quadratic_residual: quadratic,
        tangency,
        b: None,
        kappa: None,
    })
}

/// Least-squares slope of `log diff` over the run, as a rate.
fn fitted_rate(diffs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = diffs.iter().enumerate().filter(|(_, &d)| d > 0.0).map(|(i, &d)| (i as f64, d.ln())).collect();
    // Skip the transient first third.
    let pts = &pts[pts.len() / 3..];
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxy / sxx).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReduction {
    pub b: TrigSeries,
    pub kappa: f64,
    /// Grid sup of `(a o h) b - kappa b o T_Omega`.
    pub residual: f64,
}

/// Solve `(a o h)(sigma) b(sigma) = kappa b(sigma + Omega)` with constant `kappa`.
///
/// `h_base(sigma) = sigma + h_disp(sigma)` conjugates the base map to the
/// rotation by `omega`.
pub fn constant_reduction(a: &TrigSeries, h_disp: &TrigSeries, omega: &[f64], band: usize, divisor_floor: f64) -> Result<ConstantReduction> {
    let r = omega.len();
    if a.dim() != r || a.value_dim() != 1 || h_disp.dim() != r || h_disp.value_dim() != r {
        return Err(invalid!("a and h must live on T^{r}"));
    }
    diophantine_estimate(omega, r as f64 + 1.0, 32)?;
    let n = oversampled_grid(band);
    let grid = Grid::new(r, n);
    let mut hv = vec![0.0; r];
    let mut comp = Vec::with_capacity(grid.len());
    for s in grid.points() {
        h_disp.eval_into(&s, &mut hv);
        let x: Vec<f64> = (0..r).map(|i| s[i] + hv[i]).collect();
        comp.push(a.eval1(&x));
    }
    let min_abs = comp.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let positive = comp[0] > 0.0;
    if min_abs == 0.0 || comp.iter().any(|&v| (v > 0.0) != positive) {
        return Err(Error::SignChange { min_abs });
    }
    let logs: Vec<f64> = comp.iter().map(|v| v.abs().ln()).collect();
    let (log_a, _) = TrigSeries::from_samples(r, n, band, &[logs])?;
    let mean = log_a.mean()[0];
    let sign = if positive { 1.0 } else { -1.0 };
    let kappa = sign * mean.exp();
    // (log b) o T - log b = log|a o h| - log|kappa|, i.e. W - W o T = -(centered log).
    let centered = log_a.add_constant(&[-mean]);
    let sol = cohomology_solve(&centered.scale(-1.0), omega, Resonant::OnlyMean, divisor_floor)?;
    let w = sol.w;
    let (b, _) = TrigSeries::from_fn(r, 1, band, n, |s, out| out[0] = w.eval1(s).exp())?;
    let bt = b.shift(omega);
    let mut residual = 0.0f64;
    for (i, s) in grid.points().enumerate() {
        residual = residual.max((comp[i] * b.eval1(&s) - kappa * bt.eval1(&s)).abs());
    }
    Ok(ConstantReduction { b, kappa, residual })
}
