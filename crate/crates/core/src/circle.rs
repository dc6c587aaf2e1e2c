//! Invariant circles (and surfaces) created at a zero of the resonant
//! average `eta`, computed by a graph transform in normal-form coordinates.
//!
//! Coordinates are reduced, `z = (x, y)` with `x` in `T^r` and `y` in
//! `T^{d-r}`. The conjugated map is `z -> z + rot + P(z)`, and the
//! invariant set is the graph `y = y* + w(x)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dynamics::solve_dense;
use crate::error::{invalid, Error, Result};
use crate::fourier::{oversampled_grid, wrap, Grid, TrigSeries};
use crate::normalform::{ConjugatedMap, NormalForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    PositiveSlope,
    NegativeSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
    Saddle,
}

/// Root of a scalar `eta` on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaZero {
    pub y_star: f64,
    pub slope: f64,
}

const SLOPE_FLOOR: f64 = 1e-8;

/// Zero of a scalar `eta` on `T` on the requested branch.
///
/// When several roots share the branch, the one with the steepest slope
/// wins.
pub fn locate_eta_zero(eta: &TrigSeries, which: Branch) -> Result<EtaZero> {
    if eta.dim() != 1 || eta.value_dim() != 1 {
        return Err(invalid!("root selection by slope needs a scalar eta on T; use locate_eta_zero_from"));
    }
    let eta = eta.trimmed(1e-17);
    let deta = eta.derivative(0);
    let n = (64 * (eta.band() + 1)).max(256);
    let f = |y: f64| eta.eval1(&[y]);
    let vals: Vec<f64> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
    let mut best: Option<EtaZero> = None;
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        let y0 = i as f64 / n as f64;
        let y1 = (i + 1) as f64 / n as f64;
        let root = if a == 0.0 {
            y0
        } else if a * b < 0.0 {
            brent(&f, y0, y1, a, b)
        } else {
            continue;
        };
        let slope = deta.eval1(&[root]);
        let keep = match which {
            Branch::PositiveSlope => slope > 0.0,
            Branch::NegativeSlope => slope < 0.0,
        };
        if !keep {
            continue;
        }
        let y_star = root - root.floor();
        if best.map_or(true, |b| slope.abs() > b.slope.abs()) {
            best = Some(EtaZero { y_star, slope });
        }
    }
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    match best {
        None if lo > 0.0 || hi < 0.0 => Err(Error::NoZero { min: lo, max: hi }),
        None => Err(Error::DegenerateZero { y: f64::NAN, slope: 0.0 }),
        Some(z) if z.slope.abs() < SLOPE_FLOOR => Err(Error::DegenerateZero { y: z.y_star, slope: z.slope }),
        Some(z) => Ok(z),
    }
}

fn brent(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    // Bisection safeguarded secant (Illinois variant).
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < 1e-16 {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else if side == 1 {
            fa *= 0.5;
        } else {
            side = 1;
        }
        b = c;
        fb = fc;
        if fa.abs() < fb.abs() && (b - a).abs() < 1e-15 {
            return a;
        }
    }
    b
}

/// Newton refinement of a zero of a vector `eta` on `T^m` from a seed.
pub fn locate_eta_zero_from(eta: &TrigSeries, seed: &[f64]) -> Result<Vec<f64>> {
    let m = eta.dim();
    if eta.value_dim() != m || seed.len() != m {
        return Err(invalid!("eta must map T^{m} to R^{m} and the seed must have length {m}"));
    }
    let jac_series = derivative_matrix(eta);
    let mut y = seed.to_vec();
    let mut v = vec![0.0; m];
    let mut jac = vec![0.0; m * m];
    for _ in 0..60 {
        eta.eval_into(&y, &mut v);
        if v.iter().all(|x| x.abs() < 1e-14) {
            break;
        }
        jac_series.eval_into(&y, &mut jac);
        let step = solve_dense(&jac, &v, m).ok_or(Error::DegenerateZero { y: y[0], slope: 0.0 })?;
        for i in 0..m {
            y[i] -= step[i];
        }
    }
    eta.eval_into(&y, &mut v);
    if v.iter().any(|x| x.abs() > 1e-12) {
        return Err(Error::NoZero { min: v.iter().cloned().fold(f64::INFINITY, f64::min), max: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) });
    }
    jac_series.eval_into(&y, &mut jac);
    let det = DMatrix::from_row_slice(m, m, &jac).determinant();
    if det.abs() < SLOPE_FLOOR {
        return Err(Error::DegenerateZero { y: y[0], slope: det });
    }
    Ok(y.iter().map(|v| v - v.floor()).collect())
}

/// Row-major Jacobian of `eta` as a series with `m * m` components.
fn derivative_matrix(eta: &TrigSeries) -> TrigSeries {
    let m = eta.dim();
    let parts: Vec<TrigSeries> = (0..m).map(|j| eta.derivative(j)).collect();
    // stack gives [d_0 eta; d_1 eta; ...], i.e. entry (j, c) at j*m + c; transpose.
    let stacked = TrigSeries::stack(&parts).expect("same dimension");
    let perm: Vec<Vec<f64>> = (0..m * m)
        .map(|row| {
            let (c, j) = (row / m, row % m);
            (0..m * m).map(|col| (col == j * m + c) as u8 as f64).collect()
        })
        .collect();
    stacked.mix_components(&perm)
}

/// Eigen-data of `I + eps^n D eta(y*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    /// Row-major `D eta(y*)`.
    pub derivative: Vec<f64>,
    /// Eigenvalues of `D eta(y*)`.
    pub slopes: Vec<f64>,
    /// `1 + eps^n slope`.
    pub multipliers: Vec<f64>,
    /// Row-major eigenvector matrix (columns are eigenvectors).
    pub vectors: Vec<f64>,
}

impl Splitting {
    pub fn dim(&self) -> usize {
        self.slopes.len()
    }

    pub fn stable(&self) -> Vec<bool> {
        self.slopes.iter().map(|&s| s < 0.0).collect()
    }
}

/// Classify the normal dynamics near the zero `y*` of `eta`.
pub fn classify_stability(nf: &NormalForm, eps: f64, y_star: &[f64]) -> Result<(Stability, Splitting)> {
    let eta = nf.eta_at(eps);
    let gain = eps.powi(nf.n as i32);
    classify_eta(&eta, gain, y_star, eps != 0.0)
}

/// Same as [`classify_stability`] for an explicit `eta` and gain `eps^n`.
pub fn classify_eta(eta: &TrigSeries, gain: f64, y_star: &[f64], check_gap: bool) -> Result<(Stability, Splitting)> {
    let m = eta.dim();
    if y_star.len() != m || eta.value_dim() != m {
        return Err(invalid!("eta must map T^{m} to R^{m}"));
    }
    let mut d = vec![0.0; m * m];
    derivative_matrix(eta).eval_into(y_star, &mut d);
    let (slopes, vectors) = real_eigen(&d, m).ok_or(Error::HyperbolicityFail { multiplier: f64::NAN, gap: 0.0 })?;
    let multipliers: Vec<f64> = slopes.iter().map(|s| 1.0 + gain * s).collect();
    for (&s, &mu) in slopes.iter().zip(&multipliers) {
        let gap = (mu.abs() - 1.0).abs();
        if s.abs() < SLOPE_FLOOR || (check_gap && gap < 1e-6) {
            return Err(Error::HyperbolicityFail { multiplier: mu, gap });
        }
        if mu <= 0.0 {
            // Orientation flip: the perturbative regime has left.
            return Err(Error::HyperbolicityFail { multiplier: mu, gap });
        }
    }
    let n_stable = slopes.iter().filter(|&&s| s < 0.0).count();
    let stability = match n_stable {
        0 => Stability::Repelling,
        k if k == m => Stability::Attracting,
        _ => Stability::Saddle,
    };
    Ok((stability, Splitting { derivative: d, slopes, multipliers, vectors }))
}

/// Real eigenvalues and eigenvectors (columns, row-major) of a small matrix.
fn real_eigen(a: &[f64], m: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if m == 1 {
        return Some((vec![a[0]], vec![1.0]));
    }
    let mat = DMatrix::from_row_slice(m, m, a);
    let vals = mat.clone().eigenvalues()?;
    let mut vecs = vec![0.0; m * m];
    for (j, &lam) in vals.iter().enumerate() {
        let shifted = &mat - DMatrix::identity(m, m) * lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t?;
        let (imin, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &s)| if s < b.1 { (i, s) } else { b });
        for i in 0..m {
            vecs[i * m + j] = vt[(imin, i)];
        }
    }
    let det = DMatrix::from_row_slice(m, m, &vecs).determinant();
    if det.abs() < 1e-10 {
        return None;
    }
    Some((vals.iter().cloned().collect(), vecs))
}

/// The conjugated map restricted to what the graph transform needs.
#[derive(Debug, Clone)]
pub struct ReducedDynamics {
    r: usize,
    rot: Vec<f64>,
    p: TrigSeries,
}

impl ReducedDynamics {
    /// `rot` is the rotation of the reduced map, `p` its displacement.
    pub fn new(r: usize, rot: Vec<f64>, p: &TrigSeries) -> Self {
        ReducedDynamics { r, rot, p: p.trimmed(1e-16) }
    }

    pub fn from_conjugated(nf: &NormalForm, cm: &ConjugatedMap) -> Self {
        Self::new(nf.r(), nf.resonance.reduced_rotation(), &cm.displacement)
    }

    pub fn dim(&self) -> usize {
        self.rot.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rot
    }

    /// Displacement at `(x, y* + w(x))`.
    fn disp_on_graph(&self, x: &[f64], y_star: &[f64], w: &TrigSeries, buf: &mut [f64], out: &mut [f64]) {
        let r = self.r;
        let m = self.dim() - r;
        buf[..r].copy_from_slice(x);
        let mut wv = vec![0.0; m];
        w.eval_into(x, &mut wv);
        for i in 0..m {
            buf[r + i] = y_star[i] + wv[i];
        }
        self.p.eval_into(buf, out);
    }

    /// Base map `x -> x + rot_1 + P_1(x, y* + w(x))`.
    pub fn base_map(&self, x: &[f64], y_star: &[f64], w: &TrigSeries) -> Vec<f64> {
        let d = self.dim();
        let mut buf = vec![0.0; d];
        let mut p = vec![0.0; d];
        self.disp_on_graph(x, y_star, w, &mut buf, &mut p);
        (0..self.r).map(|i| x[i] + self.rot[i] + p[i]).collect()
    }

    /// Solve `base_map(x) = y1` by fixed-point iteration from `guess`.
    pub fn base_preimage(&self, y1: &[f64], y_star: &[f64], w: &TrigSeries, guess: &[f64], tol: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        let r = self.r;
        let mut buf = vec![0.0; d];
        let mut p = vec![0.0; d];
        let mut x = guess.to_vec();
        let mut last = f64::INFINITY;
        let mut bad = 0;
        for _ in 0..200 {
            self.disp_on_graph(&x, y_star, w, &mut buf, &mut p);
            let mut step = 0.0f64;
            for i in 0..r {
                let nx = y1[i] - self.rot[i] - p[i];
                step = step.max((nx - x[i]).abs());
                x[i] = nx;
            }
            if step <= tol {
                return Ok(x);
            }
            if step >= last {
                bad += 1;
                if bad >= 5 {
                    return Err(Error::NotContracting { context: "base preimage", ratio: step / last });
                }
            } else {
                bad = 0;
            }
            last = step;
        }
        Err(Error::NotContracting { context: "base preimage", ratio: 1.0 })
    }

    /// Grid sup of `w(x) + P_2(x, y* + w(x)) - w(base_map(x))`.
    pub fn invariance_defect(&self, y_star: &[f64], w: &TrigSeries, n: usize) -> f64 {
        let r = self.r;
        let d = self.dim();
        let m = d - r;
        let grid = Grid::new(r, n);
        let mut buf = vec![0.0; d];
        let mut p = vec![0.0; d];
        let mut wx = vec![0.0; m];
        let mut wy = vec![0.0; m];
        let mut worst = 0.0f64;
        for x in grid.points() {
            self.disp_on_graph(&x, y_star, w, &mut buf, &mut p);
            let xn: Vec<f64> = (0..r).map(|i| x[i] + self.rot[i] + p[i]).collect();
            w.eval_into(&x, &mut wx);
            w.eval_into(&xn, &mut wy);
            for i in 0..m {
                worst = worst.max(wrap(wx[i] + p[r + i] - wy[i]).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Band of `w`; `None` means 16.
    pub band: Option<usize>,
    pub grid: Option<usize>,
    pub tol: f64,
    pub max_iterations: usize,
    /// Consecutive non-decreasing updates tolerated.
    pub stall_limit: usize,
    pub preimage_tol: f64,
    /// `|w| <= eps^delta0_exp`.
    pub delta0_exp: f64,
    /// `|Dw| <= eps^delta1_exp`.
    pub delta1_exp: f64,
    pub enforce_bounds: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            band: None,
            grid: None,
            tol: 1e-11,
            max_iterations: 2000,
            stall_limit: 5,
            preimage_tol: 1e-13,
            delta0_exp: 0.5,
            delta1_exp: 0.9,
            enforce_bounds: true,
        }
    }
}

impl GraphConfig {
    pub fn band(&self) -> usize {
        self.band.unwrap_or(16)
    }

    pub fn grid_size(&self) -> usize {
        self.grid.unwrap_or_else(|| oversampled_grid(self.band()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSolution {
    pub alpha: f64,
    pub eps: f64,
    pub y_star: Vec<f64>,
    /// `T^r -> R^{d-r}`.
    pub w: TrigSeries,
    pub defect: f64,
    pub contraction_factor: f64,
    pub iterations: usize,
    pub stability: Stability,
    pub splitting: Splitting,
    pub w_sup: f64,
    pub dw_sup: f64,
}

/// Graph transform for the invariant surface near `y*` of the map at
/// `alpha0 + alpha_offset`.
pub fn graph_transform(nf: &NormalForm, eps: f64, alpha_offset: f64, y_star: &[f64], cfg: &GraphConfig) -> Result<GraphSolution> {
    let (stability, splitting) = classify_stability(nf, eps, y_star)?;
    let alpha = nf.alpha0 + alpha_offset;
    let cm = nf.conjugated_map(alpha, eps)?;
    let dynamics = ReducedDynamics::from_conjugated(nf, &cm);
    let mut sol = graph_transform_with(&dynamics, &splitting, eps, y_star, cfg)?;
    sol.alpha = alpha;
    sol.stability = stability;
    Ok(sol)
}

/// Graph transform on explicit reduced dynamics.
pub fn graph_transform_with(
    dynamics: &ReducedDynamics,
    splitting: &Splitting,
    eps: f64,
    y_star: &[f64],
    cfg: &GraphConfig,
) -> Result<GraphSolution> {
    let r = dynamics.r();
    let d = dynamics.dim();
    let m = d - r;
    if splitting.dim() != m || y_star.len() != m {
        return Err(invalid!("splitting and y* must have dimension {m}"));
    }
    let band = cfg.band();
    let n = cfg.grid_size();
    let grid = Grid::new(r, n);
    let pts: Vec<Vec<f64>> = grid.points().collect();
    let v = &splitting.vectors;
    let v_inv = DMatrix::from_row_slice(m, m, v).try_inverse().ok_or(Error::HyperbolicityFail { multiplier: f64::NAN, gap: 0.0 })?;
    let v_inv: Vec<f64> = (0..m * m).map(|i| v_inv[(i / m, i % m)]).collect();
    let stable = splitting.stable();
    let any_stable = stable.iter().any(|&s| s);
    let any_unstable = stable.iter().any(|&s| !s);
    // (M - I) w for the unstable correction.
    let gain_d: Vec<f64> = {
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for k in 0..m {
                    acc += v[i * m + k] * (splitting.multipliers[k] - 1.0) * v_inv[k * m + j];
                }
                g[i * m + j] = acc;
            }
        }
        g
    };
    let mat_vec = |a: &[f64], x: &[f64]| -> Vec<f64> { (0..m).map(|i| (0..m).map(|j| a[i * m + j] * x[j]).sum()).collect() };

    let bound0 = eps.powf(cfg.delta0_exp) + 1e-14;
    let bound1 = eps.powf(cfg.delta1_exp) + 1e-14;
    let mut w = TrigSeries::zeros(r, m, band);
    let mut warm: Vec<Vec<f64>> = pts.iter().map(|y| (0..r).map(|i| y[i] - dynamics.rot[i]).collect()).collect();
    let mut buf = vec![0.0; d];
    let mut p = vec![0.0; d];
    let mut wv = vec![0.0; m];
    let mut last_update = f64::INFINITY;
    let mut ratios: Vec<f64> = Vec::new();
    let mut stalled = 0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut samples = vec![vec![0.0; pts.len()]; m];
        let mut u_new = vec![vec![0.0; m]; pts.len()];
        if any_stable {
            for (idx, y1) in pts.iter().enumerate() {
                let x = dynamics.base_preimage(y1, y_star, &w, &warm[idx], cfg.preimage_tol)?;
                dynamics.disp_on_graph(&x, y_star, &w, &mut buf, &mut p);
                w.eval_into(&x, &mut wv);
                let img: Vec<f64> = (0..m).map(|i| wv[i] + p[r + i]).collect();
                let u = mat_vec(&v_inv, &img);
                for k in 0..m {
                    if stable[k] {
                        u_new[idx][k] = u[k];
                    }
                }
                warm[idx] = x;
            }
        }
        if any_unstable {
            let mut wn = vec![0.0; m];
            for (idx, x) in pts.iter().enumerate() {
                dynamics.disp_on_graph(x, y_star, &w, &mut buf, &mut p);
                let xn: Vec<f64> = (0..r).map(|i| x[i] + dynamics.rot[i] + p[i]).collect();
                w.eval_into(x, &mut wv);
                w.eval_into(&xn, &mut wn);
                let lin = mat_vec(&gain_d, &wv);
                let b: Vec<f64> = (0..m).map(|i| p[r + i] - lin[i]).collect();
                let ub = mat_vec(&v_inv, &b);
                let un = mat_vec(&v_inv, &wn);
                for k in 0..m {
                    if !stable[k] {
                        u_new[idx][k] = (un[k] - ub[k]) / splitting.multipliers[k];
                    }
                }
            }
        }
        for (idx, u) in u_new.iter().enumerate() {
            let wv = mat_vec(v, u);
            for i in 0..m {
                samples[i][idx] = wv[i];
            }
        }
        let (next, _) = TrigSeries::from_samples(r, n, band, &samples)?;
        let update = next.sub(&w).l1_norm();
        w = next;
        if cfg.enforce_bounds {
            let (w0, w1) = c1_sups(&w, n);
            if w0 > bound0 || w1 > bound1 {
                return Err(Error::NotContracting { context: "graph left the admissible set", ratio: (w0 / bound0).max(w1 / bound1) });
            }
        }
        if update <= cfg.tol {
            break;
        }
        if last_update.is_finite() && last_update > 0.0 {
            let ratio = update / last_update;
            ratios.push(ratio);
            if ratio >= 1.0 {
                stalled += 1;
                if stalled >= cfg.stall_limit {
                    return Err(Error::NotContracting { context: "graph transform", ratio });
                }
            } else {
                stalled = 0;
            }
        }
        last_update = update;
        if iterations >= cfg.max_iterations {
            return Err(Error::NotContracting { context: "graph transform iteration budget", ratio: ratios.last().copied().unwrap_or(1.0) });
        }
    }
    let contraction_factor = tail_ratio(&ratios);
    let defect = dynamics.invariance_defect(y_star, &w, 2 * n);
    let (w_sup, dw_sup) = c1_sups(&w, n);
    let stability = if !any_stable {
        Stability::Repelling
    } else if !any_unstable {
        Stability::Attracting
    } else {
        Stability::Saddle
    };
    Ok(GraphSolution {
        alpha: f64::NAN,
        eps,
        y_star: y_star.to_vec(),
        w,
        defect,
        contraction_factor,
        iterations,
        stability,
        splitting: splitting.clone(),
        w_sup,
        dw_sup,
    })
}

/// Geometric mean of the trailing update ratios, ignoring the noisy
/// final steps near round-off.
fn tail_ratio(ratios: &[f64]) -> f64 {
    if ratios.is_empty() {
        return 0.0;
    }
    let keep = &ratios[..ratios.len().saturating_sub(3).max(1)];
    let tail = &keep[keep.len().saturating_sub(20)..];
    let s: f64 = tail.iter().map(|r| r.max(1e-300).ln()).sum();
    (s / tail.len() as f64).exp()
}

fn c1_sups(w: &TrigSeries, n: usize) -> (f64, f64) {
    let w0 = w.grid_sup(n);
    let w1 = (0..w.dim()).map(|j| w.derivative(j).grid_sup(n)).fold(0.0, f64::max);
    (w0, w1)
}

impl GraphSolution {
    /// Point `(x, y* + w(x))` in reduced normal-form coordinates.
    pub fn point(&self, x: &[f64]) -> Vec<f64> {
        let m = self.y_star.len();
        let mut wv = vec![0.0; m];
        self.w.eval_into(x, &mut wv);
        let mut z = x.to_vec();
        z.extend((0..m).map(|i| self.y_star[i] + wv[i]));
        z
    }

    /// Invariance residual of the graph under the original map, measured
    /// in reduced coordinates after undoing the conjugacy.
    pub fn original_defect(&self, nf: &NormalForm, n: usize) -> Result<f64> {
        let r = self.w.dim();
        let d = nf.dim();
        let conj = nf.conjugacy(self.eps);
        let f = nf.reduced.with_params(self.alpha, self.eps).evaluator();
        let grid = Grid::new(r, n);
        let mut hz = vec![0.0; d];
        let mut fz = vec![0.0; d];
        let mut back = vec![0.0; d];
        let mut wv = vec![0.0; d - r];
        let mut worst = 0.0f64;
        for x in grid.points() {
            conj.apply(&self.point(&x), &mut hz);
            f.apply(&hz, &mut fz);
            conj.inverse(&fz, &mut back)?;
            self.w.eval_into(&back[..r], &mut wv);
            for i in 0..d - r {
                let gap = wrap(back[r + i] - self.y_star[i] - wv[i]).abs();
                if !gap.is_finite() {
                    return Err(invalid!("invariance defect is not finite (alpha = {})", self.alpha));
                }
                worst = worst.max(gap);
            }
        }
        Ok(worst)
    }

    /// Samples of the invariant set in original torus coordinates, in
    /// `[0, 1)^d`.
    pub fn polyline(&self, nf: &NormalForm, samples: usize) -> Vec<Vec<f64>> {
        let r = self.w.dim();
        let conj = nf.conjugacy(self.eps);
        let a_inv = nf.resonance.a_inverse();
        let a_inv: Vec<Vec<f64>> = a_inv.iter().map(|row| row.iter().map(|&v| v as f64).collect()).collect();
        let d = nf.dim();
        let mut hz = vec![0.0; d];
        let grid = Grid::new(r, samples);
        grid.points()
            .map(|x| {
                conj.apply(&self.point(&x), &mut hz);
                a_inv.iter().map(|row| {
                    let v: f64 = row.iter().zip(&hz).map(|(a, b)| a * b).sum();
                    v - v.floor()
                }).collect()
            })
            .collect()
    }
}
