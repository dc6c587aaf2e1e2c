//! Torus map families, the foliation-preserving group law, and orbit
//! diagnostics.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{oversampled_grid, torus_distance, Grid, TrigSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// `F(x) = x + alpha Omega + eps f(x) Omega` with scalar `f`.
    Foliation,
    /// `F(x) = x + alpha Omega + eps f(x)` with vector `f`.
    Generic,
}

/// Parametric family `F_{alpha, eps}` with `f_eps = sum_i eps^i f^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFamily {
    pub kind: MapKind,
    pub omega: Vec<f64>,
    pub alpha: f64,
    pub eps: f64,
    pub jets: Vec<TrigSeries>,
}

impl MapFamily {
    pub fn new(kind: MapKind, omega: Vec<f64>, alpha: f64, eps: f64, jets: Vec<TrigSeries>) -> Result<Self> {
        let m = MapFamily { kind, omega, alpha, eps, jets };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.omega.len();
        if d == 0 || self.omega.iter().any(|w| !w.is_finite()) {
            return Err(invalid!("Omega must be a nonempty finite vector"));
        }
        if !self.alpha.is_finite() || !self.eps.is_finite() {
            return Err(invalid!("alpha and eps must be finite"));
        }
        if self.jets.is_empty() {
            return Err(invalid!("at least one jet f^0 is required"));
        }
        let want = match self.kind {
            MapKind::Foliation => 1,
            MapKind::Generic => d,
        };
        for (i, j) in self.jets.iter().enumerate() {
            if j.dim() != d || j.value_dim() != want {
                return Err(invalid!("jet {i} must map T^{d} to R^{want}"));
            }
            j.check_reality(1e-12)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn with_params(&self, alpha: f64, eps: f64) -> Self {
        MapFamily { alpha, eps, ..self.clone() }
    }

    /// Largest band among the jets.
    pub fn band(&self) -> usize {
        self.jets.iter().map(|j| j.band()).max().unwrap_or(0)
    }

    /// `f_eps = sum_i eps^i f^i` at the family's `eps`.
    pub fn field(&self) -> TrigSeries {
        let mut acc = self.jets[0].with_band(self.band()).0;
        let mut p = 1.0;
        for j in &self.jets[1..] {
            p *= self.eps;
            acc = acc.axpy(p, j);
        }
        acc
    }

    /// Jets expressed as displacement vectors: `f^i Omega` (foliation)
    /// or `f^i` itself.
    pub fn vector_jets(&self) -> Vec<TrigSeries> {
        match self.kind {
            MapKind::Generic => self.jets.clone(),
            MapKind::Foliation => self
                .jets
                .iter()
                .map(|j| {
                    let parts: Vec<TrigSeries> = self.omega.iter().map(|&w| j.scale(w)).collect();
                    TrigSeries::stack(&parts).expect("same dimension")
                })
                .collect(),
        }
    }

    pub fn evaluator(&self) -> MapEval {
        MapEval::new(self)
    }
}

/// `a + d1 sin(2 pi x) + d2 sin(2 pi y)`.
pub fn example_forcing(a: f64, d1: f64, d2: f64) -> TrigSeries {
    let mut g = TrigSeries::constant(2, 1, &[a]);
    g.set_pair(&[1, 0], 0, Complex64::new(0.0, -d1 / 2.0));
    g.set_pair(&[0, 1], 0, Complex64::new(0.0, -d2 / 2.0));
    g
}

/// The planar worked example: `Omega = (golden, 1)`, foliation kind,
/// single jet `f^0 = example_forcing(a, d1, d2)`.
pub fn example_map(a: f64, d1: f64, d2: f64, alpha: f64, eps: f64) -> MapFamily {
    MapFamily {
        kind: MapKind::Foliation,
        omega: vec![crate::frequency::golden(), 1.0],
        alpha,
        eps,
        jets: vec![example_forcing(a, d1, d2)],
    }
}

/// Generic-kind analogue of [`example_map`]: the same forcing along
/// `Omega` plus a constant `drift` in the first coordinate.
pub fn example_generic_map(a: f64, d1: f64, d2: f64, drift: f64, alpha: f64, eps: f64) -> MapFamily {
    let g = example_forcing(a, d1, d2);
    let w = crate::frequency::golden();
    MapFamily {
        kind: MapKind::Generic,
        omega: vec![w, 1.0],
        alpha,
        eps,
        jets: vec![TrigSeries::stack(&[g.scale(w).add_constant(&[drift]), g]).expect("same shape")],
    }
}

/// Precomputed field and derivatives for fast pointwise evaluation.
#[derive(Debug, Clone)]
pub struct MapEval {
    kind: MapKind,
    omega: Vec<f64>,
    alpha: f64,
    eps: f64,
    field: TrigSeries,
    /// `d f / d x_j`, stacked over `j`.
    grad: TrigSeries,
}

impl MapEval {
    pub fn new(map: &MapFamily) -> Self {
        let field = map.field().trimmed(1e-17);
        let parts: Vec<TrigSeries> = (0..map.dim()).map(|j| field.derivative(j)).collect();
        let grad = TrigSeries::stack(&parts).expect("same dimension");
        MapEval { kind: map.kind, omega: map.omega.clone(), alpha: map.alpha, eps: map.eps, field, grad }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// `F(x)` on the lift.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        match self.kind {
            MapKind::Foliation => {
                let s = self.alpha + self.eps * self.field.eval1(x);
                for i in 0..d {
                    out[i] = x[i] + s * self.omega[i];
                }
            }
            MapKind::Generic => {
                self.field.eval_into(x, out);
                for i in 0..d {
                    out[i] = x[i] + self.alpha * self.omega[i] + self.eps * out[i];
                }
            }
        }
    }

    /// Row-major Jacobian `DF(x)`.
    pub fn jacobian(&self, x: &[f64], jac: &mut [f64]) {
        let d = self.dim();
        let mut g = vec![0.0; self.grad.value_dim()];
        self.grad.eval_into(x, &mut g);
        for i in 0..d {
            for j in 0..d {
                let off = match self.kind {
                    MapKind::Foliation => self.omega[i] * g[j],
                    MapKind::Generic => g[j * d + i],
                };
                jac[i * d + j] = (i == j) as u8 as f64 + self.eps * off;
            }
        }
    }

    /// `1 + eps grad f(x) . Omega` (foliation kind).
    pub fn growth_along_omega(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.grad.value_dim()];
        self.grad.eval_into(x, &mut g);
        1.0 + self.eps * g.iter().zip(&self.omega).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `F^{-1}(y)` on the lift, by Newton iteration.
    pub fn inverse(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        match self.kind {
            MapKind::Foliation => {
                // x = y - t Omega with t = alpha + eps f(y - t Omega).
                let mut t = self.alpha + self.eps * self.field.eval1(y);
                let mut x = vec![0.0; d];
                for _ in 0..60 {
                    for i in 0..d {
                        x[i] = y[i] - t * self.omega[i];
                    }
                    let phi = t - self.alpha - self.eps * self.field.eval1(&x);
                    let dphi = self.growth_along_omega(&x);
                    if dphi.abs() < 1e-12 {
                        return Err(Error::NotInvertible { min_jacobian: dphi.abs() });
                    }
                    let step = phi / dphi;
                    t -= step;
                    if step.abs() < 1e-15 * (1.0 + t.abs()) {
                        break;
                    }
                }
                for i in 0..d {
                    out[i] = y[i] - t * self.omega[i];
                }
                Ok(())
            }
            MapKind::Generic => {
                let mut x: Vec<f64> = (0..d).map(|i| y[i] - self.alpha * self.omega[i]).collect();
                let mut fx = vec![0.0; d];
                let mut jac = vec![0.0; d * d];
                for _ in 0..60 {
                    self.apply(&x, &mut fx);
                    let r: Vec<f64> = (0..d).map(|i| fx[i] - y[i]).collect();
                    self.jacobian(&x, &mut jac);
                    let step = solve_dense(&jac, &r, d).ok_or(Error::NotInvertible { min_jacobian: 0.0 })?;
                    let mut big = 0.0f64;
                    for i in 0..d {
                        x[i] -= step[i];
                        big = big.max(step[i].abs());
                    }
                    if big < 1e-15 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                        break;
                    }
                }
                out.copy_from_slice(&x);
                Ok(())
            }
        }
    }
}

/// Gaussian elimination with partial pivoting for small systems.
pub(crate) fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs()))?;
        if m[p * n + c].abs() < 1e-300 {
            return None;
        }
        for j in 0..n {
            m.swap(c * n + j, p * n + j);
        }
        x.swap(c, p);
        for i in c + 1..n {
            let f = m[i * n + c] / m[c * n + c];
            for j in c..n {
                m[i * n + j] -= f * m[c * n + j];
            }
            x[i] -= f * x[c];
        }
    }
    for c in (0..n).rev() {
        let mut s = x[c];
        for j in c + 1..n {
            s -= m[c * n + j] * x[j];
        }
        x[c] = s / m[c * n + c];
    }
    Some(x)
}

/// `g + f o T_g`, the generator of `T_f o T_g`, by collocation.
pub fn compose_fptm(f: &TrigSeries, g: &TrigSeries, omega: &[f64], band: usize) -> Result<(TrigSeries, f64)> {
    check_scalar(f, omega)?;
    check_scalar(g, omega)?;
    let n = oversampled_grid(band);
    let d = omega.len();
    let mut y = vec![0.0; d];
    TrigSeries::from_fn(d, 1, band, n, |x, out| {
        let gx = g.eval1(x);
        for i in 0..d {
            y[i] = x[i] + gx * omega[i];
        }
        out[0] = gx + f.eval1(&y);
    })
}

fn check_scalar(f: &TrigSeries, omega: &[f64]) -> Result<()> {
    if f.value_dim() != 1 || f.dim() != omega.len() {
        return Err(invalid!("foliation generators are scalar series on T^{}", omega.len()));
    }
    Ok(())
}

/// Generator `g` of `T_f^{-1}`, i.e. `g = -f o T_f^{-1}`.
pub fn invert_fptm(f: &TrigSeries, omega: &[f64], band: usize) -> Result<(TrigSeries, f64)> {
    check_scalar(f, omega)?;
    let d = omega.len();
    let n = oversampled_grid(band.max(f.band()));
    let df = f.directional(omega);
    let grid = Grid::new(d, n);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in grid.points() {
        let j = 1.0 + df.eval1(&p);
        lo = lo.min(j);
        hi = hi.max(j);
    }
    let min_abs = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
    if min_abs < 1e-6 {
        return Err(Error::NotInvertible { min_jacobian: min_abs });
    }
    let mut x = vec![0.0; d];
    TrigSeries::from_fn(d, 1, band, n, |y, out| {
        // Solve t = f(y - t Omega).
        let mut t = f.eval1(y);
        for _ in 0..60 {
            for i in 0..d {
                x[i] = y[i] - t * omega[i];
            }
            let phi = t - f.eval1(&x);
            let step = phi / (1.0 + df.eval1(&x));
            t -= step;
            if step.abs() < 1e-16 * (1.0 + t.abs()) {
                break;
            }
        }
        out[0] = -t;
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    /// Iterate the inverse map (reaches repelling sets).
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDiagnostics {
    pub horizon: usize,
    /// Closed-form cocycle average along `Omega` (foliation kind); the
    /// top QR exponent for generic maps.
    pub lyapunov_along_omega: f64,
    pub transverse_exponents: Vec<f64>,
    /// Full QR spectrum, descending.
    pub qr_exponents: Vec<f64>,
    /// `(x_H - x_0) / H` on the lift (per iterate of the direction used).
    pub rotation_estimate: Vec<f64>,
    pub final_point: Vec<f64>,
}

/// Lyapunov exponents along an orbit of `map` from `x0`.
///
/// Exponents are those of the forward dynamics even when the orbit is
/// generated backward.
pub fn lyapunov(map: &MapFamily, x0: &[f64], horizon: usize, direction: Direction) -> Result<OrbitDiagnostics> {
    if horizon < 1 {
        return Err(invalid!("horizon must be positive"));
    }
    if x0.len() != map.dim() {
        return Err(invalid!("seed must have dimension {}", map.dim()));
    }
    let ev = map.evaluator();
    let d = map.dim();
    let mut x = x0.to_vec();
    let mut next = vec![0.0; d];
    let mut jac = vec![0.0; d * d];
    // Columns of q are the orthonormal frame.
    let mut q: Vec<f64> = (0..d * d).map(|i| (i / d == i % d) as u8 as f64).collect();
    let mut sums = vec![0.0; d];
    let mut along = 0.0;
    for _ in 0..horizon {
        match direction {
            Direction::Forward => {
                along += ev.growth_along_omega(&x).abs().ln();
                ev.jacobian(&x, &mut jac);
                ev.apply(&x, &mut next);
            }
            Direction::Backward => {
                ev.inverse(&x, &mut next)?;
                along += ev.growth_along_omega(&next).abs().ln();
                ev.jacobian(&next, &mut jac);
                let inv = invert_dense(&jac, d).ok_or(Error::NotInvertible { min_jacobian: 0.0 })?;
                jac.copy_from_slice(&inv);
            }
        }
        // z = J q, then modified Gram-Schmidt.
        let mut z = vec![0.0; d * d];
        for i in 0..d {
            for c in 0..d {
                z[i * d + c] = (0..d).map(|k| jac[i * d + k] * q[k * d + c]).sum();
            }
        }
        for c in 0..d {
            for p in 0..c {
                let dot: f64 = (0..d).map(|i| z[i * d + c] * z[i * d + p]).sum();
                for i in 0..d {
                    z[i * d + c] -= dot * z[i * d + p];
                }
            }
            let norm = (0..d).map(|i| z[i * d + c] * z[i * d + c]).sum::<f64>().sqrt();
            sums[c] += norm.ln();
            for i in 0..d {
                z[i * d + c] /= norm;
            }
        }
        q = z;
        x.copy_from_slice(&next);
    }
    let h = horizon as f64;
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let mut qr: Vec<f64> = sums.iter().map(|s| sign * s / h).collect();
    qr.sort_by(|a, b| b.total_cmp(a));
    let along = match map.kind {
        MapKind::Foliation => along / h,
        MapKind::Generic => qr[0],
    };
    let closest = (0..d)
        .min_by(|&i, &j| (qr[i] - along).abs().total_cmp(&(qr[j] - along).abs()))
        .unwrap_or(0);
    let transverse = qr.iter().enumerate().filter(|&(i, _)| i != closest).map(|(_, &v)| v).collect();
    let rotation_estimate = (0..d).map(|i| (x[i] - x0[i]) / h).collect();
    Ok(OrbitDiagnostics {
        horizon,
        lyapunov_along_omega: along,
        transverse_exponents: transverse,
        qr_exponents: qr,
        rotation_estimate,
        final_point: x,
    })
}

fn invert_dense(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for c in 0..n {
        let e: Vec<f64> = (0..n).map(|i| (i == c) as u8 as f64).collect();
        let col = solve_dense(a, &e, n)?;
        for i in 0..n {
            inv[i * n + c] = col[i];
        }
    }
    Some(inv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub value: f64,
    /// Half the last extrapolation gap.
    pub error: f64,
    /// Birkhoff averages at horizons `n, 2n, 4n, 8n`.
    pub birkhoff: Vec<f64>,
}

/// Rotation number of a degree-one circle lift.
///
/// Birkhoff averages at horizons `n, 2n, 4n, 8n` are combined by
/// Richardson extrapolation under a `1/n` error model.
pub fn rotation_number(lift: impl Fn(f64) -> f64, x0: f64, horizon: usize, check_grid: usize) -> Result<RotationEstimate> {
    if horizon == 0 {
        return Err(invalid!("horizon must be positive"));
    }
    let m = check_grid.max(2);
    let h = 1e-7;
    let mut min_der = f64::INFINITY;
    let mut max_der = f64::NEG_INFINITY;
    for i in 0..m {
        let x = i as f64 / m as f64;
        let der = (lift(x + h) - lift(x - h)) / (2.0 * h);
        min_der = min_der.min(der);
        max_der = max_der.max(der);
    }
    if min_der <= 0.0 && max_der >= 0.0 || max_der <= 0.0 {
        return Err(Error::NonMonotone { min_derivative: min_der });
    }
    let mut birkhoff = Vec::with_capacity(4);
    let mut x = x0;
    let mut done = 0usize;
    for level in 0..4 {
        let target = horizon << level;
        while done < target {
            x = lift(x);
            done += 1;
        }
        birkhoff.push((x - x0) / target as f64);
    }
    // Richardson table with ratio 2 for a 1/n leading error.
    let mut table = birkhoff.clone();
    let mut gap = 0.0;
    for j in 1..4 {
        let f = (1u64 << j) as f64;
        let prev = table.clone();
        for i in j..4 {
            table[i] = (f * prev[i] - prev[i - 1]) / (f - 1.0);
        }
        gap = (table[3] - prev[3]).abs();
    }
    Ok(RotationEstimate { value: table[3], error: 0.5 * gap, birkhoff })
}

/// Smallest torus distance `|F^n(x) - x|` over grid seeds and `1 <= n <= n_max`.
pub fn periodicity_probe(map: &MapFamily, grid_size: usize, n_max: usize) -> f64 {
    let ev = map.evaluator();
    let d = map.dim();
    let grid = Grid::new(d, grid_size);
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    for p in 0..grid.len() {
        let seed = grid.point(p);
        x.copy_from_slice(&seed);
        for _ in 0..n_max {
            ev.apply(&x, &mut y);
            core::mem::swap(&mut x, &mut y);
            best = best.min(torus_distance(&x, &seed));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::golden;
    use core::f64::consts::PI;
    use num_complex::Complex64;

    fn sine(amp: f64, k: [i64; 2], cosine: bool) -> TrigSeries {
        let mut s = TrigSeries::zeros(2, 1, 1);
        let c = if cosine { Complex64::new(amp / 2.0, 0.0) } else { Complex64::new(0.0, -amp / 2.0) };
        s.set_pair(&k, 0, c);
        s
    }

    #[test]
    fn constants_compose_additively() {
        let om = [golden(), 1.0];
        let f = TrigSeries::constant(2, 0, &[0.3]);
        let g = TrigSeries::constant(2, 0, &[0.2]);
        let (h, _) = compose_fptm(&f, &g, &om, 4).unwrap();
        assert!((h.mean()[0] - 0.5).abs() < 1e-15);
        let (inv, _) = invert_fptm(&f, &om, 4).unwrap();
        assert!((inv.mean()[0] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn composition_defect() {
        let om = [golden(), 1.0];
        let f = sine(0.1, [1, 0], false);
        let g = sine(0.2, [1, 0], true);
        let (h, _) = compose_fptm(&f, &g, &om, 32).unwrap();
        let grid = Grid::new(2, 32);
        let mut worst = 0.0f64;
        for x in grid.points() {
            let gx = g.eval1(&x);
            let y = [x[0] + gx * om[0], x[1] + gx * om[1]];
            let fy = f.eval1(&y);
            let direct = [y[0] + fy * om[0], y[1] + fy * om[1]];
            let hx = h.eval1(&x);
            let via = [x[0] + hx * om[0], x[1] + hx * om[1]];
            worst = worst.max((direct[0] - via[0]).abs()).max((direct[1] - via[1]).abs());
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn inverse_round_trip() {
        let om = [golden(), 1.0];
        let f = sine(0.05, [1, 0], false);
        let (g, _) = invert_fptm(&f, &om, 24).unwrap();
        let (id, _) = compose_fptm(&g, &f, &om, 24).unwrap();
        assert!(id.grid_sup(32) <= 1e-9);
    }

    #[test]
    fn fold_detected() {
        let om = [golden(), 1.0];
        let f = sine(1.0, [1, 0], false);
        assert!(matches!(invert_fptm(&f, &om, 8), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn rigid_rotation_exponents() {
        let om = [golden(), 1.0];
        for c in [0.0, 0.4] {
            let map = MapFamily::new(MapKind::Foliation, om.to_vec(), 0.3, 0.1, vec![TrigSeries::constant(2, 0, &[c])])
                .unwrap();
            let diag = lyapunov(&map, &[0.1, 0.2], 200, Direction::Forward).unwrap();
            assert!(diag.lyapunov_along_omega.abs() < 1e-12);
            assert!(diag.qr_exponents.iter().all(|e| e.abs() < 1e-12));
        }
    }

    #[test]
    fn foliation_preserved() {
        let om = [golden(), 1.0];
        let map = MapFamily::new(MapKind::Foliation, om.to_vec(), 0.7, 0.1, vec![sine(0.5, [1, 1], false)]).unwrap();
        let ev = map.evaluator();
        let x = [0.3, 0.9];
        let mut y = [0.0; 2];
        ev.apply(&x, &mut y);
        let t = (y[1] - x[1]) / om[1];
        assert!((y[0] - x[0] - t * om[0]).abs() < 1e-12);
        let mut back = [0.0; 2];
        ev.inverse(&y, &mut back).unwrap();
        assert!((back[0] - x[0]).abs() < 1e-13 && (back[1] - x[1]).abs() < 1e-13);
    }

    #[test]
    fn rotation_number_of_rigid_rotation() {
        let r = rotation_number(|x| x + golden(), 0.0, 1000, 64).unwrap();
        assert!((r.value - golden()).abs() < 1e-10);
        let r = rotation_number(|x| x, 0.3, 1000, 64).unwrap();
        assert!(r.value.abs() < 1e-15);
        let bad = rotation_number(|x| x + 0.3 * (2.0 * PI * x).sin(), 0.0, 10, 64);
        assert!(matches!(bad, Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn fixed_point_found_by_probe() {
        // phi = 0.2 sin(2 pi x1) vanishes at x1 = 0.
        let om = [golden(), 1.0];
        let map = MapFamily::new(MapKind::Foliation, om.to_vec(), 0.0, 1.0, vec![sine(0.2, [1, 0], false)]).unwrap();
        assert!(periodicity_probe(&map, 8, 5) < 1e-15);
        let rot = MapFamily::new(MapKind::Foliation, vec![1.0, golden()], golden(), 0.0, vec![TrigSeries::zeros(2, 1, 0)])
            .unwrap();
        assert!(periodicity_probe(&rot, 4, 1000) > 0.0);
    }
}
