//! Resonant normal forms by order-by-order averaging.
//!
//! Everything here lives in reduced coordinates `z = A x`, where the
//! rotation is `(omega, 0) + L`. The conjugacy is
//! `H = Id + sum_j eps^{j+1} h^j v` with `v = A Omega` (foliation kind)
//! or the identity directions (generic kind), and the normal form map is
//! `z + alpha_0 A Omega + sum_j eps^{j+1} psi^j(z) v` with every `psi^j`
//! resonant (independent of the first `r` coordinates).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dynamics::{solve_dense, MapFamily, MapKind};
use crate::error::{invalid, Error, Result};
use crate::fourier::{cohomology_solve, oversampled_grid, Grid, Resonant, TrigSeries};
use crate::frequency::ResonanceData;
use crate::jet::{series_jet, taylor_compose, Jet};
use crate::lattice;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalFormConfig {
    /// Working band `K` per dimension.
    pub band: usize,
    /// Collocation grid; `None` means `4K`.
    pub grid: Option<usize>,
    pub divisor_floor: f64,
    /// Resonant averages below this fraction of `|f^0|` count as zero.
    pub flat_threshold: f64,
}

impl Default for NormalFormConfig {
    fn default() -> Self {
        NormalFormConfig { band: 32, grid: None, divisor_floor: 1e-12, flat_threshold: 1e-8 }
    }
}

impl NormalFormConfig {
    pub fn grid_size(&self) -> usize {
        self.grid.unwrap_or_else(|| oversampled_grid(self.band))
    }
}

impl MapFamily {
    /// The family in coordinates `z = A x`.
    pub fn reduce(&self, res: &ResonanceData) -> Result<MapFamily> {
        if res.dim() != self.dim() {
            return Err(invalid!("resonance data has dimension {}, map has {}", res.dim(), self.dim()));
        }
        let a = &res.a_matrix;
        let a_inv = res.a_inverse();
        let omega = lattice::mat_vec_f64(a, &self.omega);
        let af: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let jets = self
            .jets
            .iter()
            .map(|j| {
                let c = j.compose_linear(&a_inv);
                match self.kind {
                    MapKind::Foliation => c,
                    MapKind::Generic => c.mix_components(&af),
                }
            })
            .collect();
        Ok(MapFamily { kind: self.kind, omega, alpha: self.alpha, eps: self.eps, jets })
    }
}

/// Displacement directions of the conjugacy components.
fn directions(kind: MapKind, omega_red: &[f64]) -> Vec<Vec<f64>> {
    let d = omega_red.len();
    match kind {
        MapKind::Foliation => vec![omega_red.to_vec()],
        MapKind::Generic => (0..d).map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect()).collect(),
    }
}

/// One order of the averaging hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingStep {
    pub h: TrigSeries,
    /// Resonant average `psi^j` (modes with first `r` components zero).
    pub resonant_avg: TrigSeries,
    /// Tail mass dropped when truncating the right-hand side.
    pub tail: f64,
    /// Largest lower-order residual of the jet identity (consistency).
    pub lower_residual: f64,
}

/// Order-by-order solver for `h + f o (Id + eps h v) = psi + h o (T + eps psi v)`.
#[derive(Debug, Clone)]
pub struct Averaging {
    jets: Vec<TrigSeries>,
    dirs: Vec<Vec<f64>>,
    shift: Vec<f64>,
    r: usize,
    band: usize,
    n: usize,
    floor: f64,
}

impl Averaging {
    /// `map` in original coordinates with `alpha = alpha_0`.
    pub fn new(map: &MapFamily, res: &ResonanceData, cfg: &NormalFormConfig) -> Result<Self> {
        let red = map.reduce(res)?;
        let band = cfg.band;
        let n = cfg.grid_size();
        if n < 2 * band + 1 {
            return Err(invalid!("grid {n} too small for band {band}"));
        }
        let shift: Vec<f64> = red.omega.iter().map(|w| map.alpha * w).collect();
        Ok(Averaging {
            jets: red.jets.iter().map(|j| j.with_band(band).0).collect(),
            dirs: directions(map.kind, &red.omega),
            shift,
            r: res.r,
            band,
            n,
            floor: cfg.divisor_floor,
        })
    }

    pub fn value_dim(&self) -> usize {
        self.dirs.len()
    }

    fn zero(&self) -> TrigSeries {
        TrigSeries::zeros(self.shift.len(), self.value_dim(), self.band)
    }

    /// Jet of `h + f o (Id + eps h v) - psi - h o (T + eps psi v)` to `order`.
    pub fn defect_jet(&self, h: &[TrigSeries], psi: &[TrigSeries], order: usize) -> Jet {
        let n = self.n;
        let pad = |v: &[TrigSeries]| {
            let mut v = v.to_vec();
            if v.is_empty() {
                v.push(self.zero());
            }
            v
        };
        let (h, psi) = (pad(h), pad(psi));
        let mut lhs = series_jet(&h, 0, order, n);
        let disp_h = series_jet(&h, 1, order, n);
        for (i, f) in self.jets.iter().enumerate().take(order + 1) {
            let t = taylor_compose(f, None, &self.dirs, &disp_h, n);
            add_shifted(&mut lhs, &t, i);
        }
        let rhs_psi = series_jet(&psi, 0, order, n);
        let disp_psi = series_jet(&psi, 1, order, n);
        lhs.sub_assign(&rhs_psi);
        for (i, hi) in h.iter().enumerate().take(order + 1) {
            let t = taylor_compose(hi, Some(&self.shift), &self.dirs, &disp_psi, n);
            let mut neg = Jet::zeros(order, t.comps(), t.pts());
            add_shifted(&mut neg, &t, i);
            lhs.sub_assign(&neg);
        }
        lhs
    }

    /// Solve order `j` given `h^0..h^{j-1}` and `psi^0..psi^{j-1}`.
    pub fn step(&self, j: usize, h: &[TrigSeries], psi: &[TrigSeries]) -> Result<AveragingStep> {
        if h.len() != j || psi.len() != j {
            return Err(invalid!("order {j} needs exactly {j} lower jets"));
        }
        let jet = self.defect_jet(h, psi, j);
        let lower_residual = (0..j).map(|o| jet.sup(o)).fold(0.0, f64::max);
        let (rhs, tail) = TrigSeries::from_samples(self.shift.len(), self.n, self.band, &jet.samples(j))?;
        let sol = cohomology_solve(&rhs.scale(-1.0), &self.shift, Resonant::Leading(self.r), self.floor)?;
        Ok(AveragingStep { h: sol.w, resonant_avg: sol.resonant_part.scale(-1.0), tail, lower_residual })
    }
}

fn add_shifted(acc: &mut Jet, t: &Jet, by: usize) {
    for o in by..=acc.order() {
        for c in 0..acc.comps() {
            let src = t.get(o - by, c).to_vec();
            let dst = acc.get_mut(o, c);
            for (a, b) in dst.iter_mut().zip(src) {
                *a += b;
            }
        }
    }
}

/// Single averaging order for callers that manage the hierarchy.
pub fn averaging_order(
    map: &MapFamily,
    res: &ResonanceData,
    j: usize,
    h_lower: &[TrigSeries],
    psi_lower: &[TrigSeries],
    cfg: &NormalFormConfig,
) -> Result<AveragingStep> {
    Averaging::new(map, res, cfg)?.step(j, h_lower, psi_lower)
}

/// Near-identity change of variables `H = Id + sum_c s_c(x) v_c` at fixed eps.
#[derive(Debug, Clone)]
pub struct Conjugacy {
    dirs: Vec<Vec<f64>>,
    s: TrigSeries,
    grad: TrigSeries,
}

impl Conjugacy {
    pub fn new(kind: MapKind, omega_red: &[f64], h_jets: &[TrigSeries], eps: f64) -> Self {
        let d = omega_red.len();
        let dirs = directions(kind, omega_red);
        let mut s = TrigSeries::zeros(d, dirs.len(), 0);
        let mut p = eps;
        for h in h_jets {
            s = s.axpy(p, h);
            p *= eps;
        }
        let s = s.trimmed(1e-17);
        let parts: Vec<TrigSeries> = (0..d).map(|j| s.derivative(j)).collect();
        let grad = TrigSeries::stack(&parts).expect("same dimension");
        Conjugacy { dirs, s, grad }
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut v = vec![0.0; self.dirs.len()];
        self.s.eval_into(x, &mut v);
        out.copy_from_slice(x);
        for (c, dir) in self.dirs.iter().enumerate() {
            for i in 0..out.len() {
                out[i] += v[c] * dir[i];
            }
        }
    }

    /// Row-major `DH(x)`.
    pub fn jacobian(&self, x: &[f64], jac: &mut [f64]) {
        let d = self.dim();
        let m = self.dirs.len();
        let mut g = vec![0.0; d * m];
        self.grad.eval_into(x, &mut g);
        for i in 0..d {
            for j in 0..d {
                let mut v = (i == j) as u8 as f64;
                for c in 0..m {
                    v += self.dirs[c][i] * g[j * m + c];
                }
                jac[i * d + j] = v;
            }
        }
    }

    /// `H^{-1}(q)` on the lift, by Newton iteration from `q`.
    pub fn inverse(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        let mut z = q.to_vec();
        let mut hz = vec![0.0; d];
        let mut jac = vec![0.0; d * d];
        for _ in 0..50 {
            self.apply(&z, &mut hz);
            let r: Vec<f64> = (0..d).map(|i| hz[i] - q[i]).collect();
            self.jacobian(&z, &mut jac);
            let step = solve_dense(&jac, &r, d).ok_or(Error::NotInvertible { min_jacobian: 0.0 })?;
            let mut big = 0.0f64;
            for i in 0..d {
                z[i] -= step[i];
                big = big.max(step[i].abs());
            }
            if big < 1e-16 * (1.0 + q.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                break;
            }
        }
        out.copy_from_slice(&z);
        Ok(())
    }

    /// Largest row-sum norm of `DH^{-1}` over a grid.
    pub fn inverse_jacobian_norm(&self, n: usize) -> f64 {
        let d = self.dim();
        let grid = Grid::new(d, n);
        let mut jac = vec![0.0; d * d];
        let mut worst = 0.0f64;
        for x in grid.points() {
            self.jacobian(&x, &mut jac);
            let mut rows = vec![0.0; d];
            for c in 0..d {
                let e: Vec<f64> = (0..d).map(|i| (i == c) as u8 as f64).collect();
                if let Some(col) = solve_dense(&jac, &e, d) {
                    for i in 0..d {
                        rows[i] += col[i].abs();
                    }
                }
            }
            worst = worst.max(rows.iter().cloned().fold(0.0, f64::max));
        }
        worst
    }
}

/// The conjugated map `H^{-1} o F o H` in reduced coordinates at one
/// parameter point, as `z -> z + (omega, 0) + L + P(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatedMap {
    pub alpha: f64,
    pub eps: f64,
    /// Periodic displacement `P`, values in `R^d`.
    pub displacement: TrigSeries,
    pub tail: f64,
}

/// Order-`N` resonant normal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    pub kind: MapKind,
    pub resonance: ResonanceData,
    pub alpha0: f64,
    pub order: usize,
    pub n: usize,
    pub m: usize,
    /// The family in reduced coordinates.
    pub reduced: MapFamily,
    /// Conjugacy jets `h^0..h^{N-1}` (reduced coordinates).
    pub h_jets: Vec<TrigSeries>,
    /// Resonant averages `psi^0..psi^{N-1}`.
    pub psi_jets: Vec<TrigSeries>,
    pub eps_probe: f64,
    /// On `T^{d-r}` with values in `R^r`, at `eps_probe`.
    pub beta: TrigSeries,
    /// On `T^{d-r}` with values in `R^{d-r}`, at `eps_probe`.
    pub eta: TrigSeries,
    pub r1: TrigSeries,
    pub r2: TrigSeries,
    /// Largest tail mass met while truncating.
    pub tail: f64,
    pub band: usize,
    pub grid: usize,
}

pub fn resonant_normal_form(
    map: &MapFamily,
    res: &ResonanceData,
    order: usize,
    eps_probe: f64,
    cfg: &NormalFormConfig,
) -> Result<NormalForm> {
    if order == 0 {
        return Err(invalid!("normal form order must be at least 1"));
    }
    if res.r == 0 || res.r == res.dim() {
        return Err(invalid!("normal form needs a resonance of rank 1..d-1 (got r = {})", res.r));
    }
    let red_f = res.reduced_frequency();
    let mismatch = (0..res.dim())
        .map(|i| (map.alpha * red_f[i] - res.reduced_rotation()[i]).abs())
        .fold(0.0, f64::max);
    if mismatch > 1e-8 {
        return Err(invalid!("alpha * A Omega differs from (omega, 0) + L by {mismatch:e}"));
    }
    let avg = Averaging::new(map, res, cfg)?;
    let mut h = Vec::with_capacity(order);
    let mut psi = Vec::with_capacity(order);
    let mut tail = 0.0f64;
    for j in 0..order {
        let step = avg.step(j, &h, &psi)?;
        tail = tail.max(step.tail);
        h.push(step.h);
        psi.push(step.resonant_avg);
    }
    let scale = avg.jets.iter().map(|j| j.l1_norm()).fold(0.0, f64::max);
    let f0 = avg.jets[0].l1_norm();
    let scale = if f0 > 0.0 { f0 } else { scale };
    let first = psi.iter().position(|p| scale > 0.0 && p.l1_norm() > cfg.flat_threshold * scale);
    let Some(first) = first else {
        return Err(Error::AllOrdersFlat { order });
    };
    let n = first + 1;
    let reduced = map.reduce(res)?.with_params(map.alpha, eps_probe);
    let mut nf = NormalForm {
        kind: map.kind,
        resonance: res.clone(),
        alpha0: map.alpha,
        order,
        n,
        m: order + 1 - n,
        reduced,
        h_jets: h,
        psi_jets: psi,
        eps_probe,
        beta: TrigSeries::zeros(res.dim() - res.r, res.r, 0),
        eta: TrigSeries::zeros(res.dim() - res.r, res.dim() - res.r, 0),
        r1: TrigSeries::zeros(res.dim(), res.r, 0),
        r2: TrigSeries::zeros(res.dim(), res.dim() - res.r, 0),
        tail,
        band: cfg.band,
        grid: cfg.grid_size(),
    };
    let (beta, eta) = nf.beta_eta(eps_probe);
    nf.beta = beta;
    nf.eta = eta;
    let cm = nf.conjugated_map(map.alpha, eps_probe)?;
    nf.tail = nf.tail.max(cm.tail);
    let rem = cm.displacement.sub(&nf.explicit_terms(eps_probe)).scale(eps_probe.powi(-(order as i32 + 1)));
    let r = res.r;
    let d = res.dim();
    let pick = |rows: core::ops::Range<usize>| {
        let m: Vec<Vec<f64>> = rows.map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect()).collect();
        rem.mix_components(&m)
    };
    nf.r1 = pick(0..r);
    nf.r2 = pick(r..d);
    Ok(nf)
}

impl NormalForm {
    pub fn dim(&self) -> usize {
        self.resonance.dim()
    }

    pub fn r(&self) -> usize {
        self.resonance.r
    }

    /// `A Omega`.
    pub fn omega_red(&self) -> &[f64] {
        &self.reduced.omega
    }

    fn dirs(&self) -> Vec<Vec<f64>> {
        directions(self.kind, self.omega_red())
    }

    /// Resonant part of the normal form: `sum_{j=1}^N eps^j psi^{j-1} v`.
    pub fn explicit_terms(&self, eps: f64) -> TrigSeries {
        let d = self.dim();
        let dirs = self.dirs();
        let mut acc = TrigSeries::zeros(d, self.psi_jets[0].value_dim(), 0);
        let mut p = eps;
        for psi in &self.psi_jets {
            acc = acc.axpy(p, psi);
            p *= eps;
        }
        let mat: Vec<Vec<f64>> = (0..d).map(|i| dirs.iter().map(|v| v[i]).collect()).collect();
        acc.mix_components(&mat)
    }

    /// `(beta, eta)` on `T^{d-r}` at the given eps.
    pub fn beta_eta(&self, eps: f64) -> (TrigSeries, TrigSeries) {
        let d = self.dim();
        let r = self.r();
        let mut acc = TrigSeries::zeros(d, self.psi_jets[0].value_dim(), 0);
        let mut p = 1.0;
        for psi in &self.psi_jets[self.n - 1..] {
            acc = acc.axpy(p, psi);
            p *= eps;
        }
        let dirs = self.dirs();
        let mat: Vec<Vec<f64>> = (0..d).map(|i| dirs.iter().map(|v| v[i]).collect()).collect();
        let full = acc.mix_components(&mat).leading_zero_slice(r);
        let rows = |range: core::ops::Range<usize>| -> Vec<Vec<f64>> {
            range.map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect()).collect()
        };
        (full.mix_components(&rows(0..r)), full.mix_components(&rows(r..d)))
    }

    pub fn eta_at(&self, eps: f64) -> TrigSeries {
        self.beta_eta(eps).1
    }

    /// `eta` for the map at `alpha0 + alpha_offset`: the offset moves the
    /// transverse displacement by `alpha_offset Omega_y / eps^n`.
    pub fn eta_with_offset(&self, eps: f64, alpha_offset: f64) -> TrigSeries {
        let eta = self.eta_at(eps);
        if alpha_offset == 0.0 {
            return eta;
        }
        let r = self.r();
        let gain = eps.powi(self.n as i32);
        let shift: Vec<f64> = self.omega_red()[r..].iter().map(|w| alpha_offset * w / gain).collect();
        eta.add_constant(&shift)
    }

    pub fn conjugacy(&self, eps: f64) -> Conjugacy {
        Conjugacy::new(self.kind, self.omega_red(), &self.h_jets, eps)
    }

    /// `H^{-1} o F_{alpha, eps} o H` by collocation.
    pub fn conjugated_map(&self, alpha: f64, eps: f64) -> Result<ConjugatedMap> {
        let d = self.dim();
        let rot = self.resonance.reduced_rotation();
        if eps == 0.0 {
            // H = Id and F is a translation.
            let shift: Vec<f64> = (0..d).map(|i| alpha * self.omega_red()[i] - rot[i]).collect();
            let displacement = TrigSeries::constant(d, d, &shift).with_band(self.band).0;
            return Ok(ConjugatedMap { alpha, eps, displacement, tail: 0.0 });
        }
        let conj = self.conjugacy(eps);
        let f = self.reduced.with_params(alpha, eps).evaluator();
        let mut p = vec![0.0; d];
        let mut q = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut failure = None;
        let (displacement, tail) = TrigSeries::from_fn(d, d, self.band, self.grid, |x, out| {
            conj.apply(x, &mut p);
            f.apply(&p, &mut q);
            if let Err(e) = conj.inverse(&q, &mut z) {
                failure = Some(e);
            }
            for i in 0..d {
                out[i] = z[i] - x[i] - rot[i];
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(ConjugatedMap { alpha, eps, displacement, tail })
    }

    /// Grid sup of the conjugated map minus the truncated normal form.
    pub fn conjugation_defect(&self, eps: f64) -> Result<f64> {
        let cm = self.conjugated_map(self.alpha0, eps)?;
        Ok(cm.displacement.sub(&self.explicit_terms(eps)).grid_sup(self.grid))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaModel {
    /// `(delta alpha, sup |Delta(alpha)|)` samples.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope through the origin.
    pub slope: f64,
    pub inverse_jacobian_norm: f64,
    pub omega_norm: f64,
    /// `|DH^{-1}| |A Omega|`.
    pub bound: f64,
}

/// Linear model of the parameter drift `Delta(alpha) = G_alpha - G_alpha0`.
pub fn delta_model(nf: &NormalForm, eps: f64, offsets: &[f64]) -> Result<DeltaModel> {
    let base = nf.conjugated_map(nf.alpha0, eps)?;
    let mut samples = Vec::with_capacity(offsets.len());
    for &da in offsets {
        let cm = nf.conjugated_map(nf.alpha0 + da, eps)?;
        let diff = cm.displacement.sub(&base.displacement).grid_sup(nf.grid);
        samples.push((da, diff));
    }
    let num: f64 = samples.iter().map(|(a, v)| a.abs() * v).sum();
    let den: f64 = samples.iter().map(|(a, _)| a * a).sum();
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let inv = nf.conjugacy(eps).inverse_jacobian_norm(nf.grid.min(64));
    let omega_norm = nf.omega_red().iter().map(|w| w.abs()).fold(0.0, f64::max);
    Ok(DeltaModel { samples, slope, inverse_jacobian_norm: inv, omega_norm, bound: inv * omega_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::example_map;
    use crate::frequency::{analyze, golden, DetectOptions};
    use num_complex::Complex64;

    fn setup(a: f64, d1: f64, d2: f64) -> (MapFamily, ResonanceData) {
        let map = example_map(a, d1, d2, 1.0, 0.0);
        let res = analyze(&map.omega, DetectOptions::default()).unwrap();
        (map, res)
    }

    fn cfg(band: usize) -> NormalFormConfig {
        NormalFormConfig { band, ..Default::default() }
    }

    #[test]
    fn first_order_eta_and_beta() {
        let (map, res) = setup(0.3, 0.1, 0.5);
        let nf = resonant_normal_form(&map, &res, 1, 0.02, &cfg(8)).unwrap();
        assert_eq!((nf.n, nf.m), (1, 1));
        let mut eta = TrigSeries::constant(1, 1, &[0.3]);
        eta.set_pair(&[1], 0, Complex64::new(0.0, -0.25));
        assert!(nf.eta.sub(&eta).max_abs_coeff() < 1e-10);
        assert!(nf.beta.sub(&eta.scale(golden())).max_abs_coeff() < 1e-10);
    }

    #[test]
    fn zeroth_order_cohomology() {
        let (map, res) = setup(0.3, 0.1, 0.5);
        let step = averaging_order(&map, &res, 0, &[], &[], &cfg(8)).unwrap();
        let drift = step.h.shift(&map.omega).sub(&step.h);
        let mut expect = TrigSeries::zeros(2, 1, 8);
        expect.set_pair(&[1, 0], 0, Complex64::new(0.0, -0.05));
        assert!(drift.sub(&expect).max_abs_coeff() < 1e-12);
        assert!(step.h.mean()[0].abs() < 1e-15);
        let zero = example_map(0.0, 0.0, 0.0, 1.0, 0.0);
        let step = averaging_order(&zero, &res, 0, &[], &[], &cfg(8)).unwrap();
        assert_eq!(step.h.max_abs_coeff(), 0.0);
        assert_eq!(step.resonant_avg.max_abs_coeff(), 0.0);
    }

    #[test]
    fn pure_rotation_is_flat() {
        let (map, res) = setup(0.0, 0.0, 0.0);
        let err = resonant_normal_form(&map, &res, 3, 0.02, &cfg(8)).unwrap_err();
        assert!(matches!(err, Error::AllOrdersFlat { order: 3 }));
    }

    #[test]
    fn defect_has_expected_order() {
        let (map, res) = setup(0.3, 0.1, 0.5);
        for order in 1..=3 {
            let nf = resonant_normal_form(&map, &res, order, 0.02, &cfg(16)).unwrap();
            let target = 2f64.powi(order as i32 + 1);
            for eps in [0.04, 0.02] {
                let ratio = nf.conjugation_defect(eps).unwrap() / nf.conjugation_defect(eps / 2.0).unwrap();
                assert!((ratio / target - 1.0).abs() < 0.25, "order {order} eps {eps}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn structure_of_jets() {
        let (map, res) = setup(0.3, 0.1, 0.5);
        let nf = resonant_normal_form(&map, &res, 3, 0.02, &cfg(12)).unwrap();
        for h in &nf.h_jets {
            assert!(h.mean()[0].abs() < 1e-14);
            let (_, resonant) = h.split_resonant(1);
            assert!(resonant.max_abs_coeff() < 1e-14);
        }
        for psi in &nf.psi_jets {
            let (non, _) = psi.split_resonant(1);
            assert_eq!(non.max_abs_coeff(), 0.0);
        }
        // beta and eta share the scalar factor along A Omega.
        let scaled = nf.eta.scale(golden());
        assert!(nf.beta.sub(&scaled).max_abs_coeff() < 1e-10);
    }

    #[test]
    fn delta_model_respects_bound() {
        let (map, res) = setup(0.3, 0.1, 0.5);
        let nf = resonant_normal_form(&map, &res, 1, 0.05, &cfg(8)).unwrap();
        let dm = delta_model(&nf, 0.05, &[1e-3, -1e-3, 1e-4, -1e-4]).unwrap();
        assert!(dm.slope > 0.0 && dm.slope <= dm.bound * (1.0 + 1e-9), "{dm:?}");
        let flat = delta_model(&nf, 0.05, &[0.0]).unwrap();
        assert_eq!(flat.samples[0].1, 0.0);
        // eps = 0: H = Id, drift is exactly delta alpha * Omega.
        let dm0 = delta_model(&nf, 0.0, &[1e-3]).unwrap();
        assert!((dm0.samples[0].1 - 1e-3).abs() < 1e-14);
    }

    #[test]
    fn generic_defect_has_expected_order() {
        let g = crate::dynamics::example_forcing(0.2, 0.1, 0.3);
        let h = crate::dynamics::example_forcing(0.3, 0.2, 0.5);
        let f = TrigSeries::stack(&[g, h]).unwrap();
        let map = MapFamily::new(MapKind::Generic, vec![golden(), 1.0], 1.0, 0.0, vec![f]).unwrap();
        let res = analyze(&map.omega, DetectOptions::default()).unwrap();
        let nf = resonant_normal_form(&map, &res, 2, 0.02, &cfg(16)).unwrap();
        assert_eq!(nf.n, 1);
        let ratio = nf.conjugation_defect(0.02).unwrap() / nf.conjugation_defect(0.01).unwrap();
        assert!((ratio / 8.0 - 1.0).abs() < 0.25, "ratio {ratio}");
    }
}
