//! Lindstedt series for the invariant surface born at a resonance.
//!
//! In reduced coordinates the map is `F(z) = z + rot + eps V_eps(z)` with
//! `V = f Omega_red` (foliation kind) or `V = f` (generic kind). We solve
//! `F o l = l o u` order by order for `l(sigma) = (sigma, y0) + sum_j
//! eps^j l_j(sigma)` and `u(sigma) = sigma + omega + sum_j eps^j u_j`
//! with constant `u_j`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dynamics::{solve_dense, MapFamily, MapKind};
use crate::error::{invalid, Error, Result};
use crate::fourier::{cohomology_solve, oversampled_grid, wrap, Grid, Resonant, TrigSeries};
use crate::frequency::ResonanceData;
use crate::jet::{series_jet, taylor_compose, taylor_compose_by, Jet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LindstedtConfig {
    pub band: usize,
    pub grid: Option<usize>,
    pub divisor_floor: f64,
    /// Largest admissible `|<V^y(., y0)>|`.
    pub solvability_tol: f64,
    /// Smallest admissible `|det <D_y V^y(., y0)>|`.
    pub nondegeneracy_floor: f64,
}

impl Default for LindstedtConfig {
    fn default() -> Self {
        LindstedtConfig { band: 32, grid: None, divisor_floor: 1e-12, solvability_tol: 1e-10, nondegeneracy_floor: 1e-8 }
    }
}

impl LindstedtConfig {
    pub fn grid_size(&self) -> usize {
        self.grid.unwrap_or_else(|| oversampled_grid(self.band))
    }
}

/// How the free average of `l_j^y` was fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageChoice {
    pub order: usize,
    pub value: Vec<f64>,
    /// Order of the equation whose `y`-average fixed it.
    pub fixed_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindstedtSeries {
    pub kind: MapKind,
    pub order: usize,
    pub y0: Vec<f64>,
    /// Rotation of the base, `u_0(sigma) = sigma + omega`.
    pub omega: Vec<f64>,
    /// `l_j^x`, `j = 0..=N`; entry 0 is the periodic part of the identity chart (zero).
    pub l_x: Vec<TrigSeries>,
    /// `l_j^y`, `j = 0..=N`; entry 0 is the constant `y0`.
    pub l_y: Vec<TrigSeries>,
    /// `u_j`, `j = 0..=N`; entry 0 is `omega`.
    pub u_consts: Vec<Vec<f64>>,
    pub averages_log: Vec<AverageChoice>,
    /// For the foliation kind, the largest `|u_j|` found by the generic
    /// balance before it is set to zero.
    pub u_residual: f64,
    /// The family in reduced coordinates at `alpha_0`.
    pub reduced: MapFamily,
    pub band: usize,
    pub grid: usize,
}

/// Reduced displacement fields `V^i` (values in `R^d`).
fn displacement_fields(red: &MapFamily) -> Vec<TrigSeries> {
    match red.kind {
        MapKind::Foliation => red.jets.iter().map(|f| f.mix_components(&red.omega.iter().map(|&w| vec![w]).collect::<Vec<_>>())).collect(),
        MapKind::Generic => red.jets.clone(),
    }
}

pub fn lindstedt_expand(
    map: &MapFamily,
    res: &ResonanceData,
    y0: &[f64],
    order: usize,
    cfg: &LindstedtConfig,
) -> Result<LindstedtSeries> {
    let d = map.dim();
    let r = res.r;
    if r == 0 || r == d {
        return Err(invalid!("Lindstedt series need a resonance of rank 1..d-1"));
    }
    let m = d - r;
    if y0.len() != m {
        return Err(invalid!("y0 must have {m} components"));
    }
    if map.kind == MapKind::Foliation && m != 1 {
        return Err(invalid!("foliation-kind surfaces need a codimension-one resonance (d - r = 1)"));
    }
    let red = map.reduce(res)?;
    let rot = res.reduced_rotation();
    let mismatch = (0..d).map(|i| (map.alpha * red.omega[i] - rot[i]).abs()).fold(0.0, f64::max);
    if mismatch > 1e-8 {
        return Err(invalid!("alpha * A Omega differs from (omega, 0) + L by {mismatch:e}"));
    }
    let band = cfg.band;
    let n = cfg.grid_size();
    if n < 2 * band + 1 {
        return Err(invalid!("grid {n} too small for band {band}"));
    }
    let omega: Vec<f64> = rot[..r].to_vec();
    let fields: Vec<TrigSeries> = displacement_fields(&red).into_iter().map(|v| v.with_band(band).0).collect();

    // Averages of V^0 and D_y V^0 on the slice y = y0.
    let v0 = fields[0].restrict_trailing(y0);
    let avg_v = v0.mean();
    let solv = avg_v[r..].iter().map(|v| v.abs()).fold(0.0, f64::max);
    if solv > cfg.solvability_tol {
        return Err(Error::SolvabilityFail { average: solv });
    }
    let mut dyv = vec![0.0; d * m]; // row-major d x m
    for k in 0..m {
        let col = fields[0].derivative(r + k).restrict_trailing(y0).mean();
        for i in 0..d {
            dyv[i * m + k] = col[i];
        }
    }
    let dyvy: Vec<f64> = (0..m * m).map(|q| dyv[(r + q / m) * m + q % m]).collect();
    let det = det_small(&dyvy, m);
    if det.abs() < cfg.nondegeneracy_floor {
        return Err(Error::NonDegeneracyFail { quantity: det });
    }
    // Slices of D_y V^0 for the average corrections, sampled on T^r.
    let dyv_samples: Vec<Vec<Vec<f64>>> = (0..m).map(|k| fields[0].derivative(r + k).restrict_trailing(y0).sample(n)).collect();

    let zero_l = TrigSeries::zeros(r, d, band);
    let mut ls: Vec<TrigSeries> = vec![zero_l.clone()]; // l_0 periodic part is (0, y0); kept separately
    let mut us: Vec<Vec<f64>> = vec![omega.clone()];
    let mut log = Vec::new();
    let mut u_residual = 0.0f64;
    let ctx = Context { fields: &fields, y0, omega: &omega, r, d, n };
    // The pass at `order + 1` only fixes `<l_N^y>`, which keeps the
    // truncated embedding within `eps^{N+1}` of the true circle.
    for j in 1..=order + 1 {
        let e = ctx.order_defect(&ls, &us, j);
        let mut e_samples = e.samples(j);
        // Fix <l_{j-1}^y> so that the y-average vanishes (order 1 is fixed by y0).
        let mut c = vec![0.0; m];
        if j >= 2 {
            let mean_y: Vec<f64> = (0..m).map(|k| mean(&e_samples[r + k])).collect();
            let rhs: Vec<f64> = mean_y.iter().map(|v| -v).collect();
            c = solve_dense(&dyvy, &rhs, m).ok_or(Error::NonDegeneracyFail { quantity: det })?;
            for (k, &ck) in c.iter().enumerate() {
                for i in 0..d {
                    for (p, v) in e_samples[i].iter_mut().enumerate() {
                        *v += dyv_samples[k][i][p] * ck;
                    }
                }
            }
            let prev = &mut ls[j - 1];
            for (k, &ck) in c.iter().enumerate() {
                let z = vec![0i64; r];
                let old = prev.get(&z, r + k);
                prev.set(&z, r + k, old + ck);
            }
            log.push(AverageChoice { order: j - 1, value: c.clone(), fixed_at: j });
        }
        if j > order {
            break;
        }
        let u_j: Vec<f64> = (0..r).map(|i| mean(&e_samples[i])).collect();
        let u_j = match map.kind {
            MapKind::Foliation => {
                u_residual = u_residual.max(u_j.iter().map(|v| v.abs()).fold(0.0, f64::max));
                vec![0.0; r]
            }
            MapKind::Generic => u_j,
        };
        for i in 0..r {
            for v in e_samples[i].iter_mut() {
                *v -= u_j[i];
            }
        }
        let (rhs, _) = TrigSeries::from_samples(r, n, band, &e_samples)?;
        // l_j(s + omega) - l_j(s) = rhs, i.e. W - W o T = -rhs.
        let mut rhs = rhs;
        for i in 0..d {
            rhs.set(&vec![0i64; r], i, num_complex::Complex64::new(0.0, 0.0));
        }
        let sol = cohomology_solve(&rhs.scale(-1.0), &omega, Resonant::OnlyMean, cfg.divisor_floor)?;
        ls.push(sol.w);
        us.push(u_j);
    }
    let l_x = ls.iter().map(|l| l.mix_components(&unit_rows(0..r, d))).collect();
    let mut l_y: Vec<TrigSeries> = ls.iter().map(|l| l.mix_components(&unit_rows(r..d, d))).collect();
    l_y[0] = TrigSeries::constant(r, m, y0).with_band(band).0;
    Ok(LindstedtSeries {
        kind: map.kind,
        order,
        y0: y0.to_vec(),
        omega,
        l_x,
        l_y,
        u_consts: us,
        averages_log: log,
        u_residual,
        reduced: red,
        band,
        grid: n,
    })
}

fn unit_rows(range: core::ops::Range<usize>, d: usize) -> Vec<Vec<f64>> {
    range.map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn det_small(a: &[f64], m: usize) -> f64 {
    nalgebra::DMatrix::from_row_slice(m, m, a).determinant()
}

struct Context<'a> {
    fields: &'a [TrigSeries],
    y0: &'a [f64],
    omega: &'a [f64],
    r: usize,
    d: usize,
    n: usize,
}

impl Context<'_> {
    /// Jet of `F o l - l o u` (without the integer part of the rotation)
    /// with the order-`j` unknowns set to zero.
    fn order_defect(&self, ls: &[TrigSeries], us: &[Vec<f64>], j: usize) -> Jet {
        let (r, d, n) = (self.r, self.d, self.n);
        let pts = n.pow(r as u32);
        let mut higher: Vec<TrigSeries> = ls[1..].to_vec();
        if higher.is_empty() {
            higher.push(TrigSeries::zeros(r, d, 0));
        }
        let disp = series_jet(&higher, 1, j, n);
        // l(sigma) part: sum_k eps^k l_k(sigma).
        let mut acc = Jet::zeros(j, d, pts);
        acc.add_assign(&disp);
        // eps V_eps(l(sigma)).
        for (i, v) in self.fields.iter().enumerate() {
            if i + 1 > j {
                break;
            }
            let slice = v.restrict_trailing(self.y0);
            let t = taylor_compose_by(slice.sample(n), d, &disp, |beta| v.partial(beta).restrict_trailing(self.y0).sample(n));
            add_shifted(&mut acc, &t, i + 1);
        }
        // - l(u(sigma)) with u = sigma + omega + delta.
        let mut delta = Jet::zeros(j, r, pts);
        for (k, u) in us.iter().enumerate().skip(1) {
            if k > j {
                break;
            }
            for (c, &uc) in u.iter().enumerate() {
                delta.get_mut(k, c).iter_mut().for_each(|v| *v = uc);
            }
        }
        for c in 0..r {
            for o in 1..=j {
                let dv = delta.get(o, c).to_vec();
                for (a, b) in acc.get_mut(o, c).iter_mut().zip(dv) {
                    *a -= b;
                }
            }
        }
        let dirs: Vec<Vec<f64>> = (0..r).map(|i| (0..r).map(|k| (i == k) as u8 as f64).collect()).collect();
        for (k, l) in ls.iter().enumerate().skip(1) {
            if k > j {
                break;
            }
            let t = taylor_compose(l, Some(self.omega), &dirs, &delta, n);
            let mut shifted = Jet::zeros(j, d, pts);
            add_shifted(&mut shifted, &t, k);
            acc.sub_assign(&shifted);
        }
        acc
    }
}

fn add_shifted(acc: &mut Jet, t: &Jet, by: usize) {
    for o in by..=acc.order() {
        for c in 0..acc.comps() {
            let src = t.get(o - by, c).to_vec();
            for (a, b) in acc.get_mut(o, c).iter_mut().zip(src) {
                *a += b;
            }
        }
    }
}

impl LindstedtSeries {
    pub fn r(&self) -> usize {
        self.omega.len()
    }

    pub fn dim(&self) -> usize {
        self.r() + self.y0.len()
    }

    /// `l^{<=N}(sigma)` on the lift.
    pub fn embed(&self, sigma: &[f64], eps: f64) -> Vec<f64> {
        let r = self.r();
        let m = self.y0.len();
        let mut z: Vec<f64> = sigma.to_vec();
        z.extend_from_slice(&self.y0);
        let mut p = 1.0;
        let mut bx = vec![0.0; r];
        let mut by = vec![0.0; m];
        for j in 1..=self.order {
            p *= eps;
            self.l_x[j].eval_into(sigma, &mut bx);
            self.l_y[j].eval_into(sigma, &mut by);
            for i in 0..r {
                z[i] += p * bx[i];
            }
            for i in 0..m {
                z[r + i] += p * by[i];
            }
        }
        z
    }

    /// `u^{<=N}(sigma)`.
    pub fn base_map(&self, sigma: &[f64], eps: f64) -> Vec<f64> {
        let mut out: Vec<f64> = sigma.iter().zip(&self.omega).map(|(s, w)| s + w).collect();
        let mut p = 1.0;
        for u in &self.u_consts[1..] {
            p *= eps;
            for (o, v) in out.iter_mut().zip(u) {
                *o += p * v;
            }
        }
        out
    }

    /// Grid samples of `F o l - l o u`, reduced mod 1 componentwise.
    pub fn residual(&self, eps: f64, n: usize) -> Vec<Vec<f64>> {
        let f = self.reduced.with_params(self.reduced.alpha, eps).evaluator();
        let d = self.dim();
        let grid = Grid::new(self.r(), n);
        let mut fz = vec![0.0; d];
        grid.points()
            .map(|s| {
                f.apply(&self.embed(&s, eps), &mut fz);
                let rhs = self.embed(&self.base_map(&s, eps), eps);
                (0..d).map(|i| wrap(fz[i] - rhs[i])).collect()
            })
            .collect()
    }
}

/// Grid sup of `F_eps o l^{<=N} - l^{<=N} o u^{<=N}`.
pub fn defect(series: &LindstedtSeries, eps: f64) -> f64 {
    series
        .residual(eps, series.grid)
        .iter()
        .flat_map(|v| v.iter())
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{locate_eta_zero, Branch};
    use crate::dynamics::{example_forcing, example_map};
    use crate::frequency::{analyze, golden, DetectOptions};
    use core::f64::consts::PI;
    use num_complex::Complex64;

    fn cfg() -> LindstedtConfig {
        LindstedtConfig { band: 16, ..Default::default() }
    }

    fn example(order: usize) -> (LindstedtSeries, f64) {
        let map = example_map(0.3, 0.1, 0.5, 1.0, 0.0);
        let res = analyze(&map.omega, DetectOptions::default()).unwrap();
        let mut eta = TrigSeries::constant(1, 1, &[0.3]);
        eta.set_pair(&[1], 0, Complex64::new(0.0, -0.25));
        let y = locate_eta_zero(&eta, Branch::PositiveSlope).unwrap().y_star;
        (lindstedt_expand(&map, &res, &[y], order, &cfg()).unwrap(), y)
    }

    #[test]
    fn first_order_matches_cohomology() {
        let (s, _) = example(1);
        let w = golden();
        let e = Complex64::new(0.0, 2.0 * PI * w).exp();
        let expect = Complex64::new(0.0, -0.05) / (e - 1.0);
        assert!((s.l_y[1].get(&[1], 0) - expect).norm() < 1e-13);
        assert!((s.l_y[1].get(&[-1], 0) - expect.conj()).norm() < 1e-13);
        // l_1^y(s + w) - l_1^y(s) = d1 sin(2 pi s)
        let drift = s.l_y[1].shift(&[w]).sub(&s.l_y[1]);
        let mut sine = TrigSeries::zeros(1, 1, 16);
        sine.set_pair(&[1], 0, Complex64::new(0.0, -0.05));
        assert!(drift.sub(&sine).max_abs_coeff() < 1e-13);
        // The x-component carries omega times the same forcing.
        let (x_osc, _) = s.l_x[1].split_resonant(1);
        let (y_osc, _) = s.l_y[1].split_resonant(1);
        assert!(x_osc.sub(&y_osc.scale(w)).max_abs_coeff() < 1e-13);
    }

    #[test]
    fn flat_forcing_gives_trivial_series() {
        let map = example_map(0.0, 0.0, 0.5, 1.0, 0.0);
        let res = analyze(&map.omega, DetectOptions::default()).unwrap();
        let s = lindstedt_expand(&map, &res, &[0.0], 4, &cfg()).unwrap();
        for j in 1..=4 {
            assert!(s.l_x[j].max_abs_coeff() < 1e-15 && s.l_y[j].max_abs_coeff() < 1e-15);
        }
    }

    #[test]
    fn foliation_defect_order() {
        for order in 1..=3 {
            let (s, _) = example(order);
            assert!(s.u_residual < 1e-10, "u residual {}", s.u_residual);
            assert_eq!(defect(&s, 0.0), 0.0);
            for eps in [0.04, 0.02] {
                let ratio = defect(&s, eps) / defect(&s, eps / 2.0);
                let k = ratio.log2();
                assert!((k - (order + 1) as f64).abs() < 0.4, "order {order}, eps {eps}, log2 ratio {k}");
            }
        }
    }

    #[test]
    fn wrong_base_point_or_degenerate() {
        let map = example_map(0.3, 0.1, 0.5, 1.0, 0.0);
        let res = analyze(&map.omega, DetectOptions::default()).unwrap();
        assert!(matches!(lindstedt_expand(&map, &res, &[0.1], 2, &cfg()), Err(Error::SolvabilityFail { .. })));
        let flat = example_map(0.0, 0.1, 0.0, 1.0, 0.0);
        assert!(matches!(lindstedt_expand(&flat, &res, &[0.3], 2, &cfg()), Err(Error::NonDegeneracyFail { .. })));
    }

    #[test]
    fn generic_toy_has_constant_drift() {
        let c = 0.2;
        let mut g = TrigSeries::constant(2, 1, &[c]);
        g.set_pair(&[1, 0], 0, Complex64::new(0.5, 0.0));
        let h = example_forcing(0.3, 0.1, 0.5);
        let map = MapFamily::new(MapKind::Generic, vec![golden(), 1.0], 1.0, 0.0, vec![TrigSeries::stack(&[g, h]).unwrap()]).unwrap();
        let res = analyze(&map.omega, DetectOptions::default()).unwrap();
        let y = 1.0 + (-0.6f64).asin() / (2.0 * PI);
        let s = lindstedt_expand(&map, &res, &[y], 3, &cfg()).unwrap();
        assert!((s.u_consts[1][0] - c).abs() < 1e-13);
        let ratio = defect(&s, 0.02) / defect(&s, 0.01);
        assert!((ratio.log2() - 4.0).abs() < 0.4, "log2 ratio {}", ratio.log2());
    }

    #[test]
    fn generic_path_on_foliation_map_finds_no_drift() {
        let (s, y) = example(3);
        let g = example_forcing(0.3, 0.1, 0.5);
        let g = TrigSeries::stack(&[g.scale(golden()), g]).unwrap();
        let map = MapFamily::new(MapKind::Generic, vec![golden(), 1.0], 1.0, 0.0, vec![g]).unwrap();
        let res = analyze(&map.omega, DetectOptions::default()).unwrap();
        let generic = lindstedt_expand(&map, &res, &[y], 3, &cfg()).unwrap();
        for u in &generic.u_consts[1..] {
            assert!(u[0].abs() <= 1e-10, "u = {u:?}");
        }
        for j in 1..=3 {
            assert!(generic.l_y[j].sub(&s.l_y[j]).max_abs_coeff() < 1e-10);
        }
    }

    #[test]
    fn averages_are_sensitive_at_their_order() {
        let (s, _) = example(3);
        for choice in &s.averages_log {
            let j = choice.order;
            let mut bumped = s.clone();
            let old = bumped.l_y[j].get(&[0], 0);
            bumped.l_y[j].set(&[0], 0, old + 1e-6);
            let diff = |eps: f64| {
                let a = s.residual(eps, 64);
                let b = bumped.residual(eps, 64);
                a.iter().zip(&b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
            };
            let k = (diff(0.04) / diff(0.02)).log2();
            assert!((k - (j + 1) as f64).abs() < 0.4, "average {j}: log2 ratio {k}");
        }
    }
}
