//! Band-limited trigonometric series on `T^d` and their collocation
//! transforms.

mod cohomology;
pub mod fft;
mod norms;
mod repr;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};

pub use cohomology::{cohomology_solve, CohomologySolution, Resonant};
pub use norms::{norms, NormReport};
pub(crate) use norms::multi_indices as multi_indices_of;
pub use repr::{ModeRepr, SeriesRepr};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Finitely supported real Fourier series `T^d -> R^s`.
///
/// Coefficients are stored densely for every `k` with `|k|_inf <= band`,
/// mode-major (last axis fastest), component-minor. Reality means
/// `c(-k) = conj c(k)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct TrigSeries {
    dim: usize,
    value_dim: usize,
    band: usize,
    coeffs: Vec<Complex64>,
}

/// Uniform grid `{i / n}^d` on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Self {
        Grid { dim, n }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point_into(&self, mut idx: usize, out: &mut [f64]) {
        for j in (0..self.dim).rev() {
            out[j] = (idx % self.n) as f64 / self.n as f64;
            idx /= self.n;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.point_into(idx, &mut p);
        p
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Default collocation grid for a working band: `max(4K, 8)`.
pub fn oversampled_grid(band: usize) -> usize {
    (4 * band).max(8)
}

/// Per-dimension phase tables `e^{2 pi i k x_j}` for `k` in `-K..=K`.
fn phase_tables(x: &[f64], band: usize) -> Vec<Complex64> {
    let side = 2 * band + 1;
    let mut ph = vec![ZERO; x.len() * side];
    for (j, &xj) in x.iter().enumerate() {
        let row = &mut ph[j * side..(j + 1) * side];
        row[band] = Complex64::new(1.0, 0.0);
        for k in 1..=band {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * xj);
            row[band + k] = e;
            row[band - k] = e.conj();
        }
    }
    ph
}

impl TrigSeries {
    pub fn zeros(dim: usize, value_dim: usize, band: usize) -> Self {
        let n = (2 * band + 1).pow(dim as u32) * value_dim;
        TrigSeries { dim, value_dim, band, coeffs: vec![ZERO; n] }
    }

    pub fn constant(dim: usize, band: usize, values: &[f64]) -> Self {
        let mut s = Self::zeros(dim, values.len(), band);
        let zero = vec![0i64; dim];
        for (c, &v) in values.iter().enumerate() {
            s.set(&zero, c, Complex64::new(v, 0.0));
        }
        s
    }

    /// Build from raw mode-major coefficients; checks reality.
    pub fn from_coeffs(dim: usize, value_dim: usize, band: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != (2 * band + 1).pow(dim as u32) * value_dim {
            return Err(invalid!("coefficient count does not match shape"));
        }
        let s = TrigSeries { dim, value_dim, band, coeffs };
        s.check_reality(1e-12)?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn side(&self) -> usize {
        2 * self.band + 1
    }

    pub fn n_modes(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let side = self.side() as i64;
        let b = self.band as i64;
        let mut idx = 0i64;
        for &kj in k {
            if kj.abs() > b {
                return None;
            }
            idx = idx * side + kj + b;
        }
        Some(idx as usize)
    }

    pub fn mode_into(&self, mut idx: usize, out: &mut [i64]) {
        let side = self.side();
        for j in (0..self.dim).rev() {
            out[j] = (idx % side) as i64 - self.band as i64;
            idx /= side;
        }
    }

    pub fn mode(&self, idx: usize) -> Vec<i64> {
        let mut k = vec![0; self.dim];
        self.mode_into(idx, &mut k);
        k
    }

    /// Coefficient of component `c` at mode `k` (zero outside the band).
    pub fn get(&self, k: &[i64], c: usize) -> Complex64 {
        self.index_of(k).map_or(ZERO, |i| self.coeffs[i * self.value_dim + c])
    }

    /// Raw write of one coefficient; the caller maintains reality.
    pub fn set(&mut self, k: &[i64], c: usize, v: Complex64) {
        let i = self.index_of(k).expect("mode inside band");
        self.coeffs[i * self.value_dim + c] = v;
    }

    /// Write `c(k) = v` and `c(-k) = conj v`.
    pub fn set_pair(&mut self, k: &[i64], c: usize, v: Complex64) {
        let neg: Vec<i64> = k.iter().map(|x| -x).collect();
        if neg == k {
            self.set(k, c, Complex64::new(v.re, 0.0));
        } else {
            self.set(k, c, v);
            self.set(&neg, c, v.conj());
        }
    }

    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[i64])) {
        let mut k = vec![-(self.band as i64); self.dim];
        let b = self.band as i64;
        for idx in 0..self.n_modes() {
            f(idx, &k);
            for j in (0..self.dim).rev() {
                if k[j] < b {
                    k[j] += 1;
                    break;
                }
                k[j] = -b;
            }
        }
    }

    /// Scalar component `c` as its own series.
    pub fn component(&self, c: usize) -> TrigSeries {
        let coeffs = self.coeffs.iter().skip(c).step_by(self.value_dim).copied().collect();
        TrigSeries { dim: self.dim, value_dim: 1, band: self.band, coeffs }
    }

    /// Stack series of equal dimension into one vector-valued series.
    pub fn stack(parts: &[TrigSeries]) -> Result<TrigSeries> {
        let first = parts.first().ok_or_else(|| invalid!("cannot stack zero series"))?;
        let dim = first.dim;
        let band = parts.iter().map(|p| p.band).max().unwrap_or(0);
        let value_dim: usize = parts.iter().map(|p| p.value_dim).sum();
        if parts.iter().any(|p| p.dim != dim) {
            return Err(invalid!("stacked series must share the torus dimension"));
        }
        let mut out = TrigSeries::zeros(dim, value_dim, band);
        let mut offset = 0;
        for p in parts {
            let p = p.with_band(band).0;
            for m in 0..out.n_modes() {
                for c in 0..p.value_dim {
                    out.coeffs[m * value_dim + offset + c] = p.coeffs[m * p.value_dim + c];
                }
            }
            offset += p.value_dim;
        }
        Ok(out)
    }

    /// Copy into band `band`, returning the dropped l1 tail mass.
    pub fn with_band(&self, band: usize) -> (TrigSeries, f64) {
        if band == self.band {
            return (self.clone(), 0.0);
        }
        let mut out = TrigSeries::zeros(self.dim, self.value_dim, band);
        let mut tail = 0.0;
        self.for_each_mode(|idx, k| {
            let src = &self.coeffs[idx * self.value_dim..(idx + 1) * self.value_dim];
            match out.index_of(k) {
                Some(j) => out.coeffs[j * self.value_dim..(j + 1) * self.value_dim].copy_from_slice(src),
                None => tail += src.iter().map(|c| c.norm()).fold(0.0, f64::max),
            }
        });
        (out, tail)
    }

    /// Smallest band holding every coefficient above `rel * max|c|`.
    pub fn trimmed(&self, rel: f64) -> TrigSeries {
        let floor = rel * self.max_abs_coeff();
        let mut keep = 0i64;
        self.for_each_mode(|idx, k| {
            let big = self.coeffs[idx * self.value_dim..(idx + 1) * self.value_dim]
                .iter()
                .any(|c| c.norm() > floor);
            if big {
                keep = keep.max(k.iter().map(|x| x.abs()).max().unwrap_or(0));
            }
        });
        self.with_band(keep as usize).0
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `sum_k max_c |c(k)|`, an upper bound for the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs
            .chunks(self.value_dim)
            .map(|m| m.iter().map(|c| c.norm()).fold(0.0, f64::max))
            .sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let zero = vec![0i64; self.dim];
        (0..self.value_dim).map(|c| self.get(&zero, c).re).collect()
    }

    pub fn reality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut neg = vec![0i64; self.dim];
        self.for_each_mode(|idx, k| {
            for (n, &x) in neg.iter_mut().zip(k) {
                *n = -x;
            }
            let j = self.index_of(&neg).unwrap();
            for c in 0..self.value_dim {
                let d = self.coeffs[idx * self.value_dim + c] - self.coeffs[j * self.value_dim + c].conj();
                worst = worst.max(d.norm());
            }
        });
        worst
    }

    pub fn check_reality(&self, rel: f64) -> Result<()> {
        let res = self.reality_residual();
        if res > rel * self.max_abs_coeff().max(1e-300) && res > 0.0 {
            Err(Error::RealityViolation { residual: res })
        } else {
            Ok(())
        }
    }

    /// Project onto real series: `c(k) <- (c(k) + conj c(-k)) / 2`.
    pub fn enforce_reality(&mut self) {
        let src = self.clone();
        let mut neg = vec![0i64; self.dim];
        src.for_each_mode(|idx, k| {
            for (n, &x) in neg.iter_mut().zip(k) {
                *n = -x;
            }
            let j = src.index_of(&neg).unwrap();
            for c in 0..src.value_dim {
                let a = src.coeffs[idx * src.value_dim + c];
                let b = src.coeffs[j * src.value_dim + c].conj();
                self.coeffs[idx * src.value_dim + c] = (a + b) * 0.5;
            }
        });
    }

    fn binary(&self, other: &TrigSeries, f: impl Fn(Complex64, Complex64) -> Complex64) -> TrigSeries {
        assert_eq!(self.dim, other.dim, "torus dimension mismatch");
        assert_eq!(self.value_dim, other.value_dim, "value dimension mismatch");
        let band = self.band.max(other.band);
        let a = self.with_band(band).0;
        let b = other.with_band(band).0;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| f(x, y)).collect();
        TrigSeries { dim: self.dim, value_dim: self.value_dim, band, coeffs }
    }

    pub fn add(&self, other: &TrigSeries) -> TrigSeries {
        self.binary(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &TrigSeries) -> TrigSeries {
        self.binary(other, |x, y| x - y)
    }

    pub fn scale(&self, a: f64) -> TrigSeries {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &TrigSeries) -> TrigSeries {
        self.binary(other, |x, y| x + y * a)
    }

    /// Add a constant vector.
    pub fn add_constant(&self, values: &[f64]) -> TrigSeries {
        let mut out = self.clone();
        let i = out.index_of(&vec![0; self.dim]).unwrap();
        for (c, v) in values.iter().enumerate() {
            out.coeffs[i * self.value_dim + c] += v;
        }
        out
    }

    /// Multiply each mode by `g(k)` (a Fourier multiplier).
    pub fn multiplier(&self, g: impl Fn(&[i64]) -> Complex64) -> TrigSeries {
        let mut out = self.clone();
        let s = self.value_dim;
        self.for_each_mode(|idx, k| {
            let m = g(k);
            out.coeffs[idx * s..(idx + 1) * s].iter_mut().for_each(|c| *c *= m);
        });
        out
    }

    /// Partial derivative along axis `j`.
    pub fn derivative(&self, j: usize) -> TrigSeries {
        self.multiplier(|k| Complex64::new(0.0, 2.0 * PI * k[j] as f64))
    }

    /// Mixed partial `D^beta`.
    pub fn partial(&self, beta: &[usize]) -> TrigSeries {
        self.multiplier(|k| {
            let mut m = Complex64::new(1.0, 0.0);
            for (j, &b) in beta.iter().enumerate() {
                m *= Complex64::new(0.0, 2.0 * PI * k[j] as f64).powi(b as i32);
            }
            m
        })
    }

    /// Directional derivative `sum_j v_j d_j`.
    pub fn directional(&self, v: &[f64]) -> TrigSeries {
        self.multiplier(|k| {
            let kv: f64 = k.iter().zip(v).map(|(&a, &b)| a as f64 * b).sum();
            Complex64::new(0.0, 2.0 * PI * kv)
        })
    }

    /// `x -> w(x + a)`.
    pub fn shift(&self, a: &[f64]) -> TrigSeries {
        self.multiplier(|k| {
            let ka: f64 = k.iter().zip(a).map(|(&x, &y)| x as f64 * y).sum();
            Complex64::from_polar(1.0, 2.0 * PI * ka)
        })
    }

    /// `x -> w(M x)` for an integer matrix `M`.
    pub fn compose_linear(&self, m: &[Vec<i64>]) -> TrigSeries {
        let d = self.dim;
        let mt = crate::lattice::transpose(m);
        let floor = 1e-15 * self.max_abs_coeff();
        let mut band = 0i64;
        self.for_each_mode(|idx, k| {
            if self.coeffs[idx * self.value_dim..(idx + 1) * self.value_dim].iter().any(|c| c.norm() > floor) {
                let img = crate::lattice::mat_vec(&mt, k);
                band = band.max(img.iter().map(|x| x.abs()).max().unwrap_or(0));
            }
        });
        let mut out = TrigSeries::zeros(d, self.value_dim, band as usize);
        self.for_each_mode(|idx, k| {
            let src = &self.coeffs[idx * self.value_dim..(idx + 1) * self.value_dim];
            if src.iter().all(|c| c.norm() <= floor) {
                return;
            }
            let img = crate::lattice::mat_vec(&mt, k);
            let j = out.index_of(&img).unwrap();
            out.coeffs[j * self.value_dim..(j + 1) * self.value_dim].copy_from_slice(src);
        });
        out
    }

    /// Restrict the trailing `d - r` coordinates to `y`, giving a series on `T^r`.
    pub fn restrict_trailing(&self, y: &[f64]) -> TrigSeries {
        let r = self.dim - y.len();
        let ph = phase_tables(y, self.band);
        let side = self.side();
        let mut out = TrigSeries::zeros(r, self.value_dim, self.band);
        let s = self.value_dim;
        self.for_each_mode(|idx, k| {
            let mut p = Complex64::new(1.0, 0.0);
            for (j, &kj) in k[r..].iter().enumerate() {
                p *= ph[j * side + (kj + self.band as i64) as usize];
            }
            let dst = out.index_of(&k[..r]).unwrap();
            for c in 0..s {
                out.coeffs[dst * s + c] += self.coeffs[idx * s + c] * p;
            }
        });
        out
    }

    /// Embed a series on `T^m` as a function of coordinates
    /// `offset..offset + m` of `T^dim`.
    pub fn lift(&self, dim: usize, offset: usize) -> TrigSeries {
        let mut out = TrigSeries::zeros(dim, self.value_dim, self.band);
        let s = self.value_dim;
        let mut big = vec![0i64; dim];
        self.for_each_mode(|idx, k| {
            big.iter_mut().for_each(|x| *x = 0);
            big[offset..offset + self.dim].copy_from_slice(k);
            let j = out.index_of(&big).unwrap();
            out.coeffs[j * s..(j + 1) * s].copy_from_slice(&self.coeffs[idx * s..(idx + 1) * s]);
        });
        out
    }

    /// Values multiplied by a real matrix: component `i` of the result is
    /// `sum_j m[i][j] w_j`.
    pub fn mix_components(&self, m: &[Vec<f64>]) -> TrigSeries {
        let s = self.value_dim;
        let rows = m.len();
        let mut out = TrigSeries::zeros(self.dim, rows, self.band);
        for idx in 0..self.n_modes() {
            for (i, row) in m.iter().enumerate() {
                let mut acc = ZERO;
                for j in 0..s {
                    acc += self.coeffs[idx * s + j] * row[j];
                }
                out.coeffs[idx * rows + i] = acc;
            }
        }
        out
    }

    /// Modes `(0, l)` as a series in `l` on `T^{d - r}`.
    pub fn leading_zero_slice(&self, r: usize) -> TrigSeries {
        let mut out = TrigSeries::zeros(self.dim - r, self.value_dim, self.band);
        let s = self.value_dim;
        let mut full = vec![0i64; self.dim];
        out.clone().for_each_mode(|idx, l| {
            full[r..].copy_from_slice(l);
            let src = self.index_of(&full).unwrap();
            out.coeffs[idx * s..(idx + 1) * s].copy_from_slice(&self.coeffs[src * s..(src + 1) * s]);
        });
        out
    }

    /// Split into (modes with some nonzero component among the first `r`,
    /// modes whose first `r` components vanish).
    pub fn split_resonant(&self, r: usize) -> (TrigSeries, TrigSeries) {
        let mut non = self.clone();
        let mut res = self.clone();
        let s = self.value_dim;
        self.for_each_mode(|idx, k| {
            let resonant = k[..r].iter().all(|&x| x == 0);
            let target = if resonant { &mut non } else { &mut res };
            target.coeffs[idx * s..(idx + 1) * s].iter_mut().for_each(|c| *c = ZERO);
        });
        (non, res)
    }

    /// Complex values at `x`, written into `out` (length `value_dim`).
    pub fn eval_complex(&self, x: &[f64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        out.iter_mut().for_each(|o| *o = ZERO);
        let ph = phase_tables(x, self.band);
        let side = self.side();
        let s = self.value_dim;
        if self.dim == 0 {
            out.copy_from_slice(&self.coeffs[..s]);
            return;
        }
        let mut prefix = vec![Complex64::new(1.0, 0.0); self.dim + 1];
        let mut digits = vec![0usize; self.dim];
        for j in 0..self.dim {
            prefix[j + 1] = prefix[j] * ph[j * side];
        }
        let last = self.dim - 1;
        for idx in 0..self.n_modes() {
            let p = prefix[self.dim];
            let src = &self.coeffs[idx * s..(idx + 1) * s];
            for c in 0..s {
                out[c] += src[c] * p;
            }
            // Advance the odometer and refresh the affected prefix products.
            let mut j = last;
            loop {
                digits[j] += 1;
                if digits[j] < side || j == 0 {
                    break;
                }
                digits[j] = 0;
                j -= 1;
            }
            if digits[0] == side {
                break;
            }
            for i in j..self.dim {
                prefix[i + 1] = prefix[i] * ph[i * side + digits[i]];
            }
        }
    }

    /// Real values at `x` without a reality check.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![ZERO; self.value_dim];
        self.eval_complex(x, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o = t.re;
        }
    }

    /// Real values at `x`; fails if the imaginary residual exceeds
    /// `1e-10` times the coefficient norm.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("evaluation point must be a finite {}-vector", self.dim));
        }
        let mut tmp = vec![ZERO; self.value_dim];
        self.eval_complex(x, &mut tmp);
        let bound = 1e-10 * self.l1_norm();
        let worst = tmp.iter().map(|t| t.im.abs()).fold(0.0, f64::max);
        if worst > bound && worst > 1e-300 {
            return Err(Error::RealityViolation { residual: worst });
        }
        Ok(tmp.iter().map(|t| t.re).collect())
    }

    /// Scalar convenience for `value_dim == 1`.
    pub fn eval1(&self, x: &[f64]) -> f64 {
        let mut out = [0.0];
        self.eval_into(x, &mut out);
        out[0]
    }

    /// Values on the `n^d` grid, component-major: `out[c][point]`.
    pub fn sample(&self, n: usize) -> Vec<Vec<f64>> {
        let grid = Grid::new(self.dim, n);
        let s = self.value_dim;
        let mut out = Vec::with_capacity(s);
        let mut buf = vec![ZERO; grid.len()];
        for c in 0..s {
            buf.iter_mut().for_each(|b| *b = ZERO);
            self.for_each_mode(|idx, k| {
                let mut pos = 0usize;
                for &kj in k {
                    pos = pos * n + kj.rem_euclid(n as i64) as usize;
                }
                buf[pos] += self.coeffs[idx * s + c];
            });
            fft::fft_nd(&mut buf, self.dim, n, true);
            out.push(buf.iter().map(|b| b.re).collect());
        }
        out
    }

    /// Forward transform of grid samples, truncated to `band`.
    ///
    /// Returns the series and the dropped tail mass (largest over
    /// components of the l1 norm of discarded bins).
    pub fn from_samples(dim: usize, n: usize, band: usize, samples: &[Vec<f64>]) -> Result<(TrigSeries, f64)> {
        if 2 * band + 1 > n {
            return Err(invalid!("grid of size {n} cannot resolve band {band}"));
        }
        let grid = Grid::new(dim, n);
        let s = samples.len();
        let mut out = TrigSeries::zeros(dim, s, band);
        let mut tail = 0.0f64;
        let norm = 1.0 / grid.len() as f64;
        let mut buf = vec![ZERO; grid.len()];
        let mut kept = vec![false; grid.len()];
        for (c, comp) in samples.iter().enumerate() {
            if comp.len() != grid.len() {
                return Err(invalid!("sample count does not match grid"));
            }
            for (b, &v) in buf.iter_mut().zip(comp) {
                *b = Complex64::new(v, 0.0);
            }
            fft::fft_nd(&mut buf, dim, n, false);
            kept.iter_mut().for_each(|k| *k = false);
            let side = 2 * band + 1;
            let coeffs = &mut out.coeffs;
            let mut k = vec![0i64; dim];
            for idx in 0..side.pow(dim as u32) {
                let mut rem = idx;
                for j in (0..dim).rev() {
                    k[j] = (rem % side) as i64 - band as i64;
                    rem /= side;
                }
                let mut pos = 0usize;
                for &kj in &k {
                    pos = pos * n + kj.rem_euclid(n as i64) as usize;
                }
                coeffs[idx * s + c] = buf[pos] * norm;
                kept[pos] = true;
            }
            let t: f64 = buf.iter().zip(&kept).filter(|(_, &k)| !k).map(|(b, _)| b.norm() * norm).sum();
            tail = tail.max(t);
        }
        out.enforce_reality();
        Ok((out, tail))
    }

    /// Collocation: sample `f` on the `n^d` grid and transform.
    pub fn from_fn(
        dim: usize,
        value_dim: usize,
        band: usize,
        n: usize,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<(TrigSeries, f64)> {
        let grid = Grid::new(dim, n);
        let mut samples = vec![vec![0.0; grid.len()]; value_dim];
        let mut x = vec![0.0; dim];
        let mut v = vec![0.0; value_dim];
        for p in 0..grid.len() {
            grid.point_into(p, &mut x);
            f(&x, &mut v);
            for c in 0..value_dim {
                samples[c][p] = v[c];
            }
        }
        Self::from_samples(dim, n, band, &samples)
    }

    /// Largest absolute value on the `n^d` grid.
    pub fn grid_sup(&self, n: usize) -> f64 {
        self.sample(n)
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Largest value of `|a - b|` over two equally shaped sample sets.
pub fn sample_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Signed distance of `x` to the nearest integer, in `[-1/2, 1/2)`.
pub fn wrap(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

/// Torus distance in the l-infinity norm.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| wrap(x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g25(a: f64, d1: f64, d2: f64) -> TrigSeries {
        let mut g = TrigSeries::constant(2, 1, &[a]);
        g.set_pair(&[1, 0], 0, Complex64::new(0.0, -d1 / 2.0));
        g.set_pair(&[0, 1], 0, Complex64::new(0.0, -d2 / 2.0));
        g
    }

    #[test]
    fn evaluation_examples() {
        let z = TrigSeries::zeros(2, 1, 3);
        assert_eq!(z.eval(&[0.3, 0.7]).unwrap(), vec![0.0]);
        let mut c = TrigSeries::zeros(2, 1, 1);
        c.set_pair(&[1, 0], 0, Complex64::new(0.5, 0.0));
        assert!((c.eval(&[0.0, 0.0]).unwrap()[0] - 1.0).abs() < 1e-15);
        let g = g25(0.3, 0.1, 0.5);
        assert!((g.eval(&[0.25, 0.0]).unwrap()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn non_real_series_rejected() {
        let mut s = TrigSeries::zeros(1, 1, 1);
        s.set(&[1], 0, Complex64::new(1.0, 0.0));
        assert!(matches!(s.eval(&[0.1]), Err(Error::RealityViolation { .. })));
    }

    #[test]
    fn grid_round_trip_band_one() {
        let g = g25(0.3, 0.1, 0.5);
        let samples = g.sample(16);
        let (back, tail) = TrigSeries::from_samples(2, 16, 1, &samples).unwrap();
        assert!(tail < 1e-14);
        for (a, b) in back.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn product_double_angle() {
        let (p, _) = TrigSeries::from_fn(1, 1, 3, 8, |x, out| {
            let c = (2.0 * PI * x[0]).cos();
            out[0] = c * c;
        })
        .unwrap();
        assert!((p.get(&[0], 0).re - 0.5).abs() < 1e-15);
        assert!((p.get(&[2], 0).re - 0.25).abs() < 1e-15);
        assert!((p.get(&[-2], 0).re - 0.25).abs() < 1e-15);
        assert!(p.get(&[1], 0).norm() < 1e-15);
    }

    #[test]
    fn composition_refinement() {
        let g = g25(0.3, 0.1, 0.5);
        let comp = |n: usize| {
            TrigSeries::from_fn(2, 1, 16, n, |x, out| {
                let xs = [x[0] + 0.3 + 0.01 * (2.0 * PI * x[0]).sin(), x[1]];
                out[0] = g.eval1(&xs);
            })
            .unwrap()
            .0
        };
        let a = comp(64);
        let b = comp(128);
        let diff = a.sub(&b).max_abs_coeff();
        assert!(diff <= 1e-10, "{diff}");
    }

    #[test]
    fn shift_matches_pointwise() {
        let g = g25(0.3, 0.1, 0.5);
        let sh = g.shift(&[0.1, 0.2]);
        let v = sh.eval1(&[0.3, 0.4]);
        assert!((v - g.eval1(&[0.4, 0.6])).abs() < 1e-14);
    }

    #[test]
    fn restriction_and_lift() {
        let g = g25(0.3, 0.1, 0.5);
        let r = g.restrict_trailing(&[0.2]);
        assert!((r.eval1(&[0.7]) - g.eval1(&[0.7, 0.2])).abs() < 1e-14);
        let l = r.lift(2, 0);
        assert!((l.eval1(&[0.7, 0.9]) - g.eval1(&[0.7, 0.2])).abs() < 1e-14);
    }

    #[test]
    fn linear_composition() {
        let g = g25(0.3, 0.1, 0.5);
        let m = vec![vec![1, 1], vec![0, 1]];
        let h = g.compose_linear(&m);
        let x = [0.13, 0.71];
        assert!((h.eval1(&x) - g.eval1(&[x[0] + x[1], x[1]])).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_sine() {
        let g = g25(0.0, 0.1, 0.0);
        let dg = g.derivative(0);
        let x = [0.1, 0.0];
        assert!((dg.eval1(&x) - 0.1 * 2.0 * PI * (2.0 * PI * 0.1).cos()).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let g = g25(0.3, 0.1, 0.5);
        let text = serde_json::to_string(&g).unwrap();
        let back: TrigSeries = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }
}
