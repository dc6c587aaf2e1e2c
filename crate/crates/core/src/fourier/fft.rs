//! Complex FFT on uniform `N^d` grids (row-major, last axis fastest).

use alloc::vec;
use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Plan for 1-D transforms of a fixed length.
///
/// Powers of two use radix-2 butterflies, lengths with factors 2, 3 and 5
/// a recursive mixed-radix split, and anything else Bluestein's chirp
/// convolution on a power-of-two plan.
pub struct Fft1 {
    n: usize,
    twiddles: Vec<Complex64>,
    twiddles_inv: Vec<Complex64>,
    bitrev: Vec<usize>,
    factors: Vec<usize>,
    chirp: Option<Box<Chirp>>,
}

struct Chirp {
    /// `e^{-i pi j^2 / n}`, `j < n`.
    w: Vec<Complex64>,
    inner: Fft1,
    /// Transformed kernels for the forward and inverse directions.
    kernel_fwd: Vec<Complex64>,
    kernel_inv: Vec<Complex64>,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        if n.is_power_of_two() {
            return Self::radix2(n);
        }
        if let Some(factors) = smooth_factors(n) {
            let twiddles: Vec<Complex64> =
                (0..n).map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64)).collect();
            let twiddles_inv = twiddles.iter().map(|t| t.conj()).collect();
            return Fft1 { n, twiddles, twiddles_inv, bitrev: Vec::new(), factors, chirp: None };
        }
        let m = (2 * n - 1).next_power_of_two();
        let inner = Self::radix2(m);
        let w: Vec<Complex64> = (0..n)
            .map(|j| {
                // j^2 mod 2n keeps the angle small.
                let q = ((j as u128 * j as u128) % (2 * n as u128)) as f64;
                Complex64::from_polar(1.0, -PI * q / n as f64)
            })
            .collect();
        let kernel = |conj: bool| {
            let mut b = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..n {
                let v = if conj { w[j].conj() } else { w[j] };
                b[j] = v;
                if j > 0 {
                    b[m - j] = v;
                }
            }
            inner.radix2_run(&mut b, false);
            b
        };
        let kernel_fwd = kernel(true);
        let kernel_inv = kernel(false);
        Fft1 { n, twiddles: Vec::new(), twiddles_inv: Vec::new(), bitrev: Vec::new(), factors: Vec::new(), chirp: Some(Box::new(Chirp { w, inner, kernel_fwd, kernel_inv })) }
    }

    fn radix2(n: usize) -> Self {
        let twiddles: Vec<Complex64> = (0..n / 2)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
            .collect();
        let twiddles_inv = twiddles.iter().map(|t| t.conj()).collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Fft1 { n, twiddles, twiddles_inv, bitrev, factors: Vec::new(), chirp: None }
    }

    /// In-place unnormalized transform; `inverse` flips the exponent sign.
    pub fn run(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>, inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        if let Some(c) = &self.chirp {
            let m = c.inner.n;
            let w = |j: usize| if inverse { c.w[j].conj() } else { c.w[j] };
            let mut a = core::mem::take(scratch);
            a.clear();
            a.extend((0..n).map(|j| buf[j] * w(j)));
            a.resize(m, Complex64::new(0.0, 0.0));
            c.inner.radix2_run(&mut a, false);
            let kernel = if inverse { &c.kernel_inv } else { &c.kernel_fwd };
            for (x, k) in a.iter_mut().zip(kernel) {
                *x *= k;
            }
            c.inner.radix2_run(&mut a, true);
            let scale = 1.0 / m as f64;
            for k in 0..n {
                buf[k] = a[k] * w(k) * scale;
            }
            *scratch = a;
            return;
        }
        if !self.factors.is_empty() {
            scratch.clear();
            scratch.extend_from_slice(buf);
            let tw = if inverse { &self.twiddles_inv } else { &self.twiddles };
            mixed(scratch, 0, 1, buf, &self.factors, tw, self.n);
            return;
        }
        self.radix2_run(buf, inverse);
    }

    fn radix2_run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let tw = if inverse { &self.twiddles_inv } else { &self.twiddles };
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for chunk in buf.chunks_exact_mut(len) {
                let (lo, hi) = chunk.split_at_mut(half);
                for j in 0..half {
                    let b = hi[j] * tw[j * step];
                    let a = lo[j];
                    lo[j] = a + b;
                    hi[j] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Factorization into 4, 2, 3 and 5 (largest radix 4 first), if complete.
fn smooth_factors(mut n: usize) -> Option<Vec<usize>> {
    let mut f = Vec::new();
    for p in [4usize, 2, 3, 5] {
        while n % p == 0 {
            f.push(p);
            n /= p;
        }
    }
    (n == 1).then_some(f)
}

/// Decimation in time: `out[k] = sum_j input[base + j*stride] w^{jk}`.
fn mixed(input: &[Complex64], base: usize, stride: usize, out: &mut [Complex64], factors: &[usize], tw: &[Complex64], total: usize) {
    let n = out.len();
    if n == 1 {
        out[0] = input[base];
        return;
    }
    let p = factors[0];
    let m = n / p;
    for q in 0..p {
        mixed(input, base + q * stride, stride * p, &mut out[q * m..(q + 1) * m], &factors[1..], tw, total);
    }
    let s = total / n;
    let mut t = [Complex64::new(0.0, 0.0); 5];
    for k in 0..m {
        for q in 0..p {
            t[q] = if q == 0 { out[k] } else { out[q * m + k] * tw[q * k * s] };
        }
        match p {
            2 => {
                out[k] = t[0] + t[1];
                out[m + k] = t[0] - t[1];
            }
            4 => {
                // w_4 = -i forward, +i inverse; read the sign off the table.
                let w4 = tw[total / 4];
                let a = t[0] + t[2];
                let b = t[0] - t[2];
                let c = t[1] + t[3];
                let d = (t[1] - t[3]) * w4;
                out[k] = a + c;
                out[m + k] = b + d;
                out[2 * m + k] = a - c;
                out[3 * m + k] = b - d;
            }
            _ => {
                let step = total / p;
                for j in 0..p {
                    let mut acc = t[0];
                    for q in 1..p {
                        acc += t[q] * tw[(q * j % p) * step];
                    }
                    out[j * m + k] = acc;
                }
            }
        }
    }
}

/// Unnormalized `d`-dimensional transform of an `n^d` array.
pub fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let plan = Fft1::new(n);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = Vec::with_capacity(n);
    let total = data.len();
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                plan.run(&mut line, &mut scratch, inverse);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
        }
    }
}
