//! Truncated power series in `eps` whose coefficients are grid functions.
//!
//! Used to expand conjugation identities order by order: every nonlinear
//! composition is a Taylor expansion along a displacement that starts
//! at order one.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::fourier::TrigSeries;

/// `data[(o * comps + c) * pts + p]`: order `o`, component `c`, point `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    comps: usize,
    pts: usize,
    data: Vec<f64>,
}

impl Jet {
    pub fn zeros(order: usize, comps: usize, pts: usize) -> Self {
        Jet { order, comps, pts, data: vec![0.0; (order + 1) * comps * pts] }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn pts(&self) -> usize {
        self.pts
    }

    pub fn get(&self, o: usize, c: usize) -> &[f64] {
        let s = (o * self.comps + c) * self.pts;
        &self.data[s..s + self.pts]
    }

    pub fn get_mut(&mut self, o: usize, c: usize) -> &mut [f64] {
        let s = (o * self.comps + c) * self.pts;
        &mut self.data[s..s + self.pts]
    }

    /// Component `c` as a scalar jet.
    pub fn component(&self, c: usize) -> Jet {
        let mut out = Jet::zeros(self.order, 1, self.pts);
        for o in 0..=self.order {
            out.get_mut(o, 0).copy_from_slice(self.get(o, c));
        }
        out
    }

    /// Truncated product of two scalar jets.
    pub fn mul_scalar(&self, other: &Jet) -> Jet {
        debug_assert!(self.comps == 1 && other.comps == 1);
        let order = self.order.min(other.order);
        let mut out = Jet::zeros(order, 1, self.pts);
        for a in 0..=order {
            let x = self.get(a, 0);
            if x.iter().all(|&v| v == 0.0) {
                continue;
            }
            for b in 0..=order - a {
                let y = other.get(b, 0);
                let dst = out.get_mut(a + b, 0);
                for p in 0..dst.len() {
                    dst[p] += x[p] * y[p];
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Jet) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &Jet) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
    }

    /// Order `o` as component-major samples.
    pub fn samples(&self, o: usize) -> Vec<Vec<f64>> {
        (0..self.comps).map(|c| self.get(o, c).to_vec()).collect()
    }

    /// Largest absolute value at order `o`.
    pub fn sup(&self, o: usize) -> f64 {
        (0..self.comps)
            .flat_map(|c| self.get(o, c).iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// `sum_i eps^{i + offset} terms[i]` sampled on the `n^d` grid.
pub fn series_jet(terms: &[TrigSeries], offset: usize, order: usize, n: usize) -> Jet {
    let comps = terms.first().map_or(1, |t| t.value_dim());
    let d = terms.first().map_or(1, |t| t.dim());
    let mut out = Jet::zeros(order, comps, n.pow(d as u32));
    for (i, t) in terms.iter().enumerate() {
        let o = i + offset;
        if o > order {
            break;
        }
        for (c, s) in t.sample(n).into_iter().enumerate() {
            out.get_mut(o, c).copy_from_slice(&s);
        }
    }
    out
}

/// Multi-indices `beta` in `m` variables with `1 <= |beta| <= max`.
fn multi_indices_upto(m: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for j in 1..=max {
        out.extend(crate::fourier::multi_indices_of(m, j));
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Jet of `phi(x + shift + sum_c disp_c(x) v_c)` on the grid.
///
/// `disp` must vanish at order zero; `dirs[c]` is the direction of
/// displacement component `c`. Derivatives of `phi` are exact (spectral).
pub fn taylor_compose(phi: &TrigSeries, shift: Option<&[f64]>, dirs: &[Vec<f64>], disp: &Jet, n: usize) -> Jet {
    let base = match shift {
        Some(a) => phi.shift(a),
        None => phi.clone(),
    };
    taylor_compose_by(base.sample(n), dirs.len(), disp, |beta| {
        let mut deriv = base.clone();
        for (c, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                deriv = deriv.directional(&dirs[c]);
            }
        }
        deriv.sample(n)
    })
}

/// Taylor expansion with caller-supplied samples: `base` holds the
/// values of `phi` (component-major) and `deriv(beta)` those of the
/// mixed derivative along the displacement directions.
pub fn taylor_compose_by(
    base: Vec<Vec<f64>>,
    n_dirs: usize,
    disp: &Jet,
    mut deriv: impl FnMut(&[usize]) -> Vec<Vec<f64>>,
) -> Jet {
    let order = disp.order();
    let pts = disp.pts();
    let mut out = Jet::zeros(order, base.len(), pts);
    for (c, v) in base.into_iter().enumerate() {
        out.get_mut(0, c).copy_from_slice(&v);
    }
    let comps: Vec<Jet> = (0..n_dirs).map(|c| disp.component(c)).collect();
    let mut monomials: BTreeMap<Vec<usize>, Jet> = BTreeMap::new();
    for beta in multi_indices_upto(n_dirs, order) {
        // Build disp^beta from a lower monomial times one factor.
        let i = beta.iter().position(|&b| b > 0).unwrap();
        let mut lower = beta.clone();
        lower[i] -= 1;
        let mono = if lower.iter().all(|&b| b == 0) {
            comps[i].clone()
        } else {
            monomials[&lower].mul_scalar(&comps[i])
        };
        let total: usize = beta.iter().sum();
        let active = (total..=order).any(|o| mono.get(o, 0).iter().any(|&v| v != 0.0));
        if active {
            let weight = 1.0 / beta.iter().map(|&b| factorial(b)).product::<f64>();
            let samples = deriv(&beta);
            for o in total..=order {
                let mo = mono.get(o, 0);
                for (c, dv) in samples.iter().enumerate() {
                    let dst = out.get_mut(o, c);
                    for p in 0..pts {
                        dst[p] += weight * dv[p] * mo[p];
                    }
                }
            }
        }
        monomials.insert(beta, mono);
    }
    out
}
