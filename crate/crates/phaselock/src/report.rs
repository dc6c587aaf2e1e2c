//! End-to-end run of the planar worked example
//! `F(x, y) = (x, y) + (alpha + eps g(x, y)) (golden, 1)` with
//! `g = a + delta1 sin(2 pi x) + delta2 sin(2 pi y)`.

use std::f64::consts::PI;

use phaselock_core::circle::{graph_transform, locate_eta_zero, Branch, GraphConfig, Stability};
use phaselock_core::dynamics::example_map;
use phaselock_core::fourier::TrigSeries;
use phaselock_core::frequency::{analyze, golden, DetectOptions};
use phaselock_core::lindstedt::{defect, lindstedt_expand, LindstedtConfig};
use phaselock_core::normalform::{resonant_normal_form, NormalFormConfig};
use phaselock_core::sternberg::{fiber_linearize, SkewProduct, SternbergConfig};
use phaselock_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    pub a: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub eps: f64,
    /// Normal-form order used for the circles.
    pub order: usize,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams { a: 0.3, delta1: 0.1, delta2: 0.5, eps: 0.02, order: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSummary {
    pub branch: Branch,
    pub stability: Stability,
    pub y_star: f64,
    /// Normal multiplier of the normal form at the circle.
    pub multiplier: f64,
    /// Range of the fiber derivative `Gamma'_sigma(0)` along the circle.
    pub fiber_derivative_min: f64,
    pub fiber_derivative_max: f64,
    /// Invariance defect under the original map.
    pub defect: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindstedtSummary {
    pub y0: f64,
    /// `(eps, defect)` down two halvings.
    pub ladder: Vec<(f64, f64)>,
    /// `None` where the defect vanished to rounding on both sides.
    pub log2_ratios: Vec<Option<f64>>,
    /// `sup |l_1^y|`.
    pub l1_y_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SternbergSummary {
    pub residual: f64,
    pub quadratic_residual: f64,
    pub measured_rate: f64,
    pub predicted_rate: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub params: ExampleParams,
    pub omega: f64,
    /// `|delta2| sqrt(1 - (a / delta2)^2)`.
    pub lambda: f64,
    /// `1 + (lambda pi / 4) eps`.
    pub multiplier_bound: f64,
    pub n: usize,
    pub eta_error: f64,
    pub beta_error: f64,
    pub circles: Vec<CircleSummary>,
    pub lindstedt: LindstedtSummary,
    pub sternberg: SternbergSummary,
    pub checks: Vec<Check>,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// `c + s sin(2 pi y)` as a series on the circle.
fn sine_eta(c: f64, s: f64, band: usize) -> TrigSeries {
    let (series, _) = TrigSeries::from_fn(1, 1, band, 4 * band.max(2), |y, out| {
        out[0] = c + s * (2.0 * PI * y[0]).sin();
    })
    .expect("band-limited samples");
    series
}

const LADDER_HALVINGS: usize = 2;

/// Run every stage on the worked example and record pass/fail checks.
///
/// Precondition failures are errors; failed checks are reported.
pub fn example_2_5(p: ExampleParams) -> Result<ExampleReport> {
    let omega = golden();
    if !(p.eps > 0.0) || p.order == 0 {
        return Err(Error::InvalidInput(format!("need eps > 0 and order >= 1, got {} and {}", p.eps, p.order)));
    }
    if p.a.abs() >= p.delta2.abs() {
        return Err(Error::InvalidInput(format!("precondition |a| < |delta2| fails: a = {}, delta2 = {}", p.a, p.delta2)));
    }
    let lambda = p.delta2.abs() * (1.0 - (p.a / p.delta2).powi(2)).sqrt();
    if 2.0 * omega * p.delta1.abs() >= lambda {
        return Err(Error::InvalidInput(format!(
            "parameter guard 2 omega |delta1| < |delta2| sqrt(1 - (a / delta2)^2) fails: {} >= {lambda}",
            2.0 * omega * p.delta1.abs()
        )));
    }
    let multiplier_bound = 1.0 + lambda * PI / 4.0 * p.eps;
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| checks.push(Check { name: name.to_string(), passed, detail });

    let map = example_map(p.a, p.delta1, p.delta2, 1.0, 0.0);
    let res = analyze(&map.omega, DetectOptions::default())?;
    let nf_cfg = NormalFormConfig { band: 16, ..Default::default() };

    // Leading normal form against the closed-form eta and beta.
    let nf1 = resonant_normal_form(&map, &res, 1, p.eps, &nf_cfg)?;
    let eta = sine_eta(p.a, p.delta2, nf1.eta.band());
    let eta_error = nf1.eta.sub(&eta).max_abs_coeff();
    let beta_error = nf1.beta.sub(&eta.scale(omega)).max_abs_coeff();
    check("n = 1", nf1.n == 1, format!("n = {}", nf1.n));
    check("eta formula", eta_error <= 1e-10, format!("max coefficient error {eta_error:e}"));
    check("beta formula", beta_error <= 1e-10, format!("max coefficient error {beta_error:e}"));

    let nf = resonant_normal_form(&map, &res, p.order, p.eps, &nf_cfg)?;
    let mut circles = Vec::new();
    let mut repelling = None;
    for branch in [Branch::PositiveSlope, Branch::NegativeSlope] {
        let y = locate_eta_zero(&nf.eta_at(p.eps), branch)?.y_star;
        let sol = graph_transform(&nf, p.eps, 0.0, &[y], &GraphConfig::default())?;
        let defect = sol.original_defect(&nf, 64)?;
        let fiber = SkewProduct::from_circle(&nf, &sol, 1, 16)?.a_sigma().sample(64).swap_remove(0);
        let (lo, hi) = fiber.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        circles.push(CircleSummary {
            branch,
            stability: sol.stability,
            y_star: y,
            multiplier: sol.splitting.multipliers[0],
            fiber_derivative_min: lo,
            fiber_derivative_max: hi,
            defect,
            iterations: sol.iterations,
        });
        if sol.stability == Stability::Repelling {
            repelling = Some(sol);
        }
    }
    let has = |s: Stability| circles.iter().any(|c| c.stability == s);
    check(
        "two circles with opposite stability",
        has(Stability::Attracting) && has(Stability::Repelling),
        format!("{:?}", circles.iter().map(|c| c.stability).collect::<Vec<_>>()),
    );
    for c in &circles {
        check(
            &format!("{} circle invariance defect", label(c.stability)),
            c.defect <= 1e-9,
            format!("{:e} at y* = {}", c.defect, c.y_star),
        );
        match c.stability {
            Stability::Repelling => check(
                "repelling multiplier bound",
                c.fiber_derivative_min > multiplier_bound,
                format!("min Gamma'(0) = {} vs 1 + (lambda pi / 4) eps = {multiplier_bound}", c.fiber_derivative_min),
            ),
            Stability::Attracting => check(
                "attracting multiplier below 1",
                c.fiber_derivative_max < 1.0,
                format!("max Gamma'(0) = {}", c.fiber_derivative_max),
            ),
            _ => {}
        }
    }

    // Lindstedt series of order 2 from the unperturbed repelling circle.
    let y0 = locate_eta_zero(&nf.eta_at(0.0), Branch::PositiveSlope)?.y_star;
    let series = lindstedt_expand(&map, &res, &[y0], 2, &LindstedtConfig { band: 16, ..Default::default() })?;
    let ladder: Vec<(f64, f64)> = (0..=LADDER_HALVINGS).map(|i| {
        let e = p.eps / 2f64.powi(i as i32);
        (e, defect(&series, e))
    }).collect();
    let log2_ratios: Vec<Option<f64>> =
        ladder.windows(2).map(|w| Some((w[0].1 / w[1].1).log2()).filter(|r| r.is_finite())).collect();
    // An exactly invariant circle leaves only rounding in the defect.
    let exact = ladder.iter().all(|&(_, d)| d <= 1e-14);
    let in_band = log2_ratios.iter().all(|r| r.is_some_and(|r| (r - 3.0).abs() <= 0.4));
    check("lindstedt order 2 defect ratio", exact || in_band, format!("log2 ratios {log2_ratios:?}"));
    let lindstedt = LindstedtSummary { y0, ladder, log2_ratios, l1_y_sup: series.l_y[1].grid_sup(64) };

    let repelling = repelling.ok_or(Error::InvalidInput("no repelling circle to linearize around".into()))?;
    let cfg = SternbergConfig::default();
    let sp = SkewProduct::from_circle(&nf, &repelling, 10, 16)?;
    let c = fiber_linearize(&sp, &cfg)?;
    check("sternberg residual", c.residual <= 1e-8, format!("{:e}", c.residual));
    check("sternberg quadratic coefficient", c.quadratic_residual <= 1e-8, format!("{:e}", c.quadratic_residual));
    let sternberg = SternbergSummary {
        residual: c.residual,
        quadratic_residual: c.quadratic_residual,
        measured_rate: c.measured_rate,
        predicted_rate: c.pinching.predicted_rate(),
        iterations: c.iterations_used,
    };

    Ok(ExampleReport {
        params: p,
        omega,
        lambda,
        multiplier_bound,
        n: nf.n,
        eta_error,
        beta_error,
        circles,
        lindstedt,
        sternberg,
        checks,
    })
}

fn label(s: Stability) -> &'static str {
    match s {
        Stability::Attracting => "attracting",
        Stability::Repelling => "repelling",
        _ => "saddle",
    }
}
