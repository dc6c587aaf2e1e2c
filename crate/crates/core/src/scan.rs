//! Parameter scans over `(alpha, eps)`: each cell is tested for a
//! conjugacy to a rotation, then for invariant circles created by the
//! resonance at `alpha0`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::circle::{
    classify_eta, graph_transform_with, locate_eta_zero, Branch, GraphConfig, GraphSolution, ReducedDynamics,
    Stability,
};
use crate::dynamics::{rotation_number, MapFamily, MapKind};
use crate::error::{invalid, Error, Result};
use crate::fourier::TrigSeries;
use crate::frequency::{analyze, DetectOptions, ResonanceData};
use crate::kam::{conjugate_to_rotation, solution_defect, KamConfig};
use crate::normalform::{resonant_normal_form, NormalForm, NormalFormConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Conjugate,
    LockedAttracting,
    LockedRepelling,
    LockedPair,
    Undetermined,
}

impl CellClass {
    pub fn is_locked(self) -> bool {
        matches!(self, CellClass::LockedAttracting | CellClass::LockedRepelling | CellClass::LockedPair)
    }

    pub fn label(self) -> &'static str {
        match self {
            CellClass::Conjugate => "conjugate",
            CellClass::LockedAttracting => "locked_attracting",
            CellClass::LockedRepelling => "locked_repelling",
            CellClass::LockedPair => "locked_pair",
            CellClass::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub n_alpha: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub n_eps: usize,
}

impl ScanGrid {
    pub fn cells(&self) -> usize {
        self.n_alpha * self.n_eps
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n <= 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn alpha(&self, i: usize) -> f64 {
        Self::axis(self.alpha_min, self.alpha_max, self.n_alpha, i)
    }

    pub fn eps(&self, j: usize) -> f64 {
        Self::axis(self.eps_min, self.eps_max, self.n_eps, j)
    }

    /// Cells in row-major order: `eps` outer, `alpha` inner.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.cells());
        for j in 0..self.n_eps {
            for i in 0..self.n_alpha {
                out.push((self.alpha(i), self.eps(j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// The family at the resonant `alpha0`.
    pub map: MapFamily,
    pub grid: ScanGrid,
    pub detect: DetectOptions,
    /// Normal-form order `N`.
    pub order: usize,
    pub eps_probe: f64,
    pub normal_form: NormalFormConfig,
    pub kam: KamConfig,
    /// Secant steps on the rotation number.
    pub kam_outer: usize,
    pub graph: GraphConfig,
    /// Largest accepted invariance defect of a circle.
    pub circle_tol: f64,
    /// Run the circle pipeline on conjugate cells too.
    pub cross_check: bool,
    pub budget: usize,
    /// Recorded for provenance; the scan itself draws no random numbers.
    pub seed: u64,
    /// Iterates used to measure the frequency on a circle.
    pub drift_horizon: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let map = crate::dynamics::example_map(0.3, 0.1, 0.5, 1.0, 0.0);
        ScanConfig {
            map,
            grid: ScanGrid { alpha_min: 0.96, alpha_max: 1.02, n_alpha: 21, eps_min: 0.0, eps_max: 0.04, n_eps: 11 },
            detect: DetectOptions::default(),
            order: 2,
            eps_probe: 0.02,
            normal_form: NormalFormConfig { band: 16, ..Default::default() },
            kam: KamConfig { band: 24, max_steps: 10, ..Default::default() },
            kam_outer: 8,
            graph: GraphConfig::default(),
            circle_tol: 1e-9,
            cross_check: false,
            budget: 10_000,
            seed: 0,
            drift_horizon: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KamDiagnostics {
    pub rho: f64,
    pub lambda: f64,
    pub residual: f64,
    /// Invariance defect on a grid twice as fine.
    pub fine_defect: f64,
    pub steps: usize,
    pub min_divisor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleDiagnostics {
    pub branch: Branch,
    pub stability: Stability,
    pub y_star: f64,
    pub defect: f64,
    pub multiplier: f64,
    pub contraction_factor: f64,
    /// Rotation of the circle dynamics minus the resonant rotation.
    pub drift: f64,
    pub drift_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub alpha: f64,
    pub eps: f64,
    pub class: CellClass,
    /// Failure codes, in the order the pipelines met them.
    pub reasons: Vec<String>,
    pub kam: Option<KamDiagnostics>,
    pub circles: Vec<CircleDiagnostics>,
}

impl CellResult {
    /// The cell passes both tests at the configured tolerances.
    pub fn is_ambiguous(&self, kam_tol: f64, circle_tol: f64) -> bool {
        let kam = self.kam.as_ref().map_or(false, |k| k.residual <= kam_tol);
        let circle = self.circles.iter().any(|c| c.defect <= circle_tol && (c.multiplier.abs() - 1.0).abs() >= 1e-6);
        kam && circle
    }

    pub fn rotation(&self) -> Option<f64> {
        self.kam.as_ref().map(|k| k.rho)
    }

    pub fn normal_multiplier(&self) -> Option<f64> {
        self.circles.first().map(|c| c.multiplier)
    }

    pub fn circle_defect(&self) -> Option<f64> {
        self.circles.iter().map(|c| c.defect).reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub alpha: f64,
    pub eps: f64,
    pub from: CellClass,
    pub to: CellClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid: ScanGrid,
    pub alpha0: f64,
    pub kind: MapKind,
    pub cells: Vec<CellResult>,
    /// Left and right edges of the locked region, one point per row.
    pub tongue_left: Vec<[f64; 2]>,
    pub tongue_right: Vec<[f64; 2]>,
    /// Every class change between neighbours along `alpha`.
    pub transitions: Vec<BoundaryPoint>,
    pub seed: u64,
}

impl ScanResult {
    pub fn cell(&self, i_alpha: usize, j_eps: usize) -> &CellResult {
        &self.cells[j_eps * self.grid.n_alpha + i_alpha]
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|c| c.class == class).count()
    }

    pub fn ambiguous_cells(&self, kam_tol: f64, circle_tol: f64) -> usize {
        self.cells.iter().filter(|c| c.is_ambiguous(kam_tol, circle_tol)).count()
    }

    /// Number of locked cells in row `j`.
    pub fn locked_width(&self, j: usize) -> usize {
        (0..self.grid.n_alpha).filter(|&i| self.cell(i, j).class.is_locked()).count()
    }
}

/// Everything shared by the cells of one scan.
#[derive(Debug, Clone)]
pub struct ScanContext {
    pub config: ScanConfig,
    pub resonance: ResonanceData,
    /// `None` when the normal form could not be built; the reason is kept.
    pub normal_form: core::result::Result<NormalForm, Error>,
}

impl ScanContext {
    pub fn new(config: ScanConfig) -> Result<Self> {
        config.map.validate()?;
        let cells = config.grid.cells();
        if cells > config.budget {
            return Err(Error::BudgetExceeded { cells, budget: config.budget });
        }
        if cells == 0 {
            return Err(invalid!("scan grid is empty"));
        }
        let resonance = analyze(&config.map.omega, config.detect)?;
        let normal_form = resonant_normal_form(&config.map, &resonance, config.order, config.eps_probe, &config.normal_form);
        Ok(ScanContext { config, resonance, normal_form })
    }

    pub fn alpha0(&self) -> f64 {
        self.config.map.alpha
    }

    pub fn classify(&self, alpha: f64, eps: f64) -> CellResult {
        let cfg = &self.config;
        let mut cell = CellResult { alpha, eps, class: CellClass::Undetermined, reasons: Vec::new(), kam: None, circles: Vec::new() };
        match self.kam_attempt(alpha, eps) {
            Ok(k) => {
                let ok = k.residual <= cfg.kam.tol && k.fine_defect <= 10.0 * cfg.kam.tol && k.min_divisor >= cfg.kam.divisor_floor;
                if !ok {
                    cell.reasons.push("resonant_rotation".to_string());
                }
                cell.kam = Some(k);
                if ok {
                    cell.class = CellClass::Conjugate;
                    if !cfg.cross_check {
                        return cell;
                    }
                }
            }
            Err(e) => cell.reasons.push(e.code().to_string()),
        }
        self.circle_attempt(alpha, eps, &mut cell);
        if cell.class == CellClass::Conjugate {
            return cell;
        }
        let good: Vec<&CircleDiagnostics> = cell.circles.iter().filter(|c| c.defect <= cfg.circle_tol).collect();
        let has = |s: Stability| good.iter().any(|c| c.stability == s);
        cell.class = match (has(Stability::Attracting), has(Stability::Repelling)) {
            (true, true) => CellClass::LockedPair,
            (true, false) => CellClass::LockedAttracting,
            (false, true) => CellClass::LockedRepelling,
            _ => CellClass::Undetermined,
        };
        if cell.circles.len() > good.len() {
            cell.reasons.push("circle_defect_above_tolerance".to_string());
        }
        cell
    }

    fn kam_attempt(&self, alpha: f64, eps: f64) -> Result<KamDiagnostics> {
        let cfg = &self.config;
        if cfg.map.kind != MapKind::Foliation {
            return Err(invalid!("the conjugacy solver needs a foliation-kind map"));
        }
        let map = cfg.map.with_params(alpha, eps);
        let f = map.field().scale(eps).add_constant(&[alpha]);
        let rc = conjugate_to_rotation(&f, &map.omega, &cfg.kam, cfg.kam_outer)?;
        let fine = 2 * cfg.kam.grid_size();
        let fine_defect = solution_defect(&f, &rc.state.h, rc.state.lambda, rc.rho, &map.omega, fine);
        Ok(KamDiagnostics {
            rho: rc.rho,
            lambda: rc.state.lambda,
            residual: rc.state.residual_norm,
            fine_defect,
            steps: rc.state.steps(),
            min_divisor: min_divisor(rc.rho, &map.omega, cfg.kam.band),
        })
    }

    fn circle_attempt(&self, alpha: f64, eps: f64, cell: &mut CellResult) {
        let nf = match &self.normal_form {
            Ok(nf) => nf,
            Err(e) => {
                cell.reasons.push(e.code().to_string());
                return;
            }
        };
        if eps == 0.0 {
            cell.reasons.push("unperturbed".to_string());
            return;
        }
        if nf.dim() - nf.r() != 1 {
            cell.reasons.push("circles_need_codimension_one".to_string());
            return;
        }
        let offset = alpha - nf.alpha0;
        let eta = nf.eta_with_offset(eps, offset);
        let base_eta = nf.eta_at(eps);
        let gain = eps.powi(nf.n as i32);
        let mut dynamics: Option<ReducedDynamics> = None;
        for branch in [Branch::PositiveSlope, Branch::NegativeSlope] {
            let attempt = (|| -> Result<CircleDiagnostics> {
                let zero = locate_eta_zero(&eta, branch)?;
                let y = [zero.y_star];
                let (stability, splitting) = classify_eta(&base_eta, gain, &y, true)?;
                if dynamics.is_none() {
                    let cm = nf.conjugated_map(alpha, eps)?;
                    dynamics = Some(ReducedDynamics::from_conjugated(nf, &cm));
                }
                let dyn_ = dynamics.as_ref().expect("set above");
                let mut sol = graph_transform_with(dyn_, &splitting, eps, &y, &self.config.graph)?;
                sol.alpha = alpha;
                sol.stability = stability;
                let defect = sol.original_defect(nf, 64)?;
                let (drift, drift_error) = drift(dyn_, &sol, self.config.drift_horizon)?;
                Ok(CircleDiagnostics {
                    branch,
                    stability,
                    y_star: zero.y_star,
                    defect,
                    multiplier: splitting.multipliers[0],
                    contraction_factor: sol.contraction_factor,
                    drift,
                    drift_error,
                })
            })();
            match attempt {
                Ok(c) => cell.circles.push(c),
                Err(e) => cell.reasons.push(format!("{}:{}", branch_label(branch), e.code())),
            }
        }
    }

    /// Cells in grid order, computed one after another.
    pub fn run(&self) -> ScanResult {
        let cells = self.config.grid.points().into_iter().map(|(a, e)| self.classify(a, e)).collect();
        self.assemble(cells)
    }

    /// Assemble a result from cells given in grid order.
    pub fn assemble(&self, cells: Vec<CellResult>) -> ScanResult {
        let grid = self.config.grid;
        let mut tongue_left = Vec::new();
        let mut tongue_right = Vec::new();
        let mut transitions = Vec::new();
        for j in 0..grid.n_eps {
            let row = &cells[j * grid.n_alpha..(j + 1) * grid.n_alpha];
            for w in row.windows(2) {
                if w[0].class != w[1].class {
                    transitions.push(BoundaryPoint {
                        alpha: 0.5 * (w[0].alpha + w[1].alpha),
                        eps: w[0].eps,
                        from: w[0].class,
                        to: w[1].class,
                    });
                }
            }
            let locked: Vec<usize> = (0..row.len()).filter(|&i| row[i].class.is_locked()).collect();
            if let (Some(&lo), Some(&hi)) = (locked.first(), locked.last()) {
                let left = if lo == 0 { row[0].alpha } else { 0.5 * (row[lo - 1].alpha + row[lo].alpha) };
                let right = if hi + 1 == row.len() { row[hi].alpha } else { 0.5 * (row[hi].alpha + row[hi + 1].alpha) };
                tongue_left.push([left, row[lo].eps]);
                tongue_right.push([right, row[hi].eps]);
            }
        }
        ScanResult {
            grid,
            alpha0: self.alpha0(),
            kind: self.config.map.kind,
            cells,
            tongue_left,
            tongue_right,
            transitions,
            seed: self.config.seed,
        }
    }
}

fn branch_label(b: Branch) -> &'static str {
    match b {
        Branch::PositiveSlope => "positive_slope",
        Branch::NegativeSlope => "negative_slope",
    }
}

/// Smallest `|1 - e^{2 pi i k . rho Omega}|` over `0 < |k|_inf <= band`.
fn min_divisor(rho: f64, omega: &[f64], band: usize) -> f64 {
    let probe = TrigSeries::zeros(omega.len(), 1, band);
    let mut best = f64::INFINITY;
    probe.for_each_mode(|_, k| {
        if k.iter().all(|&x| x == 0) {
            return;
        }
        let kw: f64 = k.iter().zip(omega).map(|(&a, &b)| a as f64 * b * rho).sum();
        best = best.min(2.0 * (PI * kw).sin().abs());
    });
    best
}

/// Rotation of the dynamics on a circle, relative to the resonant rotation.
fn drift(dynamics: &ReducedDynamics, sol: &GraphSolution, horizon: usize) -> Result<(f64, f64)> {
    let y = &sol.y_star;
    let lift = |x: f64| dynamics.base_map(&[x], y, &sol.w)[0];
    let est = rotation_number(lift, 0.0, horizon.max(1), 64)?;
    Ok((est.value - dynamics.rotation()[0], est.error))
}

/// Scan in grid order with the context built from `config`.
pub fn run_scan(config: ScanConfig) -> Result<ScanResult> {
    Ok(ScanContext::new(config)?.run())
}
