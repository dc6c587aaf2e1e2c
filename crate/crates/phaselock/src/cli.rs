//! Subcommand parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use phaselock_core::circle::{graph_transform, locate_eta_zero, Branch, GraphSolution};
use phaselock_core::dynamics::{lyapunov, periodicity_probe, Direction, MapFamily, MapKind, OrbitDiagnostics};
use phaselock_core::frequency::{analyze, diophantine_estimate, DetectOptions, DiophantineEstimate, ResonanceData};
use phaselock_core::kam::{conjugate_to_rotation, kam_solve, solution_defect, KamState};
use phaselock_core::fourier::TrigSeries;
use phaselock_core::lindstedt::{defect, lindstedt_expand, LindstedtSeries};
use phaselock_core::normalform::{resonant_normal_form, NormalForm};
use phaselock_core::scan::ScanConfig;
use phaselock_core::sternberg::{fiber_linearize, SkewProduct, SternbergConjugacy};
use serde::{Deserialize, Serialize};

use crate::artifacts::{run_parallel, to_json, write_file, write_scan};
use crate::config::{load_scan, MapConfig, Numerics};
use crate::error::{CliError, ConfigError};
use crate::expr::{parse_list, parse_real};
use crate::report::{example_2_5, ExampleParams};

#[derive(Debug, Parser)]
#[command(name = "phaselock", version, about = "Phase locking and conjugacy for foliation-preserving torus maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonance module, intrinsic frequency and Diophantine constants.
    Frequency(FrequencyArgs),
    /// Orbit diagnostics: Lyapunov exponents and rotation estimate.
    Dynamics(DynamicsArgs),
    /// Resonant normal form to a given order.
    Normalform(NormalformArgs),
    /// Lindstedt series around an unperturbed invariant circle.
    Lindstedt(LindstedtArgs),
    /// Invariant circles by the graph transform.
    Circle(CircleArgs),
    /// Fiberwise linearization around an invariant circle.
    Sternberg(SternbergArgs),
    /// Newton iteration for a conjugacy to a rotation.
    Kam(KamArgs),
    /// Classify a grid of (alpha, eps).
    Scan(ScanArgs),
    /// Run the whole pipeline on the planar worked example.
    #[command(name = "example25", alias = "example")]
    Example25(ExampleArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write results into this directory instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Map config (JSON, schema 1).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the rotation parameter of the config.
    #[arg(long, value_parser = real)]
    pub alpha: Option<f64>,
    /// Override the perturbation size of the config.
    #[arg(long, value_parser = real)]
    pub eps: Option<f64>,
}

fn real(s: &str) -> Result<f64, String> {
    parse_real(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct FrequencyArgs {
    /// Comma-separated frequency vector, e.g. `golden,1`.
    #[arg(long)]
    pub omega: String,
    #[arg(long = "kmax", default_value_t = 8)]
    pub k_max: usize,
    /// Exponent of the Diophantine estimate; defaults to the reduced dimension.
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Comma-separated start point; the origin by default.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,
    /// Also search for short periodic orbits from an `n^d` grid of seeds.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Iterate the inverse map.
    #[arg(long)]
    pub backward: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct NormalformArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Positive,
    Negative,
    Both,
}

impl BranchArg {
    fn branches(self) -> Vec<Branch> {
        match self {
            BranchArg::Positive => vec![Branch::PositiveSlope],
            BranchArg::Negative => vec![Branch::NegativeSlope],
            BranchArg::Both => vec![Branch::PositiveSlope, Branch::NegativeSlope],
        }
    }
}

#[derive(Debug, Args)]
pub struct LindstedtArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Base point of the unperturbed circle; by default a zero of the
    /// leading `eta` on the chosen branch.
    #[arg(long)]
    pub y0: Option<String>,
    #[arg(long, value_enum, default_value_t = BranchArg::Positive)]
    pub branch: BranchArg,
    /// Number of eps-halvings in the defect report.
    #[arg(long, default_value_t = 2)]
    pub halvings: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CircleArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = BranchArg::Both)]
    pub branch: BranchArg,
    /// Distance of the map's rotation from the resonant `alpha`.
    #[arg(long, default_value_t = 0.0, value_parser = real, allow_negative_numbers = true)]
    pub alpha_offset: f64,
    /// Points on the plotted polyline.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SternbergArgs {
    /// Map config; the skew product is built around one of its circles.
    #[arg(long, required_unless_present = "skew", conflicts_with = "skew")]
    pub config: Option<PathBuf>,
    /// A skew product given directly as JSON.
    #[arg(long)]
    pub skew: Option<PathBuf>,
    #[arg(long, value_parser = real)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = real)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = BranchArg::Positive)]
    pub branch: BranchArg,
    #[arg(long, default_value_t = 0.0, value_parser = real, allow_negative_numbers = true)]
    pub alpha_offset: f64,
    /// Taylor degree of the fiber maps.
    #[arg(long, default_value_t = 10)]
    pub degree: usize,
    #[arg(long, default_value_t = 16)]
    pub band: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct KamArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-steps")]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub band: Option<usize>,
    /// Adjust the target rotation until the counterterm vanishes, instead
    /// of solving with `alpha` as target.
    #[arg(long)]
    pub find_rotation: bool,
    /// Secant steps allowed with `--find-rotation`.
    #[arg(long, default_value_t = 8)]
    pub outer: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Scan config; the worked-example scan when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Run the circle pipeline on conjugate cells too.
    #[arg(long)]
    pub cross_check: bool,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub delta1: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub delta2: f64,
    #[arg(long, default_value_t = 0.02)]
    pub eps: f64,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub resonance: ResonanceData,
    pub reduced_frequency: Vec<f64>,
    pub diophantine: Option<DiophantineEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub orbit: OrbitDiagnostics,
    /// Closest return `|F^n(x) - x|` over the seed grid, if requested.
    pub periodicity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalformReport {
    pub eps: f64,
    pub conjugation_defect: f64,
    pub normal_form: NormalForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindstedtReport {
    pub series: LindstedtSeries,
    /// `(eps, defect)` pairs, halving each time.
    pub ladder: Vec<(f64, f64)>,
    /// `None` where the defect vanished to rounding on both sides.
    pub log2_ratios: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleReport {
    pub solution: GraphSolution,
    pub original_defect: f64,
    /// Points of the circle in original torus coordinates.
    pub polyline: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SternbergReport {
    pub skew_product: SkewProduct,
    pub conjugacy: SternbergConjugacy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KamReport {
    /// Rotation the map is conjugated to.
    pub rho: f64,
    pub state: KamState,
    pub convergence_slope: Option<f64>,
    /// Invariance defect of the conjugacy on a twice finer grid.
    pub defect: f64,
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let body = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            eprintln!("{body}");
            e.exit_code()
        }
    }
}

fn emit<T: Serialize>(output: &Output, name: &str, value: &T) -> Result<(), CliError> {
    let text = to_json(value);
    match &output.out {
        Some(dir) => {
            write_file(dir, name, &text)?;
        }
        None => print_stdout(&text),
    }
    Ok(())
}

fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    // A closed pipe is not worth a panic.
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn load_map(args: &MapArgs) -> Result<(MapFamily, Numerics), CliError> {
    let cfg = MapConfig::load(&args.config)?;
    let mut map = cfg.family()?;
    if let Some(a) = args.alpha {
        map.alpha = a;
    }
    if let Some(e) = args.eps {
        map.eps = e;
    }
    Ok((map, cfg.numerics))
}

fn points(text: &str, dim: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v = parse_list(text)?;
    if v.len() != dim {
        return Err(ConfigError::Invalid(format!("{what} needs {dim} components, got {}", v.len())).into());
    }
    Ok(v)
}

fn positive_eps(map: &MapFamily) -> Result<f64, CliError> {
    if !(map.eps > 0.0) {
        return Err(ConfigError::Invalid(format!("this subcommand needs eps > 0, got {}", map.eps)).into());
    }
    Ok(map.eps)
}

/// The family with `alpha` moved to its resonant value is the base of the
/// normal form; the offset is handled by the circle solver.
fn normal_form(map: &MapFamily, numerics: &Numerics, order: usize, eps: f64) -> Result<NormalForm, CliError> {
    let res = analyze(&map.omega, numerics.detect())?;
    Ok(resonant_normal_form(map, &res, order, eps, &numerics.normal_form())?)
}

/// Circles of the map at `alpha + offset`, where the config `alpha` is the
/// resonant value the normal form is built at.
fn circles(
    map: &MapFamily,
    numerics: &Numerics,
    order: usize,
    branch: BranchArg,
    offset: f64,
) -> Result<(NormalForm, Vec<GraphSolution>), CliError> {
    let eps = positive_eps(map)?;
    let nf = normal_form(map, numerics, order, eps)?;
    let eta = nf.eta_with_offset(eps, offset);
    let mut sols = Vec::new();
    for b in branch.branches() {
        let y = locate_eta_zero(&eta, b)?.y_star;
        sols.push(graph_transform(&nf, eps, offset, &[y], &numerics.graph())?);
    }
    Ok((nf, sols))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Frequency(a) => {
            let omega = parse_list(&a.omega)?;
            let resonance = analyze(&omega, DetectOptions { k_max: a.k_max, ..Default::default() })?;
            let reduced = resonance.reduced_frequency();
            // Only the intrinsic frequency can be Diophantine.
            let diophantine = if resonance.omega.is_empty() {
                None
            } else {
                let tau = a.tau.unwrap_or(resonance.omega.len() as f64);
                Some(diophantine_estimate(&resonance.omega, tau, a.k_max)?)
            };
            emit(&a.output, "frequency.json", &FrequencyReport { resonance, reduced_frequency: reduced, diophantine })
        }
        Command::Dynamics(a) => {
            let (map, _) = load_map(&a.map)?;
            let seed = match &a.seed {
                Some(s) => points(s, map.dim(), "--seed")?,
                None => vec![0.0; map.dim()],
            };
            let direction = if a.backward { Direction::Backward } else { Direction::Forward };
            let orbit = lyapunov(&map, &seed, a.horizon, direction)?;
            let periodicity = a.grid.map(|n| periodicity_probe(&map, n, 8));
            emit(&a.output, "dynamics.json", &DynamicsReport { orbit, periodicity })
        }
        Command::Normalform(a) => {
            let (map, numerics) = load_map(&a.map)?;
            let eps = positive_eps(&map)?;
            let nf = normal_form(&map, &numerics, a.order, eps)?;
            let conjugation_defect = nf.conjugation_defect(eps)?;
            emit(&a.output, "normalform.json", &NormalformReport { eps, conjugation_defect, normal_form: nf })
        }
        Command::Lindstedt(a) => {
            let (map, numerics) = load_map(&a.map)?;
            let eps = positive_eps(&map)?;
            let res = analyze(&map.omega, numerics.detect())?;
            let m = map.dim() - res.r;
            let y0 = match &a.y0 {
                Some(s) => points(s, m, "--y0")?,
                None => {
                    let nf = resonant_normal_form(&map, &res, 1, eps, &numerics.normal_form())?;
                    let branch = a.branch.branches()[0];
                    vec![locate_eta_zero(&nf.eta_at(0.0), branch)?.y_star]
                }
            };
            let series = lindstedt_expand(&map, &res, &y0, a.order, &numerics.lindstedt())?;
            let ladder: Vec<(f64, f64)> = (0..=a.halvings)
                .map(|i| {
                    let e = eps / 2f64.powi(i as i32);
                    (e, defect(&series, e))
                })
                .collect();
            let log2_ratios = ladder.windows(2).map(|w| Some((w[0].1 / w[1].1).log2()).filter(|r| r.is_finite())).collect();
            if let Some(dir) = &a.output.out {
                let mut csv = String::from("eps,defect\n");
                for (e, d) in &ladder {
                    csv.push_str(&format!("{e:e},{d:e}\n"));
                }
                write_file(dir, "lindstedt_ladder.csv", &csv)?;
            }
            emit(&a.output, "lindstedt.json", &LindstedtReport { series, ladder, log2_ratios })
        }
        Command::Circle(a) => {
            let (map, numerics) = load_map(&a.map)?;
            let (nf, sols) = circles(&map, &numerics, a.order, a.branch, a.alpha_offset)?;
            let mut reports = Vec::new();
            for sol in sols {
                let original_defect = sol.original_defect(&nf, 64)?;
                let polyline = sol.polyline(&nf, a.samples);
                reports.push(CircleReport { solution: sol, original_defect, polyline });
            }
            emit(&a.output, "circle.json", &reports)
        }
        Command::Sternberg(a) => {
            let sp = match (&a.skew, &a.config) {
                (Some(path), _) => load_skew(path)?,
                (None, Some(config)) => {
                    let (map, numerics) = load_map(&MapArgs { config: config.clone(), alpha: a.alpha, eps: a.eps })?;
                    let (nf, sols) = circles(&map, &numerics, a.order, a.branch, a.alpha_offset)?;
                    SkewProduct::from_circle(&nf, &sols[0], a.degree, a.band)?
                }
                (None, None) => return Err(ConfigError::Invalid("give --config or --skew".into()).into()),
            };
            let conjugacy = fiber_linearize(&sp, &Default::default())?;
            emit(&a.output, "sternberg.json", &SternbergReport { skew_product: sp, conjugacy })
        }
        Command::Kam(a) => {
            let (map, numerics) = load_map(&a.map)?;
            if map.kind != MapKind::Foliation {
                return Err(ConfigError::Invalid("the conjugacy solver needs a foliation-kind map".into()).into());
            }
            let mut cfg = numerics.kam();
            if let Some(t) = a.tol {
                cfg.tol = t;
            }
            if let Some(s) = a.max_steps {
                cfg.max_steps = s;
            }
            if let Some(b) = a.band {
                cfg.band = b;
            }
            if !(cfg.tol > 0.0) || cfg.band == 0 {
                return Err(ConfigError::Invalid("tol and band must be positive".into()).into());
            }
            // F(x) = x + f(x) Omega with f = alpha + eps * field.
            let f = map.field().scale(map.eps).add_constant(&[map.alpha]);
            let (rho, state) = if a.find_rotation {
                let rc = conjugate_to_rotation(&f, &map.omega, &cfg, a.outer)?;
                (rc.rho, rc.state)
            } else {
                let h0 = TrigSeries::zeros(map.dim(), 1, cfg.band);
                (map.alpha, kam_solve(&f, map.alpha, &map.omega, &h0, 0.0, &cfg)?)
            };
            let defect = solution_defect(&f, &state.h, state.lambda, rho, &map.omega, 2 * cfg.grid_size());
            let convergence_slope = state.convergence_slope();
            emit(&a.output, "kam.json", &KamReport { rho, state, convergence_slope, defect })
        }
        Command::Scan(a) => {
            let mut config = match &a.config {
                Some(p) => load_scan(p)?,
                None => ScanConfig::default(),
            };
            config.cross_check |= a.cross_check;
            let result = run_parallel(config.clone(), a.jobs)?;
            match &a.out {
                Some(dir) => {
                    let manifest = write_scan(dir, &config, &result)?;
                    print_stdout(&to_json(&manifest));
                }
                None => print_stdout(&to_json(&result)),
            }
            Ok(())
        }
        Command::Example25(a) => {
            let params = ExampleParams { a: a.a, delta1: a.delta1, delta2: a.delta2, eps: a.eps, order: a.order };
            let report = example_2_5(params)?;
            emit(&a.output, "example25.json", &report)?;
            if !report.passed() {
                return Err(CliError::Check(report.failures().join(", ")));
            }
            Ok(())
        }
    }
}

fn load_skew(path: &Path) -> Result<SkewProduct, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let sp: SkewProduct =
        serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.display().to_string(), source })?;
    // Rebuild to run the shape checks.
    Ok(SkewProduct::new(sp.base_shift, sp.base_disp, sp.fiber)?)
}
