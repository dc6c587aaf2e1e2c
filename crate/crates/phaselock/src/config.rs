//! Versioned JSON configs for maps and scans.

use std::fs;
use std::path::Path;

use phaselock_core::circle::GraphConfig;
use phaselock_core::dynamics::{example_forcing, MapFamily, MapKind};
use phaselock_core::fourier::TrigSeries;
use phaselock_core::frequency::DetectOptions;
use phaselock_core::kam::KamConfig;
use phaselock_core::lindstedt::LindstedtConfig;
use phaselock_core::normalform::NormalFormConfig;
use phaselock_core::scan::ScanConfig;
use phaselock_core::sternberg::SternbergConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::expr::Real;

pub const SCHEMA: u64 = 1;

fn schema() -> u64 {
    SCHEMA
}

fn foliation() -> MapKind {
    MapKind::Foliation
}

fn one() -> Real {
    Real::Number(1.0)
}

fn zero() -> Real {
    Real::Number(0.0)
}

/// The worked-example forcing `a + delta1 sin(2 pi x) + delta2 sin(2 pi y)`,
/// usable instead of explicit jets on the plane with `Omega = (golden, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleForcing {
    pub a: Real,
    pub delta1: Real,
    pub delta2: Real,
    /// Constant push along the first axis; only meaningful for the
    /// generic kind.
    #[serde(default)]
    pub drift: Option<Real>,
}

/// Numerical knobs shared by all subcommands. Unset fields keep the
/// defaults of each solver.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub band: Option<usize>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub divisor_floor: Option<f64>,
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    #[serde(default = "schema")]
    pub schema: u64,
    #[serde(default = "foliation")]
    pub kind: MapKind,
    pub omega: Vec<Real>,
    #[serde(default = "one")]
    pub alpha: Real,
    #[serde(default = "zero")]
    pub eps: Real,
    #[serde(default)]
    pub jets: Vec<TrigSeries>,
    #[serde(default)]
    pub example: Option<ExampleForcing>,
    #[serde(default)]
    pub numerics: Numerics,
}

impl MapConfig {
    pub fn family(&self) -> Result<MapFamily, ConfigError> {
        check_schema(self.schema)?;
        self.numerics.validate()?;
        let omega = self.omega.iter().map(Real::value).collect::<Result<Vec<_>, _>>()?;
        let alpha = self.alpha.value()?;
        let eps = self.eps.value()?;
        let jets = match (&self.example, self.jets.is_empty()) {
            (Some(_), false) => return Err(ConfigError::Invalid("give either jets or example, not both".into())),
            (None, true) => return Err(ConfigError::Invalid("the map needs jets or an example forcing".into())),
            (None, false) => self.jets.clone(),
            (Some(ex), true) => {
                let g = example_forcing(ex.a.value()?, ex.delta1.value()?, ex.delta2.value()?);
                match self.kind {
                    MapKind::Foliation => {
                        if ex.drift.is_some() {
                            return Err(ConfigError::Invalid("drift needs the generic kind".into()));
                        }
                        vec![g]
                    }
                    MapKind::Generic => {
                        if omega.len() != 2 {
                            return Err(ConfigError::Invalid("the example forcing lives on the plane".into()));
                        }
                        let drift = ex.drift.as_ref().map(Real::value).transpose()?.unwrap_or(0.0);
                        let x = g.scale(omega[0]).add_constant(&[drift]);
                        let y = g.scale(omega[1]);
                        vec![TrigSeries::stack(&[x, y]).map_err(|e| ConfigError::Invalid(e.to_string()))?]
                    }
                }
            }
        };
        MapFamily::new(self.kind, omega, alpha, eps, jets).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.display().to_string(), source })
    }
}

impl Numerics {
    fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [("tol", self.tol), ("divisor_floor", self.divisor_floor)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.band == Some(0) {
            return Err(ConfigError::Invalid("band must be positive".into()));
        }
        if let (Some(b), Some(n)) = (self.band, self.grid) {
            if n < 2 * b + 1 {
                return Err(ConfigError::Invalid(format!("grid {n} cannot resolve band {b}")));
            }
        }
        Ok(())
    }

    pub fn detect(&self) -> DetectOptions {
        let mut o = DetectOptions::default();
        if let Some(k) = self.k_max {
            o.k_max = k;
        }
        o
    }

    pub fn normal_form(&self) -> NormalFormConfig {
        let mut c = NormalFormConfig::default();
        if let Some(b) = self.band {
            c.band = b;
        }
        c.grid = self.grid.or(c.grid);
        if let Some(f) = self.divisor_floor {
            c.divisor_floor = f;
        }
        c
    }

    pub fn lindstedt(&self) -> LindstedtConfig {
        let mut c = LindstedtConfig::default();
        if let Some(b) = self.band {
            c.band = b;
        }
        c.grid = self.grid.or(c.grid);
        if let Some(f) = self.divisor_floor {
            c.divisor_floor = f;
        }
        c
    }

    pub fn graph(&self) -> GraphConfig {
        let mut c = GraphConfig::default();
        c.band = self.band.or(c.band);
        c.grid = self.grid.or(c.grid);
        if let Some(t) = self.tol {
            c.tol = t;
        }
        c
    }

    pub fn sternberg(&self) -> SternbergConfig {
        let mut c = SternbergConfig::default();
        c.grid = self.grid.or(c.grid);
        if let Some(t) = self.tol {
            c.tol = t;
        }
        c
    }

    pub fn kam(&self) -> KamConfig {
        let mut c = KamConfig::default();
        if let Some(b) = self.band {
            c.band = b;
        }
        c.grid = self.grid.or(c.grid);
        if let Some(t) = self.tol {
            c.tol = t;
        }
        if let Some(f) = self.divisor_floor {
            c.divisor_floor = f;
        }
        c
    }
}

fn check_schema(found: u64) -> Result<(), ConfigError> {
    if found != SCHEMA {
        return Err(ConfigError::Schema { found, expected: SCHEMA });
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })
}

/// A scan config file: `{"schema": 1, "map": <MapConfig>, ...}` where the
/// remaining keys are [`ScanConfig`] fields. Without `map` the worked
/// example at `alpha = 1` is scanned.
pub fn parse_scan(text: &str, origin: &str) -> Result<ScanConfig, ConfigError> {
    let json = |source| ConfigError::Json { path: origin.to_string(), source };
    let mut value: Value = serde_json::from_str(text).map_err(json)?;
    let obj = value.as_object_mut().ok_or_else(|| ConfigError::Invalid("scan config must be a JSON object".into()))?;
    let found = match obj.remove("schema") {
        None => SCHEMA,
        Some(v) => v.as_u64().ok_or_else(|| ConfigError::Invalid("schema must be an integer".into()))?,
    };
    check_schema(found)?;
    let map = obj.remove("map").map(|m| serde_json::from_value::<MapConfig>(m).map_err(json)).transpose()?;
    let mut cfg: ScanConfig = serde_json::from_value(value).map_err(json)?;
    if let Some(m) = map {
        cfg.map = m.family()?;
    }
    validate_scan(&cfg)?;
    Ok(cfg)
}

pub fn load_scan(path: &Path) -> Result<ScanConfig, ConfigError> {
    parse_scan(&read(path)?, &path.display().to_string())
}

fn validate_scan(cfg: &ScanConfig) -> Result<(), ConfigError> {
    let g = &cfg.grid;
    let finite = [g.alpha_min, g.alpha_max, g.eps_min, g.eps_max].iter().all(|v| v.is_finite());
    if !finite || g.alpha_max < g.alpha_min || g.eps_max < g.eps_min || g.eps_min < 0.0 {
        return Err(ConfigError::Invalid(format!("bad scan grid {g:?}")));
    }
    for (name, v) in [("kam.tol", cfg.kam.tol), ("circle_tol", cfg.circle_tol), ("graph.tol", cfg.graph.tol)] {
        if !(v > 0.0) {
            return Err(ConfigError::Invalid(format!("{name} must be positive")));
        }
    }
    Ok(())
}

/// SHA-256 of the canonical JSON form of a scan config.
pub fn config_hash(cfg: &ScanConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("configs serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use phaselock_core::dynamics::example_map;
    use phaselock_core::frequency::golden;

    #[test]
    fn example_map_from_json() {
        let text = r#"{"schema": 1, "omega": ["golden", "1"], "alpha": "1", "eps": 0.02,
            "example": {"a": 0.3, "delta1": 0.1, "delta2": "1/2"}}"#;
        let cfg: MapConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.family().unwrap(), example_map(0.3, 0.1, 0.5, 1.0, 0.02));
    }

    #[test]
    fn explicit_jets_round_trip() {
        let map = example_map(0.3, 0.1, 0.5, 1.0, 0.0);
        let cfg = MapConfig {
            schema: 1,
            kind: MapKind::Foliation,
            omega: vec![Real::Expr("golden".into()), 1.0.into()],
            alpha: 1.0.into(),
            eps: 0.0.into(),
            jets: map.jets.clone(),
            example: None,
            numerics: Numerics::default(),
        };
        let back: MapConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.family().unwrap().omega, vec![golden(), 1.0]);
    }

    #[test]
    fn rejected_configs() {
        let cases = [
            r#"{"schema": 2, "omega": [1], "example": {"a": 0, "delta1": 0, "delta2": 0}}"#,
            r#"{"omega": ["golden", 1]}"#,
            r#"{"omega": ["gold", 1], "example": {"a": 0, "delta1": 0, "delta2": 0.5}}"#,
            r#"{"omega": ["golden", 1], "example": {"a": 0, "delta1": 0, "delta2": 0.5}, "numerics": {"tol": -1}}"#,
            r#"{"omega": ["golden", 1], "example": {"a": 0, "delta1": 0, "delta2": 0.5, "drift": 1}}"#,
        ];
        for text in cases {
            let cfg: Result<MapConfig, _> = serde_json::from_str(text);
            assert!(cfg.map_err(|_| ()).and_then(|c| c.family().map_err(|_| ())).is_err(), "{text}");
        }
    }

    #[test]
    fn scan_config_defaults_and_hash() {
        let a = parse_scan(r#"{"schema": 1}"#, "test").unwrap();
        assert_eq!(a, ScanConfig::default());
        let b = parse_scan(r#"{"grid": {"alpha_min": 0.99, "alpha_max": 1.01, "n_alpha": 3, "eps_min": 0, "eps_max": 0.02, "n_eps": 2}}"#, "test").unwrap();
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert!(parse_scan(r#"{"schema": 3}"#, "test").is_err());
        assert!(parse_scan(r#"{"kam": {"tol": 0}}"#, "test").is_err());
    }
}
