//! Experiment configuration: a TOML document with a fixed schema. Unknown keys
//! are rejected and every value is validated before any route runs.

use std::fmt;
use std::path::{Path, PathBuf};

use etaflow_core::cylinder::{kernel_grading, CutoffProfile};
use etaflow_core::eta::EtaOptions;
use etaflow_core::toeplitz::HardyConvention;
use etaflow_core::torus::{TorusSpec, UnitaryMap, DEFAULT_UNITARITY_TOL};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteName {
    Thm34,
    Cylinder,
    MappingTorus,
    Toeplitz,
    Conjecture,
}

impl RouteName {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "thm34" => Some(Self::Thm34),
            "cylinder" => Some(Self::Cylinder),
            "mapping-torus" => Some(Self::MappingTorus),
            "toeplitz" => Some(Self::Toeplitz),
            "conjecture" => Some(Self::Conjecture),
            _ => None,
        }
    }

    pub fn is_eta_route(self) -> bool {
        matches!(self, Self::Thm34 | Self::Cylinder | Self::MappingTorus)
    }
}

impl fmt::Display for RouteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Thm34 => "thm34",
            Self::Cylinder => "cylinder",
            Self::MappingTorus => "mapping-torus",
            Self::Toeplitz => "toeplitz",
            Self::Conjecture => "conjecture",
        })
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub manifold: Option<ManifoldBlock>,
    #[serde(default)]
    pub map: Option<MapBlock>,
    #[serde(default)]
    pub truncation: TruncationBlock,
    #[serde(default)]
    pub cylinder: CylinderBlock,
    #[serde(default)]
    pub eta: EtaBlock,
    #[serde(default)]
    pub toeplitz: Option<ToeplitzBlock>,
    #[serde(default = "default_routes")]
    pub routes: Vec<RouteName>,
    /// Phase tolerance for route agreement, before the routes' own budgets.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_routes() -> Vec<RouteName> {
    vec![RouteName::Thm34, RouteName::Cylinder, RouteName::MappingTorus]
}

fn default_tolerance() -> f64 {
    1e-2
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldBlock {
    pub dim: usize,
    pub spin: Vec<f64>,
    pub twist: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MapBlock {
    #[serde(default)]
    pub character: Option<Vec<i64>>,
    /// Coefficient file, relative to the configuration file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Expected rank `N`; checked against the map when given.
    #[serde(default)]
    pub rank: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationBlock {
    /// Mode cutoff of the product-formula route.
    #[serde(default = "d16")]
    pub cutoff: usize,
    /// Transverse mode cutoff of the cylinder.
    #[serde(default = "d12")]
    pub collar_cutoff: usize,
    /// Legendre degree across the collar; derived from the window when absent.
    #[serde(default)]
    pub x_degree: Option<usize>,
    #[serde(default = "d64")]
    pub circle_points: usize,
    /// Transverse mode cutoff of the mapping torus.
    #[serde(default = "d13")]
    pub circle_cutoff: usize,
}

fn d16() -> usize {
    16
}
fn d12() -> usize {
    12
}
fn d64() -> usize {
    64
}
fn d13() -> usize {
    13
}

impl Default for TruncationBlock {
    fn default() -> Self {
        Self { cutoff: 16, collar_cutoff: 12, x_degree: None, circle_points: 64, circle_cutoff: 13 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderBlock {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "tenth")]
    pub profile_width: f64,
    /// `T = e^{iφ}·I` on the boundary kernel; `T = I` when absent.
    #[serde(default)]
    pub lagrangian_phase: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}

impl Default for CylinderBlock {
    fn default() -> Self {
        Self { length: 1.0, profile_width: 0.1, lagrangian_phase: None }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EtaBlock {
    /// Heat times in units of `(2π)⁻²`, strictly decreasing.
    #[serde(default = "collar_window")]
    pub window: Vec<f64>,
    #[serde(default = "two")]
    pub order: usize,
}

fn collar_window() -> Vec<f64> {
    vec![0.6, 0.5, 0.4, 0.3]
}
fn two() -> usize {
    2
}

impl Default for EtaBlock {
    fn default() -> Self {
        Self { window: collar_window(), order: 2 }
    }
}

impl EtaBlock {
    pub fn options(&self) -> EtaOptions {
        EtaOptions::scaled(&self.window, self.order)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToeplitzBlock {
    #[serde(default)]
    pub twist: f64,
    #[serde(default = "d64")]
    pub cutoff: usize,
    #[serde(default)]
    pub character: Option<i64>,
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub convention: Convention,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    IncludeZero,
    ExcludeZero,
}

impl From<Convention> for HardyConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::IncludeZero => HardyConvention::IncludeZero,
            Convention::ExcludeZero => HardyConvention::ExcludeZero,
        }
    }
}

/// A configuration problem, always tied to the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let span = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_else(|| "document".into());
        bad(span, e.message().to_string())
    })
}

/// A configuration that passed validation, with its maps loaded.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: Option<TorusSpec>,
    pub map: Option<UnitaryMap>,
    pub circle_map: Option<UnitaryMap>,
    /// Directory that relative coefficient-file paths resolve against.
    pub base: PathBuf,
}

impl Experiment {
    /// Reads and validates `path`, with `routes` replacing the configured list.
    pub fn load(path: &Path, routes: Option<Vec<RouteName>>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(path.display().to_string(), e.to_string()))?;
        let mut config = parse(&text)?;
        if let Some(r) = routes {
            config.routes = r;
        }
        Self::from_config(config, path.parent().unwrap_or(Path::new(".")))
    }

    #[cfg(test)]
    pub fn from_str(text: &str, base: &Path) -> Result<Self, ConfigError> {
        Self::from_config(parse(text)?, base)
    }

    pub fn routes(&self) -> &[RouteName] {
        &self.config.routes
    }

    pub fn from_config(config: ExperimentConfig, base: &Path) -> Result<Self, ConfigError> {
        if config.routes.is_empty() {
            return Err(bad("routes", "at least one route is required"));
        }
        for (i, r) in config.routes.iter().enumerate() {
            if config.routes[..i].contains(r) {
                return Err(bad(format!("routes[{i}]"), format!("route `{r}` listed twice")));
            }
        }
        if !(config.tolerance > 0.0 && config.tolerance < std::f64::consts::PI) {
            return Err(bad("tolerance", format!("{} must lie in (0, π)", config.tolerance)));
        }
        let needs_torus = config.routes.iter().any(|r| *r != RouteName::Toeplitz);
        let (spec, map) = if needs_torus {
            let m =
                config.manifold.as_ref().ok_or_else(|| bad("manifold", "block is required by the requested routes"))?;
            let spec = validate_manifold(m)?;
            let block = config.map.as_ref().ok_or_else(|| bad("map", "block is required by the requested routes"))?;
            let map = load_map(block, m.dim, base, "map")?;
            (Some(spec), Some(map))
        } else {
            (None, None)
        };
        validate_truncation(&config.truncation)?;
        validate_cylinder(&config.cylinder)?;
        validate_eta(&config.eta)?;
        if let (Some(spec), Some(map)) = (&spec, &map) {
            let kernel =
                kernel_grading(spec, config.truncation.collar_cutoff, map.rank()).map(|g| g.dimension()).unwrap_or(0);
            if kernel == 0 && config.cylinder.lagrangian_phase.is_some() {
                return Err(bad(
                    "cylinder.lagrangian_phase",
                    "the boundary operator has no kernel, so no isometry is used",
                ));
            }
        }
        let circle_map = if config.routes.contains(&RouteName::Toeplitz) {
            let t =
                config.toeplitz.as_ref().ok_or_else(|| bad("toeplitz", "block is required by the toeplitz route"))?;
            if !(0.0..1.0).contains(&t.twist) {
                return Err(bad("toeplitz.twist", format!("{} must lie in [0, 1)", t.twist)));
            }
            let block = MapBlock { character: t.character.map(|k| vec![k]), file: t.file.clone(), rank: None };
            let map = load_map(&block, 1, base, "toeplitz")?;
            if (t.cutoff as i64) < map.max_frequency() + 2 {
                return Err(bad(
                    "toeplitz.cutoff",
                    format!("{} must exceed the frequency support {} by at least 2", t.cutoff, map.max_frequency()),
                ));
            }
            Some(map)
        } else {
            None
        };
        Ok(Self { config, spec, map, circle_map, base: base.to_path_buf() })
    }
}

fn validate_manifold(m: &ManifoldBlock) -> Result<TorusSpec, ConfigError> {
    if m.dim != 2 {
        return Err(bad("manifold.dim", format!("{} is not supported; the eta routes live on T²", m.dim)));
    }
    for (name, values) in [("spin", &m.spin), ("twist", &m.twist)] {
        if values.len() != m.dim {
            return Err(bad(format!("manifold.{name}"), format!("has {} entries, expected {}", values.len(), m.dim)));
        }
    }
    for (j, e) in m.spin.iter().enumerate() {
        if *e != 0.0 && *e != 0.5 {
            return Err(bad(
                format!("manifold.spin[{j}]"),
                format!("{e} is not a spin structure; entries must be 0 or 0.5"),
            ));
        }
    }
    for (j, t) in m.twist.iter().enumerate() {
        if !(0.0..1.0).contains(t) {
            return Err(bad(format!("manifold.twist[{j}]"), format!("{t} must lie in [0, 1)")));
        }
    }
    TorusSpec::new(m.spin.clone(), m.twist.clone()).map_err(|e| bad("manifold", e.to_string()))
}

fn load_map(block: &MapBlock, dim: usize, base: &Path, field: &str) -> Result<UnitaryMap, ConfigError> {
    let map = match (&block.character, &block.file) {
        (Some(_), Some(_)) => return Err(bad(field, "give either `character` or `file`, not both")),
        (None, None) => return Err(bad(field, "one of `character` or `file` is required")),
        (Some(m), None) => {
            if m.len() != dim {
                return Err(bad(format!("{field}.character"), format!("has {} entries, expected {dim}", m.len())));
            }
            UnitaryMap::character(m.clone())
        }
        (None, Some(f)) => {
            let path = base.join(f);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| bad(format!("{field}.file"), format!("{}: {e}", path.display())))?;
            let map = UnitaryMap::parse(&text)
                .map_err(|e| bad(format!("{field}.file"), format!("{}: {e}", path.display())))?;
            if map.dim() != dim {
                return Err(bad(format!("{field}.file"), format!("map has dimension {}, expected {dim}", map.dim())));
            }
            let resolution = 4 * map.max_frequency() as usize + 8;
            map.check_unitary(resolution, DEFAULT_UNITARITY_TOL)
                .map_err(|e| bad(format!("{field}.file"), format!("{}: {e}", path.display())))?;
            map
        }
    };
    if let Some(n) = block.rank {
        if n != map.rank() {
            return Err(bad(format!("{field}.rank"), format!("{n} does not match the map's rank {}", map.rank())));
        }
    }
    Ok(map)
}

fn validate_truncation(t: &TruncationBlock) -> Result<(), ConfigError> {
    for (name, v) in [("cutoff", t.cutoff), ("collar_cutoff", t.collar_cutoff), ("circle_cutoff", t.circle_cutoff)] {
        if v == 0 {
            return Err(bad(format!("truncation.{name}"), "must be at least 1"));
        }
    }
    if t.circle_points < 8 || !t.circle_points.is_multiple_of(2) {
        return Err(bad("truncation.circle_points", format!("{} must be even and at least 8", t.circle_points)));
    }
    if t.x_degree == Some(0) {
        return Err(bad("truncation.x_degree", "must be positive"));
    }
    Ok(())
}

fn validate_cylinder(c: &CylinderBlock) -> Result<(), ConfigError> {
    if !(c.length > 0.0 && c.length.is_finite()) {
        return Err(bad("cylinder.length", format!("{} must be positive", c.length)));
    }
    CutoffProfile::new(c.profile_width).map_err(|e| bad("cylinder.profile_width", e.to_string()))?;
    if let Some(phi) = c.lagrangian_phase {
        if !phi.is_finite() {
            return Err(bad("cylinder.lagrangian_phase", "must be finite"));
        }
    }
    Ok(())
}

fn validate_eta(e: &EtaBlock) -> Result<(), ConfigError> {
    if e.window.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(bad("eta.window", "values must be positive"));
    }
    if e.window.windows(2).any(|w| w[0] <= w[1]) {
        return Err(bad("eta.window", "values must be strictly decreasing"));
    }
    if e.order + 1 > e.window.len() {
        return Err(bad("eta.order", format!("order {} needs at least {} window values", e.order, e.order + 1)));
    }
    Ok(())
}
