//! Run configuration: TOML or JSON, strict schema, re-validated against the
//! core constructors at load time.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use torus_psido::contour::{ContourSpec, QuadratureSpec};
use torus_psido::funcalc::HoloFunction;
use torus_psido::{Complex64, Family, SectorSpec, SymbolField, TorusGrid};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub sector: SectorConfig,
    #[serde(default)]
    pub contour: ContourConfig,
    #[serde(default)]
    pub expansion: ExpansionConfig,
    #[serde(default)]
    pub function: Option<FunctionConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 1, size: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolConfig {
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    BesselPower {
        m: f64,
    },
    LaplacePlusOne,
    PerturbedElliptic {
        m: f64,
        rho: f64,
        #[serde(default)]
        delta: f64,
        eps0: f64,
    },
    ZeroOrder {
        eps0: f64,
    },
    NegativeOrder {
        order: f64,
        eps0: f64,
    },
}

impl SymbolConfig {
    pub fn family(&self) -> Family {
        match *self {
            SymbolConfig::Constant { re, im } => Family::Constant(Complex64::new(re, im)),
            SymbolConfig::BesselPower { m } => Family::BesselPower(m),
            SymbolConfig::LaplacePlusOne => Family::LaplacePlusOne,
            SymbolConfig::PerturbedElliptic { m, rho, delta, eps0 } => Family::PerturbedElliptic { m, rho, delta, eps0 },
            SymbolConfig::ZeroOrder { eps0 } => Family::ZeroOrder { eps0 },
            SymbolConfig::NegativeOrder { order, eps0 } => Family::NegativeOrder { order, eps0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorConfig {
    pub theta0: f64,
    pub epsilon: f64,
}

impl Default for SectorConfig {
    fn default() -> Self {
        SectorConfig { theta0: 0.75 * PI, epsilon: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourKindName {
    Keyhole,
    Exponential,
    Loop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourConfig {
    /// `None` picks by function: exponential for exp, a fitted loop for log,
    /// the keyhole otherwise.
    pub kind: Option<ContourKindName>,
    pub epsilon: f64,
    /// Outer truncation radius; `None` picks it from the tail tolerance.
    pub r_max: Option<f64>,
    /// Ray angle of the exponential contour.
    pub angle: f64,
    /// Loop center `[re, im]`; with `radius` unset the loop is fitted to the spectrum.
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub nodes_per_ray: usize,
    pub nodes_on_circle: usize,
    pub tail_tol: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        ContourConfig {
            kind: None,
            epsilon: 0.25,
            r_max: None,
            angle: PI / 4.0,
            center: None,
            radius: None,
            nodes_per_ray: q.nodes_per_ray,
            nodes_on_circle: q.nodes_on_circle,
            tail_tol: q.tail_tol,
        }
    }
}

impl ContourConfig {
    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { nodes_per_ray: self.nodes_per_ray, nodes_on_circle: self.nodes_on_circle, tail_tol: self.tail_tol }
    }

    pub fn kind_for(&self, f: Option<&HoloFunction>) -> ContourKindName {
        self.kind.unwrap_or(match f {
            Some(HoloFunction::ExpScaled(_)) => ContourKindName::Exponential,
            Some(HoloFunction::Log) => ContourKindName::Loop,
            _ => ContourKindName::Keyhole,
        })
    }

    /// The contour for `kind`, or `None` for a loop that must be fitted to the spectrum.
    pub fn spec(&self, kind: ContourKindName) -> Result<Option<ContourSpec>> {
        let field = |e: torus_psido::Error| CliError::config("contour", e.to_string());
        Ok(match kind {
            ContourKindName::Keyhole => Some(ContourSpec::keyhole(self.epsilon, self.r_max).map_err(field)?),
            ContourKindName::Exponential => Some(ContourSpec::exponential(self.epsilon, self.r_max, self.angle).map_err(field)?),
            ContourKindName::Loop => match (self.center, self.radius) {
                (Some([re, im]), Some(r)) => Some(ContourSpec::finite_loop(Complex64::new(re, im), r).map_err(field)?),
                (None, None) => None,
                _ => return Err(CliError::config("contour", "loop needs both center and radius, or neither")),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    /// Highest correction grade kept on the symbol side (total eta-derivative count).
    pub grade: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { k: 2, j: 2, grade: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

/// `tag` is one of power, exp, log, rational, power_log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub tag: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl FunctionConfig {
    /// Parse the `TAG:key=value,key=value` flag syntax. List values use `;`,
    /// e.g. `rational:num=1;2,den=1;0;1`.
    pub fn parse_flag(s: &str) -> Result<Self> {
        let (tag, rest) = s.split_once(':').unwrap_or((s, ""));
        let tag = tag.trim();
        if tag.is_empty() {
            return Err(CliError::config("f", "empty function tag"));
        }
        let mut params = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::config("f", format!("expected key=value, got {kv:?}")))?;
            let v = v.trim();
            let val = v.parse::<f64>().map(ParamValue::Number).unwrap_or_else(|_| ParamValue::Text(v.to_string()));
            params.insert(k.trim().to_string(), val);
        }
        let f = FunctionConfig { tag: tag.to_string(), params };
        f.holo()?;
        Ok(f)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Number(v)) => Ok(Some(*v)),
            Some(ParamValue::Text(t)) => t.trim().parse().map(Some).map_err(|_| CliError::config(format!("function.params.{key}"), format!("{t:?} is not a number"))),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let bad = |t: &str| CliError::config(format!("function.params.{key}"), format!("{t:?} is not a ';'-separated list of numbers"));
        match self.params.get(key) {
            None => Err(CliError::config(format!("function.params.{key}"), "missing")),
            Some(ParamValue::Number(v)) => Ok(vec![*v]),
            Some(ParamValue::Text(t)) => t.split(';').map(|x| x.trim().parse::<f64>().map_err(|_| bad(t))).collect(),
        }
    }

    fn only(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(CliError::config(format!("function.params.{k}"), format!("unknown parameter for {}", self.tag))),
            None => Ok(()),
        }
    }

    fn exponent(&self) -> Result<Complex64> {
        let re = self.num("z")?.ok_or_else(|| CliError::config("function.params.z", "missing"))?;
        Ok(Complex64::new(re, self.num("z_im")?.unwrap_or(0.0)))
    }

    pub fn holo(&self) -> Result<HoloFunction> {
        let f = match self.tag.as_str() {
            "power" => {
                self.only(&["z", "z_im"])?;
                HoloFunction::Power(self.exponent()?)
            }
            "power_log" => {
                self.only(&["z", "z_im"])?;
                HoloFunction::PowerLog(self.exponent()?)
            }
            "exp" => {
                self.only(&["t"])?;
                HoloFunction::ExpScaled(self.num("t")?.unwrap_or(1.0))
            }
            "log" => {
                self.only(&[])?;
                HoloFunction::Log
            }
            "rational" => {
                self.only(&["num", "den"])?;
                let c = |v: Vec<f64>| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
                HoloFunction::Rational { num: c(self.list("num")?), den: c(self.list("den")?) }
            }
            other => return Err(CliError::config("function.tag", format!("unknown function {other:?}"))),
        };
        f.validate().map_err(|e| CliError::config("function", e.to_string()))?;
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub lambda_moduli: Vec<f64>,
    pub t: Vec<f64>,
    /// Zeta arguments as `[re, im]`.
    pub z: Vec<[f64; 2]>,
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { lambda_moduli: log_spaced(10.0, 1e4, 13), t: log_spaced(0.05, 0.4, 8), z: vec![[2.0, 0.0]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub trace_identity: f64,
    pub cross_method: f64,
    pub group_law: f64,
    pub semigroup: f64,
    pub analyticity: f64,
    pub growth: f64,
    pub residual_slope: f64,
    pub heat_lattice: f64,
    pub heat_order_gain: f64,
    pub zeta: f64,
    pub szego_lu: f64,
    pub szego_control: f64,
    pub adjoint: f64,
    /// Allowed max/min spread of a norm sequence that should stay bounded.
    pub bounded_ratio: f64,
    /// Relative margin for "strictly smaller" comparisons, so that roundoff cannot decide them.
    pub strict_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trace_identity: 1e-12,
            cross_method: 1e-6,
            group_law: 1e-6,
            semigroup: 1e-7,
            analyticity: 1e-5,
            growth: 4.0,
            residual_slope: -1.0,
            heat_lattice: 1e-9,
            heat_order_gain: 1.0,
            zeta: 1e-6,
            szego_lu: 1e-8,
            szego_control: 1e-10,
            adjoint: 1e-12,
            bounded_ratio: 2.0,
            strict_margin: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::config("format", format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: "out".into(), formats: vec![Format::Csv, Format::Json] }
    }
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(s).map_err(|e| CliError::Schema(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(s).map_err(|e| CliError::Schema(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// `.json` files are read as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    /// A config with every default and the given symbol.
    pub fn with_symbol(symbol: SymbolConfig) -> Self {
        RunConfig {
            grid: GridConfig::default(),
            symbol,
            sector: SectorConfig::default(),
            contour: ContourConfig::default(),
            expansion: ExpansionConfig::default(),
            function: None,
            sweep: SweepConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.n, self.grid.size).map_err(|e| CliError::config("grid", e.to_string()))
    }

    pub fn symbol_field(&self) -> Result<Arc<SymbolField>> {
        let g = self.grid()?;
        SymbolField::family(&g, self.symbol.family()).map(Arc::new).map_err(|e| CliError::config("symbol", e.to_string()))
    }

    pub fn sector(&self) -> Result<SectorSpec> {
        SectorSpec::keyhole(self.sector.theta0, self.sector.epsilon).map_err(|e| CliError::config("sector", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.symbol_field()?;
        self.sector()?;
        let f = self.function.as_ref().map(|f| f.holo()).transpose()?;
        self.contour.spec(self.contour.kind_for(f.as_ref()))?;
        if self.contour.nodes_per_ray < 8 || self.contour.nodes_on_circle < 8 {
            return Err(CliError::config("contour", "at least 8 nodes per segment"));
        }
        if !(self.contour.tail_tol > 0.0) {
            return Err(CliError::config("contour.tail_tol", "must be positive"));
        }
        let e = &self.expansion;
        if e.k > 3 || e.j > 3 {
            return Err(CliError::config("expansion", "K and J are limited to 3"));
        }
        if e.grade > e.k.min(e.j) {
            return Err(CliError::config("expansion.grade", format!("grade {} exceeds min(K, J) = {}", e.grade, e.k.min(e.j))));
        }
        let s = &self.sweep;
        if s.lambda_moduli.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(CliError::config("sweep.lambda_moduli", "moduli must be positive and finite"));
        }
        if s.t.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(CliError::config("sweep.t", "t must lie in (0, 1]"));
        }
        if s.z.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::config("sweep.z", "z must be finite"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("trace_identity", t.trace_identity),
            ("cross_method", t.cross_method),
            ("group_law", t.group_law),
            ("semigroup", t.semigroup),
            ("analyticity", t.analyticity),
            ("growth", t.growth),
            ("heat_lattice", t.heat_lattice),
            ("zeta", t.zeta),
            ("szego_lu", t.szego_lu),
            ("szego_control", t.szego_control),
            ("adjoint", t.adjoint),
            ("bounded_ratio", t.bounded_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("tolerances.{name}"), "must be positive and finite"));
            }
        }
        if !t.residual_slope.is_finite() || !t.heat_order_gain.is_finite() || !(t.strict_margin >= 0.0) {
            return Err(CliError::config("tolerances", "slope, gain and margin must be finite"));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::config("output.formats", "at least one format"));
        }
        Ok(())
    }
}
