//! Run configuration: a TOML file with one section per subcommand, then
//! command-line overrides. Everything is validated before any computation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sohkit::kinetic::LawSpec;
use sohkit::particles::InitialCondition;

use crate::error::CliError;

/// A scalar or an inclusive sweep `a:b:step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Value(f64),
    Text(String),
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            RangeSpec::Value(v) => finite(*v, "range value").map(|v| vec![v]),
            RangeSpec::Text(s) => parse_range(s),
        }
    }
}

/// Parses `v` or `a:b:step` (inclusive of b up to rounding).
pub fn parse_range(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |t: &str| -> Result<f64, CliError> {
        let v: f64 = t.parse().map_err(|_| CliError::config(format!("bad number '{t}' in range '{s}'")))?;
        finite(v, "range bound")
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (a, b, h) = (num(a)?, num(b)?, num(step)?);
            if !(h > 0.0) || b < a {
                return Err(CliError::config(format!("range '{s}' needs a <= b and step > 0")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize + 1;
            if n > 1_000_000 {
                return Err(CliError::config(format!("range '{s}' has {n} points (limit 10^6)")));
            }
            Ok((0..n).map(|i| a + i as f64 * h).collect())
        }
        _ => Err(CliError::config(format!("range '{s}' is not of the form v or a:b:step"))),
    }
}

fn finite(v: f64, what: &str) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{what} must be finite, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VicsekParams {
    pub n: usize,
    pub l: f64,
    pub r: f64,
    pub nu: f64,
    pub tau: f64,
    pub dt: f64,
    pub d: usize,
    pub t_end: f64,
    /// Record every `stride` steps.
    pub stride: u64,
    pub initial: InitialCondition,
    /// Also write the final state as a binary snapshot.
    pub snapshot: bool,
}

impl Default for VicsekParams {
    fn default() -> Self {
        Self {
            n: 1000,
            l: 10.0,
            r: 1.0,
            nu: 1.0,
            tau: 0.1,
            dt: 0.01,
            d: 3,
            t_end: 10.0,
            stride: 10,
            initial: InitialCondition::Uniform,
            snapshot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KineticInitial {
    /// rho (1 + amplitude P_mode(cos theta)) on S^2, rho (1 + amplitude cos(mode theta)) on S^1.
    Perturbed { mode: usize, amplitude: f64 },
    Vmf {
        kappa: f64,
        #[serde(default)]
        angle: f64,
    },
    /// Density values at the collocation angles, scaled to mass rho.
    Nodes { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticParams {
    pub d: usize,
    pub modes: usize,
    pub rho: f64,
    pub law: LawSpec,
    pub initial: KineticInitial,
    pub t_end: f64,
    pub dt0: f64,
    pub dt_max: f64,
    pub record_every: usize,
}

impl Default for KineticParams {
    fn default() -> Self {
        Self {
            d: 3,
            modes: 32,
            rho: 1.0,
            law: LawSpec::Linear { nu0: 1.0, tau0: 1.0 },
            initial: KineticInitial::Perturbed { mode: 1, amplitude: 0.1 },
            t_end: 10.0,
            dt0: 1e-3,
            dt_max: 0.05,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GciModel {
    Sphere,
    Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GciParams {
    pub model: GciModel,
    pub d: usize,
    pub kappa: RangeSpec,
    /// Finite elements of the base grid.
    pub n: usize,
}

impl Default for GciParams {
    fn default() -> Self {
        Self { model: GciModel::Sphere, d: 3, kappa: RangeSpec::Value(1.0), n: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseParams {
    pub law: LawSpec,
    pub d: usize,
    pub rho: RangeSpec,
    pub kappa_max: f64,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self {
            law: LawSpec::Linear { nu0: 1.0, tau0: 1.0 },
            d: 3,
            rho: RangeSpec::Text("0.5:6:0.1".into()),
            kappa_max: 200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientTable {
    /// kappa, Z, c1
    Vmf,
    /// SOH coefficients from the sphere collision invariant.
    Soh,
    /// SOHB coefficients from the body collision invariant.
    Sohb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientParams {
    pub table: CoefficientTable,
    pub d: usize,
    pub kappa: RangeSpec,
}

impl Default for CoefficientParams {
    fn default() -> Self {
        Self { table: CoefficientTable::Vmf, d: 3, kappa: RangeSpec::Text("0.5:10:0.5".into()) }
    }
}

/// Contents of a configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(rename = "simulate-vicsek")]
    pub simulate_vicsek: Option<VicsekParams>,
    #[serde(rename = "simulate-body")]
    pub simulate_body: Option<VicsekParams>,
    #[serde(rename = "solve-kinetic")]
    pub solve_kinetic: Option<KineticParams>,
    #[serde(rename = "compute-gci")]
    pub compute_gci: Option<GciParams>,
    #[serde(rename = "phase-diagram")]
    pub phase_diagram: Option<PhaseParams>,
    pub coefficients: Option<CoefficientParams>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("config {}: {}", path.display(), e.message())))
    }
}

/// Applies `--law` and `--law-param key=value` overrides to a law.
pub fn override_law(base: &LawSpec, id: Option<&str>, params: &[String]) -> Result<LawSpec, CliError> {
    let mut v = match id {
        Some(id) if Some(id) != law_id(base).as_deref() => serde_json::json!({ "law": id }),
        _ => serde_json::to_value(base).expect("law specs serialize"),
    };
    for p in params {
        let (k, val) =
            p.split_once('=').ok_or_else(|| CliError::config(format!("law parameter '{p}' is not key=value")))?;
        let x: f64 = val.trim().parse().map_err(|_| CliError::config(format!("law parameter '{p}' is not numeric")))?;
        v[k.trim()] = serde_json::json!(x);
    }
    serde_json::from_value(v).map_err(|e| CliError::config(format!("law: {e}")))
}

fn law_id(l: &LawSpec) -> Option<String> {
    serde_json::to_value(l).ok()?.get("law")?.as_str().map(str::to_string)
}

/// Parses `uniform`, `aligned` or `vmf:KAPPA`.
pub fn parse_particle_initial(s: &str) -> Result<InitialCondition, CliError> {
    match s.split_once(':') {
        None if s == "uniform" => Ok(InitialCondition::Uniform),
        None if s == "aligned" => Ok(InitialCondition::Aligned),
        Some(("vmf", k)) => Ok(InitialCondition::Vmf { kappa: parse_num(k, s)? }),
        _ => Err(CliError::config(format!("initial condition '{s}' is not uniform | aligned | vmf:KAPPA"))),
    }
}

/// Parses `perturbed:MODE:AMPLITUDE`, `vmf:KAPPA[:ANGLE]` or `nodes:FILE`.
pub fn parse_kinetic_initial(s: &str) -> Result<KineticInitial, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["perturbed", m, a] => Ok(KineticInitial::Perturbed {
            mode: m.parse().map_err(|_| CliError::config(format!("bad mode in '{s}'")))?,
            amplitude: parse_num(a, s)?,
        }),
        ["vmf", k] => Ok(KineticInitial::Vmf { kappa: parse_num(k, s)?, angle: 0.0 }),
        ["vmf", k, a] => Ok(KineticInitial::Vmf { kappa: parse_num(k, s)?, angle: parse_num(a, s)? }),
        ["nodes", path] => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read node values {path}: {e}")))?;
            let values = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| parse_num(t, path))
                .collect::<Result<Vec<f64>, _>>()?;
            Ok(KineticInitial::Nodes { values })
        }
        _ => Err(CliError::config(format!(
            "initial condition '{s}' is not perturbed:MODE:AMP | vmf:KAPPA[:ANGLE] | nodes:FILE"
        ))),
    }
}

fn parse_num(t: &str, ctx: &str) -> Result<f64, CliError> {
    t.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::config(format!("bad number '{t}' in '{ctx}'")))
}
