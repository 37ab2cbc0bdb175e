//! Scenario configuration: a TOML file with `[path]`, `[controller]`,
//! `[disturbance]` and `[sim]` sections, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ismtrack::controller::{ControlLaw, ParamOverrides};
use ismtrack::plant::{DisturbanceBounds, DisturbanceKind, Integrator};
use serde::Deserialize;

pub const DEFAULT_RADIUS: f64 = 0.8;
pub const DEFAULT_SPEED: f64 = 0.8;
pub const DEFAULT_BOUND: f64 = 0.1;
pub const DEFAULT_OUT_DIR: &str = "ismtrack-out";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub path: PathSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    /// Built-in name or path file, relative to the config file.
    pub spec: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub radius: Option<f64>,
    pub speed: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub y_intercept: Option<f64>,
    pub phi: Option<f64>,
    pub law: Option<ControlLaw>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub d1_bar: Option<f64>,
    pub d2_bar: Option<f64>,
    pub signal: Option<DisturbanceKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub integrator: Option<Integrator>,
    /// `[ỹ₀, θ̃₀ in degrees]` pairs.
    pub starts: Option<Vec<[f64; 2]>>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(file: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
        // relative path files resolve against the config location
        if let Some(spec) = &cfg.path.spec {
            if ismtrack::refpath::builtin(spec).is_none() && Path::new(spec).is_relative() {
                if let Some(dir) = file.parent() {
                    cfg.path.spec = Some(dir.join(spec).to_string_lossy().into_owned());
                }
            }
        }
        Ok(cfg)
    }
}

/// Model quantities after merging flags over the file.
#[derive(Debug, Clone)]
pub struct Model {
    pub bounds: DisturbanceBounds,
    pub r: f64,
    pub v: f64,
    pub overrides: ParamOverrides,
}

/// Flag values for the model; `None` falls back to the file, then defaults.
#[derive(Debug, Clone, Default)]
pub struct ModelFlags {
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub radius: Option<f64>,
    pub speed: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub y_intercept: Option<f64>,
    pub phi: Option<f64>,
    pub law: Option<ControlLaw>,
}

pub fn resolve_model(flags: &ModelFlags, file: &FileConfig) -> anyhow::Result<Model> {
    let c = &file.controller;
    let d = &file.disturbance;
    let d1 = flags.d1.or(d.d1_bar).unwrap_or(DEFAULT_BOUND);
    let d2 = flags.d2.or(d.d2_bar).unwrap_or(DEFAULT_BOUND);
    let bounds = DisturbanceBounds::new(d1, d2)?;
    let r = flags.radius.or(c.radius).unwrap_or(DEFAULT_RADIUS);
    let v = flags.speed.or(c.speed).unwrap_or(DEFAULT_SPEED);
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if !positive(r) || !positive(v) {
        bail!("radius and speed must be positive (got R = {r}, v = {v})");
    }
    Ok(Model {
        bounds,
        r,
        v,
        overrides: ParamOverrides {
            p: flags.p.or(c.p),
            q: flags.q.or(c.q),
            y_intercept: flags.y_intercept.or(c.y_intercept),
            phi: flags.phi.or(c.phi),
            law: flags.law.or(c.law),
        },
    })
}

/// `"a,b"` as two floats.
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((f(a)?, f(b)?))
}

/// `"a,b,c"` as three floats.
pub fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((f(parts[0])?, f(parts[1])?, f(parts[2])?))
}
