//! Run configuration, presets and the `key = value` file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compiler::word::MAX_ORDER;
use crate::error::{Error, Result};
use crate::memory::{window_steps, MemoryConfig, MemoryMode, Quadrature};
use crate::spectral::WavenumberGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelKind {
    /// Full system on `F ∪ G`.
    GalerkinFull,
    /// Resolved modes only, no closure.
    GalerkinResolved,
    TModel,
    /// Integral memory model of the given order (0..=2).
    Order(usize),
    /// Markovian hierarchy truncated after `w_n`.
    Hierarchy(usize),
}

impl ModelKind {
    /// Highest `Z^j` needed by the model.
    pub fn max_term_order(self) -> Option<usize> {
        match self {
            ModelKind::GalerkinFull | ModelKind::GalerkinResolved => None,
            ModelKind::TModel => Some(0),
            ModelKind::Order(n) | ModelKind::Hierarchy(n) => Some(n),
        }
    }

    pub fn uses_memory(self) -> bool {
        matches!(self, ModelKind::Order(_))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::GalerkinFull => f.write_str("galerkin-full"),
            ModelKind::GalerkinResolved => f.write_str("galerkin-resolved"),
            ModelKind::TModel => f.write_str("t-model"),
            ModelKind::Order(n) => write!(f, "order-{n}"),
            ModelKind::Hierarchy(n) => write!(f, "hierarchy-{n}"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown model `{s}`"));
        match s {
            "galerkin-full" => Ok(ModelKind::GalerkinFull),
            "galerkin-resolved" => Ok(ModelKind::GalerkinResolved),
            "t-model" | "tmodel" => Ok(ModelKind::TModel),
            _ => {
                if let Some(n) = s.strip_prefix("order-") {
                    Ok(ModelKind::Order(n.parse().map_err(|_| bad())?))
                } else if let Some(n) = s.strip_prefix("hierarchy-") {
                    Ok(ModelKind::Hierarchy(n.parse().map_err(|_| bad())?))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl From<ModelKind> for String {
    fn from(m: ModelKind) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for ModelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    ModifiedEuler,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    TaylorGreen,
    Random,
}

fn parse_kebab<T: for<'de> Deserialize<'de>>(key: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn kebab<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

pub const PRESETS: [&str; 5] = ["paper-order0", "paper-order1", "paper-order2", "paper-tmodel-8", "desk-check"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub n: usize,
    pub m: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Memory truncation; `None` integrates over the whole history.
    pub t0: Option<f64>,
    pub integrator: Integrator,
    pub quadrature: Quadrature,
    pub memory_mode: MemoryMode,
    pub rebase_interval: Option<f64>,
    pub project_divergence: bool,
    pub record_interval: u64,
    pub fit_window: (f64, f64),
    pub output_dir: PathBuf,
    pub threads: usize,
    pub initial: InitialCondition,
    pub seed: u64,
    pub blowup_factor: f64,
    /// Cross-check fast paths against the reference implementations while running.
    pub verify: bool,
    pub preset: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Order(0),
            n: 8,
            m: 16,
            dt: 1e-3,
            t_end: 100.0,
            t0: Some(2.0),
            integrator: Integrator::ModifiedEuler,
            quadrature: Quadrature::Trapezoid,
            memory_mode: MemoryMode::Incremental,
            rebase_interval: None,
            project_divergence: false,
            record_interval: 100,
            fit_window: (10.0, 100.0),
            output_dir: PathBuf::from("out"),
            threads: 1,
            initial: InitialCondition::TaylorGreen,
            seed: 0,
            blowup_factor: 1e3,
            verify: false,
            preset: None,
        }
    }
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<RunConfig> {
        let base = RunConfig {
            preset: Some(name.to_string()),
            ..RunConfig::default()
        };
        let cfg = match name {
            "paper-order0" => base,
            "paper-order1" => RunConfig {
                model: ModelKind::Order(1),
                ..base
            },
            "paper-order2" => RunConfig {
                model: ModelKind::Order(2),
                t0: Some(1.0),
                t_end: 10.0,
                record_interval: 10,
                ..base
            },
            "paper-tmodel-8" => RunConfig {
                model: ModelKind::TModel,
                t0: None,
                ..base
            },
            "desk-check" => RunConfig {
                model: ModelKind::Order(1),
                n: 4,
                m: 8,
                t_end: 1.0,
                t0: Some(0.5),
                record_interval: 10,
                fit_window: (0.1, 1.0),
                verify: true,
                ..base
            },
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset `{name}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{v}`")))
        };
        let int = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| Error::Config(format!("`{key}` expects a nonnegative integer, got `{v}`")))
        };
        let flag = |v: &str| -> Result<bool> {
            match v {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(Error::Config(format!("`{key}` expects true/false, got `{v}`"))),
            }
        };
        match key {
            "model" => self.model = value.parse()?,
            "n" => {
                self.n = int(value)? as usize;
                self.m = 2 * self.n;
            }
            "m" => self.m = int(value)? as usize,
            "dt" => self.dt = num(value)?,
            "t_end" => self.t_end = num(value)?,
            "t0" => {
                self.t0 = match value {
                    "inf" | "none" | "untruncated" => None,
                    v => Some(num(v)?),
                }
            }
            "integrator" => self.integrator = parse_kebab(key, value)?,
            "quadrature" => self.quadrature = parse_kebab(key, value)?,
            "memory_mode" => self.memory_mode = parse_kebab(key, value)?,
            "rebase_interval" => self.rebase_interval = Some(num(value)?),
            "project_divergence" => self.project_divergence = flag(value)?,
            "record_interval" => self.record_interval = int(value)?,
            "fit_start" => self.fit_window.0 = num(value)?,
            "fit_end" => self.fit_window.1 = num(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "threads" => self.threads = int(value)? as usize,
            "initial" => self.initial = parse_kebab(key, value)?,
            "seed" => self.seed = int(value)?,
            "blowup_factor" => self.blowup_factor = num(value)?,
            "verify" => self.verify = flag(value)?,
            "preset" => {
                let keep_dir = self.output_dir.clone();
                *self = RunConfig::preset(value)?;
                self.output_dir = keep_dir;
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. A `preset` line is
    /// applied before every other key regardless of its position.
    pub fn from_kv_text(text: &str) -> Result<RunConfig> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = RunConfig::default();
        if let Some((_, p)) = pairs.iter().find(|(k, _)| k == "preset") {
            cfg = RunConfig::preset(p)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads either a `key = value` file or the `config` object of a run manifest.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let cfg_value = v.get("config").cloned().unwrap_or(v);
            let cfg: RunConfig =
                serde_json::from_value(cfg_value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        RunConfig::from_kv_text(&text)
    }

    /// The configuration in the `key = value` format.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        line("model", self.model.to_string());
        line("n", self.n.to_string());
        line("m", self.m.to_string());
        line("dt", format!("{:e}", self.dt));
        line("t_end", self.t_end.to_string());
        line("t0", self.t0.map_or("inf".into(), |t| t.to_string()));
        line("integrator", kebab(&self.integrator));
        line("quadrature", kebab(&self.quadrature));
        line("memory_mode", kebab(&self.memory_mode));
        if let Some(r) = self.rebase_interval {
            line("rebase_interval", r.to_string());
        }
        line("project_divergence", self.project_divergence.to_string());
        line("record_interval", self.record_interval.to_string());
        line("fit_start", self.fit_window.0.to_string());
        line("fit_end", self.fit_window.1.to_string());
        line("output_dir", self.output_dir.display().to_string());
        line("threads", self.threads.to_string());
        line("initial", kebab(&self.initial));
        line("seed", self.seed.to_string());
        line("blowup_factor", self.blowup_factor.to_string());
        line("verify", self.verify.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::Config(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        if let Some(t0) = self.t0 {
            window_steps(t0, self.dt)?;
        }
        match self.model {
            ModelKind::Order(n) if n > 2 => {
                return Err(Error::Config(format!(
                    "integral models exist for orders 0..=2, got {n}; use hierarchy-{n}"
                )))
            }
            ModelKind::Hierarchy(n) if n > MAX_ORDER => {
                return Err(Error::OrderBound {
                    requested: n,
                    bound: MAX_ORDER,
                })
            }
            _ => {}
        }
        if self.quadrature == Quadrature::Simpson && self.memory_mode != MemoryMode::Direct {
            return Err(Error::Config("simpson quadrature requires memory_mode = direct".into()));
        }
        if self.record_interval == 0 {
            return Err(Error::Config("record_interval must be at least 1".into()));
        }
        let (a, b) = self.fit_window;
        if !(a > 0.0 && b > a) {
            return Err(Error::Config(format!("fit window [{a}, {b}] must satisfy 0 < start < end")));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::Config("blowup_factor must exceed 1".into()));
        }
        if let Some(r) = self.rebase_interval {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config("rebase_interval must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<WavenumberGrid> {
        WavenumberGrid::new(self.n, self.m)
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Memory settings for integral models.
    pub fn memory_config(&self) -> Result<Option<MemoryConfig>> {
        let ModelKind::Order(order) = self.model else {
            return Ok(None);
        };
        let mut mc = MemoryConfig::new(self.t0, self.dt, order)?;
        mc.mode = self.memory_mode;
        mc.quadrature = self.quadrature;
        if let Some(r) = self.rebase_interval {
            mc.rebase_interval = r;
        }
        mc.validate()?;
        Ok(Some(mc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order0_preset_matches_defaults() {
        let c = RunConfig::preset("paper-order0").unwrap();
        assert_eq!(c.model, ModelKind::Order(0));
        assert_eq!((c.n, c.m), (8, 16));
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.t_end, 100.0);
        assert_eq!(c.t0, Some(2.0));
        assert_eq!(c.integrator, Integrator::ModifiedEuler);
        assert_eq!(c.quadrature, Quadrature::Trapezoid);
        for p in PRESETS {
            RunConfig::preset(p).unwrap().validate().unwrap();
        }
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn t0_must_be_multiple_of_dt() {
        let mut c = RunConfig::default();
        c.set("t0", "0.0015").unwrap();
        c.set("dt", "1e-3").unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("not a multiple"), "{e}");
    }

    #[test]
    fn kv_round_trip_and_unknown_keys() {
        let mut c = RunConfig::preset("paper-order2").unwrap();
        c.set("t0", "0.1").unwrap();
        c.set("integrator", "rk4").unwrap();
        c.set("quadrature", "simpson").unwrap();
        c.set("memory_mode", "direct").unwrap();
        let text = c.to_kv_text();
        let mut back = RunConfig::from_kv_text(&text).unwrap();
        back.preset = c.preset.clone();
        assert_eq!(back, c);
        assert!(RunConfig::from_kv_text("bogus = 1").is_err());
        assert!(RunConfig::from_kv_text("model order-0").is_err());
        assert!(RunConfig::from_kv_text("model = order-3").is_err());
    }

    #[test]
    fn preset_line_applies_first() {
        let c = RunConfig::from_kv_text("t_end = 5 # short\npreset = paper-order1\n").unwrap();
        assert_eq!(c.model, ModelKind::Order(1));
        assert_eq!(c.t_end, 5.0);
    }

    #[test]
    fn model_names() {
        for m in [
            ModelKind::GalerkinFull,
            ModelKind::GalerkinResolved,
            ModelKind::TModel,
            ModelKind::Order(2),
            ModelKind::Hierarchy(3),
        ] {
            assert_eq!(m.to_string().parse::<ModelKind>().unwrap(), m);
        }
        assert!("order-x".parse::<ModelKind>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::preset("desk-check").unwrap();
        let v = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&v).unwrap();
        assert_eq!(back, c);
    }
}
