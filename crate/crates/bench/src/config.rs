//! Flat `key = value` config files and the flag > file > default merge.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use balm::{Algorithm, SolverConfig, StopRule};

use crate::error::{BenchError, Result};

const GLOBAL_KEYS: &[&str] = &[
    "n",
    "m",
    "s",
    "seed",
    "algo",
    "beta",
    "delta",
    "alpha",
    "r",
    "s-step",
    "tol",
    "max-iter",
    "stop-rule",
    "out",
    "jobs",
];
const PER_ALGORITHM_KEYS: &[&str] = &["beta", "delta", "alpha", "r", "s-step"];

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Parses `key = value` lines; `#` starts a comment. Keys are
    /// case-insensitive and `_` is accepted for `-`. Besides the global
    /// keys, `<algorithm>.<param>` sets a per-algorithm override.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BenchError::usage(format!("config line {}: expected 'key = value'", i + 1)))?;
            let key = normalize(key);
            let valid = match key.split_once('.') {
                Some((alg, param)) => alg.parse::<Algorithm>().is_ok() && PER_ALGORITHM_KEYS.contains(&param),
                None => GLOBAL_KEYS.contains(&key.as_str()),
            };
            if !valid {
                return Err(BenchError::usage(format!("config line {}: unknown key '{key}'", i + 1)));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| BenchError::usage(format!("config key '{key}': bad value '{v}': {e}")))
            })
            .transpose()
    }
}

/// Flag value if given, else the config-file value, else `None`.
pub fn resolve<T>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

/// Comma-separated values; integer lists also accept half-open ranges
/// `a..b`.
pub fn parse_list<T>(text: &str) -> Result<Vec<T>>
where
    T: FromStr + TryFrom<u64>,
    T::Err: Display,
{
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = item.split_once("..") {
            let bound = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| BenchError::usage(format!("bad range bound '{s}': {e}")))
            };
            let (lo, hi) = (bound(lo)?, bound(hi)?);
            for v in lo..hi {
                out.push(T::try_from(v).map_err(|_| BenchError::usage(format!("range value {v} out of bounds")))?);
            }
        } else {
            out.push(
                item.parse::<T>()
                    .map_err(|e| BenchError::usage(format!("bad list entry '{item}': {e}")))?,
            );
        }
    }
    Ok(out)
}

pub fn parse_algorithms(text: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(Algorithm::ALL);
            continue;
        }
        out.push(
            item.parse::<Algorithm>()
                .map_err(|e| BenchError::usage(e.to_string()))?,
        );
    }
    out.dedup();
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopRuleKind {
    #[default]
    RelativeError,
    FixedPoint,
}

impl FromStr for StopRuleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ree" | "rel" | "relative-error" => Ok(StopRuleKind::RelativeError),
            "fp" | "fixed-point" => Ok(StopRuleKind::FixedPoint),
            other => Err(format!("unknown stop rule '{other}' (expected ree or fp)")),
        }
    }
}

impl StopRuleKind {
    pub fn with_tol(self, tol: f64) -> StopRule {
        match self {
            StopRuleKind::RelativeError => StopRule::RelativeError(tol),
            StopRuleKind::FixedPoint => StopRule::FixedPointResidual(tol),
        }
    }
}

/// Explicit solver parameters layered over an algorithm's tuned defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub s_step: Option<f64>,
}

impl ParamOverrides {
    /// Per-algorithm keys from the config file (`lalm.beta = …`).
    pub fn from_config(cfg: &ConfigFile, alg: Algorithm) -> Result<Self> {
        let key = |p: &str| format!("{}.{p}", alg.name());
        Ok(Self {
            beta: cfg.get(&key("beta"))?,
            delta: cfg.get(&key("delta"))?,
            alpha: cfg.get(&key("alpha"))?,
            r: cfg.get(&key("r"))?,
            s_step: cfg.get(&key("s-step"))?,
        })
    }

    /// Values in `self` win over those in `base`.
    pub fn over(self, base: ParamOverrides) -> Self {
        Self {
            beta: self.beta.or(base.beta),
            delta: self.delta.or(base.delta),
            alpha: self.alpha.or(base.alpha),
            r: self.r.or(base.r),
            s_step: self.s_step.or(base.s_step),
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;

pub fn solver_config(
    alg: Algorithm,
    rho: f64,
    params: &ParamOverrides,
    stop: StopRule,
    max_iter: usize,
) -> SolverConfig {
    let base = alg.tuned_config(rho);
    SolverConfig {
        beta: params.beta.unwrap_or(base.beta),
        delta: params.delta.unwrap_or(base.delta),
        alpha: params.alpha.unwrap_or(base.alpha),
        r: params.r.unwrap_or(base.r),
        s: params.s_step.unwrap_or(base.s),
        stop_rule: stop,
        max_iter,
        ..base
    }
}
