//! Flat `key=value` experiment configuration.
//!
//! ```text
//! # reference experiment
//! e_max = 9
//! mu = 2/3
//! gamma = 0.5, 1, 2, 4, 8
//! z = 1,2,3,4
//! ```
//!
//! Lists are comma separated, `mu` also accepts a fraction, `#` starts a
//! comment. Command-line flags override values read from a file.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::field::PrimeField;
use crate::latency::SystemParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub u: usize,
    pub m: usize,
    pub r: usize,
    pub mu: f64,
    pub tau: f64,
    pub eta: f64,
    pub e_max: usize,
    pub z: Vec<usize>,
    pub gamma: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub upload: bool,
    pub out: Option<PathBuf>,
    /// Field modulus for the functional check.
    pub q: u64,
    /// Single-plan overrides for `verify`, `optimize` and `schedule-dump`.
    pub e: Option<usize>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub t: Option<usize>,
}

impl Default for ExperimentConfig {
    /// The published 9-node setup with `10^4` trials per estimate.
    fn default() -> Self {
        Self {
            u: 10,
            m: 600,
            r: 50,
            mu: 2.0 / 3.0,
            tau: 0.0005,
            eta: 0.8,
            e_max: 9,
            z: vec![1, 2, 3, 4],
            gamma: vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            trials: 10_000,
            seed: 1,
            upload: true,
            out: None,
            q: PrimeField::MERSENNE_31,
            e: None,
            n: None,
            p: None,
            t: None,
        }
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if b == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(a / b)
        }
        None => s.parse().map_err(|_| format!("expected a number, got {s:?}")),
    }
}

/// Comma-separated list; an empty string is an empty list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|_| format!("bad list item {:?}", item.trim()))
        })
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got {s:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("expected a number, got {s:?}"))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "u" => self.u = parse_num(v)?,
            "m" => self.m = parse_num(v)?,
            "r" => self.r = parse_num(v)?,
            "mu" => self.mu = parse_fraction(v)?,
            "tau" => self.tau = parse_num(v)?,
            "eta" => self.eta = parse_num(v)?,
            "e_max" => self.e_max = parse_num(v)?,
            "z" => self.z = parse_list(v)?,
            "gamma" => self.gamma = parse_list(v)?,
            "trials" => self.trials = parse_num(v)?,
            "seed" => self.seed = parse_num(v)?,
            "upload" => self.upload = parse_bool(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "q" => self.q = parse_num(v)?,
            "e" => self.e = Some(parse_num(v)?),
            "n" => self.n = Some(parse_num(v)?),
            "p" => self.p = Some(parse_num(v)?),
            "t" => self.t = Some(parse_num(v)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Parses file contents on top of the defaults. `origin` names the
    /// source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Parse {
                path: origin.to_string(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Checks everything that does not depend on a particular plan.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if let Some(g) = self.gamma.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return invalid(format!("gamma must be nonnegative, got {g}"));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        if PrimeField::new(self.q).is_err() {
            return invalid(format!("q = {} is not a prime below 2^32", self.q));
        }
        if let (Some(e), Some(n)) = (self.e, self.n) {
            if n > e {
                return invalid(format!("k ≤ n ≤ e violated: n = {n} > e = {e}"));
            }
        }
        if let (Some(e), Some(p)) = (self.e, self.p) {
            if p == 0 || p > e {
                return invalid(format!("storage p = {p} must satisfy 1 <= p <= e = {e}"));
            }
        }
        self.params(0.0, 0)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn params(&self, gamma: f64, z: usize) -> SystemParams<f64> {
        SystemParams {
            u: self.u,
            m: self.m,
            r: self.r,
            mu: self.mu,
            gamma,
            tau: self.tau,
            eta: self.eta,
            e_max: self.e_max,
            z,
            upload: self.upload,
        }
    }
}
