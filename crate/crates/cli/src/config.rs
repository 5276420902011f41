//! Run configuration: a flat JSON object, overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use elastowave::dynamics::Scheme;
use elastowave::verification::{CaseKind, MmsCase};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    MeshInfo,
    Converge,
    Run,
    EnergyAudit,
    Locking,
    Infsup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    Eg1,
    Eg2,
    Eg3,
    /// Divergence-free field with λ-independent stress; the default for `locking`.
    Solenoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Cn,
    Radau2,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Cn => Scheme::CrankNicolson,
            SchemeName::Radau2 => Scheme::Radau2,
        }
    }
}

/// Configuration problem, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config: {}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Partially specified configuration. Absent keys fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub command: Option<Command>,
    pub case: Option<CaseName>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub scheme: Option<SchemeName>,
    pub n_list: Option<Vec<usize>>,
    pub t0: Option<f64>,
    pub dt: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub out: Option<PathBuf>,
    pub steps: Option<usize>,
}

impl ConfigLayer {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde names the key in "unknown field `x`"
            let key = msg.split('`').nth(1).filter(|_| msg.starts_with("unknown field")).unwrap_or("file");
            ConfigError::new(key, msg.clone())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn merge(self, over: ConfigLayer) -> Self {
        Self {
            command: over.command.or(self.command),
            case: over.case.or(self.case),
            alpha: over.alpha.or(self.alpha),
            k: over.k.or(self.k),
            scheme: over.scheme.or(self.scheme),
            n_list: over.n_list.or(self.n_list),
            t0: over.t0.or(self.t0),
            dt: over.dt.or(self.dt),
            mu: over.mu.or(self.mu),
            lambda: over.lambda.or(self.lambda),
            rho: over.rho.or(self.rho),
            out: over.out.or(self.out),
            steps: over.steps.or(self.steps),
        }
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub case: CaseName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub k: usize,
    pub scheme: SchemeName,
    pub n_list: Vec<usize>,
    pub t0: f64,
    /// `None` means `dt = 1/n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub mu: f64,
    pub lambda: f64,
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub steps: usize,
}

pub const LOCKING_LAMBDAS: [f64; 4] = [1.0, 1e2, 1e4, 1e6];

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(layer: ConfigLayer) -> Result<Self, ConfigError> {
        let command = layer.command.ok_or_else(|| ConfigError::new("command", "no command given"))?;
        let case = layer.case.unwrap_or(if command == Command::Locking { CaseName::Solenoidal } else { CaseName::Eg1 });

        let alpha = match (case, layer.alpha) {
            (CaseName::Eg2, a) => {
                let a = a.unwrap_or(2.7);
                if !(a.is_finite() && a > 1.5) {
                    return Err(ConfigError::new("alpha", format!("must exceed 1.5, got {a}")));
                }
                Some(a)
            }
            (_, None) => None,
            (_, Some(_)) => return Err(ConfigError::new("alpha", "only applies to case eg2")),
        };

        let (default_k, default_scheme) = match case {
            CaseName::Eg3 => (3, SchemeName::Radau2),
            CaseName::Solenoidal => (1, SchemeName::Cn),
            _ => (2, SchemeName::Cn),
        };
        let k = layer.k.unwrap_or(default_k);
        let scheme = layer.scheme.unwrap_or(default_scheme);
        if !(1..=3).contains(&k) {
            return Err(ConfigError::new("k", format!("degree must be 1, 2 or 3, got {k}")));
        }
        if case == CaseName::Eg3 && k != 3 {
            return Err(ConfigError::new("k", "case eg3 requires k = 3"));
        }
        if case == CaseName::Eg3 && scheme != SchemeName::Radau2 {
            return Err(ConfigError::new("scheme", "case eg3 requires the radau2 scheme"));
        }

        let n_list = layer.n_list.unwrap_or_else(|| match command {
            Command::Converge if case == CaseName::Eg3 => vec![4, 8, 16],
            Command::Converge => vec![4, 8, 16, 32],
            Command::Infsup => vec![1, 2, 4, 8],
            Command::MeshInfo => vec![4],
            Command::Run | Command::EnergyAudit | Command::Locking => vec![8],
        });
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(ConfigError::new("n_list", "mesh sizes must be positive"));
        }
        match command {
            Command::Converge => {
                if n_list.len() < 2 || n_list.windows(2).any(|w| w[1] != 2 * w[0]) {
                    return Err(ConfigError::new("n_list", "needs at least two successively doubled mesh sizes"));
                }
            }
            Command::Infsup => {}
            _ if n_list.len() != 1 => {
                return Err(ConfigError::new("n_list", "this command runs on a single mesh; use --n"));
            }
            _ => {}
        }

        let t0 = positive("t0", layer.t0.unwrap_or(1.0))?;
        let dt = layer.dt.map(|v| positive("dt", v)).transpose()?;
        let mu = positive("mu", layer.mu.unwrap_or(1.0))?;
        let rho = positive("rho", layer.rho.unwrap_or(1.0))?;
        let lambda = layer.lambda.unwrap_or(1.0);
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(ConfigError::new("lambda", format!("must be non-negative and finite, got {lambda}")));
        }
        if command == Command::Locking && lambda != 1.0 {
            return Err(ConfigError::new("lambda", "locking sweeps lambda itself"));
        }
        let steps = layer.steps.unwrap_or(100);
        if steps == 0 {
            return Err(ConfigError::new("steps", "must be at least 1"));
        }

        let cfg = Self { command, case, alpha, k, scheme, n_list, t0, dt, mu, lambda, rho, out: layer.out, steps };
        if matches!(command, Command::Converge | Command::Run | Command::Locking) {
            for &n in &cfg.n_list {
                let steps = t0 / cfg.dt(n);
                if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                    let key = if dt.is_some() { "dt" } else { "t0" };
                    return Err(ConfigError::new(key, format!("t0 = {t0} is not a whole number of steps of {}", cfg.dt(n))));
                }
            }
        }
        Ok(cfg)
    }

    pub fn dt(&self, n: usize) -> f64 {
        self.dt.unwrap_or(1.0 / n as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Self::resolve(ConfigLayer::from_json(text)?)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme.into()
    }

    /// Manufactured solution with the configured material.
    pub fn mms_case(&self) -> Result<MmsCase, ConfigError> {
        let kind = match self.case {
            CaseName::Eg1 => CaseKind::Eg1,
            CaseName::Eg2 => CaseKind::Eg2 { alpha: self.alpha.unwrap_or(2.7) },
            CaseName::Eg3 => CaseKind::Eg3,
            CaseName::Solenoidal => CaseKind::Solenoidal,
        };
        let mut case = MmsCase::builtin(kind)
            .and_then(|c| c.with_material(self.mu, self.lambda, self.rho))
            .map_err(|e| ConfigError::new("material", e.to_string()))?;
        case.t0 = self.t0;
        Ok(case)
    }
}
