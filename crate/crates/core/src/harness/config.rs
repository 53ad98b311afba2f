//! Experiment configuration and its flat `key = value` file form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::polymer::{exponent_c, BoundConstants};
use crate::tanner::{kappa_interval, solve_lambda0};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

impl OutputFormat {
    fn as_str(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub l: usize,
    pub r: usize,
    pub n: Vec<usize>,
    /// Flip probability; exclusive with `h`.
    pub p: Option<f64>,
    /// Field magnitude; exclusive with `p`.
    pub h: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Defaults to the midpoint of the admissible interval.
    pub kappa: Option<f64>,
    /// Defaults to `λ0(l, r, κ)`.
    pub lambda: Option<f64>,
    pub zeta0: f64,
    /// Slack `C` of the high-noise message bounds.
    pub slack: f64,
    pub alpha: f64,
    pub alpha_r: f64,
    pub beta: f64,
    pub max_kernel_dim: usize,
    pub expander_cap: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
    /// Record wall-clock time per trial; off keeps output byte-stable.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            l: 3,
            r: 6,
            n: vec![12],
            p: Some(0.45),
            h: None,
            trials: 10,
            seed: 1,
            kappa: None,
            lambda: None,
            zeta0: 2.0,
            slack: 10.0,
            alpha: 1.1,
            alpha_r: 0.9,
            beta: 1.1,
            max_kernel_dim: 26,
            expander_cap: crate::tanner::DEFAULT_SUBSET_CAP as u64,
            out: None,
            format: OutputFormat::Json,
            workers: None,
            timing: false,
        }
    }
}

/// Parameters derived from a validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub p: f64,
    pub h: f64,
    pub kappa: f64,
    pub lambda: f64,
    /// `None` when `κ` does not admit a positive exponent.
    pub c: Option<f64>,
    pub constants: BoundConstants,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = '{value}'")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn opt_str<T: std::fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref()
        .map_or_else(|| "none".into(), |x| format!("{x:?}"))
}

impl ExperimentConfig {
    /// Sets one key from its text form; keys mirror the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "l" => self.l = parse(key, value)?,
            "r" => self.r = parse(key, value)?,
            "n" => {
                self.n = value
                    .split(',')
                    .map(|x| parse("n", x.trim()))
                    .collect::<Result<_>>()?
            }
            "p" => self.p = parse_opt(key, value)?,
            "h" => self.h = parse_opt(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "kappa" => self.kappa = parse_opt(key, value)?,
            "lambda" => self.lambda = parse_opt(key, value)?,
            "zeta0" => self.zeta0 = parse(key, value)?,
            "slack" => self.slack = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "alpha_r" => self.alpha_r = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "max_kernel_dim" => self.max_kernel_dim = parse(key, value)?,
            "expander_cap" => self.expander_cap = parse(key, value)?,
            "out" => self.out = (value != "none").then(|| PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "workers" => self.workers = parse_opt(key, value)?,
            "timing" => self.timing = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", k + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_config_str(&text)
    }

    /// The file form; floats use the shortest round-trip representation.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let n: Vec<String> = self.n.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "l = {}", self.l);
        let _ = writeln!(s, "r = {}", self.r);
        let _ = writeln!(s, "n = {}", n.join(","));
        let _ = writeln!(s, "p = {}", opt_str(&self.p));
        let _ = writeln!(s, "h = {}", opt_str(&self.h));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "kappa = {}", opt_str(&self.kappa));
        let _ = writeln!(s, "lambda = {}", opt_str(&self.lambda));
        let _ = writeln!(s, "zeta0 = {:?}", self.zeta0);
        let _ = writeln!(s, "slack = {:?}", self.slack);
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "alpha_r = {:?}", self.alpha_r);
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let _ = writeln!(s, "max_kernel_dim = {}", self.max_kernel_dim);
        let _ = writeln!(s, "expander_cap = {}", self.expander_cap);
        let out = self
            .out
            .as_ref()
            .map_or("none".into(), |p| p.display().to_string());
        let _ = writeln!(s, "out = {out}");
        let _ = writeln!(s, "format = {}", self.format.as_str());
        let _ = writeln!(s, "workers = {}", opt_str(&self.workers));
        let _ = writeln!(s, "timing = {}", self.timing);
        s
    }

    /// Validates every parameter and derives `p`, `h`, `κ`, `λ` and `c`.
    pub fn resolve(&self) -> Result<Resolved> {
        let bad = |m: String| Err(Error::Config(m));
        if self.l < 2 || self.r <= self.l {
            return bad(format!("need 2 <= l < r, got l={} r={}", self.l, self.r));
        }
        if self.n.is_empty() {
            return bad("n list is empty".into());
        }
        for &n in &self.n {
            if n == 0 || !(n * self.l).is_multiple_of(self.r) || n < self.r {
                return bad(format!(
                    "n={n} incompatible with (l={}, r={})",
                    self.l, self.r
                ));
            }
        }
        let (p, h) = match (self.p, self.h) {
            (Some(p), None) => (p, crate::channel::half_llr(p)?),
            (None, Some(h)) if h.is_finite() && h >= 0.0 => (1.0 / (1.0 + (2.0 * h).exp()), h),
            (None, Some(h)) => return bad(format!("h={h} must be finite and nonnegative")),
            _ => return bad("exactly one of p and h must be set".into()),
        };
        let (lo, hi) = kappa_interval(self.l, self.r);
        let kappa = self.kappa.unwrap_or(0.5 * (lo + hi));
        if !(kappa > 0.0 && kappa < 1.0) {
            return bad(format!("kappa={kappa} outside (0,1)"));
        }
        let lambda = match self.lambda {
            Some(x) => x,
            None => solve_lambda0(self.l, self.r, kappa)?.lambda0,
        };
        if !(lambda > 0.0 && lambda.is_finite()) {
            return bad(format!("lambda={lambda} must be positive"));
        }
        if !(self.zeta0 > 0.0 && self.slack >= 0.0) {
            return bad("zeta0 must be positive and slack nonnegative".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        let constants =
            BoundConstants::uniform(self.l, self.r, self.alpha, self.alpha_r, self.beta);
        constants
            .validate(self.l, self.r)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Resolved {
            p,
            h,
            kappa,
            lambda,
            c: exponent_c(self.l, self.r, kappa).ok(),
            constants,
        })
    }
}
