//! Resolved CLI configuration with a flat key-value file format.
//!
//! Precedence is flags over config-file values over defaults; the resolved
//! config round-trips losslessly through [`CliConfig::to_kv`] /
//! [`CliConfig::from_kv`].

use std::fmt::Write as _;

use crate::dynamics::fmt_full;
use crate::error::{Error, Result};

/// Which subcommand a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Run,
    Escape,
    Spectrum,
    Flowfield,
    Cone,
    Mba,
    Verify,
}

impl Subcommand {
    pub fn id(&self) -> &'static str {
        match self {
            Subcommand::Run => "run",
            Subcommand::Escape => "escape",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Flowfield => "flowfield",
            Subcommand::Cone => "cone",
            Subcommand::Mba => "mba",
            Subcommand::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "run" => Subcommand::Run,
            "escape" => Subcommand::Escape,
            "spectrum" => Subcommand::Spectrum,
            "flowfield" => Subcommand::Flowfield,
            "cone" => Subcommand::Cone,
            "mba" => Subcommand::Mba,
            "verify" => Subcommand::Verify,
            _ => return Err(Error::Input(format!("unknown subcommand {s:?}"))),
        })
    }
}

/// Output format of report-producing subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn id(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            _ => return Err(Error::Input(format!("unknown format {s:?}; expected csv or json"))),
        })
    }
}

/// The union of all subcommand settings; unset fields fall back to defaults
/// at resolution time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliConfig {
    pub subcommand: Option<Subcommand>,
    pub problem: Option<String>,
    pub algo: Option<String>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub x0: Option<Vec<f64>>,
    /// Per-dimension `(lo, hi)` intervals.
    pub box_bounds: Option<Vec<(f64, f64)>>,
    pub sampler: Option<String>,
    pub y_max: Option<f64>,
    pub n_trials: Option<usize>,
    pub max_iters: Option<usize>,
    pub stop_tol: Option<f64>,
    pub record_every: Option<usize>,
    pub seed: Option<u64>,
    pub target: Option<Vec<f64>>,
    pub target_radius: Option<f64>,
    pub tilt: Option<Vec<f64>>,
    pub fd_step: Option<f64>,
    pub class_tol: Option<f64>,
    pub inf_lower_bound: Option<f64>,
    pub resolution: Option<Vec<usize>>,
    pub steps: Option<usize>,
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub only: Option<String>,
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
    pub strict: Option<bool>,
}

macro_rules! merge_fields {
    ($self:ident, $other:ident; $($field:ident),+ $(,)?) => {
        $(if $other.$field.is_some() { $self.$field = $other.$field.clone(); })+
    };
}

impl CliConfig {
    /// Overlay `other` onto `self`: set fields of `other` win.
    pub fn merge(&mut self, other: &CliConfig) {
        merge_fields!(self, other;
            subcommand, problem, algo, mu, alpha, tau, x0, box_bounds, sampler,
            y_max, n_trials, max_iters, stop_tol, record_every, seed, target,
            target_radius, tilt, fd_step, class_tol, inf_lower_bound, resolution,
            steps, rho, lambda, only, out, format, strict,
        );
    }

    /// Serialize to the flat `key = value` file format. Only set fields are
    /// emitted; floats use full precision so parsing is lossless.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        if let Some(v) = self.subcommand {
            put("subcommand", v.id().into());
        }
        if let Some(v) = &self.problem {
            put("problem", v.clone());
        }
        if let Some(v) = &self.algo {
            put("algo", v.clone());
        }
        if let Some(v) = self.mu {
            put("mu", fmt_full(v));
        }
        if let Some(v) = self.alpha {
            put("alpha", fmt_full(v));
        }
        if let Some(v) = self.tau {
            put("tau", fmt_full(v));
        }
        if let Some(v) = &self.x0 {
            put("x0", join_floats(v));
        }
        if let Some(v) = &self.box_bounds {
            put("box", join_box(v));
        }
        if let Some(v) = &self.sampler {
            put("sampler", v.clone());
        }
        if let Some(v) = self.y_max {
            put("y-max", fmt_full(v));
        }
        if let Some(v) = self.n_trials {
            put("n-trials", v.to_string());
        }
        if let Some(v) = self.max_iters {
            put("max-iters", v.to_string());
        }
        if let Some(v) = self.stop_tol {
            put("stop-tol", fmt_full(v));
        }
        if let Some(v) = self.record_every {
            put("record-every", v.to_string());
        }
        if let Some(v) = self.seed {
            put("seed", v.to_string());
        }
        if let Some(v) = &self.target {
            put("target", join_floats(v));
        }
        if let Some(v) = self.target_radius {
            put("target-radius", fmt_full(v));
        }
        if let Some(v) = &self.tilt {
            put("tilt", join_floats(v));
        }
        if let Some(v) = self.fd_step {
            put("fd-step", fmt_full(v));
        }
        if let Some(v) = self.class_tol {
            put("class-tol", fmt_full(v));
        }
        if let Some(v) = self.inf_lower_bound {
            put("inf-lower-bound", fmt_full(v));
        }
        if let Some(v) = &self.resolution {
            put("resolution", v.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(","));
        }
        if let Some(v) = self.steps {
            put("steps", v.to_string());
        }
        if let Some(v) = self.rho {
            put("rho", fmt_full(v));
        }
        if let Some(v) = self.lambda {
            put("lambda", fmt_full(v));
        }
        if let Some(v) = &self.only {
            put("only", v.clone());
        }
        if let Some(v) = &self.out {
            put("out", v.clone());
        }
        if let Some(v) = self.format {
            put("format", v.id().into());
        }
        if let Some(v) = self.strict {
            put("strict", v.to_string());
        }
        out
    }

    /// Parse the flat key-value format. Unknown keys are rejected so typos in
    /// config files surface instead of silently falling back to defaults.
    pub fn from_kv(text: &str) -> Result<CliConfig> {
        let mut config = CliConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Input(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "subcommand" => config.subcommand = Some(Subcommand::parse(value)?),
                "problem" => config.problem = Some(value.into()),
                "algo" => config.algo = Some(value.into()),
                "mu" => config.mu = Some(parse_f64(key, value)?),
                "alpha" => config.alpha = Some(parse_f64(key, value)?),
                "tau" => config.tau = Some(parse_f64(key, value)?),
                "x0" => config.x0 = Some(parse_floats(value)?),
                "box" => config.box_bounds = Some(parse_box(value)?),
                "sampler" => config.sampler = Some(value.into()),
                "y-max" => config.y_max = Some(parse_f64(key, value)?),
                "n-trials" => config.n_trials = Some(parse_usize(key, value)?),
                "max-iters" => config.max_iters = Some(parse_usize(key, value)?),
                "stop-tol" => config.stop_tol = Some(parse_f64(key, value)?),
                "record-every" => config.record_every = Some(parse_usize(key, value)?),
                "seed" => {
                    config.seed = Some(value.parse::<u64>().map_err(|e| {
                        Error::Input(format!("bad value for seed: {e}"))
                    })?)
                }
                "target" => config.target = Some(parse_floats(value)?),
                "target-radius" => config.target_radius = Some(parse_f64(key, value)?),
                "tilt" => config.tilt = Some(parse_floats(value)?),
                "fd-step" => config.fd_step = Some(parse_f64(key, value)?),
                "class-tol" => config.class_tol = Some(parse_f64(key, value)?),
                "inf-lower-bound" => config.inf_lower_bound = Some(parse_f64(key, value)?),
                "resolution" => {
                    config.resolution = Some(
                        value
                            .split(',')
                            .map(|s| parse_usize("resolution", s.trim()))
                            .collect::<Result<_>>()?,
                    )
                }
                "steps" => config.steps = Some(parse_usize(key, value)?),
                "rho" => config.rho = Some(parse_f64(key, value)?),
                "lambda" => config.lambda = Some(parse_f64(key, value)?),
                "only" => config.only = Some(value.into()),
                "out" => config.out = Some(value.into()),
                "format" => config.format = Some(OutputFormat::parse(value)?),
                "strict" => {
                    config.strict = Some(value.parse::<bool>().map_err(|e| {
                        Error::Input(format!("bad value for strict: {e}"))
                    })?)
                }
                _ => return Err(Error::Input(format!("unknown config key {key:?}"))),
            }
        }
        Ok(config)
    }
}

/// Parse a comma-separated float list such as `0,0.5`.
pub fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad float {part:?}: {e}")))
        })
        .collect()
}

/// Parse per-dimension intervals such as `-1:1,-1:1`.
pub fn parse_box(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Input(format!("bad interval {part:?}: expected lo:hi")))?;
            let lo = lo
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad interval bound {lo:?}: {e}")))?;
            let hi = hi
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad interval bound {hi:?}: {e}")))?;
            Ok((lo, hi))
        })
        .collect()
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| fmt_full(*x)).collect::<Vec<_>>().join(",")
}

fn join_box(v: &[(f64, f64)]) -> String {
    v.iter()
        .map(|(lo, hi)| format!("{}:{}", fmt_full(*lo), fmt_full(*hi)))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|e| Error::Input(format!("bad value for {key}: {e}")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|e| Error::Input(format!("bad value for {key}: {e}")))
}
