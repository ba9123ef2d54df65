//! Run configuration and its flat `key = value` text format.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored. Keys are parsed case-sensitively, unknown or
//! duplicated keys are rejected. The same format is echoed back as the run
//! manifest, so a manifest is itself a valid config (deterministic replay).

use std::fmt::Write as _;

use crate::error::{Result, SolverError};
use crate::euler::TwoPointFlux;
use crate::limiter::{Pipeline, PressureMode};

/// Built-in benchmark cases plus a free-stream placeholder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseName {
    DensityWave,
    Khi,
    Sedov,
    Jet,
    Custom,
}

impl CaseName {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "density_wave" => CaseName::DensityWave,
            "khi" => CaseName::Khi,
            "sedov" => CaseName::Sedov,
            "jet" => CaseName::Jet,
            "custom" => CaseName::Custom,
            _ => return Err(SolverError::Config(format!("unknown case '{s}'"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseName::DensityWave => "density_wave",
            CaseName::Khi => "khi",
            CaseName::Sedov => "sedov",
            CaseName::Jet => "jet",
            CaseName::Custom => "custom",
        }
    }
}

pub fn parse_pipeline(s: &str) -> Result<Pipeline> {
    Ok(match s {
        "off" => Pipeline::Off,
        "global" => Pipeline::GlobalOnly,
        "A" => Pipeline::A,
        "B" => Pipeline::B,
        "C" => Pipeline::C,
        _ => return Err(SolverError::Config(format!("unknown pipeline '{s}'"))),
    })
}

pub fn pipeline_name(p: Pipeline) -> &'static str {
    match p {
        Pipeline::Off => "off",
        Pipeline::GlobalOnly => "global",
        Pipeline::A => "A",
        Pipeline::B => "B",
        Pipeline::C => "C",
    }
}

pub fn parse_pressure(s: &str) -> Result<PressureMode> {
    Ok(match s {
        "sharp" => PressureMode::Sharp,
        "cautious" => PressureMode::Cautious,
        _ => return Err(SolverError::Config(format!("unknown pressure mode '{s}'"))),
    })
}

pub fn parse_volume_flux(s: &str) -> Result<TwoPointFlux> {
    Ok(match s {
        "central" => TwoPointFlux::Central,
        "ranocha" => TwoPointFlux::Ranocha,
        "chandrashekar" => TwoPointFlux::Chandrashekar,
        _ => return Err(SolverError::Config(format!("unknown volume flux '{s}'"))),
    })
}

fn volume_flux_name(f: TwoPointFlux) -> &'static str {
    match f {
        TwoPointFlux::Central => "central",
        TwoPointFlux::Ranocha => "ranocha",
        TwoPointFlux::Chandrashekar => "chandrashekar",
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub case: CaseName,
    pub dim: usize,
    pub degree: usize,
    pub elements: [usize; 2],
    pub gamma: f64,
    pub cfl: f64,
    pub t_final: f64,
    pub pipeline: Pipeline,
    pub pressure: PressureMode,
    pub entropy_limiter: bool,
    pub volume_flux: TwoPointFlux,
    pub out: Option<String>,
    pub snapshot_times: Vec<f64>,
    /// Diagnostics row every this many steps (first and last always).
    pub diag_every: usize,
}

impl RunConfig {
    /// Desk-scale defaults per case; overridden by explicit keys/flags.
    pub fn default_for(case: CaseName) -> Self {
        let base = Self {
            case,
            dim: 2,
            degree: 3,
            elements: [16, 16],
            gamma: 1.4,
            cfl: 0.9,
            t_final: 1.0,
            pipeline: Pipeline::C,
            pressure: PressureMode::Sharp,
            entropy_limiter: true,
            volume_flux: TwoPointFlux::Ranocha,
            out: None,
            snapshot_times: Vec::new(),
            diag_every: 1,
        };
        match case {
            CaseName::DensityWave => Self {
                elements: [8, 8],
                pipeline: Pipeline::GlobalOnly,
                entropy_limiter: false,
                ..base
            },
            CaseName::Khi => Self {
                t_final: 2.0,
                pipeline: Pipeline::A,
                ..base
            },
            CaseName::Sedov => Self {
                elements: [32, 32],
                t_final: 0.5,
                volume_flux: TwoPointFlux::Chandrashekar,
                ..base
            },
            CaseName::Jet => Self {
                elements: [64, 64],
                gamma: 5.0 / 3.0,
                t_final: 2e-4,
                ..base
            },
            CaseName::Custom => Self {
                elements: [4, 4],
                pipeline: Pipeline::Off,
                entropy_limiter: false,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(SolverError::Config(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if self.degree == 0 || self.degree > 12 {
            return Err(SolverError::Config(format!(
                "degree must be in 1..=12, got {}",
                self.degree
            )));
        }
        for d in 0..self.dim {
            if self.elements[d] == 0 {
                return Err(SolverError::Config("elements must be positive".into()));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::Config(format!(
                "cfl must be in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(SolverError::Config(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.gamma > 1.0 && self.gamma <= 3.0) {
            return Err(SolverError::Config(format!(
                "gamma must be in (1, 3], got {}",
                self.gamma
            )));
        }
        if self.diag_every == 0 {
            return Err(SolverError::Config("diag_every must be positive".into()));
        }
        for t in &self.snapshot_times {
            if !t.is_finite() || *t < 0.0 {
                return Err(SolverError::Config(format!("bad snapshot time {t}")));
            }
        }
        Ok(())
    }

    /// Parses the flat key=value format. The `case` key selects the
    /// defaults; every other key overrides one field.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SolverError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(SolverError::Config(format!(
                    "line {}: empty key or value",
                    lineno + 1
                )));
            }
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(SolverError::Config(format!("duplicate key '{key}'")));
            }
            pairs.push((key, value));
        }
        let case = match pairs.iter().find(|(k, _)| *k == "case") {
            Some((_, v)) => CaseName::parse(v)?,
            None => return Err(SolverError::Config("missing required key 'case'".into())),
        };
        let mut cfg = Self::default_for(case);
        for (key, value) in pairs {
            match key {
                "case" => {}
                "dim" => cfg.dim = parse_num(key, value)?,
                "degree" => cfg.degree = parse_num(key, value)?,
                "elements" => cfg.elements = parse_elements(value)?,
                "gamma" => cfg.gamma = parse_num(key, value)?,
                "cfl" => cfg.cfl = parse_num(key, value)?,
                "t_final" => cfg.t_final = parse_num(key, value)?,
                "pipeline" => cfg.pipeline = parse_pipeline(value)?,
                "pressure" => cfg.pressure = parse_pressure(value)?,
                "entropy_limiter" => cfg.entropy_limiter = parse_switch(value)?,
                "volume_flux" => cfg.volume_flux = parse_volume_flux(value)?,
                "out" => cfg.out = Some(value.to_string()),
                "snapshot_times" => {
                    cfg.snapshot_times = value
                        .split(',')
                        .map(|s| parse_num::<f64>("snapshot_times", s.trim()))
                        .collect::<Result<_>>()?;
                }
                "diag_every" => cfg.diag_every = parse_num(key, value)?,
                _ => {
                    return Err(SolverError::Config(format!("unknown key '{key}'")));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes as a manifest that round-trips through [`from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case = {}", self.case.as_str());
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "degree = {}", self.degree);
        if self.dim == 2 {
            let _ = writeln!(s, "elements = {},{}", self.elements[0], self.elements[1]);
        } else {
            let _ = writeln!(s, "elements = {}", self.elements[0]);
        }
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "cfl = {}", self.cfl);
        let _ = writeln!(s, "t_final = {}", self.t_final);
        let _ = writeln!(s, "pipeline = {}", pipeline_name(self.pipeline));
        let _ = writeln!(
            s,
            "pressure = {}",
            match self.pressure {
                PressureMode::Sharp => "sharp",
                PressureMode::Cautious => "cautious",
            }
        );
        let _ = writeln!(
            s,
            "entropy_limiter = {}",
            if self.entropy_limiter { "on" } else { "off" }
        );
        let _ = writeln!(s, "volume_flux = {}", volume_flux_name(self.volume_flux));
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {out}");
        }
        if !self.snapshot_times.is_empty() {
            let times: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(s, "snapshot_times = {}", times.join(","));
        }
        let _ = writeln!(s, "diag_every = {}", self.diag_every);
        s
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| SolverError::Config(format!("invalid value '{value}' for key '{key}'")))
}

fn parse_elements(value: &str) -> Result<[usize; 2]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a] => {
            let n = parse_num("elements", a)?;
            Ok([n, n])
        }
        [a, b] => Ok([parse_num("elements", a)?, parse_num("elements", b)?]),
        _ => Err(SolverError::Config(format!(
            "elements must be 'n' or 'nx,ny', got '{value}'"
        ))),
    }
}

fn parse_switch(value: &str) -> Result<bool> {
    match value {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(SolverError::Config(format!(
            "expected on/off, got '{value}'"
        ))),
    }
}
