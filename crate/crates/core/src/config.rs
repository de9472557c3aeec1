//! Run configuration: flat `key = value` files with `#` comments.
//!
//! Precedence is flag > file > default; flags are applied with
//! [`RunConfig::set`] after the file is loaded.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::phase_space::PhaseGrid;
use crate::tolerances::{Tolerances, Truncation};

pub const CONFIG_ENV: &str = "METAPLECTIC_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub points: usize,
    pub half_width: f64,
    /// Phase-space work uses its own, coarser square lattice.
    pub phase_points: usize,
    pub phase_half_width: f64,
    pub hbar: f64,
    pub tolerances: Tolerances,
    pub truncation: Truncation,
    pub seed: u64,
    /// Per-invariant tolerance overrides for `verify`, keyed by invariant name.
    pub invariant_tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 1,
            points: 512,
            half_width: 12.0,
            phase_points: 128,
            phase_half_width: 8.0,
            hbar: 1.0,
            tolerances: Tolerances::default(),
            truncation: Truncation::default(),
            seed: 42,
            invariant_tolerances: BTreeMap::new(),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse(format!("{key} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse_usize(key, value)?,
            "N" | "points" => self.points = parse_usize(key, value)?,
            "X" | "half_width" => self.half_width = positive(key, parse_f64(key, value)?)?,
            "phase.N" => self.phase_points = parse_usize(key, value)?,
            "phase.X" => self.phase_half_width = positive(key, parse_f64(key, value)?)?,
            "hbar" => self.hbar = positive(key, parse_f64(key, value)?)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|e| Error::Parse(format!("seed: {e}")))?
            }
            "truncation.r_factor" | "R_factor" => {
                self.truncation.r_factor = positive(key, parse_f64(key, value)?)?
            }
            "truncation.cutoff_fraction" | "cutoff_fraction" => {
                let v = parse_f64(key, value)?;
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::Parse(format!("{key} must lie in (0, 1), got {v}")));
                }
                self.truncation.cutoff_fraction = v;
            }
            _ => {
                let Some(name) = key.strip_prefix("tol.") else {
                    return Err(Error::Parse(format!("unknown key '{key}'")));
                };
                let v = positive(key, parse_f64(key, value)?)?;
                let t = &mut self.tolerances;
                match name {
                    "symp" => t.symp = v,
                    "sing" => t.sing = v,
                    "eig" => t.eig = v,
                    "tail" => t.tail = v,
                    "quad" => t.quad = v,
                    other => {
                        self.invariant_tolerances.insert(other.to_string(), v);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.phase_grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.half_width, self.points)
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid> {
        let g = Grid::new(self.n, self.phase_half_width, self.phase_points)?;
        Ok(PhaseGrid::square(&g))
    }

    pub fn invariant_tolerance(&self, name: &str, default: f64) -> f64 {
        self.invariant_tolerances.get(name).copied().unwrap_or(default)
    }
}
