//! Flat-file formats: a `# {json header}` line followed by one `re,im` row
//! per sample, in lattice order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config_ops::MetaplecticWord;
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction, C};
use crate::indices::MaslovIndex;
use crate::linalg;
use crate::phase_space::{PhaseFunction, PhaseGrid};
use crate::symplectic::GeneratingFunction;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledHeader {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "X")]
    pub half_width: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseHeader {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "X")]
    pub half_width: f64,
    #[serde(rename = "N_p")]
    pub p_points: usize,
    #[serde(rename = "P_max")]
    pub p_half: f64,
    pub hbar: f64,
}

fn write_payload<W: Write>(out: &mut W, header: &str, values: &[C]) -> Result<()> {
    writeln!(out, "# {header}")?;
    for v in values {
        writeln!(out, "{},{}", v.re, v.im)?;
    }
    Ok(())
}

fn read_payload<R: Read>(input: R) -> Result<(String, Vec<C>)> {
    let mut lines = BufReader::new(input).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty file".into()))??;
    let header = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("first line must be '# {json header}'".into()))?
        .trim()
        .to_string();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("row {}: expected 're,im'", i + 2)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))
        };
        values.push(C::new(parse(re)?, parse(im)?));
    }
    Ok((header, values))
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_sampled<W: Write>(out: &mut W, f: &SampledFunction) -> Result<()> {
    let g = f.grid();
    let header = SampledHeader {
        n: g.n(),
        points: g.points(),
        half_width: g.half_width(),
        hbar: f.hbar(),
    };
    write_payload(out, &serde_json::to_string(&header).map_err(json_err)?, f.values())
}

pub fn read_sampled<R: Read>(input: R) -> Result<SampledFunction> {
    let (header, values) = read_payload(input)?;
    let h: SampledHeader = serde_json::from_str(&header).map_err(json_err)?;
    SampledFunction::new(Grid::new(h.n, h.half_width, h.points)?, values, h.hbar)
}

pub fn write_phase<W: Write>(out: &mut W, f: &PhaseFunction) -> Result<()> {
    let g = f.grid();
    let header = PhaseHeader {
        n: g.n(),
        points: g.x_points(),
        half_width: g.x_half(),
        p_points: g.p_points(),
        p_half: g.p_half(),
        hbar: f.hbar(),
    };
    write_payload(out, &serde_json::to_string(&header).map_err(json_err)?, f.values())
}

pub fn read_phase<R: Read>(input: R) -> Result<PhaseFunction> {
    let (header, values) = read_payload(input)?;
    let h: PhaseHeader = serde_json::from_str(&header).map_err(json_err)?;
    let pg = PhaseGrid::new(h.n, h.half_width, h.points, h.p_half, h.p_points)?;
    PhaseFunction::new(pg, values, h.hbar)
}

pub fn save_sampled(path: &Path, f: &SampledFunction) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sampled(&mut out, f)?;
    out.flush()?;
    Ok(())
}

pub fn load_sampled(path: &Path) -> Result<SampledFunction> {
    read_sampled(std::fs::File::open(path)?)
}

pub fn save_phase(path: &Path, f: &PhaseFunction) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_phase(&mut out, f)?;
    out.flush()?;
    Ok(())
}

pub fn load_phase(path: &Path) -> Result<PhaseFunction> {
    read_phase(std::fs::File::open(path)?)
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(json_err)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(json_err)
}

/// One factor `(P, L, Q, m)` of a word; matrices row-major n×n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFactorJson {
    pub n: usize,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub m: i64,
}

impl WordFactorJson {
    pub fn from_factor(w: &GeneratingFunction, m: MaslovIndex) -> Self {
        Self {
            n: w.n(),
            p: linalg::to_row_major(w.p()),
            l: linalg::to_row_major(w.l()),
            q: linalg::to_row_major(w.q()),
            m: m.value() as i64,
        }
    }

    pub fn to_factor(&self, tol: &Tolerances) -> Result<(GeneratingFunction, MaslovIndex)> {
        let n = self.n;
        let w = GeneratingFunction::new(
            linalg::from_row_major(n, n, &self.p)?,
            linalg::from_row_major(n, n, &self.l)?,
            linalg::from_row_major(n, n, &self.q)?,
            tol,
        )?;
        Ok((w, MaslovIndex::new(self.m)))
    }
}

/// A word is a JSON array of factors, applied right to left.
pub fn word_from_json(factors: &[WordFactorJson], tol: &Tolerances) -> Result<MetaplecticWord> {
    MetaplecticWord::new(
        factors
            .iter()
            .map(|f| f.to_factor(tol))
            .collect::<Result<Vec<_>>>()?,
    )
}
