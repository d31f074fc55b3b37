//! Plain-text run manifests.
//!
//! ```text
//! # comment
//! suite wg-tables
//! tol 0.2
//! rect 1 1 P:2 inf 3:6 sinsin 3 4 table03.csv
//! rect 0 0 RT:0 1 3:7 sinsin 2 2 table05.csv soft
//! ```
//!
//! Entries that share an output path are written to the same table file in
//! manifest order. A trailing `soft` downgrades a mismatch to a warning.

use std::collections::HashSet;
use std::path::PathBuf;

use thiserror::Error;

use crate::assembly::ElementConfig;
use crate::mesh::MeshKind;
use crate::polyspace::GradientSpaceDesc;
use crate::study::{solution_by_name, MAX_STUDY_LEVEL};
use crate::weakop::StabilizerExponent;

pub const DEFAULT_TOL: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("manifest has no run entries")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// 1-based source line.
    pub line: usize,
    pub config: ElementConfig,
    pub mesh: MeshKind,
    pub levels: (usize, usize),
    pub solution: String,
    pub expected: (f64, f64),
    pub out: PathBuf,
    pub soft: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub suite: String,
    pub tol: f64,
    pub entries: Vec<ManifestEntry>,
}

pub fn parse_levels(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("level range `{s}` must look like lo:hi"))?;
    let lo: usize = a.parse().map_err(|_| format!("bad level `{a}`"))?;
    let hi: usize = b.parse().map_err(|_| format!("bad level `{b}`"))?;
    if lo < 1 || lo > hi || hi > MAX_STUDY_LEVEL {
        return Err(format!("level range {lo}:{hi} must satisfy 1 <= lo <= hi <= {MAX_STUDY_LEVEL}"));
    }
    Ok((lo, hi))
}

pub fn parse_rate(s: &str) -> Result<f64, String> {
    match s {
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad expected rate `{s}`")),
    }
}

fn parse_entry(line: usize, tokens: &[&str]) -> Result<ManifestEntry, String> {
    if !(tokens.len() == 10 || (tokens.len() == 11 && tokens[10] == "soft")) {
        return Err(format!(
            "expected `mesh l s family:degree j lo:hi solution r1 r2 out.csv [soft]`, got {} fields",
            tokens.len()
        ));
    }
    let mesh: MeshKind = tokens[0].parse().map_err(|e: crate::WgError| e.to_string())?;
    let l: usize = tokens[1].parse().map_err(|_| format!("bad interior degree `{}`", tokens[1]))?;
    let s: usize = tokens[2].parse().map_err(|_| format!("bad edge degree `{}`", tokens[2]))?;
    let grad: GradientSpaceDesc = tokens[3].parse().map_err(|e: crate::WgError| e.to_string())?;
    let j: StabilizerExponent = tokens[4].parse().map_err(|e: crate::WgError| e.to_string())?;
    let config = ElementConfig::new(l, s, grad, j).map_err(|e| e.to_string())?;
    let levels = parse_levels(tokens[5])?;
    solution_by_name(tokens[6]).map_err(|e| e.to_string())?;
    let expected = (parse_rate(tokens[7])?, parse_rate(tokens[8])?);
    Ok(ManifestEntry {
        line,
        config,
        mesh,
        levels,
        solution: tokens[6].to_string(),
        expected,
        out: PathBuf::from(tokens[9]),
        soft: tokens.len() == 11,
    })
}

pub fn parse_manifest(text: &str) -> Result<RunManifest, ManifestError> {
    let mut suite = String::from("suite");
    let mut tol = DEFAULT_TOL;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let err = |message: String| ManifestError::Line { line, message };
        match tokens[0] {
            "suite" => {
                if tokens.len() != 2 {
                    return Err(err("expected `suite <name>`".into()));
                }
                suite = tokens[1].to_string();
            }
            "tol" => {
                tol = tokens
                    .get(1)
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|t| *t > 0.0 && tokens.len() == 2)
                    .ok_or_else(|| err("expected `tol <positive real>`".into()))?;
            }
            _ => {
                let entry = parse_entry(line, &tokens).map_err(err)?;
                let key = (entry.config, entry.mesh, entry.out.clone());
                if !seen.insert(key) {
                    return Err(ManifestError::Line {
                        line,
                        message: "duplicate entry for this element, mesh and output".into(),
                    });
                }
                entries.push(entry);
            }
        }
    }
    if entries.is_empty() {
        return Err(ManifestError::Empty);
    }
    Ok(RunManifest { suite, tol, entries })
}
