//! File formats.
//!
//! - POVM JSON: `{"dimension": M, "outcomes": [[theta_0(0), ...], ...]}`
//! - POVM CSV: header `n,i0,i1,...`, one row per outcome
//! - Outcome statistics CSV: header `mu,shots,n0,n1,...`, one row per probe
//!
//! Floats are written in shortest round-trip decimal form, so parsing a
//! written file reproduces every weight bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::PovmSet;
use crate::probe::OutcomeStats;

#[derive(Serialize, Deserialize)]
struct PovmFile {
    dimension: usize,
    outcomes: Vec<Vec<f64>>,
}

pub fn povm_to_json(set: &PovmSet) -> String {
    let file = PovmFile {
        dimension: set.dimension(),
        outcomes: set.rows(),
    };
    serde_json::to_string(&file).expect("POVM serializes")
}

pub fn povm_from_json(text: &str) -> Result<PovmSet> {
    let file: PovmFile = serde_json::from_str(text)?;
    let set = PovmSet::from_rows(file.outcomes)?;
    if set.dimension() != file.dimension {
        return Err(Error::Format(format!(
            "declared dimension {} but outcomes have {} weights",
            file.dimension,
            set.dimension()
        )));
    }
    Ok(set)
}

pub fn povm_to_csv(set: &PovmSet) -> String {
    let mut out = String::from("n");
    for i in 0..set.dimension() {
        out.push_str(&format!(",i{i}"));
    }
    out.push('\n');
    for o in set.outcomes() {
        out.push_str(&o.outcome_index.to_string());
        for w in &o.weights {
            out.push(',');
            out.push_str(&w.to_string());
        }
        out.push('\n');
    }
    out
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Format(format!("line {line}: cannot parse {field:?}: {e}")))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

pub fn povm_from_csv(text: &str) -> Result<PovmSet> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::Format("empty POVM CSV".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"n") || columns.len() < 2 {
        return Err(Error::Format("POVM CSV header must start with \"n,i0\"".into()));
    }
    let mut rows = Vec::new();
    for (line, l) in data_lines(text) {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Format(format!(
                "line {line}: {} fields, header has {}",
                fields.len(),
                columns.len()
            )));
        }
        let n: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad outcome index")))?;
        if n != rows.len() {
            return Err(Error::Format(format!("line {line}: outcome {n} out of order")));
        }
        rows.push(
            fields[1..]
                .iter()
                .map(|f| parse_f64(f, line))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    PovmSet::from_rows(rows)
}

pub fn stats_to_csv(stats: &OutcomeStats) -> String {
    let mut out = String::from("mu,shots");
    for n in 0..stats.num_outcomes() {
        out.push_str(&format!(",n{n}"));
    }
    out.push('\n');
    for ((mu, shots), row) in stats.means().iter().zip(stats.shots()).zip(stats.frequencies()) {
        out.push_str(&format!("{mu},{shots}"));
        for f in row {
            out.push(',');
            out.push_str(&f.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn stats_from_csv(text: &str) -> Result<OutcomeStats> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::Format("empty statistics CSV".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 4 || columns[0] != "mu" || columns[1] != "shots" {
        return Err(Error::Format(
            "statistics CSV header must be \"mu,shots,n0,n1,...\"".into(),
        ));
    }
    let mut means = Vec::new();
    let mut shots = Vec::new();
    let mut freqs = Vec::new();
    for (line, l) in data_lines(text) {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Format(format!(
                "line {line}: {} fields, header has {}",
                fields.len(),
                columns.len()
            )));
        }
        means.push(parse_f64(fields[0], line)?);
        shots.push(
            fields[1]
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::Format(format!("line {line}: bad shot count")))?,
        );
        freqs.push(
            fields[2..]
                .iter()
                .map(|f| parse_f64(f, line))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    OutcomeStats::new(means, shots, freqs)
}

/// Summary written next to a reconstructed POVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gamma: f64,
}

impl From<&crate::tomography::ReconstructionResult> for ReconstructionReport {
    fn from(r: &crate::tomography::ReconstructionResult) -> Self {
        Self {
            residual: r.residual,
            iterations: r.iterations,
            converged: r.converged,
            gamma: r.gamma,
        }
    }
}
