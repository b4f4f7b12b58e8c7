//! Seeded Monte Carlo over `(m, ℓ, d)` grids. Each trial samples a presentation
//! and runs the configured checks; rows come out ordered by `(cell, trial)`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::search::{enumerate_reduced_diagrams, SearchBudget};
use crate::smallcancel::{check_c_prime, check_c_tilde_bounded, check_cp, CTildeVerdict, PieceIndex};
use crate::words::{parse_ratio, sample_presentation, Density, Presentation};

pub const SCHEMA: &str = "# schema=1";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header {SCHEMA:?}, found {0:?}")]
    Schema(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Check {
    CPrime(Ratio<i64>),
    Cp(usize),
    CTilde(usize, usize),
    IsoRatio(usize),
    PieceStats,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::CPrime(l) => write!(f, "c_prime({l})"),
            Check::Cp(p) => write!(f, "cp({p})"),
            Check::CTilde(p, k) => write!(f, "ctilde({p},{k})"),
            Check::IsoRatio(k) => write!(f, "iso_ratio({k})"),
            Check::PieceStats => write!(f, "piece_stats"),
        }
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Check, String> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s == "piece_stats" {
            return Ok(Check::PieceStats);
        }
        let bad = || format!("unknown check {s:?}");
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest.strip_suffix(')').ok_or_else(bad)?.split(',').collect();
        let int = |a: &str| a.parse::<usize>().map_err(|_| format!("bad argument {a:?} in {s:?}"));
        let check = match (name, args.as_slice()) {
            ("c_prime", [l]) => {
                let l = parse_ratio(l).map_err(|e| e.to_string())?;
                if l <= Ratio::from_integer(0) || l > Ratio::from_integer(1) {
                    return Err(format!("λ must lie in (0, 1] in {s:?}"));
                }
                Check::CPrime(l)
            }
            ("cp", [p]) if int(p)? >= 2 => Check::Cp(int(p)?),
            ("ctilde", [p, k]) if int(p)? >= 2 => Check::CTilde(int(p)?, int(k)?),
            ("iso_ratio", [k]) if int(k)? >= 1 => Check::IsoRatio(int(k)?),
            _ => return Err(bad()),
        };
        Ok(check)
    }
}

impl TryFrom<String> for Check {
    type Error = String;

    fn try_from(s: String) -> Result<Check, String> {
        s.parse()
    }
}

impl From<Check> for String {
    fn from(c: Check) -> String {
        c.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub m: usize,
    pub l: usize,
    pub d: Density,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub max_faces: usize,
    pub max_edges: usize,
    pub max_states: usize,
    /// Per-search wall clock cap. Runs that hit it are no longer reproducible.
    pub time_limit_ms: Option<u64>,
}

impl Default for Budgets {
    fn default() -> Budgets {
        let b = SearchBudget::default();
        Budgets { max_faces: b.max_faces, max_edges: b.max_edges, max_states: b.max_states, time_limit_ms: None }
    }
}

impl Budgets {
    fn search(&self, max_faces: usize) -> SearchBudget {
        SearchBudget {
            max_faces,
            max_edges: self.max_edges,
            max_states: self.max_states,
            time_limit: self.time_limit_ms.map(Duration::from_millis),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: Vec<Cell>,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub budgets: Budgets,
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<ExperimentConfig, ExperimentError> {
        let c: ExperimentConfig = toml::from_str(s).map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |s: &str| Err(ExperimentError::InvalidConfig(s.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.grid.is_empty() {
            return bad("grid is empty");
        }
        if self.checks.is_empty() {
            return bad("no checks");
        }
        if self.budgets.max_states == 0 || self.budgets.max_edges == 0 {
            return bad("budgets must be positive");
        }
        Ok(())
    }

    /// Seed of trial `t` in cell `c`; a pure function of the config.
    pub fn trial_seed(&self, c: usize, t: usize) -> u64 {
        splitmix(self.seed ^ splitmix(((c as u64) << 32) | t as u64))
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    True,
    False,
    /// A search hit its budget. Never counted as false.
    Unknown,
    /// A numeric check.
    Value,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub cell: usize,
    pub trial: usize,
    pub m: usize,
    pub l: usize,
    pub d: String,
    pub seed: u64,
    pub check: String,
    pub result: Outcome,
    pub value: Option<f64>,
    pub error: String,
    pub wall_ms: u64,
}

fn run_check(check: Check, p: &Presentation, l: usize, budgets: &Budgets) -> (Outcome, Option<f64>, String) {
    let flag = |b: bool| if b { Outcome::True } else { Outcome::False };
    match check {
        Check::CPrime(lambda) => (flag(check_c_prime(p, lambda).0), None, String::new()),
        Check::Cp(pp) => (flag(check_cp(p, pp).0), None, String::new()),
        Check::CTilde(pp, k) => match check_c_tilde_bounded(p, pp, k, &budgets.search(budgets.max_faces)) {
            Ok(CTildeVerdict::VerifiedUpTo { .. }) => (Outcome::True, None, String::new()),
            Ok(CTildeVerdict::Counterexample { .. }) => (Outcome::False, None, String::new()),
            Err(e) => (Outcome::Unknown, None, e.to_string()),
        },
        Check::IsoRatio(k) => {
            let en = enumerate_reduced_diagrams(p, &budgets.search(k));
            let min = en
                .diagrams
                .iter()
                .filter_map(|d| d.isoperimetric_ratio(l).ok())
                .min()
                .map(|r| *r.numer() as f64 / *r.denom() as f64);
            let note = en.truncation.unwrap_or_default();
            match (en.complete, min) {
                (true, Some(v)) => (Outcome::Value, Some(v), note),
                (_, v) => (Outcome::Unknown, v, note),
            }
        }
        Check::PieceStats => {
            let idx = PieceIndex::new(p);
            (Outcome::Value, Some(idx.max_piece_len() as f64 / l as f64), String::new())
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, c: usize, t: usize) -> Vec<TrialRow> {
    let cell = cfg.grid[c];
    let seed = cfg.trial_seed(c, t);
    let row = |check: Check, result, value, error: String, wall: Duration| TrialRow {
        cell: c,
        trial: t,
        m: cell.m,
        l: cell.l,
        d: cell.d.to_string(),
        seed,
        check: check.to_string(),
        result,
        value,
        error,
        wall_ms: wall.as_millis() as u64,
    };
    let started = Instant::now();
    let p = match sample_presentation(cell.m, cell.l, cell.d, seed) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("cell {c} trial {t}: {e}");
            return cfg.checks.iter().map(|&k| row(k, Outcome::Error, None, e.to_string(), started.elapsed())).collect();
        }
    };
    cfg.checks
        .iter()
        .map(|&k| {
            let t0 = Instant::now();
            let (result, value, error) = run_check(k, &p, cell.l, &cfg.budgets);
            row(k, result, value, error, t0.elapsed())
        })
        .collect()
}

/// All rows, ordered by `(cell, trial, check)` whatever order the trials finish in.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<TrialRow>, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.grid.len()).flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    Ok(par::map(jobs, |(c, t)| run_trial(cfg, c, t)).into_iter().flatten().collect())
}

/// Writes the versioned CSV. With `timing` off the wall-time column is zero, so
/// reruns compare byte for byte.
pub fn write_csv<W: Write>(rows: &[TrialRow], mut out: W, timing: bool) -> Result<(), ExperimentError> {
    writeln!(out, "{SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        if timing {
            w.serialize(r)?;
        } else {
            w.serialize(TrialRow { wall_ms: 0, ..r.clone() })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(mut input: R) -> Result<Vec<TrialRow>, ExperimentError> {
    let mut s = String::new();
    input.read_to_string(&mut s)?;
    let (first, rest) = s.split_once('\n').unwrap_or((&s, ""));
    if first.trim_end() != SCHEMA {
        return Err(ExperimentError::Schema(first.to_string()));
    }
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<TrialRow>, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub m: usize,
    pub l: usize,
    pub d: String,
    pub check: String,
    pub n_true: usize,
    pub n_false: usize,
    pub n_unknown: usize,
    pub n_value: usize,
    pub n_error: usize,
    /// True over definite (true or false) results.
    pub rate: Option<f64>,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub unknown_frac: f64,
}

/// Per `(cell, check)` aggregates in first-appearance order, plus warnings for
/// cells with nothing to aggregate (those are omitted).
pub fn summarize(rows: &[TrialRow]) -> (Vec<CellSummary>, Vec<String>) {
    let mut keys: Vec<(usize, usize, String, String)> = Vec::new();
    let mut groups: Vec<Vec<&TrialRow>> = Vec::new();
    for r in rows {
        let key = (r.m, r.l, r.d.clone(), r.check.clone());
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(r),
            None => {
                keys.push(key);
                groups.push(vec![r]);
            }
        }
    }
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for ((m, l, d, check), g) in keys.into_iter().zip(groups) {
        let count = |o: Outcome| g.iter().filter(|r| r.result == o).count();
        let (t, f, u, e) = (count(Outcome::True), count(Outcome::False), count(Outcome::Unknown), count(Outcome::Error));
        let values: Vec<f64> = g.iter().filter(|r| r.result == Outcome::Value).filter_map(|r| r.value).collect();
        let total = t + f + u + values.len();
        if total == 0 {
            let msg = format!("cell m={m} l={l} d={d} {check}: no results ({e} errors); omitted");
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let rate = (t + f > 0).then(|| t as f64 / (t + f) as f64);
        let (mean, stderr) = if !values.is_empty() {
            let k = values.len() as f64;
            let mean = values.iter().sum::<f64>() / k;
            let se = (values.len() > 1)
                .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt());
            (Some(mean), se)
        } else {
            (rate, rate.map(|p| (p * (1.0 - p) / (t + f) as f64).sqrt()))
        };
        out.push(CellSummary {
            m,
            l,
            d,
            check,
            n_true: t,
            n_false: f,
            n_unknown: u,
            n_value: values.len(),
            n_error: e,
            rate,
            mean,
            stderr,
            unknown_frac: u as f64 / total as f64,
        });
    }
    (out, warnings)
}

pub fn write_summary_csv<W: Write>(cells: &[CellSummary], mut out: W) -> Result<(), ExperimentError> {
    writeln!(out, "{SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_names_roundtrip() {
        for s in ["c_prime(1/3)", "cp(6)", "ctilde(2,3)", "iso_ratio(2)", "piece_stats"] {
            assert_eq!(s.parse::<Check>().unwrap().to_string(), s);
        }
        assert_eq!("c_prime(0.25)".parse::<Check>().unwrap(), Check::CPrime(Ratio::new(1, 4)));
        for s in ["cp(1)", "c_prime(0)", "foo(2)", "iso_ratio(0)", "cp"] {
            assert!(s.parse::<Check>().is_err(), "{s}");
        }
    }
}
