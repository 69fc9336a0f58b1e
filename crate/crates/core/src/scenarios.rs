//! The WOR / WR comparison grid and its reference table.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::baseline::{baseline, BaselineMoments};
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Absolute tolerance used by `scenarios --check`.
pub const GOLDEN_TOLERANCE: f64 = 1e-5;

/// One paired comparison: WOR(N, m) against WR(p) at cutoff k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub label: String,
    pub items: usize,
    pub relevant: usize,
    pub p: f64,
    pub k: usize,
}

impl ScenarioConfig {
    pub fn new(label: &str, items: usize, relevant: usize, p: f64, k: usize) -> Self {
        Self {
            label: label.to_owned(),
            items,
            relevant,
            p,
            k,
        }
    }
}

/// Default grid: N = 50 throughout, sweeping prevalence and cutoff.
pub fn default_grid() -> Vec<ScenarioConfig> {
    vec![
        ScenarioConfig::new("A1", 50, 25, 0.50, 5),
        ScenarioConfig::new("A2", 50, 25, 0.50, 25),
        ScenarioConfig::new("A3", 50, 25, 0.50, 40),
        ScenarioConfig::new("B", 50, 10, 0.20, 20),
        ScenarioConfig::new("C", 50, 2, 0.04, 20),
        ScenarioConfig::new("D", 50, 35, 0.70, 20),
    ]
}

/// Reference values for the default grid, rounded to five decimals:
/// `(label, WOR mean, WR mean, WOR variance, WR variance)`.
pub const GOLDEN_TABLE: [(&str, [f64; 4]); 6] = [
    ("A1", [0.36139, 0.36416, 0.05464, 0.05884]),
    ("A2", [0.28387, 0.28816, 0.00735, 0.01234]),
    ("A3", [0.43550, 0.27674, 0.00699, 0.00775]),
    ("B", [0.13221, 0.06878, 0.00786, 0.00294]),
    ("C", [0.07865, 0.00851, 0.01563, 0.00023]),
    ("D", [0.52426, 0.52778, 0.01502, 0.02195]),
];

pub const COLUMNS: [&str; 4] = ["WOR mean", "WR mean", "WOR var", "WR var"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub config: ScenarioConfig,
    pub wor: BaselineMoments,
    pub wr: BaselineMoments,
}

impl ScenarioRow {
    /// Values in [`COLUMNS`] order.
    pub fn values(&self) -> [f64; 4] {
        [self.wor.mean, self.wr.mean, self.wor.variance, self.wr.variance]
    }
}

pub fn compute(grid: &[ScenarioConfig]) -> Result<Vec<ScenarioRow>> {
    grid.iter()
        .map(|c| {
            if c.items > 0 && (c.p - c.relevant as f64 / c.items as f64).abs() > 1e-9 {
                warn!("scenario {}: p={} differs from m/N", c.label, c.p);
            }
            Ok(ScenarioRow {
                config: c.clone(),
                wor: baseline(&ModelSpec::wor(c.items, c.relevant)?, c.k)?,
                wr: baseline(&ModelSpec::wr(c.p)?, c.k)?,
            })
        })
        .collect()
}

/// A computed value that misses its reference by more than the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub label: String,
    pub column: String,
    pub computed: f64,
    pub reference: f64,
}

impl Deviation {
    pub fn abs_error(&self) -> f64 {
        (self.computed - self.reference).abs()
    }
}

/// Compares rows whose label and parameters match the default grid against
/// [`GOLDEN_TABLE`]. Returns the number of compared rows and the deviations.
pub fn check_golden(rows: &[ScenarioRow], tolerance: f64) -> (usize, Vec<Deviation>) {
    let grid = default_grid();
    let mut compared = 0;
    let mut deviations = Vec::new();
    for row in rows {
        let Some((_, reference)) = GOLDEN_TABLE.iter().find(|(l, _)| *l == row.config.label) else {
            continue;
        };
        if !grid.contains(&row.config) {
            continue;
        }
        compared += 1;
        for ((col, computed), reference) in COLUMNS.iter().zip(row.values()).zip(reference) {
            if (computed - reference).abs() > tolerance {
                deviations.push(Deviation {
                    label: row.config.label.clone(),
                    column: (*col).to_owned(),
                    computed,
                    reference: *reference,
                });
            }
        }
    }
    (compared, deviations)
}

/// Reads a grid from `label N m p k` lines; `#` starts a comment.
pub fn parse_config(text: &str, source: &str) -> Result<Vec<ScenarioConfig>> {
    let mut grid = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: source.to_owned(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [label, n, m, p, k] = fields[..] else {
            return Err(err(format!("expected `label N m p k`, found {} fields", fields.len())));
        };
        let int = |s: &str, name: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("{name} `{s}` is not a non-negative integer")))
        };
        grid.push(ScenarioConfig {
            label: label.to_owned(),
            items: int(n, "N")?,
            relevant: int(m, "m")?,
            p: p.parse().map_err(|_| err(format!("p `{p}` is not a number")))?,
            k: int(k, "k")?,
        });
    }
    if grid.is_empty() {
        return Err(Error::Empty("scenario config"));
    }
    Ok(grid)
}

pub fn load_config(path: &Path) -> Result<Vec<ScenarioConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}
