//! Reading observed or true histograms from disk.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramFormat {
    /// One nonnegative integer count per line.
    CountsCsv,
    /// One probability per line; needs an explicit sample size.
    ProbsCsv,
    /// `{"counts": [...]}` or `{"probs": [...], "n": N}`.
    Json,
}

impl HistogramFormat {
    /// Guesses from the extension: `.json` is JSON, anything else counts.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => HistogramFormat::Json,
            _ => HistogramFormat::CountsCsv,
        }
    }
}

impl FromStr for HistogramFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counts-csv" | "counts" => Ok(Self::CountsCsv),
            "probs-csv" | "probs" => Ok(Self::ProbsCsv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown histogram format '{other}'"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonHistogram {
    counts: Option<Vec<i64>>,
    probs: Option<Vec<f64>>,
    n: Option<u64>,
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn from_counts(counts: &[i64]) -> Result<(Distribution, u64)> {
    if let Some((line, &value)) = counts.iter().enumerate().find(|(_, c)| **c < 0) {
        return Err(Error::NegativeCount {
            value,
            line: line + 1,
        });
    }
    let counts: Vec<u64> = counts.iter().map(|&c| c as u64).collect();
    let n = counts.iter().sum();
    Ok((Distribution::from_counts(&counts)?, n))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Loads a histogram and returns it with its sample size.
///
/// `n_override` supplies (or replaces) the sample size; it is required for
/// probability files that do not carry one.
pub fn ingest_histogram(
    path: &Path,
    format: HistogramFormat,
    n_override: Option<u64>,
) -> Result<(Distribution, u64)> {
    let text = fs::read_to_string(path)?;
    let (dist, n) = match format {
        HistogramFormat::CountsCsv => {
            let counts = data_lines(&text)
                .map(|(line, l)| {
                    l.parse::<i64>()
                        .map_err(|e| parse_err(path, format!("line {line}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let (dist, n) = from_counts(&counts)?;
            (dist, Some(n))
        }
        HistogramFormat::ProbsCsv => {
            let probs = data_lines(&text)
                .map(|(line, l)| {
                    l.parse::<f64>()
                        .map_err(|e| parse_err(path, format!("line {line}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            (Distribution::new(probs)?, None)
        }
        HistogramFormat::Json => {
            let parsed: JsonHistogram =
                serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
            match (parsed.counts, parsed.probs) {
                (Some(counts), None) => {
                    let (dist, n) = from_counts(&counts)?;
                    (dist, Some(n))
                }
                (None, Some(probs)) => (Distribution::new(probs)?, parsed.n),
                _ => {
                    return Err(parse_err(
                        path,
                        "expected exactly one of \"counts\" or \"probs\"",
                    ))
                }
            }
        }
    };
    let n = n_override.or(n).ok_or(Error::MissingSampleSize)?;
    if n == 0 {
        return Err(Error::ZeroTotal);
    }
    Ok((dist, n))
}
