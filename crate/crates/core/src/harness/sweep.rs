//! Seeded Monte-Carlo sweeps over (k, epsilon, n, distribution) grids.
//!
//! Every (cell, seed) task owns the random stream
//! `Seed { master_seed, stream_id: mix(cell_hash, seed_index) }`, and rows are
//! sorted before they are emitted, so the output does not depend on the
//! number of threads or on scheduling.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::{ingest_histogram, HistogramFormat};
use super::zipf::{zipf_distribution, ZipfSpec};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::estimators::{run_estimator, EstimatorKind, DEFAULT_IBU_ITERS};
use crate::mechanism::{empirical_histogram, sample_dataset};
use crate::metrics::{mse, neg_log_likelihood, total_variation};
use crate::numeric::mix64;
use crate::params::RRParams;
use crate::seed::Seed;

/// Results CSV header.
pub const CSV_HEADER: &str =
    "k,epsilon,n,dist_id,seed_index,estimator,mse,tv,nll_per_sample,wall_time_micros";

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "LDPFREQ_THREADS";

/// Source of the true distribution of a sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    /// Zipf over each `k` in the sweep's `k_values`.
    Zipf { s: f64 },
    /// A histogram file; its length fixes `k` and `k_values` is ignored.
    Histogram {
        path: PathBuf,
        #[serde(default)]
        format: Option<HistogramFormat>,
        #[serde(default)]
        id: Option<String>,
        /// Probability files without an embedded sample size need one here.
        #[serde(default)]
        n: Option<u64>,
    },
}

impl DistSpec {
    pub fn id(&self) -> String {
        match self {
            DistSpec::Zipf { s } => format!("zipf-{s}"),
            DistSpec::Histogram { id: Some(id), .. } => id.clone(),
            DistSpec::Histogram { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "histogram".into()),
        }
    }
}

fn default_ibu_iters() -> usize {
    DEFAULT_IBU_ITERS
}

/// A sweep grid. Deserializes from the JSON sweep config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k_values: Vec<usize>,
    pub epsilon_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub dist_specs: Vec<DistSpec>,
    pub estimators: Vec<EstimatorKind>,
    pub n_seeds: usize,
    #[serde(default = "default_ibu_iters")]
    pub ibu_iters: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Measure estimator wall time. Off by default: timings vary between
    /// runs, so with this off the column is 0 and output is reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl SweepConfig {
    /// Reads a JSON config. Relative histogram paths resolve against the
    /// config file's directory.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: SweepConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for spec in &mut config.dist_specs {
            if let DistSpec::Histogram { path: p, .. } = spec {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::Config(format!("{name} must not be empty"));
        if self.k_values.is_empty()
            && self
                .dist_specs
                .iter()
                .any(|d| matches!(d, DistSpec::Zipf { .. }))
        {
            return Err(empty("k_values"));
        }
        if self.epsilon_values.is_empty() {
            return Err(empty("epsilon_values"));
        }
        if self.n_values.is_empty() {
            return Err(empty("n_values"));
        }
        if self.dist_specs.is_empty() {
            return Err(empty("dist_specs"));
        }
        if self.estimators.is_empty() {
            return Err(empty("estimators"));
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if let Some(&k) = self.k_values.iter().find(|&&k| k < 2) {
            return Err(Error::Config(format!("k must be at least 2, got {k}")));
        }
        if let Some(&e) = self
            .epsilon_values
            .iter()
            .find(|&&e| !(e.is_finite() && e > 0.0))
        {
            return Err(Error::Config(format!("epsilon must be positive, got {e}")));
        }
        if self.n_values.contains(&0) {
            return Err(Error::Config("n must be at least 1".into()));
        }
        for spec in &self.dist_specs {
            if let DistSpec::Zipf { s } = spec {
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::Config(format!(
                        "zipf exponent must be >= 0, got {s}"
                    )));
                }
            }
            let id = spec.id();
            if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
                return Err(Error::Config(format!("unusable dist_id {id:?}")));
            }
        }
        Ok(())
    }
}

/// One output row: one estimator on one (cell, seed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub k: usize,
    pub epsilon: f64,
    pub n: usize,
    pub dist_id: String,
    pub seed_index: usize,
    pub estimator: EstimatorKind,
    pub mse: f64,
    pub tv: f64,
    pub nll_per_sample: f64,
    pub wall_time_micros: u64,
}

impl SweepRecord {
    /// CSV row matching [`CSV_HEADER`]; floats use shortest round-trip form.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{:?},{},{},{},{},{:?},{:?},{:?},{}",
            self.k,
            self.epsilon,
            self.n,
            self.dist_id,
            self.seed_index,
            self.estimator,
            self.mse,
            self.tv,
            self.nll_per_sample,
            self.wall_time_micros
        )
    }

    fn sort_key(&self) -> (usize, OrdF64, usize, &str, usize, &'static str) {
        (
            self.k,
            OrdF64(self.epsilon),
            self.n,
            &self.dist_id,
            self.seed_index,
            self.estimator.name(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A (cell, seed) task that did not produce rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub k: usize,
    pub epsilon: f64,
    pub n: usize,
    pub dist_id: String,
    pub seed_index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub tasks: usize,
    pub records: usize,
    pub failures: Vec<SweepFailure>,
}

struct Cell {
    k: usize,
    epsilon: f64,
    n: usize,
    dist_id: String,
    theta: Arc<Distribution>,
    hash: u64,
}

/// FNV-1a over the cell coordinates.
fn cell_hash(k: usize, epsilon: f64, n: usize, dist_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&(k as u64).to_le_bytes());
    eat(&epsilon.to_bits().to_le_bytes());
    eat(&(n as u64).to_le_bytes());
    eat(dist_id.as_bytes());
    h
}

fn build_cells(config: &SweepConfig) -> (Vec<Cell>, Vec<SweepFailure>) {
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for spec in &config.dist_specs {
        let dist_id = spec.id();
        let thetas: Vec<(usize, Result<Distribution>)> = match spec {
            DistSpec::Zipf { s } => config
                .k_values
                .iter()
                .map(|&k| (k, zipf_distribution(ZipfSpec { k, s: *s })))
                .collect(),
            DistSpec::Histogram {
                path, format, n, ..
            } => {
                let format = format.unwrap_or_else(|| HistogramFormat::from_path(path));
                // The file's own sample size is not used; a missing one is fine.
                let loaded = ingest_histogram(path, format, Some(n.unwrap_or(1))).map(|(d, _)| d);
                vec![(loaded.as_ref().map(|d| d.k()).unwrap_or(0), loaded)]
            }
        };
        for (k, theta) in thetas {
            match theta {
                Ok(theta) => {
                    let theta = Arc::new(theta);
                    for &epsilon in &config.epsilon_values {
                        for &n in &config.n_values {
                            cells.push(Cell {
                                k,
                                epsilon,
                                n,
                                hash: cell_hash(k, epsilon, n, &dist_id),
                                dist_id: dist_id.clone(),
                                theta: Arc::clone(&theta),
                            });
                        }
                    }
                }
                Err(e) => failures.push(SweepFailure {
                    k,
                    epsilon: f64::NAN,
                    n: 0,
                    dist_id: dist_id.clone(),
                    seed_index: None,
                    message: e.to_string(),
                }),
            }
        }
    }
    (cells, failures)
}

fn run_task(cell: &Cell, seed_index: usize, config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let params = RRParams::from_epsilon(cell.k, cell.epsilon)?;
    let seed = Seed::new(config.master_seed, mix64(cell.hash, seed_index as u64));
    let (_, reports) = sample_dataset(&cell.theta, cell.n, &params, seed)?;
    let phi = empirical_histogram(&reports, cell.k)?;
    let mut rows = Vec::with_capacity(config.estimators.len());
    for &kind in &config.estimators {
        let start = Instant::now();
        let estimate = run_estimator(kind, &phi, &params, config.ibu_iters)?;
        let elapsed = start.elapsed().as_micros() as u64;
        let theta = &estimate.theta;
        rows.push(SweepRecord {
            k: cell.k,
            epsilon: cell.epsilon,
            n: cell.n,
            dist_id: cell.dist_id.clone(),
            seed_index,
            estimator: kind,
            mse: mse(theta, cell.theta.probs())?,
            tv: total_variation(theta, cell.theta.probs())?,
            nll_per_sample: neg_log_likelihood(theta, &phi, &params)?,
            wall_time_micros: if config.record_timing { elapsed } else { 0 },
        });
    }
    Ok(rows)
}

/// Runs the sweep on the current rayon pool and hands every row, in sorted
/// order, to `sink`. Task failures are collected in the summary.
pub fn run_sweep(config: &SweepConfig, mut sink: impl FnMut(&SweepRecord)) -> Result<SweepSummary> {
    config.validate()?;
    let (cells, mut failures) = build_cells(config);
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.n_seeds).map(move |s| (c, s)))
        .collect();
    let outcomes: Vec<Result<Vec<SweepRecord>>> = tasks
        .par_iter()
        .map(|&(c, s)| run_task(&cells[c], s, config))
        .collect();

    let mut records = Vec::new();
    for (&(c, s), outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(rows) => records.extend(rows),
            Err(e) => {
                let cell = &cells[c];
                failures.push(SweepFailure {
                    k: cell.k,
                    epsilon: cell.epsilon,
                    n: cell.n,
                    dist_id: cell.dist_id.clone(),
                    seed_index: Some(s),
                    message: e.to_string(),
                });
            }
        }
    }
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    for r in &records {
        sink(r);
    }
    Ok(SweepSummary {
        cells: cells.len(),
        tasks: tasks.len(),
        records: records.len(),
        failures,
    })
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

/// [`run_sweep`] on a dedicated pool of `threads` workers (rayon's default when `None`).
pub fn run_sweep_with_threads(
    config: &SweepConfig,
    threads: Option<usize>,
    sink: impl FnMut(&SweepRecord) + Send,
) -> Result<SweepSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run_sweep(config, sink))
}

/// Runs a sweep and writes the CSV (header included) to `out`.
pub fn write_sweep_csv<W: Write + Send>(
    config: &SweepConfig,
    threads: Option<usize>,
    out: &mut W,
) -> Result<SweepSummary> {
    let mut lines = Vec::new();
    let summary = run_sweep_with_threads(config, threads, |r| lines.push(r.to_csv_line()))?;
    writeln!(out, "{CSV_HEADER}")?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(summary)
}

/// Seed-averaged metrics of one (cell, estimator).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMean {
    pub k: usize,
    pub epsilon: f64,
    pub n: usize,
    pub dist_id: String,
    pub estimator: EstimatorKind,
    pub seeds: usize,
    pub mse: f64,
    pub nll_per_sample: f64,
}

/// Groups rows by cell and estimator and averages over seeds.
pub fn seed_means(records: &[SweepRecord]) -> Vec<CellMean> {
    let mut groups: BTreeMap<_, (usize, f64, f64)> = BTreeMap::new();
    for r in records {
        let key = (r.k, OrdF64(r.epsilon), r.n, r.dist_id.clone(), r.estimator);
        let e = groups.entry(key).or_insert((0, 0.0, 0.0));
        e.0 += 1;
        e.1 += r.mse;
        e.2 += r.nll_per_sample;
    }
    groups
        .into_iter()
        .map(|((k, eps, n, dist_id, estimator), (c, m, l))| CellMean {
            k,
            epsilon: eps.0,
            n,
            dist_id,
            estimator,
            seeds: c,
            mse: m / c as f64,
            nll_per_sample: l / c as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(estimators: Vec<EstimatorKind>) -> SweepConfig {
        SweepConfig {
            k_values: vec![10],
            epsilon_values: vec![2.0],
            n_values: vec![1000],
            dist_specs: vec![DistSpec::Zipf { s: 1.3 }],
            estimators,
            n_seeds: 1,
            ibu_iters: 100,
            master_seed: 3,
            record_timing: false,
        }
    }

    #[test]
    fn one_cell_one_seed_one_record() {
        let mut rows = Vec::new();
        let summary = run_sweep(&tiny(vec![EstimatorKind::Mle]), |r| rows.push(r.clone())).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(summary.cells, 1);
        assert_eq!(summary.tasks, 1);
        assert!(summary.failures.is_empty());
        assert_eq!(rows[0].dist_id, "zipf-1.3");
        assert_eq!(rows[0].wall_time_micros, 0);
    }

    #[test]
    fn csv_format() {
        let rec = SweepRecord {
            k: 3,
            epsilon: 2.0,
            n: 10,
            dist_id: "zipf-0.01".into(),
            seed_index: 4,
            estimator: EstimatorKind::InvP,
            mse: 0.1,
            tv: 1e-20,
            nll_per_sample: 1.0986122886681098,
            wall_time_micros: 7,
        };
        assert_eq!(
            rec.to_csv_line(),
            "3,2.0,10,zipf-0.01,4,invp,0.1,1e-20,1.0986122886681098,7"
        );
        assert_eq!(
            CSV_HEADER.split(',').count(),
            rec.to_csv_line().split(',').count()
        );
    }

    #[test]
    fn rows_are_sorted() {
        let mut config = tiny(vec![
            EstimatorKind::Mle,
            EstimatorKind::Inv,
            EstimatorKind::InvN,
        ]);
        config.n_seeds = 3;
        config.epsilon_values = vec![4.0, 1.0];
        let mut rows = Vec::new();
        run_sweep(&config, |r| rows.push(r.clone())).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 3);
        assert!(rows.windows(2).all(|w| w[0].sort_key() < w[1].sort_key()));
        assert_eq!(rows[0].epsilon, 1.0);
        assert_eq!(rows[0].estimator, EstimatorKind::Inv);
    }

    #[test]
    fn missing_histogram_is_recorded_not_fatal() {
        let mut config = tiny(vec![EstimatorKind::Mle]);
        config.dist_specs.push(DistSpec::Histogram {
            path: "/nonexistent/h.csv".into(),
            format: None,
            id: Some("missing".into()),
            n: None,
        });
        let mut rows = 0;
        let summary = run_sweep(&config, |_| rows += 1).unwrap();
        assert_eq!(rows, 1);
        assert_eq!(summary.failures.len(), 1);
        assert_eq!(summary.failures[0].dist_id, "missing");
    }

    #[test]
    fn validation() {
        let mut c = tiny(vec![EstimatorKind::Mle]);
        c.n_seeds = 0;
        assert!(matches!(run_sweep(&c, |_| {}), Err(Error::Config(_))));
        let mut c = tiny(vec![]);
        c.n_seeds = 1;
        assert!(c.validate().is_err());
        let mut c = tiny(vec![EstimatorKind::Mle]);
        c.epsilon_values = vec![0.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let json = r#"{
            "k_values": [10], "epsilon_values": [1.0], "n_values": [100],
            "dist_specs": [{"kind": "zipf", "s": 0.01},
                           {"kind": "histogram", "path": "h.csv", "id": "h"}],
            "estimators": ["mle", "invn"], "n_seeds": 2, "master_seed": 9
        }"#;
        let c: SweepConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.ibu_iters, DEFAULT_IBU_ITERS);
        assert!(!c.record_timing);
        assert_eq!(c.dist_specs[0].id(), "zipf-0.01");
        assert_eq!(c.dist_specs[1].id(), "h");
    }

    #[test]
    fn means_average_over_seeds() {
        let mut c = tiny(vec![EstimatorKind::Mle, EstimatorKind::InvP]);
        c.n_seeds = 4;
        let mut rows = Vec::new();
        run_sweep(&c, |r| rows.push(r.clone())).unwrap();
        let means = seed_means(&rows);
        assert_eq!(means.len(), 2);
        let mle: Vec<_> = rows
            .iter()
            .filter(|r| r.estimator == EstimatorKind::Mle)
            .collect();
        let want = mle.iter().map(|r| r.mse).sum::<f64>() / 4.0;
        let got = means
            .iter()
            .find(|m| m.estimator == EstimatorKind::Mle)
            .unwrap();
        assert_eq!(got.seeds, 4);
        assert!((got.mse - want).abs() < 1e-15);
    }
}
