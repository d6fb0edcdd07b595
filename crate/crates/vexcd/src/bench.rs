//! Multi-strategy, multi-seed benchmark: one simulated session per
//! (strategy, seed) cell, run in parallel and merged in cell order.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vexcd_core::eval::{fully_supervised_baseline, mean_std};
use vexcd_core::{run_simulated, EvalRecord, PreparedData, SessionConfig, Strategy, TrainConfig};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    /// Template for every cell; its seeds are replaced by the cell seed.
    pub session: SessionConfig,
    /// Also train on the whole training half once per seed.
    pub baseline: bool,
}

impl BenchConfig {
    fn cell_config(&self, strategy: Strategy, seed: u64) -> SessionConfig {
        let mut c = self.session.clone();
        c.strategy = strategy;
        c.seed = seed;
        c.train.seed = seed;
        c.optimizer.seed = seed;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub iteration: usize,
    pub sampling_rate_pct: f64,
    /// Mean and population std over the seeds that produced an EER.
    pub eer_mean: Option<f64>,
    pub eer_std: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub fully_supervised_eer_mean: Option<f64>,
    pub fully_supervised_eer_std: Option<f64>,
}

impl Summary {
    pub fn row(&self, strategy: Strategy, iteration: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy.as_str() && r.iteration == iteration)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub records: Vec<EvalRecord>,
    pub summary: Summary,
}

/// Seconds since the first call in this process.
pub fn monotonic_seconds() -> f64 {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

pub fn run_benchmark(data: Arc<PreparedData>, config: &BenchConfig) -> Result<BenchResult> {
    if config.strategies.is_empty() || config.seeds.is_empty() {
        return Err(Error::Invalid(
            "benchmark needs at least one strategy and one seed".into(),
        ));
    }
    let cells: Vec<(Strategy, u64)> = config
        .strategies
        .iter()
        .flat_map(|&s| config.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let per_cell: Vec<Vec<EvalRecord>> = cells
        .par_iter()
        .map(|&(s, seed)| run_simulated(data.clone(), config.cell_config(s, seed), Some(monotonic_seconds)))
        .collect::<std::result::Result<_, _>>()?;
    let records: Vec<EvalRecord> = per_cell.into_iter().flatten().collect();

    let baseline: Vec<f64> = if config.baseline && data.has_test_ground_truth() {
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let train = TrainConfig {
                    seed,
                    ..config.session.train.clone()
                };
                fully_supervised_baseline(&data, &train)
            })
            .collect::<std::result::Result<_, _>>()?
    } else {
        Vec::new()
    };
    let (fs_mean, fs_std) = if baseline.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&baseline);
        (Some(m), Some(s))
    };
    let summary = Summary {
        rows: summarize(&records, &config.strategies),
        fully_supervised_eer_mean: fs_mean,
        fully_supervised_eer_std: fs_std,
    };
    Ok(BenchResult { records, summary })
}

/// Per-strategy, per-iteration mean ± std, strategies in the given order.
pub fn summarize(records: &[EvalRecord], strategies: &[Strategy]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for s in strategies {
        let mut by_iter: BTreeMap<usize, Vec<&EvalRecord>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.strategy == s.as_str()) {
            by_iter.entry(r.iteration).or_default().push(r);
        }
        for (iteration, group) in by_iter {
            let eers: Vec<f64> = group.iter().filter_map(|r| r.eer).collect();
            let rates: Vec<f64> = group.iter().map(|r| r.sampling_rate_pct).collect();
            let (eer_mean, eer_std) = if eers.is_empty() {
                (None, None)
            } else {
                let (m, sd) = mean_std(&eers);
                (Some(m), Some(sd))
            };
            rows.push(SummaryRow {
                strategy: s.as_str().to_string(),
                iteration,
                sampling_rate_pct: mean_std(&rates).0,
                eer_mean,
                eer_std,
                runs: eers.len(),
            });
        }
    }
    rows
}

pub const CSV_HEADER: [&str; 6] = [
    "strategy",
    "seed",
    "iteration",
    "sampling_rate_pct",
    "eer",
    "wall_time_s",
];

/// Writes one row per record. Floats use the shortest round-trip form, so
/// identical runs give identical bytes apart from `wall_time_s`.
pub fn write_csv(records: &[EvalRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.strategy.clone(),
            r.seed.to_string(),
            r.iteration.to_string(),
            r.sampling_rate_pct.to_string(),
            r.eer.map(|e| e.to_string()).unwrap_or_default(),
            format!("{:.6}", r.wall_time_s),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv(input: impl std::io::Read) -> Result<Vec<EvalRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        fn num<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
            let v = row.get(i).unwrap_or("");
            v.parse()
                .map_err(|_| Error::Invalid(format!("column {} holds `{v}`", CSV_HEADER[i])))
        }
        out.push(EvalRecord {
            strategy: field(0).to_string(),
            seed: num(&row, 1)?,
            iteration: num(&row, 2)?,
            sampling_rate_pct: num(&row, 3)?,
            eer: if field(4).is_empty() { None } else { Some(num(&row, 4)?) },
            wall_time_s: num(&row, 5)?,
        });
    }
    Ok(out)
}

/// The CSV with its `wall_time_s` column removed, for determinism checks.
pub fn csv_without_wall_time(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|line| line.rsplit_once(',').map_or(line, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
