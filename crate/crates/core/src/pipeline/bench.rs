use serde::Serialize;

use crate::data_processor::{EvaluationRecord, ThresholdProfile};
use crate::nullifier_registry::NullifierSet;

use super::batch::{run_batch, BatchOptions};
use super::{Keys, PhaseTimings, SyntheticCorpus};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            sizes: vec![10, 50, 100],
            repeats: 3,
            workers: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub size: usize,
    pub repeat: usize,
    pub total_seconds: f64,
    pub seconds_per_molecule: f64,
    pub throughput: f64,
    pub success_rate: f64,
    pub peak_memory_kib: Option<u64>,
    /// Mean per-molecule phase times.
    pub phases: PhaseTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub runs: usize,
    pub total_seconds_mean: f64,
    pub total_seconds_std: f64,
    pub seconds_per_molecule_mean: f64,
    pub seconds_per_molecule_std: f64,
    /// Coefficient of variation of the per-molecule time.
    pub seconds_per_molecule_cv: f64,
    pub throughput_mean: f64,
    pub throughput_std: f64,
    pub peak_memory_mib: Option<f64>,
    pub success_rate_mean: f64,
    pub phases_mean: PhaseTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub workers: usize,
    pub rows: Vec<BenchRow>,
    pub runs: Vec<BenchRun>,
}

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "molecules,avg_total_time_s,total_time_std_s,time_per_molecule_s,\
time_per_molecule_std_s,time_per_molecule_cv,throughput_mol_per_s,throughput_std,peak_memory_mb,success_rate_pct";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.5},{:.5},{:.4},{:.3},{:.3},{},{:.1}\n",
                r.size,
                r.total_seconds_mean,
                r.total_seconds_std,
                r.seconds_per_molecule_mean,
                r.seconds_per_molecule_std,
                r.seconds_per_molecule_cv,
                r.throughput_mean,
                r.throughput_std,
                r.peak_memory_mib
                    .map_or(String::new(), |m| format!("{m:.1}")),
                100.0 * r.success_rate_mean,
            ));
        }
        out
    }

    pub fn row(&self, size: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.size == size)
    }
}

/// Runs every size `repeats` times over a synthetic passing corpus, each run
/// against a fresh in-memory registry.
pub fn bench(keys: &Keys, profile: &ThresholdProfile, options: &BenchOptions) -> BenchReport {
    let max = options.sizes.iter().copied().max().unwrap_or(0);
    let corpus: Vec<EvaluationRecord> = SyntheticCorpus::new(options.seed).passing(max);
    bench_corpus(&corpus, keys, profile, options)
}

/// As [`bench`] over a caller-supplied corpus, truncated to each size.
/// Sizes larger than the corpus are skipped with a warning.
pub fn bench_corpus(
    corpus: &[EvaluationRecord],
    keys: &Keys,
    profile: &ThresholdProfile,
    options: &BenchOptions,
) -> BenchReport {
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &size in &options.sizes {
        if size > corpus.len() {
            log::warn!("skipping size {size}: corpus has {} records", corpus.len());
            continue;
        }
        let start = runs.len();
        for repeat in 0..options.repeats {
            let registry = NullifierSet::in_memory();
            let batch = BatchOptions {
                workers: options.workers,
                seed: Some(options.seed ^ ((size as u64) << 32) ^ repeat as u64),
            };
            let report = run_batch(&corpus[..size], keys, profile, &registry, &batch);
            log::info!("size {size} repeat {repeat}: {:.3}s", report.total_seconds);
            runs.push(BenchRun {
                size,
                repeat,
                total_seconds: report.total_seconds,
                seconds_per_molecule: report.seconds_per_molecule,
                throughput: report.throughput,
                success_rate: report.success_rate,
                peak_memory_kib: report.peak_memory_kib,
                phases: report.phase_totals.scaled(1.0 / size.max(1) as f64),
            });
        }
        let these = &runs[start..];
        let col = |f: fn(&BenchRun) -> f64| mean_std(&these.iter().map(f).collect::<Vec<_>>());
        let (total_mean, total_std) = col(|r| r.total_seconds);
        let (per_mean, per_std) = col(|r| r.seconds_per_molecule);
        let (tp_mean, tp_std) = col(|r| r.throughput);
        let (success, _) = col(|r| r.success_rate);
        let mut phases = PhaseTimings::default();
        for r in these {
            phases.add(&r.phases);
        }
        rows.push(BenchRow {
            size,
            runs: these.len(),
            total_seconds_mean: total_mean,
            total_seconds_std: total_std,
            seconds_per_molecule_mean: per_mean,
            seconds_per_molecule_std: per_std,
            seconds_per_molecule_cv: if per_mean > 0.0 {
                per_std / per_mean
            } else {
                0.0
            },
            throughput_mean: tp_mean,
            throughput_std: tp_std,
            peak_memory_mib: these
                .iter()
                .filter_map(|r| r.peak_memory_kib)
                .max()
                .map(|k| k as f64 / 1024.0),
            success_rate_mean: success,
            phases_mean: phases.scaled(1.0 / these.len().max(1) as f64),
        });
    }
    BenchReport {
        workers: options.workers,
        rows,
        runs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::test_keys::keys;

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(mean_std(&[]), (0.0, 0.0));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn harness_arithmetic() {
        let opts = BenchOptions {
            sizes: vec![1, 2],
            repeats: 2,
            workers: 1,
            seed: 3,
        };
        let r = bench(keys(), &ThresholdProfile::default(), &opts);
        assert_eq!(r.runs.len(), 4);
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.success_rate_mean == 1.0));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("molecules,"));
    }
}
