//! Measurement and analysis: timed stage execution, speedup/efficiency
//! computation, sequential-fraction fitting, and CSV persistence.
//!
//! Definitions: `S(p) = T(1)/T(p)` and `E(p) = S(p)/p`, with `T(p)` the
//! median wall time over repetitions. The scaling model fitted is
//! `T(p) = T(1)·(f + (1−f)/p)` with `f` the non-parallelizable fraction.
//!
//! ```
//! use deskmd::bench::{amdahl_fit, amdahl_model_times};
//!
//! // Model data with a 30% sequential fraction is recovered exactly.
//! let rows = amdahl_model_times(0.3, 10.0, &[1, 2, 4, 8]);
//! let fit = amdahl_fit(&rows).unwrap();
//! assert!((fit.f - 0.3).abs() < 1e-12);
//! assert!((fit.t1 - 10.0).abs() < 1e-12);
//! assert!(!fit.clamped);
//! ```

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchStage {
    Em,
    Nvt,
    Md,
    Dock,
}

impl fmt::Display for BenchStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchStage::Em => write!(f, "EM"),
            BenchStage::Nvt => write!(f, "NVT"),
            BenchStage::Md => write!(f, "MD"),
            BenchStage::Dock => write!(f, "DOCK"),
        }
    }
}

impl FromStr for BenchStage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "EM" => Ok(BenchStage::Em),
            "NVT" => Ok(BenchStage::Nvt),
            "MD" => Ok(BenchStage::Md),
            "DOCK" => Ok(BenchStage::Dock),
            other => Err(Error::InvalidArgument(format!("unknown stage {other:?}"))),
        }
    }
}

/// One raw timing sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub stage: BenchStage,
    /// Steps or conformers, depending on the stage.
    pub workload: usize,
    pub workers: usize,
    pub repetition: usize,
    pub wall_seconds: f64,
}

/// One derived scaling row for a worker count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub workers: usize,
    pub median_seconds: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

/// Estimated sequential fraction and baseline from observed scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmdahlFit {
    /// Sequential fraction in [0, 1].
    pub f: f64,
    /// Fitted single-worker time in seconds.
    pub t1: f64,
    /// Root-mean-square of fitted vs observed T(p).
    pub residual: f64,
    /// True when the raw estimate fell outside [0, 1] and was clamped.
    pub clamped: bool,
}

impl AmdahlFit {
    /// Summary line for the text log.
    pub fn log_line(&self) -> String {
        format!("f={} t1={} residual={} clamped={}", self.f, self.t1, self.residual, self.clamped)
    }
}

/// Run `warmup` untimed executions, then `repetitions` timed ones on a
/// monotonic clock. The runner returns a checksum of its output; a mismatch
/// across repetitions means different work was timed and invalidates the
/// measurement.
pub fn measure<F>(
    stage: BenchStage,
    workload: usize,
    workers: usize,
    repetitions: usize,
    warmup: usize,
    mut runner: F,
) -> Result<Vec<BenchmarkRecord>>
where
    F: FnMut() -> Result<u64>,
{
    if repetitions == 0 {
        return Err(Error::InvalidArgument("measure needs repetitions >= 1".into()));
    }
    for _ in 0..warmup {
        runner()?;
    }
    let mut records = Vec::with_capacity(repetitions);
    let mut checksum = None;
    for repetition in 0..repetitions {
        let start = Instant::now();
        let sum = runner()?;
        let wall_seconds = start.elapsed().as_secs_f64();
        match checksum {
            None => checksum = Some(sum),
            Some(expected) if expected != sum => {
                return Err(Error::MeasurementInvalid(format!(
                    "output checksum changed between repetitions ({expected:#x} vs {sum:#x})"
                )));
            }
            _ => {}
        }
        records.push(BenchmarkRecord { stage, workload, workers, repetition, wall_seconds });
    }
    Ok(records)
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median times per worker count and the derived speedup/efficiency rows,
/// sorted by worker count. The records must include a `workers = 1`
/// baseline.
pub fn compute_scaling(records: &[BenchmarkRecord]) -> Result<Vec<ScalingRow>> {
    let mut by_workers: Vec<(usize, Vec<f64>)> = Vec::new();
    for r in records {
        match by_workers.iter_mut().find(|(w, _)| *w == r.workers) {
            Some((_, v)) => v.push(r.wall_seconds),
            None => by_workers.push((r.workers, vec![r.wall_seconds])),
        }
    }
    by_workers.sort_by_key(|(w, _)| *w);
    let t1 = by_workers
        .iter()
        .find(|(w, _)| *w == 1)
        .map(|(_, v)| median(v.clone()))
        .ok_or_else(|| {
            Error::InvalidArgument("no workers=1 baseline; speedup undefined".into())
        })?;
    Ok(by_workers
        .into_iter()
        .map(|(workers, times)| {
            let median_seconds = median(times);
            let speedup = t1 / median_seconds;
            ScalingRow { workers, median_seconds, speedup, efficiency: speedup / workers as f64 }
        })
        .collect())
}

/// Least-squares fit of `T(p) = a + b/p`, recovering `t1 = a + b` and
/// `f = a/(a + b)`. `f` is clamped into [0, 1] with the clamp flagged.
pub fn amdahl_fit(rows: &[ScalingRow]) -> Result<AmdahlFit> {
    let mut distinct: Vec<usize> = rows.iter().map(|r| r.workers).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidArgument(
            "Amdahl fit needs at least 2 distinct worker counts".into(),
        ));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| 1.0 / r.workers as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_seconds).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    let b = cov / var;
    let a = mean_y - b * mean_x;
    let t1 = a + b;
    let raw_f = a / t1;
    let clamped = !(0.0..=1.0).contains(&raw_f);
    let f = raw_f.clamp(0.0, 1.0);
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let fitted = a + b * x;
        ss += (fitted - y) * (fitted - y);
    }
    let residual = (ss / n).sqrt();
    if t1 <= 0.0 {
        return Err(Error::InvalidArgument(format!("fitted baseline t1 = {t1} is not positive")));
    }
    Ok(AmdahlFit { f, t1, residual, clamped })
}

pub const RAW_CSV_HEADER: &str = "stage,workload,workers,repetition,wall_seconds";
pub const SCALING_CSV_HEADER: &str = "workers,median_seconds,speedup,efficiency";

pub fn records_to_csv(records: &[BenchmarkRecord]) -> String {
    let mut out = String::from(RAW_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.stage, r.workload, r.workers, r.repetition, r.wall_seconds
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<BenchmarkRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != RAW_CSV_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header {RAW_CSV_HEADER:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse { line: lineno, message: "expected 5 fields".into() });
        }
        let bad = |what: &str| Error::Parse { line: lineno, message: format!("bad {what} field") };
        let record = BenchmarkRecord {
            stage: fields[0].parse().map_err(|_| bad("stage"))?,
            workload: fields[1].parse().map_err(|_| bad("workload"))?,
            workers: fields[2].parse().map_err(|_| bad("workers"))?,
            repetition: fields[3].parse().map_err(|_| bad("repetition"))?,
            wall_seconds: fields[4].parse().map_err(|_| bad("wall_seconds"))?,
        };
        if record.wall_seconds <= 0.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("wall_seconds must be positive, got {}", record.wall_seconds),
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn scaling_to_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from(SCALING_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.workers, r.median_seconds, r.speedup, r.efficiency
        ));
    }
    out
}

pub fn scaling_from_csv(text: &str) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != SCALING_CSV_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header {SCALING_CSV_HEADER:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse { line: lineno, message: "expected 4 fields".into() });
        }
        let bad = |what: &str| Error::Parse { line: lineno, message: format!("bad {what} field") };
        rows.push(ScalingRow {
            workers: fields[0].parse().map_err(|_| bad("workers"))?,
            median_seconds: fields[1].parse().map_err(|_| bad("median_seconds"))?,
            speedup: fields[2].parse().map_err(|_| bad("speedup"))?,
            efficiency: fields[3].parse().map_err(|_| bad("efficiency"))?,
        });
    }
    Ok(rows)
}

/// Synthetic model data `T(p) = t1·(f + (1−f)/p)` for tests and examples.
pub fn amdahl_model_times(f: f64, t1: f64, workers: &[usize]) -> Vec<ScalingRow> {
    let rows: Vec<(usize, f64)> = workers
        .iter()
        .map(|&p| (p, t1 * (f + (1.0 - f) / p as f64)))
        .collect();
    let t1_obs = rows.iter().find(|(p, _)| *p == 1).map(|(_, t)| *t).unwrap_or(t1);
    rows.into_iter()
        .map(|(p, t)| ScalingRow {
            workers: p,
            median_seconds: t,
            speedup: t1_obs / t,
            efficiency: t1_obs / t / p as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(workers: usize, repetition: usize, wall: f64) -> BenchmarkRecord {
        BenchmarkRecord { stage: BenchStage::Dock, workload: 100, workers, repetition, wall_seconds: wall }
    }

    #[test]
    fn measure_produces_requested_repetitions() {
        let records = measure(BenchStage::Dock, 10, 1, 5, 2, || Ok(42)).unwrap();
        assert_eq!(records.len(), 5);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.repetition, i);
            assert!(r.wall_seconds >= 0.0);
        }
    }

    #[test]
    fn measure_clock_sanity() {
        let records = measure(BenchStage::Dock, 1, 1, 2, 0, || {
            std::thread::sleep(std::time::Duration::from_millis(100));
            Ok(0)
        })
        .unwrap();
        for r in &records {
            assert!(r.wall_seconds >= 0.09 && r.wall_seconds < 0.5, "wall {}", r.wall_seconds);
        }
    }

    #[test]
    fn measure_rejects_checksum_drift() {
        let mut counter = 0u64;
        let err = measure(BenchStage::Dock, 1, 1, 3, 0, || {
            counter += 1;
            Ok(counter)
        })
        .unwrap_err();
        assert!(matches!(err, Error::MeasurementInvalid(_)));
    }

    #[test]
    fn scaling_ideal() {
        let records = vec![rec(1, 0, 100.0), rec(4, 0, 25.0)];
        let rows = compute_scaling(&records).unwrap();
        assert_eq!(rows[0].speedup, 1.0);
        assert_eq!(rows[1].speedup, 4.0);
        assert_eq!(rows[1].efficiency, 1.0);
    }

    #[test]
    fn scaling_flat() {
        let records = vec![rec(1, 0, 50.0), rec(2, 0, 50.0), rec(4, 0, 50.0)];
        let rows = compute_scaling(&records).unwrap();
        for r in &rows {
            assert_eq!(r.speedup, 1.0);
            assert_eq!(r.efficiency, 1.0 / r.workers as f64);
        }
    }

    #[test]
    fn superlinear_speedup_reported_as_measured() {
        let records = vec![rec(1, 0, 9.10), rec(8, 0, 1.0)];
        let rows = compute_scaling(&records).unwrap();
        assert!((rows[1].speedup - 9.10).abs() < 1e-12);
    }

    #[test]
    fn scaling_requires_baseline() {
        let records = vec![rec(2, 0, 10.0), rec(4, 0, 5.0)];
        assert!(compute_scaling(&records).is_err());
    }

    #[test]
    fn scaling_uses_median_over_repetitions() {
        let records = vec![rec(1, 0, 10.0), rec(1, 1, 100.0), rec(1, 2, 12.0), rec(2, 0, 6.0)];
        let rows = compute_scaling(&records).unwrap();
        assert_eq!(rows[0].median_seconds, 12.0);
    }

    #[test]
    fn amdahl_exact_recovery() {
        let rows = amdahl_model_times(0.3, 100.0, &[1, 2, 4, 8]);
        assert!((rows[1].median_seconds - 65.0).abs() < 1e-12);
        assert!((rows[3].median_seconds - 38.75).abs() < 1e-12);
        let fit = amdahl_fit(&rows).unwrap();
        assert!((fit.f - 0.3).abs() < 1e-9, "f = {}", fit.f);
        assert!((fit.t1 - 100.0).abs() < 1e-6);
        assert!(fit.residual < 1e-9);
        assert!(!fit.clamped);
    }

    #[test]
    fn amdahl_fully_sequential() {
        let rows = amdahl_model_times(1.0, 42.0, &[1, 2, 4, 8]);
        let fit = amdahl_fit(&rows).unwrap();
        assert!((fit.f - 1.0).abs() < 1e-9);
    }

    #[test]
    fn amdahl_degenerate_design_errors() {
        let rows = vec![
            ScalingRow { workers: 2, median_seconds: 5.0, speedup: 1.0, efficiency: 0.5 },
            ScalingRow { workers: 2, median_seconds: 5.0, speedup: 1.0, efficiency: 0.5 },
        ];
        assert!(amdahl_fit(&rows).is_err());
    }

    #[test]
    fn raw_csv_round_trip() {
        let records: Vec<BenchmarkRecord> = (0..20)
            .map(|i| BenchmarkRecord {
                stage: if i % 2 == 0 { BenchStage::Md } else { BenchStage::Dock },
                workload: 100 + i,
                workers: 1 + i % 8,
                repetition: i / 4,
                wall_seconds: 0.1 + i as f64 * std::f64::consts::PI,
            })
            .collect();
        let csv = records_to_csv(&records);
        let back = records_from_csv(&csv).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn header_only_csv_is_empty() {
        let records = records_from_csv("stage,workload,workers,repetition,wall_seconds\n").unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn negative_wall_seconds_rejected() {
        let text = format!("{RAW_CSV_HEADER}\nDOCK,10,1,0,-1.5\n");
        let err = records_from_csv(&text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn scaling_csv_round_trip() {
        let rows = amdahl_model_times(0.2, 7.5, &[1, 2, 4, 8]);
        let back = scaling_from_csv(&scaling_to_csv(&rows)).unwrap();
        assert_eq!(back, rows);
    }
}
