//! Benchmark harness: the pass/fail suite, baselines, ablations, the growth
//! simulation and CSV output.

pub mod backends;
pub mod checks;
pub mod scenario;
pub mod studies;
pub mod suite;

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub use backends::{EngineBackend, FifoBackend, MemoryBackend, VectorBackend};
pub use checks::{ablation_check, baseline_check, growth_check, Check};
pub use scenario::{ImportantSpec, NoiseSpec, Probe, Scenario};
pub use studies::{
    beta2_comparison, run_ablation, run_baseline, run_forgetting, run_growth, EvalOutcome,
    ForgettingOutcome, GrowthPlan, ImportantSource, BACKENDS, COMPONENTS,
};
pub use suite::{latency_curve, run_test, LatencyPoint, TestOutcome, TESTS};

/// One CSV line. Empty cells are written for metrics that do not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub test: String,
    pub run: usize,
    pub score: Option<f64>,
    pub metric_numer: Option<u64>,
    pub metric_denom: Option<u64>,
    pub latency_us: Option<f64>,
    pub ltm_size: Option<usize>,
}

impl CsvRow {
    /// Wall-clock latency is only kept when `timings` is set, so default
    /// output is reproducible byte for byte.
    pub fn from_test(o: &TestOutcome, run: usize, timings: bool) -> Self {
        CsvRow {
            test: o.test.clone(),
            run,
            score: Some(o.score()),
            metric_numer: Some(o.numer),
            metric_denom: Some(o.denom),
            latency_us: if timings { o.latency_us } else { None },
            ltm_size: Some(o.ltm_size),
        }
    }

    pub fn from_eval(prefix: &str, o: &EvalOutcome, run: usize) -> Vec<Self> {
        let noise = if o.noise_total == 0 { 0.0 } else { o.noise_retained as f64 / o.noise_total as f64 };
        vec![
            CsvRow {
                test: format!("{prefix}:{}:recall", o.system),
                run,
                score: Some(o.recall()),
                metric_numer: Some(o.recalled as u64),
                metric_denom: Some(o.probes as u64),
                latency_us: None,
                ltm_size: Some(o.ltm_size),
            },
            CsvRow {
                test: format!("{prefix}:{}:noise_retained", o.system),
                run,
                score: Some(noise),
                metric_numer: Some(o.noise_retained as u64),
                metric_denom: Some(o.noise_total as u64),
                latency_us: None,
                ltm_size: Some(o.ltm_size),
            },
        ]
    }

    /// One row per cycle; `run` is the cycle number.
    pub fn from_growth(forgetting: bool, series: &[usize]) -> Vec<Self> {
        let name = if forgetting { "growth:on" } else { "growth:off" };
        series
            .iter()
            .enumerate()
            .map(|(i, &n)| CsvRow {
                test: name.to_string(),
                run: i + 1,
                score: None,
                metric_numer: None,
                metric_denom: None,
                latency_us: None,
                ltm_size: Some(n),
            })
            .collect()
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable summary of suite outcomes, one row per test.
pub fn format_table(outcomes: &[TestOutcome]) -> String {
    let mut s = format!("{:<14} {:>9} {:<6} {}\n", "test", "score", "status", "detail");
    for o in outcomes {
        s.push_str(&format!(
            "{:<14} {:>9} {:<6} {}\n",
            o.test,
            format!("{}/{}", o.numer, o.denom),
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        ));
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    s.push_str(&format!("{passed}/{} tests passing\n", outcomes.len()));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_inapplicable_cells_empty() {
        let o = TestOutcome {
            test: "latency".into(),
            passed: true,
            numer: 5,
            denom: 5,
            detail: String::new(),
            latency_us: Some(12.5),
            ltm_size: 360,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[CsvRow::from_test(&o, 1, false), CsvRow::from_test(&o, 2, true)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "test,run,score,metric_numer,metric_denom,latency_us,ltm_size\n\
             latency,1,1.0,5,5,,360\n\
             latency,2,1.0,5,5,12.5,360\n"
        );
    }
}
