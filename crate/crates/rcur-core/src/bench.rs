//! Timing and accuracy harness comparing the sampled CUR pipeline against
//! full-matrix RPCA on generated instances.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::relative_error;
use crate::error::Result;
use crate::rcur::{rcur_uniform, RcurConfig};
use crate::rpca::altproj;
use crate::sampling::split_seed;
use crate::synth::{self, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Markdown,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub seed: u64,
    pub trials: usize,
    /// Trials where either pipeline returned an error.
    pub failures: usize,
    pub rcur_seconds: f64,
    pub rpca_seconds: f64,
    pub speedup: f64,
    pub rcur_rel_error: f64,
    pub rpca_rel_error: f64,
}

fn median(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Runs both pipelines `trials` times with split seeds and reports median
/// wall time and error. Timing brackets the solver calls only; generation
/// is outside the clock. Per-trial pipeline failures are tallied, not
/// fatal; the report covers the successful trials.
pub fn bench_compare(
    base: &SynthConfig,
    rcur_cfg: &RcurConfig,
    trials: usize,
) -> Result<BenchReport> {
    if trials == 0 {
        return Err(crate::error::Error::InvalidParameter(
            "bench needs at least one trial".into(),
        ));
    }
    let mut rcur_times = Vec::new();
    let mut rpca_times = Vec::new();
    let mut rcur_errs = Vec::new();
    let mut rpca_errs = Vec::new();
    let mut failures = 0;
    for t in 0..trials {
        let seed = split_seed(base.seed, t as u64);
        let cfg = SynthConfig { seed, ..*base };
        let gt = synth::generate(&cfg)?;
        let mut trial_cfg = rcur_cfg.clone();
        trial_cfg.row_sampling.seed = split_seed(seed, 1);
        trial_cfg.col_sampling.seed = split_seed(seed, 2);

        let t0 = Instant::now();
        let rcur_out = rcur_uniform(&gt.d, base.r, &trial_cfg);
        let rcur_elapsed = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let rpca_out = altproj(&gt.d, &trial_cfg.rpca);
        let rpca_elapsed = t1.elapsed().as_secs_f64();

        match (rcur_out, rpca_out) {
            (Ok(cur), Ok(full)) => {
                rcur_times.push(rcur_elapsed);
                rpca_times.push(rpca_elapsed);
                rcur_errs.push(relative_error(&gt.l, &cur.model.reconstruct())?);
                rpca_errs.push(relative_error(&gt.l, &full.l_hat)?);
            }
            _ => failures += 1,
        }
    }
    let rcur_seconds = median(&mut rcur_times);
    let rpca_seconds = median(&mut rpca_times);
    Ok(BenchReport {
        m: base.m,
        n: base.n,
        r: base.r,
        alpha: base.alpha,
        kappa: base.kappa,
        seed: base.seed,
        trials,
        failures,
        rcur_seconds,
        rpca_seconds,
        speedup: rpca_seconds / rcur_seconds,
        rcur_rel_error: median(&mut rcur_errs),
        rpca_rel_error: median(&mut rpca_errs),
    })
}

/// Renders reports as one table row per instance.
pub fn emit_table(reports: &[BenchReport], format: TableFormat) -> String {
    let header = [
        "size", "r", "alpha", "rcur_s", "rpca_s", "speedup", "rcur_err", "rpca_err",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                format!("{}x{}", r.m, r.n),
                r.r.to_string(),
                format!("{}", r.alpha),
                format!("{:.4}", r.rcur_seconds),
                format!("{:.4}", r.rpca_seconds),
                format!("{:.2}", r.speedup),
                format!("{:.3e}", r.rcur_rel_error),
                format!("{:.3e}", r.rpca_rel_error),
            ]
        })
        .collect();
    match format {
        TableFormat::Csv => {
            let mut out = header.join(",");
            out.push('\n');
            for row in rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        TableFormat::Markdown => {
            let mut out = format!("| {} |\n", header.join(" | "));
            out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
            for row in rows {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rpca::RpcaConfig;
    use crate::sampling::SampleConfig;

    fn small_setup(alpha: f64) -> (SynthConfig, RcurConfig) {
        let base = SynthConfig {
            m: 60,
            n: 60,
            r: 2,
            kappa: 2.0,
            alpha,
            outlier_magnitude: 10.0,
            seed: 7,
        };
        let cfg = RcurConfig::new(
            RpcaConfig::new(2),
            SampleConfig::counted(30, 1),
            SampleConfig::counted(30, 2),
        );
        (base, cfg)
    }

    #[test]
    fn report_schema_complete_and_positive() {
        let (base, cfg) = small_setup(0.02);
        let rep = bench_compare(&base, &cfg, 2).unwrap();
        assert_eq!(rep.trials, 2);
        assert_eq!(rep.failures, 0);
        assert!(rep.rcur_seconds > 0.0);
        assert!(rep.rpca_seconds > 0.0);
        assert!((rep.speedup - rep.rpca_seconds / rep.rcur_seconds).abs() < 1e-12);
        assert!(rep.rcur_rel_error.is_finite());
        assert!(rep.rpca_rel_error.is_finite());
    }

    #[test]
    fn both_pipelines_agree_on_easy_input() {
        let (base, cfg) = small_setup(0.0);
        let rep = bench_compare(&base, &cfg, 1).unwrap();
        assert!(rep.rcur_rel_error <= 1e-6, "rcur err {}", rep.rcur_rel_error);
        assert!(rep.rpca_rel_error <= 1e-6, "rpca err {}", rep.rpca_rel_error);
    }

    #[test]
    fn empty_table_is_header_only() {
        let csv = emit_table(&[], TableFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
        let md = emit_table(&[], TableFormat::Markdown);
        assert_eq!(md.lines().count(), 2);
    }

    #[test]
    fn table_formats_agree_numerically() {
        let (base, cfg) = small_setup(0.02);
        let rep = bench_compare(&base, &cfg, 1).unwrap();
        let csv = emit_table(std::slice::from_ref(&rep), TableFormat::Csv);
        let md = emit_table(std::slice::from_ref(&rep), TableFormat::Markdown);
        let csv_row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let md_row: Vec<&str> = md
            .lines()
            .nth(2)
            .unwrap()
            .trim_matches('|')
            .split('|')
            .map(str::trim)
            .collect();
        assert_eq!(csv_row, md_row);
        assert_eq!(csv_row.len(), 8);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
