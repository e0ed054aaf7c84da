//! Aggregation across trials: mean and sample standard deviation per
//! `(K, block)` of the information, capacities and diagnostics, per-delay
//! curves and per-rule score tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_run_trace, write_atomic, Evaluation, JobTrace, RunTrace};
use crate::error::{Error, Result};

pub const REPORT_DIR: &str = "report";

/// Mean and sample standard deviation (`n - 1`); a single value has
/// deviation 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiRow {
    #[serde(rename = "K_multiplicity")]
    pub k_multiplicity: u32,
    pub block: usize,
    pub n: usize,
    pub mi_mean: f64,
    pub mi_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    #[serde(rename = "K_multiplicity")]
    pub k_multiplicity: u32,
    pub block: usize,
    pub n: usize,
    pub mc_mean: Option<f64>,
    pub mc_sd: Option<f64>,
    pub bc2_mean: Option<f64>,
    pub bc2_sd: Option<f64>,
    pub bc3_mean: Option<f64>,
    pub bc3_sd: Option<f64>,
    pub lag1_mi_median_mean: Option<f64>,
    pub lag1_mi_median_sd: Option<f64>,
    pub w_internal_top50_mean: f64,
    pub w_input_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    #[serde(rename = "K_multiplicity")]
    pub k_multiplicity: u32,
    pub block: usize,
    pub task: String,
    pub tau: usize,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleRow {
    #[serde(rename = "K_multiplicity")]
    pub k_multiplicity: u32,
    pub block: usize,
    pub arity: usize,
    pub rule_id: u32,
    pub separable: bool,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepReport {
    pub mi: Vec<MiRow>,
    pub scores: Vec<ScoreRow>,
    pub per_delay: Vec<DelayRow>,
    /// Sorted by descending mean within each `(K, block, arity)`.
    pub per_rule: Vec<RuleRow>,
}

impl SweepReport {
    pub fn score(&self, k_multiplicity: u32, block: usize) -> Option<&ScoreRow> {
        self.scores.iter().find(|r| r.k_multiplicity == k_multiplicity && r.block == block)
    }
}

fn optional(values: Vec<Option<f64>>) -> (Option<f64>, Option<f64>) {
    let present: Vec<f64> = values.into_iter().flatten().collect();
    if present.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_sd(&present);
        (Some(m), Some(s))
    }
}

/// Aggregates a run directory (complete or partial).
pub fn sweep_report(run_dir: &Path) -> Result<SweepReport> {
    aggregate(&load_run_trace(run_dir)?)
}

pub fn aggregate(trace: &RunTrace) -> Result<SweepReport> {
    if trace.jobs.is_empty() {
        return Err(Error::InsufficientData("no job directories found".into()));
    }
    let mut by_k: BTreeMap<u32, Vec<&JobTrace>> = BTreeMap::new();
    for job in &trace.jobs {
        by_k.entry(job.k_multiplicity).or_default().push(job);
    }
    let mut report = SweepReport::default();
    for (&k, jobs) in &by_k {
        let mut mi: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for row in jobs.iter().flat_map(|j| &j.ri).filter(|r| !r.skipped()) {
            mi.entry(row.block).or_default().push(row.mi_nats);
        }
        for (block, values) in mi {
            let (mi_mean, mi_sd) = mean_sd(&values);
            report.mi.push(MiRow {
                k_multiplicity: k,
                block,
                n: values.len(),
                mi_mean,
                mi_sd,
            });
        }

        let mut evals: BTreeMap<usize, Vec<&Evaluation>> = BTreeMap::new();
        for e in jobs.iter().flat_map(|j| &j.evaluations) {
            evals.entry(e.block).or_default().push(e);
        }
        for (&block, es) in &evals {
            aggregate_block(&mut report, k, block, es);
        }
    }
    Ok(report)
}

fn aggregate_block(report: &mut SweepReport, k: u32, block: usize, es: &[&Evaluation]) {
    let (mc_mean, mc_sd) = optional(es.iter().map(|e| e.mc()).collect());
    let (bc2_mean, bc2_sd) = optional(es.iter().map(|e| e.bc(2)).collect());
    let (bc3_mean, bc3_sd) = optional(es.iter().map(|e| e.bc(3)).collect());
    let (lag1_mi_median_mean, lag1_mi_median_sd) = optional(es.iter().map(|e| e.lag1_mi_median).collect());
    let weights: Vec<f64> = es.iter().map(|e| e.weights.mean_abs_internal_top50).collect();
    let inputs: Vec<f64> = es.iter().map(|e| e.weights.mean_abs_input).collect();
    report.scores.push(ScoreRow {
        k_multiplicity: k,
        block,
        n: es.len(),
        mc_mean,
        mc_sd,
        bc2_mean,
        bc2_sd,
        bc3_mean,
        bc3_sd,
        lag1_mi_median_mean,
        lag1_mi_median_sd,
        w_internal_top50_mean: mean_sd(&weights).0,
        w_input_mean: mean_sd(&inputs).0,
    });

    let mut curves: Vec<(&str, Vec<&[f64]>)> = vec![
        ("memory", es.iter().filter_map(|e| e.memory.as_ref().map(|s| s.per_delay.as_slice())).collect()),
        ("bool2", es.iter().filter_map(|e| e.bool2.as_ref().map(|s| s.score.per_delay.as_slice())).collect()),
        ("bool3", es.iter().filter_map(|e| e.bool3.as_ref().map(|s| s.score.per_delay.as_slice())).collect()),
    ];
    curves.retain(|(_, c)| !c.is_empty());
    for (task, curves) in curves {
        let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
        for t in 0..len {
            let values: Vec<f64> = curves.iter().map(|c| c[t]).collect();
            let (mean, sd) = mean_sd(&values);
            report.per_delay.push(DelayRow {
                k_multiplicity: k,
                block,
                task: task.to_string(),
                tau: t + 1,
                n: values.len(),
                mean,
                sd,
            });
        }
    }

    for arity in [2usize, 3] {
        let mut rules: BTreeMap<u32, (bool, Vec<f64>)> = BTreeMap::new();
        for e in es {
            let score = if arity == 2 { &e.bool2 } else { &e.bool3 };
            for r in score.iter().flat_map(|s| &s.per_rule) {
                rules.entry(r.rule_id).or_insert((r.separable, Vec::new())).1.push(r.total);
            }
        }
        let mut rows: Vec<RuleRow> = rules
            .into_iter()
            .map(|(rule_id, (separable, values))| {
                let (mean, sd) = mean_sd(&values);
                RuleRow {
                    k_multiplicity: k,
                    block,
                    arity,
                    rule_id,
                    separable,
                    n: values.len(),
                    mean,
                    sd,
                }
            })
            .collect();
        rows.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.rule_id.cmp(&b.rule_id)));
        report.per_rule.extend(rows);
    }
}

fn to_csv<T: Serialize>(rows: &[T], header: &str) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(header.as_bytes().to_vec());
    for row in rows {
        writer.serialize(row)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::io(PathBuf::from(REPORT_DIR), e.into_error()))
}

/// Writes `mi.csv`, `scores.csv`, `per_delay.csv` and `per_rule.csv` under
/// `run_dir/report`, returning that directory.
pub fn write_report(run_dir: &Path, report: &SweepReport) -> Result<PathBuf> {
    let dir = run_dir.join(REPORT_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_atomic(&dir.join("mi.csv"), &to_csv(&report.mi, "K_multiplicity,block,n,mi_mean,mi_sd\n")?)?;
    write_atomic(
        &dir.join("scores.csv"),
        &to_csv(
            &report.scores,
            "K_multiplicity,block,n,mc_mean,mc_sd,bc2_mean,bc2_sd,bc3_mean,bc3_sd,\
             lag1_mi_median_mean,lag1_mi_median_sd,w_internal_top50_mean,w_input_mean\n",
        )?,
    )?;
    write_atomic(&dir.join("per_delay.csv"), &to_csv(&report.per_delay, "K_multiplicity,block,task,tau,n,mean,sd\n")?)?;
    write_atomic(
        &dir.join("per_rule.csv"),
        &to_csv(&report.per_rule, "K_multiplicity,block,arity,rule_id,separable,n,mean,sd\n")?,
    )?;
    Ok(dir)
}
