//! Experiment orchestration.
//!
//! Every `(K, trial)` pair is an independent job with its own directory
//! `out_dir/K{k}/trial{t}`. A job alternates frozen-weight benchmark
//! evaluations with infomax blocks:
//!
//! ```text
//! for block in 0..=n_blocks:
//!     evaluate (every eval_every blocks and at the end)
//!     checkpoint (every evaluation and every checkpoint_every blocks)
//!     run infomax block `block` (except after the last)
//! ```
//!
//! Evaluations simulate a copy of the network from its own random stream,
//! so the training trajectory is the same with or without them. A job whose
//! directory already holds checkpoints resumes from the latest one and
//! reproduces the uninterrupted output byte for byte.

pub mod config;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use config::ExperimentConfig;
pub use report::{sweep_report, write_report, SweepReport};

use crate::analysis::{self, ConnectionRecord, WeightSummary, TOP_CONNECTIONS};
use crate::benchmarks::{self, BenchmarkRun, BooleanScore, Task, TaskScore};
use crate::error::{Error, Result};
use crate::infomax::{self, RIConfig};
use crate::reservoir::{InputSource, NetworkParams, Reservoir};
use crate::rng::{derive_seed, label, stream};
use crate::snapshot::{self, SnapshotTag};
use config::BenchmarkConfig;

pub const CONFIG_FILE: &str = "config.toml";
pub const RI_TRACE: &str = "ri_trace.csv";
pub const BENCHMARK: &str = "benchmark.csv";
pub const ANALYSIS: &str = "analysis.csv";
pub const EVAL_DIR: &str = "eval";
pub const EDGE_DIR: &str = "edges";
pub const CHECKPOINT_DIR: &str = "checkpoints";

const RI_HEADER: &str = "block,mi_nats,logdet_c,logdet_d,jitter,mean_abs_w_internal_top50,mean_abs_w_input\n";
const BENCHMARK_HEADER: &str = "block,task,K_multiplicity,rule_id,separable,tau,score_train,score_test\n";
const ANALYSIS_HEADER: &str = "block,stat,neuron_or_edge,value\n";

/// One infomax block. Skipped blocks carry `NaN` statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiRow {
    pub block: usize,
    pub mi_nats: f64,
    pub logdet_c: f64,
    pub logdet_d: f64,
    pub jitter: f64,
    pub mean_abs_w_internal_top50: f64,
    pub mean_abs_w_input: f64,
}

impl RiRow {
    pub fn skipped(&self) -> bool {
        self.mi_nats.is_nan()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub block: usize,
    pub task: String,
    #[serde(rename = "K_multiplicity")]
    pub k_multiplicity: u32,
    pub rule_id: Option<u32>,
    pub separable: Option<bool>,
    pub tau: usize,
    pub score_train: f64,
    pub score_test: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub block: usize,
    pub stat: String,
    pub neuron_or_edge: String,
    pub value: f64,
}

/// Scores and diagnostics of one frozen network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub block: usize,
    pub k_multiplicity: u32,
    pub trial: usize,
    pub seed: u64,
    pub memory: Option<TaskScore>,
    pub bool2: Option<BooleanScore>,
    pub bool3: Option<BooleanScore>,
    /// `I(x_i(t); u(t-1))` per neuron over the probe segment, in nats.
    pub lag1_mi: Vec<f64>,
    pub lag1_mi_median: Option<f64>,
    pub weights: WeightSummary,
}

impl Evaluation {
    pub fn mc(&self) -> Option<f64> {
        self.memory.as_ref().map(|s| s.total)
    }

    pub fn bc(&self, arity: usize) -> Option<f64> {
        match arity {
            2 => self.bool2.as_ref().map(|s| s.score.total),
            3 => self.bool3.as_ref().map(|s| s.score.total),
            _ => None,
        }
    }

    fn benchmark_rows(&self) -> Vec<BenchmarkRow> {
        let mut rows = Vec::new();
        let row = |task: Task, rule: Option<(u32, bool)>, tau: usize, train: f64, test: f64| BenchmarkRow {
            block: self.block,
            task: task.name().to_string(),
            k_multiplicity: self.k_multiplicity,
            rule_id: rule.map(|r| r.0),
            separable: rule.map(|r| r.1),
            tau,
            score_train: train,
            score_test: test,
        };
        if let Some(m) = &self.memory {
            for (t, (&test, &train)) in m.per_delay.iter().zip(&m.per_delay_train).enumerate() {
                rows.push(row(Task::Memory, None, t + 1, train, test));
            }
        }
        for (task, score) in [(Task::Bool2, &self.bool2), (Task::Bool3, &self.bool3)] {
            for rule in score.iter().flat_map(|s| &s.per_rule) {
                for (t, (&test, &train)) in rule.per_delay.iter().zip(&rule.per_delay_train).enumerate() {
                    rows.push(row(task, Some((rule.rule_id, rule.separable)), t + 1, train, test));
                }
            }
        }
        rows
    }

    fn analysis_rows(&self, top: &[ConnectionRecord]) -> Vec<AnalysisRow> {
        let row = |stat: &str, key: String, value: f64| AnalysisRow {
            block: self.block,
            stat: stat.to_string(),
            neuron_or_edge: key,
            value,
        };
        let mut rows: Vec<AnalysisRow> = self
            .lag1_mi
            .iter()
            .enumerate()
            .map(|(i, &v)| row("lag1_mi", (i + 1).to_string(), v))
            .collect();
        if let Some(m) = self.lag1_mi_median {
            rows.push(row("lag1_mi_median", "all".into(), m));
        }
        let w = &self.weights;
        rows.push(row("mean_abs_w_internal_top50", "all".into(), w.mean_abs_internal_top50));
        rows.push(row("mean_abs_w_input", "all".into(), w.mean_abs_input));
        rows.push(row("mean_abs_w_internal_all", "all".into(), w.mean_abs_internal_all));
        for c in top {
            rows.push(row("top_connection", format!("{}->{}", c.src, c.dst), c.weight));
        }
        rows
    }
}

/// Seed of the evaluation at `block` of `trial`. It does not depend on the
/// multiplicity, so every K is scored on the same input sequence.
pub fn eval_seed(master: u64, trial: usize, block: usize) -> u64 {
    derive_seed(master, &[trial as u64, block as u64, label("eval")])
}

/// Seed of the initial weights of `trial`, shared by every multiplicity.
pub fn init_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[trial as u64, label("init")])
}

/// Runs the configured benchmarks on a frozen copy of `params`.
pub fn evaluate_network(params: &NetworkParams, bench: &BenchmarkConfig, seed: u64) -> Result<Evaluation> {
    let phases = bench.phases();
    phases.validate(bench.tau_max)?;
    let mut input = InputSource::bernoulli(params.p0_bar, stream(seed, &[label("input")]));
    let mut rng = stream(seed, &[label("neurons")]);
    let run = BenchmarkRun::simulate(params, &phases, bench.mi_probe, &mut input, &mut rng)?;
    let solver = run.solver()?;
    let has = |t: Task| bench.tasks.contains(&t);

    let memory = if has(Task::Memory) {
        Some(benchmarks::memory_capacity_of_run(&run, &solver, bench.tau_max)?)
    } else {
        None
    };
    let boolean = |task: Task| -> Result<Option<BooleanScore>> {
        match task.arity() {
            Some(arity) if has(task) => {
                let rules = benchmarks::enumerate_rules(arity)?;
                benchmarks::boolean_capacity_of_run(&run, &solver, &rules, bench.tau_max).map(Some)
            }
            _ => Ok(None),
        }
    };
    let bool2 = boolean(Task::Bool2)?;
    let bool3 = boolean(Task::Bool3)?;

    let lag1_mi = match &run.probe {
        Some(trace) if trace.len() >= 2 => analysis::neuron_input_mi(trace)?,
        _ => Vec::new(),
    };
    let lag1_mi_median = (!lag1_mi.is_empty()).then(|| analysis::median(&lag1_mi));
    Ok(Evaluation {
        block: 0,
        k_multiplicity: 1,
        trial: 0,
        seed,
        memory,
        bool2,
        bool3,
        lag1_mi,
        lag1_mi_median,
        weights: analysis::weight_summary(params, 0),
    })
}

/// Loads a snapshot and evaluates it, independently of any live run.
pub fn evaluate_checkpoint(snapshot_dir: &Path, bench: &BenchmarkConfig, seed: u64) -> Result<Evaluation> {
    let snap = snapshot::read_snapshot(snapshot_dir)?;
    let mut eval = evaluate_network(&snap.params, bench, seed)?;
    eval.block = snap.manifest.block;
    eval.k_multiplicity = snap.manifest.k_multiplicity;
    eval.trial = snap.manifest.trial;
    eval.weights.block = snap.manifest.block;
    Ok(eval)
}

/// Everything recorded by one job, read back from its directory.
#[derive(Clone, Debug, PartialEq)]
pub struct JobTrace {
    pub k_multiplicity: u32,
    pub trial: usize,
    pub dir: PathBuf,
    pub ri: Vec<RiRow>,
    pub evaluations: Vec<Evaluation>,
    pub checkpoints: Vec<usize>,
    pub skipped_blocks: usize,
}

impl JobTrace {
    pub fn final_evaluation(&self) -> Option<&Evaluation> {
        self.evaluations.last()
    }

    pub fn evaluation_at(&self, block: usize) -> Option<&Evaluation> {
        self.evaluations.iter().find(|e| e.block == block)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub jobs: Vec<JobTrace>,
}

impl RunTrace {
    pub fn job(&self, k_multiplicity: u32, trial: usize) -> Option<&JobTrace> {
        self.jobs.iter().find(|j| j.k_multiplicity == k_multiplicity && j.trial == trial)
    }

    pub fn skipped_blocks(&self) -> usize {
        self.jobs.iter().map(|j| j.skipped_blocks).sum()
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Stop every job when it reaches this block, before evaluating it, as
    /// if the process had been killed there.
    pub halt_at_block: Option<usize>,
    /// Print one line per evaluation to stderr.
    pub progress: bool,
}

pub fn job_dir(out_dir: &Path, k_multiplicity: u32, trial: usize) -> PathBuf {
    out_dir.join(format!("K{k_multiplicity:02}")).join(format!("trial{trial:02}"))
}

pub fn checkpoint_dir(job: &Path, block: usize) -> PathBuf {
    job.join(CHECKPOINT_DIR).join(format!("block_{block:05}"))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunTrace> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunTrace> {
    cfg.validate()?;
    let out = &cfg.experiment.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let stored = out.join(CONFIG_FILE);
    if stored.exists() {
        let mut previous = ExperimentConfig::load(&stored)?;
        previous.experiment.out_dir = cfg.experiment.out_dir.clone();
        if &previous != cfg {
            return Err(Error::Config(format!(
                "{} holds a run with a different configuration",
                out.display()
            )));
        }
    }
    write_atomic(&stored, cfg.to_toml_string().as_bytes())?;

    let jobs: Vec<(u32, usize)> = cfg
        .experiment
        .k_sweep
        .iter()
        .flat_map(|&k| (0..cfg.experiment.n_trials).map(move |t| (k, t)))
        .collect();
    let traces = jobs
        .par_iter()
        .map(|&(k, trial)| run_job(cfg, k, trial, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunTrace { jobs: traces })
}

fn run_job(cfg: &ExperimentConfig, k: u32, trial: usize, opts: &RunOptions) -> Result<JobTrace> {
    let dir = job_dir(&cfg.experiment.out_dir, k, trial);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let master = cfg.experiment.master_seed;
    let ri_cfg = cfg.ri_config(k);
    let n_blocks = cfg.ri.n_blocks;

    let (mut reservoir, start, mut skipped, resumed) = match list_checkpoints(&dir)?.last() {
        Some(&block) => {
            let snap = snapshot::read_snapshot(&checkpoint_dir(&dir, block))?;
            if snap.manifest.k_multiplicity != k || snap.manifest.trial != trial || snap.manifest.seed != master {
                return Err(Error::parse(
                    snapshot::MANIFEST,
                    format!("checkpoint in {} belongs to another job", dir.display()),
                ));
            }
            truncate_outputs(&dir, block)?;
            let reservoir = Reservoir {
                params: snap.params,
                state: snap.state,
            };
            (reservoir, block, snap.manifest.skipped_blocks, true)
        }
        None => {
            reset_outputs(&dir)?;
            let params = cfg.initial_params(init_seed(master, trial))?;
            (Reservoir::new(params), 0, 0, false)
        }
    };

    for block in start..=n_blocks {
        if opts.halt_at_block == Some(block) {
            break;
        }
        if !(resumed && block == start) {
            if cfg.is_eval_block(block) {
                let mut eval = evaluate_network(&reservoir.params, &cfg.benchmark, eval_seed(master, trial, block))?;
                eval.block = block;
                eval.k_multiplicity = k;
                eval.trial = trial;
                eval.weights.block = block;
                if opts.progress {
                    eprintln!(
                        "K={k} trial={trial} block={block} MC={:.3} BC2={:.3} BC3={:.3}",
                        eval.mc().unwrap_or(f64::NAN),
                        eval.bc(2).unwrap_or(f64::NAN),
                        eval.bc(3).unwrap_or(f64::NAN)
                    );
                }
                write_evaluation(&dir, &eval, &reservoir.params)?;
            }
            if cfg.is_checkpoint_block(block) {
                let tag = SnapshotTag {
                    seed: master,
                    block,
                    trial,
                    k_multiplicity: k,
                    skipped_blocks: skipped,
                };
                snapshot::write_snapshot(&checkpoint_dir(&dir, block), &reservoir.params, &reservoir.state, tag)?;
            }
        }
        if block == n_blocks {
            break;
        }
        let row = ri_block(&mut reservoir, &ri_cfg, master, trial, block, &mut skipped)?;
        append_rows(&dir.join(RI_TRACE), &[row])?;
    }
    load_job_trace(&dir)
}

/// One training block with its own input and noise streams. Degenerate
/// statistics skip the update and are counted.
fn ri_block(reservoir: &mut Reservoir, cfg: &RIConfig, master: u64, trial: usize, block: usize, skipped: &mut usize) -> Result<RiRow> {
    let weights = analysis::weight_summary(&reservoir.params, block);
    let path = [trial as u64, block as u64];
    let mut input = InputSource::bernoulli(reservoir.params.p0_bar, stream(master, &[path[0], path[1], label("ri-input")]));
    let mut rng = stream(master, &[path[0], path[1], label("ri")]);
    let (mi, logdet_c, logdet_d, jitter) = match infomax::run_ri_block(reservoir, cfg, &mut input, &mut rng) {
        Ok(out) => (out.mi.mi, out.mi.log_det_c, out.mi.log_det_d, out.mi.jitter_applied),
        Err(Error::Degenerate { .. } | Error::NonFiniteGradient { .. }) => {
            *skipped += 1;
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        }
        Err(e) => return Err(e),
    };
    Ok(RiRow {
        block,
        mi_nats: mi,
        logdet_c,
        logdet_d,
        jitter,
        mean_abs_w_internal_top50: weights.mean_abs_internal_top50,
        mean_abs_w_input: weights.mean_abs_input,
    })
}

fn eval_file(job: &Path, block: usize) -> PathBuf {
    job.join(EVAL_DIR).join(format!("block_{block:05}.json"))
}

fn edge_file(job: &Path, block: usize) -> PathBuf {
    job.join(EDGE_DIR).join(format!("block_{block:05}.csv"))
}

fn write_evaluation(job: &Path, eval: &Evaluation, params: &NetworkParams) -> Result<()> {
    let n = params.n_neurons();
    let top = analysis::top_connections(params, TOP_CONNECTIONS.min(n * (n + 1)))?;
    append_rows(&job.join(BENCHMARK), &eval.benchmark_rows())?;
    append_rows(&job.join(ANALYSIS), &eval.analysis_rows(&top))?;
    let mut edges = csv::Writer::from_writer(Vec::new());
    for c in &top {
        edges.serialize(c)?;
    }
    let edges = edges.into_inner().map_err(|e| Error::io(edge_file(job, eval.block), e.into_error()))?;
    write_atomic(&edge_file(job, eval.block), &edges)?;
    let json = serde_json::to_string_pretty(eval).map_err(|e| Error::parse("evaluation", e))?;
    write_atomic(&eval_file(job, eval.block), json.as_bytes())
}

/// Blocks with a complete checkpoint, ascending.
pub fn list_checkpoints(job: &Path) -> Result<Vec<usize>> {
    list_blocks(&job.join(CHECKPOINT_DIR), "", |p| p.join(snapshot::MANIFEST).is_file())
}

fn list_blocks(dir: &Path, extension: &str, keep: impl Fn(&Path) -> bool) -> Result<Vec<usize>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut blocks = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_prefix("block_").and_then(|s| s.strip_suffix(extension)) else {
            continue;
        };
        if let Ok(block) = stem.parse::<usize>() {
            if keep(&path) {
                blocks.push(block);
            }
        }
    }
    blocks.sort_unstable();
    Ok(blocks)
}

fn remove_path(path: &Path) -> Result<()> {
    let result = if path.is_dir() {
        fs::remove_dir_all(path)
    } else if path.exists() {
        fs::remove_file(path)
    } else {
        return Ok(());
    };
    result.map_err(|e| Error::io(path, e))
}

fn reset_outputs(job: &Path) -> Result<()> {
    for sub in [EVAL_DIR, EDGE_DIR, CHECKPOINT_DIR] {
        remove_path(&job.join(sub))?;
    }
    write_atomic(&job.join(RI_TRACE), RI_HEADER.as_bytes())?;
    write_atomic(&job.join(BENCHMARK), BENCHMARK_HEADER.as_bytes())?;
    write_atomic(&job.join(ANALYSIS), ANALYSIS_HEADER.as_bytes())
}

/// Drops everything written after the checkpoint at `block` (and any torn
/// last line), leaving the files exactly as they were when it was taken.
fn truncate_outputs(job: &Path, block: usize) -> Result<()> {
    truncate_csv(&job.join(RI_TRACE), RI_HEADER, |b| b < block)?;
    truncate_csv(&job.join(BENCHMARK), BENCHMARK_HEADER, |b| b <= block)?;
    truncate_csv(&job.join(ANALYSIS), ANALYSIS_HEADER, |b| b <= block)?;
    for (sub, ext) in [(EVAL_DIR, ".json"), (EDGE_DIR, ".csv")] {
        let dir = job.join(sub);
        for b in list_blocks(&dir, ext, |_| true)? {
            if b > block {
                remove_path(&dir.join(format!("block_{b:05}{ext}")))?;
            }
        }
    }
    let checkpoints = job.join(CHECKPOINT_DIR);
    if checkpoints.exists() {
        for entry in fs::read_dir(&checkpoints).map_err(|e| Error::io(&checkpoints, e))? {
            let path = entry.map_err(|e| Error::io(&checkpoints, e))?.path();
            if path.extension().is_some_and(|e| e == "partial") {
                remove_path(&path)?;
            }
        }
    }
    Ok(())
}

fn truncate_csv(path: &Path, header: &str, keep: impl Fn(usize) -> bool) -> Result<()> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = String::from(header);
    for line in text.split_inclusive('\n').skip(1) {
        if !line.ends_with('\n') {
            break;
        }
        let block = line.split(',').next().and_then(|b| b.parse::<usize>().ok());
        match block {
            Some(b) if keep(b) => out.push_str(line),
            Some(_) => {}
            None => return Err(Error::parse(path.display().to_string(), format!("bad row `{}`", line.trim_end()))),
        }
    }
    write_atomic(path, out.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Appends rows without a header.
pub fn append_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn parse_name(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok()
}

/// Reads back everything one job directory contains.
pub fn load_job_trace(dir: &Path) -> Result<JobTrace> {
    let name = |p: &Path| p.file_name().and_then(|n| n.to_str()).map(str::to_owned);
    let trial = name(dir).and_then(|n| parse_name(&n, "trial"));
    let k = dir.parent().and_then(name).and_then(|n| parse_name(&n, "K"));
    let (Some(trial), Some(k)) = (trial, k) else {
        return Err(Error::parse(dir.display().to_string(), "not a K*/trial* job directory"));
    };
    let ri: Vec<RiRow> = read_rows(&dir.join(RI_TRACE))?;
    let mut evaluations = Vec::new();
    for block in list_blocks(&dir.join(EVAL_DIR), ".json", |_| true)? {
        let path = eval_file(dir, block);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        evaluations.push(serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?);
    }
    Ok(JobTrace {
        k_multiplicity: k as u32,
        trial,
        dir: dir.to_path_buf(),
        skipped_blocks: ri.iter().filter(|r| r.skipped()).count(),
        ri,
        evaluations,
        checkpoints: list_checkpoints(dir)?,
    })
}

/// Every job directory under `out_dir`, ordered by multiplicity and trial.
pub fn find_jobs(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut jobs = Vec::new();
    let entries = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(d)
            .map_err(|e| Error::io(d, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        v.sort();
        Ok(v)
    };
    for k_dir in entries(out_dir)? {
        if k_dir.file_name().and_then(|n| n.to_str()).and_then(|n| parse_name(n, "K")).is_none() {
            continue;
        }
        for trial_dir in entries(&k_dir)? {
            if trial_dir.file_name().and_then(|n| n.to_str()).and_then(|n| parse_name(n, "trial")).is_some() {
                jobs.push(trial_dir);
            }
        }
    }
    Ok(jobs)
}

pub fn load_run_trace(out_dir: &Path) -> Result<RunTrace> {
    let jobs = find_jobs(out_dir)?.iter().map(|d| load_job_trace(d)).collect::<Result<Vec<_>>>()?;
    Ok(RunTrace { jobs })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::reduced();
        cfg.network.n_neurons = 6;
        cfg.ri.block_steps = 400;
        cfg.ri.settle_steps = 200;
        cfg.ri.n_blocks = 5;
        cfg.benchmark.washout = 300;
        cfg.benchmark.learning = 200;
        cfg.benchmark.testing = 200;
        cfg.benchmark.tau_max = 4;
        cfg.benchmark.mi_probe = 300;
        cfg.experiment.k_sweep = vec![1, 3];
        cfg.experiment.n_trials = 2;
        cfg.experiment.eval_every = 2;
        cfg.experiment.checkpoint_every = 2;
        cfg.experiment.out_dir = out.to_path_buf();
        cfg
    }

    #[test]
    fn schedule_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let trace = run_experiment(&cfg).unwrap();
        assert_eq!(trace.jobs.len(), 4);
        let job = trace.job(3, 1).unwrap();
        assert_eq!(job.ri.iter().map(|r| r.block).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        assert_eq!(job.evaluations.iter().map(|e| e.block).collect::<Vec<_>>(), vec![0, 2, 4, 5]);
        assert_eq!(job.checkpoints, vec![0, 2, 4, 5]);
        let bench: Vec<BenchmarkRow> = read_rows(&job.dir.join(BENCHMARK)).unwrap();
        assert_eq!(bench.len(), 4 * (4 + 14 * 4 + 254 * 4));
        assert!(bench.iter().all(|r| r.k_multiplicity == 3 && job.checkpoints.contains(&r.block)));
        let edges: Vec<ConnectionRecord> = read_rows(&edge_file(&job.dir, 5)).unwrap();
        assert_eq!(edges.len(), 42.min(TOP_CONNECTIONS));
    }

    #[test]
    fn zero_blocks_gives_baseline_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.ri.n_blocks = 0;
        cfg.experiment.k_sweep = vec![1];
        cfg.experiment.n_trials = 1;
        let trace = run_experiment(&cfg).unwrap();
        assert!(trace.jobs[0].ri.is_empty());
        assert_eq!(trace.jobs[0].evaluations.len(), 1);
    }

    #[test]
    fn evaluation_does_not_touch_training() {
        let dir = tempfile::tempdir().unwrap();
        let mut with = tiny(&dir.path().join("a"));
        with.experiment.k_sweep = vec![2];
        with.experiment.n_trials = 1;
        let mut without = with.clone();
        without.experiment.out_dir = dir.path().join("b");
        without.experiment.eval_every = 1000;
        without.experiment.checkpoint_every = 1000;
        let a = run_experiment(&with).unwrap();
        let b = run_experiment(&without).unwrap();
        assert_eq!(a.jobs[0].ri, b.jobs[0].ri);
        let last_a = snapshot::read_snapshot(&checkpoint_dir(&a.jobs[0].dir, 5)).unwrap();
        let last_b = snapshot::read_snapshot(&checkpoint_dir(&b.jobs[0].dir, 5)).unwrap();
        assert_eq!(last_a.params, last_b.params);
        assert_eq!(last_a.state, last_b.state);
    }

    #[test]
    fn checkpoint_evaluation_matches_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let trace = run_experiment(&cfg).unwrap();
        let job = trace.job(1, 0).unwrap();
        let seed = eval_seed(cfg.experiment.master_seed, 0, 2);
        let again = evaluate_checkpoint(&checkpoint_dir(&job.dir, 2), &cfg.benchmark, seed).unwrap();
        assert_eq!(&again, job.evaluation_at(2).unwrap());
    }

    #[test]
    fn changed_config_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.experiment.k_sweep = vec![1];
        cfg.experiment.n_trials = 1;
        run_experiment(&cfg).unwrap();
        cfg.ri.eta = 0.5;
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn torn_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, format!("{RI_HEADER}0,1,2,3,4,5,6\n2,1,2,3,4,5,6\n1")).unwrap();
        truncate_csv(&path, RI_HEADER, |b| b < 2).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{RI_HEADER}0,1,2,3,4,5,6\n"));
    }
}
