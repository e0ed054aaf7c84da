//! Memory-capacity and Boolean-function benchmarks.
//!
//! A benchmark evaluation simulates one frozen-weight run split into
//! washout, learning and testing phases. Every delay and every rule shares
//! that run: readouts are fit on the learning states and scored on the
//! testing states.

pub mod readout;
pub mod rules;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use readout::{determination_coefficient, train_readout, ReadoutModel, ReadoutSolver};
pub use rules::{enumerate_rules, is_linearly_separable, rule_target, BooleanRule};

use crate::error::{Error, Result};
use crate::reservoir::{InputSource, NetworkParams, NetworkState, Reservoir, StateTrace};

pub const DEFAULT_TAU_MAX: usize = 50;

/// Lengths of the three benchmark phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkPhases {
    pub washout: usize,
    pub learning: usize,
    pub testing: usize,
    /// Whether the homeostatic bias keeps adapting during washout. It is
    /// always frozen while learning and testing.
    pub adapt_bias_in_washout: bool,
}

impl Default for BenchmarkPhases {
    fn default() -> Self {
        BenchmarkPhases {
            washout: 50_000,
            learning: 1500,
            testing: 1500,
            adapt_bias_in_washout: true,
        }
    }
}

impl BenchmarkPhases {
    pub fn validate(&self, tau_max: usize) -> Result<()> {
        if self.learning < 2 || self.testing < 2 {
            return Err(Error::Config("learning and testing phases need at least two steps".into()));
        }
        // the deepest 3-bit target looks back tau_max + 2 steps
        if self.washout < tau_max + 2 {
            return Err(Error::Config(format!(
                "washout of {} steps cannot cover lookback {}",
                self.washout,
                tau_max + 2
            )));
        }
        if tau_max == 0 {
            return Err(Error::Config("tau_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which benchmark families to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Memory,
    Bool2,
    Bool3,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Memory, Task::Bool2, Task::Bool3];

    pub fn name(self) -> &'static str {
        match self {
            Task::Memory => "memory",
            Task::Bool2 => "bool2",
            Task::Bool3 => "bool3",
        }
    }

    pub fn arity(self) -> Option<usize> {
        match self {
            Task::Memory => None,
            Task::Bool2 => Some(2),
            Task::Bool3 => Some(3),
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "memory" => Ok(Task::Memory),
            "bool2" => Ok(Task::Bool2),
            "bool3" => Ok(Task::Bool3),
            other => Err(Error::Config(format!("unknown task `{other}` (memory, bool2, bool3)"))),
        }
    }
}

/// States and inputs of one benchmark simulation.
///
/// `inputs[k]` is the input at run step `k` (washout included); learning
/// rows cover steps `learn_start..learn_start + learning`, testing rows
/// follow immediately.
#[derive(Clone, Debug)]
pub struct BenchmarkRun {
    pub inputs: Vec<u8>,
    pub learn_states: DMatrix<f64>,
    pub test_states: DMatrix<f64>,
    pub learn_start: usize,
    pub test_start: usize,
    /// Extra frozen steps recorded after testing, when requested.
    pub probe: Option<StateTrace>,
}

fn to_matrix(trace: &StateTrace) -> DMatrix<f64> {
    DMatrix::from_fn(trace.len(), trace.n_neurons, |t, i| trace.row(t)[i] as f64)
}

impl BenchmarkRun {
    /// Simulates washout, learning, testing and `probe_steps` further frozen
    /// steps from a silent start. `params` is not modified.
    pub fn simulate<R: Rng + ?Sized>(
        params: &NetworkParams,
        phases: &BenchmarkPhases,
        probe_steps: usize,
        input: &mut InputSource,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        let mut reservoir = Reservoir {
            params: params.clone(),
            state: NetworkState::silent(params.n_neurons()),
        };
        let mut inputs = Vec::with_capacity(phases.washout + phases.learning + phases.testing);
        reservoir.drive(phases.washout, input, rng, phases.adapt_bias_in_washout, |u, _| inputs.push(u))?;
        let learn = reservoir.record(phases.learning, input, rng, false)?;
        let test = reservoir.record(phases.testing, input, rng, false)?;
        inputs.extend_from_slice(&learn.inputs);
        inputs.extend_from_slice(&test.inputs);
        let probe = if probe_steps > 0 {
            Some(reservoir.record(probe_steps, input, rng, false)?)
        } else {
            None
        };
        Ok(BenchmarkRun {
            inputs,
            learn_states: to_matrix(&learn),
            test_states: to_matrix(&test),
            learn_start: phases.washout,
            test_start: phases.washout + phases.learning,
            probe,
        })
    }

    /// Builds a run from an externally produced trace laid out as
    /// `[washout | learning | testing]`.
    pub fn from_trace(trace: &StateTrace, phases: &BenchmarkPhases) -> Result<Self> {
        let total = phases.washout + phases.learning + phases.testing;
        if trace.len() < total {
            return Err(Error::InsufficientData(format!("trace of {} steps, phases need {total}", trace.len())));
        }
        let learn_start = phases.washout;
        let test_start = learn_start + phases.learning;
        Ok(BenchmarkRun {
            inputs: trace.inputs[..total].to_vec(),
            learn_states: to_matrix(&trace.slice(learn_start..test_start)),
            test_states: to_matrix(&trace.slice(test_start..total)),
            learn_start,
            test_start,
            probe: None,
        })
    }

    fn learning_range(&self) -> std::ops::Range<usize> {
        self.learn_start..self.learn_start + self.learn_states.nrows()
    }

    fn testing_range(&self) -> std::ops::Range<usize> {
        self.test_start..self.test_start + self.test_states.nrows()
    }

    pub fn solver(&self) -> Result<ReadoutSolver> {
        ReadoutSolver::new(&self.learn_states)
    }
}

/// Score of one readout target on both phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScore {
    pub train: f64,
    pub test: f64,
    /// The target was constant in one of the phases and was scored 0.
    pub degenerate: bool,
}

fn score_target(solver: &ReadoutSolver, run: &BenchmarkRun, learn_target: &[f64], test_target: &[f64]) -> Result<TargetScore> {
    if readout::is_degenerate(learn_target) || readout::is_degenerate(test_target) {
        return Ok(TargetScore {
            train: 0.0,
            test: 0.0,
            degenerate: true,
        });
    }
    let model = solver.fit(learn_target)?;
    let z_learn = model.predict(&run.learn_states);
    let z_test = model.predict(&run.test_states);
    Ok(TargetScore {
        train: determination_coefficient(z_learn.as_slice(), learn_target)?,
        test: determination_coefficient(z_test.as_slice(), test_target)?,
        degenerate: false,
    })
}

/// Per-delay scores for `tau = 1..=tau_max` and their sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub per_delay: Vec<f64>,
    pub per_delay_train: Vec<f64>,
    pub total: f64,
    /// Delays whose target was constant in a phase.
    pub degenerate_taus: Vec<usize>,
}

impl TaskScore {
    fn from_scores(scores: &[TargetScore]) -> Self {
        let per_delay: Vec<f64> = scores.iter().map(|s| s.test).collect();
        TaskScore {
            total: per_delay.iter().sum(),
            per_delay_train: scores.iter().map(|s| s.train).collect(),
            per_delay,
            degenerate_taus: scores
                .iter()
                .enumerate()
                .filter(|(_, s)| s.degenerate)
                .map(|(k, _)| k + 1)
                .collect(),
        }
    }
}

fn as_f64(bits: impl IntoIterator<Item = u8>) -> Vec<f64> {
    bits.into_iter().map(|b| b as f64).collect()
}

/// Sum of memory functions `MF_tau`, each the testing-phase determination
/// coefficient of a readout trained to recall `u(t - tau)`.
pub fn memory_capacity_of_run(run: &BenchmarkRun, solver: &ReadoutSolver, tau_max: usize) -> Result<TaskScore> {
    if run.learn_start < tau_max {
        return Err(Error::InsufficientData(format!("only {} steps of history for tau_max {tau_max}", run.learn_start)));
    }
    let scores = (1..=tau_max)
        .into_par_iter()
        .map(|tau| {
            let learn = as_f64(run.learning_range().map(|t| run.inputs[t - tau]));
            let test = as_f64(run.testing_range().map(|t| run.inputs[t - tau]));
            score_target(solver, run, &learn, &test)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskScore::from_scores(&scores))
}

/// Simulates a fresh run and scores the memory task on it.
pub fn memory_capacity<R: Rng + ?Sized>(
    params: &NetworkParams,
    phases: &BenchmarkPhases,
    tau_max: usize,
    input: &mut InputSource,
    rng: &mut R,
) -> Result<TaskScore> {
    phases.validate(tau_max)?;
    let run = BenchmarkRun::simulate(params, phases, 0, input, rng)?;
    memory_capacity_of_run(&run, &run.solver()?, tau_max)
}

/// Delay-summed score of one rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleScore {
    pub rule_id: u32,
    pub separable: bool,
    pub per_delay: Vec<f64>,
    pub per_delay_train: Vec<f64>,
    pub total: f64,
    pub degenerate_taus: Vec<usize>,
}

/// Boolean capacity: rule-averaged per-delay scores plus per-rule totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BooleanScore {
    pub arity: usize,
    pub score: TaskScore,
    pub per_rule: Vec<RuleScore>,
}

pub fn boolean_capacity_of_run(run: &BenchmarkRun, solver: &ReadoutSolver, rules: &[BooleanRule], tau_max: usize) -> Result<BooleanScore> {
    let arity = match rules.first() {
        Some(rule) => rule.arity,
        None => return Err(Error::Config("boolean capacity needs at least one rule".into())),
    };
    if rules.iter().any(|r| r.arity != arity) {
        return Err(Error::Config("rules of mixed arity".into()));
    }
    let per_rule = rules
        .par_iter()
        .map(|rule| {
            let scores = (1..=tau_max)
                .map(|tau| {
                    let learn = as_f64(rule_target(rule, &run.inputs, run.learning_range(), tau)?);
                    let test = as_f64(rule_target(rule, &run.inputs, run.testing_range(), tau)?);
                    score_target(solver, run, &learn, &test)
                })
                .collect::<Result<Vec<_>>>()?;
            let task = TaskScore::from_scores(&scores);
            Ok(RuleScore {
                rule_id: rule.rule_id,
                separable: rule.separable,
                total: task.total,
                per_delay: task.per_delay,
                per_delay_train: task.per_delay_train,
                degenerate_taus: task.degenerate_taus,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let k = per_rule.len() as f64;
    let per_delay: Vec<f64> = (0..tau_max).map(|t| per_rule.iter().map(|r| r.per_delay[t]).sum::<f64>() / k).collect();
    let per_delay_train: Vec<f64> =
        (0..tau_max).map(|t| per_rule.iter().map(|r| r.per_delay_train[t]).sum::<f64>() / k).collect();
    let mut degenerate_taus: Vec<usize> = per_rule.iter().flat_map(|r| r.degenerate_taus.iter().copied()).collect();
    degenerate_taus.sort_unstable();
    degenerate_taus.dedup();
    Ok(BooleanScore {
        arity,
        score: TaskScore {
            total: per_delay.iter().sum(),
            per_delay,
            per_delay_train,
            degenerate_taus,
        },
        per_rule,
    })
}

/// Simulates a fresh run and scores the given rules on it.
pub fn boolean_capacity<R: Rng + ?Sized>(
    params: &NetworkParams,
    phases: &BenchmarkPhases,
    rules: &[BooleanRule],
    tau_max: usize,
    input: &mut InputSource,
    rng: &mut R,
) -> Result<BooleanScore> {
    phases.validate(tau_max)?;
    let run = BenchmarkRun::simulate(params, phases, 0, input, rng)?;
    boolean_capacity_of_run(&run, &run.solver()?, rules, tau_max)
}
