//! Experiment configuration, stored as TOML with `[network]`, `[ri]`,
//! `[benchmark]` and `[experiment]` sections. Missing keys take the
//! defaults of the full-scale profile.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{BenchmarkPhases, Task, DEFAULT_TAU_MAX};
use crate::error::{Error, Result};
use crate::infomax::{RIConfig, DEFAULT_BLOCK_STEPS, DEFAULT_ETA, DEFAULT_N_BLOCKS, DEFAULT_SETTLE_STEPS};
use crate::reservoir::{self, FiringMode, NetworkParams};

pub const MAX_MULTIPLICITY: u32 = 35;

/// Environment variable that overrides `experiment.out_dir`.
pub const OUT_DIR_ENV: &str = "RI_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_neurons: usize,
    pub sigma2_init: f64,
    pub p_max: f64,
    pub p_bar: f64,
    pub p0_bar: f64,
    pub epsilon: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n_neurons: reservoir::DEFAULT_N_NEURONS,
            sigma2_init: reservoir::DEFAULT_SIGMA2,
            p_max: reservoir::DEFAULT_P_MAX,
            p_bar: reservoir::DEFAULT_P_BAR,
            p0_bar: reservoir::DEFAULT_P0_BAR,
            epsilon: reservoir::DEFAULT_EPSILON,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiSection {
    pub eta: f64,
    pub block_steps: usize,
    pub settle_steps: usize,
    pub n_blocks: usize,
}

impl Default for RiSection {
    fn default() -> Self {
        RiSection {
            eta: DEFAULT_ETA,
            block_steps: DEFAULT_BLOCK_STEPS,
            settle_steps: DEFAULT_SETTLE_STEPS,
            n_blocks: DEFAULT_N_BLOCKS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub washout: usize,
    pub learning: usize,
    pub testing: usize,
    pub adapt_bias_in_washout: bool,
    pub tau_max: usize,
    /// Frozen steps recorded after testing for the per-neuron input MI.
    pub mi_probe: usize,
    pub tasks: Vec<Task>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let phases = BenchmarkPhases::default();
        BenchmarkConfig {
            washout: phases.washout,
            learning: phases.learning,
            testing: phases.testing,
            adapt_bias_in_washout: phases.adapt_bias_in_washout,
            tau_max: DEFAULT_TAU_MAX,
            mi_probe: 50_000,
            tasks: Task::ALL.to_vec(),
        }
    }
}

impl BenchmarkConfig {
    pub fn phases(&self) -> BenchmarkPhases {
        BenchmarkPhases {
            washout: self.washout,
            learning: self.learning,
            testing: self.testing,
            adapt_bias_in_washout: self.adapt_bias_in_washout,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub k_sweep: Vec<u32>,
    pub n_trials: usize,
    pub eval_every: usize,
    pub checkpoint_every: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            k_sweep: (1..=MAX_MULTIPLICITY).collect(),
            n_trials: 10,
            eval_every: 100,
            checkpoint_every: 100,
            master_seed: 1,
            out_dir: PathBuf::from("runs/ri"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub ri: RiSection,
    pub benchmark: BenchmarkConfig,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    /// Full-scale replication: 100 neurons, 1500 blocks of 100,000 steps,
    /// every multiplicity from 1 to 35, ten trials.
    pub fn full() -> Self {
        Self::default()
    }

    /// Desk-scale profile: 30 neurons, 150 blocks of 20,000 steps, delays
    /// up to 20, K in {1, 5, 30}, five trials.
    ///
    /// With ten times fewer blocks the learning rate is ten times larger, so
    /// the accumulated update `eta * n_blocks` equals the full-scale one.
    pub fn reduced() -> Self {
        ExperimentConfig {
            network: NetworkConfig {
                n_neurons: 30,
                ..NetworkConfig::default()
            },
            ri: RiSection {
                eta: 2.0,
                block_steps: 20_000,
                settle_steps: 10_000,
                n_blocks: 150,
            },
            benchmark: BenchmarkConfig {
                tau_max: 20,
                mi_probe: 20_000,
                ..BenchmarkConfig::default()
            },
            experiment: ExperimentSection {
                k_sweep: vec![1, 5, 30],
                n_trials: 5,
                eval_every: 25,
                checkpoint_every: 25,
                out_dir: PathBuf::from("runs/reduced"),
                ..ExperimentSection::default()
            },
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::full()),
            "reduced" => Ok(Self::reduced()),
            other => Err(Error::Config(format!("unknown profile `{other}` (full, reduced)"))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// Applies `RI_OUT_DIR` when it is set and non-empty.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.experiment.out_dir = PathBuf::from(dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.n_trials < 1 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if e.eval_every < 1 || e.checkpoint_every < 1 {
            return Err(Error::Config("eval_every and checkpoint_every must be at least 1".into()));
        }
        if e.k_sweep.is_empty() {
            return Err(Error::Config("k_sweep is empty".into()));
        }
        if let Some(k) = e.k_sweep.iter().find(|&&k| !(1..=MAX_MULTIPLICITY).contains(&k)) {
            return Err(Error::Config(format!("multiplicity {k} outside 1..={MAX_MULTIPLICITY}")));
        }
        let mut sorted = e.k_sweep.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != e.k_sweep.len() {
            return Err(Error::Config("k_sweep has repeated values".into()));
        }
        if self.benchmark.tasks.is_empty() {
            return Err(Error::Config("no benchmark tasks selected".into()));
        }
        if !(self.network.sigma2_init >= 0.0 && self.network.sigma2_init.is_finite()) {
            return Err(Error::Config("sigma2_init must be finite and nonnegative".into()));
        }
        self.ri_config(1).validate()?;
        self.benchmark.phases().validate(self.benchmark.tau_max)?;
        self.initial_params(0).map(|_| ())
    }

    pub fn ri_config(&self, k_multiplicity: u32) -> RIConfig {
        RIConfig {
            eta: self.ri.eta,
            input_multiplicity: k_multiplicity,
            block_steps: self.ri.block_steps,
            settle_steps: self.ri.settle_steps,
            n_blocks: self.ri.n_blocks,
        }
    }

    /// Random initial network with this configuration's constants.
    pub fn initial_params(&self, seed: u64) -> Result<NetworkParams> {
        let net = &self.network;
        let mut params = reservoir::init_network(net.n_neurons, net.sigma2_init, seed)?;
        params.p_max = net.p_max;
        params.p_bar = DVector::from_element(net.n_neurons, net.p_bar);
        params.p0_bar = net.p0_bar;
        params.epsilon = net.epsilon;
        params.firing = FiringMode::Stochastic;
        params.validate()?;
        Ok(params)
    }

    pub fn is_eval_block(&self, block: usize) -> bool {
        block % self.experiment.eval_every == 0 || block == self.ri.n_blocks
    }

    pub fn is_checkpoint_block(&self, block: usize) -> bool {
        self.is_eval_block(block) || block % self.experiment.checkpoint_every == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for cfg in [ExperimentConfig::full(), ExperimentConfig::reduced()] {
            let text = cfg.to_toml_string();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn partial_file_takes_defaults() {
        let cfg = ExperimentConfig::from_toml_str("[network]\nn_neurons = 12\n[experiment]\nk_sweep = [2, 3]\n").unwrap();
        assert_eq!(cfg.network.n_neurons, 12);
        assert_eq!(cfg.experiment.k_sweep, vec![2, 3]);
        assert_eq!(cfg.ri, RiSection::default());
        assert!(ExperimentConfig::from_toml_str("[network]\nneurons = 3\n").is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let mut cfg = ExperimentConfig::reduced();
        cfg.experiment.k_sweep = vec![36];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.experiment.k_sweep = vec![1];
        cfg.experiment.n_trials = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.experiment.n_trials = 1;
        cfg.ri.settle_steps = cfg.ri.block_steps;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn schedule() {
        let mut cfg = ExperimentConfig::reduced();
        cfg.ri.n_blocks = 60;
        cfg.experiment.eval_every = 25;
        cfg.experiment.checkpoint_every = 10;
        let evals: Vec<usize> = (0..=60).filter(|&b| cfg.is_eval_block(b)).collect();
        assert_eq!(evals, vec![0, 25, 50, 60]);
        assert!(cfg.is_checkpoint_block(25) && cfg.is_checkpoint_block(30) && !cfg.is_checkpoint_block(31));
    }
}
