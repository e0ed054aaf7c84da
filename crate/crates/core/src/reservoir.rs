//! Input-driven stochastic binary recurrent network with homeostatic biases.
//!
//! Neuron `i` fires at `t + 1` with probability `p_max / (1 + exp(-U_i(t)))`
//! where the membrane potential centres every presynaptic term on its target
//! rate:
//!
//! ```text
//! U_i(t) = sum_j W_ij (x_j(t) - p_bar_j) + W_in_i (u(t) - p0_bar) - h_i(t)
//! ```
//!
//! and the bias follows `h_i <- h_i + epsilon (x_i(t + 1) - p_bar_i)`.
//! All neurons update synchronously from the previous state.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const DEFAULT_P_MAX: f64 = 0.8;
pub const DEFAULT_P_BAR: f64 = 0.1;
pub const DEFAULT_P0_BAR: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_SIGMA2: f64 = 0.01;
pub const DEFAULT_N_NEURONS: usize = 100;

/// How a neuron turns its membrane potential into a spike.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiringMode {
    /// Bernoulli draw with the saturating logistic probability.
    #[default]
    Stochastic,
    /// Noise-free threshold: fire iff `U_i > 0`. Consumes no random numbers.
    Deterministic,
}

/// Learnable and fixed quantities of one network.
///
/// `w_recurrent[(i, j)]` is the weight from neuron `j` onto neuron `i`;
/// `w_input[i]` the weight from the external input onto neuron `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub w_recurrent: DMatrix<f64>,
    pub w_input: DVector<f64>,
    pub bias: DVector<f64>,
    pub p_max: f64,
    pub p_bar: DVector<f64>,
    pub p0_bar: f64,
    pub epsilon: f64,
    pub firing: FiringMode,
}

impl NetworkParams {
    /// All-zero weights and biases with the default constants.
    pub fn zeros(n_neurons: usize) -> Result<Self> {
        if n_neurons == 0 {
            return Err(Error::Config("n_neurons must be at least 1".into()));
        }
        Ok(NetworkParams {
            w_recurrent: DMatrix::zeros(n_neurons, n_neurons),
            w_input: DVector::zeros(n_neurons),
            bias: DVector::zeros(n_neurons),
            p_max: DEFAULT_P_MAX,
            p_bar: DVector::from_element(n_neurons, DEFAULT_P_BAR),
            p0_bar: DEFAULT_P0_BAR,
            epsilon: DEFAULT_EPSILON,
            firing: FiringMode::Stochastic,
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.w_input.len()
    }

    /// Target rates with the input prepended: `[p0_bar, p_bar_1, ..., p_bar_N]`.
    pub fn rates_with_input(&self) -> DVector<f64> {
        let n = self.n_neurons();
        DVector::from_fn(n + 1, |k, _| if k == 0 { self.p0_bar } else { self.p_bar[k - 1] })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_neurons();
        if n == 0 {
            return Err(Error::Config("network has no neurons".into()));
        }
        if self.w_recurrent.shape() != (n, n) || self.bias.len() != n || self.p_bar.len() != n {
            return Err(Error::Shape(format!(
                "w_recurrent {:?}, w_input {}, bias {}, p_bar {}",
                self.w_recurrent.shape(),
                n,
                self.bias.len(),
                self.p_bar.len()
            )));
        }
        let finite = self.w_recurrent.iter().all(|v| v.is_finite())
            && self.w_input.iter().all(|v| v.is_finite())
            && self.bias.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("weights and biases must be finite".into()));
        }
        if !(self.p_max > 0.0 && self.p_max <= 1.0) {
            return Err(Error::Config(format!("p_max {} outside (0, 1]", self.p_max)));
        }
        if !(self.p0_bar > 0.0 && self.p0_bar < 1.0) {
            return Err(Error::Config(format!("p0_bar {} outside (0, 1)", self.p0_bar)));
        }
        if let Some(p) = self.p_bar.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Config(format!("target rate {p} outside (0, 1)")));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        Ok(())
    }

    /// `sum_j W_ij p_bar_j`, the constant part of the recurrent drive.
    fn recurrent_offset(&self) -> Vec<f64> {
        (&self.w_recurrent * &self.p_bar).as_slice().to_vec()
    }
}

/// Gaussian(0, sigma2) weights, zero biases, default constants.
pub fn init_network(n_neurons: usize, sigma2: f64, seed: u64) -> Result<NetworkParams> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Config(format!("initial variance {sigma2} must be positive")));
    }
    let mut params = NetworkParams::zeros(n_neurons)?;
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = SimRng::seed_from_u64(seed);
    for i in 0..n_neurons {
        for j in 0..n_neurons {
            params.w_recurrent[(i, j)] = normal.sample(&mut rng);
        }
    }
    for i in 0..n_neurons {
        params.w_input[i] = normal.sample(&mut rng);
    }
    Ok(params)
}

/// Binary activity at one timestep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkState {
    pub x: Vec<u8>,
    pub t: u64,
}

impl NetworkState {
    pub fn silent(n_neurons: usize) -> Self {
        NetworkState {
            x: vec![0; n_neurons],
            t: 0,
        }
    }

    pub fn from_bits(x: Vec<u8>, t: u64) -> Result<Self> {
        if x.iter().any(|&b| b > 1) {
            return Err(Error::Config("network state entries must be 0 or 1".into()));
        }
        Ok(NetworkState { x, t })
    }
}

#[inline]
pub fn firing_probability(p_max: f64, potential: f64) -> f64 {
    p_max / (1.0 + (-potential).exp())
}

/// Direct evaluation of the membrane potential of every neuron.
pub fn membrane_potential(params: &NetworkParams, state: &NetworkState, u: u8) -> Result<DVector<f64>> {
    let n = params.n_neurons();
    if state.x.len() != n {
        return Err(Error::Shape(format!("state has {} entries, network has {n}", state.x.len())));
    }
    let centred = DVector::from_fn(n, |j, _| state.x[j] as f64 - params.p_bar[j]);
    let drive = u as f64 - params.p0_bar;
    Ok(&params.w_recurrent * centred + &params.w_input * drive - &params.bias)
}

/// One synchronous update. Draws one uniform per neuron, in index order, in
/// stochastic mode.
pub fn step<R: Rng + ?Sized>(params: &NetworkParams, state: &NetworkState, u: u8, rng: &mut R) -> Result<NetworkState> {
    let draws: Vec<f64> = match params.firing {
        FiringMode::Stochastic => (0..params.n_neurons()).map(|_| rng.random::<f64>()).collect(),
        FiringMode::Deterministic => Vec::new(),
    };
    step_with_uniforms(params, state, u, &draws)
}

/// `step` with the uniform draws supplied by the caller (ignored in
/// deterministic mode).
pub fn step_with_uniforms(params: &NetworkParams, state: &NetworkState, u: u8, draws: &[f64]) -> Result<NetworkState> {
    let potential = membrane_potential(params, state, u)?;
    let x = match params.firing {
        FiringMode::Stochastic => {
            if draws.len() != params.n_neurons() {
                return Err(Error::Shape(format!(
                    "{} uniform draws for {} neurons",
                    draws.len(),
                    params.n_neurons()
                )));
            }
            potential
                .iter()
                .zip(draws)
                .map(|(&v, &r)| (r < firing_probability(params.p_max, v)) as u8)
                .collect()
        }
        FiringMode::Deterministic => potential.iter().map(|&v| (v > 0.0) as u8).collect(),
    };
    Ok(NetworkState { x, t: state.t + 1 })
}

/// Homeostatic bias step driven by the freshly computed state.
pub fn update_bias(params: &mut NetworkParams, new_state: &NetworkState) {
    let eps = params.epsilon;
    for (i, h) in params.bias.iter_mut().enumerate() {
        *h += eps * (new_state.x[i] as f64 - params.p_bar[i]);
    }
}

/// Where the input bits come from.
#[derive(Clone, Debug)]
pub enum InputSource {
    /// i.i.d. Bernoulli bits from a dedicated stream, so that replaying the
    /// recorded bits leaves the neuron noise untouched.
    Bernoulli { p: f64, rng: SimRng },
    Replay { bits: Vec<u8>, pos: usize },
}

impl InputSource {
    pub fn bernoulli(p: f64, rng: SimRng) -> Self {
        InputSource::Bernoulli { p, rng }
    }

    pub fn replay(bits: Vec<u8>) -> Self {
        InputSource::Replay { bits, pos: 0 }
    }

    pub fn next_bit(&mut self) -> Option<u8> {
        match self {
            InputSource::Bernoulli { p, rng } => Some((rng.random::<f64>() < *p) as u8),
            InputSource::Replay { bits, pos } => {
                let bit = bits.get(*pos).copied();
                *pos += 1;
                bit
            }
        }
    }
}

/// Time-indexed record of `(u(t), x(t))`, row `k` holding time `t_start + k`.
///
/// `x(t)` is the state the input `u(t)` is applied to, so row `k + 1` holds
/// the state produced from row `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateTrace {
    pub inputs: Vec<u8>,
    pub states: Vec<u8>,
    pub n_neurons: usize,
    pub t_start: u64,
}

impl StateTrace {
    pub fn with_capacity(n_neurons: usize, t_start: u64, steps: usize) -> Self {
        StateTrace {
            inputs: Vec::with_capacity(steps),
            states: Vec::with_capacity(steps * n_neurons),
            n_neurons,
            t_start,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, u: u8, x: &[u8]) {
        debug_assert_eq!(x.len(), self.n_neurons);
        self.inputs.push(u);
        self.states.extend_from_slice(x);
    }

    pub fn row(&self, k: usize) -> &[u8] {
        &self.states[k * self.n_neurons..(k + 1) * self.n_neurons]
    }

    /// Rows `range` as a new trace.
    pub fn slice(&self, range: std::ops::Range<usize>) -> StateTrace {
        let n = self.n_neurons;
        StateTrace {
            inputs: self.inputs[range.clone()].to_vec(),
            states: self.states[range.start * n..range.end * n].to_vec(),
            n_neurons: n,
            t_start: self.t_start + range.start as u64,
        }
    }

    /// Columnar CSV: `t,u,x_0001,...,x_N`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "u".to_string()];
        header.extend((1..=self.n_neurons).map(|i| format!("x_{i:04}")));
        writer.write_record(&header)?;
        for k in 0..self.len() {
            let mut record = Vec::with_capacity(self.n_neurons + 2);
            record.push((self.t_start + k as u64).to_string());
            record.push(self.inputs[k].to_string());
            record.extend(self.row(k).iter().map(|b| b.to_string()));
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses the format written by [`StateTrace::write_csv`].
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<StateTrace> {
        let mut reader = csv::Reader::from_reader(input);
        let header = reader.headers()?.clone();
        if header.len() < 2 || &header[0] != "t" || &header[1] != "u" {
            return Err(Error::parse("header", "expected t,u,x_0001,..."));
        }
        let n = header.len() - 2;
        let mut trace = StateTrace::with_capacity(n, 0, 0);
        let bit = |s: &str, row: usize, col: &str| match s {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(Error::parse(col, format!("row {row}: `{other}` is not 0 or 1"))),
        };
        let mut x = vec![0u8; n];
        for (k, record) in reader.records().enumerate() {
            let record = record?;
            let t: u64 = record[0].parse().map_err(|e| Error::parse("t", format!("row {}: {e}", k + 1)))?;
            if k == 0 {
                trace.t_start = t;
            } else if t != trace.t_start + k as u64 {
                return Err(Error::parse("t", format!("row {} breaks the time sequence", k + 1)));
            }
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = bit(&record[i + 2], k + 1, &header[i + 2])?;
            }
            trace.push(bit(&record[1], k + 1, "u")?, &x);
        }
        Ok(trace)
    }
}

/// A network together with its current state, advanced in place.
#[derive(Clone, Debug, PartialEq)]
pub struct Reservoir {
    pub params: NetworkParams,
    pub state: NetworkState,
}

impl Reservoir {
    pub fn new(params: NetworkParams) -> Self {
        let n = params.n_neurons();
        Reservoir {
            params,
            state: NetworkState::silent(n),
        }
    }

    /// Runs `n_steps` updates, calling `observe(u(t), x(t))` before each one.
    ///
    /// Produces exactly the same states and random-number consumption as
    /// repeated [`step`] + [`update_bias`], but accumulates the recurrent
    /// drive over active presynaptic neurons only.
    pub fn drive<R, F>(&mut self, n_steps: usize, input: &mut InputSource, rng: &mut R, adapt_bias: bool, mut observe: F) -> Result<()>
    where
        R: Rng + ?Sized,
        F: FnMut(u8, &[u8]),
    {
        let n = self.params.n_neurons();
        if self.state.x.len() != n {
            return Err(Error::Shape(format!("state has {} entries, network has {n}", self.state.x.len())));
        }
        let offset = self.params.recurrent_offset();
        let w = self.params.w_recurrent.as_slice();
        let w_in = self.params.w_input.as_slice();
        let p_bar = self.params.p_bar.as_slice();
        let (p_max, p0_bar, eps, firing) = (self.params.p_max, self.params.p0_bar, self.params.epsilon, self.params.firing);
        let bias = self.params.bias.as_mut_slice();
        let mut potential = vec![0.0; n];
        let mut next = vec![0u8; n];

        for _ in 0..n_steps {
            let u = input
                .next_bit()
                .ok_or_else(|| Error::InsufficientData("input stream exhausted".into()))?;
            observe(u, &self.state.x);

            let drive = u as f64 - p0_bar;
            for i in 0..n {
                potential[i] = w_in[i] * drive - offset[i] - bias[i];
            }
            for (j, &xj) in self.state.x.iter().enumerate() {
                if xj == 1 {
                    let column = &w[j * n..(j + 1) * n];
                    for (acc, wij) in potential.iter_mut().zip(column) {
                        *acc += wij;
                    }
                }
            }
            match firing {
                FiringMode::Stochastic => {
                    for i in 0..n {
                        let r: f64 = rng.random();
                        next[i] = (r < firing_probability(p_max, potential[i])) as u8;
                    }
                }
                FiringMode::Deterministic => {
                    for i in 0..n {
                        next[i] = (potential[i] > 0.0) as u8;
                    }
                }
            }
            if adapt_bias {
                for i in 0..n {
                    bias[i] += eps * (next[i] as f64 - p_bar[i]);
                }
            }
            std::mem::swap(&mut self.state.x, &mut next);
            self.state.t += 1;
        }
        Ok(())
    }

    /// Like [`Reservoir::drive`], recording every `(u(t), x(t))` row.
    pub fn record<R: Rng + ?Sized>(&mut self, n_steps: usize, input: &mut InputSource, rng: &mut R, adapt_bias: bool) -> Result<StateTrace> {
        let mut trace = StateTrace::with_capacity(self.params.n_neurons(), self.state.t, n_steps);
        self.drive(n_steps, input, rng, adapt_bias, |u, x| trace.push(u, x))?;
        Ok(trace)
    }
}

/// Runs one phase from `start`, returning the trace, the (possibly
/// bias-adapted) parameters and the final state.
pub fn run_phase<R: Rng + ?Sized>(
    params: &NetworkParams,
    start: &NetworkState,
    n_steps: usize,
    input: &mut InputSource,
    rng: &mut R,
    adapt_bias: bool,
) -> Result<(StateTrace, NetworkParams, NetworkState)> {
    if n_steps == 0 {
        return Err(Error::Config("a phase needs at least one step".into()));
    }
    let mut reservoir = Reservoir {
        params: params.clone(),
        state: start.clone(),
    };
    let trace = reservoir.record(n_steps, input, rng, adapt_bias)?;
    Ok((trace, reservoir.params, reservoir.state))
}
