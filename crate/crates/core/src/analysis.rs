//! Structural and information diagnostics of a network: strongest
//! connections, mean absolute weights and per-neuron information about the
//! previous input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::{NetworkParams, StateTrace};

pub const TOP_CONNECTIONS: usize = 50;

/// One directed connection. `src == 0` denotes the external input; neurons
/// are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionRecord {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
    pub abs_rank: usize,
}

/// The `k` connections of largest magnitude over recurrent and input
/// weights, ties broken by `(src, dst)`.
pub fn top_connections(params: &NetworkParams, k: usize) -> Result<Vec<ConnectionRecord>> {
    let n = params.n_neurons();
    let total = n * (n + 1);
    if k == 0 || k > total {
        return Err(Error::Config(format!("requested {k} of {total} connections")));
    }
    let mut all: Vec<(usize, usize, f64)> = Vec::with_capacity(total);
    for dst in 1..=n {
        all.push((0, dst, params.w_input[dst - 1]));
        for src in 1..=n {
            all.push((src, dst, params.w_recurrent[(dst - 1, src - 1)]));
        }
    }
    all.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()).then((a.0, a.1).cmp(&(b.0, b.1))));
    Ok(all
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(rank, (src, dst, weight))| ConnectionRecord {
            src,
            dst,
            weight,
            abs_rank: rank + 1,
        })
        .collect())
}

/// Mean absolute weight of the strongest recurrent connections and of the
/// input connections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub block: usize,
    pub mean_abs_internal_top50: f64,
    pub mean_abs_input: f64,
    /// Plain mean over every recurrent weight.
    pub mean_abs_internal_all: f64,
    /// Fewer than 50 recurrent weights exist; all of them were used.
    pub top50_truncated: bool,
}

impl WeightSummary {
    pub fn internal_to_input_ratio(&self) -> f64 {
        self.mean_abs_internal_top50 / self.mean_abs_input
    }
}

pub fn weight_summary(params: &NetworkParams, block: usize) -> WeightSummary {
    let mut magnitudes: Vec<f64> = params.w_recurrent.iter().map(|w| w.abs()).collect();
    magnitudes.sort_by(|a, b| b.total_cmp(a));
    let take = magnitudes.len().min(TOP_CONNECTIONS);
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let input: Vec<f64> = params.w_input.iter().map(|w| w.abs()).collect();
    WeightSummary {
        block,
        mean_abs_internal_top50: mean(&magnitudes[..take]),
        mean_abs_input: mean(&input),
        mean_abs_internal_all: mean(&magnitudes),
        top50_truncated: magnitudes.len() < TOP_CONNECTIONS,
    }
}

/// Plug-in mutual information (nats) of two binary series from their 2x2
/// contingency counts. Cells with zero probability contribute nothing.
pub fn binary_mutual_information(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("series of lengths {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let mut counts = [[0u64; 2]; 2];
    for (&x, &y) in a.iter().zip(b) {
        counts[x as usize][y as usize] += 1;
    }
    let n = a.len() as f64;
    let pa = [(counts[0][0] + counts[0][1]) as f64 / n, (counts[1][0] + counts[1][1]) as f64 / n];
    let pb = [(counts[0][0] + counts[1][0]) as f64 / n, (counts[0][1] + counts[1][1]) as f64 / n];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let pxy = counts[x][y] as f64 / n;
            if pxy > 0.0 && pa[x] > 0.0 && pb[y] > 0.0 {
                mi += pxy * (pxy / (pa[x] * pb[y])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// `I(x_i(t); u(t-1))` for every neuron, estimated over the trace.
pub fn neuron_input_mi(trace: &StateTrace) -> Result<Vec<f64>> {
    if trace.len() < 2 {
        return Err(Error::InsufficientData(format!("trace of {} steps", trace.len())));
    }
    let previous_input = &trace.inputs[..trace.len() - 1];
    (0..trace.n_neurons)
        .map(|i| {
            let x: Vec<u8> = (1..trace.len()).map(|t| trace.row(t)[i]).collect();
            binary_mutual_information(&x, previous_input)
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}
