//! Recurrent infomax: block covariance statistics, the Gaussian estimate of
//! the mutual information between successive network states, and the
//! steepest-ascent weight update.
//!
//! Variables are indexed `0..=N` with index 0 the external input and `k >= 1`
//! neuron `k`. Every statistic is centred on the fixed target rates rather
//! than on empirical block means.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::reservoir::{InputSource, NetworkParams, Reservoir, StateTrace};

/// Diagonal jitter tried, in order, when `C` or `D` is not positive definite.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

pub const DEFAULT_ETA: f64 = 0.2;
pub const DEFAULT_BLOCK_STEPS: usize = 100_000;
pub const DEFAULT_SETTLE_STEPS: usize = 50_000;
pub const DEFAULT_N_BLOCKS: usize = 1500;

/// Raw co-activation counts over a binary sequence `z(0), z(1), ...` of
/// `(u, x_1, ..., x_N)` vectors. Centring happens in [`StatsAccumulator::finish`].
#[derive(Clone, Debug, PartialEq)]
pub struct StatsAccumulator {
    dim: usize,
    observed: u64,
    // sum over all observed t of z(t) z(t)^T and z(t)
    co: Vec<u64>,
    sums: Vec<u64>,
    // sum over consecutive pairs of z(t+1) z(t)^T, row = later variable
    lag: Vec<u64>,
    first: Vec<u32>,
    last: Vec<u32>,
}

impl StatsAccumulator {
    pub fn new(n_neurons: usize) -> Self {
        let dim = n_neurons + 1;
        StatsAccumulator {
            dim,
            observed: 0,
            co: vec![0; dim * dim],
            sums: vec![0; dim],
            lag: vec![0; dim * dim],
            first: Vec::new(),
            last: Vec::new(),
        }
    }

    fn active(u: u8, x: &[u8]) -> Vec<u32> {
        let mut idx = Vec::with_capacity(8);
        if u == 1 {
            idx.push(0);
        }
        idx.extend(x.iter().enumerate().filter(|(_, &b)| b == 1).map(|(j, _)| j as u32 + 1));
        idx
    }

    /// Appends `z(t) = (u(t), x(t))`.
    pub fn push(&mut self, u: u8, x: &[u8]) {
        debug_assert_eq!(x.len() + 1, self.dim);
        let active = Self::active(u, x);
        self.add_outer(&active);
        if self.observed > 0 {
            let previous = std::mem::take(&mut self.last);
            self.add_lag(&active, &previous);
        } else {
            self.first = active.clone();
        }
        self.last = active;
        self.observed += 1;
    }

    fn add_outer(&mut self, active: &[u32]) {
        for &a in active {
            self.sums[a as usize] += 1;
            let row = a as usize * self.dim;
            for &b in active {
                self.co[row + b as usize] += 1;
            }
        }
    }

    fn add_lag(&mut self, later: &[u32], earlier: &[u32]) {
        for &a in later {
            let row = a as usize * self.dim;
            for &b in earlier {
                self.lag[row + b as usize] += 1;
            }
        }
    }

    /// Number of consecutive pairs seen so far.
    pub fn pairs(&self) -> u64 {
        self.observed.saturating_sub(1)
    }

    /// Concatenation `self ++ other`, including the pair across the seam.
    pub fn merge(mut self, other: &StatsAccumulator) -> Result<StatsAccumulator> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("merging {} and {} variables", self.dim, other.dim)));
        }
        if other.observed == 0 {
            return Ok(self);
        }
        if self.observed == 0 {
            return Ok(other.clone());
        }
        for (a, b) in self.co.iter_mut().zip(&other.co) {
            *a += b;
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.lag.iter_mut().zip(&other.lag) {
            *a += b;
        }
        let seam = std::mem::take(&mut self.last);
        self.add_lag(&other.first, &seam);
        self.last = other.last.clone();
        self.observed += other.observed;
        Ok(self)
    }

    /// Centres the counts on `rates` (length `N + 1`, input first).
    pub fn finish(&self, rates: &DVector<f64>) -> Result<BlockStats> {
        let d = self.dim;
        if rates.len() != d {
            return Err(Error::Shape(format!("{} centring rates for {d} variables", rates.len())));
        }
        let pairs = self.pairs();
        if pairs == 0 {
            return Err(Error::InsufficientData("need at least two timesteps".into()));
        }
        let t = pairs as f64;
        let in_first = |a: usize| self.last.contains(&(a as u32));
        let in_second = |a: usize| self.first.contains(&(a as u32));
        // sums over z(0..T-1) and z(1..T)
        let s_first: Vec<f64> = (0..d).map(|a| self.sums[a] as f64 - in_first(a) as u8 as f64).collect();
        let s_second: Vec<f64> = (0..d).map(|a| self.sums[a] as f64 - in_second(a) as u8 as f64).collect();

        let r = rates;
        let mut e_same = DMatrix::zeros(d, d);
        let mut e_next_next = DMatrix::zeros(d, d);
        let mut e_next_same = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let co = self.co[a * d + b] as f64;
                let co_first = co - (in_first(a) && in_first(b)) as u8 as f64;
                let co_second = co - (in_second(a) && in_second(b)) as u8 as f64;
                let lag = self.lag[a * d + b] as f64;
                e_same[(a, b)] = (co_first - r[b] * s_first[a] - r[a] * s_first[b]) / t + r[a] * r[b];
                e_next_next[(a, b)] = (co_second - r[b] * s_second[a] - r[a] * s_second[b]) / t + r[a] * r[b];
                e_next_same[(a, b)] = (lag - r[b] * s_second[a] - r[a] * s_first[b]) / t + r[a] * r[b];
            }
        }
        let e_same_next = e_next_same.transpose();
        Ok(BlockStats {
            e_same,
            e_next_same,
            e_same_next,
            e_next_next,
            n_samples: pairs,
        })
    }
}

/// Same-time and one-step-lagged covariances of one measurement window.
///
/// `e_next_same[(a, b)] = E[(z_a(t+1) - r_a)(z_b(t) - r_b)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStats {
    pub e_same: DMatrix<f64>,
    pub e_next_same: DMatrix<f64>,
    pub e_same_next: DMatrix<f64>,
    pub e_next_next: DMatrix<f64>,
    pub n_samples: u64,
}

impl BlockStats {
    pub fn dim(&self) -> usize {
        self.e_same.nrows()
    }

    /// The `2(N+1)` joint covariance of `(z(t), z(t+1))`.
    pub fn joint(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut joint = DMatrix::zeros(2 * d, 2 * d);
        joint.view_mut((0, 0), (d, d)).copy_from(&self.e_same);
        joint.view_mut((0, d), (d, d)).copy_from(&self.e_same_next);
        joint.view_mut((d, 0), (d, d)).copy_from(&self.e_next_same);
        joint.view_mut((d, d), (d, d)).copy_from(&self.e_next_next);
        joint
    }

    /// Multiplies every block by `gamma`.
    pub fn scaled(&self, gamma: f64) -> BlockStats {
        BlockStats {
            e_same: &self.e_same * gamma,
            e_next_same: &self.e_next_same * gamma,
            e_same_next: &self.e_same_next * gamma,
            e_next_next: &self.e_next_next * gamma,
            n_samples: self.n_samples,
        }
    }
}

pub fn accumulate_stats(trace: &StateTrace, rates: &DVector<f64>) -> Result<BlockStats> {
    if trace.len() < 2 {
        return Err(Error::InsufficientData(format!("trace of {} steps", trace.len())));
    }
    let mut acc = StatsAccumulator::new(trace.n_neurons);
    for k in 0..trace.len() {
        acc.push(trace.inputs[k], trace.row(k));
    }
    acc.finish(rates)
}

/// Gaussian mutual information of one block, in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiReport {
    pub mi: f64,
    pub log_det_c: f64,
    pub log_det_d: f64,
    pub jitter_applied: f64,
}

struct Factorized {
    c: Cholesky<f64, Dyn>,
    d: Cholesky<f64, Dyn>,
    jitter: f64,
}

fn jittered(m: &DMatrix<f64>, jitter: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    for k in 0..out.nrows() {
        out[(k, k)] += jitter;
    }
    out
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

fn factorize(stats: &BlockStats) -> Result<Factorized> {
    let joint = stats.joint();
    let mut failing = "C";
    for &jitter in &JITTER_LADDER {
        let Some(c) = Cholesky::new(jittered(&stats.e_same, jitter)) else {
            failing = "C";
            continue;
        };
        let Some(d) = Cholesky::new(jittered(&joint, jitter)) else {
            failing = "D";
            continue;
        };
        return Ok(Factorized { c, d, jitter });
    }
    Err(Error::Degenerate {
        matrix: failing,
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

fn report(f: &Factorized) -> MiReport {
    let log_det_c = log_det(&f.c);
    let log_det_d = log_det(&f.d);
    MiReport {
        mi: log_det_c - 0.5 * log_det_d,
        log_det_c,
        log_det_d,
        jitter_applied: f.jitter,
    }
}

/// `log|C| - log|D| / 2` with both log-determinants read off Cholesky factors.
pub fn gaussian_mi(stats: &BlockStats) -> Result<MiReport> {
    Ok(report(&factorize(stats)?))
}

/// Approximate gradient of the block information with respect to every
/// incoming weight: rows are neurons `1..=N`, column 0 the input weight and
/// column `j >= 1` the weight from neuron `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientMatrix {
    pub g: DMatrix<f64>,
}

impl GradientMatrix {
    pub fn n_neurons(&self) -> usize {
        self.g.nrows()
    }

    pub fn input_column(&self) -> DVector<f64> {
        self.g.column(0).into_owned()
    }

    pub fn recurrent_block(&self) -> DMatrix<f64> {
        self.g.columns(1, self.g.ncols() - 1).into_owned()
    }
}

/// Linear-response gradient of the Gaussian information.
///
/// With `S = e_same`, `L = e_next_same`, `D^-1 = [[P, Q], [Q^T, R]]` and
/// `M = 2 C^-1 - P - R`, a weight `W_ij` moves the lagged covariances of
/// neuron `i` by `beta_i S_j.` and its same-time covariances by
/// `beta_i L_kj` (`k != i`, the variance being pinned by the bias), where
/// `beta_i = p_i (1 - p_i)` is the gain of a unit firing at its target rate.
/// Contracting with the log-determinant derivatives gives
///
/// ```text
/// g_ij = beta_i sum_{k>=1, k!=i} M_ik L_kj
///      - beta_i sum_{l!=j} S_jl Q_li
///      - m_ij Q_ji
/// ```
///
/// where `m_ij = (1-2p_i)(1-2p_j) L_ij + p_i p_j (1-p_i)(1-p_j)` is the
/// binary fourth moment `E[(x_i(t+1)-p_i)^2 (x_j(t)-p_j)^2]`.
pub fn mi_gradient(stats: &BlockStats, rates: &DVector<f64>) -> Result<GradientMatrix> {
    let d = stats.dim();
    if rates.len() != d {
        return Err(Error::Shape(format!("{} rates for {d} variables", rates.len())));
    }
    let f = factorize(stats)?;
    let c_inv = f.c.inverse();
    let d_inv = f.d.inverse();
    let p = d_inv.view((0, 0), (d, d));
    let q = d_inv.view((0, d), (d, d));
    let r = d_inv.view((d, d), (d, d));
    let m = &c_inv * 2.0 - p - r;
    let s = &stats.e_same;
    let l = &stats.e_next_same;

    let ml = &m * l;
    let sq = s * q;
    let n = d - 1;
    let mut g = DMatrix::zeros(n, d);
    for i in 1..d {
        let pi = rates[i];
        let beta = pi * (1.0 - pi);
        for j in 0..d {
            let pj = rates[j];
            let same_time = ml[(i, j)] - m[(i, 0)] * l[(0, j)] - m[(i, i)] * l[(i, j)];
            let lagged = sq[(j, i)] - s[(j, j)] * q[(j, i)];
            let fourth = (1.0 - 2.0 * pi) * (1.0 - 2.0 * pj) * l[(i, j)] + pi * pj * (1.0 - pi) * (1.0 - pj);
            g[(i - 1, j)] = beta * same_time - beta * lagged - fourth * q[(j, i)];
        }
    }
    Ok(GradientMatrix { g })
}

/// Learning schedule of recurrent infomax.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RIConfig {
    pub eta: f64,
    pub input_multiplicity: u32,
    pub block_steps: usize,
    pub settle_steps: usize,
    pub n_blocks: usize,
}

impl Default for RIConfig {
    fn default() -> Self {
        RIConfig {
            eta: DEFAULT_ETA,
            input_multiplicity: 1,
            block_steps: DEFAULT_BLOCK_STEPS,
            settle_steps: DEFAULT_SETTLE_STEPS,
            n_blocks: DEFAULT_N_BLOCKS,
        }
    }
}

impl RIConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta {} must be finite and nonnegative", self.eta)));
        }
        if self.input_multiplicity < 1 {
            return Err(Error::Config("input multiplicity must be at least 1".into()));
        }
        if self.settle_steps >= self.block_steps {
            return Err(Error::Config(format!(
                "settle_steps {} must be below block_steps {}",
                self.settle_steps, self.block_steps
            )));
        }
        if self.block_steps - self.settle_steps < 2 {
            return Err(Error::Config("measurement window needs at least two steps".into()));
        }
        Ok(())
    }

    pub fn measure_steps(&self) -> usize {
        self.block_steps - self.settle_steps
    }
}

/// `W_ij += eta g_ij` for recurrent weights and `W_in_i += eta K g_i0` for
/// input weights. Biases are left alone.
pub fn apply_ri_update(params: &mut NetworkParams, grad: &GradientMatrix, cfg: &RIConfig) -> Result<()> {
    let n = params.n_neurons();
    if grad.g.shape() != (n, n + 1) {
        return Err(Error::Shape(format!("gradient {:?} for {n} neurons", grad.g.shape())));
    }
    if let Some(k) = grad.g.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { row: k % n + 1, col: k / n });
    }
    let input_rate = cfg.eta * cfg.input_multiplicity as f64;
    for i in 0..n {
        params.w_input[i] += input_rate * grad.g[(i, 0)];
        for j in 0..n {
            params.w_recurrent[(i, j)] += cfg.eta * grad.g[(i, j + 1)];
        }
    }
    Ok(())
}

/// Simulates one block in place (bias adapting throughout) and returns the
/// statistics of its measurement window.
pub fn simulate_block<R: Rng + ?Sized>(reservoir: &mut Reservoir, cfg: &RIConfig, input: &mut InputSource, rng: &mut R) -> Result<BlockStats> {
    cfg.validate()?;
    reservoir.drive(cfg.settle_steps, input, rng, true, |_, _| {})?;
    let mut acc = StatsAccumulator::new(reservoir.params.n_neurons());
    reservoir.drive(cfg.measure_steps(), input, rng, true, |u, x| acc.push(u, x))?;
    acc.finish(&reservoir.params.rates_with_input())
}

/// Result of one infomax block.
#[derive(Clone, Debug)]
pub struct BlockOutcome {
    pub mi: MiReport,
    pub stats: BlockStats,
}

/// One full block: settle, measure, estimate, then update the weights of
/// `reservoir` in place. On error the simulation has advanced but the
/// weights are untouched.
pub fn run_ri_block<R: Rng + ?Sized>(reservoir: &mut Reservoir, cfg: &RIConfig, input: &mut InputSource, rng: &mut R) -> Result<BlockOutcome> {
    let stats = simulate_block(reservoir, cfg, input, rng)?;
    let rates = reservoir.params.rates_with_input();
    let mi = gaussian_mi(&stats)?;
    let grad = mi_gradient(&stats, &rates)?;
    apply_ri_update(&mut reservoir.params, &grad, cfg)?;
    Ok(BlockOutcome { mi, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::init_network;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    fn spd(d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream(seed, &[]);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5);
        &a * a.transpose() + DMatrix::identity(d, d) * 0.1
    }

    fn independent(c: DMatrix<f64>) -> BlockStats {
        let d = c.nrows();
        BlockStats {
            e_same: c.clone(),
            e_next_same: DMatrix::zeros(d, d),
            e_same_next: DMatrix::zeros(d, d),
            e_next_next: c,
            n_samples: 1000,
        }
    }

    fn scalar(v: f64, c: f64) -> BlockStats {
        let m = |x: f64| DMatrix::from_element(1, 1, x);
        BlockStats {
            e_same: m(v),
            e_next_same: m(c),
            e_same_next: m(c),
            e_next_next: m(v),
            n_samples: 1000,
        }
    }

    #[test]
    fn constant_silent_trace() {
        let mut trace = StateTrace::with_capacity(2, 0, 10);
        for _ in 0..10 {
            trace.push(0, &[0, 0]);
        }
        let rates = DVector::from_vec(vec![0.5, 0.1, 0.1]);
        let s = accumulate_stats(&trace, &rates).unwrap();
        assert_eq!(s.n_samples, 9);
        for m in [&s.e_same, &s.e_next_same, &s.e_next_next] {
            assert_relative_eq!(m[(1, 2)], 0.01, epsilon = 1e-15);
            assert_relative_eq!(m[(1, 1)], 0.01, epsilon = 1e-15);
            assert_relative_eq!(m[(0, 0)], 0.25, epsilon = 1e-15);
            assert_relative_eq!(m[(0, 1)], 0.05, epsilon = 1e-15);
        }
    }

    #[test]
    fn short_trace_rejected() {
        let mut trace = StateTrace::with_capacity(1, 0, 1);
        trace.push(1, &[1]);
        assert!(matches!(
            accumulate_stats(&trace, &DVector::from_vec(vec![0.5, 0.1])),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn counts_match_direct_sums() {
        let mut rng = stream(2, &[]);
        let mut trace = StateTrace::with_capacity(3, 0, 40);
        for _ in 0..40 {
            let x: Vec<u8> = (0..3).map(|_| rng.random_bool(0.3) as u8).collect();
            trace.push(rng.random_bool(0.5) as u8, &x);
        }
        let rates = DVector::from_vec(vec![0.5, 0.1, 0.2, 0.3]);
        let s = accumulate_stats(&trace, &rates).unwrap();
        let z = |t: usize, a: usize| -> f64 {
            let v = if a == 0 { trace.inputs[t] } else { trace.row(t)[a - 1] };
            v as f64 - rates[a]
        };
        let t_pairs = trace.len() - 1;
        for a in 0..4 {
            for b in 0..4 {
                let same: f64 = (0..t_pairs).map(|t| z(t, a) * z(t, b)).sum::<f64>() / t_pairs as f64;
                let nn: f64 = (0..t_pairs).map(|t| z(t + 1, a) * z(t + 1, b)).sum::<f64>() / t_pairs as f64;
                let lag: f64 = (0..t_pairs).map(|t| z(t + 1, a) * z(t, b)).sum::<f64>() / t_pairs as f64;
                assert_relative_eq!(s.e_same[(a, b)], same, epsilon = 1e-12);
                assert_relative_eq!(s.e_next_next[(a, b)], nn, epsilon = 1e-12);
                assert_relative_eq!(s.e_next_same[(a, b)], lag, epsilon = 1e-12);
                assert_relative_eq!(s.e_same_next[(b, a)], lag, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn merge_is_exact_concatenation() {
        let params = init_network(5, 1.0, 4).unwrap();
        let mut reservoir = Reservoir::new(params);
        let trace = reservoir
            .record(400, &mut InputSource::bernoulli(0.5, stream(5, &[1])), &mut stream(5, &[0]), true)
            .unwrap();
        let rates = reservoir.params.rates_with_input();
        let whole = accumulate_stats(&trace, &rates).unwrap();

        let mut left = StatsAccumulator::new(5);
        let mut right = StatsAccumulator::new(5);
        for k in 0..trace.len() {
            if k < 170 {
                left.push(trace.inputs[k], trace.row(k));
            } else {
                right.push(trace.inputs[k], trace.row(k));
            }
        }
        let merged = left.merge(&right).unwrap().finish(&rates).unwrap();
        assert_eq!(merged.n_samples, whole.n_samples);
        assert!((&merged.e_same - &whole.e_same).amax() < 1e-12);
        assert!((&merged.e_next_same - &whole.e_next_same).amax() < 1e-12);
        assert!((&merged.e_next_next - &whole.e_next_next).amax() < 1e-12);
    }

    #[test]
    fn independence_gives_zero_information() {
        let s = independent(spd(6, 1));
        let r = gaussian_mi(&s).unwrap();
        assert!(r.mi.abs() < 1e-9, "mi {}", r.mi);
        assert_relative_eq!(r.log_det_d, 2.0 * r.log_det_c, epsilon = 1e-9);
        assert_eq!(r.jitter_applied, 0.0);
        let g = mi_gradient(&s, &DVector::from_element(6, 0.1)).unwrap();
        assert!(g.g.amax() < 1e-12);
    }

    #[test]
    fn scalar_lag_one_information() {
        for rho in [0.0, 0.5, 0.9] {
            let r = gaussian_mi(&scalar(0.09, rho * 0.09)).unwrap();
            let expected = -0.5 * (1.0 - rho * rho).ln();
            assert!((r.mi - expected).abs() < 1e-9, "rho {rho}");
            assert_eq!(r.mi, r.log_det_c - 0.5 * r.log_det_d);
        }
        assert!((gaussian_mi(&scalar(1.0, 0.9)).unwrap().mi - 0.830).abs() < 5e-4);
    }

    #[test]
    fn singular_statistics_use_jitter_then_fail() {
        // one variable duplicated: C singular
        let mut c = DMatrix::from_element(2, 2, 0.09);
        let s = independent(c.clone());
        let r = gaussian_mi(&s).unwrap();
        assert!(r.jitter_applied > 0.0);
        assert!(JITTER_LADDER.contains(&r.jitter_applied));

        c[(0, 1)] = 0.5;
        c[(1, 0)] = 0.5;
        match gaussian_mi(&independent(c)) {
            Err(Error::Degenerate { matrix, .. }) => assert_eq!(matrix, "C"),
            other => panic!("expected degenerate error, got {other:?}"),
        }
    }

    #[test]
    fn joint_top_left_is_same_time_block() {
        let s = BlockStats {
            e_same: spd(4, 2),
            e_next_same: spd(4, 3) * 0.1,
            e_same_next: (spd(4, 3) * 0.1).transpose(),
            e_next_next: spd(4, 4),
            n_samples: 10,
        };
        assert_eq!(s.joint().view((0, 0), (4, 4)).into_owned(), s.e_same);
    }

    #[test]
    fn first_term_scale_homogeneity() {
        // L scales by gamma, M by 1/gamma: the same-time term is invariant
        let rates = DVector::from_vec(vec![0.5, 0.1, 0.1, 0.1]);
        let base = BlockStats {
            e_same: spd(4, 7) * 0.05,
            e_next_same: spd(4, 8) * 0.002,
            e_same_next: (spd(4, 8) * 0.002).transpose(),
            e_next_next: spd(4, 7) * 0.05,
            n_samples: 10,
        };
        let first_term = |s: &BlockStats| {
            let f = factorize(s).unwrap();
            let d = s.dim();
            let d_inv = f.d.inverse();
            let m = f.c.inverse() * 2.0 - d_inv.view((0, 0), (d, d)) - d_inv.view((d, d), (d, d));
            &m * &s.e_next_same
        };
        let a = first_term(&base);
        let b = first_term(&base.scaled(3.0));
        assert!((&a - &b).amax() < 1e-9 * a.amax().max(1.0));
        assert!(mi_gradient(&base, &rates).is_ok());
    }

    #[test]
    fn update_rules() {
        let mut params = init_network(3, 0.01, 1).unwrap();
        let before = params.clone();
        let zero = GradientMatrix { g: DMatrix::zeros(3, 4) };
        let cfg = RIConfig { input_multiplicity: 7, ..RIConfig::default() };
        apply_ri_update(&mut params, &zero, &cfg).unwrap();
        assert_eq!(params, before);

        let mut g = DMatrix::zeros(3, 4);
        g[(1, 0)] = 0.01;
        g[(2, 3)] = 0.5;
        apply_ri_update(&mut params, &GradientMatrix { g: g.clone() }, &cfg).unwrap();
        assert_relative_eq!(params.w_input[1] - before.w_input[1], 0.014, epsilon = 1e-15);
        assert_relative_eq!(params.w_recurrent[(2, 2)] - before.w_recurrent[(2, 2)], 0.1, epsilon = 1e-15);
        assert_eq!(params.bias, before.bias);

        let mut single = before.clone();
        apply_ri_update(&mut single, &GradientMatrix { g: g.clone() }, &RIConfig::default()).unwrap();
        assert_relative_eq!(single.w_input[1] - before.w_input[1], 0.002, epsilon = 1e-15);

        g[(0, 2)] = f64::NAN;
        assert!(matches!(
            apply_ri_update(&mut params, &GradientMatrix { g }, &cfg),
            Err(Error::NonFiniteGradient { row: 1, col: 2 })
        ));
        assert!(apply_ri_update(&mut params, &GradientMatrix { g: DMatrix::zeros(2, 4) }, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RIConfig::default().validate().is_ok());
        let bad = RIConfig { settle_steps: 10, block_steps: 10, ..RIConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RIConfig { input_multiplicity: 0, ..RIConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_learning_rate_freezes_weights() {
        let params = init_network(6, 0.01, 3).unwrap();
        let cfg = RIConfig { eta: 0.0, block_steps: 2000, settle_steps: 1000, ..RIConfig::default() };
        let mut reservoir = Reservoir::new(params.clone());
        let mut input = InputSource::bernoulli(0.5, stream(3, &[1]));
        let mut rng = stream(3, &[0]);
        for _ in 0..3 {
            let out = run_ri_block(&mut reservoir, &cfg, &mut input, &mut rng).unwrap();
            assert!(out.mi.mi > -1e-9);
        }
        assert_eq!(reservoir.params.w_recurrent, params.w_recurrent);
        assert_eq!(reservoir.params.w_input, params.w_input);
    }
}
