//! Weight snapshots: `w_recurrent.csv`, `w_input.csv`, `bias.csv` and a
//! `manifest.json` carrying the constants, seed, block index and the network
//! state, so a run can be resumed exactly.
//!
//! Floats are written in shortest round-trip form; reading a snapshot back
//! reproduces every weight bit for bit.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::{FiringMode, NetworkParams, NetworkState};

pub const MANIFEST: &str = "manifest.json";
pub const W_RECURRENT: &str = "w_recurrent.csv";
pub const W_INPUT: &str = "w_input.csv";
pub const BIAS: &str = "bias.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub n_neurons: usize,
    pub p_max: f64,
    pub p_bar: Vec<f64>,
    pub p0_bar: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub firing: FiringMode,
    pub seed: u64,
    pub block: usize,
    #[serde(default)]
    pub trial: usize,
    #[serde(default = "one")]
    pub k_multiplicity: u32,
    #[serde(default)]
    pub state: Vec<u8>,
    #[serde(default)]
    pub t: u64,
    #[serde(default)]
    pub skipped_blocks: usize,
}

fn one() -> u32 {
    1
}

/// Where in an experiment a snapshot was taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SnapshotTag {
    pub seed: u64,
    pub block: usize,
    pub trial: usize,
    pub k_multiplicity: u32,
    pub skipped_blocks: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub params: NetworkParams,
    pub state: NetworkState,
    pub manifest: SnapshotManifest,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn matrix_csv(rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::with_capacity(rows * cols * 12);
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&at(i, j).to_string());
        }
        out.push('\n');
    }
    out
}

/// Writes a snapshot directory. Files go to a sibling temporary directory
/// that is renamed into place, so a present `manifest.json` always marks a
/// complete snapshot.
pub fn write_snapshot(dir: &Path, params: &NetworkParams, state: &NetworkState, tag: SnapshotTag) -> Result<()> {
    params.validate()?;
    let n = params.n_neurons();
    let staging = dir.with_extension("partial");
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    write_file(&staging.join(W_RECURRENT), &matrix_csv(n, n, |i, j| params.w_recurrent[(i, j)]))?;
    write_file(&staging.join(W_INPUT), &matrix_csv(n, 1, |i, _| params.w_input[i]))?;
    write_file(&staging.join(BIAS), &matrix_csv(n, 1, |i, _| params.bias[i]))?;
    let manifest = SnapshotManifest {
        n_neurons: n,
        p_max: params.p_max,
        p_bar: params.p_bar.iter().copied().collect(),
        p0_bar: params.p0_bar,
        epsilon: params.epsilon,
        firing: params.firing,
        seed: tag.seed,
        block: tag.block,
        trial: tag.trial,
        k_multiplicity: tag.k_multiplicity,
        state: state.x.clone(),
        t: state.t,
        skipped_blocks: tag.skipped_blocks,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::parse(MANIFEST, e))?;
    write_file(&staging.join(MANIFEST), &json)?;
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::rename(&staging, dir).map_err(|e| Error::io(dir, e))
}

fn read_matrix(path: &Path, field: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != rows {
        return Err(Error::parse(field, format!("expected {rows} rows, found {}", lines.len())));
    }
    let mut m = DMatrix::zeros(rows, cols);
    for (i, line) in lines.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols {
            return Err(Error::parse(field, format!("row {} has {} columns, expected {cols}", i + 1, cells.len())));
        }
        for (j, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|e| Error::parse(field, format!("row {}, column {}: {e}", i + 1, j + 1)))?;
            if !v.is_finite() {
                return Err(Error::parse(field, format!("row {}, column {} is not finite", i + 1, j + 1)));
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

pub fn read_manifest(dir: &Path) -> Result<SnapshotManifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(MANIFEST, e))
}

pub fn read_snapshot(dir: &Path) -> Result<Snapshot> {
    let manifest = read_manifest(dir)?;
    let n = manifest.n_neurons;
    if n == 0 {
        return Err(Error::parse("n_neurons", "must be positive"));
    }
    if manifest.p_bar.len() != n {
        return Err(Error::parse("p_bar", format!("{} entries for {n} neurons", manifest.p_bar.len())));
    }
    let w_recurrent = read_matrix(&dir.join(W_RECURRENT), W_RECURRENT, n, n)?;
    let w_input = read_matrix(&dir.join(W_INPUT), W_INPUT, n, 1)?;
    let bias = read_matrix(&dir.join(BIAS), BIAS, n, 1)?;
    let params = NetworkParams {
        w_recurrent,
        w_input: DVector::from_column_slice(w_input.as_slice()),
        bias: DVector::from_column_slice(bias.as_slice()),
        p_max: manifest.p_max,
        p_bar: DVector::from_vec(manifest.p_bar.clone()),
        p0_bar: manifest.p0_bar,
        epsilon: manifest.epsilon,
        firing: manifest.firing,
    };
    params.validate().map_err(|e| Error::parse("constants", e))?;
    let state = if manifest.state.is_empty() {
        NetworkState::silent(n)
    } else if manifest.state.len() != n {
        return Err(Error::parse("state", format!("{} entries for {n} neurons", manifest.state.len())));
    } else {
        NetworkState::from_bits(manifest.state.clone(), manifest.t).map_err(|e| Error::parse("state", e))?
    };
    Ok(Snapshot { params, state, manifest })
}
