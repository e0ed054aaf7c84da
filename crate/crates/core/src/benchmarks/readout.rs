//! Least-squares linear readouts and the determination coefficient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Variance below which a series is treated as constant.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Linear map from a network state to a scalar output.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutModel {
    pub weights: DVector<f64>,
    pub intercept: f64,
}

impl ReadoutModel {
    pub fn predict(&self, states: &DMatrix<f64>) -> DVector<f64> {
        let mut z = states * &self.weights;
        z.add_scalar_mut(self.intercept);
        z
    }
}

/// Minimum-norm least-squares solver for one state matrix, reused across
/// many targets.
///
/// Columns and targets are centred on their learning-phase means, which
/// is the same as fitting a free intercept.
#[derive(Clone, Debug)]
pub struct ReadoutSolver {
    column_means: DVector<f64>,
    pseudo_inverse: DMatrix<f64>,
}

impl ReadoutSolver {
    pub fn new(states: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = states.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::InsufficientData(format!("state matrix {rows}x{cols}")));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("state matrix has non-finite entries".into()));
        }
        let column_means = DVector::from_fn(cols, |j, _| states.column(j).mean());
        let mut centred = states.clone();
        for j in 0..cols {
            centred.column_mut(j).add_scalar_mut(-column_means[j]);
        }
        // pinv(X) = V diag(1 / lambda) V^T X^T over the nonzero eigenpairs
        // of the Gram matrix X^T X
        let eigen = (centred.transpose() * &centred).symmetric_eigen();
        let largest = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cutoff = largest * rows.max(cols) as f64 * f64::EPSILON;
        let inverse = DVector::from_iterator(
            cols,
            eigen.eigenvalues.iter().map(|&l| if l > cutoff && largest > 0.0 { 1.0 / l } else { 0.0 }),
        );
        let v = &eigen.eigenvectors;
        let pseudo_inverse = v * DMatrix::from_diagonal(&inverse) * v.transpose() * centred.transpose();
        Ok(ReadoutSolver {
            column_means,
            pseudo_inverse,
        })
    }

    pub fn fit(&self, target: &[f64]) -> Result<ReadoutModel> {
        if target.len() != self.pseudo_inverse.ncols() {
            return Err(Error::Shape(format!(
                "target of length {} for {} learning rows",
                target.len(),
                self.pseudo_inverse.ncols()
            )));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("readout target has non-finite entries".into()));
        }
        let mean = target.iter().sum::<f64>() / target.len() as f64;
        let centred = DVector::from_iterator(target.len(), target.iter().map(|v| v - mean));
        let weights = &self.pseudo_inverse * centred;
        let intercept = mean - weights.dot(&self.column_means);
        Ok(ReadoutModel { weights, intercept })
    }
}

/// Least-squares readout for a single target.
pub fn train_readout(states: &DMatrix<f64>, target: &[f64]) -> Result<ReadoutModel> {
    ReadoutSolver::new(states)?.fit(target)
}

/// Squared Pearson correlation, clamped to `[0, 1]`; zero when either
/// series is (numerically) constant.
pub fn determination_coefficient(z: &[f64], y: &[f64]) -> Result<f64> {
    if z.len() != y.len() {
        return Err(Error::Shape(format!("series of lengths {} and {}", z.len(), y.len())));
    }
    if z.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let n = z.len() as f64;
    let mz = z.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut szz, mut syy, mut szy) = (0.0, 0.0, 0.0);
    for (a, b) in z.iter().zip(y) {
        let (da, db) = (a - mz, b - my);
        szz += da * da;
        syy += db * db;
        szy += da * db;
    }
    let (vz, vy) = (szz / n, syy / n);
    if vz < VARIANCE_FLOOR || vy < VARIANCE_FLOOR {
        return Ok(0.0);
    }
    Ok(((szy / n).powi(2) / (vz * vy)).clamp(0.0, 1.0))
}

pub fn is_degenerate(series: &[f64]) -> bool {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n < VARIANCE_FLOOR
}
