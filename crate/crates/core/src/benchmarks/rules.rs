//! Boolean rules over lagged input bits and their exact linear-separability
//! classification.

use std::collections::HashSet;
use std::ops::Range;

use num_rational::Ratio;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Q = Ratio<i64>;

/// An `n`-input truth table applied to `(u(t-tau), ..., u(t-tau-n+1))`.
///
/// Row `v` of the table is addressed by reading the lagged bits as an
/// `n`-bit number with the most recent bit most significant; `rule_id` packs
/// the table with row `v` at bit `v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanRule {
    pub arity: usize,
    pub truth_table: Vec<u8>,
    pub rule_id: u32,
    pub separable: bool,
}

fn check_arity(arity: usize) -> Result<()> {
    if arity == 2 || arity == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedArity(arity))
    }
}

impl BooleanRule {
    pub fn from_id(arity: usize, rule_id: u32) -> Result<Self> {
        check_arity(arity)?;
        let rows = 1usize << arity;
        if rule_id >= 1u32 << rows {
            return Err(Error::Config(format!("rule id {rule_id} too large for arity {arity}")));
        }
        let truth_table: Vec<u8> = (0..rows).map(|v| ((rule_id >> v) & 1) as u8).collect();
        if truth_table.iter().all(|&b| b == 0) || truth_table.iter().all(|&b| b == 1) {
            return Err(Error::Config(format!("rule {rule_id} is constant")));
        }
        let separable = is_threshold_table(arity, &truth_table);
        Ok(BooleanRule {
            arity,
            truth_table,
            rule_id,
            separable,
        })
    }

    /// Truth-table row for the lagged bits, most recent first.
    pub fn eval(&self, lagged: &[u8]) -> u8 {
        let v = lagged.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.truth_table[v]
    }

    /// True when the output depends on `u(t - tau)` alone.
    pub fn is_memory_rule(&self) -> bool {
        let msb = 1usize << (self.arity - 1);
        (0..self.truth_table.len()).all(|v| self.truth_table[v] == self.truth_table[v & msb])
    }
}

/// Every non-constant rule of the given arity: `2^(2^n) - 2` of them.
pub fn enumerate_rules(arity: usize) -> Result<Vec<BooleanRule>> {
    check_arity(arity)?;
    let count = 1u32 << (1u32 << arity);
    (1..count - 1).map(|id| BooleanRule::from_id(arity, id)).collect()
}

pub fn is_linearly_separable(rule: &BooleanRule) -> Result<bool> {
    check_arity(rule.arity)?;
    Ok(is_threshold_table(rule.arity, &rule.truth_table))
}

/// `f_tau(t)` for every `t` in `times`.
pub fn rule_target(rule: &BooleanRule, inputs: &[u8], times: Range<usize>, tau: usize) -> Result<Vec<u8>> {
    let lookback = tau + rule.arity - 1;
    if times.start < lookback {
        return Err(Error::InsufficientData(format!(
            "first target time {} needs {lookback} steps of history",
            times.start
        )));
    }
    if times.end > inputs.len() {
        return Err(Error::InsufficientData(format!(
            "target times end at {} but only {} inputs exist",
            times.end,
            inputs.len()
        )));
    }
    let mut lagged = vec![0u8; rule.arity];
    Ok(times
        .map(|t| {
            for (m, bit) in lagged.iter_mut().enumerate() {
                *bit = inputs[t - tau - m];
            }
            rule.eval(&lagged)
        })
        .collect())
}

/// Exact feasibility of `w . v - theta >= 1` on ones and `<= -1` on zeros,
/// decided by Fourier-Motzkin elimination over the rationals.
fn is_threshold_table(arity: usize, truth_table: &[u8]) -> bool {
    let vars = arity + 1; // weights, then threshold
    let mut rows: Vec<(Vec<Q>, Q)> = truth_table
        .iter()
        .enumerate()
        .map(|(v, &out)| {
            let sign = if out == 1 { 1 } else { -1 };
            let mut a: Vec<Q> = (0..arity)
                .map(|m| Q::from_integer(sign * ((v >> (arity - 1 - m)) & 1) as i64))
                .collect();
            a.push(Q::from_integer(-sign));
            (a, Q::from_integer(1))
        })
        .collect();

    for k in (0..vars).rev() {
        let zero = Q::from_integer(0);
        let (mut next, mut pos, mut neg) = (Vec::new(), Vec::new(), Vec::new());
        for row in rows {
            if row.0[k] > zero {
                pos.push(row);
            } else if row.0[k] < zero {
                neg.push(row);
            } else {
                next.push(row);
            }
        }
        for (pa, pb) in &pos {
            for (na, nb) in &neg {
                let (sp, sn) = (-na[k], pa[k]);
                let a: Vec<Q> = pa.iter().zip(na).map(|(x, y)| *x * sp + *y * sn).collect();
                next.push((a, *pb * sp + *nb * sn));
            }
        }
        rows = normalize(next);
        if rows.iter().any(|(a, b)| a.iter().all(|c| *c == zero) && *b > zero) {
            return false;
        }
    }
    rows.iter().all(|(_, b)| *b <= Q::from_integer(0))
}

/// Scales each row so its largest coefficient has magnitude one and drops
/// duplicates.
fn normalize(rows: Vec<(Vec<Q>, Q)>) -> Vec<(Vec<Q>, Q)> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (a, b) in rows {
        let scale = a.iter().map(|c| c.abs()).max().unwrap_or_else(|| Q::from_integer(0));
        let (a, b) = if scale > Q::from_integer(0) {
            (a.iter().map(|c| *c / scale).collect::<Vec<_>>(), b / scale)
        } else {
            (a, b)
        };
        if seen.insert((a.clone(), b)) {
            out.push((a, b));
        }
    }
    out
}
