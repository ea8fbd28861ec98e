//! Closed-form bounds on propagation times and related graph quantities.
//!
//! Natural logarithms throughout, except the hypercube isoperimetric
//! inequality, which is base 2. Bounds that hold only up to an additive
//! `O(log n)` or a `(1 + o(1))` factor carry `asymptotic = true` and must not
//! be used as hard numeric limits.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    /// Condition under which the bound holds.
    pub applicability: String,
    /// False when the given inputs fall outside `applicability`.
    pub applicable: bool,
    /// Lower-order terms were dropped from `value`.
    pub asymptotic: bool,
}

impl BoundReport {
    fn exact(name: &str, value: f64, applicability: &str) -> Self {
        BoundReport {
            name: name.to_string(),
            value,
            applicability: applicability.to_string(),
            applicable: true,
            asymptotic: false,
        }
    }
}

/// Grid `m × n`: some corner is at distance at least `(m + n - 2) / 2` from
/// any start, so that is a hard lower bound; the upper bound `4(m + n)` is
/// the leading term only.
pub fn grid_bounds(m: usize, n: usize) -> Result<(BoundReport, BoundReport)> {
    if m == 0 || n == 0 {
        return Err(Error::Config("grid dimensions must be positive".into()));
    }
    let sum = (m + n) as f64;
    let lower = BoundReport::exact("grid_lower", (sum - 2.0) / 2.0, "m, n >= 1");
    let upper = BoundReport {
        asymptotic: true,
        ..BoundReport::exact("grid_upper", 4.0 * sum, "m, n >= 1; (4 + o(1))(m + n), o(1) dropped")
    };
    Ok((lower, upper))
}

/// Leading term `60 log((d + 1) / 3) / (d + 1) * n` of the `d`-regular upper
/// bound; the additive `O(log n)` is not quantified. Flagged inapplicable
/// when `log((d + 1) / 3) <= 1`, where the leading term is vacuous or
/// dominated by the unquantified term.
pub fn regular_upper_bound(n: usize, d: usize) -> Result<BoundReport> {
    if d < 2 || n < d + 1 {
        return Err(Error::Config(format!("regular bound needs d >= 2 and n >= d + 1 (got n = {n}, d = {d})")));
    }
    let ratio = (d + 1) as f64 / 3.0;
    Ok(BoundReport {
        name: "regular_upper".into(),
        value: 60.0 * ratio.ln() / (d + 1) as f64 * n as f64,
        applicability: "d >= 2, n >= d + 1, log((d + 1) / 3) > 1; plus O(log n)".into(),
        applicable: ratio.ln() > 1.0,
        asymptotic: true,
    })
}

/// Any connected `d`-regular graph on `n` vertices has diameter at most
/// `3n / (d + 1)`.
pub fn diameter_bound(n: usize, d: usize) -> Result<BoundReport> {
    if d < 1 {
        return Err(Error::Config("diameter bound needs d >= 1".into()));
    }
    Ok(BoundReport::exact("diameter_upper", 3.0 * n as f64 / (d + 1) as f64, "connected d-regular graph, d >= 1"))
}

/// Two doubling phases of at most `131 n (1 + log n)` steps each, plus
/// `e / (e - 1)` for the last white vertex.
pub fn hypercube_upper_bound(dim: u32) -> Result<BoundReport> {
    if dim < 1 {
        return Err(Error::Config("hypercube dimension must be at least 1".into()));
    }
    let n = dim as f64;
    Ok(BoundReport::exact(
        "hypercube_upper",
        2.0 * 131.0 * n * (1.0 + n.ln()) + E / (E - 1.0),
        "hypercube Q_n, single-vertex start",
    ))
}

/// Expected steps spent at dyadic level `k` of either doubling phase on
/// `Q_dim`: at most `131 dim / (dim - k - 1)`, for `k < dim - 1`.
pub fn hypercube_level_bound(dim: u32, k: usize) -> Result<BoundReport> {
    let n = dim as usize;
    if k + 1 >= n {
        return Err(Error::Config(format!("level {k} out of range for dimension {dim}")));
    }
    Ok(BoundReport::exact("hypercube_level", 131.0 * n as f64 / (n - k - 1) as f64, "hypercube Q_n, 0 <= k < n - 1"))
}

/// Star with its center blue: `P(not all leaves blue after t steps)` is at
/// most `0.97^t` once `t > 12 log(leaves + 1)`.
pub fn star_tail_bound(leaves: usize, t: u64) -> BoundReport {
    let threshold = 12.0 * ((leaves + 1) as f64).ln();
    BoundReport {
        name: "star_tail".into(),
        value: 0.97f64.powf(t as f64),
        applicability: format!("t > 12 log(leaves + 1) = {threshold:.4}"),
        applicable: t as f64 > threshold,
        asymptotic: false,
    }
}

/// Edges leaving a set of `set_size` vertices in `Q_dim` number at least
/// `set_size * (dim - log2 set_size)`.
pub fn isoperimetric_lower(dim: u32, set_size: usize) -> Result<f64> {
    if set_size == 0 || (dim < usize::BITS && set_size > 1usize << dim) {
        return Err(Error::Config(format!("set size {set_size} outside [1, 2^{dim}]")));
    }
    let s = set_size as f64;
    Ok(s * (dim as f64 - s.log2()))
}
