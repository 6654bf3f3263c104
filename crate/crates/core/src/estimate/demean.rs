//! Weighted within transformation by alternating projections.

use thiserror::Error;

/// Sweeps stop once no value moves by this much.
pub const CONVERGENCE_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum DemeanError {
    #[error("values, weights and group ids must have equal length")]
    LengthMismatch,
    #[error("demeaning did not converge after {sweeps} sweeps (last max change {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },
}

/// Removes weighted group means for every grouping in turn until the
/// largest change in a sweep falls below [`CONVERGENCE_TOL`]. The result
/// is orthogonal, under the weighted inner product, to every group
/// indicator. Group ids are dense indices.
pub fn demean(
    values: &[f64],
    groups: &[&[usize]],
    weights: &[f64],
) -> Result<Vec<f64>, DemeanError> {
    let n = values.len();
    if weights.len() != n || groups.iter().any(|g| g.len() != n) {
        return Err(DemeanError::LengthMismatch);
    }
    let mut out = values.to_vec();
    if groups.is_empty() {
        return Ok(out);
    }

    let sizes: Vec<usize> = groups
        .iter()
        .map(|g| g.iter().max().map_or(0, |m| m + 1))
        .collect();
    let mut weight_sums: Vec<Vec<f64>> = Vec::with_capacity(groups.len());
    for (ids, &size) in groups.iter().zip(&sizes) {
        let mut sums = vec![0.0; size];
        for (&g, &w) in ids.iter().zip(weights) {
            sums[g] += w;
        }
        weight_sums.push(sums);
    }

    let mut change = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        change = 0.0;
        for ((ids, &size), wsum) in groups.iter().zip(&sizes).zip(&weight_sums) {
            let mut acc = vec![0.0; size];
            for ((&g, &w), &v) in ids.iter().zip(weights).zip(&out) {
                acc[g] += w * v;
            }
            for (a, &s) in acc.iter_mut().zip(wsum) {
                *a = if s > 0.0 { *a / s } else { 0.0 };
            }
            for (v, &g) in out.iter_mut().zip(ids.iter()) {
                *v -= acc[g];
                change = f64::max(change, acc[g].abs());
            }
        }
        if change < CONVERGENCE_TOL {
            return Ok(out);
        }
    }
    Err(DemeanError::NotConverged {
        sweeps: MAX_SWEEPS,
        residual: change,
    })
}

/// Country and year within transformation.
pub fn demean_two_way(
    values: &[f64],
    country_ids: &[usize],
    year_ids: &[usize],
    weights: &[f64],
) -> Result<Vec<f64>, DemeanError> {
    demean(values, &[country_ids, year_ids], weights)
}
