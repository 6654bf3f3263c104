//! Weighted least squares via Householder QR of the row-scaled design
//! `W^(1/2) X`.
//!
//! Columns are triangularised in a fixed order: intercept, then dummy
//! columns in listed order, then regressors. A column whose component
//! orthogonal to the already accepted columns vanishes is linearly
//! dependent on them. Dependent dummies are dropped; a dependent intercept
//! or regressor is an error.

use thiserror::Error;

/// Relative size below which an orthogonalised column counts as dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum WlsError {
    #[error("design has {design} rows but response has {response} and weights {weights}")]
    DimensionMismatch {
        design: usize,
        response: usize,
        weights: usize,
    },
    #[error("weight at row {row} is negative or not finite: {value}")]
    BadWeight { row: usize, value: f64 },
    #[error("non-finite value in {what} at row {row}")]
    NonFinite { what: String, row: usize },
    #[error("{rows} positively weighted rows cannot identify {columns} columns")]
    TooFewRows { rows: usize, columns: usize },
    #[error("rank deficient design: {} collinear with preceding columns", .columns.join(", "))]
    Collinear { columns: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Intercept,
    Regressor,
    /// Fixed-effect indicator; may be dropped when aliased.
    Dummy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind,
            values,
        }
    }

    pub fn intercept(n: usize) -> Self {
        Self::new("(intercept)", ColumnKind::Intercept, vec![1.0; n])
    }

    pub fn regressor(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self::new(name, ColumnKind::Regressor, values)
    }
}

/// Column-major design matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Design {
    pub columns: Vec<Column>,
}

impl Design {
    pub fn new(columns: Vec<Column>) -> Self {
        Self { columns }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    fn row_dot(&self, row: usize, coef: &[f64]) -> f64 {
        self.columns
            .iter()
            .zip(coef)
            .map(|(c, b)| c.values[row] * b)
            .sum()
    }
}

#[derive(Debug, Clone)]
struct Reflector {
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.start..];
        let dot: f64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let s = self.beta * dot;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= s * v;
        }
    }
}

/// Outcome of a weighted least-squares solve.
#[derive(Debug, Clone)]
pub struct WlsFit {
    /// One entry per design column; `None` for dropped dummies.
    pub coefficients: Vec<Option<f64>>,
    /// Indices of dropped dummy columns, ascending.
    pub dropped: Vec<usize>,
    pub rank: usize,
    /// Rows carrying positive weight.
    pub n_obs: usize,
    /// `y - X b` for every input row (zero-weight rows included).
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    kept: Vec<usize>,
    /// Upper-triangular factor, stored by column in `kept` order.
    r: Vec<Vec<f64>>,
}

impl WlsFit {
    pub fn coefficient(&self, column: usize) -> Option<f64> {
        self.coefficients.get(column).copied().flatten()
    }

    /// Column `column` of `(X' W X)^-1` over the retained columns, expanded
    /// to design indexing with zeros at dropped columns.
    pub fn inverse_gram_column(&self, column: usize) -> Option<Vec<f64>> {
        let p = self.kept.iter().position(|&k| k == column)?;
        let n = self.rank;
        // R' u = e_p
        let mut u = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == p { 1.0 } else { 0.0 };
            for (k, uk) in u.iter().enumerate().take(i) {
                s -= self.r[i][k] * uk;
            }
            u[i] = s / self.r[i][i];
        }
        let a = back_substitute(&self.r, &u);
        let mut out = vec![0.0; self.coefficients.len()];
        for (k, &col) in self.kept.iter().enumerate() {
            out[col] = a[k];
        }
        Some(out)
    }
}

fn back_substitute(r: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for (j, xj) in x.iter().enumerate().skip(i + 1) {
            s -= r[j][i] * xj;
        }
        x[i] = s / r[i][i];
    }
    x
}

/// Minimises `Σ w_i (y_i - x_i b)^2` through a Householder QR
/// factorisation; rows with zero weight do not enter the fit.
pub fn solve_weighted_least_squares(
    design: &Design,
    response: &[f64],
    weights: &[f64],
) -> Result<WlsFit, WlsError> {
    let n = design.n_rows();
    if response.len() != n
        || weights.len() != n
        || design.columns.iter().any(|c| c.values.len() != n)
    {
        return Err(WlsError::DimensionMismatch {
            design: n,
            response: response.len(),
            weights: weights.len(),
        });
    }
    for (row, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(WlsError::BadWeight { row, value: w });
        }
    }
    if let Some(row) = response.iter().position(|y| !y.is_finite()) {
        return Err(WlsError::NonFinite {
            what: "response".into(),
            row,
        });
    }
    for c in &design.columns {
        if let Some(row) = c.values.iter().position(|v| !v.is_finite()) {
            return Err(WlsError::NonFinite {
                what: c.name.clone(),
                row,
            });
        }
    }

    let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let m = rows.len();
    if m < design.n_cols() {
        return Err(WlsError::TooFewRows {
            rows: m,
            columns: design.n_cols(),
        });
    }
    let root_w: Vec<f64> = rows.iter().map(|&i| weights[i].sqrt()).collect();
    let scaled = |values: &[f64]| -> Vec<f64> {
        rows.iter()
            .zip(&root_w)
            .map(|(&i, rw)| values[i] * rw)
            .collect()
    };

    let rank_of = |kind: ColumnKind| match kind {
        ColumnKind::Intercept => 0,
        ColumnKind::Dummy => 1,
        ColumnKind::Regressor => 2,
    };
    let mut order: Vec<usize> = (0..design.n_cols()).collect();
    order.sort_by_key(|&j| rank_of(design.columns[j].kind));

    let mut reflectors: Vec<Reflector> = Vec::new();
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut collinear = Vec::new();

    for &j in &order {
        let column = &design.columns[j];
        let mut x = scaled(&column.values);
        let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for h in &reflectors {
            h.apply(&mut x);
        }
        let k = reflectors.len();
        let tail_norm = x[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if scale == 0.0 || tail_norm <= RANK_TOL * scale {
            match column.kind {
                ColumnKind::Dummy => dropped.push(j),
                _ => collinear.push(column.name.clone()),
            }
            continue;
        }
        let alpha = if x[k] >= 0.0 { -tail_norm } else { tail_norm };
        let mut v = x[k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let mut r_col = x[..k].to_vec();
        r_col.push(alpha);
        r.push(r_col);
        reflectors.push(Reflector {
            start: k,
            v,
            beta: 2.0 / vv,
        });
        kept.push(j);
    }
    if !collinear.is_empty() {
        return Err(WlsError::Collinear { columns: collinear });
    }

    let mut qty = scaled(response);
    for h in &reflectors {
        h.apply(&mut qty);
    }
    let rank = kept.len();
    let b = back_substitute(&r, &qty[..rank]);

    let mut coefficients = vec![None; design.n_cols()];
    let mut dense = vec![0.0; design.n_cols()];
    for (k, &j) in kept.iter().enumerate() {
        coefficients[j] = Some(b[k]);
        dense[j] = b[k];
    }
    let fitted: Vec<f64> = (0..n).map(|i| design.row_dot(i, &dense)).collect();
    let residuals = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    dropped.sort_unstable();

    Ok(WlsFit {
        coefficients,
        dropped,
        rank,
        n_obs: m,
        residuals,
        fitted,
        kept,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn slope_only_exact_fit() {
        let d = Design::new(vec![Column::regressor("x", vec![1.0, 2.0])]);
        let fit = solve_weighted_least_squares(&d, &[1.0, 2.0], &unit(2)).unwrap();
        assert!((fit.coefficient(0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn intercept_only_is_mean() {
        let d = Design::new(vec![Column::intercept(4)]);
        let fit = solve_weighted_least_squares(&d, &[3.0; 4], &unit(4)).unwrap();
        assert!((fit.coefficient(0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn simple_regression_matches_closed_form() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 2.2];
        // closed form: slope = Sxy / Sxx, intercept = ybar - slope * xbar
        let xbar = xs.iter().sum::<f64>() / 3.0;
        let ybar = ys.iter().sum::<f64>() / 3.0;
        let sxy: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xbar) * (y - ybar))
            .sum();
        let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = ybar - slope * xbar;
        assert!((slope - 1.1).abs() < 1e-12);
        assert!((intercept + 1.0 / 30.0).abs() < 1e-12);

        let d = Design::new(vec![
            Column::intercept(3),
            Column::regressor("x", xs.to_vec()),
        ]);
        let fit = solve_weighted_least_squares(&d, &ys, &unit(3)).unwrap();
        assert!((fit.coefficient(1).unwrap() - slope).abs() < 1e-10);
        assert!((fit.coefficient(0).unwrap() - intercept).abs() < 1e-10);
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let d = Design::new(vec![
            Column::intercept(4),
            Column::regressor("x", vec![0.0, 1.0, 2.0, 3.0]),
        ]);
        let fit = solve_weighted_least_squares(&d, &[0.0, 1.0, 2.0, 100.0], &[1.0, 1.0, 1.0, 0.0])
            .unwrap();
        assert_eq!(fit.n_obs, 3);
        assert!((fit.coefficient(1).unwrap() - 1.0).abs() < 1e-12);
        assert!((fit.residuals[3] - 97.0).abs() < 1e-10);
    }

    #[test]
    fn aliased_dummy_is_dropped() {
        // two full dummy sets plus intercept: d_b is implied by intercept - d_a
        let d = Design::new(vec![
            Column::intercept(4),
            Column::new("a", ColumnKind::Dummy, vec![1.0, 1.0, 0.0, 0.0]),
            Column::new("b", ColumnKind::Dummy, vec![0.0, 0.0, 1.0, 1.0]),
            Column::regressor("x", vec![0.0, 1.0, 0.0, 1.0]),
        ]);
        let fit = solve_weighted_least_squares(&d, &[0.0, 1.0, 5.0, 6.0], &unit(4)).unwrap();
        assert_eq!(fit.dropped, vec![2]);
        assert_eq!(fit.rank, 3);
        assert!((fit.coefficient(3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_regressor_is_named() {
        let d = Design::new(vec![
            Column::intercept(3),
            Column::regressor("x", vec![1.0, 2.0, 3.0]),
            Column::regressor("twice_x", vec![2.0, 4.0, 6.0]),
        ]);
        let err = solve_weighted_least_squares(&d, &[1.0, 2.0, 3.0], &unit(3)).unwrap_err();
        assert_eq!(
            err,
            WlsError::Collinear {
                columns: vec!["twice_x".into()]
            }
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = Design::new(vec![Column::intercept(2)]);
        assert!(matches!(
            solve_weighted_least_squares(&d, &[1.0], &unit(2)),
            Err(WlsError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            solve_weighted_least_squares(&d, &[1.0, 2.0], &[1.0, -1.0]),
            Err(WlsError::BadWeight { row: 1, .. })
        ));
        let d2 = Design::new(vec![
            Column::intercept(2),
            Column::regressor("x", vec![1.0, 2.0]),
        ]);
        assert!(matches!(
            solve_weighted_least_squares(&d2, &[1.0, 2.0], &[1.0, 0.0]),
            Err(WlsError::TooFewRows {
                rows: 1,
                columns: 2
            })
        ));
    }

    #[test]
    fn inverse_gram_matches_explicit_inverse() {
        let x = vec![0.5, 1.5, -2.0, 3.0, 0.1];
        let w = vec![1.0, 2.0, 0.5, 1.5, 3.0];
        let d = Design::new(vec![
            Column::intercept(5),
            Column::regressor("x", x.clone()),
        ]);
        let fit = solve_weighted_least_squares(&d, &[1.0, 0.0, 2.0, 1.0, 4.0], &w).unwrap();
        let s0: f64 = w.iter().sum();
        let s1: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
        let s2: f64 = w.iter().zip(&x).map(|(w, x)| w * x * x).sum();
        let det = s0 * s2 - s1 * s1;
        let col = fit.inverse_gram_column(1).unwrap();
        assert!((col[1] - s0 / det).abs() < 1e-12);
        assert!((col[0] + s1 / det).abs() < 1e-12);
    }
}
