//! Dense least squares.
//!
//! Fits are computed with a column-pivoted Householder QR. When the design is
//! rank deficient the trailing block is removed by a second orthogonal
//! factorization so that the returned coefficients are the minimum-norm
//! solution. Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest pivot are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Dimension("a matrix needs at least one row".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries supplied for a {rows}x{cols} matrix", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long columns. `rows` is needed for the
    /// zero-column case.
    pub fn from_columns(rows: usize, columns: &[&[f64]]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::Dimension(format!("column of length {} in a matrix with {rows} rows", bad.len())));
        }
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend(columns.iter().map(|c| c[i]));
        }
        Self::from_row_major(rows, cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    /// Returns a copy with `extra` appended as the last column.
    pub fn with_column(&self, extra: &[f64]) -> Result<Self> {
        if extra.len() != self.rows {
            return Err(Error::Dimension(format!(
                "appending a column of length {} to {} rows",
                extra.len(),
                self.rows
            )));
        }
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for (i, &e) in extra.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(e);
        }
        Self::from_row_major(self.rows, cols, data)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Xᵗ v.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Result of an (optionally weighted) least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsFit {
    pub coefficients: Vec<f64>,
    /// `response - design * coefficients`, unweighted.
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub ss: f64,
    pub rank: usize,
}

pub fn sum_squared_residuals(fit: &LsFit) -> f64 {
    fit.ss
}

pub fn sum_of_squares(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

fn check_response(design: &RealMatrix, response: &[f64]) -> Result<()> {
    if design.rows() != response.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows but the response has {} entries",
            design.rows(),
            response.len()
        )));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("response entries must be finite".into()));
    }
    Ok(())
}

fn finish(design: &RealMatrix, response: &[f64], coefficients: Vec<f64>, rank: usize) -> LsFit {
    let fitted = design.mul_vec(&coefficients);
    let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let ss = sum_of_squares(&residuals);
    LsFit { coefficients, residuals, ss, rank }
}

/// Ordinary least squares; minimum-norm coefficients when the design is rank
/// deficient.
pub fn fit_least_squares(design: &RealMatrix, response: &[f64]) -> Result<LsFit> {
    check_response(design, response)?;
    let (coefficients, rank) = solve_min_norm(design.rows(), design.cols(), |i, j| design.get(i, j), response);
    Ok(finish(design, response, coefficients, rank))
}

/// Minimizes Σ wᵢ (yᵢ − xᵢᵗβ)².
pub fn fit_weighted_least_squares(design: &RealMatrix, response: &[f64], weights: &[f64]) -> Result<LsFit> {
    check_response(design, response)?;
    if weights.len() != response.len() {
        return Err(Error::Dimension(format!("{} weights for {} observations", weights.len(), response.len())));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let root: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let scaled: Vec<f64> = response.iter().zip(&root).map(|(y, r)| y * r).collect();
    let (coefficients, rank) = solve_min_norm(design.rows(), design.cols(), |i, j| design.get(i, j) * root[i], &scaled);
    Ok(finish(design, response, coefficients, rank))
}

/// Householder vector for `x`, returned as (v, beta, alpha) with
/// (I − beta v vᵗ) x = alpha e₁.
fn householder(x: &[f64]) -> (Vec<f64>, f64, f64) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![0.0; x.len()], 0.0, 0.0);
    }
    let alpha = if x[0] > 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vtv: f64 = v.iter().map(|a| a * a).sum();
    let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
    (v, beta, alpha)
}

/// Column-major working copy; returns (coefficients, rank).
fn solve_min_norm(m: usize, p: usize, entry: impl Fn(usize, usize) -> f64, rhs: &[f64]) -> (Vec<f64>, usize) {
    if p == 0 {
        return (Vec::new(), 0);
    }
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| (0..m).map(|i| entry(i, j)).collect()).collect();
    let mut b = rhs.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let steps = m.min(p);
    let mut rank = 0;
    let mut largest = 0.0;

    for j in 0..steps {
        // pivot: remaining column with the largest trailing norm
        let (best, best_norm) = (j..p)
            .map(|c| (c, a[c][j..].iter().map(|v| v * v).sum::<f64>().sqrt()))
            .fold((j, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if j == 0 {
            largest = best_norm;
        }
        if best_norm <= RANK_TOLERANCE * largest || best_norm == 0.0 {
            break;
        }
        a.swap(j, best);
        perm.swap(j, best);

        let (v, beta, alpha) = householder(&a[j][j..]);
        a[j][j] = alpha;
        for e in a[j][j + 1..].iter_mut() {
            *e = 0.0;
        }
        for col in a.iter_mut().skip(j + 1) {
            let dot: f64 = v.iter().zip(&col[j..]).map(|(x, y)| x * y).sum();
            let s = beta * dot;
            for (c, vi) in col[j..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[j..]).map(|(x, y)| x * y).sum();
        let s = beta * dot;
        for (c, vi) in b[j..].iter_mut().zip(&v) {
            *c -= s * vi;
        }
        rank += 1;
    }

    let mut z = vec![0.0; p];
    if rank == p {
        for i in (0..p).rev() {
            let mut acc = b[i];
            for k in i + 1..p {
                acc -= a[k][i] * z[k];
            }
            z[i] = acc / a[i][i];
        }
    } else if rank > 0 {
        // Upper-trapezoidal R (rank x p). Factor Rᵗ = Q₂ L so that the
        // minimum-norm solution of R z = c is z = Q₂ L⁻ᵗ c.
        let r = rank;
        // rows of Rᵗ are columns of R; store Rᵗ column-major: column i = row i of R
        let mut t: Vec<Vec<f64>> = (0..r).map(|i| (0..p).map(|k| a[k][i]).collect()).collect();
        let mut reflectors = Vec::with_capacity(r);
        for i in 0..r {
            let (v, beta, alpha) = householder(&t[i][i..]);
            t[i][i] = alpha;
            for e in t[i][i + 1..].iter_mut() {
                *e = 0.0;
            }
            for col in t.iter_mut().skip(i + 1) {
                let dot: f64 = v.iter().zip(&col[i..]).map(|(x, y)| x * y).sum();
                let s = beta * dot;
                for (c, vi) in col[i..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            reflectors.push((v, beta));
        }
        // Lᵗ w = c with L upper triangular (t[col][row]).
        let mut w = vec![0.0; r];
        for i in 0..r {
            let mut acc = b[i];
            for k in 0..i {
                acc -= t[i][k] * w[k];
            }
            w[i] = acc / t[i][i];
        }
        z[..r].copy_from_slice(&w);
        for (i, (v, beta)) in reflectors.iter().enumerate().rev() {
            let dot: f64 = v.iter().zip(&z[i..]).map(|(x, y)| x * y).sum();
            let s = beta * dot;
            for (c, vi) in z[i..].iter_mut().zip(v) {
                *c -= s * vi;
            }
        }
    }

    let mut coefficients = vec![0.0; p];
    for (k, &orig) in perm.iter().enumerate() {
        coefficients[orig] = z[k];
    }
    (coefficients, rank)
}
