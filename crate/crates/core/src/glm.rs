//! Logistic (IRLS) and least-squares regression with Wald inference.
//!
//! A [`DesignMatrix`] holds a few dense columns and, optionally, one
//! categorical factor expanded as treatment-coded indicators (first level is
//! the reference). The factor block is never materialised: its part of the
//! normal equations is diagonal, so solves go through the Schur complement of
//! that block and cost `O(N·p² + p³ + L)` for `L` levels.

use std::collections::BTreeMap;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::types::TestOutcome;

pub const SCORE_TOL: f64 = 1e-8;
pub const DEVIANCE_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 100;
pub const SEPARATION_BOUND: f64 = 30.0;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    /// Level index of each row; 0 is the reference level.
    codes: Vec<usize>,
    num_levels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    dense_cols: usize,
    dense: Vec<f64>,
    factor: Option<Factor>,
}

impl DesignMatrix {
    /// Dense design from row-major data.
    pub fn new(rows: usize, cols: usize, dense: Vec<f64>) -> Result<Self> {
        if dense.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "design has {} entries, expected {rows}×{cols}",
                dense.len()
            )));
        }
        if dense.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite design entry".into()));
        }
        Ok(Self {
            rows,
            dense_cols: cols,
            dense,
            factor: None,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("ragged design columns".into()));
        }
        let cols = columns.len();
        let mut dense = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            dense.extend(columns.iter().map(|c| c[r]));
        }
        Self::new(rows, cols, dense)
    }

    /// Append a categorical factor given one label per row. Labels are
    /// sorted; the smallest becomes the dropped reference level.
    pub fn with_factor(mut self, labels: &[usize]) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "factor has {} labels for {} rows",
                labels.len(),
                self.rows
            )));
        }
        let index: BTreeMap<usize, usize> = labels
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(k, v)| (v, k))
            .collect();
        self.factor = Some(Factor {
            codes: labels.iter().map(|l| index[l]).collect(),
            num_levels: index.len(),
        });
        Ok(self)
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn dense_columns(&self) -> usize {
        self.dense_cols
    }

    fn factor_columns(&self) -> usize {
        self.factor.as_ref().map_or(0, |f| f.num_levels.saturating_sub(1))
    }

    pub fn num_columns(&self) -> usize {
        self.dense_cols + self.factor_columns()
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.dense[r * self.dense_cols..(r + 1) * self.dense_cols]
    }

    /// Factor column (0-based within the factor block) of row `r`, if any.
    fn factor_col(&self, r: usize) -> Option<usize> {
        self.factor
            .as_ref()
            .and_then(|f| f.codes[r].checked_sub(1))
    }

    fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        let p = self.dense_cols;
        (0..self.rows)
            .map(|r| {
                let x = self.row(r);
                let mut eta: f64 = x.iter().zip(&beta[..p]).map(|(a, b)| a * b).sum();
                if let Some(c) = self.factor_col(r) {
                    eta += beta[p + c];
                }
                eta
            })
            .collect()
    }

    /// `Xᵀ v`.
    fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        let p = self.dense_cols;
        let mut out = vec![0.0; self.num_columns()];
        for (r, &vr) in v.iter().enumerate() {
            for (o, x) in out[..p].iter_mut().zip(self.row(r)) {
                *o += x * vr;
            }
            if let Some(c) = self.factor_col(r) {
                out[p + c] += vr;
            }
        }
        out
    }

    fn check_rows(&self) -> Result<()> {
        if self.rows < self.num_columns() {
            return Err(Error::RankDeficient {
                rank: self.rows,
                columns: self.num_columns(),
            });
        }
        Ok(())
    }
}

/// `XᵀWX` in block form: dense block `a`, cross block `b` (one dense-length
/// vector per factor column) and the diagonal factor block `d`.
struct Gram {
    p: usize,
    a: Vec<f64>,
    b: Vec<Vec<f64>>,
    d: Vec<f64>,
}

impl Gram {
    fn new(design: &DesignMatrix, weights: &[f64]) -> Self {
        let p = design.dense_cols;
        let l = design.factor_columns();
        let mut a = vec![0.0; p * p];
        let mut b = vec![vec![0.0; p]; l];
        let mut d = vec![0.0; l];
        for (r, &w) in weights.iter().enumerate() {
            let x = design.row(r);
            for i in 0..p {
                let wxi = w * x[i];
                for j in i..p {
                    a[i * p + j] += wxi * x[j];
                }
            }
            if let Some(c) = design.factor_col(r) {
                d[c] += w;
                for (bc, xi) in b[c].iter_mut().zip(x) {
                    *bc += w * xi;
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                a[i * p + j] = a[j * p + i];
            }
        }
        Self { p, a, b, d }
    }

    fn factorize(&self) -> Result<Solver<'_>> {
        let total = self.p + self.d.len();
        let reference = (0..self.p)
            .map(|i| self.a[i * self.p + i])
            .chain(self.d.iter().copied())
            .fold(0.0f64, f64::max);
        if reference <= 0.0 {
            return Err(Error::RankDeficient { rank: 0, columns: total });
        }
        let deficient = self.d.iter().filter(|&&v| v <= PIVOT_TOL * reference).count();
        if deficient > 0 {
            return Err(Error::RankDeficient {
                rank: total - deficient,
                columns: total,
            });
        }
        let mut schur = self.a.clone();
        for (bc, &dc) in self.b.iter().zip(&self.d) {
            for i in 0..self.p {
                for j in 0..self.p {
                    schur[i * self.p + j] -= bc[i] * bc[j] / dc;
                }
            }
        }
        let chol = Cholesky::new(schur, self.p, PIVOT_TOL * reference)
            .map_err(|rank| Error::RankDeficient {
                rank: rank + self.d.len(),
                columns: total,
            })?;
        Ok(Solver { gram: self, chol })
    }
}

struct Solver<'a> {
    gram: &'a Gram,
    chol: Cholesky,
}

impl Solver<'_> {
    /// Solve `(XᵀWX) x = g`.
    fn solve(&self, g: &[f64]) -> Vec<f64> {
        let Gram { p, b, d, .. } = self.gram;
        let (gd, gf) = g.split_at(*p);
        let mut rhs = gd.to_vec();
        for ((bc, &dc), &gc) in b.iter().zip(d).zip(gf) {
            for (r, bi) in rhs.iter_mut().zip(bc) {
                *r -= bi * gc / dc;
            }
        }
        let xd = self.chol.solve(&rhs);
        let mut out = xd.clone();
        for ((bc, &dc), &gc) in b.iter().zip(d).zip(gf) {
            let dot: f64 = bc.iter().zip(&xd).map(|(a, b)| a * b).sum();
            out.push((gc - dot) / dc);
        }
        out
    }

    /// Inverse of the dense-block Schur complement (the dense coefficients'
    /// covariance up to scale) and the diagonal of the full inverse.
    fn inverse_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let p = self.gram.p;
        let mut inv = vec![0.0; p * p];
        for k in 0..p {
            let mut e = vec![0.0; p];
            e[k] = 1.0;
            for (i, v) in self.chol.solve(&e).into_iter().enumerate() {
                inv[i * p + k] = v;
            }
        }
        let mut diag: Vec<f64> = (0..p).map(|i| inv[i * p + i]).collect();
        for (bc, &dc) in self.gram.b.iter().zip(&self.gram.d) {
            let sb: Vec<f64> = (0..p)
                .map(|i| (0..p).map(|j| inv[i * p + j] * bc[j]).sum())
                .collect();
            let quad: f64 = bc.iter().zip(&sb).map(|(a, b)| a * b).sum();
            diag.push(1.0 / dc + quad / (dc * dc));
        }
        (inv, diag)
    }
}

/// Diagonally pivoted Cholesky factorisation `PᵀAP = LLᵀ`.
struct Cholesky {
    p: usize,
    l: Vec<f64>,
    perm: Vec<usize>,
}

impl Cholesky {
    /// Fails with the numerical rank when a pivot falls below `threshold`.
    fn new(mut a: Vec<f64>, p: usize, threshold: f64) -> std::result::Result<Self, usize> {
        let mut perm: Vec<usize> = (0..p).collect();
        for k in 0..p {
            let (piv, best) = (k..p)
                .map(|i| (i, a[i * p + i]))
                .fold((k, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best.is_nan() || best <= threshold {
                return Err(k);
            }
            if piv != k {
                perm.swap(k, piv);
                for j in 0..p {
                    a.swap(k * p + j, piv * p + j);
                }
                for i in 0..p {
                    a.swap(i * p + k, i * p + piv);
                }
            }
            let lkk = a[k * p + k].sqrt();
            a[k * p + k] = lkk;
            for i in k + 1..p {
                a[i * p + k] /= lkk;
            }
            for j in k + 1..p {
                for i in k + 1..p {
                    a[i * p + j] -= a[i * p + k] * a[j * p + k];
                }
            }
        }
        for i in 0..p {
            for j in i + 1..p {
                a[i * p + j] = 0.0;
            }
        }
        Ok(Self { p, l: a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..p {
            let s: f64 = (0..i).map(|j| self.l[i * p + j] * y[j]).sum();
            y[i] = (y[i] - s) / self.l[i * p + i];
        }
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|j| self.l[j * p + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.l[i * p + i];
        }
        let mut x = vec![0.0; p];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub coefficients: Vec<f64>,
    /// Covariance of the dense coefficients, row-major `p × p`.
    pub covariance: Vec<f64>,
    /// Standard errors of every coefficient, factor levels included.
    pub std_errors: Vec<f64>,
    pub dense_columns: usize,
    pub converged: bool,
    pub iterations: usize,
    /// `-2 log L` for logistic fits, residual sum of squares for linear fits.
    pub deviance: f64,
    pub score_norm: f64,
}

impl GlmFit {
    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.dense_columns + j]
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eᵗ)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn check_binary(design: &DesignMatrix, y: &[u8]) -> Result<()> {
    if y.len() != design.num_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} rows",
            y.len(),
            design.num_rows()
        )));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidParameter("binary response must be 0 or 1".into()));
    }
    Ok(())
}

/// Bernoulli log-likelihood at `beta`.
pub fn logistic_log_likelihood(design: &DesignMatrix, y: &[u8], beta: &[f64]) -> Result<f64> {
    check_binary(design, y)?;
    check_beta(design, beta)?;
    Ok(-deviance(&design.linear_predictor(beta), y) / 2.0)
}

/// Analytic gradient of the log-likelihood, `Xᵀ(y − p)`.
pub fn logistic_score(design: &DesignMatrix, y: &[u8], beta: &[f64]) -> Result<Vec<f64>> {
    check_binary(design, y)?;
    check_beta(design, beta)?;
    let resid: Vec<f64> = design
        .linear_predictor(beta)
        .iter()
        .zip(y)
        .map(|(&e, &yi)| f64::from(yi) - sigmoid(e))
        .collect();
    Ok(design.transpose_mul(&resid))
}

fn check_beta(design: &DesignMatrix, beta: &[f64]) -> Result<()> {
    if beta.len() != design.num_columns() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} columns",
            beta.len(),
            design.num_columns()
        )));
    }
    Ok(())
}

fn deviance(eta: &[f64], y: &[u8]) -> f64 {
    2.0 * eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| if yi == 1 { softplus(-e) } else { softplus(e) })
        .sum::<f64>()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximum-likelihood logistic regression by Newton/IRLS with step halving.
/// Converges when the score norm drops to `tol`.
pub fn fit_logistic(design: &DesignMatrix, y: &[u8], tol: f64, max_iter: usize) -> Result<GlmFit> {
    check_binary(design, y)?;
    design.check_rows()?;
    let k = design.num_columns();
    let mut beta = vec![0.0; k];
    let mut eta = design.linear_predictor(&beta);
    let mut dev = deviance(&eta, y);
    let mut iterations = 0;
    loop {
        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let weights: Vec<f64> = mu.iter().map(|m| m * (1.0 - m)).collect();
        let resid: Vec<f64> = y.iter().zip(&mu).map(|(&yi, m)| f64::from(yi) - m).collect();
        let score = design.transpose_mul(&resid);
        let score_norm = norm(&score);
        let gram = Gram::new(design, &weights);
        let solver = gram.factorize()?;
        if score_norm <= tol {
            let (covariance, diag) = solver.inverse_parts();
            return Ok(GlmFit {
                coefficients: beta,
                covariance,
                std_errors: diag.iter().map(|v| v.max(0.0).sqrt()).collect(),
                dense_columns: design.dense_columns(),
                converged: true,
                iterations,
                deviance: dev,
                score_norm,
            });
        }
        if iterations == max_iter {
            return Err(Error::NonConvergence {
                iterations,
                score_norm,
            });
        }
        iterations += 1;
        let delta = solver.solve(&score);
        let mut step = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
            let cand_eta = design.linear_predictor(&cand);
            let cand_dev = deviance(&cand_eta, y);
            if cand_dev <= dev + DEVIANCE_TOL * (1.0 + dev.abs()) || step < 1e-10 {
                if let Some(index) = cand.iter().position(|b| b.abs() > SEPARATION_BOUND) {
                    return Err(Error::Separation {
                        index,
                        bound: SEPARATION_BOUND,
                    });
                }
                beta = cand;
                eta = cand_eta;
                dev = cand_dev;
                break;
            }
            step /= 2.0;
        }
    }
}

/// Ordinary least squares with covariance `σ̂²(XᵀX)⁻¹`, `σ̂² = RSS/(N − p)`.
pub fn fit_linear(design: &DesignMatrix, y: &[f64]) -> Result<GlmFit> {
    if y.len() != design.num_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} rows",
            y.len(),
            design.num_rows()
        )));
    }
    design.check_rows()?;
    let ones = vec![1.0; design.num_rows()];
    let gram = Gram::new(design, &ones);
    let solver = gram.factorize()?;
    let beta = solver.solve(&design.transpose_mul(y));
    let fitted = design.linear_predictor(&beta);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let dof = design.num_rows() - design.num_columns();
    let sigma2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let (inv, diag) = solver.inverse_parts();
    Ok(GlmFit {
        coefficients: beta,
        covariance: inv.iter().map(|v| v * sigma2).collect(),
        std_errors: diag.iter().map(|v| (v * sigma2).max(0.0).sqrt()).collect(),
        dense_columns: design.dense_columns(),
        converged: true,
        iterations: 1,
        deviance: rss,
        score_norm: norm(&design.transpose_mul(&resid)),
    })
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided Wald z-test of one coefficient against zero.
pub fn wald_test(fit: &GlmFit, index: usize, alpha: f64) -> Result<TestOutcome> {
    let len = fit.coefficients.len();
    if index >= len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.iterations,
            score_norm: fit.score_norm,
        });
    }
    let se = fit.std_errors[index];
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::ZeroStandardError(index));
    }
    let beta = fit.coefficients[index];
    let z = beta / se;
    let p = normal_two_sided_p(z);
    Ok(TestOutcome {
        reject: p <= alpha,
        statistic: z,
        p_value: Some(p),
        threshold: None,
        effect_size: beta,
        n_u: 0,
        n_v: 0,
        degenerate: false,
    })
}
