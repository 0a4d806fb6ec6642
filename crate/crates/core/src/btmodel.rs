//! Bradley–Terry model: `P(i beats j) = sigmoid(beta_i - beta_j)`, identified by
//! pinning one reference merit to zero.
//!
//! Fitting uses the minorization (Zermelo) update
//! `e^{beta_i} <- d_i / sum_{j != i} k_ij / (e^{beta_i} + e^{beta_j})`
//! on the non-reference items.

use crate::betamodel::{inverse_edge_variance, FitResult};
use crate::error::{Result, WilksError};
use crate::graphdata::{is_strongly_connected, ComparisonData};
use crate::numerics::{log_add_exp, Tolerance};
use crate::params::{Model, NullHypothesis, ParamVector};
use crate::solver::{self, ExpFamily, Layout};

pub use crate::betamodel::BtFitResult;

/// Reference item used when none is given.
pub const DEFAULT_REFERENCE: usize = 0;

struct BtLikelihood<'a> {
    data: &'a ComparisonData,
    out_wins: Vec<u64>,
}

impl ExpFamily for BtLikelihood<'_> {
    fn n(&self) -> usize {
        self.data.n()
    }

    fn suff(&self, i: usize) -> f64 {
        self.out_wins[i] as f64
    }

    fn suff_max(&self, i: usize) -> f64 {
        (0..self.data.n()).filter(|&j| j != i).map(|j| self.data.k(i, j) as f64).sum()
    }

    fn pair_sums(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut s = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in i + 1..n {
                let k = self.data.k(i, j);
                if k == 0 {
                    continue;
                }
                let t = k as f64 / (x[i] + x[j]);
                acc += t;
                s[j] += t;
            }
            s[i] += acc;
        }
        s
    }

    fn hessian_offdiag(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let sum = x[i] + x[j];
        -(self.data.k(i, j) as f64) * x[i] * x[j] / (sum * sum)
    }

    fn shift_invariant(&self) -> bool {
        true
    }
}

fn check_dim(data: &ComparisonData, beta: &ParamVector) -> Result<()> {
    if beta.len() != data.n() {
        return Err(WilksError::DimensionMismatch {
            expected: data.n(),
            found: beta.len(),
        });
    }
    Ok(())
}

/// `sum_i beta_i d_i - sum_{i<j} k_ij log(e^{beta_i} + e^{beta_j})`.
pub fn bt_loglik(data: &ComparisonData, beta: &ParamVector) -> Result<f64> {
    check_dim(data, beta)?;
    Ok(loglik_raw(data, beta.values()))
}

fn loglik_raw(data: &ComparisonData, b: &[f64]) -> f64 {
    let n = b.len();
    let wins = data.out_wins();
    let linear: f64 = b.iter().zip(&wins).map(|(bi, &d)| bi * d as f64).sum();
    let mut partition = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let k = data.k(i, j);
            if k > 0 {
                partition += k as f64 * log_add_exp(b[i], b[j]);
            }
        }
    }
    linear - partition
}

/// Expected win totals `sum_{j != i} k_ij sigmoid(beta_i - beta_j)`.
pub fn bt_expected_wins(data: &ComparisonData, beta: &ParamVector) -> Result<Vec<f64>> {
    check_dim(data, beta)?;
    let b = beta.values();
    let n = b.len();
    let mut e = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let k = data.k(i, j) as f64;
            let p = crate::numerics::sigmoid(b[i] - b[j]);
            e[i] += k * p;
            e[j] += k * (1.0 - p);
        }
    }
    Ok(e)
}

/// Diagonal of the information matrix, and standard errors for every item but the reference.
pub fn bt_fisher_and_se(data: &ComparisonData, beta_hat: &ParamVector) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(data, beta_hat)?;
    let b = beta_hat.values();
    let n = b.len();
    let mut v = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let k = data.k(i, j) as f64;
            let w = k / inverse_edge_variance(b[i] - b[j]);
            v[i] += w;
            v[j] += w;
        }
    }
    let reference = beta_hat.reference().unwrap_or(DEFAULT_REFERENCE);
    let se = v
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != reference)
        .map(|(_, vi)| 1.0 / vi.sqrt())
        .collect();
    Ok((v, se))
}

/// Max and min over pairs `i != j` of `(1 + e^{b_i-b_j})^2 / e^{b_i-b_j}`.
pub fn bt_bn_cn(beta: &ParamVector) -> (f64, f64) {
    let b = beta.values();
    let n = b.len();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let w = inverse_edge_variance(b[i] - b[j]);
            hi = hi.max(w);
            lo = lo.min(w);
        }
    }
    (hi, lo)
}

fn check_design(data: &ComparisonData) -> Result<()> {
    if let Some((i, j)) = data.first_uncompared_pair() {
        return Err(WilksError::SparseDesign(i + 1, j + 1));
    }
    if !is_strongly_connected(data) {
        return Err(WilksError::NotStronglyConnected);
    }
    Ok(())
}

fn run(
    data: &ComparisonData,
    reference: usize,
    h0: Option<&NullHypothesis>,
    tol: &Tolerance,
) -> Result<BtFitResult> {
    if reference >= data.n() {
        return Err(WilksError::DimensionMismatch {
            expected: data.n(),
            found: reference + 1,
        });
    }
    if let Some(h) = h0 {
        h.validate_with_reference(data.n(), reference)?;
    }
    check_design(data)?;
    let model = BtLikelihood {
        data,
        out_wins: data.out_wins(),
    };
    let layout = Layout::new(data.n(), h0, Some(reference));
    let sol = solver::solve(&model, &layout, None, tol)?;
    let beta_hat = ParamVector::with_reference(sol.beta, reference)?;
    let (fisher_diag, se) = bt_fisher_and_se(data, &beta_hat)?;
    let (b_n, c_n) = bt_bn_cn(&beta_hat);
    Ok(FitResult {
        model: Model::Bt,
        loglik: loglik_raw(data, beta_hat.values()),
        beta_hat,
        iterations: sol.iterations,
        converged: true,
        residual_inf: sol.residual_inf,
        se,
        fisher_diag,
        b_n,
        c_n,
        restricted_to: h0.cloned(),
    })
}

/// Unrestricted MLE with the first item as reference.
pub fn bt_fit_mle(data: &ComparisonData, tol: &Tolerance) -> Result<BtFitResult> {
    run(data, DEFAULT_REFERENCE, None, tol)
}

pub fn bt_fit_mle_with_reference(data: &ComparisonData, reference: usize, tol: &Tolerance) -> Result<BtFitResult> {
    run(data, reference, None, tol)
}

/// MLE over the null space. Specified nulls may not name the reference; a
/// homogeneous block containing the reference ties the whole block to zero.
pub fn bt_fit_restricted(data: &ComparisonData, h0: &NullHypothesis, tol: &Tolerance) -> Result<BtFitResult> {
    run(data, DEFAULT_REFERENCE, Some(h0), tol)
}

pub fn bt_fit_restricted_with_reference(
    data: &ComparisonData,
    h0: &NullHypothesis,
    reference: usize,
    tol: &Tolerance,
) -> Result<BtFitResult> {
    run(data, reference, Some(h0), tol)
}
