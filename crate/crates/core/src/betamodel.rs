//! The β-model for undirected graphs: `P({i,j} is an edge) = sigmoid(beta_i + beta_j)`.
//!
//! The degree sequence is sufficient. The MLE is computed with the fixed-point map
//! `beta_i <- log d_i - log sum_{j != i} e^{beta_j} / (1 + e^{beta_i + beta_j})`
//! started from the sparse-graph guess `log d_i - log(sum d) / 2`, falling back to
//! damped Newton when the map stalls.

use serde::Serialize;

use crate::error::{Result, WilksError};
use crate::graphdata::UndirectedGraph;
use crate::numerics::{log1p_exp, Tolerance};
use crate::params::{Model, NullHypothesis, ParamVector};
use crate::solver::{self, ExpFamily, Layout};

/// Outcome of an unrestricted or restricted maximum-likelihood fit.
///
/// Shared by both models; a Bradley–Terry fit carries its reference index in
/// `beta_hat.reference()` and omits that index from `se`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: Model,
    pub beta_hat: ParamVector,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the likelihood-equation residuals over the free coordinates.
    pub residual_inf: f64,
    /// Diagonal-approximation standard errors `1/sqrt(v_ii)`.
    pub se: Vec<f64>,
    /// Diagonal of the Fisher information at `beta_hat`.
    pub fisher_diag: Vec<f64>,
    pub b_n: f64,
    pub c_n: f64,
    pub restricted_to: Option<NullHypothesis>,
}

/// Alias kept for symmetry with the Bradley–Terry entry points.
pub type BtFitResult = FitResult;

impl FitResult {
    pub fn n(&self) -> usize {
        self.beta_hat.len()
    }

    pub fn reference(&self) -> Option<usize> {
        self.beta_hat.reference()
    }
}

impl Serialize for FitResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            model: Model,
            n: usize,
            beta: &'a [f64],
            se: &'a [f64],
            loglik: f64,
            iterations: usize,
            converged: bool,
            residual_inf: f64,
            b_n: f64,
            c_n: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            null: Option<&'a NullHypothesis>,
            #[serde(skip_serializing_if = "Option::is_none")]
            reference: Option<usize>,
        }
        Doc {
            model: self.model,
            n: self.n(),
            beta: self.beta_hat.values(),
            se: &self.se,
            loglik: self.loglik,
            iterations: self.iterations,
            converged: self.converged,
            residual_inf: self.residual_inf,
            b_n: self.b_n,
            c_n: self.c_n,
            null: self.restricted_to.as_ref(),
            reference: self.reference().map(|r| r + 1),
        }
        .serialize(serializer)
    }
}

struct BetaLikelihood<'a> {
    g: &'a UndirectedGraph,
}

impl ExpFamily for BetaLikelihood<'_> {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn suff(&self, i: usize) -> f64 {
        self.g.degrees()[i] as f64
    }

    fn suff_max(&self, _i: usize) -> f64 {
        (self.g.n() - 1) as f64
    }

    // sparse-graph approximation d_i ~ e^{beta_i} sum_j e^{beta_j}
    fn initial_guess(&self) -> Option<Vec<f64>> {
        let total: f64 = self.g.degrees().iter().sum::<usize>() as f64;
        if total <= 0.0 {
            return None;
        }
        let half = 0.5 * total.ln();
        Some(self.g.degrees().iter().map(|&d| (d as f64).max(0.5).ln() - half).collect())
    }

    fn pair_sums(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut s = vec![0.0; n];
        for i in 0..n {
            let xi = x[i];
            let mut acc = 0.0;
            for j in i + 1..n {
                let t = 1.0 / (1.0 + xi * x[j]);
                acc += x[j] * t;
                s[j] += xi * t;
            }
            s[i] += acc;
        }
        s
    }

    fn hessian_offdiag(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let p = x[i] * x[j];
        p / ((1.0 + p) * (1.0 + p))
    }
}

fn check_dim(g: &UndirectedGraph, beta: &ParamVector) -> Result<()> {
    if beta.len() != g.n() {
        return Err(WilksError::DimensionMismatch {
            expected: g.n(),
            found: beta.len(),
        });
    }
    Ok(())
}

/// `sum_i beta_i d_i - sum_{i<j} log(1 + e^{beta_i + beta_j})`.
pub fn beta_loglik(g: &UndirectedGraph, beta: &ParamVector) -> Result<f64> {
    check_dim(g, beta)?;
    Ok(loglik_raw(g, beta.values()))
}

fn loglik_raw(g: &UndirectedGraph, b: &[f64]) -> f64 {
    let n = b.len();
    let linear: f64 = b.iter().zip(g.degrees()).map(|(bi, &d)| bi * d as f64).sum();
    let mut partition = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            partition += log1p_exp(b[i] + b[j]);
        }
    }
    linear - partition
}

/// Variance of edge `{i, j}`: `e^{x} / (1 + e^{x})^2` with `x = beta_i + beta_j`.
#[inline]
fn edge_variance(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Dense Fisher information: `v_ij = e^{b_i+b_j}/(1+e^{b_i+b_j})^2`, `v_ii = sum_{j != i} v_ij`.
pub fn fisher_info(beta: &ParamVector) -> Vec<Vec<f64>> {
    let b = beta.values();
    let n = b.len();
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = edge_variance(b[i] + b[j]);
            v[i][j] = w;
            v[j][i] = w;
        }
    }
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w).sum();
    }
    v
}

/// Diagonal of the Fisher information (variances of the degrees).
pub fn fisher_diag(beta: &ParamVector) -> Vec<f64> {
    let b = beta.values();
    let n = b.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = edge_variance(b[i] + b[j]);
            d[i] += w;
            d[j] += w;
        }
    }
    d
}

/// Expected degrees `E d_i = sum_{j != i} sigmoid(beta_i + beta_j)`.
pub fn expected_degrees(beta: &ParamVector) -> Vec<f64> {
    let b = beta.values();
    let n = b.len();
    let mut e = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = crate::numerics::sigmoid(b[i] + b[j]);
            e[i] += p;
            e[j] += p;
        }
    }
    e
}

/// `(1 + e^x)^2 / e^x = 2 + 2 cosh x`.
#[inline]
pub(crate) fn inverse_edge_variance(x: f64) -> f64 {
    2.0 + 2.0 * x.cosh()
}

/// Max and min over pairs `i != j` of `(1 + e^{b_i+b_j})^2 / e^{b_i+b_j}`.
pub fn bn_cn(beta: &ParamVector) -> (f64, f64) {
    let b = beta.values();
    let n = b.len();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let w = inverse_edge_variance(b[i] + b[j]);
            hi = hi.max(w);
            lo = lo.min(w);
        }
    }
    (hi, lo)
}

/// `se_i = 1/sqrt(v_ii)`.
pub fn standard_errors(beta_hat: &ParamVector) -> Vec<f64> {
    fisher_diag(beta_hat).into_iter().map(|v| 1.0 / v.sqrt()).collect()
}

fn finish(
    g: &UndirectedGraph,
    sol: solver::Solution,
    restricted_to: Option<NullHypothesis>,
) -> Result<FitResult> {
    let beta_hat = ParamVector::new(sol.beta)?;
    let fisher_diag = fisher_diag(&beta_hat);
    let se = fisher_diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let (b_n, c_n) = bn_cn(&beta_hat);
    Ok(FitResult {
        model: Model::Beta,
        loglik: loglik_raw(g, beta_hat.values()),
        beta_hat,
        iterations: sol.iterations,
        converged: true,
        residual_inf: sol.residual_inf,
        se,
        fisher_diag,
        b_n,
        c_n,
        restricted_to,
    })
}

/// Whether a degree sequence lies in the interior of the polytope of degree
/// sequences, which is exactly when the unrestricted MLE exists.
///
/// Checks `sum of s largest - sum of t smallest < s (n - 1 - t)` for all
/// `s + t <= n`, the tightest form of every facet inequality.
pub fn degrees_admit_mle(degrees: &[usize]) -> bool {
    let n = degrees.len();
    let mut d: Vec<i64> = degrees.iter().map(|&x| x as i64).collect();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let mut top = vec![0i64; n + 1];
    let mut bottom = vec![0i64; n + 1];
    for k in 0..n {
        top[k + 1] = top[k] + d[k];
        bottom[k + 1] = bottom[k] + d[n - 1 - k];
    }
    let n = n as i64;
    for s in 0..=n {
        for t in 0..=n - s {
            if (s, t) != (0, 0) && top[s as usize] - bottom[t as usize] >= s * (n - 1 - t) {
                return false;
            }
        }
    }
    true
}

fn check_existence(g: &UndirectedGraph) -> Result<()> {
    if degrees_admit_mle(g.degrees()) {
        Ok(())
    } else {
        Err(WilksError::MleNonexistent(
            "degree sequence lies on the boundary of the degree polytope".into(),
        ))
    }
}

/// Unrestricted MLE.
pub fn fit_mle(g: &UndirectedGraph, tol: &Tolerance) -> Result<FitResult> {
    check_existence(g)?;
    let layout = Layout::new(g.n(), None, None);
    let sol = solver::solve(&BetaLikelihood { g }, &layout, None, tol)?;
    finish(g, sol, None)
}

/// Unrestricted MLE from a caller-chosen starting point.
pub fn fit_mle_from(g: &UndirectedGraph, start: &ParamVector, tol: &Tolerance) -> Result<FitResult> {
    check_dim(g, start)?;
    check_existence(g)?;
    let layout = Layout::new(g.n(), None, None);
    let sol = solver::solve(&BetaLikelihood { g }, &layout, Some(start.values()), tol)?;
    finish(g, sol, None)
}

/// MLE over the null parameter space.
///
/// Specified nulls freeze the tested coordinates; homogeneous nulls solve for
/// one shared value over the tied block together with the untied equations.
pub fn fit_restricted(g: &UndirectedGraph, h0: &NullHypothesis, tol: &Tolerance) -> Result<FitResult> {
    h0.validate(g.n())?;
    let layout = Layout::new(g.n(), Some(h0), None);
    let sol = solver::solve(&BetaLikelihood { g }, &layout, None, tol)?;
    finish(g, sol, Some(h0.clone()))
}
