//! Seeded replication harness: Type-I error, power, QQ tables, and the
//! quadratic-degree diagnostic.
//!
//! Replicate `i` draws its data from `derive_seed(master_seed, i)`, so reports
//! do not depend on the number of worker threads.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::betamodel::{self, expected_degrees, fisher_diag};
use crate::error::{Result, WilksError};
use crate::graphdata::{simulate_beta_graph, simulate_bt_data, UndirectedGraph};
use crate::inference::{self, fit_pair, select_regime, Data, Regime, RegimeChoice};
use crate::numerics::{chi_square_quantile, ks_distance, mean_var, normal_cdf, normal_quantile, Tolerance};
use crate::params::{Model, NullHypothesis, ParamVector};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "WILKS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    /// Simple null on every parameter.
    H01,
    /// Homogeneity of the first `n/2` parameters.
    H02,
    /// Specified values for a fixed small block.
    H03,
    /// Homogeneity of a fixed block of 10.
    H04,
    /// Linear spread of width `c` over the first `r` parameters.
    Power,
}

impl std::str::FromStr for Schedule {
    type Err = WilksError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h01" => Ok(Schedule::H01),
            "h02" => Ok(Schedule::H02),
            "h03" => Ok(Schedule::H03),
            "h04" => Ok(Schedule::H04),
            "power" => Ok(Schedule::Power),
            other => Err(WilksError::InvalidScenario(format!("unknown schedule {other:?}"))),
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Schedule::H01 => "H01",
            Schedule::H02 => "H02",
            Schedule::H03 => "H03",
            Schedule::H04 => "H04",
            Schedule::Power => "power",
        })
    }
}

/// One simulation design.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub model: Model,
    pub schedule: Schedule,
    pub n: usize,
    /// `L_n = ln_factor * log n`.
    pub ln_factor: f64,
    /// Leading block size; `None` takes the schedule default.
    pub r: Option<usize>,
    /// Spread of the leading block under `Power`.
    pub c: f64,
    /// Comparisons per pair (Bradley–Terry only).
    pub k_common: u64,
    pub reps: usize,
    pub alpha_levels: Vec<f64>,
    pub master_seed: u64,
    /// True values of the tested block under `H03`, aligned with the tested indices; zeros by default.
    pub h03_values: Option<Vec<f64>>,
    pub regime: RegimeChoice,
    pub tol: Tolerance,
}

impl SimScenario {
    pub fn new(model: Model, schedule: Schedule, n: usize) -> Self {
        SimScenario {
            model,
            schedule,
            n,
            ln_factor: 0.0,
            r: None,
            c: 0.0,
            k_common: 1,
            reps: 1000,
            alpha_levels: vec![0.05, 0.1],
            master_seed: 1,
            h03_values: None,
            regime: RegimeChoice::Auto,
            tol: Tolerance::default(),
        }
    }

    /// Leading block size after applying schedule defaults.
    pub fn block_size(&self) -> usize {
        match self.schedule {
            Schedule::H01 => self.n,
            Schedule::H02 => self.r.unwrap_or(self.n / 2),
            Schedule::H03 | Schedule::Power => self.r.unwrap_or(5),
            Schedule::H04 => self.r.unwrap_or(10),
        }
    }

    fn first_tested(&self) -> usize {
        match self.model {
            Model::Beta => 0,
            Model::Bt => 1,
        }
    }

    /// Indices under test: the leading block, minus the reference item for Bradley–Terry.
    pub fn tested_indices(&self) -> Vec<usize> {
        (self.first_tested()..self.block_size()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WilksError::InvalidScenario(m));
        if self.n < 3 {
            return bad(format!("n must be >= 3, got {}", self.n));
        }
        if self.reps == 0 {
            return bad("reps must be >= 1".into());
        }
        if self.alpha_levels.is_empty() || self.alpha_levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return bad("alpha levels must lie in (0, 1)".into());
        }
        if !self.ln_factor.is_finite() || !self.c.is_finite() {
            return bad("ln_factor and c must be finite".into());
        }
        if self.model == Model::Bt && self.k_common == 0 {
            return bad("k must be >= 1".into());
        }
        if self.schedule == Schedule::H01 && self.r.is_some_and(|r| r != self.n) {
            return bad("H01 tests every parameter; r must equal n".into());
        }
        let r = self.block_size();
        if r > self.n {
            return bad(format!("r = {r} exceeds n = {}", self.n));
        }
        let tested = self.tested_indices().len();
        let homogeneous = matches!(self.schedule, Schedule::H02 | Schedule::H04 | Schedule::Power);
        if homogeneous && tested < 2 {
            return bad(format!("homogeneous schedule needs at least 2 tested parameters, got {tested}"));
        }
        if tested < 1 {
            return bad("no parameters under test".into());
        }
        if self.schedule == Schedule::Power && r < 2 {
            return bad("power schedule needs r >= 2".into());
        }
        if let Some(v) = &self.h03_values {
            if self.schedule != Schedule::H03 {
                return bad("h03 values only apply to the H03 schedule".into());
            }
            if v.len() != tested {
                return bad(format!("expected {tested} H03 values, got {}", v.len()));
            }
        }
        self.tol.validate().map_err(|e| WilksError::InvalidScenario(e.to_string()))
    }
}

/// True parameter vector for a scenario.
pub fn build_truth(s: &SimScenario) -> Result<ParamVector> {
    s.validate()?;
    let n = s.n;
    let nf = n as f64;
    let ln = s.ln_factor * nf.ln();
    let linear = |i: usize| i as f64 * ln / (nf - 1.0);
    let r = s.block_size();
    let mut beta: Vec<f64> = (0..n).map(linear).collect();
    match s.schedule {
        Schedule::H01 => {}
        Schedule::H02 | Schedule::H04 => beta[..r].iter_mut().for_each(|b| *b = 0.0),
        Schedule::H03 => {
            beta[..r].iter_mut().for_each(|b| *b = 0.0);
            if let Some(v) = &s.h03_values {
                for (&i, &x) in s.tested_indices().iter().zip(v) {
                    beta[i] = x;
                }
            }
        }
        Schedule::Power => {
            for (i, b) in beta.iter_mut().enumerate() {
                *b = if i < r {
                    i as f64 * s.c / (r - 1) as f64
                } else {
                    0.2 * (i + 1 - r) as f64 * nf.ln() / nf
                };
            }
        }
    }
    match s.model {
        Model::Beta => ParamVector::new(beta),
        Model::Bt => ParamVector::with_reference(beta, 0),
    }
}

/// The null hypothesis a scenario tests, given its truth.
pub fn scenario_null(s: &SimScenario, truth: &ParamVector) -> Result<NullHypothesis> {
    let idx = s.tested_indices();
    match s.schedule {
        Schedule::H01 | Schedule::H03 => {
            let values = idx.iter().map(|&i| truth.values()[i]).collect();
            NullHypothesis::specified(idx, values)
        }
        Schedule::H02 | Schedule::H04 | Schedule::Power => NullHypothesis::homogeneous(idx),
    }
}

/// Splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master_seed`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed.wrapping_add(mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Worker count from `WILKS_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs replicates, in parallel when the `parallel` feature is on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Runner {
    /// Worker cap; `None` uses all available cores.
    pub threads: Option<usize>,
}

impl Runner {
    pub fn new(threads: Option<usize>) -> Self {
        Runner { threads }
    }

    pub fn from_env() -> Self {
        Runner::new(threads_from_env())
    }

    /// Evaluates `f(seed_i, i)` for `i in 0..reps`; output is in replicate order.
    pub fn map_replicates<T, F>(&self, reps: usize, master_seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, usize) -> T + Sync + Send,
    {
        let job = |i: usize| f(derive_seed(master_seed, i as u64), i);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(t) = self.threads {
                builder = builder.num_threads(t);
            }
            match builder.build() {
                Ok(pool) => pool.install(|| (0..reps).into_par_iter().map(job).collect()),
                Err(_) => (0..reps).map(job).collect(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..reps).map(job).collect()
        }
    }

    pub fn type1(&self, s: &SimScenario) -> Result<SimReport> {
        if s.schedule == Schedule::Power {
            return Err(WilksError::InvalidScenario("use the power runner for the power schedule".into()));
        }
        self.simulate(s, false)
    }

    pub fn power(&self, s: &SimScenario) -> Result<SimReport> {
        if s.schedule != Schedule::Power {
            return Err(WilksError::InvalidScenario("power runner needs the power schedule".into()));
        }
        self.simulate(s, true)
    }

    /// Runs any schedule; the Wald test is added for homogeneous nulls when `wald` is set.
    pub fn simulate(&self, s: &SimScenario, wald: bool) -> Result<SimReport> {
        s.validate()?;
        let truth = build_truth(s)?;
        let null = scenario_null(s, &truth)?;
        let regime = select_regime(s.model, &null, s.regime)?;
        let wald = wald && null.kind() == crate::params::NullKind::Homogeneous;
        let outcomes = self.map_replicates(s.reps, s.master_seed, |seed, _| {
            replicate(s, &truth, &null, regime, wald, seed)
        });
        let outcomes: Vec<Outcome> = outcomes.into_iter().collect::<Result<_>>()?;
        let norm_r = inference::normal_r(s.model, &null, 0);
        Ok(SimReport::aggregate(s.clone(), null.r(), norm_r, regime, wald, &outcomes))
    }

    pub fn qq(&self, s: &SimScenario) -> Result<Vec<QqRow>> {
        let report = self.simulate(s, false)?;
        qq_table(&report.normalized_statistics(), report.normal_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Tested { lrt: f64, p: f64, wald_p: Option<f64> },
    Nonexistent,
}

fn replicate(
    s: &SimScenario,
    truth: &ParamVector,
    null: &NullHypothesis,
    regime: Regime,
    wald: bool,
    seed: u64,
) -> Result<Outcome> {
    let graph;
    let comparisons;
    let data = match s.model {
        Model::Beta => {
            graph = simulate_beta_graph(truth, seed)?;
            Data::Graph(&graph)
        }
        Model::Bt => {
            comparisons = simulate_bt_data(truth, s.k_common, seed)?;
            Data::Comparisons(&comparisons)
        }
    };
    let (full, restricted) = match fit_pair(data, null, 0, &s.tol) {
        Ok(pair) => pair,
        Err(e) if e.is_nonexistence() => return Ok(Outcome::Nonexistent),
        Err(e) => return Err(e),
    };
    let lrt = inference::lrt_statistic(full.loglik, restricted.loglik)?;
    let (_, p) = inference::calibrate(lrt, regime)?;
    let wald_p = if wald {
        Some(inference::wald_from_fit(&full, null.indices())?.1)
    } else {
        None
    };
    Ok(Outcome::Tested { lrt, p, wald_p })
}

/// Aggregated replicate results.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scenario: SimScenario,
    pub regime: Regime,
    /// Size of the tested set.
    pub tested: usize,
    /// `r` used to normalize statistics; see [`inference::normal_r`].
    pub normal_r: usize,
    /// `(alpha, rate)` for the likelihood-ratio test.
    pub rejection_rates: Vec<(f64, f64)>,
    /// `(alpha, rate)` for the Wald test, when it was run.
    pub wald_rejection_rates: Option<Vec<(f64, f64)>>,
    pub nonexistent: usize,
    pub nonexistence_rate: f64,
    /// Likelihood-ratio statistics of the replicates with existing MLEs, in replicate order.
    pub statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub wald_p_values: Vec<f64>,
    pub mean_stat: f64,
    pub var_stat: f64,
    /// KS distance of the normalized statistics to N(0, 1), for the normal regime.
    pub ks_distance_normal: Option<f64>,
}

fn rates(p_values: &[f64], alphas: &[f64]) -> Vec<(f64, f64)> {
    alphas
        .iter()
        .map(|&a| {
            let rate = if p_values.is_empty() {
                f64::NAN
            } else {
                p_values.iter().filter(|&&p| p < a).count() as f64 / p_values.len() as f64
            };
            (a, rate)
        })
        .collect()
}

impl SimReport {
    fn aggregate(
        scenario: SimScenario,
        tested: usize,
        normal_r: usize,
        regime: Regime,
        wald: bool,
        outcomes: &[Outcome],
    ) -> Self {
        let mut statistics = Vec::new();
        let mut p_values = Vec::new();
        let mut wald_p_values = Vec::new();
        let mut nonexistent = 0;
        for o in outcomes {
            match *o {
                Outcome::Tested { lrt, p, wald_p } => {
                    statistics.push(lrt);
                    p_values.push(p);
                    wald_p_values.extend(wald_p);
                }
                Outcome::Nonexistent => nonexistent += 1,
            }
        }
        let (mean_stat, var_stat) = mean_var(&statistics);
        let mut report = SimReport {
            rejection_rates: rates(&p_values, &scenario.alpha_levels),
            wald_rejection_rates: wald.then(|| rates(&wald_p_values, &scenario.alpha_levels)),
            nonexistence_rate: nonexistent as f64 / outcomes.len() as f64,
            nonexistent,
            scenario,
            regime,
            tested,
            normal_r,
            statistics,
            p_values,
            wald_p_values,
            mean_stat,
            var_stat,
            ks_distance_normal: None,
        };
        if matches!(regime, Regime::NormalizedNormal { .. }) {
            report.ks_distance_normal = Some(ks_distance(&report.normalized_statistics(), normal_cdf));
        }
        report
    }

    pub fn reps_effective(&self) -> usize {
        self.statistics.len()
    }

    /// `(lrt - r) / sqrt(2r)` with `r = normal_r`.
    pub fn normalized_statistics(&self) -> Vec<f64> {
        let r = self.normal_r as f64;
        self.statistics.iter().map(|x| (x - r) / (2.0 * r).sqrt()).collect()
    }

    pub fn rate_at(&self, alpha: f64) -> Option<f64> {
        self.rejection_rates.iter().find(|(a, _)| *a == alpha).map(|&(_, r)| r)
    }

    pub fn wald_rate_at(&self, alpha: f64) -> Option<f64> {
        self.wald_rejection_rates
            .as_ref()?
            .iter()
            .find(|(a, _)| *a == alpha)
            .map(|&(_, r)| r)
    }

    /// One CSV row per alpha level.
    pub fn to_csv(&self) -> String {
        let s = &self.scenario;
        let mut out = String::from("model,schedule,n,ln_factor,r,c,k,reps,seed,regime,alpha,rate,wald_rate,nonexistence\n");
        let regime = match self.regime {
            Regime::ChiSquare { df } => format!("chi2({df})"),
            Regime::NormalizedNormal { r } => format!("normal({r})"),
        };
        for (k, &(alpha, rate)) in self.rejection_rates.iter().enumerate() {
            let wald = self
                .wald_rejection_rates
                .as_ref()
                .map(|w| w[k].1.to_string())
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.model,
                s.schedule,
                s.n,
                s.ln_factor,
                s.block_size(),
                s.c,
                s.k_common,
                s.reps,
                s.master_seed,
                regime,
                alpha,
                rate,
                wald,
                self.nonexistence_rate
            );
        }
        out
    }
}

/// One QQ point: a sorted normalized statistic and its two theoretical quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqRow {
    pub empirical: f64,
    pub normal_q: f64,
    /// Normalized chi-square quantile `(q_r - r) / sqrt(2r)`.
    pub chi2_q: f64,
}

/// Pairs sorted normalized statistics with normal and normalized chi-square
/// quantiles at plotting positions `(i - 0.5) / m`.
pub fn qq_table(normalized: &[f64], r: usize) -> Result<Vec<QqRow>> {
    if r == 0 {
        return Err(WilksError::Domain("r must be >= 1".into()));
    }
    let mut sorted = normalized.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let rf = r as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, empirical)| {
            let p = (i as f64 + 0.5) / m;
            Ok(QqRow {
                empirical,
                normal_q: normal_quantile(p)?,
                chi2_q: (chi_square_quantile(p, r as u32)? - rf) / (2.0 * rf).sqrt(),
            })
        })
        .collect()
}

pub fn qq_csv(rows: &[QqRow]) -> String {
    let mut out = String::from("empirical,normal_q,chi2_q\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.empirical, row.normal_q, row.chi2_q);
    }
    out
}

pub fn run_type1(s: &SimScenario) -> Result<SimReport> {
    Runner::from_env().type1(s)
}

pub fn run_power(s: &SimScenario) -> Result<SimReport> {
    Runner::from_env().power(s)
}

pub fn qq_export(s: &SimScenario) -> Result<Vec<QqRow>> {
    Runner::from_env().qq(s)
}

/// `sum_{i < r} (d_i - E d_i)^2 / v_ii` at the true parameters.
pub fn quadratic_degree_stat(g: &UndirectedGraph, beta_true: &ParamVector, r: usize) -> Result<f64> {
    if beta_true.len() != g.n() {
        return Err(WilksError::DimensionMismatch {
            expected: g.n(),
            found: beta_true.len(),
        });
    }
    if r > g.n() {
        return Err(WilksError::Domain(format!("r = {r} exceeds n = {}", g.n())));
    }
    let expected = expected_degrees(beta_true);
    let var = fisher_diag(beta_true);
    Ok((0..r)
        .map(|i| {
            let dev = g.degrees()[i] as f64 - expected[i];
            dev * dev / var[i]
        })
        .sum())
}

/// Replicated quadratic-degree statistics for graphs drawn at `beta_true`.
pub fn quadratic_degree_samples(
    runner: &Runner,
    beta_true: &ParamVector,
    r: usize,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    runner
        .map_replicates(reps, master_seed, |seed, _| {
            let g = simulate_beta_graph(beta_true, seed)?;
            quadratic_degree_stat(&g, beta_true, r)
        })
        .into_iter()
        .collect()
}

/// Sup-norm estimation errors of the unrestricted β-model MLE; `None` where it does not exist.
pub fn beta_estimation_errors(
    runner: &Runner,
    beta_true: &ParamVector,
    reps: usize,
    master_seed: u64,
    tol: &Tolerance,
) -> Result<Vec<Option<f64>>> {
    runner
        .map_replicates(reps, master_seed, |seed, _| {
            let g = simulate_beta_graph(beta_true, seed)?;
            match betamodel::fit_mle(&g, tol) {
                Ok(fit) => Ok(Some(
                    fit.beta_hat
                        .values()
                        .iter()
                        .zip(beta_true.values())
                        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
                )),
                Err(e) if e.is_nonexistence() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .into_iter()
        .collect()
}
