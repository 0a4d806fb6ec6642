//! Likelihood-ratio and Wald tests with chi-square or normalized-normal calibration.

use serde::Serialize;

use crate::betamodel::{self, FitResult};
use crate::btmodel;
use crate::error::{Result, WilksError};
use crate::graphdata::{ComparisonData, UndirectedGraph};
use crate::numerics::{chi_square_sf, normal_sf, tridiag_solve, Tolerance, TridiagonalMatrix};
use crate::params::{Model, NullHypothesis, NullKind};

/// Largest tested-set size for which `Auto` picks the chi-square calibration.
pub const AUTO_CHI2_MAX_R: usize = 30;

/// Slack allowed for a restricted log-likelihood exceeding the full one.
pub const LRT_NEGATIVE_SLACK: f64 = 1e-9;

/// Borrowed observations for either model.
#[derive(Debug, Clone, Copy)]
pub enum Data<'a> {
    Graph(&'a UndirectedGraph),
    Comparisons(&'a ComparisonData),
}

impl Data<'_> {
    pub fn model(&self) -> Model {
        match self {
            Data::Graph(_) => Model::Beta,
            Data::Comparisons(_) => Model::Bt,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Data::Graph(g) => g.n(),
            Data::Comparisons(c) => c.n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegimeChoice {
    Chi2,
    Normal,
    #[default]
    Auto,
}

impl std::str::FromStr for RegimeChoice {
    type Err = WilksError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2" => Ok(RegimeChoice::Chi2),
            "normal" => Ok(RegimeChoice::Normal),
            "auto" => Ok(RegimeChoice::Auto),
            other => Err(WilksError::Domain(format!("unknown regime {other:?} (chi2, normal, auto)"))),
        }
    }
}

/// Calibration actually used for a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ChiSquare { df: u32 },
    /// `(lrt - r) / sqrt(2r)` against the standard normal.
    NormalizedNormal { r: usize },
}

/// Degrees-of-freedom rule for a model and null.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreesOfFreedom {
    Chi2(u32),
    /// Bradley–Terry under a specified null: no chi-square limit exists.
    NoChiSquareApprox,
}

/// Result of one likelihood-ratio test, optionally with the Wald test alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub model: Model,
    pub null: NullHypothesis,
    pub lrt_stat: f64,
    pub regime: Regime,
    /// The raw statistic under chi-square calibration, `z` under the normal one.
    pub z_or_stat: f64,
    pub p_value: f64,
    pub wald_stat: Option<f64>,
    pub wald_p: Option<f64>,
    pub warnings: Vec<String>,
}

impl Serialize for TestResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wald {
            stat: f64,
            p: f64,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            model: Model,
            null: &'a NullHypothesis,
            lrt_stat: f64,
            regime: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            df: Option<u32>,
            #[serde(skip_serializing_if = "Option::is_none")]
            z: Option<f64>,
            p_value: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            wald: Option<Wald>,
            warnings: &'a [String],
        }
        let (regime, df, z) = match self.regime {
            Regime::ChiSquare { df } => ("chi2", Some(df), None),
            Regime::NormalizedNormal { .. } => ("normal", None, Some(self.z_or_stat)),
        };
        Doc {
            model: self.model,
            null: &self.null,
            lrt_stat: self.lrt_stat,
            regime,
            df,
            z,
            p_value: self.p_value,
            wald: self.wald_stat.zip(self.wald_p).map(|(stat, p)| Wald { stat, p }),
            warnings: &self.warnings,
        }
        .serialize(serializer)
    }
}

/// `2 (full - restricted)`, clamped at zero within a small slack.
pub fn lrt_statistic(loglik_full: f64, loglik_restricted: f64) -> Result<f64> {
    if !loglik_full.is_finite() || !loglik_restricted.is_finite() {
        return Err(WilksError::Domain("log-likelihoods must be finite".into()));
    }
    let diff = loglik_full - loglik_restricted;
    if diff < -LRT_NEGATIVE_SLACK {
        return Err(WilksError::NegativeLrt {
            full: loglik_full,
            restricted: loglik_restricted,
        });
    }
    Ok((2.0 * diff).max(0.0))
}

/// Chi-square degrees of freedom for a model and null.
///
/// β-model: `r` for specified nulls, `r - 1` for homogeneous ones.
/// Bradley–Terry: homogeneous blocks of `m` items give `m - 1`, which is the
/// `r - 2` of the usual indexing where the block is `beta_2 = ... = beta_r`;
/// specified nulls have no chi-square limit.
pub fn degrees_of_freedom(model: Model, null: &NullHypothesis) -> Result<DegreesOfFreedom> {
    let r = null.r();
    let df = match (model, null.kind()) {
        (Model::Bt, NullKind::Specified) => return Ok(DegreesOfFreedom::NoChiSquareApprox),
        (Model::Beta, NullKind::Specified) => r,
        (_, NullKind::Homogeneous) => r.saturating_sub(1),
    };
    if df == 0 {
        return Err(WilksError::InvalidNull(format!("null with r = {r} leaves no degrees of freedom")));
    }
    Ok(DegreesOfFreedom::Chi2(df as u32))
}

/// Options for [`run_lrt_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LrtOptions {
    pub regime: RegimeChoice,
    /// Also compute the Wald test (homogeneous nulls only).
    pub wald: bool,
    /// Bradley–Terry reference item.
    pub reference: usize,
}

impl Default for LrtOptions {
    fn default() -> Self {
        LrtOptions {
            regime: RegimeChoice::Auto,
            wald: false,
            reference: btmodel::DEFAULT_REFERENCE,
        }
    }
}

/// The `r` of the normal calibration `(lrt - r) / sqrt(2r)`.
///
/// β-model: the number of tested coordinates. Bradley–Terry: the tested
/// non-reference items plus one, i.e. the `r` of a block written `beta_2 .. beta_r`
/// next to the pinned `beta_1`.
pub fn normal_r(model: Model, null: &NullHypothesis, reference: usize) -> usize {
    match model {
        Model::Beta => null.r(),
        Model::Bt => null.indices().iter().filter(|&&i| i != reference).count() + 1,
    }
}

/// Picks the calibration with the default Bradley–Terry reference.
pub fn select_regime(model: Model, null: &NullHypothesis, choice: RegimeChoice) -> Result<Regime> {
    select_regime_with_reference(model, null, choice, btmodel::DEFAULT_REFERENCE)
}

/// Picks the calibration, failing for the chi-square request that has no limit law.
pub fn select_regime_with_reference(
    model: Model,
    null: &NullHypothesis,
    choice: RegimeChoice,
    reference: usize,
) -> Result<Regime> {
    let df = degrees_of_freedom(model, null)?;
    let normal = Regime::NormalizedNormal {
        r: normal_r(model, null, reference),
    };
    match (choice, df) {
        (RegimeChoice::Chi2, DegreesOfFreedom::NoChiSquareApprox) => Err(WilksError::NoChiSquareApprox),
        (RegimeChoice::Chi2, DegreesOfFreedom::Chi2(df)) => Ok(Regime::ChiSquare { df }),
        (RegimeChoice::Normal, _) => Ok(normal),
        (RegimeChoice::Auto, DegreesOfFreedom::Chi2(df)) if null.r() <= AUTO_CHI2_MAX_R => {
            Ok(Regime::ChiSquare { df })
        }
        (RegimeChoice::Auto, _) => Ok(normal),
    }
}

/// p-value of a likelihood-ratio statistic under a calibration; returns `(z_or_stat, p)`.
pub fn calibrate(lrt_stat: f64, regime: Regime) -> Result<(f64, f64)> {
    match regime {
        Regime::ChiSquare { df } => Ok((lrt_stat, chi_square_sf(lrt_stat, df)?)),
        Regime::NormalizedNormal { r } => {
            let r = r as f64;
            let z = (lrt_stat - r) / (2.0 * r).sqrt();
            Ok((z, normal_sf(z)))
        }
    }
}

/// Full and restricted fits for a dataset.
pub fn fit_pair(data: Data<'_>, null: &NullHypothesis, reference: usize, tol: &Tolerance) -> Result<(FitResult, FitResult)> {
    match data {
        Data::Graph(g) => {
            null.validate(g.n())?;
            Ok((betamodel::fit_mle(g, tol)?, betamodel::fit_restricted(g, null, tol)?))
        }
        Data::Comparisons(c) => {
            null.validate_with_reference(c.n(), reference)?;
            Ok((
                btmodel::bt_fit_mle_with_reference(c, reference, tol)?,
                btmodel::bt_fit_restricted_with_reference(c, null, reference, tol)?,
            ))
        }
    }
}

/// Likelihood-ratio test with the given calibration choice.
pub fn run_lrt(data: Data<'_>, null: &NullHypothesis, regime: RegimeChoice, tol: &Tolerance) -> Result<TestResult> {
    run_lrt_with(
        data,
        null,
        &LrtOptions {
            regime,
            ..LrtOptions::default()
        },
        tol,
    )
}

pub fn run_lrt_with(data: Data<'_>, null: &NullHypothesis, opts: &LrtOptions, tol: &Tolerance) -> Result<TestResult> {
    let model = data.model();
    null.validate(data.n())?;
    let regime = select_regime_with_reference(model, null, opts.regime, opts.reference)?;
    let (full, restricted) = fit_pair(data, null, opts.reference, tol)?;
    test_from_fits(&full, &restricted, null, regime, opts.wald)
}

/// Assembles a [`TestResult`] from already computed fits.
pub fn test_from_fits(
    full: &FitResult,
    restricted: &FitResult,
    null: &NullHypothesis,
    regime: Regime,
    wald: bool,
) -> Result<TestResult> {
    let lrt_stat = lrt_statistic(full.loglik, restricted.loglik)?;
    let (z_or_stat, p_value) = calibrate(lrt_stat, regime)?;
    let mut warnings = Vec::new();
    if let Regime::NormalizedNormal { r } = regime {
        if r < AUTO_CHI2_MAX_R {
            warnings.push(format!("normal calibration with only r = {r} tested parameters"));
        }
    }
    if full.model == Model::Bt
        && null.kind() == NullKind::Homogeneous
        && full.reference().is_some_and(|p| null.indices().contains(&p))
    {
        warnings.push("homogeneous block contains the reference item; block is tied to zero".into());
    }
    let (wald_stat, wald_p) = if wald {
        if null.kind() == NullKind::Homogeneous {
            let (s, p) = wald_from_fit(full, null.indices())?;
            (Some(s), Some(p))
        } else {
            warnings.push("Wald test is only defined for homogeneous nulls; skipped".into());
            (None, None)
        }
    } else {
        (None, None)
    };
    Ok(TestResult {
        model: full.model,
        null: null.clone(),
        lrt_stat,
        regime,
        z_or_stat,
        p_value,
        wald_stat,
        wald_p,
        warnings,
    })
}

/// Wald statistic `nu' Omega^{-1} nu` over consecutive differences of a fitted block.
///
/// `Omega` is the covariance of the differences under the diagonal approximation
/// of the inverse information: `omega_kk = 1/v_k + 1/v_{k+1}`, `omega_{k,k+1} = -1/v_{k+1}`.
pub fn wald_from_fit(fit: &FitResult, block: &[usize]) -> Result<(f64, f64)> {
    let mut block = block.to_vec();
    block.sort_unstable();
    block.dedup();
    if block.len() < 2 {
        return Err(WilksError::InvalidNull("Wald test needs a block of at least two parameters".into()));
    }
    if let Some(&i) = block.iter().find(|&&i| i >= fit.n()) {
        return Err(WilksError::InvalidNull(format!("index {} out of range", i + 1)));
    }
    let b = fit.beta_hat.values();
    let inv_v: Vec<f64> = block.iter().map(|&i| 1.0 / fit.fisher_diag[i]).collect();
    let nu: Vec<f64> = block.windows(2).map(|w| b[w[0]] - b[w[1]]).collect();
    let diag: Vec<f64> = inv_v.windows(2).map(|w| w[0] + w[1]).collect();
    let off: Vec<f64> = inv_v[1..inv_v.len() - 1].iter().map(|x| -x).collect();
    let omega = TridiagonalMatrix::new(diag, off)?;
    let sol = tridiag_solve(&omega, &nu)?;
    let stat = nu.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    let p = chi_square_sf(stat, (block.len() - 1) as u32)?;
    Ok((stat, p))
}

/// Fits the full model and runs the Wald test of equality over `block`.
pub fn wald_test(data: Data<'_>, block: &[usize], tol: &Tolerance) -> Result<(f64, f64)> {
    let fit = match data {
        Data::Graph(g) => betamodel::fit_mle(g, tol)?,
        Data::Comparisons(c) => btmodel::bt_fit_mle(c, tol)?,
    };
    wald_from_fit(&fit, block)
}
