//! Semi-parametric tail index estimators on block maxima.
//!
//! * [`h2`]: Hill's statistic over the `k0` largest of `k` block maxima.
//! * [`cursory`]: two-order-statistic log ratio, used as a plug-in surrogate.
//! * [`hill_classic`]: the `m = 1` specialization on raw data.
//! * [`select_k0`], [`a_tilde`], [`bias_correct`]: AMSE-guided tail fraction
//!   and second-order bias removal.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::blocks::{block_maxima, BlockMaximaSample, RawSample};
use crate::distributions::{SecondOrderForm, TailTruth};
use crate::error::{EvtError, Result};

/// Estimator identity, also used as the CSV label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "h2")]
    H2,
    #[serde(rename = "rbh2r")]
    Rbh2r,
    #[serde(rename = "rbh2")]
    Rbh2,
    #[serde(rename = "cursory")]
    Cursory,
    #[serde(rename = "hill")]
    Hill,
    #[serde(rename = "gev-mle")]
    GevMle,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::H2,
        Estimator::Rbh2r,
        Estimator::Rbh2,
        Estimator::Cursory,
        Estimator::Hill,
        Estimator::GevMle,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::H2 => "h2",
            Estimator::Rbh2r => "rbh2r",
            Estimator::Rbh2 => "rbh2",
            Estimator::Cursory => "cursory",
            Estimator::Hill => "hill",
            Estimator::GevMle => "gev-mle",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.label() == label)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A tail index estimate and the tuning that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub gamma_hat: f64,
    pub estimator: Estimator,
    /// Number of upper order statistics used; 0 for cursory and `k` for GEV-MLE.
    pub k0: usize,
    /// Intermediate sequence value of the cursory estimator, 0 otherwise.
    pub theta: usize,
    /// Subtracted second-order bias; 0 unless reduced-bias.
    pub correction: f64,
    pub m: usize,
    pub k: usize,
}

/// Second-order behaviour assumed by the bias correction and the k0 rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderSpec {
    pub rho_tilde: f64,
    pub form: SecondOrderForm,
    /// When set, `bias_correct` replaces `rho_tilde` by `-gamma_surrogate`
    /// (the GEV/GPD convention, where the second-order parameter equals `-gamma`).
    pub rho_tracks_gamma: bool,
}

impl SecondOrderSpec {
    pub fn shift() -> Self {
        Self {
            rho_tilde: -1.0,
            form: SecondOrderForm::Shift,
            rho_tracks_gamma: false,
        }
    }

    /// Power-law rate `c * (t/m)^rho_tilde`; `c = None` uses the surrogate gamma.
    pub fn power(rho_tilde: f64, c: Option<f64>) -> Result<Self> {
        if !(-1.0..0.0).contains(&rho_tilde) {
            return Err(EvtError::Parameter(format!(
                "rho_tilde must lie in [-1, 0), got {rho_tilde}"
            )));
        }
        Ok(Self {
            rho_tilde,
            form: SecondOrderForm::Power { c },
            rho_tracks_gamma: false,
        })
    }

    /// Power form with `rho_tilde = -gamma` and `c = gamma`, both plugged in
    /// from the surrogate estimate at correction time.
    pub fn gev_gpd() -> Self {
        Self {
            rho_tilde: -1.0,
            form: SecondOrderForm::Power { c: None },
            rho_tracks_gamma: true,
        }
    }

    pub fn from_truth(truth: &TailTruth) -> Self {
        match truth.form {
            SecondOrderForm::Shift => Self::shift(),
            SecondOrderForm::Power { c } => Self {
                rho_tilde: truth.rho_tilde,
                form: SecondOrderForm::Power { c },
                rho_tracks_gamma: false,
            },
        }
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

fn positive_log(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x.ln())
    } else {
        Err(EvtError::NonPositiveThreshold(x))
    }
}

/// Hybrid Hill estimate from the `k0` largest block maxima.
///
/// Computed as the mean of the non-negative log-spacings above the random
/// threshold `M_{k-k0:k}`, so the result is never negative.
pub fn h2(sample: &BlockMaximaSample, k0: usize) -> Result<EstimateResult> {
    let k = sample.k();
    if k0 == 0 || k0 >= k {
        return Err(EvtError::Parameter(format!(
            "k0 must lie in [1, k-1] = [1, {}], got {k0}",
            k.saturating_sub(1)
        )));
    }
    let log_threshold = positive_log(sample.upper_order_statistic(k0)?)?;
    let maxima = sample.sorted_maxima();
    let spacings: f64 = maxima[k - k0..]
        .iter()
        .map(|&x| x.ln() - log_threshold)
        .sum();
    Ok(EstimateResult {
        gamma_hat: spacings / k0 as f64,
        estimator: Estimator::H2,
        k0,
        theta: 0,
        correction: 0.0,
        m: sample.m(),
        k,
    })
}

/// Cursory estimate `log(M_{k-[theta/4]:k} / M_{k-[theta/2]:k}) / log 2`, with `[.]` the ceiling.
pub fn cursory(sample: &BlockMaximaSample, theta: usize) -> Result<EstimateResult> {
    let k = sample.k();
    if theta < 3 {
        return Err(EvtError::Parameter(format!(
            "theta must be at least 3, got {theta}"
        )));
    }
    let (quarter, half) = (ceil_div(theta, 4), ceil_div(theta, 2));
    if half + 1 > k {
        return Err(EvtError::Parameter(format!(
            "ceil(theta/2) = {half} exceeds k - 1 = {}",
            k.saturating_sub(1)
        )));
    }
    let upper = positive_log(sample.upper_order_statistic(quarter)?)?;
    let lower = positive_log(sample.upper_order_statistic(half)?)?;
    Ok(EstimateResult {
        gamma_hat: (upper - lower) / std::f64::consts::LN_2,
        estimator: Estimator::Cursory,
        k0: 0,
        theta,
        correction: 0.0,
        m: sample.m(),
        k,
    })
}

/// Classical Hill estimator on raw data: [`h2`] over blocks of size one.
pub fn hill_classic(data: &RawSample, k0: usize) -> Result<EstimateResult> {
    let mut est = h2(&block_maxima(data, 1)?, k0)?;
    est.estimator = Estimator::Hill;
    Ok(est)
}

/// Default intermediate sequence for the cursory plug-in, `ceil(k^exponent)`,
/// clamped into the estimator's admissible range.
pub fn default_theta(k: usize, exponent: f64) -> usize {
    let raw = (k as f64).powf(exponent).ceil() as usize;
    raw.clamp(3, (2 * k.saturating_sub(1)).max(3))
}

/// AMSE-motivated number of upper block maxima.
///
/// Returns `ceil(beta^{2/(1-2 rho)} * s^{1 - 1/(1-2 rho)})` clamped to `[1, k-1]`,
/// where `rho = rho_tilde` (`-1` for the shift form) and `s = k`, or `s = m k`
/// when `catalyst` is set.
pub fn select_k0(k: usize, m: usize, so: &SecondOrderSpec, beta: f64, catalyst: bool) -> usize {
    let rho = match so.form {
        SecondOrderForm::Shift => -1.0,
        SecondOrderForm::Power { .. } => so.rho_tilde,
    };
    let denom = 1.0 - 2.0 * rho;
    let scale = if catalyst { (m * k) as f64 } else { k as f64 };
    let beta = if beta.is_finite() { beta.max(0.0) } else { 0.0 };
    let raw = beta.powf(2.0 / denom) * scale.powf(1.0 - 1.0 / denom);
    let upper = k.saturating_sub(1).max(1);
    (raw.ceil() as usize).clamp(1, upper)
}

/// Shifted second-order rate function evaluated at `t`.
///
/// Shift form: `(gamma/2) (t/m - 1/2)^{-1}`. Power form: `c (t/m)^{rho_tilde}`
/// with `c` defaulting to `gamma`.
pub fn a_tilde(so: &SecondOrderSpec, gamma: f64, m: usize, t: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(EvtError::Parameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if m == 0 {
        return Err(EvtError::Parameter("block size must be at least 1".into()));
    }
    if !(t > 0.0) {
        return Err(EvtError::Parameter(format!("t must be positive, got {t}")));
    }
    let ratio = t / m as f64;
    match so.form {
        SecondOrderForm::Shift => {
            if ratio <= 0.5 {
                return Err(EvtError::Parameter(format!(
                    "shift form needs t/m > 1/2, got {ratio}"
                )));
            }
            Ok(0.5 * gamma / (ratio - 0.5))
        }
        SecondOrderForm::Power { c } => Ok(c.unwrap_or(gamma) * ratio.powf(so.rho_tilde)),
    }
}

/// Subtracts the leading bias term `A~(m k / k0) / (1 - rho_tilde)` from an H2 estimate,
/// with the unknown gamma replaced by `gamma_surrogate`.
pub fn bias_correct(
    raw: &EstimateResult,
    gamma_surrogate: f64,
    so: &SecondOrderSpec,
) -> Result<EstimateResult> {
    if !matches!(raw.estimator, Estimator::H2 | Estimator::Hill) {
        return Err(EvtError::Parameter(format!(
            "bias correction applies to H2 estimates, got {}",
            raw.estimator
        )));
    }
    if !(gamma_surrogate > 0.0 && gamma_surrogate.is_finite()) {
        return Err(EvtError::Parameter(format!(
            "surrogate gamma must be positive, got {gamma_surrogate}"
        )));
    }
    if raw.k0 == 0 {
        return Err(EvtError::Parameter("k0 must be positive".into()));
    }
    let effective = match so.form {
        SecondOrderForm::Shift => SecondOrderSpec::shift(),
        SecondOrderForm::Power { .. } if so.rho_tracks_gamma => SecondOrderSpec {
            rho_tilde: (-gamma_surrogate).max(-1.0),
            ..*so
        },
        SecondOrderForm::Power { .. } => *so,
    };
    let t = raw.m as f64 * raw.k as f64 / raw.k0 as f64;
    let correction = a_tilde(&effective, gamma_surrogate, raw.m, t)? / (1.0 - effective.rho_tilde);
    Ok(EstimateResult {
        gamma_hat: raw.gamma_hat - correction,
        estimator: match so.form {
            SecondOrderForm::Shift => Estimator::Rbh2r,
            SecondOrderForm::Power { .. } => Estimator::Rbh2,
        },
        correction,
        ..*raw
    })
}

/// H2 at `k0`, corrected with the cursory estimate at `theta` as surrogate.
pub fn reduced_bias(
    sample: &BlockMaximaSample,
    k0: usize,
    theta: usize,
    so: &SecondOrderSpec,
) -> Result<EstimateResult> {
    let raw = h2(sample, k0)?;
    let surrogate = cursory(sample, theta)?;
    let mut out = bias_correct(&raw, surrogate.gamma_hat, so)?;
    out.theta = theta;
    Ok(out)
}
