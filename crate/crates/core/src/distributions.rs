//! Heavy-tailed parametric families.
//!
//! Every family is evaluated through a pair of log-space primitives: the
//! tail pair `(log F(x), 1 - F(x))` and the inverse map from
//! `(log u, log(1 - u))` back to `x`. Working with both halves keeps the
//! far tail accurate, which the regular-variation oracles in
//! [`crate::theory`] rely on for `t` up to `1e8`.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{EvtError, Result};

fn unit_scale() -> f64 {
    1.0
}

/// A heavy-tailed distribution with extreme value index `gamma > 0`.
///
/// Serialized as `{"family": "pareto", "gamma": 0.25}`; GEV and GPD accept
/// optional `mu` (default 0) and `sigma` (default 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    /// `F(x) = 1 - x^{-1/gamma}`, `x >= 1`.
    Pareto { gamma: f64 },
    /// `F(x) = exp(-x^{-1/gamma})`, `x >= 0`.
    Frechet { gamma: f64 },
    /// Standard Cauchy; extreme value index 1.
    Cauchy,
    /// `1 - F(x) = (1 + x^{-rho/gamma})^{1/rho}`, `x >= 0`, `rho < 0`.
    Burr { gamma: f64, rho: f64 },
    Gev {
        gamma: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default = "unit_scale")]
        sigma: f64,
    },
    Gpd {
        gamma: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default = "unit_scale")]
        sigma: f64,
    },
}

/// Which branch of the shifted second-order rate function applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecondOrderForm {
    /// `rho_tilde = -1`: the bias is dominated by the half-unit shift.
    Shift,
    /// `rho_tilde > -1`: power-law rate `c * s^rho_tilde`. `None` means `c = gamma`.
    Power { c: Option<f64> },
}

/// Ground-truth tail metadata for a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailTruth {
    pub gamma: f64,
    pub rho_tilde: f64,
    pub form: SecondOrderForm,
}

impl DistributionSpec {
    pub fn pareto(gamma: f64) -> Result<Self> {
        Self::Pareto { gamma }.validated()
    }

    pub fn frechet(gamma: f64) -> Result<Self> {
        Self::Frechet { gamma }.validated()
    }

    pub fn cauchy() -> Self {
        Self::Cauchy
    }

    pub fn burr(gamma: f64, rho: f64) -> Result<Self> {
        Self::Burr { gamma, rho }.validated()
    }

    pub fn gev(gamma: f64) -> Result<Self> {
        Self::gev_with(gamma, 0.0, 1.0)
    }

    pub fn gev_with(gamma: f64, mu: f64, sigma: f64) -> Result<Self> {
        Self::Gev { gamma, mu, sigma }.validated()
    }

    pub fn gpd(gamma: f64) -> Result<Self> {
        Self::gpd_with(gamma, 0.0, 1.0)
    }

    pub fn gpd_with(gamma: f64, mu: f64, sigma: f64) -> Result<Self> {
        Self::Gpd { gamma, mu, sigma }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks the parameter invariants (`gamma > 0`, `sigma > 0`, Burr `rho < 0`).
    pub fn validate(&self) -> Result<()> {
        let gamma = self.gamma();
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(EvtError::Domain(format!(
                "{}: gamma must be finite and > 0, got {gamma}",
                self.family_name()
            )));
        }
        match *self {
            Self::Burr { rho, .. } if !(rho.is_finite() && rho < 0.0) => Err(EvtError::Domain(
                format!("burr: rho must be finite and < 0, got {rho}"),
            )),
            Self::Gev { mu, sigma, .. } | Self::Gpd { mu, sigma, .. }
                if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) =>
            {
                Err(EvtError::Domain(format!(
                    "{}: need finite mu and sigma > 0, got mu={mu}, sigma={sigma}",
                    self.family_name()
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Pareto { .. } => "pareto",
            Self::Frechet { .. } => "frechet",
            Self::Cauchy => "cauchy",
            Self::Burr { .. } => "burr",
            Self::Gev { .. } => "gev",
            Self::Gpd { .. } => "gpd",
        }
    }

    /// Extreme value index.
    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Pareto { gamma }
            | Self::Frechet { gamma }
            | Self::Burr { gamma, .. }
            | Self::Gev { gamma, .. }
            | Self::Gpd { gamma, .. } => gamma,
            Self::Cauchy => 1.0,
        }
    }

    /// Lower endpoint of the support.
    pub fn lower_endpoint(&self) -> f64 {
        match *self {
            Self::Pareto { .. } => 1.0,
            Self::Frechet { .. } | Self::Burr { .. } => 0.0,
            Self::Cauchy => f64::NEG_INFINITY,
            Self::Gev { gamma, mu, sigma } => mu - sigma / gamma,
            Self::Gpd { mu, .. } => mu,
        }
    }

    /// `(log F(x), 1 - F(x))`, each computed without cancellation.
    pub fn tail_pair(&self, x: f64) -> Result<(f64, f64)> {
        if x.is_nan() {
            return Err(EvtError::Domain("x is NaN".into()));
        }
        if x < self.lower_endpoint() {
            return Err(EvtError::Domain(format!(
                "x = {x} lies below the {} support endpoint {}",
                self.family_name(),
                self.lower_endpoint()
            )));
        }
        let pair = match *self {
            Self::Pareto { gamma } => {
                let surv = (-x.ln() / gamma).exp();
                ((-surv).ln_1p(), surv)
            }
            Self::Frechet { gamma } => {
                let s = (-x.ln() / gamma).exp();
                (-s, -(-s).exp_m1())
            }
            Self::Cauchy => {
                if x > 0.0 {
                    let surv = (1.0 / x).atan() / PI;
                    ((-surv).ln_1p(), surv)
                } else if x < 0.0 {
                    let cdf = (-1.0 / x).atan() / PI;
                    (cdf.ln(), 1.0 - cdf)
                } else {
                    (0.5f64.ln(), 0.5)
                }
            }
            Self::Burr { gamma, rho } => {
                let surv = ((-rho / gamma * x.ln()).exp().ln_1p() / rho).exp();
                ((-surv).ln_1p(), surv)
            }
            Self::Gev { gamma, mu, sigma } => {
                let z = (x - mu) / sigma;
                let s = (-(gamma * z).ln_1p() / gamma).exp();
                (-s, -(-s).exp_m1())
            }
            Self::Gpd { gamma, mu, sigma } => {
                let z = (x - mu) / sigma;
                let surv = (-(gamma * z).ln_1p() / gamma).exp();
                ((-surv).ln_1p(), surv)
            }
        };
        Ok(pair)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let (log_cdf, surv) = self.tail_pair(x)?;
        Ok(if surv < 0.5 {
            1.0 - surv
        } else {
            log_cdf.exp()
        })
    }

    pub fn log_cdf(&self, x: f64) -> Result<f64> {
        Ok(self.tail_pair(x)?.0)
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        Ok(self.tail_pair(x)?.1)
    }

    /// Inverse of the CDF given `log u` and `log(1 - u)`.
    fn quantile_from_logs(&self, log_u: f64, log_surv: f64) -> f64 {
        match *self {
            Self::Pareto { gamma } => (-gamma * log_surv).exp(),
            Self::Frechet { gamma } => (-gamma * (-log_u).ln()).exp(),
            Self::Cauchy => {
                let u = log_u.exp();
                if (u - 0.5).abs() <= 0.25 {
                    (PI * (u - 0.5)).tan()
                } else if u > 0.5 {
                    1.0 / (PI * log_surv.exp()).tan()
                } else {
                    -1.0 / (PI * u).tan()
                }
            }
            Self::Burr { gamma, rho } => (rho * log_surv).exp_m1().powf(-gamma / rho),
            Self::Gev { gamma, mu, sigma } => {
                mu + sigma * (-gamma * (-log_u).ln()).exp_m1() / gamma
            }
            Self::Gpd { gamma, mu, sigma } => mu + sigma * (-gamma * log_surv).exp_m1() / gamma,
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(EvtError::Domain(format!(
                "quantile level must lie in (0, 1), got {u}"
            )));
        }
        Ok(self.quantile_from_logs(u.ln(), (-u).ln_1p()))
    }

    /// `V(t) = F^{<-}(exp(-1/t))`, the quantile-type function of `1 / (-log F)`.
    pub fn v_function(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t > 0.0) || t.is_nan() {
            return Err(EvtError::Domain(format!("V(t) needs t > 0, got {t}")));
        }
        let inv = 1.0 / t;
        let log_surv = (-(-inv).exp_m1()).ln();
        if !log_surv.is_finite() {
            return Err(EvtError::Domain(format!(
                "exp(-1/t) is not inside (0, 1) at t = {t}"
            )));
        }
        Ok(match *self {
            Self::Frechet { gamma } => t.powf(gamma),
            Self::Gev { gamma, mu, sigma } => mu + sigma * (gamma * t.ln()).exp_m1() / gamma,
            _ => self.quantile_from_logs(-inv, log_surv),
        })
    }

    /// Draws `count` i.i.d. values by inverse-transform sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>> {
        self.validate()?;
        Ok((0..count)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile_from_logs(u.ln(), (-u).ln_1p())
            })
            .collect())
    }

    /// First- and second-order tail parameters of the standardized family.
    pub fn truth(&self) -> TailTruth {
        let gamma = self.gamma();
        let (rho_tilde, form) = match *self {
            Self::Pareto { .. } | Self::Frechet { .. } | Self::Cauchy => {
                (-1.0, SecondOrderForm::Shift)
            }
            Self::Gev { .. } | Self::Gpd { .. } => power_or_shift(-gamma, gamma),
            Self::Burr { rho, .. } => power_or_shift(rho, gamma),
        };
        TailTruth {
            gamma,
            rho_tilde,
            form,
        }
    }
}

fn power_or_shift(rho: f64, gamma: f64) -> (f64, SecondOrderForm) {
    if rho > -1.0 {
        (rho, SecondOrderForm::Power { c: Some(gamma) })
    } else {
        (-1.0, SecondOrderForm::Shift)
    }
}
