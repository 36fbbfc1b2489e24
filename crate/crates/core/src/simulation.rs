//! Deterministic Monte Carlo experiments.
//!
//! Replicate `r` draws its raw sample from a generator seeded with
//! `derive_seed(master_seed, r, 0)` and reuses it across the whole block-size
//! grid. Replicates run in parallel on a dedicated thread pool, but results
//! are collected in replicate order and reduced sequentially per
//! `(m, estimator, k0)` cell, so the output is identical for any worker count.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::{block_maxima, RawSample};
use crate::distributions::DistributionSpec;
use crate::error::{EvtError, Result};
use crate::estimators::{
    cursory, default_theta, h2, hill_classic, reduced_bias, select_k0, Estimator, SecondOrderSpec,
};
use crate::gev_mle::fit_gev;

/// How the number of upper block maxima is chosen at each block size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum K0Rule {
    /// `ceil(p k)`.
    Fraction(f64),
    /// Explicit list; entries outside `[1, k-1]` are recorded as skipped.
    Grid(Vec<usize>),
    /// [`select_k0`] with this `beta` and the family's true second-order form.
    Amse(f64),
}

fn default_theta_rule() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: DistributionSpec,
    pub n: usize,
    pub m_grid: Vec<usize>,
    pub k0_rule: K0Rule,
    pub estimators: Vec<Estimator>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Exponent of the cursory plug-in sequence `theta = ceil(k^theta_rule)`.
    #[serde(default = "default_theta_rule")]
    pub theta_rule: f64,
    /// Use `m k` instead of `k` in the AMSE rule.
    #[serde(default)]
    pub catalyst: bool,
    /// Fixed `rho_tilde` for the power-form correction; when absent, `-gamma`
    /// is plugged in from the cursory surrogate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_rho: Option<f64>,
    /// Default worker count when the caller does not override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| EvtError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec
            .validate()
            .map_err(|e| EvtError::Config(format!("spec: {e}")))?;
        let bad = |field: &str, why: String| Err(EvtError::Config(format!("{field}: {why}")));
        if self.m_grid.is_empty() {
            return bad("m_grid", "must not be empty".into());
        }
        if self.m_grid.contains(&0) {
            return bad("m_grid", "block sizes must be positive".into());
        }
        let max_m = *self.m_grid.iter().max().unwrap_or(&1);
        if self.n < max_m {
            return bad(
                "n",
                format!("{} is smaller than the largest block size {max_m}", self.n),
            );
        }
        if self.estimators.is_empty() {
            return bad("estimators", "must not be empty".into());
        }
        if self.replicates == 0 {
            return bad("replicates", "must be at least 1".into());
        }
        if !(self.theta_rule > 0.0 && self.theta_rule < 1.0) {
            return bad(
                "theta_rule",
                format!("must lie in (0, 1), got {}", self.theta_rule),
            );
        }
        if let Some(rho) = self.power_rho {
            SecondOrderSpec::power(rho, None)
                .map_err(|e| EvtError::Config(format!("power_rho: {e}")))?;
        }
        if self.workers == Some(0) {
            return bad("workers", "must be at least 1".into());
        }
        match &self.k0_rule {
            K0Rule::Fraction(p) if !(*p > 0.0 && *p < 1.0) => {
                bad("k0_rule", format!("fraction must lie in (0, 1), got {p}"))
            }
            K0Rule::Grid(g) if g.is_empty() => bad("k0_rule", "grid must not be empty".into()),
            K0Rule::Amse(beta) if !(*beta > 0.0 && beta.is_finite()) => {
                bad("k0_rule", format!("beta must be positive, got {beta}"))
            }
            _ => Ok(()),
        }
    }

    fn k0_values(&self, k: usize, m: usize) -> Vec<usize> {
        match &self.k0_rule {
            K0Rule::Fraction(p) => {
                let raw = (p * k as f64).ceil() as usize;
                vec![raw.clamp(1, k.saturating_sub(1).max(1))]
            }
            K0Rule::Grid(g) => {
                let mut g = g.clone();
                g.sort_unstable();
                g.dedup();
                g
            }
            K0Rule::Amse(beta) => {
                let so = SecondOrderSpec::from_truth(&self.spec.truth());
                vec![select_k0(k, m, &so, *beta, self.catalyst)]
            }
        }
    }

    fn power_spec(&self) -> SecondOrderSpec {
        match self.power_rho {
            Some(rho) => {
                SecondOrderSpec::power(rho, None).unwrap_or_else(|_| SecondOrderSpec::gev_gpd())
            }
            None => SecondOrderSpec::gev_gpd(),
        }
    }
}

/// Aggregated estimates for one `(m, estimator, k0)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub family: String,
    pub gamma_true: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub k0: usize,
    pub estimator: Estimator,
    /// Replicates that produced an estimate.
    pub replicates: usize,
    pub mean_estimate: f64,
    pub bias: f64,
    /// Sample variance (denominator `R - 1`; zero for a single replicate).
    pub variance: f64,
    /// `mean((gamma_hat - gamma)^2)`.
    pub mse: f64,
    pub master_seed: u64,
    /// Replicates whose estimator preconditions failed. Not written to CSV.
    #[serde(skip)]
    pub skipped: usize,
}

pub const CSV_HEADER: &str =
    "family,gamma_true,n,m,k,k0,estimator,replicates,mean_estimate,bias,variance,mse,master_seed";

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless 64-bit seed for replicate `replicate`, random stream `stream`.
pub fn derive_seed(master: u64, replicate: u64, stream: u64) -> u64 {
    let h = splitmix_finalize(master.wrapping_add(GOLDEN));
    let h = splitmix_finalize(h ^ replicate.wrapping_add(1).wrapping_mul(GOLDEN));
    splitmix_finalize(h ^ stream.wrapping_add(1).wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn rng_for(master: u64, replicate: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, replicate, stream))
}

type CellKey = (usize, &'static str, usize);

struct CellValue {
    key: CellKey,
    k: usize,
    estimator: Estimator,
    estimate: Option<f64>,
}

fn replicate_cells(config: &ExperimentConfig, replicate: u64) -> Result<Vec<CellValue>> {
    let mut rng = rng_for(config.master_seed, replicate, 0);
    let raw = RawSample::new(config.spec.sample(&mut rng, config.n)?)?;
    let mut out = Vec::new();
    let mut push = |m: usize, k: usize, k0: usize, estimator: Estimator, estimate: Option<f64>| {
        out.push(CellValue {
            key: (m, estimator.label(), k0),
            k,
            estimator,
            estimate: estimate.filter(|v| v.is_finite()),
        });
    };
    let power = config.power_spec();

    if config.estimators.contains(&Estimator::Hill) {
        let k = config.n;
        for k0 in config.k0_values(k, 1) {
            let est = hill_classic(&raw, k0).ok().map(|e| e.gamma_hat);
            push(1, k, k0, Estimator::Hill, est);
        }
    }

    for &m in &config.m_grid {
        let sample = block_maxima(&raw, m)?;
        let k = sample.k();
        let theta = default_theta(k, config.theta_rule);
        let k0s = config.k0_values(k, m);
        for &estimator in &config.estimators {
            match estimator {
                Estimator::Hill => {}
                Estimator::H2 => {
                    for &k0 in &k0s {
                        push(
                            m,
                            k,
                            k0,
                            estimator,
                            h2(&sample, k0).ok().map(|e| e.gamma_hat),
                        );
                    }
                }
                Estimator::Rbh2r | Estimator::Rbh2 => {
                    let so = if estimator == Estimator::Rbh2r {
                        SecondOrderSpec::shift()
                    } else {
                        power
                    };
                    for &k0 in &k0s {
                        let est = reduced_bias(&sample, k0, theta, &so)
                            .ok()
                            .map(|e| e.gamma_hat);
                        push(m, k, k0, estimator, est);
                    }
                }
                Estimator::Cursory => {
                    let est = cursory(&sample, theta).ok().map(|e| e.gamma_hat);
                    push(m, k, 0, estimator, est);
                }
                Estimator::GevMle => {
                    let est = fit_gev(sample.sorted_maxima()).ok().map(|f| f.params.gamma);
                    push(m, k, k, estimator, est);
                }
            }
        }
    }
    Ok(out)
}

struct Cell {
    k: usize,
    estimator: Estimator,
    values: Vec<f64>,
    skipped: usize,
}

fn summarize(config: &ExperimentConfig, key: CellKey, cell: &Cell) -> SummaryRow {
    let gamma = config.spec.gamma();
    let r = cell.values.len();
    let (mean, variance, mse) = if r == 0 {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let rf = r as f64;
        let mean = cell.values.iter().sum::<f64>() / rf;
        let ss: f64 = cell.values.iter().map(|v| (v - mean).powi(2)).sum();
        let variance = if r > 1 { ss / (rf - 1.0) } else { 0.0 };
        let mse = cell.values.iter().map(|v| (v - gamma).powi(2)).sum::<f64>() / rf;
        (mean, variance, mse)
    };
    SummaryRow {
        family: config.spec.family_name().to_string(),
        gamma_true: gamma,
        n: config.n,
        m: key.0,
        k: cell.k,
        k0: key.2,
        estimator: cell.estimator,
        replicates: r,
        mean_estimate: mean,
        bias: mean - gamma,
        variance,
        mse,
        master_seed: config.master_seed,
        skipped: cell.skipped,
    }
}

/// Runs every replicate and aggregates per `(m, estimator, k0)` cell.
///
/// Rows come back sorted by block size, estimator label and `k0`. A cell in
/// which an estimator's preconditions fail for some replicates aggregates the
/// remaining ones; if all fail it reports zero replicates and NaN statistics.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Vec<SummaryRow>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvtError::Config(format!("could not start worker pool: {e}")))?;
    let per_replicate: Vec<Vec<CellValue>> = pool.install(|| {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| replicate_cells(config, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut cells: BTreeMap<CellKey, Cell> = BTreeMap::new();
    for values in per_replicate {
        for v in values {
            let cell = cells.entry(v.key).or_insert_with(|| Cell {
                k: v.k,
                estimator: v.estimator,
                values: Vec::new(),
                skipped: 0,
            });
            match v.estimate {
                Some(x) => cell.values.push(x),
                None => cell.skipped += 1,
            }
        }
    }
    Ok(cells
        .iter()
        .map(|(key, cell)| summarize(config, *key, cell))
        .collect())
}

/// `k0` sweep at a single block size with an explicit grid.
pub fn sweep_k0(config: &ExperimentConfig, workers: usize) -> Result<Vec<SummaryRow>> {
    if config.m_grid.len() != 1 {
        return Err(EvtError::Config(format!(
            "m_grid: a k0 sweep needs exactly one block size, got {}",
            config.m_grid.len()
        )));
    }
    if !matches!(config.k0_rule, K0Rule::Grid(_)) {
        return Err(EvtError::Config("k0_rule: a k0 sweep needs a grid".into()));
    }
    run_experiment(config, workers)
}

/// `%g`-style rendering with ten significant digits.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 10;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.family,
            format_sig(r.gamma_true),
            r.n,
            r.m,
            r.k,
            r.k0,
            r.estimator.label(),
            r.replicates,
            format_sig(r.mean_estimate),
            format_sig(r.bias),
            format_sig(r.variance),
            format_sig(r.mse),
            r.master_seed
        )?;
    }
    Ok(())
}

pub fn summary_csv_string(rows: &[SummaryRow]) -> String {
    let mut buf = Vec::new();
    write_summary_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Empirical mean and variance of the normalized central order statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResult {
    pub mean: f64,
    pub variance: f64,
    /// Set when `theta / k > 0.1`, outside the intermediate regime.
    pub non_asymptotic: bool,
}

/// Simulates `sqrt(theta) ((theta/k)(Z_{k-theta:k} + 1/2) - 1)` for unit
/// Frechet samples of size `k`, `replicates` times.
pub fn order_stat_probe(
    k: usize,
    theta: usize,
    replicates: usize,
    master_seed: u64,
) -> Result<ProbeResult> {
    if theta == 0 || theta >= k {
        return Err(EvtError::Parameter(format!(
            "theta must lie in [1, k-1], got theta = {theta}, k = {k}"
        )));
    }
    if replicates == 0 {
        return Err(EvtError::Parameter("need at least one replicate".into()));
    }
    let mut buf = vec![0.0; k];
    let scale = theta as f64 / k as f64;
    let root = (theta as f64).sqrt();
    let stats: Vec<f64> = (0..replicates as u64)
        .map(|r| {
            let mut rng = rng_for(master_seed, r, 1);
            for z in buf.iter_mut() {
                let u: f64 = rng.sample(Open01);
                *z = -1.0 / u.ln();
            }
            let idx = k - 1 - theta;
            let (_, z, _) = buf.select_nth_unstable_by(idx, f64::total_cmp);
            root * (scale * (*z + 0.5) - 1.0)
        })
        .collect();
    let rf = replicates as f64;
    let mean = stats.iter().sum::<f64>() / rf;
    let variance = if replicates > 1 {
        stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (rf - 1.0)
    } else {
        0.0
    };
    Ok(ProbeResult {
        mean,
        variance,
        non_asymptotic: scale > 0.1,
    })
}
