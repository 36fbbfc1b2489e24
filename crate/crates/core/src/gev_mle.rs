//! GEV maximum-likelihood baseline fitted to the whole block-maxima sample.
//!
//! Starting values come from L-moments; the likelihood is maximized with a
//! derivative-free Nelder-Mead simplex because the support constraint
//! `1 + gamma (x - mu) / sigma > 0` makes the surface discontinuous at its edge.
//! The optimizer works on data standardized by the starting location and
//! scale, which makes the fit equivariant under affine maps of the data up
//! to rounding.

use serde::Serialize;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{EvtError, Result};

const GUMBEL_SWITCH: f64 = 1e-6;
const SPREAD_TOL: f64 = 1e-10;
const MAX_ITER: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, gamma: f64) -> Self {
        Self { mu, sigma, gamma }
    }

    /// True when every point lies strictly inside the support.
    pub fn supports(&self, data: &[f64]) -> bool {
        self.sigma > 0.0
            && data
                .iter()
                .all(|&x| 1.0 + self.gamma * (x - self.mu) / self.sigma > 0.0)
    }
}

/// Outcome of [`fit_gev`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevFit {
    pub params: GevParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// GEV log-likelihood; `-inf` outside the parameter space or the support.
pub fn gev_loglik(params: &GevParams, data: &[f64]) -> f64 {
    let GevParams { mu, sigma, gamma } = *params;
    if !(sigma > 0.0) || !mu.is_finite() || !gamma.is_finite() || !sigma.is_finite() {
        return f64::NEG_INFINITY;
    }
    let n = data.len() as f64;
    let log_sigma = sigma.ln();
    if gamma.abs() < GUMBEL_SWITCH {
        let s: f64 = data
            .iter()
            .map(|&x| {
                let z = (x - mu) / sigma;
                z + (-z).exp()
            })
            .sum();
        return -n * log_sigma - s;
    }
    let inv = 1.0 / gamma;
    let mut log_sum = 0.0;
    let mut pow_sum = 0.0;
    for &x in data {
        let y = gamma * (x - mu) / sigma;
        if !(y > -1.0) {
            return f64::NEG_INFINITY;
        }
        let ly = y.ln_1p();
        log_sum += ly;
        pow_sum += (-ly * inv).exp();
    }
    -n * log_sigma - (1.0 + inv) * log_sum - pow_sum
}

/// L-moment starting values (Hosking's approximation), widened in scale until
/// every observation is inside the support.
pub fn lmoments_init(data: &[f64]) -> Result<GevParams> {
    if data.len() < 4 {
        return Err(EvtError::InsufficientData {
            needed: 4,
            got: data.len(),
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(EvtError::Data("GEV fit needs finite data".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(EvtError::DegenerateInput(
            "all observations are equal".into(),
        ));
    }
    let n = sorted.len() as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (j, &x) in sorted.iter().enumerate() {
        let j = j as f64;
        b0 += x;
        b1 += x * j / (n - 1.0);
        b2 += x * j * (j - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    b0 /= n;
    b1 /= n;
    b2 /= n;
    let l1 = b0;
    let l2 = 2.0 * b1 - b0;
    let l3 = 6.0 * b2 - 6.0 * b1 + b0;
    if !(l2 > 0.0) {
        return Err(EvtError::DegenerateInput(
            "second L-moment is not positive".into(),
        ));
    }
    let t3 = l3 / l2;
    let c = 2.0 / (3.0 + t3) - std::f64::consts::LN_2 / 3f64.ln();
    // Hosking's shape k = -gamma; keep the mean finite for the starting point.
    let kh = (7.8590 * c + 2.9554 * c * c).max(-0.9);
    let (mu, sigma) = if kh.abs() < GUMBEL_SWITCH {
        let sigma = l2 / std::f64::consts::LN_2;
        (l1 - 0.577_215_664_901_532_9 * sigma, sigma)
    } else {
        let g = gamma_fn(1.0 + kh);
        let sigma = l2 * kh / ((1.0 - 2f64.powf(-kh)) * g);
        (l1 - sigma * (1.0 - g) / kh, sigma)
    };
    let mut params = GevParams::new(mu, sigma, -kh);
    let mut widen = 0;
    while !params.supports(data) {
        params.sigma *= 2.0;
        widen += 1;
        if widen > 200 || !params.sigma.is_finite() {
            return Err(EvtError::DegenerateInput(
                "could not find starting values covering the data".into(),
            ));
        }
    }
    if !(params.sigma.is_finite() && params.mu.is_finite()) {
        return Err(EvtError::DegenerateInput(
            "non-finite L-moment estimates".into(),
        ));
    }
    Ok(params)
}

struct Simplex<const N: usize> {
    points: Vec<([f64; N], f64)>,
}

struct NmOutcome<const N: usize> {
    best: [f64; N],
    value: f64,
    iterations: usize,
    converged: bool,
}

fn nelder_mead<const N: usize, F>(
    f: &mut F,
    start: [f64; N],
    steps: [f64; N],
    max_iter: usize,
) -> NmOutcome<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut simplex = Simplex {
        points: Vec::with_capacity(N + 1),
    };
    simplex.points.push((start, f(&start)));
    for i in 0..N {
        let mut p = start;
        p[i] += steps[i];
        let v = f(&p);
        simplex.points.push((p, v));
    }
    let order = |pts: &mut Vec<([f64; N], f64)>| pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        order(&mut simplex.points);
        let best = simplex.points[0].1;
        let worst = simplex.points[N].1;
        if worst.is_finite() && (worst - best).abs() < SPREAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (p, _) in &simplex.points[..N] {
            for d in 0..N {
                centroid[d] += p[d] / N as f64;
            }
        }
        let along = |coef: f64, from: &[f64; N]| {
            let mut out = [0.0; N];
            for d in 0..N {
                out[d] = centroid[d] + coef * (from[d] - centroid[d]);
            }
            out
        };
        let worst_point = simplex.points[N].0;
        let second_worst = simplex.points[N - 1].1;

        let reflected = along(-1.0, &worst_point);
        let fr = f(&reflected);
        if fr < best {
            let expanded = along(-2.0, &worst_point);
            let fe = f(&expanded);
            simplex.points[N] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < second_worst {
            simplex.points[N] = (reflected, fr);
            continue;
        }
        let (candidate, fc) = if fr < worst {
            let outside = along(-0.5, &worst_point);
            (outside, f(&outside))
        } else {
            let inside = along(0.5, &worst_point);
            (inside, f(&inside))
        };
        if fc < worst.min(fr) {
            simplex.points[N] = (candidate, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let anchor = simplex.points[0].0;
        for (p, v) in simplex.points.iter_mut().skip(1) {
            for d in 0..N {
                p[d] = anchor[d] + 0.5 * (p[d] - anchor[d]);
            }
            *v = f(p);
        }
    }
    order(&mut simplex.points);
    NmOutcome {
        best: simplex.points[0].0,
        value: simplex.points[0].1,
        iterations,
        converged,
    }
}

/// Maximum-likelihood GEV fit.
///
/// Runs Nelder-Mead from the L-moment start until the simplex function
/// spread drops below `1e-10` or 2000 iterations pass, with one deterministic
/// restart around the best point. A non-converged fit returns
/// [`EvtError::Convergence`] carrying the best parameters found.
pub fn fit_gev(data: &[f64]) -> Result<GevFit> {
    if data.len() < 10 {
        return Err(EvtError::InsufficientData {
            needed: 10,
            got: data.len(),
        });
    }
    let init = lmoments_init(data)?;
    let center = init.mu;
    let scale = init.sigma;
    let standardized: Vec<f64> = data.iter().map(|&x| (x - center) / scale).collect();
    let mut objective = |p: &[f64; 3]| {
        let params = GevParams::new(p[0], p[1].exp(), p[2]);
        let ll = gev_loglik(&params, &standardized);
        if ll.is_nan() {
            f64::INFINITY
        } else {
            -ll
        }
    };

    let start = [0.0, 0.0, init.gamma];
    let mut outcome = nelder_mead(&mut objective, start, [0.1, 0.1, 0.1], MAX_ITER);
    let mut iterations = outcome.iterations;
    if !outcome.converged {
        let restart = nelder_mead(&mut objective, outcome.best, [0.05, -0.05, 0.05], MAX_ITER);
        iterations += restart.iterations;
        if restart.value <= outcome.value {
            outcome = NmOutcome {
                iterations,
                ..restart
            };
        } else {
            outcome.converged = restart.converged;
        }
    }

    let p = outcome.best;
    let params = GevParams::new(center + scale * p[0], scale * p[1].exp(), p[2]);
    let loglik = gev_loglik(&params, data);
    if !outcome.converged {
        return Err(EvtError::Convergence {
            best: params,
            loglik,
            iterations,
        });
    }
    Ok(GevFit {
        params,
        loglik,
        converged: true,
        iterations,
    })
}
