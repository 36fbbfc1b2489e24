//! Numeric checks of the regular-variation limits behind the estimators.
//!
//! Every tail probability of a block maximum is formed in log space as
//! `1 - F^m(x) = -expm1(m log F(x))`, which keeps the oracles usable for `t`
//! up to about `1e8` in double precision. The functions report raw values;
//! deciding whether they are close enough to their limits is left to callers.

use serde::Serialize;

use crate::distributions::DistributionSpec;
use crate::error::{EvtError, Result};
use crate::estimators::{a_tilde, SecondOrderSpec};

/// `1 - F^m(y)`. For `m = 1` this is the plain survival function.
fn block_tail(spec: &DistributionSpec, m: usize, y: f64) -> Result<f64> {
    let (log_cdf, surv) = spec.tail_pair(y)?;
    if m == 1 {
        Ok(surv)
    } else {
        Ok(-(m as f64 * log_cdf).exp_m1())
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(EvtError::Domain("block size must be at least 1".into()));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(EvtError::Domain(format!(
            "x must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 1.0 && t.is_finite()) {
        return Err(EvtError::Domain(format!("t must exceed 1, got {t}")));
    }
    Ok(())
}

/// `(1 - F^m(x V(m(t - 1/2)))) / (1 - F^m(V(m(t - 1/2))))`, which tends to
/// `x^{-1/gamma}` as `t` grows.
pub fn condition_b_ratio(spec: &DistributionSpec, m: usize, x: f64, t: f64) -> Result<f64> {
    check_m(m)?;
    check_x(x)?;
    check_t(t)?;
    let v = spec.v_function(m as f64 * (t - 0.5))?;
    condition_b_ratio_at(spec, m, v, x)
}

fn condition_b_ratio_at(spec: &DistributionSpec, m: usize, v: f64, x: f64) -> Result<f64> {
    let denom = block_tail(spec, m, v)?;
    if !(denom > f64::MIN_POSITIVE) {
        return Err(EvtError::Precision(format!(
            "tail probability at the threshold underflowed ({denom}); use a smaller t"
        )));
    }
    let numer = block_tail(spec, m, x * v)?;
    Ok(numer / denom)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Adaptive Gauss-Kronrod (7/15) integration to absolute tolerance `atol`.
fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, atol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 2000;
    let (est, err) = gauss_kronrod(&mut f, a, b)?;
    let mut pieces = vec![(a, b, est, err)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= atol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(EvtError::Precision(format!(
                "quadrature did not reach tolerance {atol} (error estimate {total_err})"
            )));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (e1, r1) = gauss_kronrod(&mut f, lo, mid)?;
        let (e2, r2) = gauss_kronrod(&mut f, mid, hi)?;
        pieces.push((lo, mid, e1, r1));
        pieces.push((mid, hi, e2, r2));
    }
    pieces.sort_by(|p, q| p.0.total_cmp(&q.0));
    let total: f64 = pieces.iter().map(|p| p.2).sum();
    if !total.is_finite() {
        return Err(EvtError::Precision(
            "quadrature produced a non-finite value".into(),
        ));
    }
    Ok(total)
}

/// Upper limit at which the analytic remainder `gamma x^{-1/gamma}` drops to `1e-6`.
pub fn default_x_max(gamma: f64) -> f64 {
    (gamma / 1e-6).powf(gamma)
}

/// `int_1^inf ratio(x) dx / x` for the condition-B ratio, which tends to `gamma`.
///
/// The range `[1, x_max]` is integrated numerically in `u = ln x`; the part
/// beyond `x_max` is replaced by its limit value `gamma x_max^{-1/gamma}`.
pub fn condition_b_integral(spec: &DistributionSpec, m: usize, t: f64, x_max: f64) -> Result<f64> {
    check_m(m)?;
    check_t(t)?;
    if !(x_max > 1.0 && x_max.is_finite()) {
        return Err(EvtError::Domain(format!(
            "x_max must exceed 1, got {x_max}"
        )));
    }
    let gamma = spec.gamma();
    let v = spec.v_function(m as f64 * (t - 0.5))?;
    let body = integrate(
        |u| condition_b_ratio_at(spec, m, v, u.exp()),
        0.0,
        x_max.ln(),
        1e-6,
    )?;
    Ok(body + gamma * x_max.powf(-1.0 / gamma))
}

/// `(log V(m g(tx)) - log V(m g(t)) - gamma log x) / A~(mt)` with `g(t) = t - 1/2`.
///
/// `A~` comes from [`a_tilde`] with the family's own second-order parameters;
/// the limit is `(x^rho - 1) / rho`.
pub fn second_order_curve(spec: &DistributionSpec, m: usize, x: f64, t: f64) -> Result<f64> {
    check_m(m)?;
    check_x(x)?;
    check_t(t)?;
    let truth = spec.truth();
    let so = SecondOrderSpec::from_truth(&truth);
    let rate = a_tilde(&so, truth.gamma, m, m as f64 * t)?;
    if !(rate.abs() > 1e-300) {
        return Err(EvtError::Precision(format!(
            "second-order rate underflowed at t = {t}"
        )));
    }
    let mf = m as f64;
    let v_tx = spec.v_function(mf * (t * x - 0.5))?;
    let v_t = spec.v_function(mf * (t - 0.5))?;
    if !(v_tx > 0.0 && v_t > 0.0) {
        return Err(EvtError::Domain(
            "V must be positive for the log-quotient; the support reaches zero".into(),
        ));
    }
    let numer = (v_tx / v_t).ln() - truth.gamma * x.ln();
    let value = numer / rate;
    if !value.is_finite() {
        return Err(EvtError::Precision(
            "second-order quotient is not finite".into(),
        ));
    }
    Ok(value)
}

/// Second-order remainders of the single-draw and block-maximum tail
/// quotients at `t`: `q1 = (1-F(tx))/(1-F(t)) - x^{-1/gamma}` and
/// `q2`, the same with `F^m`. Their ratio tends to one.
///
/// Returns [`EvtError::DegenerateInput`] when `q1` is zero to rounding
/// (an exact power tail), since the comparison is then meaningless.
pub fn block_tail_second_order_ratio(
    spec: &DistributionSpec,
    m: usize,
    x: f64,
    t: f64,
) -> Result<(f64, f64)> {
    check_m(m)?;
    check_x(x)?;
    check_t(t)?;
    let limit = x.powf(-1.0 / spec.gamma());
    let quotient = |mm: usize| -> Result<f64> {
        let denom = block_tail(spec, mm, t)?;
        if !(denom > f64::MIN_POSITIVE) {
            return Err(EvtError::Precision(format!(
                "tail probability at t = {t} underflowed; use a smaller t"
            )));
        }
        Ok(block_tail(spec, mm, t * x)? / denom - limit)
    };
    let q1 = quotient(1)?;
    if q1.abs() <= 64.0 * f64::EPSILON * limit.max(1.0) {
        return Err(EvtError::DegenerateInput(format!(
            "first-order quotient is exact to rounding (q1 = {q1:e})"
        )));
    }
    let q2 = if m == 1 { q1 } else { quotient(m)? };
    Ok((q1, q2))
}

/// One line of a theory report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCheck {
    pub check: &'static str,
    pub x: f64,
    pub value: f64,
    pub limit: f64,
    pub rel_error: f64,
}

impl TheoryCheck {
    fn new(check: &'static str, x: f64, value: f64, limit: f64) -> Self {
        let rel_error = if limit == 0.0 {
            value.abs()
        } else {
            ((value - limit) / limit).abs()
        };
        Self {
            check,
            x,
            value,
            limit,
            rel_error,
        }
    }
}

/// Evaluates every oracle at the given points.
///
/// Points where an oracle is undefined (a degenerate comparison, a precision
/// failure) are left out rather than reported as failures. The integral row
/// records `x_max` in its `x` column.
pub fn run_checks(
    spec: &DistributionSpec,
    m: usize,
    t: f64,
    xs: &[f64],
) -> Result<Vec<TheoryCheck>> {
    check_m(m)?;
    check_t(t)?;
    for &x in xs {
        check_x(x)?;
    }
    let gamma = spec.gamma();
    let rho = spec.truth().rho_tilde;
    let mut rows = Vec::new();
    for &x in xs {
        if let Ok(v) = condition_b_ratio(spec, m, x, t) {
            rows.push(TheoryCheck::new(
                "condition_b_ratio",
                x,
                v,
                x.powf(-1.0 / gamma),
            ));
        }
    }
    let x_max = default_x_max(gamma);
    if let Ok(v) = condition_b_integral(spec, m, t, x_max) {
        rows.push(TheoryCheck::new("condition_b_integral", x_max, v, gamma));
    }
    for &x in xs {
        if let Ok(v) = second_order_curve(spec, m, x, t) {
            rows.push(TheoryCheck::new(
                "second_order_curve",
                x,
                v,
                (x.powf(rho) - 1.0) / rho,
            ));
        }
    }
    for &x in xs {
        if let Ok((q1, q2)) = block_tail_second_order_ratio(spec, m, x, t) {
            rows.push(TheoryCheck::new(
                "block_tail_second_order_ratio",
                x,
                q2 / q1,
                1.0,
            ));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn condition_b_examples() {
        let pareto = DistributionSpec::pareto(0.25).unwrap();
        assert!(rel(condition_b_ratio(&pareto, 10, 2.0, 1e6).unwrap(), 0.0625) < 1e-3);
        assert_eq!(condition_b_ratio(&pareto, 10, 1.0, 1e6).unwrap(), 1.0);
        let frechet = DistributionSpec::frechet(0.25).unwrap();
        let v = condition_b_ratio(&frechet, 1, 16.0, 1e6).unwrap();
        assert!(rel(v, 16f64.powi(-4)) < 1e-3, "{v}");
    }

    #[test]
    fn condition_b_pareto_closed_form() {
        // For Pareto and m = 1 the ratio is exactly x^{-1/gamma} at any
        // threshold above 1, which the log-space path must reproduce.
        let pareto = DistributionSpec::pareto(0.5).unwrap();
        for x in [1.5, 3.0, 10.0] {
            let v = condition_b_ratio(&pareto, 1, x, 1e7).unwrap();
            assert!(rel(v, x.powi(-2)) < 1e-9);
        }
    }

    #[test]
    fn condition_b_rejects_bad_input() {
        let pareto = DistributionSpec::pareto(0.25).unwrap();
        assert!(matches!(
            condition_b_ratio(&pareto, 0, 2.0, 1e6),
            Err(EvtError::Domain(_))
        ));
        assert!(matches!(
            condition_b_ratio(&pareto, 1, -2.0, 1e6),
            Err(EvtError::Domain(_))
        ));
        assert!(matches!(
            condition_b_ratio(&pareto, 1, 2.0, 0.5),
            Err(EvtError::Domain(_))
        ));
    }

    #[test]
    fn condition_b_nonincreasing_in_x() {
        for spec in [
            DistributionSpec::frechet(0.5).unwrap(),
            DistributionSpec::burr(0.25, -0.5).unwrap(),
            DistributionSpec::cauchy(),
        ] {
            let mut prev = f64::INFINITY;
            for i in 0..60 {
                let x = 1.0 + 0.25 * i as f64;
                let v = condition_b_ratio(&spec, 7, x, 1e5).unwrap();
                assert!(v <= prev, "{spec:?} x={x}");
                assert!(!v.is_nan());
                prev = v;
            }
        }
    }

    #[test]
    fn integral_examples() {
        let pareto = DistributionSpec::pareto(0.25).unwrap();
        let a = condition_b_integral(&pareto, 5, 1e6, default_x_max(0.25)).unwrap();
        assert!((a - 0.25).abs() < 5e-3, "{a}");
        let frechet = DistributionSpec::frechet(1.0).unwrap();
        let b = condition_b_integral(&frechet, 1, 1e6, default_x_max(1.0)).unwrap();
        assert!((b - 1.0).abs() < 5e-3, "{b}");
    }

    #[test]
    fn quadrature_matches_known_integrals() {
        let v = integrate(|u| Ok(u.exp()), 0.0, 3.0, 1e-10).unwrap();
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-9);
        let w = integrate(|u| Ok((-4.0 * u).exp()), 0.0, 20.0, 1e-10).unwrap();
        assert!((w - 0.25).abs() < 1e-9);
    }

    #[test]
    fn second_order_examples() {
        let frechet = DistributionSpec::frechet(0.25).unwrap();
        let s = second_order_curve(&frechet, 1, 2.0, 1e6).unwrap();
        assert!(rel(s, 0.5) < 0.01, "{s}");
        assert_eq!(second_order_curve(&frechet, 1, 1.0, 1e6).unwrap(), 0.0);
        let gev = DistributionSpec::gev(0.25).unwrap();
        let limit = (4f64.powf(-0.25) - 1.0) / -0.25;
        let g = second_order_curve(&gev, 1, 4.0, 1e8).unwrap();
        assert!(rel(g, limit) < 0.02, "{g} vs {limit}");
    }

    #[test]
    fn second_order_error_decays_with_rate() {
        let frechet = DistributionSpec::frechet(0.5).unwrap();
        let err = |t: f64| (second_order_curve(&frechet, 1, 3.0, t).unwrap() - 2.0 / 3.0).abs();
        let shrink = err(1e4) / err(1e3);
        // A~ decays by a factor of ten between the two thresholds.
        assert!(shrink > 0.05 && shrink < 0.2, "{shrink}");
    }

    #[test]
    fn block_tail_ratio_examples() {
        let burr = DistributionSpec::burr(0.25, -0.5).unwrap();
        let (q1, q2) = block_tail_second_order_ratio(&burr, 10, 2.0, 1e4).unwrap();
        assert!((q2 / q1 - 1.0).abs() < 0.05, "{q1} {q2}");
        let (p1, p2) = block_tail_second_order_ratio(&burr, 1, 2.0, 1e4).unwrap();
        assert_eq!(p2 / p1, 1.0);
        let pareto = DistributionSpec::pareto(0.25).unwrap();
        assert!(matches!(
            block_tail_second_order_ratio(&pareto, 1, 2.0, 1e4),
            Err(EvtError::DegenerateInput(_))
        ));
    }

    #[test]
    fn report_rows() {
        let pareto = DistributionSpec::pareto(0.25).unwrap();
        let rows = run_checks(&pareto, 10, 1e6, &[2.0]).unwrap();
        let b = rows
            .iter()
            .find(|r| r.check == "condition_b_ratio")
            .unwrap();
        assert!(b.rel_error < 1e-3);
        assert!(rows
            .iter()
            .all(|r| r.check != "block_tail_second_order_ratio"));
        assert!(rows.iter().any(|r| r.check == "condition_b_integral"));
    }
}
