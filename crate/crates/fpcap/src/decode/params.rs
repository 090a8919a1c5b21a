//! Moment generating functions of the score difference and the
//! threshold/length construction built on them.

use crate::channels::CollusionChannel;
use crate::error::{Error, Result};
use crate::prob::{log_binom_pmf, CompensatedSum, Probability};

/// Threshold and code length for a target error pair, together with the
/// quantities they were derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParams {
    /// ln(1/eps2) / eta; must be below 1 for the construction to exist.
    pub gamma: f64,
    /// Accusation threshold in nats.
    pub eta: f64,
    /// Code length, rounded up to an integer.
    pub ell: u64,
    /// Unrounded code length; ell = ceil(ell_raw).
    pub ell_raw: f64,
    /// Moment value at the evaluation point t = 1 - sqrt(gamma).
    pub m_at_point: f64,
}

/// E[(P_innocent / P_guilty)^(1-t) ... ] in the per-user sense: the moment
/// sum over the four (x, y) cells of innocent^(1-t) * guilty^t. Terms with
/// zero guilty mass contribute 0 for t > 0 and are rejected for t <= 0.
/// Each term is assembled in log space before exponentiation.
pub fn moment_fn(theta: &CollusionChannel, p: Probability, t: f64) -> Result<f64> {
    let pv = p.require_interior("bias p")?;
    if t.is_nan() {
        return Err(Error::InvalidInput("moment point t must be a number".into()));
    }
    let m = theta.marginals(p)?;
    let (a, a0, a1) = (m.a.value(), m.a0.value(), m.a1.value());
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidInput(format!(
            "moment function needs an interior output marginal, got a = {a}"
        )));
    }
    // Cells (x, y): innocent output law is Bernoulli(a) independent of x,
    // guilty law conditions on x through a1/a0. The P(x) factor carries
    // exponent (1-t) + t = 1 and multiplies in exactly.
    let cells = [
        (pv, a, a1),
        (pv, 1.0 - a, 1.0 - a1),
        (1.0 - pv, a, a0),
        (1.0 - pv, 1.0 - a, 1.0 - a0),
    ];
    let mut acc = CompensatedSum::default();
    for (px, iy, gy) in cells {
        if gy == 0.0 {
            if t <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "moment function diverges at t = {t}: zero-mass guilty cell"
                )));
            }
            continue;
        }
        acc.add((px.ln() + (1.0 - t) * iy.ln() + t * gy.ln()).exp());
    }
    Ok(acc.total())
}

/// Tuple variant of [`moment_fn`]: the sum runs over (z, y) with the
/// binomial weight of z carrying through at exponent 1, innocent law
/// Bernoulli(a) and guilty law Bernoulli(theta_z).
pub fn joint_moment_fn(theta: &CollusionChannel, p: Probability, t: f64) -> Result<f64> {
    p.require_interior("bias p")?;
    if t.is_nan() {
        return Err(Error::InvalidInput("moment point t must be a number".into()));
    }
    let m = theta.marginals(p)?;
    let a = m.a.value();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidInput(format!(
            "moment function needs an interior output marginal, got a = {a}"
        )));
    }
    let c = theta.c();
    let mut acc = CompensatedSum::default();
    for z in 0..=c {
        let lw = log_binom_pmf(c as u64, z as u64, p)?;
        if lw == f64::NEG_INFINITY {
            continue;
        }
        let th = theta.theta(z);
        for (iy, gy) in [(a, th), (1.0 - a, 1.0 - th)] {
            if gy == 0.0 {
                if t <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "moment function diverges at t = {t}: zero-mass guilty cell"
                    )));
                }
                continue;
            }
            acc.add((lw + (1.0 - t) * iy.ln() + t * gy.ln()).exp());
        }
    }
    Ok(acc.total())
}

fn build_params(eta: f64, eps2: f64, moment: impl FnOnce(f64) -> Result<f64>) -> Result<SchemeParams> {
    let gamma = (1.0 / eps2).ln() / eta;
    if gamma >= 1.0 {
        return Err(Error::GammaTooLarge { gamma });
    }
    let beta = gamma.sqrt();
    let m_at_point = moment(1.0 - beta)?;
    if !(m_at_point > 0.0 && m_at_point < 1.0) {
        return Err(Error::InvalidInput(format!(
            "moment value {m_at_point} at t = 1 - sqrt(gamma) must lie in (0, 1); \
             the score distribution is degenerate"
        )));
    }
    let ell_raw = beta * (1.0 + beta) * eta / -m_at_point.ln();
    Ok(SchemeParams {
        gamma,
        eta,
        ell: ell_raw.ceil() as u64,
        ell_raw,
        m_at_point,
    })
}

/// Threshold eta = ln(n/eps1) and length for the per-user decoder matched to
/// (theta, p), sized so false positives stay under eps1 across n users and
/// the false negative rate under eps2.
pub fn scheme_params_simple(
    n: usize,
    eps1: Probability,
    eps2: Probability,
    theta: &CollusionChannel,
    p: Probability,
) -> Result<SchemeParams> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 users".into()));
    }
    let e1 = eps1.require_interior("eps1")?;
    let e2 = eps2.require_interior("eps2")?;
    let eta = (n as f64 / e1).ln();
    build_params(eta, e2, |t| moment_fn(theta, p, t))
}

/// Tuple-decoder variant: eta = ln(n^c/eps1) = c ln n + ln(1/eps1), moments
/// from [`joint_moment_fn`]. The channel must match the declared c.
pub fn scheme_params_joint(
    n: usize,
    c: usize,
    eps1: Probability,
    eps2: Probability,
    theta: &CollusionChannel,
    p: Probability,
) -> Result<SchemeParams> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 users".into()));
    }
    if theta.c() != c {
        return Err(Error::InvalidInput(format!(
            "channel is for c = {} but the decoder expects c = {c}",
            theta.c()
        )));
    }
    let e1 = eps1.require_interior("eps1")?;
    let e2 = eps2.require_interior("eps2")?;
    let eta = c as f64 * (n as f64).ln() + (1.0 / e1).ln();
    build_params(eta, e2, |t| joint_moment_fn(theta, p, t))
}
