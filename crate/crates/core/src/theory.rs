//! Closed-form symbol error analysis for BPSK over i.i.d. Rayleigh links.
//!
//! `alpha` and `beta` denote the magnitudes of the A-relay and B-relay
//! uplinks, `rho_*` average SNRs and `delta` the Rayleigh scale.

use statrs::function::erf::erfc;

use crate::error::{config, Result};

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn check_snr(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config(format!("{name} must be positive and finite, got {v}"))
    }
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=0.5).contains(&v) {
        Ok(())
    } else {
        config(format!("{name} must lie in [0, 0.5], got {v}"))
    }
}

/// End-to-end error of one direction given the relay error `p_r` and the
/// error `p_rb` of the relay-to-destination link.
pub fn end_to_end_ser(p_r: f64, p_rb: f64) -> f64 {
    1.0 - (1.0 - p_r) * (1.0 - p_rb) - p_r * p_rb
}

/// Instantaneous SER of the exchange, averaged over both directions.
pub fn instantaneous_ser_hdmf(p_r: f64, p_ra: f64, p_rb: f64) -> Result<f64> {
    check_prob("P_r", p_r)?;
    check_prob("P_ra", p_ra)?;
    check_prob("P_rb", p_rb)?;
    Ok(p_r + (0.5 - p_r) * (p_ra + p_rb))
}

/// Average BPSK error of a Rayleigh link with unit mean-square gain and average SNR `rho`.
pub fn avg_ser_downlink(rho: f64) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return config(format!("SNR must be non-negative, got {rho}"));
    }
    if rho.is_infinite() {
        return Ok(0.0);
    }
    Ok(0.5 * (1.0 - (rho / (rho + 1.0)).sqrt()))
}

/// Average probabilities that the relay forwards the XOR, A's data or B's data.
pub fn selection_probs_avg(rho_a: f64, rho_b: f64) -> Result<(f64, f64, f64)> {
    check_snr("rho_a", rho_a)?;
    check_snr("rho_b", rho_b)?;
    let (a, b) = (rho_a, rho_b);
    let p_abr = 2.0 * a / (2.0 * a + b) - a / (a + b) + 2.0 * b / (2.0 * b + a) - b / (a + b);
    let p_ar = a / (a + 2.0 * b);
    let p_br = b / (2.0 * a + b);
    Ok((p_abr, p_ar, p_br))
}

/// The two terms of the differential contribution, before subtraction.
pub fn avg_ser_dif_terms(rho_a: f64, rho_b: f64, delta: f64) -> Result<(f64, f64)> {
    check_snr("rho_a", rho_a)?;
    check_snr("rho_b", rho_b)?;
    check_snr("delta", delta)?;
    let d2 = delta * delta;
    let first = 2.0 * rho_a / (2.0 * rho_a + rho_b)
        * (1.0 - 1.0 / (1.0 + 1.0 / (2.0 * rho_a * d2) + 1.0 / (rho_b * d2)).sqrt());
    let second = rho_a / (rho_a + rho_b) * (1.0 - 1.0 / (1.0 + 1.0 / (rho_a * d2) + 1.0 / (rho_b * d2)).sqrt());
    Ok((first, second))
}

/// Differential-DMF contribution to the average relay SER.
pub fn avg_ser_dif(rho_a: f64, rho_b: f64, delta: f64) -> Result<f64> {
    let (first, second) = avg_ser_dif_terms(rho_a, rho_b, delta)?;
    Ok((first - second).clamp(0.0, 1.0))
}

/// The positive term and the (negative) lower-edge bound of the direct contribution.
pub fn avg_ser_dir_terms(rho_a: f64, rho_b: f64) -> Result<(f64, f64)> {
    check_snr("rho_a", rho_a)?;
    check_snr("rho_b", rho_b)?;
    let r = 2.0 * rho_b / rho_a;
    let q = q_function(r.sqrt());
    let first = 2.0 * rho_a / (2.0 * rho_b + rho_a) * q;
    let second = -2.0 / (1.0 + r) * q;
    Ok((first, second))
}

/// Direct-DMF contribution to the average relay SER, closed form (clamped at 0).
///
/// The lower-edge bound on the second term equals the first term in magnitude,
/// so this evaluates to zero up to rounding; see [`avg_ser_dir_exact`].
pub fn avg_ser_dir(rho_a: f64, rho_b: f64) -> Result<f64> {
    let (first, second) = avg_ser_dir_terms(rho_a, rho_b)?;
    Ok((first + second).clamp(0.0, 1.0))
}

/// Direct-DMF contribution with the second term integrated numerically
/// instead of bounded.
pub fn avg_ser_dir_exact(rho_a: f64, rho_b: f64) -> Result<f64> {
    let (first, _) = avg_ser_dir_terms(rho_a, rho_b)?;
    let t0 = (2.0 * rho_b / rho_a).sqrt();
    let second = -2.0 * simpson(|t| phi(t) / (1.0 + t * t), t0, t0 + 40.0, 40_000);
    Ok((first + second).clamp(0.0, 1.0))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Bounds on the instantaneous differential error for link magnitudes `alpha`, `beta`.
pub fn p_abr_bounds(alpha: f64, beta: f64, rho_a: f64, rho_b: f64) -> Result<(f64, f64)> {
    check_snr("rho_a", rho_a)?;
    check_snr("rho_b", rho_b)?;
    if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
        return config("channel magnitudes must be non-negative and finite");
    }
    let (sa, sb) = (alpha * alpha * rho_a, beta * beta * rho_b);
    let lower = q_function((2.0 * sa.min(sb)).sqrt());
    let upper = q_function((2.0 * sa).sqrt()) + q_function((2.0 * sb).sqrt());
    Ok((lower, upper))
}

/// Average SNRs of the four links and the Rayleigh scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub rho_a: f64,
    pub rho_b: f64,
    pub rho_ra: f64,
    pub rho_rb: f64,
    pub delta: f64,
}

impl LinkBudget {
    pub fn symmetric(rho: f64, delta: f64) -> Self {
        LinkBudget {
            rho_a: rho,
            rho_b: rho,
            rho_ra: rho,
            rho_rb: rho,
            delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerBreakdown {
    pub p_r: f64,
    pub p_dif: f64,
    pub p_dir: f64,
    pub p_dir_first: f64,
    pub p_dir_second: f64,
    pub p_ra: f64,
    pub p_rb: f64,
    pub p_hdmf: f64,
}

/// Average end-to-end SER of the exchange.
pub fn avg_ser_hdmf(b: &LinkBudget) -> Result<SerBreakdown> {
    check_snr("rho_ra", b.rho_ra)?;
    check_snr("rho_rb", b.rho_rb)?;
    let p_dif = avg_ser_dif(b.rho_a, b.rho_b, b.delta)?;
    let (p_dir_first, p_dir_second) = avg_ser_dir_terms(b.rho_a, b.rho_b)?;
    let p_dir = (p_dir_first + p_dir_second).clamp(0.0, 1.0);
    let p_r = (p_dif + p_dir).clamp(0.0, 0.5);
    let gain = 2.0 * b.delta * b.delta;
    let p_ra = avg_ser_downlink(gain * b.rho_ra)?;
    let p_rb = avg_ser_downlink(gain * b.rho_rb)?;
    Ok(SerBreakdown {
        p_r,
        p_dif,
        p_dir,
        p_dir_first,
        p_dir_second,
        p_ra,
        p_rb,
        p_hdmf: instantaneous_ser_hdmf(p_r, p_ra, p_rb)?,
    })
}
