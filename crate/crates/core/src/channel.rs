//! Block fading, AWGN and the two phases of a two-way relay exchange.
//!
//! Uplink (multiple access): `y_r = h_AR x_a + h_BR x_b + w_r`.
//! Downlink (broadcast): `y_a = h_RA x_r + w_a`, `y_b = h_RB x_r + w_b`.
//! Noise is circular complex Gaussian with variance N0/2 per real dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{config, Error, Result};
use crate::modem::{SymbolPacket, C64};

/// Default Rayleigh scale; gives unit mean-square gain (E|h|^2 = 2 delta^2 = 1).
pub const UNIT_POWER_DELTA: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Coefficients for one packet duration plus the noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    pub h_ar: C64,
    pub h_br: C64,
    pub h_ra: C64,
    pub h_rb: C64,
    pub n0: f64,
}

impl ChannelState {
    pub fn new(h_ar: C64, h_br: C64, h_ra: C64, h_rb: C64, n0: f64) -> Result<Self> {
        let hs = [h_ar, h_br, h_ra, h_rb];
        if hs.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return config("channel coefficients must be finite");
        }
        check_n0(n0)?;
        Ok(ChannelState {
            h_ar,
            h_br,
            h_ra,
            h_rb,
            n0,
        })
    }

    /// Reciprocal links: h_RA = h_AR and h_RB = h_BR.
    pub fn reciprocal(h_ar: C64, h_br: C64, n0: f64) -> Result<Self> {
        Self::new(h_ar, h_br, h_ar, h_br, n0)
    }
}

pub(crate) fn check_n0(n0: f64) -> Result<()> {
    if n0 > 0.0 && n0.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("N0 must be positive and finite, got {n0}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// Rayleigh magnitudes with scale `delta`, uniform phases, redrawn per packet.
    RayleighBlock { delta: f64 },
    /// Deterministic real coefficients of base magnitude `gain`.
    FixedGain { gain: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingConfig {
    pub model: FadingModel,
    /// log10(E|h_BR| / E|h_AR|); the ratio is split evenly between the two links.
    pub gain_ratio_log10: f64,
    pub reciprocal: bool,
}

impl FadingConfig {
    pub fn rayleigh(delta: f64, gain_ratio_log10: f64) -> Self {
        FadingConfig {
            model: FadingModel::RayleighBlock { delta },
            gain_ratio_log10,
            reciprocal: true,
        }
    }

    pub fn fixed(gain: f64, gain_ratio_log10: f64) -> Self {
        FadingConfig {
            model: FadingModel::FixedGain { gain },
            gain_ratio_log10,
            reciprocal: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.model {
            FadingModel::RayleighBlock { delta } if !(delta > 0.0 && delta.is_finite()) => {
                config(format!("Rayleigh scale must be positive, got {delta}"))
            }
            FadingModel::FixedGain { gain } if !gain.is_finite() => {
                config(format!("fixed gain must be finite, got {gain}"))
            }
            _ if !self.gain_ratio_log10.is_finite() => config("gain ratio must be finite"),
            _ => Ok(()),
        }
    }

    /// Magnitude multipliers for the A side and the B side.
    fn side_scales(&self) -> (f64, f64) {
        let half = self.gain_ratio_log10 / 2.0;
        (10f64.powf(-half), 10f64.powf(half))
    }
}

fn rayleigh_coefficient<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * delta
}

/// Draws the coefficients for one packet.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &FadingConfig, n0: f64, rng: &mut R) -> Result<ChannelState> {
    cfg.validate()?;
    let (sa, sb) = cfg.side_scales();
    match cfg.model {
        FadingModel::FixedGain { gain } => {
            let (ha, hb) = (C64::new(gain * sa, 0.0), C64::new(gain * sb, 0.0));
            ChannelState::new(ha, hb, ha, hb, n0)
        }
        FadingModel::RayleighBlock { delta } => {
            let h_ar = rayleigh_coefficient(delta, rng) * sa;
            let h_br = rayleigh_coefficient(delta, rng) * sb;
            if cfg.reciprocal {
                ChannelState::reciprocal(h_ar, h_br, n0)
            } else {
                let h_ra = rayleigh_coefficient(delta, rng) * sa;
                let h_rb = rayleigh_coefficient(delta, rng) * sb;
                ChannelState::new(h_ar, h_br, h_ra, h_rb, n0)
            }
        }
    }
}

/// One sample of circular complex Gaussian noise with total variance `n0`.
#[inline]
pub fn awgn_sample<R: Rng + ?Sized>(n0: f64, rng: &mut R) -> C64 {
    let sigma = (n0 / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * sigma, im * sigma)
}

fn check_lengths(a: &SymbolPacket, b: &SymbolPacket) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InputShape(format!(
            "uplink packets have {} and {} symbols",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Noise-free superposition at the relay.
pub fn mac_superpose(x_a: &SymbolPacket, x_b: &SymbolPacket, ch: &ChannelState) -> Result<SymbolPacket> {
    check_lengths(x_a, x_b)?;
    let symbols = x_a
        .symbols
        .iter()
        .zip(&x_b.symbols)
        .map(|(&a, &b)| ch.h_ar * a + ch.h_br * b)
        .collect();
    Ok(SymbolPacket::new(symbols, x_a.modulation))
}

/// Multiple access phase with AWGN of level `ch.n0`.
pub fn mac_phase<R: Rng + ?Sized>(
    x_a: &SymbolPacket,
    x_b: &SymbolPacket,
    ch: &ChannelState,
    rng: &mut R,
) -> Result<SymbolPacket> {
    check_n0(ch.n0)?;
    let mut y = mac_superpose(x_a, x_b, ch)?;
    for s in &mut y.symbols {
        *s += awgn_sample(ch.n0, rng);
    }
    Ok(y)
}

/// Noise-free single link.
pub fn bc_transmit(x_r: &SymbolPacket, h: C64) -> SymbolPacket {
    SymbolPacket::new(x_r.symbols.iter().map(|&x| h * x).collect(), x_r.modulation)
}

/// Broadcast phase towards one destination.
pub fn bc_phase<R: Rng + ?Sized>(x_r: &SymbolPacket, h: C64, n0: f64, rng: &mut R) -> Result<SymbolPacket> {
    check_n0(n0)?;
    let mut y = bc_transmit(x_r, h);
    for s in &mut y.symbols {
        *s += awgn_sample(n0, rng);
    }
    Ok(y)
}

/// Independent, reproducible generator for stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::Modulation;

    fn pkt(v: &[C64]) -> SymbolPacket {
        SymbolPacket::new(v.to_vec(), Modulation::Qpsk)
    }

    #[test]
    fn fixed_gain_is_deterministic() {
        let mut rng = stream_rng(1, 0);
        let ch = draw_channel(&FadingConfig::fixed(1.0, 0.0), 0.1, &mut rng).unwrap();
        assert_eq!(ch.h_ar, C64::new(1.0, 0.0));
        assert_eq!(ch.h_br, C64::new(1.0, 0.0));

        let ch = draw_channel(&FadingConfig::fixed(1.0, 0.3), 0.1, &mut rng).unwrap();
        let ratio = ch.h_br.norm() / ch.h_ar.norm();
        assert!((ratio - 10f64.powf(0.3)).abs() < 1e-12);
        assert!((ratio - 1.995).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_scale() {
        let mut rng = stream_rng(1, 0);
        assert!(draw_channel(&FadingConfig::rayleigh(0.0, 0.0), 0.1, &mut rng).is_err());
        assert!(draw_channel(&FadingConfig::rayleigh(-1.0, 0.0), 0.1, &mut rng).is_err());
        assert!(draw_channel(&FadingConfig::rayleigh(1.0, 0.0), 0.0, &mut rng).is_err());
    }

    #[test]
    fn reciprocity_flag() {
        let mut rng = stream_rng(9, 0);
        let mut cfg = FadingConfig::rayleigh(1.0, 0.2);
        let ch = draw_channel(&cfg, 0.1, &mut rng).unwrap();
        assert_eq!((ch.h_ra, ch.h_rb), (ch.h_ar, ch.h_br));
        cfg.reciprocal = false;
        let ch = draw_channel(&cfg, 0.1, &mut rng).unwrap();
        assert_ne!(ch.h_ra, ch.h_ar);
    }

    #[test]
    fn rayleigh_mean_magnitude() {
        let mut rng = stream_rng(2, 0);
        let cfg = FadingConfig::rayleigh(1.0, 0.0);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| draw_channel(&cfg, 1.0, &mut rng).unwrap().h_ar.norm())
            .sum::<f64>()
            / n as f64;
        assert!((mean - (std::f64::consts::PI / 2.0).sqrt()).abs() < 0.01, "{mean}");
    }

    #[test]
    fn rayleigh_ks_distance() {
        let delta = 0.8;
        let mut rng = stream_rng(3, 0);
        let cfg = FadingConfig::rayleigh(delta, 0.0);
        let n = 100_000;
        let mut mags: Vec<f64> = (0..n)
            .map(|_| draw_channel(&cfg, 1.0, &mut rng).unwrap().h_br.norm())
            .collect();
        mags.sort_by(f64::total_cmp);
        let cdf = |x: f64| 1.0 - (-x * x / (2.0 * delta * delta)).exp();
        let ks = mags
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn noiseless_superposition() {
        let one = C64::new(1.0, 0.0);
        let ch = ChannelState::reciprocal(one, one, 0.1).unwrap();
        let q = C64::new(1.0, 1.0);
        let y = mac_superpose(&pkt(&[q]), &pkt(&[q]), &ch).unwrap();
        assert_eq!(y.symbols, vec![C64::new(2.0, 2.0)]);
        let y = mac_superpose(&pkt(&[q]), &pkt(&[-q]), &ch).unwrap();
        assert_eq!(y.symbols, vec![C64::new(0.0, 0.0)]);
        assert!(matches!(
            mac_superpose(&pkt(&[q]), &pkt(&[q, q]), &ch),
            Err(Error::InputShape(_))
        ));
    }

    #[test]
    fn noiseless_broadcast() {
        let x = pkt(&[C64::new(1.0, 0.0)]);
        assert_eq!(bc_transmit(&x, C64::new(1.0, 0.0)), x);
        assert_eq!(bc_transmit(&x, C64::i()).symbols, vec![C64::i()]);
    }

    #[test]
    fn noise_moments() {
        let n0 = 0.37;
        let n = 1_000_000;
        let ha = C64::new(0.6, -0.2);
        let hb = C64::new(-0.1, 0.9);
        let ch = ChannelState::reciprocal(ha, hb, n0).unwrap();
        let xa = pkt(&vec![C64::new(1.0, 1.0); n]);
        let xb = pkt(&vec![C64::new(-1.0, 1.0); n]);
        let mut rng = stream_rng(4, 0);
        let y = mac_phase(&xa, &xb, &ch, &mut rng).unwrap();
        let clean = ha * xa.symbols[0] + hb * xb.symbols[0];
        let w: Vec<C64> = y.symbols.iter().map(|s| s - clean).collect();
        let mean = w.iter().sum::<C64>() / n as f64;
        let var = w.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / n as f64;
        assert!((var / n0 - 1.0).abs() < 0.02, "{var}");
        let sigma = (n0 / 2.0).sqrt();
        let bound = 3.0 * sigma / (n as f64).sqrt();
        assert!(mean.re.abs() < bound && mean.im.abs() < bound);

        let y = bc_phase(&xa, C64::i(), n0, &mut rng).unwrap();
        let var = y
            .symbols
            .iter()
            .map(|s| (s - C64::i() * xa.symbols[0]).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((var / n0 - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(5, 1).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream_rng(5, 1).random()).collect();
        assert_eq!(a, b);
        let mut r1 = stream_rng(5, 1);
        let mut r2 = stream_rng(5, 2);
        assert_ne!(r1.random::<u64>(), r2.random::<u64>());
    }
}
