//! Relay protocols: hybrid demodulate-forward and the three baselines.

use crate::channel::{check_n0, ChannelState};
use crate::error::{config, Error, Result};
use crate::llr::{decide_scheme, PacketLlrs, Scheme, User};
use crate::modem::{modulate, BitPacket, Constellation, SymbolPacket};

/// What the relay broadcasts for one packet.
#[derive(Debug, Clone, PartialEq)]
pub enum RelayDecision {
    /// Re-modulated hard bits. `scheme` is kept for statistics only; it is not signalled.
    Digital {
        scheme: Scheme,
        bits: BitPacket,
        x_r: SymbolPacket,
    },
    /// Scaled copy of the received superposition.
    Analog { gain: f64, x_r: SymbolPacket },
}

impl RelayDecision {
    pub fn x_r(&self) -> &SymbolPacket {
        match self {
            RelayDecision::Digital { x_r, .. } | RelayDecision::Analog { x_r, .. } => x_r,
        }
    }

    pub fn scheme(&self) -> Option<Scheme> {
        match self {
            RelayDecision::Digital { scheme, .. } => Some(*scheme),
            RelayDecision::Analog { .. } => None,
        }
    }
}

/// A relaying function. Implementations are registered by name in [`protocol_by_name`].
pub trait RelayProtocol: Send + Sync {
    fn name(&self) -> &'static str;
    fn relay(&self, y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision>;
}

fn forward(llrs: &PacketLlrs, scheme: Scheme, c: &Constellation) -> Result<RelayDecision> {
    let bits = llrs.hard_bits(scheme);
    let x_r = modulate(&bits, c)?;
    Ok(RelayDecision::Digital { scheme, bits, x_r })
}

/// Per-packet choice between direct and differential demodulation by packet-minimum LLR.
pub fn hdmf_relay(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision> {
    let llrs = PacketLlrs::compute(y_r, ch, c)?;
    let scheme = decide_scheme(&llrs.summary());
    forward(&llrs, scheme, c)
}

/// Always direct, on the user with the stronger instantaneous uplink (ties to A).
pub fn classic_dmf_relay(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision> {
    let user = if ch.h_ar.norm() >= ch.h_br.norm() { User::A } else { User::B };
    let llrs = PacketLlrs::compute(y_r, ch, c)?;
    forward(&llrs, Scheme::Direct(user), c)
}

/// Always differential (XOR mapping).
pub fn pnc_relay(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision> {
    let llrs = PacketLlrs::compute(y_r, ch, c)?;
    forward(&llrs, Scheme::Differential, c)
}

/// Amplification factor normalising the relay's average transmit power to
/// `power_budget`. `n0` may be zero for noise-free analysis.
pub fn anc_gain(ch: &ChannelState, n0: f64, symbol_energy: f64, power_budget: f64) -> Result<f64> {
    if !(power_budget > 0.0 && power_budget.is_finite()) {
        return config(format!("relay power budget must be positive, got {power_budget}"));
    }
    if n0.is_nan() || n0 < 0.0 {
        return config(format!("N0 must be non-negative, got {n0}"));
    }
    let rx = (ch.h_ar.norm_sqr() + ch.h_br.norm_sqr()) * symbol_energy + n0;
    if !(rx > 0.0 && rx.is_finite()) {
        return config("relay input power is zero");
    }
    Ok((power_budget / rx).sqrt())
}

/// Amplify-forward of the superposition with the analytic power normalisation.
pub fn anc_relay(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation, power_budget: f64) -> Result<RelayDecision> {
    check_n0(ch.n0)?;
    let gain = anc_gain(ch, ch.n0, c.symbol_energy(), power_budget)?;
    let x_r = SymbolPacket::new(y_r.symbols.iter().map(|&y| y * gain).collect(), y_r.modulation);
    Ok(RelayDecision::Analog { gain, x_r })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Hdmf;

#[derive(Debug, Clone, Copy, Default)]
pub struct ClassicDmf;

#[derive(Debug, Clone, Copy, Default)]
pub struct Pnc;

/// Amplify-forward. With no budget the relay transmits at the constellation's symbol energy.
#[derive(Debug, Clone, Copy, Default)]
pub struct Anc {
    pub power_budget: Option<f64>,
}

impl RelayProtocol for Hdmf {
    fn name(&self) -> &'static str {
        "hdmf"
    }
    fn relay(&self, y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision> {
        hdmf_relay(y_r, ch, c)
    }
}

impl RelayProtocol for ClassicDmf {
    fn name(&self) -> &'static str {
        "dmf"
    }
    fn relay(&self, y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision> {
        classic_dmf_relay(y_r, ch, c)
    }
}

impl RelayProtocol for Pnc {
    fn name(&self) -> &'static str {
        "pnc"
    }
    fn relay(&self, y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision> {
        pnc_relay(y_r, ch, c)
    }
}

impl RelayProtocol for Anc {
    fn name(&self) -> &'static str {
        "anc"
    }
    fn relay(&self, y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<RelayDecision> {
        anc_relay(y_r, ch, c, self.power_budget.unwrap_or_else(|| c.symbol_energy()))
    }
}

pub const PROTOCOL_NAMES: [&str; 4] = ["hdmf", "pnc", "dmf", "anc"];

pub fn protocol_by_name(name: &str) -> Result<Box<dyn RelayProtocol>> {
    match name.trim().to_ascii_lowercase().as_str() {
        "hdmf" => Ok(Box::new(Hdmf)),
        "pnc" => Ok(Box::new(Pnc)),
        "dmf" | "classic-dmf" => Ok(Box::new(ClassicDmf)),
        "anc" => Ok(Box::new(Anc::default())),
        other => Err(Error::Config(format!("unknown protocol '{other}'"))),
    }
}
