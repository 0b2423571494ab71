//! End-node behaviour: CRC framing, blind detection of the relay scheme and
//! recovery of the partner's data.

use crate::channel::check_n0;
use crate::error::{config, Error, Result};
use crate::modem::{demodulate_packet, BitPacket, Constellation, SymbolPacket, C64};

/// Width of the appended checksum in bits.
pub const CRC_BITS: usize = 16;

/// Non-reflected CRC-16 parameters. The default is CRC-16/CCITT-FALSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcConfig {
    pub poly: u16,
    pub init: u16,
}

impl Default for CrcConfig {
    fn default() -> Self {
        CrcConfig {
            poly: 0x1021,
            init: 0xFFFF,
        }
    }
}

impl CrcConfig {
    /// Checksum over a bit sequence, most significant bit first.
    pub fn checksum_bits(&self, bits: &[u8]) -> u16 {
        let mut reg = self.init;
        for &b in bits {
            let top = ((reg >> 15) as u8) ^ (b & 1);
            reg <<= 1;
            if top == 1 {
                reg ^= self.poly;
            }
        }
        reg
    }

    pub fn checksum_bytes(&self, bytes: &[u8]) -> u16 {
        let bits: Vec<u8> = bytes.iter().flat_map(|&byte| (0..8).rev().map(move |i| (byte >> i) & 1)).collect();
        self.checksum_bits(&bits)
    }
}

/// Appends the checksum of `payload` as the final 16 bits.
pub fn make_packet(payload: &[u8], crc: &CrcConfig) -> Result<BitPacket> {
    if payload.is_empty() {
        return Err(Error::InputShape("empty payload".into()));
    }
    let word = crc.checksum_bits(payload);
    let mut bits = payload.to_vec();
    bits.extend((0..CRC_BITS).rev().map(|i| ((word >> i) & 1) as u8));
    BitPacket::new(bits)
}

/// True when the trailing checksum matches the payload.
pub fn verify(packet: &[u8], crc: &CrcConfig) -> bool {
    if packet.len() <= CRC_BITS {
        return false;
    }
    let (payload, tail) = packet.split_at(packet.len() - CRC_BITS);
    let word = tail.iter().fold(0u16, |acc, &b| (acc << 1) | u16::from(b & 1));
    crc.checksum_bits(payload) == word
}

/// Payload part of a framed packet.
pub fn payload(packet: &BitPacket) -> &[u8] {
    let bits = packet.bits();
    &bits[..bits.len().saturating_sub(CRC_BITS)]
}

/// Relay scheme as inferred by the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectedScheme {
    Direct,
    Differential,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detection {
    /// Partner packet (including its checksum) and how it was obtained.
    Recovered { bits: BitPacket, scheme: DetectedScheme },
    /// Neither hypothesis passed the checksum.
    Discard,
}

/// Two CRC trials: the demodulated packet as is, then XORed with our own
/// previous packet.
pub fn blind_detect(
    y: &SymbolPacket,
    h: C64,
    n0: f64,
    c: &Constellation,
    own_prev: Option<&BitPacket>,
    crc: &CrcConfig,
) -> Result<Detection> {
    check_n0(n0)?;
    let own = own_prev.ok_or_else(|| Error::State("no packet was sent in the previous slot".into()))?;
    let bits = demodulate_packet(y, h, c);
    blind_detect_bits(bits, own, crc)
}

/// The CRC trial sequence on already demodulated bits.
pub fn blind_detect_bits(bits: BitPacket, own: &BitPacket, crc: &CrcConfig) -> Result<Detection> {
    if verify(bits.bits(), crc) {
        return Ok(Detection::Recovered {
            bits,
            scheme: DetectedScheme::Direct,
        });
    }
    let xored = bits.xor(own)?;
    if verify(xored.bits(), crc) {
        return Ok(Detection::Recovered {
            bits: xored,
            scheme: DetectedScheme::Differential,
        });
    }
    Ok(Detection::Discard)
}

/// Destination of an amplify-forward relay: removes its own contribution
/// `gain * h_down * h_self_up * x_own` and detects the partner through
/// `gain * h_down * h_partner_up`.
#[allow(clippy::too_many_arguments)]
pub fn anc_detect(
    y: &SymbolPacket,
    gain: f64,
    h_down: C64,
    h_self_up: C64,
    h_partner_up: C64,
    own: &SymbolPacket,
    c: &Constellation,
) -> Result<BitPacket> {
    if !(gain > 0.0 && gain.is_finite()) {
        return config(format!("amplification gain must be positive, got {gain}"));
    }
    if y.len() != own.len() {
        return Err(Error::InputShape(format!(
            "received {} symbols but own packet has {}",
            y.len(),
            own.len()
        )));
    }
    let loop_h = h_down * h_self_up * gain;
    let eff = h_down * h_partner_up * gain;
    let cleaned = SymbolPacket::new(
        y.symbols.iter().zip(&own.symbols).map(|(&s, &x)| s - loop_h * x).collect(),
        y.modulation,
    );
    Ok(demodulate_packet(&cleaned, eff, c))
}

/// A source/destination session. Holds the packet sent in the previous slot.
#[derive(Debug, Clone, Default)]
pub struct NodeState {
    crc: CrcConfig,
    last_sent: Option<BitPacket>,
}

impl NodeState {
    pub fn new(crc: CrcConfig) -> Self {
        NodeState { crc, last_sent: None }
    }

    pub fn crc(&self) -> &CrcConfig {
        &self.crc
    }

    /// Frames `payload`, remembers the frame and returns it for transmission.
    pub fn transmit(&mut self, payload: &[u8]) -> Result<BitPacket> {
        let pkt = make_packet(payload, &self.crc)?;
        self.last_sent = Some(pkt.clone());
        Ok(pkt)
    }

    pub fn last_sent(&self) -> Option<&BitPacket> {
        self.last_sent.as_ref()
    }

    pub fn receive(&self, y: &SymbolPacket, h: C64, n0: f64, c: &Constellation) -> Result<Detection> {
        blind_detect(y, h, n0, c, self.last_sent.as_ref(), &self.crc)
    }
}
