//! Packet-level simulation of complete two-way exchanges.
//!
//! All protocols at one operating point see the same payloads, fading and
//! noise samples, so their differences are not masked by sampling noise.

use rand::Rng;

use crate::channel::{awgn_sample, draw_channel, ChannelState, FadingConfig};
use crate::endnode::{anc_detect, blind_detect_bits, make_packet, payload, CrcConfig, Detection};
use crate::error::Result;
use crate::llr::{Scheme, User};
use crate::modem::{demodulate_packet, modulate, BitPacket, Constellation, Modulation, SymbolPacket, C64};
use crate::relay::{RelayDecision, RelayProtocol};

const NOISELESS_N0_SCALE: f64 = 1e-9;

/// One operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSpec {
    pub modulation: Modulation,
    pub symbols_per_packet: usize,
    pub ebn0_db: f64,
    pub fading: FadingConfig,
    pub noiseless: bool,
}

/// Counts for one protocol at one point. A delivery is one source packet
/// reaching the opposite node; a relay packet carries one or two deliveries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub relay_packets: u64,
    pub deliveries: u64,
    /// Deliveries that were discarded or whose payload was wrong (blind detection).
    pub packet_errors: u64,
    pub symbols: u64,
    /// Symbol errors with the destination told the relay scheme.
    pub symbol_errors: u64,
    pub direct_a: u64,
    pub direct_b: u64,
    pub differential: u64,
    pub analog: u64,
}

impl Tally {
    pub fn per(&self) -> f64 {
        ratio(self.packet_errors, self.deliveries)
    }

    pub fn ser(&self) -> f64 {
        ratio(self.symbol_errors, self.symbols)
    }

    fn record_scheme(&mut self, d: &RelayDecision) {
        match d.scheme() {
            Some(Scheme::Direct(User::A)) => self.direct_a += 1,
            Some(Scheme::Direct(User::B)) => self.direct_b += 1,
            Some(Scheme::Differential) => self.differential += 1,
            None => self.analog += 1,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

struct Source {
    frame: BitPacket,
    x: SymbolPacket,
}

fn random_source<R: Rng + ?Sized>(payload_bits: usize, c: &Constellation, crc: &CrcConfig, rng: &mut R) -> Result<Source> {
    let bits: Vec<u8> = (0..payload_bits).map(|_| rng.random_range(0..2u8)).collect();
    let frame = make_packet(&bits, crc)?;
    let x = modulate(&frame, c)?;
    Ok(Source { frame, x })
}

fn noise<R: Rng + ?Sized>(len: usize, n0: f64, off: bool, rng: &mut R) -> Vec<C64> {
    if off {
        vec![C64::new(0.0, 0.0); len]
    } else {
        (0..len).map(|_| awgn_sample(n0, rng)).collect()
    }
}

fn received(x: &SymbolPacket, h: C64, w: &[C64]) -> SymbolPacket {
    SymbolPacket::new(x.symbols.iter().zip(w).map(|(&s, &n)| h * s + n).collect(), x.modulation)
}

fn symbol_errors(a: &[u8], b: &[u8], k: usize) -> u64 {
    a.chunks(k).zip(b.chunks(k)).filter(|(x, y)| x != y).count() as u64
}

/// Destination-side view of one delivery.
struct Leg<'a> {
    src: &'a Source,
    own: &'a Source,
    h_down: C64,
    h_src_up: C64,
    h_own_up: C64,
    w: &'a [C64],
}

fn deliver(d: &RelayDecision, leg: &Leg<'_>, c: &Constellation, crc: &CrcConfig, t: &mut Tally) -> Result<()> {
    let y = received(d.x_r(), leg.h_down, leg.w);
    let k = c.bits_per_symbol();
    let (packet_ok, genie) = match d {
        RelayDecision::Digital { scheme, .. } => {
            let bits = demodulate_packet(&y, leg.h_down, c);
            let genie = if *scheme == Scheme::Differential {
                bits.xor(&leg.own.frame)?
            } else {
                bits.clone()
            };
            let ok = match blind_detect_bits(bits, &leg.own.frame, crc)? {
                Detection::Recovered { bits, .. } => payload(&bits) == payload(&leg.src.frame),
                Detection::Discard => false,
            };
            (ok, genie)
        }
        RelayDecision::Analog { gain, .. } => {
            let bits = anc_detect(&y, *gain, leg.h_down, leg.h_own_up, leg.h_src_up, &leg.own.x, c)?;
            (payload(&bits) == payload(&leg.src.frame), bits)
        }
    };
    t.deliveries += 1;
    t.packet_errors += u64::from(!packet_ok);
    t.symbols += leg.src.x.len() as u64;
    t.symbol_errors += symbol_errors(genie.bits(), leg.src.frame.bits(), k);
    Ok(())
}

/// Runs `packets` exchanges at one point for every protocol.
pub fn simulate_point<R: Rng + ?Sized>(
    spec: &PointSpec,
    protocols: &[Box<dyn RelayProtocol>],
    packets: u64,
    rng: &mut R,
) -> Result<Vec<Tally>> {
    let c = spec.modulation.constellation();
    let crc = CrcConfig::default();
    // Without noise the detectors see a vanishing N0, so their soft decisions
    // reduce to nearest-point decisions.
    let n0 = if spec.noiseless {
        c.bit_energy() * NOISELESS_N0_SCALE
    } else {
        c.n0_for_ebn0_db(spec.ebn0_db)
    };
    let m = spec.symbols_per_packet;
    let payload_bits = m * c.bits_per_symbol() - crate::endnode::CRC_BITS;
    let mut tallies = vec![Tally::default(); protocols.len()];
    for _ in 0..packets {
        let a = random_source(payload_bits, &c, &crc, rng)?;
        let b = random_source(payload_bits, &c, &crc, rng)?;
        let ch: ChannelState = draw_channel(&spec.fading, n0, rng)?;
        let w_r = noise(m, n0, spec.noiseless, rng);
        let w_a = noise(m, n0, spec.noiseless, rng);
        let w_b = noise(m, n0, spec.noiseless, rng);
        let y_r = SymbolPacket::new(
            (0..m)
                .map(|i| ch.h_ar * a.x.symbols[i] + ch.h_br * b.x.symbols[i] + w_r[i])
                .collect(),
            c.modulation(),
        );
        let to_b = Leg {
            src: &a,
            own: &b,
            h_down: ch.h_rb,
            h_src_up: ch.h_ar,
            h_own_up: ch.h_br,
            w: &w_b,
        };
        let to_a = Leg {
            src: &b,
            own: &a,
            h_down: ch.h_ra,
            h_src_up: ch.h_br,
            h_own_up: ch.h_ar,
            w: &w_a,
        };
        for (proto, t) in protocols.iter().zip(tallies.iter_mut()) {
            let d = proto.relay(&y_r, &ch, &c)?;
            t.relay_packets += 1;
            t.record_scheme(&d);
            let legs: &[&Leg<'_>] = match d.scheme() {
                Some(Scheme::Direct(User::A)) => &[&to_b],
                Some(Scheme::Direct(User::B)) => &[&to_a],
                _ => &[&to_b, &to_a],
            };
            for leg in legs {
                deliver(&d, leg, &c, &crc, t)?;
            }
        }
    }
    Ok(tallies)
}
