//! Constellations, Gray bit mapping and single-user maximum likelihood detection.
//!
//! Bits inside a symbol are ordered first-to-last; the first bit is the most
//! significant bit of the integer label. For QPSK the first bit rides on the
//! in-phase sign and the second on the quadrature sign (bit 1 maps to the
//! positive half-axis), which gives the Gray table
//!
//! | point  | bits |
//! |--------|------|
//! | 1+i    | 11   |
//! | -1+i   | 01   |
//! | -1-i   | 00   |
//! | 1-i    | 10   |

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Bpsk,
    Qpsk,
}

impl Modulation {
    pub fn constellation(self) -> Constellation {
        match self {
            Modulation::Bpsk => Constellation::bpsk(),
            Modulation::Qpsk => Constellation::qpsk(),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            other => Err(Error::Config(format!("unknown modulation `{other}`"))),
        }
    }
}

/// A finite constellation with a bijective Gray labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    bits_per_symbol: usize,
    points: Vec<C64>,
    /// `labels[i]` is the bit pattern carried by `points[i]`.
    labels: Vec<usize>,
    /// Inverse of `labels`.
    index_of_label: Vec<usize>,
}

impl Constellation {
    /// Antipodal BPSK: bit 0 -> -1, bit 1 -> +1.
    pub fn bpsk() -> Self {
        Self::from_table(
            Modulation::Bpsk,
            1,
            vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)],
            vec![0b0, 0b1],
        )
    }

    pub fn qpsk() -> Self {
        Self::from_table(
            Modulation::Qpsk,
            2,
            vec![
                C64::new(1.0, 1.0),
                C64::new(-1.0, 1.0),
                C64::new(-1.0, -1.0),
                C64::new(1.0, -1.0),
            ],
            vec![0b11, 0b01, 0b00, 0b10],
        )
    }

    fn from_table(
        modulation: Modulation,
        bits_per_symbol: usize,
        points: Vec<C64>,
        labels: Vec<usize>,
    ) -> Self {
        debug_assert_eq!(points.len(), 1 << bits_per_symbol);
        let mut index_of_label = vec![usize::MAX; points.len()];
        for (i, &l) in labels.iter().enumerate() {
            index_of_label[l] = i;
        }
        debug_assert!(index_of_label.iter().all(|&i| i != usize::MAX));
        Constellation {
            modulation,
            bits_per_symbol,
            points,
            labels,
            index_of_label,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Bits per symbol (K).
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Number of points, 2^K.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> C64 {
        self.points[index]
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn index_of_label(&self, label: usize) -> usize {
        self.index_of_label[label]
    }

    /// Bit `k` (0 = first) of the label carried by point `index`.
    #[inline]
    pub fn bit(&self, index: usize, k: usize) -> u8 {
        ((self.labels[index] >> (self.bits_per_symbol - 1 - k)) & 1) as u8
    }

    /// Bits of point `index`, first bit first.
    pub fn bits_of(&self, index: usize) -> Vec<u8> {
        (0..self.bits_per_symbol).map(|k| self.bit(index, k)).collect()
    }

    /// Average symbol energy, taken from the table as-is (QPSK: 2).
    pub fn symbol_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    pub fn bit_energy(&self) -> f64 {
        self.symbol_energy() / self.bits_per_symbol as f64
    }

    /// Noise spectral density for a given Eb/N0 in dB.
    pub fn n0_for_ebn0_db(&self, ebn0_db: f64) -> f64 {
        self.bit_energy() / 10f64.powf(ebn0_db / 10.0)
    }

    /// Index of the point closest to `y / h`; ties go to the lowest index.
    #[inline]
    pub fn nearest(&self, y: C64, h: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &p) in self.points.iter().enumerate() {
            let d = (y - h * p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Bit view of a packet. Values are 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitPacket {
    bits: Vec<u8>,
}

impl BitPacket {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InputShape(format!("bit value {b} is not 0 or 1")));
        }
        Ok(BitPacket { bits })
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        BitPacket { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bitwise XOR with a packet of the same length.
    pub fn xor(&self, other: &BitPacket) -> Result<BitPacket> {
        if self.len() != other.len() {
            return Err(Error::InputShape(format!(
                "xor of packets with {} and {} bits",
                self.len(),
                other.len()
            )));
        }
        Ok(BitPacket {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        })
    }

    /// Number of positions where the two packets differ (over the common prefix).
    pub fn hamming(&self, other: &BitPacket) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}

/// Baseband samples of one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPacket {
    pub symbols: Vec<C64>,
    pub modulation: Modulation,
}

impl SymbolPacket {
    pub fn new(symbols: Vec<C64>, modulation: Modulation) -> Self {
        SymbolPacket {
            symbols,
            modulation,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Maps `bits` onto constellation points, K bits per symbol.
pub fn modulate(bits: &BitPacket, c: &Constellation) -> Result<SymbolPacket> {
    let k = c.bits_per_symbol();
    if bits.is_empty() || !bits.len().is_multiple_of(k) {
        return Err(Error::InputShape(format!(
            "{} bits cannot be split into {k}-bit symbols",
            bits.len()
        )));
    }
    let symbols = bits
        .bits()
        .chunks_exact(k)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            c.point(c.index_of_label(label))
        })
        .collect();
    Ok(SymbolPacket::new(symbols, c.modulation()))
}

/// Maximum likelihood detection of one symbol through a known channel `h`.
///
/// With equiprobable points and circular Gaussian noise the likelihood is
/// monotone in `|y - h x|`, so this is a nearest-neighbour search. Ties go
/// to the lowest constellation index.
pub fn demodulate_ml(y: C64, h: C64, n0: f64, c: &Constellation) -> Result<(C64, Vec<u8>)> {
    if n0.is_nan() || n0 <= 0.0 {
        return Err(Error::Config(format!("N0 must be positive, got {n0}")));
    }
    let i = c.nearest(y, h);
    Ok((c.point(i), c.bits_of(i)))
}

/// Hard ML detection of a whole packet, returning the bit view.
pub fn demodulate_packet(y: &SymbolPacket, h: C64, c: &Constellation) -> BitPacket {
    let k = c.bits_per_symbol();
    let mut bits = Vec::with_capacity(y.len() * k);
    for &s in &y.symbols {
        let i = c.nearest(s, h);
        bits.extend((0..k).map(|b| c.bit(i, b)));
    }
    BitPacket::from_bits_unchecked(bits)
}
