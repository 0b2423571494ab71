//! Soft demodulation of the superposed uplink signal.
//!
//! For every received sample the relay evaluates the Gaussian metric of all
//! `2^K x 2^K` hypotheses `(x_a, x_b)` once and derives three families of
//! per-bit log-likelihood ratios from them:
//!
//! * direct for user A: bit `k` of `x_a` is 1 versus 0, `x_b` marginalised;
//! * direct for user B: the same with roles swapped;
//! * differential: bit `k` of `x_a` and `x_b` differ versus agree.
//!
//! Positive values favour bit 1. Mixtures are accumulated with log-sum-exp.

use crate::channel::{check_n0, ChannelState};
use crate::error::{Error, Result};
use crate::modem::{BitPacket, Constellation, SymbolPacket, C64};

/// Guard applied to every LLR. It only exists to keep values finite; it is far
/// above anything a double-precision metric difference can reach at the
/// simulated SNRs, so packet minima never saturate.
pub const L_MAX: f64 = 1e12;

/// Largest supported bits-per-symbol.
pub const MAX_BITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum User {
    A,
    B,
}

impl User {
    pub fn other(self) -> User {
        match self {
            User::A => User::B,
            User::B => User::A,
        }
    }
}

/// Relay processing scheme for one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Direct(User),
    Differential,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Direct(User::A) => "direct-a",
            Scheme::Direct(User::B) => "direct-b",
            Scheme::Differential => "differential",
        })
    }
}

/// One soft bit decision, located within its packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitLlr {
    pub value: f64,
    pub bit_index: usize,
    pub symbol_index: usize,
}

impl BitLlr {
    pub fn hard_bit(&self) -> u8 {
        hard(self.value)
    }
}

#[inline]
fn hard(v: f64) -> u8 {
    u8::from(v >= 0.0)
}

#[inline]
fn clamp(v: f64) -> f64 {
    v.clamp(-L_MAX, L_MAX)
}

/// Running log-sum-exp accumulator.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    const EMPTY: Lse = Lse {
        max: f64::NEG_INFINITY,
        sum: 0.0,
    };

    #[inline]
    fn push(&mut self, x: f64) {
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    #[inline]
    fn value(self) -> f64 {
        self.max + self.sum.ln()
    }
}

#[inline]
fn ratio(one: Lse, zero: Lse) -> f64 {
    clamp(one.value() - zero.value())
}

/// Per-bit LLRs of a single received sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolLlrs {
    pub bits: usize,
    pub dir_a: [f64; MAX_BITS],
    pub dir_b: [f64; MAX_BITS],
    pub dif: [f64; MAX_BITS],
}

impl SymbolLlrs {
    pub fn direct(&self, user: User) -> &[f64] {
        match user {
            User::A => &self.dir_a[..self.bits],
            User::B => &self.dir_b[..self.bits],
        }
    }

    pub fn differential(&self) -> &[f64] {
        &self.dif[..self.bits]
    }
}

/// All three LLR families for one sample. `n0` must already be validated.
pub(crate) fn symbol_llrs(y: C64, h_ar: C64, h_br: C64, n0: f64, c: &Constellation) -> SymbolLlrs {
    let kb = c.bits_per_symbol();
    let pts = c.points();
    let mut a1 = [Lse::EMPTY; MAX_BITS];
    let mut a0 = [Lse::EMPTY; MAX_BITS];
    let mut b1 = [Lse::EMPTY; MAX_BITS];
    let mut b0 = [Lse::EMPTY; MAX_BITS];
    let mut d1 = [Lse::EMPTY; MAX_BITS];
    let mut d0 = [Lse::EMPTY; MAX_BITS];
    for (i, &xa) in pts.iter().enumerate() {
        let ya = y - h_ar * xa;
        for (j, &xb) in pts.iter().enumerate() {
            let metric = -(ya - h_br * xb).norm_sqr() / n0;
            for k in 0..kb {
                let (ba, bb) = (c.bit(i, k), c.bit(j, k));
                if ba == 1 { a1[k].push(metric) } else { a0[k].push(metric) }
                if bb == 1 { b1[k].push(metric) } else { b0[k].push(metric) }
                if ba != bb { d1[k].push(metric) } else { d0[k].push(metric) }
            }
        }
    }
    let mut out = SymbolLlrs {
        bits: kb,
        dir_a: [0.0; MAX_BITS],
        dir_b: [0.0; MAX_BITS],
        dif: [0.0; MAX_BITS],
    };
    for k in 0..kb {
        out.dir_a[k] = ratio(a1[k], a0[k]);
        out.dir_b[k] = ratio(b1[k], b0[k]);
        out.dif[k] = ratio(d1[k], d0[k]);
    }
    out
}

fn check_bit_index(k: usize, c: &Constellation) -> Result<()> {
    if k < c.bits_per_symbol() {
        Ok(())
    } else {
        Err(Error::InputShape(format!(
            "bit index {k} out of range for {}",
            c.modulation()
        )))
    }
}

/// Direct LLR of bit `k` of the user received through `h_self`, the other
/// user's symbol being unknown interference through `h_other`.
pub fn llr_direct_bit(y: C64, h_self: C64, h_other: C64, n0: f64, c: &Constellation, k: usize) -> Result<f64> {
    check_n0(n0)?;
    check_bit_index(k, c)?;
    Ok(symbol_llrs(y, h_self, h_other, n0, c).dir_a[k])
}

/// Differential LLR of bit `k`: positive when the two users' bits most likely differ.
pub fn llr_diff_bit(y: C64, h_ar: C64, h_br: C64, n0: f64, c: &Constellation, k: usize) -> Result<f64> {
    check_n0(n0)?;
    check_bit_index(k, c)?;
    Ok(symbol_llrs(y, h_ar, h_br, n0, c).dif[k])
}

/// Per-bit LLRs for a whole received packet, laid out symbol-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketLlrs {
    bits_per_symbol: usize,
    dir_a: Vec<f64>,
    dir_b: Vec<f64>,
    dif: Vec<f64>,
}

impl PacketLlrs {
    pub fn compute(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<Self> {
        check_n0(ch.n0)?;
        if y_r.is_empty() {
            return Err(Error::InputShape("empty packet".into()));
        }
        let kb = c.bits_per_symbol();
        let n = y_r.len() * kb;
        let mut out = PacketLlrs {
            bits_per_symbol: kb,
            dir_a: Vec::with_capacity(n),
            dir_b: Vec::with_capacity(n),
            dif: Vec::with_capacity(n),
        };
        for &y in &y_r.symbols {
            let s = symbol_llrs(y, ch.h_ar, ch.h_br, ch.n0, c);
            out.dir_a.extend_from_slice(s.direct(User::A));
            out.dir_b.extend_from_slice(s.direct(User::B));
            out.dif.extend_from_slice(s.differential());
        }
        Ok(out)
    }

    pub fn values(&self, scheme: Scheme) -> &[f64] {
        match scheme {
            Scheme::Direct(User::A) => &self.dir_a,
            Scheme::Direct(User::B) => &self.dir_b,
            Scheme::Differential => &self.dif,
        }
    }

    pub fn bit_llrs(&self, scheme: Scheme) -> Vec<BitLlr> {
        let kb = self.bits_per_symbol;
        self.values(scheme)
            .iter()
            .enumerate()
            .map(|(i, &value)| BitLlr {
                value,
                bit_index: i % kb,
                symbol_index: i / kb,
            })
            .collect()
    }

    /// Hard decisions: bit 1 iff LLR >= 0.
    pub fn hard_bits(&self, scheme: Scheme) -> BitPacket {
        BitPacket::from_bits_unchecked(self.values(scheme).iter().map(|&v| hard(v)).collect())
    }

    pub fn summary(&self) -> PacketLlrSummary {
        let kb = self.bits_per_symbol;
        let agg = |v: &[f64]| -> Vec<f64> { v.chunks(kb).map(|s| s.iter().map(|x| x.abs()).sum()).collect() };
        PacketLlrSummary::from_aggregates(agg(&self.dir_a), agg(&self.dir_b), agg(&self.dif))
    }
}

/// Per-symbol confidence aggregates and their packet minima.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketLlrSummary {
    pub dir_a: Vec<f64>,
    pub dir_b: Vec<f64>,
    pub dif: Vec<f64>,
    pub min_dir_a: f64,
    pub min_dir_b: f64,
    /// min over symbols of max(L_DirA, L_DirB).
    pub min_dir: f64,
    pub min_dif: f64,
}

fn min_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::INFINITY, f64::min)
}

impl PacketLlrSummary {
    pub fn from_aggregates(dir_a: Vec<f64>, dir_b: Vec<f64>, dif: Vec<f64>) -> Self {
        let min_dir_a = min_of(dir_a.iter().copied());
        let min_dir_b = min_of(dir_b.iter().copied());
        let min_dir = min_of(dir_a.iter().zip(&dir_b).map(|(a, b)| a.max(*b)));
        let min_dif = min_of(dif.iter().copied());
        PacketLlrSummary {
            dir_a,
            dir_b,
            dif,
            min_dir_a,
            min_dir_b,
            min_dir,
            min_dif,
        }
    }

    fn total(v: &[f64]) -> f64 {
        v.iter().sum()
    }
}

pub fn packet_llr_summary(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<PacketLlrSummary> {
    Ok(PacketLlrs::compute(y_r, ch, c)?.summary())
}

/// Packet-level scheme decision.
///
/// Direct wins only when its worst symbol is strictly more reliable than the
/// worst differential symbol. The forwarded user is the one with the larger
/// packet minimum; equal minima fall back to the larger total confidence, then A.
pub fn decide_scheme(s: &PacketLlrSummary) -> Scheme {
    if s.min_dir > s.min_dif {
        let user = if s.min_dir_a != s.min_dir_b {
            if s.min_dir_a > s.min_dir_b { User::A } else { User::B }
        } else if PacketLlrSummary::total(&s.dir_b) > PacketLlrSummary::total(&s.dir_a) {
            User::B
        } else {
            User::A
        };
        Scheme::Direct(user)
    } else {
        Scheme::Differential
    }
}

/// Bitwise detection of one user's bits, treating the other as interference.
pub fn detect_bits_direct(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation, user: User) -> Result<BitPacket> {
    Ok(PacketLlrs::compute(y_r, ch, c)?.hard_bits(Scheme::Direct(user)))
}

/// Bitwise detection of the XOR of the two users' bits.
pub fn detect_bits_diff(y_r: &SymbolPacket, ch: &ChannelState, c: &Constellation) -> Result<BitPacket> {
    Ok(PacketLlrs::compute(y_r, ch, c)?.hard_bits(Scheme::Differential))
}
