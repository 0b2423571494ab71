//! Experiment drivers. Each returns plain rows; [`super::csv_out`] serialises them.

use rayon::prelude::*;

use crate::channel::{draw_channel, mac_phase, stream_rng, ChannelState, FadingConfig};
use crate::error::{config, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind, FadingKind};
use crate::harness::exchange::{simulate_point, PointSpec, Tally};
use crate::llr::{decide_scheme, packet_llr_summary, Scheme, User};
use crate::modem::{modulate, BitPacket, Modulation};
use crate::queue::simulate_schedule;
use crate::relay::{protocol_by_name, RelayProtocol};
use crate::theory::{avg_ser_hdmf, selection_probs_avg, LinkBudget};

#[derive(Debug, Clone, PartialEq)]
pub struct PerRow {
    pub protocol: String,
    pub modulation: Modulation,
    pub ebn0_db: f64,
    pub gain_ratio_log10: f64,
    pub packets: u64,
    pub packet_errors: u64,
    pub per: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerRow {
    pub protocol: String,
    pub ebn0_db: f64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    pub theory_ser: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueRow {
    pub epsilon: f64,
    pub qa_markov: f64,
    pub qrb_markov: f64,
    pub qa_sim: f64,
    pub qrb_sim: f64,
    pub slots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectRow {
    pub rho_a_db: f64,
    pub rho_b_db: f64,
    pub p_abr_mc: f64,
    pub p_ar_mc: f64,
    pub p_br_mc: f64,
    pub p_abr_cf: f64,
    pub p_ar_cf: f64,
    pub p_br_cf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Per(Vec<PerRow>),
    Ser(Vec<SerRow>),
    Queue(Vec<QueueRow>),
    Select(Vec<SelectRow>),
}

pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    Ok(match cfg.kind {
        ExperimentKind::PerSweep => Table::Per(run_per_sweep(cfg)?),
        ExperimentKind::SerSweep => Table::Ser(run_ser_sweep(cfg)?),
        ExperimentKind::TheoryVsSim => Table::Ser(run_theory_vs_sim(cfg)?),
        ExperimentKind::QueueAnalysis => Table::Queue(run_queue_analysis(cfg)?),
        ExperimentKind::SelectionProbs => Table::Select(run_selection_probs(cfg)?),
    })
}

fn protocols(cfg: &ExperimentConfig) -> Result<Vec<Box<dyn RelayProtocol>>> {
    cfg.protocols.iter().map(|p| protocol_by_name(p)).collect()
}

struct PointResult {
    ebn0_db: f64,
    gain_ratio_log10: f64,
    tallies: Vec<Tally>,
}

/// Simulates every (Eb/N0, ratio) point in parallel; point `i` uses stream `i`.
fn sweep(cfg: &ExperimentConfig) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    let protos = protocols(cfg)?;
    let points: Vec<(f64, f64)> = cfg
        .ebn0_db
        .iter()
        .flat_map(|&e| cfg.gain_ratios.iter().map(move |&g| (e, g)))
        .collect();
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(ebn0_db, g))| {
            let spec = PointSpec {
                modulation: cfg.modulation,
                symbols_per_packet: cfg.symbols_per_packet,
                ebn0_db,
                fading: cfg.fading_config(g),
                noiseless: cfg.noiseless,
            };
            let mut rng = stream_rng(cfg.seed, i as u64);
            Ok(PointResult {
                ebn0_db,
                gain_ratio_log10: g,
                tallies: simulate_point(&spec, &protos, cfg.packets, &mut rng)?,
            })
        })
        .collect()
}

pub fn run_per_sweep(cfg: &ExperimentConfig) -> Result<Vec<PerRow>> {
    let points = sweep(cfg)?;
    let mut rows = Vec::new();
    for (pi, name) in cfg.protocols.iter().enumerate() {
        for p in &points {
            let t = &p.tallies[pi];
            rows.push(PerRow {
                protocol: name.clone(),
                modulation: cfg.modulation,
                ebn0_db: p.ebn0_db,
                gain_ratio_log10: p.gain_ratio_log10,
                packets: t.deliveries,
                packet_errors: t.packet_errors,
                per: t.per(),
            });
        }
    }
    Ok(rows)
}

/// Closed-form E2E SER for an HDMF point, when the analysis applies.
pub fn theory_ser(cfg: &ExperimentConfig, ebn0_db: f64, gain_ratio_log10: f64) -> Result<Option<f64>> {
    if cfg.modulation != Modulation::Bpsk || cfg.fading != FadingKind::Rayleigh {
        return Ok(None);
    }
    let rho = 10f64.powf(ebn0_db / 10.0);
    let rho_a = rho * 10f64.powf(-gain_ratio_log10);
    let rho_b = rho * 10f64.powf(gain_ratio_log10);
    let b = LinkBudget {
        rho_a,
        rho_b,
        rho_ra: rho_a,
        rho_rb: rho_b,
        delta: cfg.delta,
    };
    Ok(Some(avg_ser_hdmf(&b)?.p_hdmf))
}

fn ser_rows(cfg: &ExperimentConfig) -> Result<Vec<SerRow>> {
    if cfg.gain_ratios.len() != 1 {
        return config("SER experiments take exactly one gain ratio");
    }
    let points = sweep(cfg)?;
    let mut rows = Vec::new();
    for (pi, name) in cfg.protocols.iter().enumerate() {
        for p in &points {
            let t = &p.tallies[pi];
            let theory = if name.eq_ignore_ascii_case("hdmf") {
                theory_ser(cfg, p.ebn0_db, p.gain_ratio_log10)?
            } else {
                None
            };
            rows.push(SerRow {
                protocol: name.clone(),
                ebn0_db: p.ebn0_db,
                symbols: t.symbols,
                symbol_errors: t.symbol_errors,
                ser: t.ser(),
                theory_ser: theory,
            });
        }
    }
    Ok(rows)
}

pub fn run_ser_sweep(cfg: &ExperimentConfig) -> Result<Vec<SerRow>> {
    ser_rows(cfg)
}

pub fn run_theory_vs_sim(cfg: &ExperimentConfig) -> Result<Vec<SerRow>> {
    if cfg.modulation != Modulation::Bpsk || cfg.fading != FadingKind::Rayleigh {
        return config("the closed-form analysis covers BPSK over Rayleigh fading only");
    }
    ser_rows(cfg)
}

pub fn run_queue_analysis(cfg: &ExperimentConfig) -> Result<Vec<QueueRow>> {
    cfg.validate()?;
    cfg.epsilons
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let scenario = cfg.queue_scenario(eps);
            let (model, dist) = scenario.solve_with_auto_caps(cfg.boundary_tol, cfg.max_states)?;
            let mut rng = stream_rng(cfg.seed, i as u64);
            let (qa_sim, qrb_sim) = simulate_schedule(&model, cfg.slots, cfg.warmup, (0, 0), &mut rng)?;
            Ok(QueueRow {
                epsilon: eps,
                qa_markov: dist.qa_mean,
                qrb_markov: dist.qrb_mean,
                qa_sim,
                qrb_sim,
                slots: cfg.slots,
            })
        })
        .collect()
}

/// Empirical frequencies of the relay's decision over Rayleigh draws, with
/// average uplink SNRs set per link.
#[allow(clippy::too_many_arguments)]
pub fn selection_frequencies(
    rho_a: f64,
    rho_b: f64,
    modulation: Modulation,
    symbols: usize,
    delta: f64,
    packets: u64,
    seed: u64,
    stream: u64,
) -> Result<(f64, f64, f64)> {
    if !(rho_a > 0.0 && rho_b > 0.0) {
        return config("SNRs must be positive");
    }
    let c = modulation.constellation();
    let n0 = c.bit_energy();
    let mut rng = stream_rng(seed, stream);
    let fading = FadingConfig::rayleigh(delta, 0.0);
    let (sa, sb) = (rho_a.sqrt(), rho_b.sqrt());
    let mut counts = [0u64; 3];
    let nbits = symbols * c.bits_per_symbol();
    for _ in 0..packets {
        let mut draw = || -> Result<_> {
            let bits: Vec<u8> = (0..nbits).map(|_| rand::Rng::random_range(&mut rng, 0..2u8)).collect();
            modulate(&BitPacket::new(bits)?, &c)
        };
        let xa = draw()?;
        let xb = draw()?;
        let h = draw_channel(&fading, n0, &mut rng)?;
        let ch = ChannelState::reciprocal(h.h_ar * sa, h.h_br * sb, n0)?;
        let y = mac_phase(&xa, &xb, &ch, &mut rng)?;
        match decide_scheme(&packet_llr_summary(&y, &ch, &c)?) {
            Scheme::Differential => counts[0] += 1,
            Scheme::Direct(User::A) => counts[1] += 1,
            Scheme::Direct(User::B) => counts[2] += 1,
        }
    }
    let n = packets as f64;
    Ok((counts[0] as f64 / n, counts[1] as f64 / n, counts[2] as f64 / n))
}

pub fn run_selection_probs(cfg: &ExperimentConfig) -> Result<Vec<SelectRow>> {
    cfg.validate()?;
    let pairs: Vec<(f64, f64)> = cfg.rho_a_db.iter().copied().zip(cfg.rho_b_db.iter().copied()).collect();
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(da, db))| {
            let (ra, rb) = (10f64.powf(da / 10.0), 10f64.powf(db / 10.0));
            let (p_abr_mc, p_ar_mc, p_br_mc) = selection_frequencies(
                ra,
                rb,
                cfg.modulation,
                cfg.symbols_per_packet,
                cfg.delta,
                cfg.packets,
                cfg.seed,
                i as u64,
            )?;
            let (p_abr_cf, p_ar_cf, p_br_cf) = selection_probs_avg(ra, rb)?;
            Ok(SelectRow {
                rho_a_db: da,
                rho_b_db: db,
                p_abr_mc,
                p_ar_mc,
                p_br_mc,
                p_abr_cf,
                p_ar_cf,
                p_br_cf,
            })
        })
        .collect()
}
