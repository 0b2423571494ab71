//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # comment
//! protocols = hdmf, pnc
//! modulation = qpsk
//! ebn0_db = 25
//! gain_ratios = -0.7, 0, 0.7
//! ```
//!
//! Lists are comma separated. Unknown keys are rejected.

use std::fmt;
use std::str::FromStr;

use crate::channel::{FadingConfig, FadingModel, UNIT_POWER_DELTA};
use crate::error::{config, Error, Result};
use crate::modem::Modulation;
use crate::queue::QueueScenario;
use crate::relay::PROTOCOL_NAMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PerSweep,
    SerSweep,
    TheoryVsSim,
    QueueAnalysis,
    SelectionProbs,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::PerSweep => "per_sweep",
            ExperimentKind::SerSweep => "ser_sweep",
            ExperimentKind::TheoryVsSim => "theory_vs_sim",
            ExperimentKind::QueueAnalysis => "queue_analysis",
            ExperimentKind::SelectionProbs => "selection_probs",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "per_sweep" => Ok(ExperimentKind::PerSweep),
            "ser_sweep" => Ok(ExperimentKind::SerSweep),
            "theory_vs_sim" => Ok(ExperimentKind::TheoryVsSim),
            "queue" | "queue_analysis" => Ok(ExperimentKind::QueueAnalysis),
            "select_probs" | "selection_probs" => Ok(ExperimentKind::SelectionProbs),
            other => config(format!("unknown experiment '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    Rayleigh,
    Fixed,
}

/// The default sweep over log10(E|h_BR| / E|h_AR|): -0.7 to 0.7 in steps of 0.1.
pub fn default_ratio_grid() -> Vec<f64> {
    (-7..=7).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub protocols: Vec<String>,
    pub modulation: Modulation,
    pub packets: u64,
    pub symbols_per_packet: usize,
    pub ebn0_db: Vec<f64>,
    pub gain_ratios: Vec<f64>,
    pub fading: FadingKind,
    pub delta: f64,
    pub fixed_gain: f64,
    pub reciprocal: bool,
    /// Skip the noise draws; detectors then work with a vanishing N0.
    pub noiseless: bool,
    pub seed: u64,
    // scheduler
    pub lambda: f64,
    pub slot: f64,
    pub mode_probs: [f64; 4],
    pub snr_db: f64,
    pub n_rate: usize,
    pub epsilons: Vec<f64>,
    pub slots: u64,
    pub warmup: u64,
    pub boundary_tol: f64,
    pub max_states: usize,
    // selection probabilities
    pub rho_a_db: Vec<f64>,
    pub rho_b_db: Vec<f64>,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let q = QueueScenario::default();
        let mut c = ExperimentConfig {
            kind,
            protocols: PROTOCOL_NAMES.iter().map(|s| s.to_string()).collect(),
            modulation: Modulation::Qpsk,
            packets: 10_000,
            symbols_per_packet: 128,
            ebn0_db: vec![25.0],
            gain_ratios: default_ratio_grid(),
            fading: FadingKind::Rayleigh,
            delta: UNIT_POWER_DELTA,
            fixed_gain: 1.0,
            reciprocal: true,
            noiseless: false,
            seed: 1,
            lambda: q.lambda,
            slot: q.slot,
            mode_probs: q.f,
            snr_db: q.snr_db,
            n_rate: q.n_rate,
            epsilons: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            slots: 1_000_000,
            warmup: 10_000,
            boundary_tol: 1e-6,
            max_states: 6_000,
            rho_a_db: vec![30.0, 30.0],
            rho_b_db: vec![30.0, 30.0 - 10.0 * 2f64.log10()],
        };
        match kind {
            ExperimentKind::SerSweep => {
                c.modulation = Modulation::Bpsk;
                c.ebn0_db = vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
                c.gain_ratios = vec![0.0];
                c.reciprocal = false;
            }
            ExperimentKind::TheoryVsSim => {
                c.protocols = vec!["hdmf".into()];
                c.modulation = Modulation::Bpsk;
                c.ebn0_db = vec![20.0, 25.0, 30.0];
                c.gain_ratios = vec![0.0];
                c.reciprocal = false;
                c.packets = 8_000;
            }
            _ => {}
        }
        c
    }

    pub fn fading_config(&self, gain_ratio_log10: f64) -> FadingConfig {
        let model = match self.fading {
            FadingKind::Rayleigh => FadingModel::RayleighBlock { delta: self.delta },
            FadingKind::Fixed => FadingModel::FixedGain { gain: self.fixed_gain },
        };
        FadingConfig {
            model,
            gain_ratio_log10,
            reciprocal: self.reciprocal,
        }
    }

    pub fn queue_scenario(&self, epsilon: f64) -> QueueScenario {
        QueueScenario {
            lambda: self.lambda,
            slot: self.slot,
            f: self.mode_probs,
            snr_db: self.snr_db,
            delta: self.delta,
            n_rate: self.n_rate,
            epsilon,
            selection: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.packets < 1 {
            return config("packets must be at least 1");
        }
        if self.symbols_per_packet < 1 {
            return config("symbols_per_packet must be at least 1");
        }
        let bits = self.symbols_per_packet * self.modulation.constellation().bits_per_symbol();
        if bits <= crate::endnode::CRC_BITS {
            return config(format!("{bits} bits per packet leave no room for the payload"));
        }
        let needs_grids = matches!(
            self.kind,
            ExperimentKind::PerSweep | ExperimentKind::SerSweep | ExperimentKind::TheoryVsSim
        );
        if needs_grids && (self.ebn0_db.is_empty() || self.gain_ratios.is_empty() || self.protocols.is_empty()) {
            return config("protocol list, Eb/N0 list and gain-ratio grid must be non-empty");
        }
        for p in &self.protocols {
            crate::relay::protocol_by_name(p)?;
        }
        if self.ebn0_db.iter().chain(&self.gain_ratios).any(|v| !v.is_finite()) {
            return config("grid values must be finite");
        }
        self.fading_config(0.0).validate()?;
        match self.kind {
            ExperimentKind::QueueAnalysis if self.epsilons.is_empty() => config("epsilon grid must be non-empty"),
            ExperimentKind::QueueAnalysis if self.slots <= self.warmup => config("slots must exceed warmup"),
            ExperimentKind::SelectionProbs if self.rho_a_db.is_empty() || self.rho_a_db.len() != self.rho_b_db.len() => {
                config("rho_a_db and rho_b_db must be non-empty and of equal length")
            }
            _ => Ok(()),
        }
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" | "experiment" => self.kind = value.parse()?,
            "protocols" => self.protocols = split(value).map(str::to_string).collect(),
            "modulation" => self.modulation = value.parse()?,
            "packets" => self.packets = scalar(key, value)?,
            "symbols_per_packet" => self.symbols_per_packet = scalar(key, value)?,
            "ebn0_db" => self.ebn0_db = list(key, value)?,
            "gain_ratios" | "gain_ratio_log10" => self.gain_ratios = list(key, value)?,
            "fading" => {
                self.fading = match value.to_ascii_lowercase().as_str() {
                    "rayleigh" => FadingKind::Rayleigh,
                    "fixed" | "gaussian" => FadingKind::Fixed,
                    other => return config(format!("unknown fading model '{other}'")),
                }
            }
            "delta" => self.delta = scalar(key, value)?,
            "fixed_gain" => self.fixed_gain = scalar(key, value)?,
            "reciprocal" => self.reciprocal = scalar(key, value)?,
            "noiseless" => self.noiseless = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "lambda" => self.lambda = scalar(key, value)?,
            "slot" => self.slot = scalar(key, value)?,
            "mode_probs" => {
                let v: Vec<f64> = list(key, value)?;
                self.mode_probs = v
                    .try_into()
                    .map_err(|_| Error::Config("mode_probs needs exactly four values".into()))?;
            }
            "snr_db" => self.snr_db = scalar(key, value)?,
            "n_rate" => self.n_rate = scalar(key, value)?,
            "epsilons" | "epsilon" => self.epsilons = list(key, value)?,
            "slots" => self.slots = scalar(key, value)?,
            "warmup" => self.warmup = scalar(key, value)?,
            "boundary_tol" => self.boundary_tol = scalar(key, value)?,
            "max_states" => self.max_states = scalar(key, value)?,
            "rho_a_db" => self.rho_a_db = list(key, value)?,
            "rho_b_db" => self.rho_b_db = list(key, value)?,
            other => return config(format!("unknown key '{other}'")),
        }
        Ok(())
    }
}

fn split(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    split(value).map(|v| scalar(key, v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_grid() {
        let g = default_ratio_grid();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0], -0.7);
        assert_eq!(g[14], 0.7);
        assert!(g[7].abs() < 1e-15);
    }

    #[test]
    fn parse_file() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::PerSweep);
        c.apply_text(
            "# sweep\nprotocols = hdmf, pnc\nmodulation = bpsk\n\nebn0_db = 10, 15 # two points\npackets=20\nnoiseless = true\nmode_probs = 0.4,0.2,0.2,0.2\n",
        )
        .unwrap();
        assert_eq!(c.protocols, vec!["hdmf", "pnc"]);
        assert_eq!(c.modulation, Modulation::Bpsk);
        assert_eq!(c.ebn0_db, vec![10.0, 15.0]);
        assert_eq!(c.packets, 20);
        assert!(c.noiseless);
        assert_eq!(c.mode_probs, [0.4, 0.2, 0.2, 0.2]);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_text() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::PerSweep);
        assert!(matches!(c.apply_text("bogus = 1"), Err(Error::Config(_))));
        assert!(c.apply_text("packets = many").is_err());
        assert!(c.apply_text("no equals sign").is_err());
        assert!(c.apply_text("mode_probs = 1, 0").is_err());
        c.apply_text("protocols = hdmf, dnc").unwrap();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::defaults(ExperimentKind::PerSweep);
        c.apply_text("delta = 0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn kind_names() {
        for k in ["per-sweep", "ser_sweep", "theory-vs-sim", "queue", "select-probs"] {
            assert!(k.parse::<ExperimentKind>().is_ok());
        }
        assert!("plot".parse::<ExperimentKind>().is_err());
    }
}
