//! CSV serialisation of experiment tables. Output is byte-for-byte stable for a
//! given configuration and seed.

use std::io::Write;

use crate::error::{Error, Result};
use crate::harness::experiments::Table;

pub const PER_HEADER: [&str; 7] = [
    "protocol",
    "modulation",
    "ebn0_db",
    "gain_ratio_log10",
    "packets",
    "packet_errors",
    "per",
];
pub const SER_HEADER: [&str; 6] = ["protocol", "ebn0_db", "symbols", "symbol_errors", "ser", "theory_ser"];
pub const QUEUE_HEADER: [&str; 6] = ["epsilon", "qa_markov", "qrb_markov", "qa_sim", "qrb_sim", "slots"];
pub const SELECT_HEADER: [&str; 8] = [
    "rho_a_db",
    "rho_b_db",
    "p_abr_mc",
    "p_ar_mc",
    "p_br_mc",
    "p_abr_cf",
    "p_ar_cf",
    "p_br_cf",
];

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write CSV: {e}"))
}

pub fn write_table<W: Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match table {
        Table::Per(rows) => {
            w.write_record(PER_HEADER).map_err(io_err)?;
            for r in rows {
                w.write_record([
                    r.protocol.clone(),
                    r.modulation.to_string(),
                    r.ebn0_db.to_string(),
                    r.gain_ratio_log10.to_string(),
                    r.packets.to_string(),
                    r.packet_errors.to_string(),
                    r.per.to_string(),
                ])
                .map_err(io_err)?;
            }
        }
        Table::Ser(rows) => {
            w.write_record(SER_HEADER).map_err(io_err)?;
            for r in rows {
                w.write_record([
                    r.protocol.clone(),
                    r.ebn0_db.to_string(),
                    r.symbols.to_string(),
                    r.symbol_errors.to_string(),
                    r.ser.to_string(),
                    r.theory_ser.map(|t| t.to_string()).unwrap_or_default(),
                ])
                .map_err(io_err)?;
            }
        }
        Table::Queue(rows) => {
            w.write_record(QUEUE_HEADER).map_err(io_err)?;
            for r in rows {
                w.write_record([
                    r.epsilon.to_string(),
                    r.qa_markov.to_string(),
                    r.qrb_markov.to_string(),
                    r.qa_sim.to_string(),
                    r.qrb_sim.to_string(),
                    r.slots.to_string(),
                ])
                .map_err(io_err)?;
            }
        }
        Table::Select(rows) => {
            w.write_record(SELECT_HEADER).map_err(io_err)?;
            for r in rows {
                w.write_record(
                    [
                        r.rho_a_db,
                        r.rho_b_db,
                        r.p_abr_mc,
                        r.p_ar_mc,
                        r.p_br_mc,
                        r.p_abr_cf,
                        r.p_ar_cf,
                        r.p_br_cf,
                    ]
                    .map(|v| v.to_string()),
                )
                .map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

pub fn table_to_string(table: &Table) -> Result<String> {
    let mut buf = Vec::new();
    write_table(table, &mut buf)?;
    String::from_utf8(buf).map_err(io_err)
}
