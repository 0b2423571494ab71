pub mod channel;
pub mod endnode;
pub mod error;
pub mod harness;
pub mod llr;
pub mod modem;
pub mod queue;
pub mod relay;
pub mod theory;

pub use error::{Error, Result};
