//! Discrete Bayesian networks: representation, file format, exact inference
//! and d-separation.

mod dsep;
mod error;
mod format;
mod inference;
mod network;

pub use error::BnError;
pub use format::{load_network, load_network_with_floor, parse_network, write_network, FORMAT_HEADER, FORMAT_VERSION};
pub use network::{
    Cpt, Evidence, LoadNotes, Network, NetworkBuilder, VarId, Variable, DEFAULT_CLAMP_FLOOR, ROW_SUM_TOLERANCE,
};
