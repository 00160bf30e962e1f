//! PNML and POWL document formats.

mod pnml;
mod powl_json;

pub use pnml::{parse_pnml, write_pnml, PnmlError, PnmlOptions};
pub use powl_json::{parse_powl, serialize_powl, PowlDocError};
