//! Conversion of safe and sound workflow nets into POWL 2.0 models.

pub mod net;
pub mod partition;
pub mod behavior;
pub mod powl;
pub mod decompose;
pub mod preprocess;
pub mod convert;
pub mod io;
pub mod gen;
