//! Design and verification toolkit for ultra-long-term archival media.

pub mod cli;
pub mod degrade;
pub mod layout;
pub mod optics;
pub mod qrcodec;
pub mod readout;
pub mod retention;
