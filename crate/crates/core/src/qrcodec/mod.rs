//! Self-contained QR codec (byte mode, versions 1–10) on top of GF(256)
//! Reed–Solomon.

pub mod decode;
pub mod gf256;
pub mod matrix;
pub mod rs;
pub mod symbol;
pub mod tables;

pub use decode::{
    finder_mismatches, qr_decode, qr_decode_with, repair_finders, DecodeFailure, DecodeOptions,
    DecodeReport,
};
pub use gf256::GfPoly;
pub use matrix::BitMatrix;
pub use rs::{rs_decode, rs_encode, RsCorrection, RsError};
pub use symbol::{qr_encode, EncodeError, QrSymbol};
pub use tables::{byte_capacity, EcLevel, Version};
