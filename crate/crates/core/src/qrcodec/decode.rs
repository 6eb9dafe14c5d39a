//! Matrix-level decoding: finder check, format information (with BCH
//! correction), unmasking, de-interleaving and per-block Reed–Solomon.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::matrix::BitMatrix;
use super::rs::rs_decode;
use super::symbol::{
    draw_finders, finder_module, finder_origins, format_positions, format_word, interleave_layout,
    mask_applies, placement_order, FINDER_SIZE,
};
use super::tables::{tables, EcLevel, Version};

/// A finder pattern counts as found when at most this many of its 49
/// modules disagree with the canonical pattern.
pub const DEFAULT_FINDER_TOLERANCE: usize = 4;
/// Format words are 15 bits at pairwise distance ≥ 7.
const FORMAT_CORRECTABLE_BITS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeFailure {
    #[error("matrix side {0} is not a supported symbol size")]
    InvalidSize(usize),
    #[error("finder not found (top-left, top-right, bottom-left found = {found:?})")]
    FinderNotFound { found: [bool; 3] },
    #[error("format unreadable")]
    FormatUnreadable,
    #[error("uncorrectable block {block}")]
    UncorrectableBlock { block: usize },
    #[error("malformed payload: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOptions {
    pub finder_tolerance: usize,
    /// Retry blocks without erasure information when the erasure-assisted
    /// decode fails.
    pub errors_only_fallback: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            finder_tolerance: DEFAULT_FINDER_TOLERANCE,
            errors_only_fallback: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeReport {
    pub payload: Result<Vec<u8>, DecodeFailure>,
    /// Codewords whose value was changed by error correction.
    pub corrected_codewords: usize,
    /// Erased codewords handed to the block decoder.
    pub used_erasures: usize,
    /// Found flags for top-left, top-right, bottom-left.
    pub finder_status: [bool; 3],
    pub version: Option<Version>,
    pub ec_level: Option<EcLevel>,
    pub mask: Option<u8>,
    /// Corrected codewords in transmission order, when every block decoded.
    pub codewords: Option<Vec<u8>>,
}

impl DecodeReport {
    fn failed(finder_status: [bool; 3], failure: DecodeFailure) -> Self {
        Self {
            payload: Err(failure),
            corrected_codewords: 0,
            used_erasures: 0,
            finder_status,
            version: None,
            ec_level: None,
            mask: None,
            codewords: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.payload.is_ok()
    }
}

/// Count of modules in each finder that differ from the canonical pattern.
pub fn finder_mismatches(matrix: &BitMatrix) -> [usize; 3] {
    let side = matrix.side();
    finder_origins(side).map(|(r0, c0)| {
        let mut bad = 0;
        for dr in 0..FINDER_SIZE {
            for dc in 0..FINDER_SIZE {
                if matrix.get(r0 + dr, c0 + dc) != finder_module(dr, dc) {
                    bad += 1;
                }
            }
        }
        bad
    })
}

/// Nearest valid (level, mask) for a 15-bit format word, if within the
/// correction radius.
fn match_format(word: u32) -> Option<(EcLevel, u8, u32)> {
    let mut best: Option<(EcLevel, u8, u32)> = None;
    for level in EcLevel::ALL {
        for mask in 0..8u8 {
            let d = (format_word(level, mask) ^ word).count_ones();
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((level, mask, d));
            }
        }
    }
    best.filter(|&(_, _, d)| d <= FORMAT_CORRECTABLE_BITS)
}

fn read_format(matrix: &BitMatrix) -> Option<(EcLevel, u8)> {
    let side = matrix.side();
    let (mut first, mut second) = (0u32, 0u32);
    for i in 0..15 {
        let (a, b) = format_positions(side, i);
        first |= (matrix.get(a.0, a.1) as u32) << i;
        second |= (matrix.get(b.0, b.1) as u32) << i;
    }
    [match_format(first), match_format(second)]
        .into_iter()
        .flatten()
        .min_by_key(|&(_, _, d)| d)
        .map(|(level, mask, _)| (level, mask))
}

pub fn qr_decode(matrix: &BitMatrix, erasure_mask: Option<&BitMatrix>) -> DecodeReport {
    qr_decode_with(matrix, erasure_mask, &DecodeOptions::default())
}

pub fn qr_decode_with(
    matrix: &BitMatrix,
    erasure_mask: Option<&BitMatrix>,
    options: &DecodeOptions,
) -> DecodeReport {
    let side = matrix.side();
    let Some(version) = Version::from_side(side) else {
        return DecodeReport::failed([false; 3], DecodeFailure::InvalidSize(side));
    };
    if let Some(e) = erasure_mask {
        if e.side() != side {
            return DecodeReport::failed([false; 3], DecodeFailure::InvalidSize(e.side()));
        }
    }
    let finder_status = finder_mismatches(matrix).map(|bad| bad <= options.finder_tolerance);
    if finder_status.iter().any(|&f| !f) {
        return DecodeReport::failed(
            finder_status,
            DecodeFailure::FinderNotFound {
                found: finder_status,
            },
        );
    }
    let Some((level, mask)) = read_format(matrix) else {
        return DecodeReport::failed(finder_status, DecodeFailure::FormatUnreadable);
    };

    let spec = tables().block_spec(version, level);
    let mut codewords = vec![0u8; spec.total_codewords];
    let mut erased = vec![false; spec.total_codewords];
    for (i, (r, c)) in placement_order(version).into_iter().enumerate() {
        let k = i / 8;
        if k >= spec.total_codewords {
            break;
        }
        let bit = matrix.get(r, c) ^ mask_applies(mask, r, c);
        if bit {
            codewords[k] |= 1 << (7 - i % 8);
        }
        if erasure_mask.is_some_and(|e| e.get(r, c)) {
            erased[k] = true;
        }
    }

    let mut report = DecodeReport {
        payload: Ok(Vec::new()),
        corrected_codewords: 0,
        used_erasures: 0,
        finder_status,
        version: Some(version),
        ec_level: Some(level),
        mask: Some(mask),
        codewords: None,
    };
    let mut data = Vec::with_capacity(spec.data_codewords());
    let mut corrected_sequence = codewords.clone();
    let lengths = spec.data_lengths();
    for (b, positions) in interleave_layout(version, level).iter().enumerate() {
        let block: Vec<u8> = positions.iter().map(|&p| codewords[p]).collect();
        let erasures: Vec<usize> = positions
            .iter()
            .enumerate()
            .filter(|&(_, &p)| erased[p])
            .map(|(k, _)| k)
            .collect();
        let mut attempt = rs_decode(&block, spec.parity_per_block, &erasures);
        if attempt.is_err() && !erasures.is_empty() && options.errors_only_fallback {
            attempt = rs_decode(&block, spec.parity_per_block, &[]);
        }
        let Ok(fixed) = attempt else {
            report.payload = Err(DecodeFailure::UncorrectableBlock { block: b });
            return report;
        };
        report.corrected_codewords += fixed.corrected_positions.len();
        report.used_erasures += fixed.erasures_used;
        for (&p, &byte) in positions.iter().zip(&fixed.codeword) {
            corrected_sequence[p] = byte;
        }
        data.extend_from_slice(&fixed.codeword[..lengths[b]]);
    }
    report.payload = parse_byte_mode(&data, version);
    if report.payload.is_ok() {
        report.codewords = Some(corrected_sequence);
    }
    report
}

fn parse_byte_mode(data: &[u8], version: Version) -> Result<Vec<u8>, DecodeFailure> {
    let total_bits = data.len() * 8;
    let bit = |i: usize| data[i / 8] >> (7 - i % 8) & 1;
    let read = |start: usize, n: usize| -> Option<usize> {
        (start + n <= total_bits).then(|| (start..start + n).fold(0usize, |acc, i| acc << 1 | bit(i) as usize))
    };
    let mode = read(0, 4).ok_or_else(|| DecodeFailure::Malformed("empty data".into()))?;
    match mode {
        0b0000 => Ok(Vec::new()),
        0b0100 => {
            let cc = version.char_count_bits();
            let len = read(4, cc).ok_or_else(|| DecodeFailure::Malformed("truncated length".into()))?;
            let start = 4 + cc;
            if start + 8 * len > total_bits {
                return Err(DecodeFailure::Malformed(format!(
                    "declared length {len} exceeds data capacity"
                )));
            }
            Ok((0..len)
                .map(|k| read(start + 8 * k, 8).unwrap_or(0) as u8)
                .collect())
        }
        other => Err(DecodeFailure::Malformed(format!(
            "unsupported mode indicator {other:04b}"
        ))),
    }
}

/// Rewrites the three finder patterns and their separators, leaving every
/// other module untouched. Matrices of unsupported size are returned as is.
pub fn repair_finders(matrix: &BitMatrix) -> BitMatrix {
    let mut out = matrix.clone();
    if Version::from_side(matrix.side()).is_some() {
        draw_finders(&mut out);
    }
    out
}
