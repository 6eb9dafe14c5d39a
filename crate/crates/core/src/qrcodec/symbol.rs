//! Symbol construction: function patterns, byte-mode bit stream, block
//! interleaving, zigzag placement, masking and format/version information.

use thiserror::Error;

use super::matrix::BitMatrix;
use super::rs::rs_encode;
use super::tables::{byte_capacity, tables, EcLevel, Version};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("payload of {len} bytes exceeds capacity {capacity} of version {version}-{level}")]
    CapacityExceeded {
        len: usize,
        capacity: usize,
        version: Version,
        level: EcLevel,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrSymbol {
    pub version: Version,
    pub ec_level: EcLevel,
    pub mask: u8,
    pub modules: BitMatrix,
    pub payload: Vec<u8>,
}

pub const FINDER_SIZE: usize = 7;

/// Top-left (row, col) corners of the three finder patterns: top-left,
/// top-right, bottom-left.
pub fn finder_origins(side: usize) -> [(usize, usize); 3] {
    [(0, 0), (0, side - FINDER_SIZE), (side - FINDER_SIZE, 0)]
}

/// Canonical finder module at offset (dr, dc) within the 7×7 pattern.
pub fn finder_module(dr: usize, dc: usize) -> bool {
    let d = dr.abs_diff(3).max(dc.abs_diff(3));
    d != 2
}

/// Modules reserved for function patterns, format and version information.
pub fn function_mask(version: Version) -> BitMatrix {
    let side = version.side();
    let mut m = BitMatrix::new(side);
    let mut fill = |r0: usize, c0: usize, h: usize, w: usize| {
        for r in r0..(r0 + h).min(side) {
            for c in c0..(c0 + w).min(side) {
                m.set(r, c, true);
            }
        }
    };
    // finders with separators and format areas
    fill(0, 0, 9, 9);
    fill(0, side - 8, 9, 8);
    fill(side - 8, 0, 8, 9);
    // timing
    fill(6, 0, 1, side);
    fill(0, 6, side, 1);
    for (r, c) in alignment_centers(version) {
        fill(r - 2, c - 2, 5, 5);
    }
    if version.value() >= 7 {
        fill(0, side - 11, 6, 3);
        fill(side - 11, 0, 3, 6);
    }
    m
}

pub fn alignment_centers(version: Version) -> Vec<(usize, usize)> {
    let pos = tables().alignment_positions(version);
    let Some(&last) = pos.last() else {
        return Vec::new();
    };
    let first = pos[0];
    let mut centers = Vec::new();
    for &r in pos {
        for &c in pos {
            let overlaps_finder =
                (r == first && c == first) || (r == first && c == last) || (r == last && c == first);
            if !overlaps_finder {
                centers.push((r, c));
            }
        }
    }
    centers
}

/// Draws finders, separators, timing, alignment patterns and the dark module.
fn draw_function_patterns(m: &mut BitMatrix, version: Version) {
    let side = version.side();
    for i in 0..side {
        m.set(6, i, i % 2 == 0);
        m.set(i, 6, i % 2 == 0);
    }
    draw_finders(m);
    for (r, c) in alignment_centers(version) {
        for dr in 0..5usize {
            for dc in 0..5usize {
                let d = dr.abs_diff(2).max(dc.abs_diff(2));
                m.set(r + dr - 2, c + dc - 2, d != 1);
            }
        }
    }
    m.set(side - 8, 8, true);
}

/// Writes the three finder patterns and their light separators.
pub(crate) fn draw_finders(m: &mut BitMatrix) {
    let side = m.side();
    for (r0, c0) in finder_origins(side) {
        // separator ring: an 8×8 square on the inner side of each finder
        let rows = if r0 == 0 { 0..8 } else { side - 8..side };
        let cols = if c0 == 0 { 0..8 } else { side - 8..side };
        for r in rows {
            for c in cols.clone() {
                m.set(r, c, false);
            }
        }
        for dr in 0..FINDER_SIZE {
            for dc in 0..FINDER_SIZE {
                m.set(r0 + dr, c0 + dc, finder_module(dr, dc));
            }
        }
    }
}

/// BCH(15,5) format word for (level, mask), already XORed with 0x5412.
pub fn format_word(level: EcLevel, mask: u8) -> u32 {
    let data = level.format_bits() << 3 | mask as u32;
    let mut rem = data;
    for _ in 0..10 {
        rem = (rem << 1) ^ ((rem >> 9) * 0x537);
    }
    ((data << 10) | (rem & 0x3FF)) ^ 0x5412
}

/// (row, col) of format bit `i` in the first and second copies.
pub fn format_positions(side: usize, i: usize) -> ((usize, usize), (usize, usize)) {
    let first = match i {
        0..=5 => (i, 8),
        6 => (7, 8),
        7 => (8, 8),
        8 => (8, 7),
        _ => (8, 14 - i),
    };
    let second = if i < 8 {
        (8, side - 1 - i)
    } else {
        (side - 15 + i, 8)
    };
    (first, second)
}

fn draw_format(m: &mut BitMatrix, level: EcLevel, mask: u8) {
    let word = format_word(level, mask);
    let side = m.side();
    for i in 0..15 {
        let bit = word >> i & 1 == 1;
        let (a, b) = format_positions(side, i);
        m.set(a.0, a.1, bit);
        m.set(b.0, b.1, bit);
    }
    m.set(side - 8, 8, true);
}

/// BCH(18,6) version word.
pub fn version_word(version: Version) -> u32 {
    let v = version.value() as u32;
    let mut rem = v;
    for _ in 0..12 {
        rem = (rem << 1) ^ ((rem >> 11) * 0x1F25);
    }
    v << 12 | (rem & 0xFFF)
}

fn draw_version(m: &mut BitMatrix, version: Version) {
    if version.value() < 7 {
        return;
    }
    let side = m.side();
    let word = version_word(version);
    for i in 0..18 {
        let bit = word >> i & 1 == 1;
        let a = side - 11 + i % 3;
        let b = i / 3;
        m.set(b, a, bit);
        m.set(a, b, bit);
    }
}

/// Data module coordinates in placement order (upward/downward column pairs
/// from the right, skipping the vertical timing column).
pub fn placement_order(version: Version) -> Vec<(usize, usize)> {
    let side = version.side();
    let function = function_mask(version);
    let mut order = Vec::with_capacity(side * side);
    let mut right = side as isize - 1;
    while right >= 1 {
        if right == 6 {
            right = 5;
        }
        let upward = ((right + 1) & 2) == 0;
        for vert in 0..side {
            for j in 0..2 {
                let col = (right - j) as usize;
                let row = if upward { side - 1 - vert } else { vert };
                if !function.get(row, col) {
                    order.push((row, col));
                }
            }
        }
        right -= 2;
    }
    order
}

pub fn mask_applies(mask: u8, row: usize, col: usize) -> bool {
    let (r, c) = (row, col);
    match mask {
        0 => (r + c) % 2 == 0,
        1 => r % 2 == 0,
        2 => c % 3 == 0,
        3 => (r + c) % 3 == 0,
        4 => (r / 2 + c / 3) % 2 == 0,
        5 => (r * c) % 2 + (r * c) % 3 == 0,
        6 => ((r * c) % 2 + (r * c) % 3) % 2 == 0,
        7 => ((r + c) % 2 + (r * c) % 3) % 2 == 0,
        _ => panic!("mask pattern {mask} out of range"),
    }
}

/// Byte-mode bit stream padded to the data capacity.
fn data_codewords(payload: &[u8], version: Version, level: EcLevel) -> Vec<u8> {
    let capacity_bits = tables().block_spec(version, level).data_codewords() * 8;
    let mut bits: Vec<bool> = Vec::with_capacity(capacity_bits);
    let mut push = |value: u32, n: usize| {
        for i in (0..n).rev() {
            bits.push(value >> i & 1 == 1);
        }
    };
    push(0b0100, 4);
    push(payload.len() as u32, version.char_count_bits());
    for &b in payload {
        push(b as u32, 8);
    }
    let terminator = (capacity_bits - bits.len()).min(4);
    bits.extend(std::iter::repeat_n(false, terminator));
    while !bits.len().is_multiple_of(8) {
        bits.push(false);
    }
    let mut bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8))
        .collect();
    for pad in [0xEC, 0x11].into_iter().cycle() {
        if bytes.len() * 8 >= capacity_bits {
            break;
        }
        bytes.push(pad);
    }
    bytes
}

/// Index of every final codeword: `layout[block][k]` is the position in the
/// interleaved sequence of byte `k` (data then parity) of `block`.
pub fn interleave_layout(version: Version, level: EcLevel) -> Vec<Vec<usize>> {
    let spec = tables().block_spec(version, level);
    let lengths = spec.data_lengths();
    let max_data = *lengths.iter().max().unwrap_or(&0);
    let mut layout: Vec<Vec<usize>> = lengths
        .iter()
        .map(|&n| Vec::with_capacity(n + spec.parity_per_block))
        .collect();
    let mut next = 0;
    for k in 0..max_data {
        for (b, &n) in lengths.iter().enumerate() {
            if k < n {
                layout[b].push(next);
                next += 1;
            }
        }
    }
    for _ in 0..spec.parity_per_block {
        for block in layout.iter_mut() {
            block.push(next);
            next += 1;
        }
    }
    debug_assert_eq!(next, spec.total_codewords);
    layout
}

/// Data + parity codewords in transmission order.
pub fn codeword_sequence(payload: &[u8], version: Version, level: EcLevel) -> Vec<u8> {
    let spec = tables().block_spec(version, level);
    let data = data_codewords(payload, version, level);
    let layout = interleave_layout(version, level);
    let mut out = vec![0u8; spec.total_codewords];
    let mut offset = 0;
    for (block, &n) in layout.iter().zip(&spec.data_lengths()) {
        let chunk = &data[offset..offset + n];
        offset += n;
        let parity = rs_encode(chunk, spec.parity_per_block).expect("valid block parameters");
        for (&pos, &byte) in block.iter().zip(chunk.iter().chain(&parity)) {
            out[pos] = byte;
        }
    }
    out
}

fn place(m: &mut BitMatrix, version: Version, codewords: &[u8]) {
    for (i, (r, c)) in placement_order(version).into_iter().enumerate() {
        let bit = codewords
            .get(i / 8)
            .is_some_and(|&b| b >> (7 - i % 8) & 1 == 1);
        m.set(r, c, bit);
    }
}

fn apply_mask(m: &mut BitMatrix, function: &BitMatrix, mask: u8) {
    for r in 0..m.side() {
        for c in 0..m.side() {
            if !function.get(r, c) && mask_applies(mask, r, c) {
                m.toggle(r, c);
            }
        }
    }
}

/// Standard mask penalty: runs, 2×2 blocks, finder-like sequences, balance.
pub fn penalty_score(m: &BitMatrix) -> u32 {
    let side = m.side();
    let mut score = 0u32;
    let line = |horizontal: bool, i: usize, j: usize| {
        if horizontal {
            m.get(i, j)
        } else {
            m.get(j, i)
        }
    };
    for horizontal in [true, false] {
        for i in 0..side {
            let mut run = 1;
            for j in 1..side {
                if line(horizontal, i, j) == line(horizontal, i, j - 1) {
                    run += 1;
                } else {
                    if run >= 5 {
                        score += 3 + (run - 5);
                    }
                    run = 1;
                }
            }
            if run >= 5 {
                score += 3 + (run - 5);
            }
            // 1:1:3:1:1 with four light modules on one side; outside is light
            const PATTERN: [bool; 7] = [true, false, true, true, true, false, true];
            let at = |j: isize| j >= 0 && (j as usize) < side && line(horizontal, i, j as usize);
            for start in -4..side as isize {
                let core_ok = (0..7).all(|k| at(start + k) == PATTERN[k as usize]);
                if !core_ok {
                    continue;
                }
                let before = (1..=4).all(|k| !at(start - k));
                let after = (7..11).all(|k| !at(start + k));
                if before || after {
                    score += 40;
                }
            }
        }
    }
    for r in 0..side - 1 {
        for c in 0..side - 1 {
            let v = m.get(r, c);
            if m.get(r, c + 1) == v && m.get(r + 1, c) == v && m.get(r + 1, c + 1) == v {
                score += 3;
            }
        }
    }
    let total = side * side;
    let dark = m.dark_count();
    let k = (dark * 20).abs_diff(total * 10).div_ceil(total).saturating_sub(1);
    score + k as u32 * 10
}

/// Encodes `payload` in byte mode. The mask with the lowest penalty wins,
/// ties to the lower mask number.
pub fn qr_encode(payload: &[u8], version: Version, level: EcLevel) -> Result<QrSymbol, EncodeError> {
    let capacity = byte_capacity(version, level);
    if payload.len() > capacity {
        return Err(EncodeError::CapacityExceeded {
            len: payload.len(),
            capacity,
            version,
            level,
        });
    }
    let codewords = codeword_sequence(payload, version, level);
    let function = function_mask(version);
    let mut base = BitMatrix::new(version.side());
    draw_function_patterns(&mut base, version);
    draw_version(&mut base, version);
    place(&mut base, version, &codewords);

    let mut best: Option<(u32, u8, BitMatrix)> = None;
    for mask in 0..8u8 {
        let mut m = base.clone();
        apply_mask(&mut m, &function, mask);
        draw_format(&mut m, level, mask);
        let p = penalty_score(&m);
        if best.as_ref().is_none_or(|(bp, _, _)| p < *bp) {
            best = Some((p, mask, m));
        }
    }
    let (_, mask, modules) = best.expect("eight masks evaluated");
    Ok(QrSymbol {
        version,
        ec_level: level,
        mask,
        modules,
        payload: payload.to_vec(),
    })
}
