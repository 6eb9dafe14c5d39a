//! Two-level disk layout: an outer QR symbol whose dark modules each carry a
//! complete inner QR symbol, rendered as a lithography mask (one pixel per
//! inner module, set = tungsten).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::qrcodec::{qr_encode, BitMatrix, EcLevel, EncodeError, QrSymbol, Version};

pub const DEFAULT_QUIET_ZONE: usize = 4;
pub const DEFAULT_PITCH: f64 = 2e-6;
pub const PADDING_POLICY: &str = "repeat-last";

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("inner document {index} is {len} bytes, capacity at {version}-{level} is {capacity}")]
    DocumentTooLarge {
        index: usize,
        len: usize,
        capacity: usize,
        version: Version,
        level: EcLevel,
    },
    #[error("outer symbol: {0}")]
    Outer(#[from] EncodeError),
    #[error("{slots} dark outer modules need inner documents, none given")]
    NoDocuments { slots: usize },
    #[error("invalid layout parameter: {0}")]
    InvalidParameter(String),
    #[error("bitmap is {found:?} pixels, geometry expects {expected:?}")]
    GeometryMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("sample point ({row}, {col}) lies outside the bitmap")]
    OutOfBounds { row: i64, col: i64 },
    #[error("malformed bitmap: {0}")]
    Malformed(String),
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LayoutError>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutParams {
    pub outer_version: Version,
    pub outer_ec_level: EcLevel,
    pub inner_version: Version,
    pub inner_ec_level: EcLevel,
    /// Physical size of one inner module (one mask pixel) [m].
    pub pitch: f64,
    /// Blank border around the outer symbol, in outer modules.
    pub quiet_zone: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            outer_version: Version::new(2).expect("version 2"),
            outer_ec_level: EcLevel::H,
            inner_version: Version::new(1).expect("version 1"),
            inner_ec_level: EcLevel::M,
            pitch: DEFAULT_PITCH,
            quiet_zone: DEFAULT_QUIET_ZONE,
        }
    }
}

impl LayoutParams {
    pub fn geometry(&self) -> LayoutGeometry {
        LayoutGeometry {
            outer_side: self.outer_version.side(),
            inner_side: self.inner_version.side(),
            quiet_zone: self.quiet_zone,
            pitch: self.pitch,
            offset: [0.0, 0.0],
        }
    }
}

/// Pixel geometry of a rendered disk. An outer module is exactly one inner
/// symbol wide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutGeometry {
    pub outer_side: usize,
    pub inner_side: usize,
    pub quiet_zone: usize,
    pub pitch: f64,
    /// Shift of the sampling grid in pixels, `[row, col]`.
    pub offset: [f64; 2],
}

impl LayoutGeometry {
    pub fn side_px(&self) -> usize {
        (self.outer_side + 2 * self.quiet_zone) * self.inner_side
    }

    /// Edge length of the whole bitmap [m].
    pub fn physical_size(&self) -> f64 {
        self.side_px() as f64 * self.pitch
    }

    /// Edge length of the outer symbol without quiet zone [m].
    pub fn core_size(&self) -> f64 {
        (self.outer_side * self.inner_side) as f64 * self.pitch
    }

    pub fn outer_module_size(&self) -> f64 {
        self.inner_side as f64 * self.pitch
    }

    /// Top-left pixel of outer module `(row, col)`.
    pub fn module_origin(&self, row: usize, col: usize) -> (usize, usize) {
        (
            (self.quiet_zone + row) * self.inner_side,
            (self.quiet_zone + col) * self.inner_side,
        )
    }

    /// Pixel sampled for inner module `(i, j)` of outer module `(row, col)`.
    fn sample_pixel(&self, row: usize, col: usize, i: usize, j: usize) -> (i64, i64) {
        let (r0, c0) = self.module_origin(row, col);
        let y = (r0 + i) as f64 + 0.5 + self.offset[0];
        let x = (c0 + j) as f64 + 0.5 + self.offset[1];
        (y.floor() as i64, x.floor() as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerSlot {
    pub row: usize,
    pub col: usize,
    /// Index into the document list.
    pub document: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskLayout {
    pub params: LayoutParams,
    pub outer: QrSymbol,
    pub documents: Vec<Vec<u8>>,
    /// One inner symbol per document.
    pub inner_symbols: Vec<QrSymbol>,
    /// Dark outer modules in row-major order.
    pub slots: Vec<InnerSlot>,
}

fn encode_documents(documents: &[Vec<u8>], params: &LayoutParams) -> Result<Vec<QrSymbol>> {
    documents
        .par_iter()
        .enumerate()
        .map(|(index, doc)| {
            qr_encode(doc, params.inner_version, params.inner_ec_level).map_err(|e| match e {
                EncodeError::CapacityExceeded { len, capacity, .. } => {
                    LayoutError::DocumentTooLarge {
                        index,
                        len,
                        capacity,
                        version: params.inner_version,
                        level: params.inner_ec_level,
                    }
                }
            })
        })
        .collect()
}

fn check_params(params: &LayoutParams) -> Result<()> {
    if !(params.pitch.is_finite() && params.pitch > 0.0) {
        return Err(LayoutError::InvalidParameter(format!(
            "pitch must be positive, got {}",
            params.pitch
        )));
    }
    Ok(())
}

impl DiskLayout {
    /// Places inner symbols on every dark module of an already encoded outer
    /// symbol. Short document lists are padded by repeating the last one.
    pub fn assemble(outer: QrSymbol, documents: Vec<Vec<u8>>, params: LayoutParams) -> Result<Self> {
        check_params(&params)?;
        if outer.modules.side() != params.outer_version.side() {
            return Err(LayoutError::InvalidParameter(format!(
                "outer matrix side {} does not match version {}",
                outer.modules.side(),
                params.outer_version
            )));
        }
        let side = outer.modules.side();
        let dark: Vec<(usize, usize)> = (0..side)
            .flat_map(|r| (0..side).map(move |c| (r, c)))
            .filter(|&(r, c)| outer.modules.get(r, c))
            .collect();
        if !dark.is_empty() && documents.is_empty() {
            return Err(LayoutError::NoDocuments { slots: dark.len() });
        }
        let inner_symbols = encode_documents(&documents, &params)?;
        let last = documents.len().saturating_sub(1);
        let slots = dark
            .into_iter()
            .enumerate()
            .map(|(k, (row, col))| InnerSlot {
                row,
                col,
                document: k.min(last),
            })
            .collect();
        Ok(Self {
            params,
            outer,
            documents,
            inner_symbols,
            slots,
        })
    }

    pub fn geometry(&self) -> LayoutGeometry {
        self.params.geometry()
    }

    pub fn dark_module_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_symbol(&self, slot: usize) -> &QrSymbol {
        &self.inner_symbols[self.slots[slot].document]
    }

    pub fn slot_payload(&self, slot: usize) -> &[u8] {
        &self.documents[self.slots[slot].document]
    }

    pub fn manifest(&self) -> Manifest {
        let g = self.geometry();
        let mask = render_mask(self);
        Manifest {
            outer_version: self.params.outer_version,
            outer_ec_level: self.params.outer_ec_level,
            inner_version: self.params.inner_version,
            inner_ec_level: self.params.inner_ec_level,
            pitch_m: self.params.pitch,
            dark_module_count: self.dark_module_count(),
            documents: self
                .documents
                .iter()
                .enumerate()
                .map(|(index, d)| DocumentEntry {
                    index,
                    bytes_sha256: sha256_hex(d),
                })
                .collect(),
            quiet_zone: g.quiet_zone,
            width: g.side_px(),
            height: g.side_px(),
            padding_policy: PADDING_POLICY.to_string(),
            outer_payload_hex: hex::encode(&self.outer.payload),
            mask_sha256: sha256_hex(&mask.to_pbm()),
        }
    }
}

pub fn build_layout(
    outer_payload: &[u8],
    inner_documents: &[Vec<u8>],
    params: &LayoutParams,
) -> Result<DiskLayout> {
    check_params(params)?;
    let outer = qr_encode(outer_payload, params.outer_version, params.outer_ec_level)?;
    DiskLayout::assemble(outer, inner_documents.to_vec(), *params)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentEntry {
    pub index: usize,
    pub bytes_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub outer_version: Version,
    pub outer_ec_level: EcLevel,
    pub inner_version: Version,
    pub inner_ec_level: EcLevel,
    #[serde(rename = "pitch_m")]
    pub pitch_m: f64,
    pub dark_module_count: usize,
    pub documents: Vec<DocumentEntry>,
    pub quiet_zone: usize,
    pub width: usize,
    pub height: usize,
    pub padding_policy: String,
    pub outer_payload_hex: String,
    pub mask_sha256: String,
}

impl Manifest {
    pub fn params(&self) -> LayoutParams {
        LayoutParams {
            outer_version: self.outer_version,
            outer_ec_level: self.outer_ec_level,
            inner_version: self.inner_version,
            inner_ec_level: self.inner_ec_level,
            pitch: self.pitch_m,
            quiet_zone: self.quiet_zone,
        }
    }

    pub fn geometry(&self) -> LayoutGeometry {
        self.params().geometry()
    }

    pub fn outer_payload(&self) -> Result<Vec<u8>> {
        hex::decode(&self.outer_payload_hex).map_err(|e| LayoutError::Manifest(e.to_string()))
    }

    /// Re-encodes the outer symbol and lists its slots with the document
    /// each one carries.
    pub fn slots(&self) -> Result<(QrSymbol, Vec<InnerSlot>)> {
        if self.padding_policy != PADDING_POLICY {
            return Err(LayoutError::Manifest(format!(
                "unknown padding policy {:?}",
                self.padding_policy
            )));
        }
        let outer = qr_encode(&self.outer_payload()?, self.outer_version, self.outer_ec_level)?;
        let side = outer.modules.side();
        let last = self.documents.len().saturating_sub(1);
        let slots: Vec<InnerSlot> = (0..side)
            .flat_map(|r| (0..side).map(move |c| (r, c)))
            .filter(|&(r, c)| outer.modules.get(r, c))
            .enumerate()
            .map(|(k, (row, col))| InnerSlot {
                row,
                col,
                document: k.min(last),
            })
            .collect();
        if slots.len() != self.dark_module_count {
            return Err(LayoutError::Manifest(format!(
                "outer payload gives {} dark modules, manifest says {}",
                slots.len(),
                self.dark_module_count
            )));
        }
        if !slots.is_empty() && self.documents.is_empty() {
            return Err(LayoutError::NoDocuments { slots: slots.len() });
        }
        Ok((outer, slots))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LayoutError::Manifest(e.to_string()))
    }
}

/// Binary mask, `true` = tungsten.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskBitmap {
    pub width: usize,
    pub height: usize,
    /// [m / pixel]
    pub pitch: f64,
    bits: Vec<bool>,
}

impl MaskBitmap {
    pub fn new(width: usize, height: usize, pitch: f64) -> Self {
        Self {
            width,
            height,
            pitch,
            bits: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.bits[row * self.width + col] = v;
    }

    pub fn toggle(&mut self, row: usize, col: usize) {
        let i = row * self.width + col;
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn tungsten_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn tungsten_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.tungsten_count() as f64 / self.bits.len() as f64
        }
    }

    /// Binary PBM (P4), rows padded to whole bytes, MSB first.
    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n# pitch_m {:e}\n{} {}\n", self.pitch, self.width, self.height)
            .into_bytes();
        let stride = self.width.div_ceil(8);
        for r in 0..self.height {
            let mut row = vec![0u8; stride];
            for c in 0..self.width {
                if self.get(r, c) {
                    row[c / 8] |= 0x80 >> (c % 8);
                }
            }
            out.extend_from_slice(&row);
        }
        out
    }

    /// Parses a P4 file. The pitch comes from a `# pitch_m` comment when
    /// present, otherwise from `default_pitch`.
    pub fn from_pbm(bytes: &[u8], default_pitch: f64) -> Result<Self> {
        let mut reader = BufReader::new(bytes);
        let header = read_netpbm_header(&mut reader, b"P4", 2)?;
        let [width, height] = [header.values[0], header.values[1]];
        let pitch = header
            .comments
            .iter()
            .find_map(|c| c.strip_prefix("pitch_m").and_then(|v| v.trim().parse().ok()))
            .unwrap_or(default_pitch);
        let stride = width.div_ceil(8);
        let mut raster = Vec::new();
        reader.read_to_end(&mut raster)?;
        if raster.len() < stride * height {
            return Err(LayoutError::Malformed(format!(
                "raster has {} bytes, need {}",
                raster.len(),
                stride * height
            )));
        }
        let mut m = MaskBitmap::new(width, height, pitch);
        for r in 0..height {
            for c in 0..width {
                m.set(r, c, raster[r * stride + c / 8] & (0x80 >> (c % 8)) != 0);
            }
        }
        Ok(m)
    }

    pub fn write_pbm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_pbm())?;
        Ok(())
    }

    pub fn read_pbm(path: impl AsRef<Path>, default_pitch: f64) -> Result<Self> {
        Self::from_pbm(&std::fs::read(path)?, default_pitch)
    }
}

pub(crate) struct NetpbmHeader {
    pub values: Vec<usize>,
    pub comments: Vec<String>,
}

/// Reads magic, comments and `count` whitespace-separated integers, then the
/// single whitespace byte before the raster.
pub(crate) fn read_netpbm_header(
    reader: &mut impl BufRead,
    magic: &[u8; 2],
    count: usize,
) -> Result<NetpbmHeader> {
    let mut m = [0u8; 2];
    reader.read_exact(&mut m)?;
    if &m != magic {
        return Err(LayoutError::Malformed(format!(
            "expected magic {}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&m)
        )));
    }
    let mut values = Vec::with_capacity(count);
    let mut comments = Vec::new();
    let mut token = String::new();
    let mut byte = [0u8; 1];
    while values.len() < count {
        if reader.read(&mut byte)? == 0 {
            return Err(LayoutError::Malformed("truncated header".into()));
        }
        let b = byte[0];
        if b == b'#' {
            let mut line = String::new();
            reader.read_line(&mut line)?;
            comments.push(line.trim().to_string());
            continue;
        }
        if b.is_ascii_whitespace() {
            if !token.is_empty() {
                values.push(
                    token
                        .parse()
                        .map_err(|_| LayoutError::Malformed(format!("bad header value {token:?}")))?,
                );
                token.clear();
            }
            continue;
        }
        if !b.is_ascii_digit() {
            return Err(LayoutError::Malformed(format!(
                "unexpected byte {b:#04x} in header"
            )));
        }
        token.push(b as char);
    }
    Ok(NetpbmHeader { values, comments })
}

pub fn render_mask(layout: &DiskLayout) -> MaskBitmap {
    let g = layout.geometry();
    let side = g.side_px();
    let mut mask = MaskBitmap::new(side, side, g.pitch);
    let n = g.inner_side;
    for (k, slot) in layout.slots.iter().enumerate() {
        let modules = &layout.slot_symbol(k).modules;
        let (r0, c0) = g.module_origin(slot.row, slot.col);
        for i in 0..n {
            for j in 0..n {
                if modules.get(i, j) {
                    mask.set(r0 + i, c0 + j, true);
                }
            }
        }
    }
    mask
}

/// Matrices recovered from a bitmap: the outer symbol and the inner matrix
/// under every outer module, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLayout {
    pub outer: BitMatrix,
    pub inner: Vec<BitMatrix>,
}

impl SampledLayout {
    pub fn inner_at(&self, row: usize, col: usize) -> &BitMatrix {
        &self.inner[row * self.outer.side() + col]
    }
}

/// Smallest dark fraction of an outer module region read as a dark module.
/// Any inner symbol has at least its three finders dark, about a fifth of
/// the area.
const OUTER_DARK_THRESHOLD: f64 = 0.1;

/// Samples a grid of `side × side` values for outer module `(row, col)`.
pub fn sample_module<T: Copy>(
    geometry: &LayoutGeometry,
    row: usize,
    col: usize,
    width: usize,
    height: usize,
    pixel: impl Fn(usize, usize) -> T,
) -> Result<Vec<T>> {
    let n = geometry.inner_side;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (y, x) = geometry.sample_pixel(row, col, i, j);
            if y < 0 || x < 0 || y as usize >= height || x as usize >= width {
                return Err(LayoutError::OutOfBounds { row: y, col: x });
            }
            out.push(pixel(y as usize, x as usize));
        }
    }
    Ok(out)
}

pub fn check_dimensions(geometry: &LayoutGeometry, width: usize, height: usize) -> Result<()> {
    let side = geometry.side_px();
    if (width, height) != (side, side) {
        return Err(LayoutError::GeometryMismatch {
            expected: (side, side),
            found: (width, height),
        });
    }
    Ok(())
}

pub fn sample_layout(bitmap: &MaskBitmap, geometry: &LayoutGeometry) -> Result<SampledLayout> {
    check_dimensions(geometry, bitmap.width, bitmap.height)?;
    let side = geometry.outer_side;
    let n = geometry.inner_side;
    let cells: Vec<(usize, usize)> = (0..side)
        .flat_map(|r| (0..side).map(move |c| (r, c)))
        .collect();
    let inner = cells
        .par_iter()
        .map(|&(r, c)| {
            let values =
                sample_module(geometry, r, c, bitmap.width, bitmap.height, |y, x| bitmap.get(y, x))?;
            let rows: Vec<Vec<bool>> = values.chunks(n).map(<[bool]>::to_vec).collect();
            Ok(BitMatrix::from_rows(&rows).expect("square sample grid"))
        })
        .collect::<Result<Vec<BitMatrix>>>()?;
    let mut outer = BitMatrix::new(side);
    for (k, m) in inner.iter().enumerate() {
        let fraction = m.dark_count() as f64 / (n * n) as f64;
        outer.set(k / side, k % side, fraction > OUTER_DARK_THRESHOLD);
    }
    Ok(SampledLayout { outer, inner })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(n: usize) -> Vec<Vec<u8>> {
        (0..n).map(|i| format!("doc-{i:03}").into_bytes()).collect()
    }

    #[test]
    fn default_geometry_matches_micrometre_scale() {
        let g = LayoutParams::default().geometry();
        assert_eq!(g.inner_side, 21);
        assert!((g.outer_module_size() - 42e-6).abs() < 1e-18);
        assert!((g.core_size() - 1.05e-3).abs() < 1e-15);
        assert_eq!(g.side_px(), 33 * 21);
    }

    #[test]
    fn padding_repeats_last_document() {
        let layout = build_layout(b"index", &docs(3), &LayoutParams::default()).unwrap();
        assert!(layout.slots.len() > 3);
        assert_eq!(layout.slots[0].document, 0);
        assert_eq!(layout.slots[2].document, 2);
        assert!(layout.slots[3..].iter().all(|s| s.document == 2));
    }

    #[test]
    fn oversized_document_reports_index() {
        let mut d = docs(4);
        d[2] = vec![b'x'; 200];
        match build_layout(b"index", &d, &LayoutParams::default()) {
            Err(LayoutError::DocumentTooLarge { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pbm_round_trip() {
        let layout = build_layout(b"pbm", &docs(2), &LayoutParams::default()).unwrap();
        let mask = render_mask(&layout);
        let back = MaskBitmap::from_pbm(&mask.to_pbm(), 1.0).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn manifest_slots_agree_with_layout() {
        let layout = build_layout(b"slots", &docs(5), &LayoutParams::default()).unwrap();
        let manifest = Manifest::from_json(&layout.manifest().to_json()).unwrap();
        let (outer, slots) = manifest.slots().unwrap();
        assert_eq!(outer, layout.outer);
        assert_eq!(slots, layout.slots);
    }
}
