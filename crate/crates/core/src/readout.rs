//! Reading an aged disk image back: per-pixel classification, manifest-driven
//! sampling of every inner symbol, decoding with optional finder repair, and
//! the survival report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degrade::{AgedDiskImage, CounterRng, GrayLevels, CLASSIFIER_CHANNEL};
use crate::layout::{
    check_dimensions, sample_module, sha256_hex, LayoutError, LayoutGeometry, Manifest,
};
use crate::qrcodec::{qr_decode, qr_encode, repair_finders, BitMatrix, DecodeReport};

pub const DEFAULT_ALPHA_TARGET: f64 = 1e-6;
pub const DEFAULT_ERASURE_BAND: f64 = 0.1;
/// Gray levels a sample may sit from a pristine level before the white-light
/// classifier treats it as off-colour.
pub const DEFAULT_COLOUR_TOLERANCE: u8 = 2;
/// Bit-error fraction charged to every module of an undecoded symbol.
pub const UNDECODED_PENALTY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("image was rendered from mask {image}, manifest describes mask {manifest}")]
    ProvenanceMismatch { image: String, manifest: String },
    #[error("pristine gray levels coincide ({0}); nothing to classify")]
    NoContrast(u8),
}

pub type Result<T> = std::result::Result<T, ReadoutError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadMode {
    /// Single-wavelength illumination: colour depends on reflectance only,
    /// so the two pristine levels are separated by a threshold.
    #[default]
    Monochromatic,
    /// Broadband illumination: samples off both pristine colours cannot be
    /// assigned and come out as a coin flip.
    Whitelight,
}

impl std::str::FromStr for ReadMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "monochromatic" | "mono" => Ok(Self::Monochromatic),
            "whitelight" | "white" => Ok(Self::Whitelight),
            other => Err(format!("unknown read mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub mode: ReadMode,
    pub levels: GrayLevels,
    /// Half-width of the erasure band around the threshold, relative to
    /// the threshold.
    pub erasure_band: f64,
    pub colour_tolerance: u8,
    /// Seed of the white-light coin flips.
    pub seed: u64,
}

impl ClassifyOptions {
    pub fn new(levels: GrayLevels, mode: ReadMode) -> Self {
        Self {
            mode,
            levels,
            erasure_band: DEFAULT_ERASURE_BAND,
            colour_tolerance: DEFAULT_COLOUR_TOLERANCE,
            seed: 0,
        }
    }

    pub fn threshold(&self) -> f64 {
        (self.levels.bare as f64 + self.levels.metal as f64) / 2.0
    }
}

/// Per-pixel decision: tungsten or not, and whether the sample is unreliable.
#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub width: usize,
    pub height: usize,
    pub dark: Vec<bool>,
    pub erased: Vec<bool>,
}

impl Classified {
    pub fn dark_at(&self, row: usize, col: usize) -> bool {
        self.dark[row * self.width + col]
    }

    pub fn erased_at(&self, row: usize, col: usize) -> bool {
        self.erased[row * self.width + col]
    }
}

pub fn classify(
    image: &AgedDiskImage,
    geometry: &LayoutGeometry,
    options: &ClassifyOptions,
) -> Result<Classified> {
    check_dimensions(geometry, image.width, image.height)?;
    let GrayLevels { bare, metal } = options.levels;
    if bare == metal {
        return Err(ReadoutError::NoContrast(bare));
    }
    let threshold = options.threshold();
    let band = options.erasure_band * threshold;
    let metal_brighter = metal > bare;
    let rng = CounterRng::new(options.seed);
    let (dark, erased): (Vec<bool>, Vec<bool>) = image
        .pixels
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            if options.mode == ReadMode::Whitelight {
                let off = g.abs_diff(bare).min(g.abs_diff(metal));
                if off > options.colour_tolerance {
                    return (rng.unit(CLASSIFIER_CHANNEL, i as u64) < 0.5, false);
                }
            }
            let v = g as f64;
            ((v > threshold) == metal_brighter, (v - threshold).abs() <= band)
        })
        .unzip();
    Ok(Classified {
        width: image.width,
        height: image.height,
        dark,
        erased,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadOptions {
    pub classify: ClassifyOptions,
    pub repair_finders: bool,
    pub alpha_target: f64,
}

impl ReadOptions {
    pub fn new(levels: GrayLevels, mode: ReadMode) -> Self {
        Self {
            classify: ClassifyOptions::new(levels, mode),
            repair_finders: false,
            alpha_target: DEFAULT_ALPHA_TARGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SymbolStatus {
    Decoded,
    Repaired,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SymbolReport {
    pub index: usize,
    pub status: SymbolStatus,
    pub corrected: usize,
    pub erasures: usize,
    pub finder: [bool; 3],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReadoutReport {
    pub total_inner: usize,
    pub decoded: usize,
    pub decoded_after_repair: usize,
    pub alpha_observed: f64,
    pub alpha_target: f64,
    pub passed: bool,
    pub mode: ReadMode,
    pub undecoded_penalty: f64,
    pub per_symbol: Vec<SymbolReport>,
}

impl ReadoutReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn to_matrix(values: &[bool], n: usize) -> BitMatrix {
    let rows: Vec<Vec<bool>> = values.chunks(n).map(<[bool]>::to_vec).collect();
    BitMatrix::from_rows(&rows).expect("square sample grid")
}

fn accepted(report: &DecodeReport, expected_sha: &str) -> bool {
    matches!(&report.payload, Ok(p) if sha256_hex(p) == expected_sha)
}

fn failure_text(report: &DecodeReport) -> String {
    match &report.payload {
        Ok(_) => "payload does not match the manifest".to_string(),
        Err(e) => e.to_string(),
    }
}

struct SymbolOutcome {
    report: SymbolReport,
    bit_errors: f64,
}

pub fn read_disk(
    image: &AgedDiskImage,
    manifest: &Manifest,
    options: &ReadOptions,
) -> Result<ReadoutReport> {
    let geometry = manifest.geometry();
    if let Some(h) = image.provenance.mask_sha256 {
        let image_hash = hex::encode(h);
        if image_hash != manifest.mask_sha256 {
            return Err(ReadoutError::ProvenanceMismatch {
                image: image_hash,
                manifest: manifest.mask_sha256.clone(),
            });
        }
    }
    let classified = classify(image, &geometry, &options.classify)?;
    let (outer, slots) = manifest.slots()?;
    let n = geometry.inner_side;
    let (w, h) = (image.width, image.height);

    let outcomes = slots
        .par_iter()
        .enumerate()
        .map(|(index, slot)| -> Result<SymbolOutcome> {
            let dark = sample_module(&geometry, slot.row, slot.col, w, h, |y, x| {
                classified.dark_at(y, x)
            })?;
            let erased = sample_module(&geometry, slot.row, slot.col, w, h, |y, x| {
                classified.erased_at(y, x)
            })?;
            let matrix = to_matrix(&dark, n);
            let erasures = to_matrix(&erased, n);
            let erasure_arg = (erasures.dark_count() > 0).then_some(&erasures);
            let expected = &manifest.documents[slot.document].bytes_sha256;

            let first = qr_decode(&matrix, erasure_arg);
            let (status, used) = if accepted(&first, expected) {
                (SymbolStatus::Decoded, first)
            } else if options.repair_finders {
                let second = qr_decode(&repair_finders(&matrix), erasure_arg);
                if accepted(&second, expected) {
                    (SymbolStatus::Repaired, second)
                } else {
                    (SymbolStatus::Failed, first)
                }
            } else {
                (SymbolStatus::Failed, first)
            };

            let bit_errors = match (&status, &used.payload) {
                (SymbolStatus::Failed, _) | (_, Err(_)) => UNDECODED_PENALTY * (n * n) as f64,
                (_, Ok(payload)) => {
                    let reference = qr_encode(payload, manifest.inner_version, manifest.inner_ec_level)
                        .map_err(LayoutError::from)?;
                    matrix.hamming(&reference.modules).unwrap_or(n * n) as f64
                }
            };
            Ok(SymbolOutcome {
                report: SymbolReport {
                    index,
                    status,
                    corrected: used.corrected_codewords,
                    erasures: used.used_erasures,
                    finder: used.finder_status,
                    failure: (status == SymbolStatus::Failed).then(|| failure_text(&used)),
                },
                bit_errors,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Everything outside the inner symbols should read as bare.
    let mut in_slot = vec![false; w * h];
    for slot in &slots {
        let (r0, c0) = geometry.module_origin(slot.row, slot.col);
        for i in 0..n {
            in_slot[(r0 + i) * w + c0..(r0 + i) * w + c0 + n].fill(true);
        }
    }
    let background_errors = (0..w * h)
        .filter(|&i| !in_slot[i] && classified.dark[i])
        .count() as f64;
    debug_assert_eq!(slots.len(), outer.modules.dark_count());

    let decoded = outcomes
        .iter()
        .filter(|o| o.report.status == SymbolStatus::Decoded)
        .count();
    let decoded_after_repair = outcomes
        .iter()
        .filter(|o| o.report.status != SymbolStatus::Failed)
        .count();
    let total_errors = background_errors + outcomes.iter().map(|o| o.bit_errors).sum::<f64>();
    let alpha_observed = if w * h == 0 {
        0.0
    } else {
        total_errors / (w * h) as f64
    };
    Ok(ReadoutReport {
        total_inner: slots.len(),
        decoded,
        decoded_after_repair,
        alpha_observed,
        alpha_target: options.alpha_target,
        passed: alpha_observed <= options.alpha_target,
        mode: options.classify.mode,
        undecoded_penalty: UNDECODED_PENALTY,
        per_symbol: outcomes.into_iter().map(|o| o.report).collect(),
    })
}
