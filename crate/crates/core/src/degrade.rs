//! Monte-Carlo thermal aging of a rendered mask: Arrhenius bit loss, crack
//! fields that change the local top-nitride thickness, whisker salt and
//! outright destruction. Output is the reflectance raster a microscope would
//! see.
//!
//! Every random draw comes from a ChaCha8 stream addressed by
//! `(seed, channel, item index)`, so results do not depend on iteration or
//! thread order.

use std::collections::BTreeSet;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Exp, Normal, Poisson, StandardUniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{read_netpbm_header, sha256_hex, LayoutError, MaskBitmap};
use crate::optics::StackPair;
use crate::retention::{hazard_to_probability, kelvin_to_joules, RetentionModel, REFERENCE_TEMPERATURE};

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("malformed scenario file: {0}")]
    ScenarioFile(String),
    #[error(transparent)]
    Image(#[from] LayoutError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DegradeError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// [K]
    pub temperature: f64,
    /// [s]
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DamageScenario {
    pub schedule: Vec<Segment>,
    /// Energy barrier of a tungsten pixel [J].
    pub bit_barrier: f64,
    /// [Hz]
    pub attempt_frequency: f64,
    /// [K]
    pub crack_onset_temp: f64,
    /// Cracks per mm² per 100 K above onset, per segment.
    pub crack_density: f64,
    /// [K]
    pub whisker_temp: f64,
    /// [K]
    pub destruction_temp: f64,
    pub seed: u64,
    /// Random-walk step [px].
    pub crack_step: f64,
    /// Mean crack length [px].
    pub crack_mean_length: f64,
    /// Pixels within this distance of a crack are perturbed [px].
    pub crack_radius: f64,
    /// Relative half-width of the uniform top-layer thickness perturbation.
    pub thickness_spread: f64,
    /// Fraction of pixels turned to bright salt in the whisker regime.
    pub whisker_fraction: f64,
    /// Standard deviation of the destroyed-disk noise [gray levels].
    pub destruction_sigma: f64,
}

impl Default for DamageScenario {
    fn default() -> Self {
        Self {
            schedule: Vec::new(),
            bit_barrier: kelvin_to_joules(70.0, REFERENCE_TEMPERATURE),
            attempt_frequency: 1e9,
            crack_onset_temp: 500.0,
            crack_density: 5.0,
            whisker_temp: 923.0,
            destruction_temp: 1373.0,
            seed: 0,
            crack_step: 5.0,
            crack_mean_length: 200.0,
            crack_radius: 2.0,
            thickness_spread: 0.2,
            whisker_fraction: 0.01,
            destruction_sigma: 20.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DegradeError::InvalidScenario(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(DegradeError::InvalidScenario(format!("{name} must be non-negative, got {v}")))
    }
}

impl DamageScenario {
    /// Single segment at `temperature` for `duration` seconds, defaults
    /// otherwise.
    pub fn isothermal(temperature: f64, duration: f64, seed: u64) -> Self {
        Self {
            schedule: vec![Segment {
                temperature,
                duration,
            }],
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.schedule.iter().enumerate() {
            positive(&format!("schedule[{i}].temperature"), s.temperature)?;
            non_negative(&format!("schedule[{i}].duration"), s.duration)?;
        }
        non_negative("bitBarrier", self.bit_barrier)?;
        positive("attemptFrequency", self.attempt_frequency)?;
        positive("crackOnsetTemp", self.crack_onset_temp)?;
        non_negative("crackDensity", self.crack_density)?;
        positive("crackStep", self.crack_step)?;
        positive("crackMeanLength", self.crack_mean_length)?;
        non_negative("crackRadius", self.crack_radius)?;
        non_negative("destructionSigma", self.destruction_sigma)?;
        if !(0.0..1.0).contains(&self.thickness_spread) {
            return Err(DegradeError::InvalidScenario(format!(
                "thicknessSpread must lie in [0, 1), got {}",
                self.thickness_spread
            )));
        }
        if !(0.0..=1.0).contains(&self.whisker_fraction) {
            return Err(DegradeError::InvalidScenario(format!(
                "whiskerFraction must lie in [0, 1], got {}",
                self.whisker_fraction
            )));
        }
        if !(self.crack_onset_temp < self.whisker_temp && self.whisker_temp < self.destruction_temp) {
            return Err(DegradeError::InvalidScenario(format!(
                "need crackOnsetTemp < whiskerTemp < destructionTemp, got {} / {} / {}",
                self.crack_onset_temp, self.whisker_temp, self.destruction_temp
            )));
        }
        Ok(())
    }

    /// Segments that last a non-zero time.
    fn active(&self) -> impl Iterator<Item = (usize, &Segment)> {
        self.schedule.iter().enumerate().filter(|(_, s)| s.duration > 0.0)
    }

    /// Accumulated hazard Σ rate(T_i)·t_i of one tungsten pixel.
    pub fn hazard(&self) -> Result<f64> {
        self.validate()?;
        let mut total = 0.0;
        for (_, s) in self.active() {
            let model = RetentionModel::new(self.attempt_frequency, self.bit_barrier, s.temperature)
                .map_err(|e| DegradeError::InvalidScenario(e.to_string()))?;
            total += model.rate() * s.duration;
        }
        Ok(total)
    }

    pub fn flip_probability(&self) -> Result<f64> {
        Ok(hazard_to_probability(self.hazard()?))
    }

    pub fn whiskers(&self) -> bool {
        self.active().any(|(_, s)| s.temperature >= self.whisker_temp)
    }

    pub fn destroyed(&self) -> bool {
        self.active().any(|(_, s)| s.temperature >= self.destruction_temp)
    }

    /// Expected number of cracks on a disk of the given area.
    pub fn expected_cracks(&self, area_mm2: f64) -> f64 {
        self.active()
            .map(|(_, s)| self.segment_crack_mean(s, area_mm2))
            .sum()
    }

    fn segment_crack_mean(&self, s: &Segment, area_mm2: f64) -> f64 {
        let excess = s.temperature - self.crack_onset_temp;
        if excess > 0.0 {
            self.crack_density * area_mm2 * excess / 100.0
        } else {
            0.0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self =
            serde_json::from_str(text).map_err(|e| DegradeError::ScenarioFile(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Hash of the compact JSON form, used as image provenance.
    pub fn sha256(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("scenario serializes").as_bytes())
    }
}

/// Channels of the counter-based generator.
mod channel {
    pub const FLIP: u64 = 1;
    pub const CRACK_COUNT: u64 = 2;
    pub const CRACK_SHAPE: u64 = 3;
    pub const THICKNESS: u64 = 4;
    pub const WHISKER: u64 = 5;
    pub const DESTRUCTION: u64 = 6;
    pub const CLASSIFIER: u64 = 7;
}
pub(crate) use channel::CLASSIFIER as CLASSIFIER_CHANNEL;

/// Keyed access to independent ChaCha8 streams. Each `(channel, index)`
/// pair owns 2¹⁶ words of its channel's stream.
#[derive(Clone)]
pub struct CounterRng {
    base: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, channel: u64, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(channel);
        rng.set_word_pos((index as u128) << 16);
        rng
    }

    /// First uniform draw in [0, 1) of a stream.
    pub fn unit(&self, channel: u64, index: u64) -> f64 {
        StandardUniform.sample(&mut self.stream(channel, index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub scenario_sha256: Option<[u8; 32]>,
    pub mask_sha256: Option<[u8; 32]>,
}

fn hash_bytes(hex_digest: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    hex::decode_to_slice(hex_digest, &mut out).expect("sha256 hex digest");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgingStats {
    pub tungsten_pixels: usize,
    pub flipped_bits: usize,
    pub cracks: usize,
    pub cracked_pixels: usize,
    pub whisker_pixels: usize,
    pub destroyed: bool,
}

/// 8-bit reflectance raster, 0 ↔ R = 0 and 255 ↔ R = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AgedDiskImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub provenance: Provenance,
    pub stats: AgingStats,
}

pub fn reflectance_to_gray(r: f64) -> u8 {
    (r.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Gray levels of pristine bare and tungsten regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayLevels {
    pub bare: u8,
    pub metal: u8,
}

impl GrayLevels {
    pub fn of(stacks: &StackPair) -> Self {
        Self {
            bare: reflectance_to_gray(stacks.bare.reflectance()),
            metal: reflectance_to_gray(stacks.metal.reflectance()),
        }
    }
}

impl AgedDiskImage {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut header = String::from("P5\n");
        if let Some(h) = self.provenance.scenario_sha256 {
            header.push_str(&format!("# scenario_sha256 {}\n", hex::encode(h)));
        }
        if let Some(h) = self.provenance.mask_sha256 {
            header.push_str(&format!("# mask_sha256 {}\n", hex::encode(h)));
        }
        header.push_str(&format!("{} {}\n255\n", self.width, self.height));
        let mut out = header.into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut reader = BufReader::new(bytes);
        let header = read_netpbm_header(&mut reader, b"P5", 3)?;
        let (width, height, maxval) = (header.values[0], header.values[1], header.values[2]);
        if maxval != 255 {
            return Err(LayoutError::Malformed(format!("maxval {maxval}, expected 255")).into());
        }
        let mut pixels = Vec::with_capacity(width * height);
        reader.read_to_end(&mut pixels)?;
        if pixels.len() < width * height {
            return Err(LayoutError::Malformed(format!(
                "raster has {} bytes, need {}",
                pixels.len(),
                width * height
            ))
            .into());
        }
        pixels.truncate(width * height);
        let digest = |key: &str| -> Result<Option<[u8; 32]>> {
            header
                .comments
                .iter()
                .find_map(|c| c.strip_prefix(key).map(str::trim))
                .map(|h| {
                    let mut out = [0u8; 32];
                    hex::decode_to_slice(h, &mut out)
                        .map_err(|e| LayoutError::Malformed(format!("{key}: {e}")))?;
                    Ok(out)
                })
                .transpose()
        };
        Ok(Self {
            width,
            height,
            pixels,
            provenance: Provenance {
                scenario_sha256: digest("scenario_sha256")?,
                mask_sha256: digest("mask_sha256")?,
            },
            stats: AgingStats::default(),
        })
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_pgm())?;
        Ok(())
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pgm(&std::fs::read(path)?)
    }
}

/// Reflectance image of an undamaged disk.
pub fn render_pristine(mask: &MaskBitmap, stacks: &StackPair) -> AgedDiskImage {
    let levels = GrayLevels::of(stacks);
    AgedDiskImage {
        width: mask.width,
        height: mask.height,
        pixels: mask
            .bits()
            .iter()
            .map(|&b| if b { levels.metal } else { levels.bare })
            .collect(),
        provenance: Provenance {
            scenario_sha256: None,
            mask_sha256: Some(hash_bytes(&sha256_hex(&mask.to_pbm()))),
        },
        stats: AgingStats {
            tungsten_pixels: mask.tungsten_count(),
            ..AgingStats::default()
        },
    }
}

pub fn expected_flip_count(mask: &MaskBitmap, scenario: &DamageScenario) -> Result<f64> {
    Ok(scenario.flip_probability()? * mask.tungsten_count() as f64)
}

/// Centre-line of one crack in pixel coordinates `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crack {
    pub points: Vec<(f64, f64)>,
}

/// Heading changes between steps are normal with this deviation [rad].
const CRACK_TURN_SIGMA: f64 = 0.5;

fn sample_crack(rng: &mut ChaCha8Rng, scenario: &DamageScenario, width: usize, height: usize) -> Crack {
    let u = |rng: &mut ChaCha8Rng| -> f64 { StandardUniform.sample(rng) };
    let length = Exp::new(1.0 / scenario.crack_mean_length)
        .expect("positive mean length")
        .sample(rng);
    let steps = (length / scenario.crack_step).ceil().max(1.0) as usize;
    let turn = Normal::new(0.0, CRACK_TURN_SIGMA).expect("finite sigma");
    let mut y = u(rng) * height as f64;
    let mut x = u(rng) * width as f64;
    let mut heading = u(rng) * std::f64::consts::TAU;
    let mut points = Vec::with_capacity(steps + 1);
    points.push((y, x));
    for _ in 0..steps {
        heading += turn.sample(rng);
        y += scenario.crack_step * heading.sin();
        x += scenario.crack_step * heading.cos();
        points.push((y, x));
    }
    Crack { points }
}

/// Cracks for every active segment above onset, in (segment, index) order.
pub fn sample_cracks(scenario: &DamageScenario, width: usize, height: usize, pitch: f64) -> Vec<Crack> {
    let rng = CounterRng::new(scenario.seed);
    let area_mm2 = (width as f64 * pitch * 1e3) * (height as f64 * pitch * 1e3);
    let mut cracks = Vec::new();
    for (s, seg) in scenario.active() {
        let mean = scenario.segment_crack_mean(seg, area_mm2);
        if mean <= 0.0 {
            continue;
        }
        let count = Poisson::new(mean)
            .expect("positive finite mean")
            .sample(&mut rng.stream(channel::CRACK_COUNT, s as u64)) as u64;
        cracks.extend((0..count).into_par_iter().map(|k| {
            let mut r = rng.stream(channel::CRACK_SHAPE, ((s as u64) << 32) | k);
            sample_crack(&mut r, scenario, width, height)
        }).collect::<Vec<_>>());
    }
    cracks
}

fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dy, dx) = (b.0 - a.0, b.1 - a.1);
    let len2 = dy * dy + dx * dx;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dy + (p.1 - a.1) * dx) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qy, qx) = (a.0 + t * dy, a.1 + t * dx);
    ((p.0 - qy).powi(2) + (p.1 - qx).powi(2)).sqrt()
}

/// Pixel indices whose centres lie within `radius` of any crack.
pub fn crack_footprint(cracks: &[Crack], radius: f64, width: usize, height: usize) -> BTreeSet<usize> {
    let mut hit = BTreeSet::new();
    for crack in cracks {
        for w in crack.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let r0 = (a.0.min(b.0) - radius).floor().max(0.0) as usize;
            let r1 = (a.0.max(b.0) + radius).ceil().min(height as f64 - 1.0);
            let c0 = (a.1.min(b.1) - radius).floor().max(0.0) as usize;
            let c1 = (a.1.max(b.1) + radius).ceil().min(width as f64 - 1.0);
            if r1 < 0.0 || c1 < 0.0 {
                continue;
            }
            for r in r0..=r1 as usize {
                for c in c0..=c1 as usize {
                    let centre = (r as f64 + 0.5, c as f64 + 0.5);
                    if distance_to_segment(centre, a, b) <= radius {
                        hit.insert(r * width + c);
                    }
                }
            }
        }
    }
    hit
}

pub fn age_disk(mask: &MaskBitmap, stacks: &StackPair, scenario: &DamageScenario) -> Result<AgedDiskImage> {
    scenario.validate()?;
    let (width, height) = (mask.width, mask.height);
    let rng = CounterRng::new(scenario.seed);
    let p_flip = scenario.flip_probability()?;

    let mut tungsten: Vec<bool> = mask.bits().to_vec();
    let mut flipped = 0;
    if p_flip > 0.0 {
        let flips: Vec<usize> = tungsten
            .par_iter()
            .enumerate()
            .filter(|&(i, &w)| w && rng.unit(channel::FLIP, i as u64) < p_flip)
            .map(|(i, _)| i)
            .collect();
        flipped = flips.len();
        for i in flips {
            tungsten[i] = false;
        }
    }

    let levels = GrayLevels::of(stacks);
    let mut pixels: Vec<u8> = tungsten
        .iter()
        .map(|&w| if w { levels.metal } else { levels.bare })
        .collect();

    let cracks = sample_cracks(scenario, width, height, mask.pitch);
    let footprint = crack_footprint(&cracks, scenario.crack_radius, width, height);
    let cracked: Vec<usize> = footprint.into_iter().collect();
    let perturbed: Vec<(usize, u8)> = cracked
        .par_iter()
        .map(|&i| {
            let u = rng.unit(channel::THICKNESS, i as u64);
            let factor = 1.0 + scenario.thickness_spread * (2.0 * u - 1.0);
            let local = stacks.with_top_scaled(factor);
            let r = if tungsten[i] {
                local.metal.reflectance()
            } else {
                local.bare.reflectance()
            };
            (i, reflectance_to_gray(r))
        })
        .collect();
    for (i, g) in perturbed {
        pixels[i] = g;
    }

    let mut whisker_pixels = 0;
    if scenario.whiskers() {
        let salt: Vec<usize> = (0..pixels.len())
            .into_par_iter()
            .filter(|&i| rng.unit(channel::WHISKER, i as u64) < scenario.whisker_fraction)
            .collect();
        whisker_pixels = salt.len();
        for i in salt {
            pixels[i] = 255;
        }
    }

    let destroyed = scenario.destroyed();
    if destroyed {
        let noise = Normal::new(128.0, scenario.destruction_sigma).expect("finite sigma");
        pixels = (0..pixels.len())
            .into_par_iter()
            .map(|i| {
                let v: f64 = noise.sample(&mut rng.stream(channel::DESTRUCTION, i as u64));
                v.round().clamp(0.0, 255.0) as u8
            })
            .collect();
    }

    Ok(AgedDiskImage {
        width,
        height,
        pixels,
        provenance: Provenance {
            scenario_sha256: Some(hash_bytes(&scenario.sha256())),
            mask_sha256: Some(hash_bytes(&sha256_hex(&mask.to_pbm()))),
        },
        stats: AgingStats {
            tungsten_pixels: mask.tungsten_count(),
            flipped_bits: flipped,
            cracks: cracks.len(),
            cracked_pixels: cracked.len(),
            whisker_pixels,
            destroyed,
        },
    })
}
