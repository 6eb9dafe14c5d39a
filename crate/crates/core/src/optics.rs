//! Normal-incidence thin-film optics with the characteristic-matrix method,
//! and the thickness search that maximises the reflectance contrast between
//! bare and tungsten-covered regions of the medium.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

/// Index table shipped with the crate (Si, Si3N4, W, air around 550 nm).
pub const BUNDLED_INDEX_TABLE: &str = include_str!("../data/index_table.csv");

pub const DEFAULT_WAVELENGTH: f64 = 550e-9;

/// False for NaN as well as non-positive values.
fn positive(x: f64) -> bool {
    x > 0.0
}

fn non_negative(x: f64) -> bool {
    x >= 0.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("invalid layer {name}: {reason}")]
    InvalidLayer { name: String, reason: &'static str },
    #[error("wavelength must be positive, got {0}")]
    InvalidWavelength(f64),
    #[error("stacks disagree on {0}")]
    Mismatch(&'static str),
    #[error("unknown material {0:?}")]
    UnknownMaterial(String),
    #[error("wavelength {wavelength_nm} nm outside tabulated range {min_nm}..{max_nm} nm for {material}")]
    OutOfRange {
        material: String,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },
    #[error("index table line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("index table I/O: {0}")]
    Io(String),
    #[error("bad optimisation setup: {0}")]
    BadSearch(&'static str),
}

pub type Result<T> = std::result::Result<T, OpticsError>;

/// A homogeneous layer. `thickness` is `None` for the semi-infinite ambient
/// and substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalLayer {
    pub name: String,
    pub index: Complex64,
    pub thickness: Option<f64>,
}

impl OpticalLayer {
    pub fn film(name: impl Into<String>, index: Complex64, thickness: f64) -> Self {
        Self {
            name: name.into(),
            index,
            thickness: Some(thickness),
        }
    }

    pub fn semi_infinite(name: impl Into<String>, index: Complex64) -> Self {
        Self {
            name: name.into(),
            index,
            thickness: None,
        }
    }

    fn check_index(&self) -> Result<()> {
        if !positive(self.index.re) || !non_negative(self.index.im) || !self.index.is_finite() {
            return Err(OpticsError::InvalidLayer {
                name: self.name.clone(),
                reason: "index needs Re(n) > 0 and Im(n) >= 0",
            });
        }
        Ok(())
    }
}

/// Ambient, films listed top to bottom, substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub ambient: OpticalLayer,
    pub layers: Vec<OpticalLayer>,
    pub substrate: OpticalLayer,
    pub wavelength: f64,
}

/// Reflectance and transmittance of a stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub r: Complex64,
    pub reflectance: f64,
    pub transmittance: f64,
}

impl LayerStack {
    pub fn new(
        ambient: OpticalLayer,
        layers: Vec<OpticalLayer>,
        substrate: OpticalLayer,
        wavelength: f64,
    ) -> Result<Self> {
        let stack = Self {
            ambient,
            layers,
            substrate,
            wavelength,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if !positive(self.wavelength) || !self.wavelength.is_finite() {
            return Err(OpticsError::InvalidWavelength(self.wavelength));
        }
        for end in [&self.ambient, &self.substrate] {
            end.check_index()?;
            if end.thickness.is_some() {
                return Err(OpticsError::InvalidLayer {
                    name: end.name.clone(),
                    reason: "ambient and substrate must be semi-infinite",
                });
            }
        }
        if self.ambient.index.im != 0.0 {
            return Err(OpticsError::InvalidLayer {
                name: self.ambient.name.clone(),
                reason: "ambient must be non-absorbing",
            });
        }
        for layer in &self.layers {
            layer.check_index()?;
            match layer.thickness {
                Some(d) if d > 0.0 && d.is_finite() => {}
                _ => {
                    return Err(OpticsError::InvalidLayer {
                        name: layer.name.clone(),
                        reason: "film thickness must be finite and > 0",
                    })
                }
            }
        }
        Ok(())
    }

    /// Characteristic-matrix evaluation. Each film contributes
    /// `[[cos δ, −i sin δ / n], [−i n sin δ, cos δ]]` with `δ = 2π n d / λ`;
    /// `[B, C] = Π M · [1, n_s]` and `r = (n_0 B − C)/(n_0 B + C)`.
    pub fn response(&self) -> Response {
        let i = Complex64::i();
        let (mut b, mut c) = (Complex64::new(1.0, 0.0), self.substrate.index);
        for layer in self.layers.iter().rev() {
            let n = layer.index;
            let delta = 2.0 * PI * n * layer.thickness.unwrap_or(0.0) / self.wavelength;
            let (sin, cos) = (delta.sin(), delta.cos());
            let nb = cos * b - i * sin / n * c;
            let nc = -i * n * sin * b + cos * c;
            b = nb;
            c = nc;
        }
        let n0 = self.ambient.index;
        let denom = n0 * b + c;
        let r = (n0 * b - c) / denom;
        let reflectance = r.norm_sqr().clamp(0.0, 1.0);
        let transmittance = 4.0 * n0.re * self.substrate.index.re / denom.norm_sqr();
        Response {
            r,
            reflectance,
            transmittance,
        }
    }

    pub fn reflectance(&self) -> f64 {
        self.response().reflectance
    }
}

pub fn reflectance(stack: &LayerStack) -> f64 {
    stack.reflectance()
}

/// `|R_bare − R_metal|`.
pub fn contrast(bare: &LayerStack, metallized: &LayerStack) -> Result<f64> {
    if bare.wavelength != metallized.wavelength {
        return Err(OpticsError::Mismatch("wavelength"));
    }
    if bare.ambient.index != metallized.ambient.index {
        return Err(OpticsError::Mismatch("ambient"));
    }
    Ok((bare.reflectance() - metallized.reflectance()).abs())
}

#[derive(Debug, Deserialize)]
struct IndexRow {
    material: String,
    wavelength_nm: f64,
    n_real: f64,
    n_imag: f64,
}

/// Tabulated complex refractive indices, per material sorted by wavelength.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexTable {
    materials: BTreeMap<String, Vec<(f64, Complex64)>>,
}

impl IndexTable {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_INDEX_TABLE).expect("bundled index table is well-formed")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| OpticsError::Malformed {
                line: 1,
                reason: e.to_string(),
            })?
            .clone();
        let expected = ["material", "wavelength_nm", "n_real", "n_imag"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(OpticsError::Malformed {
                line: 1,
                reason: format!("header must be {}", expected.join(",")),
            });
        }
        let mut materials: BTreeMap<String, Vec<(f64, Complex64)>> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| OpticsError::Malformed {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                reason: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let row: IndexRow =
                record
                    .deserialize(Some(&headers))
                    .map_err(|e| OpticsError::Malformed {
                        line,
                        reason: e.to_string(),
                    })?;
            if !positive(row.wavelength_nm) || !positive(row.n_real) || !non_negative(row.n_imag) {
                return Err(OpticsError::Malformed {
                    line,
                    reason: "need wavelength > 0, n_real > 0, n_imag >= 0".into(),
                });
            }
            let samples = materials.entry(row.material.clone()).or_default();
            if let Some(&(last, _)) = samples.last() {
                if row.wavelength_nm <= last {
                    return Err(OpticsError::Malformed {
                        line,
                        reason: format!("wavelengths for {} must strictly increase", row.material),
                    });
                }
            }
            samples.push((row.wavelength_nm, Complex64::new(row.n_real, row.n_imag)));
        }
        for (name, samples) in &materials {
            if samples.len() < 2 {
                return Err(OpticsError::Malformed {
                    line: 0,
                    reason: format!("{name} needs at least two samples"),
                });
            }
        }
        Ok(Self { materials })
    }

    pub fn materials(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }

    pub fn samples(&self, material: &str) -> Option<&[(f64, Complex64)]> {
        self.materials.get(material).map(Vec::as_slice)
    }

    /// Linear interpolation of real and imaginary parts; `wavelength` in metres.
    pub fn interpolate(&self, material: &str, wavelength: f64) -> Result<Complex64> {
        let samples = self
            .materials
            .get(material)
            .ok_or_else(|| OpticsError::UnknownMaterial(material.to_string()))?;
        let nm = wavelength * 1e9;
        let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
        let out_of_range = || OpticsError::OutOfRange {
            material: material.to_string(),
            wavelength_nm: nm,
            min_nm: first,
            max_nm: last,
        };
        if !(nm >= first && nm <= last) {
            // tolerate metre/nanometre round-off at the ends
            if (nm - first).abs() <= 1e-9 * first {
                return Ok(samples[0].1);
            }
            if (nm - last).abs() <= 1e-9 * last {
                return Ok(samples[samples.len() - 1].1);
            }
            return Err(out_of_range());
        }
        let hi = samples.partition_point(|&(w, _)| w < nm);
        if samples[hi].0 == nm || (samples[hi].0 - nm).abs() <= 1e-9 * nm {
            return Ok(samples[hi].1);
        }
        let (w0, n0) = samples[hi - 1];
        let (w1, n1) = samples[hi];
        let f = (nm - w0) / (w1 - w0);
        Ok(Complex64::new(
            n0.re + f * (n1.re - n0.re),
            n0.im + f * (n1.im - n0.im),
        ))
    }
}

pub fn load_index_table(path: impl AsRef<Path>) -> Result<IndexTable> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| OpticsError::Io(format!("{}: {e}", path.as_ref().display())))?;
    IndexTable::parse(&text)
}

pub fn interpolate(table: &IndexTable, material: &str, wavelength: f64) -> Result<Complex64> {
    table.interpolate(material, wavelength)
}

/// Thicknesses of the patterned medium: silicon wafer, bottom nitride,
/// tungsten islands, top nitride, air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumDesign {
    pub bottom_nitride: f64,
    pub tungsten: f64,
    pub top_nitride: f64,
    pub wavelength: f64,
}

impl Default for MediumDesign {
    fn default() -> Self {
        Self {
            bottom_nitride: 338e-9,
            tungsten: 50e-9,
            top_nitride: 225e-9,
            wavelength: DEFAULT_WAVELENGTH,
        }
    }
}

/// The two reflecting regions of a patterned medium.
#[derive(Debug, Clone, PartialEq)]
pub struct StackPair {
    pub bare: LayerStack,
    pub metal: LayerStack,
}

impl StackPair {
    pub fn contrast(&self) -> f64 {
        (self.bare.reflectance() - self.metal.reflectance()).abs()
    }

    /// Same pair with the top layer (first film) scaled by `factor` in both
    /// stacks.
    pub fn with_top_scaled(&self, factor: f64) -> StackPair {
        let scale = |s: &LayerStack| {
            let mut s = s.clone();
            if let Some(top) = s.layers.first_mut() {
                top.thickness = top.thickness.map(|d| d * factor);
            }
            s
        };
        StackPair {
            bare: scale(&self.bare),
            metal: scale(&self.metal),
        }
    }
}

impl MediumDesign {
    /// Builds both regions. The top nitride is conformal, so it has the same
    /// thickness over bare and tungsten areas.
    pub fn stacks(&self, table: &IndexTable) -> Result<StackPair> {
        let w = self.wavelength;
        let air = OpticalLayer::semi_infinite("air", table.interpolate("air", w)?);
        let si = OpticalLayer::semi_infinite("Si", table.interpolate("Si", w)?);
        let sin = table.interpolate("Si3N4", w)?;
        let tungsten = table.interpolate("W", w)?;
        let bare = LayerStack::new(
            air.clone(),
            vec![
                OpticalLayer::film("Si3N4 top", sin, self.top_nitride),
                OpticalLayer::film("Si3N4 bottom", sin, self.bottom_nitride),
            ],
            si.clone(),
            w,
        )?;
        let metal = LayerStack::new(
            air,
            vec![
                OpticalLayer::film("Si3N4 top", sin, self.top_nitride),
                OpticalLayer::film("W", tungsten, self.tungsten),
                OpticalLayer::film("Si3N4 bottom", sin, self.bottom_nitride),
            ],
            si,
            w,
        )?;
        Ok(StackPair { bare, metal })
    }
}

/// Thickness of a template film: fixed, or taken from one of the two free
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thickness {
    Fixed(f64),
    Free(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateLayer {
    pub name: String,
    pub index: Complex64,
    pub thickness: Thickness,
}

impl TemplateLayer {
    pub fn new(name: impl Into<String>, index: Complex64, thickness: Thickness) -> Self {
        Self {
            name: name.into(),
            index,
            thickness,
        }
    }
}

/// A bare/metallized stack pair with up to two free thicknesses.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastTemplate {
    pub ambient: OpticalLayer,
    pub substrate: OpticalLayer,
    pub wavelength: f64,
    pub bare: Vec<TemplateLayer>,
    pub metal: Vec<TemplateLayer>,
}

impl ContrastTemplate {
    /// Template over [`MediumDesign`]: free 0 = bottom nitride, free 1 = top
    /// nitride, tungsten fixed.
    pub fn medium(table: &IndexTable, tungsten: f64, wavelength: f64) -> Result<Self> {
        let sin = table.interpolate("Si3N4", wavelength)?;
        let w = table.interpolate("W", wavelength)?;
        Ok(Self {
            ambient: OpticalLayer::semi_infinite("air", table.interpolate("air", wavelength)?),
            substrate: OpticalLayer::semi_infinite("Si", table.interpolate("Si", wavelength)?),
            wavelength,
            bare: vec![
                TemplateLayer::new("Si3N4 top", sin, Thickness::Free(1)),
                TemplateLayer::new("Si3N4 bottom", sin, Thickness::Free(0)),
            ],
            metal: vec![
                TemplateLayer::new("Si3N4 top", sin, Thickness::Free(1)),
                TemplateLayer::new("W", w, Thickness::Fixed(tungsten)),
                TemplateLayer::new("Si3N4 bottom", sin, Thickness::Free(0)),
            ],
        })
    }

    fn build(&self, layers: &[TemplateLayer], free: [f64; 2]) -> Result<LayerStack> {
        let films = layers
            .iter()
            .map(|l| {
                let d = match l.thickness {
                    Thickness::Fixed(d) => d,
                    Thickness::Free(k) => free[k],
                };
                OpticalLayer::film(l.name.clone(), l.index, d)
            })
            .collect();
        LayerStack::new(
            self.ambient.clone(),
            films,
            self.substrate.clone(),
            self.wavelength,
        )
    }

    pub fn stacks(&self, free: [f64; 2]) -> Result<StackPair> {
        Ok(StackPair {
            bare: self.build(&self.bare, free)?,
            metal: self.build(&self.metal, free)?,
        })
    }

    pub fn contrast_at(&self, free: [f64; 2]) -> Result<f64> {
        let pair = self.stacks(free)?;
        contrast(&pair.bare, &pair.metal)
    }

    fn validate(&self) -> Result<()> {
        for l in self.bare.iter().chain(&self.metal) {
            if let Thickness::Free(k) = l.thickness {
                if k > 1 {
                    return Err(OpticsError::BadSearch("free thickness index must be 0 or 1"));
                }
            }
        }
        self.stacks([1e-9, 1e-9]).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub thicknesses: [f64; 2],
    pub contrast: f64,
}

/// Improvements smaller than this are ties, resolved toward smaller
/// thicknesses.
const TIE_TOLERANCE: f64 = 1e-12;
const GOLDEN_ITERATIONS: usize = 60;
const REFINEMENT_ROUNDS: usize = 3;

/// Exhaustive grid over `bounds` (`grid` points per axis, inclusive of both
/// ends) followed by golden-section refinement on each axis inside the
/// neighbouring grid cells. Deterministic; ties resolve to the
/// lexicographically smallest thickness pair.
pub fn optimize_thicknesses(
    template: &ContrastTemplate,
    bounds: [(f64, f64); 2],
    grid: usize,
) -> Result<SearchResult> {
    if grid < 2 {
        return Err(OpticsError::BadSearch("grid needs at least 2 points per axis"));
    }
    for &(lo, hi) in &bounds {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(OpticsError::BadSearch("bounds must be positive and ordered"));
        }
    }
    template.validate()?;

    let axis = |k: usize| -> Vec<f64> {
        let (lo, hi) = bounds[k];
        (0..grid)
            .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
            .collect()
    };
    let (xs, ys) = (axis(0), axis(1));
    let values: Vec<f64> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| template.contrast_at([xs[idx / grid], ys[idx % grid]]))
        .collect::<Result<_>>()?;

    // row-major over (x, y) ascending: first strict improvement wins
    let mut best = 0usize;
    for (idx, &v) in values.iter().enumerate() {
        if v > values[best] + TIE_TOLERANCE {
            best = idx;
        }
    }
    let (bi, bj) = (best / grid, best % grid);
    let mut point = [xs[bi], ys[bj]];
    let mut value = values[best];

    let cell = |i: usize, pts: &[f64]| (pts[i.saturating_sub(1)], pts[(i + 1).min(grid - 1)]);
    let mut windows = [cell(bi, &xs), cell(bj, &ys)];

    for _ in 0..REFINEMENT_ROUNDS {
        for k in 0..2 {
            let (lo, hi) = windows[k];
            if hi <= lo {
                continue;
            }
            let eval = |x: f64| {
                let mut p = point;
                p[k] = x;
                template.contrast_at(p)
            };
            let candidate = golden_section_max(eval, lo, hi)?;
            let candidate_value = {
                let mut p = point;
                p[k] = candidate;
                template.contrast_at(p)?
            };
            if candidate_value > value + TIE_TOLERANCE {
                point[k] = candidate;
                value = candidate_value;
            }
        }
        // narrow windows around the refined point for the next round
        for k in 0..2 {
            let (lo, hi) = windows[k];
            let half = (hi - lo) / 4.0;
            windows[k] = ((point[k] - half).max(lo), (point[k] + half).min(hi));
        }
    }
    Ok(SearchResult {
        thicknesses: point,
        contrast: value,
    })
}

fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { x1 } else { x2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn simple(layers: Vec<OpticalLayer>, sub: Complex64) -> LayerStack {
        LayerStack::new(
            OpticalLayer::semi_infinite("air", c(1.0, 0.0)),
            layers,
            OpticalLayer::semi_infinite("sub", sub),
            550e-9,
        )
        .unwrap()
    }

    #[test]
    fn no_interface_no_reflection() {
        assert_eq!(simple(vec![], c(1.0, 0.0)).reflectance(), 0.0);
    }

    #[test]
    fn single_interface_is_fresnel() {
        let ns = c(4.077, 0.028);
        let r = (c(1.0, 0.0) - ns) / (c(1.0, 0.0) + ns);
        assert!((simple(vec![], ns).reflectance() - r.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn quarter_wave_coating_minimum() {
        // R = ((n0 ns − n1²)/(n0 ns + n1²))²
        let (n1, ns) = (2.0, 4.0);
        let d = 550e-9 / (4.0 * n1);
        let s = simple(vec![OpticalLayer::film("c", c(n1, 0.0), d)], c(ns, 0.0));
        let expected = ((ns - n1 * n1) / (ns + n1 * n1)).powi(2);
        assert!((s.reflectance() - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_layers() {
        let air = OpticalLayer::semi_infinite("air", c(1.0, 0.0));
        let bad = OpticalLayer::film("x", c(2.0, -0.1), 1e-7);
        assert!(LayerStack::new(air.clone(), vec![bad], air.clone(), 5e-7).is_err());
        let zero = OpticalLayer::film("x", c(2.0, 0.0), 0.0);
        assert!(LayerStack::new(air.clone(), vec![zero], air.clone(), 5e-7).is_err());
        assert!(LayerStack::new(air.clone(), vec![], air, -1.0).is_err());
    }

    #[test]
    fn contrast_symmetry_and_mismatch() {
        let pair = MediumDesign::default().stacks(&IndexTable::bundled()).unwrap();
        let a = contrast(&pair.bare, &pair.metal).unwrap();
        let b = contrast(&pair.metal, &pair.bare).unwrap();
        assert_eq!(a, b);
        assert_eq!(contrast(&pair.bare, &pair.bare).unwrap(), 0.0);
        let mut other = pair.metal.clone();
        other.wavelength = 600e-9;
        assert!(matches!(
            contrast(&pair.bare, &other),
            Err(OpticsError::Mismatch("wavelength"))
        ));
    }

    #[test]
    fn interpolation_rules() {
        let t = IndexTable::bundled();
        assert_eq!(t.interpolate("Si", 550e-9).unwrap(), c(4.077, 0.028));
        let mid = t.interpolate("W", 525e-9).unwrap();
        assert!((mid.re - 3.45).abs() < 1e-12 && (mid.im - 2.71).abs() < 1e-12);
        assert!(matches!(
            t.interpolate("Ag", 550e-9),
            Err(OpticsError::UnknownMaterial(_))
        ));
        assert!(matches!(
            t.interpolate("Si", 700e-9),
            Err(OpticsError::OutOfRange { .. })
        ));
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = "material,wavelength_nm,n_real,n_imag\nSi,500,4.2,0.0\nSi,abc,4.0,0.0\n";
        match IndexTable::parse(text) {
            Err(OpticsError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let unsorted = "material,wavelength_nm,n_real,n_imag\nSi,500,4.2,0\nSi,400,4.0,0\n";
        assert!(matches!(
            IndexTable::parse(unsorted),
            Err(OpticsError::Malformed { line: 3, .. })
        ));
        let single = "material,wavelength_nm,n_real,n_imag\nSi,500,4.2,0\n";
        assert!(IndexTable::parse(single).is_err());
        assert!(IndexTable::parse("a,b\n1,2\n").is_err());
    }

    #[test]
    fn optimizer_flat_contrast_picks_lower_corner() {
        let w = c(3.5, 2.72);
        let sin = c(2.0, 0.0);
        let template = ContrastTemplate {
            ambient: OpticalLayer::semi_infinite("air", c(1.0, 0.0)),
            substrate: OpticalLayer::semi_infinite("Si", c(4.0, 0.0)),
            wavelength: 550e-9,
            bare: vec![
                TemplateLayer::new("W", w, Thickness::Fixed(2e-6)),
                TemplateLayer::new("a", sin, Thickness::Free(0)),
                TemplateLayer::new("b", sin, Thickness::Free(1)),
            ],
            metal: vec![
                TemplateLayer::new("W", w, Thickness::Fixed(2e-6)),
                TemplateLayer::new("b", sin, Thickness::Free(1)),
            ],
        };
        let r = optimize_thicknesses(&template, [(100e-9, 500e-9), (100e-9, 400e-9)], 9).unwrap();
        assert_eq!(r.thicknesses, [100e-9, 100e-9]);
    }

    #[test]
    fn optimizer_rejects_bad_setup() {
        let t = ContrastTemplate::medium(&IndexTable::bundled(), 50e-9, 550e-9).unwrap();
        assert!(optimize_thicknesses(&t, [(1e-7, 5e-7), (1e-7, 4e-7)], 1).is_err());
        assert!(optimize_thicknesses(&t, [(0.0, 5e-7), (1e-7, 4e-7)], 5).is_err());
    }
}
