//! QR structural constants for versions 1–10, loaded from the CSV files in
//! `data/` so they can be diffed against the standard's tables.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

pub const BLOCKS_CSV: &str = include_str!("../../data/qr_blocks.csv");
pub const ALIGNMENT_CSV: &str = include_str!("../../data/qr_alignment.csv");

pub const MIN_VERSION: u8 = 1;
pub const MAX_VERSION: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EcLevel {
    L,
    M,
    Q,
    H,
}

impl EcLevel {
    pub const ALL: [EcLevel; 4] = [EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H];

    /// Two-bit code used in the format information.
    pub fn format_bits(self) -> u32 {
        match self {
            EcLevel::L => 1,
            EcLevel::M => 0,
            EcLevel::Q => 3,
            EcLevel::H => 2,
        }
    }

    pub fn from_format_bits(bits: u32) -> EcLevel {
        match bits & 3 {
            1 => EcLevel::L,
            0 => EcLevel::M,
            3 => EcLevel::Q,
            _ => EcLevel::H,
        }
    }
}

impl fmt::Display for EcLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            EcLevel::L => "L",
            EcLevel::M => "M",
            EcLevel::Q => "Q",
            EcLevel::H => "H",
        };
        f.write_str(c)
    }
}

impl FromStr for EcLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L" => Ok(EcLevel::L),
            "M" => Ok(EcLevel::M),
            "Q" => Ok(EcLevel::Q),
            "H" => Ok(EcLevel::H),
            other => Err(format!("unknown error-correction level {other:?}")),
        }
    }
}

/// Symbol version, 1 to 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Version(u8);

impl Version {
    pub fn new(v: u8) -> Option<Self> {
        (MIN_VERSION..=MAX_VERSION).contains(&v).then_some(Self(v))
    }

    pub fn from_side(side: usize) -> Option<Self> {
        if side < 21 || !(side - 17).is_multiple_of(4) {
            return None;
        }
        u8::try_from((side - 17) / 4).ok().and_then(Self::new)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn side(self) -> usize {
        17 + 4 * self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Version> {
        (MIN_VERSION..=MAX_VERSION).map(Version)
    }

    /// Bits in the byte-mode character count field.
    pub fn char_count_bits(self) -> usize {
        if self.0 <= 9 {
            8
        } else {
            16
        }
    }
}

impl TryFrom<u8> for Version {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Version::new(v).ok_or_else(|| format!("version {v} outside 1..=10"))
    }
}

impl From<Version> for u8 {
    fn from(v: Version) -> u8 {
        v.0
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Error-correction block layout of one (version, level).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub total_codewords: usize,
    pub parity_per_block: usize,
    /// (block count, data codewords per block) for the two groups.
    pub groups: [(usize, usize); 2],
}

impl BlockSpec {
    pub fn block_count(&self) -> usize {
        self.groups[0].0 + self.groups[1].0
    }

    pub fn data_codewords(&self) -> usize {
        self.groups.iter().map(|&(n, size)| n * size).sum()
    }

    /// Data length of every block in order.
    pub fn data_lengths(&self) -> Vec<usize> {
        self.groups
            .iter()
            .flat_map(|&(n, size)| std::iter::repeat_n(size, n))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct BlockRow {
    version: u8,
    #[serde(rename = "ecLevel")]
    ec_level: String,
    #[serde(rename = "totalCodewords")]
    total_codewords: usize,
    #[serde(rename = "parityPerBlock")]
    parity_per_block: usize,
    blocks1: usize,
    size1: usize,
    blocks2: usize,
    size2: usize,
}

pub struct QrTables {
    blocks: HashMap<(u8, EcLevel), BlockSpec>,
    alignment: HashMap<u8, Vec<usize>>,
}

static TABLES: LazyLock<QrTables> = LazyLock::new(|| {
    QrTables::parse(BLOCKS_CSV, ALIGNMENT_CSV).expect("bundled QR tables are well-formed")
});

pub fn tables() -> &'static QrTables {
    &TABLES
}

impl QrTables {
    pub fn parse(blocks_csv: &str, alignment_csv: &str) -> Result<Self, String> {
        let mut blocks = HashMap::new();
        let mut reader = csv::Reader::from_reader(blocks_csv.as_bytes());
        for row in reader.deserialize::<BlockRow>() {
            let row = row.map_err(|e| e.to_string())?;
            let level: EcLevel = row.ec_level.parse()?;
            let spec = BlockSpec {
                total_codewords: row.total_codewords,
                parity_per_block: row.parity_per_block,
                groups: [(row.blocks1, row.size1), (row.blocks2, row.size2)],
            };
            if spec.data_codewords() + spec.block_count() * spec.parity_per_block
                != spec.total_codewords
            {
                return Err(format!("inconsistent block row for {}-{level}", row.version));
            }
            blocks.insert((row.version, level), spec);
        }
        let mut alignment = HashMap::new();
        let mut reader = csv::Reader::from_reader(alignment_csv.as_bytes());
        for record in reader.records() {
            let record = record.map_err(|e| e.to_string())?;
            let version: u8 = record[0].parse().map_err(|e| format!("{e}"))?;
            let positions = record[1]
                .split_whitespace()
                .map(|p| p.parse::<usize>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            alignment.insert(version, positions);
        }
        Ok(Self { blocks, alignment })
    }

    pub fn block_spec(&self, version: Version, level: EcLevel) -> BlockSpec {
        self.blocks[&(version.value(), level)]
    }

    pub fn alignment_positions(&self, version: Version) -> &[usize] {
        &self.alignment[&version.value()]
    }
}

/// Largest byte-mode payload for (version, level).
pub fn byte_capacity(version: Version, level: EcLevel) -> usize {
    let bits = tables().block_spec(version, level).data_codewords() * 8;
    (bits - 4 - version.char_count_bits()) / 8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_version_and_level_present() {
        for v in Version::all() {
            for level in EcLevel::ALL {
                let spec = tables().block_spec(v, level);
                assert!(spec.block_count() >= 1);
            }
        }
    }

    #[test]
    fn byte_capacities_match_standard() {
        // ISO/IEC 18004 byte-mode capacities
        let expected: [[usize; 4]; 10] = [
            [17, 14, 11, 7],
            [32, 26, 20, 14],
            [53, 42, 32, 24],
            [78, 62, 46, 34],
            [106, 84, 60, 44],
            [134, 106, 74, 58],
            [154, 122, 86, 64],
            [192, 152, 108, 84],
            [230, 180, 130, 98],
            [271, 213, 151, 119],
        ];
        for v in Version::all() {
            for (i, level) in EcLevel::ALL.iter().enumerate() {
                assert_eq!(
                    byte_capacity(v, *level),
                    expected[v.value() as usize - 1][i],
                    "{v}-{level}"
                );
            }
        }
    }

    #[test]
    fn version_sides() {
        assert_eq!(Version::new(1).unwrap().side(), 21);
        assert_eq!(Version::from_side(25), Version::new(2));
        assert_eq!(Version::from_side(22), None);
        assert_eq!(Version::from_side(61), None);
        assert!(Version::new(0).is_none());
    }

    #[test]
    fn level_parsing() {
        assert_eq!("h".parse::<EcLevel>().unwrap(), EcLevel::H);
        assert!("X".parse::<EcLevel>().is_err());
        for l in EcLevel::ALL {
            assert_eq!(EcLevel::from_format_bits(l.format_bits()), l);
        }
    }
}
