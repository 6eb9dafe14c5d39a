use serde::{Deserialize, Serialize};

/// Square matrix of modules, `true` = dark. Indexed `(row, col)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitMatrix {
    side: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.side, self.side)?;
        for r in 0..self.side {
            let line: String = (0..self.side)
                .map(|c| if self.get(r, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn new(side: usize) -> Self {
        Self {
            side,
            bits: vec![false; side * side],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Option<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return None;
        }
        Some(Self {
            side,
            bits: rows.concat(),
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.side + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, dark: bool) {
        self.bits[row * self.side + col] = dark;
    }

    #[inline]
    pub fn toggle(&mut self, row: usize, col: usize) {
        let i = row * self.side + col;
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn dark_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Number of modules that differ; `None` for different sizes.
    pub fn hamming(&self, other: &BitMatrix) -> Option<usize> {
        (self.side == other.side)
            .then(|| self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }
}
