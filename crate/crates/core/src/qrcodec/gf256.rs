//! Arithmetic in GF(2⁸) modulo x⁸ + x⁴ + x³ + x² + 1 (0x11D), generator α = 2.

use std::fmt;

pub const PRIMITIVE: u16 = 0x11D;

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= PRIMITIVE;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
static EXP: [u8; 512] = TABLES.0;
static LOG: [u8; 256] = TABLES.1;

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
    }
}

/// Panics on division by zero.
#[inline]
pub fn div(a: u8, b: u8) -> u8 {
    assert!(b != 0, "division by zero in GF(256)");
    if a == 0 {
        0
    } else {
        EXP[LOG[a as usize] as usize + 255 - LOG[b as usize] as usize]
    }
}

#[inline]
pub fn inv(a: u8) -> u8 {
    div(1, a)
}

/// α^e for any integer exponent.
#[inline]
pub fn alpha_pow(e: i64) -> u8 {
    EXP[e.rem_euclid(255) as usize]
}

/// Discrete log base α; `None` for zero.
#[inline]
pub fn log(a: u8) -> Option<u8> {
    (a != 0).then(|| LOG[a as usize])
}

/// Polynomial over GF(256), lowest-degree coefficient first, trailing zeros
/// trimmed (the zero polynomial is empty).
#[derive(Clone, PartialEq, Eq, Default)]
pub struct GfPoly(Vec<u8>);

impl fmt::Debug for GfPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GfPoly({:02x?})", self.0)
    }
}

impl GfPoly {
    pub fn new(mut coeffs: Vec<u8>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn one() -> Self {
        Self(vec![1])
    }

    /// From coefficients ordered highest degree first, as bytes appear in a
    /// codeword.
    pub fn from_high_first(bytes: &[u8]) -> Self {
        Self::new(bytes.iter().rev().copied().collect())
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.0
    }

    pub fn coeff(&self, i: usize) -> u8 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: u8) -> u8 {
        self.0.iter().rev().fold(0, |acc, &c| mul(acc, x) ^ c)
    }

    pub fn add(&self, other: &GfPoly) -> GfPoly {
        let n = self.0.len().max(other.0.len());
        GfPoly::new((0..n).map(|i| self.coeff(i) ^ other.coeff(i)).collect())
    }

    pub fn scale(&self, k: u8) -> GfPoly {
        GfPoly::new(self.0.iter().map(|&c| mul(c, k)).collect())
    }

    /// Multiply by x^n.
    pub fn shift(&self, n: usize) -> GfPoly {
        if self.is_zero() {
            return GfPoly::default();
        }
        let mut v = vec![0; n];
        v.extend_from_slice(&self.0);
        GfPoly(v)
    }

    pub fn mul(&self, other: &GfPoly) -> GfPoly {
        if self.is_zero() || other.is_zero() {
            return GfPoly::default();
        }
        let mut out = vec![0u8; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] ^= mul(a, b);
            }
        }
        GfPoly::new(out)
    }

    /// Keep terms of degree < n.
    pub fn truncate(&self, n: usize) -> GfPoly {
        GfPoly::new(self.0.iter().take(n).copied().collect())
    }

    /// Formal derivative; in characteristic 2 only odd powers survive.
    pub fn derivative(&self) -> GfPoly {
        GfPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
                .collect(),
        )
    }
}
