//! Reed–Solomon over GF(256) with the QR conventions: generator roots
//! α⁰…α^{n−1}, codeword bytes stored highest-degree coefficient first.
//!
//! Decoding runs Berlekamp–Massey seeded with the erasure locator, a Chien
//! search over the (possibly shortened) codeword positions and Forney's
//! formula, then re-checks the syndromes of the result. `e` errors and `f`
//! erasures are corrected whenever `2e + f ≤ n_parity`.

use thiserror::Error;

use super::gf256::{self, GfPoly};

pub const MAX_CODEWORD_LEN: usize = 255;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RsError {
    #[error("invalid Reed-Solomon parameters: {0}")]
    InvalidParameters(String),
    #[error("uncorrectable codeword ({reason}); syndromes {syndromes:02x?}")]
    Uncorrectable {
        reason: &'static str,
        syndromes: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsCorrection {
    /// Full corrected codeword, data followed by parity.
    pub codeword: Vec<u8>,
    /// Positions whose value changed.
    pub corrected_positions: Vec<usize>,
    pub erasures_used: usize,
}

impl RsCorrection {
    pub fn data(&self, n_parity: usize) -> &[u8] {
        &self.codeword[..self.codeword.len() - n_parity]
    }
}

/// `Π_{i<n} (x − α^i)`.
pub fn generator(n_parity: usize) -> GfPoly {
    (0..n_parity).fold(GfPoly::one(), |g, i| {
        g.mul(&GfPoly::new(vec![gf256::alpha_pow(i as i64), 1]))
    })
}

/// Parity bytes: remainder of `data·x^n_parity` by the generator.
pub fn rs_encode(data: &[u8], n_parity: usize) -> Result<Vec<u8>, RsError> {
    if n_parity == 0 || data.is_empty() || data.len() + n_parity > MAX_CODEWORD_LEN {
        return Err(RsError::InvalidParameters(format!(
            "data length {} with {} parity bytes",
            data.len(),
            n_parity
        )));
    }
    // generator coefficients, highest degree first, monic term dropped
    let gen = generator(n_parity);
    let divisor: Vec<u8> = gen.coeffs()[..n_parity].iter().rev().copied().collect();
    let mut remainder = vec![0u8; n_parity];
    for &b in data {
        let factor = b ^ remainder[0];
        remainder.rotate_left(1);
        remainder[n_parity - 1] = 0;
        for (r, &d) in remainder.iter_mut().zip(&divisor) {
            *r ^= gf256::mul(d, factor);
        }
    }
    Ok(remainder)
}

pub fn syndromes(codeword: &[u8], n_parity: usize) -> Vec<u8> {
    (0..n_parity)
        .map(|i| {
            let x = gf256::alpha_pow(i as i64);
            codeword.iter().fold(0, |acc, &c| gf256::mul(acc, x) ^ c)
        })
        .collect()
}

fn locator(position: usize, len: usize) -> u8 {
    gf256::alpha_pow((len - 1 - position) as i64)
}

pub fn rs_decode(
    codeword: &[u8],
    n_parity: usize,
    erasures: &[usize],
) -> Result<RsCorrection, RsError> {
    let n = codeword.len();
    if n_parity == 0 || n <= n_parity || n > MAX_CODEWORD_LEN {
        return Err(RsError::InvalidParameters(format!(
            "codeword length {n} with {n_parity} parity bytes"
        )));
    }
    let mut erasures = erasures.to_vec();
    erasures.sort_unstable();
    erasures.dedup();
    if let Some(&p) = erasures.iter().find(|&&p| p >= n) {
        return Err(RsError::InvalidParameters(format!(
            "erasure position {p} outside codeword of length {n}"
        )));
    }
    let synd = syndromes(codeword, n_parity);
    if erasures.len() > n_parity {
        return Err(RsError::Uncorrectable {
            reason: "more erasures than parity bytes",
            syndromes: synd,
        });
    }
    if synd.iter().all(|&s| s == 0) {
        return Ok(RsCorrection {
            codeword: codeword.to_vec(),
            corrected_positions: Vec::new(),
            erasures_used: erasures.len(),
        });
    }
    let fail = |reason: &'static str| RsError::Uncorrectable {
        reason,
        syndromes: synd.clone(),
    };

    let n_erasures = erasures.len();
    let erasure_locator = erasures.iter().fold(GfPoly::one(), |acc, &p| {
        acc.mul(&GfPoly::new(vec![1, locator(p, n)]))
    });

    // Berlekamp–Massey continued from the erasure locator.
    let mut lambda = erasure_locator.clone();
    let mut prev = erasure_locator;
    let mut l = n_erasures;
    for k in (n_erasures + 1)..=n_parity {
        let discrepancy = (0..lambda.coeffs().len().min(k))
            .map(|j| gf256::mul(lambda.coeff(j), synd[k - 1 - j]))
            .fold(0, |a, b| a ^ b);
        if discrepancy == 0 {
            prev = prev.shift(1);
        } else if 2 * l <= k - 1 + n_erasures {
            let next = lambda.add(&prev.shift(1).scale(discrepancy));
            prev = lambda.scale(gf256::inv(discrepancy));
            lambda = next;
            l = k + n_erasures - l;
        } else {
            lambda = lambda.add(&prev.shift(1).scale(discrepancy));
            prev = prev.shift(1);
        }
    }
    let degree = lambda.degree().unwrap_or(0);
    if degree != l || degree == 0 {
        return Err(fail("locator degree inconsistent"));
    }
    let n_errors = l - n_erasures;
    if 2 * n_errors + n_erasures > n_parity {
        return Err(fail("error count beyond correction capacity"));
    }

    // Chien search restricted to positions that exist in this codeword.
    let roots: Vec<usize> = (0..n)
        .filter(|&p| lambda.eval(gf256::inv(locator(p, n))) == 0)
        .collect();
    if roots.len() != degree {
        return Err(fail("locator roots do not match its degree"));
    }

    let omega = GfPoly::new(synd.clone()).mul(&lambda).truncate(n_parity);
    let lambda_prime = lambda.derivative();
    let mut corrected = codeword.to_vec();
    let mut changed = Vec::new();
    for &p in &roots {
        let x = locator(p, n);
        let x_inv = gf256::inv(x);
        let denom = lambda_prime.eval(x_inv);
        if denom == 0 {
            return Err(fail("repeated locator root"));
        }
        let magnitude = gf256::mul(x, gf256::div(omega.eval(x_inv), denom));
        if magnitude != 0 {
            corrected[p] ^= magnitude;
            changed.push(p);
        }
    }
    if syndromes(&corrected, n_parity).iter().any(|&s| s != 0) {
        return Err(fail("residual syndrome after correction"));
    }
    Ok(RsCorrection {
        codeword: corrected,
        corrected_positions: changed,
        erasures_used: n_erasures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_message_has_zero_parity() {
        for np in 1..10 {
            assert!(rs_encode(&[0], np).unwrap().iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn known_qr_vector() {
        // version 1-M "01234567" data codewords and parity from the QR standard annex
        let data = [
            0x10, 0x20, 0x0C, 0x56, 0x61, 0x80, 0xEC, 0x11, 0xEC, 0x11, 0xEC, 0x11, 0xEC, 0x11,
            0xEC, 0x11,
        ];
        let parity = rs_encode(&data, 10).unwrap();
        assert_eq!(
            parity,
            [0xA5, 0x24, 0xD4, 0xC1, 0xED, 0x36, 0xC7, 0x87, 0x2C, 0x55]
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(rs_encode(&[], 4).is_err());
        assert!(rs_encode(&[1], 0).is_err());
        assert!(rs_decode(&[1, 2], 2, &[]).is_err());
        assert!(rs_decode(&[1, 2, 3], 1, &[7]).is_err());
    }

    #[test]
    fn clean_codeword_is_identity() {
        let data = b"archive".to_vec();
        let mut cw = data.clone();
        cw.extend(rs_encode(&data, 6).unwrap());
        let out = rs_decode(&cw, 6, &[]).unwrap();
        assert_eq!(out.codeword, cw);
        assert!(out.corrected_positions.is_empty());
    }

    #[test]
    fn mixed_errors_and_erasures() {
        let data: Vec<u8> = (0..40).map(|i| (i * 37 + 11) as u8).collect();
        let mut cw = data.clone();
        cw.extend(rs_encode(&data, 10).unwrap());
        let mut bad = cw.clone();
        // 3 errors + 4 erasures: 2·3 + 4 = 10
        for p in [0, 17, 45] {
            bad[p] ^= 0x5A;
        }
        let erasures = [3, 9, 20, 49];
        for &p in &erasures {
            bad[p] = 0;
        }
        let out = rs_decode(&bad, 10, &erasures).unwrap();
        assert_eq!(out.codeword, cw);
        assert_eq!(out.erasures_used, 4);
    }

    #[test]
    fn too_many_erasures_fail_with_syndromes() {
        let mut cw = vec![1u8, 2, 3];
        cw.extend(rs_encode(&cw.clone(), 2).unwrap());
        match rs_decode(&cw, 2, &[0, 1, 2]) {
            Err(RsError::Uncorrectable { syndromes, .. }) => assert_eq!(syndromes.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
