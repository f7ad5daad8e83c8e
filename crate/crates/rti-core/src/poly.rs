//! Polynomials over GF(2^tau) and the secret-bits codec.
//!
//! A challenge is a bit string of length (d+1)*tau. It maps to the degree-d
//! polynomial whose coefficient a_i is the i-th tau-bit block of the
//! string, most-significant bit first. Evaluation uses Horner's rule;
//! interpolation is Lagrange over exactly d+1 points.

use crate::gf::{FieldElement, FieldSpec};
use rand::Rng;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("interpolation needs exactly {expected} points, got {got}")]
    WrongPointCount { expected: usize, got: usize },
    #[error("duplicate x coordinate {0} in interpolation points")]
    DuplicateX(FieldElement),
    #[error("secret is {got} bits but degree {degree} over GF(2^{tau}) needs {expected}")]
    SecretLengthMismatch {
        expected: usize,
        got: usize,
        degree: usize,
        tau: u32,
    },
    #[error("bit length {0} is not a multiple of 4, no hex form exists")]
    UnalignedBitLength(usize),
    #[error("secret hex must be {expected} digits, got {got}")]
    BadHexLength { expected: usize, got: usize },
    #[error("invalid lowercase hex digit {0:?}")]
    BadHexDigit(char),
    #[error("byte buffer is {got} bytes, bit length {bits} needs {expected}")]
    BadByteLength { expected: usize, got: usize, bits: usize },
    #[error("padding bits past the declared length must be zero")]
    DirtyPadding,
}

/// A fixed-length bit string, most-significant bit first, packed into
/// bytes. Padding bits in the final byte are always zero, so equal bit
/// strings have equal byte representations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SecretBits {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl SecretBits {
    pub fn zero(bit_len: usize) -> SecretBits {
        SecretBits {
            bytes: vec![0; bit_len.div_ceil(8)],
            bit_len,
        }
    }

    pub fn random(bit_len: usize, rng: &mut impl Rng) -> SecretBits {
        let mut bytes = vec![0u8; bit_len.div_ceil(8)];
        rng.fill(bytes.as_mut_slice());
        if bit_len % 8 != 0 {
            let keep = bit_len % 8;
            *bytes.last_mut().expect("non-empty") &= !(0xffu8 >> keep);
        }
        SecretBits { bytes, bit_len }
    }

    /// Reconstruct from packed bytes. The buffer must be exactly
    /// ceil(bit_len/8) bytes and any padding bits must be zero.
    pub fn from_bytes(bytes: &[u8], bit_len: usize) -> Result<SecretBits, PolyError> {
        let expected = bit_len.div_ceil(8);
        if bytes.len() != expected {
            return Err(PolyError::BadByteLength {
                expected,
                got: bytes.len(),
                bits: bit_len,
            });
        }
        if bit_len % 8 != 0 {
            let keep = bit_len % 8;
            if bytes[expected - 1] & (0xffu8 >> keep) != 0 {
                return Err(PolyError::DirtyPadding);
            }
        }
        Ok(SecretBits {
            bytes: bytes.to_vec(),
            bit_len,
        })
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    /// Canonical packed form, the message that gets hashed and signed.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.bit_len, "bit {i} out of range {}", self.bit_len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    fn set_bit(&mut self, i: usize) {
        self.bytes[i / 8] |= 1 << (7 - i % 8);
    }

    /// Bits [i*width, (i+1)*width) as an integer, MSB first. width <= 32.
    pub fn chunk(&self, i: usize, width: usize) -> u32 {
        let mut v = 0u32;
        for k in 0..width {
            v = v << 1 | self.bit(i * width + k) as u32;
        }
        v
    }

    /// Lowercase hex, one digit per 4 bits. Defined only when the bit
    /// length is a multiple of 4.
    pub fn to_hex(&self) -> Result<String, PolyError> {
        if self.bit_len % 4 != 0 {
            return Err(PolyError::UnalignedBitLength(self.bit_len));
        }
        let digits = self.bit_len / 4;
        let mut s = String::with_capacity(digits);
        for i in 0..digits {
            let nibble = self.chunk(i, 4);
            s.push(char::from_digit(nibble, 16).expect("nibble < 16"));
        }
        Ok(s)
    }

    pub fn from_hex(s: &str, bit_len: usize) -> Result<SecretBits, PolyError> {
        if bit_len % 4 != 0 {
            return Err(PolyError::UnalignedBitLength(bit_len));
        }
        let expected = bit_len / 4;
        if s.len() != expected {
            return Err(PolyError::BadHexLength {
                expected,
                got: s.len(),
            });
        }
        let mut out = SecretBits::zero(bit_len);
        for (i, c) in s.chars().enumerate() {
            if c.is_ascii_uppercase() {
                return Err(PolyError::BadHexDigit(c));
            }
            let nibble = c.to_digit(16).ok_or(PolyError::BadHexDigit(c))?;
            for k in 0..4 {
                if nibble >> (3 - k) & 1 == 1 {
                    out.set_bit(i * 4 + k);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for SecretBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_hex() {
            Ok(h) => f.write_str(&h),
            Err(_) => write!(f, "<{} bits>", self.bit_len),
        }
    }
}

/// A polynomial over GF(2^tau): coeffs[i] is the coefficient of x^i.
/// The length of the coefficient vector is the structural degree bound
/// plus one; trailing zero coefficients are kept so a degree-d secret
/// always decodes back to exactly (d+1)*tau bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<FieldElement>) -> Polynomial {
        assert!(!coeffs.is_empty(), "a polynomial has at least one coefficient");
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Structural degree bound: coefficient count minus one.
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, field: &FieldSpec, x: FieldElement) -> FieldElement {
        let mut acc = FieldElement::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = field.add(field.mul(acc, x), c);
        }
        acc
    }
}

/// Interpolate the unique polynomial of degree <= d through exactly d+1
/// points with pairwise distinct x coordinates. The result always has
/// d+1 coefficients (trailing zeros preserved).
pub fn lagrange_interpolate(
    field: &FieldSpec,
    points: &[(FieldElement, FieldElement)],
    d: usize,
) -> Result<Polynomial, PolyError> {
    if points.len() != d + 1 {
        return Err(PolyError::WrongPointCount {
            expected: d + 1,
            got: points.len(),
        });
    }
    for (i, &(xi, _)) in points.iter().enumerate() {
        if points[i + 1..].iter().any(|&(xj, _)| xj == xi) {
            return Err(PolyError::DuplicateX(xi));
        }
    }

    // Master numerator N(x) = prod (x + x_i); char 2 makes minus plus.
    let mut master = vec![FieldElement::ZERO; d + 2];
    master[0] = FieldElement::ONE;
    let mut len = 1;
    for &(xi, _) in points {
        master[len] = FieldElement::ZERO;
        for k in (0..len).rev() {
            let m = master[k];
            master[k + 1] = field.add(master[k + 1], m);
            master[k] = field.mul(m, xi);
        }
        len += 1;
    }

    let mut coeffs = vec![FieldElement::ZERO; d + 1];
    let mut basis = vec![FieldElement::ZERO; d + 1];
    for &(xi, yi) in points {
        // Synthetic division: basis = N(x) / (x + x_i), degree d.
        let mut carry = FieldElement::ZERO;
        for k in (0..=d).rev() {
            carry = field.add(master[k + 1], field.mul(carry, xi));
            basis[k] = carry;
        }
        // Scale by y_i / basis(x_i) and accumulate.
        let denom = Polynomial::new(basis.clone()).eval(field, xi);
        let scale = field
            .div(yi, denom)
            .expect("denominator nonzero for distinct interpolation nodes");
        for k in 0..=d {
            coeffs[k] = field.add(coeffs[k], field.mul(basis[k], scale));
        }
    }
    Ok(Polynomial::new(coeffs))
}

/// Split a secret of exactly (d+1)*tau bits into d+1 coefficients, each a
/// tau-bit block taken most-significant bit first.
pub fn encode_secret(
    field: &FieldSpec,
    k: &SecretBits,
    d: usize,
) -> Result<Polynomial, PolyError> {
    let tau = field.tau();
    let expected = (d + 1) * tau as usize;
    if k.bit_len() != expected {
        return Err(PolyError::SecretLengthMismatch {
            expected,
            got: k.bit_len(),
            degree: d,
            tau,
        });
    }
    let coeffs = (0..=d)
        .map(|i| FieldElement::from_raw(k.chunk(i, tau as usize)))
        .collect();
    Ok(Polynomial::new(coeffs))
}

/// Inverse of [`encode_secret`]: concatenate the coefficients back into a
/// bit string of (degree_bound+1)*tau bits.
pub fn decode_secret(field: &FieldSpec, p: &Polynomial) -> SecretBits {
    let tau = field.tau() as usize;
    let mut out = SecretBits::zero(p.coeffs().len() * tau);
    for (i, c) in p.coeffs().iter().enumerate() {
        for k in 0..tau {
            if c.value() >> (tau - 1 - k) & 1 == 1 {
                out.set_bit(i * tau + k);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn fe(f: &FieldSpec, v: u64) -> FieldElement {
        f.element(v).unwrap()
    }

    #[test]
    fn eval_x_squared_plus_one() {
        let f = FieldSpec::gf2_4();
        let p = Polynomial::new(vec![fe(&f, 1), fe(&f, 0), fe(&f, 1)]);
        assert_eq!(p.eval(&f, fe(&f, 0x2)).value(), 0x5);
    }

    #[test]
    fn two_point_line_in_gf16() {
        let f = FieldSpec::gf2_4();
        let pts = [(fe(&f, 0x0), fe(&f, 0x3)), (fe(&f, 0x1), fe(&f, 0x6))];
        let p = lagrange_interpolate(&f, &pts, 1).unwrap();
        assert_eq!(
            p.coeffs().iter().map(|c| c.value()).collect::<Vec<_>>(),
            vec![0x3, 0x5]
        );
    }

    /// Brute force: enumerate every coefficient vector in GF(2^4) and keep
    /// the ones passing through all given points. Independent of the
    /// Lagrange path.
    fn oracle_interpolate_gf16(
        f: &FieldSpec,
        points: &[(FieldElement, FieldElement)],
        d: usize,
    ) -> Vec<Polynomial> {
        let n = d + 1;
        let mut hits = Vec::new();
        for combo in 0..(16u64.pow(n as u32)) {
            let coeffs: Vec<FieldElement> = (0..n)
                .map(|i| fe(f, combo >> (4 * i) & 0xf))
                .collect();
            let p = Polynomial::new(coeffs);
            if points.iter().all(|&(x, y)| p.eval(f, x) == y) {
                hits.push(p);
            }
        }
        hits
    }

    #[test]
    fn interpolation_matches_exhaustive_search() {
        let f = FieldSpec::gf2_4();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for d in 1..=2usize {
            for _ in 0..20 {
                let mut xs: Vec<u64> = (0..16).collect();
                // Seeded partial shuffle picks d+1 distinct x values.
                for i in 0..=d {
                    let j = rng.gen_range(i..16);
                    xs.swap(i, j);
                }
                let points: Vec<_> = xs[..=d]
                    .iter()
                    .map(|&x| (fe(&f, x), fe(&f, rng.gen_range(0..16))))
                    .collect();
                let got = lagrange_interpolate(&f, &points, d).unwrap();
                let all = oracle_interpolate_gf16(&f, &points, d);
                assert_eq!(all.len(), 1, "unique solution for d+1 distinct nodes");
                assert_eq!(got, all[0]);
            }
        }
    }

    #[test]
    fn eval_interpolate_duality() {
        let f = FieldSpec::gf2_24();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let d = 9;
        for _ in 0..200 {
            let p = Polynomial::new(
                (0..=d)
                    .map(|_| fe(&f, rng.gen_range(0..f.order())))
                    .collect(),
            );
            let mut xs = std::collections::BTreeSet::new();
            while xs.len() < d + 1 {
                xs.insert(rng.gen_range(0..f.order()));
            }
            let points: Vec<_> = xs
                .into_iter()
                .map(|x| {
                    let x = fe(&f, x);
                    (x, p.eval(&f, x))
                })
                .collect();
            assert_eq!(lagrange_interpolate(&f, &points, d).unwrap(), p);
        }
    }

    #[test]
    fn interpolation_rejects_bad_point_sets() {
        let f = FieldSpec::gf2_4();
        let pts = [(fe(&f, 0), fe(&f, 1)), (fe(&f, 1), fe(&f, 2))];
        assert_eq!(
            lagrange_interpolate(&f, &pts, 2),
            Err(PolyError::WrongPointCount { expected: 3, got: 2 })
        );
        let dup = [
            (fe(&f, 3), fe(&f, 1)),
            (fe(&f, 3), fe(&f, 2)),
            (fe(&f, 1), fe(&f, 2)),
        ];
        assert_eq!(
            lagrange_interpolate(&f, &dup, 2),
            Err(PolyError::DuplicateX(fe(&f, 3)))
        );
    }

    #[test]
    fn secret_split_takes_msb_first_blocks() {
        let f = FieldSpec::gf2_24();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let k = SecretBits::random(240, &mut rng);
        let p = encode_secret(&f, &k, 9).unwrap();
        assert_eq!(p.coeffs().len(), 10);
        // First coefficient is the first 24 bits, MSB first.
        let mut want = 0u32;
        for i in 0..24 {
            want = want << 1 | k.bit(i) as u32;
        }
        assert_eq!(p.coeffs()[0].value(), want);
    }

    #[test]
    fn single_low_bit_coefficient_sets_bit_23_of_its_block() {
        let f = FieldSpec::gf2_24();
        let coeffs = vec![
            FieldElement::from_raw(0x00_0001),
            FieldElement::ZERO,
            FieldElement::ZERO,
        ];
        let bits = decode_secret(&f, &Polynomial::new(coeffs));
        assert_eq!(bits.bit_len(), 72);
        for i in 0..72 {
            assert_eq!(bits.bit(i), i == 23, "bit {i}");
        }
    }

    #[test]
    fn wrong_length_secret_is_rejected() {
        let f = FieldSpec::gf2_24();
        let k = SecretBits::zero(239);
        assert_eq!(
            encode_secret(&f, &k, 9),
            Err(PolyError::SecretLengthMismatch {
                expected: 240,
                got: 239,
                degree: 9,
                tau: 24
            })
        );
    }

    #[test]
    fn secret_roundtrips_through_coefficients() {
        for f in [FieldSpec::gf2_4(), FieldSpec::gf2_24()] {
            let mut rng = ChaCha12Rng::seed_from_u64(17);
            for d in [1usize, 2, 9] {
                for _ in 0..200 {
                    let k = SecretBits::random((d + 1) * f.tau() as usize, &mut rng);
                    let p = encode_secret(&f, &k, d).unwrap();
                    assert_eq!(decode_secret(&f, &p), k);
                }
            }
        }
    }

    #[test]
    fn hex_roundtrip_and_strictness() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let k = SecretBits::random(240, &mut rng);
        let h = k.to_hex().unwrap();
        assert_eq!(h.len(), 60);
        assert_eq!(SecretBits::from_hex(&h, 240).unwrap(), k);

        // tau=4, d=2: 12 bits, 3 hex digits, not byte aligned.
        let k12 = SecretBits::from_hex("abc", 12).unwrap();
        assert_eq!(k12.to_hex().unwrap(), "abc");
        assert_eq!(k12.as_bytes(), &[0xab, 0xc0]);

        assert_eq!(
            SecretBits::from_hex("ABC", 12),
            Err(PolyError::BadHexDigit('A'))
        );
        assert_eq!(
            SecretBits::from_hex("ab", 12),
            Err(PolyError::BadHexLength { expected: 3, got: 2 })
        );
        assert_eq!(SecretBits::zero(10).to_hex(), Err(PolyError::UnalignedBitLength(10)));
    }

    #[test]
    fn byte_form_is_canonical() {
        let k = SecretBits::from_hex("abc", 12).unwrap();
        assert_eq!(SecretBits::from_bytes(&[0xab, 0xc0], 12).unwrap(), k);
        assert_eq!(
            SecretBits::from_bytes(&[0xab, 0xc1], 12),
            Err(PolyError::DirtyPadding)
        );
        assert_eq!(
            SecretBits::from_bytes(&[0xab], 12),
            Err(PolyError::BadByteLength {
                expected: 2,
                got: 1,
                bits: 12
            })
        );
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let r = SecretBits::random(12, &mut rng);
        assert_eq!(r.as_bytes()[1] & 0x0f, 0, "random output keeps padding clean");
    }
}
