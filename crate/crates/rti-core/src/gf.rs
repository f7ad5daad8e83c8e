//! Arithmetic in GF(2^tau).
//!
//! Elements are polynomials over GF(2) stored as bitmasks: bit i of the
//! value is the coefficient of x^i. Addition is XOR. Multiplication is a
//! carry-less shift-and-add product reduced modulo an irreducible
//! polynomial; inversion runs the extended Euclidean algorithm over
//! GF(2)[x]. No log/exp tables: the default field has 2^24 elements and
//! the shift-and-add path is fast enough for every consumer in this crate.

use std::fmt;
use thiserror::Error;

/// Largest supported field exponent. A carry-less product of two raw
/// elements has degree at most 2*tau - 2 and must fit in a u64.
pub const MAX_TAU: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("tau must be in 1..={MAX_TAU}, got {0}")]
    TauOutOfRange(u32),
    #[error("modulus {0:#x} does not have degree {1}")]
    WrongModulusDegree(u64, u32),
    #[error("modulus {0:#x} is reducible: divisible by {1:#x}")]
    ReducibleModulus(u64, u64),
    #[error("value {0:#x} is out of range for GF(2^{1})")]
    ElementOutOfRange(u64, u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("field element hex must be exactly {expected} lowercase hex digits, got {got:?}")]
    BadElementHex { expected: usize, got: String },
}

/// An element of GF(2^tau), always < 2^tau for the field it came from.
///
/// Elements do not carry their field; all arithmetic goes through the
/// [`FieldSpec`] that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Construct without a range check. Callers inside the crate must
    /// guarantee value < 2^tau for the field the element will be used in.
    pub(crate) fn from_raw(value: u32) -> FieldElement {
        FieldElement(value)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

/// Degree of a GF(2) polynomial held in a u64 bitmask; -1 for the zero
/// polynomial.
fn poly_deg(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

/// Remainder of a modulo b over GF(2)[x]. b must be nonzero.
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = poly_deg(b);
    while poly_deg(a) >= db {
        a ^= b << (poly_deg(a) - db);
    }
    a
}

/// A concrete binary field: exponent tau and an irreducible modulus of
/// degree exactly tau. Construction verifies irreducibility by trial
/// division against every monic polynomial of degree 1..=tau/2, so a
/// FieldSpec that exists is always a real field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    tau: u32,
    modulus: u64,
}

impl FieldSpec {
    pub fn new(tau: u32, modulus: u64) -> Result<FieldSpec, GfError> {
        if tau == 0 || tau > MAX_TAU {
            return Err(GfError::TauOutOfRange(tau));
        }
        if poly_deg(modulus) != tau as i32 {
            return Err(GfError::WrongModulusDegree(modulus, tau));
        }
        for g in 2..(1u64 << (tau / 2 + 1)) {
            if poly_rem(modulus, g) == 0 {
                return Err(GfError::ReducibleModulus(modulus, g));
            }
        }
        Ok(FieldSpec { tau, modulus })
    }

    /// The default field: GF(2^24) modulo x^24 + x^4 + x^3 + x + 1.
    pub fn gf2_24() -> FieldSpec {
        FieldSpec::new(24, 0x100_001b).expect("x^24+x^4+x^3+x+1 is irreducible")
    }

    /// GF(2^8) modulo x^8 + x^4 + x^3 + x + 1, for small exhaustive tests.
    pub fn gf2_8() -> FieldSpec {
        FieldSpec::new(8, 0x11b).expect("x^8+x^4+x^3+x+1 is irreducible")
    }

    /// GF(2^4) modulo x^4 + x + 1, for small exhaustive tests.
    pub fn gf2_4() -> FieldSpec {
        FieldSpec::new(4, 0x13).expect("x^4+x+1 is irreducible")
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of elements, 2^tau.
    pub fn order(&self) -> u64 {
        1u64 << self.tau
    }

    /// Checked element constructor: value must be < 2^tau.
    pub fn element(&self, value: u64) -> Result<FieldElement, GfError> {
        if value >> self.tau != 0 {
            return Err(GfError::ElementOutOfRange(value, self.tau));
        }
        Ok(FieldElement(value as u32))
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    /// Subtraction equals addition in characteristic 2; spelled out so
    /// call sites can say what they mean.
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, b)
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(a.0 >> self.tau == 0 && b.0 >> self.tau == 0);
        let a64 = a.0 as u64;
        let mut acc = 0u64;
        let mut b = b.0;
        let mut shift = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a64 << shift;
            }
            b >>= 1;
            shift += 1;
        }
        FieldElement(self.reduce(acc))
    }

    fn reduce(&self, mut acc: u64) -> u32 {
        let tau = self.tau as i32;
        loop {
            let d = poly_deg(acc);
            if d < tau {
                return acc as u32;
            }
            acc ^= self.modulus << (d - tau);
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm over
    /// GF(2)[x].
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        if a.is_zero() {
            return Err(GfError::ZeroInverse);
        }
        // Invariant: t_prev * a = r_prev (mod modulus), t * a = r.
        let mut r_prev = self.modulus;
        let mut r = a.0 as u64;
        let mut t_prev = 0u64;
        let mut t = 1u64;
        while r != 0 {
            let mut rem = r_prev;
            let mut q_t = t_prev;
            let dr = poly_deg(r);
            while poly_deg(rem) >= dr {
                let shift = poly_deg(rem) - dr;
                rem ^= r << shift;
                q_t ^= t << shift;
            }
            r_prev = r;
            r = rem;
            t_prev = t;
            t = q_t;
        }
        debug_assert_eq!(r_prev, 1, "modulus is irreducible, gcd must be 1");
        Ok(FieldElement(self.reduce(t_prev)))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Width of the fixed hex representation: ceil(tau / 4) digits.
    pub fn hex_width(&self) -> usize {
        (self.tau as usize + 3) / 4
    }

    /// Fixed-width lowercase hex, the serialized form of an element.
    pub fn format_element(&self, e: FieldElement) -> String {
        format!("{:0width$x}", e.0, width = self.hex_width())
    }

    /// Parse the fixed-width lowercase hex form. Width and case are
    /// enforced exactly so serialized vaults stay byte-canonical.
    pub fn parse_element(&self, s: &str) -> Result<FieldElement, GfError> {
        let bad = || GfError::BadElementHex {
            expected: self.hex_width(),
            got: s.to_string(),
        };
        if s.len() != self.hex_width() {
            return Err(bad());
        }
        if !s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            return Err(bad());
        }
        let value = u64::from_str_radix(s, 16).map_err(|_| bad())?;
        self.element(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Independent multiply: coefficient-wise schoolbook product on bit
    /// vectors, then long division by the modulus bit vector. Shares no
    /// code with FieldSpec::mul.
    fn oracle_mul(tau: usize, modulus: u64, a: u32, b: u32) -> u32 {
        let mut prod = vec![false; 2 * tau];
        for i in 0..tau {
            for j in 0..tau {
                if a >> i & 1 == 1 && b >> j & 1 == 1 {
                    prod[i + j] ^= true;
                }
            }
        }
        // Long division: cancel the leading term with modulus * x^(d - tau).
        for d in (tau..2 * tau).rev() {
            if prod[d] {
                for k in 0..=tau {
                    if modulus >> k & 1 == 1 {
                        prod[d - tau + k] ^= true;
                    }
                }
            }
        }
        let mut out = 0u32;
        for (i, &bit) in prod.iter().enumerate().take(tau) {
            if bit {
                out |= 1 << i;
            }
        }
        out
    }

    #[test]
    fn mul_matches_oracle_exhaustively_in_gf16() {
        let f = FieldSpec::gf2_4();
        for a in 0..16u64 {
            for b in 0..16u64 {
                let got = f.mul(f.element(a).unwrap(), f.element(b).unwrap());
                let want = oracle_mul(4, 0x13, a as u32, b as u32);
                assert_eq!(got.value(), want, "a={a:#x} b={b:#x}");
            }
        }
    }

    #[test]
    fn mul_matches_oracle_on_random_gf2_24_pairs() {
        let f = FieldSpec::gf2_24();
        let mut rng = ChaCha12Rng::seed_from_u64(0xf00d);
        for _ in 0..2_000 {
            let a = rng.gen_range(0..f.order());
            let b = rng.gen_range(0..f.order());
            let got = f.mul(f.element(a).unwrap(), f.element(b).unwrap());
            assert_eq!(got.value(), oracle_mul(24, 0x100_001b, a as u32, b as u32));
        }
    }

    #[test]
    fn x23_times_x_wraps_to_the_low_terms() {
        let f = FieldSpec::gf2_24();
        let a = f.element(0x80_0000).unwrap();
        let b = f.element(0x00_0002).unwrap();
        assert_eq!(f.mul(a, b).value(), 0x00_001b);
    }

    #[test]
    fn inv_matches_exhaustive_search_in_gf16() {
        let f = FieldSpec::gf2_4();
        for a in 1..16u64 {
            let a = f.element(a).unwrap();
            let found = (1..16u64)
                .map(|b| f.element(b).unwrap())
                .find(|&b| f.mul(a, b) == FieldElement::ONE)
                .expect("every nonzero element has an inverse");
            assert_eq!(f.inv(a).unwrap(), found);
        }
    }

    #[test]
    fn inv_of_x_in_gf16() {
        let f = FieldSpec::gf2_4();
        assert_eq!(f.inv(f.element(0x2).unwrap()).unwrap().value(), 0x9);
    }

    #[test]
    fn field_axioms_hold_on_seeded_triples() {
        let f = FieldSpec::gf2_24();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a = f.element(rng.gen_range(0..f.order())).unwrap();
            let b = f.element(rng.gen_range(0..f.order())).unwrap();
            let c = f.element(rng.gen_range(0..f.order())).unwrap();
            assert_eq!(f.add(a, b), f.add(b, a));
            assert_eq!(f.mul(a, b), f.mul(b, a));
            assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
            assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            assert_eq!(f.add(a, FieldElement::ZERO), a);
            assert_eq!(f.mul(a, FieldElement::ONE), a);
            assert_eq!(f.add(a, a), FieldElement::ZERO);
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
            }
        }
    }

    #[test]
    fn multiplicative_order_divides_group_order_exhaustively() {
        // a^(2^tau - 1) == 1 for every nonzero a, via repeated mul.
        for f in [FieldSpec::gf2_4(), FieldSpec::gf2_8()] {
            for a in 1..f.order() {
                let a = f.element(a).unwrap();
                let mut acc = FieldElement::ONE;
                for _ in 0..f.order() - 1 {
                    acc = f.mul(acc, a);
                }
                assert_eq!(acc, FieldElement::ONE, "tau={} a={}", f.tau(), a);
            }
        }
    }

    #[test]
    fn reducible_modulus_is_rejected() {
        // x^4 + 1 = (x + 1)^4 over GF(2).
        match FieldSpec::new(4, 0x11) {
            Err(GfError::ReducibleModulus(0x11, d)) => {
                assert_eq!(poly_rem(0x11, d), 0);
            }
            other => panic!("expected reducibility error, got {other:?}"),
        }
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert_eq!(FieldSpec::new(0, 1), Err(GfError::TauOutOfRange(0)));
        assert_eq!(FieldSpec::new(31, 0x8000_0001), Err(GfError::TauOutOfRange(31)));
        assert_eq!(
            FieldSpec::new(4, 0x23),
            Err(GfError::WrongModulusDegree(0x23, 4))
        );
        assert_eq!(
            FieldSpec::new(4, 0x9),
            Err(GfError::WrongModulusDegree(0x9, 4))
        );
    }

    #[test]
    fn element_range_is_checked() {
        let f = FieldSpec::gf2_4();
        assert!(f.element(15).is_ok());
        assert_eq!(f.element(16), Err(GfError::ElementOutOfRange(16, 4)));
        assert_eq!(
            FieldSpec::gf2_24().element(1 << 24),
            Err(GfError::ElementOutOfRange(1 << 24, 24))
        );
    }

    #[test]
    fn zero_has_no_inverse() {
        let f = FieldSpec::gf2_24();
        assert_eq!(f.inv(FieldElement::ZERO), Err(GfError::ZeroInverse));
    }

    #[test]
    fn hex_form_is_fixed_width_lowercase() {
        let f = FieldSpec::gf2_24();
        let e = f.element(0x1b).unwrap();
        assert_eq!(f.hex_width(), 6);
        assert_eq!(f.format_element(e), "00001b");
        assert_eq!(f.parse_element("00001b").unwrap(), e);
        assert!(f.parse_element("1b").is_err(), "short form rejected");
        assert!(f.parse_element("00001B").is_err(), "uppercase rejected");
        assert!(f.parse_element("0000zz").is_err());
        assert!(f.parse_element("fffffff").is_err(), "too wide rejected");

        let g4 = FieldSpec::gf2_4();
        assert_eq!(g4.format_element(g4.element(0xa).unwrap()), "a");
    }

    #[test]
    fn div_is_mul_by_inverse() {
        let f = FieldSpec::gf2_24();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..1_000 {
            let a = f.element(rng.gen_range(0..f.order())).unwrap();
            let b = f.element(rng.gen_range(1..f.order())).unwrap();
            let q = f.div(a, b).unwrap();
            assert_eq!(f.mul(q, b), a);
        }
    }
}
