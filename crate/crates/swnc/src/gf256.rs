//! GF(2^8) byte arithmetic backing all coding coefficients.
//!
//! Elements are bytes; addition is XOR, multiplication is carry-less
//! polynomial product reduced by x^8 + x^4 + x^3 + x + 1 (0x11B). The
//! full 256x256 product table and the inverse table are built once at
//! startup from the carry-less definition, so every fast-path lookup can
//! be cross-checked against `carryless_mul` directly.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign};
use std::sync::LazyLock;

/// The reduction polynomial x^8 + x^4 + x^3 + x + 1.
pub const REDUCTION_POLY: u16 = 0x11B;

/// Carry-less product of two bytes reduced modulo [`REDUCTION_POLY`].
///
/// This is the defining computation; the lookup tables are derived from it.
pub fn carryless_mul(a: u8, b: u8) -> u8 {
    let mut acc: u16 = 0;
    for bit in 0..8 {
        if (b >> bit) & 1 == 1 {
            acc ^= (a as u16) << bit;
        }
    }
    for bit in (8..16).rev() {
        if (acc >> bit) & 1 == 1 {
            acc ^= REDUCTION_POLY << (bit - 8);
        }
    }
    acc as u8
}

static MUL: LazyLock<Box<[[u8; 256]; 256]>> = LazyLock::new(|| {
    let mut table = Box::new([[0u8; 256]; 256]);
    for a in 0..256 {
        for b in a..256 {
            let p = carryless_mul(a as u8, b as u8);
            table[a][b] = p;
            table[b][a] = p;
        }
    }
    table
});

static INV: LazyLock<[u8; 256]> = LazyLock::new(|| {
    let mut table = [0u8; 256];
    for a in 1..256usize {
        for b in 1..256usize {
            if MUL[a][b] == 1 {
                table[a] = b as u8;
                break;
            }
        }
    }
    table
});

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    #[inline]
    pub const fn new(value: u8) -> Self {
        Self(value)
    }

    #[inline]
    pub const fn raw(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Field addition; XOR, so every element is its own additive inverse.
    #[inline]
    pub fn gf_add(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }

    /// Field multiplication via the startup-built product table.
    #[inline]
    pub fn gf_mul(self, rhs: Self) -> Self {
        Self(MUL[self.0 as usize][rhs.0 as usize])
    }

    /// Multiplicative inverse. Zero has none.
    #[inline]
    pub fn gf_inv(self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            Some(Self(INV[self.0 as usize]))
        }
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256(0x{:02X})", self.0)
    }
}

impl Add for Gf256 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.gf_add(rhs)
    }
}

impl AddAssign for Gf256 {
    fn add_assign(&mut self, rhs: Self) {
        *self = self.gf_add(rhs);
    }
}

impl Mul for Gf256 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.gf_mul(rhs)
    }
}

impl MulAssign for Gf256 {
    fn mul_assign(&mut self, rhs: Self) {
        *self = self.gf_mul(rhs);
    }
}

/// `dst[i] ^= scale * src[i]` over byte payloads.
pub fn axpy_bytes(dst: &mut [u8], scale: Gf256, src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    if scale.is_zero() {
        return;
    }
    let row = &MUL[scale.0 as usize];
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= row[*s as usize];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn add_examples() {
        assert_eq!(Gf256(0x00) + Gf256(0x57), Gf256(0x57));
        assert_eq!(Gf256(0x57) + Gf256(0x57), Gf256(0x00));
        assert_eq!(Gf256(0x53) + Gf256(0xCA), Gf256(0x99));
    }

    #[test]
    fn mul_examples() {
        for x in 0..=255u8 {
            assert_eq!(Gf256(0x00) * Gf256(x), Gf256::ZERO);
        }
        assert_eq!(Gf256(0x02) * Gf256(0x03), Gf256(0x06));
        // 0x80 * 0x02 overflows into x^8 and reduces by 0x11B.
        assert_eq!(carryless_mul(0x80, 0x02), 0x1B);
        assert_eq!(Gf256(0x80) * Gf256(0x02), Gf256(0x1B));
    }

    #[test]
    fn inv_examples() {
        assert_eq!(Gf256(0x01).gf_inv(), Some(Gf256(0x01)));
        // Exhaustive-search oracle for the inverse of 0x02.
        let mut expect = None;
        for b in 1..=255u8 {
            if carryless_mul(0x02, b) == 1 {
                expect = Some(b);
            }
        }
        assert_eq!(expect, Some(0x8D));
        assert_eq!(Gf256(0x02).gf_inv(), Some(Gf256(0x8D)));
        assert_eq!(Gf256(0x00).gf_inv(), None);
    }

    #[test]
    fn table_matches_carryless_definition_exhaustively() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(Gf256(a) * Gf256(b), Gf256(carryless_mul(a, b)));
            }
        }
    }

    #[test]
    fn every_nonzero_element_has_unique_inverse() {
        let mut seen = [false; 256];
        for a in 1..=255u8 {
            let inv = Gf256(a).gf_inv().unwrap();
            assert_eq!(Gf256(a) * inv, Gf256::ONE);
            assert!(!seen[inv.raw() as usize]);
            seen[inv.raw() as usize] = true;
        }
    }

    #[test]
    fn mul_commutes_exhaustively() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(Gf256(a) * Gf256(b), Gf256(b) * Gf256(a));
            }
        }
    }

    #[test]
    fn field_axioms_on_sampled_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6f25);
        for _ in 0..20_000 {
            let a = Gf256(rng.gen());
            let b = Gf256(rng.gen());
            let c = Gf256(rng.gen());
            assert_eq!((a * b) * c, a * (b * c));
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!(a + (b + c), (a + b) + c);
        }
    }

    #[test]
    fn axpy_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let src: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
        let mut dst: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
        let scale = Gf256(0xA7);
        let mut expect = dst.clone();
        for (e, s) in expect.iter_mut().zip(&src) {
            *e ^= carryless_mul(0xA7, *s);
        }
        axpy_bytes(&mut dst, scale, &src);
        assert_eq!(dst, expect);
    }
}
