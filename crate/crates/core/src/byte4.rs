//! Byte4 values and the packed joint representation.
//!
//! A joint b4v of `n` grabits is stored in a `u64` with two bits per grabit.
//! Grabit 0 occupies the most significant pair, so the packed word is exactly
//! the base-4 integer index of the joint value. Within a pair the high bit is
//! the byte logical value (blv) and the low bit the gradient value.

use crate::error::{GrabitError, Result};
use serde::{Deserialize, Serialize};

/// Largest grabit count a packed word can hold.
pub const MAX_GRABITS: usize = 32;

const EVEN_BITS: u64 = 0x5555_5555_5555_5555;

/// A single grabit's bin index `2 * blv + gradient`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Byte4Value(u8);

impl Byte4Value {
    pub fn new(value: u8) -> Result<Self> {
        if value > 3 {
            return Err(GrabitError::InvalidByte4(value as u64));
        }
        Ok(Self(value))
    }

    pub fn from_parts(blv: bool, gradient: bool) -> Self {
        Self(((blv as u8) << 1) | gradient as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn blv(self) -> u8 {
        self.0 >> 1
    }

    pub fn gradient(self) -> u8 {
        self.0 & 1
    }
}

pub(crate) fn check_width(n_grabits: usize) -> Result<()> {
    if n_grabits > MAX_GRABITS {
        Err(GrabitError::TooManyGrabits(n_grabits))
    } else {
        Ok(())
    }
}

/// Mask covering `2 * n` bits.
#[inline]
pub fn joint_mask(n_grabits: usize) -> u64 {
    if n_grabits >= 32 {
        u64::MAX
    } else {
        (1u64 << (2 * n_grabits)) - 1
    }
}

/// Squeeze the even-position bits of `x` into the low half.
#[inline]
fn compact_even(mut x: u64) -> u64 {
    x &= EVEN_BITS;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF;
    x
}

/// Inverse of [`compact_even`].
#[inline]
pub fn spread_even(mut x: u64) -> u64 {
    x &= 0x0000_0000_FFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & EVEN_BITS;
    x
}

/// Byte logical value vector of a packed joint b4v, as an integer with grabit 0 most significant.
#[inline]
pub fn blv_of(joint: u64) -> u64 {
    compact_even(joint >> 1)
}

/// Gradient vector of a packed joint b4v.
#[inline]
pub fn gradient_of(joint: u64) -> u64 {
    compact_even(joint)
}

/// Parity of the summed gradient values; `true` means odd.
#[inline]
pub fn gradient_parity(joint: u64) -> bool {
    (joint & EVEN_BITS).count_ones() & 1 == 1
}

/// Joint b4v `2i + sigma` from a blv vector and a gradient vector.
#[inline]
pub fn compose(blv: u64, gradient: u64) -> u64 {
    (spread_even(blv) << 1) | spread_even(gradient)
}

/// The sign-concentrated b4v of a blv: gradient all-zeros for a nonnegative
/// sign, `(0, .., 0, 1)` otherwise.
#[inline]
pub fn canonical(blv: u64, negative: bool) -> u64 {
    (spread_even(blv) << 1) | negative as u64
}

/// Bit shift of grabit `k` in an `n`-grabit packed word.
#[inline]
pub fn shift_of(k: usize, n_grabits: usize) -> u32 {
    (2 * (n_grabits - 1 - k)) as u32
}

#[inline]
pub fn get(joint: u64, k: usize, n_grabits: usize) -> u8 {
    ((joint >> shift_of(k, n_grabits)) & 3) as u8
}

#[inline]
pub fn set(joint: u64, k: usize, n_grabits: usize, value: u8) -> u64 {
    let s = shift_of(k, n_grabits);
    (joint & !(3u64 << s)) | ((value as u64 & 3) << s)
}

/// Binary rendering of a blv integer with `n` digits, grabit 0 first.
pub fn blv_binary(blv: u64, n_grabits: usize) -> String {
    (0..n_grabits)
        .map(|k| if (blv >> (n_grabits - 1 - k)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte4_decomposition() {
        for v in 0..4u8 {
            let b = Byte4Value::new(v).unwrap();
            assert_eq!(b.value(), 2 * b.blv() + b.gradient());
        }
        assert!(Byte4Value::new(4).is_err());
    }

    #[test]
    fn packed_layout_is_base4_index() {
        // grabits (3, 2) -> 3*4 + 2
        let j = set(set(0, 0, 2, 3), 1, 2, 2);
        assert_eq!(j, 14);
        assert_eq!(blv_of(j), 0b11);
        assert_eq!(gradient_of(j), 0b10);
        assert!(gradient_parity(j));
        assert_eq!(canonical(0b11, true), 0b1011);
        assert_eq!(blv_binary(0b011, 3), "011");
    }

    proptest! {
        #[test]
        fn compose_inverts_split(joint in 0u64..(1 << 40)) {
            prop_assert_eq!(compose(blv_of(joint), gradient_of(joint)), joint);
        }
    }
}
