//! Fixed-width bit strings.
//!
//! Strings of up to 64 bits are stored in a `u64`; bit 1 of the string (the
//! first, leftmost bit) is the most significant bit of the value.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_WIDTH: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    value: u64,
    width: u32,
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl BitString {
    pub fn new(value: u64, width: u32) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::InvalidParameter(format!("bit width {width} outside 1..=64")));
        }
        if value & !mask(width) != 0 {
            return Err(Error::WidthMismatch { value, width });
        }
        Ok(Self { value, width })
    }

    pub fn zero(width: u32) -> Self {
        Self::new(0, width).expect("valid width")
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Bit `i` counted from the left, 0-based.
    pub fn bit(&self, i: u32) -> bool {
        assert!(i < self.width);
        (self.value >> (self.width - 1 - i)) & 1 == 1
    }

    pub fn flip(&self, i: u32) -> Self {
        assert!(i < self.width);
        Self {
            value: self.value ^ (1 << (self.width - 1 - i)),
            width: self.width,
        }
    }

    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.width, other.width);
        Self {
            value: self.value ^ other.value,
            width: self.width,
        }
    }

    /// Lowercase, zero-padded hex with `ceil(width/4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.width.div_ceil(4) as usize;
        format!("{:0digits$x}", self.value)
    }

    pub fn from_hex(s: &str, width: u32) -> Result<Self> {
        let digits = width.div_ceil(4) as usize;
        if s.len() != digits {
            return Err(Error::Parse(format!(
                "hex string `{s}` must have exactly {digits} digits for {width} bits"
            )));
        }
        let value = u64::from_str_radix(s, 16).map_err(|e| Error::Parse(format!("`{s}`: {e}")))?;
        Self::new(value, width)
    }

    pub fn from_binary(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 64 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Parse(format!("`{s}` is not a binary string of 1..=64 bits")));
        }
        let value = u64::from_str_radix(s, 2).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(value, s.len() as u32)
    }

    pub fn to_binary(&self) -> String {
        let w = self.width as usize;
        format!("{:0w$b}", self.value)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_is_fixed_width() {
        let b = BitString::new(0x3, 9).unwrap();
        assert_eq!(b.to_hex(), "003");
        assert_eq!(BitString::from_hex("003", 9).unwrap(), b);
        assert!(BitString::from_hex("03", 9).is_err());
        assert!(BitString::from_hex("200", 9).is_err());
    }

    #[test]
    fn bits_are_msb_first() {
        let b = BitString::from_binary("1011").unwrap();
        assert_eq!(b.value(), 11);
        assert!(b.bit(0));
        assert!(!b.bit(1));
        assert_eq!(b.flip(1).to_binary(), "1111");
    }

    #[test]
    fn width_is_enforced() {
        assert!(BitString::new(4, 2).is_err());
        assert!(BitString::new(0, 0).is_err());
        assert_eq!(BitString::new(u64::MAX, 64).unwrap().to_hex().len(), 16);
    }
}
