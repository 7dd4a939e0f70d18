//! LSB-first bit packing of fixed-width unsigned values.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value` (`width ≤ 32`).
    pub fn write(&mut self, value: u32, width: u32) {
        debug_assert!(width <= 32 && (width == 32 || value >> width == 0));
        self.acc |= (value as u64) << self.filled;
        self.filled += width;
        while self.filled >= 8 {
            self.bytes.push(self.acc as u8);
            self.acc >>= 8;
            self.filled -= 8;
        }
    }

    /// Pads the final partial byte with zeros.
    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push(self.acc as u8);
        }
        self.bytes
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    filled: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader {
            bytes,
            pos: 0,
            acc: 0,
            filled: 0,
        }
    }

    pub fn read(&mut self, width: u32) -> Result<u32> {
        while self.filled < width {
            let b = *self
                .bytes
                .get(self.pos)
                .ok_or_else(|| Error::Format("bit stream ended early".into()))?;
            self.acc |= (b as u64) << self.filled;
            self.pos += 1;
            self.filled += 8;
        }
        let v = if width == 0 {
            0
        } else {
            (self.acc & ((1u64 << width) - 1)) as u32
        };
        self.acc >>= width;
        self.filled -= width;
        Ok(v)
    }
}

/// Bytes needed for `count` values of `width` bits.
pub fn packed_len(count: usize, width: u32) -> usize {
    (count * width as usize).div_ceil(8)
}
