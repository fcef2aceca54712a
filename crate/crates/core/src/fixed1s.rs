//! Fixed-1s character encoding and CAM cell match semantics.
//!
//! Every byte is stored as an 11-bit word with exactly five set bits. Because
//! all character codes share the same weight, any two distinct codes differ in
//! a position where the stored word has a 1 and the search word has a 0, which
//! is the only condition a single-ended NOR match line can detect. The all-zero
//! stored word is the wildcard; the all-zero search word is the pad driven past
//! the end of a packet.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rulespec::WildByte;

/// Bits per encoded character.
pub const CODE_BITS: u32 = 11;
/// Set bits in every character code.
pub const CODE_WEIGHT: u32 = 5;
const CODE_MASK: u16 = (1 << CODE_BITS) - 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("suffix of {len} bytes does not fit a {width}-slot row")]
    SuffixTooLong { len: usize, width: usize },
    #[error("invalid code word {0:#05x}: must be 0 or have exactly five set bits")]
    InvalidCode(u16),
    #[error("codebook is not injective or has invalid entries")]
    InvalidCodebook,
}

/// An 11-bit code word. Bit 0 is cell 0.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Code11(u16);

impl Code11 {
    /// Stored wildcard / search pad.
    pub const ZERO: Code11 = Code11(0);

    pub fn new(word: u16) -> Result<Self, EncodeError> {
        if word & !CODE_MASK != 0 {
            return Err(EncodeError::InvalidCode(word));
        }
        let ones = word.count_ones();
        if ones != 0 && ones != CODE_WEIGHT {
            return Err(EncodeError::InvalidCode(word));
        }
        Ok(Code11(word))
    }

    pub fn word(self) -> u16 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `0x01F` style rendering used by every file format.
    pub fn to_hex(self) -> String {
        format!("0x{:03X}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, EncodeError> {
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        let word = u16::from_str_radix(digits, 16).map_err(|_| EncodeError::InvalidCode(u16::MAX))?;
        Code11::new(word)
    }
}

impl fmt::Debug for Code11 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Code11({:011b})", self.0)
    }
}

impl Serialize for Code11 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Code11 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Code11::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Byte to code mapping.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Codebook {
    table: [Code11; 256],
}

impl Codebook {
    /// The canonical book: popcount-5 words in ascending numeric order, byte
    /// `b` taking the `b`-th one. 462 such words exist, so 256 always fit.
    pub fn canonical() -> Self {
        let mut table = [Code11::ZERO; 256];
        let mut words = (0u16..=CODE_MASK).filter(|w| w.count_ones() == CODE_WEIGHT);
        for slot in table.iter_mut() {
            *slot = Code11(words.next().expect("462 weight-5 words exist"));
        }
        Codebook { table }
    }

    /// Accepts any injective weight-5 table.
    pub fn from_codes(codes: &[Code11]) -> Result<Self, EncodeError> {
        if codes.len() != 256 {
            return Err(EncodeError::InvalidCodebook);
        }
        let mut table = [Code11::ZERO; 256];
        let mut seen = std::collections::HashSet::new();
        for (slot, &c) in table.iter_mut().zip(codes) {
            if c.word().count_ones() != CODE_WEIGHT || !seen.insert(c) {
                return Err(EncodeError::InvalidCodebook);
            }
            *slot = c;
        }
        Ok(Codebook { table })
    }

    #[inline]
    pub fn code(&self, byte: u8) -> Code11 {
        self.table[byte as usize]
    }

    pub fn codes(&self) -> &[Code11; 256] {
        &self.table
    }

    /// `byte,code_hex` CSV, one row per byte.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("byte,code_hex\n");
        for (b, c) in self.table.iter().enumerate() {
            out.push_str(&format!("{},{}\n", b, c.to_hex()));
        }
        out
    }

    pub fn encode_suffix(&self, bytes: &[WildByte], width: usize) -> Result<WideRow, EncodeError> {
        if bytes.len() > width {
            return Err(EncodeError::SuffixTooLong { len: bytes.len(), width });
        }
        let mut slots = vec![Code11::ZERO; width];
        for (slot, b) in slots.iter_mut().zip(bytes) {
            if let WildByte::Literal(v) = b {
                *slot = self.code(*v);
            }
        }
        Ok(WideRow { slots })
    }

    /// Search codes for `width` bytes starting at `start`; positions past the
    /// end of `stream` are driven with the pad code.
    pub fn window(&self, stream: &[u8], start: usize, width: usize) -> Vec<Code11> {
        (start..start + width)
            .map(|i| stream.get(i).map_or(Code11::ZERO, |&b| self.code(b)))
            .collect()
    }
}

impl Default for Codebook {
    fn default() -> Self {
        Codebook::canonical()
    }
}

/// Port A: a mismatch is any cell storing 1 while its search line is 0.
#[inline]
pub fn match_port_a(stored: Code11, search: Code11) -> bool {
    stored.0 & !search.0 & CODE_MASK == 0
}

/// Port B drives the complemented key on the complement side of the cell, so
/// a mismatch is a search 1 over a stored 0.
#[inline]
pub fn match_port_b(stored: Code11, search: Code11) -> bool {
    search.0 & !stored.0 & CODE_MASK == 0
}

/// One Phase-2 row: `W` slots of 11 bits.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WideRow {
    pub slots: Vec<Code11>,
}

impl WideRow {
    pub fn width(&self) -> usize {
        self.slots.len()
    }
}

/// Slot-wise port-A match of a wide row against a search window.
pub fn match_wide(row: &WideRow, window: &[Code11]) -> bool {
    row.slots.len() == window.len()
        && row.slots.iter().zip(window).all(|(&s, &k)| match_port_a(s, k))
}
