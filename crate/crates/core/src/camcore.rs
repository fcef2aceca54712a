//! Functional CAM/SRAM arrays with activity counting.
//!
//! Searches only look at the rows the range decoder enables; everything
//! outside the range is power-gated and contributes no search activity.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed1s::{match_port_a, match_port_b, match_wide, Code11, WideRow, CODE_BITS};

/// Rows per level-1 look-ahead segment of the range decoder.
pub const DECODER_SEGMENT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    A,
    B,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CamError {
    #[error("range {dn}..={up} invalid for {rows} rows")]
    BadRange { dn: usize, up: usize, rows: usize },
    #[error("port B cannot search a wide wildcard array")]
    PortBOnWide,
    #[error("search key does not fit the array")]
    KeyShape,
    #[error("row {row} not populated ({rows} rows)")]
    Unpacked { row: usize, rows: usize },
}

/// Counters one operation contributes; summed per block by the engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub searches: u64,
    pub enabled_rows: u64,
    /// Match-line bits evaluated: enabled rows x slots x 11.
    pub searched_bits: u64,
    /// Search-line bits driven.
    pub sl_bits: u64,
    pub l1_segments: u64,
    pub sram_bits_read: u64,
}

impl AddAssign for Activity {
    fn add_assign(&mut self, o: Activity) {
        self.searches += o.searches;
        self.enabled_rows += o.enabled_rows;
        self.searched_bits += o.searched_bits;
        self.sl_bits += o.sl_bits;
        self.l1_segments += o.l1_segments;
        self.sram_bits_read += o.sram_bits_read;
    }
}

/// Inclusive `DN..=UP` row range carried in a `{next range}` entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnableRange {
    pub dn: usize,
    pub up: usize,
}

/// Rows enabled by the decoder. Always an inclusive interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnableMask {
    pub dn: usize,
    pub up: usize,
}

impl EnableMask {
    #[inline]
    pub fn contains(&self, row: usize) -> bool {
        self.dn <= row && row <= self.up
    }

    pub fn len(&self) -> usize {
        self.up - self.dn + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rows(&self) -> std::ops::RangeInclusive<usize> {
        self.dn..=self.up
    }

    pub fn is_subset_of(&self, other: &EnableMask) -> bool {
        other.dn <= self.dn && self.up <= other.up
    }

    pub fn l1_segments(&self) -> usize {
        (self.up + 1).div_ceil(DECODER_SEGMENT) - self.dn / DECODER_SEGMENT
    }
}

/// Converts a binary range into enables. The functional result is the
/// inclusive interval; the level-1 segment count is what the decoder costs.
pub fn decode_range(r: EnableRange, row_count: usize) -> Result<(EnableMask, Activity), CamError> {
    if r.dn > r.up || r.up >= row_count {
        return Err(CamError::BadRange { dn: r.dn, up: r.up, rows: row_count });
    }
    let mask = EnableMask { dn: r.dn, up: r.up };
    let act = Activity {
        enabled_rows: mask.len() as u64,
        l1_segments: mask.l1_segments() as u64,
        ..Activity::default()
    };
    Ok((mask, act))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CamWords {
    /// Phase-1 PE: one character per row, dual-port.
    Narrow(Vec<Code11>),
    /// Phase-2 bank: `W` slots per row, port A only.
    Wide(Vec<WideRow>),
}

#[derive(Clone, Copy, Debug)]
pub enum SearchKey<'a> {
    Char(Code11),
    Window(&'a [Code11]),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CamArray {
    pub words: CamWords,
    /// Provisioned rows.
    pub capacity: usize,
    pub slot_count: usize,
}

impl CamArray {
    pub fn narrow(rows: Vec<Code11>, capacity: usize) -> Self {
        assert!(rows.len() <= capacity, "rows exceed capacity");
        CamArray { words: CamWords::Narrow(rows), capacity, slot_count: 1 }
    }

    pub fn wide(rows: Vec<WideRow>, capacity: usize, width: usize) -> Self {
        assert!(rows.len() <= capacity, "rows exceed capacity");
        assert!(rows.iter().all(|r| r.width() == width), "row width mismatch");
        CamArray { words: CamWords::Wide(rows), capacity, slot_count: width }
    }

    pub fn row_count(&self) -> usize {
        match &self.words {
            CamWords::Narrow(r) => r.len(),
            CamWords::Wide(r) => r.len(),
        }
    }

    fn charge(&self, enabled: usize, segments: usize) -> Activity {
        let bits_per_row = (self.slot_count as u32 * CODE_BITS) as u64;
        Activity {
            searches: 1,
            enabled_rows: enabled as u64,
            searched_bits: enabled as u64 * bits_per_row,
            sl_bits: bits_per_row,
            l1_segments: segments as u64,
            sram_bits_read: 0,
        }
    }

    /// Activity of one search over `mask`.
    pub fn search_activity(&self, mask: &EnableMask) -> Activity {
        self.charge(mask.len(), mask.l1_segments())
    }

    /// Activity of one search with every provisioned row enabled.
    pub fn full_array_activity(&self) -> Activity {
        self.charge(self.capacity, self.capacity.div_ceil(DECODER_SEGMENT))
    }

    /// All enabled rows matching `key`.
    pub fn cam_search(&self, mask: &EnableMask, key: SearchKey<'_>, port: Port) -> Result<(Vec<usize>, Activity), CamError> {
        if mask.up >= self.row_count() {
            return Err(CamError::BadRange { dn: mask.dn, up: mask.up, rows: self.row_count() });
        }
        let hits = match (&self.words, key) {
            (CamWords::Narrow(rows), SearchKey::Char(k)) => {
                let m = match port {
                    Port::A => match_port_a,
                    Port::B => match_port_b,
                };
                mask.rows().filter(|&i| m(rows[i], k)).collect()
            }
            (CamWords::Wide(_), _) if port == Port::B => return Err(CamError::PortBOnWide),
            (CamWords::Wide(rows), SearchKey::Window(w)) if w.len() == self.slot_count => {
                mask.rows().filter(|&i| match_wide(&rows[i], w)).collect()
            }
            _ => return Err(CamError::KeyShape),
        };
        Ok((hits, self.search_activity(mask)))
    }

    /// Single-character search returning the first hit, for PE lookups where
    /// sibling characters are distinct.
    #[inline]
    pub fn search_char(&self, mask: &EnableMask, key: Code11, port: Port) -> Option<usize> {
        let CamWords::Narrow(rows) = &self.words else { return None };
        let m = match port {
            Port::A => match_port_a,
            Port::B => match_port_b,
        };
        mask.rows().find(|&i| m(rows[i], key))
    }
}

/// Reads one SRAM word of `bits` width.
pub fn sram_read<T: Clone>(payloads: &[T], row: usize, bits: u32) -> Result<(T, Activity), CamError> {
    let v = payloads.get(row).ok_or(CamError::Unpacked { row, rows: payloads.len() })?;
    Ok((v.clone(), Activity { sram_bits_read: bits as u64, ..Activity::default() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed1s::Codebook;

    #[test]
    fn decode_examples() {
        let (m, a) = decode_range(EnableRange { dn: 3, up: 10 }, 64).unwrap();
        assert_eq!(m.rows().count(), 8);
        assert_eq!((a.enabled_rows, a.l1_segments), (8, 2));
        let (m, _) = decode_range(EnableRange { dn: 5, up: 5 }, 64).unwrap();
        assert!(m.contains(5) && !m.contains(4) && !m.contains(6));
        let (_, a) = decode_range(EnableRange { dn: 0, up: 63 }, 64).unwrap();
        assert_eq!((a.enabled_rows, a.l1_segments), (64, 8));
        assert!(decode_range(EnableRange { dn: 0, up: 64 }, 64).is_err());
        assert!(decode_range(EnableRange { dn: 4, up: 3 }, 64).is_err());
    }

    #[test]
    fn decode_exhaustive_interval() {
        for dn in 0..64 {
            for up in dn..64 {
                let (m, a) = decode_range(EnableRange { dn, up }, 64).unwrap();
                for i in 0..64 {
                    assert_eq!(m.contains(i), dn <= i && i <= up);
                }
                assert_eq!(a.enabled_rows as usize, up - dn + 1);
                let touched = (0..64).filter(|i| (dn..=up).contains(i)).map(|i| i / 8).collect::<std::collections::BTreeSet<_>>();
                assert_eq!(a.l1_segments as usize, touched.len());
            }
        }
    }

    #[test]
    fn narrow_search_and_gating() {
        let cb = Codebook::canonical();
        let arr = CamArray::narrow(vec![cb.code(b'b'), cb.code(b'c')], 64);
        let all = EnableMask { dn: 0, up: 1 };
        let (hits, act) = arr.cam_search(&all, SearchKey::Char(cb.code(b'b')), Port::A).unwrap();
        assert_eq!(hits, vec![0]);
        assert_eq!(act.searched_bits, 22);
        let (hits, _) = arr.cam_search(&all, SearchKey::Char(cb.code(b'b')), Port::B).unwrap();
        assert_eq!(hits, vec![0]);
        let only1 = EnableMask { dn: 1, up: 1 };
        let (hits, act) = arr.cam_search(&only1, SearchKey::Char(cb.code(b'b')), Port::A).unwrap();
        assert!(hits.is_empty());
        assert_eq!(act.searched_bits, 11);
        assert_eq!(arr.search_char(&all, cb.code(b'c'), Port::B), Some(1));
    }

    #[test]
    fn wide_is_single_port() {
        let cb = Codebook::canonical();
        let row = cb.encode_suffix(&[crate::rulespec::WildByte::Literal(b'x')], 4).unwrap();
        let arr = CamArray::wide(vec![row], 64, 4);
        let w = cb.window(b"xyz", 0, 4);
        let m = EnableMask { dn: 0, up: 0 };
        assert_eq!(arr.cam_search(&m, SearchKey::Window(&w), Port::A).unwrap().0, vec![0]);
        assert_eq!(arr.cam_search(&m, SearchKey::Window(&w), Port::B), Err(CamError::PortBOnWide));
        assert_eq!(arr.cam_search(&m, SearchKey::Window(&w), Port::A).unwrap().1.searched_bits, 44);
    }

    #[test]
    fn sram_reads() {
        let payloads = vec![7u32, 9];
        let (v, a) = sram_read(&payloads, 1, 28).unwrap();
        assert_eq!((v, a.sram_bits_read), (9, 28));
        assert_eq!(sram_read(&payloads, 2, 28), Err(CamError::Unpacked { row: 2, rows: 2 }));
    }
}
