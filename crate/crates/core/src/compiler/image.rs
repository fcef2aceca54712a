//! On-disk table image: a JSON document
//!
//! ```text
//! { "v": 1, "config": {..}, "codebook": ["0x01F", ..256],
//!   "stage1": [null | NextRange, ..256],
//!   "pes": [[{"code": "0x02F", "next": NextRange}, ..], ..],
//!   "phase2": [[{"row": ["0x..", ..W], "sub_pattern_id": n, "suffix_len": n}, ..], ..] }
//! ```
//!
//! `NextRange` is `{"route": null | {"kind": "pe", "pe", "dn", "up"} |
//! {"kind": "phase2", "bank", "dn", "up"}, "terminal": null | id}`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pack::{BankRow, NextRange, PeRow, Route, TableImage};
use super::HwConfig;
use crate::fixed1s::{Code11, Codebook};

pub const IMAGE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("image schema: {0}")]
    Schema(String),
    #[error("image invariant violated: {0}")]
    Invariant(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageDoc {
    v: u32,
    config: HwConfig,
    codebook: Vec<Code11>,
    stage1: Vec<Option<NextRange>>,
    pes: Vec<Vec<PeRow>>,
    phase2: Vec<Vec<BankRow>>,
}

impl TableImage {
    pub fn to_json(&self) -> String {
        let doc = ImageDoc {
            v: IMAGE_VERSION,
            config: self.config.clone(),
            codebook: self.codebook.codes().to_vec(),
            stage1: self.stage1.clone(),
            pes: self.pes.clone(),
            phase2: self.phase2.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("image serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ImageError> {
        let doc: ImageDoc = serde_json::from_str(text).map_err(|e| ImageError::Schema(e.to_string()))?;
        if doc.v != IMAGE_VERSION {
            return Err(ImageError::Schema(format!("unsupported version {}", doc.v)));
        }
        let codebook = Codebook::from_codes(&doc.codebook).map_err(|e| ImageError::Schema(e.to_string()))?;
        let img = TableImage { config: doc.config, codebook, stage1: doc.stage1, pes: doc.pes, phase2: doc.phase2 };
        img.validate()?;
        Ok(img)
    }

    /// Checks shape, capacity and routing invariants.
    pub fn validate(&self) -> Result<(), ImageError> {
        let bad = |m: String| Err(ImageError::Invariant(m));
        let c = &self.config;
        c.validate().map_err(|e| ImageError::Invariant(e.to_string()))?;
        if c.stages.is_none() {
            return bad("stage assignment missing".into());
        }
        if self.stage1.len() != 256 {
            return bad(format!("stage1 has {} entries, expected 256", self.stage1.len()));
        }
        if self.pes.len() != c.n_pes || self.phase2.len() != c.n_banks {
            return bad("array count does not match config".into());
        }
        if let Some((i, _)) = self.pes.iter().enumerate().find(|(_, p)| p.len() > c.pe_rows) {
            return bad(format!("PE {i} exceeds {} rows", c.pe_rows));
        }
        for (b, bank) in self.phase2.iter().enumerate() {
            if bank.len() > c.bank_rows {
                return bad(format!("bank {b} exceeds {} rows", c.bank_rows));
            }
            for r in bank {
                if r.row.width() != c.width || r.payload.suffix_len > c.width {
                    return bad(format!("bank {b} row width mismatch"));
                }
            }
        }

        // (entry, stage it feeds)
        let mut entries: Vec<(&NextRange, usize, String)> = Vec::new();
        for (byte, e) in self.stage1.iter().enumerate() {
            if let Some(e) = e {
                entries.push((e, 2, format!("stage1[{byte}]")));
            }
        }
        for (pe, rows) in self.pes.iter().enumerate() {
            let Some(stage) = c.stage_of_pe(pe) else {
                if rows.is_empty() {
                    continue;
                }
                return bad(format!("PE {pe} holds rows but belongs to no stage"));
            };
            for (r, row) in rows.iter().enumerate() {
                if row.code.is_zero() {
                    return bad(format!("PE {pe} row {r} stores a wildcard"));
                }
                entries.push((&row.next, stage + 1, format!("PE {pe} row {r}")));
            }
        }
        for (e, next_stage, at) in entries {
            if e.is_empty() {
                return bad(format!("{at}: empty next range"));
            }
            let Some(route) = e.route else { continue };
            let (dn, up) = route.rows();
            if dn > up {
                return bad(format!("{at}: DN {dn} > UP {up}"));
            }
            match route {
                Route::Pe { pe, .. } => {
                    if next_stage > c.depth || c.stage_of_pe(pe) != Some(next_stage) {
                        return bad(format!("{at}: PE {pe} is not in stage {next_stage}"));
                    }
                    let rows = &self.pes[pe];
                    if up >= rows.len() {
                        return bad(format!("{at}: range {dn}..{up} beyond PE {pe}"));
                    }
                    let mut seen = HashSet::new();
                    if !rows[dn..=up].iter().all(|r| seen.insert(r.code)) {
                        return bad(format!("{at}: sibling characters repeat"));
                    }
                }
                Route::Phase2 { bank, .. } => {
                    if next_stage != c.depth + 1 {
                        return bad(format!("{at}: Phase-2 route before stage {}", c.depth));
                    }
                    if bank >= self.phase2.len() || up >= self.phase2[bank].len() {
                        return bad(format!("{at}: range {dn}..{up} beyond bank {bank}"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), ImageError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ImageError> {
        TableImage::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn write_image(img: &TableImage, path: &Path) -> Result<(), ImageError> {
    img.write(path)
}

pub fn read_image(path: &Path) -> Result<TableImage, ImageError> {
    TableImage::read(path)
}
