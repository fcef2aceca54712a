//! Ruleset to table-image compiler.
//!
//! Patterns are cut into table-sized elements, their literal prefixes form a
//! forward-only trie whose depth-`d` transitions live in the PEs of stage
//! `d`, and the remaining bytes go to the wide Phase-2 banks. Each SRAM entry
//! names the row range holding the next candidates, so a search only ever
//! enables the children of the current state.

mod config;
mod image;
mod pack;
mod split;
mod trie;

use thiserror::Error;

pub use config::{bits_for, parse_stage_spec, HwConfig, StageAssignment};
pub use image::{read_image, write_image, ImageError, IMAGE_VERSION};
pub use pack::{default_stage_assignment, pack_tables, BankRow, NextRange, PeRow, Phase2Payload, Route, TableImage};
pub use split::{split_patterns, ChainPlan, SubId, SubPattern};
pub use trie::{build_conventional_ac, build_trie, AcStats, Trie, TrieState, ROOT};

use crate::fixed1s::EncodeError;
use crate::rulespec::{PatternId, RuleSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("pattern {pattern}: wildcard at byte {position} falls in a Phase-1 prefix")]
    WildcardInPrefix { pattern: PatternId, position: usize },
    #[error("stage {stage}: a state has {size} children but a PE holds {rows} rows")]
    GroupTooLarge { stage: usize, size: usize, rows: usize },
    #[error("stage {stage}: a group of {group} rows does not fit its {pes} PEs of {rows} rows")]
    StageFull { stage: usize, group: usize, pes: usize, rows: usize },
    #[error("stages need {needed} PEs but only {available} exist")]
    NotEnoughPes { needed: usize, available: usize },
    #[error("a state owns {size} suffixes but a bank holds {rows} rows")]
    SuffixGroupTooLarge { size: usize, rows: usize },
    #[error("a suffix group of {group} rows does not fit {banks} banks of {rows} rows")]
    Phase2Full { group: usize, banks: usize, rows: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Everything the compiler derives from a ruleset.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub subs: Vec<SubPattern>,
    pub plan: ChainPlan,
    pub trie: Trie,
    pub stats: AcStats,
    pub image: TableImage,
}

pub fn compile(rs: &RuleSet, cfg: &HwConfig) -> Result<Compiled, CompileError> {
    cfg.validate()?;
    let (subs, plan) = split_patterns(rs, cfg)?;
    let (trie, stats) = build_trie(&subs, cfg.depth);
    let image = pack_tables(&trie, &subs, cfg)?;
    Ok(Compiled { subs, plan, trie, stats, image })
}
