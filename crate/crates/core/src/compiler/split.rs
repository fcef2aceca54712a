use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{CompileError, HwConfig};
use crate::rulespec::{Pattern, PatternId, RuleSet, WildByte};

pub type SubId = u32;

/// One table-sized piece of a pattern: a literal Phase-1 prefix and a
/// wildcard-capable Phase-2 suffix. Identical pieces are shared, so `origins`
/// lists every `(pattern, chain index)` the piece stands for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubPattern {
    pub id: SubId,
    pub prefix: Vec<u8>,
    pub suffix: Vec<WildByte>,
    pub origins: Vec<(PatternId, usize)>,
}

impl SubPattern {
    pub fn total_len(&self) -> usize {
        self.prefix.len() + self.suffix.len()
    }

    pub fn bytes(&self) -> Vec<WildByte> {
        self.prefix
            .iter()
            .map(|&b| WildByte::Literal(b))
            .chain(self.suffix.iter().copied())
            .collect()
    }

    pub fn as_pattern(&self) -> Pattern {
        Pattern { id: self.id, bytes: self.bytes() }
    }
}

/// Sub-pattern sequence of each pattern; consecutive elements must be
/// adjacent (gap exactly 0).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPlan {
    pub chains: BTreeMap<PatternId, Vec<SubId>>,
}

/// Cuts every pattern into `depth + width` sized elements. Element prefixes
/// must be literal because Phase-1 is exact-match only.
pub fn split_patterns(rs: &RuleSet, cfg: &HwConfig) -> Result<(Vec<SubPattern>, ChainPlan), CompileError> {
    let d = cfg.depth;
    let elem = cfg.element_len();
    let mut subs: Vec<SubPattern> = Vec::new();
    let mut index: HashMap<Vec<WildByte>, SubId> = HashMap::new();
    let mut plan = ChainPlan::default();

    for p in rs.patterns.values() {
        let mut chain = Vec::new();
        for (ci, chunk) in p.bytes.chunks(elem).enumerate() {
            let cut = d.min(chunk.len());
            let mut prefix = Vec::with_capacity(cut);
            for (i, b) in chunk[..cut].iter().enumerate() {
                match b {
                    WildByte::Literal(v) => prefix.push(*v),
                    WildByte::Any => {
                        return Err(CompileError::WildcardInPrefix { pattern: p.id, position: ci * elem + i })
                    }
                }
            }
            let id = match index.get(chunk) {
                Some(&id) => id,
                None => {
                    let id = subs.len() as SubId;
                    index.insert(chunk.to_vec(), id);
                    subs.push(SubPattern { id, prefix, suffix: chunk[cut..].to_vec(), origins: Vec::new() });
                    id
                }
            };
            subs[id as usize].origins.push((p.id, ci));
            chain.push(id);
        }
        plan.chains.insert(p.id, chain);
    }
    Ok((subs, plan))
}
