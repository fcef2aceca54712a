use serde::{Deserialize, Serialize};

use super::CompileError;

/// PEs serving one pipeline stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageAssignment {
    pub stage: usize,
    pub pes: Vec<usize>,
}

/// Array dimensions and pipeline shape.
///
/// Stage 1 is the direct-indexed table and owns no PE; stages `2..=depth`
/// each own a disjoint set of PEs. `stages == None` lets the packer derive an
/// assignment from the ruleset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HwConfig {
    pub depth: usize,
    pub n_pes: usize,
    pub pe_rows: usize,
    pub n_banks: usize,
    pub bank_rows: usize,
    pub width: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageAssignment>>,
}

impl Default for HwConfig {
    fn default() -> Self {
        HwConfig { depth: 4, n_pes: 8, pe_rows: 64, n_banks: 4, bank_rows: 64, width: 20, stages: None }
    }
}

/// Address bits needed to index `n` items.
pub fn bits_for(n: usize) -> u32 {
    if n <= 1 {
        1
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

impl HwConfig {
    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self.stages = None;
        self
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        let bad = |m: String| Err(CompileError::Config(m));
        if self.depth < 2 {
            return bad(format!("depth must be at least 2, got {}", self.depth));
        }
        if self.pe_rows == 0 || self.bank_rows == 0 || self.width == 0 || self.n_banks == 0 {
            return bad("array dimensions must be positive".into());
        }
        if self.n_pes < self.depth - 1 {
            return bad(format!("{} PEs cannot cover {} pipelined stages", self.n_pes, self.depth - 1));
        }
        if let Some(stages) = &self.stages {
            let mut used = vec![false; self.n_pes];
            let mut covered = vec![false; self.depth + 1];
            for s in stages {
                if s.stage < 2 || s.stage > self.depth {
                    return bad(format!("stage {} outside 2..={}", s.stage, self.depth));
                }
                if covered[s.stage] {
                    return bad(format!("stage {} assigned twice", s.stage));
                }
                covered[s.stage] = true;
                if s.pes.is_empty() {
                    return bad(format!("stage {} has no PEs", s.stage));
                }
                for &pe in &s.pes {
                    if pe >= self.n_pes {
                        return bad(format!("PE {pe} does not exist"));
                    }
                    if std::mem::replace(&mut used[pe], true) {
                        return bad(format!("PE {pe} assigned to more than one stage"));
                    }
                }
            }
            if let Some(missing) = (2..=self.depth).find(|&d| !covered[d]) {
                return bad(format!("stage {missing} has no PEs"));
            }
        }
        Ok(())
    }

    /// PEs of `stage` in id order (empty when unresolved).
    pub fn stage_pes(&self, stage: usize) -> &[usize] {
        self.stages
            .as_deref()
            .and_then(|s| s.iter().find(|a| a.stage == stage))
            .map_or(&[], |a| a.pes.as_slice())
    }

    /// Stage owning `pe`, if any.
    pub fn stage_of_pe(&self, pe: usize) -> Option<usize> {
        self.stages.as_deref()?.iter().find(|a| a.pes.contains(&pe)).map(|a| a.stage)
    }

    /// Width of the longest sub-pattern a single table entry can hold.
    pub fn element_len(&self) -> usize {
        self.depth + self.width
    }

    /// Sub-pattern id field width. Sized to the largest number of distinct
    /// reportable sub-patterns the arrays can hold.
    pub fn sub_id_bits(&self) -> u32 {
        bits_for(self.n_pes * self.pe_rows + self.n_banks * self.bank_rows + 256)
    }

    /// Bits of one `{next range}` SRAM word: route kind (2), target id,
    /// UP and DN, terminal flag and terminal id.
    pub fn next_range_bits(&self) -> u32 {
        let target = bits_for(self.n_pes.max(self.n_banks));
        let row = bits_for(self.pe_rows.max(self.bank_rows));
        2 + target + 2 * row + 1 + self.sub_id_bits()
    }

    /// Bits of one Phase-2 SRAM word: sub-pattern id and suffix length.
    pub fn phase2_payload_bits(&self) -> u32 {
        self.sub_id_bits() + bits_for(self.width + 1)
    }
}

/// Parses `"2:0-2,3:3-5,4:6-7"`: stage, colon, comma-free list of PE ids or
/// inclusive ranges separated by `+` (e.g. `2:0-1+4`).
pub fn parse_stage_spec(spec: &str) -> Result<Vec<StageAssignment>, CompileError> {
    let bad = || CompileError::Config(format!("malformed stage spec `{spec}`"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (stage, pes) = part.split_once(':').ok_or_else(bad)?;
        let stage: usize = stage.trim().parse().map_err(|_| bad())?;
        let mut list = Vec::new();
        for item in pes.split('+') {
            let item = item.trim();
            if let Some((a, b)) = item.split_once('-') {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                list.extend(a..=b);
            } else {
                list.push(item.parse().map_err(|_| bad())?);
            }
        }
        out.push(StageAssignment { stage, pes: list });
    }
    out.sort_by_key(|s| s.stage);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dimensions() {
        let c = HwConfig::default();
        assert_eq!((c.depth, c.n_pes, c.pe_rows, c.n_banks, c.bank_rows, c.width), (4, 8, 64, 4, 64, 20));
        assert_eq!(c.width * 11, 220);
        c.validate().unwrap();
    }

    #[test]
    fn stage_spec() {
        let s = parse_stage_spec("2:0-2,3:3-5,4:6-7").unwrap();
        assert_eq!(s[0], StageAssignment { stage: 2, pes: vec![0, 1, 2] });
        assert_eq!(s[2].pes, vec![6, 7]);
        let c = HwConfig { stages: Some(s), ..HwConfig::default() };
        c.validate().unwrap();
        assert_eq!(c.stage_of_pe(4), Some(3));
        assert!(parse_stage_spec("2-0").is_err());
        assert_eq!(parse_stage_spec("2:0-1+4").unwrap()[0].pes, vec![0, 1, 4]);
    }

    #[test]
    fn rejects_bad_assignments() {
        let mk = |spec: &str| HwConfig { stages: Some(parse_stage_spec(spec).unwrap()), ..HwConfig::default() };
        assert!(mk("2:0-2,3:2-5,4:6-7").validate().is_err());
        assert!(mk("2:0-2,3:3-5").validate().is_err());
        assert!(mk("2:0-2,3:3-5,4:6-8").validate().is_err());
        assert!(mk("1:0,2:1,3:2,4:3").validate().is_err());
        assert!(HwConfig::default().with_depth(1).validate().is_err());
    }

    #[test]
    fn sram_widths() {
        let c = HwConfig::default();
        assert_eq!(c.sub_id_bits(), 10);
        assert_eq!(c.next_range_bits(), 2 + 3 + 12 + 1 + 10);
        assert_eq!(c.phase2_payload_bits(), 15);
    }
}
