//! Time-indexed map sequences with block structure.

use serde::{Deserialize, Serialize};

use crate::error::{NdsError, Result};
use crate::plmap::PLMap;
use crate::rational::Interval;

/// `len` consecutive copies of map number `map`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub map: usize,
    pub len: u64,
}

/// `reps` copies of `body` followed by `coda`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub body: Vec<Run>,
    pub reps: u64,
    pub coda: Vec<Run>,
}

impl Stage {
    fn runs_len(runs: &[Run]) -> u64 {
        runs.iter().map(|r| r.len).sum()
    }

    pub fn body_len(&self) -> u64 {
        Stage::runs_len(&self.body)
    }

    pub fn len(&self) -> u64 {
        self.reps * self.body_len() + Stage::runs_len(&self.coda)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn map_at(&self, offset: u64) -> usize {
        let body = self.body_len() * self.reps;
        if offset < body {
            run_at(&self.body, offset % self.body_len())
        } else {
            run_at(&self.coda, offset - body)
        }
    }
}

fn run_at(runs: &[Run], mut offset: u64) -> usize {
    for r in runs {
        if offset < r.len {
            return r.map;
        }
        offset -= r.len;
    }
    unreachable!("offset inside runs")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    Repeat(usize),
    Cycle(Vec<Run>),
}

#[derive(Clone, Debug)]
pub struct BlockProgram {
    maps: Vec<PLMap>,
    labels: Vec<String>,
    stages: Vec<Stage>,
    tail: TailPolicy,
    // ends[i] = time of the last map of stage i
    ends: Vec<u64>,
    /// Points whose next step leaves the exactly modelled region.
    pub frontier: Vec<Interval>,
    /// Steps for which the underlying finite model is exact, if bounded.
    pub exact_horizon: Option<u64>,
}

/// Layout without the map data, for reports and program files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ProgramLayout {
    pub labels: Vec<String>,
    pub stages: Vec<Stage>,
    pub stage_lengths: Vec<u64>,
    pub tail: TailPolicy,
    pub exact_horizon: Option<u64>,
}

impl BlockProgram {
    pub fn new(
        maps: Vec<(String, PLMap)>,
        stages: Vec<Stage>,
        tail: TailPolicy,
    ) -> Result<BlockProgram> {
        let n = maps.len();
        let check = |runs: &[Run]| -> Result<()> {
            if runs.iter().any(|r| r.map >= n) {
                return Err(NdsError::InvalidParam("run refers to a missing map".into()));
            }
            Ok(())
        };
        for s in &stages {
            check(&s.body)?;
            check(&s.coda)?;
            if s.is_empty() || (s.reps > 0 && s.body_len() == 0) {
                return Err(NdsError::InvalidParam("empty stage".into()));
            }
        }
        match &tail {
            TailPolicy::Repeat(m) => check(&[Run { map: *m, len: 1 }])?,
            TailPolicy::Cycle(runs) => {
                check(runs)?;
                if Stage::runs_len(runs) == 0 {
                    return Err(NdsError::InvalidParam("empty tail cycle".into()));
                }
            }
        }
        let mut ends = Vec::with_capacity(stages.len());
        let mut total = 0;
        for s in &stages {
            total += s.len();
            ends.push(total);
        }
        let (labels, maps) = maps.into_iter().unzip();
        Ok(BlockProgram { maps, labels, stages, tail, ends, frontier: Vec::new(), exact_horizon: None })
    }

    /// The constant sequence `f, f, f, …`.
    pub fn autonomous(label: &str, f: PLMap) -> BlockProgram {
        BlockProgram::new(vec![(label.to_string(), f)], Vec::new(), TailPolicy::Repeat(0))
            .expect("valid autonomous program")
    }

    pub fn maps(&self) -> &[PLMap] {
        &self.maps
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn tail(&self) -> &TailPolicy {
        &self.tail
    }

    /// Total length of the staged part; the tail starts right after it.
    pub fn staged_len(&self) -> u64 {
        self.ends.last().copied().unwrap_or(0)
    }

    /// Times `start..=end` covered by stage `i` (0-based).
    pub fn stage_span(&self, i: usize) -> (u64, u64) {
        let start = if i == 0 { 1 } else { self.ends[i - 1] + 1 };
        (start, self.ends[i])
    }

    /// 0-based stage containing time `t`, or `None` in the tail.
    pub fn stage_of(&self, t: u64) -> Option<usize> {
        let i = self.ends.partition_point(|&e| e < t);
        (i < self.ends.len()).then_some(i)
    }

    /// Index of the map applied at time `t ≥ 1`.
    pub fn map_index_at(&self, t: u64) -> usize {
        assert!(t >= 1, "times start at 1");
        match self.stage_of(t) {
            Some(i) => {
                let (start, _) = self.stage_span(i);
                self.stages[i].map_at(t - start)
            }
            None => {
                let offset = t - self.staged_len() - 1;
                match &self.tail {
                    TailPolicy::Repeat(m) => *m,
                    TailPolicy::Cycle(runs) => run_at(runs, offset % Stage::runs_len(runs)),
                }
            }
        }
    }

    pub fn map_at(&self, t: u64) -> &PLMap {
        &self.maps[self.map_index_at(t)]
    }

    pub fn label_at(&self, t: u64) -> &str {
        &self.labels[self.map_index_at(t)]
    }

    pub fn layout(&self) -> ProgramLayout {
        ProgramLayout {
            labels: self.labels.clone(),
            stages: self.stages.clone(),
            stage_lengths: self.stages.iter().map(Stage::len).collect(),
            tail: self.tail.clone(),
            exact_horizon: self.exact_horizon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog() -> BlockProgram {
        let maps = vec![
            ("a".to_string(), PLMap::identity()),
            ("b".to_string(), PLMap::tent()),
            ("c".to_string(), PLMap::identity()),
        ];
        let stages = vec![
            Stage { body: vec![Run { map: 0, len: 1 }, Run { map: 1, len: 2 }], reps: 2, coda: vec![Run { map: 2, len: 1 }] },
            Stage { body: vec![Run { map: 1, len: 1 }], reps: 3, coda: vec![] },
        ];
        BlockProgram::new(maps, stages, TailPolicy::Cycle(vec![Run { map: 0, len: 1 }, Run { map: 2, len: 1 }]))
            .unwrap()
    }

    #[test]
    fn indexing() {
        let p = prog();
        let labels: String = (1..=14).map(|t| p.label_at(t)).collect();
        assert_eq!(labels, "abbabbcbbbacac");
        assert_eq!(p.stage_span(1), (8, 10));
        assert_eq!(p.stage_of(7), Some(0));
        assert_eq!(p.stage_of(11), None);
    }

    #[test]
    fn rejects_dangling_runs() {
        let r = BlockProgram::new(vec![], vec![], TailPolicy::Repeat(0));
        assert!(r.is_err());
    }
}
