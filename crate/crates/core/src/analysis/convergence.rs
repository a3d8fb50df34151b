//! Per-stage distance of a program from a limit map.

use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::BlockProgram;
use crate::plmap::PLMap;
use crate::rational::{ser_q, Q};

#[derive(Clone, Debug, Serialize)]
pub struct StageEnvelope {
    pub stage: usize,
    /// `max` over the maps of the stage of `sup |map − limit|`.
    #[serde(serialize_with = "ser_q")]
    pub envelope: Q,
    #[serde(serialize_with = "ser_opt_q")]
    pub bound: Option<Q>,
    pub within_bound: bool,
}

fn ser_opt_q<S: serde::Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_q(x, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub stages: Vec<StageEnvelope>,
    pub strictly_decreasing: bool,
    pub all_within_bound: bool,
}

/// `bounds[n]`, when given, is the allowed envelope of stage `n`.
pub fn convergence_report(
    program: &BlockProgram,
    limit: &PLMap,
    bounds: Option<&[Q]>,
) -> ConvergenceReport {
    let distances: Vec<Q> = program.maps().par_iter().map(|m| m.sup_distance(limit)).collect();
    let stages: Vec<StageEnvelope> = program
        .stages()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let envelope = s
                .body
                .iter()
                .chain(&s.coda)
                .map(|r| &distances[r.map])
                .max()
                .expect("stages are non-empty")
                .clone();
            let bound = bounds.and_then(|b| b.get(i)).cloned();
            let within_bound = bound.as_ref().is_none_or(|b| envelope <= *b);
            StageEnvelope { stage: i + 1, envelope, bound, within_bound }
        })
        .collect();
    let strictly_decreasing = stages.windows(2).all(|w| w[1].envelope < w[0].envelope);
    let all_within_bound = stages.iter().all(|s| s.within_bound);
    ConvergenceReport { stages, strictly_decreasing, all_within_bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{Run, Stage, TailPolicy};
    use crate::rational::zero;

    #[test]
    fn autonomous_limit_is_zero() {
        let maps = vec![("t".to_string(), PLMap::tent())];
        let stage = Stage { body: vec![Run { map: 0, len: 2 }], reps: 1, coda: vec![] };
        let p = BlockProgram::new(maps, vec![stage.clone(), stage], TailPolicy::Repeat(0)).unwrap();
        let r = convergence_report(&p, &PLMap::tent(), None);
        assert!(r.stages.iter().all(|s| s.envelope == zero()));
        assert!(!r.strictly_decreasing);
        assert!(r.all_within_bound);
    }
}
