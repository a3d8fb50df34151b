//! Finite-horizon pair and orbit diagnostics: Li-Yorke screening, eventual
//! constancy and distality.

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::LimitMapBundle;
use crate::constructions::BlockProgram;
use crate::dynamics::trajectory;
use crate::error::{NdsError, Result};
use crate::rational::{abs, ser_q, Q};
use crate::symbolic::Code;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    LyCandidate,
    AsymptoticCandidate,
    DistalCandidate,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairVerdict {
    #[serde(serialize_with = "ser_q")]
    pub tail_min: Q,
    #[serde(serialize_with = "ser_q")]
    pub tail_max: Q,
    pub horizon: u64,
    /// First time the two orbits coincide exactly, if they do.
    pub coalesced_at: Option<u64>,
    pub classification: Classification,
}

/// Classifies `(x, y)` from the distances on `[T/2, T]`.
///
/// Orbits that meet exactly stay together forever, so a pair that has
/// coalesced by `T` is asymptotic whatever its tail window shows.
pub fn ly_classify(
    program: &BlockProgram,
    x: &Q,
    y: &Q,
    horizon: u64,
    delta: &Q,
) -> Result<PairVerdict> {
    if horizon == 0 {
        return Err(NdsError::InvalidParam("horizon must be ≥ 1".into()));
    }
    if *delta <= Q::from_integer(0.into()) {
        return Err(NdsError::InvalidParam("delta must be positive".into()));
    }
    let tx = trajectory(program, x, horizon)?;
    let ty = trajectory(program, y, horizon)?;
    let dist: Vec<Q> = tx.values.iter().zip(&ty.values).map(|(a, b)| abs(&(a - b))).collect();
    let tail = &dist[(horizon / 2) as usize..];
    let tail_min = tail.iter().min().expect("non-empty tail").clone();
    let tail_max = tail.iter().max().expect("non-empty tail").clone();
    let coalesced_at = tx.values.iter().zip(&ty.values).position(|(a, b)| a == b).map(|t| t as u64);
    let classification = if coalesced_at.is_some() || tail_max <= *delta {
        Classification::AsymptoticCandidate
    } else if tail_min >= *delta {
        Classification::DistalCandidate
    } else {
        Classification::LyCandidate
    };
    Ok(PairVerdict { tail_min, tail_max, horizon, coalesced_at, classification })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Settling {
    Settled {
        time: u64,
        #[serde(serialize_with = "ser_q")]
        value: Q,
    },
    NotSettled,
}

/// Least `t₀` with the trajectory exactly constant on `[t₀, T]`. A
/// trajectory must be constant over at least its last step to count.
pub fn eventual_constancy(program: &BlockProgram, x: &Q, horizon: u64) -> Result<Settling> {
    if horizon == 0 {
        return Err(NdsError::InvalidParam("horizon must be ≥ 1".into()));
    }
    let tr = trajectory(program, x, horizon)?;
    let last = tr.values.last().expect("non-empty");
    let run = tr.values.iter().rev().take_while(|v| *v == last).count();
    if run < 2 {
        return Ok(Settling::NotSettled);
    }
    Ok(Settling::Settled { time: (tr.values.len() - run) as u64, value: last.clone() })
}

#[derive(Clone, Debug, Serialize)]
pub struct DistalPair {
    pub a: Code,
    pub b: Code,
    pub split_depth: usize,
    #[serde(serialize_with = "ser_q")]
    pub bound: Q,
    #[serde(serialize_with = "ser_q")]
    pub min_distance: Q,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistalityReport {
    pub horizon: u64,
    pub pairs: Vec<DistalPair>,
    pub all_hold: bool,
}

/// For each pair of distinct codes, follows the left endpoints of their
/// intervals for `T` steps and compares the smallest distance with the
/// smallest gap between distinct depth-`d` cylinder hulls, `d` being the
/// depth at which the codes first differ.
pub fn distality_report(
    bundle: &LimitMapBundle,
    program: &BlockProgram,
    code_pairs: &[(Code, Code)],
    horizon: u64,
) -> Result<DistalityReport> {
    if horizon > bundle.exact_horizon {
        return Err(NdsError::Horizon { requested: horizon, horizon: bundle.exact_horizon });
    }
    let depth = bundle.atlas.depth;
    for (a, b) in code_pairs {
        if a == b {
            return Err(NdsError::InvalidParam(format!("equal codes {a}")));
        }
        for c in [a, b] {
            bundle.atlas.require(c)?;
        }
    }
    let mut codes: Vec<&Code> = code_pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    codes.sort();
    codes.dedup();
    let orbits: Vec<Vec<Q>> = codes
        .par_iter()
        .map(|c| {
            let x = &bundle.atlas.require(c).expect("checked").lo;
            trajectory(program, x, horizon).map(|t| t.values)
        })
        .collect::<Result<_>>()?;
    let orbit = |c: &Code| &orbits[codes.binary_search(&c).expect("collected")];

    let mut gap_cache: Vec<Option<Q>> = vec![None; depth + 2];
    let mut pairs = Vec::with_capacity(code_pairs.len());
    for (a, b) in code_pairs {
        let split_depth = a.split_position(b).expect("distinct codes") + 1;
        let bound = if split_depth <= depth {
            gap_cache[split_depth]
                .get_or_insert_with(|| bundle.atlas.min_hull_gap(split_depth))
                .clone()
        } else {
            return Err(NdsError::Depth { code: a.to_string(), needed: split_depth, depth });
        };
        let min_distance = orbit(a)
            .iter()
            .zip(orbit(b))
            .map(|(x, y)| abs(&(x - y)))
            .min()
            .expect("non-empty");
        let holds = min_distance >= bound;
        pairs.push(DistalPair { a: a.clone(), b: b.clone(), split_depth, bound, min_distance, holds });
    }
    let all_hold = pairs.iter().all(|p| p.holds);
    Ok(DistalityReport { horizon, pairs, all_hold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::Atlas;
    use crate::constructions::{lemma_nds, LemmaParams};
    use crate::plmap::PLMap;
    use crate::rational::{half, q};

    #[test]
    fn ly_basics() {
        let id = BlockProgram::autonomous("id", PLMap::identity());
        let v = ly_classify(&id, &q(1, 3), &q(1, 3), 10, &q(1, 100)).unwrap();
        assert_eq!(v.classification, Classification::AsymptoticCandidate);
        let v = ly_classify(&id, &q(1, 3), &q(1, 2), 10, &q(1, 100)).unwrap();
        assert_eq!(v.classification, Classification::DistalCandidate);
        assert!(v.tail_min <= v.tail_max);
    }

    #[test]
    fn settling_examples() {
        let id = BlockProgram::autonomous("id", PLMap::identity());
        assert_eq!(
            eventual_constancy(&id, &q(2, 7), 5).unwrap(),
            Settling::Settled { time: 0, value: q(2, 7) }
        );
        let p = lemma_nds(&LemmaParams::default(), 5).unwrap();
        match eventual_constancy(&p, &half(), 20).unwrap() {
            Settling::Settled { time, value } => {
                assert!(time <= 2);
                assert_eq!(value, half());
            }
            Settling::NotSettled => panic!("1/2 settles"),
        }
        let tent = BlockProgram::autonomous("tent", PLMap::tent());
        assert_eq!(eventual_constancy(&tent, &q(1, 7), 12).unwrap(), Settling::NotSettled);
    }

    #[test]
    fn distality_of_limit_map() {
        let b = LimitMapBundle::build(Atlas::build(8, half(), 4).unwrap()).unwrap();
        let p = BlockProgram::autonomous("f", b.f.clone());
        let pairs = vec![(Code::zeros(), Code::ones()), ("01|0".parse().unwrap(), "011|1".parse().unwrap())];
        let r = distality_report(&b, &p, &pairs, 64).unwrap();
        assert!(r.all_hold, "{r:?}");
        assert_eq!(r.pairs[0].split_depth, 1);
        assert!(distality_report(&b, &p, &[(Code::zeros(), Code::zeros())], 8).is_err());
        assert!(distality_report(&b, &p, &pairs, 1000).is_err());
    }
}
