//! Pointwise iteration of block programs.

use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::BlockProgram;
use crate::error::{NdsError, Result};
use crate::plmap::PLMap;
use crate::rational::{fmt_q, one, ser_q, ser_qvec, zero, Q};

pub fn map_at(program: &BlockProgram, t: u64) -> &PLMap {
    program.map_at(t)
}

fn check_point(x: &Q) -> Result<()> {
    if *x < zero() || *x > one() {
        return Err(NdsError::Domain(fmt_q(x)));
    }
    Ok(())
}

/// `f_{i+n−1} ∘ … ∘ f_i (x)`.
pub fn iterate_from(program: &BlockProgram, i: u64, x: &Q, n: u64) -> Result<Q> {
    if i == 0 {
        return Err(NdsError::InvalidParam("times start at 1".into()));
    }
    check_point(x)?;
    let mut y = x.clone();
    for t in i..i + n {
        y = program.map_at(t).eval_unchecked(&y);
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    #[serde(serialize_with = "ser_q")]
    pub start: Q,
    #[serde(serialize_with = "ser_qvec")]
    pub values: Vec<Q>,
    /// `flags[t]` is set once any input up to time `t` lay in a frontier
    /// interval or the step count passed the exact horizon.
    pub flags: Vec<bool>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flagged(&self) -> bool {
        self.flags.last().copied().unwrap_or(false)
    }

    /// `(t, numerator, denominator, flag)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (usize, String, String, bool)> + '_ {
        self.values
            .iter()
            .zip(&self.flags)
            .enumerate()
            .map(|(t, (v, f))| (t, v.numer().to_string(), v.denom().to_string(), *f))
    }
}

pub fn trajectory(program: &BlockProgram, x: &Q, steps: u64) -> Result<Trajectory> {
    check_point(x)?;
    let mut values = Vec::with_capacity(steps as usize + 1);
    let mut flags = Vec::with_capacity(steps as usize + 1);
    values.push(x.clone());
    flags.push(false);
    let mut flagged = false;
    for t in 1..=steps {
        let prev = &values[values.len() - 1];
        flagged = flagged
            || program.frontier.iter().any(|iv| iv.contains(prev))
            || program.exact_horizon.is_some_and(|h| t > h);
        let next = program.map_at(t).eval_unchecked(prev);
        values.push(next);
        flags.push(flagged);
    }
    Ok(Trajectory { start: x.clone(), values, flags })
}

/// Trajectories of many starting points, in input order.
pub fn trajectories(program: &BlockProgram, xs: &[Q], steps: u64) -> Result<Vec<Trajectory>> {
    xs.par_iter().map(|x| trajectory(program, x, steps)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{lemma_nds, LemmaParams};
    use crate::rational::{half, q};

    #[test]
    fn lemma_examples() {
        let p = lemma_nds(&LemmaParams::default(), 5).unwrap();
        assert_eq!(map_at(&p, 1), &crate::constructions::lemma_phi(1, &LemmaParams::default()).unwrap());
        let tr = trajectory(&p, &half(), 3).unwrap();
        assert_eq!(&tr.values[2..], &[half(), half()]);
        let zero_tr = trajectory(&p, &zero(), 30).unwrap();
        assert!(zero_tr.values.iter().all(|v| *v == zero()));
        assert!(!zero_tr.flagged());
    }

    #[test]
    fn iterate_composes() {
        let p = lemma_nds(&LemmaParams::default(), 5).unwrap();
        let x = q(3, 7);
        assert_eq!(iterate_from(&p, 1, &x, 0).unwrap(), x);
        assert_eq!(iterate_from(&p, 4, &x, 1).unwrap(), p.map_at(4).eval(&x).unwrap());
        for m in 0..8 {
            let mid = iterate_from(&p, 1, &x, m).unwrap();
            assert_eq!(
                iterate_from(&p, 1, &x, m + 6).unwrap(),
                iterate_from(&p, 1 + m, &mid, 6).unwrap()
            );
        }
        assert!(iterate_from(&p, 1, &q(3, 2), 1).is_err());
        assert!(iterate_from(&p, 0, &x, 1).is_err());
    }

    #[test]
    fn csv_rows() {
        let p = BlockProgram::autonomous("tent", PLMap::tent());
        let tr = trajectory(&p, &q(1, 3), 2).unwrap();
        let rows: Vec<_> = tr.rows().collect();
        assert_eq!(rows[1], (1, "2".to_string(), "3".to_string(), false));
        assert_eq!(rows[2].1, "2");
    }
}
