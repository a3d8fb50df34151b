//! The non-uniform family: three-lap horseshoes on nested intervals `K_n`,
//! each followed by a collapse `ψ_n`.

use serde::{Deserialize, Serialize};

use super::program::{BlockProgram, Run, Stage, TailPolicy};
use crate::error::{NdsError, Result};
use crate::plmap::{from_points, PLMap};
use crate::rational::{de_qvec, half, one, q, ser_qvec, zero, Interval, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ASequence {
    /// `a_n = 1/(n+2)`.
    Harmonic,
    /// `a_1, a_2, …` given explicitly.
    Explicit {
        #[serde(serialize_with = "ser_qvec", deserialize_with = "de_qvec")]
        values: Vec<Q>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ISequence {
    /// `i_k = k`.
    Linear,
    Explicit { values: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub a_sequence: ASequence,
    pub i_sequence: ISequence,
}

impl Default for LemmaParams {
    fn default() -> Self {
        LemmaParams { a_sequence: ASequence::Harmonic, i_sequence: ISequence::Linear }
    }
}

impl LemmaParams {
    /// `a_n` for `n ≥ 0`; `a_0 = 1/2`.
    pub fn a(&self, n: usize) -> Result<Q> {
        if n == 0 {
            return Ok(half());
        }
        match &self.a_sequence {
            ASequence::Harmonic => Ok(q(1, n as i64 + 2)),
            ASequence::Explicit { values } => values.get(n - 1).cloned().ok_or_else(|| {
                NdsError::InvalidParam(format!("a_{n} not given"))
            }),
        }
    }

    pub fn b(&self, n: usize) -> Result<Q> {
        Ok(one() - self.a(n)?)
    }

    pub fn i(&self, k: usize) -> Result<u64> {
        match &self.i_sequence {
            ISequence::Linear => Ok(k as u64),
            ISequence::Explicit { values } => values.get(k - 1).copied().ok_or_else(|| {
                NdsError::InvalidParam(format!("i_{k} not given"))
            }),
        }
    }

    /// `K_n = [a_n, 1 − a_n]`.
    pub fn k_interval(&self, n: usize) -> Result<Interval> {
        Ok(Interval::new(self.a(n)?, self.b(n)?))
    }

    /// Checks `a_1 = 1/3`, strict decrease, positivity and `i_k ≥ 1` for
    /// the first `stages` stages (plus one extra `a` for the last `ψ`).
    pub fn validate(&self, stages: usize) -> Result<()> {
        if self.a(1)? != q(1, 3) {
            return Err(NdsError::InvalidParam("a_1 must equal 1/3".into()));
        }
        for n in 1..=stages {
            let (an, next) = (self.a(n)?, self.a(n + 1)?);
            if next >= an || next <= zero() {
                return Err(NdsError::InvalidParam(
                    "a_n must be positive and strictly decreasing".into(),
                ));
            }
            if self.i(n)? == 0 {
                return Err(NdsError::InvalidParam("i_k must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Three laps on `K_n`, identity outside.
pub fn lemma_phi(n: usize, params: &LemmaParams) -> Result<PLMap> {
    if n == 0 {
        return Err(NdsError::InvalidParam("φ_n needs n ≥ 1".into()));
    }
    if n == 1 {
        // fourth piece is 3x − 4/3; continuity forces it
        return from_points(&[
            (zero(), zero()),
            (q(1, 3), q(1, 3)),
            (q(4, 9), q(2, 3)),
            (q(5, 9), q(1, 3)),
            (q(2, 3), q(2, 3)),
            (one(), one()),
        ]);
    }
    let (an, bn) = (params.a(n)?, params.b(n)?);
    let (ap, bp) = (params.a(n - 1)?, params.b(n - 1)?);
    from_points(&[
        (zero(), zero()),
        (an.clone(), an.clone()),
        (ap, bn.clone()),
        (bp, an),
        (bn.clone(), bn),
        (one(), one()),
    ])
}

/// Constant `1/2` on `K_n`, identity outside `K_{n+1}`.
pub fn lemma_psi(n: usize, params: &LemmaParams) -> Result<PLMap> {
    if n == 0 {
        return Err(NdsError::InvalidParam("ψ_n needs n ≥ 1".into()));
    }
    let (an, bn) = (params.a(n)?, params.b(n)?);
    let (a1, b1) = (params.a(n + 1)?, params.b(n + 1)?);
    from_points(&[
        (zero(), zero()),
        (a1.clone(), a1),
        (an, half()),
        (bn, half()),
        (b1.clone(), b1),
        (one(), one()),
    ])
}

/// Blocks `B_k = φ_k (i_k times), ψ_k` for `k = 1..=num_stages`, then `ψ`
/// of the last stage forever.
pub fn lemma_nds(params: &LemmaParams, num_stages: usize) -> Result<BlockProgram> {
    if num_stages == 0 {
        return Err(NdsError::InvalidParam("need at least one stage".into()));
    }
    params.validate(num_stages)?;
    let mut maps = Vec::with_capacity(2 * num_stages);
    let mut stages = Vec::with_capacity(num_stages);
    for k in 1..=num_stages {
        maps.push((format!("phi_{k}"), lemma_phi(k, params)?));
        maps.push((format!("psi_{k}"), lemma_psi(k, params)?));
        stages.push(Stage {
            body: vec![Run { map: 2 * k - 2, len: params.i(k)? }],
            reps: 1,
            coda: vec![Run { map: 2 * k - 1, len: 1 }],
        });
    }
    BlockProgram::new(maps, stages, TailPolicy::Repeat(2 * num_stages - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn p() -> LemmaParams {
        LemmaParams::default()
    }

    fn ev(f: &PLMap, x: Q) -> Q {
        f.eval(&x).unwrap()
    }

    #[test]
    fn phi_one_values() {
        let f = lemma_phi(1, &p()).unwrap();
        assert_eq!(ev(&f, q(1, 3)), q(1, 3));
        assert_eq!(ev(&f, q(4, 9)), q(2, 3));
        assert_eq!(ev(&f, q(5, 9)), q(1, 3));
        assert_eq!(ev(&f, q(2, 3)), q(2, 3));
        // pieces 3x − 2/3 and 3x − 4/3
        assert_eq!(ev(&f, q(2, 5)), qi(3) * q(2, 5) - q(2, 3));
        assert_eq!(ev(&f, q(3, 5)), qi(3) * q(3, 5) - q(4, 3));
    }

    #[test]
    fn phi_three_laps_onto_k() {
        for n in 1..=6 {
            let f = lemma_phi(n, &p()).unwrap();
            let k = p().k_interval(n).unwrap();
            assert_eq!(f.image(&k), k);
            assert_eq!(f.lap_count_on(&k), 3);
            assert_eq!(ev(&f, q(1, 100)), q(1, 100));
            assert!(f.is_surjective());
        }
    }

    #[test]
    fn psi_examples() {
        for n in 1..=6 {
            let f = lemma_psi(n, &p()).unwrap();
            assert_eq!(ev(&f, half()), half());
            assert_eq!(ev(&f, p().a(n).unwrap()), half());
            assert_eq!(ev(&f, zero()), zero());
            assert!(f.is_surjective());
        }
        assert!(lemma_psi(0, &p()).is_err());
        assert!(lemma_phi(0, &p()).is_err());
    }

    #[test]
    fn block_layout() {
        let prog = lemma_nds(&p(), 5).unwrap();
        assert_eq!(prog.label_at(1), "phi_1");
        assert_eq!(prog.label_at(2), "psi_1");
        assert_eq!(prog.label_at(3), "phi_2");
        assert_eq!(prog.staged_len(), 20);
        assert_eq!(prog.label_at(21), "psi_5");
    }

    #[test]
    fn rejects_bad_sequences() {
        let bad = LemmaParams {
            a_sequence: ASequence::Explicit { values: vec![q(1, 3), q(1, 2)] },
            i_sequence: ISequence::Linear,
        };
        assert!(lemma_nds(&bad, 1).is_err());
        let bad_first = LemmaParams {
            a_sequence: ASequence::Explicit { values: vec![q(1, 4), q(1, 5)] },
            i_sequence: ISequence::Linear,
        };
        assert!(lemma_nds(&bad_first, 1).is_err());
    }
}
