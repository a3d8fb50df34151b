//! Sampling time sequences for the main family.

use super::main_family::StageParams;
use crate::error::{NdsError, Result};

/// `r_m = q_i − 1 + m·2^{k_i}`, `m = 1..=m_max`.
pub fn times_r(params: &StageParams, i: usize, m_max: u64) -> Result<Vec<u64>> {
    let (q, period) = (params.q(i)? as u64, params.period(i)?);
    Ok((1..=m_max).map(|m| q - 1 + m * period).collect())
}

/// `s_1 < s_2 < …`: for stage `n`, `s_{ã_{n−1}+k} = s_{ã_{n−1}} + q_n − 1 +
/// k·2^{k_n}`, `1 ≤ k ≤ a_n`, with `s_0 = 0` and `ã_n = a_1 + … + a_n`.
pub fn times_s(params: &StageParams, count: usize) -> Result<Vec<u64>> {
    let total: u64 = params.stages.iter().map(|s| s.a).sum();
    if count as u64 > total {
        return Err(NdsError::InvalidParam(format!(
            "requested {count} times but the stages provide {total}"
        )));
    }
    let mut out = Vec::with_capacity(count);
    let mut base = 0;
    for n in 1..=params.num_stages() {
        let (q, period) = (params.q(n)? as u64, params.period(n)?);
        let mut last = base;
        for k in 1..=params.a(n)? {
            if out.len() == count {
                return Ok(out);
            }
            last = base + q - 1 + k * period;
            out.push(last);
        }
        base = last;
    }
    Ok(out)
}

/// `T_n = b_1 + … + b_n`, the time at which block `n` ends.
pub fn block_end(params: &StageParams, n: usize) -> Result<u64> {
    (1..=n).map(|i| params.block_len(i)).sum()
}

/// Times at which the part of `K^n_{p_n}` present at the start of block `n`
/// has just been folded and sits in `K^n_0`: `T_{n−1} + q_n + (m−1)·2^{k_n}`,
/// `m = 1..=a_n`.
pub fn perturbation_times(params: &StageParams, n: usize) -> Result<Vec<u64>> {
    let start = block_end(params, n - 1)?;
    let (q, period) = (params.q(n)? as u64, params.period(n)?);
    Ok((1..=params.a(n)?).map(|m| start + q + (m - 1) * period).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::main_family::StageSpec;
    use crate::symbolic::Block;

    #[test]
    fn r_examples() {
        let p = StageParams::default();
        assert_eq!(times_r(&p, 1, 4).unwrap(), vec![2, 4, 6, 8]);
        assert_eq!(times_r(&p, 2, 2).unwrap(), vec![4, 8]);
        let r = times_r(&p, 3, 6).unwrap();
        assert!(r.windows(2).all(|w| w[1] - w[0] == 8));
    }

    #[test]
    fn s_examples() {
        let p = StageParams::default();
        assert_eq!(times_s(&p, 3).unwrap(), vec![2, 4, 6]);
        let s = times_s(&p, 15).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(&s[3..8], &[10, 14, 18, 22, 26]);
        assert!(times_s(&p, 16).is_err());
    }

    #[test]
    fn s_with_nontrivial_q() {
        let p = StageParams {
            stages: vec![StageSpec { block: "01".parse::<Block>().unwrap(), a: 2 }],
            relative_widths: None,
        };
        // p = 2, q = 2
        assert_eq!(times_s(&p, 2).unwrap(), vec![5, 9]);
    }

    #[test]
    fn perturbation_examples() {
        let p = StageParams::default();
        assert_eq!(perturbation_times(&p, 1).unwrap(), vec![1, 3, 5]);
        assert_eq!(perturbation_times(&p, 2).unwrap(), vec![8, 12, 16, 20, 24]);
        assert_eq!(block_end(&p, 3).unwrap(), 7 + 21 + 57);
    }
}
