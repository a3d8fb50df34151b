//! Separated sets along a time sequence and the entropy estimates built
//! from them.

use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::BlockProgram;
use crate::error::{NdsError, Result};
use crate::rational::{abs, ser_q, ser_qvec, to_f64, zero, Q};

/// Values of `x` at the given increasing times (time 0 is `x`).
pub fn sample_values(program: &BlockProgram, x: &Q, times: &[u64]) -> Vec<Q> {
    let mut out = Vec::with_capacity(times.len());
    let mut y = x.clone();
    let mut t = 0;
    for &target in times {
        while t < target {
            t += 1;
            y = program.map_at(t).eval_unchecked(&y);
        }
        out.push(y.clone());
    }
    out
}

fn check_times(times: &[u64], n: usize) -> Result<()> {
    if n > times.len() {
        return Err(NdsError::InvalidParam(format!(
            "n = {n} exceeds the {} given times",
            times.len()
        )));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(NdsError::InvalidParam("times must be strictly increasing".into()));
    }
    Ok(())
}

fn beyond_horizon(program: &BlockProgram, times: &[u64]) -> bool {
    match (program.exact_horizon, times.last()) {
        (Some(h), Some(&t)) => t > h,
        _ => false,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoResult {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub beyond_horizon: bool,
}

/// `max_{j<n} |f^{a_j}(x) − f^{a_j}(y)|`.
pub fn rho_na(program: &BlockProgram, x: &Q, y: &Q, times: &[u64], n: usize) -> Result<RhoResult> {
    check_times(times, n)?;
    let times = &times[..n];
    let (vx, vy) = (sample_values(program, x, times), sample_values(program, y, times));
    let value = vx.iter().zip(&vy).map(|(a, b)| abs(&(a - b))).max().unwrap_or_else(zero);
    Ok(RhoResult { value, beyond_horizon: beyond_horizon(program, times) })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub times: Vec<u64>,
    #[serde(serialize_with = "ser_q")]
    pub epsilon: Q,
    pub n: usize,
    pub candidates: usize,
    pub cardinality: usize,
    /// `log(cardinality) / n`.
    pub entropy_estimate: f64,
    #[serde(serialize_with = "ser_qvec")]
    pub witnesses: Vec<Q>,
    /// Every witness pair re-checked exactly.
    pub verified: bool,
    pub beyond_horizon: bool,
}

struct Sampled {
    exact: Vec<Q>,
    approx: Vec<f64>,
}

// Exact comparisons are only needed when the float distance is this close
// to epsilon.
const FLOAT_MARGIN: f64 = 1e-9;

fn separated(a: &Sampled, b: &Sampled, eps: &Q, eps_f: f64) -> bool {
    let mut undecided = false;
    for (x, y) in a.approx.iter().zip(&b.approx) {
        let d = (x - y).abs();
        if d > eps_f + FLOAT_MARGIN {
            return true;
        }
        if d >= eps_f - FLOAT_MARGIN {
            undecided = true;
        }
    }
    undecided && a.exact.iter().zip(&b.exact).any(|(x, y)| abs(&(x - y)) > *eps)
}

fn sample_all(program: &BlockProgram, candidates: &[Q], times: &[u64]) -> Vec<Sampled> {
    candidates
        .par_iter()
        .map(|x| {
            let exact = sample_values(program, x, times);
            let approx = exact.iter().map(to_f64).collect();
            Sampled { exact, approx }
        })
        .collect()
}

fn greedy_indices(sampled: &[Sampled], eps: &Q) -> Vec<usize> {
    let eps_f = to_f64(eps);
    let mut chosen: Vec<usize> = Vec::new();
    for (i, s) in sampled.iter().enumerate() {
        if chosen.iter().all(|&j| separated(s, &sampled[j], eps, eps_f)) {
            chosen.push(i);
        }
    }
    chosen
}

fn verify(sampled: &[Sampled], chosen: &[usize], eps: &Q) -> bool {
    chosen.par_iter().enumerate().all(|(a, &i)| {
        chosen[a + 1..].iter().all(|&j| {
            sampled[i].exact.iter().zip(&sampled[j].exact).any(|(x, y)| abs(&(x - y)) > *eps)
        })
    })
}

fn estimate(cardinality: usize, n: usize) -> f64 {
    if n == 0 || cardinality == 0 {
        0.0
    } else {
        (cardinality as f64).ln() / n as f64
    }
}

/// Greedy `(n, ε, A)`-separated subset of `candidates`, taken in order.
pub fn greedy_separated(
    program: &BlockProgram,
    candidates: &[Q],
    times: &[u64],
    n: usize,
    epsilon: &Q,
) -> Result<SeparationReport> {
    check_times(times, n)?;
    if *epsilon <= zero() {
        return Err(NdsError::InvalidParam("epsilon must be positive".into()));
    }
    let times = &times[..n];
    let sampled = sample_all(program, candidates, times);
    let chosen = greedy_indices(&sampled, epsilon);
    let verified = verify(&sampled, &chosen, epsilon);
    Ok(SeparationReport {
        times: times.to_vec(),
        epsilon: epsilon.clone(),
        n,
        candidates: candidates.len(),
        cardinality: chosen.len(),
        entropy_estimate: estimate(chosen.len(), n),
        witnesses: chosen.iter().map(|&i| candidates[i].clone()).collect(),
        verified,
        beyond_horizon: beyond_horizon(program, times),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyCell {
    #[serde(serialize_with = "ser_q")]
    pub epsilon: Q,
    pub n: usize,
    /// Largest greedy cardinality found at this or any larger epsilon.
    pub cardinality: usize,
    pub greedy_cardinality: usize,
    /// Cardinality with a single sample, same epsilon rule.
    pub base_cardinality: usize,
    /// `log(cardinality) / n`.
    pub log_card_over_n: f64,
    /// `log(cardinality / base_cardinality) / (n − 1)`, the estimate.
    pub entropy_estimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub times: Vec<u64>,
    pub candidates: usize,
    pub cells: Vec<EntropyCell>,
    /// Maximum estimate over the table; a finite-data estimate only.
    pub headline: f64,
    pub verified: bool,
    pub beyond_horizon: bool,
}

fn growth(card: usize, base: usize, n: usize) -> f64 {
    if n < 2 || card == 0 || base == 0 {
        0.0
    } else {
        ((card as f64) / (base as f64)).ln() / (n - 1) as f64
    }
}

/// Table over `epsilons × n_list` of the exponential growth rate of greedy
/// separated-set cardinalities along `times`.
///
/// A set separated at `ε` is separated at every smaller `ε`, so each cell
/// uses the best cardinality seen at its own or a larger `ε`. Dividing by
/// the one-sample cardinality removes the `log(1/ε)` offset that a bare
/// `log(card)/n` carries at finite `n`.
pub fn entropy_estimate(
    program: &BlockProgram,
    candidates: &[Q],
    times: &[u64],
    epsilons: &[Q],
    n_list: &[usize],
) -> Result<EntropyReport> {
    let max_n = n_list.iter().copied().max().unwrap_or(0).max(1);
    check_times(times, max_n)?;
    if epsilons.iter().any(|e| *e <= zero()) {
        return Err(NdsError::InvalidParam("epsilons must be positive".into()));
    }
    if n_list.contains(&0) {
        return Err(NdsError::InvalidParam("n must be positive".into()));
    }
    let mut eps_sorted = epsilons.to_vec();
    eps_sorted.sort_by(|a, b| b.cmp(a));
    eps_sorted.dedup();

    let sampled = sample_all(program, candidates, &times[..max_n]);
    let truncated = |n: usize| -> Vec<Sampled> {
        sampled
            .iter()
            .map(|s| Sampled { exact: s.exact[..n].to_vec(), approx: s.approx[..n].to_vec() })
            .collect()
    };
    // (monotone cardinality, raw greedy cardinality) per epsilon
    let table = |n: usize| -> (Vec<(usize, usize)>, bool) {
        let view = truncated(n);
        let raw: Vec<(usize, bool)> = eps_sorted
            .par_iter()
            .map(|eps| {
                let chosen = greedy_indices(&view, eps);
                (chosen.len(), verify(&view, &chosen, eps))
            })
            .collect();
        let mut best = 0;
        let mut ok = true;
        let cards = raw
            .into_iter()
            .map(|(c, v)| {
                ok &= v;
                best = best.max(c);
                (best, c)
            })
            .collect();
        (cards, ok)
    };

    let (base, mut verified) = table(1);
    let mut cells = Vec::new();
    for &n in n_list {
        let (cards, ok) = table(n);
        verified &= ok;
        for ((eps, (card, raw)), (b, _)) in eps_sorted.iter().zip(cards).zip(&base) {
            cells.push(EntropyCell {
                epsilon: eps.clone(),
                n,
                cardinality: card,
                greedy_cardinality: raw,
                base_cardinality: *b,
                log_card_over_n: estimate(card, n),
                entropy_estimate: growth(card, *b, n),
            });
        }
    }
    let headline = cells.iter().map(|c| c.entropy_estimate).fold(0.0, f64::max);
    Ok(EntropyReport {
        times: times[..max_n].to_vec(),
        candidates: candidates.len(),
        cells,
        headline,
        verified,
        beyond_horizon: beyond_horizon(program, &times[..max_n]),
    })
}

/// `lo + (hi − lo)·j/m`, `j = 0..=m`.
pub fn grid(lo: &Q, hi: &Q, m: u64) -> Vec<Q> {
    let step = (hi - lo) / Q::from_integer(m.into());
    (0..=m).map(|j| lo + &step * Q::from_integer(j.into())).collect()
}
