//! Checks built on separated-set counts and trajectory comparisons.

use serde_json::json;

use super::{timed, CheckResult};
use crate::analysis::{entropy_estimate, greedy_separated, grid, EntropyReport};
use crate::blowup::{Atlas, LimitMapBundle};
use crate::constructions::{build_main_nds, lemma_phi, BlockProgram, LemmaParams, StageParams};
use crate::dynamics::trajectory;
use crate::error::Result;
use crate::plmap::PLMap;
use crate::rational::{half, q, Interval, Q};
use crate::symbolic::Code;

/// Horseshoe stages and iterate counts checked.
const HORSESHOE_STAGES: usize = 5;
const HORSESHOE_MAX_I: u32 = 5;

/// Points added inside every monotone piece of the last iterate.
const LAP_POINTS: u64 = 12;

/// Points of every piece of `f^iterations` on `on` sent to spread targets of `f^iterations` on `on`, and `per_piece` points
/// in each piece, so that laps thinner than the uniform spacing get candidates.
fn lap_grid(f: &PLMap, iterations: u32, on: &Interval, per_piece: u64) -> (Vec<Q>, Vec<Q>) {
    let mut g = f.clone();
    for _ in 1..iterations {
        g = f.compose(&g);
    }
    let mut cuts = vec![on.lo.clone()];
    cuts.extend(g.breakpoints().iter().filter(|b| on.lo < **b && **b < on.hi).cloned());
    cuts.push(on.hi.clone());
    // every piece of f^i maps onto `on`; these land on 9 evenly spread targets
    let centres = cuts
        .windows(2)
        .flat_map(|w| (0..9).map(move |j| Interval::new(w[0].clone(), w[1].clone()).at(&q(2 * j + 1, 18))))
        .collect();
    let points = cuts.windows(2).flat_map(|w| grid(&w[0], &w[1], per_piece + 1)).collect();
    (centres, points)
}

pub fn check_lemma_horseshoe() -> CheckResult {
    timed("4", "lemma horseshoe separated sets", || {
        let params = LemmaParams::default();
        let mut rows = Vec::new();
        let mut ok = true;
        for k in 1..=HORSESHOE_STAGES {
            let kk = params.k_interval(k)?;
            let phi = lemma_phi(k, &params)?;
            let eps = kk.len() / Q::from_integer(10.into());
            let uniform = grid(&kk.lo, &kk.hi, 3u64.pow(7));
            let prog = BlockProgram::autonomous("phi", phi.clone());
            let times: Vec<u64> = (1..=HORSESHOE_MAX_I as u64).collect();
            for i in 1..=HORSESHOE_MAX_I {
                // spread preimages first, then the grids in increasing order
                let (mut cands, mut rest) = lap_grid(&phi, i, &kk, LAP_POINTS);
                rest.extend(uniform.iter().cloned());
                rest.sort();
                rest.dedup();
                cands.extend(rest);
                let r = greedy_separated(&prog, &cands, &times, i as usize, &eps)?;
                let need = 3usize.pow(i);
                let pass = r.verified && r.cardinality >= need;
                ok &= pass;
                rows.push(json!({ "k": k, "i": i, "cardinality": r.cardinality, "required": need, "pass": pass }));
            }
        }
        let min_ratio = rows
            .iter()
            .map(|r| r["cardinality"].as_u64().unwrap() as f64 / r["required"].as_u64().unwrap() as f64)
            .fold(f64::INFINITY, f64::min);
        let summary = format!(
            "k ≤ {HORSESHOE_STAGES}, i ≤ {HORSESHOE_MAX_I}: min cardinality/3^i = {min_ratio:.3}"
        );
        Ok((ok, summary, json!({ "rows": rows })))
    })
}

/// Zero-entropy proxy for `f_D`: separated sets of `G` centres along
/// `1..=2^{D−2}` at half the smallest depth-`D` hull gap.
pub fn check_zero_entropy(depth: usize) -> CheckResult {
    timed("6", "zero-entropy proxy for f_D", || {
        let bundle = LimitMapBundle::build(Atlas::build(depth, half(), 4)?)?;
        let prog = BlockProgram::autonomous("f", bundle.f.clone());
        let cands: Vec<Q> = bundle.atlas.entries().iter().map(|e| e.g.center()).collect();
        let horizon = 1u64 << (depth - 2);
        let times: Vec<u64> = (1..=horizon).collect();
        let eps = bundle.atlas.min_hull_gap(depth) * half();
        let n_list = [horizon as usize / 4, horizon as usize / 2, horizon as usize];
        let r = entropy_estimate(&prog, &cands, &times, &[eps], &n_list)?;
        let ok = r.verified && r.headline <= 0.05;
        let summary = format!("D = {depth}, horizon {horizon}: estimate {:.6}", r.headline);
        Ok((ok, summary, serde_json::to_value(&r).expect("serializable")))
    })
}

pub const ORACLE_GRID: u64 = 4096;
pub const ORACLE_N: [usize; 5] = [6, 7, 8, 9, 10];

pub fn oracle_epsilons() -> Vec<Q> {
    vec![q(1, 8), q(1, 16)]
}

/// Entropy table of an autonomous program with the oracle settings.
pub fn tent_oracle_report(f: PLMap) -> Result<EntropyReport> {
    let prog = BlockProgram::autonomous("map", f);
    let cands = grid(&q(0, 1), &q(1, 1), ORACLE_GRID);
    let times: Vec<u64> = (1..=10).collect();
    entropy_estimate(&prog, &cands, &times, &oracle_epsilons(), &ORACLE_N)
}

pub fn check_entropy_oracle() -> CheckResult {
    timed("8", "estimator oracle: tent and identity", || {
        let tent = tent_oracle_report(PLMap::tent())?;
        let id = tent_oracle_report(PLMap::identity())?;
        let ok = tent.verified
            && id.verified
            && (0.6..=0.75).contains(&tent.headline)
            && id.headline == 0.0;
        let summary = format!(
            "tent {:.6} (log 2 = {:.6}), identity {}",
            tent.headline,
            std::f64::consts::LN_2,
            id.headline
        );
        Ok((ok, summary, json!({ "tent": tent, "identity": id })))
    })
}

fn start_points(bundle: &LimitMapBundle, max_code_depth: usize) -> Vec<(Code, Q)> {
    let rels = [q(1, 2), q(1, 5), q(7, 9), q(1, 17)];
    let mut out = Vec::new();
    for e in bundle.atlas.entries() {
        if e.code.depth() <= max_code_depth {
            for r in &rels {
                out.push((e.code.clone(), r.clone()));
            }
        }
    }
    out
}

/// Compares trajectories started at the same symbolic coordinates in atlases
/// of depth `D` and `D + 1`, step by step, while neither is flagged.
pub fn check_model_consistency(depth: usize, horizon: u64) -> CheckResult {
    timed("9", "model consistency between depths", || {
        let small = LimitMapBundle::build(Atlas::build(depth, half(), 4)?)?;
        let large = LimitMapBundle::build(Atlas::build(depth + 1, half(), 4)?)?;
        let params = StageParams::default();
        let programs = |b: &LimitMapBundle| -> Result<Vec<(&'static str, BlockProgram)>> {
            let mut limit = BlockProgram::autonomous("f", b.f.clone());
            limit.frontier = b.frontier_intervals();
            limit.exact_horizon = Some(b.exact_horizon);
            Ok(vec![("limit", limit), ("main", build_main_nds(b, &params)?)])
        };
        let (ps, pl) = (programs(&small)?, programs(&large)?);
        let mut rows = Vec::new();
        let mut ok = true;
        for ((name, a), (_, b)) in ps.iter().zip(&pl) {
            let (mut compared, mut mismatches, mut flagged_steps) = (0u64, 0u64, 0u64);
            for (code, rel) in start_points(&small, 3) {
                let xa = small.atlas.require(&code)?.at(&rel);
                let xb = large.atlas.require(&code)?.at(&rel);
                let ta = trajectory(a, &xa, horizon)?;
                let tb = trajectory(b, &xb, horizon)?;
                for t in 0..=horizon as usize {
                    if ta.flags[t] || tb.flags[t] {
                        flagged_steps += 1;
                        continue;
                    }
                    compared += 1;
                    let ca = small.atlas.symbolic_coords(&ta.values[t]);
                    let cb = large.atlas.symbolic_coords(&tb.values[t]);
                    if ca.is_none() || ca != cb {
                        mismatches += 1;
                    }
                }
            }
            ok &= mismatches == 0 && compared > 0;
            rows.push(json!({
                "program": name, "compared_steps": compared,
                "mismatches": mismatches, "flagged_steps": flagged_steps
            }));
        }
        let summary = format!(
            "D = {depth} vs {}, horizon {horizon}: {}",
            depth + 1,
            rows.iter()
                .map(|r| format!("{} {} compared / {} mismatches", r["program"].as_str().unwrap(), r["compared_steps"], r["mismatches"]))
                .collect::<Vec<_>>()
                .join(", ")
        );
        Ok((ok, summary, json!({ "rows": rows })))
    })
}
