//! Checks on the main construction at the default stages.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde_json::json;

use super::{timed, CheckResult};
use crate::analysis::{
    convergence_report, distality_report, entropy_estimate, eventual_constancy, greedy_separated,
    grid, ly_classify, Classification, Settling,
};
use crate::blowup::{Atlas, LimitMapBundle};
use crate::constructions::{
    block_end, build_k_interval, build_main_nds, epsilon0, perturbation_times, stage_hull,
    times_s, BlockProgram, StageParams,
};
use crate::dynamics::trajectory;
use crate::error::{NdsError, Result};
use crate::rational::{half, Interval, Q};
use crate::symbolic::Code;

pub struct MainContext {
    pub bundle: LimitMapBundle,
    pub params: StageParams,
    pub program: BlockProgram,
    pub eps0: Q,
}

impl MainContext {
    /// Default stages on the default atlas of the given depth.
    pub fn build(depth: usize) -> Result<MainContext> {
        let bundle = LimitMapBundle::build(Atlas::build(depth, half(), 4)?)?;
        MainContext::new(bundle, StageParams::default())
    }

    pub fn new(bundle: LimitMapBundle, params: StageParams) -> Result<MainContext> {
        let program = build_main_nds(&bundle, &params)?;
        let eps0 = epsilon0(&bundle)?;
        Ok(MainContext { bundle, params, program, eps0 })
    }

    /// Steps covering every staged block.
    pub fn staged_horizon(&self) -> u64 {
        self.program.staged_len()
    }

    /// `2^{D−2}`.
    pub fn long_horizon(&self) -> u64 {
        1 << (self.bundle.atlas.depth - 2)
    }
}

pub fn check_convergence(ctx: &MainContext) -> CheckResult {
    timed("7a", "uniform-convergence envelope", || {
        let bounds: Vec<Q> = (1..=ctx.params.num_stages())
            .map(|i| Ok(ctx.bundle.f.image(&stage_hull(&ctx.bundle, ctx.params.block(i)?)?).len()))
            .collect::<Result<_>>()?;
        let r = convergence_report(&ctx.program, &ctx.bundle.f, Some(&bounds));
        let ok = r.all_within_bound && r.strictly_decreasing;
        let summary = r
            .stages
            .iter()
            .map(|s| {
                format!(
                    "e_{} = {:.6} ≤ {:.6}",
                    s.stage,
                    crate::rational::to_f64(&s.envelope),
                    crate::rational::to_f64(s.bound.as_ref().expect("bound given"))
                )
            })
            .collect::<Vec<_>>()
            .join(", ");
        Ok((ok, summary, serde_json::to_value(&r).expect("serializable")))
    })
}

/// Pulls `target`, a set seen at time `t`, back to time 0 through pieces
/// on which each map is affine, preferring pieces inside blown-up intervals.
fn pull_back(ctx: &MainContext, target: &Interval, t: u64) -> Result<Interval> {
    let mut cur = target.clone();
    for s in (1..=t).rev() {
        let options = ctx.program.map_at(s).affine_preimages(&cur);
        let pick = options
            .iter()
            .find(|iv| ctx.bundle.atlas.code_at(&iv.center()).is_some())
            .or(options.first())
            .ok_or_else(|| NdsError::InvalidMap(format!("no affine preimage at time {s}")))?;
        cur = pick.clone();
    }
    Ok(cur)
}

/// Grid inside the part of `K^n_{p_n}` present at the start of block `n`.
pub fn block_candidates(ctx: &MainContext, n: usize, points: u64) -> Result<Vec<Q>> {
    let start = block_end(&ctx.params, n - 1)?;
    let target = build_k_interval(&ctx.bundle, &ctx.params, n, ctx.params.p(n)?)?;
    let source = pull_back(ctx, &target, start)?;
    Ok(grid(&source.lo, &source.hi, points))
}

/// `S` built from the fold times of the first `stages` blocks.
pub fn fold_times(ctx: &MainContext, stages: usize) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for n in 1..=stages {
        out.extend(perturbation_times(&ctx.params, n)?);
    }
    Ok(out)
}

pub fn check_main_entropy(ctx: &MainContext) -> CheckResult {
    timed("7b", "separated sets along S and entropy headline", || {
        let eps = &ctx.eps0 * half();
        let log3 = 3f64.ln();
        let mut ok = true;
        let mut rows = Vec::new();
        let mut headline = 0.0f64;
        let mut tables = Vec::new();
        let grids = [3u64.pow(7), 3u64.pow(8)];
        for n in 1..=2usize {
            let cands = block_candidates(ctx, n, grids[n - 1])?;
            let times = fold_times(ctx, n)?;
            let count = times.len();
            let r = greedy_separated(&ctx.program, &cands, &times, count, &eps)?;
            let need = 3usize.pow(ctx.params.a(n)? as u32 - 1);
            let pass = r.verified && r.cardinality >= need && !r.beyond_horizon;
            ok &= pass;
            let literal = times_s(&ctx.params, count)?;
            let lit = greedy_separated(&ctx.program, &cands, &literal, count, &eps)?;
            let table = entropy_estimate(
                &ctx.program,
                &cands,
                &times,
                std::slice::from_ref(&eps),
                &(2..=count).collect::<Vec<_>>(),
            )?;
            headline = headline.max(table.headline);
            rows.push(json!({
                "block": n, "times": times, "cardinality": r.cardinality, "required": need,
                "pass": pass, "literal_s_times": literal, "literal_s_cardinality": lit.cardinality,
                "candidates": cands.len(),
            }));
            tables.push(table);
        }
        // informational: block 1 at finer epsilon, not part of the verdict
        let finer: Vec<Q> = [4i64, 8].iter().map(|d| &ctx.eps0 / Q::from_integer((*d).into())).collect();
        let times = fold_times(ctx, 1)?;
        let fine = entropy_estimate(
            &ctx.program,
            &block_candidates(ctx, 1, grids[0])?,
            &times,
            &finer,
            &(2..=times.len()).collect::<Vec<_>>(),
        )?;
        let headline_ok = headline >= 0.9 * log3;
        ok &= headline_ok;
        let summary = format!(
            "cardinalities {} (need {}), headline {:.6} (0.9·log 3 = {:.6}); finer ε block 1: {:.6}",
            rows.iter().map(|r| r["cardinality"].to_string()).collect::<Vec<_>>().join(", "),
            rows.iter().map(|r| r["required"].to_string()).collect::<Vec<_>>().join(", "),
            headline,
            0.9 * log3,
            fine.headline
        );
        Ok((ok, summary, json!({ "rows": rows, "headline": headline, "tables": tables, "finer_epsilon": fine })))
    })
}

/// 50 points in every represented interval of code depth ≤ 3 and the
/// endpoints of the K-stack in `G_0`.
pub fn settle_pool(ctx: &MainContext) -> Result<Vec<Q>> {
    let mut pool = Vec::new();
    for e in ctx.bundle.atlas.entries() {
        if e.code.depth() <= 3 {
            for j in 1..=50 {
                pool.push(e.g.at(&Q::new(j.into(), 51.into())));
            }
        }
    }
    for n in 0..=ctx.params.num_stages() + 1 {
        let k = build_k_interval(&ctx.bundle, &ctx.params, n, 0)?;
        pool.push(k.lo);
        pool.push(k.hi);
    }
    Ok(pool)
}

pub fn check_settling(ctx: &MainContext) -> CheckResult {
    timed("7c", "eventual constancy of sampled points", || {
        let pool = settle_pool(ctx)?;
        let horizon = ctx.staged_horizon();
        let verdicts: Vec<Settling> = pool
            .par_iter()
            .map(|x| eventual_constancy(&ctx.program, x, horizon))
            .collect::<Result<_>>()?;
        let settled = verdicts.iter().filter(|v| matches!(v, Settling::Settled { .. })).count();
        // how many points share their final state with another one
        let finals: Vec<Q> = pool
            .par_iter()
            .map(|x| trajectory(&ctx.program, x, horizon).map(|t| t.values[t.values.len() - 1].clone()))
            .collect::<Result<_>>()?;
        let distinct: BTreeSet<&Q> = finals.iter().collect();
        let ok = settled == pool.len();
        let summary = format!(
            "{settled}/{} settled within {horizon} steps; {} distinct final states",
            pool.len(),
            distinct.len()
        );
        Ok((
            ok,
            summary,
            json!({
                "horizon": horizon, "points": pool.len(), "settled": settled,
                "distinct_final_states": distinct.len(),
            }),
        ))
    })
}

pub const LY_PAIRS: usize = 1000;
pub const LY_SEED: u64 = 0x5eed;

pub fn check_ly_scan(ctx: &MainContext) -> CheckResult {
    timed("7d", "Li-Yorke screening of sampled pairs", || {
        let pool = settle_pool(ctx)?;
        let mut rng = StdRng::seed_from_u64(LY_SEED);
        let mut pairs = Vec::with_capacity(LY_PAIRS);
        while pairs.len() < LY_PAIRS {
            let (i, j) = (rng.gen_range(0..pool.len()), rng.gen_range(0..pool.len()));
            if pool[i] != pool[j] {
                pairs.push((i, j));
            }
        }
        let delta = &ctx.eps0 / Q::from_integer(4.into());
        let horizon = ctx.long_horizon();
        let verdicts: Vec<_> = pairs
            .par_iter()
            .map(|&(i, j)| ly_classify(&ctx.program, &pool[i], &pool[j], horizon, &delta))
            .collect::<Result<_>>()?;
        let count = |c: Classification| verdicts.iter().filter(|v| v.classification == c).count();
        let (ly, asym, distal) = (
            count(Classification::LyCandidate),
            count(Classification::AsymptoticCandidate),
            count(Classification::DistalCandidate),
        );
        let examples: Vec<_> = pairs
            .iter()
            .zip(&verdicts)
            .filter(|(_, v)| v.classification == Classification::LyCandidate)
            .take(5)
            .map(|(&(i, j), v)| {
                let code = |x: &Q| ctx.bundle.atlas.code_at(x).map(|e| e.code.to_string());
                json!({ "x": pool[i].to_string(), "y": pool[j].to_string(),
                        "x_code": code(&pool[i]), "y_code": code(&pool[j]), "verdict": v })
            })
            .collect();
        let summary = format!(
            "{LY_PAIRS} pairs, horizon {horizon}: {ly} LY-candidates, {asym} asymptotic, {distal} distal"
        );
        Ok((
            ly == 0,
            summary,
            json!({ "horizon": horizon, "ly": ly, "asymptotic": asym, "distal": distal, "ly_examples": examples }),
        ))
    })
}

pub fn check_distality(ctx: &MainContext) -> CheckResult {
    timed("7e", "distality of code pairs", || {
        let codes: Vec<Code> = Code::all_up_to(4);
        let mut pairs = Vec::new();
        for (i, a) in codes.iter().enumerate() {
            for b in &codes[i + 1..] {
                pairs.push((a.clone(), b.clone()));
            }
        }
        let horizon = ctx.long_horizon();
        let r = distality_report(&ctx.bundle, &ctx.program, &pairs, horizon)?;
        let failing = r.pairs.iter().filter(|p| !p.holds).count();
        let summary = format!("{} pairs over {horizon} steps, {failing} below their bound", r.pairs.len());
        Ok((r.all_hold, summary, json!({ "horizon": horizon, "pairs": r.pairs.len(), "failing": failing })))
    })
}
