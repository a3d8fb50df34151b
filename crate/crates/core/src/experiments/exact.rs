//! Checks decided by exact symbolic or rational computation.

use serde::Serialize;
use serde_json::json;

use super::{timed, CheckResult};
use crate::blowup::{Atlas, LimitMapBundle};
use crate::constructions::{lemma_nds, lemma_psi, LemmaParams};
use crate::dynamics::iterate_from;
use crate::error::Result;
use crate::rational::{half, one, zero, Q};
use crate::symbolic::{eta_orbit_of_zero, evaluate_bits, Block, Code, Cylinder};

#[derive(Clone, Debug, Serialize)]
pub struct LemmaLmReport {
    pub max_k: usize,
    pub blocks_checked: usize,
    /// Blocks for which `η^{2^k}(0̄) ≠ 0̄` or the orbit meets the cylinder
    /// other than once at `n0̄`.
    pub failures: Vec<String>,
}

/// For every block `n` of length `k ≤ max_k`: `0̄` has `η_n`-period `2^k`
/// and its orbit meets the cylinder of `n` exactly once, at `n0̄`.
pub fn lemma_lm_report(max_k: usize) -> LemmaLmReport {
    let mut failures = Vec::new();
    let mut blocks_checked = 0;
    for k in 1..=max_k {
        let period = 1usize << k;
        for word in Block::all(k) {
            blocks_checked += 1;
            let orbit = eta_orbit_of_zero(&word, period + 1);
            let periodic = orbit.len() == period && orbit[period - 1].eta(&word) == Code::zeros();
            let cyl = Cylinder::new(word.clone());
            let hits: Vec<&Code> = orbit.iter().filter(|c| cyl.contains(c)).collect();
            let single = hits.len() == 1 && *hits[0] == Code::with_tail(&word, 0);
            if !(periodic && single) {
                failures.push(word.to_string());
            }
        }
    }
    LemmaLmReport { max_k, blocks_checked, failures }
}

pub fn check_lemma_lm(max_k: usize) -> CheckResult {
    timed("1", "η-periodicity and single cylinder visit", || {
        let r = lemma_lm_report(max_k);
        let ok = r.failures.is_empty() && r.blocks_checked == (2usize << max_k) - 2;
        let summary = format!("{} blocks, {} failures", r.blocks_checked, r.failures.len());
        Ok((ok, summary, serde_json::to_value(&r).expect("serializable")))
    })
}

pub fn check_simple_map(max_k: usize) -> CheckResult {
    timed("2", "cylinder first-return times under α", || {
        let mut bad = Vec::new();
        let mut checked = 0;
        for k in 1..=max_k {
            for word in Block::all(k) {
                checked += 1;
                let t = Cylinder::new(word.clone()).first_return_time(1 << (k + 1));
                if t != Some(1 << k) {
                    bad.push(word.to_string());
                }
            }
        }
        let summary = format!("{checked} cylinders, {} with the wrong return time", bad.len());
        Ok((bad.is_empty(), summary, json!({ "max_k": max_k, "checked": checked, "failures": bad })))
    })
}

pub fn check_lemma_collapse() -> CheckResult {
    timed("3", "lemma blocks collapse to ψ_k", || {
        let params = LemmaParams::default();
        let stages = 5;
        let prog = lemma_nds(&params, stages)?;
        let grid: Vec<Q> = (0..=512).map(|j| Q::new(j.into(), 512.into())).collect();
        let mut block_mismatch = Vec::new();
        let mut prefix_mismatch = Vec::new();
        for k in 1..=stages {
            let psi = lemma_psi(k, &params)?;
            let (start, end) = prog.stage_span(k - 1);
            for x in &grid {
                let want = psi.eval(x)?;
                if iterate_from(&prog, start, x, end - start + 1)? != want {
                    block_mismatch.push((k, x.to_string()));
                }
                if iterate_from(&prog, 1, x, end)? != want {
                    prefix_mismatch.push((k, x.to_string()));
                }
            }
        }
        let ok = block_mismatch.is_empty() && prefix_mismatch.is_empty();
        let summary = format!(
            "{} stages × 513 points; {} block and {} prefix mismatches",
            stages,
            block_mismatch.len(),
            prefix_mismatch.len()
        );
        Ok((ok, summary, json!({ "block_mismatch": block_mismatch, "prefix_mismatch": prefix_mismatch })))
    })
}

#[derive(Clone, Debug, Serialize)]
struct AtlasFindings {
    depth: usize,
    entries: usize,
    disjoint_and_ordered: bool,
    theta_order: bool,
    covers_unit_interval: bool,
    one_code_per_deeper_cylinder: bool,
    image_mismatches: Vec<String>,
    frontier_codes: Vec<String>,
    orbit_action_matches: u64,
    hull_cycle_failures: Vec<usize>,
}

fn atlas_findings(depth: usize) -> Result<AtlasFindings> {
    let bundle = LimitMapBundle::build(Atlas::build(depth, half(), 4)?)?;
    let atlas = &bundle.atlas;
    let entries = atlas.entries();

    let disjoint_and_ordered = entries.windows(2).all(|w| w[0].g.hi < w[1].g.lo)
        && entries.iter().all(|e| e.g.lo < e.g.hi);
    let theta_order = entries.windows(2).all(|w| w[0].code.theta() < w[1].code.theta());
    let covers_unit_interval = entries[0].g.lo == zero()
        && entries[entries.len() - 1].g.hi == one()
        && atlas.total_g_length() + atlas.total_gap_length() == one();

    let mut cells: Vec<u64> = entries.iter().map(|e| evaluate_bits(&e.code.expand(depth + 1))).collect();
    cells.sort_unstable();
    cells.dedup();
    let one_code_per_deeper_cylinder = cells.len() == entries.len() && cells.len() == 2 << depth;

    let mut image_mismatches = Vec::new();
    for e in entries {
        if bundle.frontier_codes.contains(&e.code) {
            continue;
        }
        let target = atlas.require(&e.code.succ())?;
        if bundle.f.image(&e.g) != *target || bundle.f.eval(&e.g.lo)? != target.lo {
            image_mismatches.push(e.code.to_string());
        }
    }
    let orbit = bundle.verify_orbit_action(bundle.exact_horizon)?;
    let hull_cycle_failures =
        (1..=depth).filter(|&n| !bundle.hull_cycle_check(n).passed()).collect();
    Ok(AtlasFindings {
        depth,
        entries: entries.len(),
        disjoint_and_ordered,
        theta_order,
        covers_unit_interval,
        one_code_per_deeper_cylinder,
        image_mismatches,
        frontier_codes: bundle.frontier_codes.iter().map(Code::to_string).collect(),
        orbit_action_matches: orbit.matches,
        hull_cycle_failures,
    })
}

pub fn check_atlas_structure(depth: usize) -> CheckResult {
    timed("5", "atlas and limit-map structure", || {
        let r = atlas_findings(depth)?;
        let horizon = 1u64 << (depth - 1);
        let ok = r.disjoint_and_ordered
            && r.theta_order
            && r.covers_unit_interval
            && r.one_code_per_deeper_cylinder
            && r.image_mismatches.is_empty()
            && r.frontier_codes.len() == 1
            && r.orbit_action_matches == horizon
            && r.hull_cycle_failures.is_empty();
        let summary = format!(
            "D = {depth}: {} intervals, {} image mismatches, orbit exact for {} steps, J(n,k) cycles ok for n ≤ {}",
            r.entries,
            r.image_mismatches.len(),
            r.orbit_action_matches,
            if r.hull_cycle_failures.is_empty() { depth } else { r.hull_cycle_failures[0] - 1 }
        );
        Ok((ok, summary, serde_json::to_value(&r).expect("serializable")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_instances_pass() {
        assert!(check_lemma_lm(4).passed);
        assert!(check_simple_map(5).passed);
        assert!(check_atlas_structure(5).passed);
    }
}
