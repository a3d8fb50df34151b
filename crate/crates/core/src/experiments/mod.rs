//! The acceptance checks, shared by the `verify-all` command and the
//! acceptance test target. Every check returns a [`CheckResult`]; none of
//! them panics on failure.

mod exact;
mod main_checks;
mod numeric;

use std::time::Instant;

use serde::Serialize;

pub use exact::{
    check_atlas_structure, check_lemma_collapse, check_lemma_lm, check_simple_map,
    lemma_lm_report, LemmaLmReport,
};
pub use main_checks::{
    block_candidates, check_convergence, check_distality, check_ly_scan, check_main_entropy,
    check_settling, fold_times, settle_pool, MainContext, LY_PAIRS, LY_SEED,
};
pub use numeric::{
    check_entropy_oracle, check_lemma_horseshoe, check_model_consistency, check_zero_entropy,
    tent_oracle_report,
};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub summary: String,
    pub elapsed_secs: f64,
    pub details: serde_json::Value,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.elapsed_secs
        )
    }
}

pub(crate) fn timed(
    id: &str,
    title: &str,
    body: impl FnOnce() -> crate::Result<(bool, String, serde_json::Value)>,
) -> CheckResult {
    let start = Instant::now();
    let (passed, summary, details) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}"), serde_json::Value::Null),
    };
    CheckResult {
        id: id.to_string(),
        title: title.to_string(),
        passed,
        summary,
        elapsed_secs: start.elapsed().as_secs_f64(),
        details,
    }
}

/// Every acceptance check with its pinned parameters, in order.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = vec![
        check_lemma_lm(6),
        check_simple_map(8),
        check_lemma_collapse(),
        check_lemma_horseshoe(),
        check_atlas_structure(10),
        check_zero_entropy(10),
    ];
    match MainContext::build(12) {
        Ok(ctx) => {
            out.push(check_convergence(&ctx));
            out.push(check_main_entropy(&ctx));
            out.push(check_settling(&ctx));
            out.push(check_ly_scan(&ctx));
            out.push(check_distality(&ctx));
        }
        Err(e) => out.push(timed("7", "main construction", || Err(e))),
    }
    out.push(check_entropy_oracle());
    out.push(check_model_consistency(6, 32));
    out
}
