mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use ndslab::analysis::{
    convergence_report, distality_report, entropy_estimate, eventual_constancy, grid, ly_classify,
    Classification, EntropyReport, Settling,
};
use ndslab::constructions::{
    perturbation_times, stage_hull, times_r, BlockProgram, ProgramFile, StageParams,
};
use ndslab::dynamics::trajectory;
use ndslab::experiments::{
    block_candidates, fold_times, lemma_lm_report, run_all, settle_pool, MainContext, LY_PAIRS,
    LY_SEED,
};
use ndslab::rational::{fmt_q, parse_q, q, to_f64};
use ndslab::symbolic::Code;
use ndslab::{NdsError, Q};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use config::{CommonArgs, Family, RunConfig, TimesSel};
use output::{csv_bytes, emit, is_csv, json_bytes};

/// Exact construction and checking of nonautonomous interval systems.
///
/// Exit codes: 0 when every check passes, 1 when a check fails, 2 on a
/// configuration or input error. NDSLAB_THREADS caps the worker threads.
///
/// CSV columns: trajectory writes `t,value_num,value_den,flag`, where flag
/// marks steps past the exact horizon or after frontier contact; entropy
/// (with a .csv output) writes `epsilon,n,cardinality,log_card_over_n,
/// entropy_estimate`; build-nds --graph-csv writes `x,y`.
#[derive(Parser)]
#[command(name = "ndslab", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the blown-up atlas and write it as JSON.
    BuildAtlas,
    /// Build a program and write its recipe and layout as JSON.
    BuildNds {
        /// Also dump the graph of the map used at --graph-time as CSV `x,y`.
        #[arg(long)]
        graph_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        graph_time: u64,
        #[arg(long, default_value_t = 1024)]
        graph_grid: u64,
    },
    /// Orbit of one point as CSV `t,value_num,value_den,flag`.
    Trajectory {
        /// Program file from build-nds; the config is used when absent.
        #[arg(long)]
        program: Option<PathBuf>,
        /// Starting point, p/q.
        #[arg(long)]
        x: String,
    },
    /// Separated-set entropy table.
    Entropy {
        /// Block (main) or stage (lemma) whose active interval seeds the grid.
        #[arg(long)]
        block: Option<usize>,
        #[arg(long)]
        grid: Option<u64>,
    },
    /// Li-Yorke screening of sampled pairs.
    LyScan {
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Eventual constancy of sampled points.
    SettleScan,
    /// Separation of code-pair surrogates against their hull-gap bounds.
    Distality {
        #[arg(long, default_value_t = 4)]
        max_code_depth: usize,
    },
    /// Per-stage sup distance to the limit map.
    Convergence,
    /// Exhaustive η-periodicity check of all blocks up to length max-k.
    VerifyLemmaLm {
        #[arg(long, default_value_t = 6)]
        max_k: usize,
    },
    /// Every acceptance check at its pinned parameters.
    VerifyAll,
}

/// Outcome of a command that ran to completion.
struct Outcome {
    passed: bool,
    bytes: Vec<u8>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            if let Err(e) = emit(cli.common.output.as_deref(), &o.bytes) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("NDSLAB_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).with_context(|| {
            format!("NDSLAB_THREADS must be a positive integer, got {v:?}")
        })?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    init_threads()?;
    let cfg = RunConfig::load(&cli.common)?;
    match &cli.cmd {
        Cmd::BuildAtlas => {
            let bundle = cfg.atlas.bundle()?;
            pass(json_bytes(&bundle.atlas.to_json())?)
        }
        Cmd::BuildNds { graph_csv, graph_time, graph_grid } => {
            let recipe = cfg.recipe();
            let (program, _) = recipe.build()?;
            if let Some(path) = graph_csv {
                if *graph_time == 0 || *graph_grid == 0 {
                    bail!("--graph-time and --graph-grid must be at least 1");
                }
                #[derive(Serialize)]
                struct Point {
                    x: String,
                    y: String,
                }
                let rows = program
                    .map_at(*graph_time)
                    .sample(*graph_grid)
                    .into_iter()
                    .map(|(x, y)| Point { x: fmt_q(&x), y: fmt_q(&y) });
                emit(Some(path), &csv_bytes(rows)?)?;
            }
            pass(json_bytes(&ProgramFile { layout: program.layout(), recipe })?)
        }
        Cmd::Trajectory { program, x } => cmd_trajectory(&cfg, program.as_ref(), x),
        Cmd::Entropy { block, grid } => {
            let mut cfg = cfg;
            cfg.analysis.block = block.or(cfg.analysis.block);
            cfg.analysis.grid = grid.or(cfg.analysis.grid);
            cmd_entropy(&cfg, is_csv(cli.common.output.as_deref()))
        }
        Cmd::LyScan { delta, pairs, seed } => {
            let mut cfg = cfg;
            cfg.analysis.delta = delta.clone().or(cfg.analysis.delta);
            cfg.analysis.pairs = pairs.or(cfg.analysis.pairs);
            cfg.analysis.seed = seed.or(cfg.analysis.seed);
            cmd_ly_scan(&cfg)
        }
        Cmd::SettleScan => cmd_settle_scan(&cfg),
        Cmd::Distality { max_code_depth } => cmd_distality(&cfg, *max_code_depth),
        Cmd::Convergence => cmd_convergence(&cfg),
        Cmd::VerifyLemmaLm { max_k } => {
            if *max_k == 0 || *max_k > 20 {
                bail!("--max-k must lie in 1..=20");
            }
            let r = lemma_lm_report(*max_k);
            let ok = r.failures.is_empty();
            eprintln!("{} blocks checked, {} failures", r.blocks_checked, r.failures.len());
            Ok(Outcome { passed: ok, bytes: json_bytes(&r)? })
        }
        Cmd::VerifyAll => {
            let results = run_all();
            for r in &results {
                eprintln!("{}", r.line());
            }
            let passed = results.iter().all(|r| r.passed);
            Ok(Outcome { passed, bytes: json_bytes(&results)? })
        }
    }
}

fn pass(bytes: Vec<u8>) -> anyhow::Result<Outcome> {
    Ok(Outcome { passed: true, bytes })
}

/// Main-family context, rejecting the lemma family for atlas-bound commands.
fn main_context(cfg: &RunConfig, what: &str) -> anyhow::Result<MainContext> {
    if cfg.family != Family::Main {
        bail!("{what} needs --family main");
    }
    Ok(MainContext::new(cfg.atlas.bundle()?, cfg.stages.clone())?)
}

/// Rejects horizons beyond the exact horizon of the program.
fn check_horizon(program: &BlockProgram, steps: u64) -> anyhow::Result<()> {
    if let Some(h) = program.exact_horizon {
        if steps > h {
            return Err(NdsError::Horizon { requested: steps, horizon: h }.into());
        }
    }
    Ok(())
}

fn cmd_trajectory(cfg: &RunConfig, program: Option<&PathBuf>, x: &str) -> anyhow::Result<Outcome> {
    let recipe = match program {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: ProgramFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            file.recipe
        }
        None => cfg.recipe(),
    };
    let (program, _) = recipe.build()?;
    let steps = cfg.analysis.steps.unwrap_or(16);
    check_horizon(&program, steps)?;
    let x = parse_q(x).context("--x")?;
    let tr = trajectory(&program, &x, steps)?;

    #[derive(Serialize)]
    struct Row {
        t: usize,
        value_num: String,
        value_den: String,
        flag: u8,
    }
    let rows = tr.rows().map(|(t, value_num, value_den, f)| Row { t, value_num, value_den, flag: f as u8 });
    pass(csv_bytes(rows)?)
}

/// Resolves the sampling times for `program` given the selector and `n`.
fn resolve_times(cfg: &RunConfig, params: &StageParams, block: usize, default_n: u64) -> anyhow::Result<Vec<u64>> {
    let sel = match &cfg.analysis.times {
        Some(t) => TimesSel::parse(t)?,
        None if cfg.family == Family::Main => TimesSel::S,
        None => TimesSel::All,
    };
    let n = cfg.analysis.steps.unwrap_or(default_n);
    Ok(match sel {
        TimesSel::All => (1..=n).collect(),
        TimesSel::Range(m) => (1..=m).collect(),
        TimesSel::R(i) => {
            if cfg.family != Family::Main {
                bail!("times R need --family main");
            }
            times_r(params, i, n)?
        }
        TimesSel::S => {
            if cfg.family != Family::Main {
                bail!("times S need --family main");
            }
            // fold times of blocks 1..=block
            (1..=block)
                .map(|b| perturbation_times(params, b))
                .collect::<ndslab::Result<Vec<_>>>()?
                .concat()
        }
    })
}

#[derive(Serialize)]
struct EntropyRow {
    epsilon: String,
    n: usize,
    cardinality: usize,
    log_card_over_n: f64,
    entropy_estimate: f64,
}

fn cmd_entropy(cfg: &RunConfig, csv: bool) -> anyhow::Result<Outcome> {
    let block = cfg.analysis.block.unwrap_or(1);
    if block == 0 {
        bail!("block must be at least 1");
    }
    let report: EntropyReport = match cfg.family {
        Family::Main => {
            let ctx = main_context(cfg, "entropy")?;
            if block > ctx.params.num_stages() {
                bail!("block {block} exceeds the {} configured stages", ctx.params.num_stages());
            }
            let times = match cfg.analysis.times {
                None => fold_times(&ctx, block)?,
                Some(_) => resolve_times(cfg, &ctx.params, block, 8)?,
            };
            if times.is_empty() {
                bail!("no sampling times");
            }
            check_horizon(&ctx.program, *times.iter().max().context("no times")?)?;
            let cands = block_candidates(&ctx, block, cfg.analysis.grid.unwrap_or(2187))?;
            let eps = cfg.epsilons()?.unwrap_or_else(|| vec![&ctx.eps0 / Q::from_integer(2.into())]);
            let n_list = cfg.analysis.n_list.clone().unwrap_or_else(|| (2..=times.len()).collect());
            entropy_estimate(&ctx.program, &cands, &times, &eps, &n_list)?
        }
        Family::Lemma => {
            let (program, _) = cfg.recipe().build()?;
            let k = cfg.lemma.k_interval(block)?;
            let times = resolve_times(cfg, &StageParams::default(), block, 8)?;
            let cands = grid(&k.lo, &k.hi, cfg.analysis.grid.unwrap_or(2187));
            let eps = cfg.epsilons()?.unwrap_or_else(|| vec![k.len() / Q::from_integer(10.into())]);
            let n_list = cfg.analysis.n_list.clone().unwrap_or_else(|| (2..=times.len()).collect());
            entropy_estimate(&program, &cands, &times, &eps, &n_list)?
        }
    };
    eprintln!("headline {:.12}", report.headline);
    let passed = report.verified && !report.beyond_horizon;
    let bytes = if csv {
        csv_bytes(report.cells.iter().map(|c| EntropyRow {
            epsilon: fmt_q(&c.epsilon),
            n: c.n,
            cardinality: c.cardinality,
            log_card_over_n: output::round12(c.log_card_over_n),
            entropy_estimate: output::round12(c.entropy_estimate),
        }))?
    } else {
        json_bytes(&report)?
    };
    Ok(Outcome { passed, bytes })
}

/// Program and point pool for the scans, with the default horizon.
fn scan_setup(cfg: &RunConfig, long: bool) -> anyhow::Result<(BlockProgram, Vec<Q>, u64, Option<Q>)> {
    match cfg.family {
        Family::Main => {
            let ctx = main_context(cfg, "the scan")?;
            let pool = settle_pool(&ctx)?;
            let horizon = if long { ctx.long_horizon() } else { ctx.staged_horizon() };
            let delta = &ctx.eps0 / Q::from_integer(4.into());
            Ok((ctx.program, pool, horizon, Some(delta)))
        }
        Family::Lemma => {
            let (program, _) = cfg.recipe().build()?;
            let pool = grid(&q(0, 1), &q(1, 1), 1024);
            let horizon = program.staged_len();
            Ok((program, pool, horizon, None))
        }
    }
}

fn cmd_ly_scan(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (program, pool, default_h, default_delta) = scan_setup(cfg, true)?;
    let horizon = cfg.analysis.steps.unwrap_or(default_h);
    check_horizon(&program, horizon)?;
    let delta = match (cfg.delta()?, default_delta) {
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => bail!("--delta is required for the lemma family"),
    };
    let n_pairs = cfg.analysis.pairs.unwrap_or(LY_PAIRS);
    let mut rng = rand::rngs::StdRng::seed_from_u64(cfg.analysis.seed.unwrap_or(LY_SEED));
    let mut pairs = Vec::with_capacity(n_pairs);
    while pairs.len() < n_pairs {
        let (i, j) = (rng.gen_range(0..pool.len()), rng.gen_range(0..pool.len()));
        if pool[i] != pool[j] {
            pairs.push((i, j));
        }
    }
    let verdicts: Vec<_> = pairs
        .par_iter()
        .map(|&(i, j)| ly_classify(&program, &pool[i], &pool[j], horizon, &delta))
        .collect::<ndslab::Result<_>>()?;
    let count = |c: Classification| verdicts.iter().filter(|v| v.classification == c).count();
    let ly = count(Classification::LyCandidate);
    let rows: Vec<_> = pairs
        .iter()
        .zip(&verdicts)
        .map(|(&(i, j), v)| json!({ "x": fmt_q(&pool[i]), "y": fmt_q(&pool[j]), "verdict": v }))
        .collect();
    eprintln!("{} pairs, horizon {horizon}: {ly} LY-candidates", pairs.len());
    let report = json!({
        "horizon": horizon,
        "delta": fmt_q(&delta),
        "heuristic": "classification from distances on [T/2, T]",
        "ly_candidates": ly,
        "asymptotic_candidates": count(Classification::AsymptoticCandidate),
        "distal_candidates": count(Classification::DistalCandidate),
        "pairs": rows,
    });
    Ok(Outcome { passed: ly == 0, bytes: json_bytes(&report)? })
}

fn cmd_settle_scan(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (program, pool, default_h, _) = scan_setup(cfg, false)?;
    let horizon = cfg.analysis.steps.unwrap_or(default_h);
    check_horizon(&program, horizon)?;
    let verdicts: Vec<Settling> = pool
        .par_iter()
        .map(|x| eventual_constancy(&program, x, horizon))
        .collect::<ndslab::Result<_>>()?;
    let settled = verdicts.iter().filter(|v| matches!(v, Settling::Settled { .. })).count();
    eprintln!("{settled}/{} settled within {horizon} steps", pool.len());
    let rows: Vec<_> = pool.iter().zip(&verdicts).map(|(x, v)| json!({ "x": fmt_q(x), "verdict": v })).collect();
    let report = json!({ "horizon": horizon, "points": pool.len(), "settled": settled, "results": rows });
    Ok(Outcome { passed: settled == pool.len(), bytes: json_bytes(&report)? })
}

fn cmd_distality(cfg: &RunConfig, max_code_depth: usize) -> anyhow::Result<Outcome> {
    let ctx = main_context(cfg, "distality")?;
    let depth = ctx.bundle.atlas.depth;
    if max_code_depth == 0 || max_code_depth > depth {
        bail!("--max-code-depth must lie in 1..={depth}");
    }
    let codes = Code::all_up_to(max_code_depth);
    let mut pairs = Vec::new();
    for (i, a) in codes.iter().enumerate() {
        for b in &codes[i + 1..] {
            pairs.push((a.clone(), b.clone()));
        }
    }
    let horizon = cfg.analysis.steps.unwrap_or(ctx.long_horizon());
    let r = distality_report(&ctx.bundle, &ctx.program, &pairs, horizon)?;
    eprintln!("{} pairs over {horizon} steps, all hold: {}", r.pairs.len(), r.all_hold);
    Ok(Outcome { passed: r.all_hold, bytes: json_bytes(&r)? })
}

fn cmd_convergence(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let ctx = main_context(cfg, "convergence")?;
    let bounds: Vec<Q> = (1..=ctx.params.num_stages())
        .map(|i| Ok(ctx.bundle.f.image(&stage_hull(&ctx.bundle, ctx.params.block(i)?)?).len()))
        .collect::<ndslab::Result<_>>()?;
    let r = convergence_report(&ctx.program, &ctx.bundle.f, Some(&bounds));
    for s in &r.stages {
        eprintln!("e_{} = {:.12}", s.stage, to_f64(&s.envelope));
    }
    Ok(Outcome { passed: r.all_within_bound && r.strictly_decreasing, bytes: json_bytes(&r)? })
}
