//! The uniformly convergent family built on the blown-up odometer.
//!
//! Stage `i` uses a block `n_i` of length `k_i`, with `p_i = e(n_i)` and
//! `q_i = 2^{k_i} − p_i`. `G_j` is the interval of the code with orbit
//! index `j`, and `K^n_j` is the centred sub-interval of `G_j` of relative
//! width `w_n`.

use serde::{Deserialize, Serialize};

use super::program::{BlockProgram, Run, Stage, TailPolicy};
use crate::blowup::LimitMapBundle;
use crate::error::{NdsError, Result};
use crate::plmap::{from_points, PLMap};
use crate::rational::{de_qvec, half, one, pow2, q, ser_qvec, zero, Interval, Q};
use crate::symbolic::{Block, Code};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub block: Block,
    pub a: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub stages: Vec<StageSpec>,
    /// Relative widths `w_0, w_1, …` of the K-stack inside `G_0`; default
    /// `w_n = 1 − 2^{−n−1}`.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_opt_qvec",
        deserialize_with = "de_opt_qvec"
    )]
    pub relative_widths: Option<Vec<Q>>,
}

fn ser_opt_qvec<S: serde::Serializer>(
    v: &Option<Vec<Q>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(xs) => ser_qvec(xs, s),
        None => s.serialize_none(),
    }
}

fn de_opt_qvec<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Vec<Q>>, D::Error> {
    de_qvec(d).map(Some)
}

impl Default for StageParams {
    fn default() -> Self {
        StageParams {
            stages: [3, 5, 7]
                .iter()
                .enumerate()
                .map(|(i, &a)| StageSpec { block: Block::ones(i + 1), a })
                .collect(),
            relative_widths: None,
        }
    }
}

impl StageParams {
    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    fn spec(&self, i: usize) -> Result<&StageSpec> {
        if i == 0 || i > self.stages.len() {
            return Err(NdsError::InvalidParam(format!("no stage {i}")));
        }
        Ok(&self.stages[i - 1])
    }

    pub fn block(&self, i: usize) -> Result<&Block> {
        Ok(&self.spec(i)?.block)
    }

    pub fn k(&self, i: usize) -> Result<usize> {
        Ok(self.spec(i)?.block.len())
    }

    pub fn a(&self, i: usize) -> Result<u64> {
        Ok(self.spec(i)?.a)
    }

    pub fn period(&self, i: usize) -> Result<u64> {
        Ok(1 << self.k(i)?)
    }

    pub fn p(&self, i: usize) -> Result<i64> {
        Ok(self.spec(i)?.block.evaluate() as i64)
    }

    pub fn q(&self, i: usize) -> Result<i64> {
        Ok(self.period(i)? as i64 - self.p(i)?)
    }

    /// `b_i = a_i·2^{k_i} + 1`.
    pub fn block_len(&self, i: usize) -> Result<u64> {
        Ok(self.a(i)? * self.period(i)? + 1)
    }

    pub fn relative_width(&self, n: usize) -> Result<Q> {
        match &self.relative_widths {
            None => Ok(one() - pow2(n + 1).recip()),
            Some(ws) => ws.get(n).cloned().ok_or_else(|| {
                NdsError::InvalidParam(format!("relative width w_{n} not given"))
            }),
        }
    }

    pub fn validate(&self, depth: usize) -> Result<()> {
        if self.stages.is_empty() {
            return Err(NdsError::InvalidParam("need at least one stage".into()));
        }
        let mut last_k = 0;
        for (i, s) in self.stages.iter().enumerate() {
            if s.block.len() <= last_k {
                return Err(NdsError::InvalidParam("k_i must strictly increase".into()));
            }
            last_k = s.block.len();
            if s.a == 0 {
                return Err(NdsError::InvalidParam(format!("a_{} must be positive", i + 1)));
            }
            if s.block.len() >= depth {
                return Err(NdsError::Depth {
                    code: s.block.to_string(),
                    needed: s.block.len() + 1,
                    depth,
                });
            }
        }
        let mut prev = zero();
        for n in 0..=self.stages.len() + 1 {
            let w = self.relative_width(n)?;
            if w <= prev || w >= one() {
                return Err(NdsError::InvalidParam(
                    "K-stack widths must increase strictly inside (0,1)".into(),
                ));
            }
            prev = w;
        }
        if self.relative_width(1)? <= q(1, 3) {
            return Err(NdsError::InvalidParam("|K^1_0| must exceed ε₀ = |G_0|/3".into()));
        }
        Ok(())
    }
}

/// `ε₀ = |G_0|/3`.
pub fn epsilon0(bundle: &LimitMapBundle) -> Result<Q> {
    Ok(bundle.atlas.g_at(0)?.len() / Q::from_integer(3.into()))
}

fn g_checked(bundle: &LimitMapBundle, j: i64) -> Result<&Interval> {
    if j.unsigned_abs() > bundle.exact_horizon {
        return Err(NdsError::Horizon { requested: j.unsigned_abs(), horizon: bundle.exact_horizon });
    }
    bundle.atlas.g_at(j)
}

/// `K^n_j`.
pub fn build_k_interval(
    bundle: &LimitMapBundle,
    params: &StageParams,
    n: usize,
    j: i64,
) -> Result<Interval> {
    let g = g_checked(bundle, j)?;
    let w = params.relative_width(n)?;
    let margin = (one() - &w) * half();
    Ok(g.sub(&margin, &(one() - &margin)))
}

/// `J_i`, the hull of the cylinder of `n_i`.
pub fn stage_hull(bundle: &LimitMapBundle, block: &Block) -> Result<Interval> {
    bundle.atlas.hull_of(block).ok_or_else(|| NdsError::Depth {
        code: block.to_string(),
        needed: block.len(),
        depth: bundle.atlas.depth,
    })
}

/// Interval lift of `τ_{n_i}`: each `G(c)` inside `J_i` goes decreasingly
/// onto `G(τ c)`, linear across the gaps in between. Outside `J_i` the map
/// is the identity except on short connectors inside the gaps bordering
/// `J_i`, kept narrow enough that `f_D` sends them into `f_D(J_i)` whenever
/// the gap allows it.
pub fn build_lambda(bundle: &LimitMapBundle, block: &Block) -> Result<PLMap> {
    let atlas = &bundle.atlas;
    let f = &bundle.f;
    let j = stage_hull(bundle, block)?;
    let fj = f.image(&j);

    let mut inside = Vec::new();
    for e in atlas.entries() {
        if !e.code.starts_with(block) {
            continue;
        }
        let image = atlas.require(&e.code.tau(block))?;
        inside.push((e.g.lo.clone(), image.hi.clone()));
        inside.push((e.g.hi.clone(), image.lo.clone()));
    }

    // width of a connector inside gap `gap` whose end `at` touches J
    let connector = |gap: &Interval, at: &Q| -> Q {
        let far = if gap.hi == *at { &gap.lo } else { &gap.hi };
        let (a0, b0) = (f.eval_unchecked(at), f.eval_unchecked(far));
        let room = if b0 > a0 {
            (&fj.hi - &a0) / (&b0 - &a0)
        } else if b0 < a0 {
            (&a0 - &fj.lo) / (&a0 - &b0)
        } else {
            one()
        };
        // f leaves f_D(J) right away; no connector can stay inside it
        let room = if room == zero() { one() } else { room.min(one()) };
        gap.len() * room * half()
    };
    let gap_ending_at = |x: &Q| atlas.gaps().iter().find(|g| g.hi == *x).cloned();
    let gap_starting_at = |x: &Q| atlas.gaps().iter().find(|g| g.lo == *x).cloned();

    let mut points = Vec::with_capacity(inside.len() + 4);
    if j.lo > zero() {
        let gap = gap_ending_at(&j.lo).expect("a gap borders every hull");
        let start = &j.lo - connector(&gap, &j.lo);
        points.push((zero(), zero()));
        points.push((start.clone(), start));
    }
    points.extend(inside);
    if j.hi < one() {
        let gap = gap_starting_at(&j.hi).expect("a gap borders every hull");
        let end = &j.hi + connector(&gap, &j.hi);
        points.push((end.clone(), end));
        points.push((one(), one()));
    }
    from_points(&points)
}

/// `η_i = f_D ∘ λ_i`.
pub fn build_eta_stage(bundle: &LimitMapBundle, block: &Block) -> Result<PLMap> {
    Ok(bundle.f.compose(&build_lambda(bundle, block)?))
}

/// `f_D` with a three-lap fold on `K^n_{−q_i} = λ_i(K^n_{p_i})`: the two
/// outer parts cut off by `K^{n−1}_{−q_i}` run increasingly and the middle
/// decreasingly over the whole interval before `f_D` is applied.
pub fn build_phi_stage(
    bundle: &LimitMapBundle,
    params: &StageParams,
    i: usize,
    n: usize,
) -> Result<PLMap> {
    if n == 0 {
        return Err(NdsError::InvalidParam("φ_{i,n} needs n ≥ 1".into()));
    }
    let site = -params.q(i)?;
    let outer = build_k_interval(bundle, params, n, site)?;
    let inner = build_k_interval(bundle, params, n - 1, site)?;
    let f = &bundle.f;
    let (lo, hi) = (f.eval_unchecked(&outer.lo), f.eval_unchecked(&outer.hi));
    bundle.f.splice(
        &outer,
        &[
            (outer.lo.clone(), lo.clone()),
            (inner.lo.clone(), hi.clone()),
            (inner.hi.clone(), lo),
            (outer.hi.clone(), hi),
        ],
    )
}

/// `f_D` outside `K^{n+1}_{p_i}`, constant on `K^n_{p_i}` at the centre of
/// `G_{p_i+1}`, linear in between.
pub fn build_psi_stage(
    bundle: &LimitMapBundle,
    params: &StageParams,
    i: usize,
    n: usize,
) -> Result<PLMap> {
    let p = params.p(i)?;
    let outer = build_k_interval(bundle, params, n + 1, p)?;
    let inner = build_k_interval(bundle, params, n, p)?;
    let c = g_checked(bundle, p + 1)?.center();
    let f = &bundle.f;
    bundle.f.splice(
        &outer,
        &[
            (outer.lo.clone(), f.eval_unchecked(&outer.lo)),
            (inner.lo.clone(), c.clone()),
            (inner.hi.clone(), c),
            (outer.hi.clone(), f.eval_unchecked(&outer.hi)),
        ],
    )
}

fn with_bundle_flags(mut prog: BlockProgram, bundle: &LimitMapBundle) -> BlockProgram {
    prog.frontier = bundle.frontier_intervals();
    prog.exact_horizon = Some(bundle.exact_horizon);
    prog
}

/// `φ_{i,n}∘λ_i, η_i, …, η_i` (`2^{k_i} − 1` copies of `η_i`), repeated.
pub fn build_g1inf(
    bundle: &LimitMapBundle,
    params: &StageParams,
    i: usize,
    n: usize,
) -> Result<BlockProgram> {
    let lambda = build_lambda(bundle, params.block(i)?)?;
    let phi = build_phi_stage(bundle, params, i, n)?;
    let eta = bundle.f.compose(&lambda);
    let maps = vec![
        (format!("phi_{i}_{n}_lambda_{i}"), phi.compose(&lambda)),
        (format!("eta_{i}"), eta),
    ];
    let cycle = vec![Run { map: 0, len: 1 }, Run { map: 1, len: params.period(i)? - 1 }];
    let prog = BlockProgram::new(maps, Vec::new(), TailPolicy::Cycle(cycle))?;
    Ok(with_bundle_flags(prog, bundle))
}

/// Blocks `B_n = (φ_{n,n}∘λ_n, η_n × (2^{k_n} − 1)) × a_n, ψ_{n,n}`, then
/// `f_D` forever.
pub fn build_main_nds(bundle: &LimitMapBundle, params: &StageParams) -> Result<BlockProgram> {
    params.validate(bundle.atlas.depth)?;
    let mut maps = Vec::new();
    let mut stages = Vec::new();
    for i in 1..=params.num_stages() {
        let lambda = build_lambda(bundle, params.block(i)?)?;
        let phi = build_phi_stage(bundle, params, i, i)?;
        let psi = build_psi_stage(bundle, params, i, i)?;
        let base = maps.len();
        maps.push((format!("phi_{i}_{i}_lambda_{i}"), phi.compose(&lambda)));
        maps.push((format!("eta_{i}"), bundle.f.compose(&lambda)));
        maps.push((format!("psi_{i}_{i}"), psi));
        stages.push(Stage {
            body: vec![
                Run { map: base, len: 1 },
                Run { map: base + 1, len: params.period(i)? - 1 },
            ],
            reps: params.a(i)?,
            coda: vec![Run { map: base + 2, len: 1 }],
        });
    }
    let tail = maps.len();
    maps.push(("f".to_string(), bundle.f.clone()));
    let prog = BlockProgram::new(maps, stages, TailPolicy::Repeat(tail))?;
    Ok(with_bundle_flags(prog, bundle))
}

/// Code of `G_{p_i}`, i.e. `n_i 0̄`.
pub fn perturbed_code(params: &StageParams, i: usize) -> Result<Code> {
    Ok(Code::with_tail(params.block(i)?, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::Atlas;

    fn bundle() -> LimitMapBundle {
        LimitMapBundle::build(Atlas::build(8, half(), 4).unwrap()).unwrap()
    }

    fn c(s: &str) -> Code {
        s.parse().unwrap()
    }

    fn compose_run(maps: &[&PLMap]) -> PLMap {
        maps.iter().fold(PLMap::identity(), |acc, m| m.compose(&acc))
    }

    #[test]
    fn lambda_swaps_tail_intervals() {
        let b = bundle();
        for k in 1..=3 {
            let w = Block::ones(k);
            let lam = build_lambda(&b, &w).unwrap();
            let g0 = b.atlas.locate(&Code::with_tail(&w, 0)).unwrap();
            let g1 = b.atlas.locate(&Code::with_tail(&w, 1)).unwrap();
            assert_eq!(lam.image(g0), *g1);
            assert_eq!(lam.eval(&g0.lo).unwrap(), g1.hi);
            assert!(lam.is_surjective());
            let twice = lam.compose(&lam);
            for e in b.atlas.entries() {
                if e.code.starts_with(&w) {
                    assert_eq!(twice.eval(&e.g.lo).unwrap(), e.g.lo);
                    assert_eq!(twice.eval(&e.g.center()).unwrap(), e.g.center());
                } else {
                    assert_eq!(lam.eval(&e.g.center()).unwrap(), e.g.center());
                }
            }
        }
    }

    #[test]
    fn lambda_on_general_block() {
        let b = bundle();
        let w: Block = "01".parse().unwrap();
        let lam = build_lambda(&b, &w).unwrap();
        let g = b.atlas.locate(&c("01|0")).unwrap();
        assert_eq!(lam.image(g), *b.atlas.locate(&c("01|1")).unwrap());
        assert!(lam.is_surjective());
    }

    #[test]
    fn eta_properties() {
        let b = bundle();
        let params = StageParams::default();
        let mut last = None;
        for i in 1..=3 {
            let w = params.block(i).unwrap();
            let eta = build_eta_stage(&b, w).unwrap();
            let period = params.period(i).unwrap();
            let j = stage_hull(&b, w).unwrap();
            // periodicity of G_{p_i} and a single visit to J_i from G_0
            let start = b.atlas.g_at(0).unwrap().clone();
            let mut cur = start.clone();
            let mut visits = Vec::new();
            for t in 1..=period {
                cur = eta.image(&cur);
                if j.contains_interval(&cur) {
                    visits.push(t);
                }
                if t < period {
                    assert_ne!(cur, start);
                }
            }
            assert_eq!(cur, start);
            assert_eq!(visits, vec![params.p(i).unwrap() as u64]);
            let gp = b.atlas.locate(&perturbed_code(&params, i).unwrap()).unwrap().clone();
            let mut cur = gp.clone();
            for _ in 0..period {
                cur = eta.image(&cur);
            }
            assert_eq!(cur, gp);
            // uniform distance bound
            let d = eta.sup_distance(&b.f);
            assert!(d <= b.f.image(&j).len());
            if let Some(prev) = last {
                assert!(d < prev);
            }
            last = Some(d);
            assert!(eta.is_surjective());
        }
    }

    #[test]
    fn k_stack() {
        let b = bundle();
        let params = StageParams::default();
        let g0 = b.atlas.g_at(0).unwrap().clone();
        let k1 = build_k_interval(&b, &params, 1, 0).unwrap();
        assert!(k1.len() > epsilon0(&b).unwrap());
        for n in 0..4 {
            let (a, bb) = (
                build_k_interval(&b, &params, n, 0).unwrap(),
                build_k_interval(&b, &params, n + 1, 0).unwrap(),
            );
            assert!(bb.contains_interval(&a) && a != bb);
            assert!(g0.contains_interval(&bb));
            assert_eq!(a.center(), g0.center());
        }
        for j in -5..20 {
            let k = build_k_interval(&b, &params, 2, j).unwrap();
            assert_eq!(b.f.image(&k), build_k_interval(&b, &params, 2, j + 1).unwrap());
        }
        assert!(matches!(
            build_k_interval(&b, &params, 1, 1000),
            Err(NdsError::Horizon { .. })
        ));
    }

    #[test]
    fn phi_stage_folds() {
        let b = bundle();
        let params = StageParams::default();
        for i in 1..=3 {
            let lam = build_lambda(&b, params.block(i).unwrap()).unwrap();
            let phi = build_phi_stage(&b, &params, i, i).unwrap();
            assert!(phi.is_surjective());
            let site = build_k_interval(&b, &params, i, -params.q(i).unwrap()).unwrap();
            let kp = build_k_interval(&b, &params, i, params.p(i).unwrap()).unwrap();
            let k0 = build_k_interval(&b, &params, i, 0).unwrap();
            assert_eq!(lam.image(&kp), site);
            let g = phi.compose(&lam);
            assert_eq!(g.image(&kp), k0);
            assert_eq!(g.lap_count_on(&kp), 3);
            for e in b.atlas.entries() {
                if !e.g.contains(&site.center()) {
                    assert_eq!(phi.eval(&e.g.center()).unwrap(), b.f.eval(&e.g.center()).unwrap());
                }
            }
        }
        assert!(build_phi_stage(&b, &params, 1, 0).is_err());
    }

    #[test]
    fn g1inf_laps_along_orbit() {
        let b = bundle();
        let params = StageParams::default();
        let (i, n) = (2, 2);
        let prog = build_g1inf(&b, &params, i, n).unwrap();
        assert_eq!(prog.label_at(1), "phi_2_2_lambda_2");
        assert_eq!(prog.label_at(5), "phi_2_2_lambda_2");
        assert_eq!(prog.label_at(4), "eta_2");
        let p = params.p(i).unwrap();
        let period = params.period(i).unwrap();
        let kp = build_k_interval(&b, &params, n, p).unwrap();
        let mut maps = Vec::new();
        for m in 1..=2 * period {
            maps.push(prog.map_at(m));
            let comp = compose_run(&maps);
            let j = (p + m as i64).rem_euclid(period as i64);
            assert_eq!(comp.image(&kp), build_k_interval(&b, &params, n, j).unwrap());
            let laps = if m <= period { 3 } else { 9 };
            assert_eq!(comp.lap_count_on(&kp), laps, "m = {m}");
        }
    }

    #[test]
    fn psi_stage_collapses() {
        let b = bundle();
        let params = StageParams::default();
        for i in 1..=3 {
            let psi = build_psi_stage(&b, &params, i, i).unwrap();
            let p = params.p(i).unwrap();
            let kn = build_k_interval(&b, &params, i, p).unwrap();
            let kn1 = build_k_interval(&b, &params, i + 1, p).unwrap();
            let target = b.atlas.g_at(p + 1).unwrap();
            assert_eq!(psi.image(&kn), Interval::new(target.center(), target.center()));
            assert!(target.contains(&psi.eval(&kn1.lo).unwrap()));
            assert!(target.contains(&psi.eval(&kn1.hi).unwrap()));
            assert_eq!(psi.sup_distance_on(&b.f, &Interval::new(zero(), kn1.lo.clone())), zero());
            assert_eq!(psi.sup_distance_on(&b.f, &Interval::new(kn1.hi.clone(), one())), zero());
            assert!(psi.is_surjective());
        }
    }

    #[test]
    fn main_program_layout() {
        let b = bundle();
        let params = StageParams::default();
        let prog = build_main_nds(&b, &params).unwrap();
        assert_eq!(prog.stages().iter().map(|s| s.len()).collect::<Vec<_>>(), vec![7, 21, 57]);
        assert_eq!(prog.label_at(1), "phi_1_1_lambda_1");
        assert_eq!(prog.label_at(7), "psi_1_1");
        assert_eq!(prog.label_at(86), "f");
        assert!(prog.maps().iter().all(PLMap::is_surjective));
        assert_eq!(prog.exact_horizon, Some(128));
    }

    #[test]
    fn rejects_bad_stage_params() {
        let b = bundle();
        let mut p = StageParams::default();
        p.stages.swap(0, 1);
        assert!(build_main_nds(&b, &p).is_err());
        let narrow = StageParams {
            relative_widths: Some(vec![q(1, 8), q(1, 4), q(1, 2), q(3, 4), q(7, 8)]),
            ..StageParams::default()
        };
        assert!(build_main_nds(&b, &narrow).is_err());
    }
}
