//! Finite-depth blow-up of the adding-machine orbit.
//!
//! Every code of depth `≤ D` becomes a closed interval `G(c)`; the intervals
//! are laid out left to right in the order of the codes, with `G(0̄)` touching
//! 0 and `G(1̄)` touching 1. The limit map `f_D` sends each `G(c)` increasingly
//! and linearly onto `G(α(c))` and interpolates across the gaps.

use std::collections::HashMap;

use num::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{NdsError, Result};
use crate::plmap::PLMap;
use crate::rational::{de_q, inv_pow, one, ser_q, zero, Interval, Q};
use crate::symbolic::{Block, Code};

pub const MAX_DEPTH: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub code: Code,
    #[serde(flatten)]
    pub g: Interval,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hull {
    pub n: usize,
    pub k: u64,
    #[serde(flatten)]
    pub hull: Interval,
}

#[derive(Clone, Debug)]
pub struct Atlas {
    pub depth: usize,
    pub rho: Q,
    pub weight_base: u64,
    entries: Vec<Entry>,
    gaps: Vec<Interval>,
    // hulls[n - 1][e(w)] for n = 1..=depth
    hulls: Vec<Vec<Interval>>,
    index: HashMap<Code, usize>,
}

#[derive(Serialize, Deserialize)]
struct AtlasJson {
    depth: usize,
    #[serde(serialize_with = "ser_q", deserialize_with = "de_q")]
    rho: Q,
    weight_base: u64,
    entries: Vec<Entry>,
    gaps: Vec<Interval>,
    cylinder_hulls: Vec<Hull>,
}

impl Atlas {
    pub fn build(depth: usize, rho: Q, weight_base: u64) -> Result<Atlas> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(NdsError::InvalidParam(format!(
                "atlas depth must be in 1..={MAX_DEPTH}, got {depth}"
            )));
        }
        if rho <= zero() || rho >= one() {
            return Err(NdsError::InvalidParam("rho must lie in (0,1)".into()));
        }
        if weight_base < 2 {
            return Err(NdsError::InvalidParam("weight base must be ≥ 2".into()));
        }
        let mut codes = Code::all_up_to(depth);
        codes.sort();
        let thetas: Vec<Q> = codes.iter().map(Code::theta).collect();

        let weight = |c: &Code| inv_pow(weight_base, c.depth());
        let total: Q = codes.iter().map(weight).sum();
        let gap_scale = one() - &rho;

        let mut entries = Vec::with_capacity(codes.len());
        let mut gaps = Vec::with_capacity(codes.len() - 1);
        let mut left = zero();
        for (i, code) in codes.iter().enumerate() {
            let right = &left + &rho * weight(code) / &total;
            entries.push(Entry { code: code.clone(), g: Interval::new(left, right.clone()) });
            left = right;
            if i + 1 < codes.len() {
                let next = &left + &gap_scale * (&thetas[i + 1] - &thetas[i]);
                gaps.push(Interval::new(left.clone(), next.clone()));
                left = next;
            }
        }
        debug_assert_eq!(left, one());

        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.code.clone(), i))
            .collect();

        let mut hulls: Vec<Vec<Option<Interval>>> =
            (1..=depth).map(|n| vec![None; 1 << n]).collect();
        for e in &entries {
            let mut k = 0u64;
            for n in 1..=depth {
                k |= (e.code.bit(n - 1) as u64) << (n - 1);
                let slot = &mut hulls[n - 1][k as usize];
                *slot = Some(match slot.take() {
                    None => e.g.clone(),
                    Some(h) => Interval::new(h.lo.min(e.g.lo.clone()), h.hi.max(e.g.hi.clone())),
                });
            }
        }
        let hulls = hulls
            .into_iter()
            .map(|row| row.into_iter().map(|h| h.expect("every cylinder holds a code")).collect())
            .collect();

        Ok(Atlas { depth, rho, weight_base, entries, gaps, hulls, index })
    }

    pub fn default_params() -> (usize, Q, u64) {
        (12, crate::rational::half(), 4)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn gaps(&self) -> &[Interval] {
        &self.gaps
    }

    pub fn exact_horizon(&self) -> u64 {
        1 << (self.depth - 1)
    }

    pub fn locate(&self, c: &Code) -> Option<&Interval> {
        self.index.get(c).map(|&i| &self.entries[i].g)
    }

    pub fn require(&self, c: &Code) -> Result<&Interval> {
        self.locate(c).ok_or_else(|| NdsError::Depth {
            code: c.to_string(),
            needed: c.depth(),
            depth: self.depth,
        })
    }

    /// `G_j`, the interval whose code has orbit index `j`.
    pub fn g_at(&self, j: i64) -> Result<&Interval> {
        self.require(&Code::from_orbit_index(&BigInt::from(j)))
    }

    pub fn position(&self, c: &Code) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// `J(n, k)`: hull of every entry whose code starts with the `n`-block of
    /// evaluation `k`. `J(0, 0) = [0, 1]`.
    pub fn hull(&self, n: usize, k: u64) -> Option<Interval> {
        if n == 0 {
            return (k == 0).then(|| Interval::new(zero(), one()));
        }
        self.hulls.get(n - 1)?.get(k as usize).cloned()
    }

    pub fn hull_of(&self, word: &Block) -> Option<Interval> {
        self.hull(word.len(), word.evaluate())
    }

    /// Entry whose `G` contains `x`.
    pub fn code_at(&self, x: &Q) -> Option<&Entry> {
        let i = self.entries.partition_point(|e| e.g.hi < *x);
        self.entries.get(i).filter(|e| e.g.contains(x))
    }

    /// `(code, relative position in G)` for points of the blown-up set.
    pub fn symbolic_coords(&self, x: &Q) -> Option<(Code, Q)> {
        self.code_at(x).map(|e| (e.code.clone(), e.g.rel(x)))
    }

    pub fn total_g_length(&self) -> Q {
        self.entries.iter().map(|e| e.g.len()).sum()
    }

    pub fn total_gap_length(&self) -> Q {
        self.gaps.iter().map(Interval::len).sum()
    }

    /// Smallest gap between two θ-consecutive depth-`n` cylinder hulls.
    pub fn min_hull_gap(&self, n: usize) -> Q {
        let mut hulls: Vec<&Interval> = self.hulls[n - 1].iter().collect();
        hulls.sort_by(|a, b| a.lo.cmp(&b.lo));
        hulls
            .windows(2)
            .map(|w| &w[1].lo - &w[0].hi)
            .min()
            .expect("at least two cylinders")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut cylinder_hulls = Vec::new();
        for n in 1..=self.depth {
            for (k, h) in self.hulls[n - 1].iter().enumerate() {
                cylinder_hulls.push(Hull { n, k: k as u64, hull: h.clone() });
            }
        }
        serde_json::to_value(AtlasJson {
            depth: self.depth,
            rho: self.rho.clone(),
            weight_base: self.weight_base,
            entries: self.entries.clone(),
            gaps: self.gaps.clone(),
            cylinder_hulls,
        })
        .expect("atlas serializes")
    }

    /// Reads an atlas file; the layout is rebuilt from its parameters and
    /// checked against the stored entries.
    pub fn from_json(v: &serde_json::Value) -> Result<Atlas> {
        let raw: AtlasJson =
            serde_json::from_value(v.clone()).map_err(|e| NdsError::Parse(e.to_string()))?;
        let atlas = Atlas::build(raw.depth, raw.rho, raw.weight_base)?;
        let same = raw.entries.len() == atlas.entries.len()
            && raw
                .entries
                .iter()
                .zip(&atlas.entries)
                .all(|(a, b)| a.code == b.code && a.g == b.g);
        if !same {
            return Err(NdsError::Parse("atlas entries do not match its parameters".into()));
        }
        Ok(atlas)
    }
}

/// The finite-depth limit map together with the bookkeeping that says where
/// it is exact.
#[derive(Clone, Debug)]
pub struct LimitMapBundle {
    pub atlas: Atlas,
    pub f: PLMap,
    pub exact_horizon: u64,
    /// Codes whose `α`-image is deeper than the atlas.
    pub frontier_codes: Vec<Code>,
}

impl LimitMapBundle {
    pub fn build(atlas: Atlas) -> Result<LimitMapBundle> {
        let mut points: Vec<(Q, Q)> = Vec::with_capacity(2 * atlas.entries.len());
        let mut frontier_codes = Vec::new();
        for e in &atlas.entries {
            let next = e.code.succ();
            let image = match atlas.locate(&next) {
                Some(g) => g.clone(),
                None => {
                    frontier_codes.push(e.code.clone());
                    frontier_image(&atlas, &next)
                }
            };
            points.push((e.g.lo.clone(), image.lo));
            points.push((e.g.hi.clone(), image.hi));
        }
        let f = PLMap::from_sorted_points(points)?;
        let exact_horizon = atlas.exact_horizon();
        Ok(LimitMapBundle { atlas, f, exact_horizon, frontier_codes })
    }

    pub fn frontier_intervals(&self) -> Vec<Interval> {
        self.frontier_codes
            .iter()
            .filter_map(|c| self.atlas.locate(c).cloned())
            .collect()
    }

    /// Pushes `G(0̄)` forward `steps` times through `f_D` and compares each
    /// image with `G(α^m(0̄))`.
    pub fn verify_orbit_action(&self, steps: u64) -> Result<OrbitActionReport> {
        if steps > self.exact_horizon {
            return Err(NdsError::Horizon { requested: steps, horizon: self.exact_horizon });
        }
        let mut code = Code::zeros();
        let mut current = self.atlas.require(&code)?.clone();
        let mut images = Vec::with_capacity(steps as usize);
        for m in 1..=steps {
            current = self.f.image(&current);
            code = code.succ();
            let expected = self.atlas.require(&code)?;
            if *expected != current {
                return Ok(OrbitActionReport {
                    steps,
                    matches: m - 1,
                    images,
                    first_failure: Some(m),
                });
            }
            images.push(code.clone());
        }
        Ok(OrbitActionReport { steps, matches: steps, images, first_failure: None })
    }

    /// Checks that `J(n, ·)` is carried cyclically by `f_D`: each step maps
    /// `J(n, k)` onto `J(n, k+1 mod 2^n)`, and the first return happens at
    /// exactly `2^n` steps. Only as many steps as the exact horizon allows
    /// are taken; when `2^n` exceeds it, the orbit of `J(n, 0)` is followed
    /// for the whole horizon.
    pub fn hull_cycle_check(&self, n: usize) -> HullCycleReport {
        let period = 1u64 << n;
        let starts: Vec<u64> = if period <= self.exact_horizon {
            (0..period).collect()
        } else {
            vec![0]
        };
        let steps = period.min(self.exact_horizon);
        let mut failures = Vec::new();
        for &k in &starts {
            let start = self.atlas.hull(n, k).expect("hull exists");
            let mut cur = start.clone();
            for t in 1..=steps {
                cur = self.f.image(&cur);
                let want = self.atlas.hull(n, (k + t) % period).expect("hull exists");
                if cur != want || (t < period && cur == start) {
                    failures.push((k, t));
                    break;
                }
            }
        }
        HullCycleReport {
            n,
            period,
            steps_checked: steps,
            starts_checked: starts.len(),
            full_return_checked: period <= self.exact_horizon,
            failures,
        }
    }
}

/// Where a frontier code's interval goes: the whole gap between the
/// θ-neighbours of its true image.
fn frontier_image(atlas: &Atlas, target: &Code) -> Interval {
    let i = atlas.entries.partition_point(|e| e.code < *target);
    // the target is deeper than any entry, so it sits strictly inside a gap
    debug_assert!(i > 0 && i < atlas.entries.len());
    Interval::new(atlas.entries[i - 1].g.hi.clone(), atlas.entries[i].g.lo.clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitActionReport {
    pub steps: u64,
    pub matches: u64,
    pub images: Vec<Code>,
    pub first_failure: Option<u64>,
}

impl OrbitActionReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HullCycleReport {
    pub n: usize,
    pub period: u64,
    pub steps_checked: u64,
    pub starts_checked: usize,
    pub full_return_checked: bool,
    pub failures: Vec<(u64, u64)>,
}

impl HullCycleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{half, pow2, q, qi};

    fn c(s: &str) -> Code {
        s.parse().unwrap()
    }

    #[test]
    fn depth_one_layout() {
        let a = Atlas::build(1, half(), 4).unwrap();
        let codes: Vec<String> = a.entries().iter().map(|e| e.code.to_string()).collect();
        assert_eq!(codes, ["|0", "0|1", "1|0", "|1"]);
        assert_eq!(a.total_g_length() + a.total_gap_length(), one());
    }

    #[test]
    fn g_zero_length_at_default_depth() {
        let a = Atlas::build(12, half(), 4).unwrap();
        // W = 3 - 2^{-12}
        let w = qi(3) - one() / pow2(12);
        assert_eq!(a.locate(&Code::zeros()).unwrap().len(), half() / w);
        assert_eq!(a.entries().len(), 1 << 13);
        assert_eq!(a.total_g_length(), half());
    }

    #[test]
    fn anchors_and_missing_codes() {
        let a = Atlas::build(5, q(1, 3), 3).unwrap();
        assert_eq!(a.locate(&Code::zeros()).unwrap().lo, zero());
        assert_eq!(a.locate(&Code::ones()).unwrap().hi, one());
        assert!(a.locate(&c("000001|0")).is_none());
        assert_eq!(a.total_g_length() + a.total_gap_length(), one());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Atlas::build(0, half(), 4).is_err());
        assert!(Atlas::build(3, zero(), 4).is_err());
        assert!(Atlas::build(3, one(), 4).is_err());
        assert!(Atlas::build(3, half(), 1).is_err());
    }

    #[test]
    fn one_code_per_deeper_cylinder() {
        let d = 6;
        let a = Atlas::build(d, half(), 4).unwrap();
        let mut seen = std::collections::HashSet::new();
        for e in a.entries() {
            let w = crate::symbolic::evaluate_bits(&e.code.expand(d + 1));
            assert!(seen.insert(w));
        }
        assert_eq!(seen.len(), 1 << (d + 1));
    }

    #[test]
    fn limit_map_moves_g_intervals() {
        let b = LimitMapBundle::build(Atlas::build(6, half(), 4).unwrap()).unwrap();
        let g0 = b.atlas.locate(&Code::zeros()).unwrap();
        assert_eq!(b.f.image(g0), *b.atlas.locate(&c("1|0")).unwrap());
        let g1 = b.atlas.locate(&Code::ones()).unwrap();
        assert_eq!(b.f.image(g1), *g0);
        assert!(b.f.is_surjective());
        assert_eq!(b.frontier_codes, vec![c("111111|0")]);
    }

    #[test]
    fn orbit_action_examples() {
        let b = LimitMapBundle::build(Atlas::build(8, half(), 4).unwrap()).unwrap();
        let r = b.verify_orbit_action(3).unwrap();
        assert_eq!(r.images, vec![c("1|0"), c("01|0"), c("11|0")]);
        assert!(b.verify_orbit_action(0).unwrap().passed());
        let full = b.verify_orbit_action(128).unwrap();
        assert!(full.passed());
        assert_eq!(full.matches, 128);
        assert!(matches!(b.verify_orbit_action(129), Err(NdsError::Horizon { .. })));
    }

    #[test]
    fn hulls_nest() {
        let a = Atlas::build(6, half(), 4).unwrap();
        for n in 1..6 {
            for k in 0..(1u64 << n) {
                let outer = a.hull(n, k).unwrap();
                for ext in [k, k | (1 << n)] {
                    assert!(outer.contains_interval(&a.hull(n + 1, ext).unwrap()));
                }
            }
        }
    }

    #[test]
    fn hull_cycles() {
        let b = LimitMapBundle::build(Atlas::build(6, half(), 4).unwrap()).unwrap();
        for n in 1..=6 {
            let r = b.hull_cycle_check(n);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn symbolic_coords_roundtrip() {
        let a = Atlas::build(4, half(), 4).unwrap();
        let g = a.locate(&c("01|1")).unwrap();
        let x = g.at(&q(1, 3));
        assert_eq!(a.symbolic_coords(&x), Some((c("01|1"), q(1, 3))));
        assert!(a.symbolic_coords(&a.gaps()[0].center()).is_none());
    }

    #[test]
    fn json_roundtrip_checks_layout() {
        let a = Atlas::build(3, half(), 4).unwrap();
        let v = a.to_json();
        let back = Atlas::from_json(&v).unwrap();
        assert_eq!(back.entries().len(), a.entries().len());
        let mut bad = v.clone();
        bad["entries"][0]["hi"] = serde_json::json!("1/1000");
        assert!(Atlas::from_json(&bad).is_err());
    }
}
