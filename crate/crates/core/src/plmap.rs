//! Continuous piecewise-linear self-maps of `[0,1]` with exact rational
//! breakpoints.

use std::cmp::Ordering;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{NdsError, Result};
use crate::rational::{de_qvec, fmt_q, one, q, ser_qvec, zero, Interval, Q};

/// Graph through `(x_i, y_i)` with `0 = x_0 < … < x_m = 1`, linear between
/// consecutive breakpoints. Kept canonical: no interior breakpoint has
/// collinear neighbours.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct PLMap {
    xs: Vec<Q>,
    ys: Vec<Q>,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    #[serde(serialize_with = "ser_qvec", deserialize_with = "de_qvec")]
    x: Vec<Q>,
    #[serde(serialize_with = "ser_qvec", deserialize_with = "de_qvec")]
    y: Vec<Q>,
}

impl TryFrom<RawMap> for PLMap {
    type Error = NdsError;
    fn try_from(r: RawMap) -> Result<PLMap> {
        PLMap::new(r.x, r.y)
    }
}

impl From<PLMap> for RawMap {
    fn from(m: PLMap) -> RawMap {
        RawMap { x: m.xs, y: m.ys }
    }
}

impl PLMap {
    pub fn new(xs: Vec<Q>, ys: Vec<Q>) -> Result<PLMap> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(NdsError::InvalidMap(
                "need matching x/y lists with at least two points".into(),
            ));
        }
        if xs[0] != zero() || xs[xs.len() - 1] != one() {
            return Err(NdsError::InvalidMap("breakpoints must span [0,1]".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NdsError::InvalidMap(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if let Some(y) = ys.iter().find(|y| **y < zero() || **y > one()) {
            return Err(NdsError::InvalidMap(format!("value {} outside [0,1]", fmt_q(y))));
        }
        Ok(PLMap::canonical(xs, ys))
    }

    /// Builds from points that may repeat an abscissa (same value) and are
    /// sorted by `x`. Panics on inconsistent duplicates; for internal use.
    pub(crate) fn from_sorted_points(points: Vec<(Q, Q)>) -> Result<PLMap> {
        let mut xs: Vec<Q> = Vec::with_capacity(points.len());
        let mut ys: Vec<Q> = Vec::with_capacity(points.len());
        for (x, y) in points {
            if let Some(last) = xs.last() {
                match last.cmp(&x) {
                    Ordering::Equal => {
                        if ys.last() != Some(&y) {
                            return Err(NdsError::InvalidMap(format!(
                                "discontinuity at x = {}",
                                fmt_q(&x)
                            )));
                        }
                        continue;
                    }
                    Ordering::Greater => {
                        return Err(NdsError::InvalidMap("points not sorted".into()))
                    }
                    Ordering::Less => {}
                }
            }
            xs.push(x);
            ys.push(y);
        }
        PLMap::new(xs, ys)
    }

    fn canonical(xs: Vec<Q>, ys: Vec<Q>) -> PLMap {
        let mut cx: Vec<Q> = Vec::with_capacity(xs.len());
        let mut cy: Vec<Q> = Vec::with_capacity(ys.len());
        for (x, y) in xs.into_iter().zip(ys) {
            while cx.len() >= 2 {
                let n = cx.len();
                let (x0, y0, x1, y1) = (&cx[n - 2], &cy[n - 2], &cx[n - 1], &cy[n - 1]);
                if (y1 - y0) * (&x - x1) == (&y - y1) * (x1 - x0) {
                    cx.pop();
                    cy.pop();
                } else {
                    break;
                }
            }
            cx.push(x);
            cy.push(y);
        }
        PLMap { xs: cx, ys: cy }
    }

    pub fn identity() -> PLMap {
        PLMap { xs: vec![zero(), one()], ys: vec![zero(), one()] }
    }

    pub fn constant(c: Q) -> Result<PLMap> {
        PLMap::new(vec![zero(), one()], vec![c.clone(), c])
    }

    /// `1 - |1 - 2x|`.
    pub fn tent() -> PLMap {
        PLMap { xs: vec![zero(), q(1, 2), one()], ys: vec![zero(), one(), zero()] }
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.xs
    }

    pub fn values(&self) -> &[Q] {
        &self.ys
    }

    pub fn num_pieces(&self) -> usize {
        self.xs.len() - 1
    }

    /// Index `i` of the piece `[x_i, x_{i+1}]` containing `x` (the left one
    /// at a breakpoint).
    pub fn piece(&self, x: &Q) -> usize {
        match self.xs.binary_search(x) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, x: &Q) -> Result<Q> {
        if *x < zero() || *x > one() {
            return Err(NdsError::Domain(fmt_q(x)));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &Q) -> Q {
        match self.xs.binary_search(x) {
            Ok(i) => self.ys[i].clone(),
            Err(i) => {
                let (x0, x1) = (&self.xs[i - 1], &self.xs[i]);
                let (y0, y1) = (&self.ys[i - 1], &self.ys[i]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    pub fn slope(&self, piece: usize) -> Q {
        (&self.ys[piece + 1] - &self.ys[piece]) / (&self.xs[piece + 1] - &self.xs[piece])
    }

    /// `self ∘ inner`, exact.
    pub fn compose(&self, inner: &PLMap) -> PLMap {
        let mut xs: Vec<Q> = Vec::with_capacity(inner.xs.len() + self.xs.len());
        for i in 0..inner.num_pieces() {
            let (x0, x1) = (&inner.xs[i], &inner.xs[i + 1]);
            let (y0, y1) = (&inner.ys[i], &inner.ys[i + 1]);
            xs.push(x0.clone());
            if y0 == y1 {
                continue;
            }
            let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            // outer breakpoints strictly inside the image of this piece
            let start = match self.xs.binary_search(lo) {
                Ok(j) => j + 1,
                Err(j) => j,
            };
            let end = match self.xs.binary_search(hi) {
                Ok(j) => j,
                Err(j) => j,
            };
            let mut cuts: Vec<Q> = self.xs[start..end]
                .iter()
                .map(|b| x0 + (b - y0) * (x1 - x0) / (y1 - y0))
                .collect();
            if y0 > y1 {
                cuts.reverse();
            }
            xs.extend(cuts);
        }
        xs.push(one());
        let ys = xs.iter().map(|x| self.eval_unchecked(&inner.eval_unchecked(x))).collect();
        PLMap::canonical(xs, ys)
    }

    fn merged_breakpoints(&self, other: &PLMap) -> Vec<Q> {
        let mut xs: Vec<Q> = self.xs.iter().chain(other.xs.iter()).cloned().collect();
        xs.sort();
        xs.dedup();
        xs
    }

    /// `‖f − g‖∞`, attained on the merged breakpoint set.
    pub fn sup_distance(&self, other: &PLMap) -> Q {
        self.merged_breakpoints(other)
            .iter()
            .map(|x| (self.eval_unchecked(x) - other.eval_unchecked(x)).abs())
            .max()
            .unwrap_or_else(zero)
    }

    /// `‖f − g‖∞` restricted to `[lo, hi]`.
    pub fn sup_distance_on(&self, other: &PLMap, on: &Interval) -> Q {
        let mut xs: Vec<Q> = self
            .merged_breakpoints(other)
            .into_iter()
            .filter(|x| on.contains(x))
            .collect();
        xs.push(on.lo.clone());
        xs.push(on.hi.clone());
        xs.iter()
            .map(|x| (self.eval_unchecked(x) - other.eval_unchecked(x)).abs())
            .max()
            .unwrap_or_else(zero)
    }

    /// Laps: maximal monotone pieces. Constant pieces join the lap on their
    /// left; a leading constant run joins the first monotone lap; a constant
    /// map has one lap.
    pub fn lap_count(&self) -> usize {
        lap_count_of_slopes((0..self.num_pieces()).map(|i| self.slope(i)))
    }

    /// Laps of the restriction to `on`.
    pub fn lap_count_on(&self, on: &Interval) -> usize {
        let pts = self.points_on(on);
        lap_count_of_slopes(pts.windows(2).map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)))
    }

    /// Breakpoints inside `on` together with its endpoints, as graph points.
    pub fn points_on(&self, on: &Interval) -> Vec<(Q, Q)> {
        let mut xs = vec![on.lo.clone()];
        xs.extend(self.xs.iter().filter(|x| on.lo < **x && **x < on.hi).cloned());
        if on.hi != on.lo {
            xs.push(on.hi.clone());
        }
        xs.into_iter()
            .map(|x| {
                let y = self.eval_unchecked(&x);
                (x, y)
            })
            .collect()
    }

    pub fn is_surjective(&self) -> bool {
        let min = self.ys.iter().min().expect("non-empty");
        let max = self.ys.iter().max().expect("non-empty");
        *min == zero() && *max == one()
    }

    /// `f([lo, hi])`, which is `[min, max]` over the endpoints and the
    /// interior breakpoints.
    pub fn image(&self, on: &Interval) -> Interval {
        let pts = self.points_on(on);
        let lo = pts.iter().map(|p| &p.1).min().expect("non-empty").clone();
        let hi = pts.iter().map(|p| &p.1).max().expect("non-empty").clone();
        Interval::new(lo, hi)
    }

    /// True when `f` is affine on `on` (no breakpoint strictly inside).
    pub fn is_affine_on(&self, on: &Interval) -> bool {
        !self.xs.iter().any(|x| on.lo < *x && *x < on.hi)
    }

    /// Some interval `[c, d]` on which `f` is affine, non-constant, and maps
    /// onto `target`. Pieces are searched left to right.
    pub fn affine_preimage(&self, target: &Interval) -> Option<Interval> {
        self.affine_preimages(target).into_iter().next()
    }

    /// Every interval inside a single non-constant piece that `f` maps
    /// onto `target`, left to right.
    pub fn affine_preimages(&self, target: &Interval) -> Vec<Interval> {
        let mut out = Vec::new();
        for i in 0..self.num_pieces() {
            let (y0, y1) = (&self.ys[i], &self.ys[i + 1]);
            if y0 == y1 {
                continue;
            }
            let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            if *lo <= target.lo && target.hi <= *hi {
                let (x0, x1) = (&self.xs[i], &self.xs[i + 1]);
                let inv = |y: &Q| x0 + (y - y0) * (x1 - x0) / (y1 - y0);
                let (a, b) = (inv(&target.lo), inv(&target.hi));
                out.push(if a <= b { Interval::new(a, b) } else { Interval::new(b, a) });
            }
        }
        out
    }

    /// Samples `(x, f(x))` on the grid `j / n`, `j = 0..=n`.
    pub fn sample(&self, n: u64) -> Vec<(Q, Q)> {
        (0..=n)
            .map(|j| {
                let x = Q::new(j.into(), n.into());
                let y = self.eval_unchecked(&x);
                (x, y)
            })
            .collect()
    }
}

impl PLMap {
    /// Replaces the graph over `on` by the polyline through `inner`, whose
    /// first and last points must sit on the current graph at the ends of
    /// `on`.
    pub fn splice(&self, on: &Interval, inner: &[(Q, Q)]) -> Result<PLMap> {
        let (first, last) = match (inner.first(), inner.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(NdsError::InvalidMap("empty splice".into())),
        };
        if first.0 != on.lo || last.0 != on.hi {
            return Err(NdsError::InvalidMap("splice must span its interval".into()));
        }
        if first.1 != self.eval(&on.lo)? || last.1 != self.eval(&on.hi)? {
            return Err(NdsError::InvalidMap("splice breaks continuity".into()));
        }
        let mut points: Vec<(Q, Q)> = Vec::with_capacity(self.xs.len() + inner.len());
        for (x, y) in self.xs.iter().zip(&self.ys) {
            if *x < on.lo {
                points.push((x.clone(), y.clone()));
            }
        }
        points.extend(inner.iter().cloned());
        for (x, y) in self.xs.iter().zip(&self.ys) {
            if *x > on.hi {
                points.push((x.clone(), y.clone()));
            }
        }
        PLMap::from_sorted_points(points)
    }
}

fn lap_count_of_slopes(slopes: impl Iterator<Item = Q>) -> usize {
    let mut laps = 0;
    let mut last_sign = 0i8;
    for s in slopes {
        let sign = if s.is_zero() {
            0
        } else if s.is_positive() {
            1
        } else {
            -1
        };
        if sign != 0 && sign != last_sign {
            laps += 1;
            last_sign = sign;
        }
    }
    laps.max(1)
}

/// Builds the map that is linear between the given graph points, which must
/// start at `x = 0` and end at `x = 1`.
pub fn from_points(points: &[(Q, Q)]) -> Result<PLMap> {
    PLMap::from_sorted_points(points.to_vec())
}
