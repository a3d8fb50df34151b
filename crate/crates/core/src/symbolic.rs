//! Symbolic dynamics on eventually-constant binary sequences.
//!
//! A [`Code`] stands for an infinite 0/1 sequence that ends in a constant
//! tail. These are exactly the points of the adding-machine orbit of `0̄`,
//! so everything here is finite and exact. A code is also a 2-adic integer:
//! the adding machine is `+1`, and [`Code::orbit_index`] is that integer.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::{BigInt, One};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{NdsError, Result};
use crate::rational::{inv_pow, Q};

pub type Bit = u8;

/// Eventually-constant sequence `block · tail tail tail …` in canonical form:
/// the block never ends with the tail bit.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Code {
    block: Vec<Bit>,
    tail: Bit,
}

/// Direction for the adding machine: `Forward` is `α`, `Backward` is `α⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Forward,
    Backward,
}

impl Code {
    /// Canonical code for `block · tail̄`; trailing letters equal to `tail`
    /// are absorbed.
    pub fn canonicalize(block: &[Bit], tail: Bit) -> Code {
        assert!(tail <= 1, "tail must be a bit");
        debug_assert!(block.iter().all(|&b| b <= 1));
        let mut block = block.to_vec();
        while block.last() == Some(&tail) {
            block.pop();
        }
        Code { block, tail }
    }

    pub fn zeros() -> Code {
        Code { block: vec![], tail: 0 }
    }

    pub fn ones() -> Code {
        Code { block: vec![], tail: 1 }
    }

    /// `word · t̄`.
    pub fn with_tail(word: &Block, tail: Bit) -> Code {
        Code::canonicalize(word.bits(), tail)
    }

    pub fn block(&self) -> &[Bit] {
        &self.block
    }

    pub fn tail(&self) -> Bit {
        self.tail
    }

    pub fn depth(&self) -> usize {
        self.block.len()
    }

    /// Symbol at 0-based position `i` of the infinite expansion.
    pub fn bit(&self, i: usize) -> Bit {
        self.block.get(i).copied().unwrap_or(self.tail)
    }

    pub fn expand(&self, n: usize) -> Vec<Bit> {
        (0..n).map(|i| self.bit(i)).collect()
    }

    /// Adding machine `α` (or its inverse): binary `+1` with the carry
    /// moving right, into the tail when needed.
    pub fn alpha(&self, step: Step) -> Code {
        // +1 flips leading 1s to 0 and the first 0 to 1; -1 is the mirror.
        let (flip_from, flip_to) = match step {
            Step::Forward => (1, 0),
            Step::Backward => (0, 1),
        };
        let mut block = self.block.clone();
        for b in block.iter_mut() {
            if *b == flip_from {
                *b = flip_to;
            } else {
                *b = flip_from;
                return Code::canonicalize(&block, self.tail);
            }
        }
        if self.tail == flip_from {
            // carry runs through the whole tail
            Code::canonicalize(&block, flip_to)
        } else {
            block.push(flip_from);
            Code::canonicalize(&block, self.tail)
        }
    }

    pub fn succ(&self) -> Code {
        self.alpha(Step::Forward)
    }

    pub fn pred(&self) -> Code {
        self.alpha(Step::Backward)
    }

    pub fn alpha_pow(&self, n: i64) -> Code {
        Code::from_orbit_index(&(self.orbit_index_big() + BigInt::from(n)))
    }

    pub fn starts_with(&self, word: &Block) -> bool {
        word.bits().iter().enumerate().all(|(i, &b)| self.bit(i) == b)
    }

    /// `τ_w`: identity off the cylinder of `w`, otherwise complements every
    /// symbol after the first `|w|`.
    pub fn tau(&self, word: &Block) -> Code {
        if !self.starts_with(word) {
            return self.clone();
        }
        let k = word.len();
        let mut block: Vec<Bit> = word.bits().to_vec();
        block.extend(self.block.iter().skip(k).map(|b| 1 - b));
        Code::canonicalize(&block, 1 - self.tail)
    }

    /// `η_w = α ∘ τ_w`.
    pub fn eta(&self, word: &Block) -> Code {
        self.tau(word).succ()
    }

    /// Cantor middle-third point `Σ 2·c_i / 3^i`, exact.
    pub fn theta(&self) -> Q {
        let mut acc = Q::from_integer(BigInt::from(0));
        for (i, &b) in self.block.iter().enumerate() {
            if b == 1 {
                acc += inv_pow(3, i + 1) * BigInt::from(2);
            }
        }
        if self.tail == 1 {
            // Σ_{i>L} 2/3^i = 3^{-L}
            acc += inv_pow(3, self.block.len());
        }
        acc
    }

    /// The unique `j` with `α^j(0̄) = self`.
    pub fn orbit_index(&self) -> i64 {
        assert!(self.depth() < 63, "orbit index overflows i64");
        let e = evaluate_bits(&self.block) as i64;
        if self.tail == 0 {
            e
        } else {
            e - (1i64 << self.depth())
        }
    }

    fn orbit_index_big(&self) -> BigInt {
        let mut e = BigInt::from(0);
        for &b in self.block.iter().rev() {
            e = e * 2 + BigInt::from(b);
        }
        if self.tail == 1 {
            e - (BigInt::one() << self.depth())
        } else {
            e
        }
    }

    /// Inverse of [`Code::orbit_index`]: the 2-adic expansion of `j`.
    pub fn from_orbit_index(j: &BigInt) -> Code {
        let tail: Bit = if j < &BigInt::from(0) { 1 } else { 0 };
        let mut bits = Vec::new();
        let mut v = j.clone();
        let stop = if tail == 1 { BigInt::from(-1) } else { BigInt::from(0) };
        while v != stop {
            let low = &v & BigInt::one();
            bits.push(if low.is_one() { 1 } else { 0 });
            v >>= 1; // arithmetic shift floors for negatives
        }
        Code::canonicalize(&bits, tail)
    }

    pub fn from_index(j: i64) -> Code {
        Code::from_orbit_index(&BigInt::from(j))
    }

    /// Least `t ≥ 1` with `η^t(self) = self`, searching at most `cap` steps.
    pub fn eta_period(&self, word: &Block, cap: u64) -> Option<u64> {
        let mut cur = self.eta(word);
        let mut t = 1;
        while t <= cap {
            if &cur == self {
                return Some(t);
            }
            cur = cur.eta(word);
            t += 1;
        }
        None
    }

    /// First 0-based position where the two expansions differ, if any.
    pub fn split_position(&self, other: &Code) -> Option<usize> {
        let n = self.depth().max(other.depth()) + 1;
        (0..n).find(|&i| self.bit(i) != other.bit(i))
    }

    /// All canonical codes of depth at most `max_depth`, unsorted.
    pub fn all_up_to(max_depth: usize) -> Vec<Code> {
        let mut out = vec![Code::zeros(), Code::ones()];
        for d in 1..=max_depth {
            for tail in 0..=1u8 {
                // last block letter is forced to 1 - tail
                for m in 0..(1u64 << (d - 1)) {
                    let mut block: Vec<Bit> = (0..d - 1).map(|i| ((m >> i) & 1) as Bit).collect();
                    block.push(1 - tail);
                    out.push(Code { block, tail });
                }
            }
        }
        out
    }
}

impl Ord for Code {
    /// Lexicographic order of the infinite expansions.
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.depth().max(other.depth()) + 1;
        for i in 0..n {
            match self.bit(i).cmp(&other.bit(i)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Code {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn bits_str(bits: &[Bit]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Result<Vec<Bit>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(NdsError::Parse(format!("not a binary word: {s:?}"))),
        })
        .collect()
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", bits_str(&self.block), self.tail)
    }
}

impl fmt::Debug for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Code({self})")
    }
}

impl FromStr for Code {
    type Err = NdsError;

    fn from_str(s: &str) -> Result<Code> {
        let (block, tail) = s
            .split_once('|')
            .ok_or_else(|| NdsError::Parse(format!("code must look like \"01|0\": {s:?}")))?;
        let tail = match tail.trim() {
            "0" => 0,
            "1" => 1,
            t => return Err(NdsError::Parse(format!("bad tail bit {t:?}"))),
        };
        Ok(Code::canonicalize(&parse_bits(block.trim())?, tail))
    }
}

impl Serialize for Code {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Code, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Finite binary word of length at least one.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Block(Vec<Bit>);

impl Block {
    pub fn new(bits: Vec<Bit>) -> Result<Block> {
        if bits.is_empty() {
            return Err(NdsError::InvalidParam("a block has length ≥ 1".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(NdsError::InvalidParam("block letters are bits".into()));
        }
        Ok(Block(bits))
    }

    pub fn ones(k: usize) -> Block {
        Block(vec![1; k.max(1)])
    }

    pub fn bits(&self) -> &[Bit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every block of length `k`, ordered by evaluation `e`.
    pub fn all(k: usize) -> Vec<Block> {
        (0..(1u64 << k)).map(|m| Block::from_value(m, k)).collect()
    }

    /// The `k`-block whose evaluation is `m` (least significant letter first).
    pub fn from_value(m: u64, k: usize) -> Block {
        Block((0..k).map(|i| ((m >> i) & 1) as Bit).collect())
    }

    /// `e(w) = Σ 2^{i-1} w_i`.
    pub fn evaluate(&self) -> u64 {
        evaluate_bits(&self.0)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bits_str(&self.0))
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block({self})")
    }
}

impl FromStr for Block {
    type Err = NdsError;

    fn from_str(s: &str) -> Result<Block> {
        Block::new(parse_bits(s.trim())?)
    }
}

impl Serialize for Block {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Block, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn evaluate_bits(bits: &[Bit]) -> u64 {
    bits.iter()
        .enumerate()
        .map(|(i, &b)| (b as u64) << i)
        .sum()
}

/// The set of sequences starting with a fixed block.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cylinder {
    pub code_word: Block,
}

impl Cylinder {
    pub fn new(code_word: Block) -> Self {
        Cylinder { code_word }
    }

    pub fn contains(&self, c: &Code) -> bool {
        c.starts_with(&self.code_word)
    }

    /// Cylinder-level image under `α`: the word plus one, modulo `2^k`.
    pub fn alpha(&self) -> Cylinder {
        let k = self.code_word.len();
        let v = (self.code_word.evaluate() + 1) % (1u64 << k);
        Cylinder::new(Block::from_value(v, k))
    }

    /// First return time of the cylinder to itself under `α`, checked both
    /// at cylinder level and on its extreme points `w0̄` and `w1̄`.
    pub fn first_return_time(&self, cap: u64) -> Option<u64> {
        let reps = [
            Code::with_tail(&self.code_word, 0),
            Code::with_tail(&self.code_word, 1),
        ];
        let mut cyl = self.alpha();
        let mut pts: Vec<Code> = reps.iter().map(Code::succ).collect();
        for t in 1..=cap {
            let back = cyl == *self;
            let pts_back = pts.iter().map(|p| self.contains(p)).collect::<Vec<_>>();
            if pts_back.iter().any(|&b| b != back) {
                // cylinder-level and point-level bookkeeping disagree
                return None;
            }
            if back {
                return Some(t);
            }
            cyl = cyl.alpha();
            pts = pts.iter().map(Code::succ).collect();
        }
        None
    }
}

/// η-orbit of `0̄` until it returns, at most `cap` points.
pub fn eta_orbit_of_zero(word: &Block, cap: usize) -> Vec<Code> {
    let start = Code::zeros();
    let mut out = vec![start.clone()];
    let mut cur = start.eta(word);
    while cur != start && out.len() < cap {
        out.push(cur.clone());
        cur = cur.eta(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn c(s: &str) -> Code {
        s.parse().unwrap()
    }

    fn b(s: &str) -> Block {
        s.parse().unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(Code::canonicalize(&[1, 0, 0], 0), c("1|0"));
        assert_eq!(Code::canonicalize(&[], 1), Code::ones());
        assert_eq!(Code::canonicalize(&[0, 1, 1, 1], 1), c("0|1"));
        assert_eq!(c("0111|1").to_string(), "0|1");
        assert_eq!(Code::ones().depth(), 0);
        assert_eq!(Code::zeros().depth(), 0);
    }

    #[test]
    fn alpha_matches_the_odometer_orbit() {
        // … ↦ 00 1̄ ↦ 10 1̄ ↦ 0 1̄ ↦ 1̄ ↦ 0̄ ↦ 1 0̄ ↦ 01 0̄ ↦ 11 0̄ ↦ …
        let orbit = ["00|1", "10|1", "0|1", "|1", "|0", "1|0", "01|0", "11|0"];
        for w in orbit.windows(2) {
            assert_eq!(c(w[0]).succ(), c(w[1]), "{} ↦ {}", w[0], w[1]);
            assert_eq!(c(w[1]).pred(), c(w[0]));
        }
    }

    #[test]
    fn tau_examples() {
        // n_k · 110100… ↦ n_k · 001011…
        let nk = b("01");
        let src = c("01110100|0");
        assert_eq!(src.tau(&nk), c("01001011|1"));
        assert_eq!(c("1|0").tau(&b("0")), c("1|0"));
        assert_eq!(c("1|0").tau(&b("1")), Code::ones());
        // direct expansion oracle
        let t = c("1|0").tau(&b("1"));
        assert_eq!(t.expand(8), vec![1; 8]);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(Code::zeros().eta(&b("1")), c("1|0"));
        assert_eq!(c("1|0").eta(&b("1")), Code::zeros());
        for k in 1..=5 {
            for w in Block::all(k) {
                let mut x = Code::zeros();
                for _ in 0..(1 << k) {
                    x = x.eta(&w);
                }
                assert_eq!(x, Code::zeros(), "block {w}");
            }
        }
    }

    #[test]
    fn evaluation_map() {
        assert_eq!(b("0").evaluate(), 0);
        assert_eq!(b("11").evaluate(), 3);
        assert_eq!(b("01").evaluate(), 2);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(Code::zeros().theta(), q(0, 1));
        assert_eq!(c("1|0").theta(), q(2, 3));
        assert_eq!(c("0|1").theta(), q(1, 3));
        assert_eq!(Code::ones().theta(), q(1, 1));
    }

    #[test]
    fn orbit_index_examples() {
        assert_eq!(Code::zeros().orbit_index(), 0);
        assert_eq!(Code::ones().orbit_index(), -1);
        assert_eq!(c("11|0").orbit_index(), 3);
        for j in -70..70 {
            assert_eq!(Code::from_index(j).orbit_index(), j);
        }
    }

    #[test]
    fn alpha_inverse_is_identity_up_to_depth_12() {
        for code in Code::all_up_to(12) {
            assert_eq!(code.succ().pred(), code);
            assert_eq!(code.pred().succ(), code);
        }
    }

    #[test]
    fn orbit_index_shifts_by_one() {
        for code in Code::all_up_to(10) {
            assert_eq!(code.succ().orbit_index(), code.orbit_index() + 1);
        }
    }

    #[test]
    fn theta_is_strictly_increasing() {
        let mut codes = Code::all_up_to(8);
        codes.sort();
        for w in codes.windows(2) {
            assert!(w[0] < w[1]);
            assert!(w[0].theta() < w[1].theta(), "{:?} {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn code_counts() {
        assert_eq!(Code::all_up_to(1).len(), 4);
        assert_eq!(Code::all_up_to(6).len(), 1 << 7);
    }

    #[test]
    fn cylinders_are_2k_periodic() {
        for k in 1..=8 {
            for w in Block::all(k) {
                assert_eq!(Cylinder::new(w).first_return_time(1 << 10), Some(1 << k));
            }
        }
    }

    #[test]
    fn tau_is_an_involution() {
        for k in 1..=3 {
            for w in Block::all(k) {
                for code in Code::all_up_to(6) {
                    assert_eq!(code.tau(&w).tau(&w), code);
                }
            }
        }
    }

    #[test]
    fn eta_orbit_of_zero_meets_cylinder_once() {
        for k in 1..=6 {
            for w in Block::all(k) {
                let orbit = eta_orbit_of_zero(&w, 1 << 12);
                assert_eq!(orbit.len(), 1 << k);
                let hits: Vec<_> = orbit.iter().filter(|x| x.starts_with(&w)).collect();
                assert_eq!(hits, vec![&Code::with_tail(&w, 0)]);
            }
        }
    }

    #[test]
    fn eta_periods_follow_the_dichotomy() {
        for k in 1..=4 {
            for w in Block::all(k) {
                let orbit = eta_orbit_of_zero(&w, 1 << 10);
                for code in Code::all_up_to(6) {
                    let p = code.eta_period(&w, 1 << 16).expect("periodic");
                    if orbit.contains(&code) {
                        assert_eq!(p, 1 << k);
                    } else {
                        assert_eq!(p % (1 << k), 0, "{code} under {w}");
                        assert!(p > 1 << k);
                    }
                }
            }
        }
    }

    #[test]
    fn serde_string_form() {
        let s = serde_json::to_string(&c("01|0")).unwrap();
        assert_eq!(s, "\"01|0\"");
        let back: Code = serde_json::from_str("\"|1\"").unwrap();
        assert_eq!(back, Code::ones());
    }
}
