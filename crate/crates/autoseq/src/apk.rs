//! Generalized residue classes over base-k expansions: sets of natural
//! numbers cut out by a digit prefix, a digit suffix, an expansion-length
//! class, and an arithmetic residue with modulus coprime to the base.
//!
//! The module provides membership, fast enumeration, value sets of a DFAO
//! on such a set, logarithmic-density estimates, and an empirical bracket
//! for the effective alphabet size that can be compared against the exact
//! structural computation.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{Dfao, DigitWord};
use crate::structure::{self, StructureConfig, StructureError};

#[derive(Debug, Error)]
pub enum ApkError {
    #[error("set is over base {expected}, automaton reads base {got}")]
    BaseMismatch { expected: u64, got: u64 },
    #[error("residue modulus {q} shares a factor with base {base}")]
    ResidueNotCoprime { q: u64, base: u64 },
    #[error("prefix must not start with digit 0")]
    LeadingZeroPrefix,
    #[error("class {class} is not below modulus {modulus}")]
    ClassOutOfRange { class: u64, modulus: u64 },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("bad set literal: {0}")]
    Literal(String),
    #[error("automaton has {labels} labels, search masks support at most 64")]
    LabelBudget { labels: usize },
    #[error("search space of {size} candidate sets exceeds the budget {budget}")]
    SearchBudget { size: u128, budget: u128 },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Expansion length of n in the given base; 0 has the empty expansion.
fn expansion_len(mut n: u64, base: u64) -> u32 {
    let mut len = 0;
    while n > 0 {
        n /= base;
        len += 1;
    }
    len
}

/// Inverse of a modulo m for coprime inputs.
fn mod_inverse(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    debug_assert_eq!(old_r, 1, "inputs must be coprime");
    old_s.rem_euclid(m as i128) as u64
}

/// A set of natural numbers constrained by base-k digit structure: the
/// expansion begins with `prefix`, ends with `suffix`, has length in a fixed
/// class mod m, and the number itself lies in a fixed class mod q where q is
/// coprime to the base. Prefix and suffix may overlap on short expansions.
/// Every such set is infinite: all large enough lengths in the class admit
/// words with free middle digits, and the middle sweeps every residue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApkSet {
    base: u64,
    prefix: DigitWord,
    suffix: DigitWord,
    /// (class, modulus) for the expansion length.
    len_class: (u64, u64),
    /// (class, modulus) for the value; modulus coprime to the base.
    residue: (u64, u64),
}

impl ApkSet {
    /// The whole of the naturals: empty prefix and suffix, both moduli 1.
    pub fn unconstrained(base: u64) -> Self {
        ApkSet {
            base,
            prefix: DigitWord::empty(),
            suffix: DigitWord::empty(),
            len_class: (0, 1),
            residue: (0, 1),
        }
    }

    pub fn new(
        base: u64,
        prefix: DigitWord,
        suffix: DigitWord,
        len_class: (u64, u64),
        residue: (u64, u64),
    ) -> Result<Self, ApkError> {
        assert!(base >= 2);
        if len_class.1 == 0 || residue.1 == 0 {
            return Err(ApkError::ZeroModulus);
        }
        if len_class.0 >= len_class.1 {
            return Err(ApkError::ClassOutOfRange { class: len_class.0, modulus: len_class.1 });
        }
        if residue.0 >= residue.1 {
            return Err(ApkError::ClassOutOfRange { class: residue.0, modulus: residue.1 });
        }
        if gcd(residue.1, base) != 1 {
            return Err(ApkError::ResidueNotCoprime { q: residue.1, base });
        }
        if prefix.digits().first() == Some(&0) {
            return Err(ApkError::LeadingZeroPrefix);
        }
        for &d in prefix.digits().iter().chain(suffix.digits()) {
            assert!(d < base, "digit out of range for the base");
        }
        Ok(ApkSet { base, prefix, suffix, len_class, residue })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn prefix(&self) -> &DigitWord {
        &self.prefix
    }

    pub fn suffix(&self) -> &DigitWord {
        &self.suffix
    }

    pub fn len_class(&self) -> (u64, u64) {
        self.len_class
    }

    pub fn residue(&self) -> (u64, u64) {
        self.residue
    }

    /// Parses the literal form `u=101,v=1,len=0%3,res=2%5`. Components may
    /// appear in any order and be omitted; the empty string and the word
    /// `unconstrained` denote the whole set.
    pub fn parse(base: u64, text: &str) -> Result<Self, ApkError> {
        if base > 36 {
            return Err(ApkError::Literal("literals support bases up to 36".into()));
        }
        let mut prefix = DigitWord::empty();
        let mut suffix = DigitWord::empty();
        let mut len_class = (0u64, 1u64);
        let mut residue = (0u64, 1u64);
        let trimmed = text.trim();
        if !trimmed.is_empty() && trimmed != "unconstrained" {
            for part in trimmed.split(',') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| ApkError::Literal(format!("expected key=value, got `{part}`")))?;
                match key.trim() {
                    "u" => prefix = parse_digits(base, value.trim())?,
                    "v" => suffix = parse_digits(base, value.trim())?,
                    "len" => len_class = parse_class(value.trim())?,
                    "res" => residue = parse_class(value.trim())?,
                    other => {
                        return Err(ApkError::Literal(format!("unknown component `{other}`")))
                    }
                }
            }
        }
        ApkSet::new(base, prefix, suffix, len_class, residue)
    }

    /// True when n belongs to the set.
    pub fn contains(&self, n: u64) -> bool {
        let digits = DigitWord::expansion(n, self.base);
        let d = digits.digits();
        let u = self.prefix.digits();
        let v = self.suffix.digits();
        d.len() >= u.len()
            && d.len() >= v.len()
            && &d[..u.len()] == u
            && &d[d.len() - v.len()..] == v
            && (d.len() as u64) % self.len_class.1 == self.len_class.0
            && n % self.residue.1 == self.residue.0
    }

    /// Calls `visit` on every member below `n_max`, in increasing order.
    ///
    /// Enumeration walks one expansion length at a time: prefix and suffix
    /// pin the outer digits, and the free middle is stepped directly through
    /// the residue class (the base is invertible mod q), so the cost is
    /// proportional to the output plus the number of lengths.
    pub fn for_each_member<F: FnMut(u64)>(&self, n_max: u64, mut visit: F) {
        if n_max == 0 {
            return;
        }
        let k = self.base as u128;
        let (ell, m) = self.len_class;
        let (c, q) = self.residue;
        let u = self.prefix.digits();
        let v = self.suffix.digits();

        // the empty expansion: n = 0
        if u.is_empty() && v.is_empty() && ell == 0 && c == 0 {
            visit(0);
        }

        let max_len = expansion_len(n_max - 1, self.base) as usize;
        for len in 1..=max_len {
            if len as u64 % m != ell % m {
                continue;
            }
            if len < u.len() || len < v.len() {
                continue;
            }
            if u.len() + v.len() >= len {
                // prefix and suffix cover the whole word; at most one member
                let overlap_ok = (0..len).all(|i| {
                    let from_u = (i < u.len()).then(|| u[i]);
                    let from_v = (i + v.len() >= len).then(|| v[i + v.len() - len]);
                    match (from_u, from_v) {
                        (Some(a), Some(b)) => a == b,
                        _ => true,
                    }
                });
                if !overlap_ok {
                    continue;
                }
                let word: Vec<u64> = (0..len)
                    .map(|i| if i < u.len() { u[i] } else { v[i + v.len() - len] })
                    .collect();
                if word[0] == 0 {
                    continue;
                }
                let value = word.iter().fold(0u128, |acc, &d| acc * k + d as u128);
                if value < n_max as u128 && value % q as u128 == c as u128 {
                    visit(value as u64);
                }
                continue;
            }

            // free middle digits between the pinned ends
            let free = len - u.len() - v.len();
            let pow_free = k.pow(free as u32);
            let pow_v = k.pow(v.len() as u32);
            let head = u.iter().fold(0u128, |acc, &d| acc * k + d as u128);
            let tail = v.iter().fold(0u128, |acc, &d| acc * k + d as u128);
            let base_val = head * k.pow((len - u.len()) as u32) + tail;
            let mid_lo: u128 = if u.is_empty() { k.pow(free as u32 - 1) } else { 0 };
            // solve base_val + mid * k^{|v|} ≡ c (mod q) for mid
            let qq = q as u128;
            let target = ((c as u128 + qq - base_val % qq) % qq) as u64;
            let inv = mod_inverse((pow_v % qq) as u64, q);
            let mid_class = target as u128 * inv as u128 % qq;
            let mut mid = mid_lo + (mid_class + qq - mid_lo % qq) % qq;
            while mid < pow_free {
                let n = base_val + mid * pow_v;
                if n >= n_max as u128 {
                    break;
                }
                visit(n as u64);
                mid += qq;
            }
        }
    }

    /// The members below `n_max`, increasing.
    pub fn members_below(&self, n_max: u64) -> Vec<u64> {
        let mut out = Vec::new();
        self.for_each_member(n_max, |n| out.push(n));
        out
    }

    /// Intersection with further constraints: a longer prefix, a longer
    /// suffix, and refined length/residue classes. Returns `Ok(None)` when
    /// the constraints clash (prefix mismatch, suffix mismatch, or an
    /// unsolvable pair of congruences); the clash is a value, not an error.
    pub fn refine(
        &self,
        prefix: &DigitWord,
        suffix: &DigitWord,
        len_class: (u64, u64),
        residue: (u64, u64),
    ) -> Result<Option<ApkSet>, ApkError> {
        if len_class.1 == 0 || residue.1 == 0 {
            return Err(ApkError::ZeroModulus);
        }
        if gcd(residue.1, self.base) != 1 {
            return Err(ApkError::ResidueNotCoprime { q: residue.1, base: self.base });
        }
        let new_prefix = match merge_directed(self.prefix.digits(), prefix.digits(), false) {
            Some(w) => w,
            None => return Ok(None),
        };
        let new_suffix = match merge_directed(self.suffix.digits(), suffix.digits(), true) {
            Some(w) => w,
            None => return Ok(None),
        };
        let new_len = match crt(self.len_class, len_class) {
            Some(lc) => lc,
            None => return Ok(None),
        };
        let new_res = match crt(self.residue, residue) {
            Some(r) => r,
            None => return Ok(None),
        };
        ApkSet::new(
            self.base,
            DigitWord::new(new_prefix, self.base).expect("merged digits stay in range"),
            DigitWord::new(new_suffix, self.base).expect("merged digits stay in range"),
            new_len,
            new_res,
        )
        .map(Some)
    }
}

impl fmt::Display for ApkSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.prefix.is_empty() {
            parts.push(format!("u={}", self.prefix.display()));
        }
        if !self.suffix.is_empty() {
            parts.push(format!("v={}", self.suffix.display()));
        }
        if self.len_class.1 != 1 {
            parts.push(format!("len={}%{}", self.len_class.0, self.len_class.1));
        }
        if self.residue.1 != 1 {
            parts.push(format!("res={}%{}", self.residue.0, self.residue.1));
        }
        if parts.is_empty() {
            write!(f, "unconstrained")
        } else {
            write!(f, "{}", parts.join(","))
        }
    }
}

fn parse_digits(base: u64, text: &str) -> Result<DigitWord, ApkError> {
    let mut digits = Vec::new();
    for ch in text.chars() {
        let d = ch
            .to_digit(36)
            .map(u64::from)
            .filter(|&d| d < base)
            .ok_or_else(|| ApkError::Literal(format!("digit `{ch}` invalid for base {base}")))?;
        digits.push(d);
    }
    Ok(DigitWord::new(digits, base).expect("digits checked above"))
}

fn parse_class(text: &str) -> Result<(u64, u64), ApkError> {
    let (c, m) = text
        .split_once('%')
        .ok_or_else(|| ApkError::Literal(format!("expected class%modulus, got `{text}`")))?;
    let c: u64 = c.trim().parse().map_err(|_| ApkError::Literal(format!("bad class `{c}`")))?;
    let m: u64 = m.trim().parse().map_err(|_| ApkError::Literal(format!("bad modulus `{m}`")))?;
    Ok((c, m))
}

/// Merges two prefix constraints (or suffix constraints when `from_end`):
/// one must extend the other, and the longer wins.
fn merge_directed(a: &[u64], b: &[u64], from_end: bool) -> Option<Vec<u64>> {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let ok = if from_end {
        long[long.len() - short.len()..] == *short
    } else {
        long[..short.len()] == *short
    };
    ok.then(|| long.to_vec())
}

/// Intersection of two congruence classes; `None` when they clash.
fn crt(a: (u64, u64), b: (u64, u64)) -> Option<(u64, u64)> {
    let (c1, m1) = a;
    let (c2, m2) = b;
    let g = gcd(m1, m2);
    if (c1 % g) != (c2 % g) {
        return None;
    }
    let l = m1 / g * m2;
    // step from c1 by m1 until the second congruence holds; g divides the
    // gap so the walk ends within m2/g steps
    let mut x = c1 as u128;
    let step = m1 as u128;
    while x % m2 as u128 != c2 as u128 {
        x += step;
    }
    Some(((x % l as u128) as u64, l))
}

/// Output labels attained on the members of `q` below `n_max`.
pub fn value_set(a: &Dfao, q: &ApkSet, n_max: u64) -> Result<BTreeSet<String>, ApkError> {
    if a.base() != q.base() {
        return Err(ApkError::BaseMismatch { expected: q.base(), got: a.base() });
    }
    let mut out = BTreeSet::new();
    q.for_each_member(n_max, |n| {
        out.insert(a.evaluate(n).to_string());
    });
    Ok(out)
}

/// Partial logarithmic-density sum: (1/log N) Σ 1/(n+1) over members n < N
/// with a(n) = label. Reported raw, with no extrapolation.
pub fn log_density_estimate(
    a: &Dfao,
    label: &str,
    q: &ApkSet,
    n_max: u64,
) -> Result<f64, ApkError> {
    assert!(n_max >= 2);
    if a.base() != q.base() {
        return Err(ApkError::BaseMismatch { expected: q.base(), got: a.base() });
    }
    let mut sum = 0.0f64;
    q.for_each_member(n_max, |n| {
        if a.evaluate(n) == label {
            sum += 1.0 / (n as f64 + 1.0);
        }
    });
    Ok(sum / (n_max as f64).ln())
}

/// Tunables for the empirical alphabet bracket.
#[derive(Clone, Debug)]
pub struct BracketConfig {
    /// A candidate refinement only counts toward a minimum when it has at
    /// least this many members below the budget; thinner sets are treated
    /// as unsampled at this resolution.
    pub min_support: u32,
    /// A base set is only scanned when it has at least this many members,
    /// so that its refinements stay sampled.
    pub cand_support: u32,
    /// Number of random refinement chains probing the upper side.
    pub chains: u32,
    /// Pushes per chain.
    pub chain_depth: u32,
    pub seed: u64,
}

impl Default for BracketConfig {
    fn default() -> Self {
        BracketConfig { min_support: 8, cand_support: 256, chains: 64, chain_depth: 4, seed: 0 }
    }
}

/// Empirical bracket for the effective alphabet size.
#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    /// Certified at budget: some base set has every sampled refinement in
    /// its push family attaining at least this many values.
    pub r_lo: usize,
    /// Heuristic upper evidence from random refinement chains.
    pub r_hi: usize,
    /// Literal of the base set certifying `r_lo`.
    pub certificate: String,
}

struct PoolLayout {
    base: u64,
    /// value of k^t for t up to the working range
    pows: Vec<u128>,
    pf_off: Vec<usize>,
    sf_off: Vec<usize>,
    qs: Vec<u64>,
    rq_off: Vec<usize>,
    pf_count: usize,
    sf_count: usize,
    lm_count: usize,
    rq_count: usize,
}

impl PoolLayout {
    /// `max_len` is the longest expansion the sweep will see; the power
    /// table must reach it.
    fn new(base: u64, depth: u32, max_len: u32) -> Result<Self, ApkError> {
        // entries past the top of the indexable range saturate; they are
        // never read because no expansion is that long
        let mut pows = vec![1u128];
        for _ in 0..(max_len + 2 * depth + 3) {
            let next = pows.last().unwrap().saturating_mul(base as u128);
            pows.push(next);
        }
        // prefixes: the empty word, then per length the words without a
        // leading zero, indexed densely by value
        let mut pf_off = vec![0usize, 1];
        for t in 1..=depth as usize {
            let span = (pows[t] - pows[t - 1]) as usize;
            pf_off.push(pf_off[t] + span);
        }
        let pf_count = pf_off[depth as usize + 1];
        let mut sf_off = vec![0usize];
        for t in 0..=depth as usize {
            sf_off.push(sf_off[t] + pows[t] as usize);
        }
        let sf_count = sf_off[depth as usize + 1];
        let lm_count = (depth as usize) * (depth as usize + 1) / 2;
        let qs: Vec<u64> = (1..=depth as u64 + 1).filter(|&q| gcd(q, base) == 1).collect();
        let mut rq_off = vec![0usize];
        for &q in &qs {
            rq_off.push(rq_off.last().unwrap() + q as usize);
        }
        let rq_count = *rq_off.last().unwrap();
        let size = pf_count as u128 * sf_count as u128 * lm_count as u128 * rq_count as u128;
        if size > 1 << 24 {
            return Err(ApkError::SearchBudget { size, budget: 1 << 24 });
        }
        Ok(PoolLayout {
            base,
            pows,
            pf_off,
            sf_off,
            qs,
            rq_off,
            pf_count,
            sf_count,
            lm_count,
            rq_count,
        })
    }

    fn pool_count(&self) -> usize {
        self.pf_count * self.sf_count * self.lm_count * self.rq_count
    }

    fn lm_index(m: u64, ell: u64) -> usize {
        ((m - 1) * m / 2 + ell) as usize
    }

    /// Rebuilds the set for a flat pool index.
    fn decode(&self, idx: usize) -> ApkSet {
        let rq = idx % self.rq_count;
        let idx = idx / self.rq_count;
        let lm = idx % self.lm_count;
        let idx = idx / self.lm_count;
        let sf = idx % self.sf_count;
        let pf = idx / self.sf_count;

        let prefix = if pf == 0 {
            DigitWord::empty()
        } else {
            let t = self.pf_off.iter().rposition(|&o| o <= pf).unwrap();
            let val = (pf - self.pf_off[t]) as u128 + self.pows[t - 1];
            digits_of(val, self.base, t)
        };
        let t = self.sf_off.iter().rposition(|&o| o <= sf).unwrap();
        let suffix = digits_of((sf - self.sf_off[t]) as u128, self.base, t);
        let m = (1..).find(|&m| PoolLayout::lm_index(m + 1, 0) > lm).unwrap();
        let ell = lm as u64 - (m - 1) * m / 2;
        let qi = self.rq_off.iter().rposition(|&o| o <= rq).unwrap();
        let q = self.qs[qi];
        let c = (rq - self.rq_off[qi]) as u64;
        ApkSet::new(self.base, prefix, suffix, (ell, m), (c, q))
            .expect("pool layout only produces valid sets")
    }
}

fn digits_of(value: u128, base: u64, len: usize) -> DigitWord {
    let mut digits = vec![0u64; len];
    let mut v = value;
    for slot in (0..len).rev() {
        digits[slot] = (v % base as u128) as u64;
        v /= base as u128;
    }
    DigitWord::new(digits, base).expect("digits below base by construction")
}

/// Flat bucket accumulators reused across candidates via generation stamps.
struct Buckets {
    mask: Vec<u64>,
    count: Vec<u32>,
    stamp: Vec<u32>,
    gen: u32,
}

impl Buckets {
    fn new(size: usize) -> Self {
        Buckets { mask: vec![0; size], count: vec![0; size], stamp: vec![0; size], gen: 0 }
    }

    fn reset(&mut self) {
        self.gen += 1;
    }

    #[inline]
    fn add(&mut self, idx: usize, label_bit: u64) {
        if self.stamp[idx] != self.gen {
            self.stamp[idx] = self.gen;
            self.mask[idx] = 0;
            self.count[idx] = 0;
        }
        self.mask[idx] |= label_bit;
        self.count[idx] += 1;
    }

    /// Minimum label count over buckets with enough support, or `None`.
    fn min_supported(&self, range: std::ops::Range<usize>, min_support: u32) -> Option<u32> {
        let mut best: Option<u32> = None;
        for i in range {
            if self.stamp[i] == self.gen && self.count[i] >= min_support {
                let ones = self.mask[i].count_ones();
                best = Some(best.map_or(ones, |b| b.min(ones)));
            }
        }
        best
    }
}

/// Per-member push coordinates for the refinement family of one base set.
struct FamilyScratch {
    /// members of the current base set below the budget
    members: Vec<u64>,
    coords: Vec<MemberCoords>,
    singles: Buckets,
    pairs: Buckets,
}

/// The push family of a base set P: every prefix extension, suffix
/// extension, length-class split, and residue split up to one extra level
/// of budget, plus all pairwise combinations. Minima are taken over family
/// members with enough support.
struct FamilyDims {
    push: u32,
    /// suffix pushes: words w of length 1..=push prepended to the suffix
    sf_off: Vec<usize>,
    sf_total: usize,
    pf_off: Vec<usize>,
    pf_total: usize,
    /// length-class splits: factors 2..=push
    lm_off: Vec<usize>,
    lm_total: usize,
    /// residue splits: coprime factors 2..=push
    rq_factors: Vec<u64>,
    rq_off: Vec<usize>,
    rq_total: usize,
}

impl FamilyDims {
    fn new(base: u64, push: u32) -> Self {
        let mut sf_off = vec![0usize];
        let mut pf_off = vec![0usize];
        let mut pow = 1usize;
        for _ in 1..=push {
            pow *= base as usize;
            sf_off.push(sf_off.last().unwrap() + pow);
            pf_off.push(pf_off.last().unwrap() + pow);
        }
        let mut lm_off = vec![0usize];
        for t in 2..=push as usize {
            lm_off.push(lm_off.last().unwrap() + t);
        }
        let rq_factors: Vec<u64> = (2..=push as u64).filter(|&t| gcd(t, base) == 1).collect();
        let mut rq_off = vec![0usize];
        for &t in &rq_factors {
            rq_off.push(rq_off.last().unwrap() + t as usize);
        }
        FamilyDims {
            push,
            sf_total: *sf_off.last().unwrap(),
            sf_off,
            pf_total: *pf_off.last().unwrap(),
            pf_off,
            lm_total: *lm_off.last().unwrap(),
            lm_off,
            rq_total: *rq_off.last().unwrap(),
            rq_factors,
            rq_off,
        }
    }

    fn singles_total(&self) -> usize {
        self.sf_total + self.pf_total + self.lm_total + self.rq_total
    }
}

/// Hard cap on the per-dimension push budget; keeps per-member coordinate
/// storage on the stack.
const MAX_PUSH: usize = 8;

/// Coordinates of one member within every push dimension. Suffix and
/// prefix slots hold `usize::MAX` when the member's expansion is too short
/// for that push length.
#[derive(Clone, Copy)]
struct MemberCoords {
    sf: [usize; MAX_PUSH],
    pf: [usize; MAX_PUSH],
    lm: [usize; MAX_PUSH],
    rq: [usize; MAX_PUSH],
    sf_n: usize,
    pf_n: usize,
    lm_n: usize,
    rq_n: usize,
}

const NO_COORD: usize = usize::MAX;

fn member_coords(dims: &FamilyDims, layout: &PoolLayout, p: &ApkSet, n: u64) -> MemberCoords {
    let k = layout.base;
    let len = expansion_len(n, k) as usize;
    let ulen = p.prefix().len();
    let vlen = p.suffix().len();
    let mut co = MemberCoords {
        sf: [NO_COORD; MAX_PUSH],
        pf: [NO_COORD; MAX_PUSH],
        lm: [0; MAX_PUSH],
        rq: [0; MAX_PUSH],
        sf_n: dims.push as usize,
        pf_n: dims.push as usize,
        lm_n: 0,
        rq_n: 0,
    };
    for t in 1..=dims.push as usize {
        // the pushed suffix block sits just above the existing suffix
        if len >= vlen + t {
            let block = (n as u128 / layout.pows[vlen]) % layout.pows[t];
            co.sf[t - 1] = dims.sf_off[t - 1] + block as usize;
        }
        // the pushed prefix block sits just below the existing prefix
        if len >= ulen + t {
            let block = (n as u128 / layout.pows[len - ulen - t]) % layout.pows[t];
            co.pf[t - 1] = dims.pf_off[t - 1] + block as usize;
        }
    }
    let (ell, m) = p.len_class();
    for t in 2..=dims.push as u64 {
        let s = ((len as u64 - ell) / m) % t;
        co.lm[co.lm_n] = dims.lm_off[t as usize - 2] + s as usize;
        co.lm_n += 1;
    }
    let (c, q) = p.residue();
    for (i, &t) in dims.rq_factors.iter().enumerate() {
        co.rq[co.rq_n] = dims.rq_off[i] + (((n - c) / q) % t) as usize;
        co.rq_n += 1;
    }
    co
}

/// Offsets of the pair blocks inside the pair bucket buffer.
struct PairBlocks {
    sf_rq: usize,
    sf_lm: usize,
    sf_pf: usize,
    pf_rq: usize,
    pf_lm: usize,
    lm_rq: usize,
    total: usize,
}

impl PairBlocks {
    fn new(d: &FamilyDims) -> Self {
        let sf_rq = 0;
        let sf_lm = sf_rq + d.sf_total * d.rq_total;
        let sf_pf = sf_lm + d.sf_total * d.lm_total;
        let pf_rq = sf_pf + d.sf_total * d.pf_total;
        let pf_lm = pf_rq + d.pf_total * d.rq_total;
        let lm_rq = pf_lm + d.pf_total * d.lm_total;
        let total = lm_rq + d.lm_total * d.rq_total;
        PairBlocks { sf_rq, sf_lm, sf_pf, pf_rq, pf_lm, lm_rq, total }
    }
}

/// Minimum observed label count over the push family of `p`, stopping early
/// once the minimum cannot exceed `floor`. Returns the family minimum
/// including f(P) itself.
#[allow(clippy::too_many_arguments)]
fn family_min(
    p: &ApkSet,
    p_mask: u64,
    layout: &PoolLayout,
    dims: &FamilyDims,
    blocks: &PairBlocks,
    labels_by_n: &[u8],
    scratch: &mut FamilyScratch,
    n_max: u64,
    min_support: u32,
    floor: u32,
) -> u32 {
    let mut min = p_mask.count_ones();
    if min <= floor {
        return min;
    }
    scratch.members.clear();
    let members = &mut scratch.members;
    p.for_each_member(n_max, |n| members.push(n));

    scratch.coords.clear();
    scratch.coords.extend(members.iter().map(|&n| member_coords(dims, layout, p, n)));
    let coords = &scratch.coords;

    // stage one: single pushes
    scratch.singles.reset();
    let (sf0, pf0, lm0) = (0, dims.sf_total, dims.sf_total + dims.pf_total);
    let rq0 = lm0 + dims.lm_total;
    for (co, &n) in coords.iter().zip(members.iter()) {
        let bit = 1u64 << labels_by_n[n as usize];
        for &t in co.sf[..co.sf_n].iter().filter(|&&t| t != NO_COORD) {
            scratch.singles.add(sf0 + t, bit);
        }
        for &t in co.pf[..co.pf_n].iter().filter(|&&t| t != NO_COORD) {
            scratch.singles.add(pf0 + t, bit);
        }
        for &t in &co.lm[..co.lm_n] {
            scratch.singles.add(lm0 + t, bit);
        }
        for &t in &co.rq[..co.rq_n] {
            scratch.singles.add(rq0 + t, bit);
        }
    }
    if let Some(v) = scratch.singles.min_supported(0..dims.singles_total(), min_support) {
        min = min.min(v);
    }
    if min <= floor {
        return min;
    }

    // stage two: suffix and residue combined, the pinning pair
    scratch.pairs.reset();
    for (co, &n) in coords.iter().zip(members.iter()) {
        let bit = 1u64 << labels_by_n[n as usize];
        for &s in co.sf[..co.sf_n].iter().filter(|&&t| t != NO_COORD) {
            for &r in &co.rq[..co.rq_n] {
                scratch.pairs.add(blocks.sf_rq + s * dims.rq_total + r, bit);
            }
        }
    }
    if let Some(v) = scratch
        .pairs
        .min_supported(blocks.sf_rq..blocks.sf_rq + dims.sf_total * dims.rq_total, min_support)
    {
        min = min.min(v);
    }
    if min <= floor {
        return min;
    }

    // stage three: the remaining pairs
    for (co, &n) in coords.iter().zip(members.iter()) {
        let bit = 1u64 << labels_by_n[n as usize];
        for &s in co.sf[..co.sf_n].iter().filter(|&&t| t != NO_COORD) {
            for &l in &co.lm[..co.lm_n] {
                scratch.pairs.add(blocks.sf_lm + s * dims.lm_total + l, bit);
            }
            for &f in co.pf[..co.pf_n].iter().filter(|&&t| t != NO_COORD) {
                scratch.pairs.add(blocks.sf_pf + s * dims.pf_total + f, bit);
            }
        }
        for &f in co.pf[..co.pf_n].iter().filter(|&&t| t != NO_COORD) {
            for &r in &co.rq[..co.rq_n] {
                scratch.pairs.add(blocks.pf_rq + f * dims.rq_total + r, bit);
            }
            for &l in &co.lm[..co.lm_n] {
                scratch.pairs.add(blocks.pf_lm + f * dims.lm_total + l, bit);
            }
        }
        for &l in &co.lm[..co.lm_n] {
            for &r in &co.rq[..co.rq_n] {
                scratch.pairs.add(blocks.lm_rq + l * dims.rq_total + r, bit);
            }
        }
    }
    if let Some(v) = scratch.pairs.min_supported(blocks.sf_lm..blocks.total, min_support) {
        min = min.min(v);
    }
    min
}

fn observed_values(q: &ApkSet, labels_by_n: &[u8], n_max: u64) -> (u64, u32) {
    let mut mask = 0u64;
    let mut support = 0u32;
    q.for_each_member(n_max, |n| {
        mask |= 1u64 << labels_by_n[n as usize];
        support += 1;
    });
    (mask, support)
}

/// One random push within the family budget; `None` when the dimension has
/// no room (for example no coprime factor exists).
fn random_push(q: &ApkSet, push: u32, rng: &mut ChaCha8Rng) -> Option<ApkSet> {
    let base = q.base();
    let dim = rng.gen_range(0..4u32);
    let (mut u2, mut v2) = (DigitWord::empty(), DigitWord::empty());
    let mut lc = (0u64, 1u64);
    let mut rc = (0u64, 1u64);
    match dim {
        0 => {
            let t = rng.gen_range(1..=push);
            let mut digits = Vec::with_capacity(q.prefix().len() + t as usize);
            digits.extend_from_slice(q.prefix().digits());
            for i in 0..t {
                let lo = if digits.is_empty() && i == 0 { 1 } else { 0 };
                digits.push(rng.gen_range(lo..base));
            }
            u2 = DigitWord::new(digits, base).expect("digits in range");
        }
        1 => {
            let t = rng.gen_range(1..=push);
            let mut digits: Vec<u64> = (0..t).map(|_| rng.gen_range(0..base)).collect();
            digits.extend_from_slice(q.suffix().digits());
            v2 = DigitWord::new(digits, base).expect("digits in range");
        }
        2 => {
            let t = rng.gen_range(2..=push.max(2)) as u64;
            let (ell, m) = q.len_class();
            let s = rng.gen_range(0..t);
            lc = (ell + s * m, m * t);
        }
        _ => {
            let options: Vec<u64> = (2..=push as u64).filter(|&t| gcd(t, base) == 1).collect();
            if options.is_empty() {
                return None;
            }
            let t = options[rng.gen_range(0..options.len())];
            let (c, qq) = q.residue();
            let s = rng.gen_range(0..t);
            rc = (c + s * qq, qq * t);
        }
    }
    q.refine(&u2, &v2, lc, rc).ok().flatten()
}

/// Empirical bracket (r_lo, r_hi) for the effective alphabet size.
///
/// Base sets P range over every combination of prefix and suffix up to
/// `depth` digits, length modulus up to `depth`, and coprime residue
/// modulus up to `depth`+1. One pass over `[0, n_max)` tallies the labels
/// and member counts of every base set; candidates are then scanned in
/// decreasing order of observed label count, and each is scored by the
/// minimum observed label count over its push family (pushes one level
/// deeper in every dimension, singly and in pairs). r_lo is the best such
/// score. r_hi follows seeded random refinement chains rooted at the
/// certifying set and reports the smallest of their maxima; it is evidence,
/// not a certificate.
pub fn empirical_effective_alphabet(
    a: &Dfao,
    depth: u32,
    n_max: u64,
    cfg: &BracketConfig,
) -> Result<Bracket, ApkError> {
    assert!(depth >= 1, "depth must be positive");
    assert!(depth as usize + 1 <= MAX_PUSH, "depth capped at {}", MAX_PUSH - 1);
    assert!(n_max >= 2, "need a nonempty sample");
    let b = a.normalize_leading_zeros();
    let (ids, table) = b.label_ids();
    if table.len() > 64 {
        return Err(ApkError::LabelBudget { labels: table.len() });
    }
    let states = b.state_prefix(n_max as usize).map_err(StructureError::from)?;
    let labels_by_n: Vec<u8> = states.into_iter().map(|s| ids[s] as u8).collect();

    let layout = PoolLayout::new(b.base(), depth, expansion_len(n_max - 1, b.base()))?;
    let mut mask = vec![0u64; layout.pool_count()];
    let mut support = vec![0u32; layout.pool_count()];

    // one sweep: every n feeds each base set that contains it
    let k = b.base();
    let mut pf_idx: Vec<usize> = Vec::with_capacity(depth as usize + 1);
    let mut sf_idx: Vec<usize> = Vec::with_capacity(depth as usize + 1);
    for n in 0..n_max {
        let bit = 1u64 << labels_by_n[n as usize];
        let len = expansion_len(n, k) as usize;
        let reach = (depth as usize).min(len);
        pf_idx.clear();
        pf_idx.push(0);
        let mut acc = 0u128;
        let mut rest = len;
        for t in 1..=reach {
            rest -= 1;
            let digit = (n as u128 / layout.pows[rest]) % k as u128;
            acc = acc * k as u128 + digit;
            pf_idx.push(layout.pf_off[t] + (acc - layout.pows[t - 1]) as usize);
        }
        sf_idx.clear();
        for t in 0..=reach {
            sf_idx.push(layout.sf_off[t] + (n as u128 % layout.pows[t]) as usize);
        }
        for &pf in &pf_idx {
            let row_pf = pf * layout.sf_count;
            for &sf in &sf_idx {
                let row_sf = (row_pf + sf) * layout.lm_count;
                for m in 1..=depth as u64 {
                    let lm = PoolLayout::lm_index(m, len as u64 % m);
                    let row_lm = (row_sf + lm) * layout.rq_count;
                    for (qi, &q) in layout.qs.iter().enumerate() {
                        let idx = row_lm + layout.rq_off[qi] + (n % q) as usize;
                        mask[idx] |= bit;
                        support[idx] += 1;
                    }
                }
            }
        }
    }

    // scan candidates, best observed label count first
    let mut order: Vec<u32> = (0..layout.pool_count() as u32)
        .filter(|&i| support[i as usize] >= cfg.cand_support)
        .collect();
    order.sort_by_key(|&i| {
        (u32::MAX - mask[i as usize].count_ones(), u32::MAX - support[i as usize], i)
    });

    let dims = FamilyDims::new(b.base(), depth + 1);
    let blocks = PairBlocks::new(&dims);
    let mut scratch = FamilyScratch {
        members: Vec::new(),
        coords: Vec::new(),
        singles: Buckets::new(dims.singles_total()),
        pairs: Buckets::new(blocks.total),
    };

    let mut best: u32 = 0;
    let mut best_idx: Option<usize> = None;
    for &i in &order {
        let i = i as usize;
        if mask[i].count_ones() <= best {
            continue;
        }
        let p = layout.decode(i);
        let score = family_min(
            &p,
            mask[i],
            &layout,
            &dims,
            &blocks,
            &labels_by_n,
            &mut scratch,
            n_max,
            cfg.min_support,
            best,
        );
        if score > best {
            best = score;
            best_idx = Some(i);
        }
    }
    let (r_lo, cert) = match best_idx {
        Some(i) => (best as usize, layout.decode(i)),
        None => {
            // nothing sampled at this resolution; certify only the trivial
            let p = ApkSet::unconstrained(b.base());
            let (_, s) = observed_values(&p, &labels_by_n, n_max);
            (if s == 0 { 0 } else { 1 }, p)
        }
    };

    // random chains from the certificate: each dives deeper and records the
    // largest observed label count among its sampled elements
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (cert_mask, _) = observed_values(&cert, &labels_by_n, n_max);
    let mut r_hi_opt: Option<u32> = None;
    for _ in 0..cfg.chains {
        let mut chain_max = cert_mask.count_ones();
        let mut q = cert.clone();
        for _ in 0..cfg.chain_depth {
            let mut pushed = None;
            for _ in 0..8 {
                if let Some(candidate) = random_push(&q, depth + 1, &mut rng) {
                    let (m, s) = observed_values(&candidate, &labels_by_n, n_max);
                    if s >= cfg.min_support {
                        pushed = Some((candidate, m));
                        break;
                    }
                }
            }
            match pushed {
                Some((candidate, m)) => {
                    chain_max = chain_max.max(m.count_ones());
                    q = candidate;
                }
                None => break,
            }
        }
        r_hi_opt = Some(r_hi_opt.map_or(chain_max, |h| h.min(chain_max)));
    }
    let r_hi = (r_hi_opt.unwrap_or(cert_mask.count_ones()) as usize).max(r_lo);

    Ok(Bracket { r_lo, r_hi, certificate: cert.to_string() })
}

/// Checks whether the sequence attains the largest possible number of
/// values along arithmetic-progression patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MascVerdict {
    Maximal,
    NotMaximal,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct MascReport {
    pub verdict: MascVerdict,
    /// Exact effective alphabet size, absent when the structural analysis
    /// exhausted its budget.
    pub structural_r: Option<usize>,
    pub attained_labels: Vec<String>,
    pub bracket: Bracket,
    pub seed: u64,
}

/// Maximality verdict: the sequence attains its full value set along
/// arithmetic patterns exactly when the effective alphabet size equals the
/// number of attained labels. The empirical bracket is attached as
/// independent evidence.
pub fn masc_check(
    a: &Dfao,
    depth: u32,
    n_max: u64,
    bracket_cfg: &BracketConfig,
    structure_cfg: &StructureConfig,
) -> Result<MascReport, ApkError> {
    let bracket = empirical_effective_alphabet(a, depth, n_max, bracket_cfg)?;
    let structural = match structure::effective_alphabet_size(a, structure_cfg) {
        Ok(report) => Some(report),
        Err(StructureError::ImageBudget { .. }) => None,
        Err(StructureError::Automaton(crate::automaton::AutomatonError::PowerBudget {
            ..
        })) => None,
        Err(e) => return Err(e.into()),
    };
    let attained = match &structural {
        Some(rep) => rep.attained_labels.clone(),
        None => a.normalize_leading_zeros().prune_unreachable().attained_labels(),
    };
    let verdict = match &structural {
        Some(rep) if rep.r == attained.len() => MascVerdict::Maximal,
        Some(_) => MascVerdict::NotMaximal,
        None => MascVerdict::Inconclusive,
    };
    Ok(MascReport {
        verdict,
        structural_r: structural.map(|rep| rep.r),
        attained_labels: attained,
        bracket,
        seed: bracket_cfg.seed,
    })
}
