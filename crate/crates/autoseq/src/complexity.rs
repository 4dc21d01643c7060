//! Pattern counting for automatic sequences: distinct factors of the
//! prefix, distinct words read along arithmetic progressions, distinct
//! words read along integer-valued polynomials, word frequencies, and the
//! inequality chain connecting all three counts to the effective alphabet
//! size.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{AutomatonError, Dfao};
use crate::structure::{self, StructureConfig, StructureError};

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error("word length must be positive")]
    ZeroLength,
    #[error("enumerating {size} candidates exceeds the budget {budget}")]
    EnumerationBudget { size: u128, budget: u128 },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Which family of index patterns a profile counts over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    /// contiguous windows of the prefix
    Ordinary,
    /// arithmetic progressions with positive difference
    Arithmetic,
    /// integer polynomials of the given degree in the binomial basis
    Polynomial { degree: u32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub ell: u32,
    pub count: u64,
    pub budget_n: u64,
    pub budget_m: u64,
    /// Exact when the count saturates the ceiling (#labels)^ell; otherwise
    /// the count is a lower bound that larger budgets may improve.
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexityProfile {
    pub kind: ProfileKind,
    pub rows: Vec<ProfileRow>,
}

impl ComplexityProfile {
    /// Renders `ell,count,budget_N,budget_M,exact_or_lower` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ell,count,budget_N,budget_M,exact_or_lower\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.ell,
                row.count,
                row.budget_n,
                row.budget_m,
                if row.exact { "exact" } else { "lower" }
            ));
        }
        out
    }
}

/// Number of distinct length-ell factors of the first `n` sequence values,
/// for every ell up to `ell_max`, via one suffix-array pass.
pub fn subword_complexity_profile(
    a: &Dfao,
    ell_max: u32,
    n: u64,
) -> Result<ComplexityProfile, ComplexityError> {
    if ell_max == 0 {
        return Err(ComplexityError::ZeroLength);
    }
    assert!(n >= 2, "need a nonempty prefix");
    let seq = label_prefix(a, n as usize)?;
    let ceiling_base = count_labels(&seq) as u128;

    let sa = suffix_array(&seq);
    let lcp = lcp_array(&seq, &sa);
    // how many adjacent suffix pairs share a prefix of length at least ell
    let mut ge = vec![0u64; seq.len() + 2];
    for &l in &lcp {
        ge[l as usize] += 1;
    }
    for l in (0..=seq.len()).rev() {
        ge[l] += ge[l + 1];
    }

    let rows = (1..=ell_max)
        .map(|ell| {
            let count = if (ell as usize) <= seq.len() {
                (seq.len() as u64 - ell as u64 + 1) - ge[ell as usize]
            } else {
                0
            };
            let ceiling = ceiling_base.checked_pow(ell);
            ProfileRow {
                ell,
                count,
                budget_n: n,
                budget_m: 1,
                exact: ceiling == Some(count as u128),
            }
        })
        .collect();
    Ok(ComplexityProfile { kind: ProfileKind::Ordinary, rows })
}

/// Factor-count closed form for the digit-sum-parity sequence in base 2.
/// By convention the length-1 count is 2; for longer lengths the count is
/// piecewise linear between powers of two.
pub fn thue_morse_reference(ell: u64) -> Result<u64, ComplexityError> {
    match ell {
        0 => Err(ComplexityError::ZeroLength),
        1 => Ok(2),
        _ => {
            // ell = 2^k + r with 1 <= r <= 2^k
            let k = 63 - (ell - 1).leading_zeros() as u64;
            let r = ell - (1 << k);
            debug_assert!((1..=1 << k).contains(&r));
            if r <= (1 << k) >> 1 {
                Ok(3 * (1 << k) + 4 * (r - 1))
            } else {
                Ok(4 * (1 << k) + 2 * (r - 1))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ApComplexity {
    pub count: u64,
    /// (#labels)^ell when it fits; saturation makes the count exact.
    pub ceiling: Option<u64>,
    pub saturated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApWitness {
    pub word: Vec<String>,
    pub start: u64,
    pub step: u64,
}

/// Distinct words (a(n + i m))_{i < ell} over 0 <= n < n_budget and
/// 1 <= m <= m_max.
pub fn ap_complexity_profile(
    a: &Dfao,
    ell: u32,
    n_budget: u64,
    m_max: u64,
) -> Result<ApComplexity, ComplexityError> {
    Ok(ap_words(a, ell, n_budget, m_max, false)?.0)
}

/// As the profile, but also reports the first progression realizing each
/// distinct word, in scan order (by difference, then start).
pub fn ap_complexity_witnesses(
    a: &Dfao,
    ell: u32,
    n_budget: u64,
    m_max: u64,
) -> Result<(ApComplexity, Vec<ApWitness>), ComplexityError> {
    let (count, witnesses) = ap_words(a, ell, n_budget, m_max, true)?;
    let (_, table) = a.label_ids();
    let witnesses = witnesses
        .into_iter()
        .map(|(word, n, m)| ApWitness {
            word: word.into_iter().map(|id| table[id as usize].clone()).collect(),
            start: n,
            step: m,
        })
        .collect();
    Ok((count, witnesses))
}

type RawWitness = (Vec<u8>, u64, u64);

fn ap_words(
    a: &Dfao,
    ell: u32,
    n_budget: u64,
    m_max: u64,
    keep_witnesses: bool,
) -> Result<(ApComplexity, Vec<RawWitness>), ComplexityError> {
    if ell == 0 {
        return Err(ComplexityError::ZeroLength);
    }
    assert!(n_budget >= 1 && m_max >= 1);
    let horizon = n_budget + (ell as u64 - 1) * m_max;
    let seq = label_prefix(a, horizon as usize)?;
    let labels = count_labels(&seq) as u128;
    let ceiling = labels.checked_pow(ell);

    let mut seen: HashSet<u128> = HashSet::new();
    let mut seen_wide: HashSet<Vec<u8>> = HashSet::new();
    let packable = ell <= 16;
    let mut witnesses = Vec::new();
    'outer: for m in 1..=m_max {
        for n in 0..n_budget {
            let fresh = if packable {
                let mut key = 0u128;
                for i in 0..ell as u64 {
                    key = key << 8 | seq[(n + i * m) as usize] as u128;
                }
                seen.insert(key)
            } else {
                let word: Vec<u8> =
                    (0..ell as u64).map(|i| seq[(n + i * m) as usize]).collect();
                seen_wide.insert(word)
            };
            if fresh && keep_witnesses {
                let word: Vec<u8> =
                    (0..ell as u64).map(|i| seq[(n + i * m) as usize]).collect();
                witnesses.push((word, n, m));
            }
            let count = if packable { seen.len() } else { seen_wide.len() } as u128;
            if Some(count) == ceiling {
                break 'outer;
            }
        }
    }
    let count = if packable { seen.len() } else { seen_wide.len() } as u64;
    let saturated = Some(count as u128) == ceiling;
    Ok((
        ApComplexity {
            count,
            ceiling: ceiling.and_then(|c| u64::try_from(c).ok()),
            saturated,
        },
        witnesses,
    ))
}

/// Integer-valued polynomial in the binomial basis:
/// P(n) = sum of coeffs[j] * C(n, j).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegerPolynomial {
    coeffs: Vec<u64>,
}

impl IntegerPolynomial {
    /// Coefficients for C(n,0), C(n,1), ... ; trailing zeros are trimmed
    /// but the constant term always remains.
    pub fn new(mut coeffs: Vec<u64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        IntegerPolynomial { coeffs }
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Exact value, or `None` on overflow past u128.
    pub fn eval_u128(&self, n: u64) -> Option<u128> {
        let mut acc: u128 = 0;
        for (j, &c) in self.coeffs.iter().enumerate() {
            let b = binomial_u128(n, j as u64)?;
            acc = acc.checked_add(b.checked_mul(c as u128)?)?;
        }
        Some(acc)
    }

    /// Monomial-basis coefficients as floats, for derivative analysis.
    /// Exact for the degrees used here (the basis change has denominator
    /// dividing d!).
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        let d = self.coeffs.len();
        let mut out = vec![0.0f64; d];
        // expand each C(x, j) = x(x-1)...(x-j+1)/j! into monomials
        for (j, &c) in self.coeffs.iter().enumerate() {
            let mut poly = vec![0.0f64; j + 1];
            poly[0] = 1.0;
            let mut deg = 0;
            for r in 0..j {
                // multiply by (x - r)
                let mut next = vec![0.0f64; deg + 2];
                for (i, &p) in poly.iter().enumerate().take(deg + 1) {
                    next[i + 1] += p;
                    next[i] -= p * r as f64;
                }
                poly = next;
                deg += 1;
            }
            let fact: f64 = (1..=j).map(|x| x as f64).product::<f64>().max(1.0);
            for (i, &p) in poly.iter().enumerate() {
                out[i] += c as f64 * p / fact;
            }
        }
        out
    }
}

/// C(n, j) as u128, `None` on overflow.
fn binomial_u128(n: u64, j: u64) -> Option<u128> {
    if j > n {
        return Some(0);
    }
    let mut acc: u128 = 1;
    for i in 0..j {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct PolyComplexity {
    pub count: u64,
    /// Polynomials whose value overflowed the evaluation range; they are
    /// skipped, keeping the count a lower bound.
    pub skipped: u64,
    pub ceiling: Option<u64>,
    pub saturated: bool,
}

/// Distinct words (a(P(i)))_{i < ell} over all degree-`degree` polynomials
/// in the binomial basis with coefficients in [0, coeff_bound].
pub fn poly_complexity_profile(
    a: &Dfao,
    ell: u32,
    degree: u32,
    coeff_bound: u64,
) -> Result<PolyComplexity, ComplexityError> {
    if ell == 0 {
        return Err(ComplexityError::ZeroLength);
    }
    let dims = degree as usize + 1;
    let total = (coeff_bound as u128 + 1).checked_pow(dims as u32);
    match total {
        Some(t) if t <= 1 << 26 => {}
        _ => {
            return Err(ComplexityError::EnumerationBudget {
                size: total.unwrap_or(u128::MAX),
                budget: 1 << 26,
            })
        }
    }

    // precompute C(i, j) for the evaluation points
    let binom: Vec<Vec<u128>> = (0..ell as u64)
        .map(|i| (0..dims as u64).map(|j| binomial_u128(i, j).unwrap()).collect())
        .collect();

    // all evaluations stay below this bound, so one label prefix serves
    // every polynomial when the bound is small
    let max_value: Option<u128> = binom
        .iter()
        .map(|row| {
            row.iter().try_fold(0u128, |acc, &b| {
                acc.checked_add(b.checked_mul(coeff_bound as u128)?)
            })
        })
        .try_fold(0u128, |m, v| v.map(|v| m.max(v)));
    let table: Option<Vec<u8>> = match max_value {
        Some(v) if v < 1 << 22 => Some(label_prefix(a, v as usize + 1)?),
        _ => None,
    };

    let (ids, id_table) = a.label_ids();
    let labels = match &table {
        Some(t) => count_labels(t) as u128,
        None => id_table.len() as u128,
    };
    let ceiling = labels.checked_pow(ell);

    let mut seen: HashSet<u128> = HashSet::new();
    let mut seen_wide: HashSet<Vec<u8>> = HashSet::new();
    let packable = ell <= 16;
    let mut skipped = 0u64;
    let mut coeffs = vec![0u64; dims];
    'outer: loop {
        let mut key = 0u128;
        let mut word = Vec::new();
        let mut overflow = false;
        for row in binom.iter() {
            let mut val: u128 = 0;
            for (j, &b) in row.iter().enumerate() {
                match b.checked_mul(coeffs[j] as u128).and_then(|x| val.checked_add(x)) {
                    Some(v) => val = v,
                    None => {
                        overflow = true;
                        break;
                    }
                }
            }
            if overflow || val > u64::MAX as u128 {
                overflow = true;
                break;
            }
            let id = match &table {
                Some(t) => t[val as usize],
                None => ids[a.state_at(val as u64)] as u8,
            };
            if packable {
                key = key << 8 | id as u128;
            } else {
                word.push(id);
            }
        }
        if overflow {
            skipped += 1;
        } else {
            let fresh = if packable { seen.insert(key) } else { seen_wide.insert(word) };
            if fresh {
                let count = if packable { seen.len() } else { seen_wide.len() } as u128;
                if Some(count) == ceiling {
                    break 'outer;
                }
            }
        }
        // odometer over the coefficient box
        let mut slot = 0;
        loop {
            if slot == dims {
                break 'outer;
            }
            if coeffs[slot] == coeff_bound {
                coeffs[slot] = 0;
                slot += 1;
            } else {
                coeffs[slot] += 1;
                break;
            }
        }
    }
    let count = if packable { seen.len() } else { seen_wide.len() } as u64;
    Ok(PolyComplexity {
        count,
        skipped,
        ceiling: ceiling.and_then(|c| u64::try_from(c).ok()),
        saturated: Some(count as u128) == ceiling,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ApFrequency {
    pub matches: u64,
    /// normalization n^2: all pairs (start, step) with the word inside the
    /// first n terms; for length-1 words the step ranges over [0, n)
    pub total: u128,
    pub ratio: f64,
}

/// How often the given word occurs along arithmetic progressions within
/// the first `n` terms: pairs (start, step) with step >= 0 and all of
/// start + i*step below n, counted against n^2.
pub fn ap_word_frequency(
    a: &Dfao,
    word: &[String],
    n: u64,
) -> Result<ApFrequency, ComplexityError> {
    if word.is_empty() {
        return Err(ComplexityError::ZeroLength);
    }
    assert!(n >= 1);
    let seq = label_prefix(a, n as usize)?;
    let (_, table) = a.label_ids();
    // a label missing from the table can never match
    let target: Option<Vec<u8>> = word
        .iter()
        .map(|l| table.iter().position(|t| t == l).map(|i| i as u8))
        .collect();
    let ell = word.len() as u64;
    let mut matches = 0u64;
    if let Some(target) = target {
        if ell == 1 {
            let hits = seq.iter().filter(|&&id| id == target[0]).count() as u64;
            matches = hits * n;
        } else {
            let m_top = (n - 1) / (ell - 1);
            for m in 0..=m_top {
                let n_top = n - (ell - 1) * m;
                for start in 0..n_top {
                    if (0..ell).all(|i| seq[(start + i * m) as usize] == target[i as usize]) {
                        matches += 1;
                    }
                }
            }
        }
    }
    let total = n as u128 * n as u128;
    Ok(ApFrequency { matches, total, ratio: matches as f64 / total as f64 })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub ell: u32,
    /// r^ell, the proved lower bound for the AP count
    pub r_pow: u128,
    pub observed: u64,
    /// (#labels)^ell, the hard ceiling
    pub ceiling: Option<u64>,
    /// observed >= r^ell at these budgets; a false value means the budget
    /// was too small to exhibit the bound, not that the bound failed
    pub met_lower: bool,
    /// per-symbol excess (ln observed - ell ln r) / ell
    pub excess_epsilon: f64,
    pub sanity_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainRow {
    pub ell: u32,
    pub ordinary: u64,
    pub arithmetic: u64,
    pub poly_deg1: u64,
    pub poly_deg2: u64,
    pub nondecreasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub r: usize,
    pub label_count: usize,
    pub budget_n: u64,
    pub budget_m: u64,
    pub rows: Vec<BoundRow>,
    /// the containment chain ordinary <= arithmetic <= poly(1) <= poly(2)
    /// evaluated at harmonized budgets
    pub chain: Vec<ChainRow>,
    pub chain_ok: bool,
    pub sanity_ok: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundBudgets {
    pub n: u64,
    pub m_max: u64,
}

/// Checks the observed AP counts against the proved floor r^ell and the
/// ceiling (#labels)^ell, and evaluates the containment chain
/// ordinary <= arithmetic <= polynomial degree 1 <= degree 2 at matched
/// budgets. The chain budgets are clamped so the polynomial enumeration
/// stays exhaustive: n_c = min(n, 128), m_c = min(m_max, 64), and the
/// coefficient box max(n_c - 1, m_c) contains every window and every
/// progression counted by the smaller budgets.
pub fn verify_theorem_bounds(
    a: &Dfao,
    ells: RangeInclusive<u32>,
    budgets: BoundBudgets,
    structure_cfg: &StructureConfig,
) -> Result<BoundReport, ComplexityError> {
    assert!(*ells.start() >= 1);
    let report = structure::effective_alphabet_size(a, structure_cfg)?;
    let r = report.r as u128;
    let labels = report.attained_labels.len() as u128;

    let mut rows = Vec::new();
    for ell in ells.clone() {
        let ap = ap_complexity_profile(a, ell, budgets.n, budgets.m_max)?;
        let r_pow = r.checked_pow(ell).unwrap_or(u128::MAX);
        let ceiling = labels.checked_pow(ell);
        let met_lower = ap.count as u128 >= r_pow;
        let excess =
            ((ap.count as f64).ln() - ell as f64 * (r as f64).ln()) / ell as f64;
        let sanity_ok = ceiling.map_or(true, |c| ap.count as u128 <= c);
        rows.push(BoundRow {
            ell,
            r_pow,
            observed: ap.count,
            ceiling: ceiling.and_then(|c| u64::try_from(c).ok()),
            met_lower,
            excess_epsilon: excess,
            sanity_ok,
        });
    }

    let n_c = budgets.n.min(128);
    let m_c = budgets.m_max.min(64);
    let coeff = (n_c - 1).max(m_c);
    let ordinary = subword_complexity_profile(a, *ells.end(), n_c)?;
    let mut chain = Vec::new();
    for ell in ells {
        let ord = ordinary.rows[ell as usize - 1].count;
        let ap = ap_complexity_profile(a, ell, n_c, m_c)?.count;
        let p1 = poly_complexity_profile(a, ell, 1, coeff)?.count;
        let p2 = poly_complexity_profile(a, ell, 2, coeff)?.count;
        let nondecreasing = ord <= ap && ap <= p1 && p1 <= p2;
        chain.push(ChainRow { ell, ordinary: ord, arithmetic: ap, poly_deg1: p1, poly_deg2: p2, nondecreasing });
    }
    let chain_ok = chain.iter().all(|c| c.nondecreasing);
    let sanity_ok = rows.iter().all(|r| r.sanity_ok);
    Ok(BoundReport {
        r: r as usize,
        label_count: labels as usize,
        budget_n: budgets.n,
        budget_m: budgets.m_max,
        rows,
        chain,
        chain_ok,
        sanity_ok,
    })
}

/// Label ids of the first `n` terms.
fn label_prefix(a: &Dfao, n: usize) -> Result<Vec<u8>, ComplexityError> {
    let b = a.normalize_leading_zeros();
    let (ids, table) = b.label_ids();
    assert!(table.len() <= 256, "label prefix packs ids into bytes");
    Ok(b.state_prefix(n)?.into_iter().map(|s| ids[s] as u8).collect())
}

fn count_labels(seq: &[u8]) -> usize {
    let mut seen = [false; 256];
    let mut count = 0;
    for &id in seq {
        if !seen[id as usize] {
            seen[id as usize] = true;
            count += 1;
        }
    }
    count
}

/// Suffix array by rank doubling.
fn suffix_array(s: &[u8]) -> Vec<u32> {
    let n = s.len();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    let mut rank: Vec<u32> = s.iter().map(|&c| c as u32).collect();
    let mut tmp = vec![0u32; n];
    let mut k = 1usize;
    loop {
        let key = |i: u32| {
            let i = i as usize;
            (rank[i], if i + k < n { rank[i + k] + 1 } else { 0 })
        };
        sa.sort_unstable_by_key(|&i| key(i));
        tmp[sa[0] as usize] = 0;
        for j in 1..n {
            tmp[sa[j] as usize] =
                tmp[sa[j - 1] as usize] + (key(sa[j]) != key(sa[j - 1])) as u32;
        }
        std::mem::swap(&mut rank, &mut tmp);
        if k >= n || rank[sa[n - 1] as usize] as usize == n - 1 {
            break;
        }
        k <<= 1;
    }
    sa
}

/// Longest common prefixes of adjacent suffixes in suffix-array order.
fn lcp_array(s: &[u8], sa: &[u32]) -> Vec<u32> {
    let n = s.len();
    let mut pos = vec![0u32; n];
    for (i, &p) in sa.iter().enumerate() {
        pos[p as usize] = i as u32;
    }
    let mut lcp = vec![0u32; n];
    let mut h = 0usize;
    for i in 0..n {
        if pos[i] > 0 {
            let j = sa[pos[i] as usize - 1] as usize;
            while i + h < n && j + h < n && s[i + h] == s[j + h] {
                h += 1;
            }
            lcp[pos[i] as usize] = h as u32;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}
