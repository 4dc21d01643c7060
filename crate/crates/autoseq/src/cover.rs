//! Interval covers for polynomial images: split [0, ell) into singletons
//! and runs whose polynomial values land in one digit block [m k^i,
//! (m+1) k^i) with the block index m containing a required digit word.
//! The run pieces dominate when the derivative is large and most block
//! indices contain the word, which is what makes the piece count sublinear
//! in ell.

use serde::Serialize;
use thiserror::Error;

use crate::automaton::DigitWord;
use crate::complexity::IntegerPolynomial;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("the avoided word must be nonempty")]
    EmptyWord,
    #[error("digit {digit} does not fit base {base}")]
    DigitRange { digit: u64, base: u64 },
    #[error("a constant polynomial admits no useful cover")]
    ConstantPolynomial,
    #[error("need at least two points to cover")]
    RangeTooSmall,
    #[error("growth-rate iteration did not converge within {iterations} steps")]
    NonConvergence { iterations: u64 },
    #[error("polynomial value exceeds the supported range")]
    ValueOverflow,
}

/// Quantities chosen by the construction, reported alongside the pieces.
#[derive(Clone, Debug, Serialize)]
pub struct CoverParams {
    /// growth rate of words avoiding w
    pub mu: f64,
    /// density deficit: 1 - log_k(mu), in (0, 1]
    pub lambda: f64,
    /// target exponent d / (d + lambda), in (0, 1)
    pub theta: f64,
    /// derivative threshold scale R^(-lambda/d)
    pub epsilon: f64,
    /// interval budget ell^theta
    pub big_r: f64,
    /// max |P - P(0)| over [0, ell]
    pub max_growth: f64,
    /// max |P'| over [0, ell]
    pub max_derivative: f64,
    /// block scale K = k^scale_log with K <= max_growth / big_r < k K
    /// (clamped to 1 when the ratio drops below one)
    pub scale_log: u32,
    pub scale: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum PieceKind {
    /// contains exactly the one integer
    Singleton { point: u64 },
    /// all integers x of the piece satisfy m k^i <= P(x) < (m+1) k^i,
    /// and the base-k expansion of m contains the avoided word
    Block { m: u128, scale_log: u32 },
}

/// Half-open real interval; only integer membership is contractual.
#[derive(Clone, Debug, Serialize)]
pub struct CoverPiece {
    pub lo: f64,
    pub hi: f64,
    pub kind: PieceKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cover {
    pub pieces: Vec<CoverPiece>,
    pub params: CoverParams,
}

const POWER_ITERATION_CAP: u64 = 500_000;

/// Growth rate of base-k words avoiding `w` as a factor: the dominant
/// eigenvalue of the counting matrix of the failure automaton, computed
/// per strongly connected component so the iteration always converges
/// geometrically (each component gets a positive diagonal via T + I).
pub fn avoidance_rate(k: u64, w: &DigitWord) -> Result<f64, CoverError> {
    let t = counting_matrix(k, w)?;
    let n = t.len();
    let adj: Vec<Vec<usize>> = t
        .iter()
        .map(|row| (0..n).filter(|&j| row[j] > 0).collect())
        .collect();
    let mut best = 0.0f64;
    for scc in strongly_connected(&adj) {
        best = best.max(component_rate(&t, &scc)?);
    }
    Ok(best)
}

/// Transition-count matrix among the live states of the w-avoidance
/// automaton (the full-match state is absorbing and omitted).
fn counting_matrix(k: u64, w: &DigitWord) -> Result<Vec<Vec<u64>>, CoverError> {
    if w.is_empty() {
        return Err(CoverError::EmptyWord);
    }
    if let Some(&digit) = w.digits().iter().find(|&&d| d >= k) {
        return Err(CoverError::DigitRange { digit, base: k });
    }
    let wd = w.digits();
    let n = wd.len();
    // aut[q][d]: longest prefix of w that suffixes the current word after
    // reading d from partial-match state q
    let mut aut = vec![vec![0usize; k as usize]; n];
    for d in 0..k as usize {
        aut[0][d] = (wd[0] == d as u64) as usize;
    }
    let mut fail = 0usize;
    for q in 1..n {
        for d in 0..k as usize {
            aut[q][d] = if wd[q] == d as u64 { q + 1 } else { aut[fail][d] };
        }
        fail = aut[fail][wd[q] as usize];
    }
    let mut t = vec![vec![0u64; n]; n];
    for q in 0..n {
        for d in 0..k as usize {
            let to = aut[q][d];
            if to < n {
                t[q][to] += 1;
            }
        }
    }
    Ok(t)
}

/// Iterative Tarjan over a small digraph.
fn strongly_connected(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0usize;
    let mut out = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge == 0 {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *edge < adj[v].len() {
                let w = adj[v][*edge];
                *edge += 1;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
                call.pop();
                if let Some(&mut (u, _)) = call.last_mut() {
                    low[u] = low[u].min(low[v]);
                }
            }
        }
    }
    out
}

/// Dominant eigenvalue of the matrix restricted to one component, via the
/// L1 quotient of v(T + I); the shift makes the restriction primitive.
fn component_rate(t: &[Vec<u64>], scc: &[usize]) -> Result<f64, CoverError> {
    if scc.len() == 1 {
        let i = scc[0];
        return Ok(t[i][i] as f64);
    }
    let n = scc.len();
    let mut v = vec![1.0f64 / n as f64; n];
    let mut prev = f64::NAN;
    for iter in 0..POWER_ITERATION_CAP {
        let mut next = vec![0.0f64; n];
        for (bi, &i) in scc.iter().enumerate() {
            for (bj, &j) in scc.iter().enumerate() {
                next[bj] += v[bi] * t[i][j] as f64;
            }
            next[bi] += v[bi];
        }
        let norm: f64 = next.iter().sum();
        for x in &mut next {
            *x /= norm;
        }
        v = next;
        let est = norm - 1.0;
        if iter >= 8 && (est - prev).abs() <= 1e-10 * est.abs().max(1e-30) {
            return Ok(est);
        }
        prev = est;
    }
    Err(CoverError::NonConvergence { iterations: POWER_ITERATION_CAP })
}

/// Evaluate a monomial-coefficient polynomial at x.
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

/// Real roots of a polynomial of degree <= 2 (monomial coefficients).
fn low_degree_roots(coeffs: &[f64]) -> Vec<f64> {
    let c = |i: usize| coeffs.get(i).copied().unwrap_or(0.0);
    if c(2) != 0.0 {
        let (a, b, cc) = (c(2), c(1), c(0));
        let disc = b * b - 4.0 * a * cc;
        if disc < 0.0 {
            return Vec::new();
        }
        let s = disc.sqrt();
        vec![(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)]
    } else if c(1) != 0.0 {
        vec![-c(0) / c(1)]
    } else {
        Vec::new()
    }
}

/// max |f(x)| over [0, hi] for a monomial-coefficient polynomial: exact
/// critical points when the derivative has degree <= 2, dense sampling
/// with local ternary refinement otherwise.
fn max_abs_on_interval(coeffs: &[f64], hi: f64) -> f64 {
    let deriv = derivative(coeffs);
    let mut candidates = vec![0.0, hi];
    if deriv.len() <= 3 {
        candidates.extend(low_degree_roots(&deriv).into_iter().filter(|x| (0.0..=hi).contains(x)));
    } else {
        let samples = 4096;
        let g = |x: f64| horner(coeffs, x).abs();
        for s in 0..=samples {
            let x = hi * s as f64 / samples as f64;
            candidates.push(x);
        }
        // refine around each sample peak
        let step = hi / samples as f64;
        let peak = candidates
            .iter()
            .copied()
            .max_by(|a, b| g(*a).total_cmp(&g(*b)))
            .unwrap();
        let (mut lo_b, mut hi_b) = ((peak - step).max(0.0), (peak + step).min(hi));
        for _ in 0..200 {
            let m1 = lo_b + (hi_b - lo_b) / 3.0;
            let m2 = hi_b - (hi_b - lo_b) / 3.0;
            if g(m1) < g(m2) {
                lo_b = m1;
            } else {
                hi_b = m2;
            }
        }
        candidates.push((lo_b + hi_b) / 2.0);
    }
    candidates
        .into_iter()
        .map(|x| horner(coeffs, x).abs())
        .fold(0.0, f64::max)
}

/// Builds the cover of [0, ell): long pieces where the derivative clears
/// the threshold and the block index contains `w`, singletons elsewhere.
///
/// The derivative test uses >= rather than a strict inequality: at degree
/// one the threshold equals the (constant) derivative itself, and the
/// strict form would empty the region and degrade every cover to
/// singletons.
pub fn build_cover(
    p: &IntegerPolynomial,
    w: &DigitWord,
    k: u64,
    ell: u64,
) -> Result<Cover, CoverError> {
    if p.degree() == 0 {
        return Err(CoverError::ConstantPolynomial);
    }
    if ell < 2 {
        return Err(CoverError::RangeTooSmall);
    }
    let d = p.degree() as f64;
    let mu = avoidance_rate(k, w)?;
    let lambda = 1.0 - mu.ln() / (k as f64).ln();
    let theta = d / (d + lambda);
    let big_r = (ell as f64).powf(theta);
    let epsilon = big_r.powf(-lambda / d);

    let mono = p.monomial_coefficients();
    let mut shifted = mono.clone();
    shifted[0] = 0.0; // P - P(0)
    let max_growth = max_abs_on_interval(&shifted, ell as f64);
    let deriv = derivative(&mono);
    let max_derivative = max_abs_on_interval(&deriv, ell as f64);

    let ratio = max_growth / big_r;
    let mut scale: u128 = 1;
    let mut scale_log = 0u32;
    while (scale as f64) * k as f64 <= ratio {
        scale = scale.checked_mul(k as u128).ok_or(CoverError::ValueOverflow)?;
        scale_log += 1;
    }

    let threshold = epsilon.powi(p.degree() as i32 - 1) * max_derivative;
    let values: Option<Vec<u128>> = (0..ell).map(|x| p.eval_u128(x)).collect();
    let values = values.ok_or(CoverError::ValueOverflow)?;

    let mut pieces = Vec::new();
    let mut last_index: Option<(u128, bool)> = None;
    let mut good = |m: u128| -> bool {
        if let Some((lm, lg)) = last_index {
            if lm == m {
                return lg;
            }
        }
        let g = w.is_factor_of(&digits_u128(m, k));
        last_index = Some((m, g));
        g
    };
    let in_region = |x: u64| horner(&deriv, x as f64).abs() >= threshold;

    let mut x = 0u64;
    while x < ell {
        let m = values[x as usize] / scale;
        if in_region(x) && good(m) {
            let mut end = x + 1;
            while end < ell && in_region(end) && values[end as usize] / scale == m {
                end += 1;
            }
            pieces.push(CoverPiece {
                lo: x as f64,
                hi: end as f64,
                kind: PieceKind::Block { m, scale_log },
            });
            x = end;
        } else {
            pieces.push(CoverPiece {
                lo: x as f64,
                hi: (x + 1) as f64,
                kind: PieceKind::Singleton { point: x },
            });
            x += 1;
        }
    }

    debug_assert!(lambda > 0.0 && lambda <= 1.0, "growth below base leaves a positive deficit");
    debug_assert!(theta > 0.0 && theta < 1.0);
    Ok(Cover {
        pieces,
        params: CoverParams {
            mu,
            lambda,
            theta,
            epsilon,
            big_r,
            max_growth,
            max_derivative,
            scale_log,
            scale,
        },
    })
}

fn digits_u128(mut m: u128, k: u64) -> Vec<u64> {
    if m == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    while m > 0 {
        out.push((m % k as u128) as u64);
        m /= k as u128;
    }
    out.reverse();
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverVerdict {
    /// every integer of [0, ell) lies in exactly one piece
    pub partition_ok: bool,
    /// every Block piece keeps its values inside [m k^i, (m+1) k^i) and
    /// its index expansion contains the word; every Singleton holds one
    /// integer
    pub pieces_ok: bool,
    pub piece_count: u64,
    pub singletons: u64,
    pub blocks: u64,
    pub theta: f64,
    /// piece_count / ell^theta
    pub normalized_count: f64,
}

impl CoverVerdict {
    pub fn ok(&self) -> bool {
        self.partition_ok && self.pieces_ok
    }
}

/// Integer-exact re-check of a cover against its polynomial.
pub fn verify_cover(
    pieces: &[CoverPiece],
    params: &CoverParams,
    p: &IntegerPolynomial,
    w: &DigitWord,
    k: u64,
    ell: u64,
) -> CoverVerdict {
    let mut coverage = vec![0u32; ell as usize];
    let mut partition_ok = true;
    let mut pieces_ok = true;
    let mut singletons = 0u64;
    let mut blocks = 0u64;
    for piece in pieces {
        let start = piece.lo.ceil() as i64;
        let end = piece.hi.ceil() as i64;
        for n in start..end {
            if n < 0 || n >= ell as i64 {
                partition_ok = false;
            } else {
                coverage[n as usize] += 1;
            }
        }
        match &piece.kind {
            PieceKind::Singleton { point } => {
                singletons += 1;
                if end - start != 1 || start != *point as i64 {
                    pieces_ok = false;
                }
            }
            PieceKind::Block { m, scale_log } => {
                blocks += 1;
                let scale = (k as u128).checked_pow(*scale_log);
                let upper = scale.and_then(|s| (m + 1).checked_mul(s));
                match (scale, upper) {
                    (Some(scale), Some(upper)) => {
                        if !w.is_factor_of(&digits_u128(*m, k)) {
                            pieces_ok = false;
                        }
                        for n in start..end {
                            let v = if n >= 0 { p.eval_u128(n as u64) } else { None };
                            match v {
                                Some(v) if m * scale <= v && v < upper => {}
                                _ => pieces_ok = false,
                            }
                        }
                    }
                    _ => pieces_ok = false,
                }
            }
        }
    }
    partition_ok &= coverage.iter().all(|&c| c == 1);
    let piece_count = pieces.len() as u64;
    CoverVerdict {
        partition_ok,
        pieces_ok,
        piece_count,
        singletons,
        blocks,
        theta: params.theta,
        normalized_count: piece_count as f64 / (ell as f64).powf(params.theta),
    }
}
