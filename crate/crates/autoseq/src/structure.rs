//! Structural analysis of a DFAO's transition digraph: strongly connected
//! components, primitivity, minimal image sets, height, residue classes, and
//! the effective alphabet size r.
//!
//! The pipeline in [`effective_alphabet_size`] reduces an arbitrary machine
//! to primitive pieces. For each final component it powers the base so some
//! member state carries a 0-self-loop, extracts that piece, powers again so
//! the working base K satisfies K ≡ 1 (mod h), and reads r off the table
//! S_{i,j} = M_i ∩ C_j: r is the largest number of distinct output labels
//! attained inside a single cell. The global r is the maximum over pieces.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{AutomatonError, Dfao, DigitWord, StateId};

#[derive(Debug, Error)]
pub enum StructureError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("automaton is not strongly connected; extract a component first")]
    NotStronglyConnected,
    #[error("image search visited {visited} sets, exceeding the budget {budget}")]
    ImageBudget { visited: usize, budget: usize },
    #[error("modulus {q} shares a factor with base {base}")]
    CoprimeRequired { q: u64, base: u64 },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error(
        "no loop word with value {residue} mod {q} and length {len_class} mod {m}; \
         the target residue is likely not a multiple of the height"
    )]
    LoopWordNotFound { q: u64, residue: u64, m: u64, len_class: u64 },
}

/// Tunables for the structural pipeline.
#[derive(Clone, Debug)]
pub struct StructureConfig {
    /// Cap on distinct image sets visited by the subset search.
    pub image_budget: usize,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig { image_budget: 1 << 18 }
    }
}

/// Strongly connected components of the transition digraph.
#[derive(Clone, Debug)]
pub struct ComponentDecomposition {
    /// Each component sorted ascending; the list sorted by smallest member.
    pub components: Vec<Vec<StateId>>,
    /// Adjacency lists between component indices (deduplicated, sorted).
    pub condensation: Vec<Vec<usize>>,
    /// True when the component has no outgoing condensation edge.
    pub final_flags: Vec<bool>,
}

impl ComponentDecomposition {
    pub fn component_of(&self, s: StateId) -> usize {
        self.components
            .iter()
            .position(|c| c.binary_search(&s).is_ok())
            .expect("components partition the state set")
    }

    pub fn final_components(&self) -> impl Iterator<Item = &Vec<StateId>> {
        self.components
            .iter()
            .zip(&self.final_flags)
            .filter_map(|(c, &f)| f.then_some(c))
    }
}

/// Strong connectivity plus the digraph period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Primitivity {
    pub strongly_connected: bool,
    /// gcd of all closed-walk lengths; `None` when not strongly connected.
    pub period: Option<u64>,
    pub primitive: bool,
}

/// The family of minimal images under the digit action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalImages {
    /// Cardinality shared by every minimal image.
    pub rank: usize,
    /// Sorted state sets; `images[0]` contains the initial state and is the
    /// lexicographically least such set, remaining sets follow in lex order.
    pub images: Vec<Vec<StateId>>,
    /// `transitions[i][d]` is the index of the image reached from
    /// `images[i]` on digit `d`; the family is closed, so this is total.
    pub transitions: Vec<Vec<usize>>,
}

/// Height h with its residue labeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Height {
    pub h: u64,
    /// `labeling[s]` is the residue class of state `s` modulo `h`.
    pub labeling: Vec<u64>,
}

/// Analysis of one primitive piece.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    /// State names of the piece, in piece order.
    pub states: Vec<String>,
    pub initial: String,
    /// Working base K after powering; K ≡ 1 (mod height).
    pub base_used: u64,
    pub rank: usize,
    pub images: Vec<Vec<String>>,
    pub image_transitions: Vec<Vec<usize>>,
    pub height: u64,
    /// `classes[j]` lists the states with residue j.
    pub classes: Vec<Vec<String>>,
    /// `sij[i][j]` is the intersection of image i with class j.
    pub sij: Vec<Vec<Vec<String>>>,
    /// Largest number of distinct labels in one `sij` cell.
    pub r: usize,
}

/// Full structural report: per-piece tables and the global r.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub r: usize,
    /// Labels attained by the sequence, sorted.
    pub attained_labels: Vec<String>,
    pub components: Vec<ComponentReport>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 { 0 } else { a / gcd(a, b) * b }
}

/// Strongly connected components via iterative Tarjan, with condensation
/// edges and final flags.
pub fn decompose(a: &Dfao) -> ComponentDecomposition {
    let n = a.state_count();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<StateId> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<StateId>> = Vec::new();

    // explicit DFS stack: (state, next digit to explore)
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(StateId, u64)> = vec![(root, 0)];
        while let Some(&mut (s, ref mut d)) = work.last_mut() {
            if *d == 0 {
                index[s] = next_index;
                low[s] = next_index;
                next_index += 1;
                stack.push(s);
                on_stack[s] = true;
            }
            if *d < a.base() {
                let t = a.step(s, *d);
                *d += 1;
                if index[t] == usize::MAX {
                    work.push((t, 0));
                } else if on_stack[t] {
                    low[s] = low[s].min(index[t]);
                }
            } else {
                work.pop();
                if let Some(&(p, _)) = work.last() {
                    low[p] = low[p].min(low[s]);
                }
                if low[s] == index[s] {
                    let mut comp = Vec::new();
                    loop {
                        let t = stack.pop().expect("tarjan stack underflow");
                        on_stack[t] = false;
                        comp.push(t);
                        if t == s {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
            }
        }
    }

    components.sort_by_key(|c| c[0]);
    let mut comp_of = vec![0usize; n];
    for (i, c) in components.iter().enumerate() {
        for &s in c {
            comp_of[s] = i;
        }
    }
    let mut condensation: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); components.len()];
    for s in 0..n {
        for d in 0..a.base() {
            let t = a.step(s, d);
            if comp_of[s] != comp_of[t] {
                condensation[comp_of[s]].insert(comp_of[t]);
            }
        }
    }
    let final_flags = condensation.iter().map(|e| e.is_empty()).collect();
    let condensation = condensation.into_iter().map(|e| e.into_iter().collect()).collect();
    ComponentDecomposition { components, condensation, final_flags }
}

/// Strong connectivity plus the period (gcd of closed-walk lengths through
/// the initial state), computed from BFS level differences.
pub fn is_primitive(a: &Dfao) -> Primitivity {
    let decomp = decompose(a);
    if decomp.components.len() != 1 {
        return Primitivity { strongly_connected: false, period: None, primitive: false };
    }
    let n = a.state_count();
    let mut level = vec![i64::MIN; n];
    level[a.initial()] = 0;
    let mut queue = VecDeque::from([a.initial()]);
    while let Some(s) = queue.pop_front() {
        for d in 0..a.base() {
            let t = a.step(s, d);
            if level[t] == i64::MIN {
                level[t] = level[s] + 1;
                queue.push_back(t);
            }
        }
    }
    let mut g: u64 = 0;
    for s in 0..n {
        for d in 0..a.base() {
            let t = a.step(s, d);
            g = gcd(g, (level[s] + 1 - level[t]).unsigned_abs());
        }
    }
    // a strongly connected finite digraph always has a level-inconsistent edge
    debug_assert!(g > 0);
    Primitivity { strongly_connected: true, period: Some(g), primitive: g == 1 }
}

/// Minimal images of the full state set under the digit action.
///
/// Searches breadth-first over the sets δ(S, w). The minimal cardinality c
/// is the rank; the family of size-c sets is closed under every digit, and
/// any member maps onto any other, so the returned transition table is
/// total. Requires strong connectivity (which also guarantees some minimal
/// image contains the initial state) and a 0-self-loop at the initial state.
pub fn minimal_images(a: &Dfao, budget: usize) -> Result<MinimalImages, StructureError> {
    if a.step(a.initial(), 0) != a.initial() {
        return Err(AutomatonError::ZeroLoopRequired(a.name(a.initial()).to_string()).into());
    }
    if decompose(a).components.len() != 1 {
        return Err(StructureError::NotStronglyConnected);
    }
    let full: Vec<StateId> = (0..a.state_count()).collect();
    let mut seen: HashMap<Vec<StateId>, ()> = HashMap::new();
    seen.insert(full.clone(), ());
    let mut queue = VecDeque::from([full]);
    let mut visited: Vec<Vec<StateId>> = Vec::new();
    while let Some(set) = queue.pop_front() {
        visited.push(set.clone());
        for d in 0..a.base() {
            let mut next: Vec<StateId> = set.iter().map(|&s| a.step(s, d)).collect();
            next.sort_unstable();
            next.dedup();
            if !seen.contains_key(&next) {
                if seen.len() >= budget {
                    return Err(StructureError::ImageBudget { visited: seen.len(), budget });
                }
                seen.insert(next.clone(), ());
                queue.push_back(next);
            }
        }
    }
    let rank = visited.iter().map(|s| s.len()).min().expect("at least the full set");
    let mut family: Vec<Vec<StateId>> = visited.into_iter().filter(|s| s.len() == rank).collect();
    family.sort();
    family.dedup();
    // root the family at the least image containing the initial state
    let s0 = a.initial();
    let first = family
        .iter()
        .position(|img| img.binary_search(&s0).is_ok())
        .unwrap_or(0);
    let head = family.remove(first);
    family.insert(0, head);
    let index: HashMap<&[StateId], usize> =
        family.iter().enumerate().map(|(i, img)| (img.as_slice(), i)).collect();
    let mut transitions = Vec::with_capacity(family.len());
    for img in &family {
        let mut row = Vec::with_capacity(a.base() as usize);
        for d in 0..a.base() {
            let mut next: Vec<StateId> = img.iter().map(|&s| a.step(s, d)).collect();
            next.sort_unstable();
            next.dedup();
            let j = *index
                .get(next.as_slice())
                .expect("digit action is closed on the family of minimal images");
            row.push(j);
        }
        transitions.push(row);
    }
    Ok(MinimalImages { rank, images: family, transitions })
}

/// Tries to label states with residues mod `m` satisfying `phi(s0) = 0` and
/// `phi(step(s, d)) ≡ base·phi(s) + d (mod m)` everywhere. Returns the
/// labeling, or `None` on a conflict.
pub fn height_labeling(a: &Dfao, m: u64) -> Option<Vec<u64>> {
    assert!(m >= 1);
    let n = a.state_count();
    let mut phi: Vec<Option<u64>> = vec![None; n];
    phi[a.initial()] = Some(0);
    let mut queue = VecDeque::from([a.initial()]);
    while let Some(s) = queue.pop_front() {
        let v = phi[s].expect("queued states are labeled");
        for d in 0..a.base() {
            let t = a.step(s, d);
            let want = ((a.base() as u128 * v as u128 + d as u128) % m as u128) as u64;
            match phi[t] {
                None => {
                    phi[t] = Some(want);
                    queue.push_back(t);
                }
                Some(have) if have != want => return None,
                Some(_) => {}
            }
        }
    }
    Some(phi.into_iter().map(|v| v.unwrap_or(0)).collect())
}

/// Height: the largest modulus m coprime to the base that admits a residue
/// labeling. Since the classes partition the states, m never exceeds the
/// state count, so the search is finite. Requires a 0-self-loop at the
/// initial state (leading-zero invariance) and full reachability.
pub fn height(a: &Dfao) -> Result<Height, StructureError> {
    if a.step(a.initial(), 0) != a.initial() {
        return Err(AutomatonError::ZeroLoopRequired(a.name(a.initial()).to_string()).into());
    }
    assert!(
        a.unreachable_states().is_empty(),
        "height is defined on the reachable part; prune first"
    );
    for m in (1..=a.state_count() as u64).rev() {
        if gcd(m, a.base()) != 1 {
            continue;
        }
        if let Some(labeling) = height_labeling(a, m) {
            return Ok(Height { h: m, labeling });
        }
    }
    unreachable!("m = 1 always admits the trivial labeling")
}

/// Independent cross-check for the height: the gcd of all positions
/// `d` in `[1, N)` at which the state sequence revisits its value at 0.
/// Returns 0 when there is no revisit below N.
pub fn height_gcd_oracle(a: &Dfao, n: u64) -> Result<u64, StructureError> {
    let states = a.state_prefix(n as usize)?;
    let mut g = 0u64;
    for (d, &s) in states.iter().enumerate().skip(1) {
        if s == states[0] {
            g = gcd(g, d as u64);
        }
    }
    Ok(g)
}

/// Shortest word u with `walk(s0, u) = s0`, `value(u) ≡ residue (mod q)` and
/// `|u| ≡ len_class (mod m)`, via BFS on the product of the state graph with
/// the two residue trackers. For primitive machines such a word exists
/// whenever the height divides `residue`; an unreachable target is reported
/// as [`StructureError::LoopWordNotFound`].
pub fn find_congruent_loop_word(
    a: &Dfao,
    q: u64,
    residue: u64,
    m: u64,
    len_class: u64,
) -> Result<DigitWord, StructureError> {
    if q == 0 || m == 0 {
        return Err(StructureError::ZeroModulus);
    }
    if gcd(q, a.base()) != 1 {
        return Err(StructureError::CoprimeRequired { q, base: a.base() });
    }
    if a.step(a.initial(), 0) != a.initial() {
        return Err(AutomatonError::ZeroLoopRequired(a.name(a.initial()).to_string()).into());
    }
    let qm = (q * m) as usize;
    let node = |s: StateId, v: u64, l: u64| -> usize { s * qm + (v * m + l) as usize };
    let start = node(a.initial(), 0, 0);
    let target = node(a.initial(), residue % q, len_class % m);
    let size = a.state_count() * qm;
    let mut parent: Vec<Option<(usize, u64)>> = vec![None; size];
    let mut seen = vec![false; size];
    seen[start] = true;
    let mut queue = VecDeque::from([(a.initial(), 0u64, 0u64)]);
    if start == target {
        return Ok(DigitWord::empty());
    }
    while let Some((s, v, l)) = queue.pop_front() {
        let here = node(s, v, l);
        for d in 0..a.base() {
            let t = a.step(s, d);
            let v2 = ((v as u128 * a.base() as u128 + d as u128) % q as u128) as u64;
            let l2 = (l + 1) % m;
            let next = node(t, v2, l2);
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((here, d));
                if next == target {
                    let mut digits = Vec::new();
                    let mut cur = next;
                    while cur != start {
                        let (prev, digit) = parent[cur].expect("parent chain reaches the start");
                        digits.push(digit);
                        cur = prev;
                    }
                    digits.reverse();
                    return Ok(DigitWord::new(digits, a.base()).expect("digits from the table"));
                }
                queue.push_back((t, v2, l2));
            }
        }
    }
    Err(StructureError::LoopWordNotFound { q, residue, m, len_class })
}

fn multiplicative_order(base: u64, modulus: u64) -> u32 {
    assert!(modulus >= 1 && gcd(base, modulus) == 1);
    let target = 1 % modulus;
    let mut acc = base % modulus;
    let mut e = 1u32;
    while acc != target {
        acc = ((acc as u128 * base as u128) % modulus as u128) as u64;
        e += 1;
    }
    e
}

/// Least common multiple of the 0-cycle lengths inside a transition-closed
/// state set. Powering the base by this makes every cycle state loop on 0.
fn zero_cycle_lcm(a: &Dfao, comp: &[StateId]) -> u64 {
    let mut lengths: BTreeSet<u64> = BTreeSet::new();
    let mut seen_cycle_min: BTreeSet<StateId> = BTreeSet::new();
    for &s in comp {
        // advance enough to be inside the cycle, then measure it
        let mut x = s;
        for _ in 0..comp.len() {
            x = a.step(x, 0);
        }
        let mut len = 1u64;
        let mut mn = x;
        let mut y = a.step(x, 0);
        while y != x {
            mn = mn.min(y);
            y = a.step(y, 0);
            len += 1;
        }
        if seen_cycle_min.insert(mn) {
            lengths.insert(len);
        }
    }
    lengths.into_iter().fold(1, lcm)
}

fn analyze_piece(piece: &Dfao, config: &StructureConfig) -> Result<ComponentReport, StructureError> {
    let ht = height(piece)?;
    let e = multiplicative_order(piece.base(), ht.h);
    let work = if e > 1 { piece.power_base(e)? } else { piece.clone() };
    let ht = height(&work)?;
    debug_assert_eq!(work.base() % ht.h, 1 % ht.h);
    let mi = minimal_images(&work, config.image_budget)?;

    let h = ht.h as usize;
    let mut classes: Vec<Vec<StateId>> = vec![Vec::new(); h];
    for s in 0..work.state_count() {
        classes[ht.labeling[s] as usize].push(s);
    }
    let names = |set: &[StateId]| -> Vec<String> {
        set.iter().map(|&s| work.name(s).to_string()).collect()
    };
    let mut sij: Vec<Vec<Vec<StateId>>> = Vec::with_capacity(mi.images.len());
    let mut r = 0usize;
    for img in &mi.images {
        let mut row = Vec::with_capacity(h);
        for class in &classes {
            let cell: Vec<StateId> =
                img.iter().copied().filter(|s| class.contains(s)).collect();
            let labels: BTreeSet<&str> = cell.iter().map(|&s| work.label(s)).collect();
            r = r.max(labels.len());
            row.push(cell);
        }
        sij.push(row);
    }

    Ok(ComponentReport {
        states: names(&(0..work.state_count()).collect::<Vec<_>>()),
        initial: work.name(work.initial()).to_string(),
        base_used: work.base(),
        rank: mi.rank,
        images: mi.images.iter().map(|img| names(img)).collect(),
        image_transitions: mi.transitions,
        height: ht.h,
        classes: classes.iter().map(|c| names(c)).collect(),
        sij: sij
            .iter()
            .map(|row| row.iter().map(|cell| names(cell)).collect())
            .collect(),
        r,
    })
}

/// Effective alphabet size r of the sequence computed by `a`, with the full
/// per-piece tables.
///
/// The machine is normalized and pruned, then every final component is
/// analyzed: the base is powered by the lcm of the component's 0-cycle
/// lengths so each terminal piece owns a state with a 0-self-loop, the
/// piece is extracted there, and the primitive analysis runs on it. r is
/// the maximum over pieces.
pub fn effective_alphabet_size(
    a: &Dfao,
    config: &StructureConfig,
) -> Result<StructureReport, StructureError> {
    let b = a.normalize_leading_zeros().prune_unreachable();
    let decomp = decompose(&b);
    let mut reports: Vec<ComponentReport> = Vec::new();
    for comp in decomp.final_components() {
        let l = zero_cycle_lcm(&b, comp);
        let powered = if l > 1 {
            b.power_base(u32::try_from(l).expect("cycle lcm fits in u32"))?
        } else {
            b.clone()
        };
        let comp_set: BTreeSet<StateId> = comp.iter().copied().collect();
        let sub = decompose(&powered);
        for (i, piece_states) in sub.components.iter().enumerate() {
            if !sub.final_flags[i] || !piece_states.iter().all(|s| comp_set.contains(s)) {
                continue;
            }
            let s0 = piece_states
                .iter()
                .copied()
                .find(|&s| powered.step(s, 0) == s)
                .expect("a terminal piece always contains a 0-loop state after powering");
            let piece = powered.component_automaton(piece_states, s0)?;
            reports.push(analyze_piece(&piece, config)?);
        }
    }
    let r = reports.iter().map(|c| c.r).max().unwrap_or(0);
    Ok(StructureReport { r, attained_labels: b.attained_labels(), components: reports })
}
