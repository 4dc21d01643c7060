//! Deterministic finite automata with output (DFAOs) and their text codec.
//!
//! A [`Dfao`] is a sextuple (states, initial state, digit alphabet `0..k`,
//! transition table, output alphabet, output map). It computes the sequence
//! `a(n) = label(delta(initial, digits_k(n)))` where `digits_k(n)` is the
//! base-k expansion of `n` without leading zeros; the expansion of 0 is the
//! empty word, so `a(0)` is always the label of the initial state.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

/// Index of a state in declaration order.
pub type StateId = usize;

/// Largest transition table a powered base is allowed to produce.
pub const MAX_POWERED_BASE: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("digit {digit} out of range for base {base}")]
    DigitRange { digit: u64, base: u64 },
    #[error("base must be at least 2, got {0}")]
    BaseRange(u64),
    #[error("initial state `{0}` needs a 0-self-loop; apply normalize_leading_zeros first")]
    ZeroLoopRequired(String),
    #[error("block exponent must be positive")]
    ZeroExponent,
    #[error("powered base {base}^{exponent} exceeds the table budget ({max})", max = MAX_POWERED_BASE)]
    PowerBudget { base: u64, exponent: u32 },
    #[error("state set is not closed: delta({from}, {digit}) leaves the selected component")]
    NotClosed { from: String, digit: u64 },
    #[error("state `{0}` is not in the selected component")]
    NotInComponent(String),
    #[error("value of digit word overflows u64")]
    ValueOverflow,
}

/// Errors produced by [`Dfao::parse`], with 1-based line numbers.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: base {base} is too small (need k >= 2)")]
    BaseRange { line: usize, base: u64 },
    #[error("line {line}: unknown state `{name}`")]
    UnknownState { line: usize, name: String },
    #[error("line {line}: duplicate `{what}` declaration")]
    Duplicate { line: usize, what: String },
    #[error("line {line}: state `{state}` must list exactly {expected} targets (digits 0..{expected}), got {got}")]
    TransitionArity { line: usize, state: String, expected: u64, got: usize },
    #[error("missing `{0}` declaration")]
    MissingSection(String),
    #[error("state `{0}` has no transition row")]
    MissingTransitions(String),
    #[error("state `{0}` has no output row")]
    MissingOutput(String),
}

/// A finite word of base-k digits, most significant digit first.
///
/// The empty word is the expansion of 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DigitWord {
    digits: Vec<u64>,
}

impl DigitWord {
    /// Wraps `digits`, checking each lies in `0..base`.
    pub fn new(digits: Vec<u64>, base: u64) -> Result<Self, AutomatonError> {
        if base < 2 {
            return Err(AutomatonError::BaseRange(base));
        }
        for &d in &digits {
            if d >= base {
                return Err(AutomatonError::DigitRange { digit: d, base });
            }
        }
        Ok(DigitWord { digits })
    }

    pub fn empty() -> Self {
        DigitWord { digits: Vec::new() }
    }

    /// The base-k expansion of `n` without leading zeros; `expansion(0)` is empty.
    pub fn expansion(mut n: u64, base: u64) -> Self {
        assert!(base >= 2, "base must be at least 2");
        let mut digits = Vec::new();
        while n > 0 {
            digits.push(n % base);
            n /= base;
        }
        digits.reverse();
        DigitWord { digits }
    }

    /// Numeric value of the word read in `base`.
    pub fn value(&self, base: u64) -> Result<u64, AutomatonError> {
        let mut acc: u64 = 0;
        for &d in &self.digits {
            acc = acc
                .checked_mul(base)
                .and_then(|v| v.checked_add(d))
                .ok_or(AutomatonError::ValueOverflow)?;
        }
        Ok(acc)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// True when `self` occurs as a contiguous factor of `other`.
    pub fn is_factor_of(&self, other: &[u64]) -> bool {
        let w = &self.digits;
        if w.is_empty() {
            return true;
        }
        other.windows(w.len()).any(|win| win == w.as_slice())
    }

    /// Renders the digits as a compact string, one character per digit
    /// for bases up to 36, else space-separated.
    pub fn display(&self) -> String {
        let mut s = String::new();
        for (idx, &d) in self.digits.iter().enumerate() {
            if d < 36 {
                s.push(char::from_digit(d as u32, 36).unwrap());
            } else {
                if idx > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{d}");
            }
        }
        s
    }
}

/// A deterministic finite automaton with output over the digit alphabet `0..base`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfao {
    base: u64,
    names: Vec<String>,
    initial: StateId,
    /// `delta[s][d]` is the successor of state `s` on digit `d`.
    delta: Vec<Vec<StateId>>,
    output: Vec<String>,
}

impl Dfao {
    /// Builds a DFAO from explicit tables. `delta` must be `states x base`.
    pub fn new(
        base: u64,
        names: Vec<String>,
        initial: StateId,
        delta: Vec<Vec<StateId>>,
        output: Vec<String>,
    ) -> Result<Self, AutomatonError> {
        if base < 2 {
            return Err(AutomatonError::BaseRange(base));
        }
        let n = names.len();
        assert!(n > 0, "need at least one state");
        assert!(initial < n, "initial state out of range");
        assert_eq!(delta.len(), n, "transition table must cover every state");
        assert_eq!(output.len(), n, "output table must cover every state");
        for row in &delta {
            assert_eq!(row.len(), base as usize, "each state needs one target per digit");
            for &t in row {
                assert!(t < n, "transition target out of range");
            }
        }
        Ok(Dfao { base, names, initial, delta, output })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.output[s]
    }

    pub fn step(&self, s: StateId, digit: u64) -> StateId {
        self.delta[s][digit as usize]
    }

    /// Runs the word from `s`, most significant digit first.
    pub fn walk(&self, mut s: StateId, digits: &[u64]) -> StateId {
        for &d in digits {
            s = self.delta[s][d as usize];
        }
        s
    }

    /// State reached from the initial state on the expansion of `n`.
    pub fn state_at(&self, n: u64) -> StateId {
        let mut buf = [0u64; 64];
        let mut len = 0;
        let mut m = n;
        while m > 0 {
            buf[len] = m % self.base;
            m /= self.base;
            len += 1;
        }
        let mut s = self.initial;
        for i in (0..len).rev() {
            s = self.delta[s][buf[i] as usize];
        }
        s
    }

    /// `a(n)`: output label of the state reached on the expansion of `n`.
    pub fn evaluate(&self, n: u64) -> &str {
        &self.output[self.state_at(n)]
    }

    /// States visited at positions `0..n` of the sequence, filled in linear
    /// time via `state_at(base * m + d) = step(state_at(m), d)`.
    ///
    /// Requires a 0-self-loop on the initial state so that leading zeros are
    /// harmless; see [`Dfao::normalize_leading_zeros`].
    pub fn state_prefix(&self, n: usize) -> Result<Vec<StateId>, AutomatonError> {
        if self.delta[self.initial][0] != self.initial {
            return Err(AutomatonError::ZeroLoopRequired(self.names[self.initial].clone()));
        }
        let mut out = vec![0; n];
        if n == 0 {
            return Ok(out);
        }
        out[0] = self.initial;
        let k = self.base as usize;
        for m in 0..n {
            let s = out[m];
            let lo = m.saturating_mul(k);
            if lo >= n && m > 0 {
                break;
            }
            for d in 0..k {
                let idx = match m.checked_mul(k).and_then(|v| v.checked_add(d)) {
                    Some(idx) if idx < n => idx,
                    _ => continue,
                };
                if idx == 0 {
                    continue; // position 0 is the preset initial state
                }
                out[idx] = self.delta[s][d];
            }
        }
        Ok(out)
    }

    /// First `n` output labels of the sequence. Same precondition as
    /// [`Dfao::state_prefix`].
    pub fn generate_prefix(&self, n: usize) -> Result<Vec<&str>, AutomatonError> {
        let states = self.state_prefix(n)?;
        Ok(states.into_iter().map(|s| self.output[s].as_str()).collect())
    }

    /// States reachable from the initial state, sorted.
    pub fn reachable_states(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.state_count()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for &t in &self.delta[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        (0..self.state_count()).filter(|&s| seen[s]).collect()
    }

    pub fn unreachable_states(&self) -> Vec<StateId> {
        let reach: HashSet<_> = self.reachable_states().into_iter().collect();
        (0..self.state_count()).filter(|s| !reach.contains(s)).collect()
    }

    /// Copy with unreachable states dropped; reachable states keep their
    /// relative order.
    pub fn prune_unreachable(&self) -> Dfao {
        let keep = self.reachable_states();
        self.restrict(&keep, self.initial)
            .expect("reachable set is closed under transitions")
    }

    fn restrict(&self, states: &[StateId], initial: StateId) -> Result<Dfao, AutomatonError> {
        let mut index = HashMap::new();
        for (new, &old) in states.iter().enumerate() {
            index.insert(old, new);
        }
        let new_initial = *index
            .get(&initial)
            .ok_or_else(|| AutomatonError::NotInComponent(self.names[initial].clone()))?;
        let mut delta = Vec::with_capacity(states.len());
        for &old in states {
            let mut row = Vec::with_capacity(self.base as usize);
            for d in 0..self.base {
                let t = self.delta[old][d as usize];
                match index.get(&t) {
                    Some(&new_t) => row.push(new_t),
                    None => {
                        return Err(AutomatonError::NotClosed {
                            from: self.names[old].clone(),
                            digit: d,
                        })
                    }
                }
            }
            delta.push(row);
        }
        let names = states.iter().map(|&s| self.names[s].clone()).collect();
        let output = states.iter().map(|&s| self.output[s].clone()).collect();
        Dfao::new(self.base, names, new_initial, delta, output)
    }

    /// Restriction to a transition-closed state set `component`, re-rooted at
    /// `initial`, which must carry a 0-self-loop.
    pub fn component_automaton(
        &self,
        component: &[StateId],
        initial: StateId,
    ) -> Result<Dfao, AutomatonError> {
        if !component.contains(&initial) {
            return Err(AutomatonError::NotInComponent(self.names[initial].clone()));
        }
        if self.delta[initial][0] != initial {
            return Err(AutomatonError::ZeroLoopRequired(self.names[initial].clone()));
        }
        self.restrict(component, initial)
    }

    /// Equivalent automaton whose initial state loops on digit 0, so prefix
    /// generation and digit blocking are available. If the loop is already
    /// present this is a plain copy; otherwise one fresh initial state is
    /// added and all other states keep their indices.
    pub fn normalize_leading_zeros(&self) -> Dfao {
        if self.delta[self.initial][0] == self.initial {
            return self.clone();
        }
        let mut fresh = format!("{}'", self.names[self.initial]);
        while self.names.contains(&fresh) {
            fresh.push('\'');
        }
        let new_id = self.state_count();
        let mut names = self.names.clone();
        names.push(fresh);
        let mut delta = self.delta.clone();
        let mut row: Vec<StateId> = self.delta[self.initial].clone();
        row[0] = new_id;
        delta.push(row);
        let mut output = self.output.clone();
        output.push(self.output[self.initial].clone());
        Dfao::new(self.base, names, new_id, delta, output)
            .expect("normalization preserves table validity")
    }

    /// Automaton over base `k^e` whose digits are e-blocks of base-k digits,
    /// most significant block first. Computes the same sequence. Requires a
    /// 0-self-loop on the initial state (block padding inserts leading zeros).
    pub fn power_base(&self, e: u32) -> Result<Dfao, AutomatonError> {
        if e == 0 {
            return Err(AutomatonError::ZeroExponent);
        }
        if self.delta[self.initial][0] != self.initial {
            return Err(AutomatonError::ZeroLoopRequired(self.names[self.initial].clone()));
        }
        if e == 1 {
            return Ok(self.clone());
        }
        let powered = self
            .base
            .checked_pow(e)
            .filter(|&kk| kk <= MAX_POWERED_BASE)
            .ok_or(AutomatonError::PowerBudget { base: self.base, exponent: e })?;
        let mut delta = Vec::with_capacity(self.state_count());
        for s in 0..self.state_count() {
            let mut row = Vec::with_capacity(powered as usize);
            for block in 0..powered {
                // unpack the block into e base-k digits, most significant first
                let mut digits = [0u64; 64];
                let mut v = block;
                for slot in 0..e as usize {
                    digits[e as usize - 1 - slot] = v % self.base;
                    v /= self.base;
                }
                row.push(self.walk(s, &digits[..e as usize]));
            }
            delta.push(row);
        }
        Dfao::new(powered, self.names.clone(), self.initial, delta, self.output.clone())
    }

    /// Output labels attained by reachable states, sorted and deduplicated.
    pub fn attained_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .reachable_states()
            .into_iter()
            .map(|s| self.output[s].clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Per-state label index into the sorted table of attained labels.
    /// States with unreachable-only labels still get an entry (the table is
    /// extended as needed) so the map is total.
    pub fn label_ids(&self) -> (Vec<usize>, Vec<String>) {
        let mut table = self.attained_labels();
        for s in 0..self.state_count() {
            if !table.iter().any(|l| l == &self.output[s]) {
                table.push(self.output[s].clone());
            }
        }
        let index: HashMap<&str, usize> =
            table.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let ids = (0..self.state_count()).map(|s| index[self.output[s].as_str()]).collect();
        (ids, table)
    }

    /// Structural equality up to a renaming of states that fixes the initial
    /// state. Both machines are canonicalized by breadth-first traversal in
    /// digit order, so unreachable states are ignored.
    pub fn is_isomorphic(&self, other: &Dfao) -> bool {
        if self.base != other.base {
            return false;
        }
        fn signature(a: &Dfao) -> (Vec<Vec<usize>>, Vec<&str>) {
            let mut order = HashMap::new();
            order.insert(a.initial, 0usize);
            let mut queue = VecDeque::from([a.initial]);
            let mut seq = vec![a.initial];
            while let Some(s) = queue.pop_front() {
                for d in 0..a.base {
                    let t = a.delta[s][d as usize];
                    if !order.contains_key(&t) {
                        order.insert(t, seq.len());
                        seq.push(t);
                        queue.push_back(t);
                    }
                }
            }
            let table = seq
                .iter()
                .map(|&s| a.delta[s].iter().map(|t| order[t]).collect())
                .collect();
            let labels = seq.iter().map(|&s| a.output[s].as_str()).collect();
            (table, labels)
        }
        signature(self) == signature(other)
    }

    /// Parses the line-based text format:
    ///
    /// ```text
    /// base 2
    /// states e o
    /// initial e
    /// trans e: e o
    /// trans o: o e
    /// out e: 0
    /// out o: 1
    /// ```
    ///
    /// `#` starts a comment. Lines may appear in any order; the serializer
    /// always emits the canonical order above.
    pub fn parse(text: &str) -> Result<Dfao, ParseError> {
        let mut base: Option<(usize, u64)> = None;
        let mut names: Option<(usize, Vec<String>)> = None;
        let mut initial: Option<(usize, String)> = None;
        let mut trans: Vec<(usize, String, Vec<String>)> = Vec::new();
        let mut outs: Vec<(usize, String, String)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            match tokens[0] {
                "base" => {
                    if base.is_some() {
                        return Err(ParseError::Duplicate { line, what: "base".into() });
                    }
                    if tokens.len() != 2 {
                        return Err(ParseError::Syntax { line, msg: "expected `base k`".into() });
                    }
                    let k: u64 = tokens[1].parse().map_err(|_| ParseError::Syntax {
                        line,
                        msg: format!("invalid base `{}`", tokens[1]),
                    })?;
                    if k < 2 {
                        return Err(ParseError::BaseRange { line, base: k });
                    }
                    base = Some((line, k));
                }
                "states" => {
                    if names.is_some() {
                        return Err(ParseError::Duplicate { line, what: "states".into() });
                    }
                    if tokens.len() < 2 {
                        return Err(ParseError::Syntax {
                            line,
                            msg: "expected at least one state name".into(),
                        });
                    }
                    let list: Vec<String> = tokens[1..].iter().map(|s| s.to_string()).collect();
                    let mut seen = HashSet::new();
                    for n in &list {
                        if !seen.insert(n.clone()) {
                            return Err(ParseError::Duplicate { line, what: format!("state `{n}`") });
                        }
                    }
                    names = Some((line, list));
                }
                "initial" => {
                    if initial.is_some() {
                        return Err(ParseError::Duplicate { line, what: "initial".into() });
                    }
                    if tokens.len() != 2 {
                        return Err(ParseError::Syntax { line, msg: "expected `initial s`".into() });
                    }
                    initial = Some((line, tokens[1].to_string()));
                }
                "trans" => {
                    if tokens.len() < 2 || !tokens[1].ends_with(':') {
                        return Err(ParseError::Syntax {
                            line,
                            msg: "expected `trans s: t0 t1 ...`".into(),
                        });
                    }
                    let state = tokens[1].trim_end_matches(':').to_string();
                    let targets = tokens[2..].iter().map(|s| s.to_string()).collect();
                    trans.push((line, state, targets));
                }
                "out" => {
                    if tokens.len() != 3 || !tokens[1].ends_with(':') {
                        return Err(ParseError::Syntax {
                            line,
                            msg: "expected `out s: label` with a single-token label".into(),
                        });
                    }
                    let state = tokens[1].trim_end_matches(':').to_string();
                    outs.push((line, state, tokens[2].to_string()));
                }
                other => {
                    return Err(ParseError::Syntax {
                        line,
                        msg: format!("unknown directive `{other}`"),
                    })
                }
            }
        }

        let (_, k) = base.ok_or_else(|| ParseError::MissingSection("base".into()))?;
        let (_, names) = names.ok_or_else(|| ParseError::MissingSection("states".into()))?;
        let (init_line, init_name) =
            initial.ok_or_else(|| ParseError::MissingSection("initial".into()))?;
        let index: HashMap<&str, StateId> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let initial_id = *index
            .get(init_name.as_str())
            .ok_or(ParseError::UnknownState { line: init_line, name: init_name.clone() })?;

        let mut delta: Vec<Option<Vec<StateId>>> = vec![None; names.len()];
        for (line, state, targets) in trans {
            let sid = *index
                .get(state.as_str())
                .ok_or(ParseError::UnknownState { line, name: state.clone() })?;
            if delta[sid].is_some() {
                return Err(ParseError::Duplicate { line, what: format!("trans `{state}`") });
            }
            if targets.len() != k as usize {
                return Err(ParseError::TransitionArity {
                    line,
                    state,
                    expected: k,
                    got: targets.len(),
                });
            }
            let mut row = Vec::with_capacity(k as usize);
            for t in targets {
                row.push(
                    *index
                        .get(t.as_str())
                        .ok_or(ParseError::UnknownState { line, name: t.clone() })?,
                );
            }
            delta[sid] = Some(row);
        }
        let mut output: Vec<Option<String>> = vec![None; names.len()];
        for (line, state, label) in outs {
            let sid = *index
                .get(state.as_str())
                .ok_or(ParseError::UnknownState { line, name: state.clone() })?;
            if output[sid].is_some() {
                return Err(ParseError::Duplicate { line, what: format!("out `{state}`") });
            }
            output[sid] = Some(label);
        }

        let mut delta_full = Vec::with_capacity(names.len());
        let mut output_full = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            delta_full
                .push(delta[i].take().ok_or_else(|| ParseError::MissingTransitions(name.clone()))?);
            output_full
                .push(output[i].take().ok_or_else(|| ParseError::MissingOutput(name.clone()))?);
        }
        Ok(Dfao {
            base: k,
            names,
            initial: initial_id,
            delta: delta_full,
            output: output_full,
        })
    }

    /// Canonical text form; [`Dfao::parse`] followed by `serialize` is the
    /// identity on files in this shape.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "base {}", self.base);
        let _ = writeln!(s, "states {}", self.names.join(" "));
        let _ = writeln!(s, "initial {}", self.names[self.initial]);
        for (i, name) in self.names.iter().enumerate() {
            let row: Vec<&str> = self.delta[i].iter().map(|&t| self.names[t].as_str()).collect();
            let _ = writeln!(s, "trans {name}: {}", row.join(" "));
        }
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(s, "out {name}: {}", self.output[i]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines;

    #[test]
    fn expansion_of_zero_is_empty() {
        let w = DigitWord::expansion(0, 2);
        assert!(w.is_empty());
        assert_eq!(w.value(2).unwrap(), 0);
    }

    #[test]
    fn expansion_round_trips_value() {
        for base in [2u64, 3, 5, 10] {
            for n in 0..200u64 {
                let w = DigitWord::expansion(n, base);
                assert_eq!(w.value(base).unwrap(), n);
                if n > 0 {
                    assert_ne!(w.digits()[0], 0, "no leading zeros");
                }
            }
        }
    }

    #[test]
    fn digit_word_rejects_out_of_range() {
        assert!(DigitWord::new(vec![0, 2], 2).is_err());
        assert!(DigitWord::new(vec![0, 1], 2).is_ok());
    }

    #[test]
    fn parse_two_state_flip_machine() {
        let a = machines::thue_morse();
        assert_eq!(a.state_count(), 2);
        assert_eq!(a.base(), 2);
        assert_eq!(a.name(a.initial()), "e");
    }

    #[test]
    fn evaluate_at_zero_is_initial_label() {
        let a = machines::thue_morse();
        assert_eq!(a.evaluate(0), "0");
        assert_eq!(a.evaluate(3), "0"); // digit sum of 11 is even
    }

    #[test]
    fn prefix_of_digit_sum_parity_sequence() {
        let a = machines::thue_morse();
        let p = a.generate_prefix(8).unwrap();
        assert_eq!(p, vec!["0", "1", "1", "0", "1", "0", "0", "1"]);
    }

    #[test]
    fn prefix_matches_pointwise_evaluation() {
        for a in [machines::thue_morse(), machines::k3_height2(), machines::mod3_parity()] {
            let n = 1 << 12;
            let prefix = a.generate_prefix(n).unwrap();
            for i in 0..n {
                assert_eq!(prefix[i], a.evaluate(i as u64), "position {i}");
            }
        }
    }

    #[test]
    fn five_state_base3_sample_states() {
        let a = machines::k3_height2();
        assert_eq!(a.state_count(), 5);
        assert_eq!(a.name(a.state_at(7)), "γ");
        assert_eq!(a.name(a.state_at(13)), "γ");
        assert_eq!(a.state_at(0), a.initial());
        let expected = [
            "α", "ε", "β", "ε", "δ", "ε", "β", "γ", "α", "ε", "δ", "ε", "δ", "γ", "α",
        ];
        let got = a.generate_prefix(15).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn parse_rejects_wrong_transition_arity() {
        let text = "base 3\nstates a\ninitial a\ntrans a: a a a a\nout a: x\n";
        match Dfao::parse(text) {
            Err(ParseError::TransitionArity { expected: 3, got: 4, .. }) => {}
            other => panic!("expected arity error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_unknown_state_and_small_base() {
        let text = "base 2\nstates a\ninitial b\ntrans a: a a\nout a: x\n";
        assert!(matches!(Dfao::parse(text), Err(ParseError::UnknownState { .. })));
        let text = "base 1\nstates a\ninitial a\ntrans a: a\nout a: x\n";
        assert!(matches!(Dfao::parse(text), Err(ParseError::BaseRange { .. })));
    }

    #[test]
    fn parse_reports_missing_rows() {
        let text = "base 2\nstates a b\ninitial a\ntrans a: a b\nout a: x\nout b: y\n";
        assert!(matches!(Dfao::parse(text), Err(ParseError::MissingTransitions(s)) if s == "b"));
    }

    #[test]
    fn serializer_round_trips_canonical_files() {
        for a in [
            machines::thue_morse(),
            machines::k3_height2(),
            machines::contains_11(),
            machines::constant(3, "c"),
        ] {
            let text = a.serialize();
            let b = Dfao::parse(&text).unwrap();
            assert_eq!(b.serialize(), text);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# sample\nbase 2\n\nstates e o # names\ninitial e\ntrans e: e o\ntrans o: o e\nout e: 0\nout o: 1\n";
        let a = Dfao::parse(text).unwrap();
        assert!(a.is_isomorphic(&machines::thue_morse()));
    }

    #[test]
    fn normalization_is_identity_with_zero_loop() {
        let a = machines::thue_morse();
        let b = a.normalize_leading_zeros();
        assert_eq!(a, b);
    }

    #[test]
    fn normalization_adds_one_state_and_preserves_values() {
        let a = machines::no_zero_loop();
        assert_ne!(a.step(a.initial(), 0), a.initial());
        let b = a.normalize_leading_zeros();
        assert_eq!(b.state_count(), a.state_count() + 1);
        assert_eq!(b.step(b.initial(), 0), b.initial());
        for n in 0..=1000u64 {
            assert_eq!(a.evaluate(n), b.evaluate(n), "n={n}");
        }
        // idempotent once the loop exists
        let c = b.normalize_leading_zeros();
        assert_eq!(b.state_count(), c.state_count());
    }

    #[test]
    fn prefix_requires_zero_loop() {
        let a = machines::no_zero_loop();
        assert!(matches!(a.state_prefix(4), Err(AutomatonError::ZeroLoopRequired(_))));
    }

    #[test]
    fn power_base_identity_at_exponent_one() {
        let a = machines::thue_morse();
        assert_eq!(a.power_base(1).unwrap(), a);
    }

    #[test]
    fn power_base_two_agrees_pointwise() {
        let a = machines::thue_morse();
        let b = a.power_base(2).unwrap();
        assert_eq!(b.base(), 4);
        for n in 0..4096u64 {
            assert_eq!(a.evaluate(n), b.evaluate(n), "n={n}");
        }
        let c = machines::k3_height2();
        let d = c.power_base(2).unwrap();
        assert_eq!(d.base(), 9);
        for n in 0..729u64 {
            assert_eq!(c.state_at(n), d.state_at(n), "n={n}");
        }
    }

    #[test]
    fn power_base_rejects_zero_exponent() {
        let a = machines::thue_morse();
        assert!(matches!(a.power_base(0), Err(AutomatonError::ZeroExponent)));
    }

    #[test]
    fn power_base_rejects_oversized_tables() {
        let a = machines::thue_morse();
        assert!(matches!(a.power_base(40), Err(AutomatonError::PowerBudget { .. })));
    }

    #[test]
    fn component_extraction_recovers_embedded_core() {
        let a = machines::feeding_thue_morse();
        // states 1, 2 form the closed core
        let core = a.component_automaton(&[1, 2], 1).unwrap();
        assert!(core.is_isomorphic(&machines::thue_morse()));
    }

    #[test]
    fn component_extraction_rejects_open_sets() {
        let a = machines::feeding_thue_morse();
        let err = a.component_automaton(&[0, 1], 1);
        assert!(matches!(err, Err(AutomatonError::NotClosed { .. })));
    }

    #[test]
    fn whole_state_set_is_a_component() {
        let a = machines::thue_morse();
        let all: Vec<StateId> = (0..a.state_count()).collect();
        let b = a.component_automaton(&all, a.initial()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unreachable_states_are_kept_by_parser_and_listed() {
        let text = "base 2\nstates a b z\ninitial a\ntrans a: a b\ntrans b: b a\ntrans z: z z\nout a: 0\nout b: 1\nout z: 9\n";
        let a = Dfao::parse(text).unwrap();
        assert_eq!(a.state_count(), 3);
        assert_eq!(a.unreachable_states(), vec![2]);
        let pruned = a.prune_unreachable();
        assert_eq!(pruned.state_count(), 2);
        assert_eq!(pruned.attained_labels(), vec!["0".to_string(), "1".to_string()]);
    }

    #[test]
    fn isomorphism_is_renaming_invariant() {
        let renamed = "base 2\nstates q0 q1\ninitial q0\ntrans q0: q0 q1\ntrans q1: q1 q0\nout q0: 0\nout q1: 1\n";
        let b = Dfao::parse(renamed).unwrap();
        assert!(b.is_isomorphic(&machines::thue_morse()));
        assert!(!b.is_isomorphic(&machines::contains_11()));
    }
}
