//! Analysis toolkit for base-k automatic sequences.
//!
//! A deterministic finite automaton with output (DFAO) computes a sequence
//! `a(n)` by reading the base-k digits of `n`, most significant first, and
//! emitting the output label of the state it lands in. This crate provides:
//!
//! * [`automaton`]: the [`Dfao`] type, a line-based text codec, evaluation,
//!   prefix generation, and base manipulations (leading-zero normalization,
//!   digit blocking, component restriction).
//! * [`structure`]: strongly connected components, primitivity, minimal
//!   images under the digit action, height, residue classes, and the
//!   effective alphabet size `r` assembled from those pieces.
//! * [`apk`]: generalized residue sets cut out by digit prefixes, digit
//!   suffixes, expansion-length classes, and residues modulo an integer
//!   coprime to the base; value sets, logarithmic densities, and an
//!   empirical bracket for `r`.
//! * [`complexity`]: ordinary, arithmetic, and polynomial subword
//!   complexity by exhaustive enumeration at explicit budgets, plus bound
//!   verification reports.
//! * [`cover`]: interval covers of polynomial ranges whose block pieces
//!   land on digit-pattern-constrained scales, with an exact verifier.
//! * [`uniformity`]: numeric Gowers-type uniformity norms on finite
//!   signals, over intervals and cyclic groups.
//!
//! [`machines`] holds ready-made sample automata used throughout the tests
//! and documentation.

pub mod apk;
pub mod automaton;
pub mod complexity;
pub mod cover;
pub mod machines;
pub mod structure;
pub mod uniformity;

pub use automaton::{AutomatonError, Dfao, DigitWord, ParseError, StateId};
