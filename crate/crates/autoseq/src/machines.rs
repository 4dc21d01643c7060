//! Small sample automata used throughout the tests and the command line
//! examples. Each constructor documents the sequence it computes.

use crate::automaton::Dfao;

fn build(
    base: u64,
    names: &[&str],
    initial: usize,
    delta: &[&[usize]],
    output: &[&str],
) -> Dfao {
    Dfao::new(
        base,
        names.iter().map(|s| s.to_string()).collect(),
        initial,
        delta.iter().map(|row| row.to_vec()).collect(),
        output.iter().map(|s| s.to_string()).collect(),
    )
    .expect("static table is well formed")
}

/// Parity of the binary digit sum: 0, 1, 1, 0, 1, 0, 0, 1, ...
pub fn thue_morse() -> Dfao {
    build(2, &["e", "o"], 0, &[&[0, 1], &[1, 0]], &["0", "1"])
}

/// Five state base-3 machine with identity outputs. Its 0-kernel splits the
/// states into two residue classes, so it exercises the full structural
/// pipeline: rank 4, height 2, effective alphabet 2.
pub fn k3_height2() -> Dfao {
    build(
        3,
        &["α", "β", "γ", "δ", "ε"],
        0,
        &[
            &[0, 4, 1], // α
            &[1, 2, 0], // β
            &[2, 0, 2], // γ
            &[3, 2, 0], // δ
            &[4, 3, 4], // ε
        ],
        &["α", "β", "γ", "δ", "ε"],
    )
}

/// n mod 3 read from binary digits: state r_i holds n ≡ i (mod 3).
pub fn mod3_parity() -> Dfao {
    build(
        2,
        &["r0", "r1", "r2"],
        0,
        &[&[0, 1], &[2, 0], &[1, 2]],
        &["0", "1", "2"],
    )
}

/// Indicator of a `11` factor in the binary expansion.
pub fn contains_11() -> Dfao {
    build(
        2,
        &["none", "one", "done"],
        0,
        &[&[0, 1], &[0, 2], &[2, 2]],
        &["0", "0", "1"],
    )
}

/// Last base-k digit of n, with a(0) = 0.
pub fn last_digit(k: u64) -> Dfao {
    assert!(k >= 2);
    let names: Vec<String> = (0..k).map(|d| format!("d{d}")).collect();
    let delta: Vec<Vec<usize>> = (0..k).map(|_| (0..k as usize).collect()).collect();
    let output: Vec<String> = (0..k).map(|d| d.to_string()).collect();
    Dfao::new(k, names, 0, delta, output).unwrap()
}

/// One state, constant output.
pub fn constant(k: u64, label: &str) -> Dfao {
    assert!(k >= 2);
    Dfao::new(
        k,
        vec!["c".to_string()],
        0,
        vec![(0..k as usize).map(|_| 0).collect()],
        vec![label.to_string()],
    )
    .unwrap()
}

/// Parity of the binary expansion length: a(0) = 0, then 1 for n in [1,2),
/// 0 for n in [2,4), 1 for n in [4,8), and so on. Its transition graph has
/// period 2, so it exercises the non-primitive branch of the analysis.
pub fn length_parity() -> Dfao {
    // start loops on 0; first nonzero digit enters the flip pair
    build(
        2,
        &["start", "even", "odd"],
        0,
        &[&[0, 2], &[2, 2], &[1, 1]],
        &["0", "0", "1"],
    )
}

/// Digit-sum parity automaton behind a transient feeder state. The core on
/// states 1, 2 is closed; state 0 only routes into it. Used to test
/// component extraction.
pub fn feeding_thue_morse() -> Dfao {
    build(
        2,
        &["in", "e", "o"],
        0,
        &[&[1, 2], &[1, 2], &[2, 1]],
        &["0", "0", "1"],
    )
}

/// Machine whose initial state lacks a 0-self-loop: digit 0 advances a
/// two-cycle. Exists to exercise leading-zero normalization.
pub fn no_zero_loop() -> Dfao {
    build(
        2,
        &["p", "q"],
        0,
        &[&[1, 1], &[0, 0]],
        &["a", "b"],
    )
}

/// Three state binary machine whose minimal images {x,y} and {x,z} attain
/// different label sets ({a} vs {a,b}). Separates the optimistic and
/// certified sides of empirical alphabet estimation.
pub fn image_gap() -> Dfao {
    build(
        2,
        &["x", "y", "z"],
        0,
        &[&[0, 2], &[1, 0], &[1, 0]],
        &["a", "a", "b"],
    )
}
