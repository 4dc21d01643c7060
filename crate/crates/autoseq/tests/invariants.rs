//! Randomized invariants across the whole crate: codec stability, value
//! preservation under base surgery, membership enumeration against the
//! contains filter, refinement containment, budget monotonicity, the
//! count chain, cover round-trips, and norm symmetries.

use autoseq::apk::{self, ApkSet, BracketConfig};
use autoseq::automaton::{Dfao, DigitWord};
use autoseq::complexity::{self, BoundBudgets, IntegerPolynomial};
use autoseq::cover;
use autoseq::structure::StructureConfig;
use autoseq::uniformity::{gowers_norm_interval, Complex64, FiniteSignal};
use proptest::prelude::*;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn arb_dfao() -> impl Strategy<Value = Dfao> {
    (2u64..=3, 1usize..=4)
        .prop_flat_map(|(base, n)| {
            (
                Just(base),
                prop::collection::vec(prop::collection::vec(0..n, base as usize), n),
                prop::collection::vec(0u8..=2, n),
            )
        })
        .prop_map(|(base, delta, labels)| {
            let names = (0..delta.len()).map(|i| format!("s{i}")).collect();
            let output = labels.iter().map(|l| l.to_string()).collect();
            Dfao::new(base, names, 0, delta, output).unwrap()
        })
}

fn arb_apk_set() -> impl Strategy<Value = ApkSet> {
    (2u64..=3)
        .prop_flat_map(|base| {
            let digit = move || 0..base;
            let prefix = prop::collection::vec(digit(), 0..=2).prop_map(move |mut d| {
                if d.first() == Some(&0) {
                    d[0] = 1;
                }
                d
            });
            let suffix = prop::collection::vec(digit(), 0..=2);
            let len_class = (1u64..=4).prop_flat_map(|m| (0..m, Just(m)));
            let residue = prop::sample::select(if base == 2 {
                vec![1u64, 3, 5, 7]
            } else {
                vec![1u64, 2, 4, 5, 7, 8]
            })
            .prop_flat_map(|q| (0..q, Just(q)));
            (Just(base), prefix, suffix, len_class, residue)
        })
        .prop_map(|(base, prefix, suffix, len_class, residue)| {
            ApkSet::new(
                base,
                DigitWord::new(prefix, base).unwrap(),
                DigitWord::new(suffix, base).unwrap(),
                len_class,
                residue,
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn codec_round_trip_is_stable(a in arb_dfao()) {
        let text = a.serialize();
        let back = Dfao::parse(&text).unwrap();
        prop_assert!(back.is_isomorphic(&a));
        prop_assert_eq!(back.serialize(), text);
    }

    #[test]
    fn normalization_preserves_every_value(a in arb_dfao()) {
        let b = a.normalize_leading_zeros();
        for n in 0..64u64 {
            prop_assert_eq!(a.evaluate(n), b.evaluate(n));
        }
    }

    #[test]
    fn digit_blocking_preserves_every_value(a in arb_dfao(), e in 1u32..=3) {
        // blocking pads with leading zeros, so it needs the zero loop that
        // normalization installs
        let a = a.normalize_leading_zeros();
        let b = a.power_base(e).unwrap();
        prop_assert_eq!(b.base(), a.base().pow(e));
        for n in 0..64u64 {
            prop_assert_eq!(a.evaluate(n), b.evaluate(n));
        }
    }

    #[test]
    fn enumeration_matches_the_contains_filter(q in arb_apk_set()) {
        let direct: Vec<u64> = (0..1024).filter(|&n| q.contains(n)).collect();
        prop_assert_eq!(q.members_below(1024), direct);
    }

    #[test]
    fn members_are_ascending_and_in_set(q in arb_apk_set()) {
        let members = q.members_below(4096);
        for pair in members.windows(2) {
            prop_assert!(pair[0] < pair[1]);
        }
        for &n in &members {
            prop_assert!(q.contains(n));
        }
    }

    #[test]
    fn refinement_only_narrows(
        q in arb_apk_set(),
        extra in prop::collection::vec(0u64..2, 0..=2),
        qr in prop::sample::select(vec![1u64, 3, 5]),
    ) {
        let c = qr - 1;
        let suffix = DigitWord::new(extra, 2).unwrap();
        // the modulus must stay coprime to the base, so q=3 is skipped
        // for base-3 sets
        if gcd(qr, q.base()) == 1 {
            let refined = q.refine(&DigitWord::empty(), &suffix, (0, 1), (c, qr)).unwrap();
            let original: Vec<u64> = q.members_below(2048);
            match refined {
                Some(r) => {
                    for n in r.members_below(2048) {
                        prop_assert!(original.contains(&n));
                        prop_assert_eq!(n % qr, c);
                    }
                }
                None => {
                    // a clash certifies emptiness of the joint constraint
                    for &n in &original {
                        let ends = suffix.is_empty()
                            || DigitWord::expansion(n, q.base())
                                .digits()
                                .ends_with(suffix.digits());
                        prop_assert!(!(ends && n % qr == c));
                    }
                }
            }
        }
    }

    #[test]
    fn value_sets_grow_with_the_budget(a in arb_dfao(), q in arb_apk_set()) {
        if a.base() == q.base() {
            let small = apk::value_set(&a, &q, 512).unwrap();
            let large = apk::value_set(&a, &q, 2048).unwrap();
            prop_assert!(small.is_subset(&large));
        }
    }

    #[test]
    fn window_counts_never_drop_by_more_than_one(a in arb_dfao()) {
        let profile = complexity::subword_complexity_profile(&a, 10, 256).unwrap();
        for pair in profile.rows.windows(2) {
            prop_assert!(pair[1].count + 1 >= pair[0].count);
        }
    }

    #[test]
    fn polynomial_eval_matches_monomial_form(
        coeffs in prop::collection::vec(0u64..100, 1..=4),
        n in 0u64..40,
    ) {
        let p = IntegerPolynomial::new(coeffs);
        let exact = p.eval_u128(n).unwrap() as f64;
        let mono = p.monomial_coefficients();
        let horner = mono.iter().rev().fold(0.0f64, |acc, &c| acc * n as f64 + c);
        prop_assert!((exact - horner).abs() <= 1e-9 * exact.max(1.0));
    }

    #[test]
    fn constant_signals_report_their_modulus(c in -2.0f64..2.0) {
        let f = FiniteSignal::from_reals(&vec![c; 24]).unwrap();
        let g = gowers_norm_interval(&f, 2).unwrap();
        prop_assert!((g.value - c.abs()).abs() < 1e-9);
    }

    #[test]
    fn unimodular_twists_preserve_the_norm(
        reals in prop::collection::vec(-1.0f64..1.0, 8..=40),
        phase in 0.0f64..6.28,
    ) {
        let f = FiniteSignal::from_reals(&reals).unwrap();
        let twist = Complex64::from_polar(1.0, phase);
        let g = FiniteSignal::new(reals.iter().map(|&x| twist * x).collect()).unwrap();
        let a = gowers_norm_interval(&f, 2).unwrap().value;
        let b = gowers_norm_interval(&g, 2).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_stays_inside_the_label_count(a in arb_dfao()) {
        let cfg = BracketConfig::default();
        let bracket = apk::empirical_effective_alphabet(&a, 2, 2048, &cfg).unwrap();
        let attained = a.attained_labels().len();
        prop_assert!(bracket.r_lo <= bracket.r_hi);
        prop_assert!(bracket.r_hi <= attained);
        let again = apk::empirical_effective_alphabet(&a, 2, 2048, &cfg).unwrap();
        prop_assert_eq!(bracket.r_lo, again.r_lo);
        prop_assert_eq!(bracket.r_hi, again.r_hi);
        prop_assert_eq!(bracket.certificate, again.certificate);
    }

    #[test]
    fn count_chain_is_monotone(a in arb_dfao()) {
        let report = complexity::verify_theorem_bounds(
            &a,
            1..=3,
            BoundBudgets { n: 64, m_max: 8 },
            &StructureConfig::default(),
        )
        .unwrap();
        prop_assert!(report.chain_ok);
        prop_assert!(report.sanity_ok);
    }

    #[test]
    fn covers_always_verify(
        k in 2u64..=3,
        degree in 1usize..=2,
        raw_coeffs in prop::collection::vec(0u64..5, 3),
        wlen in 1usize..=2,
        wseed in 0u64..100,
        ell in 64u64..512,
    ) {
        let mut coeffs = raw_coeffs[..=degree].to_vec();
        if coeffs[degree] == 0 {
            coeffs[degree] = 1;
        }
        let p = IntegerPolynomial::new(coeffs);
        let digits: Vec<u64> = (0..wlen).map(|i| wseed >> i & (k - 1).min(1)).collect();
        let w = DigitWord::new(digits, k).unwrap();
        let built = cover::build_cover(&p, &w, k, ell).unwrap();
        let verdict = cover::verify_cover(&built.pieces, &built.params, &p, &w, k, ell);
        prop_assert!(verdict.ok());
    }
}
