use hyperatl_core::formula::{collect_atoms, parse_ltl, to_nnf, Atom, LtlFormula};
use hyperatl_core::ltl2dpa::{
    eval_lasso, ltl_to_apa, ltl_to_dpa, minimize_colors, minimize_states, nba_to_dpa, prune,
    apa_to_nba, Lasso, DEFAULT_STATE_LIMIT,
};
use proptest::prelude::*;

const PROPS: [&str; 3] = ["a", "b", "c"];

fn arb_formula(size: u32) -> BoxedStrategy<LtlFormula> {
    let leaf = prop_oneof![
        Just(LtlFormula::True),
        Just(LtlFormula::False),
        (0..3usize).prop_map(|i| LtlFormula::atom(PROPS[i], "p")),
        (0..3usize).prop_map(|i| LtlFormula::not(LtlFormula::atom(PROPS[i], "p"))),
    ];
    if size <= 1 {
        return leaf.boxed();
    }
    let sub = move |s: u32| arb_formula(s);
    let unary = (0..4usize, sub(size - 1)).prop_map(|(op, f)| match op {
        0 => LtlFormula::next(f),
        1 => LtlFormula::globally(f),
        2 => LtlFormula::eventually(f),
        _ => LtlFormula::not(f),
    });
    let binary = (1..size - 1)
        .prop_flat_map(move |left| {
            (0..6usize, arb_formula(left), arb_formula(size - 1 - left))
        })
        .prop_map(|(op, a, b)| match op {
            0 => LtlFormula::and(a, b),
            1 => LtlFormula::or(a, b),
            2 => LtlFormula::until(a, b),
            3 => LtlFormula::release(a, b),
            4 => LtlFormula::implies(a, b),
            _ => LtlFormula::iff(a, b),
        });
    if size >= 3 {
        prop_oneof![leaf, unary, binary].boxed()
    } else {
        prop_oneof![leaf, unary].boxed()
    }
}

fn arb_lasso(bits: usize) -> impl Strategy<Value = Lasso> {
    let letter = 0u32..(1 << bits);
    (
        prop::collection::vec(letter.clone(), 0..=4),
        prop::collection::vec(letter, 1..=4),
    )
        .prop_map(|(p, c)| Lasso::new(p, c))
}

/// Alphabet with all three atoms, so every formula shares one letter space.
fn alphabet() -> Vec<Atom> {
    PROPS.iter().map(|p| Atom::new(*p, "p")).collect()
}

/// Letter over the full alphabet projected onto the formula's own atoms.
fn project(w: &Lasso, atoms: &[Atom]) -> Lasso {
    let full = alphabet();
    let map = |l: u32| {
        atoms.iter().enumerate().fold(0, |acc, (i, a)| {
            let bit = full.iter().position(|b| b == a).unwrap();
            acc | ((l >> bit) & 1) << i
        })
    };
    Lasso::new(
        w.prefix.iter().map(|&l| map(l)).collect(),
        w.cycle.iter().map(|&l| map(l)).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn dpa_agrees_with_oracle(
        f in (1..=6u32).prop_flat_map(arb_formula),
        words in prop::collection::vec(arb_lasso(3), 5),
    ) {
        let dpa = ltl_to_dpa(&f, DEFAULT_STATE_LIMIT).unwrap();
        for w in &words {
            let local = project(w, &dpa.atoms);
            prop_assert_eq!(
                dpa.accepts_lasso(&local),
                eval_lasso(&f, &alphabet(), w),
                "{} on {:?}", f, w
            );
        }
    }

    #[test]
    fn nnf_preserves_semantics(
        f in (1..=6u32).prop_flat_map(arb_formula),
        words in prop::collection::vec(arb_lasso(3), 5),
    ) {
        let g = to_nnf(&f);
        prop_assert!(g.is_nnf());
        for w in &words {
            prop_assert_eq!(eval_lasso(&f, &alphabet(), w), eval_lasso(&g, &alphabet(), w));
        }
    }

    #[test]
    fn compaction_and_minimization_preserve_verdicts(
        f in (1..=6u32).prop_flat_map(arb_formula),
        words in prop::collection::vec(arb_lasso(3), 5),
    ) {
        let atoms = collect_atoms(&f);
        let apa = ltl_to_apa(&to_nnf(&f), &atoms).unwrap();
        let nba = apa_to_nba(&apa, DEFAULT_STATE_LIMIT).unwrap();
        let raw = prune(&nba_to_dpa(&nba, DEFAULT_STATE_LIMIT).unwrap());
        let compact = minimize_colors(&raw);
        let small = minimize_states(&compact);
        prop_assert!(compact.num_colors() <= raw.num_colors());
        prop_assert!(small.num_states() <= raw.num_states());
        for w in &words {
            let local = project(w, &atoms);
            let expected = raw.accepts_lasso(&local);
            prop_assert_eq!(compact.accepts_lasso(&local), expected);
            prop_assert_eq!(small.accepts_lasso(&local), expected);
            prop_assert_eq!(nba.accepts_lasso(&local), expected);
        }
    }
}

#[test]
fn dpa_is_total() {
    for text in ["G (a{p} -> F b{p})", "(a{p} U b{p}) R c{p}", "G F a{p} & F G !b{p}"] {
        let d = ltl_to_dpa(&parse_ltl(text).unwrap(), DEFAULT_STATE_LIMIT).unwrap();
        assert_eq!(d.delta.len(), d.num_states() * d.num_letters());
        assert!(d.delta.iter().all(|&t| (t as usize) < d.num_states()));
    }
}

/// Every lasso with positions <= max_len over `bits` atoms.
fn all_lassos(bits: usize, max_len: usize) -> Vec<Lasso> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for word in 0..(1u64 << (bits * len)) {
            let letters: Vec<u32> = (0..len)
                .map(|i| ((word >> (i * bits)) & ((1 << bits) - 1)) as u32)
                .collect();
            for split in 0..len {
                out.push(Lasso::new(letters[..split].to_vec(), letters[split..].to_vec()));
            }
        }
    }
    out
}

#[test]
fn observational_determinism_body_exhaustive() {
    let f = parse_ltl("G (o[0]{p1} <-> o[0]{p2})").unwrap();
    let d = ltl_to_dpa(&f, DEFAULT_STATE_LIMIT).unwrap();
    assert_eq!(d.num_letters(), 4);
    for w in all_lassos(2, 5) {
        assert_eq!(d.accepts_lasso(&w), eval_lasso(&f, &d.atoms, &w), "{w:?}");
    }
}

#[test]
fn asynchronous_body_on_random_lassos() {
    use rand::{Rng, SeedableRng};
    let f = parse_ltl(
        "(G F !stut{p1}) & (G F !stut{p2}) & G (o[0]{p1} <-> o[0]{p2})",
    )
    .unwrap();
    let d = ltl_to_dpa(&f, DEFAULT_STATE_LIMIT).unwrap();
    let bits = d.atoms.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let (np, nc) = (rng.gen_range(0..=4), rng.gen_range(1..=4));
        let mut letters = |n: usize| -> Vec<u32> {
            (0..n).map(|_| rng.gen_range(0..1u32 << bits)).collect()
        };
        let p = letters(np);
        let c = letters(nc);
        let w = Lasso::new(p, c);
        assert_eq!(d.accepts_lasso(&w), eval_lasso(&f, &d.atoms, &w), "{w:?}");
    }
}

#[test]
fn deterministic_input_stays_small() {
    // G a has a deterministic automaton with two states; the chain should
    // not blow it up.
    let d = ltl_to_dpa(&parse_ltl("G a{p}").unwrap(), DEFAULT_STATE_LIMIT).unwrap();
    assert!(d.num_states() <= 2, "{}", d.num_states());
    let x = ltl_to_dpa(&parse_ltl("X X X a{p}").unwrap(), DEFAULT_STATE_LIMIT).unwrap();
    assert!(x.num_states() <= 6, "{}", x.num_states());
}
