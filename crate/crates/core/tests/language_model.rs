mod common;

use proptest::prelude::*;
use rand::Rng;
use streamctc_core::logspace::exp;
use streamctc_core::{CharLm, NgramLm};

fn trained(seed: u64, order: usize, k: f64) -> NgramLm {
    let mut rng = common::rng(seed);
    let al = common::alphabet(6);
    let corpus: String = (0..30)
        .map(|_| {
            let n = rng.random_range(1..15);
            common::random_text(&mut rng, &al, n) + "\n"
        })
        .collect();
    NgramLm::train(&corpus, al, order, k).unwrap()
}

#[test]
fn distributions_normalize_on_random_states() {
    let mut rng = common::rng(20);
    for order in 1..=4 {
        let lm = trained(order as u64, order, 0.5);
        let mut buf = vec![0.0; lm.vocab_size()];
        for _ in 0..100 {
            let len = rng.random_range(0..10);
            let prefix = common::random_text(&mut rng, lm.alphabet(), len);
            let state = lm.state_for(&prefix).unwrap();
            lm.fill_log_probs(&state, &mut buf);
            assert!(buf.iter().all(|x| x.is_finite()));
            let total: f64 = buf.iter().map(|&x| exp(x)).sum();
            assert!((total - 1.0).abs() < 1e-9, "{total}");
        }
    }
}

#[test]
fn every_stored_context_has_mass() {
    let lm = trained(5, 3, 1.0);
    for ctx in lm.contexts() {
        assert!(lm.context_total(ctx) > 0);
        assert!(ctx.len() < lm.order());
    }
}

#[test]
fn retraining_is_deterministic() {
    assert_eq!(trained(9, 3, 1.0), trained(9, 3, 1.0));
}

proptest! {
    #[test]
    fn scores_depend_only_on_the_last_n_minus_1_chars(
        order in 1usize..5,
        a in "[a-f]{0,8}",
        b in "[a-f]{0,8}",
        tail in "[a-f]{0,4}",
    ) {
        let lm = trained(7, order, 1.0);
        let keep = order - 1;
        let sa = lm.state_for(&(a + &tail)).unwrap();
        let sb = lm.state_for(&(b + &tail)).unwrap();
        if tail.chars().count() >= keep {
            for t in 0..lm.vocab_size() {
                prop_assert_eq!(lm.log_prob(&sa, t).to_bits(), lm.log_prob(&sb, t).to_bits());
            }
        }
    }

    #[test]
    fn cloned_states_evolve_independently(ops in prop::collection::vec((0usize..2, 0usize..6), 0..30)) {
        let lm = trained(8, 3, 1.0);
        let mut states = [lm.initial_state(), lm.initial_state()];
        let mut shadows = [String::new(), String::new()];
        for (which, token) in ops {
            let fork = states[which].clone();
            states[which] = lm.advance(&fork, token);
            shadows[which].push(lm.alphabet().char_at(token).unwrap());
            // the fork itself is untouched
            let again = lm.advance(&fork, token);
            prop_assert_eq!(&again, &states[which]);
        }
        for i in 0..2 {
            let fresh = lm.state_for(&shadows[i]).unwrap();
            for t in 0..lm.vocab_size() {
                prop_assert_eq!(lm.log_prob(&fresh, t).to_bits(), lm.log_prob(&states[i], t).to_bits());
            }
        }
    }
}
