mod common;

use rand::Rng;
use streamctc_core::{beam_decode, BeamConfig, NgramLm, StreamDecoder, UniformLm};

#[test]
fn stream_flush_equals_offline_decode() {
    let mut rng = common::rng(30);
    for _ in 0..40 {
        let al = common::alphabet(rng.random_range(1..=28));
        let frames = rng.random_range(0..=30);
        let em = common::random_emissions(&mut rng, &al, frames, 3.0);
        let corpus = common::random_text(&mut rng, &al, 40);
        let lm = NgramLm::train(&corpus, al.clone(), 2, 1.0).unwrap();
        let width = rng.random_range(1..=8);
        for lag in [0, 1, 5, 22] {
            for alpha in [0.0, 0.5] {
                let cfg = BeamConfig::new(width, alpha, 0.1).unwrap();
                let mut s = StreamDecoder::new(&lm, cfg, lag).unwrap();
                for row in em.rows() {
                    s.push(row).unwrap();
                }
                let offline = beam_decode(&em, &cfg, &lm).unwrap();
                let (text, score) = s.flush();
                assert_eq!(text, offline.0);
                assert_eq!(score.to_bits(), offline.1.to_bits());
            }
        }
    }
}

#[test]
fn long_lag_commits_nothing_before_flush() {
    let mut rng = common::rng(31);
    let al = common::alphabet(5);
    let em = common::random_emissions(&mut rng, &al, 10, 2.0);
    let lm = UniformLm::new(al);
    let cfg = BeamConfig::new(6, 0.0, 0.0).unwrap();
    let mut s = StreamDecoder::new(&lm, cfg, 10).unwrap();
    for row in em.rows() {
        let out = s.push(row).unwrap();
        assert_eq!(out.committed_best, "");
        assert_eq!(s.committed_beam().frame(), 0);
    }
    assert_eq!(s.flush().0, beam_decode(&em, &cfg, &lm).unwrap().0);
}

#[test]
fn replaying_gives_identical_outputs() {
    let mut rng = common::rng(32);
    let al = common::alphabet(8);
    let em = common::random_emissions(&mut rng, &al, 25, 2.0);
    let lm = NgramLm::train("abc def\ncab hag\n", al.clone(), 3, 1.0).unwrap();
    let run = || {
        let mut s = StreamDecoder::new(&lm, BeamConfig::new(10, 0.5, 0.1).unwrap(), 4).unwrap();
        em.rows().map(|r| s.push(r).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn committed_beam_is_append_only() {
    let mut rng = common::rng(33);
    let al = common::alphabet(6);
    let em = common::random_emissions(&mut rng, &al, 30, 2.0);
    let lm = UniformLm::new(al.clone());
    let cfg = BeamConfig::new(5, 0.0, 0.1).unwrap();
    let lag = 3;
    let mut s = StreamDecoder::new(&lm, cfg, lag).unwrap();
    let mut committed = Vec::new();
    for row in em.rows() {
        let before = s.committed_beam().clone();
        s.push(row).unwrap();
        let after = s.committed_beam();
        if after.frame() == before.frame() {
            // nothing committed: the beam is the very same one
            assert_eq!(after.len(), before.len());
            for (x, y) in after.hypotheses().iter().zip(before.hypotheses()) {
                assert_eq!(x.prefix, y.prefix);
                assert_eq!(x.log_pb.to_bits(), y.log_pb.to_bits());
            }
        } else {
            assert_eq!(after.frame(), before.frame() + 1);
        }
        committed.push(after.best().transcript(&al));
    }
    // the committed view at push t is the offline decode of the first t - lag frames
    for (t, text) in committed.iter().enumerate() {
        let n = (t + 1).saturating_sub(lag);
        let mut prefix = em.clone();
        prefix = streamctc_core::EmissionMatrix::from_flat(al.clone(), prefix.as_flat()[..n * em.width()].to_vec())
            .unwrap();
        assert_eq!(text, &beam_decode(&prefix, &cfg, &lm).unwrap().0);
    }
}

#[test]
fn completions_hold_at_most_a_terminal_space() {
    let al = common::alphabet(28);
    let lm = NgramLm::train("the cat sat on the mat\nthat is the hat\n", al.clone(), 3, 0.1).unwrap();
    let mut rng = common::rng(34);
    let em = common::random_emissions(&mut rng, &al, 40, 4.0);
    let mut s = StreamDecoder::new(&lm, BeamConfig::new(8, 0.5, 0.1).unwrap(), 5).unwrap();
    for row in em.rows() {
        let out = s.push(row).unwrap();
        let c = &out.lm_completion;
        assert!(c.chars().count() <= 16);
        if let Some(pos) = c.find(' ') {
            assert_eq!(pos, c.len() - 1, "{c:?}");
        }
    }
}
