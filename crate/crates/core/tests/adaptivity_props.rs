use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use winofusion_core::adaptivity::{
    export_pipeline_config, record_outcome, smoothed_rate, update_factor_weights, update_sentence_length,
    AdaptivityState, Counter, Factor,
};
use winofusion_core::pipeline::{
    rank_drafts, BiasLabel, Draft, DraftContent, PipelineConfig, PriorityKey, RuleAnnotator, TemplateId,
};

fn draft(seq: u64, agreement: bool, triples: bool, mitkov: i32, len: usize) -> Draft {
    let sentence = RuleAnnotator::default().annotate_text("The king met the prince.", "t:1").unwrap();
    Draft {
        template_id: TemplateId::from_seq(seq),
        source_id: "t:1".into(),
        content: DraftContent::SemiTemplate { sentence },
        priority_key: PriorityKey { agreement, triples, mitkov },
        usage_count: 0,
        bias_label: BiasLabel::Unknown,
        subject_tag: format!("subject{}", seq % 4),
        sentence_length: len,
    }
}

#[test]
fn smoothed_rate_brute_force() {
    for offered in 0..=100u64 {
        for accepted in 0..=100u64 {
            let expected = (accepted as f64 + 1.0) / (offered as f64 + 2.0);
            assert_eq!(smoothed_rate(Counter { offered, accepted }), expected, "{accepted}/{offered}");
        }
    }
}

#[test]
fn weights_are_rescaled_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let mut state = AdaptivityState::default();
        let mut raw = Vec::new();
        for f in Factor::ALL {
            let offered = rng.gen_range(0..=100u64);
            let accepted = rng.gen_range(0..=offered);
            state.factors.insert(f, Counter { offered, accepted });
            raw.push((accepted as f64 + 1.0) / (offered as f64 + 2.0));
        }
        let max = raw.iter().cloned().fold(0.0, f64::max);
        let w = update_factor_weights(&state).factor_weights;
        for (got, r) in [w.agreement, w.triples, w.mitkov].into_iter().zip(&raw) {
            assert!((got - r / max).abs() < 1e-12);
            assert!(got > 0.0 && got <= 1.0);
        }
    }
}

/// Agreement-only drafts accepted 9 times in 10, triples-only drafts once in 10.
fn skewed_stream() -> AdaptivityState {
    let mut state = AdaptivityState::default();
    for i in 0..100u64 {
        state = record_outcome(&state, &draft(1000 + i, true, false, 0, 12), i % 10 != 0);
        state = record_outcome(&state, &draft(2000 + i, false, true, 0, 12), i % 10 == 0);
    }
    state
}

/// Ranking of a pair from the weight formula alone.
fn expected_first(cfg: &PipelineConfig, pair: &[(u64, bool, bool, i32)]) -> u64 {
    let w = cfg.factor_weights;
    let score = |&(_, a, t, m): &(u64, bool, bool, i32)| {
        f64::from(u8::from(a)) * w.agreement + f64::from(u8::from(t)) * w.triples + w.mitkov * (m as f64 + 2.0) / 14.0
    };
    let (x, y) = (&pair[0], &pair[1]);
    if score(x) > score(y) || (score(x) == score(y) && x.0 < y.0) {
        x.0
    } else {
        y.0
    }
}

#[test]
fn skewed_stream_flips_weights_and_pair_order() {
    // Agreement-only with low salience against triples-only with higher salience.
    let pair = [(1, true, false, 0), (2, false, true, 2)];
    let drafts: Vec<Draft> = pair.iter().map(|&(id, a, t, m)| draft(id, a, t, m, 10)).collect();
    let none = HashMap::new();

    let before = export_pipeline_config(&AdaptivityState::default());
    assert_eq!(before.factor_weights.agreement, before.factor_weights.triples);
    let first_before = rank_drafts(drafts.clone(), &before, &none)[0].template_id.clone();
    assert_eq!(first_before, TemplateId::from_seq(expected_first(&before, &pair)));
    assert_eq!(first_before, TemplateId::from_seq(2));

    let state = skewed_stream();
    assert_eq!(state.factors[&Factor::Agreement], Counter { offered: 100, accepted: 90 });
    assert_eq!(state.factors[&Factor::Triples], Counter { offered: 100, accepted: 10 });
    let after = export_pipeline_config(&state);
    assert!(after.factor_weights.agreement > after.factor_weights.triples);
    assert_eq!(after.factor_weights.agreement, 1.0);
    assert!((after.factor_weights.triples - 11.0 / 91.0).abs() < 1e-12);
    let first_after = rank_drafts(drafts, &after, &none)[0].template_id.clone();
    assert_eq!(first_after, TemplateId::from_seq(expected_first(&after, &pair)));
    assert_eq!(first_after, TemplateId::from_seq(1));
}

#[test]
fn outcome_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let outcomes: Vec<(Draft, bool)> = (0..100u64)
        .map(|i| (draft(i, rng.gen(), rng.gen(), rng.gen_range(-2..14), rng.gen_range(8..40)), rng.gen()))
        .collect();
    let fold = |xs: &[(Draft, bool)]| xs.iter().fold(AdaptivityState::default(), |s, (d, a)| record_outcome(&s, d, *a));
    let reference = fold(&outcomes);
    for _ in 0..50 {
        let mut shuffled = outcomes.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(fold(&shuffled), reference);
    }
    for c in reference.factors.values() {
        assert!(c.accepted <= c.offered);
    }
}

#[test]
fn length_bound_stays_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let mut state = AdaptivityState::default();
        let n = rng.gen_range(0..60);
        for i in 0..n {
            state = record_outcome(&state, &draft(i, true, false, 0, rng.gen_range(1..200)), true);
        }
        let max = update_sentence_length(&state).sentence_length_max;
        assert!((8..=60).contains(&max), "{max}");
        if n < 20 {
            assert_eq!(max, PipelineConfig::default().sentence_length_max);
        }
    }
}

#[test]
fn length_examples() {
    let with_lengths = |ls: &[usize]| {
        ls.iter().enumerate().fold(AdaptivityState::default(), |s, (i, &l)| record_outcome(&s, &draft(i as u64, true, false, 0, l), true))
    };
    let nineteen: Vec<usize> = (10..29).collect();
    assert_eq!(update_sentence_length(&with_lengths(&nineteen)).sentence_length_max, 40);
    let twenty: Vec<usize> = (10..30).collect();
    assert_eq!(update_sentence_length(&with_lengths(&twenty)).sentence_length_max, 28);
    assert_eq!(update_sentence_length(&with_lengths(&[100; 25])).sentence_length_max, 60);
    assert_eq!(update_sentence_length(&with_lengths(&[3; 25])).sentence_length_max, 8);
}
