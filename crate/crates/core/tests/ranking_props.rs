use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use winofusion_core::pipeline::{
    mitkov_score, rank_drafts, AnnotatedSentence, BiasLabel, CorpusStats, Draft, DraftContent, FactorWeights,
    PipelineConfig, PriorityKey, RelationLabel, RuleAnnotator, TemplateId,
};
use winofusion_core::text::Lexicon;

fn sentence() -> AnnotatedSentence {
    RuleAnnotator::default().annotate_text("The king met the prince.", "t:1").unwrap()
}

fn draft(seq: u64, key: PriorityKey, s: &AnnotatedSentence) -> Draft {
    Draft {
        template_id: TemplateId::from_seq(seq),
        source_id: "t:1".into(),
        content: DraftContent::SemiTemplate { sentence: s.clone() },
        priority_key: key,
        usage_count: 0,
        bias_label: BiasLabel::Unknown,
        subject_tag: String::new(),
        sentence_length: 5,
    }
}

/// Three stable passes, least significant key first. Weights are quarters,
/// so 56 × score is an integer and ties are exact.
fn reference_order(drafts: &[Draft], w: &FactorWeights, bias: &HashMap<TemplateId, f64>) -> Vec<String> {
    let quarters = |x: f64| (x * 4.0).round() as i64;
    let score56 = |d: &Draft| {
        let k = d.priority_key;
        let m = (k.mitkov as i64 + 2).clamp(0, 14);
        let mut s = quarters(w.mitkov) * m;
        if k.agreement {
            s += 14 * quarters(w.agreement);
        }
        if k.triples {
            s += 14 * quarters(w.triples);
        }
        s
    };
    let b = |d: &Draft| *bias.get(&d.template_id).unwrap_or(&0.5);
    let mut v: Vec<&Draft> = drafts.iter().collect();
    v.sort_by(|x, y| x.template_id.0.cmp(&y.template_id.0));
    v.sort_by_key(|d| std::cmp::Reverse(score56(d)));
    v.sort_by(|x, y| b(y).partial_cmp(&b(x)).unwrap());
    v.into_iter().map(|d| d.template_id.0.clone()).collect()
}

fn random_case(rng: &mut ChaCha8Rng, n: usize, s: &AnnotatedSentence) -> (Vec<Draft>, PipelineConfig, HashMap<TemplateId, f64>) {
    let mut ids: Vec<u64> = (1..=n as u64 * 3).collect();
    let mut drafts = Vec::new();
    let mut bias = HashMap::new();
    for _ in 0..n {
        let id = ids.swap_remove(rng.gen_range(0..ids.len()));
        let key = PriorityKey { agreement: rng.gen(), triples: rng.gen(), mitkov: rng.gen_range(-4..16) };
        let d = draft(id, key, s);
        if rng.gen_bool(0.6) {
            bias.insert(d.template_id.clone(), [0.2, 0.5, 0.8][rng.gen_range(0..3)]);
        }
        drafts.push(d);
    }
    // Coarse weights so score ties happen.
    let q = |r: &mut ChaCha8Rng| r.gen_range(0..=4) as f64 / 4.0;
    let cfg = PipelineConfig {
        factor_weights: FactorWeights { agreement: q(rng), triples: q(rng), mitkov: q(rng) },
        ..PipelineConfig::default()
    };
    (drafts, cfg, bias)
}

#[test]
fn thousand_drafts_match_reference() {
    let s = sentence();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (drafts, cfg, bias) = random_case(&mut rng, 1000, &s);
    let expected = reference_order(&drafts, &cfg.factor_weights, &bias);
    let got: Vec<String> = rank_drafts(drafts, &cfg, &bias).into_iter().map(|d| d.template_id.0).collect();
    assert_eq!(got, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_queues_match_reference(seed in any::<u64>(), n in 0usize..30) {
        let s = sentence();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (drafts, cfg, bias) = random_case(&mut rng, n, &s);
        let expected = reference_order(&drafts, &cfg.factor_weights, &bias);
        let got: Vec<String> = rank_drafts(drafts, &cfg, &bias).into_iter().map(|d| d.template_id.0).collect();
        prop_assert_eq!(got, expected);
    }
}

// ---------------------------------------------------------------------------
// Salience

const DETS: [&str; 5] = ["The", "A", "This", "That", "An"];
const NOUNS: [&str; 12] =
    ["farmer", "owl", "trophy", "suitcase", "teacher", "eagle", "king", "sailor", "boxes", "apple", "farmers", "lamp"];
const VERBS: [&str; 6] = ["saw", "chased", "praised", "warned", "hit", "helped"];
const LOWER_DETS: [&str; 5] = ["the", "a", "this", "an", "these"];

fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let tail = rng.gen_range(0..3);
    let mut pick = |xs: &[&'static str]| xs[rng.gen_range(0..xs.len())];
    let mut s = format!("{} {} {} {} {}", pick(&DETS), pick(&NOUNS), pick(&VERBS), pick(&LOWER_DETS), pick(&NOUNS));
    match tail {
        0 => s += &format!(" near {} {}", pick(&LOWER_DETS), pick(&NOUNS)),
        1 => s += &format!(" because it {} {} {}", pick(&VERBS), pick(&LOWER_DETS), pick(&NOUNS)),
        _ => {}
    }
    s + "."
}

/// Indicator sum written from the rule list alone.
fn oracle(s: &AnnotatedSentence, head_tokens: &HashMap<String, usize>, lex: &Lexicon, start: usize, end: usize) -> i32 {
    let spans = s.noun_spans();
    let first_start = spans.iter().map(|sp| sp.start).min();
    let mut total = 0;
    if first_start == Some(start) {
        total += 2;
    }
    if start >= 1 {
        match s.tokens[start - 1].surface.to_lowercase().as_str() {
            "the" | "this" | "that" | "these" | "those" => total += 1,
            "a" | "an" => total -= 1,
            _ => {}
        }
    }
    let head = lex.singularize(&s.tokens[end - 1].surface);
    let n = head_tokens.get(&head).copied().unwrap_or(0);
    total += match n {
        0 | 1 => 0,
        2 => 1,
        _ => 2,
    };
    if s.relations.iter().any(|r| r.label == RelationLabel::Subj && r.dependent == end - 1) {
        total += 1;
    }
    total
}

#[test]
fn salience_matches_indicator_oracle_on_500_sentences() {
    let lex = Lexicon::bundled();
    let annotator = RuleAnnotator::new(lex);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sentences: Vec<AnnotatedSentence> = (0..500)
        .map(|i| annotator.annotate_text(&random_sentence(&mut rng), &format!("r:{i}")).unwrap())
        .collect();
    let mut heads: HashMap<String, usize> = HashMap::new();
    for s in &sentences {
        for sp in s.noun_spans() {
            *heads.entry(lex.singularize(&s.tokens[sp.end - 1].surface)).or_default() += 1;
        }
    }
    let stats = CorpusStats::from_sentences(&sentences, lex);
    let mut checked = 0;
    for s in &sentences {
        for sp in s.noun_spans() {
            assert_eq!(mitkov_score(sp, s, &stats, lex), oracle(s, &heads, lex, sp.start, sp.end), "{}", s.text());
            checked += 1;
        }
    }
    assert!(checked >= 1000, "{checked}");
}

#[test]
fn salience_in_a_single_sentence_corpus() {
    // No repetition bonus when every head occurs once.
    let lex = Lexicon::bundled();
    let s = RuleAnnotator::new(lex).annotate_text("The farmer saw an owl near this barn.", "x:1").unwrap();
    let stats = CorpusStats::from_sentences([&s], lex);
    let scores: Vec<i32> = s.noun_spans().into_iter().map(|sp| mitkov_score(sp, &s, &stats, lex)).collect();
    assert_eq!(scores, [4, -1, 1]);
}
