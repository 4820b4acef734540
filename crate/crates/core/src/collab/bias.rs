use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::pipeline::{BiasLabel, TemplateId};

/// Naive-Bayes word-count model over template content words, with add-one
/// smoothing. One vote per (worker, template); a revote replaces the old one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    /// template → worker → label
    votes: BTreeMap<TemplateId, BTreeMap<String, BiasLabel>>,
    words: BTreeMap<TemplateId, Vec<String>>,
    biased: ClassCounts,
    unbiased: ClassCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ClassCounts {
    docs: u64,
    total_words: u64,
    words: BTreeMap<String, u64>,
}

impl ClassCounts {
    fn add(&mut self, words: &[String]) {
        self.docs += 1;
        for w in words {
            *self.words.entry(w.clone()).or_insert(0) += 1;
            self.total_words += 1;
        }
    }

    fn remove(&mut self, words: &[String]) {
        self.docs -= 1;
        for w in words {
            let c = self.words.get_mut(w).expect("word was counted");
            *c -= 1;
            if *c == 0 {
                self.words.remove(w);
            }
            self.total_words -= 1;
        }
    }
}

impl BiasModel {
    fn class_mut(&mut self, label: BiasLabel) -> Option<&mut ClassCounts> {
        match label {
            BiasLabel::Biased => Some(&mut self.biased),
            BiasLabel::Unbiased => Some(&mut self.unbiased),
            BiasLabel::Unknown => None,
        }
    }

    /// Records a vote. `words` are the template sentence's content words.
    pub fn vote(&mut self, worker: &str, template: &TemplateId, words: &[String], label: BiasLabel) {
        let words = self.words.entry(template.clone()).or_insert_with(|| words.to_vec()).clone();
        let previous = self.votes.entry(template.clone()).or_default().insert(worker.to_string(), label);
        if let Some(prev) = previous {
            if let Some(c) = self.class_mut(prev) {
                c.remove(&words);
            }
        }
        if let Some(c) = self.class_mut(label) {
            c.add(&words);
        }
    }

    pub fn vote_count(&self) -> u64 {
        self.biased.docs + self.unbiased.docs
    }

    /// Probability of the unbiased class; 0.5 for an empty model.
    pub fn probability_unbiased(&self, words: &[String]) -> f64 {
        let vocab: BTreeSet<&String> = self.biased.words.keys().chain(self.unbiased.words.keys()).collect();
        let v = vocab.len().max(1) as f64;
        let docs = (self.biased.docs + self.unbiased.docs) as f64;
        let log_score = |c: &ClassCounts| {
            let prior = ((c.docs as f64 + 1.0) / (docs + 2.0)).ln();
            words
                .iter()
                .map(|w| ((c.words.get(w).copied().unwrap_or(0) as f64 + 1.0) / (c.total_words as f64 + v)).ln())
                .sum::<f64>()
                + prior
        };
        let (u, b) = (log_score(&self.unbiased), log_score(&self.biased));
        1.0 / (1.0 + (b - u).exp())
    }

    /// Majority label of the votes on one template.
    pub fn label(&self, template: &TemplateId) -> BiasLabel {
        let Some(v) = self.votes.get(template) else { return BiasLabel::Unknown };
        let biased = v.values().filter(|&&l| l == BiasLabel::Biased).count();
        let unbiased = v.values().filter(|&&l| l == BiasLabel::Unbiased).count();
        match biased.cmp(&unbiased) {
            std::cmp::Ordering::Greater => BiasLabel::Biased,
            std::cmp::Ordering::Less => BiasLabel::Unbiased,
            std::cmp::Ordering::Equal => BiasLabel::Unknown,
        }
    }
}
