use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl Metrics {
    /// Empty selections have precision 1 only when the truth is empty too;
    /// likewise an empty truth gives recall 1 only for an empty selection.
    pub fn from_counts(tp: usize, fp: usize, fneg: usize) -> Self {
        let selected = tp + fp;
        let truth = tp + fneg;
        let precision = match (selected, truth) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            _ => tp as f64 / selected as f64,
        };
        let recall = match (truth, selected) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            _ => tp as f64 / truth as f64,
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fneg,
        }
    }
}

fn score<T: Ord + Hash + Copy>(selected: &[T], truth: &[T]) -> Metrics {
    let s: BTreeSet<T> = selected.iter().copied().collect();
    let t: BTreeSet<T> = truth.iter().copied().collect();
    let tp = s.intersection(&t).count();
    Metrics::from_counts(tp, s.len() - tp, t.len() - tp)
}

/// Confusion counts of a selected index set against the true support (0-based indices below `p`).
pub fn score_selection(selected: &[usize], truth: &[usize], p: usize) -> Metrics {
    debug_assert!(selected.iter().chain(truth).all(|&j| j < p));
    score(selected, truth)
}

/// As [`score_selection`] over undirected edges; `(i, j)` and `(j, i)` are the same edge.
pub fn score_edges(selected: &[(usize, usize)], truth: &[(usize, usize)]) -> Metrics {
    let norm = |e: &(usize, usize)| (e.0.min(e.1), e.0.max(e.1));
    let s: Vec<_> = selected.iter().map(norm).collect();
    let t: Vec<_> = truth.iter().map(norm).collect();
    score(&s, &t)
}

/// `|Ŝ Δ S|`.
pub fn symmetric_difference(selected: &[usize], truth: &[usize]) -> usize {
    let s: BTreeSet<usize> = selected.iter().copied().collect();
    let t: BTreeSet<usize> = truth.iter().copied().collect();
    s.symmetric_difference(&t).count()
}
