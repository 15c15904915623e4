//! Counting helpers behind the reported rates.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::grammar::PartialPlacementSpec;
use crate::memory::WorkflowCall;

/// Correct out of total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as usize;
    }

    /// Fraction correct; an empty tally reads as 0.
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Accuracy on the three scored fields of placed parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldAccuracy {
    pub part: Tally,
    pub color: Tally,
    pub coordinates: Tally,
}

impl FieldAccuracy {
    pub fn all_correct(&self) -> bool {
        [self.part, self.color, self.coordinates]
            .iter()
            .all(|t| t.total > 0 && t.correct == t.total)
    }
}

/// Hallucinated out of gold-null.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub hallucinated: usize,
    pub correct_null: usize,
}

impl Ratio {
    pub fn gold_null(&self) -> usize {
        self.hallucinated + self.correct_null
    }

    /// `None` when no field was gold-null.
    pub fn rate(&self) -> Option<f64> {
        let n = self.gold_null();
        (n > 0).then(|| self.hallucinated as f64 / n as f64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallucinationCounts {
    pub part: Ratio,
    pub color: Ratio,
    pub coordinates: Ratio,
}

impl HallucinationCounts {
    pub fn merge(&mut self, other: &HallucinationCounts) {
        for (a, b) in [
            (&mut self.part, other.part),
            (&mut self.color, other.color),
            (&mut self.coordinates, other.coordinates),
        ] {
            a.hallucinated += b.hallucinated;
            a.correct_null += b.correct_null;
        }
    }
}

fn claims_column(s: &PartialPlacementSpec) -> bool {
    s.x.is_some() || s.relative.is_some() || s.relation.is_some()
}

fn claims_row(s: &PartialPlacementSpec) -> bool {
    s.y.is_some() || s.relative.is_some() || s.relation.is_some()
}

/// Counts, per field category, gold-null fields the parse filled before any
/// question was asked. Parts the prediction lacks count as null.
pub fn hallucination_rate(predicted: &[PartialPlacementSpec], gold: &[PartialPlacementSpec]) -> HallucinationCounts {
    let mut out = HallucinationCounts::default();
    let none = PartialPlacementSpec::default();
    for (i, g) in gold.iter().enumerate() {
        let p = predicted.get(i).unwrap_or(&none);
        let count = |ratio: &mut Ratio, gold_null: bool, filled: bool| {
            if gold_null {
                if filled {
                    ratio.hallucinated += 1;
                } else {
                    ratio.correct_null += 1;
                }
            }
        };
        count(&mut out.part, g.kind.is_none(), p.kind.is_some());
        count(&mut out.color, g.color.is_none(), p.color.is_some());
        count(&mut out.coordinates, !claims_column(g), claims_column(p));
        count(&mut out.coordinates, !claims_row(g), claims_row(p));
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReuseMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted: usize,
    pub gold: usize,
    pub matched: usize,
}

impl ReuseMetrics {
    fn from_counts(matched: usize, predicted: usize, gold: usize) -> ReuseMetrics {
        let precision = if predicted == 0 { 0.0 } else { matched as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { matched as f64 / gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ReuseMetrics {
            precision,
            recall,
            f1,
            predicted,
            gold,
            matched,
        }
    }

    /// Pools counts from several workflows.
    pub fn pooled(parts: &[ReuseMetrics]) -> ReuseMetrics {
        let sum = |f: fn(&ReuseMetrics) -> usize| parts.iter().map(f).sum::<usize>();
        ReuseMetrics::from_counts(sum(|m| m.matched), sum(|m| m.predicted), sum(|m| m.gold))
    }
}

/// Calls match on name and full argument binding.
pub fn function_reuse_metrics(predicted: &[WorkflowCall], gold: &[WorkflowCall]) -> ReuseMetrics {
    let p: BTreeSet<&WorkflowCall> = predicted.iter().collect();
    let g: BTreeSet<&WorkflowCall> = gold.iter().collect();
    ReuseMetrics::from_counts(p.intersection(&g).count(), p.len(), g.len())
}
