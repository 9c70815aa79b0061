//! Evaluation metrics: pairwise accuracy, per-subject nDCG, and IoU.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::data::Mask;
use crate::ranking::RankList;

/// Gain function for DCG. Linear is the default; exponential uses
/// 2^rel - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GainKind {
    #[default]
    Linear,
    Exponential,
}

impl GainKind {
    fn gain(&self, rel: f64) -> f64 {
        match self {
            GainKind::Linear => rel,
            GainKind::Exponential => rel.exp2() - 1.0,
        }
    }
}

/// Aggregated evaluation results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub pairwise_accuracy: f64,
    pub ndcg_per_subject: BTreeMap<String, f64>,
    pub mean_ndcg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_iou: Option<f64>,
}

impl EvalReport {
    /// Renders the report as a small human-readable table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("pairwise accuracy  {:.4}\n", self.pairwise_accuracy));
        match self.mean_ndcg {
            Some(v) => out.push_str(&format!(
                "mean nDCG          {v:.4}  ({} subjects)\n",
                self.ndcg_per_subject.len()
            )),
            None => out.push_str("mean nDCG          n/a\n"),
        }
        match self.m_iou {
            Some(v) => out.push_str(&format!("m-IoU              {v:.4}\n")),
            None => out.push_str("m-IoU              n/a\n"),
        }
        out
    }
}

/// Fraction of pairs whose thresholded prediction matches the label.
/// A prediction of exactly 0.5 counts as incorrect.
pub fn pairwise_accuracy(preds: &[f64], labels: &[u8]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::InvalidConfig("empty prediction set".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: preds.len(),
        });
    }
    let correct = preds
        .iter()
        .zip(labels)
        .filter(|(p, y)| **p != 0.5 && (**p > 0.5) == (**y == 1))
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

/// nDCG of a predicted ranking against graded relevances.
///
/// The rank list is stored least-severe first; DCG walks it most-severe
/// first, discounting position p (1-based) by log2(p + 1). The ideal DCG
/// sorts by relevance descending.
pub fn ndcg(
    predicted: &RankList,
    relevance: &BTreeMap<String, f64>,
    gain: GainKind,
) -> Result<f64> {
    let most_severe_first: Vec<&str> = predicted.ids.iter().rev().map(|s| s.as_str()).collect();
    let mut rels = Vec::with_capacity(most_severe_first.len());
    for id in &most_severe_first {
        let rel = relevance
            .get(*id)
            .ok_or_else(|| Error::MissingRelevance((*id).to_string()))?;
        rels.push(*rel);
    }
    if rels.iter().all(|r| *r == 0.0) {
        return Err(Error::AllZeroRelevance);
    }
    let dcg = discounted_gain(&rels, gain);
    let mut ideal = rels.clone();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let idcg = discounted_gain(&ideal, gain);
    Ok(dcg / idcg)
}

fn discounted_gain(rels: &[f64], gain: GainKind) -> f64 {
    rels.iter()
        .enumerate()
        .map(|(i, &rel)| gain.gain(rel) / ((i + 2) as f64).log2())
        .sum()
}

/// Graded relevance for one subject's items: `q - true rank`, where true
/// rank 0 is the most severe item (lowest MD-index). Ties in MD-index are
/// broken by item id.
pub fn relevance_from_md(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
    let mut order: Vec<(&str, f64)> = items.to_vec();
    order.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    let q = order.len();
    order
        .into_iter()
        .enumerate()
        .map(|(rank, (id, _))| (id.to_string(), (q - rank) as f64))
        .collect()
}

/// Intersection over union of two binary masks. Two empty masks count
/// as a perfect match.
pub fn iou(pred: &Mask, truth: &Mask) -> Result<f64> {
    if pred.rows != truth.rows || pred.cols != truth.cols {
        return Err(Error::DimensionMismatch {
            expected: truth.rows * truth.cols,
            found: pred.rows * pred.cols,
        });
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (a, b) in pred.data.iter().zip(&truth.data) {
        if *a && *b {
            inter += 1;
        }
        if *a || *b {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranklist(ids: &[&str]) -> RankList {
        let q = ids.len();
        RankList {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            strengths: vec![1.0 / q as f64; q],
            converged: true,
            iterations: 0,
        }
    }

    #[test]
    fn accuracy_basic() {
        assert_eq!(pairwise_accuracy(&[0.9, 0.2], &[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_tie_counts_as_incorrect() {
        assert_eq!(pairwise_accuracy(&[0.5], &[1]).unwrap(), 0.0);
        assert_eq!(pairwise_accuracy(&[0.5], &[0]).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_counts_fraction() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 3 == 0)).collect();
        let preds = vec![0.7; 100];
        let expected = labels.iter().filter(|&&y| y == 1).count() as f64 / 100.0;
        assert!((pairwise_accuracy(&preds, &labels).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn accuracy_empty_is_error() {
        assert!(pairwise_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_complemented_predictions_score_zero() {
        let preds = [0.9, 0.1, 0.8, 0.3];
        let labels = [0u8, 1, 0, 1];
        assert_eq!(pairwise_accuracy(&preds, &labels).unwrap(), 0.0);
    }

    #[test]
    fn ndcg_perfect_order_is_one() {
        // Rank list is least-severe first, so "c" is predicted most severe.
        let list = ranklist(&["a", "b", "c"]);
        let rel: BTreeMap<String, f64> =
            [("c", 3.0), ("b", 2.0), ("a", 1.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let v = ndcg(&list, &rel, GainKind::Linear).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ndcg_reversed_three_item_hand_check() {
        // Predicted most-severe-first order has relevances (1, 2, 3);
        // ideal is (3, 2, 1).
        let list = ranklist(&["c", "b", "a"]);
        let rel: BTreeMap<String, f64> =
            [("c", 3.0), ("b", 2.0), ("a", 1.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let v = ndcg(&list, &rel, GainKind::Linear).unwrap();
        let dcg = 1.0 + 2.0 / 3.0f64.log2() + 3.0 / 2.0;
        let idcg = 3.0 + 2.0 / 3.0f64.log2() + 1.0 / 2.0;
        assert!((v - dcg / idcg).abs() < 1e-12);
        assert!((v - 0.790).abs() < 1e-3, "{v}");
    }

    #[test]
    fn ndcg_single_item_is_one() {
        let list = ranklist(&["a"]);
        let rel: BTreeMap<String, f64> = [("a".to_string(), 2.0)].into_iter().collect();
        assert!((ndcg(&list, &rel, GainKind::Linear).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ndcg_all_zero_relevance_is_error() {
        let list = ranklist(&["a", "b"]);
        let rel: BTreeMap<String, f64> =
            [("a".to_string(), 0.0), ("b".to_string(), 0.0)].into_iter().collect();
        assert!(matches!(
            ndcg(&list, &rel, GainKind::Linear),
            Err(Error::AllZeroRelevance)
        ));
    }

    #[test]
    fn ndcg_missing_relevance_is_error() {
        let list = ranklist(&["a", "b"]);
        let rel: BTreeMap<String, f64> = [("a".to_string(), 1.0)].into_iter().collect();
        assert!(matches!(
            ndcg(&list, &rel, GainKind::Linear),
            Err(Error::MissingRelevance(_))
        ));
    }

    #[test]
    fn ndcg_value_depends_on_relevance_scale_but_order_does_not() {
        let list = ranklist(&["b", "c", "a"]);
        let rel: BTreeMap<String, f64> =
            [("a", 3.0), ("b", 2.0), ("c", 1.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let rescaled: BTreeMap<String, f64> =
            rel.iter().map(|(k, v)| (k.clone(), 10.0 * v + 5.0)).collect();
        let v1 = ndcg(&list, &rel, GainKind::Linear).unwrap();
        let v2 = ndcg(&list, &rescaled, GainKind::Linear).unwrap();
        // Affine rescaling keeps the ideal order but changes the value.
        assert!((v1 - v2).abs() > 1e-6);
        // A relevance-sorted prediction still scores exactly 1 after rescaling.
        let ideal = ranklist(&["c", "b", "a"]);
        assert!((ndcg(&ideal, &rescaled, GainKind::Linear).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relevance_from_md_ranks_most_severe_highest() {
        // Lowest MD-index is most severe and gets relevance q.
        let rel = relevance_from_md(&[("a", -1.0), ("b", -9.0), ("c", -4.0)]);
        assert_eq!(rel["b"], 3.0);
        assert_eq!(rel["c"], 2.0);
        assert_eq!(rel["a"], 1.0);
    }

    #[test]
    fn iou_identical_masks() {
        let m = Mask::new("x", 2, 2, vec![true, false, true, false]).unwrap();
        assert_eq!(iou(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn iou_disjoint_masks() {
        let a = Mask::new("x", 2, 2, vec![true, false, false, false]).unwrap();
        let b = Mask::new("x", 2, 2, vec![false, true, false, false]).unwrap();
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn iou_partial_overlap() {
        // 3 cells on in total, 1 shared.
        let a = Mask::new("x", 2, 2, vec![true, true, false, false]).unwrap();
        let b = Mask::new("x", 2, 2, vec![false, true, true, false]).unwrap();
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iou_both_empty_is_one() {
        let a = Mask::new("x", 2, 2, vec![false; 4]).unwrap();
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn iou_symmetric() {
        let a = Mask::new("x", 2, 3, vec![true, false, true, false, true, false]).unwrap();
        let b = Mask::new("x", 2, 3, vec![true, true, false, false, false, true]).unwrap();
        assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
    }

    #[test]
    fn iou_dimension_mismatch() {
        let a = Mask::new("x", 2, 2, vec![false; 4]).unwrap();
        let b = Mask::new("x", 1, 4, vec![false; 4]).unwrap();
        assert!(iou(&a, &b).is_err());
    }
}
