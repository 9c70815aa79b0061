//! Metrics in isolation: pairwise accuracy with the tie convention,
//! nDCG against graded relevance, and mask IoU.
//!
//! ```bash
//! cargo run --example evaluate_model
//! ```

use std::collections::BTreeMap;

use sevrank::data::Mask;
use sevrank::metrics::{iou, ndcg, pairwise_accuracy, relevance_from_md, GainKind};
use sevrank::ranking::RankList;

fn main() -> sevrank::Result<()> {
    // Pairwise accuracy counts a prediction of exactly 0.5 as incorrect.
    let preds = [0.9, 0.2, 0.5, 0.8];
    let labels = [1, 0, 1, 0];
    println!(
        "pairwise accuracy {:.2} (the 0.5 prediction and the wrong 0.8 both miss)",
        pairwise_accuracy(&preds, &labels)?
    );

    // nDCG of a fully reversed three-item list with relevances 3, 2, 1:
    // the least relevant item "c" is predicted most severe.
    let list = RankList {
        // Stored least to most severe, so "c" sits at the severe end.
        ids: vec!["a".into(), "b".into(), "c".into()],
        strengths: vec![0.2, 0.3, 0.5],
        converged: true,
        iterations: 1,
    };
    let relevance: BTreeMap<String, f64> =
        [("a", 3.0), ("b", 2.0), ("c", 1.0)].map(|(k, v)| (k.to_string(), v)).into();
    println!(
        "nDCG of the reversed list: {:.5} (1.0 would be the ideal order)",
        ndcg(&list, &relevance, GainKind::Linear)?
    );

    // Relevance grading from MD-indices: most severe (lowest MD) gets q.
    let rel = relevance_from_md(&[("v0", -1.0), ("v1", -9.0), ("v2", -4.0)]);
    println!("relevance from MD: {rel:?}");

    // IoU of two masks overlapping in one of three lit cells.
    let predicted = Mask::new("x", 2, 2, vec![true, true, false, false])?;
    let truth = Mask::new("x", 2, 2, vec![false, true, true, false])?;
    println!("IoU {:.4}", iou(&predicted, &truth)?);
    Ok(())
}
