//! Reconstruct a severity rank list from pairwise comparisons: build the
//! comparison matrix with a trained model, fit Bradley-Terry strengths,
//! and compare the recovered order against the ground truth.
//!
//! ```bash
//! cargo run --release --example rank_items
//! ```

use sevrank::model::{train, ComparisonModel, TrainConfig, Variant};
use sevrank::pipeline::resolve_pairs;
use sevrank::ranking::{bradley_terry_fit, build_matrix, BtOptions};
use sevrank::sampling::{assign_subject_splits, sample_pairs, MdIndexLabeler, SamplingConfig};
use sevrank::synth::{generate, SynthConfig};

fn main() -> sevrank::Result<()> {
    let synth = SynthConfig {
        subjects: 60,
        items_per_subject: 6,
        noise: 0.05,
        seed: 9,
        ..SynthConfig::default()
    };
    let (mut ds, _) = generate(&synth)?;
    let sampling = SamplingConfig {
        pair_budget_train: 2_000,
        pair_budget_eval: 300,
        seed: 9,
        ..SamplingConfig::default()
    };
    assign_subject_splits(&mut ds, &sampling)?;
    let sampled = sample_pairs(&ds, &sampling, &MdIndexLabeler)?;
    let model = ComparisonModel::new(Variant::NHidden, ds.dim(), 64, 10, 9)?;
    let cfg = TrainConfig {
        epochs: 12,
        seed: 9,
        ..TrainConfig::default()
    };
    let (model, _) = train(
        &model,
        &resolve_pairs(&ds, &sampled.train)?,
        &resolve_pairs(&ds, &sampled.val)?,
        &cfg,
    )?;

    // Rank the visits of the test subject with the widest severity spread.
    let test_items = ds.items_in_split(sevrank::data::Split::Test);
    let mut subjects: Vec<String> = test_items.iter().map(|i| i.subject.clone()).collect();
    subjects.sort();
    subjects.dedup();
    let spread = |s: &str| {
        let mds: Vec<f64> = ds.items_of_subject(s).iter().map(|i| i.md_index).collect();
        mds.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - mds.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let subject = subjects
        .iter()
        .max_by(|a, b| spread(a).partial_cmp(&spread(b)).unwrap())
        .unwrap()
        .clone();
    let items: Vec<_> = ds.items_of_subject(&subject);
    let entries: Vec<(&str, &[f64])> = items
        .iter()
        .map(|i| (i.id.as_str(), i.features.as_slice()))
        .collect();

    let matrix = build_matrix(&model, &entries)?;
    println!("comparison matrix for subject {subject} (P(row less severe than col)):");
    for (i, row) in matrix.probs.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.2}")).collect();
        println!("  {}  [{}]", matrix.ids[i], cells.join(" "));
    }

    let list = bradley_terry_fit(&matrix, &BtOptions::default())?;
    println!("\nleast to most severe (Bradley-Terry, {} iterations):", list.iterations);
    for (id, strength) in list.ids.iter().zip(&list.strengths) {
        let md = ds.get(id).unwrap().md_index;
        println!("  {id}  strength {strength:.4}  (true MD-index {md:+.3})");
    }

    // The true order sorts by descending MD-index (lower = more severe).
    let mut true_order: Vec<&str> = items.iter().map(|i| i.id.as_str()).collect();
    true_order.sort_by(|a, b| {
        ds.get(b)
            .unwrap()
            .md_index
            .partial_cmp(&ds.get(a).unwrap().md_index)
            .unwrap()
    });
    let recovered: Vec<&str> = list.ids.iter().map(String::as_str).collect();
    println!(
        "\nrecovered order {} the MD-index order",
        if recovered == true_order { "matches" } else { "differs from" }
    );
    Ok(())
}
