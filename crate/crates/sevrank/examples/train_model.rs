//! Train the two comparison variants on one dataset and watch the
//! histories: mean train loss and validation pairwise accuracy per epoch.
//!
//! ```bash
//! cargo run --release --example train_model
//! ```

use sevrank::model::{evaluate_accuracy, train, ComparisonModel, TrainConfig, Variant};
use sevrank::pipeline::resolve_pairs;
use sevrank::sampling::{assign_subject_splits, sample_pairs, MdIndexLabeler, SamplingConfig};
use sevrank::synth::{generate, SynthConfig};

fn main() -> sevrank::Result<()> {
    let synth = SynthConfig {
        subjects: 80,
        items_per_subject: 6,
        noise: 0.1,
        seed: 5,
        ..SynthConfig::default()
    };
    let (mut ds, _) = generate(&synth)?;
    let sampling = SamplingConfig {
        pair_budget_train: 2_000,
        pair_budget_eval: 400,
        seed: 5,
        ..SamplingConfig::default()
    };
    assign_subject_splits(&mut ds, &sampling)?;
    let sampled = sample_pairs(&ds, &sampling, &MdIndexLabeler)?;
    let train_set = resolve_pairs(&ds, &sampled.train)?;
    let val_set = resolve_pairs(&ds, &sampled.val)?;
    let test_set = resolve_pairs(&ds, &sampled.test)?;

    let cfg = TrainConfig {
        epochs: 15,
        seed: 5,
        ..TrainConfig::default()
    };

    for (variant, n) in [(Variant::Baseline, 1), (Variant::NHidden, 10)] {
        let model = ComparisonModel::new(variant, ds.dim(), 64, n, 5)?;
        let (best, history) = train(&model, &train_set, &val_set, &cfg)?;
        println!("{variant:?} (n = {}):", best.n());
        for stats in history.epochs.iter().step_by(3) {
            println!(
                "  epoch {:>2}: train loss {:.4}, val accuracy {:.4}",
                stats.epoch, stats.train_loss, stats.val_accuracy
            );
        }
        println!(
            "  best epoch {} (val accuracy {:.4}), test accuracy {:.4}\n",
            history.best_epoch,
            history.best_val_accuracy,
            evaluate_accuracy(&best, &test_set)?
        );
    }
    Ok(())
}
