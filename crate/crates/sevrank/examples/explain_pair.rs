//! Attribute one comparison decision to its hidden channels with exact
//! Shapley values, pick the top-k channels, and aggregate their heatmaps
//! into a single explanation mask.
//!
//! ```bash
//! cargo run --example explain_pair
//! ```

use sevrank::data::{Grid, Heatmap};
use sevrank::explain::{aggregate_heatmaps, select_top_k, shapley_channels};
use sevrank::model::{ComparisonModel, Variant};

fn main() -> sevrank::Result<()> {
    let n = 6;
    let model = ComparisonModel::new(Variant::NHidden, 8, 16, n, 42)?;
    let xi: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
    let xj: Vec<f64> = (0..8).map(|i| (i as f64 * 0.3).cos()).collect();

    let p = model.forward(&xi, &xj)?;
    let h = model.hidden_comparison(&xi, &xj)?;
    let phi = shapley_channels(&model, &xi, &xj)?;
    println!("P(left less severe) = {p:.4}");
    println!("channel comparisons h: {:?}", rounded(&h));
    println!("shapley values phi:    {:?}", rounded(&phi));

    // Efficiency: the values sum to the logit shift from the neutral input.
    let full = model.head.logit(&h);
    let neutral = model.head.logit(&vec![0.5; n]);
    println!(
        "sum(phi) = {:.6} vs v(full) - v(neutral) = {:.6}",
        phi.iter().sum::<f64>(),
        full - neutral
    );

    let k = 3;
    let top = select_top_k(&phi, k)?;
    println!("top-{k} channels by signed value: {top:?}");

    // Per-channel heatmaps (here synthetic bumps at channel-specific spots).
    let maps: Vec<Heatmap> = (0..n)
        .map(|c| {
            let mut data = vec![0.1; 25];
            data[c * 4 % 25] = 1.0;
            Heatmap {
                item_id: "left".into(),
                channel_index: c,
                grid: Grid::new(5, 5, data).unwrap(),
            }
        })
        .collect();
    let agg = aggregate_heatmaps(&maps, &phi, &top)?;
    println!("\naggregated heatmap (top-{k} channels, importance-weighted):");
    for r in 0..5 {
        let row: Vec<String> = (0..5).map(|c| format!("{:.2}", agg.grid.at(r, c))).collect();
        println!("  {}", row.join(" "));
    }
    println!("binary explanation mask ({} cells on):", agg.mask.count_on());
    for r in 0..5 {
        let row: String = (0..5)
            .map(|c| if agg.mask.data[r * 5 + c] { '#' } else { '.' })
            .collect();
        println!("  {row}");
    }
    Ok(())
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}
