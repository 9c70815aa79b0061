//! Shapley attribution over the hidden comparison channels, top-k channel
//! selection, and importance-weighted heatmap aggregation.
//!
//! The value function is the pre-sigmoid logit of the decision head with
//! channels outside the coalition replaced by 0.5, the neutral point of a
//! sigmoid comparison. Values are computed by exact enumeration over all
//! 2^n coalitions, which is cheap at the default n = 10 and capped at
//! n = 20.

use serde::{Deserialize, Serialize};

use crate::data::{Grid, Heatmap, Mask, PairSample};
use crate::error::{Error, Result};
use crate::model::{ComparisonModel, Variant};

/// Exact enumeration is refused above this channel count.
pub const MAX_EXACT_CHANNELS: usize = 20;

/// Neutral channel value used for channels outside a coalition.
pub const BASELINE_CHANNEL_VALUE: f64 = 0.5;

/// Attribution of one pair's ranking decision to the comparison channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionReport {
    pub pair: PairSample,
    pub shapley: Vec<f64>,
    pub top_k: Vec<usize>,
    #[serde(skip)]
    pub aggregated_left: Option<Aggregated>,
    #[serde(skip)]
    pub aggregated_right: Option<Aggregated>,
    pub iou_left: Option<f64>,
    pub iou_right: Option<f64>,
}

/// Aggregated heatmap with its thresholded binary mask.
#[derive(Debug, Clone)]
pub struct Aggregated {
    pub grid: Grid,
    pub mask: Mask,
}

/// Exact Shapley values of the decision head over the hidden comparison
/// channels for one pair.
///
/// phi_c sums the weighted marginal contributions v(S + c) - v(S) over all
/// coalitions S not containing c, with weight |S|! (n - |S| - 1)! / n!.
/// The efficiency identity sum(phi) = v(N) - v(empty) is checked before
/// returning.
pub fn shapley_channels(model: &ComparisonModel, xi: &[f64], xj: &[f64]) -> Result<Vec<f64>> {
    if model.variant != Variant::NHidden {
        return Err(Error::InvalidConfig(
            "shapley attribution requires the n-hidden variant".into(),
        ));
    }
    let n = model.n();
    if n > MAX_EXACT_CHANNELS {
        return Err(Error::EnumerationBound {
            n,
            max: MAX_EXACT_CHANNELS,
        });
    }
    let h = model.hidden_comparison(xi, xj)?;
    let value = |coalition: u32| -> f64 {
        let mut masked = vec![BASELINE_CHANNEL_VALUE; n];
        for c in 0..n {
            if coalition & (1 << c) != 0 {
                masked[c] = h[c];
            }
        }
        model.head.logit(&masked)
    };
    let phi = shapley_exact(n, &value);
    let efficiency = value((1u32 << n) - 1) - value(0);
    let total: f64 = phi.iter().sum();
    if (total - efficiency).abs() > 1e-9 {
        return Err(Error::NonFinite(format!(
            "shapley efficiency violated: sum {total} vs {efficiency}"
        )));
    }
    Ok(phi)
}

/// Exact Shapley values of an arbitrary coalition value function over n
/// players, by enumeration of all 2^n coalitions.
pub fn shapley_exact(n: usize, value: &dyn Fn(u32) -> f64) -> Vec<f64> {
    assert!(n <= MAX_EXACT_CHANNELS);
    // Coalition weight |S|! (n-|S|-1)! / n! expressed as 1 / (n * C(n-1, |S|)),
    // which stays exactly representable for n <= 20.
    let weights: Vec<f64> = (0..n)
        .map(|k| 1.0 / (n as f64 * binomial(n - 1, k)))
        .collect();
    let full = 1u32 << n;
    let mut values = vec![0.0; full as usize];
    for coalition in 0..full {
        values[coalition as usize] = value(coalition);
    }
    let mut phi = vec![0.0; n];
    for c in 0..n {
        let bit = 1u32 << c;
        let mut acc = 0.0;
        for coalition in 0..full {
            if coalition & bit != 0 {
                continue;
            }
            let size = coalition.count_ones() as usize;
            acc += weights[size]
                * (values[(coalition | bit) as usize] - values[coalition as usize]);
        }
        phi[c] = acc;
    }
    phi
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut result = 1.0;
    for i in 0..k {
        result = result * (n - i) as f64 / (i + 1) as f64;
    }
    result
}

/// Indices of the k largest Shapley values (signed, not absolute),
/// sorted by descending value with ties broken by the lower index.
pub fn select_top_k(shapley: &[f64], k: usize) -> Result<Vec<usize>> {
    let n = shapley.len();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        shapley[b]
            .partial_cmp(&shapley[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}

/// Select-top-k by absolute Shapley value instead of signed value.
pub fn select_top_k_abs(shapley: &[f64], k: usize) -> Result<Vec<usize>> {
    let magnitudes: Vec<f64> = shapley.iter().map(|v| v.abs()).collect();
    select_top_k(&magnitudes, k)
}

/// Aggregates the selected channels' heatmaps into one explanation.
///
/// The weighted mean uses max(phi_c, 0) as weights, so negatively
/// contributing channels in the selection are ignored; if no selected
/// channel contributes positively this is an error. The mean is then
/// min-max normalized to [0, 1] and thresholded at the lower median of
/// its positive cells to produce the binary mask.
pub fn aggregate_heatmaps(
    maps: &[Heatmap],
    shapley: &[f64],
    top_k: &[usize],
) -> Result<Aggregated> {
    let by_channel = |c: usize| -> Result<&Heatmap> {
        maps.iter()
            .find(|m| m.channel_index == c)
            .ok_or(Error::MissingHeatmap(c))
    };
    let mut weights = Vec::with_capacity(top_k.len());
    let mut selected = Vec::with_capacity(top_k.len());
    for &c in top_k {
        if c >= shapley.len() {
            return Err(Error::MissingHeatmap(c));
        }
        let map = by_channel(c)?;
        weights.push(shapley[c].max(0.0));
        selected.push(map);
    }
    let total_weight: f64 = weights.iter().sum();
    if total_weight <= 0.0 {
        return Err(Error::NoPositiveContribution);
    }

    let first = &selected[0].grid;
    let (rows, cols) = (first.rows, first.cols);
    for map in &selected {
        if map.grid.rows != rows || map.grid.cols != cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: map.grid.rows * map.grid.cols,
            });
        }
    }
    let item_id = selected[0].item_id.clone();

    let mut acc = vec![0.0; rows * cols];
    for (map, &w) in selected.iter().zip(&weights) {
        for (a, v) in acc.iter_mut().zip(&map.grid.data) {
            *a += w * v;
        }
    }
    for a in &mut acc {
        *a /= total_weight;
    }

    let grid = normalize_min_max(Grid {
        rows,
        cols,
        data: acc,
    });
    let mask = threshold_mask(&grid, &item_id);
    Ok(Aggregated { grid, mask })
}

/// Min-max normalization to [0, 1]. A flat grid maps to all ones when its
/// constant is positive, otherwise to all zeros.
fn normalize_min_max(mut grid: Grid) -> Grid {
    let lo = grid.min();
    let hi = grid.max();
    let span = hi - lo;
    if span > 0.0 {
        for v in &mut grid.data {
            *v = (*v - lo) / span;
        }
    } else {
        let fill = if hi > 0.0 { 1.0 } else { 0.0 };
        grid.data.fill(fill);
    }
    grid
}

/// Cells at or above the lower median of the positive cells.
fn threshold_mask(grid: &Grid, item_id: &str) -> Mask {
    let mut positive: Vec<f64> = grid.data.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Mask {
            item_id: item_id.to_string(),
            rows: grid.rows,
            cols: grid.cols,
            data: vec![false; grid.data.len()],
        };
    }
    positive.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let threshold = positive[(positive.len() - 1) / 2];
    Mask {
        item_id: item_id.to_string(),
        rows: grid.rows,
        cols: grid.cols,
        data: grid.data.iter().map(|v| *v >= threshold).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComparisonModel, DecisionHead};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model_with_head(n: usize, w: Vec<f64>, b: f64) -> ComparisonModel {
        let mut model = ComparisonModel::new(Variant::NHidden, 3, 4, n, 0).unwrap();
        model.head = DecisionHead { w, b };
        model
    }

    fn heatmap(channel: usize, rows: usize, cols: usize, data: Vec<f64>) -> Heatmap {
        Heatmap {
            item_id: "item".into(),
            channel_index: channel,
            grid: Grid::new(rows, cols, data).unwrap(),
        }
    }

    #[test]
    fn linear_head_closed_form() {
        // For a linear head the Shapley value is w_c (h_c - 0.5) exactly.
        let model = model_with_head(2, vec![1.0, -1.0], 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let xi: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let xj: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let h = model.hidden_comparison(&xi, &xj).unwrap();
            let phi = shapley_channels(&model, &xi, &xj).unwrap();
            for c in 0..2 {
                let closed = model.head.w[c] * (h[c] - 0.5);
                assert!((phi[c] - closed).abs() < 1e-12, "{} vs {}", phi[c], closed);
            }
        }
    }

    #[test]
    fn worked_two_channel_example() {
        // w = (1, -1), h = (0.9, 0.5) gives phi = (0.4, 0.0).
        let model = model_with_head(2, vec![1.0, -1.0], 0.0);
        let h = vec![0.9, 0.5];
        let value = |coalition: u32| -> f64 {
            let mut masked = vec![0.5; 2];
            for c in 0..2 {
                if coalition & (1 << c) != 0 {
                    masked[c] = h[c];
                }
            }
            model.head.logit(&masked)
        };
        let phi = shapley_exact(2, &value);
        assert!((phi[0] - 0.4).abs() < 1e-12);
        assert!(phi[1].abs() < 1e-12);
    }

    #[test]
    fn neutral_input_gives_zero_vector() {
        let model = model_with_head(3, vec![0.7, -0.2, 1.1], 0.5);
        let x = vec![0.4, -0.6, 1.0];
        // Identical inputs make every channel 0.5, the baseline.
        let phi = shapley_channels(&model, &x, &x).unwrap();
        for v in phi {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn null_player_has_zero_value() {
        let model = model_with_head(3, vec![0.8, 0.0, -0.4], 0.1);
        let phi = shapley_channels(&model, &[1.0, 0.0, -1.0], &[0.2, 0.5, 0.3]).unwrap();
        assert!(phi[1].abs() < 1e-15);
    }

    #[test]
    fn symmetric_channels_get_equal_values() {
        // Channels with identical weights and identical h values must get
        // identical attributions.
        let mut model = model_with_head(2, vec![0.9, 0.9], 0.0);
        // Force both channels to compute the same function of the input.
        let s = &mut model.scoring;
        let row: Vec<f64> = s.w2[..s.hidden_dim].to_vec();
        s.w2[s.hidden_dim..].copy_from_slice(&row);
        s.b2[1] = s.b2[0];
        let phi = shapley_channels(&model, &[1.0, -0.3, 0.8], &[0.1, 0.4, -0.2]).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-12);
    }

    #[test]
    fn efficiency_holds_for_random_heads() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let n = rng.random_range(1..7);
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let model = model_with_head(n, w, rng.random_range(-0.5..0.5));
            let xi: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let xj: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let h = model.hidden_comparison(&xi, &xj).unwrap();
            let phi = shapley_channels(&model, &xi, &xj).unwrap();
            let full: f64 = model.head.logit(&h);
            let empty = model.head.logit(&vec![0.5; model.n()]);
            let total: f64 = phi.iter().sum();
            assert!(
                (total - (full - empty)).abs() < 1e-9,
                "trial {trial}: {total} vs {}",
                full - empty
            );
        }
    }

    #[test]
    fn permutation_equivariance() {
        let model = model_with_head(3, vec![0.5, -0.7, 1.2], 0.2);
        let xi = [0.9, -1.0, 0.4];
        let xj = [-0.3, 0.6, 0.1];
        let phi = shapley_channels(&model, &xi, &xj).unwrap();

        // Permute the channels of the scoring map and head identically.
        let perm = [2usize, 0, 1];
        let mut permuted = model.clone();
        {
            let s = &mut permuted.scoring;
            let src = model.scoring.clone();
            for (new_c, &old_c) in perm.iter().enumerate() {
                let h = s.hidden_dim;
                s.w2[new_c * h..(new_c + 1) * h]
                    .copy_from_slice(&src.w2[old_c * h..(old_c + 1) * h]);
                s.b2[new_c] = src.b2[old_c];
                permuted.head.w[new_c] = model.head.w[old_c];
            }
        }
        let phi_perm = shapley_channels(&permuted, &xi, &xj).unwrap();
        for (new_c, &old_c) in perm.iter().enumerate() {
            assert!((phi_perm[new_c] - phi[old_c]).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_bound_enforced() {
        let model = model_with_head(21, vec![0.0; 21], 0.0);
        let x = vec![0.0; 3];
        assert!(matches!(
            shapley_channels(&model, &x, &x),
            Err(Error::EnumerationBound { .. })
        ));
    }

    #[test]
    fn baseline_variant_rejected() {
        let model = ComparisonModel::new(Variant::Baseline, 3, 4, 1, 0).unwrap();
        let x = vec![0.0; 3];
        assert!(shapley_channels(&model, &x, &x).is_err());
    }

    #[test]
    fn top_k_selection() {
        assert_eq!(select_top_k(&[0.4, 0.0, -0.2], 1).unwrap(), vec![0]);
        assert_eq!(select_top_k(&[0.1, 0.1, 0.1], 2).unwrap(), vec![0, 1]);
        assert_eq!(select_top_k(&[-0.5, 0.2, 0.9], 3).unwrap(), vec![2, 1, 0]);
        assert!(select_top_k(&[0.1], 2).is_err());
        assert!(select_top_k(&[0.1], 0).is_err());
    }

    #[test]
    fn top_k_abs_mode() {
        assert_eq!(select_top_k_abs(&[0.4, 0.0, -0.9], 1).unwrap(), vec![2]);
    }

    #[test]
    fn single_channel_aggregation_is_normalized_map() {
        let maps = vec![heatmap(0, 1, 4, vec![0.2, 0.4, 0.6, 0.8])];
        let agg = aggregate_heatmaps(&maps, &[0.7], &[0]).unwrap();
        // Min-max stretches 0.2..0.8 to 0..1.
        let expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, e) in agg.grid.data.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_maps_aggregate_to_common_map() {
        let data = vec![0.1, 0.9, 0.5, 0.3];
        let maps = vec![
            heatmap(0, 2, 2, data.clone()),
            heatmap(1, 2, 2, data.clone()),
        ];
        let agg = aggregate_heatmaps(&maps, &[0.6, 0.2], &[0, 1]).unwrap();
        // Convex combination of identical maps is the map itself; compare
        // after applying the same min-max normalization.
        let lo = 0.1;
        let hi = 0.9;
        for (a, raw) in agg.grid.data.iter().zip(&data) {
            assert!((a - (raw - lo) / (hi - lo)).abs() < 1e-12);
        }
    }

    #[test]
    fn half_and_half_weighted_mean() {
        // M1 lights the left half, M2 the right half, weights 0.3 and 0.1:
        // weighted mean is 0.75 left / 0.25 right, then 1.0 / 0.0 after
        // min-max normalization.
        let m1 = heatmap(0, 2, 2, vec![1.0, 0.0, 1.0, 0.0]);
        let m2 = heatmap(1, 2, 2, vec![0.0, 1.0, 0.0, 1.0]);
        let agg = aggregate_heatmaps(&[m1, m2], &[0.3, 0.1], &[0, 1]).unwrap();
        assert_eq!(agg.grid.data, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(agg.mask.data, vec![true, false, true, false]);
    }

    #[test]
    fn convexity_before_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m1: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
        let m2: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
        let maps = vec![heatmap(0, 3, 4, m1.clone()), heatmap(1, 3, 4, m2.clone())];
        let w = [0.8, 0.4];
        // Recompute the raw weighted mean and check it sits inside the
        // cellwise envelope.
        for i in 0..12 {
            let mean = (w[0] * m1[i] + w[1] * m2[i]) / (w[0] + w[1]);
            assert!(mean >= m1[i].min(m2[i]) - 1e-12);
            assert!(mean <= m1[i].max(m2[i]) + 1e-12);
        }
        assert!(aggregate_heatmaps(&maps, &w, &[0, 1]).is_ok());
    }

    #[test]
    fn no_positive_contribution_is_error() {
        let maps = vec![heatmap(0, 1, 2, vec![0.1, 0.9])];
        assert!(matches!(
            aggregate_heatmaps(&maps, &[-0.4], &[0]),
            Err(Error::NoPositiveContribution)
        ));
    }

    #[test]
    fn missing_channel_is_error() {
        let maps = vec![heatmap(0, 1, 2, vec![0.1, 0.9])];
        assert!(matches!(
            aggregate_heatmaps(&maps, &[0.4, 0.6], &[1]),
            Err(Error::MissingHeatmap(1))
        ));
    }

    #[test]
    fn mismatched_grid_dimensions_rejected() {
        let maps = vec![
            heatmap(0, 1, 2, vec![0.1, 0.9]),
            heatmap(1, 2, 1, vec![0.5, 0.6]),
        ];
        assert!(aggregate_heatmaps(&maps, &[0.4, 0.6], &[0, 1]).is_err());
    }
}
