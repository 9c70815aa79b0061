//! Pairwise comparison matrix and Bradley-Terry rank-list reconstruction.
//!
//! The model's forward pass fills a q x q matrix of preference
//! probabilities; a minorization-maximization fit turns it into positive
//! per-item strengths pi with P(i beats j) = pi_i / (pi_i + pi_j), read
//! here as "beats on severity". Off-diagonal entry (i, j) holds the
//! model's probability that item i is less severe than item j, so it is
//! credited to j as a fractional severity win.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ComparisonModel;

/// Square matrix of model preference probabilities over an item set.
/// `probs[i][j]` is P(item i less severe than item j); the diagonal is
/// unused and kept at 0.5.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub ids: Vec<String>,
    pub probs: Vec<Vec<f64>>,
}

/// Items ordered least to most severe with their normalized strengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankList {
    pub ids: Vec<String>,
    pub strengths: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Options for the Bradley-Terry fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BtOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Replace fractional wins with hard 0/1 outcomes before fitting.
    pub binarize: bool,
}

impl Default for BtOptions {
    fn default() -> Self {
        BtOptions {
            tol: 1e-8,
            max_iter: 10_000,
            binarize: false,
        }
    }
}

/// Evaluates the model on every ordered pair of the given items.
/// No symmetrization is applied; the raw outputs are recorded.
pub fn build_matrix(model: &ComparisonModel, items: &[(&str, &[f64])]) -> Result<ComparisonMatrix> {
    if items.len() < 2 {
        return Err(Error::InvalidConfig(
            "comparison matrix needs at least 2 items".into(),
        ));
    }
    let q = items.len();
    let mut probs = vec![vec![0.5; q]; q];
    for i in 0..q {
        for j in 0..q {
            if i == j {
                continue;
            }
            probs[i][j] = model.forward(items[i].1, items[j].1)?;
        }
    }
    Ok(ComparisonMatrix {
        ids: items.iter().map(|(id, _)| id.to_string()).collect(),
        probs,
    })
}

impl ComparisonMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let q = self.ids.len();
        if q < 2 {
            return Err(Error::InvalidConfig("matrix must have q >= 2".into()));
        }
        if self.probs.len() != q || self.probs.iter().any(|row| row.len() != q) {
            return Err(Error::DimensionMismatch {
                expected: q * q,
                found: self.probs.iter().map(|r| r.len()).sum(),
            });
        }
        for (i, row) in self.probs.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if i != j && !(p.is_finite() && 0.0 < p && p < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "probs[{i}][{j}] = {p} outside (0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Fractional severity-win weights: entry (i, j) credits j with
    /// `probs[i][j]` and i with the complement.
    fn win_weights(&self, binarize: bool) -> Vec<Vec<f64>> {
        let q = self.len();
        // wins[a][b] = weight of "a beats b on severity".
        let mut wins = vec![vec![0.0; q]; q];
        for i in 0..q {
            for j in 0..q {
                if i == j {
                    continue;
                }
                let p = if binarize {
                    match self.probs[i][j].partial_cmp(&0.5) {
                        Some(std::cmp::Ordering::Greater) => 1.0,
                        Some(std::cmp::Ordering::Less) => 0.0,
                        _ => 0.5,
                    }
                } else {
                    self.probs[i][j]
                };
                wins[j][i] += p;
                wins[i][j] += 1.0 - p;
            }
        }
        wins
    }
}

/// Weighted Bradley-Terry log-likelihood of strengths against the matrix.
pub fn log_likelihood(matrix: &ComparisonMatrix, strengths: &[f64], binarize: bool) -> f64 {
    let wins = matrix.win_weights(binarize);
    let q = matrix.len();
    let mut ll = 0.0;
    for a in 0..q {
        for b in 0..q {
            if a == b || wins[a][b] == 0.0 {
                continue;
            }
            ll += wins[a][b] * (strengths[a] / (strengths[a] + strengths[b])).ln();
        }
    }
    ll
}

/// Fits Bradley-Terry strengths by minorization-maximization and returns
/// the items ordered least to most severe.
///
/// Each MM sweep applies `pi_a <- W_a / sum_b N_ab / (pi_a + pi_b)` from
/// the previous iterate, which never decreases the likelihood. Iteration
/// stops when the largest relative strength change drops below `tol`;
/// hitting `max_iter` first returns the final iterate with the converged
/// flag cleared. Strengths are normalized to sum 1 and ties are broken
/// by item id.
pub fn bradley_terry_fit(matrix: &ComparisonMatrix, opts: &BtOptions) -> Result<RankList> {
    if opts.tol <= 0.0 {
        return Err(Error::InvalidConfig("tol must be > 0".into()));
    }
    matrix.validate()?;
    let q = matrix.len();
    let wins = matrix.win_weights(opts.binarize);
    let totals: Vec<f64> = (0..q).map(|a| wins[a].iter().sum()).collect();
    // Comparison counts: both ordered matrix entries contribute one unit
    // comparison per unordered pair.
    let pair_count = 2.0;

    let mut pi = vec![1.0 / q as f64; q];
    let mut converged = false;
    let mut iterations = 0;
    #[cfg(debug_assertions)]
    let mut last_ll = log_likelihood(matrix, &pi, opts.binarize);

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let mut next = vec![0.0; q];
        for a in 0..q {
            let mut denom = 0.0;
            for b in 0..q {
                if a != b {
                    denom += pair_count / (pi[a] + pi[b]);
                }
            }
            next[a] = totals[a] / denom;
        }
        let sum: f64 = next.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::NonFinite("bradley-terry strengths".into()));
        }
        for v in &mut next {
            *v /= sum;
        }
        #[cfg(debug_assertions)]
        {
            let ll = log_likelihood(matrix, &next, opts.binarize);
            debug_assert!(
                ll >= last_ll - 1e-9 * last_ll.abs().max(1.0),
                "MM likelihood decreased: {last_ll} -> {ll}"
            );
            last_ll = ll;
        }
        let max_change = pi
            .iter()
            .zip(&next)
            .map(|(o, n)| {
                if *o == 0.0 && *n == 0.0 {
                    0.0
                } else {
                    (o - n).abs() / o.abs().max(f64::MIN_POSITIVE)
                }
            })
            .fold(0.0, f64::max);
        pi = next;
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }

    // Order least to most severe: ascending strength, ties by id.
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| {
        pi[a]
            .partial_cmp(&pi[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| matrix.ids[a].cmp(&matrix.ids[b]))
    });
    Ok(RankList {
        ids: order.iter().map(|&i| matrix.ids[i].clone()).collect(),
        strengths: order.iter().map(|&i| pi[i]).collect(),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComparisonModel, Variant};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix_from(ids: &[&str], probs: Vec<Vec<f64>>) -> ComparisonMatrix {
        ComparisonMatrix {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            probs,
        }
    }

    /// Dense grid search over the simplex, the likelihood oracle for
    /// small q.
    fn grid_search_ll(matrix: &ComparisonMatrix, step: usize) -> f64 {
        let q = matrix.len();
        let mut best = f64::NEG_INFINITY;
        let mut point = vec![0usize; q];
        search(matrix, &mut point, 0, step, step, &mut best);
        best
    }

    fn search(
        matrix: &ComparisonMatrix,
        point: &mut Vec<usize>,
        idx: usize,
        remaining: usize,
        step: usize,
        best: &mut f64,
    ) {
        let q = point.len();
        if idx == q - 1 {
            if remaining == 0 {
                return;
            }
            point[idx] = remaining;
            let strengths: Vec<f64> = point.iter().map(|&t| t as f64 / step as f64).collect();
            let ll = log_likelihood(matrix, &strengths, false);
            if ll > *best {
                *best = ll;
            }
            return;
        }
        for t in 1..=(remaining.saturating_sub(q - idx - 1)) {
            point[idx] = t;
            search(matrix, point, idx + 1, remaining - t, step, best);
        }
    }

    #[test]
    fn two_item_analytic_ratio() {
        // A judged less severe than B with probability 0.8 in both
        // orientations: strength ratio must be 4.
        let m = matrix_from(&["a", "b"], vec![vec![0.5, 0.8], vec![0.2, 0.5]]);
        let list = bradley_terry_fit(&m, &BtOptions::default()).unwrap();
        assert!(list.converged);
        assert_eq!(list.ids, vec!["a", "b"]);
        let ratio = list.strengths[1] / list.strengths[0];
        assert!((ratio - 4.0).abs() / 4.0 < 0.01, "ratio {ratio}");
    }

    #[test]
    fn uniform_matrix_gives_uniform_strengths() {
        let m = matrix_from(
            &["c", "a", "b"],
            vec![
                vec![0.5, 0.5, 0.5],
                vec![0.5, 0.5, 0.5],
                vec![0.5, 0.5, 0.5],
            ],
        );
        let list = bradley_terry_fit(&m, &BtOptions::default()).unwrap();
        for s in &list.strengths {
            assert!((s - 1.0 / 3.0).abs() < 1e-9);
        }
        // Ties broken lexicographically by id.
        assert_eq!(list.ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn consistent_chain_is_recovered() {
        // a < b < c in severity, encoded consistently.
        let m = matrix_from(
            &["a", "b", "c"],
            vec![
                vec![0.5, 0.7, 0.9],
                vec![0.3, 0.5, 0.7],
                vec![0.1, 0.3, 0.5],
            ],
        );
        let list = bradley_terry_fit(&m, &BtOptions::default()).unwrap();
        assert_eq!(list.ids, vec!["a", "b", "c"]);
        assert!(list.strengths[0] < list.strengths[1]);
        assert!(list.strengths[1] < list.strengths[2]);
        // Against the dense grid oracle.
        let mm_ll = log_likelihood(&m, &list.strengths, false);
        let grid_ll = grid_search_ll(&m, 100);
        assert!(mm_ll >= grid_ll - 1e-3, "mm {mm_ll} vs grid {grid_ll}");
    }

    #[test]
    fn strengths_normalized() {
        let m = matrix_from(&["a", "b"], vec![vec![0.5, 0.6], vec![0.4, 0.5]]);
        let list = bradley_terry_fit(&m, &BtOptions::default()).unwrap();
        let sum: f64 = list.strengths.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn likelihood_never_decreases_across_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let q = rng.random_range(2..5);
            let mut probs = vec![vec![0.5; q]; q];
            for i in 0..q {
                for j in 0..q {
                    if i != j {
                        probs[i][j] = rng.random_range(0.05..0.95);
                    }
                }
            }
            let ids: Vec<String> = (0..q).map(|i| format!("i{i}")).collect();
            let m = ComparisonMatrix {
                ids: ids.clone(),
                probs,
            };
            let mut last = f64::NEG_INFINITY;
            for iters in 1..=25 {
                let opts = BtOptions {
                    max_iter: iters,
                    tol: 1e-300,
                    ..BtOptions::default()
                };
                let list = bradley_terry_fit(&m, &opts).unwrap();
                // Recover strengths in matrix id order.
                let by_id: std::collections::BTreeMap<&str, f64> = list
                    .ids
                    .iter()
                    .map(|s| s.as_str())
                    .zip(list.strengths.iter().copied())
                    .collect();
                let strengths: Vec<f64> = ids.iter().map(|id| by_id[id.as_str()]).collect();
                let ll = log_likelihood(&m, &strengths, false);
                assert!(ll >= last - 1e-9, "ll {ll} after {iters} < {last}");
                last = ll;
            }
        }
    }

    #[test]
    fn scale_invariance_of_likelihood_order() {
        let m = matrix_from(
            &["a", "b", "c"],
            vec![
                vec![0.5, 0.6, 0.8],
                vec![0.4, 0.5, 0.7],
                vec![0.2, 0.3, 0.5],
            ],
        );
        let list = bradley_terry_fit(&m, &BtOptions::default()).unwrap();
        let scaled: Vec<f64> = list.strengths.iter().map(|s| s * 7.3).collect();
        let ll1 = {
            let by_id: std::collections::BTreeMap<&str, f64> = list
                .ids
                .iter()
                .map(|s| s.as_str())
                .zip(list.strengths.iter().copied())
                .collect();
            let s: Vec<f64> = m.ids.iter().map(|id| by_id[id.as_str()]).collect();
            log_likelihood(&m, &s, false)
        };
        let ll2 = {
            let by_id: std::collections::BTreeMap<&str, f64> = list
                .ids
                .iter()
                .map(|s| s.as_str())
                .zip(scaled.iter().copied())
                .collect();
            let s: Vec<f64> = m.ids.iter().map(|id| by_id[id.as_str()]).collect();
            log_likelihood(&m, &s, false)
        };
        assert!((ll1 - ll2).abs() < 1e-9);
    }

    #[test]
    fn build_matrix_baseline_antisymmetry() {
        let model = ComparisonModel::new(Variant::Baseline, 3, 8, 1, 13).unwrap();
        let f1 = [0.1, -0.4, 0.9];
        let f2 = [1.0, 0.2, -0.3];
        let f3 = [-0.5, 0.5, 0.0];
        let items: Vec<(&str, &[f64])> = vec![("a", &f1), ("b", &f2), ("c", &f3)];
        let m = build_matrix(&model, &items).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((m.probs[i][j] + m.probs[j][i] - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn build_matrix_identical_features_all_half() {
        // Identity pairs: the baseline comparison of an item with itself
        // (feature-wise) is exactly sigmoid(0) = 0.5.
        let model = ComparisonModel::new(Variant::Baseline, 2, 4, 1, 5).unwrap();
        let f = [0.7, -0.2];
        let items: Vec<(&str, &[f64])> = vec![("a", &f), ("b", &f), ("c", &f)];
        let m = build_matrix(&model, &items).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((m.probs[i][j] - 0.5).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn build_matrix_needs_two_items() {
        let model = ComparisonModel::new(Variant::Baseline, 2, 4, 1, 0).unwrap();
        let f = [0.0, 1.0];
        let items: Vec<(&str, &[f64])> = vec![("a", &f)];
        assert!(build_matrix(&model, &items).is_err());
    }

    #[test]
    fn invalid_probability_rejected() {
        let m = matrix_from(&["a", "b"], vec![vec![0.5, 1.0], vec![0.0, 0.5]]);
        assert!(bradley_terry_fit(&m, &BtOptions::default()).is_err());
    }

    #[test]
    fn binarized_fit_orders_like_majority() {
        let m = matrix_from(
            &["a", "b", "c"],
            vec![
                vec![0.5, 0.6, 0.55],
                vec![0.4, 0.5, 0.6],
                vec![0.45, 0.4, 0.5],
            ],
        );
        let opts = BtOptions {
            binarize: true,
            ..BtOptions::default()
        };
        let list = bradley_terry_fit(&m, &opts).unwrap();
        assert_eq!(list.ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn non_convergence_sets_flag() {
        let m = matrix_from(&["a", "b"], vec![vec![0.5, 0.8], vec![0.2, 0.5]]);
        let opts = BtOptions {
            max_iter: 1,
            tol: 1e-15,
            ..BtOptions::default()
        };
        let list = bradley_terry_fit(&m, &opts).unwrap();
        assert!(!list.converged);
        assert_eq!(list.iterations, 1);
    }
}
