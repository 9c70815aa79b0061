//! Siamese comparison head over precomputed feature embeddings.
//!
//! Two weight-shared branches map each item's features through a scoring
//! map `s_n : R^d -> R^n`. The per-channel comparison vector is
//! `h_c = sigmoid(s_n(x_left)_c - s_n(x_right)_c)`, and a decision head `g`
//! turns the n channels into one probability. The baseline variant is the
//! n = 1 special case with the head fixed to the identity, which collapses
//! to the conventional single-score comparison `sigmoid(s(x_j) - s(x_i))`.
//!
//! Orientation: an output close to 1 means "left is less severe". Stored
//! pair labels use the opposite polarity (label 0 = left less severe), so
//! training and evaluation convert labels with [`target_for_label`]. With
//! that pairing, a trained scoring map assigns higher scores to more severe
//! items.

mod train;

pub use train::{evaluate_accuracy, train, EpochStats, OptimizerKind, TrainConfig, TrainHistory};

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported number of hidden comparison channels.
pub const MAX_CHANNELS: usize = 64;

const CHECKPOINT_FORMAT: &str = "sevrank.model.v1";

/// Numerically stable logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Probability target for a stored pair label.
///
/// The comparison head scores the event "left is less severe", which pair
/// files encode as label 0, so the target is the label's complement.
pub fn target_for_label(label: u8) -> f64 {
    1.0 - f64::from(label)
}

/// Binary cross-entropy with the prediction clamped to [1e-7, 1 - 1e-7].
pub fn bce_loss(pred: f64, target: f64) -> f64 {
    let p = pred.clamp(1e-7, 1.0 - 1e-7);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// One-hidden-layer scoring map: affine(d -> hidden), rectifier,
/// affine(hidden -> n). Weights are row-major `[out][in]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoringMap {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl ScoringMap {
    fn init(input_dim: usize, hidden_dim: usize, output_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut map = ScoringMap {
            input_dim,
            hidden_dim,
            output_dim,
            w1: vec![0.0; hidden_dim * input_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; output_dim * hidden_dim],
            b2: vec![0.0; output_dim],
        };
        let bound1 = 1.0 / (input_dim as f64).sqrt();
        for w in &mut map.w1 {
            *w = rng.random_range(-bound1..bound1);
        }
        let bound2 = 1.0 / (hidden_dim as f64).sqrt();
        for w in &mut map.w2 {
            *w = rng.random_range(-bound2..bound2);
        }
        map
    }

    /// Forward pass keeping the intermediates needed for backprop.
    fn eval_trace(&self, x: &[f64]) -> BranchTrace {
        let mut pre = vec![0.0; self.hidden_dim];
        let mut act = vec![0.0; self.hidden_dim];
        for i in 0..self.hidden_dim {
            let mut z = self.b1[i];
            let row = &self.w1[i * self.input_dim..(i + 1) * self.input_dim];
            for (w, xv) in row.iter().zip(x) {
                z += w * xv;
            }
            pre[i] = z;
            act[i] = z.max(0.0);
        }
        let mut scores = vec![0.0; self.output_dim];
        for o in 0..self.output_dim {
            let mut z = self.b2[o];
            let row = &self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            for (w, a) in row.iter().zip(&act) {
                z += w * a;
            }
            scores[o] = z;
        }
        BranchTrace { pre, act, scores }
    }

    /// Severity score vector `s_n(x)`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(self.eval_trace(x).scores)
    }
}

struct BranchTrace {
    pre: Vec<f64>,
    act: Vec<f64>,
    scores: Vec<f64>,
}

/// Affine decision head `g(h) = sigmoid(w . h + b)` over the n channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionHead {
    pub w: Vec<f64>,
    pub b: f64,
}

impl DecisionHead {
    pub fn logit(&self, h: &[f64]) -> f64 {
        self.w.iter().zip(h).map(|(w, v)| w * v).sum::<f64>() + self.b
    }
}

/// Which comparison function the model computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Conventional single-score comparison; head fixed to the identity.
    Baseline,
    /// n-channel comparison with a trainable decision head.
    NHidden,
}

/// Siamese comparison model: scoring map, decision head, variant tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonModel {
    pub variant: Variant,
    pub scoring: ScoringMap,
    pub head: DecisionHead,
    pub seed: u64,
}

impl ComparisonModel {
    /// Builds a freshly initialized model. Weights are drawn from a
    /// symmetric uniform range scaled by fan-in; biases start at zero.
    /// For the baseline variant, `n` is forced to 1 and the head is the
    /// fixed identity (w = [1], b = 0, never trained).
    pub fn new(
        variant: Variant,
        input_dim: usize,
        hidden_dim: usize,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::InvalidConfig("model dimensions must be >= 1".into()));
        }
        let n = match variant {
            Variant::Baseline => 1,
            Variant::NHidden => n,
        };
        if n == 0 || n > MAX_CHANNELS {
            return Err(Error::InvalidConfig(format!(
                "n must be in 1..={MAX_CHANNELS}, got {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scoring = ScoringMap::init(input_dim, hidden_dim, n, &mut rng);
        let head = match variant {
            Variant::Baseline => DecisionHead { w: vec![1.0], b: 0.0 },
            Variant::NHidden => {
                let bound = 1.0 / (n as f64).sqrt();
                DecisionHead {
                    w: (0..n).map(|_| rng.random_range(-bound..bound)).collect(),
                    b: 0.0,
                }
            }
        };
        Ok(ComparisonModel {
            variant,
            scoring,
            head,
            seed,
        })
    }

    /// Number of comparison channels n.
    pub fn n(&self) -> usize {
        self.scoring.output_dim
    }

    /// Feature dimension d.
    pub fn input_dim(&self) -> usize {
        self.scoring.input_dim
    }

    /// Per-channel comparison vector `h_c = sigmoid(s_n(xi)_c - s_n(xj)_c)`.
    pub fn hidden_comparison(&self, xi: &[f64], xj: &[f64]) -> Result<Vec<f64>> {
        let si = self.scoring.scores(xi)?;
        let sj = self.scoring.scores(xj)?;
        let h: Vec<f64> = si
            .iter()
            .zip(&sj)
            .map(|(a, b)| sigmoid(a - b))
            .collect();
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hidden comparison".into()));
        }
        Ok(h)
    }

    /// Probability that the left item is less severe than the right one.
    ///
    /// Baseline: `sigmoid(s(xj) - s(xi))`. NHidden: `g` applied to the
    /// hidden comparison vector.
    pub fn forward(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        let p = match self.variant {
            Variant::Baseline => {
                let si = self.scoring.scores(xi)?;
                let sj = self.scoring.scores(xj)?;
                sigmoid(sj[0] - si[0])
            }
            Variant::NHidden => {
                let h = self.hidden_comparison(xi, xj)?;
                sigmoid(self.head.logit(&h))
            }
        };
        if !p.is_finite() {
            return Err(Error::NonFinite("model output".into()));
        }
        Ok(p)
    }

    /// Mean loss and mean gradients over a batch of feature pairs.
    ///
    /// The two siamese branches share the scoring map, so each branch's
    /// contribution is summed into the same parameter gradients. For the
    /// baseline variant the head gradient is identically zero.
    pub fn backward(&self, batch: &[PairFeatures<'_>]) -> Result<(Gradients, f64)> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let mut grads = Gradients::zeros(self);
        let mut total_loss = 0.0;
        for pair in batch {
            total_loss += self.accumulate_pair(pair, &mut grads)?;
        }
        let scale = 1.0 / batch.len() as f64;
        grads.scale(scale);
        let mean_loss = total_loss * scale;
        if let Some(name) = grads.first_non_finite(self) {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
        Ok((grads, mean_loss))
    }

    fn accumulate_pair(&self, pair: &PairFeatures<'_>, grads: &mut Gradients) -> Result<f64> {
        let d = self.scoring.input_dim;
        if pair.left.len() != d || pair.right.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: pair.left.len().max(pair.right.len()),
            });
        }
        let lt = self.scoring.eval_trace(pair.left);
        let rt = self.scoring.eval_trace(pair.right);
        let n = self.scoring.output_dim;

        // dL/ds for each branch, then shared backprop through the MLP.
        let mut d_scores_left = vec![0.0; n];
        let mut d_scores_right = vec![0.0; n];
        let loss;
        match self.variant {
            Variant::Baseline => {
                let p = sigmoid(rt.scores[0] - lt.scores[0]);
                loss = bce_loss(p, pair.target);
                let dz = p - pair.target;
                d_scores_right[0] = dz;
                d_scores_left[0] = -dz;
            }
            Variant::NHidden => {
                let h: Vec<f64> = lt
                    .scores
                    .iter()
                    .zip(&rt.scores)
                    .map(|(a, b)| sigmoid(a - b))
                    .collect();
                let p = sigmoid(self.head.logit(&h));
                loss = bce_loss(p, pair.target);
                let dlogit = p - pair.target;
                grads.head_b += dlogit;
                for c in 0..n {
                    grads.head_w[c] += dlogit * h[c];
                    let ddelta = dlogit * self.head.w[c] * h[c] * (1.0 - h[c]);
                    d_scores_left[c] = ddelta;
                    d_scores_right[c] = -ddelta;
                }
            }
        }
        self.backprop_branch(pair.left, &lt, &d_scores_left, grads);
        self.backprop_branch(pair.right, &rt, &d_scores_right, grads);
        Ok(loss)
    }

    fn backprop_branch(
        &self,
        x: &[f64],
        trace: &BranchTrace,
        d_scores: &[f64],
        grads: &mut Gradients,
    ) {
        let s = &self.scoring;
        let mut d_act = vec![0.0; s.hidden_dim];
        for o in 0..s.output_dim {
            let ds = d_scores[o];
            if ds == 0.0 {
                continue;
            }
            grads.b2[o] += ds;
            let wrow = &s.w2[o * s.hidden_dim..(o + 1) * s.hidden_dim];
            let grow = &mut grads.w2[o * s.hidden_dim..(o + 1) * s.hidden_dim];
            for i in 0..s.hidden_dim {
                grow[i] += ds * trace.act[i];
                d_act[i] += ds * wrow[i];
            }
        }
        for i in 0..s.hidden_dim {
            if trace.pre[i] <= 0.0 || d_act[i] == 0.0 {
                continue;
            }
            let dz = d_act[i];
            grads.b1[i] += dz;
            let grow = &mut grads.w1[i * s.input_dim..(i + 1) * s.input_dim];
            for (g, xv) in grow.iter_mut().zip(x) {
                *g += dz * xv;
            }
        }
    }

    /// All parameters flattened in a fixed order (w1, b1, w2, b2, head.w,
    /// head.b). The same order is used by [`Gradients::to_flat`].
    pub fn params_flat(&self) -> Vec<f64> {
        let s = &self.scoring;
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&s.w1);
        out.extend_from_slice(&s.b1);
        out.extend_from_slice(&s.w2);
        out.extend_from_slice(&s.b2);
        out.extend_from_slice(&self.head.w);
        out.push(self.head.b);
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                found: flat.len(),
            });
        }
        let s = &mut self.scoring;
        let mut off = 0;
        for dst in [&mut s.w1, &mut s.b1, &mut s.w2, &mut s.b2, &mut self.head.w] {
            let len = dst.len();
            dst.copy_from_slice(&flat[off..off + len]);
            off += len;
        }
        self.head.b = flat[off];
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let s = &self.scoring;
        s.w1.len() + s.b1.len() + s.w2.len() + s.b2.len() + self.head.w.len() + 1
    }

    /// Human-readable name of the parameter at a flat index.
    pub fn param_name(&self, idx: usize) -> String {
        let s = &self.scoring;
        let mut i = idx;
        for (name, len) in [
            ("scoring.w1", s.w1.len()),
            ("scoring.b1", s.b1.len()),
            ("scoring.w2", s.w2.len()),
            ("scoring.b2", s.b2.len()),
            ("head.w", self.head.w.len()),
        ] {
            if i < len {
                return format!("{name}[{i}]");
            }
            i -= len;
        }
        "head.b".into()
    }

    /// Writes the model as a tagged JSON checkpoint.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            model: self.clone(),
        };
        let json = serde_json::to_string(&file)
            .map_err(|e| Error::Checkpoint(format!("serialize: {e}")))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Reads a checkpoint, validating the format tag and shapes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("parse {}: {e}", path.display())))?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported format tag {:?}, expected {CHECKPOINT_FORMAT:?}",
                file.format
            )));
        }
        let m = &file.model;
        let s = &m.scoring;
        let shapes_ok = s.w1.len() == s.hidden_dim * s.input_dim
            && s.b1.len() == s.hidden_dim
            && s.w2.len() == s.output_dim * s.hidden_dim
            && s.b2.len() == s.output_dim
            && m.head.w.len() == s.output_dim;
        if !shapes_ok {
            return Err(Error::Checkpoint("parameter shapes disagree with header".into()));
        }
        if m.variant == Variant::Baseline && (s.output_dim != 1 || m.head.w != [1.0] || m.head.b != 0.0)
        {
            return Err(Error::Checkpoint(
                "baseline checkpoint must have n = 1 and an identity head".into(),
            ));
        }
        if m.params_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(file.model)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    model: ComparisonModel,
}

/// A resolved training pair: borrowed feature vectors plus the probability
/// target for the "left less severe" event (see [`target_for_label`]).
#[derive(Debug, Clone, Copy)]
pub struct PairFeatures<'a> {
    pub left: &'a [f64],
    pub right: &'a [f64],
    pub target: f64,
}

/// Parameter gradients, same shapes as the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

impl Gradients {
    pub fn zeros(model: &ComparisonModel) -> Self {
        let s = &model.scoring;
        Gradients {
            w1: vec![0.0; s.w1.len()],
            b1: vec![0.0; s.b1.len()],
            w2: vec![0.0; s.w2.len()],
            b2: vec![0.0; s.b2.len()],
            head_w: vec![0.0; model.head.w.len()],
            head_b: 0.0,
        }
    }

    fn scale(&mut self, factor: f64) {
        for v in self
            .w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(&mut self.b2)
            .chain(&mut self.head_w)
        {
            *v *= factor;
        }
        self.head_b *= factor;
    }

    /// Flattened in the same order as [`ComparisonModel::params_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out =
            Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.head_w.len() + 1);
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.head_w);
        out.push(self.head_b);
        out
    }

    fn first_non_finite(&self, model: &ComparisonModel) -> Option<String> {
        self.to_flat()
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| model.param_name(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_inputs(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn sigma_of_zero_is_half() {
        let model = ComparisonModel::new(Variant::NHidden, 4, 8, 3, 7).unwrap();
        let x = vec![0.3, -1.0, 0.5, 2.0];
        let h = model.hidden_comparison(&x, &x).unwrap();
        for v in h {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_score_difference_gives_sigma_one() {
        // A scoring map that just copies its single input, so the channel
        // difference equals the raw input difference.
        let mut model = ComparisonModel::new(Variant::NHidden, 1, 1, 1, 0).unwrap();
        model.scoring.w1 = vec![1.0];
        model.scoring.b1 = vec![0.0];
        model.scoring.w2 = vec![1.0];
        model.scoring.b2 = vec![0.0];
        let h = model.hidden_comparison(&[2.0], &[1.0]).unwrap();
        assert!((h[0] - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn baseline_orientation_matches_convention() {
        // With s(xi) = 2 and s(xj) = 1 the left item scores higher, i.e. is
        // judged more severe, so P(left less severe) = sigmoid(-1).
        let mut model = ComparisonModel::new(Variant::Baseline, 1, 1, 1, 0).unwrap();
        model.scoring.w1 = vec![1.0];
        model.scoring.b1 = vec![0.0];
        model.scoring.w2 = vec![1.0];
        model.scoring.b2 = vec![0.0];
        let p = model.forward(&[2.0], &[1.0]).unwrap();
        assert!((p - 0.2689414213699951).abs() < 1e-12);
    }

    #[test]
    fn identical_inputs_give_half() {
        let model = ComparisonModel::new(Variant::Baseline, 5, 16, 1, 3).unwrap();
        let x = vec![0.1, 0.2, -0.3, 1.0, -2.0];
        assert!((model.forward(&x, &x).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_head_gives_half_everywhere() {
        let mut model = ComparisonModel::new(Variant::NHidden, 4, 8, 5, 11).unwrap();
        model.head.w = vec![0.0; 5];
        model.head.b = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let xi = random_inputs(&mut rng, 4);
            let xj = random_inputs(&mut rng, 4);
            assert!((model.forward(&xi, &xj).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_values() {
        assert!((bce_loss(0.5, 1.0) - 0.6931471805599453).abs() < 1e-12);
        assert!(bce_loss(1.0, 1.0) <= 1e-6);
        assert!((bce_loss(0.9, 0.0) - 2.302585092994046).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = ComparisonModel::new(Variant::NHidden, 4, 8, 2, 0).unwrap();
        assert!(matches!(
            model.forward(&[1.0, 2.0], &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn baseline_forces_identity_head() {
        let model = ComparisonModel::new(Variant::Baseline, 4, 8, 10, 0).unwrap();
        assert_eq!(model.n(), 1);
        assert_eq!(model.head.w, vec![1.0]);
        assert_eq!(model.head.b, 0.0);
    }

    #[test]
    fn channel_bound_enforced() {
        assert!(ComparisonModel::new(Variant::NHidden, 4, 8, 65, 0).is_err());
        assert!(ComparisonModel::new(Variant::NHidden, 4, 8, 0, 0).is_err());
    }

    #[test]
    fn zero_weight_model_balanced_batch_has_zero_head_bias_gradient() {
        // All-zero weights pin the output at 0.5 for every pair, so the
        // head bias gradient mean(p - t) vanishes on a balanced batch.
        let mut model = ComparisonModel::new(Variant::NHidden, 3, 4, 2, 0).unwrap();
        for w in model.scoring.w2.iter_mut() {
            *w = 0.0;
        }
        model.head.w = vec![0.0, 0.0];
        let a = [1.0, 0.0, -1.0];
        let b = [0.5, 2.0, 0.0];
        let batch = [
            PairFeatures { left: &a, right: &b, target: 1.0 },
            PairFeatures { left: &b, right: &a, target: 0.0 },
        ];
        let (grads, _) = model.backward(&batch).unwrap();
        assert!(grads.head_b.abs() < 1e-15);
    }

    /// Central finite differences over every parameter, used as the
    /// gradient oracle. Evaluates the full loss (with clamping) so it
    /// matches exactly what backward differentiates.
    pub(crate) fn finite_difference_grads(
        model: &ComparisonModel,
        batch: &[PairFeatures<'_>],
        eps: f64,
    ) -> Vec<f64> {
        let base = model.params_flat();
        let mut fd = vec![0.0; base.len()];
        for k in 0..base.len() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            let mut pp = base.clone();
            pp[k] += eps;
            plus.set_params_flat(&pp).unwrap();
            let mut pm = base.clone();
            pm[k] -= eps;
            minus.set_params_flat(&pm).unwrap();
            let lp = mean_loss(&plus, batch);
            let lm = mean_loss(&minus, batch);
            fd[k] = (lp - lm) / (2.0 * eps);
        }
        fd
    }

    fn mean_loss(model: &ComparisonModel, batch: &[PairFeatures<'_>]) -> f64 {
        batch
            .iter()
            .map(|p| bce_loss(model.forward(p.left, p.right).unwrap(), p.target))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Agreement with an absolute floor: central differences carry ~1e-11
    /// rounding noise, which would otherwise fail structurally-zero
    /// gradients (the second affine bias cancels between the branches).
    fn grads_agree(analytic: f64, numeric: f64) -> bool {
        let diff = (analytic - numeric).abs();
        diff <= 1e-9 || diff / analytic.abs().max(numeric.abs()) < 1e-4
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..30 {
            let variant = if trial % 2 == 0 { Variant::NHidden } else { Variant::Baseline };
            let d = rng.random_range(2..6);
            let hidden = rng.random_range(2..6);
            let n = rng.random_range(1..5);
            let model = ComparisonModel::new(variant, d, hidden, n, trial as u64).unwrap();
            let xi = random_inputs(&mut rng, d);
            let xj = random_inputs(&mut rng, d);
            let target = if rng.random_range(0.0..1.0) < 0.5 { 0.0 } else { 1.0 };
            let batch = [PairFeatures { left: &xi, right: &xj, target }];
            let (grads, _) = model.backward(&batch).unwrap();
            let analytic = grads.to_flat();
            let numeric = finite_difference_grads(&model, &batch, 1e-5);
            for (k, (a, n_)) in analytic.iter().zip(&numeric).enumerate() {
                assert!(
                    grads_agree(*a, *n_),
                    "trial {trial} param {} ({}): analytic {a}, numeric {n_}",
                    k,
                    model.param_name(k)
                );
            }
        }
    }

    #[test]
    fn baseline_single_pair_matches_ranknet_form() {
        // For one pair the baseline gradient is (p - t) d(s(xj) - s(xi))/dtheta.
        let model = ComparisonModel::new(Variant::Baseline, 3, 4, 1, 5).unwrap();
        let xi = [0.3, -0.7, 1.2];
        let xj = [-0.1, 0.9, 0.4];
        let target = 1.0;
        let batch = [PairFeatures { left: &xi, right: &xj, target }];
        let (grads, _) = model.backward(&batch).unwrap();

        let p = model.forward(&xi, &xj).unwrap();
        let dz = p - target;
        // Score gradient of each branch via finite differences of s alone.
        let eps = 1e-6;
        let base = model.params_flat();
        let score = |m: &ComparisonModel, x: &[f64]| m.scoring.scores(x).unwrap()[0];
        let flat = grads.to_flat();
        for k in 0..base.len() - 2 {
            // skip the fixed head parameters at the end
            let mut plus = model.clone();
            let mut pp = base.clone();
            pp[k] += eps;
            plus.set_params_flat(&pp).unwrap();
            let mut minus = model.clone();
            let mut pm = base.clone();
            pm[k] -= eps;
            minus.set_params_flat(&pm).unwrap();
            let dsj = (score(&plus, &xj) - score(&minus, &xj)) / (2.0 * eps);
            let dsi = (score(&plus, &xi) - score(&minus, &xi)) / (2.0 * eps);
            let expected = dz * (dsj - dsi);
            assert!(
                (flat[k] - expected).abs() < 1e-6,
                "param {}: got {}, ranknet form {}",
                model.param_name(k),
                flat[k],
                expected
            );
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = ComparisonModel::new(Variant::NHidden, 6, 12, 4, 99).unwrap();
        model.save(&path).unwrap();
        let back = ComparisonModel::load(&path).unwrap();
        assert_eq!(model.params_flat(), back.params_flat());
        assert_eq!(model.variant, back.variant);
        assert_eq!(model.seed, back.seed);
    }

    #[test]
    fn checkpoint_rejects_bad_format_tag() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, "{\"format\":\"other.v9\",\"model\":{}}").unwrap();
        assert!(ComparisonModel::load(&path).is_err());
    }

    #[test]
    fn monotone_in_left_score() {
        // Raising the left score must raise P(left more severe) = 1 - forward.
        let model = ComparisonModel::new(Variant::Baseline, 3, 8, 1, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let xj = random_inputs(&mut rng, 3);
        let mut scored: Vec<(f64, Vec<f64>)> = (0..50)
            .map(|_| {
                let x = random_inputs(&mut rng, 3);
                (model.scoring.scores(&x).unwrap()[0], x)
            })
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut last = f64::NEG_INFINITY;
        for (s, x) in &scored {
            let more_severe = 1.0 - model.forward(x, &xj).unwrap();
            if *s > last {
                assert!(more_severe > sigmoid(last - model.scoring.scores(&xj).unwrap()[0]) - 1e-12);
            }
            last = *s;
        }
        // Strict monotonicity on the sorted distinct scores.
        let probs: Vec<f64> = scored
            .iter()
            .map(|(_, x)| 1.0 - model.forward(x, &xj).unwrap())
            .collect();
        for w in probs.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    proptest! {
        // sigmoid(-z) = 1 - sigmoid(z) makes the channels antisymmetric
        // regardless of the parameters.
        #[test]
        fn channel_antisymmetry(seed in 0u64..500, vals in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let model = ComparisonModel::new(Variant::NHidden, 4, 6, 3, seed).unwrap();
            let xi = &vals[..4];
            let xj = &vals[4..];
            let ab = model.hidden_comparison(xi, xj).unwrap();
            let ba = model.hidden_comparison(xj, xi).unwrap();
            for (u, v) in ab.iter().zip(&ba) {
                prop_assert!((u + v - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn baseline_forward_antisymmetry(seed in 0u64..500, vals in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let model = ComparisonModel::new(Variant::Baseline, 4, 6, 1, seed).unwrap();
            let xi = &vals[..4];
            let xj = &vals[4..];
            let ab = model.forward(xi, xj).unwrap();
            let ba = model.forward(xj, xi).unwrap();
            prop_assert!((ab + ba - 1.0).abs() < 1e-12);
        }
    }
}
