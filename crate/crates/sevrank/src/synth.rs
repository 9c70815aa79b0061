//! Synthetic multi-criteria severity generator.
//!
//! Each subject gets a latent criteria vector that drifts monotonically
//! per criterion across visits. Features are an orthonormal rotation of
//! the (zero-padded) criteria plus Gaussian observation noise, so at zero
//! noise the criteria are fully recoverable. The weighted-sum rule folds
//! the criteria into a single severity score (and hence an MD-index), a
//! world a single-score comparison can express; the majority rule labels
//! pairs by a per-criterion vote, which no single score can express.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DiseaseFlag, Item};
use crate::error::{Error, Result};
use crate::sampling::PairLabeler;

/// How pair labels relate to the latent criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Severity is a fixed positive combination of the criteria; labels
    /// derive from the resulting MD-index.
    #[default]
    WeightedSum,
    /// Labels come from a per-criterion majority vote; the MD-index is a
    /// pseudo-severity kept only for flags and diagnostics.
    Majority,
}

/// Generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub subjects: usize,
    pub items_per_subject: usize,
    pub criteria: usize,
    pub feature_dim: usize,
    pub noise: f64,
    pub label_rule: LabelRule,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            subjects: 440,
            items_per_subject: 8,
            criteria: 5,
            feature_dim: 16,
            noise: 0.1,
            label_rule: LabelRule::WeightedSum,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.items_per_subject == 0 {
            return Err(Error::InvalidConfig("subjects and items per subject must be >= 1".into()));
        }
        if self.criteria == 0 {
            return Err(Error::InvalidConfig("criteria count must be >= 1".into()));
        }
        if self.feature_dim < self.criteria {
            return Err(Error::InvalidConfig(format!(
                "feature dim {} must be >= criteria count {}",
                self.feature_dim, self.criteria
            )));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidConfig("noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// Hidden generator state: per-item criteria, severity weights, rotation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthGroundTruth {
    pub criteria: BTreeMap<String, Vec<f64>>,
    pub weights: Vec<f64>,
    pub rotation: Vec<Vec<f64>>,
    pub flag_threshold: f64,
}

/// Per-subject drift magnitude range (per criterion, per visit).
const DRIFT_RANGE: (f64, f64) = (0.15, 0.45);
/// Probability that a criterion worsens rather than improves.
const WORSEN_PROB: f64 = 0.7;

/// Generates a dataset plus its hidden criteria.
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, SynthGroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c = cfg.criteria;
    let d = cfg.feature_dim;

    let weights: Vec<f64> = (0..c).map(|_| rng.random_range(0.5..1.5)).collect();
    let rotation = random_rotation(d, &mut rng);

    let mut criteria = BTreeMap::new();
    let mut raw: Vec<(String, String, Vec<f64>)> = Vec::new();
    for s in 0..cfg.subjects {
        let subject = format!("s{s:03}");
        let baseline: Vec<f64> = (0..c).map(|_| standard_normal(&mut rng)).collect();
        let drift: Vec<f64> = (0..c)
            .map(|_| {
                let magnitude = rng.random_range(DRIFT_RANGE.0..DRIFT_RANGE.1);
                if rng.random_range(0.0..1.0) < WORSEN_PROB {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect();
        for t in 0..cfg.items_per_subject {
            let id = format!("{subject}_v{t:02}");
            let z: Vec<f64> = baseline
                .iter()
                .zip(&drift)
                .map(|(b, dr)| b + dr * t as f64)
                .collect();
            criteria.insert(id.clone(), z.clone());
            raw.push((id, subject.clone(), z));
        }
    }

    // Severity (higher = worse); MD-index is its negative.
    let severity = |z: &[f64]| -> f64 {
        match cfg.label_rule {
            LabelRule::WeightedSum => z.iter().zip(&weights).map(|(a, b)| a * b).sum(),
            LabelRule::Majority => z.iter().sum::<f64>() / c as f64,
        }
    };

    let mds: Vec<f64> = raw.iter().map(|(_, _, z)| -severity(z)).collect();
    let mut sorted = mds.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let flag_threshold = sorted[sorted.len() / 2];

    let mut items = Vec::with_capacity(raw.len());
    for ((id, subject, z), md) in raw.into_iter().zip(mds) {
        let mut padded = vec![0.0; d];
        padded[..c].copy_from_slice(&z);
        let mut features = rotate(&rotation, &padded);
        if cfg.noise > 0.0 {
            for f in &mut features {
                *f += cfg.noise * standard_normal(&mut rng);
            }
        }
        let flag = if md <= flag_threshold {
            DiseaseFlag::Glaucoma
        } else {
            DiseaseFlag::Healthy
        };
        items.push(Item {
            id,
            subject,
            md_index: md,
            flag: Some(flag),
            features,
        });
    }

    let ds = Dataset::new(items)?;
    Ok((
        ds,
        SynthGroundTruth {
            criteria,
            weights,
            rotation,
            flag_threshold,
        },
    ))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random orthonormal matrix via Gram-Schmidt on a Gaussian matrix.
fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        for basis in &rows {
            let dot: f64 = v.iter().zip(basis).map(|(a, b)| a * b).sum();
            for (vi, bi) in v.iter_mut().zip(basis) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // numerically degenerate draw, redo
        }
        for vi in &mut v {
            *vi /= norm;
        }
        rows.push(v);
    }
    rows
}

fn rotate(rotation: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rotation
        .iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Labels pairs by the per-criterion majority vote: label 1 when the left
/// item is more severe (higher value) on strictly more criteria than the
/// right. A tied vote is undefined and resampled by the caller.
pub struct MajorityLabeler<'a> {
    criteria: &'a BTreeMap<String, Vec<f64>>,
}

impl<'a> MajorityLabeler<'a> {
    pub fn new(criteria: &'a BTreeMap<String, Vec<f64>>) -> Self {
        MajorityLabeler { criteria }
    }
}

impl PairLabeler for MajorityLabeler<'_> {
    fn label(&self, left: &Item, right: &Item) -> Option<u8> {
        let zl = self.criteria.get(&left.id)?;
        let zr = self.criteria.get(&right.id)?;
        majority_vote(zl, zr)
    }
}

/// Vote on two criteria vectors; None when the vote ties.
pub fn majority_vote(left: &[f64], right: &[f64]) -> Option<u8> {
    let mut left_more_severe = 0usize;
    let mut right_more_severe = 0usize;
    for (a, b) in left.iter().zip(right) {
        if a > b {
            left_more_severe += 1;
        } else if a < b {
            right_more_severe += 1;
        }
    }
    match left_more_severe.cmp(&right_more_severe) {
        std::cmp::Ordering::Greater => Some(1),
        std::cmp::Ordering::Less => Some(0),
        std::cmp::Ordering::Equal => None,
    }
}
