//! Deterministic pair-set construction under the longitudinal and
//! cross-sectional regimes.
//!
//! Longitudinal mode draws pairs within one subject and balances the four
//! flag classes HH, HG, GH, GG; cross-sectional mode draws pairs across
//! subjects and keeps only pairs whose MD-index gap exceeds a threshold
//! tied to the gap's standard deviation. Everything is a pure function of
//! (dataset, config): all randomness comes from one seeded ChaCha stream
//! per stage.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{derive_label, Dataset, DiseaseFlag, Item, PairSample, Split};
use crate::error::{Error, Result};

/// Which pairing regime to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    #[default]
    Longitudinal,
    CrossSectional,
}

/// Sampling parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub mode: SamplingMode,
    pub pair_budget_train: usize,
    pub pair_budget_eval: usize,
    pub seed: u64,
    /// Multiplier on the MD-gap standard deviation in cross-sectional mode.
    pub threshold_factor: f64,
    /// Relative subject counts for the train/val/test partition.
    pub split_proportions: (u32, u32, u32),
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            mode: SamplingMode::Longitudinal,
            pair_budget_train: 10_000,
            pair_budget_eval: 1_000,
            seed: 0,
            threshold_factor: 0.5,
            split_proportions: (300, 50, 90),
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pair_budget_train == 0 || self.pair_budget_eval == 0 {
            return Err(Error::InvalidConfig("pair budgets must be >= 1".into()));
        }
        if !(self.threshold_factor >= 0.0) {
            return Err(Error::InvalidConfig("threshold factor must be >= 0".into()));
        }
        let (a, b, c) = self.split_proportions;
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::InvalidConfig("split proportions must be positive".into()));
        }
        Ok(())
    }

    fn budget_for(&self, split: Split) -> usize {
        match split {
            Split::Train => self.pair_budget_train,
            Split::Val | Split::Test => self.pair_budget_eval,
        }
    }
}

/// Labels a candidate pair, or reports it undefined (e.g. an MD tie).
pub trait PairLabeler {
    fn label(&self, left: &Item, right: &Item) -> Option<u8>;
}

/// Default labeler: strict MD-index comparison.
#[derive(Debug, Clone, Copy, Default)]
pub struct MdIndexLabeler;

impl PairLabeler for MdIndexLabeler {
    fn label(&self, left: &Item, right: &Item) -> Option<u8> {
        derive_label(left, right).ok()
    }
}

/// Pair sets per split. In cross-sectional mode, `md_gap_thresholds`
/// records the admissibility cutoff used for each split (train, val,
/// test) so the contract can be re-checked against the output.
#[derive(Debug, Clone, Default)]
pub struct SampledPairs {
    pub train: Vec<PairSample>,
    pub val: Vec<PairSample>,
    pub test: Vec<PairSample>,
    pub md_gap_thresholds: [Option<f64>; 3],
}

impl SampledPairs {
    pub fn for_split(&self, split: Split) -> &[PairSample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Rejection-sampling attempt cap, as a multiple of the requested budget.
const ATTEMPT_FACTOR: usize = 100;
/// Pre-pass sample cap for the cross-sectional gap statistics.
const SIGMA_PREPASS_CAP: usize = 50_000;

fn stage_rng(seed: u64, stage: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage);
    rng
}

/// Partitions subjects into train/val/test by the configured proportions
/// and stamps the assignment onto the dataset. All items of one subject
/// land in the same split.
pub fn assign_subject_splits(ds: &mut Dataset, cfg: &SamplingConfig) -> Result<()> {
    cfg.validate()?;
    let mut subjects: Vec<String> = ds.subjects().into_iter().map(str::to_string).collect();
    if subjects.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 subjects to form splits, found {}",
            subjects.len()
        )));
    }
    let mut rng = stage_rng(cfg.seed, 0);
    subjects.shuffle(&mut rng);

    let (wa, wb, wc) = cfg.split_proportions;
    let total_weight = f64::from(wa) + f64::from(wb) + f64::from(wc);
    let s = subjects.len();
    let mut counts = [
        (f64::from(wa) / total_weight * s as f64).floor() as usize,
        (f64::from(wb) / total_weight * s as f64).floor() as usize,
        (f64::from(wc) / total_weight * s as f64).floor() as usize,
    ];
    // Hand out the rounding remainder by largest fractional share, then
    // make sure no split is left empty.
    let mut fractions: Vec<(usize, f64)> = [wa, wb, wc]
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let exact = f64::from(w) / total_weight * s as f64;
            (i, exact - exact.floor())
        })
        .collect();
    fractions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let mut remainder = s - counts.iter().sum::<usize>();
    for (i, _) in fractions {
        if remainder == 0 {
            break;
        }
        counts[i] += 1;
        remainder -= 1;
    }
    for i in 0..3 {
        while counts[i] == 0 {
            let largest = (0..3).max_by_key(|&j| counts[j]).unwrap();
            counts[largest] -= 1;
            counts[i] += 1;
        }
    }

    let mut assignment = BTreeMap::new();
    let mut cursor = 0usize;
    for (split, count) in Split::ALL.iter().zip(counts) {
        for subject in &subjects[cursor..cursor + count] {
            for item in ds.items_of_subject(subject) {
                assignment.insert(item.id.clone(), *split);
            }
        }
        cursor += count;
    }
    ds.set_splits(assignment)
}

/// Draws the train/val/test pair sets under the configured mode.
/// The dataset must already carry a split assignment.
pub fn sample_pairs(
    ds: &Dataset,
    cfg: &SamplingConfig,
    labeler: &dyn PairLabeler,
) -> Result<SampledPairs> {
    cfg.validate()?;
    if !ds.has_splits() {
        return Err(Error::InvalidConfig(
            "dataset has no split assignment; assign subject splits first".into(),
        ));
    }
    let mut out = SampledPairs::default();
    for (stage, split) in Split::ALL.iter().enumerate() {
        let items = ds.items_in_split(*split);
        let budget = cfg.budget_for(*split);
        if budget > items.len() * items.len() {
            return Err(Error::InvalidConfig(format!(
                "budget {budget} exceeds the {} split's pair space {}",
                split.name(),
                items.len() * items.len()
            )));
        }
        let mut rng = stage_rng(cfg.seed, 1 + stage as u64);
        let pairs = match cfg.mode {
            SamplingMode::Longitudinal => {
                sample_longitudinal_split(&items, budget, labeler, &mut rng)?
            }
            SamplingMode::CrossSectional => {
                let (pairs, threshold) = sample_cross_sectional_split(
                    &items,
                    budget,
                    cfg.threshold_factor,
                    labeler,
                    &mut rng,
                )?;
                out.md_gap_thresholds[stage] = Some(threshold);
                pairs
            }
        };
        match split {
            Split::Train => out.train = pairs,
            Split::Val => out.val = pairs,
            Split::Test => out.test = pairs,
        }
    }
    Ok(out)
}

/// Flag-class of an ordered pair, indexing [HH, HG, GH, GG].
pub fn class_of(left: DiseaseFlag, right: DiseaseFlag) -> usize {
    match (left, right) {
        (DiseaseFlag::Healthy, DiseaseFlag::Healthy) => 0,
        (DiseaseFlag::Healthy, DiseaseFlag::Glaucoma) => 1,
        (DiseaseFlag::Glaucoma, DiseaseFlag::Healthy) => 2,
        (DiseaseFlag::Glaucoma, DiseaseFlag::Glaucoma) => 3,
    }
}

const CLASS_NAMES: [&str; 4] = ["HH", "HG", "GH", "GG"];

/// Class sizes summing to the budget, each within one of budget/4.
/// The remainder goes to HH, then GG, then HG; with the HH surplus
/// leaning to label 1 and the GG surplus to label 0, the overall label
/// balance stays within one as well.
fn class_targets(budget: usize) -> [usize; 4] {
    let base = budget / 4;
    let remainder = budget % 4;
    let mut targets = [base; 4];
    if remainder >= 1 {
        targets[0] += 1; // HH
    }
    if remainder >= 2 {
        targets[3] += 1; // GG
    }
    if remainder >= 3 {
        targets[1] += 1; // HG
    }
    targets
}

fn sample_longitudinal_split(
    items: &[&Item],
    budget: usize,
    labeler: &dyn PairLabeler,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PairSample>> {
    for item in items {
        if item.flag.is_none() {
            return Err(Error::InvalidConfig(format!(
                "longitudinal sampling requires a disease flag on every item; {:?} has none",
                item.id
            )));
        }
    }

    // Per-subject item lists by flag, subjects in sorted order.
    let mut by_subject: BTreeMap<&str, (Vec<&Item>, Vec<&Item>)> = BTreeMap::new();
    for item in items {
        let entry = by_subject.entry(item.subject.as_str()).or_default();
        match item.flag.unwrap() {
            DiseaseFlag::Healthy => entry.0.push(item),
            DiseaseFlag::Glaucoma => entry.1.push(item),
        }
    }
    let subjects: Vec<&str> = by_subject.keys().copied().collect();

    // Subjects able to produce each class.
    let eligible: [Vec<&str>; 4] = [
        subjects.iter().copied().filter(|s| by_subject[s].0.len() >= 2).collect(),
        subjects.iter().copied().filter(|s| !by_subject[s].0.is_empty() && !by_subject[s].1.is_empty()).collect(),
        subjects.iter().copied().filter(|s| !by_subject[s].0.is_empty() && !by_subject[s].1.is_empty()).collect(),
        subjects.iter().copied().filter(|s| by_subject[s].1.len() >= 2).collect(),
    ];

    let targets = class_targets(budget);
    let missing: Vec<&str> = (0..4)
        .filter(|&c| targets[c] > 0 && eligible[c].is_empty())
        .map(|c| CLASS_NAMES[c])
        .collect();
    if !missing.is_empty() {
        return Err(Error::ClassUnsatisfiable(
            missing.join(", "),
            "no subject has the required flag combination".into(),
        ));
    }

    // Within the same-flag classes, balance labels by orientation: the
    // HH surplus slot leans to label 1 and the GG surplus to label 0.
    let label_targets = |class: usize| -> [usize; 2] {
        let t = targets[class];
        match class {
            0 => [t / 2, t - t / 2],
            3 => [t - t / 2, t / 2],
            _ => [t, t],
        }
    };

    let mut pairs = Vec::with_capacity(budget);
    let max_attempts = budget.saturating_mul(ATTEMPT_FACTOR);
    let mut attempts = 0usize;

    for class in 0..4 {
        let mut emitted = [0usize; 2];
        let wanted = label_targets(class);
        let total_target = targets[class];
        let mut count = 0usize;
        while count < total_target {
            if attempts >= max_attempts {
                return Err(Error::BudgetUnreachable {
                    requested: budget,
                    emitted: pairs.len(),
                    attempts,
                    admissible: None,
                });
            }
            attempts += 1;
            let subject = eligible[class][rng.random_range(0..eligible[class].len())];
            let (healthy, glaucoma) = &by_subject[subject];
            let (left, right): (&Item, &Item) = match class {
                0 | 3 => {
                    let pool = if class == 0 { healthy } else { glaucoma };
                    let a = rng.random_range(0..pool.len());
                    let b = rng.random_range(0..pool.len());
                    if a == b {
                        continue;
                    }
                    (pool[a], pool[b])
                }
                1 => (
                    healthy[rng.random_range(0..healthy.len())],
                    glaucoma[rng.random_range(0..glaucoma.len())],
                ),
                _ => (
                    glaucoma[rng.random_range(0..glaucoma.len())],
                    healthy[rng.random_range(0..healthy.len())],
                ),
            };
            let Some(label) = labeler.label(left, right) else {
                continue; // tie: skip and resample
            };
            match class {
                0 | 3 => {
                    // Same-flag pair: swap orientation if this label's
                    // quota is already full.
                    if emitted[label as usize] < wanted[label as usize] {
                        pairs.push(PairSample {
                            left: left.id.clone(),
                            right: right.id.clone(),
                            label,
                        });
                        emitted[label as usize] += 1;
                    } else if emitted[1 - label as usize] < wanted[1 - label as usize] {
                        pairs.push(PairSample {
                            left: right.id.clone(),
                            right: left.id.clone(),
                            label: 1 - label,
                        });
                        emitted[(1 - label) as usize] += 1;
                    } else {
                        continue;
                    }
                }
                _ => pairs.push(PairSample {
                    left: left.id.clone(),
                    right: right.id.clone(),
                    label,
                }),
            }
            count += 1;
        }
    }
    Ok(pairs)
}

fn sample_cross_sectional_split(
    items: &[&Item],
    budget: usize,
    threshold_factor: f64,
    labeler: &dyn PairLabeler,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<PairSample>, f64)> {
    if items.len() < 2 {
        return Err(Error::NoAdmissiblePairs);
    }

    // Pre-pass: estimate the standard deviation of |md_i - md_j| over
    // uniformly drawn cross-subject pairs.
    let target_samples = SIGMA_PREPASS_CAP.min(items.len() * items.len());
    let mut gaps = Vec::with_capacity(target_samples);
    let mut prepass_attempts = 0usize;
    let prepass_cap = target_samples.saturating_mul(ATTEMPT_FACTOR);
    while gaps.len() < target_samples && prepass_attempts < prepass_cap {
        prepass_attempts += 1;
        let a = items[rng.random_range(0..items.len())];
        let b = items[rng.random_range(0..items.len())];
        if a.subject == b.subject {
            continue;
        }
        gaps.push((a.md_index - b.md_index).abs());
    }
    if gaps.is_empty() {
        return Err(Error::NoAdmissiblePairs);
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let variance = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / gaps.len() as f64;
    let sigma = variance.sqrt();
    let threshold = threshold_factor * sigma;

    let wanted = [budget - budget / 2, budget / 2];
    let mut emitted = [0usize; 2];
    let mut pairs = Vec::with_capacity(budget);
    let max_attempts = budget.saturating_mul(ATTEMPT_FACTOR);
    let mut attempts = 0usize;

    while pairs.len() < budget {
        if attempts >= max_attempts {
            let admissible = count_admissible(items, threshold);
            if admissible == 0 {
                return Err(Error::NoAdmissiblePairs);
            }
            return Err(Error::BudgetUnreachable {
                requested: budget,
                emitted: pairs.len(),
                attempts,
                admissible: Some(admissible),
            });
        }
        attempts += 1;
        let left = items[rng.random_range(0..items.len())];
        let right = items[rng.random_range(0..items.len())];
        if left.id == right.id || left.subject == right.subject {
            continue;
        }
        if (left.md_index - right.md_index).abs() <= threshold {
            continue;
        }
        let Some(label) = labeler.label(left, right) else {
            continue;
        };
        if emitted[label as usize] < wanted[label as usize] {
            pairs.push(PairSample {
                left: left.id.clone(),
                right: right.id.clone(),
                label,
            });
            emitted[label as usize] += 1;
        } else if emitted[1 - label as usize] < wanted[1 - label as usize] {
            pairs.push(PairSample {
                left: right.id.clone(),
                right: left.id.clone(),
                label: 1 - label,
            });
            emitted[(1 - label) as usize] += 1;
        }
    }
    Ok((pairs, threshold))
}

/// Exact count of admissible ordered cross-subject pairs, used for error
/// reporting when rejection sampling gives up.
fn count_admissible(items: &[&Item], threshold: f64) -> usize {
    let mut count = 0usize;
    for a in items {
        for b in items {
            if a.id != b.id
                && a.subject != b.subject
                && (a.md_index - b.md_index).abs() > threshold
            {
                count += 1;
            }
        }
    }
    count
}
