//! File-level pipeline stages behind the CLI subcommands and the runnable
//! examples. Every stage writes its outputs under one directory and
//! appends a reproducibility record (resolved config, config hash, seed,
//! version) to `run_log.jsonl` there; re-running a stage from its record
//! reproduces the outputs bit for bit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::config::{
    append_run_record, require_dir, require_file, RunConfig, RunRecord,
};
use crate::data::{
    load_heatmaps, load_mask, load_pairs, save_mask, save_pairs, Dataset, Grid, Item, PairSample,
};
use crate::error::{Error, Result};
use crate::explain::{aggregate_heatmaps, select_top_k, select_top_k_abs, shapley_channels, Aggregated, AttributionReport};
use crate::metrics::{iou, ndcg, pairwise_accuracy, relevance_from_md, EvalReport};
use crate::model::{target_for_label, train, ComparisonModel, PairFeatures, TrainHistory, Variant};
use crate::ranking::{bradley_terry_fit, build_matrix, BtOptions, ComparisonMatrix, RankList};
use crate::sampling::{assign_subject_splits, sample_pairs, MdIndexLabeler, SampledPairs};
use crate::synth::{generate, MajorityLabeler};

fn record_run(out_dir: &Path, subcommand: &str, config: &RunConfig, outputs: &[PathBuf]) -> Result<()> {
    let record = RunRecord {
        subcommand: subcommand.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        config: config.clone(),
        args: std::env::args().collect(),
        outputs: outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    append_run_record(out_dir, &record)
}

fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let json =
        serde_json::to_string(value).map_err(|e| Error::Checkpoint(format!("serialize: {e}")))?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "{json}").map_err(|e| Error::io(path, e))
}

/// Output paths of the synth stage.
#[derive(Debug, Clone)]
pub struct SynthOutputs {
    pub items: PathBuf,
    pub criteria: PathBuf,
    pub meta: PathBuf,
}

/// Generates a synthetic dataset and writes the items, the hidden
/// per-item criteria, and the generator metadata.
pub fn run_synth(cfg: &RunConfig, out_dir: &Path) -> Result<SynthOutputs> {
    cfg.validate()?;
    ensure_out_dir(out_dir)?;
    let (ds, truth) = generate(&cfg.synth)?;
    let outputs = SynthOutputs {
        items: out_dir.join("items.jsonl"),
        criteria: out_dir.join("criteria.jsonl"),
        meta: out_dir.join("synth_meta.json"),
    };
    ds.save(&outputs.items)?;
    save_criteria(&outputs.criteria, &truth.criteria)?;
    write_json(
        &outputs.meta,
        &serde_json::json!({
            "weights": truth.weights,
            "rotation": truth.rotation,
            "flag_threshold": truth.flag_threshold,
            "label_rule": cfg.synth.label_rule,
        }),
    )?;
    info!(
        "generated {} items over {} subjects (d = {})",
        ds.len(),
        cfg.synth.subjects,
        ds.dim()
    );
    let mut resolved = cfg.clone();
    resolved.paths.items = Some(outputs.items.clone());
    resolved.paths.criteria = Some(outputs.criteria.clone());
    record_run(
        out_dir,
        "synth",
        &resolved,
        &[outputs.items.clone(), outputs.criteria.clone(), outputs.meta.clone()],
    )?;
    Ok(outputs)
}

fn save_criteria(path: &Path, criteria: &BTreeMap<String, Vec<f64>>) -> Result<()> {
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for (id, z) in criteria {
        let line = serde_json::to_string(&serde_json::json!({"id": id, "z": z}))
            .map_err(|e| Error::Checkpoint(format!("serialize criteria: {e}")))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Reads a criteria file written by the synth stage.
pub fn load_criteria(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut criteria = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        #[derive(serde::Deserialize)]
        struct Row {
            id: String,
            z: Vec<f64>,
        }
        let row: Row = serde_json::from_str(line).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        criteria.insert(row.id, row.z);
    }
    Ok(criteria)
}

/// Output paths of the sample-pairs stage.
#[derive(Debug, Clone)]
pub struct SampleOutputs {
    pub train: PathBuf,
    pub val: PathBuf,
    pub test: PathBuf,
}

/// Assigns subject splits and draws the three pair sets. When a criteria
/// file is given, labels come from the per-criterion majority vote
/// instead of the MD-index.
pub fn run_sample_pairs(
    cfg: &RunConfig,
    items_path: &Path,
    criteria_path: Option<&Path>,
    out_dir: &Path,
) -> Result<SampleOutputs> {
    cfg.validate()?;
    require_file(items_path)?;
    if let Some(p) = criteria_path {
        require_file(p)?;
    }
    ensure_out_dir(out_dir)?;
    let mut ds = Dataset::load(items_path)?;
    assign_subject_splits(&mut ds, &cfg.sampling)?;

    let criteria = criteria_path.map(load_criteria).transpose()?;
    let sampled: SampledPairs = match &criteria {
        Some(map) => {
            let labeler = MajorityLabeler::new(map);
            sample_pairs(&ds, &cfg.sampling, &labeler)?
        }
        None => sample_pairs(&ds, &cfg.sampling, &MdIndexLabeler)?,
    };

    let outputs = SampleOutputs {
        train: out_dir.join("pairs_train.jsonl"),
        val: out_dir.join("pairs_val.jsonl"),
        test: out_dir.join("pairs_test.jsonl"),
    };
    save_pairs(&outputs.train, &sampled.train)?;
    save_pairs(&outputs.val, &sampled.val)?;
    save_pairs(&outputs.test, &sampled.test)?;
    info!(
        "sampled {} / {} / {} pairs",
        sampled.train.len(),
        sampled.val.len(),
        sampled.test.len()
    );
    let mut resolved = cfg.clone();
    resolved.paths.items = Some(items_path.to_path_buf());
    resolved.paths.criteria = criteria_path.map(Path::to_path_buf);
    resolved.paths.train_pairs = Some(outputs.train.clone());
    resolved.paths.val_pairs = Some(outputs.val.clone());
    resolved.paths.test_pairs = Some(outputs.test.clone());
    record_run(
        out_dir,
        "sample-pairs",
        &resolved,
        &[outputs.train.clone(), outputs.val.clone(), outputs.test.clone()],
    )?;
    Ok(outputs)
}

/// Resolves pair ids against the dataset, pairing features with the
/// probability target for the "left less severe" event.
pub fn resolve_pairs<'a>(ds: &'a Dataset, pairs: &[PairSample]) -> Result<Vec<PairFeatures<'a>>> {
    pairs
        .iter()
        .map(|p| {
            let left = ds
                .get(&p.left)
                .ok_or_else(|| Error::UnknownItem(p.left.clone()))?;
            let right = ds
                .get(&p.right)
                .ok_or_else(|| Error::UnknownItem(p.right.clone()))?;
            Ok(PairFeatures {
                left: &left.features,
                right: &right.features,
                target: target_for_label(p.label),
            })
        })
        .collect()
}

/// Output paths of the train stage.
#[derive(Debug, Clone)]
pub struct TrainOutputs {
    pub model: PathBuf,
    pub history: PathBuf,
}

/// Trains a comparison model and keeps the snapshot with the best
/// validation pairwise accuracy.
pub fn run_train(
    cfg: &RunConfig,
    items_path: &Path,
    train_pairs_path: &Path,
    val_pairs_path: &Path,
    out_dir: &Path,
) -> Result<(TrainOutputs, TrainHistory)> {
    cfg.validate()?;
    require_file(items_path)?;
    require_file(train_pairs_path)?;
    require_file(val_pairs_path)?;
    ensure_out_dir(out_dir)?;

    let ds = Dataset::load(items_path)?;
    let train_pairs = load_pairs(train_pairs_path)?;
    let val_pairs = load_pairs(val_pairs_path)?;
    let train_set = resolve_pairs(&ds, &train_pairs)?;
    let val_set = resolve_pairs(&ds, &val_pairs)?;

    let model = ComparisonModel::new(
        cfg.model.variant,
        ds.dim(),
        cfg.model.hidden_dim,
        cfg.model.n,
        cfg.model.seed,
    )?;
    let (best, history) = train(&model, &train_set, &val_set, &cfg.train)?;
    if history.diverged {
        warn!("training diverged; keeping the best snapshot before divergence");
    }
    info!(
        "best validation accuracy {:.4} at epoch {}",
        history.best_val_accuracy, history.best_epoch
    );

    let outputs = TrainOutputs {
        model: out_dir.join("model.json"),
        history: out_dir.join("history.json"),
    };
    best.save(&outputs.model)?;
    write_json(&outputs.history, &history)?;
    let mut resolved = cfg.clone();
    resolved.paths.items = Some(items_path.to_path_buf());
    resolved.paths.train_pairs = Some(train_pairs_path.to_path_buf());
    resolved.paths.val_pairs = Some(val_pairs_path.to_path_buf());
    resolved.paths.model = Some(outputs.model.clone());
    record_run(
        out_dir,
        "train",
        &resolved,
        &[outputs.model.clone(), outputs.history.clone()],
    )?;
    Ok((outputs, history))
}

/// Per-subject rank lists for every subject with at least two items among
/// the given ids.
fn per_subject_ranklists(
    model: &ComparisonModel,
    ds: &Dataset,
    ids: &[String],
    opts: &BtOptions,
) -> Result<BTreeMap<String, RankList>> {
    let mut by_subject: BTreeMap<&str, Vec<&Item>> = BTreeMap::new();
    for id in ids {
        let item = ds.get(id).ok_or_else(|| Error::UnknownItem(id.clone()))?;
        by_subject.entry(item.subject.as_str()).or_default().push(item);
    }
    let mut lists = BTreeMap::new();
    for (subject, items) in by_subject {
        if items.len() < 2 {
            continue;
        }
        let entries: Vec<(&str, &[f64])> = items
            .iter()
            .map(|i| (i.id.as_str(), i.features.as_slice()))
            .collect();
        let matrix = build_matrix(model, &entries)?;
        let list = bradley_terry_fit(&matrix, opts)?;
        if !list.converged {
            warn!("bradley-terry fit did not converge for subject {subject}");
        }
        lists.insert(subject.to_string(), list);
    }
    Ok(lists)
}

/// Evaluates a model: pairwise accuracy on the pair file, per-subject
/// nDCG over the items appearing in those pairs, and optionally m-IoU
/// when both heatmaps and ground-truth masks are available.
pub fn run_eval(
    cfg: &RunConfig,
    model_path: &Path,
    items_path: &Path,
    pairs_path: &Path,
    heatmaps_dir: Option<&Path>,
    masks_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<(EvalReport, PathBuf)> {
    cfg.validate()?;
    require_file(model_path)?;
    require_file(items_path)?;
    require_file(pairs_path)?;
    if let Some(d) = heatmaps_dir {
        require_dir(d)?;
    }
    if let Some(d) = masks_dir {
        require_dir(d)?;
    }
    ensure_out_dir(out_dir)?;

    let model = ComparisonModel::load(model_path)?;
    let ds = Dataset::load(items_path)?;
    let pairs = load_pairs(pairs_path)?;
    let resolved_pairs = resolve_pairs(&ds, &pairs)?;

    let mut preds = Vec::with_capacity(resolved_pairs.len());
    let mut targets = Vec::with_capacity(resolved_pairs.len());
    for pair in &resolved_pairs {
        preds.push(model.forward(pair.left, pair.right)?);
        targets.push(if pair.target > 0.5 { 1u8 } else { 0u8 });
    }
    let accuracy = pairwise_accuracy(&preds, &targets)?;

    // Rank lists per subject over the items named by the pair file.
    let mut ids: Vec<String> = pairs
        .iter()
        .flat_map(|p| [p.left.clone(), p.right.clone()])
        .collect();
    ids.sort();
    ids.dedup();
    let bt_opts = BtOptions {
        tol: cfg.rank.tol,
        max_iter: cfg.rank.max_iter,
        binarize: cfg.rank.binarize,
    };
    let lists = per_subject_ranklists(&model, &ds, &ids, &bt_opts)?;
    let mut ndcg_per_subject = BTreeMap::new();
    for (subject, list) in &lists {
        let items: Vec<(&str, f64)> = list
            .ids
            .iter()
            .map(|id| (id.as_str(), ds.get(id).unwrap().md_index))
            .collect();
        let relevance = relevance_from_md(&items);
        ndcg_per_subject.insert(subject.clone(), ndcg(list, &relevance, cfg.eval.gain)?);
    }
    let mean_ndcg = if ndcg_per_subject.is_empty() {
        None
    } else {
        Some(ndcg_per_subject.values().sum::<f64>() / ndcg_per_subject.len() as f64)
    };

    let m_iou = match (heatmaps_dir, masks_dir) {
        (Some(heat), Some(masks)) => evaluate_m_iou(cfg, &model, &ds, &pairs, heat, masks)?,
        _ => None,
    };

    let report = EvalReport {
        pairwise_accuracy: accuracy,
        ndcg_per_subject,
        mean_ndcg,
        m_iou,
    };
    let report_path = out_dir.join("eval_report.json");
    write_json(&report_path, &report)?;
    let mut resolved = cfg.clone();
    resolved.paths.items = Some(items_path.to_path_buf());
    resolved.paths.test_pairs = Some(pairs_path.to_path_buf());
    resolved.paths.model = Some(model_path.to_path_buf());
    resolved.paths.heatmaps = heatmaps_dir.map(Path::to_path_buf);
    resolved.paths.masks = masks_dir.map(Path::to_path_buf);
    record_run(out_dir, "eval", &resolved, &[report_path.clone()])?;
    Ok((report, report_path))
}

/// Mean IoU between aggregated explanation masks and ground-truth masks
/// over every pair side that has both files.
fn evaluate_m_iou(
    cfg: &RunConfig,
    model: &ComparisonModel,
    ds: &Dataset,
    pairs: &[PairSample],
    heatmaps_dir: &Path,
    masks_dir: &Path,
) -> Result<Option<f64>> {
    if model.variant != Variant::NHidden {
        warn!("m-IoU needs the n-hidden variant; skipping");
        return Ok(None);
    }
    let k = cfg.explain.k.min(model.n());
    let mut scores = Vec::new();
    for pair in pairs {
        let left = ds
            .get(&pair.left)
            .ok_or_else(|| Error::UnknownItem(pair.left.clone()))?;
        let right = ds
            .get(&pair.right)
            .ok_or_else(|| Error::UnknownItem(pair.right.clone()))?;
        let shap = shapley_channels(model, &left.features, &right.features)?;
        let top = if cfg.explain.use_absolute {
            select_top_k_abs(&shap, k)?
        } else {
            select_top_k(&shap, k)?
        };
        for item in [left, right] {
            let mask_path = masks_dir.join(format!("{}.txt", item.id));
            if !mask_path.is_file() {
                continue;
            }
            let heat_path = heatmaps_dir.join(format!("{}.txt", item.id));
            require_file(&heat_path)?;
            let maps = load_heatmaps(&heat_path)?;
            let aggregated = match aggregate_heatmaps(&maps, &shap, &top) {
                Ok(a) => a,
                Err(Error::NoPositiveContribution) => continue,
                Err(e) => return Err(e),
            };
            let truth = load_mask(&mask_path)?;
            scores.push(iou(&aggregated.mask, &truth)?);
        }
    }
    if scores.is_empty() {
        return Ok(None);
    }
    Ok(Some(scores.iter().sum::<f64>() / scores.len() as f64))
}

/// Output of the rank stage.
#[derive(Debug, Clone)]
pub enum RankOutputs {
    Global {
        matrix: PathBuf,
        ranklist: PathBuf,
        list: RankList,
    },
    PerSubject {
        ranklists: PathBuf,
        lists: BTreeMap<String, RankList>,
    },
}

/// Builds the comparison matrix over the item file and reconstructs rank
/// lists, either one global list or one per subject.
pub fn run_rank(
    cfg: &RunConfig,
    model_path: &Path,
    items_path: &Path,
    per_subject: bool,
    out_dir: &Path,
) -> Result<RankOutputs> {
    cfg.validate()?;
    require_file(model_path)?;
    require_file(items_path)?;
    ensure_out_dir(out_dir)?;
    let model = ComparisonModel::load(model_path)?;
    let ds = Dataset::load(items_path)?;
    let bt_opts = BtOptions {
        tol: cfg.rank.tol,
        max_iter: cfg.rank.max_iter,
        binarize: cfg.rank.binarize,
    };

    let mut resolved = cfg.clone();
    resolved.paths.items = Some(items_path.to_path_buf());
    resolved.paths.model = Some(model_path.to_path_buf());
    resolved.rank.per_subject = per_subject;

    if per_subject {
        let ids: Vec<String> = ds.items().iter().map(|i| i.id.clone()).collect();
        let lists = per_subject_ranklists(&model, &ds, &ids, &bt_opts)?;
        let path = out_dir.join("ranklists_per_subject.json");
        write_json(&path, &lists)?;
        record_run(out_dir, "rank", &resolved, &[path.clone()])?;
        Ok(RankOutputs::PerSubject { ranklists: path, lists })
    } else {
        let entries: Vec<(&str, &[f64])> = ds
            .items()
            .iter()
            .map(|i| (i.id.as_str(), i.features.as_slice()))
            .collect();
        let matrix: ComparisonMatrix = build_matrix(&model, &entries)?;
        let list = bradley_terry_fit(&matrix, &bt_opts)?;
        if !list.converged {
            warn!("bradley-terry fit did not converge after {} iterations", list.iterations);
        }
        let matrix_path = out_dir.join("matrix.json");
        let list_path = out_dir.join("ranklist.json");
        write_json(&matrix_path, &matrix)?;
        write_json(&list_path, &list)?;
        record_run(out_dir, "rank", &resolved, &[matrix_path.clone(), list_path.clone()])?;
        Ok(RankOutputs::Global {
            matrix: matrix_path,
            ranklist: list_path,
            list,
        })
    }
}

/// Output paths of the explain stage.
#[derive(Debug, Clone)]
pub struct ExplainOutputs {
    pub report: PathBuf,
    pub grids: Vec<PathBuf>,
}

/// Attributes one pair's decision to its comparison channels and
/// aggregates the selected channels' heatmaps for both items.
pub fn run_explain(
    cfg: &RunConfig,
    model_path: &Path,
    items_path: &Path,
    left_id: &str,
    right_id: &str,
    heatmaps_dir: &Path,
    masks_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<(AttributionReport, ExplainOutputs)> {
    cfg.validate()?;
    require_file(model_path)?;
    require_file(items_path)?;
    require_dir(heatmaps_dir)?;
    if let Some(d) = masks_dir {
        require_dir(d)?;
    }
    ensure_out_dir(out_dir)?;

    let model = ComparisonModel::load(model_path)?;
    let ds = Dataset::load(items_path)?;
    let left = ds
        .get(left_id)
        .ok_or_else(|| Error::UnknownItem(left_id.to_string()))?;
    let right = ds
        .get(right_id)
        .ok_or_else(|| Error::UnknownItem(right_id.to_string()))?;

    let shapley = shapley_channels(&model, &left.features, &right.features)?;
    let k = cfg.explain.k;
    if k > model.n() {
        return Err(Error::InvalidConfig(format!(
            "explain.k = {k} exceeds the model's {} channels",
            model.n()
        )));
    }
    let top_k = if cfg.explain.use_absolute {
        select_top_k_abs(&shapley, k)?
    } else {
        select_top_k(&shapley, k)?
    };

    let mut sides: Vec<(&Item, Option<Aggregated>, Option<f64>)> = Vec::new();
    for item in [left, right] {
        let heat_path = heatmaps_dir.join(format!("{}.txt", item.id));
        require_file(&heat_path)?;
        let maps = load_heatmaps(&heat_path)?;
        let aggregated = aggregate_heatmaps(&maps, &shapley, &top_k)?;
        let iou_score = match masks_dir {
            Some(dir) => {
                let mask_path = dir.join(format!("{}.txt", item.id));
                if mask_path.is_file() {
                    Some(iou(&aggregated.mask, &load_mask(&mask_path)?)?)
                } else {
                    None
                }
            }
            None => None,
        };
        sides.push((item, Some(aggregated), iou_score));
    }

    let (_, right_agg, iou_right) = sides.pop().unwrap();
    let (_, left_agg, iou_left) = sides.pop().unwrap();
    let label = crate::data::derive_label(left, right).ok();
    let report = AttributionReport {
        pair: PairSample {
            left: left_id.to_string(),
            right: right_id.to_string(),
            label: label.unwrap_or(0),
        },
        shapley,
        top_k,
        aggregated_left: left_agg,
        aggregated_right: right_agg,
        iou_left,
        iou_right,
    };

    let stem = format!("attribution_{left_id}_{right_id}");
    let report_path = out_dir.join(format!("{stem}.json"));
    write_json(&report_path, &report)?;
    let mut grid_paths = Vec::new();
    for (side, agg) in [("left", &report.aggregated_left), ("right", &report.aggregated_right)] {
        if let Some(agg) = agg {
            let grid_path = out_dir.join(format!("{stem}_{side}.txt"));
            crate::data::save_heatmaps(&grid_path, std::slice::from_ref(&agg.grid))?;
            let mask_path = out_dir.join(format!("{stem}_{side}_mask.txt"));
            save_mask(&mask_path, &agg.mask)?;
            grid_paths.push(grid_path);
            grid_paths.push(mask_path);
        }
    }
    let mut resolved = cfg.clone();
    resolved.paths.items = Some(items_path.to_path_buf());
    resolved.paths.model = Some(model_path.to_path_buf());
    resolved.paths.heatmaps = Some(heatmaps_dir.to_path_buf());
    resolved.paths.masks = masks_dir.map(Path::to_path_buf);
    let mut outputs = vec![report_path.clone()];
    outputs.extend(grid_paths.iter().cloned());
    record_run(out_dir, "explain", &resolved, &outputs)?;
    Ok((
        report,
        ExplainOutputs {
            report: report_path,
            grids: grid_paths,
        },
    ))
}

/// Re-runs a recorded stage into a new output directory using the
/// record's resolved config and paths. Outputs are bit-identical to the
/// original run as long as the recorded input files are unchanged.
pub fn rerun_from_record(record: &RunRecord, out_dir: &Path) -> Result<()> {
    let cfg = &record.config;
    let paths = &cfg.paths;
    let need = |p: &Option<PathBuf>, what: &str| -> Result<PathBuf> {
        p.clone()
            .ok_or_else(|| Error::InvalidConfig(format!("record missing {what} path")))
    };
    match record.subcommand.as_str() {
        "synth" => {
            run_synth(cfg, out_dir)?;
        }
        "sample-pairs" => {
            run_sample_pairs(cfg, &need(&paths.items, "items")?, paths.criteria.as_deref(), out_dir)?;
        }
        "train" => {
            run_train(
                cfg,
                &need(&paths.items, "items")?,
                &need(&paths.train_pairs, "train pairs")?,
                &need(&paths.val_pairs, "val pairs")?,
                out_dir,
            )?;
        }
        "eval" => {
            run_eval(
                cfg,
                &need(&paths.model, "model")?,
                &need(&paths.items, "items")?,
                &need(&paths.test_pairs, "pairs")?,
                paths.heatmaps.as_deref(),
                paths.masks.as_deref(),
                out_dir,
            )?;
        }
        "rank" => {
            run_rank(
                cfg,
                &need(&paths.model, "model")?,
                &need(&paths.items, "items")?,
                cfg.rank.per_subject,
                out_dir,
            )?;
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "cannot re-run subcommand {other:?} from a record"
            )));
        }
    }
    Ok(())
}

/// Writes per-item heatmap files derived from a mask direction, used by
/// the examples and tests to fabricate plausible explanation inputs.
pub fn write_synthetic_heatmaps(
    dir: &Path,
    items: &[&Item],
    channels: usize,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<()> {
    use rand::Rng;
    use rand::SeedableRng;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for item in items {
        let grids: Vec<Grid> = (0..channels)
            .map(|_| {
                let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0.0..1.0)).collect();
                Grid::new(rows, cols, data)
            })
            .collect::<Result<_>>()?;
        crate::data::save_heatmaps(dir.join(format!("{}.txt", item.id)), &grids)?;
    }
    Ok(())
}
