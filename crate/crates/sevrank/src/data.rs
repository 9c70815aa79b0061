//! Domain types and file ingestion: items with severity indicators, pair
//! samples, heatmaps, and binary masks.
//!
//! The on-disk item format is line-delimited JSON, one object per item with
//! keys `id`, `subject`, `md_index`, `flag` ("H"/"G", may be absent) and
//! `features` (array of reals). Pair files are line-delimited JSON objects
//! with keys `left`, `right`, `label`. Heatmap and mask files are plain text:
//! a header line `H W n` followed by `n` row-major `H x W` blocks.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disease status of one image, serialized as "H" / "G".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiseaseFlag {
    #[serde(rename = "H")]
    Healthy,
    #[serde(rename = "G")]
    Glaucoma,
}

impl fmt::Display for DiseaseFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiseaseFlag::Healthy => write!(f, "H"),
            DiseaseFlag::Glaucoma => write!(f, "G"),
        }
    }
}

/// One sample: identifier, subject, MD-index severity indicator (decibels,
/// lower = more severe), optional disease flag, and a feature embedding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub subject: String,
    pub md_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<DiseaseFlag>,
    pub features: Vec<f64>,
}

/// Dataset split membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// An ordered pair of item ids with a binary comparison label.
///
/// `label = 0` means the left item is less severe than the right one,
/// `label = 1` means the left item is more severe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSample {
    pub left: String,
    pub right: String,
    pub label: u8,
}

/// Immutable collection of items plus an optional split assignment.
///
/// Items keep their file order; lookups go through an id index. The split
/// map is empty right after loading and is filled by the sampling stage.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    items: Vec<Item>,
    index: BTreeMap<String, usize>,
    splits: BTreeMap<String, Split>,
}

impl Dataset {
    /// Builds a dataset from items, enforcing the invariants: unique ids,
    /// one feature dimension throughout, finite md_index.
    pub fn new(items: Vec<Item>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = items[0].features.len();
        let mut index = BTreeMap::new();
        for (i, item) in items.iter().enumerate() {
            if item.features.len() != dim {
                return Err(Error::InconsistentDimension {
                    record: i + 1,
                    expected: dim,
                    found: item.features.len(),
                });
            }
            if !item.md_index.is_finite() {
                return Err(Error::NonFinite(format!("md_index of item {:?}", item.id)));
            }
            if index.insert(item.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(item.id.clone()));
            }
        }
        Ok(Dataset {
            items,
            index,
            splits: BTreeMap::new(),
        })
    }

    /// Loads a dataset from a line-delimited JSON item file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut items = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let item: Item = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            items.push(item);
        }
        Self::new(items)
    }

    /// Writes the items back out, one JSON object per line.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for item in &self.items {
            let line = serde_json::to_string(item)
                .map_err(|e| Error::Checkpoint(format!("serialize item: {e}")))?;
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Feature dimension, identical across all items.
    pub fn dim(&self) -> usize {
        self.items.first().map_or(0, |i| i.features.len())
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&Item> {
        self.index.get(id).map(|&i| &self.items[i])
    }

    /// Distinct subject ids in lexicographic order.
    pub fn subjects(&self) -> Vec<&str> {
        let mut subjects: Vec<&str> = self.items.iter().map(|i| i.subject.as_str()).collect();
        subjects.sort_unstable();
        subjects.dedup();
        subjects
    }

    pub fn items_of_subject(&self, subject: &str) -> Vec<&Item> {
        self.items.iter().filter(|i| i.subject == subject).collect()
    }

    /// Replaces the split assignment. Every item must be covered.
    pub fn set_splits(&mut self, splits: BTreeMap<String, Split>) -> Result<()> {
        for item in &self.items {
            if !splits.contains_key(&item.id) {
                return Err(Error::InvalidConfig(format!(
                    "item {:?} has no split assignment",
                    item.id
                )));
            }
        }
        for id in splits.keys() {
            if !self.index.contains_key(id) {
                return Err(Error::UnknownItem(id.clone()));
            }
        }
        self.splits = splits;
        Ok(())
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        self.splits.get(id).copied()
    }

    pub fn has_splits(&self) -> bool {
        !self.splits.is_empty()
    }

    pub fn items_in_split(&self, split: Split) -> Vec<&Item> {
        self.items
            .iter()
            .filter(|i| self.splits.get(&i.id) == Some(&split))
            .collect()
    }
}

/// Compares two items by MD-index: 0 if the left one is less severe
/// (higher MD), 1 if it is more severe (lower MD). Exact ties are
/// undefined and must be excluded by the caller.
pub fn derive_label(left: &Item, right: &Item) -> Result<u8> {
    if !left.md_index.is_finite() || !right.md_index.is_finite() {
        return Err(Error::NonFinite("md_index".into()));
    }
    if left.md_index > right.md_index {
        Ok(0)
    } else if left.md_index < right.md_index {
        Ok(1)
    } else {
        Err(Error::UndefinedComparison(left.md_index))
    }
}

/// Loads a line-delimited JSON pair file.
pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<PairSample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: PairSample = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        if pair.label > 1 {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("label must be 0 or 1, got {}", pair.label),
            });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Writes pairs, one JSON object per line.
pub fn save_pairs(path: impl AsRef<Path>, pairs: &[PairSample]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for pair in pairs {
        let line = serde_json::to_string(pair)
            .map_err(|e| Error::Checkpoint(format!("serialize pair: {e}")))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Dense row-major real-valued grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Grid { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One saliency heatmap channel for an item, values in [0, 1].
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub item_id: String,
    pub channel_index: usize,
    pub grid: Grid,
}

/// Binary region-of-interest mask for an item.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub item_id: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(item_id: impl Into<String>, rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Mask {
            item_id: item_id.into(),
            rows,
            cols,
            data,
        })
    }

    pub fn count_on(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

fn parse_grid_header(path: &Path, line: &str) -> Result<(usize, usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut next = |name: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::Malformed {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("header missing {name}"),
            })?
            .parse::<usize>()
            .map_err(|e| Error::Malformed {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("bad {name}: {e}"),
            })
    };
    let rows = next("H")?;
    let cols = next("W")?;
    let channels = next("n")?;
    Ok((rows, cols, channels))
}

fn read_grid_blocks(path: &Path) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Malformed {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let (rows, cols, channels) = parse_grid_header(path, header)?;
    let mut values = Vec::with_capacity(rows * cols * channels);
    for (lineno, line) in lines.enumerate() {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|e| Error::Malformed {
                path: path.to_path_buf(),
                line: lineno + 2,
                msg: format!("bad value {tok:?}: {e}"),
            })?;
            values.push(v);
        }
    }
    let expected = rows * cols * channels;
    if values.len() != expected {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected {expected} values, found {}", values.len()),
        });
    }
    let blocks = values
        .chunks(rows * cols)
        .map(|c| c.to_vec())
        .collect::<Vec<_>>();
    Ok((rows, cols, blocks))
}

/// Reads a heatmap file (`H W n` header, then n blocks) into per-channel
/// heatmaps. The item id is taken from the file stem.
pub fn load_heatmaps(path: impl AsRef<Path>) -> Result<Vec<Heatmap>> {
    let path = path.as_ref();
    let item_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (rows, cols, blocks) = read_grid_blocks(path)?;
    blocks
        .into_iter()
        .enumerate()
        .map(|(c, data)| {
            if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("heatmap value {bad} outside [0, 1]"),
                });
            }
            Ok(Heatmap {
                item_id: item_id.clone(),
                channel_index: c,
                grid: Grid::new(rows, cols, data)?,
            })
        })
        .collect()
}

/// Writes per-channel heatmap grids for one item.
pub fn save_heatmaps(path: impl AsRef<Path>, grids: &[Grid]) -> Result<()> {
    let path = path.as_ref();
    let first = grids.first().ok_or(Error::EmptyDataset)?;
    let mut out = String::new();
    out.push_str(&format!("{} {} {}\n", first.rows, first.cols, grids.len()));
    for grid in grids {
        if grid.rows != first.rows || grid.cols != first.cols {
            return Err(Error::DimensionMismatch {
                expected: first.rows * first.cols,
                found: grid.rows * grid.cols,
            });
        }
        for r in 0..grid.rows {
            let row: Vec<String> = (0..grid.cols).map(|c| format!("{}", grid.at(r, c))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a single-block mask file with {0,1} entries.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let item_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (rows, cols, blocks) = read_grid_blocks(path)?;
    if blocks.len() != 1 {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("mask file must hold exactly one block, found {}", blocks.len()),
        });
    }
    let data = blocks[0]
        .iter()
        .map(|&v| {
            if v == 0.0 {
                Ok(false)
            } else if v == 1.0 {
                Ok(true)
            } else {
                Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("mask value {v} is not 0 or 1"),
                })
            }
        })
        .collect::<Result<Vec<bool>>>()?;
    Mask::new(item_id, rows, cols, data)
}

/// Writes a mask as a single `H W 1` block of 0/1 integers.
pub fn save_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("{} {} 1\n", mask.rows, mask.cols));
    for r in 0..mask.rows {
        let row: Vec<&str> = (0..mask.cols)
            .map(|c| if mask.data[r * mask.cols + c] { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
