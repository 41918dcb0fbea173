//! Labeled state-action datasets: oracle rollouts, CSV persistence and
//! normalization bounds.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, Policy};
use crate::rng::{derive_seed, task_rng};
use crate::tree::NormalizationBounds;
use crate::{NldtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationMode {
    Regular,
    Balanced,
}

/// Provenance sidecar of a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub env: Option<String>,
    pub oracle: Option<String>,
    pub seed: Option<u64>,
    pub n_total: usize,
    pub mode: Option<GenerationMode>,
    pub class_counts: Vec<u64>,
    /// Set when balanced generation ran out of episodes before filling
    /// every class.
    #[serde(default)]
    pub budget_exhausted: bool,
}

/// Rows of raw states with discrete action labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    d: usize,
    n_actions: usize,
    states: Vec<f64>,
    actions: Vec<usize>,
    pub meta: DatasetMeta,
}

impl LabeledDataset {
    pub fn new(rows: Vec<Vec<f64>>, actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(NldtError::Dataset("empty dataset".into()));
        }
        if rows.len() != actions.len() {
            return Err(NldtError::Dataset(format!("{} rows but {} labels", rows.len(), actions.len())));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(NldtError::Dataset("rows have no features".into()));
        }
        let mut states = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(NldtError::Dataset(format!("row {i} has {} features, expected {d}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(NldtError::Dataset(format!("row {i} is not finite")));
            }
            states.extend_from_slice(row);
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= n_actions) {
            return Err(NldtError::Dataset(format!("action label {a} outside 0..{n_actions}")));
        }
        let mut ds = Self { d, n_actions, states, actions, meta: DatasetMeta::default() };
        ds.meta.n_total = ds.len();
        ds.meta.class_counts = ds.class_counts();
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.states[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.d)
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0; self.n_actions];
        for &a in &self.actions {
            counts[a] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices.iter().map(|&i| self.row(i).to_vec()).collect();
        let actions = indices.iter().map(|&i| self.actions[i]).collect();
        let mut ds = Self::new(rows, actions, self.n_actions)?;
        ds.meta.env = self.meta.env.clone();
        ds.meta.oracle = self.meta.oracle.clone();
        Ok(ds)
    }
}

/// Records every oracle (state, action) pair over consecutive episodes until
/// `n_total` pairs exist. Episode `k` is reset with a seed derived from
/// `seed` and `k`.
pub fn generate_regular(
    env: &mut dyn Environment,
    oracle: &dyn Policy,
    n_total: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_total == 0 {
        return Err(NldtError::Config("n_total must be at least 1".into()));
    }
    let n_actions = env.n_actions();
    let mut rows = Vec::with_capacity(n_total);
    let mut actions = Vec::with_capacity(n_total);
    let mut episode = 0u64;
    'outer: loop {
        let mut state = env.reset(derive_seed(seed, episode));
        episode += 1;
        loop {
            let a = oracle.act(&state)?;
            crate::envs::check_action(a, n_actions)?;
            rows.push(state.clone());
            actions.push(a);
            if rows.len() == n_total {
                break 'outer;
            }
            let step = env.step(a)?;
            if step.done {
                break;
            }
            state = step.state;
        }
    }
    let mut ds = LabeledDataset::new(rows, actions, n_actions)?;
    ds.meta.seed = Some(seed);
    ds.meta.env = Some(env.kind().name().into());
    ds.meta.mode = Some(GenerationMode::Regular);
    Ok(ds)
}

/// Like [`generate_regular`] but drops pairs whose action already holds
/// `ceil(n_total / n_actions)` rows. Gives up after roughly ten times the
/// episodes a full regular collection would need; the returned dataset
/// then has `meta.budget_exhausted` set.
pub fn generate_balanced(
    env: &mut dyn Environment,
    oracle: &dyn Policy,
    n_total: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let n_actions = env.n_actions();
    if n_total < n_actions {
        return Err(NldtError::Config(format!("n_total {n_total} is below the action count {n_actions}")));
    }
    let cap = n_total.div_ceil(n_actions);
    let mut counts = vec![0usize; n_actions];
    let mut rows = Vec::with_capacity(n_total);
    let mut actions = Vec::with_capacity(n_total);
    let mut steps_seen = 0usize;
    let mut episode = 0u64;
    let mut exhausted = false;
    'outer: loop {
        if episode > 0 {
            let mean_len = steps_seen as f64 / episode as f64;
            let budget = (10.0 * n_total as f64 / mean_len.max(1.0)).ceil().max(10.0) as u64;
            if episode >= budget {
                exhausted = true;
                break;
            }
        }
        let mut state = env.reset(derive_seed(seed, episode));
        episode += 1;
        loop {
            let a = oracle.act(&state)?;
            crate::envs::check_action(a, n_actions)?;
            steps_seen += 1;
            if counts[a] < cap {
                counts[a] += 1;
                rows.push(state.clone());
                actions.push(a);
                if rows.len() == n_total {
                    break 'outer;
                }
            }
            let step = env.step(a)?;
            if step.done {
                break;
            }
            state = step.state;
        }
    }
    if rows.is_empty() {
        return Err(NldtError::Dataset("balanced generation collected nothing".into()));
    }
    let mut ds = LabeledDataset::new(rows, actions, n_actions)?;
    ds.meta.seed = Some(seed);
    ds.meta.env = Some(env.kind().name().into());
    ds.meta.mode = Some(GenerationMode::Balanced);
    ds.meta.n_total = n_total;
    ds.meta.budget_exhausted = exhausted;
    Ok(ds)
}

/// Per-feature min and max over the rows.
pub fn compute_bounds(ds: &LabeledDataset) -> Result<NormalizationBounds> {
    if ds.len() < 2 {
        return Err(NldtError::Dataset("bounds need at least two rows".into()));
    }
    let mut lo = ds.row(0).to_vec();
    let mut hi = lo.clone();
    for row in ds.rows() {
        for j in 0..ds.dim() {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    if let Some(feature) = (0..ds.dim()).find(|&j| lo[j] >= hi[j]) {
        return Err(NldtError::ConstantFeature { feature });
    }
    NormalizationBounds::new(lo, hi)
}

/// Shuffles rows with `seed` and splits off the last `test_fraction` of
/// them.
pub fn train_test_split(
    ds: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(NldtError::Config(format!("test fraction {test_fraction} must lie in (0, 1)")));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut task_rng(seed, 0));
    let n_test = ((ds.len() as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test == ds.len() {
        return Err(NldtError::Dataset("split leaves one side empty".into()));
    }
    let (test, train) = idx.split_at(n_test);
    Ok((ds.subset(train)?, ds.subset(test)?))
}

/// Reads `x0,...,x{d-1},action` CSV. When `n_actions` is `None` it is
/// inferred as the largest label plus one.
pub fn read_csv<R: Read>(input: R, n_actions: Option<usize>) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    let d = header.len().checked_sub(1).filter(|&d| d > 0).ok_or(NldtError::Malformed {
        line: 1,
        message: "header needs at least one feature column and an action column".into(),
    })?;
    for (j, name) in header.iter().take(d).enumerate() {
        if name.trim() != format!("x{j}") {
            return Err(NldtError::Malformed {
                line: 1,
                message: format!("column {j} should be x{j}, found {name:?}"),
            });
        }
    }
    if header.get(d).map(str::trim) != Some("action") {
        return Err(NldtError::Malformed { line: 1, message: "last column must be \"action\"".into() });
    }
    let mut rows = Vec::new();
    let mut actions = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| NldtError::Malformed { line, message: e.to_string() })?;
        if record.len() != d + 1 {
            return Err(NldtError::Malformed {
                line,
                message: format!("expected {} fields, found {}", d + 1, record.len()),
            });
        }
        let row = record
            .iter()
            .take(d)
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| NldtError::Malformed { line, message: format!("bad number: {e}") })?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(NldtError::Malformed { line, message: "non-finite state".into() });
        }
        let label_text = record[d].trim();
        let label: usize = label_text
            .parse()
            .map_err(|_| NldtError::Malformed { line, message: format!("unknown action label {label_text:?}") })?;
        if let Some(n) = n_actions {
            if label >= n {
                return Err(NldtError::Malformed {
                    line,
                    message: format!("unknown action label {label} (n_actions = {n})"),
                });
            }
        }
        rows.push(row);
        actions.push(label);
    }
    if rows.is_empty() {
        return Err(NldtError::Dataset("empty dataset".into()));
    }
    let n = n_actions.unwrap_or_else(|| actions.iter().max().map_or(1, |m| m + 1));
    LabeledDataset::new(rows, actions, n)
}

pub fn write_csv<W: Write>(ds: &LabeledDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("x{j}")).collect();
    header.push("action".into());
    w.write_record(&header)?;
    for (row, a) in ds.rows().zip(ds.actions()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(a.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>, n_actions: Option<usize>) -> Result<LabeledDataset> {
    read_csv(BufReader::new(File::open(path)?), n_actions)
}

pub fn save_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(ds, BufWriter::new(File::create(path)?))
}
