//! Potential-weight analysis: min-max preprocessing, deviation-mass weights and
//! strong-attribute reduction.
//!
//! The three phases are deliberately free of randomness. Given the same
//! dataset, [`normalize`], [`potential_weights`] and [`reduce`] produce
//! bit-identical results; every reduction sums in a fixed left-to-right order.
//!
//! ```
//! use mas_classify::dataset::{AttributeSpec, Dataset};
//! use mas_classify::pwla::{normalize, potential_weights, reduce, ReductionPolicy};
//!
//! let ds = Dataset::new(
//!     vec![AttributeSpec::numeric("a", "t"), AttributeSpec::numeric("b", "t")],
//!     vec!["x".into(), "y".into()],
//!     vec![vec![0.0, 0.0], vec![10.0, 0.0]],
//!     None,
//! ).unwrap();
//! let nm = normalize(&ds);
//! assert_eq!(nm.global_mean(), 0.25);
//! let pw = reduce(&potential_weights(&nm), ReductionPolicy::MeanThreshold).unwrap();
//! assert_eq!(pw.weights(), &[1.0, 0.0]);
//! assert_eq!(pw.strong(), &[0]);
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlaError {
    #[error("DimensionMismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("NonFiniteInput")]
    NonFiniteInput,
    #[error("AllWeightsZero")]
    AllWeightsZero,
    #[error("BadIndex: column {index} of {d}")]
    BadIndex { index: usize, d: usize },
    #[error("EmptyProjection")]
    EmptyProjection,
    #[error("InvalidPolicy: {0}")]
    InvalidPolicy(String),
    #[error("MalformedSnapshot: {0}")]
    MalformedSnapshot(String),
}

impl PwlaError {
    pub fn kind(&self) -> &'static str {
        match self {
            PwlaError::DimensionMismatch { .. } => "DimensionMismatch",
            PwlaError::NonFiniteInput => "NonFiniteInput",
            PwlaError::AllWeightsZero => "AllWeightsZero",
            PwlaError::BadIndex { .. } => "BadIndex",
            PwlaError::EmptyProjection => "EmptyProjection",
            PwlaError::InvalidPolicy(_) => "InvalidPolicy",
            PwlaError::MalformedSnapshot(_) => "MalformedSnapshot",
        }
    }
}

/// Min-max scaled values with the training statistics needed to transform
/// new instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix {
    names: Vec<String>,
    n: usize,
    values: Vec<f64>,
    col_min: Vec<f64>,
    col_max: Vec<f64>,
    constant_cols: Vec<usize>,
    global_mean: f64,
}

impl NormalizedMatrix {
    /// Builds a matrix from already-scaled rows. Statistics are taken as given;
    /// columns whose min equals max are recorded as constant and zeroed.
    pub fn from_parts(
        names: Vec<String>,
        rows: Vec<Vec<f64>>,
        col_min: Vec<f64>,
        col_max: Vec<f64>,
    ) -> Result<NormalizedMatrix, PwlaError> {
        let d = names.len();
        if col_min.len() != d || col_max.len() != d {
            return Err(PwlaError::DimensionMismatch {
                expected: d,
                got: col_min.len().min(col_max.len()),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(PwlaError::DimensionMismatch { expected: d, got: r.len() });
        }
        let constant_cols: Vec<usize> = (0..d).filter(|&j| col_min[j] == col_max[j]).collect();
        let mut values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PwlaError::NonFiniteInput);
        }
        for v in values.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let n = values.len().checked_div(d).unwrap_or(0);
        for i in 0..n {
            for &j in &constant_cols {
                values[i * d + j] = 0.0;
            }
        }
        let global_mean = matrix_mean(&values);
        Ok(NormalizedMatrix {
            names,
            n,
            values,
            col_min,
            col_max,
            constant_cols,
            global_mean,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols().max(1))
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn col_min(&self) -> &[f64] {
        &self.col_min
    }

    pub fn col_max(&self) -> &[f64] {
        &self.col_max
    }

    pub fn constant_cols(&self) -> &[usize] {
        &self.constant_cols
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.constant_cols.binary_search(&j).is_ok()
    }

    /// Mean over every entry of the scaled matrix.
    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    /// Maps a raw instance through the training min-max transform, clamping
    /// to `[0, 1]`. Constant columns map to 0.
    pub fn apply_normalization(&self, raw: &[f64]) -> Result<Vec<f64>, PwlaError> {
        if raw.len() != self.n_cols() {
            return Err(PwlaError::DimensionMismatch {
                expected: self.n_cols(),
                got: raw.len(),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(PwlaError::NonFiniteInput);
        }
        Ok(raw
            .iter()
            .enumerate()
            .map(|(j, &x)| scale_value(x, self.col_min[j], self.col_max[j]))
            .collect())
    }
}

pub(crate) fn scale_value(x: f64, min: f64, max: f64) -> f64 {
    if min == max {
        0.0
    } else {
        ((x - min) / (max - min)).clamp(0.0, 1.0)
    }
}

fn matrix_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    sum / values.len() as f64
}

/// Min-max scales every column of `ds` to `[0, 1]`.
pub fn normalize(ds: &Dataset) -> NormalizedMatrix {
    let d = ds.n_attributes();
    let mut col_min = vec![f64::INFINITY; d];
    let mut col_max = vec![f64::NEG_INFINITY; d];
    for row in ds.rows() {
        for (j, &x) in row.iter().enumerate() {
            col_min[j] = col_min[j].min(x);
            col_max[j] = col_max[j].max(x);
        }
    }
    let constant_cols: Vec<usize> = (0..d).filter(|&j| col_min[j] == col_max[j]).collect();
    let values: Vec<f64> = ds
        .rows()
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| {
                    if col_min[j] == col_max[j] {
                        0.0
                    } else {
                        (x - col_min[j]) / (col_max[j] - col_min[j])
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let global_mean = matrix_mean(&values);
    NormalizedMatrix {
        names: ds.attribute_names(),
        n: ds.n_instances(),
        values,
        col_min,
        col_max,
        constant_cols,
        global_mean,
    }
}

/// Rule deciding which attributes count as strong.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ReductionPolicy {
    /// Keep attributes weighing at least the mean weight of non-constant columns.
    #[default]
    MeanThreshold,
    /// Keep the `k` heaviest attributes; ties go to the lower column index.
    TopK(usize),
    /// Keep attributes weighing at least `tau` times the largest weight.
    FractionOfMax(f64),
}

impl fmt::Display for ReductionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionPolicy::MeanThreshold => write!(f, "mean"),
            ReductionPolicy::TopK(k) => write!(f, "topk:{k}"),
            ReductionPolicy::FractionOfMax(t) => write!(f, "frac:{t}"),
        }
    }
}

impl FromStr for ReductionPolicy {
    type Err = PwlaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PwlaError::InvalidPolicy(s.to_string());
        match s.split_once(':') {
            None if s == "mean" => Ok(ReductionPolicy::MeanThreshold),
            Some(("topk", k)) => Ok(ReductionPolicy::TopK(k.parse().map_err(|_| bad())?)),
            Some(("frac", t)) => Ok(ReductionPolicy::FractionOfMax(t.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

/// Per-attribute deviation mass and, once reduced, the strong/weak partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialWeights {
    names: Vec<String>,
    weights: Vec<f64>,
    constant_cols: Vec<usize>,
    strong: Vec<usize>,
    weak: Vec<usize>,
    policy: Option<ReductionPolicy>,
}

impl PotentialWeights {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Retained column indices in ascending order. Empty until [`reduce`] runs.
    pub fn strong(&self) -> &[usize] {
        &self.strong
    }

    pub fn weak(&self) -> &[usize] {
        &self.weak
    }

    pub fn policy(&self) -> Option<ReductionPolicy> {
        self.policy
    }

    pub fn is_reduced(&self) -> bool {
        self.policy.is_some()
    }

    pub fn is_strong(&self, j: usize) -> bool {
        self.strong.contains(&j)
    }

    pub fn strong_names(&self) -> Vec<String> {
        self.strong.iter().map(|&j| self.names[j].clone()).collect()
    }

    pub fn strong_weights(&self) -> Vec<f64> {
        self.strong.iter().map(|&j| self.weights[j]).collect()
    }
}

/// Deviation mass of each column around the global mean:
/// `w[j] = sum_i |v[i][j] - g|`, and 0 for constant columns.
pub fn potential_weights(nm: &NormalizedMatrix) -> PotentialWeights {
    let d = nm.n_cols();
    let g = nm.global_mean;
    let mut weights = vec![0.0; d];
    for row in nm.rows().take(nm.n) {
        for (w, &v) in weights.iter_mut().zip(row) {
            *w += (v - g).abs();
        }
    }
    for &j in &nm.constant_cols {
        weights[j] = 0.0;
    }
    PotentialWeights {
        names: nm.names.clone(),
        weights,
        constant_cols: nm.constant_cols.clone(),
        strong: Vec::new(),
        weak: Vec::new(),
        policy: None,
    }
}

/// The same deviation mass measured in units of the global mean:
/// `sum_i |v[i][j] / g - 1|`. Defined only when `g > 0`; equals the
/// potential weights scaled by `1 / g`, so it ranks attributes identically.
pub fn ratio_weights(nm: &NormalizedMatrix) -> Option<Vec<f64>> {
    let g = nm.global_mean;
    if g <= 0.0 {
        return None;
    }
    let d = nm.n_cols();
    let mut weights = vec![0.0; d];
    for row in nm.rows().take(nm.n) {
        for (w, &v) in weights.iter_mut().zip(row) {
            *w += (v / g - 1.0).abs();
        }
    }
    for &j in &nm.constant_cols {
        weights[j] = 0.0;
    }
    Some(weights)
}

/// Column indices ordered by weight, heaviest first, ties to the lower index.
pub fn rank_by_weight(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order
}

/// Splits attributes into strong and weak under `policy`.
pub fn reduce(pw: &PotentialWeights, policy: ReductionPolicy) -> Result<PotentialWeights, PwlaError> {
    let d = pw.weights.len();
    if pw.weights.iter().all(|&w| w == 0.0) {
        return Err(PwlaError::AllWeightsZero);
    }
    let max = pw.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut strong: Vec<usize> = match policy {
        ReductionPolicy::MeanThreshold => {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (j, &w) in pw.weights.iter().enumerate() {
                if !pw.constant_cols.contains(&j) {
                    sum += w;
                    count += 1;
                }
            }
            // a rounded mean of equal weights can land one ulp above them
            let cutoff = (sum / count as f64).min(max);
            (0..d).filter(|&j| pw.weights[j] >= cutoff).collect()
        }
        ReductionPolicy::TopK(k) => {
            if k == 0 || k > d {
                return Err(PwlaError::InvalidPolicy(format!("topk:{k} with {d} attributes")));
            }
            rank_by_weight(&pw.weights).into_iter().take(k).collect()
        }
        ReductionPolicy::FractionOfMax(tau) => {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(PwlaError::InvalidPolicy(format!("frac:{tau}")));
            }
            (0..d).filter(|&j| pw.weights[j] >= tau * max).collect()
        }
    };
    strong.sort_unstable();
    let weak = (0..d).filter(|j| strong.binary_search(j).is_err()).collect();
    Ok(PotentialWeights {
        strong,
        weak,
        policy: Some(policy),
        ..pw.clone()
    })
}

/// Restricts the matrix to `strong` columns and recomputes the global mean.
pub fn project(nm: &NormalizedMatrix, strong: &[usize]) -> Result<NormalizedMatrix, PwlaError> {
    if strong.is_empty() {
        return Err(PwlaError::EmptyProjection);
    }
    let d = nm.n_cols();
    if let Some(&index) = strong.iter().find(|&&j| j >= d) {
        return Err(PwlaError::BadIndex { index, d });
    }
    let values: Vec<f64> = nm
        .rows()
        .take(nm.n)
        .flat_map(|row| strong.iter().map(move |&j| row[j]))
        .collect();
    let constant_cols = strong
        .iter()
        .enumerate()
        .filter(|&(_, &j)| nm.is_constant(j))
        .map(|(k, _)| k)
        .collect();
    Ok(NormalizedMatrix {
        names: strong.iter().map(|&j| nm.names[j].clone()).collect(),
        n: nm.n,
        global_mean: matrix_mean(&values),
        values,
        col_min: strong.iter().map(|&j| nm.col_min[j]).collect(),
        col_max: strong.iter().map(|&j| nm.col_max[j]).collect(),
        constant_cols,
    })
}

/// Everything the preprocessing and pre-training phases produce for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Pretrained {
    pub normalized: NormalizedMatrix,
    pub weights: PotentialWeights,
    pub projected: NormalizedMatrix,
}

/// Runs normalize, weight, reduce and project in sequence.
pub fn pretrain(ds: &Dataset, policy: ReductionPolicy) -> Result<Pretrained, PwlaError> {
    let normalized = normalize(ds);
    let weights = reduce(&potential_weights(&normalized), policy)?;
    let projected = project(&normalized, weights.strong())?;
    Ok(Pretrained {
        normalized,
        weights,
        projected,
    })
}

const SNAPSHOT_MAGIC: &str = "PWLA-WEIGHTS v1";

/// One line of a weight snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub weight: f64,
    pub strong: bool,
}

/// Parsed form of [`weight_snapshot`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSnapshot {
    pub policy: ReductionPolicy,
    pub global_mean: f64,
    pub rows: Vec<WeightRow>,
}

/// Tab-separated snapshot: a magic line, the policy and global mean, then one
/// `name min max weight strong` line per attribute in column order.
pub fn weight_snapshot(nm: &NormalizedMatrix, pw: &PotentialWeights) -> String {
    let mut out = format!("{SNAPSHOT_MAGIC}\n");
    out.push_str(&format!("policy\t{}\n", pw.policy.unwrap_or_default()));
    out.push_str(&format!("global_mean\t{}\n", nm.global_mean));
    out.push_str("attribute\tmin\tmax\tweight\tstrong\n");
    for j in 0..nm.n_cols() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            nm.names[j],
            nm.col_min[j],
            nm.col_max[j],
            pw.weights[j],
            u8::from(pw.is_strong(j))
        ));
    }
    out
}

pub fn parse_weight_snapshot(text: &str) -> Result<WeightSnapshot, PwlaError> {
    let bad = |m: &str| PwlaError::MalformedSnapshot(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(bad("missing magic line"));
    }
    let mut field = |key: &str| -> Result<String, PwlaError> {
        let line = lines.next().ok_or_else(|| bad(key))?;
        match line.split_once('\t') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(bad(key)),
        }
    };
    let policy: ReductionPolicy = field("policy")?.parse()?;
    let global_mean: f64 = field("global_mean")?.parse().map_err(|_| bad("global_mean"))?;
    if lines.next() != Some("attribute\tmin\tmax\tweight\tstrong") {
        return Err(bad("column header"));
    }
    let rows = lines
        .map(|line| {
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != 5 {
                return Err(bad(line));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
            Ok(WeightRow {
                name: cells[0].to_string(),
                min: num(cells[1])?,
                max: num(cells[2])?,
                weight: num(cells[3])?,
                strong: match cells[4] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad(line)),
                },
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WeightSnapshot {
        policy,
        global_mean,
        rows,
    })
}
