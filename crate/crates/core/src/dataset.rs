//! Tabular data model, CSV ingestion, source joining and train/test splitting.
//!
//! Every [`Dataset`] is validated on construction and its rows are kept in
//! sorted instance-id order, so anything computed downstream is reproducible
//! regardless of the order rows arrived in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column name used for instance ids when exporting.
pub const ID_COLUMN: &str = "id";
/// Column name used for class labels when exporting.
pub const LABEL_COLUMN: &str = "label";
const SOURCES_PREFIX: &str = "# sources:";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("MissingColumn: {0}")]
    MissingColumn(String),
    #[error("NonNumericCell: row {row}, column {column}")]
    NonNumericCell { row: usize, column: String },
    #[error("EmptyDataset")]
    EmptyDataset,
    #[error("InvalidLabel: row {row}, value {value:?}")]
    InvalidLabel { row: usize, value: String },
    #[error("IdMismatch: instance {id} missing from table {table}")]
    IdMismatch { id: String, table: String },
    #[error("DuplicateAttribute: {0}")]
    DuplicateAttribute(String),
    #[error("DuplicateId: {0}")]
    DuplicateId(String),
    #[error("EmptySelection")]
    EmptySelection,
    #[error("InvalidAttribute: {0}")]
    InvalidAttribute(String),
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("NonFiniteValue: instance {id}, attribute {attribute}")]
    NonFiniteValue { id: String, attribute: String },
    #[error("LabelConflict: instance {0}")]
    LabelConflict(String),
    #[error("Unlabeled")]
    Unlabeled,
    #[error("InvalidFraction: {0}")]
    InvalidFraction(f64),
    #[error("DegenerateSplit: {0}")]
    DegenerateSplit(String),
    #[error("MalformedCsv: {0}")]
    MalformedCsv(String),
    #[error("Io: {0}")]
    Io(String),
}

impl DatasetError {
    /// Variant name, used as a stable error identifier on the command line.
    pub fn kind(&self) -> &'static str {
        match self {
            DatasetError::MissingColumn(_) => "MissingColumn",
            DatasetError::NonNumericCell { .. } => "NonNumericCell",
            DatasetError::EmptyDataset => "EmptyDataset",
            DatasetError::InvalidLabel { .. } => "InvalidLabel",
            DatasetError::IdMismatch { .. } => "IdMismatch",
            DatasetError::DuplicateAttribute(_) => "DuplicateAttribute",
            DatasetError::DuplicateId(_) => "DuplicateId",
            DatasetError::EmptySelection => "EmptySelection",
            DatasetError::InvalidAttribute(_) => "InvalidAttribute",
            DatasetError::ShapeMismatch(_) => "ShapeMismatch",
            DatasetError::NonFiniteValue { .. } => "NonFiniteValue",
            DatasetError::LabelConflict(_) => "LabelConflict",
            DatasetError::Unlabeled => "Unlabeled",
            DatasetError::InvalidFraction(_) => "InvalidFraction",
            DatasetError::DegenerateSplit(_) => "DegenerateSplit",
            DatasetError::MalformedCsv(_) => "MalformedCsv",
            DatasetError::Io(_) => "Io",
        }
    }
}

/// Binary class label. `One` marks the positive ("main") class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    One,
    Two,
}

impl Class {
    pub fn as_u8(self) -> u8 {
        match self {
            Class::One => 1,
            Class::Two => 2,
        }
    }

    pub fn from_u8(value: u8) -> Option<Class> {
        match value {
            1 => Some(Class::One),
            2 => Some(Class::Two),
            _ => None,
        }
    }

    fn parse(cell: &str) -> Option<Class> {
        cell.trim().parse::<u8>().ok().and_then(Class::from_u8)
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Numeric,
}

/// One selected input attribute and the logical table it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub source_table: String,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>, source_table: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
            source_table: source_table.into(),
        }
    }
}

/// Which columns to pull out of a table.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SchemaSelection {
    pub selected: Vec<String>,
    pub label_column: Option<String>,
    /// Column holding instance ids. When unset, a column named `id` is used if
    /// present, otherwise ids are synthesized from the row number.
    pub id_column: Option<String>,
}

impl SchemaSelection {
    pub fn new<S: Into<String>>(selected: impl IntoIterator<Item = S>) -> Self {
        SchemaSelection {
            selected: selected.into_iter().map(Into::into).collect(),
            label_column: None,
            id_column: None,
        }
    }

    pub fn with_label(mut self, column: impl Into<String>) -> Self {
        self.label_column = Some(column.into());
        self
    }

    pub fn with_id(mut self, column: impl Into<String>) -> Self {
        self.id_column = Some(column.into());
        self
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if self.selected.is_empty() {
            return Err(DatasetError::EmptySelection);
        }
        let mut seen = BTreeSet::new();
        for name in &self.selected {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateAttribute(name.clone()));
            }
        }
        Ok(())
    }
}

/// Named-attribute numeric table with optional binary labels.
///
/// Values are stored row-major. Rows are always sorted by instance id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    attributes: Vec<AttributeSpec>,
    instance_ids: Vec<String>,
    values: Vec<f64>,
    labels: Option<Vec<Class>>,
}

impl Dataset {
    /// Builds a dataset from rows, validating every invariant and sorting rows
    /// by instance id.
    pub fn new(
        attributes: Vec<AttributeSpec>,
        instance_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<Class>>,
    ) -> Result<Dataset, DatasetError> {
        if rows.len() != instance_ids.len() {
            return Err(DatasetError::ShapeMismatch(format!(
                "{} rows for {} ids",
                rows.len(),
                instance_ids.len()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(DatasetError::ShapeMismatch(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    rows.len()
                )));
            }
        }
        let d = attributes.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(DatasetError::ShapeMismatch(format!(
                "row of length {} in a table of {} attributes",
                bad.len(),
                d
            )));
        }

        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| instance_ids[a].cmp(&instance_ids[b]));

        let ds = Dataset {
            values: order.iter().flat_map(|&i| rows[i].iter().copied()).collect(),
            instance_ids: order.iter().map(|&i| instance_ids[i].clone()).collect(),
            labels: labels.map(|l| order.iter().map(|&i| l[i]).collect()),
            attributes,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.attributes.is_empty() {
            return Err(DatasetError::EmptySelection);
        }
        if self.instance_ids.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let mut names = BTreeSet::new();
        for attr in &self.attributes {
            if attr.name.is_empty() {
                return Err(DatasetError::InvalidAttribute("empty name".into()));
            }
            if !names.insert(attr.name.as_str()) {
                return Err(DatasetError::DuplicateAttribute(attr.name.clone()));
            }
        }
        for pair in self.instance_ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(DatasetError::DuplicateId(pair[0].clone()));
            }
            if pair[0] > pair[1] {
                return Err(DatasetError::ShapeMismatch("rows not in id order".into()));
            }
        }
        if self.values.len() != self.instance_ids.len() * self.attributes.len() {
            return Err(DatasetError::ShapeMismatch("value count".into()));
        }
        for (k, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                let d = self.attributes.len();
                return Err(DatasetError::NonFiniteValue {
                    id: self.instance_ids[k / d].clone(),
                    attribute: self.attributes[k % d].name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn n_instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn labels(&self) -> Option<&[Class]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.attributes.len();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.attributes.len())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.attributes.len() + j]
    }

    /// Column subset by attribute name, in the order given.
    pub fn select(&self, names: &[String]) -> Result<Dataset, DatasetError> {
        let idx = names
            .iter()
            .map(|n| {
                self.attribute_index(n)
                    .ok_or_else(|| DatasetError::MissingColumn(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows = self
            .rows()
            .map(|r| idx.iter().map(|&j| r[j]).collect())
            .collect();
        Dataset::new(
            idx.iter().map(|&j| self.attributes[j].clone()).collect(),
            self.instance_ids.clone(),
            rows,
            self.labels.clone(),
        )
    }

    /// Row subset by position; positions are taken in the given order and the
    /// result is re-sorted by id.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset, DatasetError> {
        Dataset::new(
            self.attributes.clone(),
            rows.iter().map(|&i| self.instance_ids[i].clone()).collect(),
            rows.iter().map(|&i| self.row(i).to_vec()).collect(),
            self.labels
                .as_ref()
                .map(|l| rows.iter().map(|&i| l[i]).collect()),
        )
    }

    pub fn without_labels(&self) -> Dataset {
        Dataset {
            labels: None,
            ..self.clone()
        }
    }

    /// Renders the dataset in the comma-separated dialect read by [`ingest_csv`].
    ///
    /// A `# sources:` comment line records each attribute's source table so the
    /// file re-ingests to an identical dataset.
    pub fn to_csv_string(&self) -> Result<String, DatasetError> {
        for attr in &self.attributes {
            if attr.name == ID_COLUMN || attr.name == LABEL_COLUMN {
                return Err(DatasetError::DuplicateAttribute(attr.name.clone()));
            }
            if attr.name.contains([',', '=', '\n', '"']) || attr.source_table.contains([',', '=', '\n']) {
                return Err(DatasetError::InvalidAttribute(attr.name.clone()));
            }
        }
        let mut out = String::new();
        let sources: Vec<String> = self
            .attributes
            .iter()
            .map(|a| format!("{}={}", a.name, a.source_table))
            .collect();
        out.push_str(&format!("{} {}\n", SOURCES_PREFIX, sources.join(",")));
        write_csv_body(self, &mut out);
        Ok(out)
    }
}

fn write_csv_body(ds: &Dataset, out: &mut String) {
    out.push_str(ID_COLUMN);
    for attr in &ds.attributes {
        out.push(',');
        out.push_str(&attr.name);
    }
    if ds.labels.is_some() {
        out.push(',');
        out.push_str(LABEL_COLUMN);
    }
    out.push('\n');
    for (i, row) in ds.rows().enumerate() {
        out.push_str(&ds.instance_ids[i]);
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        if let Some(labels) = &ds.labels {
            out.push(',');
            out.push_str(&labels[i].to_string());
        }
        out.push('\n');
    }
}

/// Writes `ds` to `path` in the ingestion dialect.
pub fn export_csv(ds: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let text = ds.to_csv_string()?;
    fs::write(path, text).map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))
}

/// Reads the selected columns of a CSV file.
///
/// Lines starting with `#` before the header are comments. Rows come back
/// sorted by instance id.
pub fn ingest_csv(path: &Path, selection: &SchemaSelection) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path)
        .map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, &tag, selection)
}

/// Same as [`ingest_csv`] but over in-memory text; `default_source` tags every
/// attribute not named in a `# sources:` comment.
pub fn parse_csv(
    text: &str,
    default_source: &str,
    selection: &SchemaSelection,
) -> Result<Dataset, DatasetError> {
    selection.validate()?;

    let mut sources: BTreeMap<String, String> = BTreeMap::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        if let Some(rest) = line.trim_end().strip_prefix(SOURCES_PREFIX) {
            for pair in rest.trim().split(',').filter(|p| !p.is_empty()) {
                if let Some((name, tag)) = pair.split_once('=') {
                    sources.insert(name.to_string(), tag.to_string());
                }
            }
        }
        body_start += line.len();
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(&text.as_bytes()[body_start..]);
    let header = reader
        .headers()
        .map_err(|e| DatasetError::MalformedCsv(e.to_string()))?
        .clone();
    let column = |name: &str| header.iter().position(|h| h == name);

    let cols = selection
        .selected
        .iter()
        .map(|n| column(n).ok_or_else(|| DatasetError::MissingColumn(n.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let label_col = match &selection.label_column {
        Some(name) => Some(column(name).ok_or_else(|| DatasetError::MissingColumn(name.clone()))?),
        None => None,
    };
    let id_col = match &selection.id_column {
        Some(name) => Some(column(name).ok_or_else(|| DatasetError::MissingColumn(name.clone()))?),
        None => column(ID_COLUMN),
    };

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row_no = r + 1;
        let record = record.map_err(|e| DatasetError::MalformedCsv(e.to_string()))?;
        let mut row = Vec::with_capacity(cols.len());
        for (&c, name) in cols.iter().zip(&selection.selected) {
            let cell = record.get(c).unwrap_or("");
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(DatasetError::NonNumericCell {
                        row: row_no,
                        column: name.clone(),
                    })
                }
            }
        }
        if let Some(c) = label_col {
            let cell = record.get(c).unwrap_or("");
            let class = Class::parse(cell).ok_or_else(|| DatasetError::InvalidLabel {
                row: row_no,
                value: cell.to_string(),
            })?;
            labels.push(class);
        }
        ids.push(match id_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => format!("row-{row_no:06}"),
        });
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let attributes = selection
        .selected
        .iter()
        .map(|n| {
            let tag = sources.get(n).map(String::as_str).unwrap_or(default_source);
            AttributeSpec::numeric(n.clone(), tag)
        })
        .collect();
    Dataset::new(
        attributes,
        ids,
        rows,
        label_col.map(|_| labels),
    )
}

/// Header columns of a CSV file, skipping leading `#` comment lines.
pub fn read_header(path: &Path) -> Result<Vec<String>, DatasetError> {
    let text = fs::read_to_string(path)
        .map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    let line = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .ok_or(DatasetError::EmptyDataset)?;
    Ok(line.split(',').map(|c| c.trim().to_string()).collect())
}

/// The attribute columns a file declares: those named in its `# sources:`
/// comment, in header order, or every column but id and label without one.
pub fn declared_attributes(path: &Path) -> Result<Vec<String>, DatasetError> {
    let header = read_header(path)?;
    let text = fs::read_to_string(path)
        .map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    let declared: Option<Vec<&str>> = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix(SOURCES_PREFIX))
        .map(|rest| {
            rest.trim()
                .split(',')
                .filter_map(|p| p.split_once('=').map(|(n, _)| n))
                .collect()
        });
    Ok(header
        .into_iter()
        .filter(|c| match &declared {
            Some(names) => names.contains(&c.as_str()),
            None => c != ID_COLUMN && c != LABEL_COLUMN,
        })
        .collect())
}

/// Ingests several tagged files and inner-joins them. Each file contributes
/// the selected columns it actually has; the label column is read from every
/// file that carries it.
pub fn ingest_sources(
    sources: &[(String, std::path::PathBuf)],
    selection: &SchemaSelection,
) -> Result<Dataset, DatasetError> {
    if let [(_, path)] = sources {
        return ingest_csv(path, selection);
    }
    let mut tables = Vec::with_capacity(sources.len());
    for (tag, path) in sources {
        let header = read_header(path)?;
        let present: Vec<String> = selection
            .selected
            .iter()
            .filter(|c| header.contains(c))
            .cloned()
            .collect();
        if present.is_empty() {
            continue;
        }
        let part = SchemaSelection {
            selected: present,
            label_column: selection.label_column.clone().filter(|l| header.contains(l)),
            id_column: selection.id_column.clone(),
        };
        tables.push((tag.clone(), ingest_csv(path, &part)?));
    }
    join_sources(&tables, selection)
}

/// Inner-joins several id-keyed tables into one dataset.
///
/// Each table's attributes are re-tagged with the table's tag. Columns follow
/// the selection order and rows are sorted by id. Labels, if the selection
/// names a label column, are taken from whichever tables carry them and must
/// agree.
pub fn join_sources(
    tables: &[(String, Dataset)],
    selection: &SchemaSelection,
) -> Result<Dataset, DatasetError> {
    selection.validate()?;

    let mut owner: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (t, (_, ds)) in tables.iter().enumerate() {
        for (j, attr) in ds.attributes.iter().enumerate() {
            if owner.insert(attr.name.as_str(), (t, j)).is_some() {
                return Err(DatasetError::DuplicateAttribute(attr.name.clone()));
            }
        }
    }
    let picks = selection
        .selected
        .iter()
        .map(|n| {
            owner
                .get(n.as_str())
                .copied()
                .ok_or_else(|| DatasetError::MissingColumn(n.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    // id -> row position, per table
    let positions: Vec<BTreeMap<&str, usize>> = tables
        .iter()
        .map(|(_, ds)| {
            ds.instance_ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i))
                .collect()
        })
        .collect();
    let all_ids: BTreeSet<&str> = positions.iter().flat_map(|p| p.keys().copied()).collect();
    if all_ids.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    for id in &all_ids {
        for (t, pos) in positions.iter().enumerate() {
            if !pos.contains_key(id) {
                return Err(DatasetError::IdMismatch {
                    id: id.to_string(),
                    table: tables[t].0.clone(),
                });
            }
        }
    }

    let want_labels = selection.label_column.is_some();
    let mut ids = Vec::with_capacity(all_ids.len());
    let mut rows = Vec::with_capacity(all_ids.len());
    let mut labels = Vec::with_capacity(all_ids.len());
    for id in &all_ids {
        rows.push(
            picks
                .iter()
                .map(|&(t, j)| tables[t].1.value(positions[t][id], j))
                .collect(),
        );
        if want_labels {
            let mut found: Option<Class> = None;
            for (t, (_, ds)) in tables.iter().enumerate() {
                if let Some(l) = &ds.labels {
                    let c = l[positions[t][id]];
                    match found {
                        Some(prev) if prev != c => {
                            return Err(DatasetError::LabelConflict(id.to_string()))
                        }
                        _ => found = Some(c),
                    }
                }
            }
            let name = selection.label_column.clone().unwrap_or_default();
            labels.push(found.ok_or(DatasetError::MissingColumn(name))?);
        }
        ids.push(id.to_string());
    }

    let attributes = picks
        .iter()
        .map(|&(t, j)| {
            let mut spec = tables[t].1.attributes[j].clone();
            spec.source_table = tables[t].0.clone();
            spec
        })
        .collect();
    Dataset::new(attributes, ids, rows, want_labels.then_some(labels))
}

/// Seeded random partition into (train, test).
///
/// The test part holds `round(n * test_fraction)` instances. Fails when either
/// part would be empty or the training part would contain a single class.
pub fn split_train_test(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(test_fraction));
    }
    let labels = ds.labels().ok_or(DatasetError::Unlabeled)?;
    let n = ds.n_instances();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(DatasetError::DegenerateSplit(format!(
            "{n_test} of {n} instances in the test part"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test_idx, train_idx) = order.split_at(n_test);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let first = labels[train_idx[0]];
    if train_idx.iter().all(|&i| labels[i] == first) {
        return Err(DatasetError::DegenerateSplit(format!(
            "training part contains only class {first}"
        )));
    }
    Ok((ds.subset(&train_idx)?, ds.subset(&test_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(cols: &[&str]) -> SchemaSelection {
        SchemaSelection::new(cols.iter().copied())
    }

    fn labeled(n: usize, classes: impl Fn(usize) -> Class) -> Dataset {
        Dataset::new(
            vec![AttributeSpec::numeric("a", "t")],
            (0..n).map(|i| format!("z{i:03}")).collect(),
            (0..n).map(|i| vec![i as f64]).collect(),
            Some((0..n).map(classes).collect()),
        )
        .unwrap()
    }

    #[test]
    fn declared_attributes_follow_sources_comment() {
        let dir = tempfile::tempdir().unwrap();
        let with = dir.path().join("a.csv");
        fs::write(&with, "# sources: b=t,a=t\nid,x,a,b,label\nr1,0,1,2,1\n").unwrap();
        assert_eq!(declared_attributes(&with).unwrap(), ["a", "b"]);
        let without = dir.path().join("b.csv");
        fs::write(&without, "id,x,a,label\nr1,0,1,1\n").unwrap();
        assert_eq!(declared_attributes(&without).unwrap(), ["x", "a"]);
    }

    #[test]
    fn parses_three_rows_with_labels() {
        let text = "a,b,label\n1,2,1\n3,4,2\n5,6,1\n";
        let ds = parse_csv(text, "t", &sel(&["a", "b"]).with_label("label")).unwrap();
        assert_eq!(ds.n_instances(), 3);
        assert_eq!(ds.n_attributes(), 2);
        assert_eq!(ds.labels().unwrap(), &[Class::One, Class::Two, Class::One]);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert_eq!(ds.instance_ids()[0], "row-000001");
    }

    #[test]
    fn columns_follow_selection_order() {
        let text = "id,a,b\nx,1,2\n";
        let ds = parse_csv(text, "t", &sel(&["b", "a"])).unwrap();
        assert_eq!(ds.attribute_names(), vec!["b", "a"]);
        assert_eq!(ds.row(0), &[2.0, 1.0]);
    }

    #[test]
    fn missing_column_is_named() {
        let err = parse_csv("a,b\n1,2\n", "t", &sel(&["a", "zzz"])).unwrap_err();
        assert_eq!(err, DatasetError::MissingColumn("zzz".into()));
    }

    #[test]
    fn rejects_non_numeric_and_missing_cells() {
        let err = parse_csv("a,b\n1,2\n3,x\n", "t", &sel(&["a", "b"])).unwrap_err();
        assert_eq!(
            err,
            DatasetError::NonNumericCell {
                row: 2,
                column: "b".into()
            }
        );
        let err = parse_csv("a,b\n1,\n", "t", &sel(&["a", "b"])).unwrap_err();
        assert_eq!(err.kind(), "NonNumericCell");
        let err = parse_csv("a\nNaN\n", "t", &sel(&["a"])).unwrap_err();
        assert_eq!(err.kind(), "NonNumericCell");
    }

    #[test]
    fn rejects_bad_labels_and_empty_files() {
        let err = parse_csv("a,label\n1,3\n", "t", &sel(&["a"]).with_label("label")).unwrap_err();
        assert_eq!(
            err,
            DatasetError::InvalidLabel {
                row: 1,
                value: "3".into()
            }
        );
        let err = parse_csv("a,label\n", "t", &sel(&["a"]).with_label("label")).unwrap_err();
        assert_eq!(err, DatasetError::EmptyDataset);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_csv("id,a\nx,1\nx,2\n", "t", &sel(&["a"])).unwrap_err();
        assert_eq!(err, DatasetError::DuplicateId("x".into()));
    }

    #[test]
    fn rows_sorted_by_id() {
        let ds = parse_csv("id,a\nz2,2\nz1,1\n", "t", &sel(&["a"])).unwrap();
        assert_eq!(ds.instance_ids(), &["z1".to_string(), "z2".to_string()]);
        assert_eq!(ds.row(0), &[1.0]);
    }

    fn table(tag: &str, cols: &[&str], ids: &[&str]) -> (String, Dataset) {
        let ds = Dataset::new(
            cols.iter().map(|c| AttributeSpec::numeric(*c, "raw")).collect(),
            ids.iter().map(|s| s.to_string()).collect(),
            ids.iter()
                .enumerate()
                .map(|(i, _)| cols.iter().enumerate().map(|(j, _)| (i * 10 + j) as f64).collect())
                .collect(),
            None,
        )
        .unwrap();
        (tag.to_string(), ds)
    }

    #[test]
    fn join_disjoint_columns() {
        let a = table("social", &["p", "q"], &["z1", "z2"]);
        let b = table("geo", &["r"], &["z2", "z1"]);
        let joined = join_sources(&[a, b], &sel(&["p", "q", "r"])).unwrap();
        assert_eq!(joined.n_attributes(), 3);
        assert_eq!(joined.n_instances(), 2);
        assert_eq!(joined.attributes()[2].source_table, "geo");
        // z1 is row 1 of table geo
        assert_eq!(joined.row(0), &[0.0, 1.0, 10.0]);
    }

    #[test]
    fn join_reports_id_mismatch() {
        let a = table("a", &["p"], &["z1"]);
        let b = table("b", &["r"], &["z2"]);
        let err = join_sources(&[a, b], &sel(&["p", "r"])).unwrap_err();
        assert_eq!(
            err,
            DatasetError::IdMismatch {
                id: "z1".into(),
                table: "b".into()
            }
        );
    }

    #[test]
    fn join_rejects_duplicate_attribute() {
        let a = table("a", &["p"], &["z1"]);
        let b = table("b", &["p"], &["z1"]);
        let err = join_sources(&[a, b], &sel(&["p"])).unwrap_err();
        assert_eq!(err, DatasetError::DuplicateAttribute("p".into()));
    }

    #[test]
    fn join_is_insensitive_to_table_order() {
        let a = table("a", &["p"], &["z3", "z1", "z2"]);
        let b = table("b", &["q"], &["z1", "z2", "z3"]);
        let s = sel(&["q", "p"]);
        let one = join_sources(&[a.clone(), b.clone()], &s).unwrap();
        let two = join_sources(&[b, a], &s).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = labeled(10, |i| if i % 2 == 0 { Class::One } else { Class::Two });
        let first = split_train_test(&ds, 0.2, 7).unwrap();
        let second = split_train_test(&ds, 0.2, 7).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.1.n_instances(), 2);
    }

    #[test]
    fn split_partition_is_exact() {
        let ds = labeled(100, |i| if i < 50 { Class::One } else { Class::Two });
        let (train, test) = split_train_test(&ds, 0.3, 11).unwrap();
        assert_eq!(test.n_instances(), 30);
        assert_eq!(train.n_instances(), 70);
        let mut ids: Vec<&String> = train.instance_ids().iter().chain(test.instance_ids()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 100);
    }

    #[test]
    fn split_detects_single_class_training() {
        let ds = labeled(2, |i| if i == 0 { Class::One } else { Class::Two });
        for seed in 0..8 {
            let err = split_train_test(&ds, 0.5, seed).unwrap_err();
            assert_eq!(err.kind(), "DegenerateSplit");
        }
        let err = split_train_test(&ds, 0.1, 0).unwrap_err();
        assert_eq!(err.kind(), "DegenerateSplit");
        assert_eq!(split_train_test(&ds, 1.0, 0).unwrap_err().kind(), "InvalidFraction");
    }

    #[test]
    fn export_round_trips() {
        let ds = Dataset::new(
            vec![
                AttributeSpec::numeric("area", "geo"),
                AttributeSpec::numeric("staff", "staffs"),
            ],
            vec!["b".into(), "a".into()],
            vec![vec![0.1, 1e-17], vec![-3.25, 123456789.125]],
            Some(vec![Class::Two, Class::One]),
        )
        .unwrap();
        let text = ds.to_csv_string().unwrap();
        let back = parse_csv(
            &text,
            "other",
            &sel(&["area", "staff"]).with_label(LABEL_COLUMN),
        )
        .unwrap();
        assert_eq!(back, ds);
    }
}
