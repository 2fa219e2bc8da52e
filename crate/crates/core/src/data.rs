//! Time-series tables, dataset descriptions, chronological splits and
//! walk-forward folds.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use indexmap::IndexMap;
use thiserror::Error;

/// Name of the lagged-target column added by [`attach_target_lag`].
pub const TARGET_LAG_COLUMN: &str = "Target_Tminus1";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing timestamp column `{0}`")]
    MissingTimestampColumn(String),
    #[error("unparseable timestamp `{value}` on data row {row}")]
    BadTimestamp { row: usize, value: String },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("description/column mismatch: {0}")]
    DescriptionMismatch(String),
    #[error("target column `{0}` is missing or not numeric")]
    BadTarget(String),
    #[error("column `{name}` has {got} rows, expected {expected}")]
    LengthMismatch {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("timestamps are not sorted ascending at row {0}")]
    Unsorted(usize),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("column `{0}` already exists")]
    ColumnCollision(String),
    #[error("invalid split fractions: test={test}, validation={val}")]
    BadFractions { test: f64, val: f64 },
    #[error("need at least 3 distinct dates to split, found {0}")]
    TooFewDates(usize),
    #[error("cannot build {folds} walk-forward folds over {rows} evaluation rows")]
    TooManyFolds { folds: usize, rows: usize },
    #[error("walk-forward folds need at least one training row before the evaluation region")]
    NoHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Numeric => f.write_str("numeric"),
            ColumnKind::Categorical => f.write_str("categorical"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Missing values are NaN.
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Column::Numeric(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&[String]> {
        match self {
            Column::Categorical(v) => Some(v),
            Column::Numeric(_) => None,
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

/// Column names and kinds, in frame order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    columns: Vec<(String, ColumnKind)>,
}

impl Schema {
    pub fn new(columns: Vec<(String, ColumnKind)>) -> Self {
        Self { columns }
    }

    pub fn kind_of(&self, name: &str) -> Option<ColumnKind> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.kind_of(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ColumnKind)> {
        self.columns.iter().map(|(n, k)| (n.as_str(), *k))
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// A timestamp-indexed columnar table with a designated numeric target.
///
/// Timestamps are non-decreasing: several rows may share a date (one per
/// entity in panel data such as per-symbol prices). Rows sharing a timestamp
/// keep their file order.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame {
    timestamps: Vec<i64>,
    columns: IndexMap<String, Column>,
    target: String,
    horizon: usize,
}

impl TimeFrame {
    pub fn new(
        timestamps: Vec<i64>,
        columns: Vec<(String, Column)>,
        target: impl Into<String>,
        horizon: usize,
    ) -> Result<Self, DataError> {
        let target = target.into();
        if horizon == 0 {
            return Err(DataError::ZeroHorizon);
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(DataError::Unsorted(i + 1));
        }
        let m = timestamps.len();
        let mut map = IndexMap::with_capacity(columns.len());
        for (name, col) in columns {
            if col.len() != m {
                return Err(DataError::LengthMismatch {
                    name,
                    got: col.len(),
                    expected: m,
                });
            }
            if map.contains_key(&name) {
                return Err(DataError::DuplicateColumn(name));
            }
            map.insert(name, col);
        }
        match map.get(&target) {
            Some(Column::Numeric(_)) => {}
            _ => return Err(DataError::BadTarget(target)),
        }
        Ok(Self {
            timestamps,
            columns: map,
            target,
            horizon,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn target_name(&self) -> &str {
        &self.target
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn target(&self) -> &[f64] {
        self.numeric(&self.target)
            .expect("target checked numeric at construction")
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).and_then(Column::as_numeric)
    }

    pub fn categorical(&self, name: &str) -> Option<&[String]> {
        self.columns.get(name).and_then(Column::as_categorical)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.columns.iter().map(|(n, c)| (n.as_str(), c))
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn schema(&self) -> Schema {
        Schema::new(
            self.columns
                .iter()
                .map(|(n, c)| (n.clone(), c.kind()))
                .collect(),
        )
    }

    /// Categorical columns, usable as `by=` grouping keys.
    pub fn group_keys(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|(_, c)| c.kind() == ColumnKind::Categorical)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// Numeric columns other than the target: the model's base features.
    pub fn base_feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|(n, c)| c.kind() == ColumnKind::Numeric && **n != self.target)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Returns a copy with one extra column appended.
    pub fn with_column(&self, name: impl Into<String>, column: Column) -> Result<Self, DataError> {
        let name = name.into();
        if self.columns.contains_key(&name) {
            return Err(DataError::ColumnCollision(name));
        }
        if column.len() != self.len() {
            return Err(DataError::LengthMismatch {
                name,
                got: column.len(),
                expected: self.len(),
            });
        }
        let mut out = self.clone();
        out.columns.insert(name, column);
        Ok(out)
    }

    /// Copy restricted to a contiguous row range.
    pub fn slice_rows(&self, rows: Range<usize>) -> Self {
        let idx: Vec<usize> = rows.collect();
        self.select_rows(&idx)
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), c.select(rows)))
                .collect(),
            target: self.target.clone(),
            horizon: self.horizon,
        }
    }

    /// Row ranges of each distinct timestamp, in order.
    pub fn date_blocks(&self) -> Vec<Range<usize>> {
        date_blocks(&self.timestamps)
    }
}

fn date_blocks(ts: &[i64]) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=ts.len() {
        if i == ts.len() || ts[i] != ts[start] {
            if i > start {
                blocks.push(start..i);
            }
            start = i;
        }
    }
    blocks
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDescription {
    pub name: String,
    pub dtype: String,
    pub has_nan: bool,
    pub description: String,
}

/// Free-text task description plus one metadata line per column.
///
/// File format: a prose header, then lines of the form
/// `name (type, nan=yes|no): description`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetDescription {
    pub header: String,
    pub entries: Vec<ColumnDescription>,
    text: String,
}

impl DatasetDescription {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut header_lines = Vec::new();
        let mut entries: Vec<ColumnDescription> = Vec::new();
        for line in text.lines() {
            match parse_description_line(line) {
                Some(entry) => {
                    if entries.iter().any(|e| e.name == entry.name) {
                        return Err(DataError::DescriptionMismatch(format!(
                            "column `{}` described twice",
                            entry.name
                        )));
                    }
                    entries.push(entry);
                }
                None if entries.is_empty() => header_lines.push(line),
                None if line.trim().is_empty() => {}
                None => {
                    return Err(DataError::DescriptionMismatch(format!(
                        "malformed column line: {line}"
                    )))
                }
            }
        }
        Ok(Self {
            header: header_lines.join("\n").trim().to_string(),
            entries,
            text: text.trim_end().to_string(),
        })
    }

    /// The description as it is substituted into prompts.
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn entry(&self, name: &str) -> Option<&ColumnDescription> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Appends an entry (and its rendered line) unless the column is already described.
    pub fn push_entry(&mut self, entry: ColumnDescription) {
        if self.entry(&entry.name).is_some() {
            return;
        }
        let line = format!(
            "{} ({}, nan={}): {}",
            entry.name,
            entry.dtype,
            if entry.has_nan { "yes" } else { "no" },
            entry.description
        );
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        self.text.push_str(&line);
        self.entries.push(entry);
    }
}

fn parse_description_line(line: &str) -> Option<ColumnDescription> {
    let line = line.trim();
    let open = line.find(" (")?;
    let name = &line[..open];
    if name.is_empty() || name.contains(char::is_whitespace) {
        return None;
    }
    let rest = &line[open + 2..];
    let close = rest.find("):")?;
    let meta = &rest[..close];
    let description = rest[close + 2..].trim();
    let (dtype, nan) = meta.split_once(',')?;
    let has_nan = match nan.trim() {
        "nan=yes" => true,
        "nan=no" => false,
        _ => return None,
    };
    Some(ColumnDescription {
        name: name.to_string(),
        dtype: dtype.trim().to_string(),
        has_nan,
        description: description.to_string(),
    })
}

fn kind_for_dtype(dtype: &str) -> ColumnKind {
    match dtype.to_ascii_lowercase().as_str() {
        "categorical" | "category" | "string" | "str" | "text" | "object" => {
            ColumnKind::Categorical
        }
        _ => ColumnKind::Numeric,
    }
}

/// Settings for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub timestamp_column: String,
    pub target_column: String,
    pub horizon: usize,
}

/// Parses an ISO-8601 date/datetime or an integer epoch into seconds.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| {
        d.and_hms_opt(0, 0, 0)
            .expect("midnight is valid")
            .and_utc()
            .timestamp()
    })
}

fn read_text(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a CSV file and its description. Rows are stably sorted by timestamp.
///
/// Column kinds come from the description's data types; unparseable numeric
/// cells become NaN.
pub fn load_csv(
    path: &Path,
    description_path: &Path,
    options: &CsvOptions,
) -> Result<(TimeFrame, DatasetDescription), DataError> {
    let description = DatasetDescription::parse(&read_text(description_path)?)?;
    let frame = read_csv(&read_text(path)?, &description, options)?;
    Ok((frame, description))
}

/// [`load_csv`] over in-memory text.
pub fn read_csv(
    csv_text: &str,
    description: &DatasetDescription,
    options: &CsvOptions,
) -> Result<TimeFrame, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateColumn(h.clone()));
        }
    }
    let ts_idx = headers
        .iter()
        .position(|h| *h == options.timestamp_column)
        .ok_or_else(|| DataError::MissingTimestampColumn(options.timestamp_column.clone()))?;

    for h in headers.iter().filter(|h| **h != options.timestamp_column) {
        if description.entry(h).is_none() {
            return Err(DataError::DescriptionMismatch(format!(
                "column `{h}` has no description entry"
            )));
        }
    }
    for e in &description.entries {
        if !headers.contains(&e.name) {
            return Err(DataError::DescriptionMismatch(format!(
                "described column `{}` not present in data",
                e.name
            )));
        }
    }

    let mut timestamps = Vec::new();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let ts = record.get(ts_idx).unwrap_or("");
        timestamps.push(parse_timestamp(ts).ok_or_else(|| DataError::BadTimestamp {
            row: row + 1,
            value: ts.to_string(),
        })?);
        for (j, cell) in record.iter().enumerate().take(headers.len()) {
            raw[j].push(cell.to_string());
        }
        for col in raw.iter_mut().skip(record.len()) {
            col.push(String::new());
        }
    }

    let mut order: Vec<usize> = (0..timestamps.len()).collect();
    order.sort_by_key(|&i| timestamps[i]);

    let mut columns = Vec::with_capacity(headers.len() - 1);
    for (j, name) in headers.iter().enumerate() {
        if j == ts_idx {
            continue;
        }
        let kind = description
            .entry(name)
            .map(|e| kind_for_dtype(&e.dtype))
            .unwrap_or(ColumnKind::Numeric);
        let column = match kind {
            ColumnKind::Numeric => Column::Numeric(
                order
                    .iter()
                    .map(|&i| raw[j][i].parse::<f64>().unwrap_or(f64::NAN))
                    .collect(),
            ),
            ColumnKind::Categorical => {
                Column::Categorical(order.iter().map(|&i| raw[j][i].clone()).collect())
            }
        };
        columns.push((name.clone(), column));
    }
    let timestamps = order.iter().map(|&i| timestamps[i]).collect();
    TimeFrame::new(
        timestamps,
        columns,
        options.target_column.clone(),
        options.horizon,
    )
}

/// Adds `Target_Tminus1`: the target shifted forward by the horizon, NaN for
/// the first `horizon` rows.
pub fn attach_target_lag(frame: &TimeFrame) -> Result<TimeFrame, DataError> {
    let h = frame.horizon();
    let y = frame.target();
    let lagged = (0..y.len())
        .map(|t| if t >= h { y[t - h] } else { f64::NAN })
        .collect();
    frame.with_column(TARGET_LAG_COLUMN, Column::Numeric(lagged))
}

/// Row boundaries of the train / validation / test regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_end: usize,
    pub validation_end: usize,
    pub test_end: usize,
    pub fold_count: usize,
}

impl SplitSpec {
    pub fn train(&self) -> Range<usize> {
        0..self.train_end
    }

    pub fn validation(&self) -> Range<usize> {
        self.train_end..self.validation_end
    }

    pub fn test(&self) -> Range<usize> {
        self.validation_end..self.test_end
    }
}

pub const DEFAULT_FOLD_COUNT: usize = 5;

/// Splits on distinct dates: the final `test_frac` of dates for testing and
/// the preceding `val_frac` for validation. Each region gets at least one date.
pub fn chronological_split(
    frame: &TimeFrame,
    test_frac: f64,
    val_frac: f64,
) -> Result<SplitSpec, DataError> {
    let valid = |f: f64| f.is_finite() && f > 0.0;
    if !valid(test_frac) || !valid(val_frac) || test_frac + val_frac >= 1.0 {
        return Err(DataError::BadFractions {
            test: test_frac,
            val: val_frac,
        });
    }
    let blocks = frame.date_blocks();
    let d = blocks.len();
    if d < 3 {
        return Err(DataError::TooFewDates(d));
    }
    let n_test = ((d as f64 * test_frac).round() as usize).max(1);
    let n_val = ((d as f64 * val_frac).round() as usize).max(1);
    if n_test + n_val >= d {
        return Err(DataError::TooFewDates(d));
    }
    let first_val = d - n_test - n_val;
    let first_test = d - n_test;
    Ok(SplitSpec {
        train_end: blocks[first_val].start,
        validation_end: blocks[first_test].start,
        test_end: frame.len(),
        fold_count: DEFAULT_FOLD_COUNT,
    })
}

/// One walk-forward step: train on `train`, predict `eval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Range<usize>,
    pub eval: Range<usize>,
}

/// Expanding-window folds over `rows`: the region `eval_start..rows.end` is
/// cut into `fold_count` contiguous blocks (earlier blocks take the extra
/// rows) and fold k trains on everything from `rows.start` up to block k.
pub fn walk_forward_folds(
    rows: Range<usize>,
    eval_start: usize,
    fold_count: usize,
) -> Result<Vec<Fold>, DataError> {
    let units: Vec<Range<usize>> = (eval_start..rows.end).map(|i| i..i + 1).collect();
    folds_over_units(rows.start, eval_start, &units, fold_count)
}

/// Like [`walk_forward_folds`] but fold boundaries fall on date boundaries of
/// `frame`, so rows sharing a timestamp are never split across train/eval.
pub fn date_aligned_folds(
    frame: &TimeFrame,
    rows: Range<usize>,
    eval_start: usize,
    fold_count: usize,
) -> Result<Vec<Fold>, DataError> {
    let units: Vec<Range<usize>> = frame
        .date_blocks()
        .into_iter()
        .filter(|b| b.start >= eval_start && b.end <= rows.end)
        .collect();
    folds_over_units(rows.start, eval_start, &units, fold_count)
}

fn folds_over_units(
    history_start: usize,
    eval_start: usize,
    units: &[Range<usize>],
    fold_count: usize,
) -> Result<Vec<Fold>, DataError> {
    let n = units.len();
    if fold_count == 0 || fold_count > n {
        return Err(DataError::TooManyFolds {
            folds: fold_count,
            rows: units.iter().map(|u| u.len()).sum(),
        });
    }
    if eval_start <= history_start {
        return Err(DataError::NoHistory);
    }
    let base = n / fold_count;
    let extra = n % fold_count;
    let mut folds = Vec::with_capacity(fold_count);
    let mut next = 0;
    for k in 0..fold_count {
        let size = base + usize::from(k < extra);
        let block = &units[next..next + size];
        let eval = block[0].start..block[size - 1].end;
        folds.push(Fold {
            train: history_start..eval.start,
            eval,
        });
        next += size;
    }
    Ok(folds)
}
