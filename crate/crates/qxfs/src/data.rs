//! Tabular data loading, preprocessing, splitting and sub-views.
//!
//! Every optimizer in this crate sees the same representation: an immutable
//! numeric matrix with integer class labels. Loading stages raw (possibly
//! categorical or missing) cells; `preprocess` encodes, imputes and shuffles
//! them into a [`Dataset`]; `split` produces the 60/20/20 partition; `view`
//! restricts rows and columns by bit mask.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bitmask::BitMask;
use crate::error::{Error, Result};

/// Cells treated as missing values when loading delimiter-separated files.
const MISSING_TOKENS: [&str; 3] = ["", "?", "NA"];

/// How to pick the label column out of the header.
#[derive(Debug, Clone)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { delimiter: b',' }
    }
}

/// Raw cells as loaded from disk, staged for [`preprocess`]. `None` marks a
/// missing value.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub cells: Vec<Vec<Option<String>>>,
    pub labels: Vec<Option<String>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Immutable numeric matrix with class labels. All invariants (finite
/// values, labels below `n_classes`, nonempty shape) are checked on
/// construction and hold for every view derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>, // row-major n x k
    n: usize,
    k: usize,
    labels: Vec<u32>,
    feature_names: Vec<String>,
    n_classes: usize,
}

impl Dataset {
    pub fn from_parts(
        values: Vec<f64>,
        n: usize,
        k: usize,
        labels: Vec<u32>,
        feature_names: Vec<String>,
        n_classes: usize,
    ) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::NoRows);
        }
        if values.len() != n * k || labels.len() != n || feature_names.len() != k {
            return Err(Error::InvalidConfig(format!(
                "inconsistent dataset shape: {} values, {} labels, {} names for n={n}, k={k}",
                values.len(),
                labels.len(),
                feature_names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if n_classes == 0 || labels.iter().any(|&l| l as usize >= n_classes) {
            return Err(Error::InvalidConfig(format!(
                "label out of range for n_classes={n_classes}"
            )));
        }
        Ok(Dataset {
            values,
            n,
            k,
            labels,
            feature_names,
            n_classes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.k
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.k + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.k..(row + 1) * self.k]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

/// The 60/20/20 partition used by every experiment.
#[derive(Debug, Clone)]
pub struct SplitSet {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Load a delimiter-separated file with a header row. Cells equal to one of
/// `""`, `"?"` or `"NA"` are staged as missing.
pub fn load_dataset<P: AsRef<Path>>(
    path: P,
    label: &LabelColumn,
    options: &LoadOptions,
) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::FileRead {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = match label {
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::LabelColumnNotFound(name.clone()))?,
        LabelColumn::Index(i) => {
            if *i >= header.len() {
                return Err(Error::LabelColumnNotFound(i.to_string()));
            }
            *i
        }
    };

    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::InvalidConfig(
            "file has a label column but no feature columns".into(),
        ));
    }

    let mut cells = Vec::new();
    let mut labels = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row: row_idx + 1,
                got: record.len(),
                expected: header.len(),
            });
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (i, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let staged = if MISSING_TOKENS.contains(&cell) {
                None
            } else {
                Some(cell.to_string())
            };
            if i == label_idx {
                labels.push(staged.clone());
            } else {
                row.push(staged);
            }
        }
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(Error::NoRows);
    }
    Ok(RawTable {
        feature_names,
        cells,
        labels,
    })
}

/// Column content after type detection, still with missing slots.
enum TypedColumn {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<usize>>),
}

/// Encode, impute and shuffle a raw table into a [`Dataset`].
///
/// Categorical columns get lexicographic integer codes; missing numeric
/// cells take the column mean, missing categorical cells the column mode
/// (ties broken lexicographically). Rows are then shuffled by the seeded
/// permutation so later splits see no file order.
pub fn preprocess(raw: &RawTable, seed: u64) -> Result<Dataset> {
    let n = raw.n_rows();
    let k = raw.n_features();
    if n == 0 {
        return Err(Error::NoRows);
    }

    let mut columns = Vec::with_capacity(k);
    for col in 0..k {
        let raw_cells: Vec<Option<&str>> = (0..n).map(|r| raw.cells[r][col].as_deref()).collect();
        if raw_cells.iter().all(|c| c.is_none()) {
            return Err(Error::AllMissingColumn(raw.feature_names[col].clone()));
        }
        let numeric = raw_cells
            .iter()
            .flatten()
            .all(|c| c.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false));
        if numeric {
            let parsed = raw_cells
                .iter()
                .map(|c| c.map(|s| s.parse::<f64>().expect("checked numeric")))
                .collect();
            columns.push(TypedColumn::Numeric(parsed));
        } else {
            let mut distinct: Vec<&str> = raw_cells.iter().flatten().copied().collect();
            distinct.sort_unstable();
            distinct.dedup();
            let code_of = |s: &str| distinct.binary_search(&s).expect("value seen") ;
            let coded = raw_cells.iter().map(|c| c.map(code_of)).collect();
            columns.push(TypedColumn::Categorical(coded));
        }
    }

    // impute into the final numeric matrix, still in file order
    let mut values = vec![0.0f64; n * k];
    for (col, typed) in columns.iter().enumerate() {
        match typed {
            TypedColumn::Numeric(cells) => {
                let present: Vec<f64> = cells.iter().flatten().copied().collect();
                let mean = present.iter().sum::<f64>() / present.len() as f64;
                for (row, cell) in cells.iter().enumerate() {
                    values[row * k + col] = cell.unwrap_or(mean);
                }
            }
            TypedColumn::Categorical(cells) => {
                let max_code = cells.iter().flatten().max().copied().unwrap_or(0);
                let mut counts = vec![0usize; max_code + 1];
                for code in cells.iter().flatten() {
                    counts[*code] += 1;
                }
                // lexicographic codes make the smallest code the lexicographic tie-winner
                let mode = counts
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(code, _)| code)
                    .unwrap_or(0);
                for (row, cell) in cells.iter().enumerate() {
                    values[row * k + col] = cell.unwrap_or(mode) as f64;
                }
            }
        }
    }

    // labels: lexicographic class codes, missing labels are an error
    let mut distinct_labels: Vec<&str> = Vec::new();
    for (row, l) in raw.labels.iter().enumerate() {
        match l {
            Some(s) => distinct_labels.push(s),
            None => return Err(Error::MissingLabel(row)),
        }
    }
    distinct_labels.sort_unstable();
    distinct_labels.dedup();
    let labels: Vec<u32> = raw
        .labels
        .iter()
        .map(|l| {
            distinct_labels
                .binary_search(&l.as_deref().expect("checked above"))
                .expect("value seen") as u32
        })
        .collect();
    let n_classes = distinct_labels.len();

    // seeded shuffle of row order
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut shuffled_values = Vec::with_capacity(n * k);
    let mut shuffled_labels = Vec::with_capacity(n);
    for &row in &order {
        shuffled_values.extend_from_slice(&values[row * k..(row + 1) * k]);
        shuffled_labels.push(labels[row]);
    }

    Dataset::from_parts(
        shuffled_values,
        n,
        k,
        shuffled_labels,
        raw.feature_names.clone(),
        n_classes,
    )
}

/// Deterministic 60/20/20 partition after a seeded shuffle.
///
/// Sizes are `floor(0.6 n)` / `floor(0.2 n)` / remainder, computed with
/// integer arithmetic so counts are bit-reproducible.
pub fn split(d: &Dataset, seed: u64) -> Result<SplitSet> {
    let n = d.n_rows();
    if n < 5 {
        return Err(Error::TooFewRows(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train = n * 6 / 10;
    let n_val = n * 2 / 10;
    let take = |rows: &[usize]| -> Result<Dataset> {
        let mask = BitMask::from_indices(n, rows);
        view(d, None, Some(&mask))
    };
    Ok(SplitSet {
        train: take(&order[..n_train])?,
        validation: take(&order[n_train..n_train + n_val])?,
        test: take(&order[n_train + n_val..])?,
    })
}

/// Column/row sub-dataset selected by bit masks (`None` keeps everything).
/// Label alignment and original column order are preserved.
pub fn view(d: &Dataset, features: Option<&BitMask>, instances: Option<&BitMask>) -> Result<Dataset> {
    if let Some(f) = features {
        if f.len() != d.n_features() {
            return Err(Error::MaskLength {
                expected: d.n_features(),
                got: f.len(),
            });
        }
        if f.popcount() == 0 {
            return Err(Error::EmptyFeatureMask);
        }
    }
    if let Some(i) = instances {
        if i.len() != d.n_rows() {
            return Err(Error::MaskLength {
                expected: d.n_rows(),
                got: i.len(),
            });
        }
        if i.popcount() == 0 {
            return Err(Error::EmptyInstanceMask);
        }
    }

    let cols: Vec<usize> = match features {
        Some(f) => f.ones_indices(),
        None => (0..d.n_features()).collect(),
    };
    let rows: Vec<usize> = match instances {
        Some(i) => i.ones_indices(),
        None => (0..d.n_rows()).collect(),
    };

    let mut values = Vec::with_capacity(rows.len() * cols.len());
    let mut labels = Vec::with_capacity(rows.len());
    for &r in &rows {
        for &c in &cols {
            values.push(d.value(r, c));
        }
        labels.push(d.labels()[r]);
    }
    let names = cols.iter().map(|&c| d.feature_names()[c].clone()).collect();
    Dataset::from_parts(values, rows.len(), cols.len(), labels, names, d.n_classes())
}
