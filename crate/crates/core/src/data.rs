//! Datasets, synthetic generation, CSV ingestion and train/validation/test
//! splitting.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Feature matrix (row-major) plus target vector and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    target: Vec<f64>,
    feature_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    /// Builds a dataset from row vectors, validating shape and finiteness.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        target: Vec<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let p = feature_names.len();
        let mut flat = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::validation(
                    "features",
                    format!("row {i} has {} values, expected {p}", row.len()),
                ));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(flat, target, feature_names, target_name)
    }

    /// Builds a dataset from a row-major feature buffer.
    pub fn from_flat(
        features: Vec<f64>,
        target: Vec<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let p = feature_names.len();
        let n = target.len();
        if features.len() != n * p {
            return Err(Error::validation(
                "features",
                format!("{} values for {n} rows x {p} features", features.len()),
            ));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(
                "features",
                format!("non-finite value in row {}", i / p.max(1)),
            ));
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(
                "target",
                format!("non-finite value in row {i}"),
            ));
        }
        Ok(Self {
            features,
            target,
            feature_names,
            target_name: target_name.into(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.features[i * p..(i + 1) * p]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.n_features() + feature]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, feature)).collect()
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features());
        let mut target = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            target.push(self.target[i]);
        }
        Dataset {
            features,
            target,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }

    /// Writes `features..., target` with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(File::create(path)?);
        self.write_csv_to(&mut file)?;
        file.flush()?;
        Ok(())
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.target_name);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for (i, row) in self.rows().enumerate() {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(self.target[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spreadsheet-style column label: A..Z, AA, AB, ...
pub fn feature_label(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Target is a fixed linear combination of standard-normal features plus a
/// number of hidden standard-normal addends that are not exposed as features.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub coefficients: Vec<f64>,
    pub noise_terms: usize,
    pub n_points: usize,
    pub feature_mu: f64,
    pub feature_sigma: f64,
}

impl SyntheticSpec {
    pub fn new(coefficients: Vec<f64>, noise_terms: usize, n_points: usize) -> Self {
        Self {
            coefficients,
            noise_terms,
            n_points,
            feature_mu: 0.0,
            feature_sigma: 1.0,
        }
    }

    /// `2A + 3B + ... + 9H`, optionally with hidden noise terms.
    pub fn weighted_linear(noise_terms: usize, n_points: usize) -> Self {
        Self::new((2..=9).map(f64::from).collect(), noise_terms, n_points)
    }

    /// `A + B + ... + H`.
    pub fn unit_linear(n_points: usize) -> Self {
        Self::new(vec![1.0; 8], 0, n_points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() {
            return Err(Error::validation("coefficients", "must not be empty"));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("coefficients", "must be finite"));
        }
        if self.n_points == 0 {
            return Err(Error::validation("n_points", "must be at least 1"));
        }
        if !(self.feature_sigma > 0.0 && self.feature_sigma.is_finite()) {
            return Err(Error::validation("feature_sigma", "must be positive"));
        }
        if !self.feature_mu.is_finite() {
            return Err(Error::validation("feature_mu", "must be finite"));
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let p = spec.coefficients.len();
    let mut rng = RngStream::new(seed);
    let mut features = Vec::with_capacity(spec.n_points * p);
    let mut target = Vec::with_capacity(spec.n_points);
    for _ in 0..spec.n_points {
        let mut y = 0.0;
        for &coef in &spec.coefficients {
            let z: f64 = rng.sample(StandardNormal);
            let x = spec.feature_mu + spec.feature_sigma * z;
            features.push(x);
            y += coef * x;
        }
        for _ in 0..spec.noise_terms {
            let n: f64 = rng.sample(StandardNormal);
            y += n;
        }
        target.push(y);
    }
    let names = (0..p).map(feature_label).collect();
    Dataset::from_flat(features, target, names, "target")
}

/// Result of reading a CSV: the dataset plus how many rows were discarded.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

fn parse_cell(cell: &str) -> Option<f64> {
    let v: f64 = cell.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, records))
}

fn column_index(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            path: path.to_path_buf(),
        })
}

/// Reads a headed CSV. Categorical columns are one-hot expanded into
/// `col=level` indicators (levels sorted); rows with missing or unparseable
/// cells are dropped and counted.
pub fn load_csv(path: &Path, target_column: &str, categorical_columns: &[String]) -> Result<CsvLoad> {
    let (header, records) = read_table(path)?;
    let target_idx = column_index(&header, target_column, path)?;
    let mut categorical = vec![false; header.len()];
    for name in categorical_columns {
        let idx = column_index(&header, name, path)?;
        if idx == target_idx {
            return Err(Error::validation(
                "categorical_columns",
                format!("target column `{name}` cannot be categorical"),
            ));
        }
        categorical[idx] = true;
    }

    // First pass: keep rows where every cell is usable.
    let mut kept: Vec<&csv::StringRecord> = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for rec in &records {
        let ok = rec.len() == header.len()
            && (0..header.len()).all(|j| {
                let cell = rec.get(j).unwrap_or("").trim();
                if categorical[j] {
                    !cell.is_empty()
                } else {
                    parse_cell(cell).is_some()
                }
            });
        if ok {
            kept.push(rec);
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} row(s) with missing or unparseable cells", path.display());
    }
    if kept.is_empty() {
        return Err(Error::NoRows {
            path: path.to_path_buf(),
            dropped,
        });
    }

    let levels: HashMap<usize, Vec<String>> = (0..header.len())
        .filter(|&j| categorical[j])
        .map(|j| {
            let set: BTreeSet<String> = kept
                .iter()
                .map(|r| r.get(j).unwrap_or("").trim().to_string())
                .collect();
            (j, set.into_iter().collect())
        })
        .collect();

    let mut names = Vec::new();
    for (j, h) in header.iter().enumerate() {
        if j == target_idx {
            continue;
        }
        match levels.get(&j) {
            Some(ls) => names.extend(ls.iter().map(|l| format!("{h}={l}"))),
            None => names.push(h.clone()),
        }
    }

    let mut features = Vec::with_capacity(kept.len() * names.len());
    let mut target = Vec::with_capacity(kept.len());
    for rec in kept {
        for j in 0..header.len() {
            let cell = rec.get(j).unwrap_or("").trim();
            if j == target_idx {
                target.push(parse_cell(cell).expect("checked"));
            } else if let Some(ls) = levels.get(&j) {
                features.extend(ls.iter().map(|l| if l == cell { 1.0 } else { 0.0 }));
            } else {
                features.push(parse_cell(cell).expect("checked"));
            }
        }
    }
    let dataset = Dataset::from_flat(features, target, names, target_column)?;
    Ok(CsvLoad {
        dataset,
        dropped_rows: dropped,
    })
}

/// Reads a CSV against a fixed feature schema (e.g. a trained model's).
///
/// Each feature name resolves to a numeric column of that name, or, for a
/// `col=level` name, to an indicator over column `col`. The target is read
/// when `target_column` is given and present; `has_target` reports whether it
/// was. Without a target the returned dataset holds zeros in its place.
pub fn load_csv_with_schema(
    path: &Path,
    feature_names: &[String],
    target_column: Option<&str>,
) -> Result<(CsvLoad, bool)> {
    enum Source {
        Numeric(usize),
        Indicator(usize, String),
    }
    let (header, records) = read_table(path)?;
    let mut sources = Vec::with_capacity(feature_names.len());
    for name in feature_names {
        if let Some(j) = header.iter().position(|h| h == name) {
            sources.push(Source::Numeric(j));
            continue;
        }
        let resolved = name.split_once('=').and_then(|(col, level)| {
            header
                .iter()
                .position(|h| h == col)
                .map(|j| Source::Indicator(j, level.to_string()))
        });
        match resolved {
            Some(s) => sources.push(s),
            None => {
                return Err(Error::MissingColumn {
                    column: name.clone(),
                    path: path.to_path_buf(),
                })
            }
        }
    }
    let target_idx = target_column.and_then(|t| header.iter().position(|h| h == t));

    let mut features = Vec::with_capacity(records.len() * feature_names.len());
    let mut target = Vec::with_capacity(records.len());
    let mut dropped = 0;
    let mut row = Vec::with_capacity(feature_names.len());
    'rows: for rec in &records {
        row.clear();
        for s in &sources {
            let v = match s {
                Source::Numeric(j) => parse_cell(rec.get(*j).unwrap_or("")),
                Source::Indicator(j, level) => {
                    let cell = rec.get(*j).unwrap_or("").trim();
                    (!cell.is_empty()).then(|| if cell == level { 1.0 } else { 0.0 })
                }
            };
            match v {
                Some(v) => row.push(v),
                None => {
                    dropped += 1;
                    continue 'rows;
                }
            }
        }
        let y = match target_idx {
            Some(j) => match parse_cell(rec.get(j).unwrap_or("")) {
                Some(v) => v,
                None => {
                    dropped += 1;
                    continue 'rows;
                }
            },
            None => 0.0,
        };
        features.extend_from_slice(&row);
        target.push(y);
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} row(s) with missing or unparseable cells", path.display());
    }
    let target_name = target_column.unwrap_or("target");
    let dataset = Dataset::from_flat(features, target, feature_names.to_vec(), target_name)?;
    Ok((
        CsvLoad {
            dataset,
            dropped_rows: dropped,
        },
        target_idx.is_some(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn train_test(train_fraction: f64, seed: u64) -> Self {
        Self {
            train_fraction,
            validation_fraction: 0.0,
            test_fraction: 1.0 - train_fraction,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("train_fraction", self.train_fraction),
            ("validation_fraction", self.validation_fraction),
            ("test_fraction", self.test_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(field, format!("{v} not in [0, 1]")));
            }
        }
        let sum = self.train_fraction + self.validation_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation("fractions", format!("sum to {sum}, not 1")));
        }
        if self.train_fraction <= 0.0 {
            return Err(Error::validation("train_fraction", "must be positive"));
        }
        if self.test_fraction <= 0.0 {
            return Err(Error::validation("test_fraction", "must be positive"));
        }
        Ok(())
    }

    /// Partition sizes for `n` rows: validation and test are floored, the
    /// training partition takes the remainder.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let take = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
        let n_val = take(self.validation_fraction);
        let n_test = take(self.test_fraction);
        (n.saturating_sub(n_val + n_test), n_val, n_test)
    }
}

#[derive(Debug, Clone)]
pub struct Partitions {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    /// Original row indices of each partition (ascending).
    pub indices: [Vec<usize>; 3],
}

pub fn split_dataset(data: &Dataset, spec: &SplitSpec) -> Result<Partitions> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let n = data.n_rows();
    let (n_train, n_val, n_test) = spec.counts(n);
    for (name, count, frac) in [
        ("train", n_train, spec.train_fraction),
        ("validation", n_val, spec.validation_fraction),
        ("test", n_test, spec.test_fraction),
    ] {
        if frac > 0.0 && count == 0 {
            return Err(Error::EmptyPartition(name));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = RngStream::new(spec.seed);
    order.shuffle(&mut rng);
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Partitions {
        train: data.select(&train),
        validation: data.select(&val),
        test: data.select(&test),
        indices: [train, val, test],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn labels() {
        assert_eq!(feature_label(0), "A");
        assert_eq!(feature_label(7), "H");
        assert_eq!(feature_label(25), "Z");
        assert_eq!(feature_label(26), "AA");
        assert_eq!(feature_label(27), "AB");
    }

    #[test]
    fn synthetic_shape_and_target() {
        let spec = SyntheticSpec::weighted_linear(0, 100);
        let d = generate_synthetic(&spec, 1).unwrap();
        assert_eq!(d.n_rows(), 100);
        assert_eq!(d.n_features(), 8);
        assert_eq!(d.feature_names()[7], "H");
        for (i, row) in d.rows().enumerate() {
            let y: f64 = row.iter().zip(2..=9).map(|(x, c)| x * c as f64).sum();
            assert!((y - d.target()[i]).abs() < 1e-12);
        }
        // all-ones row gives the coefficient sum
        let ones: f64 = spec.coefficients.iter().sum();
        assert_eq!(ones, 44.0);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec::weighted_linear(3, 500);
        assert_eq!(generate_synthetic(&spec, 9).unwrap(), generate_synthetic(&spec, 9).unwrap());
        assert_ne!(generate_synthetic(&spec, 9).unwrap(), generate_synthetic(&spec, 10).unwrap());
    }

    #[test]
    fn synthetic_noise_variance() {
        let spec = SyntheticSpec::weighted_linear(3, 50_000);
        let d = generate_synthetic(&spec, 4).unwrap();
        let resid: Vec<f64> = d
            .rows()
            .zip(d.target())
            .map(|(row, y)| y - row.iter().zip(&spec.coefficients).map(|(x, c)| x * c).sum::<f64>())
            .collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((2.8..=3.2).contains(&var), "variance {var}");
    }

    #[test]
    fn synthetic_feature_moments() {
        let d = generate_synthetic(&SyntheticSpec::unit_linear(50_000), 11).unwrap();
        for j in 0..d.n_features() {
            let col = d.column(j);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!(mean.abs() <= 0.02, "mean {mean}");
            assert!((0.98..=1.02).contains(&sd), "sd {sd}");
        }
    }

    #[test]
    fn synthetic_rejects_bad_spec() {
        let mut spec = SyntheticSpec::unit_linear(10);
        spec.coefficients.clear();
        let err = generate_synthetic(&spec, 0).unwrap_err();
        assert!(err.to_string().contains("coefficients"));
        let spec = SyntheticSpec::unit_linear(0);
        assert!(generate_synthetic(&spec, 0).unwrap_err().to_string().contains("n_points"));
        let mut spec = SyntheticSpec::unit_linear(3);
        spec.feature_sigma = 0.0;
        assert!(generate_synthetic(&spec, 0).unwrap_err().to_string().contains("feature_sigma"));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        let err = Dataset::from_rows(vec![vec![f64::NAN]], vec![1.0], vec!["a".into()], "y");
        assert!(err.is_err());
        let err = Dataset::from_rows(vec![vec![1.0]], vec![f64::INFINITY], vec!["a".into()], "y");
        assert!(err.is_err());
        let err = Dataset::from_rows(vec![vec![1.0, 2.0]], vec![1.0], vec!["a".into()], "y");
        assert!(err.is_err());
    }

    #[test]
    fn csv_basic() {
        let f = tmp_csv("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let load = load_csv(f.path(), "y", &[]).unwrap();
        assert_eq!(load.dataset.n_rows(), 3);
        assert_eq!(load.dataset.n_features(), 2);
        assert_eq!(load.dataset.feature_names(), ["a", "b"]);
        assert_eq!(load.dataset.target(), [3.0, 6.0, 9.0]);
        assert_eq!(load.dropped_rows, 0);
    }

    #[test]
    fn csv_one_hot() {
        let f = tmp_csv("season,t,y\n1,0.5,3\n2,0.1,6\n1,0.2,9\n");
        let load = load_csv(f.path(), "y", &["season".to_string()]).unwrap();
        let d = load.dataset;
        assert_eq!(d.feature_names(), ["season=1", "season=2", "t"]);
        assert_eq!(d.row(0), [1.0, 0.0, 0.5]);
        assert_eq!(d.row(1), [0.0, 1.0, 0.1]);
    }

    #[test]
    fn csv_drops_incomplete_rows() {
        let mut text = String::from("a,b,y\n");
        for i in 0..10 {
            if i == 4 {
                text.push_str("1,,2\n");
            } else {
                text.push_str(&format!("{i},{},{}\n", i * 2, i * 3));
            }
        }
        let f = tmp_csv(&text);
        let load = load_csv(f.path(), "y", &[]).unwrap();
        assert_eq!(load.dataset.n_rows(), 9);
        assert_eq!(load.dropped_rows, 1);
    }

    #[test]
    fn csv_errors_are_distinct() {
        let missing = load_csv(Path::new("/nonexistent/x.csv"), "y", &[]).unwrap_err();
        assert!(matches!(missing, Error::MissingFile(_)));
        let f = tmp_csv("a,b\n1,2\n");
        assert!(matches!(load_csv(f.path(), "y", &[]).unwrap_err(), Error::MissingColumn { .. }));
        let f = tmp_csv("a,y\nx,1\n2,\n");
        assert!(matches!(load_csv(f.path(), "y", &[]).unwrap_err(), Error::NoRows { dropped: 2, .. }));
    }

    #[test]
    fn csv_roundtrip_and_schema_load() {
        let d = generate_synthetic(&SyntheticSpec::unit_linear(20), 3).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = load_csv(f.path(), "target", &[]).unwrap().dataset;
        assert_eq!(back, d);
        let names: Vec<String> = vec!["C".into(), "A".into()];
        let (load, has_target) = load_csv_with_schema(f.path(), &names, Some("target")).unwrap();
        assert!(has_target);
        assert_eq!(load.dataset.row(5), [d.value(5, 2), d.value(5, 0)]);
        let (_, has_target) = load_csv_with_schema(f.path(), &names, Some("nope")).unwrap();
        assert!(!has_target);
    }

    #[test]
    fn schema_load_indicators() {
        let f = tmp_csv("season,y\n2,1\n3,2\n");
        let names = vec!["season=1".to_string(), "season=2".to_string()];
        let (load, _) = load_csv_with_schema(f.path(), &names, Some("y")).unwrap();
        assert_eq!(load.dataset.row(0), [0.0, 1.0]);
        assert_eq!(load.dataset.row(1), [0.0, 0.0]);
    }

    fn toy(n: usize) -> Dataset {
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        Dataset::from_rows(rows, (0..n).map(|i| i as f64).collect(), vec!["x".into()], "y").unwrap()
    }

    #[test]
    fn split_counts() {
        let d = toy(10);
        let p = split_dataset(&d, &SplitSpec::train_test(0.8, 1)).unwrap();
        assert_eq!((p.train.n_rows(), p.validation.n_rows(), p.test.n_rows()), (8, 0, 2));
        let spec = SplitSpec {
            train_fraction: 0.6,
            validation_fraction: 0.2,
            test_fraction: 0.2,
            seed: 1,
        };
        let p = split_dataset(&d, &spec).unwrap();
        assert_eq!((p.train.n_rows(), p.validation.n_rows(), p.test.n_rows()), (6, 2, 2));
        let mut all: Vec<usize> = p.indices.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_remainder_goes_to_train() {
        let d = toy(11);
        let p = split_dataset(&d, &SplitSpec::train_test(0.8, 1)).unwrap();
        assert_eq!((p.train.n_rows(), p.test.n_rows()), (9, 2));
    }

    #[test]
    fn split_deterministic() {
        let d = toy(50);
        let a = split_dataset(&d, &SplitSpec::train_test(0.8, 5)).unwrap();
        let b = split_dataset(&d, &SplitSpec::train_test(0.8, 5)).unwrap();
        assert_eq!(a.indices, b.indices);
        let c = split_dataset(&d, &SplitSpec::train_test(0.8, 6)).unwrap();
        assert_ne!(a.indices, c.indices);
    }

    #[test]
    fn split_errors() {
        let d = toy(2);
        let spec = SplitSpec {
            train_fraction: 0.6,
            validation_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
        };
        assert!(matches!(split_dataset(&d, &spec).unwrap_err(), Error::EmptyPartition(_)));
        let bad = SplitSpec {
            train_fraction: 0.5,
            validation_fraction: 0.0,
            test_fraction: 0.2,
            seed: 0,
        };
        assert!(split_dataset(&toy(10), &bad).is_err());
        assert!(split_dataset(&toy(10), &SplitSpec::train_test(1.0, 0)).is_err());
        assert!(matches!(
            split_dataset(&toy(0), &SplitSpec::train_test(0.8, 0)).unwrap_err(),
            Error::Empty(_)
        ));
    }
}
