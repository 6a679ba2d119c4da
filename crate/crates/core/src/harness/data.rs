//! Dataset ingestion: HINT3 CSV pairs, CLINC150 JSON and the normalized
//! JSON Lines format.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved label carried by out-of-scope test rows after parsing.
pub const OOS_LABEL: &str = "__oos__";

/// Marker used by the HINT3 releases for out-of-scope rows.
pub const HINT3_OOS_MARKER: &str = "NO_NODES_DETECTED";

/// Text/label pairs for training and testing. Test rows labeled
/// [`OOS_LABEL`] are out-of-scope; training rows never are.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub train: Vec<(String, String)>,
    pub test: Vec<(String, String)>,
    /// In-scope labels in order of first appearance in `train`.
    pub class_names: Vec<String>,
}

impl RawDataset {
    pub fn new(train: Vec<(String, String)>, test: Vec<(String, String)>) -> Result<Self> {
        let mut class_names: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for (_, label) in &train {
            if label == OOS_LABEL {
                return Err(Error::Dataset("training data contains out-of-scope rows".into()));
            }
            if seen.insert(label.clone()) {
                class_names.push(label.clone());
            }
        }
        if let Some((text, label)) = test.iter().find(|(_, l)| l != OOS_LABEL && !seen.contains(l)) {
            return Err(Error::Dataset(format!(
                "test label `{label}` (text `{text}`) does not appear in training data"
            )));
        }
        Ok(Self {
            train,
            test,
            class_names,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == label)
    }

    pub fn oos_test_count(&self) -> usize {
        self.test.iter().filter(|(_, l)| l == OOS_LABEL).count()
    }
}

fn read_hint3_csv(path: &Path, oos_marker: &str) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, 0, format!("{other:?}")),
        })?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::format(path, 1, format!("missing column `{name}`")))
    };
    let (text_col, label_col) = (column("sentence")?, column("label")?);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let field = |col: usize| {
            record
                .get(col)
                .map(|s| s.trim().to_string())
                .ok_or_else(|| Error::format(path, i + 2, "row is missing a column"))
        };
        let text = field(text_col)?;
        let mut label = field(label_col)?;
        if label == oos_marker {
            label = OOS_LABEL.to_string();
        }
        rows.push((text, label));
    }
    Ok(rows)
}

/// Parses a HINT3 train/test pair of CSV files with `sentence,label` columns.
pub fn parse_hint3_files(train: &Path, test: &Path, oos_marker: &str) -> Result<RawDataset> {
    let train_rows = read_hint3_csv(train, oos_marker)?;
    if train_rows.iter().any(|(_, l)| l == OOS_LABEL) {
        return Err(Error::Dataset(format!(
            "{}: training file contains `{oos_marker}` rows",
            train.display()
        )));
    }
    RawDataset::new(train_rows, read_hint3_csv(test, oos_marker)?)
}

/// Parses a HINT3 dataset directory holding one `*train*.csv` and one
/// `*test*.csv` file.
pub fn parse_hint3(dir: &Path, oos_marker: &str) -> Result<RawDataset> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut csvs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    csvs.sort();
    let pick = |needle: &str| -> Result<PathBuf> {
        let found: Vec<&PathBuf> = csvs
            .iter()
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.to_ascii_lowercase().contains(needle))
            })
            .collect();
        match found.as_slice() {
            [one] => Ok((*one).clone()),
            [] => Err(Error::Dataset(format!("{}: no *{needle}*.csv file", dir.display()))),
            _ => Err(Error::Dataset(format!("{}: several *{needle}*.csv files", dir.display()))),
        }
    };
    parse_hint3_files(&pick("train")?, &pick("test")?, oos_marker)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClincOptions {
    /// Add the `val` split to the training data.
    pub include_validation: bool,
    /// Fail when `oos_test` is empty.
    pub require_oos: bool,
}

impl Default for ClincOptions {
    fn default() -> Self {
        Self {
            include_validation: false,
            require_oos: true,
        }
    }
}

#[derive(Deserialize)]
struct ClincFile {
    train: Option<Vec<(String, String)>>,
    val: Option<Vec<(String, String)>>,
    test: Option<Vec<(String, String)>>,
    oos_test: Option<Vec<(String, String)>>,
}

/// Parses the CLINC150 JSON layout (`train`, `test`, `oos_test` arrays of
/// `[text, label]` pairs; the `val`/`oos_val`/`oos_train` splits are ignored
/// unless requested).
pub fn parse_clinc150(path: &Path, options: ClincOptions) -> Result<RawDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ClincFile = serde_json::from_str(&text)
        .map_err(|e| Error::format(path, e.line(), format!("malformed CLINC150 JSON: {e}")))?;
    let missing = |split: &str| Error::Dataset(format!("{}: missing split `{split}`", path.display()));
    let mut train = file.train.ok_or_else(|| missing("train"))?;
    if options.include_validation {
        train.extend(file.val.ok_or_else(|| missing("val"))?);
    }
    let mut test = file.test.ok_or_else(|| missing("test"))?;
    let oos = file.oos_test.ok_or_else(|| missing("oos_test"))?;
    if options.require_oos && oos.is_empty() {
        return Err(Error::Dataset(format!("{}: `oos_test` is empty", path.display())));
    }
    test.extend(oos.into_iter().map(|(t, _)| (t, OOS_LABEL.to_string())));
    RawDataset::new(train, test)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlRow {
    text: String,
    label: String,
    split: String,
}

/// Parses the normalized format: one `{"text", "label", "split"}` object per
/// line, `split` being `train` or `test` and OOS rows labeled [`OOS_LABEL`].
pub fn parse_jsonl(path: &Path) -> Result<RawDataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow =
            serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        match row.split.as_str() {
            "train" => train.push((row.text, row.label)),
            "test" => test.push((row.text, row.label)),
            other => return Err(Error::format(path, i + 1, format!("unknown split `{other}`"))),
        }
    }
    RawDataset::new(train, test)
}

pub fn write_jsonl(data: &RawDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (split, rows) in [("train", &data.train), ("test", &data.test)] {
        for (text, label) in rows {
            let row = JsonlRow {
                text: text.clone(),
                label: label.clone(),
                split: split.into(),
            };
            out.push_str(&serde_json::to_string(&row)?);
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DatasetFormat {
    Hint3,
    Clinc150,
    Jsonl,
}

pub fn load_dataset(path: &Path, format: DatasetFormat, oos_marker: &str) -> Result<RawDataset> {
    match format {
        DatasetFormat::Hint3 => parse_hint3(path, oos_marker),
        DatasetFormat::Clinc150 => parse_clinc150(path, ClincOptions::default()),
        DatasetFormat::Jsonl => parse_jsonl(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn hint3_class_order_and_oos_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let train = write(dir.path(), "x_train.csv", "sentence,label\nhello there,a\nbye now,b\n");
        let test = write(
            dir.path(),
            "x_test.csv",
            "sentence,label\nhi,a\nwhat is this,NO_NODES_DETECTED\n",
        );
        let data = parse_hint3_files(&train, &test, HINT3_OOS_MARKER).unwrap();
        assert_eq!(data.class_names, vec!["a", "b"]);
        assert_eq!(data.test[1].1, OOS_LABEL);
        let from_dir = parse_hint3(dir.path(), HINT3_OOS_MARKER).unwrap();
        assert_eq!(from_dir, data);
    }

    #[test]
    fn hint3_rejects_oos_in_train_and_missing_columns() {
        let dir = tempfile::tempdir().unwrap();
        let train = write(dir.path(), "train.csv", "sentence,label\nhello,a\nnoise,NO_NODES_DETECTED\n");
        let test = write(dir.path(), "test.csv", "sentence,label\nhi,a\n");
        assert!(matches!(
            parse_hint3_files(&train, &test, HINT3_OOS_MARKER),
            Err(Error::Dataset(_))
        ));
        let bad = write(dir.path(), "bad.csv", "text,intent\nhello,a\n");
        assert!(parse_hint3_files(&bad, &test, HINT3_OOS_MARKER).is_err());
    }

    #[test]
    fn hint3_custom_marker() {
        let dir = tempfile::tempdir().unwrap();
        let train = write(dir.path(), "train.csv", "sentence,label\nhello,a\nbye,b\n");
        let test = write(dir.path(), "test.csv", "sentence,label\nzzz,OOS\n");
        let data = parse_hint3_files(&train, &test, "OOS").unwrap();
        assert_eq!(data.oos_test_count(), 1);
    }

    #[test]
    fn unknown_test_label_is_rejected() {
        let r = RawDataset::new(vec![("a".into(), "x".into())], vec![("b".into(), "y".into())]);
        assert!(r.is_err());
    }

    #[test]
    fn clinc_minimal() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"train": [["book a flight", "travel"], ["play music", "music"], ["fly me", "travel"]],
                       "val": [["flight please", "travel"]],
                       "test": [["a song", "music"]],
                       "oos_test": [["how tall is a giraffe", "oos"], ["bake bread", "oos"]],
                       "oos_val": [], "oos_train": []}"#;
        let path = write(dir.path(), "data_full.json", body);
        let data = parse_clinc150(&path, ClincOptions::default()).unwrap();
        assert_eq!(data.train.len(), 3);
        assert_eq!(data.test.len(), 3);
        assert_eq!(data.class_names, vec!["travel", "music"]);
        assert_eq!(data.oos_test_count(), 2);

        let with_val = parse_clinc150(
            &path,
            ClincOptions {
                include_validation: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(with_val.train.len(), 4);
    }

    #[test]
    fn clinc_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty_oos = write(
            dir.path(),
            "a.json",
            r#"{"train": [["x", "a"], ["y", "b"]], "test": [["x", "a"]], "oos_test": []}"#,
        );
        assert!(parse_clinc150(&empty_oos, ClincOptions::default()).is_err());
        assert!(parse_clinc150(
            &empty_oos,
            ClincOptions {
                require_oos: false,
                ..Default::default()
            }
        )
        .is_ok());
        let missing = write(dir.path(), "b.json", r#"{"train": [["x", "a"]]}"#);
        assert!(parse_clinc150(&missing, ClincOptions::default()).is_err());
        let malformed = write(dir.path(), "c.json", "{not json");
        assert!(matches!(
            parse_clinc150(&malformed, ClincOptions::default()),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = RawDataset::new(
            vec![("hello".into(), "greet".into()), ("bye".into(), "leave".into())],
            vec![("hey".into(), "greet".into()), ("pizza?".into(), OOS_LABEL.into())],
        )
        .unwrap();
        let path = dir.path().join("d.jsonl");
        write_jsonl(&data, &path).unwrap();
        assert_eq!(parse_jsonl(&path).unwrap(), data);
    }
}
