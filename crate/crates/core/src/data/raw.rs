use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Continuous,
    /// Value set as declared by the file, when the format declares one.
    Categorical(Option<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Cat(String),
}

/// Parsed table: feature columns, rows of typed fields and 0/1 labels with
/// 1 for the minority class.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Field>>,
    pub labels: Vec<u8>,
    pub minority_token: String,
    pub majority_token: String,
    /// Rows skipped because a field was missing.
    pub dropped_missing: usize,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let minority = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - minority, minority)
    }

    pub fn imbalance_ratio(&self) -> f64 {
        let (maj, min) = self.class_counts();
        maj as f64 / min as f64
    }

    pub fn subset(&self, idx: &[usize]) -> RawDataset {
        RawDataset {
            name: self.name.clone(),
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            minority_token: self.minority_token.clone(),
            majority_token: self.majority_token.clone(),
            dropped_missing: self.dropped_missing,
        }
    }
}

const MISSING: &str = "?";

/// Maps two class tokens to labels: the rarer one becomes 1. On a tie the
/// preferred token (if any) wins, else the first in `order`.
fn assign_labels(
    tokens: &[String],
    order: &[String],
    preferred: Option<&str>,
) -> Result<(Vec<u8>, String, String)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut classes: Vec<&str> = order
        .iter()
        .map(String::as_str)
        .filter(|t| counts.contains_key(t))
        .collect();
    for t in tokens {
        if !classes.contains(&t.as_str()) {
            classes.push(t);
        }
    }
    match classes.len() {
        0 => return Err(Error::Dataset("no labelled rows".into())),
        1 => {
            return Err(Error::Dataset(format!(
                "only one class present ({}); cannot define a minority",
                classes[0]
            )))
        }
        2 => {}
        n => {
            return Err(Error::Dataset(format!(
                "expected a binary label, found {n} classes"
            )))
        }
    }
    let (a, b) = (classes[0], classes[1]);
    let minority = match counts[a].cmp(&counts[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => match preferred {
            Some(p) if p == b => b,
            _ => a,
        },
    };
    let majority = if minority == a { b } else { a };
    let labels = tokens.iter().map(|t| u8::from(t == minority)).collect();
    Ok((labels, minority.to_string(), majority.to_string()))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

#[derive(Debug)]
struct Attribute {
    name: String,
    kind: ColumnKind,
}

fn parse_attribute(rest: &str, path: &Path, line: usize) -> Result<Attribute> {
    let rest = rest.trim();
    let split = rest
        .find(|c: char| c.is_whitespace() || c == '{')
        .ok_or_else(|| parse_err(path, line, "attribute without a type"))?;
    let name = rest[..split].trim_matches('\'').to_string();
    let ty = rest[split..].trim();
    if let Some(body) = ty.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| parse_err(path, line, "unterminated value set"))?;
        let values: Vec<String> = body
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(parse_err(path, line, "empty value set"));
        }
        return Ok(Attribute {
            name,
            kind: ColumnKind::Categorical(Some(values)),
        });
    }
    let word: String = ty.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    match word.to_ascii_lowercase().as_str() {
        "real" | "integer" | "numeric" => Ok(Attribute {
            name,
            kind: ColumnKind::Continuous,
        }),
        other => Err(parse_err(
            path,
            line,
            format!("unknown attribute type '{other}'"),
        )),
    }
}

fn name_list(rest: &str) -> Vec<String> {
    rest.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Reads a KEEL `.dat` file.
///
/// Grammar (one directive per line, `%` starts a comment line):
///
/// ```text
/// @relation <name>
/// @attribute <name> real|integer|numeric [<lo>, <hi>]
/// @attribute <name> {<v1>, <v2>, ...}
/// @inputs <name>, <name>, ...      (optional)
/// @outputs <name>                  (optional; default: last attribute)
/// @data
/// <v>, <v>, ..., <class>
/// ```
///
/// Rows containing `?` are skipped. The label attribute must be categorical
/// with exactly two classes present; the rarer class becomes label 1.
pub fn load_keel_dat(path: &Path) -> Result<RawDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keel(&text, path)
}

pub fn parse_keel(text: &str, path: &Path) -> Result<RawDataset> {
    let mut relation = None;
    let mut attrs: Vec<Attribute> = Vec::new();
    let mut inputs: Option<Vec<String>> = None;
    let mut outputs: Option<Vec<String>> = None;
    let mut data_lines: Vec<(usize, &str)> = Vec::new();
    let mut in_data = false;

    for (i, raw_line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            data_lines.push((lineno, line));
            continue;
        }
        let Some(directive) = line.strip_prefix('@') else {
            return Err(parse_err(
                path,
                lineno,
                "expected a header directive before @data",
            ));
        };
        let (key, rest) = directive.split_at(
            directive
                .find(char::is_whitespace)
                .unwrap_or(directive.len()),
        );
        match key.to_ascii_lowercase().as_str() {
            "relation" => relation = Some(rest.trim().to_string()),
            "attribute" => attrs.push(parse_attribute(rest, path, lineno)?),
            "inputs" => inputs = Some(name_list(rest)),
            "outputs" | "output" => outputs = Some(name_list(rest)),
            "data" => in_data = true,
            other => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("unknown directive @{other}"),
                ))
            }
        }
    }
    if !in_data {
        return Err(parse_err(
            path,
            text.lines().count(),
            "missing @data section",
        ));
    }
    if attrs.len() < 2 {
        return Err(parse_err(
            path,
            1,
            "need at least one input and one output attribute",
        ));
    }
    let find = |name: &str| {
        attrs.iter().position(|a| a.name == name).ok_or_else(|| {
            parse_err(
                path,
                1,
                format!("unknown attribute '{name}' in @inputs/@outputs"),
            )
        })
    };
    let label_idx = match &outputs {
        Some(o) if o.len() == 1 => find(&o[0])?,
        Some(o) => {
            return Err(parse_err(
                path,
                1,
                format!("expected one output attribute, got {}", o.len()),
            ))
        }
        None => attrs.len() - 1,
    };
    let input_idx: Vec<usize> = match &inputs {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
        None => (0..attrs.len()).filter(|&i| i != label_idx).collect(),
    };
    let label_values = match &attrs[label_idx].kind {
        ColumnKind::Categorical(Some(v)) => v.clone(),
        _ => return Err(parse_err(path, 1, "label attribute must be categorical")),
    };

    let mut rows = Vec::with_capacity(data_lines.len());
    let mut tokens = Vec::with_capacity(data_lines.len());
    let mut dropped = 0;
    for (lineno, line) in data_lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != attrs.len() {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} fields, found {}", attrs.len(), fields.len()),
            ));
        }
        if fields.contains(&MISSING) {
            dropped += 1;
            continue;
        }
        let label = fields[label_idx];
        if !label_values.iter().any(|v| v == label) {
            return Err(parse_err(path, lineno, format!("unknown class '{label}'")));
        }
        let mut row = Vec::with_capacity(input_idx.len());
        for &c in &input_idx {
            let f = fields[c];
            row.push(match &attrs[c].kind {
                ColumnKind::Continuous => Field::Num(f.parse::<f64>().map_err(|_| {
                    parse_err(
                        path,
                        lineno,
                        format!("'{f}' is not numeric ({})", attrs[c].name),
                    )
                })?),
                ColumnKind::Categorical(values) => {
                    if values.as_ref().is_some_and(|v| !v.iter().any(|x| x == f)) {
                        return Err(parse_err(
                            path,
                            lineno,
                            format!("unknown category '{f}' for {}", attrs[c].name),
                        ));
                    }
                    Field::Cat(f.to_string())
                }
            });
        }
        rows.push(row);
        tokens.push(label.to_string());
    }
    if rows.is_empty() {
        return Err(Error::Dataset(format!("{}: no data rows", path.display())));
    }
    let (labels, minority_token, majority_token) = assign_labels(&tokens, &label_values, None)?;
    let name = relation.unwrap_or_else(|| {
        path.file_stem().map_or_else(
            || "dataset".to_string(),
            |s| s.to_string_lossy().into_owned(),
        )
    });
    Ok(RawDataset {
        name,
        columns: input_idx
            .iter()
            .map(|&i| Column {
                name: attrs[i].name.clone(),
                kind: attrs[i].kind.clone(),
            })
            .collect(),
        rows,
        labels,
        minority_token,
        majority_token,
        dropped_missing: dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsvColumnType {
    Continuous,
    Categorical,
    Ignore,
}

/// Schema for CSV ingestion. Columns missing from `columns` are inferred:
/// continuous if every present value parses as a number, else categorical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label: String,
    #[serde(default)]
    pub positive: Option<String>,
    #[serde(default)]
    pub columns: BTreeMap<String, CsvColumnType>,
    #[serde(default = "default_missing")]
    pub missing: String,
}

fn default_missing() -> String {
    MISSING.to_string()
}

impl CsvSchema {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            positive: None,
            columns: BTreeMap::new(),
            missing: default_missing(),
        }
    }
}

/// Reads a headered CSV. Rows with a missing value in any used column are
/// dropped. Categorical value sets come from the data at preprocessing time.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Csv(e),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(parse_err(path, 1, "empty file"));
    }
    let label_idx = header
        .iter()
        .position(|h| *h == schema.label)
        .ok_or_else(|| {
            parse_err(
                path,
                1,
                format!("label column '{}' not in header", schema.label),
            )
        })?;
    for name in schema.columns.keys() {
        if !header.contains(name) {
            return Err(parse_err(
                path,
                1,
                format!("schema column '{name}' not in header"),
            ));
        }
    }

    let mut records = Vec::new();
    let mut dropped = 0;
    for (i, rec) in reader.records().enumerate() {
        let lineno = i + 2;
        let rec = rec.map_err(|e| parse_err(path, lineno, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        let used_missing = fields.iter().enumerate().any(|(c, f)| {
            (f == &schema.missing || f.is_empty())
                && schema.columns.get(&header[c]) != Some(&CsvColumnType::Ignore)
        });
        if used_missing {
            dropped += 1;
            continue;
        }
        records.push((lineno, fields));
    }
    if records.is_empty() {
        return Err(parse_err(path, 1, "no complete data rows"));
    }

    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&c| {
            c != label_idx && schema.columns.get(&header[c]) != Some(&CsvColumnType::Ignore)
        })
        .collect();
    let kinds: Vec<CsvColumnType> = feature_idx
        .iter()
        .map(|&c| {
            schema.columns.get(&header[c]).copied().unwrap_or_else(|| {
                if records.iter().all(|(_, f)| f[c].parse::<f64>().is_ok()) {
                    CsvColumnType::Continuous
                } else {
                    CsvColumnType::Categorical
                }
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(records.len());
    let mut tokens = Vec::with_capacity(records.len());
    for (lineno, fields) in &records {
        let mut row = Vec::with_capacity(feature_idx.len());
        for (&c, kind) in feature_idx.iter().zip(&kinds) {
            row.push(match kind {
                CsvColumnType::Continuous => {
                    Field::Num(fields[c].parse::<f64>().map_err(|_| {
                        parse_err(
                            path,
                            *lineno,
                            format!("'{}' is not numeric ({})", fields[c], header[c]),
                        )
                    })?)
                }
                _ => Field::Cat(fields[c].clone()),
            });
        }
        rows.push(row);
        tokens.push(fields[label_idx].clone());
    }
    let order: Vec<String> = schema.positive.iter().cloned().collect();
    let (labels, minority_token, majority_token) =
        assign_labels(&tokens, &order, schema.positive.as_deref())?;
    if let Some(p) = &schema.positive {
        if *p != minority_token {
            log::warn!(
                "{}: positive token '{p}' is not the minority class; using '{minority_token}'",
                path.display()
            );
        }
    }
    Ok(RawDataset {
        name: path.file_stem().map_or_else(
            || "dataset".to_string(),
            |s| s.to_string_lossy().into_owned(),
        ),
        columns: feature_idx
            .iter()
            .zip(&kinds)
            .map(|(&c, k)| Column {
                name: header[c].clone(),
                kind: match k {
                    CsvColumnType::Continuous => ColumnKind::Continuous,
                    _ => ColumnKind::Categorical(None),
                },
            })
            .collect(),
        rows,
        labels,
        minority_token,
        majority_token,
        dropped_missing: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn keel(text: &str) -> Result<RawDataset> {
        parse_keel(text, Path::new("fixture.dat"))
    }

    const FIXTURE: &str = "@relation tiny
@attribute Colour {red, blue}
@attribute Size real [0.0, 10.0]
@attribute Class {positive, negative}
@inputs Colour, Size
@outputs Class
@data
red, 1.5, negative
blue, 2.0, positive
red, 3.0, negative
";

    #[test]
    fn keel_fixture_schema() {
        let ds = keel(FIXTURE).unwrap();
        assert_eq!(ds.name, "tiny");
        assert_eq!(ds.len(), 3);
        assert_eq!(
            ds.columns[0].kind,
            ColumnKind::Categorical(Some(vec!["red".into(), "blue".into()]))
        );
        assert_eq!(ds.columns[1].kind, ColumnKind::Continuous);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.minority_token, "positive");
    }

    #[test]
    fn keel_without_inputs_outputs_and_compact_ranges() {
        let text = "@relation r\n@attribute a real[0.0,88.0]\n@attribute b integer [1, 5]\n@attribute Class  {positive, negative}\n@data\n1, 2, positive\n3, 4, negative\n5, 1, negative\n";
        let ds = keel(text).unwrap();
        assert_eq!(ds.columns.len(), 2);
        assert_eq!(ds.rows[2], vec![Field::Num(5.0), Field::Num(1.0)]);
    }

    #[test]
    fn keel_errors_carry_line_numbers() {
        let bad_arity = FIXTURE.replace("red, 3.0, negative", "red, 3.0");
        match keel(&bad_arity) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
        let bad_token = FIXTURE.replace("blue, 2.0", "green, 2.0");
        assert!(matches!(
            keel(&bad_token),
            Err(Error::Parse { line: 9, .. })
        ));
        let bad_header = FIXTURE.replace("real [0.0, 10.0]", "string");
        assert!(matches!(
            keel(&bad_header),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(keel("@relation x\n@attribute a real\n").is_err());
    }

    #[test]
    fn keel_minority_is_rarer_class_regardless_of_order() {
        let text = FIXTURE.replace("red, 1.5, negative", "red, 1.5, positive");
        let ds = keel(&text).unwrap();
        assert_eq!(ds.minority_token, "negative");
        assert_eq!(ds.labels, vec![0, 0, 1]);
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f =
            tempfile::NamedTempFile::new_in(concat!(env!("CARGO_MANIFEST_DIR"), "/../../target"))
                .unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_drops_missing_and_infers_types() {
        let f = write_csv("age,job,income\n30,clerk,<=50K\n40,?,>50K\n50,chef,>50K\n20,chef,<=50K\n25,clerk,<=50K\n");
        let mut schema = CsvSchema::new("income");
        schema.positive = Some(">50K".into());
        let ds = load_csv(f.path(), &schema).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.dropped_missing, 1);
        assert_eq!(ds.columns[0].kind, ColumnKind::Continuous);
        assert_eq!(ds.columns[1].kind, ColumnKind::Categorical(None));
        assert_eq!(ds.labels, vec![0, 1, 0, 0]);
    }

    #[test]
    fn csv_empty_and_single_class_are_errors() {
        let empty = write_csv("");
        assert!(load_csv(empty.path(), &CsvSchema::new("y")).is_err());
        let one = write_csv("x,y\n1,a\n2,a\n");
        assert!(matches!(
            load_csv(one.path(), &CsvSchema::new("y")),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn csv_tie_prefers_positive_token() {
        let f = write_csv("x,y\n1,a\n2,b\n");
        let mut schema = CsvSchema::new("y");
        schema.positive = Some("b".into());
        let ds = load_csv(f.path(), &schema).unwrap();
        assert_eq!(ds.minority_token, "b");
        assert_eq!(ds.labels, vec![0, 1]);
    }
}
