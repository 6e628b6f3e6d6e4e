//! JSON-lines manifest plus CSV/TSV table files.
//!
//! Each manifest line is `{"id": .., "path": .., "dialect": "csv"|"tsv", "header": bool}`.
//! Relative paths resolve against the manifest's directory.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{label_counts, normalize_label, Column, LabelVocabulary, Table};
use crate::error::{Error, Result};

/// Cell spellings treated as missing. They load as the empty string.
pub const NULL_TOKENS: &[&str] = &["", "null", "none", "na", "n/a", "nan"];

pub fn is_null_token(cell: &str) -> bool {
    let t = cell.trim();
    NULL_TOKENS.iter().any(|n| t.eq_ignore_ascii_case(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    #[default]
    Csv,
    Tsv,
}

impl Dialect {
    fn delimiter(self) -> u8 {
        match self {
            Dialect::Csv => b',',
            Dialect::Tsv => b'\t',
        }
    }
}

fn default_header() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub dialect: Dialect,
    #[serde(default = "default_header")]
    pub header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Labels seen fewer times are dropped together with their columns.
    pub min_count: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { min_count: 1 }
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

fn read_table(record: &ManifestRecord, base: &Path) -> Result<Table> {
    let path = if record.path.is_absolute() {
        record.path.clone()
    } else {
        base.join(&record.path)
    };
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(record.dialect.delimiter())
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_slice());

    let row_err = |row: usize, message: String| Error::TableRow {
        table: record.id.clone(),
        row,
        message,
    };

    let mut header: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<String>> = Vec::new();
    let mut width = None;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| row_err(row + 1, e.to_string()))?;
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(row_err(
                row + 1,
                format!("expected {expected} fields, found {}", rec.len()),
            ));
        }
        if row == 0 && record.header {
            header = Some(rec.iter().map(str::to_string).collect());
            columns = vec![Vec::new(); expected];
            continue;
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); expected];
        }
        for (c, cell) in rec.iter().enumerate() {
            let cell = if is_null_token(cell) { "" } else { cell };
            columns[c].push(cell.to_string());
        }
    }

    let invalid = |message: String| Error::InvalidTable {
        table: record.id.clone(),
        message,
    };
    if columns.is_empty() || columns[0].is_empty() {
        return Err(invalid("no data rows".into()));
    }
    let columns: Vec<Column> = columns
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            if values.iter().all(String::is_empty) {
                return Err(invalid(format!("column {i} has only empty or null cells")));
            }
            let label = header
                .as_ref()
                .map(|h| normalize_label(&h[i]))
                .filter(|l| !l.is_empty());
            Ok(Column { label, values })
        })
        .collect::<Result<_>>()?;
    Table::new(record.id.clone(), columns)
}

/// Loads every table in the manifest without any label filtering.
pub fn load_tables(manifest_path: &Path) -> Result<Vec<Table>> {
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let records = read_manifest(manifest_path)?;
    if records.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "manifest {} lists no tables",
            manifest_path.display()
        )));
    }
    crate::parallel::try_map(&records, |r| read_table(r, base))
}

/// A labeled corpus: tables plus the vocabulary of labels that survived the
/// frequency filter.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub tables: Vec<Table>,
    pub vocabulary: LabelVocabulary,
}

/// Loads and filters a labeled corpus. Unlabeled columns and labels seen
/// fewer than `min_count` times are dropped; tables left without columns go too.
pub fn load_corpus(manifest_path: &Path, options: &LoadOptions) -> Result<Corpus> {
    let tables = load_tables(manifest_path)?;
    let counts = label_counts(&tables);
    let keep = |c: &Column| {
        c.label
            .as_ref()
            .is_some_and(|l| counts.get(l).copied().unwrap_or(0) >= options.min_count)
    };
    let tables: Vec<Table> = tables
        .into_iter()
        .filter_map(|t| {
            let columns: Vec<Column> = t.columns.into_iter().filter(|c| keep(c)).collect();
            (!columns.is_empty()).then_some(Table { id: t.id, columns })
        })
        .collect();
    if tables.is_empty() {
        return Err(Error::EmptyCorpus(
            "no labeled columns survive the frequency filter".into(),
        ));
    }
    let vocabulary = LabelVocabulary::from_tables(&tables, 1)?;
    Ok(Corpus { tables, vocabulary })
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `manifest.jsonl` and one CSV per table under `dir`. A header row
/// is written only when every column carries a label.
pub fn save_corpus(dir: &Path, tables: &[Table]) -> Result<PathBuf> {
    let table_dir = dir.join("tables");
    fs::create_dir_all(&table_dir).map_err(|e| Error::io(&table_dir, e))?;
    let manifest_path = dir.join("manifest.jsonl");
    let mut manifest = Vec::new();
    for (i, t) in tables.iter().enumerate() {
        let rel = PathBuf::from("tables").join(format!("{:05}_{}.csv", i, file_stem(&t.id)));
        let header = t.columns.iter().all(|c| c.label.is_some());
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        if header {
            w.write_record(t.columns.iter().map(|c| c.label.as_deref().unwrap_or("")))?;
        }
        for r in 0..t.rows() {
            w.write_record(t.columns.iter().map(|c| c.values[r].as_str()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io(dir.join(&rel), e.into_error()))?;
        fs::write(dir.join(&rel), bytes).map_err(|e| Error::io(dir.join(&rel), e))?;
        let rec = ManifestRecord {
            id: t.id.clone(),
            path: rel,
            dialect: Dialect::Csv,
            header,
        };
        serde_json::to_writer(&mut manifest, &rec)?;
        manifest.push(b'\n');
    }
    let mut f = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    f.write_all(&manifest)
        .map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn loads_two_tables_and_builds_vocabulary() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "a.csv",
            "Player,Team,Year\nbob,reds,1990\nann,blues,1991\n",
        );
        write(dir.path(), "b.tsv", "team\tYEAR\nreds\t2000\n");
        write(
            dir.path(),
            "m.jsonl",
            "{\"id\":\"a\",\"path\":\"a.csv\"}\n{\"id\":\"b\",\"path\":\"b.tsv\",\"dialect\":\"tsv\"}\n",
        );
        let c = load_corpus(&dir.path().join("m.jsonl"), &LoadOptions::default()).unwrap();
        assert_eq!(c.tables.len(), 2);
        assert_eq!(c.vocabulary.labels(), &["player", "team", "year"]);
        assert!(c.vocabulary.len() <= 5);

        let c2 = load_corpus(&dir.path().join("m.jsonl"), &LoadOptions { min_count: 2 }).unwrap();
        assert_eq!(c2.vocabulary.labels(), &["team", "year"]);
        assert_eq!(c2.tables[0].width(), 2);
    }

    #[test]
    fn arity_error_names_table_and_row() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "x,y\n1,2\n3\n");
        write(
            dir.path(),
            "m.jsonl",
            "{\"id\":\"bad\",\"path\":\"a.csv\"}\n",
        );
        let err = load_tables(&dir.path().join("m.jsonl")).unwrap_err();
        match err {
            Error::TableRow { table, row, .. } => {
                assert_eq!(table, "bad");
                assert_eq!(row, 3);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn null_cells_and_empty_columns() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "x,y\n1,NULL\n2,n/a\n");
        write(dir.path(), "b.csv", "x,y\n1,NA\n,3\n");
        write(dir.path(), "m.jsonl", "{\"id\":\"a\",\"path\":\"a.csv\"}\n");
        write(dir.path(), "n.jsonl", "{\"id\":\"b\",\"path\":\"b.csv\"}\n");
        assert!(matches!(
            load_tables(&dir.path().join("m.jsonl")),
            Err(Error::InvalidTable { .. })
        ));
        let t = load_tables(&dir.path().join("n.jsonl")).unwrap();
        assert_eq!(t[0].columns[1].values, vec!["", "3"]);
    }

    #[test]
    fn missing_and_empty_inputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_tables(&dir.path().join("nope.jsonl")),
            Err(Error::Io { .. })
        ));
        write(dir.path(), "m.jsonl", "\n");
        assert!(matches!(
            load_tables(&dir.path().join("m.jsonl")),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn save_then_load_round_trips() {
        let tables = vec![
            Table::new(
                "t one",
                vec![
                    Column::new(Some("a"), vec!["x, \"quoted\"".into(), "".into()]),
                    Column::new(Some("b"), vec!["1".into(), "2".into()]),
                ],
            )
            .unwrap(),
            Table::new(
                "t2",
                vec![
                    Column::new(Some("b"), vec!["3".into()]),
                    Column::new(Some("c"), vec!["z".into()]),
                ],
            )
            .unwrap(),
        ];
        let dir = tempfile::tempdir().unwrap();
        let m = save_corpus(dir.path(), &tables).unwrap();
        let c = load_corpus(&m, &LoadOptions::default()).unwrap();
        assert_eq!(c.tables, tables);
        assert_eq!(
            c.vocabulary,
            LabelVocabulary::from_tables(&tables, 1).unwrap()
        );

        let headerless: Vec<Table> = tables.iter().map(Table::without_labels).collect();
        let dir2 = tempfile::tempdir().unwrap();
        let m2 = save_corpus(dir2.path(), &headerless).unwrap();
        assert_eq!(load_tables(&m2).unwrap(), headerless);
    }
}
