use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use super::AccuracyOracle;
use crate::arch_space::{parse_nb201_genotype, Architecture, OperationSet, SpaceSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyEntry {
    pub test_acc: f64,
    pub valid_acc: f64,
}

/// How the `arch` column of an input table is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// Canonical strings: `0|1|3|2|4|0` or `normal;reduction` digit matrices.
    Csv,
    /// NAS-Bench-201 genotype strings, `|op~src|+|op~src|op~src|+...`.
    NativeGenotype,
}

/// Tabulated accuracies keyed by dataset, then architecture.
#[derive(Debug, Clone)]
pub struct AccuracyTable {
    space: SpaceSpec,
    data: BTreeMap<String, HashMap<Architecture, AccuracyEntry>>,
}

fn check_range(v: f64) -> Result<f64> {
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::AccuracyOutOfRange(v))
    }
}

impl AccuracyTable {
    pub fn new(space: SpaceSpec) -> Self {
        Self { space, data: BTreeMap::new() }
    }

    pub fn insert(&mut self, arch: Architecture, dataset: &str, entry: AccuracyEntry) -> Result<()> {
        if arch.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        check_range(entry.test_acc)?;
        check_range(entry.valid_acc)?;
        let rows = self.data.entry(dataset.to_string()).or_default();
        if rows.contains_key(&arch) {
            return Err(Error::DuplicateEntry { arch: arch.to_string(), dataset: dataset.to_string() });
        }
        rows.insert(arch, entry);
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, format: TableFormat) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?, format)
    }

    /// Reads `arch,dataset,test_acc,valid_acc` rows; `#` lines are comments.
    ///
    /// The space is inferred from the first row: a `;` marks a DARTS pair,
    /// otherwise the row is an NB201 sequence over the five standard ops.
    pub fn from_reader<R: Read>(reader: R, format: TableFormat) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let expected = ["arch", "dataset", "test_acc", "valid_acc"];
        if header.len() != 4 || header.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::MalformedRow {
                line: 1,
                message: format!("header must be `{}`", expected.join(",")),
            });
        }
        let ops = OperationSet::nb201();
        let mut table: Option<Self> = None;
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let row_err = |e: Error| match e {
                e @ (Error::DuplicateEntry { .. } | Error::UnknownOperation(_)) => e,
                other => Error::MalformedRow { line, message: other.to_string() },
            };
            if record.len() != 4 {
                return Err(Error::MalformedRow { line, message: format!("expected 4 fields, found {}", record.len()) });
            }
            let arch = match format {
                TableFormat::NativeGenotype => Architecture::Nb201(parse_nb201_genotype(&record[0], &ops).map_err(row_err)?),
                TableFormat::Csv => {
                    let space = match &table {
                        Some(t) => t.space,
                        None => infer_space(&record[0]),
                    };
                    Architecture::parse(&record[0], &space).map_err(row_err)?
                }
            };
            let parse_acc = |s: &str| -> Result<f64> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::MalformedRow { line, message: format!("bad accuracy `{s}`") })?;
                check_range(v)
            };
            let entry = AccuracyEntry { test_acc: parse_acc(&record[2])?, valid_acc: parse_acc(&record[3])? };
            let t = table.get_or_insert_with(|| Self::new(arch.space()));
            if arch.space() != t.space {
                return Err(Error::MalformedRow { line, message: "architecture from a different space".into() });
            }
            t.insert(arch, &record[1], entry)?;
        }
        table.ok_or_else(|| Error::MalformedRow { line: 2, message: "table has no rows".into() })
    }

    pub fn datasets(&self) -> impl Iterator<Item = &str> {
        self.data.keys().map(String::as_str)
    }

    pub fn len(&self, dataset: &str) -> usize {
        self.data.get(dataset).map_or(0, HashMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.data.values().all(HashMap::is_empty)
    }

    /// True when every architecture of the space has an entry for `dataset`.
    pub fn is_complete(&self, dataset: &str) -> bool {
        self.len(dataset) as u128 == self.space.count()
    }

    pub fn get(&self, arch: &Architecture, dataset: &str) -> Result<&AccuracyEntry> {
        let rows = self.data.get(dataset).ok_or_else(|| Error::UnknownDataset(dataset.to_string()))?;
        rows.get(arch).ok_or_else(|| Error::MissingArchitecture(arch.to_string()))
    }
}

fn infer_space(arch: &str) -> SpaceSpec {
    if let Some((normal, _)) = arch.split_once(';') {
        let len = normal.trim().len();
        let nodes = (1..=len).find(|m| m * (m + 1) == len).unwrap_or(0);
        SpaceSpec::Darts { nodes, num_ops: 8 }
    } else {
        SpaceSpec::Nb201 { len: arch.split('|').count(), num_ops: 5 }
    }
}

pub fn load_table(path: impl AsRef<Path>, format: TableFormat) -> Result<AccuracyTable> {
    AccuracyTable::load(path, format)
}

impl AccuracyOracle for AccuracyTable {
    fn space(&self) -> SpaceSpec {
        self.space
    }

    fn accuracy(&self, arch: &Architecture, dataset: &str) -> Result<f64> {
        self.get(arch, dataset).map(|e| e.test_acc)
    }

    fn entries(&self, dataset: &str) -> Result<Vec<(Architecture, f64)>> {
        let rows = self.data.get(dataset).ok_or_else(|| Error::UnknownDataset(dataset.to_string()))?;
        let mut out: Vec<(Architecture, f64)> = rows.iter().map(|(a, e)| (a.clone(), e.test_acc)).collect();
        out.sort_by(|x, y| x.0.cmp(&y.0));
        Ok(out)
    }
}
