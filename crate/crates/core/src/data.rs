//! Frequency tables, CSV ingestion, the two reference datasets and
//! descriptive statistics.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TgdError};

/// Count data as sorted `(value, count)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqTable {
    entries: Vec<(u64, u64)>,
    n: u64,
}

impl FreqTable {
    /// Builds a table from `(value, count)` pairs, merging duplicate values
    /// and dropping zero counts.
    pub fn from_counts<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut merged: BTreeMap<u64, u64> = BTreeMap::new();
        for (value, count) in pairs {
            if count > 0 {
                *merged.entry(value).or_default() += count;
            }
        }
        let entries: Vec<(u64, u64)> = merged.into_iter().collect();
        let n: u64 = entries.iter().map(|&(_, c)| c).sum();
        if n == 0 {
            return Err(TgdError::EmptyData);
        }
        if n < 2 {
            return Err(TgdError::InsufficientData(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        Ok(Self { entries, n })
    }

    /// Builds a table from raw observations.
    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        Self::from_counts(samples.iter().map(|&y| (y, 1)))
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn distinct_values(&self) -> usize {
        self.entries.len()
    }

    pub fn max_value(&self) -> u64 {
        self.entries.last().map(|&(v, _)| v).unwrap_or(0)
    }

    pub fn count_of(&self, value: u64) -> u64 {
        self.entries
            .binary_search_by_key(&value, |&(v, _)| v)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Iterator over `(value as f64, count as f64)`.
    pub fn weighted(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.entries.iter().map(|&(v, c)| (v as f64, c as f64))
    }

    pub fn sum(&self) -> f64 {
        self.weighted().map(|(y, c)| y * c).sum()
    }

    /// First raw sample moment.
    pub fn mean(&self) -> f64 {
        self.sum() / self.n_f64()
    }

    /// Second raw sample moment `(1/n) sum y^2`.
    pub fn raw_moment2(&self) -> f64 {
        self.weighted().map(|(y, c)| y * y * c).sum::<f64>() / self.n_f64()
    }

    /// Empirical CDF `P(Y <= t)`.
    pub fn ecdf(&self, t: u64) -> f64 {
        let below: u64 = self
            .entries
            .iter()
            .take_while(|&&(v, _)| v <= t)
            .map(|&(_, c)| c)
            .sum();
        below as f64 / self.n_f64()
    }

    /// Expanded raw sample, sorted.
    pub fn expand(&self) -> Vec<u64> {
        self.entries
            .iter()
            .flat_map(|&(v, c)| std::iter::repeat_n(v, c as usize))
            .collect()
    }

    /// Parses two-column `value,count` CSV. A first row whose first field is
    /// not numeric is treated as a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut pairs = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            let line = idx as u64 + 1;
            let record = record.map_err(|e| TgdError::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(line),
                message: e.to_string(),
            })?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let first = record.get(0).unwrap_or("");
            if idx == 0 && first.parse::<f64>().is_err() {
                continue;
            }
            if record.len() != 2 {
                return Err(TgdError::Parse {
                    line,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let value = parse_int(first, line, "value")?;
            let count = parse_int(&record[1], line, "count")?;
            if value < 0 {
                return Err(TgdError::NegativeValue { line });
            }
            if count <= 0 {
                return Err(TgdError::Parse {
                    line,
                    message: format!("count must be positive, got {count}"),
                });
            }
            pairs.push((value as u64, count as u64));
        }
        if pairs.is_empty() {
            return Err(TgdError::EmptyData);
        }
        Self::from_counts(pairs)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    /// Writes `value,count` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "value,count")?;
        for &(v, c) in &self.entries {
            writeln!(w, "{v},{c}")?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn parse_int(field: &str, line: u64, what: &str) -> Result<i64> {
    field.parse::<i64>().map_err(|_| TgdError::Parse {
        line,
        message: format!("{what} `{field}` is not an integer"),
    })
}

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataSource {
    Embedded,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub name: String,
    pub table: FreqTable,
    pub source: DataSource,
}

/// Forest fires in Greek districts, 1 July to 31 August 1998 (n = 123).
pub const NTG: &[(u64, u64)] = &[
    (0, 16),
    (1, 13),
    (2, 14),
    (3, 9),
    (4, 11),
    (5, 13),
    (6, 8),
    (7, 4),
    (8, 9),
    (9, 6),
    (10, 3),
    (11, 4),
    (12, 6),
    (15, 4),
    (16, 1),
    (20, 1),
    (43, 1),
];

/// Doctor consultations in a two-week period, 1977-78 Australian Health
/// Survey (n = 5190).
pub const DOCTOR_VISIT: &[(u64, u64)] = &[(0, 4141), (1, 782), (2, 174), (3, 30), (4, 24), (5, 39)];

pub const EMBEDDED_NAMES: &[&str] = &["ntg", "doctor_visit"];

pub fn embedded(name: &str) -> Result<Dataset> {
    let rows = match name {
        "ntg" => NTG,
        "doctor_visit" => DOCTOR_VISIT,
        other => return Err(TgdError::UnknownDataset(other.to_string())),
    };
    Ok(Dataset {
        name: name.to_string(),
        table: FreqTable::from_counts(rows.iter().copied())?,
        source: DataSource::Embedded,
    })
}

/// Summary statistics; the variance uses the `n - 1` denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub index_of_dispersion: f64,
    pub max: u64,
}

pub fn describe(data: &FreqTable) -> DescriptiveStats {
    let n = data.n_f64();
    let mean = data.mean();
    let ss: f64 = data.weighted().map(|(y, c)| c * (y - mean).powi(2)).sum();
    let variance = ss / (n - 1.0);
    let index_of_dispersion = if mean > 0.0 { variance / mean } else { 0.0 };
    DescriptiveStats {
        n: data.n(),
        mean,
        variance,
        index_of_dispersion,
        max: data.max_value(),
    }
}
