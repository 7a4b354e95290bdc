//! Input parsing and the stratified data model.
//!
//! Two input shapes are accepted: an individual roster
//! (`discipline,university,gender`, one row per person) and a pre-aggregated
//! department table (`discipline,university,size,women`). Both produce
//! [`DepartmentRecord`]s, which [`build_dataset`] filters and groups into
//! [`Stratum`]s.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_MIN_SIZE: u32 = 3;

/// An exact share `minority / total`.
///
/// Kept as an integer pair so that shares are reproducible bit for bit; the
/// floating-point value is only materialized for pmf evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Share {
    pub minority: u64,
    pub total: u64,
}

impl Share {
    pub fn new(minority: u64, total: u64) -> Self {
        assert!(total > 0 && minority <= total, "invalid share {minority}/{total}");
        Share { minority, total }
    }

    pub fn value(&self) -> f64 {
        self.minority as f64 / self.total as f64
    }

    /// Exact ratio comparison by cross-multiplication.
    pub fn ratio_eq(&self, other: &Share) -> bool {
        self.minority as u128 * other.total as u128 == other.minority as u128 * self.total as u128
    }

    pub fn is_degenerate(&self) -> bool {
        self.minority == 0 || self.minority == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepartmentRecord {
    pub stratum_key: String,
    pub unit_key: String,
    pub size: u32,
    pub minority: u32,
}

impl DepartmentRecord {
    pub fn new(stratum_key: impl Into<String>, unit_key: impl Into<String>, size: u32, minority: u32) -> Self {
        DepartmentRecord { stratum_key: stratum_key.into(), unit_key: unit_key.into(), size, minority }
    }

    fn sort_key(&self) -> (&str, &str) {
        (&self.stratum_key, &self.unit_key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub key: String,
    pub departments: Vec<DepartmentRecord>,
    pub total_size: u64,
    pub total_minority: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

impl Stratum {
    fn from_departments(key: String, departments: Vec<DepartmentRecord>) -> Self {
        let total_size = departments.iter().map(|d| d.size as u64).sum();
        let total_minority = departments.iter().map(|d| d.minority as u64).sum();
        Stratum { key, departments, total_size, total_minority, attributes: BTreeMap::new() }
    }

    pub fn n_units(&self) -> usize {
        self.departments.len()
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.departments.iter().map(|d| d.size).collect()
    }

    pub fn minorities(&self) -> Vec<u32> {
        self.departments.iter().map(|d| d.minority).collect()
    }

    pub fn max_size(&self) -> u32 {
        self.departments.iter().map(|d| d.size).max().unwrap_or(0)
    }

    pub fn mean_size(&self) -> f64 {
        self.total_size as f64 / self.n_units() as f64
    }

    pub fn share(&self) -> Share {
        Share::new(self.total_minority, self.total_size)
    }

    /// Share exactly 0 or 1: every department's count is fixed, so the
    /// stratum carries no information for the tests.
    pub fn is_degenerate(&self) -> bool {
        self.share().is_degenerate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedUnit {
    pub stratum_key: String,
    pub unit_key: String,
    pub size: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub strata: Vec<Stratum>,
    /// Minimum department size applied when the dataset was built.
    pub min_size: u32,
    pub dropped_units: Vec<DroppedUnit>,
}

impl Dataset {
    pub fn n_strata(&self) -> usize {
        self.strata.len()
    }

    pub fn n_departments(&self) -> usize {
        self.strata.iter().map(Stratum::n_units).sum()
    }

    pub fn stratum(&self, key: &str) -> Option<&Stratum> {
        self.strata.iter().find(|s| s.key == key)
    }

    pub fn degenerate_strata(&self) -> Vec<String> {
        self.strata.iter().filter(|s| s.is_degenerate()).map(|s| s.key.clone()).collect()
    }

    /// Strata that enter the test statistics, with their dataset index.
    pub fn active_strata(&self) -> impl Iterator<Item = (usize, &Stratum)> {
        self.strata.iter().enumerate().filter(|(_, s)| !s.is_degenerate())
    }

    /// All department records in canonical order.
    pub fn records(&self) -> impl Iterator<Item = &DepartmentRecord> {
        self.strata.iter().flat_map(|s| s.departments.iter())
    }

    /// Attaches `discipline → {key → value}` attributes. Disciplines not in
    /// the dataset are returned so the caller can warn about them.
    pub fn attach_attributes(&mut self, attributes: BTreeMap<String, BTreeMap<String, String>>) -> Vec<String> {
        let mut unknown = Vec::new();
        for (discipline, map) in attributes {
            match self.strata.iter_mut().find(|s| s.key == discipline) {
                Some(s) => s.attributes.extend(map),
                None => unknown.push(discipline),
            }
        }
        unknown
    }
}

/// The two symbols of the roster's gender column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterFormat {
    pub minority: String,
    pub majority: String,
}

impl Default for RosterFormat {
    fn default() -> Self {
        RosterFormat { minority: "F".into(), majority: "M".into() }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).has_headers(true).from_reader(input)
}

/// Maps each expected column to its position in the header.
fn column_indices<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<Vec<usize>> {
    let headers = rdr.headers()?.clone();
    expected
        .iter()
        .map(|name| {
            headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| {
                Error::input(1, format!("missing column {name:?}; expected header {}", expected.join(",")))
            })
        })
        .collect()
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_count(record: &csv::StringRecord, idx: usize, column: &str) -> Result<u32> {
    let raw = &record[idx];
    raw.parse::<u32>()
        .map_err(|_| Error::input(line_of(record), format!("{column} must be a non-negative integer, got {raw:?}")))
}

fn require_key(record: &csv::StringRecord, idx: usize, column: &str) -> Result<String> {
    let value = &record[idx];
    if value.is_empty() {
        return Err(Error::input(line_of(record), format!("empty {column}")));
    }
    Ok(value.to_string())
}

/// Aggregates an individual roster into one record per (discipline,
/// university), sorted by that pair.
pub fn parse_roster<R: Read>(input: R, format: &RosterFormat) -> Result<Vec<DepartmentRecord>> {
    let mut rdr = reader(input);
    let cols = column_indices(&mut rdr, &["discipline", "university", "gender"])?;
    let mut counts: BTreeMap<(String, String), (u32, u32)> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let discipline = require_key(&row, cols[0], "discipline")?;
        let university = require_key(&row, cols[1], "university")?;
        let gender = &row[cols[2]];
        let is_minority = if gender == format.minority {
            true
        } else if gender == format.majority {
            false
        } else {
            return Err(Error::input(
                line_of(&row),
                format!(
                    "unknown gender symbol {gender:?} (expected {:?} or {:?})",
                    format.minority, format.majority
                ),
            ));
        };
        let entry = counts.entry((discipline, university)).or_default();
        entry.0 += 1;
        entry.1 += is_minority as u32;
    }
    if counts.is_empty() {
        return Err(Error::Empty);
    }
    Ok(counts
        .into_iter()
        .map(|((s, u), (size, minority))| DepartmentRecord::new(s, u, size, minority))
        .collect())
}

/// Reads a department table, preserving file order.
pub fn parse_departments<R: Read>(input: R) -> Result<Vec<DepartmentRecord>> {
    let mut rdr = reader(input);
    let cols = column_indices(&mut rdr, &["discipline", "university", "size", "women"])?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let discipline = require_key(&row, cols[0], "discipline")?;
        let university = require_key(&row, cols[1], "university")?;
        let size = parse_count(&row, cols[2], "size")?;
        let minority = parse_count(&row, cols[3], "women")?;
        if minority > size {
            return Err(Error::input(line, format!("minority exceeds size ({minority} > {size})")));
        }
        if !seen.insert((discipline.clone(), university.clone())) {
            return Err(Error::input(line, format!("duplicate department ({discipline}, {university})")));
        }
        out.push(DepartmentRecord::new(discipline, university, size, minority));
    }
    if out.is_empty() {
        return Err(Error::Empty);
    }
    Ok(out)
}

/// Reads `discipline,key,value` rows into per-discipline attribute maps.
pub fn parse_attributes<R: Read>(input: R) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let mut rdr = reader(input);
    let cols = column_indices(&mut rdr, &["discipline", "key", "value"])?;
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let discipline = require_key(&row, cols[0], "discipline")?;
        let key = require_key(&row, cols[1], "key")?;
        out.entry(discipline).or_default().insert(key, row[cols[2]].to_string());
    }
    Ok(out)
}

/// Filters small departments and assembles strata.
///
/// The result does not depend on the order of `records`.
pub fn build_dataset(records: Vec<DepartmentRecord>, min_size: u32) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::Empty);
    }
    let mut records = records;
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    for pair in records.windows(2) {
        if pair[0].sort_key() == pair[1].sort_key() {
            return Err(Error::invalid(format!(
                "duplicate department ({}, {})",
                pair[0].stratum_key, pair[0].unit_key
            )));
        }
    }
    if let Some(bad) = records.iter().find(|r| r.minority > r.size) {
        return Err(Error::invalid(format!(
            "minority exceeds size for ({}, {})",
            bad.stratum_key, bad.unit_key
        )));
    }

    let mut grouped: BTreeMap<String, Vec<DepartmentRecord>> = BTreeMap::new();
    let mut dropped_units = Vec::new();
    for record in records {
        let kept = grouped.entry(record.stratum_key.clone()).or_default();
        if record.size < min_size {
            dropped_units.push(DroppedUnit {
                stratum_key: record.stratum_key,
                unit_key: record.unit_key,
                size: record.size,
            });
        } else {
            kept.push(record);
        }
    }
    if grouped.values().all(Vec::is_empty) {
        return Err(Error::Degenerate(format!("every department is smaller than the minimum size {min_size}")));
    }
    if let Some((key, _)) = grouped.iter().find(|(_, deps)| deps.is_empty()) {
        return Err(Error::Degenerate(format!(
            "stratum {key:?} has no departments of size >= {min_size}"
        )));
    }

    let strata = grouped.into_iter().map(|(key, deps)| Stratum::from_departments(key, deps)).collect();
    Ok(Dataset { strata, min_size, dropped_units })
}

/// Writes the department table format read by [`parse_departments`].
pub fn write_departments<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["discipline", "university", "size", "women"])?;
    for r in dataset.records() {
        w.write_record([&r.stratum_key, &r.unit_key, &r.size.to_string(), &r.minority.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Expands departments into one roster row per person: minority rows first.
pub fn write_roster<W: Write>(dataset: &Dataset, format: &RosterFormat, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["discipline", "university", "gender"])?;
    for r in dataset.records() {
        for i in 0..r.size {
            let symbol = if i < r.minority { &format.minority } else { &format.majority };
            w.write_record([&r.stratum_key, &r.unit_key, symbol])?;
        }
    }
    w.flush()?;
    Ok(())
}
