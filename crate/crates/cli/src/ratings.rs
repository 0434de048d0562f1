//! Ratings CSV ingestion. The header must be exactly
//! `condition_id,user_id,rating`.

use std::io::Read;
use std::path::{Path, PathBuf};

use mosci_core::{RatingSample, Scale};

use crate::{CliError, Result};

pub const HEADER: [&str; 3] = ["condition_id", "user_id", "rating"];

/// Ratings of one condition, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionRatings {
    pub id: String,
    pub users: Vec<String>,
    pub ratings: Vec<u32>,
}

impl ConditionRatings {
    pub fn sample(&self, scale: Scale) -> Result<RatingSample> {
        Ok(RatingSample::from_ratings(scale, &self.ratings)?)
    }
}

pub fn read_ratings(path: &Path, scale: Scale) -> Result<Vec<ConditionRatings>> {
    let file =
        std::fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_ratings(file, path, scale)
}

/// Parses ratings; conditions keep the order of their first appearance.
pub fn parse_ratings<R: Read>(reader: R, path: &Path, scale: Scale) -> Result<Vec<ConditionRatings>> {
    let row_err = |line: u64, message: String| CliError::Row { path: PathBuf::from(path), line, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| row_err(1, e.to_string()))?,
        None => return Err(CliError::Input(format!("{}: empty ratings file", path.display()))),
    };
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(row_err(1, format!("header must be '{}'", HEADER.join(","))));
    }

    let mut conditions: Vec<ConditionRatings> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(row_err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let (id, user, raw) = (record[0].trim(), record[1].trim(), record[2].trim());
        if id.is_empty() {
            return Err(row_err(line, "empty condition_id".into()));
        }
        let rating: u32 =
            raw.parse().map_err(|_| row_err(line, format!("rating '{raw}' is not a positive integer")))?;
        if !scale.contains(rating) {
            return Err(row_err(line, format!("rating {rating} outside the scale 1..={}", scale.k())));
        }
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            conditions.push(ConditionRatings { id: id.to_string(), users: Vec::new(), ratings: Vec::new() });
            conditions.len() - 1
        });
        conditions[slot].users.push(user.to_string());
        conditions[slot].ratings.push(rating);
    }
    if conditions.is_empty() {
        return Err(CliError::Input(format!("{}: no rating records", path.display())));
    }
    Ok(conditions)
}
