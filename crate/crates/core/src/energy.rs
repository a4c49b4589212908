//! Per-revision energy profiles and consecutive-revision deltas.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vcs::RevisionId;

/// Ordered per-revision mean power readings.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub entries: Vec<ProfileEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub revision: RevisionId,
    pub mean_watts: f64,
}

/// Change in mean power attributed to the latter revision of a consecutive
/// pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDelta {
    pub revision: RevisionId,
    pub delta_watts: f64,
}

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("profile is missing the `revision,mean_watts` header")]
    MissingHeader,
    #[error("profile line {line}: {problem}")]
    BadRow { line: usize, problem: String },
    #[error("profile line {line}: duplicate revision {revision}")]
    DuplicateRevision { line: usize, revision: String },
    #[error("profile has {len} entries; at least 2 are required to compute deltas")]
    TooShort { len: usize },
    #[error("failed to read profile: {0}")]
    Io(#[from] std::io::Error),
}

impl EnergyProfile {
    pub fn revisions(&self) -> Vec<RevisionId> {
        self.entries.iter().map(|e| e.revision.clone()).collect()
    }
}

/// Parses a `revision,mean_watts` CSV. Rows must appear in revision order;
/// watt values must be finite and positive.
pub fn load_profile<R: Read>(reader: R) -> Result<EnergyProfile, EnergyError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    {
        let headers = csv.headers().map_err(|e| EnergyError::BadRow {
            line: 1,
            problem: e.to_string(),
        })?;
        let cols: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
        if cols != ["revision", "mean_watts"] {
            return Err(EnergyError::MissingHeader);
        }
    }
    let mut entries = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, row) in csv.records().enumerate() {
        let line = idx + 2; // header is line 1
        let row = row.map_err(|e| EnergyError::BadRow {
            line,
            problem: e.to_string(),
        })?;
        if row.len() != 2 {
            return Err(EnergyError::BadRow {
                line,
                problem: format!("expected 2 fields, found {}", row.len()),
            });
        }
        let revision = row[0].trim().to_string();
        if revision.is_empty() {
            return Err(EnergyError::BadRow {
                line,
                problem: "empty revision".into(),
            });
        }
        if !seen.insert(revision.clone()) {
            return Err(EnergyError::DuplicateRevision { line, revision });
        }
        let watts: f64 = row[1].trim().parse().map_err(|_| EnergyError::BadRow {
            line,
            problem: format!("non-numeric mean_watts {:?}", &row[1]),
        })?;
        if !watts.is_finite() || watts <= 0.0 {
            return Err(EnergyError::BadRow {
                line,
                problem: format!("mean_watts must be finite and positive, got {watts}"),
            });
        }
        entries.push(ProfileEntry {
            revision: RevisionId::new(revision),
            mean_watts: watts,
        });
    }
    Ok(EnergyProfile { entries })
}

/// Consecutive differences: delta for entry `i` is `watts[i] - watts[i-1]`,
/// attributed to `revision[i]`.
pub fn compute_deltas(profile: &EnergyProfile) -> Result<Vec<EnergyDelta>, EnergyError> {
    if profile.entries.len() < 2 {
        return Err(EnergyError::TooShort {
            len: profile.entries.len(),
        });
    }
    Ok(profile
        .entries
        .windows(2)
        .map(|pair| EnergyDelta {
            revision: pair[1].revision.clone(),
            delta_watts: pair[1].mean_watts - pair[0].mean_watts,
        })
        .collect())
}
