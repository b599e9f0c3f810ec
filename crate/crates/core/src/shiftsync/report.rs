//! Per-tracklet inference report.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::ClassSpace;
use crate::synthgen::TeamSide;

/// One evaluated tracklet under all three mask sources.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub tracklet_id: String,
    pub team_side: TeamSide,
    pub unmasked_id: usize,
    pub masked_id: usize,
    pub roster_id: usize,
    pub true_id: usize,
}

pub const REPORT_HEADER: &str = "tracklet_id,team_side,unmasked_id,masked_id,roster_id,true_id";

pub fn report_to_csv(rows: &[ReportRow], space: &ClassSpace) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.tracklet_id,
            r.team_side,
            space.name_of(r.unmasked_id),
            space.name_of(r.masked_id),
            space.name_of(r.roster_id),
            space.name_of(r.true_id),
        ));
    }
    out
}

pub fn write_report(rows: &[ReportRow], space: &ClassSpace, path: &Path) -> Result<()> {
    fs::write(path, report_to_csv(rows, space)).map_err(|e| Error::io(path, e))
}
