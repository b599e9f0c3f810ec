//! Shift-database incorporation: clock reading, on-ice window queries,
//! shift vectors, and masked identity.

mod clockread;
mod mask;
mod report;

pub use clockread::{read_clock, GameClockReading, CONFIDENCE_THRESHOLD};
pub use mask::{
    aggregate_tracklet, build_shift_vector, masked_identity, shifts_in_window, unmasked_identity,
    ShiftVector,
};
pub use report::{report_to_csv, write_report, ReportRow, REPORT_HEADER};

pub use crate::synthgen::ShiftDb;
