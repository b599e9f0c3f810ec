//! Synthetic tracklets, shift databases, and scoreboard strips with
//! per-frame visibility ground truth.

pub mod clock;
pub mod dataset;
pub mod font;
mod gen;
mod shifts;
mod types;

pub use clock::render_clock_strip;
pub use dataset::{read_dataset, read_manifest, write_dataset, Dataset, Manifest, ManifestRecord};
pub use gen::{
    gen_rosters, gen_split, gen_tracklet, glyph_evidence, ncc, ClockPair, GenTracklet, Rosters,
};
pub use shifts::{gen_shift_db, ShiftDb};
pub use types::{Frame, ShiftRecord, SynthConfig, TeamSide, Tracklet};
