//! Dataset preparation: generation, loading, and the label-cache step.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::seeds::{child_seed, stream_seed, Stream};
use crate::synthgen::{
    gen_rosters, gen_shift_db, gen_split, read_dataset, write_dataset, GenTracklet, ShiftDb,
};
use crate::weaklabel::{approx_labels, FrameLabels, FrameScorer};

/// In-memory train/test splits plus the shift database they were cut from.
pub struct GeneratedData {
    pub train: Vec<GenTracklet>,
    pub test: Vec<GenTracklet>,
    pub shift_db: ShiftDb,
}

/// Everything the training loop consumes.
pub struct PreparedData {
    pub train: Vec<GenTracklet>,
    pub test: Vec<GenTracklet>,
    pub shift_db: Option<ShiftDb>,
    /// Approximate frame labels keyed by tracklet id (empty in uniform mode).
    pub labels: HashMap<String, FrameLabels>,
}

/// Generate both splits from the config's data stream. Pure in `cfg.seed`.
pub fn generate_data(cfg: &RunConfig) -> Result<GeneratedData> {
    cfg.validate()?;
    let data_seed = stream_seed(cfg.seed, Stream::DataGen);
    let rosters = gen_rosters(&cfg.synth, child_seed(data_seed, 0))?;
    let shift_db = gen_shift_db(
        &rosters,
        cfg.synth.game_length_s,
        cfg.synth.shift_len_s,
        child_seed(data_seed, 1),
    )?;
    let train = gen_split(&cfg.synth, &shift_db, cfg.train_tracklets, "tr", child_seed(data_seed, 2))?;
    let test = gen_split(&cfg.synth, &shift_db, cfg.test_tracklets, "te", child_seed(data_seed, 3))?;
    Ok(GeneratedData {
        train,
        test,
        shift_db,
    })
}

/// Generate and persist under `dir/train` and `dir/test`.
pub fn generate_to_dir(cfg: &RunConfig, dir: &Path) -> Result<GeneratedData> {
    let data = generate_data(cfg)?;
    write_dataset(&data.train, &data.shift_db, &dir.join("train"))?;
    write_dataset(&data.test, &data.shift_db, &dir.join("test"))?;
    Ok(data)
}

/// Score every tracklet and threshold at φ.
pub fn label_tracklets(
    entries: &[GenTracklet],
    scorer: &dyn FrameScorer,
    threshold: f64,
) -> Result<Vec<(String, FrameLabels)>> {
    entries
        .iter()
        .map(|e| Ok((e.tracklet.id.clone(), approx_labels(&e.tracklet, scorer, threshold)?)))
        .collect()
}

/// Load `dir/train` and `dir/test` written by [`generate_to_dir`].
pub fn load_data(dir: &Path, labels: HashMap<String, FrameLabels>) -> Result<PreparedData> {
    let train = read_dataset(&dir.join("train"))?;
    let test = read_dataset(&dir.join("test"))?;
    let shift_db = test.shift_db.or(train.shift_db);
    Ok(PreparedData {
        train: train.entries,
        test: test.entries,
        shift_db,
        labels,
    })
}

impl PreparedData {
    pub fn from_generated(data: GeneratedData, labels: HashMap<String, FrameLabels>) -> PreparedData {
        PreparedData {
            train: data.train,
            test: data.test,
            shift_db: Some(data.shift_db),
            labels,
        }
    }

    pub fn labels_for(&self, id: &str) -> Result<&FrameLabels> {
        self.labels
            .get(id)
            .ok_or_else(|| Error::invalid(format!("no cached frame labels for tracklet {id}")))
    }
}
