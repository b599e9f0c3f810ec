//! Approximate frame-level visibility labels.
//!
//! A frame scorer produces per-frame probabilities `p_k` that a jersey
//! number is legible; thresholding at φ (strictly greater) yields the binary
//! labels `b_k` that guide window sampling. Scorers: the synthetic ground
//! truth oracle, a template-matching scorer, and a trained network whose
//! null-class probability defines `p_k = 1 − P(null | frame)`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::ClassSpace;
use crate::model::Model;
use crate::synthgen::{glyph_evidence, Tracklet};
use crate::weaklabel::augment::{centered_crop, AugmentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Oracle,
    Model,
}

/// Binary per-frame visibility labels for one tracklet.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabels {
    pub bits: Vec<bool>,
    pub source: LabelSource,
    pub threshold: f64,
}

impl FrameLabels {
    pub fn visible_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

pub trait FrameScorer {
    /// `p_k ∈ [0, 1]` per frame.
    fn scores(&self, t: &Tracklet) -> Result<Vec<f64>>;
    fn source(&self) -> LabelSource;
}

/// Ground-truth scorer: the synthetic visibility bit as 0.0 / 1.0.
pub struct OracleScorer;

impl FrameScorer for OracleScorer {
    fn scores(&self, t: &Tracklet) -> Result<Vec<f64>> {
        Ok(t.visibility.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    }

    fn source(&self) -> LabelSource {
        LabelSource::Oracle
    }
}

/// Correlates each frame against the upright stamps of every jersey in the
/// class space; needs no training, works only on synthetic renders.
pub struct TemplateScorer {
    space: ClassSpace,
}

impl TemplateScorer {
    pub fn new(space: ClassSpace) -> TemplateScorer {
        TemplateScorer { space }
    }
}

impl FrameScorer for TemplateScorer {
    fn scores(&self, t: &Tracklet) -> Result<Vec<f64>> {
        Ok(t.frames
            .iter()
            .map(|f| {
                let mut best = 0.0f64;
                for j in 1..=self.space.max_jersey() {
                    best = best.max(glyph_evidence(f, j));
                }
                best.clamp(0.0, 1.0)
            })
            .collect())
    }

    fn source(&self) -> LabelSource {
        LabelSource::Model
    }
}

/// Runs the trained network on each frame alone (the window padding
/// replicates it to length m) and scores visibility as `1 − P(null)`.
pub struct ModelScorer<'a> {
    model: &'a Model,
    augment: AugmentConfig,
}

impl<'a> ModelScorer<'a> {
    pub fn new(model: &'a Model, augment: AugmentConfig) -> ModelScorer<'a> {
        ModelScorer { model, augment }
    }
}

impl FrameScorer for ModelScorer<'_> {
    fn scores(&self, t: &Tracklet) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(t.len());
        for f in &t.frames {
            let cropped = centered_crop(f, &self.augment)?;
            let probs = self.model.forward(&[cropped])?;
            out.push((1.0 - probs.p0.data()[0]).clamp(0.0, 1.0));
        }
        Ok(out)
    }

    fn source(&self) -> LabelSource {
        LabelSource::Model
    }
}

/// Threshold the scorer's probabilities: `b_k = 1` iff `p_k > φ` (strict).
pub fn approx_labels(t: &Tracklet, scorer: &dyn FrameScorer, threshold: f64) -> Result<FrameLabels> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} outside (0, 1)")));
    }
    let scores = scorer.scores(t)?;
    if scores.len() != t.len() {
        return Err(Error::invalid(format!(
            "scorer returned {} scores for {} frames",
            scores.len(),
            t.len()
        )));
    }
    for &p in &scores {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("scorer probability {p} outside [0, 1]")));
        }
    }
    Ok(FrameLabels {
        bits: scores.iter().map(|&p| p > threshold).collect(),
        source: scorer.source(),
        threshold,
    })
}

// ── Label cache (JSON lines) ────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheRow {
    tracklet_id: String,
    phi: f64,
    bits: String,
}

pub fn write_label_cache(path: &Path, labels: &[(String, FrameLabels)]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for (id, l) in labels {
        let row = CacheRow {
            tracklet_id: id.clone(),
            phi: l.threshold,
            bits: l.bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
        };
        let line = serde_json::to_string(&row)
            .map_err(|e| Error::format("label cache", "row", e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_label_cache(path: &Path) -> Result<HashMap<String, FrameLabels>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: CacheRow = serde_json::from_str(&line).map_err(|e| {
            Error::format("label cache", format!("line {}", lineno + 1), e.to_string())
        })?;
        let bits = row
            .bits
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::format(
                    "label cache",
                    "bits",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<bool>>>()?;
        out.insert(
            row.tracklet_id,
            FrameLabels {
                bits,
                source: LabelSource::Model,
                threshold: row.phi,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{gen_tracklet, SynthConfig, TeamSide};

    struct FixedScorer(Vec<f64>);

    impl FrameScorer for FixedScorer {
        fn scores(&self, _t: &Tracklet) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
        fn source(&self) -> LabelSource {
            LabelSource::Model
        }
    }

    fn toy_tracklet(n: usize) -> Tracklet {
        let mut cfg = SynthConfig::default();
        cfg.len_range = (n, n);
        gen_tracklet(&cfg, "t", TeamSide::Home, Some(5), 1).unwrap()
    }

    #[test]
    fn thresholding_definition() {
        let t = toy_tracklet(3);
        let labels = approx_labels(&t, &FixedScorer(vec![0.9, 0.2, 0.6]), 0.5).unwrap();
        assert_eq!(labels.bits, vec![true, false, true]);
    }

    #[test]
    fn score_equal_to_threshold_stays_zero() {
        let t = toy_tracklet(1);
        let labels = approx_labels(&t, &FixedScorer(vec![0.5]), 0.5).unwrap();
        assert_eq!(labels.bits, vec![false]);
    }

    #[test]
    fn oracle_scorer_reproduces_ground_truth() {
        let t = toy_tracklet(40);
        let labels = approx_labels(&t, &OracleScorer, 0.5).unwrap();
        assert_eq!(labels.bits, t.visibility);
        assert_eq!(labels.source, LabelSource::Oracle);
    }

    #[test]
    fn out_of_range_scores_are_rejected() {
        let t = toy_tracklet(2);
        assert!(approx_labels(&t, &FixedScorer(vec![0.5, 1.2]), 0.5).is_err());
        assert!(approx_labels(&t, &FixedScorer(vec![-0.1, 0.5]), 0.5).is_err());
    }

    #[test]
    fn raising_threshold_never_turns_zero_into_one() {
        let t = toy_tracklet(5);
        let scores = vec![0.1, 0.35, 0.5, 0.72, 0.99];
        let mut prev: Option<Vec<bool>> = None;
        for phi in [0.2, 0.4, 0.6, 0.8] {
            let bits = approx_labels(&t, &FixedScorer(scores.clone()), phi).unwrap().bits;
            if let Some(p) = prev {
                for (was, now) in p.iter().zip(&bits) {
                    assert!(!(!was & now), "raising phi created a 1");
                }
            }
            prev = Some(bits);
        }
    }

    #[test]
    fn template_scorer_tracks_ground_truth_on_clean_renders() {
        let cfg = SynthConfig::default();
        let space = ClassSpace::new(cfg.num_classes).unwrap();
        let scorer = TemplateScorer::new(space);
        for seed in 0..5 {
            let t = gen_tracklet(&cfg, "t", TeamSide::Home, Some(12), 400 + seed).unwrap();
            let labels = approx_labels(&t, &scorer, 0.5).unwrap();
            assert_eq!(labels.bits, t.visibility, "seed {seed}");
        }
    }

    #[test]
    fn cache_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let labels = vec![
            (
                "t00000".to_string(),
                FrameLabels {
                    bits: vec![true, false, true],
                    source: LabelSource::Oracle,
                    threshold: 0.5,
                },
            ),
            (
                "t00001".to_string(),
                FrameLabels {
                    bits: vec![false, false],
                    source: LabelSource::Oracle,
                    threshold: 0.5,
                },
            ),
        ];
        write_label_cache(&path, &labels).unwrap();
        let back = read_label_cache(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back["t00000"].bits, vec![true, false, true]);
        assert_eq!(back["t00001"].threshold, 0.5);
    }
}
