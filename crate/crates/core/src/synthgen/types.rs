use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cropped player image, `H x W x C` in row-major order, values in [0, 1].
/// Pixels are stored as f32 to match the on-disk format bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub pixels: Vec<f32>,
}

impl Frame {
    pub fn new(h: usize, w: usize, c: usize) -> Frame {
        Frame {
            h,
            w,
            c,
            pixels: vec![0.0; h * w * c],
        }
    }

    pub fn from_pixels(h: usize, w: usize, c: usize, pixels: Vec<f32>) -> Result<Frame> {
        if pixels.len() != h * w * c {
            return Err(Error::shape(
                "frame",
                format!("{} pixels for {h}x{w}x{c}", pixels.len()),
            ));
        }
        if pixels.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::invalid("frame pixels must lie in [0, 1]"));
        }
        Ok(Frame { h, w, c, pixels })
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, ch: usize) -> f32 {
        self.pixels[(y * self.w + x) * self.c + ch]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, ch: usize, v: f32) {
        self.pixels[(y * self.w + x) * self.c + ch] = v;
    }
}

/// Which bench a tracklet's subject belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeamSide {
    Home,
    Away,
    Referee,
}

impl std::fmt::Display for TeamSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TeamSide::Home => write!(f, "home"),
            TeamSide::Away => write!(f, "away"),
            TeamSide::Referee => write!(f, "referee"),
        }
    }
}

/// An ordered frame sequence following one player, with its ground-truth
/// jersey label (`None` = the null class) and synthetic per-frame visibility.
#[derive(Debug, Clone)]
pub struct Tracklet {
    pub id: String,
    pub team_side: TeamSide,
    pub label: Option<u8>,
    pub frames: Vec<Frame>,
    pub visibility: Vec<bool>,
}

impl Tracklet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::invalid(format!("tracklet {}: no frames", self.id)));
        }
        if self.visibility.len() != self.frames.len() {
            return Err(Error::format(
                "tracklet",
                "visibility",
                format!(
                    "{} bits for {} frames in {}",
                    self.visibility.len(),
                    self.frames.len(),
                    self.id
                ),
            ));
        }
        Ok(())
    }
}

/// One player's stay on the ice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftRecord {
    pub team: TeamSide,
    pub jersey: u8,
    pub start_s: f64,
    pub end_s: f64,
}

impl ShiftRecord {
    pub fn validate(&self) -> Result<()> {
        if self.team == TeamSide::Referee {
            return Err(Error::format("shift record", "team", "referees have no shifts".to_string()));
        }
        if !(self.start_s >= 0.0 && self.start_s < self.end_s) {
            return Err(Error::format(
                "shift record",
                "start_s",
                format!("empty or inverted interval [{}, {}]", self.start_s, self.end_s),
            ));
        }
        Ok(())
    }
}

/// Everything the synthetic generator needs. `num_classes` = K counts the
/// null class plus jersey numbers 1..=K-1.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub frame_h: usize,
    pub frame_w: usize,
    /// Inclusive range for the tracklet length n.
    pub len_range: (usize, usize),
    /// Fraction of frames with a legible jersey stamp (non-null tracklets).
    pub visibility_range: (f64, f64),
    /// Share of invisible frames rendered as an occluded stamp.
    pub occlusion_prob: f64,
    /// Max |rotation| in degrees applied to a still-legible stamp.
    pub rotation_jitter_deg: f64,
    pub null_fraction: f64,
    pub referee_fraction: f64,
    /// Background noise amplitude.
    pub noise: f64,
    /// Guaranteed ink-over-background contrast of a visible stamp.
    pub min_contrast: f64,
    pub fps: f64,
    pub game_length_s: f64,
    pub shift_len_s: (f64, f64),
    pub roster_size: usize,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            num_classes: 21,
            frame_h: 32,
            frame_w: 32,
            len_range: (24, 48),
            visibility_range: (0.55, 0.95),
            occlusion_prob: 0.5,
            rotation_jitter_deg: 8.0,
            null_fraction: 0.5,
            referee_fraction: 0.05,
            noise: 0.04,
            min_contrast: 0.45,
            fps: 8.0,
            game_length_s: 3600.0,
            shift_len_s: (30.0, 90.0),
            roster_size: 12,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid("num_classes must be at least 2"));
        }
        if self.num_classes > 100 {
            return Err(Error::invalid("num_classes capped at 100 (two-digit jerseys)"));
        }
        let (lo, hi) = self.visibility_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid(format!(
                "visibility_range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1"
            )));
        }
        if self.len_range.0 < 1 || self.len_range.0 > self.len_range.1 {
            return Err(Error::invalid("len_range must be a nonempty range with min >= 1"));
        }
        if self.frame_h < 16 || self.frame_w < 16 {
            return Err(Error::invalid("frames smaller than 16x16 cannot hold a stamp"));
        }
        if self.null_fraction + self.referee_fraction > 1.0 {
            return Err(Error::invalid("null_fraction + referee_fraction exceeds 1"));
        }
        if self.roster_size < 6 {
            return Err(Error::invalid("rosters need at least 6 players"));
        }
        if self.roster_size > self.num_classes - 1 {
            return Err(Error::invalid(format!(
                "roster_size {} exceeds the {} available jersey numbers",
                self.roster_size,
                self.num_classes - 1
            )));
        }
        if !(self.fps > 0.0) {
            return Err(Error::invalid("fps must be positive"));
        }
        if !(self.shift_len_s.0 > 0.0 && self.shift_len_s.0 <= self.shift_len_s.1) {
            return Err(Error::invalid("shift_len_s must be a positive range"));
        }
        Ok(())
    }

    /// Largest jersey number in play.
    pub fn max_jersey(&self) -> u8 {
        (self.num_classes - 1) as u8
    }
}
