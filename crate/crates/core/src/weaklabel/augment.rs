//! Per-window augmentation: one rotation, one crop origin, and one
//! brightness/contrast pair drawn per window, applied identically to every
//! frame in it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthgen::Frame;
use crate::weaklabel::window::SampledWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    /// Max |rotation| in degrees.
    pub rotation_deg: f64,
    /// Pixels removed by the crop (output is `frame − margin` per axis).
    pub crop_margin: usize,
    /// Max |offset| of the crop origin from centered, clamped into the
    /// margin. 0 = always the centered crop.
    pub crop_jitter: usize,
    /// Max |brightness shift|.
    pub brightness: f64,
    /// Multiplicative contrast range about mid-gray.
    pub contrast_range: (f64, f64),
}

impl Default for AugmentConfig {
    fn default() -> AugmentConfig {
        AugmentConfig {
            rotation_deg: 10.0,
            crop_margin: 4,
            crop_jitter: 2,
            brightness: 0.12,
            contrast_range: (0.85, 1.18),
        }
    }
}

impl AugmentConfig {
    /// Transform-free variant: zero rotation, centered crop, identity jitter.
    pub fn identity_of(&self) -> WindowTransform {
        WindowTransform {
            angle_rad: 0.0,
            crop_y: self.crop_margin / 2,
            crop_x: self.crop_margin / 2,
            brightness: 0.0,
            contrast: 1.0,
            margin: self.crop_margin,
        }
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> WindowTransform {
        let angle = if self.rotation_deg > 0.0 {
            rng.random_range(-self.rotation_deg..=self.rotation_deg)
        } else {
            0.0
        };
        let center = self.crop_margin / 2;
        let jitter = self.crop_jitter.min(self.crop_margin) as i64;
        let draw_origin = |rng: &mut ChaCha8Rng| -> usize {
            if jitter == 0 {
                return center;
            }
            (center as i64 + rng.random_range(-jitter..=jitter))
                .clamp(0, self.crop_margin as i64) as usize
        };
        let crop_y = draw_origin(rng);
        let crop_x = draw_origin(rng);
        let brightness = if self.brightness > 0.0 {
            rng.random_range(-self.brightness..=self.brightness)
        } else {
            0.0
        };
        let contrast = if self.contrast_range.0 < self.contrast_range.1 {
            rng.random_range(self.contrast_range.0..=self.contrast_range.1)
        } else {
            self.contrast_range.0
        };
        WindowTransform {
            angle_rad: angle.to_radians(),
            crop_y,
            crop_x,
            brightness,
            contrast,
            margin: self.crop_margin,
        }
    }
}

/// One concrete transform, shared by every frame of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowTransform {
    pub angle_rad: f64,
    pub crop_y: usize,
    pub crop_x: usize,
    pub brightness: f64,
    pub contrast: f64,
    margin: usize,
}

impl WindowTransform {
    /// Rotate about the frame center (bilinear, clamp-to-edge), crop, then
    /// jitter brightness/contrast. Zero rotation reproduces source pixels
    /// exactly.
    pub fn apply(&self, frame: &Frame) -> Result<Frame> {
        let (h, w) = (frame.h, frame.w);
        if self.margin >= h || self.margin >= w {
            return Err(Error::invalid(format!(
                "crop margin {} too large for {h}x{w} frame",
                self.margin
            )));
        }
        let (ch, cw) = (h - self.margin, w - self.margin);
        if self.crop_y + ch > h || self.crop_x + cw > w {
            return Err(Error::invalid("crop window exceeds the frame"));
        }
        let (sin, cos) = self.angle_rad.sin_cos();
        let cy = (h as f64 - 1.0) / 2.0;
        let cx = (w as f64 - 1.0) / 2.0;
        let mut out = Frame::new(ch, cw, frame.c);
        for y in 0..ch {
            for x in 0..cw {
                let fy = (y + self.crop_y) as f64 - cy;
                let fx = (x + self.crop_x) as f64 - cx;
                // Inverse rotation back into source coordinates.
                let sx = cos * fx + sin * fy + cx;
                let sy = -sin * fx + cos * fy + cy;
                for c in 0..frame.c {
                    let v = bilinear_clamped(frame, sy, sx, c);
                    let jittered = self.contrast * (v - 0.5) + 0.5 + self.brightness;
                    out.set(y, x, c, jittered.clamp(0.0, 1.0) as f32);
                }
            }
        }
        Ok(out)
    }
}

fn bilinear_clamped(frame: &Frame, y: f64, x: f64, c: usize) -> f64 {
    let max_y = frame.h as f64 - 1.0;
    let max_x = frame.w as f64 - 1.0;
    let y = y.clamp(0.0, max_y);
    let x = x.clamp(0.0, max_x);
    let y0 = y.floor();
    let x0 = x.floor();
    let ty = y - y0;
    let tx = x - x0;
    let (y0, x0) = (y0 as usize, x0 as usize);
    let y1 = (y0 + 1).min(frame.h - 1);
    let x1 = (x0 + 1).min(frame.w - 1);
    let p00 = frame.get(y0, x0, c) as f64;
    let p01 = frame.get(y0, x1, c) as f64;
    let p10 = frame.get(y1, x0, c) as f64;
    let p11 = frame.get(y1, x1, c) as f64;
    (p00 * (1.0 - tx) + p01 * tx) * (1.0 - ty) + (p10 * (1.0 - tx) + p11 * tx) * ty
}

/// Draw one transform and apply it to every frame of the window.
pub fn augment_window(
    w: &SampledWindow,
    cfg: &AugmentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SampledWindow> {
    if w.frames.is_empty() {
        return Err(Error::invalid("augment_window on an empty window"));
    }
    let transform = cfg.draw(rng);
    apply_to_window(w, &transform)
}

/// Deterministic centered crop used at evaluation time.
pub fn augment_identity(w: &SampledWindow, cfg: &AugmentConfig) -> Result<SampledWindow> {
    apply_to_window(w, &cfg.identity_of())
}

/// Centered crop for a single frame (scorer preprocessing).
pub fn centered_crop(frame: &Frame, cfg: &AugmentConfig) -> Result<Frame> {
    cfg.identity_of().apply(frame)
}

fn apply_to_window(w: &SampledWindow, t: &WindowTransform) -> Result<SampledWindow> {
    Ok(SampledWindow {
        frames: w
            .frames
            .iter()
            .map(|f| t.apply(f))
            .collect::<Result<Vec<_>>>()?,
        start: w.start,
        tracklet_id: w.tracklet_id.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_from;

    fn checker(h: usize, w: usize) -> Frame {
        let mut f = Frame::new(h, w, 1);
        for y in 0..h {
            for x in 0..w {
                f.set(y, x, 0, ((y + x) % 2) as f32 * 0.8 + 0.1);
            }
        }
        f
    }

    fn window(frames: Vec<Frame>) -> SampledWindow {
        SampledWindow {
            frames,
            start: 0,
            tracklet_id: "t".into(),
        }
    }

    #[test]
    fn identical_frames_stay_identical_after_augmentation() {
        let f = checker(16, 16);
        let w = window(vec![f.clone(), f.clone(), f]);
        let mut rng = rng_from(5);
        let out = augment_window(&w, &AugmentConfig::default(), &mut rng).unwrap();
        assert_eq!(out.frames[0].pixels, out.frames[1].pixels);
        assert_eq!(out.frames[0].pixels, out.frames[2].pixels);
    }

    #[test]
    fn same_seed_gives_identical_augmentation() {
        let w = window(vec![checker(20, 20)]);
        let cfg = AugmentConfig::default();
        let a = augment_window(&w, &cfg, &mut rng_from(9)).unwrap();
        let b = augment_window(&w, &cfg, &mut rng_from(9)).unwrap();
        assert_eq!(a.frames[0].pixels, b.frames[0].pixels);
    }

    #[test]
    fn zero_jitter_equals_centered_crop() {
        let f = checker(16, 16);
        let cfg = AugmentConfig {
            rotation_deg: 0.0,
            crop_margin: 4,
            crop_jitter: 0,
            brightness: 0.0,
            contrast_range: (1.0, 1.0),
        };
        let w = window(vec![f.clone()]);
        let out = augment_window(&w, &cfg, &mut rng_from(3)).unwrap();
        assert_eq!(out.frames[0].h, 12);
        // Centered crop origin is margin/2 = 2.
        for y in 0..12 {
            for x in 0..12 {
                assert_eq!(out.frames[0].get(y, x, 0), f.get(y + 2, x + 2, 0));
            }
        }
    }

    #[test]
    fn oversized_crop_is_rejected() {
        let f = checker(8, 8);
        let cfg = AugmentConfig {
            crop_margin: 8,
            ..AugmentConfig::default()
        };
        let w = window(vec![f]);
        assert!(augment_window(&w, &cfg, &mut rng_from(1)).is_err());
    }

    #[test]
    fn transform_parameters_differ_across_windows() {
        let cfg = AugmentConfig::default();
        let mut rng = rng_from(11);
        let a = cfg.draw(&mut rng);
        let b = cfg.draw(&mut rng);
        assert_ne!(a, b);
    }
}
