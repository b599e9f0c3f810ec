//! Synthetic tracklet rendering.
//!
//! A tracklet is a short sequence of 32x32 grayscale crops of one player.
//! Frames flagged visible carry the jersey number stamped upright (small
//! jitter only); invisible frames show the stamp occluded, rotated past
//! legibility, or no stamp at all. The per-frame visibility bits are the
//! ground truth that the weak-label machinery is tested against.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeds::{child_seed, rng_from};
use crate::synthgen::clock::render_clock_strip;
use crate::synthgen::font::{glyph_coverage, jersey_digits, GLYPH_H, GLYPH_W};
use crate::synthgen::shifts::ShiftDb;
use crate::synthgen::types::{Frame, SynthConfig, TeamSide, Tracklet};

/// Scale from bitmap glyph cells to frame pixels.
const STAMP_SCALE: f64 = 2.0;
/// Horizontal gap between two stamped digits, in frame pixels.
const DIGIT_GAP: f64 = 2.0;
/// Max |center jitter| of a stamp, in pixels per axis.
const CENTER_JITTER: i32 = 3;

fn stamp_extent(digit_count: usize) -> (f64, f64) {
    let w = digit_count as f64 * GLYPH_W as f64 * STAMP_SCALE
        + (digit_count - 1) as f64 * DIGIT_GAP;
    let h = GLYPH_H as f64 * STAMP_SCALE;
    (w, h)
}

/// Blend the digit glyphs into `buf` (row-major `fh x fw`), rotated by
/// `angle` radians about the stamp center `(cx, cy)`.
fn stamp_glyphs(
    buf: &mut [f64],
    fh: usize,
    fw: usize,
    digits: &[u8],
    cx: f64,
    cy: f64,
    angle: f64,
    ink: f64,
) {
    let (tw, th) = stamp_extent(digits.len());
    let (sin, cos) = angle.sin_cos();
    let reach = 0.5 * (tw * tw + th * th).sqrt() + 1.5;
    let y0 = ((cy - reach).floor().max(0.0)) as usize;
    let y1 = ((cy + reach).ceil().min(fh as f64 - 1.0)) as usize;
    let x0 = ((cx - reach).floor().max(0.0)) as usize;
    let x1 = ((cx + reach).ceil().min(fw as f64 - 1.0)) as usize;
    let cell = GLYPH_W as f64 * STAMP_SCALE;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            // Inverse rotation into stamp-local coordinates.
            let u = cos * dx + sin * dy + tw / 2.0;
            let v = -sin * dx + cos * dy + th / 2.0;
            if !(-1.0..tw + 1.0).contains(&u) || !(-1.0..th + 1.0).contains(&v) {
                continue;
            }
            let slot = (u / (cell + DIGIT_GAP)).floor().max(0.0) as usize;
            let slot = slot.min(digits.len() - 1);
            let ug = u - slot as f64 * (cell + DIGIT_GAP);
            if ug < -1.0 || ug > cell + 1.0 {
                continue;
            }
            let cov = glyph_coverage(digits[slot], ug / STAMP_SCALE, v / STAMP_SCALE);
            if cov > 0.0 {
                let px = &mut buf[y * fw + x];
                *px += (ink - *px) * cov;
            }
        }
    }
}

fn fill_rect(buf: &mut [f64], fh: usize, fw: usize, y0: i64, x0: i64, h: i64, w: i64, value: f64, noise: f64, rng: &mut ChaCha8Rng) {
    for y in y0.max(0)..(y0 + h).min(fh as i64) {
        for x in x0.max(0)..(x0 + w).min(fw as i64) {
            buf[y as usize * fw + x as usize] = value + rng.random_range(-noise..=noise);
        }
    }
}

/// Box-blur a region; two passes wash out glyph structure the way motion
/// smear does.
fn blur_region(buf: &mut [f64], fh: usize, fw: usize, cy: f64, cx: f64, reach: f64, passes: usize) {
    let y0 = ((cy - reach).floor().max(0.0)) as usize;
    let y1 = ((cy + reach).ceil().min(fh as f64 - 1.0)) as usize;
    let x0 = ((cx - reach).floor().max(0.0)) as usize;
    let x1 = ((cx + reach).ceil().min(fw as f64 - 1.0)) as usize;
    for _ in 0..passes {
        let snapshot = buf.to_vec();
        for y in y0..=y1 {
            for x in x0..=x1 {
                let mut acc = 0.0;
                let mut count = 0.0;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let yy = y as i64 + dy;
                        let xx = x as i64 + dx;
                        if yy >= 0 && yy < fh as i64 && xx >= 0 && xx < fw as i64 {
                            acc += snapshot[yy as usize * fw + xx as usize];
                            count += 1.0;
                        }
                    }
                }
                buf[y * fw + x] = acc / count;
            }
        }
    }
}

/// Render one tracklet. A pure function of `(cfg, id, team_side, jersey, seed)`.
pub fn gen_tracklet(
    cfg: &SynthConfig,
    id: &str,
    team_side: TeamSide,
    jersey: Option<u8>,
    seed: u64,
) -> Result<Tracklet> {
    cfg.validate()?;
    if let Some(j) = jersey {
        if j == 0 || j > cfg.max_jersey() {
            return Err(Error::invalid(format!(
                "jersey {j} outside roster 1..={}",
                cfg.max_jersey()
            )));
        }
    }
    let mut rng = rng_from(seed);
    let n = rng.random_range(cfg.len_range.0..=cfg.len_range.1);

    let mut visibility = vec![false; n];
    if jersey.is_some() {
        let lo = ((cfg.visibility_range.0 * n as f64).ceil() as usize).clamp(1, n);
        let hi = ((cfg.visibility_range.1 * n as f64).floor() as usize).clamp(lo, n);
        let count = rng.random_range(lo..=hi);
        let run_start = rng.random_range(0..=n - count);
        for bit in &mut visibility[run_start..run_start + count] {
            *bit = true;
        }
    }

    // Appearance is constant across the tracklet: one player, one sweater.
    let bg: f64 = rng.random_range(0.12..0.35);
    let ink_hi = (bg + 0.58).min(0.96);
    let ink: f64 = rng.random_range((bg + cfg.min_contrast)..=ink_hi);
    let digits = jersey.map(|j| jersey_digits(j));

    let (fh, fw) = (cfg.frame_h, cfg.frame_w);
    let base_cx = fw as f64 / 2.0;
    let base_cy = fh as f64 / 2.0;
    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let mut buf: Vec<f64> = (0..fh * fw)
            .map(|_| bg + rng.random_range(-cfg.noise..=cfg.noise))
            .collect();
        let cx = base_cx + rng.random_range(-CENTER_JITTER..=CENTER_JITTER) as f64;
        let cy = base_cy + rng.random_range(-CENTER_JITTER..=CENTER_JITTER) as f64;
        if visibility[k] {
            let digits = digits.as_ref().expect("visible frame implies a jersey");
            let angle = rng
                .random_range(-cfg.rotation_jitter_deg..=cfg.rotation_jitter_deg)
                .to_radians();
            stamp_glyphs(&mut buf, fh, fw, digits, cx, cy, angle, ink);
        } else {
            let roll: f64 = rng.random();
            match &digits {
                Some(digits) if roll < cfg.occlusion_prob => {
                    // Stamp, then bury it under an occluder block.
                    let angle = rng
                        .random_range(-cfg.rotation_jitter_deg..=cfg.rotation_jitter_deg)
                        .to_radians();
                    stamp_glyphs(&mut buf, fh, fw, digits, cx, cy, angle, ink);
                    let (tw, th) = stamp_extent(digits.len());
                    let fill: f64 = rng.random_range(0.0..1.0);
                    fill_rect(
                        &mut buf,
                        fh,
                        fw,
                        (cy - th / 2.0) as i64 - 2,
                        (cx - tw / 2.0) as i64 - 2,
                        th as i64 + 5,
                        tw as i64 + 5,
                        fill,
                        cfg.noise,
                        &mut rng,
                    );
                }
                Some(digits) if roll < cfg.occlusion_prob + (1.0 - cfg.occlusion_prob) * 0.4 => {
                    // Rotated and smeared far past legibility.
                    let magnitude: f64 = rng.random_range(70.0..110.0);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    stamp_glyphs(&mut buf, fh, fw, digits, cx, cy, (sign * magnitude).to_radians(), ink);
                    let (tw, th) = stamp_extent(digits.len());
                    blur_region(&mut buf, fh, fw, cy, cx, 0.5 * (tw * tw + th * th).sqrt() + 2.0, 2);
                }
                _ => {
                    // No stamp; sometimes a faint non-digit distractor.
                    if rng.random::<f64>() < 0.5 {
                        let h = rng.random_range(4..12);
                        let w = rng.random_range(4..12);
                        let y = rng.random_range(0..fh as i64);
                        let x = rng.random_range(0..fw as i64);
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        let fill = bg + sign * rng.random_range(0.10..0.25);
                        fill_rect(&mut buf, fh, fw, y, x, h, w, fill, cfg.noise, &mut rng);
                    }
                }
            }
        }
        let pixels: Vec<f32> = buf.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
        frames.push(Frame::from_pixels(fh, fw, 1, pixels)?);
    }

    let t = Tracklet {
        id: id.to_string(),
        team_side,
        label: jersey,
        frames,
        visibility,
    };
    t.validate()?;
    Ok(t)
}

/// Reference contrast the evidence gate saturates at; a hair below the
/// default generator contrast floor so clean stamps score ungated.
const EVIDENCE_CONTRAST_REF: f64 = 0.33;

/// How strongly the frame shows an upright stamp of `jersey`: normalized
/// cross-correlation against the ideal stamp, scaled by how much of the
/// expected ink-over-background contrast the patch actually realizes, and
/// maximized over small integer center offsets. Near 1 for a clean visible
/// stamp; low when the number is absent, occluded, smeared, or faint.
pub fn glyph_evidence(frame: &Frame, jersey: u8) -> f64 {
    let digits = jersey_digits(jersey);
    let (tw, th) = stamp_extent(digits.len());
    let (tw, th) = (tw.ceil() as i64, th.ceil() as i64);
    let cell = GLYPH_W as f64 * STAMP_SCALE;
    // Ideal template sampled the same way the stamp renderer samples.
    let mut template = vec![0.0f64; (tw * th) as usize];
    for v in 0..th {
        for u in 0..tw {
            let slot = ((u as f64 / (cell + DIGIT_GAP)).floor().max(0.0) as usize)
                .min(digits.len() - 1);
            let ug = u as f64 - slot as f64 * (cell + DIGIT_GAP);
            if (-1.0..=cell + 1.0).contains(&ug) {
                template[(v * tw + u) as usize] =
                    glyph_coverage(digits[slot], ug / STAMP_SCALE, v as f64 / STAMP_SCALE);
            }
        }
    }
    let ink_cells: Vec<usize> = (0..template.len()).filter(|&i| template[i] > 0.5).collect();
    let bg_cells: Vec<usize> = (0..template.len()).filter(|&i| template[i] < 0.05).collect();
    let range = CENTER_JITTER as i64 + 2;
    let mut best = 0.0f64;
    for dy in -range..=range {
        for dx in -range..=range {
            let y0 = (frame.h as i64 - th) / 2 + dy;
            let x0 = (frame.w as i64 - tw) / 2 + dx;
            if y0 < 0 || x0 < 0 || y0 + th > frame.h as i64 || x0 + tw > frame.w as i64 {
                continue;
            }
            let patch: Vec<f64> = (0..th)
                .flat_map(|v| {
                    (0..tw).map(move |u| {
                        frame.get((y0 + v) as usize, (x0 + u) as usize, 0) as f64
                    })
                })
                .collect();
            let ink: f64 =
                ink_cells.iter().map(|&i| patch[i]).sum::<f64>() / ink_cells.len() as f64;
            let bgv: f64 =
                bg_cells.iter().map(|&i| patch[i]).sum::<f64>() / bg_cells.len() as f64;
            let gate = ((ink - bgv) / EVIDENCE_CONTRAST_REF).clamp(0.0, 1.0);
            best = best.max(ncc(&template, &patch) * gate);
        }
    }
    best
}

/// Normalized cross-correlation; 0 when either signal is constant.
pub fn ncc(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    let denom = (da * db).sqrt();
    if denom < 1e-9 {
        0.0
    } else {
        num / denom
    }
}

/// Home and away jersey lists for one synthetic game.
#[derive(Debug, Clone)]
pub struct Rosters {
    pub home: Vec<u8>,
    pub away: Vec<u8>,
}

pub fn gen_rosters(cfg: &SynthConfig, seed: u64) -> Result<Rosters> {
    cfg.validate()?;
    let mut rng = rng_from(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut pool: Vec<u8> = (1..=cfg.max_jersey()).collect();
        let mut team = Vec::with_capacity(cfg.roster_size);
        for _ in 0..cfg.roster_size {
            let i = rng.random_range(0..pool.len());
            team.push(pool.swap_remove(i));
        }
        team.sort_unstable();
        team
    };
    Ok(Rosters {
        home: draw(&mut rng),
        away: draw(&mut rng),
    })
}

/// Scoreboard strips bracketing a tracklet's clip.
#[derive(Debug, Clone)]
pub struct ClockPair {
    pub start_strip: Frame,
    pub end_strip: Frame,
}

/// A generated tracklet plus its sidecar clock strips (absent for datasets
/// generated without a shift database).
#[derive(Debug, Clone)]
pub struct GenTracklet {
    pub tracklet: Tracklet,
    pub clocks: Option<ClockPair>,
}

/// Generate `count` tracklets whose jerseys and clip times agree with the
/// shift database: every numbered tracklet is cut from a window in which the
/// player was actually on the ice.
pub fn gen_split(
    cfg: &SynthConfig,
    db: &ShiftDb,
    count: usize,
    id_prefix: &str,
    seed: u64,
) -> Result<Vec<GenTracklet>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let spec_seed = child_seed(seed, i as u64);
        let mut rng = rng_from(spec_seed);
        let id = format!("{id_prefix}{i:05}");
        let n = rng.random_range(cfg.len_range.0..=cfg.len_range.1);
        let duration = n as f64 / cfg.fps;
        let mut sub = cfg.clone();
        sub.len_range = (n, n);

        let roll: f64 = rng.random();
        let (side, jersey, window) = if roll < cfg.referee_fraction {
            let ts = rng.random_range(0.0..(cfg.game_length_s - duration - 0.2).max(0.1));
            (TeamSide::Referee, None, (ts, ts + duration))
        } else {
            let side = if rng.random::<bool>() {
                TeamSide::Home
            } else {
                TeamSide::Away
            };
            let candidates: Vec<usize> = db
                .records()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.team == side && r.end_s - r.start_s >= duration + 1.0)
                .map(|(idx, _)| idx)
                .collect();
            if candidates.is_empty() {
                return Err(Error::invalid(format!(
                    "no {side} shift is long enough for a {duration:.1}s clip"
                )));
            }
            let rec = &db.records()[candidates[rng.random_range(0..candidates.len())]];
            let ts = rng.random_range(rec.start_s + 0.05..rec.end_s - duration - 0.05);
            let jersey = if rng.random::<f64>() < cfg.null_fraction {
                None
            } else {
                Some(rec.jersey)
            };
            (side, jersey, (ts, ts + duration))
        };

        let tracklet = gen_tracklet(&sub, &id, side, jersey, child_seed(spec_seed, 1))?;
        let clocks = ClockPair {
            start_strip: render_clock_strip(window.0 as u32)?,
            end_strip: render_clock_strip(window.1 as u32)?,
        };
        out.push(GenTracklet {
            tracklet,
            clocks: Some(clocks),
        });
    }
    Ok(out)
}
