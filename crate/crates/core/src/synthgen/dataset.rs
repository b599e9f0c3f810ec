//! Dataset directory layout.
//!
//! ```text
//! <dir>/manifest.json        one record per tracklet
//! <dir>/frames/<id>.trkl     packed frames: "TRKL", u32 n, u32 H, u32 W, u32 C, f32 LE pixels
//! <dir>/clocks/<id>.trkl     two-frame pack: scoreboard strips at clip start/end
//! <dir>/shifts.jsonl         shift database
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthgen::gen::{ClockPair, GenTracklet};
use crate::synthgen::shifts::{write_shift_db, ShiftDb};
use crate::synthgen::types::{Frame, TeamSide, Tracklet};

const MAGIC: &[u8; 4] = b"TRKL";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub id: String,
    pub team_side: TeamSide,
    pub label: Option<u8>,
    pub n: usize,
    /// Per-frame visibility bits as a 0/1 string of length `n`.
    pub visibility: String,
    /// Path of the packed frame file, relative to the dataset directory.
    pub frames: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tracklets: Vec<ManifestRecord>,
}

/// A dataset as loaded back from disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub entries: Vec<GenTracklet>,
    pub shift_db: Option<ShiftDb>,
}

impl Dataset {
    pub fn tracklets(&self) -> impl Iterator<Item = &Tracklet> {
        self.entries.iter().map(|e| &e.tracklet)
    }

    pub fn clock_pairs(&self) -> BTreeMap<String, &ClockPair> {
        self.entries
            .iter()
            .filter_map(|e| e.clocks.as_ref().map(|c| (e.tracklet.id.clone(), c)))
            .collect()
    }
}

fn pack_frames(frames: &[Frame]) -> Result<Vec<u8>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("cannot pack an empty frame list"))?;
    let (h, w, c) = (first.h, first.w, first.c);
    let mut buf = Vec::with_capacity(20 + frames.len() * h * w * c * 4);
    buf.extend_from_slice(MAGIC);
    for v in [frames.len() as u32, h as u32, w as u32, c as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for f in frames {
        if (f.h, f.w, f.c) != (h, w, c) {
            return Err(Error::shape("pack_frames", "frames disagree on size".to_string()));
        }
        for p in &f.pixels {
            buf.extend_from_slice(&p.to_le_bytes());
        }
    }
    Ok(buf)
}

fn unpack_frames(bytes: &[u8], path: &Path) -> Result<Vec<Frame>> {
    let bad = |field: &str, detail: String| Error::format("frame pack", field.to_string(), detail);
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(bad("magic", format!("{} is not a TRKL file", path.display())));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (n, h, w, c) = (u32_at(4), u32_at(8), u32_at(12), u32_at(16));
    let expected = 20 + n * h * w * c * 4;
    if bytes.len() != expected {
        return Err(bad(
            "n",
            format!("{}: payload {} bytes, header implies {}", path.display(), bytes.len(), expected),
        ));
    }
    let mut frames = Vec::with_capacity(n);
    let mut off = 20;
    for _ in 0..n {
        let count = h * w * c;
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            pixels.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        frames.push(Frame::from_pixels(h, w, c, pixels)?);
    }
    Ok(frames)
}

fn visibility_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_visibility(s: &str, id: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::format(
                "manifest",
                "visibility",
                format!("tracklet {id}: unexpected character {other:?}"),
            )),
        })
        .collect()
}

/// Persist tracklets (with clock sidecars), the shift database, and the
/// manifest into `dir`. Round-trips losslessly through [`read_dataset`].
pub fn write_dataset(entries: &[GenTracklet], shift_db: &ShiftDb, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir.join("frames")).map_err(|e| Error::io(dir, e))?;
    fs::create_dir_all(dir.join("clocks")).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::with_capacity(entries.len());
    for entry in entries {
        let t = &entry.tracklet;
        t.validate()?;
        let rel = format!("frames/{}.trkl", t.id);
        let path = dir.join(&rel);
        fs::write(&path, pack_frames(&t.frames)?).map_err(|e| Error::io(&path, e))?;
        if let Some(clocks) = &entry.clocks {
            let cpath = dir.join(format!("clocks/{}.trkl", t.id));
            let pair = [clocks.start_strip.clone(), clocks.end_strip.clone()];
            fs::write(&cpath, pack_frames(&pair)?).map_err(|e| Error::io(&cpath, e))?;
        }
        records.push(ManifestRecord {
            id: t.id.clone(),
            team_side: t.team_side,
            label: t.label,
            n: t.len(),
            visibility: visibility_string(&t.visibility),
            frames: rel,
        });
    }
    let manifest = Manifest { tracklets: records };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format("manifest", "tracklets", e.to_string()))?;
    let mpath = dir.join("manifest.json");
    fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;
    write_shift_db(shift_db, dir)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let mpath = dir.join("manifest.json");
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format("manifest", "(parse)", e.to_string()))
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let mut entries = Vec::with_capacity(manifest.tracklets.len());
    for rec in &manifest.tracklets {
        if rec.label == Some(0) {
            return Err(Error::format(
                "manifest",
                "label",
                format!("tracklet {}: jersey 0 is reserved for the null class", rec.id),
            ));
        }
        if rec.team_side == TeamSide::Referee && rec.label.is_some() {
            return Err(Error::format(
                "manifest",
                "label",
                format!("tracklet {}: referees cannot carry a jersey label", rec.id),
            ));
        }
        let visibility = parse_visibility(&rec.visibility, &rec.id)?;
        if visibility.len() != rec.n {
            return Err(Error::format(
                "manifest",
                "visibility",
                format!("tracklet {}: {} bits for n={}", rec.id, visibility.len(), rec.n),
            ));
        }
        let fpath = dir.join(&rec.frames);
        let bytes = fs::read(&fpath).map_err(|e| Error::io(&fpath, e))?;
        let frames = unpack_frames(&bytes, &fpath)?;
        if frames.len() != rec.n {
            return Err(Error::format(
                "manifest",
                "n",
                format!("tracklet {}: manifest says {}, file holds {}", rec.id, rec.n, frames.len()),
            ));
        }
        let cpath = dir.join(format!("clocks/{}.trkl", rec.id));
        let clocks = match fs::read(&cpath) {
            Ok(bytes) => {
                let mut strips = unpack_frames(&bytes, &cpath)?;
                if strips.len() != 2 {
                    return Err(Error::format(
                        "frame pack",
                        "n",
                        format!("clock sidecar for {} must hold 2 strips", rec.id),
                    ));
                }
                let end = strips.pop().unwrap();
                let start = strips.pop().unwrap();
                Some(ClockPair {
                    start_strip: start,
                    end_strip: end,
                })
            }
            Err(_) => None,
        };
        let tracklet = Tracklet {
            id: rec.id.clone(),
            team_side: rec.team_side,
            label: rec.label,
            frames,
            visibility,
        };
        tracklet.validate()?;
        entries.push(GenTracklet { tracklet, clocks });
    }
    let spath = dir.join("shifts.jsonl");
    let shift_db = if spath.exists() {
        Some(ShiftDb::load(&spath)?)
    } else {
        None
    };
    Ok(Dataset { entries, shift_db })
}
