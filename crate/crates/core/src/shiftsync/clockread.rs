//! Game-clock reading by per-digit template matching.

use crate::error::{Error, Result};
use crate::synthgen::clock::{digit_template, strip_cell, DIGIT_CELLS};
use crate::synthgen::ncc;
use crate::synthgen::Frame;

/// Below this minimum per-digit correlation the strip is declared
/// unreadable and the caller falls back to unmasked inference.
pub const CONFIDENCE_THRESHOLD: f64 = 0.8;

/// A decoded scoreboard time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameClockReading {
    /// Game seconds in [0, 3600).
    pub t: u32,
    /// Minimum per-digit correlation across the four digit cells.
    pub confidence: f64,
}

/// Decode an `MM:SS` strip by normalized cross-correlation of each digit
/// cell against the ten glyph templates.
pub fn read_clock(strip: &Frame) -> Result<GameClockReading> {
    let templates: Vec<Vec<f64>> = (0..10u8)
        .map(|d| digit_template(d).iter().map(|&v| v as f64).collect())
        .collect();
    let mut digits = [0u8; 4];
    let mut confidence = f64::INFINITY;
    for (slot, &cell_idx) in DIGIT_CELLS.iter().enumerate() {
        let cell: Vec<f64> = strip_cell(strip, cell_idx)?
            .iter()
            .map(|&v| v as f64)
            .collect();
        let mut best = (0u8, f64::NEG_INFINITY);
        for (d, tpl) in templates.iter().enumerate() {
            let c = ncc(tpl, &cell);
            if c > best.1 {
                best = (d as u8, c);
            }
        }
        digits[slot] = best.0;
        confidence = confidence.min(best.1);
    }
    if confidence < CONFIDENCE_THRESHOLD {
        return Err(Error::ClockUnreadable { confidence });
    }
    let mm = digits[0] as u32 * 10 + digits[1] as u32;
    let ss = digits[2] as u32 * 10 + digits[3] as u32;
    if mm >= 60 || ss >= 60 {
        return Err(Error::ClockUnreadable { confidence });
    }
    Ok(GameClockReading {
        t: mm * 60 + ss,
        confidence,
    })
}
