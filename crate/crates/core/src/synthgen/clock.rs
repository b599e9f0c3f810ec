//! Scoreboard time strip: "MM:SS" rendered from the fixed glyph templates.
//!
//! Rendering is exact (ink 1.0 on background 0.0, no anti-aliasing or
//! jitter) so the template-matching reader can invert it losslessly.

use crate::error::{Error, Result};
use crate::synthgen::font::{glyph_bit, GLYPH_H, GLYPH_W};
use crate::synthgen::types::Frame;

pub const CELL_W: usize = 8;
pub const CELL_H: usize = 12;
/// Cells: M M : S S
pub const STRIP_W: usize = CELL_W * 5;
pub const STRIP_H: usize = CELL_H;
/// Cell indices holding digits, left to right.
pub const DIGIT_CELLS: [usize; 4] = [0, 1, 3, 4];

const GLYPH_X0: usize = (CELL_W - GLYPH_W) / 2;
const GLYPH_Y0: usize = (CELL_H - GLYPH_H) / 2;

fn draw_digit(frame: &mut Frame, cell: usize, digit: u8) {
    let x_base = cell * CELL_W + GLYPH_X0;
    for r in 0..GLYPH_H {
        for c in 0..GLYPH_W {
            if glyph_bit(digit, r, c) {
                frame.set(GLYPH_Y0 + r, x_base + c, 0, 1.0);
            }
        }
    }
}

/// Render the game clock at `t` seconds (`0 <= t < 3600`) as an `MM:SS` strip.
pub fn render_clock_strip(t: u32) -> Result<Frame> {
    if t >= 3600 {
        return Err(Error::invalid(format!("game time {t}s outside [0, 3600)")));
    }
    let (mm, ss) = (t / 60, t % 60);
    let mut frame = Frame::new(STRIP_H, STRIP_W, 1);
    draw_digit(&mut frame, 0, (mm / 10) as u8);
    draw_digit(&mut frame, 1, (mm % 10) as u8);
    draw_digit(&mut frame, 3, (ss / 10) as u8);
    draw_digit(&mut frame, 4, (ss % 10) as u8);
    // Colon dots in the middle cell.
    let cx = 2 * CELL_W + CELL_W / 2;
    for dy in [4usize, 8] {
        frame.set(dy, cx, 0, 1.0);
        frame.set(dy, cx - 1, 0, 1.0);
    }
    Ok(frame)
}

/// The exact pixel template of `digit` inside one strip cell, row-major
/// `CELL_H x CELL_W`. This is what the reader correlates against.
pub fn digit_template(digit: u8) -> Vec<f32> {
    let mut cell = vec![0.0f32; CELL_W * CELL_H];
    for r in 0..GLYPH_H {
        for c in 0..GLYPH_W {
            if glyph_bit(digit, r, c) {
                cell[(GLYPH_Y0 + r) * CELL_W + GLYPH_X0 + c] = 1.0;
            }
        }
    }
    cell
}

/// Copy one cell out of a strip, row-major `CELL_H x CELL_W`.
pub fn strip_cell(strip: &Frame, cell: usize) -> Result<Vec<f32>> {
    if strip.h != STRIP_H || strip.w != STRIP_W || strip.c != 1 {
        return Err(Error::shape(
            "strip_cell",
            format!("expected {STRIP_H}x{STRIP_W}x1 strip, got {}x{}x{}", strip.h, strip.w, strip.c),
        ));
    }
    let x0 = cell * CELL_W;
    let mut out = Vec::with_capacity(CELL_W * CELL_H);
    for y in 0..CELL_H {
        for x in 0..CELL_W {
            out.push(strip.get(y, x0 + x, 0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_base_60() {
        // 754 s = 12:34; check the digit cells equal their templates.
        let strip = render_clock_strip(754).unwrap();
        for (slot, d) in DIGIT_CELLS.iter().zip([1u8, 2, 3, 4]) {
            assert_eq!(strip_cell(&strip, *slot).unwrap(), digit_template(d));
        }
    }

    #[test]
    fn boundary_times() {
        let zero = render_clock_strip(0).unwrap();
        for slot in DIGIT_CELLS {
            assert_eq!(strip_cell(&zero, slot).unwrap(), digit_template(0));
        }
        let t59 = render_clock_strip(59).unwrap();
        assert_eq!(strip_cell(&t59, 0).unwrap(), digit_template(0));
        assert_eq!(strip_cell(&t59, 1).unwrap(), digit_template(0));
        assert_eq!(strip_cell(&t59, 3).unwrap(), digit_template(5));
        assert_eq!(strip_cell(&t59, 4).unwrap(), digit_template(9));
        assert!(render_clock_strip(3600).is_err());
    }
}
