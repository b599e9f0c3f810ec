//! Fixed 5x7 bitmap glyphs for the digits 0-9.
//!
//! The same bitmaps back the jersey stamps and the scoreboard strip, so the
//! clock reader can template-match exactly.

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;

#[rustfmt::skip]
const DIGITS: [[u8; GLYPH_H]; 10] = [
    // Each row is a 5-bit mask, MSB = leftmost column.
    [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110], // 0
    [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110], // 1
    [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111], // 2
    [0b01110, 0b10001, 0b00001, 0b00110, 0b00001, 0b10001, 0b01110], // 3
    [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010], // 4
    [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110], // 5
    [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110], // 6
    [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000], // 7
    [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110], // 8
    [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100], // 9
];

/// Whether the glyph for `digit` has ink at `(row, col)`.
pub fn glyph_bit(digit: u8, row: usize, col: usize) -> bool {
    debug_assert!(digit < 10 && row < GLYPH_H && col < GLYPH_W);
    DIGITS[digit as usize][row] >> (GLYPH_W - 1 - col) & 1 == 1
}

/// Continuous ink coverage of a glyph sampled at `(u, v)` in glyph-local
/// pixel coordinates (bilinear between the bitmap cells; 0 outside).
pub fn glyph_coverage(digit: u8, u: f64, v: f64) -> f64 {
    let sample = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= GLYPH_H as isize || c >= GLYPH_W as isize {
            0.0
        } else if glyph_bit(digit, r as usize, c as usize) {
            1.0
        } else {
            0.0
        }
    };
    let (cf, rf) = (u - 0.5, v - 0.5);
    let (c0, r0) = (cf.floor(), rf.floor());
    let (tx, ty) = (cf - c0, rf - r0);
    let (c0, r0) = (c0 as isize, r0 as isize);
    let top = sample(r0, c0) * (1.0 - tx) + sample(r0, c0 + 1) * tx;
    let bot = sample(r0 + 1, c0) * (1.0 - tx) + sample(r0 + 1, c0 + 1) * tx;
    top * (1.0 - ty) + bot * ty
}

/// Digit glyphs of a jersey number, most significant first.
pub fn jersey_digits(jersey: u8) -> Vec<u8> {
    if jersey < 10 {
        vec![jersey]
    } else {
        vec![jersey / 10, jersey % 10]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_digits_have_ink_and_background() {
        for d in 0..10u8 {
            let ink: usize = (0..GLYPH_H)
                .flat_map(|r| (0..GLYPH_W).map(move |c| (r, c)))
                .filter(|&(r, c)| glyph_bit(d, r, c))
                .count();
            assert!(ink > 5 && ink < GLYPH_W * GLYPH_H, "digit {d} has {ink} ink px");
        }
    }

    #[test]
    fn glyphs_are_pairwise_distinct() {
        for a in 0..10u8 {
            for b in (a + 1)..10 {
                let same = (0..GLYPH_H).all(|r| {
                    (0..GLYPH_W).all(|c| glyph_bit(a, r, c) == glyph_bit(b, r, c))
                });
                assert!(!same, "digits {a} and {b} share a bitmap");
            }
        }
    }

    #[test]
    fn coverage_interpolates_at_cell_centers() {
        for d in 0..10u8 {
            for r in 0..GLYPH_H {
                for c in 0..GLYPH_W {
                    let want = if glyph_bit(d, r, c) { 1.0 } else { 0.0 };
                    let got = glyph_coverage(d, c as f64 + 0.5, r as f64 + 0.5);
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn two_digit_split() {
        assert_eq!(jersey_digits(12), vec![1, 2]);
        assert_eq!(jersey_digits(2), vec![2]);
        assert_eq!(jersey_digits(97), vec![9, 7]);
    }
}
