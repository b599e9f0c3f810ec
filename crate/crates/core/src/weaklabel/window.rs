//! Visibility-guaranteed window sampling and the imbalance-aware tracklet
//! draw.
//!
//! Window sampling picks a visible index `start_idx`, subtracts a random
//! offset `o < m`, clamps at zero, and takes the next `m` frames. Because
//! `o < m`, the visible frame always lands inside the window, so every
//! sampled sequence of a non-null tracklet shows the number at least once.
//! Windows overrunning the tracklet end are padded by repeating the final
//! frame.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::synthgen::{Frame, Tracklet};

/// A fixed-length contiguous window cut from one tracklet.
#[derive(Debug, Clone)]
pub struct SampledWindow {
    pub frames: Vec<Frame>,
    /// First tracklet index covered by the window.
    pub start: usize,
    pub tracklet_id: String,
}

/// Clamped window start for a chosen visible index and offset.
pub fn window_start(start_idx: usize, offset: usize) -> usize {
    start_idx.saturating_sub(offset)
}

/// The tracklet frame indices a window covers, padding past the end by
/// repeating the final frame.
pub fn window_indices(n: usize, start: usize, m: usize) -> Vec<usize> {
    (start..start + m).map(|i| i.min(n - 1)).collect()
}

fn materialize(t: &Tracklet, start: usize, m: usize) -> SampledWindow {
    let frames = window_indices(t.len(), start, m)
        .into_iter()
        .map(|i| t.frames[i].clone())
        .collect();
    SampledWindow {
        frames,
        start,
        tracklet_id: t.id.clone(),
    }
}

/// Deterministic core of the sampler: window for explicit draws
/// `(start_idx, offset)`. `start_idx` must be a visible index of `bits`.
pub fn sample_window_at(
    t: &Tracklet,
    bits: &[bool],
    m: usize,
    start_idx: usize,
    offset: usize,
) -> Result<SampledWindow> {
    if m == 0 {
        return Err(Error::invalid("window length m must be at least 1"));
    }
    if bits.len() != t.len() {
        return Err(Error::invalid(format!(
            "{} label bits for {} frames",
            bits.len(),
            t.len()
        )));
    }
    if !bits.get(start_idx).copied().unwrap_or(false) {
        return Err(Error::invalid(format!("start_idx {start_idx} is not a visible index")));
    }
    if offset >= m {
        return Err(Error::invalid(format!("offset {offset} must be < m={m}")));
    }
    Ok(materialize(t, window_start(start_idx, offset), m))
}

/// Draw a window that contains at least one visible frame. When `bits` has
/// no visible index (null tracklets), falls back to a uniform random start.
pub fn sample_window(
    t: &Tracklet,
    bits: &[bool],
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampledWindow> {
    if m == 0 {
        return Err(Error::invalid("window length m must be at least 1"));
    }
    if bits.len() != t.len() {
        return Err(Error::invalid(format!(
            "{} label bits for {} frames",
            bits.len(),
            t.len()
        )));
    }
    let visible: Vec<usize> = bits
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    if visible.is_empty() {
        return Ok(sample_window_uniform(t, m, rng)?);
    }
    let start_idx = visible[rng.random_range(0..visible.len())];
    let offset = rng.random_range(0..m);
    sample_window_at(t, bits, m, start_idx, offset)
}

/// The baseline sampler: any start position, no visibility information.
pub fn sample_window_uniform(t: &Tracklet, m: usize, rng: &mut ChaCha8Rng) -> Result<SampledWindow> {
    if m == 0 {
        return Err(Error::invalid("window length m must be at least 1"));
    }
    let start = rng.random_range(0..t.len());
    Ok(materialize(t, start, m))
}

/// Index lists for the two label strata of a dataset.
#[derive(Debug, Clone)]
pub struct StratifiedSampler {
    null_idx: Vec<usize>,
    numbered_idx: Vec<usize>,
}

impl StratifiedSampler {
    pub fn new(tracklets: &[Tracklet]) -> Result<StratifiedSampler> {
        Self::from_labels(tracklets.iter().map(|t| t.label.is_none()))
    }

    /// Build the strata from an is-null flag per dataset entry.
    pub fn from_labels(is_null: impl IntoIterator<Item = bool>) -> Result<StratifiedSampler> {
        let mut null_idx = Vec::new();
        let mut numbered_idx = Vec::new();
        for (i, null) in is_null.into_iter().enumerate() {
            if null {
                null_idx.push(i);
            } else {
                numbered_idx.push(i);
            }
        }
        if null_idx.is_empty() || numbered_idx.is_empty() {
            return Err(Error::invalid(format!(
                "stratified draw needs both strata ({} null, {} numbered)",
                null_idx.len(),
                numbered_idx.len()
            )));
        }
        Ok(StratifiedSampler {
            null_idx,
            numbered_idx,
        })
    }

    /// With probability `null_prob` a uniformly drawn null tracklet,
    /// otherwise a uniformly drawn numbered one.
    pub fn draw(&self, null_prob: f64, rng: &mut ChaCha8Rng) -> usize {
        let stratum = if rng.random::<f64>() < null_prob {
            &self.null_idx
        } else {
            &self.numbered_idx
        };
        stratum[rng.random_range(0..stratum.len())]
    }
}

/// One stratified draw straight from a tracklet slice.
pub fn draw_training_tracklet<'a>(
    dataset: &'a [Tracklet],
    null_prob: f64,
    rng: &mut ChaCha8Rng,
) -> Result<&'a Tracklet> {
    let sampler = StratifiedSampler::new(dataset)?;
    Ok(&dataset[sampler.draw(null_prob, rng)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_from;
    use crate::synthgen::{gen_tracklet, SynthConfig, TeamSide};
    use proptest::prelude::*;

    fn tracklet_with_len(n: usize, jersey: Option<u8>, seed: u64) -> Tracklet {
        let mut cfg = SynthConfig::default();
        cfg.len_range = (n, n);
        cfg.frame_h = 16;
        cfg.frame_w = 16;
        gen_tracklet(&cfg, "t", TeamSide::Home, jersey, seed).unwrap()
    }

    #[test]
    fn fixed_draw_trace_matches_algorithm() {
        let t = tracklet_with_len(5, Some(3), 1);
        let bits = [false, false, false, true, false];
        let w = sample_window_at(&t, &bits, 3, 3, 2).unwrap();
        assert_eq!(w.start, 1);
        assert_eq!(window_indices(5, w.start, 3), vec![1, 2, 3]);
        for (frame, idx) in w.frames.iter().zip([1usize, 2, 3]) {
            assert_eq!(frame.pixels, t.frames[idx].pixels);
        }
    }

    #[test]
    fn late_visibility_never_yields_a_blind_window() {
        // n=9 with the number visible only near the end; a naive front
        // sample of m=3 would show nothing.
        let t = tracklet_with_len(9, Some(12), 2);
        let mut bits = vec![false; 9];
        bits[7] = true;
        bits[8] = true;
        let mut rng = rng_from(3);
        for _ in 0..500 {
            let w = sample_window(&t, &bits, 3, &mut rng).unwrap();
            let covered = window_indices(9, w.start, 3);
            assert!(
                covered.iter().any(|&i| bits[i]),
                "window at {} misses the visible frames",
                w.start
            );
        }
    }

    #[test]
    fn all_ones_labels_accept_any_window() {
        let t = tracklet_with_len(6, Some(4), 3);
        let bits = vec![true; 6];
        let mut rng = rng_from(4);
        for _ in 0..100 {
            let w = sample_window(&t, &bits, 4, &mut rng).unwrap();
            assert!(w.start < 6);
            assert_eq!(w.frames.len(), 4);
        }
    }

    #[test]
    fn all_zero_labels_fall_back_to_uniform() {
        let t = tracklet_with_len(8, None, 5);
        let bits = vec![false; 8];
        let mut rng = rng_from(6);
        let mut starts = std::collections::HashSet::new();
        for _ in 0..200 {
            let w = sample_window(&t, &bits, 3, &mut rng).unwrap();
            starts.insert(w.start);
        }
        // Uniform fallback reaches starts beyond any visible index.
        assert!(starts.len() > 4);
    }

    #[test]
    fn zero_m_is_rejected() {
        let t = tracklet_with_len(4, Some(2), 7);
        let mut rng = rng_from(8);
        assert!(sample_window(&t, &[true; 4], 0, &mut rng).is_err());
    }

    #[test]
    fn overrun_pads_with_final_frame() {
        let t = tracklet_with_len(4, Some(2), 9);
        let bits = [false, false, false, true];
        let w = sample_window_at(&t, &bits, 3, 3, 0).unwrap();
        assert_eq!(w.frames.len(), 3);
        assert_eq!(w.frames[1].pixels, t.frames[3].pixels.clone());
        assert_eq!(w.frames[2].pixels, t.frames[3].pixels.clone());
    }

    #[test]
    fn stratified_draw_extremes() {
        let tracklets: Vec<Tracklet> = vec![
            tracklet_with_len(4, None, 10),
            tracklet_with_len(4, Some(3), 11),
            tracklet_with_len(4, Some(9), 12),
        ];
        let mut rng = rng_from(13);
        for _ in 0..50 {
            assert!(draw_training_tracklet(&tracklets, 0.0, &mut rng)
                .unwrap()
                .label
                .is_some());
            assert!(draw_training_tracklet(&tracklets, 1.0, &mut rng)
                .unwrap()
                .label
                .is_none());
        }
        let only_null = vec![tracklet_with_len(4, None, 14)];
        assert!(draw_training_tracklet(&only_null, 0.5, &mut rng).is_err());
    }

    proptest! {
        /// Exhaustive guarantee at small sizes: every (start_idx, offset)
        /// pair puts a visible frame inside the window.
        #[test]
        fn every_draw_covers_a_visible_frame(
            n in 1usize..=12,
            m in 1usize..=4,
            pattern in 1u16..4096,
        ) {
            let bits: Vec<bool> = (0..n).map(|i| pattern >> i & 1 == 1).collect();
            prop_assume!(bits.iter().any(|&b| b));
            let t = tracklet_with_len(n, Some(7), 99);
            for start_idx in 0..n {
                if !bits[start_idx] { continue; }
                for offset in 0..m {
                    let w = sample_window_at(&t, &bits, m, start_idx, offset).unwrap();
                    let covered = window_indices(n, w.start, m);
                    prop_assert!(covered.iter().any(|&i| bits[i]));
                    prop_assert!(covered.contains(&start_idx));
                }
            }
        }
    }
}
