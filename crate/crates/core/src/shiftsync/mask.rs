//! Shift-window queries, shift vectors, and masked identity.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::loss::ClassSpace;
use crate::model::HeadOutputs;
use crate::synthgen::{ShiftDb, TeamSide};

/// Binary mask over the holistic class space; the null bit is always set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftVector {
    pub bits: Vec<bool>,
    pub side: TeamSide,
}

impl ShiftVector {
    pub fn all_ones(k: usize, side: TeamSide) -> ShiftVector {
        ShiftVector {
            bits: vec![true; k],
            side,
        }
    }

    pub fn set_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Jerseys whose shifts overlap the closed window `[t_s, t_e]`, split into
/// home and away sets. Overlap uses closed endpoints: a shift touching the
/// window at a single instant counts as present.
pub fn shifts_in_window(db: &ShiftDb, t_s: f64, t_e: f64) -> Result<(BTreeSet<u8>, BTreeSet<u8>)> {
    if t_s > t_e {
        return Err(Error::invalid(format!("window start {t_s} after end {t_e}")));
    }
    let records = db.records();
    // Records are sorted by start; everything starting after t_e is out.
    let cut = records.partition_point(|r| r.start_s <= t_e);
    let mut home = BTreeSet::new();
    let mut away = BTreeSet::new();
    for r in &records[..cut] {
        if r.end_s >= t_s {
            match r.team {
                TeamSide::Home => {
                    home.insert(r.jersey);
                }
                TeamSide::Away => {
                    away.insert(r.jersey);
                }
                TeamSide::Referee => {}
            }
        }
    }
    Ok((home, away))
}

/// Build the mask for one team: bit `j` set iff jersey `n_j` is in the set,
/// plus the always-on null bit.
pub fn build_shift_vector(
    jerseys: &BTreeSet<u8>,
    side: TeamSide,
    space: &ClassSpace,
) -> Result<ShiftVector> {
    let mut bits = vec![false; space.num_classes()];
    bits[space.null_class()] = true;
    for &j in jerseys {
        let class = space.class_of(Some(j))?;
        bits[class] = true;
    }
    Ok(ShiftVector { bits, side })
}

/// Mean of the holistic probability vectors over a tracklet's windows,
/// renormalized to sum to one.
pub fn aggregate_tracklet(windows: &[HeadOutputs]) -> Result<Vec<f64>> {
    let first = windows
        .first()
        .ok_or_else(|| Error::invalid("aggregate_tracklet on zero windows"))?;
    let k = first.p0.len();
    let mut acc = vec![0.0; k];
    for w in windows {
        if w.p0.len() != k {
            return Err(Error::shape("aggregate_tracklet", "window class counts differ".to_string()));
        }
        for (a, &p) in acc.iter_mut().zip(w.p0.data().iter()) {
            *a += p;
        }
    }
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("aggregate of zero mass"));
    }
    for a in &mut acc {
        *a /= total;
    }
    Ok(acc)
}

/// Argmax of the elementwise product `p ⊙ v`; ties break toward the lowest
/// class index. The null bit being always set rules out an all-zero product.
pub fn masked_identity(p_jn: &[f64], v: &ShiftVector) -> Result<usize> {
    if p_jn.len() != v.bits.len() {
        return Err(Error::shape(
            "masked_identity",
            format!("{} probabilities vs {} mask bits", p_jn.len(), v.bits.len()),
        ));
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, (&p, &bit)) in p_jn.iter().zip(&v.bits).enumerate() {
        let masked = if bit { p } else { 0.0 };
        if masked > best.1 {
            best = (i, masked);
        }
    }
    Ok(best.0)
}

/// Plain argmax with the same lowest-index tie-break.
pub fn unmasked_identity(p_jn: &[f64]) -> usize {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &p) in p_jn.iter().enumerate() {
        if p > best.1 {
            best = (i, p);
        }
    }
    best.0
}
