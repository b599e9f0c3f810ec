//! Player shift database: generation and JSON-lines persistence.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_from;
use crate::synthgen::gen::Rosters;
use crate::synthgen::types::{ShiftRecord, TeamSide};

/// Immutable set of shift records, sorted by start time for window queries.
#[derive(Debug, Clone)]
pub struct ShiftDb {
    records: Vec<ShiftRecord>,
}

impl ShiftDb {
    pub fn new(mut records: Vec<ShiftRecord>) -> Result<ShiftDb> {
        for r in &records {
            r.validate()?;
        }
        records.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        Ok(ShiftDb { records })
    }

    pub fn records(&self) -> &[ShiftRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct jerseys a team fielded at any point of the game.
    pub fn roster(&self, team: TeamSide) -> Vec<u8> {
        let mut js: Vec<u8> = self
            .records
            .iter()
            .filter(|r| r.team == team)
            .map(|r| r.jersey)
            .collect();
        js.sort_unstable();
        js.dedup();
        js
    }

    /// Records whose closed interval contains the instant `t`.
    pub fn active_at(&self, team: TeamSide, t: f64) -> Vec<&ShiftRecord> {
        self.records
            .iter()
            .filter(|r| r.team == team && r.start_s <= t && t <= r.end_s)
            .collect()
    }

    /// One record per line: `{"team":"home","jersey":12,"start_s":0.0,"end_s":42.5}`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for r in &self.records {
            let line = serde_json::to_string(r)
                .map_err(|e| Error::format("shift db", "record", e.to_string()))?;
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ShiftDb> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ShiftRecord = serde_json::from_str(&line).map_err(|e| {
                Error::format("shift db", format!("line {}", lineno + 1), e.to_string())
            })?;
            records.push(rec);
        }
        ShiftDb::new(records)
    }
}

/// Write helper used when the db belongs inside a dataset directory.
pub fn write_shift_db(db: &ShiftDb, dir: &Path) -> Result<()> {
    let mut f = fs::File::create(dir.join("shifts.jsonl")).map_err(|e| Error::io(dir, e))?;
    for r in db.records() {
        let line =
            serde_json::to_string(r).map_err(|e| Error::format("shift db", "record", e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

/// Generate a covering shift database: at every instant each team has
/// exactly six players on the ice. Interior shift boundaries land on
/// half-second marks so that integer-second point queries never straddle a
/// swap. Deterministic in the seed.
pub fn gen_shift_db(
    rosters: &Rosters,
    game_length_s: f64,
    shift_len_s: (f64, f64),
    seed: u64,
) -> Result<ShiftDb> {
    if rosters.home.len() < 6 || rosters.away.len() < 6 {
        return Err(Error::invalid(format!(
            "rosters need at least 6 players (home {}, away {})",
            rosters.home.len(),
            rosters.away.len()
        )));
    }
    if !(shift_len_s.0 > 0.0 && shift_len_s.0 <= shift_len_s.1) {
        return Err(Error::invalid("shift length range must be positive"));
    }
    if game_length_s <= 0.0 {
        return Err(Error::invalid("game length must be positive"));
    }
    let mut rng = rng_from(seed);
    let mut records = Vec::new();

    for (team, roster) in [
        (TeamSide::Home, &rosters.home),
        (TeamSide::Away, &rosters.away),
    ] {
        // Boundary snap: final shifts end exactly at the buzzer, interior
        // swaps at x.5 seconds.
        let snap = |t: f64| -> f64 {
            if t >= game_length_s - 0.75 {
                game_length_s
            } else {
                t.floor() + 0.5
            }
        };
        let draw_len = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
            if shift_len_s.0 == shift_len_s.1 {
                shift_len_s.0
            } else {
                rng.random_range(shift_len_s.0..shift_len_s.1)
            }
        };

        // Six concurrent slots; swap the earliest-expiring player for one on
        // the bench.
        let mut on_ice: Vec<u8> = Vec::with_capacity(6);
        let mut pool: Vec<u8> = roster.clone();
        for _ in 0..6 {
            let i = rng.random_range(0..pool.len());
            on_ice.push(pool.swap_remove(i));
        }
        // (jersey, shift end, index of its open record)
        let mut slots: Vec<(u8, f64, usize)> = Vec::with_capacity(6);
        for &jersey in &on_ice {
            let end = snap(draw_len(&mut rng));
            records.push(ShiftRecord {
                team,
                jersey,
                start_s: 0.0,
                end_s: end,
            });
            slots.push((jersey, end, records.len() - 1));
        }

        loop {
            let (slot_idx, _) = match slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.1 < game_length_s)
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
            {
                Some((i, s)) => (i, s.1),
                None => break,
            };
            let (leaving, swap_t, _) = slots[slot_idx];
            let others: Vec<u8> = slots
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != slot_idx)
                .map(|(_, s)| s.0)
                .collect();
            let bench: Vec<u8> = roster
                .iter()
                .copied()
                .filter(|j| !others.contains(j))
                .collect();
            let incoming = bench[rng.random_range(0..bench.len())];
            let end = snap(swap_t + draw_len(&mut rng));
            if incoming == leaving {
                // Player stays out; extend the open record.
                let rec_idx = slots[slot_idx].2;
                records[rec_idx].end_s = end;
                slots[slot_idx].1 = end;
            } else {
                records.push(ShiftRecord {
                    team,
                    jersey: incoming,
                    start_s: swap_t,
                    end_s: end,
                });
                slots[slot_idx] = (incoming, end, records.len() - 1);
            }
        }
    }

    ShiftDb::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosters() -> Rosters {
        Rosters {
            home: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
            away: vec![2, 4, 6, 8, 10, 12, 14, 16, 18, 20],
        }
    }

    #[test]
    fn six_players_active_at_every_whole_second() {
        let db = gen_shift_db(&rosters(), 600.0, (30.0, 90.0), 5).unwrap();
        for t in 0..=600 {
            for team in [TeamSide::Home, TeamSide::Away] {
                let active = db.active_at(team, t as f64);
                assert_eq!(active.len(), 6, "t={t} {team}: {active:?}");
                let mut js: Vec<u8> = active.iter().map(|r| r.jersey).collect();
                js.sort_unstable();
                js.dedup();
                assert_eq!(js.len(), 6, "duplicate jersey on ice at t={t}");
            }
        }
    }

    #[test]
    fn degenerate_single_shift_game_yields_six_records_per_team() {
        let db = gen_shift_db(&rosters(), 60.0, (60.0, 60.0), 3).unwrap();
        let home: Vec<_> = db.records().iter().filter(|r| r.team == TeamSide::Home).collect();
        let away: Vec<_> = db.records().iter().filter(|r| r.team == TeamSide::Away).collect();
        assert_eq!(home.len(), 6);
        assert_eq!(away.len(), 6);
        for r in db.records() {
            assert_eq!((r.start_s, r.end_s), (0.0, 60.0));
        }
    }

    #[test]
    fn same_seed_gives_identical_database() {
        let a = gen_shift_db(&rosters(), 900.0, (20.0, 45.0), 77).unwrap();
        let b = gen_shift_db(&rosters(), 900.0, (20.0, 45.0), 77).unwrap();
        assert_eq!(a.records(), b.records());
    }

    #[test]
    fn small_roster_is_rejected() {
        let small = Rosters {
            home: vec![1, 2, 3, 4, 5],
            away: vec![1, 2, 3, 4, 5, 6],
        };
        assert!(gen_shift_db(&small, 60.0, (30.0, 60.0), 1).is_err());
    }

    #[test]
    fn jsonl_round_trip(){
        let dir = tempfile::tempdir().unwrap();
        let db = gen_shift_db(&rosters(), 300.0, (30.0, 60.0), 9).unwrap();
        let path = dir.path().join("shifts.jsonl");
        db.save(&path).unwrap();
        let back = ShiftDb::load(&path).unwrap();
        assert_eq!(db.records(), back.records());
    }
}
