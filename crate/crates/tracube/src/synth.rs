//! Deterministic synthetic corpora: piecewise constant-velocity tracks
//! with injected gaps.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracube_core::{Cell, CellEvent};

use crate::error::{Error, Result};
use crate::ingest::{GridConfig, RawRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub objects: u32,
    pub instants: u32,
    pub side: u32,
    pub seed: u64,
    /// Instants between velocity changes.
    pub segment_len: RangeInclusive<u32>,
    /// Largest absolute per-axis step.
    pub max_speed: [u32; 3],
    /// Chance, at each present instant, that a gap starts.
    pub gap_prob: f64,
    pub gap_len: RangeInclusive<u32>,
    /// Fraction of the horizon each object is alive for, at least.
    pub min_lifespan: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            objects: 100,
            instants: 5000,
            side: 256,
            seed: 1,
            segment_len: 200..=1200,
            max_speed: [2, 2, 1],
            gap_prob: 0.001,
            gap_len: 2..=120,
            min_lifespan: 0.5,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Usage(m.into()));
        if self.side < 2 {
            return bad("side must be at least 2");
        }
        if self.segment_len.is_empty() || *self.segment_len.start() == 0 {
            return bad("segment lengths must be a non-empty positive range");
        }
        if self.gap_len.is_empty() || *self.gap_len.start() == 0 {
            return bad("gap lengths must be a non-empty positive range");
        }
        if !(0.0..=1.0).contains(&self.gap_prob) {
            return bad("gap probability must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.min_lifespan) {
            return bad("lifespan fraction must lie in [0, 1]");
        }
        if self.max_speed.iter().any(|&s| s >= self.side) {
            return bad("speed must be below the grid side");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub names: Vec<String>,
    /// Sorted by `(object, instant)`.
    pub events: Vec<CellEvent>,
    pub instants: u32,
    pub side: u32,
}

impl Synthetic {
    /// Raw records placing each event at its cell centre under `grid`.
    pub fn raw_records(&self, grid: &GridConfig) -> Vec<RawRecord> {
        let t0 = grid.time_origin.unwrap_or(0.0);
        self.events
            .iter()
            .map(|e| {
                let c = [e.cell.x, e.cell.y, e.cell.z];
                let p = [0, 1, 2].map(|a| grid.origin[a] + (c[a] as f64 + 0.5) * grid.cell_size[a]);
                RawRecord {
                    id: self.names[e.object as usize].clone(),
                    t: t0 + e.instant as f64 * grid.step_seconds,
                    x: p[0],
                    y: p[1],
                    z: p[2],
                }
            })
            .collect()
    }
}

pub fn gen_synthetic(p: &SynthParams) -> Result<Synthetic> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut events = Vec::new();
    let names = (0..p.objects)
        .map(|i| format!("{:06x}", 0x40_0000 + i))
        .collect();
    let t_end = p.instants;
    for o in 0..p.objects {
        if t_end == 0 {
            break;
        }
        let life = ((t_end as f64 * p.min_lifespan).ceil() as u32).clamp(1, t_end);
        let start = rng.gen_range(0..=t_end - life);
        let end = rng.gen_range(start + life..=t_end);
        let mut pos = [0, 1, 2].map(|_| rng.gen_range(0..p.side) as i64);
        let mut vel = random_velocity(&mut rng, p);
        let mut seg_left = rng.gen_range(p.segment_len.clone());
        let mut gap_left = 0u32;
        for t in start..end {
            if gap_left > 0 {
                gap_left -= 1;
            } else if t > start && p.gap_prob > 0.0 && rng.gen_bool(p.gap_prob) {
                gap_left = rng.gen_range(p.gap_len.clone()) - 1;
            } else {
                events.push(CellEvent::new(
                    o,
                    t,
                    Cell::new(pos[0] as u32, pos[1] as u32, pos[2] as u32),
                ));
            }
            if seg_left == 0 {
                vel = random_velocity(&mut rng, p);
                seg_left = rng.gen_range(p.segment_len.clone());
            }
            seg_left -= 1;
            for a in 0..3 {
                let next = pos[a] + vel[a];
                if next < 0 || next >= p.side as i64 {
                    vel[a] = -vel[a];
                }
                pos[a] = (pos[a] + vel[a]).clamp(0, p.side as i64 - 1);
            }
        }
    }
    Ok(Synthetic {
        names,
        events,
        instants: p.instants,
        side: p.side,
    })
}

fn random_velocity(rng: &mut ChaCha8Rng, p: &SynthParams) -> [i64; 3] {
    p.max_speed.map(|m| {
        let m = m as i64;
        rng.gen_range(-m..=m)
    })
}

/// Writes raw `id,t,x,y,z` CSV.
pub fn write_raw_csv<W: std::io::Write>(out: W, records: &[RawRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "t", "x", "y", "z"])?;
    for r in records {
        w.write_record([
            r.id.clone(),
            r.t.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            r.z.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
