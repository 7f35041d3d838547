//! Raw position records to regular-instant cell events.

use std::collections::HashMap;
use std::io::Read;

use serde::Deserialize;
use tracube_core::spatial::padded_side;
use tracube_core::{Cell, CellEvent, GridMeta};

use crate::error::{Error, Result};

/// Default gap length, in instants, from which a gap is left open (15 min).
pub const DEFAULT_GAP_THRESHOLD: u32 = 60;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub origin: [f64; 3],
    pub cell_size: [f64; 3],
    pub step_seconds: f64,
    /// Timestamp of instant 0; the earliest record when `None`.
    pub time_origin: Option<f64>,
    /// Cube side; the smallest power of `k` holding every cell when `None`.
    pub side: Option<u32>,
    pub k: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            origin: [0.0; 3],
            cell_size: [5000.0, 5000.0, 100.0],
            step_seconds: 15.0,
            time_origin: None,
            side: None,
            k: 2,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::Usage("cell sizes must be positive".into()));
        }
        if !(self.step_seconds > 0.0 && self.step_seconds.is_finite()) {
            return Err(Error::Usage("instant step must be positive".into()));
        }
        Ok(())
    }

    /// Grid metadata stored alongside a store built from this configuration.
    pub fn meta(&self, time_origin: f64) -> GridMeta {
        GridMeta {
            origin: self.origin,
            cell_size: self.cell_size,
            time_origin,
            step_seconds: self.step_seconds,
            interpolated_from: 0,
        }
    }

    /// Rebuilds the configuration a store was normalized with.
    pub fn from_meta(meta: &GridMeta, side: u32, k: u32) -> Self {
        GridConfig {
            origin: meta.origin,
            cell_size: meta.cell_size,
            step_seconds: meta.step_seconds,
            time_origin: Some(meta.time_origin),
            side: Some(side),
            k,
        }
    }
}

/// Parsed records and the number of malformed lines skipped.
#[derive(Debug, Clone, Default)]
pub struct Parsed {
    pub records: Vec<RawRecord>,
    pub skipped: usize,
}

/// Parses `id,t,x,y,z` CSV. Lines that fail to parse or hold non-finite
/// numbers are skipped and counted.
pub fn parse_csv<R: Read>(input: R) -> Result<Parsed> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let expected = ["id", "t", "x", "y", "z"];
    if headers.len() < expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Input(format!(
            "expected header id,t,x,y,z, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Parsed::default();
    for row in rdr.deserialize::<RawRecord>() {
        match row {
            Ok(r) if [r.t, r.x, r.y, r.z].iter().all(|v| v.is_finite()) => out.records.push(r),
            Ok(_) => out.skipped += 1,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => out.skipped += 1,
        }
    }
    Ok(out)
}

/// Regular-instant events with their object names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Normalized {
    /// External id of each dense id, in order of first appearance.
    pub names: Vec<String>,
    /// Sorted by `(object, instant)`.
    pub events: Vec<CellEvent>,
    pub instants: u32,
    pub side: u32,
    pub grid: GridMeta,
}

/// Snaps records to instants and cells.
///
/// Each record goes to the nearest instant; when several share one, the
/// closest to the instant wins and ties keep the earlier record. Instants
/// between two kept records less than `gap_threshold` instants apart are
/// filled by linear interpolation; longer gaps stay unknown.
pub fn normalize(
    records: &[RawRecord],
    grid: &GridConfig,
    gap_threshold: u32,
) -> Result<Normalized> {
    grid.validate()?;
    let mut names: Vec<String> = Vec::new();
    let mut dense: HashMap<&str, u32> = HashMap::new();
    let mut per_object: Vec<Vec<&RawRecord>> = Vec::new();
    for r in records {
        let id = *dense.entry(r.id.as_str()).or_insert_with(|| {
            names.push(r.id.clone());
            per_object.push(Vec::new());
            names.len() as u32 - 1
        });
        per_object[id as usize].push(r);
    }
    let time_origin = grid
        .time_origin
        .unwrap_or_else(|| records.iter().map(|r| r.t).fold(f64::INFINITY, f64::min));
    let time_origin = if time_origin.is_finite() {
        time_origin
    } else {
        0.0
    };

    let instant_of = |t: f64| ((t - time_origin) / grid.step_seconds).round();
    let mut snapped: Vec<Vec<(u32, [f64; 3])>> = Vec::with_capacity(per_object.len());
    for recs in &mut per_object {
        recs.sort_by(|a, b| a.t.total_cmp(&b.t));
        // (instant, distance to its boundary, position); first kept on ties.
        let mut kept: Vec<(u32, f64, [f64; 3])> = Vec::new();
        for r in recs.iter() {
            let i = instant_of(r.t);
            if i < 0.0 || i > u32::MAX as f64 - 1.0 {
                continue;
            }
            let dist = (r.t - (time_origin + i * grid.step_seconds)).abs();
            let i = i as u32;
            match kept.last_mut() {
                Some(last) if last.0 == i => {
                    if dist < last.1 {
                        *last = (i, dist, [r.x, r.y, r.z]);
                    }
                }
                _ => kept.push((i, dist, [r.x, r.y, r.z])),
            }
        }
        snapped.push(kept.into_iter().map(|(i, _, p)| (i, p)).collect());
    }

    let to_cell = |p: [f64; 3]| -> [i64; 3] {
        [0, 1, 2].map(|a| {
            ((p[a] - grid.origin[a]) / grid.cell_size[a])
                .floor()
                .max(0.0)
                .min(u32::MAX as f64) as i64
        })
    };
    let max_coord = snapped
        .iter()
        .flatten()
        .flat_map(|&(_, p)| to_cell(p))
        .max()
        .unwrap_or(0)
        .min(u32::MAX as i64 - 1) as u32;
    let side = match grid.side {
        Some(s) => s,
        None => padded_side(max_coord + 1, grid.k)
            .ok_or_else(|| Error::Input("grid too large".into()))?,
    };
    let clamp = |c: [i64; 3]| {
        let m = side as i64 - 1;
        Cell::new(c[0].min(m) as u32, c[1].min(m) as u32, c[2].min(m) as u32)
    };

    let mut events = Vec::new();
    for (o, kept) in snapped.iter().enumerate() {
        let o = o as u32;
        for (j, &(i, p)) in kept.iter().enumerate() {
            events.push(CellEvent::new(o, i, clamp(to_cell(p))));
            if let Some(&(i2, p2)) = kept.get(j + 1) {
                let span = i2 - i;
                if span > 1 && span < gap_threshold {
                    for k in 1..span {
                        let f = k as f64 / span as f64;
                        let q = [0, 1, 2].map(|a| p[a] + (p2[a] - p[a]) * f);
                        events.push(CellEvent::new(o, i + k, clamp(to_cell(q))));
                    }
                }
            }
        }
    }
    let instants = events.iter().map(|e| e.instant + 1).max().unwrap_or(0);
    Ok(Normalized {
        names,
        events,
        instants,
        side,
        grid: grid.meta(time_origin),
    })
}

/// Fills every gap between two known instants `t1 < t2` of an object with
/// `t2 - t1 >= threshold` by rounded per-axis linear interpolation. Known
/// events are kept; leading and trailing absences are never filled.
/// `events` must be sorted by `(object, instant)`.
pub fn interpolate_gaps(events: &[CellEvent], threshold: u32) -> Vec<CellEvent> {
    let mut out = Vec::with_capacity(events.len());
    for (j, e) in events.iter().enumerate() {
        out.push(*e);
        let Some(next) = events.get(j + 1) else {
            continue;
        };
        let span = next.instant.saturating_sub(e.instant);
        if next.object != e.object || span < 2 || span < threshold {
            continue;
        }
        let a = [e.cell.x, e.cell.y, e.cell.z].map(i64::from);
        let b = [next.cell.x, next.cell.y, next.cell.z].map(i64::from);
        for k in 1..span {
            let c = [0, 1, 2].map(|i| {
                let v = a[i] as f64 + (b[i] - a[i]) as f64 * k as f64 / span as f64;
                v.round() as u32
            });
            out.push(CellEvent::new(
                e.object,
                e.instant + k,
                Cell::new(c[0], c[1], c[2]),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, t: f64, x: f64, y: f64, z: f64) -> RawRecord {
        RawRecord {
            id: id.into(),
            t,
            x,
            y,
            z,
        }
    }

    fn unit_grid() -> GridConfig {
        GridConfig {
            cell_size: [1.0; 3],
            side: Some(64),
            ..Default::default()
        }
    }

    #[test]
    fn parse_counts_malformed_lines() {
        let data = "id,t,x,y,z\na,0,1,2,3\nb,15,1,2,high\nc,30,1,2\nd,45,1,NaN,3\n";
        let p = parse_csv(data.as_bytes()).unwrap();
        assert_eq!(p.records, vec![rec("a", 0.0, 1.0, 2.0, 3.0)]);
        assert_eq!(p.skipped, 3);
        assert!(parse_csv("a,b,c\n".as_bytes()).is_err());
        assert_eq!(
            parse_csv("id,t,x,y,z\n".as_bytes()).unwrap().records.len(),
            0
        );
    }

    #[test]
    fn thirty_seconds_apart_gives_three_instants() {
        let recs = [rec("a", 0.0, 0.0, 0.0, 0.0), rec("a", 30.0, 4.0, 8.0, 2.0)];
        let n = normalize(&recs, &unit_grid(), DEFAULT_GAP_THRESHOLD).unwrap();
        let cells: Vec<_> = n.events.iter().map(|e| (e.instant, e.cell)).collect();
        assert_eq!(
            cells,
            vec![
                (0, Cell::new(0, 0, 0)),
                (1, Cell::new(2, 4, 1)),
                (2, Cell::new(4, 8, 2))
            ]
        );
    }

    #[test]
    fn long_gap_stays_open() {
        let recs = [
            rec("a", 0.0, 0.0, 0.0, 0.0),
            rec("a", 1200.0, 1.0, 1.0, 1.0),
        ];
        let n = normalize(&recs, &unit_grid(), DEFAULT_GAP_THRESHOLD).unwrap();
        assert_eq!(n.events.len(), 2);
        assert_eq!(n.events[1].instant, 80);
    }

    #[test]
    fn boundary_goes_to_higher_cell() {
        let grid = GridConfig {
            cell_size: [5000.0, 5000.0, 100.0],
            side: Some(8),
            ..Default::default()
        };
        let n = normalize(&[rec("a", 0.0, 5000.0, 4999.9, 100.0)], &grid, 60).unwrap();
        assert_eq!(n.events[0].cell, Cell::new(1, 0, 1));
    }

    #[test]
    fn nearest_record_wins_an_instant() {
        let recs = [
            rec("a", 13.0, 1.0, 0.0, 0.0),
            rec("a", 16.0, 2.0, 0.0, 0.0),
            rec("a", 14.0, 3.0, 0.0, 0.0),
            rec("a", 0.0, 0.0, 0.0, 0.0),
        ];
        let n = normalize(&recs, &unit_grid(), 60).unwrap();
        // 14 and 16 are both one second away from 15; 14 is earlier.
        assert_eq!(n.events[1].cell, Cell::new(3, 0, 0));
    }

    #[test]
    fn dense_ids_follow_first_appearance() {
        let recs = [
            rec("zz", 0.0, 0.0, 0.0, 0.0),
            rec("aa", 0.0, 1.0, 0.0, 0.0),
            rec("zz", 15.0, 0.0, 0.0, 0.0),
        ];
        let n = normalize(&recs, &unit_grid(), 60).unwrap();
        assert_eq!(n.names, vec!["zz".to_string(), "aa".to_string()]);
        assert_eq!(n.events[0].object, 0);
        assert_eq!(n.events.iter().filter(|e| e.object == 1).count(), 1);
    }

    #[test]
    fn normalize_is_idempotent_on_regular_input() {
        let recs: Vec<_> = (0..10)
            .map(|i| rec("a", i as f64 * 15.0, i as f64 + 0.5, 3.5, 1.5))
            .collect();
        let n = normalize(&recs, &unit_grid(), 60).unwrap();
        let again: Vec<_> = n
            .events
            .iter()
            .map(|e| {
                rec(
                    "a",
                    e.instant as f64 * 15.0,
                    e.cell.x as f64 + 0.5,
                    e.cell.y as f64 + 0.5,
                    e.cell.z as f64 + 0.5,
                )
            })
            .collect();
        assert_eq!(
            normalize(&again, &unit_grid(), 60).unwrap().events,
            n.events
        );
    }

    #[test]
    fn cells_are_clamped_into_the_grid() {
        let grid = GridConfig {
            cell_size: [1.0; 3],
            side: Some(4),
            ..Default::default()
        };
        let n = normalize(&[rec("a", 0.0, -3.0, 9.0, 2.0)], &grid, 60).unwrap();
        assert_eq!(n.events[0].cell, Cell::new(0, 3, 2));
    }

    #[test]
    fn interpolation_fills_only_long_gaps() {
        let e = |t, x| CellEvent::new(0, t, Cell::new(x, 0, 0));
        let events = vec![e(5, 0), e(65, 60), e(70, 60)];
        let filled = interpolate_gaps(&events, 60);
        assert_eq!(filled.len(), 3 + 59);
        assert_eq!(filled[0], e(5, 0));
        assert_eq!(filled[30], e(35, 30));
        assert!(filled.iter().all(|x| x.instant >= 5));
        assert_eq!(interpolate_gaps(&events, 1000), events);
        let other = vec![e(0, 0), CellEvent::new(1, 100, Cell::new(9, 9, 9))];
        assert_eq!(interpolate_gaps(&other, 10), other);
    }

    #[test]
    fn interpolation_rounds_per_axis() {
        let a = CellEvent::new(0, 0, Cell::new(0, 10, 5));
        let b = CellEvent::new(0, 3, Cell::new(2, 0, 5));
        let f = interpolate_gaps(&[a, b], 3);
        let cells: Vec<_> = f.iter().map(|e| e.cell).collect();
        assert_eq!(
            cells,
            vec![
                Cell::new(0, 10, 5),
                Cell::new(1, 7, 5),
                Cell::new(1, 3, 5),
                Cell::new(2, 0, 5)
            ]
        );
    }
}
