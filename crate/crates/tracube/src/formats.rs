//! Event interchange CSV, input detection and store files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Deserialize;
use tracube_core::spatial::padded_side;
use tracube_core::{Cell, CellEvent, GridMeta, Store};

use crate::error::{Error, Result};
use crate::ingest::{normalize, parse_csv, GridConfig, Normalized};

pub const EVENT_HEADER: [&str; 5] = ["id", "instant", "cx", "cy", "cz"];
pub const RAW_HEADER: [&str; 5] = ["id", "t", "x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// `id,instant,cx,cy,cz`
    Events,
    /// `id,t,x,y,z`
    Raw,
}

#[derive(Deserialize)]
struct EventRow {
    id: String,
    instant: u32,
    cx: u32,
    cy: u32,
    cz: u32,
}

/// Looks at the header line only.
pub fn detect(header: &str) -> Option<InputKind> {
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if cols == EVENT_HEADER {
        Some(InputKind::Events)
    } else if cols == RAW_HEADER {
        Some(InputKind::Raw)
    } else {
        None
    }
}

/// Reads event CSV. Dense ids follow first appearance; events come back
/// sorted and a repeated `(id, instant)` is an error.
pub fn read_events<R: Read>(input: R, side: Option<u32>, k: u32) -> Result<Normalized> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(EVENT_HEADER) {
        return Err(Error::Input("expected header id,instant,cx,cy,cz".into()));
    }
    let mut names = Vec::new();
    let mut dense: HashMap<String, u32> = HashMap::new();
    let mut events = Vec::new();
    for row in rdr.deserialize::<EventRow>() {
        let r = row?;
        let next = names.len() as u32;
        let id = *dense.entry(r.id.clone()).or_insert_with(|| {
            names.push(r.id);
            next
        });
        events.push(CellEvent::new(id, r.instant, Cell::new(r.cx, r.cy, r.cz)));
    }
    events.sort_by_key(|e| (e.object, e.instant));
    if let Some(w) = events
        .windows(2)
        .find(|w| (w[0].object, w[0].instant) == (w[1].object, w[1].instant))
    {
        return Err(Error::Input(format!(
            "object {} has two events at instant {}",
            names[w[0].object as usize], w[0].instant
        )));
    }
    let max = events.iter().map(|e| e.cell.max_coord()).max().unwrap_or(0);
    let side = match side {
        Some(s) => s,
        None => padded_side(max.saturating_add(1), k)
            .ok_or_else(|| Error::Input("grid too large".into()))?,
    };
    let instants = events.iter().map(|e| e.instant + 1).max().unwrap_or(0);
    Ok(Normalized {
        names,
        events,
        instants,
        side,
        grid: GridMeta::default(),
    })
}

pub fn write_events<W: Write>(out: W, names: &[String], events: &[CellEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENT_HEADER)?;
    for e in events {
        let name = names
            .get(e.object as usize)
            .cloned()
            .unwrap_or_else(|| e.object.to_string());
        w.write_record([
            name,
            e.instant.to_string(),
            e.cell.x.to_string(),
            e.cell.y.to_string(),
            e.cell.z.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Loaded input plus the count of raw lines skipped as malformed.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub data: Normalized,
    pub kind: InputKind,
    pub skipped: usize,
}

/// Reads either input kind, telling them apart by the header.
pub fn load_input(path: &Path, grid: &GridConfig, gap_threshold: u32) -> Result<Loaded> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or("");
    match detect(header) {
        Some(InputKind::Events) => Ok(Loaded {
            data: read_events(text.as_bytes(), grid.side, grid.k)?,
            kind: InputKind::Events,
            skipped: 0,
        }),
        Some(InputKind::Raw) => {
            let parsed = parse_csv(text.as_bytes())?;
            Ok(Loaded {
                data: normalize(&parsed.records, grid, gap_threshold)?,
                kind: InputKind::Raw,
                skipped: parsed.skipped,
            })
        }
        None => Err(Error::Input(format!(
            "{}: unrecognised header {header:?}",
            path.display()
        ))),
    }
}

pub fn save_store(path: &Path, store: &Store) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&store.serialize())?;
    f.flush()?;
    Ok(())
}

pub fn load_store(path: &Path) -> Result<Store> {
    let bytes = std::fs::read(path)?;
    Ok(Store::deserialize(&bytes)?)
}
