use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use core::oracle::OracleStore;
use core::{Cell, CellBox, CellEvent, Direction, QueryOptions, Store, StoreConfig, StoreInput};
use serde_json::json;
use tracube::error::{Error, Result};
use tracube::formats::{load_input, load_store, save_store, write_events};
use tracube::ingest::{interpolate_gaps, GridConfig, Normalized, DEFAULT_GAP_THRESHOLD};
use tracube::suite::{self, Kind, QueryGen};
use tracube::synth::{gen_synthetic, write_raw_csv, SynthParams};
use tracube::{bench, core};

/// Compressed, self-indexed store for 3D trajectories.
///
/// Inputs are CSV with either header `id,t,x,y,z` (raw positions, times in
/// seconds) or `id,instant,cx,cy,cz` (cell events). Exit status: 0 success,
/// 1 verification mismatch, 2 usage error, 3 I/O or corrupt data.
#[derive(Parser)]
#[command(name = "tracube", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a store file from an input CSV.
    Build {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        /// Instants between snapshots.
        #[arg(long, default_value_t = 120)]
        period: u32,
    },
    /// Run one query; results go to stdout as CSV.
    Query {
        #[command(subcommand)]
        query: QueryCmd,
    },
    /// Component sizes and compression ratio against 4 bytes per record.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compression ratio for several snapshot periods.
    ///
    /// CSV columns: period,total_bytes,baseline_bytes,ratio,rules,symbols,codewords
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', default_value = "120,240,360,720")]
        periods: Vec<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Check randomized query suites against a brute-force scan of the input.
    ///
    /// A suite of size N holds 20N positions, N trajectories, N slices of
    /// side 20 and 160, and N intervals of 50 and 400 instants.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Threshold used when the input was normalized.
        #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
        gap_threshold: u32,
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic corpus as event CSV, or raw CSV with --raw.
    Gen {
        #[arg(long, default_value_t = 100)]
        objects: u32,
        #[arg(long, default_value_t = 5000)]
        instants: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        side: u32,
        /// Chance per present instant that a gap starts.
        #[arg(long, default_value_t = 0.001)]
        gap_prob: f64,
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query latencies for one suite shape.
    ///
    /// CSV columns: suite,queries,mean_us,p50_us,p95_us,p99_us,max_us,results
    Bench {
        #[arg(long)]
        store: PathBuf,
        /// position, trajectory, slice-small, slice-large, interval-small or interval-large.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Disable bounding-box pruning.
        #[arg(long)]
        no_prune: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Grid side; derived from the data when omitted.
    #[arg(long)]
    side: Option<u32>,
    /// Fill absences of at least --gap-threshold instants.
    #[arg(long)]
    interpolate: bool,
    #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
    gap_threshold: u32,
    /// Cell size per axis for raw input.
    #[arg(long, value_delimiter = ',', default_values_t = [5000.0, 5000.0, 100.0])]
    cell_size: Vec<f64>,
    /// Seconds per instant for raw input.
    #[arg(long, default_value_t = 15.0)]
    step: f64,
}

#[derive(Subcommand)]
enum QueryCmd {
    /// CSV columns: id,instant,cx,cy,cz (no row when unknown).
    Position {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        object: String,
        #[arg(long)]
        t: u32,
    },
    /// CSV columns: instant,cx,cy,cz (empty cells when unknown).
    Trajectory {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        object: String,
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
    },
    /// CSV columns: id,cx,cy,cz.
    Slice {
        #[arg(long)]
        store: PathBuf,
        /// x0,y0,z0,x1,y1,z1, inclusive.
        #[arg(long = "box", value_delimiter = ',')]
        region: Vec<u32>,
        #[arg(long)]
        t: u32,
    },
    /// CSV column: id.
    Interval {
        #[arg(long)]
        store: PathBuf,
        #[arg(long = "box", value_delimiter = ',')]
        region: Vec<u32>,
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("tracube: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match cmd {
        Command::Build {
            input,
            out: path,
            period,
        } => {
            let (data, config) = prepare(&input, period)?;
            let store = build_store(&data, &config)?;
            save_store(&path, &store)?;
            let s = store.stats();
            writeln!(
                out,
                "objects={} instants={} bytes={} ratio={:.4}",
                store.objects(),
                store.instants(),
                s.total_bytes,
                s.ratio
            )?;
            0
        }
        Command::Query { query } => {
            query_cmd(query, &mut out)?;
            0
        }
        Command::Stats { store, json } => {
            let store = load_store(&store)?;
            stats_cmd(&store, json, &mut out)?;
            0
        }
        Command::Sweep {
            input,
            periods,
            json,
        } => {
            if periods.is_empty() {
                return Err(Error::Usage("no periods given".into()));
            }
            let (data, _) = prepare(&input, periods[0])?;
            let mut rows = Vec::new();
            for &period in &periods {
                let config = StoreConfig {
                    period,
                    k: input.k,
                    side: Some(data.side),
                    ..Default::default()
                };
                let s = build_store(&data, &config)?.stats();
                rows.push(json!({
                    "period": period, "total_bytes": s.total_bytes, "baseline_bytes": s.baseline_bytes,
                    "ratio": s.ratio, "rules": s.rules, "symbols": s.symbols, "codewords": s.codewords,
                }));
            }
            if json {
                writeln!(out, "{}", serde_json::Value::Array(rows))?;
            } else {
                writeln!(
                    out,
                    "period,total_bytes,baseline_bytes,ratio,rules,symbols,codewords"
                )?;
                for r in &rows {
                    writeln!(
                        out,
                        "{},{},{},{:.6},{},{},{}",
                        r["period"],
                        r["total_bytes"],
                        r["baseline_bytes"],
                        r["ratio"].as_f64().unwrap_or(0.0),
                        r["rules"],
                        r["symbols"],
                        r["codewords"]
                    )?;
                }
            }
            0
        }
        Command::Verify {
            input,
            store,
            queries,
            seed,
            gap_threshold,
            json,
        } => verify_cmd(&input, &store, queries, seed, gap_threshold, json, &mut out)?,
        Command::Gen {
            objects,
            instants,
            seed,
            side,
            gap_prob,
            raw,
            out: path,
        } => {
            let params = SynthParams {
                objects,
                instants,
                seed,
                side,
                gap_prob,
                ..Default::default()
            };
            let s = gen_synthetic(&params)?;
            let f = BufWriter::new(File::create(&path)?);
            if raw {
                write_raw_csv(f, &s.raw_records(&GridConfig::default()))?;
            } else {
                write_events(f, &s.names, &s.events)?;
            }
            writeln!(
                out,
                "objects={} instants={} events={}",
                objects,
                instants,
                s.events.len()
            )?;
            0
        }
        Command::Bench {
            store,
            suite,
            queries,
            seed,
            no_prune,
            json,
        } => {
            let kind = Kind::parse(&suite)
                .ok_or_else(|| Error::Usage(format!("unknown suite {suite:?}")))?;
            let store = load_store(&store)?;
            let events = store_events(&store);
            let qs = QueryGen::new(
                seed,
                &events,
                store.objects(),
                store.instants(),
                store.side(),
            )
            .take(kind, queries);
            let opts = QueryOptions {
                prune: !no_prune,
                direction: Direction::Nearest,
            };
            let l = suite::with_pool(|| bench::run(&store, kind, &qs, &opts))??;
            if json {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&l).map_err(|e| Error::Input(e.to_string()))?
                )?;
            } else {
                writeln!(
                    out,
                    "suite,queries,mean_us,p50_us,p95_us,p99_us,max_us,results"
                )?;
                writeln!(
                    out,
                    "{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{}",
                    l.suite,
                    l.queries,
                    l.mean_us,
                    l.p50_us,
                    l.p95_us,
                    l.p99_us,
                    l.max_us,
                    l.results
                )?;
            }
            0
        }
    };
    out.flush()?;
    Ok(code)
}

fn grid_of(input: &InputArgs) -> Result<GridConfig> {
    let cs = <[f64; 3]>::try_from(input.cell_size.as_slice())
        .map_err(|_| Error::Usage("--cell-size takes three values".into()))?;
    Ok(GridConfig {
        cell_size: cs,
        step_seconds: input.step,
        side: input.side,
        k: input.k,
        ..Default::default()
    })
}

/// Loads the input and applies optional gap interpolation.
fn prepare(input: &InputArgs, period: u32) -> Result<(Normalized, StoreConfig)> {
    if input.interpolate && input.gap_threshold < 2 {
        return Err(Error::Usage("--gap-threshold must be at least 2".into()));
    }
    let config = StoreConfig {
        period,
        k: input.k,
        side: input.side,
        ..Default::default()
    };
    config.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let grid = grid_of(input)?;
    let loaded = load_input(&input.input, &grid, input.gap_threshold)?;
    if loaded.skipped > 0 {
        eprintln!("tracube: skipped {} malformed lines", loaded.skipped);
    }
    let mut data = loaded.data;
    if input.interpolate {
        data.events = interpolate_gaps(&data.events, input.gap_threshold);
        data.grid.interpolated_from = input.gap_threshold;
    }
    let config = StoreConfig {
        side: Some(data.side),
        ..config
    };
    Ok((data, config))
}

fn build_store(data: &Normalized, config: &StoreConfig) -> Result<Store> {
    let input = StoreInput {
        names: data.names.clone(),
        events: data.events.clone(),
        instants: Some(data.instants),
        grid: data.grid,
    };
    Ok(Store::build(&input, config)?)
}

fn object_id(store: &Store, name: &str) -> Result<u32> {
    store
        .object_by_name(name)
        .ok_or_else(|| Error::Usage(format!("unknown object {name:?}")))
}

fn region(v: &[u32]) -> Result<CellBox> {
    match *v {
        [x0, y0, z0, x1, y1, z1] => Ok(CellBox::new(Cell::new(x0, y0, z0), Cell::new(x1, y1, z1))),
        _ => Err(Error::Usage("--box takes x0,y0,z0,x1,y1,z1".into())),
    }
}

fn check_range(store: &Store, from: u32, to: u32) -> Result<()> {
    if from > to || to >= store.instants() {
        return Err(Error::Usage(format!(
            "instant range {from}..={to} outside 0..{}",
            store.instants()
        )));
    }
    Ok(())
}

fn query_cmd(q: QueryCmd, out: &mut impl Write) -> Result<()> {
    match q {
        QueryCmd::Position { store, object, t } => {
            let store = load_store(&store)?;
            let o = object_id(&store, &object)?;
            check_range(&store, t, t)?;
            writeln!(out, "id,instant,cx,cy,cz")?;
            if let Some(c) = store.position_of(o, t)? {
                writeln!(out, "{object},{t},{},{},{}", c.x, c.y, c.z)?;
            }
        }
        QueryCmd::Trajectory {
            store,
            object,
            from,
            to,
        } => {
            let store = load_store(&store)?;
            let o = object_id(&store, &object)?;
            check_range(&store, from, to)?;
            writeln!(out, "instant,cx,cy,cz")?;
            for (t, c) in store.trajectory(o, from, to)? {
                match c {
                    Some(c) => writeln!(out, "{t},{},{},{}", c.x, c.y, c.z)?,
                    None => writeln!(out, "{t},,,")?,
                }
            }
        }
        QueryCmd::Slice {
            store,
            region: r,
            t,
        } => {
            let store = load_store(&store)?;
            let r = region(&r)?;
            check_range(&store, t, t)?;
            writeln!(out, "id,cx,cy,cz")?;
            for (o, c) in store.time_slice(&r, t)? {
                writeln!(
                    out,
                    "{},{},{},{}",
                    store.name(o).unwrap_or_default(),
                    c.x,
                    c.y,
                    c.z
                )?;
            }
        }
        QueryCmd::Interval {
            store,
            region: r,
            from,
            to,
        } => {
            let store = load_store(&store)?;
            let r = region(&r)?;
            check_range(&store, from, to)?;
            writeln!(out, "id")?;
            for o in store.time_interval(&r, from, to)? {
                writeln!(out, "{}", store.name(o).unwrap_or_default())?;
            }
        }
    }
    Ok(())
}

fn stats_cmd(store: &Store, json: bool, out: &mut impl Write) -> Result<()> {
    let s = store.stats();
    let h = store.header();
    let v = json!({
        "objects": store.objects(), "instants": store.instants(), "side": h.side, "k": h.k, "period": h.period,
        "header_bytes": s.header_bytes, "snapshot_bytes": s.snapshot_bytes, "grammar_bytes": s.grammar_bytes,
        "log_bytes": s.log_bytes, "payload_bytes": s.payload_bytes, "index_bytes": s.index_bytes,
        "total_bytes": s.total_bytes, "records": s.records, "baseline_bytes": s.baseline_bytes, "ratio": s.ratio,
        "snapshots": s.snapshots, "rules": s.rules, "symbols": s.symbols, "codewords": s.codewords,
        "interpolated_from": h.grid.interpolated_from,
    });
    if json {
        writeln!(out, "{v}")?;
    } else {
        for (k, x) in v.as_object().into_iter().flatten() {
            writeln!(out, "{k:<18} {x}")?;
        }
    }
    Ok(())
}

/// Every known `(object, instant)` of a store, sorted.
fn store_events(store: &Store) -> Vec<CellEvent> {
    (0..store.objects())
        .flat_map(|o| {
            store
                .decode_object(o)
                .into_iter()
                .enumerate()
                .filter_map(move |(t, c)| c.map(|c| CellEvent::new(o, t as u32, c)))
        })
        .collect()
}

fn verify_cmd(
    input: &Path,
    store_path: &Path,
    queries: usize,
    seed: u64,
    gap_threshold: u32,
    json: bool,
    out: &mut impl Write,
) -> Result<u8> {
    let store = load_store(store_path)?;
    let h = store.header();
    let grid = GridConfig::from_meta(&h.grid, h.side, h.k);
    let mut data = load_input(input, &grid, gap_threshold)?.data;
    if h.grid.interpolated_from > 0 {
        data.events = interpolate_gaps(&data.events, h.grid.interpolated_from);
    }
    if data.names.len() != store.objects() as usize
        || data
            .names
            .iter()
            .enumerate()
            .any(|(i, n)| store.name(i as u32) != Some(n.as_str()))
    {
        return Err(Error::Input("input objects differ from the store's".into()));
    }
    let oracle = OracleStore::new(&data.events, store.objects(), store.instants());
    let suite = suite::standard_suite(&oracle, &data.events, store.side(), queries, seed);
    let options = [
        QueryOptions::default(),
        QueryOptions {
            prune: false,
            direction: Direction::Nearest,
        },
    ];
    let report = suite::with_pool(|| suite::verify(&store, &oracle, &suite, &options))?;
    if json {
        writeln!(
            out,
            "{}",
            serde_json::to_string(&report).map_err(|e| Error::Input(e.to_string()))?
        )?;
    } else {
        writeln!(out, "kind,queries,nonempty,mismatches")?;
        for k in &report.kinds {
            writeln!(
                out,
                "{},{},{},{}",
                k.kind, k.queries, k.nonempty, k.mismatches
            )?;
        }
        for k in report
            .kinds
            .iter()
            .filter_map(|k| k.first_mismatch.as_ref())
        {
            eprintln!("mismatch: {k}");
        }
    }
    Ok(if report.mismatches() == 0 { 0 } else { 1 })
}
