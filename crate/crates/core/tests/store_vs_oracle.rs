use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tracube_core::oracle::OracleStore;
use tracube_core::{
    Cell, CellBox, CellEvent, Direction, QueryOptions, Store, StoreConfig, StoreInput,
};

struct Shape {
    objects: u32,
    instants: u32,
    side: u32,
    max_step: i64,
    gap_rate: f64,
    jump_rate: f64,
}

fn random_events(rng: &mut StdRng, s: &Shape) -> Vec<CellEvent> {
    let mut events = Vec::new();
    let m = s.side as i64 - 1;
    for o in 0..s.objects {
        let birth = rng.gen_range(0..s.instants);
        let death = rng.gen_range(birth..s.instants);
        let mut p = [
            rng.gen_range(0..=m),
            rng.gen_range(0..=m),
            rng.gen_range(0..=m),
        ];
        let mut t = birth;
        while t <= death {
            events.push(CellEvent::new(
                o,
                t,
                Cell::new(p[0] as u32, p[1] as u32, p[2] as u32),
            ));
            if rng.gen_bool(s.gap_rate) {
                t += rng.gen_range(2..40);
            } else {
                t += 1;
            }
            if rng.gen_bool(s.jump_rate) {
                p = [
                    rng.gen_range(0..=m),
                    rng.gen_range(0..=m),
                    rng.gen_range(0..=m),
                ];
            } else {
                for c in &mut p {
                    *c = (*c + rng.gen_range(-s.max_step..=s.max_step)).clamp(0, m);
                }
            }
        }
    }
    events
}

fn random_box(rng: &mut StdRng, side: u32, extent: u32) -> CellBox {
    let lo = |rng: &mut StdRng| rng.gen_range(0..side);
    let (x, y, z) = (lo(rng), lo(rng), lo(rng));
    let e = |rng: &mut StdRng| rng.gen_range(0..extent);
    CellBox::new(
        Cell::new(x, y, z),
        Cell::new(x + e(rng), y + e(rng), z + e(rng)),
    )
}

fn build(events: &[CellEvent], instants: u32, period: u32, side: u32) -> Store {
    let input = StoreInput {
        events: events.to_vec(),
        instants: Some(instants),
        ..Default::default()
    };
    let config = StoreConfig {
        period,
        side: Some(side),
        ..Default::default()
    };
    Store::build(&input, &config).unwrap()
}

fn check_all(seed: u64, shape: Shape, period: u32) {
    let mut rng = StdRng::seed_from_u64(seed);
    let events = random_events(&mut rng, &shape);
    let store = build(&events, shape.instants, period, shape.side);
    let oracle = OracleStore::new(&events, shape.objects, shape.instants);
    let all_opts = [
        QueryOptions::default(),
        QueryOptions {
            prune: false,
            direction: Direction::Nearest,
        },
        QueryOptions {
            prune: true,
            direction: Direction::Forward,
        },
        QueryOptions {
            prune: true,
            direction: Direction::Backward,
        },
        QueryOptions {
            prune: false,
            direction: Direction::Backward,
        },
    ];

    for o in 0..shape.objects {
        let decoded = store.decode_object(o);
        assert_eq!(decoded.len(), shape.instants as usize);
        for (t, c) in decoded.iter().enumerate() {
            assert_eq!(*c, oracle.position_of(o, t as u32), "decode o={o} t={t}");
        }
    }
    for _ in 0..400 {
        let o = rng.gen_range(0..shape.objects);
        let t = rng.gen_range(0..shape.instants);
        for opts in &all_opts {
            assert_eq!(
                store.position_of_with(o, t, opts).unwrap(),
                oracle.position_of(o, t),
                "position o={o} t={t} {opts:?}"
            );
        }
        let ts = rng.gen_range(0..shape.instants);
        let te = rng.gen_range(ts..shape.instants.min(ts + 3 * period));
        assert_eq!(
            store.trajectory(o, ts, te).unwrap(),
            oracle.trajectory(o, ts, te)
        );
    }
    let mut nonempty = [0usize; 2];
    for _ in 0..150 {
        let (r, t) = if rng.gen_bool(0.5) || events.is_empty() {
            (
                random_box(&mut rng, shape.side, shape.side / 3),
                rng.gen_range(0..shape.instants),
            )
        } else {
            let e = events[rng.gen_range(0..events.len())];
            let w = rng.gen_range(0..=shape.side / 8);
            let c = e.cell;
            let r = CellBox::new(
                Cell::new(
                    c.x.saturating_sub(w),
                    c.y.saturating_sub(w),
                    c.z.saturating_sub(w),
                ),
                Cell::new(c.x + w, c.y + w, c.z + w),
            );
            let t = (e.instant + rng.gen_range(0..3)).min(shape.instants - 1);
            (r, t)
        };
        let expect = oracle.time_slice(&r, t);
        nonempty[0] += !expect.is_empty() as usize;
        for opts in &all_opts {
            assert_eq!(
                store.time_slice_with(&r, t, opts).unwrap(),
                expect,
                "slice {r:?} t={t} {opts:?}"
            );
        }
        let ts = t.saturating_sub(rng.gen_range(0..=period));
        let te = rng.gen_range(t..shape.instants.min(t + period + 5));
        let expect = oracle.time_interval(&r, ts, te);
        nonempty[1] += !expect.is_empty() as usize;
        for opts in &all_opts[..2] {
            assert_eq!(
                store.time_interval_with(&r, ts, te, opts).unwrap(),
                expect,
                "interval {r:?} [{ts},{te}] {opts:?}"
            );
        }
    }
    assert!(
        nonempty[0] >= 10 && nonempty[1] >= 20,
        "too few non-empty answers: {nonempty:?}"
    );
}

#[test]
fn small_walks_with_gaps() {
    for seed in 0..6 {
        let shape = Shape {
            objects: 40,
            instants: 300,
            side: 64,
            max_step: 2,
            gap_rate: 0.03,
            jump_rate: 0.0,
        };
        check_all(seed, shape, 16 + seed as u32 * 7);
    }
}

#[test]
fn large_jumps_need_relative_disappearances() {
    let shape = Shape {
        objects: 30,
        instants: 200,
        side: 8192,
        max_step: 40,
        gap_rate: 0.05,
        jump_rate: 0.05,
    };
    check_all(77, shape, 25);
}

#[test]
fn shortest_periods() {
    for period in [2, 3] {
        let shape = Shape {
            objects: 12,
            instants: 40,
            side: 16,
            max_step: 1,
            gap_rate: 0.1,
            jump_rate: 0.0,
        };
        check_all(period as u64, shape, period);
    }
}

#[test]
fn last_period_with_only_its_snapshot() {
    // T - 1 is a multiple of the period, so the last log covers nothing.
    let shape = Shape {
        objects: 20,
        instants: 101,
        side: 32,
        max_step: 1,
        gap_rate: 0.05,
        jump_rate: 0.0,
    };
    check_all(5, shape, 20);
}

#[test]
fn identical_movers_share_rules() {
    let mut events = Vec::new();
    for o in 0..20u32 {
        for t in 0..200u32 {
            events.push(CellEvent::new(o, t, Cell::new(o + t / 4, 10 + (t % 3), 5)));
        }
    }
    let store = build(&events, 200, 50, 256);
    let stats = store.stats();
    assert!(stats.rules > 0);
    assert!(stats.symbols < 20 * 200 / 4, "symbols {}", stats.symbols);
    let oracle = OracleStore::new(&events, 20, 200);
    for o in 0..20 {
        for t in 0..200 {
            assert_eq!(store.position_of(o, t).unwrap(), oracle.position_of(o, t));
        }
    }
}

#[test]
fn empty_and_degenerate_inputs() {
    let store = Store::build(&StoreInput::default(), &StoreConfig::default()).unwrap();
    assert_eq!(store.instants(), 0);
    assert_eq!(store.objects(), 0);
    assert!(store.position_of(0, 0).is_err());
    let back = Store::deserialize(&store.serialize()).unwrap();
    assert_eq!(back, store);

    let input = StoreInput {
        names: vec!["ghost".into()],
        instants: Some(10),
        ..Default::default()
    };
    let store = Store::build(&input, &StoreConfig::default()).unwrap();
    assert_eq!(store.position_of(0, 9).unwrap(), None);
    assert!(store
        .time_interval(&CellBox::cube(1), 0, 9)
        .unwrap()
        .is_empty());
}

#[test]
fn rejects_bad_input() {
    let ev = |o, t| CellEvent::new(o, t, Cell::new(0, 0, 0));
    let input = StoreInput {
        events: vec![ev(0, 3), ev(0, 3)],
        ..Default::default()
    };
    assert!(Store::build(&input, &StoreConfig::default()).is_err());
    let input = StoreInput {
        events: vec![ev(1, 0), ev(0, 1)],
        ..Default::default()
    };
    assert!(Store::build(&input, &StoreConfig::default()).is_err());
    let input = StoreInput {
        events: vec![ev(0, 5)],
        instants: Some(5),
        ..Default::default()
    };
    assert!(Store::build(&input, &StoreConfig::default()).is_err());
    let far = CellEvent::new(0, 0, Cell::new(9, 0, 0));
    let input = StoreInput {
        events: vec![far],
        ..Default::default()
    };
    let config = StoreConfig {
        side: Some(8),
        ..Default::default()
    };
    assert!(Store::build(&input, &config).is_err());
    let config = StoreConfig {
        side: Some(12),
        ..Default::default()
    };
    assert!(Store::build(&input, &config).is_err());
    let config = StoreConfig {
        period: 1,
        ..Default::default()
    };
    assert!(Store::build(&input, &config).is_err());
}

#[test]
fn interval_is_union_of_slices() {
    let mut rng = StdRng::seed_from_u64(21);
    let shape = Shape {
        objects: 15,
        instants: 90,
        side: 16,
        max_step: 1,
        gap_rate: 0.1,
        jump_rate: 0.02,
    };
    let events = random_events(&mut rng, &shape);
    let store = build(&events, shape.instants, 12, shape.side);
    for _ in 0..200 {
        let r = random_box(&mut rng, 16, 8);
        let ts = rng.gen_range(0..90);
        let te = rng.gen_range(ts..90);
        let mut union: Vec<u32> = (ts..=te)
            .flat_map(|t| store.time_slice(&r, t).unwrap())
            .map(|(id, _)| id)
            .collect();
        union.sort_unstable();
        union.dedup();
        assert_eq!(store.time_interval(&r, ts, te).unwrap(), union);
    }
}

#[test]
fn trajectory_marks_gaps() {
    let ev = |t, x| CellEvent::new(0, t, Cell::new(x, 0, 0));
    let events = vec![ev(0, 1), ev(1, 2), ev(4, 5), ev(5, 5), ev(9, 1)];
    let store = build(&events, 12, 4, 8);
    let got = store.trajectory(0, 0, 11).unwrap();
    let expect: Vec<(u32, Option<Cell>)> = (0..12)
        .map(|t| (t, events.iter().find(|e| e.instant == t).map(|e| e.cell)))
        .collect();
    assert_eq!(got, expect);
    assert_eq!(
        store.trajectory(0, 4, 4).unwrap(),
        vec![(4, Some(Cell::new(5, 0, 0)))]
    );
}

#[test]
fn persistence_round_trip_and_corruption() {
    let mut rng = StdRng::seed_from_u64(9);
    let shape = Shape {
        objects: 25,
        instants: 150,
        side: 128,
        max_step: 3,
        gap_rate: 0.05,
        jump_rate: 0.01,
    };
    let events = random_events(&mut rng, &shape);
    let store = build(&events, shape.instants, 30, shape.side);
    let bytes = store.serialize();
    assert_eq!(&bytes[..4], b"3DGR");
    let back = Store::deserialize(&bytes).unwrap();
    assert_eq!(back, store);
    assert_eq!(back.serialize(), bytes);

    let mut flipped = bytes.clone();
    flipped[bytes.len() / 2] ^= 0x10;
    assert!(matches!(
        Store::deserialize(&flipped),
        Err(tracube_core::Error::ChecksumMismatch { .. })
    ));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert_eq!(
        Store::deserialize(&magic),
        Err(tracube_core::Error::BadMagic)
    );
    let mut version = bytes.clone();
    version[4] = 9;
    assert_eq!(
        Store::deserialize(&version),
        Err(tracube_core::Error::UnsupportedVersion(9))
    );
    for cut in [0, 3, 6, 9, bytes.len() / 3, bytes.len() - 1] {
        assert!(Store::deserialize(&bytes[..cut]).is_err(), "cut {cut}");
    }
}

#[test]
fn stats_add_up() {
    let mut rng = StdRng::seed_from_u64(3);
    let shape = Shape {
        objects: 30,
        instants: 240,
        side: 64,
        max_step: 1,
        gap_rate: 0.02,
        jump_rate: 0.0,
    };
    let events = random_events(&mut rng, &shape);
    let store = build(&events, shape.instants, 60, shape.side);
    let st = store.stats();
    assert_eq!(st.records, events.len() as u64);
    assert_eq!(st.baseline_bytes, 4 * events.len() as u64);
    let parts = st.header_bytes
        + st.snapshot_bytes
        + st.grammar_bytes
        + st.log_bytes
        + st.payload_bytes
        + st.index_bytes;
    assert_eq!(parts, st.total_bytes);
    assert_eq!(st.snapshots, 4);
    assert_eq!(st.codewords, store.codeword_count());
}
