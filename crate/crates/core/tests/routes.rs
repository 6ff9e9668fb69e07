use proptest::prelude::*;

use railsched::model::{Minutes, StationId, TrackId};
use railsched::network::{
    build_network, enumerate_routes, NetworkError, RailwayNetwork, Route, Station, TrackRole,
    TrackSegment,
};

/// Every loop-free directed path, sorted by (journey time, flattened ids).
fn all_paths(net: &RailwayNetwork, from: StationId, to: StationId) -> Vec<(Minutes, Vec<u32>)> {
    fn walk(
        net: &RailwayNetwork,
        to: StationId,
        key: &mut Vec<u32>,
        cost: Minutes,
        out: &mut Vec<(Minutes, Vec<u32>)>,
    ) {
        let here = StationId(*key.last().unwrap());
        if here == to {
            out.push((cost, key.clone()));
            return;
        }
        for seg in net.tracks() {
            let Some(next) = seg.other_end(here) else { continue };
            if key.iter().step_by(2).any(|&s| s == next.0) || !seg.allows(here, next) {
                continue;
            }
            key.extend([seg.id.0, next.0]);
            walk(net, to, key, cost + seg.journey_time, out);
            key.truncate(key.len() - 2);
        }
    }
    let mut out = Vec::new();
    walk(net, to, &mut vec![from.0], 0, &mut out);
    out.sort();
    out
}

fn graph() -> impl Strategy<Value = RailwayNetwork> {
    (3u32..=6).prop_flat_map(|n| {
        // a spanning path keeps the graph connected; extra edges are random
        let extra = prop::collection::vec((1..=n, 1..=n, 1i64..20, 0u8..3), 0..8);
        let spine = prop::collection::vec((1i64..20, 0u8..3), (n - 1) as usize);
        (Just(n), spine, extra).prop_map(|(n, spine, extra)| {
            let role = |r: u8| match r {
                0 => TrackRole::General,
                1 => TrackRole::Up,
                _ => TrackRole::Down,
            };
            let mut tracks = Vec::new();
            for (i, (j, _)) in spine.iter().enumerate() {
                let a = i as u32 + 1;
                tracks.push(TrackSegment::new(a, a, a + 1, TrackRole::General, *j));
            }
            for (a, b, j, r) in extra {
                if a != b {
                    let id = tracks.len() as u32 + 1;
                    tracks.push(TrackSegment::new(id, a, b, role(r), j));
                }
            }
            let stations = (1..=n).map(|i| Station::new(i, format!("S{i}"), 1)).collect();
            build_network(stations, tracks).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_exhaustive_enumeration(net in graph(), k in 1usize..8) {
        let n = net.station_count() as u32;
        for (a, b) in [(1, n), (n, 1), (2, n - 1)] {
            if a == b {
                continue;
            }
            let want = all_paths(&net, StationId(a), StationId(b));
            match enumerate_routes(&net, StationId(a), StationId(b), k) {
                Ok(got) => {
                    let got: Vec<(Minutes, Vec<u32>)> =
                        got.iter().map(|r| (r.journey_time(&net), r.lex_key())).collect();
                    let expect: Vec<_> = want.iter().take(k).cloned().collect();
                    prop_assert_eq!(got, expect);
                }
                Err(NetworkError::NoRouteExists(..)) => prop_assert!(want.is_empty()),
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }
    }

    #[test]
    fn routes_are_well_formed(net in graph()) {
        let n = net.station_count() as u32;
        if let Ok(routes) = enumerate_routes(&net, StationId(1), StationId(n), 6) {
            for r in &routes {
                prop_assert!(r.is_well_formed(&net));
                for (a, l, b) in r.legs() {
                    prop_assert!(net.track(l).unwrap().connects(a, b));
                }
            }
            let times: Vec<Minutes> = routes.iter().map(|r| r.journey_time(&net)).collect();
            prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

fn names(net: &RailwayNetwork, r: &Route) -> Vec<String> {
    r.stations().iter().map(|s| net.station(*s).unwrap().code.clone()).collect()
}

#[test]
fn diamond_prefers_the_cheaper_side() {
    let net = build_network(
        (1..=4).map(|i| Station::new(i, ["A", "B", "C", "D"][i as usize - 1], 1)).collect(),
        vec![
            TrackSegment::general(1, 1, 2, 30),
            TrackSegment::general(2, 2, 4, 30),
            TrackSegment::general(3, 1, 3, 20),
            TrackSegment::general(4, 3, 4, 50),
        ],
    )
    .unwrap();
    let r = enumerate_routes(&net, StationId(1), StationId(4), 5).unwrap();
    assert_eq!(r.len(), 2);
    assert_eq!(names(&net, &r[0]), ["A", "B", "D"]);
    assert_eq!((r[0].journey_time(&net), r[1].journey_time(&net)), (60, 70));
}

#[test]
fn parallel_tracks_give_parallel_routes() {
    let net = build_network(
        vec![Station::new(1, "A", 1), Station::new(2, "B", 1)],
        vec![TrackSegment::general(1, 1, 2, 10), TrackSegment::general(2, 1, 2, 10)],
    )
    .unwrap();
    let r = enumerate_routes(&net, StationId(1), StationId(2), 5).unwrap();
    assert_eq!(r.iter().map(|r| r.tracks()).collect::<Vec<_>>(), [vec![TrackId(1)], vec![TrackId(2)]]);
}

#[test]
fn bundled_network_offers_the_chord_alternative() {
    let net = railsched::io::parse_network_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/network.tsv")).unwrap();
    let id = |c: &str| net.station_by_code(c).unwrap().id;
    let r = enumerate_routes(&net, id("HWH"), id("BWN"), 64).unwrap();
    let via: Vec<Vec<String>> = r.iter().map(|r| names(&net, r)).collect();
    assert!(via.iter().any(|v| v.contains(&"BDC".to_string())));
    assert!(via.iter().any(|v| v.contains(&"DKAE".to_string())));
}
