//! Random small instances and a minute-by-minute brute-force reading of the
//! occupancy rules.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use railsched::constraints::{validate_schedule, Rule};
use railsched::model::{Minutes, Schedule, ScheduleEntry, StationId, TrackId, TrainId};
use railsched::network::{build_network, RailwayNetwork, Station, TrackRole, TrackSegment};

pub struct Instance {
    pub net: RailwayNetwork,
    pub schedule: Schedule,
}

/// A path of up to 4 stations with 1 or 2 tracks per pair and up to 3
/// trains whose times are jittered so that roughly half the instances are
/// infeasible.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(2..=4u32);
    let stations: Vec<Station> = (1..=n)
        .map(|i| Station::new(i, format!("S{i}"), rng.gen_range(1..=2)))
        .collect();
    let mut tracks = Vec::new();
    let mut id = 0;
    for a in 1..n {
        let count = rng.gen_range(1..=2);
        for c in 0..count {
            id += 1;
            let role = match (count, c, rng.gen_range(0..3)) {
                (1, _, _) => TrackRole::General,
                (_, 0, 0) => TrackRole::Up,
                (_, 1, 0) => TrackRole::Down,
                _ => TrackRole::General,
            };
            tracks.push(TrackSegment::new(id, a, a + 1, role, rng.gen_range(3..=8)));
        }
    }
    let net = build_network(stations, tracks).unwrap();
    let mut entries = Vec::new();
    for j in 1..=rng.gen_range(1..=3u32) {
        let forward = rng.gen_bool(0.5);
        let len = rng.gen_range(2..=n) as usize;
        let start = if forward { rng.gen_range(1..=n + 1 - len as u32) } else { rng.gen_range(len as u32..=n) };
        let path: Vec<u32> = (0..len as u32)
            .map(|i| if forward { start + i } else { start - i })
            .collect();
        let mut t: Minutes = rng.gen_range(0..20);
        for (i, &s) in path.iter().enumerate() {
            let at = t;
            let dwell = rng.gen_range(-1..4).max(0) - i64::from(rng.gen_ratio(1, 25));
            let dt = at + dwell;
            let next_track = path.get(i + 1).map(|&b| {
                let choices = net.tracks_between(StationId(s), StationId(b));
                if rng.gen_ratio(1, 20) {
                    // occasionally a track that does not join the pair
                    TrackId(rng.gen_range(1..=net.track_count() as u32))
                } else {
                    choices[rng.gen_range(0..choices.len())].id
                }
            });
            let mut e = ScheduleEntry::planned(TrainId(j), StationId(s), at, dt, next_track);
            let p = net.platform_count(StationId(s));
            e.platform = match rng.gen_range(0..20) {
                0 => None,
                1 => Some(p + 1),
                _ => Some(rng.gen_range(1..=p)),
            };
            if rng.gen_ratio(1, 15) {
                e.x_at -= 1;
            }
            if let Some(l) = next_track {
                let j = net.track(l).map_or(5, |seg| seg.journey_time);
                t = dt + j + rng.gen_range(-1..3);
            }
            entries.push(e);
        }
    }
    Instance {
        net,
        schedule: Schedule::from_entries(entries),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Res {
    Platform(StationId, u8),
    Track(TrackId),
}

/// Independent reading of the occupancy rules: each minute is scanned on its
/// own and every rule is reported as (rule, train) pairs. Conflicts are
/// reported for every train involved.
pub fn brute_force(net: &RailwayNetwork, schedule: &Schedule) -> BTreeSet<(Rule, TrainId)> {
    let mut out = BTreeSet::new();
    // minute -> train -> (resource, is pass-through)
    let mut held: BTreeMap<Minutes, Vec<(TrainId, Res, bool)>> = BTreeMap::new();
    for (&j, it) in &schedule.itineraries {
        for (n, e) in it.iter().enumerate() {
            if e.x_at < e.o_at {
                out.insert((Rule::EarlyArrival, j));
            }
            if e.x_dt < e.x_at {
                out.insert((Rule::DepartureBeforeArrival, j));
            }
            let ok_index = e.platform.is_some_and(|k| (1..=net.platform_count(e.station)).contains(&k));
            if !ok_index {
                out.insert((Rule::PlatformIndex, j));
            }
            if let Some(k) = e.platform {
                if e.x_dt == e.x_at {
                    held.entry(e.x_at).or_default().push((j, Res::Platform(e.station, k), true));
                }
                for t in e.x_at..e.x_dt {
                    held.entry(t).or_default().push((j, Res::Platform(e.station, k), false));
                }
            }
            let Some(next) = it.get(n + 1) else { continue };
            let seg = e.next_track.and_then(|l| net.track(l));
            let shaped = seg.is_some_and(|s| {
                let (a, b) = s.endpoints;
                let joins = (a, b) == (e.station, next.station) || (b, a) == (e.station, next.station);
                let dir_ok = match s.role {
                    TrackRole::General => true,
                    TrackRole::Up => e.station < next.station,
                    TrackRole::Down => e.station > next.station,
                };
                joins && dir_ok
            });
            if !shaped {
                out.insert((Rule::RouteShape, j));
            } else if next.x_at - e.x_dt < seg.unwrap().journey_time {
                out.insert((Rule::Continuity, j));
            }
            if let Some(l) = e.next_track {
                for t in e.x_dt..next.x_at {
                    held.entry(t).or_default().push((j, Res::Track(l), false));
                }
            }
        }
    }
    for list in held.values() {
        for (a, x) in list.iter().enumerate() {
            for y in &list[a + 1..] {
                if x.0 != y.0 && x.1 == y.1 {
                    let rule = match x.1 {
                        Res::Platform(..) => Rule::PlatformConflict,
                        Res::Track(_) => Rule::TrackConflict,
                    };
                    out.insert((rule, x.0));
                    out.insert((rule, y.0));
                }
                if x.0 == y.0 && !x.2 && !y.2 && x.1 != y.1 {
                    out.insert((Rule::MultipleResources, x.0));
                }
            }
        }
    }
    out
}

fn conflict(r: Rule) -> bool {
    matches!(r, Rule::PlatformConflict | Rule::TrackConflict)
}

/// Validator and oracle agree when they flag the same non-conflict
/// (rule, train) pairs and the same conflict rules, with every train the
/// validator blames for a conflict also involved according to the oracle.
pub fn agree(net: &RailwayNetwork, schedule: &Schedule) -> Result<(), String> {
    let got: BTreeSet<(Rule, TrainId)> = validate_schedule(net, schedule)
        .into_iter()
        .map(|v| (v.rule, v.train))
        .collect();
    let want = brute_force(net, schedule);
    let plain = |s: &BTreeSet<(Rule, TrainId)>| -> BTreeSet<(Rule, TrainId)> {
        s.iter().filter(|(r, _)| !conflict(*r)).copied().collect()
    };
    let rules = |s: &BTreeSet<(Rule, TrainId)>| -> BTreeSet<Rule> {
        s.iter().map(|(r, _)| *r).filter(|r| conflict(*r)).collect()
    };
    let blamed_ok = got.iter().filter(|(r, _)| conflict(*r)).all(|p| want.contains(p));
    if plain(&got) == plain(&want) && rules(&got) == rules(&want) && blamed_ok {
        Ok(())
    } else {
        Err(format!("validator {got:?}\noracle {want:?}"))
    }
}
