//! Exhaustive optimum for tiny disrupted instances.
//!
//! Every train order and every loop-free station route per train is tried.
//! For a fixed order and route choice each train in turn takes its earliest
//! terminal arrival around the trains placed before it, found by a full search
//! over departure minutes, parallel tracks and platforms.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use railsched::constraints::{validate_schedule, PriorityPolicy};
use railsched::model::{Category, Minutes, Schedule, ScheduleEntry, StationId, Timetable, TrackId, Train, TrainId};
use railsched::network::{build_network, RailwayNetwork, Station, TrackSegment};
use railsched::resched::{
    blockage_violations, wait_in_place_baseline, DisasterEvent, RecoveryModel, RescheduleConfig, ResolvedEvent,
};

const CAP: Minutes = 300;
pub const MIN_DWELL: Minutes = 1;

pub struct Tiny {
    pub net: RailwayNetwork,
    pub tt: Timetable,
    pub event: DisasterEvent,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Res {
    Platform(u32, u8),
    Track(u32),
}

#[derive(Clone, Default)]
struct Busy(HashMap<Res, Vec<(Minutes, Minutes)>>);

impl Busy {
    fn free(&self, r: Res, s: Minutes, e: Minutes) -> bool {
        self.0.get(&r).is_none_or(|v| v.iter().all(|&(bs, be)| e <= bs || be <= s))
    }
    fn add(&mut self, r: Res, s: Minutes, e: Minutes) {
        self.0.entry(r).or_default().push((s, e));
    }
}

fn span(a: Minutes, d: Minutes) -> (Minutes, Minutes) {
    (a, if d > a { d } else { a + 1 })
}

#[derive(Clone, Debug)]
struct Visit {
    station: u32,
    o_at: Minutes,
    o_dt: Minutes,
    md: Minutes,
}

#[derive(Clone, Copy, Debug)]
struct Leg {
    d: Minutes,
    track: u32,
    k2: u8,
}

struct TrainSearch<'a> {
    net: &'a RailwayNetwork,
    busy: &'a Busy,
    visits: &'a [Visit],
    not_before: Minutes,
    lb: Vec<Minutes>,
    memo: HashMap<(usize, u8, Minutes), Option<(Minutes, Option<Leg>)>>,
}

impl TrainSearch<'_> {
    fn tracks(&self, i: usize) -> Vec<(u32, Minutes)> {
        let (a, b) = (StationId(self.visits[i].station), StationId(self.visits[i + 1].station));
        self.net
            .tracks_between(a, b)
            .into_iter()
            .filter(|t| t.allows(a, b))
            .map(|t| (t.id.0, t.journey_time))
            .collect()
    }

    /// Best continuation when leaving visit `i` at `d`.
    fn leave(&mut self, i: usize, d: Minutes) -> Option<(Minutes, Leg)> {
        let next = self.visits[i + 1].clone();
        let mut best: Option<(Minutes, Leg)> = None;
        for (l, j) in self.tracks(i) {
            let a2 = d + j;
            if a2 < next.o_at || !self.busy.free(Res::Track(l), d, a2) {
                continue;
            }
            for k2 in 1..=self.net.platform_count(StationId(next.station)) {
                if let Some((t, _)) = self.arrive(i + 1, k2, a2) {
                    if best.is_none_or(|b| t < b.0) {
                        best = Some((t, Leg { d, track: l, k2 }));
                    }
                }
            }
        }
        best
    }

    /// Earliest terminal arrival after reaching visit `i` on platform `k` at `a`.
    fn arrive(&mut self, i: usize, k: u8, a: Minutes) -> Option<(Minutes, Option<Leg>)> {
        if let Some(v) = self.memo.get(&(i, k, a)) {
            return *v;
        }
        let v = self.visits[i].clone();
        let plat = Res::Platform(v.station, k);
        let out = if i + 1 == self.visits.len() {
            let (s, e) = span(a, v.o_dt.max(a + v.md));
            self.busy.free(plat, s, e).then_some((a, None))
        } else {
            let mut best: Option<(Minutes, Option<Leg>)> = None;
            let floor = v.o_dt.max(a + v.md).max(self.not_before);
            for d in floor..=floor + CAP {
                let (s, e) = span(a, d);
                if !self.busy.free(plat, s, e) {
                    break;
                }
                if best.is_some_and(|b| b.0 <= d + self.lb[i]) {
                    break;
                }
                if let Some((t, leg)) = self.leave(i, d) {
                    if best.is_none_or(|b| t < b.0) {
                        best = Some((t, Some(leg)));
                    }
                }
            }
            best
        };
        self.memo.insert((i, k, a), out);
        out
    }

    /// Origin: the train turns up as late as its dwell floor allows.
    fn origin(&mut self) -> Option<(Minutes, u8, Minutes, Leg)> {
        let v = self.visits[0].clone();
        let mut best: Option<(Minutes, u8, Minutes, Leg)> = None;
        let floor = v.o_dt.max(v.o_at + v.md).max(self.not_before);
        for d in floor..=floor + CAP {
            if best.is_some_and(|b| b.0 <= d + self.lb[0]) {
                break;
            }
            let a0 = v.o_at.max(d - v.md);
            for k in 1..=self.net.platform_count(StationId(v.station)) {
                let (s, e) = span(a0, d);
                if !self.busy.free(Res::Platform(v.station, k), s, e) {
                    continue;
                }
                if let Some((t, leg)) = self.leave(0, d) {
                    if best.is_none_or(|b| t < b.0) {
                        best = Some((t, k, a0, leg));
                    }
                }
            }
        }
        best
    }
}

/// Visits along `stations`: original stops keep their times, new stations
/// pass through at the fastest pace.
fn visits_for(net: &RailwayNetwork, itin: &[ScheduleEntry], stations: &[u32]) -> Vec<Visit> {
    let mut out: Vec<Visit> = Vec::new();
    let mut cursor = 0;
    for &s in stations {
        let hit = itin[cursor..].iter().position(|e| e.station.0 == s).map(|p| p + cursor);
        let v = match hit {
            Some(r) => {
                cursor = r + 1;
                let e = &itin[r];
                Visit {
                    station: s,
                    o_at: e.o_at,
                    o_dt: e.o_dt,
                    md: if e.o_dt > e.o_at { MIN_DWELL } else { 0 },
                }
            }
            None => {
                let prev = out.last().unwrap();
                let j = fastest(net, prev.station, s);
                Visit {
                    station: s,
                    o_at: prev.o_dt + j,
                    o_dt: prev.o_dt + j,
                    md: 0,
                }
            }
        };
        out.push(v);
    }
    out
}

fn fastest(net: &RailwayNetwork, a: u32, b: u32) -> Minutes {
    let (a, b) = (StationId(a), StationId(b));
    net.tracks_between(a, b)
        .iter()
        .filter(|t| t.allows(a, b))
        .map(|t| t.journey_time)
        .min()
        .unwrap()
}

fn station_routes(net: &RailwayNetwork, from: u32, to: u32) -> Vec<Vec<u32>> {
    fn go(net: &RailwayNetwork, to: u32, path: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let here = *path.last().unwrap();
        if here == to {
            out.push(path.clone());
            return;
        }
        let next: BTreeSet<u32> = net
            .neighbors(StationId(here))
            .filter(|&(s, l)| net.track(l).unwrap().allows(StationId(here), s))
            .map(|(s, _)| s.0)
            .collect();
        for s in next {
            if !path.contains(&s) {
                path.push(s);
                go(net, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(net, to, &mut vec![from], &mut out);
    out
}

fn place(
    net: &RailwayNetwork,
    busy: &mut Busy,
    j: TrainId,
    visits: &[Visit],
    not_before: Minutes,
) -> Option<Vec<ScheduleEntry>> {
    let mut lb = vec![0; visits.len()];
    for i in (0..visits.len() - 1).rev() {
        lb[i] = lb[i + 1] + fastest(net, visits[i].station, visits[i + 1].station);
    }
    let mut s = TrainSearch {
        net,
        busy: &*busy,
        visits,
        not_before,
        lb,
        memo: HashMap::new(),
    };
    let (_, k0, a0, leg0) = s.origin()?;
    let mut entries = Vec::new();
    let (mut k, mut a, mut leg) = (k0, a0, Some(leg0));
    for (i, v) in visits.iter().enumerate() {
        let mut e = ScheduleEntry::planned(j, StationId(v.station), v.o_at, v.o_dt, None);
        e.platform = Some(k);
        e.x_at = a;
        match leg {
            Some(l) => {
                e.x_dt = l.d;
                e.next_track = Some(TrackId(l.track));
                let j_time = net.track(TrackId(l.track)).unwrap().journey_time;
                entries.push(e);
                k = l.k2;
                a = l.d + j_time;
                leg = if i + 2 < visits.len() { s.arrive(i + 1, k, a).unwrap().1 } else { None };
            }
            None => {
                e.x_dt = v.o_dt.max(a + v.md);
                entries.push(e);
            }
        }
    }
    for (i, e) in entries.iter().enumerate() {
        let (ps, pe) = span(e.x_at, e.x_dt);
        busy.add(Res::Platform(e.station.0, e.platform.unwrap()), ps, pe);
        if let (Some(l), Some(n)) = (e.next_track, entries.get(i + 1)) {
            busy.add(Res::Track(l.0), e.x_dt, n.x_at);
        }
    }
    Some(entries)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum total terminal delay and a schedule achieving it.
pub fn optimum(inst: &Tiny, tau_r: Minutes) -> Option<(Minutes, Schedule)> {
    let t_d = inst.event.t_d;
    let t_r = t_d + tau_r;
    let mut base = Busy::default();
    for &(s, k) in &inst.event.blocked_platforms {
        base.add(Res::Platform(s.0, k), t_d, t_r);
    }
    for &l in &inst.event.blocked_tracks {
        base.add(Res::Track(l.0), t_d, t_r);
    }
    let trains: Vec<(TrainId, &Vec<ScheduleEntry>)> =
        inst.tt.schedule.itineraries.iter().map(|(j, it)| (*j, it)).collect();
    let options: Vec<Vec<Vec<Visit>>> = trains
        .iter()
        .map(|(_, it)| {
            let from = it[0].station.0;
            let to = it.last().unwrap().station.0;
            station_routes(&inst.net, from, to)
                .iter()
                .map(|r| visits_for(&inst.net, it, r))
                .collect()
        })
        .collect();

    let mut best: Option<(Minutes, Schedule)> = None;
    let mut choice = vec![0usize; trains.len()];
    loop {
        for order in permutations(trains.len()) {
            let mut busy = base.clone();
            let mut all = Vec::new();
            let mut total = 0;
            let mut ok = true;
            for &t in &order {
                let visits = &options[t][choice[t]];
                match place(&inst.net, &mut busy, trains[t].0, visits, t_d) {
                    Some(entries) => {
                        let last = entries.last().unwrap();
                        total += last.x_at - trains[t].1.last().unwrap().o_at;
                        all.extend(entries);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && best.as_ref().is_none_or(|b| total < b.0) {
                best = Some((total, Schedule::from_entries(all)));
            }
        }
        // next route combination
        let mut i = 0;
        loop {
            if i == trains.len() {
                return best;
            }
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Checks a schedule found by the search with the library's own rules.
pub fn feasible(inst: &Tiny, schedule: &Schedule, tau_r: Minutes) -> bool {
    let ev = ResolvedEvent {
        t_d: inst.event.t_d,
        tau_r,
        t_r: inst.event.t_d + tau_r,
        buffer: inst.event.t_d + tau_r,
        blocked_platforms: inst.event.blocked_platforms.clone(),
        blocked_tracks: inst.event.blocked_tracks.clone(),
    };
    validate_schedule(&inst.net, schedule).is_empty() && blockage_violations(schedule, &ev).is_empty()
}

pub fn config() -> RescheduleConfig {
    RescheduleConfig {
        min_dwell: MIN_DWELL,
        ..RescheduleConfig::default()
    }
}

fn random_tiny(rng: &mut ChaCha8Rng) -> Option<Tiny> {
    let n = rng.gen_range(3u32..=4);
    let mut stations = Vec::new();
    for i in 1..=n {
        stations.push(Station::new(i, ((b'A' + i as u8 - 1) as char).to_string(), rng.gen_range(1..=2)));
    }
    let mut tracks = Vec::new();
    for i in 1..n {
        tracks.push(TrackSegment::general(i, i, i + 1, rng.gen_range(5..=12)));
    }
    if rng.gen_bool(0.5) {
        let i = rng.gen_range(1..n);
        let j = tracks[i as usize - 1].journey_time;
        tracks.push(TrackSegment::general(tracks.len() as u32 + 1, i, i + 1, j));
    }
    if n == 4 && rng.gen_bool(0.5) {
        let a = rng.gen_range(1..=2);
        tracks.push(TrackSegment::general(tracks.len() as u32 + 1, a, a + 2, rng.gen_range(8..=20)));
    }
    let net = build_network(stations, tracks).unwrap();

    let t_d = 600;
    let m = rng.gen_range(2u32..=3);
    let mut entries = Vec::new();
    let mut tt = Timetable::default();
    for j in 1..=m {
        let cat = Category::ALL[rng.gen_range(0..5)];
        tt.trains.insert(TrainId(j), Train::new(j, format!("{j}"), cat));
        let (from, to) = if rng.gen_bool(0.5) { (1, n) } else { (n, 1) };
        let path: Vec<u32> = if from < to { (from..=to).collect() } else { (to..=from).rev().collect() };
        let mut t = t_d + rng.gen_range(1..=20);
        for (i, &s) in path.iter().enumerate() {
            let last = i + 1 == path.len();
            let dwell = if i == 0 {
                rng.gen_range(2..=5)
            } else if last {
                1
            } else {
                [0, 2][rng.gen_range(0..2)]
            };
            let track = (!last).then(|| {
                let ts = net.tracks_between(StationId(s), StationId(path[i + 1]));
                ts[rng.gen_range(0..ts.len())].id
            });
            let mut e = ScheduleEntry::planned(TrainId(j), StationId(s), t, t + dwell, track);
            e.platform = Some(rng.gen_range(1..=net.platform_count(StationId(s))));
            entries.push(e);
            if let Some(l) = track {
                t += dwell + net.track(l).unwrap().journey_time;
            }
        }
    }
    tt.schedule = Schedule::from_entries(entries);
    if !validate_schedule(&net, &tt.schedule).is_empty() {
        return None;
    }

    let tau = rng.gen_range(10..=30);
    let mut platforms = BTreeSet::new();
    let mut blocked_tracks = BTreeSet::new();
    match rng.gen_range(0..3) {
        0 => {
            let s = rng.gen_range(2..=n);
            for k in 1..=net.platform_count(StationId(s)) {
                if k == 1 || rng.gen_bool(0.5) {
                    platforms.insert((StationId(s), k));
                }
            }
        }
        1 => {
            blocked_tracks.insert(TrackId(rng.gen_range(1..n)));
        }
        _ => {
            let s = rng.gen_range(1..=n);
            platforms.insert((StationId(s), 1));
            blocked_tracks.insert(TrackId(rng.gen_range(1..n)));
        }
    }
    let event = DisasterEvent {
        t_d,
        blocked_platforms: platforms,
        blocked_tracks,
        recovery: RecoveryModel::uniform(tau, tau),
    };
    Some(Tiny { net, tt, event })
}

/// Twenty seeded instances on which waiting for recovery costs something.
pub fn corpus() -> Vec<Tiny> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7179);
    let mut out = Vec::new();
    while out.len() < 20 {
        let Some(inst) = random_tiny(&mut rng) else { continue };
        let wait = wait_in_place_baseline(
            &inst.net,
            &inst.tt,
            &inst.event,
            &PriorityPolicy::default(),
            0,
            &config(),
        );
        if wait.is_ok_and(|w| w.total_delay > 0) {
            out.push(inst);
        }
    }
    out
}
