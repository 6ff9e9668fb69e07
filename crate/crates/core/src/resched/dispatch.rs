use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use crate::constraints::PriorityPolicy;
use crate::model::{Minutes, PlatformIdx, Schedule, ScheduleEntry, StationId, TrackId, Train, TrainId};
use crate::network::{enumerate_routes_filtered, RailwayNetwork};

use super::state::{train_status, TrainStatus};
use super::{DwellPolicy, RescheduleConfig, RescheduleError, ResolvedEvent};

const BLOCKAGE: TrainId = TrainId(u32::MAX);
const FAR: Minutes = Minutes::MAX / 4;

pub(crate) struct DispatchInput<'a> {
    pub net: &'a RailwayNetwork,
    pub trains: &'a BTreeMap<TrainId, Train>,
    pub schedule: &'a Schedule,
    pub event: &'a ResolvedEvent,
    pub cfg: &'a RescheduleConfig,
}

pub(crate) struct DispatchOptions {
    pub allow_reroute: bool,
    pub dwell: DwellPolicy,
    /// Trains that may not depart anywhere before `hold_until`.
    pub held: BTreeSet<TrainId>,
    pub hold_until: Minutes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Platform(StationId, PlatformIdx),
    Track(TrackId),
}

#[derive(Debug, Clone, Default)]
struct Table {
    map: HashMap<Key, Vec<(Minutes, Minutes, TrainId)>>,
}

impl Table {
    fn add(&mut self, key: Key, s: Minutes, e: Minutes, owner: TrainId) {
        if e > s {
            self.map.entry(key).or_default().push((s, e, owner));
        }
    }

    fn release(&mut self, owner: TrainId) {
        for v in self.map.values_mut() {
            v.retain(|r| r.2 != owner);
        }
    }

    /// Maximal intervals in which nobody but `me` holds `key`.
    fn free(&self, key: Key, me: TrainId, ignore_blockage: bool) -> Vec<(Minutes, Minutes)> {
        let mut busy: Vec<(Minutes, Minutes)> = self
            .map
            .get(&key)
            .map(|v| {
                v.iter()
                    .filter(|r| r.2 != me && !(ignore_blockage && r.2 == BLOCKAGE))
                    .map(|r| (r.0, r.1))
                    .collect()
            })
            .unwrap_or_default();
        busy.sort_unstable();
        let mut out = Vec::new();
        let mut cur = -FAR;
        for (s, e) in busy {
            if s > cur {
                out.push((cur, s));
            }
            cur = cur.max(e);
        }
        out.push((cur, FAR));
        out
    }
}

#[derive(Debug, Clone)]
struct Visit {
    station: StationId,
    o_at: Minutes,
    o_dt: Minutes,
    orig_platform: Option<PlatformIdx>,
    orig_track: Option<TrackId>,
    /// Scheduled running time to the next visit when that leg is unchanged.
    run: Option<Minutes>,
}

#[derive(Debug, Clone, Copy)]
enum Start {
    Origin,
    Platform { arrival: Minutes, platform: PlatformIdx },
    Track { track: TrackId, departed: Minutes, run: Minutes },
}

struct Limits {
    dwell: DwellPolicy,
    min_dwell: Minutes,
    headway: Minutes,
    now: Minutes,
    not_before: Minutes,
    /// First movement of a train caught on a blocked resource.
    release: Minutes,
    fixed_tracks: bool,
}

#[derive(Debug, Clone, Copy)]
struct Stop {
    visit: usize,
    at: Minutes,
    dt: Minutes,
    platform: PlatformIdx,
    track: Option<TrackId>,
}

type StateKey = (usize, PlatformIdx, usize);

struct Search<'a> {
    net: &'a RailwayNetwork,
    table: &'a Table,
    me: TrainId,
    start: Start,
    start_key: Option<Key>,
    visits: &'a [Visit],
    lim: &'a Limits,
    cache: HashMap<Key, Vec<(Minutes, Minutes)>>,
}

impl Search<'_> {
    fn free(&mut self, key: Key) -> Vec<(Minutes, Minutes)> {
        if let Some(v) = self.cache.get(&key) {
            return v.clone();
        }
        let v = self.table.free(key, self.me, Some(key) == self.start_key);
        self.cache.insert(key, v.clone());
        v
    }

    fn departure_floor(&self, v: usize, a: Minutes) -> Minutes {
        let e = &self.visits[v];
        let last = v + 1 == self.visits.len();
        let mut d = if last { e.o_dt } else { e.o_dt.max(self.lim.not_before) };
        d = d.max(match self.lim.dwell {
            DwellPolicy::Compressed => {
                a + if e.o_dt > e.o_at { self.lim.min_dwell } else { 0 }
            }
            DwellPolicy::Retained => a + (e.o_dt - e.o_at).max(0),
        });
        if v == 0 && matches!(self.start, Start::Platform { .. }) {
            d = d.max(self.lim.release).max(self.lim.now);
        }
        d
    }

    /// Earliest terminal arrival; ties broken by fewer platform and track changes.
    fn run(mut self) -> Option<(Vec<Stop>, u32)> {
        let mut heap: BinaryHeap<Reverse<(Minutes, u32, StateKey)>> = BinaryHeap::new();
        let mut best: HashMap<StateKey, (Minutes, u32)> = HashMap::new();
        let mut pred: HashMap<StateKey, Option<(StateKey, Minutes, TrackId)>> = HashMap::new();
        let offer = |heap: &mut BinaryHeap<_>,
                         best: &mut HashMap<StateKey, (Minutes, u32)>,
                         pred: &mut HashMap<_, _>,
                         key: StateKey,
                         a: Minutes,
                         dev: u32,
                         from: Option<(StateKey, Minutes, TrackId)>| {
            if best.get(&key).is_none_or(|&b| (a, dev) < b) {
                best.insert(key, (a, dev));
                pred.insert(key, from);
                heap.push(Reverse((a, dev, key)));
            }
        };

        let visits = self.visits;
        let v0 = &visits[0];
        let s0 = v0.station;
        let p0 = self.net.platform_count(s0);
        match self.start {
            Start::Origin => {
                for k in 1..=p0 {
                    let dev = u32::from(v0.orig_platform.is_some_and(|o| o != k));
                    for (pi, (ps, pe)) in self.free(Key::Platform(s0, k)).into_iter().enumerate() {
                        let a = v0.o_at.max(ps);
                        if a < pe {
                            offer(&mut heap, &mut best, &mut pred, (0, k, pi), a, dev, None);
                        }
                    }
                }
            }
            Start::Platform { arrival, platform } => {
                let now = self.lim.now;
                let ivs = self.free(Key::Platform(s0, platform));
                let pi = ivs.iter().position(|&(s, e)| s <= now && now < e)?;
                offer(&mut heap, &mut best, &mut pred, (0, platform, pi), arrival, 0, None);
            }
            Start::Track { track, departed, run } => {
                let now = self.lim.now;
                let (_, te) = *self
                    .free(Key::Track(track))
                    .iter()
                    .find(|&&(s, e)| s <= now && now < e)?;
                let lower = (departed + run).max(v0.o_at).max(self.lim.release);
                for k in 1..=p0 {
                    let dev = u32::from(v0.orig_platform.is_some_and(|o| o != k));
                    for (pi, (ps, pe)) in self.free(Key::Platform(s0, k)).into_iter().enumerate() {
                        let a = lower.max(ps);
                        if a >= pe {
                            continue;
                        }
                        if a.max(departed + self.lim.headway) > te {
                            break;
                        }
                        offer(&mut heap, &mut best, &mut pred, (0, k, pi), a, dev, None);
                    }
                }
            }
        }

        let last = self.visits.len() - 1;
        let mut done: BTreeSet<StateKey> = BTreeSet::new();
        while let Some(Reverse((a, dev, key))) = heap.pop() {
            if !done.insert(key) {
                continue;
            }
            let (v, k, pi) = key;
            let here = visits[v].station;
            let (_, e) = self.free(Key::Platform(here, k))[pi];
            let d0 = self.departure_floor(v, a);
            if d0 > e {
                continue;
            }
            if v == last {
                return Some((self.rebuild(key, &best, &pred, d0), dev));
            }
            let (next, cur) = (&visits[v + 1], &visits[v]);
            let to = next.station;
            let (run, orig_track, next_o_at, next_orig_platform) =
                (cur.run, cur.orig_track, next.o_at, next.orig_platform);
            let segs: Vec<(TrackId, Minutes)> = self
                .net
                .tracks_between(here, to)
                .into_iter()
                .filter(|s| s.allows(here, to))
                .filter(|s| !(self.lim.fixed_tracks && orig_track.is_some_and(|o| o != s.id)))
                .map(|s| (s.id, s.journey_time))
                .collect();
            for (l, journey) in segs {
                let j = run.map_or(journey, |r| r.max(journey));
                let footprint = j.max(self.lim.headway);
                let tivs = self.free(Key::Track(l));
                let tdev = u32::from(orig_track.is_some_and(|o| o != l));
                for k2 in 1..=self.net.platform_count(to) {
                    let pdev = u32::from(next_orig_platform.is_some_and(|o| o != k2));
                    for (pi2, (ps, pe)) in self.free(Key::Platform(to, k2)).into_iter().enumerate() {
                        if pe <= next_o_at {
                            continue;
                        }
                        for &(ts, te) in &tivs {
                            if te <= d0 {
                                continue;
                            }
                            let d = d0.max(ts).max(ps - j).max(next_o_at - j);
                            if d > e {
                                break;
                            }
                            if d + footprint > te {
                                continue;
                            }
                            let a2 = d + j;
                            if a2 < pe {
                                offer(
                                    &mut heap,
                                    &mut best,
                                    &mut pred,
                                    (v + 1, k2, pi2),
                                    a2,
                                    dev + tdev + pdev,
                                    Some((key, d, l)),
                                );
                            }
                            break;
                        }
                    }
                }
            }
        }
        None
    }

    fn rebuild(
        &self,
        goal: StateKey,
        best: &HashMap<StateKey, (Minutes, u32)>,
        pred: &HashMap<StateKey, Option<(StateKey, Minutes, TrackId)>>,
        terminal_dt: Minutes,
    ) -> Vec<Stop> {
        let mut stops = Vec::new();
        let mut key = goal;
        let mut dt = terminal_dt;
        let mut track = None;
        loop {
            let (v, k, _) = key;
            stops.push(Stop {
                visit: v,
                at: best[&key].0,
                dt,
                platform: k,
                track,
            });
            match pred[&key] {
                Some((p, d, l)) => {
                    key = p;
                    dt = d;
                    track = Some(l);
                }
                None => break,
            }
        }
        stops.reverse();
        stops
    }
}

fn visits_of(entries: &[ScheduleEntry]) -> Vec<Visit> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let next = entries.get(i + 1);
            Visit {
                station: e.station,
                o_at: e.o_at,
                o_dt: e.o_dt,
                orig_platform: e.platform,
                orig_track: next.and(e.next_track),
                run: next.map(|n| n.o_at - e.o_dt),
            }
        })
        .collect()
}

/// Visits along `stations`, reusing the original entries met in order and
/// giving new stations pass-through times at the fastest running pace.
fn visits_along(net: &RailwayNetwork, entries: &[ScheduleEntry], stations: &[StationId]) -> Vec<Visit> {
    let mut out: Vec<Visit> = Vec::new();
    let mut matched: Vec<Option<usize>> = Vec::new();
    let mut cursor = 0usize;
    for &s in stations {
        let hit = entries
            .iter()
            .enumerate()
            .skip(cursor)
            .find(|(_, e)| e.station == s)
            .map(|(r, _)| r);
        let visit = match (hit, out.last()) {
            (Some(r), _) => {
                cursor = r + 1;
                let e = &entries[r];
                Visit {
                    station: s,
                    o_at: e.o_at,
                    o_dt: e.o_dt,
                    orig_platform: e.platform,
                    orig_track: None,
                    run: None,
                }
            }
            (None, Some(prev)) => {
                let j = net
                    .tracks_between(prev.station, s)
                    .iter()
                    .filter(|seg| seg.allows(prev.station, s))
                    .map(|seg| seg.journey_time)
                    .min()
                    .unwrap_or(0);
                let t = prev.o_dt + j;
                Visit {
                    station: s,
                    o_at: t,
                    o_dt: t,
                    orig_platform: None,
                    orig_track: None,
                    run: None,
                }
            }
            (None, None) => unreachable!("candidate routes start at a known station"),
        };
        out.push(visit);
        matched.push(hit);
    }
    for i in 0..out.len().saturating_sub(1) {
        if let (Some(r1), Some(r2)) = (matched[i], matched[i + 1]) {
            if r2 == r1 + 1 {
                out[i].orig_track = entries[r1].next_track;
                out[i].run = Some(entries[r2].o_at - entries[r1].o_dt);
            }
        }
    }
    out
}

struct TrainPlan {
    entries: Vec<ScheduleEntry>,
    holds: Vec<(Key, Minutes, Minutes)>,
}

fn plan_train(
    input: &DispatchInput,
    opts: &DispatchOptions,
    table: &Table,
    j: TrainId,
) -> Option<TrainPlan> {
    let net = input.net;
    let ev = input.event;
    let itin = &input.schedule.itineraries[&j];
    let status = train_status(itin, ev.t_d);
    let (first, prefix_len, start) = match status {
        TrainStatus::Finished => return None,
        TrainStatus::NotStarted => (0, 0, Start::Origin),
        TrainStatus::AtPlatform(i) => (
            i,
            i,
            Start::Platform {
                arrival: itin[i].x_at,
                platform: itin[i].platform.unwrap_or(1),
            },
        ),
        TrainStatus::OnTrack(i) => {
            let (e, n) = (&itin[i], &itin[i + 1]);
            let track = e.next_track.or_else(|| {
                net.tracks_between(e.station, n.station)
                    .iter()
                    .find(|s| s.allows(e.station, n.station))
                    .map(|s| s.id)
            })?;
            let journey = net.track(track).map_or(0, |s| s.journey_time);
            (
                i + 1,
                i + 1,
                Start::Track {
                    track,
                    departed: e.x_dt,
                    run: (n.o_at - e.o_dt).max(journey),
                },
            )
        }
    };
    let remaining = &itin[first..];
    let start_key = match start {
        Start::Origin => None,
        Start::Platform { platform, .. } => Some(Key::Platform(remaining[0].station, platform)),
        Start::Track { track, .. } => Some(Key::Track(track)),
    };
    let stuck = match start_key {
        Some(Key::Platform(s, k)) => ev.blocked_platforms.contains(&(s, k)),
        Some(Key::Track(l)) => ev.blocked_tracks.contains(&l),
        None => false,
    };
    let lim = Limits {
        dwell: opts.dwell,
        min_dwell: input.cfg.min_dwell,
        headway: input.cfg.headway,
        now: ev.t_d,
        not_before: if opts.held.contains(&j) {
            opts.hold_until.max(ev.t_d)
        } else {
            ev.t_d
        },
        release: if stuck { ev.t_r } else { Minutes::MIN },
        fixed_tracks: !opts.allow_reroute,
    };

    let mut candidates = vec![visits_of(remaining)];
    let origin = remaining[0].station;
    let terminal = remaining[remaining.len() - 1].station;
    if opts.allow_reroute && origin != terminal {
        let original: Vec<StationId> = remaining.iter().map(|e| e.station).collect();
        let mut seen = BTreeSet::from([original]);
        let want = input.cfg.max_routes;
        // one representative track per station pair: parallel tracks are
        // chosen by the search, so only station sequences matter here
        let representative = |a: StationId, seg: &crate::network::TrackSegment, b: StationId| {
            net.tracks_between(a, b).iter().find(|t| t.allows(a, b)).map(|t| t.id) == Some(seg.id)
        };
        if let Ok(routes) = enumerate_routes_filtered(net, origin, terminal, want * 4, representative) {
            for r in routes {
                let stations = r.stations();
                if seen.insert(stations.clone()) {
                    candidates.push(visits_along(net, remaining, &stations));
                }
                if candidates.len() > want {
                    break;
                }
            }
        }
    }

    let mut chosen: Option<((Minutes, bool, u32), usize, Vec<Stop>)> = None;
    for (ci, visits) in candidates.iter().enumerate() {
        let search = Search {
            net,
            table,
            me: j,
            start,
            start_key,
            visits,
            lim: &lim,
            cache: HashMap::new(),
        };
        if let Some((stops, dev)) = search.run() {
            let key = (stops.last().unwrap().at, ci > 0, dev);
            if chosen.as_ref().is_none_or(|c| key < c.0) {
                chosen = Some((key, ci, stops));
            }
        }
    }
    let (_, ci, stops) = chosen?;
    let visits = &candidates[ci];

    let mut entries: Vec<ScheduleEntry> = itin[..prefix_len].to_vec();
    let mut holds = Vec::new();
    if let Start::Track { track, departed, .. } = start {
        holds.push((Key::Track(track), departed, stops[0].at.max(departed + lim.headway)));
    }
    for (n, s) in stops.iter().enumerate() {
        let v = &visits[s.visit];
        entries.push(ScheduleEntry {
            train: j,
            station: v.station,
            o_at: v.o_at,
            o_dt: v.o_dt,
            x_at: s.at,
            x_dt: s.dt,
            platform: Some(s.platform),
            next_track: s.track,
        });
        holds.push((Key::Platform(v.station, s.platform), s.at, s.dt.max(s.at + 1)));
        if let (Some(l), Some(next)) = (s.track, stops.get(n + 1)) {
            holds.push((Key::Track(l), s.dt, next.at.max(s.dt + lim.headway)));
        }
    }
    Some(TrainPlan { entries, holds })
}

fn current_delay(itin: &[ScheduleEntry], t: Minutes) -> Minutes {
    let e = match train_status(itin, t) {
        TrainStatus::NotStarted => itin.first(),
        TrainStatus::AtPlatform(i) => itin.get(i),
        TrainStatus::OnTrack(i) => itin.get(i + 1),
        TrainStatus::Finished => itin.last(),
    };
    e.map_or(0, |e| (e.x_at - e.o_at).max(0))
}

/// Trains still running at onset, highest priority first.
pub(crate) fn priority_order(input: &DispatchInput, policy: &PriorityPolicy) -> Vec<TrainId> {
    let t = input.event.t_d;
    let mut context: Vec<(&Train, Minutes)> = Vec::new();
    for (j, itin) in &input.schedule.itineraries {
        if train_status(itin, t) == TrainStatus::Finished {
            continue;
        }
        if let Some(train) = input.trains.get(j) {
            context.push((train, current_delay(itin, t)));
        }
    }
    let mut order: Vec<TrainId> = policy.order_trains(t, &context).into_iter().map(|tr| tr.id).collect();
    // trains without catalogue data go last, by id
    for (j, itin) in &input.schedule.itineraries {
        if !input.trains.contains_key(j) && train_status(itin, t) != TrainStatus::Finished {
            order.push(*j);
        }
    }
    order
}

/// Replans every running train in `order`, each taking its earliest completion
/// around the reservations of those before it. A train that cannot be placed is
/// moved to the front and the pass restarts.
pub(crate) fn dispatch(
    input: &DispatchInput,
    opts: &DispatchOptions,
    mut order: Vec<TrainId>,
) -> Result<Schedule, RescheduleError> {
    let ev = input.event;
    let h = input.cfg.headway;
    let mut base = Table::default();
    for &(s, k) in &ev.blocked_platforms {
        base.add(Key::Platform(s, k), ev.t_d, ev.t_r, BLOCKAGE);
    }
    for &l in &ev.blocked_tracks {
        base.add(Key::Track(l), ev.t_d, ev.t_r, BLOCKAGE);
    }
    for (&j, itin) in &input.schedule.itineraries {
        match train_status(itin, ev.t_d) {
            TrainStatus::AtPlatform(i) => {
                let e = &itin[i];
                let k = e.platform.unwrap_or(1);
                base.add(Key::Platform(e.station, k), e.x_at, e.x_dt.max(ev.t_d + 1), j);
            }
            TrainStatus::OnTrack(i) => {
                let (e, n) = (&itin[i], &itin[i + 1]);
                if let Some(l) = e.next_track {
                    base.add(Key::Track(l), e.x_dt, n.x_at.max(e.x_dt + h), j);
                }
            }
            _ => {}
        }
    }

    let attempts = order.len() * 2 + 2;
    for _ in 0..attempts {
        let mut table = base.clone();
        let mut out = input.schedule.clone();
        let mut failed = None;
        for &j in &order {
            match plan_train(input, opts, &table, j) {
                Some(plan) => {
                    table.release(j);
                    for (key, s, e) in plan.holds {
                        table.add(key, s, e, j);
                    }
                    out.itineraries.insert(j, plan.entries);
                }
                None => {
                    failed = Some(j);
                    break;
                }
            }
        }
        match failed {
            None => {
                let beyond = out
                    .entries()
                    .any(|e| e.x_at > input.cfg.horizon || e.x_dt > input.cfg.horizon);
                if beyond {
                    return Err(RescheduleError::InfeasibleAfterRecovery);
                }
                return Ok(out);
            }
            Some(j) => {
                let pos = order.iter().position(|&x| x == j).unwrap();
                if pos == 0 {
                    return Err(RescheduleError::InfeasibleAfterRecovery);
                }
                order.remove(pos);
                order.insert(0, j);
            }
        }
    }
    Err(RescheduleError::InfeasibleAfterRecovery)
}
