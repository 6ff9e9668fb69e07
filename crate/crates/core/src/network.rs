//! Railway multigraph: stations, parallel tracks, route enumeration and
//! static timetable checks.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{Location, Rule, Violation};
use crate::model::{Minutes, PlatformIdx, StationId, Timetable, TrackId};

/// Largest platform count a station may declare.
pub const MAX_PLATFORMS: PlatformIdx = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("network has no stations")]
    Empty,
    #[error("duplicate station id or code: {0}")]
    DuplicateStationId(String),
    #[error("duplicate track id {0}")]
    DuplicateTrackId(TrackId),
    #[error("track {track} references unknown station {station}")]
    DanglingTrackEndpoint { track: TrackId, station: StationId },
    #[error("track {0} joins a station to itself")]
    SelfLoop(TrackId),
    #[error("track {0} has non-positive journey time")]
    NonPositiveJourney(TrackId),
    #[error("station {station} has invalid platform count {count} (must be 1..={max})", max = MAX_PLATFORMS)]
    InvalidPlatformCount { station: String, count: i64 },
    #[error("network is disconnected: {0} unreachable from the first station")]
    DisconnectedGraph(StationId),
    #[error("unknown station {0}")]
    UnknownStation(StationId),
    #[error("unknown train {0}")]
    UnknownTrain(crate::model::TrainId),
    #[error("no route from {0} to {1}")]
    NoRouteExists(StationId, StationId),
    #[error("origin and destination are both {0}")]
    SameEndpoints(StationId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Station {
    pub id: StationId,
    pub code: String,
    pub platform_count: PlatformIdx,
    pub is_junction: bool,
}

impl Station {
    pub fn new(id: u32, code: impl Into<String>, platform_count: PlatformIdx) -> Self {
        Station {
            id: StationId(id),
            code: code.into(),
            platform_count,
            is_junction: false,
        }
    }

    pub fn junction(mut self) -> Self {
        self.is_junction = true;
        self
    }
}

/// UP runs towards increasing station ids, DOWN towards decreasing ids and a
/// GENERAL track may be used in either direction, one occupancy at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrackRole {
    Up,
    Down,
    General,
}

impl TrackRole {
    pub fn name(self) -> &'static str {
        match self {
            TrackRole::Up => "UP",
            TrackRole::Down => "DOWN",
            TrackRole::General => "GENERAL",
        }
    }

    pub fn parse(s: &str) -> Option<TrackRole> {
        match s.to_ascii_uppercase().as_str() {
            "UP" => Some(TrackRole::Up),
            "DOWN" => Some(TrackRole::Down),
            "GENERAL" => Some(TrackRole::General),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackSegment {
    pub id: TrackId,
    /// Stored with the smaller station id first.
    pub endpoints: (StationId, StationId),
    pub role: TrackRole,
    pub journey_time: Minutes,
}

impl TrackSegment {
    pub fn new(id: u32, a: u32, b: u32, role: TrackRole, journey_time: Minutes) -> Self {
        let (a, b) = (StationId(a.min(b)), StationId(a.max(b)));
        TrackSegment {
            id: TrackId(id),
            endpoints: (a, b),
            role,
            journey_time,
        }
    }

    pub fn general(id: u32, a: u32, b: u32, journey_time: Minutes) -> Self {
        TrackSegment::new(id, a, b, TrackRole::General, journey_time)
    }

    pub fn connects(&self, x: StationId, y: StationId) -> bool {
        (self.endpoints.0 == x && self.endpoints.1 == y)
            || (self.endpoints.0 == y && self.endpoints.1 == x)
    }

    pub fn other_end(&self, s: StationId) -> Option<StationId> {
        if self.endpoints.0 == s {
            Some(self.endpoints.1)
        } else if self.endpoints.1 == s {
            Some(self.endpoints.0)
        } else {
            None
        }
    }

    /// Whether a train may run from `from` to `to` on this track.
    pub fn allows(&self, from: StationId, to: StationId) -> bool {
        if !self.connects(from, to) {
            return false;
        }
        match self.role {
            TrackRole::General => true,
            TrackRole::Up => from < to,
            TrackRole::Down => from > to,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RailwayNetwork {
    stations: BTreeMap<StationId, Station>,
    tracks: BTreeMap<TrackId, TrackSegment>,
    adjacency: BTreeMap<StationId, BTreeSet<(StationId, TrackId)>>,
}

pub fn build_network(
    stations: Vec<Station>,
    tracks: Vec<TrackSegment>,
) -> Result<RailwayNetwork, NetworkError> {
    if stations.is_empty() {
        return Err(NetworkError::Empty);
    }
    let mut by_id = BTreeMap::new();
    let mut codes = BTreeSet::new();
    for s in stations {
        if s.platform_count < 1 || s.platform_count > MAX_PLATFORMS {
            return Err(NetworkError::InvalidPlatformCount {
                station: s.code.clone(),
                count: s.platform_count as i64,
            });
        }
        if !codes.insert(s.code.clone()) {
            return Err(NetworkError::DuplicateStationId(s.code));
        }
        if by_id.contains_key(&s.id) {
            return Err(NetworkError::DuplicateStationId(s.id.to_string()));
        }
        by_id.insert(s.id, s);
    }

    let mut track_map = BTreeMap::new();
    let mut adjacency: BTreeMap<StationId, BTreeSet<(StationId, TrackId)>> =
        by_id.keys().map(|&id| (id, BTreeSet::new())).collect();
    for t in tracks {
        for end in [t.endpoints.0, t.endpoints.1] {
            if !by_id.contains_key(&end) {
                return Err(NetworkError::DanglingTrackEndpoint {
                    track: t.id,
                    station: end,
                });
            }
        }
        if t.endpoints.0 == t.endpoints.1 {
            return Err(NetworkError::SelfLoop(t.id));
        }
        if t.journey_time <= 0 {
            return Err(NetworkError::NonPositiveJourney(t.id));
        }
        if track_map.contains_key(&t.id) {
            return Err(NetworkError::DuplicateTrackId(t.id));
        }
        let (a, b) = t.endpoints;
        adjacency.get_mut(&a).unwrap().insert((b, t.id));
        adjacency.get_mut(&b).unwrap().insert((a, t.id));
        track_map.insert(t.id, t);
    }

    let net = RailwayNetwork {
        stations: by_id,
        tracks: track_map,
        adjacency,
    };
    if let Some(s) = net.first_unreachable() {
        return Err(NetworkError::DisconnectedGraph(s));
    }
    Ok(net)
}

impl RailwayNetwork {
    pub fn stations(&self) -> impl Iterator<Item = &Station> {
        self.stations.values()
    }

    pub fn tracks(&self) -> impl Iterator<Item = &TrackSegment> {
        self.tracks.values()
    }

    pub fn station(&self, id: StationId) -> Option<&Station> {
        self.stations.get(&id)
    }

    pub fn station_by_code(&self, code: &str) -> Option<&Station> {
        self.stations.values().find(|s| s.code == code)
    }

    pub fn track(&self, id: TrackId) -> Option<&TrackSegment> {
        self.tracks.get(&id)
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn track_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn platform_count(&self, id: StationId) -> PlatformIdx {
        self.stations.get(&id).map_or(0, |s| s.platform_count)
    }

    pub fn neighbors(&self, id: StationId) -> impl Iterator<Item = (StationId, TrackId)> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    pub fn adjacency(&self) -> &BTreeMap<StationId, BTreeSet<(StationId, TrackId)>> {
        &self.adjacency
    }

    pub fn are_adjacent(&self, a: StationId, b: StationId) -> bool {
        self.neighbors(a).any(|(n, _)| n == b)
    }

    /// Tracks joining `a` and `b`, ordered by id.
    pub fn tracks_between(&self, a: StationId, b: StationId) -> Vec<&TrackSegment> {
        self.neighbors(a)
            .filter(|&(n, _)| n == b)
            .filter_map(|(_, t)| self.tracks.get(&t))
            .collect()
    }

    /// The `index`-th (1-based) track on the pair `a`–`b` in id order.
    pub fn nth_track_between(&self, a: StationId, b: StationId, index: usize) -> Option<TrackId> {
        let ts = self.tracks_between(a, b);
        index.checked_sub(1).and_then(|i| ts.get(i)).map(|t| t.id)
    }

    fn first_unreachable(&self) -> Option<StationId> {
        let start = *self.stations.keys().next()?;
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            for (n, _) in self.neighbors(s) {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        self.stations.keys().find(|s| !seen.contains(s)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RouteStep {
    Platform(StationId),
    Track(TrackId),
}

/// Alternating platform and track occupancies, ending on a platform.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub steps: Vec<RouteStep>,
}

impl Route {
    pub fn stations(&self) -> Vec<StationId> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                RouteStep::Platform(st) => Some(*st),
                RouteStep::Track(_) => None,
            })
            .collect()
    }

    pub fn tracks(&self) -> Vec<TrackId> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                RouteStep::Track(t) => Some(*t),
                RouteStep::Platform(_) => None,
            })
            .collect()
    }

    /// `(from, track, to)` triples along the route.
    pub fn legs(&self) -> Vec<(StationId, TrackId, StationId)> {
        let st = self.stations();
        let tr = self.tracks();
        tr.iter()
            .enumerate()
            .map(|(i, &t)| (st[i], t, st[i + 1]))
            .collect()
    }

    pub fn journey_time(&self, net: &RailwayNetwork) -> Minutes {
        self.tracks()
            .iter()
            .filter_map(|t| net.track(*t))
            .map(|t| t.journey_time)
            .sum()
    }

    /// Flattened `(station, track, station, ...)` ids used for tie-breaking.
    pub fn lex_key(&self) -> Vec<u32> {
        self.steps
            .iter()
            .map(|s| match s {
                RouteStep::Platform(st) => st.0,
                RouteStep::Track(t) => t.0,
            })
            .collect()
    }

    /// Every track step joins the stations on either side of it, steps alternate
    /// and the route starts and ends on a platform.
    pub fn is_well_formed(&self, net: &RailwayNetwork) -> bool {
        if self.steps.is_empty() || self.steps.len().is_multiple_of(2) {
            return false;
        }
        for (k, step) in self.steps.iter().enumerate() {
            match (k % 2, step) {
                (0, RouteStep::Platform(s)) => {
                    if net.station(*s).is_none() {
                        return false;
                    }
                }
                (1, RouteStep::Track(t)) => {
                    let (RouteStep::Platform(prev), RouteStep::Platform(next)) =
                        (self.steps[k - 1], self.steps[k + 1])
                    else {
                        return false;
                    };
                    match net.track(*t) {
                        Some(seg) if seg.connects(prev, next) => {}
                        _ => return false,
                    }
                }
                _ => return false,
            }
        }
        true
    }

    pub fn from_legs(origin: StationId, legs: &[(TrackId, StationId)]) -> Route {
        let mut steps = vec![RouteStep::Platform(origin)];
        for &(t, s) in legs {
            steps.push(RouteStep::Track(t));
            steps.push(RouteStep::Platform(s));
        }
        Route { steps }
    }
}

/// Loop-free routes from `origin` to `dest`, cheapest first, at most `max_routes`.
pub fn enumerate_routes(
    net: &RailwayNetwork,
    origin: StationId,
    dest: StationId,
    max_routes: usize,
) -> Result<Vec<Route>, NetworkError> {
    enumerate_routes_filtered(net, origin, dest, max_routes, |_, _, _| true)
}

/// Like [`enumerate_routes`] but only uses legs accepted by `usable(from, track, to)`.
///
/// Best-first expansion of partial paths keyed by `(journey time, lexicographic
/// key)`. Journey times are positive, so complete routes pop in exactly that order.
pub fn enumerate_routes_filtered(
    net: &RailwayNetwork,
    origin: StationId,
    dest: StationId,
    max_routes: usize,
    usable: impl Fn(StationId, &TrackSegment, StationId) -> bool,
) -> Result<Vec<Route>, NetworkError> {
    for s in [origin, dest] {
        if net.station(s).is_none() {
            return Err(NetworkError::UnknownStation(s));
        }
    }
    if origin == dest {
        return Err(NetworkError::SameEndpoints(origin));
    }
    let mut out = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0, vec![origin.0])));
    // Guards against pathological blow-up on dense graphs.
    let mut expansions = 0usize;
    while let Some(Reverse((cost, key))) = heap.pop() {
        if out.len() >= max_routes {
            break;
        }
        let last = StationId(*key.last().unwrap());
        if last == dest {
            let steps = key
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if i % 2 == 0 {
                        RouteStep::Platform(StationId(v))
                    } else {
                        RouteStep::Track(TrackId(v))
                    }
                })
                .collect();
            out.push(Route { steps });
            continue;
        }
        expansions += 1;
        if expansions > 2_000_000 {
            break;
        }
        let visited: BTreeSet<u32> = key.iter().step_by(2).copied().collect();
        for (n, t) in net.neighbors(last) {
            if visited.contains(&n.0) {
                continue;
            }
            let seg = net.track(t).expect("adjacency references known tracks");
            if !seg.allows(last, n) || !usable(last, seg, n) {
                continue;
            }
            let mut next = key.clone();
            next.push(t.0);
            next.push(n.0);
            heap.push(Reverse((cost + seg.journey_time, next)));
        }
    }
    if out.is_empty() {
        return Err(NetworkError::NoRouteExists(origin, dest));
    }
    Ok(out)
}

/// Journey time used for the leg between two consecutive itinerary stations.
pub fn leg_journey(
    net: &RailwayNetwork,
    from: StationId,
    to: StationId,
    track: Option<TrackId>,
) -> Option<Minutes> {
    match track {
        Some(t) => net
            .track(t)
            .filter(|seg| seg.connects(from, to))
            .map(|seg| seg.journey_time),
        None => net
            .tracks_between(from, to)
            .iter()
            .filter(|seg| seg.allows(from, to))
            .map(|seg| seg.journey_time)
            .min(),
    }
}

/// Static checks on the original times: departure not before arrival and
/// arrival continuity between consecutive stations.
pub fn validate_timetable(
    net: &RailwayNetwork,
    timetable: &Timetable,
) -> Result<Vec<Violation>, NetworkError> {
    let mut out = Vec::new();
    for (train, itin) in &timetable.schedule.itineraries {
        if !timetable.trains.contains_key(train) {
            return Err(NetworkError::UnknownTrain(*train));
        }
        for e in itin {
            if net.station(e.station).is_none() {
                return Err(NetworkError::UnknownStation(e.station));
            }
            if e.o_dt < e.o_at {
                out.push(Violation::new(
                    Rule::DepartureBeforeArrival,
                    *train,
                    Location::Station(e.station),
                    e.o_dt,
                ));
            }
        }
        for pair in itin.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            match leg_journey(net, prev.station, next.station, prev.next_track) {
                None => out.push(Violation::new(
                    Rule::RouteShape,
                    *train,
                    Location::Station(next.station),
                    next.o_at,
                )),
                Some(j) => {
                    if next.o_at < prev.o_dt + j {
                        out.push(Violation::new(
                            Rule::Continuity,
                            *train,
                            Location::Station(next.station),
                            next.o_at,
                        ));
                    }
                }
            }
        }
    }
    Ok(out)
}
