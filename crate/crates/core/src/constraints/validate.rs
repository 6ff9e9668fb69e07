use std::collections::BTreeMap;

use super::occupancy::{OccupancyTimeline, Resource, Span};
use super::{Location, Rule, Violation};
use crate::model::{PlatformIdx, Schedule};
use crate::network::RailwayNetwork;

/// Every violation of the constraint set by the actual times of `schedule`.
///
/// Conflicting pairs are reported once, against the train whose occupancy
/// starts later (larger train id on ties), at the first shared minute.
pub fn validate_schedule(net: &RailwayNetwork, schedule: &Schedule) -> Vec<Violation> {
    let mut out = Vec::new();
    for (&train, itin) in &schedule.itineraries {
        for e in itin {
            if e.x_at < e.o_at {
                out.push(Violation::new(
                    Rule::EarlyArrival,
                    train,
                    Location::Station(e.station),
                    e.x_at,
                ));
            }
            if e.x_dt < e.x_at {
                out.push(Violation::new(
                    Rule::DepartureBeforeArrival,
                    train,
                    Location::Station(e.station),
                    e.x_dt,
                ));
            }
            let p = net.platform_count(e.station);
            match e.platform {
                Some(k) if k >= 1 && k <= p => {}
                other => out.push(Violation::new(
                    Rule::PlatformIndex,
                    train,
                    Location::Platform(e.station, other.unwrap_or(0)),
                    e.x_at,
                )),
            }
        }
        for pair in itin.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let seg = prev
                .next_track
                .and_then(|l| net.track(l))
                .filter(|seg| seg.allows(prev.station, next.station));
            match seg {
                None => out.push(Violation::new(
                    Rule::RouteShape,
                    train,
                    Location::Station(next.station),
                    next.x_at,
                )),
                Some(seg) => {
                    if next.x_at < prev.x_dt + seg.journey_time {
                        out.push(Violation::new(
                            Rule::Continuity,
                            train,
                            Location::Station(next.station),
                            next.x_at,
                        ));
                    }
                }
            }
        }
    }

    let timeline = OccupancyTimeline::from_schedule(schedule);
    let mut by_resource: BTreeMap<ResourceKey, Vec<&Span>> = BTreeMap::new();
    let mut by_train: BTreeMap<_, Vec<&Span>> = BTreeMap::new();
    for s in &timeline.spans {
        by_resource.entry(ResourceKey::of(s.resource)).or_default().push(s);
        if !s.instant {
            by_train.entry(s.train).or_default().push(s);
        }
    }
    for (key, spans) in &by_resource {
        let rule = match key {
            ResourceKey::Platform(..) => Rule::PlatformConflict,
            ResourceKey::Track(_) => Rule::TrackConflict,
        };
        for (a_idx, a) in spans.iter().enumerate() {
            for b in &spans[a_idx + 1..] {
                if a.train == b.train || !a.overlaps(b) {
                    continue;
                }
                let later = if (a.start, a.train) > (b.start, b.train) { a } else { b };
                out.push(Violation::new(
                    rule,
                    later.train,
                    key.location(),
                    a.start.max(b.start),
                ));
            }
        }
    }
    for (&train, spans) in &by_train {
        for (a_idx, a) in spans.iter().enumerate() {
            for b in &spans[a_idx + 1..] {
                if a.overlaps(b) {
                    let loc = match (a.start, b.start) {
                        (x, y) if x >= y => ResourceKey::of(a.resource).location(),
                        _ => ResourceKey::of(b.resource).location(),
                    };
                    out.push(Violation::new(
                        Rule::MultipleResources,
                        train,
                        loc,
                        a.start.max(b.start),
                    ));
                }
            }
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ResourceKey {
    Platform(crate::model::StationId, PlatformIdx),
    Track(crate::model::TrackId),
}

impl ResourceKey {
    fn of(r: Resource) -> Self {
        match r {
            Resource::Platform(i, k) => ResourceKey::Platform(i, k),
            Resource::Track(_, l) => ResourceKey::Track(l),
            Resource::None => unreachable!("spans always hold a resource"),
        }
    }

    fn location(self) -> Location {
        match self {
            ResourceKey::Platform(i, k) => Location::Platform(i, k),
            ResourceKey::Track(l) => Location::Track(l),
        }
    }
}

/// Gives every entry without a platform the lowest index free over its stay,
/// processing arrivals in time order. Entries that find no free platform keep
/// `None` and are reported by [`validate_schedule`].
pub fn assign_platforms(net: &RailwayNetwork, schedule: &mut Schedule) {
    let mut taken: BTreeMap<(crate::model::StationId, PlatformIdx), Vec<(i64, i64)>> =
        BTreeMap::new();
    let span = |a: i64, d: i64| if d > a { (a, d) } else { (a, a + 1) };
    let mut pending = Vec::new();
    for (&train, itin) in &schedule.itineraries {
        for (n, e) in itin.iter().enumerate() {
            match e.platform {
                Some(k) => taken
                    .entry((e.station, k))
                    .or_default()
                    .push(span(e.x_at, e.x_dt)),
                None => pending.push((e.x_at, e.x_dt, train, n)),
            }
        }
    }
    pending.sort();
    for (a, d, train, n) in pending {
        let station = schedule.itineraries[&train][n].station;
        let (s, t) = span(a, d);
        let free = (1..=net.platform_count(station)).find(|&k| {
            taken
                .get(&(station, k))
                .is_none_or(|v| v.iter().all(|&(x, y)| t <= x || y <= s))
        });
        if let Some(k) = free {
            taken.entry((station, k)).or_default().push((s, t));
            schedule.itineraries.get_mut(&train).unwrap()[n].platform = Some(k);
        }
    }
}
