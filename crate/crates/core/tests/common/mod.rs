#![allow(dead_code)]

use std::collections::BTreeSet;

use railsched::model::{Category, Minutes, Schedule, ScheduleEntry, StationId, Timetable, TrackId, Train, TrainId};
use railsched::network::{build_network, RailwayNetwork, Station, TrackSegment};
use railsched::resched::{DisasterEvent, RecoveryModel};

/// Stations `(id, platforms)` named by letter, general tracks `(id, a, b, journey)`.
pub fn net(stations: &[(u32, u8)], tracks: &[(u32, u32, u32, Minutes)]) -> RailwayNetwork {
    build_network(
        stations
            .iter()
            .map(|&(id, p)| Station::new(id, ((b'A' + (id - 1) as u8) as char).to_string(), p))
            .collect(),
        tracks
            .iter()
            .map(|&(id, a, b, j)| TrackSegment::general(id, a, b, j))
            .collect(),
    )
    .unwrap()
}

/// `(station, at, dt, platform, track to next)`
pub type Stop = (u32, Minutes, Minutes, u8, Option<u32>);

pub fn itinerary(train: u32, stops: &[Stop]) -> Vec<ScheduleEntry> {
    stops
        .iter()
        .map(|&(s, at, dt, k, l)| {
            let mut e = ScheduleEntry::planned(TrainId(train), StationId(s), at, dt, l.map(TrackId));
            e.platform = Some(k);
            e
        })
        .collect()
}

pub fn timetable(trains: &[(u32, Category, Vec<ScheduleEntry>)]) -> Timetable {
    let mut tt = Timetable::default();
    let mut all = Vec::new();
    for (id, cat, entries) in trains {
        tt.trains.insert(TrainId(*id), Train::new(*id, format!("{id}"), *cat));
        all.extend(entries.iter().cloned());
    }
    tt.schedule = Schedule::from_entries(all);
    tt
}

pub fn event(
    t_d: Minutes,
    platforms: &[(u32, u8)],
    tracks: &[u32],
    tau: (Minutes, Minutes),
) -> DisasterEvent {
    DisasterEvent {
        t_d,
        blocked_platforms: platforms.iter().map(|&(s, k)| (StationId(s), k)).collect::<BTreeSet<_>>(),
        blocked_tracks: tracks.iter().map(|&l| TrackId(l)).collect(),
        recovery: RecoveryModel::uniform(tau.0, tau.1),
    }
}
