use std::collections::BTreeSet;

use crate::model::{Minutes, Schedule, ScheduleEntry, TrainId};

use super::ResolvedEvent;

/// Where a train is at a given instant, by itinerary index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    NotStarted,
    AtPlatform(usize),
    /// Departed entry `i`, heading to entry `i + 1`.
    OnTrack(usize),
    Finished,
}

pub fn train_status(itin: &[ScheduleEntry], t: Minutes) -> TrainStatus {
    let Some(first) = itin.first() else {
        return TrainStatus::Finished;
    };
    if t < first.x_at {
        return TrainStatus::NotStarted;
    }
    for (i, e) in itin.iter().enumerate() {
        if (e.x_at <= t && t < e.x_dt) || (e.x_at == t && e.x_dt == t) {
            return TrainStatus::AtPlatform(i);
        }
        if let Some(n) = itin.get(i + 1) {
            if e.x_dt <= t && t < n.x_at {
                return TrainStatus::OnTrack(i);
            }
        }
    }
    TrainStatus::Finished
}

/// Trains whose remaining plan touches a blocked resource, a platform of a
/// station with a blocked platform included, before the affected window closes.
pub fn affected_trains(schedule: &Schedule, ev: &ResolvedEvent) -> BTreeSet<TrainId> {
    let stations = ev.blocked_stations();
    let (lo, hi) = (ev.t_d, ev.window_end());
    let hits = |s: Minutes, e: Minutes| s < hi && e > lo;
    let mut out = BTreeSet::new();
    for (&j, itin) in &schedule.itineraries {
        let touches = itin.iter().enumerate().any(|(i, e)| {
            let platform = stations.contains(&e.station) && hits(e.x_at, e.x_dt.max(e.x_at + 1));
            let track = match (e.next_track, itin.get(i + 1)) {
                (Some(l), Some(n)) => ev.blocked_tracks.contains(&l) && hits(e.x_dt, n.x_at),
                _ => false,
            };
            platform || track
        });
        if touches {
            out.insert(j);
        }
    }
    out
}
