use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ConstraintError;
use crate::model::{Minutes, PlatformIdx, Schedule, StationId, TrackId, TrainId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resource {
    /// Platform `k` at station `i` (P_jik).
    Platform(StationId, PlatformIdx),
    /// Track `l` entered from station `i` (L_jil).
    Track(StationId, TrackId),
    None,
}

/// Indicator snapshot: the `(j, i, k)` with P_jik = 1 and `(j, i, l)` with L_jil = 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyState {
    pub platform_occ: BTreeSet<(TrainId, StationId, PlatformIdx)>,
    pub track_occ: BTreeSet<(TrainId, StationId, TrackId)>,
}

impl OccupancyState {
    pub fn hold(&mut self, train: TrainId, r: Resource) {
        match r {
            Resource::Platform(i, k) => {
                self.platform_occ.insert((train, i, k));
            }
            Resource::Track(i, l) => {
                self.track_occ.insert((train, i, l));
            }
            Resource::None => {}
        }
    }

    pub fn resource_of(&self, train: TrainId) -> Result<Resource, ConstraintError> {
        let mut held = self
            .platform_occ
            .iter()
            .filter(|e| e.0 == train)
            .map(|&(_, i, k)| Resource::Platform(i, k))
            .chain(
                self.track_occ
                    .iter()
                    .filter(|e| e.0 == train)
                    .map(|&(_, i, l)| Resource::Track(i, l)),
            );
        let first = held.next();
        if held.next().is_some() {
            return Err(ConstraintError::MultipleResourcesHeld(train));
        }
        Ok(first.unwrap_or(Resource::None))
    }

    pub fn platform_taken(&self, station: StationId, k: PlatformIdx) -> bool {
        self.platform_occ
            .iter()
            .any(|&(_, i, kk)| i == station && kk == k)
    }

    pub fn track_taken(&self, track: TrackId) -> bool {
        self.track_occ.iter().any(|&(_, _, l)| l == track)
    }

    pub fn trains(&self) -> BTreeSet<TrainId> {
        self.platform_occ
            .iter()
            .map(|e| e.0)
            .chain(self.track_occ.iter().map(|e| e.0))
            .collect()
    }
}

/// A half-open occupancy `[start, end)`. A zero-dwell pass is an instant at
/// `start` and is stored with `end = start + 1` and `instant = true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub train: TrainId,
    pub resource: Resource,
    pub start: Minutes,
    pub end: Minutes,
    pub instant: bool,
}

impl Span {
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn covers(&self, t: Minutes) -> bool {
        self.start <= t && t < self.end
    }
}

/// All occupancy spans implied by the actual times of a schedule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccupancyTimeline {
    pub spans: Vec<Span>,
}

impl OccupancyTimeline {
    pub fn from_schedule(schedule: &Schedule) -> Self {
        let mut spans = Vec::new();
        for (&train, itin) in &schedule.itineraries {
            for (n, e) in itin.iter().enumerate() {
                if let Some(k) = e.platform {
                    let r = Resource::Platform(e.station, k);
                    if e.x_dt > e.x_at {
                        spans.push(Span {
                            train,
                            resource: r,
                            start: e.x_at,
                            end: e.x_dt,
                            instant: false,
                        });
                    } else if e.x_dt == e.x_at {
                        spans.push(Span {
                            train,
                            resource: r,
                            start: e.x_at,
                            end: e.x_at + 1,
                            instant: true,
                        });
                    }
                }
                if let (Some(l), Some(next)) = (e.next_track, itin.get(n + 1)) {
                    if next.x_at > e.x_dt {
                        spans.push(Span {
                            train,
                            resource: Resource::Track(e.station, l),
                            start: e.x_dt,
                            end: next.x_at,
                            instant: false,
                        });
                    }
                }
            }
        }
        OccupancyTimeline { spans }
    }

    /// Indicators at instant `t`; pass-through instants are not included.
    pub fn at(&self, t: Minutes) -> OccupancyState {
        let mut occ = OccupancyState::default();
        for s in &self.spans {
            if !s.instant && s.covers(t) {
                occ.hold(s.train, s.resource);
            }
        }
        occ
    }

    /// Every span start and end, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<Minutes> {
        let set: BTreeSet<Minutes> = self.spans.iter().flat_map(|s| [s.start, s.end]).collect();
        set.into_iter().collect()
    }
}

/// The single resource `train` holds at `t`.
pub fn resource_of(
    occ: &OccupancyTimeline,
    train: TrainId,
    t: Minutes,
) -> Result<Resource, ConstraintError> {
    let mut held = occ
        .spans
        .iter()
        .filter(|s| s.train == train && !s.instant && s.covers(t));
    let first = held.next().map(|s| s.resource);
    if held.next().is_some() {
        return Err(ConstraintError::MultipleResourcesHeld(train));
    }
    Ok(first.unwrap_or(Resource::None))
}
