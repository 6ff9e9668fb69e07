//! Constraint model: occupancy indicators, schedule validation, dynamic priority
//! and the occupancy MDP.

mod dcop;
mod mdp;
mod occupancy;
mod priority;
mod validate;

pub use dcop::{AgentRef, ConstraintFamily, DcopInstance, Variable};
pub use mdp::{mdp_enabled_transitions, Guard, MdpModel, MdpState, MdpTransition};
pub use occupancy::{resource_of, OccupancyState, OccupancyTimeline, Resource, Span};
pub use priority::{priority_rank, ContentionKey, OrderKind, PriorityPolicy};
pub use validate::{assign_platforms, validate_schedule};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Minutes, PlatformIdx, ScheduleEntry, StationId, TrackId, TrainId};
use crate::network::RailwayNetwork;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("{0} and {1} are not adjacent stations")]
    NonAdjacentStations(StationId, StationId),
    #[error("entries belong to different trains ({0}, {1})")]
    TrainMismatch(TrainId, TrainId),
    #[error("train {train} arrives at {station} at {actual}, before its original time {original}")]
    EarlyArrivalViolation {
        train: TrainId,
        station: StationId,
        original: Minutes,
        actual: Minutes,
    },
    #[error("train {0} holds more than one resource")]
    MultipleResourcesHeld(TrainId),
    #[error("train {0} is not in a state of the model")]
    UnknownState(TrainId),
}

/// Constraint families; `Continuity` through `RouteShape` follow the model's
/// seven constraints in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    Continuity,
    EarlyArrival,
    PlatformIndex,
    PlatformConflict,
    TrackConflict,
    MultipleResources,
    RouteShape,
    DepartureBeforeArrival,
    BlockedResource,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Continuity => "continuity",
            Rule::EarlyArrival => "early-arrival",
            Rule::PlatformIndex => "platform-index",
            Rule::PlatformConflict => "platform-conflict",
            Rule::TrackConflict => "track-conflict",
            Rule::MultipleResources => "multiple-resources",
            Rule::RouteShape => "route-shape",
            Rule::DepartureBeforeArrival => "departure-before-arrival",
            Rule::BlockedResource => "blocked-resource",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Station(StationId),
    Platform(StationId, PlatformIdx),
    Track(TrackId),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Station(s) => write!(f, "{s}"),
            Location::Platform(s, k) => write!(f, "{s}/{k}"),
            Location::Track(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub train: TrainId,
    pub location: Location,
    pub at: Minutes,
}

impl Violation {
    pub fn new(rule: Rule, train: TrainId, location: Location, at: Minutes) -> Self {
        Violation {
            rule,
            train,
            location,
            at,
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} at {} ({})",
            self.rule.name(),
            self.train,
            self.location,
            crate::model::format_hhmm(self.at)
        )
    }
}

pub fn check_continuity(
    prev: &ScheduleEntry,
    next: &ScheduleEntry,
    journey: Minutes,
) -> Result<bool, ConstraintError> {
    if prev.train != next.train {
        return Err(ConstraintError::TrainMismatch(prev.train, next.train));
    }
    if prev.station == next.station {
        return Err(ConstraintError::NonAdjacentStations(prev.station, next.station));
    }
    Ok(next.x_at >= prev.x_dt + journey)
}

/// [`check_continuity`] with adjacency and journey time taken from the network.
pub fn check_continuity_in(
    net: &RailwayNetwork,
    prev: &ScheduleEntry,
    next: &ScheduleEntry,
) -> Result<bool, ConstraintError> {
    let journey = crate::network::leg_journey(net, prev.station, next.station, prev.next_track)
        .ok_or(ConstraintError::NonAdjacentStations(prev.station, next.station))?;
    check_continuity(prev, next, journey)
}

pub fn compute_delay(entry: &ScheduleEntry) -> Result<Minutes, ConstraintError> {
    if entry.x_at < entry.o_at {
        return Err(ConstraintError::EarlyArrivalViolation {
            train: entry.train,
            station: entry.station,
            original: entry.o_at,
            actual: entry.x_at,
        });
    }
    Ok(entry.x_at - entry.o_at)
}

/// Every occupied platform index lies in `1..=p`, no index is shared and at
/// most `p` platforms are in use.
pub fn check_platform_capacity(occ: &OccupancyState, station: StationId, p: PlatformIdx) -> bool {
    let ks: Vec<PlatformIdx> = occ
        .platform_occ
        .iter()
        .filter(|&&(_, s, _)| s == station)
        .map(|&(_, _, k)| k)
        .collect();
    let distinct: std::collections::BTreeSet<_> = ks.iter().collect();
    ks.iter().all(|&k| k >= 1 && k <= p) && distinct.len() == ks.len() && ks.len() <= p as usize
}

/// At most one train on `track`. Track ids are global, so occupants keyed at
/// either endpoint station count.
pub fn check_track_exclusivity(occ: &OccupancyState, station: StationId, track: TrackId) -> bool {
    let _ = station;
    let trains: std::collections::BTreeSet<TrainId> = occ
        .track_occ
        .iter()
        .filter(|&&(_, _, l)| l == track)
        .map(|&(j, _, _)| j)
        .collect();
    trains.len() <= 1
}
