use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::occupancy::{OccupancyState, Resource};
use super::ConstraintError;
use crate::model::{PlatformIdx, StationId, TrackId, TrainId};

/// World states of a train around the disrupted station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MdpState {
    /// L_jil = 1 on a track joining the neighbour and the disrupted station.
    OnTrack(TrackId),
    /// P_jik = 1 at the disrupted station.
    AtDisrupted(PlatformIdx),
    /// P_j'i'k = 1 at the neighbouring station.
    AtNeighbor(PlatformIdx),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Guard {
    /// Some usable platform of the station is free.
    PlatformFree(StationId),
    /// Some usable track between the two stations is free.
    TrackFree(StationId, StationId),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MdpTransition {
    pub target: MdpState,
    pub guards: BTreeSet<Guard>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpModel {
    pub disrupted: StationId,
    pub neighbor: StationId,
    pub disrupted_platforms: PlatformIdx,
    pub neighbor_platforms: PlatformIdx,
    /// Tracks joining `neighbor` and `disrupted`.
    pub tracks: Vec<TrackId>,
    pub unusable_platforms: BTreeSet<(StationId, PlatformIdx)>,
    pub unusable_tracks: BTreeSet<TrackId>,
}

impl MdpModel {
    pub fn state_of(&self, occ: &OccupancyState, train: TrainId) -> Result<MdpState, ConstraintError> {
        match occ.resource_of(train)? {
            Resource::Track(_, l) if self.tracks.contains(&l) => Ok(MdpState::OnTrack(l)),
            Resource::Platform(i, k) if i == self.disrupted => Ok(MdpState::AtDisrupted(k)),
            Resource::Platform(i, k) if i == self.neighbor => Ok(MdpState::AtNeighbor(k)),
            _ => Err(ConstraintError::UnknownState(train)),
        }
    }

    fn free_platform(&self, occ: &OccupancyState, station: StationId) -> Option<PlatformIdx> {
        let p = if station == self.disrupted {
            self.disrupted_platforms
        } else {
            self.neighbor_platforms
        };
        (1..=p).find(|&k| {
            !self.unusable_platforms.contains(&(station, k)) && !occ.platform_taken(station, k)
        })
    }

    fn free_track(&self, occ: &OccupancyState) -> Option<TrackId> {
        self.tracks
            .iter()
            .copied()
            .find(|l| !self.unusable_tracks.contains(l) && !occ.track_taken(*l))
    }

    pub fn evaluate(&self, occ: &OccupancyState, g: Guard) -> bool {
        match g {
            Guard::PlatformFree(s) => self.free_platform(occ, s).is_some(),
            Guard::TrackFree(..) => self.free_track(occ).is_some(),
        }
    }
}

/// Transitions out of the train's current state whose guards all hold.
pub fn mdp_enabled_transitions(
    model: &MdpModel,
    occ: &OccupancyState,
    train: TrainId,
) -> Result<Vec<MdpTransition>, ConstraintError> {
    let state = model.state_of(occ, train)?;
    let (i, n) = (model.disrupted, model.neighbor);
    let mut out = Vec::new();
    match state {
        MdpState::OnTrack(_) => {
            if let Some(k) = model.free_platform(occ, i) {
                out.push(MdpTransition {
                    target: MdpState::AtDisrupted(k),
                    guards: BTreeSet::from([Guard::PlatformFree(i)]),
                });
            }
        }
        MdpState::AtDisrupted(_) => {
            let guards = BTreeSet::from([Guard::TrackFree(i, n), Guard::PlatformFree(n)]);
            if let Some(k) = model.free_platform(occ, n) {
                if guards.iter().all(|&g| model.evaluate(occ, g)) {
                    out.push(MdpTransition {
                        target: MdpState::AtNeighbor(k),
                        guards,
                    });
                }
            }
        }
        MdpState::AtNeighbor(_) => {
            let guards = BTreeSet::from([Guard::TrackFree(n, i), Guard::PlatformFree(i)]);
            if let Some(l) = model.free_track(occ) {
                if guards.iter().all(|&g| model.evaluate(occ, g)) {
                    out.push(MdpTransition {
                        target: MdpState::OnTrack(l),
                        guards,
                    });
                }
            }
        }
    }
    Ok(out)
}
