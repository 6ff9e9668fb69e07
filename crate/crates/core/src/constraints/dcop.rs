use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Minutes, StationId, Timetable, TrackId, TrainId};
use crate::network::RailwayNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentRef {
    Station(StationId),
    Train(TrainId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variable {
    Arrival(TrainId, StationId),
    Departure(TrainId, StationId),
    Platform(TrainId, StationId, u8),
    Track(TrainId, StationId, TrackId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintFamily {
    Continuity,
    TimeDelay,
    PlatformIndex,
    PlatformSum,
    TrackOccupancy,
    SingleResource,
    Route,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 7] = [
        ConstraintFamily::Continuity,
        ConstraintFamily::TimeDelay,
        ConstraintFamily::PlatformIndex,
        ConstraintFamily::PlatformSum,
        ConstraintFamily::TrackOccupancy,
        ConstraintFamily::SingleResource,
        ConstraintFamily::Route,
    ];
}

/// ⟨Ag, X, D, C⟩ over the trains still running after a disruption at `t_d`.
/// Time variables range over `[t_d, t_d + tau_r]`; indicators over `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcopInstance {
    pub agents: Vec<AgentRef>,
    pub owner: BTreeMap<Variable, AgentRef>,
    pub time_domain: (Minutes, Minutes),
    pub constraints: Vec<ConstraintFamily>,
}

impl DcopInstance {
    pub fn build(net: &RailwayNetwork, timetable: &Timetable, t_d: Minutes, tau_r: Minutes) -> Self {
        let mut agents: Vec<AgentRef> = net.stations().map(|s| AgentRef::Station(s.id)).collect();
        agents.extend(timetable.trains.keys().map(|&j| AgentRef::Train(j)));
        let mut owner = BTreeMap::new();
        for (&j, itin) in &timetable.schedule.itineraries {
            for e in itin {
                let t = AgentRef::Train(j);
                owner.insert(Variable::Arrival(j, e.station), t);
                owner.insert(Variable::Departure(j, e.station), t);
                let s = AgentRef::Station(e.station);
                for k in 1..=net.platform_count(e.station) {
                    owner.insert(Variable::Platform(j, e.station, k), s);
                }
                for (_, l) in net.neighbors(e.station) {
                    owner.insert(Variable::Track(j, e.station, l), s);
                }
            }
        }
        DcopInstance {
            agents,
            owner,
            time_domain: (t_d, t_d + tau_r),
            constraints: ConstraintFamily::ALL.to_vec(),
        }
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }
}
