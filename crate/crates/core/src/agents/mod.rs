//! Station and train agents exchanging messages in a deterministic
//! discrete-event loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{assign_platforms, PriorityPolicy};
use crate::model::{Minutes, PlatformIdx, Schedule, ScheduleEntry, StationId, Timetable, TrackId, Train, TrainId};
use crate::network::RailwayNetwork;
use crate::resched::{
    self, affected_trains, train_status, DisasterEvent, RescheduleConfig, RescheduleDecision,
    RescheduleError, ResolvedEvent, TrainStatus,
};

/// Minutes before a projected arrival at which a train asks for a platform.
pub const REQUEST_LOOKAHEAD: Minutes = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("illegal message route {from} -> {to}")]
    IllegalMessageRoute { from: AgentId, to: AgentId },
    #[error("no feasible completion found after recovery")]
    InfeasibleAfterRecovery,
    #[error("schedule runs past the horizon at {0}")]
    HorizonExceeded(Minutes),
    #[error(transparent)]
    Reschedule(RescheduleError),
}

impl From<RescheduleError> for AgentError {
    fn from(e: RescheduleError) -> Self {
        match e {
            RescheduleError::InfeasibleAfterRecovery => AgentError::InfeasibleAfterRecovery,
            other => AgentError::Reschedule(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentId {
    Station(StationId),
    Train(TrainId),
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Station(s) => write!(f, "Sa:{s}"),
            AgentId::Train(j) => write!(f, "Ta:{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    DisasterNotice,
    RecoveryStatus,
    ResourceRequest,
    ResourceGrant,
    ResourceDeny,
    ScheduleUpdate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payload {
    Disaster {
        event: u32,
        blocked_platforms: Vec<(StationId, PlatformIdx)>,
        blocked_tracks: Vec<TrackId>,
    },
    Recovery {
        event: u32,
        t_r: Minutes,
    },
    Request {
        train: TrainId,
        delay: Minutes,
        /// Occupancy window `[from, until)` at the station.
        from: Minutes,
        until: Minutes,
        preferred: Option<PlatformIdx>,
    },
    Grant {
        train: TrainId,
        platform: PlatformIdx,
    },
    Deny {
        train: TrainId,
    },
    Update {
        entries: Vec<ScheduleEntry>,
    },
}

impl Payload {
    fn digest(&self) -> String {
        match self {
            Payload::Disaster {
                event,
                blocked_platforms,
                blocked_tracks,
            } => format!(
                "event={event} platforms={} tracks={}",
                blocked_platforms.len(),
                blocked_tracks.len()
            ),
            Payload::Recovery { event, t_r } => format!("event={event} t_r={t_r}"),
            Payload::Request {
                train, from, until, ..
            } => format!("{train} [{from},{until})"),
            Payload::Grant { train, platform } => format!("{train} platform={platform}"),
            Payload::Deny { train } => format!("{train}"),
            Payload::Update { entries } => {
                let last = entries.last().map_or(0, |e| e.x_at);
                format!("stops={} terminal={last}", entries.len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: AgentId,
    pub to: AgentId,
    pub at: Minutes,
    pub kind: MessageKind,
    pub payload: Payload,
}

impl Message {
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:?}\t{}",
            self.at,
            self.from,
            self.to,
            self.kind,
            self.payload.digest()
        )
    }
}

/// Trains talk to stations only; stations talk to trains and adjacent stations.
pub fn is_legal(net: &RailwayNetwork, from: AgentId, to: AgentId) -> bool {
    match (from, to) {
        (AgentId::Train(_), AgentId::Station(_)) => true,
        (AgentId::Train(_), AgentId::Train(_)) => false,
        (AgentId::Station(_), AgentId::Train(_)) => true,
        (AgentId::Station(a), AgentId::Station(b)) => net.are_adjacent(a, b),
    }
}

fn check(net: &RailwayNetwork, m: &Message) -> Result<(), AgentError> {
    if is_legal(net, m.from, m.to) {
        Ok(())
    } else {
        Err(AgentError::IllegalMessageRoute {
            from: m.from,
            to: m.to,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationAgent {
    pub id: StationId,
    pub platforms: PlatformIdx,
    pub unusable: BTreeSet<PlatformIdx>,
    /// Granted occupancy windows per platform.
    pub bookings: BTreeMap<PlatformIdx, Vec<(Minutes, Minutes, TrainId)>>,
    pub occupied: BTreeMap<PlatformIdx, TrainId>,
    pub seen_events: BTreeSet<u32>,
}

impl StationAgent {
    pub fn new(net: &RailwayNetwork, id: StationId) -> Self {
        StationAgent {
            id,
            platforms: net.platform_count(id),
            unusable: BTreeSet::new(),
            bookings: BTreeMap::new(),
            occupied: BTreeMap::new(),
            seen_events: BTreeSet::new(),
        }
    }

    fn free(&self, k: PlatformIdx, from: Minutes, until: Minutes, train: TrainId) -> bool {
        !self.unusable.contains(&k)
            && self
                .bookings
                .get(&k)
                .is_none_or(|v| v.iter().all(|&(s, e, j)| j == train || until <= s || e <= from))
    }

    fn agent(&self) -> AgentId {
        AgentId::Station(self.id)
    }
}

/// Processes one inbox. Simultaneous requests are served in priority order;
/// recovery notices are flooded to neighbours once per event.
pub fn station_agent_step(
    agent: &mut StationAgent,
    inbox: &[Message],
    net: &RailwayNetwork,
    trains: &BTreeMap<TrainId, Train>,
    policy: &PriorityPolicy,
) -> Result<Vec<Message>, AgentError> {
    let me = agent.agent();
    let mut out = Vec::new();
    let mut requests = Vec::new();
    for m in inbox {
        check(net, m)?;
        if m.to != me {
            return Err(AgentError::IllegalMessageRoute { from: m.from, to: m.to });
        }
        match &m.payload {
            Payload::Request { .. } => requests.push(m),
            Payload::Recovery { event, .. } => {
                if agent.seen_events.insert(*event) {
                    for n in neighbour_stations(net, agent.id) {
                        if AgentId::Station(n) != m.from {
                            out.push(Message {
                                from: me,
                                to: AgentId::Station(n),
                                at: m.at,
                                kind: MessageKind::RecoveryStatus,
                                payload: m.payload.clone(),
                            });
                        }
                    }
                }
            }
            _ => {}
        }
    }
    if !requests.is_empty() {
        let now = requests[0].at;
        let mut ranked: Vec<(&Train, Minutes, &Message)> = requests
            .iter()
            .filter_map(|m| match &m.payload {
                Payload::Request { train, delay, .. } => trains.get(train).map(|t| (t, *delay, *m)),
                _ => None,
            })
            .collect();
        let context: Vec<(&Train, Minutes)> = ranked.iter().map(|&(t, d, _)| (t, d)).collect();
        ranked.sort_by_key(|&(t, d, _)| policy.contention_key(t, d, now, &context));
        for (t, _, m) in ranked {
            let Payload::Request {
                from, until, preferred, ..
            } = m.payload
            else {
                continue;
            };
            let choice = preferred
                .filter(|&k| agent.free(k, from, until, t.id))
                .or_else(|| (1..=agent.platforms).find(|&k| agent.free(k, from, until, t.id)));
            let (kind, payload) = match choice {
                Some(k) => {
                    agent.bookings.entry(k).or_default().push((from, until, t.id));
                    (MessageKind::ResourceGrant, Payload::Grant { train: t.id, platform: k })
                }
                None => (MessageKind::ResourceDeny, Payload::Deny { train: t.id }),
            };
            out.push(Message {
                from: me,
                to: m.from,
                at: m.at,
                kind,
                payload,
            });
        }
    }
    Ok(out)
}

fn neighbour_stations(net: &RailwayNetwork, s: StationId) -> BTreeSet<StationId> {
    net.neighbors(s).map(|(n, _)| n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainPhase {
    NotStarted,
    AtPlatform(StationId, PlatformIdx),
    OnTrack(TrackId),
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainAgent {
    pub id: TrainId,
    pub itinerary: Vec<ScheduleEntry>,
    pub phase: TrainPhase,
    pub granted: BTreeMap<StationId, PlatformIdx>,
    pub denied: BTreeSet<StationId>,
    /// Stations already asked for the current itinerary.
    pub requested: BTreeSet<StationId>,
    pub known_disasters: BTreeSet<u32>,
    pub recovery: BTreeMap<u32, Minutes>,
}

impl TrainAgent {
    pub fn new(id: TrainId, itinerary: Vec<ScheduleEntry>) -> Self {
        TrainAgent {
            id,
            itinerary,
            phase: TrainPhase::NotStarted,
            granted: BTreeMap::new(),
            denied: BTreeSet::new(),
            requested: BTreeSet::new(),
            known_disasters: BTreeSet::new(),
            recovery: BTreeMap::new(),
        }
    }

    fn next_stop(&self, now: Minutes) -> Option<&ScheduleEntry> {
        self.itinerary
            .iter()
            .find(|e| e.x_at >= now && !self.requested.contains(&e.station))
    }
}

/// Adopts updates, records grants and notices, then asks the next station for
/// a platform once its arrival is within the lookahead.
pub fn train_agent_step(
    agent: &mut TrainAgent,
    inbox: &[Message],
    net: &RailwayNetwork,
    now: Minutes,
) -> Result<Vec<Message>, AgentError> {
    let me = AgentId::Train(agent.id);
    for m in inbox {
        check(net, m)?;
        if m.to != me {
            return Err(AgentError::IllegalMessageRoute { from: m.from, to: m.to });
        }
        match &m.payload {
            Payload::Update { entries } => {
                agent.itinerary = entries.clone();
                agent.requested.retain(|s| entries.iter().any(|e| e.station == *s && e.x_at < now));
                agent.granted.clear();
                agent.denied.clear();
            }
            Payload::Grant { platform, .. } => {
                if let AgentId::Station(s) = m.from {
                    agent.granted.insert(s, *platform);
                }
            }
            Payload::Deny { .. } => {
                if let AgentId::Station(s) = m.from {
                    agent.denied.insert(s);
                }
            }
            Payload::Disaster { event, .. } => {
                agent.known_disasters.insert(*event);
            }
            Payload::Recovery { event, t_r } => {
                agent.recovery.insert(*event, *t_r);
            }
            Payload::Request { .. } => {}
        }
    }
    let mut out = Vec::new();
    if let Some(e) = agent.next_stop(now).cloned() {
        if e.x_at - REQUEST_LOOKAHEAD <= now {
            agent.requested.insert(e.station);
            out.push(Message {
                from: me,
                to: AgentId::Station(e.station),
                at: now,
                kind: MessageKind::ResourceRequest,
                payload: Payload::Request {
                    train: agent.id,
                    delay: (e.x_at - e.o_at).max(0),
                    from: e.x_at,
                    until: e.x_dt.max(e.x_at + 1),
                    preferred: e.platform,
                },
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimAction {
    Arrival { train: TrainId, index: usize, version: u32 },
    Departure { train: TrainId, index: usize, version: u32 },
    /// Wakes a train to issue its next resource request.
    Request { train: TrainId, version: u32 },
    MessageDelivery(Message),
    DisasterOnset(usize),
    RecoveryComplete(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub at: Minutes,
    pub seq: u64,
    pub action: SimAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Distributed,
    Centralized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub mode: Mode,
    pub resched: RescheduleConfig,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            mode: Mode::Distributed,
            resched: RescheduleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub per_train_delay: BTreeMap<TrainId, Minutes>,
    pub total_delay: Minutes,
    pub decisions: Vec<RescheduleDecision>,
    pub message_log: Vec<Message>,
    pub horizon: Minutes,
    pub final_schedule: Schedule,
    /// Trains that received a schedule update, per event.
    pub updated: Vec<BTreeSet<TrainId>>,
    /// Trains affected by each event.
    pub affected: Vec<BTreeSet<TrainId>>,
}

impl SimReport {
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Default)]
struct Queue {
    events: BTreeMap<(Minutes, u64), SimAction>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, at: Minutes, action: SimAction) {
        self.events.insert((at, self.seq), action);
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<SimEvent> {
        let ((at, seq), action) = self.events.pop_first()?;
        Some(SimEvent { at, seq, action })
    }

    /// Removes further deliveries to `to` at the same instant.
    fn drain_deliveries(&mut self, at: Minutes, to: AgentId) -> Vec<Message> {
        let keys: Vec<_> = self
            .events
            .range((at, 0)..(at + 1, 0))
            .filter(|(_, a)| matches!(a, SimAction::MessageDelivery(m) if m.to == to))
            .map(|(k, _)| *k)
            .collect();
        keys.into_iter()
            .filter_map(|k| match self.events.remove(&k) {
                Some(SimAction::MessageDelivery(m)) => Some(m),
                _ => None,
            })
            .collect()
    }
}

struct Sim<'a> {
    net: &'a RailwayNetwork,
    trains: &'a BTreeMap<TrainId, Train>,
    policy: &'a PriorityPolicy,
    queue: Queue,
    schedule: Schedule,
    versions: BTreeMap<TrainId, u32>,
    stations: BTreeMap<StationId, StationAgent>,
    agents: BTreeMap<TrainId, TrainAgent>,
    log: Vec<Message>,
}

impl Sim<'_> {
    fn enqueue_movements(&mut self, j: TrainId, from: Minutes) {
        let v = self.versions[&j];
        let itin = self.schedule.itineraries[&j].clone();
        for (i, e) in itin.iter().enumerate() {
            if e.x_at >= from {
                self.queue.push(e.x_at, SimAction::Arrival { train: j, index: i, version: v });
            }
            if e.x_dt >= from && i + 1 < itin.len() {
                self.queue.push(e.x_dt, SimAction::Departure { train: j, index: i, version: v });
            }
        }
        if let Some(e) = itin.iter().find(|e| e.x_at >= from) {
            let wake = (e.x_at - REQUEST_LOOKAHEAD).max(from);
            self.queue.push(wake, SimAction::Request { train: j, version: v });
        }
    }

    fn send(&mut self, m: Message) -> Result<(), AgentError> {
        check(self.net, &m)?;
        self.queue.push(m.at, SimAction::MessageDelivery(m));
        Ok(())
    }

    fn step_train(&mut self, j: TrainId, inbox: &[Message], now: Minutes) -> Result<(), AgentError> {
        let agent = self.agents.get_mut(&j).expect("train agent exists");
        let out = train_agent_step(agent, inbox, self.net, now)?;
        for m in out {
            self.send(m)?;
        }
        Ok(())
    }
}

/// Runs the agents over the timetable, rescheduling at every disaster onset.
pub fn run_simulation(
    net: &RailwayNetwork,
    timetable: &Timetable,
    events: &[DisasterEvent],
    policy: &PriorityPolicy,
    seed: u64,
    horizon: Minutes,
    opts: &SimOptions,
) -> Result<SimReport, AgentError> {
    let mode = opts.mode;
    let mut schedule = timetable.schedule.clone();
    assign_platforms(net, &mut schedule);
    let base = Timetable {
        trains: timetable.trains.clone(),
        schedule: schedule.clone(),
    };
    let mut sim = Sim {
        net,
        trains: &timetable.trains,
        policy,
        queue: Queue::default(),
        versions: schedule.itineraries.keys().map(|&j| (j, 0)).collect(),
        stations: net.stations().map(|s| (s.id, StationAgent::new(net, s.id))).collect(),
        agents: schedule
            .itineraries
            .iter()
            .map(|(&j, it)| (j, TrainAgent::new(j, it.clone())))
            .collect(),
        schedule,
        log: Vec::new(),
    };
    let trains: Vec<TrainId> = sim.schedule.itineraries.keys().copied().collect();
    for &j in &trains {
        sim.enqueue_movements(j, Minutes::MIN);
    }
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by_key(|&i| (events[i].t_d, i));
    for &i in &order {
        events[i].validate(net)?;
        sim.queue.push(events[i].t_d, SimAction::DisasterOnset(i));
    }

    let mut decisions = Vec::new();
    let mut resolved: BTreeMap<usize, ResolvedEvent> = BTreeMap::new();
    let mut updated = Vec::new();
    let mut affected_log = Vec::new();
    let cfg = RescheduleConfig {
        horizon: opts.resched.horizon.min(horizon),
        ..opts.resched.clone()
    };

    while let Some(ev) = sim.queue.pop() {
        let now = ev.at;
        match ev.action {
            SimAction::Arrival { train, index, version } => {
                if sim.versions[&train] != version {
                    continue;
                }
                let e = sim.schedule.itineraries[&train][index].clone();
                let k = e.platform.unwrap_or(1);
                if let Some(st) = sim.stations.get_mut(&e.station) {
                    st.occupied.insert(k, train);
                }
                let last = index + 1 == sim.schedule.itineraries[&train].len();
                sim.agents.get_mut(&train).unwrap().phase = if last {
                    TrainPhase::Finished
                } else {
                    TrainPhase::AtPlatform(e.station, k)
                };
            }
            SimAction::Departure { train, index, version } => {
                if sim.versions[&train] != version {
                    continue;
                }
                let e = sim.schedule.itineraries[&train][index].clone();
                if let Some(st) = sim.stations.get_mut(&e.station) {
                    st.occupied.retain(|_, j| *j != train);
                }
                if let Some(l) = e.next_track {
                    sim.agents.get_mut(&train).unwrap().phase = TrainPhase::OnTrack(l);
                }
                if let Some(n) = sim.schedule.itineraries[&train].get(index + 1) {
                    let wake = (n.x_at - REQUEST_LOOKAHEAD).max(now);
                    sim.queue.push(wake, SimAction::Request { train, version });
                }
            }
            SimAction::Request { train, version } => {
                if sim.versions[&train] == version {
                    sim.step_train(train, &[], now)?;
                }
            }
            SimAction::MessageDelivery(m) => {
                let mut inbox = vec![m.clone()];
                inbox.extend(sim.queue.drain_deliveries(now, m.to));
                sim.log.extend(inbox.iter().cloned());
                match m.to {
                    AgentId::Station(s) => {
                        let agent = sim.stations.get_mut(&s).expect("station agent exists");
                        let out = station_agent_step(agent, &inbox, net, sim.trains, sim.policy)?;
                        for o in out {
                            sim.send(o)?;
                        }
                    }
                    AgentId::Train(j) => sim.step_train(j, &inbox, now)?,
                }
            }
            SimAction::DisasterOnset(i) => {
                let event = &events[i];
                let event_seed = seed.wrapping_add(i as u64);
                let current = Timetable {
                    trains: timetable.trains.clone(),
                    schedule: sim.schedule.clone(),
                };
                let r = ResolvedEvent::resolve(event, event_seed)?;
                let affected = affected_trains(&sim.schedule, &r);
                let result = match mode {
                    Mode::Distributed => resched::reschedule(net, &current, event, policy, event_seed, &cfg)?,
                    Mode::Centralized => {
                        resched::centralized_baseline(net, &current, event, policy, event_seed, &cfg)?
                    }
                };
                let mut notified: BTreeSet<StationId> = event.blocked_stations();
                for &l in &event.blocked_tracks {
                    if let Some(seg) = net.track(l) {
                        notified.insert(seg.endpoints.0);
                        notified.insert(seg.endpoints.1);
                    }
                }
                let payload = Payload::Disaster {
                    event: i as u32,
                    blocked_platforms: event.blocked_platforms.iter().copied().collect(),
                    blocked_tracks: event.blocked_tracks.iter().copied().collect(),
                };
                for &s in &notified {
                    if let Some(st) = sim.stations.get_mut(&s) {
                        st.unusable.extend(
                            event.blocked_platforms.iter().filter(|p| p.0 == s).map(|p| p.1),
                        );
                    }
                    let from = AgentId::Station(s);
                    let mut targets: BTreeSet<AgentId> =
                        net.neighbors(s).map(|(n, _)| AgentId::Station(n)).collect();
                    for (&j, itin) in &sim.schedule.itineraries {
                        if itin.iter().any(|e| e.station == s && e.x_dt >= now) {
                            targets.insert(AgentId::Train(j));
                        }
                    }
                    for to in targets {
                        sim.send(Message {
                            from,
                            to,
                            at: now,
                            kind: MessageKind::DisasterNotice,
                            payload: payload.clone(),
                        })?;
                    }
                }
                let when = match mode {
                    Mode::Distributed => now,
                    Mode::Centralized => now + cfg.hierarchy_latency(),
                };
                let mut got = BTreeSet::new();
                for d in &result.decisions {
                    let j = d.train;
                    got.insert(j);
                    let old = &sim.schedule.itineraries[&j];
                    let via = match train_status(old, now) {
                        TrainStatus::NotStarted => old[0].station,
                        TrainStatus::AtPlatform(x) => old[x].station,
                        TrainStatus::OnTrack(x) => old[x + 1].station,
                        TrainStatus::Finished => old[old.len() - 1].station,
                    };
                    sim.send(Message {
                        from: AgentId::Station(via),
                        to: AgentId::Train(j),
                        at: when,
                        kind: MessageKind::ScheduleUpdate,
                        payload: Payload::Update {
                            entries: result.new_schedule.itineraries[&j].clone(),
                        },
                    })?;
                }
                for st in sim.stations.values_mut() {
                    for v in st.bookings.values_mut() {
                        v.retain(|b| !got.contains(&b.2));
                    }
                }
                for (&j, itin) in &result.new_schedule.itineraries {
                    if sim.schedule.itineraries[&j] != *itin {
                        *sim.versions.get_mut(&j).unwrap() += 1;
                        sim.schedule.itineraries.insert(j, itin.clone());
                        sim.enqueue_movements(j, now);
                    }
                }
                sim.queue.push(r.t_r, SimAction::RecoveryComplete(i));
                resolved.insert(i, r);
                decisions.extend(result.decisions);
                updated.push(got);
                affected_log.push(affected);
            }
            SimAction::RecoveryComplete(i) => {
                let event = &events[i];
                let t_r = resolved[&i].t_r;
                let mut origins: BTreeSet<StationId> = event.blocked_stations();
                for &l in &event.blocked_tracks {
                    if let Some(seg) = net.track(l) {
                        origins.insert(seg.endpoints.0);
                    }
                }
                for s in origins {
                    if let Some(st) = sim.stations.get_mut(&s) {
                        for &(_, k) in event.blocked_platforms.iter().filter(|p| p.0 == s) {
                            st.unusable.remove(&k);
                        }
                    }
                    // a self-addressed notice starts the flood at the origin station
                    let start = Message {
                        from: AgentId::Station(s),
                        to: AgentId::Station(s),
                        at: now,
                        kind: MessageKind::RecoveryStatus,
                        payload: Payload::Recovery { event: i as u32, t_r },
                    };
                    let agent = sim.stations.get_mut(&s).expect("station agent exists");
                    let out = station_agent_step_origin(agent, start, net)?;
                    for o in out {
                        sim.send(o)?;
                    }
                }
            }
        }
    }

    if let Some(t) = sim
        .schedule
        .entries()
        .map(|e| e.x_at.max(e.x_dt))
        .filter(|&t| t > horizon)
        .max()
    {
        return Err(AgentError::HorizonExceeded(t));
    }
    let breakdown = resched::total_delay(&base.schedule, &sim.schedule)?;
    Ok(SimReport {
        per_train_delay: breakdown.per_train,
        total_delay: breakdown.total,
        decisions,
        message_log: sim.log,
        horizon,
        final_schedule: sim.schedule,
        updated,
        affected: affected_log,
    })
}

/// The origin station records the recovery and notifies every neighbour.
fn station_agent_step_origin(
    agent: &mut StationAgent,
    notice: Message,
    net: &RailwayNetwork,
) -> Result<Vec<Message>, AgentError> {
    let Payload::Recovery { event, .. } = notice.payload else {
        return Ok(Vec::new());
    };
    if !agent.seen_events.insert(event) {
        return Ok(Vec::new());
    }
    Ok(neighbour_stations(net, agent.id)
        .into_iter()
        .map(|n| Message {
            from: notice.from,
            to: AgentId::Station(n),
            at: notice.at,
            kind: MessageKind::RecoveryStatus,
            payload: notice.payload.clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Category;
    use crate::network::{build_network, Station, TrackSegment};

    fn line() -> RailwayNetwork {
        build_network(
            vec![Station::new(1, "A", 1), Station::new(2, "B", 2), Station::new(3, "C", 1)],
            vec![TrackSegment::general(1, 1, 2, 10), TrackSegment::general(2, 2, 3, 10)],
        )
        .unwrap()
    }

    fn request(j: u32, at: Minutes) -> Message {
        Message {
            from: AgentId::Train(TrainId(j)),
            to: AgentId::Station(StationId(3)),
            at,
            kind: MessageKind::ResourceRequest,
            payload: Payload::Request {
                train: TrainId(j),
                delay: 0,
                from: at + 10,
                until: at + 15,
                preferred: None,
            },
        }
    }

    #[test]
    fn simultaneous_requests_served_by_rank() {
        let net = line();
        let trains = BTreeMap::from([
            (TrainId(1), Train::new(1, "L", Category::Local)),
            (TrainId(2), Train::new(2, "P", Category::Premium)),
        ]);
        let mut st = StationAgent::new(&net, StationId(3));
        let out = station_agent_step(
            &mut st,
            &[request(1, 700), request(2, 700)],
            &net,
            &trains,
            &PriorityPolicy::default(),
        )
        .unwrap();
        let grant = out.iter().find(|m| m.kind == MessageKind::ResourceGrant).unwrap();
        let deny = out.iter().find(|m| m.kind == MessageKind::ResourceDeny).unwrap();
        assert_eq!(grant.to, AgentId::Train(TrainId(2)));
        assert_eq!(deny.to, AgentId::Train(TrainId(1)));
    }

    #[test]
    fn recovery_forwarded_once() {
        let net = line();
        let mut st = StationAgent::new(&net, StationId(2));
        let notice = Message {
            from: AgentId::Station(StationId(1)),
            to: AgentId::Station(StationId(2)),
            at: 640,
            kind: MessageKind::RecoveryStatus,
            payload: Payload::Recovery { event: 0, t_r: 640 },
        };
        let trains = BTreeMap::new();
        let p = PriorityPolicy::default();
        let out = station_agent_step(&mut st, std::slice::from_ref(&notice), &net, &trains, &p).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to, AgentId::Station(StationId(3)));
        assert!(station_agent_step(&mut st, &[notice], &net, &trains, &p).unwrap().is_empty());
    }

    #[test]
    fn non_neighbour_station_rejected() {
        let net = line();
        let mut st = StationAgent::new(&net, StationId(3));
        let m = Message {
            from: AgentId::Station(StationId(1)),
            to: AgentId::Station(StationId(3)),
            at: 0,
            kind: MessageKind::RecoveryStatus,
            payload: Payload::Recovery { event: 0, t_r: 0 },
        };
        let err = station_agent_step(&mut st, &[m], &net, &BTreeMap::new(), &PriorityPolicy::default());
        assert!(matches!(err, Err(AgentError::IllegalMessageRoute { .. })));
    }

    fn itin(stations: &[u32]) -> Vec<ScheduleEntry> {
        stations
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let t = 600 + 20 * i as Minutes;
                ScheduleEntry::planned(TrainId(1), StationId(s), t, t + 5, None)
            })
            .collect()
    }

    #[test]
    fn train_requests_within_lookahead() {
        let net = line();
        let mut a = TrainAgent::new(TrainId(1), itin(&[1, 2, 3]));
        a.requested.insert(StationId(1));
        assert!(train_agent_step(&mut a, &[], &net, 605).unwrap().is_empty());
        let out = train_agent_step(&mut a, &[], &net, 610).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, MessageKind::ResourceRequest);
        assert_eq!(out[0].to, AgentId::Station(StationId(2)));
    }

    #[test]
    fn adopted_route_drives_requests() {
        let net = build_network(
            vec![
                Station::new(1, "A", 1),
                Station::new(2, "B", 1),
                Station::new(3, "C", 1),
                Station::new(4, "D", 1),
            ],
            vec![
                TrackSegment::general(1, 1, 2, 10),
                TrackSegment::general(2, 2, 4, 10),
                TrackSegment::general(3, 1, 3, 10),
                TrackSegment::general(4, 3, 4, 10),
            ],
        )
        .unwrap();
        let mut a = TrainAgent::new(TrainId(1), itin(&[1, 2, 4]));
        let update = Message {
            from: AgentId::Station(StationId(1)),
            to: AgentId::Train(TrainId(1)),
            at: 601,
            kind: MessageKind::ScheduleUpdate,
            payload: Payload::Update { entries: itin(&[1, 3, 4]) },
        };
        a.requested.insert(StationId(1));
        let out = train_agent_step(&mut a, &[update], &net, 612).unwrap();
        assert_eq!(out[0].to, AgentId::Station(StationId(3)));
    }

    #[test]
    fn train_cannot_message_train() {
        let net = line();
        let mut a = TrainAgent::new(TrainId(1), itin(&[1, 2]));
        let m = Message {
            from: AgentId::Train(TrainId(2)),
            to: AgentId::Train(TrainId(1)),
            at: 0,
            kind: MessageKind::ResourceRequest,
            payload: Payload::Deny { train: TrainId(1) },
        };
        assert_eq!(
            train_agent_step(&mut a, &[m], &net, 0).unwrap_err(),
            AgentError::IllegalMessageRoute {
                from: AgentId::Train(TrainId(2)),
                to: AgentId::Train(TrainId(1))
            }
        );
    }
}
