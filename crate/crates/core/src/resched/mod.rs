//! Disruption handling: recovery modelling, case-based rescheduling and the
//! total-delay objective.

mod cases;
mod dispatch;
mod state;

pub use cases::{handle_case1, handle_case2, handle_case3, CaseContext};
pub use state::{affected_trains, train_status, TrainStatus};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{PriorityPolicy, Violation};
use crate::model::{Minutes, PlatformIdx, Schedule, ScheduleEntry, StationId, Timetable, TrackId, TrainId};
use crate::network::RailwayNetwork;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RescheduleError {
    #[error("recovery interval [{0}, {1}] is invalid")]
    InvalidInterval(Minutes, Minutes),
    #[error("invalid disaster event: {0}")]
    InvalidEvent(String),
    #[error("no feasible completion found after recovery")]
    InfeasibleAfterRecovery,
    #[error("train {0} is not on a track approaching the disrupted station")]
    TrainNotOnApproach(TrainId),
    #[error("case precondition not satisfied: {0}")]
    PreconditionUnsatisfied(String),
    #[error("schedules differ in trains or terminal stations")]
    ScheduleMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Density {
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryModel {
    pub tau1: Minutes,
    pub tau2: Minutes,
    pub density: Density,
}

impl RecoveryModel {
    pub fn uniform(tau1: Minutes, tau2: Minutes) -> Self {
        RecoveryModel {
            tau1,
            tau2,
            density: Density::Uniform,
        }
    }

    pub fn expected(&self) -> Minutes {
        match self.density {
            Density::Uniform => (self.tau1 + self.tau2).div_euclid(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisasterEvent {
    pub t_d: Minutes,
    pub blocked_platforms: BTreeSet<(StationId, PlatformIdx)>,
    pub blocked_tracks: BTreeSet<TrackId>,
    pub recovery: RecoveryModel,
}

impl DisasterEvent {
    pub fn blocked_stations(&self) -> BTreeSet<StationId> {
        self.blocked_platforms.iter().map(|&(s, _)| s).collect()
    }

    pub fn validate(&self, net: &RailwayNetwork) -> Result<(), RescheduleError> {
        if self.blocked_platforms.is_empty() && self.blocked_tracks.is_empty() {
            return Err(RescheduleError::InvalidEvent("nothing is blocked".into()));
        }
        if self.recovery.tau1 > self.recovery.tau2 || self.recovery.tau1 < 0 {
            return Err(RescheduleError::InvalidInterval(
                self.recovery.tau1,
                self.recovery.tau2,
            ));
        }
        for &(s, k) in &self.blocked_platforms {
            let p = net
                .station(s)
                .ok_or_else(|| RescheduleError::InvalidEvent(format!("unknown station {s}")))?
                .platform_count;
            if k < 1 || k > p {
                return Err(RescheduleError::InvalidEvent(format!("no platform {k} at {s}")));
            }
        }
        for &l in &self.blocked_tracks {
            if net.track(l).is_none() {
                return Err(RescheduleError::InvalidEvent(format!("unknown track {l}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DwellPolicy {
    /// Departure may move towards `arrival + floor`, never before the original.
    Compressed,
    /// The original dwell is kept in full.
    Retained,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RescheduleConfig {
    /// Minimum separation between consecutive entries onto one track.
    pub headway: Minutes,
    /// Dwell floor at stopping stations when compressing.
    pub min_dwell: Minutes,
    /// Alternative routes tried per train when rerouting.
    pub max_routes: usize,
    pub latency_levels: u32,
    pub latency_per_level: Minutes,
    /// Planned movements must finish by this time.
    pub horizon: Minutes,
}

impl Default for RescheduleConfig {
    fn default() -> Self {
        RescheduleConfig {
            headway: 5,
            min_dwell: 1,
            max_routes: 4,
            latency_levels: 2,
            latency_per_level: 3,
            horizon: Minutes::MAX / 8,
        }
    }
}

impl RescheduleConfig {
    pub fn hierarchy_latency(&self) -> Minutes {
        self.latency_levels as Minutes * self.latency_per_level
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DecisionKind {
    Retime,
    Reorder,
    Reroute,
    NoChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// Admitted, rerouted onward.
    C111,
    /// Admitted, waits at the station for recovery.
    C112,
    /// Held on the track.
    C12,
    /// At the disrupted station; departures reordered.
    C2,
    /// Neighbouring station; kept or retimed.
    C31,
    /// Neighbouring station behind a blocked track; parallel track or retimed.
    C32,
}

impl CaseLabel {
    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::C111 => "1.1.1",
            CaseLabel::C112 => "1.1.2",
            CaseLabel::C12 => "1.2",
            CaseLabel::C2 => "2",
            CaseLabel::C31 => "3.1",
            CaseLabel::C32 => "3.2",
        }
    }

    /// Decision kinds each case may take.
    pub fn allowed_kinds(self) -> &'static [DecisionKind] {
        match self {
            CaseLabel::C111 => &[DecisionKind::Reroute],
            CaseLabel::C112 | CaseLabel::C12 => &[DecisionKind::Retime],
            CaseLabel::C2 => &[DecisionKind::Reorder],
            CaseLabel::C31 => &[DecisionKind::NoChange, DecisionKind::Retime],
            CaseLabel::C32 => &[DecisionKind::Reroute, DecisionKind::Retime],
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RescheduleDecision {
    pub train: TrainId,
    pub kind: DecisionKind,
    pub case: CaseLabel,
    /// Terminal arrival delay after the decision.
    pub delay: Minutes,
    /// 1-based departure position among the trains reordered at one station.
    pub order_position: Option<usize>,
    /// Stations of the new route, set for reroutes.
    pub new_route: Option<Vec<StationId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    CaseBased,
    WaitInPlace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RescheduleResult {
    pub decisions: Vec<RescheduleDecision>,
    pub new_schedule: Schedule,
    pub per_train_delay: BTreeMap<TrainId, Minutes>,
    pub total_delay: Minutes,
    pub tau_r: Minutes,
    pub t_r: Minutes,
    pub buffer: Minutes,
    pub strategy: Strategy,
}

impl RescheduleResult {
    pub fn decision(&self, train: TrainId) -> Option<&RescheduleDecision> {
        self.decisions.iter().find(|d| d.train == train)
    }
}

/// Integer recovery time drawn from the model's density; the same seed always
/// yields the same value.
pub fn sample_recovery(model: &RecoveryModel, seed: u64) -> Result<Minutes, RescheduleError> {
    if model.tau1 > model.tau2 {
        return Err(RescheduleError::InvalidInterval(model.tau1, model.tau2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = match model.density {
        Density::Uniform => rng.gen_range(model.tau1..=model.tau2),
    };
    Ok(v.clamp(model.tau1, model.tau2))
}

/// Absolute buffer time: onset plus the expected recovery duration.
pub fn buffer_time(event: &DisasterEvent) -> Minutes {
    event.t_d + event.recovery.expected()
}

/// Retimes one stop after an arrival delay, compressing dwell down to `min_dwell`.
pub fn minimize_station_delay(
    entry: &ScheduleEntry,
    incurred_arrival_delay: Minutes,
    min_dwell: Minutes,
) -> ScheduleEntry {
    let mut e = entry.clone();
    e.x_at = e.o_at + incurred_arrival_delay.max(0);
    e.x_dt = e.o_dt.max(e.x_at + min_dwell.max(0));
    e
}

/// Sets each arrival to the preceding departure plus the planned journey time.
pub fn minimize_track_delay(entries: &mut [ScheduleEntry], journeys: &[Minutes]) {
    for (i, &j) in journeys.iter().enumerate() {
        if i + 1 >= entries.len() {
            break;
        }
        entries[i + 1].x_at = entries[i].x_dt + j;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub per_train: BTreeMap<TrainId, Minutes>,
    /// Delay gained while at platforms (including a late start).
    pub station: BTreeMap<TrainId, Minutes>,
    /// Delay gained between stations.
    pub track: BTreeMap<TrainId, Minutes>,
    pub total: Minutes,
}

/// Sum over trains of the terminal arrival delay of `result` against `original`.
pub fn total_delay(original: &Schedule, result: &Schedule) -> Result<DelayBreakdown, RescheduleError> {
    if original.itineraries.len() != result.itineraries.len() {
        return Err(RescheduleError::ScheduleMismatch);
    }
    let mut out = DelayBreakdown::default();
    for (train, orig) in &original.itineraries {
        let res = result
            .itineraries
            .get(train)
            .ok_or(RescheduleError::ScheduleMismatch)?;
        let (Some(o_last), Some(x_last)) = (orig.last(), res.last()) else {
            if orig.is_empty() && res.is_empty() {
                continue;
            }
            return Err(RescheduleError::ScheduleMismatch);
        };
        if o_last.station != x_last.station || orig[0].station != res[0].station {
            return Err(RescheduleError::ScheduleMismatch);
        }
        let delta = x_last.x_at - o_last.o_at;
        let mut station = res[0].x_at - res[0].o_at;
        let mut track = 0;
        for (i, e) in res.iter().enumerate() {
            if i + 1 < res.len() {
                station += (e.x_dt - e.x_at) - (e.o_dt - e.o_at);
                let n = &res[i + 1];
                track += (n.x_at - e.x_dt) - (n.o_at - e.o_dt);
            }
        }
        station += x_last.o_at - o_last.o_at;
        out.per_train.insert(*train, delta);
        out.station.insert(*train, station);
        out.track.insert(*train, track);
        out.total += delta;
    }
    Ok(out)
}

/// An event with its sampled recovery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedEvent {
    pub t_d: Minutes,
    pub tau_r: Minutes,
    pub t_r: Minutes,
    pub buffer: Minutes,
    pub blocked_platforms: BTreeSet<(StationId, PlatformIdx)>,
    pub blocked_tracks: BTreeSet<TrackId>,
}

impl ResolvedEvent {
    pub fn resolve(event: &DisasterEvent, seed: u64) -> Result<Self, RescheduleError> {
        let tau_r = sample_recovery(&event.recovery, seed)?;
        Ok(ResolvedEvent {
            t_d: event.t_d,
            tau_r,
            t_r: event.t_d + tau_r,
            buffer: buffer_time(event),
            blocked_platforms: event.blocked_platforms.clone(),
            blocked_tracks: event.blocked_tracks.clone(),
        })
    }

    pub fn blocked_stations(&self) -> BTreeSet<StationId> {
        self.blocked_platforms.iter().map(|&(s, _)| s).collect()
    }

    /// Trains reaching a blocked resource before this instant are affected.
    pub fn window_end(&self) -> Minutes {
        self.buffer.max(self.t_r)
    }
}

/// Occupancies of blocked resources during the blockage.
pub fn blockage_violations(schedule: &Schedule, event: &ResolvedEvent) -> Vec<Violation> {
    use crate::constraints::{Location, OccupancyTimeline, Resource, Rule};
    let timeline = OccupancyTimeline::from_schedule(schedule);
    let mut out = Vec::new();
    for s in &timeline.spans {
        let (hit, loc) = match s.resource {
            Resource::Platform(i, k) => (
                event.blocked_platforms.contains(&(i, k)),
                Location::Platform(i, k),
            ),
            Resource::Track(_, l) => (event.blocked_tracks.contains(&l), Location::Track(l)),
            Resource::None => (false, Location::Station(StationId(0))),
        };
        // a train already there at onset, arriving on the onset minute
        // included, sits the blockage out in place
        if hit && s.start < event.t_r && s.start > event.t_d {
            out.push(Violation::new(Rule::BlockedResource, s.train, loc, s.start));
        }
    }
    out.sort();
    out
}

struct Planned {
    schedule: Schedule,
    total: Minutes,
}

fn plan_with(
    net: &RailwayNetwork,
    timetable: &Timetable,
    ev: &ResolvedEvent,
    policy: &PriorityPolicy,
    cfg: &RescheduleConfig,
    opts: &dispatch::DispatchOptions,
) -> Result<Planned, RescheduleError> {
    let input = dispatch::DispatchInput {
        net,
        trains: &timetable.trains,
        schedule: &timetable.schedule,
        event: ev,
        cfg,
    };
    let order = dispatch::priority_order(&input, policy);
    let schedule = dispatch::dispatch(&input, opts, order)?;
    let total = total_delay(&timetable.schedule, &schedule)?.total;
    Ok(Planned { schedule, total })
}

fn run_portfolio(
    net: &RailwayNetwork,
    timetable: &Timetable,
    ev: &ResolvedEvent,
    policy: &PriorityPolicy,
    cfg: &RescheduleConfig,
    held: BTreeSet<TrainId>,
    hold_until: Minutes,
) -> Result<RescheduleResult, RescheduleError> {
    let case_based = dispatch::DispatchOptions {
        allow_reroute: true,
        dwell: DwellPolicy::Compressed,
        held: held.clone(),
        hold_until,
    };
    let waiting = dispatch::DispatchOptions {
        allow_reroute: false,
        dwell: DwellPolicy::Retained,
        held,
        hold_until,
    };
    let a = plan_with(net, timetable, ev, policy, cfg, &case_based);
    let b = plan_with(net, timetable, ev, policy, cfg, &waiting);
    let (chosen, strategy) = match (a, b) {
        (Ok(a), Ok(b)) if b.total < a.total => (b, Strategy::WaitInPlace),
        (Ok(a), _) => (a, Strategy::CaseBased),
        (Err(_), Ok(b)) => (b, Strategy::WaitInPlace),
        (Err(e), Err(_)) => return Err(e),
    };
    finish(net, timetable, ev, policy, chosen.schedule, strategy)
}

fn finish(
    net: &RailwayNetwork,
    timetable: &Timetable,
    ev: &ResolvedEvent,
    policy: &PriorityPolicy,
    schedule: Schedule,
    strategy: Strategy,
) -> Result<RescheduleResult, RescheduleError> {
    let breakdown = total_delay(&timetable.schedule, &schedule)?;
    let ctx = CaseContext {
        net,
        trains: &timetable.trains,
        before: &timetable.schedule,
        after: &schedule,
        event: ev,
        policy,
    };
    let decisions = cases::label_all(&ctx)?;
    Ok(RescheduleResult {
        decisions,
        per_train_delay: breakdown.per_train,
        total_delay: breakdown.total,
        new_schedule: schedule,
        tau_r: ev.tau_r,
        t_r: ev.t_r,
        buffer: ev.buffer,
        strategy,
    })
}

/// Case-based rescheduling of `timetable` after `event`.
///
/// Two complete plans are built with the same priority discipline: the
/// case-based plan (rerouting and dwell compression allowed) and the
/// wait-in-place plan (original route and dwell). The one with the smaller
/// total delay is kept, the case-based plan on ties.
pub fn reschedule(
    net: &RailwayNetwork,
    timetable: &Timetable,
    event: &DisasterEvent,
    policy: &PriorityPolicy,
    seed: u64,
    cfg: &RescheduleConfig,
) -> Result<RescheduleResult, RescheduleError> {
    event.validate(net)?;
    let ev = ResolvedEvent::resolve(event, seed)?;
    run_portfolio(net, timetable, &ev, policy, cfg, BTreeSet::new(), Minutes::MIN)
}

/// Wait-in-place plan only: original routes and dwell times, trains wait for
/// resources in priority order.
pub fn wait_in_place_baseline(
    net: &RailwayNetwork,
    timetable: &Timetable,
    event: &DisasterEvent,
    policy: &PriorityPolicy,
    seed: u64,
    cfg: &RescheduleConfig,
) -> Result<RescheduleResult, RescheduleError> {
    event.validate(net)?;
    let ev = ResolvedEvent::resolve(event, seed)?;
    let opts = dispatch::DispatchOptions {
        allow_reroute: false,
        dwell: DwellPolicy::Retained,
        held: BTreeSet::new(),
        hold_until: Minutes::MIN,
    };
    let planned = plan_with(net, timetable, &ev, policy, cfg, &opts)?;
    finish(net, timetable, &ev, policy, planned.schedule, Strategy::WaitInPlace)
}

/// Centralised comparison: affected trains may not depart until the decision
/// has travelled up and down the hierarchy, `t_D + levels × latency`.
pub fn centralized_baseline(
    net: &RailwayNetwork,
    timetable: &Timetable,
    event: &DisasterEvent,
    policy: &PriorityPolicy,
    seed: u64,
    cfg: &RescheduleConfig,
) -> Result<RescheduleResult, RescheduleError> {
    event.validate(net)?;
    let ev = ResolvedEvent::resolve(event, seed)?;
    let held = affected_trains(&timetable.schedule, &ev);
    let hold_until = ev.t_d + cfg.hierarchy_latency();
    run_portfolio(net, timetable, &ev, policy, cfg, held, hold_until)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_recovery() {
        let m = RecoveryModel::uniform(20, 20);
        for seed in 0..20 {
            assert_eq!(sample_recovery(&m, seed).unwrap(), 20);
        }
        assert_eq!(
            sample_recovery(&RecoveryModel::uniform(5, 4), 1).unwrap_err(),
            RescheduleError::InvalidInterval(5, 4)
        );
    }

    #[test]
    fn recovery_is_seeded() {
        let m = RecoveryModel::uniform(10, 50);
        assert_eq!(sample_recovery(&m, 7).unwrap(), sample_recovery(&m, 7).unwrap());
    }

    fn event(t_d: Minutes, a: Minutes, b: Minutes) -> DisasterEvent {
        DisasterEvent {
            t_d,
            blocked_platforms: BTreeSet::from([(StationId(1), 1)]),
            blocked_tracks: BTreeSet::new(),
            recovery: RecoveryModel::uniform(a, b),
        }
    }

    #[test]
    fn buffer_examples() {
        assert_eq!(buffer_time(&event(360, 10, 50)), 390);
        assert_eq!(buffer_time(&event(360, 20, 20)), 380);
    }

    #[test]
    fn station_delay_examples() {
        let e = ScheduleEntry::planned(TrainId(1), StationId(1), 600, 610, None);
        let a = minimize_station_delay(&e, 6, 2);
        assert_eq!((a.x_at, a.x_dt, a.x_dwell()), (606, 610, 4));
        assert_eq!(minimize_station_delay(&e, 0, 2), e);
        let c = minimize_station_delay(&e, 15, 2);
        assert_eq!((c.x_at, c.x_dt), (615, 617));
    }

    #[test]
    fn track_delay_examples() {
        let mk = |s, at, dt| ScheduleEntry::planned(TrainId(1), StationId(s), at, dt, None);
        let mut v = vec![mk(1, 590, 600), mk(2, 0, 0)];
        minimize_track_delay(&mut v, &[30]);
        assert_eq!(v[1].x_at, 630);
        v[0].x_dt = 610;
        minimize_track_delay(&mut v, &[30]);
        assert_eq!(v[1].x_at, 640);
        let mut r = vec![mk(1, 590, 600), mk(2, 0, 620), mk(3, 0, 0)];
        r[1].x_dt = 620;
        minimize_track_delay(&mut r, &[20, 25]);
        assert_eq!(r[2].x_at - r[0].x_dt, 45);
    }

    #[test]
    fn total_delay_sums_terminal_delays() {
        let mk = |j, s, at, dt| ScheduleEntry::planned(TrainId(j), StationId(s), at, dt, None);
        let orig = Schedule::from_entries(vec![
            mk(1, 1, 590, 600),
            mk(1, 2, 630, 630),
            mk(2, 1, 700, 705),
            mk(2, 2, 720, 725),
        ]);
        assert_eq!(total_delay(&orig, &orig).unwrap().total, 0);
        let mut res = orig.clone();
        res.itineraries.get_mut(&TrainId(1)).unwrap()[1].x_at = 645;
        res.itineraries.get_mut(&TrainId(2)).unwrap()[1].x_at = 729;
        let b = total_delay(&orig, &res).unwrap();
        assert_eq!(b.total, 24);
        for j in [TrainId(1), TrainId(2)] {
            assert_eq!(b.station[&j] + b.track[&j], b.per_train[&j]);
        }
        let mut short = orig.clone();
        short.itineraries.remove(&TrainId(2));
        assert_eq!(total_delay(&orig, &short).unwrap_err(), RescheduleError::ScheduleMismatch);
    }
}
