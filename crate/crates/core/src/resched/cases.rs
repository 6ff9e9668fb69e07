use std::collections::{BTreeMap, BTreeSet};

use crate::constraints::PriorityPolicy;
use crate::model::{Minutes, Schedule, ScheduleEntry, StationId, Train, TrainId};
use crate::network::RailwayNetwork;

use super::state::{affected_trains, train_status, TrainStatus};
use super::{CaseLabel, DecisionKind, RescheduleDecision, RescheduleError, ResolvedEvent};

/// The plan in force before an event and the plan realized after it.
pub struct CaseContext<'a> {
    pub net: &'a RailwayNetwork,
    pub trains: &'a BTreeMap<TrainId, Train>,
    pub before: &'a Schedule,
    pub after: &'a Schedule,
    pub event: &'a ResolvedEvent,
    pub policy: &'a PriorityPolicy,
}

impl CaseContext<'_> {
    fn itins(&self, j: TrainId) -> Result<(&[ScheduleEntry], &[ScheduleEntry]), RescheduleError> {
        let b = self.before.itinerary(j).ok_or(RescheduleError::ScheduleMismatch)?;
        let a = self.after.itinerary(j).ok_or(RescheduleError::ScheduleMismatch)?;
        if b.is_empty() || a.is_empty() {
            return Err(RescheduleError::ScheduleMismatch);
        }
        Ok((b, a))
    }

    fn terminal_delay(&self, j: TrainId) -> Result<Minutes, RescheduleError> {
        let (b, a) = self.itins(j)?;
        Ok(a[a.len() - 1].x_at - b[b.len() - 1].o_at)
    }

    fn decision(
        &self,
        j: TrainId,
        kind: DecisionKind,
        case: CaseLabel,
    ) -> Result<RescheduleDecision, RescheduleError> {
        let (_, a) = self.itins(j)?;
        Ok(RescheduleDecision {
            train: j,
            kind,
            case,
            delay: self.terminal_delay(j)?,
            order_position: None,
            new_route: (kind == DecisionKind::Reroute).then(|| a.iter().map(|e| e.station).collect()),
        })
    }
}

fn stations(it: &[ScheduleEntry]) -> Vec<StationId> {
    it.iter().map(|e| e.station).collect()
}

fn route_changed(b: &[ScheduleEntry], a: &[ScheduleEntry]) -> bool {
    stations(b) != stations(a)
}

fn tracks_changed(b: &[ScheduleEntry], a: &[ScheduleEntry]) -> bool {
    b.iter().zip(a).any(|(x, y)| x.next_track != y.next_track)
}

fn times_changed(b: &[ScheduleEntry], a: &[ScheduleEntry]) -> bool {
    b.len() != a.len() || b.iter().zip(a).any(|(x, y)| x.x_at != y.x_at || x.x_dt != y.x_dt)
}

enum Position {
    Approach { blocked_track: bool },
    AtBlockedStation(StationId),
    Elsewhere,
}

fn position(ctx: &CaseContext, itin: &[ScheduleEntry]) -> Position {
    let ev = ctx.event;
    let stations = ev.blocked_stations();
    match train_status(itin, ev.t_d) {
        TrainStatus::OnTrack(i) => {
            let on_blocked = itin[i].next_track.is_some_and(|l| ev.blocked_tracks.contains(&l));
            if on_blocked || stations.contains(&itin[i + 1].station) {
                Position::Approach {
                    blocked_track: on_blocked,
                }
            } else {
                Position::Elsewhere
            }
        }
        TrainStatus::AtPlatform(i) if stations.contains(&itin[i].station) => {
            Position::AtBlockedStation(itin[i].station)
        }
        _ => Position::Elsewhere,
    }
}

/// A train on a track towards the disrupted station, or on a blocked track.
pub fn handle_case1(ctx: &CaseContext, train: TrainId) -> Result<RescheduleDecision, RescheduleError> {
    let (b, a) = ctx.itins(train)?;
    let Position::Approach { blocked_track } = position(ctx, b) else {
        return Err(RescheduleError::TrainNotOnApproach(train));
    };
    let TrainStatus::OnTrack(i) = train_status(b, ctx.event.t_d) else {
        return Err(RescheduleError::TrainNotOnApproach(train));
    };
    let held = a.get(i + 1).is_some_and(|n| n.x_at > b[i + 1].x_at);
    if blocked_track || held {
        ctx.decision(train, DecisionKind::Retime, CaseLabel::C12)
    } else if route_changed(b, a) {
        ctx.decision(train, DecisionKind::Reroute, CaseLabel::C111)
    } else {
        ctx.decision(train, DecisionKind::Retime, CaseLabel::C112)
    }
}

/// Trains standing at a disrupted station at onset, numbered by their new
/// departure order.
pub fn handle_case2(
    ctx: &CaseContext,
    station: StationId,
) -> Result<Vec<RescheduleDecision>, RescheduleError> {
    if !ctx.event.blocked_stations().contains(&station) {
        return Err(RescheduleError::PreconditionUnsatisfied(format!(
            "no capacity lost at {station}"
        )));
    }
    let mut waiting = Vec::new();
    for (&j, b) in &ctx.before.itineraries {
        if let TrainStatus::AtPlatform(i) = train_status(b, ctx.event.t_d) {
            if b[i].station == station {
                let (_, a) = ctx.itins(j)?;
                waiting.push((a[i].x_dt, j));
            }
        }
    }
    if waiting.is_empty() {
        return Err(RescheduleError::PreconditionUnsatisfied(format!(
            "no train waiting at {station}"
        )));
    }
    waiting.sort();
    waiting
        .into_iter()
        .enumerate()
        .map(|(pos, (_, j))| {
            let mut d = ctx.decision(j, DecisionKind::Reorder, CaseLabel::C2)?;
            d.order_position = Some(pos + 1);
            Ok(d)
        })
        .collect()
}

fn classify_rest(ctx: &CaseContext, train: TrainId) -> Result<RescheduleDecision, RescheduleError> {
    let (b, a) = ctx.itins(train)?;
    let ev = ctx.event;
    let uses_blocked = b.windows(2).any(|w| {
        w[0].next_track.is_some_and(|l| ev.blocked_tracks.contains(&l))
            && w[1].x_at > ev.t_d
            && w[0].x_dt < ev.window_end()
    });
    if route_changed(b, a) || tracks_changed(b, a) {
        ctx.decision(train, DecisionKind::Reroute, CaseLabel::C32)
    } else if times_changed(b, a) {
        let case = if uses_blocked { CaseLabel::C32 } else { CaseLabel::C31 };
        ctx.decision(train, DecisionKind::Retime, case)
    } else {
        ctx.decision(train, DecisionKind::NoChange, CaseLabel::C31)
    }
}

/// A train elsewhere in the network whose plan runs into the disruption.
pub fn handle_case3(ctx: &CaseContext, train: TrainId) -> Result<RescheduleDecision, RescheduleError> {
    let (b, _) = ctx.itins(train)?;
    match position(ctx, b) {
        Position::Elsewhere => classify_rest(ctx, train),
        _ => Err(RescheduleError::PreconditionUnsatisfied(format!(
            "{train} is at or next to the disrupted resource"
        ))),
    }
}

/// One decision per affected train plus one per knock-on train whose plan changed.
pub(crate) fn label_all(ctx: &CaseContext) -> Result<Vec<RescheduleDecision>, RescheduleError> {
    let affected = affected_trains(ctx.before, ctx.event);
    let mut out = Vec::new();
    let mut case2: BTreeSet<StationId> = BTreeSet::new();
    for (&j, b) in &ctx.before.itineraries {
        let (_, a) = ctx.itins(j)?;
        let changed = route_changed(b, a) || times_changed(b, a) || tracks_changed(b, a);
        if !affected.contains(&j) {
            if changed {
                out.push(classify_rest(ctx, j)?);
            }
            continue;
        }
        match position(ctx, b) {
            Position::Approach { .. } => out.push(handle_case1(ctx, j)?),
            Position::AtBlockedStation(s) => {
                case2.insert(s);
            }
            Position::Elsewhere => out.push(handle_case3(ctx, j)?),
        }
    }
    for s in case2 {
        out.extend(handle_case2(ctx, s)?);
    }
    out.sort_by_key(|d| d.train);
    Ok(out)
}
