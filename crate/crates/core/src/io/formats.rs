use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::constraints::PriorityPolicy;
use crate::model::{
    format_hhmm, parse_hhmm, Category, Minutes, PlatformIdx, Schedule, ScheduleEntry, StationId,
    Timetable, TrackId, Train, TrainId,
};
use crate::network::{build_network, RailwayNetwork, Station, TrackRole, TrackSegment};
use crate::resched::{DisasterEvent, RecoveryModel, RescheduleConfig};

use super::{read_file, sections, unknown_section, IoError, Row};

pub fn parse_network(text: &str) -> Result<RailwayNetwork, IoError> {
    let mut stations = Vec::new();
    let mut tracks = Vec::new();
    let mut codes: BTreeMap<String, u32> = BTreeMap::new();
    let secs = sections(text)?;
    for sec in &secs {
        match sec.name {
            "stations" => {
                for r in &sec.rows {
                    r.expect_len(3, 4)?;
                    let id: u32 = r.num(0, "station id")?;
                    let code = r.get(1, "station code")?.to_string();
                    let platforms: PlatformIdx = r.num(2, "platform count")?;
                    let junction = match r.fields.get(3).map(|f| f.1) {
                        None | Some("0") | Some("-") => false,
                        Some("1") => true,
                        Some(_) => return Err(r.err(3, "junction flag must be 0 or 1")),
                    };
                    if codes.insert(code.clone(), id).is_some() {
                        return Err(crate::network::NetworkError::DuplicateStationId(code).into());
                    }
                    let mut s = Station::new(id, code, platforms);
                    if junction {
                        s = s.junction();
                    }
                    stations.push(s);
                }
            }
            "tracks" => {}
            _ => return Err(unknown_section(sec)),
        }
    }
    for sec in secs.iter().filter(|s| s.name == "tracks") {
        for r in &sec.rows {
            r.expect_len(5, 5)?;
            let id: u32 = r.num(0, "track id")?;
            let end = |i: usize| -> Result<u32, IoError> {
                let code = r.get(i, "station code")?;
                codes.get(code).copied().ok_or_else(|| IoError::UnknownStation {
                    line: r.line,
                    code: code.to_string(),
                })
            };
            let (a, b) = (end(1)?, end(2)?);
            let role = TrackRole::parse(r.get(3, "role")?).ok_or_else(|| r.err(3, "role must be UP, DOWN or GENERAL"))?;
            let journey: Minutes = r.num(4, "journey time")?;
            tracks.push(TrackSegment::new(id, a, b, role, journey));
        }
    }
    Ok(build_network(stations, tracks)?)
}

pub fn parse_network_file(path: impl AsRef<Path>) -> Result<RailwayNetwork, IoError> {
    parse_network(&read_file(path.as_ref())?)
}

pub fn serialize_network(net: &RailwayNetwork) -> String {
    let mut out = String::from("[stations]\n# id\tcode\tplatforms\tjunction\n");
    for s in net.stations() {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", s.id.0, s.code, s.platform_count, u8::from(s.is_junction));
    }
    out.push_str("\n[tracks]\n# id\tfrom\tto\trole\tjourney\n");
    for t in net.tracks() {
        let code = |s: StationId| net.station(s).map_or("?", |x| x.code.as_str());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            t.id.0,
            code(t.endpoints.0),
            code(t.endpoints.1),
            t.role.name(),
            t.journey_time
        );
    }
    out
}

/// Category names as they appear in rosters, service names included.
fn category_of(s: &str) -> Option<Category> {
    Category::parse(s).or_else(|| match s.to_ascii_lowercase().as_str() {
        "rajdhani" | "duronto" | "shatabdi" => Some(Category::Premium),
        "memu" | "emu" => Some(Category::Local),
        "goods" => Some(Category::Freight),
        _ => None,
    })
}

fn time(r: &Row, idx: usize, what: &str) -> Result<Minutes, IoError> {
    parse_hhmm(r.get(idx, what)?).ok_or_else(|| r.err(idx, format!("{what} must be HH:MM")))
}

pub fn parse_timetable(text: &str, net: &RailwayNetwork) -> Result<Timetable, IoError> {
    let mut tt = Timetable::default();
    let mut by_number: BTreeMap<String, TrainId> = BTreeMap::new();
    let secs = sections(text)?;
    for sec in secs.iter().filter(|s| s.name == "trains") {
        for r in &sec.rows {
            r.expect_len(2, 2)?;
            let number = r.get(0, "train number")?.to_string();
            let cat = category_of(r.get(1, "category")?).ok_or_else(|| r.err(1, "unknown category"))?;
            let id = tt.trains.len() as u32 + 1;
            if by_number.insert(number.clone(), TrainId(id)).is_some() {
                return Err(r.err(0, format!("duplicate train {number}")));
            }
            tt.trains.insert(TrainId(id), Train::new(id, number, cat));
        }
    }
    // (entry, requested per-pair track index, row) per train
    let mut rows: BTreeMap<TrainId, Vec<(ScheduleEntry, Option<usize>, &Row)>> = BTreeMap::new();
    for sec in &secs {
        match sec.name {
            "trains" => continue,
            "entries" => {}
            _ => return Err(unknown_section(sec)),
        }
        for r in &sec.rows {
            r.expect_len(4, 6)?;
            let number = r.get(0, "train number")?;
            let j = *by_number.get(number).ok_or_else(|| r.err(0, format!("train {number} not in [trains]")))?;
            let code = r.get(1, "station")?;
            let station = net.station_by_code(code).ok_or_else(|| IoError::UnknownStation {
                line: r.line,
                code: code.to_string(),
            })?;
            let (at, dt) = (time(r, 2, "arrival")?, time(r, 3, "departure")?);
            let list = rows.entry(j).or_default();
            let prev_dt = list.last().map(|(e, _, _)| e.o_dt);
            if dt < at || prev_dt.is_some_and(|p| at < p) {
                return Err(IoError::NonMonotoneItinerary {
                    line: r.line,
                    train: number.to_string(),
                });
            }
            let mut e = ScheduleEntry::planned(j, station.id, at, dt, None);
            e.platform = match r.fields.get(4).map(|f| f.1) {
                None | Some("-") => None,
                Some(_) => Some(r.num(4, "platform")?),
            };
            let track = match r.fields.get(5).map(|f| f.1) {
                None | Some("-") => None,
                Some(_) => Some(r.num::<usize>(5, "track index")?),
            };
            list.push((e, track, r));
        }
    }
    let mut entries = Vec::new();
    for (_, list) in rows {
        for n in 0..list.len() {
            let (mut e, track, r) = list[n].clone();
            if let Some((next, _, _)) = list.get(n + 1) {
                e.next_track = match track {
                    Some(k) => Some(
                        net.nth_track_between(e.station, next.station, k)
                            .ok_or_else(|| r.err(5, format!("no track {k} between the stations")))?,
                    ),
                    None => net
                        .tracks_between(e.station, next.station)
                        .iter()
                        .find(|s| s.allows(e.station, next.station))
                        .map(|s| s.id),
                };
            } else if track.is_some() {
                return Err(r.err(5, "terminal entry has no onward track"));
            }
            entries.push(e);
        }
    }
    tt.schedule = Schedule::from_entries(entries);
    Ok(tt)
}

pub fn parse_timetable_file(path: impl AsRef<Path>, net: &RailwayNetwork) -> Result<Timetable, IoError> {
    parse_timetable(&read_file(path.as_ref())?, net)
}

fn track_index(net: &RailwayNetwork, a: StationId, b: StationId, l: TrackId) -> Option<usize> {
    net.tracks_between(a, b).iter().position(|s| s.id == l).map(|i| i + 1)
}

pub fn serialize_timetable(tt: &Timetable, net: &RailwayNetwork) -> String {
    let mut out = String::from("[trains]\n# number\tcategory\n");
    for t in tt.trains.values() {
        let _ = writeln!(out, "{}\t{}", t.number, t.category.name());
    }
    out.push_str("\n[entries]\n# number\tstation\tarrival\tdeparture\tplatform\ttrack\n");
    for (j, itin) in &tt.schedule.itineraries {
        let number = tt.trains.get(j).map_or_else(|| j.to_string(), |t| t.number.clone());
        for (n, e) in itin.iter().enumerate() {
            let code = net.station(e.station).map_or("?", |s| s.code.as_str());
            let platform = e.platform.map_or("-".to_string(), |k| k.to_string());
            let track = match (e.next_track, itin.get(n + 1)) {
                (Some(l), Some(next)) => track_index(net, e.station, next.station, l)
                    .map_or("-".to_string(), |k| k.to_string()),
                _ => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{number}\t{code}\t{}\t{}\t{platform}\t{track}",
                format_hhmm(e.o_at),
                format_hhmm(e.o_dt)
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    pub time: Minutes,
    pub tau1: Minutes,
    pub tau2: Minutes,
    pub platforms: Vec<(String, PlatformIdx)>,
    /// `(from code, to code, 1-based index among the pair's tracks)`
    pub tracks: Vec<(String, String, usize)>,
}

impl EventSpec {
    pub fn resolve(&self, net: &RailwayNetwork) -> Result<DisasterEvent, IoError> {
        let st = |code: &str| {
            net.station_by_code(code)
                .map(|s| s.id)
                .ok_or_else(|| IoError::UnknownStation {
                    line: 0,
                    code: code.to_string(),
                })
        };
        let mut ev = DisasterEvent {
            t_d: self.time,
            blocked_platforms: Default::default(),
            blocked_tracks: Default::default(),
            recovery: RecoveryModel::uniform(self.tau1, self.tau2),
        };
        for (code, k) in &self.platforms {
            ev.blocked_platforms.insert((st(code)?, *k));
        }
        for (a, b, idx) in &self.tracks {
            let l = net.nth_track_between(st(a)?, st(b)?, *idx).ok_or_else(|| IoError::Parse {
                line: 0,
                col: 0,
                msg: format!("no track {idx} between {a} and {b}"),
            })?;
            ev.blocked_tracks.insert(l);
        }
        ev.validate(net)?;
        Ok(ev)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub id: String,
    pub network_file: PathBuf,
    pub timetable_file: PathBuf,
    pub seed: u64,
    pub horizon: Minutes,
    pub headway: Minutes,
    pub min_dwell: Minutes,
    pub latency_levels: u32,
    pub latency_per_level: Minutes,
    pub delay_threshold: Minutes,
    pub busy_windows: Vec<(Minutes, Minutes)>,
    pub events: Vec<EventSpec>,
}

impl ScenarioSpec {
    pub fn policy(&self) -> PriorityPolicy {
        PriorityPolicy {
            busy_windows: self.busy_windows.clone(),
            delay_threshold: self.delay_threshold,
        }
    }

    pub fn resched_config(&self) -> RescheduleConfig {
        RescheduleConfig {
            headway: self.headway,
            min_dwell: self.min_dwell,
            latency_levels: self.latency_levels,
            latency_per_level: self.latency_per_level,
            ..RescheduleConfig::default()
        }
    }

    /// Network, timetable and resolved events.
    pub fn load(&self) -> Result<(RailwayNetwork, Timetable, Vec<DisasterEvent>), IoError> {
        let net = parse_network_file(&self.network_file)?;
        let tt = parse_timetable_file(&self.timetable_file, &net)?;
        let events = self
            .events
            .iter()
            .map(|e| e.resolve(&net))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((net, tt, events))
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, IoError> {
    let defaults = RescheduleConfig::default();
    let policy = PriorityPolicy::default();
    let mut spec = ScenarioSpec {
        id: String::new(),
        network_file: PathBuf::new(),
        timetable_file: PathBuf::new(),
        seed: 0,
        horizon: crate::model::MINUTES_PER_DAY,
        headway: defaults.headway,
        min_dwell: defaults.min_dwell,
        latency_levels: defaults.latency_levels,
        latency_per_level: defaults.latency_per_level,
        delay_threshold: policy.delay_threshold,
        busy_windows: Vec::new(),
        events: Vec::new(),
    };
    let (mut seed, mut network, mut timetable) = (false, false, false);
    let mut windows_given = false;
    let secs = sections(text)?;
    for sec in &secs {
        match sec.name {
            "scenario" => {
                for r in &sec.rows {
                    let key = r.get(0, "key")?;
                    let one = || -> Result<&str, IoError> {
                        r.expect_len(2, 2)?;
                        r.get(1, key)
                    };
                    match key {
                        "id" => spec.id = one()?.to_string(),
                        "network" => {
                            spec.network_file = one()?.into();
                            network = true;
                        }
                        "timetable" => {
                            spec.timetable_file = one()?.into();
                            timetable = true;
                        }
                        "seed" => {
                            one()?;
                            spec.seed = r.num(1, "seed")?;
                            seed = true;
                        }
                        "horizon" => spec.horizon = time(r, 1, "horizon")?,
                        "headway" => spec.headway = r.num(1, "headway")?,
                        "min_dwell" => spec.min_dwell = r.num(1, "min_dwell")?,
                        "latency_levels" => spec.latency_levels = r.num(1, "latency_levels")?,
                        "latency_per_level" => spec.latency_per_level = r.num(1, "latency_per_level")?,
                        "delay_threshold" => spec.delay_threshold = r.num(1, "delay_threshold")?,
                        "busy_window" => {
                            r.expect_len(3, 3)?;
                            spec.busy_windows.push((time(r, 1, "window start")?, time(r, 2, "window end")?));
                            windows_given = true;
                        }
                        _ => return Err(r.err(0, format!("unknown key {key}"))),
                    }
                }
            }
            "event" => {
                let mut ev = EventSpec {
                    time: 0,
                    tau1: 0,
                    tau2: 0,
                    platforms: Vec::new(),
                    tracks: Vec::new(),
                };
                let mut has_time = false;
                for r in &sec.rows {
                    match r.get(0, "key")? {
                        "time" => {
                            r.expect_len(2, 2)?;
                            ev.time = time(r, 1, "time")?;
                            has_time = true;
                        }
                        "recovery" => {
                            r.expect_len(3, 3)?;
                            ev.tau1 = r.num(1, "tau1")?;
                            ev.tau2 = r.num(2, "tau2")?;
                        }
                        "block_platform" => {
                            r.expect_len(3, 3)?;
                            ev.platforms.push((r.get(1, "station")?.to_string(), r.num(2, "platform")?));
                        }
                        "block_track" => {
                            r.expect_len(4, 4)?;
                            ev.tracks.push((
                                r.get(1, "station")?.to_string(),
                                r.get(2, "station")?.to_string(),
                                r.num(3, "track index")?,
                            ));
                        }
                        other => return Err(r.err(0, format!("unknown key {other}"))),
                    }
                }
                if !has_time {
                    return Err(IoError::Parse {
                        line: sec.line,
                        col: 1,
                        msg: "event without time".into(),
                    });
                }
                spec.events.push(ev);
            }
            _ => return Err(unknown_section(sec)),
        }
    }
    for (ok, what) in [(seed, "seed"), (network, "network"), (timetable, "timetable")] {
        if !ok {
            return Err(IoError::Parse {
                line: 1,
                col: 1,
                msg: format!("scenario has no {what}"),
            });
        }
    }
    if !windows_given {
        spec.busy_windows = policy.busy_windows;
    }
    Ok(spec)
}

/// Parses a scenario file; relative data paths are taken from its directory.
pub fn parse_scenario_file(path: impl AsRef<Path>) -> Result<ScenarioSpec, IoError> {
    let path = path.as_ref();
    let mut spec = parse_scenario(&read_file(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    spec.network_file = dir.join(&spec.network_file);
    spec.timetable_file = dir.join(&spec.timetable_file);
    Ok(spec)
}

pub fn serialize_scenario(spec: &ScenarioSpec) -> String {
    let mut out = String::from("[scenario]\n");
    let _ = writeln!(out, "id\t{}", spec.id);
    let _ = writeln!(out, "network\t{}", spec.network_file.display());
    let _ = writeln!(out, "timetable\t{}", spec.timetable_file.display());
    let _ = writeln!(out, "seed\t{}", spec.seed);
    let _ = writeln!(out, "horizon\t{}", format_hhmm(spec.horizon));
    let _ = writeln!(out, "headway\t{}", spec.headway);
    let _ = writeln!(out, "min_dwell\t{}", spec.min_dwell);
    let _ = writeln!(out, "latency_levels\t{}", spec.latency_levels);
    let _ = writeln!(out, "latency_per_level\t{}", spec.latency_per_level);
    let _ = writeln!(out, "delay_threshold\t{}", spec.delay_threshold);
    for (s, e) in &spec.busy_windows {
        let _ = writeln!(out, "busy_window\t{}\t{}", format_hhmm(*s), format_hhmm(*e));
    }
    for ev in &spec.events {
        out.push_str("\n[event]\n");
        let _ = writeln!(out, "time\t{}", format_hhmm(ev.time));
        let _ = writeln!(out, "recovery\t{}\t{}", ev.tau1, ev.tau2);
        for (code, k) in &ev.platforms {
            let _ = writeln!(out, "block_platform\t{code}\t{k}");
        }
        for (a, b, idx) in &ev.tracks {
            let _ = writeln!(out, "block_track\t{a}\t{b}\t{idx}");
        }
    }
    out
}
