//! Identifiers, trains and schedule entries shared by every subsystem.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Minutes since midnight of day 0. Multi-day horizons keep counting upward.
pub type Minutes = i64;

pub const MINUTES_PER_DAY: Minutes = 1440;

macro_rules! id_newtype {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(StationId, "S");
id_newtype!(TrackId, "L");
id_newtype!(TrainId, "T");

/// Platform index `k`, 1-based.
pub type PlatformIdx = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Premium,
    Mail,
    Freight,
    Passenger,
    Local,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Premium,
        Category::Mail,
        Category::Freight,
        Category::Passenger,
        Category::Local,
    ];

    pub fn level(self) -> PriorityLevel {
        match self {
            Category::Premium => PriorityLevel::Y1,
            Category::Mail => PriorityLevel::Y2,
            Category::Freight => PriorityLevel::Y3,
            Category::Passenger => PriorityLevel::Y4,
            Category::Local => PriorityLevel::Y5,
        }
    }

    /// Premium, mail and freight services are long-distance; passenger and
    /// local services are short-distance.
    pub fn is_long_distance(self) -> bool {
        matches!(self, Category::Premium | Category::Mail | Category::Freight)
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Premium => "Premium",
            Category::Mail => "Mail",
            Category::Freight => "Freight",
            Category::Passenger => "Passenger",
            Category::Local => "Local",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PriorityLevel {
    Y1,
    Y2,
    Y3,
    Y4,
    Y5,
}

impl PriorityLevel {
    pub const ALL: [PriorityLevel; 5] = [
        PriorityLevel::Y1,
        PriorityLevel::Y2,
        PriorityLevel::Y3,
        PriorityLevel::Y4,
        PriorityLevel::Y5,
    ];
}

impl fmt::Display for PriorityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            PriorityLevel::Y1 => 1,
            PriorityLevel::Y2 => 2,
            PriorityLevel::Y3 => 3,
            PriorityLevel::Y4 => 4,
            PriorityLevel::Y5 => 5,
        };
        write!(f, "y{n}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Train {
    pub id: TrainId,
    pub number: String,
    pub category: Category,
}

impl Train {
    pub fn new(id: u32, number: impl Into<String>, category: Category) -> Self {
        Train {
            id: TrainId(id),
            number: number.into(),
            category,
        }
    }

    pub fn level(&self) -> PriorityLevel {
        self.category.level()
    }
}

/// One stop (or pass) of a train at a station: original `o_*` and actual `x_*` times.
///
/// `next_track` is the track used to leave towards the following itinerary
/// station; it is `None` at the terminal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub train: TrainId,
    pub station: StationId,
    pub o_at: Minutes,
    pub o_dt: Minutes,
    pub x_at: Minutes,
    pub x_dt: Minutes,
    pub platform: Option<PlatformIdx>,
    pub next_track: Option<TrackId>,
}

impl ScheduleEntry {
    /// A planned entry whose actual times equal the original ones.
    pub fn planned(
        train: TrainId,
        station: StationId,
        o_at: Minutes,
        o_dt: Minutes,
        next_track: Option<TrackId>,
    ) -> Self {
        ScheduleEntry {
            train,
            station,
            o_at,
            o_dt,
            x_at: o_at,
            x_dt: o_dt,
            platform: None,
            next_track,
        }
    }

    pub fn o_dwell(&self) -> Minutes {
        self.o_dt - self.o_at
    }

    pub fn x_dwell(&self) -> Minutes {
        self.x_dt - self.x_at
    }

    /// Positive scheduled dwell marks a stopping station for this train.
    pub fn is_stopping(&self) -> bool {
        self.o_dwell() > 0
    }
}

/// Per-train itineraries, each ordered along the train's route.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub itineraries: BTreeMap<TrainId, Vec<ScheduleEntry>>,
}

impl Schedule {
    pub fn new() -> Self {
        Schedule::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = ScheduleEntry>) -> Self {
        let mut s = Schedule::new();
        for e in entries {
            s.itineraries.entry(e.train).or_default().push(e);
        }
        s
    }

    pub fn itinerary(&self, train: TrainId) -> Option<&[ScheduleEntry]> {
        self.itineraries.get(&train).map(|v| v.as_slice())
    }

    pub fn entries(&self) -> impl Iterator<Item = &ScheduleEntry> {
        self.itineraries.values().flatten()
    }

    pub fn trains(&self) -> impl Iterator<Item = TrainId> + '_ {
        self.itineraries.keys().copied()
    }

    pub fn terminal(&self, train: TrainId) -> Option<&ScheduleEntry> {
        self.itineraries.get(&train).and_then(|v| v.last())
    }

    pub fn len(&self) -> usize {
        self.itineraries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Train roster plus the schedule they run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timetable {
    pub trains: BTreeMap<TrainId, Train>,
    pub schedule: Schedule,
}

impl Timetable {
    pub fn train(&self, id: TrainId) -> Option<&Train> {
        self.trains.get(&id)
    }
}

/// Renders minutes as `HH:MM`; values past midnight keep counting hours (`25:10`).
pub fn format_hhmm(t: Minutes) -> String {
    let sign = if t < 0 { "-" } else { "" };
    let t = t.abs();
    format!("{sign}{:02}:{:02}", t / 60, t % 60)
}

pub fn parse_hhmm(s: &str) -> Option<Minutes> {
    let (h, m) = s.trim().split_once(':')?;
    let h: Minutes = h.parse().ok()?;
    let m: Minutes = m.parse().ok()?;
    if h < 0 || !(0..60).contains(&m) {
        return None;
    }
    Some(h * 60 + m)
}
