use proptest::prelude::*;

use railsched::model::{ScheduleEntry, StationId, TrainId};
use railsched::resched::{
    buffer_time, minimize_station_delay, minimize_track_delay, sample_recovery, DisasterEvent, RecoveryModel,
};

#[test]
fn uniform_mean_over_ten_thousand_draws() {
    let m = RecoveryModel::uniform(10, 50);
    let sum: i64 = (0..10_000u64).map(|s| sample_recovery(&m, s).unwrap()).sum();
    let mean = sum as f64 / 10_000.0;
    assert!((mean - 30.0).abs() <= 2.0, "{mean}");
}

#[test]
fn buffer_examples() {
    let ev = |a, b| DisasterEvent {
        t_d: 360,
        blocked_platforms: [(StationId(1), 1)].into(),
        blocked_tracks: Default::default(),
        recovery: RecoveryModel::uniform(a, b),
    };
    assert_eq!(buffer_time(&ev(10, 50)), 390);
    assert_eq!(buffer_time(&ev(20, 20)), 380);
}

#[test]
fn station_delay_examples() {
    let e = ScheduleEntry::planned(TrainId(1), StationId(1), 600, 610, None);
    let r = minimize_station_delay(&e, 6, 2);
    assert_eq!((r.x_at, r.x_dt), (606, 610));
    assert_eq!(minimize_station_delay(&e, 0, 2), e);
    let r = minimize_station_delay(&e, 15, 2);
    assert_eq!((r.x_at, r.x_dt), (615, 617));
}

proptest! {
    #[test]
    fn samples_stay_in_the_interval(a in 0i64..200, w in 0i64..200, seed in any::<u64>()) {
        let m = RecoveryModel::uniform(a, a + w);
        let v = sample_recovery(&m, seed).unwrap();
        prop_assert!((a..=a + w).contains(&v));
        prop_assert_eq!(v, sample_recovery(&m, seed).unwrap());
    }

    #[test]
    fn buffer_within_recovery_bounds(t_d in 0i64..3000, a in 0i64..200, w in 0i64..200) {
        let ev = DisasterEvent {
            t_d,
            blocked_platforms: [(StationId(1), 1)].into(),
            blocked_tracks: Default::default(),
            recovery: RecoveryModel::uniform(a, a + w),
        };
        let b = buffer_time(&ev);
        prop_assert!(t_d + a <= b && b <= t_d + a + w);
    }

    #[test]
    fn compressed_dwell_bounds(at in 0i64..2000, dwell in 0i64..30, delay in 0i64..120, floor in 0i64..10) {
        let e = ScheduleEntry::planned(TrainId(1), StationId(1), at, at + dwell, None);
        let r = minimize_station_delay(&e, delay, floor);
        prop_assert_eq!(r.x_at, at + delay);
        prop_assert!(r.x_at >= r.o_at);
        prop_assert!(r.x_dt >= r.o_dt);
        prop_assert!(r.x_dt - r.x_at >= floor);
        // dwell never grows unless the floor forces it
        prop_assert!(r.x_dt - r.x_at <= dwell.max(floor));
        // departure is as early as the two limits allow
        prop_assert_eq!(r.x_dt, (at + dwell).max(at + delay + floor));
    }

    #[test]
    fn running_times_are_kept(deps in prop::collection::vec((0i64..30, 1i64..60), 1..6), start in 0i64..2000) {
        let mut entries = Vec::new();
        let mut t = start;
        for (i, &(dwell, _)) in deps.iter().enumerate() {
            entries.push(ScheduleEntry::planned(TrainId(1), StationId(i as u32 + 1), t, t + dwell, None));
            t += dwell + 100;
        }
        let journeys: Vec<i64> = deps.iter().map(|d| d.1).collect();
        minimize_track_delay(&mut entries, &journeys);
        for i in 1..entries.len() {
            prop_assert_eq!(entries[i].x_at - entries[i - 1].x_dt, journeys[i - 1]);
        }
    }
}
