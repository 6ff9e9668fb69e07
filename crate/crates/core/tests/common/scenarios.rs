#![allow(dead_code)]

use std::path::PathBuf;

use railsched::agents::{run_simulation, Mode, SimOptions, SimReport};
use railsched::constraints::validate_schedule;
use railsched::io::{parse_scenario_file, ScenarioSpec};
use railsched::model::{Minutes, Timetable};
use railsched::network::RailwayNetwork;
use railsched::resched::{
    blockage_violations, centralized_baseline, reschedule, DisasterEvent, ResolvedEvent,
};

pub const TABLE: [&str; 7] = ["sc1", "sc2", "sc3", "sc4", "sc5", "sc6", "sc7"];

pub fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("data/scenarios/{name}.tsv"))
}

pub struct Loaded {
    pub spec: ScenarioSpec,
    pub net: RailwayNetwork,
    pub tt: Timetable,
    pub events: Vec<DisasterEvent>,
}

pub fn load(name: &str) -> Loaded {
    let spec = parse_scenario_file(path(name)).unwrap();
    let (net, tt, events) = spec.load().unwrap();
    Loaded { spec, net, tt, events }
}

impl Loaded {
    pub fn run(&self, mode: Mode) -> SimReport {
        let opts = SimOptions {
            mode,
            resched: self.spec.resched_config(),
        };
        run_simulation(&self.net, &self.tt, &self.events, &self.spec.policy(), self.spec.seed, self.spec.horizon, &opts)
            .unwrap()
    }
}

/// Every plan and every final schedule passes the validator and keeps off
/// blocked resources.
pub fn all_feasible() -> Result<(), String> {
    let mut names: Vec<&str> = TABLE.to_vec();
    names.push("sc_nodisaster");
    for name in names {
        let sc = load(name);
        let policy = sc.spec.policy();
        let cfg = sc.spec.resched_config();
        for (i, ev) in sc.events.iter().enumerate() {
            let seed = sc.spec.seed + i as u64;
            let resolved = ResolvedEvent::resolve(ev, seed).unwrap();
            for (which, res) in [
                ("distributed", reschedule(&sc.net, &sc.tt, ev, &policy, seed, &cfg)),
                ("centralized", centralized_baseline(&sc.net, &sc.tt, ev, &policy, seed, &cfg)),
            ] {
                let res = res.map_err(|e| format!("{name} {which}: {e}"))?;
                let v = validate_schedule(&sc.net, &res.new_schedule);
                let b = blockage_violations(&res.new_schedule, &resolved);
                if !v.is_empty() || !b.is_empty() {
                    return Err(format!("{name} {which}: {v:?} {b:?}"));
                }
                if res.total_delay != res.per_train_delay.values().sum::<Minutes>() {
                    return Err(format!("{name} {which}: total is not the sum"));
                }
            }
        }
        for mode in [Mode::Distributed, Mode::Centralized] {
            let r = sc.run(mode);
            let v = validate_schedule(&sc.net, &r.final_schedule);
            if !v.is_empty() {
                return Err(format!("{name} {mode:?}: {v:?}"));
            }
        }
    }
    Ok(())
}
