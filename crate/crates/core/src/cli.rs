//! Command-line surface shared by the binary and the tests.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::agents::{run_simulation, Mode, SimOptions};
use crate::constraints::validate_schedule;
use crate::io::{
    build_report, emit_report, parse_network_file, parse_petri_file, parse_scenario_file,
    parse_timetable_file, ReportFormat,
};
use crate::model::format_hhmm;
use crate::network::enumerate_routes;
use crate::petri::{
    build_preset, check_state_equation, fire_sequence, incidence_matrix, parse_sequence,
    reachability_analysis, Preset,
};

#[derive(Parser, Debug)]
#[command(name = "railsched", version, about = "Disruption rescheduling for railway networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Delimited,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario with distributed agents and the centralized baseline.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        no_baseline: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the distributed run as canonical JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check a timetable against the network and the occupancy rules.
    Validate { network: PathBuf, timetable: PathBuf },
    /// Inspect a preset net (PN1..PN4) or a net file.
    Petri {
        net: String,
        #[arg(long)]
        analyze: bool,
        /// Fire a transition sequence such as "Tr1 Tr2" and check the state equation.
        #[arg(long)]
        sequence: Option<String>,
        #[arg(long, default_value_t = 200_000)]
        max_nodes: usize,
    },
    /// List the cheapest loop-free routes between two stations.
    Routes {
        network: PathBuf,
        from: String,
        to: String,
        #[arg(short, default_value_t = 3)]
        k: usize,
    },
}

type Outcome = Result<(String, i32), String>;

/// Runs the command line and returns the exit status. Output goes to `out`,
/// diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let res = match cli.cmd {
        Command::Simulate {
            scenario,
            no_baseline,
            format,
            out: path,
            json,
        } => simulate(scenario, !no_baseline, format, path, json),
        Command::Validate { network, timetable } => validate(network, timetable),
        Command::Petri {
            net,
            analyze,
            sequence,
            max_nodes,
        } => petri(&net, analyze, sequence.as_deref(), max_nodes),
        Command::Routes { network, from, to, k } => routes(network, &from, &to, k),
    };
    match res {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn simulate(
    scenario: PathBuf,
    baseline: bool,
    format: Format,
    path: Option<PathBuf>,
    json: Option<PathBuf>,
) -> Outcome {
    let spec = parse_scenario_file(&scenario).map_err(|e| e.to_string())?;
    let (net, tt, events) = spec.load().map_err(|e| e.to_string())?;
    let policy = spec.policy();
    let run = |mode| {
        let opts = SimOptions {
            mode,
            resched: spec.resched_config(),
        };
        run_simulation(&net, &tt, &events, &policy, spec.seed, spec.horizon, &opts).map_err(|e| e.to_string())
    };
    let dist = run(Mode::Distributed)?;
    let base = if baseline { Some(run(Mode::Centralized)?) } else { None };
    let report = build_report(&spec.id, &tt, &dist, base.as_ref());
    let fmt = match format {
        Format::Table => ReportFormat::Table,
        Format::Delimited => ReportFormat::Delimited,
    };
    let text = emit_report(&report, fmt);
    if let Some(j) = json {
        std::fs::write(&j, dist.to_canonical_json()).map_err(|e| format!("{}: {e}", j.display()))?;
    }
    match path {
        Some(p) => {
            std::fs::write(&p, &text).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok((String::new(), 0))
        }
        None => Ok((text, 0)),
    }
}

fn validate(network: PathBuf, timetable: PathBuf) -> Outcome {
    let net = parse_network_file(&network).map_err(|e| e.to_string())?;
    let tt = parse_timetable_file(&timetable, &net).map_err(|e| e.to_string())?;
    let violations = validate_schedule(&net, &tt.schedule);
    let mut text = String::new();
    for v in &violations {
        let _ = writeln!(text, "{v}");
    }
    let _ = writeln!(text, "{} violation(s)", violations.len());
    Ok((text, i32::from(!violations.is_empty())))
}

fn petri(which: &str, analyze: bool, sequence: Option<&str>, max_nodes: usize) -> Outcome {
    let (net, m0) = match which.parse::<Preset>() {
        Ok(p) => build_preset(p),
        Err(_) => parse_petri_file(which).map_err(|e| e.to_string())?,
    };
    let mut text = String::new();
    let _ = writeln!(text, "places {} transitions {}", net.places.len(), net.transitions.len());
    let _ = writeln!(text, "M0 = {m0}");
    if analyze {
        let a = incidence_matrix(&net);
        let _ = writeln!(text, "incidence matrix:\n{}", a.render());
        let rep = reachability_analysis(&net, &m0, max_nodes).map_err(|e| e.to_string())?;
        let dead: Vec<&str> = rep
            .dead_transitions
            .iter()
            .map(|&t| net.transitions[t].name.as_str())
            .collect();
        let _ = writeln!(text, "nodes={}", rep.tree.nodes.len());
        let _ = writeln!(text, "bound={}", rep.bound);
        let _ = writeln!(text, "bound_with_colour={}", rep.bound_with_colour);
        let _ = writeln!(text, "dead={}", if dead.is_empty() { "none".into() } else { dead.join(",") });
    }
    if let Some(s) = sequence {
        let sigma = parse_sequence(&net, s).map_err(|e| e.to_string())?;
        let fired = fire_sequence(&net, &m0, &sigma).map_err(|e| e.to_string())?;
        let ok = check_state_equation(&net, &m0, &sigma, &fired.marking).map_err(|e| e.to_string())?;
        let x: Vec<String> = fired.occurrences.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(text, "X = [{}]", x.join(","));
        let _ = writeln!(text, "M = {}", fired.marking);
        let _ = writeln!(text, "state equation {}", if ok { "holds" } else { "fails" });
        if !ok {
            return Ok((text, 1));
        }
    }
    Ok((text, 0))
}

fn routes(network: PathBuf, from: &str, to: &str, k: usize) -> Outcome {
    let net = parse_network_file(&network).map_err(|e| e.to_string())?;
    let id = |code: &str| {
        net.station_by_code(code)
            .map(|s| s.id)
            .ok_or_else(|| format!("unknown station {code}"))
    };
    let found = enumerate_routes(&net, id(from)?, id(to)?, k).map_err(|e| e.to_string())?;
    let mut text = String::new();
    for r in found {
        let mut line = String::new();
        for (a, l, b) in r.legs() {
            if line.is_empty() {
                line.push_str(&net.station(a).map_or("?".into(), |s| s.code.clone()));
            }
            let _ = write!(line, " -[{}]-> {}", l.0, net.station(b).map_or("?", |s| s.code.as_str()));
        }
        let _ = writeln!(text, "{}\t{line}", format_hhmm(r.journey_time(&net)));
    }
    Ok((text, 0))
}
