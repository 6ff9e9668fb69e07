use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::petri::{ColourId, ColourRule, Marking, PetriNet, Place, PlaceKind, Transition, TransitionKind};

use super::{read_file, sections, unknown_section, IoError, Row};

fn colour(r: &Row, idx: usize, s: &str) -> Result<ColourId, IoError> {
    s.strip_prefix("ct")
        .and_then(|n| n.parse().ok())
        .map(ColourId)
        .ok_or_else(|| r.err(idx, format!("bad colour {s}, expected ctN")))
}

fn colour_list(r: &Row, idx: usize, s: &str) -> Result<Vec<ColourId>, IoError> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',').map(|c| colour(r, idx, c.trim())).collect()
}

/// Reads a net and its initial marking.
pub fn parse_petri(text: &str) -> Result<(PetriNet, Marking), IoError> {
    let mut net = PetriNet {
        places: Vec::new(),
        transitions: Vec::new(),
        input_arcs: Vec::new(),
        output_arcs: Vec::new(),
        colour_rules: BTreeMap::new(),
        guards: BTreeMap::new(),
    };
    let secs = sections(text)?;
    // names first so arcs may appear in any order
    for sec in &secs {
        match sec.name {
            "places" => {
                for r in &sec.rows {
                    r.expect_len(1, 2)?;
                    let kind = match r.fields.get(1).map(|f| f.1) {
                        None | Some("plain") => PlaceKind::Plain,
                        Some("function") => PlaceKind::Function,
                        Some(_) => return Err(r.err(1, "place kind must be plain or function")),
                    };
                    net.places.push(Place {
                        name: r.get(0, "place")?.to_string(),
                        kind,
                    });
                }
            }
            "transitions" => {
                for r in &sec.rows {
                    r.expect_len(1, 3)?;
                    let kind = match r.fields.get(1).map(|f| f.1) {
                        None | Some("immediate") => TransitionKind::Immediate,
                        Some("colour") => TransitionKind::Colour,
                        Some(_) => return Err(r.err(1, "transition kind must be immediate or colour")),
                    };
                    let t = net.transitions.len();
                    if let Some(g) = r.fields.get(2) {
                        let set: BTreeSet<ColourId> = colour_list(r, 2, g.1)?.into_iter().collect();
                        if !set.is_empty() {
                            net.guards.insert(t, set);
                        }
                    }
                    net.transitions.push(Transition {
                        name: r.get(0, "transition")?.to_string(),
                        kind,
                    });
                }
            }
            "input" | "output" | "rules" | "marking" | "colours" => {}
            _ => return Err(unknown_section(sec)),
        }
    }
    let place = |r: &Row, i: usize| -> Result<usize, IoError> {
        let name = r.get(i, "place")?;
        net.place_index(name).ok_or_else(|| r.err(i, format!("unknown place {name}")))
    };
    let trans = |r: &Row, i: usize| -> Result<usize, IoError> {
        let name = r.get(i, "transition")?;
        net.transition_index(name)
            .ok_or_else(|| r.err(i, format!("unknown transition {name}")))
    };
    let mut counts = vec![0u32; net.places.len()];
    let mut colours = BTreeSet::new();
    let (mut input, mut output, mut rules) = (Vec::new(), Vec::new(), BTreeMap::new());
    for sec in &secs {
        for r in &sec.rows {
            match sec.name {
                "input" => {
                    r.expect_len(2, 2)?;
                    input.push((place(r, 0)?, trans(r, 1)?));
                }
                "output" => {
                    r.expect_len(2, 2)?;
                    output.push((trans(r, 0)?, place(r, 1)?));
                }
                "rules" => {
                    r.expect_len(2, 2)?;
                    let outcomes = r.fields[1]
                        .1
                        .split('|')
                        .map(|o| colour_list(r, 1, o.trim()))
                        .collect::<Result<Vec<_>, _>>()?;
                    rules.insert(place(r, 0)?, ColourRule { outcomes });
                }
                "marking" => {
                    r.expect_len(2, 2)?;
                    counts[place(r, 0)?] = r.num(1, "token count")?;
                }
                "colours" => {
                    r.expect_len(2, 2)?;
                    colours.insert((place(r, 0)?, colour(r, 1, r.fields[1].1)?));
                }
                _ => {}
            }
        }
    }
    net.input_arcs = input;
    net.output_arcs = output;
    net.colour_rules = rules;
    net.validate()?;
    Ok((net, Marking { counts, colours }))
}

pub fn parse_petri_file(path: impl AsRef<Path>) -> Result<(PetriNet, Marking), IoError> {
    parse_petri(&read_file(path.as_ref())?)
}

fn join(cs: &[ColourId]) -> String {
    if cs.is_empty() {
        return "-".into();
    }
    cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

pub fn serialize_petri(net: &PetriNet, m0: &Marking) -> String {
    let mut out = String::from("[places]\n");
    for p in &net.places {
        let kind = match p.kind {
            PlaceKind::Plain => "plain",
            PlaceKind::Function => "function",
        };
        let _ = writeln!(out, "{}\t{kind}", p.name);
    }
    out.push_str("\n[transitions]\n");
    for (i, t) in net.transitions.iter().enumerate() {
        let kind = match t.kind {
            TransitionKind::Immediate => "immediate",
            TransitionKind::Colour => "colour",
        };
        let guard: Vec<ColourId> = net.guards.get(&i).map(|g| g.iter().copied().collect()).unwrap_or_default();
        let _ = writeln!(out, "{}\t{kind}\t{}", t.name, join(&guard));
    }
    out.push_str("\n[input]\n");
    for &(p, t) in &net.input_arcs {
        let _ = writeln!(out, "{}\t{}", net.places[p].name, net.transitions[t].name);
    }
    out.push_str("\n[output]\n");
    for &(t, p) in &net.output_arcs {
        let _ = writeln!(out, "{}\t{}", net.transitions[t].name, net.places[p].name);
    }
    if !net.colour_rules.is_empty() {
        out.push_str("\n[rules]\n");
        for (&p, rule) in &net.colour_rules {
            let alts: Vec<String> = rule.outcomes.iter().map(|o| join(o)).collect();
            let _ = writeln!(out, "{}\t{}", net.places[p].name, alts.join("|"));
        }
    }
    out.push_str("\n[marking]\n");
    for (p, &n) in m0.counts.iter().enumerate() {
        if n > 0 {
            let _ = writeln!(out, "{}\t{n}", net.places[p].name);
        }
    }
    if !m0.colours.is_empty() {
        out.push_str("\n[colours]\n");
        for &(p, c) in &m0.colours {
            let _ = writeln!(out, "{}\t{c}", net.places[p].name);
        }
    }
    out
}
