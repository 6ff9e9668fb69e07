//! The four nets of the railway model with their initial markings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::{
    ColourId, ColourRule, Marking, PetriNet, Place, PlaceKind, Transition, TransitionKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Preset {
    PN1,
    PN2,
    PN3,
    PN4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::PN1, Preset::PN2, Preset::PN3, Preset::PN4];
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Preset::PN1 => 1,
            Preset::PN2 => 2,
            Preset::PN3 => 3,
            Preset::PN4 => 4,
        };
        write!(f, "PN{n}")
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PN1" => Ok(Preset::PN1),
            "PN2" => Ok(Preset::PN2),
            "PN3" => Ok(Preset::PN3),
            "PN4" => Ok(Preset::PN4),
            _ => Err(format!("unknown preset {s}")),
        }
    }
}

struct Builder {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    input_arcs: Vec<(usize, usize)>,
    output_arcs: Vec<(usize, usize)>,
    colour_rules: BTreeMap<usize, ColourRule>,
    guards: BTreeMap<usize, BTreeSet<ColourId>>,
}

impl Builder {
    /// `function` lists 1-based function places; everything else is plain.
    fn new(places: usize, transitions: usize, function: &[usize]) -> Self {
        Builder {
            places: (1..=places)
                .map(|i| Place {
                    name: format!("P{i}"),
                    kind: if function.contains(&i) {
                        PlaceKind::Function
                    } else {
                        PlaceKind::Plain
                    },
                })
                .collect(),
            transitions: (1..=transitions)
                .map(|i| Transition {
                    name: format!("Tr{i}"),
                    kind: TransitionKind::Immediate,
                })
                .collect(),
            input_arcs: Vec::new(),
            output_arcs: Vec::new(),
            colour_rules: BTreeMap::new(),
            guards: BTreeMap::new(),
        }
    }

    /// Transition `t` consumes from `ins` and produces into `outs` (1-based).
    fn arc(mut self, t: usize, ins: &[usize], outs: &[usize]) -> Self {
        for &p in ins {
            self.input_arcs.push((p - 1, t - 1));
        }
        for &p in outs {
            self.output_arcs.push((t - 1, p - 1));
        }
        self
    }

    fn rule(mut self, place: usize, colours: &[u32]) -> Self {
        self.colour_rules
            .insert(place - 1, ColourRule::alternatives(colours));
        self
    }

    fn rule_outcomes(mut self, place: usize, outcomes: Vec<Vec<u32>>) -> Self {
        self.colour_rules.insert(
            place - 1,
            ColourRule {
                outcomes: outcomes
                    .into_iter()
                    .map(|o| o.into_iter().map(ColourId).collect())
                    .collect(),
            },
        );
        self
    }

    fn guard(mut self, t: usize, colours: &[u32]) -> Self {
        self.transitions[t - 1].kind = TransitionKind::Colour;
        self.guards
            .insert(t - 1, colours.iter().map(|&c| ColourId(c)).collect());
        self
    }

    fn build(self) -> PetriNet {
        PetriNet {
            places: self.places,
            transitions: self.transitions,
            input_arcs: self.input_arcs,
            output_arcs: self.output_arcs,
            colour_rules: self.colour_rules,
            guards: self.guards,
        }
    }
}

pub fn build_preset(which: Preset) -> (PetriNet, Marking) {
    match which {
        Preset::PN1 => build_pn1(true),
        Preset::PN2 => pn2(),
        Preset::PN3 => pn3(),
        Preset::PN4 => pn4(),
    }
}

/// Railway network net. `priority_platform_free` is the external input behind
/// Tr13: whether a platform is free for the highest-priority train at a junction.
pub fn build_pn1(priority_platform_free: bool) -> (PetriNet, Marking) {
    let junction_outcome = if priority_platform_free {
        vec![vec![7]]
    } else {
        vec![vec![]]
    };
    let net = Builder::new(14, 19, &[5, 6, 7, 8, 9])
        .arc(1, &[1], &[3])
        .arc(2, &[2], &[4])
        .arc(3, &[3], &[5])
        .arc(4, &[4], &[6])
        .arc(5, &[5], &[8])
        .arc(6, &[5], &[7])
        .arc(7, &[6], &[7])
        .arc(8, &[6], &[9])
        .arc(9, &[8], &[13])
        .arc(10, &[8], &[11])
        .arc(11, &[9], &[14])
        .arc(12, &[9], &[12])
        .arc(13, &[7], &[11])
        .arc(14, &[13], &[11])
        .arc(15, &[12], &[14])
        .arc(16, &[11], &[14])
        .arc(17, &[14], &[4])
        .arc(18, &[14], &[10])
        .arc(19, &[10], &[1])
        .rule(5, &[1, 2])
        .rule(6, &[3, 4])
        .rule_outcomes(7, junction_outcome)
        .rule(8, &[5, 6])
        .rule(9, &[9, 8])
        .guard(5, &[1])
        .guard(6, &[2])
        .guard(7, &[3])
        .guard(8, &[4])
        .guard(9, &[5])
        .guard(10, &[6])
        .guard(11, &[8])
        .guard(12, &[9])
        .guard(13, &[7])
        .build();
    let mut m0 = vec![0; 14];
    m0[0] = 1;
    m0[1] = 1;
    (net, Marking::new(m0))
}

fn pn2() -> (PetriNet, Marking) {
    let net = Builder::new(7, 8, &[1, 2, 3, 4])
        // read arc: sensing "no platform" leaves the train where it is
        .arc(1, &[1], &[1])
        .arc(2, &[1, 2], &[3])
        .arc(3, &[3], &[2, 4])
        .arc(4, &[4], &[5])
        .arc(5, &[4], &[7])
        .arc(6, &[5], &[6])
        .arc(7, &[6], &[1])
        .arc(8, &[7], &[4])
        .rule(1, &[1, 2])
        .rule(2, &[3, 4])
        .rule(3, &[5])
        .rule(4, &[6, 7])
        .guard(1, &[1, 3])
        .guard(2, &[2, 4])
        .guard(3, &[5])
        .guard(4, &[6])
        .guard(5, &[7])
        .build();
    (net, Marking::new(vec![1, 1, 0, 0, 0, 0, 0]))
}

fn pn3() -> (PetriNet, Marking) {
    let net = Builder::new(6, 5, &[3, 5])
        .arc(1, &[1, 2], &[3])
        .arc(2, &[3], &[1, 4])
        .arc(3, &[1, 4], &[5])
        .arc(4, &[5], &[5, 6])
        .arc(5, &[5], &[5, 6])
        .rule(3, &[1])
        .rule(5, &[2, 3])
        .guard(2, &[1])
        .guard(4, &[2])
        .guard(5, &[3])
        .build();
    (net, Marking::new(vec![2, 3, 0, 0, 0, 0]))
}

fn pn4() -> (PetriNet, Marking) {
    let net = Builder::new(6, 3, &[1])
        .arc(1, &[1, 2], &[3])
        .arc(2, &[3, 5], &[4])
        .arc(3, &[4], &[2, 6])
        .rule(1, &[1])
        .guard(1, &[1])
        .build();
    (net, Marking::new(vec![2, 1, 0, 0, 1, 0]))
}
