//! Coloured Petri nets with agent tokens and decision-only colour tokens.
//!
//! Colour tokens are produced by function places when an agent token arrives
//! through an output arc (read arcs, where a transition both consumes from and
//! returns to the same place, do not count as arrivals). Every firing discards
//! all colour tokens present before it, so a colour is only ever used for the
//! decision immediately following its generation.

mod analysis;
mod presets;

pub use analysis::{
    check_state_equation, incidence_matrix, reachability_analysis, IncidenceMatrix,
    ReachabilityNode, ReachabilityReport, ReachabilityTree,
};
pub use presets::{build_pn1, build_preset, Preset};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PetriError {
    #[error("marking has {got} places, net has {expected}")]
    MarkingDimensionMismatch { expected: usize, got: usize },
    #[error("transition {transition} is not enabled (sequence index {index})")]
    TransitionNotEnabled { index: usize, transition: String },
    #[error("unknown transition index {0}")]
    UnknownTransition(usize),
    #[error("reachability exploration exceeded {0} nodes")]
    NodeBudgetExceeded(usize),
    #[error("invalid net: {0}")]
    InvalidNet(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColourId(pub u32);

impl fmt::Display for ColourId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ct{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaceKind {
    Plain,
    Function,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionKind {
    Immediate,
    Colour,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub name: String,
    pub kind: PlaceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    pub kind: TransitionKind,
}

/// The sensing function of a function place: one of `outcomes` is produced on
/// every arrival. An outcome may be empty (nothing sensed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColourRule {
    pub outcomes: Vec<Vec<ColourId>>,
}

impl ColourRule {
    pub fn alternatives(colours: &[u32]) -> Self {
        ColourRule {
            outcomes: colours.iter().map(|&c| vec![ColourId(c)]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetriNet {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    /// `(place, transition)` arcs.
    pub input_arcs: Vec<(usize, usize)>,
    /// `(transition, place)` arcs.
    pub output_arcs: Vec<(usize, usize)>,
    pub colour_rules: BTreeMap<usize, ColourRule>,
    /// A colour transition is enabled by any one colour of its guard set.
    pub guards: BTreeMap<usize, BTreeSet<ColourId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Marking {
    pub counts: Vec<u32>,
    /// `(place, colour)` pairs currently present.
    pub colours: BTreeSet<(usize, ColourId)>,
}

impl Marking {
    pub fn new(counts: Vec<u32>) -> Self {
        Marking {
            counts,
            colours: BTreeSet::new(),
        }
    }

    pub fn with_colour(mut self, place: usize, colour: u32) -> Self {
        self.colours.insert((place, ColourId(colour)));
        self
    }

    pub fn has_colour(&self, c: ColourId) -> bool {
        self.colours.iter().any(|&(_, x)| x == c)
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<String> = self.counts.iter().map(u32::to_string).collect();
        write!(f, "[{}]", counts.join(", "))?;
        if !self.colours.is_empty() {
            let cs: Vec<String> = self
                .colours
                .iter()
                .map(|(p, c)| format!("{c}@P{}", p + 1))
                .collect();
            write!(f, " {{{}}}", cs.join(", "))?;
        }
        Ok(())
    }
}

/// Result of [`fire_sequence`]: final marking plus the occurrence vector X_σ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceOutcome {
    pub marking: Marking,
    pub occurrences: Vec<i64>,
}

impl PetriNet {
    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    /// Distinct colour tokens any rule can produce.
    pub fn colour_count(&self) -> usize {
        self.colour_rules
            .values()
            .flat_map(|r| r.outcomes.iter().flatten())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<(), PetriError> {
        let (b, z) = (self.places.len(), self.transitions.len());
        for &(p, t) in &self.input_arcs {
            if p >= b || t >= z {
                return Err(PetriError::InvalidNet(format!("input arc ({p}, {t})")));
            }
        }
        for &(t, p) in &self.output_arcs {
            if p >= b || t >= z {
                return Err(PetriError::InvalidNet(format!("output arc ({t}, {p})")));
            }
        }
        for (t, tr) in self.transitions.iter().enumerate() {
            let guarded = self.guards.get(&t).is_some_and(|g| !g.is_empty());
            match tr.kind {
                TransitionKind::Colour if !guarded => {
                    return Err(PetriError::InvalidNet(format!("{} has no guard", tr.name)))
                }
                TransitionKind::Immediate if guarded => {
                    return Err(PetriError::InvalidNet(format!(
                        "immediate {} has a guard",
                        tr.name
                    )))
                }
                _ => {}
            }
        }
        for &p in self.colour_rules.keys() {
            if p >= b || self.places[p].kind != PlaceKind::Function {
                return Err(PetriError::InvalidNet(format!("colour rule on place {p}")));
            }
        }
        Ok(())
    }

    fn check_dim(&self, m: &Marking) -> Result<(), PetriError> {
        if m.counts.len() != self.places.len() {
            return Err(PetriError::MarkingDimensionMismatch {
                expected: self.places.len(),
                got: m.counts.len(),
            });
        }
        Ok(())
    }

    fn input_need(&self, t: usize) -> BTreeMap<usize, u32> {
        let mut need = BTreeMap::new();
        for &(p, tr) in &self.input_arcs {
            if tr == t {
                *need.entry(p).or_insert(0) += 1;
            }
        }
        need
    }

    fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        let tokens_ok = self
            .input_need(t)
            .iter()
            .all(|(&p, &n)| m.counts[p] >= n);
        let guard_ok = match self.transitions[t].kind {
            TransitionKind::Immediate => true,
            TransitionKind::Colour => self
                .guards
                .get(&t)
                .is_some_and(|g| g.iter().any(|&c| m.has_colour(c))),
        };
        tokens_ok && guard_ok
    }

    /// Places receiving an agent token from `t` through a non-read arc.
    fn arrivals(&self, t: usize) -> BTreeSet<usize> {
        let inputs: BTreeSet<usize> = self
            .input_arcs
            .iter()
            .filter(|&&(_, tr)| tr == t)
            .map(|&(p, _)| p)
            .collect();
        self.output_arcs
            .iter()
            .filter(|&&(tr, p)| tr == t && !inputs.contains(&p))
            .map(|&(_, p)| p)
            .collect()
    }

    /// Every combination of colour outcomes for the given arriving places.
    fn sensing_outcomes(&self, places: &BTreeSet<usize>) -> Vec<BTreeSet<(usize, ColourId)>> {
        let mut combos = vec![BTreeSet::new()];
        for &p in places {
            let Some(rule) = self.colour_rules.get(&p) else {
                continue;
            };
            if rule.outcomes.is_empty() {
                continue;
            }
            let mut next = Vec::with_capacity(combos.len() * rule.outcomes.len());
            for base in &combos {
                for out in &rule.outcomes {
                    let mut c = base.clone();
                    c.extend(out.iter().map(|&col| (p, col)));
                    next.push(c);
                }
            }
            combos = next;
        }
        combos
    }

    /// Markings obtained by sensing at every marked function place of `m`.
    /// Used to give an initial marking its colour tokens.
    pub fn initial_sensing(&self, m: &Marking) -> Result<Vec<Marking>, PetriError> {
        self.check_dim(m)?;
        let marked: BTreeSet<usize> = (0..self.places.len())
            .filter(|&p| m.counts[p] > 0 && self.colour_rules.contains_key(&p))
            .collect();
        Ok(self
            .sensing_outcomes(&marked)
            .into_iter()
            .map(|colours| Marking {
                counts: m.counts.clone(),
                colours,
            })
            .collect())
    }

    /// All markings reachable by one firing of `t`, one per sensing outcome.
    pub fn successors(&self, m: &Marking, t: usize) -> Result<Vec<Marking>, PetriError> {
        self.check_dim(m)?;
        if t >= self.transitions.len() {
            return Err(PetriError::UnknownTransition(t));
        }
        if !self.is_enabled(m, t) {
            return Err(PetriError::TransitionNotEnabled {
                index: 0,
                transition: self.transitions[t].name.clone(),
            });
        }
        let mut counts = m.counts.clone();
        for &(p, tr) in &self.input_arcs {
            if tr == t {
                counts[p] -= 1;
            }
        }
        for &(tr, p) in &self.output_arcs {
            if tr == t {
                counts[p] += 1;
            }
        }
        Ok(self
            .sensing_outcomes(&self.arrivals(t))
            .into_iter()
            .map(|colours| Marking {
                counts: counts.clone(),
                colours,
            })
            .collect())
    }
}

pub fn enabled_transitions(net: &PetriNet, m: &Marking) -> Result<BTreeSet<usize>, PetriError> {
    net.check_dim(m)?;
    Ok((0..net.transitions.len())
        .filter(|&t| net.is_enabled(m, t))
        .collect())
}

/// Fires `t`, taking the first outcome of every sensing rule.
pub fn fire(net: &PetriNet, m: &Marking, t: usize) -> Result<Marking, PetriError> {
    Ok(net.successors(m, t)?.swap_remove(0))
}

/// Fires `sigma` in order. Sensing picks, among its outcomes, the first one that
/// enables the next transition of the sequence. A marking without colour tokens
/// is sensed first at its marked function places.
pub fn fire_sequence(
    net: &PetriNet,
    m0: &Marking,
    sigma: &[usize],
) -> Result<SequenceOutcome, PetriError> {
    net.check_dim(m0)?;
    let mut occurrences = vec![0i64; net.transitions.len()];
    let pick = |options: Vec<Marking>, next: Option<usize>| -> Marking {
        match next {
            Some(t) => {
                let idx = options
                    .iter()
                    .position(|m| net.is_enabled(m, t))
                    .unwrap_or(0);
                options.into_iter().nth(idx).unwrap()
            }
            None => options.into_iter().next().unwrap(),
        }
    };
    let mut m = if m0.colours.is_empty() {
        pick(net.initial_sensing(m0)?, sigma.first().copied())
    } else {
        m0.clone()
    };
    for (i, &t) in sigma.iter().enumerate() {
        if t >= net.transitions.len() {
            return Err(PetriError::UnknownTransition(t));
        }
        if !net.is_enabled(&m, t) {
            return Err(PetriError::TransitionNotEnabled {
                index: i,
                transition: net.transitions[t].name.clone(),
            });
        }
        occurrences[t] += 1;
        m = pick(net.successors(&m, t)?, sigma.get(i + 1).copied());
    }
    Ok(SequenceOutcome {
        marking: m,
        occurrences,
    })
}

/// Resolves transition names such as `Tr3` (or bare indices `3`) to 0-based ids.
pub fn parse_sequence(net: &PetriNet, text: &str) -> Result<Vec<usize>, PetriError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            net.transition_index(s)
                .or_else(|| {
                    s.trim_start_matches("Tr")
                        .parse::<usize>()
                        .ok()
                        .filter(|&n| n >= 1 && n <= net.transitions.len())
                        .map(|n| n - 1)
                })
                .ok_or_else(|| PetriError::InvalidNet(format!("unknown transition {s}")))
        })
        .collect()
}
