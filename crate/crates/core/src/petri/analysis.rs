use std::collections::{BTreeSet, HashSet, VecDeque};

use super::{enabled_transitions, Marking, PetriError, PetriNet};

/// Places-by-transitions matrix, `e[u][v] = out(v, u) - in(u, v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub entries: Vec<Vec<i64>>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn apply(&self, m0: &[u32], x: &[i64]) -> Vec<i64> {
        self.entries
            .iter()
            .zip(m0)
            .map(|(row, &m)| m as i64 + row.iter().zip(x).map(|(a, b)| a * b).sum::<i64>())
            .collect()
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| format!("{v:>3}"))
                    .collect::<Vec<_>>()
                    .join("")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn incidence_matrix(net: &PetriNet) -> IncidenceMatrix {
    let mut entries = vec![vec![0i64; net.transitions.len()]; net.places.len()];
    for &(p, t) in &net.input_arcs {
        entries[p][t] -= 1;
    }
    for &(t, p) in &net.output_arcs {
        entries[p][t] += 1;
    }
    IncidenceMatrix { entries }
}

/// Whether `m0 + A·X_σ` equals `expected` on agent-token counts.
pub fn check_state_equation(
    net: &PetriNet,
    m0: &Marking,
    sigma: &[usize],
    expected: &Marking,
) -> Result<bool, PetriError> {
    let b = net.places.len();
    for m in [m0, expected] {
        if m.counts.len() != b {
            return Err(PetriError::MarkingDimensionMismatch {
                expected: b,
                got: m.counts.len(),
            });
        }
    }
    let mut x = vec![0i64; net.transitions.len()];
    for &t in sigma {
        *x.get_mut(t).ok_or(PetriError::UnknownTransition(t))? += 1;
    }
    let got = incidence_matrix(net).apply(&m0.counts, &x);
    Ok(got
        .iter()
        .zip(&expected.counts)
        .all(|(&g, &e)| g == e as i64))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityNode {
    pub marking: Marking,
    pub parent: Option<usize>,
    pub via: Option<usize>,
    /// Equal to a marking met earlier in the exploration; not expanded.
    pub old: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityTree {
    pub nodes: Vec<ReachabilityNode>,
    pub roots: Vec<usize>,
}

impl ReachabilityTree {
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| Some((n.parent?, n.via?, i)))
    }

    /// Distinct agent-token count vectors over all nodes.
    pub fn count_vectors(&self) -> BTreeSet<Vec<u32>> {
        self.nodes.iter().map(|n| n.marking.counts.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityReport {
    pub tree: ReachabilityTree,
    /// Largest agent-token count in any place of any reachable marking.
    pub bound: u32,
    /// Same, counting colour tokens sitting in a place alongside agent tokens.
    pub bound_with_colour: u32,
    pub dead_transitions: BTreeSet<usize>,
}

/// Breadth-first reachability tree. Transitions are expanded in id order and
/// every sensing outcome yields its own child. A marking without colour tokens
/// is first sensed at its marked function places, which may give several roots.
pub fn reachability_analysis(
    net: &PetriNet,
    m0: &Marking,
    max_nodes: usize,
) -> Result<ReachabilityReport, PetriError> {
    if max_nodes == 0 {
        return Err(PetriError::NodeBudgetExceeded(0));
    }
    let starts = if m0.colours.is_empty() {
        net.initial_sensing(m0)?
    } else {
        vec![m0.clone()]
    };
    let mut nodes: Vec<ReachabilityNode> = Vec::new();
    let mut seen: HashSet<Marking> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut roots = Vec::new();
    for m in starts {
        let old = !seen.insert(m.clone());
        roots.push(nodes.len());
        if !old {
            queue.push_back(nodes.len());
        }
        nodes.push(ReachabilityNode {
            marking: m,
            parent: None,
            via: None,
            old,
        });
    }
    while let Some(i) = queue.pop_front() {
        let m = nodes[i].marking.clone();
        for t in enabled_transitions(net, &m)? {
            for child in net.successors(&m, t)? {
                if nodes.len() >= max_nodes {
                    return Err(PetriError::NodeBudgetExceeded(max_nodes));
                }
                let old = !seen.insert(child.clone());
                if !old {
                    queue.push_back(nodes.len());
                }
                nodes.push(ReachabilityNode {
                    marking: child,
                    parent: Some(i),
                    via: Some(t),
                    old,
                });
            }
        }
    }
    let tree = ReachabilityTree { nodes, roots };
    let bound = tree
        .nodes
        .iter()
        .flat_map(|n| n.marking.counts.iter().copied())
        .max()
        .unwrap_or(0);
    let bound_with_colour = tree
        .nodes
        .iter()
        .flat_map(|n| {
            let m = &n.marking;
            (0..m.counts.len()).map(move |p| {
                m.counts[p] + m.colours.iter().filter(|&&(q, _)| q == p).count() as u32
            })
        })
        .max()
        .unwrap_or(0);
    let fired: BTreeSet<usize> = tree.edges().map(|(_, t, _)| t).collect();
    let dead_transitions = (0..net.transitions.len())
        .filter(|t| !fired.contains(t))
        .collect();
    Ok(ReachabilityReport {
        tree,
        bound,
        bound_with_colour,
        dead_transitions,
    })
}
