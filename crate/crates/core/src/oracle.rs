//! Ground-truth P/N labels: retrograde analysis over a game graph, and the
//! closed-form xor-sum rule for Nim.

use std::collections::HashMap;

use crate::expr::EvalError;
use crate::fitness::{Classifier, PositionLabel};
use crate::game::{GameGraph, GameState};

/// P/N label for every node of a graph, indexed by node id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleLabeling {
    labels: Vec<PositionLabel>,
}

impl OracleLabeling {
    pub fn labels(&self) -> &[PositionLabel] {
        &self.labels
    }

    pub fn label(&self, id: usize) -> PositionLabel {
        self.labels[id]
    }
}

/// Backward induction in order of increasing object count: a node is P iff
/// none of its children is P (so the terminal is P).
pub fn retrograde_labels(graph: &GameGraph) -> OracleLabeling {
    let mut labels: Vec<Option<PositionLabel>> = vec![None; graph.node_count()];
    for id in graph.ids_by_total() {
        let any_p_child = graph.children_of(id).iter().any(|&k| {
            labels[k].expect("children have fewer objects and are labeled first") == PositionLabel::P
        });
        labels[id] = Some(if any_p_child { PositionLabel::N } else { PositionLabel::P });
    }
    OracleLabeling { labels: labels.into_iter().map(|l| l.expect("every node labeled")).collect() }
}

/// P iff the xor of all heap sizes is zero.
pub fn bouton_label(state: &GameState) -> PositionLabel {
    let sum = state.heaps().iter().fold(0u32, |acc, &h| acc ^ h);
    if sum == 0 {
        PositionLabel::P
    } else {
        PositionLabel::N
    }
}

/// Classifier backed by the xor-sum rule.
#[derive(Clone, Copy, Debug, Default)]
pub struct BoutonClassifier;

impl Classifier for BoutonClassifier {
    fn classify(&self, state: &GameState) -> Result<PositionLabel, EvalError> {
        Ok(bouton_label(state))
    }
}

/// Classifier backed by a retrograde labeling of one graph. States outside
/// the graph are labeled by building their own graph on demand.
#[derive(Clone, Debug)]
pub struct RetrogradeClassifier {
    table: HashMap<GameState, PositionLabel>,
    mode: crate::game::StateSpaceMode,
}

impl RetrogradeClassifier {
    pub fn new(graph: &GameGraph) -> Self {
        let labeling = retrograde_labels(graph);
        let table = graph
            .nodes()
            .iter()
            .cloned()
            .zip(labeling.labels.iter().copied())
            .collect();
        Self { table, mode: graph.mode() }
    }
}

impl Classifier for RetrogradeClassifier {
    fn classify(&self, state: &GameState) -> Result<PositionLabel, EvalError> {
        let canon = GameState::canonical(state.heaps().to_vec(), self.mode);
        if let Some(&l) = self.table.get(&canon) {
            return Ok(l);
        }
        let g = GameGraph::build(&canon, self.mode);
        Ok(retrograde_labels(&g).label(0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disagreement {
    pub state: GameState,
    pub oracle: PositionLabel,
    pub formula: PositionLabel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub disagreements: Vec<Disagreement>,
}

impl Verification {
    pub fn agrees(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compares a classifier with the retrograde labeling on every node and
/// reports all disagreements in node order. An evaluation error anywhere
/// is returned as `Err`.
pub fn verify_formula<C: Classifier + ?Sized>(
    classifier: &C,
    graph: &GameGraph,
) -> Result<Verification, EvalError> {
    let truth = retrograde_labels(graph);
    let got = classifier.label_graph(graph)?;
    let disagreements = graph
        .nodes()
        .iter()
        .zip(truth.labels.iter().zip(got.iter()))
        .filter(|(_, (t, g))| t != g)
        .map(|(s, (&t, &g))| Disagreement { state: s.clone(), oracle: t, formula: g })
        .collect();
    Ok(Verification { disagreements })
}
