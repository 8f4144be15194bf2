//! Violation-count fitness over a game graph.
//!
//! A classifier labels every node P or N. The labeling is charged one
//! violation per:
//! - edge from a P node to a P node (a move out of a P-position must reach an N-position);
//! - non-terminal N node with no P child (an N-position needs a move into a P-position);
//! - terminal node labeled N (the final position is a P-position).

use std::cmp::Ordering;
use std::fmt;

use crate::expr::{Chromosome, EvalError};
use crate::game::{GameGraph, GameState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PositionLabel {
    P,
    N,
}

impl PositionLabel {
    pub fn from_value(v: i64) -> Self {
        if v == 0 {
            PositionLabel::P
        } else {
            PositionLabel::N
        }
    }
}

impl fmt::Display for PositionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PositionLabel::P => "P",
            PositionLabel::N => "N",
        })
    }
}

/// Anything that labels game states as P- or N-positions.
pub trait Classifier: Send + Sync {
    fn classify(&self, state: &GameState) -> Result<PositionLabel, EvalError>;

    /// Labels every node of `graph`, indexed by node id. Implementors may
    /// override this with a faster batched path.
    fn label_graph(&self, graph: &GameGraph) -> Result<Vec<PositionLabel>, EvalError> {
        graph.nodes().iter().map(|s| self.classify(s)).collect()
    }
}

impl Classifier for Chromosome {
    fn classify(&self, state: &GameState) -> Result<PositionLabel, EvalError> {
        self.evaluate(state).map(PositionLabel::from_value)
    }

    fn label_graph(&self, graph: &GameGraph) -> Result<Vec<PositionLabel>, EvalError> {
        let active = self.active_mask();
        let mut scratch = Vec::with_capacity(self.len());
        graph
            .nodes()
            .iter()
            .map(|s| self.evaluate_with(s, &active, &mut scratch).map(PositionLabel::from_value))
            .collect()
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn classify(&self, state: &GameState) -> Result<PositionLabel, EvalError> {
        (**self).classify(state)
    }

    fn label_graph(&self, graph: &GameGraph) -> Result<Vec<PositionLabel>, EvalError> {
        (**self).label_graph(graph)
    }
}

/// Fitness to be minimized. `Invalid` (the formula failed to evaluate
/// somewhere) ranks below every violation count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fitness {
    Violations(u64),
    Invalid,
}

impl Fitness {
    pub fn is_perfect(self) -> bool {
        self == Fitness::Violations(0)
    }

    pub fn violations(self) -> Option<u64> {
        match self {
            Fitness::Violations(v) => Some(v),
            Fitness::Invalid => None,
        }
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Fitness::Violations(a), Fitness::Violations(b)) => a.cmp(b),
            (Fitness::Violations(_), Fitness::Invalid) => Ordering::Less,
            (Fitness::Invalid, Fitness::Violations(_)) => Ordering::Greater,
            (Fitness::Invalid, Fitness::Invalid) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fitness::Violations(v) => write!(f, "{v}"),
            Fitness::Invalid => f.write_str("invalid"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FitnessBreakdown {
    pub rule_i: u64,
    pub rule_ii: u64,
    pub rule_iii: u64,
}

impl FitnessBreakdown {
    pub fn total(&self) -> u64 {
        self.rule_i + self.rule_ii + self.rule_iii
    }
}

/// Counts rule violations of a complete labeling (indexed by node id).
pub fn count_violations(graph: &GameGraph, labels: &[PositionLabel]) -> FitnessBreakdown {
    use PositionLabel::*;
    let mut b = FitnessBreakdown::default();
    for (id, &label) in labels.iter().enumerate() {
        let kids = graph.children_of(id);
        match label {
            P => b.rule_i += kids.iter().filter(|&&k| labels[k] == P).count() as u64,
            N if kids.is_empty() => b.rule_iii += 1,
            N => {
                if kids.iter().all(|&k| labels[k] == N) {
                    b.rule_ii += 1;
                }
            }
        }
    }
    b
}

/// Fitness with per-rule breakdown (`None` when the classifier is invalid).
pub fn evaluate_fitness<C: Classifier + ?Sized>(
    classifier: &C,
    graph: &GameGraph,
) -> (Fitness, Option<FitnessBreakdown>) {
    match classifier.label_graph(graph) {
        Ok(labels) => {
            let b = count_violations(graph, &labels);
            (Fitness::Violations(b.total()), Some(b))
        }
        Err(_) => (Fitness::Invalid, None),
    }
}

pub fn fitness<C: Classifier + ?Sized>(classifier: &C, graph: &GameGraph) -> Fitness {
    evaluate_fitness(classifier, graph).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_chromosome, Gene, Op, Terminal};
    use crate::game::StateSpaceMode::{self, *};

    fn chrom(text: &str) -> Chromosome {
        parse_chromosome(text).unwrap().chromosome
    }

    fn graph(h: &[u32], mode: StateSpaceMode) -> GameGraph {
        GameGraph::build(&GameState::from_raw(h.to_vec()), mode)
    }

    fn s(h: &[u32]) -> GameState {
        GameState::from_raw(h.to_vec())
    }

    const WORKED: &str = "1: a1\n2: a2\n3: * 1 2\n4: - 1 3";
    const XOR4: &str = "1: a1\n2: a2\n3: xor 1 2\n4: a3\n5: xor 3 4\n6: a4\n7: xor 5 6";
    const XOR_MINUS: &str = "1: a1\n2: a2\n3: xor 1 2\n4: a3\n5: xor 3 4\n6: a4\n7: - 5 6";

    #[test]
    fn classify_examples() {
        let c = chrom(WORKED);
        assert_eq!(c.classify(&s(&[2, 1])).unwrap(), PositionLabel::P);
        assert_eq!(c.classify(&s(&[2, 0])).unwrap(), PositionLabel::N);
        let n = Chromosome::new(vec![Gene::Terminal(Terminal::NumHeaps)]).unwrap();
        assert_eq!(n.classify(&s(&[0, 0, 0, 0])).unwrap(), PositionLabel::N);
    }

    #[test]
    fn worked_example_is_four() {
        let (f, b) = evaluate_fitness(&chrom(WORKED), &graph(&[2, 1], Tuple));
        assert_eq!(f, Fitness::Violations(4));
        assert_eq!(b.unwrap(), FitnessBreakdown { rule_i: 4, rule_ii: 0, rule_iii: 0 });
    }

    #[test]
    fn known_correct_formulas_score_zero() {
        let g = graph(&[4, 4, 4, 4], Multiset);
        assert_eq!(fitness(&chrom(XOR4), &g), Fitness::Violations(0));
        assert_eq!(fitness(&chrom(XOR_MINUS), &g), Fitness::Violations(0));
    }

    #[test]
    fn constant_formulas() {
        let g = graph(&[4, 4, 4, 4], Multiset);
        let n = Chromosome::new(vec![Gene::Terminal(Terminal::NumHeaps)]).unwrap();
        let (f, b) = evaluate_fitness(&n, &g);
        assert_eq!(f, Fitness::Violations(70));
        assert_eq!(b.unwrap(), FitnessBreakdown { rule_i: 0, rule_ii: 69, rule_iii: 1 });

        let zero = chrom("1: a1\n2: - 1 1");
        let (f, b) = evaluate_fitness(&zero, &graph(&[2, 1], Tuple));
        assert_eq!(f, Fitness::Violations(9));
        assert_eq!(b.unwrap().rule_i, 9);
    }

    #[test]
    fn division_by_zero_is_invalid() {
        let c = Chromosome::new(vec![
            Gene::Terminal(Terminal::Heap(1)),
            Gene::Terminal(Terminal::Heap(2)),
            Gene::Function { op: Op::Div, args: vec![0, 1] },
        ])
        .unwrap();
        assert_eq!(evaluate_fitness(&c, &graph(&[2, 1], Tuple)), (Fitness::Invalid, None));
    }

    #[test]
    fn ordering() {
        assert!(Fitness::Violations(0) < Fitness::Violations(1));
        assert!(Fitness::Violations(u64::MAX) < Fitness::Invalid);
        assert_eq!(Fitness::Invalid.cmp(&Fitness::Invalid), Ordering::Equal);
    }
}
