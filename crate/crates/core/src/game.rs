//! Nim states, legal moves and the deduplicated graph of reachable states.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// How states are identified. `Multiset` ignores heap order (heaps kept
/// sorted non-increasing); `Tuple` keeps heaps positional.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StateSpaceMode {
    #[default]
    Multiset,
    Tuple,
}

impl StateSpaceMode {
    pub fn name(self) -> &'static str {
        match self {
            StateSpaceMode::Multiset => "multiset",
            StateSpaceMode::Tuple => "tuple",
        }
    }
}

impl fmt::Display for StateSpaceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StateSpaceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiset" => Ok(StateSpaceMode::Multiset),
            "tuple" => Ok(StateSpaceMode::Tuple),
            other => Err(format!("unknown state space `{other}` (expected multiset|tuple)")),
        }
    }
}

/// Heap sizes of a Nim position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GameState(Vec<u32>);

impl GameState {
    /// Wraps heap sizes as given, without canonicalization.
    pub fn from_raw(heaps: Vec<u32>) -> Self {
        GameState(heaps)
    }

    pub fn canonical(heaps: Vec<u32>, mode: StateSpaceMode) -> Self {
        canonicalize(heaps, mode)
    }

    pub fn heaps(&self) -> &[u32] {
        &self.0
    }

    /// Number of heaps, including empty ones.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&h| u64::from(h)).sum()
    }

    pub fn is_terminal(&self) -> bool {
        self.0.iter().all(|&h| h == 0)
    }

    /// Applies a move and canonicalizes the result.
    pub fn apply(&self, mv: Move, mode: StateSpaceMode) -> Result<GameState, IllegalMove> {
        let heap = mv.heap.checked_sub(1).filter(|&i| i < self.0.len()).ok_or(IllegalMove {
            mv,
            reason: "no such heap",
        })?;
        if mv.take == 0 {
            return Err(IllegalMove { mv, reason: "must remove at least one object" });
        }
        if mv.take > self.0[heap] {
            return Err(IllegalMove { mv, reason: "not enough objects in heap" });
        }
        let mut next = self.0.clone();
        next[heap] -= mv.take;
        Ok(canonicalize(next, mode))
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, h) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{h}")?;
        }
        f.write_str(")")
    }
}

/// Parses `4,4,4,4` (parentheses optional).
pub fn parse_heaps(text: &str) -> Result<Vec<u32>, String> {
    let inner = text.trim().trim_start_matches('(').trim_end_matches(')');
    let heaps = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|_| format!("invalid heap size `{s}`")))
        .collect::<Result<Vec<_>, _>>()?;
    if heaps.is_empty() {
        return Err("at least one heap is required".to_string());
    }
    Ok(heaps)
}

pub fn canonicalize(mut heaps: Vec<u32>, mode: StateSpaceMode) -> GameState {
    if mode == StateSpaceMode::Multiset {
        heaps.sort_unstable_by(|a, b| b.cmp(a));
    }
    GameState(heaps)
}

/// Removal of `take` objects from heap `heap` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub heap: usize,
    pub take: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("illegal move: heap {} take {}: {reason}", mv.heap, mv.take)]
pub struct IllegalMove {
    pub mv: Move,
    pub reason: &'static str,
}

/// Distinct successors with a representative move each, in the
/// deterministic child order: tuple children by heap index then removal
/// count, multiset children sorted lexicographically descending.
pub fn moves(state: &GameState, mode: StateSpaceMode) -> Vec<(Move, GameState)> {
    let mut out: Vec<(Move, GameState)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, &h) in state.0.iter().enumerate() {
        for take in 1..=h {
            let mv = Move { heap: i + 1, take };
            let mut next = state.0.clone();
            next[i] -= take;
            let child = canonicalize(next, mode);
            if seen.insert(child.clone()) {
                out.push((mv, child));
            }
        }
    }
    if mode == StateSpaceMode::Multiset {
        out.sort_by(|a, b| b.1.cmp(&a.1));
    }
    out
}

/// Distinct successor states in the deterministic child order.
pub fn children(state: &GameState, mode: StateSpaceMode) -> Vec<GameState> {
    moves(state, mode).into_iter().map(|(_, s)| s).collect()
}

/// All states reachable from a root, deduplicated, with child adjacency.
/// Node 0 is the root; nodes appear in breadth-first discovery order.
#[derive(Clone, Debug)]
pub struct GameGraph {
    mode: StateSpaceMode,
    nodes: Vec<GameState>,
    index: HashMap<GameState, usize>,
    children: Vec<Vec<usize>>,
}

impl GameGraph {
    pub fn build(root: &GameState, mode: StateSpaceMode) -> Self {
        let root = canonicalize(root.0.clone(), mode);
        let mut nodes = vec![root.clone()];
        let mut index = HashMap::from([(root, 0usize)]);
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let kids = children(&nodes[id], mode);
            let mut ids = Vec::with_capacity(kids.len());
            for kid in kids {
                let next = nodes.len();
                let kid_id = *index.entry(kid.clone()).or_insert_with(|| {
                    nodes.push(kid);
                    adjacency.push(Vec::new());
                    queue.push_back(next);
                    next
                });
                ids.push(kid_id);
            }
            adjacency[id] = ids;
        }
        GameGraph { mode, nodes, index, children: adjacency }
    }

    pub fn mode(&self) -> StateSpaceMode {
        self.mode
    }

    pub fn root(&self) -> &GameState {
        &self.nodes[0]
    }

    /// Heap count of every state in the graph.
    pub fn heap_count(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn nodes(&self) -> &[GameState] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn children_of(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn id_of(&self, state: &GameState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Node ids ordered by increasing total object count (a topological
    /// order from the terminal upwards).
    pub fn ids_by_total(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.nodes.len()).collect();
        ids.sort_by_key(|&i| (self.nodes[i].total(), i));
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use StateSpaceMode::*;

    fn s(h: &[u32]) -> GameState {
        GameState::from_raw(h.to_vec())
    }

    #[test]
    fn canonicalize_modes() {
        assert_eq!(canonicalize(vec![1, 4, 2, 4], Multiset), s(&[4, 4, 2, 1]));
        assert_eq!(canonicalize(vec![1, 4, 2, 4], Tuple), s(&[1, 4, 2, 4]));
        assert_eq!(canonicalize(vec![0, 0], Multiset), s(&[0, 0]));
    }

    #[test]
    fn children_of_two_one() {
        assert_eq!(children(&s(&[2, 1]), Tuple), vec![s(&[1, 1]), s(&[0, 1]), s(&[2, 0])]);
        // hand enumeration: (1,1), (0,1)->(1,0), (2,0); sorted descending
        assert_eq!(children(&s(&[2, 1]), Multiset), vec![s(&[2, 0]), s(&[1, 1]), s(&[1, 0])]);
        assert!(children(&s(&[0, 0, 0, 0]), Tuple).is_empty());
        assert!(children(&s(&[0, 0, 0, 0]), Multiset).is_empty());
    }

    #[test]
    fn graph_sizes() {
        let g = GameGraph::build(&s(&[4, 4, 4, 4]), Multiset);
        assert_eq!(g.node_count(), 70);

        let g = GameGraph::build(&s(&[2, 1]), Tuple);
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.edge_count(), 9);
        for st in [[2, 1], [1, 1], [0, 1], [2, 0], [1, 0], [0, 0]] {
            assert!(g.id_of(&s(&st)).is_some(), "{st:?} missing");
        }

        let g = GameGraph::build(&s(&[0, 0]), Tuple);
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
    }

    #[test]
    fn graph_canonicalizes_root() {
        let g = GameGraph::build(&s(&[1, 3]), Multiset);
        assert_eq!(g.root(), &s(&[3, 1]));
    }

    #[test]
    fn terminal_detection() {
        assert!(s(&[0, 0, 0, 0]).is_terminal());
        assert!(!s(&[0, 1]).is_terminal());
        assert!(!s(&[4, 4, 4, 4]).is_terminal());
    }

    #[test]
    fn multiset_counts_match_combinations_with_repetition() {
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
        }
        for heaps in 1..=4usize {
            for c in 0..=5u32 {
                let g = GameGraph::build(&GameState::from_raw(vec![c; heaps]), Multiset);
                assert_eq!(g.node_count() as u64, binom(heaps as u64 + c as u64, c as u64));
            }
        }
    }

    #[test]
    fn apply_rejects_illegal_moves() {
        let st = s(&[4, 4, 4, 4]);
        assert!(st.apply(Move { heap: 5, take: 1 }, Tuple).is_err());
        assert!(st.apply(Move { heap: 1, take: 0 }, Tuple).is_err());
        assert!(st.apply(Move { heap: 0, take: 1 }, Tuple).is_err());
        assert!(st.apply(Move { heap: 1, take: 5 }, Tuple).is_err());
        assert_eq!(st.apply(Move { heap: 2, take: 3 }, Tuple).unwrap(), s(&[4, 1, 4, 4]));
        assert_eq!(st.apply(Move { heap: 2, take: 3 }, Multiset).unwrap(), s(&[4, 4, 4, 1]));
    }

    #[test]
    fn heap_list_parsing() {
        assert_eq!(parse_heaps("4,4,4,4").unwrap(), vec![4, 4, 4, 4]);
        assert_eq!(parse_heaps("(2, 1)").unwrap(), vec![2, 1]);
        assert!(parse_heaps("").is_err());
        assert!(parse_heaps("1,-2").is_err());
    }
}
