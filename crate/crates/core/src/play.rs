//! Move selection from a P/N classifier, strategy registry, and game play.
//!
//! Strategies are trait objects registered by name, so the CLI can pick an
//! opponent (`random`, `oracle`, `bouton`, `formula`) at runtime.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::expr::{Chromosome, EvalError};
use crate::fitness::{Classifier, PositionLabel};
use crate::game::{moves, GameGraph, GameState, IllegalMove, Move, StateSpaceMode};
use crate::genetics::{random_source, RandomSource};
use crate::oracle::{BoutonClassifier, RetrogradeClassifier};

#[derive(Debug, Error)]
pub enum PlayError {
    #[error("no legal move from terminal state {0}")]
    Terminal(GameState),
    #[error("classifier failed: {0}")]
    Eval(#[from] EvalError),
    #[error("strategy `{strategy}` made an {source}")]
    Illegal { strategy: String, source: IllegalMove },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy `{0}` needs a formula")]
    MissingFormula(String),
}

/// First child (in the game module's deterministic order) the classifier labels
/// P; the first child when none is.
pub fn best_move<C: Classifier + ?Sized>(
    classifier: &C,
    state: &GameState,
    mode: StateSpaceMode,
) -> Result<(Move, GameState), PlayError> {
    let options = moves(state, mode);
    if options.is_empty() {
        return Err(PlayError::Terminal(state.clone()));
    }
    for (mv, child) in &options {
        if classifier.classify(child)? == PositionLabel::P {
            return Ok((*mv, child.clone()));
        }
    }
    Ok(options.into_iter().next().expect("non-terminal state has a move"))
}

pub trait Strategy {
    fn name(&self) -> &str;

    /// Picks a move from a non-terminal state.
    fn choose(&mut self, state: &GameState, mode: StateSpaceMode) -> Result<(Move, GameState), PlayError>;
}

/// Plays the move `best_move` picks for a classifier.
pub struct ClassifierStrategy {
    name: String,
    classifier: Box<dyn Classifier>,
}

impl ClassifierStrategy {
    pub fn new(name: impl Into<String>, classifier: Box<dyn Classifier>) -> Self {
        Self { name: name.into(), classifier }
    }
}

impl Strategy for ClassifierStrategy {
    fn name(&self) -> &str {
        &self.name
    }

    fn choose(&mut self, state: &GameState, mode: StateSpaceMode) -> Result<(Move, GameState), PlayError> {
        best_move(self.classifier.as_ref(), state, mode)
    }
}

/// Uniform choice among the distinct successor states.
pub struct RandomStrategy {
    rng: RandomSource,
}

impl RandomStrategy {
    pub fn new(seed: u64) -> Self {
        Self { rng: random_source(seed) }
    }
}

impl Strategy for RandomStrategy {
    fn name(&self) -> &str {
        "random"
    }

    fn choose(&mut self, state: &GameState, mode: StateSpaceMode) -> Result<(Move, GameState), PlayError> {
        use rand::seq::SliceRandom;
        moves(state, mode)
            .choose(&mut self.rng)
            .cloned()
            .ok_or_else(|| PlayError::Terminal(state.clone()))
    }
}

/// Inputs a strategy factory may draw on.
#[derive(Clone, Debug)]
pub struct StrategyContext {
    pub formula: Option<Chromosome>,
    pub seed: u64,
    pub start: GameState,
    pub mode: StateSpaceMode,
}

type Factory = Box<dyn Fn(&StrategyContext) -> Result<Box<dyn Strategy>, PlayError> + Send + Sync>;

pub struct StrategyRegistry {
    factories: BTreeMap<String, Factory>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// Registry with `formula`, `bouton`, `oracle` and `random`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("formula", |ctx| {
            let f = ctx.formula.clone().ok_or_else(|| PlayError::MissingFormula("formula".into()))?;
            Ok(Box::new(ClassifierStrategy::new("formula", Box::new(f))))
        });
        r.register("bouton", |_| Ok(Box::new(ClassifierStrategy::new("bouton", Box::new(BoutonClassifier)))));
        r.register("oracle", |ctx| {
            let graph = GameGraph::build(&ctx.start, ctx.mode);
            Ok(Box::new(ClassifierStrategy::new("oracle", Box::new(RetrogradeClassifier::new(&graph)))))
        });
        r.register("random", |ctx| Ok(Box::new(RandomStrategy::new(ctx.seed))));
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&StrategyContext) -> Result<Box<dyn Strategy>, PlayError> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn create(&self, name: &str, ctx: &StrategyContext) -> Result<Box<dyn Strategy>, PlayError> {
        let factory = self.factories.get(name).ok_or_else(|| PlayError::UnknownStrategy(name.to_string()))?;
        factory(ctx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Player {
    First,
    Second,
}

impl Player {
    fn other(self) -> Self {
        match self {
            Player::First => Player::Second,
            Player::Second => Player::First,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::First => "first",
            Player::Second => "second",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameRecord {
    pub winner: Player,
    pub transcript: Vec<(Move, GameState)>,
}

pub fn transcript_line(mv: Move, after: &GameState) -> String {
    format!("move: heap {} take {} -> {}", mv.heap, mv.take, after)
}

impl GameRecord {
    pub fn transcript_lines(&self) -> Vec<String> {
        self.transcript.iter().map(|(mv, s)| transcript_line(*mv, s)).collect()
    }
}

/// Alternates `first` and `second` from `start` until no move is left.
/// Under normal play whoever made the last move wins; from a terminal
/// start the second player wins.
pub fn play_game(
    first: &mut dyn Strategy,
    second: &mut dyn Strategy,
    start: &GameState,
    mode: StateSpaceMode,
) -> Result<GameRecord, PlayError> {
    let mut state = GameState::canonical(start.heaps().to_vec(), mode);
    let mut transcript = Vec::new();
    let mut to_move = Player::First;
    while !state.is_terminal() {
        let strategy: &mut dyn Strategy = match to_move {
            Player::First => &mut *first,
            Player::Second => &mut *second,
        };
        let (mv, next) = strategy.choose(&state, mode)?;
        let legal = state
            .apply(mv, mode)
            .map_err(|source| PlayError::Illegal { strategy: strategy.name().to_string(), source })?;
        if legal != next {
            return Err(PlayError::Illegal {
                strategy: strategy.name().to_string(),
                source: IllegalMove { mv, reason: "reported state does not match the move" },
            });
        }
        transcript.push((mv, next.clone()));
        state = next;
        to_move = to_move.other();
    }
    Ok(GameRecord { winner: to_move.other(), transcript })
}

/// True when the classifier's move selector, moving first from `state`,
/// wins against every possible sequence of opponent replies.
pub fn wins_against_every_opponent<C: Classifier + ?Sized>(
    classifier: &C,
    state: &GameState,
    mode: StateSpaceMode,
) -> Result<bool, PlayError> {
    fn go<C: Classifier + ?Sized>(
        c: &C,
        s: &GameState,
        mode: StateSpaceMode,
        memo: &mut HashMap<GameState, bool>,
    ) -> Result<bool, PlayError> {
        if s.is_terminal() {
            return Ok(false);
        }
        if let Some(&w) = memo.get(s) {
            return Ok(w);
        }
        let (_, after) = best_move(c, s, mode)?;
        let mut win = true;
        for (_, reply) in moves(&after, mode) {
            if !go(c, &reply, mode, memo)? {
                win = false;
                break;
            }
        }
        memo.insert(s.clone(), win);
        Ok(win)
    }
    let start = GameState::canonical(state.heaps().to_vec(), mode);
    go(classifier, &start, mode, &mut HashMap::new())
}

/// Line-oriented human-vs-machine game. The human enters `<heap> <count>`;
/// malformed or illegal input re-prompts with the state unchanged. Returns
/// the winner, or `None` if input ends before the game does.
pub fn interactive_session<C, R, W>(
    classifier: &C,
    start: &GameState,
    mode: StateSpaceMode,
    human_first: bool,
    input: &mut R,
    out: &mut W,
) -> io::Result<Option<Player>>
where
    C: Classifier + ?Sized,
    R: BufRead + ?Sized,
    W: Write + ?Sized,
{
    let mut state = GameState::canonical(start.heaps().to_vec(), mode);
    let human = if human_first { Player::First } else { Player::Second };
    let mut to_move = Player::First;
    writeln!(out, "start: {state}")?;
    while !state.is_terminal() {
        if to_move == human {
            write!(out, "your move (heap count): ")?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                writeln!(out)?;
                return Ok(None);
            }
            let mv = match parse_human_move(&line) {
                Some(mv) => mv,
                None => {
                    writeln!(out, "expected two numbers: <heap> <count>")?;
                    continue;
                }
            };
            match state.apply(mv, mode) {
                Ok(next) => {
                    writeln!(out, "{}", transcript_line(mv, &next))?;
                    state = next;
                }
                Err(e) => {
                    writeln!(out, "{e}; state is still {state}")?;
                    continue;
                }
            }
        } else {
            let (mv, next) = best_move(classifier, &state, mode).map_err(|e| io::Error::other(e.to_string()))?;
            writeln!(out, "{}", transcript_line(mv, &next))?;
            state = next;
        }
        to_move = to_move.other();
    }
    let winner = to_move.other();
    writeln!(out, "{} wins", if winner == human { "you" } else { "machine" })?;
    Ok(Some(winner))
}

fn parse_human_move(line: &str) -> Option<Move> {
    let mut it = line.split_whitespace();
    let heap = it.next()?.parse().ok()?;
    let take = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some(Move { heap, take })
}
