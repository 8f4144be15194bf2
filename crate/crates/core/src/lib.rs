//! Evolving P/N-position classifiers for Nim with Multi Expression
//! Programming.
//!
//! A chromosome ([`expr::Chromosome`]) encodes an integer expression over
//! the heap sizes. It classifies a state as a P-position when the expression
//! evaluates to zero. Fitness ([`fitness`]) counts how often that labeling
//! breaks the winning-strategy rules on the graph of reachable states
//! ([`game::GameGraph`]), so no ground-truth labels are needed to evolve
//! one. The [`oracle`] module supplies ground truth anyway, for checking.

pub mod cli;
pub mod evolution;
pub mod experiments;
pub mod expr;
pub mod fitness;
pub mod game;
pub mod genetics;
pub mod oracle;
pub mod play;

pub use evolution::{evolve, EvolutionConfig, RunResult};
pub use expr::{parse_chromosome, Chromosome, Gene, Op, Terminal};
pub use fitness::{fitness, Classifier, Fitness, FitnessBreakdown, PositionLabel};
pub use game::{GameGraph, GameState, StateSpaceMode};
pub use oracle::{bouton_label, retrograde_labels, verify_formula};
