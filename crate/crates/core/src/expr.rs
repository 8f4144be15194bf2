//! MEP chromosomes: linear programs where every gene is either a terminal
//! (an input binding) or an operator applied to earlier genes.
//!
//! The expression a chromosome encodes is the expression of its last gene.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::game::GameState;

/// Evaluation value: two's-complement 64-bit, wrapping arithmetic.
pub type Value = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Terminal {
    /// Number of heaps in the game instance (fixed, even when heaps are empty).
    NumHeaps,
    /// Size of heap `i`, 1-based.
    Heap(usize),
}

impl Terminal {
    /// All terminals available for a game with `n` heaps: `n, a1, .., an`.
    pub fn all(n: usize) -> Vec<Terminal> {
        std::iter::once(Terminal::NumHeaps)
            .chain((1..=n).map(Terminal::Heap))
            .collect()
    }

    fn bind(self, state: &GameState) -> Result<Value, EvalError> {
        match self {
            Terminal::NumHeaps => Ok(state.len() as Value),
            Terminal::Heap(i) => state
                .heaps()
                .get(i.wrapping_sub(1))
                .map(|&h| h as Value)
                .ok_or(EvalError::HeapOutOfRange { index: i, heaps: state.len() }),
        }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::NumHeaps => f.write_str("n"),
            Terminal::Heap(i) => write!(f, "a{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Xor,
    Not,
}

impl Op {
    pub const ALL: [Op; 9] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::Mod,
        Op::And,
        Op::Or,
        Op::Xor,
        Op::Not,
    ];

    pub fn arity(self) -> usize {
        match self {
            Op::Not => 1,
            _ => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "div",
            Op::Mod => "mod",
            Op::And => "and",
            Op::Or => "or",
            Op::Xor => "xor",
            Op::Not => "not",
        }
    }

    /// Applies the operator. Division truncates toward zero; `mod` is the
    /// matching remainder. A zero divisor is an error.
    pub fn apply(self, lhs: Value, rhs: Value) -> Result<Value, EvalError> {
        Ok(match self {
            Op::Add => lhs.wrapping_add(rhs),
            Op::Sub => lhs.wrapping_sub(rhs),
            Op::Mul => lhs.wrapping_mul(rhs),
            Op::Div => {
                if rhs == 0 {
                    return Err(EvalError::DivisionByZero { op: self });
                }
                lhs.wrapping_div(rhs)
            }
            Op::Mod => {
                if rhs == 0 {
                    return Err(EvalError::DivisionByZero { op: self });
                }
                lhs.wrapping_rem(rhs)
            }
            Op::And => lhs & rhs,
            Op::Or => lhs | rhs,
            Op::Xor => lhs ^ rhs,
            Op::Not => !lhs,
        })
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Op {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Op::ALL.iter().copied().find(|op| op.symbol() == s).ok_or(())
    }
}

/// One chromosome entry. Argument indices are 0-based gene positions and
/// always point strictly backwards.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gene {
    Terminal(Terminal),
    Function { op: Op, args: Vec<usize> },
}

impl Gene {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Gene::Terminal(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{op} by zero")]
    DivisionByZero { op: Op },
    #[error("terminal a{index} does not exist in a game with {heaps} heaps")]
    HeapOutOfRange { index: usize, heaps: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChromosomeError {
    #[error("chromosome has no genes")]
    Empty,
    #[error("first gene must be a terminal")]
    FirstGeneNotTerminal,
    #[error("gene {gene}: {op} takes {expected} argument(s), got {found}")]
    Arity { gene: usize, op: Op, expected: usize, found: usize },
    #[error("gene {gene}: argument {arg} does not refer to an earlier gene")]
    NotBackward { gene: usize, arg: usize },
}

/// A fixed-length MEP chromosome. Construction validates every
/// representation invariant, so a `Chromosome` value is always well formed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chromosome {
    genes: Vec<Gene>,
}

impl Chromosome {
    pub fn new(genes: Vec<Gene>) -> Result<Self, ChromosomeError> {
        check_genes(&genes)?;
        Ok(Self { genes })
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Re-checks the invariants. Always `Ok` for values built through `new`;
    /// used by property tests as an independent witness.
    pub fn validate(&self) -> Result<(), ChromosomeError> {
        check_genes(&self.genes)
    }

    /// Largest heap index referenced by any terminal gene.
    pub fn max_heap_index(&self) -> usize {
        self.genes
            .iter()
            .filter_map(|g| match g {
                Gene::Terminal(Terminal::Heap(i)) => Some(*i),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Positions that contribute to the last gene's value.
    pub fn active_mask(&self) -> Vec<bool> {
        let mut active = vec![false; self.genes.len()];
        if let Some(last) = active.last_mut() {
            *last = true;
        }
        for pos in (0..self.genes.len()).rev() {
            if !active[pos] {
                continue;
            }
            if let Gene::Function { args, .. } = &self.genes[pos] {
                for &a in args {
                    active[a] = true;
                }
            }
        }
        active
    }

    /// Evaluates the encoded expression on `state`.
    pub fn evaluate(&self, state: &GameState) -> Result<Value, EvalError> {
        let mut scratch = Vec::with_capacity(self.genes.len());
        self.evaluate_with(state, &self.active_mask(), &mut scratch)
    }

    /// Single forward pass over the genes marked in `active`; genes that do
    /// not feed the last gene are skipped and cannot raise errors.
    pub(crate) fn evaluate_with(
        &self,
        state: &GameState,
        active: &[bool],
        values: &mut Vec<Value>,
    ) -> Result<Value, EvalError> {
        values.clear();
        values.resize(self.genes.len(), 0);
        for (pos, gene) in self.genes.iter().enumerate() {
            if !active[pos] {
                continue;
            }
            values[pos] = match gene {
                Gene::Terminal(t) => t.bind(state)?,
                Gene::Function { op, args } => {
                    let lhs = values[args[0]];
                    let rhs = args.get(1).map_or(0, |&a| values[a]);
                    op.apply(lhs, rhs)?
                }
            };
        }
        Ok(*values.last().expect("chromosome is non-empty"))
    }

    /// Fully parenthesized infix rendering of the last gene's expression.
    pub fn to_infix(&self) -> String {
        fn render(genes: &[Gene], pos: usize, out: &mut String) {
            match &genes[pos] {
                Gene::Terminal(t) => out.push_str(&t.to_string()),
                Gene::Function { op: Op::Not, args } => {
                    out.push_str("(not ");
                    render(genes, args[0], out);
                    out.push(')');
                }
                Gene::Function { op, args } => {
                    out.push('(');
                    render(genes, args[0], out);
                    out.push(' ');
                    out.push_str(op.symbol());
                    out.push(' ');
                    render(genes, args[1], out);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        render(&self.genes, self.genes.len() - 1, &mut out);
        out
    }

    /// Numbered gene listing, one gene per line, labels starting at 1.
    pub fn format(&self) -> String {
        let mut lines = Vec::with_capacity(self.genes.len());
        for (pos, gene) in self.genes.iter().enumerate() {
            let body = match gene {
                Gene::Terminal(t) => t.to_string(),
                Gene::Function { op, args } => {
                    let args: Vec<String> = args.iter().map(|a| (a + 1).to_string()).collect();
                    format!("{} {}", op, args.join(" "))
                }
            };
            lines.push(format!("{}: {}", pos + 1, body));
        }
        lines.join("\n")
    }

    /// Listing preceded by a `heaps=<N> genes=<L>` header line.
    pub fn format_with_header(&self, heaps: usize) -> String {
        format!("heaps={} genes={}\n{}\n", heaps, self.genes.len(), self.format())
    }
}

fn check_genes(genes: &[Gene]) -> Result<(), ChromosomeError> {
    let first = genes.first().ok_or(ChromosomeError::Empty)?;
    if !first.is_terminal() {
        return Err(ChromosomeError::FirstGeneNotTerminal);
    }
    for (pos, gene) in genes.iter().enumerate() {
        if let Gene::Function { op, args } = gene {
            if args.len() != op.arity() {
                return Err(ChromosomeError::Arity {
                    gene: pos + 1,
                    op: *op,
                    expected: op.arity(),
                    found: args.len(),
                });
            }
            if let Some(&bad) = args.iter().find(|&&a| a >= pos) {
                return Err(ChromosomeError::NotBackward { gene: pos + 1, arg: bad + 1 });
            }
        }
    }
    Ok(())
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("malformed header (expected `heaps=<N> genes=<L>`)")]
    Header,
    #[error("expected `<label>: <symbol> [args]`")]
    Syntax,
    #[error("expected label {expected}, found `{found}`")]
    Label { expected: usize, found: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("invalid argument `{0}`")]
    Argument(String),
    #[error("heap a{index} exceeds declared heaps={heaps}")]
    HeapOutOfRange { index: usize, heaps: usize },
    #[error("header declares {declared} genes, listing has {found}")]
    GeneCount { declared: usize, found: usize },
    #[error(transparent)]
    Invalid(#[from] ChromosomeError),
}

/// A parsed chromosome file: the chromosome plus the optional header's heap count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChromosomeFile {
    pub heaps: Option<usize>,
    pub chromosome: Chromosome,
}

fn parse_terminal(sym: &str) -> Option<Terminal> {
    if sym == "n" {
        return Some(Terminal::NumHeaps);
    }
    let idx = sym.strip_prefix('a')?;
    if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match idx.parse::<usize>() {
        Ok(i) if i >= 1 => Some(Terminal::Heap(i)),
        _ => None,
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut heaps = None;
    let mut genes = None;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=')?;
        let value: usize = value.parse().ok()?;
        match key {
            "heaps" if heaps.is_none() => heaps = Some(value),
            "genes" if genes.is_none() => genes = Some(value),
            _ => return None,
        }
    }
    Some((heaps?, genes?))
}

/// Parses the numbered gene listing, with an optional header line.
pub fn parse_chromosome(text: &str) -> Result<ChromosomeFile, ParseError> {
    let mut header = None;
    let mut genes = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        last_line = line_no;
        let err = |kind| ParseError { line: line_no, kind };
        if line.starts_with("heaps=") || line.starts_with("genes=") {
            if header.is_some() || !genes.is_empty() {
                return Err(err(ParseErrorKind::Header));
            }
            header = Some(parse_header(line).ok_or_else(|| err(ParseErrorKind::Header))?);
            continue;
        }
        let (label, body) = line.split_once(':').ok_or_else(|| err(ParseErrorKind::Syntax))?;
        let expected = genes.len() + 1;
        let label = label.trim();
        if label.parse::<usize>().ok() != Some(expected) {
            return Err(err(ParseErrorKind::Label { expected, found: label.to_string() }));
        }
        let mut tokens = body.split_whitespace();
        let sym = tokens.next().ok_or_else(|| err(ParseErrorKind::Syntax))?;
        let gene = if let Some(t) = parse_terminal(sym) {
            if let Some(extra) = tokens.next() {
                return Err(err(ParseErrorKind::Argument(extra.to_string())));
            }
            if let (Terminal::Heap(i), Some((heaps, _))) = (t, header) {
                if i > heaps {
                    return Err(err(ParseErrorKind::HeapOutOfRange { index: i, heaps }));
                }
            }
            Gene::Terminal(t)
        } else if let Ok(op) = sym.parse::<Op>() {
            let mut args = Vec::new();
            for tok in tokens {
                let a: usize = tok
                    .trim_end_matches(',')
                    .parse()
                    .map_err(|_| err(ParseErrorKind::Argument(tok.to_string())))?;
                if a == 0 {
                    return Err(err(ParseErrorKind::Argument(tok.to_string())));
                }
                args.push(a - 1);
            }
            Gene::Function { op, args }
        } else {
            return Err(err(ParseErrorKind::UnknownSymbol(sym.to_string())));
        };
        genes.push(gene);
        // Validate incrementally so errors carry the offending line.
        check_genes(&genes).map_err(|e| err(ParseErrorKind::Invalid(e)))?;
    }
    if let Some((_, declared)) = header {
        if declared != genes.len() {
            return Err(ParseError {
                line: last_line.max(1),
                kind: ParseErrorKind::GeneCount { declared, found: genes.len() },
            });
        }
    }
    let chromosome = Chromosome::new(genes).map_err(|e| ParseError {
        line: last_line.max(1),
        kind: ParseErrorKind::Invalid(e),
    })?;
    Ok(ChromosomeFile { heaps: header.map(|(h, _)| h), chromosome })
}
