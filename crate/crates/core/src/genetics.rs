//! Random initialization, one-point crossover and mutation.

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::{Chromosome, Gene, Op, Terminal};

/// Seedable, platform-independent random stream used everywhere a run
/// needs randomness.
pub type RandomSource = ChaCha8Rng;

pub fn random_source(seed: u64) -> RandomSource {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorConfig {
    pub crossover_probability: f64,
    /// Distinct gene positions regenerated per offspring.
    pub mutations_per_offspring: usize,
    /// Chance that a non-first gene is drawn as a function rather than a terminal.
    pub function_gene_probability: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { crossover_probability: 0.9, mutations_per_offspring: 2, function_gene_probability: 0.5 }
    }
}

pub fn random_terminal<R: Rng + ?Sized>(heaps: usize, rng: &mut R) -> Terminal {
    // n, a1..an
    match rng.gen_range(0..=heaps) {
        0 => Terminal::NumHeaps,
        i => Terminal::Heap(i),
    }
}

/// A fresh gene valid at position `pos` (0-based).
pub fn random_gene<R: Rng + ?Sized>(
    pos: usize,
    heaps: usize,
    function_probability: f64,
    rng: &mut R,
) -> Gene {
    if pos == 0 || !rng.gen_bool(function_probability) {
        return Gene::Terminal(random_terminal(heaps, rng));
    }
    let op = Op::ALL[rng.gen_range(0..Op::ALL.len())];
    let args = (0..op.arity()).map(|_| rng.gen_range(0..pos)).collect();
    Gene::Function { op, args }
}

pub fn random_chromosome<R: Rng + ?Sized>(
    length: usize,
    heaps: usize,
    function_probability: f64,
    rng: &mut R,
) -> Chromosome {
    assert!(length >= 1, "chromosome length must be at least 1");
    let genes = (0..length).map(|pos| random_gene(pos, heaps, function_probability, rng)).collect();
    Chromosome::new(genes).expect("generated genes satisfy the chromosome invariants")
}

/// One-point crossover. The cut `k` is drawn from `1..len`; the first
/// offspring keeps `p1[..k]` and takes the rest from `p2`. Genes keep their
/// absolute positions, so backward references stay valid.
pub fn crossover_one_point<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    assert_eq!(p1.len(), p2.len(), "parents must have equal length");
    if p1.len() < 2 {
        return (p1.clone(), p2.clone());
    }
    let cut = rng.gen_range(1..p1.len());
    crossover_at(p1, p2, cut)
}

pub fn crossover_at(p1: &Chromosome, p2: &Chromosome, cut: usize) -> (Chromosome, Chromosome) {
    let splice = |a: &Chromosome, b: &Chromosome| {
        let genes = a.genes()[..cut].iter().chain(&b.genes()[cut..]).cloned().collect();
        Chromosome::new(genes).expect("crossover preserves positions")
    };
    (splice(p1, p2), splice(p2, p1))
}

/// Regenerates `mutations_per_offspring` distinct gene positions (capped at
/// the chromosome length). The first gene is always redrawn as a terminal.
pub fn mutate<R: Rng + ?Sized>(
    chrom: &Chromosome,
    config: &OperatorConfig,
    heaps: usize,
    rng: &mut R,
) -> Chromosome {
    let amount = config.mutations_per_offspring.min(chrom.len());
    if amount == 0 {
        return chrom.clone();
    }
    let mut genes = chrom.genes().to_vec();
    for pos in index::sample(rng, genes.len(), amount).into_vec() {
        genes[pos] = random_gene(pos, heaps, config.function_gene_probability, rng);
    }
    Chromosome::new(genes).expect("mutation preserves the chromosome invariants")
}
