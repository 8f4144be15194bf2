//! Steady-state evolution of MEP chromosomes against the violation fitness.

use rand::Rng;
use thiserror::Error;

use crate::expr::Chromosome;
use crate::fitness::{fitness, Fitness};
use crate::game::{GameGraph, GameState, StateSpaceMode};
use crate::genetics::{
    crossover_one_point, mutate, random_chromosome, random_source, OperatorConfig,
};

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub chromosome_length: usize,
    pub generations: usize,
    pub operators: OperatorConfig,
    pub seed: u64,
    pub mode: StateSpaceMode,
    pub heaps: Vec<u32>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            chromosome_length: 15,
            generations: 100,
            operators: OperatorConfig::default(),
            seed: 0,
            mode: StateSpaceMode::Multiset,
            heaps: vec![4, 4, 4, 4],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("population size must be at least 4, got {0}")]
    Population(usize),
    #[error("chromosome length must be at least 1")]
    Length,
    #[error("generations must be at least 1")]
    Generations,
    #[error("at least one heap is required")]
    NoHeaps,
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size < 4 {
            return Err(ConfigError::Population(self.population_size));
        }
        if self.chromosome_length == 0 {
            return Err(ConfigError::Length);
        }
        if self.generations == 0 {
            return Err(ConfigError::Generations);
        }
        if self.heaps.is_empty() {
            return Err(ConfigError::NoHeaps);
        }
        for (name, value) in [
            ("crossover probability", self.operators.crossover_probability),
            ("function gene probability", self.operators.function_gene_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        Ok(())
    }

    pub fn root(&self) -> GameState {
        GameState::canonical(self.heaps.clone(), self.mode)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub fitness: Fitness,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub success: bool,
    pub best_chromosome: Chromosome,
    pub best_fitness: Fitness,
    /// Generation in which a zero-violation individual first appeared
    /// (0 = initial population).
    pub generation_of_success: Option<usize>,
    /// Best fitness of the initial population followed by the best after
    /// every (possibly partial) generation.
    pub best_fitness_history: Vec<Fitness>,
}

/// Binary tournament: two distinct individuals, the fitter wins, ties are
/// broken uniformly.
pub fn tournament_select<R: Rng + ?Sized>(population: &[Individual], rng: &mut R) -> usize {
    assert!(population.len() >= 2, "tournament needs at least two individuals");
    let a = rng.gen_range(0..population.len());
    let mut b = rng.gen_range(0..population.len() - 1);
    if b >= a {
        b += 1;
    }
    match population[a].fitness.cmp(&population[b].fitness) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if rng.gen_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

fn best_index(population: &[Individual]) -> usize {
    population
        .iter()
        .enumerate()
        .min_by(|(i, x), (j, y)| x.fitness.cmp(&y.fitness).then(i.cmp(j)))
        .map(|(i, _)| i)
        .expect("population is non-empty")
}

fn worst_index(population: &[Individual]) -> usize {
    population
        .iter()
        .enumerate()
        .max_by(|(i, x), (j, y)| x.fitness.cmp(&y.fitness).then(j.cmp(i)))
        .map(|(i, _)| i)
        .expect("population is non-empty")
}

pub fn evolve(config: &EvolutionConfig) -> Result<RunResult, ConfigError> {
    config.validate()?;
    let graph = GameGraph::build(&config.root(), config.mode);
    Ok(evolve_on(config, &graph))
}

/// Runs evolution on a prebuilt graph (which must match `config`'s root
/// and mode). `config` must already be valid.
pub fn evolve_on(config: &EvolutionConfig, graph: &GameGraph) -> RunResult {
    let heaps = graph.heap_count();
    let ops = &config.operators;
    let mut rng = random_source(config.seed);

    let mut population: Vec<Individual> = (0..config.population_size)
        .map(|_| {
            let chromosome = random_chromosome(
                config.chromosome_length,
                heaps,
                ops.function_gene_probability,
                &mut rng,
            );
            let fitness = fitness(&chromosome, graph);
            Individual { chromosome, fitness }
        })
        .collect();

    let mut history = vec![population[best_index(&population)].fitness];
    let mut generation_of_success = history[0].is_perfect().then_some(0);
    let iterations = (config.population_size / 2).max(1);

    'generations: for generation in 1..=config.generations {
        if generation_of_success.is_some() {
            break;
        }
        for _ in 0..iterations {
            let p1 = tournament_select(&population, &mut rng);
            let p2 = tournament_select(&population, &mut rng);
            let (o1, o2) = if rng.gen_bool(ops.crossover_probability) {
                crossover_one_point(&population[p1].chromosome, &population[p2].chromosome, &mut rng)
            } else {
                (population[p1].chromosome.clone(), population[p2].chromosome.clone())
            };
            let o1 = mutate(&o1, ops, heaps, &mut rng);
            let o2 = mutate(&o2, ops, heaps, &mut rng);
            let f1 = fitness(&o1, graph);
            let f2 = fitness(&o2, graph);
            let offspring = if f2 < f1 {
                Individual { chromosome: o2, fitness: f2 }
            } else {
                Individual { chromosome: o1, fitness: f1 }
            };
            let worst = worst_index(&population);
            if offspring.fitness < population[worst].fitness {
                let perfect = offspring.fitness.is_perfect();
                population[worst] = offspring;
                if perfect {
                    generation_of_success = Some(generation);
                    history.push(Fitness::Violations(0));
                    break 'generations;
                }
            }
        }
        history.push(population[best_index(&population)].fitness);
    }

    let best = population.swap_remove(best_index(&population));
    RunResult {
        success: best.fitness.is_perfect(),
        best_chromosome: best.chromosome,
        best_fitness: best.fitness,
        generation_of_success,
        best_fitness_history: history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_chromosome, Gene, Terminal};

    fn ind(f: Fitness) -> Individual {
        Individual {
            chromosome: Chromosome::new(vec![Gene::Terminal(Terminal::Heap(1))]).unwrap(),
            fitness: f,
        }
    }

    #[test]
    fn tournament_forced_outcome() {
        let pop = vec![ind(Fitness::Violations(5)), ind(Fitness::Violations(0))];
        let mut rng = random_source(0);
        for _ in 0..200 {
            assert_eq!(tournament_select(&pop, &mut rng), 1);
        }
        let pop = vec![ind(Fitness::Invalid), ind(Fitness::Violations(1000))];
        for _ in 0..200 {
            assert_eq!(tournament_select(&pop, &mut rng), 1);
        }
    }

    #[test]
    fn tournament_ties_are_uniform() {
        let pop = vec![ind(Fitness::Violations(3)), ind(Fitness::Violations(3))];
        let mut rng = random_source(9);
        let zeros = (0..10_000).filter(|_| tournament_select(&pop, &mut rng) == 0).count();
        assert!((4_500..5_500).contains(&zeros), "{zeros}");
    }

    #[test]
    fn config_errors() {
        let bad = EvolutionConfig { population_size: 3, ..Default::default() };
        assert_eq!(evolve(&bad).unwrap_err(), ConfigError::Population(3));
        let bad = EvolutionConfig { heaps: vec![], ..Default::default() };
        assert_eq!(evolve(&bad).unwrap_err(), ConfigError::NoHeaps);
        let mut bad = EvolutionConfig::default();
        bad.operators.crossover_probability = 1.5;
        assert!(matches!(evolve(&bad), Err(ConfigError::Probability { .. })));
    }

    #[test]
    fn single_heap_is_solved_immediately() {
        // with one heap of size 1, "a1" is a perfect classifier; any random
        // population of single-terminal chromosomes contains it
        let cfg = EvolutionConfig {
            population_size: 20,
            chromosome_length: 1,
            generations: 5,
            heaps: vec![1],
            seed: 11,
            ..Default::default()
        };
        let r = evolve(&cfg).unwrap();
        assert!(r.success);
        assert_eq!(r.best_fitness, Fitness::Violations(0));
        let a1 = parse_chromosome("1: a1").unwrap().chromosome;
        assert_eq!(r.best_chromosome, a1);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = EvolutionConfig { generations: 10, seed: 5, ..Default::default() };
        assert_eq!(evolve(&cfg).unwrap(), evolve(&cfg).unwrap());
    }

    #[test]
    fn history_is_non_increasing_and_consistent() {
        for seed in 0..5 {
            let cfg = EvolutionConfig { generations: 30, seed, ..Default::default() };
            let r = evolve(&cfg).unwrap();
            assert!(r.best_fitness_history.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*r.best_fitness_history.last().unwrap(), r.best_fitness);
            assert_eq!(r.success, r.generation_of_success.is_some());
            assert_eq!(r.success, r.best_fitness.is_perfect());
        }
    }
}
