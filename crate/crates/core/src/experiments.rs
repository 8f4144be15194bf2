//! Parameter sweeps over independent seeded runs, aggregated into
//! success-rate tables.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::evolution::{evolve_on, EvolutionConfig};
use crate::fitness::Fitness;
use crate::game::GameGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepParam {
    PopulationSize,
    Generations,
    ChromosomeLength,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PopulationSize => "population_size",
            SweepParam::Generations => "generations",
            SweepParam::ChromosomeLength => "chromosome_length",
        }
    }

    fn apply(self, base: &EvolutionConfig, value: usize) -> EvolutionConfig {
        let mut cfg = base.clone();
        match self {
            SweepParam::PopulationSize => cfg.population_size = value,
            SweepParam::Generations => cfg.generations = value,
            SweepParam::ChromosomeLength => cfg.chromosome_length = value,
        }
        cfg
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three published sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// Population size 20..=200, length 15, 100 generations.
    Exp1,
    /// Generations 20..=200, population 100, length 15.
    Exp2,
    /// Chromosome length 5..=50, population 100, 50 generations.
    Exp3,
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp1" => Ok(Experiment::Exp1),
            "exp2" => Ok(Experiment::Exp2),
            "exp3" => Ok(Experiment::Exp3),
            other => Err(format!("unknown experiment `{other}` (expected exp1|exp2|exp3)")),
        }
    }
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
        }
    }

    pub fn spec(self, runs_per_value: usize) -> SweepSpec {
        let base = EvolutionConfig::default();
        let (param, values, base) = match self {
            Experiment::Exp1 => (SweepParam::PopulationSize, (20..=200).step_by(20).collect(), base),
            Experiment::Exp2 => (SweepParam::Generations, (20..=200).step_by(20).collect(), base),
            Experiment::Exp3 => (
                SweepParam::ChromosomeLength,
                (5..=50).step_by(5).collect(),
                EvolutionConfig { generations: 50, ..base },
            ),
        };
        SweepSpec { param, values, base, runs_per_value }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<usize>,
    pub base: EvolutionConfig,
    pub runs_per_value: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: usize,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_gens_to_success: Option<f64>,
    pub mean_best_fitness: Option<f64>,
    /// Configuration error for this cell; no runs were executed.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

/// Stable per-run seed from (master seed, parameter, value, run index).
pub fn derive_seed(master_seed: u64, param: SweepParam, value: usize, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(param.name().as_bytes());
    h.update((value as u64).to_le_bytes());
    h.update((run as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Clone, Copy, Debug)]
struct RunSummary {
    generation_of_success: Option<usize>,
    best: Fitness,
}

/// Runs one cell: all runs for a single parameter value.
pub fn run_cell(spec: &SweepSpec, value: usize, master_seed: u64, graph: &GameGraph) -> SweepRow {
    let cfg = spec.param.apply(&spec.base, value);
    if let Err(e) = cfg.validate() {
        return SweepRow {
            value,
            runs: 0,
            successes: 0,
            success_rate: 0.0,
            mean_gens_to_success: None,
            mean_best_fitness: None,
            error: Some(e.to_string()),
        };
    }
    let summaries: Vec<RunSummary> = (0..spec.runs_per_value)
        .into_par_iter()
        .map(|run| {
            let cfg = EvolutionConfig {
                seed: derive_seed(master_seed, spec.param, value, run),
                ..cfg.clone()
            };
            let r = evolve_on(&cfg, graph);
            RunSummary { generation_of_success: r.generation_of_success, best: r.best_fitness }
        })
        .collect();
    aggregate(value, &summaries)
}

fn aggregate(value: usize, runs: &[RunSummary]) -> SweepRow {
    let gens: Vec<f64> = runs.iter().filter_map(|r| r.generation_of_success).map(|g| g as f64).collect();
    let best: Vec<f64> = runs.iter().filter_map(|r| r.best.violations()).map(|v| v as f64).collect();
    let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    let successes = gens.len();
    SweepRow {
        value,
        runs: runs.len(),
        successes,
        success_rate: if runs.is_empty() { 0.0 } else { successes as f64 / runs.len() as f64 },
        mean_gens_to_success: mean(&gens),
        mean_best_fitness: mean(&best),
        error: None,
    }
}

/// Executes every cell of the sweep. Runs execute in parallel on the
/// current rayon pool; the table does not depend on execution order.
pub fn run_sweep(spec: &SweepSpec, master_seed: u64) -> Result<SweepTable, crate::evolution::ConfigError> {
    if spec.base.heaps.is_empty() {
        return Err(crate::evolution::ConfigError::NoHeaps);
    }
    let graph = GameGraph::build(&spec.base.root(), spec.base.mode);
    let rows = spec
        .values
        .par_iter()
        .map(|&v| run_cell(spec, v, master_seed, &graph))
        .collect();
    Ok(SweepTable { param: spec.param, rows })
}

/// Like [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(
    spec: &SweepSpec,
    master_seed: u64,
    threads: usize,
) -> Result<SweepTable, crate::evolution::ConfigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| run_sweep(spec, master_seed))
}

pub const CSV_HEADER: &str =
    "param,value,runs,successes,success_rate,mean_gens_to_success,mean_best_fitness";

pub fn emit_csv(table: &SweepTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &table.rows {
        let rate = if r.error.is_some() { String::new() } else { r.success_rate.to_string() };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            table.param.name(),
            r.value,
            r.runs,
            r.successes,
            rate,
            opt(r.mean_gens_to_success),
            opt(r.mean_best_fitness),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: usize, runs: usize, successes: usize) -> SweepRow {
        SweepRow {
            value,
            runs,
            successes,
            success_rate: successes as f64 / runs as f64,
            mean_gens_to_success: None,
            mean_best_fitness: None,
            error: None,
        }
    }

    #[test]
    fn default_ranges() {
        let s1 = Experiment::Exp1.spec(50);
        assert_eq!(s1.values, vec![20, 40, 60, 80, 100, 120, 140, 160, 180, 200]);
        assert_eq!((s1.base.chromosome_length, s1.base.generations), (15, 100));
        let s2 = Experiment::Exp2.spec(50);
        assert_eq!(s2.param, SweepParam::Generations);
        assert_eq!(s2.base.population_size, 100);
        let s3 = Experiment::Exp3.spec(50);
        assert_eq!(s3.values, vec![5, 10, 15, 20, 25, 30, 35, 40, 45, 50]);
        assert_eq!((s3.base.population_size, s3.base.generations), (100, 50));
        assert_eq!(s3.runs_per_value, 50);
    }

    #[test]
    fn csv_rows() {
        let table = SweepTable { param: SweepParam::PopulationSize, rows: vec![row(20, 50, 6)] };
        let csv = emit_csv(&table);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "population_size,20,50,6,0.12,,");

        let empty = SweepTable { param: SweepParam::Generations, rows: vec![] };
        assert_eq!(emit_csv(&empty), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_seed(1, SweepParam::PopulationSize, 20, 0);
        assert_eq!(a, derive_seed(1, SweepParam::PopulationSize, 20, 0));
        assert_ne!(a, derive_seed(1, SweepParam::PopulationSize, 20, 1));
        assert_ne!(a, derive_seed(1, SweepParam::Generations, 20, 0));
        assert_ne!(a, derive_seed(2, SweepParam::PopulationSize, 20, 0));
    }

    #[test]
    fn config_errors_stay_in_their_cell() {
        let mut spec = Experiment::Exp1.spec(2);
        spec.values = vec![2, 8];
        spec.base.generations = 3;
        let t = run_sweep(&spec, 0).unwrap();
        assert!(t.rows[0].error.is_some());
        assert_eq!(t.rows[0].runs, 0);
        assert!(t.rows[1].error.is_none());
        assert_eq!(t.rows[1].runs, 2);
        assert!(emit_csv(&t).lines().nth(1).unwrap().starts_with("population_size,2,0,0,,"));
    }

    #[test]
    fn cells_reproduce_in_isolation() {
        let mut spec = Experiment::Exp2.spec(3);
        spec.values = vec![5, 10];
        let t = run_sweep(&spec, 17).unwrap();
        let graph = GameGraph::build(&spec.base.root(), spec.base.mode);
        assert_eq!(run_cell(&spec, 10, 17, &graph), t.rows[1]);
        assert_eq!(run_sweep_with_threads(&spec, 17, 1).unwrap(), t);
        for r in &t.rows {
            assert!(r.successes <= r.runs);
            assert!((0.0..=1.0).contains(&r.success_rate));
        }
    }
}
