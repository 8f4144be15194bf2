//! Command-line front end. `dispatch` is the whole program minus process
//! plumbing, so it can be driven from tests with in-memory streams.
//!
//! Settings come from flags and an optional `--config` file of flat
//! `key = value` lines (keys are the long flag names); flags win.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::evolution::{evolve, EvolutionConfig};
use crate::expr::{parse_chromosome, Chromosome};
use crate::experiments::{emit_csv, run_sweep, run_sweep_with_threads, Experiment};
use crate::fitness::evaluate_fitness;
use crate::game::{parse_heaps, GameGraph, GameState, StateSpaceMode};
use crate::genetics::OperatorConfig;
use crate::oracle::{retrograde_labels, verify_formula};
use crate::play::{interactive_session, play_game, Player, StrategyContext, StrategyRegistry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET_EXHAUSTED: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "mepnim", version, about = "Evolve and check P/N-position formulas for Nim")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a zero-violation formula
    Evolve {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        evo: EvoArgs,
        /// Chromosome output path (a `.report` file is written next to it)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a formula: total violations and per-rule breakdown
    Fitness {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        formula_file: Option<PathBuf>,
    },
    /// Print the retrograde P/N label of every reachable state
    Oracle {
        #[command(flatten)]
        game: GameArgs,
    },
    /// Compare a formula with the retrograde labels on every state
    Verify {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        formula_file: Option<PathBuf>,
    },
    /// Run one of the parameter sweeps and write a CSV table
    Experiment {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        master_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores); results do not depend on it
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        crossover_prob: Option<f64>,
        #[arg(long)]
        mutations: Option<usize>,
        #[arg(long)]
        func_prob: Option<f64>,
    },
    /// Play a formula against a registered strategy or a human
    Play {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        formula_file: Option<PathBuf>,
        /// Opponent strategy: bouton, formula, oracle, random
        #[arg(long)]
        vs: Option<String>,
        #[arg(long)]
        games: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Print every move of every game
        #[arg(long)]
        transcript: bool,
        /// Play interactively against the formula on stdin/stdout
        #[arg(long)]
        human: bool,
        /// With --human, let the machine move first
        #[arg(long)]
        machine_first: bool,
    },
}

#[derive(Args, Debug)]
struct GameArgs {
    /// Flat `key = value` settings file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Heap sizes, e.g. 4,4,4,4
    #[arg(long)]
    heaps: Option<String>,
    /// multiset or tuple
    #[arg(long)]
    state_space: Option<String>,
}

#[derive(Args, Debug)]
struct EvoArgs {
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    len: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    crossover_prob: Option<f64>,
    #[arg(long)]
    mutations: Option<usize>,
    #[arg(long)]
    func_prob: Option<f64>,
}

/// Failure with an exit code and a message for stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn failure(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_FAILURE, message: message.into() }
}

/// Resolved settings: explicit flags layered over the config file.
struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    fn resolve(
        allowed: &[&'static str],
        flags: Vec<(&'static str, Option<String>)>,
        config: Option<&Path>,
    ) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), no + 1)))?;
                let k = k.trim();
                let key = allowed
                    .iter()
                    .find(|a| **a == k)
                    .ok_or_else(|| usage(format!("{}:{}: unknown key `{k}`", path.display(), no + 1)))?;
                values.insert(*key, v.trim().to_string());
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k, v);
            }
        }
        Ok(Self { values })
    }

    fn get<T: FromStr + ToString>(&mut self, key: &'static str, default: T) -> Result<T, Failure> {
        match self.values.get(key) {
            Some(v) => v.parse().map_err(|_| usage(format!("invalid value for {key}: `{v}`"))),
            None => {
                self.values.insert(key, default.to_string());
                Ok(default)
            }
        }
    }

    fn get_opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn heaps(&mut self, default: &str) -> Result<Vec<u32>, Failure> {
        let text = self.get::<String>("heaps", default.to_string())?;
        let heaps = parse_heaps(&text).map_err(usage)?;
        let canonical = heaps.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        self.values.insert("heaps", canonical);
        Ok(heaps)
    }

    fn mode(&mut self) -> Result<StateSpaceMode, Failure> {
        let text = self.get::<String>("state-space", "multiset".to_string())?;
        text.parse().map_err(usage)
    }

    /// `key = value` lines in the order given.
    fn echo(&self, keys: &[&str]) -> String {
        keys.iter()
            .filter_map(|k| self.values.get(k).map(|v| format!("{k} = {v}\n")))
            .collect()
    }
}

fn opt<T: ToString>(x: &Option<T>) -> Option<String> {
    x.as_ref().map(T::to_string)
}

fn path_opt(x: &Option<PathBuf>) -> Option<String> {
    x.as_ref().map(|p| p.display().to_string())
}

fn read_formula(path: Option<&str>, heaps: usize) -> Result<Chromosome, Failure> {
    let path = path.ok_or_else(|| usage("--formula-file is required"))?;
    let text = fs::read_to_string(path).map_err(|e| failure(format!("cannot read {path}: {e}")))?;
    let parsed = parse_chromosome(&text).map_err(|e| failure(format!("{path}: parse error: {e}")))?;
    if let Some(h) = parsed.heaps {
        if h != heaps {
            return Err(usage(format!("{path} declares heaps={h} but the game has {heaps} heaps")));
        }
    }
    if parsed.chromosome.max_heap_index() > heaps {
        return Err(usage(format!(
            "{path} refers to a{} but the game has {heaps} heaps",
            parsed.chromosome.max_heap_index()
        )));
    }
    Ok(parsed.chromosome)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| failure(format!("cannot write {}: {e}", path.display())))
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn io_fail(e: std::io::Error) -> Failure {
    failure(format!("i/o error: {e}"))
}

const EVOLVE_KEYS: &[&str] = &[
    "heaps",
    "state-space",
    "pop",
    "len",
    "gens",
    "seed",
    "crossover-prob",
    "mutations",
    "func-prob",
    "out",
];

/// Keys echoed into reports; output paths are left out so that reruns into
/// different directories produce identical files.
const EVOLVE_ECHO: &[&str] = &[
    "heaps",
    "state-space",
    "pop",
    "len",
    "gens",
    "seed",
    "crossover-prob",
    "mutations",
    "func-prob",
];

fn evolution_config(s: &mut Settings) -> Result<EvolutionConfig, Failure> {
    let d = EvolutionConfig::default();
    let ops = OperatorConfig {
        crossover_probability: s.get("crossover-prob", d.operators.crossover_probability)?,
        mutations_per_offspring: s.get("mutations", d.operators.mutations_per_offspring)?,
        function_gene_probability: s.get("func-prob", d.operators.function_gene_probability)?,
    };
    let cfg = EvolutionConfig {
        heaps: s.heaps("4,4,4,4")?,
        mode: s.mode()?,
        population_size: s.get("pop", d.population_size)?,
        chromosome_length: s.get("len", d.chromosome_length)?,
        generations: s.get("gens", d.generations)?,
        seed: s.get("seed", d.seed)?,
        operators: ops,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn run(command: Command, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Evolve { game, evo, out: out_path } => {
            let mut s = Settings::resolve(
                EVOLVE_KEYS,
                vec![
                    ("heaps", game.heaps),
                    ("state-space", game.state_space),
                    ("pop", opt(&evo.pop)),
                    ("len", opt(&evo.len)),
                    ("gens", opt(&evo.gens)),
                    ("seed", opt(&evo.seed)),
                    ("crossover-prob", opt(&evo.crossover_prob)),
                    ("mutations", opt(&evo.mutations)),
                    ("func-prob", opt(&evo.func_prob)),
                    ("out", path_opt(&out_path)),
                ],
                game.config.as_deref(),
            )?;
            let cfg = evolution_config(&mut s)?;
            let out_path = PathBuf::from(s.get::<String>("out", "best.mep".to_string())?);
            let result = evolve(&cfg).map_err(|e| usage(e.to_string()))?;

            let mut report = s.echo(EVOLVE_ECHO);
            report.push_str(&format!("# success = {}\n", result.success));
            report.push_str(&format!(
                "# generation_of_success = {}\n",
                result.generation_of_success.map(|g| g.to_string()).unwrap_or_default()
            ));
            report.push_str(&format!("# best_fitness = {}\n", result.best_fitness));
            report.push_str(&format!("# formula = {}\n", result.best_chromosome.to_infix()));
            out.write_all(report.as_bytes()).map_err(io_fail)?;

            if !result.success {
                return Ok(EXIT_BUDGET_EXHAUSTED);
            }
            write_file(&out_path, &result.best_chromosome.format_with_header(cfg.heaps.len()))?;
            write_file(&sidecar(&out_path, ".report"), &report)?;
            Ok(EXIT_OK)
        }
        Command::Fitness { game, formula_file } => {
            let mut s = Settings::resolve(
                &["heaps", "state-space", "formula-file"],
                vec![
                    ("heaps", game.heaps),
                    ("state-space", game.state_space),
                    ("formula-file", path_opt(&formula_file)),
                ],
                game.config.as_deref(),
            )?;
            let heaps = s.heaps("4,4,4,4")?;
            let mode = s.mode()?;
            let chrom = read_formula(s.get_opt("formula-file"), heaps.len())?;
            let graph = GameGraph::build(&GameState::from_raw(heaps), mode);
            let (fit, breakdown) = evaluate_fitness(&chrom, &graph);
            let mut text = s.echo(&["heaps", "state-space"]);
            text.push_str(&format!("formula = {}\n", chrom.to_infix()));
            text.push_str(&format!("states = {}\n", graph.node_count()));
            text.push_str(&format!("fitness = {fit}\n"));
            if let Some(b) = breakdown {
                text.push_str(&format!("rule_i = {}\nrule_ii = {}\nrule_iii = {}\n", b.rule_i, b.rule_ii, b.rule_iii));
            }
            out.write_all(text.as_bytes()).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
        Command::Oracle { game } => {
            let mut s = Settings::resolve(
                &["heaps", "state-space"],
                vec![("heaps", game.heaps), ("state-space", game.state_space)],
                game.config.as_deref(),
            )?;
            let heaps = s.heaps("4,4,4,4")?;
            let mode = s.mode()?;
            let graph = GameGraph::build(&GameState::from_raw(heaps), mode);
            let labels = retrograde_labels(&graph);
            let mut text = String::new();
            for (state, label) in graph.nodes().iter().zip(labels.labels()) {
                text.push_str(&format!("{state} {label}\n"));
            }
            out.write_all(text.as_bytes()).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
        Command::Verify { game, formula_file } => {
            let mut s = Settings::resolve(
                &["heaps", "state-space", "formula-file"],
                vec![
                    ("heaps", game.heaps),
                    ("state-space", game.state_space),
                    ("formula-file", path_opt(&formula_file)),
                ],
                game.config.as_deref(),
            )?;
            let heaps = s.heaps("4,4,4,4")?;
            let mode = s.mode()?;
            let chrom = read_formula(s.get_opt("formula-file"), heaps.len())?;
            let graph = GameGraph::build(&GameState::from_raw(heaps), mode);
            let mut text = format!("formula = {}\nstates = {}\n", chrom.to_infix(), graph.node_count());
            let code = match verify_formula(&chrom, &graph) {
                Err(e) => {
                    text.push_str(&format!("invalid: {e}\n"));
                    EXIT_VERIFY_FAILED
                }
                Ok(v) if v.agrees() => {
                    text.push_str("agree\n");
                    EXIT_OK
                }
                Ok(v) => {
                    text.push_str(&format!("disagree: {} states\n", v.disagreements.len()));
                    for d in &v.disagreements {
                        text.push_str(&format!("{} oracle={} formula={}\n", d.state, d.oracle, d.formula));
                    }
                    EXIT_VERIFY_FAILED
                }
            };
            out.write_all(text.as_bytes()).map_err(io_fail)?;
            Ok(code)
        }
        Command::Experiment {
            game,
            name,
            runs,
            master_seed,
            out: out_path,
            threads,
            crossover_prob,
            mutations,
            func_prob,
        } => {
            const KEYS: &[&str] = &[
                "name",
                "runs",
                "master-seed",
                "heaps",
                "state-space",
                "crossover-prob",
                "mutations",
                "func-prob",
                "out",
                "threads",
            ];
            let mut s = Settings::resolve(
                KEYS,
                vec![
                    ("name", name),
                    ("runs", opt(&runs)),
                    ("master-seed", opt(&master_seed)),
                    ("heaps", game.heaps),
                    ("state-space", game.state_space),
                    ("crossover-prob", opt(&crossover_prob)),
                    ("mutations", opt(&mutations)),
                    ("func-prob", opt(&func_prob)),
                    ("out", path_opt(&out_path)),
                    ("threads", opt(&threads)),
                ],
                game.config.as_deref(),
            )?;
            let experiment: Experiment = s
                .get_opt("name")
                .ok_or_else(|| usage("--name is required (exp1|exp2|exp3)"))?
                .parse()
                .map_err(usage)?;
            let runs: usize = s.get("runs", 50)?;
            let master_seed: u64 = s.get("master-seed", 0)?;
            let mut spec = experiment.spec(runs);
            spec.base.heaps = s.heaps("4,4,4,4")?;
            spec.base.mode = s.mode()?;
            let ops = &mut spec.base.operators;
            ops.crossover_probability = s.get("crossover-prob", ops.crossover_probability)?;
            ops.mutations_per_offspring = s.get("mutations", ops.mutations_per_offspring)?;
            ops.function_gene_probability = s.get("func-prob", ops.function_gene_probability)?;
            let out_path = PathBuf::from(
                s.get_opt("out").ok_or_else(|| usage("--out is required"))?.to_string(),
            );
            let threads = s.values.get("threads").cloned();
            let table = match threads {
                Some(t) => {
                    let t: usize = t.parse().map_err(|_| usage(format!("invalid value for threads: `{t}`")))?;
                    run_sweep_with_threads(&spec, master_seed, t.max(1))
                }
                None => run_sweep(&spec, master_seed),
            }
            .map_err(|e| usage(e.to_string()))?;
            let csv = emit_csv(&table);
            write_file(&out_path, &csv)?;
            write_file(&sidecar(&out_path, ".config"), &s.echo(&KEYS[..8]))?;
            out.write_all(csv.as_bytes()).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
        Command::Play { game, formula_file, vs, games, seed, transcript, human, machine_first } => {
            let mut s = Settings::resolve(
                &["heaps", "state-space", "formula-file", "vs", "games", "seed"],
                vec![
                    ("heaps", game.heaps),
                    ("state-space", game.state_space),
                    ("formula-file", path_opt(&formula_file)),
                    ("vs", vs),
                    ("games", opt(&games)),
                    ("seed", opt(&seed)),
                ],
                game.config.as_deref(),
            )?;
            let heaps = s.heaps("4,4,4,3")?;
            let mode = s.mode()?;
            let chrom = read_formula(s.get_opt("formula-file"), heaps.len())?;
            let start = GameState::canonical(heaps, mode);
            if human {
                interactive_session(&chrom, &start, mode, !machine_first, input, out).map_err(io_fail)?;
                return Ok(EXIT_OK);
            }
            let vs: String = s.get("vs", "random".to_string())?;
            let games: usize = s.get("games", 1000)?;
            let seed: u64 = s.get("seed", 0)?;
            let registry = StrategyRegistry::with_builtins();
            let ctx = StrategyContext { formula: Some(chrom.clone()), seed, start: start.clone(), mode };
            let mut me = registry.create("formula", &ctx).map_err(|e| usage(e.to_string()))?;
            let mut opponent = registry.create(&vs, &ctx).map_err(|e| usage(e.to_string()))?;
            let mut text = s.echo(&["heaps", "state-space", "formula-file", "vs", "games", "seed"]);
            text.push_str(&format!("formula = {}\n", chrom.to_infix()));
            let mut wins = 0;
            for g in 0..games {
                let record = play_game(me.as_mut(), opponent.as_mut(), &start, mode)
                    .map_err(|e| failure(e.to_string()))?;
                if record.winner == Player::First {
                    wins += 1;
                }
                if transcript {
                    text.push_str(&format!("game {}\n", g + 1));
                    for line in record.transcript_lines() {
                        text.push_str(&line);
                        text.push('\n');
                    }
                    text.push_str(&format!("winner: {}\n", record.winner));
                }
            }
            text.push_str(&format!("wins = {wins}\nlosses = {}\n", games - wins));
            out.write_all(text.as_bytes()).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn dispatch<I, T>(argv: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match run(cli.command, input, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut input = std::io::Cursor::new(Vec::new());
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["mepnim"];
        argv.extend_from_slice(args);
        let code = dispatch(argv, &mut input, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn oracle_table() {
        let (code, out, _) = call(&["oracle", "--heaps", "2,1", "--state-space", "tuple"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 6);
        assert!(out.lines().any(|l| l == "(1,1) P"));
        assert!(out.lines().any(|l| l == "(2,1) N"));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = call(&["oracle", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(!err.is_empty());
        let (code, _, _) = call(&["oracle", "--state-space", "graph"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = call(&["evolve", "--pop", "3"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn bad_formula_file() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.mep");
        fs::write(&bad, "1: a1\n2: xor 3 1\n3: a2\n").unwrap();
        let (code, _, err) = call(&["fitness", "--formula-file", bad.to_str().unwrap()]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# comment\nheaps = 2,1\nstate-space = multiset\n").unwrap();
        let c = cfg.to_str().unwrap();
        let (_, out, _) = call(&["oracle", "--config", c]);
        assert_eq!(out.lines().count(), 5);
        let (_, out, _) = call(&["oracle", "--config", c, "--state-space", "tuple"]);
        assert_eq!(out.lines().count(), 6);
        fs::write(&cfg, "colour = blue\n").unwrap();
        assert_eq!(call(&["oracle", "--config", c]).0, EXIT_USAGE);
    }

    #[test]
    fn fitness_and_verify_subcommands() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("worked.mep");
        fs::write(&f, "1: a1\n2: a2\n3: * 1 2\n4: - 1 3\n").unwrap();
        let f = f.to_str().unwrap();
        let (code, out, _) = call(&["fitness", "--formula-file", f, "--heaps", "2,1", "--state-space", "tuple"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("fitness = 4\n"));
        assert!(out.contains("rule_i = 4\n"));
        let (code, out, _) = call(&["verify", "--formula-file", f, "--heaps", "2,1", "--state-space", "tuple"]);
        assert_eq!(code, EXIT_VERIFY_FAILED);
        assert!(out.contains("disagree: 2 states"));
        // formula mentions a2 only, so it cannot run on a one-heap game
        assert_eq!(call(&["fitness", "--formula-file", f, "--heaps", "3"]).0, EXIT_USAGE);
    }

    #[test]
    fn evolve_budget_exhaustion_has_its_own_code() {
        let dir = tempfile::tempdir().unwrap();
        let out_path = dir.path().join("best.mep");
        let (code, out, _) = call(&[
            "evolve", "--pop", "4", "--len", "2", "--gens", "1", "--seed", "3", "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_BUDGET_EXHAUSTED);
        assert!(out.contains("# success = false"));
        assert!(!out_path.exists());
    }
}
