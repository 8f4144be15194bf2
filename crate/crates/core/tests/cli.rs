use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn mepnim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mepnim")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const XOR_MINUS: &str = "heaps=4 genes=7\n1: a1\n2: a2\n3: xor 1 2\n4: a3\n5: xor 3 4\n6: a4\n7: - 5 6\n";

#[test]
fn evolve_writes_chromosome_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = mepnim(&["evolve", "--heaps", "4,4,4,4", "--seed", "1", "--out", "f.mep"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for key in ["pop = 100", "len = 15", "gens = 100", "crossover-prob = 0.9", "mutations = 2", "func-prob = 0.5"] {
        assert!(text.contains(key), "missing `{key}` in\n{text}");
    }
    let chrom = std::fs::read_to_string(dir.path().join("f.mep")).unwrap();
    assert!(chrom.starts_with("heaps=4 genes=15\n"));

    // the written formula verifies, and the report works as a config file
    let v = mepnim(&["verify", "--formula-file", "f.mep", "--heaps", "4,4,4,4"], dir.path());
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains("agree"));
    let again = mepnim(&["evolve", "--config", "f.mep.report", "--out", "g.mep"], dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("f.mep")).unwrap(),
        std::fs::read(dir.path().join("g.mep")).unwrap()
    );
}

#[test]
fn verify_and_fitness_on_known_formula() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.mep"), XOR_MINUS).unwrap();
    let f = mepnim(&["fitness", "--formula-file", "x.mep", "--heaps", "4,4,4,4"], dir.path());
    assert_eq!(f.status.code(), Some(0));
    assert!(stdout(&f).contains("fitness = 0\n"));
    assert!(stdout(&f).contains("formula = (((a1 xor a2) xor a3) - a4)\n"));
    let v = mepnim(&["verify", "--formula-file", "x.mep", "--heaps", "4,4,4,4"], dir.path());
    assert_eq!(v.status.code(), Some(0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.mep"), "1: a1\n2: + 2 1\n").unwrap();
    assert_eq!(mepnim(&["fitness", "--formula-file", "bad.mep"], dir.path()).status.code(), Some(1));
    assert_eq!(mepnim(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(mepnim(&["evolve", "--pop", "2"], dir.path()).status.code(), Some(2));
    assert_eq!(mepnim(&["experiment", "--out", "x.csv"], dir.path()).status.code(), Some(2));
    let budget = mepnim(&["evolve", "--pop", "4", "--gens", "1", "--len", "2", "--seed", "0"], dir.path());
    assert_eq!(budget.status.code(), Some(3));
    std::fs::write(dir.path().join("a1.mep"), "1: a1\n").unwrap();
    let v = mepnim(&["verify", "--formula-file", "a1.mep", "--heaps", "2,2"], dir.path());
    assert_eq!(v.status.code(), Some(4));
    assert!(stdout(&v).starts_with("formula = a1\nstates = 6\ndisagree:"));
}

#[test]
fn play_against_random_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.mep"), XOR_MINUS).unwrap();
    for vs in ["random", "oracle", "bouton"] {
        let out = mepnim(
            &["play", "--formula-file", "x.mep", "--heaps", "4,4,4,3", "--vs", vs, "--games", "50", "--seed", "7"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0));
        assert!(stdout(&out).contains("wins = 50\nlosses = 0\n"), "{}", stdout(&out));
    }
    let out = mepnim(
        &["play", "--formula-file", "x.mep", "--heaps", "2,1,0,0", "--games", "1", "--transcript"],
        dir.path(),
    );
    let text = stdout(&out);
    assert!(text.contains("move: heap 1 take 1 -> (1,1,0,0)\n"), "{text}");
    assert!(text.contains("winner: first\n"));
    let unknown = mepnim(&["play", "--formula-file", "x.mep", "--vs", "nobody"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn human_session_over_stdin() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.mep"), XOR_MINUS).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_mepnim"))
        .args(["play", "--formula-file", "x.mep", "--heaps", "1,1,1,1", "--state-space", "tuple", "--human"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"5 1\n1 0\n1 1\n3 1\n").unwrap();
    let out = child.wait_with_output().unwrap();
    let text = stdout(&out);
    assert!(text.contains("no such heap"));
    assert!(text.contains("must remove at least one object"));
    assert!(text.contains("move: heap 2 take 1 -> (0,0,1,1)"));
    assert!(text.ends_with("machine wins\n"), "{text}");
}

#[test]
fn experiment_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = mepnim(
        &["experiment", "--name", "exp1", "--runs", "1", "--master-seed", "3", "--out", "r.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "param,value,runs,successes,success_rate,mean_gens_to_success,mean_best_fitness");
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("population_size,20,1,"));
    let config = std::fs::read_to_string(dir.path().join("r.csv.config")).unwrap();
    assert!(config.starts_with("name = exp1\nruns = 1\nmaster-seed = 3\n"));
}
