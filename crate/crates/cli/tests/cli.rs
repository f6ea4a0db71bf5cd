use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hrcap::{builtin_counterexample, parse_document, serialize_instance};
use tempfile::TempDir;

fn hrcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn last_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or_default().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn counterexample(dir: &TempDir) -> PathBuf {
    write(dir, "ce.txt", &serialize_instance(&builtin_counterexample()))
}

#[test]
fn single_expand_reports_the_second_hospital() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let o = hrcap(&["solve", s(&ce), "--problem", "single-expand"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("delta expand 0 1 0 0\n"), "{out}");
    assert!(out.contains("objective 8\n"));
    assert_eq!(last_line(&o), "result solve 8");
}

#[test]
fn zero_budget_gives_the_deferred_acceptance_objective() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let o = hrcap(&["solve", s(&ce), "--problem", "min-avg-expand", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("delta expand 0 0 0 0\n"));
    assert_eq!(last_line(&o), "result solve 11");
}

#[test]
fn decisions_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let yes = hrcap(&["solve", s(&ce), "--problem", "single-expand", "--target", "8"]);
    assert_eq!(yes.status.code(), Some(0));
    assert_eq!(last_line(&yes), "result solve YES");
    let no = hrcap(&["solve", s(&ce), "--problem", "single-expand", "--target", "7"]);
    assert_eq!(no.status.code(), Some(1));
    assert!(stdout(&no).contains("decision NO\n"));
    assert_eq!(last_line(&no), "result solve NO");
}

#[test]
fn heuristics_pick_the_popular_hospital() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    for mode in ["majority", "borda"] {
        let o = hrcap(&["solve", s(&ce), "--problem", "single-expand", "--mode", mode]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(last_line(&o), "result solve 10", "{mode}");
    }
    let o = hrcap(&["solve", s(&ce), "--problem", "min-avg-reduce", "--budget", "1", "--mode", "borda"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_and_target_come_from_the_file() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}budget 1\ntarget 8\n", serialize_instance(&builtin_counterexample()));
    let f = write(&dir, "doc.txt", &text);
    let o = hrcap(&["solve", s(&f), "--problem", "min-avg-expand"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("objective 8\n"));
    assert_eq!(last_line(&o), "result solve YES");
}

#[test]
fn partition_problems_read_partition_lines() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{}partition 0: 0 1 budget 1\npartition 1: 2 3 budget 0\n",
        serialize_instance(&builtin_counterexample())
    );
    let f = write(&dir, "parts.txt", &text);
    let o = hrcap(&["solve", s(&f), "--problem", "max-card-expand-part"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "result solve 6");
    let ce = counterexample(&dir);
    let missing = hrcap(&["solve", s(&ce), "--problem", "min-avg-expand-part"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn workers_do_not_change_output() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let args = ["solve", s(&ce), "--problem", "min-avg-expand", "--budget", "3"];
    let one = hrcap(&[&["--workers", "1"], &args[..]].concat());
    let four = hrcap(&[&["--workers", "4"], &args[..]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn syntax_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.txt", "");
    let o = hrcap(&["solve", s(&empty), "--problem", "single-expand"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert_eq!(last_line(&o), "result solve error");
    let garbled = write(&dir, "bad.txt", "hrcap 1\nresidents x\n");
    let o = hrcap(&["enumerate", s(&garbled)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    assert_eq!(hrcap(&["solve", s(&ce)]).status.code(), Some(2));
    assert_eq!(hrcap(&["solve", s(&ce), "--problem", "nonsense"]).status.code(), Some(2));
    assert_eq!(hrcap(&["solve", s(&ce), "--problem", "min-avg-expand"]).status.code(), Some(2));
    assert_eq!(hrcap(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hrcap(&["--workers", "0", "enumerate", s(&ce)]).status.code(), Some(2));
    let missing = dir.path().join("nope.txt");
    assert_eq!(hrcap(&["enumerate", s(&missing)]).status.code(), Some(2));
}

#[test]
fn non_mutual_lists_exit_three() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "nm.txt",
        "hrcap 1\nresidents 1\nhospitals 1\ncapacities 1\nrlist 0: 0\n",
    );
    let o = hrcap(&["enumerate", s(&f)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid instance"));
}

#[test]
fn infeasible_requests_exit_three() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let o = hrcap(&["solve", s(&ce), "--problem", "min-avg-reduce", "--budget", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let tied = write(
        &dir,
        "tied.txt",
        "hrcap 1\nresidents 2\nhospitals 2\ncapacities 1 1\nrlist 0: ( 0 1 )\nrlist 1: 0 1\nhlist 0: 0 1\nhlist 1: 0 1\n",
    );
    let o = hrcap(&["solve", s(&tied), "--problem", "single-expand"]);
    assert_eq!(o.status.code(), Some(3));
    let o = hrcap(&["enumerate", s(&tied)]);
    assert_eq!(o.status.code(), Some(3));
    let o = hrcap(&["gadget", s(&ce), "--kind", "expansion"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn guard_and_limit_exit_four() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let o = hrcap(&["--guard", "5", "solve", s(&ce), "--problem", "min-avg-expand", "--budget", "3"]);
    assert_eq!(o.status.code(), Some(4));
    let o = hrcap(&["enumerate", s(&ce), "--limit", "3"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_lists_blocking_pairs() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let m = write(&dir, "m.txt", "pair 0 0\npair 1 1\n");
    let o = hrcap(&["verify", s(&ce), "--matching", s(&m)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("blocking 0 1\n"));
    assert_eq!(last_line(&o), "result verify unstable");

    let solved = hrcap(&["solve", s(&ce), "--problem", "min-avg-expand", "--budget", "0"]);
    let pairs: String = stdout(&solved).lines().filter(|l| l.starts_with("pair")).map(|l| format!("{l}\n")).collect();
    let good = write(&dir, "good.txt", &pairs);
    let o = hrcap(&["verify", s(&ce), "--matching", s(&good)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "result verify stable");

    let over = write(&dir, "over.txt", "pair 0 0\npair 3 0\n");
    assert_eq!(hrcap(&["verify", s(&ce), "--matching", s(&over)]).status.code(), Some(3));
}

#[test]
fn enumerate_lists_every_matching() {
    let dir = TempDir::new().unwrap();
    let ce = counterexample(&dir);
    let o = hrcap(&["enumerate", s(&ce)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let count = out.lines().filter(|l| l.starts_with("matching ")).count();
    assert_eq!(last_line(&o), format!("result enumerate {count}"));
    assert!(out.contains("objective 11"));
}

#[test]
fn gen_is_seeded() {
    let a = hrcap(&["--seed", "9", "gen", "--residents", "3", "--hospitals", "3", "--ties", "1"]);
    let b = hrcap(&["--seed", "9", "gen", "--residents", "3", "--hospitals", "3", "--ties", "1"]);
    let c = hrcap(&["--seed", "10", "gen", "--residents", "3", "--hospitals", "3", "--ties", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(last_line(&a), "result gen 1");
    let doc = parse_document(&stdout(&a)).unwrap();
    assert_eq!(doc.instance.num_residents(), 3);
    let bad = hrcap(&["gen", "--capacity", "lots"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn gen_manifest_writes_files() {
    let dir = TempDir::new().unwrap();
    let manifest = write(
        &dir,
        "m.txt",
        "gen 1 residents 3 hospitals 2 capacity uniform:1:2\ngen 2 residents 2 hospitals 2 ties 1\n",
    );
    let out = dir.path().join("out");
    let o = hrcap(&["gen", "--manifest", s(&manifest), "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "result gen 2");
    let second = fs::read_to_string(out.join("instance-001.txt")).unwrap();
    assert!(parse_document(&second).unwrap().instance.has_ties());
}

#[test]
fn gadget_output_parses_back() {
    let dir = TempDir::new().unwrap();
    let gen = hrcap(&["--seed", "4", "gen", "--residents", "2", "--hospitals", "2", "--ties", "1"]);
    let src = write(&dir, "src.txt", &stdout(&gen));
    let o = hrcap(&["gadget", s(&src), "--kind", "expansion", "--target", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "result gadget 10");
    let doc = parse_document(&stdout(&o)).unwrap();
    assert_eq!(doc.budget, Some(2));
    assert_eq!(doc.target, Some(10));
    assert!(!doc.map.is_empty());

    let file = dir.path().join("g.txt");
    let o = hrcap(&["gadget", s(&src), "--kind", "c2-amplify", "--padding", "4", "--output", s(&file)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "result gadget 8");
    assert_eq!(parse_document(&fs::read_to_string(&file).unwrap()).unwrap().instance.num_residents(), 6);

    let o = hrcap(&["gadget", s(&src), "--kind", "c2-amplify", "--padding", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn split_and_partition_gadgets() {
    let dir = TempDir::new().unwrap();
    let src = write(
        &dir,
        "hrti.txt",
        "hrcap 1\nresidents 2\nhospitals 2\ncapacities 1 1\nrlist 0: 0 1\nrlist 1: 0\nhlist 0: ( 0 1 )\nhlist 1: 0\n",
    );
    let o = hrcap(&["gadget", s(&src), "--kind", "t4-split", "--target", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = parse_document(&stdout(&o)).unwrap();
    assert_eq!(doc.instance.num_hospitals(), 3);
    assert!(doc.partition.is_some());

    let hri = write(
        &dir,
        "hri.txt",
        "hrcap 1\nresidents 2\nhospitals 2\ncapacities 0 1\nrlist 0: 0 1\nrlist 1: 1\nhlist 0: 0\nhlist 1: 1 0\npartition 0: 0 1 budget 1\n",
    );
    let o = hrcap(&["gadget", s(&hri), "--kind", "t3-amplify", "--copies", "2", "--padding", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(last_line(&o), "result gadget 10");
    let g = write(&dir, "t3.txt", &stdout(&o));
    let solved = hrcap(&["solve", s(&g), "--problem", "min-avg-expand-part"]);
    assert!(matches!(solved.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&solved.stderr));
}

#[test]
fn stdin_input_is_accepted() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_hrcap"))
        .args(["solve", "-", "--problem", "min-avg-expand", "--budget", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(serialize_instance(&builtin_counterexample()).as_bytes())
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "result solve 8");
}
