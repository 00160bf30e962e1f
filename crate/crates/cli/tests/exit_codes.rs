use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn wfpowl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfpowl")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    wfpowl(args).status.code().expect("exited normally")
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn retailer_converts_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("retailer.powl.json");
    assert_eq!(code(&["convert", path(&fixture("retailer.pnml")), "--verify", "12", "-o", path(&out)]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let model = wfpowl::io::parse_powl(&text).unwrap();
    assert!(matches!(model, wfpowl::powl::PowlNode::ChoiceGraph { .. }));
    assert_eq!(code(&["equiv", path(&fixture("retailer.pnml")), path(&out), "--max-len", "10"]), 0);
}

#[test]
fn irreducible_nets_fall_through() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["long_term_dependency", "choice_sync_handle", "loop_into_parallel_branch", "interleaved_init_loop"] {
        let diag = dir.path().join(format!("{name}.fragment.pnml"));
        let input = fixture(&format!("{name}.pnml"));
        assert_eq!(code(&["convert", path(&input), "--fail-diagnostics", path(&diag)]), 1, "{name}");
        let fragment = std::fs::read_to_string(&diag).unwrap();
        wfpowl::io::parse_pnml(&fragment, &Default::default()).unwrap();
    }
}

#[test]
fn preprocessing_flag_decides_rescue() {
    let input = fixture("choice_or_concurrent.pnml");
    assert_eq!(code(&["convert", path(&input), "--no-preprocess"]), 1);
    assert_eq!(code(&["convert", path(&input), "--verify", "8"]), 0);
    assert_eq!(code(&["convert", path(&input), "--rules", "dup"]), 1);
    assert_eq!(code(&["convert", path(&input), "--rules", "split,join"]), 0);
}

#[test]
fn verify_reports_unsound_nets() {
    assert_eq!(code(&["verify", path(&fixture("retailer.pnml"))]), 0);
    let out = wfpowl(&["verify", path(&fixture("unsound_deadlock.pnml"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("not sound"));
}

#[test]
fn equiv_prints_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.powl.json");
    std::fs::write(&model, r#"{"type": "transition", "label": "ship order"}"#).unwrap();
    let out = wfpowl(&["equiv", path(&fixture("retailer.pnml")), path(&model), "--max-len", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("only by the"));
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.pnml");
    std::fs::write(&broken, "<pnml><net id=\"n\">").unwrap();
    assert_eq!(code(&["convert", path(&broken)]), 2);
    assert_eq!(code(&["convert", path(&dir.path().join("missing.pnml"))]), 2);
    assert_eq!(code(&["convert", path(&fixture("retailer.pnml")), "--rules", "murata"]), 2);
    assert_eq!(code(&["verify"]), 2);
    let bad_model = dir.path().join("bad.powl.json");
    std::fs::write(&bad_model, r#"{"type": "loop"}"#).unwrap();
    assert_eq!(code(&["equiv", path(&fixture("retailer.pnml")), path(&bad_model)]), 2);
    assert_eq!(code(&["generate", "--transitions", "0", "-o", path(&dir.path().join("g"))]), 2);
}

#[test]
fn generate_writes_a_matching_pair() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        assert_eq!(code(&["generate", "--seed", "7", "--transitions", "8", "-o", path(&out)]), 0);
        out
    };
    let a = run("a");
    let b = run("b");
    for file in ["net_8_7.pnml", "net_8_7.powl.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
    }
    assert_eq!(code(&["equiv", path(&a.join("net_8_7.pnml")), path(&a.join("net_8_7.powl.json"))]), 0);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    assert_eq!(code(&["bench", "--sizes", "5,10", "--per-size", "2", "--csv", path(&csv)]), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "size,seed,transitions,places,wall_ms,success,po_nodes,cg_nodes");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.starts_with("5,") || l.starts_with("10,")));
}
