use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmtsp::report::strip_timing;
use mmtsp::{validate_solution, Instance, Solution};

fn mmtsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmtsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mmtsp-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_solve_writes_every_artifact() {
    let dir = scratch("solve");
    let inst_path = dir.join("inst.json");
    let out = mmtsp(&[
        "gen",
        "--scenario",
        "2",
        "--n-targets",
        "12",
        "--assign-frac",
        "0.2",
        "--seed",
        "4",
        "--out",
        s(&inst_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let (trace, json, prefix) = (
        dir.join("trace.csv"),
        dir.join("sol.json"),
        dir.join("tours"),
    );
    let out = mmtsp(&[
        "solve",
        "--instance",
        s(&inst_path),
        "--seed",
        "9",
        "--tour-mode",
        "exact",
        "--trace",
        s(&trace),
        "--json",
        s(&json),
        "--svg",
        s(&prefix),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("local search"));

    let inst = Instance::load(&inst_path).unwrap();
    let sol: Solution = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(validate_solution(&inst, &sol).is_empty());

    let trace = std::fs::read_to_string(&trace).unwrap();
    assert!(trace.starts_with("stage,objective,wall_s\ninit,"));
    assert!(trace.contains("# iterations,"));
    for label in ["init", "local_search", "final"] {
        let svg = std::fs::read_to_string(dir.join(format!("tours_{label}.svg"))).unwrap();
        assert!(svg.contains("<svg") && svg.contains("class=\"tour\""));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bench_is_reproducible_modulo_timing() {
    let dir = scratch("bench");
    let run = |name: &str| {
        let path = dir.join(name);
        let out = mmtsp(&[
            "bench",
            "--scenario",
            "1",
            "--n-targets",
            "8",
            "--assign-frac",
            "0.1",
            "--instances",
            "4",
            "--seed",
            "21",
            "--oracle",
            "--out",
            s(&path),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        std::fs::read_to_string(path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert!(a.starts_with("instance,init_obj,ls_obj,final_obj,oracle_obj"));
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert_eq!(strip_timing(&a), strip_timing(&b));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = scratch("invalid");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"targets": [], "vehicles": []}"#).unwrap();
    assert_eq!(
        mmtsp(&["solve", "--instance", s(&bad)]).status.code(),
        Some(1)
    );
    assert_eq!(
        mmtsp(&[
            "bench",
            "--scenario",
            "3",
            "--n-targets",
            "5",
            "--out",
            "x.csv"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(mmtsp(&["solve"]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unreadable_paths_exit_with_two() {
    let dir = scratch("io");
    let missing = dir.join("missing.json");
    assert_eq!(
        mmtsp(&["solve", "--instance", s(&missing)]).status.code(),
        Some(2)
    );
    let nowhere = dir.join("no/such/dir/inst.json");
    let out = mmtsp(&[
        "gen",
        "--scenario",
        "1",
        "--n-targets",
        "5",
        "--out",
        s(&nowhere),
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
