use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(name)
}

fn hlpg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlpg"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_corpus() {
    for f in [
        "as.hlpg",
        "as_seq.hlpg",
        "cm.hlpg",
        "sr.hlpg",
        "one_place.hlpg",
    ] {
        let o = hlpg(&["check", path(&corpus(f))]);
        assert_eq!(code(&o), 0, "{f}: {}", stderr(&o));
    }
}

#[test]
fn check_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.hlpg");
    std::fs::write(&bad, "game x;\nplace A : black;\n").unwrap();
    let o = hlpg(&["check", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("bad.hlpg:2:7: error:"),
        "{}",
        stderr(&o)
    );

    let o = hlpg(&["check", path(&dir.path().join("missing.hlpg"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn instantiate_native() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("as2.net");
    let o = hlpg(&[
        "instantiate",
        path(&corpus("as.hlpg")),
        "-P",
        "n=2",
        "-f",
        "native",
        "-o",
        path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("place ")).count(), 17);
    assert_eq!(text.lines().filter(|l| l.starts_with("trans ")).count(), 28);
    assert!(stdout(&o).contains("17 places"));

    let o = hlpg(&["instantiate", path(&corpus("cm.hlpg")), "-f", "pnml"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("<?xml"));
    assert!(stderr(&o).contains("27 places"));
}

#[test]
fn instantiate_rejects_bad_parameters() {
    let o = hlpg(&["instantiate", path(&corpus("as.hlpg")), "-P", "n=0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("positive"));

    let o = hlpg(&[
        "instantiate",
        path(&corpus("cm.hlpg")),
        "-P",
        "n=2",
        "-P",
        "k=2",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("k < n"));

    let o = hlpg(&["instantiate", path(&corpus("as.hlpg")), "-P", "n"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unbound_parameter_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("p.hlpg");
    std::fs::write(
        &f,
        "game p;\npar m : nat;\nplace A : {1..m} kind sys init all;\n",
    )
    .unwrap();
    let o = hlpg(&["instantiate", path(&f)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("`m`"), "{}", stderr(&o));
    let o = hlpg(&["instantiate", path(&f), "-P", "m=3"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn limits_exit_3() {
    let o = hlpg(&["reach", path(&corpus("sr.hlpg")), "--max-states", "10"]);
    assert_eq!(code(&o), 3);
    let o = hlpg(&[
        "instantiate",
        path(&corpus("as.hlpg")),
        "--max-valuations",
        "3",
    ]);
    assert_eq!(code(&o), 3);
    let o = hlpg(&["verify", path(&corpus("cm.hlpg")), "--max-states", "5"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn reach_reports() {
    let o = hlpg(&["reach", path(&corpus("as.hlpg"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("bad reachable: true"));

    let o = hlpg(&["reach", path(&corpus("one_place.hlpg")), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["nodes"], 1);
    assert_eq!(v["bad_reachable"], false);

    let o = hlpg(&["reach", path(&corpus("cm.hlpg")), "--json", "--sequential"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["contact_free"], true);
}

#[test]
fn verify_passes_and_detects_faults() {
    for f in ["as.hlpg", "cm.hlpg", "sr.hlpg"] {
        let o = hlpg(&["verify", path(&corpus(f)), "--samples", "100"]);
        assert_eq!(code(&o), 0, "{f}: {}", stdout(&o));
        assert!(stdout(&o).contains("PASS"));
    }
    let o = hlpg(&[
        "verify",
        path(&corpus("as.hlpg")),
        "--inject-fault",
        "--json",
    ]);
    assert_eq!(code(&o), 4);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn verify_is_deterministic() {
    let run = || {
        stdout(&hlpg(&[
            "verify",
            path(&corpus("cm.hlpg")),
            "--seed",
            "9",
            "--json",
        ]))
    };
    assert_eq!(run(), run());
}

#[test]
fn bench_writes_models() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("as4.hlpg");
    let o = hlpg(&[
        "bench",
        "as",
        "-P",
        "n=4",
        "--variant",
        "seq",
        "-o",
        path(&f),
    ]);
    assert_eq!(code(&o), 0);
    let o = hlpg(&["stats", path(&f), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["transitions_per_origin"]["info"], 12);

    let o = hlpg(&["bench", "cm", "-P", "n=3", "-P", "k=2"]);
    assert_eq!(
        stdout(&o),
        std::fs::read_to_string(corpus("cm.hlpg")).unwrap()
    );

    let o = hlpg(&["bench", "sr", "-P", "n=2", "-P", "k=2", "-o", path(&f)]);
    assert_eq!(code(&o), 0);
    let o = hlpg(&["stats", path(&f), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        (v["place_count"].as_u64(), v["transition_count"].as_u64()),
        (Some(47), Some(49))
    );

    let o = hlpg(&["bench", "xx"]);
    assert_eq!(code(&o), 1);
    let o = hlpg(&["bench", "cm", "-P", "n=2", "-P", "k=2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stats_flags() {
    let o = hlpg(&["stats", path(&corpus("sr.hlpg")), "--all", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["contact_free"], true);
    assert_eq!(v["one_safe"], true);
    let o = hlpg(&["stats", path(&corpus("sr.hlpg")), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.get("reach_nodes").is_none());
}

#[test]
fn render_and_help() {
    let o = hlpg(&["render", path(&corpus("as.hlpg"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("digraph \"AS\""));
    let o = hlpg(&["--help"]);
    assert_eq!(code(&o), 0);
    for sub in [
        "check",
        "instantiate",
        "reach",
        "verify",
        "bench",
        "stats",
        "render",
    ] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
    assert!(!stdout(&o).contains("inject"));
    let o = hlpg(&["--bogus"]);
    assert_eq!(code(&o), 1);
}
