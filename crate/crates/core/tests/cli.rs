use std::process::{Command, Output};

fn mathon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mathon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, serde_json::Value) {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let out = mathon(&all);
    let v = serde_json::from_slice(&out.stdout).expect("valid JSON on stdout");
    (out.status.code().unwrap(), v)
}

#[test]
fn pipeline_passes_with_identical_verdicts() {
    let (code, v) = json(&["pipeline"]);
    assert_eq!(code, 0);
    assert_eq!(v["passed"], true);
    assert_eq!(v["command"], "pipeline");
    let text = mathon(&["pipeline"]);
    assert_eq!(text.status.code(), Some(0));
    let text = String::from_utf8(text.stdout).unwrap();
    let checks = v["checks"].as_object().unwrap();
    assert!(!checks.is_empty());
    for (name, ok) in checks {
        let verdict = if ok.as_bool().unwrap() { "PASS" } else { "FAIL" };
        assert!(
            text.lines().any(|l| l.contains(name.as_str()) && l.contains(verdict)),
            "text report lacks {verdict} {name}"
        );
    }
}

#[test]
fn json_output_is_byte_deterministic() {
    let a = mathon(&["--format", "json", "pipeline", "--seed-index", "5"]);
    let b = mathon(&["--format", "json", "pipeline", "--seed-index", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let a = mathon(&["--format", "json", "polarity-search"]);
    let b = mathon(&["--format", "json", "polarity-search", "--jobs", "4"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["pipeline", "--seed-index", "24"],
        vec!["verify", "9"],
        vec!["verify", "x"],
        vec!["bogus"],
        vec!["--format", "yaml", "pipeline"],
    ] {
        assert_eq!(mathon(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn every_lemma_verifies() {
    for lemma in ["1", "4", "5", "6", "15"] {
        let (code, v) = json(&["verify", lemma]);
        assert_eq!(code, 0, "lemma {lemma}");
        assert_eq!(v["passed"], true);
        assert_eq!(v["lemma"], lemma.parse::<u32>().unwrap());
    }
}

#[test]
fn polarity_search_reports_both_witnesses() {
    let (code, v) = json(&["polarity-search"]);
    assert_eq!(code, 0);
    assert_eq!(v["hyperbolic"]["singular_points"], 130);
    assert_eq!(v["elliptic"]["singular_points"], 112);
}

#[test]
fn exhausted_search_exits_1() {
    let out = mathon(&["polarity-search", "--budget", "0", "--search-group", "full"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn out_and_quiet() {
    let dir = std::env::temp_dir().join(format!("mathon-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = mathon(&["--format", "json", "--out", path.to_str().unwrap(), "verify", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    std::fs::remove_dir_all(&dir).unwrap();

    let out = mathon(&["--quiet", "verify", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn timings_are_opt_in() {
    let (_, v) = json(&["pipeline"]);
    assert!(v["timings_ms"].as_object().unwrap().is_empty());
    let (_, v) = json(&["--timings", "pipeline"]);
    assert!(!v["timings_ms"].as_object().unwrap().is_empty());
}
