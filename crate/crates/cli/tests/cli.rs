use std::process::{Command, Output};

use intersective::certify::Counterexample;
use intersective::oracle::verify_counterexample;
use intersective::{validate_certificate, validate_family, Certificate, RootWitness, Verdict};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intersective"))
        .args(args)
        .env_remove("INTERSECTIVE_SCAN_BUDGET")
        .env_remove("INTERSECTIVE_PRIME_BOUND")
        .env_remove("INTERSECTIVE_SUBSET_CAP")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn envelope(o: &Output) -> Value {
    let text = stdout(o);
    let v: Value = serde_json::from_str(text.trim()).expect("single JSON object");
    assert_eq!(v["schema_version"], "1");
    v
}

fn strip_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing_ms");
    v
}

#[test]
fn check_certificate_json() {
    let o = run(&["check", "13,17,221", "--json"]);
    assert_eq!(code(&o), 0);
    let v = envelope(&o);
    assert_eq!(v["command"], "check");
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(
        keys,
        [
            "schema_version",
            "command",
            "input_echo",
            "result",
            "timing_ms"
        ]
    );
    assert_eq!(v["input_echo"]["family"], serde_json::json!([13, 17, 221]));
    assert_eq!(v["input_echo"]["config"]["scan_budget"], 10_000_000);
    let r = &v["result"];
    assert_eq!(r["verdict"], "certificate");
    assert_eq!(r["subset_t"], serde_json::json!([1, 2, 3]));
    assert_eq!(r["odd_prime_witnesses"]["13"], 2);
    assert_eq!(r["odd_prime_witnesses"]["17"], 1);
    assert_eq!(r["dyadic_witness"], 2);
}

#[test]
fn check_counterexample_text() {
    let o = run(&["check", "2,3,6"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("no root modulo 512"));
}

#[test]
fn invalid_inputs_exit_2_with_one_line() {
    for args in [
        &["check", "13,17"][..],
        &["check", "2,x,3"],
        &["check", "2,3,3"],
        &["check", "4,3,5"],
        &["check", "1,3,5"],
        &["check"],
        &["root", "13,17,221"],
        &["root", "13,17,221", "--modulus", "0"],
        &["search", "--n", "2", "--pool-max", "10"],
        &["search", "--n", "3", "--pool-max", "20000"],
        &["corollary1", "4", "7"],
        &["corollary2", "13", "13"],
        &["nonsense"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(!err.contains("panicked"), "{args:?}");
    }
    let o = run(&["check", "13,17"]);
    assert!(stderr(&o).contains("family requires n ≥ 3"));
}

#[test]
fn env_override_echoed_and_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_intersective"))
        .args(["check", "2,3,5", "--json"])
        .env("INTERSECTIVE_PRIME_BOUND", "40")
        .output()
        .unwrap();
    let v = envelope(&o);
    assert_eq!(v["input_echo"]["config"]["prime_search_bound"], 40);
    // the non-residue witness is 43, but the dyadic obstruction still stands
    assert_eq!(code(&o), 1);
    assert_eq!(v["result"]["obstructions"].as_array().unwrap().len(), 1);

    let o = Command::new(env!("CARGO_BIN_EXE_intersective"))
        .args(["check", "-59,-55,-53"])
        .env("INTERSECTIVE_PRIME_BOUND", "20")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);

    let o = Command::new(env!("CARGO_BIN_EXE_intersective"))
        .args(["check", "13,17,221"])
        .env("INTERSECTIVE_SCAN_BUDGET", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("INTERSECTIVE_SCAN_BUDGET"));
}

#[test]
fn negative_members_accepted() {
    let o = run(&["check", "-7,11,19", "--json"]);
    assert!(matches!(code(&o), 0 | 1));
    assert_eq!(envelope(&o)["input_echo"]["family"][0], -7);
}

#[test]
fn json_round_trip_revalidates() {
    for fam in [
        "13,17,221",
        "7,11,19,31,209",
        "7,11,19,31,45353",
        "2,3,6",
        "5,11,55",
        "2,3,5",
        "-1,2,-2",
    ] {
        let o = run(&["check", fam, "--json"]);
        let v = envelope(&o);
        let values: Vec<i64> = fam.split(',').map(|s| s.parse().unwrap()).collect();
        let family = validate_family(&values).unwrap();
        let verdict: Verdict = serde_json::from_value(v["result"].clone()).unwrap();
        match &verdict {
            Verdict::Certificate(_) => {
                assert_eq!(code(&o), 0);
                let cert: Certificate = serde_json::from_value({
                    let mut r = v["result"].clone();
                    r.as_object_mut().unwrap().remove("verdict");
                    r
                })
                .unwrap();
                validate_certificate(&family, &cert).unwrap();
            }
            Verdict::Counterexample(_) => {
                assert_eq!(code(&o), 1);
                let cx: Counterexample = serde_json::from_value({
                    let mut r = v["result"].clone();
                    r.as_object_mut().unwrap().remove("verdict");
                    r
                })
                .unwrap();
                verify_counterexample(&family, &cx, 1_000_000).unwrap();
            }
        }
    }
}

#[test]
fn root_command() {
    let o = run(&["root", "13,17,221", "--modulus", "45", "--json"]);
    assert_eq!(code(&o), 0);
    let v = envelope(&o);
    let w: RootWitness = serde_json::from_value(v["result"]["witness"].clone()).unwrap();
    assert_eq!((w.root, w.modulus), (11, 45));

    let big = (1u64 << 63).to_string();
    let o = run(&["root", "13,17,221", "--modulus", &big, "--json"]);
    assert_eq!(code(&o), 0);
    let v = envelope(&o);
    assert_eq!(v["input_echo"]["modulus"], Value::String(big.clone()));
    assert_eq!(v["result"]["witness"]["modulus"], Value::String(big));
    let w: RootWitness = serde_json::from_value(v["result"]["witness"].clone()).unwrap();
    let f = validate_family(&[13, 17, 221]).unwrap();
    assert_eq!(f.eval_mod(w.root, w.modulus), 0);

    let o = run(&["root", "2,3,6", "--modulus", "45"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn counterexample_minimal() {
    let o = run(&[
        "counterexample",
        "5,11,55",
        "--minimal",
        "--bound",
        "1000",
        "--json",
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(envelope(&o)["result"]["minimal_failing_modulus"], 32);
    let o = run(&[
        "counterexample",
        "2,3,6",
        "--minimal",
        "--bound",
        "1000",
        "--json",
    ]);
    assert_eq!(envelope(&o)["result"]["minimal_failing_modulus"], 8);
    let o = run(&[
        "counterexample",
        "13,17,221",
        "--minimal",
        "--bound",
        "500",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        envelope(&o)["result"]["minimal_failing_modulus"],
        Value::Null
    );
    let o = run(&["counterexample", "2,3,6", "--minimal"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_command() {
    let o = run(&[
        "verify",
        "7,11,19,31,209",
        "--max-modulus",
        "2000",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v = envelope(&o);
    assert_eq!(v["result"]["consistent"], true);
    assert_eq!(v["result"]["minimal_failing_modulus"], Value::Null);

    let o = run(&["verify", "2,3,6", "--max-modulus", "1000", "--json"]);
    assert_eq!(code(&o), 0);
    let v = envelope(&o);
    assert_eq!(v["result"]["minimal_failing_modulus"], 8);
    assert_eq!(
        v["result"]["counterexample_audit"]["scanned"],
        serde_json::json!([true, true])
    );
}

#[test]
fn search_streams_json_lines() {
    let o = run(&[
        "search",
        "--n",
        "3",
        "--pool-max",
        "40",
        "--verdict",
        "certificate",
        "--limit",
        "20",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let (summary, hits) = lines.split_last().unwrap();
    assert_eq!(summary["command"], "search");
    assert_eq!(summary["result"]["families"], hits.len());
    assert!(!hits.is_empty());
    for h in hits {
        assert_eq!(h["verdict"], "certificate");
        let values: Vec<i64> = serde_json::from_value(h["family"].clone()).unwrap();
        let family = validate_family(&values).unwrap();
        let mut r = h.clone();
        r.as_object_mut().unwrap().remove("family");
        r.as_object_mut().unwrap().remove("verdict");
        let cert: Certificate = serde_json::from_value(r).unwrap();
        validate_certificate(&family, &cert).unwrap();
    }

    let o = run(&[
        "search",
        "--n",
        "3",
        "--pool-max",
        "10",
        "--negatives",
        "--limit",
        "5",
        "--json",
    ]);
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn corollaries() {
    let o = run(&["corollary1", "5", "11", "--json"]);
    assert_eq!(code(&o), 1);
    let r = &envelope(&o)["result"];
    assert_eq!(r["paper_condition"], true);
    assert_eq!(r["discrepancy"], true);

    let o = run(&["corollary2", "-7", "14", "--json"]);
    assert!(matches!(code(&o), 0 | 1));
    let r = &envelope(&o)["result"];
    assert_eq!(r["gcd"], 7);
    assert_eq!(r["c1d1"], -2);
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["check", "7,11,19,31,45353", "--json"][..],
        &["check", "2,3,5", "--json"],
        &["verify", "5,11,55", "--max-modulus", "200", "--json"],
        &["corollary1", "7", "29", "--json"],
    ] {
        let a = strip_timing(envelope(&run(args)));
        let b = strip_timing(envelope(&run(args)));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
    let args = [
        "search",
        "--n",
        "4",
        "--pool-max",
        "12",
        "--negatives",
        "--json",
    ];
    let strip = |s: String| -> Vec<String> {
        s.lines()
            .map(|l| {
                let v: Value = serde_json::from_str(l).unwrap();
                let v = if v.get("timing_ms").is_some() {
                    strip_timing(v)
                } else {
                    v
                };
                serde_json::to_string(&v).unwrap()
            })
            .collect()
    };
    assert_eq!(strip(stdout(&run(&args))), strip(stdout(&run(&args))));
}
