use stably_distinct_cli::{run_args, Outcome, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn run(args: &str) -> Outcome {
    run_args(std::iter::once("stably-distinct").chain(args.split_whitespace()))
}

#[test]
fn classify_h1() {
    let out = run("classify --n 1 --q -1,1 --c 1");
    assert_eq!(out.code, EXIT_PASS);
    assert_eq!(out.report.trim(), "V_{0,1}");
    assert_eq!(run("classify --n 1 --q -2,1 --c 1").report.trim(), "V_{1,1}");
}

#[test]
fn equiv_q_family() {
    let out = run("equiv --n 1 --q -1,1 --c 0 --q2 1,-2,1 --c2 0");
    assert_eq!(out.code, EXIT_PASS);
    assert_eq!(out.report.lines().next(), Some("NotEquivalent"));
}

#[test]
fn equiv_with_witness_json() {
    let out = run("equiv --n 2 --q -1,1 --c 1 --q2 -1,4 --c2 1/4 --format json");
    assert_eq!(out.code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out.report).unwrap();
    assert_eq!(v["hypersurfaces"]["verdict"], "Equivalent");
    assert_eq!(v["hypersurfaces"]["mu"], "4");
    assert_eq!(v["witness_verified"], true);
}

#[test]
fn equiv_in_quadratic_field() {
    let over_q = run("equiv --n 1 --q 1,0,1 --c 0 --q2 1,0,4 --c2 0");
    assert!(over_q.report.starts_with("NotDecidableInField"));
    let over_q2 = run("equiv --n 1 --q 1,0,1 --c 0 --q2 1,0,4 --c2 0 --adjoin-sqrt 2");
    assert!(over_q2.report.starts_with("Equivalent"), "{}", over_q2.report);
    assert!(over_q2.report.contains("witness map verified: true"));
}

#[test]
fn usage_errors() {
    assert_eq!(run("classify --n 1 --q -1,1").code, EXIT_USAGE);
    assert_eq!(run("classify --n 0 --q -1,1 --c 1").code, EXIT_USAGE);
    assert_eq!(run("classify --n 1 --q a,b --c 1").code, EXIT_USAGE);
    assert_eq!(run("frobnicate").code, EXIT_USAGE);
    assert_eq!(run("verify-theorem --n 1 --k-max 1").code, EXIT_USAGE);
    assert_eq!(run("series-check --n 1 --order 1").code, EXIT_USAGE);
    assert_eq!(run("equiv --n 1 --q 1 --c 0 --q2 1").code, EXIT_USAGE);
}

#[test]
fn stable_and_fiber_certificates() {
    for args in [
        "stable-equiv --n 2 --q 1,-2,1",
        "stable-equiv --n 1 --q 1,-2,1 --points 10 --seed 4",
        "fiber-iso --n 3 --q 2,-1,0,5 --c -1/2",
        "fiber-iso --n 1 --q -1,1 --c 1 --points 10",
        "series-check --n 1 --order 8",
    ] {
        let out = run(args);
        assert_eq!(out.code, EXIT_PASS, "{}\n{}", args, out.report);
        assert!(out.report.starts_with("PASS"));
    }
}

#[test]
fn exit_code_matches_pass_field() {
    for args in [
        "verify-theorem --n 1 --k-max 2 --format json",
        "stable-equiv --n 1 --q -1,1 --format json",
        "series-check --n 2 --order 4 --format json",
    ] {
        let out = run(args);
        let v: serde_json::Value = serde_json::from_str(&out.report).unwrap();
        let pass = v["pass"].as_bool().unwrap();
        assert_eq!(out.code, if pass { EXIT_PASS } else { EXIT_FAIL });
        assert!(v["checks"].as_array().unwrap().iter().all(|c| c["anchor"].is_string()));
    }
}

#[test]
fn deterministic_json() {
    let args = "verify-theorem --n 1 --k-max 2 --format json --points 5 --seed 17";
    assert_eq!(run(args).report, run(args).report);
    let args = "fiber-iso --n 2 --q 1,2 --c 1 --format json --points 5 --seed 3";
    assert_eq!(run(args).report, run(args).report);
}

#[test]
fn theorem_with_custom_levels() {
    let out = run("verify-theorem --n 2 --k-max 2 --c-samples 0,3,-5/2");
    assert_eq!(out.code, EXIT_PASS, "{}", out.report);
    assert!(out.report.contains("V(Q_k - -5/2)"));
}

#[test]
fn binary_runs() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_stably-distinct"))
        .args(["classify", "--n", "2", "--q", "0", "--c", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "V_{0,0}");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_stably-distinct"))
        .args(["classify"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--q"));
}
