//! Golden-file tests for the command line. Each case stores exit code,
//! stdout and stderr in `tests/golden/<name>.txt`; run with `WMSO_BLESS=1`
//! to rewrite them after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wmso"))
        .current_dir(data())
        .arg("--session")
        .arg("session.json")
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn render(args: &[&str]) -> String {
    let (code, stdout, stderr) = run(args);
    format!("$ wmso {}\nexit {code}\n--- stdout\n{stdout}--- stderr\n{stderr}", args.join(" "))
}

const CASES: &[(&str, &[&str])] = &[
    ("eval_example1", &["eval", "example1.wmso", "abaa.word"]),
    ("eval_zero", &["eval", "zero.wmso", "abaa.word"]),
    ("eval_maxplus", &["--aggregate", "maxplus", "eval", "example1.wmso", "abaa.word"]),
    ("eval_counting", &["--aggregate", "counting", "eval", "example1.wmso", "abaa.word"]),
    ("eval_sum", &["eval", "sum12.wmso", "abaa.word"]),
    ("eval_json", &["--format", "json", "eval", "sum12.wmso", "abaa.word"]),
    ("eval_step", &["eval", "step_a.wmso", "ab_x1.word"]),
    ("eval_uncovered", &["eval", "step_a.wmso", "abaa.word"]),
    ("eval_parse_error", &["eval", "broken.wmso", "abaa.word"]),
    ("eval_missing_file", &["eval", "nope.wmso", "abaa.word"]),
    ("compile_mso", &["compile", "pa_y.wmso"]),
    ("compile_core", &["compile", "phi1.wmso"]),
    ("mc_example1", &["mc", "example1.wmso", "abaa.word", r#"{"1.0.0.0":1,"0.0.0.0":1,"0.0.1.1":1,"0.0.0.1":1}"#]),
    ("mc_wrong", &["mc", "example1.wmso", "abaa.word", r#"{"0.0.0.0":1}"#]),
    ("mc_step", &["mc", "step_a.wmso", "ab_x1.word", "1"]),
    ("equiv_commuted_sum", &["equiv", "sum12.wmso", "sum21.wmso"]),
    ("equiv_differ", &["equiv", "phi1.wmso", "phi2.wmso"]),
    ("equiv_steps", &["equiv", "step_a.wmso", "step_b.wmso"]),
    ("equiv_steps_differ", &["--format", "json", "equiv", "step_a.wmso", "one.wmso"]),
    ("equiv_gamma", &["equiv", "--gamma", "gamma.txt", "cond_guarded.wmso", "phi1.wmso"]),
    ("equiv_automata", &["equiv", "wa1.json", "wa2.json"]),
    ("equiv_automata_differ", &["equiv", "wa1.json", "wa3.json"]),
    ("sat_core_refused", &["sat", "--layer", "core", "prod1.wmso", "prod0.wmso"]),
    ("sat_core_bounded", &["--bound", "3", "sat", "--layer", "core", "prod1.wmso", "prod0.wmso"]),
    ("sat_core_found", &["--bound", "3", "sat", "--layer", "core", "sum_x.wmso", "plus_prod.wmso"]),
    ("sat_step", &["sat", "--layer", "step", "step_a.wmso", "one.wmso"]),
    ("sat_step_weight", &["sat", "--layer", "step", "--weight", "2", "step_a.wmso"]),
    ("sat_mso", &["sat", "--layer", "mso", "exists_a.wmso"]),
    ("validity_valid", &["validity", "valid.wmso"]),
    ("validity_invalid", &["validity", "exists_a.wmso"]),
    ("validity_gamma", &["validity", "--gamma", "gamma.txt", "exists_a.wmso"]),
    ("check_proof_demo", &["check-proof", "demo_prop3.proof"]),
    ("check_proof_rejected", &["check-proof", "bad_s3.proof"]),
    ("check_proof_c17_cap", &["--c17-cap", "0", "check-proof", "c17_k0.proof"]),
    ("check_proof_c17", &["check-proof", "c17_k0.proof"]),
    ("prove_step", &["prove-step", "step_a.wmso", "step_b.wmso"]),
    ("prove_step_refuted", &["prove-step", "step_a.wmso", "one.wmso"]),
    ("normalize_second", &["normalize", "--form", "second", "sum12.wmso"]),
    ("normalize_plus", &["--format", "json", "normalize", "--form", "plus", "cond_sum.wmso"]),
    ("normalize_plus_sum", &["normalize", "--form", "plus", "example1.wmso"]),
    ("random_core", &["--seed", "3", "random", "core"]),
];

#[test]
fn golden_outputs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var("WMSO_BLESS").is_ok();
    let mut failures = Vec::new();
    for (name, args) in CASES {
        let got = render(args);
        let path = dir.join(format!("{name}.txt"));
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(want) if want == got => {}
            Ok(want) => failures.push(format!("{name}:\n--- want\n{want}--- got\n{got}")),
            Err(_) => failures.push(format!("{name}: no golden file")),
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn exit_code_contract() {
    let code = |args: &[&str]| run(args).0;
    assert_eq!(code(&["equiv", "sum12.wmso", "sum21.wmso"]), 0);
    assert_eq!(code(&["equiv", "phi1.wmso", "phi2.wmso"]), 1);
    assert_eq!(code(&["check-proof", "demo_prop3.proof"]), 0);
    assert_eq!(code(&["check-proof", "bad_s3.proof"]), 1);
    assert_eq!(code(&["sat", "--layer", "core", "prod1.wmso", "prod0.wmso"]), 2);
    assert_eq!(code(&["eval", "broken.wmso", "abaa.word"]), 2);
    assert_eq!(code(&["eval", "step_a.wmso", "abaa.word"]), 3);
    assert_eq!(code(&["no-such-command"]), 2);
}

#[test]
fn refusal_message() {
    let (code, _, stderr) = run(&["sat", "--layer", "core", "prod1.wmso", "prod0.wmso"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("equational satisfiability for core-wMSO is undecidable; supply --bound"));
}

#[test]
fn witnesses_feed_back_into_eval() {
    let (code, stdout, _) = run(&["prove-step", "step_a.wmso", "one.wmso"]);
    assert_eq!(code, 1);
    let word = stdout.lines().nth(1).unwrap();
    let dir = std::env::temp_dir().join(format!("wmso-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("witness.word");
    std::fs::write(&file, word).unwrap();
    let f = file.to_str().unwrap();
    let a = run(&["eval", "step_a.wmso", f]);
    let b = run(&["eval", "one.wmso", f]);
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(a.0, 0);
    assert_ne!(a.1, b.1);
}

#[test]
fn output_is_deterministic() {
    for args in [&["compile", "phi1.wmso"][..], &["normalize", "--form", "second", "sum12.wmso"], &["--seed", "9", "random", "wa"]] {
        assert_eq!(render(args), render(args));
    }
}
