//! Every rule of the core layer, checked through the text format: one
//! accepted instance each (also audited semantically on short words), and
//! targeted rejections.

use wmso::compiler::ell_bound;
use wmso::proof::{check_proof, parse_proof, CheckConfig, Rejection};
use wmso::semantics::gamma_equiv_bounded;
use wmso::syntax::{parse_core, Context};

fn ctx() -> Context {
    Context::new(["a", "b"], ["0", "1", "2"], "0").unwrap()
}

fn check(text: &str) -> Result<(), Rejection> {
    let c = ctx();
    let p = parse_proof(text, &c).unwrap_or_else(|e| panic!("{e}\n{text}"));
    let res = check_proof(&p, &c, &CheckConfig::default());
    if res.is_ok() {
        let j = &p.concl;
        let w = gamma_equiv_bounded(&c, &j.gamma, &j.lhs.to_formula(), &j.rhs.to_formula(), 3).unwrap();
        assert_eq!(w, None, "accepted but unsound: {text}");
    }
    res
}

fn accepted(text: &str) {
    if let Err(e) = check(text) {
        panic!("{e}\n{text}");
    }
}

fn rejected(text: &str, kind: &str) -> Rejection {
    let e = check(text).expect_err(text);
    assert_eq!(e.reason.kind(), kind, "{e}");
    e
}

const ACCEPTED: &[(&str, &str)] = &[
    ("C1", r#"(C1 :concl "|- prod x. 1 + zero ~~ prod x. 1")"#),
    ("C2", r#"(C2 :concl "|- prod x. 1 + prod x. 2 ~~ prod x. 2 + prod x. 1")"#),
    ("C3", r#"(C3 :concl "|- (prod x. 1 + prod x. 2) + prod x. 0 ~~ prod x. 1 + (prod x. 2 + prod x. 0)")"#),
    (
        "C4",
        r#"(C4 :var x
             (S3 :phi "exists y. Pa(y) | Pb(y)" :concl "|- (exists y. Pa(y) | Pb(y)) ? 1 : 0 ~~ 1")
             :concl "|- prod x. (exists y. Pa(y) | Pb(y)) ? 1 : 0 ~~ prod x. 1")"#,
    ),
    ("C5", r#"(C5 :var y :concl "|- prod x. Pa(x) ? 1 : 0 ~~ prod y. Pa(y) ? 1 : 0")"#),
    (
        "C6",
        r#"(C6 :phi "Pa(y)" (C1 :concl "|- prod x. 1 + zero ~~ prod x. 1") :concl "Pa(y) |- prod x. 1 + zero ~~ prod x. 1")"#,
    ),
    ("C7", r#"(C7 :phi "Pa(y)" :concl "|- !Pa(y) ? prod x. 1 : prod x. 2 ~~ Pa(y) ? prod x. 2 : prod x. 1")"#),
    (
        "C8",
        r#"(C8 :phi "exists y. Pa(y)" :concl "forall y. Pa(y) |- (exists y. Pa(y)) ? prod x. 1 : prod x. 2 ~~ prod x. 1")"#,
    ),
    (
        "C9",
        r#"(C9 :phi "Pa(y)"
             (ref :concl "Pa(y) |- prod x. 1 ~~ prod x. 1")
             (ref :concl "!Pa(y) |- prod x. 1 ~~ prod x. 1")
             :concl "|- Pa(y) ? prod x. 1 : prod x. 1 ~~ prod x. 1")"#,
    ),
    (
        "C10",
        r#"(C10 :concl "|- (Pa(y) ? prod x. 1 : prod x. 2) + prod x. 0 ~~ Pa(y) ? (prod x. 1 + prod x. 0) : (prod x. 2 + prod x. 0)")"#,
    ),
    (
        "C11",
        r#"(C11 (C1 :concl "|- prod x. 1 + zero ~~ prod x. 1") :concl "|- sum X. (prod x. 1 + zero) ~~ sum X. prod x. 1")"#,
    ),
    (
        "C11f",
        r#"(C11f (C1 :concl "|- prod x. 1 + zero ~~ prod x. 1") :concl "|- sum y. (prod x. 1 + zero) ~~ sum y. prod x. 1")"#,
    ),
    ("C12", r#"(C12 :var Y :concl "|- sum X. prod x. x in X ? 1 : 0 ~~ sum Y. prod x. x in Y ? 1 : 0")"#),
    ("C12f", r#"(C12f :var z :concl "|- sum y. prod x. y <= x ? 1 : 0 ~~ sum z. prod x. z <= x ? 1 : 0")"#),
    (
        "C13",
        r#"(C13 :concl "|- sum X. sum y. prod x. (y in X & y <= x) ? 1 : 0 ~~ sum y. sum X. prod x. (y in X & y <= x) ? 1 : 0")"#,
    ),
    (
        "C13f",
        r#"(C13f :concl "|- sum y. sum z. prod x. (y <= z & z <= x) ? 1 : 0 ~~ sum z. sum y. prod x. (y <= z & z <= x) ? 1 : 0")"#,
    ),
    ("C14", r#"(C14 :concl "|- sum X. (prod x. 1 + prod x. 2) ~~ (sum X. prod x. 1) + (sum X. prod x. 2)")"#),
    ("C14f", r#"(C14f :concl "|- sum y. (prod x. 1 + prod x. 2) ~~ (sum y. prod x. 1) + (sum y. prod x. 2)")"#),
    (
        "C15",
        r#"(C15 :concl "|- Pa(y) ? sum X. prod x. x in X ? 1 : 0 : sum X. prod x. 2 ~~ sum X. Pa(y) ? prod x. x in X ? 1 : 0 : prod x. 2")"#,
    ),
    (
        "C15f",
        r#"(C15f :concl "|- Pa(y) ? sum z. prod x. 1 : sum z. prod x. 2 ~~ sum z. Pa(y) ? prod x. 1 : prod x. 2")"#,
    ),
    ("C16", r#"(C16 :concl "|- prod x. 1 ~~ sum X. (forall z. !z in X) ? prod x. 1 : zero")"#),
    ("C16f", r#"(C16f :concl "|- prod x. 1 ~~ sum y. (forall z. y <= z) ? prod x. 1 : zero")"#),
    (
        "C17",
        r#"(C17 :l 1 :concl "|- (exists y. Pa(y)) ? prod x. Pa(x) ? 1 : 0 : zero ~~ !(forall y. Pb(y)) ? prod z. Pb(z) ? 0 : 1 : zero")"#,
    ),
    (
        "cong?",
        r#"(cong? (C1 :concl "|- prod x. 1 + zero ~~ prod x. 1") (ref :concl "|- zero ~~ zero")
             :concl "|- Pa(y) ? (prod x. 1 + zero) : zero ~~ Pa(y) ? prod x. 1 : zero")"#,
    ),
    (
        "cong+",
        r#"(cong+ (C1 :concl "|- prod x. 1 + zero ~~ prod x. 1") (ref :concl "|- zero ~~ zero")
             :concl "|- (prod x. 1 + zero) + zero ~~ prod x. 1 + zero")"#,
    ),
];

#[test]
fn every_core_rule_has_an_accepted_instance() {
    for (name, text) in ACCEPTED {
        let p = parse_proof(text, &ctx()).unwrap();
        assert_eq!(p.rule.name(), *name);
        accepted(text);
    }
}

#[test]
fn s3_side_condition_reports_a_countermodel() {
    let e = rejected(r#"(S3 :phi "exists x. Pa(x)" :concl "|- (exists x. Pa(x)) ? 1 : 0 ~~ 1")"#, "side_condition");
    assert!(e.to_string().ends_with("fails on word=b"), "{e}");
}

#[test]
fn c16_needs_a_unique_witness() {
    rejected(r#"(C16 :concl "|- prod x. 1 ~~ sum X. true ? prod x. 1 : zero")"#, "side_condition");
    rejected(r#"(C16f :concl "|- prod x. 1 ~~ sum y. Pa(y) ? prod x. 1 : zero")"#, "side_condition");
}

#[test]
fn freshness_and_binder_order() {
    // x free in the assumptions
    rejected(
        r#"(C4 (ref :concl "Pa(x) |- 1 ~~ 1") :concl "Pa(x) |- prod x. 1 ~~ prod x. 1")"#,
        "freshness",
    );
    rejected(
        r#"(C11 (ref :concl "exists y. y in X |- prod x. 1 ~~ prod x. 1") :concl "exists y. y in X |- sum X. prod x. 1 ~~ sum X. prod x. 1")"#,
        "freshness",
    );
    rejected(r#"(C14 :concl "|- sum y. (prod x. 1 + prod x. 2) ~~ (sum y. prod x. 1) + (sum y. prod x. 2)")"#, "shape");
    rejected(
        r#"(C13f :concl "|- sum X. sum y. prod x. 1 ~~ sum y. sum X. prod x. 1")"#,
        "shape",
    );
}

#[test]
fn c14_and_c15_compare_binders_up_to_renaming() {
    accepted(r#"(C15 :concl "|- Pa(y) ? sum X. prod x. 1 : sum Y. prod x. 2 ~~ sum Z. Pa(y) ? prod x. 1 : prod x. 2")"#);
    accepted(r#"(C14f :concl "|- sum y. (prod x. 1 + prod x. 2) ~~ (sum z. prod x. 1) + (sum y. prod x. 2)")"#);
    rejected(
        r#"(C14 :concl "|- sum X. (prod x. 1 + prod x. 2) ~~ (sum y. prod x. 1) + (sum X. prod x. 2)")"#,
        "shape",
    );
}

fn c17_pair() -> (&'static str, &'static str) {
    (
        // prefixes and suffixes: both automata need to remember the cut
        "sum X. (forall y. forall z. y in X & z <= y -> z in X) ? prod x. x in X ? 1 : 2 : zero",
        "sum Y. (forall y. forall z. y in Y & y <= z -> z in Y) ? prod x. x in Y ? 2 : 1 : zero",
    )
}

#[test]
fn c17_requires_the_exact_l() {
    let c = ctx();
    let (a, b) = c17_pair();
    let ell = ell_bound(&parse_core(a, &c).unwrap(), &parse_core(b, &c).unwrap(), &[], 2).unwrap();
    assert!(ell >= 2, "pair too small to exceed the cap: ell = {ell}");
    let exact = 1u128 << ell;
    let text = |l: u128| format!(r#"(C17 :l {l} :concl "|- {a} ~~ {b}")"#);
    let e = rejected(&text(exact + 1), "wrong_l");
    assert!(e.to_string().contains(&format!("expected {exact}")), "{e}");
    rejected(&text(exact), "c17_cap_exceeded");
    rejected(&text(1), "wrong_l");
}

#[test]
fn c17_cap_zero_rejects_even_l_one() {
    let c = ctx();
    let (_, text) = ACCEPTED.iter().find(|(n, _)| *n == "C17").unwrap();
    let p = parse_proof(text, &c).unwrap();
    let e = check_proof(&p, &c, &CheckConfig { c17_cap: 0 }).unwrap_err();
    assert_eq!(e.reason.kind(), "c17_cap_exceeded");
}

#[test]
fn c17_literal_check_rejects_unequal_pairs() {
    // Both sides are in second normal form without binders, so l = 1, but
    // the two products differ on words with a b.
    rejected(
        r#"(C17 :l 1 :concl "|- true ? prod x. 1 : zero ~~ true ? prod x. Pa(x) ? 1 : 0 : zero")"#,
        "side_condition",
    );
    rejected(r#"(C17 :l 1 :concl "|- prod x. 1 ~~ prod x. 1")"#, "not_second_normal_form");
}

#[test]
fn layer_and_arity_errors() {
    rejected(r#"(C1 :concl "|- 1 ~~ 1")"#, "layer");
    rejected(r#"(S3 :phi "true" :concl "|- prod x. 1 ~~ prod x. 1")"#, "layer");
    rejected(r#"(C9 :phi "Pa(y)" (ref :concl "Pa(y) |- prod x. 1 ~~ prod x. 1") :concl "|- Pa(y) ? prod x. 1 : prod x. 1 ~~ prod x. 1")"#, "arity");
    rejected(r#"(C8 :concl "|- true ? prod x. 1 : zero ~~ prod x. 1")"#, "missing_param");
}
