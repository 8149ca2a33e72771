//! `wmso`: batch front end to the weighted MSO toolkit.
//!
//! Exit codes: 0 = equal / satisfiable / valid / accepted, 1 = a witness or
//! counterexample was found (and printed), 2 = usage, parse or input error,
//! 3 = a free variable is not covered by the pointed word.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wmso::compiler::{compile_core, lift_step};
use wmso::gen::{random_wa, rng, Gen, Shape};
use wmso::mso_automata::{compile_mso, entails, mso_sat_over, TrackAlphabet};
use wmso::proof::{
    check_proof, decide_equality, equational_sat_bounded, normalize_plus, normalize_second, parse_proof, print_proof,
    r_sat_step, step_equational_sat, synth_step_proof, weighted_model_check, BoundedSat, CheckConfig, ModelValue, Term,
};
use wmso::semantics::{aggregate, eval, AggregationScheme, EvalError, PointedWord, SemValue, WeightMultiset};
use wmso::syntax::{parse_any, parse_mso, print_core, print_mso, print_step, Context, Core, Formula, Mso, Var};
use wmso::weighted_automata::{equiv_poly, WeightedAutomaton};

const DEFAULT_HEADER: &str = r#"{"alphabet":["a","b"],"weights":["0","1","2"],"default_weight":"0"}"#;
const CORE_SAT_REFUSAL: &str = "equational satisfiability for core-wMSO is undecidable; supply --bound";

#[derive(Parser)]
#[command(name = "wmso", version, about = "Weighted MSO on finite words: evaluation, compilation, decision procedures and proof checking")]
struct Cli {
    /// Session header JSON: {"alphabet":[..],"weights":[..],"default_weight":".."}
    #[arg(long, global = true, value_name = "FILE")]
    session: Option<PathBuf>,
    /// Length bound for bounded searches (required by `sat --layer core`).
    #[arg(long, global = true, value_name = "N")]
    bound: Option<usize>,
    /// Largest l for which C17 side conditions are checked literally.
    #[arg(long = "c17-cap", global = true, value_name = "N", default_value_t = 2)]
    c17_cap: u64,
    /// Aggregate a core-layer value instead of printing the multiset.
    #[arg(long, global = true, value_enum)]
    aggregate: Option<Aggregate>,
    /// Seed for randomized tooling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Aggregate {
    Maxplus,
    Counting,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Mso,
    Step,
    Core,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalForm {
    Plus,
    Second,
}

#[derive(Clone, Copy, ValueEnum)]
enum RandomKind {
    Mso,
    Step,
    Core,
    Wa,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a formula on a pointed word (`word=abaa; x=3; X={1,4}`).
    Eval { formula: PathBuf, word: PathBuf },
    /// Compile an MSO formula to a DFA, or a step/core formula to a weighted automaton (JSON).
    Compile { formula: PathBuf },
    /// Model checking: does the formula take VALUE on the pointed word?
    /// VALUE is true/false, a weight name, or a multiset JSON object.
    Mc { formula: PathBuf, word: PathBuf, value: String },
    /// Equivalence of two formulas (under --gamma) or of two automaton JSON files.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_name = "FILE")]
        gamma: Option<PathBuf>,
    },
    /// Satisfiability: MSO, r-satisfiability (`--weight`) or equational satisfiability.
    Sat {
        #[arg(long, value_enum)]
        layer: LayerArg,
        #[arg(long, value_name = "R")]
        weight: Option<String>,
        left: PathBuf,
        right: Option<PathBuf>,
    },
    /// Validity of an MSO formula, or entailment from --gamma.
    Validity {
        formula: PathBuf,
        #[arg(long, value_name = "FILE")]
        gamma: Option<PathBuf>,
    },
    /// Check a derivation in the s-expression proof format.
    CheckProof { proof: PathBuf },
    /// Derive Γ ⊢ Ψ1 ≈ Ψ2 for step formulas, or print a counterexample.
    ProveStep {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_name = "FILE")]
        gamma: Option<PathBuf>,
    },
    /// Rewrite a core formula into a normal form.
    Normalize {
        formula: PathBuf,
        #[arg(long, value_enum)]
        form: NormalForm,
    },
    /// Print a random formula or automaton for the given --seed.
    Random {
        #[arg(value_enum)]
        kind: RandomKind,
        #[arg(long, default_value_t = 4)]
        states: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Uncovered(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Uncovered(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(s) | CliError::Uncovered(s) => f.write_str(s),
        }
    }
}

fn input(msg: impl fmt::Display) -> CliError {
    CliError::Input(msg.to_string())
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Uncovered(_) => CliError::Uncovered(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// What a command prints, in both formats, and its exit code.
struct Report {
    code: u8,
    text: String,
    json: Value,
}

impl Report {
    fn new(code: u8, text: impl Into<String>, json: Value) -> Report {
        Report { code, text: text.into(), json }
    }
}

struct Session {
    ctx: Context,
    cli: Cli,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

impl Session {
    fn formula(&self, path: &Path) -> Result<Formula, CliError> {
        let text = read(path)?;
        parse_any(text.trim(), &self.ctx).map_err(|e| input(format!("{}:{e}", path.display())))
    }

    fn mso(&self, path: &Path) -> Result<Mso, CliError> {
        match self.formula(path)? {
            Formula::Mso(m) => Ok(m),
            _ => Err(input(format!("{}: expected an MSO formula", path.display()))),
        }
    }

    /// Assumptions separated by `;`.
    fn gamma(&self, path: Option<&PathBuf>) -> Result<Vec<Mso>, CliError> {
        let Some(path) = path else { return Ok(vec![]) };
        let text = read(path)?;
        text.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_mso(s, &self.ctx).map_err(|e| input(format!("{}: '{s}': {e}", path.display()))))
            .collect()
    }

    fn word(&self, path: &Path) -> Result<PointedWord, CliError> {
        let text = read(path)?;
        PointedWord::parse(text.trim(), &self.ctx).map_err(|e| input(format!("{}: {e}", path.display())))
    }

    fn letters(&self) -> usize {
        self.ctx.alphabet.len()
    }

    fn show(&self, pw: &PointedWord) -> String {
        pw.display(&self.ctx)
    }
}

fn run(s: &Session) -> Result<Report, CliError> {
    match &s.cli.cmd {
        Cmd::Eval { formula, word } => cmd_eval(s, formula, word),
        Cmd::Compile { formula } => cmd_compile(s, formula),
        Cmd::Mc { formula, word, value } => cmd_mc(s, formula, word, value),
        Cmd::Equiv { left, right, gamma } => cmd_equiv(s, left, right, gamma.as_ref()),
        Cmd::Sat { layer, weight, left, right } => cmd_sat(s, *layer, weight.as_deref(), left, right.as_deref()),
        Cmd::Validity { formula, gamma } => cmd_validity(s, formula, gamma.as_ref()),
        Cmd::CheckProof { proof } => cmd_check_proof(s, proof),
        Cmd::ProveStep { left, right, gamma } => cmd_prove_step(s, left, right, gamma.as_ref()),
        Cmd::Normalize { formula, form } => cmd_normalize(s, formula, *form),
        Cmd::Random { kind, states } => cmd_random(s, *kind, *states),
    }
}

fn value_json(v: &SemValue, ctx: &Context) -> Value {
    match v {
        SemValue::Bool(b) => json!(b),
        SemValue::Weight(r) => json!(ctx.weights.name(*r)),
        SemValue::Multiset(m) => serde_json::from_str(&m.to_json(ctx)).expect("multiset JSON"),
    }
}

fn cmd_eval(s: &Session, formula: &Path, word: &Path) -> Result<Report, CliError> {
    let f = s.formula(formula)?;
    let pw = s.word(word)?;
    let v = eval(&f, &pw)?;
    if let Some(agg) = s.cli.aggregate {
        let SemValue::Multiset(m) = &v else {
            return Err(input("--aggregate applies to core-layer formulas only"));
        };
        let out = match agg {
            Aggregate::Maxplus => aggregate(m, &AggregationScheme::max_plus(&s.ctx))?.to_string(),
            Aggregate::Counting => aggregate(m, &AggregationScheme::counting(&s.ctx))?.to_string(),
        };
        return Ok(Report::new(0, out.clone(), json!({ "value": out })));
    }
    Ok(Report::new(0, v.display(&s.ctx), json!({ "value": value_json(&v, &s.ctx) })))
}

fn cmd_compile(s: &Session, formula: &Path) -> Result<Report, CliError> {
    let f = s.formula(formula)?;
    let alpha = TrackAlphabet::canonical(s.letters(), f.free_vars());
    let text = match &f {
        Formula::Mso(m) => compile_mso(m, &alpha).map_err(input)?.to_json(&s.ctx),
        Formula::Step(st) => compile_core(&lift_step(st, &[]), &alpha).map_err(input)?.to_json(&s.ctx),
        Formula::Core(c) => compile_core(c, &alpha).map_err(input)?.to_json(&s.ctx),
    };
    let json: Value = serde_json::from_str(&text).expect("automaton JSON");
    Ok(Report::new(0, text, json))
}

fn cmd_mc(s: &Session, formula: &Path, word: &Path, value: &str) -> Result<Report, CliError> {
    let f = s.formula(formula)?;
    let pw = s.word(word)?;
    let holds = match &f {
        Formula::Mso(m) => {
            let want = match value {
                "true" => true,
                "false" => false,
                _ => return Err(input(format!("'{value}' is not a truth value"))),
            };
            wmso::semantics::mso_holds(m, &pw)? == want
        }
        Formula::Step(st) => {
            let r = s.ctx.weight(value).ok_or_else(|| input(format!("unknown weight '{value}'")))?;
            weighted_model_check(&Term::Step(st.clone()), &pw, &ModelValue::Weight(r))?
        }
        Formula::Core(c) => {
            let m = WeightMultiset::from_json(value, &s.ctx).map_err(input)?;
            weighted_model_check(&Term::Core(c.clone()), &pw, &ModelValue::Multiset(m))?
        }
    };
    let actual = eval(&f, &pw)?;
    let (code, verdict) = if holds { (0, "true") } else { (1, "false") };
    let text = if holds { verdict.to_string() } else { format!("false\nactual {}", actual.display(&s.ctx)) };
    Ok(Report::new(code, text, json!({ "holds": holds, "actual": value_json(&actual, &s.ctx) })))
}

fn is_automaton(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn witness_report(s: &Session, pw: &PointedWord, extra: Value) -> Report {
    let w = s.show(pw);
    let mut j = json!({ "equal": false, "witness": w });
    if let (Value::Object(o), Value::Object(e)) = (&mut j, extra) {
        o.extend(e);
    }
    Report::new(1, format!("differ\n{w}"), j)
}

fn equal_report(extra: Value) -> Report {
    let mut j = json!({ "equal": true });
    if let (Value::Object(o), Value::Object(e)) = (&mut j, extra) {
        o.extend(e);
    }
    Report::new(0, "equal", j)
}

fn as_core(f: Formula, avoid: &Formula) -> Option<Core> {
    match (f, avoid) {
        (Formula::Core(c), _) => Some(c),
        (Formula::Step(st), Formula::Step(other)) => Some(lift_step(&st, &[other])),
        (Formula::Step(st), _) => {
            let mut c = lift_step(&st, &[]);
            let used = avoid.vars();
            if let Core::Prod(z, psi) = &c {
                if used.contains(z) {
                    let mut names = wmso::syntax::FreshNames::avoiding(used.iter().chain(psi.vars().iter()));
                    c = Core::prod(names.fresh(&Var::first("z")), psi.clone());
                }
            }
            Some(c)
        }
        (Formula::Mso(_), _) => None,
    }
}

fn cmd_equiv(s: &Session, left: &Path, right: &Path, gamma: Option<&PathBuf>) -> Result<Report, CliError> {
    let (lt, rt) = (read(left)?, read(right)?);
    if is_automaton(&lt) || is_automaton(&rt) {
        if gamma.is_some() {
            return Err(input("--gamma applies to formulas, not automata"));
        }
        let a1 = WeightedAutomaton::from_json(&lt, &s.ctx).map_err(|e| input(format!("{}: {e}", left.display())))?;
        let a2 = WeightedAutomaton::from_json(&rt, &s.ctx).map_err(|e| input(format!("{}: {e}", right.display())))?;
        return Ok(match equiv_poly(&a1, &a2).map_err(input)? {
            None => equal_report(json!({})),
            Some(w) => {
                let pw = a1.alphabet.decode(&w.word);
                let gamma: Vec<&str> = w.gamma.iter().map(|r| s.ctx.weights.name(*r)).collect();
                let mut r = witness_report(
                    s,
                    &pw,
                    json!({ "weights": gamma.join("."), "count_left": w.count1.to_string(), "count_right": w.count2.to_string() }),
                );
                r.text.push_str(&format!("\nweights={} counts={}/{}", gamma.join("."), w.count1, w.count2));
                r
            }
        });
    }
    let gamma = s.gamma(gamma)?;
    let f1 = s.formula(left)?;
    let f2 = s.formula(right)?;
    match (&f1, &f2) {
        (Formula::Mso(a), Formula::Mso(b)) => {
            return Ok(match entails(&gamma, &a.clone().iff(b.clone()), s.letters()) {
                Ok(()) => equal_report(json!({})),
                Err(w) => witness_report(s, &w, json!({})),
            });
        }
        (Formula::Step(a), Formula::Step(b)) => {
            return Ok(match synth_step_proof(&gamma, a, b, s.letters()) {
                Ok(p) => equal_report(json!({ "proof_nodes": p.size() })),
                Err(w) => witness_report(s, &w, json!({})),
            });
        }
        _ => {}
    }
    let (c1, c2) = match (as_core(f1.clone(), &f2), as_core(f2.clone(), &f1)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(input("cannot compare an MSO formula with a weighted formula")),
    };
    Ok(match decide_equality(&gamma, &c1, &c2, s.letters()).map_err(input)? {
        None => equal_report(json!({})),
        Some(w) => witness_report(s, &w, json!({})),
    })
}

fn sat_report(s: &Session, found: Option<PointedWord>, none_note: &str) -> Report {
    match found {
        Some(w) => {
            let shown = s.show(&w);
            Report::new(0, format!("sat\n{shown}"), json!({ "sat": true, "witness": shown }))
        }
        None => Report::new(1, format!("unsat{none_note}"), json!({ "sat": false })),
    }
}

fn cmd_sat(s: &Session, layer: LayerArg, weight: Option<&str>, left: &Path, right: Option<&Path>) -> Result<Report, CliError> {
    let need_right = || right.ok_or_else(|| input("equational satisfiability needs two formulas"));
    match layer {
        LayerArg::Mso => {
            if right.is_some() || weight.is_some() {
                return Err(input("MSO satisfiability takes one formula"));
            }
            let m = s.mso(left)?;
            let alpha = TrackAlphabet::canonical(s.letters(), m.free_vars());
            Ok(sat_report(s, mso_sat_over(&m, &alpha).map_err(input)?, ""))
        }
        LayerArg::Step => {
            let step = |p: &Path| match s.formula(p)? {
                Formula::Step(st) => Ok(st),
                _ => Err(input(format!("{}: expected a step formula", p.display()))),
            };
            let psi = step(left)?;
            if let Some(w) = weight {
                if right.is_some() {
                    return Err(input("--weight takes one formula"));
                }
                let r = s.ctx.weight(w).ok_or_else(|| input(format!("unknown weight '{w}'")))?;
                return Ok(sat_report(s, r_sat_step(&psi, r, s.letters()), ""));
            }
            let psi2 = step(need_right()?)?;
            Ok(sat_report(s, step_equational_sat(&psi, &psi2, s.letters()), ""))
        }
        LayerArg::Core => {
            if weight.is_some() {
                return Err(input("--weight applies to step formulas"));
            }
            let Some(bound) = s.cli.bound else {
                return Err(input(CORE_SAT_REFUSAL));
            };
            let core = |p: &Path| match s.formula(p)? {
                Formula::Core(c) => Ok(c),
                _ => Err(input(format!("{}: expected a core formula", p.display()))),
            };
            let (c1, c2) = (core(left)?, core(need_right()?)?);
            Ok(match equational_sat_bounded(&c1, &c2, bound, s.letters())? {
                BoundedSat::Witness(w) => sat_report(s, Some(w), ""),
                BoundedSat::NotFoundUpTo(n) => sat_report(s, None, &format!(" up to length {n}")),
            })
        }
    }
}

fn cmd_validity(s: &Session, formula: &Path, gamma: Option<&PathBuf>) -> Result<Report, CliError> {
    let gamma = s.gamma(gamma)?;
    let m = s.mso(formula)?;
    Ok(match entails(&gamma, &m, s.letters()) {
        Ok(()) => Report::new(0, "valid", json!({ "valid": true })),
        Err(w) => {
            let shown = s.show(&w);
            Report::new(1, format!("invalid\n{shown}"), json!({ "valid": false, "counterexample": shown }))
        }
    })
}

fn cmd_check_proof(s: &Session, proof: &Path) -> Result<Report, CliError> {
    let text = read(proof)?;
    let p = parse_proof(&text, &s.ctx).map_err(|e| input(format!("{}: {e}", proof.display())))?;
    let cfg = CheckConfig { c17_cap: s.cli.c17_cap };
    Ok(match check_proof(&p, &s.ctx, &cfg) {
        Ok(()) => Report::new(
            0,
            format!("accepted: {}", p.concl.print(&s.ctx)),
            json!({ "accepted": true, "nodes": p.size(), "conclusion": p.concl.print(&s.ctx) }),
        ),
        Err(r) => Report::new(
            1,
            r.to_string(),
            json!({
                "accepted": false,
                "path": r.path,
                "rule": r.rule.name(),
                "reason": r.reason.kind(),
                "message": r.reason.to_string(),
            }),
        ),
    })
}

fn cmd_prove_step(s: &Session, left: &Path, right: &Path, gamma: Option<&PathBuf>) -> Result<Report, CliError> {
    let gamma = s.gamma(gamma)?;
    let (a, b) = match (s.formula(left)?, s.formula(right)?) {
        (Formula::Step(a), Formula::Step(b)) => (a, b),
        _ => return Err(input("prove-step takes two step formulas")),
    };
    Ok(match synth_step_proof(&gamma, &a, &b, s.letters()) {
        Ok(p) => {
            let text = print_proof(&p, &s.ctx);
            Report::new(0, text.trim_end().to_string(), json!({ "proved": true, "proof": text }))
        }
        Err(w) => {
            let shown = s.show(&w);
            let (v1, v2) = (eval(&Formula::Step(a), &w)?, eval(&Formula::Step(b), &w)?);
            Report::new(
                1,
                format!("counterexample\n{shown}\nvalues {} vs {}", v1.display(&s.ctx), v2.display(&s.ctx)),
                json!({ "proved": false, "counterexample": shown }),
            )
        }
    })
}

fn cmd_normalize(s: &Session, formula: &Path, form: NormalForm) -> Result<Report, CliError> {
    let c = match s.formula(formula)? {
        Formula::Core(c) => c,
        _ => return Err(input("normalize takes a core formula")),
    };
    let n = match form {
        NormalForm::Plus => normalize_plus(&c).map_err(input)?,
        NormalForm::Second => normalize_second(&c),
    };
    let text = print_core(&n.formula, &s.ctx);
    let trace: Vec<&str> = n.trace.iter().map(|r| r.name()).collect();
    Ok(Report::new(0, text.clone(), json!({ "formula": text, "trace": trace })))
}

fn cmd_random(s: &Session, kind: RandomKind, states: usize) -> Result<Report, CliError> {
    let mut r = rng(s.cli.seed);
    let letters = s.letters();
    let weights = s.ctx.weights.len();
    let mut shape = Shape::small(letters, weights);
    shape.sums = true;
    let text = match kind {
        RandomKind::Wa => random_wa(&mut r, states.max(1), letters, weights, 2).to_json(&s.ctx),
        RandomKind::Mso => {
            let fo = shape.fo.clone();
            print_mso(&Gen::new(&mut r, shape).mso(2, &fo, &[]), &s.ctx)
        }
        RandomKind::Step => print_step(&Gen::new(&mut r, shape).step(), &s.ctx),
        RandomKind::Core => print_core(&Gen::new(&mut r, shape).core(), &s.ctx),
    };
    let f = if matches!(kind, RandomKind::Wa) { serde_json::from_str(&text).expect("automaton JSON") } else { json!(text) };
    Ok(Report::new(0, text, json!({ "value": f })))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let header = match &cli.session {
        Some(p) => match read(p) {
            Ok(t) => t,
            Err(e) => return fail(&e, cli.format),
        },
        None => DEFAULT_HEADER.to_string(),
    };
    let ctx = match Context::from_header_json(&header) {
        Ok(c) => c,
        Err(e) => return fail(&input(format!("session header: {e}")), cli.format),
    };
    let format = cli.format;
    let s = Session { ctx, cli };
    match run(&s) {
        Ok(r) => {
            match format {
                Format::Text => println!("{}", r.text),
                Format::Json => println!("{}", r.json),
            }
            ExitCode::from(r.code)
        }
        Err(e) => fail(&e, format),
    }
}

fn fail(e: &CliError, format: Format) -> ExitCode {
    match format {
        Format::Text => eprintln!("error: {e}"),
        Format::Json => eprintln!("{}", json!({ "error": e.to_string(), "code": e.code() })),
    }
    ExitCode::from(e.code())
}
