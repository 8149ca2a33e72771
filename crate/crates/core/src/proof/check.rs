use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::{extend, gamma_set, Judgement, ProofTree, Rule, Term};
use crate::compiler::ell_bound;
use crate::mso_automata::{build_leq_formula, entails, SecondNormalForm};
use crate::syntax::{alpha_canonical_mso, print_mso, Context, Core, FreshNames, Layer, Mso, Step, Var};

#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// Largest l for which C17's side conditions are checked.
    pub c17_cap: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { c17_cap: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reason {
    Arity { expected: usize, found: usize },
    Layer(String),
    MissingParam(&'static str),
    Pivot(String),
    Shape(String),
    Premise(String),
    Gamma(String),
    SideCondition { condition: String, countermodel: String },
    Freshness(String),
    NotSecondNormalForm(String),
    WrongL { expected: BigUint, found: BigUint },
    C17CapExceeded { l: BigUint, cap: u64 },
}

impl Reason {
    /// Stable short tag, used by the CLI and the mutation tests.
    pub fn kind(&self) -> &'static str {
        match self {
            Reason::Arity { .. } => "arity",
            Reason::Layer(_) => "layer",
            Reason::MissingParam(_) => "missing_param",
            Reason::Pivot(_) => "pivot",
            Reason::Shape(_) => "shape",
            Reason::Premise(_) => "premise",
            Reason::Gamma(_) => "gamma",
            Reason::SideCondition { .. } => "side_condition",
            Reason::Freshness(_) => "freshness",
            Reason::NotSecondNormalForm(_) => "not_second_normal_form",
            Reason::WrongL { .. } => "wrong_l",
            Reason::C17CapExceeded { .. } => "c17_cap_exceeded",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::Arity { expected, found } => write!(f, "arity: expected {expected} premises, found {found}"),
            Reason::Layer(s) => write!(f, "layer: {s}"),
            Reason::MissingParam(p) => write!(f, "missing parameter :{p}"),
            Reason::Pivot(s) => write!(f, "pivot: {s}"),
            Reason::Shape(s) => write!(f, "shape: {s}"),
            Reason::Premise(s) => write!(f, "premise: {s}"),
            Reason::Gamma(s) => write!(f, "assumptions: {s}"),
            Reason::SideCondition { condition, countermodel } => {
                write!(f, "side condition: {condition} fails on {countermodel}")
            }
            Reason::Freshness(s) => write!(f, "freshness: {s}"),
            Reason::NotSecondNormalForm(s) => write!(f, "not in second normal form: {s}"),
            Reason::WrongL { expected, found } => write!(f, "wrong l: expected {expected}, found {found}"),
            Reason::C17CapExceeded { l, cap } => write!(f, "c17_cap_exceeded: l = {l} exceeds cap {cap}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// Child indices from the root to the offending node.
    pub path: Vec<usize>,
    pub rule: Rule,
    pub reason: Reason,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        let at = if p.is_empty() { "root".to_string() } else { p.join(".") };
        write!(f, "rejected at {at} ({}): {}", self.rule, self.reason)
    }
}

/// Checks every node; reports the first failure in pre-order.
pub fn check_proof(p: &ProofTree, ctx: &Context, cfg: &CheckConfig) -> Result<(), Rejection> {
    let mut path = Vec::new();
    walk(p, ctx, cfg, &mut path)
}

fn walk(p: &ProofTree, ctx: &Context, cfg: &CheckConfig, path: &mut Vec<usize>) -> Result<(), Rejection> {
    check_node(p, ctx, cfg).map_err(|reason| Rejection { path: path.clone(), rule: p.rule, reason })?;
    for (i, q) in p.premises.iter().enumerate() {
        path.push(i);
        walk(q, ctx, cfg, path)?;
        path.pop();
    }
    Ok(())
}

type R = Result<(), Reason>;

fn shape(msg: impl Into<String>) -> Reason {
    Reason::Shape(msg.into())
}

fn ensure(cond: bool, r: impl FnOnce() -> Reason) -> R {
    if cond {
        Ok(())
    } else {
        Err(r())
    }
}

fn mso_eq(a: &Mso, b: &Mso) -> bool {
    alpha_canonical_mso(a) == alpha_canonical_mso(b)
}

fn core_eq(a: &Core, b: &Core) -> bool {
    Term::Core(a.clone()).alpha_eq(&Term::Core(b.clone()))
}

fn step_eq(a: &Step, b: &Step) -> bool {
    Term::Step(a.clone()).alpha_eq(&Term::Step(b.clone()))
}

fn same_gamma(p: &Judgement, gamma: &[Mso]) -> R {
    ensure(p.gamma_set() == gamma_set(gamma), || Reason::Gamma("premise assumptions differ from the expected set".into()))
}

/// Premise conclusion must be Γ' ⊢ lhs ≈ rhs with the given pieces.
fn premise(p: &ProofTree, idx: usize, gamma: &[Mso], lhs: &Term, rhs: &Term) -> R {
    same_gamma(&p.concl, gamma)?;
    ensure(p.concl.lhs.alpha_eq(lhs) && p.concl.rhs.alpha_eq(rhs), || {
        Reason::Premise(format!("premise {idx} does not prove the required equation"))
    })
}

fn pivot(p: &ProofTree) -> Result<&Mso, Reason> {
    p.phi.as_ref().ok_or(Reason::MissingParam("phi"))
}

fn check_pivot(p: &ProofTree, guard: &Mso) -> R {
    ensure(mso_eq(pivot(p)?, guard), || Reason::Pivot("pivot formula does not match the guard".into()))
}

fn optional_pivot(p: &ProofTree, guard: &Mso) -> R {
    match &p.phi {
        Some(phi) => ensure(mso_eq(phi, guard), || Reason::Pivot("pivot formula does not match the guard".into())),
        None => Ok(()),
    }
}

fn optional_var(p: &ProofTree, v: &Var) -> R {
    match &p.var {
        Some(w) => ensure(w == v, || Reason::Pivot(format!("variable parameter {w} does not match {v}"))),
        None => Ok(()),
    }
}

fn side(gamma: &[Mso], phi: &Mso, ctx: &Context) -> R {
    entails(gamma, phi, ctx.alphabet.len()).map_err(|w| {
        let g: Vec<String> = gamma.iter().map(|g| print_mso(g, ctx)).collect();
        Reason::SideCondition {
            condition: format!("{{{}}} entails {}", g.join("; "), print_mso(phi, ctx)),
            countermodel: w.display(ctx),
        }
    })
}

fn core<'a>(t: &'a Term, what: &str) -> Result<&'a Core, Reason> {
    match t {
        Term::Core(c) => Ok(c),
        Term::Step(_) => Err(Reason::Layer(format!("{what} must be a core formula"))),
    }
}

fn plus(c: &Core) -> Option<(&Core, &Core)> {
    match c {
        Core::Plus(a, b) => Some((a, b)),
        _ => None,
    }
}

/// The body of `sum w. body` rebound to `v`, if that is an alpha-renaming.
fn rebind(v: &Var, w: &Var, body: &Core) -> Option<Core> {
    if v == w {
        Some(body.clone())
    } else if v.order() == w.order() && !body.vars().contains(v) {
        Some(body.rename_free(w, v))
    } else {
        None
    }
}

fn sum(c: &Core) -> Option<(&Var, &Core)> {
    match c {
        Core::Sum(v, b) => Some((v, b)),
        _ => None,
    }
}

fn cond(c: &Core) -> Option<(&Mso, &Core, &Core)> {
    match c {
        Core::Cond(g, a, b) => Some((g, a, b)),
        _ => None,
    }
}

/// Binder-rule order: the plain names bind second-order variables, the
/// `f` variants first-order ones.
fn binder_order(rule: Rule, v: &Var) -> R {
    use Rule::*;
    let first = matches!(rule, C11f | C12f | C14f | C15f | C16f);
    ensure(v.is_first() == first, || {
        shape(format!(
            "{rule} binds a {} variable, found {v}",
            if first { "first-order" } else { "second-order" }
        ))
    })
}

/// ∃!v. φ
pub fn unique_exists(v: &Var, phi: &Mso) -> Mso {
    let mut names = FreshNames::avoiding(phi.vars().iter().chain(std::iter::once(v)));
    let w = names.fresh(v);
    let same = if v.is_first() {
        Mso::eq(w.clone(), v.clone())
    } else {
        let z = names.fresh(&Var::first("z"));
        Mso::forall(z.clone(), Mso::In(z.clone(), w.clone()).iff(Mso::In(z, v.clone())))
    };
    Mso::exists(v.clone(), phi.clone().and(Mso::forall(w.clone(), phi.rename_free(v, &w).implies(same))))
}

fn check_node(p: &ProofTree, ctx: &Context, cfg: &CheckConfig) -> R {
    use Rule::*;
    let j = &p.concl;
    let layer = j.layer().ok_or_else(|| Reason::Layer("sides of the conclusion are in different layers".into()))?;
    if let Some(l) = p.rule.layer() {
        ensure(l == layer, || Reason::Layer(format!("{} applies to {l} formulas, conclusion is {layer}", p.rule)))?;
    }
    ensure(p.premises.len() == p.rule.arity(), || Reason::Arity { expected: p.rule.arity(), found: p.premises.len() })?;
    for q in &p.premises {
        let want = if p.rule == C4 { Layer::Step } else { layer };
        ensure(q.concl.layer() == Some(want), || Reason::Layer(format!("premise must be a {want} judgement")))?;
    }
    let g = &j.gamma;
    let (l, r) = (&j.lhs, &j.rhs);
    let pr = &p.premises;
    match p.rule {
        Ref => ensure(l.alpha_eq(r), || shape("sides differ")),
        Sym => premise(&pr[0], 0, g, r, l),
        Trans => {
            same_gamma(&pr[0].concl, g)?;
            same_gamma(&pr[1].concl, g)?;
            ensure(pr[0].concl.lhs.alpha_eq(l), || Reason::Premise("premise 0 does not start at the left side".into()))?;
            ensure(pr[1].concl.rhs.alpha_eq(r), || Reason::Premise("premise 1 does not end at the right side".into()))?;
            ensure(pr[0].concl.rhs.alpha_eq(&pr[1].concl.lhs), || Reason::Premise("premises do not chain".into()))
        }
        CongCond => {
            let (g1, a1, b1) = l.as_cond().ok_or_else(|| shape("left side is not a conditional"))?;
            let (g2, a2, b2) = r.as_cond().ok_or_else(|| shape("right side is not a conditional"))?;
            ensure(mso_eq(g1, g2), || shape("guards differ"))?;
            optional_pivot(p, g1)?;
            premise(&pr[0], 0, g, &a1, &a2)?;
            premise(&pr[1], 1, g, &b1, &b2)
        }
        CongPlus => {
            let (a1, b1) = plus(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum"))?;
            let (a2, b2) = plus(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum"))?;
            premise(&pr[0], 0, g, &a1.clone().into(), &a2.clone().into())?;
            premise(&pr[1], 1, g, &b1.clone().into(), &b2.clone().into())
        }
        S1 | C6 => {
            let phi = pivot(p)?;
            ensure(j.gamma_set() == gamma_set(&extend(&pr[0].concl.gamma, phi)), || {
                Reason::Pivot("assumptions are not the premise's extended by the pivot".into())
            })?;
            ensure(pr[0].concl.lhs.alpha_eq(l) && pr[0].concl.rhs.alpha_eq(r), || {
                Reason::Premise("premise proves a different equation".into())
            })
        }
        S2 | C7 => {
            let (g1, a1, b1) = l.as_cond().ok_or_else(|| shape("left side is not a conditional"))?;
            let phi = match g1 {
                Mso::Not(f) => f.as_ref(),
                _ => return Err(shape("left guard is not a negation")),
            };
            let (g2, a2, b2) = r.as_cond().ok_or_else(|| shape("right side is not a conditional"))?;
            ensure(mso_eq(phi, g2), || shape("right guard is not the negated formula"))?;
            optional_pivot(p, phi)?;
            ensure(a1.alpha_eq(&b2) && b1.alpha_eq(&a2), || shape("branches are not exchanged"))
        }
        S3 | C8 => {
            let (guard, a, _) = l.as_cond().ok_or_else(|| shape("left side is not a conditional"))?;
            check_pivot(p, guard)?;
            ensure(a.alpha_eq(r), || shape("right side is not the first branch"))?;
            side(g, guard, ctx)
        }
        S4 | C9 => {
            let (guard, a, b) = l.as_cond().ok_or_else(|| shape("left side is not a conditional"))?;
            check_pivot(p, guard)?;
            premise(&pr[0], 0, &extend(g, guard), &a, r)?;
            premise(&pr[1], 1, &extend(g, &guard.clone().not()), &b, r)
        }
        C1 => {
            let (a, z) = plus(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum"))?;
            ensure(*z == Core::Zero, || shape("right summand is not 0"))?;
            ensure(core_eq(a, core(r, "right side")?), || shape("right side is not the left summand"))
        }
        C2 => {
            let (a1, b1) = plus(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum"))?;
            let (a2, b2) = plus(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum"))?;
            ensure(core_eq(a1, b2) && core_eq(b1, a2), || shape("summands are not exchanged"))
        }
        C3 => {
            let (ab, c1) = plus(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum"))?;
            let (a1, b1) = plus(ab).ok_or_else(|| shape("left summand is not a sum"))?;
            let (a2, bc) = plus(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum"))?;
            let (b2, c2) = plus(bc).ok_or_else(|| shape("right summand is not a sum"))?;
            ensure(core_eq(a1, a2) && core_eq(b1, b2) && core_eq(c1, c2), || shape("not a reassociation"))
        }
        C4 => {
            let (x1, s1) = match core(l, "left side")? {
                Core::Prod(x, s) => (x, s),
                _ => return Err(shape("left side is not a product")),
            };
            let (x2, s2) = match core(r, "right side")? {
                Core::Prod(x, s) => (x, s),
                _ => return Err(shape("right side is not a product")),
            };
            ensure(x1 == x2, || shape("products bind different variables"))?;
            optional_var(p, x1)?;
            ensure(!j.gamma_free_vars().contains(x1), || Reason::Freshness(format!("{x1} is free in the assumptions")))?;
            premise(&pr[0], 0, g, &s1.clone().into(), &s2.clone().into())
        }
        C5 => {
            let (x, s1) = match core(l, "left side")? {
                Core::Prod(x, s) => (x, s),
                _ => return Err(shape("left side is not a product")),
            };
            let (y, s2) = match core(r, "right side")? {
                Core::Prod(y, s) => (y, s),
                _ => return Err(shape("right side is not a product")),
            };
            optional_var(p, y)?;
            ensure(x == y || !s1.vars().contains(y), || Reason::Freshness(format!("{y} occurs in the body")))?;
            ensure(step_eq(&s1.rename_free(x, y), s2), || shape("right body is not the renamed left body"))
        }
        C10 => {
            let (c, rest) = plus(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum"))?;
            let (g1, a1, b1) = cond(c).ok_or_else(|| shape("left summand is not a conditional"))?;
            let (g2, ac, bc) = cond(core(r, "right side")?).ok_or_else(|| shape("right side is not a conditional"))?;
            optional_pivot(p, g1)?;
            ensure(mso_eq(g1, g2), || shape("guards differ"))?;
            let (a2, r1) = plus(ac).ok_or_else(|| shape("then-branch is not a sum"))?;
            let (b2, r2) = plus(bc).ok_or_else(|| shape("else-branch is not a sum"))?;
            ensure(core_eq(a1, a2) && core_eq(b1, b2) && core_eq(rest, r1) && core_eq(rest, r2), || {
                shape("branches are not the distributed sums")
            })
        }
        C11 | C11f => {
            let (v1, a) = sum(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum binder"))?;
            let (v2, b) = sum(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum binder"))?;
            ensure(v1 == v2, || shape("binders differ"))?;
            binder_order(p.rule, v1)?;
            optional_var(p, v1)?;
            ensure(!j.gamma_free_vars().contains(v1), || Reason::Freshness(format!("{v1} is free in the assumptions")))?;
            premise(&pr[0], 0, g, &a.clone().into(), &b.clone().into())
        }
        C12 | C12f => {
            let (v, a) = sum(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum binder"))?;
            let (w, b) = sum(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum binder"))?;
            binder_order(p.rule, v)?;
            ensure(v.order() == w.order(), || shape("binders of different order"))?;
            optional_var(p, w)?;
            ensure(v == w || !a.vars().contains(w), || Reason::Freshness(format!("{w} occurs in the body")))?;
            ensure(core_eq(&a.rename_free(v, w), b), || shape("right body is not the renamed left body"))
        }
        C13 | C13f => {
            let (v1, inner1) = sum(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum binder"))?;
            let (w1, a) = sum(inner1).ok_or_else(|| shape("left side is not a double sum"))?;
            let (w2, inner2) = sum(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum binder"))?;
            let (v2, b) = sum(inner2).ok_or_else(|| shape("right side is not a double sum"))?;
            ensure(v1 == v2 && w1 == w2, || shape("binders are not exchanged"))?;
            let both_first = v1.is_first() && w1.is_first();
            ensure(both_first == (p.rule == C13f), || {
                shape("C13f exchanges two first-order sums, C13 any pair involving a second-order one")
            })?;
            ensure(core_eq(a, b), || shape("bodies differ"))
        }
        C14 | C14f => {
            let (v, body) = sum(core(l, "left side")?).ok_or_else(|| shape("left side is not a sum binder"))?;
            let (a1, b1) = plus(body).ok_or_else(|| shape("body is not a sum"))?;
            binder_order(p.rule, v)?;
            let (sa, sb) = plus(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum"))?;
            let (va, a2) = sum(sa).ok_or_else(|| shape("left summand is not a sum binder"))?;
            let (vb, b2) = sum(sb).ok_or_else(|| shape("right summand is not a sum binder"))?;
            let a2 = rebind(v, va, a2).ok_or_else(|| shape("binders differ"))?;
            let b2 = rebind(v, vb, b2).ok_or_else(|| shape("binders differ"))?;
            ensure(core_eq(a1, &a2) && core_eq(b1, &b2), || shape("summands differ"))
        }
        C15 | C15f => {
            let (guard, sa, sb) = cond(core(l, "left side")?).ok_or_else(|| shape("left side is not a conditional"))?;
            let (va, a1) = sum(sa).ok_or_else(|| shape("then-branch is not a sum binder"))?;
            let (vb, b1) = sum(sb).ok_or_else(|| shape("else-branch is not a sum binder"))?;
            let (v, body) = sum(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum binder"))?;
            let (g2, a2, b2) = cond(body).ok_or_else(|| shape("right body is not a conditional"))?;
            let a1 = rebind(v, va, a1).ok_or_else(|| shape("binders differ"))?;
            let b1 = rebind(v, vb, b1).ok_or_else(|| shape("binders differ"))?;
            binder_order(p.rule, v)?;
            optional_pivot(p, guard)?;
            ensure(mso_eq(guard, g2), || shape("guards differ"))?;
            ensure(!guard.free_vars().contains(v), || Reason::Freshness(format!("{v} is free in the guard")))?;
            ensure(core_eq(&a1, a2) && core_eq(&b1, b2), || shape("branches differ"))
        }
        C16 | C16f => {
            let phi_l = core(l, "left side")?;
            let (v, body) = sum(core(r, "right side")?).ok_or_else(|| shape("right side is not a sum binder"))?;
            let (guard, a, z) = cond(body).ok_or_else(|| shape("right body is not a conditional"))?;
            binder_order(p.rule, v)?;
            optional_pivot(p, guard)?;
            optional_var(p, v)?;
            ensure(*z == Core::Zero, || shape("else-branch is not 0"))?;
            ensure(core_eq(a, phi_l), || shape("then-branch is not the left side"))?;
            ensure(!phi_l.vars().contains(v), || Reason::Freshness(format!("{v} occurs in the formula")))?;
            side(g, &unique_exists(v, guard), ctx)
        }
        C17 => check_c17(p, ctx, cfg),
    }
}

fn check_c17(p: &ProofTree, ctx: &Context, cfg: &CheckConfig) -> R {
    let j = &p.concl;
    let (l, r) = (core(&j.lhs, "left side")?, core(&j.rhs, "right side")?);
    let found = p.l.clone().ok_or(Reason::MissingParam("l"))?;
    let f1 = SecondNormalForm::of(l).map_err(|e| Reason::NotSecondNormalForm(format!("left side: {e}")))?;
    let f2 = SecondNormalForm::of(r).map_err(|e| Reason::NotSecondNormalForm(format!("right side: {e}")))?;
    let ell = ell_bound(l, r, &j.gamma, ctx.alphabet.len()).map_err(|e| shape(e.to_string()))?;
    let k = f1.vars.len().max(f2.vars.len());
    let expected = BigUint::from(2u32).pow((ell * k) as u32);
    ensure(found == expected, || Reason::WrongL { expected, found: found.clone() })?;
    ensure(found <= BigUint::from(cfg.c17_cap), || Reason::C17CapExceeded { l: found.clone(), cap: cfg.c17_cap })?;
    let n = found.to_usize().expect("bounded by the cap");
    let fwd = build_leq_formula(l, r, n).map_err(|e| Reason::NotSecondNormalForm(e.to_string()))?;
    side(&j.gamma, &fwd, ctx)?;
    let bwd = build_leq_formula(r, l, n).map_err(|e| Reason::NotSecondNormalForm(e.to_string()))?;
    side(&j.gamma, &bwd, ctx)
}
