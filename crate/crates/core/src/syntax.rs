//! Alphabets, variables, weights and the three formula layers.
//!
//! MSO formulas are stored over the primitive constructors only; the derived
//! connectives are expanded by the parser and folded back by the printer.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(pub u16);

const KEYWORDS: &[&str] = &[
    "true", "false", "zero", "sum", "prod", "forall", "exists", "in",
];

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContextError {
    #[error("alphabet must be nonempty")]
    EmptyAlphabet,
    #[error("weight set must be nonempty")]
    EmptyWeights,
    #[error("duplicate symbol '{0}'")]
    Duplicate(String),
    #[error("invalid symbol '{0}'")]
    InvalidSymbol(String),
    #[error("default weight '{0}' is not declared")]
    UnknownDefault(String),
    #[error("malformed session header: {0}")]
    Header(String),
}

fn check_symbols(symbols: &[String]) -> Result<(), ContextError> {
    let mut seen = HashSet::new();
    for s in symbols {
        if !is_ident(s) || s.contains('.') || KEYWORDS.contains(&s.as_str()) {
            return Err(ContextError::InvalidSymbol(s.clone()));
        }
        if !seen.insert(s.as_str()) {
            return Err(ContextError::Duplicate(s.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    letters: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(letters: impl IntoIterator<Item = S>) -> Result<Self, ContextError> {
        let letters: Vec<String> = letters.into_iter().map(Into::into).collect();
        if letters.is_empty() {
            return Err(ContextError::EmptyAlphabet);
        }
        check_symbols(&letters)?;
        Ok(Alphabet { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<Letter> {
        self.letters.iter().position(|l| l == name).map(|i| Letter(i as u16))
    }

    pub fn name(&self, a: Letter) -> &str {
        &self.letters[a.0 as usize]
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.letters.len() as u16).map(Letter)
    }

    pub fn names(&self) -> &[String] {
        &self.letters
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightSet {
    weights: Vec<String>,
}

impl WeightSet {
    pub fn new<S: Into<String>>(weights: impl IntoIterator<Item = S>) -> Result<Self, ContextError> {
        let weights: Vec<String> = weights.into_iter().map(Into::into).collect();
        if weights.is_empty() {
            return Err(ContextError::EmptyWeights);
        }
        check_symbols(&weights)?;
        Ok(WeightSet { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<Weight> {
        self.weights.iter().position(|w| w == name).map(|i| Weight(i as u16))
    }

    pub fn name(&self, r: Weight) -> &str {
        &self.weights[r.0 as usize]
    }

    pub fn weights(&self) -> impl Iterator<Item = Weight> {
        (0..self.weights.len() as u16).map(Weight)
    }

    pub fn names(&self) -> &[String] {
        &self.weights
    }
}

/// Session-wide declarations: every formula, word and automaton is read
/// against one context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    pub alphabet: Alphabet,
    pub weights: WeightSet,
    pub default_weight: Weight,
}

#[derive(Serialize, Deserialize)]
struct Header {
    alphabet: Vec<String>,
    weights: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_weight: Option<String>,
}

impl Context {
    pub fn new<S: Into<String>, T: Into<String>>(
        letters: impl IntoIterator<Item = S>,
        weights: impl IntoIterator<Item = T>,
        default_weight: &str,
    ) -> Result<Self, ContextError> {
        let alphabet = Alphabet::new(letters)?;
        let weights = WeightSet::new(weights)?;
        let default_weight = weights
            .lookup(default_weight)
            .ok_or_else(|| ContextError::UnknownDefault(default_weight.to_string()))?;
        Ok(Context { alphabet, weights, default_weight })
    }

    /// Parses a session header such as
    /// `{"alphabet":["a","b"],"weights":["0","1"],"default_weight":"0"}`.
    /// Without `default_weight`, "0" is used if declared, else the first weight.
    pub fn from_header_json(text: &str) -> Result<Self, ContextError> {
        let h: Header = serde_json::from_str(text).map_err(|e| ContextError::Header(e.to_string()))?;
        let default = match h.default_weight {
            Some(d) => d,
            None if h.weights.iter().any(|w| w == "0") => "0".to_string(),
            None => h.weights.first().cloned().ok_or(ContextError::EmptyWeights)?,
        };
        Context::new(h.alphabet, h.weights, &default)
    }

    pub fn to_header_json(&self) -> String {
        let h = Header {
            alphabet: self.alphabet.names().to_vec(),
            weights: self.weights.names().to_vec(),
            default_weight: Some(self.weights.name(self.default_weight).to_string()),
        };
        serde_json::to_string(&h).expect("header serializes")
    }

    pub fn weight(&self, name: &str) -> Option<Weight> {
        self.weights.lookup(name)
    }

    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.alphabet.lookup(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    First,
    Second,
}

/// A variable; the order tag keeps first- and second-order names apart.
/// Ordering puts first-order variables before second-order ones, then sorts
/// by name; this is the canonical track order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    order: Order,
    name: Arc<str>,
}

impl Var {
    pub fn new(name: &str, order: Order) -> Var {
        Var { order, name: Arc::from(name) }
    }

    pub fn first(name: &str) -> Var {
        Var::new(name, Order::First)
    }

    pub fn second(name: &str) -> Var {
        Var::new(name, Order::Second)
    }

    /// Reads the order from the case of the first character.
    pub fn from_name(name: &str) -> Option<Var> {
        let c = name.chars().next()?;
        if !is_ident(name) || KEYWORDS.contains(&name) {
            None
        } else if c.is_ascii_lowercase() {
            Some(Var::first(name))
        } else if c.is_ascii_uppercase() {
            Some(Var::second(name))
        } else {
            None
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn is_first(&self) -> bool {
        self.order == Order::First
    }

    pub fn renamed(&self, name: &str) -> Var {
        Var::new(name, self.order)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Produces names not in use, of the form `base_k`.
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    used: HashSet<Arc<str>>,
}

impl FreshNames {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn avoiding<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Self {
        let mut f = FreshNames::new();
        for v in vars {
            f.reserve(v);
        }
        f
    }

    pub fn reserve(&mut self, v: &Var) {
        self.used.insert(v.name.clone());
    }

    pub fn is_used(&self, v: &Var) -> bool {
        self.used.contains(&v.name)
    }

    pub fn fresh(&mut self, base: &Var) -> Var {
        let stem = base.name().split('_').next().unwrap_or(base.name());
        let stem = if stem.is_empty() { base.name() } else { stem };
        let mut k = 1usize;
        loop {
            let cand = base.renamed(&format!("{stem}_{k}"));
            if !self.used.contains(&cand.name) {
                self.reserve(&cand);
                return cand;
            }
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Mso {
    True,
    Letter(Letter, Var),
    Le(Var, Var),
    In(Var, Var),
    Not(Box<Mso>),
    And(Box<Mso>, Box<Mso>),
    Forall(Var, Box<Mso>),
}

impl Mso {
    pub fn bot() -> Mso {
        Mso::True.not()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Mso {
        Mso::Not(Box::new(self))
    }

    pub fn and(self, other: Mso) -> Mso {
        Mso::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Mso) -> Mso {
        self.not().and(other.not()).not()
    }

    pub fn implies(self, other: Mso) -> Mso {
        self.and(other.not()).not()
    }

    pub fn iff(self, other: Mso) -> Mso {
        self.clone().implies(other.clone()).and(other.implies(self))
    }

    pub fn forall(v: Var, body: Mso) -> Mso {
        Mso::Forall(v, Box::new(body))
    }

    pub fn exists(v: Var, body: Mso) -> Mso {
        Mso::forall(v, body.not()).not()
    }

    pub fn eq(x: Var, y: Var) -> Mso {
        Mso::Le(x.clone(), y.clone()).and(Mso::Le(y, x))
    }

    pub fn lt(x: Var, y: Var) -> Mso {
        Mso::Le(x.clone(), y.clone()).and(Mso::Le(y, x).not())
    }

    /// Conjunction of a list; the empty conjunction is ⊤.
    pub fn conj(items: impl IntoIterator<Item = Mso>) -> Mso {
        let mut it = items.into_iter();
        match it.next() {
            None => Mso::True,
            Some(first) => it.fold(first, Mso::and),
        }
    }

    /// Disjunction of a list; the empty disjunction is ¬⊤.
    pub fn disj(items: impl IntoIterator<Item = Mso>) -> Mso {
        let mut it = items.into_iter();
        match it.next() {
            None => Mso::bot(),
            Some(first) => it.fold(first, Mso::or),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>, free_only: bool, bound: &mut Vec<Var>) {
        let mut note = |v: &Var, bound: &Vec<Var>| {
            if !free_only || !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Mso::True => {}
            Mso::Letter(_, x) => note(x, bound),
            Mso::Le(x, y) | Mso::In(x, y) => {
                note(x, bound);
                note(y, bound);
            }
            Mso::Not(a) => a.collect_vars(out, free_only, bound),
            Mso::And(a, b) => {
                a.collect_vars(out, free_only, bound);
                b.collect_vars(out, free_only, bound);
            }
            Mso::Forall(v, a) => {
                if !free_only {
                    out.insert(v.clone());
                }
                bound.push(v.clone());
                a.collect_vars(out, free_only, bound);
                bound.pop();
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out, true, &mut Vec::new());
        out
    }

    /// Every variable occurring, bound or free.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out, false, &mut Vec::new());
        out
    }

    /// Replaces free occurrences of `from` by `to`. The caller guarantees
    /// that `to` is not captured.
    pub fn rename_free(&self, from: &Var, to: &Var) -> Mso {
        let r = |v: &Var| if v == from { to.clone() } else { v.clone() };
        match self {
            Mso::True => Mso::True,
            Mso::Letter(a, x) => Mso::Letter(*a, r(x)),
            Mso::Le(x, y) => Mso::Le(r(x), r(y)),
            Mso::In(x, y) => Mso::In(r(x), r(y)),
            Mso::Not(a) => a.rename_free(from, to).not(),
            Mso::And(a, b) => a.rename_free(from, to).and(b.rename_free(from, to)),
            Mso::Forall(v, a) if v == from => self.clone(),
            Mso::Forall(v, a) => Mso::forall(v.clone(), a.rename_free(from, to)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Mso::True | Mso::Letter(..) | Mso::Le(..) | Mso::In(..) => 1,
            Mso::Not(a) | Mso::Forall(_, a) => 1 + a.size(),
            Mso::And(a, b) => 1 + a.size() + b.size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Step {
    Weight(Weight),
    Cond(Mso, Box<Step>, Box<Step>),
}

impl Step {
    pub fn cond(phi: Mso, a: Step, b: Step) -> Step {
        Step::Cond(phi, Box::new(a), Box::new(b))
    }

    /// R(Ψ): the weights occurring in Ψ, in declaration order.
    pub fn weights(&self) -> BTreeSet<Weight> {
        let mut out = BTreeSet::new();
        self.collect_weights(&mut out);
        out
    }

    fn collect_weights(&self, out: &mut BTreeSet<Weight>) {
        match self {
            Step::Weight(r) => {
                out.insert(*r);
            }
            Step::Cond(_, a, b) => {
                a.collect_weights(out);
                b.collect_weights(out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            Step::Weight(_) => BTreeSet::new(),
            Step::Cond(phi, a, b) => {
                let mut s = phi.free_vars();
                s.extend(a.free_vars());
                s.extend(b.free_vars());
                s
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        match self {
            Step::Weight(_) => BTreeSet::new(),
            Step::Cond(phi, a, b) => {
                let mut s = phi.vars();
                s.extend(a.vars());
                s.extend(b.vars());
                s
            }
        }
    }

    pub fn rename_free(&self, from: &Var, to: &Var) -> Step {
        match self {
            Step::Weight(r) => Step::Weight(*r),
            Step::Cond(phi, a, b) => Step::cond(
                phi.rename_free(from, to),
                a.rename_free(from, to),
                b.rename_free(from, to),
            ),
        }
    }

    /// Number of conditionals, |Ψ|_?.
    pub fn cond_count(&self) -> usize {
        match self {
            Step::Weight(_) => 0,
            Step::Cond(_, a, b) => 1 + a.cond_count() + b.cond_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Core {
    Zero,
    Prod(Var, Step),
    Cond(Mso, Box<Core>, Box<Core>),
    Plus(Box<Core>, Box<Core>),
    Sum(Var, Box<Core>),
}

impl Core {
    pub fn prod(x: Var, psi: Step) -> Core {
        Core::Prod(x, psi)
    }

    pub fn cond(phi: Mso, a: Core, b: Core) -> Core {
        Core::Cond(phi, Box::new(a), Box::new(b))
    }

    pub fn plus(a: Core, b: Core) -> Core {
        Core::Plus(Box::new(a), Box::new(b))
    }

    pub fn sum(v: Var, body: Core) -> Core {
        Core::Sum(v, Box::new(body))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            Core::Zero => BTreeSet::new(),
            Core::Prod(x, psi) => {
                let mut s = psi.free_vars();
                s.remove(x);
                s
            }
            Core::Cond(phi, a, b) => {
                let mut s = phi.free_vars();
                s.extend(a.free_vars());
                s.extend(b.free_vars());
                s
            }
            Core::Plus(a, b) => {
                let mut s = a.free_vars();
                s.extend(b.free_vars());
                s
            }
            Core::Sum(v, a) => {
                let mut s = a.free_vars();
                s.remove(v);
                s
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        match self {
            Core::Zero => BTreeSet::new(),
            Core::Prod(x, psi) => {
                let mut s = psi.vars();
                s.insert(x.clone());
                s
            }
            Core::Cond(phi, a, b) => {
                let mut s = phi.vars();
                s.extend(a.vars());
                s.extend(b.vars());
                s
            }
            Core::Plus(a, b) => {
                let mut s = a.vars();
                s.extend(b.vars());
                s
            }
            Core::Sum(v, a) => {
                let mut s = a.vars();
                s.insert(v.clone());
                s
            }
        }
    }

    pub fn rename_free(&self, from: &Var, to: &Var) -> Core {
        match self {
            Core::Zero => Core::Zero,
            Core::Prod(x, _) if x == from => self.clone(),
            Core::Prod(x, psi) => Core::Prod(x.clone(), psi.rename_free(from, to)),
            Core::Cond(phi, a, b) => Core::cond(
                phi.rename_free(from, to),
                a.rename_free(from, to),
                b.rename_free(from, to),
            ),
            Core::Plus(a, b) => Core::plus(a.rename_free(from, to), b.rename_free(from, to)),
            Core::Sum(v, _) if v == from => self.clone(),
            Core::Sum(v, a) => Core::sum(v.clone(), a.rename_free(from, to)),
        }
    }

    pub fn has_sum(&self) -> bool {
        match self {
            Core::Zero | Core::Prod(..) => false,
            Core::Cond(_, a, b) | Core::Plus(a, b) => a.has_sum() || b.has_sum(),
            Core::Sum(..) => true,
        }
    }

    pub fn has_plus(&self) -> bool {
        match self {
            Core::Zero | Core::Prod(..) => false,
            Core::Cond(_, a, b) => a.has_plus() || b.has_plus(),
            Core::Plus(..) => true,
            Core::Sum(_, a) => a.has_plus(),
        }
    }

    /// True for core-wFO formulas: no second-order variable anywhere.
    pub fn is_first_order(&self) -> bool {
        self.vars().iter().all(Var::is_first)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Mso,
    Step,
    Core,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Mso => "mso",
            Layer::Step => "step",
            Layer::Core => "core",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Mso(Mso),
    Step(Step),
    Core(Core),
}

impl Formula {
    pub fn layer(&self) -> Layer {
        match self {
            Formula::Mso(_) => Layer::Mso,
            Formula::Step(_) => Layer::Step,
            Formula::Core(_) => Layer::Core,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            Formula::Mso(f) => f.free_vars(),
            Formula::Step(f) => f.free_vars(),
            Formula::Core(f) => f.free_vars(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        match self {
            Formula::Mso(f) => f.vars(),
            Formula::Step(f) => f.vars(),
            Formula::Core(f) => f.vars(),
        }
    }
}

// ---------------------------------------------------------------------------
// Alpha-renaming

/// Renames binders so that no two binders share a name and no binder reuses
/// a free variable's name. Formulas that already have this property are
/// returned unchanged.
pub fn uniquify(f: &Formula) -> Formula {
    let mut names = FreshNames::avoiding(&f.vars());
    let mut seen: HashSet<Var> = f.free_vars().into_iter().collect();
    match f {
        Formula::Mso(m) => Formula::Mso(uniq_mso(m, &mut seen, &mut names)),
        Formula::Step(s) => Formula::Step(uniq_step(s, &mut seen, &mut names)),
        Formula::Core(c) => Formula::Core(uniq_core(c, &mut seen, &mut names)),
    }
}

fn claim(v: &Var, seen: &mut HashSet<Var>, names: &mut FreshNames) -> Option<Var> {
    // Names are compared across orders too so that printed text never shows
    // the same identifier twice.
    let clash = seen.iter().any(|s| s.name() == v.name());
    if clash {
        let nv = names.fresh(v);
        seen.insert(nv.clone());
        Some(nv)
    } else {
        seen.insert(v.clone());
        None
    }
}

fn uniq_mso(m: &Mso, seen: &mut HashSet<Var>, names: &mut FreshNames) -> Mso {
    match m {
        Mso::Not(a) => uniq_mso(a, seen, names).not(),
        Mso::And(a, b) => {
            let a = uniq_mso(a, seen, names);
            a.and(uniq_mso(b, seen, names))
        }
        Mso::Forall(v, a) => match claim(v, seen, names) {
            Some(nv) => Mso::forall(nv.clone(), uniq_mso(&a.rename_free(v, &nv), seen, names)),
            None => Mso::forall(v.clone(), uniq_mso(a, seen, names)),
        },
        _ => m.clone(),
    }
}

fn uniq_step(s: &Step, seen: &mut HashSet<Var>, names: &mut FreshNames) -> Step {
    match s {
        Step::Weight(_) => s.clone(),
        Step::Cond(phi, a, b) => {
            let phi = uniq_mso(phi, seen, names);
            let a = uniq_step(a, seen, names);
            Step::cond(phi, a, uniq_step(b, seen, names))
        }
    }
}

fn uniq_core(c: &Core, seen: &mut HashSet<Var>, names: &mut FreshNames) -> Core {
    match c {
        Core::Zero => Core::Zero,
        Core::Prod(x, psi) => match claim(x, seen, names) {
            Some(nx) => Core::Prod(nx.clone(), uniq_step(&psi.rename_free(x, &nx), seen, names)),
            None => Core::Prod(x.clone(), uniq_step(psi, seen, names)),
        },
        Core::Cond(phi, a, b) => {
            let phi = uniq_mso(phi, seen, names);
            let a = uniq_core(a, seen, names);
            Core::cond(phi, a, uniq_core(b, seen, names))
        }
        Core::Plus(a, b) => {
            let a = uniq_core(a, seen, names);
            Core::plus(a, uniq_core(b, seen, names))
        }
        Core::Sum(v, a) => match claim(v, seen, names) {
            Some(nv) => Core::sum(nv.clone(), uniq_core(&a.rename_free(v, &nv), seen, names)),
            None => Core::sum(v.clone(), uniq_core(a, seen, names)),
        },
    }
}

/// Alpha-canonical form: binders renamed to `#k` in pre-order. Two formulas
/// are alpha-equivalent iff their canonical forms are equal.
pub fn alpha_canonical_mso(m: &Mso) -> Mso {
    canon_mso(m, &mut 0)
}

pub fn alpha_canonical_step(s: &Step) -> Step {
    canon_step(s, &mut 0)
}

pub fn alpha_canonical_core(c: &Core) -> Core {
    canon_core(c, &mut 0)
}

fn canon_var(v: &Var, k: &mut usize) -> Var {
    let nv = v.renamed(&format!("#{k}"));
    *k += 1;
    nv
}

fn canon_mso(m: &Mso, k: &mut usize) -> Mso {
    match m {
        Mso::Not(a) => canon_mso(a, k).not(),
        Mso::And(a, b) => {
            let a = canon_mso(a, k);
            a.and(canon_mso(b, k))
        }
        Mso::Forall(v, a) => {
            let nv = canon_var(v, k);
            Mso::forall(nv.clone(), canon_mso(&a.rename_free(v, &nv), k))
        }
        _ => m.clone(),
    }
}

fn canon_step(s: &Step, k: &mut usize) -> Step {
    match s {
        Step::Weight(_) => s.clone(),
        Step::Cond(phi, a, b) => {
            let phi = canon_mso(phi, k);
            let a = canon_step(a, k);
            Step::cond(phi, a, canon_step(b, k))
        }
    }
}

fn canon_core(c: &Core, k: &mut usize) -> Core {
    match c {
        Core::Zero => Core::Zero,
        Core::Prod(x, psi) => {
            let nx = canon_var(x, k);
            Core::Prod(nx.clone(), canon_step(&psi.rename_free(x, &nx), k))
        }
        Core::Cond(phi, a, b) => {
            let phi = canon_mso(phi, k);
            let a = canon_core(a, k);
            Core::cond(phi, a, canon_core(b, k))
        }
        Core::Plus(a, b) => {
            let a = canon_core(a, k);
            Core::plus(a, canon_core(b, k))
        }
        Core::Sum(v, a) => {
            let nv = canon_var(v, k);
            Core::sum(nv.clone(), canon_core(&a.rename_free(v, &nv), k))
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn at(text: &str, offset: usize, msg: impl Into<String>) -> ParseError {
        let before = &text[..offset.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError { offset, line, col, msg: msg.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: &[&str] = &[
    "<->", "->", "<=", ">=", "|-", "~~", "!", "&", "|", "<", ">", "=", "(", ")", "?", ":", "+", ".",
    "¬", "∧", "∨", "→", "↔", "≤",
];

fn canonical_sym(s: &'static str) -> &'static str {
    match s {
        "¬" => "!",
        "∧" => "&",
        "∨" => "|",
        "→" => "->",
        "↔" => "<->",
        "≤" => "<=",
        _ => s,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '\''))
                .unwrap_or(rest.len());
            out.push((Tok::Ident(rest[..len].to_string()), i));
            i += len;
            continue;
        }
        for s in SYMBOLS {
            if rest.starts_with(s) {
                out.push((Tok::Sym(canonical_sym(s)), i));
                i += s.len();
                continue 'outer;
            }
        }
        return Err(ParseError::at(text, i, format!("unexpected character '{c}'")));
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a Context,
}

type PResult<T> = Result<T, ParseError>;

fn further(a: ParseError, b: ParseError) -> ParseError {
    if b.offset > a.offset {
        b
    } else {
        a
    }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, ctx: &'a Context) -> PResult<Self> {
        Ok(Parser { text, toks: lex(text)?, pos: 0, ctx })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::at(self.text, self.offset(), msg))
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", self.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn var(&mut self) -> PResult<Var> {
        if let Tok::Ident(s) = self.peek().clone() {
            if let Some(v) = Var::from_name(&s) {
                self.bump();
                return Ok(v);
            }
        }
        self.err(format!("expected a variable, found {}", self.describe()))
    }

    fn fo_var(&mut self) -> PResult<Var> {
        let at = self.pos;
        let v = self.var()?;
        if !v.is_first() {
            self.pos = at;
            return self.err(format!("'{v}' is second-order; a first-order variable is required"));
        }
        Ok(v)
    }

    fn so_var(&mut self) -> PResult<Var> {
        let at = self.pos;
        let v = self.var()?;
        if v.is_first() {
            self.pos = at;
            return self.err(format!("'{v}' is first-order; a second-order variable is required"));
        }
        Ok(v)
    }

    // MSO ------------------------------------------------------------------

    fn mso(&mut self) -> PResult<Mso> {
        let mut l = self.mso_implies()?;
        while self.eat("<->") {
            let r = self.mso_implies()?;
            l = l.iff(r);
        }
        Ok(l)
    }

    fn mso_implies(&mut self) -> PResult<Mso> {
        let l = self.mso_or()?;
        if self.eat("->") {
            let r = self.mso_implies()?;
            return Ok(l.implies(r));
        }
        Ok(l)
    }

    fn mso_or(&mut self) -> PResult<Mso> {
        let mut l = self.mso_and()?;
        while self.eat("|") {
            let r = self.mso_and()?;
            l = l.or(r);
        }
        Ok(l)
    }

    fn mso_and(&mut self) -> PResult<Mso> {
        let mut l = self.mso_unary()?;
        while self.eat("&") {
            let r = self.mso_unary()?;
            l = l.and(r);
        }
        Ok(l)
    }

    fn mso_unary(&mut self) -> PResult<Mso> {
        if self.eat("!") {
            return Ok(self.mso_unary()?.not());
        }
        for (kw, universal) in [("forall", true), ("exists", false)] {
            if self.eat_kw(kw) {
                let mut vars = vec![self.var()?];
                while !self.is_sym(".") {
                    vars.push(self.var()?);
                }
                self.expect(".")?;
                let mut body = self.mso()?;
                for v in vars.into_iter().rev() {
                    body = if universal { Mso::forall(v, body) } else { Mso::exists(v, body) };
                }
                return Ok(body);
            }
        }
        self.mso_atom()
    }

    fn mso_atom(&mut self) -> PResult<Mso> {
        if self.eat_kw("true") {
            return Ok(Mso::True);
        }
        if self.eat_kw("false") {
            return Ok(Mso::bot());
        }
        if self.eat("(") {
            let f = self.mso()?;
            self.expect(")")?;
            return Ok(f);
        }
        let name = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.err(format!("expected a formula, found {}", self.describe())),
        };
        if KEYWORDS.contains(&name.as_str()) {
            return self.err(format!("unexpected keyword '{name}'"));
        }
        let first = name.chars().next().unwrap();
        if first.is_ascii_uppercase() && *self.peek_at(1) == Tok::Sym("(") {
            let start = self.pos;
            self.bump();
            self.bump();
            let x = self.fo_var()?;
            self.expect(")")?;
            if let Some(letter) = name.strip_prefix('P').filter(|l| !l.is_empty()) {
                return match self.ctx.letter(letter) {
                    Some(a) => Ok(Mso::Letter(a, x)),
                    None => {
                        self.pos = start;
                        self.err(format!("unknown letter '{letter}'"))
                    }
                };
            }
            let set = Var::from_name(&name);
            return match set {
                Some(set) => Ok(Mso::In(x, set)),
                None => {
                    self.pos = start;
                    self.err(format!("invalid set variable '{name}'"))
                }
            };
        }
        let x = self.fo_var()?;
        if self.eat("<=") {
            let y = self.fo_var()?;
            Ok(Mso::Le(x, y))
        } else if self.eat(">=") {
            let y = self.fo_var()?;
            Ok(Mso::Le(y, x))
        } else if self.eat("<") {
            let y = self.fo_var()?;
            Ok(Mso::lt(x, y))
        } else if self.eat(">") {
            let y = self.fo_var()?;
            Ok(Mso::lt(y, x))
        } else if self.eat("=") {
            let y = self.fo_var()?;
            Ok(Mso::eq(x, y))
        } else if self.eat_kw("in") {
            let set = self.so_var()?;
            Ok(Mso::In(x, set))
        } else {
            self.err(format!("expected '<=', '<', '=' or 'in' after '{x}', found {}", self.describe()))
        }
    }

    /// Attempts `φ ?`; restores the position on failure.
    fn try_guard(&mut self) -> PResult<Mso> {
        let save = self.pos;
        let r = self.mso().and_then(|phi| {
            if self.eat("?") {
                Ok(phi)
            } else {
                self.err(format!("expected '?', found {}", self.describe()))
            }
        });
        if r.is_err() {
            self.pos = save;
        }
        r
    }

    // Step -----------------------------------------------------------------

    fn step(&mut self) -> PResult<Step> {
        let guard_err = match self.try_guard() {
            Ok(phi) => {
                let a = self.step()?;
                let b = self.step_else()?;
                return Ok(Step::cond(phi, a, b));
            }
            Err(e) => e,
        };
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            let r = self.step().and_then(|s| self.expect(")").map(|_| s));
            return match r {
                Ok(s) => Ok(s),
                Err(e) => {
                    self.pos = save;
                    Err(further(guard_err, e))
                }
            };
        }
        if let Tok::Ident(s) = self.peek().clone() {
            if let Some(r) = self.ctx.weight(&s) {
                self.bump();
                return Ok(Step::Weight(r));
            }
            if !KEYWORDS.contains(&s.as_str()) && Var::from_name(&s).is_none() {
                return self.err(format!("unknown weight '{s}'"));
            }
        }
        if self.is_kw("zero") || self.is_kw("prod") || self.is_kw("sum") {
            return self.err("core-layer construct inside a step formula");
        }
        Err(further(
            guard_err,
            ParseError::at(self.text, self.offset(), format!("expected a weight or a conditional, found {}", self.describe())),
        ))
    }

    fn step_else(&mut self) -> PResult<Step> {
        let save = self.pos;
        if self.eat(":") {
            match self.step() {
                Ok(s) => return Ok(s),
                Err(_) => self.pos = save,
            }
        }
        Ok(Step::Weight(self.ctx.default_weight))
    }

    // Core -----------------------------------------------------------------

    fn core(&mut self) -> PResult<Core> {
        let mut l = self.core_term()?;
        while self.eat("+") {
            let r = self.core_term()?;
            l = Core::plus(l, r);
        }
        Ok(l)
    }

    fn core_term(&mut self) -> PResult<Core> {
        if self.eat_kw("zero") {
            return Ok(Core::Zero);
        }
        if self.eat_kw("prod") {
            let x = self.fo_var()?;
            self.expect(".")?;
            let psi = self.step()?;
            return Ok(Core::Prod(x, psi));
        }
        if self.eat_kw("sum") {
            let mut vars = vec![self.var()?];
            while !self.is_sym(".") {
                vars.push(self.var()?);
            }
            self.expect(".")?;
            let mut body = self.core()?;
            for v in vars.into_iter().rev() {
                body = Core::sum(v, body);
            }
            return Ok(body);
        }
        let guard_err = match self.try_guard() {
            Ok(phi) => {
                let a = self.core()?;
                let save = self.pos;
                let mut b = Core::Zero;
                if self.eat(":") {
                    match self.core() {
                        Ok(c) => b = c,
                        Err(_) => self.pos = save,
                    }
                }
                return Ok(Core::cond(phi, a, b));
            }
            Err(e) => e,
        };
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            let r = self.core().and_then(|c| self.expect(")").map(|_| c));
            return match r {
                Ok(c) => Ok(c),
                Err(e) => {
                    self.pos = save;
                    Err(further(guard_err, e))
                }
            };
        }
        if let Tok::Ident(s) = self.peek() {
            if self.ctx.weight(s).is_some() {
                return self.err(format!("bare weight '{s}' is a step formula; wrap it in 'prod x.'"));
            }
        }
        Err(guard_err)
    }

    fn finish(&mut self, layer: Layer) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            Tok::Sym("+") if layer != Layer::Core => self.err(format!("'+' is not allowed in the {layer} layer")),
            Tok::Sym("?") if layer == Layer::Mso => self.err("'?' is not allowed in the mso layer"),
            _ => self.err(format!("unexpected {}", self.describe())),
        }
    }
}

/// Parses `text` in the given layer, then makes bound variables unique.
pub fn parse_formula(text: &str, layer: Layer, ctx: &Context) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, ctx)?;
    let f = match layer {
        Layer::Mso => Formula::Mso(p.mso()?),
        Layer::Step => Formula::Step(p.step()?),
        Layer::Core => Formula::Core(p.core()?),
    };
    p.finish(layer)?;
    Ok(uniquify(&f))
}

/// Tries the step, core and mso layers in turn and keeps the first success;
/// on total failure reports the error that got furthest.
pub fn parse_any(text: &str, ctx: &Context) -> Result<Formula, ParseError> {
    let mut best: Option<ParseError> = None;
    for layer in [Layer::Step, Layer::Core, Layer::Mso] {
        match parse_formula(text, layer, ctx) {
            Ok(f) => return Ok(f),
            Err(e) => best = Some(match best {
                None => e,
                Some(b) => further(b, e),
            }),
        }
    }
    Err(best.unwrap())
}

pub fn parse_mso(text: &str, ctx: &Context) -> Result<Mso, ParseError> {
    match parse_formula(text, Layer::Mso, ctx)? {
        Formula::Mso(m) => Ok(m),
        _ => unreachable!(),
    }
}

pub fn parse_step(text: &str, ctx: &Context) -> Result<Step, ParseError> {
    match parse_formula(text, Layer::Step, ctx)? {
        Formula::Step(s) => Ok(s),
        _ => unreachable!(),
    }
}

pub fn parse_core(text: &str, ctx: &Context) -> Result<Core, ParseError> {
    match parse_formula(text, Layer::Core, ctx)? {
        Formula::Core(c) => Ok(c),
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Printer

// MSO precedence levels; quantifiers sit at the bottom since they extend
// maximally to the right.
const P_QUANT: u8 = 0;
const P_IFF: u8 = 1;
const P_IMPL: u8 = 2;
const P_OR: u8 = 3;
const P_AND: u8 = 4;
const P_UNARY: u8 = 5;
const P_ATOM: u8 = 6;

enum View<'a> {
    Bot,
    Exists(&'a Var, &'a Mso),
    Or(&'a Mso, &'a Mso),
    Implies(&'a Mso, &'a Mso),
    Iff(&'a Mso, &'a Mso),
    Eq(&'a Var, &'a Var),
    Lt(&'a Var, &'a Var),
    Plain,
}

fn view(m: &Mso) -> View<'_> {
    match m {
        Mso::Not(a) => match a.as_ref() {
            Mso::True => View::Bot,
            Mso::Forall(v, b) => match b.as_ref() {
                Mso::Not(c) => View::Exists(v, c),
                _ => View::Plain,
            },
            Mso::And(l, r) => match (l.as_ref(), r.as_ref()) {
                (Mso::Not(x), Mso::Not(y)) => View::Or(x, y),
                (x, Mso::Not(y)) => View::Implies(x, y),
                _ => View::Plain,
            },
            _ => View::Plain,
        },
        Mso::And(l, r) => {
            if let (Mso::Not(l1), Mso::Not(r1)) = (l.as_ref(), r.as_ref()) {
                if let (Mso::And(a, nb), Mso::And(b, na)) = (l1.as_ref(), r1.as_ref()) {
                    if let (Mso::Not(b2), Mso::Not(a2)) = (nb.as_ref(), na.as_ref()) {
                        if a == a2 && b == b2 {
                            return View::Iff(a, b);
                        }
                    }
                }
            }
            match (l.as_ref(), r.as_ref()) {
                (Mso::Le(x, y), Mso::Le(y2, x2)) if x == x2 && y == y2 => View::Eq(x, y),
                (Mso::Le(x, y), Mso::Not(n)) => match n.as_ref() {
                    Mso::Le(y2, x2) if x == x2 && y == y2 => View::Lt(x, y),
                    _ => View::Plain,
                },
                _ => View::Plain,
            }
        }
        _ => View::Plain,
    }
}

fn mso_level(m: &Mso) -> u8 {
    match view(m) {
        View::Bot | View::Eq(..) | View::Lt(..) => P_ATOM,
        View::Exists(..) => P_QUANT,
        View::Or(..) => P_OR,
        View::Implies(..) => P_IMPL,
        View::Iff(..) => P_IFF,
        View::Plain => match m {
            Mso::True | Mso::Letter(..) | Mso::Le(..) | Mso::In(..) => P_ATOM,
            Mso::Not(_) => P_UNARY,
            Mso::And(..) => P_AND,
            Mso::Forall(..) => P_QUANT,
        },
    }
}

fn write_mso(out: &mut String, m: &Mso, min: u8, ctx: &Context) {
    let level = mso_level(m);
    let paren = level < min;
    if paren {
        out.push('(');
    }
    match view(m) {
        View::Bot => out.push_str("false"),
        View::Eq(x, y) => out.push_str(&format!("{x} = {y}")),
        View::Lt(x, y) => out.push_str(&format!("{x} < {y}")),
        View::Exists(v, b) => {
            out.push_str(&format!("exists {v}. "));
            write_mso(out, b, P_QUANT, ctx);
        }
        View::Or(a, b) => {
            write_mso(out, a, P_OR, ctx);
            out.push_str(" | ");
            write_mso(out, b, P_OR + 1, ctx);
        }
        View::Implies(a, b) => {
            write_mso(out, a, P_IMPL + 1, ctx);
            out.push_str(" -> ");
            write_mso(out, b, P_IMPL, ctx);
        }
        View::Iff(a, b) => {
            write_mso(out, a, P_IFF, ctx);
            out.push_str(" <-> ");
            write_mso(out, b, P_IFF + 1, ctx);
        }
        View::Plain => match m {
            Mso::True => out.push_str("true"),
            Mso::Letter(a, x) => out.push_str(&format!("P{}({x})", ctx.alphabet.name(*a))),
            Mso::Le(x, y) => out.push_str(&format!("{x} <= {y}")),
            Mso::In(x, y) => out.push_str(&format!("{x} in {y}")),
            Mso::Not(a) => {
                out.push('!');
                write_mso(out, a, P_UNARY, ctx);
            }
            Mso::And(a, b) => {
                write_mso(out, a, P_AND, ctx);
                out.push_str(" & ");
                write_mso(out, b, P_AND + 1, ctx);
            }
            Mso::Forall(v, b) => {
                out.push_str(&format!("forall {v}. "));
                write_mso(out, b, P_QUANT, ctx);
            }
        },
    }
    if paren {
        out.push(')');
    }
}

fn write_guard(out: &mut String, phi: &Mso, ctx: &Context) {
    write_mso(out, phi, P_UNARY, ctx);
}

fn write_step(out: &mut String, s: &Step, ctx: &Context) {
    match s {
        Step::Weight(r) => out.push_str(ctx.weights.name(*r)),
        Step::Cond(phi, a, b) => {
            write_guard(out, phi, ctx);
            out.push_str(" ? ");
            write_step(out, a, ctx);
            out.push_str(" : ");
            write_step(out, b, ctx);
        }
    }
}

const C_OPEN: u8 = 0;
const C_PLUS: u8 = 1;
const C_ATOM: u8 = 2;

fn core_level(c: &Core) -> u8 {
    match c {
        Core::Zero | Core::Prod(..) => C_ATOM,
        Core::Plus(..) => C_PLUS,
        Core::Cond(..) | Core::Sum(..) => C_OPEN,
    }
}

fn write_core(out: &mut String, c: &Core, min: u8, ctx: &Context) {
    let paren = core_level(c) < min;
    if paren {
        out.push('(');
    }
    match c {
        Core::Zero => out.push_str("zero"),
        Core::Prod(x, psi) => {
            out.push_str(&format!("prod {x}. "));
            write_step(out, psi, ctx);
        }
        Core::Cond(phi, a, b) => {
            write_guard(out, phi, ctx);
            out.push_str(" ? ");
            write_core(out, a, C_OPEN, ctx);
            out.push_str(" : ");
            write_core(out, b, C_OPEN, ctx);
        }
        Core::Plus(a, b) => {
            write_core(out, a, C_PLUS, ctx);
            out.push_str(" + ");
            write_core(out, b, C_ATOM, ctx);
        }
        Core::Sum(v, a) => {
            out.push_str(&format!("sum {v}. "));
            write_core(out, a, C_OPEN, ctx);
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn print_mso(m: &Mso, ctx: &Context) -> String {
    let mut s = String::new();
    write_mso(&mut s, m, P_QUANT, ctx);
    s
}

pub fn print_step(st: &Step, ctx: &Context) -> String {
    let mut s = String::new();
    write_step(&mut s, st, ctx);
    s
}

pub fn print_core(c: &Core, ctx: &Context) -> String {
    let mut s = String::new();
    write_core(&mut s, c, C_OPEN, ctx);
    s
}

pub fn print_formula(f: &Formula, ctx: &Context) -> String {
    match f {
        Formula::Mso(m) => print_mso(m, ctx),
        Formula::Step(s) => print_step(s, ctx),
        Formula::Core(c) => print_core(c, ctx),
    }
}
