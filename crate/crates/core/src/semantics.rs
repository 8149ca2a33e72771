//! Reference evaluator on pointed words, multisets of weight strings and
//! aggregation into semirings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::syntax::{Context, Core, Formula, Letter, Mso, Order, Step, Var, Weight};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("free variable '{0}' is not covered by the valuation")]
    Uncovered(Var),
    #[error("second-order evaluation supports words of length at most 64 (got {0})")]
    WordTooLong(usize),
    #[error("weight strings of different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("weight '{0}' has no interpretation in the aggregation scheme")]
    Uninterpreted(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct WordParseError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Pos(usize),
    Set(BTreeSet<usize>),
}

/// A nonempty word with a valuation; positions are 1-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointedWord {
    pub word: Vec<Letter>,
    pub valuation: BTreeMap<Var, Value>,
}

impl PointedWord {
    pub fn new(word: Vec<Letter>) -> PointedWord {
        assert!(!word.is_empty(), "pointed words are nonempty");
        PointedWord { word, valuation: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_pos(mut self, x: &Var, i: usize) -> PointedWord {
        assert!(x.is_first() && (1..=self.word.len()).contains(&i));
        self.valuation.insert(x.clone(), Value::Pos(i));
        self
    }

    pub fn with_set(mut self, x: &Var, set: impl IntoIterator<Item = usize>) -> PointedWord {
        let set: BTreeSet<usize> = set.into_iter().collect();
        assert!(!x.is_first() && set.iter().all(|i| (1..=self.word.len()).contains(i)));
        self.valuation.insert(x.clone(), Value::Set(set));
        self
    }

    /// Reads `word=abaa; x=3; y=4; X={1,4}`.
    pub fn parse(text: &str, ctx: &Context) -> Result<PointedWord, WordParseError> {
        let err = |m: String| WordParseError(m);
        let mut word = None;
        let mut valuation = BTreeMap::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'name=value', found '{part}'")))?;
            let (key, val) = (key.trim(), val.trim());
            if key == "word" {
                word = Some(parse_word(val, ctx).map_err(err)?);
                continue;
            }
            let var = Var::from_name(key).ok_or_else(|| err(format!("invalid variable '{key}'")))?;
            let value = match var.order() {
                Order::First => Value::Pos(
                    val.parse().map_err(|_| err(format!("invalid position '{val}' for '{key}'")))?,
                ),
                Order::Second => {
                    let inner = val
                        .strip_prefix('{')
                        .and_then(|v| v.strip_suffix('}'))
                        .ok_or_else(|| err(format!("expected a set in braces for '{key}'")))?;
                    let mut set = BTreeSet::new();
                    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        set.insert(item.parse().map_err(|_| err(format!("invalid position '{item}'")))?);
                    }
                    Value::Set(set)
                }
            };
            valuation.insert(var, value);
        }
        let word: Vec<Letter> = word.ok_or_else(|| err("missing 'word='".to_string()))?;
        if word.is_empty() {
            return Err(err("the word must be nonempty".to_string()));
        }
        let n = word.len();
        for (v, val) in &valuation {
            let ok = match val {
                Value::Pos(i) => (1..=n).contains(i),
                Value::Set(s) => s.iter().all(|i| (1..=n).contains(i)),
            };
            if !ok {
                return Err(err(format!("position of '{v}' outside 1..{n}")));
            }
        }
        Ok(PointedWord { word, valuation })
    }

    pub fn display(&self, ctx: &Context) -> String {
        let mut s = format!("word={}", format_word(&self.word, ctx));
        for (v, val) in &self.valuation {
            match val {
                Value::Pos(i) => s.push_str(&format!("; {v}={i}")),
                Value::Set(set) => {
                    let items: Vec<String> = set.iter().map(usize::to_string).collect();
                    s.push_str(&format!("; {v}={{{}}}", items.join(",")));
                }
            }
        }
        s
    }
}

/// Splits a word into letters: on spaces or commas when present, otherwise by
/// greedy longest match against the alphabet.
pub fn parse_word(text: &str, ctx: &Context) -> Result<Vec<Letter>, String> {
    let text = text.trim();
    if text.contains([' ', ',']) {
        return text
            .split([' ', ','])
            .filter(|s| !s.is_empty())
            .map(|s| ctx.letter(s).ok_or_else(|| format!("unknown letter '{s}'")))
            .collect();
    }
    let mut out = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let best = ctx
            .alphabet
            .names()
            .iter()
            .filter(|l| rest.starts_with(l.as_str()))
            .max_by_key(|l| l.len())
            .ok_or_else(|| format!("unknown letter at '{rest}'"))?;
        out.push(ctx.letter(best).unwrap());
        rest = &rest[best.len()..];
    }
    Ok(out)
}

pub fn format_word(word: &[Letter], ctx: &Context) -> String {
    let names: Vec<&str> = word.iter().map(|a| ctx.alphabet.name(*a)).collect();
    if names.iter().all(|n| n.chars().count() == 1) {
        names.concat()
    } else {
        names.join(" ")
    }
}

// ---------------------------------------------------------------------------
// Multisets

/// A finite multiset of equal-length weight strings with exact counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct WeightMultiset {
    entries: BTreeMap<Vec<Weight>, BigUint>,
}

impl WeightMultiset {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(s: Vec<Weight>) -> Self {
        let mut m = Self::empty();
        m.entries.insert(s, BigUint::one());
        m
    }

    pub fn from_counts(items: impl IntoIterator<Item = (Vec<Weight>, BigUint)>) -> Result<Self, EvalError> {
        let mut m = Self::empty();
        for (s, c) in items {
            m.add(s, c)?;
        }
        Ok(m)
    }

    /// Common string length, `None` when empty.
    pub fn string_len(&self) -> Option<usize> {
        self.entries.keys().next().map(Vec::len)
    }

    pub fn add(&mut self, s: Vec<Weight>, count: BigUint) -> Result<(), EvalError> {
        if count.is_zero() {
            return Ok(());
        }
        if let Some(n) = self.string_len() {
            if n != s.len() {
                return Err(EvalError::LengthMismatch(n, s.len()));
            }
        }
        *self.entries.entry(s).or_default() += count;
        Ok(())
    }

    pub fn union(&self, other: &WeightMultiset) -> Result<WeightMultiset, EvalError> {
        let mut out = self.clone();
        out.union_in_place(other)?;
        Ok(out)
    }

    pub fn union_in_place(&mut self, other: &WeightMultiset) -> Result<(), EvalError> {
        if let (Some(a), Some(b)) = (self.string_len(), other.string_len()) {
            if a != b {
                return Err(EvalError::LengthMismatch(a, b));
            }
        }
        for (s, c) in &other.entries {
            *self.entries.entry(s.clone()).or_default() += c;
        }
        Ok(())
    }

    pub fn count(&self, s: &[Weight]) -> BigUint {
        self.entries.get(s).cloned().unwrap_or_default()
    }

    /// Total multiplicity.
    pub fn total(&self) -> BigUint {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct strings.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Weight>, &BigUint)> {
        self.entries.iter()
    }

    pub fn key(s: &[Weight], ctx: &Context) -> String {
        let parts: Vec<&str> = s.iter().map(|r| ctx.weights.name(*r)).collect();
        parts.join(".")
    }

    /// Canonical JSON: keys in canonical order, counts as decimal numbers.
    pub fn to_json(&self, ctx: &Context) -> String {
        let items: Vec<String> = self
            .entries
            .iter()
            .map(|(s, c)| format!("{}:{}", serde_json::to_string(&Self::key(s, ctx)).unwrap(), c))
            .collect();
        format!("{{{}}}", items.join(","))
    }

    pub fn from_json(text: &str, ctx: &Context) -> Result<WeightMultiset, String> {
        let map: BTreeMap<String, serde_json::Number> =
            serde_json::from_str(text).map_err(|e| format!("malformed multiset: {e}"))?;
        let mut m = WeightMultiset::empty();
        for (k, n) in map {
            let s = k
                .split('.')
                .map(|w| ctx.weight(w).ok_or_else(|| format!("unknown weight '{w}'")))
                .collect::<Result<Vec<_>, _>>()?;
            let c: BigUint = n.to_string().parse().map_err(|_| format!("invalid count '{n}'"))?;
            m.add(s, c).map_err(|e| e.to_string())?;
        }
        Ok(m)
    }

    /// Readable form such as `{{1000, 0000 : 2}}` for single-character weights.
    pub fn display(&self, ctx: &Context) -> String {
        let single = ctx.weights.names().iter().all(|w| w.chars().count() == 1);
        let items: Vec<String> = self
            .entries
            .iter()
            .map(|(s, c)| {
                let key = if single {
                    s.iter().map(|r| ctx.weights.name(*r)).collect::<String>()
                } else {
                    Self::key(s, ctx)
                };
                if c.is_one() {
                    key
                } else {
                    format!("{key} : {c}")
                }
            })
            .collect();
        format!("{{{{{}}}}}", items.join(", "))
    }
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Pos(u32),
    Set(u64),
}

/// Evaluation environment: the word plus a stack of bindings searched from
/// the top, so inner binders shadow outer ones.
struct Env<'a> {
    word: &'a [Letter],
    binds: Vec<(Var, Val)>,
}

impl<'a> Env<'a> {
    fn from_pointed(pw: &'a PointedWord, needed: &BTreeSet<Var>) -> Result<Env<'a>, EvalError> {
        let mut binds = Vec::with_capacity(needed.len());
        for v in needed {
            let val = match pw.valuation.get(v) {
                Some(Value::Pos(i)) => Val::Pos(*i as u32),
                Some(Value::Set(s)) => {
                    if pw.word.len() > 64 {
                        return Err(EvalError::WordTooLong(pw.word.len()));
                    }
                    Val::Set(s.iter().fold(0u64, |m, i| m | (1 << (i - 1))))
                }
                None => return Err(EvalError::Uncovered(v.clone())),
            };
            binds.push((v.clone(), val));
        }
        Ok(Env { word: &pw.word, binds })
    }

    fn get(&self, v: &Var) -> Val {
        self.binds
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, val)| *val)
            .expect("free variables are bound before evaluation")
    }

    fn pos(&self, v: &Var) -> u32 {
        match self.get(v) {
            Val::Pos(i) => i,
            Val::Set(_) => unreachable!("order tags keep positions and sets apart"),
        }
    }

    fn set(&self, v: &Var) -> u64 {
        match self.get(v) {
            Val::Set(s) => s,
            Val::Pos(_) => unreachable!("order tags keep positions and sets apart"),
        }
    }

    fn n(&self) -> u32 {
        self.word.len() as u32
    }

    fn check_sets(&self) -> Result<(), EvalError> {
        if self.word.len() > 64 {
            Err(EvalError::WordTooLong(self.word.len()))
        } else {
            Ok(())
        }
    }
}

fn holds(m: &Mso, env: &mut Env) -> bool {
    match m {
        Mso::True => true,
        Mso::Letter(a, x) => env.word[env.pos(x) as usize - 1] == *a,
        Mso::Le(x, y) => env.pos(x) <= env.pos(y),
        Mso::In(x, set) => env.set(set) >> (env.pos(x) - 1) & 1 == 1,
        Mso::Not(a) => !holds(a, env),
        Mso::And(a, b) => holds(a, env) && holds(b, env),
        Mso::Forall(v, body) => {
            let n = env.n();
            let mut all = true;
            match v.order() {
                Order::First => {
                    for i in 1..=n {
                        env.binds.push((v.clone(), Val::Pos(i)));
                        let ok = holds(body, env);
                        env.binds.pop();
                        if !ok {
                            all = false;
                            break;
                        }
                    }
                }
                Order::Second => {
                    for s in 0..(1u128 << n) {
                        env.binds.push((v.clone(), Val::Set(s as u64)));
                        let ok = holds(body, env);
                        env.binds.pop();
                        if !ok {
                            all = false;
                            break;
                        }
                    }
                }
            }
            all
        }
    }
}

fn step_value(s: &Step, env: &mut Env) -> Weight {
    match s {
        Step::Weight(r) => *r,
        Step::Cond(phi, a, b) => {
            if holds(phi, env) {
                step_value(a, env)
            } else {
                step_value(b, env)
            }
        }
    }
}

fn core_value(c: &Core, env: &mut Env) -> WeightMultiset {
    match c {
        Core::Zero => WeightMultiset::empty(),
        Core::Prod(x, psi) => {
            let mut s = Vec::with_capacity(env.word.len());
            for i in 1..=env.n() {
                env.binds.push((x.clone(), Val::Pos(i)));
                s.push(step_value(psi, env));
                env.binds.pop();
            }
            WeightMultiset::singleton(s)
        }
        Core::Cond(phi, a, b) => {
            if holds(phi, env) {
                core_value(a, env)
            } else {
                core_value(b, env)
            }
        }
        Core::Plus(a, b) => {
            let mut m = core_value(a, env);
            m.union_in_place(&core_value(b, env)).expect("uniform length");
            m
        }
        Core::Sum(v, body) => {
            let mut m = WeightMultiset::empty();
            let vals: Vec<Val> = match v.order() {
                Order::First => (1..=env.n()).map(Val::Pos).collect(),
                Order::Second => (0..(1u128 << env.n())).map(|s| Val::Set(s as u64)).collect(),
            };
            for val in vals {
                env.binds.push((v.clone(), val));
                let part = core_value(body, env);
                env.binds.pop();
                m.union_in_place(&part).expect("uniform length");
            }
            m
        }
    }
}

fn needs_sets(vars: &BTreeSet<Var>) -> bool {
    vars.iter().any(|v| !v.is_first())
}

pub fn mso_holds(phi: &Mso, pw: &PointedWord) -> Result<bool, EvalError> {
    let mut env = Env::from_pointed(pw, &phi.free_vars())?;
    if needs_sets(&phi.vars()) {
        env.check_sets()?;
    }
    Ok(holds(phi, &mut env))
}

pub fn eval_step(psi: &Step, pw: &PointedWord) -> Result<Weight, EvalError> {
    let mut env = Env::from_pointed(pw, &psi.free_vars())?;
    if needs_sets(&psi.vars()) {
        env.check_sets()?;
    }
    Ok(step_value(psi, &mut env))
}

pub fn eval_core(phi: &Core, pw: &PointedWord) -> Result<WeightMultiset, EvalError> {
    let mut env = Env::from_pointed(pw, &phi.free_vars())?;
    if needs_sets(&phi.vars()) {
        env.check_sets()?;
    }
    Ok(core_value(phi, &mut env))
}

/// The value of a formula of any layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemValue {
    Bool(bool),
    Weight(Weight),
    Multiset(WeightMultiset),
}

impl SemValue {
    pub fn display(&self, ctx: &Context) -> String {
        match self {
            SemValue::Bool(b) => b.to_string(),
            SemValue::Weight(r) => ctx.weights.name(*r).to_string(),
            SemValue::Multiset(m) => m.to_json(ctx),
        }
    }
}

pub fn eval(f: &Formula, pw: &PointedWord) -> Result<SemValue, EvalError> {
    Ok(match f {
        Formula::Mso(m) => SemValue::Bool(mso_holds(m, pw)?),
        Formula::Step(s) => SemValue::Weight(eval_step(s, pw)?),
        Formula::Core(c) => SemValue::Multiset(eval_core(c, pw)?),
    })
}

pub fn multiset_union(m1: &WeightMultiset, m2: &WeightMultiset) -> Result<WeightMultiset, EvalError> {
    m1.union(m2)
}

// ---------------------------------------------------------------------------
// Enumeration of pointed words

/// All pointed words of length 1..=max_len over `n_letters` letters with every
/// valuation of `vars`, in canonical order: by length, then word
/// (lexicographic in letter order), then valuation (variables in the given
/// order, positions ascending, sets by bitmask ascending).
pub fn pointed_words(n_letters: usize, vars: &[Var], max_len: usize) -> impl Iterator<Item = PointedWord> + '_ {
    (1..=max_len).flat_map(move |n| {
        words_of_len(n_letters, n).flat_map(move |w| valuations(vars, n).map(move |val| {
            let mut pw = PointedWord::new(w.clone());
            for (v, x) in vars.iter().zip(val) {
                pw.valuation.insert(v.clone(), x);
            }
            pw
        }))
    })
}

pub fn words_of_len(n_letters: usize, n: usize) -> impl Iterator<Item = Vec<Letter>> {
    let total = (n_letters as u64).pow(n as u32);
    (0..total).map(move |mut k| {
        let mut w = vec![Letter(0); n];
        for i in (0..n).rev() {
            w[i] = Letter((k % n_letters as u64) as u16);
            k /= n_letters as u64;
        }
        w
    })
}

fn valuations(vars: &[Var], n: usize) -> impl Iterator<Item = Vec<Value>> {
    let radices: Vec<u64> = vars
        .iter()
        .map(|v| if v.is_first() { n as u64 } else { 1u64 << n })
        .collect();
    let total: u64 = radices.iter().product();
    let vars: Vec<Var> = vars.to_vec();
    (0..total).map(move |mut k| {
        let mut digits = vec![0u64; radices.len()];
        for i in (0..radices.len()).rev() {
            digits[i] = k % radices[i];
            k /= radices[i];
        }
        vars.iter()
            .zip(digits)
            .map(|(v, d)| {
                if v.is_first() {
                    Value::Pos(d as usize + 1)
                } else {
                    Value::Set((0..n).filter(|i| d >> i & 1 == 1).map(|i| i + 1).collect())
                }
            })
            .collect()
    })
}

/// Bounded Γ-equivalence: the first pointed word of length ≤ `max_len` that
/// satisfies Γ and separates the two formulas, or `None`.
pub fn gamma_equiv_bounded(
    ctx: &Context,
    gamma: &[Mso],
    f1: &Formula,
    f2: &Formula,
    max_len: usize,
) -> Result<Option<PointedWord>, EvalError> {
    let mut vars: BTreeSet<Var> = f1.free_vars();
    vars.extend(f2.free_vars());
    for g in gamma {
        vars.extend(g.free_vars());
    }
    let vars: Vec<Var> = vars.into_iter().collect();
    let sets = needs_sets(&f1.vars()) || needs_sets(&f2.vars()) || gamma.iter().any(|g| needs_sets(&g.vars()));
    // One environment per length, rebound in place: the same enumeration
    // order as `pointed_words` without building a valuation map per word.
    for n in 1..=max_len {
        if sets && n > 64 {
            return Err(EvalError::WordTooLong(n));
        }
        let radices: Vec<u64> = vars.iter().map(|v| if v.is_first() { n as u64 } else { 1u64 << n }).collect();
        let total: u64 = radices.iter().product();
        for w in words_of_len(ctx.alphabet.len(), n) {
            let mut env = Env { word: &w, binds: vars.iter().map(|v| (v.clone(), Val::Pos(1))).collect() };
            for mut k in 0..total {
                for i in (0..radices.len()).rev() {
                    let d = k % radices[i];
                    k /= radices[i];
                    env.binds[i].1 = if vars[i].is_first() { Val::Pos(d as u32 + 1) } else { Val::Set(d) };
                }
                if !gamma.iter().all(|g| holds(g, &mut env)) {
                    continue;
                }
                if value(f1, &mut env) != value(f2, &mut env) {
                    let mut pw = PointedWord::new(w.clone());
                    for (v, val) in &env.binds {
                        let x = match *val {
                            Val::Pos(i) => Value::Pos(i as usize),
                            Val::Set(m) => Value::Set((0..n).filter(|i| m >> i & 1 == 1).map(|i| i + 1).collect()),
                        };
                        pw.valuation.insert(v.clone(), x);
                    }
                    return Ok(Some(pw));
                }
            }
        }
    }
    Ok(None)
}

fn value(f: &Formula, env: &mut Env) -> SemValue {
    match f {
        Formula::Mso(m) => SemValue::Bool(holds(m, env)),
        Formula::Step(s) => SemValue::Weight(step_value(s, env)),
        Formula::Core(c) => SemValue::Multiset(core_value(c, env)),
    }
}

// ---------------------------------------------------------------------------
// Aggregation

pub trait Semiring: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
}

/// (ℕ ∪ {−∞}, max, +, −∞, 0); `None` is −∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MaxPlus(pub Option<i64>);

impl Semiring for MaxPlus {
    fn zero() -> Self {
        MaxPlus(None)
    }

    fn one() -> Self {
        MaxPlus(Some(0))
    }

    fn plus(&self, other: &Self) -> Self {
        MaxPlus(self.0.max(other.0))
    }

    fn times(&self, other: &Self) -> Self {
        match (self.0, other.0) {
            (Some(a), Some(b)) => MaxPlus(Some(a + b)),
            _ => MaxPlus(None),
        }
    }
}

impl fmt::Display for MaxPlus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("-inf"),
        }
    }
}

/// The natural-number semiring (ℕ, +, ·, 0, 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Counting(pub BigUint);

impl Semiring for Counting {
    fn zero() -> Self {
        Counting(BigUint::zero())
    }

    fn one() -> Self {
        Counting(BigUint::one())
    }

    fn plus(&self, other: &Self) -> Self {
        Counting(&self.0 + &other.0)
    }

    fn times(&self, other: &Self) -> Self {
        Counting(&self.0 * &other.0)
    }
}

impl fmt::Display for Counting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct AggregationScheme<S: Semiring> {
    pub name: String,
    interp: Vec<Option<S>>,
    weight_names: Vec<String>,
}

impl<S: Semiring> AggregationScheme<S> {
    pub fn new(name: &str, ctx: &Context, interp: impl Fn(&str) -> Option<S>) -> Self {
        let names = ctx.weights.names().to_vec();
        AggregationScheme {
            name: name.to_string(),
            interp: names.iter().map(|n| interp(n)).collect(),
            weight_names: names,
        }
    }

    pub fn interp(&self, r: Weight) -> Result<&S, EvalError> {
        self.interp[r.0 as usize]
            .as_ref()
            .ok_or_else(|| EvalError::Uninterpreted(self.weight_names[r.0 as usize].clone()))
    }
}

impl AggregationScheme<MaxPlus> {
    /// Max-plus with every integer-named weight read as its value.
    pub fn max_plus(ctx: &Context) -> Self {
        AggregationScheme::new("maxplus", ctx, |n| n.parse().ok().map(|v| MaxPlus(Some(v))))
    }
}

impl AggregationScheme<Counting> {
    /// Every weight read as 1, so aggregation counts strings.
    pub fn counting(ctx: &Context) -> Self {
        AggregationScheme::new("count", ctx, |_| Some(Counting(BigUint::one())))
    }
}

/// x ⊕ x ⊕ … ⊕ x (n times) by doubling; the zero for n = 0.
fn scale<S: Semiring>(x: &S, n: &BigUint) -> S {
    let mut acc = S::zero();
    for i in (0..n.bits()).rev() {
        acc = acc.plus(&acc);
        if n.bit(i) {
            acc = acc.plus(x);
        }
    }
    acc
}

pub fn aggregate<S: Semiring>(m: &WeightMultiset, scheme: &AggregationScheme<S>) -> Result<S, EvalError> {
    let mut acc = S::zero();
    for (s, c) in m.iter() {
        let mut prod = S::one();
        for r in s {
            prod = prod.times(scheme.interp(*r)?);
        }
        acc = acc.plus(&scale(&prod, c));
    }
    Ok(acc)
}
