//! Derivations over the equational axiom systems for step- and core-wMSO,
//! their checker, proof synthesis for the step layer, normal forms, and
//! semantic decision procedures.

mod check;
pub mod corpus;
mod decide;
mod normal;
mod sexpr;
mod synth;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigUint;

use crate::syntax::{
    alpha_canonical_core, alpha_canonical_mso, alpha_canonical_step, print_core, print_mso, print_step, Context,
    Core, Formula, Layer, Mso, Step, Var,
};

pub use check::{check_proof, unique_exists, CheckConfig, Reason, Rejection};
pub use decide::{
    decide_equality, equational_sat_bounded, DecideError, r_sat_step, step_equational_sat, weighted_model_check, BoundedSat,
    ModelValue,
};
pub use normal::{is_normal_plus, normalize_plus, normalize_second, NormalizeError, Normalized};
pub use sexpr::{parse_judgement, parse_proof, print_proof, ProofParseError};
pub use synth::{deduction, explosion, item2, item3, item8, synth_step_proof};

/// One side of a judgement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Step(Step),
    Core(Core),
}

impl Term {
    pub fn layer(&self) -> Layer {
        match self {
            Term::Step(_) => Layer::Step,
            Term::Core(_) => Layer::Core,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            Term::Step(s) => s.free_vars(),
            Term::Core(c) => c.free_vars(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        match self {
            Term::Step(s) => s.vars(),
            Term::Core(c) => c.vars(),
        }
    }

    pub fn canonical(&self) -> Term {
        match self {
            Term::Step(s) => Term::Step(alpha_canonical_step(s)),
            Term::Core(c) => Term::Core(alpha_canonical_core(c)),
        }
    }

    /// Equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        self.canonical() == other.canonical()
    }

    /// φ ? a : b in the layer of the operands.
    pub fn cond(phi: Mso, a: Term, b: Term) -> Term {
        match (a, b) {
            (Term::Step(a), Term::Step(b)) => Term::Step(Step::cond(phi, a, b)),
            (Term::Core(a), Term::Core(b)) => Term::Core(Core::cond(phi, a, b)),
            _ => panic!("conditional over mixed layers"),
        }
    }

    /// Splits a conditional into guard and branches.
    pub fn as_cond(&self) -> Option<(&Mso, Term, Term)> {
        match self {
            Term::Step(Step::Cond(g, a, b)) => Some((g, Term::Step((**a).clone()), Term::Step((**b).clone()))),
            Term::Core(Core::Cond(g, a, b)) => Some((g, Term::Core((**a).clone()), Term::Core((**b).clone()))),
            _ => None,
        }
    }

    pub fn print(&self, ctx: &Context) -> String {
        match self {
            Term::Step(s) => print_step(s, ctx),
            Term::Core(c) => print_core(c, ctx),
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Term::Step(s) => Formula::Step(s.clone()),
            Term::Core(c) => Formula::Core(c.clone()),
        }
    }
}

impl From<Step> for Term {
    fn from(s: Step) -> Term {
        Term::Step(s)
    }
}

impl From<Core> for Term {
    fn from(c: Core) -> Term {
        Term::Core(c)
    }
}

/// Γ ⊢ lhs ≈ rhs. Γ is a set; the vector keeps the written order for
/// printing, comparisons go through [`Judgement::gamma_set`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgement {
    pub gamma: Vec<Mso>,
    pub lhs: Term,
    pub rhs: Term,
}

impl Judgement {
    pub fn new(gamma: Vec<Mso>, lhs: impl Into<Term>, rhs: impl Into<Term>) -> Judgement {
        Judgement { gamma: dedup_gamma(gamma), lhs: lhs.into(), rhs: rhs.into() }
    }

    pub fn layer(&self) -> Option<Layer> {
        let l = self.lhs.layer();
        (l == self.rhs.layer()).then_some(l)
    }

    pub fn gamma_set(&self) -> HashSet<Mso> {
        gamma_set(&self.gamma)
    }

    pub fn gamma_free_vars(&self) -> BTreeSet<Var> {
        self.gamma.iter().flat_map(|g| g.free_vars()).collect()
    }

    pub fn print(&self, ctx: &Context) -> String {
        let g: Vec<String> = self.gamma.iter().map(|g| print_mso(g, ctx)).collect();
        let head = if g.is_empty() { "|-".to_string() } else { format!("{} |-", g.join("; ")) };
        format!("{head} {} ~~ {}", self.lhs.print(ctx), self.rhs.print(ctx))
    }
}

pub(crate) fn gamma_set(gamma: &[Mso]) -> HashSet<Mso> {
    gamma.iter().map(alpha_canonical_mso).collect()
}

/// Drops repeated members (up to alpha-equivalence), keeping first positions.
pub(crate) fn dedup_gamma(gamma: Vec<Mso>) -> Vec<Mso> {
    let mut seen = HashSet::new();
    gamma.into_iter().filter(|g| seen.insert(alpha_canonical_mso(g))).collect()
}

/// Γ ∪ {φ}.
pub fn extend(gamma: &[Mso], phi: &Mso) -> Vec<Mso> {
    let mut g = gamma.to_vec();
    g.push(phi.clone());
    dedup_gamma(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Ref,
    Sym,
    Trans,
    CongCond,
    CongPlus,
    S1,
    S2,
    S3,
    S4,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
    C13,
    C14,
    C15,
    C16,
    C17,
    C11f,
    C12f,
    C13f,
    C14f,
    C15f,
    C16f,
}

impl Rule {
    pub const ALL: [Rule; 32] = [
        Rule::Ref,
        Rule::Sym,
        Rule::Trans,
        Rule::CongCond,
        Rule::CongPlus,
        Rule::S1,
        Rule::S2,
        Rule::S3,
        Rule::S4,
        Rule::C1,
        Rule::C2,
        Rule::C3,
        Rule::C4,
        Rule::C5,
        Rule::C6,
        Rule::C7,
        Rule::C8,
        Rule::C9,
        Rule::C10,
        Rule::C11,
        Rule::C12,
        Rule::C13,
        Rule::C14,
        Rule::C15,
        Rule::C16,
        Rule::C17,
        Rule::C11f,
        Rule::C12f,
        Rule::C13f,
        Rule::C14f,
        Rule::C15f,
        Rule::C16f,
    ];

    pub fn name(self) -> &'static str {
        use Rule::*;
        match self {
            Ref => "ref",
            Sym => "sym",
            Trans => "trans",
            CongCond => "cong?",
            CongPlus => "cong+",
            S1 => "S1",
            S2 => "S2",
            S3 => "S3",
            S4 => "S4",
            C1 => "C1",
            C2 => "C2",
            C3 => "C3",
            C4 => "C4",
            C5 => "C5",
            C6 => "C6",
            C7 => "C7",
            C8 => "C8",
            C9 => "C9",
            C10 => "C10",
            C11 => "C11",
            C12 => "C12",
            C13 => "C13",
            C14 => "C14",
            C15 => "C15",
            C16 => "C16",
            C17 => "C17",
            C11f => "C11f",
            C12f => "C12f",
            C13f => "C13f",
            C14f => "C14f",
            C15f => "C15f",
            C16f => "C16f",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.iter().copied().find(|r| r.name() == s)
    }

    pub fn arity(self) -> usize {
        use Rule::*;
        match self {
            Trans | CongCond | CongPlus | S4 | C9 => 2,
            Sym | S1 | C4 | C6 | C11 | C11f => 1,
            _ => 0,
        }
    }

    /// The layer of the conclusion, when the rule fixes one.
    pub fn layer(self) -> Option<Layer> {
        use Rule::*;
        match self {
            Ref | Sym | Trans | CongCond => None,
            S1 | S2 | S3 | S4 => Some(Layer::Step),
            _ => Some(Layer::Core),
        }
    }

    /// Conditional rules in the given layer: (weakening, negation, elimination, split).
    pub fn conditional_rules(layer: Layer) -> (Rule, Rule, Rule, Rule) {
        match layer {
            Layer::Step => (Rule::S1, Rule::S2, Rule::S3, Rule::S4),
            _ => (Rule::C6, Rule::C7, Rule::C8, Rule::C9),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub rule: Rule,
    /// Pivot formula of the conditional rules and of C16.
    pub phi: Option<Mso>,
    /// Variable named by the renaming and binder rules, checked when given.
    pub var: Option<Var>,
    /// The integer l of C17.
    pub l: Option<BigUint>,
    pub premises: Vec<ProofTree>,
    pub concl: Judgement,
}

impl ProofTree {
    pub fn new(rule: Rule, premises: Vec<ProofTree>, concl: Judgement) -> ProofTree {
        ProofTree { rule, phi: None, var: None, l: None, premises, concl }
    }

    pub fn with_phi(mut self, phi: Mso) -> ProofTree {
        self.phi = Some(phi);
        self
    }

    pub fn with_var(mut self, v: Var) -> ProofTree {
        self.var = Some(v);
        self
    }

    pub fn with_l(mut self, l: BigUint) -> ProofTree {
        self.l = Some(l);
        self
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::depth).max().unwrap_or(0)
    }

    /// Rules used anywhere in the tree.
    pub fn rules(&self) -> BTreeSet<Rule> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.insert(t.rule);
            stack.extend(t.premises.iter());
        }
        out
    }

    /// The node at `path` (child indices from the root).
    pub fn at(&self, path: &[usize]) -> Option<&ProofTree> {
        path.iter().try_fold(self, |t, &i| t.premises.get(i))
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut ProofTree> {
        path.iter().try_fold(self, |t, &i| t.premises.get_mut(i))
    }
}

// Small constructors shared by the tactics and the corpus.

pub(crate) fn refl(gamma: &[Mso], t: &Term) -> ProofTree {
    ProofTree::new(Rule::Ref, vec![], Judgement::new(gamma.to_vec(), t.clone(), t.clone()))
}

pub(crate) fn sym(p: ProofTree) -> ProofTree {
    let j = Judgement { gamma: p.concl.gamma.clone(), lhs: p.concl.rhs.clone(), rhs: p.concl.lhs.clone() };
    ProofTree::new(Rule::Sym, vec![p], j)
}

pub(crate) fn trans(p: ProofTree, q: ProofTree) -> ProofTree {
    let j = Judgement { gamma: p.concl.gamma.clone(), lhs: p.concl.lhs.clone(), rhs: q.concl.rhs.clone() };
    ProofTree::new(Rule::Trans, vec![p, q], j)
}
