//! Normal forms for core formulas.
//!
//! `normalize_plus` pushes sums of products under the conditionals
//! (C1–C3, C10). `normalize_second` flattens a formula into guarded summands
//! Σ_V⃗ (g ? Π_x Ψ : 0) and merges them pairwise with a fresh set variable Z
//! selecting the side: ∀z.¬Z(z) picks the first summand, ∀z.Z(z) the second.

use thiserror::Error;

use super::Rule;
use crate::syntax::{uniquify, Core, Formula, FreshNames, Mso, Step, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("sum quantifiers are outside the (?,+) fragment")]
    HasSum,
}

/// A rewritten formula with the axioms applied along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub formula: Core,
    pub trace: Vec<Rule>,
}

/// N ::= φ?N:N | M | 0, M ::= Π_xΨ | M+M.
pub fn is_normal_plus(c: &Core) -> bool {
    fn m(c: &Core) -> bool {
        match c {
            Core::Prod(..) => true,
            Core::Plus(a, b) => m(a) && m(b),
            _ => false,
        }
    }
    match c {
        Core::Zero => true,
        Core::Cond(_, a, b) => is_normal_plus(a) && is_normal_plus(b),
        _ => m(c),
    }
}

fn cond_count(c: &Core) -> usize {
    match c {
        Core::Cond(_, a, b) => 1 + cond_count(a) + cond_count(b),
        Core::Plus(a, b) => cond_count(a) + cond_count(b),
        Core::Sum(_, a) => cond_count(a),
        _ => 0,
    }
}

pub fn normalize_plus(phi: &Core) -> Result<Normalized, NormalizeError> {
    if phi.has_sum() {
        return Err(NormalizeError::HasSum);
    }
    let mut trace = Vec::new();
    let formula = norm(phi, &mut trace);
    Ok(Normalized { formula, trace })
}

fn norm(c: &Core, trace: &mut Vec<Rule>) -> Core {
    match c {
        Core::Zero | Core::Prod(..) => c.clone(),
        Core::Cond(g, a, b) => Core::cond(g.clone(), norm(a, trace), norm(b, trace)),
        Core::Plus(a, b) => {
            let a = norm(a, trace);
            let b = norm(b, trace);
            merge(a, b, trace)
        }
        Core::Sum(..) => unreachable!("checked by the caller"),
    }
}

/// N1 + N2 for normal N1, N2.
fn merge(n1: Core, n2: Core, trace: &mut Vec<Rule>) -> Core {
    if n2 == Core::Zero {
        trace.push(Rule::C1);
        return n1;
    }
    if n1 == Core::Zero {
        trace.extend([Rule::C2, Rule::C1]);
        return n2;
    }
    let (h1, h2) = (cond_count(&n1), cond_count(&n2));
    match (n1, n2) {
        (Core::Cond(g1, a1, b1), Core::Cond(g2, a2, b2)) if h1 == h2 => {
            // (g1?A1:B1) + (g2?A2:B2): C10 on the left, then C2, C10, C2 in each branch.
            trace.extend([Rule::C10, Rule::C2, Rule::C10, Rule::C2, Rule::C2, Rule::C10, Rule::C2]);
            let top = merge((*a1).clone(), (*a2).clone(), trace);
            let top_else = merge((*a1).clone(), (*b2).clone(), trace);
            let bot = merge((*b1).clone(), (*a2).clone(), trace);
            let bot_else = merge((*b1).clone(), (*b2).clone(), trace);
            Core::cond(
                g1.clone(),
                Core::cond(g2.clone(), top, top_else),
                Core::cond(g2.clone(), bot, bot_else),
            )
        }
        (Core::Cond(g1, a1, b1), n2) if h1 >= h2 => {
            trace.push(Rule::C10);
            let a = merge((*a1).clone(), n2.clone(), trace);
            let b = merge((*b1).clone(), n2, trace);
            Core::cond(g1.clone(), a, b)
        }
        (n1, Core::Cond(g2, a2, b2)) => {
            trace.extend([Rule::C2, Rule::C10, Rule::C2, Rule::C2]);
            let a = merge(n1.clone(), (*a2).clone(), trace);
            let b = merge(n1, (*b2).clone(), trace);
            Core::cond(g2.clone(), a, b)
        }
        (n1, n2) => Core::plus(n1, n2),
    }
}

#[derive(Debug, Clone)]
struct Summand {
    fo: Vec<Var>,
    so: Vec<Var>,
    guard: Mso,
    x: Var,
    psi: Step,
}

impl Summand {
    fn to_core(&self) -> Core {
        let mut c = Core::cond(self.guard.clone(), Core::prod(self.x.clone(), self.psi.clone()), Core::Zero);
        for v in self.fo.iter().chain(&self.so).rev() {
            c = Core::sum(v.clone(), c);
        }
        c
    }

    fn rename(&mut self, from: &Var, to: &Var) {
        self.guard = self.guard.rename_free(from, to);
        self.psi = self.psi.rename_free(from, to);
    }
}

fn and(g: &Mso, phi: Mso) -> Mso {
    if *g == Mso::True {
        phi
    } else {
        g.clone().and(phi)
    }
}

/// Second normal form: Σ_V⃗ (φ ? Π_x Ψ : 0), or 0.
pub fn normalize_second(phi: &Core) -> Normalized {
    let phi = match uniquify(&Formula::Core(phi.clone())) {
        Formula::Core(c) => c,
        _ => unreachable!(),
    };
    let mut names = FreshNames::avoiding(&phi.vars());
    let mut trace = Vec::new();
    let mut parts = Vec::new();
    flatten(&phi, &Mso::True, &mut parts, &mut trace);
    let mut it = parts.into_iter();
    let formula = match it.next() {
        None => Core::Zero,
        Some(first) => it.fold(first, |acc, s| merge_sums(acc, s, &mut names, &mut trace)).to_core(),
    };
    Normalized { formula, trace }
}

fn flatten(c: &Core, guard: &Mso, out: &mut Vec<Summand>, trace: &mut Vec<Rule>) {
    match c {
        Core::Zero => {}
        Core::Prod(x, psi) => out.push(Summand { fo: vec![], so: vec![], guard: guard.clone(), x: x.clone(), psi: psi.clone() }),
        Core::Cond(g, a, b) => {
            trace.push(Rule::C10);
            flatten(a, &and(guard, g.clone()), out, trace);
            flatten(b, &and(guard, g.clone().not()), out, trace);
        }
        Core::Plus(a, b) => {
            flatten(a, guard, out, trace);
            flatten(b, guard, out, trace);
        }
        Core::Sum(v, body) => {
            // Binders are unique after uniquify, so v is not free in guard.
            trace.push(if v.is_first() { Rule::C15f } else { Rule::C15 });
            let start = out.len();
            flatten(body, guard, out, trace);
            if out.len() - start > 1 {
                trace.push(if v.is_first() { Rule::C14f } else { Rule::C14 });
            }
            for s in &mut out[start..] {
                if v.is_first() {
                    s.fo.insert(0, v.clone());
                } else {
                    s.so.insert(0, v.clone());
                }
            }
        }
    }
}

/// y is the first position / Y is empty: exactly one value satisfies it.
fn pin(v: &Var, names: &mut FreshNames) -> Mso {
    let z = names.fresh(&Var::first("z"));
    if v.is_first() {
        Mso::forall(z.clone(), Mso::Le(v.clone(), z))
    } else {
        Mso::forall(z.clone(), Mso::In(z.clone(), v.clone()).not())
    }
}

/// Makes the binder lists of two summands equal: shared positions are
/// renamed to the first summand's variables (C12), surplus variables are
/// pinned to a single value on the side lacking them (C16).
fn align(first: &mut [Var], second: &mut Vec<Var>, s1: &mut Summand, s2: &mut Summand, names: &mut FreshNames, trace: &mut Vec<Rule>) -> Vec<Var> {
    let mut common = first.to_vec();
    for (i, v) in second.iter().enumerate() {
        if i < first.len() {
            if v != &first[i] {
                s2.rename(v, &first[i]);
                trace.push(if v.is_first() { Rule::C12f } else { Rule::C12 });
            }
        } else {
            s1.guard = and(&s1.guard, pin(v, names));
            trace.push(if v.is_first() { Rule::C16f } else { Rule::C16 });
            common.push(v.clone());
        }
    }
    for v in first.iter().skip(second.len()) {
        s2.guard = and(&s2.guard, pin(v, names));
        trace.push(if v.is_first() { Rule::C16f } else { Rule::C16 });
    }
    second.clear();
    common
}

fn merge_sums(mut s1: Summand, mut s2: Summand, names: &mut FreshNames, trace: &mut Vec<Rule>) -> Summand {
    let (mut fo1, mut fo2) = (std::mem::take(&mut s1.fo), std::mem::take(&mut s2.fo));
    let fo = align(&mut fo1, &mut fo2, &mut s1, &mut s2, names, trace);
    let (mut so1, mut so2) = (std::mem::take(&mut s1.so), std::mem::take(&mut s2.so));
    let mut so = align(&mut so1, &mut so2, &mut s1, &mut s2, names, trace);

    let x = names.fresh(&Var::first("x"));
    let psi1 = s1.psi.rename_free(&s1.x, &x);
    let psi2 = s2.psi.rename_free(&s2.x, &x);
    if s1.x != x || s2.x != x {
        trace.push(Rule::C5);
    }

    let zset = names.fresh(&Var::second("Z"));
    let z = names.fresh(&Var::first("z"));
    let pick1 = Mso::forall(z.clone(), Mso::In(z.clone(), zset.clone()).not());
    let pick2 = Mso::forall(z.clone(), Mso::In(z, zset.clone()));
    let side1 = and(&s1.guard, pick1);
    let side2 = and(&s2.guard, pick2);
    trace.extend([Rule::C16, Rule::C13, Rule::C15, Rule::C14, Rule::C10]);
    so.insert(0, zset);
    Summand {
        fo,
        so,
        guard: side1.clone().or(side2),
        x,
        psi: Step::cond(side1, psi1, psi2),
    }
}
