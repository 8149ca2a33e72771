//! Hand-built derivations of the nine derived step-layer theorems, and
//! systematic mutations of them. Used by the tests and the demo files.

use super::synth::{explosion, item2, item3, item8};
use super::{extend, refl, sym, trans, Judgement, ProofTree, Rule, Term};
use crate::syntax::{parse_mso, parse_step, Context, Mso, Step};

/// Letters a, b; weights 0, 1, 2.
pub fn context() -> Context {
    Context::new(["a", "b"], ["0", "1", "2"], "0").expect("static context")
}

fn m(ctx: &Context, s: &str) -> Mso {
    parse_mso(s, ctx).expect("corpus formula")
}

fn t(ctx: &Context, s: &str) -> Term {
    Term::Step(parse_step(s, ctx).expect("corpus formula"))
}

fn s3(gamma: &[Mso], phi: &Mso, a: &Term, b: &Term) -> ProofTree {
    let j = Judgement::new(gamma.to_vec(), Term::cond(phi.clone(), a.clone(), b.clone()), a.clone());
    ProofTree::new(Rule::S3, vec![], j).with_phi(phi.clone())
}

fn s4(gamma: &[Mso], phi: &Mso, p: ProofTree, q: ProofTree) -> ProofTree {
    let lhs = Term::cond(phi.clone(), p.concl.lhs.clone(), q.concl.lhs.clone());
    let j = Judgement::new(gamma.to_vec(), lhs, p.concl.rhs.clone());
    ProofTree::new(Rule::S4, vec![p, q], j).with_phi(phi.clone())
}

/// Γ ⊢ φ ? a : b ≈ b from Γ ⊨ ¬φ: S2 turns the conditional around, S3 on ¬φ.
fn item6_tree(gamma: &[Mso], phi: &Mso, a: &Term, b: &Term) -> ProofTree {
    let nphi = phi.clone().not();
    let flip = Term::cond(nphi.clone(), b.clone(), a.clone());
    let s2 = ProofTree::new(Rule::S2, vec![], Judgement::new(gamma.to_vec(), flip, Term::cond(phi.clone(), a.clone(), b.clone())))
        .with_phi(phi.clone());
    trans(sym(s2), s3(gamma, &nphi, b, a))
}

/// From the four case proofs, Γ ⊢ φ1 ? a1 : a2 ≈ φ2 ? b1 : b2.
///
/// `p11`: Γ∪{φ1,φ2} ⊢ a1 ≈ b1, `p12`: Γ∪{φ1,¬φ2} ⊢ a1 ≈ b2,
/// `p21`: Γ∪{¬φ1,φ2} ⊢ a2 ≈ b1, `p22`: Γ∪{¬φ1,¬φ2} ⊢ a2 ≈ b2.
fn item4_tree(gamma: &[Mso], phi1: &Mso, phi2: &Mso, p11: ProofTree, p12: ProofTree, p21: ProofTree, p22: ProofTree) -> ProofTree {
    let left = s4(&extend(gamma, phi1), phi2, sym(p11), sym(p12));
    let right = s4(&extend(gamma, &phi1.clone().not()), phi2, sym(p21), sym(p22));
    s4(gamma, phi1, sym(left), sym(right))
}

fn with(gamma: &[Mso], more: &[&Mso]) -> Vec<Mso> {
    more.iter().fold(gamma.to_vec(), |g, phi| extend(&g, phi))
}

/// The nine items, in order, with a short name each.
pub fn items(ctx: &Context) -> Vec<(String, ProofTree)> {
    let pa = m(ctx, "Pa(x)");
    let pb = m(ctx, "Pb(x)");
    let npa = pa.clone().not();
    let npb = pb.clone().not();
    let (zero, one, two) = (t(ctx, "0"), t(ctx, "1"), t(ctx, "2"));
    let mut out = Vec::new();

    // 1: an inconsistent Γ proves 1 ≈ 0.
    let g1 = vec![m(ctx, "exists y. Pa(y)"), m(ctx, "forall y. Pb(y)")];
    out.push(("item1_explosion", explosion(&g1, &m(ctx, "exists y. Pb(y)"), &one, &zero)));

    // 2: Γ ⊨ φ and Γ∪{φ} ⊢ Ψ1 ≈ Ψ2.
    let g2 = vec![m(ctx, "forall y. Pa(y)")];
    let phi2 = m(ctx, "exists y. Pa(y)");
    out.push(("item2_assumption", item2(&g2, &phi2, s3(&extend(&g2, &phi2), &phi2, &one, &two))));

    // 3: Γ ⊢ φ ? Ψ : Ψ ≈ Ψ.
    out.push(("item3_idempotent", item3(&[], &pa, &t(ctx, "Pb(y) ? 1 : 2"))));

    // 4: four case premises, two of them from inconsistent assumptions.
    let p11 = explosion(&with(&[], &[&pa, &pb]), &Mso::True, &one, &zero);
    let p12 = refl(&with(&[], &[&pa, &npb]), &one);
    let p21 = refl(&with(&[], &[&npa, &pb]), &zero);
    let p22 = explosion(&with(&[], &[&npa, &npb]), &Mso::True, &zero, &one);
    out.push(("item4_cases", item4_tree(&[], &pa, &pb, p11, p12, p21, p22)));

    // 5: Γ ⊨ φ1 ↔ φ2 (here Pa(x) ↔ ¬Pb(x) over {a, b}).
    let p11 = refl(&with(&[], &[&pa, &npb]), &one);
    let p12 = explosion(&with(&[], &[&pa, &npb.clone().not()]), &Mso::True, &one, &two);
    let p21 = explosion(&with(&[], &[&npa, &npb]), &Mso::True, &two, &one);
    let p22 = refl(&with(&[], &[&npa, &npb.clone().not()]), &two);
    out.push(("item5_equivalent_guards", item4_tree(&[], &pa, &npb, p11, p12, p21, p22)));

    // 6: Γ ⊨ ¬φ.
    let g6 = vec![m(ctx, "forall y. Pb(y)")];
    out.push(("item6_negated", item6_tree(&g6, &m(ctx, "exists y. Pa(y)"), &one, &two)));

    // 7: item 4 with φ1 = φ2; the then-branches agree only under φ.
    let inner = t(ctx, "Pa(x) ? 1 : 0");
    let p11 = sym(s3(std::slice::from_ref(&pa), &pa, &one, &zero));
    let p12 = explosion(&with(&[], &[&pa, &npa]), &Mso::True, &one, &two);
    let p21 = explosion(&with(&[], &[&npa, &pa]), &Mso::True, &two, &inner);
    let p22 = refl(std::slice::from_ref(&npa), &two);
    out.push(("item7_same_guard", item4_tree(&[], &pa, &pa, p11, p12, p21, p22)));

    // 8: case split on Pa(x) for Pa(x) ? 1 : 0 ≈ Pb(x) ? 0 : 1.
    let a8 = t(ctx, "Pa(x) ? 1 : 0");
    let b8 = t(ctx, "Pb(x) ? 0 : 1");
    let ga = vec![pa.clone()];
    let gna = vec![npa.clone()];
    let pos = trans(s3(&ga, &pa, &one, &zero), sym(item6_tree(&ga, &pb, &zero, &one)));
    let neg = trans(item6_tree(&gna, &pa, &one, &zero), sym(s3(&gna, &pb, &zero, &one)));
    debug_assert!(pos.concl.rhs.alpha_eq(&b8) && neg.concl.lhs.alpha_eq(&a8));
    out.push(("item8_case_split", item8(&[], &pa, pos, neg)));

    // 9: Γ ∪ {φ} ⊢ φ ? Ψ1 : Ψ2 ≈ Ψ1 by a single S3.
    let g9 = vec![m(ctx, "exists y. Pb(y)"), m(ctx, "exists y. Pa(y)")];
    out.push(("item9_member", s3(&g9, &m(ctx, "exists y. Pa(y)"), &one, &two)));

    out.into_iter().map(|(n, p)| (n.to_string(), p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    DroppedPremise,
    WrongPivot,
    SwappedBranches,
}

impl MutationKind {
    /// Rejection kinds that count as the specific reason for this mutation.
    pub fn expected_reasons(self) -> &'static [&'static str] {
        match self {
            MutationKind::DroppedPremise => &["arity"],
            MutationKind::WrongPivot => &["pivot"],
            MutationKind::SwappedBranches => &["shape", "premise", "side_condition"],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mutation {
    pub name: String,
    pub kind: MutationKind,
    pub path: Vec<usize>,
    pub tree: ProofTree,
}

fn paths(p: &ProofTree) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for (i, q) in p.premises.iter().enumerate() {
        for mut sub in paths(q) {
            sub.insert(0, i);
            out.push(sub);
        }
    }
    out
}

fn first_path(p: &ProofTree, pred: impl Fn(&ProofTree) -> bool) -> Option<Vec<usize>> {
    paths(p).into_iter().find(|path| pred(p.at(path).unwrap()))
}

/// A different formula for the pivot slot.
fn other_pivot(phi: &Mso) -> Mso {
    match phi {
        Mso::Not(inner) => (**inner).clone(),
        _ => phi.clone().not(),
    }
}

fn swap_lhs(j: &mut Judgement) -> bool {
    let swapped = match &j.lhs {
        Term::Step(Step::Cond(g, a, b)) if a != b => Step::Cond(g.clone(), b.clone(), a.clone()),
        _ => return false,
    };
    j.lhs = Term::Step(swapped);
    true
}

/// Twenty mutations: a dropped premise, a wrong pivot and swapped branches
/// of the first eligible node, cycling over the items.
pub fn mutations(items: &[(String, ProofTree)]) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (name, tree) in items {
        if let Some(path) = first_path(tree, |n| !n.premises.is_empty()) {
            let mut t = tree.clone();
            t.at_mut(&path).unwrap().premises.pop();
            out.push(Mutation { name: format!("{name}/dropped_premise"), kind: MutationKind::DroppedPremise, path, tree: t });
        }
        if let Some(path) = first_path(tree, |n| n.phi.is_some()) {
            let mut t = tree.clone();
            let node = t.at_mut(&path).unwrap();
            node.phi = node.phi.as_ref().map(other_pivot);
            out.push(Mutation { name: format!("{name}/wrong_pivot"), kind: MutationKind::WrongPivot, path, tree: t });
        }
        let swappable = |n: &ProofTree| {
            let mut j = n.concl.clone();
            matches!(n.rule, Rule::S3 | Rule::S4 | Rule::S2) && swap_lhs(&mut j)
        };
        if let Some(path) = first_path(tree, swappable) {
            let mut t = tree.clone();
            swap_lhs(&mut t.at_mut(&path).unwrap().concl);
            out.push(Mutation { name: format!("{name}/swapped_branches"), kind: MutationKind::SwappedBranches, path, tree: t });
        }
    }
    out.truncate(20);
    out
}
