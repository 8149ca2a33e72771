//! Derived tactics and the step-layer synthesizer.

use super::{extend, refl, sym, trans, Judgement, ProofTree, Rule, Term};
use crate::mso_automata::{build_phi_step, entails, mso_sat, mso_sat_over, TrackAlphabet};
use crate::semantics::PointedWord;
use crate::syntax::{Layer, Mso, Step, Var};

fn layer_of(t: &Term) -> Layer {
    t.layer()
}

/// Γ ⊢ a ≈ b from an inconsistent Γ, through φ ? a : b with any φ.
pub fn explosion(gamma: &[Mso], phi: &Mso, a: &Term, b: &Term) -> ProofTree {
    let (_, neg, elim, _) = Rule::conditional_rules(layer_of(a));
    let nphi = phi.clone().not();
    let g = gamma.to_vec();
    let fwd = Term::cond(phi.clone(), a.clone(), b.clone());
    let back = Term::cond(nphi.clone(), b.clone(), a.clone());
    let s3 = ProofTree::new(elim, vec![], Judgement::new(g.clone(), fwd.clone(), a.clone())).with_phi(phi.clone());
    let s2 = ProofTree::new(neg, vec![], Judgement::new(g.clone(), back.clone(), fwd)).with_phi(phi.clone());
    let s3n = ProofTree::new(elim, vec![], Judgement::new(g, back, b.clone())).with_phi(nphi);
    trans(sym(s3), trans(sym(s2), s3n))
}

/// Γ ⊢ φ ? a : a ≈ a.
pub fn item3(gamma: &[Mso], phi: &Mso, a: &Term) -> ProofTree {
    let (weak, _, _, split) = Rule::conditional_rules(layer_of(a));
    let nphi = phi.clone().not();
    let w1 = ProofTree::new(weak, vec![refl(gamma, a)], Judgement::new(extend(gamma, phi), a.clone(), a.clone()))
        .with_phi(phi.clone());
    let w2 = ProofTree::new(weak, vec![refl(gamma, a)], Judgement::new(extend(gamma, &nphi), a.clone(), a.clone()))
        .with_phi(nphi);
    let concl = Judgement::new(gamma.to_vec(), Term::cond(phi.clone(), a.clone(), a.clone()), a.clone());
    ProofTree::new(split, vec![w1, w2], concl).with_phi(phi.clone())
}

/// From Γ ⊨ φ and a proof of Γ∪{φ} ⊢ a ≈ b, a proof of Γ ⊢ a ≈ b.
pub fn item2(gamma: &[Mso], phi: &Mso, p: ProofTree) -> ProofTree {
    let (_, _, elim, split) = Rule::conditional_rules(layer_of(&p.concl.lhs));
    let (a, b) = (p.concl.lhs.clone(), p.concl.rhs.clone());
    let c = Term::cond(phi.clone(), a.clone(), b.clone());
    let g = gamma.to_vec();
    let s4 = ProofTree::new(split, vec![p, refl(&extend(gamma, &phi.clone().not()), &b)], Judgement::new(g.clone(), c.clone(), b))
        .with_phi(phi.clone());
    let s3 = ProofTree::new(elim, vec![], Judgement::new(g, c, a)).with_phi(phi.clone());
    trans(sym(s3), s4)
}

/// From proofs of Γ∪{φ} ⊢ a ≈ b and Γ∪{¬φ} ⊢ a ≈ b, a proof of Γ ⊢ a ≈ b.
pub fn item8(gamma: &[Mso], phi: &Mso, p: ProofTree, q: ProofTree) -> ProofTree {
    let (_, _, _, split) = Rule::conditional_rules(layer_of(&p.concl.lhs));
    let (a, b) = (p.concl.lhs.clone(), p.concl.rhs.clone());
    let c = Term::cond(phi.clone(), a.clone(), a.clone());
    let s4 = ProofTree::new(split, vec![p, q], Judgement::new(gamma.to_vec(), c, b)).with_phi(phi.clone());
    trans(sym(item3(gamma, phi, &a)), s4)
}

/// Case split over φ_1 … φ_n: `proofs[m]` proves Γ∪{φ_m} ⊢ a ≈ b and Γ
/// must entail ⋁φ_m. Follows the induction on n, weakening the remaining
/// premises by ¬φ_n at each step.
pub fn deduction(gamma: &[Mso], phis: &[Mso], proofs: Vec<ProofTree>) -> ProofTree {
    assert!(!phis.is_empty() && phis.len() == proofs.len(), "one proof per case");
    let n = phis.len();
    if n == 1 {
        return item2(gamma, &phis[0], proofs.into_iter().next().unwrap());
    }
    let mut proofs = proofs;
    let last = proofs.pop().unwrap();
    let phin = &phis[n - 1];
    let nphi = phin.clone().not();
    let (weak, ..) = Rule::conditional_rules(layer_of(&last.concl.lhs));
    let weakened: Vec<ProofTree> = proofs
        .into_iter()
        .map(|p| {
            let j = Judgement::new(extend(&p.concl.gamma, &nphi), p.concl.lhs.clone(), p.concl.rhs.clone());
            ProofTree::new(weak, vec![p], j).with_phi(nphi.clone())
        })
        .collect();
    let rest = deduction(&extend(gamma, &nphi), &phis[..n - 1], weakened);
    item8(gamma, phin, last, rest)
}

fn consistent(gamma: &[Mso], letters: usize) -> bool {
    mso_sat(&Mso::conj(gamma.iter().cloned()), letters).is_some()
}

/// Decides Ψ1 ∼_Γ Ψ2 and returns either a derivation or a pointed word in
/// ⟦Γ⟧ on which the two steps differ.
pub fn synth_step_proof(gamma: &[Mso], psi1: &Step, psi2: &Step, letters: usize) -> Result<ProofTree, PointedWord> {
    let mut differ = Vec::new();
    for r in psi1.weights() {
        for s in psi2.weights() {
            if r != s {
                differ.push(build_phi_step(psi1, r).and(build_phi_step(psi2, s)));
            }
        }
    }
    let f = Mso::conj(gamma.iter().cloned()).and(Mso::disj(differ));
    let vars: Vec<Var> = gamma
        .iter()
        .flat_map(|g| g.free_vars())
        .chain(psi1.free_vars())
        .chain(psi2.free_vars())
        .collect();
    let alpha = TrackAlphabet::canonical(letters, vars);
    if let Some(w) = mso_sat_over(&f, &alpha).expect("tracks cover the formula") {
        return Err(w);
    }
    Ok(build(gamma, &Term::Step(psi1.clone()), &Term::Step(psi2.clone()), letters))
}

/// Recursion of the completeness argument: peel the outer conditional of
/// the left side with S4 (or of the right side, under sym); leaves are ref
/// or explosion under inconsistent assumptions.
fn build(gamma: &[Mso], a: &Term, b: &Term, letters: usize) -> ProofTree {
    if a.alpha_eq(b) {
        return refl(gamma, a);
    }
    if !consistent(gamma, letters) {
        return explosion(gamma, &Mso::True, a, b);
    }
    match (a.as_cond(), b.as_cond()) {
        (Some((phi, a1, a2)), _) => {
            let phi = phi.clone();
            let g = gamma.to_vec();
            if entails(gamma, &phi, letters).is_ok() {
                let s3 = ProofTree::new(Rule::S3, vec![], Judgement::new(g, a.clone(), a1.clone())).with_phi(phi);
                return chain(s3, build(gamma, &a1, b, letters));
            }
            if entails(gamma, &phi.clone().not(), letters).is_ok() {
                let flip = Term::cond(phi.clone().not(), a2.clone(), a1.clone());
                let s2 = ProofTree::new(Rule::S2, vec![], Judgement::new(g.clone(), flip.clone(), a.clone()))
                    .with_phi(phi.clone());
                let s3 = ProofTree::new(Rule::S3, vec![], Judgement::new(g, flip, a2.clone())).with_phi(phi.not());
                return chain(trans(sym(s2), s3), build(gamma, &a2, b, letters));
            }
            let p = build(&extend(gamma, &phi), &a1, b, letters);
            let q = build(&extend(gamma, &phi.clone().not()), &a2, b, letters);
            ProofTree::new(Rule::S4, vec![p, q], Judgement::new(g, a.clone(), b.clone())).with_phi(phi)
        }
        (None, Some(_)) => sym(build(gamma, b, a, letters)),
        // Two distinct constants under consistent assumptions cannot be
        // equivalent; the caller has ruled this out.
        (None, None) => explosion(gamma, &Mso::True, a, b),
    }
}

/// trans, dropping a trailing reflexivity step.
fn chain(p: ProofTree, q: ProofTree) -> ProofTree {
    if q.rule == Rule::Ref {
        p
    } else {
        trans(p, q)
    }
}
