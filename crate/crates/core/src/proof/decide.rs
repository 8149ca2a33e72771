use thiserror::Error;

use super::Term;
use crate::compiler::{compile_guarded, joint_alphabet};
use crate::mso_automata::{build_phi_step, build_prod_eq, mso_sat_over, AutomatonError, TrackAlphabet};
use crate::semantics::{eval_core, eval_step, mso_holds, pointed_words, EvalError, PointedWord, WeightMultiset};
use crate::syntax::{Core, Mso, Step, Var, Weight};
use crate::weighted_automata::{equiv_poly, WaError};

#[derive(Debug, Error)]
pub enum DecideError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Automata(#[from] WaError),
}

/// Decides Φ1 ∼_Γ Φ2 through the guarded automata; a witness lies in ⟦Γ⟧
/// and separates the two values.
pub fn decide_equality(gamma: &[Mso], phi1: &Core, phi2: &Core, letters: usize) -> Result<Option<PointedWord>, DecideError> {
    let alpha = joint_alphabet(letters, gamma, [phi1, phi2]);
    let a1 = compile_guarded(gamma, phi1, &alpha)?;
    let a2 = compile_guarded(gamma, phi2, &alpha)?;
    Ok(equiv_poly(&a1, &a2)?.map(|w| {
        let pw = alpha.decode(&w.word);
        debug_assert!(gamma.iter().all(|g| mso_holds(g, &pw).unwrap_or(false)));
        pw
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundedSat {
    Witness(PointedWord),
    NotFoundUpTo(usize),
}

/// Searches pointed words of length at most `bound` for equal values.
pub fn equational_sat_bounded(phi1: &Core, phi2: &Core, bound: usize, letters: usize) -> Result<BoundedSat, EvalError> {
    let vars: Vec<Var> = phi1.free_vars().union(&phi2.free_vars()).cloned().collect();
    for pw in pointed_words(letters, &vars, bound) {
        if eval_core(phi1, &pw)? == eval_core(phi2, &pw)? {
            return Ok(BoundedSat::Witness(pw));
        }
    }
    Ok(BoundedSat::NotFoundUpTo(bound))
}

fn sat_over(phi: &Mso, vars: impl IntoIterator<Item = Var>, letters: usize) -> Option<PointedWord> {
    let alpha = TrackAlphabet::canonical(letters, vars);
    mso_sat_over(phi, &alpha).expect("tracks cover the formula")
}

/// Is there a pointed word on which the two steps agree?
pub fn step_equational_sat(psi1: &Step, psi2: &Step, letters: usize) -> Option<PointedWord> {
    let vars: Vec<Var> = psi1.free_vars().union(&psi2.free_vars()).cloned().collect();
    sat_over(&build_prod_eq(psi1, psi2), vars, letters)
}

/// Is there a pointed word on which Ψ evaluates to r?
pub fn r_sat_step(psi: &Step, r: Weight, letters: usize) -> Option<PointedWord> {
    sat_over(&build_phi_step(psi, r), psi.free_vars(), letters)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelValue {
    Weight(Weight),
    Multiset(WeightMultiset),
}

/// ⟦χ⟧(w,σ) = v; a value of the wrong kind never matches.
pub fn weighted_model_check(chi: &Term, pw: &PointedWord, v: &ModelValue) -> Result<bool, EvalError> {
    Ok(match (chi, v) {
        (Term::Step(s), ModelValue::Weight(r)) => eval_step(s, pw)? == *r,
        (Term::Core(c), ModelValue::Multiset(m)) => eval_core(c, pw)? == *m,
        (Term::Step(s), _) => {
            eval_step(s, pw)?;
            false
        }
        (Term::Core(c), _) => {
            eval_core(c, pw)?;
            false
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_core, parse_mso, parse_step, Context};

    fn ctx() -> Context {
        Context::new(["a", "b"], ["0", "1"], "0").unwrap()
    }

    #[test]
    fn equality_examples() {
        let c = ctx();
        let f1 = parse_core("prod x. (Pa(x) ? 1 : 0)", &c).unwrap();
        let f2 = parse_core("sum X. prod x. (X(x) ? 1 : 0)", &c).unwrap();
        assert_eq!(decide_equality(&[], &Core::plus(f1.clone(), f2.clone()), &Core::plus(f2.clone(), f1.clone()), 2).unwrap(), None);
        let g = parse_mso("exists y. Pa(y)", &c).unwrap();
        let cond = Core::cond(g.clone(), f1.clone(), f2.clone());
        assert_eq!(decide_equality(&[g], &cond, &f1, 2).unwrap(), None);
        let one = parse_core("prod x. 1", &c).unwrap();
        let zero = parse_core("prod x. 0", &c).unwrap();
        let w = decide_equality(&[], &one, &zero, 2).unwrap().unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn bounded_sat_examples() {
        let c = ctx();
        let one = parse_core("prod x. 1", &c).unwrap();
        let zero = parse_core("prod x. 0", &c).unwrap();
        assert!(matches!(equational_sat_bounded(&one, &one, 1, 2).unwrap(), BoundedSat::Witness(w) if w.len() == 1));
        assert_eq!(equational_sat_bounded(&one, &zero, 5, 2).unwrap(), BoundedSat::NotFoundUpTo(5));
        let s = parse_core("sum x. prod y. 1", &c).unwrap();
        let p = parse_core("prod y. 1 + prod y. 1", &c).unwrap();
        assert!(matches!(equational_sat_bounded(&s, &p, 3, 2).unwrap(), BoundedSat::Witness(w) if w.len() == 2));
    }

    #[test]
    fn step_sat_examples() {
        let c = ctx();
        let one = parse_step("1", &c).unwrap();
        let zero = parse_step("0", &c).unwrap();
        let s = parse_step("Pa(x) ? 1 : 0", &c).unwrap();
        assert!(step_equational_sat(&s, &s, 2).is_some());
        assert!(step_equational_sat(&one, &zero, 2).is_none());
        assert_eq!(step_equational_sat(&s, &one, 2).unwrap().display(&c), "word=a; x=1");
        let r1 = c.weight("1").unwrap();
        assert_eq!(r_sat_step(&one, r1, 2).unwrap().len(), 1);
        assert!(r_sat_step(&zero, r1, 2).is_none());
        assert_eq!(r_sat_step(&s, r1, 2).unwrap().display(&c), "word=a; x=1");
    }

    #[test]
    fn model_check_examples() {
        let c = ctx();
        let pw = PointedWord::parse("word=abaa", &c).unwrap();
        let phi = parse_core(
            "sum x. prod y. (x <= y & forall z. ((x <= z & z <= y) -> Pa(z))) ? 1 : 0",
            &c,
        )
        .unwrap();
        let want = WeightMultiset::from_json(r#"{"1.0.0.0":1,"0.0.0.0":1,"0.0.1.1":1,"0.0.0.1":1}"#, &c).unwrap();
        assert!(weighted_model_check(&Term::Core(phi.clone()), &pw, &ModelValue::Multiset(want)).unwrap());
        let wrong = WeightMultiset::from_json(r#"{"0.0.0.0":1}"#, &c).unwrap();
        assert!(!weighted_model_check(&Term::Core(phi), &pw, &ModelValue::Multiset(wrong)).unwrap());
        assert!(weighted_model_check(&Term::Core(Core::Zero), &pw, &ModelValue::Multiset(WeightMultiset::empty())).unwrap());
    }
}
