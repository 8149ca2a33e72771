//! core-wMSO to weighted automata over track-extended alphabets, and the
//! length bound ℓ derived from compiled sizes.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::mso_automata::{
    build_phi_step, compile_mso, minimize_moore, well_formed_dfa, AutomatonError, Dfa, TrackAlphabet,
};
use crate::syntax::{Core, FreshNames, Mso, Step, Var, Weight};
use crate::weighted_automata::{WaError, WeightedAutomaton};

/// Moore machine over `base × outer tracks × {x}` whose output at the end of
/// a well-formed word is the value of Ψ with x at the marked position.
#[derive(Debug, Clone)]
pub struct StepClassifier {
    pub alphabet: TrackAlphabet,
    pub initial: u32,
    delta: Vec<u32>,
    pub class_of: Vec<Option<Weight>>,
}

impl StepClassifier {
    pub fn n_states(&self) -> usize {
        self.class_of.len()
    }

    pub fn next(&self, q: u32, l: u32) -> u32 {
        self.delta[q as usize * self.alphabet.size() + l as usize]
    }

    /// Builds the classifier for Ψ; x must be the last track of `alphabet`.
    pub fn build(psi: &Step, alphabet: &TrackAlphabet) -> Result<StepClassifier, AutomatonError> {
        let weights: Vec<Weight> = psi.weights().into_iter().collect();
        let dfas: Vec<Dfa> = weights
            .iter()
            .map(|r| compile_mso(&build_phi_step(psi, *r), alphabet))
            .collect::<Result<_, _>>()?;
        let size = alphabet.size();
        let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
        let start: Vec<u32> = dfas.iter().map(|d| d.initial).collect();
        index.insert(start.clone(), 0);
        let mut tuples = vec![start];
        let mut delta = Vec::new();
        let mut i = 0;
        while i < tuples.len() {
            for l in 0..size as u32 {
                let t: Vec<u32> = tuples[i].iter().zip(&dfas).map(|(q, d)| d.next(*q, l)).collect();
                let next = tuples.len() as u32;
                let id = *index.entry(t.clone()).or_insert_with(|| {
                    tuples.push(t);
                    next
                });
                delta.push(id);
            }
            i += 1;
        }
        // output 0: no class, 1 + j: weights[j], MAX: several classes
        let outputs: Vec<u32> = tuples
            .iter()
            .map(|t| {
                let mut acc = t.iter().zip(&dfas).enumerate().filter(|(_, (q, d))| d.accepting[**q as usize]);
                match (acc.next(), acc.next()) {
                    (Some((j, _)), None) => 1 + j as u32,
                    (None, _) => 0,
                    _ => u32::MAX,
                }
            })
            .collect();
        let (initial, delta, outs) = minimize_moore(size, 0, &delta, &outputs);
        let class_of = outs
            .into_iter()
            .map(|o| match o {
                0 | u32::MAX => None,
                j => Some(weights[j as usize - 1]),
            })
            .collect();
        Ok(StepClassifier { alphabet: alphabet.clone(), initial, delta, class_of })
    }
}

/// Outer letter `l` extended by bit `b` on the last track.
fn with_x(outer: &TrackAlphabet, l: u32, b: u32) -> u32 {
    let k = outer.k();
    let base = l >> k;
    let bits = l & ((1 << k) - 1);
    (base << (k + 1)) | (b << k) | bits
}

/// Unambiguous automaton for Π_x Ψ over the outer tracks.
///
/// States are pairs (f, h): f is the classifier state after the prefix read
/// with x unmarked, h maps a classifier state to the class reached from it
/// on the rest of the word. A transition on letter a goes from (f, h'∘δ_a)
/// to (δ(f, a0), h') and emits h'(δ(f, a1)). Final states carry h = class_of,
/// so h is fixed backwards by the suffix and f forwards by the prefix.
pub fn compile_step_product(psi: &Step, x: &Var, outer: &TrackAlphabet) -> Result<WeightedAutomaton, AutomatonError> {
    let mut free = psi.free_vars();
    free.remove(x);
    outer.covers(&free)?;
    let (x, psi) = if outer.track_index(x).is_some() {
        let mut names = FreshNames::avoiding(outer.tracks.iter().chain(psi.vars().iter()));
        let nx = names.fresh(x);
        let npsi = psi.rename_free(x, &nx);
        (nx, npsi)
    } else {
        (x.clone(), psi.clone())
    };
    let inner = outer.with_track(x);
    let c = StepClassifier::build(&psi, &inner)?;
    let n_outer = outer.size() as u32;

    // suffix functions, closed under precomposition with unmarked letters
    type H = Vec<Option<Weight>>;
    let mut h_index: HashMap<H, u32> = HashMap::new();
    let mut hs: Vec<H> = vec![c.class_of.clone()];
    h_index.insert(c.class_of.clone(), 0);
    // pre[l][h'] = index of h'∘δ(·, l0)
    let mut pre: Vec<Vec<u32>> = vec![Vec::new(); n_outer as usize];
    let mut i = 0;
    while i < hs.len() {
        for l in 0..n_outer {
            let l0 = with_x(outer, l, 0);
            let h: H = (0..c.n_states() as u32).map(|s| hs[i][c.next(s, l0) as usize]).collect();
            let next = hs.len() as u32;
            let id = *h_index.entry(h.clone()).or_insert_with(|| {
                hs.push(h);
                next
            });
            pre[l as usize].push(id);
        }
        i += 1;
    }
    // succ[l][h] = all h' with pre[l][h'] = h
    let mut succ: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); hs.len()]; n_outer as usize];
    for l in 0..n_outer as usize {
        for (hp, h) in pre[l].iter().enumerate() {
            succ[l][*h as usize].push(hp as u32);
        }
    }

    let mut wa = WeightedAutomaton::new(outer.clone(), 1);
    let mut index: HashMap<(u32, u32), u32> = HashMap::new();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut queue = VecDeque::new();
    for h in 0..hs.len() as u32 {
        index.insert((c.initial, h), pairs.len() as u32);
        wa.initial.insert(pairs.len() as u32);
        pairs.push((c.initial, h));
        queue.push_back(pairs.len() as u32 - 1);
    }
    while let Some(id) = queue.pop_front() {
        let (f, h) = pairs[id as usize];
        for l in 0..n_outer {
            let f2 = c.next(f, with_x(outer, l, 0));
            let marked = c.next(f, with_x(outer, l, 1));
            for &h2 in &succ[l as usize][h as usize] {
                let Some(r) = hs[h2 as usize][marked as usize] else { continue };
                let next = pairs.len() as u32;
                let to = *index.entry((f2, h2)).or_insert_with(|| {
                    pairs.push((f2, h2));
                    queue.push_back(next);
                    next
                });
                wa.add_transition(id, l, to, r);
            }
        }
    }
    wa.n_states = pairs.len();
    wa.finals = pairs.iter().enumerate().filter(|(_, (_, h))| *h == 0).map(|(i, _)| i as u32).collect();
    Ok(wa.trim())
}

/// Weighted automaton with wa_eval(encode(pw)) = ⟦Φ⟧(pw) on every
/// well-formed encoding over `alphabet`.
pub fn compile_core(phi: &Core, alphabet: &TrackAlphabet) -> Result<WeightedAutomaton, AutomatonError> {
    alphabet.covers(&phi.free_vars())?;
    compile_rec(phi, alphabet).map(|a| a.trim())
}

fn wa(r: Result<WeightedAutomaton, WaError>) -> WeightedAutomaton {
    r.expect("operands share the track alphabet")
}

fn compile_rec(phi: &Core, alpha: &TrackAlphabet) -> Result<WeightedAutomaton, AutomatonError> {
    Ok(match phi {
        Core::Zero => WeightedAutomaton::empty(alpha.clone()),
        Core::Prod(x, psi) => compile_step_product(psi, x, alpha)?,
        Core::Cond(g, a, b) => {
            let d = compile_mso(g, alpha)?;
            let left = wa(compile_rec(a, alpha)?.product_with_dfa(&d));
            let right = wa(compile_rec(b, alpha)?.product_with_dfa(&d.complement()));
            wa(left.disjoint_union(&right)).trim()
        }
        Core::Plus(a, b) => wa(compile_rec(a, alpha)?.disjoint_union(&compile_rec(b, alpha)?)).trim(),
        Core::Sum(v, body) => {
            let (v, body) = if alpha.track_index(v).is_some() {
                let mut names = FreshNames::avoiding(alpha.tracks.iter().chain(body.vars().iter()));
                let nv = names.fresh(v);
                let nb = body.rename_free(v, &nv);
                (nv, nb)
            } else {
                (v.clone(), (**body).clone())
            };
            let ext = alpha.with_track(v.clone());
            let t = ext.k() - 1;
            let mut inner = compile_rec(&body, &ext)?;
            if v.is_first() {
                inner = wa(inner.product_with_dfa(&Dfa::exactly_one(&ext, t)));
            }
            inner.erase_track(t).trim()
        }
    })
}

/// Tracks for a judgement: all free variables of Γ and both sides, in
/// canonical order.
pub fn joint_alphabet<'a>(
    letters: usize,
    gamma: &[Mso],
    sides: impl IntoIterator<Item = &'a Core>,
) -> TrackAlphabet {
    let mut vars: BTreeSet<Var> = gamma.iter().flat_map(|g| g.free_vars()).collect();
    for s in sides {
        vars.extend(s.free_vars());
    }
    TrackAlphabet::canonical(letters, vars)
}

/// (⋀Γ ? Φ : 0) restricted to well-formed first-order tracks.
pub fn compile_guarded(gamma: &[Mso], phi: &Core, alphabet: &TrackAlphabet) -> Result<WeightedAutomaton, AutomatonError> {
    let guarded = Core::cond(Mso::conj(gamma.iter().cloned()), phi.clone(), Core::Zero);
    let a = compile_core(&guarded, alphabet)?;
    Ok(wa(a.product_with_dfa(&well_formed_dfa(alphabet))).reduce())
}

/// ℓ = n1 + n2 − 1 for the useful sizes of the two guarded automata.
pub fn ell_bound(phi1: &Core, phi2: &Core, gamma: &[Mso], letters: usize) -> Result<usize, AutomatonError> {
    let alpha = joint_alphabet(letters, gamma, [phi1, phi2]);
    let a1 = compile_guarded(gamma, phi1, &alpha)?;
    let a2 = compile_guarded(gamma, phi2, &alpha)?;
    Ok(a1.useful_size() + a2.useful_size() - 1)
}

/// Π_z Ψ for a variable z not occurring in Ψ: one copy of Ψ's value per
/// position, so two lifts are equal exactly when the steps are.
pub fn lift_step(psi: &Step, avoid: &[&Step]) -> Core {
    let mut names = FreshNames::avoiding(avoid.iter().flat_map(|s| s.vars()).collect::<Vec<_>>().iter().chain(psi.vars().iter()));
    Core::prod(names.fresh(&Var::first("z")), psi.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{eval_core, pointed_words, PointedWord};
    use crate::syntax::{parse_core, Context};

    fn ctx() -> Context {
        Context::new(["a", "b"], ["0", "1", "2"], "0").unwrap()
    }

    fn check_all(phi: &Core, c: &Context, max_len: usize) {
        let alpha = TrackAlphabet::canonical(c.alphabet.len(), phi.free_vars());
        let a = compile_core(phi, &alpha).unwrap();
        for pw in pointed_words(c.alphabet.len(), &alpha.tracks, max_len) {
            let got = a.eval(&alpha.encode(&pw).unwrap()).unwrap();
            assert_eq!(got, eval_core(phi, &pw).unwrap(), "{}", pw.display(c));
        }
    }

    #[test]
    fn constant_product_is_one_loop() {
        let c = ctx();
        let phi = parse_core("prod x. 1", &c).unwrap();
        let a = compile_core(&phi, &TrackAlphabet::new(2, vec![])).unwrap();
        assert_eq!(a.n_states, 1);
        assert_eq!(a.transitions.len(), 2);
        check_all(&phi, &c, 4);
    }

    #[test]
    fn example_one() {
        let c = ctx();
        let phi = parse_core(
            "sum x. prod y. (x <= y & forall z. ((x <= z & z <= y) -> Pa(z))) ? 1 : 0",
            &c,
        )
        .unwrap();
        check_all(&phi, &c, 4);
        let a = compile_core(&phi, &TrackAlphabet::new(2, vec![])).unwrap();
        let pw = PointedWord::parse("word=abaa", &c).unwrap();
        let alpha = TrackAlphabet::new(2, vec![]);
        assert_eq!(
            a.eval(&alpha.encode(&pw).unwrap()).unwrap().to_json(&c),
            r#"{"0.0.0.0":1,"0.0.0.1":1,"0.0.1.1":1,"1.0.0.0":1}"#
        );
    }

    #[test]
    fn inner_product_with_outer_track() {
        let c = ctx();
        let phi = parse_core("prod y. (x <= y & forall z. ((x <= z & z <= y) -> Pa(z))) ? 1 : 0", &c).unwrap();
        check_all(&phi, &c, 4);
        let alpha = TrackAlphabet::new(2, vec![Var::first("x")]);
        let a = compile_core(&phi, &alpha).unwrap();
        let pw = PointedWord::parse("word=abaa; x=1", &c).unwrap();
        assert_eq!(a.eval(&alpha.encode(&pw).unwrap()).unwrap().to_json(&c), r#"{"1.0.0.0":1}"#);
    }

    #[test]
    fn second_order_sum_and_plus() {
        let c = ctx();
        for text in [
            "sum X. prod x. (x in X) ? 1 : 0",
            "prod x. Pa(x) ? 1 : 0 + sum y. prod x. (x = y & Pb(y)) ? 2 : 0",
            "(exists x. Pb(x)) ? prod x. 1 : zero",
            "sum X. sum Y. (forall x. (x in X -> x in Y)) ? prod x. (x in X) ? 1 : 2",
            "zero",
            "sum x. sum x. prod y. (x = y) ? 1 : 0",
        ] {
            check_all(&parse_core(text, &c).unwrap(), &c, 4);
        }
    }

    #[test]
    fn unambiguous_step_products() {
        let c = ctx();
        let phi = parse_core("prod y. (Pa(y) & x < y) ? 1 : (X(y) ? 2 : 0)", &c).unwrap();
        let alpha = TrackAlphabet::canonical(2, phi.free_vars());
        let a = compile_core(&phi, &alpha).unwrap();
        for pw in pointed_words(2, &alpha.tracks, 4) {
            assert_eq!(a.eval(&alpha.encode(&pw).unwrap()).unwrap().total(), 1u32.into());
        }
        check_all(&phi, &c, 4);
    }

    #[test]
    fn ell_of_constants() {
        let c = ctx();
        let one = parse_core("prod x. 1", &c).unwrap();
        let zero = parse_core("prod x. 0", &c).unwrap();
        assert_eq!(ell_bound(&one, &zero, &[], 2).unwrap(), 1);
        assert_eq!(ell_bound(&one, &one, &[], 2).unwrap(), 1);
    }
}
