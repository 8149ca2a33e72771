//! Seeded random formulas and automata for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mso_automata::TrackAlphabet;
use crate::syntax::{Core, Letter, Mso, Step, Var, Weight};
use crate::weighted_automata::WeightedAutomaton;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape limits for random formulas.
#[derive(Debug, Clone)]
pub struct Shape {
    pub letters: usize,
    pub weights: usize,
    /// Free variables available everywhere.
    pub fo: Vec<Var>,
    pub so: Vec<Var>,
    pub mso_depth: usize,
    pub step_depth: usize,
    pub core_depth: usize,
    /// Allow Σ binders in core formulas.
    pub sums: bool,
    /// Allow second-order quantifiers inside MSO formulas.
    pub mso_so_quant: bool,
}

impl Shape {
    pub fn small(letters: usize, weights: usize) -> Shape {
        Shape {
            letters,
            weights,
            fo: vec![Var::first("x"), Var::first("y")],
            so: vec![],
            mso_depth: 2,
            step_depth: 2,
            core_depth: 2,
            sums: false,
            mso_so_quant: false,
        }
    }
}

pub struct Gen<'a, R: Rng> {
    pub rng: &'a mut R,
    pub shape: Shape,
    counter: usize,
}

impl<'a, R: Rng> Gen<'a, R> {
    pub fn new(rng: &'a mut R, shape: Shape) -> Self {
        Gen { rng, shape, counter: 0 }
    }

    fn fresh(&mut self, second: bool) -> Var {
        self.counter += 1;
        if second {
            Var::second(&format!("Y{}", self.counter))
        } else {
            Var::first(&format!("v{}", self.counter))
        }
    }

    fn letter(&mut self) -> Letter {
        Letter(self.rng.gen_range(0..self.shape.letters) as u16)
    }

    pub fn weight(&mut self) -> Weight {
        Weight(self.rng.gen_range(0..self.shape.weights) as u16)
    }

    fn atom(&mut self, fo: &[Var], so: &[Var]) -> Mso {
        if fo.is_empty() {
            return if self.rng.gen_bool(0.5) { Mso::True } else { Mso::bot() };
        }
        let x = fo.choose(self.rng).unwrap().clone();
        match self.rng.gen_range(0..10) {
            0..=4 => Mso::Letter(self.letter(), x),
            5..=7 => Mso::Le(x, fo.choose(self.rng).unwrap().clone()),
            _ if !so.is_empty() => Mso::In(x, so.choose(self.rng).unwrap().clone()),
            _ => Mso::Letter(self.letter(), x),
        }
    }

    pub fn mso(&mut self, depth: usize, fo: &[Var], so: &[Var]) -> Mso {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.atom(fo, so);
        }
        match self.rng.gen_range(0..8) {
            0 => self.mso(depth - 1, fo, so).not(),
            1 | 2 => {
                let a = self.mso(depth - 1, fo, so);
                a.and(self.mso(depth - 1, fo, so))
            }
            3 | 4 => {
                let a = self.mso(depth - 1, fo, so);
                a.or(self.mso(depth - 1, fo, so))
            }
            _ => {
                let second = self.shape.mso_so_quant && self.rng.gen_bool(0.25);
                let v = self.fresh(second);
                let (mut fo2, mut so2) = (fo.to_vec(), so.to_vec());
                if second {
                    so2.push(v.clone());
                } else {
                    fo2.push(v.clone());
                }
                let body = self.mso(depth - 1, &fo2, &so2);
                if self.rng.gen_bool(0.5) {
                    Mso::forall(v, body)
                } else {
                    Mso::exists(v, body)
                }
            }
        }
    }

    pub fn step_in(&mut self, depth: usize, fo: &[Var], so: &[Var]) -> Step {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return Step::Weight(self.weight());
        }
        let g = self.mso(self.shape.mso_depth, fo, so);
        let a = self.step_in(depth - 1, fo, so);
        Step::cond(g, a, self.step_in(depth - 1, fo, so))
    }

    pub fn step(&mut self) -> Step {
        let (fo, so) = (self.shape.fo.clone(), self.shape.so.clone());
        self.step_in(self.shape.step_depth, &fo, &so)
    }

    /// A random assumption set of up to `max` formulas over the free variables.
    pub fn gamma(&mut self, max: usize) -> Vec<Mso> {
        let (fo, so) = (self.shape.fo.clone(), self.shape.so.clone());
        let n = self.rng.gen_range(0..=max);
        (0..n).map(|_| self.mso(1, &fo, &so)).collect()
    }

    pub fn core_in(&mut self, depth: usize, fo: &[Var], so: &[Var]) -> Core {
        let leaf = depth == 0 || self.rng.gen_bool(0.25);
        if leaf {
            if self.rng.gen_bool(0.1) {
                return Core::Zero;
            }
            let x = self.fresh(false);
            let mut fo2 = fo.to_vec();
            fo2.push(x.clone());
            let s = self.step_in(self.shape.step_depth, &fo2, so);
            return Core::prod(x, s);
        }
        let options = if self.shape.sums { 4 } else { 2 };
        match self.rng.gen_range(0..options) {
            0 => {
                let g = self.mso(self.shape.mso_depth, fo, so);
                let a = self.core_in(depth - 1, fo, so);
                Core::cond(g, a, self.core_in(depth - 1, fo, so))
            }
            1 => {
                let a = self.core_in(depth - 1, fo, so);
                Core::plus(a, self.core_in(depth - 1, fo, so))
            }
            _ => {
                let second = self.rng.gen_bool(0.5);
                let v = self.fresh(second);
                let (mut fo2, mut so2) = (fo.to_vec(), so.to_vec());
                if second {
                    so2.push(v.clone());
                } else {
                    fo2.push(v.clone());
                }
                Core::sum(v, self.core_in(depth - 1, &fo2, &so2))
            }
        }
    }

    pub fn core(&mut self) -> Core {
        let (fo, so) = (self.shape.fo.clone(), self.shape.so.clone());
        self.core_in(self.shape.core_depth, &fo, &so)
    }
}

/// A random automaton with about `density` outgoing transitions per state.
pub fn random_wa<R: Rng>(rng: &mut R, n: usize, letters: usize, weights: usize, density: usize) -> WeightedAutomaton {
    let mut a = WeightedAutomaton::new(TrackAlphabet::new(letters, vec![]), n);
    for q in 0..n as u32 {
        for _ in 0..density {
            let l = rng.gen_range(0..letters) as u32;
            let to = rng.gen_range(0..n) as u32;
            let w = Weight(rng.gen_range(0..weights) as u16);
            a.add_transition(q, l, to, w);
        }
    }
    let ni = rng.gen_range(1..=2.min(n));
    let nf = rng.gen_range(1..=3.min(n));
    for _ in 0..ni {
        a.initial.insert(rng.gen_range(0..n) as u32);
    }
    for _ in 0..nf {
        a.finals.insert(rng.gen_range(0..n) as u32);
    }
    a
}

/// The same automaton with states renumbered.
pub fn permuted<R: Rng>(rng: &mut R, a: &WeightedAutomaton) -> WeightedAutomaton {
    let mut perm: Vec<u32> = (0..a.n_states as u32).collect();
    perm.shuffle(rng);
    let mut b = WeightedAutomaton::new(a.alphabet.clone(), a.n_states);
    let mut ts = a.transitions.clone();
    ts.shuffle(rng);
    for t in ts {
        b.add_transition(perm[t.from as usize], t.letter, perm[t.to as usize], t.weight);
    }
    b.initial = a.initial.iter().map(|q| perm[*q as usize]).collect();
    b.finals = a.finals.iter().map(|q| perm[*q as usize]).collect();
    b
}

/// A copy with one transition's weight changed, if there is one to change.
pub fn perturbed<R: Rng>(rng: &mut R, a: &WeightedAutomaton, weights: usize) -> Option<WeightedAutomaton> {
    if a.transitions.is_empty() || weights < 2 {
        return None;
    }
    let mut b = a.clone();
    let i = rng.gen_range(0..b.transitions.len());
    let old = b.transitions[i].weight.0;
    b.transitions[i].weight = Weight(((old as usize + rng.gen_range(1..weights)) % weights) as u16);
    Some(b)
}
