//! Weighted automata under the multiset semantics, counting vectors and the
//! two equivalence procedures.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mso_automata::{AutomatonError, Dfa, TrackAlphabet};
use crate::semantics::WeightMultiset;
use crate::syntax::{Context, Var, Weight};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WaError {
    #[error("letter {0} is not in the automaton's alphabet")]
    ForeignLetter(u32),
    #[error("automata have different alphabets")]
    AlphabetMismatch,
    #[error("schema violation: {0}")]
    Schema(String),
}

impl From<AutomatonError> for WaError {
    fn from(e: AutomatonError) -> WaError {
        match e {
            AutomatonError::AlphabetMismatch => WaError::AlphabetMismatch,
            other => WaError::Schema(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub from: u32,
    pub letter: u32,
    pub to: u32,
    pub weight: Weight,
}

/// (Q, Δ, wgt, I, F). The position of a transition in `transitions` is its
/// identity, so parallel edges with equal labels are distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedAutomaton {
    pub alphabet: TrackAlphabet,
    pub n_states: usize,
    pub transitions: Vec<Transition>,
    pub initial: BTreeSet<u32>,
    pub finals: BTreeSet<u32>,
}

/// Per-state run counts Q(S, w, γ).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector(pub Vec<BigUint>);

impl CountVector {
    pub fn zero(n: usize) -> CountVector {
        CountVector(vec![BigUint::zero(); n])
    }

    pub fn indicator(n: usize, set: &BTreeSet<u32>) -> CountVector {
        let mut v = CountVector::zero(n);
        for q in set {
            v.0[*q as usize] = BigUint::one();
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn sum_over(&self, set: &BTreeSet<u32>) -> BigUint {
        set.iter().map(|q| &self.0[*q as usize]).sum()
    }
}

/// Outgoing (letter, weight, target class) triples of a state.
type Signature = Vec<(u32, Weight, usize)>;

impl WeightedAutomaton {
    pub fn new(alphabet: TrackAlphabet, n_states: usize) -> WeightedAutomaton {
        WeightedAutomaton { alphabet, n_states, transitions: Vec::new(), initial: BTreeSet::new(), finals: BTreeSet::new() }
    }

    /// The automaton with no final state.
    pub fn empty(alphabet: TrackAlphabet) -> WeightedAutomaton {
        WeightedAutomaton::new(alphabet, 1)
    }

    pub fn add_transition(&mut self, from: u32, letter: u32, to: u32, weight: Weight) {
        self.transitions.push(Transition { from, letter, to, weight });
    }

    /// R_A: weights occurring on transitions.
    pub fn weights(&self) -> BTreeSet<Weight> {
        self.transitions.iter().map(|t| t.weight).collect()
    }

    fn check_word(&self, word: &[u32]) -> Result<(), WaError> {
        match word.iter().find(|l| **l as usize >= self.alphabet.size()) {
            Some(l) => Err(WaError::ForeignLetter(*l)),
            None => Ok(()),
        }
    }

    /// ⦃wgt(ρ) | ρ accepting run on w⦄, one occurrence per run.
    pub fn eval(&self, word: &[u32]) -> Result<WeightMultiset, WaError> {
        self.check_word(word)?;
        let mut layer: Vec<HashMap<Vec<Weight>, BigUint>> = vec![HashMap::new(); self.n_states];
        for q in &self.initial {
            layer[*q as usize].insert(Vec::new(), BigUint::one());
        }
        for &a in word {
            let mut next: Vec<HashMap<Vec<Weight>, BigUint>> = vec![HashMap::new(); self.n_states];
            for t in self.transitions.iter().filter(|t| t.letter == a) {
                for (s, c) in &layer[t.from as usize] {
                    let mut s2 = s.clone();
                    s2.push(t.weight);
                    *next[t.to as usize].entry(s2).or_default() += c;
                }
            }
            layer = next;
        }
        let mut out = WeightMultiset::empty();
        for q in &self.finals {
            for (s, c) in &layer[*q as usize] {
                out.add(s.clone(), c.clone()).expect("all strings have length |w|");
            }
        }
        Ok(out)
    }

    /// One letter/weight step of the counting vector; parallel transitions
    /// add up.
    pub fn count_step(&self, v: &CountVector, letter: u32, weight: Weight) -> CountVector {
        let mut out = CountVector::zero(self.n_states);
        for t in &self.transitions {
            if t.letter == letter && t.weight == weight && !v.0[t.from as usize].is_zero() {
                out.0[t.to as usize] += &v.0[t.from as usize];
            }
        }
        out
    }

    /// Q(I, w, γ).
    pub fn count(&self, word: &[u32], gamma: &[Weight]) -> CountVector {
        word.iter()
            .zip(gamma)
            .fold(CountVector::indicator(self.n_states, &self.initial), |v, (a, r)| self.count_step(&v, *a, *r))
    }

    /// States that are reachable from I and can reach F.
    pub fn useful_states(&self) -> Vec<bool> {
        let mut fwd = vec![false; self.n_states];
        let mut bwd = vec![false; self.n_states];
        let mut queue: VecDeque<u32> = self.initial.iter().copied().collect();
        for q in &self.initial {
            fwd[*q as usize] = true;
        }
        while let Some(q) = queue.pop_front() {
            for t in self.transitions.iter().filter(|t| t.from == q) {
                if !fwd[t.to as usize] {
                    fwd[t.to as usize] = true;
                    queue.push_back(t.to);
                }
            }
        }
        let mut queue: VecDeque<u32> = self.finals.iter().copied().collect();
        for q in &self.finals {
            bwd[*q as usize] = true;
        }
        while let Some(q) = queue.pop_front() {
            for t in self.transitions.iter().filter(|t| t.to == q) {
                if !bwd[t.from as usize] {
                    bwd[t.from as usize] = true;
                    queue.push_back(t.from);
                }
            }
        }
        fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect()
    }

    /// Restricts to useful states and renumbers them in BFS order from the
    /// initial states, exploring transitions in list order. Keeps at least
    /// one state so the result stays well-formed.
    pub fn trim(&self) -> WeightedAutomaton {
        let useful = self.useful_states();
        let mut renum: Vec<Option<u32>> = vec![None; self.n_states];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        for q in &self.initial {
            if useful[*q as usize] && renum[*q as usize].is_none() {
                renum[*q as usize] = Some(order.len() as u32);
                order.push(*q);
                queue.push_back(*q);
            }
        }
        let mut out_edges: Vec<Vec<&Transition>> = vec![Vec::new(); self.n_states];
        for t in &self.transitions {
            out_edges[t.from as usize].push(t);
        }
        for es in &mut out_edges {
            es.sort_by_key(|t| (t.letter, t.weight, t.to));
        }
        while let Some(q) = queue.pop_front() {
            for t in &out_edges[q as usize] {
                if useful[t.to as usize] && renum[t.to as usize].is_none() {
                    renum[t.to as usize] = Some(order.len() as u32);
                    order.push(t.to);
                    queue.push_back(t.to);
                }
            }
        }
        let mut out = WeightedAutomaton::new(self.alphabet.clone(), order.len().max(1));
        for &q in &order {
            for t in &out_edges[q as usize] {
                if let Some(to) = renum[t.to as usize] {
                    out.add_transition(renum[q as usize].unwrap(), t.letter, to, t.weight);
                }
            }
        }
        out.initial = self.initial.iter().filter_map(|q| renum[*q as usize]).collect();
        out.finals = self.finals.iter().filter_map(|q| renum[*q as usize]).collect();
        out
    }

    /// Number of useful states, at least 1.
    pub fn useful_size(&self) -> usize {
        self.useful_states().iter().filter(|u| **u).count().max(1)
    }

    /// Disjoint union; the states of `other` come after those of `self`.
    pub fn disjoint_union(&self, other: &WeightedAutomaton) -> Result<WeightedAutomaton, WaError> {
        if self.alphabet != other.alphabet {
            return Err(WaError::AlphabetMismatch);
        }
        let off = self.n_states as u32;
        let mut out = self.clone();
        out.n_states += other.n_states;
        for t in &other.transitions {
            out.add_transition(t.from + off, t.letter, t.to + off, t.weight);
        }
        out.initial.extend(other.initial.iter().map(|q| q + off));
        out.finals.extend(other.finals.iter().map(|q| q + off));
        Ok(out)
    }

    /// Run-preserving product with a complete DFA: each run of `self` on an
    /// accepted word survives unchanged, runs on rejected words vanish.
    pub fn product_with_dfa(&self, d: &Dfa) -> Result<WeightedAutomaton, WaError> {
        if self.alphabet != d.alphabet {
            return Err(WaError::AlphabetMismatch);
        }
        let mut index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut pairs = Vec::new();
        let mut queue = VecDeque::new();
        let mut intern = |p: (u32, u32), pairs: &mut Vec<(u32, u32)>, queue: &mut VecDeque<u32>| -> u32 {
            *index.entry(p).or_insert_with(|| {
                pairs.push(p);
                queue.push_back((pairs.len() - 1) as u32);
                (pairs.len() - 1) as u32
            })
        };
        let mut initial = BTreeSet::new();
        for q in &self.initial {
            initial.insert(intern((*q, d.initial), &mut pairs, &mut queue));
        }
        let mut out_edges: Vec<Vec<&Transition>> = vec![Vec::new(); self.n_states];
        for t in &self.transitions {
            out_edges[t.from as usize].push(t);
        }
        let mut transitions = Vec::new();
        while let Some(from) = queue.pop_front() {
            let (q, s) = pairs[from as usize];
            for t in &out_edges[q as usize] {
                let to = intern((t.to, d.next(s, t.letter)), &mut pairs, &mut queue);
                transitions.push(Transition { from, letter: t.letter, to, weight: t.weight });
            }
        }
        let finals = pairs
            .iter()
            .enumerate()
            .filter(|(_, (q, s))| self.finals.contains(q) && d.accepting[*s as usize])
            .map(|(i, _)| i as u32)
            .collect();
        Ok(WeightedAutomaton { alphabet: self.alphabet.clone(), n_states: pairs.len().max(1), transitions, initial, finals })
    }

    /// The same automaton read right to left.
    pub fn reversed(&self) -> WeightedAutomaton {
        let mut out = WeightedAutomaton::new(self.alphabet.clone(), self.n_states);
        for t in &self.transitions {
            out.add_transition(t.to, t.letter, t.from, t.weight);
        }
        out.initial = self.finals.clone();
        out.finals = self.initial.clone();
        out
    }

    /// Quotient by the coarsest partition in which equivalent states agree on
    /// finality and on the number of (letter, weight) transitions into each
    /// class. Such states have equal run counts for every suffix, so the
    /// quotient keeps every multiplicity. Initial states stay apart, since a
    /// class cannot be initial twice.
    fn lump_forward(&self) -> WeightedAutomaton {
        let n = self.n_states;
        let mut class: Vec<usize> = (0..n as u32)
            .map(|q| {
                let init = if self.initial.contains(&q) { q as usize + 2 } else { 0 };
                init + usize::from(self.finals.contains(&q))
            })
            .collect();
        let mut out_edges: Vec<Vec<&Transition>> = vec![Vec::new(); n];
        for t in &self.transitions {
            out_edges[t.from as usize].push(t);
        }
        let mut classes = usize::MAX;
        loop {
            let mut ids: HashMap<(usize, Signature), usize> = HashMap::new();
            let mut next = Vec::with_capacity(n);
            for q in 0..n {
                let mut sig: Signature =
                    out_edges[q].iter().map(|t| (t.letter, t.weight, class[t.to as usize])).collect();
                sig.sort_unstable();
                let k = ids.len();
                next.push(*ids.entry((class[q], sig)).or_insert(k));
            }
            class = next;
            if ids.len() == classes {
                break;
            }
            classes = ids.len();
        }
        let mut out = WeightedAutomaton::new(self.alphabet.clone(), classes.max(1));
        let mut done = vec![false; classes];
        for q in 0..n {
            let c = class[q];
            if std::mem::replace(&mut done[c], true) {
                continue;
            }
            for t in &out_edges[q] {
                out.add_transition(c as u32, t.letter, class[t.to as usize] as u32, t.weight);
            }
        }
        out.initial = self.initial.iter().map(|q| class[*q as usize] as u32).collect();
        out.finals = self.finals.iter().map(|q| class[*q as usize] as u32).collect();
        out
    }

    /// Trims and merges states with equal futures, then with equal pasts,
    /// until nothing changes. The result has the same semantics.
    pub fn reduce(&self) -> WeightedAutomaton {
        let mut cur = self.trim();
        loop {
            let size = cur.n_states;
            cur = cur.lump_forward().reversed().lump_forward().reversed().trim();
            if cur.n_states >= size {
                return cur;
            }
        }
    }

    /// Erases track `idx` from every letter; transitions keep their
    /// identities, so runs that differed only on that track stay distinct.
    pub fn erase_track(&self, idx: usize) -> WeightedAutomaton {
        let target = self.alphabet.without_track(idx);
        let transitions = self
            .transitions
            .iter()
            .map(|t| Transition { letter: self.alphabet.erase_bit(t.letter, idx), ..*t })
            .collect();
        WeightedAutomaton { alphabet: target, transitions, ..self.clone() }
    }

    pub fn to_json(&self, ctx: &Context) -> String {
        let transitions = self
            .transitions
            .iter()
            .map(|t| {
                let (letter, tracks) = self.alphabet.describe_letter(t.letter, ctx);
                WaTransitionJson {
                    from: t.from as usize,
                    letter,
                    tracks: if self.alphabet.k() == 0 { None } else { Some(tracks) },
                    to: t.to as usize,
                    weight: ctx.weights.name(t.weight).to_string(),
                }
            })
            .collect();
        let j = WaJson {
            states: self.n_states,
            initial: self.initial.iter().map(|q| *q as usize).collect(),
            r#final: self.finals.iter().map(|q| *q as usize).collect(),
            alphabet: ctx.alphabet.names().to_vec(),
            weights: ctx.weights.names().to_vec(),
            tracks: if self.alphabet.k() == 0 {
                None
            } else {
                Some(self.alphabet.tracks.iter().map(|v| v.name().to_string()).collect())
            },
            transitions,
        };
        serde_json::to_string(&j).expect("serializable")
    }

    pub fn from_json(text: &str, ctx: &Context) -> Result<WeightedAutomaton, WaError> {
        let j: WaJson = serde_json::from_str(text).map_err(|e| WaError::Schema(e.to_string()))?;
        if j.alphabet != ctx.alphabet.names() {
            return Err(WaError::Schema("alphabet differs from the session".into()));
        }
        if j.weights != ctx.weights.names() {
            return Err(WaError::Schema("weights differ from the session".into()));
        }
        if j.states == 0 {
            return Err(WaError::Schema("an automaton needs at least one state".into()));
        }
        let tracks = j
            .tracks
            .unwrap_or_default()
            .iter()
            .map(|t| Var::from_name(t).ok_or_else(|| WaError::Schema(format!("invalid track '{t}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let alphabet = TrackAlphabet::new(ctx.alphabet.len(), tracks);
        let n = j.states;
        let state = |q: usize| {
            if q < n {
                Ok(q as u32)
            } else {
                Err(WaError::Schema(format!("state {q} out of range (states = {n})")))
            }
        };
        let mut a = WeightedAutomaton::new(alphabet, n);
        for t in &j.transitions {
            let letter = a.alphabet.parse_letter(&t.letter, &t.tracks.clone().unwrap_or_default(), ctx)?;
            let weight = ctx
                .weight(&t.weight)
                .ok_or_else(|| WaError::Schema(format!("unknown weight '{}'", t.weight)))?;
            a.add_transition(state(t.from)?, letter, state(t.to)?, weight);
        }
        a.initial = j.initial.iter().map(|q| state(*q)).collect::<Result<_, _>>()?;
        a.finals = j.r#final.iter().map(|q| state(*q)).collect::<Result<_, _>>()?;
        Ok(a)
    }
}

#[derive(Serialize, Deserialize)]
struct WaTransitionJson {
    from: usize,
    letter: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tracks: Option<BTreeMap<String, u8>>,
    to: usize,
    weight: String,
}

#[derive(Serialize, Deserialize)]
struct WaJson {
    states: usize,
    initial: Vec<usize>,
    #[serde(rename = "final")]
    r#final: Vec<usize>,
    alphabet: Vec<String>,
    weights: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tracks: Option<Vec<String>>,
    transitions: Vec<WaTransitionJson>,
}

/// A (word, weight string) on which the two automata disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaWitness {
    pub word: Vec<u32>,
    pub gamma: Vec<Weight>,
    pub count1: BigUint,
    pub count2: BigUint,
}

fn joint_weights(a1: &WeightedAutomaton, a2: &WeightedAutomaton) -> Vec<Weight> {
    a1.weights().union(&a2.weights()).copied().collect()
}

/// Compares the automata on every word of length 1..=n. Nodes are visited
/// breadth-first in (letter, weight) order; a node whose pair of counting
/// vectors has been seen before, or is zero, has nothing new below it. The
/// witness is the first disagreement in that order.
pub fn equiv_bounded(a1: &WeightedAutomaton, a2: &WeightedAutomaton, n: usize) -> Result<Option<WaWitness>, WaError> {
    if a1.alphabet != a2.alphabet {
        return Err(WaError::AlphabetMismatch);
    }
    let weights = joint_weights(a1, a2);
    let size = a1.alphabet.size() as u32;
    struct Node {
        v1: CountVector,
        v2: CountVector,
        word: Vec<u32>,
        gamma: Vec<Weight>,
    }
    let start = Node {
        v1: CountVector::indicator(a1.n_states, &a1.initial),
        v2: CountVector::indicator(a2.n_states, &a2.initial),
        word: Vec::new(),
        gamma: Vec::new(),
    };
    let mut seen: HashSet<(CountVector, CountVector)> = HashSet::new();
    seen.insert((start.v1.clone(), start.v2.clone()));
    let mut level = vec![start];
    for _ in 0..n {
        let mut next = Vec::new();
        for node in &level {
            for a in 0..size {
                for &r in &weights {
                    let v1 = a1.count_step(&node.v1, a, r);
                    let v2 = a2.count_step(&node.v2, a, r);
                    if v1.is_zero() && v2.is_zero() {
                        continue;
                    }
                    let mut word = node.word.clone();
                    word.push(a);
                    let mut gamma = node.gamma.clone();
                    gamma.push(r);
                    let (c1, c2) = (v1.sum_over(&a1.finals), v2.sum_over(&a2.finals));
                    if c1 != c2 {
                        return Ok(Some(WaWitness { word, gamma, count1: c1, count2: c2 }));
                    }
                    if seen.insert((v1.clone(), v2.clone())) {
                        next.push(Node { v1, v2, word, gamma });
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(None)
}

/// Rows in echelon form over the integers; each row is primitive (content
/// 1) and is zero at the pivots of the rows before it.
#[derive(Debug, Default)]
pub struct Echelon {
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl Echelon {
    pub fn new() -> Echelon {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` if it is independent of the rows over the rationals.
    pub fn insert(&mut self, v: &[BigInt]) -> bool {
        let mut c = v.to_vec();
        for (p, row) in &self.rows {
            if c[*p].is_zero() {
                continue;
            }
            let g = row[*p].gcd(&c[*p]);
            let (fr, fc) = (&row[*p] / &g, &c[*p] / &g);
            for (ci, ri) in c.iter_mut().zip(row) {
                if ri.is_zero() {
                    if !ci.is_zero() {
                        *ci *= &fr;
                    }
                } else {
                    *ci = &*ci * &fr - ri * &fc;
                }
            }
            normalize(&mut c);
        }
        match c.iter().position(|x| !x.is_zero()) {
            None => false,
            Some(p) => {
                if c[p].is_negative() {
                    c.iter_mut().for_each(|x| *x = -&*x);
                }
                self.rows.push((p, c));
                true
            }
        }
    }
}

fn normalize(c: &mut [BigInt]) {
    let g = c.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        c.iter_mut().for_each(|x| *x /= &g);
    }
}

/// Statistics of one run of the polynomial procedure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolyStats {
    /// Basis vectors whose extensions were computed.
    pub expanded: usize,
    /// Extensions tested against the final states.
    pub tested: usize,
    pub rank: usize,
}

/// Polynomial-time equivalence over joint counting vectors on Q1 ⊎ Q2.
///
/// Vectors are explored breadth-first from the initial vector and kept in
/// one basis over the rationals; only independent vectors are extended.
/// Every extension, dependent or not, is tested for differing F1- and
/// F2-sums, so the untested initial (ε) vector cannot hide a witness. A
/// counting vector of length k lies in the span of basis vectors found at
/// lengths ≤ k, hence the first witness is a shortest one.
pub fn equiv_poly(a1: &WeightedAutomaton, a2: &WeightedAutomaton) -> Result<Option<WaWitness>, WaError> {
    equiv_poly_stats(a1, a2).map(|(w, _)| w)
}

pub fn equiv_poly_stats(
    a1: &WeightedAutomaton,
    a2: &WeightedAutomaton,
) -> Result<(Option<WaWitness>, PolyStats), WaError> {
    if a1.alphabet != a2.alphabet {
        return Err(WaError::AlphabetMismatch);
    }
    let n1 = a1.n_states;
    let dim = n1 + a2.n_states;
    let weights = joint_weights(a1, a2);
    let size = a1.alphabet.size() as u32;

    // combined transition table indexed by (letter, weight)
    let mut table: HashMap<(u32, Weight), Vec<(usize, usize)>> = HashMap::new();
    for t in &a1.transitions {
        table.entry((t.letter, t.weight)).or_default().push((t.from as usize, t.to as usize));
    }
    for t in &a2.transitions {
        table.entry((t.letter, t.weight)).or_default().push((t.from as usize + n1, t.to as usize + n1));
    }
    let in_f1: Vec<usize> = a1.finals.iter().map(|q| *q as usize).collect();
    let in_f2: Vec<usize> = a2.finals.iter().map(|q| *q as usize + n1).collect();

    let mut start = vec![BigInt::zero(); dim];
    for q in &a1.initial {
        start[*q as usize] = BigInt::one();
    }
    for q in &a2.initial {
        start[*q as usize + n1] = BigInt::one();
    }
    let mut basis = Echelon::new();
    let mut stats = PolyStats::default();
    let mut queue: VecDeque<(Vec<BigInt>, Vec<u32>, Vec<Weight>)> = VecDeque::new();
    if basis.insert(&start) {
        queue.push_back((start, Vec::new(), Vec::new()));
    }
    while let Some((v, word, gamma)) = queue.pop_front() {
        stats.expanded += 1;
        for a in 0..size {
            for &r in &weights {
                let Some(edges) = table.get(&(a, r)) else { continue };
                let mut u = vec![BigInt::zero(); dim];
                for &(f, t) in edges {
                    if !v[f].is_zero() {
                        u[t] += &v[f];
                    }
                }
                if u.iter().all(|x| x.is_zero()) {
                    continue;
                }
                stats.tested += 1;
                let c1: BigInt = in_f1.iter().map(|q| &u[*q]).sum();
                let c2: BigInt = in_f2.iter().map(|q| &u[*q]).sum();
                let extend = |x: &Vec<u32>, y: &Vec<Weight>| {
                    let (mut w, mut g) = (x.clone(), y.clone());
                    w.push(a);
                    g.push(r);
                    (w, g)
                };
                if c1 != c2 {
                    let (w, g) = extend(&word, &gamma);
                    stats.rank = basis.rank();
                    let witness = WaWitness {
                        word: w,
                        gamma: g,
                        count1: c1.to_biguint().expect("counts are nonnegative"),
                        count2: c2.to_biguint().expect("counts are nonnegative"),
                    };
                    return Ok((Some(witness), stats));
                }
                if basis.rank() < dim && basis.insert(&u) {
                    let (w, g) = extend(&word, &gamma);
                    queue.push_back((u, w, g));
                }
            }
        }
    }
    stats.rank = basis.rank();
    Ok((None, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        Context::new(["a"], ["r", "s"], "r").unwrap()
    }

    /// Q={0,1}, (0,a,0,r), (0,a,1,s), (1,a,1,r), I={0}, F={1}.
    fn two_state(c: &Context) -> WeightedAutomaton {
        let (r, s) = (c.weight("r").unwrap(), c.weight("s").unwrap());
        let mut a = WeightedAutomaton::new(TrackAlphabet::new(1, vec![]), 2);
        a.add_transition(0, 0, 0, r);
        a.add_transition(0, 0, 1, s);
        a.add_transition(1, 0, 1, r);
        a.initial.insert(0);
        a.finals.insert(1);
        a
    }

    fn ms(c: &Context, items: &[&str]) -> WeightMultiset {
        let mut m = WeightMultiset::empty();
        for s in items {
            let w = s.chars().map(|ch| c.weight(&ch.to_string()).unwrap()).collect();
            m.add(w, BigUint::one()).unwrap();
        }
        m
    }

    #[test]
    fn reduce_merges_copies() {
        let c = ctx();
        let a = two_state(&c);
        let mut twice = a.disjoint_union(&a).unwrap();
        twice.initial = [0].into();
        twice.add_transition(0, 0, 3, c.weight("s").unwrap());
        let r = twice.reduce();
        assert!(r.n_states < twice.n_states);
        for n in 1..6 {
            let w = vec![0; n];
            assert_eq!(r.eval(&w).unwrap(), twice.eval(&w).unwrap());
        }
        // Parallel runs keep their multiplicity.
        assert_eq!(r.eval(&[0]).unwrap().count(&[c.weight("s").unwrap()]), BigUint::from(2u32));
    }

    #[test]
    fn eval_two_state() {
        let c = ctx();
        let a = two_state(&c);
        assert_eq!(a.eval(&[0, 0]).unwrap(), ms(&c, &["rs", "sr"]));
        assert_eq!(a.eval(&[0]).unwrap(), ms(&c, &["s"]));
        assert_eq!(a.eval(&[1]), Err(WaError::ForeignLetter(1)));
        let mut none = a.clone();
        none.finals.clear();
        assert!(none.eval(&[0, 0, 0]).unwrap().is_empty());
    }

    #[test]
    fn count_steps() {
        let c = ctx();
        let a = two_state(&c);
        let (r, s) = (c.weight("r").unwrap(), c.weight("s").unwrap());
        let v = CountVector::indicator(2, &a.initial);
        assert_eq!(a.count_step(&v, 0, r).0, vec![BigUint::one(), BigUint::zero()]);
        assert_eq!(a.count_step(&v, 0, s).0, vec![BigUint::zero(), BigUint::one()]);
        assert!(a.count_step(&CountVector::zero(2), 0, r).is_zero());
    }

    #[test]
    fn bounded_and_poly_agree_on_example() {
        let c = ctx();
        let a = two_state(&c);
        assert_eq!(equiv_bounded(&a, &a, 5).unwrap(), None);
        assert_eq!(equiv_poly(&a, &a).unwrap(), None);
        let mut b = a.clone();
        b.finals = BTreeSet::from([0]);
        let w = equiv_bounded(&a, &b, 1).unwrap().unwrap();
        assert_eq!(w.word, vec![0]);
        assert_eq!(w.gamma, vec![c.weight("r").unwrap()]);
        assert_eq!((w.count1.clone(), w.count2.clone()), (BigUint::zero(), BigUint::one()));
        assert_eq!(equiv_poly(&a, &b).unwrap(), Some(w));
    }

    #[test]
    fn dead_copy_is_equivalent() {
        let c = ctx();
        let a = two_state(&c);
        let mut dead = a.clone();
        dead.initial.clear();
        let u = a.disjoint_union(&dead).unwrap();
        assert_eq!(equiv_poly(&a, &u).unwrap(), None);
        assert_eq!(u.trim(), a.trim());
    }

    #[test]
    fn parallel_edges_count_twice() {
        let c = ctx();
        let r = c.weight("r").unwrap();
        let mut a = WeightedAutomaton::new(TrackAlphabet::new(1, vec![]), 1);
        a.add_transition(0, 0, 0, r);
        a.add_transition(0, 0, 0, r);
        a.initial.insert(0);
        a.finals.insert(0);
        assert_eq!(a.eval(&[0, 0]).unwrap().total(), BigUint::from(4u32));
    }

    #[test]
    fn echelon_detects_dependence() {
        let v = |xs: &[i64]| xs.iter().map(|x| BigInt::from(*x)).collect::<Vec<_>>();
        let mut e = Echelon::new();
        assert!(e.insert(&v(&[2, 4, 0])));
        assert!(!e.insert(&v(&[1, 2, 0])));
        assert!(e.insert(&v(&[0, 3, 1])));
        assert!(!e.insert(&v(&[2, 7, 1])));
        assert!(e.insert(&v(&[0, 0, 5])));
        assert_eq!(e.rank(), 3);
    }

    #[test]
    fn json_round_trip_and_schema() {
        let c = ctx();
        let a = two_state(&c);
        let j = a.to_json(&c);
        assert_eq!(WeightedAutomaton::from_json(&j, &c).unwrap(), a);
        let empty = WeightedAutomaton::empty(TrackAlphabet::new(1, vec![]));
        assert_eq!(WeightedAutomaton::from_json(&empty.to_json(&c), &c).unwrap(), empty);
        let bad = j.replace("\"to\":1", "\"to\":7");
        assert!(matches!(WeightedAutomaton::from_json(&bad, &c), Err(WaError::Schema(_))));
    }
}
