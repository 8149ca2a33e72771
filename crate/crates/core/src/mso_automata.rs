//! Finite automata over track-extended alphabets and the MSO compiler, plus
//! the derived formulas φ(Ψ,r), φ_{Ψ1,Ψ2} and Φ1 ≤_l Φ2.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::{PointedWord, Value};
use crate::syntax::{Context, Core, FreshNames, Letter, Mso, Step, Var, Weight};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("track alphabets differ")]
    AlphabetMismatch,
    #[error("variable '{0}' has no track")]
    Uncovered(Var),
    #[error("not in second normal form: {0}")]
    NotSecondNormalForm(String),
    #[error("schema violation: {0}")]
    Schema(String),
}

/// Σ × {0,1}^tracks. Extended letters are numbered `base << k | bits`, with
/// bit i carrying `tracks[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrackAlphabet {
    pub letters: usize,
    pub tracks: Vec<Var>,
}

impl TrackAlphabet {
    pub fn new(letters: usize, tracks: Vec<Var>) -> TrackAlphabet {
        TrackAlphabet { letters, tracks }
    }

    /// Tracks in canonical order.
    pub fn canonical(letters: usize, vars: impl IntoIterator<Item = Var>) -> TrackAlphabet {
        let set: BTreeSet<Var> = vars.into_iter().collect();
        TrackAlphabet::new(letters, set.into_iter().collect())
    }

    pub fn size(&self) -> usize {
        self.letters << self.tracks.len()
    }

    pub fn k(&self) -> usize {
        self.tracks.len()
    }

    pub fn encode_letter(&self, base: Letter, bits: u32) -> u32 {
        ((base.0 as u32) << self.k()) | bits
    }

    pub fn base(&self, l: u32) -> Letter {
        Letter((l >> self.k()) as u16)
    }

    pub fn bits(&self, l: u32) -> u32 {
        l & ((1u32 << self.k()) - 1)
    }

    pub fn bit(&self, l: u32, track: usize) -> bool {
        l >> track & 1 == 1
    }

    pub fn track_index(&self, v: &Var) -> Option<usize> {
        self.tracks.iter().position(|t| t == v)
    }

    pub fn with_track(&self, v: Var) -> TrackAlphabet {
        let mut tracks = self.tracks.clone();
        tracks.push(v);
        TrackAlphabet::new(self.letters, tracks)
    }

    pub fn without_track(&self, idx: usize) -> TrackAlphabet {
        let mut tracks = self.tracks.clone();
        tracks.remove(idx);
        TrackAlphabet::new(self.letters, tracks)
    }

    /// Maps a letter to the alphabet with track `idx` removed.
    pub fn erase_bit(&self, l: u32, idx: usize) -> u32 {
        let base = l >> self.k();
        let bits = self.bits(l);
        let low = bits & ((1 << idx) - 1);
        let high = bits >> (idx + 1);
        (base << (self.k() - 1)) | (high << idx) | low
    }

    pub fn covers(&self, vars: &BTreeSet<Var>) -> Result<(), AutomatonError> {
        match vars.iter().find(|v| self.track_index(v).is_none()) {
            Some(v) => Err(AutomatonError::Uncovered(v.clone())),
            None => Ok(()),
        }
    }

    /// Track encoding of a pointed word.
    pub fn encode(&self, pw: &PointedWord) -> Result<Vec<u32>, AutomatonError> {
        let mut out: Vec<u32> = pw.word.iter().map(|a| self.encode_letter(*a, 0)).collect();
        for (t, v) in self.tracks.iter().enumerate() {
            match pw.valuation.get(v) {
                Some(Value::Pos(i)) => out[i - 1] |= 1 << t,
                Some(Value::Set(s)) => {
                    for i in s {
                        out[i - 1] |= 1 << t;
                    }
                }
                None => return Err(AutomatonError::Uncovered(v.clone())),
            }
        }
        Ok(out)
    }

    /// Inverse of `encode` on well-formed words; a first-order track takes
    /// its first marked position.
    pub fn decode(&self, word: &[u32]) -> PointedWord {
        let mut pw = PointedWord::new(word.iter().map(|l| self.base(*l)).collect());
        for (t, v) in self.tracks.iter().enumerate() {
            let marked = word.iter().enumerate().filter(|(_, l)| self.bit(**l, t)).map(|(i, _)| i + 1);
            let value = if v.is_first() {
                Value::Pos(marked.take(1).next().unwrap_or(1))
            } else {
                Value::Set(marked.collect())
            };
            pw.valuation.insert(v.clone(), value);
        }
        pw
    }

    pub fn describe_letter(&self, l: u32, ctx: &Context) -> (String, BTreeMap<String, u8>) {
        let tracks = self
            .tracks
            .iter()
            .enumerate()
            .map(|(t, v)| (v.name().to_string(), self.bit(l, t) as u8))
            .collect();
        (ctx.alphabet.name(self.base(l)).to_string(), tracks)
    }

    pub fn parse_letter(
        &self,
        letter: &str,
        tracks: &BTreeMap<String, u8>,
        ctx: &Context,
    ) -> Result<u32, AutomatonError> {
        let base = ctx
            .letter(letter)
            .ok_or_else(|| AutomatonError::Schema(format!("unknown letter '{letter}'")))?;
        if tracks.len() != self.k() {
            return Err(AutomatonError::Schema(format!("expected {} track bits, got {}", self.k(), tracks.len())));
        }
        let mut bits = 0;
        for (name, b) in tracks {
            let idx = self
                .tracks
                .iter()
                .position(|v| v.name() == name)
                .ok_or_else(|| AutomatonError::Schema(format!("unknown track '{name}'")))?;
            match b {
                0 => {}
                1 => bits |= 1 << idx,
                _ => return Err(AutomatonError::Schema(format!("track bit must be 0 or 1, got {b}"))),
            }
        }
        Ok(self.encode_letter(base, bits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

/// Complete deterministic automaton; `delta[q * size + l]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    pub alphabet: TrackAlphabet,
    pub initial: u32,
    pub accepting: Vec<bool>,
    delta: Vec<u32>,
}

impl Dfa {
    pub fn from_parts(alphabet: TrackAlphabet, initial: u32, accepting: Vec<bool>, delta: Vec<u32>) -> Dfa {
        assert_eq!(delta.len(), accepting.len() * alphabet.size());
        Dfa { alphabet, initial, accepting, delta }
    }

    fn build(alphabet: &TrackAlphabet, n: usize, initial: u32, accepting: Vec<bool>, f: impl Fn(u32, u32) -> u32) -> Dfa {
        let size = alphabet.size();
        let mut delta = Vec::with_capacity(n * size);
        for q in 0..n as u32 {
            for l in 0..size as u32 {
                delta.push(f(q, l));
            }
        }
        Dfa { alphabet: alphabet.clone(), initial, accepting, delta }
    }

    pub fn n_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn next(&self, q: u32, l: u32) -> u32 {
        self.delta[q as usize * self.alphabet.size() + l as usize]
    }

    pub fn run(&self, word: &[u32]) -> u32 {
        word.iter().fold(self.initial, |q, l| self.next(q, *l))
    }

    pub fn accepts(&self, word: &[u32]) -> bool {
        self.accepting[self.run(word) as usize]
    }

    pub fn constant(alphabet: &TrackAlphabet, accept: bool) -> Dfa {
        Dfa::build(alphabet, 1, 0, vec![accept], |_, _| 0)
    }

    /// Words with exactly one 1 on track `t`.
    pub fn exactly_one(alphabet: &TrackAlphabet, t: usize) -> Dfa {
        Dfa::build(alphabet, 3, 0, vec![false, true, false], |q, l| match (q, alphabet.bit(l, t)) {
            (0, false) => 0,
            (0, true) | (1, false) => 1,
            _ => 2,
        })
    }

    pub fn complement(&self) -> Dfa {
        Dfa { accepting: self.accepting.iter().map(|a| !a).collect(), ..self.clone() }
    }

    pub fn product(&self, other: &Dfa, op: BoolOp) -> Result<Dfa, AutomatonError> {
        if self.alphabet != other.alphabet {
            return Err(AutomatonError::AlphabetMismatch);
        }
        let size = self.alphabet.size();
        let mut index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut pairs = vec![(self.initial, other.initial)];
        index.insert(pairs[0], 0);
        let mut delta = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (p, q) = pairs[i];
            for l in 0..size as u32 {
                let t = (self.next(p, l), other.next(q, l));
                let id = *index.entry(t).or_insert_with(|| {
                    pairs.push(t);
                    (pairs.len() - 1) as u32
                });
                delta.push(id);
            }
            i += 1;
        }
        let accepting = pairs
            .iter()
            .map(|&(p, q)| {
                let (a, b) = (self.accepting[p as usize], other.accepting[q as usize]);
                match op {
                    BoolOp::And => a && b,
                    BoolOp::Or => a || b,
                }
            })
            .collect();
        Ok(Dfa { alphabet: self.alphabet.clone(), initial: 0, accepting, delta }.minimize())
    }

    pub fn intersect(&self, other: &Dfa) -> Result<Dfa, AutomatonError> {
        self.product(other, BoolOp::And)
    }

    /// Unique minimal complete DFA, states numbered in BFS order.
    pub fn minimize(&self) -> Dfa {
        let outputs: Vec<u32> = self.accepting.iter().map(|a| *a as u32).collect();
        let (initial, delta, outs) = minimize_moore(self.alphabet.size(), self.initial, &self.delta, &outputs);
        Dfa {
            alphabet: self.alphabet.clone(),
            initial,
            accepting: outs.into_iter().map(|o| o == 1).collect(),
            delta,
        }
    }

    /// Erases track `t`; the result is nondeterministic.
    pub fn project(&self, t: usize) -> Nfa {
        let target = self.alphabet.without_track(t);
        let mut trans = vec![Vec::new(); self.n_states() * target.size()];
        for q in 0..self.n_states() as u32 {
            for l in 0..self.alphabet.size() as u32 {
                let e = self.alphabet.erase_bit(l, t);
                trans[q as usize * target.size() + e as usize].push(self.next(q, l));
            }
        }
        for ts in &mut trans {
            ts.sort_unstable();
            ts.dedup();
        }
        Nfa { alphabet: target, initial: vec![self.initial], accepting: self.accepting.clone(), trans }
    }

    /// Re-expresses the automaton over a larger track list; the new tracks
    /// are ignored.
    pub fn cylindrify(&self, target: &TrackAlphabet) -> Result<Dfa, AutomatonError> {
        if target.letters != self.alphabet.letters {
            return Err(AutomatonError::AlphabetMismatch);
        }
        let map: Vec<usize> = self
            .alphabet
            .tracks
            .iter()
            .map(|v| target.track_index(v).ok_or_else(|| AutomatonError::Uncovered(v.clone())))
            .collect::<Result<_, _>>()?;
        let project = |l: u32| {
            let mut bits = 0;
            for (i, j) in map.iter().enumerate() {
                if target.bit(l, *j) {
                    bits |= 1 << i;
                }
            }
            self.alphabet.encode_letter(target.base(l), bits)
        };
        Ok(Dfa::build(target, self.n_states(), self.initial, self.accepting.clone(), |q, l| {
            self.next(q, project(l))
        }))
    }

    /// Shortest nonempty accepted word, lexicographically least among those.
    pub fn shortest_accepted(&self) -> Option<Vec<u32>> {
        let n = self.n_states();
        let size = self.alphabet.size() as u32;
        // Nodes are states reached by nonempty words; parent links rebuild
        // the word. BFS with ordered letters finds the least word first.
        let mut parent: Vec<Option<(Option<u32>, u32)>> = vec![None; n];
        let mut queue = VecDeque::new();
        let visit = |q: u32, from: Option<u32>, l: u32, parent: &mut Vec<Option<(Option<u32>, u32)>>, queue: &mut VecDeque<u32>| -> Option<u32> {
            if parent[q as usize].is_none() {
                parent[q as usize] = Some((from, l));
                if self.accepting[q as usize] {
                    return Some(q);
                }
                queue.push_back(q);
            }
            None
        };
        let mut hit = None;
        for l in 0..size {
            if let Some(q) = visit(self.next(self.initial, l), None, l, &mut parent, &mut queue) {
                hit = Some(q);
                break;
            }
        }
        while hit.is_none() {
            let Some(p) = queue.pop_front() else { break };
            for l in 0..size {
                if let Some(q) = visit(self.next(p, l), Some(p), l, &mut parent, &mut queue) {
                    hit = Some(q);
                    break;
                }
            }
        }
        let mut q = hit?;
        let mut word = Vec::new();
        loop {
            let (from, l) = parent[q as usize].unwrap();
            word.push(l);
            match from {
                Some(p) => q = p,
                None => break,
            }
        }
        word.reverse();
        Some(word)
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_accepted().is_none()
    }

    /// Language equality on nonempty words.
    pub fn equivalent(&self, other: &Dfa) -> Result<bool, AutomatonError> {
        let diff = self.product(&other.complement(), BoolOp::And)?;
        let diff2 = other.product(&self.complement(), BoolOp::And)?;
        Ok(diff.is_empty() && diff2.is_empty())
    }

    pub fn to_json(&self, ctx: &Context) -> String {
        let mut transitions = Vec::new();
        for q in 0..self.n_states() as u32 {
            for l in 0..self.alphabet.size() as u32 {
                let (letter, tracks) = self.alphabet.describe_letter(l, ctx);
                transitions.push(FaTransition { from: q as usize, letter, tracks, to: self.next(q, l) as usize });
            }
        }
        let j = FaJson {
            states: self.n_states(),
            initial: vec![self.initial as usize],
            r#final: (0..self.n_states()).filter(|q| self.accepting[*q]).collect(),
            alphabet: ctx.alphabet.names().to_vec(),
            tracks: self.alphabet.tracks.iter().map(|v| v.name().to_string()).collect(),
            transitions,
        };
        serde_json::to_string(&j).expect("serializable")
    }

    pub fn from_json(text: &str, ctx: &Context) -> Result<Dfa, AutomatonError> {
        let nfa = Nfa::from_json(text, ctx)?;
        if nfa.initial.len() != 1 {
            return Err(AutomatonError::Schema("a DFA has exactly one initial state".into()));
        }
        let size = nfa.alphabet.size();
        let mut delta = Vec::with_capacity(nfa.accepting.len() * size);
        for ts in &nfa.trans {
            match ts.as_slice() {
                [t] => delta.push(*t),
                _ => return Err(AutomatonError::Schema("DFA transitions must be total and deterministic".into())),
            }
        }
        Ok(Dfa { alphabet: nfa.alphabet, initial: nfa.initial[0], accepting: nfa.accepting, delta })
    }
}

/// Moore-style partition refinement on the reachable part; returns states
/// renumbered in BFS order from the initial state.
pub fn minimize_moore(size: usize, initial: u32, delta: &[u32], outputs: &[u32]) -> (u32, Vec<u32>, Vec<u32>) {
    // reachable states, in BFS order
    let n = outputs.len();
    let mut order = vec![initial];
    let mut seen = vec![false; n];
    seen[initial as usize] = true;
    let mut i = 0;
    while i < order.len() {
        let q = order[i] as usize;
        for l in 0..size {
            let t = delta[q * size + l];
            if !seen[t as usize] {
                seen[t as usize] = true;
                order.push(t);
            }
        }
        i += 1;
    }
    let mut class = vec![u32::MAX; n];
    {
        let mut ids: HashMap<u32, u32> = HashMap::new();
        for &q in &order {
            let next = ids.len() as u32;
            class[q as usize] = *ids.entry(outputs[q as usize]).or_insert(next);
        }
    }
    let mut count = order.iter().map(|q| class[*q as usize]).max().map_or(0, |m| m + 1);
    loop {
        let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut new_class = vec![u32::MAX; n];
        let mut sig = Vec::with_capacity(size + 1);
        for &q in &order {
            sig.clear();
            sig.push(class[q as usize]);
            for l in 0..size {
                sig.push(class[delta[q as usize * size + l] as usize]);
            }
            let next = ids.len() as u32;
            new_class[q as usize] = *ids.entry(sig.clone()).or_insert(next);
        }
        let new_count = ids.len() as u32;
        class = new_class;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    // renumber classes in BFS order
    let mut renum = vec![u32::MAX; count as usize];
    let mut reps = Vec::new();
    let mut queue = VecDeque::from([initial]);
    renum[class[initial as usize] as usize] = 0;
    reps.push(initial);
    while let Some(q) = queue.pop_front() {
        for l in 0..size {
            let t = delta[q as usize * size + l];
            let c = class[t as usize] as usize;
            if renum[c] == u32::MAX {
                renum[c] = reps.len() as u32;
                reps.push(t);
                queue.push_back(t);
            }
        }
    }
    let mut new_delta = Vec::with_capacity(reps.len() * size);
    for &q in &reps {
        for l in 0..size {
            new_delta.push(renum[class[delta[q as usize * size + l] as usize] as usize]);
        }
    }
    let outs = reps.iter().map(|q| outputs[*q as usize]).collect();
    (0, new_delta, outs)
}

/// Nondeterministic automaton; `trans[q * size + l]` lists successors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub alphabet: TrackAlphabet,
    pub initial: Vec<u32>,
    pub accepting: Vec<bool>,
    pub trans: Vec<Vec<u32>>,
}

impl Nfa {
    pub fn n_states(&self) -> usize {
        self.accepting.len()
    }

    /// Subset construction followed by minimization.
    pub fn determinize(&self) -> Dfa {
        let size = self.alphabet.size();
        let n = self.n_states();
        let mut start: Vec<u32> = self.initial.clone();
        start.sort_unstable();
        start.dedup();
        let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut subsets = vec![start.clone()];
        index.insert(start, 0);
        let mut delta = Vec::new();
        let mut mark = vec![false; n];
        let mut i = 0;
        while i < subsets.len() {
            for l in 0..size {
                let mut t = Vec::new();
                for &q in &subsets[i] {
                    for &r in &self.trans[q as usize * size + l] {
                        if !mark[r as usize] {
                            mark[r as usize] = true;
                            t.push(r);
                        }
                    }
                }
                for &r in &t {
                    mark[r as usize] = false;
                }
                t.sort_unstable();
                let id = match index.get(&t) {
                    Some(id) => *id,
                    None => {
                        let id = subsets.len() as u32;
                        index.insert(t.clone(), id);
                        subsets.push(t);
                        id
                    }
                };
                delta.push(id);
            }
            i += 1;
        }
        let accepting = subsets.iter().map(|s| s.iter().any(|q| self.accepting[*q as usize])).collect();
        Dfa { alphabet: self.alphabet.clone(), initial: 0, accepting, delta }.minimize()
    }

    /// `None` when no nonempty word is accepted, else the canonical witness.
    pub fn is_empty(&self) -> Option<Vec<u32>> {
        self.determinize().shortest_accepted()
    }

    pub fn to_json(&self, ctx: &Context) -> String {
        let size = self.alphabet.size();
        let mut transitions = Vec::new();
        for q in 0..self.n_states() {
            for l in 0..size {
                for &t in &self.trans[q * size + l] {
                    let (letter, tracks) = self.alphabet.describe_letter(l as u32, ctx);
                    transitions.push(FaTransition { from: q, letter, tracks, to: t as usize });
                }
            }
        }
        let j = FaJson {
            states: self.n_states(),
            initial: self.initial.iter().map(|q| *q as usize).collect(),
            r#final: (0..self.n_states()).filter(|q| self.accepting[*q]).collect(),
            alphabet: ctx.alphabet.names().to_vec(),
            tracks: self.alphabet.tracks.iter().map(|v| v.name().to_string()).collect(),
            transitions,
        };
        serde_json::to_string(&j).expect("serializable")
    }

    pub fn from_json(text: &str, ctx: &Context) -> Result<Nfa, AutomatonError> {
        let j: FaJson = serde_json::from_str(text).map_err(|e| AutomatonError::Schema(e.to_string()))?;
        if j.alphabet != ctx.alphabet.names() {
            return Err(AutomatonError::Schema("alphabet differs from the session".into()));
        }
        let tracks = j
            .tracks
            .iter()
            .map(|t| Var::from_name(t).ok_or_else(|| AutomatonError::Schema(format!("invalid track '{t}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let alphabet = TrackAlphabet::new(ctx.alphabet.len(), tracks);
        let n = j.states;
        let check = |q: usize| {
            if q < n {
                Ok(q as u32)
            } else {
                Err(AutomatonError::Schema(format!("state {q} out of range")))
            }
        };
        let size = alphabet.size();
        let mut trans = vec![Vec::new(); n * size];
        for t in &j.transitions {
            let l = alphabet.parse_letter(&t.letter, &t.tracks, ctx)?;
            let (from, to) = (check(t.from)?, check(t.to)?);
            trans[from as usize * size + l as usize].push(to);
        }
        let mut accepting = vec![false; n];
        for q in &j.r#final {
            accepting[check(*q)? as usize] = true;
        }
        let initial = j.initial.iter().map(|q| check(*q)).collect::<Result<_, _>>()?;
        Ok(Nfa { alphabet, initial, accepting, trans })
    }
}

#[derive(Serialize, Deserialize)]
struct FaTransition {
    from: usize,
    letter: String,
    #[serde(default)]
    tracks: BTreeMap<String, u8>,
    to: usize,
}

#[derive(Serialize, Deserialize)]
struct FaJson {
    states: usize,
    initial: Vec<usize>,
    #[serde(rename = "final")]
    r#final: Vec<usize>,
    alphabet: Vec<String>,
    #[serde(default)]
    tracks: Vec<String>,
    transitions: Vec<FaTransition>,
}

// ---------------------------------------------------------------------------
// MSO compiler

type CacheKey = (Mso, TrackAlphabet);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<Dfa>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<Dfa>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

const CACHE_LIMIT: usize = 4096;

fn cached(key: CacheKey, build: impl FnOnce(&CacheKey) -> Dfa) -> Dfa {
    if let Some(d) = cache().read().unwrap().get(&key) {
        return (**d).clone();
    }
    let d = build(&key);
    let mut w = cache().write().unwrap();
    if w.len() >= CACHE_LIMIT {
        w.clear();
    }
    w.insert(key, Arc::new(d.clone()));
    d
}

/// Minimal DFA over `alphabet` whose language, restricted to well-formed
/// encodings, is the set of models of `phi`.
pub fn compile_mso(phi: &Mso, alphabet: &TrackAlphabet) -> Result<Dfa, AutomatonError> {
    alphabet.covers(&phi.free_vars())?;
    Ok(cached((phi.clone(), alphabet.clone()), |(phi, alphabet)| compile_rec(phi, alphabet)))
}

fn compile_rec(phi: &Mso, alpha: &TrackAlphabet) -> Dfa {
    let idx = |v: &Var| alpha.track_index(v).expect("tracks cover free variables");
    match phi {
        Mso::True => Dfa::constant(alpha, true),
        Mso::Letter(a, x) => {
            let t = idx(x);
            let a = *a;
            Dfa::build(alpha, 3, 0, vec![false, true, false], |q, l| match (q, alpha.bit(l, t)) {
                (0, false) => 0,
                (0, true) if alpha.base(l) == a => 1,
                (1, false) => 1,
                _ => 2,
            })
            .minimize()
        }
        Mso::Le(x, y) if x == y => Dfa::exactly_one(alpha, idx(x)),
        Mso::Le(x, y) => {
            let (tx, ty) = (idx(x), idx(y));
            // 0: nothing seen, 1: x seen, 2: both seen in order, 3: sink
            Dfa::build(alpha, 4, 0, vec![false, false, true, false], |q, l| {
                match (q, alpha.bit(l, tx), alpha.bit(l, ty)) {
                    (0, false, false) => 0,
                    (0, true, false) => 1,
                    (0, true, true) => 2,
                    (1, false, false) => 1,
                    (1, false, true) => 2,
                    (2, false, false) => 2,
                    _ => 3,
                }
            })
            .minimize()
        }
        Mso::In(x, set) => {
            let (tx, ts) = (idx(x), idx(set));
            Dfa::build(alpha, 3, 0, vec![false, true, false], |q, l| match (q, alpha.bit(l, tx)) {
                (0, false) => 0,
                (0, true) if alpha.bit(l, ts) => 1,
                (1, false) => 1,
                _ => 2,
            })
            .minimize()
        }
        Mso::Not(a) => compile_rec(a, alpha).complement(),
        Mso::And(a, b) => compile_rec(a, alpha)
            .product(&compile_rec(b, alpha), BoolOp::And)
            .expect("same alphabet"),
        Mso::Forall(v, body) => {
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
            cached((Mso::forall(v.clone(), body.clone()), alpha.clone()), |_| {
                let mut counter = compile_rec(&body, &ext).complement();
                if v.is_first() {
                    counter = counter.intersect(&Dfa::exactly_one(&ext, t)).expect("same alphabet");
                }
                counter.project(t).determinize().complement()
            })
        }
    }
}

/// Intersects with "exactly one 1" on every first-order track.
pub fn well_formed(d: &Dfa) -> Dfa {
    let mut out = d.clone();
    for (t, v) in d.alphabet.tracks.iter().enumerate() {
        if v.is_first() {
            out = out.intersect(&Dfa::exactly_one(&d.alphabet, t)).expect("same alphabet");
        }
    }
    out
}

/// DFA for well-formed encodings only.
pub fn well_formed_dfa(alphabet: &TrackAlphabet) -> Dfa {
    well_formed(&Dfa::constant(alphabet, true))
}

/// Satisfiability over the canonical tracks of the free variables. The
/// witness is a shortest model, least in extended-letter order.
pub fn mso_sat(phi: &Mso, letters: usize) -> Option<PointedWord> {
    let alpha = TrackAlphabet::canonical(letters, phi.free_vars());
    mso_sat_over(phi, &alpha).expect("canonical tracks cover free variables")
}

pub fn mso_sat_over(phi: &Mso, alphabet: &TrackAlphabet) -> Result<Option<PointedWord>, AutomatonError> {
    let d = well_formed(&compile_mso(phi, alphabet)?);
    Ok(d.shortest_accepted().map(|w| alphabet.decode(&w)))
}

pub fn mso_valid(phi: &Mso, letters: usize) -> bool {
    mso_sat(&phi.clone().not(), letters).is_none()
}

/// Γ ⊨ φ, decided as unsatisfiability of ⋀Γ ∧ ¬φ. On failure returns the
/// countermodel.
pub fn entails(gamma: &[Mso], phi: &Mso, letters: usize) -> Result<(), PointedWord> {
    let f = Mso::conj(gamma.iter().cloned()).and(phi.clone().not());
    match mso_sat(&f, letters) {
        None => Ok(()),
        Some(w) => Err(w),
    }
}

// ---------------------------------------------------------------------------
// Derived formulas

/// φ(Ψ, r): holds exactly where Ψ evaluates to r.
pub fn build_phi_step(psi: &Step, r: Weight) -> Mso {
    match psi {
        Step::Weight(s) if *s == r => Mso::True,
        Step::Weight(_) => Mso::bot(),
        Step::Cond(phi, a, b) => phi
            .clone()
            .and(build_phi_step(a, r))
            .or(phi.clone().not().and(build_phi_step(b, r))),
    }
}

/// φ_{Ψ1,Ψ2}: the two steps agree at the current position.
pub fn build_prod_eq(psi1: &Step, psi2: &Step) -> Mso {
    let common: Vec<Weight> = psi1.weights().intersection(&psi2.weights()).copied().collect();
    if common.is_empty() {
        return Mso::bot();
    }
    Mso::disj(
        common
            .into_iter()
            .map(|r| build_phi_step(psi1, r).and(build_phi_step(psi2, r))),
    )
}

/// Σ_{v1}…Σ_{vk} (φ ? Π_x Ψ : 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecondNormalForm {
    pub vars: Vec<Var>,
    pub guard: Mso,
    pub x: Var,
    pub psi: Step,
}

impl SecondNormalForm {
    pub fn of(phi: &Core) -> Result<SecondNormalForm, AutomatonError> {
        let mut vars = Vec::new();
        let mut cur = phi;
        while let Core::Sum(v, body) = cur {
            vars.push(v.clone());
            cur = body;
        }
        match cur {
            Core::Cond(guard, a, b) if **b == Core::Zero => match a.as_ref() {
                Core::Prod(x, psi) => Ok(SecondNormalForm { vars, guard: guard.clone(), x: x.clone(), psi: psi.clone() }),
                _ => Err(AutomatonError::NotSecondNormalForm("expected a product under the guard".into())),
            },
            _ => Err(AutomatonError::NotSecondNormalForm("expected sums around 'φ ? prod x. Ψ : zero'".into())),
        }
    }

    pub fn to_core(&self) -> Core {
        let mut c = Core::cond(self.guard.clone(), Core::Prod(self.x.clone(), self.psi.clone()), Core::Zero);
        for v in self.vars.iter().rev() {
            c = Core::sum(v.clone(), c);
        }
        c
    }
}

fn member(u: &Var, z: &Var) -> Mso {
    if u.is_first() {
        Mso::eq(z.clone(), u.clone())
    } else {
        Mso::In(z.clone(), u.clone())
    }
}

/// X⃗ ≠ Y⃗ as ∃z. ⋁ᵢ (Xᵢ(z) ∧ ¬Yᵢ(z)) ∨ (¬Xᵢ(z) ∧ Yᵢ(z)).
fn vectors_differ(xs: &[Var], ys: &[Var], names: &mut FreshNames) -> Mso {
    if xs.is_empty() {
        return Mso::bot();
    }
    let z = names.fresh(&Var::first("z"));
    let body = Mso::disj(xs.iter().zip(ys).map(|(x, y)| {
        member(x, &z)
            .and(member(y, &z).not())
            .or(member(x, &z).not().and(member(y, &z)))
    }));
    Mso::exists(z, body)
}

fn rename_all_mso(m: &Mso, from: &[Var], to: &[Var]) -> Mso {
    from.iter().zip(to).fold(m.clone(), |acc, (f, t)| acc.rename_free(f, t))
}

fn rename_all_step(s: &Step, from: &[Var], to: &[Var]) -> Step {
    from.iter().zip(to).fold(s.clone(), |acc, (f, t)| acc.rename_free(f, t))
}

/// ∀p. ⋀_{r∈R} φ(Ψa,r) ↔ φ(Ψb,r), with R the weights of Ψa.
fn same_values(psi_a: &Step, psi_b: &Step, p: &Var) -> Mso {
    let body = Mso::conj(
        psi_a
            .weights()
            .into_iter()
            .map(|r| build_phi_step(psi_a, r).iff(build_phi_step(psi_b, r))),
    );
    Mso::forall(p.clone(), body)
}

/// Φ1 ≤_l Φ2 for second-normal-form arguments.
///
/// At m = 1 the pairwise conjunctions are empty, so the guard φ(X⃗¹) would
/// vanish with them; it is kept as a separate conjunct there. For m ≥ 2 the
/// blocks are exactly the pairwise form.
pub fn build_leq_formula(phi1: &Core, phi2: &Core, l: usize) -> Result<Mso, AutomatonError> {
    assert!(l >= 1, "l must be positive");
    let f1 = SecondNormalForm::of(phi1)?;
    let f2 = SecondNormalForm::of(phi2)?;
    let mut names = FreshNames::avoiding(phi1.vars().iter().chain(phi2.vars().iter()));
    let p = names.fresh(&Var::first("p"));
    let psi1 = f1.psi.rename_free(&f1.x, &p);
    let psi2 = f2.psi.rename_free(&f2.x, &p);

    let mut blocks = Vec::new();
    for m in 1..=l {
        let xs: Vec<Vec<Var>> = (0..m).map(|_| f1.vars.iter().map(|v| names.fresh(v)).collect()).collect();
        let ys: Vec<Vec<Var>> = (0..m).map(|_| f2.vars.iter().map(|v| names.fresh(v)).collect()).collect();
        let g1 = |i: usize| rename_all_mso(&f1.guard, &f1.vars, &xs[i]);
        let g2 = |i: usize| rename_all_mso(&f2.guard, &f2.vars, &ys[i]);
        let s1 = |i: usize| rename_all_step(&psi1, &f1.vars, &xs[i]);
        let s2 = |i: usize| rename_all_step(&psi2, &f2.vars, &ys[i]);
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).filter(move |j| *j != i).map(move |j| (i, j))).collect();

        let mut distinct_x = Vec::new();
        let mut distinct_y = Vec::new();
        let mut same_x = Vec::new();
        let mut same_y = Vec::new();
        for &(i, j) in &pairs {
            distinct_x.push(vectors_differ(&xs[i], &xs[j], &mut names).and(g1(i)));
            distinct_y.push(vectors_differ(&ys[i], &ys[j], &mut names).and(g2(i)));
            same_x.push(g1(i).and(same_values(&s1(i), &s1(j), &p)));
            same_y.push(g2(i).and(same_values(&s2(i), &s2(j), &p)));
        }
        if m == 1 {
            distinct_x.push(g1(0));
            distinct_y.push(g2(0));
            same_x.push(g1(0));
            same_y.push(g2(0));
        }
        let first = Mso::conj(distinct_x).implies(Mso::conj(distinct_y));
        let matched = Mso::conj(same_y).and(same_values(&s1(0), &s2(0), &p));
        let second = Mso::conj(same_x).implies(matched);
        let mut block = first.and(second);
        for v in ys.iter().flatten().rev() {
            block = Mso::exists(v.clone(), block);
        }
        for v in xs.iter().flatten().rev() {
            block = Mso::forall(v.clone(), block);
        }
        blocks.push(block);
    }
    Ok(Mso::conj(blocks))
}
