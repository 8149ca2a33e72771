//! Python bindings. Everything goes through a `Session`, which fixes the
//! alphabet and weight set; formulas, words and proofs are passed as text in
//! the same syntax the command line reads.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wmso::compiler::{compile_core, lift_step};
use wmso::mso_automata::{compile_mso, entails, TrackAlphabet};
use wmso::proof::{
    check_proof, decide_equality, normalize_plus, normalize_second, parse_proof, print_proof, synth_step_proof,
    CheckConfig,
};
use wmso::semantics::{eval, PointedWord, SemValue};
use wmso::syntax::{parse_any, parse_mso, print_core, Context, Core, Formula, Mso};
use wmso::weighted_automata::{equiv_poly, WeightedAutomaton};

type Res<T> = Result<T, String>;

/// Outcome of a proof check, as seen from Python.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub accepted: bool,
    pub reason: Option<String>,
    pub message: String,
}

/// Alphabet, weights and C17 cap shared by every call.
#[pyclass(module = "wmso_py", frozen)]
pub struct Session {
    ctx: Context,
    c17_cap: u64,
}

impl Session {
    pub fn create(alphabet: Vec<String>, weights: Vec<String>, default: &str, c17_cap: u64) -> Res<Session> {
        let ctx = Context::new(alphabet, weights, default).map_err(|e| e.to_string())?;
        Ok(Session { ctx, c17_cap })
    }

    fn formula(&self, text: &str) -> Res<Formula> {
        parse_any(text.trim(), &self.ctx).map_err(|e| e.to_string())
    }

    fn word(&self, text: &str) -> Res<PointedWord> {
        PointedWord::parse(text.trim(), &self.ctx).map_err(|e| e.to_string())
    }

    fn gamma(&self, gamma: &[String]) -> Res<Vec<Mso>> {
        gamma.iter().map(|g| parse_mso(g, &self.ctx).map_err(|e| format!("'{g}': {e}"))).collect()
    }

    fn letters(&self) -> usize {
        self.ctx.alphabet.len()
    }

    pub fn eval_value(&self, formula: &str, word: &str) -> Res<SemValue> {
        let f = self.formula(formula)?;
        eval(&f, &self.word(word)?).map_err(|e| e.to_string())
    }

    pub fn compile_json(&self, formula: &str) -> Res<String> {
        let f = self.formula(formula)?;
        let alpha = TrackAlphabet::canonical(self.letters(), f.free_vars());
        let e = |e: wmso::mso_automata::AutomatonError| e.to_string();
        Ok(match &f {
            Formula::Mso(m) => compile_mso(m, &alpha).map_err(e)?.to_json(&self.ctx),
            Formula::Step(st) => compile_core(&lift_step(st, &[]), &alpha).map_err(e)?.to_json(&self.ctx),
            Formula::Core(c) => compile_core(c, &alpha).map_err(e)?.to_json(&self.ctx),
        })
    }

    /// `None` when equal, else a separating pointed word.
    pub fn equiv_witness(&self, left: &str, right: &str, gamma: &[String]) -> Res<Option<String>> {
        let gamma = self.gamma(gamma)?;
        let (f1, f2) = (self.formula(left)?, self.formula(right)?);
        let found = match (&f1, &f2) {
            (Formula::Mso(a), Formula::Mso(b)) => entails(&gamma, &a.clone().iff(b.clone()), self.letters()).err(),
            (Formula::Step(a), Formula::Step(b)) => synth_step_proof(&gamma, a, b, self.letters()).err(),
            (Formula::Core(a), Formula::Core(b)) => {
                decide_equality(&gamma, a, b, self.letters()).map_err(|e| e.to_string())?
            }
            _ => return Err("both sides must be MSO, step or core formulas of the same layer".into()),
        };
        Ok(found.map(|w| w.display(&self.ctx)))
    }

    /// Weighted automata in the JSON format produced by `compile`.
    pub fn automata_witness(&self, left: &str, right: &str) -> Res<Option<String>> {
        let a1 = WeightedAutomaton::from_json(left, &self.ctx).map_err(|e| e.to_string())?;
        let a2 = WeightedAutomaton::from_json(right, &self.ctx).map_err(|e| e.to_string())?;
        let w = equiv_poly(&a1, &a2).map_err(|e| e.to_string())?;
        Ok(w.map(|w| a1.alphabet.decode(&w.word).display(&self.ctx)))
    }

    pub fn check(&self, proof: &str) -> Res<CheckOutcome> {
        let p = parse_proof(proof, &self.ctx).map_err(|e| e.to_string())?;
        Ok(match check_proof(&p, &self.ctx, &CheckConfig { c17_cap: self.c17_cap }) {
            Ok(()) => CheckOutcome { accepted: true, reason: None, message: p.concl.print(&self.ctx) },
            Err(r) => CheckOutcome { accepted: false, reason: Some(r.reason.kind().into()), message: r.to_string() },
        })
    }

    /// A proof text, or the counterexample word.
    pub fn prove(&self, left: &str, right: &str, gamma: &[String]) -> Res<Result<String, String>> {
        let gamma = self.gamma(gamma)?;
        match (self.formula(left)?, self.formula(right)?) {
            (Formula::Step(a), Formula::Step(b)) => Ok(synth_step_proof(&gamma, &a, &b, self.letters())
                .map(|p| print_proof(&p, &self.ctx))
                .map_err(|w| w.display(&self.ctx))),
            _ => Err("prove_step takes two step formulas".into()),
        }
    }

    pub fn normal_form(&self, formula: &str, form: &str) -> Res<(String, Vec<String>)> {
        let c: Core = match self.formula(formula)? {
            Formula::Core(c) => c,
            _ => return Err("normalize takes a core formula".into()),
        };
        let n = match form {
            "plus" => normalize_plus(&c).map_err(|e| e.to_string())?,
            "second" => normalize_second(&c),
            _ => return Err(format!("unknown normal form '{form}'; use 'plus' or 'second'")),
        };
        Ok((print_core(&n.formula, &self.ctx), n.trace.iter().map(|r| r.name().to_string()).collect()))
    }

    pub fn valid(&self, formula: &str, gamma: &[String]) -> Res<Option<String>> {
        let gamma = self.gamma(gamma)?;
        let m = parse_mso(formula.trim(), &self.ctx).map_err(|e| e.to_string())?;
        Ok(entails(&gamma, &m, self.letters()).err().map(|w| w.display(&self.ctx)))
    }
}

fn py_err(e: String) -> PyErr {
    PyValueError::new_err(e)
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (alphabet = vec!["a".to_string(), "b".to_string()], weights = vec!["0".to_string(), "1".to_string(), "2".to_string()], default = "0", c17_cap = 2))]
    fn py_new(alphabet: Vec<String>, weights: Vec<String>, default: &str, c17_cap: u64) -> PyResult<Session> {
        Session::create(alphabet, weights, default, c17_cap).map_err(py_err)
    }

    /// Value of a formula on a pointed word such as `"word=aba; x=2; X={1,3}"`:
    /// a bool, a weight name, or a dict from weight strings to multiplicities.
    fn eval<'py>(&self, py: Python<'py>, formula: &str, word: &str) -> PyResult<Bound<'py, PyAny>> {
        Ok(match self.eval_value(formula, word).map_err(py_err)? {
            SemValue::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
            SemValue::Weight(r) => self.ctx.weights.name(r).into_pyobject(py)?.into_any(),
            SemValue::Multiset(m) => {
                let d = PyDict::new(py);
                for (s, n) in m.iter() {
                    let key: Vec<&str> = s.iter().map(|r| self.ctx.weights.name(*r)).collect();
                    d.set_item(key.join("."), n.clone())?;
                }
                d.into_any()
            }
        })
    }

    /// Automaton JSON: a DFA for MSO formulas, a weighted automaton otherwise.
    fn compile(&self, formula: &str) -> PyResult<String> {
        self.compile_json(formula).map_err(py_err)
    }

    #[pyo3(signature = (left, right, gamma = Vec::new()))]
    fn equiv(&self, left: &str, right: &str, gamma: Vec<String>) -> PyResult<Option<String>> {
        self.equiv_witness(left, right, &gamma).map_err(py_err)
    }

    fn equiv_automata(&self, left: &str, right: &str) -> PyResult<Option<String>> {
        self.automata_witness(left, right).map_err(py_err)
    }

    /// `(accepted, reason_kind, message)`.
    fn check_proof(&self, proof: &str) -> PyResult<(bool, Option<String>, String)> {
        let o = self.check(proof).map_err(py_err)?;
        Ok((o.accepted, o.reason, o.message))
    }

    /// `(True, proof_text)` or `(False, counterexample_word)`.
    #[pyo3(signature = (left, right, gamma = Vec::new()))]
    fn prove_step(&self, left: &str, right: &str, gamma: Vec<String>) -> PyResult<(bool, String)> {
        Ok(match self.prove(left, right, &gamma).map_err(py_err)? {
            Ok(p) => (true, p),
            Err(w) => (false, w),
        })
    }

    #[pyo3(signature = (formula, form = "second"))]
    fn normalize(&self, formula: &str, form: &str) -> PyResult<(String, Vec<String>)> {
        self.normal_form(formula, form).map_err(py_err)
    }

    /// `None` if Γ entails the formula, else a countermodel.
    #[pyo3(signature = (formula, gamma = Vec::new()))]
    fn validity(&self, formula: &str, gamma: Vec<String>) -> PyResult<Option<String>> {
        self.valid(formula, &gamma).map_err(py_err)
    }
}

#[pymodule]
fn wmso_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Session>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        Session::create(vec!["a".into(), "b".into()], vec!["0".into(), "1".into(), "2".into()], "0", 2).unwrap()
    }

    #[test]
    fn eval_and_equiv() {
        let s = session();
        let v = s.eval_value("prod x. Pa(x) ? 1 : 0", "word=ab").unwrap();
        assert_eq!(v.display(&s.ctx), s.eval_value("prod y. Pb(y) ? 0 : 1", "word=ab").unwrap().display(&s.ctx));
        assert_eq!(s.equiv_witness("Pa(x) ? 1 : 0", "Pb(x) ? 0 : 1", &[]).unwrap(), None);
        assert!(s.equiv_witness("Pa(x) ? 1 : 0", "1", &[]).unwrap().is_some());
        assert!(s.equiv_witness("Pa(x)", "1", &[]).is_err());
    }

    #[test]
    fn proofs_round_trip_through_text() {
        let s = session();
        let p = s.prove("Pa(x) ? 1 : 0", "Pb(x) ? 0 : 1", &[]).unwrap().unwrap();
        let o = s.check(&p).unwrap();
        assert!(o.accepted, "{}", o.message);
        let bad = s.check(r#"(S3 :phi "exists x. Pa(x)" :concl "|- (exists x. Pa(x)) ? 1 : 0 ~~ 1")"#).unwrap();
        assert_eq!(bad.reason.as_deref(), Some("side_condition"));
    }

    #[test]
    fn automata_from_compile_compare() {
        let s = session();
        let a = s.compile_json("prod x. Pa(x) ? 1 : 0").unwrap();
        let b = s.compile_json("prod y. Pb(y) ? 0 : 1").unwrap();
        let c = s.compile_json("prod y. 1").unwrap();
        assert_eq!(s.automata_witness(&a, &b).unwrap(), None);
        assert!(s.automata_witness(&a, &c).unwrap().is_some());
    }

    #[test]
    fn normal_forms_and_validity() {
        let s = session();
        let (f, trace) = s.normal_form("prod x. 1 + prod y. 2", "second").unwrap();
        assert!(f.contains("sum"), "{f}");
        assert!(!trace.is_empty());
        assert!(s.normal_form("prod x. 1", "third").is_err());
        assert_eq!(s.valid("forall x. Pa(x) | Pb(x)", &[]).unwrap(), None);
        assert!(s.valid("exists x. Pa(x)", &[]).unwrap().is_some());
        assert_eq!(s.valid("exists x. Pa(x)", &["forall y. Pa(y)".into()]).unwrap(), None);
    }
}
