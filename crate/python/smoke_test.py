"""Smoke test for the wmso_py extension.

Build and install first:
    pip install maturin
    pip install --no-build-isolation ./crates/python
then run `python3 python/smoke_test.py`.
"""

import wmso_py

s = wmso_py.Session(alphabet=["a", "b"], weights=["0", "1", "2"], default="0")

# core value is a multiset of weight strings
v = s.eval("sum x. prod y. (x <= y) ? 1 : 2", "word=aa")
assert v == {"1.1": 1, "2.1": 1}, v
assert s.eval("Pa(x) ? 1 : 2", "word=ab; x=2") == "2"
assert s.eval("exists x. Pb(x)", "word=ab") is True

assert s.equiv("Pa(x) ? 1 : 0", "Pb(x) ? 0 : 1") is None
w = s.equiv("prod x. 1 + prod y. 2", "prod x. 2")
assert w is not None and w.startswith("word="), w

ok, proof = s.prove_step("Pa(x) ? 1 : 0", "Pb(x) ? 0 : 1")
assert ok
accepted, reason, msg = s.check_proof(proof)
assert accepted, msg

accepted, reason, msg = s.check_proof('(S3 :phi "exists x. Pa(x)" :concl "|- (exists x. Pa(x)) ? 1 : 0 ~~ 1")')
assert not accepted and reason == "side_condition", msg
assert msg.endswith("word=b"), msg

ok, cex = s.prove_step("Pa(x) ? 1 : 0", "1")
assert not ok and cex.startswith("word="), cex

a = s.compile("prod x. Pa(x) ? 1 : 0")
b = s.compile("prod y. Pb(y) ? 0 : 1")
assert s.equiv_automata(a, b) is None
assert s.equiv_automata(a, s.compile("prod y. 1")) is not None

formula, trace = s.normalize("prod x. 1 + prod y. 2", form="second")
assert formula.startswith("sum"), formula
assert trace

assert s.validity("exists x. Pa(x)") is not None
assert s.validity("exists x. Pa(x)", gamma=["forall y. Pa(y)"]) is None

try:
    s.eval("prod x.", "word=a")
except ValueError:
    pass
else:
    raise AssertionError("parse error not raised")

print("smoke test ok")
