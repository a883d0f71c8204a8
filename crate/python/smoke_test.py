"""Smoke test for the pyhyml extension. Run with pytest or directly."""

from pathlib import Path

import pyhyml

DATA = Path(__file__).resolve().parent.parent / "data"


def read(name):
    return (DATA / name).read_text()


def m0():
    sig = pyhyml.Signature.parse(read("sigma0.sig"))
    return sig, pyhyml.Model.parse(sig, read("m0.model"))


def test_model_checking():
    sig, m = m0()
    p = pyhyml.Formula.parse(sig, read("p.formula"))
    assert p.sort == "s"
    assert m.satisfies(p, "a")
    assert not m.satisfies(p, "b")
    box_u = pyhyml.Formula.parse(sig, read("box-u.formula"))
    assert not m.valid(box_u)
    assert m.countermodel(box_u) == ("a", {"u": "d"})
    assert m.countermodel(pyhyml.Formula.parse(sig, read("excluded-middle.formula"))) is None


def test_round_trips():
    sig, m = m0()
    assert pyhyml.Model.parse(sig, m.render()).render() == m.render()
    assert pyhyml.Signature.parse(sig.render()).render() == sig.render()
    ml, rho = m.to_ml(read("g0.assign"))
    assert pyhyml.MLModel.parse(sig, ml.render()).render() == ml.render()
    assert rho == {"x": 0, "u": 0}


def test_matching_logic():
    sig, m = m0()
    ml, _ = m.to_ml()
    f = pyhyml.Formula.parse(sig, "(formula s (app f (svar u)))")
    assert ml.extension(f, {"u": 0}) == [0]
    assert ml.extension(f, {"u": 1}) == []
    assert ml.prop_equiv(f, {"u": 1})
    with pytest_raises(pyhyml.HymlError):
        pyhyml.Formula.parse(sig, "(formula s (prop nope))")


def test_sweeps():
    sig = pyhyml.Signature.fixture("sigma0")
    formulas, models, checks, disagreements = pyhyml.prop_equiv_sweep(sig, 1, 2)
    assert formulas > 0 and models > 0 and checks > 0
    assert disagreements == 0
    table = pyhyml.validate_axioms(pyhyml.Signature.fixture("sigma_poly"), samples=5, models=3)
    assert len(table) == 1 + 15 + 7
    assert all(failures == 0 for _, _, failures in table.values())


def test_proofs():
    sig = pyhyml.Signature.parse(read("sigma-poly.sig"))
    ok, steps, failure = pyhyml.check_proof(sig, read("proofs/accept/01-mp-chain.proof"))
    assert ok and steps > 0 and failure is None
    ok, _, failure = pyhyml.check_proof(sig, read("proofs/reject/01-q1-free.proof"))
    assert not ok and failure.startswith("step 1")
    model = pyhyml.Model.random(sig, seed=3)
    at = pyhyml.Formula.parse(sig, "(formula s (at (nom j) s (prop p)))")
    hybrid_valid, ml_valid = pyhyml.constants_check(model, at)[1:]
    assert hybrid_valid == ml_valid


class pytest_raises:
    """Minimal stand-in so the file also runs without pytest."""

    def __init__(self, exc):
        self.exc = exc

    def __enter__(self):
        return self

    def __exit__(self, kind, value, tb):
        assert kind is not None and issubclass(kind, self.exc), "expected an exception"
        return True


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
