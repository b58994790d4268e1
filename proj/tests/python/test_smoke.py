"""The Python module exposes the main operations."""

import json
import math
import os
from pathlib import Path

import pytest

import crnscope

NETS = Path(os.environ.get("CRNSCOPE_NETWORK_DIR", Path(__file__).resolve().parents[2] / "networks"))


def eg7():
    return crnscope.load_network(str(NETS / "eg7.crn"))


def test_parse_and_analyze():
    net = crnscope.parse_network("E <-> EP ; kf = 1, kr = 2\nE + EP -> 2 EP ; k = 1\n")
    assert net.species == ["E", "EP"]
    assert net.num_reactions == 3
    assert net.rates == [1.0, 2.0, 1.0]
    rep = crnscope.analyze(net)
    assert rep["deficiency"] == 1
    assert rep["dimension"] == 1
    assert crnscope.parse_network(net.to_text()).fingerprint() == net.fingerprint()
    assert net.ode_rhs([1.0, 1.0]) == pytest.approx([0.0, 0.0], abs=1e-15)


def test_parse_error_is_value_error():
    with pytest.raises(crnscope.ParseError) as e:
        crnscope.parse_network("A -> B ; k = 1\nA + -> B\n")
    assert isinstance(e.value, ValueError)


def test_declared_equilibrium():
    text = (NETS / "auto4.crn").read_text()
    x = crnscope.declared_equilibrium(text)
    assert x[0] == pytest.approx((math.sqrt(3) - 1) / 2, rel=1e-15)
    assert crnscope.declared_equilibrium("A -> B ; k = 1\n") is None


def test_equilibrium_and_balance():
    x = crnscope.find_equilibrium(eg7(), [1.1, 0.9, 1.2, 0.8, 1.0], [3, 2, 2])
    assert x == pytest.approx([1.0] * 5, abs=1e-9)
    b = crnscope.balance(crnscope.parse_network("S1 <-> S2 ; kf = 1, kr = 2\n"), [2.0, 1.0])
    assert b["detailed"] is True
    assert b["complex_balanced"] is True


def test_certify_and_evaluate():
    dcmp = (NETS / "eg7.dcmp.json").read_text()
    report, cert = crnscope.certify(eg7(), [1.0] * 5, dcmp)
    assert report["result"] == "pass"
    assert cert.kind == "composite_cor47"
    assert cert.evaluate([1.0] * 5) == 0.0
    x = [1.1, 0.9, 1.0, 1.0, 0.9]
    assert cert.evaluate(x) == pytest.approx(0.012649528937015911, rel=1e-9)
    assert max(abs(g) for g in cert.gradient([1.0] * 5)) <= 1e-6
    assert cert.fdot(eg7(), x) < 0
    again = crnscope.certificate_from_json(cert.to_json())
    assert again.evaluate(x) == cert.evaluate(x)

    report, cert = crnscope.certify(crnscope.parse_network("S1 + 3 S2 -> 4 S2 ; k = 1\nS2 -> S1 ; k = 1\n"),
                                    [1.0, 1.0])
    assert cert is None
    assert report["exit_code"] == 1

    with pytest.raises(crnscope.InputError):
        crnscope.certify(eg7(), [1.0, 2.0, 1.0, 1.0, 1.0])


def test_decompose():
    cands = [json.loads(c) for c in crnscope.decompose(eg7(), [1.0] * 5)]
    splits = [sorted(tuple(p["reactions"]) for p in c["parts"]) for c in cands]
    assert sorted([(0, 1, 2, 3, 4), (5, 6, 7), (8, 9, 10), (11, 12, 13, 14)]) in splits


def test_simulate_and_perturb():
    net = eg7()
    pts = crnscope.sample_perturbations(net, [1.0] * 5, 0.1, 4, seed=3)
    assert pts == crnscope.sample_perturbations(net, [1.0] * 5, 0.1, 4, seed=3)
    for p in pts:
        assert sum(p) == pytest.approx(5.0, abs=1e-12)
    _, cert = crnscope.certify(net, [1.0] * 5, (NETS / "eg7.dcmp.json").read_text())
    tr = crnscope.simulate(net, pts[0], t_end=50.0, certificate=cert)
    assert not tr["halted"]
    assert len(tr["times"]) == 201
    assert max(abs(v - 1) for v in tr["states"][-1]) < 1e-4
    f = tr["lyapunov"]
    assert all(b <= a + 1e-8 for a, b in zip(f, f[1:]))
    assert tr["csv"].splitlines()[0] == "t,x_1,x_2,x_3,x_4,x_5,f"
    assert tr["conservation_drift"] <= 1e-7


def test_schema_version():
    assert crnscope.SCHEMA_VERSION == 1
