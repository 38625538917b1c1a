import itertools
import json
import math

import numpy as np
import pytest

import lmselect as m


def test_version():
    assert isinstance(m.__version__, str) and m.__version__


def test_criterion_names():
    assert m.criterion_names == ["BIC", "AIC", "AIC3", "CAIC", "NEC", "NEC1", "NEC2", "CLC", "ICL-BIC"]


def test_scenario_shapes():
    spec, params = m.scenario(1, 1, 250)
    assert (spec.states, spec.occasions, spec.responses) == (2, 5, 1)
    assert spec.n_free_parameters == 5
    assert params.validate(spec) == []
    np.testing.assert_allclose(params.initial.sum(), 1.0)


def test_manifest_probabilities_sum_to_one():
    spec, params = m.scenario(1, 1, 250)
    total = sum(math.exp(m.log_manifest_probability(params, spec, list(y))) for y in itertools.product([0, 1], repeat=5))
    assert abs(total - 1.0) < 1e-10


def test_posteriors_are_distributions():
    spec, params = m.scenario(2, 2, 250)
    marginal, conditional = m.posteriors(params, spec, [0, 1] * 5)
    assert marginal.shape == (2, 5)
    np.testing.assert_allclose(marginal.sum(axis=0), np.ones(5))
    assert len(conditional) == 4
    assert m.entropy(params, spec, [0, 1] * 5) <= m.entropy(params, spec, [0, 1] * 5, kind="EN1") + 1e-12


def test_simulate_is_reproducible():
    a = m.simulate(1, 1, 250, replicate=3)
    b = m.simulate(1, 1, 250, replicate=3)
    assert len(a) == 250
    assert a.entries() == b.entries()


def test_fit_and_select():
    spec, _ = m.scenario(1, 3, 250)
    data = m.simulate(1, 3, 250)
    res = m.fit(spec, data, starts=2)
    assert res.converged
    assert all(b >= a - 1e-8 for a, b in zip(res.trace, res.trace[1:]))
    assert res.log_likelihood == pytest.approx(m.log_likelihood(res.params, spec, data))

    out = m.select(data, spec, k_max=3, starts=1, screen_iterations=20)
    assert set(out["selected"]) == set(m.criterion_names)
    for row in out["values"]:
        assert row["ICL-BIC"] - row["BIC"] == pytest.approx(2 * row["EN"], abs=1e-9)
        assert row["CAIC"] - row["BIC"] == pytest.approx(row["n_params"])
    assert out["values"][0]["EN"] == 0.0 and out["values"][0]["NEC"] == 1.0


def test_parameters_json_round_trip():
    spec, params = m.scenario(4, 1, 500)
    spec2, params2 = m.parameters_from_json(params.to_json(spec))
    assert spec2.states == 3
    np.testing.assert_array_equal(params2.transitions[0], params.transitions[0])


def test_errors():
    with pytest.raises(ValueError):
        m.ModelSpec(0, 5, [2])
    with pytest.raises(m.DataError):
        m.parameters_from_json(json.dumps({"states": 2}))
    spec, params = m.scenario(1, 1, 250)
    params = m.Parameters(params.initial, params.transitions, [[np.array([[1.0, 0.0], [1.0, 0.0]])]])
    with pytest.raises(m.ZeroProbabilityPattern):
        m.posteriors(params, spec, [1, 1, 1, 1, 1])
    assert issubclass(m.DataError, m.LMError)


def test_read_dataset(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("id,y1_t1,y1_t2\n1,0,1\n2,0,1\n3,1,1\n")
    d = m.read_dataset(str(path))
    assert (d.responses, d.occasions, len(d)) == (1, 2, 3)
    bad = tmp_path / "bad.csv"
    bad.write_text("id,y1_t1,y1_t2\n1,0,x\n")
    with pytest.raises(m.DataError, match="line 2"):
        m.read_dataset(str(bad))
