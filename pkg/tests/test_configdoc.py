import json

import pytest

from src.configdoc import SCHEMA, load_config, parse_config, reference
from src.errors import ConfigError
from src.lmo import Geometry, OpMethod
from src.optimizer import MethodClass

BASE = {
    "problem": {"name": "noisy_quadratic", "params": {"eigenvalues": [1, 4], "sigma": 0.5}},
    "method": {"class": "stochastic_lmo", "set": {"geometry": "euclidean", "radius": 1.0}, "schedule": "thm1"},
    "run": {"T": 128, "seeds": 3, "stride": 8},
}


def _doc(**overrides):
    data = json.loads(json.dumps(BASE))
    for section, value in overrides.items():
        data[section] = value
    return json.dumps(data, indent=2)


def test_parse_schedule_document():
    doc = parse_config(_doc())
    method, T = doc.single()
    assert T == 128 and doc.seeds == 3 and doc.stride == 8 and doc.seed == 0
    assert method.method is MethodClass.STOCHASTIC_LMO
    assert method.schedule == "thm1" and method.params is None
    assert method.lmo_set.geometry is Geometry.EUCLIDEAN
    assert method.label == "stochastic_lmo-thm1"
    config = doc.run_config(method, T)
    assert config.seeds == 3 and config.schedule == "thm1"
    assert doc.run_config(method, T, seeds=5).seeds == 5


def test_parse_explicit_igt_params_derives_transport_step():
    doc = parse_config(_doc(method={"class": "igt", "params": {"eta": 0.01, "beta1": 0.5, "beta2": 0.9}}))
    params = doc.methods[0].params
    assert params.eta2 == 0.01
    assert params.eta1 == pytest.approx(0.1)
    assert doc.methods[0].label == "igt-explicit"


def test_parse_method_list_and_horizon_list():
    doc = parse_config(_doc(
        method=[{"class": "stochastic_lmo", "schedule": "thm1"},
                {"class": "variance_reduced", "schedule": "cor1"},
                {"class": "igt", "schedule": "cor2",
                 "set": {"geometry": "operator_norm", "op_method": "newton_schulz"}}],
        run={"T": [64, 256, 1024]},
        problem={"name": "matrix_quadratic", "params": {"m": 3, "n": 2, "sigma": 0.1}},
    ))
    assert [m.method for m in doc.methods] == list(MethodClass)
    assert doc.horizons == [64, 256, 1024]
    assert doc.methods[2].lmo_set.op_method is OpMethod.NEWTON_SCHULZ
    with pytest.raises(ConfigError):
        doc.single()


def test_echo_is_json_ready():
    doc = parse_config(_doc(method={"class": "variance_reduced",
                                    "params": {"eta": 0.01, "beta1": 0.5, "beta2": 0.9,
                                               "alpha1": 0.5, "alpha2": 0.9}}))
    echo = doc.echo()
    assert json.loads(json.dumps(echo)) == echo
    assert echo["method"][0]["params"]["alpha2"] == 0.9


def test_unknown_key_names_field_and_line():
    text = _doc(method={"class": "stochastic_lmo", "schedule": "thm1", "sched": "cor4"})
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    err = excinfo.value
    assert err.field == "method.sched"
    assert err.line == text[:text.index('"sched"')].count("\n") + 1
    assert "line" in str(err)


def test_error_position_is_resolved_within_the_enclosing_block():
    text = _doc(method=[{"class": "stochastic_lmo", "params": {"eta": 0.1}},
                        {"class": "stochastic_lmo", "params": {"eta": 0.5, "lambda": 3.0}}])
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    err = excinfo.value
    assert err.field == "method[1].params"
    idx = text.rindex('"params"')
    assert err.line == text[:idx].count("\n") + 1
    assert err.column == idx - text.rfind("\n", 0, idx)


def test_missing_key_points_at_enclosing_object():
    text = _doc(run={"seeds": 2})
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    assert excinfo.value.field == "run.T"
    assert excinfo.value.line == text[:text.index('"run"')].count("\n") + 1


def test_invalid_json_reports_position():
    with pytest.raises(ConfigError) as excinfo:
        parse_config('{\n  "problem": ,\n}')
    assert excinfo.value.line == 2
    assert excinfo.value.column is not None


@pytest.mark.parametrize("overrides,field", [
    (dict(method={"class": "igt", "schedule": "thm1"}), "method.schedule"),
    (dict(method={"class": "stochastic_lmo", "params": {"eta": 0.5, "lambda": 3.0}}), "method.params"),
    (dict(method={"class": "stochastic_lmo"}), "method"),
    (dict(method={"class": "stochastic_lmo", "schedule": "thm1", "params": {"eta": 0.1}}), "method"),
    (dict(method={"class": "sgd", "schedule": "thm1"}), "method.class"),
    (dict(method={"class": "stochastic_lmo", "params": {"beta1": 0.5}}), "method.params"),
    (dict(method={"class": "stochastic_lmo", "schedule": "thm1", "set": {"radius": -1}}), "method.set"),
    (dict(problem={"name": "rosenbrock"}), "problem.name"),
    (dict(problem={"name": "noisy_quadratic", "params": {"eigenvalues": [1, -4]}}), "problem.params"),
    (dict(run={"T": 1}), "run.T"),
    (dict(run={"T": 100, "seeds": 0}), "run"),
    (dict(run={"T": "ten"}), "run.T"),
    (dict(run={"seeds": 2}), "run.T"),
])
def test_invalid_documents(overrides, field):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(_doc(**overrides))
    assert excinfo.value.field == field


def test_schedule_options_are_checked():
    doc = parse_config(_doc(method={"class": "stochastic_lmo", "schedule": "cor4",
                                    "schedule_options": {"beta": 0.9}}))
    assert doc.methods[0].schedule_options == {"beta": 0.9}
    with pytest.raises(ConfigError):
        parse_config(_doc(method={"class": "stochastic_lmo", "schedule": "cor4",
                                  "schedule_options": {"gamma": 0.9}}))


def test_load_config(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(_doc(output={"dir": str(tmp_path / "out")}), encoding="utf-8")
    assert load_config(path).output_dir == str(tmp_path / "out")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_reference_lists_every_key():
    text = reference()
    for section, keys in SCHEMA.items():
        assert f"[{section}]" in text
        for name in keys:
            assert name in text
