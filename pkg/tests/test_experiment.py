import csv
import json

import pytest

from kdst.errors import ConfigError
from kdst.experiment import CSV_COLUMNS, ExperimentSpec, run_experiment
from kdst.generators import GENERATORS, generate, layered_dag
from kdst.graph import parse_instance, serialize_instance
from kdst.oracle import max_flow_value

from desk import diamond


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_diamond_family_is_canonical():
    assert generate("diamond-family", {"width": 2, "k": 2}, 0) == diamond()


def test_layered_determinism():
    a = generate("layered-dag", {"n": 10, "D": 3, "p": 0.4, "k": 2}, 7)
    assert a == generate("layered-dag", {"n": 10, "D": 3, "p": 0.4, "k": 2}, 7)
    assert a != generate("layered-dag", {"n": 10, "D": 3, "p": 0.4, "k": 2}, 8)


@pytest.mark.parametrize("name", sorted(GENERATORS))
@pytest.mark.parametrize("seed", range(5))
def test_generated_roundtrip_and_planting(name, seed):
    params = {"k": 2} if name != "path-family" else {}
    inst = generate(name, params, seed)
    assert parse_instance(serialize_instance(inst)) == inst
    pairs = [(u, v) for u, v, _ in inst.graph.edges]
    for t in inst.terminals:
        assert max_flow_value(inst.graph.vertex_count, pairs, inst.root, t) >= inst.k


@pytest.mark.parametrize("params", [{"n": 3, "D": 3, "k": 2}, {"p": 1.5}, {"bogus": 1}])
def test_generator_bounds(params):
    with pytest.raises(ConfigError):
        generate("layered-dag", params, 0)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"generator": "nope", "seeds": [1], "algorithms": ["kdst"]})
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"generator": "diamond-family", "seeds": [], "algorithms": ["kdst"]})
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"generator": "diamond-family", "seeds": [1], "algorithms": ["magic"]})
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({"generator": "diamond-family", "seeds": [1], "algorithms": ["kdst"], "x": 1})


def test_diamond_experiment_ratio_one(tmp_path):
    spec = ExperimentSpec(generator="diamond-family", seeds=[0], algorithms=["kdst", "exact"],
                          params={"width": 2, "k": 2}, output=str(tmp_path / "out"))
    out = rows(run_experiment(spec))
    assert [r["algorithm"] for r in out] == ["kdst", "exact"]
    assert all(float(r["ratio_lp"]) == 1.0 and float(r["ratio_opt"]) == 1.0 for r in out)
    assert list(out[0]) == CSV_COLUMNS
    transcript = json.loads((tmp_path / "out" / "runs" / "seed0_kdst.json").read_text())
    assert transcript["solution"] == [0, 1, 2, 3]


def test_failures_recorded_per_row(tmp_path):
    spec = ExperimentSpec(generator="diamond-family", seeds=[0], algorithms=["kdst", "dst"],
                          params={"width": 2, "k": 2}, output=str(tmp_path))
    out = rows(run_experiment(spec))
    assert out[0]["status"] == "ok" and out[1]["status"] == "error" and "k = 1" in out[1]["error"]


def test_layered_batch_ratio_bound(tmp_path):
    spec = ExperimentSpec(generator="layered-dag", seeds=list(range(30)), algorithms=["kdst"],
                          params={"n": 10, "D": 3, "p": 0.3, "k": 2}, output=str(tmp_path))
    for r in rows(run_experiment(spec)):
        assert r["status"] == "ok"
        assert float(r["ratio_lp"]) <= int(r["iterations"]) * 2 ** (3 - 2) + 1e-9


def test_rerun_is_byte_identical(tmp_path):
    base = dict(generator="cover-dag", seeds=list(range(6)), algorithms=["kdst", "baseline", "exact"],
                params={"k": 2})
    a = run_experiment(ExperimentSpec(**base, output=str(tmp_path / "a")))
    b = run_experiment(ExperimentSpec(**base, output=str(tmp_path / "b"), threads=3,
                                      rounding={"threads": 2}))
    assert a.read_bytes() == b.read_bytes()


def test_layered_dag_is_layered():
    from kdst.graph import is_layered_dag

    assert is_layered_dag(layered_dag(seed=3)) is not None
