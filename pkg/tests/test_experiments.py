import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
import yaml

from conformal_decision import experiments as ex
from conformal_decision.experiments import SpecError, load_spec, parse_spec, parse_trace, recompute, run


def _spec(**over):
    base = {"environment": "factory", "methods": ["cc", "oracle_loss"], "seeds": [0, 1], "horizon": 200}
    base.update(over)
    return parse_spec(base)


def test_two_methods_two_seeds_give_four_traces_and_a_summary(tmp_path):
    report = run(_spec(), output_dir=tmp_path)
    traces = sorted(p.name for p in (tmp_path / "traces").iterdir())
    assert traces == [
        "factory_cc_seed0.csv",
        "factory_cc_seed1.csv",
        "factory_oracle_loss_seed0.csv",
        "factory_oracle_loss_seed1.csv",
    ]
    assert report.failed == 0
    assert [r[:4] for r in report.rows] == [["cc", "", 2, 0], ["oracle_loss", "", 2, 0]]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert [r["method"] for r in summary["rows"]] == ["cc", "oracle_loss"]
    assert summary["failures"] == []


def test_trace_header_and_columns(tmp_path):
    run(_spec(methods=["cc"], seeds=[3]), output_dir=tmp_path)
    text = (tmp_path / "traces" / "factory_cc_seed3.csv").read_text()
    first = text.splitlines()[0]
    assert first.startswith("# seed=3 stream=philox/factory/cc environment=factory method=cc")
    meta, columns, data = parse_trace(text)
    assert columns == ("t", "lambda", "speed", "n_items", "loss", "utility", "risk")
    assert list(data["t"][:3]) == [1, 2, 3] and len(data["t"]) == 200


def test_invalid_epsilon_names_the_field_and_writes_nothing(tmp_path):
    p = tmp_path / "spec.yaml"
    out = tmp_path / "out"
    p.write_text(yaml.safe_dump({"environment": "factory", "methods": ["cc"], "seeds": [0], "epsilon": 1.5, "output_dir": str(out)}))
    with pytest.raises(SpecError) as info:
        load_spec(p)
    assert info.value.field == "epsilon"
    assert "1.5" in str(info.value)
    assert not out.exists()


@pytest.mark.parametrize(
    "over, field",
    [
        ({"environment": "moon"}, "environment"),
        ({"methods": ["cc", "psychic"]}, "methods"),
        ({"foo": 1}, "foo"),
        ({"seeds": "many"}, "seeds"),
        ({"seeds": {"base": 0, "count": 0}}, "seeds"),
        ({"eta": "fast"}, "eta"),
        ({"sweep": {"eta": [0.1, -1.0]}}, "sweep.eta"),
    ],
)
def test_validation_errors_name_the_field(over, field):
    with pytest.raises(SpecError) as info:
        _spec(**over)
    assert info.value.field == field


def test_yaml_syntax_error_reports_line(tmp_path):
    p = tmp_path / "spec.yaml"
    p.write_text("environment: factory\nmethods: [cc\nseeds: [0]\n")
    with pytest.raises(SpecError, match=r"spec\.yaml:3: malformed"):
        load_spec(p)


def test_seed_range_form():
    assert _spec(seeds={"base": 10, "count": 3}).seeds == (10, 11, 12)


def test_sweep_cells_and_trace_names(tmp_path):
    spec = _spec(methods=["cc"], seeds=[0], sweep={"eta": [0.01, 0.1]})
    assert spec.cells() == [("cc", {"eta": 0.01}, 0), ("cc", {"eta": 0.1}, 0)]
    report = run(spec, output_dir=tmp_path)
    assert (tmp_path / "traces" / "factory_cc_eta_0.01_seed0.csv").exists()
    assert [r[1] for r in report.rows] == ["eta=0.01", "eta=0.1"]


def test_theory_check_spec_finds_no_violations(tmp_path):
    spec = parse_spec({"environment": "theory_check", "methods": ["cc"], "seeds": [0], "n_sequences": 1000})
    report = run(spec, output_dir=tmp_path)
    row = dict(zip(report.header, report.rows[0]))
    assert row["sum_sequences"] == 1000
    assert row["sum_violations"] == 0
    assert row["min_worst_risk_margin"] >= 0 and row["min_worst_floor_margin"] >= 0


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_identical_specs_give_identical_bytes(tmp_path, monkeypatch):
    monkeypatch.delenv(ex.WORKERS_ENV, raising=False)
    spec = _spec(sweep={"eta": [0.02, 0.05]})
    run(spec, output_dir=tmp_path / "a")
    run(spec, output_dir=tmp_path / "b")
    run(spec, workers=2, output_dir=tmp_path / "c")
    a, b, c = _tree(tmp_path / "a"), _tree(tmp_path / "b"), _tree(tmp_path / "c")
    assert a == b == c
    assert len([k for k in a if k.startswith("traces/")]) == 8


@pytest.mark.parametrize("env, methods, params", [
    ("factory", ["cc", "ucb"], {"horizon": 150}),
    ("trading", ["cc", "aci", "greedy"], {"years": 2, "steps_per_year": 50}),
    ("batch", ["crc"], {"trials": 20, "n": 30}),
    ("nav", ["conformal", "aggressive"], {"time_budget": 4.0}),
])
def test_recompute_matches_run(tmp_path, env, methods, params):
    spec = parse_spec({"environment": env, "methods": methods, "seeds": [0, 1], **params})
    report = run(spec, output_dir=tmp_path)
    header, rows = recompute(tmp_path)
    assert header == report.header
    assert ex.table_csv(header, rows) == ex.table_csv(report.header, report.rows)


def test_failing_cell_is_isolated(tmp_path, monkeypatch):
    original = ex._Factory.trace_batch

    def flaky(p, method, seeds):
        if 1 in seeds:
            raise RuntimeError("simulated crash")
        return original(p, method, seeds)

    monkeypatch.setattr(ex._Factory, "trace_batch", staticmethod(flaky))
    report = run(_spec(methods=["cc"], seeds=[0, 1, 2]), output_dir=tmp_path)
    assert report.failed == 1
    assert [r.status for r in report.results] == ["ok", "failed", "ok"]
    assert "simulated crash" in report.results[1].error
    assert sorted(p.name for p in (tmp_path / "traces").iterdir()) == ["factory_cc_seed0.csv", "factory_cc_seed2.csv"]
    row = dict(zip(report.header, report.rows[0]))
    assert row["runs"] == 3 and row["failed"] == 1
    clean = run(_spec(methods=["cc"], seeds=[0, 2]), output_dir=tmp_path / "clean")
    assert row["mean_final_risk"] == clean.rows[0][4]
    failures = json.loads((tmp_path / "summary.json").read_text())["failures"]
    assert failures[0]["seed"] == 1


def test_worker_cap_from_environment(monkeypatch):
    monkeypatch.setenv(ex.WORKERS_ENV, "2")
    assert ex.worker_count(8) == 2
    assert ex.worker_count(1) == 1
    monkeypatch.setenv(ex.WORKERS_ENV, "0")
    assert ex.worker_count(4) == 1
    monkeypatch.delenv(ex.WORKERS_ENV)
    assert ex.worker_count(4) == 4


def test_summary_json_replaces_non_finite_with_null(tmp_path):
    spec = parse_spec({"environment": "nav", "methods": ["aggressive"], "seeds": [0], "time_budget": 1.0})
    run(spec, output_dir=tmp_path)
    row = json.loads((tmp_path / "summary.json").read_text())["rows"][0]
    assert row["finite_mean_time_s"] is None


def test_fmt_round_trips_floats():
    for x in (0.1, 1 / 3, 1e-300, 123456789.125):
        assert float(ex.fmt(x)) == x
    assert ex.fmt(3) == "3" and ex.fmt(math.inf) == "inf"


@pytest.mark.parametrize("env, method, params", [
    ("factory", "ucb", {"horizon": 120}),
    ("trading", "aci", {"years": 1, "steps_per_year": 80}),
])
def test_grouped_simulation_matches_single_cells(tmp_path, env, method, params):
    spec = parse_spec({"environment": env, "methods": [method], "seeds": [4, 0, 9], **params})
    grouped = ex.run_group(spec, method, {}, spec.seeds, str(tmp_path))
    texts = {r.seed: (tmp_path / r.trace_file).read_bytes() for r in grouped}
    for seed in spec.seeds:
        single = ex.run_cell(spec, method, {}, seed, str(tmp_path))
        assert (tmp_path / single.trace_file).read_bytes() == texts[seed]


@given(st.lists(st.floats(allow_nan=False), min_size=1, max_size=30))
def test_trace_text_round_trips_exactly(values):
    rows = [(i + 1, v) for i, v in enumerate(values)]
    _, columns, data = parse_trace(ex.trace_text(("t", "x"), rows, {"seed": 0}))
    assert columns == ("t", "x")
    assert data["x"].tolist() == values


def test_header_only_trace_parses():
    _, columns, data = parse_trace(ex.trace_text(("t", "x"), [], {"seed": 0}))
    assert columns == ("t", "x") and len(data["t"]) == 0
