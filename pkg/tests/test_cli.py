import json
import subprocess
import sys

import pytest

from tangeo.cli import main
from tangeo.scenarios import (
    ConfigError,
    DegenerateMetric,
    UnknownCheck,
    body_text,
    dumps,
    list_presets,
    parse_scenario,
    run_scenario,
)

REQUIRED = {
    "walczak_parallel_sasaki", "prop4_parallel_conditions", "prop5_constant_length_converse",
    "concircular_sasaki_flat", "concircular_sasaki_curved", "concircular_constructed_family",
    "recurrent_sasaki", "recurrent_example11", "oracle_equivalence_sweep", "nondegeneracy_sweep",
}


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def small(**over):
    base = {"manifold": "sphere", "field": "generic", "metric": "cheeger_gromoll",
            "sampling": {"n_points": 2, "seed": 0}, "checks": ["oracle_equivalence"]}
    base.update(over)
    return base


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "recurrent_example11" in out
    names = set(list_presets())
    assert REQUIRED <= names and len(names) >= 10


@pytest.mark.parametrize("name", list_presets())
def test_every_preset_runs_and_meets_expectation(name, tmp_path):
    # fewer samples keep this quick; the acceptance suite runs them in full
    report = tmp_path / "r.json"
    assert main(["verify", "--scenario", name, "--samples", "3", "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["schema_version"] == 1
    assert set(data) == {"schema_version", "header", "scenario", "summary", "records"}
    assert data["summary"]["verdict"] == "pass"


def test_check_failure_exit_code(tmp_path, capsys):
    sc = small(field="generic", metric="sasaki", checks=["totally_geodesic"])
    assert main(["verify", "--scenario", write(tmp_path, sc)]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_expected_non_geodesic_passes(tmp_path):
    sc = small(metric="sasaki", checks=[{"name": "totally_geodesic", "expect": False}])
    assert main(["verify", "--scenario", write(tmp_path, sc)]) == 0


def test_tol_override_changes_verdict(tmp_path):
    sc = small(metric="sasaki", checks=["totally_geodesic"])
    path = write(tmp_path, sc)
    assert main(["verify", "--scenario", path]) == 2
    assert main(["verify", "--scenario", path, "--tol", "100"]) == 0


@pytest.mark.parametrize("bad, err", [
    (small(metric={"generators": {"a1": "1 + * t"}}), "ParseError"),
    (small(checks=["no_such_check"]), "UnknownCheck"),
    (small(metric={"generators": {"a1": "1", "a2": "1", "a3": "0"}}), "DegenerateMetric"),
    (small(extra=1), "ConfigError"),
    (small(sampling={"n_points": 2, "colour": "red"}), "ConfigError"),
    (small(manifold="klein_bottle"), "ConfigError"),
    (small(field={"components": ["x1", "x2", "x3"]}), "ConfigError"),
    ("{not json", "ParseError"),
])
def test_configuration_errors_exit_1(tmp_path, capsys, bad, err):
    assert main(["verify", "--scenario", write(tmp_path, bad)]) == 1
    assert err in capsys.readouterr().err


def test_parse_error_reports_column(tmp_path, capsys):
    sc = small(metric={"generators": {"a1": "1/(1+t", "a3": "0"}})
    assert main(["verify", "--scenario", write(tmp_path, sc)]) == 1
    err = capsys.readouterr().err
    assert "column" in err and "metric.generators.a1" in err


def test_missing_scenario_is_config_error(capsys):
    assert main(["verify", "--scenario", "/nonexistent/file.json"]) == 1


def test_check_metric(capsys, tmp_path):
    assert main(["check-metric", "--spec", "sasaki", "--tmax", "10"]) == 0
    assert main(["check-metric", "--spec", "cheeger_gromoll", "--tmax", "10"]) == 0
    assert main(["check-metric", "--spec", "a1=1,a2=1,a3=0", "--tmax", "10"]) == 2
    assert "first failing t = 0" in capsys.readouterr().out
    assert main(["check-metric", "--spec", "a1=exp(", "--tmax", "10"]) == 1
    path = write(tmp_path, {"metric": {"generators": {"a1": "1/(1+t)", "a3": "t/(1+t)"}}})
    assert main(["check-metric", "--spec", path, "--tmax", "5"]) == 0


def test_product_runs_and_per_metric_expectations():
    sc = parse_scenario({
        "manifold": [{"name": "euclidean", "n": 2}, "sphere"], "field": "constant",
        "metric": ["sasaki", {"label": "bad", "generators": {"a1": "1", "a2": "1", "a3": "0"}}],
        "checks": [{"name": "nondegenerate", "expect": {"sasaki": True, "bad": False}}],
    })
    body = run_scenario(sc)
    runs = {r["run"] for r in body["records"]}
    assert len(runs) == 4
    assert body["summary"]["verdict"] == "pass"


def test_missing_expectation_for_metric_label():
    sc = parse_scenario(small(metric=["sasaki", "cheeger_gromoll"],
                              checks=[{"name": "nondegenerate", "expect": {"sasaki": True}}]))
    with pytest.raises(ConfigError):
        run_scenario(sc)


def test_records_sorted_and_deterministic():
    sc = small(checks=["tw_tv_pairing", "oracle_equivalence", "normal_orthogonality"])
    a = run_scenario(parse_scenario(sc))
    b = run_scenario(parse_scenario(sc))
    assert body_text(a) == body_text(b)
    keys = [(r["check"], r["run"], r["index"]) for r in a["records"]]
    assert keys == sorted(keys)


def test_seed_changes_points():
    a = run_scenario(parse_scenario(small(sampling={"n_points": 2, "seed": 0})))
    b = run_scenario(parse_scenario(small(sampling={"n_points": 2, "seed": 1})))
    pts = lambda body: [r["point"] for r in body["records"] if r["index"] >= 0]
    assert pts(a) != pts(b)


def test_floats_use_17_significant_digits():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(1 / 3) == "0.33333333333333331"
    assert json.loads(dumps({"x": [1e-300, 2.5, float("nan")]})) == {"x": [1e-300, 2.5, None]}


def test_inline_manifold_and_field():
    sc = parse_scenario({
        "manifold": {"metric": [["1", "0"], ["0", "sin(x1)**2"]], "bounds": [[0.2, 2.9], [0, 6.2]]},
        "field": {"components": ["sin(x1)", "0"], "alpha": "cos(x1)"},
        "metric": "sasaki",
        "sampling": {"n_points": 2},
        "checks": ["concircular_consistency", {"name": "classify", "expect": "concircular"}],
    })
    assert run_scenario(sc)["summary"]["verdict"] == "pass"


def test_check_needing_alpha_without_one():
    sc = parse_scenario(small(checks=["concircular_consistency"]))
    with pytest.raises(ConfigError):
        run_scenario(sc)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tangeo", "presets"], capture_output=True, text=True)
    assert out.returncode == 0 and "walczak_parallel_sasaki" in out.stdout


def test_exception_types():
    assert issubclass(UnknownCheck, ConfigError) and issubclass(DegenerateMetric, ConfigError)
