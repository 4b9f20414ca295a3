import json

import pytest

from karcher.cli import load_config, main
from karcher.errors import ConfigError
from karcher.harness import ConvergenceReport


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def sphere_sweep_config(tmp_path, **overrides):
    payload = {
        "kind": "distortion-sweep",
        "manifold": {"kind": "sphere", "dim": 2, "radius": 1.0},
        "ladder": {"h0": 0.2, "levels": 4},
        "seed": 0,
        "out": str(tmp_path / "reports"),
        "format": "csv",
    }
    payload.update(overrides)
    return write_config(tmp_path, payload)


# -- config validation -------------------------------------------------------

def test_unknown_kind_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, {"kind": "mystery",
                                   "manifold": {"kind": "sphere"}})
    assert main(["run", path]) == 2
    assert "kind" in capsys.readouterr().err


def test_unknown_manifold_kind_names_field(tmp_path, capsys):
    path = write_config(tmp_path, {"kind": "distortion-sweep",
                                   "manifold": {"kind": "torus"}})
    assert main(["run", path]) == 2
    assert "manifold.kind" in capsys.readouterr().err


def test_too_few_ladder_levels_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, {
            "kind": "distortion-sweep",
            "manifold": {"kind": "sphere"},
            "ladder": {"h0": 0.2, "levels": 3}}))


def test_bad_format_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, {
            "kind": "distortion-sweep",
            "manifold": {"kind": "sphere"},
            "format": "xml"}))


def test_bad_ladder_flag_exits_2(tmp_path, capsys):
    path = sphere_sweep_config(tmp_path)
    assert main(["run", path, "--ladder", "nonsense"]) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    # ladder too coarse for the sphere's convexity radius
    path = sphere_sweep_config(tmp_path)
    assert main(["run", path, "--ladder", "3.5,4"]) == 3
    assert "numerical failure" in capsys.readouterr().err


# -- distortion sweep --------------------------------------------------------

def test_sphere_sweep_csv_contract(tmp_path):
    path = sphere_sweep_config(tmp_path)
    assert main(["run", path]) == 0
    out = tmp_path / "reports" / "distortion-sweep.csv"
    lines = out.read_text().splitlines()
    data = [l for l in lines if not l.startswith("#")]
    assert data[0] == "h,theta,metric_gap,connection_gap,dx_sigma_gap,nabla_dx"
    assert len(data) == 1 + 4 + 1  # header, 4 levels, slope footer
    assert data[-1].startswith("slope,")
    slopes = [float(x) for x in data[-1].split(",")[2:]]
    assert abs(slopes[0] - 2.0) <= 0.25
    # provenance comments present
    assert any(l.startswith("# version:") for l in lines)
    assert any(l.startswith("# config:") for l in lines)


def test_sweep_idempotent_and_seed_override(tmp_path):
    path = sphere_sweep_config(tmp_path, format="json")
    assert main(["run", path]) == 0
    out = tmp_path / "reports" / "distortion-sweep.json"
    first = out.read_bytes()
    assert main(["run", path, "--seed", "0"]) == 0
    assert out.read_bytes() == first


def test_sweep_json_roundtrip(tmp_path):
    path = sphere_sweep_config(tmp_path, format="json")
    assert main(["run", path]) == 0
    payload = json.loads((tmp_path / "reports" /
                          "distortion-sweep.json").read_text())
    report = ConvergenceReport.from_dict(payload["report"])
    assert report.to_dict() == payload["report"]
    assert payload["version"]
    assert payload["config"]["kind"] == "distortion-sweep"


def test_euclidean_sweep_asserts_flatness(tmp_path):
    path = write_config(tmp_path, {
        "kind": "distortion-sweep",
        "manifold": {"kind": "euclidean", "dim": 3},
        "ladder": {"h0": 0.2, "levels": 4},
        "out": str(tmp_path / "reports"),
        "format": "json"})
    assert main(["run", path]) == 0


# -- other experiment kinds ----------------------------------------------------

def test_jacobi_checks_run(tmp_path):
    path = write_config(tmp_path, {
        "kind": "jacobi-checks",
        "manifold": {"kind": "hyperbolic", "dim": 2, "curvature": 1.0},
        "trials": 10,
        "seed": 3,
        "out": str(tmp_path / "reports"),
        "format": "json"})
    assert main(["run", path]) == 0
    payload = json.loads((tmp_path / "reports" /
                          "jacobi-checks.json").read_text())
    assert payload["max_gap"] <= 1e-8
    assert len(payload["cases"]) == 10


def test_flat_simplex_props_run(tmp_path):
    path = write_config(tmp_path, {
        "kind": "flat-simplex-props",
        "manifold": {"kind": "euclidean", "dim": 3},
        "trials": 25,
        "seed": 5,
        "out": str(tmp_path / "reports"),
        "format": "csv"})
    assert main(["run", path]) == 0
    lines = (tmp_path / "reports" / "flat-simplex-props.csv").read_text().splitlines()
    data = [l for l in lines if not l.startswith("#")]
    assert data[0] == "trial,n,volume_gap,eigen_contained"
    assert len(data) == 1 + 25


def test_fem_poisson_json_contract(tmp_path):
    path = write_config(tmp_path, {
        "kind": "fem-poisson",
        "manifold": {"kind": "sphere", "dim": 2, "radius": 1.0},
        "fem_levels": [0, 1, 2, 3],
        "fem_mode": "flat",
        "out": str(tmp_path / "reports"),
        "format": "json"})
    assert main(["run", path]) == 0
    payload = json.loads((tmp_path / "reports" / "fem-poisson.json").read_text())
    assert [r["level"] for r in payload["records"]] == [0, 1, 2, 3]
    for key in ("level", "h", "dof", "l2_error", "h1_error"):
        assert key in payload["records"][0]
    assert payload["fitted_slopes"]["h1_error"]["slope"] >= 0.8


def test_fem_requires_sphere(tmp_path, capsys):
    path = write_config(tmp_path, {
        "kind": "fem-poisson",
        "manifold": {"kind": "euclidean", "dim": 3},
        "fem_levels": [0, 1, 2, 3],
        "out": str(tmp_path / "reports")})
    assert main(["run", path]) == 2
    assert "manifold.kind" in capsys.readouterr().err


# -- verify ----------------------------------------------------------------------

def test_verify_flat_simplex_suite(capsys):
    assert main(["verify", "flat-simplex"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out


def test_verify_unknown_suite(capsys):
    assert main(["verify", "everything-everywhere"]) == 2
