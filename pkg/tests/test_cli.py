"""Command-line interface: artifacts, determinism, exit codes."""

import json

import numpy as np
import pytest

from kolmlab.cli import main

BALLS = {
    "variant": "periodic_balls",
    "period": [1.0, 1.0],
    "centers": [[0.0, 0.0]],
    "radius": 0.3,
}
RANDOM_ONE = {
    "random": {
        "count": 1,
        "n_terms": 2,
        "eig_range": [0.5, 1.0],
        "imag_scale": 0.1,
        "center_scale": 1.0,
        "phase_scale": 0.5,
    }
}


def write_cfg(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(json.dumps(body), encoding="utf-8")
    return str(path)


def run(kind, cfg_path, out_dir, *extra):
    return main([kind, "--config", cfg_path, "--out", str(out_dir), *extra])


def read_header(path):
    return path.read_text(encoding="utf-8").splitlines()[0]


def manifest_of(out_dir):
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


def test_propagate_grid_backend(tmp_path):
    cfg = write_cfg(tmp_path, "p.json", {
        "initial": RANDOM_ONE,
        "times": [0.1, 0.5],
        "grid": {"d": 1, "points_per_axis": 128, "half_width": 10.0},
        "seed": 7,
    })
    out = tmp_path / "out"
    assert run("propagate", cfg, out) == 0
    assert read_header(out / "trajectory.csv") == "index,time,l2_norm"
    assert (out / "state_000.npz").exists()
    assert (out / "state_001.npz").exists()
    man = manifest_of(out)
    assert man["format"] == "kolmlab-run-manifest"
    assert man["kind"] == "propagate"
    assert man["exit_code"] == 0
    assert man["config"]["seed"] == 7
    assert "created_utc" in man


def test_propagate_mixture_backend(tmp_path):
    cfg = write_cfg(tmp_path, "p.json", {
        "initial": RANDOM_ONE,
        "times": [0.25, 1.0],
        "backend": "mixture",
        "seed": 3,
    })
    out = tmp_path / "out"
    assert run("propagate", cfg, out) == 0
    lines = (out / "trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "state,time,spectral_norm,physical_norm"
    norms = [float(row.split(",")[2]) for row in lines[1:]]
    assert norms == sorted(norms, reverse=True)


def test_propagate_fd_backend_reports_reference_error(tmp_path):
    cfg = write_cfg(tmp_path, "p.json", {
        "initial": RANDOM_ONE,
        "times": [0.25],
        "backend": "fd",
        "grid": {"d": 1, "points_per_axis": 64, "half_width": 8.0},
        "fd_steps": 100,
        "save_snapshots": False,
        "seed": 2,
    })
    out = tmp_path / "out"
    assert run("propagate", cfg, out) == 0
    lines = (out / "trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "index,time,l2_norm,reference_rel_err"
    assert float(lines[-1].split(",")[-1]) < 0.05
    assert not (out / "state_000.npz").exists()


def test_propagate_snapshot_chain(tmp_path):
    first = write_cfg(tmp_path, "first.json", {
        "initial": RANDOM_ONE,
        "times": [0.25],
        "grid": {"d": 1, "points_per_axis": 128, "half_width": 10.0},
        "seed": 7,
    })
    out1 = tmp_path / "run1"
    assert run("propagate", first, out1) == 0
    second = write_cfg(tmp_path, "second.json", {
        "initial": {"snapshot": str(out1 / "state_000.npz")},
        "times": [0.25],
        "grid": {"d": 1, "points_per_axis": 128, "half_width": 10.0},
    })
    out2 = tmp_path / "run2"
    assert run("propagate", second, out2) == 0
    assert (out2 / "trajectory.csv").exists()


def test_decay_check_artifacts(tmp_path):
    cfg = write_cfg(tmp_path, "d.json", {
        "initial": RANDOM_ONE,
        "n_values": [1, 2],
        "t_values": [0.5],
        "seed": 3,
    })
    out = tmp_path / "out"
    assert run("decay-check", cfg, out) == 0
    lines = (out / "decay_check.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "state,n_cut,time,tail_mass,bound,log_margin,holds"
    assert all(row.endswith("true") for row in lines[1:])


def test_thickness_artifacts(tmp_path):
    cfg = write_cfg(tmp_path, "t.json", {"set": BALLS, "delta": 0.7, "r": 0.25})
    out = tmp_path / "out"
    assert run("thickness", cfg, out) == 0
    lines = (out / "thickness.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("variant,delta,r,")
    row = lines[1].split(",")
    minimal = float(row[lines[0].split(",").index("minimal_delta")])
    assert minimal == pytest.approx(np.sqrt(0.5) - 0.05, abs=2e-2)


def test_spectral_fit_determinism(tmp_path):
    body = {"set": BALLS, "n_values": [1, 2], "samples_per_n": 4, "seed": 5}
    cfg = write_cfg(tmp_path, "f.json", body)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run("spectral-fit", cfg, out_a) == 0
    assert run("spectral-fit", cfg, out_b) == 0
    csv_a = (out_a / "spectral_fit.csv").read_bytes()
    assert csv_a == (out_b / "spectral_fit.csv").read_bytes()
    out_c = tmp_path / "c"
    assert run("spectral-fit", cfg, out_c, "--seed", "9") == 0
    assert csv_a != (out_c / "spectral_fit.csv").read_bytes()
    man = manifest_of(out_c)
    assert man["config"]["seed"] == 9
    assert "fitted_constant" in man


def test_interp_verify_run(tmp_path):
    cfg = write_cfg(tmp_path, "i.json", {
        "set": BALLS,
        "t_values": [0.5],
        "alpha_values": [0.5],
        "initial": RANDOM_ONE,
        "c1": 2.0,
        "seed": 11,
    })
    out = tmp_path / "out"
    assert run("interp-verify", cfg, out) == 0
    lines = (out / "interp_verify.csv").read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    assert "observed_constant" in header and "budget" in header
    row = lines[1].split(",")
    observed = float(row[header.index("observed_constant")])
    budget = float(row[header.index("budget")])
    assert observed <= budget
    assert row[header.index("holds")] == "true"


def test_telescope_run(tmp_path):
    cfg = write_cfg(tmp_path, "tel.json", {
        "set": BALLS,
        "horizon": 1.0,
        "intervals": [[0.0, 0.5], [0.75, 1.0]],
        "initial": RANDOM_ONE,
        "c1": 2.0,
        "lambda": 0.95,
        "nodes_per_component": 8,
        "max_rows": 3,
        "seed": 13,
    })
    out = tmp_path / "out"
    assert run("telescope", cfg, out) == 0
    steps = (out / "telescope_steps.csv").read_text(encoding="utf-8").splitlines()
    assert steps[0].startswith("state,m,l_m,")
    summary = (out / "telescope_summary.csv").read_text(encoding="utf-8").splitlines()
    header = summary[0].split(",")
    row = summary[1].split(",")
    assert float(row[header.index("log_ratio")]) <= 1e-9
    assert row[header.index("all_steps_hold")] == "true"
    man = manifest_of(out)
    assert man["sequence"]["lambda"] == pytest.approx(0.95)
    assert man["constants"]["c1"] == pytest.approx(2.0)


def test_exit_2_on_config_errors(tmp_path):
    bad_key = write_cfg(tmp_path, "bk.json", {
        "initial": RANDOM_ONE, "times": [0.1], "typo": 1,
    })
    assert run("propagate", bad_key, tmp_path / "o1") == 2
    assert main(["propagate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o2")]) == 2
    mismatched = write_cfg(tmp_path, "mm.json", {
        "kind": "telescope", "initial": RANDOM_ONE, "times": [0.1],
    })
    assert run("propagate", mismatched, tmp_path / "o3") == 2
    bad_lambda = write_cfg(tmp_path, "bl.json", {
        "set": BALLS, "horizon": 1.0, "intervals": [[0.0, 1.0]],
        "initial": RANDOM_ONE, "lambda": 0.5, "c1": 1.0,
    })
    assert run("telescope", bad_lambda, tmp_path / "o4") == 2


def test_exit_3_on_numerical_guard(tmp_path):
    cfg = write_cfg(tmp_path, "g.json", {
        "initial": RANDOM_ONE,
        "times": [0.5],
        "grid": {"d": 1, "points_per_axis": 32, "half_width": 2.0},
        "seed": 7,
    })
    assert run("propagate", cfg, tmp_path / "out") == 3


def test_exit_4_on_violation_with_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "v.json", {
        "initial": RANDOM_ONE,
        "n_values": [4],
        "t_values": [1.0],
        "c_exponent": 100.0,
        "seed": 3,
    })
    out = tmp_path / "out"
    assert run("decay-check", cfg, out) == 4
    assert "violation" in capsys.readouterr().out.lower()
    assert (out / "decay_check.csv").exists()
    assert manifest_of(out)["exit_code"] == 4


def test_plots_flag_writes_svg(tmp_path):
    cfg = write_cfg(tmp_path, "p.json", {
        "initial": RANDOM_ONE,
        "times": [0.25],
        "backend": "mixture",
        "seed": 3,
    })
    out = tmp_path / "out"
    assert run("propagate", cfg, out, "--plots") == 0
    assert (out / "trajectory.svg").exists()


def test_version_flag():
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
