import csv
import json
import math

import numpy as np
import pytest

from quietzone import cli, specialfunc
from quietzone.config import bundled_path, bundled_scenarios, load_config, resolve_scenario
from quietzone.export import read_ppm

BASE = {
    "lambda0": 0.125, "c0": 3e8, "alpha": 2, "delta": 10, "gamma": 20,
    "source": {"kind": "point_source", "position": [-20, 0]},
    "device_radius": False, "output_dir": "run",
}


def write_scenario(path, **changes):
    doc = {**BASE, **changes}
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def tree(root):
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


def test_bundled_scenarios_present():
    names = {"paper_fig1.json", "paper_fig2.json", "paper_fig4.json", "paper_movie.json"}
    assert set(bundled_scenarios()) >= names
    for name in names:
        assert bundled_path(name).is_file()
        assert resolve_scenario(name.removesuffix(".json")) == bundled_path(name)
        load_config(bundled_path(name))


def test_malformed_json_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    out = tmp_path / "out"
    assert cli.main(["solve", str(bad), "--out", str(out)]) == cli.EXIT_INVALID
    assert not out.exists()
    assert "bad.json" in capsys.readouterr().err


def test_unknown_key_named(tmp_path, capsys):
    path = write_scenario(tmp_path / "s.json", colour="blue")
    out = tmp_path / "out"
    assert cli.main(["solve", str(path), "--out", str(out)]) == cli.EXIT_INVALID
    assert "colour" in capsys.readouterr().err
    assert not out.exists()


def test_missing_key_named(tmp_path, capsys):
    doc = dict(BASE)
    del doc["gamma"]
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["solve", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_INVALID
    assert "gamma" in capsys.readouterr().err


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["solve"])
    assert info.value.code == cli.EXIT_INVALID


def test_bad_cutoff(tmp_path):
    path = write_scenario(tmp_path / "s.json")
    assert cli.main(["solve", str(path), "--cutoff", "2", "--out", str(tmp_path)]) == 1


def test_movie_needs_grid(tmp_path):
    path = write_scenario(tmp_path / "s.json")
    assert cli.main(["movie", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_INVALID


@pytest.fixture(scope="module")
def solve_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("solve")
    path = write_scenario(root / "s.json", device_radius=True,
                          obstacle={"kind": "kite", "scale": 0.5},
                          grid={"window": [-25, -25, 25, 25], "nx": 21, "ny": 17})
    out = root / "out"
    assert cli.main(["solve", str(path), "--out", str(out), "--workers", "1"]) == 0
    return path, out / "run"


def test_solve_outputs(solve_run):
    _, run = solve_run
    assert tree(run) == ["coefficients/omega_000.csv", "coefficients/omega_000.json",
                         "fields/active.ppm", "fields/inactive.ppm", "metrics.csv"]
    rows = read_csv(run / "metrics.csv")
    assert tuple(rows[0]) == cli.METRICS_HEADER
    omega_hz, rc, rq, red, radius = map(float, rows[1])
    assert omega_hz == pytest.approx(2.4e9)
    assert rc <= 1e-3 and rq <= 1e-3 and red <= 1e-3
    assert 0 < radius < 5 * math.sqrt(3) / 2
    coeffs = read_csv(run / "coefficients" / "omega_000.csv")
    assert tuple(coeffs[0]) == cli.COEFF_HEADER
    assert len(coeffs) == 1 + 3 * (2 * 57 + 1)
    side = json.loads((run / "coefficients" / "omega_000.json").read_text())
    assert side["rank_step1"] > 0
    img = read_ppm(run / "fields" / "active.ppm")
    assert img.shape == (17, 21, 3)


def test_csv_line_endings(solve_run):
    _, run = solve_run
    raw = (run / "metrics.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_rerun_is_byte_identical(solve_run, tmp_path):
    path, run = solve_run
    assert cli.main(["solve", str(path), "--out", str(tmp_path), "--workers", "1"]) == 0
    again = tmp_path / "run"
    for name in tree(run):
        assert (run / name).read_bytes() == (again / name).read_bytes(), name


def test_no_temporary_files_left(solve_run):
    _, run = solve_run
    assert not [p for p in run.rglob("*") if p.name.startswith(".") or p.suffix == ".tmp"]


def test_env_output_root(tmp_path, monkeypatch):
    path = write_scenario(tmp_path / "s.json", output_dir="envrun")
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["solve", str(path), "--workers", "1"]) == 0
    assert (tmp_path / "env" / "envrun" / "metrics.csv").is_file()


def test_synthesis_failure_exit_2(tmp_path, monkeypatch, capsys):
    import quietzone.broadband as bb
    from quietzone.errors import NumericalFailure

    def broken(*a, **kw):
        raise NumericalFailure("SVD did not converge")

    monkeypatch.setattr(bb, "solve_devices", broken)
    path = write_scenario(tmp_path / "s.json")
    assert cli.main(["solve", str(path), "--out", str(tmp_path / "o"), "--workers", "1"]) == 2
    err = capsys.readouterr().err
    assert "omega=" in err
    assert not (tmp_path / "o" / "run" / "metrics.csv").exists()


def test_sweep_single_row(tmp_path):
    path = write_scenario(tmp_path / "s.json", output_dir="sweep")
    rc = cli.main(["sweep-radius", str(path), "--alphas", "2", "--frequencies", "2.4e9",
                   "--out", str(tmp_path), "--workers", "1"])
    assert rc == 0
    rows = read_csv(tmp_path / "sweep" / "sweep_radius.csv")
    assert tuple(rows[0]) == cli.SWEEP_HEADER
    assert len(rows) == 2
    alpha, freq, res_c, res_q, radius = map(float, rows[1])
    assert (alpha, freq) == (2.0, 2.4e9)
    assert res_c <= 1e-3 and res_q <= 1e-3 and radius < 5 * math.sqrt(3) / 2


def test_sweep_bad_list(tmp_path):
    path = write_scenario(tmp_path / "s.json")
    with pytest.raises(SystemExit) as info:
        cli.main(["sweep-radius", str(path), "--alphas", "2,x"])
    assert info.value.code == 1


@pytest.fixture(scope="module")
def movie_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("movie")
    path = write_scenario(root / "m.json", output_dir="movie_run", n_freq=5,
                          bandwidth_fraction=0.2, n_frames=10,
                          obstacle={"kind": "kite", "scale": 0.5},
                          grid={"window": [-25, -25, 25, 25], "nx": 25, "ny": 25})
    assert cli.main(["movie", str(path), "--frames", "4", "--out", str(root),
                     "--workers", "1"]) == 0
    return root / "movie_run" / "movie"


def test_movie_counts(movie_run):
    for label in ("inactive", "active"):
        frames = sorted((movie_run / label).glob("frame_*.ppm"))
        assert len(frames) == 4
    manifest = read_csv(movie_run / "manifest.csv")
    assert manifest[0] == ["frame", "time_ns"] and len(manifest) == 5
    times = [float(r[1]) for r in manifest[1:]]
    assert times[0] == 0.0 and times[-1] == pytest.approx(21.041666666666668)


def test_movie_frames_in_range(movie_run):
    for ppm in (movie_run / "active").glob("*.ppm"):
        img = read_ppm(ppm)
        assert img.dtype == np.uint8 and img.shape == (25, 25, 3)


def test_movie_final_frame_reduction(movie_run):
    summary = json.loads((movie_run / "summary.json").read_text())
    assert summary["final_frame_inactive"] > 0
    assert summary["final_frame_active"] <= 1e-3 * summary["final_frame_inactive"]
    assert summary["n_frames"] == 4


def test_validate_passes(capsys):
    assert cli.main(["validate", "--fast"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out] == ["PASS"] * 3


def test_validate_detects_seeded_fault(monkeypatch, capsys):
    real = specialfunc.bessel_jy_seq

    def faulty(n_max, x):
        j, y = real(n_max, x)
        y = y.copy()
        y[..., 2:] *= 1 + 1e-7       # corrupt the upward Y recurrence
        return j, y

    monkeypatch.setattr(specialfunc, "bessel_jy_seq", faulty)
    assert cli.main(["validate", "--fast"]) == cli.EXIT_VALIDATE
    out = capsys.readouterr().out
    assert "FAIL specialfunc" in out
