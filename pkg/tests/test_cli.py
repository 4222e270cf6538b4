import json
import subprocess
import sys
import time

import pytest

from quva.cli import main
from quva.io import read_records_csv

SMALL_RUN = """
[de]
kappa2 = 1
kappa1 = -1
kappa0 = 8

[ansatz]
depth = 1

[oracle]
f0 = -1.0

[search]
n_random_init = 30
n_guided = 10
refit_every = 10
candidate_pool_size = 150
p_c = 4
seed = 2
"""


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", write(tmp_path, SMALL_RUN), "--output-dir", str(out)])
    assert code == 0
    for name in ("records.csv", "records.json", "summary.json", "exp.ini", "trace.svg"):
        assert (out / name).exists(), name
    rows = read_records_csv(out / "records.csv")
    assert [int(r["eval_index"]) for r in rows] == list(range(40))
    for r in rows:
        assert (r["flagged"] == "true") == (abs(float(r["total"])) <= 4.0)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_evaluations"] == 40
    assert summary["candidate_count"] == sum(r["flagged"] == "true" for r in rows)
    assert summary["seeds"]["search"] == 2
    assert "evaluations" in capsys.readouterr().out


def test_csv_floats_round_trip(tmp_path):
    out = tmp_path / "out"
    main(["run", write(tmp_path, SMALL_RUN), "--output-dir", str(out), "--no-plots"])
    rows = read_records_csv(out / "records.csv")
    js = json.loads((out / "records.json").read_text())
    for r, j in zip(rows, js):
        assert float(r["total"]) == j["total"]
        assert [float(r[f"lambda_{k + 1}"]) for k in range(6)] == j["lambda"]


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL_RUN)
    main(["run", cfg, "--output-dir", str(tmp_path / "a"), "--no-plots"])
    main(["run", cfg, "--output-dir", str(tmp_path / "b"), "--no-plots"])
    assert (tmp_path / "a" / "records.csv").read_bytes() == (tmp_path / "b" / "records.csv").read_bytes()


def test_svg_output_is_reproducible(tmp_path):
    cfg = write(tmp_path, SMALL_RUN.replace("p_c = 4", "p_c = 50"))
    main(["run", cfg, "--output-dir", str(tmp_path / "a")])
    main(["run", cfg, "--output-dir", str(tmp_path / "b")])
    for name in ("trace.svg", "solution.svg", "landscape.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_kappa0_exits_2(tmp_path, capsys):
    code = main(["run", write(tmp_path, SMALL_RUN.replace("kappa0 = 8\n", ""))])
    assert code == 2
    assert "kappa0" in capsys.readouterr().err


def test_unreadable_config_exits_2(tmp_path):
    assert main(["run", str(tmp_path / "nope.ini")]) == 2


def test_numerical_failure_exits_3(tmp_path, monkeypatch, capsys):
    import quva.search as search_mod
    from quva.errors import QuvaError

    def boom(*args, **kw):
        raise QuvaError("forced")

    monkeypatch.setattr(search_mod, "expectation_breakdown", boom)
    code = main(["run", write(tmp_path, SMALL_RUN), "--output-dir", str(tmp_path / "o"), "--no-plots"])
    assert code == 3
    assert "record index 30" in capsys.readouterr().err


def test_verify_passes_fast_and_deterministic(capsys):
    t = time.perf_counter()
    assert main(["verify"]) == 0
    assert time.perf_counter() - t < 60
    first = capsys.readouterr().out
    assert main(["verify"]) == 0
    assert capsys.readouterr().out == first
    assert "FAIL" not in first


def test_verify_negative_control(capsys):
    assert main(["verify", "--corrupt-shift"]) == 1
    fails = [l for l in capsys.readouterr().out.splitlines() if l.startswith("FAIL")]
    assert any("translation" in l for l in fails)
    # the hook must not leak into later runs
    assert main(["verify"]) == 0


def test_correlation_files(tmp_path):
    text = "[correlation]\nn_samples = 100\nseed = 4\n"
    out = tmp_path / "corr"
    assert main(["correlation", write(tmp_path, text), "--output-dir", str(out)]) == 0
    for d in range(4):
        rows = read_records_csv(out / f"correlation_d{d}.csv")
        assert len(rows) == 100
        assert (out / f"correlation_d{d}.svg").exists()
    summary = json.loads((out / "correlation_summary.json").read_text())
    assert [p["depth"] for p in summary["panels"]] == [0, 1, 2, 3]
    assert all(p["cauchy_schwarz_violations"] == 0 for p in summary["panels"])


@pytest.mark.parametrize("argv", [["--help"], ["run", "--help"]])
def test_console_script_help(argv):
    out = subprocess.run([sys.executable, "-m", "quva.cli", *argv], capture_output=True, text=True)
    assert out.returncode == 0 and "usage" in out.stdout
