import json

import numpy as np
import pytest

from ktdist.cli import main


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr().out
    return code, out


def write_cloud(path, pts):
    np.savetxt(path, np.atleast_2d(pts), delimiter=",")


def test_dist_identity(tmp_path, capsys):
    f = tmp_path / "a.csv"
    write_cloud(f, np.random.default_rng(0).standard_normal((5, 2)))
    code, out = run(
        ["dist", "--metric", "kt", "--kernel", "gaussian", "--bandwidth", "1",
         "--x", str(f), "--y", str(f)],
        capsys,
    )
    assert code == 0
    assert float(out.strip()) == 0.0


def test_dist_metrics_and_debug_dump(tmp_path, capsys):
    rng = np.random.default_rng(1)
    fx, fy = tmp_path / "x.csv", tmp_path / "y.csv"
    write_cloud(fx, rng.standard_normal((6, 1)))
    write_cloud(fy, rng.standard_normal((7, 1)))
    for metric in ("kt", "mmd", "mmd2", "mmdn", "mmde", "kbw", "w1"):
        code, out = run(
            ["dist", "--metric", metric, "--x", str(fx), "--y", str(fy)], capsys
        )
        assert code == 0
        assert float(out.strip()) >= 0.0
    dump = tmp_path / "dump"
    code, _ = run(
        ["dist", "--metric", "kt", "--x", str(fx), "--y", str(fy),
         "--debug-dump", str(dump)],
        capsys,
    )
    assert code == 0
    assert (dump / "gram.csv").exists() and (dump / "eigenvalues.csv").exists()
    eig = np.loadtxt(dump / "eigenvalues.csv", delimiter=",")
    assert abs(eig.sum()) < 1e-9  # trace of a probability difference


def test_usage_errors(tmp_path, capsys):
    code, _ = run(["dist", "--metric", "kt"], capsys)  # missing --x/--y
    assert code == 1
    code, _ = run(["dist", "--metric", "kt", "--x", "nope.csv", "--y", "nope.csv"], capsys)
    assert code == 1  # missing file -> OSError path
    code, _ = run(["nonsense"], capsys)
    assert code == 1


def test_selftest(capsys):
    code, out = run(["selftest"], capsys)
    assert code == 0
    assert "PASS two-atom closed forms" in out
    assert "FAIL" not in out


def test_abc_byte_identical(tmp_path, capsys):
    argv = ["abc", "--distance", "kt", "--eps", "0.5", "--T", "40", "--m", "30",
            "--n", "30", "--seed", "7"]
    o1, o2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run(argv + ["--out", str(o1)], capsys)[0] == 0
    assert run(argv + ["--out", str(o2)], capsys)[0] == 0
    assert o1.read_bytes() == o2.read_bytes()
    payload = json.loads(o1.read_text())
    assert payload["accept_count"] == len(payload["accepted"])


def test_abc_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"T": 10, "eps": 5.0}))
    out = tmp_path / "r.json"
    code, _ = run(
        ["abc", "--config", str(cfg), "--eps", "10", "--m", "20", "--n", "20",
         "--out", str(out)],
        capsys,
    )
    assert code == 0
    payload = json.loads(out.read_text())
    # T came from the config file, eps from the flag (accepts everything)
    assert payload["accept_count"] == 10


def test_sweep_and_rate_outputs(tmp_path, capsys):
    out = tmp_path / "std.csv"
    code, _ = run(
        ["sweep-std", "--n", "40", "--s-grid", "0.5,1", "--metrics", "kt",
         "--out", str(out)],
        capsys,
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "s,kt"
    assert len(lines) == 3

    rate_csv, summary = tmp_path / "rate.csv", tmp_path / "rate.json"
    code, printed = run(
        ["rate", "--n-grid", "20,40", "--reps", "2", "--ref-size", "100",
         "--metrics", "mmd2", "--out", str(rate_csv), "--summary", str(summary)],
        capsys,
    )
    assert code == 0
    assert "slope_mmd_k2" in printed
    assert "slopes" in json.loads(summary.read_text())


def test_flow_outputs(tmp_path, capsys):
    outdir = tmp_path / "flow"
    code, printed = run(
        ["flow", "--loss", "mmd", "--steps", "5", "--record-every", "2",
         "--out", str(outdir)],
        capsys,
    )
    assert code == 0
    assert (outdir / "snapshot_0.csv").exists()
    assert (outdir / "snapshot_5.csv").exists()
    loss_lines = (outdir / "loss.csv").read_text().strip().splitlines()
    assert loss_lines[0] == "step,loss"
    assert float(printed.strip()) >= 0.0


def test_robustness_check_cli(tmp_path, capsys):
    out = tmp_path / "rob.csv"
    code, printed = run(
        ["robustness-check", "--n", "50", "--eps-grid", "0.1,0.2", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert "bound" in out.read_text().splitlines()[0]
    assert "eps=0.1" in printed


def test_mixture_check_cli(capsys):
    code, printed = run(["mixture-check", "--n", "30"], capsys)
    assert code == 0
    assert "kt_PQ" in printed
