import csv

import numpy as np
import pytest

from dsfm.cli import main
from dsfm.generators import gen_example31, gen_karate
from dsfm.io import (ParseError, format_problem, parse_problem, read_problem, read_trace,
                     write_problem, write_trace)
from dsfm.oracles import DisjointEdges, TableFunction
from dsfm.solvers import SolverConfig, run

PATH3 = """dsfm v1 N=3 tau=1
# a path with a source and a sink
edge 1 2 1
edge 2 3 1
x0 1 1
x0 3 -1
"""


def test_parse_basic():
    d = parse_problem(PATH3)
    assert (d.n, d.R, d.tau) == (3, 2, 1.0)
    np.testing.assert_array_equal(d.x0, [1, 0, -1])
    np.testing.assert_array_equal(d.profile.mu, [1, 2, 1])


def test_parse_all_line_types():
    text = ("dsfm v1 N=6 tau=0.5\n"
            "hyperedge 2 1 2 3\n"
            "region 4 5 6\n"
            "region w=1.5 1 6\n"
            "edgeset 1 4 1 2 5 0.5\n"
            "table 1 0 1 2 1 3 6\n")
    d = parse_problem(text)
    assert d.R == 5
    assert d.components[0].evaluate([0]) == 2.0
    assert d.components[1].evaluate([3]) == 2.0
    assert d.components[2].evaluate([0]) == 1.5
    assert isinstance(d.components[3], DisjointEdges)
    t = d.components[4]
    assert isinstance(t, TableFunction)
    assert t.evaluate([2]) == 1.0 and t.evaluate([5]) == 2.0 and t.evaluate([2, 5]) == 1.0


@pytest.mark.parametrize("text, lineno", [
    ("dsfm v2 N=3 tau=1\n", 1),
    ("dsfm v1 N=3 tau=1\nedge 1 4 1\n", 2),
    ("dsfm v1 N=3 tau=1\nedge 1 2 1\nedge 2 3 -1\n", 3),
    ("dsfm v1 N=3 tau=1\n\n# c\nfrobnicate 1 2\n", 4),
    ("dsfm v1 N=3 tau=1\nx0 1 nan\n", 2),
    ("dsfm v1 N=3 tau=1\nregion\n", 2),
    ("dsfm v1 N=3 tau=0\n", 1),
    ("dsfm v1 N=2 tau=1\ntable 1 0 1 1 3 1 2\n", 2),
    ("dsfm v1 N=2 tau=1\nedge 1 1 1\n", 2),
])
def test_parse_errors_carry_line(text, lineno):
    with pytest.raises(ParseError) as info:
        parse_problem(text)
    assert info.value.lineno == lineno
    assert str(info.value).startswith(f"line {lineno}:")


def test_duplicate_x0_warns():
    with pytest.warns(UserWarning):
        d = parse_problem("dsfm v1 N=2 tau=1\nedge 1 2 1\nx0 1 1\nx0 1 3\n")
    assert d.x0[0] == 3.0


def test_problem_round_trip(tmp_path, rng):
    d = gen_karate()
    p = tmp_path / "k.dsfm"
    write_problem(d, p)
    d2 = read_problem(p)
    assert format_problem(d2) == format_problem(d)
    r1 = run(d, SolverConfig("iap", epsilon=1e-3, max_iterations=50))
    r2 = run(d2, SolverConfig("iap", epsilon=1e-3, max_iterations=50))
    assert [r.nu_s for r in r1.trace.rows] == [r.nu_s for r in r2.trace.rows]


def test_trace_round_trip(tmp_path):
    d, _ = gen_example31(3)
    res = run(d, SolverConfig("rcdm", epsilon=1e-4, max_iterations=2000))
    p = tmp_path / "t.csv"
    write_trace(res.trace, p)
    meta, cols = read_trace(p)
    assert meta["algorithm"] == "rcdm" and meta["K"] == "1"
    np.testing.assert_array_equal(cols["nu_s"], [r.nu_s for r in res.trace.rows])
    np.testing.assert_array_equal(cols["iteration"], [r.iteration for r in res.trace.rows])


@pytest.fixture
def path3(tmp_path):
    p = tmp_path / "p3.dsfm"
    p.write_text(PATH3)
    return p


def test_cli_solve_ok(path3, capsys):
    assert main(["--threads", "1", "solve", str(path3), "--algo", "iap"]) == 0
    out = capsys.readouterr().out
    assert "status=converged" in out
    # min of cut(S) - x0(S): S = {1} costs 1 - 1 = 0, the empty set costs 0
    assert "F(S*)=0.0" in out


def test_cli_solve_unconverged_and_errors(path3, tmp_path, capsys):
    assert main(["solve", str(path3), "--max-iters", "0"]) == 2
    assert main(["solve", str(path3), "--algo", "iap", "--k", "2"]) == 1
    assert main(["solve", str(path3), "--algo", "ap", "--w", "mu"]) == 1
    assert main(["solve", str(path3), "--algo", "rcdm-w", "--plan", "greedy"]) == 1
    assert main(["solve", str(path3), "--algo", "rcdm-par", "--k", "9"]) == 1
    assert main(["solve", str(tmp_path / "missing.dsfm")]) == 1
    bad = tmp_path / "bad.dsfm"
    bad.write_text("dsfm v1 N=2 tau=1\nedge 1 3 1\n")
    assert main(["solve", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_cli_k_equals_R_trace_meta(tmp_path):
    prob = tmp_path / "k.dsfm"
    assert main(["generate", "karate", "--out", str(prob)]) == 0
    tr = tmp_path / "t.csv"
    assert main(["--threads", "1", "solve", str(prob), "--algo", "rcdm-par", "--k", "78",
                 "--max-iters", "5", "--trace", str(tr)]) in (0, 2)
    meta, cols = read_trace(tr)
    assert meta["K"] == "78" and float(meta["theta_one_inf"]) == pytest.approx(156.0)
    assert np.all(np.diff(cols["cumulative_projections"]) % 78 == 0)


def test_cli_partition(path3, tmp_path, capsys):
    cyc = tmp_path / "c4.dsfm"
    cyc.write_text("dsfm v1 N=4 tau=1\nedge 1 2 1\nedge 2 3 1\nedge 3 4 1\nedge 1 4 1\n")
    assert main(["partition", str(cyc), "--k", "2"]) == 0
    out = capsys.readouterr().out
    assert "greedy theta_one_inf=4.0" in out
    assert "lower bound=4.0" in out
    assert "uniform theta_one_inf=5.33" in out
    assert main(["partition", str(cyc), "--k", "5"]) == 1


def test_cli_bench_karate(tmp_path, capsys):
    out = tmp_path / "kar"
    code = main(["--threads", "1", "bench", "karate", "--out", str(out), "--algos",
                 "iap,rcdm-u", "--seeds", "0..1"])
    assert code == 0
    for name in ("summary.csv", "medians.csv", "gaps.png", "medians.png"):
        assert (out / name).stat().st_size > 0
    with open(out / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    traces = sorted(out.glob("trace_*.csv"))
    assert len(traces) == 3
    png = tmp_path / "again.png"
    assert main(["plot", *map(str, traces), "--out", str(png)]) == 0
    assert png.read_bytes()[:4] == b"\x89PNG"


def test_cli_bench_example31_and_ba(tmp_path):
    out = tmp_path / "e31"
    assert main(["bench", "example31", "--out", str(out), "--n", "2:6:2", "--seeds", "0..1",
                 "--no-plot"]) == 0
    with open(out / "slope.csv") as fh:
        slope = float(list(csv.DictReader(fh))[0]["slope"])
    assert 1.5 < slope < 4.5
    assert not (out / "scaling.png").exists()
    out = tmp_path / "ba"
    assert main(["--threads", "1", "bench", "ba", "--out", str(out), "--n", "30",
                 "--seeds", "1", "--k", "5", "--w", "ones", "--no-plot"]) == 0
    with open(out / "summary.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 2


def test_cli_bench_grid(tmp_path):
    out = tmp_path / "grid"
    assert main(["--threads", "2", "bench", "grid", "--out", str(out), "--size", "6x6",
                 "--algos", "iap,rcdm-u", "--seeds", "0", "--tile", "3"]) == 0
    assert (out / "gaps.png").exists()


def test_cli_usage_errors(tmp_path):
    assert main(["bench", "karate", "--out", str(tmp_path), "--algos", "zzz"]) == 1
    assert main(["--threads", "0", "bench", "karate", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit):
        main(["solve"])
