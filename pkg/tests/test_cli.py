import csv
import json
from pathlib import Path

import pytest

from expanding_search.cli import main
from expanding_search.graph import Instance
from expanding_search.instance_io import write_instance

DATA = Path(__file__).parent / "data"


def run(capsys, *args):
    code = main(list(map(str, args)))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_oracle_hub(capsys):
    code, out, _ = run(capsys, "solve", DATA / "hub_k4_m3.txt", "--method", "oracle")
    assert code == 0
    assert float(out.split()[0]) == pytest.approx(5.25)


@pytest.mark.parametrize("method", ["exact", "greedy", "local"])
def test_solve_methods(capsys, method, tmp_path):
    sol = tmp_path / "s.sol"
    code, out, _ = run(capsys, "solve", DATA / "golden_dc8.txt", "--method", method, "--solution", sol)
    assert code == 0 and float(out) > 0
    assert sol.read_text().startswith("expanding-search-solution 1")


def test_bounds_on_tree_equals_exact(capsys, tmp_path):
    inst = Instance.from_edges([0, 0.2, 0.3, 0.5], [(0, 1, 2), (1, 2, 1), (0, 3, 4)])
    f = tmp_path / "tree.txt"
    write_instance(inst, f)
    _, b, _ = run(capsys, "bounds", f, "--cuts", "c1c2")
    _, e, _ = run(capsys, "solve", f, "--method", "exact")
    assert float(b) == pytest.approx(float(e), rel=1e-6)


def test_error_codes(capsys, tmp_path):
    code, _, err = run(capsys, "solve", tmp_path / "missing.txt")
    assert code == 3 and json.loads(err)["error"] == "io"
    bad = tmp_path / "bad.txt"
    bad.write_text("expanding-search 1\nvertices 2\nroot r\nvertex r prob 0\nvertex a prob 0.9\nedge r a 1\n")
    code, _, err = run(capsys, "solve", bad)
    assert code == 4 and "0.9" in json.loads(err)["message"]
    code, _, err = run(capsys, "solve", bad, "--bogus")
    assert code == 2 and json.loads(err)["error"] == "usage"
    code, _, err = run(capsys, "generate", "--family", "density-controlled", "--n", 10, "--density", 0.05,
                       "--out", tmp_path / "x.txt")
    assert code == 5


def test_generate_bench_ratio_verify(capsys, tmp_path):
    d = tmp_path / "inst"
    code, out, _ = run(capsys, "generate", "--family", "random-metric", "--n", 12, "--count", 10, "--seed", 0, "--out", d)
    assert code == 0 and len(out.split()) == 10
    res = tmp_path / "res.csv"
    code, _, _ = run(capsys, "bench", d, "--methods", "oracle,exact,greedy,local,lp-none,lp-c1c2", "--out", res)
    assert code == 0
    rows = list(csv.DictReader(res.open()))
    assert list(rows[0])[:9] == ["instance", "method", "cost", "lower_bound", "gap", "nodes", "cuts_c1", "cuts_c2", "wall_ms"]
    opt = {r["instance"]: float(r["cost"]) for r in rows if r["method"] == "oracle"}
    for r in rows:
        if r["method"] == "greedy":
            assert float(r["cost"]) / opt[r["instance"]] <= 8
        if r["method"] == "exact":
            assert float(r["cost"]) == pytest.approx(opt[r["instance"]], rel=1e-6)
    assert len(list((tmp_path / "res_solutions").glob("*.sol"))) == 40
    rep = tmp_path / "ratio.csv"
    code, _, _ = run(capsys, "ratio", res, "--out", rep)
    assert code == 0
    (g,) = list(csv.DictReader(rep.open()))
    assert 0 < float(g["lp-none"]) <= float(g["lp-c1c2"]) <= 1 + 1e-9
    assert float(g["greedy"]) >= 1 and float(g["local"]) >= 1
    code, out, _ = run(capsys, "verify", d)
    assert code == 0 and out.count(": ok") == 10


def test_ratio_tree_group_is_one(capsys, tmp_path):
    d = tmp_path / "trees"
    d.mkdir()
    for s in range(3):
        inst = Instance.from_edges([0, 0.2, 0.3, 0.5], [(0, 1, 2 + s), (1, 2, 1), (0, 3, 4)])
        write_instance(inst, d / f"t{s}.txt")
    res = tmp_path / "r.csv"
    run(capsys, "bench", d, "--methods", "exact,lp-none,lp-c1,lp-c2,lp-c1c2", "--out", res)
    rep = tmp_path / "q.csv"
    run(capsys, "ratio", res, "--out", rep)
    (g,) = list(csv.DictReader(rep.open()))
    for c in ("lp-none", "lp-c1", "lp-c2", "lp-c1c2"):
        assert float(g[c]) == pytest.approx(1.0, rel=1e-6)


def test_ratio_skips_groups_without_optimum(capsys, tmp_path):
    res = tmp_path / "r.csv"
    res.write_text("instance,method,cost,lower_bound,gap,nodes,cuts_c1,cuts_c2,wall_ms,n,density\n"
                   "a,greedy,3.0,,,,,,1,5,1.0\n")
    with pytest.warns(UserWarning, match="no optimum"):
        code, out, _ = run(capsys, "ratio", res)
    assert code == 0 and out.strip().splitlines() == ["n,density,instances,lp-none,lp-c1,lp-c2,lp-c1c2,greedy,local"]


def test_module_entry_point():
    import subprocess
    import sys

    p = subprocess.run([sys.executable, "-m", "expanding_search", "solve", str(DATA / "hub_k4_m3.txt"),
                        "--method", "greedy"], capture_output=True, text=True)
    assert p.returncode == 0 and float(p.stdout) > 0
