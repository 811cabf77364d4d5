import csv
import json

import pytest

from trippricing import cli
from trippricing import netmodel as nm


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def ref_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ref")
    assert run("assign", "--builtin", "nd-car-only", "--out", out) == 0
    return out


def test_assign_table_layout(ref_dir):
    table = rows(ref_dir / "paths.csv")
    assert table[0] == ["path", "od", "mode", "length_km", "flow_pax_h", "travel_time_min", "price_eur",
                        "unit_price_eur_km"]
    assert len(table) == 26
    assert table[1][:3] == ["1", "AD", "car"]
    assert table[1][4].isdigit()
    rec = json.loads((ref_dir / "record.json").read_text())
    assert rec["equilibrium"]["converged"]
    assert rec["scenario_id"] == "nd-car-only"
    assert "created" not in rec
    assert "created" in json.loads((ref_dir / "record.meta.json").read_text())


def test_assign_two_link(tmp_path):
    assert run("assign", "--builtin", "two-link", "--out", tmp_path) == 0
    assert len(rows(tmp_path / "paths.csv")) == 3


def test_assign_is_byte_identical(tmp_path, ref_dir):
    assert run("assign", "--builtin", "nd-car-only", "--out", tmp_path) == 0
    for name in ("record.json", "paths.csv", "metrics.csv"):
        assert (tmp_path / name).read_bytes() == (ref_dir / name).read_bytes()


def test_assign_with_prices(tmp_path, car_only):
    prices = tmp_path / "prices.csv"
    prices.write_text("path,unit_price_eur_km\n1,1.0\n")
    assert run("assign", "--builtin", "nd-car-only", "--prices", prices, "--out", tmp_path / "o") == 0
    table = rows(tmp_path / "o" / "paths.csv")
    assert float(table[1][6]) == pytest.approx(nm.path_length(car_only, "1"))
    rec = json.loads((tmp_path / "o" / "record.json").read_text())
    assert rec["deltas"]["TTS_pax_h"] != 0


def test_scenario_file(tmp_path, two_link):
    p = tmp_path / "s.toml"
    nm.save_scenario(two_link, p)
    assert run("assign", "--scenario", p, "--out", tmp_path / "o") == 0


@pytest.mark.parametrize("argv", [
    ["assign", "--scenario", "missing.toml"],
    ["assign"],
    ["assign", "--builtin", "nd-car-only", "--scenario", "x.toml"],
    ["assign", "--builtin", "atlantis"],
    ["assign", "--builtin", "two-link", "--damping", "wild"],
    ["design", "--builtin", "two-link"],
    ["design", "--builtin", "two-link", "--scheme", "trip", "--price-modes", "bus"],
    ["nonsense"],
])
def test_usage_errors(tmp_path, argv):
    assert run(*argv, "--out", tmp_path) == 2
    assert not (tmp_path / "record.json").exists()


def test_non_convergence_exit_code(tmp_path):
    assert run("assign", "--builtin", "nd-car-only", "--max-iter", "2", "--out", tmp_path) == 3
    rec = json.loads((tmp_path / "record.json").read_text())
    assert rec["equilibrium"]["converged"] is False
    assert rec["warnings"]


@pytest.fixture(scope="module")
def trip_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("trip")
    code = run("design", "--builtin", "nd-car-only", "--scheme", "trip", "--objective", "eff",
               "--pop", 30, "--gens", 40, "--polish", 150, "--out", out)
    assert code == 0
    return out


def test_design_efficiency(trip_dir):
    rec = json.loads((trip_dir / "record.json").read_text())
    assert rec["deltas"]["TTS_pax_h"] <= -0.60
    assert rec["weights"] == [1.0, 0.0, 0.0, 0.0, 0.0]
    assert rec["bounds"] == [0.0, 5.0]
    assert rec["seed"] == 0
    trace = rows(trip_dir / "trace.csv")
    assert trace[0][:5] == ["restart", "generation", "best", "mean", "feasible_fraction"]
    assert len(trace) > 40


def test_design_records(tmp_path):
    small = ["--pop", 10, "--gens", 2, "--polish", 0]
    assert run("design", "--builtin", "nd-car-only", "--scheme", "trip", "--objective", "all", *small,
               "--out", tmp_path / "a") == 0
    assert json.loads((tmp_path / "a" / "record.json").read_text())["weights"] == [0.2] * 5
    assert run("design", "--builtin", "nd-car-only", "--scheme", "road", "--revenue-neutral", *small,
               "--out", tmp_path / "b") == 0
    rec = json.loads((tmp_path / "b" / "record.json").read_text())
    assert rec["bounds"] == [-5.0, 5.0]
    assert rec["b"] == 1000.0 and rec["toll_dominance"]
    assert abs(rec["revenue"]["net"]) <= 1000.0


def test_design_warm_start(tmp_path, trip_dir):
    assert run("design", "--builtin", "nd-car-only", "--scheme", "road", "--warm-start",
               trip_dir / "record.json", "--out", tmp_path) == 2


def test_evaluate_reproduces_record(tmp_path, trip_dir, ref_dir):
    assert run("evaluate", "--priced", trip_dir / "record.json", "--baseline", ref_dir / "record.json",
               "--out", tmp_path) == 0
    a = json.loads((trip_dir / "record.json").read_text())
    b = json.loads((tmp_path / "record.json").read_text())
    for k, v in a["metrics"].items():
        assert b["metrics"][k] == pytest.approx(v, rel=1e-4, abs=1e-6)
    for k, v in a["deltas"].items():
        assert b["deltas"][k] == pytest.approx(v, rel=1e-4, abs=1e-6)


def test_compare(tmp_path, ref_dir, trip_dir):
    assert run("compare", ref_dir / "record.json", ref_dir / "record.json", "--out", tmp_path) == 0
    table = rows(tmp_path / "compare.csv")
    assert all("[+0%]" in r[2] for r in table[1:] if r[2] and "[" in r[2])
    assert run("compare", ref_dir / "record.json", trip_dir / "record.json", "--out", tmp_path) == 0
    table = {r[0]: r for r in rows(tmp_path / "compare.csv")}
    assert table["TTS_pax_h"][2].endswith("(+)")
    assert table["PC"][2].endswith("(-)")


def test_compare_mixed_scenarios(tmp_path, ref_dir):
    assert run("assign", "--builtin", "two-link", "--out", tmp_path / "t") == 0
    assert run("compare", ref_dir / "record.json", tmp_path / "t" / "record.json", "--out", tmp_path) == 2
    assert run("compare", tmp_path / "none.json", "--out", tmp_path) == 2


def test_calibrate(tmp_path):
    assert run("calibrate", "--builtin", "nd-multimodal", "--out", tmp_path) == 0
    s = nm.load_scenario(tmp_path / "scenario.toml")
    expected = nm.ND_MULTIMODAL_DEMAND
    for w, d in s.demand.items():
        assert d == pytest.approx(expected[w], abs=0.1)


def test_classical(tmp_path, capsys):
    assert run("classical", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "666.67 333.33" in out and "5.0000 2.5000" in out and "1.2500 -1.2500" in out
    doc = json.loads((tmp_path / "classical.json").read_text())
    assert doc["alternative"]["pareto_improving"]
