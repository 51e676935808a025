import json

import pytest

from mobicache.cli import _int_list, main
from mobicache.experiments import read_table
from mobicache.formats import read_instance, read_placement


def run(*argv):
    return main([str(a) for a in argv])


def test_int_list():
    assert _int_list("0-3,7") == [0, 1, 2, 3, 7]
    assert _int_list("5") == [5]


def test_validate(data_dir, capsys, tmp_path):
    assert run("validate", "--instance", data_dir / "motivating.txt") == 0
    assert "2 stations" in capsys.readouterr().out
    bad = tmp_path / "p.txt"
    bad.write_text("cache 0 0,1\n")
    assert run("validate", "--instance", data_dir / "motivating.txt", "--placement", bad) == 2


def test_validate_reports_broken_instance(tmp_path, caplog):
    path = tmp_path / "i.txt"
    path.write_text("stations 2\ncapacities 1 1\nusers 1\ncontents 1\nslots 1\nreach 0 0 7\n")
    assert run("validate", "--instance", path) == 2
    assert "slot 0, user 0: unknown station 7" in caplog.text


def test_place_and_evaluate(data_dir, tmp_path, capsys):
    out = tmp_path / "p.txt"
    assert run("place", "--instance", data_dir / "motivating.txt", "--algorithm", "femtocacher", "--out", out) == 0
    assert out.read_text() == "cache 0 0\ncache 1 1\n"
    assert read_placement(out, 2).cached == (frozenset({0}), frozenset({1}))
    assert run("evaluate", "--instance", data_dir / "motivating.txt", "--placement", out) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["total_cost"] == 47 and report["per_slot_cost"] == [16, 31]
    assert run("evaluate", "--instance", data_dir / "motivating.txt", "--algorithm", "mobicacher") == 0
    assert json.loads(capsys.readouterr().out)["total_cost"] == 38


def test_sweep(data_dir, tmp_path):
    out = tmp_path / "sweep"
    assert run("sweep", "--instance", data_dir / "motivating.txt", "--capacities", "0-3",
               "--algorithms", "mobicacher,exact", "--out", out) == 0
    rows = read_table(out / "sweep.tsv")
    assert [r["utility"] for r in rows if r["algorithm"] == "mobicacher"] == ["0", "28", "48", "66"]
    assert json.loads((out / "manifest.json").read_text())["command"] == "sweep"
    text = (out / "sweep.tsv").read_text()
    assert text.startswith("# manifest ")
    assert "# per_user_utility = utility / n_users" in text


def test_timeseries(data_dir, tmp_path):
    out = tmp_path / "ts"
    assert run("timeseries", "--instance", data_dir / "motivating.txt", "--capacity", 1,
               "--algorithms", "mobicacher,femtocacher", "--out", out) == 0
    rows = read_table(out / "timeseries.tsv")
    assert [r["cumulative_utility"] for r in rows] == ["14", "28", "17", "19"]


def test_ratio(tmp_path, capsys):
    out = tmp_path / "ratio"
    assert run("ratio", "--seeds", "0-29", "--out", out) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["instances"] == 30 and summary["violations"] == 0
    assert len(read_table(out / "ratio.tsv")) == 30


def test_compare(tmp_path):
    out = tmp_path / "cmp"
    assert run("compare", "--seeds", "0-9", "--capacity", 2, "--out", out,
               "--synthetic", "stay_probability=0.3") == 0
    assert len(read_table(out / "compare.tsv")) == 10
    kinds = [r["kind"] for r in read_table(out / "compare_summary.tsv")]
    assert kinds.count("algorithm") == 3 and kinds.count("pair") == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["synthetic"] == {"stay_probability": 0.3}


def test_compare_needs_seeds(tmp_path):
    assert run("compare", "--seeds", "0-2", "--out", tmp_path) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synthetic": {"n_users": 5}, "seeds": [1, 2], "capacities": [0, 2],
                               "out": str(tmp_path / "o")}))
    assert run("sweep", "--config", cfg) == 0
    rows = read_table(tmp_path / "o" / "sweep.tsv")
    assert len(rows) == 2 * 3 * 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert run("sweep", "--config", bad) == 2


def test_generate(tmp_path, data_dir):
    out = tmp_path / "g.txt"
    assert run("generate", "--seed", 42, "--out", out) == 0
    assert out.read_text() == (data_dir / "golden_synthetic_seed42.txt").read_text()
    assert run("generate", "--seed", 1, "--synthetic", "stations_per_cell=2", "--out", out) == 0
    assert read_instance(out).n_stations == 9


def test_ingest(tmp_path, data_dir):
    out = tmp_path / "i.txt"
    assert run("ingest", "--mobility", data_dir / "wtd_small.tsv", "--listening", data_dir / "listening_small.tsv",
               "--window", "0,40", "--capacity", 2, "--top-n", 2, "--out", out) == 0
    inst = read_instance(out)
    assert (inst.n_stations, inst.n_users, inst.library_size, inst.n_slots) == (3, 3, 2, 2)
    assert inst.capacities == (2, 2, 2)
    text = out.read_text()
    assert "# station 0 ap1" in text and "# user 2 C" in text and "# content 1 s" in text


@pytest.mark.parametrize("verb", ["sweep", "timeseries", "ratio", "compare"])
def test_rerun_byte_identical(tmp_path, verb):
    files = {}
    for attempt in ("a", "b"):
        out = tmp_path / "out"
        args = [verb, "--seeds", "0-9", "--capacities", "2", "--out", out]
        assert run(*args) == 0
        files[attempt] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    assert files["a"] == files["b"]
