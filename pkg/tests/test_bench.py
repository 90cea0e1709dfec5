import csv
import json

import pytest

from despeckle import bench
from despeckle.bench import TABLE_COLUMNS, load_suite, run_suite
from despeckle.cli import main
from despeckle.config import ConfigError


def _suite(tmp_path, doc):
    p = tmp_path / "suite.json"
    p.write_text(json.dumps(doc))
    return p


def _table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_gray_grid_table_shape(tmp_path):
    doc = {"images": {"peppers": "phantom:blocks", "parrots": "phantom:sar"},
           "grid": {"images": ["peppers", "parrots"]}, "seeds": 1, "crop": 24,
           "stop": {"max_iters": 3}}
    code, rows = run_suite(load_suite(_suite(tmp_path, doc)), tmp_path / "out")
    assert code == 0
    table = _table(tmp_path / "out" / "table.csv")
    assert len(table) == 24 and list(table[0]) == list(TABLE_COLUMNS)
    assert {(r["image"], r["looks"], r["model"]) for r in table} == {
        (i, str(L), m) for i in ("peppers", "parrots") for L in (1, 3, 5, 10)
        for m in ("hpcpde", "tdfm", "proposed")}
    for r in table:
        assert r["status"] == "ok" and r["seeds"] == "1"
        assert r["preset"] == f"{r['model']}-{r['image']}-L{r['looks']}"
        assert r["ref_psnr"] != "" and float(r["si_mean"]) > 0
    assert (tmp_path / "out" / "peppers-proposed-L3-s0" / "summary.json").exists()


def test_empty_suite_header_only(tmp_path, capsys):
    assert main(["bench", "--suite", str(_suite(tmp_path, {})), "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "table.csv").read_text().splitlines()
    assert lines == [",".join(TABLE_COLUMNS)]


def test_misnamed_image_is_flagged(tmp_path):
    doc = {"images": {"blocks": "phantom:blocks", "typo": "nosuch.pgm"}, "seeds": 2, "crop": 16,
           "stop": {"max_iters": 2},
           "cells": [{"image": "blocks", "model": "proposed", "looks": 3},
                     {"image": "typo", "model": "proposed", "looks": 3},
                     {"image": "blocks", "model": "hpcpde", "looks": 5}]}
    code, rows = run_suite(load_suite(_suite(tmp_path, doc)), tmp_path / "out")
    assert code == 2
    status = {(r["image"], r["model"]): r["status"] for r in rows}
    assert status[("blocks", "proposed")] == "ok"
    assert status[("blocks", "hpcpde")] == "ok"
    assert status[("typo", "proposed")].startswith("failed 2/2: io error")


def test_noisy_cell_runs_once_with_sar_reference(tmp_path):
    doc = {"images": {"sar": "phantom:sar"}, "seeds": 3, "crop": 24,
           "cells": [{"image": "sar", "model": "tdfm", "preset": "sar-image2", "noisy": True}]}
    code, rows = run_suite(load_suite(_suite(tmp_path, doc)), tmp_path / "out")
    assert code == 0
    (row,) = rows
    assert row["seeds"] == 1 and row["looks"] == "" and row["ref_si"] == "0.3275"
    assert row["psnr_mean"] == ""


@pytest.mark.parametrize("doc,key", [
    ({"imagez": {}}, "imagez"),
    ({"grid": {"image": ["a"]}}, "grid.image"),
    ({"cells": [{"image": "a", "model": "proposed", "looks": 3, "lam": 1}]}, "cells[0].lam"),
])
def test_unknown_keys_rejected(tmp_path, doc, key):
    with pytest.raises(ConfigError, match=key.replace("[", r"\[").replace("]", r"\]")):
        load_suite(_suite(tmp_path, doc))
    assert main(["bench", "--suite", str(tmp_path / "suite.json"), "--out", str(tmp_path / "o")]) == 1


def test_bad_seeds_and_models(tmp_path):
    for doc in ({"seeds": 0}, {"seeds": "five"}, {"cells": [{"image": "a", "model": "pm", "looks": 1}]},
                {"cells": [{"image": "a", "model": "tdfm"}]}, {"crop": 1}):
        with pytest.raises(ConfigError):
            load_suite(_suite(tmp_path, doc))
    assert load_suite(_suite(tmp_path, {"seeds": 3, "base_seed": 10})).seeds == (10, 11, 12)


def test_workers_env(tmp_path, monkeypatch):
    doc = {"images": {"blocks": "phantom:blocks"}, "seeds": 2, "crop": 16, "stop": {"max_iters": 2},
           "cells": [{"image": "blocks", "model": "proposed", "looks": 3}]}
    suite = load_suite(_suite(tmp_path, doc))
    _, serial = run_suite(suite, tmp_path / "a", workers=1)
    monkeypatch.setenv(bench.WORKERS_ENV, "2")
    _, parallel = run_suite(suite, tmp_path / "b")
    assert serial == parallel
    assert (tmp_path / "a" / "table.csv").read_bytes() == (tmp_path / "b" / "table.csv").read_bytes()
    monkeypatch.setenv(bench.WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        run_suite(suite, tmp_path / "c")
