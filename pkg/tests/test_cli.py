import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from specprop.cli import TABLE_FIELDS, main
from specprop.errors import ManifestError
from specprop.manifest import parse_manifest

MANIFESTS = Path(__file__).resolve().parents[1] / "manifests"

FAMILY = {
    "scenario": "toy",
    "tGrid": [0.0, 0.5, 1.0],
    "epsilonList": [0.5],
    "seeds": {"sampling": 3},
    "family": {"matrices": [[[0.5, 0.0], [0.0, 1.5]]]},
    "options": {"truncationVectors": 20},
}


def _write(tmp_path, doc, name="m.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return str(p)


def test_constant_verify_lemmas(tmp_path):
    rc = main(["verify-lemmas", "--manifest", str(MANIFESTS / "constant.json"), "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["violations"] == [] and summary["checks"] > 0
    with open(tmp_path / "lemma_checks.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(r["ok"] == "1" for r in rows)


def test_family_propinquity_and_report(tmp_path):
    rc = main(["propinquity", "--manifest", _write(tmp_path, FAMILY), "--out", str(tmp_path / "o")])
    assert rc == 0
    out = tmp_path / "o"
    with open(out / "table.csv") as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames == TABLE_FIELDS
        rows = list(reader)
    assert len(rows) == 3 and all(r["certified"] == "1" for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert [b["spectral_bound"] for b in summary["bounds"]] == [0.0, 0.0, 0.0]
    assert main(["report", "--out", str(out)]) == 0
    plot = json.loads((out / "plot_data.json").read_text())
    assert plot["t"] == [0.0, 0.5, 1.0]
    assert (out / "bounds.csv").read_text().startswith("t,spectral_bound")


def test_bad_t_grid_exits_2(tmp_path, capsys):
    doc = dict(FAMILY, tGrid=[0.0, 1.5])
    rc = main(["verify-lemmas", "--manifest", _write(tmp_path, doc), "--out", str(tmp_path)])
    assert rc == 2
    assert "tGrid[1]" in capsys.readouterr().err


def test_malformed_json_names_line(tmp_path, capsys):
    rc = main(["verify-lemmas", "--manifest", _write(tmp_path, '{\n  "tGrid": [0.1],\n}'),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize("patch, field", [
    ({"epsilonList": [0.0]}, "epsilonList[0]"),
    ({"seeds": {}}, "seeds.sampling"),
    ({"seeds": {"sampling": -1}}, "seeds.sampling"),
    ({"tGrid": [0.5, 0.2]}, "tGrid"),
    ({"options": {"bogus": 1}}, "options.bogus"),
    ({"path": {"conformal": {}}}, "path"),
    ({"gridSize": 7}, "gridSize"),
])
def test_manifest_field_errors(patch, field):
    with pytest.raises(ManifestError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_manifest(json.dumps({**FAMILY, **patch}))


def test_env_overrides_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("SPECPROP_SEED", "99")
    monkeypatch.setenv("SPECPROP_OUT", str(tmp_path / "env"))
    assert main(["verify-lemmas", "--manifest", _write(tmp_path, FAMILY)]) == 0
    assert (tmp_path / "env" / "summary.json").exists()
    # flag beats environment
    assert main(["verify-lemmas", "--manifest", _write(tmp_path, FAMILY), "--seed", "1",
                 "--out", str(tmp_path / "flag")]) == 0


def test_report_without_run(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "specprop.cli", "verify-lemmas", "--manifest",
                        _write(tmp_path, FAMILY), "--out", str(tmp_path / "sub")],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
