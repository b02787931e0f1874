import json
import subprocess
import sys

import numpy as np
import pytest

from corrgeom.cli import main
from corrgeom.jsonio import matrix_to_pairs


def run(args, tmp_path, capsys):
    code = main([*args, "--report", str(tmp_path / "report.json")])
    out = capsys.readouterr().out
    return code, out


@pytest.fixture
def circles(tmp_path):
    p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["build", "--builtin", "circle-plane-waves", "--n", "8", "--kmax", "1", "-o", str(p1)]) == 0
    assert main(["build", "--builtin", "circle-plane-waves", "--n", "8", "--kmax", "1", "--radius", "2", "-o", str(p2)]) == 0
    return p1, p2


def test_build_torus(tmp_path):
    out = tmp_path / "g.json"
    assert main(["build", "--builtin", "torus-tetrads", "-o", str(out)]) == 0
    geom = json.loads(out.read_text())
    assert len(geom["atoms"]) == 1 and geom["f"] == 2
    report = json.loads((tmp_path / "g.json.report.json").read_text())
    assert report["command"] == "build" and report["exit_code"] == 0


def test_build_plane_waves_atom_count(circles):
    assert len(json.loads(circles[0].read_text())["atoms"]) == 8


def test_build_from_model_file(tmp_path, capsys):
    from corrgeom.model import circle_trig_pair, model_to_dict

    path = tmp_path / "model.json"
    path.write_text(json.dumps(model_to_dict(circle_trig_pair(16))))
    code, out = run(["build", str(path)], tmp_path, capsys)
    assert code == 0 and len(json.loads(out)["atoms"]) == 8
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["inputs"][0]["path"] == str(path) and len(report["inputs"][0]["sha256"]) == 64


def test_malformed_model_exit_64(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["build", str(bad)], tmp_path, capsys)[0] == 64


def test_usage_errors_exit_64(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["compare"])
    assert exc.value.code == 64
    assert run(["build"], tmp_path, capsys)[0] == 64


def test_missing_file_exit_66(tmp_path, capsys, circles):
    assert run(["compare", str(tmp_path / "nope.json"), str(circles[0])], tmp_path, capsys)[0] == 66


def test_numerical_failure_exit_70(tmp_path, capsys):
    code, _ = run(["build", "--builtin", "lattice-dirac-sea", "--n", "8", "--mass", "0", "--m-fields", "1"], tmp_path, capsys)
    assert code == 70


def test_compare_self_and_radii(circles, tmp_path, capsys):
    code, out = run(["compare", str(circles[0]), str(circles[0])], tmp_path, capsys)
    assert code == 0 and json.loads(out)["residual"] == 0.0
    code, out = run(["compare", str(circles[0]), str(circles[1])], tmp_path, capsys)
    assert code == 1 and json.loads(out)["certificate"]["invariant"] == "total_mass"


def test_compare_conjugated_copy(circles, tmp_path, capsys, rng):
    from conftest import random_unitary

    doc = json.loads(circles[0].read_text())
    u = random_unitary(doc["f"], rng)
    for atom in doc["atoms"]:
        m = np.array([complex(*z) for z in atom["matrix"]]).reshape(3, 3)
        atom["matrix"] = matrix_to_pairs(u @ m @ u.conj().T)
    path = tmp_path / "conj.json"
    path.write_text(json.dumps(doc))
    code, out = run(["compare", str(circles[0]), str(path)], tmp_path, capsys)
    assert code == 0, out


def test_gauge_check_commands(tmp_path, capsys):
    code, out = run(["gauge-check", "--builtin", "circle-plane-waves", "--chi", "sin", "--q", "1"], tmp_path, capsys)
    assert code == 0 and json.loads(out)["deviation"] <= 1e-13
    code, out = run(["gauge-check", "--builtin", "lattice-dirac-sea", "--chi", "random"], tmp_path, capsys)
    assert code == 0 and json.loads(out)["residual"] <= 1e-9
    code, _ = run(["gauge-check", "--builtin", "circle-trig-pair"], tmp_path, capsys)
    assert code == 64


def test_diffeo_and_symmetry_commands(tmp_path, capsys):
    code, out = run(["diffeo-check", "--builtin", "circle-plane-waves", "--n", "16", "--rotate", "3"], tmp_path, capsys)
    assert code == 0
    code, out = run(["diffeo-check", "--builtin", "circle-trig-pair", "--n", "16", "--reflect"], tmp_path, capsys)
    assert code == 0
    code, out = run(["symmetry-check", "--builtin", "circle-plane-waves", "--n", "16", "--kmax", "2", "--all-shifts"], tmp_path, capsys)
    assert code == 0 and json.loads(out)["symmetric"]


def test_symmetry_check_geometry_file(circles, tmp_path, capsys):
    u = tmp_path / "u.json"
    z = np.linalg.qr(np.arange(9).reshape(3, 3) + 1j * np.eye(3))[0]
    u.write_text(json.dumps(matrix_to_pairs(z)))
    code, out = run(["symmetry-check", "--geometry", str(circles[0]), "--unitary", str(u)], tmp_path, capsys)
    assert code == 1 and not json.loads(out)["symmetric"]


def test_mix_with_aligner(circles, tmp_path, capsys):
    verdict = tmp_path / "v.json"
    assert main(["compare", str(circles[0]), str(circles[0]), "-o", str(verdict)]) == 0
    out = tmp_path / "m.json"
    code = main(["mix", str(circles[0]), str(circles[1]), "--tau", "0.5", "--aligner-from", str(verdict), "-o", str(out)])
    doc = json.loads(out.read_text())
    assert code == 0 and len(doc["atoms"]) == 16
    assert doc["provenance"]["tau"] == 0.5 and len(doc["provenance"]["parents"]) == 2 and "aligner" in doc["provenance"]
    code, text = run(["inspect", str(out)], tmp_path, capsys)
    assert code == 0 and json.loads(text)["diagnostics"]["atom_count"] == 16


def test_dim_check_prints_formula(tmp_path, capsys):
    code, out = run(["dim-check", "--f", "4", "--p", "1", "--q", "1"], tmp_path, capsys)
    assert code == 0 and out.splitlines()[0] == "12" and "measured rank 12" in out


def test_resolution_csv(tmp_path, capsys):
    code, out = run(["resolution", "--builtin", "circle-plane-waves", "--ns", "8,16", "--format", "csv"], tmp_path, capsys)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "N,atom_count,min_separation" and lines[1].startswith("8,8,")


def _strip_timing(path):
    doc = json.loads(path.read_text())
    doc.pop("timing")
    return doc


@pytest.mark.parametrize(
    "args",
    [
        ["build", "--builtin", "lattice-dirac-sea"],
        ["gauge-check", "--builtin", "circle-plane-waves", "--chi", "random", "--seed", "3"],
        ["diffeo-check", "--builtin", "circle-trig-pair", "--n", "32", "--reflect"],
        ["dim-check", "--f", "3", "--p", "1", "--q", "1"],
    ],
)
def test_byte_determinism(args, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}.json"
        assert main([*args, "-o", str(out), "--report", str(tmp_path / f"rep{k}.json")]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    r0, r1 = _strip_timing(tmp_path / "rep0.json"), _strip_timing(tmp_path / "rep1.json")
    r0["outputs"] = r1["outputs"] = None
    assert r0 == r1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "corrgeom", "dim-check", "--f", "2", "--p", "1", "--q", "0"],
        capture_output=True,
        text=True,
        cwd=tmp_path,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("3\n")
    assert json.loads(proc.stderr)["command"] == "dim-check"
