import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from calibra.cli import main
from calibra.slag import embed_complex
from calibra.symplin import random_symplectic, reflection


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_williamson(tmp_path, capsys):
    m = write_json(tmp_path / "m.json", np.diag([4.0, 1.0, 4.0, 1.0]).tolist())
    code, out, _ = run(capsys, "williamson", "--matrix", m)
    assert code == 0
    assert json.loads(out)["lambdas"] == pytest.approx([4.0, 1.0])


def test_spectrum_and_width(tmp_path, capsys):
    E = {"center": [0, 0, 0, 0], "shape": np.diag([1 / 4, 1 / 9, 1 / 4, 1 / 9]).tolist()}
    e = write_json(tmp_path / "e.json", E)
    code, out, _ = run(capsys, "spectrum", "--ellipsoid", e)
    assert code == 0 and json.loads(out)["radii"] == pytest.approx([2.0, 3.0])
    code, out, _ = run(capsys, "width", "--ellipsoid", e, "--k", "2")
    res = json.loads(out)
    assert res["width"] == pytest.approx(4 * math.pi)
    assert res["k_width"] == pytest.approx((4 * math.pi) ** 2 / 2)  # width^k / k!


def test_classify(tmp_path, capsys):
    for A, name in [(random_symplectic(2, seed=1), "symplectic"), (reflection(2), "anti_symplectic"),
                    (np.diag([2.0, 1, 1, 1]), "neither")]:
        m = write_json(tmp_path / "a.json", A.tolist())
        code, out, _ = run(capsys, "classify", "--matrix", m)
        assert code == 0 and json.loads(out)["class"] == name


def test_power_classify_volume_only(tmp_path, capsys):
    m = write_json(tmp_path / "a.json", np.diag([2.0, 0.5, 1.0, 1.0]).tolist())
    code, out, _ = run(capsys, "power-classify", "--matrix", m, "--k", "2")
    res = json.loads(out)
    assert code == 0 and res["preserves_power"] and res["classification"] == "volume_only"


def test_comass_catalog(capsys):
    code, out, _ = run(capsys, "comass", "--form", "g2_phi", "--restarts", "4")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0, abs=1e-6)


def test_comass_csv(capsys):
    code, out, _ = run(capsys, "comass", "--form", "wedge_simple", "--n", "4", "--k", "2", "--restarts", "3",
                       "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "restart,seed,value" and len(lines) == 4


def test_forms_eval(tmp_path, capsys):
    form = {"dim": 4, "degree": 2, "terms": [{"idx": [1, 3], "re": 1}, {"idx": [2, 4], "re": 1}]}
    f = write_json(tmp_path / "w.json", form)
    v = write_json(tmp_path / "v.json", [[1, 0, 0, 0], [0, 0, 1, 0]])
    code, out, _ = run(capsys, "forms-eval", "--form", f, "--vectors", v)
    assert code == 0 and json.loads(out)["value"] == 1.0
    code, out, _ = run(capsys, "forms-eval", "--form", f, "--power", "2")
    terms = json.loads(out)["form"]["terms"]
    assert terms == [{"idx": [1, 2, 3, 4], "re": -2.0}]


def test_slag_check(tmp_path, capsys):
    m = write_json(tmp_path / "c.json", {"re": [[2.0, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]})
    code, out, _ = run(capsys, "slag-check", "--matrix", m)
    res = json.loads(out)
    assert code == 0 and res["preserves_omega"]
    assert res["det"] == {"re": 1.0, "im": 0.0}


def test_witness(tmp_path, capsys):
    m = write_json(tmp_path / "p.json", np.diag([0.5, 1.0, 1.0, 1.0]).tolist())
    code, out, _ = run(capsys, "witness", "--matrix", m)
    res = json.loads(out)
    assert code == 0 and res["lambda"] < 1 and res["radius"] <= res["lambda"] + 1e-9
    c = write_json(tmp_path / "c.json", embed_complex(np.diag([2.0, 1.0])).tolist())
    code, out, _ = run(capsys, "witness", "--matrix", c, "--kind", "slag")
    assert code == 0 and json.loads(out)["lambda"] == pytest.approx(2**-0.5)


def test_squeeze_lagrangian_counterexample(capsys):
    code, out, _ = run(capsys, "squeeze", "--group", "sp", "--n", "2", "--cylinder", "lagrangian",
                       "--restarts", "4", "--budget", "2000")
    assert code == 0 and json.loads(out)["best_radius"] < 0.1


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--group", "slnc", "--n", "2", "--cylinder", "lagrangian",
                       "--trials", "100")
    res = json.loads(out)
    assert code == 0 and res["trials"] == 100 and res["violations"] == 0


# -- exit codes and artifacts -------------------------------------------------


def test_missing_file_exit_2(capsys):
    code, out, err = run(capsys, "classify", "--matrix", "/nonexistent/a.json")
    assert code == 2 and out == ""
    assert "cannot read" in json.loads(err)["message"]


def test_bad_input_exit_2(tmp_path, capsys):
    m = write_json(tmp_path / "a.json", np.eye(3).tolist())
    code, _, err = run(capsys, "classify", "--matrix", m)
    assert code == 2 and json.loads(err)["error"]
    m = write_json(tmp_path / "b.json", np.diag([1.0, -1.0]).tolist())
    assert run(capsys, "williamson", "--matrix", m)[0] == 2
    bad = tmp_path / "c.json"
    bad.write_text("[[1, 2")
    assert run(capsys, "classify", "--matrix", str(bad))[0] == 2


def test_witness_unit_det_exit_2(tmp_path, capsys):
    m = write_json(tmp_path / "a.json", random_symplectic(2, seed=3).tolist())
    code, _, err = run(capsys, "witness", "--matrix", m)
    assert code == 2 and json.loads(err)["error"] == "NoWitnessError"


def test_tripwire_exit_3(monkeypatch, tmp_path, capsys):
    import calibra.cli as cli
    from calibra.exceptions import TripwireError

    def boom(*a, **k):
        raise TripwireError("forced")

    monkeypatch.setattr(cli, "classify_power_preserver", boom)
    m = write_json(tmp_path / "a.json", np.eye(4).tolist())
    code, _, err = run(capsys, "power-classify", "--matrix", m, "--k", "1")
    assert code == 3 and json.loads(err) == {"error": "tripwire", "message": "forced"}


def test_out_writes_manifest_and_restarts(tmp_path, capsys):
    out = tmp_path / "run" / "sq.json"
    code, stdout, _ = run(capsys, "squeeze", "--group", "sp", "--n", "2", "--restarts", "3", "--budget", "200",
                          "--seed", "5", "--out", str(out))
    assert code == 0 and stdout == ""
    manifest = json.loads((tmp_path / "run" / "sq.manifest.json").read_text())
    assert manifest["command"] == "squeeze" and manifest["seed"] == 5
    assert manifest["parameters"]["restarts"] == 3
    assert manifest["input_digest"] == hashlib.sha256(b"").hexdigest()
    rows = (tmp_path / "run" / "sq.restarts.csv").read_text().splitlines()
    assert len(rows) == 4


def test_manifest_digests_inputs(tmp_path, capsys):
    m = tmp_path / "a.json"
    m.write_text(json.dumps(np.eye(4).tolist()))
    run(capsys, "classify", "--matrix", str(m), "--out", str(tmp_path / "r.json"))
    manifest = json.loads((tmp_path / "r.manifest.json").read_text())
    assert manifest["input_digest"] == hashlib.sha256(m.read_bytes()).hexdigest()


def test_reproducible_bytes(tmp_path, capsys):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        argv = ["squeeze", "--group", "power", "--n", "2", "--k", "1", "--restarts", "3", "--budget", "300",
                "--seed", "9", "--out", str(out)]
        assert main(argv) == 0
        outs.append((out.read_bytes(), (tmp_path / f"r{i}.restarts.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_thread_count_does_not_change_results(tmp_path, monkeypatch, capsys):
    texts = []
    for threads in ("1", "3"):
        monkeypatch.setenv("CALIBRA_THREADS", threads)
        code, out, _ = run(capsys, "squeeze", "--group", "sp", "--n", "2", "--restarts", "4", "--budget", "150")
        texts.append(out)
    assert texts[0] == texts[1]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "calibra", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
    proc = subprocess.run([sys.executable, "-m", "calibra", "classify", "--matrix", str(tmp_path / "x.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
