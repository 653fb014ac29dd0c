import json

import numpy as np
import pytest

from breather import io as bio
from breather.cli import main
from breather.discretization import DiscreteProfile
from breather.exceptions import MissingArtifact

from conftest import CONFIGS


def small_config(tmp_path, name, K=8, N=16, **top):
    doc = json.loads((CONFIGS / f"{name}.json").read_text())
    doc["discretization"] = {"K": K, "N": N}
    doc.update(top)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(doc))
    return path


def test_validate_exit_codes(tmp_path, capsys):
    assert main(["validate", str(CONFIGS / "fig1_cylindrical.json")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and rep["audit"]["a6_witnesses"][:3] == [1, 5, 9]

    doc = json.loads((CONFIGS / "fig1_cylindrical.json").read_text())
    doc["potential"]["d"] = 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", str(bad)]) == 1
    assert "0<d<c⁻²−1" in capsys.readouterr().err

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["validate", str(broken)]) == 2
    assert main(["validate", str(tmp_path / "absent.json")]) == 2
    assert main(["nonsense"]) == 2


def test_pipeline_is_deterministic(tmp_path):
    cfg = small_config(tmp_path, "fig2_slab_averaged")
    hashes = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["solve", str(cfg), "--out", str(out)]) == 0
        assert main(["reconstruct", str(cfg), "--out", str(out), "--n-ext", "40"]) == 0
        assert main(["verify", str(cfg), "--out", str(out)]) == 0
        names = [bio.PROFILE_FILE, bio.ENERGY_FILE, bio.TRACE_FILE, bio.FUNDSOL_FILE,
                 bio.FIELD_FILE, bio.DIAG_FILE]
        hashes.append({n: bio.sha256_file(out / n) for n in names})
        man = bio.read_json(out / bio.MANIFEST_FILE)
        assert set(names) <= set(man["outputs"])
        assert {"fundsol", "solve", "reconstruct", "verify"} <= set(man["timings"])
    assert hashes[0] == hashes[1]
    diag = bio.read_json(tmp_path / "a" / bio.DIAG_FILE)
    assert diag["spectrum_class"] == "Monochromatic(1)" and diag["passed"]
    header = (tmp_path / "a" / bio.FIELD_FILE).read_text().splitlines()[0]
    assert header == "x,t,w,w_t,intensity"


def test_verify_zero_profile(tmp_path):
    cfg = small_config(tmp_path, "fig1_cylindrical", K=5, N=8)
    out = tmp_path / "zero"
    out.mkdir()
    bio.save_profile(out / bio.PROFILE_FILE,
                     DiscreteProfile("cylindrical", 2.0, (1, 3, 5), np.zeros((3, 9), complex)))
    assert main(["verify", str(cfg), "--out", str(out)]) == 0
    diag = bio.read_json(out / bio.DIAG_FILE)
    assert all(diag["checks"].values()) and diag["energy_value"] == 0


def test_missing_artifacts(tmp_path):
    cfg = small_config(tmp_path, "fig1_slab")
    assert main(["reconstruct", str(cfg), "--out", str(tmp_path / "none")]) == 1
    assert main(["verify", str(cfg), "--out", str(tmp_path / "none")]) == 1
    with pytest.raises(MissingArtifact):
        bio.require([tmp_path / "nothing.json"])


def test_subspace_solve(tmp_path):
    cfg = small_config(tmp_path, "fig2_cylindrical", K=15, N=16)
    out = tmp_path / "sub"
    assert main(["solve", str(cfg), "--out", str(out), "--subspace-k0", "3"]) == 0
    prof = bio.load_profile(out / bio.PROFILE_FILE)
    live = [k for k, row in zip(prof.modes, prof.coeffs) if np.any(row != 0)]
    assert live == [3, 9, 15]
    assert bio.read_json(out / bio.ENERGY_FILE)["E_total"] < 0
    assert main(["verify", str(cfg), "--out", str(out)]) == 0


def test_fundsol_and_sweep(tmp_path, capsys):
    cfg = small_config(tmp_path, "fig2_slab")
    out = tmp_path / "fs"
    assert main(["fundsol", str(cfg), "--out", str(out), "--k-max", "9"]) == 0
    rows = (out / bio.FUNDSOL_FILE).read_text().splitlines()
    assert rows[0] == "k,phi_R,dphi_R,q,tail_norm,excluded" and len(rows) == 6
    sw = tmp_path / "sw"
    assert main(["sweep", str(cfg), "--out", str(sw), "--d-min", "0.4", "--d-max", "1.2",
                 "--count", "8"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["fit_points"] >= 2 and summary["exponent"] > 0
    assert "exponent_linear" in summary
    assert len((sw / bio.SWEEP_FILE).read_text().splitlines()) == 9


def test_profile_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    p = DiscreteProfile("slab", 1.5, (1, 3), rng.standard_normal((2, 5)) + 1j)
    q = bio.load_profile(bio.save_profile(tmp_path / "p.json", p))
    assert np.array_equal(p.coeffs, q.coeffs) and q.modes == (1, 3) and q.R == 1.5


def test_manifest_merges_same_config(tmp_path):
    a = bio.RunManifest.start({"x": 1})
    a.record(bio.write_json(tmp_path / "one.json", {"v": 1}))
    a.write(tmp_path)
    b = bio.RunManifest.start({"x": 1})
    b.record(bio.write_json(tmp_path / "two.json", {"v": 2}))
    b.write(tmp_path)
    assert set(bio.read_json(tmp_path / bio.MANIFEST_FILE)["outputs"]) == {"one.json", "two.json"}
    c = bio.RunManifest.start({"x": 2})
    c.write(tmp_path)
    assert bio.read_json(tmp_path / bio.MANIFEST_FILE)["outputs"] == {}
