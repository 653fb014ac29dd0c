"""JSON/CSV artifacts and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np

from .discretization import DiscreteProfile
from .exceptions import MissingArtifact

PROFILE_FILE = "profile.json"
ENERGY_FILE = "energy.json"
TRACE_FILE = "trace.csv"
FUNDSOL_FILE = "fundsol.csv"
FIELD_FILE = "field.csv"
DIAG_FILE = "diagnostics.json"
SWEEP_FILE = "sweep.csv"
MANIFEST_FILE = "manifest.json"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, doc):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing artifact {path}")
    return json.loads(path.read_text())


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])
    return path


def profile_to_dict(p: DiscreteProfile) -> dict:
    return {"geometry": p.geometry, "R": p.R, "modes": list(p.modes),
            "coeffs": [[[z.real, z.imag] for z in row] for row in p.coeffs]}


def profile_from_dict(doc) -> DiscreteProfile:
    c = np.array(doc["coeffs"], dtype=float)
    return DiscreteProfile(doc["geometry"], float(doc["R"]), tuple(doc["modes"]),
                           c[..., 0] + 1j * c[..., 1])


def save_profile(path, p: DiscreteProfile):
    return write_json(path, profile_to_dict(p))


def load_profile(path) -> DiscreteProfile:
    return profile_from_dict(read_json(path))


def save_trace(path, trace):
    return write_csv(path, ["iter", "energy", "grad_norm", "step"], trace)


def save_fundsol(path, table):
    return write_csv(path, ["k", "phi_R", "dphi_R", "q", "tail_norm", "excluded"],
                     [(k, v, d, q, t, int(x)) for k, v, d, q, t, x in table.rows()])


def save_field(path, fld):
    """Long-format grid: one row per (r, t) sample."""
    label = "r" if fld.geometry == "cylindrical" else "x"
    R, Tt = np.meshgrid(fld.r, fld.t, indexing="ij")
    rows = zip(R.ravel(), Tt.ravel(), fld.w.ravel(), fld.w_t.ravel(), fld.intensity.ravel())
    return write_csv(path, [label, "t", "w", "w_t", "intensity"], rows)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    seeds: dict = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def start(cls, config_doc, seeds=None):
        import scipy
        from . import __version__
        versions = {"breather": __version__, "numpy": np.__version__,
                    "scipy": scipy.__version__, "python": platform.python_version()}
        return cls(config_hash(config_doc), dict(seeds or {}), {}, {}, versions)

    def record(self, path):
        path = Path(path)
        self.outputs[path.name] = sha256_file(path)

    def timed(self, name):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.timings[name] = time.perf_counter() - self.t0
                return False

        return _Timer()

    def to_dict(self):
        return {"config_hash": self.config_hash, "seeds": self.seeds,
                "outputs": self.outputs, "timings": self.timings, "versions": self.versions}

    def write(self, out_dir):
        path = Path(out_dir) / MANIFEST_FILE
        old = read_json(path) if path.exists() else None
        doc = self.to_dict()
        if old and old.get("config_hash") == self.config_hash:
            # keep artifacts from earlier stages of the same pipeline
            doc["outputs"] = {**old.get("outputs", {}), **doc["outputs"]}
            doc["timings"] = {**old.get("timings", {}), **doc["timings"]}
            doc["seeds"] = {**old.get("seeds", {}), **doc["seeds"]}
        return write_json(path, doc)


def require(paths: List[Path]):
    for p in paths:
        if not Path(p).exists():
            raise MissingArtifact(f"missing artifact {p}; run the earlier pipeline stage first")
