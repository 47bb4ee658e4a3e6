"""Run configuration: JSON in, fully-explicit defaults out.

Every run is driven by one JSON file; load_config materializes every
default so the dumped form replays the run exactly (the round-trip
load(dump(load(x))) == load(x) is an invariant, tested).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .grid import RadialGrid
from .specfun import ProblemParams

_DEFAULTS = {
    "params": {"n": 3.0, "alpha": 1.0, "s": 0.5, "gamma": 0.0, "lam": 0.0},
    "grid": {"N": 400, "r_min": 1e-6, "R": 1.0},
    "constants": {"gammas": None},
    "solve": {"max_iter": 2000, "tol_j": 1e-10, "tol_grad": 1e-8},
    "mass": {"delta": None, "solver": "direct", "fit_window": None, "planted": 0.7},
    "scan": {
        "gammas": [0.0],
        "lambdas": [0.1],
        "R_infinity": 1000.0,
        "N_rn": 400,
        "rel_tol": 0.01,
    },
    "out_dir": "out",
}


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    out = {}
    for key, dval in defaults.items():
        if key in given:
            gval = given[key]
            if isinstance(dval, dict) and isinstance(gval, dict):
                out[key] = _merge(dval, gval, f"{path}{key}.")
            else:
                out[key] = gval
        else:
            out[key] = dval
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys at '{path}': {sorted(unknown)}")
    return out


@dataclass
class RunConfig:
    data: dict = field(default_factory=lambda: json.loads(json.dumps(_DEFAULTS)))

    @property
    def params(self) -> ProblemParams:
        p = self.data["params"]
        return ProblemParams(n=p["n"], alpha=p["alpha"], s=p["s"], gamma=p["gamma"], lam=p["lam"])

    def grid(self) -> RadialGrid:
        g = self.data["grid"]
        return RadialGrid(n=self.data["params"]["n"], r_min=g["r_min"], R=g["R"], N=g["N"])

    def section(self, name: str) -> dict:
        return self.data[name]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2) + "\n"


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return RunConfig(_merge(_DEFAULTS, raw))
