"""Experiment configuration: schema, validation, defaults.

One structured text file (TOML) per experiment.  Every file names the
experiment, a seed, sweep grids, symbol declarations, and the tolerances
its criteria are judged against; unknown experiments and malformed fields
are rejected with the exact field path in the message.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .symbols import Symbol, gaussian, gaussian_poly, polynomial_symbol

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "SymbolSpec",
    "ExperimentConfig",
    "load_config",
    "default_config",
]

EXPERIMENTS = (
    "kirillov",
    "star",
    "compose",
    "stability",
    "torsor",
    "disintegrate",
    "relchar",
    "nilcone",
    "microlocal",
)


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SymbolSpec:
    """Declarative symbol family entry, buildable at a chosen dimension."""

    family: str = "gaussian"
    label: str = ""
    center: tuple = ()
    width: float = 1.0
    modulation: tuple = ()
    amplitude: complex = 1.0
    poly: object = 1
    delta: float = 0.0

    def build(self, dim: int) -> Symbol:
        if self.family == "gaussian":
            center = np.zeros(dim) if not self.center else np.asarray(self.center, float)
            mod = np.asarray(self.modulation, float) if self.modulation else None
            return gaussian(center, width=self.width, modulation=mod,
                            amplitude=self.amplitude, dim=dim, delta=self.delta)
        if self.family == "gaussian_poly":
            A = np.eye(dim) / self.width**2
            b = (np.asarray(self.center, float) / self.width**2
                 if self.center else np.zeros(dim))
            return gaussian_poly(dim, poly=self.poly, A=A, b=b, delta=self.delta)
        if self.family == "polynomial":
            return polynomial_symbol(dim, self.poly)
        raise ConfigError("symbol.family", f"unknown family {self.family!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    jobs: int = 1
    out: str = ""
    algebra: str = "su2"
    pair: str = "so3_so2"
    sweep: dict = field(default_factory=dict)
    symbols: tuple = ()
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                "experiment",
                f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}",
            )
        if self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        if self.jobs < 1:
            raise ConfigError("jobs", "must be a positive integer")
        for key, grid in self.sweep.items():
            if len(grid) == 0:
                raise ConfigError(f"sweep.{key}", "grid must be nonempty")
        for key, tol in self.tolerances.items():
            if not tol > 0:
                raise ConfigError(f"tolerances.{key}", "tolerance must be positive")

    def symbol_objects(self, dim: int):
        return [spec.build(dim) for spec in self.symbols]

    def grid(self, key: str):
        if key not in self.sweep:
            raise ConfigError(f"sweep.{key}", "required grid is missing")
        return self.sweep[key]


# ---------------------------------------------------------------------------
# schema plumbing

_SCALARS = {
    "experiment": str,
    "seed": int,
    "jobs": int,
    "out": str,
    "algebra": str,
    "pair": str,
}


def _check_scalar(path, value, kind):
    if kind is int and isinstance(value, bool):
        raise ConfigError(path, "expected an integer, got a boolean")
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind):
        raise ConfigError(path, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _check_list(path, value, item_kind):
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {type(value).__name__}")
    out = []
    for i, item in enumerate(value):
        out.append(_check_scalar(f"{path}[{i}]", item, item_kind))
    return tuple(out)


def _symbol_spec(path, table) -> SymbolSpec:
    if not isinstance(table, dict):
        raise ConfigError(path, "expected a table")
    known = {"family", "label", "center", "width", "modulation", "amplitude", "poly", "delta"}
    for key in table:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown symbol field")
    amp = table.get("amplitude", 1.0)
    if isinstance(amp, list):
        amp = _check_list(f"{path}.amplitude", amp, float)
        if len(amp) != 2:
            raise ConfigError(f"{path}.amplitude", "complex amplitude needs [re, im]")
        amp = complex(amp[0], amp[1])
    else:
        amp = complex(_check_scalar(f"{path}.amplitude", amp, float))
    return SymbolSpec(
        family=_check_scalar(f"{path}.family", table.get("family", "gaussian"), str),
        label=_check_scalar(f"{path}.label", table.get("label", ""), str),
        center=_check_list(f"{path}.center", table.get("center", []), float),
        width=_check_scalar(f"{path}.width", table.get("width", 1.0), float),
        modulation=_check_list(f"{path}.modulation", table.get("modulation", []), float),
        amplitude=amp,
        poly=table.get("poly", 1),
        delta=_check_scalar(f"{path}.delta", table.get("delta", 0.0), float),
    )


def _from_tables(data: dict) -> ExperimentConfig:
    if "experiment" not in data:
        raise ConfigError("experiment", "required field is missing")
    known = set(_SCALARS) | {"sweep", "symbol", "params", "tolerances"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown top-level field")
    fields = {}
    for key, kind in _SCALARS.items():
        if key in data:
            fields[key] = _check_scalar(key, data[key], kind)
    sweep = {}
    for key, grid in data.get("sweep", {}).items():
        kind = float if any(isinstance(v, float) for v in (grid if isinstance(grid, list) else [])) else int
        sweep[key] = _check_list(f"sweep.{key}", grid, kind)
    symbols = tuple(
        _symbol_spec(f"symbol[{i}]", tbl) for i, tbl in enumerate(data.get("symbol", []))
    )
    params = dict(data.get("params", {}))
    tolerances = {
        key: _check_scalar(f"tolerances.{key}", val, float)
        for key, val in data.get("tolerances", {}).items()
    }
    return ExperimentConfig(sweep=sweep, symbols=symbols, params=params,
                            tolerances=tolerances, **fields)


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment file."""
    with open(path, "rb") as fh:
        try:
            data = _toml.load(fh)
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"not valid TOML ({exc})") from exc
    return _from_tables(data)


# ---------------------------------------------------------------------------
# shipped defaults: one complete config per experiment, mirrored by the
# files under configs/

_GAUSS_A = {"family": "gaussian", "label": "a", "center": [0.8, 0.0, 0.15], "width": 0.3}
_GAUSS_B = {"family": "gaussian", "label": "b", "center": [0.55, 0.35, 0.05], "width": 0.3}

_DEFAULTS = {
    "kirillov": {
        "experiment": "kirillov",
        "seed": 0,
        "algebra": "su2",
        "sweep": {"mass_j": list(range(1, 21)), "trace_j": [10, 20, 40, 80]},
        "symbol": [_GAUSS_A],
        "tolerances": {"orbit_mass": 1e-6, "trace_order": 0.3},
    },
    "star": {
        "experiment": "star",
        "seed": 0,
        "sweep": {"grades": [1, 2], "h_inverse": [8, 12, 18, 27]},
        "symbol": [
            {"family": "gaussian", "label": "a", "center": [0.4, -0.2, 0.3], "width": 1.0},
            {"family": "gaussian", "label": "b", "center": [-0.3, 0.5, 0.1], "width": 1.1},
        ],
        "params": {"algebras": "su2,heisenberg", "ns_axis": 18, "nu_axis": 36},
        "tolerances": {"order_gap_j1": 0.2, "order_gap_j2": 0.3},
    },
    "compose": {
        "experiment": "compose",
        "seed": 7,
        "algebra": "su2",
        "sweep": {"pairs": [0, 1, 2, 3, 4]},
        "params": {"j": 5, "h_inverse": 8, "n_adjoint": 20,
                   "poly_h_inverse": 32, "ns_axis": 18, "nu_axis": 36},
        "tolerances": {"composition": 1e-6, "adjoint": 1e-8, "polynomial": 1e-3},
    },
    "stability": {
        "experiment": "stability",
        "seed": 11,
        "sweep": {"samples": [1000]},
        "params": {"families": "gl3_gl2,so4_so3,so3_so2,u2_u1",
                   "satake_samples": 1000, "unstable_fraction": 0.3},
        "tolerances": {"agreement": 1.0, "satake": 1.0},
    },
    "torsor": {
        "experiment": "torsor",
        "seed": 3,
        "sweep": {"so3_samples": [50], "gl3_samples": [10]},
        "params": {"transports": 5, "starts": 8},
        "tolerances": {"residual": 1e-8, "uniqueness": 1e-6},
    },
    "disintegrate": {
        "experiment": "disintegrate",
        "seed": 5,
        "pair": "so3_so2",
        "sweep": {"symbols": [10]},
        "params": {"radius": 1.3, "n_mu": 48, "n_fiber": 96},
        "tolerances": {"residual": 1e-6, "dispersion": 1e-6},
    },
    "relchar": {
        "experiment": "relchar",
        "seed": 2,
        "algebra": "su2",
        "sweep": {"trace_j": [10, 20, 40, 80], "plancherel_j": [5]},
        "symbol": [_GAUSS_A, _GAUSS_B],
        "params": {"weight": 2, "n_fiber": 96, "plancherel_samples": 50,
                   "radius_attachment": "highest_weight"},
        "tolerances": {"order": 0.3, "empty_fiber": 1e-8, "plancherel": 1e-10},
    },
    "nilcone": {
        "experiment": "nilcone",
        "seed": 0,
        "sweep": {"h_inverse": [1, 2, 4, 8]},
        "params": {"strips_j": 5, "window_z": 2.0, "window_rho": 2.5,
                   "invariant": 1.0, "fiber_heights": 9},
        "tolerances": {"strip_mass": 1e-6},
    },
    "microlocal": {
        "experiment": "microlocal",
        "seed": 0,
        "algebra": "su2",
        "sweep": {"grid": [41]},
        "params": {"j": 5, "h_inverse": 8, "weight": 5, "extent": 1.3, "width": 0.3},
        "tolerances": {"cap_location": 0.25},
    },
}


def default_config(experiment: str) -> ExperimentConfig:
    """The shipped configuration for an experiment (same data as configs/)."""
    if experiment not in _DEFAULTS:
        raise ConfigError(
            "experiment",
            f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}",
        )
    return _from_tables(_DEFAULTS[experiment])
