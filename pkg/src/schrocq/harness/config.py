"""Run configuration: JSON with a versioned schema, validation and presets."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..tableaus import TABLEAU_NAMES
from .exact import Beam, superposition

SCHEMA_VERSION = 1
TAIL_THRESHOLD = 1e-8


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


@dataclass(frozen=True)
class IntervalSpec:
    a: float
    b: float
    n: int

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    def refined(self, factor: int) -> "IntervalSpec":
        return IntervalSpec(self.a, self.b, self.n * factor)

    def to_dict(self):
        return {"a": self.a, "b": self.b, "n": self.n}


@dataclass(frozen=True)
class CubeSpec:
    center: tuple
    side: float
    subdivisions: int

    @property
    def h(self) -> float:
        return self.side / self.subdivisions

    def refined(self, factor: int) -> "CubeSpec":
        return CubeSpec(self.center, self.side, self.subdivisions * factor)

    def to_dict(self):
        return {"center": list(self.center), "side": self.side, "subdivisions": self.subdivisions}


@dataclass(frozen=True)
class RunConfig:
    backend: str
    tableau: str
    k: float
    N: int
    mesh: IntervalSpec | CubeSpec
    beams: tuple = ()
    Q: int | None = None
    V0: float = 0.0
    output: str | None = None
    monitor_points: tuple = ()
    order: int = 4

    @property
    def dim(self) -> int:
        return 1 if self.backend == "1d" else 3

    @property
    def T(self) -> float:
        return self.N * self.k

    def with_(self, **changes) -> "RunConfig":
        d = self.to_dict()
        for key, val in changes.items():
            d[key] = val.to_dict() if isinstance(val, (IntervalSpec, CubeSpec)) else val
        if "k" in changes or "N" in changes:
            d.pop("T", None)
        return RunConfig.from_dict(d)

    def initial_condition(self):
        u, _ = superposition(self.beams, self.dim)
        return lambda x: u(x, 0.0)

    def exact_solution(self):
        """(u, grad u) of the free beam superposition, or None if V0 != 0."""
        if self.V0 != 0.0:
            return None
        return superposition(self.beams, self.dim)

    def boundary_tail(self) -> float:
        """max |u0| over boundary sample points."""
        u0 = self.initial_condition()
        if self.backend == "1d":
            return float(np.max(np.abs(u0(np.array([self.mesh.a, self.mesh.b])))))
        c, hs = np.asarray(self.mesh.center, float), self.mesh.side / 2
        g = np.linspace(-hs, hs, 9)
        pts = []
        for axis in range(3):
            for sgn in (-hs, hs):
                a, b = np.meshgrid(g, g)
                p = np.zeros((a.size, 3))
                others = [i for i in range(3) if i != axis]
                p[:, axis] = sgn
                p[:, others[0]] = a.ravel()
                p[:, others[1]] = b.ravel()
                pts.append(p + c)
        return float(np.max(np.abs(u0(np.concatenate(pts)))))

    # serialization

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "backend": self.backend,
            "tableau": self.tableau,
            "k": self.k,
            "N": self.N,
            "T": self.T,
            "mesh": self.mesh.to_dict(),
            "Q": self.Q,
            "V0": self.V0,
            "beams": [{"center": _unvec(b.center), "p0": _unvec(b.p0)} for b in self.beams],
            "output": self.output,
            "monitor_points": [list(p) for p in self.monitor_points],
            "order": self.order,
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<document>: not valid JSON ({exc})") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("<document>: expected a JSON object")
        known = {"schema_version", "backend", "tableau", "k", "N", "T", "mesh", "Q", "V0",
                 "beams", "output", "monitor_points", "order"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown field")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version: unsupported version {version!r} "
                              f"(expected {SCHEMA_VERSION})")
        backend = data.get("backend")
        if backend not in ("1d", "3d"):
            raise ConfigError(f"backend: must be '1d' or '3d', got {backend!r}")
        tableau = data.get("tableau", "radau_iia_2")
        if tableau not in TABLEAU_NAMES:
            raise ConfigError(f"tableau: unknown name {tableau!r}; choose from {', '.join(TABLEAU_NAMES)}")
        k, N = _time_grid(data)
        dim = 1 if backend == "1d" else 3
        mesh = _mesh(data.get("mesh"), backend)
        Q = data.get("Q")
        if Q is not None:
            Q = _int(Q, "Q")
            if Q < N:
                raise ConfigError(f"Q: must be at least N={N}, got {Q}")
        V0 = _float(data.get("V0", 0.0), "V0")
        beams_raw = data.get("beams", [])
        if not isinstance(beams_raw, list):
            raise ConfigError("beams: expected a list")
        beams = []
        for i, b in enumerate(beams_raw):
            if not isinstance(b, dict) or set(b) - {"center", "p0"}:
                raise ConfigError(f"beams[{i}]: expected an object with 'center' and 'p0'")
            beams.append(Beam(_vec(b.get("center", 0.0), dim, f"beams[{i}].center"),
                              _vec(b.get("p0", 0.0), dim, f"beams[{i}].p0")))
        output = data.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("output: expected a path string or null")
        pts_raw = data.get("monitor_points", [])
        if not isinstance(pts_raw, list):
            raise ConfigError("monitor_points: expected a list")
        if pts_raw and backend == "1d":
            raise ConfigError("monitor_points: only supported by the 3d backend")
        pts = tuple(_vec(p, 3, f"monitor_points[{i}]") for i, p in enumerate(pts_raw))
        order = _int(data.get("order", 4), "order")
        if order < 1:
            raise ConfigError("order: must be positive")
        return cls(backend, tableau, k, N, mesh, tuple(beams), Q, V0, output, pts, order)


def _unvec(v):
    return v[0] if len(v) == 1 else list(v)


def _float(v, name) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{name}: must be finite")
    return v


def _int(v, name) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ConfigError(f"{name}: expected an integer, got {v!r}")
    return v


def _vec(v, dim, name) -> tuple:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        if dim != 1:
            raise ConfigError(f"{name}: expected a list of {dim} numbers")
        return (_float(v, name),)
    if not isinstance(v, list) or len(v) != dim:
        raise ConfigError(f"{name}: expected {dim} numbers")
    return tuple(_float(x, f"{name}[{i}]") for i, x in enumerate(v))


def _time_grid(data):
    has = {key: data.get(key) is not None for key in ("k", "N", "T")}
    if sum(has.values()) < 2:
        raise ConfigError("k: need two of k, N, T")
    k = _float(data["k"], "k") if has["k"] else None
    N = _int(data["N"], "N") if has["N"] else None
    T = _float(data["T"], "T") if has["T"] else None
    if N is not None and N < 0:
        raise ConfigError(f"N: must be non-negative, got {N}")
    if T is not None and T < 0:
        raise ConfigError(f"T: must be non-negative, got {T}")
    if k is None:
        if N == 0:
            raise ConfigError("k: cannot be derived from T with N = 0")
        k = T / N
    if k <= 0:
        raise ConfigError(f"k: must be positive, got {k}")
    if N is None:
        N = int(round(T / k))
        if not math.isclose(N * k, T, rel_tol=1e-10, abs_tol=1e-14):
            raise ConfigError(f"T: {T} is not an integer multiple of k={k}")
    elif T is not None and not math.isclose(N * k, T, rel_tol=1e-10, abs_tol=1e-14):
        raise ConfigError(f"T: inconsistent with N*k = {N * k}")
    return k, N


def _mesh(m, backend):
    if not isinstance(m, dict):
        raise ConfigError("mesh: expected an object")
    if backend == "1d":
        if set(m) - {"a", "b", "n"}:
            raise ConfigError(f"mesh.{sorted(set(m) - {'a', 'b', 'n'})[0]}: unknown field for 1d")
        for key in ("a", "b", "n"):
            if key not in m:
                raise ConfigError(f"mesh.{key}: missing")
        a, b, n = _float(m["a"], "mesh.a"), _float(m["b"], "mesh.b"), _int(m["n"], "mesh.n")
        if not a < b:
            raise ConfigError("mesh.b: must exceed mesh.a")
        if n < 1:
            raise ConfigError("mesh.n: must be positive")
        return IntervalSpec(a, b, n)
    if set(m) - {"center", "side", "subdivisions"}:
        raise ConfigError(f"mesh.{sorted(set(m) - {'center', 'side', 'subdivisions'})[0]}: unknown field for 3d")
    for key in ("side", "subdivisions"):
        if key not in m:
            raise ConfigError(f"mesh.{key}: missing")
    center = _vec(m.get("center", [0.0, 0.0, 0.0]), 3, "mesh.center")
    side = _float(m["side"], "mesh.side")
    n = _int(m["subdivisions"], "mesh.subdivisions")
    if side <= 0:
        raise ConfigError("mesh.side: must be positive")
    if n < 1:
        raise ConfigError("mesh.subdivisions: must be positive")
    return CubeSpec(center, side, n)


PRESETS = {
    "two-beam": {
        "backend": "3d", "tableau": "radau_iia_2", "k": 0.25, "T": 0.5,
        "mesh": {"center": [0.0, 0.0, 0.0], "side": 4.0, "subdivisions": 8},
        "beams": [{"center": [-1.0, 1.0, 0.0], "p0": [1.0, 0.0, 0.0]},
                  {"center": [1.0, -1.0, 0.0], "p0": [0.0, 0.0, 0.0]}],
    },
    "1d": {
        "backend": "1d", "tableau": "radau_iia_2", "k": 0.01, "T": 1.0,
        "mesh": {"a": -6.0, "b": 6.0, "n": 4096},
        "beams": [{"center": 0.0, "p0": 1.0}],
    },
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown name {name!r}; choose from {', '.join(PRESETS)}")
    return RunConfig.from_dict(json.loads(json.dumps(PRESETS[name])))


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_json(fh.read())
