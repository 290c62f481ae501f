"""JSON run configuration.

A configuration is a single JSON object::

    {
      "representation": {"family": "standard", "d": 2},
      "group": "U(2)",                       # optional, checked if present
      "state": {"diagonal": [0.7, 0.3]},
      "point": {"cartan": [0.9, 0.1]},       # optional, for ``rate``
      "seed": 0, "workers": 1,
      "optimizer": {"restarts": 8},
      "output": {"format": "json", "path": null},
      "simulate": {"m_list": [2, 4], "region": "ball:0.7,0.3:0.15", "samples": 10000},
      "grid": "0:1:101"
    }

Complex matrices are row-major lists of ``[re, im]`` pairs, either flat
(``d*d`` pairs) or nested by rows.  Representation families: ``standard``
(``d``), ``spin`` (``j`` as number or ``"a/b"``), ``torus`` (``weights``,
optional ``multiplicities``), ``tensor`` (``parts``) and ``power``
(``base``, ``m``).  States: ``matrix``, ``diagonal``, ``pure`` (vector of
pairs or reals, normalized) or ``"maximally_mixed"``.  Matrices and
diagonals are not renormalized: they must have unit trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidConfig, NotAState
from .lie import DualVector, GroupSpec
from .optimize import OptimizerOptions
from .representations import Power, Representation, Spin, Standard, TensorProduct, TorusRep
from .states import maximally_mixed, pure_state, validate_state


def _complex_entries(obj) -> np.ndarray:
    a = np.asarray(obj, float)
    if a.ndim == 0 or a.shape[-1] != 2:
        # plain real numbers
        return a.astype(complex)
    return a[..., 0] + 1j * a[..., 1]


def _group_key(g) -> str:
    """Normalized group name: ``U(2)`` and ``Unitary(2)`` compare equal."""
    s = str(g).replace(" ", "").lower()
    return s.replace("unitary(", "u(").replace("torus(", "t(").replace("*", "x")


def parse_matrix(obj, dim: int | None = None) -> np.ndarray:
    """Complex matrix from nested or flat row-major ``[re, im]`` pairs."""
    try:
        z = _complex_entries(obj)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"matrix entries must be numbers or [re, im] pairs: {exc}") from exc
    if z.ndim == 1:
        n = int(round(np.sqrt(z.size)))
        if n * n != z.size:
            raise InvalidConfig(f"flat matrix of {z.size} entries is not square")
        z = z.reshape(n, n)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise InvalidConfig(f"matrix must be square, got shape {z.shape}")
    if dim is not None and z.shape[0] != dim:
        raise InvalidConfig(f"matrix dimension {z.shape[0]} does not match representation dimension {dim}")
    return z


def matrix_to_json(z) -> list:
    z = np.asarray(z, complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in z]


def parse_representation(spec) -> Representation:
    if not isinstance(spec, dict) or "family" not in spec:
        raise InvalidConfig("representation must be an object with a 'family'")
    fam = spec["family"]
    try:
        if fam == "standard":
            return Standard(int(spec["d"]))
        if fam == "spin":
            return Spin(Fraction(str(spec["j"])))
        if fam == "torus":
            return TorusRep(tuple(tuple(np.atleast_1d(w)) for w in spec["weights"]),
                            None if spec.get("multiplicities") is None else tuple(spec["multiplicities"]))
        if fam == "tensor":
            return TensorProduct(tuple(parse_representation(p) for p in spec["parts"]))
        if fam == "power":
            return Power(parse_representation(spec["base"]), int(spec["m"]))
    except KeyError as exc:
        raise InvalidConfig(f"representation '{fam}' is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"bad representation '{fam}': {exc}") from exc
    raise InvalidConfig(f"unknown representation family {fam!r}")


def representation_to_json(rep: Representation) -> dict:
    if isinstance(rep, Standard):
        return {"family": "standard", "d": rep.d}
    if isinstance(rep, Spin):
        return {"family": "spin", "j": str(rep.j)}
    if isinstance(rep, TorusRep):
        return {"family": "torus", "weights": [list(w) for w in rep.weights],
                "multiplicities": list(rep.multiplicities)}
    if isinstance(rep, TensorProduct):
        return {"family": "tensor", "parts": [representation_to_json(p) for p in rep.parts]}
    if isinstance(rep, Power):
        return {"family": "power", "base": representation_to_json(rep.base), "m": rep.m}
    raise InvalidConfig(f"cannot serialize {rep}")


def parse_state(spec, dim: int) -> np.ndarray:
    """Density matrix from a state spec, validated (PSD and trace to 1e-10)."""
    try:
        if spec == "maximally_mixed" or (isinstance(spec, dict) and spec.get("maximally_mixed")):
            rho = maximally_mixed(dim)
        elif isinstance(spec, dict) and "diagonal" in spec:
            rho = np.diag(np.asarray(spec["diagonal"], float)).astype(complex)
        elif isinstance(spec, dict) and "pure" in spec:
            rho = pure_state(_complex_entries(spec["pure"]).ravel())
        elif isinstance(spec, dict) and "matrix" in spec:
            rho = parse_matrix(spec["matrix"], dim)
        else:
            rho = parse_matrix(spec, dim)
    except NotAState as exc:
        raise InvalidConfig(f"state: {exc}") from exc
    if rho.shape != (dim, dim):
        raise InvalidConfig(f"state dimension {rho.shape[0]} does not match representation dimension {dim}")
    try:
        return validate_state(rho, dim)
    except NotAState as exc:
        raise InvalidConfig(f"state is not a density matrix: {exc}") from exc


def parse_point(spec, group: GroupSpec) -> DualVector:
    """Dual vector from ``{"cartan": [...]}`` or ``{"parts": [...]}`` (one entry per factor)."""
    if isinstance(spec, (list, tuple)):
        spec = {"cartan": spec}
    if "cartan" in spec:
        c = np.asarray(spec["cartan"], float).ravel()
        if c.size != group.cartan_dim:
            raise InvalidConfig(f"point needs {group.cartan_dim} Cartan coordinates, got {c.size}")
        return DualVector.from_cartan(group, c)
    if "parts" in spec:
        parts = []
        for f, p in zip(group.factors, spec["parts"]):
            parts.append(parse_matrix(p, f.size) if f.is_matrix else np.asarray(p, float))
        if len(parts) != len(group.factors):
            raise InvalidConfig("point needs one part per group factor")
        try:
            return DualVector(group, parts)
        except ValueError as exc:
            raise InvalidConfig(f"point: {exc}") from exc
    raise InvalidConfig("point must give 'cartan' or 'parts'")


@dataclass
class RunConfig:
    """Validated run configuration."""

    representation: Representation
    state: np.ndarray
    seed: int = 0
    workers: int = 1
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    output_format: str = "json"
    output_path: str | None = None
    point: DualVector | None = None
    simulate: dict = field(default_factory=dict)
    grid: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def group(self) -> GroupSpec:
        return self.representation.group

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise InvalidConfig("configuration must be a JSON object")
        if "representation" not in d:
            raise InvalidConfig("configuration needs a 'representation'")
        rep = parse_representation(d["representation"])
        if "group" in d and _group_key(d["group"]) != _group_key(rep.group):
            raise InvalidConfig(f"group {d['group']!r} does not match representation group {rep.group}")
        if "state" not in d:
            raise InvalidConfig("configuration needs a 'state'")
        rho = parse_state(d["state"], rep.dim)
        seed = int(d.get("seed", 0))
        if not 0 <= seed < 2 ** 64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        workers = int(d.get("workers", 1))
        if workers < 1:
            raise InvalidConfig("workers must be positive")
        try:
            od = dict(d.get("optimizer") or {})
            od.setdefault("seed", seed % 2 ** 63)       # restart points follow the run seed
            opts = OptimizerOptions.from_dict(od)
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"optimizer: {exc}") from exc
        out = d.get("output", {}) or {}
        fmt = out.get("format", "json")
        if fmt not in ("json", "csv"):
            raise InvalidConfig(f"output format must be json or csv, got {fmt!r}")
        point = parse_point(d["point"], rep.group) if d.get("point") is not None else None
        return cls(rep, rho, seed, workers, opts, fmt, out.get("path"), point,
                   dict(d.get("simulate", {}) or {}), d.get("grid"), d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InvalidConfig(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = {
            "representation": representation_to_json(self.representation),
            "group": str(self.group),
            "state": {"matrix": matrix_to_json(self.state)},
            "seed": self.seed,
            "workers": self.workers,
            "optimizer": self.optimizer.to_dict(),
            "output": {"format": self.output_format, "path": self.output_path},
        }
        if self.point is not None:
            d["point"] = {"parts": [matrix_to_json(p) if f.is_matrix else [float(v) for v in p]
                                    for f, p in zip(self.group.factors, self.point.parts)]}
        if self.simulate:
            d["simulate"] = self.simulate
        if self.grid is not None:
            d["grid"] = self.grid
        return d
