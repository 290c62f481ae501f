"""Measurable sets of outcomes used by the simulator and the CLI.

Regions act on two views of an outcome ``x``: its chamber coordinates
``x0`` (Cartan coordinates of the dominant representative) and, for
regions that are not orbit invariant, the full dual vector.  Batch tests
take an ``(n, r)`` array of chamber coordinates and optionally an
``(n, ...)`` stack of dual-vector parts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .lie import DualVector


class Region:
    """Base class. Subclasses implement :meth:`contains_batch`."""

    #: True when membership depends only on the chamber coordinates
    chamber_only = True

    def contains_batch(self, x0, xparts=None) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x0, x: DualVector | None = None) -> bool:
        x0 = np.atleast_2d(np.asarray(x0, float))
        xp = None if x is None else [np.asarray(p)[None] for p in x.parts]
        return bool(self.contains_batch(x0, xp)[0])

    def to_spec(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.to_spec()


@dataclass(frozen=True)
class Everything(Region):
    def contains_batch(self, x0, xparts=None):
        return np.ones(len(x0), bool)

    def to_spec(self):
        return "everything"


@dataclass(frozen=True)
class ChamberBall(Region):
    """``{x : ||x0 - center|| <= radius}`` in the Euclidean norm of chamber coordinates."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidConfig("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def contains_batch(self, x0, xparts=None):
        d = np.asarray(x0, float) - np.asarray(self.center)
        # a relative slack keeps lattice points exactly on the sphere inside
        return np.linalg.norm(d, axis=1) <= self.radius * (1 + 1e-12)

    def to_spec(self):
        return "ball:" + ",".join(repr(c) for c in self.center) + f":{self.radius!r}"


@dataclass(frozen=True)
class HalfSpace(Region):
    """``{x : <normal, x0> >= offset}`` on chamber coordinates."""

    normal: tuple
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", tuple(float(c) for c in self.normal))
        if not np.any(np.asarray(self.normal)):
            raise InvalidConfig("half-space normal must be nonzero")

    def contains_batch(self, x0, xparts=None):
        v = np.asarray(x0, float) @ np.asarray(self.normal)
        return v >= self.offset - 1e-12 * max(1.0, abs(self.offset))

    def to_spec(self):
        return "halfspace:" + ",".join(repr(c) for c in self.normal) + f":{self.offset!r}"


class TraceBall(Region):
    """``{x : ||x - center||_1 <= radius}`` with the trace norm on ``i k*``.

    Not orbit invariant: membership needs the full dual vector.
    """

    chamber_only = False

    def __init__(self, center: DualVector, radius: float):
        if not radius > 0:
            raise InvalidConfig("ball radius must be positive")
        self.center = center
        self.radius = float(radius)

    def contains_batch(self, x0, xparts=None):
        if xparts is None:
            raise ValueError("trace-norm ball needs full outcomes")
        tot = np.zeros(len(x0))
        for f, p, c in zip(self.center.group.factors, xparts, self.center.parts):
            diff = np.asarray(p) - c
            if f.is_matrix:
                tot += np.abs(np.linalg.eigvalsh(diff)).sum(axis=-1)
            else:
                tot += np.abs(diff).sum(axis=-1)
        return tot <= self.radius * (1 + 1e-12)

    def to_spec(self):
        return f"traceball:<{self.center.group}>:{self.radius!r}"


@dataclass(frozen=True)
class Complement(Region):
    inner: Region

    @property
    def chamber_only(self):
        return self.inner.chamber_only

    def contains_batch(self, x0, xparts=None):
        return ~self.inner.contains_batch(x0, xparts)

    def to_spec(self):
        return "not:" + self.inner.to_spec()


def _floats(s: str):
    try:
        return tuple(float(v) for v in s.split(","))
    except ValueError as exc:
        raise InvalidConfig(f"bad number list {s!r}") from exc


def parse_region(spec: str) -> Region:
    """Parse a region string.

    Forms: ``everything``; ``ball:c1,c2,...:radius``;
    ``halfspace:n1,n2,...:offset``; ``not:<region>``.  Trace-norm balls
    need a dual vector and are built in code or from a config file.
    """
    spec = spec.strip()
    if spec == "everything":
        return Everything()
    kind, _, rest = spec.partition(":")
    if kind == "not":
        return Complement(parse_region(rest))
    parts = rest.split(":")
    if kind in ("ball", "halfspace") and len(parts) == 2:
        vec = _floats(parts[0])
        try:
            scalar = float(parts[1])
        except ValueError as exc:
            raise InvalidConfig(f"bad scalar in region {spec!r}") from exc
        return ChamberBall(vec, scalar) if kind == "ball" else HalfSpace(vec, scalar)
    raise InvalidConfig(f"cannot parse region {spec!r}")
