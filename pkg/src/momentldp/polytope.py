"""Convex hull of a finite point set with membership and separation tests."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

RANK_TOL = 1e-9


class Polytope:
    """Convex hull of finitely many points in ``R^k``.

    The hull may be lower dimensional.  Points are first expressed in an
    orthonormal frame of their affine hull (via SVD) and the facets are
    computed there with :class:`scipy.spatial.ConvexHull`.

    Parameters
    ----------
    points : array_like, shape (n, k)
    """

    def __init__(self, points):
        pts = np.unique(np.atleast_2d(np.asarray(points, float)), axis=0)
        self.points = pts
        self.origin = pts[0]
        diff = pts - self.origin
        if len(pts) > 1:
            _, s, vt = np.linalg.svd(diff, full_matrices=False)
            rank = int(np.sum(s > RANK_TOL * max(1.0, s[0])))
        else:
            rank, vt = 0, np.zeros((0, pts.shape[1]))
        self.rank = rank
        self.frame = vt[:rank].T                      # (k, r)
        y = diff @ self.frame
        if rank == 0:
            self.normals = np.zeros((0, 0))
            self.offsets = np.zeros(0)
            vidx = [0]
        elif rank == 1:
            lo, hi = int(np.argmin(y[:, 0])), int(np.argmax(y[:, 0]))
            self.normals = np.array([[1.0], [-1.0]])
            self.offsets = np.array([-y[hi, 0], y[lo, 0]])
            vidx = sorted({lo, hi})
        else:
            hull = ConvexHull(y)
            self.normals = hull.equations[:, :-1]
            self.offsets = hull.equations[:, -1]
            vidx = sorted(hull.vertices)
        self.vertices = pts[vidx]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def _split(self, p):
        d = np.asarray(p, float) - self.origin
        y = d @ self.frame
        res = d - self.frame @ y
        return y, res

    def signed_distance(self, p) -> float:
        """Positive outside, negative inside (distance to the nearest facet plane).

        Inside a lower-dimensional hull the value is measured within the
        affine hull; any offset from the affine hull counts as outside.
        """
        y, res = self._split(p)
        off = float(np.linalg.norm(res))
        viol = float(np.max(self.normals @ y + self.offsets)) if len(self.offsets) else 0.0
        if off > RANK_TOL:
            return float(np.hypot(off, max(viol, 0.0)))
        return viol if len(self.offsets) else off

    def contains(self, p, tol: float = 1e-9) -> bool:
        return self.signed_distance(p) <= tol

    def on_boundary(self, p, tol: float = 1e-9) -> bool:
        return abs(self.signed_distance(p)) <= tol

    def max_pairing(self, beta) -> float:
        """``max_{w in hull} <w, beta>``."""
        return float(np.max(self.points @ np.asarray(beta, float)))

    def separating_direction(self, p):
        """Unit ``beta`` with ``<p, beta> > max_hull <., beta>``, or ``None``.

        Returns ``(beta, gap)`` where ``gap = <p, beta> - max_hull <., beta>``.
        """
        p = np.asarray(p, float)
        y, res = self._split(p)
        off = float(np.linalg.norm(res))
        if off > RANK_TOL:
            beta = res / off
        elif len(self.offsets):
            viol = self.normals @ y + self.offsets
            i = int(np.argmax(viol))
            if viol[i] <= RANK_TOL:
                return None
            beta = self.frame @ self.normals[i]
            beta = beta / np.linalg.norm(beta)
        else:
            return None
        gap = float(p @ beta - self.max_pairing(beta))
        if gap <= RANK_TOL:
            return None
        return beta, gap

    def bounding_box(self, inflate: float = 0.0):
        lo, hi = self.points.min(axis=0), self.points.max(axis=0)
        pad = inflate * np.maximum(hi - lo, 1e-12)
        return lo - pad, hi + pad
