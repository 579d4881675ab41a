"""Empirical covering and entropy numbers of sparse unit balls in the sup norm.

Every estimate is computed on a finite cloud of members sampled on a dense
grid, so it bounds the true quantity from below.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary, reference_quadrature
from .sampling import rng_stream


@dataclass(eq=False)
class FunctionCloud:
    """Grid-sampled members of ``{f in Sigma_v : ||f||_p = 1}``."""

    grid: np.ndarray
    members: np.ndarray
    v: int
    p: float
    seed: int
    _centers: list = field(default_factory=list, repr=False)
    _radii: list = field(default_factory=list, repr=False)
    _dist: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.members)

    def scaled(self, factor: float) -> "FunctionCloud":
        return FunctionCloud(self.grid, self.members * factor, self.v, self.p, self.seed)

    def _extend(self, until_radius: float | None = None, until_count: int | None = None) -> None:
        """Grow the farthest-point ordering.

        ``_radii[j]`` is the covering radius of the first ``j + 1`` centers.
        Ties go to the lowest member index.
        """
        if not self._centers:
            self._centers.append(0)
            self._dist = np.abs(self.members - self.members[0]).max(axis=1)
            self._radii.append(float(self._dist.max()))
        while self._radii[-1] > 0.0:
            if until_radius is not None and self._radii[-1] <= until_radius:
                return
            if until_count is not None and len(self._centers) >= until_count:
                return
            nxt = int(np.argmax(self._dist))
            self._centers.append(nxt)
            self._dist = np.minimum(self._dist, np.abs(self.members - self.members[nxt]).max(axis=1))
            self._radii.append(float(self._dist.max()))

    def covering_radius(self, n_centers: int) -> float:
        """Radius of the greedy net with ``n_centers`` centers (zero past the distinct count)."""
        if n_centers < 1:
            raise ValueError("need at least one center")
        self._extend(until_count=n_centers)
        if n_centers > len(self._radii):
            return 0.0
        return self._radii[n_centers - 1]


def generate_cloud(
    D: Dictionary,
    v: int,
    p: float = 2.0,
    n_members: int = 1000,
    seed: int = 0,
    grid_size: int = 2048,
) -> FunctionCloud:
    """Random ``v``-sparse members normalized to unit grid ``p``-norm.

    The cloud opens with the structured extremal members: each single atom,
    then equal-coefficient combinations on random supports (a tenth of the
    cloud); the rest have random supports and Gaussian coefficients.
    """
    if n_members < 1:
        raise ValueError("need at least one member")
    N = D.size
    if not 1 <= v <= N:
        raise ValueError(f"sparsity {v} outside 1..{N}")
    rng = rng_stream(seed, 0)
    grid = reference_quadrature(D.domain, grid_size).points
    C = np.zeros((N, n_members), dtype=complex)
    n_atoms = min(N, n_members)
    C[np.arange(n_atoms), np.arange(n_atoms)] = 1.0
    n_equal = min(n_members - n_atoms, n_members // 10) if v > 1 else 0
    col = n_atoms
    for _ in range(n_equal):
        C[rng.choice(N, size=v, replace=False), col] = 1.0
        col += 1
    complex_field = D.scalar_field == "complex"
    for col in range(col, n_members):
        J = rng.choice(N, size=v, replace=False)
        vals = rng.standard_normal(v)
        if complex_field:
            vals = vals + 1j * rng.standard_normal(v)
        C[J, col] = vals
    values = (D.evaluate(grid) @ C).T
    norms = np.mean(np.abs(values) ** p, axis=1) ** (1.0 / p)
    return FunctionCloud(grid, values / norms[:, None], v, p, seed)


def grid_p_norms(cloud: FunctionCloud) -> np.ndarray:
    return np.mean(np.abs(cloud.members) ** cloud.p, axis=1) ** (1.0 / cloud.p)


def covering_estimate(cloud: FunctionCloud, eps: float) -> int:
    """Size of the greedy farthest-point ``eps``-net of the cloud in grid sup distance."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    cloud._extend(until_radius=eps)
    radii = cloud._radii
    return next((j + 1 for j, r in enumerate(radii) if r <= eps), len(radii))


def _net_size(cloud: FunctionCloud, eps: float) -> int:
    if eps > 0:
        return covering_estimate(cloud, eps)
    cloud._extend()
    return len(cloud._radii)


@dataclass
class EntropyEstimate:
    ks: list[int]
    eps: list[float]
    counts: list[int]
    method: str = "greedy farthest-point net, grid sup norm"
    q_v: float | None = None

    def slope(self, k_lo: int, k_hi: int) -> float:
        """Least-squares slope of ``log eps_k`` against ``log k`` over ``k_lo..k_hi``."""
        ks = np.array([k for k in self.ks if k_lo <= k <= k_hi], dtype=float)
        es = np.array([e for k, e in zip(self.ks, self.eps) if k_lo <= k <= k_hi])
        if np.any(es <= 0):
            raise ValueError("zero entropy estimate inside the slope window")
        return float(np.polyfit(np.log(ks), np.log(es), 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "eps_k", "net_size"])
        for k, e, c in zip(self.ks, self.eps, self.counts):
            w.writerow([k, repr(e), c])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"ks": self.ks, "eps": self.eps, "counts": self.counts, "method": self.method, "q_v": self.q_v}


def entropy_numbers(cloud: FunctionCloud, k_max: int, K: float = 1.0, N: int | None = None) -> EntropyEstimate:
    """``eps_k = inf{eps : N_eps <= 2^k}`` for ``k = 0..k_max``.

    Because the farthest-point ordering does not depend on ``eps``, the
    infimum is exactly the covering radius of the first ``2^k`` centers.
    ``q_v`` is filled with ``log(2 K v) + log log N`` (unit constant) for
    reporting only.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    ks = list(range(k_max + 1))
    eps = [cloud.covering_radius(2**k) for k in ks]
    counts = [_net_size(cloud, e) for e in eps]
    q_v = None
    if N is not None and N > 2:
        q_v = math.log(2 * K * cloud.v) + math.log(math.log(N))
    return EntropyEstimate(ks, eps, counts, q_v=q_v)
