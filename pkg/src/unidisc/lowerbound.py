"""Deterministic obstruction to universal discretization of the sine system.

Given points ``xi^1..xi^m`` in ``[0, 1]`` and ``N``, simultaneous Dirichlet
approximation yields ``1 <= k <= N`` with every ``k xi^nu`` within
``N^{-1/m}`` of an integer ``a_nu``.  Then ``|s sin(pi k xi^nu)| <= s pi N^{-1/m}``
and the discrete mean of ``|phi_k|^2`` is at most ``s^2 pi^2 N^{-2/m}``; once this
drops below ``C1 ||phi_k||^2 = C1 s^2 / 2`` the points cannot discretize even
the one-dimensional spans.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dictionary import build_sine_system
from .errors import InternalInconsistencyError

@dataclass(frozen=True)
class DirichletResult:
    k: int
    a: tuple[int, ...]
    max_error: float
    bound: float
    best_k: int
    best_scaled_error: float


def dirichlet_search(xi, N: int) -> DirichletResult:
    """Smallest ``k <= N`` with ``max_nu |xi^nu - a_nu / k| <= k^{-1} N^{-1/m}``, ``a_nu = round(k xi^nu)``.

    ``best_k`` and ``best_scaled_error`` report the minimizer over ``k`` of
    ``k N^{1/m} max_nu |xi^nu - a_nu / k|`` for diagnostics.
    """
    x = np.asarray(xi, dtype=float).reshape(-1)
    m = len(x)
    if N < 1 or m < 1:
        raise ValueError("need N >= 1 and at least one point")
    ks = np.arange(1, N + 1)
    kx = np.outer(ks, x)
    a = np.rint(kx)
    err = np.abs(x[None, :] - a / ks[:, None]).max(axis=1)
    root = N ** (-1.0 / m)
    bounds = root / ks
    scaled = err / bounds
    ok = np.flatnonzero(err <= bounds)
    if len(ok) == 0:
        raise InternalInconsistencyError(
            f"no admissible k <= {N} for points {x.tolist()}; simultaneous Dirichlet approximation failed numerically"
        )
    i = int(ok[0])
    b = int(np.argmin(scaled))
    return DirichletResult(
        int(ks[i]),
        tuple(int(t) for t in a[i]),
        float(err[i]),
        float(bounds[i]),
        int(ks[b]),
        float(scaled[b]),
    )


@dataclass(frozen=True)
class FailureCertificate:
    N: int
    k: int
    a: tuple[int, ...]
    points: tuple[float, ...]
    point_errors: tuple[float, ...]
    discrete_mean: float
    implied_mean_bound: float
    norm_sq: float
    C1: float
    scale: float

    def recheck(self) -> float:
        """Recompute the discrete mean of ``|phi_k|^2`` at the stored points."""
        x = np.asarray(self.points)
        return float(np.mean((self.scale * np.sin(np.pi * self.k * x)) ** 2))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["a"] = list(self.a)
        out["points"] = list(self.points)
        out["point_errors"] = list(self.point_errors)
        return out


def sine_failure_certificate(
    xi, N: int, C1: float = 0.5, scale: float = math.sqrt(2.0)
) -> FailureCertificate | None:
    """Certificate that ``xi`` violates the lower constant ``C1`` on some ``span{phi_k}``.

    The Dirichlet witness ``(k, a)`` bounds each sample by
    ``|s sin(pi k xi^nu)| <= s pi k |xi^nu - a_nu / k|``; the mean of the squared
    bounds (never above ``s^2 pi^2 N^{-2/m}``) is the implied discrete mean.
    The smallest admissible ``k`` is tried first, then the minimizer of the
    scaled error.  Returns ``None`` when neither implied mean is below
    ``C1 ||phi_k||^2``.
    """
    x = np.asarray(xi, dtype=float).reshape(-1)
    norm_sq = build_sine_system(N, scale).norm_sq
    dr = dirichlet_search(x, N)
    for k in dict.fromkeys((dr.k, dr.best_k)):
        a = np.rint(k * x)
        errors = np.abs(x - a / k)
        implied = float(scale**2 * math.pi**2 * np.mean((k * errors) ** 2))
        if not implied < C1 * norm_sq:
            continue
        mean = float(np.mean((scale * np.sin(np.pi * k * x)) ** 2))
        if not mean < C1 * norm_sq:
            raise InternalInconsistencyError(
                f"exact discrete mean {mean} is not below {C1 * norm_sq} despite the bound {implied}"
            )
        return FailureCertificate(
            N, int(k), tuple(int(t) for t in a), tuple(float(t) for t in x),
            tuple(float(e) for e in errors), mean, implied, norm_sq, C1, scale,
        )
    return None


def min_m_threshold(N: int, C1: float = 0.5, scale: float = math.sqrt(2.0)) -> float:
    """Number of points below which every point set fails the lower constant ``C1``.

    Solves ``s^2 pi^2 N^{-2/m} = C1 s^2 / 2`` for ``m``, i.e.
    ``2 ln N / ln(2 pi^2 / C1)``; for ``C1 = 1/2`` this is ``ln N / ln(2 pi)``.
    """
    if scale <= 0 or C1 <= 0:
        raise ValueError("scale and C1 must be positive")
    if N <= 1:
        return 0.0
    norm_sq = scale**2 / 2.0
    denom = math.log(scale**2 * math.pi**2 / (C1 * norm_sq))
    if denom <= 0:
        return math.inf
    return 2.0 * math.log(N) / denom
