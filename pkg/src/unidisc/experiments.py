"""Seeded experiment harnesses built on the core modules.

These are the routines behind the CLI subcommands; each is deterministic
given its seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary, SparseCoefficients
from .discretization import UniversalCertificate, universal_check
from .recovery import WompConfig, lebesgue_report, womp_run
from .sampling import PointSet, discrete_norm, draw_points, rng_stream, sample_matrix


def random_sparse(D: Dictionary, v: int, rng: np.random.Generator) -> SparseCoefficients:
    """Uniform random support of size ``v`` with Gaussian coefficients."""
    J = np.sort(rng.choice(D.size, size=v, replace=False))
    vals = rng.standard_normal(v)
    if D.scalar_field == "complex":
        vals = vals + 1j * rng.standard_normal(v)
    return SparseCoefficients(tuple(J.tolist()), vals)


@dataclass
class CertifiedPoints:
    xi: PointSet
    certificate: UniversalCertificate
    attempts: list[tuple[int, int, bool]] = field(default_factory=list)


def certify_iid_points(
    D: Dictionary,
    u: int,
    C1: float = 0.5,
    C2: float = 1.5,
    seed: int = 0,
    m_start: int | None = None,
    m_max: int = 1 << 14,
    draws_per_m: int = 4,
) -> CertifiedPoints:
    """Draw iid point sets, doubling ``m``, until one passes :func:`universal_check` on ``u``-sparse spans.

    At each size ``draws_per_m`` streams are tried; stream ids encode
    ``(m, attempt)`` so every draw can be reproduced.
    """
    m = m_start or max(u, 1)
    G = D.gram()
    attempts = []
    while m <= m_max:
        for a in range(draws_per_m):
            xi = draw_points(m, D.domain, "iid-uniform", seed, stream=(m << 8) | a)
            cert = universal_check(D, u, xi, C1, C2, gram=G)
            attempts.append((m, a, cert.holds))
            if cert.holds:
                return CertifiedPoints(xi, cert, attempts)
        m *= 2
    raise RuntimeError(f"no certified point set with m <= {m_max}")


@dataclass
class RecoveryTrial:
    target: SparseCoefficients
    trace_support: tuple[int, ...]
    iterations: int
    residual: float
    recovered: bool
    residual_norms: list[float]


def exact_recovery_trials(
    D: Dictionary,
    xi: PointSet,
    v: int,
    c: int,
    n_targets: int,
    seed: int = 0,
    t: float = 1.0,
    tol: float = 1e-8,
) -> list[RecoveryTrial]:
    """Run WOMP for ``c v`` steps on ``n_targets`` random ``v``-sparse functions."""
    Phi = sample_matrix(D, xi)
    out = []
    for i in range(n_targets):
        f = random_sparse(D, v, rng_stream(seed, i))
        y = Phi.values @ f.dense(D.size)
        trace = womp_run(Phi, y, WompConfig(t, c * v))
        res = trace.residual_norms[-1] / max(discrete_norm(y), 1e-300)
        out.append(RecoveryTrial(f, trace.support, len(trace.selected), res, res <= tol, list(trace.residual_norms)))
    return out


@dataclass
class LebesgueTrial:
    index: int
    delta: float
    discrete_ratio: float
    residual: float
    sigma: float


def perturbed_target(D: Dictionary, xi: PointSet, v: int, delta: float, rng: np.random.Generator):
    """``f0 = g + delta h`` with ``g`` random ``v``-sparse and ``h`` a dense combination of unit discrete norm."""
    g = random_sparse(D, v, rng)
    h = rng.standard_normal(D.size)
    if D.scalar_field == "complex":
        h = h + 1j * rng.standard_normal(D.size)
    h = h / discrete_norm(sample_matrix(D, xi).values @ h)
    coeffs = g.dense(D.size) + delta * h
    return D.combination(coeffs), coeffs


def lebesgue_trials(
    D: Dictionary,
    xi: PointSet,
    v: int,
    c: int,
    deltas,
    n_targets: int,
    seed: int = 0,
    t: float = 1.0,
) -> list[LebesgueTrial]:
    out = []
    for di, delta in enumerate(deltas):
        for i in range(n_targets):
            f0, _ = perturbed_target(D, xi, v, delta, rng_stream(seed, (di << 32) | i))
            rep = lebesgue_report(f0, D, xi, v, c, WompConfig(t), continuous=False)
            out.append(LebesgueTrial(i, float(delta), rep.discrete_ratio, rep.residual_discrete, rep.sigma_discrete))
    return out
