"""Certificates for (universal, one-sided, L_p) sampling discretization.

For a support ``J`` the extremal constants of

    lambda_min ||f||_2^2 <= (1/m) sum_j |f(xi^j)|^2 <= lambda_max ||f||_2^2,   f in span{phi_i : i in J}

are the extremal generalized eigenvalues of the discrete Gram block
``G_m(J)`` against the continuous Gram block ``G(J)``.  Universal checks
enumerate every support of a given size in lexicographic order.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dictionary import (
    DEFAULT_SUPPORT_CAP,
    Dictionary,
    Quadrature,
    check_support_cap,
    iter_support_chunks,
    reference_quadrature,
)
from .errors import CombinatorialLimitError, ConditioningError
from .sampling import NormalizedSystem, PointSet, draw_points, rng_stream, sample_matrix

EIG_TOL = 1e-10
WILSON_Z = 1.959963984540054


def discrete_gram(values: np.ndarray) -> np.ndarray:
    """``(1/m) Phi^H Phi`` for an ``(m, N)`` evaluation table."""
    return (values.conj().T @ values) / values.shape[0]


def _is_scaled_identity(G: np.ndarray) -> float | None:
    d = np.diag(G).real
    if np.allclose(G, d[0] * np.eye(len(G)), rtol=0, atol=1e-14 * max(abs(d[0]), 1.0)):
        return float(d[0])
    return None


def support_extremes(
    Gm: np.ndarray, G: np.ndarray, supports: np.ndarray, tol: float = EIG_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Extremal generalized eigenvalues of ``(Gm[J, J], G[J, J])`` for each row ``J``."""
    S, v = supports.shape
    if v == 0:
        return np.ones(S), np.ones(S)
    scale = _is_scaled_identity(G)
    if scale is not None and scale <= 0:
        raise ConditioningError("continuous Gram matrix is not positive definite")
    idx_r, idx_c = supports[:, :, None], supports[:, None, :]
    if v == 1:
        num = Gm[supports[:, 0], supports[:, 0]].real
        den = G[supports[:, 0], supports[:, 0]].real
        if np.any(den <= tol):
            raise ConditioningError("dictionary entry with vanishing L2 norm")
        lam = num / den
        return lam, lam
    sub = Gm[idx_r, idx_c]
    if scale is not None:
        eig = np.linalg.eigvalsh(sub) / scale
    else:
        Gsub = G[idx_r, idx_c]
        try:
            L = np.linalg.cholesky(Gsub)
        except np.linalg.LinAlgError as exc:
            raise ConditioningError("continuous Gram block is not positive definite") from exc
        diag = np.abs(np.diagonal(L, axis1=1, axis2=2))
        if np.any(diag.min(axis=1) ** 2 <= tol * np.maximum(diag.max(axis=1) ** 2, 1.0)):
            raise ConditioningError("continuous Gram block is numerically singular")
        Linv = np.linalg.inv(L)
        white = Linv @ sub @ np.conj(np.swapaxes(Linv, 1, 2))
        eig = np.linalg.eigvalsh((white + np.conj(np.swapaxes(white, 1, 2))) / 2)
    return eig[:, 0], eig[:, -1]


def subspace_ratio_bounds(
    D: Dictionary,
    J,
    xi: PointSet,
    gram_ref: np.ndarray | None = None,
    quadrature: Quadrature | None = None,
) -> tuple[float, float]:
    """Extremal discretization constants for the single space ``span{phi_i : i in J}``.

    ``gram_ref`` is the continuous Gram matrix of the whole dictionary; it
    defaults to the closed form or the reference quadrature.
    """
    J = np.array(sorted(int(j) for j in J), dtype=np.int64).reshape(1, -1)
    if J.shape[1] < 1:
        raise ValueError("support must be nonempty")
    G = D.gram(quadrature) if gram_ref is None else np.asarray(gram_ref)
    Gm = discrete_gram(sample_matrix(D, xi).values)
    lo, hi = support_extremes(Gm, G, J)
    return float(lo[0]), float(hi[0])


@dataclass
class UniversalCertificate:
    v: int
    C1: float
    C2: float
    C1_global: float
    C2_global: float
    holds: bool
    witness: tuple[int, ...] | None
    n_supports: int
    mode: str = "certificate"
    extremes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return "holds" if self.holds else "fails"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["status"] = self.status
        out["witness"] = list(self.witness) if self.witness is not None else None
        out["C2"] = None if math.isinf(self.C2) else self.C2
        return out


def _violates(lo: float, hi: float, C1: float, C2: float, tol: float) -> tuple[bool, bool]:
    low_bad = lo < C1 - tol * max(1.0, abs(C1))
    high_bad = (not math.isinf(C2)) and hi > C2 + tol * max(1.0, abs(C2))
    return low_bad, high_bad


def _sampled_supports(N: int, v: int, n: int, seed: int) -> np.ndarray:
    rng = rng_stream(seed, 2**32 + v)
    n = min(n, math.comb(N, v))
    seen: set[tuple[int, ...]] = set()
    while len(seen) < n:
        seen.add(tuple(sorted(rng.choice(N, size=v, replace=False).tolist())))
    return np.array(sorted(seen), dtype=np.int64).reshape(-1, v)


def universal_check(
    D: Dictionary,
    v: int,
    xi: PointSet,
    C1: float = 0.5,
    C2: float = 1.5,
    cap: int = DEFAULT_SUPPORT_CAP,
    tol: float = EIG_TOL,
    gram: np.ndarray | None = None,
    quadrature: Quadrature | None = None,
    keep_extremes: int = 0,
    randomized: bool = False,
    n_random: int = 10_000,
    seed: int = 0,
    values: np.ndarray | None = None,
) -> UniversalCertificate:
    """Check two-sided discretization on every ``v``-sparse span.

    With ``randomized=True`` only ``n_random`` supports drawn without
    replacement are examined and the result is labeled an estimate.
    """
    N = D.size
    if v < 1 or v > N:
        raise ValueError(f"sparsity {v} outside 1..{N}")
    if randomized:
        chunks = [_sampled_supports(N, v, n_random, seed)]
        total = len(chunks[0])
        mode = "estimate"
    else:
        try:
            total = check_support_cap(N, v, cap)
        except CombinatorialLimitError as exc:
            raise CombinatorialLimitError(f"{exc}; use randomized=True for an estimate") from exc
        chunks = iter_support_chunks(N, v, chunk=max(1, 2_000_000 // (v * v)))
        mode = "certificate"
    G = D.gram(quadrature) if gram is None else gram
    Gm = discrete_gram(sample_matrix(D, xi).values if values is None else values)

    gmin, gmax = math.inf, -math.inf
    arg_min = arg_max = None
    extremes: list = []
    for supports in chunks:
        lo, hi = support_extremes(Gm, G, supports, tol)
        i, k = int(np.argmin(lo)), int(np.argmax(hi))
        if lo[i] < gmin:
            gmin, arg_min = float(lo[i]), tuple(int(j) for j in supports[i])
        if hi[k] > gmax:
            gmax, arg_max = float(hi[k]), tuple(int(j) for j in supports[k])
        if len(extremes) < keep_extremes:
            for J, a, b in zip(supports[: keep_extremes - len(extremes)], lo, hi):
                extremes.append([J.tolist(), float(a), float(b)])
    low_bad, high_bad = _violates(gmin, gmax, C1, C2, tol)
    witness = arg_min if low_bad else (arg_max if high_bad else None)
    return UniversalCertificate(
        v, C1, C2, gmin, gmax, not (low_bad or high_bad), witness, total, mode, extremes
    )


def one_sided_check(D: Dictionary, v: int, xi: PointSet, C1: float = 0.5, **kwargs) -> UniversalCertificate:
    """Lower discretization inequality only, with constant ``C1``."""
    return universal_check(D, v, xi, C1=C1, C2=math.inf, **kwargs)


@dataclass
class RIPReport:
    v: int
    delta: float
    witness: tuple[int, ...]
    orthonormal_dictionary: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["witness"] = list(self.witness)
        return out


def rip_delta(G: NormalizedSystem, v: int, cap: int = DEFAULT_SUPPORT_CAP) -> RIPReport:
    """Smallest ``delta`` with ``(1-delta)|a|^2 <= |sum_J a_i u_i|^2 <= (1+delta)|a|^2`` on all ``|J| = v``.

    Equals the two-sided discretization constant only when the underlying
    dictionary is orthonormal; the report carries that flag.
    """
    cols = G.columns
    N = cols.shape[1]
    check_support_cap(N, v, cap)
    if v == 0:
        return RIPReport(0, 0.0, (), G.orthonormal_dictionary)
    gram = cols.conj().T @ cols
    eye = np.eye(N)
    best, witness = -math.inf, None
    for supports in iter_support_chunks(N, v, chunk=max(1, 2_000_000 // (v * v))):
        lo, hi = support_extremes(gram, eye, supports)
        dev = np.maximum(1.0 - lo, hi - 1.0)
        i = int(np.argmax(dev))
        if dev[i] > best:
            best, witness = float(dev[i]), tuple(int(j) for j in supports[i])
    return RIPReport(v, max(best, 0.0), witness, G.orthonormal_dictionary)


# ---------------------------------------------------------------------------
# Monte Carlo over random point sets
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # the endpoints are exact at the boundary; rounding would leave them off 0 or 1
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class SweepEntry:
    m: int
    trials: int
    successes: int
    estimate: float
    low: float
    high: float

    @property
    def width(self) -> float:
        return self.high - self.low


@dataclass
class SweepResult:
    entries: list[SweepEntry] = field(default_factory=list)

    def add(self, entry: SweepEntry) -> None:
        self.entries.append(entry)
        self.entries.sort(key=lambda e: e.m)

    def get(self, m: int) -> SweepEntry | None:
        return next((e for e in self.entries if e.m == m), None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "trials", "successes", "estimate", "low", "high"])
        for e in self.entries:
            w.writerow([e.m, e.trials, e.successes, repr(e.estimate), repr(e.low), repr(e.high)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"entries": [asdict(e) for e in self.entries]}


def success_probability(
    D: Dictionary,
    v: int,
    m: int,
    C1: float = 0.5,
    C2: float = 1.5,
    trials: int = 100,
    seed: int = 0,
    cap: int = DEFAULT_SUPPORT_CAP,
    workers: int = 1,
    mode: str = "iid-uniform",
) -> SweepEntry:
    """Fraction of ``trials`` iid point sets of size ``m`` that pass :func:`universal_check`.

    Trial ``i`` draws from stream ``(seed, i)``; the count does not depend on
    ``workers``.
    """
    check_support_cap(D.size, v, cap)
    G = D.gram()

    def trial(i: int) -> bool:
        xi = draw_points(m, D.domain, mode, seed, i)
        return universal_check(D, v, xi, C1, C2, cap=cap, gram=G).holds

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(trial, range(trials)))
    else:
        outcomes = [trial(i) for i in range(trials)]
    k = int(sum(outcomes))
    lo, hi = wilson_interval(k, trials)
    return SweepEntry(m, trials, k, k / trials if trials else 0.0, lo, hi)


@dataclass
class MinMResult:
    m_hat: int | None
    sweep: SweepResult
    target: float
    capped: bool = False

    def to_dict(self) -> dict:
        return {
            "m_hat": self.m_hat,
            "target": self.target,
            "capped": self.capped,
            "sweep": self.sweep.to_dict(),
        }


def empirical_min_m(
    D: Dictionary,
    v: int,
    C1: float = 0.5,
    C2: float = 1.5,
    target: float = 0.9,
    trials: int = 100,
    seed: int = 0,
    m_start: int = 1,
    m_cap: int = 1 << 14,
    cap: int = DEFAULT_SUPPORT_CAP,
    workers: int = 1,
) -> MinMResult:
    """Smallest ``m`` whose estimated success probability reaches ``target``.

    Doubles ``m`` from ``m_start`` until the target is met, then bisects
    between the last failing and first passing size.
    """
    sweep = SweepResult()

    def passes(m: int) -> bool:
        entry = sweep.get(m)
        if entry is None:
            entry = success_probability(D, v, m, C1, C2, trials, seed, cap, workers)
            sweep.add(entry)
        return entry.estimate >= target

    lo, hi = 0, max(1, m_start)
    while not passes(hi):
        lo = hi
        if hi >= m_cap:
            return MinMResult(None, sweep, target, capped=True)
        hi = min(2 * hi, m_cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid < max(1, m_start):
            break
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return MinMResult(hi, sweep, target)


# ---------------------------------------------------------------------------
# L_p, sampled
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpCheckResult:
    p: float
    min_ratio: float
    max_ratio: float
    n_functions: int
    label: str = "estimate, not certificate"


def lp_check_randomized(
    D: Dictionary,
    v: int,
    p: float,
    xi: PointSet,
    n_samples: int = 1000,
    seed: int = 0,
    quadrature: Quadrature | None = None,
) -> LpCheckResult:
    """Sampled extremes of ``((1/m) sum |f(xi^j)|^p) / ||f||_p^p`` over ``f`` in ``Sigma_v``.

    The family contains ``n_samples`` random functions (uniform random
    support, Gaussian coefficients) and, for each of them, the equal-weight
    function ``v^{-1/2} sum_{k in J} phi_k`` on the same support.
    """
    if not 1.0 <= p <= 2.0:
        raise ValueError("p must lie in [1, 2]")
    N = D.size
    if v < 1 or v > N:
        raise ValueError(f"sparsity {v} outside 1..{N}")
    rng = rng_stream(seed, 0)
    quad = quadrature or reference_quadrature(D.domain)
    C = np.zeros((N, 2 * n_samples), dtype=complex)
    for s in range(n_samples):
        J = rng.choice(N, size=v, replace=False)
        vals = rng.standard_normal(v)
        if D.scalar_field == "complex":
            vals = vals + 1j * rng.standard_normal(v)
        C[J, 2 * s] = vals
        C[J, 2 * s + 1] = v**-0.5
    disc = np.mean(np.abs(sample_matrix(D, xi).values @ C) ** p, axis=0)
    cont = quad.weights @ (np.abs(D.evaluate(quad.points) @ C) ** p)
    ratio = disc / cont
    return LpCheckResult(p, float(ratio.min()), float(ratio.max()), C.shape[1])
