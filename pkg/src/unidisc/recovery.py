"""Greedy and least-squares recovery from point samples."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dictionary import (
    DEFAULT_SUPPORT_CAP,
    Dictionary,
    FrequencyGrid,
    Quadrature,
    SparseCoefficients,
    TrigDictionary,
    WienerClassInstance,
    batched_projection_residuals,
    best_v_term_oracle,
    check_support_cap,
    dyadic_index,
    iter_support_chunks,
    level_block,
    reference_quadrature,
)
from .errors import CoverageError, DegenerateDictionaryError
from .sampling import PointSet, SampleMatrix, discrete_norm, mixed_measure, mixed_norm, sample_matrix

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class WompConfig:
    t: float = 1.0
    max_iterations: int | None = None
    stop_tolerance: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.t <= 1.0:
            raise ValueError("weakness parameter t must lie in (0, 1]")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")


@dataclass
class WompTrace:
    selected: list[int]
    residual_norms: list[float]
    coefficients: np.ndarray
    residual: np.ndarray = field(repr=False)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.selected))

    def approximant(self) -> SparseCoefficients:
        order = np.argsort(self.selected)
        return SparseCoefficients(
            tuple(int(self.selected[i]) for i in order), self.coefficients[order]
        )

    def to_dict(self) -> dict:
        return {
            "selected": [int(i) for i in self.selected],
            "residual_norms": [float(r) for r in self.residual_norms],
            "coefficients": [[float(z.real), float(z.imag)] for z in self.coefficients],
        }


def _weighted_norm(r: np.ndarray, w: np.ndarray) -> float:
    return math.sqrt(float(np.dot(w, np.abs(r) ** 2)))


def womp_weighted(
    A: np.ndarray, y: np.ndarray, weights: np.ndarray, cfg: WompConfig
) -> WompTrace:
    """WOMP for ``y`` over the columns of ``A`` in ``L_2`` of the discrete measure ``weights``.

    Correlations are taken against normalized columns.  With ``t = 1`` the
    argmax is chosen (ties, up to a relative ``1e-12``, go to the lowest
    index); with ``t < 1`` the lowest index meeting the threshold is chosen.
    """
    A = np.asarray(A)
    y = np.asarray(y, dtype=complex)
    w = np.asarray(weights, dtype=float)
    col_norms = np.sqrt(w @ (np.abs(A) ** 2))
    active = col_norms > 0
    if not np.any(active):
        raise DegenerateDictionaryError("every column has zero discrete norm")
    max_iter = A.shape[1] if cfg.max_iterations is None else cfg.max_iterations

    selected: list[int] = []
    coef = np.zeros(0, dtype=complex)
    r = y.copy()
    norms = [_weighted_norm(r, w)]
    sw = np.sqrt(w)
    while len(selected) < max_iter and norms[-1] > cfg.stop_tolerance:
        corr = np.abs((A.conj().T * w) @ r)
        corr = np.where(active, corr / np.where(active, col_norms, 1.0), -1.0)
        corr[selected] = -1.0
        top = corr.max()
        if top <= 0.0:
            break
        threshold = top * (1.0 - _TIE_RTOL) if cfg.t == 1.0 else cfg.t * top
        j = int(np.flatnonzero(corr >= threshold)[0])
        selected.append(j)
        sub = A[:, selected]
        coef, *_ = np.linalg.lstsq(sub * sw[:, None], y * sw, rcond=None)
        r = y - sub @ coef
        norms.append(_weighted_norm(r, w))
    return WompTrace(selected, norms, np.asarray(coef, dtype=complex), r)


def womp_run(Phi, y, cfg: WompConfig | None = None) -> WompTrace:
    """WOMP in ``L_2(Omega_m, mu_m)``, the normalized counting measure on the sample points."""
    values = Phi.values if isinstance(Phi, SampleMatrix) else np.asarray(Phi)
    m = values.shape[0]
    if m < 1:
        raise ValueError("need at least one sample")
    return womp_weighted(values, y, np.full(m, 1.0 / m), cfg or WompConfig())


# ---------------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------------


@dataclass
class LSFit:
    approximant: SparseCoefficients
    residual: float


def ls_fit(y, J, xi: PointSet, D: Dictionary) -> LSFit:
    """Minimum-norm least-squares fit of the samples ``y`` on ``span{phi_i : i in J}``."""
    J = tuple(sorted(int(j) for j in J))
    y = np.asarray(y, dtype=complex).reshape(-1)
    if not J:
        return LSFit(SparseCoefficients((), []), discrete_norm(y))
    A = sample_matrix(D, xi).values[:, list(J)]
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return LSFit(SparseCoefficients(J, coef), discrete_norm(y - A @ coef))


@dataclass
class RecoveryResult:
    approximant: SparseCoefficients
    error_discrete: float
    error_continuous: float
    error_mixed: float

    def to_dict(self) -> dict:
        return {
            "support": list(self.approximant.support),
            "coefficients": [[float(z.real), float(z.imag)] for z in self.approximant.values],
            "error_discrete": self.error_discrete,
            "error_continuous": self.error_continuous,
            "error_mixed": self.error_mixed,
        }


def recovery_errors(f, g: SparseCoefficients, D: Dictionary, xi: PointSet, quadrature: Quadrature) -> RecoveryResult:
    approx = D.combination(g)

    def diff(x):
        return np.asarray(f(x)) - approx(x)

    return RecoveryResult(
        g,
        discrete_norm(diff(xi.points)),
        quadrature.lp_norm(diff(quadrature.points), 2.0),
        mixed_norm(diff, xi, quadrature),
    )


def ls_universal(
    f,
    D: Dictionary,
    v: int,
    xi: PointSet,
    quadrature: Quadrature | None = None,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> RecoveryResult:
    """Least squares over the best support.

    Every ``v``-support is fitted on the samples; the fit with the smallest
    continuous ``L_2`` residual wins, ties going to the lexicographically
    first support.
    """
    N = D.size
    check_support_cap(N, v, cap)
    quad = quadrature or reference_quadrature(D.domain)
    if v == 0:
        return recovery_errors(f, SparseCoefficients((), []), D, xi, quad)
    m = xi.m
    A = sample_matrix(D, xi).values / math.sqrt(m)
    y = np.asarray(f(xi.points), dtype=complex) / math.sqrt(m)
    Aq = D.evaluate(quad.points)
    yq = np.asarray(f(quad.points), dtype=complex)
    sw = np.sqrt(quad.weights)
    best = (math.inf, None, None)
    chunk = max(1, 4_000_000 // max(quad.size * v, 1))
    for supports in iter_support_chunks(N, v, chunk=chunk):
        _, coefs = batched_projection_residuals(A, y, supports)
        fitted = np.einsum("qsv,sv->sq", Aq[:, supports], coefs)
        errs = np.linalg.norm((yq[None, :] - fitted) * sw[None, :], axis=1)
        i = int(np.argmin(errs))
        if errs[i] < best[0]:
            best = (float(errs[i]), supports[i], coefs[i])
    _, J, c = best
    return recovery_errors(f, SparseCoefficients(tuple(int(j) for j in J), c), D, xi, quad)


# ---------------------------------------------------------------------------
# Lebesgue-type inequalities
# ---------------------------------------------------------------------------


@dataclass
class LebesgueReport:
    v: int
    c: int
    iterations: int
    residual_discrete: float
    sigma_discrete: float
    discrete_ratio: float
    error_continuous: float | None
    sigma_sup: float | None
    continuous_ratio: float | None
    trace: WompTrace = field(repr=False)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "v", "c", "iterations", "residual_discrete", "sigma_discrete", "discrete_ratio",
            "error_continuous", "sigma_sup", "continuous_ratio",
        )}
        out["trace"] = self.trace.to_dict()
        return out


def _ratio(num: float, den: float, atol: float = 1e-14) -> float:
    if den <= atol:
        return 1.0 if num <= atol else math.inf
    return num / den


def lebesgue_report(
    f0,
    D: Dictionary,
    xi: PointSet,
    v: int,
    c: int = 3,
    cfg: WompConfig | None = None,
    u: int | None = None,
    quadrature: Quadrature | None = None,
    continuous: bool = True,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> LebesgueReport:
    """Compare the WOMP residual after ``c v`` steps with ``sigma_v``.

    The discrete ratio divides by ``sigma_v`` in ``L_2(Omega_m, mu_m)``; the
    continuous ratio divides the ``L_2(mu)`` error of the WOMP approximant
    by an estimate of ``sigma_v`` in the sup norm over the quadrature nodes.
    """
    if u is not None and (1 + c) * v > u:
        raise ValueError(f"(1 + c) v = {(1 + c) * v} exceeds u = {u}")
    cfg = cfg or WompConfig()
    iters = c * v
    y = np.asarray(f0(xi.points), dtype=complex)
    trace = womp_run(sample_matrix(D, xi), y, WompConfig(cfg.t, iters, cfg.stop_tolerance))
    res = trace.residual_norms[-1]
    _, sigma = best_v_term_oracle(y, v, D, "discrete-L2", xi=xi.points, cap=cap)
    err_c = sig_sup = cratio = None
    if continuous:
        quad = quadrature or reference_quadrature(D.domain)
        err_c = recovery_errors(f0, trace.approximant(), D, xi, quad).error_continuous
        _, sig_sup = best_v_term_oracle(f0, v, D, "sup", quadrature=quad, cap=cap)
        cratio = _ratio(err_c, sig_sup)
    return LebesgueReport(
        v, c, iters, res, sigma, _ratio(res, sigma), err_c, sig_sup, cratio, trace
    )


# ---------------------------------------------------------------------------
# Block greedy approximation of Wiener-norm classes
# ---------------------------------------------------------------------------


@dataclass
class BlockGreedyResult:
    n: int
    beta: float
    term_count: int
    error_mixed: float
    budgets: dict[int, int]
    level_errors: dict[int, float]
    frequencies: FrequencyGrid
    coefficients: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "beta": self.beta,
            "term_count": self.term_count,
            "error_mixed": self.error_mixed,
            "budgets": {str(k): v for k, v in self.budgets.items()},
            "level_errors": {str(k): v for k, v in self.level_errors.items()},
        }


def block_budget(j: int, n: int, beta: float, d: int) -> int:
    """``floor(2^{n - beta (j - n)} j^{d-1})``."""
    return int(math.floor(2.0 ** (n - beta * (j - n)) * j ** (d - 1)))


def _level_of(grid: FrequencyGrid) -> np.ndarray:
    return np.array([sum(dyadic_index(k)) for k in grid], dtype=np.int64)


def _in_hyperbolic_cross(vectors: np.ndarray, M: int) -> np.ndarray:
    return np.prod(np.maximum(np.abs(vectors), 1), axis=1) <= M


def block_greedy(
    f: WienerClassInstance,
    n: int,
    xi: PointSet,
    beta: float | None = None,
    quadrature: Quadrature | None = None,
    M: int | None = None,
) -> BlockGreedyResult:
    """Greedy approximant ``S_n(f) + sum_{j >= n} h_j`` in ``L_2(mu_xi)``.

    The levels ``|s|_1 < n`` are kept exactly.  On each level ``j >= n``
    OMP runs in ``L_2(mu_xi)`` over the whole level dictionary for
    ``floor(2^{n - beta (j - n)} j^{d-1})`` steps.  ``beta`` defaults to
    ``a / 2``.  When ``M`` is given every frequency used must lie in the
    hyperbolic cross of size ``M``.
    """
    a = f.a
    beta = a / 2 if beta is None else beta
    if not 0 < beta < a:
        raise ValueError("beta must lie in (0, a)")
    grid, coefs = f.grid, f.coefficients
    d = grid.dim
    levels = _level_of(grid)
    top = int(levels[np.abs(coefs) > 0].max(initial=0))
    if M is not None:
        if not np.all(_in_hyperbolic_cross(grid.vectors, M)):
            raise CoverageError(f"function has frequencies outside the hyperbolic cross of size {M}")

    if quadrature is None:
        max_freq = int(np.abs(grid.vectors).max(initial=0))
        n_nodes = max(4096 if d == 1 else 64, 4 * max_freq + 4)
        quadrature = reference_quadrature(xi.domain, n_nodes)
    measure = mixed_measure(xi, quadrature)
    w = measure.weights

    keep = (levels < n) & (np.abs(coefs) > 0)
    out_freqs = [grid.vectors[keep]]
    out_coefs = [coefs[keep]]
    term_count = int(keep.sum())
    error = np.zeros(len(w), dtype=complex)
    budgets, level_errors = {}, {}
    for j in range(n, top + 1):
        sel = levels == j
        fj = TrigDictionary(FrequencyGrid(grid.vectors[sel])).evaluate(measure.points) @ coefs[sel]
        vj = block_budget(j, n, beta, d)
        budgets[j] = vj
        if vj == 0 or not np.any(np.abs(coefs[sel]) > 0):
            error += fj
            level_errors[j] = _weighted_norm(fj, w)
            continue
        block = level_block(j, d)
        if M is not None and not np.all(_in_hyperbolic_cross(block.vectors, M)):
            raise CoverageError(f"level {j} is not contained in the hyperbolic cross of size {M}")
        A = TrigDictionary(block).evaluate(measure.points)
        trace = womp_weighted(A, fj, w, WompConfig(1.0, min(vj, len(block)), 1e-13))
        error += trace.residual
        level_errors[j] = trace.residual_norms[-1]
        term_count += len(trace.selected)
        out_freqs.append(block.vectors[trace.selected])
        out_coefs.append(trace.coefficients)
    freqs = np.concatenate(out_freqs) if out_freqs else np.zeros((0, d), dtype=np.int64)
    vals = np.concatenate(out_coefs)
    order = np.lexsort(freqs.T[::-1]) if len(freqs) else np.array([], dtype=int)
    return BlockGreedyResult(
        n, beta, term_count, _weighted_norm(error, w), budgets, level_errors,
        FrequencyGrid(freqs), vals[order],
    )


# ---------------------------------------------------------------------------
# Unconditional property
# ---------------------------------------------------------------------------


@dataclass
class UPResult:
    U: float
    witness_A: tuple[int, ...]
    witness_J: tuple[int, ...]


def up_constant(gram: np.ndarray, u: int, D_cap: int, max_size: int = 10) -> UPResult:
    """Constant of the ``(u, D)``-unconditional property for a Gram matrix.

    For fixed ``A`` and ``J`` the supremum over coefficients of
    ``||sum_A c_i phi_i|| / dist(sum_A c_i phi_i, V_J)`` is the square root of
    the top generalized eigenvalue of ``G[A, A]`` against the Schur
    complement ``G[A, A] - G[A, J] G[J, J]^+ G[J, A]``.  Since the distance
    only shrinks as ``J`` grows, only maximal ``J`` are enumerated.
    """
    G = np.asarray(gram)
    N = len(G)
    if N > max_size:
        raise ValueError(f"brute-force scope is N <= {max_size}, got {N}")
    if not 1 <= u <= D_cap <= N:
        raise ValueError("need 1 <= u <= D_cap <= N")
    best = UPResult(1.0, (), ())
    for a_size in range(1, u + 1):
        j_size = min(D_cap - a_size, N - a_size)
        for A in itertools.combinations(range(N), a_size):
            rest = [i for i in range(N) if i not in A]
            for J in itertools.combinations(rest, j_size):
                GAA = G[np.ix_(A, A)]
                if J:
                    GAJ = G[np.ix_(A, J)]
                    schur = GAA - GAJ @ np.linalg.pinv(G[np.ix_(J, J)], hermitian=True) @ GAJ.conj().T
                else:
                    schur = GAA
                schur = (schur + schur.conj().T) / 2
                lo = np.linalg.eigvalsh(schur)[0]
                if lo <= 1e-12 * max(1.0, float(np.abs(GAA).max())):
                    return UPResult(math.inf, A, J)
                top = scipy.linalg.eigh(GAA, schur, eigvals_only=True)[-1]
                U = math.sqrt(max(float(top), 0.0))
                if U > best.U + 1e-15:
                    best = UPResult(U, A, J)
    return best
