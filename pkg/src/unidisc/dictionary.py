"""Function systems on the torus and the unit interval.

A :class:`Dictionary` is an ordered, immutable family of ``N`` bounded
functions.  Every dictionary evaluates to an ``(m, N)`` table at a batch of
points and knows its continuous Gram matrix, either in closed form
(trigonometric and sine systems) or through a reference quadrature rule.

Indices are 0-based throughout the package.
"""
from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .errors import (
    CombinatorialLimitError,
    ConditioningError,
    DomainMismatchError,
    SizeLimitError,
)

TWO_PI = 2.0 * np.pi
DEFAULT_SIZE_CAP = 10**5
DEFAULT_SUPPORT_CAP = 2 * 10**6

DomainKind = Literal["torus", "unit-interval"]
NormKind = Literal["continuous-L2", "discrete-L2", "sup"]


@dataclass(frozen=True)
class Domain:
    """Probability space carrying the dictionary.

    ``torus`` is ``[0, 2pi)^d`` with normalized Lebesgue measure and
    ``unit-interval`` is ``[0, 1]`` with Lebesgue measure.
    """

    kind: DomainKind = "torus"
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("torus", "unit-interval"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "unit-interval" and self.dim != 1:
            raise ValueError("unit-interval domain is one-dimensional")

    @property
    def period(self) -> float:
        return TWO_PI if self.kind == "torus" else 1.0

    def contains(self, points: np.ndarray) -> bool:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        if self.kind == "torus":
            return bool(np.all((pts >= 0.0) & (pts < TWO_PI)))
        return bool(np.all((pts >= 0.0) & (pts <= 1.0)))

    def label(self) -> str:
        return f"{self.kind}-{self.dim}"


@dataclass(frozen=True)
class Quadrature:
    """Cubature rule: ``integral f dmu ~ sum_q weights[q] * f(points[q])``."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(self.weights, values, axes=(0, 0))

    def lp_norm(self, values: np.ndarray, p: float) -> float:
        absval = np.abs(values)
        if math.isinf(p):
            return float(absval.max(initial=0.0))
        return float(np.dot(self.weights, absval**p) ** (1.0 / p))


def reference_quadrature(domain: Domain, n_per_dim: int | None = None) -> Quadrature:
    """Equal-weight tensor rule on ``domain``.

    On the torus the nodes are ``2 pi j / n``; this rule integrates every
    trigonometric polynomial of degree ``< n`` exactly.  On the unit interval
    the midpoint rule is used, which is exact for ``cos(pi l x)`` whenever
    ``0 < l < 2n``, hence for products of sines ``sin(pi k x)`` with
    ``k < n``.
    """
    if n_per_dim is None:
        n_per_dim = {1: 4096, 2: 256}.get(domain.dim, 32)
    n = int(n_per_dim)
    if n < 1:
        raise ValueError("quadrature needs at least one node per dimension")
    if domain.kind == "torus":
        axis = TWO_PI * np.arange(n) / n
    else:
        axis = (np.arange(n) + 0.5) / n
    grids = np.meshgrid(*([axis] * domain.dim), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.full(len(points), 1.0 / len(points))
    return Quadrature(points, weights)


# ---------------------------------------------------------------------------
# Frequency grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Lexicographically ordered set of integer frequency vectors."""

    vectors: np.ndarray

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.int64)
        if vecs.ndim == 1:
            vecs = vecs.reshape(-1, 1)
        if len(vecs):
            order = np.lexsort(vecs.T[::-1])
            vecs = vecs[order]
            if np.any(np.all(vecs[1:] == vecs[:-1], axis=1)):
                raise ValueError("frequency grid contains duplicate vectors")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return (tuple(int(c) for c in row) for row in self.vectors)

    def __eq__(self, other):
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return self.vectors.shape == other.vectors.shape and bool(
            np.array_equal(self.vectors, other.vectors)
        )

    def __hash__(self):
        return hash(self.vectors.tobytes())

    def index(self) -> dict[tuple[int, ...], int]:
        return {k: i for i, k in enumerate(self)}

    def tolist(self) -> list[tuple[int, ...]]:
        return list(self)


def _check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise SizeLimitError(f"{what} has {count} elements, above the cap of {cap}")


def hyperbolic_cross(N: int, d: int, cap: int = DEFAULT_SIZE_CAP) -> FrequencyGrid:
    """Enumerate ``{k in Z^d : prod_j max(|k_j|, 1) <= N}`` exactly."""
    if N < 1 or d < 1:
        raise ValueError("N and d must be positive")

    out: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], budget: int) -> None:
        if len(prefix) == d:
            out.append(prefix)
            if len(out) > cap:
                raise SizeLimitError(f"hyperbolic cross exceeds the cap of {cap}")
            return
        for k in range(-budget, budget + 1):
            extend(prefix + (k,), budget // max(abs(k), 1))

    extend((), N)
    return FrequencyGrid(np.array(out, dtype=np.int64).reshape(-1, d))


def dyadic_range(s: int) -> list[int]:
    """One-dimensional block ``floor(2^(s-1)) <= |k| < 2^s``."""
    if s < 0:
        raise ValueError("block index must be nonnegative")
    if s == 0:
        return [0]
    lo, hi = 2 ** (s - 1), 2**s
    return [k for k in range(-hi + 1, hi) if abs(k) >= lo]


def dyadic_block(s: Sequence[int]) -> FrequencyGrid:
    s = tuple(int(si) for si in s)
    if not s:
        raise ValueError("block index vector must be nonempty")
    vecs = list(itertools.product(*(dyadic_range(si) for si in s)))
    return FrequencyGrid(np.array(vecs, dtype=np.int64).reshape(-1, len(s)))


def dyadic_index(k: Sequence[int]) -> tuple[int, ...]:
    """The block vector ``s`` with ``k in rho(s)``."""
    return tuple(int(abs(int(kj))).bit_length() for kj in k)


def level_vectors(level: int, d: int) -> list[tuple[int, ...]]:
    """All ``s`` in ``N_0^d`` with ``|s|_1 == level``."""
    return [
        s for s in itertools.product(range(level + 1), repeat=d) if sum(s) == level
    ]


def level_block(level: int, d: int) -> FrequencyGrid:
    """Union of the dyadic blocks ``rho(s)`` over ``|s|_1 == level``."""
    vecs: list[tuple[int, ...]] = []
    for s in level_vectors(level, d):
        vecs.extend(itertools.product(*(dyadic_range(si) for si in s)))
    return FrequencyGrid(np.array(vecs, dtype=np.int64).reshape(-1, d))


# ---------------------------------------------------------------------------
# Dictionaries
# ---------------------------------------------------------------------------


class Dictionary(ABC):
    """Ordered family of bounded functions on a :class:`Domain`."""

    domain: Domain

    @property
    @abstractmethod
    def size(self) -> int: ...

    @property
    @abstractmethod
    def uniform_bound(self) -> float: ...

    @property
    def scalar_field(self) -> Literal["real", "complex"]:
        return "complex"

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Return the ``(m, N)`` table ``phi_i(x_j)``."""

    @abstractmethod
    def scaled(self, factor: float) -> "Dictionary": ...

    @abstractmethod
    def descriptor(self) -> dict: ...

    def analytic_gram(self) -> np.ndarray | None:
        return None

    @property
    def orthonormal(self) -> bool:
        g = self.analytic_gram()
        return g is not None and bool(np.allclose(g, np.eye(self.size), atol=1e-14))

    def gram(self, quadrature: Quadrature | None = None) -> np.ndarray:
        """Continuous Gram matrix ``[<phi_i, phi_j>]``; closed form when known."""
        g = self.analytic_gram()
        if g is not None:
            return g
        quad = quadrature or reference_quadrature(self.domain)
        table = self.evaluate(quad.points)
        return (table.conj().T * quad.weights) @ table

    def as_points(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float).reshape(-1, self.domain.dim)

    def __len__(self) -> int:
        return self.size

    def combination(self, coeffs: "SparseCoefficients | np.ndarray") -> Callable:
        """Evaluator for ``sum_i c_i phi_i``."""
        dense = _dense_coefficients(coeffs, self.size)

        def f(points):
            return self.evaluate(points) @ dense

        return f


@dataclass(frozen=True, eq=False)
class TrigDictionary(Dictionary):
    """Exponentials ``scale * exp(i <k, x>)`` for ``k`` in a frequency grid."""

    frequencies: FrequencyGrid
    scale: float = 1.0
    domain: Domain = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain("torus", self.frequencies.dim))

    @property
    def size(self) -> int:
        return len(self.frequencies)

    @property
    def uniform_bound(self) -> float:
        return abs(self.scale)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        x = self.as_points(points)
        k = self.frequencies.vectors.astype(float)
        # per-coordinate reduction keeps the phase error small for large |k|
        phase = np.zeros((len(x), len(k)))
        for j in range(x.shape[1]):
            phase += np.mod(np.outer(x[:, j], k[:, j]), TWO_PI)
        return self.scale * np.exp(1j * phase)

    def analytic_gram(self) -> np.ndarray:
        return (self.scale**2) * np.eye(self.size)

    def scaled(self, factor: float) -> "TrigDictionary":
        return TrigDictionary(self.frequencies, self.scale * factor)

    def descriptor(self) -> dict:
        return {
            "family": "trig",
            "dim": self.frequencies.dim,
            "size": self.size,
            "scale": self.scale,
            "frequencies": [list(k) for k in self.frequencies],
        }


@dataclass(frozen=True, eq=False)
class SineDictionary(Dictionary):
    """``scale * sin(pi k x)`` for ``k = 1..n_terms`` on ``[0, 1]``."""

    n_terms: int
    scale: float = math.sqrt(2.0)
    domain: Domain = field(init=False)

    def __post_init__(self):
        if self.n_terms < 1:
            raise ValueError("sine system needs at least one term")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "domain", Domain("unit-interval", 1))

    @property
    def size(self) -> int:
        return self.n_terms

    @property
    def uniform_bound(self) -> float:
        return self.scale

    @property
    def scalar_field(self):
        return "real"

    @property
    def norm_sq(self) -> float:
        """Squared ``L_2[0,1]`` norm of every entry."""
        return self.scale**2 / 2.0

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        x = self.as_points(points)[:, 0]
        k = np.arange(1, self.n_terms + 1)
        return self.scale * np.sin(np.pi * np.outer(x, k))

    def analytic_gram(self) -> np.ndarray:
        return self.norm_sq * np.eye(self.size)

    def scaled(self, factor: float) -> "SineDictionary":
        return SineDictionary(self.n_terms, self.scale * factor)

    def descriptor(self) -> dict:
        return {"family": "sine", "size": self.size, "scale": self.scale}


@dataclass(frozen=True, eq=False)
class FunctionDictionary(Dictionary):
    """Dictionary of arbitrary vectorized callables ``f(points) -> (m,)``."""

    functions: tuple
    domain: Domain = Domain()
    bound: float = 1.0
    field_kind: Literal["real", "complex"] = "complex"
    scale: float = 1.0
    name: str = "custom"

    @property
    def size(self) -> int:
        return len(self.functions)

    @property
    def uniform_bound(self) -> float:
        return self.bound * abs(self.scale)

    @property
    def scalar_field(self):
        return self.field_kind

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        x = self.as_points(points)
        cols = [np.broadcast_to(np.asarray(f(x)), (len(x),)) for f in self.functions]
        dtype = float if self.field_kind == "real" else complex
        return self.scale * np.stack(cols, axis=1).astype(dtype)

    def scaled(self, factor: float) -> "FunctionDictionary":
        return FunctionDictionary(
            self.functions, self.domain, self.bound, self.field_kind,
            self.scale * factor, self.name,
        )

    def descriptor(self) -> dict:
        return {
            "family": self.name,
            "domain": self.domain.label(),
            "size": self.size,
            "scale": self.scale,
        }


def contiguous_frequencies(N: int) -> FrequencyGrid:
    """``N`` consecutive integers around zero, ``-floor((N-1)/2) .. ceil((N-1)/2)``."""
    if N < 1:
        raise ValueError("N must be positive")
    lo = -((N - 1) // 2)
    return FrequencyGrid(np.arange(lo, lo + N).reshape(-1, 1))


def build_trig_dictionary(M: int, d: int, cap: int = DEFAULT_SIZE_CAP) -> TrigDictionary:
    """All exponentials with frequencies in the cube ``[-M, M]^d``."""
    if M < 0 or d < 1:
        raise ValueError("need M >= 0 and d >= 1")
    _check_cap((2 * M + 1) ** d, cap, "trigonometric system")
    axis = range(-M, M + 1)
    vecs = np.array(list(itertools.product(axis, repeat=d)), dtype=np.int64)
    return TrigDictionary(FrequencyGrid(vecs))


def build_trig_from_grid(grid: FrequencyGrid, cap: int = DEFAULT_SIZE_CAP) -> TrigDictionary:
    _check_cap(len(grid), cap, "trigonometric system")
    return TrigDictionary(grid)


def build_trig_contiguous(N: int, cap: int = DEFAULT_SIZE_CAP) -> TrigDictionary:
    """One-dimensional system of ``N`` consecutive frequencies (any ``N``, odd or even)."""
    _check_cap(N, cap, "trigonometric system")
    return TrigDictionary(contiguous_frequencies(N))


def build_sine_system(N: int, normalization: float = math.sqrt(2.0)) -> SineDictionary:
    return SineDictionary(N, normalization)


# ---------------------------------------------------------------------------
# Coefficients and norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseCoefficients:
    support: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        values = np.asarray(self.values, dtype=complex).reshape(-1)
        if len(support) != len(values):
            raise ValueError("support and values differ in length")
        if list(support) != sorted(set(support)):
            raise ValueError("support must be strictly increasing")
        if support and support[0] < 0:
            raise ValueError("indices must be nonnegative")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    def dense(self, N: int) -> np.ndarray:
        if self.support and self.support[-1] >= N:
            raise ValueError(f"index {self.support[-1]} outside dictionary of size {N}")
        out = np.zeros(N, dtype=complex)
        out[list(self.support)] = self.values
        return out

    @classmethod
    def from_dense(cls, coeffs: np.ndarray, tol: float = 0.0) -> "SparseCoefficients":
        coeffs = np.asarray(coeffs, dtype=complex)
        idx = np.flatnonzero(np.abs(coeffs) > tol)
        return cls(tuple(idx.tolist()), coeffs[idx])

    def scaled(self, factor: complex) -> "SparseCoefficients":
        return SparseCoefficients(self.support, self.values * factor)


def _dense_coefficients(coeffs, N: int) -> np.ndarray:
    if isinstance(coeffs, SparseCoefficients):
        return coeffs.dense(N)
    arr = np.asarray(coeffs, dtype=complex).reshape(-1)
    if len(arr) != N:
        raise ValueError(f"expected {N} coefficients, got {len(arr)}")
    return arr


@dataclass(frozen=True)
class RieszReport:
    R1: float
    R2: float
    K: float


def riesz_bounds(
    D: Dictionary, quadrature: Quadrature | None = None, tol: float = 1e-10
) -> RieszReport:
    """Extremal singular values of the synthesis map ``a -> sum a_i phi_i``."""
    g = D.gram(quadrature)
    eig = np.linalg.eigvalsh((g + g.conj().T) / 2)
    top = max(float(eig[-1]), 0.0)
    if eig[0] < -tol * max(top, 1.0):
        raise ConditioningError(
            f"Gram matrix has negative eigenvalue {eig[0]:.3e}; not PSD"
        )
    lo = max(float(eig[0]), 0.0)
    R1, R2 = math.sqrt(lo), math.sqrt(top)
    K = 1.0 / lo if lo > 0 else math.inf
    return RieszReport(R1, R2, K)


def continuous_norm(
    f,
    p: float = 2.0,
    D: Dictionary | None = None,
    quadrature: Quadrature | None = None,
) -> float:
    """``L_p(Omega, mu)`` norm of ``f``.

    ``f`` is either :class:`SparseCoefficients` over ``D`` or a vectorized
    callable.  For ``p == 2`` and coefficient input over a dictionary with a
    closed-form Gram matrix the value is exact; every other case goes through
    the quadrature (``p = inf`` is the maximum over its nodes).
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if isinstance(f, SparseCoefficients):
        if D is None:
            raise ValueError("coefficient input needs its dictionary")
        g = D.analytic_gram()
        if p == 2 and g is not None:
            idx = list(f.support)
            sub = g[np.ix_(idx, idx)]
            return math.sqrt(max(float(np.real(f.values.conj() @ sub @ f.values)), 0.0))
        f = D.combination(f)
    if quadrature is None:
        if D is None:
            raise ValueError("callable input needs a dictionary or a quadrature rule")
        quadrature = reference_quadrature(D.domain)
    return quadrature.lp_norm(np.asarray(f(quadrature.points)), p)


def wiener_norm(coeffs: Iterable[complex] | SparseCoefficients) -> float:
    """Absolute sum of frequency coefficients."""
    if isinstance(coeffs, SparseCoefficients):
        coeffs = coeffs.values
    if not isinstance(coeffs, np.ndarray):
        coeffs = list(coeffs)
    return float(np.abs(np.asarray(coeffs, dtype=complex)).sum())


# ---------------------------------------------------------------------------
# Best v-term approximation by enumeration
# ---------------------------------------------------------------------------


def count_supports(N: int, v: int) -> int:
    return math.comb(N, v)


def iter_support_chunks(N: int, v: int, chunk: int = 20000):
    """Yield ``(S, v)`` integer arrays of supports in lexicographic order."""
    it = itertools.combinations(range(N), v)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), v)


def check_support_cap(N: int, v: int, cap: int) -> int:
    if v < 0 or v > N:
        raise ValueError(f"sparsity {v} outside 0..{N}")
    total = math.comb(N, v)
    if total > cap:
        raise CombinatorialLimitError(
            f"C({N},{v}) = {total} supports exceeds the cap of {cap}"
        )
    return total


def batched_projection_residuals(
    A: np.ndarray, y: np.ndarray, supports: np.ndarray, rtol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fits of ``y`` on column subsets of ``A``.

    Returns the residual norms ``(S,)`` and minimum-norm coefficients ``(S, v)``.
    Rank deficiency is handled by dropping singular values below
    ``rtol * s_max`` (pseudoinverse convention).
    """
    sub = A[:, supports].transpose(1, 0, 2)  # (S, m, v)
    U, s, Vh = np.linalg.svd(sub, full_matrices=False)
    keep = s > rtol * np.maximum(s[:, :1], np.finfo(float).tiny)
    uy = np.einsum("smk,m->sk", U.conj(), y) * keep
    resid = y[None, :] - np.einsum("smk,sk->sm", U, uy)
    inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    coefs = np.einsum("skv,sk->sv", Vh.conj(), uy * inv_s)
    return np.linalg.norm(resid, axis=1), coefs


def chebyshev_fit(A: np.ndarray, y: np.ndarray, iterations: int = 200) -> tuple[float, np.ndarray]:
    """Approximate ``min_c max_q |y_q - (A c)_q|`` by Lawson's reweighting.

    Returns the best sup error seen and its coefficients; an upper estimate of
    the true minimax error.
    """
    n = len(y)
    w = np.full(n, 1.0 / n)
    best_err, best_c = math.inf, np.zeros(A.shape[1], dtype=complex)
    if A.shape[1] == 0:
        return float(np.abs(y).max(initial=0.0)), best_c
    for _ in range(iterations):
        sw = np.sqrt(w)
        c, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
        r = np.abs(y - A @ c)
        err = float(r.max())
        if err < best_err:
            best_err, best_c = err, c
        if err == 0.0:
            break
        w = w * r
        total = w.sum()
        if total <= 0:
            break
        w /= total
    return best_err, best_c


def best_v_term_oracle(
    f,
    v: int,
    D: Dictionary,
    norm: NormKind = "continuous-L2",
    xi: np.ndarray | None = None,
    quadrature: Quadrature | None = None,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> tuple[tuple[int, ...], float]:
    """Exhaustive best ``v``-term approximation error ``sigma_v(f, D)``.

    ``f`` may be :class:`SparseCoefficients`, a vectorized callable, or a
    sample array on the points the norm lives on (``xi`` for
    ``discrete-L2``, the quadrature nodes otherwise).  Ties go to the
    lexicographically first support.  The ``sup`` variant is an estimate
    (Lawson iteration on the quadrature nodes).
    """
    N = D.size
    check_support_cap(N, v, cap)

    if norm == "continuous-L2" and isinstance(f, SparseCoefficients) and D.analytic_gram() is not None:
        return _best_v_term_gram(f.dense(N), v, D.analytic_gram())

    if norm == "discrete-L2":
        if xi is None:
            raise ValueError("discrete-L2 needs the point set xi")
        pts = D.as_points(xi)
        weights = np.full(len(pts), 1.0 / len(pts))
    else:
        quad = quadrature or reference_quadrature(D.domain)
        pts, weights = quad.points, quad.weights
    if isinstance(f, SparseCoefficients):
        y = D.evaluate(pts) @ f.dense(N)
    elif callable(f):
        y = np.asarray(f(pts), dtype=complex)
    else:
        y = np.asarray(f, dtype=complex).reshape(-1)
        if len(y) != len(pts):
            raise ValueError("sample vector does not match the norm's point set")

    if norm == "sup":
        A = D.evaluate(pts)
        if v == 0:
            return (), float(np.abs(y).max())
        best = (math.inf, ())
        for J in itertools.combinations(range(N), v):
            err, _ = chebyshev_fit(A[:, list(J)], y)
            if err < best[0]:
                best = (err, J)
        return tuple(best[1]), best[0]

    sw = np.sqrt(weights)
    yw = y * sw
    if v == 0:
        return (), float(np.linalg.norm(yw))
    Aw = D.evaluate(pts) * sw[:, None]
    best_err, best_J = math.inf, None
    for supports in iter_support_chunks(N, v, chunk=max(1, 2_000_000 // max(len(yw) * v, 1))):
        errs, _ = batched_projection_residuals(Aw, yw, supports)
        i = int(np.argmin(errs))
        if errs[i] < best_err:
            best_err, best_J = float(errs[i]), tuple(int(j) for j in supports[i])
    return best_J, best_err


def _best_v_term_gram(c: np.ndarray, v: int, gram: np.ndarray):
    b = gram @ c
    total = max(float(np.real(c.conj() @ b)), 0.0)
    if v == 0:
        return (), math.sqrt(total)
    best_err, best_J = math.inf, None
    for supports in iter_support_chunks(len(c), v):
        G = gram[supports[:, :, None], supports[:, None, :]]
        bJ = b[supports]
        proj = np.real(np.einsum("sv,svw,sw->s", bJ.conj(), np.linalg.pinv(G, hermitian=True), bJ))
        errs = np.sqrt(np.maximum(total - proj, 0.0))
        i = int(np.argmin(errs))
        if errs[i] < best_err:
            best_err, best_J = float(errs[i]), tuple(int(j) for j in supports[i])
    return best_J, best_err


# ---------------------------------------------------------------------------
# Wiener-norm classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WienerClassInstance:
    """Finite element of the class ``W^{a,b}_A`` with per-level bookkeeping.

    ``coefficients[i]`` multiplies ``exp(i <grid[i], x>)``;
    ``levels[i] = |s|_1`` for the dyadic block containing ``grid[i]``.
    """

    grid: FrequencyGrid
    coefficients: np.ndarray
    levels: np.ndarray
    declared_norms: tuple[float, ...]
    a: float
    b: float

    def level_norm(self, j: int) -> float:
        return wiener_norm(self.coefficients[self.levels == j])

    def as_sparse(self) -> SparseCoefficients:
        return SparseCoefficients(tuple(range(len(self.grid))), self.coefficients)


def wiener_level_bound(j: int, a: float, b: float, d: int) -> float:
    return 2.0 ** (-a * j) * (j + 1) ** ((d - 1) * b)


def wiener_class_instance(
    a: float, b: float, d: int, max_level: int, seed: int = 0
) -> WienerClassInstance:
    """Random function whose level-``j`` part has A-norm exactly ``2^{-aj}(j+1)^{(d-1)b}``.

    Every frequency of the levels ``0..max_level`` carries a nonzero complex
    Gaussian coefficient before rescaling.
    """
    from .sampling import rng_stream

    rng = rng_stream(seed, 0)
    vecs, levels, coefs, declared = [], [], [], []
    for j in range(max_level + 1):
        block = level_block(j, d).vectors
        c = rng.standard_normal(len(block)) + 1j * rng.standard_normal(len(block))
        target = wiener_level_bound(j, a, b, d)
        c *= target / np.abs(c).sum()
        vecs.append(block)
        levels.append(np.full(len(block), j))
        coefs.append(c)
        declared.append(target)
    vecs_all = np.concatenate(vecs)
    order = np.lexsort(vecs_all.T[::-1])
    grid = FrequencyGrid(vecs_all)
    return WienerClassInstance(
        grid,
        np.concatenate(coefs)[order],
        np.concatenate(levels)[order],
        tuple(declared),
        a,
        b,
    )


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------


def write_frequency_file(
    path: str | Path, grid: FrequencyGrid, values: np.ndarray | None = None
) -> None:
    """One line per frequency: ``k1,...,kd`` then optionally `` re,im``."""
    lines = []
    for i, k in enumerate(grid):
        idx = ",".join(str(c) for c in k)
        if values is None:
            lines.append(idx)
        else:
            z = complex(values[i])
            lines.append(f"{idx} {z.real!r},{z.imag!r}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_frequency_file(path: str | Path) -> tuple[FrequencyGrid, np.ndarray | None]:
    vecs, vals = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            vecs.append([int(c) for c in parts[0].split(",")])
            if len(parts) > 1:
                re_s, im_s = parts[1].split(",")
                vals.append(complex(float(re_s), float(im_s)))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed line {raw!r}") from exc
    if vals and len(vals) != len(vecs):
        raise ValueError(f"{path}: some lines lack a coefficient")
    arr = np.array(vecs, dtype=np.int64)
    grid_order = np.lexsort(arr.T[::-1]) if len(arr) else np.array([], dtype=int)
    grid = FrequencyGrid(arr)
    values = np.array(vals, dtype=complex)[grid_order] if vals else None
    return grid, values


def ensure_same_domain(D: Dictionary, domain: Domain) -> None:
    if D.domain != domain:
        raise DomainMismatchError(
            f"dictionary lives on {D.domain.label()}, points on {domain.label()}"
        )
