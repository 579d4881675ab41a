"""Point sets, evaluation tables and discrete norms.

Randomness comes from numpy's counter-based Philox generator.  A stream is
identified by the pair ``(seed, stream)`` which is packed into the 128-bit
Philox key as ``seed + 2**64 * stream``; trial ``i`` of a Monte Carlo run uses
stream ``i``, so every trial can be regenerated independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .dictionary import (
    Dictionary,
    Domain,
    Quadrature,
    SparseCoefficients,
    ensure_same_domain,
    reference_quadrature,
)
from .errors import UnsupportedModeError

Provenance = Literal["iid-uniform", "stratified", "equispaced", "explicit"]
_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for the stream ``(seed, stream)``."""
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class PointSet:
    domain: Domain
    points: np.ndarray
    provenance: Provenance = "explicit"
    seed: int | None = None
    stream: int = 0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.domain.dim)
        if len(pts) < 1:
            raise ValueError("a point set needs at least one point")
        if not self.domain.contains(pts):
            raise ValueError(f"points fall outside {self.domain.label()}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return len(self.points)

    def __len__(self) -> int:
        return self.m

    def duplicated(self, times: int = 2) -> "PointSet":
        return PointSet(self.domain, np.tile(self.points, (times, 1)), "explicit")

    def regenerate(self) -> "PointSet":
        if self.provenance == "explicit":
            return self
        return draw_points(self.m, self.domain, self.provenance, self.seed or 0, self.stream)


def draw_points(
    m: int,
    domain: Domain,
    mode: Provenance = "iid-uniform",
    seed: int = 0,
    stream: int = 0,
) -> PointSet:
    """Draw ``m`` points on ``domain``.

    ``stratified`` splits the domain into ``m`` congruent boxes and draws one
    uniform point per box: a tensor split when ``m`` is a perfect ``d``-th
    power, otherwise a split of the first coordinate only.
    """
    if m < 1:
        raise ValueError("m must be positive")
    d, period = domain.dim, domain.period
    if mode == "iid-uniform":
        u = rng_stream(seed, stream).random((m, d))
    elif mode == "stratified":
        u = rng_stream(seed, stream).random((m, d))
        q = round(m ** (1.0 / d))
        if d > 1 and q**d == m:
            cells = np.stack(np.unravel_index(np.arange(m), (q,) * d), axis=1)
            u = (cells + u) / q
        else:
            u[:, 0] = (np.arange(m) + u[:, 0]) / m
    elif mode == "equispaced":
        if d != 1:
            raise UnsupportedModeError("equispaced points are only defined for d = 1")
        u = (np.arange(m) / m).reshape(-1, 1)
    else:
        raise UnsupportedModeError(f"unknown sampling mode {mode!r}")
    pts = u * period
    if domain.kind == "torus":
        pts = np.minimum(pts, np.nextafter(period, 0.0))
    return PointSet(domain, pts, mode, None if mode == "equispaced" else seed, stream)


def explicit_points(points, domain: Domain | None = None) -> PointSet:
    domain = domain or Domain("torus", 1)
    return PointSet(domain, np.asarray(points, dtype=float), "explicit")


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """Evaluation table ``values[j, i] = phi_i(xi^j)``."""

    values: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def normalized(self) -> "NormalizedSystem":
        return NormalizedSystem(self.values / math.sqrt(self.m))


@dataclass(frozen=True, eq=False)
class NormalizedSystem:
    """Columns ``m^{-1/2} (phi_i(xi^1), ..., phi_i(xi^m))``."""

    columns: np.ndarray
    orthonormal_dictionary: bool = True

    @property
    def shape(self) -> tuple[int, int]:
        return self.columns.shape

    def combine(self, a: np.ndarray) -> np.ndarray:
        return self.columns @ a


def sample_matrix(D: Dictionary, xi: PointSet) -> SampleMatrix:
    ensure_same_domain(D, xi.domain)
    return SampleMatrix(D.evaluate(xi.points))


def normalized_system(D: Dictionary, xi: PointSet) -> NormalizedSystem:
    return NormalizedSystem(sample_matrix(D, xi).normalized().columns, D.orthonormal)


def discrete_norm(z, p: float = 2.0) -> float:
    """``((1/m) sum |z_j|^p)^{1/p}``, or ``max |z_j|`` for ``p = inf``."""
    z = np.abs(np.asarray(z)).reshape(-1)
    if len(z) == 0:
        raise ValueError("empty vector")
    if math.isinf(p):
        return float(z.max())
    if p < 1:
        raise ValueError("p must be at least 1")
    return float(np.mean(z**p) ** (1.0 / p))


def mixed_measure(xi: PointSet, quadrature: Quadrature | None = None) -> Quadrature:
    """Half the reference rule plus half the empirical measure of ``xi``."""
    quad = quadrature or reference_quadrature(xi.domain)
    points = np.concatenate([quad.points, xi.points])
    weights = np.concatenate([quad.weights / 2.0, np.full(xi.m, 0.5 / xi.m)])
    return Quadrature(points, weights)


def mixed_norm(
    f,
    xi: PointSet,
    quadrature: Quadrature | None = None,
    D: Dictionary | None = None,
) -> float:
    """``L_2(mu_xi)`` norm, integrating ``|f|^2`` against the mixed measure."""
    if isinstance(f, SparseCoefficients):
        if D is None:
            raise ValueError("coefficient input needs its dictionary")
        f = D.combination(f)
    measure = mixed_measure(xi, quadrature)
    return measure.lp_norm(np.asarray(f(measure.points)), 2.0)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def pointset_csv_text(xi: PointSet) -> str:
    header = (
        f"# domain={xi.domain.kind} dim={xi.domain.dim} provenance={xi.provenance} "
        f"seed={'' if xi.seed is None else xi.seed} stream={xi.stream}"
    )
    cols = ",".join(f"x{j + 1}" for j in range(xi.domain.dim))
    rows = [",".join(repr(float(c)) for c in p) for p in xi.points]
    return "\n".join([header, cols, *rows]) + "\n"


def write_pointset_csv(path: str | Path, xi: PointSet) -> None:
    Path(path).write_text(pointset_csv_text(xi))


def read_pointset_csv(path: str | Path) -> PointSet:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}:1: missing provenance header")
    meta = dict(item.split("=", 1) for item in lines[0][1:].split())
    domain = Domain(meta["domain"], int(meta["dim"]))
    pts = np.array([[float(c) for c in ln.split(",")] for ln in lines[2:] if ln.strip()])
    seed = int(meta["seed"]) if meta.get("seed") else None
    return PointSet(domain, pts, meta["provenance"], seed, int(meta.get("stream", 0)))


def write_sample_matrix_csv(path: str | Path, S: SampleMatrix) -> None:
    N = S.shape[1]
    header = ",".join(f"phi{i + 1}_re,phi{i + 1}_im" for i in range(N))
    rows = [
        ",".join(f"{z.real!r},{z.imag!r}" for z in map(complex, row)) for row in S.values
    ]
    Path(path).write_text("\n".join([header, *rows]) + "\n")


def read_sample_matrix_csv(path: str | Path) -> SampleMatrix:
    lines = Path(path).read_text().splitlines()[1:]
    raw = np.array([[float(c) for c in ln.split(",")] for ln in lines if ln.strip()])
    return SampleMatrix(raw[:, 0::2] + 1j * raw[:, 1::2])
