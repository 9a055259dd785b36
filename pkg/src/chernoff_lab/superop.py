"""
Contraction maps on d x d matrices and their mean ergodic projectors.

A :class:`ContractionMap` is a linear map ``Pi`` acting on operators. The
Cesaro means ``(1/n) sum_{k=1..n} Pi^k x`` converge (in finite dimension,
for power bounded ``Pi``) to ``P x`` where ``P`` projects onto the fixed
space ``Ker(I - Pi)`` along the range of ``I - Pi``. Two independent routes
to ``P`` are provided:

* :func:`cesaro_projector` -- the running mean itself, with a doubling
  convergence check.
* :func:`exact_pinching_projector` -- spectral projectors of a unitary ``u``,
  giving ``P x = sum_j Q_j x Q_j`` for ``Pi x = u x u^dag``. Other map kinds
  have closed forms, and :func:`spectral_projector` covers general maps.

:func:`ergodic_decompose` splits ``x = P x + (y - Pi y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import (
    ChernoffLabError,
    DimMismatch,
    NoConvergence,
    NotContraction,
    NotProjector,
    NotUnitary,
    TooLarge,
)
from .linalg import (
    as_operator,
    dagger,
    is_unitary,
    least_squares_solve,
    random_contraction,
    spectral_norm,
    unvec,
    vec,
)

__all__ = [
    "ContractionMap",
    "UnitaryConjugation",
    "Pinching",
    "BlockSignFlip",
    "ProjectionCompression",
    "GeneralSuper",
    "ErgodicProjector",
    "CesaroDiagnostics",
    "Decomposition",
    "identity_map",
    "dft_matrix",
    "apply",
    "iterate",
    "superop_matrix",
    "cesaro_mean",
    "cesaro_projector",
    "cesaro_mean_projector",
    "cesaro_projector_map",
    "exact_pinching_projector",
    "ergodic_projector",
    "spectral_projector",
    "ergodic_decompose",
    "MAX_SUPEROP_DIM",
]

#: Largest d for which the d^2 x d^2 matricization is formed.
MAX_SUPEROP_DIM = 64

_CONTRACTION_TOL = 1e-10
_PROJECTOR_TOL = 1e-10


def _check_projector(p, name="p"):
    if spectral_norm(p @ p - p) > _PROJECTOR_TOL or spectral_norm(p - dagger(p)) > _PROJECTOR_TOL:
        raise NotProjector(f"{name} is not an orthogonal projector")


class ContractionMap:
    """Base class for superoperators ``Pi`` on ``dim x dim`` matrices.

    Subclasses implement :meth:`_apply`; :meth:`_power` may be overridden
    with a closed form for ``Pi^k``.
    """

    dim: int
    unital: bool = True

    @property
    def non_unital(self):
        return not self.unital

    def apply(self, x):
        x = as_operator(x)
        if x.shape[0] != self.dim:
            raise DimMismatch(f"map acts on {self.dim}x{self.dim} matrices, got {x.shape}")
        return self._apply(x)

    def __call__(self, x):
        return self.apply(x)

    def iterate(self, x, k):
        """``Pi^k x``; ``k = 0`` returns ``x`` unchanged."""
        if k < 0:
            raise ValueError("k must be >= 0")
        x = as_operator(x)
        if x.shape[0] != self.dim:
            raise DimMismatch(f"map acts on {self.dim}x{self.dim} matrices, got {x.shape}")
        if k == 0:
            return x.copy()
        return self._power(x, k)

    def _power(self, x, k):
        for _ in range(k):
            x = self._apply(x)
        return x

    def _apply(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    @cached_property
    def matrix(self):
        """d^2 x d^2 matricization under column stacking (see :func:`superop_matrix`)."""
        if self.dim > MAX_SUPEROP_DIM:
            raise TooLarge(f"d={self.dim} exceeds matricization guard d <= {MAX_SUPEROP_DIM}")
        m = self._build_matrix()
        _verify_matrix(self, m)
        return m

    def _build_matrix(self):
        d = self.dim
        m = np.empty((d * d, d * d), dtype=np.complex128)
        e = np.zeros((d, d), dtype=np.complex128)
        for col in range(d * d):
            i, j = col % d, col // d
            e[i, j] = 1.0
            m[:, col] = vec(self._apply(e))
            e[i, j] = 0.0
        return m


def _verify_matrix(pi, m, samples=10, tol=1e-12):
    for s in range(samples):
        x = random_contraction(pi.dim, 10_000 + s, norm=1.0)
        err = np.linalg.norm(m @ vec(x) - vec(pi._apply(x)))
        if err > tol:
            raise ChernoffLabError(f"matricization disagrees with the map action ({err:.3e})")


class UnitaryConjugation(ContractionMap):
    """``Pi x = u x u^dag`` for a unitary ``u``."""

    def __init__(self, u):
        u = as_operator(u, "u")
        if not is_unitary(u):
            raise NotUnitary("u is not unitary within 1e-10")
        self.u = u
        self.dim = u.shape[0]
        self.unital = True

    def _apply(self, x):
        return self.u @ x @ dagger(self.u)

    def _power(self, x, k):
        uk = np.linalg.matrix_power(self.u, k)
        return uk @ x @ dagger(uk)

    def _build_matrix(self):
        return np.kron(np.conj(self.u), self.u)

    def __repr__(self):
        return f"UnitaryConjugation(dim={self.dim})"


class Pinching(ContractionMap):
    """``Pi x = sum_j Q_j x Q_j`` over orthogonal projectors summing to identity."""

    def __init__(self, blocks):
        blocks = tuple(as_operator(q, "Q") for q in blocks)
        if not blocks:
            raise NotProjector("pinching needs at least one block")
        d = blocks[0].shape[0]
        for q in blocks:
            if q.shape[0] != d:
                raise DimMismatch("pinching blocks have different sizes")
            _check_projector(q, "block")
        if spectral_norm(sum(blocks) - np.eye(d)) > _PROJECTOR_TOL:
            raise NotProjector("pinching blocks do not sum to the identity")
        self.blocks = blocks
        self.dim = d
        self.unital = True

    def _apply(self, x):
        return sum(q @ x @ q for q in self.blocks)

    def _power(self, x, k):
        return self._apply(x)

    def __repr__(self):
        return f"Pinching(dim={self.dim}, blocks={len(self.blocks)})"


class BlockSignFlip(ContractionMap):
    """On ``2 d0 x 2 d0`` matrices viewed as blocks ``(a, b; c, d)``: ``(a, -b; -c, d)``."""

    def __init__(self, dim):
        if dim < 2 or dim % 2:
            raise DimMismatch(f"BlockSignFlip needs an even dimension, got {dim}")
        self.dim = dim
        self.unital = True

    @property
    def half(self):
        return self.dim // 2

    def _apply(self, x):
        h = self.half
        out = x.copy()
        out[:h, h:] *= -1
        out[h:, :h] *= -1
        return out

    def _power(self, x, k):
        return self._apply(x) if k % 2 else x.copy()

    def _build_matrix(self):
        d, h = self.dim, self.half
        sign = np.ones((d, d))
        sign[:h, h:] = -1
        sign[h:, :h] = -1
        return np.diag(vec(sign).astype(np.complex128))

    def __repr__(self):
        return f"BlockSignFlip(dim={self.dim})"


class ProjectionCompression(ContractionMap):
    """``Pi x = p x p``; unital only when ``p`` is the identity."""

    def __init__(self, p):
        p = as_operator(p, "p")
        _check_projector(p)
        self.p = p
        self.dim = p.shape[0]
        self.unital = spectral_norm(p - np.eye(self.dim)) <= _PROJECTOR_TOL

    def _apply(self, x):
        return self.p @ x @ self.p

    def _power(self, x, k):
        return self._apply(x)

    def __repr__(self):
        return f"ProjectionCompression(dim={self.dim}, rank={round(np.trace(self.p).real)})"


class GeneralSuper(ContractionMap):
    """Map given by an explicit d^2 x d^2 matrix acting on column-stacked operators.

    Contraction is certified by sampling only: 200 random unit-norm
    matrices must satisfy ``||Pi x|| <= 1 + 1e-10``. The exact induced norm
    is not computed, so a map passing the check may still fail to be a
    contraction on some unsampled input.
    """

    n_samples = 200

    def __init__(self, m, seed=0):
        m = np.asarray(m, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimMismatch("superoperator matrix must be square")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0] or d < 1:
            raise DimMismatch(f"superoperator size {m.shape[0]} is not a perfect square")
        if d > MAX_SUPEROP_DIM:
            raise TooLarge(f"d={d} exceeds matricization guard")
        as_operator(m, "m")
        self.m = m
        self.dim = d
        rng = np.random.default_rng(seed)
        for _ in range(self.n_samples):
            x = random_contraction(d, int(rng.integers(2**31)), norm=1.0)
            if spectral_norm(self._apply(x)) > 1.0 + _CONTRACTION_TOL:
                raise NotContraction("sampled input grew in norm under the map")
        eye = np.eye(d, dtype=np.complex128)
        self.unital = spectral_norm(self._apply(eye) - eye) <= 1e-12

    def _apply(self, x):
        return unvec(self.m @ vec(x), self.dim)

    def _power(self, x, k):
        return unvec(np.linalg.matrix_power(self.m, k) @ vec(x), self.dim)

    def _build_matrix(self):
        return self.m.copy()

    def __repr__(self):
        return f"GeneralSuper(dim={self.dim})"


def identity_map(d):
    """The identity superoperator, as conjugation by the identity."""
    return UnitaryConjugation(np.eye(d, dtype=np.complex128))


def dft_matrix(d):
    """Unitary DFT matrix ``F_{jk} = exp(-2 pi i jk/d)/sqrt(d)``; ``F^4 = 1``."""
    j = np.arange(d)
    return np.exp(-2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def apply(pi, x):
    return pi.apply(x)


def iterate(pi, x, k):
    return pi.iterate(x, k)


def superop_matrix(pi):
    """Matrix ``m`` with ``m @ vec(x) == vec(pi(x))`` for column-stacking ``vec``.

    For ``UnitaryConjugation(u)`` this is ``kron(conj(u), u)``. The result is
    checked against the map on 10 random inputs to 1e-12.

    Raises
    ------
    TooLarge
        If ``d > 64``.
    """
    return pi.matrix


# --------------------------------------------------------------------------
# Cesaro means
# --------------------------------------------------------------------------


def cesaro_mean(pi, x, n):
    """``(1/n) sum_{k=1..n} Pi^k x`` by binary doubling of partial sums.

    Uses ``S_{2m} = S_m + Pi^m S_m`` and ``S_{m+1} = S_m + Pi^{m+1} x`` so
    only O(log n) calls to ``Pi.iterate`` are needed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = as_operator(x)
    s = np.zeros_like(x)
    m = 0
    for bit in bin(n)[2:]:
        if m:
            s = s + pi.iterate(s, m)
            m *= 2
        if bit == "1":
            s = s + pi.iterate(x, m + 1)
            m += 1
    return s / n


@dataclass(frozen=True)
class CesaroDiagnostics:
    terms_used: int
    residual: float
    change: float


def cesaro_projector(pi, x, tol=1e-6, max_terms=100_000):
    """Estimate ``P x`` by Cesaro means with a doubling convergence check.

    Means ``M_n`` are evaluated at ``n = 1, 2, 4, ...``; the first ``M_n``
    with ``||M_n - M_{2n}|| <= tol`` is returned. Consecutive means are not
    compared because they always differ by O(1/n).

    Parameters
    ----------
    pi : ContractionMap
    x : array_like
    tol : float
        Absolute spectral-norm tolerance on the doubling difference.
    max_terms : int
        Largest number of terms any returned mean may use.

    Returns
    -------
    (numpy.ndarray, CesaroDiagnostics)
        The mean and ``(terms_used, residual = ||Pi M_n - M_n||, change)``.

    Raises
    ------
    NoConvergence
        If the budget is exhausted and the residual still exceeds ``tol``.
    """
    if tol <= 0 or max_terms < 1:
        raise ValueError("tol must be > 0 and max_terms >= 1")
    x = as_operator(x)
    if x.shape[0] != pi.dim:
        raise DimMismatch(f"map acts on {pi.dim}x{pi.dim} matrices, got {x.shape}")
    n = 1
    s = pi.apply(x)
    change = np.inf
    while 2 * n <= max_terms:
        s2 = s + pi.iterate(s, n)
        change = spectral_norm(s / n - s2 / (2 * n))
        if change <= tol:
            mean = s / n
            return mean, CesaroDiagnostics(n, spectral_norm(pi.apply(mean) - mean), change)
        s, n = s2, 2 * n
    mean = s / n
    residual = spectral_norm(pi.apply(mean) - mean)
    if residual > tol:
        raise NoConvergence(
            f"Cesaro mean not converged after {n} terms (residual {residual:.3e} > {tol:.1e})",
            estimate=mean,
            residual=residual,
        )
    return mean, CesaroDiagnostics(n, residual, change)


# --------------------------------------------------------------------------
# Projector objects
# --------------------------------------------------------------------------


class ErgodicProjector:
    """The mean ergodic projector ``P`` of a contraction map, as a callable.

    Two kinds exist:

    ``"exact"``
        ``P x = sum_j Q_j x Q_j`` over stored ``blocks``. For a pinching the
        blocks sum to the identity; for a compression map there is a single
        block ``p``.
    ``"cesaro"``
        ``P`` is the d^2 x d^2 Cesaro mean ``(1/n) sum_{k=1..n} m^k`` of the
        matricized map, with ``n_terms`` terms.
    ``"spectral"``
        ``P`` is the d^2 x d^2 spectral projector of the matricized map onto
        its eigenvalue-1 eigenspace (see :func:`spectral_projector`).

    ``residual`` bounds ``||Pi P x - P x||`` and ``||P P x - P x||`` for unit
    ``||x||`` (zero by construction for the exact kind).
    """

    def __init__(self, dim, kind, blocks=(), mean=None, n_terms=0, residual=0.0, source=None):
        self.dim = dim
        self.kind = kind
        self.blocks = tuple(blocks)
        self.mean = mean
        self.n_terms = n_terms
        self.residual = float(residual)
        self.source = source

    @classmethod
    def from_blocks(cls, blocks, source=None):
        blocks = tuple(as_operator(q, "Q") for q in blocks)
        return cls(blocks[0].shape[0], "exact", blocks=blocks, source=source)

    def apply(self, x):
        x = as_operator(x)
        if x.shape[0] != self.dim:
            raise DimMismatch(f"projector acts on {self.dim}x{self.dim} matrices, got {x.shape}")
        if self.kind == "exact":
            return sum(q @ x @ q for q in self.blocks)
        return unvec(self.mean @ vec(x), self.dim)

    __call__ = apply

    @property
    def is_exact(self):
        return self.kind in ("exact", "spectral")

    def __repr__(self):
        if self.kind == "spectral":
            return f"ErgodicProjector(spectral, dim={self.dim}, residual={self.residual:.2e})"
        if self.kind == "exact":
            return f"ErgodicProjector(exact, dim={self.dim}, blocks={len(self.blocks)})"
        return f"ErgodicProjector(cesaro, dim={self.dim}, n_terms={self.n_terms}, residual={self.residual:.2e})"


def _matrix_cesaro_sum(m, n):
    d2 = m.shape[0]
    s = np.zeros((d2, d2), dtype=np.complex128)
    k = 0
    for bit in bin(n)[2:]:
        if k:
            s = s + np.linalg.matrix_power(m, k) @ s
            k *= 2
        if bit == "1":
            s = s + np.linalg.matrix_power(m, k + 1)
            k += 1
    return s


def _mean_residual(m, mean, d):
    # sqrt(d) converts the vec 2-norm bound into an operator-norm bound
    r1 = np.linalg.norm(m @ mean - mean, 2)
    r2 = np.linalg.norm(mean @ mean - mean, 2)
    return float(np.sqrt(d) * max(r1, r2))


def cesaro_mean_projector(pi, n_terms):
    """Projector given by the fixed ``n_terms`` Cesaro mean of ``pi``.

    Exact (up to rounding) when ``Pi^n_terms`` is the identity, e.g. the
    4-term mean for conjugation by the DFT matrix.
    """
    m = superop_matrix(pi)
    mean = _matrix_cesaro_sum(m, n_terms) / n_terms
    return ErgodicProjector(
        pi.dim, "cesaro", mean=mean, n_terms=n_terms,
        residual=_mean_residual(m, mean, pi.dim), source=pi,
    )


def cesaro_projector_map(pi, tol=1e-8, max_terms=100_000):
    """Cesaro projector whose superoperator mean passes the doubling check."""
    m = superop_matrix(pi)
    n = 1
    s = m.copy()
    converged = False
    while 2 * n <= max_terms:
        s2 = s + np.linalg.matrix_power(m, n) @ s
        if np.linalg.norm(s / n - s2 / (2 * n), 2) <= tol:
            converged = True
            break
        s, n = s2, 2 * n
    mean = s / n
    residual = _mean_residual(m, mean, pi.dim)
    if not converged and residual > tol:
        raise NoConvergence(f"Cesaro projector not converged after {n} terms", residual=residual)
    return ErgodicProjector(pi.dim, "cesaro", mean=mean, n_terms=n, residual=residual, source=pi)


def exact_pinching_projector(u, cluster_tol=1e-8):
    """Commutant projector of ``x -> u x u^dag`` from the spectrum of ``u``.

    Eigenvalues closer than ``cluster_tol`` are merged by transitive closure
    and each cluster contributes one spectral projector ``Q_j``. Then
    ``P x = sum_j Q_j x Q_j`` commutes with ``u``.

    Raises
    ------
    NotUnitary
        If ``u`` is not unitary within 1e-10.
    """
    u = as_operator(u, "u")
    if not is_unitary(u):
        raise NotUnitary("u is not unitary within 1e-10")
    # complex Schur of a normal matrix: T diagonal, Z unitary eigenbasis
    t, z = scipy.linalg.schur(u, output="complex")
    lam = np.diag(t)
    close = np.abs(lam[:, None] - lam[None, :]) <= cluster_tol
    n_clusters, labels = connected_components(close, directed=False)
    blocks = []
    for c in range(n_clusters):
        cols = z[:, labels == c]
        blocks.append(cols @ dagger(cols))
    return ErgodicProjector.from_blocks(blocks, source=UnitaryConjugation(u))


def spectral_projector(pi, null_tol=1e-10):
    """Projector onto ``Ker(I - m)`` along ``Rng(I - m)`` from null spaces.

    With ``R`` spanning the right and ``L`` the left null space of ``I - m``,
    ``P = R (L^dag R)^{-1} L^dag``. For a power bounded map the eigenvalue 1
    is semisimple, so ``L^dag R`` is invertible and this is the mean ergodic
    projector.
    """
    m = superop_matrix(pi)
    lhs = np.eye(m.shape[0], dtype=np.complex128) - m
    right = scipy.linalg.null_space(lhs, rcond=null_tol)
    left = scipy.linalg.null_space(dagger(lhs), rcond=null_tol)
    if right.shape[1] != left.shape[1]:
        raise NoConvergence("left and right fixed spaces differ in dimension; map not power bounded?")
    if right.shape[1] == 0:
        mean = np.zeros_like(m)
    else:
        mean = right @ np.linalg.solve(dagger(left) @ right, dagger(left))
    return ErgodicProjector(
        pi.dim, "spectral", mean=mean, residual=_mean_residual(m, mean, pi.dim), source=pi,
    )


def ergodic_projector(pi, tol=1e-8, max_terms=100_000, cluster_tol=1e-8):
    """Exact projector: closed form by map kind, spectral for :class:`GeneralSuper`.

    ``tol`` and ``max_terms`` are kept for call compatibility with
    :func:`cesaro_projector_map`, which is the independent estimate.
    """
    if isinstance(pi, UnitaryConjugation):
        return exact_pinching_projector(pi.u, cluster_tol)
    if isinstance(pi, Pinching):
        return ErgodicProjector.from_blocks(pi.blocks, source=pi)
    if isinstance(pi, BlockSignFlip):
        h = pi.half
        top = np.zeros((pi.dim, pi.dim), dtype=np.complex128)
        top[:h, :h] = np.eye(h)
        return ErgodicProjector.from_blocks([top, np.eye(pi.dim) - top], source=pi)
    if isinstance(pi, ProjectionCompression):
        return ErgodicProjector.from_blocks([pi.p], source=pi)
    return spectral_projector(pi)


@dataclass(frozen=True)
class Decomposition:
    px: np.ndarray
    y: np.ndarray
    residual: float


def ergodic_decompose(pi, x, truncation_tol=1e-12, projector=None, use_cesaro=False,
                      cesaro_tol=1e-8, max_terms=100_000):
    """Split ``x = P x + (y - Pi y)``.

    ``P x`` comes from ``projector`` if given, from :func:`cesaro_projector`
    if ``use_cesaro``, and from the exact :func:`ergodic_projector` otherwise. ``y`` is
    the minimum norm least squares solution of ``(I - Pi) y = x - P x``.

    Returns
    -------
    Decomposition
        ``px``, ``y`` and ``residual = ||x - P x - (y - Pi y)||``.
    """
    x = as_operator(x)
    if x.shape[0] != pi.dim:
        raise DimMismatch(f"map acts on {pi.dim}x{pi.dim} matrices, got {x.shape}")
    if projector is not None:
        px = projector(x)
    elif use_cesaro:
        px, _ = cesaro_projector(pi, x, tol=cesaro_tol, max_terms=max_terms)
    else:
        px = ergodic_projector(pi)(x)
    d = pi.dim
    lhs = np.eye(d * d, dtype=np.complex128) - superop_matrix(pi)
    rhs = vec(x - px)
    if not np.any(lhs):
        # Pi is the identity: Rng(I - Pi) = {0}
        y = np.zeros_like(x)
    else:
        y = unvec(least_squares_solve(lhs, rhs, truncation_tol), d)
    residual = spectral_norm(x - px - (y - pi.apply(y)))
    return Decomposition(px, y, residual)
