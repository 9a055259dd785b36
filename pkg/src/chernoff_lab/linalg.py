"""
Dense complex linear algebra primitives.

Operators are plain ``numpy`` arrays of dtype ``complex128`` and shape
``(d, d)``; state vectors are ``(d,)`` arrays. All functions here are pure.

Functions
---------
:func:`as_operator`
    Validate and coerce an array-like to a finite square complex matrix.
:func:`expm`
    Matrix exponential ``e^{t x}``.
:func:`spectral_norm`
    Largest singular value.
:func:`least_squares_solve`
    Truncated-SVD minimum norm least squares.
:func:`random_contraction_generator`, :func:`random_unitary`,
:func:`random_contraction`, :func:`random_unit_vector`
    Seeded random test instances.
"""

from __future__ import annotations

import numbers

import numpy as np
import scipy.linalg

from .errors import DegenerateInput, DimMismatch, NonFinite, Overflow

__all__ = [
    "EXPM_RTOL",
    "as_operator",
    "as_vector",
    "dagger",
    "expm",
    "spectral_norm",
    "least_squares_solve",
    "random_contraction_generator",
    "random_unitary",
    "random_contraction",
    "random_unit_vector",
    "is_unitary",
    "vec",
    "unvec",
]

#: Relative spectral-norm accuracy promised by :func:`expm` for ``||t x|| <= 100``.
EXPM_RTOL = 1e-12


def as_operator(x, name="x"):
    """Return ``x`` as a finite square ``complex128`` array.

    Raises
    ------
    DimMismatch
        If ``x`` is not a non-empty square 2-D array.
    NonFinite
        If any entry is NaN or Inf.
    """
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimMismatch(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


def as_vector(v, name="v"):
    a = np.asarray(v, dtype=np.complex128)
    if a.ndim != 1 or a.shape[0] < 1:
        raise DimMismatch(f"{name} must be a non-empty 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


def dagger(x):
    """Conjugate transpose."""
    return np.conj(np.transpose(x))


def vec(x):
    """Column-stacking vectorization of a square matrix."""
    return np.reshape(x, -1, order="F")


def unvec(v, d):
    return np.reshape(v, (d, d), order="F")


def expm(x, t=1.0):
    """Matrix exponential ``e^{t x}``.

    Backed by scipy's scaling-and-squaring Pade implementation (degree 13
    rational approximant with norm-based scaling selection).

    Parameters
    ----------
    x : array_like
        Square matrix.
    t : real or complex scalar
        Scale factor applied before exponentiation.

    Returns
    -------
    numpy.ndarray
        ``e^{t x}``.

    Raises
    ------
    NonFinite
        If ``x`` or ``t`` is not finite.
    Overflow
        If the result is not representable.

    Examples
    --------
    >>> expm([[0, 1], [0, 0]], 1.0).real
    array([[1., 1.],
           [0., 1.]])
    """
    a = as_operator(x)
    if not isinstance(t, numbers.Number) or not np.isfinite(t):
        raise NonFinite(f"scale factor t={t!r} is not a finite number")
    if t == 0:
        return np.eye(a.shape[0], dtype=np.complex128)
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = scipy.linalg.expm(t * a)
        except FloatingPointError as exc:
            raise Overflow(f"matrix exponential overflowed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise Overflow("matrix exponential produced non-finite entries")
    return np.asarray(out, dtype=np.complex128)


def spectral_norm(x):
    """Largest singular value of ``x`` (full SVD)."""
    a = np.asarray(x, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix contains NaN or Inf")
    if a.ndim == 1:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a, 2))


def least_squares_solve(m, rhs, truncation_tol=1e-12):
    """Minimum-norm least squares solution of ``m @ sol = rhs``.

    Singular values below ``truncation_tol * s_max`` are discarded.

    Raises
    ------
    NonFinite
        On NaN/Inf in ``m`` or ``rhs``.
    DimMismatch
        If ``rhs`` does not match the row count of ``m``.
    DegenerateInput
        If no singular value survives the threshold.
    """
    m = np.asarray(m, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if m.ndim != 2:
        raise DimMismatch(f"m must be 2-D, got shape {m.shape}")
    if rhs.shape != (m.shape[0],):
        raise DimMismatch(f"rhs has shape {rhs.shape}, expected ({m.shape[0]},)")
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(rhs))):
        raise NonFinite("least squares input contains NaN or Inf")
    uu, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise DegenerateInput("matrix is identically zero")
    keep = s >= truncation_tol * s[0]
    if not np.any(keep):
        raise DegenerateInput("all singular values below truncation threshold")
    coeff = (dagger(uu[:, keep]) @ rhs) / s[keep]
    return dagger(vh[keep, :]) @ coeff


def is_unitary(u, atol=1e-10):
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return spectral_norm(dagger(u) @ u - np.eye(u.shape[0])) <= atol


def _complex_gaussian(rng, d1, d2):
    return (rng.standard_normal((d1, d2)) + 1j * rng.standard_normal((d1, d2))) / np.sqrt(2.0)


def random_contraction_generator(d, seed):
    """Random dissipative generator ``x = iH - B^dag B``.

    ``H`` is Hermitian and ``B`` a complex Gaussian matrix, so the Hermitian
    part of ``x`` is ``-B^dag B <= 0`` and ``||e^{t x}|| <= 1`` for all
    ``t >= 0``. Entries are scaled by ``1/sqrt(d)`` to keep ``||x||`` O(1).
    Deterministic per ``(d, seed)``.
    """
    if d < 1:
        raise DimMismatch("d must be >= 1")
    rng = np.random.default_rng(seed)
    g = _complex_gaussian(rng, d, d)
    h = (g + dagger(g)) / (2.0 * np.sqrt(d))
    b = _complex_gaussian(rng, d, d) / np.sqrt(d)
    return 1j * h - dagger(b) @ b


def random_unitary(d, seed):
    """Haar-distributed unitary via QR with phase fix, deterministic per ``(d, seed)``."""
    if d < 1:
        raise DimMismatch("d must be >= 1")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(_complex_gaussian(rng, d, d))
    diag = np.diag(r)
    phases = diag / np.abs(diag)
    return q * phases[np.newaxis, :]


def random_contraction(d, seed, norm=None):
    """Random matrix with spectral norm ``norm`` (uniform in [0.5, 1] if omitted)."""
    if d < 1:
        raise DimMismatch("d must be >= 1")
    rng = np.random.default_rng(seed)
    g = _complex_gaussian(rng, d, d)
    if norm is None:
        norm = rng.uniform(0.5, 1.0)
    return g * (norm / spectral_norm(g))


def random_unit_vector(d, seed):
    rng = np.random.default_rng(seed)
    v = _complex_gaussian(rng, d, 1)[:, 0]
    return v / np.linalg.norm(v)
