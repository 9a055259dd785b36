"""
Product formulas built from contraction maps and one-parameter families,
plus evaluators for the accompanying error bounds.

Ordering convention: ``Pi(V) Pi^2(V) ... Pi^n(V)`` is multiplied in the
written order, leftmost factor first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatch,
    HypothesisViolated,
    InvalidSchedule,
    NegativeTime,
    NotContraction,
    NotDivisible,
    NotProjector,
    NotUnitary,
    OddN,
)
from .linalg import as_operator, as_vector, dagger, expm, is_unitary, spectral_norm
from .superop import ergodic_decompose

__all__ = [
    "Schedule",
    "BoundCheck",
    "OrderedProductCheck",
    "iterated_product",
    "schedule_product",
    "decoupling_product",
    "cyclic_product",
    "two_unitary_product",
    "zeno_product",
    "ordered_affine_product",
    "chernoff_bound_check",
    "lemma4_bound_check",
    "telescoping_diff_check",
]

_HYP_TOL = 1e-10


@dataclass(frozen=True)
class Schedule:
    """Pairs ``(k_n, t_n)`` with ``k_n t_n -> target_t``.

    Build with :meth:`uniform` or :meth:`sequenced`; both validate.
    """

    pairs: tuple
    target_t: float

    @classmethod
    def uniform(cls, n, t):
        if n < 1:
            raise InvalidSchedule("n must be >= 1")
        return cls(((int(n), t / n),), float(t))

    @classmethod
    def sequenced(cls, pairs, target_t):
        pairs = tuple((int(k), float(s)) for k, s in pairs)
        ks = [k for k, _ in pairs]
        ts = [s for _, s in pairs]
        if any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise InvalidSchedule("k_n must be positive and strictly increasing")
        if any(s <= 0 for s in ts) or any(b > a for a, b in zip(ts, ts[1:])):
            raise InvalidSchedule("t_n must be positive and non-increasing")
        if pairs:
            k, s = pairs[-1]
            if abs(k * s - target_t) > 0.1 * abs(target_t):
                raise InvalidSchedule(f"last k_n t_n = {k * s:g} not within 10% of t = {target_t:g}")
        return cls(pairs, float(target_t))


def _check_time(t):
    if np.iscomplexobj(t) or isinstance(t, complex):
        return
    if t < 0:
        raise NegativeTime(f"t={t} < 0")


def _require_unitary(u, name="u"):
    u = as_operator(u, name)
    if not is_unitary(u):
        raise NotUnitary(f"{name} is not unitary within 1e-10")
    return u


def _chain(pi, v, k):
    """``Pi(v) Pi^2(v) ... Pi^k(v)`` with incremental iterates."""
    factor = pi.apply(v)
    out = factor
    for _ in range(k - 1):
        factor = pi.apply(factor)
        out = out @ factor
    return out


def iterated_product(pi, family, t, n):
    """``Pi(V_{t/n}) Pi^2(V_{t/n}) ... Pi^n(V_{t/n})``.

    Uses ``n - 1`` further applications of ``Pi`` and ``n - 1`` matrix
    products. A non-unital ``Pi`` is allowed (with a warning) so that
    projection-type maps can be explored.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if t <= 0:
        raise NegativeTime(f"t={t} must be > 0")
    if pi.dim != family.dim:
        raise DimMismatch(f"map dim {pi.dim} != family dim {family.dim}")
    if pi.non_unital:
        warnings.warn("contraction map is not unital; the product need not converge", stacklevel=2)
    return _chain(pi, family.evaluate(t / n), n)


def schedule_product(pi, family, schedule):
    """``[(k_n, t_n, Pi(V_{t_n}) ... Pi^{k_n}(V_{t_n})) for each pair]``."""
    if not isinstance(schedule, Schedule):
        raise InvalidSchedule("expected a Schedule")
    if pi.dim != family.dim:
        raise DimMismatch(f"map dim {pi.dim} != family dim {family.dim}")
    return [(k, s, _chain(pi, family.evaluate(s), k)) for k, s in schedule.pairs]


def decoupling_product(u, x, t, n):
    """``(u e^{(t/n) x})^n (u^dag)^n``.

    ``t`` may be complex. The limit for ``n -> inf`` is ``e^{t P(x)}`` with
    ``P`` the pinching onto the commutant of ``u``.
    """
    u = _require_unitary(u)
    x = as_operator(x)
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_time(t)
    step = u @ expm(x, t / n)
    return np.linalg.matrix_power(step, n) @ np.linalg.matrix_power(dagger(u), n)


def cyclic_product(us, x, t, n):
    """``(u_1 e^{(t/n) x} u_2 e^{(t/n) x} ... u_k e^{(t/n) x})^{n/k}``."""
    us = [_require_unitary(u, f"us[{i}]") for i, u in enumerate(us)]
    x = as_operator(x)
    k = len(us)
    if k == 0:
        raise ValueError("need at least one unitary")
    if n < 1 or n % k:
        raise NotDivisible(f"n={n} is not a positive multiple of k={k}")
    _check_time(t)
    e = expm(x, t / n)
    block = np.eye(x.shape[0], dtype=np.complex128)
    for u in us:
        block = block @ u @ e
    return np.linalg.matrix_power(block, n // k)


def two_unitary_product(u1, u2, x, t, n):
    """Raw and corrected two-unitary products.

    Returns
    -------
    raw : numpy.ndarray
        ``(u1 e^{(t/n) x} u2 e^{(t/n) x})^{n/2}``
    corrected : numpy.ndarray
        ``raw (u^dag)^{n/2}`` with ``u = u1 u2``. It equals
        ``V_{2t/n} Pi(V_{2t/n}) ... Pi^{n/2-1}(V_{2t/n})`` for the
        :class:`~chernoff_lab.semigroup.TwoUnitaryFamily` and ``Pi x = u x u^dag``,
        and converges to ``expm(A, t)`` with ``A = P(u1 x u1^dag + u x u^dag)/2``.
    """
    if n < 2 or n % 2:
        raise OddN(f"n={n} must be a positive even integer")
    u1 = _require_unitary(u1, "u1")
    u2 = _require_unitary(u2, "u2")
    raw = cyclic_product([u1, u2], x, t, n)
    u = u1 @ u2
    corrected = raw @ np.linalg.matrix_power(dagger(u), n // 2)
    return raw, corrected


def zeno_product(p, x, t, n):
    """``(p e^{(t/n) x})^n`` for an orthogonal projector ``p``.

    Tends to ``expm(p x p, t) p`` on the range of ``p``. This map is not
    unital, so it sits outside the unital product setting above.
    """
    p = as_operator(p, "p")
    if spectral_norm(p @ p - p) > _HYP_TOL or spectral_norm(p - dagger(p)) > _HYP_TOL:
        raise NotProjector("p is not an orthogonal projector within 1e-10")
    x = as_operator(x)
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_time(t)
    return np.linalg.matrix_power(p @ expm(x, t / n), n)


# --------------------------------------------------------------------------
# Bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float

    def holds(self, slack=1e-9):
        return self.lhs <= self.rhs + slack


@dataclass(frozen=True)
class OrderedProductCheck:
    lhs: float
    bound: float
    y_norm: float
    residual: float

    def holds(self, slack_factor=10.0):
        return self.lhs <= self.bound + slack_factor * self.residual + 1e-12


def ordered_affine_product(pi, x, s, n):
    """``(1 + s Pi x)(1 + s Pi^2 x) ... (1 + s Pi^n x)``, ascending left to right."""
    eye = np.eye(pi.dim, dtype=np.complex128)
    out = eye.copy()
    it = x
    for _ in range(n):
        it = pi.apply(it)
        out = out @ (eye + s * it)
    return out


def chernoff_bound_check(S, v, n):
    """``lhs = ||e^{n(S-1)} v - S^n v||`` against ``rhs = sqrt(n) ||S v - v||``.

    Raises
    ------
    NotContraction
        If ``||S|| > 1 + 1e-10``.
    """
    S = as_operator(S, "S")
    v = as_vector(v)
    if v.shape[0] != S.shape[0]:
        raise DimMismatch("vector and operator sizes differ")
    if spectral_norm(S) > 1 + _HYP_TOL:
        raise NotContraction("S is not a contraction")
    if n < 0:
        raise ValueError("n must be >= 0")
    eye = np.eye(S.shape[0])
    lhs = np.linalg.norm(expm(S - eye, float(n)) @ v - np.linalg.matrix_power(S, n) @ v)
    rhs = np.sqrt(n) * np.linalg.norm(S @ v - v)
    return BoundCheck(float(lhs), float(rhs))


def _check_affine_hypothesis(x, s, name):
    nrm = spectral_norm(np.eye(x.shape[0]) + s * x)
    if nrm > 1 + _HYP_TOL:
        raise HypothesisViolated(f"||1 + (t/n) {name}|| = {nrm:.12g} > 1")


def lemma4_bound_check(pi, x, t, n, truncation_tol=1e-12, projector=None):
    """Compare the ordered product with ``(1 + (t/n) P x)^n``.

    ``lhs = ||(1 + s Px)^n - prod_k (1 + s Pi^k x)||`` with ``s = t/n`` and
    ``bound = 2 t ||y||/n + 4 t^2 (||x|| ||y|| + ||y||^2)/n`` where
    ``x = Px + y - Pi y`` comes from :func:`~chernoff_lab.superop.ergodic_decompose`.
    The decomposition residual is returned so callers can add slack.

    Raises
    ------
    HypothesisViolated
        If ``||1 + (t/n) x|| > 1 + 1e-10``.
    """
    x = as_operator(x)
    if pi.non_unital:
        raise HypothesisViolated("the map must be unital")
    if n < 1:
        raise ValueError("n must be >= 1")
    s = t / n
    _check_affine_hypothesis(x, s, "x")
    dec = ergodic_decompose(pi, x, truncation_tol, projector=projector)
    eye = np.eye(pi.dim, dtype=np.complex128)
    target = np.linalg.matrix_power(eye + s * dec.px, n)
    lhs = spectral_norm(target - ordered_affine_product(pi, x, s, n))
    xn, yn = spectral_norm(x), spectral_norm(dec.y)
    bound = 2 * t * yn / n + 4 * t * t * (xn * yn + yn * yn) / n
    return OrderedProductCheck(lhs, bound, yn, dec.residual)


def telescoping_diff_check(pi, x1, x2, t, n):
    """``||prod_k(1 + s Pi^k x1) - prod_k(1 + s Pi^k x2)||`` against ``t ||x1 - x2||``."""
    x1 = as_operator(x1, "x1")
    x2 = as_operator(x2, "x2")
    if n < 1:
        raise ValueError("n must be >= 1")
    s = t / n
    _check_affine_hypothesis(x1, s, "x1")
    _check_affine_hypothesis(x2, s, "x2")
    if pi.non_unital:
        warnings.warn("non-unital map: factor norms are not controlled by the hypothesis", stacklevel=2)
    lhs = spectral_norm(ordered_affine_product(pi, x1, s, n) - ordered_affine_product(pi, x2, s, n))
    return BoundCheck(lhs, float(t * spectral_norm(x1 - x2)))
