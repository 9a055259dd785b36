"""
One-parameter contraction families ``t -> V_t`` and their projected generators.

In finite dimension every generator is bounded, so the closure of the
projected generator ``A = d/dt P(V_t)|_{t=0}`` is ``A`` itself and the limit
semigroup is ``expm(A, t)``. The domain of the strong derivative is all of
``C^d``; no domain bookkeeping is done.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MethodUnavailable, NegativeTime
from .linalg import as_operator, dagger, expm, spectral_norm
from .superop import identity_map, ergodic_projector

__all__ = [
    "OneParameterFamily",
    "ExpFamily",
    "BlockMixFamily",
    "TwoUnitaryFamily",
    "GeneratorEstimate",
    "ContractionReport",
    "StabilityReport",
    "evaluate",
    "projected_generator",
    "check_contraction_family",
    "check_stability",
    "CONTRACTION_TOL",
]

CONTRACTION_TOL = 1e-10


class OneParameterFamily:
    """``t -> V_t`` with ``V_0 = 1``; subclasses define :meth:`_at`.

    ``_at`` is analytic in ``t`` and accepts negative (or complex) values,
    which the central finite difference needs; :meth:`evaluate` is the
    checked public entry point.
    """

    dim: int

    def evaluate(self, t):
        if t < 0:
            raise NegativeTime(f"t={t} < 0")
        return self._at(t)

    __call__ = evaluate

    def _at(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def generator(self):
        """Derivative of ``V_t`` at 0, when known in closed form."""
        raise MethodUnavailable(f"{type(self).__name__} has no closed-form generator")

    is_semigroup = False


class ExpFamily(OneParameterFamily):
    """``V_t = e^{t x}``."""

    is_semigroup = True

    def __init__(self, x):
        self.x = as_operator(x)
        self.dim = self.x.shape[0]

    def _at(self, t):
        return expm(self.x, t)

    def generator(self):
        return self.x.copy()

    def __repr__(self):
        return f"ExpFamily(dim={self.dim})"


class BlockMixFamily(OneParameterFamily):
    """Mixed pair of semigroups on ``C^{2 d0}``.

    ``V_t = ((T1 + T2)/2, (T1 - T2)/2; (T1 - T2)/2, (T1 + T2)/2)`` with
    ``T_i = e^{t x_i}``. This is conjugation of ``blockdiag(T1, T2)`` by the
    Hadamard-type unitary, hence again a contraction semigroup.
    """

    is_semigroup = True

    def __init__(self, x1, x2):
        self.x1 = as_operator(x1, "x1")
        self.x2 = as_operator(x2, "x2")
        if self.x1.shape != self.x2.shape:
            raise ValueError("x1 and x2 must have the same shape")
        self.half = self.x1.shape[0]
        self.dim = 2 * self.half

    @staticmethod
    def _mix(a, b):
        s, d = (a + b) / 2, (a - b) / 2
        return np.block([[s, d], [d, s]])

    def _at(self, t):
        return self._mix(expm(self.x1, t), expm(self.x2, t))

    def generator(self):
        return self._mix(self.x1, self.x2)

    def __repr__(self):
        return f"BlockMixFamily(dim={self.dim})"


class TwoUnitaryFamily(OneParameterFamily):
    """``V_t = u1 e^{(t/2) x} u1^dag . u e^{(t/2) x} u^dag`` with ``u = u1 u2``.

    Not a semigroup in general.
    """

    def __init__(self, u1, u2, x):
        self.u1 = as_operator(u1, "u1")
        self.u2 = as_operator(u2, "u2")
        self.x = as_operator(x)
        self.u = self.u1 @ self.u2
        self.dim = self.x.shape[0]

    def _at(self, t):
        half = expm(self.x, t / 2)
        return self.u1 @ half @ dagger(self.u1) @ self.u @ half @ dagger(self.u)

    def generator(self):
        return 0.5 * (self.u1 @ self.x @ dagger(self.u1) + self.u @ self.x @ dagger(self.u))

    def __repr__(self):
        return f"TwoUnitaryFamily(dim={self.dim})"


def evaluate(family, t):
    return family.evaluate(t)


@dataclass(frozen=True)
class GeneratorEstimate:
    """Projected generator ``A`` (equal to its closure in finite dimension)."""

    A: np.ndarray
    method: str
    error_estimate: float = 0.0
    step: float | None = None
    richardson_levels: int = 0

    def semigroup(self, t):
        """The limit ``e^{t A}``."""
        return expm(self.A, t)


def _central_difference(f, h):
    return (f(h) - f(-h)) / (2 * h)


def projected_generator(family, projector=None, method="exact", step=1e-3, richardson_levels=2):
    """``A = d/dt P(V_t)`` at ``t = 0``.

    ``method="exact"`` applies ``P`` to the closed-form generator of the
    family (``P`` is linear). ``method="finite_difference"`` builds a
    Richardson table of central differences with steps ``h, h/2, ...`` and
    reports the last extrapolation correction as ``error_estimate``.
    """
    if projector is None:
        projector = ergodic_projector(identity_map(family.dim))
    if method == "exact":
        return GeneratorEstimate(projector(family.generator()), "exact")
    if method != "finite_difference":
        raise MethodUnavailable(f"unknown method {method!r}")

    def f(t):
        return projector(family._at(t))

    table = [_central_difference(f, step / 2**j) for j in range(richardson_levels + 1)]
    prev = table[0]
    for level in range(1, richardson_levels + 1):
        factor = 4.0**level
        prev = table[-1]
        table = [(factor * table[j + 1] - table[j]) / (factor - 1) for j in range(len(table) - 1)]
    best = table[0]
    err = spectral_norm(best - prev) if richardson_levels else 0.0
    return GeneratorEstimate(best, "finite_difference", err, step, richardson_levels)


@dataclass
class ContractionReport:
    samples: list = field(default_factory=list)  # (t, norm, passed)

    @property
    def passed(self):
        return all(ok for _, _, ok in self.samples)

    @property
    def max_norm(self):
        return max((nrm for _, nrm, _ in self.samples), default=0.0)


def check_contraction_family(family, t_samples=(1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0)):
    """Check ``||V_t|| <= 1 + 1e-10`` at each sample time."""
    report = ContractionReport()
    for t in t_samples:
        nrm = spectral_norm(family.evaluate(t))
        report.samples.append((float(t), nrm, nrm <= 1.0 + CONTRACTION_TOL))
    return report


@dataclass
class StabilityReport:
    M: float
    omega: float
    entries: list = field(default_factory=list)  # (t, n or index, norm, ratio)

    @property
    def max_ratio(self):
        return max((r for *_, r in self.entries), default=0.0)

    @property
    def passed(self):
        return self.max_ratio <= 1.0 + CONTRACTION_TOL


def check_stability(source, M=1.0, omega=0.0, t_samples=(0.5, 1.0, 2.0), projector=None,
                    n_values=(1, 4, 16, 64)):
    """Check the uniform bound ``||T_n(t)|| <= M e^{omega t}``.

    ``source`` is either a list of generator matrices ``A_i`` (checking
    ``e^{t A_i}``) or a :class:`OneParameterFamily`. For a family the
    semigroups are ``e^{t P(A_n)}`` with ``A_n = (V_{t/n} - 1)/(t/n)``, which
    for contraction families and a contractive ``P`` obey the bound with
    ``M = 1, omega = 0``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if any(t < 0 for t in t_samples):
        raise NegativeTime("sample times must be >= 0")
    report = StabilityReport(M, omega)
    if isinstance(source, OneParameterFamily):
        if projector is None:
            projector = ergodic_projector(identity_map(source.dim))
        eye = np.eye(source.dim)
        for t in t_samples:
            if t == 0:
                continue
            for n in n_values:
                s = t / n
                a_n = (source.evaluate(s) - eye) / s
                nrm = spectral_norm(expm(projector(a_n), t))
                report.entries.append((float(t), n, nrm, nrm / (M * np.exp(omega * t))))
    else:
        for i, a in enumerate(source):
            for t in t_samples:
                nrm = spectral_norm(expm(a, t))
                report.entries.append((float(t), i, nrm, nrm / (M * np.exp(omega * t))))
    return report
