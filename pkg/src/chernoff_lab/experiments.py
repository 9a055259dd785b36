"""
Batch convergence experiments: JSON configs in, CSV reports out.

A scenario pairs a product formula with its limit ``expm(A, t)``. For each
requested ``n`` (or schedule pair ``(k_n, t_n)``) one row records the
spectral-norm error, the worst error over 10 fixed random unit vectors, an
optional bound value and the wall time. Rows are independent, so they can
be computed in a process pool; results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .errors import ChernoffLabError, ParseError, ValidationError
from .linalg import (
    dagger,
    expm,
    random_contraction,
    random_contraction_generator,
    random_unit_vector,
    random_unitary,
    spectral_norm,
)
from .product import (
    chernoff_bound_check,
    cyclic_product,
    decoupling_product,
    iterated_product,
    lemma4_bound_check,
    telescoping_diff_check,
    two_unitary_product,
    zeno_product,
)
from .semigroup import BlockMixFamily, ExpFamily, TwoUnitaryFamily, projected_generator
from .superop import (
    BlockSignFlip,
    UnitaryConjugation,
    cesaro_mean_projector,
    dft_matrix,
    ergodic_projector,
    exact_pinching_projector,
    identity_map,
)

logger = logging.getLogger(__name__)

__all__ = [
    "SCENARIOS",
    "CSV_HEADER",
    "ExperimentConfig",
    "Row",
    "ConvergenceReport",
    "BoundsSummary",
    "load_config",
    "parse_config",
    "run_scenario",
    "run_bounds_suite",
    "emit_csv",
    "format_csv",
    "build_scenario",
]

SCENARIOS = {
    "example1-dft": "conjugation by the unitary DFT matrix (F^4 = 1) on a position-multiplication family; "
                    "finite analogue of the Fourier-transform example",
    "example2-blocks": "sign flip of off-diagonal blocks acting on a mixed pair of semigroups on C^d0 + C^d0",
    "example3-two-unitaries": "alternating two unitaries u1, u2 with u1 u2 != 1, corrected by (u^dag)^(n/2)",
    "decoupling": "(u e^{t/n x})^n (u^dag)^n with u = diag(exp(2 pi i j phi)), phi the golden ratio conjugate",
    "cyclic": "(u1 e^{t/n x} ... u4 e^{t/n x})^(n/4) with u1 u2 u3 u4 = 1",
    "zeno": "(p e^{t/n x})^n against expm(p x p, t) p; non-unital, outside the unital product setting",
    "bounds-suite": "seeded sweeps of the sqrt(n) Chernoff bound, the O(1/n) ordered-product bound "
                    "and the telescoping difference bound",
    "custom": "iterated product for e^{t x} under a chosen map (config field 'map')",
}

CUSTOM_MAPS = ("random-unitary", "dft", "block-sign-flip", "identity")

CSV_HEADER = "n,t_n,norm_error,per_vector_max_error,bound_value,wall_time_s"

MAX_DIM = 64
N_PROBE_VECTORS = 10

_DEFAULTS = {
    "dim": 2,
    "seed": 42,
    "t": 1.0,
    "n_values": [16, 64, 256, 1024, 4096],
    "tolerances": {"cesaro_tol": 1e-8, "truncation_tol": 1e-12, "cluster_tol": 1e-8},
    "output_path": None,
    "trials": 100,
    "map": "random-unitary",
    "timing": True,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    ``n_values`` holds plain integers, or ``(k_n, t_n)`` pairs for a
    schedule. ``trials`` (bounds-suite), ``map`` (custom) and ``timing``
    are optional extras with defaults.
    """

    scenario: str
    dim: int = 2
    seed: int = 42
    t: float = 1.0
    n_values: tuple = (16, 64, 256, 1024, 4096)
    cesaro_tol: float = 1e-8
    truncation_tol: float = 1e-12
    cluster_tol: float = 1e-8
    output_path: str = ""
    trials: int = 100
    map: str = "random-unitary"
    timing: bool = True

    @property
    def is_schedule(self):
        return bool(self.n_values) and isinstance(self.n_values[0], tuple)

    def n_of(self, entry):
        return entry[0] if isinstance(entry, tuple) else entry


def _field_error(name, msg):
    return ParseError(f"field {name!r}: {msg}")


def parse_config(data):
    """Build an :class:`ExperimentConfig` from a decoded JSON object."""
    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object")
    known = {"scenario", *_DEFAULTS}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ParseError(f"unknown field(s) {unknown}; valid fields: {sorted(known)}")
    if "scenario" not in data:
        raise _field_error("scenario", f"missing; valid scenarios: {', '.join(SCENARIOS)}")
    scenario = data["scenario"]
    if scenario not in SCENARIOS:
        raise _field_error("scenario", f"unknown scenario {scenario!r}; valid scenarios: {', '.join(SCENARIOS)}")

    def get(name, kind):
        value = data.get(name, _DEFAULTS[name])
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            raise _field_error(name, f"expected {kind.__name__}, got {type(value).__name__}")
        return value

    dim = get("dim", int)
    seed = get("seed", int)
    t = get("t", float)
    trials = get("trials", int)
    map_name = get("map", str)
    timing = get("timing", bool)
    raw_n = data.get("n_values", _DEFAULTS["n_values"])
    if not isinstance(raw_n, list):
        raise _field_error("n_values", "expected a list")
    entries = []
    for i, item in enumerate(raw_n):
        if isinstance(item, int) and not isinstance(item, bool):
            entries.append(item)
        elif (isinstance(item, list) and len(item) == 2 and isinstance(item[0], int)
              and isinstance(item[1], (int, float))):
            entries.append((item[0], float(item[1])))
        else:
            raise _field_error(f"n_values[{i}]", "expected an integer or a [k_n, t_n] pair")
    tol = dict(_DEFAULTS["tolerances"])
    raw_tol = data.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        raise _field_error("tolerances", "expected an object")
    for key, value in raw_tol.items():
        if key not in tol:
            raise _field_error(f"tolerances.{key}", f"unknown tolerance; valid: {sorted(tol)}")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise _field_error(f"tolerances.{key}", "expected a number")
        tol[key] = float(value)
    output_path = data.get("output_path") or f"{scenario}.csv"
    if not isinstance(output_path, str):
        raise _field_error("output_path", "expected a string")

    config = ExperimentConfig(
        scenario=scenario, dim=dim, seed=seed, t=t, n_values=tuple(entries),
        output_path=output_path, trials=trials, map=map_name, timing=timing, **tol,
    )
    validate_config(config)
    return config


def validate_config(config):
    """Raise :class:`ValidationError` naming the first violated invariant."""
    entries = config.n_values
    if not entries:
        raise ValidationError("n_values must be nonempty")
    if len({type(e) for e in entries}) > 1:
        raise ValidationError("n_values must be all integers or all [k_n, t_n] pairs")
    ns = [config.n_of(e) for e in entries]
    if any(n < 1 for n in ns):
        raise ValidationError("n_values must be positive")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValidationError("n_values must be strictly increasing")
    if config.is_schedule:
        if any(s <= 0 for _, s in entries):
            raise ValidationError("schedule t_n must be positive")
        if config.scenario not in ("example1-dft", "example2-blocks", "custom", "decoupling"):
            raise ValidationError(f"schedule pairs are not supported for scenario {config.scenario!r}")
    full_dim = 2 * config.dim if config.scenario == "example2-blocks" else config.dim
    if config.dim < 1 or full_dim > MAX_DIM:
        raise ValidationError(f"dim must satisfy 1 <= d and total dimension <= {MAX_DIM}")
    if not (config.t > 0 and np.isfinite(config.t)):
        raise ValidationError("t must be positive and finite")
    if config.scenario == "example3-two-unitaries" and any(n % 2 for n in ns):
        raise ValidationError("example3-two-unitaries needs even n_values")
    if config.scenario == "cyclic" and any(n % 4 for n in ns):
        raise ValidationError("cyclic needs n_values divisible by 4")
    if config.scenario == "custom" and config.map not in CUSTOM_MAPS:
        raise ValidationError(f"map must be one of {CUSTOM_MAPS}")
    if config.scenario == "custom" and config.map == "block-sign-flip" and config.dim % 2:
        raise ValidationError("block-sign-flip needs an even dim")
    if config.trials < 1:
        raise ValidationError("trials must be >= 1")
    for name in ("cesaro_tol", "truncation_tol", "cluster_tol"):
        if getattr(config, name) <= 0:
            raise ValidationError(f"{name} must be positive")


def load_config(path):
    """Read and validate a JSON config file.

    Raises
    ------
    ParseError
        Malformed JSON (with line and column) or bad field types/names.
    ValidationError
        Well-formed config violating an invariant.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)


# --------------------------------------------------------------------------
# Scenarios
# --------------------------------------------------------------------------


@dataclass
class Scenario:
    """A product evaluator with its limit matrix and header notes."""

    dim: int
    product: object  # callable (n, t_n) -> matrix
    limit: np.ndarray
    notes: list = field(default_factory=list)


def _position_generator(d):
    # discrete position grid whose DFT conjugate is the matching momentum grid
    j = np.arange(d)
    signed = np.where(j < (d + 1) // 2, j, j - d)
    grid = signed * np.sqrt(2 * np.pi / d)
    return -1j * np.diag(grid)


def _pair_scenario(pi, family, projector, t, notes=()):
    gen = projected_generator(family, projector)

    def product(n, s):
        return iterated_product(pi, family, s * n, n)

    return Scenario(pi.dim, product, gen.semigroup(t), list(notes))


def build_scenario(config):
    """Construct the product evaluator and oracle limit for ``config``."""
    d, seed, t = config.dim, config.seed, config.t
    name = config.scenario
    if name == "example1-dft":
        pi = UnitaryConjugation(dft_matrix(d))
        proj = cesaro_mean_projector(pi, 4)
        x = _position_generator(d)
        f4 = np.linalg.matrix_power(dft_matrix(d), 4)
        px = proj(x)
        notes = [
            f"||F^4 - 1|| = {spectral_norm(f4 - np.eye(d)):.3e}",
            f"4-term mean projector residual = {proj.residual:.3e}",
            f"||P(x)|| = {spectral_norm(px):.6e}, ||x|| = {spectral_norm(x):.6e}",
            "on L^2(R) the projected family is trivial (P(V_t) = 1, limit = identity); on C^d the "
            "4-term mean is computed numerically instead: P(x) vanishes for odd d and is nonzero "
            "for even d, where the Nyquist grid point has no parity partner",
        ]
        return _pair_scenario(pi, ExpFamily(x), proj, t, notes)
    if name == "example2-blocks":
        x1 = random_contraction_generator(d, seed)
        x2 = random_contraction_generator(d, seed + 1)
        pi = BlockSignFlip(2 * d)
        return _pair_scenario(pi, BlockMixFamily(x1, x2), ergodic_projector(pi), t)
    if name == "custom":
        x = random_contraction_generator(d, seed)
        if config.map == "random-unitary":
            pi = UnitaryConjugation(random_unitary(d, seed + 1))
        elif config.map == "dft":
            pi = UnitaryConjugation(dft_matrix(d))
        elif config.map == "block-sign-flip":
            pi = BlockSignFlip(d)
        else:
            pi = identity_map(d)
        proj = ergodic_projector(pi, tol=config.cesaro_tol, cluster_tol=config.cluster_tol)
        return _pair_scenario(pi, ExpFamily(x), proj, t, [f"map = {config.map}"])
    if name == "decoupling":
        phi = (np.sqrt(5.0) - 1.0) / 2.0
        u = np.diag(np.exp(2j * np.pi * phi * np.arange(d)))
        x = random_contraction_generator(d, seed)
        proj = exact_pinching_projector(u, config.cluster_tol)
        if config.is_schedule:
            return _pair_scenario(UnitaryConjugation(u), ExpFamily(x), proj, t)

        def product(n, s):
            return decoupling_product(u, x, s * n, n)

        return Scenario(d, product, expm(proj(x), t), [f"phi = {phi:.17g}"])
    if name == "example3-two-unitaries":
        u1 = random_unitary(d, seed + 1)
        u2 = random_unitary(d, seed + 2)
        x = random_contraction_generator(d, seed)
        fam = TwoUnitaryFamily(u1, u2, x)
        proj = exact_pinching_projector(fam.u, config.cluster_tol)
        limit = projected_generator(fam, proj).semigroup(t)

        def product(n, s):
            return two_unitary_product(u1, u2, x, s * n, n)[1]

        return Scenario(d, product, limit)
    if name == "cyclic":
        us = [random_unitary(d, seed + i) for i in (1, 2, 3)]
        us.append(dagger(us[0] @ us[1] @ us[2]))
        x = random_contraction_generator(d, seed)
        w = np.eye(d, dtype=np.complex128)
        mean = np.zeros_like(w)
        for u in us:
            w = w @ u
            mean = mean + w @ x @ dagger(w)

        def product(n, s):
            return cyclic_product(us, x, s * n, n)

        return Scenario(d, product, expm(mean / 4, t), ["limit generator = mean of w_j x w_j^dag, w_j = u_1...u_j"])
    if name == "zeno":
        rank = max(1, d // 2)
        v = random_unitary(d, seed + 1)[:, :rank]
        p = v @ dagger(v)
        x = random_contraction_generator(d, seed)

        def product(n, s):
            return zeno_product(p, x, s * n, n)

        return Scenario(d, product, expm(p @ x @ p, t) @ p, [f"projector rank = {rank}", "non-unital map"])
    raise ValidationError(f"scenario {name!r} has no product evaluator")


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    n: int
    t_n: float
    norm_error: float | None = None
    per_vector_max_error: float | None = None
    bound_value: float | None = None
    wall_time_s: float | None = None
    failed: bool = False
    message: str = ""


@dataclass
class ConvergenceReport:
    metadata: dict
    rows: list = field(default_factory=list)
    violations: int = 0

    def errors(self):
        return [r.norm_error for r in self.rows]

    def summary(self):
        lines = [f"scenario {self.metadata.get('scenario')}  dim={self.metadata.get('dim')}  "
                 f"seed={self.metadata.get('seed')}  t={self.metadata.get('t')}"]
        for note in self.metadata.get("notes", []):
            lines.append(f"  note: {note}")
        lines.append(f"  {'n':>8} {'t_n':>12} {'norm_error':>12} {'vec_error':>12} {'bound':>12}")
        for r in self.rows:
            if r.failed:
                lines.append(f"  {r.n:>8} FAILED: {r.message}")
                continue
            bound = "" if r.bound_value is None else f"{r.bound_value:12.4e}"
            lines.append(f"  {r.n:>8} {r.t_n:12.4e} {r.norm_error:12.4e} {r.per_vector_max_error:12.4e} {bound:>12}")
        if self.metadata.get("scenario") == "bounds-suite" or self.violations:
            lines.append(f"  bound violations: {self.violations}")
        return "\n".join(lines)


def _probe_vectors(config, d):
    return [random_unit_vector(d, config.seed * 1000 + 7 + i) for i in range(N_PROBE_VECTORS)]


def _compute_row(config, entry):
    n = config.n_of(entry)
    t_n = entry[1] if isinstance(entry, tuple) else config.t / n
    start = time.perf_counter()
    try:
        scen = build_scenario(config)
        diff = scen.product(n, t_n) - scen.limit
        norm_error = spectral_norm(diff)
        vec_error = max(float(np.linalg.norm(diff @ v)) for v in _probe_vectors(config, scen.dim))
        if not (np.isfinite(norm_error) and np.isfinite(vec_error)):
            raise ChernoffLabError("non-finite error")
    except ChernoffLabError as exc:
        logger.warning("row n=%d failed: %s", n, exc)
        return Row(n, t_n, failed=True, message=f"{type(exc).__name__}: {exc}")
    wall = time.perf_counter() - start if config.timing else None
    return Row(n, t_n, norm_error, vec_error, None, wall)


@dataclass
class BoundsSummary:
    chernoff_trials: int = 0
    chernoff_violations: int = 0
    ordered_trials: int = 0
    ordered_violations: int = 0
    telescoping_trials: int = 0
    telescoping_violations: int = 0
    worst: dict = field(default_factory=dict)  # n -> (ratio, lhs, bound)

    @property
    def violations(self):
        return self.chernoff_violations + self.ordered_violations + self.telescoping_violations


def _ordered_instance(seed, trial):
    rng = np.random.default_rng([seed, trial, 4])
    d = 2 * int(rng.integers(1, 4))
    if trial % 2:
        pi = BlockSignFlip(d)
    else:
        pi = UnitaryConjugation(random_unitary(d, int(rng.integers(2**31))))
    w = random_contraction(d, int(rng.integers(2**31)))
    return pi, w - np.eye(d)


def run_bounds_suite(seed=42, trials=100, t=1.0, n_values=(4, 16, 64, 256)):
    """Seeded sweeps of the three bound checks; counts violations."""
    out = BoundsSummary()
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial, 2])
        d = int(rng.integers(1, 9))
        S = random_contraction(d, int(rng.integers(2**31)))
        v = random_unit_vector(d, int(rng.integers(2**31)))
        n = int(rng.integers(0, 65))
        chk = chernoff_bound_check(S, v, n)
        out.chernoff_trials += 1
        if not chk.holds(1e-9):
            out.chernoff_violations += 1
            logger.warning("sqrt(n) bound violated: trial %d, %s", trial, chk)

        pi, x = _ordered_instance(seed, trial)
        for n in n_values:
            chk = lemma4_bound_check(pi, x, t, n)
            out.ordered_trials += 1
            if not chk.holds(10.0):
                out.ordered_violations += 1
                logger.warning("ordered-product bound violated: trial %d n %d, %s", trial, n, chk)
            ratio = chk.lhs / chk.bound if chk.bound > 0 else 0.0
            if ratio >= out.worst.get(n, (-1.0,))[0]:
                out.worst[n] = (ratio, chk.lhs, chk.bound)

        rng = np.random.default_rng([seed, trial, 5])
        eps = float(rng.uniform(1e-3, 1.0))
        w1 = random_contraction(pi.dim, int(rng.integers(2**31)))
        w2 = random_contraction(pi.dim, int(rng.integers(2**31)))
        x1 = w1 - np.eye(pi.dim)
        x2 = (1 - eps) * w1 + eps * w2 - np.eye(pi.dim)
        n = int(rng.integers(1, 65))
        chk = telescoping_diff_check(pi, x1, x2, min(t, n), n)
        out.telescoping_trials += 1
        if not chk.holds(1e-9):
            out.telescoping_violations += 1
            logger.warning("telescoping bound violated: trial %d, %s", trial, chk)
    return out


def _metadata(config):
    return {
        "scenario": config.scenario,
        "dim": config.dim,
        "seed": config.seed,
        "t": config.t,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "notes": [],
    }


def run_scenario(config, workers=1):
    """Run every row of ``config``; rows come back sorted by ``n``.

    Library errors inside a row mark that row failed instead of aborting
    the sweep.
    """
    meta = _metadata(config)
    if config.scenario == "bounds-suite":
        start = time.perf_counter()
        ns = tuple(config.n_of(e) for e in config.n_values)
        try:
            summary = run_bounds_suite(config.seed, config.trials, config.t, ns)
        except ChernoffLabError as exc:
            report = ConvergenceReport(meta)
            report.rows = [Row(n, config.t / n, failed=True, message=str(exc)) for n in ns]
            return report
        wall = time.perf_counter() - start if config.timing else None
        meta["notes"] = [
            f"chernoff sqrt(n) bound: {summary.chernoff_violations}/{summary.chernoff_trials} violations",
            f"ordered-product 1/n bound: {summary.ordered_violations}/{summary.ordered_trials} violations",
            f"telescoping bound: {summary.telescoping_violations}/{summary.telescoping_trials} violations",
            "rows: instance with the largest lhs/bound ratio per n (norm_error = lhs)",
        ]
        rows = []
        for n in ns:
            _, lhs, bound = summary.worst[n]
            rows.append(Row(n, config.t / n, lhs, None, bound, wall))
        return ConvergenceReport(meta, rows, summary.violations)

    try:
        meta["notes"] = build_scenario(config).notes
    except ChernoffLabError as exc:
        meta["notes"] = [f"scenario construction failed: {exc}"]
    entries = list(config.n_values)
    if workers and workers > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(entries))) as pool:
            rows = list(pool.map(_compute_row, [config] * len(entries), entries))
    else:
        rows = [_compute_row(config, e) for e in entries]
    rows.sort(key=lambda r: r.n)
    return ConvergenceReport(meta, rows)


def _fmt(value):
    return "" if value is None else f"{value:.17e}"


def format_csv(report):
    """CSV text: ``#`` metadata comments, the fixed header, one line per row."""
    buf = io.StringIO()
    meta = report.metadata
    for key in ("scenario", "dim", "seed", "t", "timestamp", "version"):
        if key in meta:
            buf.write(f"# {key}: {meta[key]}\n")
    for note in meta.get("notes", []):
        buf.write(f"# note: {note}\n")
    if meta.get("scenario") == "bounds-suite":
        buf.write(f"# violations: {report.violations}\n")
    for r in report.rows:
        if r.failed:
            buf.write(f"# failed n={r.n}: {r.message}\n")
    buf.write(CSV_HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for r in report.rows:
        writer.writerow([r.n, _fmt(r.t_n), _fmt(r.norm_error), _fmt(r.per_vector_max_error),
                         _fmt(r.bound_value), _fmt(r.wall_time_s)])
    return buf.getvalue()


def emit_csv(report, path):
    """Write :func:`format_csv` output to ``path`` (``OSError`` propagates)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(report))


def data_lines(csv_text):
    """Non-comment, non-header lines of a CSV produced by :func:`format_csv`."""
    return [ln for ln in csv_text.splitlines() if ln and not ln.startswith("#") and ln != CSV_HEADER]


def with_overrides(config, **kw):
    new = replace(config, **kw)
    validate_config(new)
    return new
