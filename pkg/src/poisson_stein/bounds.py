"""Kolmogorov-distance bounds for Poisson functionals.

Every report stores the components of a bound together with the rule that
assembles them, so ``bound_value`` can always be recomputed from the
recorded fields. Bounds whose universal constant is not known are reported
with ``constant_mode = "unit"``, that is with the constant set to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chaos import ChaosExpansion, Kernel, check_degeneracy, multiple_integral_batch, partial_integrals_batch
from .contraction import contract, contraction_norm, symmetrize
from .diagnostics import kolmogorov_distance
from .errors import DomainError, NotDegenerateError, NotNormalizedError
from .measure_space import ControlMeasure, IntegrationSpec, l2_norm
from .point_process import sample_batch
from .streams import map_blocks

__all__ = [
    "BoundReport",
    "Theorem31Terms",
    "TermEstimate",
    "single_kernel_indices",
    "cross_kernel_indices",
    "multiple_integral_bound",
    "dejong_bound",
    "finite_expansion_bound",
    "FourthMoment",
    "fourth_moment_from_contractions",
    "fourth_moment_gap",
    "sample_fourth_moment",
    "theorem31_terms_mc",
    "default_x_grid",
    "MIN_REPS",
    "empirical_distance_with_se",
]

MIN_REPS = 100
CS_CONSTANT = math.sqrt(2.0 * math.pi) / 8.0


def _norm_key(key) -> str:
    i, j, r, l = key
    return f"contraction_norm[i={i},j={j},r={r},l={l}]"


def _with_powers(values) -> float:
    vals = list(values)
    return max([v for v in vals] + [v ** 1.5 for v in vals], default=0.0)


@dataclass
class BoundReport:
    """Components and assembled value of a contraction bound.

    ``contraction_norms`` maps ``(i, j, r, l)`` (1-based term indices) to
    ``||f_i *_r^l f_j||``. Entries with ``i == j`` enter the first maximum,
    entries with ``i < j`` the cross maximum.
    """

    variance_gap: float
    contraction_norms: dict
    bound_value: float = float("nan")
    constant_mode: str = "unit"
    kind: str = "multiple_integral"
    term_estimates: Optional[dict] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.contraction_norms.values()):
            raise DomainError("contraction norms must be nonnegative")
        if math.isnan(self.bound_value):
            self.bound_value = self.recompute()

    def same_max(self) -> float:
        return _with_powers(v for (i, j, _, _), v in self.contraction_norms.items() if i == j)

    def cross_max(self) -> float:
        return _with_powers(v for (i, j, _, _), v in self.contraction_norms.items() if i != j)

    def recompute(self) -> float:
        """``max(|1 - var|, same_max + cross_max)`` with unit constant."""
        return float(max(self.variance_gap, self.same_max() + self.cross_max()))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "variance_gap": self.variance_gap}
        for key in sorted(self.contraction_norms):
            out[_norm_key(key)] = self.contraction_norms[key]
        out["bound_value"] = self.bound_value
        out["constant_mode"] = self.constant_mode
        if self.term_estimates is not None:
            out["term_estimates"] = self.term_estimates
        out.update(self.extras)
        return out


def single_kernel_indices(q: int) -> list[tuple[int, int]]:
    """``(q, 0)`` plus ``r in 1..q``, ``l in 1..min(r, q - 1)``."""
    out = [(q, 0)]
    out += [(r, l) for r in range(1, q + 1) for l in range(1, min(r, q - 1) + 1)]
    return out


def cross_kernel_indices(qi: int) -> list[tuple[int, int]]:
    """``r in 1..q_i`` and ``l in 1..r``."""
    return [(r, l) for r in range(1, qi + 1) for l in range(1, r + 1)]


def multiple_integral_bound(f: Kernel, q: int, control: ControlMeasure,
                            spec: IntegrationSpec = IntegrationSpec()) -> BoundReport:
    """Contraction bound for ``F = I_q(f)``.

    ``bound_value = max(|1 - q! ||f||^2|, ||f *_r^l f||, ||f *_r^l f||^{3/2})``
    over the admissible ``(r, l)``.
    """
    if q not in (2, 3) or f.arity != q:
        raise ValueError("multiple_integral_bound needs q in {2, 3} and a kernel of arity q")
    var = math.factorial(q) * l2_norm(f, control, spec) ** 2
    norms = {(1, 1, r, l): contraction_norm(f, f, (r, l), control, spec) for r, l in single_kernel_indices(q)}
    return BoundReport(abs(1.0 - var), norms, kind="multiple_integral", extras={"variance": var})


def _grid(control: ControlMeasure, size: int = 33) -> np.ndarray:
    axes = [np.linspace(lo, hi, size) for lo, hi in zip(control.lower, control.upper)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, control.dim)


def dejong_bound(h: Kernel, control: ControlMeasure, spec: IntegrationSpec = IntegrationSpec(),
                 degeneracy_tol: Optional[float] = None) -> BoundReport:
    """Bound for the normalised degenerate U-statistic ``(U - EU) / sd(U)``.

    The kernel is normalised as ``f = h / sqrt(var U)`` with
    ``var U = 2 ||h||^2``; the components are ``||f *_2^0 f||``,
    ``||f *_1^1 f||``, ``||f *_2^1 f||`` and their 3/2 powers.

    Raises
    ------
    NotDegenerateError
        If ``h`` is not completely degenerate on a grid of the support.
    DomainError
        If ``h`` has zero norm.
    """
    if h.arity != 2:
        raise ValueError("the de Jong setting uses order-2 kernels")
    if not check_degeneracy(h, control, _grid(control), degeneracy_tol, spec):
        raise NotDegenerateError(f"{h.label} is not completely degenerate")
    var = 2.0 * l2_norm(h, control, spec) ** 2
    if not var > 0:
        raise DomainError("kernel has zero variance")
    f = h.scaled(1.0 / math.sqrt(var))
    norms = {(1, 1, r, l): contraction_norm(f, f, (r, l), control, spec) for r, l in single_kernel_indices(2)}
    gap = abs(1.0 - 2.0 * l2_norm(f, control, spec) ** 2)
    return BoundReport(gap, norms, kind="dejong", extras={"variance_U": var})


def finite_expansion_bound(expansion: ChaosExpansion, control: ControlMeasure,
                           spec: IntegrationSpec = IntegrationSpec(), include_cross: bool = True) -> BoundReport:
    """Bound for ``F = sum_i I_{q_i}(f_i)``: ``max(|1 - var F|, same_max + cross_max)``."""
    terms = expansion.terms
    var = sum(math.factorial(q) * l2_norm(f, control, spec) ** 2 for q, f in terms)
    norms = {}
    for i, (q, f) in enumerate(terms, start=1):
        for r, l in single_kernel_indices(q):
            norms[(i, i, r, l)] = contraction_norm(f, f, (r, l), control, spec)
    if include_cross:
        for i, (qi, fi) in enumerate(terms, start=1):
            for j, (qj, fj) in enumerate(terms[i:], start=i + 1):
                for r, l in cross_kernel_indices(min(qi, qj)):
                    norms[(i, j, r, l)] = contraction_norm(fi, fj, (r, l), control, spec)
    return BoundReport(abs(1.0 - var), norms, kind="finite_expansion", extras={"variance": var})


@dataclass(frozen=True)
class FourthMoment:
    """Kernel-route ``E F^4`` for ``F = I_2(f)`` and its five addends."""

    value: float
    addends: dict


def fourth_moment_from_contractions(f: Kernel, control: ControlMeasure, spec: IntegrationSpec = IntegrationSpec(),
                                    tol: float = 1e-6) -> FourthMoment:
    """``E I_2(f)^4`` from contraction norms.

    ``16 * 3! ||f sym*_1^0 f||^2 + 16 ||f *_2^1 f||^2 + 16 ||f *_1^1 f||^2
    + 2 ||4 f *_1^1 f + 2 f^2||^2 + 3 (2 ||f||^2)^2``.

    Raises
    ------
    NotNormalizedError
        If ``|2 ||f||^2 - 1| > tol``.
    """
    if f.arity != 2:
        raise ValueError("the fourth-moment identity is for order-2 kernels")
    var = 2.0 * l2_norm(f, control, spec) ** 2
    if abs(var - 1.0) > tol:
        raise NotNormalizedError(f"2||f||^2 = {var:.6g}, expected 1")
    sym10 = symmetrize(contract(f, f, (1, 0), control, spec))
    c11 = contract(f, f, (1, 1), control, spec)
    mixed = Kernel(2, lambda x, y: 4.0 * c11(x, y) + 2.0 * f(x, y) ** 2, label="4 f*11f + 2 f^2")
    addends = {
        "sym_1_0": 16.0 * 6.0 * l2_norm(sym10, control, spec) ** 2,
        "2_1": 16.0 * contraction_norm(f, f, (2, 1), control, spec) ** 2,
        "1_1": 16.0 * l2_norm(c11, control, spec) ** 2,
        "mixed": 2.0 * l2_norm(mixed, control, spec) ** 2,
        "gaussian": 3.0 * var ** 2,
    }
    return FourthMoment(float(sum(addends.values())), addends)


def sample_fourth_moment(values) -> tuple[float, float]:
    """Fourth moment of the standardised sample and its standard error."""
    x = np.asarray(values, dtype=float)
    z = (x - x.mean()) / x.std()
    z4 = z ** 4
    return float(z4.mean()), float(z4.std(ddof=1) / math.sqrt(z4.size))


def fourth_moment_gap(fourth_moment=None, samples=None) -> float:
    """``sqrt(max(E F^4 - 3, 0))`` from a kernel-route value or from a sample."""
    if (fourth_moment is None) == (samples is None):
        raise ValueError("pass exactly one of fourth_moment or samples")
    if samples is not None:
        fourth_moment = sample_fourth_moment(samples)[0]
    if isinstance(fourth_moment, FourthMoment):
        fourth_moment = fourth_moment.value
    return math.sqrt(max(float(fourth_moment) - 3.0, 0.0))


# -- Malliavin-Stein terms by Monte Carlo ------------------------------------------


class TermEstimate(tuple):
    """``(value, stderr)``."""

    def __new__(cls, value, stderr):
        return super().__new__(cls, (float(value), float(stderr)))

    @property
    def value(self) -> float:
        return self[0]

    @property
    def stderr(self) -> float:
        return self[1]


@dataclass
class Theorem31Terms:
    """Monte Carlo estimates of the four Malliavin-Stein terms.

    ``A1 = E|1 - <DF, -DL^{-1}F>|``, ``B2 = E<(DF)^2, |DL^{-1}F|>``,
    ``B3 = E<(DF)^2, |F DL^{-1}F|>``, ``A2 = (E<(DF)^2, (DL^{-1}F)^2>)^{1/2}``,
    ``A3 = (E||DF||^4)^{1/4} ((E F^4)^{1/4} + 1)`` and ``A4`` the supremum
    over ``x_grid`` of ``E<DF D1(F > x), |DL^{-1}F|>``.
    """

    A1: TermEstimate
    A2: TermEstimate
    A3: TermEstimate
    A4: TermEstimate
    B2: TermEstimate
    B3: TermEstimate
    x_grid: np.ndarray
    a4_argmax: float
    reps: int
    z_samples: int
    seed: int
    insufficient_replication: bool
    samples: np.ndarray = field(repr=False, default=None)

    @property
    def full_bound(self) -> TermEstimate:
        """``A1 + sqrt(2 pi)/8 B2 + B3/2 + A4``."""
        v = self.A1.value + CS_CONSTANT * self.B2.value + 0.5 * self.B3.value + self.A4.value
        se = math.sqrt(self.A1.stderr ** 2 + (CS_CONSTANT * self.B2.stderr) ** 2
                       + (0.5 * self.B3.stderr) ** 2 + self.A4.stderr ** 2)
        return TermEstimate(v, se)

    @property
    def corollary_bound(self) -> TermEstimate:
        """``A1 + A2 A3 / 2 + A4``."""
        prod = self.A2.value * self.A3.value
        se_prod = math.hypot(self.A2.stderr * self.A3.value, self.A3.stderr * self.A2.value)
        v = self.A1.value + 0.5 * prod + self.A4.value
        return TermEstimate(v, math.sqrt(self.A1.stderr ** 2 + (0.5 * se_prod) ** 2 + self.A4.stderr ** 2))

    def to_dict(self) -> dict:
        out = {}
        for name in ("A1", "A2", "A3", "A4", "B2", "B3"):
            est = getattr(self, name)
            out[name] = est.value
            out[f"{name}_stderr"] = est.stderr
        out["bound_theorem"] = self.full_bound.value
        out["bound_theorem_stderr"] = self.full_bound.stderr
        out["bound_corollary"] = self.corollary_bound.value
        out["bound_corollary_stderr"] = self.corollary_bound.stderr
        out["x_grid"] = [float(x) for x in self.x_grid]
        out["a4_argmax"] = self.a4_argmax
        out["reps"] = self.reps
        out["z_samples"] = self.z_samples
        out["seed"] = self.seed
        out["insufficient_replication"] = self.insufficient_replication
        return out


def default_x_grid() -> np.ndarray:
    """41 equally spaced points on ``[-4, 4]``."""
    return np.linspace(-4.0, 4.0, 41)


_QUANTILE_LEVELS = np.linspace(0.02, 0.98, 49)


def _mean_se(v: np.ndarray) -> TermEstimate:
    return TermEstimate(v.mean(), v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else 0.0)


def _root(est: TermEstimate, p: float) -> TermEstimate:
    """``est ** (1/p)`` with a delta-method standard error."""
    v = max(est.value, 0.0)
    if v == 0.0:
        return TermEstimate(0.0, 0.0)
    return TermEstimate(v ** (1.0 / p), est.stderr * v ** (1.0 / p - 1.0) / p)


def theorem31_terms_mc(expansion: ChaosExpansion, control: ControlMeasure, reps: int, seed: int,
                       x_grid: Optional[Sequence[float]] = None, z_samples: int = 256,
                       spec: IntegrationSpec = IntegrationSpec(), threads: Optional[int] = None,
                       block: int = 1024) -> Theorem31Terms:
    """Monte Carlo estimates of the Malliavin-Stein bound terms for a centred expansion.

    For every replicate ``eta`` the add-one cost ``D_z F = sum q_i I_{q_i-1}(f_i(z, .))``
    and ``-D_z L^{-1} F = sum I_{q_i-1}(f_i(z, .))`` are evaluated pathwise at
    ``z_samples`` points drawn from ``p``; inner products against ``mu_n``
    are estimated by ``n`` times the sample mean over these points.

    Parameters
    ----------
    x_grid : sequence of float, optional
        Thresholds for the ``A4`` supremum. Defaults to 41 points on
        ``[-4, 4]``; the empirical 2%..98% quantiles of ``F`` are always
        added and the union is recorded.
    """
    F_terms = expansion.centered()
    n = control.intensity
    M = int(z_samples)

    def run(rng, count):
        batch = sample_batch(control, count, rng)
        z = control.sample_points(rng, count * M).reshape(count, M, control.dim)
        F = np.zeros(count)
        DF = np.zeros((count, M))
        G = np.zeros((count, M))
        for q, f in F_terms.terms:
            F += multiple_integral_batch(f, q, batch, control, spec)
            part = partial_integrals_batch(f, q, batch, z, spec)
            DF += q * part
            G += part
        return np.concatenate([F[:, None], DF, G], axis=1)

    out = map_blocks(run, reps, seed, threads, block)
    F, DF, G = out[:, 0], out[:, 1:M + 1], out[:, M + 1:]
    absG = np.abs(G)
    DF2 = DF * DF
    inner = n * (DF * G).mean(axis=1)
    A1 = _mean_se(np.abs(1.0 - inner))
    B2 = _mean_se(n * (DF2 * absG).mean(axis=1))
    B3 = _mean_se(n * (DF2 * absG).mean(axis=1) * np.abs(F))
    A2 = _root(_mean_se(n * (DF2 * G * G).mean(axis=1)), 2.0)
    norm_DF4 = (n * DF2.mean(axis=1)) ** 2
    EF4 = _mean_se(F ** 4)
    EDF4 = _mean_se(norm_DF4)
    r_df = _root(EDF4, 4.0)
    r_f = _root(EF4, 4.0)
    A3 = TermEstimate(r_df.value * (r_f.value + 1.0),
                      math.hypot(r_df.stderr * (r_f.value + 1.0), r_f.stderr * r_df.value))

    grid = np.asarray(default_x_grid() if x_grid is None else x_grid, dtype=float)
    grid = np.unique(np.concatenate([grid, np.quantile(F, _QUANTILE_LEVELS)]))
    best = TermEstimate(-np.inf, 0.0)
    argmax = float("nan")
    Fz = F[:, None]
    shifted = Fz + DF
    for x in grid:
        jump = (shifted > x).astype(float) - (Fz > x)
        est = _mean_se(n * (DF * jump * absG).mean(axis=1))
        if est.value > best.value:
            best, argmax = est, float(x)
    return Theorem31Terms(A1, A2, A3, best, B2, B3, grid, argmax, int(reps), M, int(seed),
                          reps < MIN_REPS, samples=F)


def empirical_distance_with_se(values, seed: int = 0, resamples: int = 200) -> tuple[float, float]:
    """Kolmogorov distance of a sample and a bootstrap standard error."""
    values = np.asarray(values, dtype=float)
    d = kolmogorov_distance(values).distance
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB007]))
    boot = np.array([kolmogorov_distance(rng.choice(values, values.size)).distance for _ in range(resamples)])
    return d, float(boot.std(ddof=1))
