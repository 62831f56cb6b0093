"""Reproducible experiment builders for the worked examples.

Three families are provided:

* degenerate U-statistics with the orthonormal cosine kernel family
  (de Jong setting),
* the pair-count statistic ``sum 1(|x - y| <= r)`` on the unit cube,
* time averages of an Ornstein-Uhlenbeck process driven by a compensated
  Poisson measure in time and jump size.

Every :class:`Scenario` carries a fast vectorised sampler of the raw
functional, its normalisation ``(mean, sd)`` and, where available, the
chaos expansion of the normalised functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy.spatial import cKDTree

from .chaos import (ChaosExpansion, Kernel, SeparableKernel, chaos_variance, cosine_family, hoeffding_kernels,
                    indicator_distance, ustat_batch, ustat_evaluate, ustat_mean)
from .diagnostics import RateTable, SampleSet, kolmogorov_distance
from .errors import DomainError
from .measure_space import ControlMeasure, IntegrationSpec, integrate
from .point_process import Functional, sample_batch
from .streams import map_blocks

__all__ = [
    "Normalization",
    "Scenario",
    "LevyNu",
    "cosine_spec",
    "build_dejong_cosine",
    "build_pairwise",
    "pairwise_closed_form",
    "disk_square_area",
    "build_ou_levy",
    "ou_variance",
    "ou_path_integrals",
    "simulate",
    "run_rate_study",
    "SCENARIO_BUILDERS",
]


@dataclass(frozen=True)
class Normalization:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise DomainError("normalisation sd must be positive")


@dataclass
class Scenario:
    """A Poisson functional with its normalisation and optional chaos expansion.

    Attributes
    ----------
    raw_sampler : callable
        ``raw_sampler(rng, count)`` returns ``count`` independent raw values.
        Defaults to sampling configurations and evaluating ``functional``.
    expansion : ChaosExpansion or None
        Expansion of the normalised functional ``(F - mean) / sd``.
    """

    label: str
    control: ControlMeasure
    functional: Functional
    normalization: Normalization
    expansion: Optional[ChaosExpansion] = None
    expected_rate: Optional[float] = None
    params: dict = field(default_factory=dict)
    raw_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    spec: IntegrationSpec = field(default_factory=IntegrationSpec)

    def __post_init__(self):
        if self.raw_sampler is None:
            def sampler(rng, count):
                return np.array([self.functional(cfg) for cfg in sample_batch(self.control, count, rng)])

            self.raw_sampler = sampler

    def normalize(self, raw) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.normalization.mean) / self.normalization.sd

    def simulate_raw(self, reps: int, seed: int, threads: Optional[int] = None) -> np.ndarray:
        return map_blocks(self.raw_sampler, reps, seed, threads)

    def consistency(self, reps: int, seed: int, threads: Optional[int] = None) -> dict:
        """z-scores of the sample mean and variance of the raw functional against the normalisation."""
        z = self.normalize(self.simulate_raw(reps, seed, threads))
        n = z.size
        mean_z = z.mean() / (z.std(ddof=1) / math.sqrt(n))
        c = z - z.mean()
        var = c.var(ddof=1)
        var_se = math.sqrt(max(np.mean(c ** 4) - var ** 2, 0.0) / n)
        return {"mean_z": float(mean_z), "var": float(var), "var_z": float((var - 1.0) / var_se)}


def simulate(scenario: Scenario, reps: int, seed: int, threads: Optional[int] = None) -> SampleSet:
    """Normalised values of the scenario functional over ``reps`` replicates."""
    values = scenario.normalize(scenario.simulate_raw(reps, seed, threads))
    return SampleSet(values, f"seed={seed} reps={reps} scenario={scenario.label}")


# -- de Jong cosine family -----------------------------------------------------------


def cosine_spec(m: int) -> IntegrationSpec:
    """Composite Gauss-Legendre rule that integrates products of the first ``m`` cosines exactly."""
    return IntegrationSpec(method="tensor", nodes=16, panels=max(2, math.ceil(m / 2)))


def build_dejong_cosine(n: float, m: int, spec: Optional[IntegrationSpec] = None) -> Scenario:
    """Degenerate U-statistic with ``h = m^{-1/2} sum_{j<=m} phi_j (x) phi_j`` on uniform [0, 1]."""
    if n < 1 or m < 1:
        raise DomainError("need n >= 1 and m >= 1")
    spec = spec or cosine_spec(m)
    control = ControlMeasure.uniform([0.0], [1.0], float(n), label="uniform[0,1]")
    h = cosine_family(int(m))
    prob_norm_sq = integrate(lambda x, y: h(x, y) ** 2, control.with_intensity(1.0), 2, spec).estimate
    sd = math.sqrt(2.0 * n * n * prob_norm_sq)
    functional = Functional(lambda cfg: ustat_evaluate(h, 2, cfg), f"U[{h.label}]")
    return Scenario(
        label=f"dejong_cosine(n={n:g},m={m})",
        control=control,
        functional=functional,
        normalization=Normalization(0.0, sd),
        expansion=ChaosExpansion(0.0, [(2, h.scaled(1.0 / sd))]),
        expected_rate=None,
        params={"name": "dejong_cosine", "n": n, "m": m},
        raw_sampler=lambda rng, count: ustat_batch(h, 2, sample_batch(control, count, rng)),
        spec=spec,
    )


# -- pairwise interaction ------------------------------------------------------------


def _segment_area(a: np.ndarray, r: float) -> np.ndarray:
    """Area of the part of a radius-``r`` disk beyond a line at distance ``a`` from its centre."""
    a = np.minimum(np.asarray(a, dtype=float), r)
    return r * r * np.arccos(a / r) - a * np.sqrt(r * r - a * a)


def _corner_area(a: np.ndarray, b: np.ndarray, r: float) -> np.ndarray:
    """Area of the part of the disk beyond two perpendicular lines at distances ``a`` and ``b``."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))

    def prim(x):
        return 0.5 * (x * np.sqrt(np.maximum(r * r - x * x, 0.0)) + r * r * np.arcsin(np.clip(x / r, -1.0, 1.0)))

    top = np.sqrt(np.maximum(r * r - b * b, 0.0))
    area = prim(top) - prim(a) - b * (top - a)
    return np.where(a * a + b * b < r * r, area, 0.0)


def disk_square_area(z: np.ndarray, r: float) -> np.ndarray:
    """Area of ``B(z, r) intersected with [0, 1]^2`` for ``r < 1/2``; ``z`` has shape ``(..., 2)``."""
    z = np.asarray(z, dtype=float)
    dists = [z[..., 0], 1.0 - z[..., 0], z[..., 1], 1.0 - z[..., 1]]
    area = math.pi * r * r - sum(_segment_area(d, r) for d in dists)
    for i in (0, 1):
        for j in (2, 3):
            area = area + _corner_area(dists[i], dists[j], r)
    return area


def _piecewise_gauss(r: float, nodes: int = 24) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = [0.0, r, 1.0 - r, 1.0]
    pts = np.concatenate([(lo + hi) / 2 + (hi - lo) / 2 * x for lo, hi in zip(edges, edges[1:])])
    wts = np.concatenate([(hi - lo) / 2 * w for lo, hi in zip(edges, edges[1:])])
    return pts, wts


def pairwise_closed_form(n: float, r: float, d: int) -> tuple[float, float]:
    """``(E U, var U)`` for the pair count on uniform ``[0, 1]^d``, ``d in {1, 2}``.

    ``E U = n^2 P(|Y - Y'| <= r)`` and ``var U = 4 n^3 int l(z)^2 dz + 2 E U`` where
    ``l(z)`` is the volume of ``B(z, r)`` inside the cube. For ``d = 1``
    everything is polynomial: ``P = 2r - r^2`` and ``int l^2 = 4 r^2 - 10 r^3 / 3``.
    For ``d = 2``, ``P = pi r^2 - 8 r^3 / 3 + r^4 / 2`` and ``int l^2`` is
    integrated numerically from the exact area ``l``.
    """
    if d == 1:
        pair, lsq = 2.0 * r - r * r, 4.0 * r * r - 10.0 * r ** 3 / 3.0
    elif d == 2:
        pair = math.pi * r * r - 8.0 * r ** 3 / 3.0 + r ** 4 / 2.0
        x, w = _piecewise_gauss(r)
        grid = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
        lsq = float(np.einsum("i,j,ij->", w, w, disk_square_area(grid, r) ** 2))
    else:
        raise DomainError("closed form available for d in {1, 2}")
    mean = n * n * pair
    return mean, 4.0 * n ** 3 * lsq + 2.0 * mean


def _pair_counts_1d(points: np.ndarray, owner: np.ndarray, reps: int, r: float) -> np.ndarray:
    key = owner * 4.0 + points[:, 0]
    order = np.argsort(key, kind="stable")
    key = key[order]
    within = np.searchsorted(key, key + r, side="right") - np.arange(key.size) - 1
    return 2.0 * np.bincount(owner[order], weights=within, minlength=reps)


def _pair_counts_kdtree(points: np.ndarray, owner: np.ndarray, reps: int, r: float) -> np.ndarray:
    shifted = points.copy()
    shifted[:, 0] += 4.0 * owner
    pairs = cKDTree(shifted).query_pairs(r, output_type="ndarray")
    return 2.0 * np.bincount(owner[pairs[:, 0]], minlength=reps).astype(float)


def build_pairwise(n: float, r: float = 0.1, d: int = 1, spec: Optional[IntegrationSpec] = None) -> Scenario:
    """Pair count ``U = sum_{x != y} 1(|x - y| <= r)`` on uniform ``[0, 1]^d``.

    Mean and variance come from :func:`pairwise_closed_form`; the quadrature
    route (:func:`ustat_mean`, :func:`chaos_variance`) agrees with it up to
    the rule's error on the discontinuous kernel.
    """
    if not 0 < r < 0.25:
        raise DomainError("interaction radius must lie in (0, 1/4)")
    if d not in (1, 2):
        raise DomainError("dimension must be 1 or 2")
    spec = spec or IntegrationSpec(method="tensor", nodes=16 if d == 1 else 8, panels=40 if d == 1 else 12)
    control = ControlMeasure.uniform(np.zeros(d), np.ones(d), float(n), label=f"uniform[0,1]^{d}")
    h = indicator_distance(r)
    g1 = hoeffding_kernels(h, 2, 1, control, spec)
    mean, var = pairwise_closed_form(n, r, d)
    sd = math.sqrt(var)
    counter = _pair_counts_1d if d == 1 else _pair_counts_kdtree

    def sampler(rng, count):
        batch = sample_batch(control, count, rng)
        return counter(batch.points, batch.owner, count, r)

    return Scenario(
        label=f"pairwise(n={n:g},r={r:g},d={d})",
        control=control,
        functional=Functional(lambda cfg: ustat_evaluate(h, 2, cfg), f"U[{h.label}]"),
        normalization=Normalization(mean, sd),
        expansion=ChaosExpansion(0.0, [(1, g1.scaled(1.0 / sd)), (2, h.scaled(1.0 / sd))]),
        expected_rate=-0.5,
        params={"name": "pairwise", "n": n, "r": r, "d": d},
        raw_sampler=sampler,
        spec=spec,
    )


# -- Ornstein-Uhlenbeck process driven by a Poisson measure --------------------------


@dataclass(frozen=True)
class LevyNu:
    """Jump-size measure ``nu`` with a density on a bounded interval.

    ``density`` need not integrate to one; its total mass is ``mass``.
    The normalisation ``int u^2 nu(du) = 1`` is enforced.
    """

    lower: float
    upper: float
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    mass: float = 1.0
    label: str = ""
    moments: dict = field(default=None, compare=False)

    def __post_init__(self):
        if not self.upper > self.lower:
            raise DomainError("support must be a nonempty interval")
        if self.density is None:
            mass = float(self.mass)
            width = self.upper - self.lower
            moments = {k: mass * (self.upper ** (k + 1) - self.lower ** (k + 1)) / ((k + 1) * width)
                       for k in range(0, 7)}
        else:
            moments = {k: sp_integrate.quad(lambda u, k=k: u ** k * float(self.density(np.array(u))),
                                            self.lower, self.upper, limit=200)[0] for k in range(0, 7)}
            object.__setattr__(self, "mass", moments[0])
        if abs(moments[2] - 1.0) > 1e-6:
            raise DomainError(f"int u^2 nu(du) = {moments[2]:.8g}, expected 1")
        object.__setattr__(self, "moments", moments)
        if not self.label:
            object.__setattr__(self, "label", f"nu[{self.lower:g},{self.upper:g}]")

    @classmethod
    def uniform(cls, lower: float, upper: float, label: str = "") -> "LevyNu":
        """Constant density on ``[lower, upper]`` scaled so that ``int u^2 nu = 1``."""
        second = (upper ** 3 - lower ** 3) / (3.0 * (upper - lower))
        return cls(lower, upper, None, 1.0 / second, label)

    @classmethod
    def default(cls) -> "LevyNu":
        """Uniform probability on ``[-sqrt 3, sqrt 3]``: ``c_nu = 9/5``."""
        s = math.sqrt(3.0)
        return cls.uniform(-s, s, "uniform[-sqrt3,sqrt3]")

    @classmethod
    def skewed(cls) -> "LevyNu":
        """Constant density 1/9 on ``[0, 3]``: mass 1/3, third moment 9/4."""
        return cls.uniform(0.0, 3.0, "uniform[0,3]/9")

    @property
    def c_nu(self) -> float:
        """``int u^4 nu(du)``."""
        return self.moments[4]

    @property
    def symmetric(self) -> bool:
        return abs(self.moments[1]) <= 1e-12 * max(1.0, self.mass)

    def control(self, t_lo: float, t_hi: float) -> ControlMeasure:
        """Product measure ``dx * nu(du)`` on ``[t_lo, t_hi] x supp nu``."""
        total = self.mass * (t_hi - t_lo)
        lower, upper = [t_lo, self.lower], [t_hi, self.upper]
        if self.density is None:
            return ControlMeasure.uniform(lower, upper, total, label=f"dx*{self.label}")
        dens, span, mass = self.density, t_hi - t_lo, self.mass
        return ControlMeasure(lower, upper, total, density=lambda z: dens(z[..., 1]) / (mass * span),
                              label=f"dx*{self.label}")


def _ramp(beta: float, a: float, b: float, T: float) -> float:
    """``int_a^b (1 - tau/T) exp(-beta tau) d tau``."""
    if b <= a:
        return 0.0
    if beta == 0.0:
        return (b - a) - (b * b - a * a) / (2.0 * T)
    ea, eb = math.exp(-beta * a), math.exp(-beta * b)
    first = (ea - eb) / beta
    second = ea * (a / beta + 1.0 / beta ** 2) - eb * (b / beta + 1.0 / beta ** 2)
    return first - second / T


def ou_variance(kind: str, lam: float, T: float, c_nu: float, h: float = 0.0, asymptotic: bool = False) -> float:
    """Variance of ``M_T``, ``S_T`` or ``V_T^{(h)}`` for the stationary process.

    With ``asymptotic=True`` the ``T -> inf`` limits ``2/lam``,
    ``2/lam + c_nu`` and ``1/lam + e^{-2 lam h}(2h + 1/lam) + c_nu e^{-2 lam h}``
    are returned; otherwise the exact finite-``T`` value
    ``2 int_0^T (1 - tau/T) C(tau) d tau`` for the covariance ``C`` of the integrand.
    """
    if kind == "M":
        if asymptotic:
            return 2.0 / lam
        return 2.0 * _ramp(lam, 0.0, T, T)
    if kind == "S":
        h = 0.0
    elif kind != "V":
        raise ValueError(f"unknown functional {kind!r}")
    e2h = math.exp(-2.0 * lam * h)
    if asymptotic:
        return 1.0 / lam + e2h * (2.0 * h + 1.0 / lam) + c_nu * e2h
    inf = float("inf")
    core = _ramp(2.0 * lam, 0.0, T, T) if T < inf else 1.0 / (2.0 * lam)
    hmin = min(h, T)
    lagged = e2h * (hmin - hmin * hmin / (2.0 * T)) + _ramp(2.0 * lam, hmin, T, T)
    jumps = lam * c_nu * e2h * _ramp(2.0 * lam, 0.0, T, T)
    return 2.0 * (core + lagged + jumps)


def _decayed_cumsum(x: np.ndarray, u: np.ndarray, lam: float) -> np.ndarray:
    """``S_k = sum_{i<=k} u_i exp(-lam (x_k - x_i))`` for sorted ``x``, overflow-safe."""
    out = np.empty_like(u)
    carry, last, start = 0.0, None, 0
    while start < x.size:
        base = x[start]
        stop = start + int(np.searchsorted(x[start:], base + 600.0 / lam, side="right"))
        stop = max(stop, start + 1)
        seg = x[start:stop] - base
        acc = np.cumsum(u[start:stop] * np.exp(lam * seg)) * np.exp(-lam * seg)
        if last is not None:
            acc += carry * np.exp(-lam * (x[start:stop] - last))
        out[start:stop] = acc
        carry, last, start = acc[-1], x[stop - 1], stop
    return out


def ou_path_integrals(x: np.ndarray, u: np.ndarray, lam: float, T: float, B: float, a: float,
                      h: float = 0.0) -> tuple[float, float, float]:
    """``(int Y, int Y^2, int Y_t Y_{t+h})`` over ``[0, T]`` for one path, exactly.

    ``Y_t = Q_t - a`` with ``Q_t = a e^{-lam (t+B)} + sqrt(2 lam) sum_{x_i <= t} u_i e^{-lam (t - x_i)}``.
    Between jump times ``Q`` decays exponentially, so every integral is a
    sum of closed-form segment contributions.
    """
    order = np.argsort(x, kind="stable")
    xs, us = np.asarray(x, dtype=float)[order], np.asarray(u, dtype=float)[order]
    S = _decayed_cumsum(xs, us, lam) if xs.size else xs
    root = math.sqrt(2.0 * lam)

    def Q(t):
        idx = np.searchsorted(xs, t, side="right") - 1
        safe = np.maximum(idx, 0)
        jumps = np.where(idx >= 0, S[safe] * np.exp(-lam * (t - xs[safe])) if xs.size else 0.0, 0.0)
        return a * np.exp(-lam * (t + B)) + root * jumps

    inside = xs[(xs > 0.0) & (xs < T)]
    lagged = xs - h
    lagged = lagged[(lagged > 0.0) & (lagged < T)]
    knots = np.unique(np.concatenate([[0.0, T], inside, lagged]))
    s, L = knots[:-1], np.diff(knots)
    q0, qh = Q(s), Q(s + h)
    e1 = -np.expm1(-lam * L) / lam
    e2 = -np.expm1(-2.0 * lam * L) / (2.0 * lam)
    int_y = float(np.sum(q0 * e1) - a * T)
    int_y2 = float(np.sum(q0 * q0 * e2 - 2.0 * a * q0 * e1) + a * a * T)
    int_yy = float(np.sum(q0 * qh * e2 - a * (q0 + qh) * e1) + a * a * T)
    return int_y, int_y2, int_yy


def _ou_kernels(lam: float, T: float, h: float, scale: dict) -> dict:
    root_T = math.sqrt(T)
    two_lam = 2.0 * lam

    def f_m(z):
        x, u = z[..., 0], z[..., 1]
        t0 = np.maximum(x, 0.0)
        val = math.sqrt(two_lam) * u * (np.exp(-lam * (t0 - x)) - np.exp(-lam * (T - x))) / lam
        return np.where(x < T, val, 0.0) / (root_T * scale["M"])

    def first(z, lag, sd):
        x, u = z[..., 0], z[..., 1]
        t0 = np.maximum(x, 0.0)
        val = u * u * math.exp(-lam * lag) * (np.exp(-two_lam * (t0 - x)) - np.exp(-two_lam * (T - x)))
        return np.where(x < T, val, 0.0) / (root_T * sd)

    def second_ordered(z1, z2, lag):
        x1, u1, x2, u2 = z1[..., 0], z1[..., 1], z2[..., 0], z2[..., 1]
        t0 = np.maximum(np.maximum(x1, x2 - lag), 0.0)
        expo = lam * (x1 + x2 - lag)
        val = u1 * u2 * (np.exp(expo - two_lam * t0) - np.exp(expo - two_lam * T))
        return np.where(t0 < T, val, 0.0)

    def second(z1, z2, lag, sd):
        if lag == 0.0:
            return second_ordered(z1, z2, 0.0) / (root_T * sd)
        return 0.5 * (second_ordered(z1, z2, lag) + second_ordered(z2, z1, lag)) / (root_T * sd)

    sd_s, sd_v = scale["S"], scale["V"]
    return {
        "M": ChaosExpansion(0.0, [(1, Kernel(1, f_m, label="f_M"))]),
        "S": ChaosExpansion(0.0, [(1, Kernel(1, lambda z: first(z, 0.0, sd_s), label="f1_S")),
                                  (2, Kernel(2, lambda a, b: second(a, b, 0.0, sd_s), label="f2_S"))]),
        "V": ChaosExpansion(0.0, [(1, Kernel(1, lambda z: first(z, h, sd_v), label="f1_V")),
                                  (2, Kernel(2, lambda a, b: second(a, b, h, sd_v), label="f2_V"))]),
    }


def build_ou_levy(lam: float = 1.0, T: float = 200.0, nu: Optional[LevyNu] = None, truncation_tol: float = 1e-8,
                  h: float = 0.0, variance: str = "exact") -> dict:
    """Scenarios ``{"M", "S", "V"}`` for time averages of the Poisson-driven OU process.

    ``M_T = T^{-1/2} int_0^T Y_t dt``, ``S_T = T^{-1/2} int_0^T (Y_t^2 - E Y_t^2) dt`` and
    ``V_T^{(h)} = T^{-1/2} int_0^T (Y_t Y_{t+h} - E Y_t Y_{t+h}) dt``.

    Parameters
    ----------
    truncation_tol : float
        The driving measure starts at ``-B`` with ``exp(-lam B) <= truncation_tol``.
    variance : {"exact", "asymptotic"}
        Normalise by the exact finite-``T`` variance or by its ``T -> inf`` limit.
    """
    if not lam > 0 or not T > 0 or h < 0:
        raise DomainError("need lam > 0, T > 0 and h >= 0")
    if not 0 < truncation_tol < 1:
        raise DomainError("truncation_tol must lie in (0, 1)")
    if variance not in ("exact", "asymptotic"):
        raise DomainError("variance must be 'exact' or 'asymptotic'")
    nu = nu or LevyNu.default()
    B = -math.log(truncation_tol) / lam
    control = nu.control(-B, T + h)
    m1 = integrate(lambda z: z[..., 1], control.with_intensity(1.0), 1,
                   IntegrationSpec(method="tensor", nodes=32)).estimate * control.intensity
    if nu.symmetric and abs(m1) > 1e-9:
        raise DomainError(f"compensator of a symmetric jump measure should vanish, got {m1}")
    a = math.sqrt(2.0 * lam) * nu.moments[1] / lam
    c_nu = nu.c_nu
    asym = variance == "asymptotic"
    sds = {k: math.sqrt(ou_variance(k, lam, T, c_nu, h, asym)) for k in ("M", "S", "V")}
    tail = math.exp(-2.0 * lam * B) * -math.expm1(-2.0 * lam * T) / (2.0 * lam)
    centre_s = T - tail
    centre_v = math.exp(-lam * h) * centre_s
    root_T = math.sqrt(T)

    def raw_all(rng, count):
        batch = sample_batch(control, count, rng)
        off = batch.offsets
        out = np.empty((count, 3))
        for i in range(count):
            p = batch.points[off[i]:off[i + 1]]
            iy, iy2, iyy = ou_path_integrals(p[:, 0], p[:, 1], lam, T, B, a, h)
            out[i] = (iy / root_T, (iy2 - centre_s) / root_T, (iyy - centre_v) / root_T)
        return out

    def raw_m(rng, count):
        batch = sample_batch(control, count, rng)
        x, u = batch.points[:, 0], batch.points[:, 1]
        t0 = np.maximum(x, 0.0)
        contrib = np.where(x < T, np.exp(-lam * (t0 - x)) - np.exp(-lam * (T - x)), 0.0)
        jumps = batch.per_replicate_sum(math.sqrt(2.0 * lam) * u * contrib / lam)
        comp = a * (T - math.exp(-lam * B) * -math.expm1(-lam * T) / lam)
        return (jumps - comp) / root_T

    expansions = _ou_kernels(lam, T, h, sds)
    params = {"name": "ou_levy", "lam": lam, "T": T, "h": h, "truncation_tol": truncation_tol,
              "nu": nu.label, "variance": variance}
    out = {}
    for col, key in enumerate(("M", "S", "V")):
        def functional(cfg, col=col):
            p = cfg.points
            iy, iy2, iyy = ou_path_integrals(p[:, 0], p[:, 1], lam, T, B, a, h)
            return (iy / root_T, (iy2 - centre_s) / root_T, (iyy - centre_v) / root_T)[col]

        sampler = raw_m if key == "M" else (lambda rng, count, col=col: raw_all(rng, count)[:, col])
        out[key] = Scenario(
            label=f"ou_levy[{key}](lam={lam:g},T={T:g},h={h:g})",
            control=control,
            functional=Functional(functional, key),
            normalization=Normalization(0.0, sds[key]),
            expansion=expansions[key],
            expected_rate=-0.5,
            params=dict(params, functional=key),
            raw_sampler=sampler,
            spec=IntegrationSpec(method="mc", samples=1 << 14),
        )
    out["_joint_sampler"] = raw_all
    out["_compensator"] = a
    out["_B"] = B
    return out


# -- rate studies ---------------------------------------------------------------------


def _bootstrap_se(values: np.ndarray, seed: int, resamples: int = 100) -> float:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB007]))
    boot = [kolmogorov_distance(rng.choice(values, values.size)).distance for _ in range(resamples)]
    return float(np.std(boot, ddof=1))


def run_rate_study(builder: Callable[..., Scenario], scales: Sequence[float], reps: int, seed: int,
                   scale_param: str = "n", fixed: Optional[dict] = None, threads: Optional[int] = None,
                   bootstrap: int = 100) -> RateTable:
    """Empirical Kolmogorov distance of the normalised functional at every scale.

    Scale ``k`` (0-based) simulates with seed ``seed + k``. The standard
    error of each distance is a bootstrap estimate.
    """
    if len(scales) < 3:
        raise DomainError("a rate study needs at least three scales")
    fixed = dict(fixed or {})
    rows = []
    for k, s in enumerate(scales):
        scenario = builder(**{scale_param: s}, **fixed)
        vals = simulate(scenario, reps, seed + k, threads).values
        d = kolmogorov_distance(vals).distance
        rows.append((float(s), d, _bootstrap_se(vals, seed + k, bootstrap) if bootstrap else 0.0))
    return RateTable(rows).fit()


def _ou_builder(functional: str = "M", **kwargs) -> Scenario:
    nu = kwargs.pop("nu", None)
    if isinstance(nu, str):
        nu = {"default": LevyNu.default(), "skewed": LevyNu.skewed()}[nu]
    return build_ou_levy(nu=nu, **kwargs)[functional]


SCENARIO_BUILDERS: dict[str, Callable[..., Scenario]] = {
    "dejong_cosine": build_dejong_cosine,
    "pairwise": build_pairwise,
    "ou_levy": _ou_builder,
}
