"""Control measures on boxes and the shared integration engine.

Every integral against ``mu_n^m`` in the package goes through
:func:`integrate` (or the node sets produced by :func:`quadrature_nodes`).
A control measure is ``n * p(x) dx`` for a probability density ``p`` on an
axis-aligned box, and integrals are always computed as ``n**m`` times the
integral against ``p^{(x)m}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Iterator, NamedTuple, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import DensityTooPeakedError, DomainError, MethodUnsupportedError, NumericalDomainError

__all__ = [
    "ControlMeasure",
    "IntegrationSpec",
    "IntegrationResult",
    "integrate",
    "l2_norm",
    "quadrature_nodes",
    "iter_quadrature_nodes",
    "gauss_legendre_axis",
]

_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class ControlMeasure:
    """Finite control measure ``intensity * p(x) dx`` on a box in R^d.

    Parameters
    ----------
    lower, upper : sequence of float
        Corners of the support box.
    intensity : float
        Total mass ``n`` of the measure.
    density : callable, optional
        Vectorised probability density ``p(x)``, ``x`` of shape ``(..., d)``.
        ``None`` means the uniform density on the box.
    density_bound : float, optional
        Upper bound of ``p`` used by rejection sampling. Estimated from a
        Halton point set when omitted.
    marginal_ppfs : sequence of callables, optional
        Per-axis inverse CDFs. When given, ``p`` is taken to be the product
        of the corresponding marginals and sampling uses inversion.
    """

    lower: np.ndarray
    upper: np.ndarray
    intensity: float
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    density_bound: Optional[float] = None
    marginal_ppfs: Optional[tuple] = None
    label: str = ""
    acceptance_floor: float = 1e-3
    normalization_tol: float = 1e-4
    validate: bool = True

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DomainError("lower and upper must be 1-d arrays of equal length")
        if not np.all(upper > lower):
            raise DomainError("support box must have positive volume")
        if not (self.intensity > 0 and math.isfinite(self.intensity)):
            raise DomainError(f"intensity must be positive, got {self.intensity}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.marginal_ppfs is not None:
            if len(self.marginal_ppfs) != lower.size:
                raise DomainError("need one marginal inverse CDF per axis")
            object.__setattr__(self, "marginal_ppfs", tuple(self.marginal_ppfs))
        if self.density is not None and self.validate:
            mass = self.probability_mass()
            if abs(mass - 1.0) > self.normalization_tol:
                raise DomainError(f"density integrates to {mass:.8g} over the support, expected 1")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def uniform(cls, lower: Sequence[float] | float = 0.0, upper: Sequence[float] | float = 1.0,
                intensity: float = 1.0, label: str = "") -> "ControlMeasure":
        """Uniform probability density on ``[lower, upper]`` scaled by ``intensity``."""
        return cls(lower=lower, upper=upper, intensity=intensity, label=label or "uniform")

    def with_intensity(self, intensity: float) -> "ControlMeasure":
        return replace(self, intensity=float(intensity), validate=False)

    # -- basic properties -----------------------------------------------------

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    @property
    def is_uniform(self) -> bool:
        return self.density is None

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Probability density at ``x`` (shape ``(..., d)``), zero outside the box."""
        x = np.asarray(x, dtype=float)
        inside = self.contains(x)
        if self.density is None:
            return inside / self.volume
        return np.where(inside, self.density(x), 0.0)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lower) & (x <= self.upper), axis=-1)

    def probability_mass(self) -> float:
        """Integral of the density over the box (should be 1)."""
        unit = IntegrationSpec(method="tensor", nodes=32, panels=4 if self.dim == 1 else 1,
                               max_tensor_dim=max(4, self.dim))
        if self.dim > 3:
            unit = IntegrationSpec(method="mc", samples=1 << 16)
            pts = self.lower + (self.upper - self.lower) * np.random.default_rng(0).random((unit.samples, self.dim))
            return float(np.mean(self.density(pts)) * self.volume)
        total = 0.0
        for x, w in _tensor_chunks(self.lower, self.upper, 1, unit):
            vals = self.density(x[:, 0, :])
            total += float(np.dot(w, vals))
        return total

    # -- sampling -------------------------------------------------------------

    def _bound(self) -> float:
        if self.density_bound is not None:
            return float(self.density_bound)
        return _estimated_bound(self)

    def acceptance_rate(self) -> float:
        if self.density is None or self.marginal_ppfs is not None:
            return 1.0
        return 1.0 / (self._bound() * self.volume)

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. points with density ``p``; returns ``(count, d)``."""
        d = self.dim
        if count == 0:
            return np.empty((0, d))
        if self.density is None:
            return self.lower + (self.upper - self.lower) * rng.random((count, d))
        if self.marginal_ppfs is not None:
            u = rng.random((count, d))
            return np.column_stack([ppf(u[:, j]) for j, ppf in enumerate(self.marginal_ppfs)])
        rate = self.acceptance_rate()
        if rate < self.acceptance_floor:
            raise DensityTooPeakedError(
                f"rejection acceptance rate {rate:.2e} below floor {self.acceptance_floor:.2e}")
        bound = self._bound()
        out = np.empty((count, d))
        filled = 0
        while filled < count:
            batch = int(min(1 << 20, max(64, 1.2 * (count - filled) / rate)))
            cand = self.lower + (self.upper - self.lower) * rng.random((batch, d))
            keep = cand[rng.random(batch) * bound <= self.density(cand)]
            take = min(len(keep), count - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out


def _estimated_bound(control: ControlMeasure) -> float:
    cached = getattr(control, "_bound_cache", None)
    if cached is not None:
        return cached
    pts = qmc.Halton(d=control.dim, seed=0).random(8192)
    pts = control.lower + (control.upper - control.lower) * pts
    bound = 1.2 * float(np.max(control.density(pts)))
    object.__setattr__(control, "_bound_cache", bound)
    return bound


@dataclass(frozen=True)
class IntegrationSpec:
    """How integrals against ``mu_n^m`` are computed.

    ``method="auto"`` uses tensor Gauss-Legendre when ``m * d`` is at most
    ``max_tensor_dim`` and Monte Carlo otherwise. ``nodes`` and ``panels``
    set the per-axis composite Gauss-Legendre rule (``nodes * panels``
    points per axis); ``samples`` is the Monte Carlo budget.
    """

    method: str = "auto"
    nodes: int = 48
    panels: int = 1
    samples: int = 1 << 15
    seed: int = 0
    tolerance: float = 1e-8
    max_tensor_dim: int = 4

    def __post_init__(self):
        if self.method not in ("auto", "tensor", "mc"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.nodes < 1 or self.panels < 1 or self.samples < 1:
            raise ValueError("integration budget must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def resolve(self, total_dim: int) -> str:
        if self.method == "tensor":
            if total_dim > self.max_tensor_dim:
                raise MethodUnsupportedError(
                    f"tensor quadrature over {total_dim} dimensions exceeds ceiling {self.max_tensor_dim}")
            return "tensor"
        if self.method == "mc":
            return "mc"
        return "tensor" if total_dim <= self.max_tensor_dim else "mc"

    def with_(self, **changes) -> "IntegrationSpec":
        return replace(self, **changes)


class IntegrationResult(NamedTuple):
    estimate: float
    stderr: float


@lru_cache(maxsize=256)
def gauss_legendre_axis(lo: float, hi: float, nodes: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def _tensor_chunks(lower, upper, m, spec, chunk=_CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(x, w)`` with ``x`` of shape ``(c, m, d)`` for the Lebesgue tensor rule."""
    d = lower.size
    axes = [gauss_legendre_axis(float(lower[k]), float(upper[k]), spec.nodes, spec.panels) for k in range(d)]
    sizes = [axes[k][0].size for k in range(d)] * m
    total = int(np.prod(sizes))
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(total, start + chunk)), sizes)
        x = np.empty((idx[0].size, m, d))
        w = np.ones(idx[0].size)
        for j in range(m):
            for k in range(d):
                ax_pts, ax_w = axes[k]
                ii = idx[j * d + k]
                x[:, j, k] = ax_pts[ii]
                w *= ax_w[ii]
        yield x, w


def _mc_rng(spec: IntegrationSpec, m: int, d: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([spec.seed, 0x51EC, m, d]))


def iter_quadrature_nodes(control: ControlMeasure, m: int, spec: IntegrationSpec,
                          chunk: int = _CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield chunks ``(x, w)`` of a rule for ``mu_n^m``: ``sum w g(x) ~ int g dmu_n^m``.

    ``x`` has shape ``(c, m, d)``; weights already include ``n**m`` and the
    density. Node sets are deterministic functions of ``(control, m, spec)``,
    so repeated integrals share nodes exactly.
    """
    d = control.dim
    scale = control.intensity ** m
    if spec.resolve(m * d) == "tensor":
        for x, w in _tensor_chunks(control.lower, control.upper, m, spec, chunk):
            dens = np.prod(control.pdf(x), axis=1)
            yield x, w * dens * scale
    else:
        rng = _mc_rng(spec, m, d)
        remaining = spec.samples
        while remaining > 0:
            c = min(chunk, remaining)
            x = control.sample_points(rng, c * m).reshape(c, m, d)
            yield x, np.full(c, scale / spec.samples)
            remaining -= c


def quadrature_nodes(control: ControlMeasure, m: int, spec: IntegrationSpec,
                     max_nodes: int = 1 << 21) -> tuple[np.ndarray, np.ndarray]:
    """Materialised node set of :func:`iter_quadrature_nodes`."""
    if m == 0:
        return np.empty((1, 0, control.dim)), np.ones(1)
    parts = list(iter_quadrature_nodes(control, m, spec, chunk=max_nodes + 1))
    x = np.concatenate([p[0] for p in parts])
    if x.shape[0] > max_nodes:
        raise MethodUnsupportedError(f"{x.shape[0]} inner nodes exceed the limit {max_nodes}")
    return x, np.concatenate([p[1] for p in parts])


def _evaluate(g, x: np.ndarray) -> np.ndarray:
    vals = np.asarray(g(*[x[:, j, :] for j in range(x.shape[1])]), dtype=float)
    vals = np.broadcast_to(vals, (x.shape[0],))
    if not np.all(np.isfinite(vals)):
        raise NumericalDomainError("integrand returned a non-finite value")
    return vals


def integrate(g: Callable[..., np.ndarray], control: ControlMeasure, m: int,
              spec: IntegrationSpec = IntegrationSpec()) -> IntegrationResult:
    """Integrate ``g(x_1, ..., x_m)`` against ``mu_n^m``.

    Parameters
    ----------
    g : callable
        Vectorised in each argument; ``x_j`` has shape ``(c, d)`` and the
        return value shape ``(c,)``.
    control : ControlMeasure
    m : int
        Number of arguments of ``g``.
    spec : IntegrationSpec

    Returns
    -------
    IntegrationResult
        ``estimate`` and ``stderr``. The standard error is zero for
        quadrature.
    """
    if m < 1:
        raise ValueError("arity must be >= 1")
    method = spec.resolve(m * control.dim)
    total = 0.0
    if method == "tensor":
        for x, w in iter_quadrature_nodes(control, m, spec):
            total += float(np.dot(w, _evaluate(g, x)))
        return IntegrationResult(total, 0.0)
    s1 = 0.0
    s2 = 0.0
    for x, w in iter_quadrature_nodes(control, m, spec):
        vals = _evaluate(g, x)
        s1 += float(vals.sum())
        s2 += float(np.dot(vals, vals))
    count = spec.samples
    mean = s1 / count
    var = max(s2 / count - mean * mean, 0.0) * count / max(count - 1, 1)
    scale = control.intensity ** m
    return IntegrationResult(scale * mean, scale * math.sqrt(var / count))


def l2_norm(f, control: ControlMeasure, spec: IntegrationSpec = IntegrationSpec()) -> float:
    """``(int f^2 dmu_n^q)^{1/2}`` for a kernel ``f`` with ``f.arity == q``."""
    return math.sqrt(max(integrate(lambda *x: f(*x) ** 2, control, f.arity, spec).estimate, 0.0))
