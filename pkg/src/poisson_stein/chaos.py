"""Kernels, pathwise multiple Wiener-Ito integrals and U-statistics.

Multiple integrals are evaluated realisation by realisation through the
inclusion-exclusion representation

    I_q(f) = sum_k (-1)^(q-k) C(q, k) sum_{distinct k-tuples z of eta}
             int f(z, y_{k+1}, ..., y_q) dmu^(q-k)(y),

where every inner integral uses the deterministic node set of
:func:`~poisson_stein.measure_space.quadrature_nodes`. Because the same
nodes are reused everywhere, algebraic identities between pathwise
quantities (difference operator, product formula, Hoeffding
reconstruction) hold to rounding error, independently of quadrature error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, MethodUnsupportedError
from .measure_space import ControlMeasure, IntegrationSpec, integrate, l2_norm, quadrature_nodes
from .point_process import ConfigurationBatch, PointConfiguration

__all__ = [
    "Kernel",
    "SeparableKernel",
    "ChaosExpansion",
    "constant_kernel",
    "cosine_product",
    "cosine_family",
    "indicator_distance",
    "tensor_product",
    "verify_kernel",
    "evaluate_multiple_integral",
    "multiple_integral_batch",
    "partial_multiple_integrals",
    "partial_integrals_batch",
    "ustat_evaluate",
    "ustat_batch",
    "hoeffding_kernels",
    "ustat_mean",
    "chaos_variance",
    "check_degeneracy",
]

MAX_PATHWISE_ORDER = 3
_EVAL_BUDGET = 1 << 22


class Kernel:
    """A real function of ``arity`` points of R^d, vectorised over leading axes.

    ``kernel(x_1, ..., x_q)`` accepts arrays of shape ``(..., d)`` that
    broadcast against each other and returns the broadcast leading shape.
    """

    def __init__(self, arity: int, func: Callable[..., np.ndarray], symmetric: bool = True,
                 nonnegative: bool = False, label: str = "", approximately_symmetric: bool = False):
        if arity < 0:
            raise ValueError("arity must be non-negative")
        self.arity = int(arity)
        self.func = func
        self.symmetric = bool(symmetric)
        self.nonnegative = bool(nonnegative)
        self.approximately_symmetric = bool(approximately_symmetric)
        self.label = label or f"kernel[{arity}]"

    def __call__(self, *xs) -> np.ndarray:
        if len(xs) != self.arity:
            raise TypeError(f"{self.label} takes {self.arity} points, got {len(xs)}")
        return self.func(*[np.asarray(x, dtype=float) for x in xs])

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label} arity={self.arity}>"

    def fix(self, *zs) -> "Kernel":
        """``f(z_1, ..., z_j, .)`` as a kernel of the remaining arguments."""
        zs = [np.asarray(z, dtype=float) for z in zs]
        f = self.func
        return Kernel(self.arity - len(zs), lambda *rest: f(*zs, *rest), self.symmetric,
                      self.nonnegative, f"{self.label}(z,.)")

    def scaled(self, c: float) -> "Kernel":
        c = float(c)
        f = self.func
        return Kernel(self.arity, lambda *x: c * f(*x), self.symmetric,
                      self.nonnegative and c >= 0, f"{c:g}*{self.label}")

    def __mul__(self, other):
        if isinstance(other, Kernel):
            if other.arity != self.arity:
                raise ValueError("pointwise product needs equal arities")
            f, g = self.func, other.func
            return Kernel(self.arity, lambda *x: f(*x) * g(*x), self.symmetric and other.symmetric,
                          self.nonnegative and other.nonnegative, f"{self.label}*{other.label}")
        return self.scaled(other)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "Kernel":
        return self.scaled(1.0 / float(c))

    def __neg__(self) -> "Kernel":
        return self.scaled(-1.0)

    def __add__(self, other: "Kernel") -> "Kernel":
        if other.arity != self.arity:
            raise ValueError("sum needs equal arities")
        f, g = self.func, other.func
        return Kernel(self.arity, lambda *x: f(*x) + g(*x), self.symmetric and other.symmetric,
                      self.nonnegative and other.nonnegative, f"({self.label}+{other.label})")

    def __sub__(self, other: "Kernel") -> "Kernel":
        return self + (-other)


class SeparableKernel(Kernel):
    """``h(x_1..x_q) = sum_j c_j prod_i phi_j(x_i)`` with vectorised profiles.

    ``profiles(x)`` maps ``(..., d)`` to ``(..., m)``. Pathwise integrals and
    U-statistics of such kernels reduce to power sums of the profile values,
    which makes large Monte Carlo studies cheap.
    """

    def __init__(self, arity: int, profiles: Callable[[np.ndarray], np.ndarray], coefficients,
                 label: str = "", nonnegative: bool = False):
        coef = np.atleast_1d(np.asarray(coefficients, dtype=float))
        self.profiles = profiles
        self.coefficients = coef

        def func(*xs):
            prod = None
            for x in xs:
                v = profiles(x)
                prod = v if prod is None else prod * v
            return prod @ coef

        super().__init__(arity, func, True, nonnegative, label or f"separable[{coef.size}]")

    def scaled(self, c: float) -> "SeparableKernel":
        return SeparableKernel(self.arity, self.profiles, float(c) * self.coefficients,
                               f"{float(c):g}*{self.label}", self.nonnegative and c >= 0)


# -- built-in kernels ----------------------------------------------------------------


def constant_kernel(arity: int, value: float = 1.0) -> SeparableKernel:
    """The constant kernel ``value`` of the given arity."""
    return SeparableKernel(arity, lambda x: np.ones(np.shape(x)[:-1] + (1,)), [value],
                           f"const[{value:g}]", nonnegative=value >= 0)


def _cosines(freqs: np.ndarray):
    freqs = np.asarray(freqs, dtype=float)
    root2 = math.sqrt(2.0)

    def profiles(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return root2 * np.cos(2.0 * np.pi * x[..., None] * freqs)

    return profiles


def cosine_product(frequency: int = 1, arity: int = 2) -> SeparableKernel:
    """``phi(x_1) ... phi(x_q)`` with ``phi = sqrt(2) cos(2 pi j x)`` (first coordinate)."""
    return SeparableKernel(arity, _cosines(np.array([frequency])), [1.0], f"cos[{frequency}]^{arity}")


def cosine_family(m: int, arity: int = 2) -> SeparableKernel:
    """``m^{-1/2} sum_{j<=m} phi_j^{(x)q}``; orthonormal profiles on uniform [0, 1]."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return SeparableKernel(arity, _cosines(np.arange(1, m + 1)), np.full(m, m ** -0.5),
                           f"cosine_family[m={m}]")


def indicator_distance(radius: float) -> Kernel:
    """``1(|x - y| <= radius)`` with the Euclidean norm."""
    r = float(radius)
    if not r > 0:
        raise DomainError("radius must be positive")

    def func(x, y):
        diff = x - y
        return (np.einsum("...i,...i->...", diff, diff) <= r * r).astype(float)

    return Kernel(2, func, symmetric=True, nonnegative=True, label=f"1(|x-y|<={r:g})")


def tensor_product(profile: Callable[[np.ndarray], np.ndarray], arity: int, label: str = "") -> SeparableKernel:
    """``g(x_1) ... g(x_q)`` for a scalar profile ``g`` of one point."""
    return SeparableKernel(arity, lambda x: np.asarray(profile(x), dtype=float)[..., None], [1.0],
                           label or f"tensor[{arity}]")


def verify_kernel(kernel: Kernel, control: ControlMeasure, trials: int = 32, seed: int = 0) -> None:
    """Spot-check the ``symmetric`` and ``nonnegative`` flags on random points.

    Raises
    ------
    DomainError
        If a flagged property fails (symmetry is checked for exact equality).
    """
    rng = np.random.default_rng(seed)
    pts = [control.sample_points(rng, trials) for _ in range(kernel.arity)]
    base = np.asarray(kernel(*pts))
    if kernel.nonnegative and np.any(base < 0):
        raise DomainError(f"{kernel.label} flagged nonnegative but takes negative values")
    if kernel.symmetric and not kernel.approximately_symmetric and kernel.arity > 1:
        for perm in itertools.islice(itertools.permutations(range(kernel.arity)), 1, 24):
            if not np.array_equal(np.asarray(kernel(*[pts[p] for p in perm])), base):
                raise DomainError(f"{kernel.label} flagged symmetric but is not")


# -- chaos expansions ----------------------------------------------------------------


@dataclass(frozen=True)
class ChaosExpansion:
    """``F = mean + sum_i I_{q_i}(f_i)`` with strictly increasing orders."""

    mean: float
    terms: tuple

    def __post_init__(self):
        terms = tuple((int(q), f) for q, f in self.terms)
        orders = [q for q, _ in terms]
        if any(q < 1 for q in orders) or any(b <= a for a, b in zip(orders, orders[1:])):
            raise ValueError(f"orders must be >= 1 and strictly increasing, got {orders}")
        for q, f in terms:
            if f.arity != q:
                raise ValueError(f"kernel {f.label} has arity {f.arity} but order {q}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def orders(self) -> list[int]:
        return [q for q, _ in self.terms]

    def centered(self) -> "ChaosExpansion":
        return ChaosExpansion(0.0, self.terms)

    def scaled(self, c: float) -> "ChaosExpansion":
        return ChaosExpansion(c * self.mean, tuple((q, f.scaled(c)) for q, f in self.terms))

    def evaluate(self, cfg: PointConfiguration, control: ControlMeasure,
                 spec: IntegrationSpec = IntegrationSpec()) -> float:
        return self.mean + sum(evaluate_multiple_integral(f, q, cfg, control, spec) for q, f in self.terms)

    def evaluate_batch(self, batch: ConfigurationBatch, spec: IntegrationSpec = IntegrationSpec()) -> np.ndarray:
        out = np.full(batch.reps, self.mean)
        for q, f in self.terms:
            out += multiple_integral_batch(f, q, batch, batch.control, spec)
        return out


# -- pathwise multiple integrals -----------------------------------------------------


def _inner_nodes(control, m, spec):
    x, w = quadrature_nodes(control, m, spec)
    return x, w


def _combos(n: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if n < k:
        return np.zeros((0, k), dtype=np.int64)
    return np.array(list(itertools.combinations(range(n), k)), dtype=np.int64).reshape(-1, k)


def _pathwise(g: Callable, q: int, pts: np.ndarray, control: ControlMeasure, spec: IntegrationSpec,
              batch_shape: tuple = ()) -> np.ndarray:
    """Inclusion-exclusion for a symmetric ``g`` of ``q`` free arguments.

    ``g`` may carry a fixed prefix with leading shape ``batch_shape``; such a
    prefix must be shaped to broadcast against ``(T, K)`` trailing axes.
    """
    total = np.zeros(batch_shape)
    for k in range(q + 1):
        coef = (-1) ** (q - k) * math.comb(q, k) * math.factorial(k)
        combos = _combos(pts.shape[0], k)
        if combos.shape[0] == 0:
            continue
        nodes, w = _inner_nodes(control, q - k, spec)
        K = w.size
        B = int(np.prod(batch_shape)) if batch_shape else 1
        step = max(1, _EVAL_BUDGET // max(1, K * B))
        acc = np.zeros(batch_shape)
        for start in range(0, combos.shape[0], step):
            cb = combos[start:start + step]
            args = [pts[cb[:, a]][:, None, :] for a in range(k)]
            args += [nodes[None, :, b, :] for b in range(q - k)]
            vals = np.asarray(g(*args), dtype=float)
            vals = np.broadcast_to(vals, batch_shape + (cb.shape[0], K))
            acc = acc + (vals @ w).sum(axis=-1)
        total = total + coef * acc
    return total


def _profile_matrix(f: SeparableKernel, pts: np.ndarray) -> np.ndarray:
    return np.asarray(f.profiles(pts), dtype=float).reshape(pts.shape[0], f.coefficients.size)


def _power_sums(a: np.ndarray, axis: int = 0):
    return a.sum(axis), (a * a).sum(axis), (a * a * a).sum(axis)


def _falling_products(p1, p2, p3, k):
    """Sum over ordered distinct k-tuples of the product of the values."""
    if k == 0:
        return np.ones_like(p1)
    if k == 1:
        return p1
    if k == 2:
        return p1 * p1 - p2
    if k == 3:
        return p1 ** 3 - 3.0 * p1 * p2 + 2.0 * p3
    raise MethodUnsupportedError(f"order {k} exceeds the pathwise maximum {MAX_PATHWISE_ORDER}")


def _profile_means(f: SeparableKernel, control: ControlMeasure, spec: IntegrationSpec) -> np.ndarray:
    x, w = quadrature_nodes(control, 1, spec)
    return w @ np.asarray(f.profiles(x[:, 0, :]))


def _separable_charlier(p1, p2, p3, m1, q):
    """``I_q(phi^{(x)q})`` from power sums of ``phi`` over the points and ``m1 = int phi dmu``."""
    out = 0.0
    for k in range(q + 1):
        out = out + (-1) ** (q - k) * math.comb(q, k) * m1 ** (q - k) * _falling_products(p1, p2, p3, k)
    return out


def _check_order(q: int) -> None:
    if q > MAX_PATHWISE_ORDER:
        raise MethodUnsupportedError(f"pathwise I_q supports q <= {MAX_PATHWISE_ORDER}, got {q}")
    if q < 0:
        raise ValueError("order must be non-negative")


def evaluate_multiple_integral(f: Kernel, q: int, cfg: PointConfiguration, control: ControlMeasure,
                               spec: IntegrationSpec = IntegrationSpec()) -> float:
    """Compensated multiple integral ``I_q(f)`` for one realisation.

    Parameters
    ----------
    f : Kernel
        Symmetric kernel of arity ``q``.
    q : int
        Order, at most 3.
    cfg : PointConfiguration
    control : ControlMeasure
        Control of the Poisson measure (the compensator).
    spec : IntegrationSpec
        Rule for the inner integrals.
    """
    _check_order(q)
    if f.arity != q:
        raise ValueError(f"kernel arity {f.arity} does not match order {q}")
    if q == 0:
        return float(f())
    pts = cfg.points
    if isinstance(f, SeparableKernel):
        a = _profile_matrix(f, pts)
        p1, p2, p3 = _power_sums(a)
        m1 = _profile_means(f, control, spec)
        return float(f.coefficients @ _separable_charlier(p1, p2, p3, m1, q))
    return float(_pathwise(f.func, q, pts, control, spec))


def partial_multiple_integrals(f: Kernel, q: int, z: np.ndarray, cfg: PointConfiguration,
                               control: ControlMeasure, spec: IntegrationSpec = IntegrationSpec()) -> np.ndarray:
    """``I_{q-1}(f(z, .))`` for every row of ``z`` (shape ``(M, d)``); returns ``(M,)``.

    ``q * I_{q-1}(f(z, .))`` is the chaos form of the add-one cost of
    ``I_q(f)`` and ``I_{q-1}(f(z, .))`` that of ``-D_z L^{-1} I_q(f)``.
    """
    _check_order(q)
    z = np.asarray(z, dtype=float).reshape(-1, control.dim)
    if q == 1:
        return np.asarray(f(z), dtype=float).reshape(-1)
    pts = cfg.points
    if isinstance(f, SeparableKernel):
        a = _profile_matrix(f, pts)
        p1, p2, p3 = _power_sums(a)
        m1 = _profile_means(f, control, spec)
        inner = _separable_charlier(p1, p2, p3, m1, q - 1)
        return np.asarray(f.profiles(z)) @ (f.coefficients * inner)
    zb = z[:, None, None, :]
    func = f.func
    return _pathwise(lambda *rest: func(zb, *rest), q - 1, pts, control, spec, batch_shape=(z.shape[0],))


def partial_integrals_batch(f: Kernel, q: int, batch: ConfigurationBatch, z: np.ndarray,
                            spec: IntegrationSpec = IntegrationSpec()) -> np.ndarray:
    """``I_{q-1}(f(z, .))`` on replicate ``i`` for every ``z[i, j]``.

    ``z`` has shape ``(reps, M, d)``; the result has shape ``(reps, M)``.
    Separable kernels are handled in one vectorised pass; other kernels fall
    back to :func:`partial_multiple_integrals` replicate by replicate.
    """
    _check_order(q)
    control = batch.control
    z = np.asarray(z, dtype=float)
    R, M = z.shape[:2]
    if q == 1:
        return np.asarray(f(z), dtype=float).reshape(R, M)
    if isinstance(f, SeparableKernel):
        a = _profile_matrix(f, batch.points)
        p1 = batch.per_replicate_sum(a)
        p2 = batch.per_replicate_sum(a * a)
        p3 = batch.per_replicate_sum(a * a * a) if q - 1 >= 3 else np.zeros_like(p1)
        m1 = _profile_means(f, control, spec)
        inner = _separable_charlier(p1, p2, p3, m1, q - 1) * f.coefficients
        return np.einsum("rmj,rj->rm", np.asarray(f.profiles(z)), inner)
    return np.stack([partial_multiple_integrals(f, q, z[i], cfg, control, spec)
                     for i, cfg in enumerate(batch)])


def multiple_integral_batch(f: Kernel, q: int, batch: ConfigurationBatch, control: Optional[ControlMeasure] = None,
                            spec: IntegrationSpec = IntegrationSpec()) -> np.ndarray:
    """``I_q(f)`` for every replicate of a :class:`ConfigurationBatch`."""
    control = control or batch.control
    _check_order(q)
    if isinstance(f, SeparableKernel):
        a = _profile_matrix(f, batch.points)
        p1 = batch.per_replicate_sum(a)
        p2 = batch.per_replicate_sum(a * a)
        p3 = batch.per_replicate_sum(a * a * a) if q >= 3 else np.zeros_like(p1)
        m1 = _profile_means(f, control, spec)
        return _separable_charlier(p1, p2, p3, m1, q) @ f.coefficients
    if q == 1:
        vals = np.asarray(f(batch.points), dtype=float).reshape(-1)
        const = integrate(f.func, control, 1, spec).estimate
        return batch.per_replicate_sum(vals) - const
    if q == 2:
        return _double_integral_batch(f, batch, control, spec)
    return np.array([evaluate_multiple_integral(f, q, cfg, control, spec) for cfg in batch])


def _double_integral_batch(f, batch, control, spec):
    nodes, w = _inner_nodes(control, 1, spec)
    pts = batch.points
    marg = np.empty(pts.shape[0])
    step = max(1, _EVAL_BUDGET // w.size)
    for s in range(0, pts.shape[0], step):
        marg[s:s + step] = np.asarray(f(pts[s:s + step, None, :], nodes[None, :, 0, :])) @ w
    nodes2, w2 = _inner_nodes(control, 2, spec)
    const = float(np.asarray(f(nodes2[:, 0, :], nodes2[:, 1, :])) @ w2)
    pairs = _pair_sums(f, batch)
    return pairs - 2.0 * batch.per_replicate_sum(marg) + const


def _pair_sums(f, batch: ConfigurationBatch) -> np.ndarray:
    """Sum of ``f`` over ordered pairs of distinct points, per replicate."""
    padded, mask = batch.padded()
    R, W, _ = padded.shape
    out = np.zeros(R)
    if W < 2:
        return out
    step = max(1, _EVAL_BUDGET // (W * W))
    eye = np.eye(W, dtype=bool)
    for s in range(0, R, step):
        p = padded[s:s + step]
        m = mask[s:s + step]
        vals = np.asarray(f(p[:, :, None, :], p[:, None, :, :]), dtype=float)
        valid = m[:, :, None] & m[:, None, :] & ~eye
        out[s:s + step] = np.where(valid, vals, 0.0).sum(axis=(1, 2))
    return out


# -- U-statistics --------------------------------------------------------------------


def ustat_evaluate(h: Kernel, k: int, cfg: PointConfiguration) -> float:
    """``sum`` of ``h`` over ordered ``k``-tuples of distinct points of ``cfg``."""
    if h.arity != k:
        raise ValueError("kernel arity must equal the U-statistic order")
    n = len(cfg)
    if n < k:
        return 0.0
    pts = cfg.points
    if isinstance(h, SeparableKernel) and k <= 3:
        a = _profile_matrix(h, pts)
        p1, p2, p3 = _power_sums(a)
        return float(h.coefficients @ _falling_products(p1, p2, p3, k))
    combos = _combos(n, k)
    total = 0.0
    step = max(1, _EVAL_BUDGET // max(1, k))
    for s in range(0, combos.shape[0], step):
        cb = combos[s:s + step]
        total += float(np.sum(h(*[pts[cb[:, a]] for a in range(k)])))
    return math.factorial(k) * total


def ustat_batch(h: Kernel, k: int, batch: ConfigurationBatch) -> np.ndarray:
    """:func:`ustat_evaluate` for every replicate of a batch (``k <= 2`` vectorised)."""
    if isinstance(h, SeparableKernel) and k <= 3:
        a = _profile_matrix(h, batch.points)
        p1 = batch.per_replicate_sum(a)
        p2 = batch.per_replicate_sum(a * a)
        p3 = batch.per_replicate_sum(a * a * a)
        return _falling_products(p1, p2, p3, k) @ h.coefficients
    if k == 1:
        return batch.per_replicate_sum(np.asarray(h(batch.points)).reshape(-1))
    if k == 2:
        return _pair_sums(h.func, batch)
    return np.array([ustat_evaluate(h, k, cfg) for cfg in batch])


def hoeffding_kernels(h: Kernel, k: int, i: int, control: ControlMeasure,
                      spec: IntegrationSpec = IntegrationSpec(), grid_size: Optional[int] = None) -> Kernel:
    """Chaos kernel ``g^(i) = C(k, i) int h(z_1..z_i, y) dmu^(k-i)(y)`` of a U-statistic.

    Parameters
    ----------
    grid_size : int, optional
        When given, inner integrals are tabulated once on a regular grid of
        the support (``grid_size`` points per axis) and evaluated by
        multilinear interpolation. By default they are computed directly
        with the shared node set, which keeps pathwise identities exact.
    """
    if not 1 <= i <= k:
        raise ValueError("need 1 <= i <= k")
    if i == k:
        return h
    nodes, w = _inner_nodes(control, k - i, spec)
    c = float(math.comb(k, i))
    func = h.func
    K = w.size

    def direct(*zs):
        zs = [np.asarray(z, dtype=float) for z in zs]
        shape = np.broadcast_shapes(*[z.shape[:-1] for z in zs])
        flat = [np.broadcast_to(z, shape + z.shape[-1:]).reshape(-1, z.shape[-1]) for z in zs]
        size = flat[0].shape[0]
        out = np.empty(size)
        step = max(1, _EVAL_BUDGET // K)
        for s in range(0, size, step):
            args = [z[s:s + step, None, :] for z in flat] + [nodes[None, :, b, :] for b in range(k - i)]
            out[s:s + step] = np.asarray(func(*args)) @ w
        return c * out.reshape(shape)

    label = f"g^({i})[{h.label}]"
    if grid_size is None:
        return Kernel(i, direct, h.symmetric, h.nonnegative, label)
    axes = [np.linspace(lo, hi, grid_size) for lo, hi in zip(control.lower, control.upper)] * i
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    d = control.dim
    table = direct(*[mesh[..., j * d:(j + 1) * d] for j in range(i)])
    interp = RegularGridInterpolator(axes, table)

    def cached(*zs):
        zs = [np.asarray(z, dtype=float) for z in zs]
        shape = np.broadcast_shapes(*[z.shape[:-1] for z in zs])
        flat = np.concatenate([np.broadcast_to(z, shape + z.shape[-1:]) for z in zs], axis=-1)
        return interp(flat.reshape(-1, flat.shape[-1])).reshape(shape)

    return Kernel(i, cached, h.symmetric, h.nonnegative, label + "~grid")


def ustat_mean(h: Kernel, k: int, control: ControlMeasure, spec: IntegrationSpec = IntegrationSpec()) -> float:
    """``E U = int h dmu^k`` (multivariate Mecke formula)."""
    return integrate(h.func, control, k, spec).estimate


def chaos_variance(expansion: ChaosExpansion, control: ControlMeasure,
                   spec: IntegrationSpec = IntegrationSpec()) -> float:
    """``sum_i q_i! ||f_i||^2``."""
    return float(sum(math.factorial(q) * l2_norm(f, control, spec) ** 2 for q, f in expansion.terms))


def check_degeneracy(h: Kernel, control: ControlMeasure, grid: Sequence, tol: Optional[float] = None,
                     spec: IntegrationSpec = IntegrationSpec()) -> bool:
    """True iff ``|int h(x, y) p(x) dx| <= tol`` for every ``y`` in ``grid``.

    ``tol`` defaults to ``spec.tolerance`` under quadrature and to four
    standard errors per grid point under Monte Carlo.
    """
    if h.arity != 2:
        raise ValueError("degeneracy is checked for order-2 kernels")
    unit = control.with_intensity(1.0)
    y = np.asarray(grid, dtype=float).reshape(-1, control.dim)
    nodes, w = quadrature_nodes(unit, 1, spec)
    vals = np.asarray(h(nodes[None, :, 0, :], y[:, None, :]), dtype=float)
    marg = vals @ w
    if spec.resolve(control.dim) == "tensor":
        bound = spec.tolerance if tol is None else tol
        return bool(np.all(np.abs(marg) <= bound))
    se = vals.std(axis=1, ddof=1) / math.sqrt(w.size)
    bound = 4.0 * se if tol is None else tol
    return bool(np.all(np.abs(marg) <= bound))
