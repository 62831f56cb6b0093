"""Contraction kernels, canonical symmetrisation and contraction norms.

``contract(f1, f2, (r, l))`` identifies ``r`` arguments of ``f1`` and
``f2`` and integrates ``l`` of them against the control measure::

    (f1 *_r^l f2)(gamma, alpha, beta)
        = int f1(y, gamma, alpha) f2(y, gamma, beta) dmu^l(y)

with ``gamma`` the ``r - l`` shared but unintegrated arguments, ``alpha``
the ``q1 - r`` free arguments of ``f1`` and ``beta`` those of ``f2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .chaos import Kernel
from .errors import ContractionIndexError
from .measure_space import ControlMeasure, IntegrationSpec, iter_quadrature_nodes, quadrature_nodes

__all__ = ["ContractionIndex", "contract", "symmetrize", "contraction_norm", "EXACT_SYMMETRIZATION_MAX"]

EXACT_SYMMETRIZATION_MAX = 6
SAMPLED_PERMUTATIONS = 720
_BUDGET = 1 << 22


@dataclass(frozen=True)
class ContractionIndex:
    """The pair ``(r, l)`` with ``0 <= l <= r``."""

    r: int
    l: int

    def validate(self, q1: int, q2: int) -> None:
        if not 0 <= self.l <= self.r <= min(q1, q2):
            raise ContractionIndexError(
                f"need 0 <= l <= r <= min(q1, q2); got r={self.r}, l={self.l}, q1={q1}, q2={q2}")

    def arity(self, q1: int, q2: int) -> int:
        return q1 + q2 - self.r - self.l


def _as_index(idx) -> ContractionIndex:
    return idx if isinstance(idx, ContractionIndex) else ContractionIndex(*idx)


def contract(f1: Kernel, f2: Kernel, idx, control: ControlMeasure,
             spec: IntegrationSpec = IntegrationSpec()) -> Kernel:
    """The contraction kernel ``f1 *_r^l f2`` of arity ``q1 + q2 - r - l``.

    ``l = 0`` performs identification only; ``r = l = 0`` is the tensor
    product. Inner integrals use the shared node set for ``mu^l``, so the
    result is exactly bilinear in ``(f1, f2)``.

    Raises
    ------
    ContractionIndexError
        If ``idx`` is not admissible for the two arities.
    """
    idx = _as_index(idx)
    q1, q2 = f1.arity, f2.arity
    idx.validate(q1, q2)
    r, l = idx.r, idx.l
    g = r - l
    a1, a2 = q1 - r, q2 - r
    arity = g + a1 + a2
    label = f"({f1.label} *_{r}^{l} {f2.label})"
    fa, fb = f1.func, f2.func

    if l == 0:
        def func(*xs):
            shared, alpha, beta = xs[:g], xs[g:g + a1], xs[g + a1:]
            return fa(*shared, *alpha) * fb(*shared, *beta)

        return Kernel(arity, func, symmetric=arity <= 1, label=label)

    nodes, w = quadrature_nodes(control, l, spec)
    K = w.size
    inner = [nodes[:, j, :] for j in range(l)]

    def func(*xs):
        xs = [np.asarray(x, dtype=float) for x in xs]
        if not xs:
            return np.asarray(fa(*inner) * fb(*inner)) @ w
        shape = np.broadcast_shapes(*[x.shape[:-1] for x in xs])
        flat = [np.broadcast_to(x, shape + x.shape[-1:]).reshape(-1, x.shape[-1]) for x in xs]
        size = flat[0].shape[0]
        out = np.empty(size)
        step = max(1, _BUDGET // K)
        for s in range(0, size, step):
            cur = [x[s:s + step, None, :] for x in flat]
            shared, alpha, beta = cur[:g], cur[g:g + a1], cur[g + a1:]
            vals = fa(*inner, *shared, *alpha) * fb(*inner, *shared, *beta)
            out[s:s + step] = np.broadcast_to(vals, (cur[0].shape[0], K)) @ w
        return out.reshape(shape)

    return Kernel(arity, func, symmetric=arity <= 1, label=label)


def _permutations(m: int) -> tuple[list[tuple[int, ...]], bool]:
    if m <= EXACT_SYMMETRIZATION_MAX:
        return list(itertools.permutations(range(m))), False
    rng = np.random.default_rng(np.random.SeedSequence([m, 0x5E7]))
    return [tuple(rng.permutation(m)) for _ in range(SAMPLED_PERMUTATIONS)], True


def symmetrize(f: Kernel) -> Kernel:
    """Canonical symmetrisation ``(1/m!) sum_pi f o pi``.

    For arity above six, a fixed deterministic sample of 720 permutations is
    averaged and the result is flagged ``approximately_symmetric``.
    """
    m = f.arity
    if f.symmetric or m <= 1:
        return f
    perms, approx = _permutations(m)
    func = f.func
    scale = 1.0 / len(perms)

    def sym(*xs):
        total = 0.0
        for p in perms:
            total = total + func(*[xs[i] for i in p])
        return scale * total

    return Kernel(m, sym, symmetric=True, nonnegative=f.nonnegative, label=f"sym({f.label})",
                  approximately_symmetric=approx)


def contraction_norm(f1: Kernel, f2: Kernel, idx, control: ControlMeasure,
                     spec: IntegrationSpec = IntegrationSpec()) -> float:
    """``||f1 *_r^l f2||`` in ``L^2(mu^{q1 + q2 - r - l})``.

    When the contraction has arity zero it is a number and its absolute
    value is returned.
    """
    idx = _as_index(idx)
    kern = contract(f1, f2, idx, control, spec)
    if kern.arity == 0:
        return abs(float(kern()))
    total = 0.0
    chunk = max(1, _BUDGET // max(1, _inner_size(control, idx.l, spec)))
    for x, w in iter_quadrature_nodes(control, kern.arity, spec, chunk=chunk):
        vals = np.asarray(kern(*[x[:, j, :] for j in range(kern.arity)]))
        total += float(np.dot(w, vals * vals))
    return math.sqrt(max(total, 0.0))


def _inner_size(control: ControlMeasure, l: int, spec: IntegrationSpec) -> int:
    if l == 0:
        return 1
    return quadrature_nodes(control, l, spec)[1].size
