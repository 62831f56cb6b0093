"""Poisson random measures: sampling, functionals and difference operators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, DuplicatePointError
from .measure_space import ControlMeasure

__all__ = [
    "PointConfiguration",
    "ConfigurationBatch",
    "Functional",
    "sample_configuration",
    "sample_batch",
    "add_one_cost",
    "second_difference",
    "point_count",
]


class PointConfiguration:
    """Immutable finite set of points in R^d (one realisation of a Poisson measure).

    Parameters
    ----------
    points : array_like, shape (N, d)
    control : ControlMeasure, optional
        Generating control measure. When given, every point must lie in its
        support and added points are checked against it.
    """

    __slots__ = ("_points", "control")

    def __init__(self, points, control: Optional[ControlMeasure] = None, dim: Optional[int] = None,
                 check: bool = True):
        pts = np.asarray(points, dtype=float)
        if dim is None:
            dim = control.dim if control is not None else (pts.shape[-1] if pts.ndim == 2 else 1)
        pts = pts.reshape(-1, dim)
        if check:
            if control is not None and pts.shape[0] and not np.all(control.contains(pts)):
                raise DomainError("configuration has points outside the control support")
            _reject_duplicates(pts)
        pts = pts.copy() if pts.flags.writeable else pts
        pts.setflags(write=False)
        self._points = pts
        self.control = control

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __repr__(self) -> str:
        return f"PointConfiguration(n={len(self)}, dim={self.dim})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PointConfiguration) and np.array_equal(self._points, other._points)

    __hash__ = None

    def extended(self, *new_points) -> "PointConfiguration":
        """Configuration with ``new_points`` appended (``eta + delta_z1 + ...``)."""
        extra = np.asarray(new_points, dtype=float).reshape(-1, self.dim)
        if self.control is not None and not np.all(self.control.contains(extra)):
            raise DomainError("added point lies outside the control support")
        merged = np.concatenate([self._points, extra])
        _reject_duplicates(merged)
        return PointConfiguration(merged, self.control, self.dim, check=False)


def _reject_duplicates(pts: np.ndarray) -> None:
    if pts.shape[0] < 2:
        return
    rows = np.ascontiguousarray(pts).view(np.dtype((np.void, pts.dtype.itemsize * pts.shape[1])))
    if np.unique(rows).size != pts.shape[0]:
        raise DuplicatePointError("configuration contains bitwise-identical points")


@dataclass(frozen=True)
class Functional:
    """A deterministic real functional ``F(eta)`` of a point configuration."""

    evaluate: Callable[[PointConfiguration], float]
    label: str = ""

    def __call__(self, cfg: PointConfiguration) -> float:
        return float(self.evaluate(cfg))

    def __add__(self, other: "Functional") -> "Functional":
        return Functional(lambda c: self(c) + other(c), f"({self.label} + {other.label})")

    def __mul__(self, other) -> "Functional":
        if isinstance(other, Functional):
            return Functional(lambda c: self(c) * other(c), f"({self.label} * {other.label})")
        a = float(other)
        return Functional(lambda c: a * self(c), f"{a:g}*{self.label}")

    __rmul__ = __mul__


point_count = Functional(lambda cfg: float(len(cfg)), "count")


def sample_configuration(control: ControlMeasure, seed) -> PointConfiguration:
    """One realisation of the Poisson measure with control ``control``.

    Draws ``N ~ Poisson(n)`` and then ``N`` i.i.d. points with density ``p``.
    ``seed`` may be an integer or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(np.random.SeedSequence(int(seed)))
    count = int(rng.poisson(control.intensity))
    return PointConfiguration(control.sample_points(rng, count), control, control.dim, check=False)


@dataclass(frozen=True)
class ConfigurationBatch:
    """Many configurations stored flat: ``points[offsets[i]:offsets[i+1]]`` is replicate ``i``."""

    points: np.ndarray
    counts: np.ndarray
    control: ControlMeasure

    @property
    def reps(self) -> int:
        return int(self.counts.size)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)])

    @property
    def owner(self) -> np.ndarray:
        """Replicate index of every stored point."""
        return np.repeat(np.arange(self.reps), self.counts)

    def configuration(self, i: int) -> PointConfiguration:
        off = self.offsets
        return PointConfiguration(self.points[off[i]:off[i + 1]], self.control, self.control.dim, check=False)

    def __iter__(self):
        off = self.offsets
        for i in range(self.reps):
            yield PointConfiguration(self.points[off[i]:off[i + 1]], self.control, self.control.dim, check=False)

    def per_replicate_sum(self, values: np.ndarray) -> np.ndarray:
        """Sum ``values`` (one row per stored point) within each replicate."""
        values = np.asarray(values, dtype=float)
        owner = self.owner
        if values.ndim == 1:
            return np.bincount(owner, weights=values, minlength=self.reps)
        out = np.zeros((self.reps,) + values.shape[1:])
        np.add.at(out, owner, values)
        return out

    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Points as ``(reps, max_count, d)`` plus a boolean validity mask."""
        width = int(self.counts.max(initial=0))
        d = self.control.dim
        out = np.zeros((self.reps, width, d))
        mask = np.arange(width)[None, :] < self.counts[:, None]
        out[mask] = self.points
        return out, mask


def sample_batch(control: ControlMeasure, reps: int, rng: np.random.Generator) -> ConfigurationBatch:
    """Draw ``reps`` independent configurations in one vectorised call."""
    counts = rng.poisson(control.intensity, size=reps).astype(np.int64)
    pts = control.sample_points(rng, int(counts.sum()))
    return ConfigurationBatch(pts, counts, control)


def _check_support(cfg: PointConfiguration, *zs) -> None:
    if cfg.control is None:
        return
    for z in zs:
        if not np.all(cfg.control.contains(np.asarray(z, dtype=float).reshape(-1, cfg.dim))):
            raise DomainError(f"point {z!r} lies outside the control support")


def add_one_cost(F: Functional, cfg: PointConfiguration, z) -> float:
    """``D_z F = F(eta + delta_z) - F(eta)``."""
    _check_support(cfg, z)
    return F(cfg.extended(z)) - F(cfg)


def second_difference(F: Functional, cfg: PointConfiguration, z1, z2) -> float:
    """``D_{z2} D_{z1} F``: the iterated add-one cost."""
    _check_support(cfg, z1, z2)
    return F(cfg.extended(z1, z2)) - F(cfg.extended(z1)) - F(cfg.extended(z2)) + F(cfg)
