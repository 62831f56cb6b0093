"""Empirical distribution diagnostics: Phi, Kolmogorov distance and rate fits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .errors import DomainError, EmptySampleError

__all__ = [
    "normal_cdf",
    "SampleSet",
    "KolmogorovResult",
    "kolmogorov_distance",
    "dkw_band",
    "RateRow",
    "RateTable",
    "rate_slope",
]

DKW_LEVEL = 0.99


def normal_cdf(x):
    """Standard normal distribution function (``erfc``-based, accurate in both tails)."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class SampleSet:
    """Finite sample of a real statistic plus a note on how it was seeded."""

    values: np.ndarray
    seed_provenance: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise DomainError("sample contains non-finite values")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size


class KolmogorovResult(NamedTuple):
    distance: float
    dkw_band: float


def dkw_band(n: int, level: float = DKW_LEVEL) -> float:
    """Half-width ``sqrt(ln(2/alpha) / (2n))`` of the DKW confidence band."""
    return math.sqrt(math.log(2.0 / (1.0 - level)) / (2.0 * n))


def kolmogorov_distance(samples) -> KolmogorovResult:
    """``sup_x |F_N(x) - Phi(x)|`` and the 99% DKW band.

    Raises
    ------
    EmptySampleError
        For an empty sample.
    """
    vals = samples.values if isinstance(samples, SampleSet) else SampleSet(samples).values
    n = vals.size
    if n == 0:
        raise EmptySampleError("Kolmogorov distance of an empty sample")
    cdf = ndtr(np.sort(vals))
    i = np.arange(1, n + 1)
    dist = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    return KolmogorovResult(dist, dkw_band(n))


class RateRow(NamedTuple):
    scale: float
    distance: float
    stderr: float = 0.0


@dataclass
class RateTable:
    """Distances (or bounds) against a scale parameter with a log-log slope."""

    rows: list = field(default_factory=list)
    slope: float = float("nan")
    slope_stderr: float = float("nan")

    def __post_init__(self):
        self.rows = [RateRow(*map(float, r)) for r in self.rows]
        scales = [r.scale for r in self.rows]
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise DomainError("scales must be strictly increasing")

    def fit(self) -> "RateTable":
        self.slope, self.slope_stderr = rate_slope(self)
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scale", "distance", "stderr"])
        for r in self.rows:
            writer.writerow([repr(r.scale), repr(r.distance), repr(r.stderr)])
        buf.write(f"# slope={self.slope!r} stderr={self.slope_stderr!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RateTable":
        lines = text.splitlines()
        trailer = [ln for ln in lines if ln.startswith("#")]
        body = [ln for ln in lines if ln and not ln.startswith("#")]
        reader = csv.DictReader(body)
        table = cls([(r["scale"], r["distance"], r["stderr"]) for r in reader])
        if trailer:
            parts = dict(p.split("=") for p in trailer[-1][1:].split())
            table.slope, table.slope_stderr = float(parts["slope"]), float(parts["stderr"])
        return table


def rate_slope(table: RateTable) -> tuple[float, float]:
    """Least-squares slope of ``log(distance)`` on ``log(scale)`` and its standard error.

    Raises
    ------
    DomainError
        With fewer than three rows or nonpositive entries.
    """
    if len(table.rows) < 3:
        raise DomainError("a slope needs at least three rows")
    s = np.array([r.scale for r in table.rows])
    d = np.array([r.distance for r in table.rows])
    if np.any(s <= 0) or np.any(d <= 0):
        raise DomainError("scales and distances must be positive for a log-log fit")
    fit = stats.linregress(np.log(s), np.log(d))
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return float(fit.slope), stderr
