"""Contraction norms and the degenerate U-statistic bound for the cosine kernel family."""

import math

from poisson_stein import ControlMeasure, cosine_family, dejong_bound, fourth_moment_from_contractions
from poisson_stein.scenarios import cosine_spec

print(f"{'n':>5} {'m':>3} {'bound':>8} {'||f*11f||':>10} {'E F^4':>8}")
for n in (16, 64, 256, 1024):
    m = math.ceil(math.sqrt(n))
    control = ControlMeasure.uniform([0.0], [1.0], float(n))
    spec = cosine_spec(m)
    report = dejong_bound(cosine_family(m), control, spec)
    f = cosine_family(m).scaled(1.0 / math.sqrt(2.0 * n * n))
    ef4 = fourth_moment_from_contractions(f, control, spec).value if m <= 16 else float("nan")
    print(f"{n:5d} {m:3d} {report.bound_value:8.4f} {report.contraction_norms[(1, 1, 1, 1)]:10.4f} {ef4:8.4f}")
