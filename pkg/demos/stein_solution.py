"""The bounded Stein solution for indicator test functions and its three bounds."""

import numpy as np

from poisson_stein import SteinFunction
from poisson_stein.stein import SUP_BOUND, increment_margin, stein_derivative, stein_residual

w = np.linspace(-8.0, 8.0, 16001)
rng = np.random.default_rng(0)
for x in (-2.0, -0.5, 0.0, 0.5, 2.0):
    s = SteinFunction(x)
    margin = increment_margin(s, rng.uniform(-8, 8, 2000), rng.uniform(-2, 2, 2000), rng.uniform(-2, 2, 2000))
    print(f"x={x:+.1f}  max f={s(w).max():.6f} (<= {SUP_BOUND:.6f})  max|f'|={np.abs(stein_derivative(s, w)).max():.4f}"
          f"  max residual={np.abs(stein_residual(s, w)).max():.1e}  min increment slack={margin.min():.3e}")
