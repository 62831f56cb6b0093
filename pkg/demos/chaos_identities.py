"""Pathwise multiple integrals: the add-one cost identity and the Hoeffding decomposition."""

import numpy as np

from poisson_stein import (ControlMeasure, IntegrationSpec, Kernel, PointConfiguration, evaluate_multiple_integral,
                           hoeffding_kernels, indicator_distance, partial_multiple_integrals, sample_configuration,
                           ustat_evaluate, ustat_mean)

control = ControlMeasure.uniform([0.0], [1.0], 25.0)
spec = IntegrationSpec(nodes=16, panels=40)
cfg = sample_configuration(control, seed=1)
print(f"configuration with {len(cfg)} points")

f = Kernel(2, lambda x, y: np.exp(-4.0 * (x[..., 0] - y[..., 0]) ** 2))
z = np.array([0.37])
diff = (evaluate_multiple_integral(f, 2, cfg.extended(z), control, spec)
        - evaluate_multiple_integral(f, 2, cfg, control, spec))
chaos = 2.0 * partial_multiple_integrals(f, 2, z[None], cfg, control, spec)[0]
print(f"D_z I_2(f) = {diff:.12f}   2 I_1(f(z, .)) = {chaos:.12f}")

h = indicator_distance(0.1)
g1 = hoeffding_kernels(h, 2, 1, control, spec)
recon = (ustat_mean(h, 2, control, spec) + evaluate_multiple_integral(g1, 1, cfg, control, spec)
         + evaluate_multiple_integral(h, 2, cfg, control, spec))
print(f"pair count U = {ustat_evaluate(h, 2, cfg):.0f}   EU + I_1(g1) + I_2(h) = {recon:.9f}")
