"""Empirical Kolmogorov distances and log-log slopes for the pairwise and OU-Levy functionals."""

from poisson_stein import build_pairwise, run_rate_study
from poisson_stein.scenarios import SCENARIO_BUILDERS

pairwise = run_rate_study(build_pairwise, [16, 32, 64, 128, 256, 512, 1024], 10_000, seed=6, bootstrap=50)
print("pairwise pair count, r = 0.1 on [0, 1]")
print(pairwise.to_csv())

ou = run_rate_study(SCENARIO_BUILDERS["ou_levy"], [25, 100, 400], 100_000, seed=7, scale_param="T",
                    fixed={"functional": "M", "nu": "skewed"}, bootstrap=50)
print("OU-Levy time average M_T with skewed jump measure")
print(ou.to_csv())
