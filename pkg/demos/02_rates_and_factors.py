# How tight are the per-step contraction factors?
#
# Averaged over seeded trials, the squared error after k steps gives an
# empirical rate rho_k = (E err_k / err_0)^(1/k). The closed-form factors
# bound it from above, and on dense uniform matrices they are far from tight.
# compare_rates writes the same table the CLI's --rates-out produces.

import math

from greedy_kaczmarz import StopCriteria
from greedy_kaczmarz.cli import RunConfig, compare_rates
from greedy_kaczmarz.problems import ProblemSpec
from greedy_kaczmarz.selection import SelectionRule

config = RunConfig(
    problem=ProblemSpec("uniform", 800, 80),
    methods=[SelectionRule("grk"), SelectionRule("grmk")],
    stop=StopCriteria(tol=1e-300, max_iters=120),
    trials=20,
    seed=3,
)
rows = compare_rates(config)

print(f"{'k':>4} {'GRK factor':>11} {'GRMK factor':>12} {'rho GRK':>9} {'rho GRMK':>9}")
for k, grk_b, grmk_b, grk_rho, grmk_rho in rows[::20] + rows[-1:]:
    gb = "" if math.isnan(grmk_b) else f"{grmk_b:.6f}"
    print(f"{k:4d} {grk_b:11.6f} {gb:>12} {grk_rho:9.5f} {grmk_rho:9.5f}")

# The two empirical rates sit on top of each other, while the GRMK factor is
# the looser of the two bounds: it carries an extra ratio of row norms.
