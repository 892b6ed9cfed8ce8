# Solving a rank-deficient system read from a Matrix Market file.
#
# The bundled mk9-b3.mtx is the 945 x 1260 boundary matrix of the matching
# complex of K_9 (rank 875). With b in the range of A the iteration converges
# to the minimum-norm solution, so RR goes to zero and RES is measured
# against A^+ b.

import numpy as np

from greedy_kaczmarz import StopCriteria, solve
from greedy_kaczmarz.linalg import lambda_min_pos, min_norm_solution
from greedy_kaczmarz.problems import mk9_b3_path, read_matrix_market

A = read_matrix_market(mk9_b3_path())
print(A, "smallest positive eigenvalue of A^T A:", round(lambda_min_pos(A), 4))

rng = np.random.default_rng(0)
b = A.matvec(rng.standard_normal(A.n))
x_star = min_norm_solution(A, b)

for method in ("grmk", "grk", "gmbk", "gdbk"):
    rep = solve(method, A, b, x_star=x_star, rng=1, stop=StopCriteria(metric="rr", tol=1e-10))
    print(f"{method:>5}: {rep.iterations:6d} iterations, {rep.elapsed_s:6.2f}s, "
          f"RR {rep.rr[-1]:.1e}, RES {rep.res[-1]:.1e}")

# Every row of this matrix has four entries of +-1, so all row norms are equal.
# The residual and distance thresholds then select the same rows with the same
# probabilities, and with a shared seed GRMK and GRK follow the same path.
