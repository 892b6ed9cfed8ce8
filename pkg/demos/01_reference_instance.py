# A walk through the selection rules on a three-equation system.
#
# A has rows (1,0), (0,1), (1,1) and b = (1,2,3), so x* = (1,2).
# From x0 = 0 the residual is r = b, and every rule below looks at it
# differently: by raw residual, by distance to the hyperplane, or by a
# threshold that mixes the largest entry with a norm-weighted average.

import numpy as np

from greedy_kaczmarz import IterState, RowMatrix, gbk_step, gdbk_eta, gmbk_step, kaczmarz_step
from greedy_kaczmarz.analysis import grk_factor, grmk_first_factor, metrics
from greedy_kaczmarz.selection import grk_set, grk_threshold, grmk_set, grmk_threshold

A = RowMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
b = np.array([1.0, 2.0, 3.0])
x_star = np.array([1.0, 2.0])
state = IterState.start(A, b)
r = state.r

# residual threshold: half the largest |r_i|^2 plus half the norm-weighted mean
delta = grmk_threshold(r, A)
print("delta =", delta, "-> rows", list(grmk_set(r, A, delta)))

# distance threshold: the same mix, but over |r_i|^2 / ||A_i||^2
eps = grk_threshold(r, A)
print("eps   =", eps, "-> rows", list(grk_set(r, A, eps)))

# Only row 2 (0-based) passes the residual test, so the first GRMK step is forced.
s1 = kaczmarz_step(state, 2, A, b)
res, rr = metrics(s1.x, x_star, s1.r, b)
print("after one GRMK step x =", s1.x, f"RES = {res:.3f}, RR = {rr:.4f}")

# The block version projects onto the whole working set at once. Here the
# set is a single row, so it matches the single-row step.
print("GMBK step           x =", gmbk_step(state, A, b).x)

# The distance-threshold block with the eta that reproduces eps picks
# rows 1 and 2, which already pin down x*.
eta = gdbk_eta(state, A)
print(f"GDBK eta = {eta:.4f}, x =", gbk_step(state, A, b, eta=eta).x)

# Per-step contraction factors for this matrix
print(f"first-step GRMK factor {grmk_first_factor(A, [2]):.4f}, GRK factor {grk_factor(A):.4f}")
