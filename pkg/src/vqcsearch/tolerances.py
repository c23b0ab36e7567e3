"""Shared numeric tolerances.

Centralised so that the simulator, noise channels and scoring code agree on
what counts as "equal" in double precision.
"""

# Statevector norm drift tolerated after any gate sequence.
NORM_ATOL = 1e-10

# Density-matrix trace drift tolerated through channel applications.
TRACE_ATOL = 1e-9

# Probabilities this far below zero are treated as roundoff, not errors.
PROB_FLOOR = -1e-12

# Symmetry / hermiticity checks on similarity and density matrices.
SYM_ATOL = 1e-9
