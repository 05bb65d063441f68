"""Numerical tolerances shared across the package.

Kept in one table so tests and runtime validation agree on the same values.
"""

ROTATION_TOL = 1e-9          # ||R^T R - I||_F and |det R - 1| for validation
UNIT_AXIS_TOL = 1e-9         # | ||axis|| - 1 | for Rodrigues axes
REORTHO_TOL = 1e-9           # drift above which R-hat is re-projected
JACOBIAN_TAYLOR_TOL = 1e-6   # ||omega|| dt below which the series Jacobian is used
GROUP_IDENTITY_TOL = 1e-12   # X X^-1 = I
SYMMETRY_TOL = 1e-14         # cost matrix symmetry
PSD_TOL = 1e-12              # smallest allowed eigenvalue of the cost matrix
FLOW_SLACK = 1e-8            # per-step Lyapunov increase tolerated from discretization
JUMP_SLACK = 1e-9            # tolerance on the guaranteed jump decrease
