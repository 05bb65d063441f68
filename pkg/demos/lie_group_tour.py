"""A short tour of the SE_{1+n}(3) toolkit.

Builds a pose-plus-map element, moves it with the closed-form exponential,
and checks a few identities against dense matrix arithmetic.
"""

import math

import numpy as np

from slamobs.lie import (
    AlgebraElement,
    adjoint,
    algebra_exp,
    canonical_r,
    compose_psi,
    group_inverse,
    group_mul,
    project_upsilon,
    rodrigues,
)

landmarks = np.array([[10.0, 0.0, -10.0, 0.0],
                      [0.0, 15.0, 0.0, -10.0],
                      [0.0, 0.0, 0.0, 0.0]])

# a robot at (1, 2, 0) facing 90 degrees left, holding a map of four landmarks
X = compose_psi(rodrigues(math.pi / 2, [0, 0, 1]), [1.0, 2.0, 0.0], landmarks)
print("group element as a dense 8x8 matrix:")
print(np.array2string(X.as_matrix(), precision=2, suppress_small=True))

# the inverse is block-wise; multiplying back gives the identity
err = np.linalg.norm(group_mul(X, group_inverse(X)).as_matrix() - np.eye(8))
print(f"\n|X X^-1 - I| = {err:.1e}")

# landmark readings in the body frame are X^-1 r_i
for i in range(4):
    beta = group_inverse(X).as_matrix() @ canonical_r(i + 1, 4)
    print(f"landmark {i + 1} seen at {np.round(beta[:3], 3)}")

# one second of yaw-rate 0.3 and forward speed 2; landmarks do not move
V = AlgebraElement.from_vectors([0, 0, 0.3], [2, 0, 0], n=4)
X1 = group_mul(X, algebra_exp(V, 1.0))
print(f"\nposition after 1 s: {np.round(X1.p, 4)}  (landmarks unchanged: {np.array_equal(X1.eta, X.eta)})")

# adjoint against the dense conjugation X V X^-1
dense = X.as_matrix() @ V.as_matrix() @ group_inverse(X).as_matrix()
print(f"|Ad_X V - X V X^-1| = {np.linalg.norm(adjoint(X, V).as_matrix() - dense):.1e}")

# projecting an arbitrary matrix onto the algebra
B = np.random.default_rng(0).standard_normal((8, 8))
P = project_upsilon(B)
print(f"projection keeps the top-right block: {np.array_equal(P.v, B[:3, 3])}, "
      f"rotation part is skew: {np.allclose(P.as_matrix()[:3, :3], -P.as_matrix()[:3, :3].T)}")
