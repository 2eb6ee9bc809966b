import numpy as np


def points_in_rectangle(P, label, n, rng, shrink=0.02):
    """Uniform points strictly inside a partition rectangle, as torus coordinates."""
    u0, u1, s0, s1 = P[label].bounds
    du, ds = (u1 - u0) * shrink, (s1 - s0) * shrink
    us = np.column_stack([rng.uniform(u0 + du, u1 - du, n), rng.uniform(s0 + ds, s1 - ds, n)])
    return np.mod(P.A.from_eigen(us), 1.0)


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))
