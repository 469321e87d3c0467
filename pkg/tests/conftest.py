"""Shared helpers: brute-force maxima over ellipsoid boundaries.

These oracles avoid the analytic machinery entirely (no eigendecomposition,
no matrix inverse): boundary points come from normalizing ray directions,
x = alpha * u / sqrt(u^T E u), and the maximum is refined by re-sampling in a
shrinking cap around the running argmax.
"""

import numpy as np


def sphere_directions(n, count, rng):
    g = rng.standard_normal((count, n))
    nrm = np.linalg.norm(g, axis=1)
    nrm[nrm == 0.0] = 1.0
    return g / nrm[:, None]


def boundary_points(E, alpha, dirs):
    s = np.einsum("ij,jk,ik->i", dirs, E, dirs)
    return alpha * dirs / np.sqrt(s)[:, None]


def brute_force_max(fvec, E, alpha, n, budget=100_000, seed=0):
    """Two-stage sampled maximum of an even function over the boundary of E_alpha.

    fvec maps an (N, n) batch of points to (N,) values.  Returns the best value
    found within the sample budget.
    """
    rng = np.random.default_rng(seed)
    n_global = budget // 2
    dirs = sphere_directions(n, n_global, rng)
    vals = fvec(boundary_points(E, alpha, dirs))
    best_i = int(np.argmax(vals))
    best_val = float(vals[best_i])
    best_dir = dirs[best_i]

    n_round = (budget - n_global) // 3
    for sigma in (0.1, 0.02, 0.004):
        g = best_dir[None, :] + sigma * rng.standard_normal((n_round, n))
        nrm = np.linalg.norm(g, axis=1)
        nrm[nrm == 0.0] = 1.0
        dirs = g / nrm[:, None]
        vals = fvec(boundary_points(E, alpha, dirs))
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_dir = dirs[i]
    return best_val


def random_spd(n, rng, cond=None):
    """Random SPD matrix; eigenvalues log-uniform over roughly two decades."""
    V = np.linalg.qr(rng.standard_normal((n, n)))[0]
    if cond is None:
        lam = np.exp(rng.uniform(-1.0, 1.0, size=n) * np.log(10.0))
    else:
        expo = np.linspace(0.0, 1.0, n)
        lam = cond ** (-expo)
    return (V * lam) @ V.T
