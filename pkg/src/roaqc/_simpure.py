"""Pure numpy RK4 kernels, API-compatible with the compiled extension.

Used automatically when the extension module is unavailable.  The batch
integrator advances all still-active trajectories together, so throughput
is acceptable for moderate batches; per-step results agree with the
compiled kernels to rounding error.
"""

from __future__ import annotations

import numpy as np


def _rhs_batch(A, B, pi, pj, Y):
    return Y @ A.T + (Y[:, pi] * Y[:, pj]) @ B.T


def integrate_batch(A, B, pi, pj, X0, dt, steps,
                    diverge_factor, settle_factor):
    """Integrate a batch with per-trajectory early exit.

    Returns (X_final, codes, t_exit) exactly like the compiled kernel:
    code 0 ran to the horizon, 1 diverged or became non-finite, 2 settled.
    """
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    X = np.array(X0, dtype=float, copy=True)
    N = X.shape[0]
    codes = np.zeros(N, dtype=np.int64)
    t_exit = np.full(N, steps * dt, dtype=float)
    s2_0 = np.einsum("ij,ij->i", X, X)
    nrm2 = np.maximum(1.0, s2_0)
    div2 = diverge_factor**2 * nrm2
    set2 = settle_factor**2 * nrm2
    active = np.ones(N, dtype=bool)
    for s in range(steps):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Y = X[idx]
        with np.errstate(all="ignore"):
            k1 = _rhs_batch(A, B, pi, pj, Y)
            k2 = _rhs_batch(A, B, pi, pj, Y + 0.5 * dt * k1)
            k3 = _rhs_batch(A, B, pi, pj, Y + 0.5 * dt * k2)
            k4 = _rhs_batch(A, B, pi, pj, Y + dt * k3)
            Y = Y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            X[idx] = Y
            s2 = np.einsum("ij,ij->i", Y, Y)
            diverged = ~np.isfinite(s2) | (s2 >= div2[idx])
            settled = ~diverged & (s2 <= set2[idx])
        if diverged.any() or settled.any():
            t_now = (s + 1) * dt
            codes[idx[diverged]] = 1
            codes[idx[settled]] = 2
            t_exit[idx[diverged | settled]] = t_now
            active[idx[diverged | settled]] = False
    return X, codes, t_exit


def integrate_path(A, B, pi, pj, x0, dt, steps,
                   diverge_factor, settle_factor):
    """Integrate one trajectory, recording every state until exit."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    x = np.array(x0, dtype=float, copy=True)
    path = np.empty((steps + 1, len(x)))
    path[0] = x
    s2_0 = float(x @ x)
    nrm2 = max(1.0, s2_0)
    div2 = diverge_factor**2 * nrm2
    set2 = settle_factor**2 * nrm2
    code = 0
    count = 0
    t_end = steps * dt

    def f(y):
        return A @ y + B @ (y[pi] * y[pj])

    for s in range(steps):
        with np.errstate(all="ignore"):
            k1 = f(x)
            k2 = f(x + 0.5 * dt * k1)
            k3 = f(x + 0.5 * dt * k2)
            k4 = f(x + dt * k3)
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            s2 = float(x @ x)
        count = s + 1
        path[count] = x
        if not np.isfinite(s2) or s2 >= div2:
            code = 1
        elif s2 <= set2:
            code = 2
        if code != 0:
            t_end = count * dt
            break
    return path[: count + 1].copy(), code, t_end
