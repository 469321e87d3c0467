# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels for quadratic-system trajectories.

Both entry points share the calling convention of the pure fallback in
`_simpure`: the dynamics are xdot = A x + B z(x) with z_k = x[pi_k]*x[pj_k],
and every trajectory carries its own divergence and settling thresholds
relative to max(1, |x0|).  Exit codes: 0 ran to the horizon, 1 diverged
(or left the representable range), 2 settled near the origin.
"""

from libc.stdlib cimport free, malloc

import numpy as np


cdef inline void _rhs(int n, int m, const double* A, const double* B,
                      const long* pi, const long* pj,
                      const double* x, double* z, double* out) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for k in range(m):
        z[k] = x[pi[k]] * x[pj[k]]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc = acc + A[i * n + j] * x[j]
        for k in range(m):
            acc = acc + B[i * m + k] * z[k]
        out[i] = acc


cdef inline int _step(int n, int m, const double* A, const double* B,
                      const long* pi, const long* pj, double dt,
                      double* x, double* work) noexcept nogil:
    """One classical RK4 step in place; work must hold 5*n + m doubles."""
    cdef double* k1 = work
    cdef double* k2 = work + n
    cdef double* k3 = work + 2 * n
    cdef double* k4 = work + 3 * n
    cdef double* xt = work + 4 * n
    cdef double* z = work + 5 * n
    cdef int i
    _rhs(n, m, A, B, pi, pj, x, z, k1)
    for i in range(n):
        xt[i] = x[i] + 0.5 * dt * k1[i]
    _rhs(n, m, A, B, pi, pj, xt, z, k2)
    for i in range(n):
        xt[i] = x[i] + 0.5 * dt * k2[i]
    _rhs(n, m, A, B, pi, pj, xt, z, k3)
    for i in range(n):
        xt[i] = x[i] + dt * k3[i]
    _rhs(n, m, A, B, pi, pj, xt, z, k4)
    for i in range(n):
        x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return 0


def integrate_batch(double[:, ::1] A, double[:, ::1] B,
                    long[::1] pi, long[::1] pj,
                    double[:, ::1] X0, double dt, long steps,
                    double diverge_factor, double settle_factor):
    """Integrate a batch with per-trajectory early exit.

    Returns (X_final, codes, t_exit) where codes is int64 per trajectory.
    """
    cdef long N = X0.shape[0]
    cdef int n = <int> A.shape[0]
    cdef int m = <int> B.shape[1]
    X_final = np.array(X0, dtype=np.float64, copy=True)
    codes = np.zeros(N, dtype=np.int64)
    t_exit = np.full(N, steps * dt, dtype=np.float64)
    cdef double[:, ::1] Xv = X_final
    cdef long[::1] cv = codes
    cdef double[::1] tv = t_exit
    cdef double* work = <double*> malloc((5 * n + m) * sizeof(double))
    if work is NULL:
        raise MemoryError()
    cdef long traj, s
    cdef int i, code
    cdef double nrm0, div2, set2, s2, v
    try:
        with nogil:
            for traj in range(N):
                s2 = 0.0
                for i in range(n):
                    s2 += Xv[traj, i] * Xv[traj, i]
                nrm0 = s2 if s2 > 1.0 else 1.0  # squared floor at 1
                div2 = diverge_factor * diverge_factor * nrm0
                set2 = settle_factor * settle_factor * nrm0
                code = 0
                for s in range(steps):
                    _step(n, m, &A[0, 0], &B[0, 0], &pi[0], &pj[0], dt,
                          &Xv[traj, 0], work)
                    s2 = 0.0
                    for i in range(n):
                        v = Xv[traj, i]
                        s2 += v * v
                    if not (s2 == s2) or s2 >= div2:
                        code = 1
                    elif s2 <= set2:
                        code = 2
                    if code != 0:
                        cv[traj] = code
                        tv[traj] = (s + 1) * dt
                        break
    finally:
        free(work)
    return X_final, codes, t_exit


def integrate_path(double[:, ::1] A, double[:, ::1] B,
                   long[::1] pi, long[::1] pj,
                   double[::1] x0, double dt, long steps,
                   double diverge_factor, double settle_factor):
    """Integrate one trajectory and record every state.

    Returns (path, code, t_exit); path has one row per computed state,
    including the initial condition, truncated at early exit.
    """
    cdef int n = <int> A.shape[0]
    cdef int m = <int> B.shape[1]
    path = np.empty((steps + 1, n), dtype=np.float64)
    cdef double[:, ::1] Pv = path
    cdef double* work = <double*> malloc((5 * n + m) * sizeof(double))
    if work is NULL:
        raise MemoryError()
    cdef long s, count = 0
    cdef int i, code = 0
    cdef double nrm0, div2, set2, s2, v
    cdef double t_end
    try:
        s2 = 0.0
        for i in range(n):
            Pv[0, i] = x0[i]
            s2 += x0[i] * x0[i]
        nrm0 = s2 if s2 > 1.0 else 1.0
        div2 = diverge_factor * diverge_factor * nrm0
        set2 = settle_factor * settle_factor * nrm0
        t_end = steps * dt
        with nogil:
            for s in range(steps):
                for i in range(n):
                    Pv[s + 1, i] = Pv[s, i]
                _step(n, m, &A[0, 0], &B[0, 0], &pi[0], &pj[0], dt,
                      &Pv[s + 1, 0], work)
                count = s + 1
                s2 = 0.0
                for i in range(n):
                    v = Pv[s + 1, i]
                    s2 += v * v
                if not (s2 == s2) or s2 >= div2:
                    code = 1
                elif s2 <= set2:
                    code = 2
                if code != 0:
                    t_end = (s + 1) * dt
                    break
    finally:
        free(work)
    return path[: count + 1].copy(), code, t_end
