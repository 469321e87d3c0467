"""Trajectory simulation and sampling-based outer bounds on the ROA.

The integrator is classical fixed-step RK4 over xdot = A x + B z(x).  A
compiled kernel is used when the extension module built; otherwise a pure
numpy fallback with identical semantics takes over (see `BACKEND`).

Simulation refutes, it never certifies: a diverging trajectory at radius r
proves the ball of radius r is not inside the region of attraction, which
is what `roa_upper_bound` exploits to bracket the certified radius from
above.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .monomials import QuadraticSystem

try:
    from . import _simcore as _kernels

    BACKEND = "compiled"
except ImportError:  # extension unavailable, e.g. no compiler at install
    from . import _simpure as _kernels

    BACKEND = "pure"

DEFAULT_DT = 1e-3
DEFAULT_T_FINAL = 20.0
DIVERGE_FACTOR = 1e3
SETTLE_FACTOR = 1e-9
CONVERGE_RTOL = 1e-6

VERDICT_CONVERGED = "Converged"
VERDICT_DIVERGED = "Diverged"
VERDICT_UNDECIDED = "Undecided"

_CODE_RAN = 0
_CODE_DIVERGED = 1
_CODE_SETTLED = 2


def rhs(system: QuadraticSystem, x: np.ndarray) -> np.ndarray:
    """Vector field at one state (n,) or a batch (N, n)."""
    x = np.asarray(x, dtype=float)
    z = system.basis.eval(x)
    return x @ system.A.T + z @ system.B.T


def _num_steps(dt: float, t_final: float) -> int:
    assert dt > 0 and t_final > 0
    steps = int(round(t_final / dt))
    assert steps >= 1
    return steps


def _verdict(code: int, norm_final: float, norm_initial: float) -> str:
    if code == _CODE_DIVERGED:
        return VERDICT_DIVERGED
    if code == _CODE_SETTLED:
        return VERDICT_CONVERGED
    if norm_final <= CONVERGE_RTOL * max(1.0, norm_initial):
        return VERDICT_CONVERGED
    return VERDICT_UNDECIDED


@dataclass
class BatchResult:
    X_final: np.ndarray
    codes: np.ndarray
    t_exit: np.ndarray
    verdicts: list


@dataclass
class SimResult:
    x_final: np.ndarray
    code: int
    verdict: str
    t_final: float
    path: Optional[np.ndarray] = None


def integrate_batch(system: QuadraticSystem, X0, dt: float = DEFAULT_DT,
                    t_final: float = DEFAULT_T_FINAL,
                    diverge_factor: float = DIVERGE_FACTOR,
                    settle_factor: float = SETTLE_FACTOR) -> BatchResult:
    """Integrate many initial conditions with per-trajectory early exit."""
    X0 = np.ascontiguousarray(np.atleast_2d(np.asarray(X0, dtype=float)))
    if X0.shape[1] != system.n:
        raise ValueError(f"states have {X0.shape[1]} entries, expected {system.n}")
    steps = _num_steps(dt, t_final)
    Xf, codes, t_exit = _kernels.integrate_batch(
        np.ascontiguousarray(system.A), np.ascontiguousarray(system.B),
        system.basis._pi, system.basis._pj, X0, dt, steps,
        diverge_factor, settle_factor,
    )
    n0 = np.linalg.norm(X0, axis=1)
    nf = np.linalg.norm(Xf, axis=1)
    verdicts = [_verdict(int(c), float(b), float(a))
                for c, b, a in zip(codes, nf, n0)]
    return BatchResult(X_final=Xf, codes=codes, t_exit=t_exit, verdicts=verdicts)


def integrate(system: QuadraticSystem, x0, dt: float = DEFAULT_DT,
              t_final: float = DEFAULT_T_FINAL, record: bool = False,
              diverge_factor: float = DIVERGE_FACTOR,
              settle_factor: float = SETTLE_FACTOR) -> SimResult:
    """Integrate one initial condition; `record` keeps the full path."""
    x0 = np.ascontiguousarray(np.asarray(x0, dtype=float))
    if x0.shape != (system.n,):
        raise ValueError(f"state has shape {x0.shape}, expected ({system.n},)")
    steps = _num_steps(dt, t_final)
    if record:
        path, code, t_end = _kernels.integrate_path(
            np.ascontiguousarray(system.A), np.ascontiguousarray(system.B),
            system.basis._pi, system.basis._pj, x0, dt, steps,
            diverge_factor, settle_factor,
        )
        x_final = path[-1]
        verdict = _verdict(int(code), float(np.linalg.norm(x_final)),
                           float(np.linalg.norm(x0)))
        return SimResult(x_final=x_final, code=int(code), verdict=verdict,
                         t_final=float(t_end), path=path)
    batch = integrate_batch(system, x0[None, :], dt=dt, t_final=t_final,
                            diverge_factor=diverge_factor,
                            settle_factor=settle_factor)
    return SimResult(x_final=batch.X_final[0], code=int(batch.codes[0]),
                     verdict=batch.verdicts[0], t_final=float(batch.t_exit[0]))


def sphere_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy unit directions, deterministic in the seed."""
    assert n >= 1 and count >= 1
    u = qmc.Sobol(d=n, scramble=True, seed=seed).random(count)
    g = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    nrm = np.linalg.norm(g, axis=1)
    nrm[nrm == 0.0] = 1.0
    return g / nrm[:, None]


@dataclass
class UpperBound:
    """Smallest radius at which some sampled direction was seen to diverge."""

    found: bool
    r: float
    direction: Optional[np.ndarray]
    n_evals: int


def roa_upper_bound(system: QuadraticSystem, r_max: float,
                    directions: int = 64, seed: int = 0,
                    dt: float = DEFAULT_DT, t_final: float = DEFAULT_T_FINAL,
                    rel_tol: float = 1e-3) -> UpperBound:
    """Bisect the divergence radius over sampled directions.

    Each direction is first probed just below the best bound so far; a
    converging probe cannot improve the bound and the direction is skipped
    after that single simulation.  Returns r = inf when no divergence was
    found at or below r_max anywhere.
    """
    assert r_max > 0
    U = sphere_directions(system.n, directions, seed=seed)
    r_ub = float(r_max)
    u_star = None
    evals = 0
    found = False

    def diverges(x0) -> bool:
        nonlocal evals
        evals += 1
        res = integrate_batch(system, x0[None, :], dt=dt, t_final=t_final)
        return res.codes[0] == _CODE_DIVERGED

    for u in U:
        probe = r_ub if not found else (1.0 - rel_tol) * r_ub
        if not diverges(probe * u):
            continue
        found = True
        u_star = u
        lo, hi = 0.0, probe
        while hi - lo > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if diverges(mid * u):
                hi = mid
            else:
                lo = mid
        r_ub = hi
    return UpperBound(found=found, r=r_ub if found else np.inf,
                      direction=u_star, n_evals=evals)


def phase_portrait(system: QuadraticSystem, X0, dt: float = DEFAULT_DT,
                   t_final: float = DEFAULT_T_FINAL) -> list:
    """Full recorded trajectories from each initial condition."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    return [integrate(system, x0, dt=dt, t_final=t_final, record=True)
            for x0 in X0]


def write_portrait_csv(path, X0, results) -> None:
    """One summary row per trajectory.

    Columns: the initial state, the verdict, the exit time, and the final
    state norm.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    assert len(X0) == len(results)
    n = X0.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x0_{i + 1}" for i in range(n)]
                        + ["verdict", "t_final", "norm_final"])
        for x0, res in zip(X0, results):
            writer.writerow([repr(float(v)) for v in x0]
                            + [res.verdict, repr(float(res.t_final)),
                               repr(float(np.linalg.norm(res.x_final)))])
