"""Dense semidefinite programming by a primal-dual interior-point method.

Solves small linear matrix inequality problems in the form

    minimize    c^T y
    subject to  F0_b + sum_i y_i F_{b,i}  >= 0   (PSD, one LMI per block)

together with the conic dual

    maximize    -sum_b <F0_b, X_b>
    subject to  sum_b <F_{b,i}, X_b> = c_i,   X_b >= 0.

The iteration is Mehrotra predictor-corrector under Nesterov-Todd scaling,
with one Schur complement factorization per iteration shared between the
predictor and corrector solves.  All blocks are dense; 1x1 blocks are grouped
and handled with vector arithmetic.

Everything is deterministic: no randomization, fixed iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

STATUS_OPTIMAL = "Optimal"
STATUS_INFEASIBLE = "Infeasible"
STATUS_UNBOUNDED = "Unbounded"
STATUS_ITERATION_LIMIT = "IterationLimit"
STATUS_NUMERICAL = "NumericalFailure"


@dataclass(frozen=True)
class SdpBlock:
    """One LMI block: F0 + sum_i y_i F[i] >= 0."""

    F0: np.ndarray
    F: np.ndarray  # (num_vars, dim, dim)

    @property
    def dim(self) -> int:
        return self.F0.shape[0]


@dataclass(frozen=True)
class SdpProblem:
    c: np.ndarray
    blocks: list

    @property
    def num_vars(self) -> int:
        return len(self.c)

    def __post_init__(self):
        k = len(self.c)
        for b, blk in enumerate(self.blocks):
            d = blk.F0.shape[0]
            if blk.F0.shape != (d, d):
                raise ValueError(f"block {b}: F0 must be square")
            if blk.F.shape != (k, d, d):
                raise ValueError(
                    f"block {b}: F has shape {blk.F.shape}, expected ({k}, {d}, {d})"
                )
            if np.abs(blk.F0 - blk.F0.T).max() > 1e-10 * (1.0 + np.abs(blk.F0).max()):
                raise ValueError(f"block {b}: F0 is not symmetric")
            if k and np.abs(blk.F - np.transpose(blk.F, (0, 2, 1))).max() > 1e-10 * (
                1.0 + np.abs(blk.F).max()
            ):
                raise ValueError(f"block {b}: coefficient matrices are not symmetric")

    def eval_lmi(self, y: np.ndarray) -> list:
        """F0 + sum_i y_i F_i per block."""
        return [blk.F0 + np.tensordot(y, blk.F, axes=(0, 0)) for blk in self.blocks]


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-8       # y-side LMI residual, relative
    gap_tol: float = 1e-8        # complementarity gap, relative
    dual_feas_tol: float = 1e-6  # X-side residual; only certifies the dual
    max_iters: int = 200
    step_fraction: float = 0.98
    verbose: bool = False


@dataclass
class SdpSolution:
    status: str
    y: np.ndarray
    objective: float
    iterations: int
    primal_res: float
    dual_res: float
    gap: float
    X: Optional[list] = None
    trace: list = field(default_factory=list)


def _sym(M):
    return 0.5 * (M + M.T)


def _chol(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None


class _Cone:
    """Split of the blocks into matrix blocks and one grouped scalar part."""

    def __init__(self, problem: SdpProblem):
        self.mats = []  # (F0, Fstack) with dim > 1
        scal_f0, scal_g = [], []
        for blk in problem.blocks:
            if blk.dim == 1:
                scal_f0.append(blk.F0[0, 0])
                scal_g.append(blk.F[:, 0, 0])
            else:
                self.mats.append((blk.F0, blk.F))
        self.s0 = np.array(scal_f0)
        self.G = (
            np.array(scal_g) if scal_g else np.zeros((0, problem.num_vars))
        )
        self.n_scal = len(scal_f0)
        self.total_dim = sum(F0.shape[0] for F0, _ in self.mats) + self.n_scal


def solve(problem: SdpProblem, options: SolverOptions = SolverOptions()) -> SdpSolution:
    c = np.asarray(problem.c, dtype=float)
    k = problem.num_vars
    cone = _Cone(problem)
    if cone.total_dim == 0:
        return SdpSolution(STATUS_OPTIMAL, np.zeros(k), 0.0, 0, 0.0, 0.0, 0.0, X=[])
    if k == 0:
        ok = all(
            np.linalg.eigvalsh(_sym(F0))[0] >= -1e-10 * (1 + np.abs(F0).max())
            for F0, _ in cone.mats
        ) and (cone.s0 >= -1e-12).all()
        return SdpSolution(
            STATUS_OPTIMAL if ok else STATUS_INFEASIBLE,
            np.zeros(0), 0.0, 0, 0.0, 0.0, 0.0,
        )

    nm = len(cone.mats)
    dims = [F0.shape[0] for F0, _ in cone.mats]
    tau = options.step_fraction
    has_scal = cone.n_scal > 0

    y = np.zeros(k)
    X, S = [], []
    for F0, F in cone.mats:
        eta = 1.0 + np.linalg.norm(F0) + np.abs(F).max()
        X.append(eta * np.eye(F0.shape[0]))
        S.append(eta * np.eye(F0.shape[0]))
    if has_scal:
        eta_s = 1.0 + np.abs(cone.s0) + np.abs(cone.G).max(axis=1)
        xs = eta_s.copy()
        ss = eta_s.copy()
    else:
        xs = ss = np.zeros(0)

    c_scale = 1.0 + np.abs(c).max()
    trace = []
    status = STATUS_ITERATION_LIMIT
    it = 0
    pinf = dinf = gap_rel = np.nan
    best_score = np.inf
    best = None  # most nearly converged iterate, kept for stalled exits
    mu0 = np.nan

    for it in range(1, options.max_iters + 1):
        # Rp = F0 + F(y) - S (y-side), rd = c - <F, X> (X-side)
        Rp = [
            F0 + np.tensordot(y, F, axes=(0, 0)) - Sb
            for (F0, F), Sb in zip(cone.mats, S)
        ]
        rp_s = cone.s0 + cone.G @ y - ss if has_scal else np.zeros(0)
        rd = c.copy()
        for (_, F), Xb in zip(cone.mats, X):
            rd -= np.tensordot(F, Xb, axes=([1, 2], [0, 1]))
        if has_scal:
            rd -= cone.G.T @ xs
        gap_inner = sum(np.tensordot(Xb, Sb) for Xb, Sb in zip(X, S)) + xs @ ss
        mu = gap_inner / cone.total_dim
        if it == 1:
            mu0 = mu

        pobj = c @ y
        dobj = -sum(np.tensordot(F0, Xb) for (F0, _), Xb in zip(cone.mats, X))
        if has_scal:
            dobj -= cone.s0 @ xs
        pinf = max(
            [np.abs(R).max() / (1.0 + np.abs(F0).max()) for (F0, _), R in zip(cone.mats, Rp)]
            + ([np.abs(rp_s).max() / (1.0 + np.abs(cone.s0).max())] if has_scal else [0.0])
        )
        xmax = max([np.abs(Xb).max() for Xb in X] + ([np.abs(xs).max()] if has_scal else [0.0]))
        dinf = np.abs(rd).max() / (c_scale + xmax)
        gap_rel = gap_inner / (1.0 + abs(pobj) + abs(dobj))
        trace.append((float(mu), float(pinf), float(dinf), float(gap_rel)))

        score = max(pinf / options.feas_tol, dinf / options.dual_feas_tol,
                    gap_rel / options.gap_tol)
        if score < best_score:
            best_score = score
            best = ([Xb.copy() for Xb in X], xs.copy(), y.copy(),
                    float(pinf), float(dinf), float(gap_rel))
        if score <= 1.0:
            status = STATUS_OPTIMAL
            break

        # primal infeasibility: X approaches an improving ray of the dual.
        # A diverging mu (the feasible path drives it to zero) relaxes the
        # required certificate quality; the dual equality error then floors
        # at roughly dual_feas_tol relative to the exploding |X|.
        xnorm = sum(np.linalg.norm(Xb) for Xb in X) + np.linalg.norm(xs)
        ray_obj = -dobj / xnorm
        ray_eq = np.abs(c - rd).max() / xnorm  # <F_i, X> residual per coordinate
        if ray_obj < -1e-9:
            diverging = mu > 1e3 * (1.0 + mu0)
            if ray_eq <= 1e-7 * (-ray_obj) or (
                diverging and ray_eq <= 1e-4 * (-ray_obj)
            ):
                status = STATUS_INFEASIBLE
                break
        if pobj < -1e12 * c_scale and pinf <= 1e-6:
            status = STATUS_UNBOUNDED
            break

        # Nesterov-Todd scaling: X = R Lam R^T, S = R^-T Lam R^-1, W = R R^T
        Rmats, Rinvs, lams, Ts, Ptils = [], [], [], [], []
        failed = False
        for (F0, F), Xb, Sb, Rpb in zip(cone.mats, X, S, Rp):
            L1 = _chol(Xb)
            L2 = _chol(Sb)
            if L1 is None or L2 is None:
                failed = True
                break
            U, sig, Vt = np.linalg.svd(L2.T @ L1)
            if sig.min() <= 0.0:
                failed = True
                break
            R = L1 @ Vt.T / np.sqrt(sig)
            Rinv = (np.sqrt(sig)[:, None] * Vt) @ np.linalg.inv(L1)
            Rmats.append(R)
            Rinvs.append(Rinv)
            lams.append(sig)
            Ts.append(np.einsum("ba,kbc,cd->kad", R, F, R))
            Ptils.append(R.T @ Rpb @ R)
        if failed or (has_scal and ((xs <= 0).any() or (ss <= 0).any())):
            status = STATUS_NUMERICAL
            break
        if has_scal:
            lam_s = np.sqrt(xs * ss)
            w_s = np.sqrt(xs / ss)  # scalar NT point: w*s*w = x
            t_s = w_s[:, None] * cone.G  # scaled scalar coefficients
            p_s = w_s * rp_s

        # Schur complement M_ij = sum <F_i, W F_j W> = sum <T_i, T_j>
        M = np.zeros((k, k))
        for T, d in zip(Ts, dims):
            Tf = T.reshape(k, d * d)
            M += Tf @ Tf.T
        if has_scal:
            M += cone.G.T @ (w_s[:, None] ** 2 * cone.G)
        reg = 1e-12 * max(1.0, np.trace(M) / k)
        L = _chol(M + reg * np.eye(k))
        while L is None and reg < 1e-5:
            reg *= 100.0
            L = _chol(M + reg * np.eye(k))
        if L is None:
            status = STATUS_NUMERICAL
            break
        Mreg = M + reg * np.eye(k)

        def newton(Ds, d_s):
            """One Newton solve for given scaled complementarity targets."""
            rhs = -rd.copy()
            for T, D, Pt in zip(Ts, Ds, Ptils):
                rhs += np.tensordot(T, D - Pt, axes=([1, 2], [0, 1]))
            if has_scal:
                rhs += t_s.T @ (d_s - p_s)
            dy = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
            # one step of iterative refinement on the Schur solve
            resid = rhs - Mreg @ dy
            dy += np.linalg.solve(L.T, np.linalg.solve(L, resid))
            dS_t = [np.tensordot(dy, T, axes=(0, 0)) + Pt for T, Pt in zip(Ts, Ptils)]
            dX_t = [D - dS for D, dS in zip(Ds, dS_t)]
            if has_scal:
                ds_t = t_s @ dy + p_s
                dx_t = d_s - ds_t
            else:
                ds_t = dx_t = np.zeros(0)
            return dy, dX_t, dS_t, dx_t, ds_t

        def max_step(deltas, delta_vec):
            """Largest theta with Lam + theta*Delta >= 0 across all blocks."""
            theta = np.inf
            for lam, D in zip(lams, deltas):
                A = D / np.sqrt(np.outer(lam, lam))
                wmin = np.linalg.eigvalsh(_sym(A)).min()
                if wmin < 0:
                    theta = min(theta, -1.0 / wmin)
            if has_scal:
                neg = (delta_vec / lam_s).min()
                if neg < 0:
                    theta = min(theta, -1.0 / neg)
            return theta

        # predictor aims at complementarity zero: D = -Lambda
        D_aff = [-np.diag(lam) for lam in lams]
        d_aff = -lam_s if has_scal else np.zeros(0)
        dy_a, dX_a, dS_a, dx_a, ds_a = newton(D_aff, d_aff)
        th_p = min(1.0, max_step(dX_a, dx_a))
        th_d = min(1.0, max_step(dS_a, ds_a))
        gap_aff = sum(
            np.tensordot(np.diag(lam) + th_p * dXa, np.diag(lam) + th_d * dSa)
            for lam, dXa, dSa in zip(lams, dX_a, dS_a)
        )
        if has_scal:
            gap_aff += (lam_s + th_p * dx_a) @ (lam_s + th_d * ds_a)
        mu_aff = max(gap_aff, 0.0) / cone.total_dim
        sigma = float(np.clip((mu_aff / mu) ** 3, 1e-12, 1.0 - 1e-12))

        # corrector: L_Lambda^{-1}(sigma*mu*I - Lambda^2 - H(dX_aff dS_aff))
        D_cor = []
        for lam, dXa, dSa in zip(lams, dX_a, dS_a):
            C = sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - _sym(dXa @ dSa)
            D_cor.append(2.0 * C / np.add.outer(lam, lam))
        d_cor = ((sigma * mu - lam_s**2 - dx_a * ds_a) / lam_s) if has_scal else np.zeros(0)

        dy, dX_t, dS_t, dx_t, ds_t = newton(D_cor, d_cor)
        th_p = min(1.0, tau * max_step(dX_t, dx_t))
        th_d = min(1.0, tau * max_step(dS_t, ds_t))
        if th_p <= 1e-12 or th_d <= 1e-12:
            status = STATUS_NUMERICAL
            break

        for b in range(nm):
            Xt = np.diag(lams[b]) + th_p * dX_t[b]
            St = np.diag(lams[b]) + th_d * dS_t[b]
            X[b] = _sym(Rmats[b] @ Xt @ Rmats[b].T)
            S[b] = _sym(Rinvs[b].T @ St @ Rinvs[b])
        if has_scal:
            xs = w_s * (lam_s + th_p * dx_t)
            ss = (lam_s + th_d * ds_t) / w_s
        y = y + th_d * dy

    if status in (STATUS_NUMERICAL, STATUS_ITERATION_LIMIT) and best is not None:
        # a late-stage breakdown leaves the current iterate corrupted; report
        # the most nearly converged point seen instead, status unchanged
        X, xs, y, pinf, dinf, gap_rel = best

    return SdpSolution(
        status=status,
        y=y,
        objective=float(c @ y),
        iterations=it,
        primal_res=float(pinf),
        dual_res=float(dinf),
        gap=float(gap_rel),
        X=[Xb.copy() for Xb in X],
        trace=trace,
    )


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    block_margins: list
    worst_margin: float


def verify_solution(problem: SdpProblem, solution: SdpSolution,
                    margin: float = 1e-7) -> FeasibilityReport:
    """Independent feasibility check of y against every block."""
    margins = []
    for blk, val in zip(problem.blocks, problem.eval_lmi(solution.y)):
        scale = 1.0 + np.abs(blk.F0).max() + (np.abs(blk.F).max() if problem.num_vars else 0.0)
        margins.append(float(np.linalg.eigvalsh(_sym(val))[0] / scale))
    worst = min(margins) if margins else 0.0
    return FeasibilityReport(feasible=worst >= -margin, block_margins=margins,
                             worst_margin=worst)
