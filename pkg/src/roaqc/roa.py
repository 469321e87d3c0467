"""Region of attraction estimation for quadratic polynomial systems.

Given xdot = A x + B z(x) with A Hurwitz and z the vector of degree-2
monomials, a quadratic Lyapunov candidate V(x) = x^T P x certifies the ball
of radius r = 1 / sqrt(lambda_max(P)) as a subset of the region of
attraction whenever

    [ A^T P + P A   P B ]
    [   B^T P        0  ]  +  sum_j xi_j M_j  <=  -diag(eps*I, 0),
    P >= E / alpha^2,   xi >= 0,

where the M_j encode quadratic constraints on (x, z(x)) that hold on the
ellipsoid x^T E x <= alpha^2.  The search over P is convex for fixed alpha;
`solve_roa` solves one such problem and `alpha_sweep` maximizes r over alpha
with a coarse grid followed by golden-section refinement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ellipsoids import Ellipsoid
from .monomials import QuadraticSystem
from .qc import QcMatrix, build_qc_set
from .sdp import (
    STATUS_OPTIMAL,
    SdpBlock,
    SdpProblem,
    SdpSolution,
    SolverOptions,
    solve,
)

DEFAULT_ALPHA_GRID = (0.05, 50.0, 60)
GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


def default_eps(A: np.ndarray) -> float:
    """Decay margin for the Lyapunov derivative, scaled to the dynamics."""
    return 1e-6 * max(1.0, float(np.linalg.norm(A, 2)))


@dataclass(frozen=True)
class AssemblyInfo:
    """Bookkeeping of the variable layout of an assembled problem.

    Variables are ordered (vech P, t, xi): the n(n+1)/2 distinct entries of
    P in basis pair order, then the ball level t, then one multiplier per
    quadratic constraint.  Constraint matrices are normalized to unit
    Frobenius norm inside the solver; `qc_norms` maps multipliers back.
    """

    n: int
    num_vars: int
    t_index: int
    xi_offset: int
    qc_norms: np.ndarray
    kept_rows: np.ndarray
    alpha: float
    eps: float


def _pair_basis_matrices(basis) -> np.ndarray:
    """Symmetric basis G_k with P = sum_k p_k G_k in pair order."""
    n = basis.n
    G = np.zeros((len(basis.pairs), n, n))
    for k, (i, j) in enumerate(basis.pairs):
        G[k, i, j] = 1.0
        G[k, j, i] = 1.0
        if i == j:
            G[k, i, i] = 1.0
    return G


def vech_to_matrix(p: np.ndarray, basis) -> np.ndarray:
    P = np.zeros((basis.n, basis.n))
    for k, (i, j) in enumerate(basis.pairs):
        P[i, j] = p[k]
        P[j, i] = p[k]
    return P


def assemble(system: QuadraticSystem, qcs: list, alpha: float,
             eps: float, E: Optional[np.ndarray] = None) -> tuple:
    """Build the LMI problem for fixed alpha.

    Returns (SdpProblem, AssemblyInfo).  Blocks, in order: the Lyapunov
    derivative LMI (rows that are identically zero across all coefficient
    matrices are dropped), P >= E/alpha^2, t*I - P >= 0, and one 1x1 block
    per multiplier for xi_j >= 0.
    """
    assert alpha > 0 and eps > 0
    n, m = system.n, system.m
    basis = system.basis
    E = np.eye(n) if E is None else np.asarray(E, dtype=float)
    A, B = system.A, system.B
    nP = len(basis.pairs)
    q = len(qcs)
    k = nP + 1 + q
    t_index = nP
    xi_offset = nP + 1
    G = _pair_basis_matrices(basis)

    dim = n + m
    F0_main = np.zeros((dim, dim))
    F0_main[:n, :n] = -eps * np.eye(n)
    F_main = np.zeros((k, dim, dim))
    for kk in range(nP):
        top = A.T @ G[kk] + G[kk] @ A
        GB = G[kk] @ B
        F_main[kk, :n, :n] = -top
        F_main[kk, :n, n:] = -GB
        F_main[kk, n:, :n] = -GB.T
    qc_norms = np.empty(q)
    for j, qc in enumerate(qcs):
        M = qc.M if isinstance(qc, QcMatrix) else np.asarray(qc, dtype=float)
        nrm = np.linalg.norm(M)
        assert nrm > 0, "constraint matrix is identically zero"
        qc_norms[j] = nrm
        F_main[xi_offset + j] = -M / nrm

    # drop rows/cols of the main LMI untouched by every matrix
    weight = np.abs(F0_main).max(axis=0) + np.abs(F_main).max(axis=(0, 1))
    kept = np.flatnonzero(weight > 0.0)
    ix = np.ix_(kept, kept)
    main = SdpBlock(F0_main[ix], F_main[(slice(None),) + ix])

    F0_cover = -E / alpha**2
    F_cover = np.zeros((k, n, n))
    F_cover[:nP] = G
    cover = SdpBlock(F0_cover, F_cover)

    F_ball = np.zeros((k, n, n))
    F_ball[:nP] = -G
    F_ball[t_index] = np.eye(n)
    ball = SdpBlock(np.zeros((n, n)), F_ball)

    blocks = [main, cover, ball]
    for j in range(q):
        Fj = np.zeros((k, 1, 1))
        Fj[xi_offset + j, 0, 0] = 1.0
        blocks.append(SdpBlock(np.zeros((1, 1)), Fj))

    c = np.zeros(k)
    c[t_index] = 1.0
    info = AssemblyInfo(n=n, num_vars=k, t_index=t_index, xi_offset=xi_offset,
                        qc_norms=qc_norms, kept_rows=kept, alpha=alpha, eps=eps)
    return SdpProblem(c=c, blocks=blocks), info


@dataclass(frozen=True)
class RoaCertificate:
    """A verified-checkable Lyapunov certificate at one alpha."""

    P: np.ndarray
    t: float
    xi: np.ndarray
    r: float
    alpha: float
    eps: float
    recipe: Optional[str] = None


@dataclass
class RoaResult:
    status: str
    r: float
    alpha: float
    certificate: Optional[RoaCertificate]
    solution: SdpSolution
    info: AssemblyInfo
    qc_count: int


def solve_roa(system: QuadraticSystem, alpha: float, recipe="set8",
              qcs: Optional[list] = None, E: Optional[np.ndarray] = None,
              eps: Optional[float] = None,
              options: Optional[SolverOptions] = None) -> RoaResult:
    """Largest certified ball for one fixed ellipsoid level alpha.

    `recipe` selects the constraint family preset (see qc.RECIPES); pass an
    explicit `qcs` list to override.  Infeasible problems produce r = 0 and
    no certificate.
    """
    n = system.n
    E_arr = np.eye(n) if E is None else np.asarray(E, dtype=float)
    if eps is None:
        eps = default_eps(system.A)
    used_recipe = None
    if qcs is None:
        qcs = build_qc_set(system, Ellipsoid(E_arr, alpha), recipe)
        used_recipe = recipe if isinstance(recipe, str) else None
    problem, info = assemble(system, qcs, alpha, eps, E_arr)
    sol = solve(problem, options or SolverOptions())
    if sol.status != STATUS_OPTIMAL:
        return RoaResult(sol.status, 0.0, alpha, None, sol, info, len(qcs))

    p = sol.y[: info.t_index]
    t = float(sol.y[info.t_index])
    xi = sol.y[info.xi_offset:] / info.qc_norms
    P = vech_to_matrix(p, system.basis)
    lam_max = float(np.linalg.eigvalsh(P)[-1])
    # the ball radius claim needs t >= lambda_max(P); guard against the
    # solver leaving t a rounding error below it
    t_eff = max(t, lam_max * (1.0 + 1e-14))
    r = 1.0 / np.sqrt(t_eff)
    cert = RoaCertificate(P=P, t=t_eff, xi=xi, r=r, alpha=alpha, eps=eps,
                          recipe=used_recipe)
    return RoaResult(sol.status, r, alpha, cert, sol, info, len(qcs))


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    r: float
    status: str
    iterations: int
    stage: str  # "grid" or "refine"


@dataclass
class SweepResult:
    best: Optional[RoaResult]
    points: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def r(self) -> float:
        return self.best.r if self.best is not None else 0.0

    @property
    def alpha(self) -> float:
        return self.best.alpha if self.best is not None else float("nan")


def alpha_sweep(system: QuadraticSystem, recipe="set8",
                alphas: Optional[np.ndarray] = None,
                E: Optional[np.ndarray] = None, eps: Optional[float] = None,
                options: Optional[SolverOptions] = None,
                refine_evals: int = 12) -> SweepResult:
    """Maximize the certified radius over the ellipsoid level alpha.

    Runs the LMI on a log-spaced grid, then golden-section refinement in
    log(alpha) around the discrete maximizer.  Every evaluation is recorded;
    the best result over all of them is returned.
    """
    t0 = time.perf_counter()
    if alphas is None:
        lo, hi, num = DEFAULT_ALPHA_GRID
        alphas = np.geomspace(lo, hi, num)
    alphas = np.asarray(alphas, dtype=float)
    assert alphas.ndim == 1 and len(alphas) >= 1 and (alphas > 0).all()

    points = []
    best: Optional[RoaResult] = None

    def run(alpha: float, stage: str) -> RoaResult:
        nonlocal best
        res = solve_roa(system, alpha, recipe=recipe, E=E, eps=eps,
                        options=options)
        points.append(SweepPoint(alpha=float(alpha), r=res.r,
                                 status=res.status,
                                 iterations=res.solution.iterations,
                                 stage=stage))
        if res.r > 0 and (best is None or res.r > best.r):
            best = res
        return res

    rs = np.array([run(a, "grid").r for a in alphas])
    i_star = int(np.argmax(rs))
    if rs[i_star] <= 0.0:
        return SweepResult(best=None, points=points,
                           elapsed=time.perf_counter() - t0)

    if refine_evals > 0 and len(alphas) > 1:
        lo = np.log(alphas[max(i_star - 1, 0)])
        hi = np.log(alphas[min(i_star + 1, len(alphas) - 1)])
        if hi > lo:
            # golden-section on r(exp(u)); keeps the bracket around the peak
            u1 = hi - GOLDEN * (hi - lo)
            u2 = lo + GOLDEN * (hi - lo)
            f1 = run(np.exp(u1), "refine").r
            f2 = run(np.exp(u2), "refine").r
            for _ in range(refine_evals - 2):
                if f1 >= f2:
                    hi, u2, f2 = u2, u1, f1
                    u1 = hi - GOLDEN * (hi - lo)
                    f1 = run(np.exp(u1), "refine").r
                else:
                    lo, u1, f1 = u1, u2, f2
                    u2 = lo + GOLDEN * (hi - lo)
                    f2 = run(np.exp(u2), "refine").r

    return SweepResult(best=best, points=points,
                       elapsed=time.perf_counter() - t0)


@dataclass(frozen=True)
class CertificateReport:
    """Independent a-posteriori margins of a certificate.

    All margins are signed so that nonnegative means satisfied; `lmi_max`
    and `vdot_max` must be at most zero (up to the stated slack).
    """

    passed: bool
    cover_margin: float      # lambda_min(P - E/alpha^2)
    ball_margin: float       # lambda_min(t*I - P)
    xi_min: float
    lmi_max: float           # lambda_max of the derivative LMI, relative
    vdot_max: float          # max of Vdot/|x|^2 over sampled sublevel set
    samples: int


def verify_certificate(system: QuadraticSystem, cert: RoaCertificate,
                       qcs: Optional[list] = None,
                       E: Optional[np.ndarray] = None,
                       samples: int = 10000, seed: int = 0,
                       cover_tol: float = 1e-8, ball_tol: float = 1e-8,
                       xi_tol: float = 1e-10,
                       lmi_tol: float = 1e-7) -> CertificateReport:
    """Recheck a certificate against the raw matrix inequalities.

    Rebuilds the constraint set from `cert.recipe` when `qcs` is not given.
    The derivative condition is also spot checked by sampling the certified
    sublevel set and evaluating Vdot directly.
    """
    n = system.n
    E_arr = np.eye(n) if E is None else np.asarray(E, dtype=float)
    if qcs is None:
        if cert.recipe is None:
            raise ValueError("certificate has no recipe; pass qcs explicitly")
        qcs = build_qc_set(system, Ellipsoid(E_arr, cert.alpha), cert.recipe)
    if len(qcs) != len(cert.xi):
        raise ValueError(
            f"certificate carries {len(cert.xi)} multipliers "
            f"but {len(qcs)} constraints were supplied"
        )
    P, t, xi = cert.P, cert.t, cert.xi
    A, B = system.A, system.B

    cover = float(np.linalg.eigvalsh(0.5 * ((P - E_arr / cert.alpha**2)
                                            + (P - E_arr / cert.alpha**2).T))[0])
    ball = float(np.linalg.eigvalsh(t * np.eye(n) - P)[0])
    xi_min = float(xi.min()) if len(xi) else 0.0

    m = system.m
    L = np.zeros((n + m, n + m))
    L[:n, :n] = A.T @ P + P @ A + cert.eps * np.eye(n)
    L[:n, n:] = P @ B
    L[n:, :n] = (P @ B).T
    for xj, qc in zip(xi, qcs):
        M = qc.M if isinstance(qc, QcMatrix) else np.asarray(qc, dtype=float)
        L += xj * M
    scale = 1.0 + np.abs(L).max()
    lmi_max = float(np.linalg.eigvalsh(0.5 * (L + L.T))[-1]) / scale

    pts = Ellipsoid(P, 1.0).sample(samples, seed=seed)
    norms = np.linalg.norm(pts, axis=1)
    keep = norms > 1e-9
    pts, norms = pts[keep], norms[keep]
    z = system.basis.eval(pts)
    xdot = pts @ A.T + z @ B.T
    vdot = 2.0 * np.einsum("ki,ij,kj->k", pts, P, xdot)
    vdot_max = float((vdot / norms**2).max()) if len(pts) else -np.inf

    passed = (cover >= -cover_tol and ball >= -ball_tol and xi_min >= -xi_tol
              and lmi_max <= lmi_tol and vdot_max <= 0.0)
    return CertificateReport(passed=passed, cover_margin=cover,
                             ball_margin=ball, xi_min=xi_min,
                             lmi_max=lmi_max, vdot_max=vdot_max,
                             samples=int(keep.sum()))
