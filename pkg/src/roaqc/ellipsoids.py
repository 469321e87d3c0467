"""Ellipsoidal regions E_alpha = {x : x^T E x <= alpha^2} and exact maxima over them.

The two closed forms used by every constraint construction:

    max (c^T x)^2  =  alpha^2 * c^T E^{-1} c
    max  x^T Q x   =  alpha^2 * lambda_max(E^{-1/2} Q E^{-1/2})   (needs lambda_max(Q) > 0)

Matrix square roots come from the symmetric eigendecomposition, never a
Cholesky factor, so E_inv_sqrt is itself symmetric.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

# E is treated as singular when the eigenvalue ratio drops below this.
SPD_RTOL = 1e-12


def _check_symmetric(M: np.ndarray, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{what} must be square, got shape {M.shape}")
    asym = np.abs(M - M.T).max()
    if asym > 1e-12 * max(1.0, np.abs(M).max()):
        warnings.warn(f"{what} symmetrized (asymmetry {asym:.3e})")
    return 0.5 * (M + M.T)


def sqrt_inv(E: np.ndarray) -> np.ndarray:
    """Symmetric E^{-1/2} of an SPD matrix."""
    E = _check_symmetric(E, "E")
    w, V = np.linalg.eigh(E)
    if w[-1] <= 0.0 or w[0] <= SPD_RTOL * w[-1]:
        raise ValueError(
            f"E is not positive definite: eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}]"
        )
    return (V / np.sqrt(w)) @ V.T


@dataclass(frozen=True)
class Ellipsoid:
    """E_alpha with cached inverse and inverse square root."""

    E: np.ndarray
    alpha: float
    n: int = field(init=False)
    E_inv: np.ndarray = field(init=False, repr=False, compare=False)
    E_inv_sqrt: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        R = sqrt_inv(self.E)  # validates SPD
        object.__setattr__(self, "E", _check_symmetric(self.E, "E"))
        object.__setattr__(self, "n", self.E.shape[0])
        object.__setattr__(self, "E_inv", R @ R)
        object.__setattr__(self, "E_inv_sqrt", R)

    def contains(self, x: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
        """Membership test for a point (n,) or batch (N, n)."""
        x = np.asarray(x, dtype=float)
        q = np.einsum("...i,ij,...j->...", x, self.E, x)
        return q <= self.alpha**2 * (1.0 + rtol)

    def sample(self, count: int, seed: int = 0, boundary_fraction: float = 0.5) -> np.ndarray:
        """Deterministic low-discrepancy points of E_alpha.

        Roughly `boundary_fraction` of the points sit on the boundary
        ellipsoid, the rest are volume-uniform in the interior.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        sobol = qmc.Sobol(d=self.n + 1, scramble=True, seed=seed)
        u01 = sobol.random_base2(max(0, int(np.ceil(np.log2(count)))))[:count]
        g = ndtri(np.clip(u01[:, : self.n], 1e-12, 1.0 - 1e-12))
        nrm = np.linalg.norm(g, axis=1)
        nrm[nrm == 0.0] = 1.0
        u = g / nrm[:, None]
        t = u01[:, self.n] ** (1.0 / self.n)
        n_boundary = int(round(count * boundary_fraction))
        t[:n_boundary] = 1.0
        return self.alpha * (t[:, None] * u) @ self.E_inv_sqrt


def max_linear_sq(c: np.ndarray, ell: Ellipsoid) -> float:
    """Exact max of (c^T x)^2 over E_alpha."""
    c = np.asarray(c, dtype=float)
    if c.shape != (ell.n,):
        raise ValueError(f"c has shape {c.shape}, expected ({ell.n},)")
    return float(ell.alpha**2 * (c @ ell.E_inv @ c))


def max_quadform(Q: np.ndarray, ell: Ellipsoid) -> float:
    """Exact max of x^T Q x over E_alpha; requires Q to have a positive eigenvalue."""
    Q = _check_symmetric(Q, "Q")
    if Q.shape != (ell.n, ell.n):
        raise ValueError(f"Q has shape {Q.shape}, expected ({ell.n}, {ell.n})")
    lam_q = np.linalg.eigvalsh(Q)[-1]
    if lam_q <= 0.0:
        raise ValueError(
            f"max over the ellipsoid is attained at 0: lambda_max(Q) = {lam_q:.3e} <= 0"
        )
    R = ell.E_inv_sqrt
    M = R @ Q @ R
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))[-1]
    return float(ell.alpha**2 * lam)
