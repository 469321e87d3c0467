"""Degree-2 monomial bases, quadratic forms, and quadratic system loading.

The lifted state used throughout is w = z(x) with one entry per monomial
x_i*x_j, i <= j, ordered lexicographically by (i, j):

    n = 3:  w = [x1^2, x1*x2, x1*x3, x2^2, x2*x3, x3^2]

Indices are 0-based everywhere in this API; serialized files are 1-based.
"""

from __future__ import annotations

import importlib.resources
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def monomial_count(n: int) -> int:
    """Number of degree-2 monomials in n variables."""
    if n < 1:
        raise ValueError(f"need at least one state, got n={n}")
    return n * (n + 1) // 2


class MonomialBasis:
    """Ordered degree-2 monomial basis for a fixed state dimension."""

    def __init__(self, n: int):
        self.n = int(n)
        self.m = monomial_count(self.n)
        self.pairs = tuple((i, j) for i in range(self.n) for j in range(i, self.n))
        self._index = {p: k for k, p in enumerate(self.pairs)}
        self._pi = np.array([p[0] for p in self.pairs])
        self._pj = np.array([p[1] for p in self.pairs])

    def index(self, i: int, j: int) -> int:
        """Position of monomial x_i*x_j (order of i, j irrelevant)."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"indices ({i},{j}) out of range for n={self.n}")
        return self._index[(i, j) if i <= j else (j, i)]

    def pair(self, k: int) -> tuple[int, int]:
        return self.pairs[k]

    def eval(self, x: np.ndarray) -> np.ndarray:
        """z(x): maps (n,) to (m,), or a batch (N, n) to (N, m)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"state has {x.shape[-1]} entries, expected {self.n}")
        return x[..., self._pi] * x[..., self._pj]

    def __repr__(self) -> str:
        return f"MonomialBasis(n={self.n})"


@dataclass(frozen=True)
class QuadForm:
    """A quadratic function phi(x) = b^T z(x) = x^T Q x (Q symmetric)."""

    n: int
    b: np.ndarray
    Q: np.ndarray
    basis: MonomialBasis = field(repr=False, compare=False)


def quadform_from_coeffs(b: np.ndarray, n: int) -> QuadForm:
    """Build a QuadForm from monomial coefficients b (length n*(n+1)/2)."""
    basis = MonomialBasis(n)
    b = np.asarray(b, dtype=float).copy()
    if b.shape != (basis.m,):
        raise ValueError(f"coefficient vector has shape {b.shape}, expected ({basis.m},)")
    Q = np.zeros((n, n))
    for k, (i, j) in enumerate(basis.pairs):
        if i == j:
            Q[i, i] = b[k]
        else:
            Q[i, j] = Q[j, i] = b[k] / 2.0
    return QuadForm(n=n, b=b, Q=Q, basis=basis)


def quadform_from_matrix(Q: np.ndarray) -> QuadForm:
    """Build a QuadForm from a coefficient matrix; symmetrizes if needed."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Q.shape}")
    n = Q.shape[0]
    asym = np.abs(Q - Q.T).max()
    if asym > 1e-12 * max(1.0, np.abs(Q).max()):
        warnings.warn(f"coefficient matrix symmetrized (asymmetry {asym:.3e})")
    Q = 0.5 * (Q + Q.T)
    basis = MonomialBasis(n)
    b = np.empty(basis.m)
    for k, (i, j) in enumerate(basis.pairs):
        b[k] = Q[i, i] if i == j else 2.0 * Q[i, j]
    return QuadForm(n=n, b=b, Q=Q, basis=basis)


@dataclass(frozen=True)
class QuadraticSystem:
    """xdot = A x + B z(x) with A Hurwitz, so the origin is locally stable."""

    n: int
    m: int
    A: np.ndarray
    B: np.ndarray
    basis: MonomialBasis = field(repr=False, compare=False)
    name: str = ""

    def row_form(self, i: int) -> QuadForm:
        """The i-th nonlinearity b_i^T z(x) as a QuadForm."""
        return quadform_from_coeffs(self.B[i], self.n)


def make_system(A: np.ndarray, B: np.ndarray, name: str = "") -> QuadraticSystem:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    n = A.shape[0]
    m = monomial_count(n)
    if B.shape != (n, m):
        raise ValueError(f"B has shape {B.shape}, expected ({n}, {m})")
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(B)):
        raise ValueError("system matrices contain non-finite entries")
    eigs = np.linalg.eigvals(A)
    if eigs.real.max() >= 0.0:
        raise ValueError(
            "A is not Hurwitz: eigenvalues "
            + ", ".join(f"{e:.6g}" for e in np.sort_complex(eigs))
        )
    return QuadraticSystem(n=n, m=m, A=A, B=B, basis=MonomialBasis(n), name=name)


def load_system(source) -> QuadraticSystem:
    """Load a system from a JSON file path or an already-parsed dict.

    Expected keys: n, A (n x n, row-major), B (n x n(n+1)/2, row-major),
    optional name.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            data = json.load(fh)
    elif isinstance(source, dict):
        data = source
    else:
        raise ValueError(f"cannot load a system from {type(source).__name__}")
    unknown = set(data) - {"n", "A", "B", "name"}
    if unknown:
        raise ValueError(f"unknown system keys: {sorted(unknown)}")
    for key in ("n", "A", "B"):
        if key not in data:
            raise ValueError(f"system file missing key {key!r}")
    n = int(data["n"])
    A = np.asarray(data["A"], dtype=float)
    if A.shape != (n, n):
        raise ValueError(f"A has shape {A.shape}, expected ({n}, {n})")
    return make_system(A, data["B"], name=str(data.get("name", "")))


def bundled_system_names() -> list[str]:
    """Names of the example systems shipped with the package."""
    root = importlib.resources.files("roaqc") / "systems"
    return sorted(p.name[: -len(".json")] for p in root.iterdir()
                  if p.name.endswith(".json"))


def bundled_system(name: str) -> QuadraticSystem:
    """Load one of the example systems shipped with the package."""
    path = importlib.resources.files("roaqc") / "systems" / f"{name}.json"
    if not path.is_file():
        raise ValueError(
            f"no bundled system named {name!r}; available: {bundled_system_names()}"
        )
    return load_system(json.loads(path.read_text()))
