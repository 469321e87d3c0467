"""Local quadratic constraints for the lifted vector [x; z(x)] on an ellipsoid.

Every constructor returns matrices M with

    [x; z(x)]^T M [x; z(x)] >= 0   for all x in E_alpha,

built from exact maxima of linear and quadratic forms over E_alpha.  Four
families are implemented:

* CSQC: Cauchy-Schwarz bound on any quadratic phi(x) = b^T z(x),
* Valley constraints from rank-2 factorizations phi = (c1^T x)(c2^T x),
* Valley constraints from rank-3 factorizations phi = (c1^T x)(c2^T x) + (c3^T x)^2,
* Cross-product bounds on products z_p z_q of two monomials sharing an index.

Matrices are emitted exactly as constructed; recipes deduplicate on unit
Frobenius scale, so positively-scaled repeats collapse to one constraint.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ellipsoids import Ellipsoid
from .monomials import MonomialBasis, QuadForm, QuadraticSystem, quadform_from_coeffs

CSQC = "CSQC"
RANK2_VALLEY = "Rank2Valley"
RANK3_VALLEY = "Rank3Valley"
CROSS_PRODUCT = "CrossProduct"
CROSS_PRODUCT_SAME = "CrossProductSameIndex"

QC_KINDS = frozenset({CSQC, RANK2_VALLEY, RANK3_VALLEY, CROSS_PRODUCT, CROSS_PRODUCT_SAME})

# Recipe presets: which constraint families participate.
RECIPES = {
    "set1": frozenset({"csqc"}),
    "set2": frozenset({"csqc", "rank2"}),
    "set3": frozenset({"csqc", "rank3"}),
    "set4": frozenset({"csqc", "cross"}),
    "set5": frozenset({"csqc", "rank2", "rank3"}),
    "set6": frozenset({"csqc", "rank2", "cross"}),
    "set7": frozenset({"csqc", "rank3", "cross"}),
    "set8": frozenset({"csqc", "rank2", "rank3", "cross"}),
}

CrossPair = namedtuple("CrossPair", "p q i j k")
SameIndexPair = namedtuple("SameIndexPair", "p q i j")


@dataclass(frozen=True)
class QcMatrix:
    """One constraint matrix over the lifted vector [x; z(x)]."""

    M: np.ndarray
    kind: str
    source: str
    variant: str = ""

    def __post_init__(self):
        assert self.kind in QC_KINDS


@dataclass(frozen=True)
class Signature:
    """Inertia of a coefficient matrix at a relative eigenvalue cutoff."""

    rank: int
    n_pos: int
    n_neg: int
    eigvals: np.ndarray

    @property
    def label(self) -> str:
        return f"({self.n_pos}+,{self.n_neg}-)"


def classify(Q: np.ndarray, tol: float = 1e-9) -> Signature:
    Q = np.asarray(Q, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    cut = tol * max(1e-300, np.abs(w).max())
    n_pos = int((w > cut).sum())
    n_neg = int((w < -cut).sum())
    return Signature(rank=n_pos + n_neg, n_pos=n_pos, n_neg=n_neg, eigvals=w)


@dataclass(frozen=True)
class ValleyFactors:
    """Factors with Q = (c1 c2^T + c2 c1^T)/2 [+ c3 c3^T], possibly for -Q."""

    c1: np.ndarray
    c2: np.ndarray
    c3: Optional[np.ndarray]
    negated: bool = False
    grouping: str = ""


def _leading_sign(c: np.ndarray) -> float:
    nz = np.nonzero(np.abs(c) > 1e-12 * max(1e-300, np.abs(c).max()))[0]
    if len(nz) == 0:
        return 1.0
    return 1.0 if c[nz[0]] > 0 else -1.0


def _canonical_pair(c1: np.ndarray, c2: np.ndarray):
    """Deterministic representative of {(c1,c2),(c2,c1),(-c1,-c2),(-c2,-c1)}.

    All four produce the same symmetrized product.  Prefer positive leading
    entries, then lexicographic order.
    """
    candidates = [(c1, c2), (c2, c1), (-c1, -c2), (-c2, -c1)]

    def key(pair):
        a, b = pair
        badness = int(_leading_sign(a) < 0) + int(_leading_sign(b) < 0)
        return (badness, tuple(np.round(a, 12)), tuple(np.round(b, 12)))

    return min(candidates, key=key)


def rank2_decompose(Q: np.ndarray, tol: float = 1e-9) -> ValleyFactors:
    """Factor a sign-indefinite rank-2 matrix as Q = (c1 c2^T + c2 c1^T)/2."""
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    sig = classify(Q, tol)
    if (sig.n_pos, sig.n_neg) != (1, 1):
        raise ValueError(f"expected signature (1+,1-), got {sig.label}")
    w, V = np.linalg.eigh(Q)
    lam_n, lam_p = w[0], w[-1]
    v_n, v_p = V[:, 0], V[:, -1]
    c1 = np.sqrt(lam_p) * v_p + np.sqrt(-lam_n) * v_n
    c2 = np.sqrt(lam_p) * v_p - np.sqrt(-lam_n) * v_n
    c1, c2 = _canonical_pair(c1, c2)
    return ValleyFactors(c1=c1, c2=c2, c3=None)


def rank3_decompose(Q: np.ndarray, tol: float = 1e-9) -> tuple[ValleyFactors, ValleyFactors]:
    """Both factorizations Q = (c1 c2^T + c2 c1^T)/2 + c3 c3^T of a rank-3 matrix.

    Requires signature (2+,1-) or (1+,2-); the latter is factored after
    negation and flagged `negated`.  Grouping A pairs the largest positive
    eigenvalue with the negative one, grouping B the smaller positive one.
    """
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    sig = classify(Q, tol)
    negated = False
    if (sig.n_pos, sig.n_neg) == (1, 2):
        Q = -Q
        negated = True
    elif (sig.n_pos, sig.n_neg) != (2, 1):
        raise ValueError(f"expected signature (2+,1-) or (1+,2-), got {sig.label}")
    w, V = np.linalg.eigh(Q)
    cut = tol * np.abs(w).max()
    pos = [i for i in np.argsort(-w, kind="stable") if w[i] > cut]
    neg = [i for i in np.argsort(w, kind="stable") if w[i] < -cut]
    assert len(pos) == 2 and len(neg) == 1
    lam_n, v_n = w[neg[0]], V[:, neg[0]]
    out = []
    # grouping A pairs pos[0] (largest) with the negative direction, B pairs pos[1]
    for grouping, i_pair, i_lone in (("A", pos[0], pos[1]), ("B", pos[1], pos[0])):
        c1 = np.sqrt(w[i_pair]) * V[:, i_pair] + np.sqrt(-lam_n) * v_n
        c2 = np.sqrt(w[i_pair]) * V[:, i_pair] - np.sqrt(-lam_n) * v_n
        c1, c2 = _canonical_pair(c1, c2)
        c3 = np.sqrt(w[i_lone]) * V[:, i_lone]
        c3 = _leading_sign(c3) * c3
        out.append(ValleyFactors(c1=c1, c2=c2, c3=c3, negated=negated, grouping=grouping))
    return tuple(out)


def _lift_dim(basis: MonomialBasis) -> int:
    return basis.n + basis.m


def _assemble(x_block: np.ndarray, w_block: np.ndarray, basis: MonomialBasis,
              kind: str, source: str, variant: str = "") -> QcMatrix:
    n, m = basis.n, basis.m
    M = np.zeros((n + m, n + m))
    M[:n, :n] = 0.5 * (x_block + x_block.T)
    M[n:, n:] = 0.5 * (w_block + w_block.T)
    return QcMatrix(M=M, kind=kind, source=source, variant=variant)


def cs_qc(f: QuadForm, ell: Ellipsoid) -> QcMatrix:
    """Cauchy-Schwarz constraint: alpha^2 x^T Q E^{-1} Q x - (b^T w)^2 >= 0."""
    if f.n != ell.n:
        raise ValueError(f"dimension mismatch: form has n={f.n}, ellipsoid n={ell.n}")
    x_block = ell.alpha**2 * (f.Q @ ell.E_inv @ f.Q)
    w_block = -np.outer(f.b, f.b)
    return _assemble(x_block, w_block, f.basis, CSQC, source=f"phi={_b_repr(f)}")


def _b_repr(f: QuadForm) -> str:
    terms = []
    for k, (i, j) in enumerate(f.basis.pairs):
        if f.b[k] != 0.0:
            mono = f"x{i+1}^2" if i == j else f"x{i+1}*x{j+1}"
            terms.append(f"{f.b[k]:g}*{mono}")
    return " + ".join(terms) if terms else "0"


def _valley_qcs(f: QuadForm, factors: ValleyFactors, gamma: float,
                ell: Ellipsoid, kind: str) -> list[QcMatrix]:
    """Both W choices for one factorization; gamma = 0 when c3 is absent."""
    c1, c2, c3 = factors.c1, factors.c2, factors.c3
    w_block = -np.outer(f.b, f.b)
    tag = f"{factors.grouping}:" if factors.grouping else ""
    extra = gamma * np.outer(c3, c3) if c3 is not None else 0.0
    out = []
    for which, cw, cother in (("W=c1c1T", c1, c2), ("W=c2c2T", c2, c1)):
        W = (cother @ ell.E_inv @ cother) * np.outer(cw, cw)
        x_block = ell.alpha**2 * (W + extra)
        out.append(_assemble(x_block, w_block, f.basis, kind,
                             source=f"phi={_b_repr(f)}", variant=tag + which))
    return out


def rank2_valley_qcs(f: QuadForm, ell: Ellipsoid, tol: float = 1e-9) -> list[QcMatrix]:
    """Two valley constraints for phi with sign-indefinite rank-2 coefficients."""
    if f.n != ell.n:
        raise ValueError("dimension mismatch")
    factors = rank2_decompose(f.Q, tol)
    return _valley_qcs(f, factors, 0.0, ell, RANK2_VALLEY)


def rank3_valley_qcs(f: QuadForm, ell: Ellipsoid, tol: float = 1e-9) -> list[QcMatrix]:
    """Four valley constraints (two groupings x two W choices) for rank-3 phi."""
    if f.n != ell.n:
        raise ValueError("dimension mismatch")
    out = []
    for factors in rank3_decompose(f.Q, tol):
        Qt = -f.Q if factors.negated else f.Q
        R = ell.E_inv_sqrt
        G = R @ (2.0 * Qt - np.outer(factors.c3, factors.c3)) @ R
        gamma = np.linalg.eigvalsh(0.5 * (G + G.T))[-1]
        assert gamma > 0.0, "valley residual term lost its positive direction"
        out.extend(_valley_qcs(f, factors, gamma, ell, RANK3_VALLEY))
    return out


def enumerate_cross_pairs(basis: MonomialBasis) -> list[CrossPair]:
    """Monomial pairs with product x_i^2 x_j x_k (j != k), with their labeling."""
    out = []
    for p in range(basis.m):
        for q in range(p + 1, basis.m):
            prod = sorted(basis.pair(p) + basis.pair(q))
            labelings = set()
            for a in set(prod):
                if prod.count(a) >= 2:
                    rest = list(prod)
                    rest.remove(a)
                    rest.remove(a)
                    if rest[0] != rest[1]:
                        labelings.add((a, rest[0], rest[1]))
            for i, j, k in sorted(labelings):
                out.append(CrossPair(p=p, q=q, i=i, j=j, k=k))
    return out


def enumerate_same_index_pairs(basis: MonomialBasis) -> list[SameIndexPair]:
    """Pairs of squared monomials (x_i^2, x_j^2), i < j."""
    out = []
    for p in range(basis.m):
        ip, jp = basis.pair(p)
        if ip != jp:
            continue
        for q in range(p + 1, basis.m):
            iq, jq = basis.pair(q)
            if iq == jq:
                out.append(SameIndexPair(p=p, q=q, i=ip, j=iq))
    return out


def _pair_source(pair, basis: MonomialBasis) -> str:
    def mono(k):
        i, j = basis.pair(k)
        return f"x{i+1}^2" if i == j else f"x{i+1}*x{j+1}"

    return f"pair ({mono(pair.p)}, {mono(pair.q)})"


def cross_product_qcs(pair: CrossPair, ell: Ellipsoid, basis: MonomialBasis) -> list[QcMatrix]:
    """Four constraints bounding +-2 z_p z_q = +-2 x_i^2 x_j x_k.

    The minus-sign coupling uses d = e_j + e_k, the plus-sign coupling
    d = e_j - e_k; each comes with the two W choices of the linear bound.
    """
    if pair.j == pair.k:
        raise ValueError("same-index pair passed to cross_product_qcs")
    n, m = basis.n, basis.m
    e_i = np.zeros(n)
    e_i[pair.i] = 1.0
    S = np.zeros((m, m))
    S[pair.p, pair.q] = S[pair.q, pair.p] = 1.0
    source = _pair_source(pair, basis)
    out = []
    for sign, sgn_label in ((-1.0, "-S"), (1.0, "+S")):
        d = np.zeros(n)
        d[pair.j] += 1.0
        d[pair.k] += -1.0 if sign > 0 else 1.0
        for W, w_label in (
            (ell.E_inv[pair.i, pair.i] * np.outer(d, d), "W=ddT"),
            ((d @ ell.E_inv @ d) * np.outer(e_i, e_i), "W=eiiT"),
        ):
            out.append(_assemble(ell.alpha**2 * W, sign * S, basis, CROSS_PRODUCT,
                                 source=source, variant=f"{sgn_label}:{w_label}"))
    return out


def same_index_cross_qcs(pair: SameIndexPair, ell: Ellipsoid, basis: MonomialBasis) -> list[QcMatrix]:
    """Two constraints bounding z_p z_q = x_i^2 x_j^2 by either factor."""
    n, m = basis.n, basis.m
    S = np.zeros((m, m))
    S[pair.p, pair.q] = S[pair.q, pair.p] = 1.0
    source = _pair_source(pair, basis)
    out = []
    for idx_bound, idx_keep, label in (
        (pair.i, pair.j, "W=ejjT"),
        (pair.j, pair.i, "W=eiiT"),
    ):
        e = np.zeros(n)
        e[idx_keep] = 1.0
        W = ell.E_inv[idx_bound, idx_bound] * np.outer(e, e)
        out.append(_assemble(ell.alpha**2 * W, -0.5 * S, basis, CROSS_PRODUCT_SAME,
                             source=source, variant=label))
    return out


def signature_flags(sys: QuadraticSystem, tol: float = 1e-9) -> dict[int, str]:
    """Rows whose coefficient signature admits no valley treatment.

    Such rows still get a CSQC; callers surface these in reports.
    """
    flags = {}
    for i in range(sys.n):
        if not sys.B[i].any():
            flags[i] = "zero"
            continue
        sig = classify(sys.row_form(i).Q, tol)
        if (sig.n_pos, sig.n_neg) not in {(1, 1), (2, 1), (1, 2)}:
            flags[i] = f"signature {sig.label}"
    return flags


def _monomial_form(basis: MonomialBasis, k: int) -> QuadForm:
    b = np.zeros(basis.m)
    b[k] = 1.0
    return quadform_from_coeffs(b, basis.n)


def build_qc_set(sys: QuadraticSystem, ell: Ellipsoid, recipe) -> list[QcMatrix]:
    """All constraints of a recipe, deduplicated up to positive scaling.

    `recipe` is a preset name ("set1" .. "set8") or an iterable of family
    tags from {"csqc", "rank2", "rank3", "cross"}.
    """
    if isinstance(recipe, str):
        if recipe not in RECIPES:
            raise ValueError(f"unknown recipe {recipe!r}; presets: {sorted(RECIPES)}")
        parts = RECIPES[recipe]
    else:
        parts = frozenset(recipe)
        unknown = parts - {"csqc", "rank2", "rank3", "cross"}
        if unknown:
            raise ValueError(f"unknown recipe parts: {sorted(unknown)}")
    if sys.n != ell.n:
        raise ValueError("system and ellipsoid dimensions differ")

    basis = sys.basis
    rows = [(i, sys.row_form(i)) for i in range(sys.n) if sys.B[i].any()]
    row_sigs = {i: classify(f.Q) for i, f in rows}
    qcs: list[QcMatrix] = []

    if "csqc" in parts:
        for k in range(basis.m):
            qcs.append(cs_qc(_monomial_form(basis, k), ell))
        for i, f in rows:
            qcs.append(cs_qc(f, ell))
    if "rank2" in parts:
        for k, (i, j) in enumerate(basis.pairs):
            if i != j:
                qcs.extend(rank2_valley_qcs(_monomial_form(basis, k), ell))
        for i, f in rows:
            if (row_sigs[i].n_pos, row_sigs[i].n_neg) == (1, 1):
                qcs.extend(rank2_valley_qcs(f, ell))
    if "rank3" in parts:
        for i, f in rows:
            if (row_sigs[i].n_pos, row_sigs[i].n_neg) in {(2, 1), (1, 2)}:
                qcs.extend(rank3_valley_qcs(f, ell))
    if "cross" in parts:
        for pair in enumerate_cross_pairs(basis):
            qcs.extend(cross_product_qcs(pair, ell, basis))
        for pair in enumerate_same_index_pairs(basis):
            qcs.extend(same_index_cross_qcs(pair, ell, basis))

    # Dedup on unit Frobenius scale: scalar multiples are the same constraint,
    # and keeping both would make the multiplier directions degenerate.
    kept: list[QcMatrix] = []
    normalized: list[np.ndarray] = []
    for qc in qcs:
        nrm = np.linalg.norm(qc.M)
        if nrm == 0.0:
            continue
        Mn = qc.M / nrm
        if any(np.abs(Mn - other).max() <= 1e-9 for other in normalized):
            continue
        kept.append(qc)
        normalized.append(Mn)
    return kept


@dataclass(frozen=True)
class ValidationReport:
    min_value: float
    argmin: np.ndarray
    n_samples: int
    seed: int


def validate_qc_sampled(qc: QcMatrix, ell: Ellipsoid, basis: MonomialBasis,
                        n_samples: int = 10_000, seed: int = 0) -> ValidationReport:
    """Sampled check that the constraint holds on E_alpha.

    Exact arithmetic gives min >= 0; round-off can leave a tiny negative.
    """
    X = ell.sample(n_samples, seed=seed)
    L = np.hstack([X, basis.eval(X)])
    vals = np.einsum("ij,jk,ik->i", L, qc.M, L)
    i = int(np.argmin(vals))
    return ValidationReport(min_value=float(vals[i]), argmin=X[i],
                           n_samples=n_samples, seed=seed)
