"""Linear maps M_d -> M_h and their Choi matrices.

A map is stored by its action on matrix units: ``coeffs`` is the h^2 x d^2
complex matrix whose column (i, j) (flat index i*d + j) holds vec(phi(E_ij)).
Maps are *not* stored as Kraus sets because defining sequences may contain
non-CP entries such as the transposition. The Choi matrix

    J(phi) = sum_ij E_ij (x) phi(E_ij)

is cached at construction; it is Hermitian exactly when phi is a *-map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .linalg import (
    DimensionMismatchError,
    NotHermitianError,
    dagger,
    eigh_checked,
    hermitian_defect,
    partial_transpose,
    random_complex,
    vec,
)

__all__ = [
    "SuperOperator",
    "PrecompositionOperator",
    "compose",
    "CpVerdict",
    "is_cp",
    "is_ccp",
    "is_unital",
    "PositivityReport",
    "is_positive_heuristic",
    "build_precomposition",
    "coeffs_to_choi",
    "choi_to_coeffs",
]

STAR_MAP_TOL = 1e-10


def coeffs_to_choi(coeffs: np.ndarray, d: int, h: int) -> np.ndarray:
    """Reshuffle action coefficients into the Choi matrix.

    J[(i, a), (j, b)] = phi(E_ij)[a, b] = coeffs[a*h + b, i*d + j].
    """
    c4 = coeffs.reshape(h, h, d, d)  # [a, b, i, j]
    return c4.transpose(2, 0, 3, 1).reshape(d * h, d * h)


def choi_to_coeffs(choi: np.ndarray, d: int, h: int) -> np.ndarray:
    """Inverse of :func:`coeffs_to_choi` (a bijective index permutation)."""
    j4 = choi.reshape(d, h, d, h)  # [i, a, j, b]
    return j4.transpose(1, 3, 0, 2).reshape(h * h, d * d)


@dataclass(frozen=True)
class SuperOperator:
    """A linear map M_d -> M_h given by its action on matrix units."""

    d: int
    h: int
    coeffs: np.ndarray
    choi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coeffs = np.ascontiguousarray(np.asarray(self.coeffs, dtype=complex))
        if coeffs.shape != (self.h * self.h, self.d * self.d):
            raise DimensionMismatchError(
                f"coeffs shape {coeffs.shape} != {(self.h * self.h, self.d * self.d)}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coeffs has non-finite entries")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "choi", coeffs_to_choi(coeffs, self.d, self.h))

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_action(cls, f: Callable[[np.ndarray], np.ndarray], d: int, h: int) -> "SuperOperator":
        coeffs = np.zeros((h * h, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                coeffs[:, i * d + j] = vec(np.asarray(f(e), dtype=complex))
        return cls(d, h, coeffs)

    @classmethod
    def from_choi(cls, choi: np.ndarray, d: int, h: int) -> "SuperOperator":
        choi = np.asarray(choi, dtype=complex)
        if choi.shape != (d * h, d * h):
            raise DimensionMismatchError(f"Choi shape {choi.shape} != {(d * h, d * h)}")
        return cls(d, h, choi_to_coeffs(choi, d, h))

    @classmethod
    def from_kraus(cls, kraus: list[np.ndarray]) -> "SuperOperator":
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        h, d = kraus[0].shape
        return cls.from_action(lambda a: sum(k @ a @ dagger(k) for k in kraus), d, h)

    @classmethod
    def identity(cls, d: int) -> "SuperOperator":
        return cls(d, d, np.eye(d * d, dtype=complex))

    @classmethod
    def transpose(cls, d: int) -> "SuperOperator":
        return cls.from_action(lambda a: a.T, d, d)

    @classmethod
    def conjugation(cls, k: np.ndarray) -> "SuperOperator":
        """a |-> K a K^dag for a fixed h x d matrix K."""
        k = np.asarray(k, dtype=complex)
        return cls.from_kraus([k])

    @classmethod
    def trace_replace(cls, d: int, h: int | None = None) -> "SuperOperator":
        """a |-> tr(a) I_h / h."""
        h = h or d
        return cls.from_action(lambda a: np.trace(a) * np.eye(h) / h, d, h)

    @classmethod
    def zero(cls, d: int, h: int | None = None) -> "SuperOperator":
        h = h or d
        return cls(d, h, np.zeros((h * h, d * d), dtype=complex))

    # -- algebra -----------------------------------------------------------

    def apply(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.d, self.d):
            raise DimensionMismatchError(f"argument shape {a.shape} != {(self.d, self.d)}")
        return (self.coeffs @ vec(a)).reshape(self.h, self.h)

    def __call__(self, a: np.ndarray) -> np.ndarray:
        return self.apply(a)

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        if (self.d, self.h) != (other.d, other.h):
            raise DimensionMismatchError("cannot add maps of different shapes")
        return SuperOperator(self.d, self.h, self.coeffs + other.coeffs)

    def __sub__(self, other: "SuperOperator") -> "SuperOperator":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "SuperOperator":
        return SuperOperator(self.d, self.h, complex(scalar) * self.coeffs)

    __rmul__ = __mul__

    def adjoint(self) -> "SuperOperator":
        """HS adjoint phi^*: M_h -> M_d, <phi^*(Y), X> = <Y, phi(X)>."""
        return SuperOperator(self.h, self.d, dagger(self.coeffs))

    # -- predicates --------------------------------------------------------

    def star_defect(self) -> float:
        """Hermitian defect of the Choi matrix; zero iff phi is a *-map."""
        return hermitian_defect(self.choi)

    def is_star_map(self, tol: float = STAR_MAP_TOL) -> bool:
        return self.star_defect() <= tol

    def is_hs_isometry(self, tol: float = 1e-10) -> bool:
        """True when phi preserves the HS inner product (e.g. id, t, unitary
        conjugations); such maps admit exact pullback projections."""
        if self.d != self.h:
            return False
        gram = dagger(self.coeffs) @ self.coeffs
        return bool(np.linalg.norm(gram - np.eye(self.d * self.d)) <= tol * self.d)

    def operator_norm(self) -> float:
        """Operator norm induced by the HS norm (largest singular value of
        the action-coefficient matrix)."""
        return float(np.linalg.norm(self.coeffs, 2))


def compose(psi: SuperOperator, phi: SuperOperator) -> SuperOperator:
    """(psi o phi)(a) = psi(phi(a)); requires psi.d == phi.h."""
    if psi.d != phi.h:
        raise DimensionMismatchError(f"cannot compose: psi.d={psi.d} != phi.h={phi.h}")
    return SuperOperator(phi.d, psi.h, psi.coeffs @ phi.coeffs)


class CpVerdict(NamedTuple):
    ok: bool
    margin: float


def is_cp(phi: SuperOperator, tol: float = 1e-8) -> CpVerdict:
    """Complete positivity test: lambda_min(J(phi)) >= -tol.

    Rejects non-*-maps (their Choi matrix is not Hermitian, so the spectral
    test is meaningless).
    """
    defect = phi.star_defect()
    if defect > STAR_MAP_TOL:
        raise NotHermitianError(defect, f"not a *-map (Choi defect {defect:.3e})")
    margin = float(eigh_checked(phi.choi)[0][0])
    return CpVerdict(margin >= -tol, margin)


def is_ccp(phi: SuperOperator, tol: float = 1e-8) -> CpVerdict:
    """Complete copositivity: the partial transpose of J(phi) is PSD."""
    defect = phi.star_defect()
    if defect > STAR_MAP_TOL:
        raise NotHermitianError(defect, f"not a *-map (Choi defect {defect:.3e})")
    pt = partial_transpose(phi.choi, phi.d, phi.h, "outer")
    margin = float(eigh_checked(pt)[0][0])
    return CpVerdict(margin >= -tol, margin)


def is_unital(phi: SuperOperator, tol: float = 1e-8) -> bool:
    if phi.d != phi.h:
        return False
    return bool(np.linalg.norm(phi.apply(np.eye(phi.d)) - np.eye(phi.h)) <= tol)


class PositivityReport(NamedTuple):
    positive_evidence: bool
    min_value: float
    u: np.ndarray | None
    v: np.ndarray | None


def is_positive_heuristic(
    phi: SuperOperator,
    samples: int = 50,
    restarts: int = 10,
    tol: float = 1e-9,
    rng: np.random.Generator | None = None,
) -> PositivityReport:
    """See-saw search for a positivity violation <v, phi(u u^dag) v> < -tol.

    Evidence only: a ``positive_evidence`` outcome is never a proof, only the
    report that multi-restart alternating eigenvector minimization found no
    violating unit-vector pair (u, v). Deciding positivity exactly is NP-hard.
    """
    rng = rng or np.random.default_rng(0)
    adj = phi.adjoint()
    best = np.inf
    best_pair = (None, None)

    def value(u, v):
        return float(np.real(np.vdot(v, phi.apply(np.outer(u, u.conj())) @ v)))

    for _ in range(restarts):
        u = random_complex(phi.d, 1, rng)[:, 0]
        u /= np.linalg.norm(u)
        for _ in range(samples):
            # v-step: minimal eigenvector of phi(u u^dag)
            w, q = eigh_checked(phi.apply(np.outer(u, u.conj())), tol=1e-8)
            v = q[:, 0]
            # u-step: minimal eigenvector of phi^*(v v^dag)
            w2, q2 = eigh_checked(adj.apply(np.outer(v, v.conj())), tol=1e-8)
            u_new = q2[:, 0]
            val = value(u_new, v)
            if val < best:
                best, best_pair = val, (u_new, v)
            if np.linalg.norm(u_new - u) < 1e-12:
                break
            u = u_new
    if best < -tol:
        return PositivityReport(False, best, *best_pair)
    return PositivityReport(True, best, None, None)


@dataclass(frozen=True)
class PrecompositionOperator:
    """Linear operator P_k on vectorized Choi matrices with
    P_k(vec(J(psi))) = vec(J(psi o phi_k)) for every psi: M_d -> M_h.

    Acts as Lambda_k (x) id on the first tensor factor, where Lambda_k is the
    map on M_d with action coefficients coeffs(phi_k)^T.
    """

    source: SuperOperator
    h: int
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        phi_k, h = self.source, self.h
        d = phi_k.d
        # J(psi o phi_k) = sum_pq Lambda_k(E_pq) (x) psi(E_pq): replace the
        # outer (d x d) index pattern of J(psi) by its image under Lambda_k.
        lam = phi_k.coeffs.T.reshape(d, d, d, d)  # [p, q, i, j]
        eye_h = np.eye(h)
        p = np.einsum("pqij,aA,bB->paqbiAjB", lam, eye_h, eye_h, optimize=True)
        dh = d * h
        object.__setattr__(self, "matrix", np.ascontiguousarray(p.reshape(dh * dh, dh * dh)))

    @property
    def dh(self) -> int:
        return self.source.d * self.h

    def apply(self, x: np.ndarray) -> np.ndarray:
        dh = self.dh
        return (self.matrix @ vec(x)).reshape(dh, dh)

    def adjoint_matrix(self) -> np.ndarray:
        """Matrix of P_k^* in the HS pairing (conjugate transpose, since the
        row-major vec convention respects the HS inner product)."""
        return dagger(self.matrix)

    def adjoint_apply(self, w: np.ndarray) -> np.ndarray:
        dh = self.dh
        return (self.adjoint_matrix() @ vec(w)).reshape(dh, dh)


def build_precomposition(phi_k: SuperOperator, h: int) -> PrecompositionOperator:
    """Precomposition operator for a *-map phi_k on M_d, at output size h."""
    if phi_k.d != phi_k.h:
        raise DimensionMismatchError("precomposition requires phi_k : M_d -> M_d")
    return PrecompositionOperator(phi_k, h)
