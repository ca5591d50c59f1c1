"""The cones of block matrices whose blockwise images are all PSD.

For a sequence (phi_k) on M_d and outer size n, the cone contains the
Hermitian A in M_n(M_d) such that [phi_k(a_ij)]_ij is PSD for every k.
Membership is an exact spectral test; sampling and violation search use
cyclic Dykstra projections, which require every phi_k to be an HS isometry
(then the pullback of the PSD cone has an exact orthogonal projection:
conjugate by the isometry, project, conjugate back). For general sequences
the projection-based operations fall back to rejection sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import (
    DimensionMismatchError,
    assert_hermitian,
    dagger,
    eigh_checked,
    psd_project,
    random_hermitian,
    random_psd,
)
from .seq import MapSequence
from .superop import SuperOperator

__all__ = [
    "blockwise_apply",
    "MembershipVerdict",
    "gamma_membership",
    "project_gamma",
    "gamma_sample",
    "Violation",
    "NoneFound",
    "criterion_violation_search",
]

MEMBERSHIP_TOL = 1e-8
VIOLATION_TOL = 1e-6  # two orders of magnitude above membership tol


def blockwise_apply(phi: SuperOperator, a: np.ndarray, n: int) -> np.ndarray:
    """Apply phi to each d x d block of an (nd, nd) matrix, i.e. id_n (x) phi."""
    d, h = phi.d, phi.h
    if a.shape != (n * d, n * d):
        raise DimensionMismatchError(f"expected shape {(n * d, n * d)}, got {a.shape}")
    a4 = a.reshape(n, d, n, d)
    c4 = phi.coeffs.reshape(h, h, d, d)
    return np.einsum("pqij,aibj->apbq", c4, a4, optimize=True).reshape(n * h, n * h)


class MembershipVerdict(NamedTuple):
    ok: bool
    margins: list[float]  # lambda_min of [phi_k(a_ij)] per k

    @property
    def min_margin(self) -> float:
        return min(self.margins)


def gamma_membership(
    a: np.ndarray, seq: MapSequence, n: int, tol: float = MEMBERSHIP_TOL
) -> MembershipVerdict:
    """Exact membership test with per-entry spectral margins."""
    a = assert_hermitian(a)
    if a.shape != (n * seq.d, n * seq.d):
        raise DimensionMismatchError(
            f"expected shape {(n * seq.d, n * seq.d)}, got {a.shape}"
        )
    margins = []
    for phi in seq:
        img = blockwise_apply(phi, a, n)
        margins.append(float(eigh_checked(img, tol=1e-9)[0][0]))
    return MembershipVerdict(min(margins) >= -tol, margins)


def _pullback_project(a: np.ndarray, phi: SuperOperator, n: int) -> np.ndarray:
    """Orthogonal projection onto {A : (id_n (x) phi)(A) PSD} for an
    HS-isometry phi: push through, clip, pull back."""
    inv = SuperOperator(phi.d, phi.d, dagger(phi.coeffs))  # isometry inverse
    img = blockwise_apply(phi, a, n)
    return blockwise_apply(inv, psd_project(img), n)


def project_gamma(
    a: np.ndarray,
    seq: MapSequence,
    n: int,
    max_iter: int = 2000,
    tol: float = MEMBERSHIP_TOL,
) -> tuple[np.ndarray, bool]:
    """Dykstra projection onto the intersection of the pullback cones.

    Dykstra (not plain alternating projections) so the result is the metric
    projection of the start point; POCS alone can stall on thin cones and
    lands at an arbitrary intersection point.
    """
    if not seq.all_hs_isometries():
        raise ValueError("projection requires every phi_k to be an HS isometry")
    a = assert_hermitian(a)
    m = len(seq)
    x = a.copy()
    corrections = [np.zeros_like(a) for _ in range(m)]
    for _ in range(max_iter):
        x_prev = x
        for k, phi in enumerate(seq):
            y = x + corrections[k]
            x = _pullback_project(y, phi, n)
            corrections[k] = y - x
        if gamma_membership(x, seq, n, tol).ok and np.linalg.norm(x - x_prev) <= 1e-12 * max(
            1.0, np.linalg.norm(x)
        ):
            return x, True
        if gamma_membership(x, seq, n, tol * 0.1).ok:
            return x, True
    return x, gamma_membership(x, seq, n, tol).ok


def gamma_sample(
    seq: MapSequence,
    n: int,
    rng: np.random.Generator | None = None,
    max_iter: int = 2000,
    tol: float = MEMBERSHIP_TOL,
    start: np.ndarray | None = None,
) -> np.ndarray:
    """Random member of the cone, by Dykstra projection from a random
    Hermitian start (or rejection sampling for non-isometry sequences)."""
    rng = rng or np.random.default_rng(0)
    nd = n * seq.d
    if seq.all_hs_isometries():
        a = start if start is not None else random_hermitian(nd, rng)
        proj, ok = project_gamma(a, seq, n, max_iter, tol)
        if ok:
            return proj
        raise RuntimeError(f"Dykstra failed to reach the cone in {max_iter} iterations")
    # Fallback: rejection sampling from random PSD starts.
    for _ in range(max_iter):
        a = random_psd(nd, rng)
        if gamma_membership(a, seq, n, tol).ok:
            return a
    raise RuntimeError("rejection sampling found no cone member")


class Violation(NamedTuple):
    a: np.ndarray  # trace-normalized cone member
    v: np.ndarray  # unit vector
    value: float  # <v, [phi(a_ij)] v> < -VIOLATION_TOL
    membership: MembershipVerdict


class NoneFound(NamedTuple):
    best_value: float


def criterion_violation_search(
    phi: SuperOperator,
    seq: MapSequence,
    n: int,
    restarts: int = 8,
    steps: int = 60,
    rng: np.random.Generator | None = None,
    membership_tol: float = MEMBERSHIP_TOL,
    violation_tol: float = VIOLATION_TOL,
) -> Violation | NoneFound:
    """Search for a cone member A whose blockwise image under phi is not PSD.

    See-saw: alternate the minimal eigenvector v of (id_n (x) phi)(A) with a
    descent step on A against the linearized objective, followed by Dykstra
    re-projection into the cone and trace renormalization. Heuristic: a
    ``NoneFound`` outcome is not a proof; any reported violation satisfies
    both the membership and the negativity re-check.
    """
    rng = rng or np.random.default_rng(0)
    if phi.d != seq.d:
        raise DimensionMismatchError(f"phi acts on M_{phi.d}, sequence on M_{seq.d}")
    adj = phi.adjoint()
    best = np.inf
    best_witness = None

    for _ in range(restarts):
        try:
            a = gamma_sample(seq, n, rng)
        except RuntimeError:
            continue
        tr = float(np.real(np.trace(a)))
        if tr < 1e-10:
            continue
        a = a / tr
        step = 0.5
        for _ in range(steps):
            img = blockwise_apply(phi, a, n)
            w, q = eigh_checked(img, tol=1e-8)
            lam, v = float(w[0]), q[:, 0]
            if lam < best:
                best = lam
                best_witness = (a.copy(), v.copy(), lam)
            # Descent on <vv^dag, (id (x) phi)(A)> = <(id (x) phi^*)(vv^dag), A>.
            grad = blockwise_apply(adj, np.outer(v, v.conj()), n)
            gnorm = float(np.linalg.norm(grad))
            if gnorm < 1e-14:
                break
            a_new = a - step * grad / gnorm
            a_new, ok = project_gamma(a_new, seq, n, max_iter=400, tol=membership_tol)
            tr = float(np.real(np.trace(a_new)))
            if not ok or tr < 1e-10:
                step *= 0.5
                if step < 1e-4:
                    break
                continue
            a_new = a_new / tr
            if np.linalg.norm(a_new - a) < 1e-12:
                break
            a = a_new

    if best_witness is not None and best < -violation_tol:
        a, v, lam = best_witness
        member = gamma_membership(a, seq, n, membership_tol)
        if member.ok:
            return Violation(a, v, lam, member)
    return NoneFound(best)
