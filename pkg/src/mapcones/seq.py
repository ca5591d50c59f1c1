"""Defining sequences (phi_k) of *-maps on M_d.

A :class:`MapSequence` is either a finite tuple or the truncation of a
vanishing sequence, in which case a ``tail_bound`` (sup of the operator norms
of the omitted entries) travels with it and propagates as an explicit error
term into everything built downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import DimensionMismatchError, null_space, vec
from .superop import SuperOperator, is_unital

__all__ = [
    "MapSequence",
    "canonical",
    "KernelVerdict",
    "kernel_condition",
    "xi_embed",
    "xi_matrix",
    "ClosureReport",
    "algebra_closure_check",
]

FINITE_TUPLE = "finite_tuple"
TRUNCATED_VANISHING = "truncated_vanishing"


@dataclass(frozen=True)
class MapSequence:
    """An ordered tuple (phi_1, ..., phi_m) of *-maps on M_d."""

    entries: tuple[SuperOperator, ...]
    kind: str = FINITE_TUPLE
    tail_bound: float = 0.0

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("a map sequence needs at least one entry")
        d = entries[0].d
        for k, phi in enumerate(entries):
            if phi.d != d or phi.h != d:
                raise DimensionMismatchError(f"entry {k} is not a map on M_{d}")
            if not phi.is_star_map():
                raise ValueError(
                    f"entry {k} is not a *-map (Choi defect {phi.star_defect():.3e})"
                )
        if self.kind not in (FINITE_TUPLE, TRUNCATED_VANISHING):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be nonnegative")
        if self.kind == FINITE_TUPLE and self.tail_bound != 0.0:
            raise ValueError("finite tuples carry no tail")
        object.__setattr__(self, "entries", entries)

    @property
    def d(self) -> int:
        return self.entries[0].d

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def norms(self) -> list[float]:
        """HS-induced operator norm of each entry."""
        return [phi.operator_norm() for phi in self.entries]

    def unital_flags(self, tol: float = 1e-8) -> list[bool]:
        return [is_unital(phi, tol) for phi in self.entries]

    def all_unital(self, tol: float = 1e-8) -> bool:
        return all(self.unital_flags(tol))

    def all_hs_isometries(self) -> bool:
        return all(phi.is_hs_isometry() for phi in self.entries)


def canonical(name: str, d: int = 2) -> MapSequence:
    """The sequences generating the classical cones: CP maps are generated by
    (id), co-CP maps by (t) and decomposable maps by (id, t)."""
    if name == "cp":
        return MapSequence((SuperOperator.identity(d),))
    if name == "ccp":
        return MapSequence((SuperOperator.transpose(d),))
    if name == "decomposable":
        return MapSequence((SuperOperator.identity(d), SuperOperator.transpose(d)))
    raise ValueError(f"unknown canonical sequence {name!r}")


def stacked_coeffs(seq: MapSequence) -> np.ndarray:
    """Vertical stack of the entries' action-coefficient matrices; its kernel
    is the common kernel of all phi_k."""
    return np.vstack([phi.coeffs for phi in seq])


class KernelVerdict(NamedTuple):
    ok: bool
    violation: np.ndarray | None  # matrix in the common kernel with phi(a) != 0
    max_image_norm: float


def kernel_condition(seq: MapSequence, phi: SuperOperator, tol: float = 1e-8) -> KernelVerdict:
    """Necessary condition for phi to decompose over seq: the common kernel of
    the phi_k must be annihilated by phi."""
    if phi.d != seq.d:
        raise DimensionMismatchError(f"phi acts on M_{phi.d}, sequence on M_{seq.d}")
    basis = null_space(stacked_coeffs(seq), tol=1e-12)
    worst = 0.0
    violation = None
    for col in basis.T:
        a = col.reshape(seq.d, seq.d)
        norm = float(np.linalg.norm(phi.apply(a)))
        if norm > worst:
            worst = norm
            violation = a
    if worst > tol:
        return KernelVerdict(False, violation, worst)
    return KernelVerdict(True, None, worst)


def xi_embed(a: np.ndarray, seq: MapSequence) -> tuple[np.ndarray, float]:
    """Block-diagonal embedding diag(phi_1(a), ..., phi_m(a)).

    Returns the (m*d, m*d) matrix and the truncation error bound
    tail_bound * ||a|| (the sup of the omitted diagonal blocks' norms, by the
    isometry between vanishing block diagonals and vanishing sequences).
    """
    a = np.asarray(a, dtype=complex)
    d, m = seq.d, len(seq)
    if a.shape != (d, d):
        raise DimensionMismatchError(f"argument shape {a.shape} != {(d, d)}")
    out = np.zeros((m * d, m * d), dtype=complex)
    for k, phi in enumerate(seq):
        out[k * d : (k + 1) * d, k * d : (k + 1) * d] = phi.apply(a)
    return out, seq.tail_bound * float(np.linalg.norm(a, 2))


def xi_matrix(seq: MapSequence) -> np.ndarray:
    """Matrix of vec(a) |-> (vec(phi_1(a)), ..., vec(phi_m(a))); identical to
    :func:`stacked_coeffs` but named for its role as the embedding."""
    return stacked_coeffs(seq)


class ClosureReport(NamedTuple):
    ok: bool
    max_product_residual: float
    max_star_defect: float


def algebra_closure_check(
    seq: MapSequence,
    samples: int = 30,
    tol: float = 1e-8,
    rng: np.random.Generator | None = None,
) -> ClosureReport:
    """Sampling evidence that the image of the block-diagonal embedding is
    closed under products and adjoints (e.g. when all phi_k are
    *-homomorphisms).

    Evidence only: finite sampling cannot certify an algebra. The residual is
    the least-squares distance of xi(a) xi(b) from span{xi(c)}, relative to
    the product's norm.
    """
    rng = rng or np.random.default_rng(0)
    d = seq.d
    xm = xi_matrix(seq)
    # Least-squares projector onto the column span of the embedding,
    # applied to vectorized block diagonals.
    pinv = np.linalg.pinv(xm)
    max_res = 0.0
    max_star = 0.0
    for _ in range(samples):
        a = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
        b = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
        xa, _ = xi_embed(a, seq)
        xb, _ = xi_embed(b, seq)
        prod = xa @ xb
        blocks = np.concatenate(
            [vec(prod[k * d : (k + 1) * d, k * d : (k + 1) * d]) for k in range(len(seq))]
        )
        # Off-diagonal leakage is structurally zero for block diagonals.
        fit = xm @ (pinv @ blocks)
        denom = max(1.0, float(np.linalg.norm(blocks)))
        max_res = max(max_res, float(np.linalg.norm(blocks - fit)) / denom)
        xadag, _ = xi_embed(a.conj().T, seq)
        max_star = max(max_star, float(np.linalg.norm(xa.conj().T - xadag)))
    return ClosureReport(max_res <= tol and max_star <= tol, max_res, max_star)
