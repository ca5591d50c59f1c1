"""Constructive side of decomposability: Stinespring data from PSD Choi
matrices, block dilations assembled from feasibility certificates, the
block-diagonal reshuffling isomorphism, the factor map through the embedding,
and the unitization extension of CP maps on embedded subalgebras.
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
    random_complex,
)
from .seq import MapSequence, kernel_condition, xi_embed, xi_matrix
from .superop import SuperOperator, is_cp

__all__ = [
    "StinespringData",
    "stinespring",
    "BlockDilation",
    "block_dilation",
    "eta_reshuffle",
    "eta_direct_sum",
    "FactorMap",
    "build_factor_map",
    "SubalgebraModel",
    "embedded_block_subalgebra",
    "SubalgebraMap",
    "cb_norm_cp",
    "UnitizedMap",
    "unitized_extension",
    "cp_sample_check",
]

KRAUS_CUTOFF = 1e-10  # relative eigenvalue cutoff; stabilizes the rank


@dataclass(frozen=True)
class StinespringData:
    """Dilation psi(a) = V^dag pi(a) V with pi(a) = a (x) I_r on C^d (x) C^r."""

    d: int
    h: int
    kraus: tuple[np.ndarray, ...]  # r operators, each h x d
    v: np.ndarray  # (d*r) x h

    @property
    def rank(self) -> int:
        return len(self.kraus)

    @property
    def dilation_dim(self) -> int:
        return self.d * self.rank

    def pi(self, a: np.ndarray) -> np.ndarray:
        """The representation a |-> a (x) I_r (a unital *-homomorphism)."""
        return np.kron(np.asarray(a, dtype=complex), np.eye(self.rank))

    def reconstruct(self, a: np.ndarray) -> np.ndarray:
        return dagger(self.v) @ self.pi(a) @ self.v


def stinespring(psi: SuperOperator, tol: float = 1e-8) -> StinespringData:
    """Kraus operators and dilation data from the eigendecomposition of the
    (PSD) Choi matrix; eigenvalues below the relative cutoff are dropped."""
    verdict = is_cp(psi, tol)
    if not verdict.ok:
        raise ValueError(f"map is not CP (margin {verdict.margin:.3e})")
    d, h = psi.d, psi.h
    w, u = eigh_checked(psi.choi, tol=1e-8)
    lam_max = max(float(w[-1]), 0.0)
    kraus = []
    for lam, col in zip(w, u.T):
        if lam > KRAUS_CUTOFF * max(lam_max, 1e-300):
            # Eigenvector indexed (i, beta) with i the input leg: K[beta, i].
            kraus.append(np.sqrt(lam) * col.reshape(d, h).T)
    if not kraus:
        kraus = [np.zeros((h, d), dtype=complex)]
    r = len(kraus)
    v = np.zeros((d * r, h), dtype=complex)
    for idx, k in enumerate(kraus):
        # V x = sum_idx (K_idx^dag x) (x) e_idx.
        kd = dagger(k)  # d x h
        for i in range(d):
            v[i * r + idx, :] = kd[i, :]
    return StinespringData(d, h, tuple(kraus), v)


@dataclass(frozen=True)
class BlockDilation:
    """Direct-sum dilation phi(a) = V^dag rho(a) V with
    rho(a) = sum_k P_k pi_k(phi_k(a)) P_k on the direct sum of the per-term
    dilation spaces."""

    parts: tuple[StinespringData, ...]
    seq: MapSequence
    v: np.ndarray  # (sum_k dim_k) x h

    @property
    def total_dim(self) -> int:
        return sum(p.dilation_dim for p in self.parts)

    def rho(self, a: np.ndarray) -> np.ndarray:
        blocks = [part.pi(phi_k.apply(a)) for part, phi_k in zip(self.parts, self.seq)]
        out = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        off = 0
        for b in blocks:
            out[off : off + b.shape[0], off : off + b.shape[0]] = b
            off += b.shape[0]
        return out

    def reconstruct(self, a: np.ndarray) -> np.ndarray:
        return dagger(self.v) @ self.rho(a) @ self.v


def block_dilation(cert, seq: MapSequence, prob) -> BlockDilation:
    """Assemble the dilation from a verified certificate: Stinespring each
    psi_k, direct-sum the spaces, stack the V_k."""
    from .decomp import verify_certificate

    if seq.kind != "finite_tuple":
        raise ValueError("block dilation requires a finite tuple")
    if not verify_certificate(cert, prob):
        raise ValueError("certificate failed verification; refusing to dilate")
    d, h = prob.d, prob.h
    parts = []
    for x in cert.xs:
        xh = assert_hermitian(x, tol=1e-8)
        # Clip solver-level negative dust so the Choi is exactly PSD.
        w, u = eigh_checked(xh)
        xh = (u * np.maximum(w, 0.0)) @ dagger(u)
        parts.append(stinespring(SuperOperator.from_choi(xh, d, h)))
    v = np.vstack([p.v for p in parts])
    return BlockDilation(tuple(parts), seq, v)


def eta_reshuffle(h_mat: np.ndarray, n: int, m: int, d: int) -> list[np.ndarray]:
    """Index permutation M_n(diag blocks of size d) -> direct sum of m
    matrices in M_n(M_d): out_k[(i,a),(j,b)] = H[(i,k,a),(j,k,b)].

    The input must have block-diagonal entries: H[(i,k,a),(j,l,b)] = 0 for
    k != l.
    """
    size = n * m * d
    h_mat = np.asarray(h_mat, dtype=complex)
    if h_mat.shape != (size, size):
        raise DimensionMismatchError(f"expected shape {(size, size)}, got {h_mat.shape}")
    h6 = h_mat.reshape(n, m, d, n, m, d)
    off_diag = h6.copy()
    for k in range(m):
        off_diag[:, k, :, :, k, :] = 0.0
    if np.linalg.norm(off_diag) > 1e-12 * max(1.0, np.linalg.norm(h_mat)):
        raise ValueError("entries are not block-diagonal")
    return [h6[:, k, :, :, k, :].reshape(n * d, n * d) for k in range(m)]


def eta_direct_sum(blocks: list[np.ndarray]) -> np.ndarray:
    """Direct sum of the reshuffled components, handy for checking that the
    reshuffle is multiplicative."""
    total = sum(b.shape[0] for b in blocks)
    out = np.zeros((total, total), dtype=complex)
    off = 0
    for b in blocks:
        out[off : off + b.shape[0], off : off + b.shape[0]] = b
        off += b.shape[0]
    return out


class FactorMap(NamedTuple):
    """The factor of phi through the block-diagonal embedding: on the span of
    the embedded image, x |-> phi(a) for any least-squares preimage a."""

    seq: MapSequence
    target: SuperOperator
    pinv: np.ndarray  # pseudoinverse of the stacked embedding matrix

    def __call__(self, x: np.ndarray) -> np.ndarray:
        d, m = self.seq.d, len(self.seq)
        x = np.asarray(x, dtype=complex)
        if x.shape != (m * d, m * d):
            raise DimensionMismatchError(f"expected shape {(m * d, m * d)}, got {x.shape}")
        stacked = np.concatenate(
            [x[k * d : (k + 1) * d, k * d : (k + 1) * d].reshape(-1) for k in range(m)]
        )
        a = (self.pinv @ stacked).reshape(d, d)
        return self.target.apply(a)


def build_factor_map(phi: SuperOperator, seq: MapSequence, tol: float = 1e-8) -> FactorMap:
    """Well-defined only under the kernel condition (two preimages of the
    same embedded point differ by a common-kernel element, which phi must
    annihilate); refuses otherwise."""
    kv = kernel_condition(seq, phi, tol)
    if not kv.ok:
        raise ValueError(
            f"kernel condition fails (image norm {kv.max_image_norm:.3e}); factor map is ill-defined"
        )
    return FactorMap(seq, phi, np.linalg.pinv(xi_matrix(seq)))


# -- embedded subalgebras and the unitization extension ----------------------


@dataclass(frozen=True)
class SubalgebraModel:
    """A *-subalgebra of M_D whose unit p differs from the ambient identity.

    The formal unitization (adjoining an abstract unit) is represented
    faithfully as {a + z I_D}; faithfulness requires I_D to be linearly
    independent of the subalgebra, which holds exactly when p != I_D.
    """

    ambient_dim: int
    basis: tuple[np.ndarray, ...]
    unit: np.ndarray  # the subalgebra's unit p

    def __post_init__(self):
        d = self.ambient_dim
        basis = tuple(np.asarray(b, dtype=complex) for b in self.basis)
        for b in basis:
            if b.shape != (d, d):
                raise DimensionMismatchError("basis element has wrong shape")
        p = np.asarray(self.unit, dtype=complex)
        if np.linalg.norm(p @ p - p) > 1e-10 or np.linalg.norm(p - dagger(p)) > 1e-10:
            raise ValueError("unit is not an orthogonal projection")
        if np.linalg.norm(p - np.eye(d)) < 1e-10:
            raise ValueError("subalgebra unit equals the ambient identity; unitization not faithful")
        mat = np.column_stack([b.reshape(-1) for b in basis] + [np.eye(d, dtype=complex).reshape(-1)])
        if np.linalg.matrix_rank(mat) < len(basis) + 1:
            raise ValueError("ambient identity is not independent of the subalgebra basis")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "unit", p)

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.ambient_dim) - self.unit

    def split(self, e: np.ndarray) -> tuple[np.ndarray, complex]:
        """Split e = a + z I_D with a in the subalgebra; z is read off the
        complement of p, where every subalgebra element vanishes."""
        q = self.complement
        z = complex(np.trace(q @ e) / np.trace(q))
        return e - z * np.eye(self.ambient_dim), z


def embedded_block_subalgebra(
    ambient_dim: int, block_dim: int, unitary: np.ndarray | None = None
) -> tuple[SubalgebraModel, np.ndarray]:
    """M_k embedded in the upper-left corner of M_D (optionally rotated by a
    unitary). Returns the model and the embedding isometry W (D x k) with
    a = W a_small W^dag."""
    if block_dim >= ambient_dim:
        raise ValueError("block must be a proper corner of the ambient algebra")
    w = np.zeros((ambient_dim, block_dim), dtype=complex)
    w[:block_dim, :block_dim] = np.eye(block_dim)
    if unitary is not None:
        w = np.asarray(unitary, dtype=complex) @ w
    basis = []
    for i in range(block_dim):
        for j in range(block_dim):
            e = np.zeros((block_dim, block_dim), dtype=complex)
            e[i, j] = 1.0
            basis.append(w @ e @ dagger(w))
    return SubalgebraModel(ambient_dim, tuple(basis), w @ dagger(w)), w


@dataclass(frozen=True)
class SubalgebraMap:
    """A CP map on an embedded subalgebra, given by compressing to the
    block coordinates and applying an inner CP map there."""

    model: SubalgebraModel
    iso: np.ndarray  # D x k embedding isometry
    inner: SuperOperator  # CP map M_k -> M_hout

    def __post_init__(self):
        verdict = is_cp(self.inner)
        if not verdict.ok:
            raise ValueError(f"inner map is not CP (margin {verdict.margin:.3e})")

    @property
    def out_dim(self) -> int:
        return self.inner.h

    def apply(self, a: np.ndarray) -> np.ndarray:
        return self.inner.apply(dagger(self.iso) @ np.asarray(a, dtype=complex) @ self.iso)


def cb_norm_cp(t: SubalgebraMap) -> float:
    """CB norm of a CP map: the operator norm of the image of the unit."""
    return float(np.linalg.norm(t.apply(t.model.unit), 2))


@dataclass(frozen=True)
class UnitizedMap:
    """Extension (a, z) |-> T(a) + z * scale * I to the represented
    unitization {a + z I_D}; with scale = ||T||_cb the extension of a CP map
    is completely positive."""

    base: SubalgebraMap
    scale: float

    def apply(self, a: np.ndarray, z: complex) -> np.ndarray:
        return self.base.apply(a) + z * self.scale * np.eye(self.base.out_dim)


def unitized_extension(t: SubalgebraMap, scale: float | None = None) -> UnitizedMap:
    return UnitizedMap(t, cb_norm_cp(t) if scale is None else float(scale))


def cp_sample_check(
    ext: UnitizedMap,
    n: int,
    samples: int,
    rng: np.random.Generator,
    margin: float = -1e-9,
    adversarial: bool = True,
) -> tuple[bool, float]:
    """Sampled complete-positivity evidence for the unitized extension.

    Draws PSD elements of M_n(unitization) as B^dag B with B random in the
    represented algebra, applies the extension entrywise and checks the image
    is PSD within ``margin``. Includes the deterministic adversarial sample
    built from (-p, 1), which is tight for the CP constant and violated by
    any smaller one. Returns (ok, worst eigenvalue found).
    """
    model = ext.base.model
    d_amb = model.ambient_dim
    hout = ext.base.out_dim
    worst = np.inf

    def check(entries: list[list[tuple[np.ndarray, complex]]]) -> float:
        img = np.zeros((n * hout, n * hout), dtype=complex)
        for i in range(n):
            for j in range(n):
                a, z = entries[i][j]
                img[i * hout : (i + 1) * hout, j * hout : (j + 1) * hout] = ext.apply(a, z)
        return float(eigh_checked(img, tol=1e-7)[0][0])

    draws = []
    for _ in range(samples):
        # Random element of M_n(represented unitization).
        b = np.zeros((n * d_amb, n * d_amb), dtype=complex)
        for i in range(n):
            for j in range(n):
                coeff = random_complex(len(model.basis) + 1, 1, rng)[:, 0]
                e = sum(c * bas for c, bas in zip(coeff[:-1], model.basis))
                e = e + coeff[-1] * np.eye(d_amb)
                b[i * d_amb : (i + 1) * d_amb, j * d_amb : (j + 1) * d_amb] = e
        a_mat = dagger(b) @ b  # PSD and inside M_n(unitization)
        draws.append(a_mat)
    if adversarial and n >= 1:
        # (-p, 1) at the corner: positive since I - p >= 0, tight for the
        # extension constant.
        adv = np.zeros((n * d_amb, n * d_amb), dtype=complex)
        adv[:d_amb, :d_amb] = np.eye(d_amb) - model.unit
        draws.append(adv)

    for a_mat in draws:
        entries = []
        for i in range(n):
            row = []
            for j in range(n):
                e = a_mat[i * d_amb : (i + 1) * d_amb, j * d_amb : (j + 1) * d_amb]
                row.append(model.split(e))
            entries.append(row)
        worst = min(worst, check(entries))
    return worst >= margin, worst
