"""Conic feasibility for phi = sum_k psi_k o phi_k at the Choi level.

The series membership question becomes: find PSD Choi matrices X_k with
sum_k P_k(X_k) = J(phi), where P_k is the precomposition operator of phi_k.
The solver is Dykstra's alternating projection between the affine set
(projection via a pseudoinverse of the stacked operator, computed once) and
the product PSD cone. Verdicts are certified:

* ``feasible`` carries PSD matrices X_k with a small reconstruction residual,
* ``infeasible`` carries a Hermitian witness W with <W, J(phi)> < 0 and
  P_k^*(W) PSD for every k (so no PSD tuple can reproduce J(phi)),
* ``undetermined`` is the only outcome without an independently re-checkable
  payload; best-effort separations that fail verification land here.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import (
    DimensionMismatchError,
    assert_hermitian,
    dagger,
    eigh_checked,
    hs_inner,
    psd_project,
    vec,
)
from .seq import MapSequence, kernel_condition
from .superop import (
    PrecompositionOperator,
    SuperOperator,
    build_precomposition,
    compose,
    is_cp,
)

__all__ = [
    "FeasibilityProblem",
    "DecompositionCertificate",
    "InfeasibilityWitness",
    "FeasibilityResult",
    "feasibility",
    "verify_certificate",
    "verify_witness",
    "conic_combine",
    "left_compose",
    "closedness_probe",
    "export_sdpa",
]

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNDETERMINED = "undetermined"

PSD_TOL = 1e-8
WITNESS_GAP_TOL = 1e-6
WITNESS_DUAL_TOL = 1e-9
STALL_WINDOW = 500
STALL_REL_DECREASE = 1e-12


@dataclass(frozen=True)
class FeasibilityProblem:
    """Target map, defining sequence, and solver budgets."""

    target: SuperOperator
    seq: MapSequence
    max_iter: int = 50_000
    psd_tol: float = PSD_TOL
    feas_tol_rel: float = 1e-7  # scaled by max(1, ||J(phi)||_F)
    precomps: tuple[PrecompositionOperator, ...] = field(init=False, repr=False)
    stacked: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.target.d != self.seq.d:
            raise DimensionMismatchError(
                f"target acts on M_{self.target.d}, sequence on M_{self.seq.d}"
            )
        precomps = tuple(build_precomposition(phi_k, self.target.h) for phi_k in self.seq)
        object.__setattr__(self, "precomps", precomps)
        object.__setattr__(self, "stacked", np.hstack([p.matrix for p in precomps]))

    @property
    def d(self) -> int:
        return self.target.d

    @property
    def h(self) -> int:
        return self.target.h

    @property
    def dh(self) -> int:
        return self.target.d * self.target.h

    @property
    def feas_tol(self) -> float:
        return self.feas_tol_rel * max(1.0, float(np.linalg.norm(self.target.choi)))


@dataclass(frozen=True)
class DecompositionCertificate:
    """PSD Choi matrices of the psi_k witnessing the decomposition."""

    xs: tuple[np.ndarray, ...]
    residual: float

    def psi_maps(self, d: int, h: int) -> list[SuperOperator]:
        return [SuperOperator.from_choi(x, d, h) for x in self.xs]


@dataclass(frozen=True)
class InfeasibilityWitness:
    """Hermitian W separating J(phi) from the image of the PSD product."""

    w: np.ndarray
    gap: float  # -<W, J(phi)> > 0
    dual_margins: tuple[float, ...]  # lambda_min(P_k^*(W)) per k


class FeasibilityResult(NamedTuple):
    status: str
    certificate: DecompositionCertificate | None
    witness: InfeasibilityWitness | None
    diagnostics: dict

    @property
    def tail_slack(self) -> float:
        return self.diagnostics.get("tail_slack", 0.0)


def _split(z: np.ndarray, m: int, dh: int) -> list[np.ndarray]:
    return [z[k * dh * dh : (k + 1) * dh * dh].reshape(dh, dh) for k in range(m)]


def _join(mats) -> np.ndarray:
    return np.concatenate([vec(x) for x in mats])


def verify_certificate(
    cert: DecompositionCertificate,
    prob: FeasibilityProblem,
    tol: float | None = None,
) -> bool:
    """Re-check both certificate invariants from scratch: every X_k is PSD
    within tolerance and the precomposed sum reproduces J(phi)."""
    tol = prob.feas_tol if tol is None else tol
    if len(cert.xs) != len(prob.seq):
        return False
    total = np.zeros((prob.dh, prob.dh), dtype=complex)
    for x, p in zip(cert.xs, prob.precomps):
        if x.shape != (prob.dh, prob.dh):
            return False
        try:
            xh = assert_hermitian(x, tol=1e-8)
        except ValueError:
            return False
        if float(eigh_checked(xh)[0][0]) < -prob.psd_tol:
            return False
        total += p.apply(xh)
    return bool(np.linalg.norm(total - prob.target.choi) <= tol + prob.seq.tail_bound)


def verify_witness(
    witness: InfeasibilityWitness | np.ndarray,
    prob: FeasibilityProblem,
    gap_tol: float = WITNESS_GAP_TOL,
    dual_tol: float = WITNESS_DUAL_TOL,
) -> bool:
    """Re-check the separation: <W, J(phi)> < -gap_tol while every P_k^*(W)
    is PSD within dual_tol. Such a W rules out any PSD solution exactly."""
    w = witness.w if isinstance(witness, InfeasibilityWitness) else witness
    try:
        w = assert_hermitian(w, tol=1e-8)
    except ValueError:
        return False
    pairing = float(np.real(hs_inner(w, prob.target.choi)))
    if pairing > -gap_tol:
        return False
    for p in prob.precomps:
        if float(eigh_checked(p.adjoint_apply(w))[0][0]) < -dual_tol:
            return False
    return True


def _witness_from_kernel(prob: FeasibilityProblem, violation: np.ndarray) -> InfeasibilityWitness | None:
    """Exact witness from a common-kernel element a with phi(a) != 0.

    Splitting a into Hermitian parts (both stay in the kernel since the
    phi_k are *-maps) gives Hermitian c with phi(c) != 0; for an eigenpair
    (mu, w) of phi(c), W = -sign(mu) c^T (x) w w^dag pairs to -|mu| with
    J(phi) while P_k^*(W) = 0 identically.
    """
    cands = [0.5 * (violation + dagger(violation)), (violation - dagger(violation)) / 2j]
    for c in cands:
        img = prob.target.apply(c)
        if np.linalg.norm(img) < 1e-12:
            continue
        wvals, wvecs = eigh_checked(img, tol=1e-8)
        idx = int(np.argmax(np.abs(wvals)))
        mu, wv = float(wvals[idx]), wvecs[:, idx]
        w = -np.sign(mu) * np.kron(c.T, np.outer(wv, wv.conj()))
        w /= np.linalg.norm(w)
        witness = _finalize_witness(w, prob)
        if witness is not None:
            return witness
    return None


def _finalize_witness(w: np.ndarray, prob: FeasibilityProblem) -> InfeasibilityWitness | None:
    w = 0.5 * (w + dagger(w))
    norm = np.linalg.norm(w)
    if norm < 1e-14:
        return None
    w = w / norm
    pairing = float(np.real(hs_inner(w, prob.target.choi)))
    margins = tuple(float(eigh_checked(p.adjoint_apply(w))[0][0]) for p in prob.precomps)
    witness = InfeasibilityWitness(w, -pairing, margins)
    if verify_witness(witness, prob):
        return witness
    return None


def _polish_witness(w: np.ndarray, prob: FeasibilityProblem, rounds: int = 3000) -> np.ndarray:
    """Dykstra refinement of a raw witness onto the dual cone intersected
    with a separating halfspace. Only exact for HS-isometry sequences, where
    each {W : P_k^*(W) PSD} admits a conjugate-project-conjugate projection."""
    if not prob.seq.all_hs_isometries():
        return w
    j = prob.target.choi
    jn_mat = j / np.linalg.norm(j)
    raw_pairing = float(np.real(np.vdot(jn_mat, w)))
    # Keep half the raw separation as slack so the constrained dual set
    # stays nonempty while the PSD margins are repaired.
    target_pairing = min(-WITNESS_GAP_TOL * 10, 0.5 * raw_pairing)
    x = w.copy()
    m = len(prob.precomps)
    corrections = [np.zeros_like(w) for _ in range(m + 1)]
    for _ in range(rounds):
        x_prev = x
        for k, p in enumerate(prob.precomps):
            y = x + corrections[k]
            img = p.adjoint_apply(y)
            proj = p.apply(psd_project(img))  # (P_k^*)^{-1} = P_k for isometries
            corrections[k] = y - proj
            x = proj
        y = x + corrections[m]
        # Halfspace {<W, J/||J||> <= target_pairing} in the real HS geometry.
        overlap = float(np.real(np.vdot(jn_mat, y)))
        if overlap > target_pairing:
            proj = y - (overlap - target_pairing) * jn_mat
        else:
            proj = y
        corrections[m] = y - proj
        x = 0.5 * (proj + dagger(proj))
        if np.linalg.norm(x - x_prev) <= 1e-13 * max(1.0, np.linalg.norm(x)):
            break
    return x


def feasibility(prob: FeasibilityProblem) -> FeasibilityResult:
    """Decide membership of phi in the cone generated by the sequence.

    Runs the kernel necessary condition first (a failure yields an exact
    witness), then Dykstra between the affine set and the PSD product.
    """
    t0 = time.perf_counter()
    diagnostics: dict = {"tail_slack": prob.seq.tail_bound}

    kv = kernel_condition(prob.seq, prob.target, tol=max(prob.feas_tol, 1e-9))
    if not kv.ok:
        witness = _witness_from_kernel(prob, kv.violation)
        diagnostics["kernel_violation"] = True
        diagnostics["wall_time"] = time.perf_counter() - t0
        if witness is not None:
            return FeasibilityResult(INFEASIBLE, None, witness, diagnostics)
        return FeasibilityResult(UNDETERMINED, None, None, diagnostics)

    m, dh = len(prob.seq), prob.dh
    s = prob.stacked
    b = vec(prob.target.choi)
    u, sing, vh = np.linalg.svd(s, full_matrices=False)
    rank = int(np.sum(sing > 1e-12 * sing[0]))
    u, sing, vh = u[:, :rank], sing[:rank], vh[:rank]

    def affine_project(z: np.ndarray) -> np.ndarray:
        r = s @ z - b
        return z - dagger(vh) @ ((u.conj().T @ r) / sing)

    def gram_pinv(r: np.ndarray) -> np.ndarray:
        # (S S^dag)^+ r via the same SVD.
        return u @ ((u.conj().T @ r) / sing**2)

    z = affine_project(np.zeros(m * dh * dh, dtype=complex))
    corr = np.zeros_like(z)
    feas_tol = prob.feas_tol
    best_res = np.inf
    window_best = np.inf
    since_improve = 0
    trace: list[float] = []
    iterations = 0

    for it in range(prob.max_iter):
        iterations = it + 1
        y_mats = [psd_project(x) for x in _split(z + corr, m, dh)]
        y = _join(y_mats)
        corr = (z + corr) - y
        res = float(np.linalg.norm(s @ y - b))
        if res <= feas_tol:
            cert = DecompositionCertificate(tuple(y_mats), res)
            diagnostics.update(iterations=iterations, residual=res)
            diagnostics["wall_time"] = time.perf_counter() - t0
            if verify_certificate(cert, prob):
                return FeasibilityResult(FEASIBLE, cert, None, diagnostics)
        z = affine_project(y)

        best_res = min(best_res, res)
        if it % 25 == 0:
            trace.append(res)
        if res < window_best * (1 - STALL_REL_DECREASE):
            window_best = res
            since_improve = 0
        else:
            since_improve += 1
        if since_improve >= STALL_WINDOW:
            break

    # Stalled or budget exhausted: attempt witness extraction from the
    # residual displacement mapped through the Gram pseudoinverse.
    y_mats = [psd_project(x) for x in _split(z + corr, m, dh)]
    r = s @ _join(y_mats) - b
    diagnostics.update(iterations=iterations, residual=float(np.linalg.norm(r)), distance_trace=trace)
    raw = gram_pinv(r).reshape(dh, dh)
    raw = 0.5 * (raw + dagger(raw))
    diagnostics["wall_time"] = time.perf_counter() - t0
    if np.linalg.norm(raw) > 1e-13:
        polished = _polish_witness(raw / np.linalg.norm(raw), prob)
        for cand in (polished, raw):
            witness = _finalize_witness(cand, prob)
            if witness is not None:
                diagnostics["wall_time"] = time.perf_counter() - t0
                return FeasibilityResult(INFEASIBLE, None, witness, diagnostics)
    return FeasibilityResult(UNDETERMINED, None, None, diagnostics)


def conic_combine(
    cert_a: DecompositionCertificate,
    cert_b: DecompositionCertificate,
    lam1: float,
    lam2: float,
) -> DecompositionCertificate:
    """Certificate for lam1 phi_A + lam2 phi_B from certificates of the parts;
    the decomposable cone is closed under conical combinations."""
    if lam1 <= 0 or lam2 <= 0:
        raise ValueError("conic weights must be positive")
    if len(cert_a.xs) != len(cert_b.xs):
        raise DimensionMismatchError("certificates have different lengths")
    xs = tuple(lam1 * xa + lam2 * xb for xa, xb in zip(cert_a.xs, cert_b.xs))
    return DecompositionCertificate(xs, lam1 * cert_a.residual + lam2 * cert_b.residual)


def left_compose(
    cert: DecompositionCertificate,
    psi: SuperOperator,
    prob: FeasibilityProblem,
) -> tuple[DecompositionCertificate, FeasibilityProblem]:
    """Certificate for psi o phi from a certificate for phi and a CP psi
    (the decomposable cone is a left mapping cone). Returns the new
    certificate together with the composed problem it certifies."""
    verdict = is_cp(psi)
    if not verdict.ok:
        raise ValueError(f"left factor is not CP (margin {verdict.margin:.3e})")
    if psi.d != prob.h:
        raise DimensionMismatchError(f"psi.d={psi.d} != target.h={prob.h}")
    d = prob.d
    new_xs = []
    for x in cert.xs:
        psi_k = SuperOperator.from_choi(0.5 * (x + dagger(x)), d, prob.h)
        new_xs.append(compose(psi, psi_k).choi)
    new_target = compose(psi, prob.target)
    new_prob = FeasibilityProblem(new_target, prob.seq, prob.max_iter, prob.psd_tol, prob.feas_tol_rel)
    new_cert = DecompositionCertificate(tuple(new_xs), cert.residual * max(1.0, psi.operator_norm()))
    return new_cert, new_prob


def closedness_probe(
    targets: list[SuperOperator],
    limit: SuperOperator,
    seq: MapSequence,
    max_iter: int = 50_000,
) -> FeasibilityResult:
    """Desk-scale surrogate for closedness: given feasible targets whose Choi
    matrices converge to J(phi), the limit must not produce a verified
    witness. Returns the limit's feasibility result after asserting that."""
    for t in targets:
        if t.d != limit.d or t.h != limit.h:
            raise DimensionMismatchError("probe sequence has inconsistent shapes")
    result = feasibility(FeasibilityProblem(limit, seq, max_iter=max_iter))
    if result.status == INFEASIBLE:
        raise AssertionError(
            "limit of feasible maps produced a verified infeasibility witness"
        )
    return result


def export_sdpa(prob: FeasibilityProblem, path) -> None:
    """Write the feasibility problem in sparse SDPA form (see mapcones.sdpa)."""
    from .sdpa import write_sdpa

    write_sdpa(prob, path)
