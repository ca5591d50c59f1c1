"""Deterministic property suites runnable from the command line.

Each suite exercises one structural fact at desk scale; ``--full`` raises the
sample counts. Output is one PASS/FAIL line per suite (no timing, so runs
with the same seed are byte-identical).
"""

from __future__ import annotations

import zlib

import numpy as np

from .decomp import (
    FEASIBLE,
    INFEASIBLE,
    FeasibilityProblem,
    conic_combine,
    feasibility,
    left_compose,
    verify_certificate,
    verify_witness,
)
from .dilation import block_dilation, eta_direct_sum, eta_reshuffle
from .gamma import blockwise_apply, gamma_membership, gamma_sample
from .instances import random_cp_map, random_feasible_target, random_sequence
from .linalg import (
    partial_transpose,
    psd_project,
    random_hermitian,
    random_psd,
    random_unitary,
)
from .seq import canonical
from .superop import SuperOperator, build_precomposition, compose

__all__ = ["run_selftest"]


def _suite_linalg(rng, n_samples):
    for _ in range(n_samples):
        dim = int(rng.integers(2, 9))
        m = random_hermitian(dim, rng)
        p = psd_project(m)
        if np.linalg.norm(psd_project(p) - p) > 1e-9:
            return False
        y = random_psd(dim, rng)
        if np.linalg.norm(p - m) > np.linalg.norm(y - m) + 1e-9:
            return False
        n, d = 2, dim
        block = random_hermitian(n * d, rng)
        pt = partial_transpose(block, n, d, "outer")
        if abs(np.linalg.norm(pt) - np.linalg.norm(block)) > 1e-10:
            return False
        if np.linalg.norm(partial_transpose(pt, n, d, "outer") - block) > 1e-12:
            return False
    return True


def _suite_superop(rng, n_samples):
    for _ in range(n_samples):
        d, h = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        psi = random_cp_map(h, int(rng.integers(2, 4)), rng)
        phi = random_cp_map(d, h, rng)
        comp = compose(psi, phi)
        from .superop import is_cp

        if not is_cp(comp).ok:
            return False
        phi_k = random_cp_map(d, d, rng)
        p = build_precomposition(phi_k, h)
        test_psi = random_cp_map(d, h, rng)
        lhs = p.apply(test_psi.choi)
        rhs = compose(test_psi, phi_k).choi
        if np.linalg.norm(lhs - rhs) > 1e-10:
            return False
    return True


def _suite_cone_structure(rng, n_samples):
    for _ in range(n_samples):
        d, h = 2, 2
        seq = random_sequence(d, rng)
        t1, _ = random_feasible_target(seq, h, rng)
        t2, _ = random_feasible_target(seq, h, rng)
        p1 = FeasibilityProblem(t1, seq, max_iter=8000)
        p2 = FeasibilityProblem(t2, seq, max_iter=8000)
        r1, r2 = feasibility(p1), feasibility(p2)
        if r1.status != FEASIBLE or r2.status != FEASIBLE:
            return False
        lam1, lam2 = float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.2, 2.0))
        combined = conic_combine(r1.certificate, r2.certificate, lam1, lam2)
        combo_prob = FeasibilityProblem(lam1 * t1 + lam2 * t2, seq)
        if not verify_certificate(combined, combo_prob):
            return False
        psi = random_cp_map(h, h, rng)
        new_cert, new_prob = left_compose(r1.certificate, psi, p1)
        if not verify_certificate(new_cert, new_prob):
            return False
    return True


def _suite_forward_direction(rng, n_samples):
    for _ in range(n_samples):
        d, h = 2, 2
        seq = random_sequence(d, rng)
        if not seq.all_hs_isometries():
            seq = canonical("decomposable", d)
        target, _ = random_feasible_target(seq, h, rng)
        n = int(rng.integers(1, 4))
        a = gamma_sample(seq, n, rng)
        if not gamma_membership(a, seq, n).ok:
            return False
        img = blockwise_apply(target, a, n)
        if float(np.linalg.eigvalsh(img)[0]) < -1e-6:
            return False
    return True


def _suite_dilation(rng, n_samples):
    for _ in range(n_samples):
        d, h = 2, 2
        seq = canonical("decomposable", d)
        target, _ = random_feasible_target(seq, h, rng)
        prob = FeasibilityProblem(target, seq, max_iter=8000)
        result = feasibility(prob)
        if result.status != FEASIBLE:
            return False
        dil = block_dilation(result.certificate, seq, prob)
        for _ in range(5):
            x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            if np.linalg.norm(dil.reconstruct(x) - target.apply(x)) > 1e-6:
                return False
    return True


def _suite_eta(rng, n_samples):
    for _ in range(n_samples):
        n, m, d = 2, 2, 2
        size = n * m * d

        def rand_block_diag_entries():
            h = np.zeros((size, size), dtype=complex)
            for i in range(n):
                for j in range(n):
                    for k in range(m):
                        blk = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                        r0 = i * m * d + k * d
                        c0 = j * m * d + k * d
                        h[r0 : r0 + d, c0 : c0 + d] = blk
            return h

        h1, h2 = rand_block_diag_entries(), rand_block_diag_entries()
        lhs = eta_direct_sum(eta_reshuffle(h1 @ h2, n, m, d))
        rhs = eta_direct_sum(eta_reshuffle(h1, n, m, d)) @ eta_direct_sum(eta_reshuffle(h2, n, m, d))
        if np.linalg.norm(lhs - rhs) > 1e-12:
            return False
    return True


def _suite_duality(rng, n_samples):
    for _ in range(n_samples):
        d = 2
        seq = canonical("decomposable", d)
        target, _ = random_feasible_target(seq, d, rng)
        prob = FeasibilityProblem(target, seq, max_iter=8000)
        result = feasibility(prob)
        if result.status == FEASIBLE and not verify_certificate(result.certificate, prob):
            return False
        if result.status == INFEASIBLE:
            return False  # planted feasible target must not produce a witness
    # A known infeasible instance must yield a verified witness.
    prob = FeasibilityProblem(SuperOperator.transpose(2), canonical("cp", 2), max_iter=6000)
    result = feasibility(prob)
    if result.status != INFEASIBLE or not verify_witness(result.witness, prob):
        return False
    return True


SUITES = {
    "linalg_projections": (_suite_linalg, 40, 120),
    "superop_composition": (_suite_superop, 20, 80),
    "cone_structure": (_suite_cone_structure, 5, 25),
    "forward_direction": (_suite_forward_direction, 10, 40),
    "dilation_reconstruction": (_suite_dilation, 5, 20),
    "eta_isomorphism": (_suite_eta, 25, 100),
    "soundness_duality": (_suite_duality, 5, 20),
}


def run_selftest(quick: bool = True, seed: int = 0, tol: float | None = None) -> bool:
    all_ok = True
    for name, (fn, quick_n, full_n) in SUITES.items():
        rng = np.random.default_rng(seed ^ zlib.crc32(name.encode()))
        ok = fn(rng, quick_n if quick else full_n)
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"selftest: {'PASS' if all_ok else 'FAIL'} ({len(SUITES)} suites, seed {seed})")
    return bool(all_ok)
