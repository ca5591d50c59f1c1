"""Canonical maps and the self-test corpus.

``choi_map`` is the classical positive but nondecomposable map on M_3
(M.-D. Choi, Linear Algebra Appl. 12 (1975) 95-100; see also Choi's 1980
note on positive linear maps), transcribed entrywise:

    Phi(X) = [[x11 + x33, -x12, -x13],
              [-x21, x22 + x11, -x23],
              [-x31, -x32, x33 + x22]].

The corpus mixes feasible-by-construction targets over the canonical
sequences with known infeasible targets and kernel-violating instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomp import FeasibilityProblem
from .linalg import random_complex, random_psd, random_unitary
from .seq import MapSequence, canonical
from .superop import SuperOperator, build_precomposition, compose

__all__ = [
    "choi_map",
    "breuer_hall_like_witness_map",
    "random_cp_map",
    "random_star_map",
    "random_feasible_target",
    "CorpusInstance",
    "generate_corpus",
]


def choi_map() -> SuperOperator:
    def action(x: np.ndarray) -> np.ndarray:
        out = -x.copy()
        out[0, 0] = x[0, 0] + x[2, 2]
        out[1, 1] = x[1, 1] + x[0, 0]
        out[2, 2] = x[2, 2] + x[1, 1]
        return out

    return SuperOperator.from_action(action, 3, 3)


def breuer_hall_like_witness_map(d: int = 2) -> SuperOperator:
    """tr(.) I - id, the reduction map; positive, and co-CP for d = 2."""
    return SuperOperator.from_action(lambda a: np.trace(a) * np.eye(d) - a, d, d)


def random_cp_map(d: int, h: int, rng: np.random.Generator, scale: float = 1.0) -> SuperOperator:
    """CP map with a Ginibre-ensemble PSD Choi matrix."""
    return SuperOperator.from_choi(scale * random_psd(d * h, rng) / (d * h), d, h)


def random_star_map(d: int, h: int, rng: np.random.Generator) -> SuperOperator:
    """Random *-map (Hermitian Choi, not necessarily CP or positive)."""
    g = random_complex(d * h, d * h, rng)
    return SuperOperator.from_choi(0.5 * (g + g.conj().T) / (d * h), d, h)


def random_sequence(d: int, rng: np.random.Generator) -> MapSequence:
    """One of (id), (t), (id, t) or a pair of unitary conjugations."""
    kind = rng.integers(0, 4)
    if kind == 0:
        return canonical("cp", d)
    if kind == 1:
        return canonical("ccp", d)
    if kind == 2:
        return canonical("decomposable", d)
    entries = tuple(
        SuperOperator.conjugation(random_unitary(d, rng)) for _ in range(int(rng.integers(1, 3)))
    )
    return MapSequence(entries)


def random_feasible_target(
    seq: MapSequence, h: int, rng: np.random.Generator
) -> tuple[SuperOperator, list[np.ndarray]]:
    """Target built as sum_k psi_k o phi_k from random CP psi_k; feasible by
    construction. Returns the target and the planted Choi matrices."""
    d = seq.d
    total = SuperOperator.zero(d, h)
    planted = []
    for phi_k in seq:
        psi_k = random_cp_map(d, h, rng)
        planted.append(psi_k.choi)
        total = total + compose(psi_k, phi_k)
    return total, planted


@dataclass(frozen=True)
class CorpusInstance:
    name: str
    problem: FeasibilityProblem
    expected: str | None  # "feasible" | "infeasible" | None (either is fine)


def _kernel_violating_instance(d: int, rng: np.random.Generator) -> FeasibilityProblem:
    """Sequence annihilating a fixed Hermitian direction that the target maps
    to something nonzero: the kernel necessary condition must reject it."""
    c = np.zeros((d, d), dtype=complex)
    c[0, 1] = 1.0
    c[1, 0] = 1.0
    proj = np.eye(d * d, dtype=complex) - np.outer(c.reshape(-1), c.conj().reshape(-1)) / 2.0
    killer = SuperOperator(d, d, proj)  # annihilates c, fixes its HS complement
    seq = MapSequence((killer,))
    target = SuperOperator.identity(d)  # id(c) = c != 0
    return FeasibilityProblem(target, seq, max_iter=2000)


def generate_corpus(seed: int = 0, size: int = 210) -> list[CorpusInstance]:
    """Deterministic corpus of at least ``size`` instances at desk scale."""
    rng = np.random.default_rng(seed)
    corpus: list[CorpusInstance] = []

    # Named regression instances.
    corpus.append(
        CorpusInstance(
            "transpose_m2_over_id_t",
            FeasibilityProblem(SuperOperator.transpose(2), canonical("decomposable", 2), feas_tol_rel=1e-10),
            "feasible",
        )
    )
    corpus.append(
        CorpusInstance(
            "identity_m2_over_id",
            FeasibilityProblem(SuperOperator.identity(2), canonical("cp", 2), feas_tol_rel=1e-10),
            "feasible",
        )
    )
    corpus.append(
        CorpusInstance(
            "transpose_m2_over_id",
            FeasibilityProblem(SuperOperator.transpose(2), canonical("cp", 2), max_iter=6000),
            "infeasible",
        )
    )
    corpus.append(
        CorpusInstance(
            "identity_m2_over_t",
            FeasibilityProblem(SuperOperator.identity(2), canonical("ccp", 2), max_iter=6000),
            "infeasible",
        )
    )
    corpus.append(
        CorpusInstance(
            "choi_map_m3_over_id_t",
            FeasibilityProblem(choi_map(), canonical("decomposable", 3), max_iter=20000),
            "infeasible",
        )
    )
    corpus.append(
        CorpusInstance(
            "reduction_map_m2_over_id_t",
            FeasibilityProblem(breuer_hall_like_witness_map(2), canonical("decomposable", 2), feas_tol_rel=1e-10),
            "feasible",
        )
    )

    n_feasible = max(size - len(corpus) - 40, 140)
    for i in range(n_feasible):
        d = int(rng.integers(2, 4))
        h = int(rng.integers(2, 4))
        seq = random_sequence(d, rng)
        target, _ = random_feasible_target(seq, h, rng)
        corpus.append(
            CorpusInstance(
                f"random_feasible_{i:03d}",
                FeasibilityProblem(target, seq, max_iter=30000, feas_tol_rel=1e-10),
                "feasible",
            )
        )

    for i in range(20):
        d = 2
        corpus.append(
            CorpusInstance(f"kernel_violation_{i:02d}", _kernel_violating_instance(d, rng), "infeasible")
        )

    for i in range(10):
        # Transposes scaled by a positive weight stay infeasible over (id).
        scale = float(rng.uniform(0.5, 3.0))
        corpus.append(
            CorpusInstance(
                f"scaled_transpose_{i:02d}",
                FeasibilityProblem(scale * SuperOperator.transpose(2), canonical("cp", 2), max_iter=6000),
                "infeasible",
            )
        )

    for i in range(10):
        # Random *-maps: either verdict is acceptable as long as it verifies.
        d = 2
        seq = canonical("decomposable", d)
        corpus.append(
            CorpusInstance(
                f"random_star_{i:02d}",
                FeasibilityProblem(random_star_map(d, d, rng), seq, max_iter=8000),
                None,
            )
        )
    return corpus
