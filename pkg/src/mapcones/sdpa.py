"""Sparse SDPA interchange for the Choi-level feasibility problem.

Grammar (SDPA sparse, see the SDPLIB documentation):

    * comment lines start with '*' or '"'
    <m>                       number of constraints
    <nblocks>                 number of PSD blocks
    <s1> <s2> ... <snblocks>  block sizes
    <c1> ... <cm>             right-hand sides
    <matno> <blkno> <i> <j> <value>   one entry per line, 1-based,
                                      upper triangle only; matno 0 is the
                                      objective (absent here: pure feasibility)

Encoding: the complex Hermitian variables X_k become real symmetric blocks
Y_k of size 2*dh via the embedding iota(X) = [[Re X, -Im X], [Im X, Re X]],
which preserves eigenvalues with doubled multiplicity. Each real-linear
equality component <B_i, sum_k P_k(X_k)> = <B_i, J(phi)> over a Hermitian
basis B_i of M_dh becomes tr(F_{i,k} Y_k) summed over blocks = c_i with
F_{i,k} = iota(herm(P_k^*(B_i))) / 2. Averaging the off-diagonal quadrants
of any PSD Y recovers a Hermitian PSD X with identical constraint values,
so feasibility of the real program is equivalent to the complex one.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import dagger

__all__ = [
    "SdpaProblem",
    "hermitian_basis",
    "real_embed",
    "build_sdpa_data",
    "write_sdpa",
    "read_sdpa",
    "ExternalVerdict",
    "solve_sdpa",
]

ENTRY_EPS = 1e-14


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """Deterministically ordered (unnormalized) Hermitian basis of M_dim:
    E_aa on the diagonal, then E_ab + E_ba and i(E_ab - E_ba) for a < b."""
    basis = []
    for a in range(dim):
        for b in range(a, dim):
            e = np.zeros((dim, dim), dtype=complex)
            if a == b:
                e[a, a] = 1.0
                basis.append(e)
            else:
                e[a, b] = 1.0
                e[b, a] = 1.0
                basis.append(e.copy())
                e2 = np.zeros((dim, dim), dtype=complex)
                e2[a, b] = 1.0j
                e2[b, a] = -1.0j
                basis.append(e2)
    return basis


def real_embed(m: np.ndarray) -> np.ndarray:
    """iota(M) = [[Re M, -Im M], [Im M, Re M]]; symmetric for Hermitian M."""
    re, im = np.real(m), np.imag(m)
    return np.block([[re, -im], [im, re]])


def real_unembed(y: np.ndarray) -> np.ndarray:
    """Average the quadrants of a symmetric 2n x 2n matrix back to the
    Hermitian matrix with identical pairings (PSD is preserved)."""
    n = y.shape[0] // 2
    a = 0.5 * (y[:n, :n] + y[n:, n:])
    b = 0.5 * (y[n:, :n] - y[:n, n:])
    x = a + 1j * b
    return 0.5 * (x + dagger(x))


@dataclass(frozen=True)
class SdpaProblem:
    n_constraints: int
    block_sizes: tuple[int, ...]
    rhs: np.ndarray
    entries: tuple[tuple[int, int, int, int, float], ...]  # (matno, blk, i, j, val)

    def dense_constraint(self, matno: int) -> list[np.ndarray]:
        """Dense symmetric F_{matno, k} per block (0 is the objective)."""
        mats = [np.zeros((s, s)) for s in self.block_sizes]
        for mno, blk, i, j, val in self.entries:
            if mno == matno:
                mats[blk - 1][i - 1, j - 1] = val
                mats[blk - 1][j - 1, i - 1] = val
        return mats


def build_sdpa_data(prob) -> SdpaProblem:
    """Assemble the SDPA data for a :class:`~mapcones.decomp.FeasibilityProblem`."""
    dh = prob.dh
    n_blocks = len(prob.seq)
    block_sizes = tuple([2 * dh] * n_blocks)
    basis = hermitian_basis(dh)
    j_choi = prob.target.choi
    rhs = np.array([float(np.real(np.trace(b @ j_choi))) for b in basis])
    entries: list[tuple[int, int, int, int, float]] = []
    for i, b in enumerate(basis):
        for k, p in enumerate(prob.precomps):
            hk = p.adjoint_apply(b)
            hk = 0.5 * (hk + dagger(hk))
            f = 0.5 * real_embed(hk)
            rows, cols = np.nonzero(np.abs(f) > ENTRY_EPS)
            for r, c in zip(rows, cols):
                if r <= c:
                    entries.append((i + 1, k + 1, int(r) + 1, int(c) + 1, float(f[r, c])))
    return SdpaProblem(len(basis), block_sizes, rhs, tuple(entries))


def write_sdpa(prob, path) -> None:
    data = build_sdpa_data(prob)
    lines = [
        "* Choi-level decomposition feasibility problem",
        f"* d={prob.d} h={prob.h} terms={len(prob.seq)}",
        str(data.n_constraints),
        str(len(data.block_sizes)),
        " ".join(str(s) for s in data.block_sizes),
        " ".join(repr(float(c)) for c in data.rhs),
    ]
    for matno, blk, i, j, val in data.entries:
        lines.append(f"{matno} {blk} {i} {j} {val!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_sdpa(path) -> SdpaProblem:
    raw = Path(path).read_text().splitlines()
    body = [ln for ln in raw if ln.strip() and ln.lstrip()[0] not in "*\""]
    m = int(body[0])
    n_blocks = int(body[1])
    sizes = tuple(
        abs(int(tok)) for tok in body[2].replace("{", " ").replace("}", " ").replace(",", " ").split()
    )
    if len(sizes) != n_blocks:
        raise ValueError(f"expected {n_blocks} block sizes, found {len(sizes)}")
    rhs = np.array([float(tok) for tok in body[3].split()])
    if rhs.size != m:
        raise ValueError(f"expected {m} right-hand sides, found {rhs.size}")
    entries = []
    for ln in body[4:]:
        toks = ln.split()
        entries.append((int(toks[0]), int(toks[1]), int(toks[2]), int(toks[3]), float(toks[4])))
    return SdpaProblem(m, sizes, rhs, tuple(entries))


@dataclass(frozen=True)
class ExternalVerdict:
    status: str  # "feasible" | "infeasible" | "unknown"
    max_violation: float  # optimal l_inf constraint violation over PSD blocks
    solver: str


def solve_sdpa(data: SdpaProblem, solver: str | None = None) -> ExternalVerdict:
    """Independent feasibility check of parsed SDPA data with cvxpy.

    Minimizes the worst constraint violation over the product of PSD blocks;
    an optimum near zero means feasible, a clearly positive optimum certifies
    positive distance from the (closed, at desk scale) feasible image.
    """
    import cvxpy as cp

    ys = [cp.Variable((s, s), symmetric=True) for s in data.block_sizes]
    t = cp.Variable(nonneg=True)
    constraints = [y >> 0 for y in ys]
    f_dense = [data.dense_constraint(i + 1) for i in range(data.n_constraints)]
    for i in range(data.n_constraints):
        expr = sum(cp.trace(f_dense[i][k] @ ys[k]) for k in range(len(ys)))
        constraints += [expr - data.rhs[i] <= t, data.rhs[i] - expr <= t]
    problem = cp.Problem(cp.Minimize(t), constraints)
    solvers = [solver] if solver else ["CLARABEL", "SCS"]
    last_err = None
    for name in solvers:
        try:
            problem.solve(solver=name)
        except (cp.SolverError, ValueError) as err:  # pragma: no cover
            last_err = err
            continue
        if problem.status in ("optimal", "optimal_inaccurate"):
            viol = float(t.value)
            if viol <= 1e-6:
                return ExternalVerdict("feasible", viol, name)
            if viol >= 1e-5:
                return ExternalVerdict("infeasible", viol, name)
            return ExternalVerdict("unknown", viol, name)
    if last_err is not None:  # pragma: no cover
        raise RuntimeError(f"no solver handled the problem: {last_err}")
    return ExternalVerdict("unknown", float("nan"), solvers[-1])
