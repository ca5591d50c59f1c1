"""Choi's positive nondecomposable map on M_3, rejected with a certificate.

The map Phi(X) with diagonal (x11+x33, x22+x11, x33+x22) and negated
off-diagonal entries is positive but cannot be written as CP + co-CP. The
solver returns a Hermitian witness W that pairs negatively with the Choi
matrix of Phi while both precomposition adjoints keep it PSD, which is
exactly the separating functional the duality predicts. The verdict is then
cross-checked by an independent SDP solver on the exported problem data.
"""

import numpy as np

from mapcones import FeasibilityProblem, canonical, feasibility
from mapcones.decomp import verify_witness
from mapcones.gamma import criterion_violation_search
from mapcones.instances import choi_map
from mapcones.sdpa import build_sdpa_data, solve_sdpa
from mapcones.superop import is_ccp, is_cp, is_positive_heuristic


def main():
    phi = choi_map()
    print("target: Choi's map on M_3, sequence (id, t)")
    print(f"is CP:  margin {is_cp(phi).margin:+.3f}")
    print(f"is co-CP: margin {is_ccp(phi).margin:+.3f}")
    print(f"positivity search: {is_positive_heuristic(phi).positive_evidence}")

    prob = FeasibilityProblem(phi, canonical("decomposable", 3), max_iter=20000)
    result = feasibility(prob)
    print(f"\nverdict: {result.status}")
    w = result.witness
    print(f"witness gap: {w.gap:.4f}  dual margins: {[f'{m:.1e}' for m in w.dual_margins]}")
    print(f"witness re-verifies: {verify_witness(w, prob)}")

    verdict = solve_sdpa(build_sdpa_data(prob))
    print(f"external SDP cross-check: {verdict.status} "
          f"(violation {verdict.max_violation:.3e}, solver {verdict.solver})")

    outcome = criterion_violation_search(
        phi, canonical("decomposable", 3), n=3, restarts=10, rng=np.random.default_rng(0)
    )
    print(f"\ncone-criterion search at n = 3: violation value {outcome.value:.5f}")
    print("a PSD + PPT block matrix maps to something with a negative eigenvalue,")
    print("so the map fails the membership criterion from the other side too")


if __name__ == "__main__":
    main()
