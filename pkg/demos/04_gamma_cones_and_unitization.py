"""Two structural sidelights: the matrix-level cones and the unitization bound.

First, the cones Gamma_n: block matrices whose entrywise images under every
sequence member are PSD. For (id, t) at n = 2 these are the PPT states up to
scale; the maximally entangled projector is PSD but not PPT, so it sits
outside. Decomposable maps send every cone member to a PSD block matrix
(the forward direction); the transpose over (id) alone does not.

Second, the extension of a CP map on a corner subalgebra of M_D to the
unitization {a + z I_D}: adding z ||T||_cb I keeps it completely positive,
and the constant is sharp, as halving it breaks positivity on the sample
built from (-p, 1).
"""

import numpy as np

from mapcones import SuperOperator, canonical
from mapcones.dilation import (
    SubalgebraMap,
    cb_norm_cp,
    cp_sample_check,
    embedded_block_subalgebra,
    unitized_extension,
)
from mapcones.gamma import criterion_violation_search, gamma_membership
from mapcones.instances import random_cp_map
from mapcones.linalg import max_entangled_state


def main():
    rng = np.random.default_rng(8)
    seq = canonical("decomposable", 2)

    omega = max_entangled_state(2)
    ent = 2.0 * np.outer(omega, omega.conj())
    verdict = gamma_membership(ent, seq, 2)
    print("entangled projector in Gamma_2(id, t)?", verdict.ok,
          f"(margins {[f'{m:+.2f}' for m in verdict.margins]})")

    outcome = criterion_violation_search(
        SuperOperator.transpose(2), canonical("cp", 2), n=2, restarts=6, rng=rng
    )
    print(f"transpose over (id) alone: criterion violation {outcome.value:+.4f}")
    print("(the hand value is -1/2, at the entangled state)")

    model, w = embedded_block_subalgebra(4, 2)
    t = SubalgebraMap(model, w, random_cp_map(2, 2, rng))
    c = cb_norm_cp(t)
    print(f"\nCP map on an M_2 corner of M_4, ||T||_cb = {c:.3f}")
    ok, worst = cp_sample_check(unitized_extension(t), n=3, samples=200, rng=rng)
    print(f"extension with the full constant: CP on samples = {ok} (worst {worst:.1e})")
    ok, worst = cp_sample_check(unitized_extension(t, scale=0.5 * c), n=3, samples=200, rng=rng)
    print(f"extension with half the constant: CP on samples = {ok} (worst {worst:.3f})")


if __name__ == "__main__":
    main()
