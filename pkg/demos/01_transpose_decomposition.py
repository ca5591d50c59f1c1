"""The transpose map on M_2 decomposed over (id, t).

The transpose is the textbook example of a positive map that is not
completely positive. Over the two-term sequence (id, t) it trivially
decomposes as 0 o id + id o t, and the solver recovers exactly that: the
first certificate block vanishes and the second is the Choi matrix of the
identity, twice the maximally entangled projector.
"""

import numpy as np

from mapcones import FeasibilityProblem, SuperOperator, canonical, feasibility
from mapcones.decomp import verify_certificate


def main():
    target = SuperOperator.transpose(2)
    seq = canonical("decomposable", 2)
    prob = FeasibilityProblem(target, seq, feas_tol_rel=1e-10)

    print("target: transpose on M_2, sequence (id, t)")
    result = feasibility(prob)
    print(f"verdict: {result.status} after {result.diagnostics['iterations']} iterations")

    x1, x2 = result.certificate.xs
    print(f"||X_1|| = {np.linalg.norm(x1):.2e}  (the CP-part is not needed)")
    print("X_2 (Choi matrix of the co-CP factor):")
    with np.printoptions(precision=3, suppress=True):
        print(x2.real)
    print("this is 2 |Omega><Omega|, i.e. t = id o t with a CP left factor id")

    print(f"certificate re-verifies: {verify_certificate(result.certificate, prob)}")


if __name__ == "__main__":
    main()
