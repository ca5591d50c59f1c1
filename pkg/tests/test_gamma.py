import numpy as np
import pytest

from mapcones.gamma import (
    NoneFound,
    Violation,
    blockwise_apply,
    criterion_violation_search,
    gamma_membership,
    gamma_sample,
    project_gamma,
)
from mapcones.instances import choi_map, random_cp_map
from mapcones.linalg import (
    max_entangled_state,
    min_eigenvalue,
    random_hermitian,
    random_psd,
    swap_matrix,
)
from mapcones.seq import MapSequence, canonical
from mapcones.superop import SuperOperator


def entangled_projector(d=2):
    omega = max_entangled_state(d)
    return float(d) * np.outer(omega, omega.conj())


def test_blockwise_apply_n1_is_plain_apply(rng):
    phi = random_cp_map(2, 3, rng)
    a = random_hermitian(2, rng)
    np.testing.assert_allclose(blockwise_apply(phi, a, 1), phi.apply(a), atol=1e-12)


def test_blockwise_apply_identity_preserves(rng):
    a = random_hermitian(6, rng)
    np.testing.assert_allclose(blockwise_apply(SuperOperator.identity(2), a, 3), a, atol=1e-12)


def test_gamma_membership_id_sequence_is_psd_cone(id_only_m2, rng):
    p = random_psd(4, rng)
    assert gamma_membership(p, id_only_m2, 2).ok
    not_psd = p - 2.0 * np.linalg.norm(p, 2) * np.eye(4)
    assert not gamma_membership(not_psd, id_only_m2, 2).ok


def test_gamma_membership_id_t_requires_ppt(id_t_m2):
    # the maximally entangled projector is PSD but its blockwise transpose
    # is the SWAP matrix with minimum eigenvalue -1
    a = entangled_projector(2)
    verdict = gamma_membership(a, id_t_m2, 2)
    assert not verdict.ok
    assert verdict.min_margin == pytest.approx(-1.0, abs=1e-10)
    # identity is in every gamma cone over *-map sequences of isometries
    assert gamma_membership(np.eye(4, dtype=complex), id_t_m2, 2).ok


def test_gamma_membership_margins_per_entry(id_t_m2):
    a = entangled_projector(2)
    verdict = gamma_membership(a, id_t_m2, 2)
    assert len(verdict.margins) == 2
    assert verdict.margins[0] == pytest.approx(0.0, abs=1e-10)  # PSD holds
    assert verdict.margins[1] == pytest.approx(-1.0, abs=1e-10)  # PPT fails


def test_gamma_sample_members(id_t_m2, rng):
    nonzero = 0
    for n in (1, 2, 3):
        for _ in range(5):
            a = gamma_sample(id_t_m2, n, rng)
            assert gamma_membership(a, id_t_m2, n).ok
            # the zero matrix is a legitimate cone member (projection of a
            # start dominated by the negative cone), but not the typical one
            nonzero += np.linalg.norm(a) > 1e-6
    assert nonzero >= 10


def test_gamma_sample_non_isometry_fallback(rng):
    seq = MapSequence((0.5 * SuperOperator.identity(2),))
    a = gamma_sample(seq, 2, rng)
    assert gamma_membership(a, seq, 2).ok


def test_project_gamma_fixes_members_and_lands_in_cone(id_t_m2, rng):
    member = gamma_sample(id_t_m2, 2, rng)
    fixed, ok = project_gamma(member, id_t_m2, 2)
    assert ok
    np.testing.assert_allclose(fixed, member, atol=1e-6)
    outside = entangled_projector(2)
    projected, ok = project_gamma(outside, id_t_m2, 2)
    assert ok
    assert gamma_membership(projected, id_t_m2, 2, tol=1e-6).ok


def test_violation_search_transpose_over_id(rng):
    # oracle: A = |Omega><Omega| in Gamma_2(id) gives
    # <v, (t x id)(A) v> = -1/2 at the minimal eigenvector of SWAP/2
    outcome = criterion_violation_search(
        SuperOperator.transpose(2), canonical("cp", 2), n=2, restarts=6, rng=rng
    )
    assert isinstance(outcome, Violation)
    assert outcome.value == pytest.approx(-0.5, abs=1e-6)
    assert outcome.membership.ok
    img = blockwise_apply(SuperOperator.transpose(2), outcome.a, 2)
    assert float(np.real(np.vdot(outcome.v, img @ outcome.v))) == pytest.approx(
        outcome.value, abs=1e-9
    )


def test_violation_search_none_for_cp_map(rng):
    phi = random_cp_map(2, 2, rng)
    outcome = criterion_violation_search(phi, canonical("cp", 2), n=2, restarts=4, rng=rng)
    assert isinstance(outcome, NoneFound)
    assert outcome.best_value > -1e-6


def test_violation_search_choi_map(rng):
    # nondecomposable: a violation exists over (id, t) at n = 3
    outcome = criterion_violation_search(
        choi_map(), canonical("decomposable", 3), n=3, restarts=10,
        rng=np.random.default_rng(0),
    )
    assert isinstance(outcome, Violation)
    assert outcome.value < -1e-6
    assert outcome.membership.ok


def test_violation_search_none_for_decomposable_transpose(rng):
    outcome = criterion_violation_search(
        SuperOperator.transpose(2), canonical("decomposable", 2), n=2, restarts=6, rng=rng
    )
    assert isinstance(outcome, NoneFound)
