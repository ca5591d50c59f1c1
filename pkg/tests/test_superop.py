import numpy as np
import pytest

from mapcones.linalg import (
    NotHermitianError,
    hs_inner,
    max_entangled_state,
    random_complex,
    random_hermitian,
    random_unitary,
    swap_matrix,
)
from mapcones.superop import (
    SuperOperator,
    build_precomposition,
    compose,
    is_ccp,
    is_cp,
    is_positive_heuristic,
    is_unital,
)
from mapcones.instances import random_cp_map


def test_choi_of_transpose_is_swap():
    np.testing.assert_allclose(SuperOperator.transpose(2).choi, swap_matrix(2), atol=1e-14)


def test_choi_of_identity_is_entangled_projector():
    omega = max_entangled_state(2)
    np.testing.assert_allclose(
        SuperOperator.identity(2).choi, 2.0 * np.outer(omega, omega.conj()), atol=1e-14
    )
    assert np.trace(SuperOperator.identity(3).choi) == pytest.approx(3.0)


def test_from_action_matches_apply(rng):
    u = random_unitary(3, rng)
    phi = SuperOperator.conjugation(u)
    a = random_complex(3, 3, rng)
    np.testing.assert_allclose(phi.apply(a), u @ a @ u.conj().T, atol=1e-12)


def test_from_choi_roundtrip(rng):
    phi = random_cp_map(2, 3, rng)
    back = SuperOperator.from_choi(phi.choi, 2, 3)
    np.testing.assert_allclose(back.coeffs, phi.coeffs, atol=1e-12)


def test_from_kraus_consistency(rng):
    ks = [random_complex(3, 2, rng) for _ in range(2)]
    phi = SuperOperator.from_kraus(ks)
    a = random_complex(2, 2, rng)
    expected = sum(k @ a @ k.conj().T for k in ks)
    np.testing.assert_allclose(phi.apply(a), expected, atol=1e-12)
    assert is_cp(phi).ok


def test_compose_choi_agrees_with_action(rng):
    phi = random_cp_map(2, 3, rng)
    psi = random_cp_map(3, 2, rng)
    comp = compose(psi, phi)
    a = random_complex(2, 2, rng)
    np.testing.assert_allclose(comp.apply(a), psi.apply(phi.apply(a)), atol=1e-12)


def test_adjoint_pairing(rng):
    phi = random_cp_map(2, 3, rng)
    a = random_hermitian(2, rng)
    b = random_hermitian(3, rng)
    assert hs_inner(phi.apply(a), b) == pytest.approx(hs_inner(a, phi.adjoint().apply(b)))


def test_cp_verdicts_on_canonical_maps():
    t = SuperOperator.transpose(2)
    ident = SuperOperator.identity(2)
    # min eigenvalue of SWAP is -1; of the PT of the entangled projector too
    assert not is_cp(t).ok
    assert is_cp(t).margin == pytest.approx(-1.0, abs=1e-12)
    assert is_ccp(t).ok
    assert is_cp(ident).ok
    assert not is_ccp(ident).ok
    assert is_ccp(ident).margin == pytest.approx(-1.0, abs=1e-12)


def test_is_cp_rejects_non_star_map():
    coeffs = np.eye(4, dtype=complex)
    coeffs[0, 1] = 1.0  # breaks Hermiticity preservation
    phi = SuperOperator(2, 2, coeffs)
    with pytest.raises(NotHermitianError):
        is_cp(phi)


def test_is_unital(rng):
    assert is_unital(SuperOperator.identity(3))
    assert is_unital(SuperOperator.conjugation(random_unitary(3, rng)))
    assert not is_unital(2.0 * SuperOperator.identity(2))


def test_star_defect(rng):
    assert SuperOperator.transpose(3).star_defect() < 1e-14
    coeffs = np.eye(4, dtype=complex)
    coeffs[0, 1] = 0.3
    assert SuperOperator(2, 2, coeffs).star_defect() > 1e-3


def test_positive_heuristic_on_transpose_and_negative():
    t = SuperOperator.transpose(2)
    report = is_positive_heuristic(t, rng=np.random.default_rng(0))
    assert report.positive_evidence
    report = is_positive_heuristic(-1.0 * SuperOperator.identity(2), rng=np.random.default_rng(0))
    assert not report.positive_evidence
    assert report.min_value == pytest.approx(-1.0, abs=1e-9)


def test_precomposition_matches_brute_force(rng):
    for _ in range(10):
        d, h = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        phi_k = random_cp_map(d, d, rng)
        p = build_precomposition(phi_k, h)
        psi = random_cp_map(d, h, rng)
        np.testing.assert_allclose(p.apply(psi.choi), compose(psi, phi_k).choi, atol=1e-10)


def test_precomposition_adjoint_pairing(rng):
    d, h = 2, 3
    p = build_precomposition(random_cp_map(d, d, rng), h)
    x = random_hermitian(d * h, rng)
    y = random_hermitian(d * h, rng)
    assert hs_inner(p.apply(x), y) == pytest.approx(hs_inner(x, p.adjoint_apply(y)))


def test_linear_combination_of_superoperators(rng):
    a, b = random_cp_map(2, 2, rng), random_cp_map(2, 2, rng)
    s = 0.5 * a + b
    x = random_complex(2, 2, rng)
    np.testing.assert_allclose(s.apply(x), 0.5 * a.apply(x) + b.apply(x), atol=1e-12)
    np.testing.assert_allclose(s.choi, 0.5 * a.choi + b.choi, atol=1e-12)
