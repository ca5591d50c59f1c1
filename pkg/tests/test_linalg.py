import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapcones.linalg import (
    NotHermitianError,
    assert_hermitian,
    dagger,
    eigh_checked,
    hermitian_defect,
    hs_inner,
    max_entangled_state,
    min_eigenvalue,
    null_space,
    partial_transpose,
    psd_project,
    random_hermitian,
    random_psd,
    swap_matrix,
    unvec,
    vec,
)

SWAP2 = np.array(
    [
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)


def test_vec_is_row_major():
    m = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.array_equal(vec(m), np.array([1, 2, 3, 4], dtype=complex))
    assert np.array_equal(unvec(vec(m), 2, 2), m)


def test_hs_inner_matches_vec_vdot(rng):
    a = random_hermitian(3, rng)
    b = random_hermitian(3, rng)
    assert hs_inner(a, b) == pytest.approx(np.vdot(vec(a), vec(b)))
    # tr(a b) for Hermitian a, b is real
    assert abs(np.imag(hs_inner(a, b))) < 1e-12


def test_swap_matrix_frozen():
    s = swap_matrix(2)
    assert np.array_equal(s, SWAP2)
    np.testing.assert_allclose(s @ s, np.eye(4), atol=0)
    # spectrum (-1, 1, 1, 1): one antisymmetric direction for d = 2
    np.testing.assert_allclose(np.linalg.eigvalsh(s), [-1, 1, 1, 1], atol=1e-12)


def test_max_entangled_projector_frozen():
    omega = max_entangled_state(2)
    proj = 2.0 * np.outer(omega, omega.conj())
    expected = np.zeros((4, 4), dtype=complex)
    for idx in (0, 3):
        for jdx in (0, 3):
            expected[idx, jdx] = 1.0
    np.testing.assert_allclose(proj, expected, atol=1e-14)
    assert np.trace(proj) == pytest.approx(2.0)


def test_partial_transpose_links_swap_and_entangled():
    omega = max_entangled_state(2)
    proj = 2.0 * np.outer(omega, omega.conj())
    np.testing.assert_allclose(partial_transpose(proj, 2, 2, "outer"), SWAP2, atol=1e-14)
    np.testing.assert_allclose(partial_transpose(SWAP2, 2, 2, "inner"), proj, atol=1e-14)


def test_partial_transpose_involution_and_isometry(rng):
    for which in ("outer", "inner"):
        m = random_hermitian(6, rng)
        pt = partial_transpose(m, 2, 3, which)
        np.testing.assert_allclose(partial_transpose(pt, 2, 3, which), m, atol=1e-14)
        assert np.linalg.norm(pt) == pytest.approx(np.linalg.norm(m))


def test_psd_project_clips_spectrum():
    m = np.diag([3.0, -2.0]).astype(complex)
    np.testing.assert_allclose(psd_project(m), np.diag([3.0, 0.0]), atol=1e-14)


def test_psd_project_is_closest_psd_point(rng):
    for _ in range(25):
        dim = int(rng.integers(2, 6))
        m = random_hermitian(dim, rng)
        p = psd_project(m)
        assert min_eigenvalue(p) >= -1e-12
        other = random_psd(dim, rng)
        assert np.linalg.norm(p - m) <= np.linalg.norm(other - m) + 1e-9


def test_assert_hermitian_symmetrizes_small_defect():
    m = np.eye(2, dtype=complex)
    m[0, 1] = 1e-12
    out = assert_hermitian(m)
    assert hermitian_defect(out) == 0.0


def test_assert_hermitian_rejects_large_defect():
    m = np.eye(2, dtype=complex)
    m[0, 1] = 0.5
    with pytest.raises(NotHermitianError):
        assert_hermitian(m)


def test_eigh_checked_sorted_ascending(rng):
    vals, vecs = eigh_checked(random_hermitian(5, rng))
    assert np.all(np.diff(vals) >= 0)
    np.testing.assert_allclose(
        vecs @ np.diag(vals) @ dagger(vecs),
        vecs @ np.diag(vals) @ vecs.conj().T,
        atol=1e-14,
    )


def test_null_space_annihilates(rng):
    a = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    n = null_space(a, tol=1e-10)
    assert n.shape == (5, 2)
    assert np.linalg.norm(a @ n) < 1e-10
    np.testing.assert_allclose(dagger(n) @ n, np.eye(2), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=10_000))
def test_vec_unvec_roundtrip_property(dim, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    np.testing.assert_array_equal(unvec(vec(m), dim, dim), m)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_psd_project_idempotent_property(seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(4, rng)
    p = psd_project(m)
    np.testing.assert_allclose(psd_project(p), p, atol=1e-9)
