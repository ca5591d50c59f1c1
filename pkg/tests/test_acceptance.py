"""End-to-end acceptance gate.

One test per criterion, each printing a single PASS/FAIL line. The full
corpus is solved once per session and shared between the soundness and
dilation criteria.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest

from mapcones.cli import load_instance, report_to_json, reverify_report, instance_to_json
from mapcones.decomp import (
    FEASIBLE,
    INFEASIBLE,
    FeasibilityProblem,
    closedness_probe,
    conic_combine,
    feasibility,
    left_compose,
    verify_certificate,
    verify_witness,
)
from mapcones.dilation import (
    SubalgebraMap,
    block_dilation,
    build_factor_map,
    cb_norm_cp,
    cp_sample_check,
    embedded_block_subalgebra,
    eta_direct_sum,
    eta_reshuffle,
    unitized_extension,
)
from mapcones.gamma import blockwise_apply, gamma_sample
from mapcones.instances import (
    choi_map,
    generate_corpus,
    random_cp_map,
    random_feasible_target,
    random_sequence,
)
from mapcones.linalg import dagger, max_entangled_state, min_eigenvalue, random_complex
from mapcones.sdpa import build_sdpa_data, solve_sdpa
from mapcones.seq import MapSequence, canonical, kernel_condition, xi_embed, xi_matrix
from mapcones.superop import SuperOperator, build_precomposition, compose


@contextmanager
def criterion(num, name):
    try:
        yield
    except BaseException:
        print(f"criterion {num:02d} {name}: FAIL")
        raise
    print(f"criterion {num:02d} {name}: PASS")


@pytest.fixture(scope="session")
def corpus_results():
    corpus = generate_corpus(seed=0, size=210)
    assert len(corpus) >= 200
    return [(inst, feasibility(inst.problem)) for inst in corpus]


def test_criterion_01_classical_decomposability_regression():
    with criterion(1, "classical decomposability regression"):
        t0 = time.monotonic()
        prob = FeasibilityProblem(
            SuperOperator.transpose(2), canonical("decomposable", 2), feas_tol_rel=1e-10
        )
        result = feasibility(prob)
        elapsed = time.monotonic() - t0
        assert result.status == FEASIBLE
        assert result.certificate.residual <= 1e-7
        x1, x2 = result.certificate.xs
        omega = max_entangled_state(2)
        assert np.linalg.norm(x1) <= 1e-6
        assert min_eigenvalue(x2) >= -1e-9
        np.testing.assert_allclose(x2, 2.0 * np.outer(omega, omega.conj()), atol=1e-6)
        assert elapsed <= 5.0


def test_criterion_02_nondecomposability_regression():
    with criterion(2, "nondecomposability regression (Choi map)"):
        t0 = time.monotonic()
        prob = FeasibilityProblem(choi_map(), canonical("decomposable", 3), max_iter=20000)
        result = feasibility(prob)
        assert result.status == INFEASIBLE
        w = result.witness
        assert verify_witness(w, prob)
        pairing = float(np.real(np.trace(dagger(w.w) @ prob.target.choi)))
        assert pairing <= -1e-6
        assert min(w.dual_margins) >= -1e-9
        # external cross-check on the exported SDP data
        verdict = solve_sdpa(build_sdpa_data(prob))
        assert verdict.status == "infeasible"
        assert time.monotonic() - t0 <= 60.0


def test_criterion_03_forward_direction_suite():
    with criterion(3, "forward direction over sampled cone members"):
        rng = np.random.default_rng(42)
        violations = 0
        for _ in range(50):
            seq = random_sequence(2, rng)
            target, _ = random_feasible_target(seq, 2, rng)
            for n in (1, 2, 3):
                for _ in range(20):
                    a = gamma_sample(seq, n, rng)
                    img = blockwise_apply(target, a, n)
                    if float(np.linalg.eigvalsh(img)[0]) < -1e-6:
                        violations += 1
        assert violations == 0


def test_criterion_04_soundness_duality(corpus_results):
    with criterion(4, "soundness duality over the corpus"):
        assert len(corpus_results) >= 200
        for inst, result in corpus_results:
            prob = inst.problem
            has_cert = result.certificate is not None and verify_certificate(
                result.certificate, prob
            )
            has_witness = result.witness is not None and verify_witness(result.witness, prob)
            assert not (has_cert and has_witness), inst.name
            if inst.expected == "feasible":
                assert result.status == FEASIBLE, inst.name
            if inst.expected == "infeasible":
                assert result.status == INFEASIBLE, inst.name
            if result.status in (FEASIBLE, INFEASIBLE):
                # serialization round trip must re-verify
                payload = json.loads(json.dumps(report_to_json(result, prob, seed=0)))
                assert reverify_report(payload, prob), inst.name


def test_criterion_05_cone_structure_suite():
    with criterion(5, "cone structure (conic combinations, left composition, closedness)"):
        rng = np.random.default_rng(7)
        seq = canonical("decomposable", 2)
        pool = []
        for _ in range(20):
            target, _ = random_feasible_target(seq, 2, rng)
            prob = FeasibilityProblem(target, seq)
            result = feasibility(prob)
            assert result.status == FEASIBLE
            pool.append((target, prob, result.certificate))
        for _ in range(50):
            (t1, _, c1), (t2, _, c2) = (
                pool[rng.integers(len(pool))],
                pool[rng.integers(len(pool))],
            )
            lam1, lam2 = float(rng.uniform(0.1, 3.0)), float(rng.uniform(0.1, 3.0))
            combined = conic_combine(c1, c2, lam1, lam2)
            assert verify_certificate(
                combined, FeasibilityProblem(lam1 * t1 + lam2 * t2, seq)
            )
        for _ in range(50):
            target, prob, cert = pool[rng.integers(len(pool))]
            psi = random_cp_map(2, int(rng.integers(2, 4)), rng)
            new_cert, new_prob = left_compose(cert, psi, prob)
            assert verify_certificate(new_cert, new_prob)
        for _ in range(20):
            limit, _, _ = pool[rng.integers(len(pool))]
            targets = [(1.0 + 2.0 ** (-k)) * limit for k in range(1, 7)]
            result = closedness_probe(targets, limit, seq)
            assert result.status == FEASIBLE


def test_criterion_06_dilation_reconstruction(corpus_results):
    with criterion(6, "block dilation reconstruction on feasible instances"):
        rng = np.random.default_rng(11)
        checked = 0
        for inst, result in corpus_results:
            if result.status != FEASIBLE:
                continue
            prob = inst.problem
            dil = block_dilation(result.certificate, prob.seq, prob)
            d = prob.d
            for _ in range(20):
                a = random_complex(d, d, rng)
                residual = float(
                    np.linalg.norm(dil.reconstruct(a) - prob.target.apply(a))
                )
                assert residual <= 1e-8, (inst.name, residual)
            checked += 1
        assert checked >= 50


def test_criterion_07_proof_machinery_suite():
    with criterion(7, "reshuffling isomorphism, factor map, kernel condition"):
        rng = np.random.default_rng(5)
        n, m, d = 2, 2, 2

        def rand_block_diag():
            h = np.zeros((n * m * d,) * 2, dtype=complex)
            for i in range(n):
                for j in range(n):
                    for k in range(m):
                        h[i * m * d + k * d : i * m * d + (k + 1) * d,
                          j * m * d + k * d : j * m * d + (k + 1) * d] = random_complex(d, d, rng)
            return h

        for _ in range(100):
            h1, h2 = rand_block_diag(), rand_block_diag()
            lhs = eta_direct_sum(eta_reshuffle(h1 @ h2, n, m, d))
            rhs = eta_direct_sum(eta_reshuffle(h1, n, m, d)) @ eta_direct_sum(
                eta_reshuffle(h2, n, m, d)
            )
            assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(lhs))

        # factor map: preimage independence under explicit common-kernel shifts
        c = np.array([[0, 1], [1, 0]], dtype=complex)
        proj = np.eye(4, dtype=complex) - np.outer(c.reshape(-1), c.conj().reshape(-1)) / 2.0
        killer = SuperOperator(2, 2, proj)
        seq = MapSequence((killer,))
        factor = build_factor_map(killer, seq)
        for _ in range(20):
            a = random_complex(2, 2, rng)
            shift = float(rng.standard_normal())
            emb_a, _ = xi_embed(a, seq)
            emb_b, _ = xi_embed(a + shift * c, seq)
            assert np.linalg.norm(emb_a - emb_b) <= 1e-10
            assert np.linalg.norm(factor(emb_a) - factor(emb_b)) <= 1e-8
            assert np.linalg.norm(factor(emb_a) - killer.apply(a)) <= 1e-8

        # well-posedness guard: the factor map refuses ill-defined inputs,
        # and the kernel condition rejects constructed violations
        with pytest.raises(ValueError):
            build_factor_map(SuperOperator.identity(2), seq)
        verdict = kernel_condition(seq, SuperOperator.identity(2))
        assert not verdict.ok
        assert np.linalg.norm(killer.apply(verdict.violation)) <= 1e-8
        assert kernel_condition(canonical("decomposable", 2), SuperOperator.transpose(2)).ok


def test_criterion_08_unitized_extension_suite():
    with criterion(8, "unitization extension complete positivity"):
        rng = np.random.default_rng(19)
        negative_control_violations = 0
        for i in range(20):
            ambient = int(rng.integers(3, 5))
            block = int(rng.integers(2, ambient))
            model, w = embedded_block_subalgebra(ambient, block)
            t = SubalgebraMap(model, w, random_cp_map(block, int(rng.integers(2, 4)), rng))
            ext = unitized_extension(t)
            for nn in (2, 3):
                ok, worst = cp_sample_check(ext, n=nn, samples=100, rng=rng)
                assert ok, (i, nn, worst)
                assert worst >= -1e-9
            bad = unitized_extension(t, scale=0.5 * cb_norm_cp(t))
            ok, worst = cp_sample_check(bad, n=2, samples=100, rng=rng)
            if not ok:
                negative_control_violations += 1
        assert negative_control_violations == 20


def test_criterion_09_truncated_vanishing_bookkeeping():
    with criterion(9, "truncated vanishing sequence bookkeeping"):
        rng = np.random.default_rng(23)
        d = 2

        def truncated_problem(k_terms, target):
            entries = tuple(
                2.0 ** (1 - k) * SuperOperator.identity(d) for k in range(1, k_terms + 1)
            )
            seq = MapSequence(
                entries, kind="truncated_vanishing", tail_bound=2.0 ** (-k_terms)
            )
            return FeasibilityProblem(target, seq, max_iter=30000)

        target = random_cp_map(d, d, rng)
        for k_terms in (3, 4):
            prob_k = truncated_problem(k_terms, target)
            prob_k5 = truncated_problem(k_terms + 5, target)
            r_k = feasibility(prob_k)
            r_k5 = feasibility(prob_k5)
            assert r_k.status == r_k5.status == FEASIBLE
            observed = abs(
                r_k.diagnostics["residual"] - r_k5.diagnostics["residual"]
            )
            assert observed <= r_k.tail_slack
            assert r_k.tail_slack == pytest.approx(2.0 ** (-k_terms))


def test_criterion_10_precomposition_correctness():
    with criterion(10, "precomposition operator against brute-force composition"):
        rng = np.random.default_rng(29)
        for _ in range(100):
            d, h = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            g = random_complex(d * d, d * d, rng)
            phi_k = SuperOperator.from_choi(0.5 * (g + dagger(g)), d, d)
            p = build_precomposition(phi_k, h)
            psi = random_cp_map(d, h, rng)
            diff = np.linalg.norm(p.apply(psi.choi) - compose(psi, phi_k).choi)
            assert diff <= 1e-10
