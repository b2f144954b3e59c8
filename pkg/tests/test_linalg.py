import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import snapseq as s
from snapseq.linalg import (
    _build_displacement_complex,
    apply_displacement_generator,
    build_displacement,
    destroy,
    number_diag,
    parity_diag,
    reliable_dim,
)

from conftest import random_sequence


def sub(m, n):
    return m[:n, :n]


class TestDisplacement:
    def test_zero_displacement_is_identity(self):
        assert np.allclose(build_displacement(0.0, 100), np.eye(100), atol=1e-14)

    def test_vacuum_amplitude_closed_form(self):
        # <0|D(0.5)|0> = exp(-alpha^2/2)
        d = build_displacement(0.5, 100)
        assert abs(d[0, 0] - np.exp(-0.125)) < 1e-12

    def test_coherent_column_matches_closed_form(self):
        d = build_displacement(0.7, 80)
        assert np.allclose(d[:, 0], s.coherent_amplitudes(0.7, 80), atol=1e-12)

    def test_numerical_inverse(self):
        prod = build_displacement(1.3, 100) @ build_displacement(-1.3, 100)
        assert np.abs(prod - np.eye(100)).max() < 1e-10

    def test_unitarity_on_reliable_subblock(self):
        for alpha in (0.5, 1.0, 2.0):
            d = build_displacement(alpha, 100)
            err = d.conj().T @ d - np.eye(100)
            assert np.abs(sub(err, 60)).max() < 1e-10

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            build_displacement(np.nan, 10)
        with pytest.raises(ValueError):
            build_displacement(0.5, 1)
        with pytest.raises(ValueError):
            build_displacement(50.0, 10, on_unsafe="raise")
        with pytest.warns(RuntimeWarning):
            build_displacement(50.0, 10)

    def test_apply_matches_matrix(self, rng):
        psi = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        d = build_displacement(0.9, 40)
        assert np.allclose(s.apply_displacement(0.9, psi), d @ psi, atol=1e-12)

    def test_generator_apply_matches_matrix(self, rng):
        dim = 25
        k = destroy(dim).conj().T - destroy(dim)
        vecs = rng.standard_normal((dim, 3)) + 1j * rng.standard_normal((dim, 3))
        assert np.allclose(apply_displacement_generator(vecs), k @ vecs, atol=1e-12)


class TestSnapAndBlock:
    def test_zero_phases_identity(self):
        assert np.allclose(s.build_snap(np.zeros(30)), np.eye(30))

    def test_inverse_is_exact(self, rng):
        theta = rng.uniform(-np.pi, np.pi, 30)
        prod = s.build_snap(theta) @ s.build_snap(-theta)
        assert np.abs(prod - np.eye(30)).max() < 1e-15

    def test_pi_rotation_gives_parity(self):
        theta = np.pi * np.arange(30)
        assert np.allclose(np.diag(s.build_snap(theta)), parity_diag(30), atol=1e-12)

    def test_block_with_zero_phases_is_identity(self):
        for alpha in (0.0, 0.7, -1.5):
            assert np.abs(s.build_block(alpha, np.zeros(60)) - np.eye(60)).max() < 1e-12

    def test_block_at_zero_displacement_is_snap(self, rng):
        theta = rng.uniform(-np.pi, np.pi, 40)
        assert np.allclose(s.build_block(0.0, theta), s.build_snap(theta), atol=1e-13)

    def test_block_matches_explicit_triple_product(self, rng):
        theta = rng.uniform(-np.pi, np.pi, 60)
        d = build_displacement(0.5, 60)
        explicit = d.conj().T @ s.build_snap(theta) @ d
        assert np.abs(s.build_block(0.5, theta) - explicit).max() < 1e-12

    def test_apply_block_matches_matrix(self, rng):
        theta = rng.uniform(-np.pi, np.pi, 50)
        psi = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        psi /= np.linalg.norm(psi)
        assert np.allclose(
            s.apply_block(0.8, theta, psi), s.build_block(0.8, theta) @ psi, atol=1e-12
        )
        assert np.allclose(
            s.apply_block_dagger(0.8, theta, psi),
            s.build_block(0.8, theta).conj().T @ psi,
            atol=1e-12,
        )


class TestGateIdentities:
    """Contraction, parity and phase-absorption relations."""

    def test_snap_contraction_exact(self, rng):
        t1 = rng.uniform(-np.pi, np.pi, 40)
        t2 = rng.uniform(-np.pi, np.pi, 40)
        prod = s.build_snap(t2) @ s.build_snap(t1)
        assert np.abs(prod - s.build_snap(t1 + t2)).max() < 1e-14

    def test_displacement_contraction_on_subblock(self):
        d = build_displacement(0.9, 100) @ build_displacement(0.6, 100)
        err = d - build_displacement(1.5, 100)
        nb = reliable_dim(100, 1.5)
        assert np.abs(sub(err, nb)).max() < 1e-10

    def test_parity_conjugation_flips_sign(self):
        alpha = 1.1
        rot = s.build_snap(np.pi * np.arange(100))
        err = rot @ build_displacement(alpha, 100) @ rot - build_displacement(-alpha, 100)
        assert np.abs(sub(err, 60)).max() < 1e-9

    def test_phase_absorption_vs_complex_constructor(self):
        alpha, phi = 0.8, 0.9
        rot = s.build_snap(phi * np.arange(100))
        lhs = rot @ build_displacement(alpha, 100) @ s.build_snap(-phi * np.arange(100))
        rhs = _build_displacement_complex(alpha * np.exp(1j * phi), 100)
        assert np.abs(sub(lhs - rhs, 60)).max() < 1e-9


class TestHsInnerAndTraceNorm:
    def test_identity_inner_product(self):
        assert s.hs_inner(np.eye(7), np.eye(7)) == pytest.approx(7)

    def test_self_inner_is_frobenius_squared(self, rng):
        a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        val = s.hs_inner(a, a)
        assert abs(val.imag) < 1e-12
        assert val.real == pytest.approx(np.linalg.norm(a) ** 2)

    def test_matches_explicit_trace(self, rng):
        a = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        b = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        assert abs(s.hs_inner(a, b) - np.trace(a.conj().T @ b)) < 1e-12

    def test_conjugate_symmetry(self, rng):
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        b = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        assert abs(s.hs_inner(a, b) - np.conj(s.hs_inner(b, a))) < 1e-14

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            s.hs_inner(np.eye(3), np.eye(4))

    def test_trace_norm_identity(self):
        assert s.trace_norm(np.eye(11)) == pytest.approx(11)

    def test_trace_norm_diagonal(self):
        assert s.trace_norm(np.diag([2.0, -3.0, 0.0])) == pytest.approx(5.0)

    def test_trace_norm_vs_high_precision_svd(self, rng):
        import mpmath

        a = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        with mpmath.workdps(40):
            sv = mpmath.svd_c(mpmath.matrix(a.tolist()), compute_uv=False)
            expected = float(mpmath.fsum(sv))
        assert abs(s.trace_norm(a) - expected) / expected < 1e-10


class TestApplySequence:
    def test_empty_sequence_is_identity(self, rng):
        psi = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        out = s.apply_sequence(s.BlockSequence.empty(20), psi)
        assert np.allclose(out, psi)

    def test_single_block_matches_matrix_oracle(self, rng):
        seq = random_sequence(30, 1, rng)
        psi = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        expected = s.build_block(seq.alphas[0], seq.thetas[0]) @ psi
        assert np.allclose(s.apply_sequence(seq, psi), expected, atol=1e-12)

    def test_norm_preserved_under_truncation(self, rng):
        seq = random_sequence(100, 4, rng, alpha_scale=2.0)
        psi = np.zeros(100, dtype=complex)
        psi[:10] = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        psi /= np.linalg.norm(psi)
        out = s.apply_sequence(seq, psi)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-9

    def test_dim_mismatch(self, rng):
        with pytest.raises(ValueError):
            s.apply_sequence(random_sequence(10, 1, rng), np.zeros(12, dtype=complex))


class TestWigner:
    def test_vacuum_peak(self):
        w = s.wigner_grid(s.fock_state(0, 60), (-0.5, 0.5), (-0.5, 0.5), 3)
        assert abs(w[1, 1] - 1.0 / np.pi) < 1e-10

    def test_single_photon_negative_peak(self):
        w = s.wigner_grid(s.fock_state(1, 60), (-0.5, 0.5), (-0.5, 0.5), 3)
        assert abs(w[1, 1] + 1.0 / np.pi) < 1e-10

    def test_vacuum_normalization_quadrature(self):
        res = 201
        w = s.wigner_grid(s.fock_state(0, 40), (-5, 5), (-5, 5), res)
        xs = np.linspace(-5, 5, res)
        total = np.trapezoid(np.trapezoid(w, xs, axis=1), xs)
        assert abs(total - 1.0) < 1e-3

    def test_vacuum_is_gaussian(self):
        res = 21
        w = s.wigner_grid(s.fock_state(0, 50), (-2, 2), (-2, 2), res)
        xs = np.linspace(-2, 2, res)
        expected = np.exp(-(xs[:, None] ** 2) - xs[None, :] ** 2) / np.pi
        assert np.abs(w - expected).max() < 1e-9

    def test_displaced_vacuum_peak_moves(self):
        # D(1)|0> is a coherent state centered at x = sqrt(2)
        psi = s.apply_displacement(1.0, s.fock_state(0, 80))
        w = s.wigner_grid(psi, (np.sqrt(2) - 0.01, np.sqrt(2) + 0.01), (-0.01, 0.01), 3)
        assert abs(w[1, 1] - 1.0 / np.pi) < 1e-6

    def test_input_validation(self):
        with pytest.raises(ValueError):
            s.wigner_grid(2.0 * s.fock_state(0, 20), (-1, 1), (-1, 1), 5)
        with pytest.raises(ValueError):
            s.wigner_grid(s.fock_state(0, 20), (1, -1), (-1, 1), 5)
        with pytest.raises(ValueError):
            s.wigner_grid(s.fock_state(0, 20), (-1, 1), (-1, 1), 1)


class TestWrapPhases:
    @given(st.floats(min_value=-50, max_value=50, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_wrap_preserves_phase_factor(self, theta):
        wrapped = float(s.wrap_phases(np.array([theta]))[0])
        assert -np.pi < wrapped <= np.pi + 1e-15
        assert abs(np.exp(1j * wrapped) - np.exp(1j * theta)) < 1e-9

    def test_boundary_maps_to_positive_pi(self):
        assert s.wrap_phases(np.array([-np.pi]))[0] == pytest.approx(np.pi)
        assert s.wrap_phases(np.array([np.pi]))[0] == pytest.approx(np.pi)
