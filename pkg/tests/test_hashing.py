import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from edistill import entropy, hashing, linalg, states
from edistill.errors import RangeError, ShapeError, SupportError
from edistill.states import DensityOp, PureVector


def _omega(rho):
    dA, dB = rho.bipartite_dims()
    return states.purify(rho.with_dims((dA, dB)))


class TestProjector:
    def test_full(self):
        np.testing.assert_array_equal(hashing.projector_pm(3, 3), np.eye(3))

    def test_single_row(self):
        np.testing.assert_array_equal(hashing.projector_pm(1, 2), [[1, 0]])

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_coisometry(self, m):
        P = hashing.projector_pm(m, 4)
        np.testing.assert_array_equal(P @ P.conj().T, np.eye(m))

    def test_range(self):
        with pytest.raises(RangeError):
            hashing.projector_pm(3, 2)


class TestHashInstance:
    def test_mes_identity(self):
        omega = PureVector(states.mes(3, 3).amplitudes, (3, 3, 1))
        s = hashing.hash_instance(omega, np.eye(3), 3)
        assert s.weight == pytest.approx(1.0)
        np.testing.assert_allclose(s.omega_ab, states.mes(3, 3).projector().matrix, atol=1e-15)
        assert s.env_fidelity == pytest.approx(1.0)

    @given(seed=st.integers(0, 10 ** 6), m=st.integers(1, 3))
    @settings(max_examples=25, deadline=None)
    def test_weight_formula(self, seed, m):
        rho = states.random_density(6, seed=seed, dims=(3, 2))
        U = states.haar_unitary(3, seed=seed + 1)
        s = hashing.hash_instance(_omega(rho), U, m)
        P = hashing.projector_pm(m, 3)
        rA = rho.ptrace([0]).matrix
        expected = (3 / m) * np.real(np.trace(P @ U @ rA @ U.conj().T @ P.conj().T))
        assert s.weight == pytest.approx(expected, abs=1e-12)
        assert np.real(np.trace(s.omega_ae)) == pytest.approx(s.weight, abs=1e-12)
        assert 0 <= s.env_fidelity <= s.weight + 1e-12

    def test_m1_rank_one_on_a(self):
        rho = states.random_density(4, seed=2, dims=(2, 2))
        s = hashing.hash_instance(_omega(rho), states.haar_unitary(2, seed=0), 1)
        assert s.omega_ab.shape == (2, 2)

    def test_rejects_non_unitary(self):
        rho = states.random_density(4, seed=2, dims=(2, 2))
        with pytest.raises(ShapeError):
            hashing.hash_instance(_omega(rho), 2 * np.eye(2), 1)

    def test_product_state_fidelity(self, ket00):
        s = hashing.hash_instance(_omega(ket00), states.haar_unitary(2, seed=3), 2)
        assert s.env_fidelity == pytest.approx(oracles.INV_SQRT2, abs=1e-12)


class TestMonteCarlo:
    def test_mes_perfect(self, psi2):
        mean, err = hashing.mc_distillation_fidelity(psi2, 2, 200, seed=0)
        assert mean == pytest.approx(1.0, abs=1e-12) and err < 1e-12

    def test_product(self, ket00):
        mean, err = hashing.mc_distillation_fidelity(ket00, 2, 10_000, seed=5)
        assert mean == pytest.approx(oracles.INV_SQRT2, abs=1e-12)
        assert (mean, err) == hashing.mc_distillation_fidelity(ket00, 2, 10_000, seed=5)

    def test_single_sample(self, psi2):
        mean, err = hashing.mc_distillation_fidelity(psi2, 2, 1, seed=7)
        assert mean == pytest.approx(1.0) and math.isnan(err)

    def test_threads_do_not_change_result(self):
        rho = states.random_density(4, seed=4, dims=(2, 2))
        a = hashing.mc_distillation_fidelity(rho, 1, 300, seed=2, threads=1)
        b = hashing.mc_distillation_fidelity(rho, 1, 300, seed=2, threads=4)
        assert a == b

    @pytest.mark.parametrize("seed", range(3))
    def test_trace_preserving_on_average(self, seed):
        rho = states.random_density(6, seed=seed, dims=(3, 2))
        for m in (1, 2):
            w = np.array([s.weight for s in hashing.sample_branches(rho, m, 4000, seed)])
            assert abs(w.mean() - 1) <= 4 * w.std(ddof=1) / math.sqrt(w.size)

    @pytest.mark.parametrize("seed", range(4))
    def test_certificate_below_mean(self, seed):
        from edistill import bounds

        rho = states.random_density(4, seed=seed, dims=(2, 2))
        mean, err = hashing.mc_distillation_fidelity(rho, 2, 1000, seed=seed)
        assert hashing.hashing_certificate(rho, 2) <= mean + 3 * err
        assert bounds.fidelity_lower_bound(rho, 2, 0.0) <= mean + 3 * err


class TestTwoDesign:
    def test_full_rank_coefficients(self):
        rho_ae = states.random_density(4, seed=1, dims=(2, 2))
        sig = hashing.optimal_sigma_e(rho_ae)
        T = hashing._tilde(rho_ae, sig)
        avg_ae, avg_e = hashing.exact_two_design_averages(rho_ae, sig, 2)
        assert avg_ae == pytest.approx(linalg.hs_norm_sq(T), abs=1e-12)
        assert avg_e == pytest.approx(linalg.hs_norm_sq(linalg.partial_trace(T, [2, 2], [1])), abs=1e-12)

    def test_m1_d2_coefficients(self):
        rho_ae = states.random_density(4, seed=2, dims=(2, 2))
        sig = np.eye(2) / 2
        T = hashing._tilde(rho_ae, sig)
        n_ae = linalg.hs_norm_sq(T)
        n_e = linalg.hs_norm_sq(linalg.partial_trace(T, [2, 2], [1]))
        avg_ae, avg_e = hashing.exact_two_design_averages(rho_ae, sig, 1)
        assert avg_ae == pytest.approx(2 / 3 * (n_e + n_ae), abs=1e-12)
        assert avg_e == pytest.approx(2 / 3 * (n_e + n_ae), abs=1e-12)

    @pytest.mark.parametrize("dA,m", [(2, 1), (3, 1), (3, 2)])
    def test_monte_carlo_agreement(self, dA, m):
        rho_ae = states.random_density(dA * 2, seed=10 * dA + m, dims=(dA, 2))
        sig = hashing.optimal_sigma_e(rho_ae)
        rng = np.random.default_rng(dA + m)
        n = 4000
        vals = np.array([hashing.tilde_norms(rho_ae, sig, states.haar_unitary(dA, rng), m)
                         for _ in range(n)])
        exact = hashing.exact_two_design_averages(rho_ae, sig, m)
        for col, ex in zip((0, 1), exact):
            err = vals[:, col].std(ddof=1) / math.sqrt(n)
            assert abs(vals[:, col].mean() - ex) <= 4 * err

    @given(seed=st.integers(0, 10 ** 6), m=st.integers(1, 3))
    @settings(max_examples=25, deadline=None)
    def test_difference_identity(self, seed, m):
        rho_ae = states.random_density(6, seed=seed, dims=(3, 2))
        sig = hashing.optimal_sigma_e(rho_ae)
        n_ae, n_e, diff = hashing.tilde_norms(rho_ae, sig, states.haar_unitary(3, seed=seed), m)
        assert abs(diff - (n_ae - n_e / m)) <= 1e-9

    def test_support_violation(self):
        rho_ae = states.random_density(4, seed=2, dims=(2, 2))
        with pytest.raises(SupportError):
            hashing.exact_two_design_averages(rho_ae, np.diag([1.0, 0.0]), 1)

    def test_coefficient_bound(self):
        for d in range(1, 17):
            for m in range(1, d + 1):
                if d == 1:
                    continue
                assert hashing.coefficient_ratio(m, d) <= m + 1e-12


class TestCertificate:
    def test_examples(self, psi2, ket00):
        assert hashing.hashing_certificate(psi2, 2) == pytest.approx(1.0, abs=1e-12)
        assert hashing.hashing_certificate(ket00, 2) == pytest.approx(0.0, abs=1e-12)

    def test_optimal_sigma_attains_h2(self):
        rho_ae = states.random_density(6, seed=8, dims=(2, 3))
        sig = hashing.optimal_sigma_e(rho_ae)
        inv = np.linalg.inv(np.kron(np.eye(2), sig))
        s2 = math.log2(np.real(np.trace(rho_ae.matrix @ rho_ae.matrix @ inv)))
        assert -s2 == pytest.approx(entropy.cond_renyi2(rho_ae).value, abs=1e-10)
        assert isinstance(rho_ae, DensityOp)
