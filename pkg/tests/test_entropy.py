import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from edistill import entropy, states
from edistill.states import DensityOp

seeds = st.integers(0, 10 ** 6)


def _ket(i, d):
    v = np.zeros(d)
    v[i] = 1
    return np.outer(v, v)


class TestRelativeEntropies:
    def test_quasi_identity_alpha2(self):
        half = np.eye(2) / 2
        assert entropy.quasi_entropy(half, half, 2).value == pytest.approx(0, abs=1e-15)

    @given(seed=seeds, alpha=st.sampled_from([0.3, 0.5, 1.5, 2.0, 3.0]))
    @settings(max_examples=30, deadline=None)
    def test_quasi_reduces_to_renyi(self, seed, alpha):
        rng = np.random.default_rng(seed)
        r = states.random_density(3, seed=rng).matrix
        s = states.random_density(3, seed=rng).matrix
        q = entropy.quasi_entropy(r, s, alpha, P=np.eye(3)).value
        assert q == pytest.approx(entropy.renyi(r, s, alpha).value, abs=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_alpha_to_zero_limit(self, seed):
        rng = np.random.default_rng(seed)
        r = states.random_density(3, rank=2, seed=rng).matrix
        s = states.random_density(3, seed=rng).matrix
        P = 0.5 * states.random_density(3, seed=rng).matrix * 3
        P = P / max(1.0, np.linalg.eigvalsh(P)[-1])
        limit = entropy.renyi0(r, s, P=P).value
        gaps = [entropy.quasi_entropy(r, s, a, P=P).value - limit for a in (1e-4, 1e-5, 1e-6)]
        # first-order approach: the gap shrinks tenfold per decade of alpha
        assert abs(gaps[0]) <= 1e-3
        assert abs(gaps[1] / gaps[0] - 0.1) < 1e-3
        assert abs(gaps[2]) <= 1e-5

    def test_zero_trace_flagged(self):
        v = entropy.quasi_entropy(_ket(0, 2), _ket(1, 2), 2)
        assert v.support_violated and v.value == math.inf
        with pytest.raises(ValueError):
            float(v)

    def test_renyi0_examples(self):
        rho = states.random_density(3, seed=0).matrix
        assert entropy.renyi0(rho, rho).value == pytest.approx(0, abs=1e-12)
        assert entropy.renyi0(_ket(0, 2), np.eye(2) / 2).value == pytest.approx(1)
        r = np.diag([0.6, 0.4, 0.0])
        Pi = np.diag([1.0, 1.0, 0.0])
        s = states.random_density(3, seed=1).matrix
        assert entropy.renyi0(r, s, P=Pi).value == pytest.approx(entropy.renyi0(r, s).value, abs=1e-12)

    def test_rel_entropy_examples(self):
        rho = states.random_density(3, seed=0).matrix
        assert entropy.rel_entropy(rho, rho).value == pytest.approx(0, abs=1e-12)
        assert entropy.rel_entropy(_ket(0, 2), np.eye(2) / 2).value == pytest.approx(1)
        v = entropy.rel_entropy(_ket(0, 2), _ket(1, 2))
        assert v.value == math.inf and v.support_violated

    def test_rel_entropy_frozen(self):
        v = entropy.rel_entropy(np.diag([0.75, 0.25]), np.eye(2) / 2).value
        assert v == pytest.approx(oracles.REL_ENT_QUBIT_FROZEN, abs=1e-14)
        assert oracles.REL_ENT_QUBIT == pytest.approx(oracles.REL_ENT_QUBIT_FROZEN, abs=1e-15)

    def test_dmax_examples(self):
        rho = states.random_density(3, seed=0).matrix
        assert entropy.dmax(rho, rho).value == pytest.approx(0, abs=1e-10)
        assert entropy.dmax(_ket(0, 2), np.eye(2) / 2).value == pytest.approx(1)
        assert entropy.dmax(_ket(0, 2), _ket(1, 2)).support_violated

    @given(seed=seeds)
    @settings(max_examples=40, deadline=None)
    def test_alpha_ordering(self, seed):
        rng = np.random.default_rng(seed)
        r = states.random_density(3, seed=rng).matrix
        s = states.random_density(3, seed=rng).matrix
        s0 = entropy.renyi0(r, s).value
        s_half = entropy.renyi(r, s, 0.5).value
        s1 = entropy.rel_entropy(r, s).value
        s2 = entropy.renyi(r, s, 2).value
        dm = entropy.dmax(r, s).value
        assert s0 <= s_half + 1e-9
        assert s_half <= s1 + 1e-9
        assert s1 <= s2 + 1e-9
        # the Petz order-2 quantity is only bounded by Dmax via the sandwiched family
        assert s1 <= dm + 1e-9


class TestCoherentInformation:
    @pytest.mark.parametrize("M", [1, 2, 3, 4])
    def test_mes(self, M):
        rho = states.mes(M, 4).projector()
        assert entropy.coherent_info(rho).value == pytest.approx(math.log2(M), abs=1e-10)
        assert entropy.zero_coherent_info(rho).value == pytest.approx(math.log2(M), abs=1e-12)

    def test_product(self):
        a = states.random_density(2, seed=0).matrix
        b = states.random_density(3, seed=1).matrix
        rho = DensityOp(np.kron(a, b), (2, 3))
        assert entropy.coherent_info(rho).value == pytest.approx(-entropy.von_neumann(a), abs=1e-10)

    def test_maximally_mixed(self, maxmixed4):
        assert entropy.coherent_info(maxmixed4).value == pytest.approx(-1)
        assert entropy.zero_coherent_info(maxmixed4).value == pytest.approx(-1, abs=1e-12)
        assert entropy.cond_renyi2(maxmixed4).value == pytest.approx(1, abs=1e-12)

    def test_product_pure(self, ket00):
        assert entropy.zero_coherent_info(ket00).value == pytest.approx(0, abs=1e-12)
        assert entropy.cond_renyi2(ket00).value == pytest.approx(0, abs=1e-12)

    def test_h2_mes(self, psi2):
        assert entropy.cond_renyi2(psi2).value == pytest.approx(-1, abs=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_i0_matches_sigma_search(self, seed):
        rank = 1 + seed % 3
        rho = states.random_density(4, rank=rank, seed=seed, dims=(2, 2))
        assert entropy.zero_coherent_info(rho).value == pytest.approx(
            oracles.s0_grid_min(rho.matrix, 2), abs=1e-6)

    @pytest.mark.parametrize("seed", range(6))
    def test_h2_matches_sigma_search(self, seed):
        rho = states.random_density(4, seed=seed, dims=(2, 2))
        assert entropy.cond_renyi2(rho).value == pytest.approx(-oracles.s2_grid_min(rho.matrix, 2), abs=1e-6)

    def test_h2_witness_is_optimal_sigma(self):
        rho = states.random_density(6, seed=3, dims=(3, 2))
        v = entropy.cond_renyi2(rho)
        inv = np.linalg.inv(np.kron(np.eye(3), v.witness))
        s2 = math.log2(np.real(np.trace(rho.matrix @ rho.matrix @ inv)))
        assert -s2 == pytest.approx(v.value, abs=1e-10)

    def test_i0_witness_attains(self):
        rho = states.random_density(6, rank=3, seed=2, dims=(2, 3))
        v = entropy.zero_coherent_info(rho)
        s0 = entropy.renyi0(rho.matrix, np.kron(np.eye(2), v.witness)).value
        assert s0 == pytest.approx(v.value, abs=1e-12)


class TestMinEntropy:
    def test_fixed_examples(self):
        assert entropy.hmin_cond_fixed(DensityOp(np.eye(4) / 4, (2, 2)), np.eye(2) / 2).value == pytest.approx(1)
        ket00 = DensityOp(_ket(0, 4), (2, 2))
        assert entropy.hmin_cond_fixed(ket00, _ket(0, 2)).value == pytest.approx(0, abs=1e-12)
        for d in (2, 3):
            v = entropy.hmin_cond_fixed(states.mes(d, d).projector(), np.eye(d) / d)
            assert v.value == pytest.approx(-math.log2(d), abs=1e-10)

    def test_opt_product(self):
        a = states.random_density(2, seed=4).matrix
        e = states.random_density(2, seed=5).matrix
        rho = DensityOp(np.kron(a, e), (2, 2))
        v = entropy.hmin_cond_opt(rho)
        assert v.value == pytest.approx(-math.log2(np.linalg.eigvalsh(a)[-1]), abs=1e-6)
        assert v.value == pytest.approx(oracles.hmin_grid_max(rho.matrix, 2), abs=1e-6)

    def test_opt_maximally_mixed(self, maxmixed4):
        assert entropy.hmin_cond_opt(maxmixed4).value == pytest.approx(1, abs=1e-9)

    @pytest.mark.parametrize("seed", range(4))
    def test_opt_dominates_fixed_and_matches_search(self, seed):
        rho = states.random_density(4, seed=seed, dims=(2, 2))
        v = entropy.hmin_cond_opt(rho, seed=seed)
        fixed = entropy.hmin_cond_fixed(rho, rho.ptrace([1]).matrix).value
        assert v.value >= fixed - 1e-9
        assert v.value == pytest.approx(oracles.hmin_grid_max(rho.matrix, 2), abs=1e-6)
        # the witness attains the reported value
        assert entropy.hmin_cond_fixed(rho, v.witness).value == pytest.approx(v.value, abs=1e-12)

    @given(seed=seeds, dims=st.sampled_from([(2, 2, 4), (3, 2, 6), (2, 3, 3)]))
    @settings(max_examples=25, deadline=None)
    def test_duality(self, seed, dims):
        omega = states.random_pure(dims, seed=seed).projector()
        r_ab = omega.ptrace([0, 1])
        r_ae = omega.ptrace([0, 2])
        r_e = omega.ptrace([2])
        lhs = entropy.hmin_cond_fixed(r_ae, r_e.matrix).value
        assert lhs == pytest.approx(entropy.zero_coherent_info(r_ab).value, abs=1e-9)

    def test_duality_mes_sign(self):
        # rho^{AE} of Psi_M (x) |0>_E is product with a pure E, so H_min = log M
        omega = states.mes(2, 2).projector()
        r_ae = DensityOp(np.kron(np.eye(2) / 2, np.eye(1)), (2, 1))
        assert entropy.hmin_cond_fixed(r_ae, np.eye(1)).value == pytest.approx(1)
        assert entropy.zero_coherent_info(omega).value == pytest.approx(1)
