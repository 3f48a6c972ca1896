"""Random hashing protocol and its environment-side fidelity certificate.

Alice applies a Haar-random unitary ``U`` on ``A``, measures the projector
onto a random ``m``-dimensional subspace (the branch kept here is ``P_m U``
with ``P_m`` the truncation onto the first ``m`` basis vectors) and tells
Bob the branch. The decoded fidelity of each branch is lower bounded by the
fidelity between the ``A'E`` marginal and ``tau_m (x) omega^E``, which only
involves the purification, so no decoder is ever built.

The unitary group is sampled with the Haar measure on ``U(d)``; every
quantity used here is a second moment, for which ``U(d)`` and ``SU(d)``
averages coincide.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from edistill import entropy, linalg
from edistill.errors import RangeError, ShapeError, SupportError
from edistill.states import (DensityOp, PureVector, environment_marginal, haar_unitary,
                             purify, rng_for)

UNITARY_TOL = 1e-10


def projector_pm(m: int, d_A: int) -> np.ndarray:
    """``m x d_A`` truncation ``sum_{i<m} |i><i|``."""
    if not 1 <= m <= d_A:
        raise RangeError(f"m must lie in [1, {d_A}], got {m}")
    return np.eye(m, d_A, dtype=complex)


@dataclass(frozen=True)
class HashSample:
    """One branch of the hashing instrument.

    ``omega_ab`` and ``omega_ae`` are unnormalized; their common trace is
    the branch weight.
    """

    stream: int | None
    weight: float
    env_fidelity: float
    omega_ab: np.ndarray = field(repr=False)
    omega_ae: np.ndarray = field(repr=False)
    m: int = 1


def _check_unitary(U: np.ndarray, d: int) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (d, d):
        raise ShapeError(f"unitary must be {d}x{d}, got {U.shape}")
    if np.max(np.abs(U @ linalg.dagger(U) - np.eye(d))) > UNITARY_TOL:
        raise ShapeError("g is not unitary")
    return U


def hash_instance(omega: PureVector, U: np.ndarray, m: int, stream: int | None = None) -> HashSample:
    """Branch ``sqrt(d_A/m) (P_m U (x) 1 (x) 1) |Omega^{ABE}>`` and its marginals."""
    if len(omega.dims) != 3:
        raise ShapeError("expected a tripartite vector on A, B, E")
    dA, dB, dE = omega.dims
    K = math.sqrt(dA / m) * projector_pm(m, dA) @ _check_unitary(U, dA)
    T = np.einsum("ia,abe->ibe", K, omega.amplitudes.reshape(dA, dB, dE))
    ab = T.reshape(m * dB, dE)
    omega_ab = ab @ linalg.dagger(ab)
    ae = np.transpose(T, (0, 2, 1)).reshape(m * dE, dB)
    omega_ae = ae @ linalg.dagger(ae)
    weight = float(np.real(np.trace(omega_ab)))
    sample = HashSample(stream, weight, 0.0, omega_ab, omega_ae, m)
    return HashSample(stream, weight, env_fidelity(sample, dE), omega_ab, omega_ae, m)


def env_fidelity(sample: HashSample, d_E: int | None = None) -> float:
    """``F(omega^{A'E}, tau_m (x) omega^E)`` for the unnormalized branch operators."""
    m = sample.m
    dE = d_E if d_E is not None else sample.omega_ae.shape[0] // m
    oE = linalg.partial_trace(sample.omega_ae, [m, dE], [1])
    return linalg.fidelity(sample.omega_ae, np.kron(np.eye(m) / m, oE))


def _one_sample(omega: PureVector, m: int, seed: int, i: int) -> HashSample:
    U = haar_unitary(omega.dims[0], rng_for(seed, i))
    return hash_instance(omega, U, m, stream=i)


def sample_branches(rho: DensityOp, m: int, n_samples: int, seed: int,
                    threads: int = 1) -> list[HashSample]:
    """Hashing branches for ``n_samples`` Haar unitaries, sample ``i`` on substream ``(seed, i)``."""
    dA, dB = rho.bipartite_dims()
    if not 1 <= m <= dA:
        raise RangeError(f"m must lie in [1, {dA}], got {m}")
    omega = purify(rho.with_dims((dA, dB)))
    work = lambda i: _one_sample(omega, m, seed, i)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(n_samples)))
    return [work(i) for i in range(n_samples)]


def mc_distillation_fidelity(rho: DensityOp, m: int, n_samples: int, seed: int,
                             threads: int = 1) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the branch fidelity.

    Returns:
        ``(mean, stderr)``; ``stderr`` is NaN when ``n_samples == 1``.
    """
    if n_samples < 1:
        raise RangeError("n_samples must be positive")
    vals = np.array([s.env_fidelity for s in sample_branches(rho, m, n_samples, seed, threads)])
    mean = float(np.mean(vals))
    if n_samples < 2:
        return mean, math.nan
    return mean, float(np.std(vals, ddof=1) / math.sqrt(n_samples))


def _tilde(rho_ae: DensityOp, sigma_e) -> np.ndarray:
    dA, dE = rho_ae.bipartite_dims()
    s = sigma_e.matrix if isinstance(sigma_e, DensityOp) else linalg.check_hermitian(sigma_e)
    if s.shape[0] != dE:
        raise ShapeError(f"sigma_E has dimension {s.shape[0]}, expected {dE}")
    rE = linalg.partial_trace(rho_ae.matrix, [dA, dE], [1])
    Pi = linalg.support_projector(s)
    if np.max(np.abs(rE - Pi @ rE @ Pi)) > 1e-9 * max(1.0, float(np.max(np.abs(rE)))):
        raise SupportError("sigma_E is not invertible on the support of rho^E")
    X = np.kron(np.eye(dA), linalg.mat_fn(s, "pow", -0.25))
    return X @ rho_ae.matrix @ X


def tilde_norms(rho_ae: DensityOp, sigma_e, U: np.ndarray, m: int) -> tuple[float, float, float]:
    """Squared HS norms for one unitary.

    Returns:
        ``(|r~^{A'E}|^2, |r~^E|^2, |r~^{A'E} - tau_m (x) r~^E|^2)`` for the
        hashed operator ``r~^{A'E} = (d_A/m) (P U (x) 1) r~^{AE} (P U (x) 1)^dag``.
    """
    dA, dE = rho_ae.bipartite_dims()
    T = _tilde(rho_ae, sigma_e)
    K = np.kron(projector_pm(m, dA) @ _check_unitary(U, dA), np.eye(dE))
    Y = (dA / m) * K @ T @ linalg.dagger(K)
    YE = linalg.partial_trace(Y, [m, dE], [1])
    diff = Y - np.kron(np.eye(m) / m, YE)
    return linalg.hs_norm_sq(Y), linalg.hs_norm_sq(YE), linalg.hs_norm_sq(diff)


def exact_two_design_averages(rho_ae: DensityOp, sigma_e, m: int) -> tuple[float, float]:
    """Haar averages of ``|r~^{A'E}_{m,g}|_2^2`` and ``|r~^E_{m,g}|_2^2`` in closed form."""
    dA, dE = rho_ae.bipartite_dims()
    if dA < 2:
        raise RangeError("d_A must be at least 2")
    if not 1 <= m <= dA:
        raise RangeError(f"m must lie in [1, {dA}], got {m}")
    T = _tilde(rho_ae, sigma_e)
    n_ae = linalg.hs_norm_sq(T)
    n_e = linalg.hs_norm_sq(linalg.partial_trace(T, [dA, dE], [1]))
    c_lo = (dA / m) * (dA - m) / (dA ** 2 - 1)
    c_hi = (dA / m) * (m * dA - 1) / (dA ** 2 - 1)
    return c_lo * n_e + c_hi * n_ae, c_hi * n_e + c_lo * n_ae


def coefficient_ratio(m: int, d_A: int) -> float:
    """``d_A^2 (m^2 - 1) / (m (d_A^2 - 1))``, which never exceeds ``m``."""
    return d_A ** 2 * (m ** 2 - 1) / (m * (d_A ** 2 - 1))


def hashing_certificate(rho: DensityOp, m: int) -> float:
    """``1 - sqrt(m (2**(-H_2(A|E)) - 1/d_A))`` clamped to ``[0, 1]``."""
    dA, dB = rho.bipartite_dims()
    if not 1 <= m <= dA:
        raise RangeError(f"m must lie in [1, {dA}], got {m}")
    h2 = entropy.cond_renyi2(environment_marginal(rho)).value
    radicand = max(0.0, m * (2.0 ** (-h2) - 1 / dA))
    return float(min(1.0, max(0.0, 1 - math.sqrt(radicand))))


def optimal_sigma_e(rho_ae: DensityOp) -> np.ndarray:
    """Normalized ``sqrt(Tr_A rho^2)``, the conditioning state that attains ``H_2(A|E)``."""
    return entropy.cond_renyi2(rho_ae).witness
