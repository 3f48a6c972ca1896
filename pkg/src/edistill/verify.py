"""Seeded fuzz suites for the operator inequalities the bounds rely on.

Each suite draws random instances, evaluates a margin that is nonnegative
whenever the inequality holds, and records the worst margin together with
the first counterexample. Trial ``i`` uses the substream ``(seed, i)``, so a
suite is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from edistill import entropy, hashing, io, linalg, smooth
from edistill.states import (DensityOp, PureVector, apply_channel, environment_marginal,
                             haar_unitary, mes, random_channel, random_density, random_pure,
                             rng_for)

SLACK = 1e-9
DEFAULT_DIMS = ((2, 2), (2, 3), (3, 2), (3, 3))


@dataclass(frozen=True)
class PropertyResult:
    name: str
    trials: int
    violations: int
    worst_margin: float
    seed: int
    counterexample: dict | None = field(default=None)
    broken: bool = False

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"suite": self.name, "trials": self.trials, "violations": self.violations,
                "worst_margin": self.worst_margin, "seed": self.seed, "passed": self.passed,
                "broken_predicate": self.broken, "counterexample": self.counterexample}


def _pick_dims(rng, dims):
    if dims is not None:
        return tuple(dims)
    return DEFAULT_DIMS[int(rng.integers(len(DEFAULT_DIMS)))]


def _rand_state(rng, d, dims=None) -> DensityOp:
    return random_density(d, int(rng.integers(1, d + 1)), seed=rng, dims=dims)


def _rand_psd(rng, d) -> np.ndarray:
    """Unnormalized PSD operator of random rank and scale."""
    k = int(rng.integers(1, d + 1))
    G = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    M = G @ linalg.dagger(G)
    return M * (rng.uniform(0.1, 2.0) / np.real(np.trace(M)))


def _payload(**ops) -> dict:
    out = {}
    for k, v in ops.items():
        if isinstance(v, (DensityOp, PureVector)):
            out[k] = io.state_to_dict(v)
        elif isinstance(v, np.ndarray):
            out[k] = io._pairs(v)
        else:
            out[k] = v
    return out


# Every trial returns (margin, payload builder).

def _sandwich(rng, dims):
    dA, dB = _pick_dims(rng, dims)
    d = dA * dB
    r, s = _rand_state(rng, d), _rand_state(rng, d)
    F = linalg.fidelity(r.matrix, s.matrix)
    half = 0.5 * linalg.trace_norm(r.matrix - s.matrix)
    margin = min(half - (1 - F), math.sqrt(max(0.0, 1 - F ** 2)) - half)
    return margin, lambda: _payload(rho=r, sigma=s)


def _trhs(rng, dims):
    dA, dB = _pick_dims(rng, dims)
    d = dA * dB
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    X = 0.5 * (G + linalg.dagger(G))
    H = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    xi = H @ linalg.dagger(H) + 1e-3 * np.eye(d)
    s = linalg.mat_fn(xi, "inv_sqrt")
    lhs = linalg.trace_norm(X) ** 2
    mid = float(np.real(np.trace(xi) * np.trace(X @ s @ X @ s)))
    rhs = float(np.real(np.trace(xi) * np.trace(X @ X @ linalg.mat_fn(xi, "inv"))))
    scale = max(1.0, rhs)
    margin = min(mid - lhs, rhs - mid) / scale
    return margin, lambda: _payload(X=X, xi=xi)


def _genfid(rng, dims):
    dA, dB = _pick_dims(rng, dims)
    d = dA * dB
    P, Q = _rand_psd(rng, d), _rand_psd(rng, d)
    F = linalg.fidelity(P, Q)
    rhs = 0.5 * np.real(np.trace(P) + np.trace(Q)) - 0.5 * linalg.trace_norm(P - Q)
    return float(F - rhs), lambda: _payload(P=P, Q=Q)


def _ricochet(rng, dims):
    d = _pick_dims(rng, dims)[0]
    O = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    psi = mes(d, d).amplitudes
    lhs = np.kron(O, np.eye(d)) @ psi
    rhs = np.kron(np.eye(d), O.T) @ psi
    return SLACK - float(np.max(np.abs(lhs - rhs))), lambda: _payload(O=O)


def _i0_tilde_exact(rho: DensityOp) -> float:
    spec = smooth.SmoothingSpec(0.0, strategy="truncation")
    return smooth.smooth_i0_tilde(rho, spec).value


def _dataproc(rng, dims):
    dA, dB = _pick_dims(rng, dims)
    rho = _rand_state(rng, dA * dB, (dA, dB))
    d_out = int(rng.integers(2, 4))
    n_k = int(rng.integers(1, 4))
    if d_out * n_k < dB:
        n_k = -(-dB // d_out)
    kraus = random_channel(dB, d_out, n_k, seed=rng)
    out = apply_channel(rho, kraus, subsystem=1)
    margin = _i0_tilde_exact(rho) - _i0_tilde_exact(out)
    return margin, lambda: _payload(rho=rho, kraus=[io._pairs(K) for K in kraus])


def _tripartite(rng, dims):
    dA, dB = _pick_dims(rng, dims[:2] if dims else None)
    dE = dims[2] if dims and len(dims) > 2 else dA * dB
    return random_pure((dA, dB, dE), seed=rng)


def _duality(rng, dims):
    omega = _tripartite(rng, dims)
    full = omega.projector()
    r_ab = full.ptrace([0, 1])
    r_ae = full.ptrace([0, 2])
    r_e = linalg.partial_trace(r_ae.matrix, r_ae.dims, [1])
    lhs = entropy.hmin_cond_fixed(r_ae, r_e).value
    rhs = entropy.zero_coherent_info(r_ab).value
    return SLACK - abs(lhs - rhs), lambda: _payload(omega=omega)


def _i2i0(rng, dims):
    dA, dB = _pick_dims(rng, dims)
    rho = _rand_state(rng, dA * dB, (dA, dB))
    h2 = entropy.cond_renyi2(environment_marginal(rho)).value
    i0 = entropy.zero_coherent_info(rho).value
    return h2 - i0, lambda: _payload(rho=rho)


HASHING_SAMPLES = 200


def _hashing_consistency(rng, dims):
    dA, dB = _pick_dims(rng, dims)
    rho = _rand_state(rng, dA * dB, (dA, dB))
    m = int(rng.integers(1, dA + 1))
    seed = int(rng.integers(2 ** 31))
    mean, err = hashing.mc_distillation_fidelity(rho, m, HASHING_SAMPLES, seed)
    cert = hashing.hashing_certificate(rho, m)
    return mean + 3 * err - cert, lambda: _payload(rho=rho, m=m, mc_seed=seed)


TWO_DESIGN_SAMPLES = 2000


def _two_design(rng, dims):
    dA, dB = _pick_dims(rng, dims)
    rho = _rand_state(rng, dA * dB, (dA, dB))
    ae = environment_marginal(rho)
    sig = hashing.optimal_sigma_e(ae)
    m = int(rng.integers(1, dA + 1))
    ex = hashing.exact_two_design_averages(ae, sig, m)
    seed = int(rng.integers(2 ** 31))
    vals = np.array([hashing.tilde_norms(ae, sig, haar_unitary(dA, rng_for(seed, i)), m)
                     for i in range(TWO_DESIGN_SAMPLES)])
    mean = vals[:, :2].mean(axis=0)
    err = vals[:, :2].std(axis=0, ddof=1) / math.sqrt(TWO_DESIGN_SAMPLES)
    tol = np.maximum(4 * err, SLACK)
    ident = float(np.max(np.abs(vals[:, 2] - (vals[:, 0] - vals[:, 1] / m))))
    margin = min(float(np.min(tol - np.abs(mean - np.array(ex)))), SLACK - ident)
    return margin, lambda: _payload(rho=rho, m=m, mc_seed=seed)


SUITES: dict[str, Callable] = {
    "sandwich": _sandwich,
    "trhs": _trhs,
    "genfid": _genfid,
    "ricochet": _ricochet,
    "dataproc": _dataproc,
    "duality": _duality,
    "i2i0": _i2i0,
    "hashing_consistency": _hashing_consistency,
    "two_design": _two_design,
}


def run_suite(name: str, trials: int, dims=None, seed: int = 0, broken: bool = False) -> PropertyResult:
    """Run ``trials`` seeded instances of the named inequality.

    Args:
        name: one of :data:`SUITES`.
        dims: ``(d_A, d_B)`` (or ``(d_A, d_B, d_E)`` for ``duality``); ``None``
            mixes qubits and qutrits.
        broken: evaluate the negated predicate, which must fail; used to
            check that the harness can detect violations at all.
    """
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    if trials < 1:
        raise ValueError("trials must be positive")
    fn = SUITES[name]
    violations, worst, example = 0, math.inf, None
    for i in range(trials):
        margin, payload = fn(rng_for(seed, i), dims)
        if broken:
            margin = -margin - 2 * SLACK
        worst = min(worst, margin)
        if margin < -SLACK:
            violations += 1
            if example is None:
                example = {"trial": i, "margin": margin, **payload()}
    return PropertyResult(name, trials, violations, float(worst), seed, example, broken)
