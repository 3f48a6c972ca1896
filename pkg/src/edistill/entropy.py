"""Unsmoothed entropic quantities, in bits.

Every function returns an :class:`EntropyValue`. Infinite results carry a
flag and refuse conversion to ``float`` so they never leak into arithmetic.
For bipartite inputs the first subsystem is ``A`` and all remaining
subsystems together form the conditioning system (``B`` or ``E``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from edistill import linalg
from edistill.states import DensityOp, rng_for

SUPPORT_TOL = linalg.SUPPORT_TOL


@dataclass(frozen=True)
class EntropyValue:
    value: float
    support_violated: bool = False
    converged: bool = True
    witness: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self) -> float:
        if not self.finite:
            raise ValueError(f"entropy value is {self.value} (support_violated={self.support_violated})")
        return float(self.value)


def _mat(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityOp) else linalg.check_hermitian(x)


def _split(rho: DensityOp) -> tuple[int, int]:
    return rho.bipartite_dims()


def _supported_on(X: np.ndarray, sigma: np.ndarray) -> bool:
    """Whether supp X is contained in supp sigma."""
    Pi = linalg.support_projector(sigma)
    outside = np.eye(X.shape[0]) - Pi
    scale = max(float(np.max(np.abs(X))), 1e-300)
    return float(np.max(np.abs(outside @ X @ outside))) <= 1e-9 * scale


def _from_trace(q: float, alpha: float) -> EntropyValue:
    if q <= 0:
        return EntropyValue(math.inf if alpha < 1 else -math.inf, support_violated=True)
    return EntropyValue(math.log2(q) / (alpha - 1))


def quasi_entropy(rho, sigma, alpha: float, P=None) -> EntropyValue:
    """``1/(alpha-1) log Tr[sqrt(P) rho^alpha sqrt(P) sigma^(1-alpha)]``."""
    if alpha <= 0 or alpha == 1:
        raise ValueError("alpha must lie in (0, inf) without 1")
    r, s = _mat(rho), _mat(sigma)
    X = linalg.mat_fn(r, "pow", alpha)
    if P is not None:
        sP = linalg.mat_fn(_mat(P), "sqrt")
        X = sP @ X @ sP
    if alpha > 1 and not _supported_on(X, s):
        return EntropyValue(math.inf, support_violated=True)
    q = float(np.real(np.trace(X @ linalg.mat_fn(s, "pow", 1 - alpha))))
    return _from_trace(q, alpha)


def renyi(rho, sigma, alpha: float) -> EntropyValue:
    """Petz Renyi relative entropy via the overlap of the two eigenbases."""
    if alpha <= 0 or alpha == 1:
        raise ValueError("alpha must lie in (0, inf) without 1")
    lr, Vr = linalg.herm_eig(_mat(rho))
    ls, Vs = linalg.herm_eig(_mat(sigma))
    lr, ls = np.clip(lr, 0, None), np.clip(ls, 0, None)
    overlap = np.abs(linalg.dagger(Vr) @ Vs) ** 2
    r_on = lr > SUPPORT_TOL * lr.max()
    s_on = ls > SUPPORT_TOL * ls.max()
    if alpha > 1 and np.any(overlap[np.ix_(r_on, ~s_on)] > 1e-9):
        return EntropyValue(math.inf, support_violated=True)
    a = np.where(r_on, lr, 0.0) ** alpha
    b = np.where(s_on, ls, 0.0)
    with np.errstate(divide="ignore"):
        b = np.where(s_on, b ** (1 - alpha), 0.0)
    q = float(a @ overlap @ b)
    return _from_trace(q, alpha)


def renyi0(rho, sigma, P=None) -> EntropyValue:
    """Order-zero quantity ``-log Tr[sqrt(P) Pi_rho sqrt(P) sigma]``."""
    Pi = linalg.support_projector(_mat(rho))
    if P is not None:
        sP = linalg.mat_fn(_mat(P), "sqrt")
        Pi = sP @ Pi @ sP
    q = float(np.real(np.trace(Pi @ _mat(sigma))))
    if q <= 1e-300:
        return EntropyValue(math.inf, support_violated=True)
    return EntropyValue(-math.log2(q))


def von_neumann(rho) -> float:
    w = np.linalg.eigvalsh(_mat(rho))
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def rel_entropy(rho, sigma) -> EntropyValue:
    """Umegaki relative entropy; ``+inf`` (flagged) unless supp rho is inside supp sigma."""
    r, s = _mat(rho), _mat(sigma)
    if not _supported_on(r, s):
        return EntropyValue(math.inf, support_violated=True)
    val = np.trace(r @ linalg.mat_fn(r, "log2")) - np.trace(r @ linalg.mat_fn(s, "log2"))
    return EntropyValue(float(np.real(val)))


def dmax(rho, sigma) -> EntropyValue:
    """Max-relative entropy ``log min{lambda : rho <= lambda sigma}``."""
    r, s = _mat(rho), _mat(sigma)
    if not _supported_on(r, s):
        return EntropyValue(math.inf, support_violated=True)
    X = linalg.mat_fn(s, "inv_sqrt")
    lam = float(np.linalg.eigvalsh(linalg.check_hermitian(X @ r @ X, 1e-9))[-1])
    if lam <= 0:
        return EntropyValue(-math.inf)
    return EntropyValue(math.log2(lam))


def coherent_info(rho: DensityOp) -> EntropyValue:
    """``S(rho^B) - S(rho^AB)``."""
    dA, dB = _split(rho)
    rB = linalg.partial_trace(rho.matrix, [dA, dB], [1])
    return EntropyValue(von_neumann(rB) - von_neumann(rho.matrix))


def zero_coherent_info(rho: DensityOp) -> EntropyValue:
    """``min_sigma S_0(rho || 1 (x) sigma) = -log lambda_max(Tr_A Pi_rho)``.

    The minimizing ``sigma^B`` (projector on the top eigenvector) is
    returned as the witness.
    """
    dA, dB = _split(rho)
    Pi = linalg.support_projector(rho.matrix)
    return _i0_from_projector(Pi, dA, dB)


def _i0_from_projector(Pi: np.ndarray, dA: int, dB: int) -> EntropyValue:
    w, V = linalg.herm_eig(linalg.partial_trace(Pi, [dA, dB], [1]))
    top = V[:, -1]
    if w[-1] <= 1e-300:
        return EntropyValue(math.inf, support_violated=True)
    return EntropyValue(-math.log2(w[-1]), witness=np.outer(top, top.conj()))


def cond_renyi2(rho: DensityOp) -> EntropyValue:
    """``H_2(A|B) = -2 log Tr sqrt(Tr_A rho^2)``; witness is the optimal ``sigma^B``."""
    dA, dB = _split(rho)
    N = linalg.partial_trace(rho.matrix @ rho.matrix, [dA, dB], [1])
    root = linalg.mat_fn(N, "sqrt")
    t = float(np.real(np.trace(root)))
    if t <= 0:
        return EntropyValue(math.inf, support_violated=True)
    return EntropyValue(-2 * math.log2(t), witness=root / t)


def hmin_cond_fixed(rho: DensityOp, sigma_E) -> EntropyValue:
    """``H_min(A|E)`` relative to a fixed ``sigma^E``: ``-D_max(rho || 1 (x) sigma)``."""
    dA, dE = _split(rho)
    s = _mat(sigma_E)
    if s.shape[0] != dE:
        raise linalg.ShapeError(f"sigma_E has dimension {s.shape[0]}, expected {dE}")
    d = dmax(rho.matrix, np.kron(np.eye(dA), s))
    return EntropyValue(-d.value, support_violated=d.support_violated)


def _project_to_states(S: np.ndarray, floor: float) -> np.ndarray:
    """Euclidean projection of a Hermitian matrix onto states with spectrum >= floor."""
    w, V = np.linalg.eigh(0.5 * (S + linalg.dagger(S)))
    n = w.size
    # simplex projection of (w - floor) onto {x >= 0, sum x = 1 - n floor}
    target = 1.0 - n * floor
    u = np.sort(w - floor)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, n + 1) > css - target)[0][-1]
    theta = (css[k] - target) / (k + 1)
    x = np.clip(w - floor - theta, 0, None) + floor
    return (V * x) @ linalg.dagger(V)


def hmin_cond_opt(rho: DensityOp, restarts: int = 2, iterations: int = 2000,
                  seed: int = 0) -> EntropyValue:
    """``H_min(A|E) = max_sigma -D_max(rho || 1 (x) sigma)`` by projected subgradient ascent.

    Starts from ``rho^E`` (normalized), the maximally mixed state and
    ``restarts`` random states. The returned value is always attained by the
    witness ``sigma^E``, so it is a valid lower bound on the true maximum.
    """
    dA, dE = _split(rho)
    r = rho.matrix
    rE = linalg.partial_trace(r, [dA, dE], [1])
    floor = 1e-9
    starts = [rE / np.real(np.trace(rE)), np.eye(dE) / dE]
    rng = rng_for(seed)
    for _ in range(restarts):
        G = rng.standard_normal((dE, dE)) + 1j * rng.standard_normal((dE, dE))
        starts.append(G @ linalg.dagger(G) / np.real(np.trace(G @ linalg.dagger(G))))

    def objective(sig):
        d = dmax(r, np.kron(np.eye(dA), sig))
        return -d.value

    best_val, best_sig, converged = -math.inf, None, False
    step0, decay = 0.2, 0.985
    for s0 in starts:
        val = objective(s0)
        if val > best_val:
            best_val, best_sig = val, s0
        sig = _project_to_states(s0, floor)
        val = objective(sig)
        if val > best_val:
            best_val, best_sig = val, sig
        prev = val
        for it in range(iterations):
            ws, Vs = np.linalg.eigh(sig)
            X = np.kron(np.eye(dA), (Vs * ws ** -0.5) @ linalg.dagger(Vs))
            K = X @ r @ X
            w, V = np.linalg.eigh(0.5 * (K + linalg.dagger(K)))
            val = -math.log2(w[-1])
            if val > best_val:
                best_val, best_sig = val, sig
            if it > 0 and abs(val - prev) < 1e-13:
                converged = True
                break
            prev = val
            u = X @ V[:, -1]
            # d lambda / d sigma = -lambda Tr_A(u u^dag) when u^dag (1 (x) sigma) u = 1
            grad = w[-1] * linalg.partial_trace(np.outer(u, u.conj()), [dA, dE], [1])
            gnorm = np.linalg.norm(grad)
            if gnorm == 0:
                break
            sig = _project_to_states(sig + step0 * decay ** it / gnorm * grad, floor)
    return EntropyValue(best_val, converged=converged, witness=best_sig)
