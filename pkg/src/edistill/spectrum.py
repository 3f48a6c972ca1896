"""Finite-n information-spectrum diagnostics.

For i.i.d. sequences ``rho^{(x)n}`` and ``sigma^{(x)n}`` the quantity of
interest is ``Tr[{Pi >= 0} Pi]`` with ``Pi = rho_n - 2^{n gamma} sigma_n``.
Its limits in ``n`` define the spectral divergence rates, which cannot be
computed; only finite-n profiles and brackets are reported.

Two evaluation paths exist. The dense path diagonalizes the ``d^n``
dimensional operator and is limited to ``d^n <= 4096``. When ``rho`` and
``sigma`` commute, the classical path sums over multinomial types of the
joint eigenvalues and reaches much larger ``n``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from edistill import linalg
from edistill.errors import RangeError, ShapeError
from edistill.states import DensityOp

DENSE_MAX_DIM = 4096
CLASSICAL_MAX_N = 40
COMMUTE_TOL = 1e-12
MONOTONE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralPoint:
    n: int
    gamma: float
    value: float


@dataclass(frozen=True)
class Profile:
    """Values on a grid; ``values[i, j]`` belongs to ``ns[i]`` and ``gammas[j]``."""

    ns: tuple
    gammas: np.ndarray
    values: np.ndarray
    path: str

    def points(self) -> list[SpectralPoint]:
        return [SpectralPoint(n, float(g), float(self.values[i, j]))
                for i, n in enumerate(self.ns) for j, g in enumerate(self.gammas)]


@dataclass(frozen=True)
class Brackets:
    """Finite-n estimates at block length ``n``.

    ``sup_est`` is the smallest grid ``gamma`` whose value falls below
    ``upper_threshold``; ``inf_est`` is the largest whose value exceeds
    ``lower_threshold``. An ``*_open`` flag means the grid never crossed.
    """

    n: int
    sup_est: float
    inf_est: float
    sup_open: bool
    inf_open: bool


def _mat(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityOp) else linalg.check_hermitian(x)


def spectral_trace(rho_n, sigma_n, gamma: float, n: int) -> float:
    """``Tr[{Pi >= 0} Pi]`` for ``Pi = rho_n - 2^(n gamma) sigma_n`` (dense)."""
    r, s = _mat(rho_n), _mat(sigma_n)
    if r.shape != s.shape:
        raise ShapeError(f"dimension mismatch {r.shape} vs {s.shape}")
    if r.shape[0] > DENSE_MAX_DIM:
        raise RangeError(f"dense path limited to dimension {DENSE_MAX_DIM}; "
                         "use the classical path for commuting inputs")
    return linalg.positive_part_trace(r - 2.0 ** (n * gamma) * s)


def commuting(rho, sigma, tol: float = COMMUTE_TOL) -> bool:
    r, s = _mat(rho), _mat(sigma)
    return float(np.max(np.abs(r @ s - s @ r))) <= tol


def joint_spectrum(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of commuting ``rho`` and ``sigma`` in a common eigenbasis."""
    r, s = _mat(rho), _mat(sigma)
    if not commuting(r, s):
        raise ValueError("rho and sigma do not commute")
    # a generic combination has a nondegenerate common eigenbasis
    _, V = np.linalg.eigh(r + math.pi * s)
    p = np.real(np.einsum("ji,jk,ki->i", V.conj(), r, V))
    q = np.real(np.einsum("ji,jk,ki->i", V.conj(), s, V))
    return np.clip(p, 0, None), np.clip(q, 0, None)


def _compositions(n: int, k: int) -> np.ndarray:
    """All length-``k`` nonnegative integer vectors summing to ``n``."""
    out = []
    for bars in itertools.combinations(range(n + k - 1), k - 1):
        edges = (-1,) + bars + (n + k - 1,)
        out.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.array(out, dtype=np.int64)


def _log2_type_terms(p: np.ndarray, q: np.ndarray, n: int):
    types = _compositions(n, p.size)
    log_count = (gammaln(n + 1) - gammaln(types + 1).sum(axis=1)) / math.log(2)
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = np.where(types > 0, types * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        lp = np.where((types > 0) & (p == 0), -np.inf, lp).sum(axis=1)
        lq = np.where(types > 0, types * np.log2(np.where(q > 0, q, 1.0)), 0.0)
        lq = np.where((types > 0) & (q == 0), -np.inf, lq).sum(axis=1)
    return log_count, lp, lq


def classical_trace(p: np.ndarray, q: np.ndarray, gammas: Sequence[float], n: int) -> np.ndarray:
    """Positive-part trace for diagonal ``p^{(x)n}`` and ``q^{(x)n}`` by summing over types."""
    if n > CLASSICAL_MAX_N:
        raise RangeError(f"classical path limited to n <= {CLASSICAL_MAX_N}")
    lc, lp, lq = _log2_type_terms(np.asarray(p, float), np.asarray(q, float), n)
    live = np.isfinite(lp)
    lc, lp, lq = lc[live], lp[live], lq[live]
    g = np.asarray(gammas, float)[:, None]
    with np.errstate(over="ignore"):
        ratio = np.exp2(np.minimum(lq - lp + n * g, 1100.0))
    terms = np.exp2(lc + lp) * np.clip(1.0 - ratio, 0.0, None)
    return terms.sum(axis=1)


def tensor_power(M: np.ndarray, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, M)
    return out


def divergence_profile(rho, sigma, n_max: int, gammas: Sequence[float], path: str = "auto",
                       ns: Sequence[int] | None = None) -> Profile:
    """Values for every ``n`` in ``ns`` (default ``1..n_max``) and every grid ``gamma``.

    Args:
        path: ``"dense"``, ``"classical"`` or ``"auto"`` (classical when the
            inputs commute, dense otherwise).

    Raises:
        ValueError: empty grid, or a row that is not nonincreasing in gamma.
        RangeError: the chosen path cannot reach ``n_max``.
    """
    gammas = np.asarray(gammas, dtype=float)
    if gammas.size == 0:
        raise ValueError("gamma grid is empty")
    if np.any(np.diff(gammas) < 0):
        raise ValueError("gamma grid must be sorted")
    r, s = _mat(rho), _mat(sigma)
    if r.shape != s.shape:
        raise ShapeError(f"dimension mismatch {r.shape} vs {s.shape}")
    ns = tuple(range(1, n_max + 1)) if ns is None else tuple(int(n) for n in ns)
    if path == "auto":
        path = "classical" if commuting(r, s) else "dense"
    rows = []
    if path == "classical":
        p, q = joint_spectrum(r, s)
        for n in ns:
            rows.append(classical_trace(p, q, gammas, n))
    elif path == "dense":
        d = r.shape[0]
        if d ** max(ns) > DENSE_MAX_DIM:
            raise RangeError(f"dense path needs d^n <= {DENSE_MAX_DIM}, got {d}^{max(ns)}; "
                             "commuting inputs can use the classical path")
        for n in ns:
            rn, sn = tensor_power(r, n), tensor_power(s, n)
            rows.append(np.array([spectral_trace(rn, sn, g, n) for g in gammas]))
    else:
        raise ValueError(f"unknown path {path!r}")
    values = np.vstack(rows)
    if np.any(np.diff(values, axis=1) > MONOTONE_TOL):
        raise ValueError("profile is not nonincreasing in gamma")
    return Profile(ns, gammas, values, path)


def divergence_estimate(profile: Profile, upper_threshold: float = 0.1,
                        lower_threshold: float = 0.9) -> Brackets:
    """Brackets from the last row of ``profile``."""
    row = profile.values[-1]
    g = profile.gammas
    below = np.nonzero(row < upper_threshold)[0]
    above = np.nonzero(row > lower_threshold)[0]
    sup_open, inf_open = below.size == 0, above.size == 0
    sup_est = float(g[below[0]]) if not sup_open else math.inf
    inf_est = float(g[above[-1]]) if not inf_open else -math.inf
    return Brackets(profile.ns[-1], sup_est, inf_est, sup_open, inf_open)


def crossing(rho, sigma, n: int, level: float = 0.5, lo: float = -10.0, hi: float = 10.0,
             tol: float = 1e-10) -> float:
    """``gamma`` at which the n-copy value crosses ``level``, by bisection.

    Uses the classical path for commuting inputs and the dense path otherwise.
    """
    r, s = _mat(rho), _mat(sigma)
    if commuting(r, s):
        p, q = joint_spectrum(r, s)
        f = lambda g: float(classical_trace(p, q, [g], n)[0])  # noqa: E731
    else:
        rn, sn = tensor_power(r, n), tensor_power(s, n)
        f = lambda g: spectral_trace(rn, sn, g, n)  # noqa: E731
    if not f(lo) >= level >= f(hi):
        raise ValueError(f"level {level} is not bracketed on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
