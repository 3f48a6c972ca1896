"""Smoothing balls and smoothed coherent informations.

The optima over operator balls have no closed form, so every function here
returns a feasible point: the value comes with a witness (a subnormalized
state or a test operator) that passes :func:`in_ball` / :func:`in_pball`,
and recomputing the quantity on the witness reproduces the value. This
makes ``smooth_i0`` and ``smooth_i0_tilde`` lower bounds on the true
maxima and ``smooth_i2`` an upper bound on the true minimum.

The key reduction used for ``I_{0,delta}``: the objective depends on a
candidate only through its support projector ``Pi``, and the best
fidelity achievable with support inside ``Pi`` is ``F^2 = Tr[Pi rho]``,
attained by ``Pi rho Pi / Tr[Pi rho]``. The search therefore runs over
subspaces with ``Tr[Pi rho] >= 1 - delta^2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from edistill import entropy, linalg
from edistill.entropy import EntropyValue
from edistill.errors import RangeError
from edistill.states import DensityOp, purify, rng_for

SLACK = 1e-10
ORACLE_MAX_DIM = 16
_EXHAUSTIVE_RANK = 12


@dataclass(frozen=True)
class SmoothingSpec:
    delta: float
    strategy: str = "local_search"
    iterations: int = 300
    restarts: int = 4
    seed: int = 0
    samples: int = 100_000

    def __post_init__(self):
        if not 0 <= self.delta <= 1:
            raise RangeError(f"delta must lie in [0, 1], got {self.delta}")
        if self.strategy not in ("truncation", "local_search", "oracle"):
            raise ValueError(f"unknown smoothing strategy {self.strategy!r}")


@dataclass(frozen=True)
class SmoothedValue(EntropyValue):
    delta: float = 0.0
    side: str = "lower"
    strategy: str = "exact"
    witness_kind: str = "state"
    evaluations: int = 0


def in_ball(candidate, rho, delta: float, slack: float = SLACK) -> bool:
    """Membership in ``{s >= 0, Tr s <= 1, F^2(rho, s) >= 1 - delta^2}``."""
    c = candidate.matrix if isinstance(candidate, DensityOp) else np.asarray(candidate, complex)
    r = rho.matrix if isinstance(rho, DensityOp) else np.asarray(rho, complex)
    if linalg.hermiticity_violation(c) > 1e-9 or not linalg.is_psd(c):
        return False
    if np.real(np.trace(c)) > 1 + slack:
        return False
    return linalg.fidelity(r, c) ** 2 >= 1 - delta ** 2 - slack


def in_pball(P, rho, delta: float, slack: float = SLACK) -> bool:
    """Membership in ``{0 <= P <= 1, Tr[P rho] >= 1 - delta}``."""
    P = np.asarray(P, complex)
    r = rho.matrix if isinstance(rho, DensityOp) else np.asarray(rho, complex)
    if linalg.hermiticity_violation(P) > 1e-9:
        return False
    w = np.linalg.eigvalsh(0.5 * (P + linalg.dagger(P)))
    if w[0] < -slack or w[-1] > 1 + slack:
        return False
    return float(np.real(np.trace(P @ r))) >= 1 - delta - slack


def _projector(V: np.ndarray) -> np.ndarray:
    return V @ linalg.dagger(V)


def _i0_of_projector(Pi: np.ndarray, dA: int, dB: int) -> float:
    lam = np.linalg.eigvalsh(linalg.partial_trace(Pi, [dA, dB], [1]))[-1]
    return -math.log2(lam)


def _eigen_subsets(w: np.ndarray, budget: float):
    """Index sets of eigenvectors to keep whose dropped weight fits in ``budget``.

    Exhaustive for small rank, greedy (drop smallest first) otherwise.
    """
    n = w.size
    if n <= _EXHAUSTIVE_RANK:
        for k in range(1, n + 1):
            for drop in itertools.combinations(range(n), n - k):
                if w[list(drop)].sum() <= budget:
                    yield [i for i in range(n) if i not in drop]
    else:
        order = np.argsort(w)
        for j in range(n):
            if w[order[:j]].sum() > budget:
                break
            yield sorted(order[j:].tolist())


def _real_pack(V: np.ndarray) -> np.ndarray:
    return np.concatenate([V.real.ravel(), V.imag.ravel()])


def _real_unpack(x: np.ndarray, d: int, k: int) -> np.ndarray:
    return x[: d * k].reshape(d, k) + 1j * x[d * k:].reshape(d, k)


def _subspace_search(rho: np.ndarray, dA: int, dB: int, V0: np.ndarray, floor: float,
                     iterations: int) -> tuple[float, np.ndarray, int]:
    """Maximize ``I_0`` over ``range(V)`` subject to ``Tr[Pi rho] >= floor`` with SLSQP.

    ``V`` is a ``d x k`` matrix whose column space is the candidate support,
    ``Pi = V (V^dag V)^{-1} V^dag``. Every function used here is of the form
    ``f(Tr[A Pi])``, whose gradient in ``V`` is ``2 (1 - Pi) A V (V^dag V)^{-1}``.
    Returns the best feasible value seen (the start included).
    """
    d, k = V0.shape
    eye_a = np.eye(dA)

    def parts(x):
        V = _real_unpack(x, d, k)
        G = np.linalg.inv(linalg.dagger(V) @ V)
        Pi = V @ G @ linalg.dagger(V)
        return V, G, 0.5 * (Pi + linalg.dagger(Pi))

    def grad(A, V, G, Pi):
        g = 2 * (np.eye(d) - Pi) @ A @ V @ G
        return _real_pack(g)

    def weight(x):
        return float(np.real(np.trace(parts(x)[2] @ rho)))

    def weight_jac(x):
        return grad(rho, *parts(x))

    def neg_obj(x):
        V, G, Pi = parts(x)
        w, U = np.linalg.eigh(linalg.partial_trace(Pi, [dA, dB], [1]))
        u = U[:, -1]
        A = np.kron(eye_a, np.outer(u, u.conj())) / (w[-1] * math.log(2))
        return math.log2(w[-1]), grad(A, V, G, Pi)

    def pnorm(x, q):
        # smooth stand-in for lambda_max: the objective has a kink where Tr_A Pi is degenerate
        V, G, Pi = parts(x)
        w, U = np.linalg.eigh(linalg.partial_trace(Pi, [dA, dB], [1]))
        w = np.clip(w, 0, None)
        t = float(np.sum(w ** q)) ** (1 / q)
        Rq = (U * (w / t) ** (q - 1)) @ linalg.dagger(U)
        return t, grad(np.kron(eye_a, Rq), V, G, Pi)

    def value_of(x):
        U = np.linalg.qr(_real_unpack(x, d, k))[0]
        return _i0_of_projector(_projector(U), dA, dB), U

    # optimize against a slightly raised floor; SLSQP may end marginally infeasible
    cons = [{"type": "ineq", "fun": lambda x: weight(x) - floor - 1e-9, "jac": weight_jac}]
    opts = {"maxiter": iterations, "ftol": 1e-12}
    best, best_V = _i0_of_projector(_projector(V0), dA, dB), V0
    nfev = 1
    x0 = _real_pack(V0)
    starts, x = [x0], x0
    for q in (2, 4, 8, 16, 32, 64):
        res_p = optimize.minimize(pnorm, x, args=(q,), jac=True, method="SLSQP",
                                  constraints=cons, options=opts)
        nfev += int(res_p.nfev)
        if weight(res_p.x) < floor:
            break
        x = res_p.x
        starts.append(x)
    for x in starts:
        res = optimize.minimize(neg_obj, x, jac=True, method="SLSQP", constraints=cons, options=opts)
        nfev += int(res.nfev)
        for y in (x, res.x):
            if weight(y) >= floor:
                val, U = value_of(y)
                if val > best:
                    best, best_V = val, U
    return best, best_V, nfev


def smooth_i0(rho: DensityOp, spec: SmoothingSpec) -> SmoothedValue:
    """Lower bound on ``I_{0,delta}^{A->B}`` with a ball witness.

    Truncation keeps every eigenvector subset whose discarded weight fits in
    the ``delta^2`` budget; ``local_search`` then rotates the best subspace
    of each rank with a constrained optimizer.
    """
    dA, dB = rho.bipartite_dims()
    delta = spec.delta
    if delta == 0:
        v = entropy.zero_coherent_info(rho)
        return SmoothedValue(v.value, witness=rho.matrix, delta=0.0, strategy="exact")
    if spec.strategy == "oracle":
        return oracle_ball_search(rho, delta, "i0", spec.samples, spec.seed)
    w, V = linalg.herm_eig(rho.matrix)
    on = w > linalg.SUPPORT_TOL * w.max()
    w, V = w[on], V[:, on]
    budget = delta ** 2 - 1e-12
    floor = 1 - budget
    cands = []
    evals = 0
    for keep in _eigen_subsets(w, budget):
        Vk = V[:, keep]
        cands.append((_i0_of_projector(_projector(Vk), dA, dB), len(keep), keep))
        evals += 1
    cands.sort(key=lambda c: (-c[0], c[1], c[2]))
    best, best_V = cands[0][0], V[:, cands[0][2]]
    if spec.strategy == "local_search":
        rng = rng_for(spec.seed)
        search_floor = floor
        starts, ranks = [], set()
        for _, k, keep in cands:
            if k not in ranks:
                ranks.add(k)
                starts.append(V[:, keep])
        starts = starts[: max(1, spec.restarts)]
        # eigenvector subspaces can be stationary points, so also start from
        # nearby rotations, shrunk until they fit the fidelity budget
        for j in range(max(1, spec.restarts)):
            V0 = starts[j % len(starts)]
            G = rng.standard_normal(V0.shape) + 1j * rng.standard_normal(V0.shape)
            eps = 0.05
            for _ in range(30):
                V1 = np.linalg.qr(V0 + eps * G)[0]
                if np.real(np.trace(linalg.dagger(V1) @ rho.matrix @ V1)) >= search_floor:
                    starts.append(V1)
                    break
                eps /= 2
        for V0 in starts:
            v, U, n = _subspace_search(rho.matrix, dA, dB, V0, search_floor, spec.iterations)
            evals += n
            if v > best:
                best, best_V = v, U
    Pi = _projector(best_V)
    bar = Pi @ rho.matrix @ Pi
    bar = bar / np.real(np.trace(bar))
    bar = 0.5 * (bar + linalg.dagger(bar))
    value = entropy.zero_coherent_info(DensityOp(bar, rho.dims, rho.labels)).value
    return SmoothedValue(value, witness=bar, delta=delta, side="lower",
                         strategy=spec.strategy, evaluations=evals)


def _i0_tilde_of(P: np.ndarray, Pi_rho: np.ndarray, dA: int, dB: int) -> float:
    sP = linalg.mat_fn(P, "sqrt")
    lam = np.linalg.eigvalsh(linalg.partial_trace(sP @ Pi_rho @ sP, [dA, dB], [1]))[-1]
    if lam <= 1e-300:
        return math.inf
    return -math.log2(lam)


def smooth_i0_tilde(rho: DensityOp, spec: SmoothingSpec) -> SmoothedValue:
    """Lower bound on the test-operator smoothed quantity ``I~_{0,delta}^{A->B}``.

    Candidates are scaled spectral projectors ``t Q`` with
    ``t Tr[Q rho] = 1 - delta`` (including ``Q = 1``), refined by a local
    search over general ``0 <= P <= 1``.
    """
    dA, dB = rho.bipartite_dims()
    delta = spec.delta
    r = rho.matrix
    Pi_rho = linalg.support_projector(r)
    d = r.shape[0]
    if delta >= 1:
        return SmoothedValue(math.inf, support_violated=True, witness=np.zeros((d, d)),
                             delta=delta, witness_kind="test", strategy="trivial")
    w, V = linalg.herm_eig(r)
    on = w > linalg.SUPPORT_TOL * w.max()
    ws, Vs = w[on], V[:, on]
    cands = [np.eye(d)]
    for keep in _eigen_subsets(ws, delta):
        cands.append(_projector(Vs[:, keep]))
    best, best_P, evals = -math.inf, None, 0
    for Q in cands:
        tq = float(np.real(np.trace(Q @ r)))
        t = min(1.0, (1 - delta) / tq)
        P = t * Q
        val = _i0_tilde_of(P, Pi_rho, dA, dB)
        evals += 1
        if val > best + 1e-12:
            best, best_P = val, P
    if spec.strategy == "local_search" and delta > 0:
        rng = rng_for(spec.seed)
        lam, U = np.linalg.eigh(best_P)
        eta = 0.2
        for _ in range(spec.iterations):
            G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            U2, _ = np.linalg.qr(U + eta * G)
            lam2 = np.clip(lam + eta * rng.standard_normal(d), 0, 1)
            P = (U2 * lam2) @ linalg.dagger(U2)
            tq = float(np.real(np.trace(P @ r)))
            evals += 1
            if tq <= 0:
                eta = max(eta * 0.8, 1e-6)
                continue
            # rescale onto the overlap boundary when that keeps P <= 1
            P = P * min(1.0 / max(lam2.max(), 1e-300), (1 - delta + 1e-13) / tq)
            if float(np.real(np.trace(P @ r))) < 1 - delta:
                eta = max(eta * 0.8, 1e-6)
                continue
            val = _i0_tilde_of(P, Pi_rho, dA, dB)
            if val > best + 1e-12:
                best, best_P = val, P
                lam, U = np.linalg.eigh(0.5 * (P + linalg.dagger(P)))
                eta = min(eta * 1.5, 1.0)
            else:
                eta = max(eta * 0.8, 1e-6)
    best_P = 0.5 * (best_P + linalg.dagger(best_P))
    value = _i0_tilde_of(best_P, Pi_rho, dA, dB)
    return SmoothedValue(value, witness=best_P, delta=delta, side="lower",
                         strategy="exact" if delta == 0 else spec.strategy,
                         witness_kind="test", evaluations=evals)


def _h2(M: np.ndarray, dA: int, dE: int) -> float:
    N = linalg.partial_trace(M @ M, [dA, dE], [1])
    w = np.clip(np.linalg.eigvalsh(0.5 * (N + linalg.dagger(N))), 0, None)
    return -2 * math.log2(np.sqrt(w).sum())


def smooth_i2(rho: DensityOp, spec: SmoothingSpec) -> SmoothedValue:
    """Upper bound on ``I_{2,delta}^{A->E} = -max_{ball} H_2(.|E)``.

    Each normalized shape ``s`` is scaled by ``c = (1-delta^2)/F^2(rho, s)``,
    the smallest factor that keeps it in the ball, since ``H_2`` grows by
    ``-2 log c`` under scaling.
    """
    dA, dE = rho.bipartite_dims()
    delta = spec.delta
    r = rho.matrix
    if delta == 0:
        v = entropy.cond_renyi2(rho)
        return SmoothedValue(-v.value, witness=r, delta=0.0, side="upper", strategy="exact")
    if spec.strategy == "oracle":
        res = oracle_ball_search(rho, delta, "h2", spec.samples, spec.seed)
        return SmoothedValue(-res.value, witness=res.witness, delta=delta, side="upper",
                             strategy="oracle", evaluations=res.evaluations)
    target = 1 - delta ** 2 + 1e-12
    d = r.shape[0]

    def scored(shape):
        shape = shape / np.real(np.trace(shape))
        f2 = linalg.fidelity(r, shape) ** 2
        if f2 < target:
            return -math.inf, None
        c = target / f2
        M = c * shape
        return _h2(M, dA, dE), M

    starts = [r]
    w, V = linalg.herm_eig(r)
    on = w > linalg.SUPPORT_TOL * w.max()
    for keep in _eigen_subsets(w[on], delta ** 2):
        Vk = V[:, on][:, keep]
        starts.append(_projector(Vk) @ r @ _projector(Vk))
    rE = linalg.partial_trace(r, [dA, dE], [1])
    flat = np.kron(np.eye(dA) / dA, rE)
    for t in np.linspace(0.01, 0.5, 25):
        starts.append((1 - t) * r + t * flat)
        starts.append((1 - t) * r + t * np.eye(d) / d)
    best, best_M, evals = -math.inf, None, 0
    for s in starts:
        val, M = scored(s)
        evals += 1
        if val > best:
            best, best_M = val, M
    if spec.strategy == "local_search":
        # constrained polish over a square-root factor Y of the shape YY^dag
        def shape_of(x):
            Y = _real_unpack(x, d, d)
            M = Y @ linalg.dagger(Y)
            return M / np.real(np.trace(M))

        def f2_of(x):
            return linalg.fidelity(r, shape_of(x)) ** 2

        def neg_h2(x):
            c = target / max(f2_of(x), target)
            return -_h2(c * shape_of(x), dA, dE)

        res = optimize.minimize(neg_h2, _real_pack(linalg.mat_fn(best_M, "sqrt")), method="SLSQP",
                                constraints=[{"type": "ineq", "fun": lambda x: f2_of(x) - target - 1e-9}],
                                options={"maxiter": spec.iterations, "ftol": 1e-12})
        evals += int(res.nfev)
        sh = shape_of(res.x)
        if linalg.fidelity(r, sh) ** 2 < target:
            # SLSQP can stop marginally outside; mixing in rho raises the fidelity (concavity)
            lo_t, hi_t = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo_t + hi_t)
                if linalg.fidelity(r, (1 - mid) * sh + mid * r) ** 2 >= target:
                    hi_t = mid
                else:
                    lo_t = mid
            sh = (1 - hi_t) * sh + hi_t * r
        val, M = scored(sh)
        if val > best:
            best, best_M = val, M
    best_M = 0.5 * (best_M + linalg.dagger(best_M))
    value = -_h2(best_M, dA, dE)
    return SmoothedValue(value, witness=best_M, delta=delta, side="upper",
                         strategy=spec.strategy, evaluations=evals)


# --- brute-force oracle -------------------------------------------------------

def _batch_ptrace_keep_b(M: np.ndarray, dA: int, dB: int) -> np.ndarray:
    return np.einsum("nabac->nbc", M.reshape(M.shape[0], dA, dB, dA, dB))


def _batch_objective(name: str, M: np.ndarray, dA: int, dB: int) -> np.ndarray:
    if name == "i0":
        w, V = np.linalg.eigh(M)
        mask = w > linalg.SUPPORT_TOL * w[:, -1:]
        Pi = np.einsum("nik,nk,njk->nij", V, mask.astype(float), V.conj())
        lam = np.linalg.eigvalsh(_batch_ptrace_keep_b(Pi, dA, dB))[:, -1]
        return -np.log2(lam)
    if name == "h2":
        N = _batch_ptrace_keep_b(M @ M, dA, dB)
        w = np.clip(np.linalg.eigvalsh(N), 0, None)
        return -2 * np.log2(np.sqrt(w).sum(axis=1))
    raise ValueError(f"unknown oracle objective {name!r}")


def _batch_fidelity_sq(sqrt_rho: np.ndarray, M: np.ndarray) -> np.ndarray:
    K = sqrt_rho @ M @ sqrt_rho
    w = np.clip(np.linalg.eigvalsh(0.5 * (K + np.conj(np.swapaxes(K, 1, 2)))), 0, None)
    return np.sqrt(w).sum(axis=1) ** 2


def oracle_ball_search(rho: DensityOp, delta: float, objective: str = "i0",
                       samples: int = 100_000, seed: int = 0, mode: str = "mixed",
                       batch: int = 4096) -> SmoothedValue:
    """Best objective over random members of the fidelity ball around ``rho``.

    ``objective`` is ``"i0"`` (zero-coherent information) or ``"h2"``
    (conditional collision entropy). In ``"mixed"`` mode candidates are
    random low-rank perturbations of ``sqrt(rho)``; in ``"purified"`` mode
    they are reductions of pure perturbations of the canonical purification,
    accepted by fidelity on the purified space. Both restrict the purifying
    system to a Haar-random subspace of random dimension, which is what
    produces rank-deficient candidates. Either way each sample is
    scaled by a random factor and rejected unless it lies in the ball.
    """
    if rho.dim > ORACLE_MAX_DIM:
        raise RangeError(f"oracle search is limited to total dimension {ORACLE_MAX_DIM}")
    dA, dB = rho.bipartite_dims()
    r = rho.matrix
    if delta == 0:
        val = float(_batch_objective(objective, r[None], dA, dB)[0])
        return SmoothedValue(val, witness=r, delta=0.0, strategy="oracle", evaluations=1)
    rng = rng_for(seed)
    d = rho.dim
    w, V = linalg.herm_eig(r)
    w = np.clip(w, 0, None)
    sqrt_rho = (V * np.sqrt(w)) @ linalg.dagger(V)
    psi = purify(rho).amplitudes.reshape(d, -1)
    rk = psi.shape[1]
    lo = 1 - delta ** 2
    best, best_M, accepted = -math.inf, None, 0
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        done += n
        eta = 10 ** rng.uniform(-4, 0, size=n)
        k = rng.integers(1, rk + 1, size=n)
        # Haar-random k-dimensional subspace of the purifying system
        Z = rng.standard_normal((n, rk, rk)) + 1j * rng.standard_normal((n, rk, rk))
        Q, _ = np.linalg.qr(Z)
        Q = Q * (np.arange(rk)[None, None, :] < k[:, None, None])
        W = Q @ np.conj(np.swapaxes(Q, 1, 2))
        if mode == "mixed":
            Y = psi[None] @ W
            G = rng.standard_normal((n, d, rk)) + 1j * rng.standard_normal((n, d, rk))
            Y = Y + eta[:, None, None] * (G @ W) / np.sqrt(2 * d * rk)
            M = Y @ np.conj(np.swapaxes(Y, 1, 2))
        elif mode == "purified":
            G = rng.standard_normal((n, d, rk)) + 1j * rng.standard_normal((n, d, rk))
            G /= np.linalg.norm(G.reshape(n, -1), axis=1)[:, None, None]
            phi = (psi[None] + eta[:, None, None] * G) @ W
            nrm = np.linalg.norm(phi.reshape(n, -1), axis=1)
            ok = nrm > 0
            phi[ok] /= nrm[ok, None, None]
            ov = np.abs(np.einsum("ij,nij->n", psi.conj(), phi)) ** 2
            M = phi @ np.conj(np.swapaxes(phi, 1, 2))
        else:
            raise ValueError(f"unknown oracle mode {mode!r}")
        tr = np.real(np.einsum("nii->n", M))
        good = tr > 1e-14
        M[good] /= tr[good, None, None]
        f2 = _batch_fidelity_sq(sqrt_rho, M) if mode == "mixed" else ov
        smin = lo / np.maximum(f2, 1e-300)
        s = np.where(rng.random(n) < 0.25, smin, rng.uniform(np.minimum(smin, 1.0), 1.0))
        s = np.minimum(s * (1 + 1e-12), 1.0)
        good &= f2 * s >= lo
        if mode == "purified":
            good &= ok
        if not np.any(good):
            continue
        Mg = M[good] * s[good, None, None]
        vals = _batch_objective(objective, Mg, dA, dB)
        accepted += int(good.sum())
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, best_M = float(vals[j]), Mg[j]
    if best_M is None:
        best_M = r
        best = float(_batch_objective(objective, r[None], dA, dB)[0])
    best_M = 0.5 * (best_M + linalg.dagger(best_M))
    return SmoothedValue(best, witness=best_M, delta=delta, side="lower", strategy="oracle",
                         evaluations=accepted)
