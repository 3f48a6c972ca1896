"""Quantum states, random objects, channels and instruments.

Subsystem conventions: a bipartite operator lists Alice's system first;
every later subsystem belongs to Bob (or to the environment when a
function says so). Instrument outputs append the classical register as
the last subsystem, on Bob's side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from edistill import linalg
from edistill.errors import RangeError, ShapeError, TraceError

TRACE_SLACK = 1e-10
KRAUS_TOL = 1e-10


def rng_for(seed, stream: int | None = None) -> np.random.Generator:
    """Generator for ``seed`` or for the independent substream ``(seed, stream)``."""
    if isinstance(seed, np.random.Generator):
        if stream is not None:
            raise TypeError("substreams need an integer seed")
        return seed
    if stream is None:
        return np.random.default_rng(seed)
    return np.random.default_rng([int(seed), int(stream)])


def _default_labels(n: int) -> list[str]:
    base = ["A", "B", "C", "D", "F", "G"]
    return base[:n] if n <= len(base) else [f"S{i}" for i in range(n)]


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Positive semidefinite operator with trace at most one."""

    matrix: np.ndarray
    dims: tuple = ()
    labels: tuple = ()

    def __post_init__(self):
        M = linalg.check_hermitian(self.matrix)
        dims = tuple(int(d) for d in self.dims) if self.dims else (M.shape[0],)
        if int(np.prod(dims)) != M.shape[0]:
            raise ShapeError(f"dims {dims} do not match matrix dimension {M.shape[0]}")
        if not linalg.is_psd(M):
            raise linalg.PSDError("density operator is not positive semidefinite")
        tr = float(np.real(np.trace(M)))
        if tr > 1 + TRACE_SLACK:
            raise TraceError(f"trace {tr:.12g} exceeds 1")
        labels = tuple(self.labels) if self.labels else tuple(_default_labels(len(dims)))
        if len(labels) != len(dims):
            raise ShapeError("labels and dims differ in length")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def ptrace(self, keep) -> "DensityOp":
        keep = sorted(keep)
        M = linalg.partial_trace(self.matrix, self.dims, keep)
        return DensityOp(M, tuple(self.dims[k] for k in keep), tuple(self.labels[k] for k in keep))

    def bipartite_dims(self) -> tuple[int, int]:
        """``(d_A, d_rest)``: first subsystem against everything else."""
        dA = self.dims[0]
        return dA, self.dim // dA

    def with_dims(self, dims, labels=None) -> "DensityOp":
        return DensityOp(self.matrix, tuple(dims), tuple(labels) if labels else ())


@dataclass(frozen=True, eq=False)
class PureVector:
    """State vector, normalized or subnormalized, with subsystem structure."""

    amplitudes: np.ndarray
    dims: tuple = ()
    labels: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        dims = tuple(int(d) for d in self.dims) if self.dims else (v.size,)
        if int(np.prod(dims)) != v.size:
            raise ShapeError(f"dims {dims} do not match vector length {v.size}")
        if np.linalg.norm(v) > 1 + TRACE_SLACK:
            raise TraceError("vector norm exceeds 1")
        labels = tuple(self.labels) if self.labels else tuple(_default_labels(len(dims)))
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    def projector(self) -> DensityOp:
        v = self.amplitudes
        return DensityOp(np.outer(v, v.conj()), self.dims, self.labels)


def mes(M: int, d: int) -> PureVector:
    """Maximally entangled state of rank ``M`` on two ``d``-level systems."""
    if not 1 <= M <= d:
        raise RangeError(f"MES rank {M} must lie in [1, {d}]")
    v = np.zeros(d * d, dtype=complex)
    for i in range(M):
        v[i * d + i] = 1.0
    return PureVector(v / np.sqrt(M), (d, d), ("A", "B"))


def purify(rho: DensityOp, rel_tol: float = linalg.SUPPORT_TOL) -> PureVector:
    """Canonical purification with environment dimension equal to the rank.

    The environment basis follows the eigenvalues of ``rho`` in descending
    order, so the output is deterministic.
    """
    w, V = linalg.herm_eig(rho.matrix)
    w = w[::-1]
    V = V[:, ::-1]
    keep = w > rel_tol * max(w.max(), 0.0) if w.max() > 0 else np.zeros_like(w, bool)
    w, V = np.clip(w[keep], 0, None), V[:, keep]
    r = w.size
    psi = (V * np.sqrt(w)).reshape(-1, r).ravel()
    return PureVector(psi, rho.dims + (r,), rho.labels + ("E",))


def environment_marginal(rho: DensityOp) -> DensityOp:
    """``rho^{AE}`` of the canonical purification of ``rho^{AB}``.

    Everything after the first subsystem is treated as ``B``.
    """
    dA, dB = rho.bipartite_dims()
    psi = purify(rho.with_dims((dA, dB)))
    return psi.projector().ptrace([0, 2]).with_dims(psi.dims[::2], ("A", "E"))


def haar_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary from a QR-decomposed Ginibre matrix.

    The diagonal of R is rotated to be positive so the distribution is
    exactly invariant.
    """
    rng = rng_for(seed)
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_pure(dims: Sequence[int], seed=None) -> PureVector:
    rng = rng_for(seed)
    n = int(np.prod(dims))
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureVector(v / np.linalg.norm(v), tuple(dims))


def random_density(d: int, rank: int | None = None, seed=None, dims=None) -> DensityOp:
    """Random state of the given rank, ``G G^dag / Tr`` with Ginibre ``G``."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise RangeError(f"rank {rank} must lie in [1, {d}]")
    rng = rng_for(seed)
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    M = G @ linalg.dagger(G)
    M /= np.real(np.trace(M))
    return DensityOp(M, tuple(dims) if dims else (d,))


def random_channel(d_in: int, d_out: int, n_kraus: int, seed=None) -> list[np.ndarray]:
    """Kraus operators of a random CPTP map, cut from a Haar isometry."""
    if d_out * n_kraus < d_in:
        raise RangeError("need d_out * n_kraus >= d_in for an isometric dilation")
    V = haar_unitary(d_out * n_kraus, rng_for(seed))[:, :d_in]
    return [V[k * d_out:(k + 1) * d_out] for k in range(n_kraus)]


def kraus_completeness(kraus: Sequence[np.ndarray]) -> float:
    """``max|sum K^dag K - 1|``."""
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    S = sum(linalg.dagger(K) @ K for K in kraus)
    return float(np.max(np.abs(S - np.eye(S.shape[0]))))


def _embed(K: np.ndarray, dims: Sequence[int], subsystem: int) -> np.ndarray:
    ops = [np.eye(d) for d in dims]
    ops[subsystem] = K
    return linalg.tensor(*ops)


def apply_channel(rho: DensityOp, kraus: Sequence[np.ndarray], subsystem: int = 0,
                  cp_only: bool = False) -> DensityOp:
    """``sum_k K rho K^dag`` with the Kraus operators acting on one subsystem."""
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    d_in = rho.dims[subsystem]
    if any(K.shape[1] != d_in for K in kraus) or len({K.shape[0] for K in kraus}) != 1:
        raise ShapeError("Kraus operators have inconsistent shapes")
    if not cp_only and kraus_completeness(kraus) > KRAUS_TOL:
        raise TraceError("Kraus operators are not trace preserving")
    out = np.zeros((0, 0))
    for K in kraus:
        F = _embed(K, rho.dims, subsystem)
        term = F @ rho.matrix @ linalg.dagger(F)
        out = term if out.size == 0 else out + term
    dims = list(rho.dims)
    dims[subsystem] = kraus[0].shape[0]
    return DensityOp(out, tuple(dims), rho.labels)


@dataclass(frozen=True, eq=False)
class Instrument:
    """Finite family of CP maps, each given by Kraus operators, summing to a TP map."""

    branches: tuple
    name: str = "instrument"

    def __post_init__(self):
        branches = tuple((str(lab), tuple(np.asarray(K, dtype=complex) for K in ks))
                         for lab, ks in self.branches)
        if not branches or not any(ks for _, ks in branches):
            raise ShapeError("instrument has no Kraus operators")
        shapes = {K.shape for _, ks in branches for K in ks}
        if len(shapes) != 1:
            raise ShapeError(f"Kraus operators have mixed shapes {sorted(shapes)}")
        object.__setattr__(self, "branches", branches)
        if kraus_completeness(self.all_kraus()) > KRAUS_TOL:
            raise TraceError(f"instrument {self.name!r} is not trace preserving")

    def all_kraus(self) -> list[np.ndarray]:
        return [K for _, ks in self.branches for K in ks]

    @property
    def in_dim(self) -> int:
        return self.all_kraus()[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.all_kraus()[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.branches)

    @classmethod
    def identity(cls, d: int) -> "Instrument":
        return cls((("0", (np.eye(d),)),), name="identity")

    @classmethod
    def measurement(cls, basis: np.ndarray, name: str = "measurement") -> "Instrument":
        """Projective measurement in the columns of ``basis``, post-measurement state kept."""
        basis = np.asarray(basis, dtype=complex)
        return cls(tuple((str(i), (np.outer(basis[:, i], basis[:, i].conj()),))
                         for i in range(basis.shape[1])), name=name)


def apply_instrument(rho: DensityOp, ins: Instrument, subsystem: int = 0) -> DensityOp:
    """Classical-quantum output ``sum_x E_x(rho) (x) |x><x|``.

    The register is appended as the last subsystem, labelled ``X``.
    """
    if rho.dims[subsystem] != ins.in_dim:
        raise ShapeError(f"instrument acts on dimension {ins.in_dim}, subsystem has {rho.dims[subsystem]}")
    n = ins.n_outcomes
    blocks = []
    for _, ks in ins.branches:
        blocks.append(apply_channel(rho, ks, subsystem, cp_only=True).matrix)
    d = blocks[0].shape[0]
    out = np.zeros((d * n, d * n), dtype=complex)
    # register is the last tensor factor: index = i * n + x
    for x, blk in enumerate(blocks):
        out[x::n, x::n] = blk
    dims = list(rho.dims)
    dims[subsystem] = ins.out_dim
    labels = list(rho.labels)
    labels[subsystem] = labels[subsystem] + "'"
    return DensityOp(out, tuple(dims) + (n,), tuple(labels) + ("X",))


@dataclass(frozen=True, eq=False)
class LocalMap:
    """Map on AB described by product Kraus pairs ``(K_A, K_B)``.

    This is the description used for one- and two-way LOCC pre-processing:
    any LOCC protocol can be written this way (the converse is not true, and
    the caller is responsible for supplying an LOCC family).
    """

    pairs: tuple
    out_dims: tuple
    name: str = "map"

    def __post_init__(self):
        pairs = tuple((np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
                      for a, b in self.pairs)
        if not pairs:
            raise ShapeError("map has no Kraus pairs")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))
        full = [linalg.tensor(a, b) for a, b in pairs]
        if len({K.shape for K in full}) != 1:
            raise ShapeError("Kraus pairs have mixed shapes")
        if int(np.prod(self.out_dims)) != full[0].shape[0]:
            raise ShapeError("out_dims do not match the Kraus output dimension")
        if kraus_completeness(full) > KRAUS_TOL:
            raise TraceError(f"map {self.name!r} is not trace preserving")

    @property
    def in_dims(self) -> tuple[int, int]:
        a, b = self.pairs[0]
        return a.shape[1], b.shape[1]

    @classmethod
    def identity(cls, dA: int, dB: int) -> "LocalMap":
        return cls(((np.eye(dA), np.eye(dB)),), (dA, dB), name="identity")

    @classmethod
    def discard_b(cls, dA: int, dB: int) -> "LocalMap":
        """Bob replaces his system by ``|0><0|``."""
        pairs = []
        for j in range(dB):
            Kb = np.zeros((dB, dB))
            Kb[0, j] = 1.0
            pairs.append((np.eye(dA), Kb))
        return cls(tuple(pairs), (dA, dB), name="discard_b")

    @classmethod
    def from_instrument(cls, ins: Instrument, dB: int) -> "LocalMap":
        """Alice's instrument with the outcome sent to a register on Bob's side."""
        n = ins.n_outcomes
        pairs = []
        for x, (_, ks) in enumerate(ins.branches):
            flag = np.zeros((n, 1))
            flag[x, 0] = 1.0
            Kb = np.kron(np.eye(dB), flag)
            pairs.extend((K, Kb) for K in ks)
        return cls(tuple(pairs), (ins.out_dim, dB, n), name=ins.name)


def apply_local_map(rho: DensityOp, lmap: LocalMap) -> DensityOp:
    dA, dB = rho.bipartite_dims()
    if (dA, dB) != lmap.in_dims:
        raise ShapeError(f"map expects input dims {lmap.in_dims}, state has {(dA, dB)}")
    out = None
    for a, b in lmap.pairs:
        K = linalg.tensor(a, b)
        term = K @ rho.matrix @ linalg.dagger(K)
        out = term if out is None else out + term
    return DensityOp(out, lmap.out_dims)
