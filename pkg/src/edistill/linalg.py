"""Dense Hermitian linear algebra used throughout the package.

All operators are plain complex ``numpy`` arrays. Spectral functions go
through :func:`herm_eig`, which fixes an eigenvector phase convention so
that repeated runs are bit-stable.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from edistill.errors import HermiticityError, PSDError, ShapeError

HERMITIAN_TOL = 1e-12
PSD_FLOOR = 1e-10
SUPPORT_TOL = 1e-10


class HermitianEigen(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(M).T


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ShapeError("matrix has non-finite entries")
    return M


def hermiticity_violation(M: np.ndarray) -> float:
    """Return ``max|M - M^dag|`` relative to ``max|M|`` (0 for the zero matrix)."""
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(M - dagger(M))) / scale)


def check_hermitian(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate and return the symmetrized Hermitian part of ``M``."""
    M = _as_square(M)
    viol = hermiticity_violation(M)
    if viol > tol:
        raise HermiticityError(
            f"matrix is not Hermitian: max|M - M^dag| / max|M| = {viol:.3e} > {tol:.1e}"
        )
    return 0.5 * (M + dagger(M))


def herm_eig(M) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix with ascending eigenvalues.

    Each eigenvector is rotated so that its first non-negligible component
    is real and positive, which makes the output deterministic.
    """
    M = check_hermitian(M)
    w, V = np.linalg.eigh(M)
    V = np.array(V, dtype=complex)
    for j in range(V.shape[1]):
        col = V[:, j]
        mags = np.abs(col)
        idx = int(np.argmax(mags > 1e-10 * mags.max()))
        phase = col[idx] / mags[idx]
        V[:, j] = col / phase
    return HermitianEigen(w, V)


def _psd_eig(M, floor: float = PSD_FLOOR) -> HermitianEigen:
    w, V = herm_eig(M)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[0] < -floor * scale:
        raise PSDError(f"matrix is not positive semidefinite: min eigenvalue {w[0]:.3e}")
    return HermitianEigen(np.clip(w, 0.0, None), V)


def _on_support(w: np.ndarray, rel_tol: float) -> np.ndarray:
    if w.size == 0 or w.max() <= 0:
        return np.zeros_like(w, dtype=bool)
    return w > rel_tol * w.max()


def mat_fn(M, f: str, alpha: float | None = None, rel_tol: float = SUPPORT_TOL) -> np.ndarray:
    """Apply a scalar function to the spectrum of a PSD matrix.

    Args:
        M: Hermitian positive semidefinite matrix.
        f: one of ``"sqrt"``, ``"inv_sqrt"``, ``"inv"``, ``"log2"`` or
            ``"pow"``. All functions except ``sqrt`` are evaluated on the
            support only; eigenvalues below ``rel_tol * max`` map to 0.
            ``sqrt`` is continuous and only drops rounding-level eigenvalues.
        alpha: exponent for ``"pow"``.

    Returns:
        The matrix function as a Hermitian array.
    """
    w, V = _psd_eig(M)
    supp = _on_support(w, rel_tol)
    out = np.zeros_like(w)
    if f == "sqrt":
        # eigenvalues at rounding level are noise; their roots would not be
        noise = w.size * np.finfo(float).eps * max(float(np.max(np.abs(w))), 0.0)
        out = np.where(w > noise, np.sqrt(np.clip(w, 0, None)), 0.0)
    elif f == "inv_sqrt":
        out[supp] = w[supp] ** -0.5
    elif f == "inv":
        out[supp] = 1.0 / w[supp]
    elif f == "log2":
        out[supp] = np.log2(w[supp])
    elif f == "pow":
        if alpha is None:
            raise ValueError("mat_fn('pow') needs alpha")
        out[supp] = w[supp] ** alpha
    else:
        raise ValueError(f"unknown spectral function {f!r}")
    R = (V * out) @ dagger(V)
    return 0.5 * (R + dagger(R))


def support_projector(M, rel_tol: float = SUPPORT_TOL) -> np.ndarray:
    """Projector onto eigenvectors of ``M`` with eigenvalue above ``rel_tol * lambda_max``."""
    w, V = herm_eig(M)
    Vs = V[:, _on_support(w, rel_tol)]
    return Vs @ dagger(Vs)


def rank(M, rel_tol: float = SUPPORT_TOL) -> int:
    w, _ = herm_eig(M)
    return int(np.count_nonzero(_on_support(w, rel_tol)))


def partial_trace(M, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; ``keep`` is an
    iterable of subsystem indices (order is normalized to ascending).
    """
    M = _as_square(M)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != M.shape[0]:
        raise ShapeError(f"dims {dims} do not match matrix dimension {M.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ShapeError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    T = M.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[i] for i in range(n)]
    col = [letters[i].upper() if i in keep else letters[i] for i in range(n)]
    out = "".join(letters[i] for i in keep) + "".join(letters[i].upper() for i in keep)
    R = np.einsum("".join(row) + "".join(col) + "->" + out, T)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return R.reshape(dk, dk)


def tensor(*ops) -> np.ndarray:
    """Kronecker product of any number of operators or vectors."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def trace_norm(M) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    w = np.linalg.eigvalsh(check_hermitian(M))
    return float(np.sum(np.abs(w)))


def positive_part_trace(M) -> float:
    """``Tr[{M >= 0} M]``, the trace of the positive part."""
    w = np.linalg.eigvalsh(check_hermitian(M))
    return float(np.sum(w[w > 0]))


def hs_norm_sq(M) -> float:
    """Squared Hilbert-Schmidt norm ``Tr[M^dag M]``."""
    M = np.asarray(M)
    return float(np.real(np.vdot(M, M)))


def fidelity(P, Q) -> float:
    """Fidelity ``||sqrt(P) sqrt(Q)||_1`` of two PSD operators.

    Subnormalized arguments are allowed; the result lies in
    ``[0, sqrt(Tr P * Tr Q)]``.
    """
    sP = mat_fn(P, "sqrt")
    sQ = mat_fn(Q, "sqrt")
    return float(np.sum(np.linalg.svd(sP @ sQ, compute_uv=False)))


def is_psd(M, floor: float = PSD_FLOOR) -> bool:
    try:
        _psd_eig(M, floor)
    except (PSDError, HermiticityError):
        return False
    return True
