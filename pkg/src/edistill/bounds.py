"""One-shot achievability and converse bounds on distillable entanglement.

Lower bounds are certified: they are built from feasible-point values of the
smoothed quantities and rounded down to the logarithm of an integer (the
rank of a distillable maximally entangled state). Converse bounds need a
maximum over all LOCC maps, which is evaluated over an explicit finite family
only; such values are labelled as surrogates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from edistill import smooth
from edistill.errors import RangeError, ShapeError
from edistill.states import (DensityOp, Instrument, LocalMap, apply_instrument,
                             apply_local_map, environment_marginal)

# relative guard so that 2**log2(k) still floors to k
_FLOOR_GUARD = 1e-12


@dataclass(frozen=True)
class BoundReport:
    """Result of a bound evaluation.

    Attributes:
        quantity: name of the bound.
        value: bound in bits (after rounding and clamping).
        delta_remainder: rounding remainder ``raw - value`` in ``[0, 1)``.
        epsilon: target error.
        smoothing: smoothing parameter passed to the inner quantity.
        raw: value before rounding and clamping.
        kind: ``"lower"``, ``"upper-surrogate"`` or ``"upper"``.
        witness: identifier of the maximizing family member.
        floored: the raw value was negative and clamped to zero.
        details: per-member values and other diagnostics.
    """

    quantity: str
    value: float
    delta_remainder: float
    epsilon: float
    smoothing: float
    raw: float
    kind: str = "lower"
    witness: str = ""
    floored: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "value": _num(self.value),
            "delta_remainder": _num(self.delta_remainder),
            "epsilon": self.epsilon,
            "smoothing": self.smoothing,
            "raw": _num(self.raw),
            "kind": self.kind,
            "witness": self.witness,
            "floored": self.floored,
            "details": self.details,
        }


def _num(x: float):
    """JSON-safe number: non-finite values become strings."""
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def log_integer_floor(x: float) -> tuple[float, float, bool]:
    """Round ``x`` down to the logarithm of a positive integer.

    Returns:
        ``(value, remainder, floored)`` with ``value = log2 floor(2**x)`` and
        ``remainder = x - value``. Negative ``x`` maps to ``(0, 0, True)``
        since a rank-one state is always obtainable.
    """
    if math.isnan(x):
        raise ValueError("cannot round NaN")
    if x < 0:
        return 0.0, 0.0, True
    if math.isinf(x):
        return math.inf, 0.0, False
    k = math.floor(2.0 ** x * (1 + _FLOOR_GUARD))
    value = math.log2(k)
    return value, max(0.0, x - value), False


def _check_eps(eps: float) -> None:
    if not 0 <= eps <= 1:
        raise RangeError(f"epsilon must lie in [0, 1], got {eps}")


def _spec(delta: float, spec: smooth.SmoothingSpec | None) -> smooth.SmoothingSpec:
    if spec is None:
        return smooth.SmoothingSpec(delta)
    return smooth.SmoothingSpec(delta, spec.strategy, spec.iterations, spec.restarts,
                                spec.seed, spec.samples)


def _bipartite(rho: DensityOp) -> DensityOp:
    dA, dB = rho.bipartite_dims()
    return rho if len(rho.dims) == 2 else rho.with_dims((dA, dB), (rho.labels[0], "B"))


def hashing_lower_bound(rho: DensityOp, eps: float,
                        spec: smooth.SmoothingSpec | None = None) -> BoundReport:
    """``I_{0,eps/8}(A>B) + log(1/d_A + eps^2/4)``, rounded down to a log-integer."""
    _check_eps(eps)
    rho = _bipartite(rho)
    dA, _ = rho.bipartite_dims()
    delta = eps / 8
    i0 = smooth.smooth_i0(rho, _spec(delta, spec))
    raw = i0.value + math.log2(1 / dA + eps ** 2 / 4)
    value, rem, floored = log_integer_floor(raw)
    return BoundReport("hashing", value, rem, eps, delta, raw, "lower", witness="identity",
                       floored=floored, details={"i0_smoothed": _num(i0.value), "d_A": dA})


def fidelity_lower_bound(rho: DensityOp, m: int, delta: float,
                         spec: smooth.SmoothingSpec | None = None) -> float:
    """``1 - 4 delta - sqrt(m (2**I_{2,delta}(A>E) - 1/d_A))`` clamped to ``[0, 1]``.

    The environment is the canonical purification of ``rho``. Because the
    smoothed ``I_2`` used here is an upper bound, the result is conservative.
    """
    rho = _bipartite(rho)
    dA, _ = rho.bipartite_dims()
    if not 1 <= m <= dA:
        raise RangeError(f"m must lie in [1, {dA}], got {m}")
    if not 0 <= delta <= 1:
        raise RangeError(f"delta must lie in [0, 1], got {delta}")
    rho_ae = environment_marginal(rho)
    i2 = smooth.smooth_i2(rho_ae, _spec(delta, spec)).value
    radicand = max(0.0, m * (2.0 ** i2 - 1 / dA))
    return float(min(1.0, max(0.0, 1 - 4 * delta - math.sqrt(radicand))))


def _member_name(member, index: int) -> str:
    name = getattr(member, "name", "") or "member"
    return f"{index}:{name}"


def _preprocess(rho: DensityOp, member) -> DensityOp:
    if isinstance(member, Instrument):
        return apply_instrument(rho, member, subsystem=0)
    if isinstance(member, LocalMap):
        return apply_local_map(rho, member)
    raise TypeError(f"family members must be Instrument or LocalMap, got {type(member).__name__}")


def preprocessed_lower_bound(rho: DensityOp, eps: float, family: Sequence,
                             spec: smooth.SmoothingSpec | None = None) -> BoundReport:
    """Best hashing bound after local pre-processing by a member of ``family``.

    Instruments act on ``A`` with their outcome appended on Bob's side;
    local maps act on ``AB``. ``d_A`` in the additive term becomes the output
    dimension on Alice's side. Ties go to the lowest family index.
    """
    if not family:
        raise ShapeError("pre-processing family is empty")
    rho = _bipartite(rho)
    best, per_member = None, {}
    for i, member in enumerate(family):
        sigma = _preprocess(rho, member)
        rep = hashing_lower_bound(sigma, eps, spec)
        name = _member_name(member, i)
        per_member[name] = _num(rep.raw)
        if best is None or rep.raw > best[0].raw:
            best = (rep, name)
    rep, name = best
    return BoundReport("preprocessed", rep.value, rep.delta_remainder, eps, rep.smoothing, rep.raw,
                       "lower", witness=name, floored=rep.floored,
                       details={"members": per_member})


def _upper(rho: DensityOp, eps: float, delta: float, family: Sequence, quantity: str,
           exhaustive: bool, spec: smooth.SmoothingSpec | None) -> BoundReport:
    if not family:
        raise ShapeError("family is empty")
    best, per_member = None, {}
    for i, member in enumerate(family):
        sigma = _bipartite(_preprocess(rho, member))
        val = smooth.smooth_i0_tilde(sigma, _spec(min(delta, 1.0), spec)).value
        name = _member_name(member, i)
        per_member[name] = _num(val)
        if best is None or val > best[0]:
            best = (val, name)
    raw, name = best
    value = max(0.0, raw)
    return BoundReport(quantity, value, 0.0, eps, delta, raw,
                       "upper" if exhaustive else "upper-surrogate", witness=name,
                       floored=raw < 0, details={"members": per_member})


def one_way_upper_bound(rho: DensityOp, eps: float, family: Sequence[Instrument] | None = None,
                        exhaustive: bool = False,
                        spec: smooth.SmoothingSpec | None = None) -> BoundReport:
    """``max_I I~_{0, 4 sqrt(eps)}(A'>BX)`` over the instruments in ``family``.

    The default family is the identity instrument. Unless ``exhaustive`` is
    set the report is an upper-bound surrogate: a finite family can only
    under-estimate the maximum over all instruments.
    """
    _check_eps(eps)
    rho = _bipartite(rho)
    if family is None:
        family = [Instrument.identity(rho.dims[0])]
    return _upper(rho, eps, 4 * math.sqrt(eps), family, "oneway", exhaustive, spec)


def two_way_upper_bound(rho: DensityOp, eps: float, family: Sequence[LocalMap] | None = None,
                        exhaustive: bool = False,
                        spec: smooth.SmoothingSpec | None = None) -> BoundReport:
    """``max_L I~_{0, 2 eps}(A'>B')`` over the local maps in ``family``.

    Instruments in the family are converted with
    :meth:`LocalMap.from_instrument`, so a two-way family can contain a
    one-way family verbatim.
    """
    _check_eps(eps)
    rho = _bipartite(rho)
    dA, dB = rho.bipartite_dims()
    if family is None:
        family = [LocalMap.identity(dA, dB)]
    family = [LocalMap.from_instrument(m, dB) if isinstance(m, Instrument) else m for m in family]
    return _upper(rho, eps, 2 * eps, family, "twoway", exhaustive, spec)


def one_way_family_as_two_way(family: Sequence[Instrument], dB: int) -> list[LocalMap]:
    return [LocalMap.from_instrument(ins, dB) for ins in family]


__all__ = [
    "BoundReport", "log_integer_floor", "hashing_lower_bound", "fidelity_lower_bound",
    "preprocessed_lower_bound", "one_way_upper_bound", "two_way_upper_bound",
    "one_way_family_as_two_way",
]
