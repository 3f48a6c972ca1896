"""JSON state, instrument and map files.

A state file holds ``dims``, ``labels`` and either ``matrix`` (row-major
nested lists of ``[re, im]`` pairs) or ``pure`` (a flat list of pairs).
Floats are written with Python's shortest round-trip representation, so
``load(dump(x))`` reproduces every entry bit for bit.

Instrument files::

    {"kind": "instrument", "name": "...",
     "branches": [{"label": "0", "kraus": [MATRIX, ...]}, ...]}

Local map files::

    {"kind": "local_map", "name": "...", "out_dims": [dA, dB, ...],
     "pairs": [{"a": MATRIX, "b": MATRIX}, ...]}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from edistill.errors import EdistillError, StateFileError
from edistill.states import DensityOp, Instrument, LocalMap, PureVector


def _pairs(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in M]
    return [_pairs(row) for row in M]


def _complex(obj, where: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StateFileError(f"{where}: entries must be numeric [re, im] pairs ({exc})") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise StateFileError(f"{where}: expected a {ndim}-d array of [re, im] pairs, got shape {arr.shape}")
    # assign parts directly; re + 1j * im would lose signed zeros
    out = np.empty(arr.shape[:-1], dtype=complex)
    out.real, out.imag = arr[..., 0], arr[..., 1]
    return out


def state_to_dict(state) -> dict:
    if isinstance(state, PureVector):
        return {"dims": list(state.dims), "labels": list(state.labels),
                "pure": _pairs(state.amplitudes)}
    if isinstance(state, DensityOp):
        return {"dims": list(state.dims), "labels": list(state.labels),
                "matrix": _pairs(state.matrix)}
    raise TypeError(f"cannot serialize {type(state).__name__}")


def state_from_dict(doc: dict, source: str = "<state>"):
    """Parse a state document; returns a :class:`DensityOp` or :class:`PureVector`."""
    if not isinstance(doc, dict):
        raise StateFileError(f"{source}: top level must be an object")
    dims = doc.get("dims")
    if dims is not None and (not isinstance(dims, list) or not all(isinstance(d, int) and d > 0 for d in dims)):
        raise StateFileError(f"{source}: field 'dims' must be a list of positive integers")
    labels = doc.get("labels") or ()
    try:
        if "pure" in doc:
            v = _complex(doc["pure"], f"{source}: field 'pure'", 1)
            return PureVector(v, tuple(dims or ()), tuple(labels))
        if "matrix" not in doc:
            raise StateFileError(f"{source}: needs a 'matrix' or 'pure' field")
        M = _complex(doc["matrix"], f"{source}: field 'matrix'", 2)
        return DensityOp(M, tuple(dims or ()), tuple(labels))
    except StateFileError:
        raise
    except EdistillError as exc:
        raise type(exc)(f"{source}: {exc}") from None


def _read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise StateFileError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def load_state(path):
    return state_from_dict(_read_json(path), str(path))


def load_density(path) -> DensityOp:
    """Load a state file as a density operator (pure vectors become projectors)."""
    s = load_state(path)
    return s.projector() if isinstance(s, PureVector) else s


def save_state(state, path) -> None:
    Path(path).write_text(dumps(state_to_dict(state)))


def instrument_to_dict(ins: Instrument) -> dict:
    return {"kind": "instrument", "name": ins.name,
            "branches": [{"label": lab, "kraus": [_pairs(K) for K in ks]} for lab, ks in ins.branches]}


def local_map_to_dict(lmap: LocalMap) -> dict:
    return {"kind": "local_map", "name": lmap.name, "out_dims": list(lmap.out_dims),
            "pairs": [{"a": _pairs(a), "b": _pairs(b)} for a, b in lmap.pairs]}


def member_from_dict(doc: dict, source: str = "<family member>"):
    if not isinstance(doc, dict):
        raise StateFileError(f"{source}: top level must be an object")
    kind = doc.get("kind", "instrument")
    name = str(doc.get("name", Path(source).stem))
    try:
        if kind == "instrument":
            branches = []
            for i, br in enumerate(doc.get("branches") or []):
                ks = tuple(_complex(K, f"{source}: branches[{i}].kraus", 2) for K in br.get("kraus", []))
                branches.append((str(br.get("label", i)), ks))
            if not branches:
                raise StateFileError(f"{source}: field 'branches' is missing or empty")
            return Instrument(tuple(branches), name=name)
        if kind == "local_map":
            pairs = []
            for i, pr in enumerate(doc.get("pairs") or []):
                pairs.append((_complex(pr.get("a"), f"{source}: pairs[{i}].a", 2),
                              _complex(pr.get("b"), f"{source}: pairs[{i}].b", 2)))
            if not pairs:
                raise StateFileError(f"{source}: field 'pairs' is missing or empty")
            if "out_dims" not in doc:
                raise StateFileError(f"{source}: field 'out_dims' is required")
            return LocalMap(tuple(pairs), tuple(doc["out_dims"]), name=name)
    except StateFileError:
        raise
    except EdistillError as exc:
        raise type(exc)(f"{source}: {exc}") from None
    raise StateFileError(f"{source}: unknown kind {kind!r}")


def save_member(member, path) -> None:
    doc = instrument_to_dict(member) if isinstance(member, Instrument) else local_map_to_dict(member)
    Path(path).write_text(dumps(doc))


def load_family(directory) -> list:
    """All ``*.json`` members of ``directory`` in file-name order."""
    d = Path(directory)
    if not d.is_dir():
        raise StateFileError(f"{d}: family directory not found")
    files = sorted(d.glob("*.json"))
    if not files:
        raise StateFileError(f"{d}: family directory has no .json files")
    return [member_from_dict(_read_json(f), str(f)) for f in files]
