"""JSON files for chains and traces.

Both formats carry a ``format`` name and an integer ``version``. Floats are
written with Python's shortest round-trip repr, so reading a file back gives
bit-identical coordinates.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chain import Chain, ConvexPolytope
from .geom import AxisLine
from .motion import FourBarMove, JointRotation, RotationMove, Trace

CHAIN_FORMAT = "chainfold-chain"
TRACE_FORMAT = "chainfold-trace"
VERSION = 1


class FormatError(ValueError):
    """Malformed chain or trace file; the message names the offending location."""


def _get(d, key, where):
    if not isinstance(d, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in d:
        raise FormatError(f"{where}: missing '{key}'")
    return d[key]


def _points(x, where, dim=3):
    try:
        a = np.array(x, dtype=float)
    except (TypeError, ValueError) as e:
        raise FormatError(f"{where}: not a numeric array ({e})") from None
    if a.ndim != 2 or a.shape[1] != dim:
        raise FormatError(f"{where}: expected a list of [x, y, z] triples")
    return a


def _vec(x, where):
    try:
        a = np.array(x, dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f"{where}: not a numeric vector") from None
    if a.shape != (3,):
        raise FormatError(f"{where}: expected [x, y, z]")
    return a


def _check_header(d, fmt, where):
    if _get(d, "format", where) != fmt:
        raise FormatError(f"{where}.format: expected '{fmt}'")
    if _get(d, "version", where) != VERSION:
        raise FormatError(f"{where}.version: unsupported version {d['version']!r}")


def chain_to_dict(c: Chain, polytope: ConvexPolytope | None = None) -> dict:
    d = {"format": CHAIN_FORMAT, "version": VERSION, "closed": bool(c.closed),
         "vertices": np.asarray(c.vertices).tolist()}
    if polytope is not None:
        d["polytope"] = {"vertices": polytope.vertices.tolist(), "faces": [list(f) for f in polytope.faces]}
    return d


def chain_from_dict(d, where="chain"):
    """Returns (chain, polytope or None)."""
    _check_header(d, CHAIN_FORMAT, where)
    raw = _get(d, "vertices", where)
    V = np.zeros((0, 3)) if raw == [] else _points(raw, f"{where}.vertices")
    closed = _get(d, "closed", where)
    if not isinstance(closed, bool):
        raise FormatError(f"{where}.closed: expected true or false")
    try:
        c = Chain(V, closed=closed)
    except ValueError as e:
        raise FormatError(f"{where}: {e}") from None
    poly = None
    if d.get("polytope") is not None:
        pw = f"{where}.polytope"
        pv = _points(_get(d["polytope"], "vertices", pw), f"{pw}.vertices")
        faces = _get(d["polytope"], "faces", pw)
        try:
            poly = ConvexPolytope(pv, faces)
        except (ValueError, TypeError) as e:
            raise FormatError(f"{pw}: {e}") from None
    return c, poly


def _move_to_dict(m) -> dict:
    if isinstance(m, RotationMove):
        return {"kind": "rotations", "tag": m.tag, "rotations": [
            {"joint": r.joint, "origin": r.axis.origin.tolist(), "direction": r.axis.direction.tolist(),
             "angle": r.angle, "carried": list(r.carried), "parent": r.parent} for r in m.rotations]}
    return {"kind": "fourbar", "tag": m.tag, "pivots": list(m.pivots), "bodies": [list(b) for b in m.bodies],
            "ground": m.ground, "driver": m.driver, "d0": m.d0, "d1": m.d1, "signs": list(m.signs),
            "frame": None if m.frame is None else list(m.frame)}


def _move_from_dict(d, where):
    kind = _get(d, "kind", where)
    tag = d.get("tag", "")
    try:
        if kind == "rotations":
            rots = []
            for k, r in enumerate(_get(d, "rotations", where)):
                w = f"{where}.rotations[{k}]"
                axis = AxisLine(_vec(_get(r, "origin", w), f"{w}.origin"), _vec(_get(r, "direction", w), f"{w}.direction"))
                rots.append(JointRotation(int(_get(r, "joint", w)), axis, float(_get(r, "angle", w)),
                                          tuple(_get(r, "carried", w)), r.get("parent")))
            return RotationMove(rots, tag)
        if kind == "fourbar":
            return FourBarMove(_get(d, "pivots", where), _get(d, "bodies", where), int(_get(d, "ground", where)),
                               int(_get(d, "driver", where)), float(_get(d, "d0", where)),
                               float(_get(d, "d1", where)), _get(d, "signs", where), d.get("frame"), tag)
    except FormatError:
        raise
    except (ValueError, TypeError) as e:
        raise FormatError(f"{where}: {e}") from None
    raise FormatError(f"{where}.kind: unknown move kind {kind!r}")


def trace_to_dict(tr: Trace, report=None) -> dict:
    d = {"format": TRACE_FORMAT, "version": VERSION, "initial": chain_to_dict(tr.initial),
         "samples_per_move": tr.samples_per_move, "max_step_angle": tr.max_step_angle,
         "moves": [_move_to_dict(m) for m in tr.moves],
         "final": None if tr.final is None else np.asarray(tr.final).tolist()}
    if report is not None:
        d["report"] = report.to_dict()
    return d


def trace_from_dict(d, where="trace") -> Trace:
    _check_header(d, TRACE_FORMAT, where)
    init, _ = chain_from_dict(_get(d, "initial", where), f"{where}.initial")
    moves = [_move_from_dict(m, f"{where}.moves[{k}]") for k, m in enumerate(_get(d, "moves", where))]
    fin = d.get("final")
    fin = None if fin is None else _points(fin, f"{where}.final")
    return Trace(init, moves, int(d.get("samples_per_move", 16)), float(d.get("max_step_angle", 0.01)), fin)


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FormatError(f"{path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None


def save_chain(path, c: Chain, polytope: ConvexPolytope | None = None, **extra) -> None:
    d = chain_to_dict(c, polytope)
    d.update(extra)
    Path(path).write_text(json.dumps(d, indent=1))


def load_chain(path):
    return chain_from_dict(_load_json(path), str(path))


def save_trace(path, tr: Trace, report=None) -> None:
    Path(path).write_text(json.dumps(trace_to_dict(tr, report), indent=1))


def load_trace(path) -> Trace:
    return trace_from_dict(_load_json(path), str(path))


def load_trace_report(path):
    """The stored report block of a trace file, or None."""
    return _load_json(path).get("report")
