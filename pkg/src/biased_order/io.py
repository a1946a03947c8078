"""JSON and CSV formats for every public type.

Floats go through ``repr`` (shortest round-trip form); infinities become
``null``. Every JSON document carries ``"schema_version": 1``.
"""

from __future__ import annotations

import io
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .coupling import DiscreteCoupling
from .decomposition import Decomposition, SimpleComponent
from .envelope import PiecewiseLinear
from .errors import InputError
from .measure import BiasParams, DiscreteMeasure, PotentialCurve
from .order import OrderVerdict
from .poisson import EmbeddingPlan, IntegrandSchedule, Trajectory

SCHEMA_VERSION = 1


def _num(v) -> Any:
    v = float(v)
    return v if math.isfinite(v) else None


def _nums(a) -> list:
    return [_num(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def dumps(doc: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **doc}, indent=2, allow_nan=False) + "\n"


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    return doc


def _field(doc: dict, key: str, what: str):
    if key not in doc:
        raise InputError(f"{what} JSON lacks the '{key}' field")
    return doc[key]


def _floats(v, what: str) -> np.ndarray:
    try:
        return np.asarray(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: expected numbers") from exc


# measures and curves

def measure_to_dict(nu: DiscreteMeasure) -> dict:
    return {"atoms": [{"x": _num(x), "m": _num(m)} for x, m in nu.atoms]}


def measure_from_dict(doc: dict) -> DiscreteMeasure:
    atoms = _field(doc, "atoms", "measure")
    if not isinstance(atoms, list):
        raise InputError("measure 'atoms' must be a list")
    try:
        pairs = [(a["x"], a["m"]) for a in atoms]
    except (KeyError, TypeError) as exc:
        raise InputError("each atom needs numeric 'x' and 'm'") from exc
    arr = _floats(pairs, "measure atoms").reshape(-1, 2)
    return DiscreteMeasure(arr[:, 0], arr[:, 1])


def curve_to_dict(p: PotentialCurve) -> dict:
    return {"kinks": [[_num(k), _num(v)] for k, v in p.kinks], "right_slope": _num(p.right_slope)}


def curve_from_dict(doc: dict) -> PotentialCurve:
    arr = _floats(_field(doc, "kinks", "curve"), "curve kinks").reshape(-1, 2)
    rs = _floats(_field(doc, "right_slope", "curve"), "curve right_slope")
    try:
        return PotentialCurve(arr[:, 0], arr[:, 1], float(rs))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def piecewise_to_dict(g: PiecewiseLinear) -> dict:
    return {"kinks": [[_num(x), _num(y)] for x, y in g.kinks], "ls": g.left_slope, "rs": g.right_slope}


def piecewise_from_dict(doc: dict) -> PiecewiseLinear:
    arr = _floats(_field(doc, "kinks", "piecewise-linear"), "kinks").reshape(-1, 2)
    try:
        return PiecewiseLinear(arr[:, 0], arr[:, 1], float(_field(doc, "ls", "piecewise-linear")),
                               float(_field(doc, "rs", "piecewise-linear")))
    except (TypeError, ValueError) as exc:
        raise InputError(f"piecewise-linear: {exc}") from exc


# verdicts, couplings, decompositions

def verdict_to_dict(v: OrderVerdict) -> dict:
    return v.to_dict()


def coupling_to_dict(pi: DiscreteCoupling) -> dict:
    return {"xs": _nums(pi.xs), "ys": _nums(pi.ys), "w": [_nums(r) for r in pi.w]}


def coupling_from_dict(doc: dict) -> DiscreteCoupling:
    xs = _floats(_field(doc, "xs", "coupling"), "coupling xs")
    ys = _floats(_field(doc, "ys", "coupling"), "coupling ys")
    w = _floats(_field(doc, "w", "coupling"), "coupling w")
    try:
        return DiscreteCoupling(xs, ys, w.reshape(xs.size, ys.size))
    except ValueError as exc:
        raise InputError(f"coupling: {exc}") from exc


def component_to_dict(c: SimpleComponent) -> dict:
    return {"w": _num(c.weight), "gamma": _num(c.gamma), "M": _num(c.M), "left": measure_to_dict(c.left)}


def decomposition_to_dict(d: Decomposition) -> dict:
    return {"x": _num(d.x), "beta": d.beta.beta, "components": [component_to_dict(c) for c in d.components]}


def decomposition_from_dict(doc: dict) -> Decomposition:
    comps = []
    for c in _field(doc, "components", "decomposition"):
        comps.append(SimpleComponent(float(c["w"]), measure_from_dict(c["left"]), float(c["M"]), float(c["gamma"])))
    return Decomposition(float(_field(doc, "x", "decomposition")), BiasParams(float(doc["beta"])), tuple(comps))


def schedule_to_dict(s: IntegrandSchedule) -> dict:
    return {"breaks": _nums(s.breaks), "coefs": _nums(s.coefs), "cutoff": _num(s.cutoff)}


def plan_to_dict(plan: EmbeddingPlan) -> dict:
    rows = []
    for r in plan.rows:
        d = decomposition_to_dict(r.decomposition)
        for c, s in zip(d["components"], r.schedules):
            c["schedule"] = schedule_to_dict(s)
        rows.append({"mass": _num(r.mass), **d})
    return {"beta": plan.beta.beta, "mu": measure_to_dict(plan.mu), "max_cutoff": _num(plan.max_cutoff),
            "rows": rows}


# CSV

def _fmt(v: float) -> str:
    return repr(float(v))


def trajectories_csv(paths: Iterable[Trajectory]) -> str:
    buf = io.StringIO()
    buf.write("path_id,t,x\n")
    for p in paths:
        for t, x in zip(p.times, p.values):
            buf.write(f"{p.path_id},{_fmt(t)},{_fmt(x)}\n")
    return buf.getvalue()


def terminal_csv(values: np.ndarray) -> str:
    lines = ["path_id,x_T"] + [f"{i},{_fmt(v)}" for i, v in enumerate(values)]
    return "\n".join(lines) + "\n"


def table_csv(header: Iterable[str], rows: Iterable[Iterable[float]]) -> str:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"
