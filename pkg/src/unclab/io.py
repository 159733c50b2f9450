"""Function documents, and JSON/CSV emission with round-trip-safe numbers.

A function document is a JSON object with ``"kind"`` one of

``grid1d``   ``half_width``, ``n_points``, ``values``
``gridnd``   ``dim``, ``half_width``, ``n_points``, ``values`` (row-major)
``radial``   ``dim``, ``max_radius``, ``n_points``, ``values``
``hermite``  ``coefficients``
``expr``     ``source``, ``dim``, optional ``discretization`` (a
             descriptor object with the same fields minus ``values``)
"""

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from . import exprdsl
from . import funcrep as fr
from .errors import InvalidInputError

DEFAULT_L = 12.0
DEFAULT_N_1D = 4096
DEFAULT_RADIAL_N = 2048
DEFAULT_ND = {2: (8.0, 256), 3: (8.0, 128)}


def descriptor_from_dict(d):
    """Representation descriptor from its document form."""
    try:
        kind = d["kind"]
        if kind == "grid1d":
            return fr.Grid1DSpec(float(d["half_width"]), int(d["n_points"]))
        if kind == "gridnd":
            return fr.GridNDSpec(int(d["dim"]), float(d["half_width"]), int(d["n_points"]))
        if kind == "radial":
            return fr.RadialSpec(int(d["dim"]), float(d["max_radius"]), int(d["n_points"]))
        if kind == "hermite":
            return fr.HermiteSpec(int(d["n_modes"]))
    except KeyError as exc:
        raise InvalidInputError(f"{d.get('kind')} descriptor is missing field {exc}") from None
    raise InvalidInputError(f"unknown representation kind {d.get('kind')!r}")


def default_descriptor(e, half_width=None, n_points=None, n_modes=None):
    """Discretization for an expression when none is given.

    1-D: a grid (or a Hermite series when ``n_modes`` is set).  2-D/3-D: a
    radial grid if the expression only uses ``r``, otherwise a full grid.
    """
    if n_modes is not None:
        if e.dim != 1:
            raise InvalidInputError("Hermite series are one-dimensional")
        return fr.HermiteSpec(int(n_modes) + 1)
    if e.dim == 1:
        return fr.Grid1DSpec(half_width or DEFAULT_L, n_points or DEFAULT_N_1D)
    if e.variables() <= {"r"}:
        return fr.RadialSpec(e.dim, half_width or DEFAULT_L, n_points or DEFAULT_RADIAL_N)
    L, N = DEFAULT_ND[e.dim]
    return fr.GridNDSpec(e.dim, half_width or L, n_points or N)


def function_from_dict(d, **overrides):
    """Build a SampledFunction from a function document.

    ``overrides`` (``half_width``, ``n_points``, ``n_modes``) only apply to
    expression documents without an explicit discretization.
    """
    if not isinstance(d, dict) or "kind" not in d:
        raise InvalidInputError("a function document is an object with a 'kind' field")
    kind = d["kind"]
    if kind == "expr":
        if "source" not in d:
            raise InvalidInputError("expr document needs a 'source'")
        e = exprdsl.parse(d["source"], int(d.get("dim", 1)))
        if "discretization" in d:
            spec = descriptor_from_dict(d["discretization"])
        else:
            spec = default_descriptor(e, **overrides)
        return exprdsl.sample(e, spec)
    if kind == "hermite":
        if "coefficients" not in d:
            raise InvalidInputError("hermite document needs 'coefficients'")
        return fr.hermite(np.asarray(d["coefficients"], dtype=float))
    spec = descriptor_from_dict(d)
    if "values" not in d:
        raise InvalidInputError(f"{kind} document needs 'values'")
    return fr.SampledFunction(spec, np.asarray(d["values"], dtype=float))


def function_to_dict(u):
    """Document form of a real-valued SampledFunction."""
    if np.iscomplexobj(u.values):
        raise InvalidInputError("function documents hold real values")
    if u.kind == "hermite":
        return {"kind": "hermite", "coefficients": u.values.tolist()}
    d = u.spec.to_dict()
    d["values"] = np.ravel(u.values).tolist()
    return d


def load_function(path, **overrides):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from None
    return function_from_dict(doc, **overrides)


def dump_function(u, path):
    Path(path).write_text(dumps(function_to_dict(u)) + "\n")


# --------------------------------------------------------------------------
# numbers with 17 significant digits
# --------------------------------------------------------------------------

def format_number(v):
    """17 significant digits; non-finite values are spelled ``inf``/``nan``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return format(v, ".17g")


def plain(obj):
    """Convert numpy scalars/arrays and tuples to plain Python containers."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, float) and not math.isfinite(obj):
        return json.dumps(format_number(obj))
    if isinstance(obj, (bool, int, float)):
        return format_number(obj)
    return json.dumps(obj)


def dumps(obj, indent=2):
    """JSON text with every float written to 17 significant digits."""
    return _encode(plain(obj), indent, 0)


def csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) if isinstance(v, (int, float, np.number))
                         and not isinstance(v, (bool, np.bool_)) else _csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, dict):
        return json.dumps(plain(v), sort_keys=True)
    return v
