"""Bit-stable report documents.

Numbers are written with 17 significant digits, so that parsing an emitted
document and writing it again reproduces the same bytes.  Non-finite values
become explicit string markers.  Timing never enters the document body.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math

import numpy as np

from . import __version__

MARKERS = {"inf": "unbounded", "-inf": "-unbounded", "nan": "undefined"}


def clean(obj):
    """Plain JSON-ready structure: dataclasses, numpy scalars and arrays, markers."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return clean({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)
                      if f.repr})
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return MARKERS["nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _number(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(x, ".17g")


def dumps(obj, indent=2, _level=0):
    """JSON text with fixed key order, 17-digit floats and a trailing newline at top level."""
    obj = clean(obj) if _level == 0 else obj
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            out = "{}"
        else:
            items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
            out = "{\n" + ",\n".join(items) + "\n" + end + "}"
    elif isinstance(obj, list):
        if not obj:
            out = "[]"
        else:
            out = "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    elif obj is None:
        out = "null"
    elif isinstance(obj, str):
        out = json.dumps(obj)
    else:
        out = _number(obj)
    return out + "\n" if _level == 0 else out


def config_hash(scenario):
    return hashlib.sha256(dumps(scenario).encode()).hexdigest()[:16]


def make_document(scenario, results, passed=True, **summary):
    """{scenario, results, summary, version}."""
    scen = clean(scenario)
    return {"scenario": scen,
            "results": clean(list(results)),
            "summary": clean({"pass": bool(passed), **summary}),
            "version": {"tool": "cartwright", "version": __version__,
                        "config_hash": config_hash(scen)}}


def write_json(path, doc):
    text = dumps(doc)
    with open(path, "w") as fh:
        fh.write(text)
    return text


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([_number(v) if isinstance(v, (float, np.floating)) and math.isfinite(v)
                         else clean(v) for v in row])


def write_plotdata(path, header, columns):
    """Whitespace separated (x, y...) columns under a '#' header line."""
    cols = [np.asarray(c, float) for c in columns]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in zip(*cols):
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")
