"""Result writers. Every float is written with 17 significant digits so a
double survives the round trip through text exactly."""

from __future__ import annotations

import csv
import io
import json
import math
import sys

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    # keep floats recognisable as floats after a round trip
    return text if any(ch in text for ch in ".en") else text + ".0"


def _emit(obj, out, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    if isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif obj is None:
        out.write("null")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(fmt_float(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{" + nl)
        for i, (k, v) in enumerate(obj.items()):
            out.write(pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
            out.write(("," if i < len(obj) - 1 else "") + nl)
        out.write(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.write("[]")
            return
        # short numeric rows stay on one line
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq)
        if flat or not indent:
            out.write("[")
            for i, v in enumerate(seq):
                _emit(v, out, 0, 0)
                if i < len(seq) - 1:
                    out.write(", ")
            out.write("]")
            return
        out.write("[" + nl)
        for i, v in enumerate(seq):
            out.write(pad)
            _emit(v, out, indent, level + 1)
            out.write(("," if i < len(seq) - 1 else "") + nl)
        out.write(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    buf = io.StringIO()
    _emit(obj, buf, indent, 0)
    return buf.getvalue()


def loads(text: str):
    return json.loads(text)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else _cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    return v


def write_text(text: str, path=None):
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")
