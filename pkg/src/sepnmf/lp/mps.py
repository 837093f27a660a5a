"""MPS export/import for cross-checking LPs with external solvers.

Layout: fixed columns (names padded to 8 characters, one coefficient per
line) with values written at 17 significant digits. Because values can be
wider than the classic 12-character field, readers should parse the file as
free MPS (whitespace separated), which every mainstream solver accepts.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import ParseError
from .model import EQ, LE, LinearProgram


def _fmt(v):
    return format(float(v), ".17g")


def _names(prefix, count):
    width = max(7, len(str(max(count - 1, 0))))
    return [f"{prefix}{i:0{width}d}" for i in range(count)]


def write_mps(lp: LinearProgram, path):
    cols = lp.var_names or _names("X", lp.n_vars)
    rows = lp.row_names or _names("R", lp.n_rows)
    A = sp.csc_matrix(lp.A)
    lines = [f"NAME          {lp.name}", "ROWS", " N  OBJ"]
    for name, sense in zip(rows, lp.senses):
        lines.append(f" {'L' if sense == LE else 'E'}  {name}")
    lines.append("COLUMNS")
    for j, cname in enumerate(cols):
        if lp.c[j] != 0:
            lines.append(f"    {cname:<8}  {'OBJ':<8}  {_fmt(lp.c[j])}")
        for q in range(A.indptr[j], A.indptr[j + 1]):
            lines.append(f"    {cname:<8}  {rows[A.indices[q]]:<8}  {_fmt(A.data[q])}")
    lines.append("RHS")
    for i, rname in enumerate(rows):
        if lp.b[i] != 0:
            lines.append(f"    {'RHS':<8}  {rname:<8}  {_fmt(lp.b[i])}")
    finite = np.flatnonzero(np.isfinite(lp.upper))
    if finite.size:
        lines.append("BOUNDS")
        for j in finite:
            lines.append(f" UP {'BND':<8}  {cols[j]:<8}  {_fmt(lp.upper[j])}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mps(path):
    section = None
    name = "LP"
    row_index, senses, obj_row = {}, [], None
    col_index, entries, cost = {}, [], {}
    rhs, upper = {}, {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line[0].isspace():
                head = line.split()
                section = head[0].upper()
                if section == "NAME":
                    name = head[1] if len(head) > 1 else name
                elif section == "ENDATA":
                    break
                elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                    raise ParseError(f"unsupported MPS section {section!r}", lineno)
                continue
            tok = line.split()
            try:
                if section == "ROWS":
                    kind, rname = tok[0].upper(), tok[1]
                    if kind == "N":
                        obj_row = rname
                    elif kind in ("L", "E"):
                        row_index[rname] = len(senses)
                        senses.append(LE if kind == "L" else EQ)
                    else:
                        raise ParseError(f"unsupported row type {kind!r}", lineno)
                elif section == "COLUMNS":
                    cname = tok[0]
                    j = col_index.setdefault(cname, len(col_index))
                    for rname, val in zip(tok[1::2], tok[2::2]):
                        if rname == obj_row:
                            cost[j] = float(val)
                        else:
                            entries.append((row_index[rname], j, float(val)))
                elif section == "RHS":
                    for rname, val in zip(tok[1::2], tok[2::2]):
                        rhs[row_index[rname]] = float(val)
                elif section == "BOUNDS":
                    if tok[0].upper() != "UP":
                        raise ParseError(f"unsupported bound type {tok[0]!r}", lineno)
                    upper[col_index[tok[2]]] = float(tok[3])
                else:
                    raise ParseError("data line outside of a section", lineno)
            except (KeyError, IndexError, ValueError) as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(f"malformed MPS line: {line.strip()!r}", lineno) from exc
    nv, m = len(col_index), len(senses)
    c = np.zeros(nv)
    for j, v in cost.items():
        c[j] = v
    if entries:
        r, cidx, v = zip(*entries)
    else:
        r, cidx, v = (), (), ()
    A = sp.csr_matrix((v, (r, cidx)), shape=(m, nv))
    b = np.zeros(m)
    for i, v in rhs.items():
        b[i] = v
    ub = np.full(nv, np.inf)
    for j, v in upper.items():
        ub[j] = v
    names = sorted(col_index, key=col_index.get)
    rnames = sorted(row_index, key=row_index.get)
    return LinearProgram(c, A, b, np.array(senses, dtype="<U2"), ub, names, rnames, name)
