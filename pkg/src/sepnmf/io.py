"""File formats: MatrixMarket coordinate files, dense CSV, and instance directories.

MatrixMarket output is ``%%MatrixMarket matrix coordinate real general``,
then a ``rows cols nnz`` line, then one ``i j value`` line per stored entry
with 1-based indices in column-major order and values printed with 17
significant digits, so a write/read cycle reproduces every float exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError, ParseError
from .matrix import SparseMatrix, as_sparse, normalize_rows
from .synth import SeparableInstance

MM_HEADER = "%%MatrixMarket matrix coordinate real general"
INSTANCE_FORMAT = 1
FORMATS = ("matrixmarket", "csv")


def _fmt(v):
    return format(float(v), ".17g")


def write_matrix_market(path, M, comment=None):
    csc = sp.csc_matrix(M.csc if isinstance(M, SparseMatrix) else M, dtype=np.float64)
    csc.sort_indices()
    f, n = csc.shape
    cols = np.repeat(np.arange(n), np.diff(csc.indptr))
    with open(path, "w") as fh:
        fh.write(MM_HEADER + "\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{f} {n} {csc.nnz}\n")
        for i, j, v in zip(csc.indices, cols, csc.data):
            fh.write(f"{i + 1} {j + 1} {_fmt(v)}\n")


def read_matrix_market(path):
    """Parse a coordinate ``real`` or ``integer`` general MatrixMarket file."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket":
        raise ParseError("missing %%MatrixMarket header", 1)
    obj, fmt, field_, sym = (h.lower() for h in head[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(f"only 'matrix coordinate' files are supported, got {obj} {fmt}", 1)
    if field_ not in ("real", "integer"):
        raise ParseError(f"unsupported field {field_!r}", 1)
    if sym != "general":
        raise ParseError(f"unsupported symmetry {sym!r}", 1)
    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size = text.split()
            break
    if size is None:
        raise ParseError("missing size line", lineno)
    try:
        f, n, nnz = (int(s) for s in size)
    except ValueError:
        raise ParseError(f"bad size line {' '.join(size)!r}", lineno) from None
    if len(size) != 3 or min(f, n, nnz) < 0:
        raise ParseError("size line must hold three nonnegative integers", lineno)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    count = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        tok = text.split()
        if len(tok) != 3:
            raise ParseError(f"expected 'row col value', got {text!r}", lineno)
        try:
            i, j, v = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError:
            raise ParseError(f"could not parse entry {text!r}", lineno) from None
        if not (1 <= i <= f and 1 <= j <= n):
            raise ParseError(f"index ({i}, {j}) outside a {f} x {n} matrix", lineno)
        if not np.isfinite(v):
            raise ParseError(f"non-finite value {tok[2]!r}", lineno)
        if v < 0:
            raise ParseError(f"negative entry {tok[2]} at ({i}, {j}); input must be nonnegative", lineno)
        if count == nnz:
            raise ParseError(f"more entries than the {nnz} declared", lineno)
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise ParseError(f"declared {nnz} entries but found {count}", len(lines))
    return SparseMatrix.from_coo(rows, cols, vals, (f, n))


def read_csv(path):
    """Dense CSV, one matrix row per line; a non-numeric first line is a header."""
    data = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                if lineno == 1:
                    continue
                raise ParseError(f"non-numeric value in {row!r}", lineno) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(f"expected {width} columns, got {len(vals)}", lineno)
            arr = np.array(vals)
            if not np.all(np.isfinite(arr)):
                raise ParseError("non-finite value", lineno)
            if np.any(arr < 0):
                raise ParseError("negative entry; input must be nonnegative", lineno)
            data.append(arr)
    if not data:
        raise ParseError("no numeric rows", 1)
    return SparseMatrix.from_dense(np.vstack(data))


def write_csv(path, M):
    A = M.to_dense() if isinstance(M, SparseMatrix) else np.asarray(M)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in A:
            w.writerow([_fmt(v) for v in row])


@dataclass
class IngestReport:
    path: str
    format: str
    shape: tuple
    nnz: int
    zero_rows: list = field(default_factory=list)
    normalized: bool = False


def detect_format(path):
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".mtx", ".mm"):
        return "matrixmarket"
    if ext in (".csv", ".txt"):
        return "csv"
    raise InvalidInputError(f"cannot infer the format of {path}; pass it explicitly")


def ingest(path, format=None, normalize=False):
    """Load a data matrix; returns ``(SparseMatrix, IngestReport)``."""
    fmt = format or detect_format(path)
    if fmt not in FORMATS:
        raise InvalidInputError(f"format must be one of {FORMATS}")
    X = read_matrix_market(path) if fmt == "matrixmarket" else read_csv(path)
    if normalize:
        X = normalize_rows(X)
    report = IngestReport(str(path), fmt, X.shape, X.nnz, X.zero_rows().tolist(), normalize)
    return X, report


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _finite_or_none(v):
    return float(v) if np.isfinite(v) else None


def write_instance(directory, inst: SeparableInstance):
    """Write ``X.mtx``, ``Y.mtx`` and ``meta.json`` into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    write_matrix_market(os.path.join(directory, "X.mtx"), inst.X)
    write_matrix_market(os.path.join(directory, "Y.mtx"), sp.csc_matrix(inst.Y))
    meta = {
        "format": INSTANCE_FORMAT,
        "params": inst.params,
        "seed": inst.params.get("seed"),
        "hott": inst.hott.tolist(),
        "topic_of": inst.topic_of.tolist(),
        "M": inst.M.tolist(),
        "epsilon": inst.epsilon,
        "alpha": inst.alpha,
        "d0": _finite_or_none(inst.d0),
        "noise_bound": inst.noise_bound,
    }
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=1)


def read_instance(directory):
    X = read_matrix_market(os.path.join(directory, "X.mtx"))
    Y = read_matrix_market(os.path.join(directory, "Y.mtx")).to_dense().copy()
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)
    if meta.get("format") != INSTANCE_FORMAT:
        raise InvalidInputError(f"unsupported instance format {meta.get('format')!r}")
    topic_of = np.array(meta["topic_of"], dtype=np.int64)
    r = int(meta["params"]["r"])
    first = [int(np.flatnonzero(topic_of == t)[0]) for t in range(r)]
    M = np.array(meta["M"], dtype=np.float64).reshape(-1, r)
    return SeparableInstance(
        X=X,
        Y=Y,
        topics=Y[first].copy(),
        topic_of=topic_of,
        M=M,
        epsilon=float(meta["epsilon"]),
        alpha=float(meta["alpha"]),
        d0=float("inf") if meta["d0"] is None else float(meta["d0"]),
        params=meta["params"],
    )


def write_dense(path, A):
    """Dense factor (F or W) as MatrixMarket; exact zeros are not stored."""
    write_matrix_market(path, sp.csc_matrix(np.asarray(A, dtype=np.float64)))


def load_matrix(path):
    return as_sparse(read_matrix_market(path))
