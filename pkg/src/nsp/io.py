"""File formats: vectors (one real per line), dense CSV, sparse triplets,
problem JSON, PGM images (P2/P5), trace CSV, and the check report JSON.

Reals are written with 17 significant digits so write-then-read round-trips
bitwise. All writers emit identical bytes for identical inputs.
"""

import json
import os

import numpy as np

from . import linops
from .prox import Penalty
from .solver import Problem

FMT = "%.17g"


class FormatError(ValueError):
    """Malformed input file or document."""


def _fmt(x) -> str:
    return FMT % float(x)


def write_vector(path, v):
    v = np.asarray(v, dtype=float).ravel()
    with open(path, "w") as fh:
        for x in v:
            fh.write(_fmt(x) + "\n")


def read_vector(path):
    vals = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise FormatError(f"{path}:{ln}: not a real number: {line!r}")
    if not vals:
        raise FormatError(f"{path}: empty vector file")
    return np.asarray(vals)


def write_dense_csv(path, matrix):
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ValueError("dense CSV writer needs a 2d array")
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_dense_csv(path):
    rows = []
    width = None
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise FormatError(f"{path}:{ln}: expected {width} columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise FormatError(f"{path}:{ln}: non-numeric entry")
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    return np.asarray(rows)


def write_triplets(path, triplets):
    with open(path, "w") as fh:
        for i, j, v in triplets:
            fh.write(f"{int(i)} {int(j)} {_fmt(v)}\n")


def read_triplets(path):
    out = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path}:{ln}: expected 'i j value', got {line!r}")
            try:
                out.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise FormatError(f"{path}:{ln}: malformed triplet {line!r}")
    return out


# ---------------------------------------------------------------- problem JSON

def _op_from_doc(doc, base_dir):
    if not isinstance(doc, dict) or "type" not in doc:
        raise FormatError(f"operator document must be an object with a 'type': {doc!r}")
    t = doc["type"]
    try:
        if t == "identity":
            return linops.make_identity(int(doc["dim"]))
        if t == "dense":
            if "path" in doc:
                m = read_dense_csv(os.path.join(base_dir, doc["path"]))
            else:
                m = np.asarray(doc["entries"], dtype=float)
            return linops.DenseOp(m)
        if t == "sparse":
            rows, cols = int(doc["rows"]), int(doc["cols"])
            if "path" in doc:
                trip = read_triplets(os.path.join(base_dir, doc["path"]))
            else:
                trip = [(int(i), int(j), float(v)) for i, j, v in doc["triplets"]]
            return linops.make_sparse(rows, cols, trip)
        if t == "gradient-1d":
            return linops.make_gradient(int(doc["n"]))
        if t == "gradient-2d":
            return linops.make_gradient((int(doc["rows"]), int(doc["cols"])))
        if t == "group-selector":
            return linops.make_group_selector(doc["groups"], int(doc["in_dim"]))
        if t == "scaled":
            return linops.make_scaled(_op_from_doc(doc["inner"], base_dir), float(doc["factor"]))
    except KeyError as e:
        raise FormatError(f"operator of type {t!r} is missing field {e}")
    except (TypeError, ValueError) as e:
        raise FormatError(f"bad operator document of type {t!r}: {e}")
    raise FormatError(f"unknown operator type {t!r}")


def _op_to_doc(op):
    if isinstance(op, linops.IdentityOp):
        return {"type": "identity", "dim": op.in_dim}
    if isinstance(op, linops.DenseOp):
        return {"type": "dense", "entries": op.matrix.tolist()}
    if isinstance(op, linops.SparseOp):
        return {"type": "sparse", "rows": op.out_dim, "cols": op.in_dim,
                "triplets": [[i, j, v] for i, j, v in op.triplets()]}
    if isinstance(op, linops.Gradient1D):
        return {"type": "gradient-1d", "n": op.in_dim}
    if isinstance(op, linops.Gradient2D):
        return {"type": "gradient-2d", "rows": op.shape[0], "cols": op.shape[1]}
    if isinstance(op, linops.GroupSelector):
        return {"type": "group-selector", "in_dim": op.in_dim,
                "groups": [list(g) for g in op.groups]}
    if isinstance(op, linops.ScaledOp):
        return {"type": "scaled", "factor": op.c, "inner": _op_to_doc(op.inner)}
    raise ValueError(f"cannot serialize operator {op!r}")


def read_problem(path) -> Problem:
    base_dir = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: invalid JSON: {e}")
    for key in ("K", "A", "y", "penalty"):
        if key not in doc:
            raise FormatError(f"{path}: missing required field {key!r}")
    K = _op_from_doc(doc["K"], base_dir)
    A = _op_from_doc(doc["A"], base_dir)
    y_doc = doc["y"]
    if isinstance(y_doc, dict):
        if "path" not in y_doc:
            raise FormatError(f"{path}: y object must carry a 'path'")
        y = read_vector(os.path.join(base_dir, y_doc["path"]))
    else:
        y = np.asarray(y_doc, dtype=float)
    pen_doc = doc["penalty"]
    try:
        lam = float(pen_doc["lambda"])
        kind = pen_doc.get("norm_kind", "block-euclidean")
    except (TypeError, KeyError) as e:
        raise FormatError(f"{path}: bad penalty document: {e}")
    try:
        penalty = Penalty(lam, kind, A.layout)
        return Problem(K=K, A=A, y=y, penalty=penalty)
    except ValueError as e:
        raise FormatError(f"{path}: {e}")


def write_problem(path, problem: Problem):
    doc = {
        "K": _op_to_doc(problem.K),
        "A": _op_to_doc(problem.A),
        "y": [float(v) for v in problem.y],
        "penalty": {"lambda": problem.penalty.lam,
                    "norm_kind": problem.penalty.norm_kind},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ------------------------------------------------------------------------ PGM

def read_pgm(path):
    """Returns (image as float array, maxval, binary flag)."""
    with open(path, "rb") as fh:
        data = fh.read()

    def tokens():
        i = 0
        while i < len(data):
            c = data[i:i + 1]
            if c == b"#":
                while i < len(data) and data[i:i + 1] != b"\n":
                    i += 1
            elif c.isspace():
                i += 1
            else:
                j = i
                while j < len(data) and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                    j += 1
                yield i, data[i:j]
                i = j

    it = tokens()
    try:
        _, magic = next(it)
    except StopIteration:
        raise FormatError(f"{path}: empty PGM file")
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    try:
        _, w = next(it)
        _, h = next(it)
        pos, mv = next(it)
        width, height, maxval = int(w), int(h), int(mv)
    except (StopIteration, ValueError):
        raise FormatError(f"{path}: truncated or malformed PGM header")
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: invalid PGM dimensions or maxval")
    if magic == b"P2":
        vals = []
        for _, tok in it:
            try:
                vals.append(int(tok))
            except ValueError:
                raise FormatError(f"{path}: non-integer sample {tok!r}")
        if len(vals) != width * height:
            raise FormatError(f"{path}: expected {width * height} samples, got {len(vals)}")
        img = np.asarray(vals, dtype=float).reshape(height, width)
    else:
        start = pos + len(mv) + 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = width * height * dtype.itemsize
        raw = data[start:start + need]
        if len(raw) != need:
            raise FormatError(f"{path}: truncated PGM payload")
        img = np.frombuffer(raw, dtype=dtype).astype(float).reshape(height, width)
    if img.max(initial=0) > maxval:
        raise FormatError(f"{path}: sample exceeds maxval {maxval}")
    return img, maxval, magic == b"P5"


def write_pgm(path, img, maxval, binary=True):
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM writer needs a 2d image")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must lie in [1, 65535]")
    q = np.clip(np.rint(img), 0, maxval)
    height, width = img.shape
    header = f"P5\n{width} {height}\n{maxval}\n" if binary else f"P2\n{width} {height}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
            fh.write(q.astype(dtype).tobytes())
        else:
            for row in q.astype(int):
                fh.write((" ".join(str(v) for v in row) + "\n").encode("ascii"))


# ---------------------------------------------------------------------- traces

TRACE_HEADER = "n,objective,fp_residual,dx_norm,dw_norm"


def write_trace_csv(path, trace):
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for n, obj, fp, dx, dw in trace.rows():
            fh.write(f"{n},{_fmt(obj)},{_fmt(fp)},{_fmt(dx)},{_fmt(dw)}\n")


def read_trace_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise FormatError(f"{path}: unexpected trace header {header!r}")
        rows = []
        for ln, line in enumerate(fh, 2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise FormatError(f"{path}:{ln}: expected 5 columns")
            rows.append((int(parts[0]),) + tuple(float(p) for p in parts[1:]))
    return rows


BENCH_HEADER = "algorithm,iteration,objective,fp_residual,distance_to_reference,max_dev_vs_primary"


def write_bench_csv(path, rows):
    with open(path, "w") as fh:
        fh.write(BENCH_HEADER + "\n")
        for alg, n, obj, fp, dist, dev in rows:
            fh.write(f"{alg},{n},{_fmt(obj)},{_fmt(fp)},{_fmt(dist)},{_fmt(dev)}\n")


def write_report_json(path, report: dict):
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
