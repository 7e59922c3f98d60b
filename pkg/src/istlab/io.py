"""ISTF field snapshots and CSV tables.

ISTF layout (little-endian): ``b"ISTF"``, u32 version (1), u32 dimension count,
u32 point count per axis, f64 half-width per axis, then interleaved f64
(real, imag) samples in row-major order.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grids import Field1D, Field2D, Grid1D, Grid2D

MAGIC = b"ISTF"
VERSION = 1


class FormatError(ValueError):
    pass


def dumps_field(f) -> bytes:
    if isinstance(f, Field1D):
        counts, widths = (f.grid.n,), (f.grid.half_width,)
    elif isinstance(f, Field2D):
        counts = (f.grid.n1, f.grid.n2)
        widths = (f.grid.half_width1, f.grid.half_width2)
    else:
        raise TypeError("expected Field1D or Field2D")
    d = len(counts)
    head = MAGIC + struct.pack(f"<II{d}I{d}d", VERSION, d, *counts, *widths)
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return head + body


def loads_field(buf: bytes):
    if buf[:4] != MAGIC:
        raise FormatError("missing ISTF magic")
    version, d = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if d not in (1, 2):
        raise FormatError(f"unsupported dimension count {d}")
    off = 12
    counts = struct.unpack_from(f"<{d}I", buf, off)
    off += 4 * d
    widths = struct.unpack_from(f"<{d}d", buf, off)
    off += 8 * d
    size = int(np.prod(counts))
    if len(buf) - off != 16 * size:
        raise FormatError(f"expected {16 * size} sample bytes, found {len(buf) - off}")
    vals = np.frombuffer(buf, dtype="<c16", count=size, offset=off).astype(complex)
    if d == 1:
        return Field1D(Grid1D(counts[0], widths[0]), vals)
    return Field2D(Grid2D(counts[0], counts[1], widths[0], widths[1]), vals.reshape(counts))


def write_field(path, f) -> None:
    Path(path).write_bytes(dumps_field(f))


def read_field(path):
    return loads_field(Path(path).read_bytes())


# ---------------------------------------------------------------- CSV

TRANSITION_COLUMNS = ("lambda", "re_a", "im_a", "re_b", "im_b", "re_r", "im_r")
Q_COLUMNS = ("x", "re_q", "im_q", "residual", "iterations")
NLS_COMPARE_COLUMNS = ("t", "x", "re_q_ist", "im_q_ist", "re_q_ss", "im_q_ss", "abs_err")
KLOG_COLUMNS = ("k1", "k2", "iterations", "residual", "path")
DSII_COMPARE_COLUMNS = ("t", "rel_L2_ist_vs_ss", "rel_L2_ist_vs_lin", "mass_drift")


def fmt(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError("row length does not match the header")
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return tuple(rows[0]), rows[1:]


def transition_rows(td, r):
    for lam, a, b, rr in zip(td.lam, td.a, td.b, r.r):
        yield (lam, a.real, a.imag, b.real, b.imag, rr.real, rr.imag)


def q_rows(x, q, residual, iterations):
    for xi, qi, res, it in zip(x, q, residual, iterations):
        yield (xi, qi.real, qi.imag, res, it)


def klog_rows(klog):
    for k, it, res, path in zip(klog.k, klog.iterations, klog.residual, klog.path):
        yield (k.real, k.imag, it, res, path)
