"""Received-signal files.

Text: a header line ``N T`` then N rows of T whitespace-separated ``re,im``
pairs. Binary: two little-endian u32 (N, T) then N*T interleaved float64
``(re, im)`` pairs, row-major by antenna.
"""

from __future__ import annotations

from pathlib import Path
import struct

import numpy as np

FORMATS = ("text", "binary")


class SignalFormatError(ValueError):
    pass


def guess_format(path) -> str:
    return "binary" if Path(path).suffix.lower() in (".bin", ".dat", ".raw") else "text"


def write_signal(path, y: np.ndarray, fmt: str | None = None) -> None:
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2:
        raise ValueError("signal must be an N x T matrix")
    fmt = fmt or guess_format(path)
    n, t = y.shape
    if fmt == "binary":
        buf = np.empty((n, t, 2), dtype="<f8")
        buf[..., 0] = y.real
        buf[..., 1] = y.imag
        with open(path, "wb") as fh:
            fh.write(struct.pack("<II", n, t))
            fh.write(buf.tobytes())
    elif fmt == "text":
        lines = [f"{n} {t}"]
        for row in y:
            lines.append(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row))
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown signal format {fmt!r}")


def read_signal(path, fmt: str | None = None) -> np.ndarray:
    fmt = fmt or guess_format(path)
    if fmt == "binary":
        data = Path(path).read_bytes()
        if len(data) < 8:
            raise SignalFormatError("binary signal file shorter than its header")
        n, t = struct.unpack("<II", data[:8])
        body = np.frombuffer(data, dtype="<f8", offset=8)
        if body.size != 2 * n * t:
            raise SignalFormatError(f"expected {2 * n * t} float64 values, found {body.size}")
        body = body.reshape(n, t, 2)
        return body[..., 0] + 1j * body[..., 1]
    if fmt != "text":
        raise ValueError(f"unknown signal format {fmt!r}")
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise SignalFormatError("empty signal file")
    try:
        n, t = (int(v) for v in lines[0].split())
    except ValueError as exc:
        raise SignalFormatError(f"bad header line {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise SignalFormatError(f"header says {n} rows, found {len(lines) - 1}")
    y = np.empty((n, t), dtype=complex)
    for i, line in enumerate(lines[1:]):
        pairs = line.split()
        if len(pairs) != t:
            raise SignalFormatError(f"row {i + 1}: expected {t} entries, found {len(pairs)}")
        try:
            for j, pair in enumerate(pairs):
                re, im = pair.split(",")
                y[i, j] = complex(float(re), float(im))
        except ValueError as exc:
            raise SignalFormatError(f"row {i + 1}: malformed entry") from exc
    return y
