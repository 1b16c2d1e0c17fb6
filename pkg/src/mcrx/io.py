"""Trace CSV, bit-file and run-manifest persistence.

Trace files are UTF-8, LF-terminated, with header ``time_s,current_uA`` (or
``time_s,normalized``) and one sample per row written at full double
precision, so that identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError
from .kinetics import SensingPoint
from .trace import Trace

TRACE_HEADER = ("time_s", "current_uA")
NORMALIZED_HEADER = ("time_s", "normalized")
SENSING_HEADER = ("concentration_nM", "delta_I_uA")


def _num(x) -> str:
    return repr(float(x))


def write_columns(path, header, columns):
    """Write equal-length columns as a CSV with the given header."""
    path = Path(path)
    cols = [np.asarray(c) for c in columns]
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_num(v) for v in row) + "\n")
    return path


def write_trace(path, trace: Trace):
    header = NORMALIZED_HEADER if trace.normalized else TRACE_HEADER
    return write_columns(path, header, [trace.times, trace.samples])


def read_table(path, expected_headers, with_lines=False):
    """Parse a numeric CSV; ``with_lines`` also returns each row's line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from None
    except UnicodeDecodeError:
        raise DataError(f"{path}: not UTF-8 text") from None
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: line 1: empty file, expected a header")
    header = tuple(h.strip() for h in next(csv.reader([lines[0]])))
    if header not in expected_headers:
        want = " or ".join(",".join(h) for h in expected_headers)
        raise DataError(f"{path}: line 1: header {','.join(header)!r}, expected {want}")
    rows, linenos = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = next(csv.reader([line]))
        if len(fields) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields, "
                            f"got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-numeric value in {line!r}") from None
        if not all(np.isfinite(vals)):
            raise DataError(f"{path}: line {lineno}: non-finite value")
        rows.append(vals)
        linenos.append(lineno)
    if not rows:
        raise DataError(f"{path}: no data rows after the header")
    if with_lines:
        return header, np.array(rows), linenos
    return header, np.array(rows)


def read_trace(path, baseline: float = 0.0) -> Trace:
    """Load a uniformly sampled trace; ``baseline`` is attached as metadata."""
    header, rows, linenos = read_table(path, (TRACE_HEADER, NORMALIZED_HEADER), with_lines=True)
    if len(rows) < 2:
        raise DataError(f"{path}: a trace needs at least two samples")
    t = rows[:, 0]
    dt = t[1] - t[0]
    if not dt > 0:
        raise DataError(f"{path}: line {linenos[1]}: time column must increase")
    expected = t[0] + dt * np.arange(len(t))
    off = np.abs(t - expected) > 1e-6 * dt + 1e-9 * np.abs(t).max()
    if off.any():
        bad = int(np.argmax(off))
        raise DataError(f"{path}: line {linenos[bad]}: samples are not uniformly spaced "
                        f"(expected t={expected[bad]:g} s for dt={dt:g} s)")
    # the mean spacing is less sensitive to rounding in the written times
    dt = (t[-1] - t[0]) / (len(t) - 1)
    return Trace(float(t[0]), float(dt), rows[:, 1], baseline=baseline,
                 normalized=header == NORMALIZED_HEADER)


def read_sensing_points(path) -> list[SensingPoint]:
    _, rows = read_table(path, (SENSING_HEADER,))
    pts = []
    for i, (c, d) in enumerate(rows, start=2):
        if c <= 0:
            raise DataError(f"{path}: line {i}: concentration must be positive")
        pts.append(SensingPoint(c * 1e-9, d))
    return pts


def write_sensing_points(path, points):
    return write_columns(path, SENSING_HEADER, [
        [p.concentration * 1e9 for p in points], [p.delta_I_plateau for p in points]])


def write_bits(path, bits):
    path = Path(path)
    path.write_text("".join(str(int(b)) for b in bits) + "\n", encoding="utf-8", newline="\n")
    return path


def read_bits(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8").strip()
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from None
    if not text:
        raise DataError(f"{path}: line 1: empty bit file")
    if "\n" in text:
        raise DataError(f"{path}: line 2: bit files hold a single line")
    bad = [i for i, ch in enumerate(text) if ch not in "01"]
    if bad:
        raise DataError(f"{path}: line 1, column {bad[0] + 1}: {text[bad[0]]!r} is not 0 or 1")
    return np.array([int(ch) for ch in text], dtype=np.int8)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, config_hash: str, seeds: dict, artifacts):
    """JSON manifest: config hash, seeds, tool version and per-file SHA-256."""
    path = Path(path)
    doc = {
        "tool": "mcrx",
        "version": __version__,
        "config_sha256": config_hash,
        "seeds": seeds,
        "artifacts": [{"file": Path(a).name, "sha256": sha256_file(a)}
                      for a in sorted(artifacts, key=lambda a: Path(a).name)],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8",
                    newline="\n")
    return path
