"""CSV emitters with a fixed column order and round-trippable floats."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

ENVELOPE_COLUMNS = ("sweep", "top", "bottom", "visibility", "shots")
FIT_COLUMNS = ("model", "parameter", "value", "error", "residual_norm")
TRACE_COLUMNS = ("cycle", "tau_sense", "sigma_now", "mean_delta")
TRANSFER_COLUMNS = ("omega", "delta_iz")
MAP_COLUMNS = ("offset", "t", "value")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_table(header, rows, path):
    """:func:`write_rows` with the path last, matching the other writers."""
    return write_rows(path, header, rows)


def read_rows(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_envelope(env, path):
    rows = zip(env.sweep, env.top, env.bottom, env.visibility, [int(env.shots)] * len(env.sweep))
    return write_rows(path, ENVELOPE_COLUMNS, rows)


def read_envelope(path):
    from .sequences import Envelope

    header, rows = read_rows(path)
    if tuple(header) != ENVELOPE_COLUMNS:
        raise ValueError(f"unexpected envelope header {header}")
    if not rows:
        return Envelope.empty()
    cols = list(zip(*rows))
    return Envelope(*(np.array(c, float) for c in cols[:4]), int(cols[4][0]))


def write_fit(fit, path):
    return write_rows(path, FIT_COLUMNS, fit.rows())


def write_trace(trace, path):
    return write_rows(path, TRACE_COLUMNS, trace.rows())


def write_transfer(omega, delta_iz, path):
    return write_rows(path, TRANSFER_COLUMNS, zip(omega, delta_iz))


def write_map(offsets, t, values, path):
    values = np.asarray(values)
    rows = ((o, ti, values[i, j]) for i, o in enumerate(offsets) for j, ti in enumerate(t))
    return write_rows(path, MAP_COLUMNS, rows)
