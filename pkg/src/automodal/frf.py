"""FRF dataset container and file I/O.

The JSON container stores every complex entry as a ``[re, im]`` pair; Python's
float repr round-trips doubles exactly, so write/read is lossless.  A long-form
CSV (``freq, out_idx, in_idx, re, im``) is accepted on read.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import FrfFormatError

RESPONSE_TYPES = ("accelerance", "mobility", "receptance")


@dataclass(frozen=True, eq=False)
class FrfDataset:
    """Sampled frequency response function.

    Parameters
    ----------
    frequencies : ndarray, shape (N_f,)
        Frequency lines in Hz, strictly positive, non-decreasing.
    g : ndarray, shape (N_f, n_y, n_u)
        Complex FRF matrices.
    response_type : str
        One of ``accelerance``, ``mobility``, ``receptance``.  Metadata only.
    labels : dict, optional
        Channel names, ``{"outputs": [...], "inputs": [...]}``.
    """

    frequencies: np.ndarray
    g: np.ndarray
    response_type: str = "accelerance"
    labels: Optional[dict] = field(default=None)

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float).reshape(-1)
        g = np.asarray(self.g, dtype=complex)
        if g.ndim != 3 or g.shape[0] != f.size:
            raise FrfFormatError(
                f"FRF tensor shape {g.shape} inconsistent with {f.size} frequency lines")
        if g.shape[1] < 1 or g.shape[2] < 1:
            raise FrfFormatError("FRF needs at least one output and one input")
        if f.size and (not np.all(np.isfinite(f)) or np.any(f <= 0)):
            raise FrfFormatError("frequencies must be finite and strictly positive")
        if np.any(np.diff(f) < 0):
            raise FrfFormatError("frequencies must be sorted non-decreasing")
        if self.response_type not in RESPONSE_TYPES:
            raise FrfFormatError(f"unknown response_type {self.response_type!r}")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "g", g)

    @property
    def n_f(self) -> int:
        return self.frequencies.size

    @property
    def n_y(self) -> int:
        return self.g.shape[1]

    @property
    def n_u(self) -> int:
        return self.g.shape[2]

    @property
    def omega(self) -> np.ndarray:
        """Angular frequencies in rad/s."""
        return 2 * np.pi * self.frequencies

    def subset(self, index: Sequence[int]) -> "FrfDataset":
        index = np.asarray(index, dtype=int)
        return FrfDataset(self.frequencies[index], self.g[index],
                          self.response_type, self.labels)

    def equals(self, other: "FrfDataset") -> bool:
        return (self.response_type == other.response_type
                and self.labels == other.labels
                and np.array_equal(self.frequencies, other.frequencies)
                and np.array_equal(self.g, other.g))


def frf_to_dict(frf: FrfDataset) -> dict:
    g = frf.g
    data = {
        "n_outputs": frf.n_y,
        "n_inputs": frf.n_u,
        "response_type": frf.response_type,
        "frequencies_hz": [float(x) for x in frf.frequencies],
        "frf": [[[[float(v.real), float(v.imag)] for v in row] for row in gk] for gk in g],
    }
    if frf.labels is not None:
        data["labels"] = frf.labels
    return data


def frf_from_dict(data: dict) -> FrfDataset:
    try:
        n_y = int(data["n_outputs"])
        n_u = int(data["n_inputs"])
        freqs = data["frequencies_hz"]
        raw = data["frf"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FrfFormatError(f"missing or invalid field: {exc}") from exc
    if len(raw) != len(freqs):
        raise FrfFormatError(
            f"'frf' has {len(raw)} records but 'frequencies_hz' has {len(freqs)}")
    g = np.empty((len(freqs), n_y, n_u), dtype=complex)
    for k, gk in enumerate(raw):
        if len(gk) != n_y:
            raise FrfFormatError(f"frf record {k}: expected {n_y} output rows, got {len(gk)}")
        for i, row in enumerate(gk):
            if len(row) != n_u:
                raise FrfFormatError(
                    f"frf record {k}, output {i}: expected {n_u} input entries, got {len(row)}")
            for j, pair in enumerate(row):
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise FrfFormatError(
                        f"frf record {k}, output {i}, input {j}: expected [re, im] pair")
                g[k, i, j] = complex(float(pair[0]), float(pair[1]))
    return FrfDataset(np.asarray(freqs, dtype=float), g,
                      data.get("response_type", "accelerance"), data.get("labels"))


def _read_csv(text: str, response_type: str) -> FrfDataset:
    rows = []
    reader = csv.reader(io.StringIO(text))
    for lineno, rec in enumerate(reader, start=1):
        if not rec or rec[0].strip().startswith("#"):
            continue
        if lineno == 1 and not _is_number(rec[0]):
            continue  # header
        if len(rec) != 5:
            raise FrfFormatError(f"line {lineno}: expected 5 fields, got {len(rec)}")
        try:
            rows.append((float(rec[0]), int(rec[1]), int(rec[2]), float(rec[3]), float(rec[4])))
        except ValueError as exc:
            raise FrfFormatError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise FrfFormatError("CSV contains no data records")
    freqs = sorted({r[0] for r in rows})
    n_y = max(r[1] for r in rows) + 1
    n_u = max(r[2] for r in rows) + 1
    pos = {f: k for k, f in enumerate(freqs)}
    g = np.full((len(freqs), n_y, n_u), np.nan + 0j)
    for f, i, j, re, im in rows:
        g[pos[f], i, j] = complex(re, im)
    missing = np.argwhere(np.isnan(g.real))
    if missing.size:
        k, i, j = missing[0]
        raise FrfFormatError(f"CSV missing entry at freq={freqs[k]}, out={i}, in={j}")
    return FrfDataset(np.asarray(freqs), g, response_type)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_frf(path, response_type: str = "accelerance") -> FrfDataset:
    """Read a JSON container or a long-form CSV (chosen by extension)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return _read_csv(text, response_type)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FrfFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return frf_from_dict(data)


def write_frf(frf: FrfDataset, path) -> None:
    Path(path).write_text(json.dumps(frf_to_dict(frf)))
