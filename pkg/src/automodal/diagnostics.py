"""Diagnostic exports for external plotting: CMIF curves and stabilization data."""
from __future__ import annotations

import csv
import logging
from typing import Iterable, List, Optional

import numpy as np

from .errors import AutomodalError, ConfigError
from .frf import FrfDataset
from .subspace_id import IdentificationConfig, identify

log = logging.getLogger(__name__)

STAB_HEADER = ["kind", "order", "f_hz", "xi", "dop"]


def cmif(frf: FrfDataset) -> np.ndarray:
    """Singular values of ``G(w_k)`` per line, descending; shape (N_f, min(n_y, n_u))."""
    return np.linalg.svd(frf.g, compute_uv=False)


def write_cmif(frf: FrfDataset, path) -> None:
    values = cmif(frf)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f_hz"] + [f"cmif_{i + 1}" for i in range(values.shape[1])])
        for f, row in zip(frf.frequencies, values):
            w.writerow([repr(float(f))] + [repr(float(v)) for v in row])


def stabilization_rows(frf: FrfDataset, order_range: Iterable[int], report=None,
                       block_rows: Optional[int] = None) -> List[list]:
    """Rows ``[kind, order, f_hz, xi, dop]`` of a stabilization diagram.

    ``kind`` is ``"pole"`` for every identified mode at every order, ``"gap"``
    for an order whose identification failed, and ``"dop"`` for the cluster
    lines of an optional :class:`~automodal.pipeline.ModalReport`.
    """
    rows = []
    f_ref = float(frf.frequencies.max()) if frf.n_f else None
    for order in order_range:
        order = int(order)
        if order < 2 or order % 2:
            raise ConfigError(f"orders must be even integers >= 2, got {order}")
        try:
            model = identify(frf, IdentificationConfig(order, block_rows=block_rows,
                                                       f_ref_hz=f_ref)).model
        except (AutomodalError, np.linalg.LinAlgError) as exc:
            log.info("order %d failed: %s", order, exc)
            rows.append(["gap", order, "", "", ""])
            continue
        lam = np.linalg.eigvals(model.a)
        lam = lam[lam.imag > 0]
        for lc in sorted(lam, key=lambda v: v.imag):
            rows.append(["pole", order, float(lc.imag / (2 * np.pi)), float(-lc.real / abs(lc)), ""])
    if report is not None:
        for cl in report.clusters:
            rows.append(["dop", "", float(cl.f_hz), "", float(cl.dop)])
    return rows


def export_stabilization(frf: FrfDataset, order_range: Iterable[int], path, report=None,
                         block_rows: Optional[int] = None) -> int:
    """Write :func:`stabilization_rows` as CSV; returns the number of data rows."""
    rows = stabilization_rows(frf, order_range, report, block_rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STAB_HEADER)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return len(rows)
