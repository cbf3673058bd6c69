"""Correlation-based clustering of bootstrap modes.

Each exhaustive-model mode is a centroid; the orthogonal complement of the
exhaustive modal observability span is one extra centroid, the trashbox.
A bootstrap mode joins the centroid it correlates with best (bMOC for modes,
hMOC for the noise subspace).  Clusters are then trimmed: members that align
better with the complement of the cluster's dominant direction than with the
direction itself are trashed, and overfull clusters keep their most relevant
members only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .correlation import (Subspace, bmoc_matrix, hmoc_columns, split_subspaces)
from .errors import LengthMismatch
from .model_core import Mode

log = logging.getLogger(__name__)

TRASHBOX = -1


@dataclass(eq=False)
class ModeCluster:
    centroid_index: int
    members: List[Mode]
    dominant: Optional[Subspace] = None
    trimmed_count: int = 0
    removed: List[Mode] = field(default_factory=list)
    removed_stage1: int = 0
    removed_stage2: int = 0
    removed_stages: List[int] = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def sigma_matrix(self) -> np.ndarray:
        return np.column_stack([m.sigma for m in self.members])


@dataclass(eq=False)
class ClusterSet:
    centroids: List[Mode]
    noise_subspace: Subspace
    clusters: List[ModeCluster]
    trashbox: List[Mode] = field(default_factory=list)
    dropped: List[int] = field(default_factory=list)
    removed_stage1: int = 0
    removed_stage2: int = 0
    # Parallel to ``trashbox``: (cluster removed from or TRASHBOX, stage 0/1/2).
    trash_origin: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def n_assigned(self) -> int:
        return sum(len(c) for c in self.clusters) + len(self.trashbox)


def correlation_rows(bm_modes: Sequence[Mode], centroids: Sequence[Mode],
                     noise_subspace: Subspace) -> np.ndarray:
    """Per mode: bMOC to every centroid followed by hMOC to the noise subspace."""
    if not bm_modes:
        return np.zeros((0, len(centroids) + 1))
    sig = np.column_stack([m.sigma for m in bm_modes])
    cen = np.column_stack([c.sigma for c in centroids])
    if sig.shape[0] != cen.shape[0]:
        raise LengthMismatch(
            f"observability vectors differ in length: {sig.shape[0]} vs {cen.shape[0]}")
    rows = np.empty((sig.shape[1], cen.shape[1] + 1))
    rows[:, :-1] = bmoc_matrix(sig, cen)
    rows[:, -1] = hmoc_columns(noise_subspace, sig)
    return rows


def assign(bm_modes: Sequence[Mode], centroids: Sequence[Mode],
           noise_subspace: Subspace) -> np.ndarray:
    """Centroid index per mode, or ``TRASHBOX`` (-1).

    Exact ties go to the lowest centroid index, and a centroid beats the
    trashbox.
    """
    rows = correlation_rows(bm_modes, centroids, noise_subspace)
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=int)
    best = np.argmax(rows[:, :-1], axis=1)
    best_val = rows[np.arange(rows.shape[0]), best]
    return np.where(best_val >= rows[:, -1], best, TRASHBOX)


def build_clusters(bm_modes: Sequence[Mode], centroids: Sequence[Mode],
                   noise_subspace: Subspace) -> ClusterSet:
    labels = assign(bm_modes, centroids, noise_subspace)
    clusters = [ModeCluster(i, []) for i in range(len(centroids))]
    trash = []
    for mode, lab in zip(bm_modes, labels):
        if lab == TRASHBOX:
            trash.append(mode)
        else:
            clusters[lab].members.append(mode)
    return ClusterSet(list(centroids), noise_subspace, clusters, trash,
                      trash_origin=[(TRASHBOX, 0)] * len(trash))


def drop_empty(cs: ClusterSet) -> ClusterSet:
    """Remove clusters without members; dropped centroid indices are recorded."""
    keep = [c for c in cs.clusters if c.members]
    dropped = cs.dropped + [c.centroid_index for c in cs.clusters if not c.members]
    return ClusterSet(cs.centroids, cs.noise_subspace, keep, list(cs.trashbox), sorted(dropped),
                      cs.removed_stage1, cs.removed_stage2, list(cs.trash_origin))


def trim(cluster: ModeCluster, n_b: int) -> ModeCluster:
    """Two-stage trimming of one cluster.

    Stage 1 keeps members whose bMOC with the dominant direction ``U1`` exceeds
    their hMOC with its complement.  Stage 2 keeps at most ``n_b`` members,
    ranked by modal relevancy ``|U1^H sigma|^2``.  Removed modes are listed in
    ``removed``.
    """
    if not cluster.members:
        return replace(cluster, members=[], removed=[])
    sig = cluster.sigma_matrix()
    dom, comp, _ = split_subspaces(sig, r=1, allow_wide=True)
    to_dom = hmoc_columns(dom, sig)
    to_comp = hmoc_columns(comp, sig)
    keep = np.flatnonzero(to_dom > to_comp)
    stage = np.where(to_dom > to_comp, 0, 1)
    if keep.size > n_b:
        rel = np.abs(dom.basis[:, 0].conj() @ sig[:, keep]) ** 2
        order = np.argsort(-rel, kind="stable")
        stage[keep[order[n_b:]]] = 2
        keep = np.sort(keep[order[:n_b]])
    members = [m for m, st in zip(cluster.members, stage) if st == 0]
    removed = [m for m, st in zip(cluster.members, stage) if st != 0]
    stages = [int(st) for st in stage if st != 0]
    return ModeCluster(cluster.centroid_index, members, dom,
                       cluster.trimmed_count + len(removed), removed,
                       stages.count(1), stages.count(2), stages)


def trim_all(cs: ClusterSet, n_b: int) -> ClusterSet:
    """Trim every cluster, move removed modes to the trashbox, drop emptied clusters."""
    trash = list(cs.trashbox)
    origin = list(cs.trash_origin)
    out = []
    dropped = list(cs.dropped)
    s1, s2 = cs.removed_stage1, cs.removed_stage2
    for c in cs.clusters:
        t = trim(c, n_b)
        trash.extend(t.removed)
        origin.extend((c.centroid_index, st) for st in t.removed_stages)
        s1 += t.removed_stage1
        s2 += t.removed_stage2
        if t.members:
            out.append(t)
        else:
            log.info("cluster %d emptied by trimming", c.centroid_index)
            dropped.append(c.centroid_index)
    return ClusterSet(cs.centroids, cs.noise_subspace, out, trash, sorted(dropped), s1, s2, origin)
