"""Correlation metrics and subspace tools for mode clustering.

``bmoc`` compares two modal observability vectors, ``hmoc`` compares a vector
with a subspace (squared cosine of the principal angle).  ``split_subspaces``
produces a dominant range and its orthogonal complement from an SVD, and
``fix_coalescent_eigenvectors`` pins down a unique orthonormal eigenbasis for
repeated eigenvalues by projecting the input matrix onto the eigenspace.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import (DependentColumns, LengthMismatch, MultiplicityExceedsInputs,
                     ProjectionRankLoss, ZeroVector)
from .model_core import (Mode, ObsVectorConfig, StateSpaceModel, eigenbasis,
                         modes_from_eigenbasis)

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
COALESCENT_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis (columns) of a subspace of ``C^ambient``."""

    basis: np.ndarray
    kind: str = "dominant"

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class CoalescentGroup:
    lam: complex
    member_indices: tuple
    multiplicity: int


def _check_pair(x, y):
    x = np.asarray(x).reshape(-1)
    y = np.asarray(y).reshape(-1)
    if x.size != y.size:
        raise LengthMismatch(f"vector lengths differ: {x.size} vs {y.size}")
    nx = np.vdot(x, x).real
    ny = np.vdot(y, y).real
    if nx == 0 or ny == 0:
        raise ZeroVector("correlation of a zero vector is undefined")
    return x, y, nx, ny


def bmoc(sigma_i, sigma_j) -> float:
    """``|s_i^H s_j|^2 / ((s_i^H s_i)(s_j^H s_j))``."""
    x, y, nx, ny = _check_pair(sigma_i, sigma_j)
    return float(min(abs(np.vdot(x, y)) ** 2 / (nx * ny), 1.0))


def mac(phi_i, phi_j) -> float:
    """Modal assurance criterion; same algebra as :func:`bmoc` on mode shapes."""
    return bmoc(phi_i, phi_j)


def hmoc(subspace: Subspace, sigma) -> float:
    """Squared cosine of the angle between ``sigma`` and the subspace."""
    s = np.asarray(sigma).reshape(-1)
    if s.size != subspace.ambient:
        raise LengthMismatch(f"vector length {s.size} != ambient dimension {subspace.ambient}")
    ns = np.vdot(s, s).real
    if ns == 0:
        raise ZeroVector("hmoc of a zero vector is undefined")
    if subspace.dim == 0:
        return 0.0
    p = subspace.basis.conj().T @ s
    return float(min(np.vdot(p, p).real / ns, 1.0))


def bmoc_matrix(sig_a: np.ndarray, sig_b: np.ndarray) -> np.ndarray:
    """All pairwise bMOC values between the columns of two matrices."""
    na = np.einsum("ij,ij->j", sig_a.conj(), sig_a).real
    nb = np.einsum("ij,ij->j", sig_b.conj(), sig_b).real
    if np.any(na == 0) or np.any(nb == 0):
        raise ZeroVector("zero modal observability vector")
    g = sig_a.conj().T @ sig_b
    return np.minimum(np.abs(g) ** 2 / np.outer(na, nb), 1.0)


def hmoc_columns(subspace: Subspace, sig: np.ndarray) -> np.ndarray:
    """hMOC of every column of ``sig`` against one subspace."""
    if sig.shape[0] != subspace.ambient:
        raise LengthMismatch(f"vector length {sig.shape[0]} != ambient {subspace.ambient}")
    ns = np.einsum("ij,ij->j", sig.conj(), sig).real
    if np.any(ns == 0):
        raise ZeroVector("zero modal observability vector")
    if subspace.dim == 0:
        return np.zeros(sig.shape[1])
    p = subspace.basis.conj().T @ sig
    return np.minimum(np.einsum("ij,ij->j", p.conj(), p).real / ns, 1.0)


def split_subspaces(obs_matrix, r: Union[str, int] = "auto", tol: float = RANK_TOL,
                    allow_wide: bool = False):
    """Dominant and complementary left singular subspaces of ``obs_matrix``.

    ``r="auto"`` keeps the singular values above ``tol * s_1``; an integer keeps
    exactly that many.  Returns ``(dominant, complement, singular_values)``.
    Matrices with more columns than rows are rejected unless ``allow_wide``.
    """
    m = np.asarray(obs_matrix)
    if m.ndim == 1:
        m = m[:, None]
    ambient, n_s = m.shape
    if n_s < 1 or (n_s > ambient and not allow_wide):
        raise LengthMismatch(f"need ambient >= n_s >= 1, got {m.shape}")
    u, s, _ = np.linalg.svd(m, full_matrices=True)
    if r == "auto":
        k = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    else:
        k = int(r)
        if not 0 <= k <= ambient:
            raise ValueError(f"r={k} outside [0, {ambient}]")
    return (Subspace(u[:, :k], "dominant"), Subspace(u[:, k:], "complement"), s)


def _phase_normalise(q: np.ndarray) -> np.ndarray:
    out = q.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] != 0:
            out[:, j] = col * (abs(col[k]) / col[k])
    return out


def fix_coalescent_eigenvectors(phi, b, rank_tol: float = 1e-10) -> np.ndarray:
    """Unique orthonormal basis for the eigenspace spanned by ``phi``.

    The input matrix is projected onto ``span(phi)`` and QR-factorised; the
    first ``n_c`` columns of ``Q`` are returned, each rotated so its
    largest-magnitude entry is real and positive.
    """
    phi = np.asarray(phi, dtype=complex)
    if phi.ndim == 1:
        phi = phi[:, None]
    b = np.asarray(b)
    n_c = phi.shape[1]
    if n_c > b.shape[1]:
        raise MultiplicityExceedsInputs(f"multiplicity {n_c} exceeds {b.shape[1]} inputs")
    sv = np.linalg.svd(phi, compute_uv=False)
    if sv[-1] <= rank_tol * sv[0]:
        raise DependentColumns("eigenvector columns are linearly dependent")
    coef, *_ = np.linalg.lstsq(phi, b.astype(complex), rcond=None)
    proj = phi @ coef
    psv = np.linalg.svd(proj, compute_uv=False)
    if psv[0] == 0 or psv[n_c - 1] <= rank_tol * max(psv[0], np.linalg.norm(b)):
        raise ProjectionRankLoss("inputs barely reach the invariant subspace")
    lead = np.linalg.svd(proj[:, :n_c], compute_uv=False)
    if lead[-1] > rank_tol * psv[0]:
        q, _ = np.linalg.qr(proj)
    else:
        q, _, _ = scipy.linalg.qr(proj, mode="economic", pivoting=True)
    return _phase_normalise(q[:, :n_c])


def detect_coalescent_groups(modes: Sequence[Mode], tol_rel: float = COALESCENT_TOL) -> List[CoalescentGroup]:
    """Transitive groups of modes with relatively close continuous eigenvalues."""
    lam = np.array([m.lambda_c for m in modes], dtype=complex)
    n = lam.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.argsort(lam.imag, kind="stable")
    for a in range(n):
        i = order[a]
        for bidx in range(a + 1, n):
            j = order[bidx]
            scale = max(abs(lam[i]), abs(lam[j]))
            if lam[j].imag - lam[i].imag > tol_rel * scale:
                break
            if abs(lam[i] - lam[j]) <= tol_rel * scale:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        if len(members) > 1:
            members = sorted(members)
            out.append(CoalescentGroup(complex(lam[members].mean()), tuple(members), len(members)))
    out.sort(key=lambda g: g.member_indices[0])
    return out


def modal_relevancy(dominant: Subspace, sigma) -> float:
    """``|sigma|^2 * bmoc(U1, sigma)``, i.e. the squared projection on ``U1``."""
    s = np.asarray(sigma).reshape(-1)
    if np.vdot(s, s).real == 0:
        raise ZeroVector("relevancy of a zero vector is undefined")
    u1 = dominant.basis[:, 0]
    return float(abs(np.vdot(u1, s)) ** 2 / np.vdot(u1, u1).real)


def fixed_modal_decompose(model: StateSpaceModel, cfg: ObsVectorConfig,
                          tol_rel: Optional[float] = COALESCENT_TOL,
                          source: Optional[int] = None) -> List[Mode]:
    """Modal decomposition with QR-fixed eigenvectors for coalescent groups.

    Groups larger than the number of inputs cannot be fixed and are left as
    returned by the eigen-solver.
    """
    lam, phi = eigenbasis(model)
    modes = modes_from_eigenbasis(model, lam, phi, cfg, source)
    if tol_rel is None or tol_rel <= 0:
        return modes
    groups = detect_coalescent_groups(modes, tol_rel)
    if not groups:
        return modes
    phi = phi.astype(complex).copy()
    for grp in groups:
        cols = [modes[i].index for i in grp.member_indices]
        if grp.multiplicity > model.n_u:
            log.debug("group at %s has multiplicity %d > n_u; left unfixed", grp.lam, grp.multiplicity)
            continue
        try:
            q = fix_coalescent_eigenvectors(phi[:, cols], model.b)
        except (DependentColumns, ProjectionRankLoss) as exc:
            log.debug("coalescent fix skipped at %s: %s", grp.lam, exc)
            continue
        phi[:, cols] = q
        used = set(cols)
        for col, qc in zip(cols, q.T):
            dist = np.abs(lam - np.conj(lam[col]))
            dist[list(used)] = np.inf
            partner = int(np.argmin(dist))
            used.add(partner)
            phi[:, partner] = qc.conj()
    return modes_from_eigenbasis(model, lam, phi, cfg, source)
