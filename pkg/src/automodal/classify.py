"""Physical/noise classification of mode clusters.

Three features per cluster (log-weighted modal contribution, log inverse
coefficient of variation of the eigenfrequency, inverse mean damping) are
min-max normalised and split into two classes by fuzzy c-means.  The class
whose center lies nearer to ``(1, 1, 1)`` is the physical one and a cluster's
membership to it is its degree of physicalness (DoP).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .bootstrap import ParameterStats, param_stats
from .errors import AmbiguousCenters, ConfigError

COV_FLOOR = 1e-15
GAMMA2_CAP = math.log10(1.0 / COV_FLOOR)


class ConstantFeatureWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FeatureVector:
    gamma1: float
    gamma2: float
    gamma3: float
    normalized: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma1, self.gamma2, self.gamma3], dtype=float)


@dataclass
class ClusterClassification:
    cluster_ref: int
    features: FeatureVector
    raw_features: FeatureVector
    dop: float
    label: str
    stats: Dict[str, ParameterStats] = field(default_factory=dict)


@dataclass
class FcmResult:
    memberships: np.ndarray
    centers: np.ndarray
    j_history: List[float]
    n_iter: int


def _stats(values) -> ParameterStats:
    x = np.asarray(values, dtype=float)
    if x.size >= 2:
        return param_stats(x)
    mean = float(x[0]) if x.size else float("nan")
    return ParameterStats(mean, float("nan"), float("nan"), int(x.size))


def cluster_stats(members) -> Dict[str, ParameterStats]:
    """Bootstrap statistics of frequency (rad/s), damping and finite modal contribution."""
    mc = [m.mc for m in members if np.isfinite(m.mc)]
    return {
        "omega": _stats([m.omega for m in members]),
        "xi": _stats([m.xi for m in members]),
        "mc": _stats(mc) if mc else ParameterStats(float("nan"), float("nan"), float("nan"), 0),
    }


def features_from_stats(n_members: int, stats: Dict[str, ParameterStats]) -> FeatureVector:
    mc_mean = stats["mc"].mean
    g1 = n_members * math.log10(mc_mean) if np.isfinite(mc_mean) and mc_mean > 0 else float("nan")
    cov = stats["omega"].cov
    if n_members < 2 or not np.isfinite(cov):
        g2 = float("nan")
    else:
        g2 = math.log10(1.0 / max(cov, COV_FLOOR))
    xi_mean = stats["xi"].mean
    g3 = 1.0 / xi_mean if xi_mean > 0 else 0.0
    return FeatureVector(g1, g2, g3, False)


def extract_features(cluster) -> FeatureVector:
    """Raw (unnormalised) feature triple of a cluster.

    ``gamma1 = N_m log10(mean MC)``, ``gamma2 = log10(1 / CoV(omega))``,
    ``gamma3 = 1 / mean(xi)``.  Undefined values (a single member, no finite
    contribution) are NaN and map to 0 on normalisation; a nonpositive mean
    damping gives ``gamma3 = 0``.
    """
    members = cluster.members
    return features_from_stats(len(members), cluster_stats(members))


def normalize_features(raw: Sequence[FeatureVector]) -> List[FeatureVector]:
    """Min-max scale each feature to [0, 1]; constant features become 0.5."""
    if len(raw) < 2:
        raise ConfigError("normalisation needs at least two clusters")
    x = np.array([f.as_array() for f in raw])
    out = np.zeros_like(x)
    for col in range(3):
        v = x[:, col]
        fin = np.isfinite(v)
        if not fin.any():
            warnings.warn(f"feature {col + 1} undefined for every cluster", ConstantFeatureWarning)
            out[:, col] = 0.5
            continue
        lo = v[fin].min()
        span = (v[fin] - lo).max()
        if span == 0:
            warnings.warn(f"feature {col + 1} is constant across clusters", ConstantFeatureWarning)
            out[:, col] = np.where(fin, 0.5, 0.0)
        else:
            out[:, col] = np.where(fin, (np.where(fin, v, lo) - lo) / span, 0.0)
    return [FeatureVector(*row, normalized=True) for row in out]


def objective(points: np.ndarray, memberships: np.ndarray, centers: np.ndarray, m: float = 2.0) -> float:
    d2 = ((points[None, :, :] - centers[:, None, :]) ** 2).sum(axis=2)
    return float(np.sum(memberships ** m * d2))


def _update_memberships(points, centers, m):
    d = np.sqrt(((points[None, :, :] - centers[:, None, :]) ** 2).sum(axis=2))
    u = np.empty_like(d)
    zero = d == 0
    hit = zero.any(axis=0)
    if (~hit).any():
        dd = d[:, ~hit]
        ratio = (dd[:, None, :] / dd[None, :, :]) ** (2.0 / (m - 1.0))
        u[:, ~hit] = 1.0 / ratio.sum(axis=1)
    if hit.any():
        z = zero[:, hit].astype(float)
        u[:, hit] = z / z.sum(axis=0)
    return u


def _fcm_once(points, n_classes, m, rng, tol, max_iter):
    u = rng.uniform(size=(n_classes, points.shape[0]))
    u /= u.sum(axis=0)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        w = u ** m
        centers = (w @ points) / w.sum(axis=1)[:, None]
        u = _update_memberships(points, centers, m)
        history.append(objective(points, u, centers, m))
        if len(history) > 1 and history[-2] - history[-1] < tol:
            break
    return FcmResult(u, centers, history, it)


def fuzzy_cmeans(points, m: float = 2.0, n_classes: int = 2, seed: int = 0,
                 tol: float = 1e-6, max_iter: int = 200, restarts: int = 5) -> FcmResult:
    """Fuzzy c-means with seeded random initial memberships.

    Runs ``restarts`` independent starts and returns the one with the lowest
    final objective.  Memberships have shape ``(n_classes, n_points)``.
    """
    if len(points) and isinstance(points[0], FeatureVector):
        points = [p.as_array() for p in points]
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < n_classes:
        raise ConfigError(f"need at least {n_classes} points, got shape {x.shape}")
    if m <= 1:
        raise ConfigError("fuzziness m must exceed 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        res = _fcm_once(x, n_classes, m, rng, tol, max_iter)
        if best is None or res.j_history[-1] < best.j_history[-1]:
            best = res
    return best


def physical_class(centers: np.ndarray, tol: float = 1e-9) -> int:
    d = np.linalg.norm(np.asarray(centers) - 1.0, axis=1)
    order = np.argsort(d, kind="stable")
    if d.size > 1 and abs(d[order[1]] - d[order[0]]) <= tol:
        raise AmbiguousCenters("class centers are equidistant from (1, 1, 1)")
    return int(order[0])


def assign_dop(memberships: np.ndarray, centers: np.ndarray, clusters: Sequence,
               features: Optional[Sequence[FeatureVector]] = None,
               raw_features: Optional[Sequence[FeatureVector]] = None,
               stats: Optional[Sequence[dict]] = None) -> List[ClusterClassification]:
    """DoP = membership to the class nearest ``(1, 1, 1)``; physical iff DoP >= 0.5."""
    k = physical_class(centers)
    out = []
    for i, cl in enumerate(clusters):
        dop = float(memberships[k, i])
        ref = getattr(cl, "centroid_index", i)
        feat = features[i] if features is not None else FeatureVector(*[float("nan")] * 3, True)
        rawf = raw_features[i] if raw_features is not None else feat
        st = stats[i] if stats is not None else {}
        out.append(ClusterClassification(ref, feat, rawf, dop,
                                         "physical" if dop >= 0.5 else "noise", st))
    return out
