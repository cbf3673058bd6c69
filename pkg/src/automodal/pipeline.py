"""End-to-end automated modal parameter estimation.

Steps, each tagged in errors raised from it:

I.   identify the exhaustive model (EM), fix coalescent eigenvectors, take its
     modes as centroids and the complement of their observability span as the
     noise subspace;
II.  select the bootstrap order by the singular value criterion and identify
     one model per bootstrap realisation;
III. assign every bootstrap mode to a centroid or the trashbox, drop empties;
IV.  trim the clusters;
V.   classify the clusters by fuzzy c-means on three features.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy
from scipy.signal import find_peaks

from . import __version__
from .bootstrap import BootstrapPlan, ParameterStats, run_ensemble
from .classify import (cluster_stats, extract_features, fuzzy_cmeans, assign_dop,
                       normalize_features)
from .clustering import TRASHBOX, build_clusters, drop_empty, trim_all
from .correlation import (RANK_TOL, bmoc_matrix, fixed_modal_decompose, modal_relevancy,
                          split_subspaces)
from .errors import AutomodalError, ConfigError, StageError
from .frf import FrfDataset
from .model_core import Mode, ObsVectorConfig
from .subspace_id import IdentificationConfig, identify, svc_select, svc_singular_values

log = logging.getLogger(__name__)

REPORT_SCHEMA = 1
PIPELINE_COALESCENT_TOL = 3e-3


@dataclass(frozen=True)
class PipelineConfig:
    """Run settings; ``None`` entries are derived from the data.

    ``em_order`` defaults to the CMIF peak rule (:func:`default_em_order`),
    ``q`` to the EM order, ``f_max_hz`` to the top of the frequency grid,
    ``svc_orders`` to every even order up to the EM order and ``n_b`` (the
    cluster capacity) to the number of bootstrap realisations.
    """

    em_order: Optional[int] = None
    n_bootstrap: int = 50
    seed: int = 0
    q: Optional[int] = None
    f_max_hz: Optional[float] = None
    svc_orders: Optional[Sequence[int]] = None
    n_b: Optional[int] = None
    block_rows: Optional[int] = None
    coalescent_tol: float = PIPELINE_COALESCENT_TOL
    rank_tol: float = RANK_TOL
    fcm_m: float = 2.0
    fcm_tol: float = 1e-6
    fcm_max_iter: int = 200
    fcm_restarts: int = 5
    threads: Optional[int] = None

    def __post_init__(self):
        if self.em_order is not None and (self.em_order < 2 or self.em_order % 2):
            raise ConfigError(f"em_order must be an even integer >= 2, got {self.em_order}")
        if self.n_bootstrap < 2:
            raise ConfigError("n_bootstrap must be >= 2")
        if self.n_b is not None and self.n_b < 1:
            raise ConfigError("n_b must be positive")
        if self.svc_orders is not None:
            orders = [int(o) for o in self.svc_orders]
            if any(o < 2 or o % 2 for o in orders):
                raise ConfigError("svc_orders must be even integers >= 2")
            object.__setattr__(self, "svc_orders", tuple(orders))
        if not self.coalescent_tol >= 0 or not 0 < self.rank_tol < 1:
            raise ConfigError("coalescent_tol must be >= 0 and rank_tol in (0, 1)")
        if self.fcm_m <= 1:
            raise ConfigError("fcm_m must exceed 1")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["svc_orders"] is not None:
            out["svc_orders"] = list(out["svc_orders"])
        return out


def identifiability_bound(frf: FrfDataset) -> int:
    """Largest even order the identification can support on ``frf``."""
    r_max = frf.n_f // 3
    bound = min((r_max - 1) * frf.n_y, frf.n_f - r_max, 2 * frf.n_f * frf.n_y - 1)
    return max(2, bound - bound % 2)


def default_em_order(frf: FrfDataset) -> int:
    """``2 * 4 * (local maxima of the first CMIF curve above its median)``, capped."""
    first = np.linalg.svd(frf.g, compute_uv=False)[:, 0]
    peaks, _ = find_peaks(first)
    n_peaks = int(np.sum(first[peaks] > np.median(first)))
    return min(max(2, 8 * n_peaks), identifiability_bound(frf))


def _stage(tag):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except (AutomodalError, np.linalg.LinAlgError) as exc:
                raise StageError(tag, exc) from exc
        return inner
    return wrap


def _stats_dict(st: ParameterStats) -> dict:
    return {"mean": st.mean, "variance": st.variance, "cov": st.cov, "n_samples": st.n_samples}


def _cplx(values) -> List[List[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex).reshape(-1)]


def mean_shape(members: Sequence[Mode], reference: np.ndarray) -> np.ndarray:
    """Average of unit-norm output vectors, each phase-aligned to ``reference``.

    The result has unit norm and its largest entry real and positive.
    """
    ref = np.asarray(reference, dtype=complex)
    acc = np.zeros_like(ref)
    for m in members:
        c = m.c_bar / np.linalg.norm(m.c_bar)
        inner = np.vdot(c, ref)
        acc += c * (inner / abs(inner) if inner != 0 else 1.0)
    norm = np.linalg.norm(acc)
    if norm == 0:
        return acc
    acc /= norm
    k = int(np.argmax(np.abs(acc)))
    return acc * (abs(acc[k]) / acc[k])


@dataclass
class ClusterReport:
    centroid_index: int
    f_hz: float
    xi: float
    n_members: int
    trimmed: int
    omega_stats: dict
    xi_stats: dict
    mc_stats: dict
    raw_features: List[float]
    features: List[float]
    dop: float
    label: str
    relevancy_min: float
    centroid_bmoc_p10: float
    shape: List[List[float]]
    eigenvalues: List[List[float]]

    @classmethod
    def from_dict(cls, data: dict) -> "ClusterReport":
        return cls(**data)


@dataclass
class ModalReport:
    """Serializable outcome of :func:`run_pipeline`."""

    em_order: int
    bm_order: int
    svc_curve: dict
    stage_counts: Dict[str, int]
    clusters: List[ClusterReport]
    trashbox: dict
    dropped_centroids: List[int]
    centroids: List[dict]
    config: dict
    metadata: dict = field(default_factory=dict)
    classification_error: Optional[str] = None
    schema: int = REPORT_SCHEMA

    @property
    def physical(self) -> List[ClusterReport]:
        return [c for c in self.clusters if c.label == "physical"]

    def to_dict(self, strip_timings: bool = False) -> dict:
        out = asdict(self)
        if strip_timings:
            out["metadata"] = {k: v for k, v in out["metadata"].items() if k != "timings"}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModalReport":
        data = dict(data)
        if data.get("schema") != REPORT_SCHEMA:
            raise ConfigError(f"unsupported report schema {data.get('schema')!r}")
        data["clusters"] = [ClusterReport.from_dict(c) for c in data["clusters"]]
        return cls(**data)

    def to_json(self, strip_timings: bool = False) -> str:
        return json.dumps(self.to_dict(strip_timings), indent=1, sort_keys=True)

    def equals(self, other: "ModalReport", strip_timings: bool = False) -> bool:
        """Deep comparison through the canonical JSON form (NaN-safe)."""
        return self.to_json(strip_timings) == other.to_json(strip_timings)


def write_report(report: ModalReport, path, strip_timings: bool = False) -> None:
    with open(path, "w") as fh:
        fh.write(report.to_json(strip_timings))
        fh.write("\n")


def read_report(path) -> ModalReport:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid report JSON ({exc})") from exc
    return ModalReport.from_dict(data)


@dataclass
class _Resolved:
    em_order: int
    obs: ObsVectorConfig
    plan: BootstrapPlan
    svc_orders: List[int]
    n_b: int
    id_kwargs: dict


def resolve_config(frf: FrfDataset, cfg: PipelineConfig) -> _Resolved:
    bound = identifiability_bound(frf)
    em_order = cfg.em_order if cfg.em_order is not None else default_em_order(frf)
    if em_order >= 2 * frf.n_f * frf.n_y or em_order > bound:
        raise ConfigError(f"em_order {em_order} exceeds the identifiability bound {bound}")
    f_max = cfg.f_max_hz if cfg.f_max_hz is not None else float(frf.frequencies.max())
    obs = ObsVectorConfig.for_band(cfg.q if cfg.q is not None else em_order, f_max)
    orders = list(cfg.svc_orders) if cfg.svc_orders is not None else list(range(2, em_order + 1, 2))
    orders = [o for o in orders if o <= bound]
    id_kwargs = {"f_ref_hz": float(frf.frequencies.max())}
    if cfg.block_rows is not None:
        id_kwargs["block_rows"] = cfg.block_rows
    return _Resolved(em_order, obs, BootstrapPlan(cfg.n_bootstrap, cfg.seed), orders,
                     cfg.n_b if cfg.n_b is not None else cfg.n_bootstrap, id_kwargs)


@_stage("I")
def _step_exhaustive(frf, cfg, rc):
    em = identify(frf, IdentificationConfig(rc.em_order, **rc.id_kwargs))
    centroids = fixed_modal_decompose(em.model, rc.obs, cfg.coalescent_tol or None)
    if not centroids:
        raise ConfigError("exhaustive model has no oscillatory modes")
    obs = np.column_stack([m.sigma for m in centroids])
    dominant, noise, _ = split_subspaces(obs, "auto", cfg.rank_tol)
    if dominant.dim != len(centroids):
        log.warning("EM observability rank %d differs from its %d modes", dominant.dim, len(centroids))
    return em, centroids, noise


@_stage("II")
def _step_bootstrap(frf, cfg, rc, em):
    sv = svc_singular_values(em.model, frf)
    n_d = 2 * frf.n_f * frf.n_y * frf.n_u
    curve = svc_select(sv, rc.em_order // 2, frf.n_u, frf.n_y, n_d, rc.svc_orders)
    ens = run_ensemble(frf, curve.selected_order, rc.plan, rc.obs, cfg.coalescent_tol or None,
                       rc.id_kwargs, cfg.threads)
    return curve, ens


@_stage("III")
def _step_assign(modes, centroids, noise):
    return drop_empty(build_clusters(modes, centroids, noise))


@_stage("IV")
def _step_trim(cs, n_b):
    return trim_all(cs, n_b)


@_stage("V")
def _step_classify(clusters, cfg):
    raw = [extract_features(c) for c in clusters]
    feats = normalize_features(raw)
    fcm = fuzzy_cmeans(feats, m=cfg.fcm_m, seed=cfg.seed, tol=cfg.fcm_tol,
                       max_iter=cfg.fcm_max_iter, restarts=cfg.fcm_restarts)
    return assign_dop(fcm.memberships, fcm.centers, clusters, feats, raw)


def _trashbox_summary(cs) -> dict:
    """Trashbox modes with their origin and relevancy to the related cluster.

    Trimmed modes relate to the cluster they were removed from; modes trashed
    on assignment relate to the surviving cluster whose dominant direction
    they correlate with best.
    """
    by_index = {cl.centroid_index: cl for cl in cs.clusters}
    surviving = [cl.centroid_index for cl in cs.clusters]
    directions = (np.column_stack([cl.dominant.basis[:, 0] for cl in cs.clusters])
                  if surviving else None)
    entries = []
    for m, (origin, stage) in zip(cs.trashbox, cs.trash_origin):
        related = origin if origin != TRASHBOX else None
        if related is None and surviving and m.balanced:
            related = surviving[int(np.argmax(bmoc_matrix(m.sigma[:, None], directions)[0]))]
        rel = None
        if related in by_index and m.balanced:
            rel = modal_relevancy(by_index[related].dominant, m.sigma)
        entries.append({"f_hz": m.f_hz, "xi": m.xi, "source": m.source, "index": m.index,
                        "stage": stage, "cluster": related, "relevancy": rel})
    entries.sort(key=lambda e: (e["source"] if e["source"] is not None else -1, e["index"]))
    return {"n_modes": len(entries),
            "by_stage": {str(k): sum(e["stage"] == k for e in entries) for k in (0, 1, 2)},
            "modes": entries}


@dataclass(eq=False)
class PipelineRun:
    """Report plus the intermediate objects it was built from."""

    report: ModalReport
    em: object
    centroids: List[Mode]
    ensemble: object
    assigned: object
    trimmed: object


def run_pipeline(frf: FrfDataset, cfg: Optional[PipelineConfig] = None) -> ModalReport:
    """Run steps I to V on ``frf`` and assemble a :class:`ModalReport`.

    Errors from steps I to IV propagate as :class:`StageError`.  When only
    the classification fails, the report is still returned with DoP values
    set to NaN and the error recorded in ``classification_error``.
    """
    return execute(frf, cfg).report


def execute(frf: FrfDataset, cfg: Optional[PipelineConfig] = None) -> PipelineRun:
    """:func:`run_pipeline` that also returns the intermediate state."""
    cfg = cfg or PipelineConfig()
    timings = {}
    t0 = time.perf_counter()
    rc = resolve_config(frf, cfg)

    em, centroids, noise = _step_exhaustive(frf, cfg, rc)
    timings["exhaustive"] = time.perf_counter() - t0

    t = time.perf_counter()
    curve, ens = _step_bootstrap(frf, cfg, rc, em)
    timings["bootstrap"] = time.perf_counter() - t

    t = time.perf_counter()
    bm_modes = ens.modes
    assigned = _step_assign(bm_modes, centroids, noise)
    n_assigned = sum(len(c) for c in assigned.clusters)
    trimmed = _step_trim(assigned, rc.n_b)
    timings["clustering"] = time.perf_counter() - t

    t = time.perf_counter()
    classification_error = None
    try:
        if len(trimmed.clusters) < 2:
            raise StageError("V", ConfigError(
                f"classification needs at least two clusters, got {len(trimmed.clusters)}"))
        labels = _step_classify(trimmed.clusters, cfg)
    except StageError as exc:
        log.warning("classification failed: %s", exc)
        classification_error = str(exc)
        labels = None
    timings["classification"] = time.perf_counter() - t

    reports = []
    for i, cl in enumerate(trimmed.clusters):
        st = cluster_stats(cl.members)
        cen = centroids[cl.centroid_index]
        rel = [modal_relevancy(cl.dominant, m.sigma) for m in cl.members]
        internal = bmoc_matrix(cl.sigma_matrix(), cen.sigma[:, None])[:, 0]
        if labels is not None:
            lab = labels[i]
            raw, feat, dop, label = (lab.raw_features.as_array(), lab.features.as_array(),
                                     lab.dop, lab.label)
        else:
            raw = extract_features(cl).as_array()
            feat, dop, label = np.full(3, np.nan), float("nan"), "unclassified"
        reports.append(ClusterReport(
            centroid_index=cl.centroid_index,
            f_hz=st["omega"].mean / (2 * np.pi),
            xi=st["xi"].mean,
            n_members=len(cl.members),
            trimmed=cl.trimmed_count,
            omega_stats=_stats_dict(st["omega"]),
            xi_stats=_stats_dict(st["xi"]),
            mc_stats=_stats_dict(st["mc"]),
            raw_features=[float(v) for v in raw],
            features=[float(v) for v in feat],
            dop=float(dop),
            label=label,
            relevancy_min=float(min(rel)),
            centroid_bmoc_p10=float(np.percentile(internal, 10)),
            shape=_cplx(mean_shape(cl.members, cen.c_bar)),
            eigenvalues=_cplx([m.lambda_c for m in cl.members]),
        ))

    counts = {
        "em_modes": len(centroids),
        "initial_clusters": len(centroids) + 1,
        "bm_models": len(ens.realizations),
        "bm_failures": len(ens.failures),
        "bm_modes": len(bm_modes),
        "assigned": n_assigned,
        "trashed_on_assign": len(assigned.trashbox),
        "dropped_empty": len(assigned.dropped),
        "trimmed_stage1": trimmed.removed_stage1,
        "trimmed_stage2": trimmed.removed_stage2,
        "kept": sum(len(c) for c in trimmed.clusters),
        "trashbox": len(trimmed.trashbox),
        "clusters": len(trimmed.clusters),
        "classified": len(trimmed.clusters) if labels is not None else 0,
        "physical": sum(r.label == "physical" for r in reports),
    }
    centroid_info = [{"index": i, "f_hz": m.f_hz, "xi": m.xi, "mc": m.mc}
                     for i, m in enumerate(centroids)]
    timings["total"] = time.perf_counter() - t0
    report = ModalReport(
        em_order=rc.em_order,
        bm_order=curve.selected_order,
        svc_curve={"orders": list(curve.orders), "values": list(curve.values),
                   "selected_order": curve.selected_order, **curve.penalty_params},
        stage_counts=counts,
        clusters=reports,
        trashbox=_trashbox_summary(trimmed),
        dropped_centroids=list(trimmed.dropped),
        centroids=centroid_info,
        config={**cfg.to_dict(), "resolved": {"em_order": rc.em_order, "q": rc.obs.q,
                                              "tau": rc.obs.tau, "n_b": rc.n_b,
                                              "svc_orders": rc.svc_orders}},
        metadata={"versions": {"automodal": __version__, "numpy": np.__version__,
                               "scipy": scipy.__version__},
                  "timings": timings,
                  "failures": {str(k): v for k, v in sorted(ens.failures.items())}},
        classification_error=classification_error,
    )
    return PipelineRun(report, em, centroids, ens, assigned, trimmed)
