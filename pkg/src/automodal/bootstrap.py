"""Bootstrap resampling of FRF lines and the ensemble of bootstrap models."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .correlation import COALESCENT_TOL, fixed_modal_decompose
from .errors import AutomodalError, ConfigError, EnsembleCollapse, TooFewSamples
from .frf import FrfDataset
from .model_core import Mode, ObsVectorConfig
from .subspace_id import IdentificationConfig, identify

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BootstrapPlan:
    n_realizations: int
    seed: int = 0
    resample_unit: str = "frequency_line"

    def __post_init__(self):
        if int(self.n_realizations) != self.n_realizations or self.n_realizations < 2:
            raise ConfigError("n_realizations must be an integer >= 2")
        if self.resample_unit != "frequency_line":
            raise ConfigError(f"unsupported resample unit {self.resample_unit!r}")


@dataclass(frozen=True)
class ParameterStats:
    mean: float
    variance: float
    cov: float
    n_samples: int


@dataclass
class EnsembleResult:
    realizations: List[Tuple[int, List[Mode]]]
    failures: Dict[int, str] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.realizations)

    def __len__(self):
        return len(self.realizations)

    @property
    def modes(self) -> List[Mode]:
        return [m for _, ms in self.realizations for m in ms]


def worker_count() -> int:
    env = os.environ.get("AUTOMODAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer AUTOMODAL_THREADS=%r", env)
    return os.cpu_count() or 1


def resample_indices(n_f: int, plan: BootstrapPlan, b: int) -> np.ndarray:
    # Independent stream per realisation: results do not depend on execution order.
    rng = np.random.default_rng([int(plan.seed) & 0xFFFFFFFFFFFFFFFF, int(b)])
    return np.sort(rng.integers(0, n_f, size=n_f))


def resample(frf: FrfDataset, plan: BootstrapPlan, b: int) -> FrfDataset:
    """Draw ``N_f`` whole frequency lines with replacement, sorted by frequency."""
    if not 0 <= b < plan.n_realizations:
        raise ConfigError(f"realisation index {b} outside [0, {plan.n_realizations})")
    return frf.subset(resample_indices(frf.n_f, plan, b))


def _one(frf, order, plan, cfg, b, id_kwargs, coalescent_tol):
    data = resample(frf, plan, b)
    res = identify(data, IdentificationConfig(order, **id_kwargs))
    return fixed_modal_decompose(res.model, cfg, coalescent_tol, source=b)


def run_ensemble(frf: FrfDataset, order: int, plan: BootstrapPlan, cfg: ObsVectorConfig,
                 coalescent_tol: Optional[float] = COALESCENT_TOL,
                 id_kwargs: Optional[dict] = None,
                 threads: Optional[int] = None) -> EnsembleResult:
    """Identify one bootstrap model per realisation and collect its modes.

    Failed realisations are logged and skipped; more than half failing raises
    :class:`EnsembleCollapse`.
    """
    id_kwargs = dict(id_kwargs or {})
    id_kwargs.setdefault("f_ref_hz", float(frf.frequencies.max()))
    threads = threads or worker_count()

    def task(b):
        try:
            return b, _one(frf, order, plan, cfg, b, id_kwargs, coalescent_tol), None
        except (AutomodalError, np.linalg.LinAlgError) as exc:
            return b, None, f"{type(exc).__name__}: {exc}"

    idx = range(plan.n_realizations)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, idx))
    else:
        results = [task(b) for b in idx]
    out = EnsembleResult([])
    for b, modes, err in results:
        if err is not None:
            log.warning("bootstrap realisation %d failed: %s", b, err)
            out.failures[b] = err
        else:
            out.realizations.append((b, modes))
    if len(out.failures) * 2 > plan.n_realizations:
        raise EnsembleCollapse(
            f"{len(out.failures)} of {plan.n_realizations} realisations failed")
    return out


def param_stats(samples: Sequence[float]) -> ParameterStats:
    """Sample mean and (N - 1)-denominator variance; ``cov = std / |mean|``."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 2:
        raise TooFewSamples(f"need at least 2 samples, got {x.size}")
    mean = float(np.sum(x) / x.size)
    var = float(np.sum((x - mean) ** 2) / (x.size - 1))
    cov = float(np.sqrt(var) / abs(mean)) if mean != 0 else float("inf")
    return ParameterStats(mean, var, cov, int(x.size))
