"""Synthetic modal test data.

Each requested mode becomes a real second-order block with a random real
output shape and input participation vector; a multiplicity-2 entry places two
such blocks with independent vectors on the same eigenvalue.  The FRF is
evaluated on a uniform grid and corrupted with complex white Gaussian noise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import ConfigError
from .frf import FrfDataset
from .model_core import StateSpaceModel, evaluate_frf


@dataclass(frozen=True)
class ModeSpec:
    f_hz: float
    xi: float
    multiplicity: int = 1


@dataclass(frozen=True, eq=False)
class TruthMode:
    f_hz: float
    xi: float
    lambda_c: complex
    shape: np.ndarray
    participation: np.ndarray
    group: int


@dataclass(eq=False)
class SyntheticTruth:
    modes: List[TruthMode]
    model: StateSpaceModel
    clean: np.ndarray

    @property
    def n_states(self) -> int:
        return 2 * len(self.modes)

    def distinct_frequencies(self):
        return sorted({m.f_hz for m in self.modes})


def _as_spec(entry) -> ModeSpec:
    if isinstance(entry, ModeSpec):
        return entry
    return ModeSpec(float(entry["f_hz"]), float(entry["xi"]), int(entry.get("multiplicity", 1)))


def uniform_grid(band, n_lines: int) -> np.ndarray:
    f_lo, f_hi = map(float, band)
    if f_lo <= 0:
        return np.linspace(f_hi / n_lines, f_hi, n_lines)
    return np.linspace(f_lo, f_hi, n_lines)


def build_modal_model(modes: Sequence[TruthMode], response_type: str = "accelerance") -> StateSpaceModel:
    n_y = modes[0].shape.size
    n_u = modes[0].participation.size
    n = 2 * len(modes)
    a = np.zeros((n, n))
    b = np.zeros((n, n_u))
    c = np.zeros((n_y, n))
    d = np.zeros((n_y, n_u))
    for r, m in enumerate(modes):
        wn = abs(m.lambda_c)
        sl = slice(2 * r, 2 * r + 2)
        a[sl, sl] = [[0.0, 1.0], [-wn ** 2, -2 * m.xi * wn]]
        b[2 * r + 1] = m.participation
        if response_type == "accelerance":
            c[:, sl] = np.outer(m.shape, [-wn ** 2, -2 * m.xi * wn])
            d += np.outer(m.shape, m.participation)
        elif response_type == "mobility":
            c[:, 2 * r + 1] = m.shape
        elif response_type == "receptance":
            c[:, 2 * r] = m.shape
        else:
            raise ConfigError(f"unknown response_type {response_type!r}")
    return StateSpaceModel(a, b, c, d)


def generate_synthetic(spec, n_u: int, n_y: int, band, n_lines: int,
                       noise_rms_ratio: float, seed: int,
                       response_type: str = "accelerance"):
    """Noisy FRF of a random modal model; returns ``(FrfDataset, SyntheticTruth)``.

    Shapes and participation vectors are drawn with entries of unit RMS.  The
    noise amplitude is ``noise_rms_ratio`` times the RMS of the clean FRF.
    """
    entries = [_as_spec(e) for e in spec]
    if not entries:
        raise ConfigError("at least one mode is required")
    f_lo, f_hi = map(float, band)
    if not 0 <= f_lo < f_hi:
        raise ConfigError(f"invalid band {band}")
    if n_lines < 2 or noise_rms_ratio < 0:
        raise ConfigError("n_lines >= 2 and noise_rms_ratio >= 0 required")
    rng = np.random.default_rng(seed)
    truth = []
    for gi, e in enumerate(entries):
        if e.multiplicity not in (1, 2) or e.multiplicity > n_u:
            raise ConfigError(f"multiplicity {e.multiplicity} invalid for n_u={n_u}")
        if not f_lo < e.f_hz < f_hi:
            raise ConfigError(f"mode at {e.f_hz} Hz outside band {band}")
        if not 0 < e.xi < 1:
            raise ConfigError(f"damping {e.xi} outside (0, 1)")
        wn = 2 * np.pi * e.f_hz / np.sqrt(1 - e.xi ** 2)
        lam = complex(-e.xi * wn, 2 * np.pi * e.f_hz)
        for _ in range(e.multiplicity):
            psi = rng.standard_normal(n_y)
            ell = rng.standard_normal(n_u)
            psi *= np.sqrt(n_y) / np.linalg.norm(psi)
            ell *= np.sqrt(n_u) / np.linalg.norm(ell)
            truth.append(TruthMode(e.f_hz, e.xi, lam, psi, ell, gi))
    model = build_modal_model(truth, response_type)
    freqs = uniform_grid(band, n_lines)
    clean = evaluate_frf(model, freqs)
    g = clean
    if noise_rms_ratio > 0:
        rms = np.sqrt(np.mean(np.abs(clean) ** 2))
        noise = (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
        g = clean + noise * (noise_rms_ratio * rms / np.sqrt(2))
    frf = FrfDataset(freqs, g, response_type)
    return frf, SyntheticTruth(truth, model, clean)


def case_one_spec(f_max: float = 200.0) -> List[ModeSpec]:
    """Twelve modes below ``f_max`` with two exact double pairs."""
    f = np.array([28.0, 42.0, 56.5, 72.0, 88.0, 104.0, 121.0, 139.5, 158.0, 178.0]) * f_max / 200
    # Half-power bands span at least ~3 lines of a 1024-line grid.
    xi = [0.012, 0.011, 0.010, 0.012, 0.010, 0.012, 0.009, 0.011, 0.010, 0.012]
    mult = [1, 1, 2, 1, 1, 1, 1, 2, 1, 1]
    return [ModeSpec(float(a), b, c) for a, b, c in zip(f, xi, mult)]
