"""State-space models and their modal representation.

A continuous model ``(A, B, C, D)`` is diagonalised as ``A = Phi Lambda Phi^-1``;
each eigenvalue with positive imaginary part becomes a :class:`Mode` carrying
the modally projected output column ``C phi_j``, input row ``(Phi^-1 B)_j``,
the discrete eigenvalue ``exp(lambda_c tau)`` and the balanced modal
observability vector used by every correlation metric downstream.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import (ConfigError, DeficientEigenbasis, DomainMismatch,
                     SingularResolvent, ZeroVector)

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Quadruple ``(A, B, C, D)``; ``tau`` is ``None`` for continuous time."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    tau: Optional[float] = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a))
        d = np.atleast_2d(np.asarray(self.d))
        n_y, n_u = d.shape
        n_x = a.shape[0] if a.size else 0
        a = a.reshape(n_x, n_x)
        b = np.asarray(self.b).reshape(n_x, n_u)
        c = np.asarray(self.c).reshape(n_y, n_x)
        if a.shape != (n_x, n_x):
            raise ConfigError(f"A must be square, got {a.shape}")
        if n_u < 1 or n_y < 1:
            raise ConfigError("model needs at least one input and one output")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("discrete model needs tau > 0")
        for name, val in (("a", a), ("b", b), ("c", c), ("d", d)):
            object.__setattr__(self, name, val)

    @property
    def n_x(self) -> int:
        return self.a.shape[0]

    @property
    def n_u(self) -> int:
        return self.d.shape[1]

    @property
    def n_y(self) -> int:
        return self.d.shape[0]

    @property
    def is_continuous(self) -> bool:
        return self.tau is None


@dataclass(frozen=True)
class ObsVectorConfig:
    """Shared settings for modal observability vectors.

    ``q`` block rows (powers ``0..q-1`` of the discrete eigenvalue) and the
    discretisation step ``tau`` in seconds.
    """

    q: int
    tau: float

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise ConfigError(f"q must be an integer >= 2, got {self.q}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ConfigError(f"tau must be positive, got {self.tau}")

    @classmethod
    def for_band(cls, q: int, f_max_hz: float) -> "ObsVectorConfig":
        """``tau = pi / omega_max`` so the band top maps to angle pi."""
        return cls(int(q), float(np.pi / (2 * np.pi * f_max_hz)))


@dataclass(frozen=True, eq=False)
class Mode:
    """One vibrational mode (the member of a conjugate pair with Im > 0).

    ``source`` is ``None`` for the exhaustive model and the bootstrap
    realisation index otherwise.  ``sigma`` is already balanced.
    """

    lambda_c: complex
    lambda_d: complex
    c_bar: np.ndarray
    b_bar: np.ndarray
    sigma: np.ndarray
    omega: float
    xi: float
    mc: float
    source: Optional[int] = None
    index: int = 0
    unstable: bool = False
    clamped: bool = False
    balanced: bool = True

    @property
    def f_hz(self) -> float:
        return self.omega / (2 * np.pi)


def balance_mode(lam: complex, b_bar, c_bar):
    """Scalar balancing of a single-mode subsystem.

    Returns ``(t, True)`` with ``t = sqrt(|b| / |c|)`` so that
    ``|b / t| == |c t|``.  ``lam`` does not enter the scalar balance.
    """
    nb = float(np.linalg.norm(b_bar))
    nc = float(np.linalg.norm(c_bar))
    if nb == 0.0 or nc == 0.0:
        raise ZeroVector("mode is uncontrollable or unobservable")
    return float(np.sqrt(nb / nc)), True


def modal_observability_vector(lambda_d: complex, c_bar, cfg: ObsVectorConfig) -> np.ndarray:
    """Stack ``c_bar * lambda_d**k`` for ``k = 0..q-1`` (unbalanced).

    Magnitudes above one are clamped to the unit circle with the phase kept,
    so the powers never overflow.
    """
    c_bar = np.asarray(c_bar, dtype=complex).reshape(-1)
    lam = complex(lambda_d)
    if abs(lam) > 1.0:
        lam = lam / abs(lam)
    powers = lam ** np.arange(cfg.q)
    return np.outer(powers, c_bar).reshape(-1)


def modal_contribution(lambda_c: complex, b_bar, c_bar) -> float:
    """Peak over real frequency of ``|c_bar b_bar| / |i w - lambda_c|``.

    The outer product is rank one, so its spectral norm is ``|c||b|`` and the
    peak sits at ``w = Im(lambda_c)``.  Non-decaying modes return ``inf``.
    """
    re = float(np.real(lambda_c))
    if re >= 0:
        return float("inf")
    return float(np.linalg.norm(c_bar) * np.linalg.norm(b_bar) / -re)


def _continuous_eigs(model: StateSpaceModel, lam: np.ndarray, cfg: ObsVectorConfig) -> np.ndarray:
    if model.is_continuous:
        return lam
    if not np.isclose(model.tau, cfg.tau, rtol=1e-12, atol=0):
        raise DomainMismatch(
            f"discrete model has tau={model.tau}, observability config expects {cfg.tau}")
    with np.errstate(divide="ignore"):
        return np.log(lam.astype(complex)) / model.tau


def eigenbasis(model: StateSpaceModel):
    """Eigenvalues and eigenvectors of ``A``, with a deficiency check."""
    lam, phi = np.linalg.eig(model.a)
    if model.n_x and np.linalg.cond(phi) > COND_LIMIT:
        raise DeficientEigenbasis(
            f"eigenvector matrix condition number exceeds {COND_LIMIT:g}")
    return lam, phi


def modes_from_eigenbasis(model: StateSpaceModel, lam, phi, cfg: ObsVectorConfig,
                          source: Optional[int] = None) -> List[Mode]:
    """Build modes for the eigenvalues with positive imaginary part.

    ``phi`` need not be the raw solver output: any basis of each eigenspace
    (for instance a QR-fixed one) is accepted.
    """
    lam = np.asarray(lam, dtype=complex)
    try:
        phi_inv = np.linalg.inv(phi)
    except np.linalg.LinAlgError as exc:
        raise DeficientEigenbasis(str(exc)) from exc
    lam_c = _continuous_eigs(model, lam, cfg)
    c_bar = model.c @ phi
    b_bar = phi_inv @ model.b
    modes = []
    for j in np.flatnonzero(lam_c.imag > 0):
        lc = complex(lam_c[j])
        ld = complex(np.exp(lc * cfg.tau))
        cj, bj = c_bar[:, j], b_bar[j, :]
        sig = modal_observability_vector(ld, cj, cfg)
        try:
            t, _ = balance_mode(lc, bj, cj)
            mc = modal_contribution(lc, bj, cj)
            balanced = True
        except ZeroVector:
            t, mc, balanced = 1.0, 0.0, False
        modes.append(Mode(
            lambda_c=lc, lambda_d=ld, c_bar=cj.copy(), b_bar=bj.copy(),
            sigma=t * sig, omega=lc.imag, xi=-lc.real / abs(lc), mc=mc,
            source=source, index=int(j), unstable=lc.real >= 0,
            clamped=abs(ld) > 1.0, balanced=balanced))
    modes.sort(key=lambda m: (m.omega, m.index))
    return modes


def modal_decompose(model: StateSpaceModel, cfg: ObsVectorConfig,
                    source: Optional[int] = None) -> List[Mode]:
    """Modes of ``model`` with ``Im(lambda_c) > 0``, sorted by frequency."""
    lam, phi = eigenbasis(model)
    return modes_from_eigenbasis(model, lam, phi, cfg, source)


def evaluate_frf(model: StateSpaceModel, frequencies) -> np.ndarray:
    """``C (i w I - A)^-1 B + D`` at each frequency (Hz); shape (N_f, n_y, n_u)."""
    if not model.is_continuous:
        raise DomainMismatch("evaluate_frf expects a continuous model")
    f = np.asarray(frequencies, dtype=float).reshape(-1)
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise ValueError("frequencies must be finite and nonnegative")
    s = 2j * np.pi * f
    out = np.broadcast_to(model.d.astype(complex), (f.size, model.n_y, model.n_u)).copy()
    if model.n_x == 0 or f.size == 0:
        return out
    eye = np.eye(model.n_x)
    resolvent = s[:, None, None] * eye - model.a
    lam = np.linalg.eigvals(model.a)
    if np.any(np.isclose(s[:, None], lam[None, :], rtol=0, atol=0)):
        raise SingularResolvent("a frequency coincides with an eigenvalue")
    try:
        x = np.linalg.solve(resolvent, np.broadcast_to(model.b, (f.size,) + model.b.shape))
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(str(exc)) from exc
    return out + model.c @ x


def modal_frf(modes, d, frequencies) -> np.ndarray:
    """Partial-fraction sum over modes and their conjugates, plus ``D``."""
    f = np.asarray(frequencies, dtype=float).reshape(-1)
    s = 2j * np.pi * f
    d = np.atleast_2d(d)
    out = np.broadcast_to(d.astype(complex), (f.size,) + d.shape).copy()
    for m in modes:
        r = np.outer(m.c_bar, m.b_bar)
        lam = m.lambda_c
        out += r[None] / (s - lam)[:, None, None]
        out += r.conj()[None] / (s - np.conj(lam))[:, None, None]
    return out
