"""Frequency-domain subspace identification on arbitrary frequency grids.

Frequencies are mapped onto the unit circle by the bilinear (Tustin) warp
``z = exp(2j * arctan(w T / 2))``, under which a continuous rational model of
order ``n`` stays rational of order ``n`` in ``z``.  The discrete-domain
steps follow the usual recipe: block data matrices built from powers of
``z``, realification, QR projection of the input term, SVD for the extended
observability range, shift invariance for ``A`` and ``C``.  ``A`` and ``C``
are then mapped back to continuous time and ``B`` and ``D`` come from a
linear least-squares fit of the measured FRF.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, EmptyOrderList, InsufficientData, RankCollapse
from .frf import FrfDataset
from .model_core import StateSpaceModel, evaluate_frf

# Angle (rad) the top of the band is warped to; keeps z = -1 (s = inf) clear.
WARP_ANGLE_MAX = 0.8 * np.pi
# Default block rows per state per output; tall data matrices average out noise.
ROW_FACTOR = 4.0


@dataclass(frozen=True)
class IdentificationConfig:
    order: int
    block_rows: Optional[int] = None
    stabilize: bool = False
    warp_angle: float = WARP_ANGLE_MAX
    f_ref_hz: Optional[float] = None

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 2 or self.order % 2:
            raise ConfigError(f"order must be an even positive integer, got {self.order}")
        if self.block_rows is not None and self.block_rows < 2:
            raise ConfigError("block_rows must be >= 2")
        if not 0 < self.warp_angle < np.pi:
            raise ConfigError("warp_angle must lie in (0, pi)")

    def rows_for(self, n_f: int, n_y: int) -> int:
        """Block-row count; the default keeps the data matrix well overdetermined."""
        if self.block_rows is not None:
            return self.block_rows
        r = min(math.ceil(ROW_FACTOR * self.order / n_y), n_f // 3)
        return max(r, math.ceil(self.order / n_y) + 1, 2)


@dataclass
class IdentificationResult:
    model: StateSpaceModel
    singular_values: np.ndarray
    warp_t: float
    block_rows: int


@dataclass(frozen=True)
class SvcCurve:
    orders: list
    values: list
    selected_order: int
    penalty_params: dict = field(default_factory=dict)


def warp_step(f_max_hz: float, angle: float = WARP_ANGLE_MAX) -> float:
    """Bilinear step ``T`` that maps ``f_max_hz`` onto ``angle``."""
    return 2.0 * math.tan(angle / 2.0) / (2 * np.pi * f_max_hz)


def _realify_cols(m: np.ndarray) -> np.ndarray:
    return np.hstack([m.real, m.imag])


def frf_regressor(a: np.ndarray, c: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """``C (i w_k I - A)^-1`` for every line, shape (N_f, n_y, n)."""
    n = a.shape[0]
    res = 1j * omega[:, None, None] * np.eye(n) - a
    # Solve the transposed system so only n_y right-hand sides are needed.
    rhs = np.broadcast_to(c.T.astype(complex), (omega.size, n, c.shape[0]))
    return np.swapaxes(np.linalg.solve(np.swapaxes(res, 1, 2), rhs), 1, 2)


def fit_bd(a: np.ndarray, c: np.ndarray, omega: np.ndarray, g: np.ndarray):
    """Least-squares ``B`` and ``D`` for fixed ``(A, C)``; real-valued result."""
    n_f, n_y, n_u = g.shape
    n = a.shape[0]
    phi = frf_regressor(a, c, omega)                       # (N_f, n_y, n)
    eye = np.broadcast_to(np.eye(n_y), (n_f, n_y, n_y))
    reg = np.concatenate([phi, eye], axis=2).reshape(n_f * n_y, n + n_y)
    reg = np.vstack([reg.real, reg.imag])
    rhs = g.reshape(n_f * n_y, n_u)
    rhs = np.vstack([rhs.real, rhs.imag])
    theta, *_ = np.linalg.lstsq(reg, rhs, rcond=None)
    return theta[:n], theta[n:]


def identify(frf: FrfDataset, cfg: IdentificationConfig) -> IdentificationResult:
    """Continuous state-space model of order ``cfg.order`` fitted to ``frf``.

    Returns the model together with the singular values of the projected
    data matrix (used for order selection).
    """
    n = cfg.order
    n_f, n_y, n_u = frf.g.shape
    r = cfg.rows_for(n_f, n_y)
    if n_f < r + n:
        raise InsufficientData(f"{n_f} lines < block_rows + order = {r + n}")
    if (r - 1) * n_y < n:
        raise InsufficientData(
            f"(block_rows - 1) * n_y = {(r - 1) * n_y} must be at least the order {n}")
    if n_f == 0 or np.any(frf.frequencies <= 0):
        raise InsufficientData("frequencies must lie in (0, f_max]")

    omega = frf.omega
    t_warp = warp_step(cfg.f_ref_hz or frf.frequencies.max(), cfg.warp_angle)
    z = np.exp(2j * np.arctan(omega * t_warp / 2))
    powers = z[None, :] ** np.arange(r)[:, None]           # (r, N_f)

    # Y[p*n_y + i, k*n_u + j] = z_k^p G_k[i, j];  U likewise with the identity.
    y = np.einsum("pk,kij->pikj", powers, frf.g).reshape(r * n_y, n_f * n_u)
    u = np.einsum("pk,ij->pikj", powers, np.eye(n_u)).reshape(r * n_u, n_f * n_u)
    scale = 1.0 / np.sqrt(n_f)
    yr = _realify_cols(y) * scale
    ur = _realify_cols(u) * scale

    # Project out the input term: QR of [U; Y]^T, keep the Y part orthogonal to U.
    stacked = np.vstack([ur, yr]).T
    rr = np.linalg.qr(stacked, mode="r")
    k_u = r * n_u
    r22 = rr[k_u:, k_u:].T                                 # (r n_y, r n_y)
    if r22.shape[0] < n or r22.shape[1] < n:
        raise RankCollapse(f"projected data matrix too small for order {n}")
    uu, sv, _ = np.linalg.svd(r22)
    us = uu[:, :n]

    c_d = us[:n_y]
    a_d, *_ = np.linalg.lstsq(us[:-n_y], us[n_y:], rcond=None)
    if cfg.stabilize:
        a_d = _reflect_unstable(a_d)

    # Tustin inverse for (A, C); B and D are refit in continuous time.
    eye = np.eye(n)
    apl = a_d + eye
    try:
        apl_inv = np.linalg.inv(apl)
    except np.linalg.LinAlgError as exc:
        raise RankCollapse("identified discrete pole at z = -1") from exc
    a_c = (2.0 / t_warp) * apl_inv @ (a_d - eye)
    c_c = c_d @ apl_inv
    b_c, d_c = fit_bd(a_c, c_c, omega, frf.g)
    model = StateSpaceModel(a_c, b_c, c_c, d_c)
    return IdentificationResult(model, sv, t_warp, r)


def _reflect_unstable(a_d: np.ndarray) -> np.ndarray:
    lam, v = np.linalg.eig(a_d)
    out = np.where(np.abs(lam) > 1, 1 / np.conj(lam), lam)
    return np.real(v @ np.diag(out) @ np.linalg.inv(v))


def svc_select(singular_values: Sequence[float], n_e: int, n_u: int, n_y: int, n_d: int,
               orders: Sequence[int], k_c1: Optional[float] = None,
               k_c2: Optional[float] = None) -> SvcCurve:
    """Singular value criterion ``sv[n]^2 + k1 k2 log(N_d) d(n) / N_d``.

    ``sv[n]`` is the (n+1)-th singular value (zero past the end of the list)
    and ``d(n) = n (n_u + 2 n_y) + n_y n_u``.  Ties go to the smaller order.
    """
    orders = [int(o) for o in orders]
    if not orders:
        raise EmptyOrderList("no orders to evaluate")
    sv = np.asarray(singular_values, dtype=float)
    k1 = n_e if k_c1 is None else k_c1
    k2 = n_e if k_c2 is None else k_c2
    penalty = k1 * k2 * math.log(n_d)
    values = []
    for n in orders:
        s_next = sv[n] if n < sv.size else 0.0
        d_n = n * (n_u + 2 * n_y) + n_y * n_u
        values.append(float(s_next ** 2 + penalty * d_n / n_d))
    best = min(range(len(orders)), key=lambda i: (values[i], orders[i]))
    return SvcCurve(orders, values, orders[best],
                    {"k_c1": k1, "k_c2": k2, "N_d": int(n_d)})


def hankel_singular_values(model: StateSpaceModel) -> np.ndarray:
    """Hankel singular values of a continuous model, sorted descending.

    Eigenvalues in the closed right half-plane are mirrored to the left first
    so the Gramians exist.
    """
    lam, v = np.linalg.eig(model.a)
    bad = lam.real >= 0
    if bad.any():
        span = np.max(np.abs(lam)) if lam.size else 1.0
        lam = np.where(bad, -np.maximum(np.abs(lam.real), 1e-9 * span) + 1j * lam.imag, lam)
        a = np.real(v @ np.diag(lam) @ np.linalg.inv(v))
    else:
        a = model.a
    wc = scipy.linalg.solve_continuous_lyapunov(a, -model.b @ model.b.T)
    wo = scipy.linalg.solve_continuous_lyapunov(a.T, -model.c.T @ model.c)
    ev = np.abs(np.linalg.eigvals(wc @ wo))
    return np.sort(np.sqrt(ev))[::-1]


def svc_singular_values(model: StateSpaceModel, frf: FrfDataset) -> np.ndarray:
    """Hankel singular values of ``model`` in units of the fit noise.

    Each value is multiplied by ``sqrt(N_f n_y n_u)`` and divided by the RMS
    residual of the model on ``frf``, so its square reads as an energy
    signal-to-noise ratio and the order criterion no longer depends on the
    physical units of the data.
    """
    hsv = hankel_singular_values(model)
    resid = evaluate_frf(model, frf.frequencies) - frf.g
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    floor = np.finfo(float).eps * max(float(np.sqrt(np.mean(np.abs(frf.g) ** 2))), 1e-300)
    return hsv * np.sqrt(frf.g.size) / max(rms, floor)
