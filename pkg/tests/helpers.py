"""Shared generators for the test suite."""
import numpy as np

from automodal.frf import FrfDataset
from automodal.model_core import StateSpaceModel, evaluate_frf


def random_stable_system(rng, order, n_u, n_y, f_max=200.0, xi_range=(0.005, 0.05),
                         dense=True):
    """Real stable model with well separated modes inside (0.05, 0.95) * f_max.

    With ``dense`` the modal blocks are hidden behind a random similarity
    transform.  Returns the model and its continuous eigenvalues (Im > 0).
    """
    m = order // 2
    f = np.sort(rng.uniform(0.05 * f_max, 0.95 * f_max, m))
    xi = rng.uniform(*xi_range, m)
    w = 2 * np.pi * f
    a = np.zeros((order, order))
    lam = []
    for k in range(m):
        s, wd = -xi[k] * w[k], w[k] * np.sqrt(1 - xi[k] ** 2)
        a[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[s, wd], [-wd, s]]
        lam.append(complex(s, wd))
    b = rng.standard_normal((order, n_u))
    c = rng.standard_normal((n_y, order))
    d = rng.standard_normal((n_y, n_u))
    if dense:
        t = rng.standard_normal((order, order))
        ti = np.linalg.inv(t)
        a, b, c = t @ a @ ti, t @ b, c @ ti
    return StateSpaceModel(a, b, c, d), np.array(lam)


def frf_of(model, n_lines=512, f_max=200.0):
    f = np.linspace(f_max / n_lines, f_max, n_lines)
    return FrfDataset(f, evaluate_frf(model, f))


def match_eigenvalues(truth, estimate):
    """Max relative error after optimal one-to-one matching."""
    from scipy.optimize import linear_sum_assignment

    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    cost = np.abs(truth[:, None] - estimate[None, :]) / np.abs(truth)[:, None]
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# Filled by the acceptance tests and printed in the terminal summary.
ACCEPTANCE_LINES = []


def mode_with_sigma(sigma, lam=complex(-1.0, 100.0), xi=None, mc=1.0, source=None, index=0):
    """Bare Mode carrying a given observability vector, for clustering tests."""
    from automodal.model_core import Mode

    sigma = np.asarray(sigma, dtype=complex)
    xi = -lam.real / abs(lam) if xi is None else xi
    one = np.ones(1, dtype=complex)
    return Mode(lam, np.exp(lam * 1e-3), one, one, sigma, lam.imag, xi, mc, source, index)
