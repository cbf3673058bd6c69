import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from automodal.classify import (GAMMA2_CAP, ConstantFeatureWarning, FeatureVector, assign_dop,
                                extract_features, fuzzy_cmeans, normalize_features, objective,
                                physical_class)
from automodal.classify import _update_memberships
from automodal.clustering import ModeCluster
from automodal.errors import AmbiguousCenters, ConfigError
from helpers import mode_with_sigma


def _cluster(omegas, xis, mcs):
    members = [mode_with_sigma(np.ones(2), lam=complex(-x * w, w), xi=x, mc=c)
               for w, x, c in zip(omegas, xis, mcs)]
    return ModeCluster(0, members)


# extract_features -----------------------------------------------------------

def test_gamma1_closed_form():
    f = extract_features(_cluster([100.0 + i for i in range(100)], [0.01] * 100, [10.0] * 100))
    assert f.gamma1 == pytest.approx(100.0)
    assert f.gamma3 == pytest.approx(100.0)
    assert not f.normalized


def test_gamma2_saturates_for_identical_frequencies():
    f = extract_features(_cluster([50.0] * 5, [0.02] * 5, [1.0] * 5))
    assert f.gamma2 == GAMMA2_CAP == pytest.approx(15.0)


def test_gamma2_value():
    w = [99.0, 100.0, 101.0]
    f = extract_features(_cluster(w, [0.02] * 3, [1.0] * 3))
    cov = np.std(w, ddof=1) / np.mean(w)
    assert f.gamma2 == pytest.approx(math.log10(1 / cov))


def test_nonpositive_mean_damping_and_single_member():
    f = extract_features(_cluster([10.0, 11.0], [-0.02, 0.01], [1.0, 1.0]))
    assert f.gamma3 == 0.0
    single = extract_features(_cluster([10.0], [0.02], [3.0]))
    assert math.isnan(single.gamma2)
    assert single.gamma1 == pytest.approx(math.log10(3.0))


def test_infinite_contributions_are_ignored():
    f = extract_features(_cluster([10.0, 10.5, 11.0], [0.01] * 3, [2.0, float("inf"), 2.0]))
    assert f.gamma1 == pytest.approx(3 * math.log10(2.0))
    g = extract_features(_cluster([10.0, 11.0], [0.01] * 2, [float("inf")] * 2))
    assert math.isnan(g.gamma1)


# normalize_features ---------------------------------------------------------

def test_normalize_example_column():
    raw = [FeatureVector(v, 2 * v, -v) for v in (1.0, 2.0, 3.0)]
    out = normalize_features(raw)
    assert [f.gamma1 for f in out] == [0.0, 0.5, 1.0]
    assert [f.gamma2 for f in out] == [0.0, 0.5, 1.0]
    assert [f.gamma3 for f in out] == [1.0, 0.5, 0.0]
    assert all(f.normalized for f in out)


def test_constant_column_warns_and_gives_half():
    raw = [FeatureVector(1.0, 7.0, v) for v in (1.0, 2.0)]
    with pytest.warns(ConstantFeatureWarning):
        out = normalize_features(raw)
    assert [f.gamma1 for f in out] == [0.5, 0.5]
    assert [f.gamma2 for f in out] == [0.5, 0.5]


def test_nan_maps_to_zero():
    raw = [FeatureVector(float("nan"), 1.0, 1.0), FeatureVector(2.0, 3.0, 1.5),
           FeatureVector(4.0, 2.0, 2.0)]
    out = normalize_features(raw)
    assert [f.gamma1 for f in out] == [0.0, 0.0, 1.0]


def test_normalize_needs_two():
    with pytest.raises(ConfigError):
        normalize_features([FeatureVector(1, 2, 3)])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3), st.integers(0, 2))
def test_affine_invariance(seed, scale, col):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-5, 5, (6, 3))
    y = x.copy()
    y[:, col] *= scale
    a = normalize_features([FeatureVector(*r) for r in x])
    b = normalize_features([FeatureVector(*r) for r in y])
    np.testing.assert_allclose([f.as_array() for f in a], [f.as_array() for f in b],
                               rtol=0, atol=1e-12)
    arr = np.array([f.as_array() for f in a])
    assert arr.min() >= 0 and arr.max() <= 1
    assert np.all(arr.min(axis=0) == 0) and np.allclose(arr.max(axis=0), 1)


# fuzzy_cmeans ---------------------------------------------------------------

def _two_groups(rng, n=20):
    a = np.array([0.9, 0.85, 0.95]) + 0.01 * rng.standard_normal((n, 3))
    b = np.array([0.1, 0.05, 0.15]) + 0.01 * rng.standard_normal((n, 3))
    return np.vstack([a, b]), a.mean(axis=0), b.mean(axis=0)


def test_separated_groups():
    rng = np.random.default_rng(60)
    pts, ma, mb = _two_groups(rng)
    res = fuzzy_cmeans(pts, seed=3)
    k = physical_class(res.centers)
    assert np.all(res.memberships[k, :20] > 0.99) and np.all(res.memberships[1 - k, 20:] > 0.99)
    assert np.abs(res.centers[k] - ma).max() < 1e-3
    assert np.abs(res.centers[1 - k] - mb).max() < 1e-3


def test_memberships_stochastic_and_history_monotone():
    rng = np.random.default_rng(61)
    pts = rng.uniform(0, 1, (30, 3))
    res = fuzzy_cmeans(pts, seed=1, tol=1e-12, max_iter=300)
    np.testing.assert_allclose(res.memberships.sum(axis=0), 1.0, atol=1e-12)
    h = np.array(res.j_history)
    assert np.all(np.diff(h) <= 1e-12)
    # Each sweep's memberships must be stochastic too.
    u = _update_memberships(pts, res.centers, 2.0)
    np.testing.assert_allclose(u.sum(axis=0), 1.0, atol=1e-12)


def test_objective_double_sum_oracle():
    rng = np.random.default_rng(62)
    pts = rng.uniform(0, 1, (12, 3))
    res = fuzzy_cmeans(pts, seed=2)
    j = 0.0
    for i in range(2):
        for k in range(12):
            j += res.memberships[i, k] ** 2 * sum((pts[k] - res.centers[i]) ** 2)
    assert objective(pts, res.memberships, res.centers) == pytest.approx(j, rel=1e-12)
    assert res.j_history[-1] == pytest.approx(j, rel=1e-12)


def test_converged_state_is_fixed_point():
    rng = np.random.default_rng(63)
    pts = rng.uniform(0, 1, (25, 3))
    tol = 1e-6
    res = fuzzy_cmeans(pts, seed=4, tol=tol)
    w = res.memberships ** 2
    centers = (w @ pts) / w.sum(axis=1)[:, None]
    u = _update_memberships(pts, centers, 2.0)
    assert abs(res.j_history[-1] - objective(pts, u, centers)) < tol


def test_point_on_center_gets_full_membership():
    pts = np.array([[0.0, 0, 0], [1.0, 1, 1]])
    u = _update_memberships(pts, pts.copy(), 2.0)
    np.testing.assert_array_equal(u, np.eye(2))


def test_fcm_deterministic_and_validation():
    rng = np.random.default_rng(64)
    pts = rng.uniform(0, 1, (10, 3))
    a, b = fuzzy_cmeans(pts, seed=9), fuzzy_cmeans(pts, seed=9)
    np.testing.assert_array_equal(a.memberships, b.memberships)
    with pytest.raises(ConfigError):
        fuzzy_cmeans(pts[:1])
    with pytest.raises(ConfigError):
        fuzzy_cmeans(pts, m=1.0)


# physical class and DoP -----------------------------------------------------

def test_physical_class_nearest_ones():
    assert physical_class(np.array([[0.9, 0.9, 0.9], [0.1, 0.1, 0.1]])) == 0
    assert physical_class(np.array([[0.2, 0.1, 0.0], [0.6, 0.7, 0.9]])) == 1


def test_ambiguous_centers():
    with pytest.raises(AmbiguousCenters):
        physical_class(np.array([[1.0, 0.5, 1.0], [0.5, 1.0, 1.0]]))


def test_assign_dop_labels():
    u = np.array([[0.7, 0.5, 0.2], [0.3, 0.5, 0.8]])
    centers = np.array([[0.9, 0.9, 0.9], [0.1, 0.1, 0.1]])
    out = assign_dop(u, centers, [ModeCluster(i, []) for i in (4, 7, 9)])
    assert [c.cluster_ref for c in out] == [4, 7, 9]
    assert [c.label for c in out] == ["physical", "physical", "noise"]
    assert [c.dop for c in out] == [0.7, 0.5, 0.2]


def test_label_invariance_under_feature_rescaling():
    rng = np.random.default_rng(65)
    raw = [FeatureVector(*r) for r in rng.uniform(0, 10, (15, 3))]
    scaled = [FeatureVector(f.gamma1 * 7.5, f.gamma2, f.gamma3 * 0.01) for f in raw]
    labels = []
    for feats in (raw, scaled):
        norm = normalize_features(feats)
        res = fuzzy_cmeans(norm, seed=0)
        labels.append([c.label for c in assign_dop(res.memberships, res.centers,
                                                    list(range(15)))])
    assert labels[0] == labels[1]


def test_no_warning_on_informative_features():
    raw = [FeatureVector(1.0, 2.0, 3.0), FeatureVector(2.0, 1.0, 0.0)]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        normalize_features(raw)
