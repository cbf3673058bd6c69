import math

import numpy as np
import pytest

import automodal.pipeline as pl
from automodal import PipelineConfig, generate_synthetic, read_report, run_pipeline, write_report
from automodal.errors import ConfigError, EnsembleCollapse, RankCollapse, StageError
from automodal.pipeline import (ModalReport, default_em_order, execute, identifiability_bound,
                                mean_shape)
from automodal.synthetic import ModeSpec
from helpers import mode_with_sigma


@pytest.fixture(scope="module")
def single():
    frf, truth = generate_synthetic([ModeSpec(50.0, 0.02)], 2, 3, (0, 100), 128, 0.0, seed=1)
    run = execute(frf, PipelineConfig(em_order=4, n_bootstrap=6, seed=0))
    return frf, truth, run


def test_single_mode_noise_free(single):
    _, truth, run = single
    phys = run.report.physical
    assert len(phys) == 1
    assert phys[0].f_hz == pytest.approx(truth.modes[0].f_hz, rel=1e-6)
    assert phys[0].xi == pytest.approx(0.02, rel=1e-6)
    assert run.report.classification_error is None


def test_stage_counts_reconcile(single):
    c = single[2].report.stage_counts
    assert c["initial_clusters"] == c["em_modes"] + 1
    assert c["bm_modes"] == c["assigned"] + c["trashed_on_assign"]
    assert c["assigned"] == c["kept"] + c["trimmed_stage1"] + c["trimmed_stage2"]
    assert c["trashbox"] == c["trashed_on_assign"] + c["trimmed_stage1"] + c["trimmed_stage2"]
    assert c["bm_models"] + c["bm_failures"] == 6
    assert c["classified"] == c["clusters"] == len(single[2].report.clusters)
    tb = single[2].report.trashbox
    assert tb["n_modes"] == c["trashbox"] == len(tb["modes"])


def test_report_round_trip(single, tmp_path):
    report = single[2].report
    path = tmp_path / "report.json"
    write_report(report, path)
    back = read_report(path)
    assert back.equals(report)
    assert back.to_dict() == ModalReport.from_dict(report.to_dict()).to_dict()
    assert isinstance(back.clusters[0], pl.ClusterReport)


def test_report_schema_check(single):
    data = single[2].report.to_dict()
    data["schema"] = 99
    with pytest.raises(ConfigError):
        ModalReport.from_dict(data)


def test_deterministic(single):
    frf = single[0]
    again = run_pipeline(frf, PipelineConfig(em_order=4, n_bootstrap=6, seed=0))
    assert again.to_json(strip_timings=True) == single[2].report.to_json(strip_timings=True)
    assert "timings" not in again.to_dict(strip_timings=True)["metadata"]


def test_single_cluster_gives_partial_report():
    frf, _ = generate_synthetic([ModeSpec(50.0, 0.02)], 2, 3, (0, 100), 128, 0.0, seed=1)
    report = run_pipeline(frf, PipelineConfig(em_order=6, n_bootstrap=6, seed=0))
    assert report.classification_error and "stage V" in report.classification_error
    assert len(report.clusters) == 1
    cl = report.clusters[0]
    assert cl.label == "unclassified" and math.isnan(cl.dop)
    assert cl.f_hz == pytest.approx(50.0, rel=1e-6)
    assert report.stage_counts["classified"] == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(em_order=5)
    with pytest.raises(ConfigError):
        PipelineConfig(n_bootstrap=1)
    with pytest.raises(ConfigError):
        PipelineConfig(svc_orders=[2, 3])
    with pytest.raises(ConfigError, match="unknown"):
        PipelineConfig.from_dict({"em_ordr": 10})
    cfg = PipelineConfig.from_dict({"em_order": 10, "svc_orders": [2, 4]})
    assert cfg.svc_orders == (2, 4)
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg


def test_em_order_above_bound(single):
    frf = single[0]
    bound = identifiability_bound(frf)
    with pytest.raises(ConfigError, match="identifiability"):
        run_pipeline(frf, PipelineConfig(em_order=bound + 2))
    assert 2 <= default_em_order(frf) <= bound


def test_stage_tags(single, monkeypatch):
    frf = single[0]

    def boom(*a, **k):
        raise RankCollapse("forced")

    monkeypatch.setattr(pl, "identify", boom)
    with pytest.raises(StageError) as info:
        run_pipeline(frf, PipelineConfig(em_order=4, n_bootstrap=4))
    assert info.value.stage == "I" and isinstance(info.value.cause, RankCollapse)
    assert info.value.exit_code == RankCollapse.exit_code
    monkeypatch.undo()

    def collapse(*a, **k):
        raise EnsembleCollapse("forced")

    monkeypatch.setattr(pl, "run_ensemble", collapse)
    with pytest.raises(StageError) as info:
        run_pipeline(frf, PipelineConfig(em_order=4, n_bootstrap=4))
    assert info.value.stage == "II"


def test_mean_shape_phase_alignment():
    ref = np.array([1.0, 2.0j, -1.0])
    members = []
    for phase in (0.3, 1.7, -2.2):
        m = mode_with_sigma(np.ones(2))
        members.append(m.__class__(**{**m.__dict__, "c_bar": 5 * ref * np.exp(1j * phase)}))
    shape = mean_shape(members, ref)
    assert np.linalg.norm(shape) == pytest.approx(1.0)
    k = int(np.argmax(np.abs(shape)))
    assert shape[k].imag == 0 and shape[k].real > 0
    assert abs(np.vdot(shape, ref)) / np.linalg.norm(ref) == pytest.approx(1.0)


def test_physical_and_noise_features_on_synthetic():
    spec = [ModeSpec(f, 0.015) for f in (30.0, 70.0, 120.0, 165.0)]
    frf, _ = generate_synthetic(spec, 2, 6, (0, 200), 400, 0.05, seed=6)
    run = execute(frf, PipelineConfig(em_order=40, n_bootstrap=20, seed=1))
    phys = run.report.physical
    noise = [c for c in run.report.clusters if c.label == "noise"]
    assert len(phys) == 4 and noise
    for f in (30.0, 70.0, 120.0, 165.0):
        assert min(abs(c.f_hz - f) / f for c in phys) < 0.005
    # Contribution and frequency repeatability separate the classes pairwise.
    # Inverse damping does not: spurious poles close to the axis are lightly damped.
    for f_idx in (0, 1):
        assert min(c.raw_features[f_idx] for c in phys) > np.nanmax(
            [c.raw_features[f_idx] for c in noise])
    assert min(c.dop for c in phys) > 0.9 > max(c.dop for c in noise)
