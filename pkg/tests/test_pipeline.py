import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liftrom.active_subspaces import ParameterDomain
from liftrom.config import DyasConfig, GeometryConfig
from liftrom.dmd import DmdModel, forecast
from liftrom.errors import InputError, PipelineError
from liftrom.fom_surrogate import SurrogateSpec, lift
from liftrom.pipeline import (
    FAILURE_MARKER,
    deform_and_morph,
    read_samples_csv,
    relative_error,
    run_dyas,
    run_pipeline,
    sample_parameters,
    sensitivity_sweeps,
    window_times,
    write_samples_csv,
)
from liftrom.rbf_morph import read_mesh_csv, reference_mesh, write_mesh_csv
from liftrom.shape_param import naca4_profile, read_profile_csv

DOM = ParameterDomain.uniform_box()
FIG4_MU = np.array([0.0071, 0.0229, 0.0015, 0.0015, 0.0087, 0.0107, 0.0033, 0.0130, 0.0247, 0.0280])


def test_sampling_basics():
    assert sample_parameters(DOM, 0).shape == (0, 10)
    a = sample_parameters(DOM, 25, seed=3)
    np.testing.assert_array_equal(a, sample_parameters(DOM, 25, seed=3))
    assert not np.array_equal(a, sample_parameters(DOM, 25, seed=4))
    assert np.all((a >= 0) & (a <= 0.03))
    with pytest.raises(InputError):
        sample_parameters(DOM, 5, strategy="sobol")


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_latin_hypercube_one_sample_per_decile(seed):
    samples = sample_parameters(DOM, 10, seed=seed, strategy="latin-hypercube")
    bins = np.floor(DOM.normalize(samples) * 5 + 5).astype(int)
    for j in range(10):
        assert sorted(bins[:, j]) == list(range(10))


def test_relative_error_examples():
    assert relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_error([3.0, 4.0], [0.0, 0.0]) == 1.0
    with pytest.raises(ZeroDivisionError):
        relative_error([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InputError):
        relative_error([1.0], [1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 5, elements=st.floats(-10, 10)), arrays(np.float64, 5, elements=st.floats(-10, 10)),
       st.floats(0.1, 100) | st.floats(-100, -0.1))
def test_relative_error_scale_invariant(x, y, c):
    if np.linalg.norm(x) < 1e-3:
        return
    assert relative_error(c * x, c * y) == pytest.approx(relative_error(x, y), rel=1e-12, abs=1e-15)


def test_window_times(small_config):
    t = window_times(small_config)
    assert t.size == 800
    assert t[-1] == 20.0
    assert t[0] == pytest.approx(12.01, abs=1e-12)


def test_samples_csv_round_trip(tmp_path):
    samples = sample_parameters(DOM, 7, seed=1)
    write_samples_csv(samples, tmp_path / "s.csv")
    np.testing.assert_array_equal(read_samples_csv(tmp_path / "s.csv"), samples)


def test_pipeline_small_run(small_config, tmp_path):
    report = run_pipeline(small_config)
    out = tmp_path / "out"
    assert report.frozen == [0, 4, 5, 9]
    assert len(report.errors_full) == len(report.errors_reduced) == len(report.eval_times) == 4
    assert all(np.isfinite(e) and e >= 0 for e in report.errors_full + report.errors_reduced)
    data = json.loads((out / "report.json").read_text())
    assert data["frozen_indices"] == [1, 5, 6, 10]
    assert data["frozen_parameters"] == ["c1", "c5", "d1", "d5"]
    for name in ("samples_train.csv", "samples_test.csv", "ensemble_train.csv", "dmd_model.json",
                 "errors_full.csv", "errors_reduced.csv", "timings.json",
                 "dyas_w1_t6s.csv", "dyas_eigenvalues_t18s.csv", "sufficiency_t10s.csv"):
        assert (out / name).exists(), name
    assert (out / "dyas_w1_t6s.csv").read_text().splitlines()[0] == "parameter_index,parameter_name,w1_component"
    assert (out / "errors_full.csv").read_text().splitlines()[0] == "t,relative_error"
    assert not (out / FAILURE_MARKER).exists()


def test_training_targets_recomputed(small_config, tmp_path):
    report = run_pipeline(small_config)
    spec = SurrogateSpec()
    model = DmdModel.load(tmp_path / "out" / "dmd_model.json")
    rng = np.random.default_rng(0)
    for i in rng.choice(small_config.n_train, size=3, replace=False):
        mu = report.train_samples[i]
        for t, targets in report.train_targets.items():
            if t <= small_config.t_b:
                assert targets[i] == lift(spec, mu, t, DOM)
            else:
                assert targets[i] == forecast(model, t)[i]


def test_empty_frozen_set_gives_identical_curves(small_config):
    config = dataclasses.replace(small_config, dyas=DyasConfig(freeze_threshold=0.0))
    report = run_pipeline(config, write=False)
    assert report.frozen == []
    assert report.errors_full == report.errors_reduced


def test_gpr_gradient_provider(small_config):
    config = dataclasses.replace(small_config, dyas=DyasConfig(gradient_provider="gpr"))
    series, frozen = run_dyas(config, write=False)
    assert len(series.subspaces) == 4
    assert all(j in range(10) for j in frozen)


def test_failure_marker(small_config, tmp_path):
    config = dataclasses.replace(small_config, dyas=DyasConfig(freeze_threshold=1.0))
    with pytest.raises(PipelineError) as info:
        run_pipeline(config)
    assert info.value.stage == "freeze"
    marker = json.loads((tmp_path / "out" / FAILURE_MARKER).read_text())
    assert marker["status"] == "failed" and marker["stage"] == "freeze"
    # partial artifacts from earlier stages are kept
    assert (tmp_path / "out" / "dmd_model.json").exists()
    run_pipeline(small_config)
    assert not (tmp_path / "out" / FAILURE_MARKER).exists()


def test_sensitivity_sweeps(small_config, tmp_path):
    dmd_rows, gpr_rows = sensitivity_sweeps(small_config)
    np.testing.assert_array_equal(dmd_rows[:, 0], [0.01, 0.1, 0.2])
    assert np.all(np.isfinite(dmd_rows[:, 1])) and np.all(dmd_rows[:, 1] < 1e-6)
    np.testing.assert_array_equal(gpr_rows[:, 0], [1, 5, 20])
    assert np.all(np.isfinite(gpr_rows[:, 1:]))
    out = tmp_path / "out"
    assert (out / "sweep_dmd.csv").read_text().splitlines()[0] == "dt_dmd,mean_relative_error"
    assert (out / "sweep_gpr.csv").read_text().splitlines()[1].startswith("1,")


def test_sweep_rejects_bad_period(small_config):
    config = dataclasses.replace(small_config, sweeps=dataclasses.replace(small_config.sweeps, dt_values=[0.015]))
    with pytest.raises(PipelineError):
        sensitivity_sweeps(config, write=False)


def test_deform_identity_is_byte_identical(small_config, tmp_path):
    deform_and_morph(small_config, np.zeros(10), tmp_path)
    assert (tmp_path / "profile_reference.csv").read_bytes() == (tmp_path / "profile_deformed.csv").read_bytes()
    assert (tmp_path / "mesh_reference.csv").read_bytes() == (tmp_path / "mesh_morphed.csv").read_bytes()


def test_deform_fig4_sample(small_config, tmp_path):
    profile, mesh = deform_and_morph(small_config, FIG4_MU, tmp_path)
    ref = naca4_profile("4412")
    assert np.all(profile.y_upper >= ref.y_upper) and np.all(profile.y_lower <= ref.y_lower)
    assert read_profile_csv(tmp_path / "profile_deformed.csv").equals(profile)
    reference = read_mesh_csv(tmp_path / "mesh_reference.csv")
    assert len(mesh) == len(reference)
    np.testing.assert_array_equal(mesh.tags, reference.tags)
    # wing points land on the deformed surface
    wing = mesh.points("wing")
    upper = wing[: ref.stations.size]
    np.testing.assert_allclose(upper[:, 1], profile.y_upper, rtol=0, atol=1e-15)
    moved = np.linalg.norm(mesh.coordinates - reference.coordinates, axis=1)
    dist = np.linalg.norm(reference.coordinates - (0.5, 0.0), axis=1)
    assert not moved[dist >= 7.0].any()


def test_deform_with_mesh_file(small_config, tmp_path):
    from liftrom.pipeline import wing_points

    mesh = reference_mesh(wing_points(naca4_profile("4412")), n_rings=5, n_theta=16)
    path = tmp_path / "mesh.csv"
    write_mesh_csv(mesh, path)
    config = dataclasses.replace(small_config, geometry=GeometryConfig(mesh=str(path)))
    _, morphed = deform_and_morph(config, FIG4_MU, write=False)
    assert len(morphed) == len(mesh)


def test_deform_rejects_out_of_domain(small_config):
    with pytest.raises(InputError):
        deform_and_morph(small_config, np.full(10, 0.05), write=False)
