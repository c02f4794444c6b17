import pathlib

import numpy as np
import pytest

import cfcal

TINY = """
[scenario]
seed = 3
[phase1]
n_traj = 6
[mlp]
layers = 2
width = 16
epochs = 3
[forest]
trees = 5
[debride]
n_trials = 1
"""


def test_version_and_config_text():
    assert cfcal.__version__ == "0.1.0"
    text = cfcal.config_text()
    assert "[mlp]" in text and "epochs = 1000" in text
    assert "epochs = 3" in cfcal.config_text(config_text=TINY)


def test_config_errors_raise():
    with pytest.raises(cfcal.ConfigError):
        cfcal.config_text(config_text="[mlp]\nepoch = 3\n")


def test_projection_round_trip():
    rig = cfcal.StereoRig()
    assert rig.px_per_mm == pytest.approx(11.3, abs=0.01)
    point = np.array([3.0, -4.0, 185.0])
    left, right = rig.project(point)
    assert left[0] - right[0] > 0
    np.testing.assert_allclose(rig.triangulate(left, right), point, atol=1e-9)
    with pytest.raises(cfcal.InvalidArgument):
        rig.triangulate(left, left)


def test_fit_rbt_recovers_rotation():
    rng = np.random.default_rng(0)
    src = rng.uniform(-40, 40, size=(20, 3))
    theta = 0.3
    R = np.array([[np.cos(theta), -np.sin(theta), 0], [np.sin(theta), np.cos(theta), 0], [0, 0, 1]])
    t = np.array([1.0, 2.0, 3.0])
    R_hat, t_hat = cfcal.fit_rbt(src, src @ R.T + t)
    np.testing.assert_allclose(R_hat, R, atol=1e-12)
    np.testing.assert_allclose(t_hat, t, atol=1e-9)


def test_snap_yaw():
    assert cfcal.snap_yaw(50.0) == 45
    assert cfcal.snap_yaw(-22.5) == 0


def test_pipeline_round_trip(tmp_path: pathlib.Path):
    with pytest.raises(cfcal.MissingArtifact):
        cfcal.run("bench", str(tmp_path), config_text=TINY)
    paths = cfcal.run("all", str(tmp_path), config_text=TINY)
    assert pathlib.Path(paths["bench_csv"]).read_text().startswith("mapping,yaw")
    X, Y = cfcal.load_coarse_dataset(paths["coarse_dataset"], paths["coarse_provenance"])
    assert X.shape[1] == 6 and Y.shape == (X.shape[0], 3)
    mlp = cfcal.load_mlp(paths["mlp"])
    combined = cfcal.load_combined(paths["combined"])
    rigid = cfcal.load_rigid(paths["rbt"])
    for model in (mlp, combined, rigid):
        out = model.predict(X[:10])
        assert out.shape == (10, 3) and np.all(np.isfinite(out))
    np.testing.assert_array_equal(combined.mlp.predict(X[:10]), mlp.predict(X[:10]))
