#! /usr/bin/env python
# Tests of the depth error measures and confidence statistics
import numpy as np
import pytest

from sweeptool.geometry import CameraIntrinsics, CameraPose
from sweeptool.metrics import (depth_metrics, mean_metrics, geometric_error,
                               photometric_error, confidence, DepthMetrics)
from sweeptool.network import DepthMap
from sweeptool.scene import SceneSpec, generate_scene, layouts


def test_perfect_prediction():
    gt = np.array([[1.0, 2.0], [3.0, 4.0]])
    m = depth_metrics(gt.copy(), gt)
    for name in ('abs_rel', 'abs_diff', 'sq_rel', 'rmse', 'rmse_log', 'abs_rel_inv'):
        assert getattr(m, name) == 0.0
    assert (m.a1, m.a2, m.a3, m.completeness) == (1.0, 1.0, 1.0, 1.0)


def test_double_depth():
    m = depth_metrics(np.array([2.0]), np.array([1.0]))
    assert m.abs_rel == pytest.approx(1.0, abs=1e-12)
    assert m.sq_rel == pytest.approx(1.0, abs=1e-12)
    assert m.rmse == pytest.approx(1.0, abs=1e-12)
    assert m.rmse_log == pytest.approx(np.log(2.0), abs=1e-12)
    assert m.a1 == 0.0
    assert m.a3 == 0.0
    assert m.completeness == 0.0
    assert m.abs_rel_inv == pytest.approx(0.5, abs=1e-12)


def test_small_error_inlier():
    m = depth_metrics(np.array([1.2]), np.array([1.0]))
    assert m.a1 == 1.0
    assert m.completeness == 0.0
    assert depth_metrics(np.array([1.2]), np.array([1.0]), threshold=0.25) \
        .completeness == 1.0


def test_invalid_pixels_ignored():
    pred = DepthMap(np.array([1.0, 5.0]), valid=np.array([True, False]))
    m = depth_metrics(pred, np.array([1.0, 1.0]))
    assert m.abs_rel == 0.0


def test_empty_mask():
    with pytest.raises(ValueError):
        depth_metrics(np.array([1.0]), np.array([1.0]), mask=np.array([False]))
    with pytest.raises(ValueError):
        depth_metrics(np.array([1.0]), np.array([0.0]))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        depth_metrics(np.ones(3), np.ones(4))


def test_mean_metrics():
    a = depth_metrics(np.array([2.0]), np.array([1.0]))
    b = depth_metrics(np.array([1.0]), np.array([1.0]))
    mean = mean_metrics([a, b])
    assert isinstance(mean, DepthMetrics)
    assert mean.abs_rel == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        mean_metrics([])


def test_geometric_error():
    assert geometric_error(np.array([3.0]), np.array([3.0])) == 0.0
    assert geometric_error(np.array([2.0]), np.array([4.0])) == \
        pytest.approx(0.25, abs=1e-12)


def test_inlier_ratios_nested():
    rng = np.random.default_rng(11)
    for i in range(10000):
        gt = rng.uniform(0.5, 4.0, size=(4, 4))
        pred = gt * np.exp(rng.normal(0.0, rng.uniform(0.01, 1.0), size=gt.shape))
        m = depth_metrics(pred, gt)
        assert 0.0 <= m.a1 <= m.a2 <= m.a3 <= 1.0


K = CameraIntrinsics(16.0, 16.0, 15.5, 15.5, 32, 32)
image = np.random.default_rng(0).random((32, 32))


def test_photometric_identity():
    assert photometric_error(image, image, np.full((32, 32), 3.0), K,
                             CameraPose.identity()) == 0.0


def test_photometric_integer_shift():
    # A fronto-parallel plane at 2 m seen after a 0.25 m sideways move shifts
    # the image by exactly fx * tx / d = 2 pixels
    pose = CameraPose(np.eye(3), (0.25, 0.0, 0.0))
    paired = np.zeros_like(image)
    paired[:, 2:] = image[:, :-2]
    correct = photometric_error(image, paired, np.full((32, 32), 2.0), K, pose)
    wrong = photometric_error(image, paired, np.full((32, 32), 1.0), K, pose)
    assert correct < 1e-3
    assert wrong > correct


def test_photometric_no_overlap():
    pose = CameraPose(np.eye(3), (100.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        photometric_error(image, image, np.full((32, 32), 2.0), K, pose)


def test_photometric_rendered_scene():
    scene = generate_scene(SceneSpec(planes=[((0, 0, 1), 2.0)], nViews=1,
                                     width=32, height=32), seed=3)
    args = (scene.referenceImage, scene.pairedImages[0])
    gtError = photometric_error(*(args + (scene.depth, scene.intrinsics,
                                          scene.pairedPoses[0])))
    wrongError = photometric_error(*(args + (np.full((32, 32), 1.2),
                                             scene.intrinsics,
                                             scene.pairedPoses[0])))
    assert gtError < wrongError


@pytest.mark.parametrize('layout', layouts)
@pytest.mark.parametrize('seed', [0, 1, 2])
def test_ground_truth_warp_reproduces_reference(layout, seed):
    scene = generate_scene(SceneSpec(layout, nViews=2, width=32, height=32),
                           seed=seed)
    assert len(scene.covisible) == 2
    for k, pose in enumerate(scene.pairedPoses):
        covisible = scene.covisible[k]
        assert covisible.shape == (32, 32)
        assert covisible.mean() > 0.3
        error = photometric_error(scene.radiance[0], scene.radiance[k + 1],
                                  scene.depth, scene.intrinsics, pose,
                                  mask=covisible)
        assert error < 1e-3


def test_photometric_mask():
    pose = CameraPose(np.eye(3), (0.05, 0.0, 0.0))
    depth = np.full((32, 32), 2.0)
    mask = np.zeros((32, 32), dtype=bool)
    mask[8:24, 8:24] = True
    masked = photometric_error(image, image, depth, K, pose, mask=mask)
    assert masked != photometric_error(image, image, depth, K, pose)
    with pytest.raises(ValueError):
        photometric_error(image, image, depth, K, pose, mask=np.zeros((32, 32)))
    with pytest.raises(ValueError):
        photometric_error(image, image, depth, K, pose, mask=mask[:4])


def test_confidence():
    oneHot = np.array([1.0, 0.0, 0.0])[:, None]
    assert confidence(oneHot).winner_margin == pytest.approx(1.0, abs=1e-12)
    uniform = confidence(np.full((4, 2), 0.25))
    assert uniform.winner_margin == 0.0
    assert uniform.curvature == 0.0
    report = confidence(np.array([0.5, 0.3, 0.2])[:, None])
    assert report.winner_margin == pytest.approx(0.2, abs=1e-12)
    assert report.curvature == pytest.approx(0.2, abs=1e-12)


def test_confidence_peak_in_middle():
    report = confidence(np.array([[0.1, 0.2], [0.6, 0.3], [0.3, 0.5]]))
    # pixel 0 peaks at label 1, pixel 1 at the last label
    assert report.curvature == pytest.approx(0.3, abs=1e-12)


def test_confidence_needs_three_labels():
    with pytest.raises(ValueError):
        confidence(np.array([[0.5], [0.5]]))
