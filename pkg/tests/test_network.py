#! /usr/bin/env python
# Tests of the depth network stages
from collections import OrderedDict

import numpy as np
import pytest

from sweeptool import network
from sweeptool.geometry import CameraPose, compute_warp_grid, sample_planes
from sweeptool.network import (NetworkConfig, init_params, extract_features,
                               build_cost_volume, regularize_cost_volume,
                               aggregate_cost, regress_depth, forward, FeatureMap)
from sweeptool.metrics import confidence
from sweeptool.parset import Parset
from sweeptool.scene import SceneSpec, generate_scene
from sweeptool.tensor import Tensor


toy = NetworkConfig.toy()
toyParams = init_params(toy, seed=0)


def _texture(size, seed=0):
    return np.random.default_rng(seed).random((size, size))


def test_feature_shape_full_size():
    config = NetworkConfig.full()
    features = extract_features(_texture(64), init_params(config, 1), config)
    assert features.shape == (1, 32, 16, 16)
    assert features.stride == 4


def test_feature_shape_toy():
    features = extract_features(_texture(64), toyParams, toy)
    assert features.shape == (1, 8, 64, 64)


def test_features_deterministic():
    image = _texture(32, seed=3)
    a = extract_features(image, toyParams, toy)
    b = extract_features(image.copy(), toyParams, toy)
    assert np.array_equal(a.tensor.values, b.tensor.values)


def test_features_indivisible_size():
    with pytest.raises(ValueError, match='pad by 2 rows'):
        extract_features(np.zeros((30, 32)), toyParams, toy)


def test_features_channel_mismatch():
    with pytest.raises(ValueError):
        extract_features(np.zeros((3, 32, 32)), toyParams, toy)


def _identity_volume(variant):
    image = _texture(16)
    config = toy.copy(costVariant=variant, sppBlocks=(8, 4, 2))
    params = init_params(config, 2)
    ref = extract_features(image, params, config)
    planes = sample_planes(4, 0.5)
    from sweeptool.geometry import CameraIntrinsics
    K = CameraIntrinsics(12.0, 12.0, 7.5, 7.5, 16, 16)
    grid = compute_warp_grid(K, CameraPose.identity(), planes)
    return build_cost_volume(ref, [ref], [grid], variant)


def test_cost_volume_concat_identity():
    raws, counts = _identity_volume('concat')
    raw = raws[0].values
    assert raw.shape == (1, 16, 4, 16, 16)
    assert np.array_equal(raw[:, :8], raw[:, 8:])
    assert np.all(counts[0])


def test_cost_volume_abs_diff_identity():
    raws, counts = _identity_volume('abs-diff')
    assert raws[0].shape == (1, 8, 4, 16, 16)
    assert not np.any(raws[0].values)


def test_cost_channels():
    assert NetworkConfig.full().costChannels() == 64
    assert NetworkConfig.full().copy(costVariant='abs-diff').costChannels() == 32


def test_cost_volume_no_views():
    ref = FeatureMap(Tensor(np.zeros((1, 8, 4, 4))), 1)
    with pytest.raises(ValueError):
        build_cost_volume(ref, [], [])


def test_regularize_duplicate_views():
    rng = np.random.default_rng(4)
    raw = Tensor(rng.normal(size=(1, 16, 4, 6, 6)))
    one = regularize_cost_volume([raw], toyParams, toy)
    two = regularize_cost_volume([raw, raw], toyParams, toy)
    assert one.shape == (1, 4, 6, 6)
    assert np.array_equal(one.values, two.values)


def test_regularize_linear_cancellation():
    config = toy.copy(activations=False)
    params = init_params(config, 5)
    rng = np.random.default_rng(5)
    v = rng.normal(size=(1, 16, 4, 6, 6))
    out = regularize_cost_volume([Tensor(v), Tensor(-v)], params, config)
    np.testing.assert_allclose(out.values, 0.0, atol=1e-12)


def test_regularize_average_before():
    config = toy.copy(activations=False, averageBeforeRegularization=True)
    params = init_params(config, 6)
    v = np.random.default_rng(6).normal(size=(1, 16, 3, 4, 4))
    out = regularize_cost_volume([Tensor(v), Tensor(-v)], params, config)
    np.testing.assert_allclose(out.values, 0.0, atol=1e-12)


def test_aggregation_identity_with_zero_output_layer():
    rng = np.random.default_rng(7)
    initial = Tensor(rng.normal(size=(1, 4, 8, 8)))
    context = Tensor(rng.normal(size=(1, 8, 8, 8)))
    params = OrderedDict(toyParams)
    name = 'aggregate.conv6.weight'
    params[name] = Tensor(np.zeros(params[name].shape))
    refined, residual = aggregate_cost(initial, context, params, toy)
    assert np.array_equal(refined.values, initial.values)
    assert not np.any(residual.values)


def test_aggregation_near_identity_at_init():
    rng = np.random.default_rng(7)
    initial = Tensor(rng.normal(size=(1, 4, 8, 8)))
    context = Tensor(rng.normal(size=(1, 8, 8, 8)))
    refined, residual = aggregate_cost(initial, context, toyParams, toy)
    assert np.any(residual.values)
    assert np.max(np.abs(residual.values)) < 0.1


def _trained_like_params(seed):
    params = OrderedDict(toyParams)
    rng = np.random.default_rng(seed)
    name = 'aggregate.conv6.weight'
    params[name] = Tensor(rng.normal(scale=0.1, size=params[name].shape))
    return params


def test_aggregation_constant_input():
    params = _trained_like_params(8)
    initial = Tensor(np.full((1, 1, 72, 72), 0.7))
    context = Tensor(np.full((1, 8, 72, 72), -0.3))
    refined, residual = aggregate_cost(initial, context, params, toy)
    centre = refined.values[0, 0, 34:38, 34:38]
    np.testing.assert_allclose(centre, centre[0, 0], rtol=0, atol=1e-12)


def test_aggregation_label_permutation():
    params = _trained_like_params(9)
    rng = np.random.default_rng(9)
    initial = rng.normal(size=(1, 5, 8, 8))
    context = Tensor(rng.normal(size=(1, 8, 8, 8)))
    order = np.array([3, 0, 4, 1, 2])
    refined, residual = aggregate_cost(Tensor(initial), context, params, toy)
    permuted, residual = aggregate_cost(Tensor(initial[:, order]), context,
                                        params, toy)
    np.testing.assert_allclose(permuted.values, refined.values[:, order],
                               rtol=0, atol=1e-12)


def test_regress_one_hot():
    planes = sample_planes(64, 0.5)
    cost = np.zeros((1, 64, 1, 1))
    cost[0, 4] = 1000.0
    depth, label, prob = regress_depth(Tensor(cost), planes)
    assert label.values[0, 0, 0] == pytest.approx(5.0)
    assert depth.values[0, 0, 0] == pytest.approx(6.4)


def test_regress_uniform():
    depth, label, prob = regress_depth(Tensor(np.zeros((1, 64, 2, 2))),
                                       sample_planes(64, 0.5))
    np.testing.assert_allclose(label.values, 32.5)
    np.testing.assert_allclose(depth.values, 32.0 / 32.5)
    np.testing.assert_allclose(prob.values, 1.0 / 64)


def test_regress_two_peaks():
    cost = np.full((1, 5, 1, 1), -1000.0)
    cost[0, 1] = cost[0, 3] = 0.0
    depth, label, prob = regress_depth(Tensor(cost), sample_planes(5, 1.0))
    assert label.values[0, 0, 0] == pytest.approx(3.0)


def test_regress_uniform_sampling_expected_depth():
    planes = sample_planes(3, 1.0, mode='uniform', dMax=3.0)
    depth, label, prob = regress_depth(Tensor(np.zeros((1, 3, 1, 1))), planes)
    assert depth.values[0, 0, 0] == pytest.approx(2.0)


def test_regress_label_mismatch():
    with pytest.raises(ValueError):
        regress_depth(Tensor(np.zeros((1, 4, 1, 1))), sample_planes(5, 1.0))


def test_regress_pixel_permutation():
    rng = np.random.default_rng(12)
    cost = rng.normal(scale=3.0, size=(1, 8, 4, 5))
    order = rng.permutation(20)
    shuffled = cost.reshape(1, 8, 20)[:, :, order].reshape(1, 8, 4, 5)
    planes = sample_planes(8, 0.5)
    depth, label, prob = regress_depth(Tensor(cost), planes)
    depth2, label2, prob2 = regress_depth(Tensor(shuffled), planes)
    np.testing.assert_allclose(depth2.values.reshape(-1),
                               depth.values.reshape(-1)[order], rtol=0, atol=1e-12)
    np.testing.assert_allclose(label2.values.reshape(-1),
                               label.values.reshape(-1)[order], rtol=0, atol=1e-12)


def test_sharpened_cost_raises_winner_margin():
    rng = np.random.default_rng(13)
    cost = rng.normal(size=(1, 16, 6, 6))
    planes = sample_planes(16, 0.5)
    margins = []
    for sharpness in (1.0, 2.0, 4.0, 8.0):
        depth, label, prob = regress_depth(Tensor(sharpness * cost), planes)
        margins.append(confidence(prob.values[0]).winner_margin)
    assert np.all(np.diff(margins) > 0)


scene = generate_scene(SceneSpec(nViews=2), seed=11)


def test_forward_toy_range():
    initial, refined, volume = forward(scene.referenceImage, scene.pairedImages,
                                       scene.intrinsics, scene.pairedPoses,
                                       toyParams, toy)
    assert initial.shape == (32, 32)
    assert refined.shape == (32, 32)
    for d in (initial, refined):
        assert d.values.min() >= 0.5 - 1e-9
        assert d.values.max() <= 8 * 0.5 + 1e-9
    assert volume.prob.shape == (1, 8, 32, 32)
    assert len(volume.raw) == 2


def test_forward_without_aggregation():
    config = toy.copy(aggregation=False)
    initial, refined, volume = forward(scene.referenceImage, scene.pairedImages,
                                       scene.intrinsics, scene.pairedPoses,
                                       init_params(config, 0), config)
    assert np.array_equal(initial.values, refined.values)
    assert volume.residual is None


def test_forward_duplicate_view():
    image = scene.pairedImages[0]
    pose = scene.pairedPoses[0]
    one = forward(scene.referenceImage, [image], scene.intrinsics, [pose],
                  toyParams, toy)
    two = forward(scene.referenceImage, [image, image], scene.intrinsics,
                  [pose, pose], toyParams, toy)
    np.testing.assert_allclose(one[1].values, two[1].values, rtol=1e-10)
    np.testing.assert_allclose(one[0].values, two[0].values, rtol=1e-10)


def test_forward_feature_resolution_regression():
    config = toy.copy(featureStride=2, upsampleCost=False, sppBlocks=(8, 4, 2))
    initial, refined, volume = forward(scene.referenceImage, scene.pairedImages,
                                       scene.intrinsics, scene.pairedPoses,
                                       init_params(config, 0), config)
    assert refined.shape == (32, 32)
    assert volume.prob.shape == (1, 8, 16, 16)


def test_forward_pose_count_mismatch():
    with pytest.raises(ValueError):
        forward(scene.referenceImage, scene.pairedImages, scene.intrinsics,
                scene.pairedPoses[:1], toyParams, toy)


def test_init_params_names():
    params = init_params(toy, 0)
    assert 'feature.conv0.weight' in params
    assert params['feature.conv0.weight'].shape == (4, 1, 7, 7)
    assert params['cost.entry.weight'].shape == (8, 16, 3, 3, 3)
    assert params['aggregate.conv0.weight'].shape == (8, 9, 3, 3)
    last = params['aggregate.conv6.weight'].values
    assert np.any(last)
    assert np.max(np.abs(last)) < 0.01
    assert all(p.requiresGrad for p in params.values())
    again = init_params(toy, 0)
    for name in params:
        assert np.array_equal(params[name].values, again[name].values)


def test_config_parset_round_trip():
    config = NetworkConfig.toy(costVariant='abs-diff', samplingMode='uniform',
                               dMax=4.0, sppBlocks=(8, 4))
    parset = Parset()
    parset.readString(config.toParsetString())
    assert NetworkConfig.fromParset(parset) == config


def test_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(featureStride=3)
    with pytest.raises(ValueError):
        NetworkConfig(costVariant='dot')
    with pytest.raises(ValueError):
        NetworkConfig(samplingMode='log')
    with pytest.raises(ValueError):
        NetworkConfig(L=0)


def test_aggregation_dilations():
    assert network.AGGREGATION_DILATIONS == (1, 2, 4, 8, 16, 1, 1)
