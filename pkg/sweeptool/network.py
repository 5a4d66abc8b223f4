# -*- coding: utf-8 -*-
#
# This module defines the plane-sweep depth network: feature extraction,
# cost-volume generation, cost aggregation and depth regression.
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA  02111-1307  USA

import logging
from collections import OrderedDict

import numpy as np

from . import geometry
from . import tensor as T
from .tensor import Tensor

log = logging.getLogger('SweepTool.NETWORK')

CONCAT = 'concat'
ABS_DIFF = 'abs-diff'
costVariants = (CONCAT, ABS_DIFF)

# Dilations of the seven context-network layers
AGGREGATION_DILATIONS = (1, 2, 4, 8, 16, 1, 1)

# Scale of the last context-network layer at initialization
AGGREGATION_OUTPUT_SCALE = 1e-3

# Encoder strides for each supported feature stride
ENCODER_STRIDES = {1: (1, 1, 1, 1, 1, 1, 1),
                   2: (2, 1, 1, 1, 1, 1, 1),
                   4: (2, 1, 1, 2, 1, 1, 1)}

# Number of residual blocks in the 3-D regularizer
RESIDUAL_BLOCKS = 2


class NetworkConfig(object):
    """
    Shape and ablation switches of the depth network.

    Parameters
    ----------
    CH : int
        Feature channels
    L : int
        Number of depth labels (swept planes)
    dMin : float
        Minimum scene depth in meters
    featureStride : int
        Feature downsampling factor: 1, 2 or 4
    costVariant : str
        'concat' (reference and warped features stacked) or 'abs-diff'
    aggregation : bool
        If True, the context network refines every cost slice
    samplingMode : str
        'inverse' or 'uniform' plane sampling
    dMax : float
        Far depth for uniform sampling
    c3d : int, optional
        Channels of the 3-D regularizer (default min(16, CH))
    aggChannels : int, optional
        Channels of the context network (default CH)
    sppBlocks : sequence of int
        Average-pooling window sizes of the pyramid pooling module
    inChannels : int
        Image channels (1 for the grayscale synthetic scenes)
    activations : bool
        If False, every rectified-linear unit is skipped (linear test mode)
    averageBeforeRegularization : bool
        If True, raw per-view volumes are averaged before the 3-D stack
        instead of averaging the regularized volumes
    upsampleCost : bool
        If True, costs are upsampled to image size before regression;
        otherwise depth is regressed at feature size and upsampled

    """
    _keys = ('CH', 'L', 'dMin', 'featureStride', 'costVariant', 'aggregation',
             'samplingMode', 'dMax', 'c3d', 'aggChannels', 'sppBlocks',
             'inChannels', 'activations', 'averageBeforeRegularization',
             'upsampleCost')

    def __init__(self, CH=32, L=64, dMin=0.5, featureStride=4,
                 costVariant=CONCAT, aggregation=True,
                 samplingMode=geometry.INVERSE, dMax=geometry.DEFAULT_DMAX,
                 c3d=None, aggChannels=None, sppBlocks=(16, 8, 4, 2),
                 inChannels=1, activations=True,
                 averageBeforeRegularization=False, upsampleCost=True):
        self.CH = int(CH)
        self.L = int(L)
        self.dMin = float(dMin)
        self.featureStride = int(featureStride)
        self.costVariant = costVariant
        self.aggregation = bool(aggregation)
        self.samplingMode = samplingMode
        self.dMax = float(dMax)
        self.c3d = min(16, self.CH) if c3d is None else int(c3d)
        self.aggChannels = self.CH if aggChannels is None else int(aggChannels)
        self.sppBlocks = tuple(int(b) for b in sppBlocks)
        self.inChannels = int(inChannels)
        self.activations = bool(activations)
        self.averageBeforeRegularization = bool(averageBeforeRegularization)
        self.upsampleCost = bool(upsampleCost)

        if self.CH < 1 or self.L < 1 or self.c3d < 1 or self.aggChannels < 1:
            raise ValueError('Channel and label counts must be positive.')
        if self.featureStride not in ENCODER_STRIDES:
            raise ValueError('featureStride must be one of 1, 2, 4 (got '
                             '{0}).'.format(featureStride))
        if self.costVariant not in costVariants:
            raise ValueError("Cost variant '{0}' not understood. Must be one of: "
                             "{1}".format(costVariant, ', '.join(costVariants)))
        if self.samplingMode not in geometry.samplingModes:
            raise ValueError("Sampling mode '{0}' not understood. Must be one of: "
                             "{1}".format(samplingMode,
                                          ', '.join(geometry.samplingModes)))
        if not self.dMin > 0:
            raise ValueError('dMin must be positive (got {0}).'.format(dMin))
        if len(self.sppBlocks) == 0 or min(self.sppBlocks) < 1:
            raise ValueError('sppBlocks must list positive window sizes.')

    @classmethod
    def full(cls):
        """
        The full-size configuration (CH = 32, L = 64, stride 4).
        """
        return cls()

    @classmethod
    def toy(cls, **kwargs):
        """
        The desk-scale configuration (CH = 8, L = 8, stride 1).
        """
        settings = dict(CH=8, L=8, featureStride=1)
        settings.update(kwargs)
        return cls(**settings)

    @classmethod
    def fromParset(cls, parset):
        """
        Reads the network keys of a Parset, using defaults for missing keys.
        """
        d = cls()
        toy = parset.getBool('toy', False)
        if toy:
            d = cls.toy()
        return cls(
            CH=parset.getInt('CH', d.CH),
            L=parset.getInt('L', d.L),
            dMin=parset.getFloat('dMin', d.dMin),
            featureStride=parset.getInt('featureStride', d.featureStride),
            costVariant=parset.getString('costVariant', d.costVariant),
            aggregation=parset.getBool('aggregation', d.aggregation),
            samplingMode=parset.getString('samplingMode', d.samplingMode),
            dMax=parset.getFloat('dMax', d.dMax),
            c3d=parset.getInt('c3d', 0) or None,
            aggChannels=parset.getInt('aggChannels', 0) or None,
            sppBlocks=parset.getIntVector('sppBlocks', list(d.sppBlocks)),
            inChannels=parset.getInt('inChannels', d.inChannels),
            activations=parset.getBool('activations', d.activations),
            averageBeforeRegularization=parset.getBool(
                'averageBeforeRegularization', d.averageBeforeRegularization),
            upsampleCost=parset.getBool('upsampleCost', d.upsampleCost))

    def toParsetString(self):
        """
        Returns the configuration as key = value lines.
        """
        lines = []
        for key in self._keys:
            val = getattr(self, key)
            if isinstance(val, bool):
                val = 'true' if val else 'false'
            elif isinstance(val, tuple):
                val = '[' + ', '.join(str(v) for v in val) + ']'
            elif isinstance(val, float):
                val = repr(val)
            lines.append('{0} = {1}\n'.format(key, val))
        return ''.join(lines)

    def copy(self, **changes):
        settings = dict((key, getattr(self, key)) for key in self._keys)
        settings.update(changes)
        return NetworkConfig(**settings)

    def planes(self):
        return geometry.sample_planes(self.L, self.dMin, self.samplingMode,
                                      dMax=self.dMax)

    def encoderLayout(self):
        """
        Returns (out channels, kernel, stride) of the seven encoder layers.
        """
        half = max(1, self.CH // 2)
        channels = (half, half, half, self.CH, self.CH, self.CH, self.CH)
        kernels = (7, 3, 3, 3, 3, 3, 3)
        return list(zip(channels, kernels, ENCODER_STRIDES[self.featureStride]))

    def costChannels(self):
        return 2 * self.CH if self.costVariant == CONCAT else self.CH

    def __eq__(self, other):
        return (isinstance(other, NetworkConfig) and
                all(getattr(self, k) == getattr(other, k) for k in self._keys))

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'NetworkConfig({0})'.format(', '.join(
            '{0}={1!r}'.format(k, getattr(self, k)) for k in self._keys))


class FeatureMap(object):
    """
    Features of a batch of images: tensor of shape N x CH x H/stride x W/stride.
    """
    def __init__(self, tensor, stride):
        self.tensor = tensor
        self.stride = stride

    @property
    def shape(self):
        return self.tensor.shape

    def __getitem__(self, i):
        return FeatureMap(self.tensor[i:i+1], self.stride)


class CostVolume(object):
    """
    The cost volumes of one forward pass.

    Attributes
    ----------
    raw : list of Tensor
        Per-view 1 x C x L x H' x W' volumes before regularization
    counts : list of array
        Per-view L x H' x W' masks of in-bounds samples
    initial : Tensor
        1 x L x H' x W' regularized (averaged) volume
    refined : Tensor
        initial + residual (the initial volume itself without aggregation)
    residual : Tensor or None
        Output of the context network
    prob : Tensor
        Softmax over labels of the refined costs at output resolution
    initialProb : Tensor
        Softmax over labels of the initial costs at output resolution

    """
    def __init__(self, raw, counts, initial, refined, residual=None, prob=None,
                 initialProb=None):
        self.raw = raw
        self.counts = counts
        self.initial = initial
        self.refined = refined
        self.residual = residual
        self.prob = prob
        self.initialProb = initialProb


class DepthMap(object):
    """
    Per-pixel metric depth with a validity mask.

    Parameters
    ----------
    depth : Tensor or array
        Depth in meters
    valid : array, optional
        Boolean mask; defaults to depth > 0

    """
    def __init__(self, depth, valid=None):
        self.depth = depth
        values = self.values
        if valid is None:
            valid = np.isfinite(values) & (values > 0)
        self.valid = np.asarray(valid, dtype=bool)
        if self.valid.shape != values.shape:
            raise ValueError('Depth and mask shapes differ ({0} vs '
                             '{1}).'.format(values.shape, self.valid.shape))

    @property
    def values(self):
        if isinstance(self.depth, Tensor):
            return self.depth.values
        return np.asarray(self.depth, dtype=float)

    @property
    def shape(self):
        return self.values.shape

    def asArray(self, invalid=0.0):
        """
        Returns the depth as an array with invalid pixels set to invalid.
        """
        return np.where(self.valid, self.values, invalid)


def _he_normal(rng, shape):
    fanIn = int(np.prod(shape[1:]))
    return rng.normal(0.0, np.sqrt(2.0 / fanIn), size=shape)


def init_params(config, seed=0):
    """
    Initializes every learnable parameter.

    Convolution weights use fan-in scaled normal draws and biases are zero. The
    last context-network layer is scaled down by AGGREGATION_OUTPUT_SCALE, so
    aggregation starts close to identity while every context layer already
    receives gradient.

    Returns
    -------
    params : OrderedDict
        Parameter name -> Tensor (requiresGrad=True)

    """
    rng = np.random.default_rng(seed)
    shapes = OrderedDict()
    cin = config.inChannels
    for i, (cout, k, stride) in enumerate(config.encoderLayout()):
        shapes['feature.conv{0}'.format(i)] = (cout, cin, k, k)
        cin = cout
    nBranches = len(config.sppBlocks) + 1
    shapes['feature.fuse0'] = (config.CH, nBranches * config.CH, 3, 3)
    shapes['feature.fuse1'] = (config.CH, config.CH, 1, 1)
    c3d = config.c3d
    shapes['cost.entry'] = (c3d, config.costChannels(), 3, 3, 3)
    for j in range(RESIDUAL_BLOCKS):
        shapes['cost.res{0}.conv0'.format(j)] = (c3d, c3d, 3, 3, 3)
        shapes['cost.res{0}.conv1'.format(j)] = (c3d, c3d, 3, 3, 3)
    shapes['cost.head'] = (1, c3d, 3, 3, 3)
    cin = 1 + config.CH
    for i in range(len(AGGREGATION_DILATIONS)):
        cout = 1 if i == len(AGGREGATION_DILATIONS) - 1 else config.aggChannels
        shapes['aggregate.conv{0}'.format(i)] = (cout, cin, 3, 3)
        cin = cout

    last = 'aggregate.conv{0}'.format(len(AGGREGATION_DILATIONS) - 1)
    params = OrderedDict()
    for name, shape in shapes.items():
        weight = _he_normal(rng, shape)
        if name == last:
            weight *= AGGREGATION_OUTPUT_SCALE
        params[name + '.weight'] = Tensor(weight, requiresGrad=True)
        params[name + '.bias'] = Tensor(np.zeros(shape[0]), requiresGrad=True)
    log.debug('Initialized {0} parameter tensors ({1} values)'.format(
        len(params), sum(p.size for p in params.values())))
    return params


def _act(x, config):
    return T.relu(x) if config.activations else x


def _conv2(x, params, name, **kwargs):
    return T.conv2d(x, params[name + '.weight'], params[name + '.bias'], **kwargs)


def _conv3(x, params, name):
    return T.conv3d(x, params[name + '.weight'], params[name + '.bias'], padding=1)


def as_image_tensor(image):
    """
    Converts an H x W or C x H x W (or batched) image to an N x C x H x W Tensor.
    """
    if isinstance(image, Tensor):
        values = image.values
    else:
        values = np.asarray(image, dtype=float)
    if values.ndim == 2:
        values = values[None, None]
    elif values.ndim == 3:
        values = values[None]
    if values.ndim != 4:
        raise ValueError('Images must be H x W, C x H x W or N x C x H x W '
                         '(got shape {0}).'.format(values.shape))
    if isinstance(image, Tensor) and image.shape == values.shape:
        return image
    if isinstance(image, Tensor):
        return image.reshape(values.shape)
    return Tensor(values)


def extract_features(image, params, config):
    """
    Encodes images into CH-channel features with spatial pyramid pooling.

    Parameters
    ----------
    image : Tensor or array
        C x H x W image, or N x C x H x W batch
    params : dict
        Network parameters
    config : NetworkConfig
        Network configuration

    Returns
    -------
    features : FeatureMap
        N x CH x H/stride x W/stride features

    """
    x = as_image_tensor(image)
    N, C, H, W = x.shape
    if C != config.inChannels:
        raise ValueError('Image has {0} channels but the network expects '
                         '{1}.'.format(C, config.inChannels))
    multiple = config.featureStride * max(config.sppBlocks)
    if H % multiple or W % multiple:
        raise ValueError('Image size {0}x{1} must be divisible by {2} (feature '
                         'stride {3} x largest pooling block {4}); pad by {5} rows '
                         'and {6} columns.'.format(
                             W, H, multiple, config.featureStride,
                             max(config.sppBlocks), (-H) % multiple,
                             (-W) % multiple))
    for i, (cout, k, stride) in enumerate(config.encoderLayout()):
        x = _act(_conv2(x, params, 'feature.conv{0}'.format(i), stride=stride,
                        padding=k // 2), config)
    Hf, Wf = x.shape[2], x.shape[3]
    branches = [x]
    for block in config.sppBlocks:
        pooled = T.avg_pool2d(x, block)
        branches.append(T.upsample_bilinear(pooled, Hf, Wf))
    x = T.concatenate(branches, axis=1)
    x = _act(_conv2(x, params, 'feature.fuse0', padding=1), config)
    x = _conv2(x, params, 'feature.fuse1')
    return FeatureMap(x, config.featureStride)


def build_cost_volume(ref, paired, grids, variant=CONCAT):
    """
    Builds one raw plane-sweep volume per paired view.

    Parameters
    ----------
    ref : FeatureMap
        Reference features (1 x CH x H' x W')
    paired : list of FeatureMap
        Paired-view features
    grids : list of WarpGrid
        Warp grids at feature resolution, one per paired view
    variant : str
        'concat' stacks [reference, warped] (2CH channels); 'abs-diff' emits
        |reference - warped| (CH channels)

    Returns
    -------
    raws : list of Tensor
        1 x C x L x H' x W' volumes
    counts : list of array
        L x H' x W' in-bounds masks

    """
    if len(paired) == 0:
        raise ValueError('At least one paired view is needed to build a cost '
                         'volume.')
    if len(paired) != len(grids):
        raise ValueError('Got {0} paired feature maps but {1} warp '
                         'grids.'.format(len(paired), len(grids)))
    if variant not in costVariants:
        raise ValueError("Cost variant '{0}' not understood.".format(variant))
    N, CH, H, W = ref.shape
    raws = []
    counts = []
    for features, grid in zip(paired, grids):
        L = grid.shape[0]
        if grid.shape[1:] != (H, W):
            raise ValueError('Warp grid size {0} does not match the feature size '
                             '{1}.'.format(grid.shape[1:], (H, W)))
        warped = T.grid_sample_bilinear(features.tensor, grid.coords, grid.inBounds)
        refVolume = T.expand(ref.tensor.reshape(N, CH, 1, H, W), (N, CH, L, H, W))
        if variant == CONCAT:
            raws.append(T.concatenate([refVolume, warped], axis=1))
        else:
            raws.append(T.absolute(refVolume - warped))
        counts.append(grid.inBounds.copy())
    return raws, counts


def _regularize_one(raw, params, config):
    N, C, L, H, W = raw.shape
    x = _act(_conv3(raw, params, 'cost.entry'), config)
    for j in range(RESIDUAL_BLOCKS):
        r = _act(_conv3(x, params, 'cost.res{0}.conv0'.format(j)), config)
        x = x + _conv3(r, params, 'cost.res{0}.conv1'.format(j))
    x = _conv3(x, params, 'cost.head')
    return x.reshape(N, L, H, W)


def regularize_cost_volume(raws, params, config):
    """
    Turns raw volumes into one L-channel cost volume with a shared 3-D stack.

    By default the stack runs on every view and the outputs are averaged;
    with averageBeforeRegularization the raw volumes are averaged first.

    Returns
    -------
    initial : Tensor
        1 x L x H' x W' cost volume

    """
    if len(raws) == 0:
        raise ValueError('No cost volumes to regularize.')
    shape = raws[0].shape
    for raw in raws[1:]:
        if raw.shape != shape:
            raise ValueError('Cost volumes differ in shape ({0} vs '
                             '{1}).'.format(shape, raw.shape))
    if config.averageBeforeRegularization:
        total = raws[0]
        for raw in raws[1:]:
            total = total + raw
        return _regularize_one(total * (1.0 / len(raws)), params, config)
    total = None
    for raw in raws:
        volume = _regularize_one(raw, params, config)
        total = volume if total is None else total + volume
    if len(raws) == 1:
        return total
    return total * (1.0 / len(raws))


def aggregate_cost(initial, refContext, params, config):
    """
    Refines every cost slice with the reference-conditioned context network.

    Each slice is concatenated with the reference features, passed through
    seven dilated 3x3 convolutions with shared weights, and the resulting
    residual is added back.

    Returns
    -------
    refined : Tensor
        1 x L x H' x W'
    residual : Tensor
        1 x L x H' x W'

    """
    context = refContext.tensor if isinstance(refContext, FeatureMap) else refContext
    N, L, H, W = initial.shape
    if context.shape[0] != N or context.shape[2:] != (H, W):
        raise ValueError('Context features of shape {0} do not match the cost '
                         'volume of shape {1}.'.format(context.shape, initial.shape))
    CH = context.shape[1]
    slices = initial.reshape(N * L, 1, H, W)
    ctx = T.expand(context.reshape(N, 1, CH, H, W), (N, L, CH, H, W))
    x = T.concatenate([slices, ctx.reshape(N * L, CH, H, W)], axis=1)
    last = len(AGGREGATION_DILATIONS) - 1
    for i, dilation in enumerate(AGGREGATION_DILATIONS):
        x = _conv2(x, params, 'aggregate.conv{0}'.format(i), dilation=dilation,
                   padding=dilation)
        if i < last:
            x = _act(x, config)
    residual = x.reshape(N, L, H, W)
    return initial + residual, residual


def regress_depth(cost, planes):
    """
    Soft-argmax depth regression.

    The label estimate is l~ = sum_l l softmax(c)_l. In inverse mode depth is
    L d_min / l~; in uniform mode it is the expected depth sum_l softmax(c)_l d_l.

    Parameters
    ----------
    cost : Tensor
        N x L x H x W label scores
    planes : PlaneHypothesisSet
        The swept planes

    Returns
    -------
    depth : DepthMap
        N x H x W depth
    label : Tensor
        N x H x W expected label (1-based)
    prob : Tensor
        N x L x H x W label probabilities

    """
    L = cost.shape[1]
    if L != len(planes):
        raise ValueError('Cost volume has {0} labels but {1} planes were '
                         'given.'.format(L, len(planes)))
    prob = T.softmax(cost, axis=1)
    labels = np.arange(1, L + 1, dtype=float).reshape(1, L, 1, 1)
    label = (prob * labels).sum(axis=1)
    if planes.mode == geometry.INVERSE:
        depth = (L * planes.dMin) / label
    else:
        depth = (prob * np.asarray(planes.depths).reshape(1, L, 1, 1)).sum(axis=1)
    return DepthMap(depth, np.ones(depth.shape, dtype=bool)), label, prob


def _to_output_size(cost, height, width):
    if cost.shape[2:] == (height, width):
        return cost
    return T.upsample_bilinear(cost, height, width)


def forward(refImage, pairedImages, K, poses, params, config):
    """
    Runs the full network on one reference view and its paired views.

    Parameters
    ----------
    refImage : array or Tensor
        Reference image (H x W or C x H x W)
    pairedImages : list
        Paired images
    K : CameraIntrinsics
        Intrinsics at image resolution
    poses : list of CameraPose
        Reference-to-paired pose of each paired image
    params : dict
        Network parameters
    config : NetworkConfig
        Network configuration

    Returns
    -------
    initialDepth : DepthMap
        H x W depth regressed from the initial volume
    refinedDepth : DepthMap
        H x W depth regressed from the refined volume
    volume : CostVolume

    """
    if len(pairedImages) == 0:
        raise ValueError('At least one paired image is needed.')
    if len(pairedImages) != len(poses):
        raise ValueError('Got {0} paired images but {1} poses.'.format(
            len(pairedImages), len(poses)))
    images = [as_image_tensor(im) for im in [refImage] + list(pairedImages)]
    H, W = images[0].shape[2:]
    for im in images[1:]:
        if im.shape != images[0].shape:
            raise ValueError('All views must share one image size.')
    batch = T.concatenate(images, axis=0)
    features = extract_features(batch, params, config)
    refFeatures = features[0]
    Hf, Wf = refFeatures.shape[2:]
    Kf = geometry.scale_intrinsics(K, float(Wf) / W, float(Hf) / H)
    planes = config.planes()
    grids = [geometry.compute_warp_grid(Kf, pose, planes, Wf, Hf) for pose in poses]
    raws, counts = build_cost_volume(refFeatures,
                                     [features[i] for i in range(1, len(images))],
                                     grids, config.costVariant)
    initial = regularize_cost_volume(raws, params, config)
    if config.aggregation:
        refined, residual = aggregate_cost(initial, refFeatures, params, config)
    else:
        refined, residual = initial, None

    if config.upsampleCost:
        initialDepth, _, initialProb = regress_depth(
            _to_output_size(initial, H, W), planes)
        if refined is initial:
            refinedDepth, prob = initialDepth, initialProb
        else:
            refinedDepth, _, prob = regress_depth(_to_output_size(refined, H, W),
                                                  planes)
    else:
        initialDepth, _, initialProb = regress_depth(initial, planes)
        initialDepth = DepthMap(_to_output_size(
            initialDepth.depth.reshape(1, 1, Hf, Wf), H, W).reshape(1, H, W))
        if refined is initial:
            refinedDepth, prob = initialDepth, initialProb
        else:
            refinedDepth, _, prob = regress_depth(refined, planes)
            refinedDepth = DepthMap(_to_output_size(
                refinedDepth.depth.reshape(1, 1, Hf, Wf), H, W).reshape(1, H, W))

    initialDepth = DepthMap(initialDepth.depth.reshape(H, W))
    refinedDepth = DepthMap(refinedDepth.depth.reshape(H, W))
    log.debug('Forward pass: {0} paired view(s), features {1}x{2}, {3} '
              'labels'.format(len(poses), Wf, Hf, len(planes)))
    volume = CostVolume(raws, counts, initial, refined, residual=residual,
                        prob=prob, initialProb=initialProb)
    return initialDepth, refinedDepth, volume
