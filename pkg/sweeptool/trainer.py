# -*- coding: utf-8 -*-
#
# This module defines the training loss, the ADAM optimizer and the training
# loop for the depth network.
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
from astropy.table import Table

from . import geometry
from . import network
from . import tensor as T
from .tensor import Tensor

log = logging.getLogger('SweepTool.TRAIN')

DEFAULT_LAMBDA = 0.7
DEFAULT_LEARNING_RATE = 2e-4
DEFAULT_BATCH_SIZE = 2


class LossReport(object):
    """
    The two-term training loss of one forward pass.

    Attributes
    ----------
    total : Tensor
        lam * initial + refined (scalar, differentiable)
    initial : Tensor
        Masked-mean Huber loss of the initial depth map
    refined : Tensor
        Masked-mean Huber loss of the refined depth map
    lam : float
        Weight of the initial term

    """
    def __init__(self, total, initial, refined, lam):
        self.total = total
        self.initial = initial
        self.refined = refined
        self.lam = lam

    def asTuple(self):
        """
        Returns (total, initial, refined) as floats.
        """
        return (self.total.item(), self.initial.item(), self.refined.item())

    def __repr__(self):
        return 'LossReport(total={0:.6g}, initial={1:.6g}, refined={2:.6g}, ' \
            'lam={3})'.format(self.total.item(), self.initial.item(),
                              self.refined.item(), self.lam)


class AdamState(object):
    """
    First and second moments of every parameter plus the step counter.
    """
    def __init__(self, params, learningRate=DEFAULT_LEARNING_RATE, beta1=0.9,
                 beta2=0.999, eps=1e-8):
        if learningRate <= 0:
            raise ValueError('Learning rate must be positive (got '
                             '{0}).'.format(learningRate))
        self.lr = float(learningRate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = OrderedDict((name, np.zeros(p.shape)) for name, p in params.items())
        self.v = OrderedDict((name, np.zeros(p.shape)) for name, p in params.items())


def supervision_mask(gt, config):
    """
    Returns the pixels of gt usable for supervision.

    Pixels outside [dMin, L dMin] (inverse mode) or [dMin, dMax] (uniform mode)
    are excluded.
    """
    values = gt.values
    dMax = config.L * config.dMin if config.samplingMode == geometry.INVERSE \
        else config.dMax
    with np.errstate(invalid='ignore'):
        return gt.valid & (values >= config.dMin) & (values <= dMax)


def _depth_tensor(depth):
    if isinstance(depth, network.DepthMap):
        depth = depth.depth
    if isinstance(depth, Tensor):
        return depth
    return Tensor(np.asarray(depth, dtype=float))


def compute_loss(initialDepth, refinedDepth, gt, lam=DEFAULT_LAMBDA, mask=None):
    """
    Computes lam * |d_initial - d_gt|_H + |d_refined - d_gt|_H.

    Parameters
    ----------
    initialDepth : DepthMap
        Depth from the initial cost volume
    refinedDepth : DepthMap
        Depth from the refined cost volume
    gt : DepthMap
        Ground truth
    lam : float, optional
        Weight of the initial term
    mask : array, optional
        Pixels to supervise (default: gt.valid)

    Returns
    -------
    report : LossReport

    """
    pred0 = _depth_tensor(initialDepth)
    pred1 = _depth_tensor(refinedDepth)
    if pred0.shape != gt.shape or pred1.shape != gt.shape:
        raise ValueError('Depth maps of shape {0} and {1} do not match the ground '
                         'truth shape {2}.'.format(pred0.shape, pred1.shape,
                                                   gt.shape))
    if mask is None:
        mask = gt.valid
    target = gt.asArray()
    initialTerm = T.huber(pred0, target, mask)
    refinedTerm = T.huber(pred1, target, mask)
    total = initialTerm * lam + refinedTerm
    return LossReport(total, initialTerm, refinedTerm, lam)


def adam_step(params, grads, state):
    """
    Applies one bias-corrected ADAM update.

    Parameters
    ----------
    params : dict
        Parameter name -> Tensor
    grads : dict or None
        Parameter name -> gradient array. If None, the .grad of every
        parameter is used
    state : AdamState
        Optimizer state (updated in place)

    Returns
    -------
    params : OrderedDict
        New parameter tensors (requiresGrad=True, no gradient)

    """
    if grads is None:
        grads = OrderedDict((name, p.grad) for name, p in params.items())
    for name in params:
        if grads.get(name) is None:
            raise RuntimeError("Parameter '{0}' has no gradient. Run backward() "
                               "before the optimizer step.".format(name))
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.t
    correction2 = 1.0 - b2**state.t
    updated = OrderedDict()
    for name, p in params.items():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        mHat = state.m[name] / correction1
        vHat = state.v[name] / correction2
        values = p.values - state.lr * mHat / (np.sqrt(vHat) + state.eps)
        updated[name] = Tensor(values, requiresGrad=True)
    return updated


def gradient_norms(params):
    """
    Returns the L2 norm of the gradient of every parameter (0 if missing).
    """
    norms = OrderedDict()
    for name, p in params.items():
        norms[name] = 0.0 if p.grad is None else float(np.sqrt(np.sum(p.grad**2)))
    return norms


def smooth_losses(losses, window=20):
    """
    Trailing moving average of a loss sequence.

    The first window-1 entries average over the available history.
    """
    losses = np.asarray(losses, dtype=float)
    if len(losses) == 0:
        return losses
    if window < 1:
        raise ValueError('Smoothing window must be at least 1.')
    csum = np.concatenate([[0.0], np.cumsum(losses)])
    idx = np.arange(1, len(losses) + 1)
    start = np.maximum(idx - window, 0)
    return (csum[idx] - csum[start]) / (idx - start)


def forward_scene(scene, params, config, viewIndices=None):
    """
    Runs the network on a scene.

    Parameters
    ----------
    scene : SyntheticScene
        Scene with reference image, paired images and cameras
    params : dict
        Network parameters
    config : NetworkConfig
        Network configuration
    viewIndices : list of int, optional
        Indices (0-based) of the paired views to use; all by default

    Returns
    -------
    initialDepth, refinedDepth, volume
        As returned by network.forward()

    """
    paired = scene.pairedImages
    poses = scene.pairedPoses
    if viewIndices is None:
        viewIndices = range(len(paired))
    viewIndices = list(viewIndices)
    for i in viewIndices:
        if i < 0 or i >= len(paired):
            raise ValueError('Scene has {0} paired views; view index {1} is out '
                             'of range.'.format(len(paired), i))
    return network.forward(scene.referenceImage, [paired[i] for i in viewIndices],
                           scene.intrinsics, [poses[i] for i in viewIndices],
                           params, config)


def scene_loss(scene, params, config, lam=DEFAULT_LAMBDA, viewIndices=None):
    """
    Loss of one scene, supervised where the ground truth is within range.
    """
    initialDepth, refinedDepth, volume = forward_scene(scene, params, config,
                                                       viewIndices)
    mask = supervision_mask(scene.depth, config)
    return compute_loss(initialDepth, refinedDepth, scene.depth, lam, mask)


def copy_params(params):
    return OrderedDict((name, Tensor(p.values, requiresGrad=True))
                       for name, p in params.items())


def _step_gradients(params, config):
    """
    Collects the gradients of one training step.

    Only the context network of a configuration without aggregation may lack a
    gradient; it gets zeros, which leaves it unchanged under ADAM. Any other
    missing gradient is passed on so that adam_step() rejects it.
    """
    grads = OrderedDict()
    for name, p in params.items():
        if (p.grad is None and not config.aggregation and
                name.startswith('aggregate.')):
            grads[name] = np.zeros(p.shape)
        else:
            grads[name] = p.grad
    return grads


def train(scenes, config, steps, seed=0, batchSize=DEFAULT_BATCH_SIZE,
          learningRate=DEFAULT_LEARNING_RATE, lam=DEFAULT_LAMBDA, params=None,
          viewsPerSample=1, logInterval=10, checkedMode=True):
    """
    Trains the network end to end with ADAM.

    Every step draws batchSize scenes, and for each scene viewsPerSample
    paired views, using a generator seeded by seed. The batch loss is the mean
    of the per-scene losses.

    Parameters
    ----------
    scenes : list of SyntheticScene
        Training set
    config : NetworkConfig
        Network configuration
    steps : int
        Number of optimizer steps
    seed : int, optional
        Seed for initialization and sampling
    batchSize : int, optional
        Scenes per step
    learningRate : float, optional
        ADAM learning rate
    lam : float, optional
        Weight of the initial-depth loss term
    params : dict, optional
        Starting parameters (default: init_params(config, seed))
    viewsPerSample : int, optional
        Paired views per training sample
    logInterval : int, optional
        Steps between INFO log lines
    checkedMode : bool, optional
        If True, any non-finite value aborts training naming the operation

    Returns
    -------
    params : OrderedDict
        Trained parameters
    curve : astropy.table.Table
        Columns step, loss, initial, refined

    """
    if len(scenes) == 0:
        raise ValueError('The training set is empty.')
    if steps < 0:
        raise ValueError('Number of steps must be non-negative (got '
                         '{0}).'.format(steps))
    if batchSize < 1:
        raise ValueError('Batch size must be at least 1.')
    rng = np.random.default_rng(seed)
    if params is None:
        params = network.init_params(config, seed)
    else:
        params = copy_params(params)
    state = AdamState(params, learningRate)
    curve = Table(names=('step', 'loss', 'initial', 'refined'),
                  dtype=('i8', 'f8', 'f8', 'f8'))

    previous = T.isCheckedMode()
    T.setCheckedMode(checkedMode)
    try:
        for step in range(1, steps + 1):
            reports = []
            for b in range(batchSize):
                scene = scenes[int(rng.integers(len(scenes)))]
                nPaired = len(scene.pairedImages)
                nViews = min(viewsPerSample, nPaired)
                views = sorted(rng.choice(nPaired, size=nViews, replace=False))
                reports.append(scene_loss(scene, params, config, lam, views))
            total = reports[0].total
            for r in reports[1:]:
                total = total + r.total
            total = total * (1.0 / len(reports))
            if not np.isfinite(total.item()):
                raise FloatingPointError('Non-finite loss at step {0}.'.format(step))
            total.backward()
            initialTerm = np.mean([r.initial.item() for r in reports])
            refinedTerm = np.mean([r.refined.item() for r in reports])
            curve.add_row((step, total.item(), initialTerm, refinedTerm))
            if logInterval and (step % logInterval == 0 or step == 1):
                log.info('Step {0}/{1}: loss = {2:.5f} (initial {3:.5f}, refined '
                         '{4:.5f})'.format(step, steps, total.item(), initialTerm,
                                           refinedTerm))
            else:
                log.debug('Step {0}: loss = {1:.5f}'.format(step, total.item()))
            params = adam_step(params, _step_gradients(params, config), state)
    finally:
        T.setCheckedMode(previous)
    return params, curve
